//! The four design criteria behind one interface.

use core::fmt;

use crate::constellation::{AmbientGradientSet, Constellation};
use crate::error::Result;
use crate::fulldiv;
use crate::proxy::{self, ProxyKind};

/// Something the optimizer can descend.
pub trait CostFunction {
    fn value(&self, c: &Constellation) -> Result<f64>;

    /// Value and ambient gradient at `c`.
    fn value_and_gradient(&self, c: &Constellation) -> Result<(f64, AmbientGradientSet)>;
}

impl<F: CostFunction + ?Sized> CostFunction for &F {
    fn value(&self, c: &Constellation) -> Result<f64> {
        (**self).value(c)
    }

    fn value_and_gradient(&self, c: &Constellation) -> Result<(f64, AmbientGradientSet)> {
        (**self).value_and_gradient(c)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CostKind {
    /// Sum of one-error asymptotic PEP terms.
    PepUb,
    /// Largest one-error PEP term.
    MinmaxPep,
    /// Log-sum-exp union bound of the smoothed β proxy.
    BetaUb,
    /// Log-sum-exp union bound of the δ proxy.
    DeltaUb,
}

impl CostKind {
    pub const ALL: [CostKind; 4] = [
        CostKind::PepUb,
        CostKind::MinmaxPep,
        CostKind::BetaUb,
        CostKind::DeltaUb,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            CostKind::PepUb => "pep_ub",
            CostKind::MinmaxPep => "minmax_pep",
            CostKind::BetaUb => "beta_ub",
            CostKind::DeltaUb => "delta_ub",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }

    /// Needs `T ≥ (K+1)M`.
    pub fn requires_full_diversity(&self) -> bool {
        matches!(self, CostKind::PepUb | CostKind::MinmaxPep)
    }
}

impl fmt::Display for CostKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A cost kind bound to a receiver size and, for β, a smoothing exponent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cost {
    pub kind: CostKind,
    pub n_rx: usize,
    pub epsilon: f64,
}

impl Cost {
    pub fn new(kind: CostKind, n_rx: usize) -> Self {
        Self {
            kind,
            n_rx,
            epsilon: proxy::DEFAULT_BETA_EPSILON,
        }
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    fn proxy_kind(&self) -> Option<ProxyKind> {
        match self.kind {
            CostKind::BetaUb => Some(ProxyKind::Beta {
                epsilon: self.epsilon,
            }),
            CostKind::DeltaUb => Some(ProxyKind::Delta),
            _ => None,
        }
    }
}

impl CostFunction for Cost {
    fn value(&self, c: &Constellation) -> Result<f64> {
        match self.kind {
            CostKind::PepUb => fulldiv::pep_ub_cost(c, self.n_rx),
            CostKind::MinmaxPep => fulldiv::minmax_pep_objective(c, self.n_rx).map(|(v, _)| v),
            _ => proxy::proxy_ub_cost(c, self.n_rx, self.proxy_kind().unwrap()),
        }
    }

    fn value_and_gradient(&self, c: &Constellation) -> Result<(f64, AmbientGradientSet)> {
        match self.kind {
            CostKind::PepUb => {
                let e = fulldiv::pep_ub_evaluate(c, self.n_rx, true)?;
                Ok((e.value, e.gradient.expect("gradient requested")))
            }
            CostKind::MinmaxPep => {
                let (v, _, g) = fulldiv::minmax_pep_evaluate(c, self.n_rx)?;
                Ok((v, g))
            }
            _ => {
                let e = proxy::proxy_ub_evaluate(c, self.n_rx, self.proxy_kind().unwrap(), true)?;
                Ok((e.value, e.gradient.expect("gradient requested")))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifolds::{random_constellation, ManifoldKind};
    use crate::rng::seeded;

    #[test]
    fn names_round_trip() {
        for k in CostKind::ALL {
            assert_eq!(CostKind::from_name(k.name()), Some(k));
        }
        assert_eq!(CostKind::from_name("chordal"), None);
    }

    #[test]
    fn value_agrees_with_value_and_gradient() {
        let mut rng = seeded(2);
        let c = random_constellation(ManifoldKind::Grassmann, 3, 1, &[2, 2], &mut rng).unwrap();
        for kind in CostKind::ALL {
            let cost = Cost::new(kind, 2);
            let v = cost.value(&c).unwrap();
            let (w, g) = cost.value_and_gradient(&c).unwrap();
            assert_eq!(v, w, "{kind}");
            assert!(g.norm() > 0.0);
        }
    }
}
