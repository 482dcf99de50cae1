//! Riemannian steepest descent with backtracking.
//!
//! Each iteration projects the ambient gradient onto the tangent space,
//! normalizes it by the norm of the full (all-codeword) gradient and tries
//! `retract(X, −h·∇f/‖∇f‖)`, halving `h` until the cost improves. After an
//! accepted step `h` doubles, capped at `h₀`.

use alloc::vec::Vec;


use crate::constellation::{BlockSet, Constellation};
use crate::cost::CostFunction;
use crate::error::{Error, Result};
use crate::manifolds::{project_tangent, random_constellation, retract, ManifoldKind};
use crate::rng::substream;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OptimizerConfig {
    pub step0: f64,
    pub shrink: f64,
    pub max_iter: usize,
    pub max_trials: usize,
    /// Stop once `(f_old − f_new)/|f_old|` falls below this.
    pub rel_tol: f64,
    /// Stop once `h` falls below this.
    pub step_tol: f64,
    pub seed: u64,
    pub restarts: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            step0: 0.1,
            shrink: 0.5,
            max_iter: 2000,
            max_trials: 30,
            rel_tol: 1e-9,
            step_tol: 1e-12,
            seed: 0,
            restarts: 1,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidConfig(alloc::format!("optimizer: {what}")));
        if !(self.step0 > 0.0 && self.step0.is_finite()) {
            return bad("step0 must be positive");
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return bad("shrink must lie in (0, 1)");
        }
        if self.max_iter == 0 || self.max_trials == 0 || self.restarts == 0 {
            return bad("iteration, trial and restart counts must be at least 1");
        }
        if !(self.rel_tol >= 0.0 && self.step_tol >= 0.0) {
            return bad("thresholds must be nonnegative");
        }
        Ok(())
    }
}

/// One row per accepted iterate; row 0 is the starting point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub cost: f64,
    /// Step size that produced this iterate (0 for the start).
    pub step: f64,
    /// Norm of the projected gradient at this iterate.
    pub grad_norm: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Termination {
    /// Projected gradient vanished.
    ZeroGradient,
    /// Relative cost improvement fell below `rel_tol`.
    Converged,
    /// `h` fell below `step_tol` without an improving trial.
    StepUnderflow,
    /// `max_trials` trials without improvement.
    LineSearchExhausted,
    MaxIterations,
}

impl Termination {
    pub fn name(&self) -> &'static str {
        match self {
            Termination::ZeroGradient => "zero-gradient",
            Termination::Converged => "converged",
            Termination::StepUnderflow => "step-underflow",
            Termination::LineSearchExhausted => "line-search-exhausted",
            Termination::MaxIterations => "max-iterations",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DescentTrace {
    pub rows: Vec<TraceRow>,
    pub constellation: Constellation,
    pub termination: Termination,
}

impl DescentTrace {
    pub fn initial_cost(&self) -> f64 {
        self.rows[0].cost
    }

    pub fn final_cost(&self) -> f64 {
        self.rows.last().expect("trace has a starting row").cost
    }

    /// Accepted iterations (rows after the start).
    pub fn iterations(&self) -> usize {
        self.rows.len() - 1
    }
}

/// `√(Σ_k Σ_i ‖G_{k,i}‖_F²)`.
pub fn grad_norm(g: &BlockSet) -> f64 {
    g.norm()
}

/// Runs the descent from `c0`.
pub fn descend<C: CostFunction>(
    c0: &Constellation,
    cost: &C,
    kind: ManifoldKind,
    cfg: &OptimizerConfig,
) -> Result<DescentTrace> {
    descend_with(c0, cost, kind, cfg, |_, _| {})
}

/// [`descend`], calling `observe` on every accepted iterate (the start
/// included).
pub fn descend_with<C, O>(
    c0: &Constellation,
    cost: &C,
    kind: ManifoldKind,
    cfg: &OptimizerConfig,
    mut observe: O,
) -> Result<DescentTrace>
where
    C: CostFunction,
    O: FnMut(&TraceRow, &Constellation),
{
    cfg.validate()?;
    let mut c = c0.clone();
    let (mut f, ambient) = cost.value_and_gradient(&c)?;
    let mut grad = project_tangent(kind, &c, &ambient)?;
    let mut gn = grad_norm(&grad);
    let mut rows = Vec::new();
    let start = TraceRow {
        iteration: 0,
        cost: f,
        step: 0.0,
        grad_norm: gn,
    };
    observe(&start, &c);
    rows.push(start);
    let mut h = cfg.step0;

    let termination = 'outer: loop {
        if rows.len() > cfg.max_iter {
            break Termination::MaxIterations;
        }
        if !(gn > 0.0) || !gn.is_finite() {
            break Termination::ZeroGradient;
        }
        let dir = grad.scale(-1.0 / gn);
        let mut trials = 0;
        let accepted = loop {
            if trials == cfg.max_trials {
                break 'outer Termination::LineSearchExhausted;
            }
            if h < cfg.step_tol {
                break 'outer Termination::StepUnderflow;
            }
            trials += 1;
            let outcome = retract(kind, &c, &dir.scale(h)).and_then(|trial| {
                let (ft, gt) = cost.value_and_gradient(&trial)?;
                Ok((trial, ft, gt))
            });
            match outcome {
                Ok((trial, ft, gt)) if ft < f => break (trial, ft, gt),
                _ => h *= cfg.shrink,
            }
        };
        let (trial, ft, ambient) = accepted;
        let improvement = (f - ft) / f.abs().max(f64::MIN_POSITIVE);
        grad = project_tangent(kind, &trial, &ambient)?;
        gn = grad_norm(&grad);
        c = trial;
        f = ft;
        let row = TraceRow {
            iteration: rows.len(),
            cost: f,
            step: h,
            grad_norm: gn,
        };
        observe(&row, &c);
        rows.push(row);
        h = (2.0 * h).min(cfg.step0);
        if improvement < cfg.rel_tol {
            break Termination::Converged;
        }
    };

    Ok(DescentTrace {
        rows,
        constellation: c,
        termination,
    })
}

/// Outcome of a multi-start design.
#[derive(Clone, Debug, PartialEq)]
pub struct Design {
    pub best: DescentTrace,
    /// Index of the winning restart.
    pub best_restart: usize,
    /// `(initial cost, final cost, termination)` per restart.
    pub restarts: Vec<(f64, f64, Termination)>,
}

/// Random start for restart `r`: drawn from the stream `r` of `seed`.
pub fn initial_constellation(
    kind: ManifoldKind,
    t: usize,
    m: usize,
    sizes: &[usize],
    seed: u64,
    restart: usize,
) -> Result<Constellation> {
    let mut rng = substream(seed, restart as u64);
    random_constellation(kind, t, m, sizes, &mut rng)
}

/// Best of `cfg.restarts` descents from independent random starts. Ties go
/// to the earliest restart.
pub fn design<C: CostFunction>(
    cost: &C,
    kind: ManifoldKind,
    t: usize,
    m: usize,
    sizes: &[usize],
    cfg: &OptimizerConfig,
) -> Result<Design> {
    cfg.validate()?;
    let mut best: Option<(usize, DescentTrace)> = None;
    let mut summary = Vec::with_capacity(cfg.restarts);
    for r in 0..cfg.restarts {
        let c0 = initial_constellation(kind, t, m, sizes, cfg.seed, r)?;
        let trace = descend(&c0, cost, kind, cfg)?;
        summary.push((trace.initial_cost(), trace.final_cost(), trace.termination));
        if best
            .as_ref()
            .map_or(true, |(_, b)| trace.final_cost() < b.final_cost())
        {
            best = Some((r, trace));
        }
    }
    let (best_restart, best) = best.expect("at least one restart");
    Ok(Design {
        best,
        best_restart,
        restarts: summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constellation::AmbientGradientSet;
    use crate::cost::{Cost, CostKind};
    use crate::linalg::{CMat, C64};
    use crate::manifolds::constraint_residual;
    use alloc::vec;

    struct Quadratic {
        target: CMat,
    }

    impl CostFunction for Quadratic {
        fn value(&self, c: &Constellation) -> Result<f64> {
            Ok((c.codeword(0, 0) - &self.target).norm_sqr())
        }

        fn value_and_gradient(&self, c: &Constellation) -> Result<(f64, AmbientGradientSet)> {
            let d = c.codeword(0, 0) - &self.target;
            Ok((d.norm_sqr(), BlockSet::new(vec![vec![d.scale(2.0)]])))
        }
    }

    struct Flat;

    impl CostFunction for Flat {
        fn value(&self, _: &Constellation) -> Result<f64> {
            Ok(1.0)
        }

        fn value_and_gradient(&self, c: &Constellation) -> Result<(f64, AmbientGradientSet)> {
            Ok((1.0, c.zero_blocks()))
        }
    }

    #[test]
    fn grad_norm_examples() {
        let mut g = BlockSet::zeros(2, 1, &[2]);
        assert_eq!(grad_norm(&g), 0.0);
        g.get_mut(0, 0)[(0, 0)] = C64::new(3.0, 0.0);
        assert_eq!(grad_norm(&g), 3.0);
        g.get_mut(0, 1)[(1, 0)] = C64::new(0.0, 4.0);
        assert_eq!(grad_norm(&g), 5.0);
    }

    #[test]
    fn zero_gradient_stops_immediately() {
        let c = initial_constellation(ManifoldKind::Oblique, 3, 1, &[2], 1, 0).unwrap();
        let trace = descend(&c, &Flat, ManifoldKind::Oblique, &OptimizerConfig::default()).unwrap();
        assert_eq!(trace.rows.len(), 1);
        assert_eq!(trace.termination, Termination::ZeroGradient);
    }

    #[test]
    fn quadratic_on_the_sphere_reaches_the_projected_target() {
        let target = CMat::from_col_major(2, 1, vec![C64::new(0.3, -1.2), C64::new(0.5, 0.4)]).unwrap();
        let c0 = initial_constellation(ManifoldKind::Oblique, 2, 1, &[1], 5, 0).unwrap();
        let cfg = OptimizerConfig {
            rel_tol: 0.0,
            ..OptimizerConfig::default()
        };
        let trace = descend(&c0, &Quadratic { target: target.clone() }, ManifoldKind::Oblique, &cfg).unwrap();
        // minimizer of ‖x − p‖² on the unit sphere is p/‖p‖
        let opt = (target.norm() - 1.0).powi(2);
        assert!((trace.final_cost() - opt).abs() < 1e-8, "{}", trace.final_cost());
        let x = trace.constellation.codeword(0, 0);
        assert!((x - &target.scale(1.0 / target.norm())).norm() < 1e-4);
    }

    #[test]
    fn monotone_feasible_and_deterministic() {
        for kind in [ManifoldKind::Grassmann, ManifoldKind::Oblique, ManifoldKind::TRACE] {
            let cost = Cost::new(CostKind::DeltaUb, 2);
            let cfg = OptimizerConfig {
                max_iter: 40,
                ..OptimizerConfig::default()
            };
            let c0 = initial_constellation(kind, 4, 1, &[4, 4], 3, 0).unwrap();
            let mut worst = 0.0_f64;
            let trace = descend_with(&c0, &cost, kind, &cfg, |_, c| {
                worst = worst.max(constraint_residual(kind, c));
            })
            .unwrap();
            assert!(worst <= 1e-10, "{kind}: {worst}");
            assert!(trace.rows.windows(2).all(|w| w[1].cost < w[0].cost));
            assert!(trace.final_cost() < trace.initial_cost());
            let again = descend(&c0, &cost, kind, &cfg).unwrap();
            assert_eq!(trace, again);
        }
    }

    #[test]
    fn best_of_restarts_is_the_minimum() {
        let cost = Cost::new(CostKind::PepUb, 2);
        let cfg = OptimizerConfig {
            max_iter: 20,
            restarts: 3,
            seed: 9,
            ..OptimizerConfig::default()
        };
        let d = design(&cost, ManifoldKind::Grassmann, 3, 1, &[4, 4], &cfg).unwrap();
        let min = d.restarts.iter().map(|r| r.1).fold(f64::INFINITY, f64::min);
        assert_eq!(d.best.final_cost(), min);
        assert_eq!(d.restarts[d.best_restart].1, min);
    }

    #[test]
    fn invalid_config_is_rejected() {
        let bad = OptimizerConfig {
            shrink: 1.0,
            ..OptimizerConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = OptimizerConfig {
            restarts: 0,
            ..OptimizerConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
