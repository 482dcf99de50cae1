//! Read-only metric report of a constellation.

use std::fmt::Write as _;

use ncmac_core::fulldiv::{self, check_full_diversity};
use ncmac_core::manifolds::constraint_residual;
use ncmac_core::proxy::{j_half_pair, proxy_ub_evaluate, ProxyKind};
use ncmac_core::{Constellation, ManifoldKind};

use crate::file::Header;
use crate::CliError;

/// Slack allowed in the pairwise `√T·δ ≥ β ≥ δ` check.
pub const BOUND_SLACK: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct BoundCheck {
    pub pairs: usize,
    pub violations: usize,
    /// Smallest of `√T·δ − β` and `β − δ` over all pairs.
    pub worst_margin: f64,
}

impl BoundCheck {
    pub fn holds(&self) -> bool {
        self.violations == 0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub residuals: Vec<(ManifoldKind, f64)>,
    /// `None` when `T < (K+1)M`.
    pub pep_ub: Option<f64>,
    pub minmax_pep: Option<(f64, String)>,
    pub beta_ub: f64,
    pub delta_ub: f64,
    pub epsilon: f64,
    pub min_beta: f64,
    pub min_delta: f64,
    pub min_j_half: f64,
    pub bounds: BoundCheck,
}

pub fn evaluate(c: &Constellation, n_rx: usize, epsilon: f64) -> Result<Report, CliError> {
    let residuals = [ManifoldKind::Grassmann, ManifoldKind::Oblique, ManifoldKind::TRACE]
        .into_iter()
        .map(|k| (k, constraint_residual(k, c)))
        .collect();

    let (pep_ub, minmax_pep) = if check_full_diversity(c).is_ok() {
        let pep = fulldiv::pep_ub_cost(c, n_rx)?;
        let minmax = match fulldiv::minmax_pep_objective(c, n_rx) {
            Ok((v, p)) => Some((
                v,
                format!(
                    "user {} codeword {} -> {}, others at {:?}",
                    p.user + 1,
                    p.transmitted + 1,
                    p.detected + 1,
                    p.common().iter().map(|i| i + 1).collect::<Vec<_>>()
                ),
            )),
            Err(_) => None,
        };
        (Some(pep), minmax)
    } else {
        (None, None)
    };

    let beta_ub = proxy_ub_evaluate(c, n_rx, ProxyKind::Beta { epsilon }, false)?.value;
    let plain_beta = proxy_ub_evaluate(c, n_rx, ProxyKind::Beta { epsilon: 0.0 }, false)?;
    let delta = proxy_ub_evaluate(c, n_rx, ProxyKind::Delta, false)?;

    let root_t = (c.t() as f64).sqrt();
    let mut bounds = BoundCheck {
        pairs: 0,
        violations: 0,
        worst_margin: f64::INFINITY,
    };
    let (mut min_beta, mut min_delta) = (f64::INFINITY, f64::INFINITY);
    for (&(_, _, b), &(_, _, d)) in plain_beta.pair_values.iter().zip(&delta.pair_values) {
        min_beta = min_beta.min(b);
        min_delta = min_delta.min(d);
        let margin = (root_t * d - b).min(b - d);
        bounds.pairs += 1;
        bounds.worst_margin = bounds.worst_margin.min(margin);
        if margin < -BOUND_SLACK {
            bounds.violations += 1;
        }
    }

    let joint = c.all_joint();
    let mut min_j_half = f64::INFINITY;
    for i in 0..joint.len() {
        for j in i + 1..joint.len() {
            min_j_half = min_j_half.min(j_half_pair(&joint[i], &joint[j])?);
        }
    }

    Ok(Report {
        residuals,
        pep_ub,
        minmax_pep,
        beta_ub,
        delta_ub: delta.value,
        epsilon,
        min_beta,
        min_delta,
        min_j_half,
        bounds,
    })
}

fn num(x: f64) -> String {
    format!("{x:.12e}")
}

/// Fixed-format text: identical inputs give identical bytes.
pub fn render(header: &Header, n_rx: usize, r: &Report) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "constellation  T={} M={} K={} L={:?} manifold={} cost={} seed={}",
        header.t, header.m, header.k, header.sizes, header.manifold, header.cost, header.seed
    );
    let _ = writeln!(s, "receive antennas N={n_rx}");
    for (k, v) in &r.residuals {
        let _ = writeln!(s, "residual {:<10} {}", k.name(), num(*v));
    }
    match r.pep_ub {
        Some(v) => {
            let _ = writeln!(s, "pep_ub         {}", num(v));
        }
        None => {
            let _ = writeln!(s, "pep_ub         n/a (needs T >= (K+1)M)");
        }
    }
    match &r.minmax_pep {
        Some((v, pair)) => {
            let _ = writeln!(s, "minmax_pep     {}  ({pair})", num(*v));
        }
        None => {
            let _ = writeln!(s, "minmax_pep     n/a");
        }
    }
    let _ = writeln!(s, "beta_ub        {}  (epsilon {})", num(r.beta_ub), r.epsilon);
    let _ = writeln!(s, "delta_ub       {}", num(r.delta_ub));
    let _ = writeln!(s, "min pair beta  {}", num(r.min_beta));
    let _ = writeln!(s, "min pair delta {}", num(r.min_delta));
    let _ = writeln!(s, "min pair J1/2  {}", num(r.min_j_half));
    let _ = writeln!(
        s,
        "bound sqrt(T)*delta >= beta >= delta: {} on {} pairs ({} violations, worst margin {})",
        if r.bounds.holds() { "holds" } else { "VIOLATED" },
        r.bounds.pairs,
        r.bounds.violations,
        num(r.bounds.worst_margin)
    );
    s
}
