//! Central finite differences for checking analytic ambient gradients.
//!
//! Entry `(a, b)` of codeword `X` gets
//! `[f(X+hE_ab) − f(X−hE_ab)]/2h + i·[f(X+ihE_ab) − f(X−ihE_ab)]/2h`,
//! with perturbations applied in the ambient space (no re-normalization).

use alloc::vec::Vec;


use crate::constellation::{AmbientGradientSet, Constellation};
use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::manifolds::{project_tangent, ManifoldKind};

/// Finite-difference step rule.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Step {
    /// The same `h` for every entry.
    Absolute(f64),
    /// `h = max(relative·|x|, floor)` for entry `x`.
    Relative { relative: f64, floor: f64 },
}

impl Step {
    pub const DEFAULT: Step = Step::Relative {
        relative: 1e-6,
        floor: 1e-7,
    };

    pub fn at(&self, x: C64) -> f64 {
        match *self {
            Step::Absolute(h) => h,
            Step::Relative { relative, floor } => (relative * x.norm()).max(floor),
        }
    }
}

/// Shorthand for [`Step::DEFAULT`].
pub const DEFAULT_STEP: Step = Step::DEFAULT;

/// Numeric ambient gradient of `cost` at `c`.
///
/// An entry whose perturbed evaluations fail or are not finite is NaN.
pub fn fd_gradient<F>(cost: F, c: &Constellation, step: Step) -> AmbientGradientSet
where
    F: Fn(&Constellation) -> Result<f64>,
{
    let mut grad = c.zero_blocks();
    let mut work = c.clone().into_blocks();
    let (t, m) = (c.t(), c.m());
    for k in 0..c.num_users() {
        for i in 0..c.codebook(k).len() {
            for col in 0..m {
                for row in 0..t {
                    let x0 = c.codeword(k, i)[(row, col)];
                    let h = step.at(x0);
                    let mut eval = |delta: C64| -> f64 {
                        work.get_mut(k, i)[(row, col)] = x0 + delta;
                        let v = Constellation::from_blocks(t, m, work.clone())
                            .and_then(|p| cost(&p))
                            .unwrap_or(f64::NAN);
                        work.get_mut(k, i)[(row, col)] = x0;
                        if v.is_finite() {
                            v
                        } else {
                            f64::NAN
                        }
                    };
                    let re = (eval(C64::new(h, 0.0)) - eval(C64::new(-h, 0.0))) / (2.0 * h);
                    let im = (eval(C64::new(0.0, h)) - eval(C64::new(0.0, -h))) / (2.0 * h);
                    grad.get_mut(k, i)[(row, col)] = C64::new(re, im);
                }
            }
        }
    }
    grad
}

/// Error figures for one codeword.
#[derive(Clone, Debug, PartialEq)]
pub struct CodewordError {
    pub user: usize,
    pub index: usize,
    pub max_abs: f64,
    pub max_rel: f64,
}

/// Worst entry of a comparison: `(user, index, row, col)` and its error.
#[derive(Clone, Debug, PartialEq)]
pub struct WorstEntry {
    pub user: usize,
    pub index: usize,
    pub row: usize,
    pub col: usize,
    pub abs_error: f64,
}

/// Ambient and projected comparison of an analytic and a numeric gradient.
///
/// Relative errors divide by `max(‖numeric‖_∞, 1e-12)`, the largest entry
/// of the numeric set being compared.
#[derive(Clone, Debug, PartialEq)]
pub struct FdReport {
    pub ambient: Vec<CodewordError>,
    pub projected: Vec<CodewordError>,
    pub ambient_worst: Option<WorstEntry>,
    pub projected_worst: Option<WorstEntry>,
    /// NaN entries in the numeric gradient.
    pub invalid_entries: usize,
    pub step: Step,
}

impl FdReport {
    pub fn max_abs(&self) -> f64 {
        max_of(&self.ambient, |e| e.max_abs)
    }

    pub fn max_rel(&self) -> f64 {
        max_of(&self.ambient, |e| e.max_rel)
    }

    pub fn projected_max_abs(&self) -> f64 {
        max_of(&self.projected, |e| e.max_abs)
    }

    /// The authoritative pass/fail figure.
    pub fn projected_max_rel(&self) -> f64 {
        max_of(&self.projected, |e| e.max_rel)
    }

    pub fn is_valid(&self) -> bool {
        self.invalid_entries == 0
    }
}

fn max_of(v: &[CodewordError], f: impl Fn(&CodewordError) -> f64) -> f64 {
    v.iter().map(f).fold(0.0, f64::max)
}

fn entry_errors(
    analytic: &AmbientGradientSet,
    numeric: &AmbientGradientSet,
) -> (Vec<CodewordError>, Option<WorstEntry>) {
    let denom = numeric.max_abs().max(1e-12);
    let mut worst: Option<WorstEntry> = None;
    let per = analytic
        .iter()
        .zip(numeric.iter())
        .map(|((k, i, a), (_, _, n))| {
            let mut max_abs = 0.0_f64;
            for col in 0..a.cols() {
                for row in 0..a.rows() {
                    let e = (a[(row, col)] - n[(row, col)]).norm();
                    if e.is_nan() {
                        continue;
                    }
                    max_abs = max_abs.max(e);
                    if worst.as_ref().map_or(true, |w| e > w.abs_error) {
                        worst = Some(WorstEntry {
                            user: k,
                            index: i,
                            row,
                            col,
                            abs_error: e,
                        });
                    }
                }
            }
            CodewordError {
                user: k,
                index: i,
                max_abs,
                max_rel: max_abs / denom,
            }
        })
        .collect();
    (per, worst)
}

/// Compares both sets as given and after projection onto the tangent space
/// of `kind` at `base`.
pub fn compare(
    analytic: &AmbientGradientSet,
    numeric: &AmbientGradientSet,
    kind: ManifoldKind,
    base: &Constellation,
    step: Step,
) -> Result<FdReport> {
    if !analytic.same_shape(numeric) {
        return Err(Error::ShapeMismatch("gradient sets differ in shape"));
    }
    let invalid_entries = numeric
        .iter()
        .map(|(_, _, b)| b.as_slice().iter().filter(|z| z.re.is_nan() || z.im.is_nan()).count())
        .sum();
    let (ambient, ambient_worst) = entry_errors(analytic, numeric);
    let pa = project_tangent(kind, base, analytic)?;
    let pn = project_tangent(kind, base, numeric)?;
    let (projected, projected_worst) = entry_errors(&pa, &pn);
    Ok(FdReport {
        ambient,
        projected,
        ambient_worst,
        projected_worst,
        invalid_entries,
        step,
    })
}

/// Finite differences of `cost` compared with `analytic` at `c`.
pub fn check<F>(
    cost: F,
    analytic: &AmbientGradientSet,
    kind: ManifoldKind,
    c: &Constellation,
    step: Step,
) -> Result<FdReport>
where
    F: Fn(&Constellation) -> Result<f64>,
{
    let numeric = fd_gradient(cost, c, step);
    compare(analytic, &numeric, kind, c, step)
}
