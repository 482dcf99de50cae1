//! The three power-constraint manifolds a constellation can live on.
//!
//! * **Grassmann**: every codeword is a Stiefel matrix, `XᴴX = I_M`.
//!   Points are stored as Stiefel representatives; two codewords name the
//!   same point when their projectors `XXᴴ` agree.
//! * **Oblique**: every codeword, flattened, lies on the sphere of radius
//!   `√M`, i.e. `‖X‖_F² = M`.
//! * **Trace**: every user codebook, flattened and concatenated, lies on the
//!   sphere of radius `√(L_k M)`, i.e. the average codeword power is `M`.

use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;
use rand::Rng;

use crate::constellation::{check_dims, BlockSet, Constellation, TangentDirection};
use crate::error::{Error, Result};
use crate::linalg::{inner, qr_positive, CMat};
use crate::rng::complex_normal_matrix;

/// Power constraint governing projection and retraction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ManifoldKind {
    Grassmann,
    Oblique,
    /// Average per-user power. `sum_projector` selects the projector that
    /// removes the direction of `X_C = Σ_i X_{k,i}` instead of the
    /// sphere-tangent projector on the flattened codebook.
    Trace { sum_projector: bool },
}

impl ManifoldKind {
    pub const TRACE: ManifoldKind = ManifoldKind::Trace {
        sum_projector: false,
    };

    pub fn name(&self) -> &'static str {
        match self {
            ManifoldKind::Grassmann => "grassmann",
            ManifoldKind::Oblique => "oblique",
            ManifoldKind::Trace {
                sum_projector: false,
            } => "trace",
            ManifoldKind::Trace {
                sum_projector: true,
            } => "trace-sum",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "grassmann" => Some(ManifoldKind::Grassmann),
            "oblique" => Some(ManifoldKind::Oblique),
            "trace" => Some(ManifoldKind::TRACE),
            "trace-sum" => Some(ManifoldKind::Trace {
                sum_projector: true,
            }),
            _ => None,
        }
    }
}

impl core::fmt::Display for ManifoldKind {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.name())
    }
}

/// Draws one codeword on the manifold.
///
/// Grassmann draws are Haar-distributed (Q factor of a complex Gaussian
/// matrix); oblique and trace draws are Gaussian matrices scaled to
/// `‖X‖_F² = M`. The trace codebook rescaling happens in
/// [`random_constellation`].
pub fn random_codeword<R: Rng + ?Sized>(
    kind: ManifoldKind,
    t: usize,
    m: usize,
    rng: &mut R,
) -> Result<CMat> {
    check_dims(t, m)?;
    loop {
        let g = complex_normal_matrix(rng, t, m);
        match kind {
            ManifoldKind::Grassmann => match qr_positive(&g) {
                Ok((q, _)) => return Ok(q),
                Err(Error::RankDeficient) => continue,
                Err(e) => return Err(e),
            },
            ManifoldKind::Oblique | ManifoldKind::Trace { .. } => {
                let n = g.norm();
                if n > 0.0 {
                    return Ok(g.scale((m as f64).sqrt() / n));
                }
            }
        }
    }
}

/// Random constellation with `sizes[k]` codewords for user `k`.
pub fn random_constellation<R: Rng + ?Sized>(
    kind: ManifoldKind,
    t: usize,
    m: usize,
    sizes: &[usize],
    rng: &mut R,
) -> Result<Constellation> {
    let mut users = Vec::with_capacity(sizes.len());
    for &l in sizes {
        let mut book = (0..l)
            .map(|_| random_codeword(kind, t, m, rng))
            .collect::<Result<Vec<_>>>()?;
        if let ManifoldKind::Trace { .. } = kind {
            rescale_codebook(&mut book, m);
        }
        users.push(book);
    }
    Constellation::new(t, m, users)
}

fn rescale_codebook(book: &mut [CMat], m: usize) -> bool {
    let total: f64 = book.iter().map(CMat::norm_sqr).sum();
    if !(total > 0.0) || !total.is_finite() {
        return false;
    }
    let s = ((m * book.len()) as f64 / total).sqrt();
    book.iter_mut().for_each(|x| x.scale_mut(s));
    true
}

/// `Ż − Re⟨X,Ż⟩/⟨X,X⟩ · X`, the tangent projection onto a sphere through `X`.
fn sphere_tangent(x: &[&CMat], z: &[&CMat]) -> Vec<CMat> {
    let xx: f64 = x.iter().map(|b| b.norm_sqr()).sum();
    let xz: f64 = x.iter().zip(z).map(|(a, b)| inner(a, b).re).sum();
    let coef = if xx > 0.0 { xz / xx } else { 0.0 };
    x.iter()
        .zip(z)
        .map(|(a, b)| {
            let mut out = (*b).clone();
            out.axpy(-coef, a);
            out
        })
        .collect()
}

/// Projects an ambient gradient set onto the tangent space at `base`.
pub fn project_tangent(
    kind: ManifoldKind,
    base: &Constellation,
    ambient: &BlockSet,
) -> Result<TangentDirection> {
    if !base.blocks().same_shape(ambient) {
        return Err(Error::ShapeMismatch("ambient set does not match constellation"));
    }
    let mut users = Vec::with_capacity(base.num_users());
    for k in 0..base.num_users() {
        let xs = base.codebook(k);
        let zs = ambient.user(k);
        let projected = match kind {
            ManifoldKind::Grassmann => xs
                .iter()
                .zip(zs)
                .map(|(x, z)| {
                    // (I − XXᴴ)Ż = Ż − X(XᴴŻ)
                    let xhz = x.adj_mul(z);
                    z - &x.matmul(&xhz)
                })
                .collect(),
            ManifoldKind::Oblique => xs
                .iter()
                .zip(zs)
                .flat_map(|(x, z)| sphere_tangent(&[x], &[z]))
                .collect(),
            ManifoldKind::Trace {
                sum_projector: false,
            } => {
                let xr: Vec<&CMat> = xs.iter().collect();
                let zr: Vec<&CMat> = zs.iter().collect();
                sphere_tangent(&xr, &zr)
            }
            ManifoldKind::Trace {
                sum_projector: true,
            } => {
                let mut xc = CMat::zeros(base.t(), base.m());
                xs.iter().for_each(|x| xc += x);
                zs.iter()
                    .flat_map(|z| sphere_tangent(&[&xc], &[z]))
                    .collect()
            }
        };
        users.push(projected);
    }
    Ok(BlockSet::new(users))
}

/// Moves `base` along `step` and maps the result back onto the manifold.
pub fn retract(
    kind: ManifoldKind,
    base: &Constellation,
    step: &TangentDirection,
) -> Result<Constellation> {
    if !base.blocks().same_shape(step) {
        return Err(Error::ShapeMismatch("step does not match constellation"));
    }
    let m = base.m();
    let root_m = (m as f64).sqrt();
    let mut users = Vec::with_capacity(base.num_users());
    for k in 0..base.num_users() {
        let moved: Vec<CMat> = base
            .codebook(k)
            .iter()
            .zip(step.user(k))
            .map(|(x, z)| x + z)
            .collect();
        let book = match kind {
            ManifoldKind::Grassmann => moved
                .iter()
                .enumerate()
                .map(|(i, y)| {
                    qr_positive(y)
                        .map(|(q, _)| q)
                        .map_err(|_| Error::DegenerateRetraction { user: k, index: i })
                })
                .collect::<Result<Vec<_>>>()?,
            ManifoldKind::Oblique => moved
                .into_iter()
                .enumerate()
                .map(|(i, y)| {
                    let n = y.norm();
                    if n > 0.0 && n.is_finite() {
                        Ok(y.scale(root_m / n))
                    } else {
                        Err(Error::DegenerateRetraction { user: k, index: i })
                    }
                })
                .collect::<Result<Vec<_>>>()?,
            ManifoldKind::Trace { .. } => {
                let mut book = moved;
                if !rescale_codebook(&mut book, m) {
                    return Err(Error::DegenerateRetraction { user: k, index: 0 });
                }
                book
            }
        };
        users.push(book);
    }
    Constellation::new(base.t(), m, users)
}

/// Worst violation of the manifold's power constraint.
///
/// Grassmann: `max ‖XᴴX − I‖_F`; oblique: `max |‖X‖_F² − M|`; trace:
/// `max_k |(1/L_k) Σ_i ‖X_{k,i}‖_F² − M|`.
pub fn constraint_residual(kind: ManifoldKind, c: &Constellation) -> f64 {
    let m = c.m() as f64;
    let ident = CMat::identity(c.m());
    let mut worst = 0.0_f64;
    for k in 0..c.num_users() {
        let book = c.codebook(k);
        match kind {
            ManifoldKind::Grassmann => {
                for x in book {
                    worst = worst.max((&x.adj_mul(x) - &ident).norm());
                }
            }
            ManifoldKind::Oblique => {
                for x in book {
                    worst = worst.max((x.norm_sqr() - m).abs());
                }
            }
            ManifoldKind::Trace { .. } => {
                let avg = book.iter().map(CMat::norm_sqr).sum::<f64>() / book.len() as f64;
                worst = worst.max((avg - m).abs());
            }
        }
    }
    worst
}

/// `‖X₁X₁ᴴ − X₂X₂ᴴ‖_F`, the representative-free distance used to compare
/// Grassmann points.
pub fn projector_distance(a: &CMat, b: &CMat) -> f64 {
    (&a.mul_adj(a) - &b.mul_adj(b)).norm()
}
