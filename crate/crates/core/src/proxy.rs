//! Eigenvalue proxies of the joint pairwise error probability.
//!
//! For joint codewords `F_i`, `F_j` let `A = I + F_iF_iᴴ`, `B = I + F_jF_jᴴ`
//! and `Γ = A B⁻¹`. With `λ_l` the (real, positive) eigenvalues of `Γ`:
//!
//! * `β(F_i,F_j) = Σ_l |log λ_l|`
//! * `δ(F_i,F_j) = √(Σ_l log² λ_l)`, the affine-invariant distance between
//!   `A` and `B` on the cone of Hermitian positive definite matrices
//! * `J½(F_i,F_j) = ½ logdet(2I + B⁻¹A + A⁻¹B) − T log 2`
//!
//! The union-bound costs are `log Σ_{i≠j} exp(−N · pairvalue)` over ordered
//! pairs of distinct joint codewords.
//!
//! Spectra are computed through the Hermitian matrix `H = L⁻¹ A L⁻ᴴ`
//! (`B = L Lᴴ`), which is similar to `Γ`. Its orthonormal eigenvectors `q_l`
//! give right eigenvectors `v_l = L q_l` and left eigenvectors
//! `u_l = L⁻ᴴ q_l` of `Γ` with `u_lᴴ v_l = 1`; the left vectors are the rows
//! of the inverse of the right-eigenvector matrix.
//!
//! Gradients follow from the eigenvalue derivative `dλ_l = u_lᴴ dΓ v_l`
//! (for `u_lᴴv_l = 1`). For a codeword `X` of `F_i` this reduces to
//! `2 y_l y_lᴴ X` with `y_l = L⁻ᴴ q_l`, and for a codeword of `F_j` to
//! `−2 λ_l y_l y_lᴴ X`, so a pair contributes the rank-T products
//! `S_i = Y diag(∂p/∂λ) Yᴴ` and `S_j = Y diag(λ ∂p/∂λ) Yᴴ`. The costs are
//! spectral functions, so the result stays well defined when eigenvalues
//! repeat (which happens structurally: pairs that share codewords have
//! eigenvalue 1 with multiplicity at least `T − 2M·(#users in error)`).

use alloc::vec;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::constellation::{AmbientGradientSet, Constellation};
use crate::error::{Error, Result};
use crate::linalg::{CMat, Cholesky, EigenWorkspace, HermitianEigen, C64};
use crate::par;

/// Relative eigenvalue gap below which a spectrum is reported degenerate.
pub const DEGENERACY_GAP: f64 = 1e-10;

/// δ below this marks two joint codewords as coincident (gradient undefined).
pub const COINCIDENT_DELTA: f64 = 1e-12;

/// Default smoothing exponent for β: `|log λ|` becomes `|log λ|^{1+ε}`.
pub const DEFAULT_BETA_EPSILON: f64 = 1e-3;

/// Which proxy a union bound is built from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ProxyKind {
    /// `Σ |log λ|^{1+ε}`; `epsilon = 0` is the plain β.
    Beta { epsilon: f64 },
    Delta,
}

impl ProxyKind {
    /// Pair value from the spectrum.
    pub fn pair_value(&self, eigenvalues: &[f64]) -> f64 {
        match *self {
            ProxyKind::Beta { epsilon } => eigenvalues
                .iter()
                .map(|l| {
                    let a = l.ln().abs();
                    if epsilon == 0.0 {
                        a
                    } else {
                        a.powf(1.0 + epsilon)
                    }
                })
                .sum(),
            ProxyKind::Delta => eigenvalues
                .iter()
                .map(|l| {
                    let g = l.ln();
                    g * g
                })
                .sum::<f64>()
                .sqrt(),
        }
    }

    /// `∂ pairvalue / ∂λ_l`. `value` is the pair value at this spectrum.
    fn spectral_slopes(&self, eigenvalues: &[f64], value: f64, out: &mut [f64]) {
        match *self {
            ProxyKind::Beta { epsilon } => {
                for (o, &l) in out.iter_mut().zip(eigenvalues) {
                    let g = l.ln();
                    let mag = if epsilon == 0.0 {
                        1.0
                    } else {
                        (1.0 + epsilon) * g.abs().powf(epsilon)
                    };
                    *o = if g == 0.0 { 0.0 } else { mag * g.signum() / l };
                }
            }
            ProxyKind::Delta => {
                for (o, &l) in out.iter_mut().zip(eigenvalues) {
                    *o = l.ln() / (value * l);
                }
            }
        }
    }
}

/// `Γ = (I + F_iF_iᴴ)(I + F_jF_jᴴ)⁻¹` with its full eigensystem.
#[derive(Clone, Debug)]
pub struct GammaSystem {
    pub gamma: CMat,
    /// Real positive eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
    /// Right eigenvectors `v_l` as columns.
    pub right: CMat,
    /// Left eigenvectors `u_l` as columns (`Γᴴ u_l = λ_l u_l`, `u_lᴴ v_l = 1`).
    pub left: CMat,
    /// `W = (I + F_jF_jᴴ)⁻¹`.
    pub resolvent: CMat,
    /// Some relative eigenvalue gap fell below [`DEGENERACY_GAP`].
    pub degenerate: bool,
}

fn gram_plus_identity(f: &CMat) -> CMat {
    let mut a = f.mul_adj(f);
    for r in 0..a.rows() {
        a[(r, r)] += 1.0;
    }
    a
}

/// Builds Γ for a pair of joint codewords (both `T × KM`).
pub fn gamma_system(fi: &CMat, fj: &CMat) -> Result<GammaSystem> {
    if fi.rows() != fj.rows() {
        return Err(Error::ShapeMismatch("joint codewords differ in T"));
    }
    let a = gram_plus_identity(fi);
    let b = gram_plus_identity(fj);
    let chol = Cholesky::new(&b)?;
    let linv = chol.lower_inverse();
    let h = linv.matmul(&a).mul_adj(&linv);
    let eig = HermitianEigen::new(&h)?;
    let right = chol.factor().matmul(&eig.vectors);
    let left = linv.adj_mul(&eig.vectors);
    let resolvent = linv.adj_mul(&linv);
    let gamma = a.matmul(&resolvent);
    let degenerate = is_degenerate(&eig.values);
    Ok(GammaSystem {
        gamma,
        eigenvalues: eig.values,
        right,
        left,
        resolvent,
        degenerate,
    })
}

fn is_degenerate(values: &[f64]) -> bool {
    let top = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    values
        .windows(2)
        .any(|w| (w[0] - w[1]).abs() < DEGENERACY_GAP * top)
}

impl GammaSystem {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// First-order eigenvalue changes `u_lᴴ dΓ v_l / (u_lᴴ v_l)` for a
    /// perturbation `dΓ`.
    pub fn eigenvalue_derivatives(&self, dgamma: &CMat) -> Vec<C64> {
        (0..self.dim())
            .map(|l| {
                let u = self.left.col(l);
                let v = self.right.col(l);
                let dv = dgamma.matmul(&CMat::from_col_major(v.len(), 1, v.to_vec()).unwrap());
                let num = crate::linalg::dotc(u, dv.col(0));
                num / crate::linalg::dotc(u, v)
            })
            .collect()
    }
}

/// `Σ_l |log λ_l|`.
pub fn beta_pair(gs: &GammaSystem) -> Result<f64> {
    check_spectrum(&gs.eigenvalues)?;
    Ok(ProxyKind::Beta { epsilon: 0.0 }.pair_value(&gs.eigenvalues))
}

/// `√(Σ_l log² λ_l)`.
pub fn delta_pair(gs: &GammaSystem) -> Result<f64> {
    check_spectrum(&gs.eigenvalues)?;
    Ok(ProxyKind::Delta.pair_value(&gs.eigenvalues))
}

fn check_spectrum(values: &[f64]) -> Result<()> {
    match values.iter().find(|&&l| !(l > 0.0)) {
        Some(&l) => Err(Error::InvalidSpectrum(l)),
        None => Ok(()),
    }
}

/// `½ logdet(2I + B⁻¹A + A⁻¹B) − T log 2`.
///
/// `B⁻¹A` and `A⁻¹B` are inverse to each other and similar to Γ, so the
/// determinant factors over the spectrum as `Π (2 + λ + 1/λ)`.
pub fn j_half_pair(fi: &CMat, fj: &CMat) -> Result<f64> {
    let gs = gamma_system(fi, fj)?;
    check_spectrum(&gs.eigenvalues)?;
    Ok(gs
        .eigenvalues
        .iter()
        .map(|&l| 0.5 * (2.0 + l + 1.0 / l).ln() - core::f64::consts::LN_2)
        .sum())
}

/// How a codeword `X` enters a pair `(F_i, F_j)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GammaBlockCase {
    /// `X` is the erroneous user's block of `F_i` only.
    ErrorInFirst,
    /// `X` is the erroneous user's block of `F_j` only.
    ErrorInSecond,
    /// `X` is shared by `F_i` and `F_j`.
    Common,
}

/// `∂Γ` along a direction `Ż` of the codeword `X`:
/// `(ŻXᴴ + XŻᴴ)W`, `−Γ(ŻXᴴ + XŻᴴ)W`, or `(I − Γ)(ŻXᴴ + XŻᴴ)W`.
pub fn dgamma_direction(case: GammaBlockCase, x: &CMat, gs: &GammaSystem, zdot: &CMat) -> CMat {
    let sym = &zdot.mul_adj(x) + &x.mul_adj(zdot);
    let base = sym.matmul(&gs.resolvent);
    match case {
        GammaBlockCase::ErrorInFirst => base,
        GammaBlockCase::ErrorInSecond => -&gs.gamma.matmul(&base),
        GammaBlockCase::Common => &base - &gs.gamma.matmul(&base),
    }
}

/// `[∂Γ/∂X]_{mn}`: [`dgamma_direction`] along the indicator `E_mn`.
pub fn dgamma_block(case: GammaBlockCase, x: &CMat, gs: &GammaSystem, m: usize, n: usize) -> CMat {
    let e = CMat::unit(x.rows(), x.cols(), m, n);
    dgamma_direction(case, x, gs, &e)
}

/// Numerically stable `log Σ exp(x_i)`; `−∞` for an empty slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let top = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !top.is_finite() {
        return top;
    }
    top + xs.iter().map(|x| (x - top).exp()).sum::<f64>().ln()
}

/// Value, per-pair values and (optionally) gradient of a proxy union bound.
#[derive(Clone, Debug)]
pub struct ProxyEvaluation {
    pub kind: ProxyKind,
    pub value: f64,
    /// `(i, j, pairvalue)` for every unordered pair `i < j` of joint
    /// codewords (linear indices); each stands for both orderings.
    pub pair_values: Vec<(usize, usize, f64)>,
    pub gradient: Option<AmbientGradientSet>,
    /// Pairs whose spectrum had a repeated eigenvalue.
    pub degenerate_pairs: usize,
}

/// Per joint codeword: `A_n = I + F_nF_nᴴ` and `L_n⁻¹` (`A_n = L_nL_nᴴ`),
/// both column-major `T × T`.
struct JointFactors {
    t: usize,
    multi: Vec<Vec<usize>>,
    gram: Vec<Vec<C64>>,
    lower_inv: Vec<Vec<C64>>,
}

impl JointFactors {
    fn new(c: &Constellation) -> Result<Self> {
        let count = c.num_joint();
        let mut multi = Vec::with_capacity(count);
        let mut gram = Vec::with_capacity(count);
        let mut lower_inv = Vec::with_capacity(count);
        for n in 0..count {
            let idx = c.multi_index(n);
            let a = gram_plus_identity(&c.joint(&idx));
            lower_inv.push(Cholesky::new(&a)?.lower_inverse().as_slice().to_vec());
            gram.push(a.as_slice().to_vec());
            multi.push(idx);
        }
        Ok(Self {
            t: c.t(),
            multi,
            gram,
            lower_inv,
        })
    }
}

/// Scratch space for one pair at a time.
struct PairKernel {
    t: usize,
    tmp: Vec<C64>,
    h: Vec<C64>,
    y: Vec<C64>,
    slopes: Vec<f64>,
    eig: EigenWorkspace,
}

impl PairKernel {
    fn new(t: usize) -> Self {
        Self {
            t,
            tmp: vec![C64::new(0.0, 0.0); t * t],
            h: vec![C64::new(0.0, 0.0); t * t],
            y: vec![C64::new(0.0, 0.0); t * t],
            slopes: vec![0.0; t],
            eig: EigenWorkspace::new(t),
        }
    }

    /// Spectrum of Γ(F_i, F_j) via the lower triangle of `H = L_j⁻¹ A_i L_j⁻ᴴ`.
    fn spectrum(&mut self, f: &JointFactors, i: usize, j: usize, want_vectors: bool) -> Result<()> {
        let t = self.t;
        let li = &f.lower_inv[j];
        let a = &f.gram[i];
        // tmp = L⁻¹ A
        for c in 0..t {
            let ac = &a[c * t..(c + 1) * t];
            let out = &mut self.tmp[c * t..(c + 1) * t];
            out.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
            for k in 0..t {
                let akc = ac[k];
                let lk = &li[k * t..(k + 1) * t];
                for r in k..t {
                    out[r] += lk[r] * akc;
                }
            }
        }
        // H[r, c] = Σ_{k ≤ c} tmp[r, k] conj(L⁻¹[c, k]) for r ≥ c
        for c in 0..t {
            let out = &mut self.h[c * t..(c + 1) * t];
            out[c..].iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
            for k in 0..=c {
                let lck = li[k * t + c].conj();
                let tk = &self.tmp[k * t..(k + 1) * t];
                for r in c..t {
                    out[r] += tk[r] * lck;
                }
            }
        }
        if !self.eig.decompose(&mut self.h, want_vectors) {
            return Err(Error::NotPositiveDefinite);
        }
        check_spectrum(&self.eig.values)
    }

    /// `Y = L_j⁻ᴴ Q` from the last [`PairKernel::spectrum`] call.
    fn left_vectors(&mut self, f: &JointFactors, j: usize) {
        let t = self.t;
        let li = &f.lower_inv[j];
        let q = &self.eig.vectors;
        for l in 0..t {
            let ql = &q[l * t..(l + 1) * t];
            let out = &mut self.y[l * t..(l + 1) * t];
            for r in 0..t {
                let lr = &li[r * t..(r + 1) * t];
                let mut acc = C64::new(0.0, 0.0);
                for k in r..t {
                    acc += lr[k].conj() * ql[k];
                }
                out[r] = acc;
            }
        }
    }

    /// Lower triangles of `Y diag(a) Yᴴ` into `si` and `Y diag(aλ) Yᴴ` into
    /// `sj`, with `a = slopes`.
    fn outer_products(&self, si: &mut [C64], sj: &mut [C64]) {
        let t = self.t;
        si.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
        sj.iter_mut().for_each(|z| *z = C64::new(0.0, 0.0));
        for l in 0..t {
            let a = self.slopes[l];
            if a == 0.0 {
                continue;
            }
            let b = a * self.eig.values[l];
            let yl = &self.y[l * t..(l + 1) * t];
            for c in 0..t {
                let yc = yl[c].conj();
                let (ya, yb) = (yc * a, yc * b);
                let oi = &mut si[c * t..(c + 1) * t];
                for r in c..t {
                    oi[r] += yl[r] * ya;
                }
                let oj = &mut sj[c * t..(c + 1) * t];
                for r in c..t {
                    oj[r] += yl[r] * yb;
                }
            }
        }
    }
}

/// Contributions of one row `i` (pairs `(i, j)`, `j > i`), weighted relative
/// to the row's own exponent shift. Matrices hold lower triangles only.
struct RowResult {
    shift: f64,
    sum: f64,
    pair_values: Vec<f64>,
    degenerate: usize,
    own: Vec<C64>,
    /// `T²` block per `j > i`.
    others: Vec<C64>,
}

fn evaluate_row(
    f: &JointFactors,
    i: usize,
    n_rx: f64,
    kind: ProxyKind,
    want_grad: bool,
) -> Result<RowResult> {
    let count = f.gram.len();
    let t = f.t;
    let tt = t * t;
    let pairs = count - i - 1;
    let mut kernel = PairKernel::new(t);
    let mut pair_values = Vec::with_capacity(pairs);
    let mut degenerate = 0;
    let (mut s_first, mut others) = if want_grad {
        (vec![C64::new(0.0, 0.0); pairs * tt], vec![C64::new(0.0, 0.0); pairs * tt])
    } else {
        (Vec::new(), Vec::new())
    };
    for j in i + 1..count {
        kernel.spectrum(f, i, j, want_grad)?;
        let values = &kernel.eig.values;
        let p = kind.pair_value(values);
        if is_degenerate_unsorted(values) {
            degenerate += 1;
        }
        pair_values.push(p);
        if want_grad {
            if kind == ProxyKind::Delta && p < COINCIDENT_DELTA {
                return Err(Error::CoincidentJointCodewords { first: i, second: j });
            }
            kind.spectral_slopes(values, p, &mut kernel.slopes);
            kernel.left_vectors(f, j);
            let b = (j - i - 1) * tt;
            kernel.outer_products(&mut s_first[b..b + tt], &mut others[b..b + tt]);
        }
    }
    let shift = pair_values
        .iter()
        .map(|p| -n_rx * p)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    let mut own = if want_grad { vec![C64::new(0.0, 0.0); tt] } else { Vec::new() };
    for (jj, p) in pair_values.iter().enumerate() {
        let w = (-n_rx * p - shift).exp();
        sum += w;
        if want_grad {
            let blk = jj * tt..(jj + 1) * tt;
            for (o, s) in own.iter_mut().zip(&s_first[blk.clone()]) {
                *o += s * w;
            }
            others[blk].iter_mut().for_each(|z| *z *= -w);
        }
    }
    Ok(RowResult {
        shift,
        sum,
        pair_values,
        degenerate,
        own,
        others,
    })
}

fn is_degenerate_unsorted(values: &[f64]) -> bool {
    let top = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    values.iter().enumerate().any(|(a, x)| {
        values[a + 1..]
            .iter()
            .any(|y| (x - y).abs() < DEGENERACY_GAP * top)
    })
}

/// Evaluates a proxy union bound and, when `want_grad`, its ambient gradient.
pub fn proxy_ub_evaluate(
    c: &Constellation,
    n_rx: usize,
    kind: ProxyKind,
    want_grad: bool,
) -> Result<ProxyEvaluation> {
    let count = c.num_joint();
    if count < 2 {
        return Err(Error::InvalidConfig(
            "a proxy union bound needs at least two joint codewords".into(),
        ));
    }
    if let ProxyKind::Beta { epsilon } = kind {
        if !(epsilon >= 0.0) {
            return Err(Error::InvalidConfig("beta smoothing epsilon must be >= 0".into()));
        }
    }
    let factors = JointFactors::new(c)?;
    let nf = n_rx as f64;
    let t = c.t();
    let tt = t * t;

    // Running log-sum-exp state: everything below is relative to exp(top).
    let mut top = f64::NEG_INFINITY;
    let mut total = 0.0;
    let mut psi: Vec<Vec<C64>> = if want_grad {
        (0..count).map(|_| vec![C64::new(0.0, 0.0); tt]).collect()
    } else {
        Vec::new()
    };
    let mut pair_values = Vec::with_capacity(count * (count - 1) / 2);
    let mut degenerate_pairs = 0;

    for batch in par::batches(count - 1) {
        let rows = par::map_ordered(batch.clone(), |i| {
            evaluate_row(&factors, i, nf, kind, want_grad)
        });
        for (i, row) in batch.zip(rows) {
            let row = row?;
            if row.shift > top {
                let rescale = if top.is_finite() { (top - row.shift).exp() } else { 0.0 };
                total *= rescale;
                psi.iter_mut()
                    .for_each(|p| p.iter_mut().for_each(|z| *z *= rescale));
                top = row.shift;
            }
            let factor = (row.shift - top).exp();
            total += factor * row.sum;
            if want_grad {
                for (o, s) in psi[i].iter_mut().zip(&row.own) {
                    *o += s * factor;
                }
                for (jj, blk) in row.others.chunks_exact(tt).enumerate() {
                    for (o, s) in psi[i + 1 + jj].iter_mut().zip(blk) {
                        *o += s * factor;
                    }
                }
            }
            degenerate_pairs += row.degenerate;
            pair_values.extend(
                row.pair_values
                    .iter()
                    .enumerate()
                    .map(|(jj, &p)| (i, i + 1 + jj, p)),
            );
        }
    }

    // Ordered pairs double every unordered term.
    let value = core::f64::consts::LN_2 + top + total.ln();

    let gradient = if want_grad {
        let mut acc: Vec<Vec<CMat>> = c
            .sizes()
            .iter()
            .map(|&l| (0..l).map(|_| CMat::zeros(t, t)).collect())
            .collect();
        for (n, p) in psi.iter().enumerate() {
            // Ψ_n is Hermitian; only its lower triangle was accumulated.
            let full = CMat::from_fn(t, t, |r, col| {
                if r >= col {
                    p[col * t + r]
                } else {
                    p[r * t + col].conj()
                }
            });
            for (k, &a) in factors.multi[n].iter().enumerate() {
                acc[k][a] += &full;
            }
        }
        let scale = -2.0 * nf / total;
        let mut grad = c.zero_blocks();
        for (k, book) in acc.iter().enumerate() {
            for (a, s) in book.iter().enumerate() {
                *grad.get_mut(k, a) = s.matmul(c.codeword(k, a)).scale(scale);
            }
        }
        Some(grad)
    } else {
        None
    };

    Ok(ProxyEvaluation {
        kind,
        value,
        pair_values,
        gradient,
        degenerate_pairs,
    })
}

/// `β_UB` or `δ_UB` of a constellation.
pub fn proxy_ub_cost(c: &Constellation, n_rx: usize, kind: ProxyKind) -> Result<f64> {
    proxy_ub_evaluate(c, n_rx, kind, false).map(|e| e.value)
}

/// Ambient gradient of `β_UB` or `δ_UB`.
pub fn proxy_ub_gradient(
    c: &Constellation,
    n_rx: usize,
    kind: ProxyKind,
) -> Result<AmbientGradientSet> {
    proxy_ub_evaluate(c, n_rx, kind, true).map(|e| e.gradient.expect("gradient requested"))
}
