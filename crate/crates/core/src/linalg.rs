//! Small dense complex linear algebra.
//!
//! Every matrix in this crate is tiny (T ≤ 8 in practice), so the routines
//! here favour clarity and numerical robustness over blocking or SIMD.
//! Storage is column-major, which makes column concatenation of codewords
//! into joint codewords a plain copy.

use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{Error, Result};

/// Complex double.
pub type C64 = Complex64;

pub(crate) const ZERO: C64 = C64::new(0.0, 0.0);
pub(crate) const ONE: C64 = C64::new(1.0, 0.0);

/// Dense complex matrix, column-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CMat {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for c in 0..cols {
            for r in 0..rows {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from column-major data.
    pub fn from_col_major(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch("column-major buffer length"));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from row-major data.
    pub fn from_row_major(rows: usize, cols: usize, data: &[C64]) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::ShapeMismatch("row-major buffer length"));
        }
        Ok(Self::from_fn(rows, cols, |r, c| data[r * cols + c]))
    }

    /// Single-entry indicator matrix `E_mn`.
    pub fn unit(rows: usize, cols: usize, m: usize, n: usize) -> Self {
        let mut e = Self::zeros(rows, cols);
        e[(m, n)] = ONE;
        e
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.data
    }

    pub fn to_row_major(&self) -> Vec<C64> {
        let mut out = Vec::with_capacity(self.data.len());
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.push(self[(r, c)]);
            }
        }
        out
    }

    #[inline]
    pub fn col(&self, c: usize) -> &[C64] {
        &self.data[c * self.rows..(c + 1) * self.rows]
    }

    #[inline]
    pub fn col_mut(&mut self, c: usize) -> &mut [C64] {
        &mut self.data[c * self.rows..(c + 1) * self.rows]
    }

    /// Copy of columns `start..start + count`.
    pub fn columns(&self, start: usize, count: usize) -> Self {
        let r = self.rows;
        Self {
            rows: r,
            cols: count,
            data: self.data[start * r..(start + count) * r].to_vec(),
        }
    }

    /// Overwrites columns starting at `start` with `block`.
    pub fn set_columns(&mut self, start: usize, block: &CMat) {
        debug_assert_eq!(block.rows, self.rows);
        let r = self.rows;
        self.data[start * r..(start + block.cols) * r].copy_from_slice(&block.data);
    }

    /// Column concatenation `[A B ...]`.
    pub fn hcat(blocks: &[&CMat]) -> Result<Self> {
        let rows = blocks.first().map_or(0, |b| b.rows);
        if blocks.iter().any(|b| b.rows != rows) {
            return Err(Error::ShapeMismatch("hcat row counts differ"));
        }
        let cols = blocks.iter().map(|b| b.cols).sum();
        let mut data = Vec::with_capacity(rows * cols);
        for b in blocks {
            data.extend_from_slice(&b.data);
        }
        Ok(Self { rows, cols, data })
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_c(&self, s: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_mut(&mut self, s: f64) {
        self.data.iter_mut().for_each(|z| *z *= s);
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &CMat) {
        debug_assert_eq!(self.shape(), other.shape());
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b * alpha;
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    /// `Aᴴ B`.
    pub fn adj_mul(&self, other: &CMat) -> Self {
        debug_assert_eq!(self.rows, other.rows);
        Self::from_fn(self.cols, other.cols, |i, j| dotc(self.col(i), other.col(j)))
    }

    /// `A Bᴴ`.
    pub fn mul_adj(&self, other: &CMat) -> Self {
        debug_assert_eq!(self.cols, other.cols);
        let mut out = Self::zeros(self.rows, other.rows);
        for k in 0..self.cols {
            let a = self.col(k);
            let b = other.col(k);
            for (j, bj) in b.iter().enumerate() {
                let bjc = bj.conj();
                let oc = out.col_mut(j);
                for (o, ai) in oc.iter_mut().zip(a) {
                    *o += ai * bjc;
                }
            }
        }
        out
    }

    /// Matrix product.
    pub fn matmul(&self, other: &CMat) -> Self {
        debug_assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for j in 0..other.cols {
            for k in 0..self.cols {
                let b = other[(k, j)];
                if b == ZERO {
                    continue;
                }
                let a = self.col(k);
                let oc = out.col_mut(j);
                for (o, ai) in oc.iter_mut().zip(a) {
                    *o += ai * b;
                }
            }
        }
        out
    }

    /// Hermitian part `(A + Aᴴ)/2`.
    pub fn hermitian_part(&self) -> Self {
        Self::from_fn(self.rows, self.cols, |r, c| {
            (self[(r, c)] + self[(c, r)].conj()) * 0.5
        })
    }
}

/// `Σ conj(a_i) b_i`.
#[inline]
pub fn dotc(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

/// Frobenius inner product `⟨A, B⟩ = tr(Aᴴ B)`.
pub fn inner(a: &CMat, b: &CMat) -> C64 {
    dotc(&a.data, &b.data)
}

impl Index<(usize, usize)> for CMat {
    type Output = C64;
    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.data[c * self.rows + r]
    }
}

impl IndexMut<(usize, usize)> for CMat {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        &mut self.data[c * self.rows + r]
    }
}

impl Add<&CMat> for &CMat {
    type Output = CMat;
    fn add(self, rhs: &CMat) -> CMat {
        debug_assert_eq!(self.shape(), rhs.shape());
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub<&CMat> for &CMat {
    type Output = CMat;
    fn sub(self, rhs: &CMat) -> CMat {
        debug_assert_eq!(self.shape(), rhs.shape());
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul<&CMat> for &CMat {
    type Output = CMat;
    fn mul(self, rhs: &CMat) -> CMat {
        self.matmul(rhs)
    }
}

impl Neg for &CMat {
    type Output = CMat;
    fn neg(self) -> CMat {
        self.scale(-1.0)
    }
}

impl AddAssign<&CMat> for CMat {
    fn add_assign(&mut self, rhs: &CMat) {
        debug_assert_eq!(self.shape(), rhs.shape());
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
    }
}

impl SubAssign<&CMat> for CMat {
    fn sub_assign(&mut self, rhs: &CMat) {
        debug_assert_eq!(self.shape(), rhs.shape());
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a -= b;
        }
    }
}

/// Lower Cholesky factor `A = L Lᴴ` of a Hermitian positive definite matrix.
#[derive(Clone, Debug)]
pub struct Cholesky {
    l: CMat,
}

impl Cholesky {
    /// Factors `a`, reading only its lower triangle.
    pub fn new(a: &CMat) -> Result<Self> {
        let n = a.rows;
        if a.cols != n {
            return Err(Error::ShapeMismatch("cholesky of non-square matrix"));
        }
        let mut l = CMat::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)].re;
            for k in 0..j {
                d -= l[(j, k)].norm_sqr();
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite);
            }
            let djj = d.sqrt();
            l[(j, j)] = C64::new(djj, 0.0);
            for i in j + 1..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)].conj();
                }
                l[(i, j)] = s / djj;
            }
        }
        Ok(Self { l })
    }

    pub fn factor(&self) -> &CMat {
        &self.l
    }

    /// `log det A = 2 Σ log L_ii`.
    pub fn logdet(&self) -> f64 {
        (0..self.l.rows).map(|i| self.l[(i, i)].re.ln()).sum::<f64>() * 2.0
    }

    /// Solves `L X = B`.
    pub fn solve_lower(&self, b: &CMat) -> CMat {
        let mut x = b.clone();
        solve_lower_in_place(&self.l, &mut x);
        x
    }

    /// Solves `Lᴴ X = B`.
    pub fn solve_upper(&self, b: &CMat) -> CMat {
        let mut x = b.clone();
        solve_lower_adj_in_place(&self.l, &mut x);
        x
    }

    /// Solves `A X = B`.
    pub fn solve(&self, b: &CMat) -> CMat {
        let mut x = b.clone();
        solve_lower_in_place(&self.l, &mut x);
        solve_lower_adj_in_place(&self.l, &mut x);
        x
    }

    /// `A⁻¹`, Hermitian by construction.
    pub fn inverse(&self) -> CMat {
        let li = self.lower_inverse();
        li.adj_mul(&li)
    }

    /// `L⁻¹`, lower triangular.
    pub fn lower_inverse(&self) -> CMat {
        self.solve_lower(&CMat::identity(self.l.rows))
    }
}

/// In-place forward substitution `L X = B` for lower-triangular `L`.
pub(crate) fn solve_lower_in_place(l: &CMat, x: &mut CMat) {
    let n = l.rows;
    for c in 0..x.cols {
        let col = x.col_mut(c);
        for i in 0..n {
            let mut s = col[i];
            for k in 0..i {
                s -= l[(i, k)] * col[k];
            }
            col[i] = s / l[(i, i)];
        }
    }
}

/// In-place back substitution `Lᴴ X = B` for lower-triangular `L`.
pub(crate) fn solve_lower_adj_in_place(l: &CMat, x: &mut CMat) {
    let n = l.rows;
    for c in 0..x.cols {
        let col = x.col_mut(c);
        for i in (0..n).rev() {
            let mut s = col[i];
            for k in i + 1..n {
                s -= l[(k, i)].conj() * col[k];
            }
            col[i] = s / l[(i, i)].conj();
        }
    }
}

/// Thin QR factorization `A = Q R` with `R` upper triangular and its
/// diagonal forced real positive, so `Q` is unique for full-rank `A`.
///
/// Modified Gram–Schmidt with one reorthogonalization pass. Returns
/// [`Error::RankDeficient`] when a column collapses below `1e-12` of its
/// original norm.
pub fn qr_positive(a: &CMat) -> Result<(CMat, CMat)> {
    let (n, m) = a.shape();
    if m > n {
        return Err(Error::ShapeMismatch("thin QR needs rows >= cols"));
    }
    let mut q = a.clone();
    let mut r = CMat::zeros(m, m);
    for j in 0..m {
        let orig = q.col(j).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for _pass in 0..2 {
            for k in 0..j {
                let (qk, qj) = split_cols(&mut q, k, j);
                let proj = dotc(qk, qj);
                for (x, y) in qj.iter_mut().zip(qk.iter()) {
                    *x -= y * proj;
                }
                r[(k, j)] += proj;
            }
        }
        let nrm = q.col(j).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if !(nrm > 1e-12 * orig.max(f64::MIN_POSITIVE)) || !nrm.is_finite() {
            return Err(Error::RankDeficient);
        }
        r[(j, j)] = C64::new(nrm, 0.0);
        q.col_mut(j).iter_mut().for_each(|z| *z /= nrm);
    }
    Ok((q, r))
}

fn split_cols(q: &mut CMat, k: usize, j: usize) -> (&[C64], &mut [C64]) {
    debug_assert!(k < j);
    let rows = q.rows;
    let (head, tail) = q.data.split_at_mut(j * rows);
    (&head[k * rows..(k + 1) * rows], &mut tail[..rows])
}

/// Eigen-decomposition `H = Q diag(λ) Qᴴ` of a Hermitian matrix, eigenvalues
/// sorted descending.
///
/// Householder reduction to Hermitian tridiagonal form, a diagonal phase
/// change to a real symmetric tridiagonal matrix, then implicit QL with
/// Wilkinson shifts.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

impl HermitianEigen {
    pub fn new(h: &CMat) -> Result<Self> {
        let n = h.rows;
        if h.cols != n {
            return Err(Error::ShapeMismatch("eigen of non-square matrix"));
        }
        let mut ws = EigenWorkspace::new(n);
        let mut a = h.hermitian_part().data;
        if !ws.decompose(&mut a, true) {
            return Err(Error::NotPositiveDefinite);
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| ws.values[j].total_cmp(&ws.values[i]));
        let values = order.iter().map(|&i| ws.values[i]).collect();
        let mut vectors = CMat::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            vectors
                .col_mut(dst)
                .copy_from_slice(&ws.vectors[src * n..(src + 1) * n]);
        }
        Ok(Self { values, vectors })
    }
}

/// Reusable buffers for repeated Hermitian eigen-decompositions of one size.
///
/// After [`EigenWorkspace::decompose`], `values[l]` and column `l` of the
/// column-major `vectors` form an eigenpair; the order is unspecified.
#[derive(Clone, Debug)]
pub struct EigenWorkspace {
    n: usize,
    pub values: Vec<f64>,
    pub vectors: Vec<C64>,
    u: Vec<C64>,
    z: Vec<f64>,
    e: Vec<f64>,
    v: Vec<C64>,
    w: Vec<C64>,
    sub: Vec<C64>,
}

impl EigenWorkspace {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            values: vec![0.0; n],
            vectors: vec![ZERO; n * n],
            u: vec![ZERO; n * n],
            z: vec![0.0; n * n],
            e: vec![0.0; n],
            v: vec![ZERO; n],
            w: vec![ZERO; n],
            sub: vec![ZERO; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Decomposes the Hermitian column-major `a` (destroyed). Only the lower
    /// triangle of `a` is read. Returns false if QL fails to converge.
    pub fn decompose(&mut self, a: &mut [C64], want_vectors: bool) -> bool {
        let n = self.n;
        debug_assert_eq!(a.len(), n * n);
        for c in 0..n {
            for r in 0..c {
                a[c * n + r] = a[r * n + c].conj();
            }
        }
        self.tridiagonalize(a, want_vectors);
        if want_vectors {
            self.z.iter_mut().for_each(|x| *x = 0.0);
            for i in 0..n {
                self.z[i * n + i] = 1.0;
            }
        }
        let z = if want_vectors { Some(&mut self.z[..]) } else { None };
        if !tridiagonal_ql(&mut self.values, &mut self.e, z, n) {
            return false;
        }
        if want_vectors {
            // Q = (U D) Z, with the phases D already folded into U.
            self.vectors.iter_mut().for_each(|x| *x = ZERO);
            for j in 0..n {
                let out = &mut self.vectors[j * n..(j + 1) * n];
                for k in 0..n {
                    let zk = self.z[j * n + k];
                    if zk == 0.0 {
                        continue;
                    }
                    for (o, uk) in out.iter_mut().zip(&self.u[k * n..(k + 1) * n]) {
                        *o += uk * zk;
                    }
                }
            }
        }
        true
    }

    /// Householder reduction of `a` to real symmetric tridiagonal form
    /// `a = U S Uᴴ`; diagonal of `S` into `values`, subdiagonal into `e`.
    fn tridiagonalize(&mut self, a: &mut [C64], want_vectors: bool) {
        let n = self.n;
        let (v, w, sub, u) = (&mut self.v, &mut self.w, &mut self.sub, &mut self.u);
        if want_vectors {
            u.iter_mut().for_each(|x| *x = ZERO);
            for i in 0..n {
                u[i * n + i] = ONE;
            }
        }
        for k in 0..n.saturating_sub(2) {
            let col = &a[k * n..(k + 1) * n];
            let x0 = col[k + 1];
            let alpha2: f64 = col[k + 1..].iter().map(|z| z.norm_sqr()).sum();
            let tail = alpha2 - x0.norm_sqr();
            if !(tail > f64::MIN_POSITIVE * alpha2) {
                sub[k] = x0;
                continue;
            }
            let alpha = alpha2.sqrt();
            let x0n = x0.norm();
            let phase = if x0n > 0.0 { x0 / x0n } else { ONE };
            let beta = -phase * alpha;
            v[k + 1] = x0 - beta;
            v[k + 2..n].copy_from_slice(&col[k + 2..]);
            // ‖v‖² = 2(α² + α|x₀|)
            let tau = 1.0 / (alpha2 + alpha * x0n);
            // w = τ A v − (τ/2)(vᴴ τ A v) v over the trailing block
            w[k + 1..n].fill(ZERO);
            for j in k + 1..n {
                let vj = v[j] * tau;
                let cj = &a[j * n..(j + 1) * n];
                for i in k + 1..n {
                    w[i] += cj[i] * vj;
                }
            }
            let mut vp = ZERO;
            for i in k + 1..n {
                vp += v[i].conj() * w[i];
            }
            let kk = vp * (0.5 * tau);
            for i in k + 1..n {
                w[i] -= kk * v[i];
            }
            for j in k + 1..n {
                let (vjc, wjc) = (v[j].conj(), w[j].conj());
                let cj = &mut a[j * n..(j + 1) * n];
                for i in k + 1..n {
                    cj[i] -= v[i] * wjc + w[i] * vjc;
                }
            }
            sub[k] = beta;
            if want_vectors {
                // U ← U (I − τ v vᴴ)
                for r in 0..n {
                    let mut acc = ZERO;
                    for j in k + 1..n {
                        acc += u[j * n + r] * v[j];
                    }
                    acc *= tau;
                    for j in k + 1..n {
                        u[j * n + r] -= acc * v[j].conj();
                    }
                }
            }
        }
        if n >= 2 {
            sub[n - 2] = a[(n - 2) * n + n - 1];
        }
        for i in 0..n {
            self.values[i] = a[i * n + i].re;
        }
        // Column j of U scaled by φ_j so that the subdiagonal becomes |sub|.
        let mut phi = ONE;
        for k in 1..n {
            let s = sub[k - 1];
            let m = s.norm();
            self.e[k - 1] = m;
            if m > 0.0 {
                phi *= s / m;
            }
            if want_vectors {
                for z in &mut u[k * n..(k + 1) * n] {
                    *z *= phi;
                }
            }
        }
        if n > 0 {
            self.e[n - 1] = 0.0;
        }
    }
}

/// `√(a² + b²)` without overflow.
#[inline]
fn pythag(a: f64, b: f64) -> f64 {
    let (a, b) = (a.abs(), b.abs());
    let (big, small) = if a > b { (a, b) } else { (b, a) };
    if big == 0.0 {
        return 0.0;
    }
    let r = small / big;
    big * (1.0 + r * r).sqrt()
}

/// Implicit QL on a real symmetric tridiagonal matrix (diagonal `d`,
/// subdiagonal `e`), accumulating rotations into the column-major `z`.
/// Returns false if some eigenvalue fails to converge.
fn tridiagonal_ql(d: &mut [f64], e: &mut [f64], mut z: Option<&mut [f64]>, n: usize) -> bool {
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return false;
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = pythag(g, 1.0);
            g = d[m] - d[l] + e[l] / (g + if g >= 0.0 { r } else { -r });
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut underflow = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = pythag(f, g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some(z) = z.as_deref_mut() {
                    let (lo, hi) = z.split_at_mut((i + 1) * n);
                    let zi = &mut lo[i * n..];
                    for (a, b) in zi.iter_mut().zip(&mut hi[..n]) {
                        let f = *b;
                        *b = s * *a + c * f;
                        *a = c * *a - s * f;
                    }
                }
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    true
}
