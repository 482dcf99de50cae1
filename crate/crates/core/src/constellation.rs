//! Multiuser constellations and per-codeword matrix sets.

use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::CMat;

/// One matrix per codeword, grouped by user.
///
/// This is the shape shared by a constellation, its ambient gradient and a
/// tangent direction.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockSet {
    users: Vec<Vec<CMat>>,
}

/// Unconstrained Euclidean gradient of a cost, one block per codeword.
pub type AmbientGradientSet = BlockSet;

/// Tangent vector at a constellation, one block per codeword.
pub type TangentDirection = BlockSet;

impl BlockSet {
    pub fn new(users: Vec<Vec<CMat>>) -> Self {
        Self { users }
    }

    /// All-zero set with `sizes[k]` blocks of `rows × cols` for user `k`.
    pub fn zeros(rows: usize, cols: usize, sizes: &[usize]) -> Self {
        Self {
            users: sizes
                .iter()
                .map(|&l| (0..l).map(|_| CMat::zeros(rows, cols)).collect())
                .collect(),
        }
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.users.iter().map(Vec::len).collect()
    }

    pub fn users(&self) -> &[Vec<CMat>] {
        &self.users
    }

    pub fn user(&self, k: usize) -> &[CMat] {
        &self.users[k]
    }

    pub fn user_mut(&mut self, k: usize) -> &mut [CMat] {
        &mut self.users[k]
    }

    #[inline]
    pub fn get(&self, k: usize, i: usize) -> &CMat {
        &self.users[k][i]
    }

    #[inline]
    pub fn get_mut(&mut self, k: usize, i: usize) -> &mut CMat {
        &mut self.users[k][i]
    }

    /// Iterates `(user, index, block)` in user-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, &CMat)> {
        self.users
            .iter()
            .enumerate()
            .flat_map(|(k, u)| u.iter().enumerate().map(move |(i, b)| (k, i, b)))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut CMat> {
        self.users.iter_mut().flat_map(|u| u.iter_mut())
    }

    pub fn into_users(self) -> Vec<Vec<CMat>> {
        self.users
    }

    pub fn same_shape(&self, other: &BlockSet) -> bool {
        self.users.len() == other.users.len()
            && self.users.iter().zip(&other.users).all(|(a, b)| {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.shape() == y.shape())
            })
    }

    /// `√(Σ_k Σ_i ‖B_{k,i}‖_F²)`.
    pub fn norm(&self) -> f64 {
        self.iter().map(|(_, _, b)| b.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            users: self
                .users
                .iter()
                .map(|u| u.iter().map(|b| b.scale(s)).collect())
                .collect(),
        }
    }

    /// `self += alpha * other`, blockwise.
    pub fn axpy(&mut self, alpha: f64, other: &BlockSet) {
        for (a, b) in self.iter_mut().zip(other.iter()) {
            a.axpy(alpha, b.2);
        }
    }

    /// Largest entry modulus over all blocks.
    pub fn max_abs(&self) -> f64 {
        self.iter().map(|(_, _, b)| b.max_abs()).fold(0.0, f64::max)
    }
}

/// A K-user joint constellation: one codebook of `T × M` codewords per user.
///
/// Joint codewords `F = [X_{1,i_1} … X_{K,i_K}]` are never stored; they are
/// materialized on demand from a multi-index.
#[derive(Clone, Debug, PartialEq)]
pub struct Constellation {
    t: usize,
    m: usize,
    blocks: BlockSet,
}

impl Constellation {
    pub fn new(t: usize, m: usize, users: Vec<Vec<CMat>>) -> Result<Self> {
        check_dims(t, m)?;
        if users.is_empty() || users.iter().any(Vec::is_empty) {
            return Err(Error::InvalidConfig("every user needs at least one codeword".into()));
        }
        if users.iter().flatten().any(|x| x.shape() != (t, m)) {
            return Err(Error::ShapeMismatch("codeword is not T x M"));
        }
        Ok(Self {
            t,
            m,
            blocks: BlockSet::new(users),
        })
    }

    pub fn from_blocks(t: usize, m: usize, blocks: BlockSet) -> Result<Self> {
        Self::new(t, m, blocks.into_users())
    }

    #[inline]
    pub fn t(&self) -> usize {
        self.t
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn num_users(&self) -> usize {
        self.blocks.num_users()
    }

    /// Codebook sizes `L_k`.
    pub fn sizes(&self) -> Vec<usize> {
        self.blocks.sizes()
    }

    pub fn blocks(&self) -> &BlockSet {
        &self.blocks
    }

    pub fn into_blocks(self) -> BlockSet {
        self.blocks
    }

    pub fn codebook(&self, k: usize) -> &[CMat] {
        self.blocks.user(k)
    }

    #[inline]
    pub fn codeword(&self, k: usize, i: usize) -> &CMat {
        self.blocks.get(k, i)
    }

    /// `|𝒞| = Π_k L_k`.
    pub fn num_joint(&self) -> usize {
        self.blocks.users().iter().map(Vec::len).product()
    }

    /// Multi-index of a joint codeword; user 0 varies slowest.
    pub fn multi_index(&self, mut linear: usize) -> Vec<usize> {
        let sizes = self.sizes();
        let mut idx = alloc::vec![0; sizes.len()];
        for k in (0..sizes.len()).rev() {
            idx[k] = linear % sizes[k];
            linear /= sizes[k];
        }
        idx
    }

    pub fn linear_index(&self, multi: &[usize]) -> usize {
        multi
            .iter()
            .zip(self.blocks.users())
            .fold(0, |acc, (&i, u)| acc * u.len() + i)
    }

    /// Joint codeword `F = [X_{1,i_1} … X_{K,i_K}]` (`T × KM`).
    pub fn joint(&self, multi: &[usize]) -> CMat {
        let mut f = CMat::zeros(self.t, self.m * self.num_users());
        for (k, &i) in multi.iter().enumerate() {
            f.set_columns(k * self.m, self.codeword(k, i));
        }
        f
    }

    /// Every joint codeword in linear-index order.
    pub fn all_joint(&self) -> Vec<CMat> {
        (0..self.num_joint())
            .map(|n| self.joint(&self.multi_index(n)))
            .collect()
    }

    pub fn zero_blocks(&self) -> BlockSet {
        BlockSet::zeros(self.t, self.m, &self.sizes())
    }

    /// Replaces every codeword by `X U` for a per-codeword `M × M` matrix.
    pub fn map_codewords(&self, mut f: impl FnMut(usize, usize, &CMat) -> CMat) -> Result<Self> {
        let users = self
            .blocks
            .users()
            .iter()
            .enumerate()
            .map(|(k, u)| u.iter().enumerate().map(|(i, x)| f(k, i, x)).collect())
            .collect();
        Self::new(self.t, self.m, users)
    }
}

pub(crate) fn check_dims(t: usize, m: usize) -> Result<()> {
    if m == 0 || t <= m {
        return Err(Error::InvalidDimensions { t, m });
    }
    Ok(())
}
