//! Full-diversity union bound of the asymptotic pairwise error probability.
//!
//! Only hypothesis pairs that differ in a single user's codeword are kept.
//! For such an ordered pair, with `E` the erroneous user's block of `F_i`
//! and `P⊥` the projector onto the orthogonal complement of `span(F_j)`,
//!
//! ```text
//! 𝓕_ij = det(Eᴴ P⊥ E)^{-N}
//! ```
//!
//! and the cost is `Σ 𝓕_ij`. Requires `T ≥ (K+1)M` so that `F_j` leaves room
//! for `E` outside its span.

use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::constellation::{AmbientGradientSet, Constellation};
use crate::error::{Error, Result};
use crate::linalg::{CMat, Cholesky};
use crate::par;

/// Smallest determinant of `Eᴴ P⊥ E` treated as nonsingular.
pub const DET_FLOOR: f64 = 1e-300;

/// Ordered pair of joint hypotheses differing only in user `user`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ErrorPair {
    pub user: usize,
    /// `i_k`, the erroneous user's codeword in `F_i`.
    pub transmitted: usize,
    /// `j_k ≠ i_k`, its codeword in `F_j`.
    pub detected: usize,
    /// Multi-index of `F_i`; entry `user` equals `transmitted`.
    pub joint: Vec<usize>,
}

impl ErrorPair {
    /// Multi-index of `F_i`.
    pub fn first(&self) -> &[usize] {
        &self.joint
    }

    /// Multi-index of `F_j`.
    pub fn second(&self) -> Vec<usize> {
        let mut j = self.joint.clone();
        j[self.user] = self.detected;
        j
    }

    /// Codeword indices of the users not in error.
    pub fn common(&self) -> Vec<usize> {
        self.joint
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != self.user)
            .map(|(_, &i)| i)
            .collect()
    }

    fn coincident(&self) -> Error {
        Error::CoincidentCodewords {
            user: self.user,
            transmitted: self.transmitted,
            detected: self.detected,
            common: self.common(),
        }
    }
}

/// Every ordered one-error pair: user-major, then `F_i` in linear order,
/// then `j_k` ascending. Users with a single codeword contribute nothing.
pub fn enumerate_error_pairs(c: &Constellation) -> Vec<ErrorPair> {
    let sizes = c.sizes();
    let mut out = Vec::new();
    for (k, &lk) in sizes.iter().enumerate() {
        for n in 0..c.num_joint() {
            let joint = c.multi_index(n);
            for d in (0..lk).filter(|&d| d != joint[k]) {
                out.push(ErrorPair {
                    user: k,
                    transmitted: joint[k],
                    detected: d,
                    joint: joint.clone(),
                });
            }
        }
    }
    out
}

/// `Ok(())` when `T ≥ (K+1)M`.
pub fn check_full_diversity(c: &Constellation) -> Result<()> {
    let (t, k, m) = (c.t(), c.num_users(), c.m());
    if t < (k + 1) * m {
        return Err(Error::NotFullDiversity { t, k, m });
    }
    Ok(())
}

/// Per-pair quantities reused by the value and the gradient.
struct PairParts {
    term: f64,
    /// `P⊥E G⁻¹` (T × M).
    pe_ginv: CMat,
    /// `S = M_j⁻¹ F_jᴴ E` (KM × M).
    s: CMat,
}

fn pair_parts(pair: &ErrorPair, c: &Constellation, fj: &CMat, mj: &Cholesky, n_rx: usize) -> Result<PairParts> {
    let e = c.codeword(pair.user, pair.transmitted);
    let s = mj.solve(&fj.adj_mul(e));
    let pe = e - &fj.matmul(&s);
    // G = Eᴴ P⊥ E = Eᴴ (P⊥E), symmetrized against round-off.
    let g = e.adj_mul(&pe).hermitian_part();
    let gc = Cholesky::new(&g).map_err(|_| pair.coincident())?;
    let logdet = gc.logdet();
    if !(logdet >= DET_FLOOR.ln()) {
        return Err(pair.coincident());
    }
    let term = (-(n_rx as f64) * logdet).exp();
    // P⊥E G⁻¹ = (G⁻¹ (P⊥E)ᴴ)ᴴ
    let pe_ginv = gc.solve(&pe.adjoint()).adjoint();
    Ok(PairParts { term, pe_ginv, s })
}

/// `𝓕_ij = det(Eᴴ P⊥_{F_j} E)^{-N}`.
pub fn pep_term(pair: &ErrorPair, c: &Constellation, n_rx: usize) -> Result<f64> {
    check_full_diversity(c)?;
    let fj = c.joint(&pair.second());
    let mj = Cholesky::new(&fj.adj_mul(&fj)).map_err(|_| pair.coincident())?;
    pair_parts(pair, c, &fj, &mj, n_rx).map(|p| p.term)
}

/// Cost value, the individual terms in enumeration order and, on request,
/// the ambient gradient.
#[derive(Clone, Debug)]
pub struct PepEvaluation {
    pub value: f64,
    pub terms: Vec<(ErrorPair, f64)>,
    pub gradient: Option<AmbientGradientSet>,
}

/// Adds one pair's gradient, scaled by `weight`, into `grad`.
fn accumulate_pair(
    grad: &mut AmbientGradientSet,
    pair: &ErrorPair,
    parts: &PairParts,
    n_rx: usize,
    m: usize,
    weight: f64,
) {
    let coef = 2.0 * n_rx as f64 * parts.term * weight;
    grad.get_mut(pair.user, pair.transmitted)
        .axpy(-coef, &parts.pe_ginv);
    // Every column block of F_j, including the erroneous user's.
    let gf = parts.pe_ginv.mul_adj(&parts.s);
    for (k, &idx) in pair.second().iter().enumerate() {
        grad.get_mut(k, idx).axpy(coef, &gf.columns(k * m, m));
    }
}

fn joint_gram_factors(c: &Constellation) -> Vec<Option<(CMat, Cholesky)>> {
    (0..c.num_joint())
        .map(|n| {
            let f = c.joint(&c.multi_index(n));
            Cholesky::new(&f.adj_mul(&f)).ok().map(|ch| (f, ch))
        })
        .collect()
}

/// Evaluates `Σ 𝓕_ij` over all one-error pairs.
pub fn pep_ub_evaluate(c: &Constellation, n_rx: usize, want_grad: bool) -> Result<PepEvaluation> {
    check_full_diversity(c)?;
    let pairs = enumerate_error_pairs(c);
    let factors = joint_gram_factors(c);
    let m = c.m();
    let mut grad = want_grad.then(|| c.zero_blocks());
    let mut terms = Vec::with_capacity(pairs.len());
    let mut value = 0.0;
    for batch in par::batches(pairs.len()) {
        let parts = par::map_ordered(batch.clone(), |p| {
            let pair = &pairs[p];
            let (fj, mj) = factors[c.linear_index(&pair.second())]
                .as_ref()
                .ok_or_else(|| pair.coincident())?;
            pair_parts(pair, c, fj, mj, n_rx)
        });
        for (p, parts) in batch.zip(parts) {
            let parts = parts?;
            value += parts.term;
            if let Some(g) = grad.as_mut() {
                accumulate_pair(g, &pairs[p], &parts, n_rx, m, 1.0);
            }
            terms.push((pairs[p].clone(), parts.term));
        }
    }
    Ok(PepEvaluation {
        value,
        terms,
        gradient: grad,
    })
}

pub fn pep_ub_cost(c: &Constellation, n_rx: usize) -> Result<f64> {
    pep_ub_evaluate(c, n_rx, false).map(|e| e.value)
}

pub fn pep_ub_gradient(c: &Constellation, n_rx: usize) -> Result<AmbientGradientSet> {
    pep_ub_evaluate(c, n_rx, true).map(|e| e.gradient.expect("gradient requested"))
}

/// Largest term and the first pair attaining it.
pub fn minmax_pep_objective(c: &Constellation, n_rx: usize) -> Result<(f64, ErrorPair)> {
    let eval = pep_ub_evaluate(c, n_rx, false)?;
    worst_pair(eval.terms).ok_or_else(|| {
        Error::InvalidConfig("no user has two or more codewords".into())
    })
}

fn worst_pair(terms: Vec<(ErrorPair, f64)>) -> Option<(f64, ErrorPair)> {
    let mut best: Option<(f64, ErrorPair)> = None;
    for (pair, t) in terms {
        if best.as_ref().map_or(true, |(b, _)| t > *b) {
            best = Some((t, pair));
        }
    }
    best
}

/// Largest term, its pair and the gradient of that single term.
pub fn minmax_pep_evaluate(
    c: &Constellation,
    n_rx: usize,
) -> Result<(f64, ErrorPair, AmbientGradientSet)> {
    let (value, pair) = minmax_pep_objective(c, n_rx)?;
    let fj = c.joint(&pair.second());
    let mj = Cholesky::new(&fj.adj_mul(&fj)).map_err(|_| pair.coincident())?;
    let parts = pair_parts(&pair, c, &fj, &mj, n_rx)?;
    let mut grad = c.zero_blocks();
    accumulate_pair(&mut grad, &pair, &parts, n_rx, c.m(), 1.0);
    Ok((value, pair, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::C64;
    use crate::manifolds::{random_constellation, ManifoldKind};
    use crate::rng::{complex_normal_matrix, seeded};
    use alloc::vec;
    use nalgebra::DMatrix;

    fn na(m: &CMat) -> DMatrix<C64> {
        DMatrix::from_fn(m.rows(), m.cols(), |r, c| m[(r, c)])
    }

    /// Straight-line evaluation: build P⊥ and take the determinant directly.
    fn oracle_term(c: &Constellation, pair: &ErrorPair, n_rx: usize) -> f64 {
        let e = na(c.codeword(pair.user, pair.transmitted));
        let f = na(&c.joint(&pair.second()));
        let fh = f.adjoint();
        let inv = (&fh * &f).try_inverse().unwrap();
        let p = DMatrix::<C64>::identity(f.nrows(), f.nrows()) - &f * inv * &fh;
        let g = e.adjoint() * p * &e;
        g.determinant().re.powi(-(n_rx as i32))
    }

    #[test]
    fn pair_counts() {
        let mut rng = seeded(1);
        let c = random_constellation(ManifoldKind::Grassmann, 3, 1, &[2, 2], &mut rng).unwrap();
        assert_eq!(enumerate_error_pairs(&c).len(), 8);
        let c = random_constellation(ManifoldKind::Grassmann, 3, 1, &[3], &mut rng).unwrap();
        assert_eq!(enumerate_error_pairs(&c).len(), 6);
        let c = random_constellation(ManifoldKind::Grassmann, 3, 1, &[16, 16], &mut rng).unwrap();
        let pairs = enumerate_error_pairs(&c);
        assert_eq!(pairs.len(), 7680);
        // each pair differs in exactly one user and appears once
        for p in &pairs {
            let j = p.second();
            let diff = p.first().iter().zip(&j).filter(|(a, b)| a != b).count();
            assert_eq!(diff, 1);
        }
        let mut keys: Vec<_> = pairs.iter().map(|p| (p.first().to_vec(), p.second())).collect();
        keys.sort();
        keys.dedup();
        assert_eq!(keys.len(), 7680);
        let c = random_constellation(ManifoldKind::Grassmann, 3, 1, &[1, 3], &mut rng).unwrap();
        assert!(enumerate_error_pairs(&c).iter().all(|p| p.user == 1));
    }

    #[test]
    fn orthogonal_single_user_pair() {
        let e = |i: usize| CMat::unit(3, 1, i, 0);
        let c = Constellation::new(3, 1, vec![vec![e(0), e(1)]]).unwrap();
        for p in enumerate_error_pairs(&c) {
            assert!((pep_term(&p, &c, 2).unwrap() - 1.0).abs() < 1e-14);
        }
        assert!((pep_ub_cost(&c, 1).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn single_user_reduction() {
        for seed in 0..20 {
            let mut rng = seeded(seed);
            let c = random_constellation(ManifoldKind::Grassmann, 6, 2, &[4], &mut rng).unwrap();
            let mut ub = 0.0;
            for (i, xi) in c.codebook(0).iter().enumerate() {
                for (j, xj) in c.codebook(0).iter().enumerate() {
                    if i != j {
                        let a = xi.adj_mul(xj);
                        let g = &CMat::identity(2) - &a.mul_adj(&a);
                        ub += na(&g).determinant().re.powi(-3);
                    }
                }
            }
            let cost = pep_ub_cost(&c, 3).unwrap();
            assert!(((cost - ub) / ub).abs() < 1e-12);
        }
    }

    #[test]
    fn matches_straight_line_oracle() {
        for seed in 0..5 {
            let mut rng = seeded(seed + 100);
            let c = random_constellation(ManifoldKind::Grassmann, 3, 1, &[2, 2], &mut rng).unwrap();
            let eval = pep_ub_evaluate(&c, 2, false).unwrap();
            let mut total = 0.0;
            for (pair, t) in &eval.terms {
                let o = oracle_term(&c, pair, 2);
                assert!(((t - o) / o).abs() < 1e-9, "{t} vs {o}");
                assert!(*t > 0.0);
                total += o;
            }
            assert!(((eval.value - total) / total).abs() < 1e-9);
        }
    }

    #[test]
    fn unitary_invariance() {
        let mut rng = seeded(7);
        let c = random_constellation(ManifoldKind::Grassmann, 6, 2, &[3, 2], &mut rng).unwrap();
        let base = pep_ub_cost(&c, 2).unwrap();
        let rotated = c
            .map_codewords(|_, _, x| {
                let (u, _) = crate::linalg::qr_positive(&complex_normal_matrix(&mut rng, 2, 2)).unwrap();
                x.matmul(&u)
            })
            .unwrap();
        let after = pep_ub_cost(&rotated, 2).unwrap();
        assert!(((after - base) / base).abs() < 1e-10);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        for (t, m, sizes) in [(3, 1, vec![2, 2]), (4, 1, vec![3]), (6, 2, vec![2, 2])] {
            let mut rng = seeded(t as u64 * 10 + m as u64);
            let c = random_constellation(ManifoldKind::Oblique, t, m, &sizes, &mut rng).unwrap();
            let g = pep_ub_gradient(&c, 2).unwrap();
            let fd = crate::gradcheck::fd_gradient(|x| pep_ub_cost(x, 2), &c, crate::gradcheck::DEFAULT_STEP);
            let scale = fd.max_abs();
            for (a, b) in g.iter().zip(fd.iter()) {
                assert!((a.2 - b.2).max_abs() <= 1e-5 * scale, "T={t} M={m}");
            }
        }
    }

    #[test]
    fn uniform_scaling_keeps_direction() {
        let mut rng = seeded(8);
        let c = random_constellation(ManifoldKind::Grassmann, 3, 1, &[2, 2], &mut rng).unwrap();
        let g2 = pep_ub_gradient(&c, 2).unwrap();
        let g2s = g2.scale(7.5);
        let (n1, n2) = (g2.norm(), g2s.norm());
        for (a, b) in g2.iter().zip(g2s.iter()) {
            assert!((&a.2.scale(1.0 / n1) - &b.2.scale(1.0 / n2)).max_abs() < 1e-12);
        }
    }

    #[test]
    fn coincident_codewords_are_named() {
        let mut rng = seeded(9);
        let c = random_constellation(ManifoldKind::Grassmann, 3, 1, &[2, 2], &mut rng).unwrap();
        let dup = c
            .map_codewords(|k, i, x| if (k, i) == (1, 1) { c.codeword(1, 0).clone() } else { x.clone() })
            .unwrap();
        match pep_ub_cost(&dup, 2) {
            Err(Error::CoincidentCodewords { user, .. }) => assert_eq!(user, 1),
            other => panic!("{other:?}"),
        }
        let (v, pair) = minmax_pep_objective(&c, 2).unwrap();
        assert!(v <= pep_ub_cost(&c, 2).unwrap());
        assert!(enumerate_error_pairs(&c).contains(&pair));
    }

    #[test]
    fn near_coincident_pair_dominates_minmax() {
        let mut rng = seeded(10);
        let c = random_constellation(ManifoldKind::Grassmann, 3, 1, &[4, 4], &mut rng).unwrap();
        let near = c
            .map_codewords(|k, i, x| {
                if (k, i) == (0, 1) {
                    let mut y = c.codeword(0, 0).clone();
                    y[(1, 0)] += C64::new(1e-3, 0.0);
                    crate::linalg::qr_positive(&y).unwrap().0
                } else {
                    x.clone()
                }
            })
            .unwrap();
        let (_, pair) = minmax_pep_objective(&near, 2).unwrap();
        assert_eq!(pair.user, 0);
        assert!([pair.transmitted, pair.detected].contains(&0));
        assert!([pair.transmitted, pair.detected].contains(&1));
        // independent exhaustive re-scan
        let mut best = (0.0, None);
        for p in enumerate_error_pairs(&near) {
            let t = oracle_term(&near, &p, 2);
            if t > best.0 {
                best = (t, Some(p));
            }
        }
        let (v, pair) = minmax_pep_objective(&near, 2).unwrap();
        assert_eq!(Some(pair), best.1);
        assert!(((v - best.0) / best.0).abs() < 1e-6);
    }

    #[test]
    fn minmax_gradient_is_single_term_gradient() {
        let mut rng = seeded(11);
        let c = random_constellation(ManifoldKind::Grassmann, 3, 1, &[2, 2], &mut rng).unwrap();
        let (_, pair, g) = minmax_pep_evaluate(&c, 2).unwrap();
        let fd = crate::gradcheck::fd_gradient(|x| pep_term(&pair, x, 2), &c, crate::gradcheck::DEFAULT_STEP);
        let scale = fd.max_abs();
        for (a, b) in g.iter().zip(fd.iter()) {
            assert!((a.2 - b.2).max_abs() <= 1e-5 * scale);
        }
    }

    #[test]
    fn rejects_insufficient_coherence_time() {
        let mut rng = seeded(12);
        let c = random_constellation(ManifoldKind::Grassmann, 4, 2, &[2, 2], &mut rng).unwrap();
        assert_eq!(
            pep_ub_cost(&c, 2),
            Err(Error::NotFullDiversity { t: 4, k: 2, m: 2 })
        );
    }
}
