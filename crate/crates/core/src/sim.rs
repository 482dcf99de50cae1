//! Monte Carlo symbol error rates under Rayleigh block fading.
//!
//! Each block draws one codeword per user, fresh channels `H_k` (M × N) and
//! noise `W` (T × N), all i.i.d. 𝒞𝒩(0,1), forms
//! `Y = Σ_k √β_k X_k H_k + √(M/(Tρ)) W` and runs the joint ML detector
//! `argmin_i tr(Yᴴ R_i⁻¹ Y) + N logdet R_i` with
//! `R_i = Σ_k β_k X_{k,i_k} X_{k,i_k}ᴴ + (M/(Tρ)) I`.
//!
//! Block `b` at SNR index `s` uses its own random stream derived from
//! `(seed, s, b)`, so results do not depend on how blocks are scheduled.

use alloc::vec;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;
use rand::Rng;

use crate::constellation::Constellation;
use crate::error::{Error, Result};
use crate::linalg::{CMat, Cholesky, C64};
use crate::par;
use crate::rng::{complex_normal_matrix, substream};

/// Blocks per scheduling unit; early stopping is checked between units.
pub const CHUNK: usize = 256;

/// Default early-stop error count per user.
pub const DEFAULT_EARLY_STOP: u64 = 500;

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub snr_db: Vec<f64>,
    /// Per-user SNR factors `β_k`; empty means all ones.
    pub beta: Vec<f64>,
    pub blocks: usize,
    pub n_rx: usize,
    pub seed: u64,
    /// Stop an SNR point once every user has this many errors.
    pub early_stop: Option<u64>,
}

impl SimConfig {
    pub fn new(snr_db: Vec<f64>, blocks: usize, n_rx: usize, seed: u64) -> Self {
        Self {
            snr_db,
            beta: Vec::new(),
            blocks,
            n_rx,
            seed,
            early_stop: None,
        }
    }

    /// `0, 2, …, 20` dB.
    pub fn default_snr_grid() -> Vec<f64> {
        (0..=10).map(|i| 2.0 * i as f64).collect()
    }

    fn betas(&self, k: usize) -> Result<Vec<f64>> {
        if self.beta.is_empty() {
            return Ok(vec![1.0; k]);
        }
        if self.beta.len() != k {
            return Err(Error::InvalidConfig(alloc::format!(
                "{} SNR factors for {k} users",
                self.beta.len()
            )));
        }
        if self.beta.iter().any(|b| !(*b > 0.0) || !b.is_finite()) {
            return Err(Error::InvalidConfig("SNR factors must be positive".into()));
        }
        Ok(self.beta.clone())
    }

    pub fn validate(&self, k: usize) -> Result<()> {
        if self.blocks == 0 {
            return Err(Error::InvalidConfig("blocks must be at least 1".into()));
        }
        if self.n_rx == 0 {
            return Err(Error::InvalidConfig("N must be at least 1".into()));
        }
        if self.snr_db.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidConfig("SNR values must be finite".into()));
        }
        self.betas(k).map(|_| ())
    }
}

/// `10^(dB/10)`.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Per SNR point and joint hypothesis: `L_i⁻¹` with `R_i = L_i L_iᴴ`, and
/// `N logdet R_i`.
#[derive(Clone, Debug)]
pub struct DetectorTables {
    n_rx: usize,
    sigma: Vec<f64>,
    beta_sqrt: Vec<f64>,
    lower_inv: Vec<Vec<CMat>>,
    offset: Vec<Vec<f64>>,
}

impl DetectorTables {
    pub fn new(c: &Constellation, cfg: &SimConfig) -> Result<Self> {
        cfg.validate(c.num_users())?;
        let betas = cfg.betas(c.num_users())?;
        let joint: Vec<Vec<usize>> = (0..c.num_joint()).map(|n| c.multi_index(n)).collect();
        let (t, m) = (c.t(), c.m());
        let mut sigma = Vec::new();
        let mut lower_inv = Vec::new();
        let mut offset = Vec::new();
        for &db in &cfg.snr_db {
            let s2 = m as f64 / (t as f64 * db_to_linear(db));
            let mut li = Vec::with_capacity(joint.len());
            let mut off = Vec::with_capacity(joint.len());
            for idx in &joint {
                let mut r = CMat::identity(t).scale(s2);
                for (k, &i) in idx.iter().enumerate() {
                    let x = c.codeword(k, i);
                    r.axpy(betas[k], &x.mul_adj(x));
                }
                let ch = Cholesky::new(&r)?;
                off.push(cfg.n_rx as f64 * ch.logdet());
                li.push(ch.lower_inverse());
            }
            sigma.push(s2.sqrt());
            lower_inv.push(li);
            offset.push(off);
        }
        Ok(Self {
            n_rx: cfg.n_rx,
            sigma,
            beta_sqrt: betas.iter().map(|b| b.sqrt()).collect(),
            lower_inv,
            offset,
        })
    }

    pub fn num_snr(&self) -> usize {
        self.sigma.len()
    }

    pub fn n_rx(&self) -> usize {
        self.n_rx
    }

    /// `tr(Yᴴ R_i⁻¹ Y) + N logdet R_i` for every hypothesis.
    pub fn metrics(&self, snr_index: usize, y: &CMat) -> Vec<f64> {
        (0..self.offset[snr_index].len())
            .map(|i| self.metric(snr_index, i, y))
            .collect()
    }

    /// `‖L_i⁻¹ Y‖_F² + N logdet R_i`.
    pub fn metric(&self, snr_index: usize, hypothesis: usize, y: &CMat) -> f64 {
        let li = &self.lower_inv[snr_index][hypothesis];
        let t = li.rows();
        let mut q = 0.0;
        for col in 0..y.cols() {
            let yc = y.col(col);
            for r in 0..t {
                let mut acc = C64::new(0.0, 0.0);
                for k in 0..=r {
                    acc += li[(r, k)] * yc[k];
                }
                q += acc.norm_sqr();
            }
        }
        q + self.offset[snr_index][hypothesis]
    }

    /// Index of the smallest metric; ties go to the lowest index.
    pub fn detect(&self, snr_index: usize, y: &CMat) -> usize {
        let mut best = (0, f64::INFINITY);
        for i in 0..self.offset[snr_index].len() {
            let v = self.metric(snr_index, i, y);
            if v < best.1 {
                best = (i, v);
            }
        }
        best.0
    }
}

/// Received block for hypothesis `sent` with explicit channels and noise.
pub fn receive(
    c: &Constellation,
    tables: &DetectorTables,
    snr_index: usize,
    sent: &[usize],
    channels: &[CMat],
    noise: &CMat,
) -> CMat {
    let mut y = noise.scale(tables.sigma[snr_index]);
    for (k, &i) in sent.iter().enumerate() {
        y.axpy(tables.beta_sqrt[k], &c.codeword(k, i).matmul(&channels[k]));
    }
    y
}

/// One coherence block: `(transmitted, detected)` multi-indices.
pub fn simulate_block<R: Rng + ?Sized>(
    c: &Constellation,
    tables: &DetectorTables,
    snr_index: usize,
    rng: &mut R,
) -> (Vec<usize>, Vec<usize>) {
    let (sent, y) = draw_block(c, tables, snr_index, rng);
    let detected = c.multi_index(tables.detect(snr_index, &y));
    (sent, detected)
}

/// Draws a transmitted multi-index and the received block.
pub fn draw_block<R: Rng + ?Sized>(
    c: &Constellation,
    tables: &DetectorTables,
    snr_index: usize,
    rng: &mut R,
) -> (Vec<usize>, CMat) {
    let sent: Vec<usize> = c.sizes().iter().map(|&l| rng.random_range(0..l)).collect();
    let channels: Vec<CMat> = (0..c.num_users())
        .map(|_| complex_normal_matrix(rng, c.m(), tables.n_rx))
        .collect();
    let noise = complex_normal_matrix(rng, c.t(), tables.n_rx);
    let y = receive(c, tables, snr_index, &sent, &channels, &noise);
    (sent, y)
}

/// Stream id of block `block` at SNR index `snr_index`.
pub fn block_stream(snr_index: usize, block: usize) -> u64 {
    ((snr_index as u64) << 40) | block as u64
}

#[derive(Clone, Debug, PartialEq)]
pub struct SerPoint {
    pub snr_db: f64,
    pub blocks: u64,
    pub errors: Vec<u64>,
    pub ser: Vec<f64>,
    /// Mean of the per-user SERs.
    pub avg_ser: f64,
}

impl SerPoint {
    fn from_counts(snr_db: f64, blocks: u64, errors: Vec<u64>) -> Self {
        let ser: Vec<f64> = errors.iter().map(|&e| e as f64 / blocks as f64).collect();
        let avg_ser = ser.iter().sum::<f64>() / ser.len() as f64;
        Self {
            snr_db,
            blocks,
            errors,
            ser,
            avg_ser,
        }
    }

    /// Binomial standard error of the average SER, treating users as
    /// independent.
    pub fn avg_std_error(&self) -> f64 {
        let n = self.blocks as f64;
        let k = self.ser.len() as f64;
        (self.ser.iter().map(|p| p * (1.0 - p) / n).sum::<f64>()).sqrt() / k
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SerCurve {
    pub points: Vec<SerPoint>,
}

impl SerCurve {
    pub fn at(&self, snr_db: f64) -> Option<&SerPoint> {
        self.points.iter().find(|p| p.snr_db == snr_db)
    }
}

/// Simulates every SNR point of `cfg`.
pub fn run_ser(c: &Constellation, cfg: &SimConfig) -> Result<SerCurve> {
    let tables = DetectorTables::new(c, cfg)?;
    let k = c.num_users();
    let mut points = Vec::with_capacity(cfg.snr_db.len());
    for (s, &db) in cfg.snr_db.iter().enumerate() {
        let mut errors = vec![0u64; k];
        let mut done = 0usize;
        while done < cfg.blocks {
            let end = (done + CHUNK).min(cfg.blocks);
            let counts = par::map_ordered(done..end, |b| {
                let mut rng = substream(cfg.seed, block_stream(s, b));
                let (sent, detected) = simulate_block(c, &tables, s, &mut rng);
                sent.iter()
                    .zip(&detected)
                    .map(|(a, b)| (a != b) as u64)
                    .collect::<Vec<_>>()
            });
            for flags in counts {
                errors.iter_mut().zip(flags).for_each(|(e, f)| *e += f);
            }
            done = end;
            if let Some(stop) = cfg.early_stop {
                if errors.iter().all(|&e| e >= stop) {
                    break;
                }
            }
        }
        points.push(SerPoint::from_counts(db, done as u64, errors));
    }
    Ok(SerCurve { points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::qr_positive;
    use crate::manifolds::{random_constellation, ManifoldKind};
    use crate::rng::seeded;

    fn grassmann(t: usize, m: usize, sizes: &[usize], seed: u64) -> Constellation {
        random_constellation(ManifoldKind::Grassmann, t, m, sizes, &mut seeded(seed)).unwrap()
    }

    #[test]
    fn near_noiseless_detection_is_exact() {
        let c = grassmann(4, 1, &[2, 2], 1);
        let cfg = SimConfig::new(vec![120.0], 100, 2, 3);
        let tables = DetectorTables::new(&c, &cfg).unwrap();
        for b in 0..100 {
            let mut rng = substream(3, block_stream(0, b));
            let (sent, detected) = simulate_block(&c, &tables, 0, &mut rng);
            assert_eq!(sent, detected);
        }
    }

    #[test]
    fn zero_noise_prefers_the_truth() {
        let e = |i: usize| CMat::unit(3, 1, i, 0);
        let c = Constellation::new(3, 1, vec![vec![e(0), e(1)]]).unwrap();
        let cfg = SimConfig::new(vec![10.0], 1, 2, 0);
        let tables = DetectorTables::new(&c, &cfg).unwrap();
        let mut rng = seeded(5);
        let h = vec![complex_normal_matrix(&mut rng, 1, 2)];
        for sent in 0..2 {
            let y = receive(&c, &tables, 0, &[sent], &h, &CMat::zeros(3, 2));
            let m = tables.metrics(0, &y);
            assert!(m[sent] < m[1 - sent]);
        }
    }

    #[test]
    fn unitary_rotation_leaves_metrics_unchanged() {
        let c = grassmann(5, 2, &[2, 2], 2);
        let mut rng = seeded(6);
        let rotated = c
            .map_codewords(|_, _, x| x.matmul(&qr_positive(&complex_normal_matrix(&mut rng, 2, 2)).unwrap().0))
            .unwrap();
        let cfg = SimConfig::new(vec![8.0], 1, 3, 0);
        let (a, b) = (
            DetectorTables::new(&c, &cfg).unwrap(),
            DetectorTables::new(&rotated, &cfg).unwrap(),
        );
        let y = complex_normal_matrix(&mut rng, 5, 3);
        for (x, z) in a.metrics(0, &y).iter().zip(b.metrics(0, &y)) {
            assert!((x - z).abs() < 1e-10 * x.abs().max(1.0));
        }
    }

    #[test]
    fn detected_metric_never_exceeds_transmitted() {
        let c = grassmann(4, 1, &[4, 4], 3);
        let cfg = SimConfig::new(vec![0.0, 10.0], 1, 2, 0);
        let tables = DetectorTables::new(&c, &cfg).unwrap();
        let mut rng = seeded(8);
        for s in 0..2 {
            for _ in 0..200 {
                let (sent, y) = draw_block(&c, &tables, s, &mut rng);
                let m = tables.metrics(s, &y);
                let d = tables.detect(s, &y);
                assert!(m[d] <= m[c.linear_index(&sent)]);
            }
        }
    }

    #[test]
    fn single_codeword_never_errs() {
        let c = grassmann(3, 1, &[1, 1], 4);
        let curve = run_ser(&c, &SimConfig::new(SimConfig::default_snr_grid(), 50, 2, 1)).unwrap();
        assert_eq!(curve.points.len(), 11);
        assert!(curve.points.iter().all(|p| p.avg_ser == 0.0 && p.blocks == 50));
    }

    #[test]
    fn config_errors() {
        let c = grassmann(3, 1, &[2], 4);
        assert!(run_ser(&c, &SimConfig::new(vec![0.0], 0, 2, 1)).is_err());
        let mut cfg = SimConfig::new(vec![0.0], 10, 2, 1);
        cfg.beta = vec![1.0, 0.5];
        assert!(run_ser(&c, &cfg).is_err());
    }

    #[test]
    fn reproducible_and_averaged() {
        let c = grassmann(4, 1, &[4, 4], 5);
        let cfg = SimConfig::new(vec![0.0, 20.0], 2000, 2, 11);
        let a = run_ser(&c, &cfg).unwrap();
        let b = run_ser(&c, &cfg).unwrap();
        assert_eq!(a, b);
        for p in &a.points {
            assert_eq!(p.avg_ser, p.ser.iter().sum::<f64>() / 2.0);
            assert!(p.errors.iter().all(|&e| e <= p.blocks));
        }
        assert!(a.points[1].avg_ser < a.points[0].avg_ser);
    }

    #[test]
    fn early_stop_truncates_at_chunk_boundary() {
        let c = grassmann(4, 1, &[4, 4], 6);
        let mut cfg = SimConfig::new(vec![-10.0], 100_000, 1, 2);
        cfg.early_stop = Some(50);
        let p = &run_ser(&c, &cfg).unwrap().points[0];
        assert!(p.blocks < 100_000);
        assert_eq!(p.blocks as usize % CHUNK, 0);
        assert!(p.errors.iter().all(|&e| e >= 50));
    }

    #[test]
    fn unequal_user_powers() {
        let c = grassmann(4, 1, &[2, 2], 7);
        let mut cfg = SimConfig::new(vec![10.0], 4000, 2, 3);
        cfg.beta = vec![1.0, 0.01];
        let p = &run_ser(&c, &cfg).unwrap().points[0];
        assert!(p.ser[1] > p.ser[0]);
    }
}
