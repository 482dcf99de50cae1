//! Command-line schema and scenario parsing.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use ncmac_core::{CostKind, ManifoldKind};

use crate::CliError;

const CSV_SCHEMA: &str = "\
CSV outputs (column order is fixed):
  simulate        snr_db,blocks,errors_1..errors_K,ser_1..ser_K,avg_ser
  design trace    iteration,cost,h,gradnorm   (written to <out>.trace.csv)
  gradcheck       user,index,max_abs,max_rel,proj_max_abs,proj_max_rel
  plot data       x,y   (one file per curve under --emit-plot-data)

Environment:
  NCMAC_THREADS   worker threads for cost evaluation and simulation

Exit codes: 0 success, 2 usage/configuration/load error, 3 numerical failure.";

#[derive(Debug, Parser)]
#[command(name = "ncmac", version, about, after_long_help = CSV_SCHEMA, after_help = CSV_SCHEMA)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimize a constellation by Riemannian gradient descent.
    Design(DesignArgs),
    /// Monte Carlo symbol error rate of a saved constellation.
    Simulate(SimulateArgs),
    /// Compare analytic gradients with central finite differences.
    Gradcheck(GradcheckArgs),
    /// Report every applicable metric of a saved constellation.
    Info(InfoArgs),
}

fn parse_manifold(s: &str) -> Result<ManifoldKind, String> {
    ManifoldKind::from_name(s)
        .ok_or_else(|| format!("unknown manifold {s:?} (grassmann, oblique, trace, trace-sum)"))
}

fn parse_cost(s: &str) -> Result<CostKind, String> {
    CostKind::from_name(s)
        .ok_or_else(|| format!("unknown cost {s:?} (pep_ub, minmax_pep, beta_ub, delta_ub)"))
}

/// Dimensions of a fresh constellation.
#[derive(Debug, Clone, Args)]
pub struct Scenario {
    /// Coherence time.
    #[arg(long = "T", default_value_t = 5)]
    pub t: usize,
    /// Transmit antennas per user.
    #[arg(long = "M", default_value_t = 2)]
    pub m: usize,
    /// Number of users.
    #[arg(long = "K", default_value_t = 2)]
    pub k: usize,
    /// Codebook sizes: one value for all users or one per user [default: 16].
    #[arg(long = "L", value_delimiter = ',', conflicts_with = "bits")]
    pub l: Vec<usize>,
    /// Bits per codeword, L = 2^bits; one value or one per user.
    #[arg(long, value_delimiter = ',')]
    pub bits: Vec<u32>,
}

impl Scenario {
    pub const DEFAULT_L: usize = 16;

    /// Validated per-user codebook sizes.
    pub fn sizes(&self) -> Result<Vec<usize>, CliError> {
        let usage = |m: String| Err(CliError::Usage(m));
        if self.k == 0 {
            return usage("--K: need at least one user".into());
        }
        if self.m == 0 {
            return usage("--M: need at least one antenna".into());
        }
        if self.t <= self.m {
            return usage(format!("--T: coherence time {} must exceed --M {}", self.t, self.m));
        }
        let (flag, raw): (&str, Vec<usize>) = if !self.bits.is_empty() {
            let mut out = Vec::with_capacity(self.bits.len());
            for &b in &self.bits {
                if b > 24 {
                    return usage(format!("--bits: {b} bits per codeword is too many"));
                }
                out.push(1usize << b);
            }
            ("--bits", out)
        } else if !self.l.is_empty() {
            ("--L", self.l.clone())
        } else {
            ("--L", vec![Self::DEFAULT_L])
        };
        let sizes = match raw.len() {
            1 => vec![raw[0]; self.k],
            n if n == self.k => raw,
            n => return usage(format!("{flag}: got {n} values for --K {} users", self.k)),
        };
        if sizes.contains(&0) {
            return usage(format!("{flag}: codebook sizes must be positive"));
        }
        Ok(sizes)
    }
}

#[derive(Debug, Args)]
pub struct DesignArgs {
    #[command(flatten)]
    pub scenario: Scenario,
    /// Receive antennas.
    #[arg(long = "N", default_value_t = 3)]
    pub n_rx: usize,
    #[arg(long, default_value = "trace", value_parser = parse_manifold)]
    pub manifold: ManifoldKind,
    #[arg(long, default_value = "delta_ub", value_parser = parse_cost)]
    pub cost: CostKind,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Initial and maximum step size h.
    #[arg(long, default_value_t = 0.1)]
    pub step0: f64,
    #[arg(long, default_value_t = 2000)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1)]
    pub restarts: usize,
    /// Smoothing exponent of beta_ub.
    #[arg(long, default_value_t = ncmac_core::proxy::DEFAULT_BETA_EPSILON)]
    pub epsilon: f64,
    /// Relative-improvement stopping threshold.
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    /// Constellation file to write.
    #[arg(long)]
    pub out: PathBuf,
    /// Directory receiving one CSV per curve.
    #[arg(long)]
    pub emit_plot_data: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Constellation file.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Receive antennas [default: the value stored in the file].
    #[arg(long = "N")]
    pub n_rx: Option<usize>,
    /// SNR grid in dB: `start:step:stop` or a comma-separated list.
    #[arg(long, default_value = "0:2:20")]
    pub snr: String,
    /// Blocks per SNR point.
    #[arg(long, default_value_t = 10_000)]
    pub blocks: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Stop an SNR point once every user has this many errors.
    #[arg(long, num_args = 0..=1, default_missing_value = "500")]
    pub early_stop: Option<u64>,
    /// SER CSV to write [default: stdout].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Directory receiving one CSV per curve.
    #[arg(long)]
    pub emit_plot_data: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    /// Constellation file; a random one is drawn from the scenario otherwise.
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub scenario: Scenario,
    /// Receive antennas [default: file value, else 2].
    #[arg(long = "N")]
    pub n_rx: Option<usize>,
    /// Manifold of a random constellation [default: file value, else grassmann].
    #[arg(long, value_parser = parse_manifold)]
    pub manifold: Option<ManifoldKind>,
    #[arg(long, default_value = "delta_ub", value_parser = parse_cost)]
    pub cost: CostKind,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = ncmac_core::proxy::DEFAULT_BETA_EPSILON)]
    pub epsilon: f64,
    /// Relative finite-difference step.
    #[arg(long, default_value_t = 1e-6)]
    pub step: f64,
    /// Largest accepted projected relative error.
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
    /// Per-codeword CSV to write [default: stdout].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InfoArgs {
    /// Constellation file.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Receive antennas [default: the value stored in the file].
    #[arg(long = "N")]
    pub n_rx: Option<usize>,
    #[arg(long, default_value_t = ncmac_core::proxy::DEFAULT_BETA_EPSILON)]
    pub epsilon: f64,
}

/// Parses `start:step:stop` (inclusive) or `a,b,c`.
pub fn parse_snr_grid(s: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Usage(format!("--snr: cannot parse {s:?}"));
    let num = |x: &str| x.trim().parse::<f64>().map_err(|_| bad());
    let parts: Vec<&str> = s.split(':').collect();
    let grid = match parts.as_slice() {
        [a, step, b] => {
            let (a, step, b) = (num(a)?, num(step)?, num(b)?);
            if !(step > 0.0) || !(b >= a) {
                return Err(CliError::Usage(format!(
                    "--snr: range {s:?} needs a positive step and start <= stop"
                )));
            }
            let n = ((b - a) / step + 1e-9).floor() as usize;
            (0..=n).map(|i| a + i as f64 * step).collect()
        }
        [_] => s.split(',').map(num).collect::<Result<Vec<_>, _>>()?,
        _ => return Err(bad()),
    };
    if grid.is_empty() || grid.iter().any(|x| !x.is_finite()) {
        return Err(bad());
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario(t: usize, m: usize, k: usize, l: &[usize], bits: &[u32]) -> Scenario {
        Scenario {
            t,
            m,
            k,
            l: l.to_vec(),
            bits: bits.to_vec(),
        }
    }

    #[test]
    fn sizes_broadcast_and_bits() {
        assert_eq!(scenario(5, 2, 2, &[], &[]).sizes().unwrap(), vec![16, 16]);
        assert_eq!(scenario(5, 2, 2, &[4, 8], &[]).sizes().unwrap(), vec![4, 8]);
        assert_eq!(scenario(5, 2, 3, &[], &[3]).sizes().unwrap(), vec![8, 8, 8]);
    }

    #[test]
    fn sizes_reject_bad_input() {
        let msg = |s: Scenario| s.sizes().unwrap_err().to_string();
        assert!(msg(scenario(2, 2, 2, &[], &[])).contains("--T"));
        assert!(msg(scenario(5, 2, 2, &[4, 4, 4], &[])).contains("--L"));
        assert!(msg(scenario(5, 2, 2, &[0], &[])).contains("--L"));
    }

    #[test]
    fn snr_grids() {
        let g = parse_snr_grid("0:2:20").unwrap();
        assert_eq!(g.len(), 11);
        assert_eq!(g[10], 20.0);
        assert_eq!(parse_snr_grid("12,16").unwrap(), vec![12.0, 16.0]);
        assert_eq!(parse_snr_grid("7").unwrap(), vec![7.0]);
        assert!(parse_snr_grid("1:0:3").is_err());
        assert!(parse_snr_grid("a,b").is_err());
        assert!(parse_snr_grid("1:2").is_err());
    }

    #[test]
    fn schema_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
