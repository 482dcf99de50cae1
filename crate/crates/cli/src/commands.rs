//! Subcommand implementations.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use ncmac_core::gradcheck::{check, FdReport, Step};
use ncmac_core::manifolds::constraint_residual;
use ncmac_core::optimizer::{self, initial_constellation, Design, OptimizerConfig};
use ncmac_core::sim::{run_ser, SerCurve, SimConfig};
use ncmac_core::{Constellation, Cost, CostFunction, ManifoldKind};

use crate::args::{parse_snr_grid, Command, DesignArgs, GradcheckArgs, InfoArgs, SimulateArgs};
use crate::file::ConstellationFile;
use crate::{info, sinks, Cli, CliError};

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Design(a) => design(&a).map(|_| ()),
        Command::Simulate(a) => simulate(&a).map(|_| ()),
        Command::Gradcheck(a) => gradcheck(&a).map(|_| ()),
        Command::Info(a) => info(&a).map(|_| ()),
    }
}

fn usage<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::Usage(msg.into()))
}

fn check_receivers(n_rx: usize) -> Result<(), CliError> {
    if n_rx == 0 {
        return usage("--N: need at least one receive antenna");
    }
    Ok(())
}

fn check_epsilon(eps: f64) -> Result<(), CliError> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return usage("--epsilon: must be finite and nonnegative");
    }
    Ok(())
}

fn warn_full_diversity(cost: &Cost, t: usize, k: usize, m: usize) {
    if cost.kind.requires_full_diversity() && t < (k + 1) * m {
        eprintln!(
            "ncmac: warning: {} needs T >= (K+1)M for full diversity (T={t}, K={k}, M={m}); \
             its pairwise determinants vanish",
            cost.kind
        );
    }
}

/// `<dir>/<stem>.trace.csv` next to a design output.
pub fn trace_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.trace.csv"))
}

fn plot_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub fn design(a: &DesignArgs) -> Result<Design, CliError> {
    let sizes = a.scenario.sizes()?;
    let (t, m, k) = (a.scenario.t, a.scenario.m, a.scenario.k);
    check_receivers(a.n_rx)?;
    check_epsilon(a.epsilon)?;
    if !(a.step0 > 0.0 && a.step0.is_finite()) {
        return usage("--step0: must be positive");
    }
    if a.max_iter == 0 {
        return usage("--max-iter: must be at least 1");
    }
    if a.restarts == 0 {
        return usage("--restarts: must be at least 1");
    }
    if !(a.tol >= 0.0) {
        return usage("--tol: must be nonnegative");
    }
    let cost = Cost::new(a.cost, a.n_rx).with_epsilon(a.epsilon);
    warn_full_diversity(&cost, t, k, m);
    let cfg = OptimizerConfig {
        step0: a.step0,
        max_iter: a.max_iter,
        restarts: a.restarts,
        rel_tol: a.tol,
        seed: a.seed,
        ..OptimizerConfig::default()
    };
    let result = optimizer::design(&cost, a.manifold, t, m, &sizes, &cfg)?;
    let best = &result.best;
    let residual = constraint_residual(a.manifold, &best.constellation);

    let file = ConstellationFile::new(
        best.constellation.clone(),
        a.n_rx,
        a.manifold.name(),
        a.cost.name(),
        a.seed,
        Some(best.final_cost()),
    );
    file.save(&a.out)?;
    let trace = trace_path(&a.out);
    sinks::to_file(&trace, |f| sinks::write_trace(f, &best.rows))?;
    if let Some(dir) = &a.emit_plot_data {
        plot_dir(dir)?;
        sinks::write_curve(
            &dir.join("cost.csv"),
            best.rows.iter().map(|r| (r.iteration as f64, r.cost)),
        )?;
    }

    for (r, (f0, f1, term)) in result.restarts.iter().enumerate() {
        println!("restart {}: {f0} -> {f1} ({})", r + 1, term.name());
    }
    println!(
        "{} on {}: final cost {} after {} iterations (restart {}), residual {:e}",
        a.cost,
        a.manifold,
        best.final_cost(),
        best.iterations(),
        result.best_restart + 1,
        residual
    );
    println!("wrote {} and {}", a.out.display(), trace.display());
    Ok(result)
}

pub fn simulate(a: &SimulateArgs) -> Result<SerCurve, CliError> {
    let file = ConstellationFile::load(&a.input)?;
    let n_rx = a.n_rx.unwrap_or(file.header.n_rx);
    check_receivers(n_rx)?;
    if a.blocks == 0 {
        return usage("--blocks: must be at least 1");
    }
    if a.early_stop == Some(0) {
        return usage("--early-stop: must be at least 1");
    }
    let mut cfg = SimConfig::new(parse_snr_grid(&a.snr)?, a.blocks, n_rx, a.seed);
    cfg.early_stop = a.early_stop;
    let c = &file.constellation;
    let curve = run_ser(c, &cfg)?;
    let k = c.num_users();
    match &a.out {
        Some(path) => sinks::to_file(path, |f| sinks::write_ser(f, &curve, k))?,
        None => sinks::write_ser(io::stdout().lock(), &curve, k)?,
    }
    if let Some(dir) = &a.emit_plot_data {
        plot_dir(dir)?;
        sinks::write_curve(
            &dir.join("avg_ser.csv"),
            curve.points.iter().map(|p| (p.snr_db, p.avg_ser)),
        )?;
        for u in 0..k {
            sinks::write_curve(
                &dir.join(format!("ser_user{}.csv", u + 1)),
                curve.points.iter().map(|p| (p.snr_db, p.ser[u])),
            )?;
        }
    }
    Ok(curve)
}

fn gradcheck_input(a: &GradcheckArgs) -> Result<(Constellation, ManifoldKind, usize), CliError> {
    match &a.input {
        Some(path) => {
            let file = ConstellationFile::load(path)?;
            let manifold = match a.manifold {
                Some(mk) => mk,
                None => ManifoldKind::from_name(&file.header.manifold).ok_or_else(|| {
                    CliError::Load(format!("unknown manifold {:?} in file", file.header.manifold))
                })?,
            };
            let n_rx = a.n_rx.unwrap_or(file.header.n_rx);
            Ok((file.constellation, manifold, n_rx))
        }
        None => {
            let sizes = a.scenario.sizes()?;
            let manifold = a.manifold.unwrap_or(ManifoldKind::Grassmann);
            let c = initial_constellation(manifold, a.scenario.t, a.scenario.m, &sizes, a.seed, 0)?;
            Ok((c, manifold, a.n_rx.unwrap_or(2)))
        }
    }
}

pub fn gradcheck(a: &GradcheckArgs) -> Result<FdReport, CliError> {
    let (c, manifold, n_rx) = gradcheck_input(a)?;
    check_receivers(n_rx)?;
    check_epsilon(a.epsilon)?;
    if !(a.step > 0.0 && a.step.is_finite()) {
        return usage("--step: must be positive");
    }
    let cost = Cost::new(a.cost, n_rx).with_epsilon(a.epsilon);
    warn_full_diversity(&cost, c.t(), c.num_users(), c.m());
    let (value, analytic) = cost.value_and_gradient(&c)?;
    let step = Step::Relative {
        relative: a.step,
        floor: a.step * 0.1,
    };
    let report = check(|x| cost.value(x), &analytic, manifold, &c, step)?;
    match &a.out {
        Some(path) => sinks::to_file(path, |f| sinks::write_gradcheck(f, &report))?,
        None => sinks::write_gradcheck(io::stdout().lock(), &report)?,
    }
    let rel = report.projected_max_rel();
    eprintln!(
        "{} on {}: value {value}, projected max rel error {rel:e}, ambient {:e}, invalid entries {}",
        a.cost,
        manifold,
        report.max_rel(),
        report.invalid_entries
    );
    if !report.is_valid() {
        return Err(CliError::Numerical(format!(
            "{} finite-difference entries could not be evaluated",
            report.invalid_entries
        )));
    }
    if !(rel <= a.tol) {
        return Err(CliError::Numerical(format!(
            "projected relative error {rel:e} exceeds --tol {:e}",
            a.tol
        )));
    }
    Ok(report)
}

pub fn info(a: &InfoArgs) -> Result<String, CliError> {
    let file = ConstellationFile::load(&a.input)?;
    let n_rx = a.n_rx.unwrap_or(file.header.n_rx);
    check_receivers(n_rx)?;
    check_epsilon(a.epsilon)?;
    let report = info::evaluate(&file.constellation, n_rx, a.epsilon)?;
    let text = info::render(&file.header, n_rx, &report);
    io::stdout()
        .lock()
        .write_all(text.as_bytes())
        .map_err(|e| CliError::io(Path::new("<stdout>"), e))?;
    Ok(text)
}
