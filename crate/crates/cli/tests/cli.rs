use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ncmac::ConstellationFile;
use ncmac_core::manifolds::constraint_residual;
use ncmac_core::ManifoldKind;

fn ncmac(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ncmac"))
        .args(args)
        .current_dir(dir)
        .env("NCMAC_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn design_writes_feasible_file_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let o = ncmac(
        &["design", "--T", "5", "--M", "2", "--N", "3", "--K", "2", "--L", "4", "--manifold", "trace",
          "--cost", "delta_ub", "--seed", "7", "--max-iter", "20", "--out", "d.json",
          "--emit-plot-data", "plots"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("residual"));
    let f = ConstellationFile::load(&dir.path().join("d.json")).unwrap();
    assert_eq!(f.constellation.sizes(), vec![4, 4]);
    assert_eq!((f.header.t, f.header.m, f.header.n_rx, f.header.seed), (5, 2, 3, 7));
    assert!(constraint_residual(ManifoldKind::TRACE, &f.constellation) <= 1e-10);
    let trace = fs::read_to_string(dir.path().join("d.trace.csv")).unwrap();
    assert!(trace.starts_with("iteration,cost,h,gradnorm\n0,"));
    assert_eq!(trace.lines().count(), 22);
    assert!(dir.path().join("plots/cost.csv").exists());
}

#[test]
fn pep_design_on_grassmann_gives_unit_columns() {
    let dir = tempfile::tempdir().unwrap();
    let o = ncmac(
        &["design", "--T", "3", "--M", "1", "--N", "3", "--K", "2", "--bits", "2",
          "--manifold", "grassmann", "--cost", "pep_ub", "--max-iter", "10", "--out", "p.json"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let f = ConstellationFile::load(&dir.path().join("p.json")).unwrap();
    for (_, _, x) in f.constellation.blocks().iter() {
        assert!((x.norm() - 1.0).abs() <= 1e-10);
    }
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = ncmac(&["design", "--T", "2", "--M", "2", "--out", "x.json"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--T"));
    let o = ncmac(&["design", "--step0", "-1", "--out", "x.json"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = ncmac(&["design", "--manifold", "sphere", "--out", "x.json"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = ncmac(&["simulate", "--in", "missing.json"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    fs::write(dir.path().join("bad.json"), "{\"header\": 1}").unwrap();
    let o = ncmac(&["info", "--in", "bad.json"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("load error"));
}

#[test]
fn pep_without_full_diversity_warns_then_fails_numerically() {
    let dir = tempfile::tempdir().unwrap();
    let o = ncmac(
        &["design", "--T", "5", "--M", "2", "--L", "2", "--cost", "pep_ub", "--max-iter", "2", "--out", "p.json"],
        dir.path(),
    );
    assert!(stderr(&o).contains("warning"));
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn single_codeword_constellation_never_errs() {
    let dir = tempfile::tempdir().unwrap();
    let c = ncmac_core::optimizer::initial_constellation(ManifoldKind::Grassmann, 4, 2, &[1, 1], 3, 0).unwrap();
    ConstellationFile::new(c, 2, "grassmann", "delta_ub", 3, None)
        .save(&dir.path().join("one.json"))
        .unwrap();
    let o = ncmac(&["simulate", "--in", "one.json", "--snr", "0,10", "--blocks", "300"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = stdout(&o);
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "snr_db,blocks,errors_1,errors_2,ser_1,ser_2,avg_ser");
    assert_eq!(rows.len(), 3);
    assert!(rows[1..].iter().all(|r| r.ends_with(",0")));
}

#[test]
fn simulate_and_info_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let o = ncmac(
        &["design", "--T", "4", "--M", "1", "--L", "4", "--max-iter", "5", "--out", "d.json"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let sim = |out: &str| {
        let o = ncmac(
            &["simulate", "--in", "d.json", "--snr", "0:5:10", "--blocks", "500", "--seed", "4",
              "--out", out, "--emit-plot-data", "plots"],
            dir.path(),
        );
        assert!(o.status.success(), "{}", stderr(&o));
        fs::read(dir.path().join(out)).unwrap()
    };
    assert_eq!(sim("a.csv"), sim("b.csv"));
    for name in ["avg_ser.csv", "ser_user1.csv", "ser_user2.csv"] {
        assert!(dir.path().join("plots").join(name).exists());
    }

    let a = ncmac(&["info", "--in", "d.json"], dir.path());
    let b = ncmac(&["info", "--in", "d.json"], dir.path());
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = stdout(&a);
    assert!(text.contains("pep_ub"));
    assert!(text.contains("bound sqrt(T)*delta >= beta >= delta: holds"));
}

#[test]
fn gradcheck_passes_for_every_cost() {
    let dir = tempfile::tempdir().unwrap();
    for cost in ["pep_ub", "minmax_pep", "beta_ub", "delta_ub"] {
        let o = ncmac(
            &["gradcheck", "--T", "4", "--M", "1", "--L", "3", "--N", "2", "--cost", cost,
              "--manifold", "oblique", "--seed", "2", "--tol", "1e-3"],
            dir.path(),
        );
        assert!(o.status.success(), "{cost}: {}", stderr(&o));
        assert!(stdout(&o).starts_with("user,index,max_abs,max_rel,proj_max_abs,proj_max_rel\n"));
        assert_eq!(stdout(&o).lines().count(), 7);
    }
}

#[test]
fn help_documents_csv_columns() {
    let o = ncmac(&["--help"], Path::new("."));
    let text = stdout(&o);
    assert!(text.contains("snr_db,blocks,errors_1..errors_K,ser_1..ser_K,avg_ser"));
    assert!(text.contains("NCMAC_THREADS"));
}
