use std::fs;
use std::io::BufReader;
use std::path::Path;

use nematic_core::io::read_trajectory;
use nematic_core::runner::{exit_code, offline_norms, run, RunConfig, EXIT_IO, EXIT_OK, EXIT_SOLVER};
use nematic_core::NormConfig;

fn config(extra: &str) -> RunConfig {
    RunConfig::from_toml(&format!("[grid]\nn = 9\n[time]\nhorizon = 0.02\nsteps = 4\n{extra}")).unwrap()
}

fn csv_rows(path: &Path) -> Vec<Vec<f64>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap_or(f64::NAN)).collect())
        .collect()
}

#[test]
fn equilibrium_run_writes_vanishing_norms() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("windows = 2\n[scenario]\nkind = \"equilibrium\"\n");
    let s = run(&cfg, dir.path()).unwrap();
    assert_eq!(s.exit_code, EXIT_OK);
    assert!(s.converged && s.flags.is_empty());
    assert_eq!(s.windows_completed, 2);
    let rows = csv_rows(&dir.path().join("norms.csv"));
    assert_eq!(rows.len(), 2);
    for row in rows {
        assert!(row[1..].iter().all(|v| v.abs() < 1e-10), "{row:?}");
    }
    for name in ["manifest.toml", "picard_trace.csv", "final_slice.csv", "summary.toml"] {
        assert!(dir.path().join(name).is_file(), "{name}");
    }
    let manifest = RunConfig::load(&dir.path().join("manifest.toml")).unwrap();
    assert_eq!(manifest.output.dir, dir.path());
    assert_eq!(manifest.grid, cfg.grid);
}

#[test]
fn dump_reproduces_in_run_norms() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("windows = 2\n[output]\ndump_stride = 1\n");
    let s = run(&cfg, dir.path()).unwrap();
    assert_eq!(s.exit_code, EXIT_OK);
    let path = dir.path().join("trajectory.nmf");
    let traj = read_trajectory(&mut BufReader::new(fs::File::open(&path).unwrap())).unwrap();
    assert_eq!(traj.steps, 8);
    assert!((traj.dt - 0.005).abs() < 1e-15);
    let offline = offline_norms(&path, &NormConfig::default(), None).unwrap();
    let rows = csv_rows(&dir.path().join("norms.csv"));
    let in_run = rows.last().unwrap();
    assert!((offline.h_total - in_run[8]).abs() <= 1e-12 * in_run[8], "{} vs {}", offline.h_total, in_run[8]);
    assert!((offline.h_total - s.final_h_total).abs() <= 1e-12 * s.final_h_total);

    // coarser stride still reads back
    let dir2 = tempfile::tempdir().unwrap();
    run(&config("windows = 2\n[output]\ndump_stride = 2\n"), dir2.path()).unwrap();
    let traj = read_trajectory(&mut BufReader::new(fs::File::open(dir2.path().join("trajectory.nmf")).unwrap())).unwrap();
    assert_eq!(traj.steps, 4);
    assert!((traj.dt - 0.01).abs() < 1e-15);
}

#[test]
fn repeated_runs_are_bitwise_identical() {
    let read = |cfg: &RunConfig| {
        let dir = tempfile::tempdir().unwrap();
        run(cfg, dir.path()).unwrap();
        ["norms.csv", "picard_trace.csv", "final_slice.csv"].map(|f| fs::read(dir.path().join(f)).unwrap())
    };
    let cfg = config("");
    let a = read(&cfg);
    assert_eq!(a, read(&cfg));
    assert_eq!(a, read(&config("[solver]\nconcurrent = false\n")));
}

#[test]
fn diverging_run_reports_its_trace() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig::from_toml(
        "[grid]\nn = 13\n[time]\nhorizon = 5.0\nsteps = 32\n[scenario]\nkind = \"strong_twist\"\n[solver]\nmax_sweeps = 8\n",
    )
    .unwrap();
    let s = run(&cfg, dir.path()).unwrap();
    assert_eq!(s.exit_code, EXIT_SOLVER);
    assert!(!s.converged);
    assert!(!s.failure.is_empty());
    let rows = csv_rows(&dir.path().join("picard_trace.csv"));
    assert!(rows.len() >= 2);
    assert!(rows.iter().filter_map(|r| r.get(5)).any(|&ratio| ratio >= 1.0), "{rows:?}");
    assert!(dir.path().join("final_slice.csv").is_file());
    let summary = fs::read_to_string(dir.path().join("summary.toml")).unwrap();
    assert!(summary.contains("exit_code = 3"));
}

#[test]
fn unwritable_output_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, b"x").unwrap();
    let err = run(&config(""), &blocker.join("out")).unwrap_err();
    assert_eq!(exit_code(&err), EXIT_IO);
}
