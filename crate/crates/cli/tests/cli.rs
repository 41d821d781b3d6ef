use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn nematic(args: &[&str], env_dir: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_nematic"));
    cmd.args(args).env_remove("NEMATIC_OUTPUT_DIR");
    if let Some(d) = env_dir {
        cmd.env("NEMATIC_OUTPUT_DIR", d);
    }
    cmd.output().unwrap()
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_owned()
}

const SMALL: &str = "[grid]\nn = 9\n[time]\nhorizon = 0.02\nsteps = 4\n[output]\ndump_stride = 1\n";

#[test]
fn successful_run_and_offline_norms() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "small.toml", SMALL);
    let out = tmp.path().join("out");
    let o = nematic(&["run", &cfg, "--output-dir", out.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("converged=true"));

    let o = nematic(&["norms", out.join("trajectory.nmf").to_str().unwrap(), "--reference", "0,0,1"], None);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8_lossy(&o.stdout);
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("time,sup_proxy_u"));
    let offline: f64 = lines.next().unwrap().rsplit(',').next().unwrap().parse().unwrap();
    let norms = fs::read_to_string(out.join("norms.csv")).unwrap();
    let in_run: f64 = norms.lines().last().unwrap().rsplit(',').next().unwrap().parse().unwrap();
    assert!((offline - in_run).abs() <= 1e-12 * in_run);

    let o = nematic(&["validate", &cfg], None);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("h0="));
}

#[test]
fn environment_overrides_config_but_not_flag() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "small.toml", &format!("{SMALL}dir = \"{}\"\n", tmp.path().join("cfgdir").display()));
    let env_dir = tmp.path().join("envdir");
    assert_eq!(nematic(&["run", &cfg], Some(&env_dir)).status.code(), Some(0));
    assert!(env_dir.join("summary.toml").is_file());
    assert!(!tmp.path().join("cfgdir").exists());
    let flag_dir = tmp.path().join("flagdir");
    let o = nematic(&["run", &cfg, "--output-dir", flag_dir.to_str().unwrap()], Some(&env_dir));
    assert_eq!(o.status.code(), Some(0));
    assert!(flag_dir.join("summary.toml").is_file());
    assert_eq!(nematic(&["run", &cfg], None).status.code(), Some(0));
    assert!(tmp.path().join("cfgdir").join("summary.toml").is_file());
}

#[test]
fn config_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    for (i, body) in ["[grid]\nn = 3\n", "[scenario]\nkind = \"spiral\"\n", "[grid]\nbogus = 1\n", "not toml ["]
        .iter()
        .enumerate()
    {
        let cfg = write_config(tmp.path(), &format!("bad{i}.toml"), body);
        assert_eq!(nematic(&["validate", &cfg], None).status.code(), Some(2), "{body}");
        let out = tmp.path().join(format!("out{i}"));
        assert_eq!(nematic(&["run", &cfg, "--output-dir", out.to_str().unwrap()], None).status.code(), Some(2));
    }
}

#[test]
fn solver_failure_exits_3_with_artifacts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "twist.toml",
        "[grid]\nn = 13\n[time]\nhorizon = 5.0\nsteps = 32\n[scenario]\nkind = \"strong_twist\"\n[solver]\nmax_sweeps = 8\n",
    );
    let out = tmp.path().join("out");
    let o = nematic(&["run", &cfg, "--output-dir", out.to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(3));
    let trace = fs::read_to_string(out.join("picard_trace.csv")).unwrap();
    assert!(trace.lines().count() > 2);
    assert!(out.join("summary.toml").is_file());
}

#[test]
fn io_errors_exit_4() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("missing.toml");
    assert_eq!(nematic(&["run", missing.to_str().unwrap()], None).status.code(), Some(4));
    assert_eq!(nematic(&["norms", missing.to_str().unwrap()], None).status.code(), Some(4));
    let cfg = write_config(tmp.path(), "small.toml", SMALL);
    let blocker = tmp.path().join("blocker");
    fs::write(&blocker, b"x").unwrap();
    let o = nematic(&["run", &cfg, "--output-dir", blocker.join("out").to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(4));
}
