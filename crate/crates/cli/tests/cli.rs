//! End-to-end runs of the `ruelle` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

fn ruelle(args: &[&str], cfg: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ruelle"))
        .args(args)
        .arg("--config")
        .arg(cfg)
        .output()
        .unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn verify_on_doubling_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        dir.path(),
        "d.cfg",
        "system.name = doubling\nrun.depth = 8\nrun.grid_size = 65\n",
    );
    let out = ruelle(&["verify"], &cfg);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let text = stdout(&out);
    assert!(text.lines().last().unwrap().ends_with(", 0 failed"));
    assert!(!text.contains("FAIL"));
}

#[test]
fn gauss_below_threshold_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "g.cfg", "system.name = gauss\n");
    let out = ruelle(&["pressure", "--t", "0.4"], &cfg);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("DIVERGENT"));
}

#[test]
fn bad_configuration_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    for body in [
        "system.name = doubling\nrun.grid_size = 1\n",
        "system.name = nowhere\n",
        "system.name = doubling\nrun.colour = blue\n",
        "system.name = linear_cantor\nsystem.N = 2\n",
    ] {
        let cfg = config(dir.path(), "bad.cfg", body);
        let out = ruelle(&["pressure"], &cfg);
        assert_eq!(out.status.code(), Some(2), "{body}");
    }
    let missing = dir.path().join("absent.cfg");
    assert_eq!(ruelle(&["pressure"], &missing).status.code(), Some(2));
}

#[test]
fn unknown_command_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), "d.cfg", "system.name = doubling\n");
    assert_eq!(ruelle(&["entropy"], &cfg).status.code(), Some(2));
}

#[test]
fn dimension_of_middle_thirds_cantor_set() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        dir.path(),
        "c.cfg",
        "system.name = linear_cantor\nsystem.N = 2\nsystem.r = 3\nrun.grid_size = 65\n",
    );
    let csv = dir.path().join("dim.csv");
    let out = ruelle(&["dimension", "--out", csv.to_str().unwrap()], &cfg);
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "s_hat,t_lo,t_hi,pressure_lower_at_s,pressure_upper_at_s"
    );
    let s: f64 = lines
        .next()
        .unwrap()
        .split(',')
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert!((s - 2f64.ln() / 3f64.ln()).abs() < 1e-6);
}

#[test]
fn measure_writes_conformal_and_invariant_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        dir.path(),
        "d.cfg",
        "system.name = golden_cantor\nrun.depth = 6\nrun.grid_size = 65\n",
    );
    let csv = dir.path().join("mu.csv");
    let out = ruelle(&["measure", "--out", csv.to_str().unwrap()], &cfg);
    assert_eq!(out.status.code(), Some(0));
    // Golden weights are exact for both φ and its normalization: h ≡ 1.
    let tv: f64 = stdout(&out)
        .trim_end()
        .rsplit("tv_phi_psi=")
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert!(tv < 1e-12, "{tv}");
    for path in [csv.clone(), dir.path().join("mu.invariant.csv")] {
        let text = fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "word,representative,weight");
        let total: f64 = lines
            .map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap())
            .sum();
        assert!((total - 1.0).abs() < 1e-12, "{}: {total}", path.display());
    }
}

#[test]
fn curve_overrides_and_schema() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        dir.path(),
        "d.cfg",
        "system.name = doubling\nrun.grid_size = 33\n",
    );
    let out = ruelle(
        &[
            "curve",
            "--t-min",
            "0",
            "--t-max",
            "1",
            "--t-steps",
            "5",
            "--depth",
            "6",
        ],
        &cfg,
    );
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,depth,lower,point,upper");
    assert_eq!(lines.len(), 6);
    for (k, line) in lines[1..].iter().enumerate() {
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        let t = k as f64 / 4.0;
        assert_eq!(cols[0], t);
        assert_eq!(cols[1], 6.0);
        assert!((cols[3] - (1.0 - t) * 2f64.ln()).abs() < 1e-12);
    }
}

#[test]
fn output_files_do_not_depend_on_threads() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(
        dir.path(),
        "p.cfg",
        "system.name = perturbed_doubling\nsystem.epsilon = 0.05\nrun.depth = 8\nrun.grid_size = 129\n",
    );
    for command in ["curve", "eigen", "measure", "gibbs"] {
        let mut bodies = Vec::new();
        for threads in ["1", "3"] {
            let path = dir.path().join(format!("{command}-{threads}.csv"));
            let out = ruelle(
                &[
                    command,
                    "--threads",
                    threads,
                    "--out",
                    path.to_str().unwrap(),
                ],
                &cfg,
            );
            assert_eq!(out.status.code(), Some(0), "{command}");
            bodies.push(fs::read(&path).unwrap());
        }
        assert_eq!(bodies[0], bodies[1], "{command}");
    }
}
