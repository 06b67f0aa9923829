//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on failure.
//!
//! Runs with `harness = false`, so `cargo test` executes `main` directly.

use std::io::Write as _;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use ruelle_core::measures::{
    build_eigenmeasure_with, default_test_functions, gibbs_verify, invariance_verify,
    invariant_measure, CylinderMeasure, MeasureOptions,
};
use ruelle_core::potentials::bowen_constants;
use ruelle_core::pressure::{
    bowen_solve, iterate_identity_check, linspace, pressure_at, pressure_curve,
};
use ruelle_core::transfer::{
    fundamental_equation_check, normalization_defect, normalize_potential, solve_eigen,
};
use ruelle_core::{
    builtin_system, EigenData, GridFunction, Potential, SystemSpec, TruncationPolicy,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

const GRID: usize = 257;
const TRUNC: f64 = 1e-10;
const TIME_LIMIT: Duration = Duration::from_secs(60);

fn system(name: &str, params: &[f64]) -> SystemSpec {
    builtin_system(name, params).expect("catalog system")
}

fn catalog() -> Vec<SystemSpec> {
    vec![
        system("doubling", &[]),
        system("linear_cantor", &[2.0, 3.0]),
        system("golden_cantor", &[]),
        system("perturbed_doubling", &[0.05]),
        system("gauss", &[]),
    ]
}

fn trunc() -> TruncationPolicy {
    TruncationPolicy::new(TRUNC)
}

/// Geometric parameters exercised on `sys`; the Gauss family diverges for t ≤ 1/2.
fn parameters(sys: &SystemSpec) -> &'static [f64] {
    if sys.is_countable() {
        &[0.75, 1.0]
    } else {
        &[0.0, 0.5, 1.0]
    }
}

fn eigen(sys: &SystemSpec, pot: &Potential) -> Result<EigenData, String> {
    solve_eigen(sys, pot, GRID, 1e-10, 10_000, &trunc()).map_err(|e| format!("{}: {e}", sys.name))
}

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// The depth-`n` conformal measure normalized with the point estimate `P̂`.
fn conformal(sys: &SystemSpec, pot: &Potential, n: usize) -> Result<CylinderMeasure, String> {
    let p = pressure_at(sys, pot, n, GRID, &trunc()).map_err(|e| e.to_string())?;
    let opts = MeasureOptions {
        grid_size: GRID,
        trunc: trunc(),
        ..MeasureOptions::default()
    };
    build_eigenmeasure_with(sys, pot, n, p.point, &opts).map_err(|e| e.to_string())
}

fn invariant(sys: &SystemSpec, pot: &Potential, n: usize) -> Result<CylinderMeasure, String> {
    let mu = conformal(sys, pot, n)?;
    let eig = eigen(sys, pot)?;
    invariant_measure(&mu, &eig.h).map_err(|e| e.to_string())
}

fn doubling_oracle() -> Outcome {
    let d = system("doubling", &[]);
    let zero = Potential::geometric(0.0);
    let p = pressure_at(&d, &zero, 10, GRID, &trunc()).map_err(|e| e.to_string())?;
    let p_err = (p.point - 2f64.ln())
        .abs()
        .max((p.lower - 2f64.ln()).abs())
        .max((p.upper - 2f64.ln()).abs());
    let eig = eigen(&d, &zero)?;
    let l_err = (eig.lambda - 2.0)
        .abs()
        .max((eig.lambda_best() - 2.0).abs());
    let h_err = eig
        .h
        .values()
        .iter()
        .fold(0.0f64, |m, v| m.max((v - 1.0).abs()));
    ensure(
        p_err < 1e-12 && l_err < 1e-9 && h_err < 1e-9,
        format!("|P-log2|={p_err:.2e} |lambda-2|={l_err:.2e} sup|h-1|={h_err:.2e}"),
    )
}

fn bowen_root(sys: &SystemSpec, target: f64, straddle: bool) -> Outcome {
    let sol = bowen_solve(sys, 0.0, 2.0, 1e-10, 12, 65, &trunc()).map_err(|e| e.to_string())?;
    let err = (sol.s_hat - target).abs();
    let (lo, hi) = (sol.at_root.lower, sol.at_root.upper);
    let straddles = lo <= 1e-9 && hi >= -1e-9;
    ensure(
        err < 1e-6 && (!straddle || straddles),
        format!(
            "s_hat={:.10} |err|={err:.2e} bracket=[{lo:.2e}, {hi:.2e}]",
            sol.s_hat
        ),
    )
}

fn middle_thirds() -> Outcome {
    bowen_root(
        &system("linear_cantor", &[2.0, 3.0]),
        2f64.ln() / 3f64.ln(),
        true,
    )
}

fn golden() -> Outcome {
    bowen_root(&system("golden_cantor", &[]), 0.6942419136, false)
}

fn gauss_kuzmin() -> Outcome {
    let g = system("gauss", &[]);
    let pot = Potential::geometric(1.0);
    let eig = eigen(&g, &pot)?;
    let l_err = (eig.lambda_best() - 1.0).abs();
    let grid = *eig.h.grid();
    let h_err = (0..grid.len()).fold(0.0f64, |m, k| {
        let x = grid.node(k);
        m.max((eig.h.values()[k] - 1.0 / (2f64.ln() * (1.0 + x))).abs())
    });
    let m = invariant(&g, &pot, 12)?;
    let first = m
        .cylinder_masses(1)
        .first()
        .map(|c| c.1)
        .ok_or("no depth-1 cylinders")?;
    let mass_err = (first - (4.0f64 / 3.0).log2()).abs();
    ensure(
        l_err < 1e-6 && h_err < 1e-3 && mass_err < 1e-3,
        format!("|lambda-1|={l_err:.2e} sup|h-h*|={h_err:.2e} |m[1/2,1]-log2(4/3)|={mass_err:.2e}"),
    )
}

fn normalization() -> Outcome {
    let mut worst_defect = 0.0f64;
    let mut worst_fundamental = 0.0f64;
    for sys in catalog() {
        for &t in parameters(&sys) {
            let pot = Potential::geometric(t);
            let eig = eigen(&sys, &pot)?;
            let psi =
                normalize_potential(&sys, &pot, &eig).map_err(|e| format!("{}: {e}", sys.name))?;
            let grid = *eig.h.grid();
            worst_defect = worst_defect
                .max(normalization_defect(&sys, &psi, grid).map_err(|e| e.to_string())?);
            for f in [|_: f64| 1.0, |x: f64| x, |x: f64| x * x] {
                let f = GridFunction::from_fn(grid, f);
                for n in 1..=4 {
                    let gap = fundamental_equation_check(&sys, &pot, &eig, &f, n)
                        .map_err(|e| e.to_string())?;
                    worst_fundamental = worst_fundamental.max(gap);
                }
            }
        }
    }
    ensure(
        worst_defect < 1e-6 && worst_fundamental <= 1e-5,
        format!("sup|L_psi 1-1|={worst_defect:.2e} fundamental={worst_fundamental:.2e}"),
    )
}

fn gibbs() -> Outcome {
    let pd = system("perturbed_doubling", &[0.05]);
    let pot = Potential::geometric(1.0);
    let depth = 10;
    let mu = conformal(&pd, &pot, depth)?;
    let p = mu.pressure_used;
    let mut ok = true;
    let mut detail = String::from("perturbed:");
    // The default 33-point probe is cross-checked with a 129-point one.
    for probe in [33, 129] {
        let k =
            bowen_constants(&pd, &pot, depth, &pd.hull.probe(probe)).map_err(|e| e.to_string())?;
        let report = gibbs_verify(&pd, &pot, &mu, &k, p).map_err(|e| e.to_string())?;
        ok &= report.levels.len() == depth && report.passed();
        detail.push_str(&format!(
            " probe={probe} C_hat={:.4} K_10={:.4} ok={}",
            report.c_hat,
            k.require(depth).map_err(|e| e.to_string())?,
            report.passed()
        ));
    }
    for name in ["doubling", "linear_cantor", "golden_cantor"] {
        let sys = if name == "linear_cantor" {
            system(name, &[2.0, 3.0])
        } else {
            system(name, &[])
        };
        let mu = conformal(&sys, &pot, depth)?;
        let k =
            bowen_constants(&sys, &pot, depth, &sys.hull.probe(33)).map_err(|e| e.to_string())?;
        let report =
            gibbs_verify(&sys, &pot, &mu, &k, mu.pressure_used).map_err(|e| e.to_string())?;
        let dev = report.levels.iter().fold(0.0f64, |m, l| {
            m.max((l.min_ratio - 1.0).abs())
                .max((l.max_ratio - 1.0).abs())
        });
        ok &= report.levels.len() == depth && dev < 1e-10;
        detail.push_str(&format!(" {name}: max|ratio-1|={dev:.2e}"));
    }
    ensure(ok, detail)
}

fn eigen_pressure() -> Outcome {
    let mut worst = 0.0f64;
    let mut worst_at = String::new();
    for sys in catalog() {
        for &t in parameters(&sys) {
            let pot = Potential::geometric(t);
            let eig = eigen(&sys, &pot)?;
            let p = pressure_at(&sys, &pot, 20, GRID, &trunc()).map_err(|e| e.to_string())?;
            let gap = (p.growth - eig.lambda.ln()).abs();
            if gap >= worst {
                worst = gap;
                worst_at = format!("{} t={t}", sys.name);
            }
        }
    }
    ensure(
        worst < 1e-6,
        format!("max|P-log lambda|={worst:.2e} at {worst_at}"),
    )
}

fn iterate_identity() -> Outcome {
    let mut worst = 0.0f64;
    for sys in [
        system("doubling", &[]),
        system("linear_cantor", &[2.0, 3.0]),
    ] {
        for t in [0.0, 0.5, 1.0] {
            let r = iterate_identity_check(&sys, t, 2, 6, 65).map_err(|e| e.to_string())?;
            worst = worst.max(r.difference);
        }
    }
    ensure(worst < 1e-6, format!("max|P(T^2)-2P(T)|={worst:.2e}"))
}

fn pressure_shape() -> Outcome {
    let ts = linspace(0.0, 1.5, 21);
    let mut ok = true;
    let mut detail = Vec::new();
    for sys in catalog().into_iter().filter(|s| s.expansion_lower > 1.0) {
        let curve = pressure_curve(&sys, &ts, 12, GRID, &trunc()).map_err(|e| e.to_string())?;
        let shape = curve.shape();
        // Affine curves are exactly linear, so convexity is tested up to round-off.
        let this = shape.max_increase <= 0.0
            && shape.max_convexity_defect <= 1e-12
            && shape.max_secant_slope <= -sys.expansion_lower.ln() + 1e-6;
        ok &= this;
        detail.push(format!(
            "{}: inc={:.1e} convex={:.1e} slope+logC={:.1e}",
            sys.name,
            shape.max_increase,
            shape.max_convexity_defect,
            shape.max_secant_slope + sys.expansion_lower.ln()
        ));
    }
    ensure(ok, detail.join("; "))
}

fn invariance() -> Outcome {
    let tests = default_test_functions();
    let refs: Vec<&(dyn Fn(f64) -> f64 + Sync)> = tests
        .iter()
        .map(|f| f as &(dyn Fn(f64) -> f64 + Sync))
        .collect();
    let pot = Potential::geometric(1.0);
    let mut worst = 0.0f64;
    for sys in catalog() {
        let m = invariant(&sys, &pot, 12)?;
        worst = worst.max(invariance_verify(&m, &refs));
    }
    let d = system("doubling", &[]);
    let mut gaps = Vec::new();
    for n in [8, 10, 12] {
        gaps.push(invariance_verify(&invariant(&d, &pot, n)?, &refs));
    }
    let monotone = gaps.windows(2).all(|w| w[1] <= w[0]);
    ensure(
        worst < 1e-3 && monotone,
        format!(
            "max gap at depth 12={worst:.2e} doubling 8/10/12={:.2e}/{:.2e}/{:.2e}",
            gaps[0], gaps[1], gaps[2]
        ),
    )
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "system.name = perturbed_doubling\nsystem.epsilon = 0.05\npotential.t = 1\nrun.depth = 10\n")
        .map_err(|e| e.to_string())?;
    let run = |threads: &str| -> Result<Vec<u8>, String> {
        let out = Command::new(env!("CARGO_BIN_EXE_ruelle"))
            .args(["verify", "--config"])
            .arg(&cfg)
            .args(["--threads", threads])
            .output()
            .map_err(|e| e.to_string())?;
        if !out.status.success() {
            return Err(format!("verify exited with {}", out.status));
        }
        Ok(out.stdout)
    };
    let (one, four) = (run("1")?, run("4")?);
    ensure(
        one == four && !one.is_empty(),
        format!(
            "{} bytes with 1 thread, {} bytes with 4 threads",
            one.len(),
            four.len()
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("doubling oracle", doubling_oracle),
        ("middle-thirds Bowen root", middle_thirds),
        ("golden Bowen root", golden),
        ("Gauss-Kuzmin closed forms", gauss_kuzmin),
        ("normalization", normalization),
        ("Gibbs sandwich", gibbs),
        ("eigen/pressure consistency", eigen_pressure),
        ("iterate identity", iterate_identity),
        ("pressure shape", pressure_shape),
        ("invariance", invariance),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let (verdict, detail) = match outcome {
            Ok(d) if elapsed < TIME_LIMIT => ("PASS", d),
            Ok(d) => ("FAIL", format!("{d} (exceeded {}s)", TIME_LIMIT.as_secs())),
            Err(d) => ("FAIL", d),
        };
        if verdict == "FAIL" {
            failed += 1;
        }
        println!(
            "{verdict} {:>2} {name}: {detail} [{:.1}s]",
            k + 1,
            elapsed.as_secs_f64()
        );
        let _ = std::io::stdout().flush();
    }
    println!("{} criteria, {failed} failed", criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
