//! Command implementations.

use std::fmt;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use ruelle_core::measures::{
    build_eigenmeasure_with, gibbs_verify, invariant_measure, total_variation, CylinderMeasure,
    MeasureOptions,
};
use ruelle_core::potentials::{
    bowen_constants_with, bowen_feasible_depth, BowenOptions, BowenSequence,
};
use ruelle_core::pressure::{bowen_solve, linspace, pressure_at_anchor};
use ruelle_core::transfer::{normalize_potential, solve_eigen_with, EigenData, EigenOptions};
use ruelle_core::{Error, PressureEstimate, TruncationPolicy};

use crate::config::{ConfigError, RunConfig};
use crate::{num, verify, EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK};

/// The available commands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// One pressure estimate.
    Pressure,
    /// Pressure curve over a parameter range.
    Curve,
    /// Bowen root of the geometric family.
    Dimension,
    /// Leading eigen-triple and eigenfunction CSV.
    Eigen,
    /// Conformal and invariant cylinder measures.
    Measure,
    /// Gibbs sandwich report.
    Gibbs,
    /// Full invariant suite.
    Verify,
}

impl Command {
    /// All commands with their names.
    pub const ALL: [(Command, &'static str); 7] = [
        (Command::Pressure, "pressure"),
        (Command::Curve, "curve"),
        (Command::Dimension, "dimension"),
        (Command::Eigen, "eigen"),
        (Command::Measure, "measure"),
        (Command::Gibbs, "gibbs"),
        (Command::Verify, "verify"),
    ];

    /// Look a command up by name.
    pub fn from_name(name: &str) -> Option<Command> {
        Command::ALL
            .iter()
            .find(|(_, n)| *n == name)
            .map(|(c, _)| *c)
    }
}

/// What a command produced.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Report {
    /// Text for standard output.
    pub stdout: String,
    /// Files to write, in order.
    pub files: Vec<(PathBuf, String)>,
    /// Whether every check of the command passed.
    pub passed: bool,
}

/// A failed run.
#[derive(Debug)]
pub enum CliError {
    /// Bad configuration or command-line values.
    Config(ConfigError),
    /// An error from the numerical core.
    Core(Error),
    /// Reading the configuration or writing results failed.
    Io(String, std::io::Error),
}

impl CliError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_numeric() => EXIT_NUMERIC,
            _ => EXIT_CONFIG,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "{e}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(path, e) => write!(f, "{path}: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

/// Exit status of a completed run.
pub fn exit_code(result: &Result<Report, CliError>) -> i32 {
    match result {
        Ok(r) if r.passed => EXIT_OK,
        Ok(_) => EXIT_CHECK_FAILED,
        Err(e) => e.exit_code(),
    }
}

/// Run `command` under `cfg`.
pub fn run(command: Command, cfg: &RunConfig) -> Result<Report, CliError> {
    match command {
        Command::Pressure => pressure(cfg),
        Command::Curve => curve(cfg),
        Command::Dimension => dimension(cfg),
        Command::Eigen => eigen(cfg),
        Command::Measure => measure(cfg),
        Command::Gibbs => gibbs(cfg),
        Command::Verify => verify::run_suite(cfg),
    }
}

pub(crate) fn trunc(cfg: &RunConfig) -> TruncationPolicy {
    TruncationPolicy::new(cfg.trunc_epsilon)
}

pub(crate) fn estimate(cfg: &RunConfig) -> Result<PressureEstimate, Error> {
    pressure_at_anchor(
        &cfg.system,
        &cfg.potential,
        cfg.depth,
        cfg.grid_size,
        &trunc(cfg),
        cfg.anchor_or_midpoint(),
    )
}

pub(crate) fn eigen_data(cfg: &RunConfig) -> Result<EigenData, Error> {
    solve_eigen_with(
        &cfg.system,
        &cfg.potential,
        &EigenOptions {
            grid_size: cfg.grid_size,
            tol: cfg.tol,
            max_iter: cfg.max_iter,
            trunc: trunc(cfg),
            extrapolate: true,
        },
    )
}

pub(crate) fn measure_options(cfg: &RunConfig) -> MeasureOptions {
    MeasureOptions {
        anchor: Some(cfg.anchor_or_midpoint()),
        grid_size: cfg.grid_size,
        word_budget: cfg.measure.word_budget,
        cell_floor: cfg.measure.cell_floor,
        trunc: trunc(cfg),
        ..MeasureOptions::default()
    }
}

/// The depth-`n` conformal measure with `P̂` the point estimate at the anchor.
pub(crate) fn conformal_measure(
    cfg: &RunConfig,
    depth: usize,
) -> Result<(CylinderMeasure, f64), Error> {
    let p_hat = pressure_at_anchor(
        &cfg.system,
        &cfg.potential,
        depth,
        cfg.grid_size,
        &trunc(cfg),
        cfg.anchor_or_midpoint(),
    )?
    .point;
    let mu = build_eigenmeasure_with(
        &cfg.system,
        &cfg.potential,
        depth,
        p_hat,
        &measure_options(cfg),
    )?;
    Ok((mu, p_hat))
}

/// Probe points for Bowen constants.
pub(crate) const BOWEN_PROBE: usize = 17;

/// `K̂_m` measured as deep as the enumeration budget allows.
pub(crate) fn bowen(cfg: &RunConfig, depth: usize) -> Result<BowenSequence, Error> {
    let opts = BowenOptions::default();
    let measured = bowen_feasible_depth(&cfg.system, depth, BOWEN_PROBE, &opts);
    bowen_constants_with(
        &cfg.system,
        &cfg.potential,
        measured,
        &cfg.system.hull.probe(BOWEN_PROBE),
        &opts,
    )
}

fn pressure_line(e: &PressureEstimate) -> String {
    format!(
        "potential={} depth={} grid_size={} anchor={} lower={} point={} upper={} growth={}\n",
        e.potential,
        e.depth,
        e.grid_size,
        num(e.anchor),
        num(e.lower),
        num(e.point),
        num(e.upper),
        num(e.growth)
    )
}

fn with_output(cfg: &RunConfig, body: String, summary: String, passed: bool) -> Report {
    match &cfg.output_path {
        Some(path) => Report {
            stdout: summary,
            files: vec![(path.clone(), body)],
            passed,
        },
        None => Report {
            stdout: body,
            files: Vec::new(),
            passed,
        },
    }
}

fn pressure(cfg: &RunConfig) -> Result<Report, CliError> {
    let line = pressure_line(&estimate(cfg)?);
    Ok(with_output(cfg, line.clone(), line, true))
}

/// Pressure-curve CSV `t,depth,lower,point,upper`.
pub fn curve_csv(cfg: &RunConfig) -> Result<String, Error> {
    let ts = linspace(cfg.curve.t_min, cfg.curve.t_max, cfg.curve.t_steps);
    let trunc = trunc(cfg);
    let anchor = cfg.anchor_or_midpoint();
    let samples = ts
        .par_iter()
        .map(|&t| {
            pressure_at_anchor(
                &cfg.system,
                &ruelle_core::Potential::geometric(t),
                cfg.depth,
                cfg.grid_size,
                &trunc,
                anchor,
            )
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut out = String::from("t,depth,lower,point,upper\n");
    for (t, e) in ts.iter().zip(&samples) {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            num(*t),
            e.depth,
            num(e.lower),
            num(e.point),
            num(e.upper)
        );
    }
    Ok(out)
}

fn curve(cfg: &RunConfig) -> Result<Report, CliError> {
    let csv = curve_csv(cfg)?;
    let summary = format!("samples={} depth={}\n", cfg.curve.t_steps, cfg.depth);
    Ok(with_output(cfg, csv, summary, true))
}

fn dimension(cfg: &RunConfig) -> Result<Report, CliError> {
    let sol = bowen_solve(
        &cfg.system,
        cfg.bowen.t_lo,
        cfg.bowen.t_hi,
        cfg.tol_t,
        cfg.depth,
        cfg.grid_size,
        &trunc(cfg),
    )?;
    let body = format!(
        "s_hat,t_lo,t_hi,pressure_lower_at_s,pressure_upper_at_s\n{},{},{},{},{}\n",
        num(sol.s_hat),
        num(sol.t_lo),
        num(sol.t_hi),
        num(sol.at_root.lower),
        num(sol.at_root.upper)
    );
    let mut stdout = body.clone();
    if !sol.certified {
        stdout.push_str("# the pressure bracket at s_hat does not reach 0\n");
    }
    Ok(Report {
        stdout,
        files: cfg
            .output_path
            .iter()
            .map(|p| (p.clone(), body.clone()))
            .collect(),
        passed: sol.certified,
    })
}

fn eigen(cfg: &RunConfig) -> Result<Report, CliError> {
    let e = eigen_data(cfg)?;
    let mut csv = String::from("x,h\n");
    let grid = e.h.grid();
    for (k, v) in e.h.values().iter().enumerate() {
        let _ = writeln!(csv, "{},{}", num(grid.node(k)), num(*v));
    }
    let summary = format!(
        "lambda={} lambda_extrapolated={} log_lambda={} residual={} cw_lower={} cw_upper={} iterations={}\n",
        num(e.lambda),
        e.lambda_extrapolated.map_or_else(|| "none".to_string(), num),
        num(e.lambda_best().ln()),
        num(e.residual_h),
        num(e.cw_lower),
        num(e.cw_upper),
        e.iterations
    );
    Ok(with_output(cfg, csv, summary, true))
}

/// Measure CSV `word,representative,weight`.
pub fn measure_csv(m: &CylinderMeasure) -> String {
    let mut out = String::from("word,representative,weight\n");
    for c in &m.cells {
        let _ = writeln!(
            out,
            "{},{},{}",
            c.label(),
            num(c.representative),
            num(c.weight)
        );
    }
    out
}

/// `<dir>/<stem>.invariant.csv` next to the conformal-measure file.
pub fn invariant_path(path: &Path) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "measure".to_string());
    path.with_file_name(format!("{stem}.invariant.csv"))
}

/// Total-variation distance between the conformal measures of φ and of the
/// normalized ψ at the measure depth. Reported, not checked: whether the two
/// are always equivalent is unknown. Cylinder measures of ψ need a finite
/// family, so countable ones give `None`.
fn phi_psi_distance(
    cfg: &RunConfig,
    mu: &CylinderMeasure,
    eig: &EigenData,
) -> Result<Option<f64>, Error> {
    if cfg.system.is_countable() {
        return Ok(None);
    }
    let psi = normalize_potential(&cfg.system, &cfg.potential, eig)?;
    let mu_psi = build_eigenmeasure_with(&cfg.system, &psi, mu.depth, 0.0, &measure_options(cfg))?;
    total_variation(mu, &mu_psi, mu.depth).map(Some)
}

fn measure(cfg: &RunConfig) -> Result<Report, CliError> {
    let (mu, p_hat) = conformal_measure(cfg, cfg.depth)?;
    let eig = eigen_data(cfg)?;
    let m = invariant_measure(&mu, &eig.h)?;
    let (mu_csv, m_csv) = (measure_csv(&mu), measure_csv(&m));
    let tv = phi_psi_distance(cfg, &mu, &eig)?.map_or_else(|| "n/a".to_string(), num);
    Ok(match &cfg.output_path {
        Some(path) => Report {
            stdout: format!(
                "cells={} depth={} pressure_used={} tail_mass={} tv_phi_psi={tv}\n",
                mu.cells.len(),
                mu.depth,
                num(p_hat),
                num(mu.tail_mass())
            ),
            files: vec![(path.clone(), mu_csv), (invariant_path(path), m_csv)],
            passed: true,
        },
        None => Report {
            stdout: format!("{mu_csv}\n{m_csv}"),
            files: Vec::new(),
            passed: true,
        },
    })
}

fn gibbs(cfg: &RunConfig) -> Result<Report, CliError> {
    let (mu, p_hat) = conformal_measure(cfg, cfg.depth)?;
    let k = bowen(cfg, cfg.depth)?;
    let report = gibbs_verify(&cfg.system, &cfg.potential, &mu, &k, p_hat)?;
    let mut out = format!("c_hat={} pressure_used={}\n", num(report.c_hat), num(p_hat));
    out.push_str("m,count,min_ratio,max_ratio,lower_bound,upper_bound,ok\n");
    for l in &report.levels {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            l.m,
            l.count,
            num(l.min_ratio),
            num(l.max_ratio),
            num(l.lower_bound),
            num(l.upper_bound),
            l.ok
        );
    }
    let passed = report.passed();
    Ok(with_output(cfg, out.clone(), out, passed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    fn cfg(text: &str) -> RunConfig {
        parse_config(text).unwrap()
    }

    #[test]
    fn dimension_of_middle_thirds() {
        let c = cfg("system.name = linear_cantor\nsystem.N = 2\nsystem.r = 3\nrun.grid_size = 65");
        let r = run(Command::Dimension, &c).unwrap();
        assert!(r.passed);
        let row = r.stdout.lines().nth(1).unwrap();
        let s: f64 = row.split(',').next().unwrap().parse().unwrap();
        assert!((s - 2f64.ln() / 3f64.ln()).abs() < 1e-6);
    }

    #[test]
    fn gauss_below_threshold_is_numeric_error() {
        let c = cfg("system.name = gauss\npotential.t = 0.4");
        let r = run(Command::Pressure, &c);
        assert_eq!(exit_code(&r), EXIT_NUMERIC);
        assert!(r.unwrap_err().to_string().contains("DIVERGENT"));
    }

    #[test]
    fn numbers_round_trip() {
        for x in [1.0 / 3.0, core::f64::consts::PI, -2.5e-300, 6.02e23] {
            assert_eq!(num(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn curve_csv_shape() {
        let mut c =
            cfg("system.name = doubling\nrun.grid_size = 17\nrun.depth = 4\ncurve.t_steps = 3");
        c.curve.t_max = 1.0;
        let csv = curve_csv(&c).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "t,depth,lower,point,upper");
        assert_eq!(lines.len(), 4);
        let p: f64 = lines[3].split(',').nth(3).unwrap().parse().unwrap();
        assert!(p.abs() < 1e-14);
    }

    #[test]
    fn invariant_path_sits_next_to_output() {
        assert_eq!(
            invariant_path(Path::new("/tmp/mu.csv")),
            PathBuf::from("/tmp/mu.invariant.csv")
        );
    }

    #[test]
    fn measure_prints_both_csvs() {
        let c = cfg("system.name = doubling\npotential.t = 0\nrun.depth = 2\nrun.grid_size = 17");
        let r = run(Command::Measure, &c).unwrap();
        let parts: Vec<&str> = r.stdout.split("\n\n").collect();
        assert_eq!(parts.len(), 2);
        assert!(parts[0].starts_with("word,representative,weight\n1-1,"));
        assert_eq!(parts[1].lines().count(), 5);
    }
}
