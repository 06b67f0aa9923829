use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use ruelle_cli::commands::exit_code;
use ruelle_cli::{parse_config, run, CliError, Command, Overrides, Report, EXIT_CONFIG};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Cmd {
    Pressure,
    Curve,
    Dimension,
    Eigen,
    Measure,
    Gibbs,
    Verify,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Command {
        match c {
            Cmd::Pressure => Command::Pressure,
            Cmd::Curve => Command::Curve,
            Cmd::Dimension => Command::Dimension,
            Cmd::Eigen => Command::Eigen,
            Cmd::Measure => Command::Measure,
            Cmd::Gibbs => Command::Gibbs,
            Cmd::Verify => Command::Verify,
        }
    }
}

/// Transfer operators, pressure, Bowen roots and Gibbs measures for expanding interval maps.
#[derive(Debug, Parser)]
#[command(name = "ruelle", version)]
struct Args {
    /// What to compute.
    #[arg(value_enum)]
    command: Cmd,
    /// Run configuration (`section.key = value` lines).
    #[arg(long)]
    config: PathBuf,
    /// Geometric parameter t (overrides potential.t).
    #[arg(long, allow_negative_numbers = true)]
    t: Option<f64>,
    /// First curve sample (overrides curve.t_min).
    #[arg(long, allow_negative_numbers = true)]
    t_min: Option<f64>,
    /// Last curve sample (overrides curve.t_max).
    #[arg(long, allow_negative_numbers = true)]
    t_max: Option<f64>,
    /// Number of curve samples (overrides curve.t_steps).
    #[arg(long)]
    t_steps: Option<usize>,
    /// Word depth (overrides run.depth).
    #[arg(long)]
    depth: Option<usize>,
    /// Output file (overrides output.path).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (overrides run.threads).
    #[arg(long)]
    threads: Option<usize>,
}

fn execute(args: &Args) -> Result<Report, CliError> {
    let text = fs::read_to_string(&args.config)
        .map_err(|e| CliError::Io(args.config.display().to_string(), e))?;
    let cfg = parse_config(&text)?.apply(&Overrides {
        t: args.t,
        t_min: args.t_min,
        t_max: args.t_max,
        t_steps: args.t_steps,
        depth: args.depth,
        out: args.out.clone(),
        threads: args.threads,
    })?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cfg.threads {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Io("thread pool".into(), std::io::Error::other(e)))?;
    let command = Command::from(args.command);
    let report = pool.install(|| run(command, &cfg))?;
    for (path, body) in &report.files {
        fs::write(path, body).map_err(|e| CliError::Io(path.display().to_string(), e))?;
    }
    Ok(report)
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG as u8 } else { 0 });
        }
    };
    let result = execute(&args);
    match &result {
        Ok(report) => print!("{}", report.stdout),
        Err(e) => eprintln!("error: {e}"),
    }
    ExitCode::from(exit_code(&result) as u8)
}
