//! `tradeoff`: sweeps, verification and Monte-Carlo cross-checks for the
//! information-disturbance tradeoff of maximally entangled state estimation.

mod checks;
mod format;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::Value;
use tradeoff_core::{
    closed_form_f, closed_form_g, mc_fidelities, optimal_discrete_instrument, optimize,
    tradeoff_curve, tradeoff_residuals, Error, OptimalParams, SeededStream,
};

use crate::checks::json_f64;

const MC_SIGMAS: f64 = 4.0;

#[derive(Parser, Debug)]
#[command(
    name = "tradeoff",
    version,
    about = "Information-disturbance tradeoff for maximally entangled states"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sweep the optimal tradeoff curve.
    Curve(RunConfig),
    /// Run the verification suite and write a JSON report.
    Verify(RunConfig),
    /// Monte-Carlo F and G of the optimal instrument against the closed forms.
    Mc(RunConfig),
    /// Solve the eigenvalue problem for the weight p.
    Optimize(RunConfig),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug, Clone)]
struct RunConfig {
    /// Dimension d of each subsystem.
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// Number of sweep points.
    #[arg(long, default_value_t = 101)]
    points: usize,
    /// Number of Haar samples.
    #[arg(long, default_value_t = 20_000)]
    samples: usize,
    /// Seed of the random stream; required by `mc` and `verify`.
    #[arg(long)]
    seed: Option<u64>,
    /// Weight of G in the objective pG + (1-p)F.
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    /// Instrument parameter a.
    #[arg(long, default_value_t = 0.5)]
    a: f64,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Worker threads for Monte-Carlo sampling (0: all cores).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

/// Failure with its exit code: 1 for failed checks, 2 for usage or IO.
#[derive(Debug)]
enum Failure {
    Check,
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl RunConfig {
    fn validate(&self) -> Result<(), Failure> {
        let bad = |msg: String| Err(Failure::Usage(msg));
        if self.dim < 2 {
            return bad(format!("--dim must be at least 2, got {}", self.dim));
        }
        if self.points < 2 {
            return bad(format!("--points must be at least 2, got {}", self.points));
        }
        if self.samples < 100 {
            return bad(format!(
                "--samples must be at least 100, got {}",
                self.samples
            ));
        }
        for (flag, v) in [("--p", self.p), ("--a", self.a)] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{flag} must lie in [0, 1], got {v}"));
            }
        }
        Ok(())
    }

    fn seed(&self, cmd: &str) -> Result<u64, Failure> {
        self.seed
            .ok_or_else(|| Failure::Usage(format!("`{cmd}` requires --seed")))
    }
}

fn emit(cfg: &RunConfig, text: &str) -> Result<(), Failure> {
    match &cfg.out {
        Some(path) => fs::write(path, text)
            .map_err(|e| Failure::Usage(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// One flat record as JSON, or as a header plus a single CSV row.
fn record(fields: &[(&str, Value)], fmt: Format) -> String {
    match fmt {
        Format::Json => {
            let obj: serde_json::Map<String, Value> = fields
                .iter()
                .map(|(k, v)| (k.to_string(), v.clone()))
                .collect();
            format!("{}\n", Value::Object(obj))
        }
        Format::Csv => {
            let header: Vec<&str> = fields.iter().map(|(k, _)| *k).collect();
            let row: Vec<String> = fields
                .iter()
                .map(|(_, v)| match v.as_f64() {
                    Some(x) if !v.is_u64() && !v.is_i64() => format::fmt_g(x, 12),
                    _ => v.to_string(),
                })
                .collect();
            format!("{}\n{}\n", header.join(","), row.join(","))
        }
    }
}

fn cmd_curve(cfg: &RunConfig) -> Result<(), Failure> {
    let points = tradeoff_curve(cfg.dim, cfg.points)?;
    let text = match cfg.format.unwrap_or(Format::Csv) {
        Format::Csv => format::curve_csv(&points),
        Format::Json => {
            let rows: Vec<String> = points
                .iter()
                .map(|p| serde_json::to_string(p).expect("plain numbers"))
                .collect();
            format!("[{}]\n", rows.join(","))
        }
    };
    emit(cfg, &text)
}

fn cmd_verify(cfg: &RunConfig) -> Result<(), Failure> {
    let settings = checks::Settings {
        dim: cfg.dim,
        points: cfg.points,
        samples: cfg.samples,
        seed: cfg.seed("verify")?,
    };
    let results = checks::run_all(&settings)?;
    let report = checks::report(&settings, &results);
    emit(
        cfg,
        &format!("{}\n", serde_json::to_string_pretty(&report).expect("json")),
    )?;
    for c in results.iter().filter(|c| !c.passed()) {
        eprintln!(
            "check {} failed: residual {:e} > tolerance {:e}",
            c.name, c.residual, c.tolerance
        );
    }
    if results.iter().all(checks::Check::passed) {
        Ok(())
    } else {
        Err(Failure::Check)
    }
}

fn cmd_mc(cfg: &RunConfig) -> Result<(), Failure> {
    let seed = cfg.seed("mc")?;
    let params = OptimalParams::new(cfg.a, cfg.dim)?;
    let instr = optimal_discrete_instrument(&params)?;
    let (f, g) = mc_fidelities(&instr, cfg.samples, SeededStream::new(seed, 0))?;
    let f_closed = closed_form_f(cfg.a, cfg.dim)?;
    let g_closed = closed_form_g(cfg.a, cfg.dim)?;
    let (sf, sg) = (f.sigmas_from(f_closed), g.sigmas_from(g_closed));
    let fields = [
        ("a", json_f64(params.a)),
        ("b", json_f64(params.b)),
        ("F_closed", json_f64(f_closed)),
        ("G_closed", json_f64(g_closed)),
        ("F_mc", json_f64(f.value)),
        ("F_stderr", json_f64(f.stderr)),
        ("G_mc", json_f64(g.value)),
        ("G_stderr", json_f64(g.stderr)),
        ("sigmas_F", json_f64(sf)),
        ("sigmas_G", json_f64(sg)),
    ];
    emit(cfg, &record(&fields, cfg.format.unwrap_or(Format::Json)))?;
    if sf <= MC_SIGMAS && sg <= MC_SIGMAS {
        Ok(())
    } else {
        eprintln!("Monte-Carlo estimate deviates by more than {MC_SIGMAS} standard errors");
        Err(Failure::Check)
    }
}

fn cmd_optimize(cfg: &RunConfig) -> Result<(), Failure> {
    let r = optimize(cfg.p, cfg.dim)?;
    let (gf, _) = tradeoff_residuals(r.point.f, r.point.g, cfg.dim)?;
    let pt = &r.point;
    let fields = [
        ("p", json_f64(r.p)),
        ("x", json_f64(r.chi.x)),
        ("y", json_f64(r.chi.y)),
        ("a", json_f64(pt.a)),
        ("b", json_f64(pt.b)),
        ("F", json_f64(pt.f)),
        ("G", json_f64(pt.g)),
        ("I", json_f64(pt.info)),
        ("D", json_f64(pt.disturbance)),
        ("form_residual", json_f64(r.form_residual)),
        ("gf_residual", json_f64(gf)),
    ];
    emit(cfg, &record(&fields, cfg.format.unwrap_or(Format::Json)))
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let cfg = match &cli.command {
        Command::Curve(c) | Command::Verify(c) | Command::Mc(c) | Command::Optimize(c) => c,
    };
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| Failure::Usage(format!("thread pool: {e}")))?;
    pool.install(|| match &cli.command {
        Command::Curve(c) => cmd_curve(c),
        Command::Verify(c) => cmd_verify(c),
        Command::Mc(c) => cmd_mc(c),
        Command::Optimize(c) => cmd_optimize(c),
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
