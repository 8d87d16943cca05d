use std::path::PathBuf;
use std::process::ExitCode;

use apsigma_cli::{run_command, Command, OutputFormat, Report, SessionConfig};
use clap::{Args, Parser};

#[derive(Parser)]
#[command(name = "apsigma", version, about = "Almost periodic polynomials with semigroup spectra")]
struct Cli {
    #[command(flatten)]
    session: SessionArgs,
    #[command(subcommand)]
    command: Command,
}

/// Flags override values from `--config`.
#[derive(Args)]
struct SessionArgs {
    /// File of `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Basis declarations, e.g. `s=sqrt(2)`; repeatable or comma-separated.
    #[arg(long, global = true)]
    basis: Vec<String>,
    /// Generators of Σ, e.g. `2,3` or `1, s`. Defaults to the basis labels.
    #[arg(long, global = true)]
    gens: Option<String>,
    /// Truncation degree for Bezout solves.
    #[arg(long, global = true)]
    degree: Option<usize>,
    #[arg(long, global = true)]
    grid_step: Option<f64>,
    #[arg(long, global = true)]
    strip_width: Option<f64>,
    #[arg(long, global = true)]
    tail_height: Option<f64>,
    #[arg(long, global = true)]
    max_grid_points: Option<usize>,
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true, value_enum)]
    format: Option<OutputFormat>,
    #[arg(long, global = true)]
    seed: Option<u64>,
}

impl SessionArgs {
    fn resolve(self) -> Result<SessionConfig, String> {
        let mut cfg = match &self.config {
            Some(path) => SessionConfig::load(path).map_err(|e| e.to_string())?,
            None => SessionConfig::default(),
        };
        cfg.basis.extend(self.basis);
        cfg.gens = self.gens.or(cfg.gens);
        cfg.degree = self.degree.unwrap_or(cfg.degree);
        cfg.grid_step = self.grid_step.or(cfg.grid_step);
        cfg.strip_width = self.strip_width.or(cfg.strip_width);
        cfg.tail_height = self.tail_height.or(cfg.tail_height);
        cfg.max_grid_points = self.max_grid_points.unwrap_or(cfg.max_grid_points);
        cfg.tol = self.tol.unwrap_or(cfg.tol);
        cfg.format = self.format.unwrap_or(cfg.format);
        cfg.seed = self.seed.unwrap_or(cfg.seed);
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Exit 2 is reserved for negative answers, so usage errors map to 1.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let name = cli.command.name();
    let cfg = match cli.session.resolve() {
        Ok(cfg) => cfg,
        Err(msg) => {
            let report = Report::failure(name, "config-error", msg);
            println!("{}", report.to_json());
            return ExitCode::from(report.exit_code());
        }
    };
    let report = run_command(&cli.command, &cfg);
    match cfg.format {
        OutputFormat::Json => println!("{}", report.to_json()),
        OutputFormat::Text => print!("{}", report.to_text()),
    }
    ExitCode::from(report.exit_code())
}
