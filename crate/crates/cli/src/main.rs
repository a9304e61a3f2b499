//! `eshape`: synthesize a shaped energy for an underactuated mechanical model
//! and export the result as a JSON report or a CSV grid.

mod grid;
mod report;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use eshape_core::builtin::{self, PhysicalPendulum, PENDULUM_CONSTANTS, PENDULUM_DEFAULTS};
use eshape_core::model::load_model_with;
use eshape_core::{
    parse, synthesize, KineticSource, ModelSpec, PipelineOptions, Synthesis, Verdict,
};

#[derive(Parser)]
#[command(
    name = "eshape",
    version,
    about = "Energy shaping for underactuated mechanical systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the synthesis on a model file and write a JSON report.
    Synth {
        model: PathBuf,
        #[command(flatten)]
        pipeline: PipelineArgs,
        /// Half-width of the verification grid.
        #[arg(long = "box", default_value_t = 0.1)]
        half_width: f64,
        /// Points per axis of the verification grid.
        #[arg(long, default_value_t = 9)]
        steps: usize,
        /// Add a block comparing the chart parameter g with A/B.
        #[arg(long)]
        gamma_check: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate ĥ, u and K on a regular grid in the adapted chart and write CSV.
    Grid {
        model: PathBuf,
        #[command(flatten)]
        pipeline: PipelineArgs,
        /// Half-width of the box around the equilibrium.
        #[arg(long = "box", default_value_t = 0.2)]
        half_width: f64,
        /// Points per axis.
        #[arg(long, default_value_t = 5)]
        steps: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the text of a built-in model.
    Builtin {
        name: String,
        /// Constants from lengths and masses: L1 L2 m1 m2.
        #[arg(long, num_args = 4, value_names = ["L1", "L2", "M1", "M2"])]
        physical: Option<Vec<f64>>,
        /// Gravitational acceleration for --physical.
        #[arg(long, default_value_t = builtin::STANDARD_GRAVITY)]
        gravity: f64,
        #[arg(long = "const", value_name = "NAME=VALUE", value_parser = parse_const)]
        constants: Vec<(String, f64)>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct PipelineArgs {
    /// Override a model constant; repeatable.
    #[arg(long = "const", value_name = "NAME=VALUE", value_parser = parse_const)]
    constants: Vec<(String, f64)>,
    /// Boundary curvature ϖ on the actuated slice (default 2·max(ϖ_min, 1)).
    #[arg(long)]
    varpi: Option<f64>,
    /// Integrability tolerance.
    #[arg(long, default_value_t = eshape_core::potential::INTEGRABILITY_TOL)]
    tol: f64,
    /// ξ for the integrating-factor solution, a function of the actuated coordinates.
    #[arg(long, default_value = "1", conflicts_with = "kinetic_from")]
    xi: String,
    /// TOML file with a `[kinetic]` table of K entries (K11, K12, ...).
    #[arg(long)]
    kinetic_from: Option<PathBuf>,
}

fn parse_const(s: &str) -> Result<(String, f64), String> {
    let (name, value) = s
        .split_once('=')
        .ok_or_else(|| format!("expected NAME=VALUE, got `{s}`"))?;
    let value: f64 = value
        .trim()
        .parse()
        .map_err(|e| format!("`{value}`: {e}"))?;
    if !value.is_finite() {
        return Err(format!("`{name}` must be finite"));
    }
    Ok((name.trim().to_string(), value))
}

impl PipelineArgs {
    fn options(&self, half_width: f64, steps: usize) -> Result<PipelineOptions> {
        if !(half_width.is_finite() && half_width > 0.0) {
            bail!("--box must be positive, got {half_width}");
        }
        if steps == 0 {
            bail!("--steps must be at least 1");
        }
        if let Some(v) = self.varpi {
            if !(v.is_finite() && v > 0.0) {
                bail!("--varpi must be positive, got {v}");
            }
        }
        let kinetic = match &self.kinetic_from {
            Some(path) => KineticSource::Supplied { text: read(path)? },
            None => KineticSource::Solve {
                xi: parse(&self.xi).with_context(|| format!("--xi `{}`", self.xi))?,
            },
        };
        Ok(PipelineOptions {
            kinetic,
            varpi: self.varpi,
            integrability_tol: self.tol,
            grid_half_width: half_width,
            grid_per_axis: steps,
        })
    }

    fn load(&self, path: &Path) -> Result<ModelSpec> {
        Ok(load_model_with(path, &self.constants)?)
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => {
            fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            Ok(stdout.flush()?)
        }
    }
}

fn run_pipeline(spec: &ModelSpec, opts: &PipelineOptions) -> Result<Synthesis> {
    synthesize(spec, opts).map_err(|e| anyhow!("stage {}: {e}", e.stage()))
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Synth {
            model,
            pipeline,
            half_width,
            steps,
            gamma_check,
            out,
        } => {
            let opts = pipeline.options(half_width, steps)?;
            let spec = pipeline.load(&model)?;
            let gamma = gamma_check.then(|| report::GammaCheck::from_spec(&spec));
            let s = run_pipeline(&spec, &opts)?;
            let report = report::Report::new(&spec, &s, &opts, gamma);
            emit(
                out.as_deref(),
                &(serde_json::to_string_pretty(&report)? + "\n"),
            )?;
            let verdict = s.certificate.verdict;
            eprintln!(
                "verdict: {}{}",
                match verdict {
                    Verdict::Pass => "pass",
                    Verdict::Fail => "fail",
                },
                s.certificate
                    .reason
                    .as_deref()
                    .map(|r| format!(" ({r})"))
                    .unwrap_or_default()
            );
            Ok(match verdict {
                Verdict::Pass => ExitCode::SUCCESS,
                Verdict::Fail => ExitCode::from(2),
            })
        }
        Command::Grid {
            model,
            pipeline,
            half_width,
            steps,
            out,
        } => {
            let opts = pipeline.options(half_width, steps)?;
            let spec = pipeline.load(&model)?;
            let s = run_pipeline(&spec, &opts)?;
            let table = grid::export(&s, half_width, steps);
            emit(out.as_deref(), &table.csv)?;
            if table.failed > 0 {
                eprintln!(
                    "warning: {} of {} grid points could not be evaluated (outside the validity domain)",
                    table.failed, table.rows
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Builtin {
            name,
            physical,
            gravity,
            constants,
            out,
        } => {
            if !builtin::names().contains(&name.as_str()) {
                bail!(
                    "unknown built-in model `{name}` (available: {})",
                    builtin::names().join(", ")
                );
            }
            let mut values = PENDULUM_DEFAULTS;
            if let Some(p) = physical {
                let gamma = values[5];
                values = PhysicalPendulum {
                    l1: p[0],
                    l2: p[1],
                    m1: p[2],
                    m2: p[3],
                    gravity,
                }
                .constants(gamma);
            }
            for (key, value) in constants {
                let i = PENDULUM_CONSTANTS
                    .iter()
                    .position(|c| *c == key)
                    .ok_or_else(|| anyhow!("`{key}` is not a constant of {name}"))?;
                values[i] = value;
            }
            emit(out.as_deref(), &builtin::double_pendulum(&values))?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
