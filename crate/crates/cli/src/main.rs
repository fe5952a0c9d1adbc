use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod pgm;

/// Scene-graph layout guidance: plans, region masks, guidance losses and
/// latent optimization.
#[derive(Parser, Debug)]
#[command(name = "asql", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Validate a scene graph and echo it in normalized form.
    Parse { graph: PathBuf },
    /// Produce a guidance plan (size order, seed grid, constraints).
    Plan {
        graph: PathBuf,
        #[command(flatten)]
        plan: PlanArgs,
    },
    /// Assign grid cells to entities and print the grid.
    Grid {
        graph: PathBuf,
        #[command(flatten)]
        plan: PlanArgs,
        /// Write the grid as a (2, H, W) int32 tensor file.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print `id:sub` per cell instead of one character.
        #[arg(long)]
        verbose: bool,
    },
    /// Write one soft location mask per entity.
    Masks {
        graph: PathBuf,
        #[command(flatten)]
        plan: PlanArgs,
        #[arg(long)]
        out_dir: PathBuf,
        /// Mask resolution, HxW.
        #[arg(long, value_parser = parse_dims, default_value = "16x16")]
        res: (usize, usize),
        /// Also write one mask per quantity sub-region.
        #[arg(long)]
        per_subregion: bool,
        /// Also write 8-bit PGM renderings.
        #[arg(long)]
        pgm: bool,
    },
    /// Evaluate the guidance losses on attention tensors from files.
    Loss {
        #[arg(long)]
        graph: PathBuf,
        /// Cross-attention, float tensor of shape (H'·W', tokens).
        #[arg(long)]
        cross: PathBuf,
        /// Self-attention, float tensor of shape (H'·W', H', W').
        #[arg(long = "self")]
        self_attn: Option<PathBuf>,
        #[command(flatten)]
        plan: PlanArgs,
        /// Attention resolution, HxW.
        #[arg(long, value_parser = parse_dims, default_value = "16x16")]
        res: (usize, usize),
        #[command(flatten)]
        weights: WeightArgs,
        /// Location losses per quantity sub-region.
        #[arg(long)]
        per_subregion: bool,
    },
    /// Optimize a synthetic latent against the guidance and print one JSON
    /// line per step.
    Optimize {
        graph: PathBuf,
        #[command(flatten)]
        plan: PlanArgs,
        #[arg(long, default_value_t = asql_core::config::DEFAULT_STEPS)]
        steps: usize,
        #[arg(long, default_value_t = asql_core::config::DEFAULT_STEP_SIZE)]
        alpha: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = asql_core::config::DEFAULT_BETA)]
        beta: f64,
        /// Attention resolution, HxW.
        #[arg(long, value_parser = parse_dims, default_value = "16x16")]
        res: (usize, usize),
        /// Latent width.
        #[arg(long, default_value_t = asql_core::config::DEFAULT_LATENT_DIM)]
        dim: usize,
        /// Gradient updates per recorded step.
        #[arg(long, default_value_t = 1)]
        inner: usize,
        /// Stop once the total loss is at or below this value.
        #[arg(long)]
        threshold: Option<f64>,
        #[command(flatten)]
        weights: WeightArgs,
        #[arg(long)]
        per_subregion: bool,
        /// Write the JSON lines here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the final cross-attention as a float tensor file.
        #[arg(long)]
        save_cross: Option<PathBuf>,
    },
}

#[derive(Args, Debug, Clone)]
pub struct PlanArgs {
    /// Layout grid, HxW.
    #[arg(long, value_parser = parse_dims, default_value = "16x16")]
    pub grid: (usize, usize),
    /// `heuristic` or `exec:<shell command>`.
    #[arg(long, env = asql_core::config::PROVIDER_ENV, default_value = "heuristic")]
    pub provider: String,
    /// Seconds to wait for an external provider.
    #[arg(long, default_value_t = asql_core::config::DEFAULT_PROVIDER_TIMEOUT_SECS)]
    pub timeout: u64,
    /// Use a saved plan file instead of a provider.
    #[arg(long, conflicts_with = "provider")]
    pub plan: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct WeightArgs {
    /// Loss weights att,size,loc_cross,loc_self.
    #[arg(long, value_parser = parse_weights)]
    pub weights: Option<[f64; 4]>,
    /// Attribute leakage weight.
    #[arg(long)]
    pub eta: Option<f64>,
}

fn parse_dims(s: &str) -> Result<(usize, usize), String> {
    let (h, w) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected HxW, got {s:?}"))?;
    let h: usize = h.trim().parse().map_err(|e| format!("bad height: {e}"))?;
    let w: usize = w.trim().parse().map_err(|e| format!("bad width: {e}"))?;
    if h == 0 || w == 0 {
        return Err("dims must be positive".into());
    }
    Ok((h, w))
}

fn parse_weights(s: &str) -> Result<[f64; 4], String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|e| format!("bad weight {p:?}: {e}"))
        })
        .collect::<Result<_, _>>()?;
    parts
        .try_into()
        .map_err(|v: Vec<f64>| format!("expected 4 weights, got {}", v.len()))
}

fn error_line(kind: &str, message: &str) -> String {
    serde_json::json!({ "error": kind, "message": message }).to_string()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let rendered = e.render().to_string();
            let message = rendered
                .lines()
                .map(str::trim)
                .find(|l| !l.is_empty())
                .unwrap_or("invalid arguments")
                .trim_start_matches("error: ");
            eprintln!("{}", error_line("UsageError", message));
            return ExitCode::from(2);
        }
    };
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", error_line(e.kind(), &e.to_string()));
            ExitCode::FAILURE
        }
    }
}
