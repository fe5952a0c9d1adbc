//! Default constants shared across the pipeline.

/// Layout grid height and width (the 16×16 attention resolution of SD v1.4).
pub const DEFAULT_GRID: (usize, usize) = (16, 16);

/// Attention map resolution the masks are resampled to.
pub const DEFAULT_ATTENTION_RES: (usize, usize) = (16, 16);

/// Sigmoid sharpness applied to attention logits.
pub const DEFAULT_BETA: f64 = 100.0;

/// Number of denoising timesteps in a sampling schedule (informational).
pub const DEFAULT_TIMESTEPS: usize = 50;

pub const DEFAULT_STEP_SIZE: f64 = 0.1;
pub const DEFAULT_STEPS: usize = 200;

/// Latent feature width of the synthetic attention source.
pub const DEFAULT_LATENT_DIM: usize = 16;

/// Seed for the frozen query projection and token keys.
pub const PROJECTION_SEED: u64 = 0x5EED_A77E;

/// Clamp applied to predictions before taking logarithms.
pub const DEFAULT_CLAMP_EPS: f64 = 1e-7;

/// Guard added to Dice denominators.
pub const DICE_EPS: f64 = 1e-8;

/// Wall-clock limit for an external plan provider, in seconds.
pub const DEFAULT_PROVIDER_TIMEOUT_SECS: u64 = 60;

/// Environment variable naming the default external provider command.
pub const PROVIDER_ENV: &str = "ASQL_PROVIDER";
