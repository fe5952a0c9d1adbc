//! Layout guidance for attention-based image generation.
//!
//! The pipeline runs scene graph → guidance plan (size order, seed grid,
//! directional constraints) → cell assignment → soft masks → guidance losses
//! over cross- and self-attention maps → gradient steps on a latent.
//!
//! Modules follow that order:
//!
//! * [`scenegraph`]: parsing, validation, predicate lexicon, constraint derivation.
//! * [`provider`]: heuristic and external-process guidance plans.
//! * [`layout`]: membership fields, cell assignment, quantity split, soft masks.
//! * [`attention`]: sigmoid scoring and the synthetic differentiable attention source.
//! * [`losses`]: attribute, size and location losses with analytic gradients.
//! * [`optimizer`]: the latent update loop and its metrics.
//! * [`tensor_file`]: the little-endian binary tensor interchange format.

pub mod attention;
pub mod config;
pub mod error;
pub mod exec;
pub mod layout;
pub mod losses;
pub mod optimizer;
pub mod provider;
pub mod scenegraph;
pub mod tensor_file;

pub use error::{Error, Result};
