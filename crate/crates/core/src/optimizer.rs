//! Inference-time optimization: gradient steps on the synthetic latent
//! against the weighted guidance loss.

use std::collections::BTreeMap;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::attention::{AttentionStack, SyntheticLatent};
use crate::config;
use crate::error::{Error, Result};
use crate::layout::{build_grid, AssignmentGrid};
use crate::losses::{GuidanceTargets, LossBreakdown, LossWeights};
use crate::provider::GuidancePlan;
use crate::scenegraph::SceneGraph;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizeConfig {
    /// Step size.
    pub alpha: f64,
    /// Maximum number of recorded steps.
    pub steps: usize,
    /// Gradient updates per recorded step.
    pub inner_iterations: usize,
    /// Length of the sampling schedule this loop stands for; not used by the loop.
    pub timesteps: usize,
    pub weights: LossWeights,
    pub beta: f64,
    pub seed: u64,
    pub latent_dim: usize,
    /// Attention resolution; masks are resampled to it.
    pub attention_res: (usize, usize),
    /// Location losses per quantity sub-region instead of per entity.
    pub per_subregion: bool,
    /// Stop once the total loss falls to or below this value.
    pub loss_threshold: Option<f64>,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        OptimizeConfig {
            alpha: config::DEFAULT_STEP_SIZE,
            steps: config::DEFAULT_STEPS,
            inner_iterations: 1,
            timesteps: config::DEFAULT_TIMESTEPS,
            weights: LossWeights::default(),
            beta: config::DEFAULT_BETA,
            seed: 0,
            latent_dim: config::DEFAULT_LATENT_DIM,
            attention_res: config::DEFAULT_ATTENTION_RES,
            per_subregion: false,
            loss_threshold: None,
        }
    }
}

impl OptimizeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::Validation(
                "alpha must be a finite non-negative number".into(),
            ));
        }
        if self.steps == 0 || self.inner_iterations == 0 {
            return Err(Error::Validation(
                "steps and inner_iterations must be at least 1".into(),
            ));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return Err(Error::Validation("beta must be positive".into()));
        }
        if self.latent_dim == 0 || self.attention_res.0 == 0 || self.attention_res.1 == 0 {
            return Err(Error::Validation(
                "latent dim and attention resolution must be positive".into(),
            ));
        }
        self.weights.validate()
    }
}

/// Share of a map's mass that falls inside `region`; 0 for an all-zero map.
pub fn mass_in_region(map: ArrayView2<'_, f64>, region: ArrayView2<'_, bool>) -> Result<f64> {
    if map.dim() != region.dim() {
        return Err(Error::Shape(format!(
            "map is {:?}, region is {:?}",
            map.dim(),
            region.dim()
        )));
    }
    let (mut inside, mut total) = (0.0, 0.0);
    for (&v, &r) in map.iter().zip(region.iter()) {
        total += v;
        if r {
            inside += v;
        }
    }
    Ok(if total == 0.0 { 0.0 } else { inside / total })
}

/// One gradient update of the latent. Returns the breakdown measured before
/// the update.
pub fn step(
    latent: &mut SyntheticLatent,
    targets: &GuidanceTargets,
    config: &OptimizeConfig,
    step_index: usize,
) -> Result<LossBreakdown> {
    let stack = latent.forward(config.beta);
    let (breakdown, grads) = targets.evaluate_with_gradients(&stack, &config.weights)?;
    let values = [
        breakdown.att,
        breakdown.size,
        breakdown.loc_cross,
        breakdown.loc_self,
        breakdown.total,
    ];
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            step: step_index,
            what: "loss".into(),
        });
    }
    let gradient = latent.latent_gradient(config.beta, &grads.cross, grads.self_attn.as_ref());
    if gradient.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            step: step_index,
            what: "gradient".into(),
        });
    }
    if config.alpha != 0.0 {
        latent.x.scaled_add(-config.alpha, &gradient);
    }
    Ok(breakdown)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StepRecord {
    pub step: usize,
    pub losses: LossBreakdown,
    /// Entity id → share of its attention inside its region.
    pub mass: BTreeMap<u32, f64>,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub records: Vec<StepRecord>,
    /// Attention after the last update.
    pub final_stack: AttentionStack,
    pub final_losses: LossBreakdown,
    pub final_mass: BTreeMap<u32, f64>,
    pub grid: AssignmentGrid,
}

impl Trajectory {
    /// One JSON object per step.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for r in &self.records {
            out.push_str(&serde_json::to_string(r).expect("records serialize"));
            out.push('\n');
        }
        out
    }
}

/// Prepared state for a run: grid, masks and the regions used for metrics.
#[derive(Clone, Debug)]
pub struct RunContext {
    pub grid: AssignmentGrid,
    pub targets: GuidanceTargets,
    regions: Vec<(u32, Array2<bool>)>,
}

impl RunContext {
    pub fn new(graph: &SceneGraph, plan: &GuidancePlan, config: &OptimizeConfig) -> Result<Self> {
        let grid = build_grid(plan, graph)?;
        let targets = GuidanceTargets::new(
            graph,
            &plan.size_order,
            &grid,
            config.attention_res,
            config.per_subregion,
        )?;
        let regions = graph
            .ids()
            .into_iter()
            .map(|id| (id, grid.region_at(id, None, config.attention_res)))
            .collect();
        Ok(RunContext {
            grid,
            targets,
            regions,
        })
    }

    pub fn mass(&self, stack: &AttentionStack) -> Result<BTreeMap<u32, f64>> {
        self.regions
            .iter()
            .map(|(id, region)| {
                let token = self
                    .targets
                    .tokens
                    .entity_token(*id)
                    .expect("every entity has a token");
                let map = stack.token_map(token);
                Ok((*id, mass_in_region(map.view(), region.view())?))
            })
            .collect()
    }
}

/// Optimize a fresh latent against the plan's guidance.
pub fn run(graph: &SceneGraph, plan: &GuidancePlan, config: &OptimizeConfig) -> Result<Trajectory> {
    config.validate()?;
    let ctx = RunContext::new(graph, plan, config)?;
    let mut latent = SyntheticLatent::new(
        config.attention_res,
        ctx.targets.tokens.count(),
        config.latent_dim,
        config.seed,
    );
    run_with(&ctx, &mut latent, config)
}

/// Optimize an existing latent.
pub fn run_with(
    ctx: &RunContext,
    latent: &mut SyntheticLatent,
    config: &OptimizeConfig,
) -> Result<Trajectory> {
    let mut records = Vec::with_capacity(config.steps);
    for k in 0..config.steps {
        let mass = ctx.mass(&latent.forward(config.beta))?;
        let losses = step(latent, &ctx.targets, config, k)?;
        for _ in 1..config.inner_iterations {
            step(latent, &ctx.targets, config, k)?;
        }
        let done = config.loss_threshold.is_some_and(|t| losses.total <= t);
        records.push(StepRecord {
            step: k,
            losses,
            mass,
        });
        if done {
            break;
        }
    }
    let final_stack = latent.forward(config.beta);
    let final_losses = ctx.targets.evaluate(&final_stack, &config.weights)?;
    let final_mass = ctx.mass(&final_stack)?;
    Ok(Trajectory {
        records,
        final_stack,
        final_losses,
        final_mass,
        grid: ctx.grid.clone(),
    })
}
