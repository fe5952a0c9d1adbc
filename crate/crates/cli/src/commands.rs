use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::Duration;

use ndarray::{Ix2, Ix3};

use asql_core::attention::AttentionStack;
use asql_core::layout::{build_grid, build_masks, SoftMask};
use asql_core::losses::{GuidanceTargets, LossReport, LossWeights};
use asql_core::optimizer::{self, OptimizeConfig};
use asql_core::provider::{self, ExternalCommand, GuidancePlan, PlanDocument};
use asql_core::scenegraph::{default_lexicon, derive_constraints, parse_scene_graph, SceneGraph};
use asql_core::tensor_file::{self, Tensor};
use asql_core::{Error, Result};

use crate::{pgm, Command, PlanArgs, WeightArgs};

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Parse { graph } => {
            let graph = load_graph(&graph)?;
            println!("{}", graph.to_json_pretty());
        }
        Command::Plan { graph, plan } => {
            let graph = load_graph(&graph)?;
            println!("{}", load_plan(&graph, &plan)?.to_json());
        }
        Command::Grid {
            graph,
            plan,
            out,
            verbose,
        } => {
            let graph = load_graph(&graph)?;
            let grid = build_grid(&load_plan(&graph, &plan)?, &graph)?;
            if let Some(out) = out {
                tensor_file::write_tensor(&tensor_file::grid_to_tensor(&grid), out)?;
            }
            print!("{}", grid.render_ascii(verbose));
        }
        Command::Masks {
            graph,
            plan,
            out_dir,
            res,
            per_subregion,
            pgm,
        } => {
            let graph = load_graph(&graph)?;
            let grid = build_grid(&load_plan(&graph, &plan)?, &graph)?;
            fs::create_dir_all(&out_dir)?;
            let mut masks = build_masks(&grid, &graph, res, false)?;
            if per_subregion {
                masks.extend(build_masks(&grid, &graph, res, true)?);
            }
            let stdout = std::io::stdout();
            let mut stdout = stdout.lock();
            for mask in &masks {
                let stem = mask_stem(mask);
                let path = out_dir.join(format!("{stem}.tns"));
                tensor_file::write_tensor(&Tensor::from_f64(&mask.values), &path)?;
                writeln!(stdout, "{}", path.display())?;
                if pgm {
                    let path = out_dir.join(format!("{stem}.pgm"));
                    pgm::write(&mask.values, &path)?;
                    writeln!(stdout, "{}", path.display())?;
                }
            }
        }
        Command::Loss {
            graph,
            cross,
            self_attn,
            plan,
            res,
            weights,
            per_subregion,
        } => {
            let graph = load_graph(&graph)?;
            let plan = load_plan(&graph, &plan)?;
            let weights = loss_weights(&weights)?;
            let cross = tensor_file::read_tensor(cross)?
                .to_f64()?
                .into_dimensionality::<Ix2>()
                .map_err(|_| Error::Shape("cross attention must be a rank-2 tensor".into()))?;
            let self_attn = match self_attn {
                Some(path) => Some(
                    tensor_file::read_tensor(path)?
                        .to_f64()?
                        .into_dimensionality::<Ix3>()
                        .map_err(|_| {
                            Error::Shape("self attention must be a rank-3 tensor".into())
                        })?,
                ),
                None => None,
            };
            let stack = AttentionStack::new(cross, self_attn, res)?;
            let grid = build_grid(&plan, &graph)?;
            let targets =
                GuidanceTargets::new(&graph, &plan.size_order, &grid, res, per_subregion)?;
            let report = LossReport {
                losses: targets.evaluate(&stack, &weights)?,
                weights,
            };
            println!(
                "{}",
                serde_json::to_string(&report).expect("report serializes")
            );
        }
        Command::Optimize {
            graph,
            plan,
            steps,
            alpha,
            seed,
            beta,
            res,
            dim,
            inner,
            threshold,
            weights,
            per_subregion,
            out,
            save_cross,
        } => {
            let graph = load_graph(&graph)?;
            let plan = load_plan(&graph, &plan)?;
            let config = OptimizeConfig {
                alpha,
                steps,
                inner_iterations: inner,
                weights: loss_weights(&weights)?,
                beta,
                seed,
                latent_dim: dim,
                attention_res: res,
                per_subregion,
                loss_threshold: threshold,
                ..OptimizeConfig::default()
            };
            let trajectory = optimizer::run(&graph, &plan, &config)?;
            let lines = trajectory.to_json_lines();
            match out {
                Some(path) => fs::write(path, lines)?,
                None => print!("{lines}"),
            }
            if let Some(path) = save_cross {
                tensor_file::write_tensor(&Tensor::from_f64(&trajectory.final_stack.cross), path)?;
            }
        }
    }
    Ok(())
}

fn mask_stem(mask: &SoftMask) -> String {
    if mask.subregion == 0 {
        format!("entity_{}", mask.entity_id)
    } else {
        format!("entity_{}_sub_{}", mask.entity_id, mask.subregion)
    }
}

fn load_graph(path: &Path) -> Result<SceneGraph> {
    parse_scene_graph(&fs::read_to_string(path)?)
}

fn load_plan(graph: &SceneGraph, args: &PlanArgs) -> Result<GuidancePlan> {
    if let Some(path) = &args.plan {
        let doc: PlanDocument = serde_json::from_str(&fs::read_to_string(path)?)
            .map_err(|e| Error::Syntax(format!("plan file: {e}")))?;
        let dims = doc.grid.map_or(args.grid, |g| (g.height, g.width));
        return provider::validate_plan(provider::decode_plan(doc, dims)?, graph);
    }
    match args.provider.trim() {
        "heuristic" => {
            let constraints = derive_constraints(graph, &default_lexicon())?;
            provider::heuristic_plan(graph, &constraints, args.grid)
        }
        other => match other.strip_prefix("exec:") {
            Some(cmd) if !cmd.trim().is_empty() => {
                let endpoint =
                    ExternalCommand::new(cmd).with_timeout(Duration::from_secs(args.timeout));
                provider::external_plan(graph, args.grid, &endpoint)
            }
            _ => Err(Error::Validation(format!(
                "unknown provider {other:?}; expected \"heuristic\" or \"exec:<command>\""
            ))),
        },
    }
}

fn loss_weights(args: &WeightArgs) -> Result<LossWeights> {
    let mut weights = LossWeights::default();
    if let Some([att, size, loc_cross, loc_self]) = args.weights {
        weights.lambda_att = att;
        weights.lambda_size = size;
        weights.lambda_loc_cross = loc_cross;
        weights.lambda_loc_self = loc_self;
    }
    if let Some(eta) = args.eta {
        weights.eta = eta;
    }
    weights.validate()?;
    Ok(weights)
}
