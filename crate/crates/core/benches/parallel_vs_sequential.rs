use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use ndarray::Array2;

use asql_core::attention::{grad_check, SyntheticLatent};
use asql_core::layout::{
    assign_cells, build_grid, build_masks, membership_field, AssignmentGrid, MembershipField,
};
use asql_core::losses::{loc_self_loss_grad, GuidanceTargets, LossWeights};
use asql_core::provider::{heuristic_plan, GuidancePlan, SeedPoint};
use asql_core::scenegraph::{default_lexicon, derive_constraints, parse_scene_graph, SceneGraph};

const SCENE: &str = r#"{"caption":"a cat on a table next to a dog under a lamp, a tree right of the dog and two birds above the tree","entities":[
  {"name":"cat","attributes":["black"]},{"name":"table"},{"name":"dog","attributes":["small"]},
  {"name":"lamp"},{"name":"tree"},{"name":"bird","quantity":2}],
  "relations":[{"subject":1,"predicate":"on","object":2},{"subject":3,"predicate":"next to","object":2},
  {"subject":3,"predicate":"under","object":4},{"subject":5,"predicate":"right of","object":3},
  {"subject":6,"predicate":"above","object":5}]}"#;

fn scene(dims: (usize, usize)) -> (SceneGraph, GuidancePlan, AssignmentGrid) {
    let graph = parse_scene_graph(SCENE).unwrap();
    let constraints = derive_constraints(&graph, &default_lexicon()).unwrap();
    let plan = heuristic_plan(&graph, &constraints, dims).unwrap();
    let grid = build_grid(&plan, &graph).unwrap();
    (graph, plan, grid)
}

/// Runs `f` on the global pool and on a one-thread pool.
fn compare<F: Fn() + Sync>(c: &mut Criterion, group: &str, f: F) {
    let mut g = c.benchmark_group(group);
    #[cfg(feature = "parallel")]
    {
        g.bench_function(
            BenchmarkId::new("rayon", rayon::current_num_threads()),
            |b| b.iter(&f),
        );
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        g.bench_function(BenchmarkId::new("single_thread", 1), |b| {
            b.iter(|| single.install(&f))
        });
    }
    #[cfg(not(feature = "parallel"))]
    g.bench_function(BenchmarkId::new("sequential", 1), |b| b.iter(&f));
    g.finish();
}

fn masks(c: &mut Criterion) {
    let (graph, _, grid) = scene((32, 32));
    compare(c, "build_masks_64x64", || {
        black_box(build_masks(&grid, &graph, (64, 64), true).unwrap());
    });
}

fn loc_self(c: &mut Criterion) {
    let (graph, plan, grid) = scene((16, 16));
    let targets = GuidanceTargets::new(&graph, &plan.size_order, &grid, (16, 16), false).unwrap();
    let latent = SyntheticLatent::new((16, 16), targets.tokens.count(), 16, 1);
    let stack = latent.forward(100.0);
    let self_attn = stack.self_attn.unwrap();
    let masks: Vec<_> = targets.self_masks.iter().map(|m| m.values.view()).collect();
    compare(c, "loc_self_grad_16x16", || {
        black_box(loc_self_loss_grad(self_attn.view(), &masks).unwrap());
    });
}

fn gradient_check(c: &mut Criterion) {
    let (graph, plan, grid) = scene((8, 8));
    let targets = GuidanceTargets::new(&graph, &plan.size_order, &grid, (8, 8), false).unwrap();
    let latent = SyntheticLatent::new((8, 8), targets.tokens.count(), 16, 2);
    let weights = LossWeights::default();
    let (_, grads) = targets
        .evaluate_with_gradients(&latent.forward(100.0), &weights)
        .unwrap();
    let analytic = latent.latent_gradient(100.0, &grads.cross, grads.self_attn.as_ref());
    compare(c, "grad_check_8x8_d16", || {
        let value = |x: &Array2<f64>| {
            targets
                .evaluate(&latent.forward_at(&x.view(), 100.0), &weights)
                .unwrap()
                .total
        };
        black_box(grad_check(value, &analytic, &latent.x, 1e-4));
    });
}

fn assignment(c: &mut Criterion) {
    let (graph, plan, _) = scene((128, 128));
    let seeds: Vec<SeedPoint> = plan.seeds();
    let fields: Vec<MembershipField> = graph
        .ids()
        .into_iter()
        .map(|id| membership_field(id, &seeds, &plan.constraints, (128, 128)).unwrap())
        .collect();
    compare(c, "assign_cells_128x128", || {
        black_box(assign_cells(&fields, &seeds).unwrap());
    });
}

criterion_group! {
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = masks, loc_self, gradient_check, assignment
}
criterion_main!(benches);
