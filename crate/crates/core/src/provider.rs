//! Guidance plans: size ordering, seed grid and relative constraints.
//!
//! Plans come either from [`heuristic_plan`], a deterministic rule-based
//! planner, or from [`external_plan`], which hands the caption and scene
//! graph to an external process over stdin/stdout and validates its answer.

use std::collections::BTreeSet;
use std::io::{Read, Write};
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::config::DEFAULT_PROVIDER_TIMEOUT_SECS;
use crate::error::{Error, Result};
use crate::layout::pair_feasibility;
use crate::scenegraph::{Axis, AxisOrder, Constraints, GraphDocument, SceneGraph};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SeedPoint {
    pub entity_id: u32,
    /// Column.
    pub x: usize,
    /// Row, 0 at the top.
    pub y: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GuidancePlan {
    /// Entity ids by increasing intended size.
    pub size_order: Vec<u32>,
    /// `H × W`; nonzero cells carry the id of the entity seeded there.
    pub seed_grid: Array2<u32>,
    pub constraints: Constraints,
}

impl GuidancePlan {
    pub fn dims(&self) -> (usize, usize) {
        self.seed_grid.dim()
    }

    /// One seed per entity present in the grid: the floor of the centroid of
    /// its marked cells. Sorted by entity id.
    pub fn seeds(&self) -> Vec<SeedPoint> {
        let mut acc: std::collections::BTreeMap<u32, (usize, usize, usize)> = Default::default();
        for ((y, x), &v) in self.seed_grid.indexed_iter() {
            if v != 0 {
                let e = acc.entry(v).or_insert((0, 0, 0));
                e.0 += x;
                e.1 += y;
                e.2 += 1;
            }
        }
        acc.into_iter()
            .map(|(entity_id, (sx, sy, n))| SeedPoint {
                entity_id,
                x: sx / n,
                y: sy / n,
            })
            .collect()
    }

    pub fn to_document(&self) -> PlanDocument {
        let (height, width) = self.dims();
        PlanDocument {
            grid: Some(GridDims { height, width }),
            size_order: self.size_order.clone(),
            seed_grid: self
                .seed_grid
                .outer_iter()
                .map(|row| row.iter().map(|&v| v as i64).collect())
                .collect(),
            constraints: self.constraints.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_document()).expect("plan serializes")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridDims {
    pub height: usize,
    pub width: usize,
}

/// Wire form of a plan. Provider responses omit `grid`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlanDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridDims>,
    pub size_order: Vec<u32>,
    pub seed_grid: Vec<Vec<i64>>,
    pub constraints: Constraints,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProviderRequest {
    pub caption: String,
    pub scene_graph: GraphDocument,
    pub grid: GridDims,
}

/// Decode a plan document into a grid of the given dims. Does not validate
/// against a scene graph.
pub fn decode_plan(doc: PlanDocument, dims: (usize, usize)) -> Result<GuidancePlan> {
    let (h, w) = dims;
    if let Some(grid) = doc.grid {
        if (grid.height, grid.width) != dims {
            return Err(Error::Validation(format!(
                "plan grid {}x{} does not match requested {h}x{w}",
                grid.height, grid.width
            )));
        }
    }
    if doc.seed_grid.len() != h {
        return Err(Error::Validation(format!(
            "seed_grid has {} rows, expected {h}",
            doc.seed_grid.len()
        )));
    }
    let mut seed_grid = Array2::<u32>::zeros((h, w));
    for (y, row) in doc.seed_grid.iter().enumerate() {
        if row.len() != w {
            return Err(Error::Validation(format!(
                "seed_grid row {y} has {} columns, expected {w}",
                row.len()
            )));
        }
        for (x, &v) in row.iter().enumerate() {
            if v < 0 || v > u32::MAX as i64 {
                return Err(Error::Validation(format!(
                    "seed_grid value {v} at ({x}, {y}) is not an entity id"
                )));
            }
            seed_grid[[y, x]] = v as u32;
        }
    }
    Ok(GuidancePlan {
        size_order: doc.size_order,
        seed_grid,
        constraints: doc.constraints,
    })
}

/// Check every plan invariant against the graph, returning the plan unchanged.
pub fn validate_plan(plan: GuidancePlan, graph: &SceneGraph) -> Result<GuidancePlan> {
    let (h, w) = plan.dims();
    if h == 0 || w == 0 {
        return Err(Error::Validation(format!(
            "grid dims {h}x{w} must be positive"
        )));
    }
    let ids = graph.ids();
    let id_set: BTreeSet<u32> = ids.iter().copied().collect();

    let mut order = plan.size_order.clone();
    order.sort_unstable();
    if order != ids {
        return Err(Error::Validation("size_order not a permutation".into()));
    }

    for ((y, x), &v) in plan.seed_grid.indexed_iter() {
        if v != 0 && !id_set.contains(&v) {
            return Err(Error::Validation(format!(
                "seed_grid value {v} at ({x}, {y}) is not an entity id"
            )));
        }
    }
    let seeds = plan.seeds();
    for &id in &ids {
        if !seeds.iter().any(|s| s.entity_id == id) {
            return Err(Error::Validation(format!("entity {id} has no seed")));
        }
    }

    for c in plan.constraints.iter() {
        if !id_set.contains(&c.i) || !id_set.contains(&c.j) {
            return Err(Error::Validation(format!(
                "constraint ({}, {}) references an unknown entity",
                c.i, c.j
            )));
        }
        if c.i == c.j {
            return Err(Error::Validation(format!(
                "constraint ({0}, {0}) is reflexive",
                c.i
            )));
        }
    }
    if !plan.constraints.is_symmetric() {
        return Err(Error::Validation(
            "constraint set is not symmetry-closed".into(),
        ));
    }

    let seed_of = |id: u32| *seeds.iter().find(|s| s.entity_id == id).unwrap();
    for c in plan.constraints.iter().filter(|c| c.fully_constrained()) {
        let (si, sj) = (seed_of(c.i), seed_of(c.j));
        if !pair_feasibility(&c, &si, (sj.x, sj.y)) {
            return Err(Error::Validation(format!(
                "seed violates constraint ({}, {}): {:?}/{:?} with seeds ({}, {}) and ({}, {})",
                c.i, c.j, c.vertical, c.horizontal, si.x, si.y, sj.x, sj.y
            )));
        }
    }
    Ok(plan)
}

/// Coarse size class of a noun, 1 (tiny) to 5 (huge). Unknown nouns get 3.
pub fn size_class(name: &str) -> u8 {
    const CLASSES: &[(&str, u8)] = &[
        ("ant", 1),
        ("bee", 1),
        ("butterfly", 1),
        ("coin", 1),
        ("key", 1),
        ("ring", 1),
        ("spoon", 1),
        ("pen", 1),
        ("apple", 1),
        ("egg", 1),
        ("cup", 1),
        ("phone", 1),
        ("mouse", 1),
        ("banana", 1),
        ("orange", 1),
        ("bird", 2),
        ("book", 2),
        ("bottle", 2),
        ("hat", 2),
        ("vase", 2),
        ("clock", 2),
        ("cat", 2),
        ("ball", 2),
        ("flower", 2),
        ("laptop", 2),
        ("backpack", 2),
        ("lamp", 2),
        ("dog", 3),
        ("chair", 3),
        ("child", 3),
        ("bicycle", 3),
        ("suitcase", 3),
        ("sheep", 3),
        ("tv", 3),
        ("person", 3),
        ("man", 3),
        ("woman", 3),
        ("table", 3),
        ("desk", 4),
        ("bed", 4),
        ("sofa", 4),
        ("couch", 4),
        ("horse", 4),
        ("cow", 4),
        ("motorbike", 4),
        ("motorcycle", 4),
        ("car", 4),
        ("tree", 4),
        ("bear", 4),
        ("elephant", 5),
        ("bus", 5),
        ("truck", 5),
        ("house", 5),
        ("train", 5),
        ("airplane", 5),
        ("boat", 5),
        ("building", 5),
        ("mountain", 5),
    ];
    let key = name.trim().to_lowercase();
    let lookup = |k: &str| CLASSES.iter().find(|(n, _)| *n == k).map(|&(_, c)| c);
    lookup(&key)
        .or_else(|| key.strip_suffix("es").and_then(lookup))
        .or_else(|| key.strip_suffix('s').and_then(lookup))
        .unwrap_or(3)
}

/// Deterministic rule-based plan.
///
/// Seeds sit at the centre of their per-axis rank band:
/// `floor((rank + 0.5) · extent / rank_count)`. Entities that would share a
/// cell are shifted right (wrapping) to the first free column that keeps
/// every constrained axis satisfied; failing that, the entity's whole
/// column class is shifted together.
pub fn heuristic_plan(
    graph: &SceneGraph,
    constraints: &Constraints,
    dims: (usize, usize),
) -> Result<GuidancePlan> {
    let (h, w) = dims;
    if h == 0 || w == 0 {
        return Err(Error::Capacity(format!(
            "grid dims {h}x{w} must be positive"
        )));
    }
    let ids = graph.ids();

    let mut size_order = ids.clone();
    size_order.sort_by_key(|&id| (size_class(&graph.entity(id).unwrap().name), id));

    let xs = AxisOrder::build(&ids, constraints, Axis::Horizontal)?;
    let ys = AxisOrder::build(&ids, constraints, Axis::Vertical)?;
    if xs.rank_count() > w {
        return Err(Error::Capacity(format!(
            "{} horizontal ranks exceed grid width {w}",
            xs.rank_count()
        )));
    }
    if ys.rank_count() > h {
        return Err(Error::Capacity(format!(
            "{} vertical ranks exceed grid height {h}",
            ys.rank_count()
        )));
    }
    let band = |rank: usize, count: usize, extent: usize| (2 * rank + 1) * extent / (2 * count);

    let mut seeds: Vec<SeedPoint> = ids
        .iter()
        .map(|&id| SeedPoint {
            entity_id: id,
            x: band(xs.rank(id).unwrap(), xs.rank_count(), w),
            y: band(ys.rank(id).unwrap(), ys.rank_count(), h),
        })
        .collect();

    let consistent = |seeds: &[SeedPoint], moved: &[SeedPoint]| {
        moved.iter().all(|m| {
            seeds
                .iter()
                .filter(|o| o.entity_id != m.entity_id)
                .all(|other| {
                    let other = moved
                        .iter()
                        .find(|p| p.entity_id == other.entity_id)
                        .unwrap_or(other);
                    let ok_in = constraints
                        .get(other.entity_id, m.entity_id)
                        .is_none_or(|c| pair_feasibility(&c, other, (m.x, m.y)));
                    let ok_out = constraints
                        .get(m.entity_id, other.entity_id)
                        .is_none_or(|c| pair_feasibility(&c, m, (other.x, other.y)));
                    ok_in && ok_out
                })
        })
    };

    for k in 0..seeds.len() {
        let collides =
            |s: &[SeedPoint], x: usize, y: usize| s[..k].iter().any(|p| p.x == x && p.y == y);
        if !collides(&seeds, seeds[k].x, seeds[k].y) {
            continue;
        }
        let (x0, y) = (seeds[k].x, seeds[k].y);
        let id = seeds[k].entity_id;
        let single = (1..w).map(|shift| (x0 + shift) % w).find(|&x| {
            !collides(&seeds, x, y)
                && consistent(
                    &seeds,
                    &[SeedPoint {
                        entity_id: id,
                        x,
                        y,
                    }],
                )
        });
        if let Some(x) = single {
            seeds[k].x = x;
            continue;
        }
        // move the entity's whole column class so shared columns stay shared
        let class: Vec<usize> = (0..seeds.len())
            .filter(|&i| xs.same_class(seeds[i].entity_id, id))
            .collect();
        let shifted = (1..w).find_map(|shift| {
            let moved: Vec<SeedPoint> = class
                .iter()
                .map(|&i| SeedPoint {
                    x: (seeds[i].x + shift) % w,
                    ..seeds[i]
                })
                .collect();
            let free = moved.iter().enumerate().all(|(a, m)| {
                moved[..a].iter().all(|o| o.x != m.x || o.y != m.y)
                    && seeds
                        .iter()
                        .enumerate()
                        .all(|(i, o)| class.contains(&i) || o.x != m.x || o.y != m.y)
            });
            (free && consistent(&seeds, &moved)).then_some(moved)
        });
        match shifted {
            Some(moved) => {
                for (&i, m) in class.iter().zip(moved) {
                    seeds[i] = m;
                }
            }
            None => {
                return Err(Error::Capacity(format!(
                    "no free seed cell for entity {id} in row {y}"
                )))
            }
        }
    }

    let mut seed_grid = Array2::<u32>::zeros((h, w));
    for s in &seeds {
        seed_grid[[s.y, s.x]] = s.entity_id;
    }
    Ok(GuidancePlan {
        size_order,
        seed_grid,
        constraints: constraints.clone(),
    })
}

/// An external planning process.
#[derive(Clone, Debug)]
pub struct ExternalCommand {
    /// Shell command line, run with `sh -c`.
    pub command: String,
    pub timeout: Duration,
}

impl ExternalCommand {
    pub fn new(command: impl Into<String>) -> Self {
        ExternalCommand {
            command: command.into(),
            timeout: Duration::from_secs(DEFAULT_PROVIDER_TIMEOUT_SECS),
        }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }
}

/// Ask an external process for a plan and validate what it returns.
pub fn external_plan(
    graph: &SceneGraph,
    dims: (usize, usize),
    endpoint: &ExternalCommand,
) -> Result<GuidancePlan> {
    let request = ProviderRequest {
        caption: graph.caption.clone(),
        scene_graph: graph.to_document(),
        grid: GridDims {
            height: dims.0,
            width: dims.1,
        },
    };
    let payload = serde_json::to_vec(&request).expect("request serializes");
    let stdout = run_process(&endpoint.command, &payload, endpoint.timeout)?;
    let doc: PlanDocument = serde_json::from_slice(&stdout)
        .map_err(|e| Error::Protocol(format!("malformed provider response: {e}")))?;
    validate_plan(decode_plan(doc, dims)?, graph)
}

fn run_process(command: &str, input: &[u8], timeout: Duration) -> Result<Vec<u8>> {
    let mut child = Command::new("sh")
        .arg("-c")
        .arg(command)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| Error::Transport(format!("failed to launch `{command}`: {e}")))?;

    let mut stdin = child.stdin.take().expect("piped stdin");
    let input = input.to_vec();
    // a provider that never reads stdin must not block us
    let writer = thread::spawn(move || {
        let _ = stdin.write_all(&input);
    });
    let mut stdout = child.stdout.take().expect("piped stdout");
    let reader = thread::spawn(move || {
        let mut buf = Vec::new();
        stdout.read_to_end(&mut buf).map(|_| buf)
    });
    let mut stderr = child.stderr.take().expect("piped stderr");
    let err_reader = thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = stderr.read_to_end(&mut buf);
        buf
    });

    let deadline = Instant::now() + timeout;
    let status = loop {
        match child.try_wait()? {
            Some(status) => break status,
            None if Instant::now() >= deadline => {
                let _ = child.kill();
                let _ = child.wait();
                return Err(Error::Transport(format!(
                    "provider timed out after {:.1} s",
                    timeout.as_secs_f64()
                )));
            }
            None => thread::sleep(Duration::from_millis(5)),
        }
    };
    let _ = writer.join();
    let out = reader
        .join()
        .map_err(|_| Error::Transport("stdout reader panicked".into()))?
        .map_err(|e| Error::Transport(format!("reading provider stdout: {e}")))?;
    let err = err_reader.join().unwrap_or_default();
    if !status.success() {
        let code = status
            .code()
            .map_or_else(|| "signal".to_string(), |c| c.to_string());
        let detail = String::from_utf8_lossy(&err);
        return Err(Error::Transport(format!(
            "provider exited with status {code}: {}",
            detail.trim()
        )));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenegraph::{
        default_lexicon, derive_constraints, parse_scene_graph, DirectionalConstraint, Horizontal,
        Vertical,
    };

    fn graph(doc: &str) -> SceneGraph {
        parse_scene_graph(doc).unwrap()
    }

    fn seed(plan: &GuidancePlan, id: u32) -> (usize, usize) {
        let s = plan
            .seeds()
            .into_iter()
            .find(|s| s.entity_id == id)
            .unwrap();
        (s.x, s.y)
    }

    #[test]
    fn cat_left_of_dog_on_4x4() {
        let g = graph(
            r#"{"caption":"c","entities":[{"name":"cat"},{"name":"dog"}],"relations":[{"subject":1,"predicate":"left of","object":2}]}"#,
        );
        let c = derive_constraints(&g, &default_lexicon()).unwrap();
        let plan = heuristic_plan(&g, &c, (4, 4)).unwrap();
        assert_eq!(seed(&plan, 1), (1, 2));
        assert_eq!(seed(&plan, 2), (3, 2));
        assert_eq!(plan.seed_grid.iter().filter(|&&v| v != 0).count(), 2);
        validate_plan(plan, &g).unwrap();
    }

    #[test]
    fn single_entity_sits_in_the_middle() {
        let g = graph(r#"{"caption":"c","entities":[{"name":"cat"}]}"#);
        let plan = heuristic_plan(&g, &Constraints::new(), (4, 4)).unwrap();
        assert_eq!(seed(&plan, 1), (2, 2));
    }

    #[test]
    fn collisions_shift_right() {
        let g = graph(r#"{"caption":"c","entities":[{"name":"cat"},{"name":"dog"}]}"#);
        let plan = heuristic_plan(&g, &Constraints::new(), (4, 4)).unwrap();
        assert_eq!(seed(&plan, 1), (2, 2));
        assert_eq!(seed(&plan, 2), (3, 2));
    }

    #[test]
    fn collision_shift_wraps() {
        let g = graph(r#"{"caption":"c","entities":[{"name":"a"},{"name":"b"},{"name":"c"}]}"#);
        let plan = heuristic_plan(&g, &Constraints::new(), (3, 3)).unwrap();
        assert_eq!(seed(&plan, 1), (1, 1));
        assert_eq!(seed(&plan, 2), (2, 1));
        assert_eq!(seed(&plan, 3), (0, 1));
    }

    #[test]
    fn size_order_uses_classes_then_id() {
        let g = graph(
            r#"{"caption":"c","entities":[{"name":"elephant"},{"name":"widget"},{"name":"apples"},{"name":"gizmo"}]}"#,
        );
        let plan = heuristic_plan(&g, &Constraints::new(), (4, 4)).unwrap();
        assert_eq!(plan.size_order, vec![3, 2, 4, 1]);
    }

    #[test]
    fn same_axis_is_respected_across_chains() {
        // 1 on 2, 3 left of 2: 1 must share 2's column
        let g = graph(
            r#"{"caption":"c","entities":[{"name":"a"},{"name":"b"},{"name":"c"}],"relations":[{"subject":1,"predicate":"on","object":2},{"subject":3,"predicate":"left of","object":2}]}"#,
        );
        let c = derive_constraints(&g, &default_lexicon()).unwrap();
        let plan = heuristic_plan(&g, &c, (8, 8)).unwrap();
        assert_eq!(seed(&plan, 1).0, seed(&plan, 2).0);
        validate_plan(plan, &g).unwrap();
    }

    #[test]
    fn column_classes_shift_together() {
        let g = parse_scene_graph(
            r#"{"caption":"c","entities":[{"name":"cat"},{"name":"table"},{"name":"dog"},{"name":"lamp"}],"relations":[{"subject":1,"predicate":"on","object":2},{"subject":3,"predicate":"under","object":4}]}"#,
        )
        .unwrap();
        let c = derive_constraints(&g, &default_lexicon()).unwrap();
        let plan = heuristic_plan(&g, &c, (8, 8)).unwrap();
        let seeds: Vec<(usize, usize)> = plan.seeds().iter().map(|s| (s.x, s.y)).collect();
        assert_eq!(seeds, vec![(4, 2), (4, 6), (5, 6), (5, 2)]);
        validate_plan(plan, &g).unwrap();
    }

    #[test]
    fn stacked_class_members_are_a_capacity_error() {
        let g = parse_scene_graph(
            r#"{"caption":"c","entities":[{"name":"cat"},{"name":"cat"},{"name":"cat"}],"relations":[{"subject":1,"predicate":"under","object":3},{"subject":1,"predicate":"below","object":2}]}"#,
        )
        .unwrap();
        let c = derive_constraints(&g, &default_lexicon()).unwrap();
        assert!(matches!(
            heuristic_plan(&g, &c, (3, 3)),
            Err(Error::Capacity(_))
        ));
    }

    #[test]
    fn too_many_ranks_is_a_capacity_error() {
        let g = graph(
            r#"{"caption":"c","entities":[{"name":"a"},{"name":"b"},{"name":"c"}],"relations":[{"subject":1,"predicate":"left of","object":2},{"subject":2,"predicate":"left of","object":3}]}"#,
        );
        let c = derive_constraints(&g, &default_lexicon()).unwrap();
        assert_eq!(
            heuristic_plan(&g, &c, (4, 2)).unwrap_err().kind(),
            "CapacityError"
        );
    }

    #[test]
    fn validate_rejects_non_permutation() {
        let g = graph(r#"{"caption":"c","entities":[{"name":"a"},{"name":"b"}]}"#);
        let mut plan = heuristic_plan(&g, &Constraints::new(), (2, 2)).unwrap();
        plan.size_order = vec![1, 1];
        let err = validate_plan(plan, &g).unwrap_err();
        assert!(
            err.to_string().contains("size_order not a permutation"),
            "{err}"
        );
    }

    #[test]
    fn validate_rejects_missing_seed() {
        let g = graph(r#"{"caption":"c","entities":[{"name":"a"},{"name":"b"}]}"#);
        let plan = GuidancePlan {
            size_order: vec![1, 2],
            seed_grid: Array2::from_shape_vec((2, 2), vec![1, 0, 0, 0]).unwrap(),
            constraints: Constraints::new(),
        };
        let err = validate_plan(plan, &g).unwrap_err();
        assert!(err.to_string().contains("entity 2 has no seed"), "{err}");
    }

    #[test]
    fn validate_rejects_inconsistent_seeds() {
        let g = graph(r#"{"caption":"c","entities":[{"name":"cat"},{"name":"dog"}]}"#);
        let right = DirectionalConstraint {
            i: 1,
            j: 2,
            vertical: Vertical::Same,
            horizontal: Horizontal::Right,
        };
        let constraints: Constraints = [right, right.inverse()].into_iter().collect();
        let mut seed_grid = Array2::<u32>::zeros((4, 4));
        seed_grid[[1, 3]] = 1;
        seed_grid[[1, 1]] = 2;
        let plan = GuidancePlan {
            size_order: vec![1, 2],
            seed_grid,
            constraints,
        };
        let err = validate_plan(plan, &g).unwrap_err();
        assert!(
            err.to_string().contains("seed violates constraint"),
            "{err}"
        );
    }

    #[test]
    fn multi_cell_seeds_reduce_to_floor_centroid() {
        let mut seed_grid = Array2::<u32>::zeros((4, 4));
        seed_grid[[0, 0]] = 1;
        seed_grid[[0, 1]] = 1;
        seed_grid[[1, 0]] = 1;
        seed_grid[[1, 1]] = 1;
        let plan = GuidancePlan {
            size_order: vec![1],
            seed_grid,
            constraints: Constraints::new(),
        };
        assert_eq!(
            plan.seeds(),
            vec![SeedPoint {
                entity_id: 1,
                x: 0,
                y: 0
            }]
        );
    }

    #[test]
    fn decode_then_validate_a_provider_response() {
        let g = graph(
            r#"{"caption":"c","entities":[{"name":"a"},{"name":"b"}],"relations":[{"subject":1,"predicate":"left of","object":2}]}"#,
        );
        let doc: PlanDocument = serde_json::from_str(
            r#"{"size_order":[1,2],"seed_grid":[[0,0],[1,2]],"constraints":[
                {"i":1,"j":2,"vertical":"SAME","horizontal":"RIGHT"},
                {"i":2,"j":1,"vertical":"SAME","horizontal":"LEFT"}]}"#,
        )
        .unwrap();
        let plan = validate_plan(decode_plan(doc, (2, 2)).unwrap(), &g).unwrap();
        assert_eq!(plan.dims(), (2, 2));
        assert_eq!(plan.constraints.len(), 2);
    }

    #[test]
    fn plan_document_round_trips() {
        let g = graph(
            r#"{"caption":"c","entities":[{"name":"a"},{"name":"b"}],"relations":[{"subject":1,"predicate":"above","object":2}]}"#,
        );
        let c = derive_constraints(&g, &default_lexicon()).unwrap();
        let plan = heuristic_plan(&g, &c, (5, 3)).unwrap();
        let doc: PlanDocument = serde_json::from_str(&plan.to_json()).unwrap();
        assert_eq!(decode_plan(doc, (5, 3)).unwrap(), plan);
    }
}
