//! From a guidance plan to a complete cell assignment and soft masks.
//!
//! Each entity gets a binary membership field: a cell is a candidate for
//! entity `j` only if it satisfies every directional constraint `(i, j)`
//! against the seed of `i`. Cells then go to the candidate entity nearest
//! its own seed, and entities with a quantity `q` are split into `q`
//! sub-regions.

mod distance;

pub use distance::{self_mask, soft_mask, squared_distance_to_outside, SelfMask, SoftMask};

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::exec;
use crate::provider::{GuidancePlan, SeedPoint};
use crate::scenegraph::{Constraints, DirectionalConstraint, Horizontal, SceneGraph, Vertical};

/// Whether `cell = (x, y)` satisfies both axis predicates of `constraint`
/// measured against `seed_i`. Unconstrained axes always pass.
pub fn pair_feasibility(
    constraint: &DirectionalConstraint,
    seed_i: &SeedPoint,
    cell: (usize, usize),
) -> bool {
    let (x, y) = cell;
    let horizontal = match constraint.horizontal {
        Horizontal::Right => x > seed_i.x,
        Horizontal::Left => x < seed_i.x,
        Horizontal::Same => x == seed_i.x,
        Horizontal::Unconstrained => true,
    };
    let vertical = match constraint.vertical {
        Vertical::Above => y < seed_i.y,
        Vertical::Below => y > seed_i.y,
        Vertical::Same => y == seed_i.y,
        Vertical::Unconstrained => true,
    };
    horizontal && vertical
}

/// Binary membership of one entity over the grid.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MembershipField {
    pub entity_id: u32,
    /// `H × W`, entries 0 or 1.
    pub values: Array2<u8>,
}

pub fn membership_field(
    entity_id: u32,
    seeds: &[SeedPoint],
    constraints: &Constraints,
    dims: (usize, usize),
) -> Result<MembershipField> {
    let mut values = Array2::<u8>::ones(dims);
    for c in constraints.incoming(entity_id) {
        let seed_i = seeds
            .iter()
            .find(|s| s.entity_id == c.i)
            .ok_or_else(|| Error::Validation(format!("entity {} has no seed", c.i)))?;
        for ((y, x), m) in values.indexed_iter_mut() {
            *m &= pair_feasibility(&c, seed_i, (x, y)) as u8;
        }
    }
    Ok(MembershipField { entity_id, values })
}

/// Per-cell entity ids and quantity sub-region indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AssignmentGrid {
    /// 0 is background.
    pub entity: Array2<u32>,
    /// 0 before quantity injection and on background; `1..=q` afterwards.
    pub subregion: Array2<u32>,
}

impl AssignmentGrid {
    pub fn dims(&self) -> (usize, usize) {
        self.entity.dim()
    }

    /// Cells `(x, y)` of an entity in row-major order.
    pub fn cells_of(&self, entity_id: u32) -> Vec<(usize, usize)> {
        self.entity
            .indexed_iter()
            .filter(|(_, &e)| e == entity_id)
            .map(|((y, x), _)| (x, y))
            .collect()
    }

    /// Binary region of an entity (optionally a single sub-region) at grid resolution.
    pub fn region(&self, entity_id: u32, subregion: Option<u32>) -> Array2<bool> {
        let mut out = Array2::from_elem(self.dims(), false);
        for ((y, x), &e) in self.entity.indexed_iter() {
            out[[y, x]] = e == entity_id && subregion.is_none_or(|s| self.subregion[[y, x]] == s);
        }
        out
    }

    /// Region resampled by nearest neighbour to `target` dims.
    pub fn region_at(
        &self,
        entity_id: u32,
        subregion: Option<u32>,
        target: (usize, usize),
    ) -> Array2<bool> {
        resample_nearest(&self.region(entity_id, subregion), target)
    }

    /// One character per cell: `.` for background, then `1-9`, `a-z`, `A-Z`
    /// for entity ids. Verbose mode prints `id:sub` tokens instead.
    pub fn render_ascii(&self, verbose: bool) -> String {
        let mut out = String::new();
        for (row_e, row_s) in self.entity.outer_iter().zip(self.subregion.outer_iter()) {
            if verbose {
                let tokens: Vec<String> = row_e
                    .iter()
                    .zip(row_s.iter())
                    .map(|(&e, &s)| {
                        if e == 0 {
                            ".".to_string()
                        } else {
                            format!("{e}:{s}")
                        }
                    })
                    .collect();
                out.push_str(&tokens.join(" "));
            } else {
                out.extend(row_e.iter().map(|&e| id_char(e)));
            }
            out.push('\n');
        }
        out
    }
}

fn id_char(id: u32) -> char {
    match id {
        0 => '.',
        1..=9 => char::from(b'0' + id as u8),
        10..=35 => char::from(b'a' + (id - 10) as u8),
        36..=61 => char::from(b'A' + (id - 36) as u8),
        _ => '#',
    }
}

pub(crate) fn resample_nearest<T: Clone>(src: &Array2<T>, target: (usize, usize)) -> Array2<T> {
    let (h, w) = src.dim();
    let (th, tw) = target;
    Array2::from_shape_fn(target, |(ty, tx)| src[[ty * h / th, tx * w / tw]].clone())
}

/// Give each cell to the entity with membership 1.
///
/// Several candidates: smallest squared distance to the entity's seed, then
/// lowest id. No candidate: background.
pub fn assign_cells(fields: &[MembershipField], seeds: &[SeedPoint]) -> Result<AssignmentGrid> {
    let Some(first) = fields.first() else {
        return Err(Error::Validation("no membership fields to assign".into()));
    };
    let dims = first.values.dim();
    if let Some(bad) = fields.iter().find(|f| f.values.dim() != dims) {
        return Err(Error::Shape(format!(
            "membership field of entity {} is {:?}, expected {:?}",
            bad.entity_id,
            bad.values.dim(),
            dims
        )));
    }
    let seed_of: Vec<&SeedPoint> = fields
        .iter()
        .map(|f| {
            seeds
                .iter()
                .find(|s| s.entity_id == f.entity_id)
                .ok_or_else(|| Error::Validation(format!("entity {} has no seed", f.entity_id)))
        })
        .collect::<Result<_>>()?;

    let (h, w) = dims;
    let rows = exec::map_indexed(h, |y| {
        (0..w)
            .map(|x| {
                fields
                    .iter()
                    .zip(&seed_of)
                    .filter(|(f, _)| f.values[[y, x]] == 1)
                    .map(|(f, s)| {
                        let dx = x as i64 - s.x as i64;
                        let dy = y as i64 - s.y as i64;
                        (dx * dx + dy * dy, f.entity_id)
                    })
                    .min()
                    .map_or(0, |(_, id)| id)
            })
            .collect::<Vec<u32>>()
    });
    let entity = Array2::from_shape_vec(dims, rows.into_iter().flatten().collect())
        .expect("row lengths match grid width");

    let mut ids: Vec<u32> = fields.iter().map(|f| f.entity_id).collect();
    ids.sort_unstable();
    for id in ids {
        if !entity.iter().any(|&e| e == id) {
            return Err(Error::Starvation { entity: id });
        }
    }
    Ok(AssignmentGrid {
        subregion: Array2::zeros(dims),
        entity,
    })
}

/// Split each entity's region into `quantity` contiguous, near-equal blocks.
///
/// Cells are swept along the longer side of the region's bounding box
/// (columns left to right, each top to bottom, when width ≥ height; rows
/// otherwise). The first `n mod q` blocks get one extra cell.
pub fn inject_quantities(grid: &AssignmentGrid, graph: &SceneGraph) -> Result<AssignmentGrid> {
    let mut out = grid.clone();
    out.subregion.fill(0);
    for entity in &graph.entities {
        let mut cells = grid.cells_of(entity.id);
        let n = cells.len();
        if n == 0 {
            continue;
        }
        let q = entity.quantity as usize;
        if n < q {
            return Err(Error::Quantity {
                entity: entity.id,
                cells: n,
                quantity: entity.quantity,
            });
        }
        let (min_x, max_x) = cells
            .iter()
            .fold((usize::MAX, 0), |(lo, hi), &(x, _)| (lo.min(x), hi.max(x)));
        let (min_y, max_y) = cells
            .iter()
            .fold((usize::MAX, 0), |(lo, hi), &(_, y)| (lo.min(y), hi.max(y)));
        if max_x - min_x >= max_y - min_y {
            cells.sort_by_key(|&(x, y)| (x, y));
        } else {
            cells.sort_by_key(|&(x, y)| (y, x));
        }
        let (base, extra) = (n / q, n % q);
        let mut start = 0;
        for block in 0..q {
            let len = base + usize::from(block < extra);
            for &(x, y) in &cells[start..start + len] {
                out.subregion[[y, x]] = block as u32 + 1;
            }
            start += len;
        }
    }
    Ok(out)
}

/// Membership fields, assignment and quantity split for a validated plan.
pub fn build_grid(plan: &GuidancePlan, graph: &SceneGraph) -> Result<AssignmentGrid> {
    let seeds = plan.seeds();
    let dims = plan.dims();
    let ids = graph.ids();
    let fields = exec::map_slice(&ids, |&id| {
        membership_field(id, &seeds, &plan.constraints, dims)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let grid = assign_cells(&fields, &seeds)?;
    inject_quantities(&grid, graph)
}

/// Location masks for every entity, or for every sub-region when
/// `per_subregion` is set, at attention resolution `target`.
pub fn build_masks(
    grid: &AssignmentGrid,
    graph: &SceneGraph,
    target: (usize, usize),
    per_subregion: bool,
) -> Result<Vec<SoftMask>> {
    let mut jobs: Vec<(u32, Option<u32>)> = Vec::new();
    for id in graph.ids() {
        let q = graph.entity(id).map_or(1, |e| e.quantity);
        if per_subregion {
            jobs.extend((1..=q).map(|s| (id, Some(s))));
        } else {
            jobs.push((id, None));
        }
    }
    exec::map_slice(&jobs, |&(id, sub)| soft_mask(grid, id, sub, target))
        .into_iter()
        .collect()
}
