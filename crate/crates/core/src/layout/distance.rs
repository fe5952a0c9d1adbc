//! Exact Euclidean distance transform and the soft masks built on it.

use ndarray::{Array2, Array3};

use super::AssignmentGrid;
use crate::error::{Error, Result};

/// A region softened by its distance transform, normalized to a maximum of 1.
#[derive(Clone, Debug, PartialEq)]
pub struct SoftMask {
    pub entity_id: u32,
    /// 0 for the whole entity.
    pub subregion: u32,
    pub values: Array2<f64>,
}

/// Outer product of a soft mask's flattened values with the mask itself,
/// shaped `(H'·W') × H' × W'`.
#[derive(Clone, Debug, PartialEq)]
pub struct SelfMask {
    pub entity_id: u32,
    pub values: Array3<f64>,
}

/// Squared Euclidean distance from every inside cell to the nearest outside
/// cell, with the grid surrounded by one ring of outside cells. Outside
/// cells map to 0.
///
/// Two 1-D lower-envelope passes (rows, then columns) over the padded grid;
/// every intermediate is an integer held exactly in `f64`.
pub fn squared_distance_to_outside(inside: &Array2<bool>) -> Array2<f64> {
    let (h, w) = inside.dim();
    let (ph, pw) = (h + 2, w + 2);
    let mut field = Array2::<f64>::zeros((ph, pw));
    for ((y, x), &v) in inside.indexed_iter() {
        if v {
            field[[y + 1, x + 1]] = f64::INFINITY;
        }
    }

    let mut scratch = Scratch::new(ph.max(pw));
    for mut row in field.rows_mut() {
        let input: Vec<f64> = row.to_vec();
        scratch.transform(&input);
        row.iter_mut()
            .zip(&scratch.out)
            .for_each(|(dst, &v)| *dst = v);
    }
    for mut col in field.columns_mut() {
        let input: Vec<f64> = col.to_vec();
        scratch.transform(&input);
        col.iter_mut()
            .zip(&scratch.out)
            .for_each(|(dst, &v)| *dst = v);
    }

    Array2::from_shape_fn((h, w), |(y, x)| field[[y + 1, x + 1]])
}

struct Scratch {
    sites: Vec<usize>,
    bounds: Vec<f64>,
    out: Vec<f64>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Scratch {
            sites: Vec::with_capacity(n),
            bounds: Vec::with_capacity(n + 1),
            out: Vec::with_capacity(n),
        }
    }

    /// `out[q] = min_p (q - p)² + f[p]` over finite `f[p]`.
    fn transform(&mut self, f: &[f64]) {
        let n = f.len();
        self.sites.clear();
        self.bounds.clear();
        self.out.clear();
        let parabola = |p: usize| f[p] + (p * p) as f64;

        for q in (0..n).filter(|&q| f[q].is_finite()) {
            loop {
                let Some(&top) = self.sites.last() else {
                    self.sites.push(q);
                    self.bounds.push(f64::NEG_INFINITY);
                    break;
                };
                let s = (parabola(q) - parabola(top)) / (2.0 * (q as f64 - top as f64));
                if s <= *self.bounds.last().unwrap() {
                    self.sites.pop();
                    self.bounds.pop();
                } else {
                    self.sites.push(q);
                    self.bounds.push(s);
                    break;
                }
            }
        }
        if self.sites.is_empty() {
            self.out.resize(n, f64::INFINITY);
            return;
        }
        let mut k = 0;
        for q in 0..n {
            while k + 1 < self.sites.len() && self.bounds[k + 1] < q as f64 {
                k += 1;
            }
            let p = self.sites[k];
            let d = q as f64 - p as f64;
            self.out.push(d * d + f[p]);
        }
    }
}

/// Soft location mask of one entity (or one of its sub-regions) at `target`
/// resolution: nearest-neighbour resample, exact distance transform,
/// divide by the maximum.
pub fn soft_mask(
    grid: &AssignmentGrid,
    entity_id: u32,
    subregion: Option<u32>,
    target: (usize, usize),
) -> Result<SoftMask> {
    if target.0 == 0 || target.1 == 0 {
        return Err(Error::Shape(format!(
            "target dims {target:?} must be positive"
        )));
    }
    let region = grid.region_at(entity_id, subregion, target);
    let d2 = squared_distance_to_outside(&region);
    let peak = d2.iter().copied().fold(0.0_f64, f64::max);
    if peak == 0.0 {
        return Err(Error::EmptyRegion { entity: entity_id });
    }
    let norm = peak.sqrt();
    Ok(SoftMask {
        entity_id,
        subregion: subregion.unwrap_or(0),
        values: d2.mapv(|v| v.sqrt() / norm),
    })
}

pub fn self_mask(mask: &SoftMask) -> SelfMask {
    let (h, w) = mask.values.dim();
    let flat: Vec<f64> = mask.values.iter().copied().collect();
    let values = Array3::from_shape_fn((h * w, h, w), |(s, y, x)| flat[s] * mask.values[[y, x]]);
    SelfMask {
        entity_id: mask.entity_id,
        values,
    }
}
