//! Guidance losses over attention maps and their analytic gradients.
//!
//! All maps are handled flattened (row-major), so a token's cross-attention
//! column can be passed straight in. Each loss has a value-only form and a
//! `_grad` form returning the value together with per-input gradients.

use std::collections::BTreeMap;

use ndarray::{Array1, Array2, Array3, ArrayView1, ArrayView3, Axis};
use serde::{Deserialize, Serialize};

use crate::attention::AttentionStack;
use crate::config::{DEFAULT_CLAMP_EPS, DICE_EPS};
use crate::error::{Error, Result};
use crate::exec;
use crate::layout::{self_mask, AssignmentGrid, SelfMask, SoftMask};
use crate::scenegraph::SceneGraph;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossWeights {
    pub lambda_att: f64,
    pub lambda_size: f64,
    pub lambda_loc_cross: f64,
    pub lambda_loc_self: f64,
    /// Weight of the attribute-outside-entity penalty.
    pub eta: f64,
    pub clamp_eps: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            lambda_att: 1.0,
            lambda_size: 1.0,
            lambda_loc_cross: 1.0,
            lambda_loc_self: 1.0,
            eta: 1.0,
            clamp_eps: DEFAULT_CLAMP_EPS,
        }
    }
}

impl LossWeights {
    pub fn uniform(lambda: f64) -> Self {
        LossWeights {
            lambda_att: lambda,
            lambda_size: lambda,
            lambda_loc_cross: lambda,
            lambda_loc_self: lambda,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.lambda_att,
            self.lambda_size,
            self.lambda_loc_cross,
            self.lambda_loc_self,
            self.eta,
        ];
        if all.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Validation(
                "loss weights must be finite and non-negative".into(),
            ));
        }
        if !(self.clamp_eps > 0.0 && self.clamp_eps < 0.5) {
            return Err(Error::Validation(
                "clamp epsilon must lie in (0, 0.5)".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub att: f64,
    pub size: f64,
    pub loc_cross: f64,
    pub loc_self: f64,
    pub total: f64,
}

/// Serialized loss report: the breakdown plus the weights that produced it.
#[derive(Clone, Debug, Serialize)]
pub struct LossReport {
    #[serde(flatten)]
    pub losses: LossBreakdown,
    pub weights: LossWeights,
}

/// Weighted combination of the four component losses.
pub fn total_loss(
    att: f64,
    size: f64,
    loc_cross: f64,
    loc_self: f64,
    weights: &LossWeights,
) -> LossBreakdown {
    LossBreakdown {
        att,
        size,
        loc_cross,
        loc_self,
        total: weights.lambda_att * att
            + weights.lambda_size * size
            + weights.lambda_loc_cross * loc_cross
            + weights.lambda_loc_self * loc_self,
    }
}

/// An entity map with the maps of its attribute tokens.
#[derive(Clone, Debug)]
pub struct AttributePair<'a> {
    pub entity: ArrayView1<'a, f64>,
    pub attributes: Vec<ArrayView1<'a, f64>>,
}

/// Gradients of the attribute loss, aligned with the input pairs.
#[derive(Clone, Debug, PartialEq)]
pub struct AttributeGrad {
    pub entity: Array1<f64>,
    pub attributes: Vec<Array1<f64>>,
}

fn check_pair_shapes(pairs: &[AttributePair<'_>]) -> Result<usize> {
    let Some(first) = pairs.first() else {
        return Ok(0);
    };
    let n = first.entity.len();
    for (k, p) in pairs.iter().enumerate() {
        if p.entity.len() != n || p.attributes.iter().any(|a| a.len() != n) {
            return Err(Error::Shape(format!(
                "attribute pair {k}: maps differ in size"
            )));
        }
    }
    Ok(n)
}

/// `(1/|V|) Σ_v (1/k_v) Σ_a [mean BCE(target = v, prediction = a) + η·mean(a·(1 − v))]`.
///
/// Predictions are clamped to `[ε, 1 − ε]` before the logarithms.
pub fn attribute_loss(pairs: &[AttributePair<'_>], eta: f64, clamp_eps: f64) -> Result<f64> {
    let cells = check_pair_shapes(pairs)?;
    if cells == 0 {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for pair in pairs {
        if pair.attributes.is_empty() {
            continue;
        }
        let mut per_entity = 0.0;
        for attr in &pair.attributes {
            let mut bce = 0.0;
            let mut leak = 0.0;
            for (&t, &a) in pair.entity.iter().zip(attr.iter()) {
                let p = a.clamp(clamp_eps, 1.0 - clamp_eps);
                bce -= t * p.ln() + (1.0 - t) * (1.0 - p).ln();
                leak += a * (1.0 - t);
            }
            per_entity += (bce + eta * leak) / cells as f64;
        }
        total += per_entity / pair.attributes.len() as f64;
    }
    Ok(total / pairs.len() as f64)
}

pub fn attribute_loss_grad(
    pairs: &[AttributePair<'_>],
    eta: f64,
    clamp_eps: f64,
) -> Result<(f64, Vec<AttributeGrad>)> {
    let cells = check_pair_shapes(pairs)?;
    let value = attribute_loss(pairs, eta, clamp_eps)?;
    let mut grads: Vec<AttributeGrad> = pairs
        .iter()
        .map(|p| AttributeGrad {
            entity: Array1::zeros(p.entity.len()),
            attributes: p
                .attributes
                .iter()
                .map(|a| Array1::zeros(a.len()))
                .collect(),
        })
        .collect();
    if cells == 0 {
        return Ok((value, grads));
    }
    for (pair, grad) in pairs.iter().zip(grads.iter_mut()) {
        let k = pair.attributes.len();
        if k == 0 {
            continue;
        }
        let scale = 1.0 / (pairs.len() as f64 * k as f64 * cells as f64);
        for (attr, g_attr) in pair.attributes.iter().zip(grad.attributes.iter_mut()) {
            for c in 0..cells {
                let (t, a) = (pair.entity[c], attr[c]);
                let p = a.clamp(clamp_eps, 1.0 - clamp_eps);
                let d_pred = if a > clamp_eps && a < 1.0 - clamp_eps {
                    (p - t) / (p * (1.0 - p))
                } else {
                    0.0
                };
                let d_target = ((1.0 - p) / p).ln();
                g_attr[c] += scale * (d_pred + eta * (1.0 - t));
                grad.entity[c] += scale * (d_target - eta * a);
            }
        }
    }
    Ok((value, grads))
}

/// `(1/|V|) Σ_i max(0, ‖A_i‖ − ‖A_{i+1}‖)` over maps listed in increasing
/// intended size, `‖·‖` being the entry sum.
pub fn size_loss(ordered_maps: &[ArrayView1<'_, f64>]) -> f64 {
    if ordered_maps.len() < 2 {
        return 0.0;
    }
    let sums: Vec<f64> = ordered_maps.iter().map(|m| m.sum()).collect();
    let hinge: f64 = sums.windows(2).map(|w| (w[0] - w[1]).max(0.0)).sum();
    hinge / ordered_maps.len() as f64
}

pub fn size_loss_grad(ordered_maps: &[ArrayView1<'_, f64>]) -> (f64, Vec<Array1<f64>>) {
    let mut grads: Vec<Array1<f64>> = ordered_maps
        .iter()
        .map(|m| Array1::zeros(m.len()))
        .collect();
    let value = size_loss(ordered_maps);
    if ordered_maps.len() < 2 {
        return (value, grads);
    }
    let n = ordered_maps.len() as f64;
    let sums: Vec<f64> = ordered_maps.iter().map(|m| m.sum()).collect();
    for i in 0..sums.len() - 1 {
        if sums[i] > sums[i + 1] {
            grads[i] += 1.0 / n;
            grads[i + 1] -= 1.0 / n;
        }
    }
    (value, grads)
}

struct DiceParts {
    intersection: f64,
    map_mass: f64,
    mask_mass: f64,
}

fn dice_parts(map: ArrayView1<'_, f64>, mask: ArrayView1<'_, f64>) -> DiceParts {
    let mut parts = DiceParts {
        intersection: 0.0,
        map_mass: 0.0,
        mask_mass: 0.0,
    };
    for (&a, &g) in map.iter().zip(mask.iter()) {
        parts.intersection += a * g;
        parts.map_mass += a;
        parts.mask_mass += g;
    }
    parts
}

impl DiceParts {
    fn loss(&self) -> f64 {
        1.0 - 2.0 * self.intersection / (self.map_mass + self.mask_mass + DICE_EPS)
    }

    fn both_empty(&self) -> bool {
        self.map_mass == 0.0 && self.mask_mass == 0.0
    }

    /// `∂/∂a_k` of the Dice loss.
    fn grad_into(&self, mask: ArrayView1<'_, f64>, out: &mut [f64]) {
        let denom = self.map_mass + self.mask_mass + DICE_EPS;
        let inv = 1.0 / (denom * denom);
        for (o, &g) in out.iter_mut().zip(mask.iter()) {
            *o += -2.0 * (g * denom - self.intersection) * inv;
        }
    }
}

/// One attention map against one location mask.
pub type MapMask<'a> = (ArrayView1<'a, f64>, ArrayView1<'a, f64>);

fn check_map_masks(pairs: &[MapMask<'_>]) -> Result<()> {
    for (k, (a, g)) in pairs.iter().enumerate() {
        if a.len() != g.len() {
            return Err(Error::Shape(format!(
                "location pair {k}: map has {} cells, mask {}",
                a.len(),
                g.len()
            )));
        }
    }
    Ok(())
}

/// `Σ_v [1 − 2‖A·G‖ / (‖A‖ + ‖G‖ + ε)]`.
pub fn loc_cross_loss(pairs: &[MapMask<'_>]) -> Result<f64> {
    check_map_masks(pairs)?;
    Ok(pairs.iter().map(|(a, g)| dice_parts(*a, *g).loss()).sum())
}

/// Per-pair Dice terms of [`loc_cross_loss`].
pub fn loc_cross_terms(pairs: &[MapMask<'_>]) -> Result<Vec<f64>> {
    check_map_masks(pairs)?;
    Ok(pairs
        .iter()
        .map(|(a, g)| dice_parts(*a, *g).loss())
        .collect())
}

pub fn loc_cross_loss_grad(pairs: &[MapMask<'_>]) -> Result<(f64, Vec<Array1<f64>>)> {
    check_map_masks(pairs)?;
    let mut value = 0.0;
    let mut grads = Vec::with_capacity(pairs.len());
    for (a, g) in pairs {
        let parts = dice_parts(*a, *g);
        value += parts.loss();
        let mut grad = Array1::zeros(a.len());
        parts.grad_into(*g, grad.as_slice_mut().unwrap());
        grads.push(grad);
    }
    Ok((value, grads))
}

fn check_self_shapes(self_attn: &ArrayView3<'_, f64>, masks: &[ArrayView3<'_, f64>]) -> Result<()> {
    for (k, m) in masks.iter().enumerate() {
        if m.dim() != self_attn.dim() {
            return Err(Error::Shape(format!(
                "self mask {k} is {:?}, self attention is {:?}",
                m.dim(),
                self_attn.dim()
            )));
        }
    }
    Ok(())
}

fn slice_view<'a>(t: &'a ArrayView3<'_, f64>, s: usize) -> ArrayView1<'a, f64> {
    let slice = t.index_axis(Axis(0), s);
    let n = slice.len();
    slice
        .into_shape(n)
        .expect("slices of a standard-layout tensor are contiguous")
}

/// `Σ_v Σ_s [1 − 2‖Â_s·Ĝ_s‖ / (‖Â_s‖ + ‖Ĝ_s‖ + ε)]`, slices where both
/// operands are zero contributing 0.
pub fn loc_self_loss(self_attn: ArrayView3<'_, f64>, masks: &[ArrayView3<'_, f64>]) -> Result<f64> {
    check_self_shapes(&self_attn, masks)?;
    let self_attn = self_attn.as_standard_layout();
    let self_attn = self_attn.view();
    let slices = self_attn.len_of(Axis(0));
    let mut total = 0.0;
    for mask in masks {
        let mask = mask.as_standard_layout();
        let mask = mask.view();
        let terms = exec::map_indexed(slices, |s| {
            let parts = dice_parts(slice_view(&self_attn, s), slice_view(&mask, s));
            if parts.both_empty() {
                0.0
            } else {
                parts.loss()
            }
        });
        total += terms.iter().sum::<f64>();
    }
    Ok(total)
}

pub fn loc_self_loss_grad(
    self_attn: ArrayView3<'_, f64>,
    masks: &[ArrayView3<'_, f64>],
) -> Result<(f64, Array3<f64>)> {
    check_self_shapes(&self_attn, masks)?;
    let self_attn = self_attn.as_standard_layout();
    let self_attn = self_attn.view();
    let (slices, h, w) = self_attn.dim();
    let mut grad = Array3::<f64>::zeros((slices, h, w));
    let mut total = 0.0;
    for mask in masks {
        let mask = mask.as_standard_layout();
        let mask = mask.view();
        let per_slice = exec::map_indexed(slices, |s| {
            let m = slice_view(&mask, s);
            let parts = dice_parts(slice_view(&self_attn, s), m);
            let mut g = vec![0.0; h * w];
            if parts.both_empty() {
                return (0.0, g);
            }
            parts.grad_into(m, &mut g);
            (parts.loss(), g)
        });
        for (s, (value, g)) in per_slice.into_iter().enumerate() {
            total += value;
            grad.index_axis_mut(Axis(0), s)
                .iter_mut()
                .zip(g)
                .for_each(|(o, v)| *o += v);
        }
    }
    Ok((total, grad))
}

/// Which prompt token carries each entity name and attribute.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TokenMap {
    entity: BTreeMap<u32, usize>,
    attributes: BTreeMap<u32, Vec<usize>>,
    count: usize,
}

impl TokenMap {
    /// Token indices from the graph when given; otherwise tokens are laid
    /// out per entity in id order, name first, then its attributes.
    /// Attributes without explicit indices are appended after the highest
    /// explicit index.
    pub fn from_graph(graph: &SceneGraph) -> Self {
        let mut entity = BTreeMap::new();
        let mut attributes = BTreeMap::new();
        let explicit = graph.entities.iter().all(|e| e.token_index.is_some());
        let mut next = if explicit {
            graph
                .entities
                .iter()
                .flat_map(|e| {
                    e.token_index
                        .into_iter()
                        .chain(e.attribute_token_indices.iter().flatten().copied())
                })
                .max()
                .map_or(0, |m| m + 1)
        } else {
            0
        };
        for id in graph.ids() {
            let e = graph.entity(id).expect("id from graph");
            let name = match (explicit, e.token_index) {
                (true, Some(t)) => t,
                _ => {
                    next += 1;
                    next - 1
                }
            };
            entity.insert(id, name);
            let attrs: Vec<usize> = match (explicit, &e.attribute_token_indices) {
                (true, Some(idx)) => idx.clone(),
                _ => (0..e.attributes.len())
                    .map(|_| {
                        next += 1;
                        next - 1
                    })
                    .collect(),
            };
            attributes.insert(id, attrs);
        }
        let count = entity
            .values()
            .chain(attributes.values().flatten())
            .max()
            .map_or(0, |m| m + 1);
        TokenMap {
            entity,
            attributes,
            count,
        }
    }

    pub fn entity_token(&self, id: u32) -> Option<usize> {
        self.entity.get(&id).copied()
    }

    pub fn attribute_tokens(&self, id: u32) -> &[usize] {
        self.attributes.get(&id).map_or(&[], Vec::as_slice)
    }

    /// Number of token columns an attention stack needs.
    pub fn count(&self) -> usize {
        self.count
    }
}

/// Everything the losses need besides the attention maps themselves.
#[derive(Clone, Debug)]
pub struct GuidanceTargets {
    pub dims: (usize, usize),
    pub tokens: TokenMap,
    pub entity_ids: Vec<u32>,
    /// Entity ids by increasing intended size.
    pub size_order: Vec<u32>,
    /// One per entity, or one per sub-region.
    pub masks: Vec<SoftMask>,
    pub self_masks: Vec<SelfMask>,
}

/// Gradients of each component with respect to the attention tensors.
#[derive(Clone, Debug)]
pub struct ComponentGradients {
    pub att: Array2<f64>,
    pub size: Array2<f64>,
    pub loc_cross: Array2<f64>,
    pub loc_self: Option<Array3<f64>>,
}

/// Gradient of the weighted total.
#[derive(Clone, Debug)]
pub struct AttentionGradients {
    pub cross: Array2<f64>,
    pub self_attn: Option<Array3<f64>>,
}

impl GuidanceTargets {
    pub fn new(
        graph: &SceneGraph,
        size_order: &[u32],
        grid: &AssignmentGrid,
        dims: (usize, usize),
        per_subregion: bool,
    ) -> Result<Self> {
        let masks = crate::layout::build_masks(grid, graph, dims, per_subregion)?;
        let self_masks = exec::map_slice(&masks, self_mask);
        Ok(GuidanceTargets {
            dims,
            tokens: TokenMap::from_graph(graph),
            entity_ids: graph.ids(),
            size_order: size_order.to_vec(),
            masks,
            self_masks,
        })
    }

    fn check_stack(&self, stack: &AttentionStack) -> Result<()> {
        if stack.dims != self.dims {
            return Err(Error::Shape(format!(
                "attention is {}x{}, masks are {}x{}",
                stack.dims.0, stack.dims.1, self.dims.0, self.dims.1
            )));
        }
        if stack.tokens() < self.tokens.count() {
            return Err(Error::Shape(format!(
                "attention has {} tokens, graph needs {}",
                stack.tokens(),
                self.tokens.count()
            )));
        }
        Ok(())
    }

    fn entity_column(&self, id: u32) -> usize {
        self.tokens
            .entity_token(id)
            .expect("every entity has a token")
    }

    fn attribute_pairs<'a>(&self, cross: &'a Array2<f64>) -> Vec<AttributePair<'a>> {
        self.entity_ids
            .iter()
            .map(|&id| AttributePair {
                entity: cross.column(self.entity_column(id)),
                attributes: self
                    .tokens
                    .attribute_tokens(id)
                    .iter()
                    .map(|&t| cross.column(t))
                    .collect(),
            })
            .collect()
    }

    fn size_maps<'a>(&self, cross: &'a Array2<f64>) -> Vec<ArrayView1<'a, f64>> {
        self.size_order
            .iter()
            .map(|&id| cross.column(self.entity_column(id)))
            .collect()
    }

    fn flat_masks(&self) -> Vec<Array1<f64>> {
        self.masks
            .iter()
            .map(|m| m.values.iter().copied().collect())
            .collect()
    }

    fn self_mask_views(&self) -> Vec<ArrayView3<'_, f64>> {
        self.self_masks.iter().map(|m| m.values.view()).collect()
    }

    /// Component losses and the weighted total.
    pub fn evaluate(&self, stack: &AttentionStack, weights: &LossWeights) -> Result<LossBreakdown> {
        self.check_stack(stack)?;
        let cross = &stack.cross;
        let att = attribute_loss(&self.attribute_pairs(cross), weights.eta, weights.clamp_eps)?;
        let size = size_loss(&self.size_maps(cross));
        let flat = self.flat_masks();
        let pairs: Vec<MapMask<'_>> = self
            .masks
            .iter()
            .zip(&flat)
            .map(|(m, g)| (cross.column(self.entity_column(m.entity_id)), g.view()))
            .collect();
        let loc_cross = loc_cross_loss(&pairs)?;
        let loc_self = match &stack.self_attn {
            Some(s) => loc_self_loss(s.view(), &self.self_mask_views())?,
            None => 0.0,
        };
        Ok(total_loss(att, size, loc_cross, loc_self, weights))
    }

    /// Component losses with their individual gradients.
    pub fn component_gradients(
        &self,
        stack: &AttentionStack,
        weights: &LossWeights,
    ) -> Result<(LossBreakdown, ComponentGradients)> {
        self.check_stack(stack)?;
        let cross = &stack.cross;
        let shape = cross.dim();

        let pairs = self.attribute_pairs(cross);
        let (att, att_grads) = attribute_loss_grad(&pairs, weights.eta, weights.clamp_eps)?;
        let mut d_att = Array2::<f64>::zeros(shape);
        for (&id, g) in self.entity_ids.iter().zip(&att_grads) {
            let mut col = d_att.column_mut(self.entity_column(id));
            col += &g.entity;
            for (&t, ga) in self.tokens.attribute_tokens(id).iter().zip(&g.attributes) {
                let mut col = d_att.column_mut(t);
                col += ga;
            }
        }

        let (size, size_grads) = size_loss_grad(&self.size_maps(cross));
        let mut d_size = Array2::<f64>::zeros(shape);
        for (&id, g) in self.size_order.iter().zip(&size_grads) {
            let mut col = d_size.column_mut(self.entity_column(id));
            col += g;
        }

        let flat = self.flat_masks();
        let loc_pairs: Vec<MapMask<'_>> = self
            .masks
            .iter()
            .zip(&flat)
            .map(|(m, g)| (cross.column(self.entity_column(m.entity_id)), g.view()))
            .collect();
        let (loc_cross, loc_grads) = loc_cross_loss_grad(&loc_pairs)?;
        let mut d_loc = Array2::<f64>::zeros(shape);
        for (m, g) in self.masks.iter().zip(&loc_grads) {
            let mut col = d_loc.column_mut(self.entity_column(m.entity_id));
            col += g;
        }

        let (loc_self, d_self) = match &stack.self_attn {
            Some(s) => {
                let (v, g) = loc_self_loss_grad(s.view(), &self.self_mask_views())?;
                (v, Some(g))
            }
            None => (0.0, None),
        };

        Ok((
            total_loss(att, size, loc_cross, loc_self, weights),
            ComponentGradients {
                att: d_att,
                size: d_size,
                loc_cross: d_loc,
                loc_self: d_self,
            },
        ))
    }

    /// Weighted total and its gradient with respect to the attention tensors.
    pub fn evaluate_with_gradients(
        &self,
        stack: &AttentionStack,
        weights: &LossWeights,
    ) -> Result<(LossBreakdown, AttentionGradients)> {
        let (breakdown, parts) = self.component_gradients(stack, weights)?;
        let cross = parts.att * weights.lambda_att
            + parts.size * weights.lambda_size
            + parts.loc_cross * weights.lambda_loc_cross;
        let self_attn = parts.loc_self.map(|g| g * weights.lambda_loc_self);
        Ok((breakdown, AttentionGradients { cross, self_attn }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::{arr1, Array3};

    const EPS: f64 = DEFAULT_CLAMP_EPS;

    fn filled(n: usize, v: f64) -> Array1<f64> {
        Array1::from_elem(n, v)
    }

    #[test]
    fn attribute_loss_half_maps() {
        let v = filled(4, 0.5);
        let a = filled(4, 0.5);
        let pairs = [AttributePair {
            entity: v.view(),
            attributes: vec![a.view()],
        }];
        let loss = attribute_loss(&pairs, 1.0, EPS).unwrap();
        assert_abs_diff_eq!(loss, std::f64::consts::LN_2 + 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(loss, 0.943147, epsilon = 1e-6);
    }

    #[test]
    fn attribute_loss_agreement_is_near_zero() {
        let v = filled(4, 1.0);
        let pairs = [AttributePair {
            entity: v.view(),
            attributes: vec![v.view()],
        }];
        let loss = attribute_loss(&pairs, 1.0, EPS).unwrap();
        assert!((0.0..=2e-7).contains(&loss), "{loss}");
    }

    #[test]
    fn attribute_loss_full_leakage() {
        let v = filled(4, 0.0);
        let a = filled(4, 1.0);
        let pairs = [AttributePair {
            entity: v.view(),
            attributes: vec![a.view()],
        }];
        let loss = attribute_loss(&pairs, 1.0, EPS).unwrap();
        assert_abs_diff_eq!(loss, -(EPS.ln()) + 1.0, epsilon = 1e-9);
        assert!((loss - 1.0 - 16.118).abs() < 1e-3);
    }

    #[test]
    fn attribute_free_entities_count_in_the_average() {
        let v = filled(2, 0.5);
        let with = AttributePair {
            entity: v.view(),
            attributes: vec![v.view()],
        };
        let without = AttributePair {
            entity: v.view(),
            attributes: vec![],
        };
        let one = attribute_loss(std::slice::from_ref(&with), 0.0, EPS).unwrap();
        let two = attribute_loss(&[with, without.clone()], 0.0, EPS).unwrap();
        assert_abs_diff_eq!(two, one / 2.0, epsilon = 1e-15);
        assert_eq!(attribute_loss(&[without], 1.0, EPS).unwrap(), 0.0);
    }

    #[test]
    fn attribute_loss_rejects_mismatched_maps() {
        let v = filled(4, 0.5);
        let a = filled(3, 0.5);
        let pairs = [AttributePair {
            entity: v.view(),
            attributes: vec![a.view()],
        }];
        assert_eq!(
            attribute_loss(&pairs, 1.0, EPS).unwrap_err().kind(),
            "ShapeError"
        );
    }

    #[test]
    fn attribute_gradient_vanishes_at_agreement() {
        let v = filled(4, 0.5);
        let pairs = [AttributePair {
            entity: v.view(),
            attributes: vec![v.view()],
        }];
        let (_, grads) = attribute_loss_grad(&pairs, 0.0, EPS).unwrap();
        assert!(grads[0].attributes[0].iter().all(|&g| g == 0.0));
    }

    #[test]
    fn size_loss_examples() {
        let a = arr1(&[1.0, 1.0]);
        let b = arr1(&[2.0, 3.0]);
        assert_eq!(size_loss(&[a.view(), b.view()]), 0.0);
        assert_eq!(size_loss(&[b.view(), a.view()]), 1.5);
        let one = arr1(&[1.0]);
        assert_eq!(size_loss(&[one.view(), one.view(), one.view()]), 0.0);
        assert_eq!(size_loss(&[one.view()]), 0.0);
        let (_, g) = size_loss_grad(&[a.view(), b.view()]);
        assert!(g.iter().all(|m| m.iter().all(|&v| v == 0.0)));
        let (_, g) = size_loss_grad(&[b.view(), a.view()]);
        assert_eq!(g[0], arr1(&[0.5, 0.5]));
        assert_eq!(g[1], arr1(&[-0.5, -0.5]));
    }

    #[test]
    fn dice_examples() {
        let mask = arr1(&[1.0, 0.0, 1.0, 0.0]);
        let other = arr1(&[0.0, 1.0, 0.0, 1.0]);
        assert_abs_diff_eq!(
            loc_cross_loss(&[(mask.view(), mask.view())]).unwrap(),
            0.0,
            epsilon = 1e-8
        );
        assert_abs_diff_eq!(
            loc_cross_loss(&[(mask.view(), other.view())]).unwrap(),
            1.0,
            epsilon = 1e-12
        );
        let half = filled(4, 0.5);
        let one_hot = arr1(&[1.0, 0.0, 0.0, 0.0]);
        assert_abs_diff_eq!(
            loc_cross_loss(&[(half.view(), one_hot.view())]).unwrap(),
            2.0 / 3.0,
            epsilon = 1e-8
        );
        let short = arr1(&[1.0]);
        assert_eq!(
            loc_cross_loss(&[(half.view(), short.view())])
                .unwrap_err()
                .kind(),
            "ShapeError"
        );
    }

    #[test]
    fn self_dice_examples() {
        let ones = Array3::<f64>::ones((4, 2, 2));
        let mut one_hot = Array3::<f64>::zeros((4, 2, 2));
        for s in 0..4 {
            one_hot[[s, s / 2, s % 2]] = 1.0;
        }
        let loss = loc_self_loss(one_hot.view(), &[ones.view()]).unwrap();
        assert_abs_diff_eq!(loss, 12.0 / 5.0, epsilon = 1e-8);
        assert_abs_diff_eq!(
            loc_self_loss(one_hot.view(), &[one_hot.view()]).unwrap(),
            0.0,
            epsilon = 1e-7
        );
        let empty = Array3::<f64>::zeros((4, 2, 2));
        assert_eq!(loc_self_loss(empty.view(), &[empty.view()]).unwrap(), 0.0);
        let bad = Array3::<f64>::zeros((2, 2, 2));
        assert_eq!(
            loc_self_loss(one_hot.view(), &[bad.view()])
                .unwrap_err()
                .kind(),
            "ShapeError"
        );
    }

    #[test]
    fn total_is_linear() {
        let w = LossWeights::uniform(0.0);
        assert_eq!(total_loss(1.0, 2.0, 3.0, 4.0, &w).total, 0.0);
        let w = LossWeights {
            lambda_att: 1.0,
            ..LossWeights::uniform(0.0)
        };
        assert_eq!(total_loss(0.943147, 2.0, 3.0, 4.0, &w).total, 0.943147);
        assert_eq!(
            total_loss(1.0, 2.0, 3.0, 4.0, &LossWeights::default()).total,
            10.0
        );
    }

    #[test]
    fn weights_validation() {
        assert!(LossWeights::default().validate().is_ok());
        assert!(LossWeights {
            eta: -1.0,
            ..Default::default()
        }
        .validate()
        .is_err());
        assert!(LossWeights {
            clamp_eps: 0.5,
            ..Default::default()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn token_map_layouts() {
        let g = crate::scenegraph::parse_scene_graph(
            r#"{"caption":"c","entities":[{"name":"a","attributes":["red","big"]},{"name":"b"},{"name":"c","attributes":["blue"]}]}"#,
        )
        .unwrap();
        let t = TokenMap::from_graph(&g);
        assert_eq!(
            (t.entity_token(1), t.entity_token(2), t.entity_token(3)),
            (Some(0), Some(3), Some(4))
        );
        assert_eq!(t.attribute_tokens(1), &[1, 2]);
        assert_eq!(t.attribute_tokens(3), &[5]);
        assert_eq!(t.count(), 6);

        let g = crate::scenegraph::parse_scene_graph(
            r#"{"caption":"a red cat","entities":[{"name":"cat","token_index":3,"attributes":["red"],"attribute_token_indices":[2]},{"name":"dog","token_index":6,"attributes":["big"]}]}"#,
        )
        .unwrap();
        let t = TokenMap::from_graph(&g);
        assert_eq!((t.entity_token(1), t.entity_token(2)), (Some(3), Some(6)));
        assert_eq!(t.attribute_tokens(2), &[7]);
        assert_eq!(t.count(), 8);
    }
}
