//! Scene graphs: entities with quantities and attributes, relation triples,
//! and the directional constraints implied by relation predicates.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Entity {
    pub id: u32,
    pub name: String,
    pub quantity: u32,
    pub attributes: Vec<String>,
    /// Position of the name token in the prompt.
    pub token_index: Option<usize>,
    /// Prompt positions of the attribute tokens, aligned with `attributes`.
    pub attribute_token_indices: Option<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct RelationTriple {
    pub subject_id: u32,
    pub predicate: String,
    pub object_id: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SceneGraph {
    pub caption: String,
    pub entities: Vec<Entity>,
    pub relations: Vec<RelationTriple>,
}

impl SceneGraph {
    pub fn entity(&self, id: u32) -> Option<&Entity> {
        self.entities.iter().find(|e| e.id == id)
    }

    /// Entity ids in ascending order.
    pub fn ids(&self) -> Vec<u32> {
        let mut ids: Vec<u32> = self.entities.iter().map(|e| e.id).collect();
        ids.sort_unstable();
        ids
    }

    pub fn len(&self) -> usize {
        self.entities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entities.is_empty()
    }

    pub fn to_document(&self) -> GraphDocument {
        GraphDocument {
            caption: self.caption.clone(),
            entities: self
                .entities
                .iter()
                .map(|e| EntityDocument {
                    name: e.name.clone(),
                    id: Some(e.id as i64),
                    quantity: Some(e.quantity as i64),
                    attributes: e.attributes.clone(),
                    token_index: e.token_index,
                    attribute_token_indices: e.attribute_token_indices.clone(),
                })
                .collect(),
            relations: self
                .relations
                .iter()
                .map(|r| RelationDocument {
                    subject: r.subject_id as i64,
                    predicate: r.predicate.clone(),
                    object: r.object_id as i64,
                })
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.to_document()).expect("graph document serializes")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(&self.to_document()).expect("graph document serializes")
    }
}

/// Wire form of a scene graph document.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphDocument {
    pub caption: String,
    pub entities: Vec<EntityDocument>,
    #[serde(default)]
    pub relations: Vec<RelationDocument>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntityDocument {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quantity: Option<i64>,
    #[serde(default)]
    pub attributes: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token_index: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attribute_token_indices: Option<Vec<usize>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelationDocument {
    pub subject: i64,
    pub predicate: String,
    pub object: i64,
}

/// Parse and validate a scene graph document.
pub fn parse_scene_graph(document: &str) -> Result<SceneGraph> {
    let doc: GraphDocument =
        serde_json::from_str(document).map_err(|e| Error::Syntax(e.to_string()))?;
    from_document(doc)
}

pub fn from_document(doc: GraphDocument) -> Result<SceneGraph> {
    if doc.entities.is_empty() {
        return Err(Error::Validation("scene graph has no entities".into()));
    }
    let n = doc.entities.len();
    let explicit_ids = doc.entities.iter().filter(|e| e.id.is_some()).count();
    if explicit_ids != 0 && explicit_ids != n {
        return Err(Error::Validation(
            "entity ids must be given for all entities or for none".into(),
        ));
    }
    let with_tokens = doc
        .entities
        .iter()
        .filter(|e| e.token_index.is_some())
        .count();
    if with_tokens != 0 && with_tokens != n {
        return Err(Error::Validation(
            "token_index must be given for all entities or for none".into(),
        ));
    }

    let mut entities = Vec::with_capacity(n);
    let mut seen = BTreeSet::new();
    for (index, raw) in doc.entities.into_iter().enumerate() {
        let id = match raw.id {
            Some(id) if id < 1 || id > n as i64 => {
                return Err(Error::Validation(format!(
                    "entity {index}: id {id} outside 1..={n}"
                )))
            }
            Some(id) => id as u32,
            None => index as u32 + 1,
        };
        if !seen.insert(id) {
            return Err(Error::Validation(format!(
                "entity {index}: duplicate id {id}"
            )));
        }
        if raw.name.trim().is_empty() {
            return Err(Error::Validation(format!("entity {index}: empty name")));
        }
        let quantity = raw.quantity.unwrap_or(1);
        if quantity < 1 || quantity > u32::MAX as i64 {
            return Err(Error::Validation(format!(
                "entity {index}: quantity {quantity} must be at least 1"
            )));
        }
        if let Some(indices) = &raw.attribute_token_indices {
            if indices.len() != raw.attributes.len() {
                return Err(Error::Validation(format!(
                    "entity {index}: {} attribute token indices for {} attributes",
                    indices.len(),
                    raw.attributes.len()
                )));
            }
        }
        if let Some(attr) = raw.attributes.iter().position(|a| a.trim().is_empty()) {
            return Err(Error::Validation(format!(
                "entity {index}: attribute {attr} is empty"
            )));
        }
        entities.push(Entity {
            id,
            name: raw.name,
            quantity: quantity as u32,
            attributes: raw.attributes,
            token_index: raw.token_index,
            attribute_token_indices: raw.attribute_token_indices,
        });
    }

    let mut relations = Vec::with_capacity(doc.relations.len());
    let mut triples = BTreeSet::new();
    for (index, raw) in doc.relations.into_iter().enumerate() {
        let check = |role: &str, id: i64| -> Result<u32> {
            if id >= 1 && id <= n as i64 {
                Ok(id as u32)
            } else {
                Err(Error::Validation(format!(
                    "relation {index}: {role} id {id} does not name an entity"
                )))
            }
        };
        let subject_id = check("subject", raw.subject)?;
        let object_id = check("object", raw.object)?;
        if subject_id == object_id {
            return Err(Error::Validation(format!(
                "relation {index}: subject and object are both entity {subject_id}"
            )));
        }
        let triple = RelationTriple {
            subject_id,
            predicate: raw.predicate,
            object_id,
        };
        if !triples.insert(triple.clone()) {
            return Err(Error::Validation(format!(
                "relation {index}: duplicate triple"
            )));
        }
        relations.push(triple);
    }

    Ok(SceneGraph {
        caption: doc.caption,
        entities,
        relations,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Vertical {
    #[serde(alias = "above")]
    Above,
    #[serde(alias = "same")]
    Same,
    #[serde(alias = "below")]
    Below,
    #[serde(alias = "unconstrained")]
    Unconstrained,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Horizontal {
    #[serde(alias = "left")]
    Left,
    #[serde(alias = "same")]
    Same,
    #[serde(alias = "right")]
    Right,
    #[serde(alias = "unconstrained")]
    Unconstrained,
}

impl Vertical {
    pub const ALL: [Vertical; 4] = [
        Vertical::Above,
        Vertical::Same,
        Vertical::Below,
        Vertical::Unconstrained,
    ];

    pub fn invert(self) -> Self {
        match self {
            Vertical::Above => Vertical::Below,
            Vertical::Below => Vertical::Above,
            other => other,
        }
    }
}

impl Horizontal {
    pub const ALL: [Horizontal; 4] = [
        Horizontal::Left,
        Horizontal::Same,
        Horizontal::Right,
        Horizontal::Unconstrained,
    ];

    pub fn invert(self) -> Self {
        match self {
            Horizontal::Left => Horizontal::Right,
            Horizontal::Right => Horizontal::Left,
            other => other,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Axis {
    Horizontal,
    Vertical,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Axis::Horizontal => f.write_str("horizontal"),
            Axis::Vertical => f.write_str("vertical"),
        }
    }
}

/// Placement of entity `j` relative to the seed of entity `i`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DirectionalConstraint {
    pub i: u32,
    pub j: u32,
    pub vertical: Vertical,
    pub horizontal: Horizontal,
}

impl DirectionalConstraint {
    pub fn inverse(&self) -> Self {
        DirectionalConstraint {
            i: self.j,
            j: self.i,
            vertical: self.vertical.invert(),
            horizontal: self.horizontal.invert(),
        }
    }

    pub fn fully_constrained(&self) -> bool {
        self.vertical != Vertical::Unconstrained && self.horizontal != Horizontal::Unconstrained
    }
}

/// A set of directional constraints keyed by ordered pair `(i, j)`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Constraints {
    pairs: BTreeMap<(u32, u32), (Vertical, Horizontal)>,
}

impl Constraints {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn get(&self, i: u32, j: u32) -> Option<DirectionalConstraint> {
        self.pairs
            .get(&(i, j))
            .map(|&(vertical, horizontal)| DirectionalConstraint {
                i,
                j,
                vertical,
                horizontal,
            })
    }

    /// Insert a constraint as-is, replacing any previous entry for the pair.
    pub fn insert(&mut self, c: DirectionalConstraint) {
        self.pairs.insert((c.i, c.j), (c.vertical, c.horizontal));
    }

    /// Insert a constraint, combining it axis-wise with an existing entry.
    ///
    /// `UNCONSTRAINED` yields to anything; two different constrained values
    /// on one axis are a conflict.
    pub fn merge(&mut self, c: DirectionalConstraint) -> Result<()> {
        let entry = self
            .pairs
            .entry((c.i, c.j))
            .or_insert((Vertical::Unconstrained, Horizontal::Unconstrained));
        let vertical = match (entry.0, c.vertical) {
            (a, Vertical::Unconstrained) => a,
            (Vertical::Unconstrained, b) => b,
            (a, b) if a == b => a,
            (a, b) => {
                return Err(Error::Conflict {
                    i: c.i,
                    j: c.j,
                    detail: format!("vertical {a:?} vs {b:?}"),
                })
            }
        };
        let horizontal = match (entry.1, c.horizontal) {
            (a, Horizontal::Unconstrained) => a,
            (Horizontal::Unconstrained, b) => b,
            (a, b) if a == b => a,
            (a, b) => {
                return Err(Error::Conflict {
                    i: c.i,
                    j: c.j,
                    detail: format!("horizontal {a:?} vs {b:?}"),
                })
            }
        };
        *entry = (vertical, horizontal);
        Ok(())
    }

    /// Constraints in ascending `(i, j)` order.
    pub fn iter(&self) -> impl Iterator<Item = DirectionalConstraint> + '_ {
        self.pairs
            .iter()
            .map(|(&(i, j), &(vertical, horizontal))| DirectionalConstraint {
                i,
                j,
                vertical,
                horizontal,
            })
    }

    /// Constraints whose target is `j`.
    pub fn incoming(&self, j: u32) -> impl Iterator<Item = DirectionalConstraint> + '_ {
        self.iter().filter(move |c| c.j == j)
    }

    pub fn is_symmetric(&self) -> bool {
        self.iter().all(|c| self.get(c.j, c.i) == Some(c.inverse()))
    }
}

impl FromIterator<DirectionalConstraint> for Constraints {
    fn from_iter<T: IntoIterator<Item = DirectionalConstraint>>(iter: T) -> Self {
        let mut set = Constraints::new();
        for c in iter {
            set.insert(c);
        }
        set
    }
}

impl Serialize for Constraints {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.iter())
    }
}

impl<'de> Deserialize<'de> for Constraints {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let list = Vec::<DirectionalConstraint>::deserialize(deserializer)?;
        let mut set = Constraints::new();
        for c in list {
            if set.get(c.i, c.j).is_some() {
                return Err(serde::de::Error::custom(format!(
                    "duplicate constraint for pair ({}, {})",
                    c.i, c.j
                )));
            }
            set.insert(c);
        }
        Ok(set)
    }
}

/// Maps relation predicates to the direction of the subject relative to the object.
#[derive(Clone, Debug, Default)]
pub struct Lexicon {
    entries: HashMap<String, (Vertical, Horizontal)>,
}

fn normalize_predicate(predicate: &str) -> String {
    predicate
        .split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

impl Lexicon {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, predicate: &str, vertical: Vertical, horizontal: Horizontal) {
        self.entries
            .insert(normalize_predicate(predicate), (vertical, horizontal));
    }

    /// Case-insensitive, whitespace-normalized lookup.
    pub fn lookup(&self, predicate: &str) -> Option<(Vertical, Horizontal)> {
        self.entries.get(&normalize_predicate(predicate)).copied()
    }
}

pub fn default_lexicon() -> Lexicon {
    use Horizontal as H;
    use Vertical as V;
    let mut lexicon = Lexicon::empty();
    for p in ["left of", "to the left of", "on the left of"] {
        lexicon.insert(p, V::Same, H::Left);
    }
    for p in ["right of", "to the right of", "on the right of"] {
        lexicon.insert(p, V::Same, H::Right);
    }
    for p in [
        "above",
        "on",
        "on top of",
        "rides",
        "riding",
        "over",
        "sits on",
        "sitting on",
        "standing on",
    ] {
        lexicon.insert(p, V::Above, H::Same);
    }
    for p in ["below", "under", "beneath", "underneath"] {
        lexicon.insert(p, V::Below, H::Same);
    }
    for p in ["next to", "beside", "near"] {
        lexicon.insert(p, V::Same, H::Unconstrained);
    }
    lexicon
}

/// Derive the symmetry-closed directional constraint set of a scene graph.
pub fn derive_constraints(graph: &SceneGraph, lexicon: &Lexicon) -> Result<Constraints> {
    // sorted so that conflict reports do not depend on relation order
    let mut relations: Vec<&RelationTriple> = graph.relations.iter().collect();
    relations.sort();

    // relations stated about the same ordered pair must agree
    let mut forward = Constraints::new();
    for r in relations {
        let (vertical, horizontal) = lexicon
            .lookup(&r.predicate)
            .unwrap_or((Vertical::Unconstrained, Horizontal::Unconstrained));
        forward.merge(DirectionalConstraint {
            i: r.object_id,
            j: r.subject_id,
            vertical,
            horizontal,
        })?;
    }
    // closing over reversed relations: strict opposites are a 2-cycle
    let mut set = forward.clone();
    for c in forward.iter() {
        let inverse = c.inverse();
        if let Err(err) = set.merge(inverse) {
            let existing = set
                .get(inverse.i, inverse.j)
                .expect("merge failed on an entry");
            let horizontal_cycle = matches!(
                (existing.horizontal, inverse.horizontal),
                (Horizontal::Left, Horizontal::Right) | (Horizontal::Right, Horizontal::Left)
            );
            let vertical_cycle = matches!(
                (existing.vertical, inverse.vertical),
                (Vertical::Above, Vertical::Below) | (Vertical::Below, Vertical::Above)
            );
            let mut entities = vec![c.i, c.j];
            entities.sort_unstable();
            return Err(if horizontal_cycle {
                Error::Cycle {
                    axis: Axis::Horizontal,
                    entities,
                }
            } else if vertical_cycle {
                Error::Cycle {
                    axis: Axis::Vertical,
                    entities,
                }
            } else {
                err
            });
        }
    }
    let ids = graph.ids();
    AxisOrder::build(&ids, &set, Axis::Horizontal)?;
    AxisOrder::build(&ids, &set, Axis::Vertical)?;
    Ok(set)
}

/// Per-axis ordering of entities induced by a constraint set.
///
/// Entities tied by `SAME` share a class; strict `LEFT`/`RIGHT` (or
/// `ABOVE`/`BELOW`) constraints order the classes. Each entity's rank is the
/// length of the longest strict chain ending at its class.
#[derive(Clone, Debug)]
pub struct AxisOrder {
    rank: BTreeMap<u32, usize>,
    class: BTreeMap<u32, u32>,
    rank_count: usize,
}

impl AxisOrder {
    pub fn build(ids: &[u32], constraints: &Constraints, axis: Axis) -> Result<Self> {
        let mut parent: BTreeMap<u32, u32> = ids.iter().map(|&id| (id, id)).collect();
        fn find(parent: &mut BTreeMap<u32, u32>, x: u32) -> u32 {
            let mut root = x;
            while parent[&root] != root {
                root = parent[&root];
            }
            let mut cur = x;
            while parent[&cur] != root {
                let next = parent[&cur];
                parent.insert(cur, root);
                cur = next;
            }
            root
        }

        // strict edges a -> b mean coordinate(a) < coordinate(b)
        let mut strict: Vec<(u32, u32)> = Vec::new();
        for c in constraints.iter() {
            if !parent.contains_key(&c.i) || !parent.contains_key(&c.j) {
                continue;
            }
            let relation = match axis {
                Axis::Horizontal => match c.horizontal {
                    Horizontal::Right => Some(Ordering3::Greater),
                    Horizontal::Left => Some(Ordering3::Less),
                    Horizontal::Same => Some(Ordering3::Equal),
                    Horizontal::Unconstrained => None,
                },
                // row 0 is the top: ABOVE means a smaller row index
                Axis::Vertical => match c.vertical {
                    Vertical::Below => Some(Ordering3::Greater),
                    Vertical::Above => Some(Ordering3::Less),
                    Vertical::Same => Some(Ordering3::Equal),
                    Vertical::Unconstrained => None,
                },
            };
            match relation {
                Some(Ordering3::Greater) => strict.push((c.i, c.j)),
                Some(Ordering3::Less) => strict.push((c.j, c.i)),
                Some(Ordering3::Equal) => {
                    let (a, b) = (find(&mut parent, c.i), find(&mut parent, c.j));
                    if a != b {
                        let (lo, hi) = (a.min(b), a.max(b));
                        parent.insert(hi, lo);
                    }
                }
                None => {}
            }
        }

        let class: BTreeMap<u32, u32> = ids.iter().map(|&id| (id, find(&mut parent, id))).collect();
        let mut succ: BTreeMap<u32, BTreeSet<u32>> = BTreeMap::new();
        let mut indegree: BTreeMap<u32, usize> = class.values().map(|&c| (c, 0)).collect();
        for (a, b) in strict {
            let (ca, cb) = (class[&a], class[&b]);
            if ca == cb {
                let mut entities: Vec<u32> = vec![a, b];
                entities.sort_unstable();
                return Err(Error::Cycle { axis, entities });
            }
            if succ.entry(ca).or_default().insert(cb) {
                *indegree.get_mut(&cb).unwrap() += 1;
            }
        }

        let mut class_rank: BTreeMap<u32, usize> = BTreeMap::new();
        let mut ready: Vec<u32> = indegree
            .iter()
            .filter(|(_, &d)| d == 0)
            .map(|(&c, _)| c)
            .collect();
        for &c in &ready {
            class_rank.insert(c, 0);
        }
        while let Some(c) = ready.pop() {
            let r = class_rank[&c];
            if let Some(next) = succ.get(&c) {
                for &n in next {
                    let slot = class_rank.entry(n).or_insert(0);
                    *slot = (*slot).max(r + 1);
                    let d = indegree.get_mut(&n).unwrap();
                    *d -= 1;
                    if *d == 0 {
                        ready.push(n);
                    }
                }
            }
        }
        if indegree.values().any(|&d| d > 0) {
            let entities: Vec<u32> = class
                .iter()
                .filter(|(_, c)| indegree[c] > 0)
                .map(|(&id, _)| id)
                .collect();
            return Err(Error::Cycle { axis, entities });
        }

        let rank: BTreeMap<u32, usize> = class.iter().map(|(&id, c)| (id, class_rank[c])).collect();
        let rank_count = rank.values().copied().max().map_or(0, |m| m + 1);
        Ok(AxisOrder {
            rank,
            class,
            rank_count,
        })
    }

    pub fn rank(&self, id: u32) -> Option<usize> {
        self.rank.get(&id).copied()
    }

    /// Number of distinct ranks.
    pub fn rank_count(&self) -> usize {
        self.rank_count
    }

    pub fn same_class(&self, a: u32, b: u32) -> bool {
        self.class.contains_key(&a) && self.class.get(&a) == self.class.get(&b)
    }
}

#[derive(Clone, Copy)]
enum Ordering3 {
    Less,
    Equal,
    Greater,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cat_dog(predicate: &str) -> SceneGraph {
        parse_scene_graph(&format!(
            r#"{{"caption":"c","entities":[{{"name":"cat"}},{{"name":"dog"}}],
                "relations":[{{"subject":1,"predicate":"{predicate}","object":2}}]}}"#
        ))
        .unwrap()
    }

    #[test]
    fn parses_minimal_document_with_defaults() {
        let g = parse_scene_graph(r#"{"caption":"a cat","entities":[{"name":"cat"}]}"#).unwrap();
        assert_eq!(g.entities.len(), 1);
        let e = &g.entities[0];
        assert_eq!((e.id, e.quantity), (1, 1));
        assert!(e.attributes.is_empty());
        assert!(g.relations.is_empty());
    }

    #[test]
    fn parses_quantities_and_relations() {
        let g = parse_scene_graph(
            r#"{"caption":"two red apples on a table","entities":[{"name":"apple","quantity":2,"attributes":["red"]},{"name":"table"}],"relations":[{"subject":1,"predicate":"on","object":2}]}"#,
        )
        .unwrap();
        let q: Vec<u32> = g.entities.iter().map(|e| e.quantity).collect();
        assert_eq!(q, vec![2, 1]);
        assert_eq!(g.relations.len(), 1);
        assert_eq!(g.entities[0].attributes, vec!["red".to_string()]);
    }

    #[test]
    fn dangling_relation_names_its_index() {
        let err = parse_scene_graph(
            r#"{"caption":"x","entities":[{"name":"a"},{"name":"b"}],"relations":[{"subject":1,"predicate":"on","object":5}]}"#,
        )
        .unwrap_err();
        match err {
            Error::Validation(msg) => assert!(msg.contains("relation 0"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_documents() {
        let cases = [
            (r#"{"caption":"x","entities":[]}"#, "ValidationError"),
            (
                r#"{"caption":"x","entities":[{"name":"a","quantity":0}]}"#,
                "ValidationError",
            ),
            (
                r#"{"caption":"x","entities":[{"name":"a","id":1},{"name":"b","id":1}]}"#,
                "ValidationError",
            ),
            (
                r#"{"caption":"x","entities":[{"name":"a","colour":"red"}]}"#,
                "SyntaxError",
            ),
            (r#"{"caption":"x","entities":[{"name":"a"}"#, "SyntaxError"),
            (
                r#"{"caption":"x","entities":[{"name":""}]}"#,
                "ValidationError",
            ),
            (
                r#"{"caption":"x","entities":[{"name":"a","token_index":1},{"name":"b"}]}"#,
                "ValidationError",
            ),
            (
                r#"{"caption":"x","entities":[{"name":"a"},{"name":"b"}],"relations":[{"subject":1,"predicate":"on","object":2},{"subject":1,"predicate":"on","object":2}]}"#,
                "ValidationError",
            ),
            (
                r#"{"caption":"x","entities":[{"name":"a"}],"relations":[{"subject":1,"predicate":"on","object":1}]}"#,
                "ValidationError",
            ),
        ];
        for (doc, kind) in cases {
            let err = parse_scene_graph(doc).unwrap_err();
            assert_eq!(err.kind(), kind, "{doc}: {err}");
        }
    }

    #[test]
    fn explicit_ids_are_honoured() {
        let g = parse_scene_graph(
            r#"{"caption":"x","entities":[{"name":"a","id":2},{"name":"b","id":1}],"relations":[{"subject":2,"predicate":"above","object":1}]}"#,
        )
        .unwrap();
        assert_eq!(g.entity(2).unwrap().name, "a");
        assert_eq!(g.ids(), vec![1, 2]);
    }

    #[test]
    fn lexicon_lookup() {
        let lex = default_lexicon();
        assert_eq!(
            lex.lookup("rides"),
            Some((Vertical::Above, Horizontal::Same))
        );
        assert_eq!(
            lex.lookup("LEFT OF"),
            Some((Vertical::Same, Horizontal::Left))
        );
        assert_eq!(
            lex.lookup("  left   of "),
            Some((Vertical::Same, Horizontal::Left))
        );
        assert_eq!(lex.lookup("holding"), None);
        assert_eq!(
            lex.lookup("under"),
            Some((Vertical::Below, Horizontal::Same))
        );
        assert_eq!(
            lex.lookup("beside"),
            Some((Vertical::Same, Horizontal::Unconstrained))
        );
    }

    #[test]
    fn left_of_yields_closed_pair() {
        let set = derive_constraints(&cat_dog("left of"), &default_lexicon()).unwrap();
        let got: Vec<_> = set.iter().collect();
        assert_eq!(
            got,
            vec![
                DirectionalConstraint {
                    i: 1,
                    j: 2,
                    vertical: Vertical::Same,
                    horizontal: Horizontal::Right
                },
                DirectionalConstraint {
                    i: 2,
                    j: 1,
                    vertical: Vertical::Same,
                    horizontal: Horizontal::Left
                },
            ]
        );
        assert!(set.is_symmetric());
    }

    #[test]
    fn no_relations_no_constraints() {
        let g =
            parse_scene_graph(r#"{"caption":"c","entities":[{"name":"a"},{"name":"b"}]}"#).unwrap();
        assert!(derive_constraints(&g, &default_lexicon())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn unknown_predicate_is_unconstrained() {
        let set = derive_constraints(&cat_dog("holding"), &default_lexicon()).unwrap();
        let c = set.get(2, 1).unwrap();
        assert_eq!(
            (c.vertical, c.horizontal),
            (Vertical::Unconstrained, Horizontal::Unconstrained)
        );
        assert!(set.get(1, 2).is_some());
    }

    #[test]
    fn two_cycle_is_rejected() {
        let g = parse_scene_graph(
            r#"{"caption":"c","entities":[{"name":"a"},{"name":"b"}],"relations":[{"subject":1,"predicate":"left of","object":2},{"subject":2,"predicate":"left of","object":1}]}"#,
        )
        .unwrap();
        let err = derive_constraints(&g, &default_lexicon()).unwrap_err();
        assert_eq!(err.kind(), "CycleError", "{err}");
    }

    #[test]
    fn long_cycle_is_rejected() {
        let g = parse_scene_graph(
            r#"{"caption":"c","entities":[{"name":"a"},{"name":"b"},{"name":"c"}],"relations":[
                {"subject":1,"predicate":"above","object":2},
                {"subject":2,"predicate":"holding","object":3},
                {"subject":2,"predicate":"above","object":3},
                {"subject":3,"predicate":"above","object":1}]}"#,
        )
        .unwrap();
        assert_eq!(
            derive_constraints(&g, &default_lexicon())
                .unwrap_err()
                .kind(),
            "CycleError"
        );
    }

    #[test]
    fn contradictory_pair_is_a_conflict() {
        let g = parse_scene_graph(
            r#"{"caption":"c","entities":[{"name":"a"},{"name":"b"}],"relations":[{"subject":1,"predicate":"left of","object":2},{"subject":1,"predicate":"above","object":2}]}"#,
        )
        .unwrap();
        assert_eq!(
            derive_constraints(&g, &default_lexicon())
                .unwrap_err()
                .kind(),
            "ConflictError"
        );
    }

    #[test]
    fn opposite_statements_about_one_pair_conflict() {
        let g = parse_scene_graph(
            r#"{"caption":"c","entities":[{"name":"a"},{"name":"b"}],"relations":[{"subject":1,"predicate":"left of","object":2},{"subject":1,"predicate":"right of","object":2}]}"#,
        )
        .unwrap();
        assert_eq!(
            derive_constraints(&g, &default_lexicon())
                .unwrap_err()
                .kind(),
            "ConflictError"
        );
    }

    #[test]
    fn compatible_duplicates_merge() {
        let g = parse_scene_graph(
            r#"{"caption":"c","entities":[{"name":"a"},{"name":"b"}],"relations":[{"subject":1,"predicate":"beside","object":2},{"subject":1,"predicate":"left of","object":2},{"subject":1,"predicate":"holding","object":2}]}"#,
        )
        .unwrap();
        let set = derive_constraints(&g, &default_lexicon()).unwrap();
        let c = set.get(2, 1).unwrap();
        assert_eq!(
            (c.vertical, c.horizontal),
            (Vertical::Same, Horizontal::Left)
        );
    }

    #[test]
    fn axis_ranks_follow_longest_path() {
        // 1 left of 2, 2 left of 3, 1 left of 3
        let mut set = Constraints::new();
        for (s, o) in [(1, 2), (2, 3), (1, 3)] {
            let c = DirectionalConstraint {
                i: o,
                j: s,
                vertical: Vertical::Unconstrained,
                horizontal: Horizontal::Left,
            };
            set.insert(c);
            set.insert(c.inverse());
        }
        let order = AxisOrder::build(&[1, 2, 3], &set, Axis::Horizontal).unwrap();
        assert_eq!(
            (order.rank(1), order.rank(2), order.rank(3)),
            (Some(0), Some(1), Some(2))
        );
        assert_eq!(order.rank_count(), 3);
        let vertical = AxisOrder::build(&[1, 2, 3], &set, Axis::Vertical).unwrap();
        assert_eq!(vertical.rank_count(), 1);
    }

    #[test]
    fn round_trip_is_stable() {
        let g = parse_scene_graph(
            r#"{"caption":"two red apples","entities":[{"name":"apple","quantity":2,"attributes":["red","shiny"],"token_index":2,"attribute_token_indices":[1,3]},{"name":"table","token_index":6}],"relations":[{"subject":1,"predicate":"on","object":2}]}"#,
        )
        .unwrap();
        let again = parse_scene_graph(&g.to_json()).unwrap();
        assert_eq!(g, again);
    }
}
