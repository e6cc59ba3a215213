//! Finite relational structures over an explicit signature.
//!
//! Every relation is stored as an explicit set of tuples. Symmetric
//! relations (graph edges, distance relations) carry both orientations, so
//! nothing here assumes symmetry. Relation families such as `R1, R2, ...`
//! are truncated by [`RelationalSignature::truncation_index`]; a tuple for a
//! family member beyond the truncation is rejected instead of dropped.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StructureError {
    #[error("incompatible signatures")]
    IncompatibleSignatures,
    #[error("duplicate relation name `{0}`")]
    DuplicateRelation(String),
    #[error("relation `{0}` must have arity at least 1")]
    ZeroArity(String),
    #[error("unknown relation `{0}`")]
    UnknownRelation(String),
    #[error("relation `{name}` has family index {index}, beyond truncation index {truncation}")]
    BeyondTruncation {
        name: String,
        index: usize,
        truncation: usize,
    },
    #[error("tuple {tuple:?} of relation `{relation}` has length {len}, expected {arity}")]
    ArityMismatch {
        relation: String,
        tuple: Vec<usize>,
        len: usize,
        arity: usize,
    },
    #[error("tuple {tuple:?} of relation `{relation}` leaves the domain 0..{size}")]
    OutOfDomain {
        relation: String,
        tuple: Vec<usize>,
        size: usize,
    },
    #[error("assignment has {got} entries but the source has {expected} elements")]
    AssignmentLength { got: usize, expected: usize },
    #[error("assignment sends {from} to {to}, outside the target domain 0..{size}")]
    AssignmentOutOfRange { from: usize, to: usize, size: usize },
    #[error("map {0} is not an embedding")]
    NotAnEmbedding(&'static str),
}

pub type Result<T> = std::result::Result<T, StructureError>;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RelationSymbol {
    pub name: String,
    pub arity: usize,
}

impl RelationSymbol {
    pub fn new(name: impl Into<String>, arity: usize) -> Self {
        Self {
            name: name.into(),
            arity,
        }
    }

    /// Trailing decimal digits of the name, read as the index inside a
    /// relation family (`R12` -> 12).
    pub fn family_index(&self) -> Option<usize> {
        family_index(&self.name)
    }
}

fn family_index(name: &str) -> Option<usize> {
    let digits = name
        .char_indices()
        .rev()
        .take_while(|(_, c)| c.is_ascii_digit())
        .last()
        .map(|(i, _)| i)?;
    if digits == 0 {
        return None;
    }
    name[digits..].parse().ok()
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RelationalSignature {
    relations: Vec<RelationSymbol>,
    truncation_index: Option<usize>,
}

impl RelationalSignature {
    pub fn new(relations: Vec<RelationSymbol>, truncation_index: Option<usize>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for rel in &relations {
            if !seen.insert(rel.name.as_str()) {
                return Err(StructureError::DuplicateRelation(rel.name.clone()));
            }
            if rel.arity == 0 {
                return Err(StructureError::ZeroArity(rel.name.clone()));
            }
            if let (Some(truncation), Some(index)) = (truncation_index, rel.family_index()) {
                if index > truncation {
                    return Err(StructureError::BeyondTruncation {
                        name: rel.name.clone(),
                        index,
                        truncation,
                    });
                }
            }
        }
        Ok(Self {
            relations,
            truncation_index,
        })
    }

    /// Signature with a single symmetric-by-convention binary relation `E`.
    pub fn graph() -> Self {
        Self::new(vec![RelationSymbol::new("E", 2)], None).expect("valid signature")
    }

    pub fn relations(&self) -> &[RelationSymbol] {
        &self.relations
    }

    pub fn truncation_index(&self) -> Option<usize> {
        self.truncation_index
    }

    pub fn len(&self) -> usize {
        self.relations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relations.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        if let Some(i) = self.relations.iter().position(|r| r.name == name) {
            return Ok(i);
        }
        match (self.truncation_index, family_index(name)) {
            (Some(truncation), Some(index)) if index > truncation => {
                Err(StructureError::BeyondTruncation {
                    name: name.to_string(),
                    index,
                    truncation,
                })
            }
            _ => Err(StructureError::UnknownRelation(name.to_string())),
        }
    }
}

/// A finite relational structure with domain `0..size`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FiniteStructure {
    signature: RelationalSignature,
    size: usize,
    relations: Vec<BTreeSet<Vec<usize>>>,
}

impl FiniteStructure {
    pub fn empty(signature: RelationalSignature, size: usize) -> Self {
        let relations = vec![BTreeSet::new(); signature.len()];
        Self {
            signature,
            size,
            relations,
        }
    }

    pub fn signature(&self) -> &RelationalSignature {
        &self.signature
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn tuples(&self, relation: usize) -> &BTreeSet<Vec<usize>> {
        &self.relations[relation]
    }

    pub fn tuples_named(&self, name: &str) -> Result<&BTreeSet<Vec<usize>>> {
        Ok(&self.relations[self.signature.index_of(name)?])
    }

    pub fn holds(&self, relation: usize, tuple: &[usize]) -> bool {
        self.relations[relation].contains(tuple)
    }

    pub fn add_tuple(&mut self, name: &str, tuple: Vec<usize>) -> Result<()> {
        let idx = self.signature.index_of(name)?;
        self.add_tuple_at(idx, tuple)
    }

    pub fn add_tuple_at(&mut self, relation: usize, tuple: Vec<usize>) -> Result<()> {
        let symbol = &self.signature.relations[relation];
        if tuple.len() != symbol.arity {
            return Err(StructureError::ArityMismatch {
                relation: symbol.name.clone(),
                len: tuple.len(),
                arity: symbol.arity,
                tuple,
            });
        }
        if tuple.iter().any(|&x| x >= self.size) {
            return Err(StructureError::OutOfDomain {
                relation: symbol.name.clone(),
                tuple,
                size: self.size,
            });
        }
        self.relations[relation].insert(tuple);
        Ok(())
    }

    /// Adds `(x, y)` and `(y, x)`.
    pub fn add_symmetric(&mut self, name: &str, x: usize, y: usize) -> Result<()> {
        self.add_tuple(name, vec![x, y])?;
        self.add_tuple(name, vec![y, x])
    }

    /// Induced substructure on `points`, relabelled so that `points[i]`
    /// becomes element `i`.
    pub fn induced(&self, points: &[usize]) -> FiniteStructure {
        let mut position = vec![usize::MAX; self.size];
        for (i, &p) in points.iter().enumerate() {
            position[p] = i;
        }
        let relations = self
            .relations
            .iter()
            .map(|set| {
                set.iter()
                    .filter(|t| t.iter().all(|&x| position[x] != usize::MAX))
                    .map(|t| t.iter().map(|&x| position[x]).collect())
                    .collect()
            })
            .collect();
        FiniteStructure {
            signature: self.signature.clone(),
            size: points.len(),
            relations,
        }
    }

    /// Image of the structure under a bijection `perm` of its domain.
    pub fn relabel(&self, perm: &[usize]) -> FiniteStructure {
        let relations = self
            .relations
            .iter()
            .map(|set| {
                set.iter()
                    .map(|t| t.iter().map(|&x| perm[x]).collect())
                    .collect()
            })
            .collect();
        FiniteStructure {
            signature: self.signature.clone(),
            size: self.size,
            relations,
        }
    }

    pub fn to_json(&self) -> StructureJson {
        StructureJson::from(self)
    }
}

impl fmt::Display for FiniteStructure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "structure on {} points", self.size)?;
        for (symbol, set) in self.signature.relations.iter().zip(&self.relations) {
            write!(f, "; {}: {:?}", symbol.name, set)?;
        }
        Ok(())
    }
}

/// Wire format: `{"signature": [...], "size": n, "relations": {...}}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureJson {
    pub signature: Vec<RelationSymbol>,
    pub size: usize,
    pub relations: BTreeMap<String, Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation_index: Option<usize>,
}

impl From<&FiniteStructure> for StructureJson {
    fn from(s: &FiniteStructure) -> Self {
        let relations = s
            .signature
            .relations
            .iter()
            .zip(&s.relations)
            .map(|(sym, set)| (sym.name.clone(), set.iter().cloned().collect()))
            .collect();
        StructureJson {
            signature: s.signature.relations.clone(),
            size: s.size,
            relations,
            truncation_index: s.signature.truncation_index,
        }
    }
}

impl TryFrom<StructureJson> for FiniteStructure {
    type Error = StructureError;

    fn try_from(json: StructureJson) -> Result<Self> {
        let signature = RelationalSignature::new(json.signature, json.truncation_index)?;
        let mut s = FiniteStructure::empty(signature, json.size);
        for (name, tuples) in json.relations {
            let idx = s.signature.index_of(&name)?;
            for t in tuples {
                s.add_tuple_at(idx, t)?;
            }
        }
        Ok(s)
    }
}

/// An injective map between two structures over the same signature.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmbeddingMap {
    pub source: FiniteStructure,
    pub target: FiniteStructure,
    pub assignment: Vec<usize>,
}

impl EmbeddingMap {
    pub fn new(source: FiniteStructure, target: FiniteStructure, assignment: Vec<usize>) -> Self {
        Self {
            source,
            target,
            assignment,
        }
    }

    pub fn identity(s: &FiniteStructure) -> Self {
        Self::new(s.clone(), s.clone(), (0..s.size).collect())
    }

    pub fn is_embedding(&self) -> Result<bool> {
        embeds(&self.source, &self.target, &self.assignment)
    }

    /// `other ∘ self`; requires `self.target == other.source`.
    pub fn then(&self, other: &EmbeddingMap) -> Result<EmbeddingMap> {
        if self.target.signature != other.source.signature {
            return Err(StructureError::IncompatibleSignatures);
        }
        let assignment = self
            .assignment
            .iter()
            .map(|&x| other.assignment[x])
            .collect();
        Ok(EmbeddingMap::new(
            self.source.clone(),
            other.target.clone(),
            assignment,
        ))
    }
}

pub fn is_embedding(f: &EmbeddingMap) -> Result<bool> {
    f.is_embedding()
}

/// True iff `assignment` is injective and preserves and reflects every
/// relation.
pub fn embeds(source: &FiniteStructure, target: &FiniteStructure, assignment: &[usize]) -> Result<bool> {
    if source.signature != target.signature {
        return Err(StructureError::IncompatibleSignatures);
    }
    if assignment.len() != source.size {
        return Err(StructureError::AssignmentLength {
            got: assignment.len(),
            expected: source.size,
        });
    }
    let mut preimage = vec![usize::MAX; target.size];
    for (from, &to) in assignment.iter().enumerate() {
        if to >= target.size {
            return Err(StructureError::AssignmentOutOfRange {
                from,
                to,
                size: target.size,
            });
        }
        if preimage[to] != usize::MAX {
            return Ok(false);
        }
        preimage[to] = from;
    }
    for (src, tgt) in source.relations.iter().zip(&target.relations) {
        // preserve
        for t in src {
            let image: Vec<usize> = t.iter().map(|&x| assignment[x]).collect();
            if !tgt.contains(&image) {
                return Ok(false);
            }
        }
        // reflect
        for t in tgt {
            if t.iter().all(|&y| preimage[y] != usize::MAX) {
                let pre: Vec<usize> = t.iter().map(|&y| preimage[y]).collect();
                if !src.contains(&pre) {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

// ---------------------------------------------------------------------------
// Canonical forms
// ---------------------------------------------------------------------------

struct Canonizer<'a> {
    s: &'a FiniteStructure,
    /// incidences[v] = (relation, position, tuple) for every tuple through v
    incidences: Vec<Vec<(usize, usize, &'a [usize])>>,
    twin_class: Vec<usize>,
    best: Option<(Vec<u8>, Vec<usize>)>,
}

impl<'a> Canonizer<'a> {
    fn new(s: &'a FiniteStructure) -> Self {
        let mut incidences = vec![Vec::new(); s.size];
        for (r, set) in s.relations.iter().enumerate() {
            for t in set {
                for (pos, &x) in t.iter().enumerate() {
                    incidences[x].push((r, pos, t.as_slice()));
                }
            }
        }
        let twin_class = twin_classes(s);
        Self {
            s,
            incidences,
            twin_class,
            best: None,
        }
    }

    fn refine(&self, mut colors: Vec<usize>) -> Vec<usize> {
        let n = self.s.size;
        let mut classes = count_classes(&colors);
        loop {
            let mut keys: Vec<(usize, Vec<(usize, usize, Vec<usize>)>)> = (0..n)
                .map(|v| {
                    let mut sig: Vec<(usize, usize, Vec<usize>)> = self.incidences[v]
                        .iter()
                        .map(|&(r, pos, t)| (r, pos, t.iter().map(|&x| colors[x]).collect()))
                        .collect();
                    sig.sort_unstable();
                    (colors[v], sig)
                })
                .collect();
            let mut distinct: Vec<&(usize, Vec<(usize, usize, Vec<usize>)>)> = keys.iter().collect();
            distinct.sort();
            distinct.dedup();
            let next: Vec<usize> = keys
                .iter()
                .map(|k| distinct.binary_search(&k).expect("present"))
                .collect();
            let next_classes = distinct.len();
            keys.clear();
            colors = next;
            if next_classes == classes {
                return colors;
            }
            classes = next_classes;
        }
    }

    fn search(&mut self, colors: Vec<usize>) {
        let colors = self.refine(colors);
        let n = self.s.size;
        let classes = count_classes(&colors);
        if classes == n {
            let code = encode(self.s, &colors);
            let better = match &self.best {
                None => true,
                Some((best, _)) => code < *best,
            };
            if better {
                self.best = Some((code, colors));
            }
            return;
        }
        let mut sizes = vec![0usize; classes];
        for &c in &colors {
            sizes[c] += 1;
        }
        let cell = (0..classes).find(|&c| sizes[c] > 1).expect("non-discrete");
        let members: Vec<usize> = (0..n).filter(|&v| colors[v] == cell).collect();
        let mut tried_twins = BTreeSet::new();
        for &v in &members {
            if !tried_twins.insert(self.twin_class[v]) {
                continue;
            }
            let split: Vec<usize> = colors
                .iter()
                .enumerate()
                .map(|(x, &c)| if x == v { 2 * c } else { 2 * c + 1 })
                .collect();
            self.search(normalize(&split));
        }
    }
}

fn count_classes(colors: &[usize]) -> usize {
    colors.iter().copied().max().map_or(0, |m| m + 1)
}

fn normalize(colors: &[usize]) -> Vec<usize> {
    let mut distinct: Vec<usize> = colors.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    colors
        .iter()
        .map(|c| distinct.binary_search(c).expect("present"))
        .collect()
}

/// Elements u, v are twins when the transposition (u v) is an automorphism.
fn twin_classes(s: &FiniteStructure) -> Vec<usize> {
    let n = s.size;
    let mut class: Vec<usize> = (0..n).collect();
    for u in 0..n {
        if class[u] != u {
            continue;
        }
        for v in u + 1..n {
            if class[v] != v {
                continue;
            }
            let swap = |x: usize| {
                if x == u {
                    v
                } else if x == v {
                    u
                } else {
                    x
                }
            };
            let is_auto = s.relations.iter().all(|set| {
                set.iter().all(|t| {
                    let image: Vec<usize> = t.iter().map(|&x| swap(x)).collect();
                    set.contains(&image)
                })
            });
            if is_auto {
                class[v] = u;
            }
        }
    }
    class
}

fn push_u32(out: &mut Vec<u8>, x: usize) {
    out.extend_from_slice(&(x as u32).to_be_bytes());
}

/// Encodes `s` relabelled by `position` (element -> new label).
fn encode(s: &FiniteStructure, position: &[usize]) -> Vec<u8> {
    let mut out = Vec::new();
    push_u32(&mut out, s.signature.relations.len());
    for sym in &s.signature.relations {
        push_u32(&mut out, sym.name.len());
        out.extend_from_slice(sym.name.as_bytes());
        push_u32(&mut out, sym.arity);
    }
    push_u32(&mut out, s.size);
    for set in &s.relations {
        let mut tuples: Vec<Vec<usize>> = set
            .iter()
            .map(|t| t.iter().map(|&x| position[x]).collect())
            .collect();
        tuples.sort_unstable();
        push_u32(&mut out, tuples.len());
        for t in tuples {
            for x in t {
                push_u32(&mut out, x);
            }
        }
    }
    out
}

/// Canonical code together with the labelling (element -> position) that
/// produces it.
pub fn canonical_labeling(s: &FiniteStructure) -> (Vec<u8>, Vec<usize>) {
    let mut canonizer = Canonizer::new(s);
    canonizer.search(vec![0; s.size]);
    canonizer.best.unwrap_or_else(|| (encode(s, &[]), Vec::new()))
}

/// A byte string that is equal for two structures iff they are isomorphic.
pub fn canonical_code(s: &FiniteStructure) -> Vec<u8> {
    canonical_labeling(s).0
}

pub fn find_isomorphism(a: &FiniteStructure, b: &FiniteStructure) -> Result<Option<EmbeddingMap>> {
    if a.signature != b.signature {
        return Err(StructureError::IncompatibleSignatures);
    }
    if a.size != b.size
        || a.relations
            .iter()
            .zip(&b.relations)
            .any(|(x, y)| x.len() != y.len())
    {
        return Ok(None);
    }
    let (code_a, lab_a) = canonical_labeling(a);
    let (code_b, lab_b) = canonical_labeling(b);
    if code_a != code_b {
        return Ok(None);
    }
    let mut inverse_b = vec![0; b.size];
    for (x, &p) in lab_b.iter().enumerate() {
        inverse_b[p] = x;
    }
    let assignment = lab_a.iter().map(|&p| inverse_b[p]).collect();
    Ok(Some(EmbeddingMap::new(a.clone(), b.clone(), assignment)))
}

// ---------------------------------------------------------------------------
// Free amalgamation
// ---------------------------------------------------------------------------

/// Result of gluing two structures: the amalgam and the embeddings of both
/// sides into it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FreeAmalgam {
    pub structure: FiniteStructure,
    pub left: Vec<usize>,
    pub right: Vec<usize>,
}

/// Disjoint union of `b1` and `b2` with `f1(a)` and `f2(a)` identified and
/// no relation tuple outside the two copies.
///
/// Elements of `b1` keep their labels; the points of `b2` outside `f2(a)`
/// follow in increasing order.
pub fn free_amalgam(
    a: &FiniteStructure,
    b1: &FiniteStructure,
    b2: &FiniteStructure,
    f1: &[usize],
    f2: &[usize],
) -> Result<FreeAmalgam> {
    if a.signature != b1.signature || a.signature != b2.signature {
        return Err(StructureError::IncompatibleSignatures);
    }
    if !embeds(a, b1, f1)? {
        return Err(StructureError::NotAnEmbedding("f1"));
    }
    if !embeds(a, b2, f2)? {
        return Err(StructureError::NotAnEmbedding("f2"));
    }
    let left: Vec<usize> = (0..b1.size).collect();
    let mut right = vec![usize::MAX; b2.size];
    for (x, &y) in f2.iter().enumerate() {
        right[y] = f1[x];
    }
    let mut next = b1.size;
    for slot in right.iter_mut() {
        if *slot == usize::MAX {
            *slot = next;
            next += 1;
        }
    }
    let mut c = FiniteStructure::empty(a.signature.clone(), next);
    for r in 0..a.signature.len() {
        for t in &b1.relations[r] {
            c.relations[r].insert(t.clone());
        }
        for t in &b2.relations[r] {
            c.relations[r].insert(t.iter().map(|&x| right[x]).collect());
        }
    }
    Ok(FreeAmalgam {
        structure: c,
        left,
        right,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn graph(n: usize, edges: &[(usize, usize)]) -> FiniteStructure {
        let mut g = FiniteStructure::empty(RelationalSignature::graph(), n);
        for &(x, y) in edges {
            g.add_symmetric("E", x, y).unwrap();
        }
        g
    }

    fn all_perms(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in all_perms(n - 1) {
            for i in 0..n {
                let mut q = p.clone();
                q.insert(i, n - 1);
                out.push(q);
            }
        }
        out
    }

    fn brute_isomorphic(a: &FiniteStructure, b: &FiniteStructure) -> bool {
        a.size == b.size && all_perms(a.size).iter().any(|p| a.relabel(p) == *b)
    }

    #[test]
    fn identity_is_embedding() {
        let g = graph(3, &[(0, 1), (1, 2)]);
        assert!(is_embedding(&EmbeddingMap::identity(&g)).unwrap());
    }

    #[test]
    fn edge_onto_non_edge_is_not_embedding() {
        let edge = graph(2, &[(0, 1)]);
        let target = graph(3, &[(0, 1)]);
        assert!(!embeds(&edge, &target, &[1, 2]).unwrap());
        assert!(embeds(&edge, &target, &[1, 0]).unwrap());
    }

    #[test]
    fn signature_mismatch_is_an_error() {
        let g = graph(2, &[]);
        let sig = RelationalSignature::new(vec![RelationSymbol::new("F", 2)], None).unwrap();
        let h = FiniteStructure::empty(sig, 2);
        assert_eq!(
            embeds(&g, &h, &[0, 1]),
            Err(StructureError::IncompatibleSignatures)
        );
        assert!(find_isomorphism(&g, &h).is_err());
    }

    #[test]
    fn truncated_family_rejects_out_of_range_members() {
        let sig = RelationalSignature::new(
            vec![RelationSymbol::new("R1", 2), RelationSymbol::new("R2", 2)],
            Some(2),
        )
        .unwrap();
        let mut s = FiniteStructure::empty(sig, 3);
        assert!(matches!(
            s.add_tuple("R3", vec![0, 1]),
            Err(StructureError::BeyondTruncation { index: 3, .. })
        ));
        assert!(matches!(
            s.add_tuple("Q", vec![0, 1]),
            Err(StructureError::UnknownRelation(_))
        ));
        assert!(RelationalSignature::new(vec![RelationSymbol::new("R4", 2)], Some(3)).is_err());
    }

    #[test]
    fn bad_tuples_are_rejected() {
        let mut g = graph(2, &[]);
        assert!(matches!(
            g.add_tuple("E", vec![0]),
            Err(StructureError::ArityMismatch { .. })
        ));
        assert!(matches!(
            g.add_tuple("E", vec![0, 2]),
            Err(StructureError::OutOfDomain { .. })
        ));
        assert!(RelationalSignature::new(
            vec![RelationSymbol::new("E", 2), RelationSymbol::new("E", 1)],
            None
        )
        .is_err());
    }

    #[test]
    fn triangle_versus_relabelled_triangle_and_path() {
        let tri = graph(3, &[(0, 1), (1, 2), (0, 2)]);
        let tri2 = tri.relabel(&[2, 0, 1]);
        let path = graph(3, &[(0, 1), (1, 2)]);
        let iso = find_isomorphism(&tri, &tri2).unwrap().unwrap();
        assert!(iso.is_embedding().unwrap());
        assert!(find_isomorphism(&tri, &path).unwrap().is_none());
        assert_eq!(canonical_code(&tri), canonical_code(&tri2));
        assert_ne!(canonical_code(&tri), canonical_code(&path));
    }

    #[test]
    fn graphs_on_four_vertices_have_eleven_classes() {
        let pairs: Vec<(usize, usize)> = (0..4)
            .flat_map(|x| (x + 1..4).map(move |y| (x, y)))
            .collect();
        let graphs: Vec<FiniteStructure> = (0..64u32)
            .map(|mask| {
                let edges: Vec<_> = pairs
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask >> i & 1 == 1)
                    .map(|(_, &e)| e)
                    .collect();
                graph(4, &edges)
            })
            .collect();
        let codes: BTreeSet<Vec<u8>> = graphs.iter().map(canonical_code).collect();
        assert_eq!(codes.len(), 11);
        // brute-force classification agrees pairwise
        for a in &graphs {
            for b in &graphs {
                assert_eq!(
                    canonical_code(a) == canonical_code(b),
                    brute_isomorphic(a, b)
                );
            }
        }
    }

    #[test]
    fn empty_structure_codes() {
        let e0 = graph(0, &[]);
        let e5 = graph(5, &[]);
        assert_ne!(canonical_code(&e0), canonical_code(&e5));
        let iso = find_isomorphism(&e5, &e5.clone()).unwrap().unwrap();
        assert!(iso.is_embedding().unwrap());
    }

    #[test]
    fn free_amalgam_of_two_edges_over_nothing() {
        let a = graph(0, &[]);
        let e = graph(2, &[(0, 1)]);
        let c = free_amalgam(&a, &e, &e, &[], &[]).unwrap();
        assert_eq!(c.structure.size(), 4);
        assert_eq!(c.structure.tuples(0).len(), 4); // two edges, both orientations
        assert!(!c.structure.holds(0, &[0, 2]));
    }

    #[test]
    fn free_amalgam_over_a_vertex_is_a_path() {
        let a = graph(1, &[]);
        let e = graph(2, &[(0, 1)]);
        let c = free_amalgam(&a, &e, &e, &[0], &[0]).unwrap();
        let path = graph(3, &[(1, 0), (0, 2)]);
        assert!(find_isomorphism(&c.structure, &path).unwrap().is_some());
        assert!(embeds(&e, &c.structure, &c.left).unwrap());
        assert!(embeds(&e, &c.structure, &c.right).unwrap());
    }

    #[test]
    fn free_amalgam_rejects_non_embeddings() {
        let a = graph(2, &[(0, 1)]);
        let b = graph(2, &[]);
        assert_eq!(
            free_amalgam(&a, &a, &b, &[0, 1], &[0, 1]),
            Err(StructureError::NotAnEmbedding("f2"))
        );
    }

    #[test]
    fn json_round_trip() {
        let g = graph(3, &[(0, 1)]);
        let text = serde_json::to_string(&g.to_json()).unwrap();
        let back: StructureJson = serde_json::from_str(&text).unwrap();
        assert_eq!(FiniteStructure::try_from(back).unwrap(), g);
    }
}
