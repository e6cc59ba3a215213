//! Finite diversities stored densely over all subsets, and the diversity
//! amalgam.
//!
//! The amalgam value of a subset is the cheapest connected cover of it by
//! parts that each lie in one of the two sides. [`CoverTable`] computes all
//! those values at once with a dynamic program over the union of a growing
//! cover: every connected family can be listed so that each part meets the
//! union of the earlier ones, and the union only ever grows, so processing
//! unions in increasing bitmask order is enough.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metric::{BaseMap, IntegralMetricSpace, MetricError};

/// Dense storage limit: `2^MAX_POINTS` values.
pub const MAX_POINTS: usize = 12;

const INF: u64 = u64::MAX;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DiversityError {
    #[error("diversity on {0} points exceeds the dense limit of {MAX_POINTS}")]
    TooLarge(usize),
    #[error("value table has {got} entries, expected {expected}")]
    TableSize { got: usize, expected: usize },
    #[error("denominator must be positive")]
    ZeroDenominator,
    #[error("denominators differ ({0} vs {1})")]
    DenominatorMismatch(u64, u64),
    #[error("invalid diversity: {0}")]
    Invalid(DiversityViolation),
    #[error("diversity amalgam requires nonempty base")]
    EmptyBase,
    #[error("base map is malformed: {0}")]
    BadBase(String),
    #[error("base disagreement on subset {subset:?}: left value {left}, right value {right}")]
    BaseDisagreement {
        subset: Vec<usize>,
        left: u64,
        right: u64,
    },
    #[error("target point {0} lies outside the amalgam")]
    TargetOutOfRange(usize),
    #[error("malformed subset key `{0}`")]
    BadKey(String),
    #[error("missing value for subset {0:?}")]
    MissingSubset(Vec<usize>),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

pub type Result<T> = std::result::Result<T, DiversityError>;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DiversityViolation {
    /// `δ(A) = 0` with `|A| ≥ 2`, or `δ(A) ≠ 0` with `|A| ≤ 1`.
    Nondegeneracy { subset: Vec<usize>, value: u64 },
    /// `δ(A ∪ C) > δ(A ∪ B) + δ(B ∪ C)` with `B` nonempty.
    Triangle {
        a: Vec<usize>,
        b: Vec<usize>,
        c: Vec<usize>,
    },
}

impl std::fmt::Display for DiversityViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DiversityViolation::Nondegeneracy { subset, value } => {
                write!(f, "delta({subset:?}) = {value}")
            }
            DiversityViolation::Triangle { a, b, c } => {
                write!(f, "delta(A u C) > delta(A u B) + delta(B u C) for A={a:?} B={b:?} C={c:?}")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiversityReport {
    pub violations: Vec<DiversityViolation>,
}

impl DiversityReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn members(mask: usize) -> Vec<usize> {
    (0..usize::BITS as usize).filter(|i| mask >> i & 1 == 1).collect()
}

pub fn mask_of(points: &[usize]) -> usize {
    points.iter().fold(0, |m, &p| m | 1 << p)
}

/// A set function on the subsets of `0..n`, values are numerators over
/// `denominator`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Diversity {
    n: usize,
    denominator: u64,
    delta: Vec<u64>,
}

impl Diversity {
    /// Shape-checked table indexed by subset bitmask.
    pub fn unchecked(n: usize, delta: Vec<u64>, denominator: u64) -> Result<Self> {
        if n > MAX_POINTS {
            return Err(DiversityError::TooLarge(n));
        }
        if delta.len() != 1 << n {
            return Err(DiversityError::TableSize {
                got: delta.len(),
                expected: 1 << n,
            });
        }
        if denominator == 0 {
            return Err(DiversityError::ZeroDenominator);
        }
        Ok(Self { n, denominator, delta })
    }

    pub fn new(n: usize, delta: Vec<u64>) -> Result<Self> {
        let d = Self::unchecked(n, delta, 1)?;
        if let Some(v) = validate_diversity(&d).violations.into_iter().next() {
            return Err(DiversityError::Invalid(v));
        }
        Ok(d)
    }

    pub fn from_fn(n: usize, f: impl Fn(usize) -> u64) -> Result<Self> {
        if n > MAX_POINTS {
            return Err(DiversityError::TooLarge(n));
        }
        Self::new(n, (0..1usize << n).map(f).collect())
    }

    /// The diameter diversity `δ(A) = max d(x, y)` over pairs in `A`.
    pub fn diameter_of(space: &IntegralMetricSpace) -> Result<Self> {
        let n = space.len();
        if n > MAX_POINTS {
            return Err(DiversityError::TooLarge(n));
        }
        let delta = (0..1usize << n)
            .map(|mask| {
                let pts = members(mask);
                pts.iter()
                    .flat_map(|&x| pts.iter().map(move |&y| (x, y)))
                    .map(|(x, y)| space.d(x, y))
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        Self::unchecked(n, delta, space.denominator())
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn denominator(&self) -> u64 {
        self.denominator
    }

    pub fn value(&self, mask: usize) -> u64 {
        self.delta[mask]
    }

    pub fn value_of(&self, points: &[usize]) -> u64 {
        self.delta[mask_of(points)]
    }

    pub fn table(&self) -> &[u64] {
        &self.delta
    }

    pub fn max_value(&self) -> u64 {
        self.delta.iter().copied().max().unwrap_or(0)
    }

    /// Restriction to `points`, relabelled so `points[i]` becomes `i`.
    pub fn restrict(&self, points: &[usize]) -> Self {
        let k = points.len();
        let delta = (0..1usize << k)
            .map(|m| {
                let orig = (0..k).filter(|i| m >> i & 1 == 1).fold(0, |acc, i| acc | 1 << points[i]);
                self.delta[orig]
            })
            .collect();
        Self {
            n: k,
            denominator: self.denominator,
            delta,
        }
    }

    /// Truncates every value at `cap`.
    pub fn capped(&self, cap: u64) -> Self {
        Self {
            n: self.n,
            denominator: self.denominator,
            delta: self.delta.iter().map(|&v| v.min(cap)).collect(),
        }
    }

    pub fn to_json(&self) -> DiversityJson {
        let delta = (0..1usize << self.n)
            .filter(|m| m.count_ones() >= 2)
            .map(|m| (subset_key(&members(m)), self.delta[m]))
            .collect();
        DiversityJson {
            size: self.n,
            denominator: self.denominator,
            delta,
        }
    }
}

pub fn subset_key(points: &[usize]) -> String {
    points
        .iter()
        .map(|p| p.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// Wire format: `{"size": n, "denominator": q, "delta": {"0,1": v, ...}}`.
/// Subsets of size at most one may be omitted (they default to 0).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiversityJson {
    pub size: usize,
    #[serde(default = "one")]
    pub denominator: u64,
    pub delta: BTreeMap<String, u64>,
}

fn one() -> u64 {
    1
}

impl DiversityJson {
    pub fn into_unchecked(self) -> Result<Diversity> {
        if self.size > MAX_POINTS {
            return Err(DiversityError::TooLarge(self.size));
        }
        let mut delta = vec![0u64; 1 << self.size];
        let mut seen = vec![false; 1 << self.size];
        for (key, value) in &self.delta {
            let mut mask = 0usize;
            if !key.is_empty() {
                for part in key.split(',') {
                    let p: usize = part
                        .trim()
                        .parse()
                        .map_err(|_| DiversityError::BadKey(key.clone()))?;
                    if p >= self.size || mask >> p & 1 == 1 {
                        return Err(DiversityError::BadKey(key.clone()));
                    }
                    mask |= 1 << p;
                }
            }
            delta[mask] = *value;
            seen[mask] = true;
        }
        if let Some(m) = (0..1usize << self.size).find(|&m| m.count_ones() >= 2 && !seen[m]) {
            return Err(DiversityError::MissingSubset(members(m)));
        }
        Diversity::unchecked(self.size, delta, self.denominator)
    }

    pub fn into_diversity(self) -> Result<Diversity> {
        let d = self.into_unchecked()?;
        if let Some(v) = validate_diversity(&d).violations.into_iter().next() {
            return Err(DiversityError::Invalid(v));
        }
        Ok(d)
    }
}

/// Lists every axiom violation.
///
/// Triangle violations are searched with singleton pivots `B = {b}`: if all
/// of those hold (together with nondegeneracy) then δ is monotone, and the
/// inequality for a general nonempty `B ∋ b` follows from the one for `{b}`.
/// So the report is empty exactly when δ is a diversity.
pub fn validate_diversity(d: &Diversity) -> DiversityReport {
    let n = d.n;
    let full = 1usize << n;
    let mut violations = Vec::new();
    for mask in 0..full {
        let small = mask.count_ones() <= 1;
        if small != (d.delta[mask] == 0) {
            violations.push(DiversityViolation::Nondegeneracy {
                subset: members(mask),
                value: d.delta[mask],
            });
        }
    }
    for b in 0..n {
        let bit = 1 << b;
        for a in 0..full {
            let ab = d.delta[a | bit];
            for c in 0..full {
                if d.delta[a | c] > ab + d.delta[bit | c] {
                    violations.push(DiversityViolation::Triangle {
                        a: members(a),
                        b: vec![b],
                        c: members(c),
                    });
                }
            }
        }
    }
    DiversityReport { violations }
}

/// `d(x, y) = δ({x, y})`.
pub fn induced_metric(d: &Diversity) -> Result<IntegralMetricSpace> {
    let n = d.n;
    let rows = (0..n)
        .map(|x| {
            (0..n)
                .map(|y| if x == y { 0 } else { d.delta[1 << x | 1 << y] })
                .collect()
        })
        .collect();
    Ok(IntegralMetricSpace::scaled(rows, d.denominator)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

/// A connected family of parts, each inside one side of an amalgam.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConnectedCover {
    /// Parts in amalgam labels.
    pub parts: Vec<(Vec<usize>, Side)>,
    pub cost: u64,
}

impl ConnectedCover {
    pub fn union(&self) -> Vec<usize> {
        let mut pts: Vec<usize> = self.parts.iter().flat_map(|(p, _)| p.iter().copied()).collect();
        pts.sort_unstable();
        pts.dedup();
        pts
    }

    /// Intersection graph of the parts is connected.
    pub fn is_connected(&self) -> bool {
        let masks: Vec<usize> = self.parts.iter().map(|(p, _)| mask_of(p)).collect();
        parts_connected(&masks)
    }
}

pub fn parts_connected(masks: &[usize]) -> bool {
    if masks.is_empty() {
        return true;
    }
    let mut reached = vec![false; masks.len()];
    reached[0] = true;
    let mut union = masks[0];
    let mut changed = true;
    while changed {
        changed = false;
        for (i, &m) in masks.iter().enumerate() {
            if !reached[i] && m & union != 0 {
                reached[i] = true;
                union |= m;
                changed = true;
            }
        }
    }
    reached.into_iter().all(|r| r)
}

/// The amalgam instance in amalgam labels: left points keep `0..n1`,
/// non-base right points follow.
#[derive(Debug, Clone)]
struct Layout {
    n: usize,
    left_mask: usize,
    right: Vec<usize>,
}

fn layout(d1: &Diversity, d2: &Diversity, base: &BaseMap) -> Result<Layout> {
    if base.is_empty() {
        return Err(DiversityError::EmptyBase);
    }
    if d1.denominator != d2.denominator {
        return Err(DiversityError::DenominatorMismatch(d1.denominator, d2.denominator));
    }
    base.check(d1.n, d2.n).map_err(DiversityError::BadBase)?;
    let m = base.len();
    for sub in 0..1usize << m {
        let idx = members(sub);
        let left: Vec<usize> = idx.iter().map(|&i| base.left[i]).collect();
        let right: Vec<usize> = idx.iter().map(|&i| base.right[i]).collect();
        let (l, r) = (d1.value_of(&left), d2.value_of(&right));
        if l != r {
            return Err(DiversityError::BaseDisagreement {
                subset: idx,
                left: l,
                right: r,
            });
        }
    }
    let n = d1.n + d2.n - m;
    if n > MAX_POINTS {
        return Err(DiversityError::TooLarge(n));
    }
    let right = base.right_embedding(d1.n, d2.n);
    Ok(Layout {
        n,
        left_mask: (1 << d1.n) - 1,
        right,
    })
}

/// Minimal connected-cover costs for every subset of an amalgam, with the
/// information needed to rebuild an optimal cover.
#[derive(Debug, Clone)]
pub struct CoverTable {
    n: usize,
    /// cheapest connected cover whose union is exactly the mask
    exact: Vec<u64>,
    parent: Vec<Option<(usize, usize, Side)>>,
    /// cheapest connected cover whose union contains the mask
    value: Vec<u64>,
    best_union: Vec<usize>,
    right: Vec<usize>,
}

impl CoverTable {
    pub fn build(d1: &Diversity, d2: &Diversity, base: &BaseMap) -> Result<Self> {
        let lay = layout(d1, d2, base)?;
        let n = lay.n;
        let full = 1usize << n;
        // parts of size >= 2 on each side, in amalgam labels
        let mut parts: Vec<(usize, u64, Side)> = Vec::new();
        for m in 0..1usize << d1.n {
            if m.count_ones() >= 2 {
                parts.push((m, d1.delta[m], Side::Left));
            }
        }
        for m in 0..1usize << d2.n {
            if m.count_ones() >= 2 {
                let amask = members(m).iter().fold(0, |acc, &x| acc | 1 << lay.right[x]);
                parts.push((amask, d2.delta[m], Side::Right));
            }
        }
        let mut exact = vec![INF; full];
        let mut parent: Vec<Option<(usize, usize, Side)>> = vec![None; full];
        exact[0] = 0;
        for x in 0..n {
            exact[1 << x] = 0;
            let side = if lay.left_mask >> x & 1 == 1 { Side::Left } else { Side::Right };
            parent[1 << x] = Some((0, 1 << x, side));
        }
        for &(m, cost, side) in &parts {
            if cost < exact[m] {
                exact[m] = cost;
                parent[m] = Some((0, m, side));
            }
        }
        for u in 1..full {
            let base_cost = exact[u];
            if base_cost == INF {
                continue;
            }
            for &(m, cost, side) in &parts {
                if m & u == 0 || m & !u == 0 {
                    continue;
                }
                let next = u | m;
                let c = base_cost + cost;
                if c < exact[next] {
                    exact[next] = c;
                    parent[next] = Some((u, m, side));
                }
            }
        }
        // value[A] = min over unions U ⊇ A; ties go to the smallest mask
        let mut value = exact.clone();
        let mut best_union: Vec<usize> = (0..full).collect();
        for bit in 0..n {
            for a in (0..full).rev() {
                if a >> bit & 1 == 0 {
                    let sup = a | 1 << bit;
                    if value[sup] < value[a] || (value[sup] == value[a] && best_union[sup] < best_union[a]) {
                        value[a] = value[sup];
                        best_union[a] = best_union[sup];
                    }
                }
            }
        }
        Ok(Self {
            n,
            exact,
            parent,
            value,
            best_union,
            right: lay.right,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn value(&self, mask: usize) -> u64 {
        self.value[mask]
    }

    pub fn right_embedding(&self) -> &[usize] {
        &self.right
    }

    /// An optimal cover of `target` (amalgam labels).
    pub fn cover(&self, target: usize) -> ConnectedCover {
        let mut union = self.best_union[target];
        let cost = self.value[target];
        debug_assert_eq!(self.exact[union], cost);
        let mut parts = Vec::new();
        if union == 0 {
            return ConnectedCover { parts, cost: 0 };
        }
        while let Some((prev, part, side)) = self.parent[union] {
            parts.push((members(part), side));
            if prev == 0 {
                break;
            }
            union = prev;
        }
        parts.reverse();
        ConnectedCover { parts, cost }
    }
}

/// The diversity amalgam and the embeddings of both sides.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiversityAmalgam {
    pub diversity: Diversity,
    pub left: Vec<usize>,
    pub right: Vec<usize>,
}

pub fn diversity_amalgam(d1: &Diversity, d2: &Diversity, base: &BaseMap) -> Result<DiversityAmalgam> {
    let table = CoverTable::build(d1, d2, base)?;
    Ok(DiversityAmalgam {
        diversity: Diversity {
            n: table.n,
            denominator: d1.denominator,
            delta: table.value.clone(),
        },
        left: (0..d1.n).collect(),
        right: table.right,
    })
}

/// Cheapest connected cover of `target` (amalgam labels: left points
/// `0..n1`, then the non-base right points in order).
pub fn min_connected_cover(target: &[usize], d1: &Diversity, d2: &Diversity, base: &BaseMap) -> Result<ConnectedCover> {
    let table = CoverTable::build(d1, d2, base)?;
    if let Some(&p) = target.iter().find(|&&p| p >= table.n) {
        return Err(DiversityError::TargetOutOfRange(p));
    }
    let mask = mask_of(target);
    if mask.count_ones() <= 1 {
        let side = if target.iter().all(|&p| p < d1.n) { Side::Left } else { Side::Right };
        return Ok(ConnectedCover {
            parts: vec![(target.to_vec(), side)],
            cost: 0,
        });
    }
    Ok(table.cover(mask))
}
