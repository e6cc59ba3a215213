//! Integral metric spaces, the metric amalgam over a nonempty base and the
//! disjoint amalgam, plus the two forbidden configurations (small odd
//! perimeters, unit simplices).
//!
//! Distances are stored as integer numerators over a common
//! `denominator`; with denominator 1 the space is integral in the usual
//! sense. The forbidden-configuration predicates only make sense for
//! integral spaces and reject anything else.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::structure::{FiniteStructure, RelationSymbol, RelationalSignature, StructureError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("distance table is not square: row {row} has {len} entries, expected {expected}")]
    NotSquare {
        row: usize,
        len: usize,
        expected: usize,
    },
    #[error("invalid metric: {0}")]
    Invalid(MetricViolation),
    #[error("denominator must be positive")]
    ZeroDenominator,
    #[error("denominators differ ({0} vs {1})")]
    DenominatorMismatch(u64, u64),
    #[error("operation requires an integral space (denominator 1), got denominator {0}")]
    NotIntegral(u64),
    #[error("metric amalgam requires nonempty base")]
    EmptyBase,
    #[error("base map is malformed: {0}")]
    BadBase(String),
    #[error("base disagreement on pair ({i}, {j}): left distance {left}, right distance {right}")]
    BaseDisagreement {
        i: usize,
        j: usize,
        left: u64,
        right: u64,
    },
    #[error("disjoint amalgam requires nonempty inputs")]
    EmptyInput,
    #[error("odd perimeter bound must be at least 1, got {0}")]
    BadPerimeterBound(u64),
    #[error("simplex order must be at least 3, got {0}")]
    BadSimplexOrder(usize),
    #[error("diameter bound must be at least 1")]
    BadDiameterBound,
    #[error("class parameters need at least one of the odd-perimeter and simplex bounds")]
    NoForbiddenConfiguration,
    #[error("distance {distance} between {x} and {y} exceeds truncation {truncation}")]
    BeyondTruncation {
        x: usize,
        y: usize,
        distance: u64,
        truncation: u64,
    },
    #[error("structure is not a metric: {0}")]
    NotAMetricStructure(String),
    #[error(transparent)]
    Structure(#[from] StructureError),
}

pub type Result<T> = std::result::Result<T, MetricError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MetricViolation {
    NonzeroDiagonal { x: usize, value: u64 },
    Asymmetric { x: usize, y: usize },
    ZeroDistance { x: usize, y: usize },
    /// `d(x, z) > d(x, y) + d(y, z)`
    Triangle { x: usize, y: usize, z: usize },
}

impl std::fmt::Display for MetricViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MetricViolation::NonzeroDiagonal { x, value } => write!(f, "d({x},{x}) = {value}"),
            MetricViolation::Asymmetric { x, y } => write!(f, "d({x},{y}) != d({y},{x})"),
            MetricViolation::ZeroDistance { x, y } => write!(f, "d({x},{y}) = 0 for distinct points"),
            MetricViolation::Triangle { x, y, z } => {
                write!(f, "d({x},{z}) > d({x},{y}) + d({y},{z})")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricReport {
    pub violations: Vec<MetricViolation>,
}

impl MetricReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct IntegralMetricSpace {
    dist: Vec<Vec<u64>>,
    denominator: u64,
}

impl IntegralMetricSpace {
    /// Builds a validated integral space (denominator 1).
    pub fn from_rows(rows: Vec<Vec<u64>>) -> Result<Self> {
        Self::scaled(rows, 1)
    }

    /// Builds a validated space whose distances are `rows[i][j] / denominator`.
    pub fn scaled(rows: Vec<Vec<u64>>, denominator: u64) -> Result<Self> {
        let space = Self::unchecked(rows, denominator)?;
        if let Some(&v) = validate_metric(&space).violations.first() {
            return Err(MetricError::Invalid(v));
        }
        Ok(space)
    }

    /// Only checks the table shape; use [`validate_metric`] for the axioms.
    pub fn unchecked(rows: Vec<Vec<u64>>, denominator: u64) -> Result<Self> {
        if denominator == 0 {
            return Err(MetricError::ZeroDenominator);
        }
        let n = rows.len();
        for (row, r) in rows.iter().enumerate() {
            if r.len() != n {
                return Err(MetricError::NotSquare {
                    row,
                    len: r.len(),
                    expected: n,
                });
            }
        }
        Ok(Self {
            dist: rows,
            denominator,
        })
    }

    pub fn single_point() -> Self {
        Self {
            dist: vec![vec![0]],
            denominator: 1,
        }
    }

    pub fn len(&self) -> usize {
        self.dist.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dist.is_empty()
    }

    pub fn denominator(&self) -> u64 {
        self.denominator
    }

    pub fn d(&self, x: usize, y: usize) -> u64 {
        self.dist[x][y]
    }

    pub fn rows(&self) -> &[Vec<u64>] {
        &self.dist
    }

    /// Largest distance; 0 for spaces with at most one point.
    pub fn diameter(&self) -> u64 {
        self.dist
            .iter()
            .flat_map(|r| r.iter().copied())
            .max()
            .unwrap_or(0)
    }

    pub fn restrict(&self, points: &[usize]) -> Self {
        let dist = points
            .iter()
            .map(|&x| points.iter().map(|&y| self.dist[x][y]).collect())
            .collect();
        Self {
            dist,
            denominator: self.denominator,
        }
    }

    /// Truncates every distance at `cap`.
    pub fn capped(&self, cap: u64) -> Self {
        let dist = self
            .dist
            .iter()
            .map(|r| r.iter().map(|&d| d.min(cap)).collect())
            .collect();
        Self {
            dist,
            denominator: self.denominator,
        }
    }

    /// Relational view with binary relations `R1..R{truncation}`.
    pub fn to_structure(&self, truncation: u64) -> Result<FiniteStructure> {
        self.require_integral()?;
        let signature = distance_signature(truncation);
        let mut s = FiniteStructure::empty(signature, self.len());
        for x in 0..self.len() {
            for y in 0..self.len() {
                if x == y {
                    continue;
                }
                let d = self.dist[x][y];
                if d > truncation {
                    return Err(MetricError::BeyondTruncation {
                        x,
                        y,
                        distance: d,
                        truncation,
                    });
                }
                s.add_tuple(&format!("R{d}"), vec![x, y])?;
            }
        }
        Ok(s)
    }

    /// Inverse of [`IntegralMetricSpace::to_structure`]; fails when some
    /// pair carries no or several distance relations.
    pub fn from_structure(s: &FiniteStructure) -> Result<Self> {
        let n = s.size();
        let mut dist = vec![vec![0u64; n]; n];
        for (r, sym) in s.signature().relations().iter().enumerate() {
            let value = sym
                .family_index()
                .filter(|_| sym.arity == 2 && sym.name.starts_with('R'))
                .ok_or_else(|| {
                    MetricError::NotAMetricStructure(format!("unexpected relation {}", sym.name))
                })? as u64;
            for t in s.tuples(r) {
                let (x, y) = (t[0], t[1]);
                if x == y || dist[x][y] != 0 {
                    return Err(MetricError::NotAMetricStructure(format!(
                        "pair ({x}, {y}) has a loop or several distances"
                    )));
                }
                dist[x][y] = value;
            }
        }
        for x in 0..n {
            for y in 0..n {
                if x != y && dist[x][y] == 0 {
                    return Err(MetricError::NotAMetricStructure(format!(
                        "pair ({x}, {y}) has no distance"
                    )));
                }
            }
        }
        Self::from_rows(dist)
    }

    fn require_integral(&self) -> Result<()> {
        if self.denominator != 1 {
            return Err(MetricError::NotIntegral(self.denominator));
        }
        Ok(())
    }

    pub fn to_json(&self) -> MetricJson {
        MetricJson {
            size: self.len(),
            denominator: self.denominator,
            dist: self.dist.clone(),
        }
    }
}

pub fn distance_signature(truncation: u64) -> RelationalSignature {
    let relations = (1..=truncation)
        .map(|d| RelationSymbol::new(format!("R{d}"), 2))
        .collect();
    RelationalSignature::new(relations, Some(truncation as usize)).expect("distinct names")
}

/// Wire format: `{"size": n, "denominator": q, "dist": [[...]]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricJson {
    pub size: usize,
    #[serde(default = "one")]
    pub denominator: u64,
    pub dist: Vec<Vec<u64>>,
}

fn one() -> u64 {
    1
}

impl MetricJson {
    /// Shape-checked but not axiom-checked.
    pub fn into_unchecked(self) -> Result<IntegralMetricSpace> {
        if self.dist.len() != self.size {
            return Err(MetricError::NotSquare {
                row: self.dist.len(),
                len: self.dist.len(),
                expected: self.size,
            });
        }
        IntegralMetricSpace::unchecked(self.dist, self.denominator)
    }

    pub fn into_space(self) -> Result<IntegralMetricSpace> {
        let space = self.into_unchecked()?;
        IntegralMetricSpace::scaled(space.dist, space.denominator)
    }
}

/// Lists every violated metric axiom. Triangle violations are reported once
/// per unordered pair `{x, z}` and pivot `y`.
pub fn validate_metric(space: &IntegralMetricSpace) -> MetricReport {
    let n = space.len();
    let d = &space.dist;
    let mut violations = Vec::new();
    for x in 0..n {
        if d[x][x] != 0 {
            violations.push(MetricViolation::NonzeroDiagonal { x, value: d[x][x] });
        }
        for y in x + 1..n {
            if d[x][y] != d[y][x] {
                violations.push(MetricViolation::Asymmetric { x, y });
            }
            if d[x][y] == 0 || d[y][x] == 0 {
                violations.push(MetricViolation::ZeroDistance { x, y });
            }
        }
    }
    for x in 0..n {
        for z in x + 1..n {
            for y in 0..n {
                if y == x || y == z {
                    continue;
                }
                if d[x][z] > d[x][y] + d[y][z] || d[z][x] > d[z][y] + d[y][x] {
                    violations.push(MetricViolation::Triangle { x, y, z });
                }
            }
        }
    }
    MetricReport { violations }
}

/// First triple (in lexicographic order) of distinct points whose perimeter
/// is odd and at most `p`.
pub fn odd_perimeter_witness(space: &IntegralMetricSpace, p: u64) -> Result<Option<(usize, usize, usize)>> {
    if p < 1 {
        return Err(MetricError::BadPerimeterBound(p));
    }
    space.require_integral()?;
    let n = space.len();
    for x in 0..n {
        for y in x + 1..n {
            for z in y + 1..n {
                let perimeter = space.d(x, y) + space.d(y, z) + space.d(z, x);
                if perimeter % 2 == 1 && perimeter <= p {
                    return Ok(Some((x, y, z)));
                }
            }
        }
    }
    Ok(None)
}

/// `r` points lying pairwise at distance 1, if any.
pub fn unit_simplex_witness(space: &IntegralMetricSpace, r: usize) -> Result<Option<Vec<usize>>> {
    if r < 3 {
        return Err(MetricError::BadSimplexOrder(r));
    }
    space.require_integral()?;
    let n = space.len();
    let unit: Vec<Vec<bool>> = (0..n)
        .map(|x| (0..n).map(|y| x != y && space.d(x, y) == 1).collect())
        .collect();
    let mut clique = Vec::with_capacity(r);
    fn extend(unit: &[Vec<bool>], r: usize, start: usize, clique: &mut Vec<usize>) -> bool {
        if clique.len() == r {
            return true;
        }
        for v in start..unit.len() {
            if clique.iter().all(|&u| unit[u][v]) {
                clique.push(v);
                if extend(unit, r, v + 1, clique) {
                    return true;
                }
                clique.pop();
            }
        }
        false
    }
    Ok(extend(&unit, r, 0, &mut clique).then_some(clique))
}

/// Identification of an abstract base `0..m` with points of two spaces:
/// base point `i` is `left[i]` in the first space and `right[i]` in the
/// second.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BaseMap {
    pub left: Vec<usize>,
    pub right: Vec<usize>,
}

impl BaseMap {
    pub fn new(left: Vec<usize>, right: Vec<usize>) -> Self {
        Self { left, right }
    }

    pub fn len(&self) -> usize {
        self.left.len()
    }

    pub fn is_empty(&self) -> bool {
        self.left.is_empty()
    }

    /// Checks lengths, ranges and injectivity against side sizes.
    pub fn check(&self, n1: usize, n2: usize) -> std::result::Result<(), String> {
        if self.left.len() != self.right.len() {
            return Err(format!(
                "left has {} entries, right has {}",
                self.left.len(),
                self.right.len()
            ));
        }
        for (side, map, n) in [("left", &self.left, n1), ("right", &self.right, n2)] {
            let mut seen = vec![false; n];
            for &x in map.iter() {
                if x >= n {
                    return Err(format!("{side} entry {x} out of range 0..{n}"));
                }
                if std::mem::replace(&mut seen[x], true) {
                    return Err(format!("{side} entry {x} repeated"));
                }
            }
        }
        Ok(())
    }

    /// Amalgam labels for the points of the second side: base points go to
    /// their first-side label, the others follow `0..n1` in order.
    pub fn right_embedding(&self, n1: usize, n2: usize) -> Vec<usize> {
        let mut right = vec![usize::MAX; n2];
        for (i, &y) in self.right.iter().enumerate() {
            right[y] = self.left[i];
        }
        let mut next = n1;
        for slot in right.iter_mut() {
            if *slot == usize::MAX {
                *slot = next;
                next += 1;
            }
        }
        right
    }
}

/// An amalgam together with the embeddings of both sides into it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MetricAmalgam {
    pub space: IntegralMetricSpace,
    pub left: Vec<usize>,
    pub right: Vec<usize>,
}

/// Glues `x1` and `x2` along `base`; a cross distance is the shortest
/// route through a base point.
pub fn metric_amalgam(x1: &IntegralMetricSpace, x2: &IntegralMetricSpace, base: &BaseMap) -> Result<MetricAmalgam> {
    if base.is_empty() {
        return Err(MetricError::EmptyBase);
    }
    if x1.denominator != x2.denominator {
        return Err(MetricError::DenominatorMismatch(x1.denominator, x2.denominator));
    }
    base.check(x1.len(), x2.len()).map_err(MetricError::BadBase)?;
    for i in 0..base.len() {
        for j in i + 1..base.len() {
            let left = x1.d(base.left[i], base.left[j]);
            let right = x2.d(base.right[i], base.right[j]);
            if left != right {
                return Err(MetricError::BaseDisagreement { i, j, left, right });
            }
        }
    }
    let (n1, n2) = (x1.len(), x2.len());
    let right = base.right_embedding(n1, n2);
    let n = n1 + n2 - base.len();
    let mut dist = vec![vec![0u64; n]; n];
    for a in 0..n1 {
        for b in 0..n1 {
            dist[a][b] = x1.d(a, b);
        }
    }
    for a in 0..n2 {
        for b in 0..n2 {
            dist[right[a]][right[b]] = x2.d(a, b);
        }
    }
    let in_base: Vec<bool> = {
        let mut v = vec![false; n2];
        for &y in &base.right {
            v[y] = true;
        }
        v
    };
    let left_off: Vec<usize> = (0..n1).filter(|a| !base.left.contains(a)).collect();
    for &a in &left_off {
        for b in (0..n2).filter(|&b| !in_base[b]) {
            let d = (0..base.len())
                .map(|i| x1.d(a, base.left[i]) + x2.d(base.right[i], b))
                .min()
                .expect("nonempty base");
            dist[a][right[b]] = d;
            dist[right[b]][a] = d;
        }
    }
    Ok(MetricAmalgam {
        space: IntegralMetricSpace {
            dist,
            denominator: x1.denominator,
        },
        left: (0..n1).collect(),
        right,
    })
}

/// Disjoint union with every cross distance `max(p, diam x1, diam x2)`;
/// `p` defaults to one unit.
pub fn disjoint_amalgam(x1: &IntegralMetricSpace, x2: &IntegralMetricSpace, p: Option<u64>) -> Result<MetricAmalgam> {
    if x1.is_empty() || x2.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    if x1.denominator != x2.denominator {
        return Err(MetricError::DenominatorMismatch(x1.denominator, x2.denominator));
    }
    let p = p.unwrap_or(x1.denominator);
    if p < 1 {
        return Err(MetricError::BadPerimeterBound(p));
    }
    let cross = p.max(x1.diameter()).max(x2.diameter());
    let (n1, n2) = (x1.len(), x2.len());
    let n = n1 + n2;
    let mut dist = vec![vec![cross; n]; n];
    for a in 0..n1 {
        for b in 0..n1 {
            dist[a][b] = x1.d(a, b);
        }
    }
    for a in 0..n2 {
        for b in 0..n2 {
            dist[n1 + a][n1 + b] = x2.d(a, b);
        }
    }
    Ok(MetricAmalgam {
        space: IntegralMetricSpace {
            dist,
            denominator: x1.denominator,
        },
        left: (0..n1).collect(),
        right: (n1..n).collect(),
    })
}

/// Parameters of a class of integral metric spaces defined by forbidden
/// configurations and an optional diameter bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MetricClassParams {
    pub odd_perimeter_bound: Option<u64>,
    pub simplex_order: Option<usize>,
    pub diameter_bound: Option<u64>,
}

impl MetricClassParams {
    pub fn new(odd_perimeter_bound: Option<u64>, simplex_order: Option<usize>, diameter_bound: Option<u64>) -> Result<Self> {
        if odd_perimeter_bound.is_none() && simplex_order.is_none() {
            return Err(MetricError::NoForbiddenConfiguration);
        }
        if let Some(p) = odd_perimeter_bound {
            if p < 1 {
                return Err(MetricError::BadPerimeterBound(p));
            }
        }
        if let Some(r) = simplex_order {
            if r < 3 {
                return Err(MetricError::BadSimplexOrder(r));
            }
        }
        if diameter_bound == Some(0) {
            return Err(MetricError::BadDiameterBound);
        }
        Ok(Self {
            odd_perimeter_bound,
            simplex_order,
            diameter_bound,
        })
    }

    /// Membership of a (valid, integral) space.
    pub fn admits(&self, space: &IntegralMetricSpace) -> Result<bool> {
        if let Some(d) = self.diameter_bound {
            if space.diameter() > d {
                return Ok(false);
            }
        }
        if let Some(p) = self.odd_perimeter_bound {
            if odd_perimeter_witness(space, p)?.is_some() {
                return Ok(false);
            }
        }
        if let Some(r) = self.simplex_order {
            if unit_simplex_witness(space, r)?.is_some() {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn space(rows: Vec<Vec<u64>>) -> IntegralMetricSpace {
        IntegralMetricSpace::from_rows(rows).unwrap()
    }

    fn triangle(a: u64, b: u64, c: u64) -> IntegralMetricSpace {
        // d(0,1)=a, d(1,2)=b, d(0,2)=c
        space(vec![vec![0, a, c], vec![a, 0, b], vec![c, b, 0]])
    }

    #[test]
    fn unit_triangle_is_valid() {
        let t = IntegralMetricSpace::unchecked(vec![vec![0, 1, 1], vec![1, 0, 1], vec![1, 1, 0]], 1).unwrap();
        assert!(validate_metric(&t).is_valid());
    }

    #[test]
    fn triangle_violation_has_witness() {
        let t = IntegralMetricSpace::unchecked(vec![vec![0, 1, 3], vec![1, 0, 1], vec![3, 1, 0]], 1).unwrap();
        let report = validate_metric(&t);
        assert_eq!(report.violations, vec![MetricViolation::Triangle { x: 0, y: 1, z: 2 }]);
    }

    #[test]
    fn other_violations_are_listed() {
        let t = IntegralMetricSpace::unchecked(vec![vec![1, 0], vec![2, 0]], 1).unwrap();
        let v = validate_metric(&t).violations;
        assert!(v.contains(&MetricViolation::NonzeroDiagonal { x: 0, value: 1 }));
        assert!(v.contains(&MetricViolation::Asymmetric { x: 0, y: 1 }));
        assert!(v.contains(&MetricViolation::ZeroDistance { x: 0, y: 1 }));
        assert!(matches!(
            IntegralMetricSpace::unchecked(vec![vec![0, 1]], 1),
            Err(MetricError::NotSquare { .. })
        ));
    }

    fn oracle_valid(d: &[Vec<u64>]) -> bool {
        let n = d.len();
        for x in 0..n {
            for y in 0..n {
                if d[x][y] != d[y][x] || ((x == y) != (d[x][y] == 0)) {
                    return false;
                }
                for z in 0..n {
                    if d[x][z] > d[x][y] + d[y][z] {
                        return false;
                    }
                }
            }
        }
        true
    }

    proptest! {
        #[test]
        fn validation_matches_triple_loop(entries in proptest::collection::vec(0u64..5, 25)) {
            let rows: Vec<Vec<u64>> = entries.chunks(5).map(|c| c.to_vec()).collect();
            let s = IntegralMetricSpace::unchecked(rows.clone(), 1).unwrap();
            prop_assert_eq!(validate_metric(&s).is_valid(), oracle_valid(&rows));
        }

        #[test]
        fn symmetric_tables_match_triple_loop(entries in proptest::collection::vec(1u64..5, 10)) {
            let mut rows = vec![vec![0u64; 5]; 5];
            let mut it = entries.into_iter();
            for x in 0..5 { for y in x+1..5 { let v = it.next().unwrap(); rows[x][y] = v; rows[y][x] = v; } }
            let s = IntegralMetricSpace::unchecked(rows.clone(), 1).unwrap();
            prop_assert_eq!(validate_metric(&s).is_valid(), oracle_valid(&rows));
        }
    }

    #[test]
    fn odd_perimeter_examples() {
        assert_eq!(odd_perimeter_witness(&triangle(1, 1, 1), 3).unwrap(), Some((0, 1, 2)));
        assert_eq!(odd_perimeter_witness(&triangle(2, 2, 2), 5).unwrap(), None);
        assert_eq!(odd_perimeter_witness(&triangle(1, 2, 2), 5).unwrap(), Some((0, 1, 2)));
        assert_eq!(odd_perimeter_witness(&triangle(1, 2, 2), 4).unwrap(), None);
        assert!(matches!(
            odd_perimeter_witness(&triangle(1, 1, 1), 0),
            Err(MetricError::BadPerimeterBound(0))
        ));
    }

    #[test]
    fn unit_simplex_examples() {
        assert_eq!(unit_simplex_witness(&triangle(1, 1, 1), 3).unwrap().map(|w| w.len()), Some(3));
        let mut rows = vec![vec![1u64; 4]; 4];
        for (x, row) in rows.iter_mut().enumerate() {
            row[x] = 0;
        }
        rows[0][3] = 2;
        rows[3][0] = 2;
        assert_eq!(unit_simplex_witness(&space(rows), 4).unwrap(), None);
        assert!(unit_simplex_witness(&triangle(1, 1, 1), 2).is_err());
    }

    proptest! {
        #[test]
        fn unit_simplex_matches_subset_scan(bits in proptest::collection::vec(any::<bool>(), 15), r in 3usize..5) {
            // distances in {1, 2} always form a metric
            let mut rows = vec![vec![0u64; 6]; 6];
            let mut it = bits.into_iter();
            for x in 0..6 { for y in x+1..6 { let v = if it.next().unwrap() {1} else {2}; rows[x][y]=v; rows[y][x]=v; } }
            let s = space(rows.clone());
            let found = unit_simplex_witness(&s, r).unwrap();
            let oracle = (0u32..64).filter(|m| m.count_ones() as usize == r).any(|m| {
                let pts: Vec<usize> = (0..6).filter(|i| m >> i & 1 == 1).collect();
                pts.iter().all(|&a| pts.iter().all(|&b| a == b || rows[a][b] == 1))
            });
            prop_assert_eq!(found.is_some(), oracle);
            if let Some(w) = found {
                prop_assert!(w.iter().all(|&a| w.iter().all(|&b| a == b || rows[a][b] == 1)));
            }
        }
    }

    #[test]
    fn amalgam_over_single_point() {
        let x1 = space(vec![vec![0, 2], vec![2, 0]]); // y=0, a=1
        let x2 = space(vec![vec![0, 3], vec![3, 0]]); // y=0, b=1
        let am = metric_amalgam(&x1, &x2, &BaseMap::new(vec![0], vec![0])).unwrap();
        assert_eq!(am.space.d(1, 2), 5);
        assert!(validate_metric(&am.space).is_valid());
    }

    #[test]
    fn amalgam_over_two_points() {
        // side 1: y1=0, y2=1, a=2 ; side 2: y1=0, y2=1, b=2
        let x1 = space(vec![vec![0, 4, 1], vec![4, 0, 5], vec![1, 5, 0]]);
        let x2 = space(vec![vec![0, 4, 6], vec![4, 0, 2], vec![6, 2, 0]]);
        let am = metric_amalgam(&x1, &x2, &BaseMap::new(vec![0, 1], vec![0, 1])).unwrap();
        assert_eq!(am.space.d(2, 3), 7);
    }

    #[test]
    fn amalgam_with_base_only_side_is_the_other_side() {
        let x1 = space(vec![vec![0, 3], vec![3, 0]]);
        let x2 = space(vec![vec![0, 2, 3], vec![2, 0, 1], vec![3, 1, 0]]);
        // base = both points of x1, mapped to points 2 and 0 of x2
        let am = metric_amalgam(&x1, &x2, &BaseMap::new(vec![0, 1], vec![2, 0])).unwrap();
        assert_eq!(am.space.len(), 3);
        for a in 0..3 {
            for b in 0..3 {
                assert_eq!(am.space.d(am.right[a], am.right[b]), x2.d(a, b));
            }
        }
    }

    #[test]
    fn amalgam_errors() {
        let x = space(vec![vec![0, 2], vec![2, 0]]);
        let y = space(vec![vec![0, 3], vec![3, 0]]);
        assert_eq!(metric_amalgam(&x, &y, &BaseMap::new(vec![], vec![])), Err(MetricError::EmptyBase));
        assert_eq!(
            metric_amalgam(&x, &y, &BaseMap::new(vec![0, 1], vec![0, 1])),
            Err(MetricError::BaseDisagreement { i: 0, j: 1, left: 2, right: 3 })
        );
        assert!(matches!(
            metric_amalgam(&x, &y, &BaseMap::new(vec![0, 0], vec![0, 1])),
            Err(MetricError::BadBase(_))
        ));
    }

    #[test]
    fn disjoint_amalgam_uses_max_of_p_and_diameters() {
        let x1 = triangle(1, 1, 2);
        let x2 = triangle(1, 2, 3);
        let am = disjoint_amalgam(&x1, &x2, Some(5)).unwrap();
        for a in 0..3 {
            for b in 3..6 {
                assert_eq!(am.space.d(a, b), 5);
            }
        }
        let am = disjoint_amalgam(&x1, &x2, Some(1)).unwrap();
        assert_eq!(am.space.d(0, 5), 3);
        let pts = disjoint_amalgam(&IntegralMetricSpace::single_point(), &IntegralMetricSpace::single_point(), None).unwrap();
        assert_eq!(pts.space.d(0, 1), 1);
        assert!(disjoint_amalgam(&IntegralMetricSpace::unchecked(vec![], 1).unwrap(), &x1, None).is_err());
    }

    #[test]
    fn structure_view_round_trip_and_truncation() {
        let t = triangle(1, 2, 3);
        let s = t.to_structure(3).unwrap();
        assert_eq!(IntegralMetricSpace::from_structure(&s).unwrap(), t);
        assert!(matches!(t.to_structure(2), Err(MetricError::BeyondTruncation { distance: 3, .. })));
    }

    #[test]
    fn class_params_validation() {
        assert!(MetricClassParams::new(None, None, Some(3)).is_err());
        assert!(MetricClassParams::new(Some(0), None, None).is_err());
        assert!(MetricClassParams::new(None, Some(2), None).is_err());
        assert!(MetricClassParams::new(Some(3), None, Some(0)).is_err());
        let params = MetricClassParams::new(Some(3), Some(3), Some(4)).unwrap();
        assert!(!params.admits(&triangle(1, 1, 1)).unwrap());
        assert!(params.admits(&triangle(2, 2, 2)).unwrap());
        assert!(!params.admits(&triangle(3, 3, 5)).unwrap());
        assert!(!params.admits(&triangle(5, 5, 5)).unwrap());
    }
}
