//! Class definitions and slot-wise membership.
//!
//! Every built-in class is defined by constraints on small sets of slots.
//! Each constraint is checked exactly once, at the slot that comes last in
//! slot order, so filling slots in order and checking each one as it is set
//! decides membership, and prunes as early as possible.

use std::fmt;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use super::member::{pair_of_slot, Member, Shape};
use super::{FraisseError, Result};

/// Largest diversity member handled by the slot tables.
pub const MAX_DIVERSITY_POINTS: usize = 8;

pub type Predicate = Arc<dyn Fn(&Member) -> bool + Send + Sync>;

/// A class given only by a whole-structure predicate over label
/// assignments in `min_label..=max_label`. Used for negative controls.
#[derive(Clone)]
pub struct CustomClass {
    pub name: String,
    pub shape: Shape,
    pub min_label: u8,
    pub max_label: u8,
    pub predicate: Predicate,
}

impl fmt::Debug for CustomClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomClass")
            .field("name", &self.name)
            .field("shape", &self.shape)
            .field("labels", &(self.min_label..=self.max_label))
            .finish()
    }
}

impl PartialEq for CustomClass {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ClassKind {
    Graphs,
    ColoredGraphs { colors: u8 },
    TriangleFreeGraphs,
    IntegralMetric { max_dist: u8 },
    NoOddPerimeter { p: u8, max_dist: u8 },
    NoUnitSimplex { r: u8, max_dist: u8 },
    IntegralDiversity { max_value: u8 },
    #[serde(skip)]
    Custom(CustomClass),
}

impl ClassKind {
    pub fn name(&self) -> String {
        match self {
            ClassKind::Graphs => "graphs".into(),
            ClassKind::ColoredGraphs { colors } => format!("colored-graphs(c={colors})"),
            ClassKind::TriangleFreeGraphs => "triangle-free".into(),
            ClassKind::IntegralMetric { max_dist } => format!("integral-metric(D={max_dist})"),
            ClassKind::NoOddPerimeter { p, max_dist } => format!("no-odd-perimeter(p={p},D={max_dist})"),
            ClassKind::NoUnitSimplex { r, max_dist } => format!("no-unit-simplex(r={r},D={max_dist})"),
            ClassKind::IntegralDiversity { max_value } => format!("integral-diversity(D={max_value})"),
            ClassKind::Custom(c) => c.name.clone(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(FraisseError::BadClass(format!("{}: {msg}", self.name())));
        match *self {
            ClassKind::ColoredGraphs { colors } if colors == 0 => bad("needs at least one colour"),
            ClassKind::IntegralMetric { max_dist }
            | ClassKind::NoOddPerimeter { max_dist, .. }
            | ClassKind::NoUnitSimplex { max_dist, .. }
                if max_dist == 0 =>
            {
                bad("D must be at least 1")
            }
            ClassKind::IntegralDiversity { max_value } if max_value == 0 => bad("D must be at least 1"),
            ClassKind::NoOddPerimeter { p, .. } if p == 0 => bad("p must be positive"),
            ClassKind::NoUnitSimplex { r, .. } if r < 2 => bad("r must be at least 2"),
            ClassKind::ColoredGraphs { colors } if colors == u8::MAX => bad("too many colours"),
            _ => Ok(()),
        }
    }

    pub fn shape(&self) -> Shape {
        match self {
            ClassKind::IntegralDiversity { .. } => Shape::Subsets,
            ClassKind::Custom(c) => c.shape,
            _ => Shape::Pairs,
        }
    }

    pub fn min_label(&self) -> u8 {
        match self {
            ClassKind::Graphs | ClassKind::ColoredGraphs { .. } | ClassKind::TriangleFreeGraphs => 0,
            ClassKind::Custom(c) => c.min_label,
            _ => 1,
        }
    }

    pub fn max_label(&self) -> u8 {
        match *self {
            ClassKind::Graphs | ClassKind::TriangleFreeGraphs => 1,
            ClassKind::ColoredGraphs { colors } => colors,
            ClassKind::IntegralMetric { max_dist }
            | ClassKind::NoOddPerimeter { max_dist, .. }
            | ClassKind::NoUnitSimplex { max_dist, .. } => max_dist,
            ClassKind::IntegralDiversity { max_value } => max_value,
            ClassKind::Custom(ref c) => c.max_label,
        }
    }

    /// The value bound `D` (or colour count) when the class has one.
    pub fn truncation(&self) -> Option<u8> {
        match *self {
            ClassKind::Graphs | ClassKind::TriangleFreeGraphs | ClassKind::Custom(_) => None,
            _ => Some(self.max_label()),
        }
    }

    /// Same class with a different truncation; classes without one are
    /// returned unchanged.
    pub fn with_truncation(&self, t: u8) -> ClassKind {
        match self.clone() {
            ClassKind::ColoredGraphs { .. } => ClassKind::ColoredGraphs { colors: t },
            ClassKind::IntegralMetric { .. } => ClassKind::IntegralMetric { max_dist: t },
            ClassKind::NoOddPerimeter { p, .. } => ClassKind::NoOddPerimeter { p, max_dist: t },
            ClassKind::NoUnitSimplex { r, .. } => ClassKind::NoUnitSimplex { r, max_dist: t },
            ClassKind::IntegralDiversity { .. } => ClassKind::IntegralDiversity { max_value: t },
            other => other,
        }
    }

    pub fn is_custom(&self) -> bool {
        matches!(self, ClassKind::Custom(_))
    }

    pub fn is_metric(&self) -> bool {
        matches!(
            self,
            ClassKind::IntegralMetric { .. } | ClassKind::NoOddPerimeter { .. } | ClassKind::NoUnitSimplex { .. }
        )
    }

    /// Whether leaving every cross pair unrelated is the intended amalgam.
    pub fn is_free(&self) -> bool {
        matches!(
            self,
            ClassKind::Graphs | ClassKind::ColoredGraphs { .. } | ClassKind::TriangleFreeGraphs
        )
    }

    pub fn max_points(&self) -> usize {
        match self.shape() {
            Shape::Subsets => MAX_DIVERSITY_POINTS,
            Shape::Pairs => 1 << 16,
        }
    }

    /// Constraints on three pairwise labels of a triangle, symmetric in
    /// its arguments.
    pub fn triangle_ok(&self, x: u8, y: u8, z: u8) -> bool {
        match *self {
            ClassKind::TriangleFreeGraphs => !(x == 1 && y == 1 && z == 1),
            ClassKind::IntegralMetric { .. } => metric_triangle(x, y, z),
            ClassKind::NoOddPerimeter { p, .. } => {
                let perimeter = x as u32 + y as u32 + z as u32;
                metric_triangle(x, y, z) && !(perimeter % 2 == 1 && perimeter <= p as u32)
            }
            ClassKind::NoUnitSimplex { r, .. } => metric_triangle(x, y, z) && !(r == 3 && x == 1 && y == 1 && z == 1),
            _ => true,
        }
    }

    /// Order of the forbidden unit clique when it is larger than a
    /// triangle.
    pub(crate) fn clique_order(&self) -> Option<usize> {
        match *self {
            ClassKind::NoUnitSimplex { r, .. } if r != 3 => Some(r as usize),
            _ => None,
        }
    }

    /// Checks the constraints whose last slot is `slot`, assuming all
    /// earlier slots are set. The label range is the caller's concern.
    pub fn slot_ok(&self, m: &Member, slot: usize) -> bool {
        match self {
            ClassKind::Custom(_) | ClassKind::Graphs | ClassKind::ColoredGraphs { .. } => true,
            ClassKind::IntegralDiversity { .. } => diversity_slot_ok(m, slot),
            _ => {
                let (i, j) = pair_of_slot(slot);
                let x = m.pair(i, j);
                for h in 0..i {
                    if !self.triangle_ok(m.pair(h, i), m.pair(h, j), x) {
                        return false;
                    }
                }
                match self.clique_order() {
                    Some(r) if x == 1 => !unit_clique_through(m, i, j, r),
                    _ => true,
                }
            }
        }
    }

    /// Whole-structure check applied once all slots are set.
    pub fn final_ok(&self, m: &Member) -> bool {
        match self {
            ClassKind::Custom(c) => (c.predicate)(m),
            _ => true,
        }
    }

    pub fn admits(&self, m: &Member) -> bool {
        if m.shape != self.shape() || m.size > self.max_points() {
            return false;
        }
        let (lo, hi) = (self.min_label(), self.max_label());
        for slot in 0..m.labels.len() {
            let v = m.labels[slot];
            if !m.shape.is_slot(slot) {
                if v != 0 {
                    return false;
                }
                continue;
            }
            if v < lo || v > hi || !self.slot_ok(m, slot) {
                return false;
            }
        }
        self.final_ok(m)
    }
}

fn metric_triangle(x: u8, y: u8, z: u8) -> bool {
    let (x, y, z) = (x as u32, y as u32, z as u32);
    x <= y + z && y <= x + z && z <= x + y
}

/// Whether `i < j` lie in a unit clique of order `r` whose other points all
/// precede `i`.
fn unit_clique_through(m: &Member, i: usize, j: usize, r: usize) -> bool {
    let common: Vec<usize> = (0..i).filter(|&h| m.pair(h, i) == 1 && m.pair(h, j) == 1).collect();
    fn extend(m: &Member, pool: &[usize], need: usize) -> bool {
        if need == 0 {
            return true;
        }
        for (k, &h) in pool.iter().enumerate() {
            let rest: Vec<usize> = pool[k + 1..].iter().copied().filter(|&g| m.pair(g, h) == 1).collect();
            if extend(m, &rest, need - 1) {
                return true;
            }
        }
        false
    }
    r >= 2 && extend(m, &common, r - 2)
}

/// `(L, R1, R2)` mask triples meaning `δ(L) ≤ δ(R1) + δ(R2)`, grouped by
/// the largest mask among them that has at least two points.
struct DiversityConstraints {
    by_last: Vec<Vec<(u16, u16, u16)>>,
}

fn diversity_constraints() -> &'static DiversityConstraints {
    static TABLE: OnceLock<DiversityConstraints> = OnceLock::new();
    TABLE.get_or_init(|| {
        let n = MAX_DIVERSITY_POINTS;
        let full = 1usize << n;
        let mut seen = std::collections::HashSet::new();
        let mut by_last = vec![Vec::new(); full];
        let big = |m: usize| if m.count_ones() >= 2 { m } else { 0 };
        for a in 0..full {
            for c in a..full {
                let l = a | c;
                if l.count_ones() < 2 {
                    continue;
                }
                for b in 0..n {
                    let (r1, r2) = (a | 1 << b, c | 1 << b);
                    if r1 == l || r2 == l {
                        continue;
                    }
                    let (r1, r2) = (r1.min(r2), r1.max(r2));
                    if seen.insert((l, r1, r2)) {
                        let last = l.max(big(r1)).max(big(r2));
                        by_last[last].push((l as u16, r1 as u16, r2 as u16));
                    }
                }
            }
        }
        DiversityConstraints { by_last }
    })
}

fn diversity_slot_ok(m: &Member, slot: usize) -> bool {
    let t = &m.labels;
    diversity_constraints().by_last[slot]
        .iter()
        .all(|&(l, r1, r2)| t[l as usize] as u32 <= t[r1 as usize] as u32 + t[r2 as usize] as u32)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassSpec {
    pub kind: ClassKind,
    pub size_bound: usize,
}

impl ClassSpec {
    pub fn new(kind: ClassKind, size_bound: usize) -> Result<Self> {
        kind.validate()?;
        if size_bound > kind.max_points() {
            return Err(FraisseError::Bounds(format!(
                "size bound {size_bound} exceeds {} for {}",
                kind.max_points(),
                kind.name()
            )));
        }
        Ok(Self { kind, size_bound })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diversity::{validate_diversity, Diversity};
    use crate::metric::{odd_perimeter_witness, unit_simplex_witness, validate_metric};

    fn all_pair_members(n: usize, lo: u8, hi: u8) -> Vec<Member> {
        let slots = Shape::Pairs.slot_count(n);
        let base = (hi - lo + 1) as usize;
        (0..base.pow(slots as u32))
            .map(|mut code| {
                let mut m = Member::empty(Shape::Pairs, n);
                for s in 0..slots {
                    m.labels[s] = lo + (code % base) as u8;
                    code /= base;
                }
                m
            })
            .collect()
    }

    #[test]
    fn metric_membership_matches_metric_module() {
        let kinds = [
            ClassKind::IntegralMetric { max_dist: 3 },
            ClassKind::NoOddPerimeter { p: 3, max_dist: 3 },
            ClassKind::NoOddPerimeter { p: 5, max_dist: 3 },
            ClassKind::NoUnitSimplex { r: 3, max_dist: 3 },
            ClassKind::NoUnitSimplex { r: 4, max_dist: 2 },
        ];
        for kind in kinds {
            let hi = kind.max_label();
            for m in all_pair_members(4, 1, hi).into_iter().chain(all_pair_members(5, 1, 2)) {
                let space = m.to_metric();
                let mut expected = validate_metric(&space).is_valid() && m.max_label() <= hi;
                if expected {
                    expected = match kind {
                        ClassKind::NoOddPerimeter { p, .. } => odd_perimeter_witness(&space, p as u64).unwrap().is_none(),
                        ClassKind::NoUnitSimplex { r, .. } => unit_simplex_witness(&space, r as usize).unwrap().is_none(),
                        _ => true,
                    };
                }
                assert_eq!(kind.admits(&m), expected, "{} on {:?}", kind.name(), m.labels);
            }
        }
    }

    #[test]
    fn diversity_membership_matches_validator() {
        let kind = ClassKind::IntegralDiversity { max_value: 3 };
        let free: Vec<usize> = (0..16usize).filter(|m| m.count_ones() >= 2).collect();
        let mut admitted = 0;
        for code in 0..3usize.pow(free.len() as u32) {
            let mut m = Member::empty(Shape::Subsets, 4);
            let mut c = code;
            for &mask in &free {
                m.labels[mask] = 1 + (c % 3) as u8;
                c /= 3;
            }
            let d = Diversity::unchecked(4, m.labels.iter().map(|&v| v as u64).collect(), 1).unwrap();
            let expected = validate_diversity(&d).is_valid();
            assert_eq!(kind.admits(&m), expected);
            admitted += expected as usize;
        }
        assert_eq!(admitted, 1262);
    }

    #[test]
    fn triangle_free_rejects_triangles_only() {
        let kind = ClassKind::TriangleFreeGraphs;
        for m in all_pair_members(4, 0, 1) {
            let has_triangle = (0..4).any(|a| {
                (a + 1..4).any(|b| (b + 1..4).any(|c| m.pair(a, b) == 1 && m.pair(a, c) == 1 && m.pair(b, c) == 1))
            });
            assert_eq!(kind.admits(&m), !has_triangle);
        }
    }

    #[test]
    fn zero_truncation_is_rejected() {
        assert!(ClassSpec::new(ClassKind::IntegralMetric { max_dist: 0 }, 3).is_err());
        assert!(ClassSpec::new(ClassKind::IntegralDiversity { max_value: 3 }, 9).is_err());
        assert!(ClassSpec::new(ClassKind::NoOddPerimeter { p: 3, max_dist: 5 }, 4).is_ok());
    }
}
