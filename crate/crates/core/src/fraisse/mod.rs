//! Exhaustive checks of Fraïssé-class properties at bounded size, a generic
//! chain builder for limits, and type trees.
//!
//! Structures are handled as [`Member`]s: label tables over pairs (graphs,
//! coloured graphs, integral metric spaces) or over subsets (integral
//! diversities). Enumeration adds one point at a time and fills its slots in
//! order, so every class constraint prunes as soon as its last slot is set.

mod checks;
mod class;
mod limit;
mod member;
mod types;

use std::collections::BTreeSet;

use thiserror::Error;

pub use checks::{
    check_ap, check_fap, check_hp, check_jep, check_sap, check_sigma_sap_truncated, revalidate, AmalgamationReport,
    Counterexample, Instance, Property, Verdict,
};
pub use class::{ClassKind, ClassSpec, CustomClass, Predicate, MAX_DIVERSITY_POINTS};
pub use limit::{build_limit, ultrahomogeneity_probe, LimitApproximation, LogEntry, ProbeReport, Task, TaskAudit};
pub use member::{for_each_permutation, map_mask, pair_of_slot, pair_slot, Member, Shape};
pub use types::{oligomorphy_report, trees_across, type_tree, OligomorphyVerdict, TypeTree};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FraisseError {
    #[error("invalid class: {0}")]
    BadClass(String),
    #[error("bounds exceeded: {0}")]
    Bounds(String),
    #[error("not an amalgamation class at this scale: {0}")]
    NotAmalgamationClass(String),
    #[error("need ≥ 2 truncations")]
    SingleTruncation,
    #[error("malformed instance: {0}")]
    BadInstance(String),
}

pub type Result<T> = std::result::Result<T, FraisseError>;

/// Fills the slots of `m` from `start` on, in order. Slots where `free` is
/// false keep their label and are only checked. `visit` sees every
/// completion that passes; returning true stops the search, and the
/// function then returns true.
pub(crate) fn fill(
    kind: &ClassKind,
    m: &mut Member,
    start: usize,
    free: &dyn Fn(usize) -> bool,
    visit: &mut dyn FnMut(&Member) -> bool,
) -> bool {
    let (lo, hi) = (kind.min_label(), kind.max_label());
    fn go(
        kind: &ClassKind,
        m: &mut Member,
        slot: usize,
        lo: u8,
        hi: u8,
        free: &dyn Fn(usize) -> bool,
        visit: &mut dyn FnMut(&Member) -> bool,
    ) -> bool {
        let mut s = slot;
        while s < m.labels.len() && !m.shape.is_slot(s) {
            s += 1;
        }
        if s == m.labels.len() {
            return kind.final_ok(m) && visit(m);
        }
        if !free(s) {
            return kind.slot_ok(m, s) && go(kind, m, s + 1, lo, hi, free, visit);
        }
        for v in lo..=hi {
            m.labels[s] = v;
            if kind.slot_ok(m, s) && go(kind, m, s + 1, lo, hi, free, visit) {
                return true;
            }
        }
        m.labels[s] = 0;
        false
    }
    go(kind, m, start, lo, hi, free, visit)
}

/// All class members on `base.size + k` points restricting to `base` on
/// the first points, in label order.
pub fn extensions(kind: &ClassKind, base: &Member, k: usize) -> Vec<Member> {
    let mut m = base.clone();
    for _ in 0..k {
        m.push_point();
    }
    let start = base.shape.slot_count(base.size);
    let mut out = Vec::new();
    fill(kind, &mut m, start, &|_| true, &mut |c| {
        out.push(c.clone());
        false
    });
    out
}

/// Extensions by `k` points up to isomorphism fixing `base` pointwise,
/// each given by its canonical relabelling, sorted.
pub fn extension_types(kind: &ClassKind, base: &Member, k: usize) -> Vec<Member> {
    let fixed = base.size;
    let reps: BTreeSet<Member> = extensions(kind, base, k)
        .into_iter()
        .map(|m| m.canonical_over(fixed))
        .collect();
    reps.into_iter().collect()
}

/// Class members on `n` points up to isomorphism, sorted.
pub fn isomorphism_types(kind: &ClassKind, n: usize) -> Vec<Member> {
    extension_types(kind, &Member::empty(kind.shape(), 0), n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_counts() {
        let graphs = ClassKind::Graphs;
        assert_eq!(isomorphism_types(&graphs, 3).len(), 4);
        assert_eq!(isomorphism_types(&graphs, 4).len(), 11);
        assert_eq!(extensions(&graphs, &Member::empty(Shape::Pairs, 0), 4).len(), 64);
        let div = ClassKind::IntegralDiversity { max_value: 3 };
        let empty = Member::empty(Shape::Subsets, 0);
        assert_eq!(extensions(&div, &empty, 2).len(), 3);
        assert_eq!(extensions(&div, &empty, 3).len(), 29);
        assert_eq!(extensions(&div, &empty, 4).len(), 1262);
    }

    #[test]
    fn extensions_restrict_to_base() {
        let kind = ClassKind::NoOddPerimeter { p: 3, max_dist: 4 };
        let bases = extensions(&kind, &Member::empty(Shape::Pairs, 0), 3);
        for base in bases.iter().take(10) {
            for ext in extensions(&kind, base, 1) {
                assert!(kind.admits(&ext));
                assert_eq!(&ext.restrict(&[0, 1, 2]), base);
            }
        }
    }
}
