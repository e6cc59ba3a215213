//! Trees of types of injective tuples and bounded oligomorphy evidence.
//!
//! A type of an injective `k`-tuple is the labelled member it induces, with
//! tuple entry `i` as point `i`. Level `k` lists all of them in label
//! order; a node's parent is the type of its first `k-1` entries.

use serde::{Deserialize, Serialize};

use super::class::{ClassKind, ClassSpec};
use super::member::Member;
use super::{extensions, FraisseError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeTree {
    pub class: String,
    pub truncation: Option<u8>,
    /// `levels[k]` holds label tables of the `k`-types; level 0 is the root.
    pub levels: Vec<Vec<Vec<u8>>>,
    /// `parents[k][i]` indexes the parent of node `i` of level `k` in
    /// level `k-1`; `parents[0]` is empty.
    pub parents: Vec<Vec<usize>>,
}

impl TypeTree {
    pub fn sizes(&self) -> Vec<usize> {
        self.levels.iter().map(Vec::len).collect()
    }

    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }
}

/// Grows each level from the one-point extensions of the previous one.
/// For hereditary classes this is every type realized in a member.
pub fn type_tree(spec: &ClassSpec, depth: usize) -> Result<TypeTree> {
    if depth > 4 {
        return Err(FraisseError::Bounds("type trees need depth ≤ 4".into()));
    }
    if depth > spec.kind.max_points() {
        return Err(FraisseError::Bounds("depth exceeds the point limit".into()));
    }
    let kind = &spec.kind;
    let root = Member::empty(kind.shape(), 0);
    let mut nodes: Vec<Vec<Member>> = vec![vec![root]];
    let mut parents: Vec<Vec<usize>> = vec![Vec::new()];
    for _ in 1..=depth {
        let prev = nodes.last().expect("root level");
        let mut level: Vec<(Member, usize)> = Vec::new();
        for (pi, p) in prev.iter().enumerate() {
            for child in extensions(kind, p, 1) {
                if kind.final_ok(&child) {
                    level.push((child, pi));
                }
            }
        }
        level.sort_by(|a, b| a.0.labels.cmp(&b.0.labels));
        parents.push(level.iter().map(|x| x.1).collect());
        nodes.push(level.into_iter().map(|x| x.0).collect());
    }
    Ok(TypeTree {
        class: kind.name(),
        truncation: kind.truncation(),
        levels: nodes.into_iter().map(|l| l.into_iter().map(|m| m.labels).collect()).collect(),
        parents,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OligomorphyVerdict {
    pub class: String,
    pub truncations: Vec<Option<u8>>,
    pub level_sizes: Vec<Vec<usize>>,
    /// First level whose size grows with the truncation.
    pub growing_level: Option<usize>,
    pub verdict: String,
}

/// Compares level sizes across trees built at different truncations.
/// Evidence within the bounds, not a proof.
pub fn oligomorphy_report(trees: &[TypeTree], spec: &ClassSpec) -> Result<OligomorphyVerdict> {
    if trees.len() < 2 {
        return Err(FraisseError::SingleTruncation);
    }
    let mut sorted: Vec<&TypeTree> = trees.iter().collect();
    sorted.sort_by_key(|t| t.truncation);
    if spec.kind.truncation().is_some() {
        let mut ts: Vec<Option<u8>> = sorted.iter().map(|t| t.truncation).collect();
        ts.dedup();
        if ts.len() < 2 {
            return Err(FraisseError::SingleTruncation);
        }
    }
    let depth = sorted.iter().map(|t| t.depth()).min().unwrap_or(0);
    let sizes: Vec<Vec<usize>> = sorted.iter().map(|t| t.sizes()).collect();
    let growing_level = (0..=depth).find(|&k| sizes.windows(2).any(|w| w[1][k] > w[0][k]));
    let verdict = match growing_level {
        Some(k) => format!("non-oligomorphic at level {k}"),
        None => "oligomorphic within bounds".to_string(),
    };
    Ok(OligomorphyVerdict {
        class: spec.kind.name(),
        truncations: sorted.iter().map(|t| t.truncation).collect(),
        level_sizes: sizes,
        growing_level,
        verdict,
    })
}

/// Type trees of `kind` at each truncation in `values`.
pub fn trees_across(kind: &ClassKind, depth: usize, values: &[u8]) -> Result<Vec<TypeTree>> {
    values
        .iter()
        .map(|&t| type_tree(&ClassSpec::new(kind.with_truncation(t), depth)?, depth))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fraisse::{CustomClass, Shape};
    use std::sync::Arc;

    fn tree(kind: ClassKind, depth: usize) -> TypeTree {
        type_tree(&ClassSpec::new(kind, depth).unwrap(), depth).unwrap()
    }

    #[test]
    fn graph_levels() {
        assert_eq!(tree(ClassKind::Graphs, 3).sizes(), vec![1, 1, 2, 8]);
        assert_eq!(tree(ClassKind::Graphs, 4).sizes()[4], 64);
    }

    #[test]
    fn every_node_has_its_restriction_as_parent() {
        let t = tree(ClassKind::NoOddPerimeter { p: 3, max_dist: 4 }, 4);
        for k in 1..=t.depth() {
            for (i, labels) in t.levels[k].iter().enumerate() {
                let m = Member {
                    shape: Shape::Pairs,
                    size: k,
                    labels: labels.clone(),
                };
                let parent = m.restrict(&(0..k - 1).collect::<Vec<_>>());
                assert_eq!(t.levels[k - 1][t.parents[k][i]], parent.labels);
            }
        }
    }

    #[test]
    fn level_two_counts() {
        for d in 1..=8u8 {
            assert_eq!(tree(ClassKind::NoOddPerimeter { p: 3, max_dist: d }, 2).sizes()[2], d as usize);
        }
        for c in [3u8, 6] {
            assert_eq!(tree(ClassKind::ColoredGraphs { colors: c }, 2).sizes()[2], c as usize + 1);
        }
    }

    #[test]
    fn level_three_matches_brute_count() {
        // Triangles with sides ≤ D, triangle inequality, perimeter not odd ≤ 3.
        for d in [2u8, 4, 5] {
            let mut count = 0;
            for x in 1..=d as u32 {
                for y in 1..=d as u32 {
                    for z in 1..=d as u32 {
                        let ok = x <= y + z && y <= x + z && z <= x + y && !((x + y + z) % 2 == 1 && x + y + z <= 3);
                        count += ok as usize;
                    }
                }
            }
            assert_eq!(tree(ClassKind::NoOddPerimeter { p: 3, max_dist: d }, 3).sizes()[3], count);
        }
    }

    #[test]
    fn empty_class_has_only_the_root() {
        let none = ClassKind::Custom(CustomClass {
            name: "empty".into(),
            shape: Shape::Pairs,
            min_label: 0,
            max_label: 1,
            predicate: Arc::new(|_: &Member| false),
        });
        assert_eq!(tree(none, 3).sizes(), vec![1, 0, 0, 0]);
    }

    #[test]
    fn oligomorphy_verdicts() {
        let spec = |k: ClassKind| ClassSpec::new(k, 3).unwrap();
        let g = ClassKind::Graphs;
        let v = oligomorphy_report(&[tree(g.clone(), 3), tree(g.clone(), 3)], &spec(g)).unwrap();
        assert_eq!(v.verdict, "oligomorphic within bounds");

        let m = ClassKind::NoOddPerimeter { p: 3, max_dist: 4 };
        let trees = trees_across(&m, 3, &[4, 8]).unwrap();
        let v = oligomorphy_report(&trees, &spec(m.clone())).unwrap();
        assert_eq!(v.verdict, "non-oligomorphic at level 2");

        let single = trees_across(&m, 2, &[4, 4]).unwrap();
        assert_eq!(oligomorphy_report(&single, &spec(m.clone())), Err(FraisseError::SingleTruncation));
        assert_eq!(oligomorphy_report(&single[..1], &spec(m)), Err(FraisseError::SingleTruncation));
    }
}
