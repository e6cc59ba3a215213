//! Compact labelled structures used by the enumerators.
//!
//! A pair-shaped member stores one label per unordered pair, at slot
//! `j*(j-1)/2 + i` for `i < j`. A subset-shaped member stores one label per
//! subset bitmask; masks with fewer than two points always hold 0. In both
//! layouts the slots introduced by point `n` come after every slot of points
//! `0..n`, so a member on `n+1` points extends one on `n` points by appending.

use serde::{Deserialize, Serialize};

use crate::diversity::Diversity;
use crate::metric::IntegralMetricSpace;
use crate::structure::{FiniteStructure, RelationSymbol, RelationalSignature};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shape {
    Pairs,
    Subsets,
}

impl Shape {
    pub fn slot_count(self, n: usize) -> usize {
        match self {
            Shape::Pairs => n * n.saturating_sub(1) / 2,
            Shape::Subsets => 1 << n,
        }
    }

    /// First slot introduced by point `p`.
    pub fn first_slot(self, p: usize) -> usize {
        match self {
            Shape::Pairs => p * p.saturating_sub(1) / 2,
            Shape::Subsets => 1 << p,
        }
    }

    /// Whether the slot carries a free label.
    pub fn is_slot(self, slot: usize) -> bool {
        match self {
            Shape::Pairs => true,
            Shape::Subsets => slot.count_ones() >= 2,
        }
    }

    /// Points covered by a slot, ascending.
    pub fn slot_points(self, slot: usize) -> Vec<usize> {
        match self {
            Shape::Pairs => {
                let (i, j) = pair_of_slot(slot);
                vec![i, j]
            }
            Shape::Subsets => (0..usize::BITS as usize).filter(|b| slot >> b & 1 == 1).collect(),
        }
    }
}

pub fn pair_slot(i: usize, j: usize) -> usize {
    let (i, j) = if i < j { (i, j) } else { (j, i) };
    j * (j - 1) / 2 + i
}

pub fn pair_of_slot(slot: usize) -> (usize, usize) {
    let mut j = 1;
    while (j + 1) * j / 2 <= slot {
        j += 1;
    }
    (slot - j * (j - 1) / 2, j)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Member {
    pub shape: Shape,
    pub size: usize,
    pub labels: Vec<u8>,
}

impl Member {
    pub fn empty(shape: Shape, size: usize) -> Self {
        Self {
            shape,
            size,
            labels: vec![0; shape.slot_count(size)],
        }
    }

    pub fn pair(&self, i: usize, j: usize) -> u8 {
        self.labels[pair_slot(i, j)]
    }

    pub fn set_pair(&mut self, i: usize, j: usize, label: u8) {
        self.labels[pair_slot(i, j)] = label;
    }

    pub fn subset(&self, mask: usize) -> u8 {
        self.labels[mask]
    }

    /// Appends a point whose slots are all 0.
    pub fn push_point(&mut self) {
        self.size += 1;
        self.labels.resize(self.shape.slot_count(self.size), 0);
    }

    /// Induced member on `points`, with `points[k]` becoming point `k`.
    pub fn restrict(&self, points: &[usize]) -> Member {
        let mut out = Member::empty(self.shape, points.len());
        match self.shape {
            Shape::Pairs => {
                for b in 1..points.len() {
                    for a in 0..b {
                        out.set_pair(a, b, self.pair(points[a], points[b]));
                    }
                }
            }
            Shape::Subsets => {
                for mask in 0..out.labels.len() {
                    if mask.count_ones() >= 2 {
                        out.labels[mask] = self.labels[map_mask(mask, points)];
                    }
                }
            }
        }
        out
    }

    /// Relabels point `i` as `perm[i]`.
    pub fn relabel(&self, perm: &[usize]) -> Member {
        let mut out = Member::empty(self.shape, self.size);
        match self.shape {
            Shape::Pairs => {
                for j in 1..self.size {
                    for i in 0..j {
                        out.set_pair(perm[i], perm[j], self.pair(i, j));
                    }
                }
            }
            Shape::Subsets => {
                for mask in 0..self.labels.len() {
                    out.labels[map_mask(mask, perm)] = self.labels[mask];
                }
            }
        }
        out
    }

    /// Bytes identifying the labelled member: size then labels.
    pub fn code(&self) -> Vec<u8> {
        let mut code = Vec::with_capacity(self.labels.len() + 1);
        code.push(self.size as u8);
        code.extend_from_slice(&self.labels);
        code
    }

    /// The least relabelling, in label order, among those fixing `0..fixed`
    /// pointwise. Two members are isomorphic over the fixed prefix exactly
    /// when these agree.
    pub fn canonical_over(&self, fixed: usize) -> Member {
        let free: Vec<usize> = (fixed..self.size).collect();
        let mut best = self.clone();
        let mut perm: Vec<usize> = (0..self.size).collect();
        for_each_permutation(&free, &mut |images| {
            perm[fixed..].copy_from_slice(images);
            let candidate = self.relabel(&perm);
            if candidate.labels < best.labels {
                best = candidate;
            }
        });
        best
    }

    pub fn max_label(&self) -> u8 {
        self.labels.iter().copied().max().unwrap_or(0)
    }

    pub fn to_metric(&self) -> IntegralMetricSpace {
        assert_eq!(self.shape, Shape::Pairs);
        let n = self.size;
        let rows = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 0 } else { self.pair(i, j) as u64 }).collect())
            .collect();
        IntegralMetricSpace::unchecked(rows, 1).expect("square table")
    }

    /// Distances above 255 are not representable; callers cap first.
    pub fn from_metric(space: &IntegralMetricSpace) -> Member {
        let mut out = Member::empty(Shape::Pairs, space.len());
        for j in 1..space.len() {
            for i in 0..j {
                out.set_pair(i, j, space.d(i, j).min(255) as u8);
            }
        }
        out
    }

    pub fn to_diversity(&self) -> Diversity {
        assert_eq!(self.shape, Shape::Subsets);
        Diversity::unchecked(self.size, self.labels.iter().map(|&v| v as u64).collect(), 1)
            .expect("diversity members stay within the dense limit")
    }

    pub fn from_diversity(d: &Diversity) -> Member {
        let mut out = Member::empty(Shape::Subsets, d.len());
        for (mask, slot) in out.labels.iter_mut().enumerate() {
            *slot = d.value(mask).min(255) as u8;
        }
        out
    }

    /// Pair members as a relational structure with one symmetric binary
    /// relation `L{v}` per nonzero label `v ≤ max_label`.
    pub fn to_structure(&self, max_label: u8) -> FiniteStructure {
        assert_eq!(self.shape, Shape::Pairs);
        let symbols = (1..=max_label)
            .map(|v| RelationSymbol::new(format!("L{v}"), 2))
            .collect();
        let signature = RelationalSignature::new(symbols, None).expect("binary signature");
        let mut s = FiniteStructure::empty(signature, self.size);
        for j in 1..self.size {
            for i in 0..j {
                let v = self.pair(i, j);
                if v > 0 {
                    s.add_symmetric(&format!("L{v}"), i, j).expect("label in signature");
                }
            }
        }
        s
    }
}

/// Image of `mask` under the point map `points` (bit `k` goes to bit
/// `points[k]`).
pub fn map_mask(mask: usize, points: &[usize]) -> usize {
    let mut out = 0;
    let mut m = mask;
    while m != 0 {
        let k = m.trailing_zeros() as usize;
        out |= 1 << points[k];
        m &= m - 1;
    }
    out
}

/// Calls `f` with every ordering of `items` (Heap's algorithm).
pub fn for_each_permutation(items: &[usize], f: &mut dyn FnMut(&[usize])) {
    let mut a = items.to_vec();
    let n = a.len();
    let mut c = vec![0; n];
    f(&a);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                a.swap(0, i);
            } else {
                a.swap(c[i], i);
            }
            f(&a);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_slots_roundtrip() {
        for j in 1..20 {
            for i in 0..j {
                assert_eq!(pair_of_slot(pair_slot(i, j)), (i, j));
            }
        }
        assert_eq!(Shape::Pairs.first_slot(3), 3);
        assert_eq!(Shape::Pairs.slot_count(4), 6);
    }

    #[test]
    fn permutations_are_all_distinct() {
        let mut seen = std::collections::BTreeSet::new();
        for_each_permutation(&[0, 1, 2, 3], &mut |p| {
            seen.insert(p.to_vec());
        });
        assert_eq!(seen.len(), 24);
    }

    #[test]
    fn restrict_and_relabel_agree_on_subsets() {
        let mut m = Member::empty(Shape::Subsets, 3);
        for mask in 0..8usize {
            if mask.count_ones() >= 2 {
                m.labels[mask] = mask as u8;
            }
        }
        let r = m.restrict(&[2, 0]);
        assert_eq!(r.subset(0b11), 0b101);
        let p = m.relabel(&[2, 0, 1]);
        assert_eq!(p.subset(0b101), m.subset(0b011));
    }

    #[test]
    fn canonical_over_identifies_isomorphic_extensions() {
        let mut a = Member::empty(Shape::Pairs, 3);
        a.set_pair(0, 1, 1);
        let mut b = Member::empty(Shape::Pairs, 3);
        b.set_pair(0, 2, 1);
        assert_eq!(a.canonical_over(1), b.canonical_over(1));
        assert_ne!(a.canonical_over(3), b.canonical_over(3));
    }

    #[test]
    fn metric_conversion_roundtrips() {
        let space = IntegralMetricSpace::from_rows(vec![vec![0, 2, 3], vec![2, 0, 1], vec![3, 1, 0]]).unwrap();
        assert_eq!(Member::from_metric(&space).to_metric(), space);
    }
}
