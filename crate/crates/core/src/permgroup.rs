//! Finite permutation groups carried by a stabilizer chain.
//!
//! Permutations act on the left: `(g ∘ h)(x) = g(h(x))`. A chain level with
//! base point `b` stores the orbit of `b` under the level's strong
//! generators and, for each orbit point `β`, a transversal element `u_β`
//! with `u_β(b) = β`. Every group element factors uniquely as
//! `u_1 ∘ u_2 ∘ … ∘ u_k`, which the backtrack searches below exploit: the
//! partial product `u_1 ∘ … ∘ u_i` already fixes the images of the first
//! `i` base points.

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PermError {
    #[error("image array {0:?} is not a bijection of 0..{1}")]
    NotBijective(Vec<usize>, usize),
    #[error("degree mismatch: expected {expected}, got {got}")]
    DegreeMismatch { expected: usize, got: usize },
    #[error("point {point} outside the domain 0..{degree}")]
    PointOutOfRange { point: usize, degree: usize },
    #[error("{0}")]
    Bounds(String),
}

pub type Result<T> = std::result::Result<T, PermError>;

/// A bijection of `0..n`, serialized as its image array.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Permutation {
    images: Vec<usize>,
}

impl TryFrom<Vec<usize>> for Permutation {
    type Error = PermError;

    fn try_from(images: Vec<usize>) -> Result<Self> {
        Permutation::from_images(images)
    }
}

impl From<Permutation> for Vec<usize> {
    fn from(p: Permutation) -> Self {
        p.images
    }
}

impl fmt::Debug for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.images)
    }
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Self {
            images: (0..n).collect(),
        }
    }

    pub fn from_images(images: Vec<usize>) -> Result<Self> {
        let n = images.len();
        let mut seen = vec![false; n];
        for &x in &images {
            if x >= n || std::mem::replace(&mut seen[x], true) {
                return Err(PermError::NotBijective(images, n));
            }
        }
        Ok(Self { images })
    }

    /// Product of the given disjoint or overlapping cycles, rightmost first.
    pub fn from_cycles(n: usize, cycles: &[&[usize]]) -> Result<Self> {
        let mut p = Self::identity(n);
        for cycle in cycles.iter().rev() {
            let mut c = (0..n).collect::<Vec<_>>();
            for (i, &x) in cycle.iter().enumerate() {
                if x >= n {
                    return Err(PermError::PointOutOfRange { point: x, degree: n });
                }
                c[x] = cycle[(i + 1) % cycle.len()];
            }
            p = Self::from_images(c)?.compose(&p);
        }
        Ok(p)
    }

    pub fn degree(&self) -> usize {
        self.images.len()
    }

    pub fn apply(&self, x: usize) -> usize {
        self.images[x]
    }

    pub fn images(&self) -> &[usize] {
        &self.images
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Permutation) -> Permutation {
        Permutation {
            images: other.images.iter().map(|&x| self.images[x]).collect(),
        }
    }

    pub fn inverse(&self) -> Permutation {
        let mut images = vec![0; self.images.len()];
        for (x, &y) in self.images.iter().enumerate() {
            images[y] = x;
        }
        Permutation { images }
    }

    pub fn is_identity(&self) -> bool {
        self.images.iter().enumerate().all(|(x, &y)| x == y)
    }

    pub fn fixes(&self, x: usize) -> bool {
        self.images[x] == x
    }

    pub fn fixed_points(&self) -> usize {
        self.images.iter().enumerate().filter(|(x, &y)| *x == y).count()
    }

    /// Cycle lengths in decreasing order, fixed points included.
    pub fn cycle_type(&self) -> CycleType {
        let n = self.images.len();
        let mut seen = vec![false; n];
        let mut lengths = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut len = 0;
            let mut x = start;
            while !seen[x] {
                seen[x] = true;
                x = self.images[x];
                len += 1;
            }
            lengths.push(len);
        }
        lengths.sort_unstable_by(|a, b| b.cmp(a));
        CycleType(lengths)
    }
}

/// A partition of the degree, parts in decreasing order.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CycleType(pub Vec<usize>);

impl fmt::Debug for CycleType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for CycleType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|p| p.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

#[derive(Debug, Clone)]
struct Level {
    base_point: usize,
    /// strong generators fixing all earlier base points
    generators: Vec<Permutation>,
    orbit: Vec<usize>,
    transversal: Vec<Option<Permutation>>,
}

impl Level {
    fn new(degree: usize, base_point: usize) -> Self {
        Level {
            base_point,
            generators: Vec::new(),
            orbit: vec![base_point],
            transversal: {
                let mut t = vec![None; degree];
                t[base_point] = Some(Permutation::identity(degree));
                t
            },
        }
    }

    fn recompute_orbit(&mut self, degree: usize) {
        let mut transversal = vec![None; degree];
        transversal[self.base_point] = Some(Permutation::identity(degree));
        let mut orbit = vec![self.base_point];
        let mut i = 0;
        while i < orbit.len() {
            let beta = orbit[i];
            let u = transversal[beta].clone().expect("orbit point has transversal");
            for s in &self.generators {
                let gamma = s.apply(beta);
                if transversal[gamma].is_none() {
                    transversal[gamma] = Some(s.compose(&u));
                    orbit.push(gamma);
                }
            }
            i += 1;
        }
        self.orbit = orbit;
        self.transversal = transversal;
    }
}

/// A finite permutation group with a certified stabilizer chain.
#[derive(Debug, Clone)]
pub struct PermutationGroup {
    degree: usize,
    generators: Vec<Permutation>,
    levels: Vec<Level>,
}

impl PermutationGroup {
    pub fn new(degree: usize, generators: Vec<Permutation>) -> Result<Self> {
        Self::with_base_prefix(degree, generators, &[])
    }

    /// Builds the chain so that its base starts with `prefix`.
    pub fn with_base_prefix(degree: usize, generators: Vec<Permutation>, prefix: &[usize]) -> Result<Self> {
        for g in &generators {
            if g.degree() != degree {
                return Err(PermError::DegreeMismatch {
                    expected: degree,
                    got: g.degree(),
                });
            }
        }
        for &p in prefix {
            if p >= degree {
                return Err(PermError::PointOutOfRange { point: p, degree });
            }
        }
        let levels = schreier_sims(degree, &generators, prefix);
        let group = Self {
            degree,
            generators,
            levels,
        };
        debug_assert!(group.verify());
        Ok(group)
    }

    pub fn trivial(degree: usize) -> Self {
        Self::new(degree, Vec::new()).expect("no generators")
    }

    pub fn symmetric(n: usize) -> Self {
        let mut gens = Vec::new();
        if n >= 2 {
            gens.push(Permutation::from_cycles(n, &[&[0, 1]]).expect("valid"));
        }
        if n >= 3 {
            let cycle: Vec<usize> = (0..n).collect();
            gens.push(Permutation::from_cycles(n, &[&cycle]).expect("valid"));
        }
        Self::new(n, gens).expect("valid generators")
    }

    pub fn cyclic(n: usize) -> Self {
        let cycle: Vec<usize> = (0..n).collect();
        let gens = if n >= 2 {
            vec![Permutation::from_cycles(n, &[&cycle]).expect("valid")]
        } else {
            Vec::new()
        };
        Self::new(n, gens).expect("valid generators")
    }

    /// Symmetries of the n-gon with vertices `0..n` in cyclic order.
    pub fn dihedral(n: usize) -> Self {
        let mut gens = Self::cyclic(n).generators;
        if n >= 3 {
            let reflection: Vec<usize> = (0..n).map(|i| (n - i) % n).collect();
            gens.push(Permutation::from_images(reflection).expect("valid"));
        }
        Self::new(n, gens).expect("valid generators")
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn generators(&self) -> &[Permutation] {
        &self.generators
    }

    pub fn base(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.base_point).collect()
    }

    pub fn strong_generators(&self) -> Vec<Permutation> {
        let mut all: Vec<Permutation> = self
            .levels
            .first()
            .map(|l| l.generators.clone())
            .unwrap_or_default();
        all.sort();
        all.dedup();
        all
    }

    pub fn transversal_sizes(&self) -> Vec<usize> {
        self.levels.iter().map(|l| l.orbit.len()).collect()
    }

    pub fn order(&self) -> u128 {
        self.levels.iter().map(|l| l.orbit.len() as u128).product()
    }

    fn sift(&self, g: &Permutation) -> (Permutation, usize) {
        sift_levels(&self.levels, g.clone(), 0)
    }

    pub fn contains(&self, g: &Permutation) -> bool {
        g.degree() == self.degree && self.sift(g).0.is_identity()
    }

    /// Every original generator sifts to the identity and every level's
    /// Schreier generators sift through the levels below it.
    pub fn verify(&self) -> bool {
        if !self.generators.iter().all(|g| self.contains(g)) {
            return false;
        }
        for (i, level) in self.levels.iter().enumerate() {
            for &beta in &level.orbit {
                let u = level.transversal[beta].as_ref().expect("orbit point");
                for s in &level.generators {
                    let su = s.compose(u);
                    let v = level.transversal[su.apply(level.base_point)]
                        .as_ref()
                        .expect("orbit closed");
                    let h = v.inverse().compose(&su);
                    if !sift_levels(&self.levels, h, i + 1).0.is_identity() {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// All elements, in the order given by the chain factorisation.
    pub fn elements(&self) -> Result<Vec<Permutation>> {
        if self.order() > 5_000_000 {
            return Err(PermError::Bounds(format!(
                "refusing to list {} elements",
                self.order()
            )));
        }
        let mut out = vec![Permutation::identity(self.degree)];
        for level in self.levels.iter().rev() {
            let mut next = Vec::with_capacity(out.len() * level.orbit.len());
            for &beta in &level.orbit {
                let u = level.transversal[beta].as_ref().expect("orbit point");
                for g in &out {
                    next.push(u.compose(g));
                }
            }
            out = next;
        }
        Ok(out)
    }

    fn check_points(&self, points: &[usize]) -> Result<()> {
        for &p in points {
            if p >= self.degree {
                return Err(PermError::PointOutOfRange {
                    point: p,
                    degree: self.degree,
                });
            }
        }
        Ok(())
    }

    fn rebased(&self, prefix: &[usize]) -> Result<PermutationGroup> {
        PermutationGroup::with_base_prefix(self.degree, self.strong_generators(), prefix)
    }

    /// Orbits of the group on points, each sorted, ordered by least element.
    pub fn orbits(&self) -> Vec<Vec<usize>> {
        let gens = self.strong_generators();
        let mut uf = UnionFind::new(self.degree);
        for g in &gens {
            for x in 0..self.degree {
                uf.union(x, g.apply(x));
            }
        }
        let mut classes: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for x in 0..self.degree {
            classes.entry(uf.find(x)).or_default().push(x);
        }
        let mut out: Vec<Vec<usize>> = classes.into_values().collect();
        out.sort();
        out
    }
}

fn sift_levels(levels: &[Level], mut g: Permutation, start: usize) -> (Permutation, usize) {
    for (j, level) in levels.iter().enumerate().skip(start) {
        let beta = g.apply(level.base_point);
        match &level.transversal[beta] {
            None => return (g, j),
            Some(u) => g = u.inverse().compose(&g),
        }
    }
    (g, levels.len())
}

fn schreier_sims(degree: usize, generators: &[Permutation], prefix: &[usize]) -> Vec<Level> {
    let mut base: Vec<usize> = Vec::new();
    for &p in prefix {
        if !base.contains(&p) {
            base.push(p);
        }
    }
    let gens: Vec<Permutation> = generators.iter().filter(|g| !g.is_identity()).cloned().collect();
    for g in &gens {
        if base.iter().all(|&b| g.fixes(b)) {
            let moved = (0..degree).find(|&x| !g.fixes(x)).expect("non-identity");
            base.push(moved);
        }
    }
    let mut levels: Vec<Level> = base.iter().map(|&b| Level::new(degree, b)).collect();
    let add_generator = |levels: &mut Vec<Level>, g: &Permutation| {
        for level in levels.iter_mut() {
            level.generators.push(g.clone());
            if !g.fixes(level.base_point) {
                break;
            }
        }
    };
    for g in &gens {
        add_generator(&mut levels, g);
    }
    for level in levels.iter_mut() {
        level.recompute_orbit(degree);
    }
    let mut i = levels.len() as isize - 1;
    while i >= 0 {
        let iu = i as usize;
        levels[iu].recompute_orbit(degree);
        let mut restart_at = None;
        'search: for oi in 0..levels[iu].orbit.len() {
            let beta = levels[iu].orbit[oi];
            let u = levels[iu].transversal[beta].clone().expect("orbit point");
            for si in 0..levels[iu].generators.len() {
                let su = levels[iu].generators[si].compose(&u);
                let v = levels[iu].transversal[su.apply(levels[iu].base_point)]
                    .clone()
                    .expect("orbit closed");
                let h = v.inverse().compose(&su);
                let (residue, j) = sift_levels(&levels, h, iu + 1);
                if residue.is_identity() {
                    continue;
                }
                if j == levels.len() {
                    let moved = (0..degree).find(|&x| !residue.fixes(x)).expect("non-identity");
                    levels.push(Level::new(degree, moved));
                }
                // residue fixes base points 0..j, so it joins levels iu+1..=j
                for level in levels.iter_mut().take(j + 1).skip(iu + 1) {
                    level.generators.push(residue.clone());
                }
                for level in levels.iter_mut().take(j + 1).skip(iu + 1) {
                    level.recompute_orbit(degree);
                }
                restart_at = Some(j);
                break 'search;
            }
        }
        match restart_at {
            Some(j) => i = j as isize,
            None => i -= 1,
        }
    }
    // strong generators of level 0 must contain those of every level
    let mut all: Vec<Permutation> = Vec::new();
    for level in &levels {
        for g in &level.generators {
            if !all.contains(g) {
                all.push(g.clone());
            }
        }
    }
    if let Some(first) = levels.first_mut() {
        first.generators = all;
        first.recompute_orbit(degree);
    }
    levels
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.parent[r] != r {
            r = self.parent[r];
        }
        let mut y = x;
        while self.parent[y] != r {
            let next = self.parent[y];
            self.parent[y] = r;
            y = next;
        }
        r
    }

    /// Returns true when two classes were merged.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi] = lo;
        true
    }
}

pub fn build_chain(degree: usize, generators: Vec<Permutation>) -> Result<PermutationGroup> {
    PermutationGroup::new(degree, generators)
}

fn sorted_unique(points: &[usize]) -> Vec<usize> {
    let mut v = points.to_vec();
    v.sort_unstable();
    v.dedup();
    v
}

/// `{g ∈ G : g(a) = a for all a ∈ A}`.
pub fn pointwise_stabilizer(g: &PermutationGroup, points: &[usize]) -> Result<PermutationGroup> {
    g.check_points(points)?;
    let points = sorted_unique(points);
    if points.is_empty() {
        return Ok(g.clone());
    }
    let chain = g.rebased(&points)?;
    let gens: Vec<Permutation> = chain
        .levels
        .get(points.len())
        .map(|l| l.generators.clone())
        .unwrap_or_default();
    PermutationGroup::new(g.degree, gens)
}

#[derive(Debug, Clone)]
pub struct SetwiseStabilizer {
    pub group: PermutationGroup,
    pub pointwise_order: u128,
    /// `|G_{A}| / |G_A|`, the order of the permutation group induced on `A`.
    pub quotient: u128,
}

/// `{g ∈ G : g(A) = A}` by backtracking over the chain with base starting
/// at `A`; a branch dies as soon as some base point of `A` leaves `A`.
pub fn setwise_stabilizer(g: &PermutationGroup, points: &[usize]) -> Result<SetwiseStabilizer> {
    g.check_points(points)?;
    let points = sorted_unique(points);
    let pointwise = pointwise_stabilizer(g, &points)?;
    let chain = g.rebased(&points)?;
    let in_set: Vec<bool> = (0..g.degree).map(|x| points.contains(&x)).collect();
    let mut prefixes = Vec::new();
    backtrack(&chain.levels, points.len(), 0, Permutation::identity(g.degree), &|p, b| in_set[p.apply(b)], &mut |p| {
        prefixes.push(p);
        false
    });
    let mut gens = pointwise.strong_generators();
    gens.extend(prefixes.iter().filter(|p| !p.is_identity()).cloned());
    let group = PermutationGroup::new(g.degree, gens)?;
    debug_assert_eq!(group.order(), prefixes.len() as u128 * pointwise.order());
    Ok(SetwiseStabilizer {
        pointwise_order: pointwise.order(),
        quotient: group.order() / pointwise.order(),
        group,
    })
}

/// Depth-first walk over the first `depth` chain levels. `accept(p, b)`
/// decides whether the partial product `p` may send base point `b` where
/// it does; `visit` receives complete prefixes and returns true to stop.
fn backtrack(
    levels: &[Level],
    depth: usize,
    i: usize,
    partial: Permutation,
    accept: &dyn Fn(&Permutation, usize) -> bool,
    visit: &mut dyn FnMut(Permutation) -> bool,
) -> bool {
    if i == depth {
        return visit(partial);
    }
    let level = &levels[i];
    for &beta in &level.orbit {
        let u = level.transversal[beta].as_ref().expect("orbit point");
        let p = partial.compose(u);
        if accept(&p, level.base_point) && backtrack(levels, depth, i + 1, p, accept, visit) {
            return true;
        }
    }
    false
}

/// Outcome of comparing `⟨G_A, G_B⟩` with `G_{A∩B}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatticeVerdict {
    pub a: Vec<usize>,
    pub b: Vec<usize>,
    pub generated_order: u128,
    pub intersection_stabilizer_order: u128,
    pub equal: bool,
    /// Points outside `A ∪ B`; the identity is only expected with a margin.
    pub margin: usize,
}

pub fn generated_equals_stabilizer(g: &PermutationGroup, a: &[usize], b: &[usize]) -> Result<LatticeVerdict> {
    let ga = pointwise_stabilizer(g, a)?;
    let gb = pointwise_stabilizer(g, b)?;
    let (a, b) = (sorted_unique(a), sorted_unique(b));
    let meet: Vec<usize> = a.iter().copied().filter(|x| b.contains(x)).collect();
    let gab = pointwise_stabilizer(g, &meet)?;
    Ok(join_verdict(g.degree, &ga, &gb, &gab, a, b))
}

/// Same comparison with the three stabilizers precomputed.
pub fn join_verdict(
    degree: usize,
    ga: &PermutationGroup,
    gb: &PermutationGroup,
    gab: &PermutationGroup,
    a: Vec<usize>,
    b: Vec<usize>,
) -> LatticeVerdict {
    let mut gens = ga.strong_generators();
    gens.extend(gb.strong_generators());
    let joined = PermutationGroup::new(degree, gens).expect("same degree");
    let union = a.iter().chain(b.iter()).copied().collect::<std::collections::BTreeSet<_>>();
    LatticeVerdict {
        generated_order: joined.order(),
        intersection_stabilizer_order: gab.order(),
        equal: joined.order() == gab.order(),
        margin: degree - union.len(),
        a,
        b,
    }
}

/// Some `g` fixing `fix` pointwise with `g(move) ⊆ target ∪ (move ∩ fix)`.
/// Candidates are tried in chain order with the identity first, so the
/// identity is returned whenever it qualifies.
pub fn neumann_witness(
    g: &PermutationGroup,
    fix: &[usize],
    moving: &[usize],
    target: &[usize],
) -> Result<Option<Permutation>> {
    g.check_points(fix)?;
    g.check_points(moving)?;
    g.check_points(target)?;
    let stab = pointwise_stabilizer(g, fix)?;
    let free: Vec<usize> = sorted_unique(moving).into_iter().filter(|x| !fix.contains(x)).collect();
    let chain = stab.rebased(&free)?;
    let mut allowed = vec![false; g.degree];
    for &t in target {
        allowed[t] = true;
    }
    for &m in moving {
        if fix.contains(&m) {
            allowed[m] = true;
        }
    }
    let mut found = None;
    backtrack(&chain.levels, free.len(), 0, Permutation::identity(g.degree), &|p, b| allowed[p.apply(b)], &mut |p| {
        found = Some(p);
        true
    });
    Ok(found)
}

/// Number of orbits on injective `k`-tuples.
pub fn orbit_count(g: &PermutationGroup, k: usize) -> Result<usize> {
    let n = g.degree;
    if k > 4 {
        return Err(PermError::Bounds(format!("tuple length {k} exceeds 4")));
    }
    let cells = (n as u128).pow(k as u32);
    if cells > 1_000_000 {
        return Err(PermError::Bounds(format!("{n}^{k} tuples exceed 10^6")));
    }
    if k > n {
        return Ok(0);
    }
    let cells = cells as usize;
    let decode = |mut idx: usize| -> Vec<usize> {
        let mut t = vec![0; k];
        for slot in t.iter_mut().rev() {
            *slot = idx % n;
            idx /= n;
        }
        t
    };
    let encode = |t: &[usize]| t.iter().fold(0usize, |acc, &x| acc * n + x);
    let injective = |t: &[usize]| (0..t.len()).all(|i| (i + 1..t.len()).all(|j| t[i] != t[j]));
    let gens = g.strong_generators();
    let mut uf = UnionFind::new(cells.max(1));
    for idx in 0..cells {
        let t = decode(idx);
        if !injective(&t) {
            continue;
        }
        for s in &gens {
            let image: Vec<usize> = t.iter().map(|&x| s.apply(x)).collect();
            uf.union(idx, encode(&image));
        }
    }
    Ok((0..cells)
        .filter(|&idx| injective(&decode(idx)) && uf.find(idx) == idx)
        .count())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrimitivityVerdict {
    pub primitive: bool,
    pub transitive: bool,
    /// A nontrivial block containing 0, or the orbit of 0 when the group is
    /// intransitive.
    pub witness: Option<Vec<usize>>,
}

pub fn is_primitive(g: &PermutationGroup) -> PrimitivityVerdict {
    let n = g.degree;
    let orbits = g.orbits();
    if orbits.len() > 1 {
        return PrimitivityVerdict {
            primitive: false,
            transitive: false,
            witness: orbits.into_iter().next(),
        };
    }
    let gens = g.strong_generators();
    for x in 1..n {
        let block = minimal_block(n, &gens, x);
        if block.len() < n {
            return PrimitivityVerdict {
                primitive: false,
                transitive: true,
                witness: Some(block),
            };
        }
    }
    PrimitivityVerdict {
        primitive: true,
        transitive: true,
        witness: None,
    }
}

/// Smallest block containing 0 and `x`.
pub fn minimal_block(n: usize, gens: &[Permutation], x: usize) -> Vec<usize> {
    let mut uf = UnionFind::new(n);
    let mut queue = VecDeque::new();
    uf.union(0, x);
    queue.push_back((0, x));
    while let Some((a, b)) = queue.pop_front() {
        for s in gens {
            let (c, d) = (uf.find(s.apply(a)), uf.find(s.apply(b)));
            if uf.union(c, d) {
                queue.push_back((c, d));
            }
        }
    }
    let root = uf.find(0);
    (0..n).filter(|&y| uf.find(y) == root).collect()
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use std::collections::HashSet;

    /// Breadth-first closure under the generators.
    pub(crate) fn closure(degree: usize, gens: &[Permutation]) -> HashSet<Permutation> {
        let mut seen = HashSet::new();
        let id = Permutation::identity(degree);
        seen.insert(id.clone());
        let mut queue = VecDeque::from([id]);
        while let Some(x) = queue.pop_front() {
            for s in gens {
                let y = s.compose(&x);
                if seen.insert(y.clone()) {
                    queue.push_back(y);
                }
            }
        }
        seen
    }

    fn perm(images: &[usize]) -> Permutation {
        Permutation::from_images(images.to_vec()).unwrap()
    }

    #[test]
    fn permutation_basics() {
        let p = Permutation::from_cycles(4, &[&[0, 1, 2]]).unwrap();
        assert_eq!(p.images(), &[1, 2, 0, 3]);
        assert!(p.compose(&p.inverse()).is_identity());
        assert_eq!(p.cycle_type(), CycleType(vec![3, 1]));
        assert!(Permutation::from_images(vec![0, 0]).is_err());
        let json = serde_json::to_string(&p).unwrap();
        assert_eq!(json, "[1,2,0,3]");
        assert!(serde_json::from_str::<Permutation>("[1,1]").is_err());
    }

    #[test]
    fn known_orders() {
        assert_eq!(PermutationGroup::symmetric(5).order(), 120);
        assert_eq!(PermutationGroup::cyclic(7).order(), 7);
        assert_eq!(PermutationGroup::dihedral(4).order(), 8);
        assert_eq!(PermutationGroup::symmetric(8).order(), 40320);
        assert_eq!(PermutationGroup::trivial(3).order(), 1);
        assert!(PermutationGroup::symmetric(6).verify());
    }

    #[test]
    fn degree_mismatch_is_an_error() {
        assert!(matches!(
            build_chain(4, vec![Permutation::identity(3)]),
            Err(PermError::DegreeMismatch { .. })
        ));
    }

    #[test]
    fn random_subgroups_of_sym7_match_closure() {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..25 {
            let gens: Vec<Permutation> = (0..2)
                .map(|_| {
                    let mut v: Vec<usize> = (0..7).collect();
                    v.shuffle(&mut rng);
                    perm(&v)
                })
                .collect();
            let g = build_chain(7, gens.clone()).unwrap();
            let all = closure(7, &gens);
            assert_eq!(g.order(), all.len() as u128);
            assert!(g.verify());
            let mut v: Vec<usize> = (0..7).collect();
            v.shuffle(&mut rng);
            let probe = perm(&v);
            assert_eq!(g.contains(&probe), all.contains(&probe));
            let listed: HashSet<Permutation> = g.elements().unwrap().into_iter().collect();
            assert_eq!(listed, all);
        }
    }

    #[test]
    fn pointwise_stabilizer_examples() {
        let s4 = PermutationGroup::symmetric(4);
        assert_eq!(pointwise_stabilizer(&s4, &[0]).unwrap().order(), 6);
        assert_eq!(pointwise_stabilizer(&s4, &[]).unwrap().order(), 24);
        assert_eq!(pointwise_stabilizer(&s4, &[0, 1, 2, 3]).unwrap().order(), 1);
        assert!(pointwise_stabilizer(&s4, &[4]).is_err());
    }

    #[test]
    fn stabilizers_compose() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let groups = [
            PermutationGroup::symmetric(7),
            PermutationGroup::dihedral(7),
            build_chain(7, vec![perm(&[1, 2, 0, 4, 5, 3, 6]), perm(&[3, 4, 5, 0, 1, 2, 6])]).unwrap(),
        ];
        for g in &groups {
            for _ in 0..20 {
                let a: Vec<usize> = (0..7).filter(|_| rng.gen_bool(0.3)).collect();
                let b: Vec<usize> = (0..7).filter(|_| rng.gen_bool(0.3)).collect();
                let union: Vec<usize> = a.iter().chain(&b).copied().collect();
                let direct = pointwise_stabilizer(g, &union).unwrap();
                let nested = pointwise_stabilizer(&pointwise_stabilizer(g, &a).unwrap(), &b).unwrap();
                assert_eq!(direct.order(), nested.order());
            }
        }
    }

    #[test]
    fn setwise_stabilizer_examples() {
        let s4 = PermutationGroup::symmetric(4);
        let st = setwise_stabilizer(&s4, &[0, 1]).unwrap();
        // direct enumeration of the 24 elements
        let direct = s4
            .elements()
            .unwrap()
            .into_iter()
            .filter(|g| [0, 1].iter().all(|&a| g.apply(a) < 2))
            .count();
        assert_eq!(st.group.order(), direct as u128);
        assert_eq!(st.group.order(), 4);
        assert_eq!(st.quotient, 2);
        let empty = setwise_stabilizer(&s4, &[]).unwrap();
        assert_eq!((empty.group.order(), empty.quotient), (24, 1));
        let single = setwise_stabilizer(&s4, &[2]).unwrap();
        assert_eq!((single.group.order(), single.quotient), (6, 1));
    }

    #[test]
    fn lattice_examples() {
        let s6 = PermutationGroup::symmetric(6);
        let v = generated_equals_stabilizer(&s6, &[0, 1], &[1, 2]).unwrap();
        assert!(v.equal);
        assert_eq!((v.generated_order, v.intersection_stabilizer_order), (120, 120));
        let v = generated_equals_stabilizer(&s6, &[0, 3], &[0, 3]).unwrap();
        assert!(v.equal);
        let s4 = PermutationGroup::symmetric(4);
        let v = generated_equals_stabilizer(&s4, &[0, 1], &[2, 3]).unwrap();
        assert!(!v.equal);
        assert_eq!((v.generated_order, v.intersection_stabilizer_order), (4, 24));
        assert_eq!(v.margin, 0);
    }

    #[test]
    fn neumann_examples() {
        let s6 = PermutationGroup::symmetric(6);
        let w = neumann_witness(&s6, &[0], &[1, 2], &[3, 4, 5]).unwrap().unwrap();
        assert!(w.fixes(0));
        assert!([1, 2].iter().all(|&m| [3, 4, 5].contains(&w.apply(m))));
        let id = neumann_witness(&s6, &[0], &[1, 2], &[1, 2, 3]).unwrap().unwrap();
        assert!(id.is_identity());
        let c5 = PermutationGroup::cyclic(5);
        assert_eq!(neumann_witness(&c5, &[0], &[1], &[2]).unwrap(), None);
        // brute force over the five elements
        assert!(!c5
            .elements()
            .unwrap()
            .iter()
            .any(|g| g.fixes(0) && g.apply(1) == 2));
    }

    #[test]
    fn neumann_matches_enumeration() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let groups = [
            PermutationGroup::symmetric(5),
            PermutationGroup::dihedral(6),
            PermutationGroup::cyclic(6),
            build_chain(6, vec![perm(&[1, 0, 3, 2, 4, 5]), perm(&[2, 3, 0, 1, 5, 4])]).unwrap(),
        ];
        for g in &groups {
            let n = g.degree();
            let elements = g.elements().unwrap();
            for _ in 0..60 {
                let pick = |rng: &mut rand_chacha::ChaCha8Rng, p: f64| -> Vec<usize> {
                    (0..n).filter(|_| rng.gen_bool(p)).collect()
                };
                let (fix, moving, target) = (pick(&mut rng, 0.25), pick(&mut rng, 0.3), pick(&mut rng, 0.5));
                let allowed = |x: usize| target.contains(&x) || (moving.contains(&x) && fix.contains(&x));
                let exists = elements
                    .iter()
                    .any(|e| fix.iter().all(|&f| e.fixes(f)) && moving.iter().all(|&m| allowed(e.apply(m))));
                let found = neumann_witness(g, &fix, &moving, &target).unwrap();
                assert_eq!(found.is_some(), exists);
                if let Some(w) = found {
                    assert!(g.contains(&w));
                    assert!(fix.iter().all(|&f| w.fixes(f)));
                    assert!(moving.iter().all(|&m| allowed(w.apply(m))));
                }
            }
        }
    }

    #[test]
    fn orbit_count_examples() {
        assert_eq!(orbit_count(&PermutationGroup::symmetric(5), 3).unwrap(), 1);
        assert_eq!(orbit_count(&PermutationGroup::dihedral(4), 2).unwrap(), 2);
        assert_eq!(orbit_count(&PermutationGroup::trivial(4), 1).unwrap(), 4);
        assert!(orbit_count(&PermutationGroup::symmetric(4), 5).is_err());
        assert!(orbit_count(&PermutationGroup::symmetric(40), 4).is_err());
        let g = build_chain(5, vec![perm(&[1, 0, 2, 3, 4])]).unwrap();
        assert_eq!(orbit_count(&g, 1).unwrap(), g.orbits().len());
    }

    #[test]
    fn primitivity_examples() {
        assert!(is_primitive(&PermutationGroup::symmetric(5)).primitive);
        let c4 = is_primitive(&PermutationGroup::cyclic(4));
        assert!(!c4.primitive);
        assert_eq!(c4.witness, Some(vec![0, 2]));
        let g = build_chain(4, vec![perm(&[1, 0, 2, 3]), perm(&[2, 3, 0, 1])]).unwrap();
        let v = is_primitive(&g);
        assert_eq!(v.witness, Some(vec![0, 1]));
        let intransitive = build_chain(4, vec![perm(&[1, 0, 2, 3])]).unwrap();
        let v = is_primitive(&intransitive);
        assert!(!v.transitive && !v.primitive);
        assert_eq!(v.witness, Some(vec![0, 1]));
        assert!(is_primitive(&PermutationGroup::cyclic(5)).primitive);
    }

    /// Exhaustive scan of set partitions of 0..n for G-invariant ones.
    fn has_nontrivial_block_system(g: &PermutationGroup) -> bool {
        let n = g.degree();
        fn partitions(n: usize) -> Vec<Vec<usize>> {
            // restricted growth strings
            let mut out = Vec::new();
            let mut cur = vec![0usize; n];
            fn rec(i: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
                if i == cur.len() {
                    out.push(cur.clone());
                    return;
                }
                for c in 0..=max + 1 {
                    cur[i] = c;
                    rec(i + 1, max.max(c), cur, out);
                }
            }
            if n > 0 {
                rec(1, 0, &mut cur, &mut out);
            }
            out
        }
        partitions(n).into_iter().any(|p| {
            let blocks = p.iter().max().unwrap() + 1;
            if blocks == 1 || blocks == n {
                return false;
            }
            g.strong_generators().iter().all(|s| {
                (0..n).all(|x| (0..n).all(|y| (p[x] == p[y]) == (p[s.apply(x)] == p[s.apply(y)])))
            })
        })
    }

    #[test]
    fn primitivity_matches_partition_scan() {
        let groups = vec![
            PermutationGroup::cyclic(4),
            PermutationGroup::cyclic(5),
            PermutationGroup::cyclic(6),
            PermutationGroup::dihedral(5),
            PermutationGroup::dihedral(6),
            PermutationGroup::symmetric(4),
            build_chain(6, vec![perm(&[1, 2, 0, 4, 5, 3]), perm(&[3, 4, 5, 0, 1, 2])]).unwrap(),
        ];
        for g in &groups {
            let v = is_primitive(g);
            assert!(v.transitive);
            assert_eq!(v.primitive, !has_nontrivial_block_system(g), "{:?}", g.generators());
        }
    }
}
