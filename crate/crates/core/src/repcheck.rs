//! Exact rational linear algebra for permutation representations on
//! injective tuples.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::permgroup::{pointwise_stabilizer, CycleType, PermError, Permutation, PermutationGroup};

pub type Q = BigRational;

pub const MAX_TUPLE_LEN: usize = 3;
pub const MAX_BASIS: usize = 2000;
pub const MAX_STABILIZER: u128 = 40320;
pub const MAX_INDEX: u128 = 5000;
pub const MAX_TAIL_DEPTH: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RepError {
    #[error(transparent)]
    Perm(#[from] PermError),
    #[error("{0}")]
    Bounds(String),
    #[error("permutation {0:?} is not in the group")]
    NotInGroup(Permutation),
    #[error("basis degree {basis} does not match group degree {group}")]
    DegreeMismatch { basis: usize, group: usize },
    #[error("dimension mismatch: {0}")]
    Shape(String),
}

pub type Result<T> = std::result::Result<T, RepError>;

fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

/// Dense matrix of reduced rationals, row-major.
#[derive(Clone, PartialEq, Eq)]
pub struct RationalMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Q>,
}

impl fmt::Debug for RationalMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|c| self.get(r, c).to_string()).collect();
            writeln!(f, "[{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl RationalMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            entries: vec![Q::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Q::one());
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Q>>) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(RepError::Shape("ragged rows".into()));
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            entries: rows.into_iter().flatten().collect(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> &Q {
        &self.entries[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Q) {
        self.entries[r * self.cols + c] = v;
    }

    pub fn mul(&self, other: &RationalMatrix) -> Result<RationalMatrix> {
        if self.cols != other.rows {
            return Err(RepError::Shape(format!(
                "{}x{} times {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if !b.is_zero() {
                        let idx = i * other.cols + j;
                        out.entries[idx] += a * b;
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn sub(&self, other: &RationalMatrix) -> Result<RationalMatrix> {
        self.zip(other, |a, b| a - b)
    }

    pub fn add(&self, other: &RationalMatrix) -> Result<RationalMatrix> {
        self.zip(other, |a, b| a + b)
    }

    fn zip(&self, other: &RationalMatrix, f: impl Fn(&Q, &Q) -> Q) -> Result<RationalMatrix> {
        if (self.rows, self.cols) != (other.rows, other.cols) {
            return Err(RepError::Shape("operands differ in shape".into()));
        }
        Ok(RationalMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().zip(&other.entries).map(|(a, b)| f(a, b)).collect(),
        })
    }

    pub fn scale(&self, s: &Q) -> RationalMatrix {
        RationalMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|a| a * s).collect(),
        }
    }

    pub fn transpose(&self) -> RationalMatrix {
        let mut out = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.set(c, r, self.get(r, c).clone());
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(Zero::is_zero)
    }

    pub fn trace(&self) -> Q {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i).clone()).sum()
    }

    pub fn frobenius_sq(&self) -> Q {
        self.entries.iter().map(|a| a * a).sum()
    }

    pub fn to_f64(&self) -> Vec<Vec<f64>> {
        (0..self.rows)
            .map(|r| (0..self.cols).map(|c| self.get(r, c).to_f64().unwrap_or(f64::NAN)).collect())
            .collect()
    }

    /// Reduced row echelon form and its pivot columns.
    pub fn rref(&self) -> (RationalMatrix, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..m.cols {
            if row == m.rows {
                break;
            }
            let Some(p) = (row..m.rows).find(|&r| !m.get(r, col).is_zero()) else {
                continue;
            };
            m.swap_rows(p, row);
            let inv = m.get(row, col).recip();
            for c in col..m.cols {
                let v = m.get(row, c) * &inv;
                m.set(row, c, v);
            }
            for r in 0..m.rows {
                if r == row || m.get(r, col).is_zero() {
                    continue;
                }
                let factor = m.get(r, col).clone();
                for c in col..m.cols {
                    let v = m.get(r, c) - &factor * m.get(row, c);
                    m.set(r, c, v);
                }
            }
            pivots.push(col);
            row += 1;
        }
        (m, pivots)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for c in 0..self.cols {
            self.entries.swap(a * self.cols + c, b * self.cols + c);
        }
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Columns form a basis of the null space.
    pub fn null_space(&self) -> RationalMatrix {
        let (r, pivots) = self.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        let mut out = Self::zeros(self.cols, free.len());
        for (j, &f) in free.iter().enumerate() {
            out.set(f, j, Q::one());
            for (i, &p) in pivots.iter().enumerate() {
                out.set(p, j, -r.get(i, f).clone());
            }
        }
        out
    }

    pub fn inverse(&self) -> Result<RationalMatrix> {
        if self.rows != self.cols {
            return Err(RepError::Shape("inverse of a non-square matrix".into()));
        }
        let n = self.rows;
        let mut aug = Self::zeros(n, 2 * n);
        for r in 0..n {
            for c in 0..n {
                aug.set(r, c, self.get(r, c).clone());
            }
            aug.set(r, n + r, Q::one());
        }
        let (red, pivots) = aug.rref();
        if pivots.len() < n || pivots[n - 1] >= n {
            return Err(RepError::Shape("singular matrix".into()));
        }
        let mut out = Self::zeros(n, n);
        for r in 0..n {
            for c in 0..n {
                out.set(r, c, red.get(r, n + c).clone());
            }
        }
        Ok(out)
    }

    fn vstack(blocks: &[RationalMatrix]) -> Result<RationalMatrix> {
        let cols = blocks.first().map_or(0, |b| b.cols);
        if blocks.iter().any(|b| b.cols != cols) {
            return Err(RepError::Shape("vstack of differing widths".into()));
        }
        Ok(RationalMatrix {
            rows: blocks.iter().map(|b| b.rows).sum(),
            cols,
            entries: blocks.iter().flat_map(|b| b.entries.iter().cloned()).collect(),
        })
    }
}

/// An orthogonal projector with exact rational entries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Projector {
    matrix: RationalMatrix,
}

impl Projector {
    /// Wraps `matrix` after checking `P² = P` and `P = Pᵀ` exactly.
    pub fn new(matrix: RationalMatrix) -> Result<Self> {
        let p = Self { matrix };
        if !p.is_orthogonal_projector() {
            return Err(RepError::Shape("matrix is not an orthogonal projector".into()));
        }
        Ok(p)
    }

    pub fn matrix(&self) -> &RationalMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> RationalMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows
    }

    /// Equal to the trace for a projector.
    pub fn rank(&self) -> usize {
        self.matrix.trace().to_integer().to_usize().expect("trace of a projector")
    }

    pub fn is_orthogonal_projector(&self) -> bool {
        let m = &self.matrix;
        m.rows == m.cols && *m == m.transpose() && m.mul(m).map(|sq| sq == *m).unwrap_or(false)
    }

    /// Projector onto a column space, `V (VᵀV)⁻¹ Vᵀ` for a basis `V`.
    pub fn onto_columns(v: &RationalMatrix) -> Result<Self> {
        if v.cols == 0 {
            return Ok(Self {
                matrix: RationalMatrix::zeros(v.rows, v.rows),
            });
        }
        let vt = v.transpose();
        let gram_inv = vt.mul(v)?.inverse()?;
        Ok(Self {
            matrix: v.mul(&gram_inv)?.mul(&vt)?,
        })
    }

    /// Projector onto the intersection of the ranges, via the exact null
    /// space of the stacked `I − P_i`.
    pub fn intersection(projectors: &[Projector]) -> Result<Self> {
        let Some(first) = projectors.first() else {
            return Err(RepError::Shape("empty intersection".into()));
        };
        let n = first.dim();
        let id = RationalMatrix::identity(n);
        let blocks = projectors
            .iter()
            .map(|p| id.sub(&p.matrix))
            .collect::<Result<Vec<_>>>()?;
        let stacked = RationalMatrix::vstack(&blocks)?;
        Self::onto_columns(&stacked.null_space())
    }
}

/// Injective `k`-tuples over `0..n` in lexicographic order.
#[derive(Debug, Clone)]
pub struct TupleBasis {
    n: usize,
    k: usize,
    tuples: Vec<Vec<usize>>,
    index: HashMap<Vec<usize>, usize>,
}

impl TupleBasis {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        if k > MAX_TUPLE_LEN {
            return Err(RepError::Bounds(format!("tuple length {k} exceeds {MAX_TUPLE_LEN}")));
        }
        let size: u128 = (0..k).map(|i| n.saturating_sub(i) as u128).product();
        if size > MAX_BASIS as u128 {
            return Err(RepError::Bounds(format!("basis size {size} exceeds {MAX_BASIS}")));
        }
        let mut tuples = Vec::with_capacity(size as usize);
        let mut cur = Vec::with_capacity(k);
        fn rec(n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if cur.len() == k {
                out.push(cur.clone());
                return;
            }
            for x in 0..n {
                if !cur.contains(&x) {
                    cur.push(x);
                    rec(n, k, cur, out);
                    cur.pop();
                }
            }
        }
        rec(n, k, &mut cur, &mut tuples);
        let index = tuples.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        Ok(Self { n, k, tuples, index })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }

    pub fn tuples(&self) -> &[Vec<usize>] {
        &self.tuples
    }

    pub fn position(&self, t: &[usize]) -> Option<usize> {
        self.index.get(t).copied()
    }

    fn image(&self, g: &Permutation, i: usize) -> usize {
        let t: Vec<usize> = self.tuples[i].iter().map(|&x| g.apply(x)).collect();
        self.index[&t]
    }
}

fn check_basis(g: &PermutationGroup, basis: &TupleBasis) -> Result<()> {
    if basis.n != g.degree() {
        return Err(RepError::DegreeMismatch {
            basis: basis.n,
            group: g.degree(),
        });
    }
    Ok(())
}

/// 0/1 matrix with `π(g) e_t = e_{g·t}`.
pub fn perm_rep_matrix(g: &PermutationGroup, elem: &Permutation, basis: &TupleBasis) -> Result<RationalMatrix> {
    check_basis(g, basis)?;
    if !g.contains(elem) {
        return Err(RepError::NotInGroup(elem.clone()));
    }
    let mut m = RationalMatrix::zeros(basis.len(), basis.len());
    for t in 0..basis.len() {
        m.set(basis.image(elem, t), t, Q::one());
    }
    Ok(m)
}

/// Orbits of the group on basis vectors, as basis indices.
fn tuple_orbits(h: &PermutationGroup, basis: &TupleBasis) -> Vec<usize> {
    let gens = h.strong_generators();
    let mut label: Vec<usize> = (0..basis.len()).collect();
    let mut changed = true;
    // label = least index in the orbit
    while changed {
        changed = false;
        for s in &gens {
            for t in 0..basis.len() {
                let u = basis.image(s, t);
                let m = label[t].min(label[u]);
                if label[t] != m || label[u] != m {
                    label[t] = m;
                    label[u] = m;
                    changed = true;
                }
            }
        }
    }
    label
}

/// Averaging projector of `G_A`, computed orbit by orbit: averaging a basis
/// vector over `G_A` spreads it uniformly over its orbit.
pub fn invariant_projector(g: &PermutationGroup, a: &[usize], basis: &TupleBasis) -> Result<Projector> {
    check_basis(g, basis)?;
    let h = pointwise_stabilizer(g, a)?;
    if h.order() > MAX_STABILIZER {
        return Err(RepError::Bounds(format!(
            "stabilizer order {} exceeds {MAX_STABILIZER}",
            h.order()
        )));
    }
    Ok(orbit_projector(&h, basis))
}

fn orbit_projector(h: &PermutationGroup, basis: &TupleBasis) -> Projector {
    let label = tuple_orbits(h, basis);
    let mut sizes: HashMap<usize, i64> = HashMap::new();
    for &l in &label {
        *sizes.entry(l).or_default() += 1;
    }
    let mut m = RationalMatrix::zeros(basis.len(), basis.len());
    for s in 0..basis.len() {
        for t in 0..basis.len() {
            if label[s] == label[t] {
                m.set(s, t, Q::new(BigInt::one(), BigInt::from(sizes[&label[t]])));
            }
        }
    }
    Projector { matrix: m }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DissociationDefect {
    #[serde(serialize_with = "ser_rational")]
    pub frobenius_sq: Q,
    pub spectral: f64,
}

pub fn ser_rational<S: Serializer>(v: &Q, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&v.to_string())
}

/// `‖p_A p_B − p_{A∩B}‖` as an exact squared Frobenius norm and a floating
/// spectral norm.
pub fn dissociation_defect(
    g: &PermutationGroup,
    a: &[usize],
    b: &[usize],
    basis: &TupleBasis,
) -> Result<DissociationDefect> {
    let meet: Vec<usize> = a.iter().copied().filter(|x| b.contains(x)).collect();
    let pa = invariant_projector(g, a, basis)?;
    let pb = invariant_projector(g, b, basis)?;
    let pab = invariant_projector(g, &meet, basis)?;
    let m = pa.matrix.mul(&pb.matrix)?.sub(&pab.matrix)?;
    Ok(DissociationDefect {
        frobenius_sq: m.frobenius_sq(),
        spectral: spectral_norm(&m),
    })
}

/// Largest singular value by power iteration on `MᵀM`.
pub fn spectral_norm(m: &RationalMatrix) -> f64 {
    if m.is_zero() {
        return 0.0;
    }
    let a = m.to_f64();
    let (rows, cols) = (m.rows, m.cols);
    // fixed, generic start vector
    let mut v: Vec<f64> = (0..cols).map(|i| 1.0 + ((i + 1) as f64).sin() * 0.5).collect();
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut lambda = 0.0;
    for _ in 0..100_000 {
        let nv = norm(&v);
        v.iter_mut().for_each(|x| *x /= nv);
        let av: Vec<f64> = (0..rows).map(|r| (0..cols).map(|c| a[r][c] * v[c]).sum()).collect();
        let atav: Vec<f64> = (0..cols).map(|c| (0..rows).map(|r| a[r][c] * av[r]).sum()).collect();
        let next = atav.iter().zip(&v).map(|(x, y)| x * y).sum::<f64>();
        v = atav;
        if (next - lambda).abs() <= 1e-12 * next.abs().max(1.0) {
            lambda = next;
            break;
        }
        lambda = next;
    }
    lambda.max(0.0).sqrt()
}

/// Projector onto `∩ H_C` over `C ⊇ A` missing at most `m` points.
pub fn tail_projector(g: &PermutationGroup, a: &[usize], m: usize, basis: &TupleBasis) -> Result<Projector> {
    check_basis(g, basis)?;
    if m > MAX_TAIL_DEPTH {
        return Err(RepError::Bounds(format!("tail depth {m} exceeds {MAX_TAIL_DEPTH}")));
    }
    let outside: Vec<usize> = (0..g.degree()).filter(|x| !a.contains(x)).collect();
    let mut projectors = Vec::new();
    for removed in subsets_up_to(&outside, m) {
        let c: Vec<usize> = (0..g.degree()).filter(|x| !removed.contains(x)).collect();
        projectors.push(invariant_projector(g, &c, basis)?);
    }
    Projector::intersection(&projectors)
}

fn subsets_up_to(points: &[usize], m: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    let mut frontier = vec![(Vec::new(), 0usize)];
    for _ in 0..m {
        let mut next = Vec::new();
        for (s, start) in frontier {
            for i in start..points.len() {
                let mut t: Vec<usize> = s.clone();
                t.push(points[i]);
                out.push(t.clone());
                next.push((t, i + 1));
            }
        }
        frontier = next;
    }
    out
}

/// Rational values keyed by cycle type, ordered lexicographically on the
/// decreasing part lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassFunction {
    pub values: BTreeMap<CycleType, Q>,
}

impl ClassFunction {
    pub fn values_in_order(&self) -> Vec<Q> {
        self.values.values().cloned().collect()
    }

    pub fn as_integers(&self) -> Option<Vec<i64>> {
        self.values
            .values()
            .map(|v| if v.is_integer() { v.to_integer().to_i64() } else { None })
            .collect()
    }
}

impl Serialize for ClassFunction {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        let mut map = s.serialize_map(Some(self.values.len()))?;
        for (k, v) in &self.values {
            map.serialize_entry(&k.to_string(), &v.to_string())?;
        }
        map.end()
    }
}

/// First element of each cycle type, in cycle-type order.
fn class_representatives(g: &PermutationGroup) -> Result<BTreeMap<CycleType, Permutation>> {
    let mut reps = BTreeMap::new();
    for e in g.elements()? {
        reps.entry(e.cycle_type()).or_insert(e);
    }
    Ok(reps)
}

/// Character of the action on left cosets of `G_A`:
/// `χ(g) = #{x ∈ G : x⁻¹ g x ∈ G_A} / |G_A|`.
pub fn induced_character(g: &PermutationGroup, a: &[usize]) -> Result<ClassFunction> {
    let h = pointwise_stabilizer(g, a)?;
    let index = g.order() / h.order();
    if index > MAX_INDEX {
        return Err(RepError::Bounds(format!("index {index} exceeds {MAX_INDEX}")));
    }
    let elements = g.elements()?;
    let inverses: Vec<Permutation> = elements.iter().map(Permutation::inverse).collect();
    let mut values = BTreeMap::new();
    for (ct, rep) in class_representatives(g)? {
        let hits = elements
            .iter()
            .zip(&inverses)
            .filter(|(x, xi)| h.contains(&xi.compose(&rep).compose(x)))
            .count();
        values.insert(ct, Q::new(BigInt::from(hits), BigInt::from(h.order())));
    }
    Ok(ClassFunction { values })
}

/// Trace of `π(g)` on the basis, i.e. the number of fixed tuples.
pub fn character_of_tuple_action(g: &PermutationGroup, basis: &TupleBasis) -> Result<ClassFunction> {
    check_basis(g, basis)?;
    let mut values = BTreeMap::new();
    for (ct, rep) in class_representatives(g)? {
        let fixed = basis.tuples.iter().filter(|t| t.iter().all(|&x| rep.fixes(x))).count();
        values.insert(ct, q(fixed as i64));
    }
    Ok(ClassFunction { values })
}


#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Q {
        Q::new(BigInt::from(n), BigInt::from(d))
    }

    /// Dense averaging over an explicit element list.
    fn averaging_oracle(g: &PermutationGroup, a: &[usize], basis: &TupleBasis) -> RationalMatrix {
        let h = pointwise_stabilizer(g, a).unwrap();
        let elements = h.elements().unwrap();
        let mut sum = RationalMatrix::zeros(basis.len(), basis.len());
        for e in &elements {
            sum = sum.add(&perm_rep_matrix(g, e, basis).unwrap()).unwrap();
        }
        sum.scale(&r(1, elements.len() as i64))
    }

    #[test]
    fn perm_rep_examples() {
        let s3 = PermutationGroup::symmetric(3);
        let basis = TupleBasis::new(3, 1).unwrap();
        let id = perm_rep_matrix(&s3, &Permutation::identity(3), &basis).unwrap();
        assert_eq!(id, RationalMatrix::identity(3));
        let swap = Permutation::from_cycles(3, &[&[0, 1]]).unwrap();
        let m = perm_rep_matrix(&s3, &swap, &basis).unwrap();
        let expected = RationalMatrix::from_rows(vec![
            vec![q(0), q(1), q(0)],
            vec![q(1), q(0), q(0)],
            vec![q(0), q(0), q(1)],
        ])
        .unwrap();
        assert_eq!(m, expected);
        assert!(TupleBasis::new(20, 4).is_err());
        assert!(TupleBasis::new(20, 3).is_err());
        let c3 = PermutationGroup::cyclic(3);
        assert!(matches!(perm_rep_matrix(&c3, &swap, &basis), Err(RepError::NotInGroup(_))));
    }

    #[test]
    fn perm_rep_is_multiplicative() {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let s4 = PermutationGroup::symmetric(4);
        let basis = TupleBasis::new(4, 2).unwrap();
        assert_eq!(basis.len(), 12);
        for _ in 0..10 {
            let mut pick = || {
                let mut v: Vec<usize> = (0..4).collect();
                v.shuffle(&mut rng);
                Permutation::from_images(v).unwrap()
            };
            let (g, h) = (pick(), pick());
            let lhs = perm_rep_matrix(&s4, &g.compose(&h), &basis).unwrap();
            let rhs = perm_rep_matrix(&s4, &g, &basis)
                .unwrap()
                .mul(&perm_rep_matrix(&s4, &h, &basis).unwrap())
                .unwrap();
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn invariant_projector_examples() {
        let s3 = PermutationGroup::symmetric(3);
        let basis = TupleBasis::new(3, 1).unwrap();
        let full = invariant_projector(&s3, &[0, 1, 2], &basis).unwrap();
        assert_eq!(*full.matrix(), RationalMatrix::identity(3));
        let p = invariant_projector(&s3, &[0], &basis).unwrap();
        assert_eq!(p.rank(), 2);
        let h = r(1, 2);
        let expected = RationalMatrix::from_rows(vec![
            vec![q(1), q(0), q(0)],
            vec![q(0), h.clone(), h.clone()],
            vec![q(0), h.clone(), h],
        ])
        .unwrap();
        assert_eq!(*p.matrix(), expected);
        let s5 = PermutationGroup::symmetric(5);
        let b5 = TupleBasis::new(5, 1).unwrap();
        let constants = invariant_projector(&s5, &[], &b5).unwrap();
        assert_eq!(constants.rank(), 1);
        assert_eq!(*constants.matrix().get(2, 3), r(1, 5));
    }

    #[test]
    fn projectors_match_dense_averaging() {
        for n in 3..=5 {
            let g = PermutationGroup::symmetric(n);
            for k in 1..=2 {
                let basis = TupleBasis::new(n, k).unwrap();
                for a in [vec![], vec![0], vec![1, 2], vec![0, 2, 3]] {
                    if a.iter().any(|&x| x >= n) {
                        continue;
                    }
                    let p = invariant_projector(&g, &a, &basis).unwrap();
                    assert_eq!(*p.matrix(), averaging_oracle(&g, &a, &basis));
                    assert!(p.is_orthogonal_projector());
                    let h = pointwise_stabilizer(&g, &a).unwrap();
                    for s in h.strong_generators() {
                        let pi = perm_rep_matrix(&g, &s, &basis).unwrap();
                        assert_eq!(pi.mul(p.matrix()).unwrap(), p.matrix().mul(&pi).unwrap());
                    }
                }
            }
        }
        let d5 = PermutationGroup::dihedral(5);
        let basis = TupleBasis::new(5, 2).unwrap();
        let p = invariant_projector(&d5, &[0], &basis).unwrap();
        assert_eq!(*p.matrix(), averaging_oracle(&d5, &[0], &basis));
    }

    #[test]
    fn stabilizer_bound_is_enforced() {
        let s9 = PermutationGroup::symmetric(9);
        let basis = TupleBasis::new(9, 1).unwrap();
        assert!(matches!(invariant_projector(&s9, &[], &basis), Err(RepError::Bounds(_))));
        assert!(invariant_projector(&s9, &[0], &basis).is_ok());
    }

    #[test]
    fn defect_examples() {
        let s3 = PermutationGroup::symmetric(3);
        let basis = TupleBasis::new(3, 1).unwrap();
        let same = dissociation_defect(&s3, &[0], &[0], &basis).unwrap();
        assert!(same.frobenius_sq.is_zero() && same.spectral == 0.0);
        let nested = dissociation_defect(&s3, &[0], &[0, 1], &basis).unwrap();
        assert!(nested.frobenius_sq.is_zero());
        let d = dissociation_defect(&s3, &[0], &[1], &basis).unwrap();
        assert_eq!(d.frobenius_sq, r(1, 4));
        assert!((d.spectral - 0.5).abs() < 1e-9);
        let swapped = dissociation_defect(&s3, &[1], &[0], &basis).unwrap();
        assert_eq!(swapped.frobenius_sq, d.frobenius_sq);
    }

    #[test]
    fn tail_projector_examples() {
        let s4 = PermutationGroup::symmetric(4);
        for k in 1..=2 {
            let basis = TupleBasis::new(4, k).unwrap();
            let t0 = tail_projector(&s4, &[0], 0, &basis).unwrap();
            assert_eq!(*t0.matrix(), RationalMatrix::identity(basis.len()));
        }
        let basis = TupleBasis::new(4, 1).unwrap();
        let t = tail_projector(&s4, &[0], 1, &basis).unwrap();
        assert!(t.is_orthogonal_projector());
        // fixed vectors of every C-stabilizer: C ⊇ {0} missing one point
        // fixes a 3-set pointwise, so each H_C is everything
        assert_eq!(t.rank(), 4);
        let t2 = tail_projector(&s4, &[0], 2, &basis).unwrap();
        // oracle: intersect fixed spaces of G_C by brute-force kernel of stacked π(g) − I
        let mut blocks = Vec::new();
        for removed in subsets_up_to(&[1, 2, 3], 2) {
            let c: Vec<usize> = (0..4).filter(|x| !removed.contains(x)).collect();
            let h = pointwise_stabilizer(&s4, &c).unwrap();
            for e in h.elements().unwrap() {
                blocks.push(
                    perm_rep_matrix(&s4, &e, &basis)
                        .unwrap()
                        .sub(&RationalMatrix::identity(4))
                        .unwrap(),
                );
            }
        }
        let kernel_dim = RationalMatrix::vstack(&blocks).unwrap().null_space().cols();
        assert_eq!(t2.rank(), kernel_dim);
        assert_eq!(t2.rank(), 2);
        let pa = invariant_projector(&s4, &[0], &basis).unwrap();
        assert_eq!(t2.matrix().mul(pa.matrix()).unwrap(), *pa.matrix());
        assert!(tail_projector(&s4, &[0], 3, &basis).is_err());
    }

    #[test]
    fn intersection_and_null_space() {
        let m = RationalMatrix::from_rows(vec![vec![q(1), q(2), q(3)], vec![q(2), q(4), q(6)]]).unwrap();
        assert_eq!(m.rank(), 1);
        let ns = m.null_space();
        assert_eq!(ns.cols(), 2);
        assert!(m.mul(&ns).unwrap().is_zero());
        let p = Projector::onto_columns(&ns).unwrap();
        assert!(p.is_orthogonal_projector());
        assert_eq!(p.rank(), 2);
        assert!(Projector::new(RationalMatrix::from_rows(vec![vec![q(2)]]).unwrap()).is_err());
    }

    #[test]
    fn character_examples() {
        let s3 = PermutationGroup::symmetric(3);
        let chi = induced_character(&s3, &[0]).unwrap();
        assert_eq!(chi.as_integers().unwrap(), vec![3, 1, 0]);
        let trivial = induced_character(&s3, &[]).unwrap();
        assert!(trivial.values.values().all(|v| v.is_one()));
        let s4 = PermutationGroup::symmetric(4);
        let chi = induced_character(&s4, &[0, 1]).unwrap();
        let keys: Vec<String> = chi.values.keys().map(|k| k.to_string()).collect();
        assert_eq!(keys, ["(1,1,1,1)", "(2,1,1)", "(2,2)", "(3,1)", "(4)"]);
        assert_eq!(chi.as_integers().unwrap(), vec![12, 2, 0, 0, 0]);
        let tuple = character_of_tuple_action(&s4, &TupleBasis::new(4, 2).unwrap()).unwrap();
        assert_eq!(tuple, chi);
        let k1 = character_of_tuple_action(&s4, &TupleBasis::new(4, 1).unwrap()).unwrap();
        assert_eq!(k1.as_integers().unwrap(), vec![4, 2, 0, 1, 0]);
        let json = serde_json::to_string(&chi).unwrap();
        assert_eq!(json, r#"{"(1,1,1,1)":"12","(2,1,1)":"2","(2,2)":"0","(3,1)":"0","(4)":"0"}"#);
    }
}
