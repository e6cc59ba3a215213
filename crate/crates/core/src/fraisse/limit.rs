//! Chain construction of finite segments of a Fraïssé limit.
//!
//! A task asks for a point realizing a one-point extension template over a
//! set `S` of at most two points of the current segment. Tasks are created
//! once per subset (so they never repeat) and run first-in first-out, one
//! task per step.
//! A task already realized by an existing point is logged with that
//! witness; otherwise a point is added, related to `S` as the template says
//! and to everything else at random among admissible labels, falling back to
//! the class's canonical amalgam when the random choice gets stuck.

use std::collections::{BTreeMap, HashMap, VecDeque};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::checks::{check_fap, check_sap};
use super::class::{ClassKind, ClassSpec};
use super::member::{Member, Shape};
use super::{extensions, FraisseError, Result};
use crate::diversity::diversity_amalgam;
use crate::metric::{metric_amalgam, BaseMap};

/// Segment size at which pair classes stop adding points.
pub const MAX_SEGMENT_POINTS: usize = 2000;

/// Size bound of the amalgamation check run before building.
const WORKING_BOUND: usize = 3;

/// Node budget of the randomized search for a new diversity point.
const RANDOM_SEARCH_BUDGET: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Task {
    /// Points of `S`, ascending.
    pub base: [u32; 2],
    pub base_len: u8,
    /// Index into the template table.
    pub template: u32,
}

impl Task {
    pub fn base_points(&self) -> Vec<usize> {
        self.base[..self.base_len as usize].iter().map(|&p| p as usize).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LogEntry {
    pub step: u32,
    pub task: Task,
    pub witness: u32,
    /// Whether the witness was added for this task.
    pub added: bool,
}

#[derive(Debug, Clone)]
pub struct LimitApproximation {
    spec: ClassSpec,
    seed: u64,
    steps: usize,
    current: Member,
    pending: VecDeque<Task>,
    blocked: Vec<Task>,
    log: Vec<LogEntry>,
    templates: Vec<Member>,
    by_type: HashMap<Vec<u8>, Vec<u32>>,
    rng: ChaCha8Rng,
}

/// The one-point seed every construction starts from.
pub fn seed_structure(kind: &ClassKind) -> Member {
    Member::empty(kind.shape(), 1)
}

pub fn build_limit(spec: &ClassSpec, steps: usize, seed: u64) -> Result<LimitApproximation> {
    spec.kind.validate()?;
    let working = ClassSpec::new(spec.kind.clone(), WORKING_BOUND.min(spec.kind.max_points()))?;
    let report = if spec.kind.is_free() { check_fap(&working)? } else { check_sap(&working)? };
    if !report.passed() {
        return Err(FraisseError::NotAmalgamationClass(format!(
            "{} fails {:?} at size {}",
            spec.kind.name(),
            report.property,
            WORKING_BOUND
        )));
    }
    if spec.kind.is_custom() {
        return Err(FraisseError::BadClass("the builder needs a built-in class".into()));
    }
    let mut l = LimitApproximation {
        spec: spec.clone(),
        seed,
        steps: 0,
        current: seed_structure(&spec.kind),
        pending: VecDeque::new(),
        blocked: Vec::new(),
        log: Vec::new(),
        templates: Vec::new(),
        by_type: HashMap::new(),
        rng: ChaCha8Rng::seed_from_u64(seed),
    };
    // The empty set's only template is a single point, which the seed
    // already realizes.
    l.enqueue_for(&[0]);
    l.run(steps);
    Ok(l)
}

impl LimitApproximation {
    pub fn spec(&self) -> &ClassSpec {
        &self.spec
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn current(&self) -> &Member {
        &self.current
    }

    pub fn pending(&self) -> usize {
        self.pending.len()
    }

    /// Tasks that needed a new point when the segment was full.
    pub fn blocked(&self) -> usize {
        self.blocked.len()
    }

    pub fn log(&self) -> &[LogEntry] {
        &self.log
    }

    pub fn template(&self, id: u32) -> &Member {
        &self.templates[id as usize]
    }

    /// No pending or blocked tasks remain.
    pub fn is_complete(&self) -> bool {
        self.pending.is_empty() && self.blocked.is_empty()
    }

    fn max_points(&self) -> usize {
        match self.spec.kind.shape() {
            Shape::Pairs => MAX_SEGMENT_POINTS,
            Shape::Subsets => self.spec.kind.max_points(),
        }
    }

    fn templates_over(&mut self, base: &[usize]) -> Vec<u32> {
        let ty = self.current.restrict(base);
        let key = ty.code();
        if let Some(ids) = self.by_type.get(&key) {
            return ids.clone();
        }
        let mut ids = Vec::new();
        for ext in extensions(&self.spec.kind, &ty, 1) {
            ids.push(self.templates.len() as u32);
            self.templates.push(ext);
        }
        self.by_type.insert(key, ids.clone());
        ids
    }

    fn enqueue_for(&mut self, base: &[usize]) {
        let mut pts = [0u32; 2];
        for (k, &p) in base.iter().enumerate() {
            pts[k] = p as u32;
        }
        for template in self.templates_over(base) {
            self.pending.push_back(Task {
                base: pts,
                base_len: base.len() as u8,
                template,
            });
        }
    }

    /// Runs `steps` more tasks, stopping early once the queue is empty.
    pub fn run(&mut self, steps: usize) {
        for _ in 0..steps {
            let Some(task) = self.pending.pop_front() else {
                break;
            };
            self.steps += 1;
            self.step(task);
        }
    }

    fn step(&mut self, task: Task) {
        let base = task.base_points();
        if let Some(w) = self.witness(&base, task.template) {
            self.log.push(LogEntry {
                step: self.steps as u32,
                task,
                witness: w as u32,
                added: false,
            });
            return;
        }
        if self.current.size >= self.max_points() {
            self.blocked.push(task);
            return;
        }
        let template = self.templates[task.template as usize].clone();
        let next = self
            .random_extension(&base, &template)
            .unwrap_or_else(|| self.canonical_extension(&base, &template));
        debug_assert!(last_point_ok(&self.spec.kind, &next));
        self.current = next;
        let x = self.current.size - 1;
        self.log.push(LogEntry {
            step: self.steps as u32,
            task,
            witness: x as u32,
            added: true,
        });
        self.enqueue_for(&[x]);
        for y in 0..x {
            self.enqueue_for(&[y, x]);
        }
    }

    /// A point outside `base` whose type over `base` is the template.
    fn witness(&self, base: &[usize], template: u32) -> Option<usize> {
        let t = &self.templates[template as usize];
        let k = base.len();
        (0..self.current.size)
            .filter(|x| !base.contains(x))
            .find(|&x| realizes(&self.current, base, x, t, k))
    }

    fn random_extension(&mut self, base: &[usize], template: &Member) -> Option<Member> {
        match self.spec.kind.shape() {
            Shape::Pairs => self.random_pair_point(base, template),
            Shape::Subsets => self.random_subset_point(base, template),
        }
    }

    /// Greedy random labels towards the non-base points, each drawn from
    /// the labels admissible given those already chosen.
    fn random_pair_point(&mut self, base: &[usize], template: &Member) -> Option<Member> {
        let kind = self.spec.kind.clone();
        let cur = &self.current;
        let n = cur.size;
        let k = base.len();
        let mut label: Vec<Option<u8>> = vec![None; n];
        let mut assigned: Vec<usize> = Vec::with_capacity(n);
        for (i, &s) in base.iter().enumerate() {
            label[s] = Some(template.pair(i, k));
            assigned.push(s);
        }
        let mut order: Vec<usize> = (0..n).filter(|y| !base.contains(y)).collect();
        order.shuffle(&mut self.rng);
        let clique = kind.clique_order();
        let mut feasible = Vec::new();
        for y in order {
            feasible.clear();
            for v in kind.min_label()..=kind.max_label() {
                let triangles = assigned
                    .iter()
                    .all(|&z| kind.triangle_ok(cur.pair(y, z), v, label[z].expect("assigned")));
                let unit_clique = v == 1
                    && clique.is_some_and(|r| {
                        let common: Vec<usize> = assigned
                            .iter()
                            .copied()
                            .filter(|&z| label[z] == Some(1) && cur.pair(y, z) == 1)
                            .collect();
                        has_unit_clique(cur, &common, r - 2)
                    });
                if triangles && !unit_clique {
                    feasible.push(v);
                }
            }
            if feasible.is_empty() {
                return None;
            }
            label[y] = Some(feasible[self.rng.gen_range(0..feasible.len())]);
            assigned.push(y);
        }
        let mut next = cur.clone();
        next.push_point();
        for (y, v) in label.into_iter().enumerate() {
            next.set_pair(y, n, v.expect("every point labelled"));
        }
        Some(next)
    }

    /// Randomized depth-first fill of the new point's subsets, in mask
    /// order, with a node budget.
    fn random_subset_point(&mut self, base: &[usize], template: &Member) -> Option<Member> {
        let kind = self.spec.kind.clone();
        let n = self.current.size;
        let mut m = self.current.clone();
        m.push_point();
        // Masks inside `base ∪ {new}` are fixed by the template.
        let mut fixed = vec![None; m.labels.len()];
        let mut pts = base.to_vec();
        pts.push(n);
        for (tmask, slot) in fixed_masks(&pts, template) {
            fixed[slot] = Some(tmask);
        }
        let slots: Vec<usize> = (1 << n..1 << (n + 1)).filter(|s: &usize| s.count_ones() >= 2).collect();
        let mut budget = RANDOM_SEARCH_BUDGET;
        let labels: Vec<u8> = (kind.min_label()..=kind.max_label()).collect();
        fn go(
            kind: &ClassKind,
            m: &mut Member,
            slots: &[usize],
            idx: usize,
            fixed: &[Option<u8>],
            labels: &[u8],
            rng: &mut ChaCha8Rng,
            budget: &mut usize,
        ) -> bool {
            if idx == slots.len() {
                return true;
            }
            if *budget == 0 {
                return false;
            }
            *budget -= 1;
            let s = slots[idx];
            let choices: Vec<u8> = match fixed[s] {
                Some(v) => vec![v],
                None => {
                    let mut c = labels.to_vec();
                    c.shuffle(rng);
                    c
                }
            };
            for v in choices {
                m.labels[s] = v;
                if kind.slot_ok(m, s) && go(kind, m, slots, idx + 1, fixed, labels, rng, budget) {
                    return true;
                }
            }
            m.labels[s] = 0;
            false
        }
        go(&kind, &mut m, &slots, 0, &fixed, &labels, &mut self.rng, &mut budget).then_some(m)
    }

    fn canonical_extension(&self, base: &[usize], template: &Member) -> Member {
        let kind = &self.spec.kind;
        let d = kind.max_label() as u64;
        let n = self.current.size;
        let k = base.len();
        let map = BaseMap::new(base.to_vec(), (0..k).collect());
        let next = if kind.is_free() || k == 0 {
            let mut next = self.current.clone();
            next.push_point();
            for (i, &s) in base.iter().enumerate() {
                next.set_pair(s, n, template.pair(i, k));
            }
            next
        } else if kind.is_metric() {
            let glued = metric_amalgam(&self.current.to_metric(), &template.to_metric(), &map)
                .expect("template agrees with the segment on its base");
            Member::from_metric(&glued.space.capped(d))
        } else {
            let glued = diversity_amalgam(&self.current.to_diversity(), &template.to_diversity(), &map)
                .expect("template agrees with the segment on its base");
            Member::from_diversity(&glued.diversity.capped(d))
        };
        assert!(last_point_ok(kind, &next), "canonical amalgam left the class");
        next
    }

    /// Exhaustive check of the extension property over every subset of
    /// at most two points, and of class membership of every prefix.
    pub fn audit(&self) -> TaskAudit {
        let kind = &self.spec.kind;
        let cur = &self.current;
        let n = cur.size;
        let mut audit = TaskAudit {
            points: n,
            members_at_every_step: prefixes_are_members(kind, cur),
            log_witnesses_valid: true,
            tasks: 0,
            realized: 0,
            first_missing: None,
        };
        for entry in &self.log {
            let base = entry.task.base_points();
            let w = entry.witness as usize;
            let t = &self.templates[entry.task.template as usize];
            if w >= n || base.contains(&w) || !realizes(cur, &base, w, t, base.len()) {
                audit.log_witnesses_valid = false;
            }
        }
        let mut bases: Vec<Vec<usize>> = (0..n).map(|x| vec![x]).collect();
        for y in 0..n {
            for x in y + 1..n {
                bases.push(vec![y, x]);
            }
        }
        for base in bases {
            let ty = cur.restrict(&base);
            let mut seen: BTreeMap<Vec<u8>, ()> = BTreeMap::new();
            for x in (0..n).filter(|x| !base.contains(x)) {
                let mut pts = base.clone();
                pts.push(x);
                seen.insert(cur.restrict(&pts).labels, ());
            }
            for t in extensions(kind, &ty, 1) {
                audit.tasks += 1;
                if seen.contains_key(&t.labels) {
                    audit.realized += 1;
                } else if audit.first_missing.is_none() {
                    audit.first_missing = Some((base.clone(), t));
                }
            }
        }
        audit
    }

    pub fn to_json(&self) -> serde_json::Value {
        let added: Vec<serde_json::Value> = self
            .log
            .iter()
            .filter(|e| e.added)
            .map(|e| {
                serde_json::json!({
                    "step": e.step,
                    "base": e.task.base_points(),
                    "template": self.templates[e.task.template as usize].labels,
                    "point": e.witness,
                })
            })
            .collect();
        serde_json::json!({
            "class": self.spec.kind,
            "class_name": self.spec.kind.name(),
            "seed": self.seed,
            "steps": self.steps,
            "size": self.current.size,
            "structure": self.current,
            "pending": self.pending.len(),
            "blocked": self.blocked.len(),
            "complete": self.is_complete(),
            "tasks_logged": self.log.len(),
            "realized_by_existing": self.log.iter().filter(|e| !e.added).count(),
            "added": added,
        })
    }
}

fn has_unit_clique(m: &Member, pool: &[usize], need: usize) -> bool {
    if need == 0 {
        return true;
    }
    for (i, &h) in pool.iter().enumerate() {
        let rest: Vec<usize> = pool[i + 1..].iter().copied().filter(|&g| m.pair(g, h) == 1).collect();
        if has_unit_clique(m, &rest, need - 1) {
            return true;
        }
    }
    false
}

/// Template masks containing the new point, with the segment slot each one
/// lands on when template point `i` is `pts[i]`.
fn fixed_masks(pts: &[usize], template: &Member) -> Vec<(u8, usize)> {
    let k = pts.len() - 1;
    (0..1usize << pts.len())
        .filter(|t| t >> k & 1 == 1 && t.count_ones() >= 2)
        .map(|t| (template.labels[t], super::member::map_mask(t, pts)))
        .collect()
}

/// Whether `x` realizes template `t` over the `k` points of `base`.
fn realizes(cur: &Member, base: &[usize], x: usize, t: &Member, k: usize) -> bool {
    match cur.shape {
        Shape::Pairs => base.iter().enumerate().all(|(i, &s)| cur.pair(s, x) == t.pair(i, k)),
        Shape::Subsets => {
            let mut pts = base.to_vec();
            pts.push(x);
            fixed_masks(&pts, t).into_iter().all(|(v, slot)| cur.labels[slot] == v)
        }
    }
}

/// Class constraints involving the last point, given the rest is a member.
fn last_point_ok(kind: &ClassKind, m: &Member) -> bool {
    let (lo, hi) = (kind.min_label(), kind.max_label());
    (m.shape.first_slot(m.size - 1)..m.labels.len())
        .filter(|&s| m.shape.is_slot(s))
        .all(|s| (lo..=hi).contains(&m.labels[s]) && kind.slot_ok(m, s))
}

/// Every prefix `0..k` of a segment is a member. Slots are in prefix
/// order, so one pass decides all prefixes at once.
fn prefixes_are_members(kind: &ClassKind, m: &Member) -> bool {
    kind.admits(m)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskAudit {
    pub points: usize,
    pub members_at_every_step: bool,
    pub log_witnesses_valid: bool,
    pub tasks: u64,
    pub realized: u64,
    pub first_missing: Option<(Vec<usize>, Member)>,
}

impl TaskAudit {
    pub fn all_realized(&self) -> bool {
        self.tasks == self.realized
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub max_size: usize,
    /// `(size, partial isomorphisms, extendable)` per map size.
    pub by_size: Vec<(usize, u64, u64)>,
    pub partial_isomorphisms: u64,
    pub extendable: u64,
    pub fraction: f64,
}

/// For every partial isomorphism `p: S → T` between substructures of at
/// most `max_size` points, whether every point outside `S` has a partner
/// outside `T` extending `p`. That holds exactly when every one-point type
/// realized over `S` is realized over `T`.
pub fn ultrahomogeneity_probe(l: &LimitApproximation, max_size: usize) -> Result<ProbeReport> {
    if max_size > 3 {
        return Err(FraisseError::Bounds("probe needs max_size ≤ 3".into()));
    }
    let cur = l.current();
    let n = cur.size;
    if (n as f64).powi(max_size as i32 + 1) > 5e7 {
        return Err(FraisseError::Bounds(format!(
            "segment of {n} points is too large for maps of size {max_size}"
        )));
    }
    let mut by_size = Vec::new();
    for k in 1..=max_size.min(n) {
        let mut ids: HashMap<Vec<u8>, u32> = HashMap::new();
        // type of the tuple -> multiset of extension-type sets
        let mut groups: BTreeMap<Vec<u8>, BTreeMap<Vec<u32>, u64>> = BTreeMap::new();
        for_each_tuple(n, k, &mut |t| {
            let ty = cur.restrict(t).labels;
            let mut ext: Vec<u32> = Vec::new();
            let mut pts = t.to_vec();
            pts.push(0);
            for x in (0..n).filter(|x| !t.contains(x)) {
                pts[k] = x;
                let code = cur.restrict(&pts).labels;
                let next = ids.len() as u32;
                ext.push(*ids.entry(code).or_insert(next));
            }
            ext.sort_unstable();
            ext.dedup();
            *groups.entry(ty).or_default().entry(ext).or_default() += 1;
        });
        let (mut total, mut good) = (0u64, 0u64);
        for sets in groups.values() {
            for (e, &me) in sets {
                for (f, &mf) in sets {
                    total += me * mf;
                    if is_subset(e, f) {
                        good += me * mf;
                    }
                }
            }
        }
        // Each partial isomorphism arises from k! ordered tuple pairs.
        let orderings: u64 = (1..=k as u64).product();
        by_size.push((k, total / orderings, good / orderings));
    }
    let partial: u64 = by_size.iter().map(|s| s.1).sum();
    let extendable: u64 = by_size.iter().map(|s| s.2).sum();
    Ok(ProbeReport {
        max_size,
        by_size,
        partial_isomorphisms: partial,
        extendable,
        fraction: if partial == 0 { 1.0 } else { extendable as f64 / partial as f64 },
    })
}

fn is_subset(a: &[u32], b: &[u32]) -> bool {
    let mut j = 0;
    for &x in a {
        while j < b.len() && b[j] < x {
            j += 1;
        }
        if j == b.len() || b[j] != x {
            return false;
        }
    }
    true
}

fn for_each_tuple(n: usize, k: usize, f: &mut dyn FnMut(&[usize])) {
    fn go(n: usize, k: usize, t: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
        if t.len() == k {
            f(t);
            return;
        }
        for x in 0..n {
            if !t.contains(&x) {
                t.push(x);
                go(n, k, t, f);
                t.pop();
            }
        }
    }
    go(n, k, &mut Vec::with_capacity(k), f);
}
