//! Re-checks reports without reusing the code path that produced them
//! where an independent route exists.

use std::collections::{BTreeSet, HashSet};

use serde_json::{json, Value};

use dissoc_core::diversity::{validate_diversity, DiversityJson};
use dissoc_core::exchange::{conditional_independence_test, sample_process, CiConfig, Generator};
use dissoc_core::fraisse::{revalidate, AmalgamationReport, ClassKind, Member, Verdict};
use dissoc_core::metric::{validate_metric, MetricJson};

use crate::commands::read_json;
use crate::{CmdResult, InputKind, Outcome, UsageError, ValidateArgs};

fn field<'a>(v: &'a Value, key: &str) -> Result<&'a Value, UsageError> {
    v.get(key).ok_or_else(|| UsageError::new(format!("report has no `{key}` field")))
}

fn parse<T: serde::de::DeserializeOwned>(v: &Value, key: &str) -> Result<T, UsageError> {
    serde_json::from_value(field(v, key)?.clone()).map_err(|e| UsageError::new(format!("`{key}`: {e}")))
}

pub fn run(a: &ValidateArgs) -> CmdResult {
    match a.kind {
        InputKind::Metric => {
            let space = read_json::<MetricJson>(&a.input)?.into_unchecked().map_err(UsageError::new)?;
            let r = validate_metric(&space);
            Ok(Outcome::new(json!({ "kind": "metric", "violations": r.violations }), r.is_valid()))
        }
        InputKind::Diversity => {
            let d = read_json::<DiversityJson>(&a.input)?.into_unchecked().map_err(UsageError::new)?;
            let r = validate_diversity(&d);
            Ok(Outcome::new(json!({ "kind": "diversity", "violations": r.violations }), r.is_valid()))
        }
        InputKind::Report => {
            let report: Value = read_json(&a.input)?;
            let command = field(&report, "command")?
                .as_str()
                .ok_or_else(|| UsageError::new("`command` is not a string"))?;
            let (checked, confirmed, notes) = match command {
                "check-class" => class_report(&report)?,
                "group-lattice" => lattice_report(&report)?,
                "neumann" => neumann_report(&report)?,
                "exchange-test" => exchange_report(&report)?,
                "build-limit" => limit_report(&report)?,
                "amalgamate" => amalgam_report(&report)?,
                other => return Err(UsageError::new(format!("no validator for `{other}` reports"))),
            };
            Ok(Outcome::new(
                json!({
                    "validated_command": command,
                    "claims_checked": checked,
                    "confirmed": confirmed,
                    "notes": notes,
                }),
                confirmed,
            ))
        }
    }
}

type Checked = (usize, bool, Vec<String>);

fn class_report(report: &Value) -> Result<Checked, UsageError> {
    let kind: ClassKind = parse(report, "class")?;
    let reports: Vec<AmalgamationReport> = parse(report, "reports")?;
    let (mut checked, mut ok, mut notes) = (0, true, Vec::new());
    for r in reports.iter().filter(|r| r.verdict == Verdict::Fail) {
        checked += 1;
        let Some(cx) = &r.counterexample else {
            ok = false;
            notes.push(format!("{:?} failure without counterexample", r.property));
            continue;
        };
        let genuine = revalidate(&kind, r.property, cx).map_err(UsageError::new)?;
        notes.push(format!("{:?}: counterexample {}", r.property, if genuine { "confirmed" } else { "rejected" }));
        ok &= genuine;
    }
    Ok((checked, ok, notes))
}

/// All elements by breadth-first closure under the generators.
fn closure(degree: usize, gens: &[Vec<usize>]) -> Result<Vec<Vec<usize>>, UsageError> {
    if degree > 8 {
        return Err(UsageError::new("element enumeration needs degree ≤ 8"));
    }
    let id: Vec<usize> = (0..degree).collect();
    let mut seen: HashSet<Vec<usize>> = HashSet::from([id.clone()]);
    let mut frontier = vec![id];
    while let Some(p) = frontier.pop() {
        for g in gens {
            let q: Vec<usize> = p.iter().map(|&x| g[x]).collect();
            if seen.insert(q.clone()) {
                frontier.push(q);
            }
        }
    }
    Ok(seen.into_iter().collect())
}

fn group_elements(report: &Value) -> Result<(usize, Vec<Vec<usize>>), UsageError> {
    let g = field(report, "group")?;
    let degree: usize = parse(g, "degree")?;
    let gens: Vec<Vec<usize>> = parse(g, "generators")?;
    Ok((degree, closure(degree, &gens)?))
}

fn fixing<'a>(elements: &'a [Vec<usize>], points: &'a [usize]) -> impl Iterator<Item = &'a Vec<usize>> + 'a {
    elements.iter().filter(move |p| points.iter().all(|&x| p[x] == x))
}

/// Order of the subgroup generated by `gens` inside the enumerated group.
fn generated_order(degree: usize, gens: Vec<Vec<usize>>) -> Result<usize, UsageError> {
    Ok(closure(degree, &gens)?.len())
}

fn lattice_report(report: &Value) -> Result<Checked, UsageError> {
    let (degree, elements) = group_elements(report)?;
    let mut claims: Vec<Value> = Vec::new();
    if let Some(v) = report.get("verdict") {
        claims.push(v.clone());
    }
    if let Some(Value::Array(f)) = report.get("first_failures") {
        claims.extend(f.iter().cloned());
    }
    let (mut checked, mut ok, mut notes) = (0, true, Vec::new());
    for c in claims {
        let a: Vec<usize> = parse(&c, "a")?;
        let b: Vec<usize> = parse(&c, "b")?;
        let claimed_join: String = field(&c, "generated_order")?.to_string();
        let claimed_meet: String = field(&c, "intersection_stabilizer_order")?.to_string();
        let meet: Vec<usize> = a.iter().copied().filter(|x| b.contains(x)).collect();
        let gens: Vec<Vec<usize>> = fixing(&elements, &a).chain(fixing(&elements, &b)).cloned().collect();
        let join = generated_order(degree, gens)?;
        let stab = fixing(&elements, &meet).count();
        checked += 1;
        let agree = join.to_string() == claimed_join && stab.to_string() == claimed_meet;
        notes.push(format!("A={a:?} B={b:?}: ⟨G_A,G_B⟩ has {join} elements, G_(A∩B) has {stab}"));
        ok &= agree;
    }
    Ok((checked, ok, notes))
}

fn neumann_report(report: &Value) -> Result<Checked, UsageError> {
    let (_, elements) = group_elements(report)?;
    let fix: Vec<usize> = parse(report, "fix")?;
    let moving: Vec<usize> = parse(report, "move")?;
    let target: Vec<usize> = parse(report, "target")?;
    let allowed: BTreeSet<usize> = target.iter().chain(moving.iter().filter(|x| fix.contains(x))).copied().collect();
    let good = |p: &Vec<usize>| moving.iter().all(|&m| allowed.contains(&p[m]));
    let witness: Option<Vec<usize>> = parse(report, "witness")?;
    let ok = match &witness {
        Some(w) => elements.contains(w) && fix.iter().all(|&x| w[x] == x) && good(w),
        None => !fixing(&elements, &fix).any(good),
    };
    let note = match witness {
        Some(_) => "witness is a group element with the required images",
        None => "no element of the enumerated group qualifies",
    };
    Ok((1, ok, vec![note.to_string()]))
}

fn exchange_report(report: &Value) -> Result<Checked, UsageError> {
    let gen: Generator = parse(report, "generator")?;
    let n: usize = parse(report, "n")?;
    let samples: usize = parse(report, "samples")?;
    let seed: u64 = parse(report, "seed")?;
    let permutations: usize = parse(report, "permutations")?;
    let failures: Vec<Value> = parse(report, "failures")?;
    let sample = sample_process(&gen, n, samples, seed).map_err(UsageError::new)?;
    let (mut ok, mut notes) = (true, Vec::new());
    for f in &failures {
        let a: Vec<usize> = parse(f, "a")?;
        let b: Vec<usize> = parse(f, "b")?;
        let alpha: f64 = parse(f, "alpha")?;
        let statistic: f64 = parse(f, "statistic")?;
        let config = CiConfig { alpha, permutations };
        let r = conditional_independence_test(&sample, &a, &b, &config).map_err(UsageError::new)?;
        let same = !r.pass && r.statistic == statistic;
        notes.push(format!("A={a:?} B={b:?}: statistic {} vs threshold {}", r.statistic, r.threshold));
        ok &= same;
    }
    Ok((failures.len(), ok, notes))
}

fn limit_report(report: &Value) -> Result<Checked, UsageError> {
    let kind: ClassKind = parse(report, "class")?;
    let m: Member = parse(report, "structure")?;
    let ok = (1..=m.size).all(|k| kind.admits(&m.restrict(&(0..k).collect::<Vec<_>>())));
    Ok((1, ok, vec![format!("every prefix of the {}-point segment is a member", m.size)]))
}

fn amalgam_report(report: &Value) -> Result<Checked, UsageError> {
    let kind: String = parse(report, "kind")?;
    let ok = match kind.as_str() {
        "metric" => {
            let m: MetricJson = parse(report, "amalgam")?;
            validate_metric(&m.into_unchecked().map_err(UsageError::new)?).is_valid()
        }
        "diversity" => {
            let d: DiversityJson = parse(report, "amalgam")?;
            validate_diversity(&d.into_unchecked().map_err(UsageError::new)?).is_valid()
        }
        other => return Err(UsageError::new(format!("unknown amalgam kind `{other}`"))),
    };
    Ok((1, ok, vec![format!("{kind} amalgam axioms")]))
}
