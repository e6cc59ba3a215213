use std::path::Path;
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde_json::{json, Value};

use dissoc_core::diversity::{diversity_amalgam, validate_diversity, DiversityError, DiversityJson};
use dissoc_core::exchange::{
    conditional_independence_test, independence_battery, sample_process, tail_triviality_probe, CiConfig, Generator,
};
use dissoc_core::fraisse::{
    self, build_limit as build, oligomorphy_report, trees_across, ultrahomogeneity_probe, ClassKind, ClassSpec,
    Property,
};
use dissoc_core::metric::{disjoint_amalgam, metric_amalgam, validate_metric, BaseMap, MetricError, MetricJson};
use dissoc_core::permgroup::{
    generated_equals_stabilizer, join_verdict, neumann_witness, pointwise_stabilizer, Permutation, PermutationGroup,
};
use dissoc_core::repcheck::{character_of_tuple_action, dissociation_defect as defect, induced_character, TupleBasis};

use crate::{
    AmalgamKind, AmalgamateArgs, BuildLimitArgs, CheckClassArgs, ClassArgs, ClassName, CmdResult, DefectArgs,
    ExchangeArgs, GeneratorName, GroupArgs, GroupLatticeArgs, GroupName, InduceArgs, NeumannArgs, Outcome,
    TypeTreeArgs, UsageError,
};

fn usage(e: impl std::fmt::Display) -> UsageError {
    UsageError::new(e)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, UsageError> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn need(v: Option<u8>, flag: &str, class: &str) -> Result<u8, UsageError> {
    v.ok_or_else(|| usage(format!("--class {class} needs --{flag}")))
}

pub fn class_kind(a: &ClassArgs) -> Result<ClassKind, UsageError> {
    let kind = match a.class {
        ClassName::Graphs => ClassKind::Graphs,
        ClassName::TriangleFree => ClassKind::TriangleFreeGraphs,
        ClassName::ColoredGraphs => ClassKind::ColoredGraphs {
            colors: need(a.colors, "colors", "colored-graphs")?,
        },
        ClassName::IntegralMetric => ClassKind::IntegralMetric {
            max_dist: need(a.max_dist, "max-dist", "integral-metric")?,
        },
        ClassName::NoOddPerimeter => ClassKind::NoOddPerimeter {
            p: need(a.p, "p", "no-odd-perimeter")?,
            max_dist: need(a.max_dist, "max-dist", "no-odd-perimeter")?,
        },
        ClassName::NoUnitSimplex => ClassKind::NoUnitSimplex {
            r: need(a.r, "r", "no-unit-simplex")?,
            max_dist: need(a.max_dist, "max-dist", "no-unit-simplex")?,
        },
        ClassName::IntegralDiversity => ClassKind::IntegralDiversity {
            max_value: need(a.max_dist, "max-dist", "integral-diversity")?,
        },
    };
    kind.validate().map_err(usage)?;
    Ok(kind)
}

pub fn check_class(a: &CheckClassArgs) -> CmdResult {
    let kind = class_kind(&a.class)?;
    let props = a
        .props
        .iter()
        .map(|p| Property::from_str(p).map_err(usage))
        .collect::<Result<Vec<_>, _>>()?;
    if props.is_empty() {
        return Err(usage("--props is empty"));
    }
    let spec = ClassSpec::new(kind.clone(), a.max_size).map_err(usage)?;
    let mut reports = Vec::new();
    for p in props {
        log::info(format!("checking {p:?} for {} at size {}", kind.name(), a.max_size));
        let r = match p {
            Property::Hp => fraisse::check_hp(&spec),
            Property::Jep => fraisse::check_jep(&spec),
            Property::Ap => fraisse::check_ap(&spec),
            Property::Sap => fraisse::check_sap(&spec),
            Property::Fap => fraisse::check_fap(&spec),
            Property::SigmaSap => fraisse::check_sigma_sap_truncated(&spec, a.base_size, a.diff_size),
        }
        .map_err(usage)?;
        reports.push(r);
    }
    let passed = reports.iter().all(|r| r.passed());
    Ok(Outcome::new(
        json!({
            "class": kind,
            "class_name": kind.name(),
            "max_size": a.max_size,
            "reports": reports,
        }),
        passed,
    ))
}

pub fn amalgamate(a: &AmalgamateArgs) -> CmdResult {
    let base: Option<BaseMap> = a.base.as_deref().map(read_json).transpose()?;
    match a.kind {
        AmalgamKind::Metric => {
            let left = read_json::<MetricJson>(&a.left)?.into_space().map_err(usage)?;
            let right = read_json::<MetricJson>(&a.right)?.into_space().map_err(usage)?;
            let glued = match &base {
                Some(b) => metric_amalgam(&left, &right, b),
                None => disjoint_amalgam(&left, &right, a.p),
            }
            .map_err(|e| match e {
                MetricError::BaseDisagreement { i, j, left, right } => UsageError::with_detail(
                    &e,
                    json!({ "witness_pair": [i, j], "left": left, "right": right }),
                ),
                other => usage(other),
            })?;
            let check = validate_metric(&glued.space);
            Ok(Outcome::new(
                json!({
                    "kind": "metric",
                    "amalgam": glued.space.to_json(),
                    "left_embedding": glued.left,
                    "right_embedding": glued.right,
                    "violations": check.violations,
                }),
                check.is_valid(),
            ))
        }
        AmalgamKind::Diversity => {
            let base = base.ok_or_else(|| usage("diversity amalgams need --base"))?;
            let left = read_json::<DiversityJson>(&a.left)?.into_diversity().map_err(usage)?;
            let right = read_json::<DiversityJson>(&a.right)?.into_diversity().map_err(usage)?;
            let glued = diversity_amalgam(&left, &right, &base).map_err(|e| match e {
                DiversityError::BaseDisagreement {
                    ref subset,
                    left,
                    right,
                } => UsageError::with_detail(&e, json!({ "witness_subset": subset, "left": left, "right": right })),
                other => usage(other),
            })?;
            let check = validate_diversity(&glued.diversity);
            Ok(Outcome::new(
                json!({
                    "kind": "diversity",
                    "amalgam": glued.diversity.to_json(),
                    "left_embedding": glued.left,
                    "right_embedding": glued.right,
                    "violations": check.violations,
                }),
                check.is_valid(),
            ))
        }
    }
}

pub fn build_limit(a: &BuildLimitArgs, seed: u64) -> CmdResult {
    let kind = class_kind(&a.class)?;
    let spec = ClassSpec::new(kind.clone(), 3.min(kind.max_points())).map_err(usage)?;
    let l = build(&spec, a.steps, seed).map_err(usage)?;
    log::info(format!("segment has {} points after {} steps", l.current().size, l.steps()));
    let audit = l.audit();
    let mut report = l.to_json();
    report["audit"] = json!({
        "points": audit.points,
        "members_at_every_step": audit.members_at_every_step,
        "log_witnesses_valid": audit.log_witnesses_valid,
        "tasks": audit.tasks,
        "realized": audit.realized,
        "all_realized": audit.all_realized(),
    });
    if let Some(k) = a.probe {
        report["probe"] = serde_json::to_value(ultrahomogeneity_probe(&l, k).map_err(usage)?).expect("plain data");
    }
    Ok(Outcome::new(report, audit.members_at_every_step && audit.log_witnesses_valid))
}

pub fn type_tree(a: &TypeTreeArgs) -> CmdResult {
    let kind = class_kind(&a.class)?;
    let spec = ClassSpec::new(kind.clone(), a.depth).map_err(usage)?;
    let tree = fraisse::type_tree(&spec, a.depth).map_err(usage)?;
    let mut report = json!({
        "class": kind,
        "class_name": kind.name(),
        "depth": a.depth,
        "level_sizes": tree.sizes(),
        "tree": tree,
    });
    if !a.compare.is_empty() {
        let mut values = vec![kind.truncation().unwrap_or(0)];
        values.extend(&a.compare);
        let trees = if kind.truncation().is_some() {
            trees_across(&kind, a.depth, &values).map_err(usage)?
        } else {
            vec![tree.clone(); values.len()]
        };
        report["oligomorphy"] = serde_json::to_value(oligomorphy_report(&trees, &spec).map_err(usage)?).expect("plain data");
    }
    Ok(Outcome::new(report, true))
}

pub fn group(a: &GroupArgs) -> Result<PermutationGroup, UsageError> {
    if a.n == 0 {
        return Err(usage("--n must be positive"));
    }
    if let Some(path) = &a.generators {
        let images: Vec<Vec<usize>> = read_json(path)?;
        let gens = images
            .into_iter()
            .map(Permutation::from_images)
            .collect::<Result<Vec<_>, _>>()
            .map_err(usage)?;
        return PermutationGroup::new(a.n, gens).map_err(usage);
    }
    Ok(match a.group {
        GroupName::Sym => PermutationGroup::symmetric(a.n),
        GroupName::Cyclic => PermutationGroup::cyclic(a.n),
        GroupName::Dihedral => PermutationGroup::dihedral(a.n),
    })
}

pub fn group_json(g: &PermutationGroup) -> Value {
    let gens: Vec<&[usize]> = g.generators().iter().map(Permutation::images).collect();
    json!({ "degree": g.degree(), "order": g.order().to_string(), "generators": gens })
}

fn subsets(n: usize) -> Vec<Vec<usize>> {
    (0..1usize << n)
        .map(|m| (0..n).filter(|&i| m >> i & 1 == 1).collect())
        .collect()
}

pub fn group_lattice(a: &GroupLatticeArgs) -> CmdResult {
    let g = group(&a.group)?;
    let Some(bound) = a.all_up_to else {
        let v = generated_equals_stabilizer(&g, &a.a, &a.b).map_err(usage)?;
        let equal = v.equal;
        return Ok(Outcome::new(json!({ "group": group_json(&g), "verdict": v }), equal));
    };
    if g.degree() > 12 {
        return Err(usage("--all-up-to needs degree ≤ 12"));
    }
    let sets = subsets(g.degree());
    let stabs = sets
        .iter()
        .map(|s| pointwise_stabilizer(&g, s))
        .collect::<Result<Vec<_>, _>>()
        .map_err(usage)?;
    let (mut checked, mut failures) = (0u64, Vec::new());
    for (ma, sa) in sets.iter().enumerate() {
        for (mb, sb) in sets.iter().enumerate() {
            if (ma | mb).count_ones() as usize > bound {
                continue;
            }
            checked += 1;
            let v = join_verdict(g.degree(), &stabs[ma], &stabs[mb], &stabs[ma & mb], sa.clone(), sb.clone());
            if !v.equal {
                failures.push(v);
            }
        }
    }
    let passed = failures.is_empty();
    Ok(Outcome::new(
        json!({
            "group": group_json(&g),
            "max_union": bound,
            "pairs_checked": checked,
            "failures": failures.len(),
            "first_failures": &failures[..failures.len().min(20)],
        }),
        passed,
    ))
}

pub fn neumann(a: &NeumannArgs) -> CmdResult {
    let g = group(&a.group)?;
    let w = neumann_witness(&g, &a.fix, &a.moving, &a.target).map_err(usage)?;
    let found = w.is_some();
    Ok(Outcome::new(
        json!({
            "group": group_json(&g),
            "fix": a.fix,
            "move": a.moving,
            "target": a.target,
            "witness": w.as_ref().map(Permutation::images),
        }),
        found,
    ))
}

pub fn dissociation_defect(a: &DefectArgs) -> CmdResult {
    let (lo, hi) = a.n;
    let mut table = serde_json::Map::new();
    for n in lo..=hi {
        let g = PermutationGroup::symmetric(n);
        let basis = TupleBasis::new(n, a.k).map_err(usage)?;
        log::info(format!("defect for Sym({n}) on {} tuples", basis.len()));
        let d = defect(&g, &a.a, &a.b, &basis).map_err(usage)?;
        table.insert(n.to_string(), serde_json::to_value(d).expect("plain data"));
    }
    Ok(Outcome::new(json!({ "k": a.k, "a": a.a, "b": a.b, "table": table }), true))
}

pub fn induce(a: &InduceArgs) -> CmdResult {
    let g = PermutationGroup::symmetric(a.n);
    let induced = induced_character(&g, &a.a).map_err(usage)?;
    let basis = TupleBasis::new(a.n, a.a.len()).map_err(usage)?;
    let tuples = character_of_tuple_action(&g, &basis).map_err(usage)?;
    let agree = induced == tuples;
    Ok(Outcome::new(
        json!({ "n": a.n, "a": a.a, "character": induced, "tuple_action": tuples, "agree": agree }),
        agree,
    ))
}

pub fn generator(a: &ExchangeArgs) -> Generator {
    match a.generator {
        GeneratorName::IidUniform => Generator::IidUniform { alphabet: a.alphabet },
        GeneratorName::IidBiased => Generator::IidBiased { q: a.q },
        GeneratorName::ConstantCoupling => Generator::ConstantCoupling { alphabet: a.alphabet },
        GeneratorName::TwoCoinMixture => Generator::TwoCoinMixture {
            p1: a.p1,
            p2: a.p2,
            weight: a.weight,
        },
    }
}

pub fn exchange_test(a: &ExchangeArgs, seed: u64) -> CmdResult {
    let gen = generator(a);
    let sample = sample_process(&gen, a.n, a.samples, seed).map_err(usage)?;
    let config = CiConfig {
        alpha: a.alpha,
        permutations: a.permutations,
    };
    let tests = match a.battery {
        Some(k) => independence_battery(&sample, k, a.alpha, a.permutations).map_err(usage)?,
        None => {
            if a.a.is_empty() || a.b.is_empty() {
                return Err(usage("--a and --b are required without --battery"));
            }
            vec![conditional_independence_test(&sample, &a.a, &a.b, &config).map_err(usage)?]
        }
    };
    let passed = tests.iter().all(|t| t.pass);
    let mut report = json!({
        "generator": gen,
        "n": a.n,
        "samples": a.samples,
        "alpha": a.alpha,
        "permutations": a.permutations,
        "tests": tests.len(),
        "failures": tests.iter().filter(|t| !t.pass).collect::<Vec<_>>(),
    });
    if a.battery.is_none() {
        report["result"] = serde_json::to_value(&tests[0]).expect("plain data");
    }
    if let Some(depth) = a.tail_depth {
        let window = if a.a.is_empty() { vec![0] } else { a.a.clone() };
        let tail = tail_triviality_probe(&sample, &window, depth, &config).map_err(usage)?;
        report["tail"] = serde_json::to_value(tail).expect("plain data");
    }
    Ok(Outcome::new(report, passed))
}

pub mod log {
    pub fn info(msg: impl std::fmt::Display) {
        eprintln!("[dissoc] {msg}");
    }
}
