use std::fs;
use std::path::Path;

use serde_json::{json, Value};

use perturblab::incidence::{run_incidence_experiment, ExperimentSpec};
use perturblab::perturb::{
    collapse_search, geometric_collapse, perturbed_product_set, perturbed_sum_set,
    random_assignment, validate_assignment, zero_assignment, PerturbationAssignment,
    PerturbationBudget,
};
use perturblab::scalar::DEFAULT_BITS;
use perturblab::sets::{
    make_ap, make_doubling_chain, make_gp, make_random_dyadic, productset, sumset, PointSet,
};
use perturblab::structure::{
    decompose_dyadic, distinct_ksums_check, dyadic_lemma_report, extract_doubling_chain,
};
use perturblab::suites::{collapse_check, run_suite};
use perturblab::{LabError, Scalar};

use crate::{
    Anchor, CollapseArgs, DyadicArgs, Failure, GenArgs, IncidenceArgs, PerturbArgs, SetArgs,
    SetKind, Strategy, VerifyArgs,
};

type CmdResult = Result<(), Failure>;

fn anchor(x: &Anchor, n: usize) -> Scalar {
    match x {
        Anchor::Auto => Scalar::int(n as i64).powi(3),
        Anchor::Value(v) => v.clone(),
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Lab(LabError::Argument(msg.into()))
}

fn check_n(n: usize) -> Result<(), Failure> {
    if n < 2 {
        return Err(usage(format!("--n must be at least 2, got {n}")));
    }
    Ok(())
}

fn check_eps(eps: &Scalar) -> Result<(), Failure> {
    if !eps.is_positive() || eps > &Scalar::one() {
        return Err(usage(format!("--eps must lie in (0, 1], got {eps}")));
    }
    Ok(())
}

fn load_or_generate(a: &SetArgs) -> Result<PointSet, Failure> {
    if let Some(path) = &a.input {
        return Ok(PointSet::from_csv(&fs::read_to_string(path)?)?);
    }
    let x = anchor(&a.x, a.n);
    Ok(match a.kind {
        SetKind::Ap => make_ap(&x, a.n)?,
        SetKind::Gp => make_gp(&x, a.n)?,
        SetKind::Random => make_random_dyadic(a.n, &x, a.seed)?,
        SetKind::Chain => make_doubling_chain(a.n, &x, a.seed)?,
    })
}

fn emit(text: &str, out: Option<&Path>) -> CmdResult {
    match out {
        Some(p) => fs::write(p, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn emit_json(v: &Value, out: Option<&Path>) -> CmdResult {
    let mut text = serde_json::to_string_pretty(v).expect("JSON values serialize");
    text.push('\n');
    emit(&text, out)
}

fn strings(a: &PointSet) -> Vec<String> {
    a.iter().map(|x| x.to_string()).collect()
}

pub fn generate(a: &GenArgs) -> CmdResult {
    if a.set.input.is_some() {
        return Err(usage("gen does not take --input"));
    }
    let set = load_or_generate(&a.set)?;
    emit(&set.to_csv(), a.out.as_deref())
}

pub fn collapse(a: &CollapseArgs) -> CmdResult {
    check_n(a.n)?;
    check_eps(&a.eps)?;
    let x = anchor(&a.x, a.n);
    let c = collapse_check(a.n, &x, &a.eps)?;
    let v = json!({
        "n": c.n,
        "x": c.x,
        "sumset_size": c.sumset_size,
        "product_size": c.product_size,
        "total": c.total,
        "bound_4n_minus_2": 4 * c.n - 2,
        "max_abs_delta": c.max_delta,
        "expected_max_abs_delta": c.expected_max_delta,
        "identity_pairs": c.identity_pairs,
        "pairs": c.pairs,
        "budget": {
            "epsilon": c.epsilon,
            "violations": c.budget_violations,
            "pairs_checked": c.pairs,
            "within_budget": c.budget_violations == 0,
        },
    });
    emit_json(&v, a.out.as_deref())
}

/// Quanta tried by the search strategy: the budget scale times `2^k`.
fn search_quanta(budget: &PerturbationBudget) -> Vec<Scalar> {
    let base = budget.scale().lo.clone();
    (0..12).map(|k| &base * Scalar::pow2(k)).collect()
}

pub fn perturb(a: &PerturbArgs) -> CmdResult {
    check_n(a.set.n)?;
    check_eps(&a.eps)?;
    let (set, asg, extra): (PointSet, PerturbationAssignment, Value) = match a.strategy {
        Strategy::Collapse => {
            if a.set.input.is_some() {
                return Err(usage(
                    "the collapse strategy builds its own set; drop --input",
                ));
            }
            let x = anchor(&a.set.x, a.set.n);
            let (set, asg) = geometric_collapse(&x, a.set.n)?;
            (set, asg, Value::Null)
        }
        Strategy::Zero => {
            let set = load_or_generate(&a.set)?;
            let asg = zero_assignment(&set);
            (set, asg, Value::Null)
        }
        Strategy::Random => {
            let set = load_or_generate(&a.set)?;
            let budget = PerturbationBudget::new(set.len(), &a.eps, DEFAULT_BITS)?;
            let asg = random_assignment(&set, &budget, a.set.seed);
            (set, asg, Value::Null)
        }
        Strategy::Search => {
            let set = load_or_generate(&a.set)?;
            let budget = PerturbationBudget::new(set.len(), &a.eps, DEFAULT_BITS)?;
            let out = collapse_search(&set, &budget, &search_quanta(&budget), a.set.seed)?;
            let q = out
                .quantum
                .map(|(q, phase)| json!({ "quantum": q, "phase": phase }));
            (set, out.assignment, json!(q))
        }
    };
    set.require_positive("perturbed set")?;
    let budget = PerturbationBudget::new(set.len(), &a.eps, DEFAULT_BITS)?;
    let report = validate_assignment(&set, &budget, &asg);
    let strategy = format!("{:?}", a.strategy).to_lowercase();
    let v = json!({
        "n": set.len(),
        "epsilon": a.eps,
        "strategy": strategy,
        "seed": a.set.seed,
        "sumset_size": sumset(&set, &set).len(),
        "productset_size": productset(&set, &set, None)?.len(),
        "perturbed_product_size": perturbed_product_set(&set, &asg)?.len(),
        "perturbed_sum_size": perturbed_sum_set(&set, &asg)?.len(),
        "max_abs_delta": asg.max_abs(),
        "search": extra,
        "validation": {
            "pairs_checked": report.pairs_checked,
            "violations": report.violations.len(),
            "within_budget": report.is_valid(),
        },
    });
    if let Some(path) = &a.out {
        fs::write(path, asg.to_csv())?;
    }
    emit_json(&v, None)
}

pub fn dyadic(a: &DyadicArgs, cap: u64) -> CmdResult {
    let set = load_or_generate(&a.set)?;
    let dec = decompose_dyadic(&set)?;
    let chain = extract_doubling_chain(&set)?;
    let mut ksums = Vec::new();
    for k in 1..=a.k.min(chain.len()) {
        ksums.push(distinct_ksums_check(&chain, k, cap)?);
    }
    let lemma = dyadic_lemma_report(&set, &a.delta, DEFAULT_BITS)?;
    let buckets: Vec<Value> = dec
        .buckets
        .iter()
        .map(|(k, b)| json!({ "index": k, "size": b.len() }))
        .collect();
    let v = json!({
        "n": set.len(),
        "buckets": buckets,
        "best_index": dec.best_index,
        "best_size": dec.best_size(),
        "chain": strings(&chain),
        "ksums": ksums,
        "lemma": lemma,
        "implication_holds": lemma.implication_holds(),
        "vacuous": lemma.is_vacuous(),
    });
    emit_json(&v, a.out.as_deref())?;
    if !lemma.implication_holds() || ksums.iter().any(|r| !r.distinct) {
        return Err(Failure::Verification(
            "dyadic report contradicts a structure claim".into(),
        ));
    }
    Ok(())
}

pub fn incidence(a: &IncidenceArgs) -> CmdResult {
    check_n(a.set.n)?;
    check_eps(&a.eps)?;
    let set = load_or_generate(&a.set)?;
    let spec = ExperimentSpec {
        n: a.set.n,
        epsilon: a.eps.clone(),
        x: anchor(&a.set.x, a.set.n),
        seed: a.set.seed,
        delta_override: a.delta.clone(),
        bits: DEFAULT_BITS,
    };
    let run = run_incidence_experiment(&spec, &set)?;
    let mut v = serde_json::to_value(&run.report).expect("report serializes");
    let audit = a.audit.then(|| run.audit());
    if let Some(au) = &audit {
        let tallies: Vec<Value> = au
            .tallies
            .iter()
            .map(|(check, passed, failed)| json!({ "check": check, "passed": passed, "failed": failed }))
            .collect();
        v["audit"] = json!({ "ok": au.ok(), "tallies": tallies, "failures": au.failures });
    }
    emit_json(&v, a.out.as_deref())?;
    if let Some(au) = audit {
        if !au.ok() {
            return Err(Failure::Verification(format!(
                "{} audit failure(s)",
                au.failures.len()
            )));
        }
    }
    Ok(())
}

pub fn verify(a: &VerifyArgs) -> CmdResult {
    let reports = run_suite(&a.suite, a.seed)?;
    let mut failed = Vec::new();
    for r in &reports {
        print!("{r}");
        if !r.ok() {
            failed.push(r.suite.clone());
        }
    }
    if failed.is_empty() {
        println!("all suites passed");
        Ok(())
    } else {
        Err(Failure::Verification(format!(
            "suites failed: {}",
            failed.join(", ")
        )))
    }
}
