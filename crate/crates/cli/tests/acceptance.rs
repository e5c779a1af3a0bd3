//! Acceptance gate: runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any fails.

use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use serde_json::Value;

use perturblab::perturb::PerturbationAssignment;
use perturblab::reference;
use perturblab::sets::PointSet;
use perturblab::suites::{
    dyadic_lemma_suite, incidence_invariants, incidence_oracles, ksum_suite, perturb_oracles,
    plunnecke_suite, set_oracles, SuiteReport,
};
use perturblab::Scalar;

type Verdict = Result<String, String>;

const SEED: u64 = 1;

fn lab(args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_perturblab"))
        .args(args)
        .env_remove("PERTURBLAB_CAP")
        .output()
        .map_err(|e| format!("cannot run perturblab: {e}"))?;
    if !out.status.success() {
        return Err(format!(
            "perturblab {} exited with {:?}: {}",
            args.join(" "),
            out.status.code(),
            String::from_utf8_lossy(&out.stderr).trim()
        ));
    }
    Ok(out.stdout)
}

fn lab_json(args: &[&str]) -> Result<Value, String> {
    serde_json::from_slice(&lab(args)?)
        .map_err(|e| format!("bad JSON from {}: {e}", args.join(" ")))
}

fn scalar(v: &Value) -> Result<Scalar, String> {
    match v {
        Value::String(s) => s.parse().map_err(|e| format!("{s}: {e}")),
        Value::Number(n) => n.to_string().parse().map_err(|e| format!("{n}: {e}")),
        other => Err(format!("not a scalar: {other}")),
    }
}

fn count(v: &Value, key: &str) -> Result<u64, String> {
    v[key]
        .as_u64()
        .ok_or_else(|| format!("missing count {key}"))
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn suite_failures(rep: &SuiteReport) -> String {
    let mut s: Vec<String> = rep
        .checks
        .iter()
        .filter(|c| c.failed > 0)
        .map(|c| format!("{} {}/{}", c.name, c.failed, c.passed + c.failed))
        .collect();
    s.extend(rep.failures.iter().take(3).cloned());
    s.join("; ")
}

fn tally(rep: &SuiteReport, name: &str) -> (u64, u64) {
    rep.check(name)
        .map(|c| (c.passed, c.failed))
        .unwrap_or((0, 0))
}

/// Collapse assignment and base set for `n` at `x = n^3`, via the CLI.
fn collapse_assignment(
    n: usize,
    dir: &Path,
) -> Result<(Scalar, PointSet, PerturbationAssignment), String> {
    let path = dir.join(format!("collapse-{n}.csv"));
    let ns = n.to_string();
    lab(&[
        "perturb",
        "--n",
        &ns,
        "--strategy",
        "collapse",
        "--out",
        path.to_str().unwrap(),
    ])?;
    let text = fs::read_to_string(&path).map_err(|e| e.to_string())?;
    let asg = PerturbationAssignment::from_csv(&text).map_err(|e| e.to_string())?;
    let x = Scalar::int((n * n * n) as i64);
    let a = PointSet::from_unsorted((0..n as i64).map(|j| &x + Scalar::int(j)));
    Ok((x, a, asg))
}

fn collapse_reproduction(dir: &Path) -> Verdict {
    let mut parts = Vec::new();
    for n in [8usize, 16, 32] {
        let v = lab_json(&["collapse", "--n", &n.to_string()])?;
        let m = Scalar::int(n as i64 - 1);
        let x = Scalar::int((n * n * n) as i64);
        let closed = &m * &m / (&x + &m);
        let sizes = (
            count(&v, "sumset_size")?,
            count(&v, "product_size")?,
            count(&v, "total")?,
        );
        let want = (2 * n as u64 - 1, 2 * n as u64 - 1, 4 * n as u64 - 2);
        ensure(sizes == want, || {
            format!("n={n}: sizes {sizes:?}, want {want:?}")
        })?;
        let reported = scalar(&v["max_abs_delta"])?;
        ensure(reported == closed, || {
            format!("n={n}: max|delta| {reported}, want {closed}")
        })?;

        // brute force from the emitted assignment
        let (_, a, asg) = collapse_assignment(n, dir)?;
        let prods = reference::perturbed_products(&a, &asg)
            .ok_or(format!("n={n}: assignment misses a pair"))?;
        let sums = reference::sumset(&a, &a);
        let max = asg
            .iter()
            .map(|(_, d)| d.delta.abs().max(d.delta_prime.abs()))
            .max()
            .unwrap_or_default();
        ensure(prods.len() == 2 * n - 1 && sums.len() == 2 * n - 1, || {
            format!(
                "n={n}: brute force |P| = {}, |A+A| = {}",
                prods.len(),
                sums.len()
            )
        })?;
        ensure(max == closed, || {
            format!("n={n}: brute-force max|delta| {max}, want {closed}")
        })?;
        parts.push(format!(
            "n={n}: {}+{}={} max|delta|={closed}",
            sums.len(),
            prods.len(),
            sizes.2
        ));
    }
    Ok(parts.join(", "))
}

fn collapse_identity(dir: &Path) -> Verdict {
    let mut checked = 0usize;
    for n in [8usize, 16, 32] {
        let v = lab_json(&["collapse", "--n", &n.to_string()])?;
        ensure(count(&v, "identity_pairs")? == (n * n) as u64, || {
            format!("n={n}: {v}")
        })?;
        let (x, a, asg) = collapse_assignment(n, dir)?;
        for (j, aj) in a.iter().enumerate() {
            for (k, ak) in a.iter().enumerate() {
                let d = asg
                    .get(aj, ak)
                    .ok_or(format!("n={n}: missing pair ({j}, {k})"))?;
                ensure(d.delta_prime.is_zero(), || {
                    format!("n={n}: delta' nonzero at ({j}, {k})")
                })?;
                let lhs = (aj + &d.delta) * ak;
                let rhs = &x * &x + Scalar::int((j + k) as i64) * &x;
                ensure(lhs == rhs, || format!("n={n} ({j}, {k}): {lhs} != {rhs}"))?;
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} pairs exact over n in {{8, 16, 32}}"))
}

fn oracle_equivalence() -> Verdict {
    let mut rep = set_oracles(SEED, 100).map_err(|e| e.to_string())?;
    rep.merge(perturb_oracles(SEED, 100).map_err(|e| e.to_string())?);
    rep.merge(incidence_oracles(SEED, 100).map_err(|e| e.to_string())?);
    ensure(rep.ok(), || suite_failures(&rep))?;
    let cases: u64 = rep.checks.iter().map(|c| c.passed).sum();
    let pairs = tally(&rep, "oracle_pair_multiplicity").0;
    Ok(format!(
        "{} checks, {cases} comparisons ({pairs} curve pairs), 0 mismatches",
        rep.checks.len()
    ))
}

fn plunnecke() -> Verdict {
    let rep = plunnecke_suite(SEED, 200).map_err(|e| e.to_string())?;
    ensure(rep.ok(), || suite_failures(&rep))?;
    let (sets, _) = tally(&rep, "plunnecke_ruzsa_set");
    let (pairs, _) = tally(&rep, "plunnecke_ruzsa_pair");
    ensure(sets == 200, || format!("only {sets} sets checked"))?;
    Ok(format!("{sets}/200 sets, {pairs} (k,l) instances hold"))
}

fn ksums() -> Verdict {
    let rep = ksum_suite(SEED, 50).map_err(|e| e.to_string())?;
    ensure(rep.ok(), || suite_failures(&rep))?;
    let (chains, _) = tally(&rep, "distinct_k_sums_chain");
    let (ks, _) = tally(&rep, "distinct_k_sums");
    ensure(chains == 50, || format!("only {chains} chains checked"))?;
    Ok(format!(
        "{chains}/50 chains, {ks} (chain, k) instances distinct"
    ))
}

fn dyadic_lemma() -> Verdict {
    let rep = dyadic_lemma_suite(SEED).map_err(|e| e.to_string())?;
    ensure(rep.ok(), || suite_failures(&rep))?;
    let (held, _) = tally(&rep, "dyadic_lemma_implication");
    ensure(held == 24, || format!("expected 24 instances, saw {held}"))?;
    Ok(format!("{held}/24 not falsified; {}", rep.notes.join("; ")))
}

fn incidence_exact() -> Verdict {
    let seeds = [1, 2, 3, 4, 5];
    let rep = incidence_invariants(32, &Scalar::ratio(1, 2), &seeds).map_err(|e| e.to_string())?;
    ensure(rep.ok(), || suite_failures(&rep))?;
    for name in [
        "contact_in_2delta_window",
        "pair_multiplicity_bound",
        "incidences_at_least_b_cubed",
        "edges_equal_incidences_minus_curves",
    ] {
        let (passed, _) = tally(&rep, name);
        ensure(passed > 0, || format!("{name} was never exercised"))?;
    }
    let show = |name: &str| format!("{name} {}", tally(&rep, name).0);
    let spread = tally(&rep, "m1_slope_spread").0;
    let spread_note = if spread == 0 {
        "m1_slope_spread vacuous (m1 = 1 in every seed)".to_string()
    } else {
        show("m1_slope_spread")
    };
    Ok(format!(
        "5 seeds: {}, {}, {}, {}",
        show("contact_in_2delta_window"),
        show("pair_multiplicity_bound"),
        show("incidences_at_least_b_cubed"),
        spread_note
    ))
}

fn empirical_constants() -> Verdict {
    let mut lo_min: Option<Scalar> = None;
    let mut hi_max: Option<Scalar> = None;
    let mut dense: Vec<(Scalar, u64, u64, u64, i64)> = Vec::new();
    let mut per_n = Vec::new();
    for n in [16usize, 32, 64] {
        let mut row = Vec::new();
        for seed in 1..=3u64 {
            let v = lab_json(&[
                "incidence",
                "--n",
                &n.to_string(),
                "--seed",
                &seed.to_string(),
            ])?;
            let c = v["C_szekely"]
                .as_array()
                .ok_or("C_szekely is not an interval")?;
            let (lo, hi) = (scalar(&c[0])?, scalar(&c[1])?);
            ensure(lo.is_positive() && lo <= hi, || {
                format!("n={n} seed={seed}: bad enclosure [{lo}, {hi}]")
            })?;
            row.push(format!("{:.4}", lo.to_f64()));
            lo_min = Some(lo_min.map_or(lo.clone(), |m| m.min(lo)));
            hi_max = Some(hi_max.map_or(hi.clone(), |m| m.max(hi)));

            let (p, m1, cr) = (count(&v, "p")?, count(&v, "m1")?, count(&v, "crossings")?);
            let e = v["e"].as_i64().ok_or("missing e")?;
            let dense_branch = e > 0 && e as u64 >= 5 * p * m1;
            match (&v["c_crossing"], dense_branch) {
                (Value::Array(w), true) => dense.push((scalar(&w[0])?, cr, p, m1, e)),
                (Value::String(s), false) if s == "branch_e_lt_5nm" => {}
                (other, _) => {
                    return Err(format!(
                        "n={n} seed={seed}: c_crossing {other} with e={e}, p={p}, m1={m1}"
                    ))
                }
            }
        }
        per_n.push(format!("n={n}: {}", row.join("/")));
    }
    let (lo, hi) = (lo_min.unwrap(), hi_max.unwrap());
    let ratio = &hi / &lo;
    ensure(ratio <= Scalar::int(4), || {
        format!("spread {:.3} > 4 ({})", ratio.to_f64(), per_n.join(", "))
    })?;
    let branch = if dense.is_empty() {
        "e >= 5pm1 never reached (crossing branch vacuous)".to_string()
    } else {
        let c = dense.iter().map(|d| d.0.clone()).min().unwrap();
        ensure(c.is_positive(), || {
            format!("smallest crossing constant {c} is not positive")
        })?;
        for (_, cr, p, m1, e) in &dense {
            let rhs = &c * Scalar::int(*e).powi(3) / Scalar::int((p * p * m1) as i64);
            ensure(Scalar::int(*cr as i64) >= rhs, || {
                format!("crossings {cr} < {rhs}")
            })?;
        }
        format!(
            "{} dense instances, smallest c = {:.6}",
            dense.len(),
            c.to_f64()
        )
    };
    Ok(format!(
        "max/min = {:.3} <= 4 [{}]; {branch}",
        ratio.to_f64(),
        per_n.join(", ")
    ))
}

fn strip_timing(bytes: &[u8]) -> Result<String, String> {
    let mut v: Value = serde_json::from_slice(bytes).map_err(|e| e.to_string())?;
    v.as_object_mut()
        .ok_or("report is not an object")?
        .remove("elapsed_ms");
    Ok(v.to_string())
}

fn determinism(dir: &Path) -> Verdict {
    let out = |name: &str| dir.join(name).to_str().unwrap().to_string();
    let commands: Vec<Vec<String>> = [
        vec!["gen", "--n", "20", "--type", "random", "--seed", "7"],
        vec!["gen", "--n", "12", "--type", "chain", "--seed", "7"],
        vec!["collapse", "--n", "16"],
        vec![
            "perturb",
            "--n",
            "10",
            "--strategy",
            "random",
            "--seed",
            "3",
            "--out",
            "@asg",
        ],
        vec![
            "perturb",
            "--n",
            "10",
            "--strategy",
            "search",
            "--seed",
            "3",
            "--out",
            "@asg",
        ],
        vec!["dyadic", "--n", "32", "--seed", "5"],
        vec!["incidence", "--n", "16", "--seed", "2", "--audit"],
        vec!["verify", "--suite", "sets", "--seed", "4"],
    ]
    .iter()
    .map(|c| {
        c.iter()
            .map(|s| {
                if *s == "@asg" {
                    out("asg.csv")
                } else {
                    s.to_string()
                }
            })
            .collect()
    })
    .collect();

    for cmd in &commands {
        let args: Vec<&str> = cmd.iter().map(String::as_str).collect();
        let run = || -> Result<(String, Option<Vec<u8>>), String> {
            let stdout = lab(&args)?;
            let text = if args[0] == "incidence" {
                strip_timing(&stdout)?
            } else {
                String::from_utf8_lossy(&stdout).into()
            };
            let file = if args.contains(&"--out") {
                Some(fs::read(out("asg.csv")).map_err(|e| e.to_string())?)
            } else {
                None
            };
            Ok((text, file))
        };
        let first = run()?;
        let second = run()?;
        ensure(first == second, || {
            format!("output differs for: perturblab {}", args.join(" "))
        })?;
    }

    // thread count must not change results
    let one = lab(&["--threads", "1", "incidence", "--n", "16", "--seed", "3"])?;
    let four = lab(&["--threads", "4", "incidence", "--n", "16", "--seed", "3"])?;
    ensure(strip_timing(&one)? == strip_timing(&four)?, || {
        "incidence differs between 1 and 4 threads".into()
    })?;
    Ok(format!(
        "{} commands byte-identical across runs, incidence identical for 1 and 4 threads",
        commands.len()
    ))
}

struct Criterion {
    id: u32,
    name: &'static str,
    limit: Duration,
    run: Box<dyn Fn() -> Verdict>,
}

fn main() -> ExitCode {
    let dir = tempfile::tempdir().expect("temporary directory");
    let d = dir.path().to_path_buf();
    let secs = Duration::from_secs;
    let criteria = vec![
        Criterion {
            id: 1,
            name: "collapse reproduction",
            limit: secs(1),
            run: Box::new({
                let d = d.clone();
                move || collapse_reproduction(&d)
            }),
        },
        Criterion {
            id: 2,
            name: "collapse identity",
            limit: secs(1),
            run: Box::new({
                let d = d.clone();
                move || collapse_identity(&d)
            }),
        },
        Criterion {
            id: 3,
            name: "oracle equivalence",
            limit: secs(30),
            run: Box::new(oracle_equivalence),
        },
        Criterion {
            id: 4,
            name: "plunnecke-ruzsa",
            limit: secs(60),
            run: Box::new(plunnecke),
        },
        Criterion {
            id: 5,
            name: "chain k-sums distinct",
            limit: secs(30),
            run: Box::new(ksums),
        },
        Criterion {
            id: 6,
            name: "dyadic lemma implication",
            limit: secs(60),
            run: Box::new(dyadic_lemma),
        },
        Criterion {
            id: 7,
            name: "exact incidence invariants",
            limit: secs(300),
            run: Box::new(incidence_exact),
        },
        Criterion {
            id: 8,
            name: "empirical incidence constants",
            limit: secs(600),
            run: Box::new(empirical_constants),
        },
        Criterion {
            id: 9,
            name: "determinism",
            limit: secs(60),
            run: Box::new({
                let d = d.clone();
                move || determinism(&d)
            }),
        },
    ];

    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let verdict = (c.run)();
        let took = start.elapsed();
        let verdict = match verdict {
            Ok(detail) if took > c.limit => Err(format!("too slow, limit {:?}; {detail}", c.limit)),
            v => v,
        };
        let (mark, detail) = match &verdict {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        failed += usize::from(verdict.is_err());
        println!(
            "[{mark}] {}. {} ({:.2}s): {detail}",
            c.id,
            c.name,
            took.as_secs_f64()
        );
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
