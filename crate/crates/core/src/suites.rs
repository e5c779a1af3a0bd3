//! Property suites run by `perturblab verify` and the acceptance tests.
//!
//! Every suite is deterministic in its seed and reports a tally per
//! invariant instead of stopping at the first failure.

use std::fmt;
use std::time::{Duration, Instant};

use rand::Rng;
use serde::Serialize;

use crate::error::{arg, Result};
use crate::incidence::{
    build_curves, count_incidences, run_incidence_experiment, Audit, ExperimentSpec, FamilyAnalysis,
};
use crate::perturb::{
    geometric_collapse, perturbed_product_set, perturbed_sum_set, random_assignment,
    validate_assignment, zero_assignment, PerturbationBudget,
};
use crate::reference;
use crate::rng::{lab_rng, sub_seed, LabRng};
use crate::scalar::{
    dyadic_index, ln_enclosure, power_enclosure, round_to_grid, Scalar, DEFAULT_BITS,
};
use crate::sets::{
    k_fold_span, make_ap, make_doubling_chain, make_gp, make_random_dyadic, make_random_separated,
    productset, sumset, PointSet, DEFAULT_CAP,
};
use crate::structure::{
    decompose_dyadic, distinct_ksums_check, dyadic_lemma_report, extract_doubling_chain,
    plunnecke_check,
};

pub const SUITE_NAMES: [&str; 6] = ["scalar", "sets", "perturb", "structure", "incidence", "all"];

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: u64,
    pub failed: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub checks: Vec<Check>,
    /// First few failure descriptions per check.
    pub failures: Vec<String>,
    /// Observations that are not pass/fail, e.g. vacuous instances.
    pub notes: Vec<String>,
    #[serde(skip)]
    pub elapsed: Duration,
}

impl SuiteReport {
    pub fn new(suite: &str) -> Self {
        SuiteReport {
            suite: suite.to_string(),
            checks: Vec::new(),
            failures: Vec::new(),
            notes: Vec::new(),
            elapsed: Duration::ZERO,
        }
    }

    fn slot(&mut self, name: &str) -> &mut Check {
        let k = match self.checks.iter().position(|c| c.name == name) {
            Some(k) => k,
            None => {
                self.checks.push(Check {
                    name: name.to_string(),
                    passed: 0,
                    failed: 0,
                });
                self.checks.len() - 1
            }
        };
        &mut self.checks[k]
    }

    pub fn record(&mut self, name: &str, ok: bool, detail: impl FnOnce() -> String) {
        let c = self.slot(name);
        if ok {
            c.passed += 1;
            return;
        }
        c.failed += 1;
        let failed = c.failed;
        if failed <= 3 {
            self.failures.push(format!("{name}: {}", detail()));
        }
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    pub fn absorb_audit(&mut self, audit: &Audit) {
        for (name, passed, failed) in &audit.tallies {
            let c = self.slot(name);
            c.passed += passed;
            c.failed += failed;
        }
        for f in &audit.failures {
            self.failures.push(format!("{}: {}", f.check, f.detail));
        }
    }

    pub fn merge(&mut self, other: SuiteReport) {
        for c in other.checks {
            let s = self.slot(&c.name);
            s.passed += c.passed;
            s.failed += c.failed;
        }
        self.failures.extend(other.failures);
        self.notes.extend(other.notes);
        self.elapsed += other.elapsed;
    }

    pub fn ok(&self) -> bool {
        self.checks.iter().all(|c| c.failed == 0)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    fn timed(mut self, start: Instant) -> Self {
        self.elapsed = start.elapsed();
        self
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.ok() { "PASS" } else { "FAIL" };
        writeln!(f, "suite {}: {verdict}", self.suite)?;
        for c in &self.checks {
            let total = c.passed + c.failed;
            let mark = if c.failed == 0 { "ok  " } else { "FAIL" };
            writeln!(f, "  {mark} {:<40} {}/{}", c.name, c.passed, total)?;
        }
        for n in &self.notes {
            writeln!(f, "  note: {n}")?;
        }
        for x in &self.failures {
            writeln!(f, "  failure: {x}")?;
        }
        Ok(())
    }
}

/// Runs one named suite, or every suite for `"all"`.
pub fn run_suite(name: &str, seed: u64) -> Result<Vec<SuiteReport>> {
    Ok(match name {
        "scalar" => vec![scalar_suite(seed, 500)?],
        "sets" => vec![sets_suite(seed, 100)?],
        "perturb" => vec![perturb_suite(seed, 100)?],
        "structure" => vec![structure_suite(seed)?],
        "incidence" => vec![incidence_suite(seed)?],
        "all" => {
            let mut out = Vec::new();
            for s in &SUITE_NAMES[..5] {
                out.extend(run_suite(s, seed)?);
            }
            out
        }
        other => {
            return arg(format!(
                "unknown suite {other:?}; expected one of {SUITE_NAMES:?}"
            ))
        }
    })
}

fn random_scalar(rng: &mut LabRng, num: i64, den: i64) -> Scalar {
    Scalar::ratio(rng.gen_range(-num..=num), rng.gen_range(1..=den))
}

/// A small set of distinct positive rationals with `1..=max_len` elements.
fn small_set(rng: &mut LabRng, max_len: usize) -> PointSet {
    let len = rng.gen_range(1..=max_len);
    let den = *[1, 1, 2, 3, 4].get(rng.gen_range(0..5)).unwrap();
    let mut v = Vec::new();
    while v.len() < len {
        let x = Scalar::ratio(rng.gen_range(1..=60), den);
        if !v.contains(&x) {
            v.push(x);
        }
    }
    PointSet::from_unsorted(v)
}

pub fn scalar_suite(seed: u64, cases: usize) -> Result<SuiteReport> {
    let start = Instant::now();
    let mut rep = SuiteReport::new("scalar");
    let mut rng = lab_rng(sub_seed(seed, 1));
    let half = Scalar::ratio(1, 2);
    for _ in 0..cases {
        let t = random_scalar(&mut rng, 100_000, 1000);
        let delta = Scalar::ratio(rng.gen_range(1..=5000), rng.gen_range(1..=100));
        let r = round_to_grid(&t, &delta)?;
        rep.record(
            "round_within_half_step",
            (&r - &t).abs() <= &delta * &half,
            || format!("t={t} delta={delta} -> {r}"),
        );
        rep.record("round_on_grid", (&r / &delta).is_integer(), || {
            format!("t={t} delta={delta} -> {r}")
        });
        // a tie must round up
        let m = (&t / &delta).floor();
        let tie = (Scalar::from_bigint(m) + &half) * &delta;
        let rt = round_to_grid(&tie, &delta)?;
        rep.record("round_ties_up", rt == &tie + &delta * &half, || {
            format!("tie {tie} -> {rt}")
        });

        let pos = t.abs() + Scalar::ratio(1, 1000);
        let k = dyadic_index(&pos)?;
        let ok = Scalar::pow2(k) <= pos && pos < Scalar::pow2(k + 1);
        rep.record("dyadic_index_brackets", ok, || format!("t={pos} -> {k}"));
    }
    rep.record(
        "round_rejects_nonpositive_step",
        round_to_grid(&half, &Scalar::zero()).is_err(),
        String::new,
    );
    rep.record(
        "dyadic_rejects_nonpositive",
        dyadic_index(&Scalar::zero()).is_err(),
        String::new,
    );

    for _ in 0..cases / 5 {
        let base = rng.gen_range(1..=5000u64);
        let exp = Scalar::ratio(rng.gen_range(-20..=20), rng.gen_range(1..=12));
        let e = power_enclosure(base, &exp, DEFAULT_BITS)?;
        let f = (base as f64).powf(exp.to_f64());
        let tol = f.abs() * 1e-12;
        let ok = e.lo.to_f64() <= f + tol && f - tol <= e.hi.to_f64();
        rep.record("power_encloses_value", ok, || {
            format!("{base}^{exp} = {f} not in {e:?}")
        });
        rep.record("power_width", e.meets_width(), || {
            format!("{base}^{exp}: {e:?}")
        });

        // r^q raised to p/q is exactly r^p
        let r = rng.gen_range(1..=12u64);
        let q = rng.gen_range(1..=4u32);
        let p = rng.gen_range(-4..=4i32);
        let ex = power_enclosure(r.pow(q), &Scalar::ratio(p as i64, q as i64), DEFAULT_BITS)?;
        let want = Scalar::int(r as i64).powi(p);
        rep.record(
            "power_exact_when_rational",
            ex.is_exact() && ex.lo == want,
            || format!("{}^({p}/{q}) -> {ex:?}, want {want}", r.pow(q)),
        );

        let t = Scalar::ratio(rng.gen_range(1..=1_000_000), rng.gen_range(1..=1000));
        let l = ln_enclosure(&t, DEFAULT_BITS)?;
        let f = t.to_f64().ln();
        let tol = f.abs().max(1.0) * 1e-12;
        rep.record(
            "ln_encloses_value",
            l.lo.to_f64() <= f + tol && f - tol <= l.hi.to_f64(),
            || format!("ln {t} = {f} not in {l:?}"),
        );
        rep.record("ln_width", l.meets_width(), || format!("ln {t}: {l:?}"));
    }

    for _ in 0..cases {
        let t = random_scalar(&mut rng, 1_000_000_000, 1_000_000);
        let back: Scalar = t.to_string().parse()?;
        rep.record("text_round_trip", back == t, || format!("{t} -> {back}"));
    }
    Ok(rep.timed(start))
}

pub fn sets_suite(seed: u64, instances: usize) -> Result<SuiteReport> {
    let start = Instant::now();
    let mut rep = set_oracles(seed, instances)?;
    rep.suite = "sets".into();
    let one = Scalar::one();
    for s in 0..100 {
        let n = 1 + (s as usize % 20);
        let lo = Scalar::int(1 + s as i64);
        let hi = &lo + Scalar::int(3 * n as i64);
        let a = make_random_separated(n, &lo, &hi, &one, sub_seed(seed, s))?;
        let b = make_random_separated(n, &lo, &hi, &one, sub_seed(seed, s))?;
        let ok =
            a.len() == n && a.is_separated(&one) && a.first() >= Some(&lo) && a.last() <= Some(&hi);
        rep.record("random_separated_shape", ok, || format!("{a:?}"));
        rep.record("random_separated_reproducible", a == b, String::new);
        let c = PointSet::from_csv(&a.to_csv())?;
        rep.record("pointset_csv_round_trip", c == a, String::new);
    }
    for n in 1..=20 {
        let x = Scalar::int(100);
        let ap = make_ap(&x, n)?;
        rep.record(
            "ap_sumset_size",
            sumset(&ap, &ap).len() == 2 * n - 1,
            || format!("n={n}"),
        );
        let gp = make_gp(&x, n)?;
        rep.record(
            "gp_productset_size",
            productset(&gp, &gp, None)?.len() == 2 * n - 1,
            || format!("n={n}"),
        );
    }
    Ok(rep.timed(start))
}

/// Fast set operations against the brute-force oracles.
pub fn set_oracles(seed: u64, instances: usize) -> Result<SuiteReport> {
    let start = Instant::now();
    let mut rep = SuiteReport::new("set_oracles");
    let mut rng = lab_rng(sub_seed(seed, 2));
    for _ in 0..instances {
        let a = small_set(&mut rng, 6);
        let b = small_set(&mut rng, 6);
        let got: Vec<Scalar> = sumset(&a, &b).into_vec();
        let want: Vec<Scalar> = reference::sumset(&a, &b).into_iter().collect();
        rep.record("oracle_sumset", got == want, || format!("{a:?} + {b:?}"));

        let got = productset(&a, &b, None)?.into_vec();
        let want: Vec<Scalar> = reference::productset(&a, &b, None).into_iter().collect();
        rep.record("oracle_productset", got == want, || {
            format!("{a:?} . {b:?}")
        });

        let delta = Scalar::ratio(rng.gen_range(1..=40), rng.gen_range(1..=4));
        let got = productset(&a, &b, Some(&delta))?.into_vec();
        let want: Vec<Scalar> = reference::productset(&a, &b, Some(&delta))
            .into_iter()
            .collect();
        rep.record("oracle_rounded_productset", got == want, || {
            format!("{a:?} . {b:?} step {delta}")
        });

        let k = rng.gen_range(0..=3usize);
        let l = rng.gen_range(usize::from(k == 0)..=3 - k);
        let got = k_fold_span(&a, k, l, DEFAULT_CAP)?.into_vec();
        let want: Vec<Scalar> = reference::k_fold_span(&a, k, l).into_iter().collect();
        rep.record("oracle_k_fold_span", got == want, || {
            format!("{k}A-{l}A for {a:?}")
        });
    }
    Ok(rep.timed(start))
}

pub fn perturb_suite(seed: u64, instances: usize) -> Result<SuiteReport> {
    let start = Instant::now();
    let mut rep = perturb_oracles(seed, instances)?;
    rep.suite = "perturb".into();
    let mut rng = lab_rng(sub_seed(seed, 3));
    for _ in 0..instances {
        let a = small_set(&mut rng, 8);
        let eps = Scalar::ratio(rng.gen_range(1..=4), 4);
        let budget = PerturbationBudget::new(a.len(), &eps, DEFAULT_BITS)?;
        let asg = random_assignment(&a, &budget, rng.gen());
        let v = validate_assignment(&a, &budget, &asg);
        rep.record("random_assignment_within_budget", v.is_valid(), || {
            format!("{:?}", v.violations)
        });
    }
    for n in [8usize, 16, 32] {
        let cr = collapse_check(n, &Scalar::int((n * n * n) as i64), &Scalar::ratio(1, 2))?;
        cr.record_into(&mut rep);
    }
    Ok(rep.timed(start))
}

/// Perturbed product and sum sets against the brute-force oracles.
pub fn perturb_oracles(seed: u64, instances: usize) -> Result<SuiteReport> {
    let start = Instant::now();
    let mut rep = SuiteReport::new("perturb_oracles");
    let mut rng = lab_rng(sub_seed(seed, 4));
    for _ in 0..instances {
        // a >= 3 keeps every factor a + delta positive, since a^2 > n^(1-eps)
        let a = PointSet::from_unsorted(small_set(&mut rng, 6).iter().map(|x| x + Scalar::int(3)));
        let eps = Scalar::ratio(rng.gen_range(1..=4), 4);
        let budget = PerturbationBudget::new(a.len(), &eps, DEFAULT_BITS)?;
        let asg = if rng.gen_bool(0.2) {
            zero_assignment(&a)
        } else {
            random_assignment(&a, &budget, rng.gen())
        };
        let got = perturbed_product_set(&a, &asg)?.into_vec();
        let want: Vec<Scalar> = reference::perturbed_products(&a, &asg)
            .expect("assignment covers A x A")
            .into_iter()
            .collect();
        rep.record("oracle_perturbed_products", got == want, || {
            format!("{a:?}")
        });
        let got = perturbed_sum_set(&a, &asg)?.into_vec();
        let want: Vec<Scalar> = reference::perturbed_sums(&a, &asg)
            .expect("assignment covers A x A")
            .into_iter()
            .collect();
        rep.record("oracle_perturbed_sums", got == want, || format!("{a:?}"));
    }
    Ok(rep.timed(start))
}

/// Measurements of the arithmetic-progression collapse for one `(n, x)`.
#[derive(Clone, Debug, Serialize)]
pub struct CollapseCheck {
    pub n: usize,
    pub x: Scalar,
    pub sumset_size: usize,
    pub product_size: usize,
    /// `|A+A| + |P|`.
    pub total: usize,
    pub max_delta: Scalar,
    /// `(n-1)^2 / (x+n-1)`.
    pub expected_max_delta: Scalar,
    /// Pairs with `(a_j + delta) a_k = x^2 + (j+k) x` exactly.
    pub identity_pairs: usize,
    pub pairs: usize,
    pub epsilon: Scalar,
    /// Pairs with `|delta| >= n^(1-eps)/a`.
    pub budget_violations: usize,
}

impl CollapseCheck {
    pub fn sizes_ok(&self) -> bool {
        self.sumset_size == 2 * self.n - 1 && self.product_size == 2 * self.n - 1
    }

    pub fn identity_ok(&self) -> bool {
        self.identity_pairs == self.pairs && self.pairs == self.n * self.n
    }

    fn record_into(&self, rep: &mut SuiteReport) {
        let n = self.n;
        rep.record("collapse_sizes_4n_minus_2", self.sizes_ok(), || {
            format!("{self:?}")
        });
        rep.record(
            "collapse_max_delta_closed_form",
            self.max_delta == self.expected_max_delta,
            || format!("n={n}: {} vs {}", self.max_delta, self.expected_max_delta),
        );
        rep.record("collapse_product_identity", self.identity_ok(), || {
            format!("n={n}: {self:?}")
        });
    }
}

pub fn collapse_check(n: usize, x: &Scalar, epsilon: &Scalar) -> Result<CollapseCheck> {
    let (a, asg) = geometric_collapse(x, n)?;
    let p = perturbed_product_set(&a, &asg)?;
    let mut identity_pairs = 0;
    for (j, aj) in a.iter().enumerate() {
        for (k, ak) in a.iter().enumerate() {
            let d = asg.get(aj, ak).expect("collapse covers A x A");
            let lhs = (aj + &d.delta) * (ak + &d.delta_prime);
            let rhs = x * x + Scalar::int((j + k) as i64) * x;
            identity_pairs += usize::from(lhs == rhs);
        }
    }
    let budget = PerturbationBudget::new(n, epsilon, DEFAULT_BITS)?;
    let m = Scalar::int(n as i64 - 1);
    let sumset_size = sumset(&a, &a).len();
    Ok(CollapseCheck {
        n,
        x: x.clone(),
        sumset_size,
        product_size: p.len(),
        total: sumset_size + p.len(),
        max_delta: asg.max_abs(),
        expected_max_delta: &m * &m / (x + &m),
        identity_pairs,
        pairs: asg.len(),
        epsilon: epsilon.clone(),
        budget_violations: validate_assignment(&a, &budget, &asg).violations.len(),
    })
}

pub fn structure_suite(seed: u64) -> Result<SuiteReport> {
    let start = Instant::now();
    let mut rep = SuiteReport::new("structure");
    rep.merge(plunnecke_suite(seed, 200)?);
    rep.merge(ksum_suite(seed, 50)?);
    rep.merge(dyadic_lemma_suite(seed)?);
    let mut rng = lab_rng(sub_seed(seed, 5));
    for _ in 0..100 {
        let a = small_set(&mut rng, 12);
        let dec = decompose_dyadic(&a)?;
        rep.record(
            "dyadic_partition_reassembles",
            dec.reassemble() == a,
            || format!("{a:?}"),
        );
        let inside = dec.buckets.iter().all(|(&k, b)| {
            b.iter()
                .all(|t| Scalar::pow2(k) <= *t && *t < Scalar::pow2(k + 1))
        });
        rep.record("dyadic_buckets_bracket", inside, || format!("{a:?}"));
        let chain = extract_doubling_chain(&a)?;
        let ratios = chain
            .elements()
            .windows(2)
            .all(|w| &w[1] / &w[0] >= Scalar::int(2));
        rep.record(
            "extracted_chain_ratio_at_least_2",
            ratios && !chain.is_empty(),
            || format!("{chain:?}"),
        );
    }
    rep.suite = "structure".into();
    Ok(rep.timed(start))
}

/// `|kA - lA| <= K^(k+l) |A|` for every `1 <= k + l <= 4` on `sets` random
/// sets of at most 8 elements. A set passes when every `(k, l)` does.
pub fn plunnecke_suite(seed: u64, sets: usize) -> Result<SuiteReport> {
    let start = Instant::now();
    let mut rep = SuiteReport::new("plunnecke");
    let mut rng = lab_rng(sub_seed(seed, 6));
    for i in 0..sets {
        // alternate structured and unstructured sets
        let a = if i % 2 == 0 {
            small_set(&mut rng, 8)
        } else {
            let len = rng.gen_range(1..=8);
            let step = rng.gen_range(1..=3);
            let jitter: Vec<i64> = (0..len)
                .map(|j| j * step + rng.gen_range(0..=1) * 100)
                .collect();
            PointSet::from_ints(&jitter.iter().map(|v| v + 1).collect::<Vec<_>>())
        };
        let mut all = true;
        for total in 1..=4 {
            for k in 0..=total {
                let r = plunnecke_check(&a, k, total - k, DEFAULT_CAP)?;
                all &= r.holds;
                rep.record("plunnecke_ruzsa_pair", r.holds, || {
                    format!("{r:?} for {a:?}")
                });
            }
        }
        rep.record("plunnecke_ruzsa_set", all, || format!("{a:?}"));
    }
    Ok(rep.timed(start))
}

/// Distinct `k`-subset sums for `k <= 5` on random doubling chains of
/// length at most 12.
pub fn ksum_suite(seed: u64, chains: usize) -> Result<SuiteReport> {
    let start = Instant::now();
    let mut rep = SuiteReport::new("ksums");
    let mut rng = lab_rng(sub_seed(seed, 7));
    for _ in 0..chains {
        let len = rng.gen_range(1..=12);
        let start_at = Scalar::ratio(rng.gen_range(1..=50), rng.gen_range(1..=5));
        let chain = make_doubling_chain(len, &start_at, rng.gen())?;
        let mut all = true;
        for k in 1..=5.min(len) {
            let r = distinct_ksums_check(&chain, k, DEFAULT_CAP)?;
            all &= r.distinct;
            rep.record("distinct_k_sums", r.distinct, || format!("{r:?}"));
        }
        rep.record("distinct_k_sums_chain", all, || format!("{chain:?}"));
    }
    Ok(rep.timed(start))
}

/// The dyadic pigeonhole implication over the generator corpus.
pub fn dyadic_lemma_suite(seed: u64) -> Result<SuiteReport> {
    let start = Instant::now();
    let mut rep = SuiteReport::new("dyadic_lemma");
    let mut vacuous = 0;
    let mut total = 0;
    for n in [16usize, 32, 64] {
        let x = Scalar::int((n * n * n) as i64);
        let corpus = [
            ("ap", make_ap(&x, n)?),
            ("gp", make_gp(&x, n)?),
            (
                "chain",
                make_doubling_chain(n, &Scalar::one(), sub_seed(seed, n as u64))?,
            ),
            (
                "random",
                make_random_dyadic(n, &x, sub_seed(seed, 100 + n as u64))?,
            ),
        ];
        for (kind, a) in &corpus {
            for delta in [Scalar::ratio(1, 4), Scalar::ratio(1, 2)] {
                let r = dyadic_lemma_report(a, &delta, DEFAULT_BITS)?;
                total += 1;
                vacuous += usize::from(r.is_vacuous());
                rep.record("dyadic_lemma_implication", r.implication_holds(), || {
                    format!("{kind} n={n} delta={delta}: {r:?}")
                });
            }
        }
    }
    rep.note(format!(
        "dyadic lemma: {vacuous} of {total} instances have a false hypothesis (|A+A| exceeds n^(1+delta)/(3 ln n))"
    ));
    Ok(rep.timed(start))
}

/// Fast incidence statistics against the brute-force oracles on small bases.
pub fn incidence_oracles(seed: u64, instances: usize) -> Result<SuiteReport> {
    let start = Instant::now();
    let mut rep = SuiteReport::new("incidence_oracles");
    let mut rng = lab_rng(sub_seed(seed, 8));
    for _ in 0..instances {
        let b = small_set(&mut rng, 6);
        let delta = Scalar::ratio(rng.gen_range(1..=12), rng.gen_range(1..=4));
        let fam = build_curves(&b, &delta)?;
        let an = FamilyAnalysis::run(&fam)?;
        let want_i = reference::incidences(&fam);
        rep.record(
            "oracle_incidences",
            count_incidences(&fam)? == want_i && an.incidences == want_i,
            || format!("B={b:?} delta={delta}: {} vs {want_i}", an.incidences),
        );
        let (pairs, crossings) = reference::all_pairs(&fam);
        for ((i, j), want) in &pairs {
            let got = an.pair(*i, *j).multiplicity();
            rep.record("oracle_pair_multiplicity", got == *want, || {
                format!("B={b:?} delta={delta} curves {i},{j}: {got} vs {want}")
            });
        }
        let sum: u64 = pairs.iter().map(|p| p.1).sum();
        rep.record(
            "oracle_multiplicity_sum",
            an.multiplicity_sum == sum,
            || format!("B={b:?} delta={delta}"),
        );
        rep.record("oracle_crossings", an.crossings == crossings, || {
            format!("B={b:?} delta={delta}: {} vs {crossings}", an.crossings)
        });
        let (m1, witness) = reference::m1(&fam);
        rep.record("oracle_m1", an.m1 == m1 && an.m1_witness == witness, || {
            format!(
                "B={b:?} delta={delta}: {} {:?} vs {m1} {witness:?}",
                an.m1, an.m1_witness
            )
        });
    }
    Ok(rep.timed(start))
}

/// Runs the random incidence experiment for each seed and audits every
/// exact per-pair invariant.
pub fn incidence_invariants(n: usize, epsilon: &Scalar, seeds: &[u64]) -> Result<SuiteReport> {
    let start = Instant::now();
    let mut rep = SuiteReport::new("incidence_invariants");
    let x = Scalar::int((n * n * n) as i64);
    for &seed in seeds {
        let a = make_random_dyadic(n, &x, seed)?;
        let spec = ExperimentSpec {
            n,
            epsilon: epsilon.clone(),
            x: x.clone(),
            seed,
            delta_override: None,
            bits: DEFAULT_BITS,
        };
        let run = run_incidence_experiment(&spec, &a)?;
        rep.absorb_audit(&run.audit());
        let r = &run.report;
        rep.record(
            "ell_equals_b_squared",
            r.ell == (r.base_size * r.base_size) as u64,
            || format!("{r:?}"),
        );
        rep.record("m1_at_least_one", r.m1 >= 1, || {
            format!("seed {seed}: m1 = {}", r.m1)
        });
        rep.record("m_edge_at_most_m1", r.m_edge <= r.m1, || {
            format!("seed {seed}: m_edge {} > m1 {}", r.m_edge, r.m1)
        });
    }
    Ok(rep.timed(start))
}

pub fn incidence_suite(seed: u64) -> Result<SuiteReport> {
    let start = Instant::now();
    let mut rep = incidence_oracles(seed, 60)?;
    rep.merge(incidence_invariants(
        16,
        &Scalar::ratio(1, 2),
        &[seed, seed.wrapping_add(1)],
    )?);
    rep.suite = "incidence".into();
    Ok(rep.timed(start))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn collapse_small() {
        let c = collapse_check(16, &Scalar::int(4096), &Scalar::ratio(1, 2)).unwrap();
        assert!(c.sizes_ok());
        assert!(c.identity_ok());
        assert_eq!(c.max_delta, Scalar::ratio(225, 4111));
    }

    #[test]
    fn unknown_suite() {
        assert!(run_suite("nope", 0).is_err());
    }

    #[test]
    fn report_tallies() {
        let mut r = SuiteReport::new("t");
        r.record("a", true, String::new);
        r.record("a", false, || "bad".into());
        assert!(!r.ok());
        assert_eq!(r.check("a").map(|c| (c.passed, c.failed)), Some((1, 1)));
        assert!(r.to_string().contains("FAIL a"));
    }
}
