use perturblab::perturb::{
    collapse_search, geometric_collapse, perturbed_product_set, perturbed_sum_set,
    product_deviation_radius, random_assignment, validate_assignment, zero_assignment,
    PerturbationAssignment, PerturbationBudget,
};
use perturblab::reference;
use perturblab::sets::{make_ap, productset, sumset, PointSet};
use perturblab::Scalar;
use proptest::prelude::*;

fn point_set(max: usize) -> impl Strategy<Value = PointSet> {
    // elements above 3 keep every perturbed factor positive for n <= 10
    prop::collection::vec((1i64..400, 1i64..4), 1..=max).prop_map(|v| {
        PointSet::from_unsorted(
            v.into_iter()
                .map(|(p, q)| Scalar::ratio(p, q) + Scalar::int(3)),
        )
    })
}

fn epsilon() -> impl Strategy<Value = Scalar> {
    (1i64..=8).prop_map(|k| Scalar::ratio(k, 8))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn random_assignment_stays_in_budget(a in point_set(10), eps in epsilon(), seed: u64) {
        let budget = PerturbationBudget::new(a.len(), &eps, 64).unwrap();
        let asg = random_assignment(&a, &budget, seed);
        let rep = validate_assignment(&a, &budget, &asg);
        prop_assert!(rep.is_valid(), "{:?}", rep);
        prop_assert_eq!(rep.pairs_checked, a.len() * a.len());
        prop_assert_eq!(random_assignment(&a, &budget, seed), asg);
    }

    #[test]
    fn perturbed_sets_match_oracle(a in point_set(8), eps in epsilon(), seed: u64) {
        let budget = PerturbationBudget::new(a.len(), &eps, 64).unwrap();
        let asg = random_assignment(&a, &budget, seed);
        let prod = perturbed_product_set(&a, &asg).unwrap().into_vec();
        prop_assert_eq!(prod, reference::perturbed_products(&a, &asg).unwrap().into_iter().collect::<Vec<_>>());
        let sums = perturbed_sum_set(&a, &asg).unwrap().into_vec();
        prop_assert_eq!(sums, reference::perturbed_sums(&a, &asg).unwrap().into_iter().collect::<Vec<_>>());
    }

    #[test]
    fn zero_assignment_is_identity(a in point_set(10)) {
        let asg = zero_assignment(&a);
        prop_assert_eq!(perturbed_product_set(&a, &asg).unwrap(), productset(&a, &a, None).unwrap());
        prop_assert_eq!(perturbed_sum_set(&a, &asg).unwrap(), sumset(&a, &a));
    }

    #[test]
    fn products_move_at_most_the_radius(a in point_set(8), eps in epsilon(), seed: u64) {
        let budget = PerturbationBudget::new(a.len(), &eps, 64).unwrap();
        let asg = random_assignment(&a, &budget, seed);
        for x in &a {
            for y in &a {
                let d = asg.get(x, y).unwrap();
                let moved = (x + &d.delta) * (y + &d.delta_prime) - x * y;
                prop_assert!(moved.abs() < product_deviation_radius(x, y, &budget));
            }
        }
    }

    #[test]
    fn spread_is_a_constant_multiple_of_the_scale(n in 2usize..200, extra in 0i64..5000, eps in epsilon(), seed: u64) {
        // B inside [x, 2x) with x >= n
        let x = Scalar::int(n as i64 + extra);
        let b = perturblab::sets::make_random_dyadic(n.min(20), &x, seed).unwrap();
        let budget = PerturbationBudget::new(n, &eps, 64).unwrap();
        let s = budget.scale().hi.clone();
        let cap = Scalar::int(4) * &s + &s * &s / (&x * &x);
        for p in b.iter() {
            for q in b.iter() {
                prop_assert!(product_deviation_radius(p, q, &budget) < cap);
            }
        }
    }

    #[test]
    fn search_never_worse_than_baseline(a in point_set(8), eps in epsilon(), seed: u64) {
        let budget = PerturbationBudget::new(a.len(), &eps, 64).unwrap();
        let quanta: Vec<Scalar> = (0..6).map(|k| budget.scale().lo.clone() * Scalar::pow2(k)).collect();
        let out = collapse_search(&a, &budget, &quanta, seed).unwrap();
        prop_assert!(out.product_count <= productset(&a, &a, None).unwrap().len());
        prop_assert_eq!(perturbed_product_set(&a, &out.assignment).unwrap().len(), out.product_count);
        prop_assert!(validate_assignment(&a, &budget, &out.assignment).is_valid());
    }

    #[test]
    fn assignment_csv_round_trip(a in point_set(6), seed: u64) {
        let budget = PerturbationBudget::new(a.len(), &Scalar::ratio(1, 2), 64).unwrap();
        let asg = random_assignment(&a, &budget, seed);
        prop_assert_eq!(PerturbationAssignment::from_csv(&asg.to_csv()).unwrap(), asg);
    }

    #[test]
    fn collapse_closed_form(n in 2usize..20, extra in 0i64..1000) {
        let x = Scalar::int((n * n * n) as i64 + extra);
        let (a, asg) = geometric_collapse(&x, n).unwrap();
        prop_assert_eq!(a.len(), n);
        prop_assert_eq!(sumset(&a, &a).len(), 2 * n - 1);
        prop_assert_eq!(perturbed_product_set(&a, &asg).unwrap().len(), 2 * n - 1);
        let m = Scalar::int(n as i64 - 1);
        prop_assert_eq!(asg.max_abs(), &m * &m / (&x + &m));
    }
}

#[test]
fn collapse_n4_by_hand() {
    // x = 64: A = {64, 65, 66, 67}, target (a_j + delta) a_k = 64^2 + 64 (j + k)
    let x = Scalar::int(64);
    let (a, asg) = geometric_collapse(&x, 4).unwrap();
    assert_eq!(a, PointSet::from_ints(&[64, 65, 66, 67]));
    let d = asg.get(&Scalar::int(67), &Scalar::int(67)).unwrap();
    assert_eq!(d.delta, Scalar::ratio(4480, 67) - Scalar::int(67));
    assert_eq!(asg.max_abs(), Scalar::ratio(9, 67));
}

#[test]
fn budget_rejects_bad_epsilon() {
    assert!(PerturbationBudget::new(4, &Scalar::zero(), 64).is_err());
    assert!(PerturbationBudget::new(4, &Scalar::ratio(3, 2), 64).is_err());
    assert!(PerturbationBudget::new(0, &Scalar::ratio(1, 2), 64).is_err());
}

#[test]
fn ap_budget_at_full_epsilon() {
    // eps = 1 gives |delta| < 1/a
    let a = make_ap(&Scalar::int(100), 5).unwrap();
    let budget = PerturbationBudget::new(5, &Scalar::one(), 64).unwrap();
    assert_eq!(
        budget.factor_bound(&Scalar::int(101)),
        Scalar::ratio(1, 101)
    );
    assert!(validate_assignment(&a, &budget, &zero_assignment(&a)).is_valid());
}

#[test]
fn collapse_violations_are_exactly_the_large_pairs() {
    let n = 16usize;
    let x = Scalar::int(4096);
    let (a, asg) = geometric_collapse(&x, n).unwrap();
    let budget = PerturbationBudget::new(n, &Scalar::ratio(1, 2), 64).unwrap();
    let lo = budget.scale().lo.clone();
    let mut want = Vec::new();
    for j in 0..n as i64 {
        for k in 0..n as i64 {
            let d = Scalar::int(j * k) / (&x + Scalar::int(k));
            if d >= &lo / (&x + Scalar::int(j)) {
                want.push((&x + Scalar::int(j), &x + Scalar::int(k)));
            }
        }
    }
    let rep = validate_assignment(&a, &budget, &asg);
    let got: Vec<_> = rep
        .violations
        .iter()
        .map(|v| (v.a.clone(), v.b.clone()))
        .collect();
    assert!(!want.is_empty());
    assert_eq!(got, want);
}

/// Snap search on the collapse set `{x, ..., x+n-1}` under a flat budget.
fn search_on_collapse_set(n: usize, bound: Scalar) -> usize {
    let x = Scalar::int((n * n * n) as i64);
    let (a, _) = geometric_collapse(&x, n).unwrap();
    let budget = PerturbationBudget::absolute(n, bound).unwrap();
    let out = collapse_search(&a, &budget, std::slice::from_ref(&x), 0).unwrap();
    assert!(validate_assignment(&a, &budget, &out.assignment).is_valid());
    out.product_count
}

#[test]
fn search_recovers_collapse_with_quadratic_budget() {
    for n in [8usize, 16] {
        let x = Scalar::int((n * n * n) as i64);
        let wide = Scalar::int((n * n) as i64) / &x;
        assert_eq!(search_on_collapse_set(n, wide), 2 * n - 1);
    }
}

#[test]
fn search_with_linear_budget_matches_count() {
    for n in [8usize, 16] {
        let x = Scalar::int((n * n * n) as i64);
        let narrow = Scalar::int(n as i64) / &x;
        // pair (j, k) snaps to x^2 + (j+k)x iff jk/(x+k) < n/x; otherwise the
        // product (x+j)(x+k) stays put and is not a multiple of x
        let mut snapped = std::collections::BTreeSet::new();
        let mut kept = std::collections::BTreeSet::new();
        for j in 0..n as i64 {
            for k in 0..n as i64 {
                if Scalar::int(j * k) / (&x + Scalar::int(k)) < narrow {
                    snapped.insert(j + k);
                } else {
                    kept.insert((j.min(k), j.max(k)));
                }
            }
        }
        let want = snapped.len() + kept.len();
        assert_eq!(search_on_collapse_set(n, narrow), want);
        assert!(want > 2 * n - 1);
    }
}
