use perturblab::incidence::{
    build_curves, count_incidences, run_incidence_experiment, szekely_check, CrossingConstant,
    ExperimentSpec, FamilyAnalysis, GridPoint, SzekelyInputs,
};
use perturblab::reference;
use perturblab::sets::{make_random_dyadic, PointSet};
use perturblab::Scalar;
use proptest::prelude::*;

fn base(max: usize) -> impl Strategy<Value = PointSet> {
    prop::collection::vec((1i64..60, 1i64..4), 2..=max)
        .prop_map(|v| PointSet::from_unsorted(v.into_iter().map(|(p, q)| Scalar::ratio(p, q))))
        .prop_filter("at least two points", |b| b.len() >= 2)
}

fn step() -> impl Strategy<Value = Scalar> {
    (1i64..40, 1i64..5).prop_map(|(p, q)| Scalar::ratio(p, q))
}

fn pt(x: i64, y: i64) -> GridPoint {
    GridPoint {
        x: Scalar::int(x),
        y: Scalar::int(y),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn analysis_matches_oracle(b in base(5), delta in step()) {
        let fam = build_curves(&b, &delta).unwrap();
        let an = FamilyAnalysis::run(&fam).unwrap();
        prop_assert_eq!(an.ell, (b.len() * b.len()) as u64);
        prop_assert_eq!(an.incidences, reference::incidences(&fam));
        prop_assert_eq!(count_incidences(&fam).unwrap(), an.incidences);
        let (pairs, crossings) = reference::all_pairs(&fam);
        for ((i, j), want) in &pairs {
            prop_assert_eq!(an.pair(*i, *j).multiplicity(), *want, "curves {} {}", i, j);
        }
        prop_assert_eq!(an.crossings, crossings);
        let (m1, witness) = reference::m1(&fam);
        prop_assert_eq!(an.m1, m1);
        prop_assert_eq!(&an.m1_witness, &witness);
        prop_assert!(an.m_edge <= an.m1);
    }

    #[test]
    fn audit_passes(b in base(6), delta in step()) {
        let fam = build_curves(&b, &delta).unwrap();
        let an = FamilyAnalysis::run(&fam).unwrap();
        let audit = an.audit(&fam);
        prop_assert!(audit.ok(), "{:?}", audit.failures);
    }

    #[test]
    fn every_curve_hits_at_least_its_vertices(b in base(6), delta in step()) {
        let fam = build_curves(&b, &delta).unwrap();
        for c in &fam.curves {
            prop_assert_eq!(c.vertices.len(), b.len());
            prop_assert!(c.vertices.iter().all(|v| fam.grid.contains(v) && c.passes_through(v)));
        }
        prop_assert!(count_incidences(&fam).unwrap() >= (b.len() as u64).pow(3));
    }

    #[test]
    fn constant_is_positive_and_bounded(
        ell in 1u64..500, p in 1u64..5000, extra in 0u64..3000, m1 in 1u64..5, m2 in (0i64..40, 1i64..8), cr in 0u64..10_000,
    ) {
        let inp = SzekelyInputs { ell, p, incidences: ell + extra, m1, m2: Scalar::ratio(m2.0, m2.1), crossings: cr };
        let out = szekely_check(&inp, 64).unwrap();
        prop_assert!(out.c_szekely.lo.is_positive());
        prop_assert!(out.c_szekely.meets_width());
        let e = extra as i64;
        prop_assert_eq!(out.edges, e);
        let dense = e > 0 && e as u64 >= 5 * p * m1;
        prop_assert_eq!(matches!(out.c_crossing, CrossingConstant::Value(_)), dense);
    }
}

#[test]
fn coincident_rounded_vertices_give_m1_two() {
    // every product of {4, 5} rounds to 0 at step 100, so curves (4, b) and
    // (5, b) run along the same two vertices
    let b = PointSet::from_ints(&[4, 5]);
    let fam = build_curves(&b, &Scalar::int(100)).unwrap();
    let an = FamilyAnalysis::run(&fam).unwrap();
    assert_eq!(an.m1, 2);
    assert_eq!(an.m1_witness, Some((pt(8, 0), pt(9, 0))));
    assert_eq!(reference::m1(&fam).0, 2);
    assert!(an.audit(&fam).ok());
}

#[test]
fn unit_step_fixture() {
    // B = {4, 5}, step 1: X = {8, 9, 10}, Y = {16, 20, 25}
    let b = PointSet::from_ints(&[4, 5]);
    let fam = build_curves(&b, &Scalar::one()).unwrap();
    assert_eq!(fam.grid.xs, PointSet::from_ints(&[8, 9, 10]));
    assert_eq!(fam.grid.ys, PointSet::from_ints(&[16, 20, 25]));
    let an = FamilyAnalysis::run(&fam).unwrap();
    assert_eq!((an.ell, an.p, an.incidences), (4, 9, 8));
    assert_eq!(an.m1, 1);
}

#[test]
fn synthetic_dense_branch() {
    let inp = SzekelyInputs {
        ell: 100,
        p: 50,
        incidences: 2000,
        m1: 2,
        m2: Scalar::int(3),
        crossings: 40_000,
    };
    let out = szekely_check(&inp, 64).unwrap();
    let e = Scalar::int(1900);
    let want = Scalar::int(40_000 * 50 * 50 * 2) / (&e * &e * &e);
    assert_eq!(
        out.c_crossing,
        CrossingConstant::Value(perturblab::scalar::Enclosure::exact(want, 64))
    );
}

#[test]
fn experiment_is_deterministic() {
    let x = Scalar::int(4096);
    let a = make_random_dyadic(16, &x, 11).unwrap();
    let spec = ExperimentSpec {
        n: 16,
        epsilon: Scalar::ratio(1, 2),
        x,
        seed: 11,
        delta_override: None,
        bits: 64,
    };
    let r1 = run_incidence_experiment(&spec, &a).unwrap();
    let r2 = run_incidence_experiment(&spec, &a).unwrap();
    assert_eq!(r1.report.to_json_untimed(), r2.report.to_json_untimed());
    assert!(r1.audit().ok());
    assert_eq!(r1.report.ell, 256);
}

#[test]
fn experiment_rejects_bad_input() {
    let spec = ExperimentSpec {
        n: 2,
        epsilon: Scalar::ratio(1, 2),
        x: Scalar::one(),
        seed: 0,
        delta_override: None,
        bits: 64,
    };
    assert!(run_incidence_experiment(&spec, &PointSet::from_ints(&[3])).is_err());
    let zero = ExperimentSpec {
        delta_override: Some(Scalar::zero()),
        ..spec.clone()
    };
    assert!(run_incidence_experiment(&zero, &PointSet::from_ints(&[3, 4])).is_err());
    let eps = ExperimentSpec {
        epsilon: Scalar::zero(),
        ..spec
    };
    assert!(run_incidence_experiment(&eps, &PointSet::from_ints(&[3, 4])).is_err());
}

#[test]
fn equal_slopes_can_share_points_when_step_is_coarse() {
    // min(B) * min gap = 1/4 < 23, so same-slope curves may meet after rounding
    let b = PointSet::from_unsorted([Scalar::ratio(1, 2), Scalar::one(), Scalar::int(11)]);
    let fam = build_curves(&b, &Scalar::int(23)).unwrap();
    let an = FamilyAnalysis::run(&fam).unwrap();
    let audit = an.audit(&fam);
    assert!(audit.ok(), "{:?}", audit.failures);
    assert!(audit.tally("m1_distinct_slopes").is_none());
    assert!(audit.tally("m1_slope_spread").is_some());
}
