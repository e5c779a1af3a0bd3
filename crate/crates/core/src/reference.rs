//! Brute-force oracles for small instances.
//!
//! Everything here works directly on `Scalar` coordinates by exhaustive
//! enumeration and shares no code with the fast paths it is compared against.

use std::collections::{BTreeMap, BTreeSet};

use crate::incidence::{CurveFamily, GridPoint, PolygonalCurve};
use crate::perturb::PerturbationAssignment;
use crate::scalar::Scalar;
use crate::sets::PointSet;

/// Nearest multiple of `delta`, ties upward, via `floor(t/delta + 1/2)`.
fn round_naive(t: &Scalar, delta: &Scalar) -> Scalar {
    let m = (t / delta + Scalar::ratio(1, 2)).floor();
    Scalar::from_bigint(m) * delta
}

pub fn sumset(a: &PointSet, b: &PointSet) -> BTreeSet<Scalar> {
    let mut out = BTreeSet::new();
    for x in a {
        for y in b {
            out.insert(x + y);
        }
    }
    out
}

pub fn productset(a: &PointSet, b: &PointSet, round: Option<&Scalar>) -> BTreeSet<Scalar> {
    let mut out = BTreeSet::new();
    for x in a {
        for y in b {
            let p = x * y;
            out.insert(match round {
                Some(d) => round_naive(&p, d),
                None => p,
            });
        }
    }
    out
}

/// `kA - lA` by enumerating every `(k + l)`-tuple.
pub fn k_fold_span(a: &PointSet, k: usize, l: usize) -> BTreeSet<Scalar> {
    let el = a.elements();
    let mut out = BTreeSet::new();
    let mut idx = vec![0usize; k + l];
    if el.is_empty() {
        return out;
    }
    loop {
        let mut s = Scalar::zero();
        for (pos, &i) in idx.iter().enumerate() {
            if pos < k {
                s = s + &el[i];
            } else {
                s = s - &el[i];
            }
        }
        out.insert(s);
        // odometer increment
        let mut pos = 0;
        loop {
            if pos == idx.len() {
                return out;
            }
            idx[pos] += 1;
            if idx[pos] < el.len() {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

/// `{(a + delta)(b + delta')}`; `None` when a pair is missing.
pub fn perturbed_products(a: &PointSet, asg: &PerturbationAssignment) -> Option<BTreeSet<Scalar>> {
    let mut out = BTreeSet::new();
    for x in a {
        for y in a {
            let d = asg.get(x, y)?;
            out.insert((x + &d.delta) * (y + &d.delta_prime));
        }
    }
    Some(out)
}

/// `{a + b + delta''}`; `None` when a pair is missing.
pub fn perturbed_sums(a: &PointSet, asg: &PerturbationAssignment) -> Option<BTreeSet<Scalar>> {
    let mut out = BTreeSet::new();
    for x in a {
        for y in a {
            out.insert(x + y + &asg.get(x, y)?.delta_sum);
        }
    }
    Some(out)
}

fn grid_points(family: &CurveFamily) -> Vec<GridPoint> {
    let mut out = Vec::new();
    for x in family.grid.xs.iter() {
        for y in family.grid.ys.iter() {
            out.push(GridPoint {
                x: x.clone(),
                y: y.clone(),
            });
        }
    }
    out
}

/// Grid points on each curve, by testing every grid point against every curve.
pub fn incident_points(family: &CurveFamily) -> Vec<Vec<GridPoint>> {
    let pts = grid_points(family);
    family
        .curves
        .iter()
        .map(|c| {
            pts.iter()
                .filter(|p| c.passes_through(p))
                .cloned()
                .collect()
        })
        .collect()
}

pub fn incidences(family: &CurveFamily) -> u64 {
    incident_points(family).iter().map(|v| v.len() as u64).sum()
}

/// Single intersection point of two non-parallel closed segments, if any.
fn segment_intersection(
    p0: &GridPoint,
    p1: &GridPoint,
    q0: &GridPoint,
    q1: &GridPoint,
) -> Option<GridPoint> {
    let r = (&p1.x - &p0.x, &p1.y - &p0.y);
    let s = (&q1.x - &q0.x, &q1.y - &q0.y);
    let denom = &r.0 * &s.1 - &r.1 * &s.0;
    if denom.is_zero() {
        return None;
    }
    let qp = (&q0.x - &p0.x, &q0.y - &p0.y);
    let t = (&qp.0 * &s.1 - &qp.1 * &s.0) / &denom;
    let u = (&qp.0 * &r.1 - &qp.1 * &r.0) / &denom;
    let unit = |v: &Scalar| !v.is_negative() && v <= &Scalar::one();
    if !unit(&t) || !unit(&u) {
        return None;
    }
    Some(GridPoint {
        x: &p0.x + &t * &r.0,
        y: &p0.y + &t * &r.1,
    })
}

/// Off-grid points where two curves meet transversally, by testing every
/// segment of one against every segment of the other.
pub fn off_grid_crossings(
    family: &CurveFamily,
    c1: &PolygonalCurve,
    c2: &PolygonalCurve,
) -> BTreeSet<GridPoint> {
    let mut out = BTreeSet::new();
    for s in c1.vertices.windows(2) {
        for t in c2.vertices.windows(2) {
            if let Some(p) = segment_intersection(&s[0], &s[1], &t[0], &t[1]) {
                // segment endpoints are grid points, so an off-grid hit is
                // interior to both segments
                if !family.grid.contains(&p) {
                    out.insert(p);
                }
            }
        }
    }
    out
}

/// Intersection multiplicity of curves `i` and `j`: common grid points plus
/// off-grid transversal crossings.
pub fn pair_multiplicity(
    family: &CurveFamily,
    incident: &[Vec<GridPoint>],
    i: usize,
    j: usize,
) -> u64 {
    let a: BTreeSet<&GridPoint> = incident[i].iter().collect();
    let common = incident[j].iter().filter(|p| a.contains(p)).count() as u64;
    common + off_grid_crossings(family, &family.curves[i], &family.curves[j]).len() as u64
}

/// Curve index pair and its multiplicity.
pub type PairCount = ((usize, usize), u64);

/// Every pairwise multiplicity and the total off-grid crossing count.
pub fn all_pairs(family: &CurveFamily) -> (Vec<PairCount>, u64) {
    let incident = incident_points(family);
    let mut pairs = Vec::new();
    let mut crossings = 0;
    for i in 0..family.len() {
        for j in i + 1..family.len() {
            pairs.push(((i, j), pair_multiplicity(family, &incident, i, j)));
            crossings +=
                off_grid_crossings(family, &family.curves[i], &family.curves[j]).len() as u64;
        }
    }
    (pairs, crossings)
}

/// `m1` with its lexicographically smallest witness, by counting curves
/// through every pair of grid points each curve contains.
pub fn m1(family: &CurveFamily) -> (u64, Option<(GridPoint, GridPoint)>) {
    let mut count: BTreeMap<(GridPoint, GridPoint), u64> = BTreeMap::new();
    for pts in incident_points(family) {
        for (k, p) in pts.iter().enumerate() {
            for q in &pts[k + 1..] {
                let key = if p < q {
                    (p.clone(), q.clone())
                } else {
                    (q.clone(), p.clone())
                };
                *count.entry(key).or_default() += 1;
            }
        }
    }
    let best = count.values().copied().max().unwrap_or(0);
    let witness = count.into_iter().find(|(_, c)| *c == best).map(|(k, _)| k);
    (best, witness)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::incidence::build_curves;

    #[test]
    fn span_small() {
        let a = PointSet::from_ints(&[0, 1]);
        let got: Vec<_> = k_fold_span(&a, 2, 1).into_iter().collect();
        assert_eq!(got, (-1..=2).map(Scalar::int).collect::<Vec<_>>());
    }

    #[test]
    fn shared_vertex_fixture() {
        // curves (4,4) and (5,5) share the vertex (9, 20)
        let b = PointSet::from_ints(&[4, 5]);
        let fam = build_curves(&b, &Scalar::one()).unwrap();
        let inc = incident_points(&fam);
        assert_eq!(pair_multiplicity(&fam, &inc, 0, 3), 1);
        assert_eq!(incidences(&fam), 8);
    }

    #[test]
    fn segments() {
        let p = |x: i64, y: i64| GridPoint {
            x: Scalar::int(x),
            y: Scalar::int(y),
        };
        let hit = segment_intersection(&p(0, 0), &p(2, 2), &p(0, 2), &p(2, 0)).unwrap();
        assert_eq!(hit, p(1, 1));
        assert!(segment_intersection(&p(0, 0), &p(1, 1), &p(2, 0), &p(3, -1)).is_none());
        assert!(segment_intersection(&p(0, 0), &p(1, 1), &p(1, 1), &p(2, 2)).is_none());
    }
}
