//! Perturbation budgets, perturbed product and sum sets, and adversarial
//! assignments that try to make the perturbed product set small.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::Rng;
use serde::Serialize;

use crate::error::{arg, LabError, Result};
use crate::rng::{lab_rng, sub_seed};
use crate::scalar::{grid_index, power_enclosure, Enclosure, Scalar};
use crate::sets::PointSet;

/// Resolution of the rational grid random deltas are drawn from.
const DELTA_GRID: i64 = 1 << 16;

#[derive(Clone, Debug)]
enum Bound {
    /// `|delta| < scale_lo / factor`, `scale_lo` the lower end of `n^(1-eps)`.
    Relative,
    /// `|delta| < bound` for every factor and every sum.
    Absolute(Scalar),
}

/// The open bounds `|delta_{a,b}| < n^(1-eps)/a`, `|delta'_{a,b}| < n^(1-eps)/b`
/// and `|delta''_{a,b}| < n^(1-eps)/(a+b)`.
///
/// Bounds use the lower end of an enclosure of `n^(1-eps)`, so anything
/// accepted here satisfies the exact open inequality.
#[derive(Clone, Debug)]
pub struct PerturbationBudget {
    pub n: usize,
    pub epsilon: Scalar,
    scale: Enclosure,
    kind: Bound,
}

impl PerturbationBudget {
    pub fn new(n: usize, epsilon: &Scalar, bits: u32) -> Result<Self> {
        if n == 0 {
            return arg("budget needs n >= 1");
        }
        if !epsilon.is_positive() || epsilon > &Scalar::one() {
            return arg(format!("epsilon must lie in (0, 1], got {epsilon}"));
        }
        let scale = power_enclosure(n as u64, &(Scalar::one() - epsilon), bits)?;
        Ok(PerturbationBudget {
            n,
            epsilon: epsilon.clone(),
            scale,
            kind: Bound::Relative,
        })
    }

    /// A flat budget `|delta| < bound` used to probe regimes wider than the
    /// relative one.
    pub fn absolute(n: usize, bound: Scalar) -> Result<Self> {
        if !bound.is_positive() {
            return arg("absolute budget must be positive");
        }
        Ok(PerturbationBudget {
            n,
            epsilon: Scalar::one(),
            scale: Enclosure::exact(Scalar::one(), crate::scalar::DEFAULT_BITS),
            kind: Bound::Absolute(bound),
        })
    }

    /// Enclosure of `n^(1-eps)`.
    pub fn scale(&self) -> &Enclosure {
        &self.scale
    }

    pub fn is_absolute(&self) -> bool {
        matches!(self.kind, Bound::Absolute(_))
    }

    /// Certified open bound on the perturbation of factor `a`.
    pub fn factor_bound(&self, a: &Scalar) -> Scalar {
        match &self.kind {
            Bound::Relative => &self.scale.lo / a,
            Bound::Absolute(b) => b.clone(),
        }
    }

    /// Certified open bound on the perturbation of the sum `s = a + b`.
    pub fn sum_bound(&self, s: &Scalar) -> Scalar {
        self.factor_bound(s)
    }

    pub fn bounds_for(&self, a: &PointSet) -> BTreeMap<Scalar, Scalar> {
        a.iter()
            .map(|x| (x.clone(), self.factor_bound(x)))
            .collect()
    }
}

/// Perturbations attached to one ordered pair.
#[derive(Clone, Debug, PartialEq, Eq, Default, Serialize)]
pub struct Deltas {
    pub delta: Scalar,
    pub delta_prime: Scalar,
    pub delta_sum: Scalar,
}

impl Deltas {
    pub fn product_only(delta: Scalar) -> Self {
        Deltas {
            delta,
            ..Default::default()
        }
    }
}

/// A table of perturbations keyed by ordered pair `(a, b)`.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct PerturbationAssignment {
    entries: BTreeMap<(Scalar, Scalar), Deltas>,
}

impl PerturbationAssignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, a: Scalar, b: Scalar, d: Deltas) {
        self.entries.insert((a, b), d);
    }

    pub fn get(&self, a: &Scalar, b: &Scalar) -> Option<&Deltas> {
        self.entries.get(&(a.clone(), b.clone()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(Scalar, Scalar), &Deltas)> {
        self.entries.iter()
    }

    pub fn is_symmetric(&self) -> bool {
        self.entries.iter().all(|((a, b), d)| {
            self.get(b, a).is_some_and(|e| {
                e.delta == d.delta_prime && e.delta_prime == d.delta && e.delta_sum == d.delta_sum
            })
        })
    }

    /// Largest `|delta|`, `|delta'|` or `|delta''|` over all entries.
    pub fn max_abs(&self) -> Scalar {
        self.entries
            .values()
            .flat_map(|d| [d.delta.abs(), d.delta_prime.abs(), d.delta_sum.abs()])
            .max()
            .unwrap_or_else(Scalar::zero)
    }

    fn require(&self, a: &Scalar, b: &Scalar) -> Result<&Deltas> {
        self.get(a, b).ok_or_else(|| {
            LabError::Argument(format!("assignment has no entry for pair ({a}, {b})"))
        })
    }

    /// Serializes to the `# perturbation v1` CSV format.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("# perturbation v1\n");
        for ((a, b), d) in &self.entries {
            writeln!(out, "{a},{b},{},{},{}", d.delta, d.delta_prime, d.delta_sum).unwrap();
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h.trim() == "# perturbation v1" => {}
            other => {
                return Err(LabError::Parse(format!(
                    "bad perturbation header {other:?}"
                )))
            }
        }
        let mut asg = PerturbationAssignment::new();
        for line in lines.filter(|l| !l.trim().is_empty()) {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 5 {
                return Err(LabError::Parse(format!("expected 5 fields, got {line:?}")));
            }
            let p = |i: usize| f[i].parse::<Scalar>();
            asg.insert(
                p(0)?,
                p(1)?,
                Deltas {
                    delta: p(2)?,
                    delta_prime: p(3)?,
                    delta_sum: p(4)?,
                },
            );
        }
        Ok(asg)
    }
}

/// All deltas zero.
pub fn zero_assignment(a: &PointSet) -> PerturbationAssignment {
    let mut asg = PerturbationAssignment::new();
    for x in a {
        for y in a {
            asg.insert(x.clone(), y.clone(), Deltas::default());
        }
    }
    asg
}

fn draw_inside(rng: &mut impl Rng, bound: &Scalar) -> Scalar {
    let k = rng.gen_range(-(DELTA_GRID - 1)..DELTA_GRID);
    bound * Scalar::ratio(k, DELTA_GRID)
}

/// Every delta drawn uniformly from a rational grid strictly inside its bound.
pub fn random_assignment(
    a: &PointSet,
    budget: &PerturbationBudget,
    seed: u64,
) -> PerturbationAssignment {
    let mut rng = lab_rng(seed);
    let mut asg = PerturbationAssignment::new();
    for x in a {
        for y in a {
            let d = Deltas {
                delta: draw_inside(&mut rng, &budget.factor_bound(x)),
                delta_prime: draw_inside(&mut rng, &budget.factor_bound(y)),
                delta_sum: draw_inside(&mut rng, &budget.sum_bound(&(x + y))),
            };
            asg.insert(x.clone(), y.clone(), d);
        }
    }
    asg
}

/// The arithmetic-progression adversary.
///
/// Returns `A = {x, x+1, ..., x+n-1}` (`a_j = x + j`) together with
/// `delta_{a_j,a_k} = -jk/(x+k)` and `delta' = 0`, so that
/// `(a_j + delta) a_k = x^2 + (j+k)x` exactly and the perturbed product set
/// is an arithmetic progression of `2n-1` terms.
pub fn geometric_collapse(x: &Scalar, n: usize) -> Result<(PointSet, PerturbationAssignment)> {
    if n == 0 {
        return arg("collapse needs n >= 1");
    }
    if x < &Scalar::int(n as i64) {
        return arg(format!("collapse needs x >= n, got x={x}, n={n}"));
    }
    let elems: Vec<Scalar> = (0..n as i64).map(|j| x + Scalar::int(j)).collect();
    let mut asg = PerturbationAssignment::new();
    for (j, aj) in elems.iter().enumerate() {
        for (k, ak) in elems.iter().enumerate() {
            let delta = -(Scalar::int((j * k) as i64) / ak);
            asg.insert(aj.clone(), ak.clone(), Deltas::product_only(delta));
        }
    }
    Ok((PointSet::new(elems)?, asg))
}

/// `{(a + delta_{a,b})(b + delta'_{a,b}) : a, b in A}`.
pub fn perturbed_product_set(a: &PointSet, asg: &PerturbationAssignment) -> Result<PointSet> {
    let mut out = Vec::with_capacity(a.len() * a.len());
    for x in a {
        for y in a {
            let d = asg.require(x, y)?;
            let f1 = x + &d.delta;
            let f2 = y + &d.delta_prime;
            if !f1.is_positive() || !f2.is_positive() {
                return Err(LabError::Domain(format!(
                    "non-positive perturbed factor for pair ({x}, {y}): {f1} * {f2}"
                )));
            }
            out.push(f1 * f2);
        }
    }
    Ok(PointSet::from_unsorted(out))
}

/// `{a + b + delta''_{a,b} : a, b in A}`.
pub fn perturbed_sum_set(a: &PointSet, asg: &PerturbationAssignment) -> Result<PointSet> {
    let mut out = Vec::with_capacity(a.len() * a.len());
    for x in a {
        for y in a {
            let d = asg.require(x, y)?;
            out.push(x + y + &d.delta_sum);
        }
    }
    Ok(PointSet::from_unsorted(out))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaField {
    Delta,
    DeltaPrime,
    DeltaSum,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub a: Scalar,
    pub b: Scalar,
    pub field: DeltaField,
    pub value: Scalar,
    pub bound: Scalar,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct ValidationReport {
    pub pairs_checked: usize,
    pub missing_pairs: Vec<(Scalar, Scalar)>,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty() && self.missing_pairs.is_empty()
    }
}

/// Lists every pair whose deltas reach or exceed their certified bound.
pub fn validate_assignment(
    a: &PointSet,
    budget: &PerturbationBudget,
    asg: &PerturbationAssignment,
) -> ValidationReport {
    let mut rep = ValidationReport::default();
    for x in a {
        for y in a {
            let Some(d) = asg.get(x, y) else {
                rep.missing_pairs.push((x.clone(), y.clone()));
                continue;
            };
            rep.pairs_checked += 1;
            let checks = [
                (DeltaField::Delta, &d.delta, budget.factor_bound(x)),
                (
                    DeltaField::DeltaPrime,
                    &d.delta_prime,
                    budget.factor_bound(y),
                ),
                (
                    DeltaField::DeltaSum,
                    &d.delta_sum,
                    budget.sum_bound(&(x + y)),
                ),
            ];
            for (field, value, bound) in checks {
                if value.abs() >= bound {
                    rep.violations.push(Violation {
                        a: x.clone(),
                        b: y.clone(),
                        field,
                        value: value.clone(),
                        bound,
                    });
                }
            }
        }
    }
    rep
}

#[derive(Clone, Debug)]
pub struct SearchOutcome {
    pub assignment: PerturbationAssignment,
    pub product_count: usize,
    /// Quantum and phase of the winning lattice; `None` when no snap helped.
    pub quantum: Option<(Scalar, Scalar)>,
}

/// Number of random lattice phases tried per quantum, besides phase 0.
const SEARCH_PHASES: u64 = 3;

/// Snap-to-lattice adversary.
///
/// For each quantum `q` (and a few seeded phases `phi`), every product `ab`
/// is moved to the nearest point of `phi + qZ` when that point is reachable
/// by perturbing `a` alone inside its budget. The assignment giving the
/// smallest perturbed product set wins; the unperturbed products are the
/// baseline, so the result is never worse than `|A.A|`.
pub fn collapse_search(
    a: &PointSet,
    budget: &PerturbationBudget,
    quanta: &[Scalar],
    seed: u64,
) -> Result<SearchOutcome> {
    let base = zero_assignment(a);
    let mut best = SearchOutcome {
        product_count: perturbed_product_set(a, &base)?.len(),
        assignment: base,
        quantum: None,
    };
    for (qi, q) in quanta.iter().enumerate() {
        if !q.is_positive() {
            return arg(format!("quantum must be positive, got {q}"));
        }
        let mut rng = lab_rng(sub_seed(seed, qi as u64));
        let mut phases = vec![Scalar::zero()];
        phases.extend((0..SEARCH_PHASES).map(|_| q * Scalar::ratio(rng.gen_range(1..16), 16)));
        for phase in phases {
            let asg = snap_assignment(a, budget, q, &phase)?;
            let count = perturbed_product_set(a, &asg)?.len();
            if count < best.product_count {
                best = SearchOutcome {
                    assignment: asg,
                    product_count: count,
                    quantum: Some((q.clone(), phase)),
                };
            }
        }
    }
    Ok(best)
}

fn snap_assignment(
    a: &PointSet,
    budget: &PerturbationBudget,
    q: &Scalar,
    phase: &Scalar,
) -> Result<PerturbationAssignment> {
    let mut asg = PerturbationAssignment::new();
    for x in a {
        let bound = budget.factor_bound(x);
        for y in a {
            let prod = x * y;
            let m = grid_index(&(&prod - phase), q)?;
            let target = phase + Scalar::from_bigint(m) * q;
            let delta = &target / y - x;
            // the reachable targets form an interval centred on ab, so the
            // nearest lattice point is the only candidate worth testing
            let ok = delta.abs() < bound && (x + &delta).is_positive();
            let d = if ok { delta } else { Scalar::zero() };
            asg.insert(x.clone(), y.clone(), Deltas::product_only(d));
        }
    }
    Ok(asg)
}

/// Exact largest distance between a perturbed product of `(a, b)` and `ab`
/// over the budget box: `bound_a * b + bound_b * a + bound_a * bound_b`.
pub fn product_deviation_radius(a: &Scalar, b: &Scalar, budget: &PerturbationBudget) -> Scalar {
    let (ba, bb) = (budget.factor_bound(a), budget.factor_bound(b));
    &ba * b + &bb * a + &ba * &bb
}
