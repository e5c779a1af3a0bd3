//! Incidence bound bookkeeping and the end-to-end incidence experiment.

use std::time::Instant;

use serde::{Serialize, Serializer};

use super::{base_warnings, build_curves, Audit, CurveFamily, FamilyAnalysis, GridPoint};
use crate::error::{arg, Result};
use crate::scalar::{ln_enclosure, power_enclosure, rational_power_enclosure, Enclosure, Scalar};
use crate::sets::PointSet;
use crate::structure::decompose_dyadic;

/// Counts entering the incidence bound
/// `I << (m1 m2)^(1/3) (p ell)^(2/3) + ell + m1 p`.
#[derive(Clone, Debug)]
pub struct SzekelyInputs {
    pub ell: u64,
    pub p: u64,
    pub incidences: u64,
    pub m1: u64,
    pub m2: Scalar,
    pub crossings: u64,
}

/// Outcome of the crossing-lemma dichotomy on the drawing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CrossingConstant {
    /// `e >= 5 p m1`: `crossings * p^2 * m1 / e^3`, an upper estimate of the
    /// constant since drawing crossings bound the crossing number from above.
    Value(Enclosure),
    /// `e < 5 p m1`.
    SparseBranch,
}

impl Serialize for CrossingConstant {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            CrossingConstant::Value(e) => e.serialize(s),
            CrossingConstant::SparseBranch => s.serialize_str("branch_e_lt_5nm"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SzekelyOutcome {
    pub edges: i64,
    /// `I / ((m1 m2)^(1/3) (p ell)^(2/3) + ell + m1 p)`.
    pub c_szekely: Enclosure,
    pub c_crossing: CrossingConstant,
}

pub fn szekely_check(inp: &SzekelyInputs, bits: u32) -> Result<SzekelyOutcome> {
    if inp.ell == 0 || inp.p == 0 {
        return arg("incidence bound needs at least one curve and one point");
    }
    let int = |v: u64| Scalar::from_bigint(v.into());
    let (ell, p, m1) = (int(inp.ell), int(inp.p), int(inp.m1));
    let work = bits + 16;
    let cube = rational_power_enclosure(&(&m1 * &inp.m2), &Scalar::ratio(1, 3), work)?;
    let grid = rational_power_enclosure(&(&p * &ell), &Scalar::ratio(2, 3), work)?;
    let linear = Enclosure::exact(&ell + &m1 * &p, work);
    let denom = cube.mul(&grid).add(&linear);
    let c_szekely = Enclosure::exact(int(inp.incidences), work).div(&denom)?;
    let c_szekely = Enclosure { bits, ..c_szekely }.outward();

    let edges = inp.incidences as i64 - inp.ell as i64;
    let threshold = Scalar::int(5) * &p * &m1;
    let c_crossing = if edges > 0 && Scalar::int(edges) >= threshold {
        let e = Scalar::int(edges);
        let v = int(inp.crossings) * &p * &p * &m1 / (&e * &e * &e);
        CrossingConstant::Value(Enclosure::exact(v, bits))
    } else {
        CrossingConstant::SparseBranch
    };
    Ok(SzekelyOutcome {
        edges,
        c_szekely,
        c_crossing,
    })
}

/// Parameters of one incidence experiment.
#[derive(Clone, Debug)]
pub struct ExperimentSpec {
    pub n: usize,
    pub epsilon: Scalar,
    /// Anchor the input set was generated from; reported, not used.
    pub x: Scalar,
    pub seed: u64,
    /// Grid step; defaults to the lower end of an enclosure of `n^(1-eps)`.
    pub delta_override: Option<Scalar>,
    pub bits: u32,
}

/// Machine-readable summary of one incidence experiment.
#[derive(Clone, Debug, Serialize)]
pub struct IncidenceReport {
    pub n: usize,
    pub epsilon: Scalar,
    pub x: Scalar,
    pub delta: Scalar,
    pub ell: u64,
    pub p: u64,
    #[serde(rename = "I")]
    pub incidences: u64,
    pub e: i64,
    pub m1: u64,
    /// Lexicographically smallest point pair carried by `m1` curves.
    pub m1_witness: Option<(GridPoint, GridPoint)>,
    pub m2: Scalar,
    pub crossings: u64,
    #[serde(rename = "C_szekely")]
    pub c_szekely: Enclosure,
    pub c_crossing: CrossingConstant,
    pub seed: u64,
    pub elapsed_ms: u64,
    pub base_size: usize,
    pub bucket_index: i64,
    pub x_size: usize,
    pub y_size: usize,
    /// Edge multiplicity of the drawn multigraph; never exceeds `m1`.
    pub m_edge: u64,
    pub m_edge_differs_from_m1: bool,
    pub max_pair_multiplicity: u64,
    /// `1 + 2 ln N / N^eps` with `N = |B|`.
    pub m2_reference_base: Enclosure,
    /// `1 + 2 ln N / N^eps` with `N = n`.
    pub m2_reference_n: Enclosure,
    pub warnings: Vec<String>,
}

impl IncidenceReport {
    /// JSON without the timing field, for determinism comparisons.
    pub fn to_json_untimed(&self) -> String {
        let mut v = serde_json::to_value(self).expect("report serializes");
        v.as_object_mut().unwrap().remove("elapsed_ms");
        serde_json::to_string_pretty(&v).unwrap()
    }
}

/// `1 + 2 ln N / N^eps`.
fn m2_reference(count: usize, epsilon: &Scalar, bits: u32) -> Result<Enclosure> {
    let n = count.max(1) as u64;
    let ln = ln_enclosure(&Scalar::int(n as i64), bits + 16)?;
    let pw = power_enclosure(n, epsilon, bits + 16)?;
    let one = Enclosure::exact(Scalar::one(), bits);
    Ok(one.add(&ln.scale(&Scalar::int(2)).div(&pw)?).outward())
}

/// Everything an incidence run produced, for callers that audit further.
pub struct ExperimentRun {
    pub report: IncidenceReport,
    pub family: CurveFamily,
    pub analysis: FamilyAnalysis,
}

impl ExperimentRun {
    pub fn audit(&self) -> Audit {
        self.analysis.audit(&self.family)
    }
}

/// Restricts `a` to its fullest dyadic interval, builds the grid and curve
/// family there, and measures it.
pub fn run_incidence_experiment(spec: &ExperimentSpec, a: &PointSet) -> Result<ExperimentRun> {
    let started = Instant::now();
    if !spec.epsilon.is_positive() || spec.epsilon > Scalar::one() {
        return arg(format!("epsilon must lie in (0, 1], got {}", spec.epsilon));
    }
    let dec = decompose_dyadic(a)?;
    let (Some(bucket_index), Some(base)) = (dec.best_index, dec.best_bucket()) else {
        return arg("empty input set");
    };
    if base.len() < 2 {
        return arg(format!(
            "best dyadic bucket has {} element(s); need at least 2",
            base.len()
        ));
    }
    let delta = match &spec.delta_override {
        Some(d) if d.is_positive() => d.clone(),
        Some(d) => return arg(format!("grid step must be positive, got {d}")),
        None => power_enclosure(spec.n as u64, &(Scalar::one() - &spec.epsilon), spec.bits)?.lo,
    };
    let family = build_curves(base, &delta)?;
    let analysis = FamilyAnalysis::run(&family)?;
    let m2 = analysis.m2().unwrap_or_else(Scalar::zero);
    let sz = szekely_check(
        &SzekelyInputs {
            ell: analysis.ell,
            p: analysis.p,
            incidences: analysis.incidences,
            m1: analysis.m1,
            m2: m2.clone(),
            crossings: analysis.crossings,
        },
        spec.bits,
    )?;
    let report = IncidenceReport {
        n: spec.n,
        epsilon: spec.epsilon.clone(),
        x: spec.x.clone(),
        delta,
        ell: analysis.ell,
        p: analysis.p,
        incidences: analysis.incidences,
        e: sz.edges,
        m1: analysis.m1,
        m1_witness: analysis.m1_witness.clone(),
        m2,
        crossings: analysis.crossings,
        c_szekely: sz.c_szekely,
        c_crossing: sz.c_crossing,
        seed: spec.seed,
        elapsed_ms: started.elapsed().as_millis() as u64,
        base_size: base.len(),
        bucket_index,
        x_size: family.grid.xs.len(),
        y_size: family.grid.ys.len(),
        m_edge: analysis.m_edge,
        m_edge_differs_from_m1: analysis.m_edge != analysis.m1,
        max_pair_multiplicity: analysis.max_pair_multiplicity,
        m2_reference_base: m2_reference(base.len(), &spec.epsilon, spec.bits)?,
        m2_reference_n: m2_reference(spec.n, &spec.epsilon, spec.bits)?,
        warnings: base_warnings(base),
    };
    Ok(ExperimentRun {
        report,
        family,
        analysis,
    })
}
