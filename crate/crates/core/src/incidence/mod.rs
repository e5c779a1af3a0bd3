//! Polygonal curve families on a rounded product grid.
//!
//! For a set `B` and a grid step `delta`, the points are `X x Y` with
//! `X = B + B` and `Y` the products `B.B` rounded to multiples of `delta`.
//! Each ordered pair `(a, b)` of `B` gives the curve through
//! `(x, <a(x - b)>)` for `x` in `B + b`, consecutive vertices joined by
//! segments.
//!
//! Two curves may share whole segments. These overlaps are resolved by a
//! counting convention instead of a geometric perturbation: the points two
//! curves have in common are the grid points lying on both, plus the
//! transversal crossings away from grid points. A crossing at a grid point is
//! a common grid point and is counted once.

mod analysis;
mod lattice;
mod report;

pub use analysis::{Audit, AuditFailure, FamilyAnalysis, PairStats};
pub use report::{
    run_incidence_experiment, szekely_check, CrossingConstant, ExperimentRun, ExperimentSpec,
    IncidenceReport, SzekelyInputs, SzekelyOutcome,
};

use serde::Serialize;

use crate::error::Result;
use crate::scalar::{round_to_grid, Scalar};
use crate::sets::{productset, sumset, PointSet};

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct GridPoint {
    pub x: Scalar,
    pub y: Scalar,
}

/// The grid `X x Y`, kept as its two coordinate sets.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Grid {
    pub xs: PointSet,
    pub ys: PointSet,
}

impl Grid {
    pub fn point_count(&self) -> u64 {
        self.xs.len() as u64 * self.ys.len() as u64
    }

    pub fn contains(&self, p: &GridPoint) -> bool {
        self.xs.contains(&p.x) && self.ys.contains(&p.y)
    }
}

/// The curve of slope `a` and offset `b`: vertices `(x, <a(x-b)>)` for
/// `x in B + b`, in increasing `x`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PolygonalCurve {
    pub slope: Scalar,
    pub offset: Scalar,
    pub vertices: Vec<GridPoint>,
}

impl PolygonalCurve {
    /// `a(x - b)` on the unrounded line.
    pub fn line_value(&self, x: &Scalar) -> Scalar {
        &self.slope * (x - &self.offset)
    }

    /// Whether `p` lies on a closed segment of the curve.
    pub fn passes_through(&self, p: &GridPoint) -> bool {
        let v = &self.vertices;
        let (Some(first), Some(last)) = (v.first(), v.last()) else {
            return false;
        };
        if p.x < first.x || p.x > last.x {
            return false;
        }
        let i = v.partition_point(|q| q.x < p.x);
        if v[i].x == p.x {
            return v[i].y == p.y;
        }
        let (q0, q1) = (&v[i - 1], &v[i]);
        (&p.y - &q0.y) * (&q1.x - &q0.x) == (&q1.y - &q0.y) * (&p.x - &q0.x)
    }
}

/// All curves of `B` on one grid.
#[derive(Clone, Debug)]
pub struct CurveFamily {
    pub base: PointSet,
    pub delta: Scalar,
    pub grid: Grid,
    /// Slope-major: curve `i * |B| + j` has slope `B[i]` and offset `B[j]`.
    pub curves: Vec<PolygonalCurve>,
}

impl CurveFamily {
    pub fn len(&self) -> usize {
        self.curves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.curves.is_empty()
    }

    /// Restricts to the listed curves, keeping the grid.
    pub fn subfamily(&self, indices: &[usize]) -> CurveFamily {
        CurveFamily {
            base: self.base.clone(),
            delta: self.delta.clone(),
            grid: self.grid.clone(),
            curves: indices.iter().map(|&i| self.curves[i].clone()).collect(),
        }
    }
}

/// Warnings about a base set that does not meet the experiment's
/// preconditions (1-separated, inside one interval `[x, 2x)`).
pub fn base_warnings(b: &PointSet) -> Vec<String> {
    let mut w = Vec::new();
    if !b.is_separated(&Scalar::one()) {
        w.push(format!(
            "base set is not 1-separated (min gap {:?})",
            b.min_gap()
        ));
    }
    if let (Some(lo), Some(hi)) = (b.first(), b.last()) {
        if hi >= &(lo * Scalar::int(2)) {
            w.push(format!(
                "base set [{lo}, {hi}] is not inside one interval [x, 2x)"
            ));
        }
    }
    w
}

/// `X = B + B` and `Y = <B.B>`.
pub fn build_grid(b: &PointSet, delta: &Scalar) -> Result<Grid> {
    Ok(Grid {
        xs: sumset(b, b),
        ys: productset(b, b, Some(delta))?,
    })
}

pub fn build_curves(b: &PointSet, delta: &Scalar) -> Result<CurveFamily> {
    b.require_positive("curve family base")?;
    let grid = build_grid(b, delta)?;
    let mut curves = Vec::with_capacity(b.len() * b.len());
    for a in b {
        // x - off runs over B, so the heights are the same for every offset
        let heights = b
            .iter()
            .map(|t| round_to_grid(&(a * t), delta))
            .collect::<Result<Vec<_>>>()?;
        for off in b {
            let vertices = b
                .iter()
                .zip(&heights)
                .map(|(t, y)| GridPoint {
                    x: t + off,
                    y: y.clone(),
                })
                .collect();
            curves.push(PolygonalCurve {
                slope: a.clone(),
                offset: off.clone(),
                vertices,
            });
        }
    }
    Ok(CurveFamily {
        base: b.clone(),
        delta: delta.clone(),
        grid,
        curves,
    })
}

/// Point-curve incidences between the family and its grid.
pub fn count_incidences(family: &CurveFamily) -> Result<u64> {
    Ok(FamilyAnalysis::incidences_only(family)?.incidences)
}

/// Largest number of curves through a common pair of distinct grid points,
/// with the lexicographically smallest witness pair.
pub fn pair_multiplicity_m1(family: &CurveFamily) -> Result<(u64, Option<(GridPoint, GridPoint)>)> {
    let a = FamilyAnalysis::run(family)?;
    Ok((a.m1, a.m1_witness))
}

/// Intersection multiplicity of curves `i` and `j` of the family.
pub fn pairwise_intersections(family: &CurveFamily, i: usize, j: usize) -> Result<u64> {
    let sub = family.subfamily(&[i, j]);
    let a = FamilyAnalysis::run(&sub)?;
    Ok(a.multiplicity_sum)
}

/// Exact average of the pairwise multiplicities; `None` for fewer than two curves.
pub fn average_multiplicity_m2(family: &CurveFamily) -> Result<Option<Scalar>> {
    Ok(FamilyAnalysis::run(family)?.m2())
}

/// Transversal crossings away from grid points, summed over curve pairs.
pub fn drawing_crossings(family: &CurveFamily) -> Result<u64> {
    Ok(FamilyAnalysis::run(family)?.crossings)
}
