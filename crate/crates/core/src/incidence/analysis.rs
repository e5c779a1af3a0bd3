//! Family-wide statistics: incidences, pairwise multiplicities, crossings,
//! `m1`, and the exact per-pair audit.

use rayon::prelude::*;
use serde::Serialize;

use super::lattice::{common_ids, off_grid_changes, walk_pair, Frac, Lattice, SignChange};
use super::{CurveFamily, GridPoint};
use crate::error::Result;
use crate::scalar::Scalar;

/// Multiplicity data for one unordered curve pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct PairStats {
    pub i: usize,
    pub j: usize,
    /// Grid points on both curves.
    pub common_points: u64,
    /// Transversal crossings away from grid points.
    pub off_grid_crossings: u64,
}

impl PairStats {
    pub fn multiplicity(&self) -> u64 {
        self.common_points + self.off_grid_crossings
    }
}

#[derive(Default)]
struct Acc {
    multiplicity_sum: u64,
    crossings: u64,
    max_multiplicity: u64,
    /// Point pairs shared by a curve pair, one entry per curve pair.
    shared: Vec<(u64, u64)>,
}

impl Acc {
    fn merge(mut self, mut o: Acc) -> Acc {
        self.multiplicity_sum += o.multiplicity_sum;
        self.crossings += o.crossings;
        self.max_multiplicity = self.max_multiplicity.max(o.max_multiplicity);
        self.shared.append(&mut o.shared);
        self
    }
}

#[derive(Debug)]
pub struct FamilyAnalysis {
    pub ell: u64,
    pub p: u64,
    pub incidences: u64,
    pub m1: u64,
    pub m1_witness: Option<(GridPoint, GridPoint)>,
    /// Largest number of curves drawing the same edge (consecutive incident
    /// points), i.e. the edge multiplicity of the drawn multigraph.
    pub m_edge: u64,
    pub multiplicity_sum: u64,
    pub max_pair_multiplicity: u64,
    pub crossings: u64,
    lattice: Lattice,
}

impl FamilyAnalysis {
    pub(crate) fn incidences_only(family: &CurveFamily) -> Result<FamilyAnalysis> {
        let lattice = Lattice::build(family)?;
        let incidences = lattice.curves.iter().map(|c| c.incident.len() as u64).sum();
        Ok(FamilyAnalysis {
            ell: family.curves.len() as u64,
            p: family.grid.point_count(),
            incidences,
            m1: 0,
            m1_witness: None,
            m_edge: 0,
            multiplicity_sum: 0,
            max_pair_multiplicity: 0,
            crossings: 0,
            lattice,
        })
    }

    pub fn run(family: &CurveFamily) -> Result<FamilyAnalysis> {
        let mut out = Self::incidences_only(family)?;
        let lat = &out.lattice;
        let ell = lat.curves.len();

        let acc = (0..ell)
            .into_par_iter()
            .map(|i| {
                let mut acc = Acc::default();
                for j in i + 1..ell {
                    let st = pair_stats(lat, i, j, Some(&mut acc.shared));
                    let m = st.multiplicity();
                    acc.multiplicity_sum += m;
                    acc.crossings += st.off_grid_crossings;
                    acc.max_multiplicity = acc.max_multiplicity.max(m);
                }
                acc
            })
            .reduce(Acc::default, Acc::merge);

        let (m1, witness) = max_shared(lat, acc.shared);
        out.m1 = m1;
        out.m1_witness =
            witness.map(|(p, q)| (grid_point(family, lat, p), grid_point(family, lat, q)));
        out.m_edge = edge_multiplicity(lat);
        out.multiplicity_sum = acc.multiplicity_sum;
        out.max_pair_multiplicity = acc.max_multiplicity;
        out.crossings = acc.crossings;
        Ok(out)
    }

    pub fn pair_count(&self) -> u64 {
        self.ell * self.ell.saturating_sub(1) / 2
    }

    /// Average pairwise multiplicity; `None` for fewer than two curves.
    pub fn m2(&self) -> Option<Scalar> {
        let pairs = self.pair_count();
        (pairs > 0).then(|| Scalar::ratio(self.multiplicity_sum as i64, pairs as i64))
    }

    pub fn edges(&self) -> i64 {
        self.incidences as i64 - self.ell as i64
    }

    pub fn pair(&self, i: usize, j: usize) -> PairStats {
        pair_stats(&self.lattice, i, j, None)
    }

    /// Incident grid points of curve `i`, ascending in `x`.
    pub fn incident_points(&self, family: &CurveFamily, i: usize) -> Vec<GridPoint> {
        self.lattice.curves[i]
            .incident
            .iter()
            .map(|&id| grid_point(family, &self.lattice, id))
            .collect()
    }

    /// Re-walks every curve pair and checks the exact geometric invariants
    /// of the construction.
    pub fn audit(&self, family: &CurveFamily) -> Audit {
        audit(self, family)
    }
}

fn grid_point(family: &CurveFamily, lat: &Lattice, id: u64) -> GridPoint {
    let ny = lat.ny();
    GridPoint {
        x: family.grid.xs.elements()[(id / ny) as usize].clone(),
        y: family.grid.ys.elements()[(id % ny) as usize].clone(),
    }
}

fn pair_stats(
    lat: &Lattice,
    i: usize,
    j: usize,
    shared: Option<&mut Vec<(u64, u64)>>,
) -> PairStats {
    let (c1, c2) = (&lat.curves[i], &lat.curves[j]);
    let walk = walk_pair(c1, c2, false);
    let common = if walk.disjoint {
        Vec::new()
    } else {
        common_ids(&c1.incident, &c2.incident)
    };
    let off = off_grid_changes(lat, &walk, &common).count() as u64;
    if let Some(shared) = shared {
        for (k, &p) in common.iter().enumerate() {
            for &q in &common[k + 1..] {
                shared.push((p, q));
            }
        }
    }
    PairStats {
        i,
        j,
        common_points: common.len() as u64,
        off_grid_crossings: off,
    }
}

/// `m1` from the point pairs shared by curve pairs: a point pair on `r`
/// curves appears `r(r-1)/2` times.
fn max_shared(lat: &Lattice, mut shared: Vec<(u64, u64)>) -> (u64, Option<(u64, u64)>) {
    shared.par_sort_unstable();
    let mut best: Option<(u64, (u64, u64))> = None;
    let mut k = 0;
    while k < shared.len() {
        let run = shared[k..].iter().take_while(|&&p| p == shared[k]).count() as u64;
        // first run of the largest length is the lexicographically smallest
        if best.is_none_or(|(b, _)| run > b) {
            best = Some((run, shared[k]));
        }
        k += run as usize;
    }
    if let Some((run, pair)) = best {
        let r = num_integer::Roots::sqrt(&(1 + 8 * run)).div_ceil(2);
        debug_assert_eq!(r * (r - 1) / 2, run);
        return (r, Some(pair));
    }
    // no two curves share a pair of points
    let witness = lat
        .curves
        .iter()
        .filter(|c| c.incident.len() >= 2)
        .map(|c| (c.incident[0], c.incident[1]))
        .min();
    (u64::from(witness.is_some()), witness)
}

fn edge_multiplicity(lat: &Lattice) -> u64 {
    let mut edges: Vec<(u64, u64)> = lat
        .curves
        .iter()
        .flat_map(|c| c.incident.windows(2).map(|w| (w[0], w[1])))
        .collect();
    edges.par_sort_unstable();
    let mut best = 0u64;
    let mut k = 0;
    while k < edges.len() {
        let run = edges[k..].iter().take_while(|&&e| e == edges[k]).count();
        best = best.max(run as u64);
        k += run;
    }
    best
}

/// One failed invariant instance.
#[derive(Clone, Debug, Serialize)]
pub struct AuditFailure {
    pub check: &'static str,
    pub detail: String,
}

/// Tallies of the exact invariant checks over a family.
#[derive(Clone, Debug, Default, Serialize)]
pub struct Audit {
    /// `(check, passed, failed)`.
    pub tallies: Vec<(&'static str, u64, u64)>,
    /// At most a handful of failures per check, for diagnosis.
    pub failures: Vec<AuditFailure>,
}

impl Audit {
    pub fn ok(&self) -> bool {
        self.tallies.iter().all(|t| t.2 == 0)
    }

    pub fn tally(&self, check: &str) -> Option<(u64, u64)> {
        self.tallies
            .iter()
            .find(|t| t.0 == check)
            .map(|t| (t.1, t.2))
    }

    fn record(&mut self, check: &'static str, ok: bool, detail: impl FnOnce() -> String) {
        let slot = match self.tallies.iter().position(|t| t.0 == check) {
            Some(k) => k,
            None => {
                self.tallies.push((check, 0, 0));
                self.tallies.len() - 1
            }
        };
        if ok {
            self.tallies[slot].1 += 1;
        } else {
            self.tallies[slot].2 += 1;
            if self.failures.iter().filter(|f| f.check == check).count() < 5 {
                self.failures.push(AuditFailure {
                    check,
                    detail: detail(),
                });
            }
        }
    }

    fn pass_many(&mut self, check: &'static str, count: u64) {
        match self.tallies.iter_mut().find(|t| std::ptr::eq(t.0, check)) {
            Some(t) => t.1 += count,
            None => self.tallies.push((check, count, 0)),
        }
    }

    fn merge(mut self, o: Audit) -> Audit {
        for (name, p, f) in o.tallies {
            match self.tallies.iter_mut().find(|t| t.0 == name) {
                Some(t) => {
                    t.1 += p;
                    t.2 += f;
                }
                None => self.tallies.push((name, p, f)),
            }
        }
        for f in o.failures {
            if self.failures.iter().filter(|g| g.check == f.check).count() < 5 {
                self.failures.push(f);
            }
        }
        self
    }
}

#[derive(Clone, Copy)]
enum Contact {
    Grid(i128),
    Crossing(SignChange),
}

impl Contact {
    fn exact_x(self, scale: &Scalar) -> Scalar {
        match self {
            Contact::Grid(t) => Scalar::from_bigint(t.into()) / scale,
            Contact::Crossing(ch) => ch.root() / scale,
        }
    }

    fn approx_lattice_x(self) -> f64 {
        match self {
            Contact::Grid(t) => t as f64,
            Contact::Crossing(ch) => {
                let val = |(a, b): (Frac, Frac)| {
                    a.num as f64 / a.den as f64 - b.num as f64 / b.den as f64
                };
                let (fl, fh) = (val(ch.f_lo), val(ch.f_hi));
                ch.t_lo as f64 + (ch.t_hi - ch.t_lo) as f64 * fl / (fl - fh)
            }
        }
    }
}

/// Line-gap test at contacts: decided in floating point when the margin
/// clearly exceeds the rounding error, exactly otherwise.
struct Window<'a> {
    family: &'a CurveFamily,
    scale: &'a Scalar,
    scale_f: f64,
    two_delta: &'a Scalar,
    two_delta_f: f64,
    lines: Vec<(f64, f64)>,
}

impl<'a> Window<'a> {
    fn new(family: &'a CurveFamily, scale: &'a Scalar, two_delta: &'a Scalar) -> Self {
        let lines = family
            .curves
            .iter()
            .map(|c| (c.slope.to_f64(), c.offset.to_f64()))
            .collect();
        Window {
            family,
            scale,
            scale_f: scale.to_f64(),
            two_delta,
            two_delta_f: two_delta.to_f64(),
            lines,
        }
    }

    fn holds(&self, i: usize, j: usize, contact: Contact) -> bool {
        let x = contact.approx_lattice_x() / self.scale_f;
        let ((a, b), (c, d)) = (self.lines[i], self.lines[j]);
        let gap = (c * (x - d) - a * (x - b)).abs();
        let err = 1e-13 * (a.abs() * (x.abs() + b.abs()) + c.abs() * (x.abs() + d.abs()))
            + 1e-12 * self.two_delta_f;
        if (gap - self.two_delta_f).abs() > err && gap.is_finite() {
            return gap < self.two_delta_f;
        }
        let xs = contact.exact_x(self.scale);
        let (c1, c2) = (&self.family.curves[i], &self.family.curves[j]);
        (c2.line_value(&xs) - c1.line_value(&xs)).abs() < *self.two_delta
    }
}

pub const CHECK_VERTEX_ON_GRID: &str = "vertex_on_grid";
pub const CHECK_VERTEX_DEVIATION: &str = "vertex_within_half_step";
pub const CHECK_WINDOW: &str = "contact_in_2delta_window";
pub const CHECK_ONE_PER_PIECE: &str = "one_contact_per_piece";
pub const CHECK_PAIR_BOUND: &str = "pair_multiplicity_bound";
pub const CHECK_M1_SPREAD: &str = "m1_slope_spread";
pub const CHECK_M1_SLOPES: &str = "m1_distinct_slopes";
pub const CHECK_INCIDENCE_FLOOR: &str = "incidences_at_least_b_cubed";
pub const CHECK_EDGES: &str = "edges_equal_incidences_minus_curves";

fn audit(an: &FamilyAnalysis, family: &CurveFamily) -> Audit {
    let lat = &an.lattice;
    let delta = &family.delta;
    let half = delta * Scalar::ratio(1, 2);
    let two_delta = delta * Scalar::int(2);
    let four_delta = delta * Scalar::int(4);
    let scale = Scalar::from_bigint(lat.x_scale.clone());
    let ell = family.curves.len();

    let window = Window::new(family, &scale, &two_delta);
    let mut top = Audit::default();
    for c in &family.curves {
        for v in &c.vertices {
            top.record(CHECK_VERTEX_ON_GRID, family.grid.contains(v), || {
                format!("{v:?}")
            });
            let dev = (&v.y - c.line_value(&v.x)).abs();
            top.record(CHECK_VERTEX_DEVIATION, dev <= half, || {
                format!("{v:?} deviates by {dev}")
            });
        }
    }

    let pairs = (0..ell)
        .into_par_iter()
        .map(|i| {
            let mut au = Audit::default();
            let c1 = &family.curves[i];
            for j in i + 1..ell {
                let c2 = &family.curves[j];
                let (l1, l2) = (&lat.curves[i], &lat.curves[j]);
                let walk = walk_pair(l1, l2, true);
                if walk.disjoint {
                    au.pass_many(CHECK_PAIR_BOUND, 1);
                    continue;
                }
                let common = common_ids(&l1.incident, &l2.incident);
                let off: Vec<SignChange> = off_grid_changes(lat, &walk, &common).copied().collect();

                // |(c-a)x + ab - cd| < 2 delta at every contact
                let mut window_ok = 0;
                let contacts = common
                    .iter()
                    .map(|&id| Contact::Grid(lat.point_x(id)))
                    .chain(off.iter().map(|&ch| Contact::Crossing(ch)));
                for contact in contacts {
                    if window.holds(i, j, contact) {
                        window_ok += 1;
                    } else {
                        let x = contact.exact_x(&scale);
                        let g = (c2.line_value(&x) - c1.line_value(&x)).abs();
                        au.record(CHECK_WINDOW, false, || {
                            format!("curves {i},{j} meet at x={x} with line gap {g}")
                        });
                    }
                }
                au.pass_many(CHECK_WINDOW, window_ok);

                // at most one contact strictly inside each non-overlap piece
                let common_x: Vec<i128> = common.iter().map(|&id| lat.point_x(id)).collect();
                let mut pieces_ok = 0;
                for w in walk.breakpoints.windows(2) {
                    let (lo, hi) = (w[0], w[1]);
                    if walk.overlaps.contains(&lo) {
                        continue;
                    }
                    let inner = common_x.iter().filter(|&&x| lo < x && x < hi).count();
                    let crossing = off.iter().filter(|ch| ch.t_lo == lo).count();
                    if inner + crossing <= 1 {
                        pieces_ok += 1;
                    } else {
                        au.record(CHECK_ONE_PER_PIECE, false, || {
                            format!(
                                "curves {i},{j}: {} contacts in piece ({lo}, {hi})",
                                inner + crossing
                            )
                        });
                    }
                }
                au.pass_many(CHECK_ONE_PER_PIECE, pieces_ok);

                // multiplicity <= 1 + 4 delta / |c - a|
                let mult = (common.len() + off.len()) as i64;
                if mult <= 1 {
                    au.pass_many(CHECK_PAIR_BOUND, 1);
                } else {
                    let ds = (&c2.slope - &c1.slope).abs();
                    if !ds.is_zero() {
                        let ok = Scalar::int(mult - 1) * &ds <= four_delta;
                        au.record(CHECK_PAIR_BOUND, ok, || {
                            format!("curves {i},{j}: multiplicity {mult} with slope gap {ds}")
                        });
                    }
                }
            }
            au
        })
        .reduce(Audit::default, Audit::merge);
    let mut out = top.merge(pairs);

    if let Some((p, q)) = &an.m1_witness {
        let through: Vec<&super::PolygonalCurve> = family
            .curves
            .iter()
            .filter(|c| c.passes_through(p) && c.passes_through(q))
            .collect();
        let gap = (&q.x - &p.x).abs();
        // equal slopes a, offsets b != b' put the lines a|b - b'| apart, so
        // they can only share a rounded point when min(B) * min gap <= delta
        let slopes_apply = match (family.base.first(), family.base.min_gap()) {
            (Some(lo), Some(g)) => lo * &g > *delta,
            _ => false,
        };
        for (k, ci) in through.iter().enumerate() {
            for cj in &through[k + 1..] {
                let spread = (&ci.slope - &cj.slope).abs() * &gap;
                out.record(CHECK_M1_SPREAD, spread <= two_delta, || {
                    format!("slopes {} and {} over gap {gap}", ci.slope, cj.slope)
                });
                if slopes_apply {
                    out.record(CHECK_M1_SLOPES, ci.slope != cj.slope, || {
                        format!("two curves of slope {} through the witness pair", ci.slope)
                    });
                }
            }
        }
    }

    let b = family.base.len() as u64;
    out.record(CHECK_INCIDENCE_FLOOR, an.incidences >= b * b * b, || {
        format!("I = {} < |B|^3 = {}", an.incidences, b * b * b)
    });
    out.record(
        CHECK_EDGES,
        an.edges() == an.incidences as i64 - an.ell as i64 && an.edges() >= 0,
        || {
            format!(
                "e = {} with I = {}, ell = {}",
                an.edges(),
                an.incidences,
                an.ell
            )
        },
    );
    out
}
