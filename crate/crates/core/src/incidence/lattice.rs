//! Integer image of a curve family.
//!
//! Scaling `x` by the common denominator of `B` and dividing `y` by the grid
//! step maps every vertex and grid point to integers, and the map is affine,
//! so incidences, intersections and crossings are unchanged. All sweeps then
//! run on `i128`.

use std::cmp::Ordering;
use std::collections::HashMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive};

use super::CurveFamily;
use crate::error::{LabError, Result};
use crate::scalar::Scalar;

/// Largest admissible `bits(|m|) + 2 bits(|x|)`. Sign tests multiply three
/// such factors plus small constants, which must stay below 2^127.
const BIT_BUDGET: u64 = 120;

#[derive(Clone, Debug)]
pub(crate) struct LatticeCurve {
    pub xs: Vec<i128>,
    pub ms: Vec<i128>,
    /// Ids of incident grid points, ascending (hence ascending in x).
    pub incident: Vec<u64>,
}

#[derive(Clone, Debug)]
pub(crate) struct Lattice {
    pub x_scale: BigInt,
    pub grid_x: Vec<i128>,
    pub grid_m: Vec<i128>,
    pub curves: Vec<LatticeCurve>,
}

/// A rational `num / den` with `den > 0`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Frac {
    pub num: i128,
    pub den: i128,
}

impl Frac {
    fn int(v: i128) -> Self {
        Frac { num: v, den: 1 }
    }

    pub fn to_scalar(self) -> Scalar {
        Scalar::new(self.num, self.den).expect("positive denominator")
    }
}

/// Sign of `f - g`.
fn cmp_frac(f: Frac, g: Frac) -> Ordering {
    (f.num * g.den).cmp(&(g.num * f.den))
}

fn to_i128(v: &BigInt, what: &str) -> Result<i128> {
    v.to_i128()
        .ok_or_else(|| LabError::Overflow(format!("{what} {v} does not fit in 128 bits")))
}

impl Lattice {
    pub fn build(family: &CurveFamily) -> Result<Self> {
        let x_scale = family
            .base
            .iter()
            .fold(BigInt::one(), |acc, b| acc.lcm(b.denom()));
        let scale = Scalar::from_bigint(x_scale.clone());
        let lat_x = |x: &Scalar| -> Result<i128> {
            let v = x * &scale;
            debug_assert!(v.is_integer());
            to_i128(v.numer(), "scaled x")
        };
        let lat_m = |y: &Scalar| -> Result<i128> {
            let v = y / &family.delta;
            debug_assert!(v.is_integer(), "grid height not a multiple of the step");
            to_i128(v.numer(), "grid index")
        };
        let grid_x = family
            .grid
            .xs
            .iter()
            .map(lat_x)
            .collect::<Result<Vec<_>>>()?;
        let grid_m = family
            .grid
            .ys
            .iter()
            .map(lat_m)
            .collect::<Result<Vec<_>>>()?;

        let bits = |v: &[i128]| {
            v.iter()
                .map(|x| 128 - x.unsigned_abs().leading_zeros() as u64)
                .max()
                .unwrap_or(0)
        };
        let need = bits(&grid_m) + 2 * bits(&grid_x) + 4;
        if need > BIT_BUDGET {
            return Err(LabError::Overflow(format!(
                "lattice needs about {need} bits for exact sign tests, budget is {BIT_BUDGET}"
            )));
        }

        let ny = grid_m.len() as u64;
        let x_of: HashMap<&Scalar, i128> =
            family.grid.xs.iter().zip(grid_x.iter().copied()).collect();
        let m_of: HashMap<&Scalar, i128> =
            family.grid.ys.iter().zip(grid_m.iter().copied()).collect();
        let lookup = |map: &HashMap<&Scalar, i128>, v: &Scalar| {
            map.get(v).copied().ok_or_else(|| {
                LabError::Domain(format!("vertex coordinate {v} is not on the grid"))
            })
        };
        let mut curves = Vec::with_capacity(family.curves.len());
        for c in &family.curves {
            let xs = c
                .vertices
                .iter()
                .map(|v| lookup(&x_of, &v.x))
                .collect::<Result<Vec<_>>>()?;
            let ms = c
                .vertices
                .iter()
                .map(|v| lookup(&m_of, &v.y))
                .collect::<Result<Vec<_>>>()?;
            let incident = incident_points(&xs, &ms, &grid_x, &grid_m, ny);
            curves.push(LatticeCurve { xs, ms, incident });
        }
        Ok(Lattice {
            x_scale,
            grid_x,
            grid_m,
            curves,
        })
    }

    pub fn ny(&self) -> u64 {
        self.grid_m.len() as u64
    }

    pub fn point_x(&self, id: u64) -> i128 {
        self.grid_x[(id / self.ny()) as usize]
    }
}

/// Grid points on the closed polyline, vertices included, in ascending id.
fn incident_points(
    xs: &[i128],
    ms: &[i128],
    grid_x: &[i128],
    grid_m: &[i128],
    ny: u64,
) -> Vec<u64> {
    let mut out = Vec::with_capacity(xs.len());
    let id = |xi: usize, yi: usize| xi as u64 * ny + yi as u64;
    let find_x = |x: i128| grid_x.binary_search(&x).expect("vertex x on grid");
    for k in 0..xs.len() {
        let xi = find_x(xs[k]);
        let yi = grid_m.binary_search(&ms[k]).expect("vertex height on grid");
        out.push(id(xi, yi));
        if k + 1 == xs.len() {
            break;
        }
        let (x0, m0, x1, m1) = (xs[k], ms[k], xs[k + 1], ms[k + 1]);
        let span = x1 - x0;
        let rise = m1 - m0;
        let end = find_x(x1);
        for (off, &gx) in grid_x[xi + 1..end].iter().enumerate() {
            let num = m0 * span + rise * (gx - x0);
            if num % span == 0 {
                if let Ok(yi) = grid_m.binary_search(&(num / span)) {
                    out.push(id(xi + 1 + off, yi));
                }
            }
        }
    }
    out
}

/// Height of `c` at `t`, where `xs[i]` is the first vertex with `xs[i] >= t`.
#[inline]
fn height(c: &LatticeCurve, i: usize, t: i128) -> Frac {
    if c.xs[i] == t {
        return Frac::int(c.ms[i]);
    }
    let (x0, x1, m0, m1) = (c.xs[i - 1], c.xs[i], c.ms[i - 1], c.ms[i]);
    Frac {
        num: m0 * (x1 - x0) + (m1 - m0) * (t - x0),
        den: x1 - x0,
    }
}

fn height_at(c: &LatticeCurve, t: i128) -> Frac {
    let i = c.xs.partition_point(|&x| x < t);
    height(c, i, t)
}

/// A sign change of `f = c1 - c2` strictly between two consecutive breakpoints.
#[derive(Clone, Copy, Debug)]
pub(crate) struct SignChange {
    pub t_lo: i128,
    pub t_hi: i128,
    pub f_lo: (Frac, Frac),
    pub f_hi: (Frac, Frac),
}

impl SignChange {
    /// Exact zero of `f` on the segment, in lattice x units.
    pub fn root(&self) -> Scalar {
        let diff = |(a, b): (Frac, Frac)| a.to_scalar() - b.to_scalar();
        let (fl, fh) = (diff(self.f_lo), diff(self.f_hi));
        let tl = Scalar::from_bigint(self.t_lo.into());
        let th = Scalar::from_bigint(self.t_hi.into());
        &tl + (&th - &tl) * &fl / (&fl - &fh)
    }
}

#[derive(Default, Debug)]
pub(crate) struct Walk {
    /// The curves provably have no point in common.
    pub disjoint: bool,
    pub changes: Vec<SignChange>,
    /// Left ends of pieces on which `f` vanishes identically.
    pub overlaps: Vec<i128>,
    /// Consecutive breakpoints of the common x-range, when recorded.
    pub breakpoints: Vec<i128>,
}

/// Sweeps the union of both vertex sets over the common x-range.
///
/// Returns early with an empty walk when `f` provably keeps one sign: each
/// curve stays within 1/2 (in grid-index units) of its straight line, so if
/// `|f| > 2` at both ends the line difference exceeds 1 in absolute value
/// across the whole range and `f` cannot vanish.
pub(crate) fn walk_pair(c1: &LatticeCurve, c2: &LatticeCurve, record_breaks: bool) -> Walk {
    let mut walk = Walk::default();
    let lo = c1.xs[0].max(c2.xs[0]);
    let hi = (*c1.xs.last().unwrap()).min(*c2.xs.last().unwrap());
    if lo > hi {
        walk.disjoint = true;
        return walk;
    }
    let sign_at = |a: Frac, b: Frac| cmp_frac(a, b);
    let beyond = |a: Frac, b: Frac| -> Ordering {
        // compare a - b against +-2 without forming a - b
        let lhs = a.num * b.den - b.num * a.den;
        let two = 2 * a.den * b.den;
        if lhs > two {
            Ordering::Greater
        } else if lhs < -two {
            Ordering::Less
        } else {
            Ordering::Equal
        }
    };
    let (a_lo, b_lo) = (height_at(c1, lo), height_at(c2, lo));
    let (a_hi, b_hi) = (height_at(c1, hi), height_at(c2, hi));
    let e_lo = beyond(a_lo, b_lo);
    if e_lo != Ordering::Equal && e_lo == beyond(a_hi, b_hi) {
        walk.disjoint = true;
        return walk;
    }

    let mut i = c1.xs.partition_point(|&x| x < lo);
    let mut j = c2.xs.partition_point(|&x| x < lo);
    let mut prev: Option<(i128, Ordering, (Frac, Frac))> = None;
    loop {
        let t = match (c1.xs.get(i), c2.xs.get(j)) {
            (Some(&u), Some(&v)) => u.min(v),
            (Some(&u), None) => u,
            (None, Some(&v)) => v,
            (None, None) => break,
        };
        if t > hi {
            break;
        }
        let (ya, yb) = (height(c1, i, t), height(c2, j, t));
        let sg = sign_at(ya, yb);
        if let Some((pt, ps, pf)) = prev {
            match (ps, sg) {
                (Ordering::Equal, Ordering::Equal) => walk.overlaps.push(pt),
                (Ordering::Less, Ordering::Greater) | (Ordering::Greater, Ordering::Less) => {
                    walk.changes.push(SignChange {
                        t_lo: pt,
                        t_hi: t,
                        f_lo: pf,
                        f_hi: (ya, yb),
                    })
                }
                _ => {}
            }
        }
        if record_breaks {
            walk.breakpoints.push(t);
        }
        prev = Some((t, sg, (ya, yb)));
        if c1.xs.get(i) == Some(&t) {
            i += 1;
        }
        if c2.xs.get(j) == Some(&t) {
            j += 1;
        }
    }
    walk
}

/// Ids present in both ascending lists.
pub(crate) fn common_ids(a: &[u64], b: &[u64]) -> Vec<u64> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// Sign changes whose zero is not a common grid point.
pub(crate) fn off_grid_changes<'w>(
    lat: &Lattice,
    walk: &'w Walk,
    common: &[u64],
) -> impl Iterator<Item = &'w SignChange> {
    let xs: Vec<i128> = common.iter().map(|&id| lat.point_x(id)).collect();
    walk.changes.iter().filter(move |ch| {
        let k = xs.partition_point(|&x| x <= ch.t_lo);
        !(k < xs.len() && xs[k] < ch.t_hi)
    })
}
