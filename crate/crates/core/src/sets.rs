//! Finite sets of rationals: generators, sum and product sets, k-fold spans.

use std::fmt::Write as _;

use rand::Rng;

use crate::error::{arg, LabError, Result};
use crate::rng::lab_rng;
use crate::scalar::{round_to_grid, Scalar};

/// Default cap on enumerated tuples for k-fold spans and subset sweeps.
pub const DEFAULT_CAP: u64 = 10_000_000;

/// Resolution of the rational grid used by the random generators.
const RANDOM_GRID: i64 = 1 << 16;

/// A strictly increasing finite sequence of rationals.
///
/// The lab's inputs are positive; sets produced by difference operations
/// (`k_fold_span` with `l > 0`) may contain non-positive values, which
/// [`PointSet::is_positive`] reports.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct PointSet {
    elements: Vec<Scalar>,
}

impl PointSet {
    /// Validates that `elements` is strictly increasing.
    pub fn new(elements: Vec<Scalar>) -> Result<Self> {
        if let Some(w) = elements.windows(2).find(|w| w[0] >= w[1]) {
            return arg(format!(
                "elements not strictly increasing at {} >= {}",
                w[0], w[1]
            ));
        }
        Ok(PointSet { elements })
    }

    /// Sorts and deduplicates.
    pub fn from_unsorted(elements: impl IntoIterator<Item = Scalar>) -> Self {
        let mut v: Vec<Scalar> = elements.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        PointSet { elements: v }
    }

    pub fn from_ints(v: &[i64]) -> Self {
        Self::from_unsorted(v.iter().map(|&x| Scalar::int(x)))
    }

    pub fn elements(&self) -> &[Scalar] {
        &self.elements
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Scalar> {
        self.elements.iter()
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn first(&self) -> Option<&Scalar> {
        self.elements.first()
    }

    pub fn last(&self) -> Option<&Scalar> {
        self.elements.last()
    }

    pub fn contains(&self, v: &Scalar) -> bool {
        self.elements.binary_search(v).is_ok()
    }

    pub fn position(&self, v: &Scalar) -> Option<usize> {
        self.elements.binary_search(v).ok()
    }

    pub fn is_positive(&self) -> bool {
        self.elements.first().is_none_or(|a| a.is_positive())
    }

    pub fn require_positive(&self, what: &str) -> Result<()> {
        match self.elements.first() {
            Some(a) if !a.is_positive() => {
                arg(format!("{what}: elements must be positive, found {a}"))
            }
            _ => Ok(()),
        }
    }

    pub fn gaps(&self) -> Vec<Scalar> {
        self.elements.windows(2).map(|w| &w[1] - &w[0]).collect()
    }

    /// Smallest consecutive difference; `None` for fewer than two elements.
    pub fn min_gap(&self) -> Option<Scalar> {
        self.elements.windows(2).map(|w| &w[1] - &w[0]).min()
    }

    /// Median of the consecutive gaps (mean of the middle two for an even count).
    pub fn median_gap(&self) -> Option<Scalar> {
        let mut g = self.gaps();
        if g.is_empty() {
            return None;
        }
        g.sort_unstable();
        let m = g.len() / 2;
        Some(if g.len() % 2 == 1 {
            g[m].clone()
        } else {
            (&g[m - 1] + &g[m]) * Scalar::ratio(1, 2)
        })
    }

    pub fn is_separated(&self, gap: &Scalar) -> bool {
        self.min_gap().is_none_or(|g| &g >= gap)
    }

    pub fn into_vec(self) -> Vec<Scalar> {
        self.elements
    }

    /// Serializes to the `# pointset v1` CSV format.
    pub fn to_csv(&self) -> String {
        let mut out = format!("# pointset v1 n={}\n", self.len());
        for a in &self.elements {
            writeln!(out, "{a}").unwrap();
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| LabError::Parse("empty pointset file".into()))?;
        let n: usize = header
            .trim()
            .strip_prefix("# pointset v1 n=")
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| LabError::Parse(format!("bad pointset header {header:?}")))?;
        let elements = lines
            .filter(|l| !l.trim().is_empty())
            .map(str::parse)
            .collect::<Result<Vec<Scalar>>>()?;
        if elements.len() != n {
            return Err(LabError::Parse(format!(
                "header declares {n} elements, found {}",
                elements.len()
            )));
        }
        PointSet::new(elements).map_err(|e| LabError::Parse(e.to_string()))
    }
}

impl<'a> IntoIterator for &'a PointSet {
    type Item = &'a Scalar;
    type IntoIter = std::slice::Iter<'a, Scalar>;
    fn into_iter(self) -> Self::IntoIter {
        self.elements.iter()
    }
}

/// `{x+1, x+2, ..., x+n}`.
pub fn make_ap(x: &Scalar, n: usize) -> Result<PointSet> {
    if n == 0 {
        return arg("arithmetic progression needs n >= 1");
    }
    let elements = (1..=n as i64).map(|j| x + Scalar::int(j)).collect();
    let set = PointSet { elements };
    set.require_positive("arithmetic progression")?;
    Ok(set)
}

/// `{x (1 + 1/x)^j : j = 0..n-1}`, exactly.
pub fn make_gp(x: &Scalar, n: usize) -> Result<PointSet> {
    if !x.is_positive() {
        return arg(format!("geometric progression needs x > 0, got {x}"));
    }
    if n == 0 {
        return arg("geometric progression needs n >= 1");
    }
    let ratio = Scalar::one() + x.recip();
    let mut cur = x.clone();
    let mut elements = Vec::with_capacity(n);
    for _ in 0..n {
        elements.push(cur.clone());
        cur = &cur * &ratio;
    }
    Ok(PointSet { elements })
}

/// `n` points in `[lo, hi]` with consecutive gaps at least `min_gap`,
/// deterministic in `seed`.
///
/// Each point is `lo + i*min_gap + u_(i)` where the `u_(i)` are sorted draws
/// from a uniform rational grid over `[0, hi - lo - (n-1)*min_gap]`.
pub fn make_random_separated(
    n: usize,
    lo: &Scalar,
    hi: &Scalar,
    min_gap: &Scalar,
    seed: u64,
) -> Result<PointSet> {
    if n == 0 {
        return arg("random set needs n >= 1");
    }
    if !lo.is_positive() {
        return arg(format!("random set lower end must be positive, got {lo}"));
    }
    if min_gap.is_negative() {
        return arg("negative minimum gap");
    }
    let slack = hi - lo - min_gap * Scalar::int(n as i64 - 1);
    if slack.is_negative() {
        return arg(format!(
            "infeasible range: [{lo}, {hi}] cannot hold {n} points {min_gap} apart"
        ));
    }
    let mut rng = lab_rng(seed);
    let mut ticks: Vec<i64> = (0..n).map(|_| rng.gen_range(0..=RANDOM_GRID)).collect();
    ticks.sort_unstable();
    let step = &slack / Scalar::int(RANDOM_GRID);
    let elements = ticks
        .iter()
        .enumerate()
        .map(|(i, &t)| lo + min_gap * Scalar::int(i as i64) + &step * Scalar::int(t))
        .collect();
    PointSet::new(elements)
}

/// `n` points of `[x, 2x - 1]` (inside one interval `[x, 2x)`), 1-separated.
pub fn make_random_dyadic(n: usize, x: &Scalar, seed: u64) -> Result<PointSet> {
    let hi = x * Scalar::int(2) - Scalar::one();
    make_random_separated(n, x, &hi, &Scalar::one(), seed)
}

/// A chain `a_0 = start`, `a_{i+1} = a_i (2 + u_i)` with `u_i` drawn from
/// `{0, 1/16, ..., 15/16}`; consecutive ratios lie in `[2, 3)`.
pub fn make_doubling_chain(n: usize, start: &Scalar, seed: u64) -> Result<PointSet> {
    if n == 0 {
        return arg("doubling chain needs n >= 1");
    }
    if !start.is_positive() {
        return arg("doubling chain must start at a positive value");
    }
    let mut rng = lab_rng(seed);
    let mut cur = start.clone();
    let mut elements = Vec::with_capacity(n);
    for _ in 0..n {
        elements.push(cur.clone());
        let u = Scalar::ratio(rng.gen_range(0..16), 16);
        cur = &cur * (Scalar::int(2) + u);
    }
    PointSet::new(elements)
}

/// `{a + b : a in A, b in B}`.
pub fn sumset(a: &PointSet, b: &PointSet) -> PointSet {
    let mut v = Vec::with_capacity(a.len() * b.len());
    for x in a {
        for y in b {
            v.push(x + y);
        }
    }
    PointSet::from_unsorted(v)
}

/// `{a * b}`, optionally rounded to the nearest multiple of `round` before
/// deduplication.
pub fn productset(a: &PointSet, b: &PointSet, round: Option<&Scalar>) -> Result<PointSet> {
    let mut v = Vec::with_capacity(a.len() * b.len());
    for x in a {
        for y in b {
            let p = x * y;
            v.push(match round {
                Some(d) => round_to_grid(&p, d)?,
                None => p,
            });
        }
    }
    Ok(PointSet::from_unsorted(v))
}

/// Greedy left-to-right scan keeping an element iff it is at least 1 above
/// the last kept element.
pub fn enforce_separation(a: &PointSet) -> PointSet {
    let one = Scalar::one();
    let mut kept: Vec<Scalar> = Vec::with_capacity(a.len());
    for x in a {
        match kept.last() {
            Some(last) if x - last < one => {}
            _ => kept.push(x.clone()),
        }
    }
    PointSet { elements: kept }
}

/// Number of tuples a `k_fold_span` call would enumerate, saturating.
pub fn span_tuples(size: usize, k: usize, l: usize) -> u128 {
    (size as u128).saturating_pow((k + l) as u32)
}

/// `kA - lA = {a_1 + ... + a_k - b_1 - ... - b_l}`.
///
/// The cap is checked against the full tuple count `|A|^(k+l)`; the set
/// itself is built by iterated sumsets.
pub fn k_fold_span(a: &PointSet, k: usize, l: usize, cap: u64) -> Result<PointSet> {
    if k + l == 0 {
        return arg("k + l must be at least 1");
    }
    let needed = span_tuples(a.len(), k, l);
    if needed > cap as u128 {
        return Err(LabError::Resource {
            what: format!("{k}A-{l}A over |A|={}", a.len()),
            needed,
            cap,
        });
    }
    let neg = PointSet {
        elements: a.iter().rev().map(|x| -x).collect(),
    };
    let mut acc = PointSet::from_unsorted([Scalar::zero()]);
    for _ in 0..k {
        acc = sumset(&acc, a);
    }
    for _ in 0..l {
        acc = sumset(&acc, &neg);
    }
    Ok(acc)
}
