//! Dyadic decomposition, doubling chains, distinct subset sums and the
//! Plünnecke–Ruzsa inequality, checked on concrete sets.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::scalar::{dyadic_index, ln_enclosure, power_enclosure, Enclosure, Scalar};
use crate::sets::{k_fold_span, span_tuples, sumset, PointSet};

/// `A` split by dyadic interval `[2^k, 2^(k+1))`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DyadicDecomposition {
    pub buckets: BTreeMap<i64, PointSet>,
    /// Index of a largest bucket (smallest index on ties); `None` for empty `A`.
    pub best_index: Option<i64>,
}

impl DyadicDecomposition {
    pub fn best_bucket(&self) -> Option<&PointSet> {
        self.best_index.and_then(|k| self.buckets.get(&k))
    }

    pub fn best_size(&self) -> usize {
        self.best_bucket().map_or(0, PointSet::len)
    }

    pub fn reassemble(&self) -> PointSet {
        PointSet::from_unsorted(self.buckets.values().flat_map(|b| b.iter().cloned()))
    }
}

pub fn decompose_dyadic(a: &PointSet) -> Result<DyadicDecomposition> {
    let mut raw: BTreeMap<i64, Vec<Scalar>> = BTreeMap::new();
    for x in a {
        raw.entry(dyadic_index(x)?).or_default().push(x.clone());
    }
    let buckets: BTreeMap<i64, PointSet> = raw
        .into_iter()
        .map(|(k, v)| Ok((k, PointSet::new(v)?)))
        .collect::<Result<_>>()?;
    // BTreeMap iterates by increasing k, and max_by_key keeps the last
    // maximum, so scan in reverse to keep the smallest index on ties.
    let best_index = buckets
        .iter()
        .rev()
        .max_by_key(|(_, b)| b.len())
        .map(|(k, _)| *k);
    Ok(DyadicDecomposition {
        buckets,
        best_index,
    })
}

/// Smallest element of every second occupied dyadic bucket, starting from the
/// lowest. Consecutive ratios are at least 2.
pub fn extract_doubling_chain(a: &PointSet) -> Result<PointSet> {
    let dec = decompose_dyadic(a)?;
    let picks = dec
        .buckets
        .values()
        .step_by(2)
        .filter_map(|b| b.first().cloned())
        .collect();
    PointSet::new(picks)
}

#[derive(Clone, Debug, Serialize)]
pub struct KSumReport {
    pub k: usize,
    pub subsets: u64,
    pub distinct: bool,
    /// Two distinct k-subsets with equal sums, if any.
    pub witness: Option<(Vec<Scalar>, Vec<Scalar>)>,
}

fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = r.saturating_mul((n - i) as u128) / (i + 1) as u128;
    }
    r
}

/// Enumerates all `k`-subsets of `chain` and checks that their sums differ.
pub fn distinct_ksums_check(chain: &PointSet, k: usize, cap: u64) -> Result<KSumReport> {
    let m = chain.len();
    let count = binomial(m as u64, k as u64);
    if count > cap as u128 {
        return Err(LabError::Resource {
            what: format!("{k}-subsets of a {m}-element chain"),
            needed: count,
            cap,
        });
    }
    let elems = chain.elements();
    let mut seen: BTreeMap<Scalar, Vec<usize>> = BTreeMap::new();
    let mut idx: Vec<usize> = (0..k).collect();
    let mut subsets = 0u64;
    let mut witness = None;
    if k <= m {
        loop {
            subsets += 1;
            let total: Scalar = idx.iter().map(|&i| elems[i].clone()).sum();
            if let Some(prev) = seen.get(&total) {
                if witness.is_none() {
                    let pick = |v: &[usize]| v.iter().map(|&i| elems[i].clone()).collect();
                    witness = Some((pick(prev), pick(&idx)));
                }
            } else {
                seen.insert(total, idx.clone());
            }
            // next combination in lexicographic order
            let Some(pos) = (0..k).rev().find(|&i| idx[i] != i + m - k) else {
                break;
            };
            idx[pos] += 1;
            for j in pos + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
        }
    }
    Ok(KSumReport {
        k,
        subsets,
        distinct: witness.is_none(),
        witness,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct PlunneckeReport {
    pub k: usize,
    pub l: usize,
    pub set_size: usize,
    pub sumset_size: usize,
    /// Doubling constant `|A+A| / |A|`.
    pub doubling: Scalar,
    pub span_size: usize,
    /// `K^(k+l) |A|`.
    pub bound: Scalar,
    pub holds: bool,
}

/// Both sides of `|kA - lA| <= K^(k+l) |A|` with `K = |A+A|/|A|`.
pub fn plunnecke_check(a: &PointSet, k: usize, l: usize, cap: u64) -> Result<PlunneckeReport> {
    if a.is_empty() {
        return crate::error::arg("Plünnecke check needs a non-empty set");
    }
    let n = a.len();
    let ss = sumset(a, a).len();
    let doubling = Scalar::ratio(ss as i64, n as i64);
    let span = k_fold_span(a, k, l, cap)?;
    let bound = doubling.powi((k + l) as i32) * Scalar::int(n as i64);
    let holds = Scalar::int(span.len() as i64) <= bound;
    Ok(PlunneckeReport {
        k,
        l,
        set_size: n,
        sumset_size: ss,
        doubling,
        span_size: span.len(),
        bound,
        holds,
    })
}

/// Tuples a Plünnecke check enumerates; exposed so callers can pre-check caps.
pub fn plunnecke_tuples(size: usize, k: usize, l: usize) -> u128 {
    span_tuples(size, k, l)
}

/// One instance of the dyadic pigeonhole implication:
/// `|A+A| <= n^(1+delta) / (3 ln n)` implies some dyadic interval holds at
/// least `n^(1-delta)` elements.
///
/// Thresholds are enclosures; `hypothesis_holds` is evaluated against the
/// upper end of the threshold (the hypothesis might be true) and
/// `conclusion_holds` against the upper end of `n^(1-delta)` (the conclusion
/// certainly holds), so a reported pass is never an artifact of rounding.
#[derive(Clone, Debug, Serialize)]
pub struct DyadicLemmaReport {
    pub n: usize,
    pub delta: Scalar,
    pub sumset_size: usize,
    pub threshold_lo: Scalar,
    pub threshold_hi: Scalar,
    pub best_bucket: usize,
    pub conclusion_bound_lo: Scalar,
    pub conclusion_bound_hi: Scalar,
    pub hypothesis_holds: bool,
    pub conclusion_holds: bool,
}

impl DyadicLemmaReport {
    /// `NOT hypothesis OR conclusion`.
    pub fn implication_holds(&self) -> bool {
        !self.hypothesis_holds || self.conclusion_holds
    }

    /// The hypothesis fails, so the instance says nothing about the conclusion.
    pub fn is_vacuous(&self) -> bool {
        !self.hypothesis_holds
    }
}

pub fn dyadic_lemma_report(a: &PointSet, delta: &Scalar, bits: u32) -> Result<DyadicLemmaReport> {
    if !delta.is_positive() || delta >= &Scalar::one() {
        return crate::error::arg(format!("delta must lie in (0, 1), got {delta}"));
    }
    let n = a.len();
    if n < 2 {
        return crate::error::arg("dyadic lemma report needs at least 2 elements");
    }
    let sumset_size = sumset(a, a).len();
    let nn = n as u64;
    let up = power_enclosure(nn, &(Scalar::one() + delta), bits + 16)?;
    let ln_n = ln_enclosure(&Scalar::int(n as i64), bits + 16)?;
    let three_ln = ln_n.scale(&Scalar::int(3));
    let threshold = up.div(&three_ln)?.outward();
    let conclusion: Enclosure = power_enclosure(nn, &(Scalar::one() - delta), bits)?;
    let best = decompose_dyadic(a)?.best_size();
    let ss = Scalar::int(sumset_size as i64);
    Ok(DyadicLemmaReport {
        n,
        delta: delta.clone(),
        sumset_size,
        hypothesis_holds: ss <= threshold.hi,
        conclusion_holds: Scalar::int(best as i64) >= conclusion.hi,
        threshold_lo: threshold.lo,
        threshold_hi: threshold.hi,
        best_bucket: best,
        conclusion_bound_lo: conclusion.lo,
        conclusion_bound_hi: conclusion.hi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sets::{make_ap, DEFAULT_CAP};

    fn s(x: &str) -> Scalar {
        x.parse().unwrap()
    }

    #[test]
    fn decomposition_example() {
        let a = PointSet::from_ints(&[1, 2, 3, 5, 9, 17]);
        let d = decompose_dyadic(&a).unwrap();
        let got: Vec<(i64, Vec<Scalar>)> = d
            .buckets
            .iter()
            .map(|(k, b)| (*k, b.elements().to_vec()))
            .collect();
        let want: Vec<(i64, Vec<Scalar>)> = vec![
            (0, vec![s("1")]),
            (1, vec![s("2"), s("3")]),
            (2, vec![s("5")]),
            (3, vec![s("9")]),
            (4, vec![s("17")]),
        ];
        assert_eq!(got, want);
        assert_eq!(d.best_index, Some(1));
        assert_eq!(d.reassemble(), a);
    }

    #[test]
    fn decomposition_ties_pick_smallest_index() {
        let a = PointSet::from_ints(&[2, 3, 4, 5, 8, 9]);
        assert_eq!(decompose_dyadic(&a).unwrap().best_index, Some(1));
        let b = make_ap(&s("63"), 64).unwrap(); // 64..127
        let d = decompose_dyadic(&b).unwrap();
        assert_eq!(d.buckets.len(), 1);
        assert_eq!(d.best_size(), 64);
    }

    #[test]
    fn chain_example() {
        let a = PointSet::from_ints(&[1, 2, 3, 5, 9, 17]);
        assert_eq!(
            extract_doubling_chain(&a).unwrap(),
            PointSet::from_ints(&[1, 5, 17])
        );
        let one = PointSet::from_ints(&[33, 40, 50]);
        assert_eq!(extract_doubling_chain(&one).unwrap().len(), 1);
    }

    #[test]
    fn ksums_example() {
        let c = PointSet::from_ints(&[1, 2, 4, 8]);
        let r = distinct_ksums_check(&c, 2, DEFAULT_CAP).unwrap();
        assert!(r.distinct);
        assert_eq!(r.subsets, 6);
        let r = distinct_ksums_check(&c, 1, DEFAULT_CAP).unwrap();
        assert!(r.distinct && r.subsets == 4);
        let bad = PointSet::from_ints(&[1, 2, 3, 4]);
        let r = distinct_ksums_check(&bad, 2, DEFAULT_CAP).unwrap();
        assert!(!r.distinct);
        let (x, y) = r.witness.unwrap();
        assert_eq!(
            x.iter().cloned().sum::<Scalar>(),
            y.iter().cloned().sum::<Scalar>()
        );
        assert!(distinct_ksums_check(&c, 2, 3).is_err());
    }

    #[test]
    fn plunnecke_example() {
        let a = PointSet::from_ints(&[0, 1]);
        let r = plunnecke_check(&a, 2, 1, DEFAULT_CAP).unwrap();
        assert_eq!(r.doubling, s("3/2"));
        assert_eq!(r.span_size, 4);
        assert_eq!(r.bound, s("27/4"));
        assert!(r.holds);
        let r = plunnecke_check(&PointSet::from_ints(&[1, 4, 5]), 1, 0, DEFAULT_CAP).unwrap();
        assert!(r.holds && r.span_size == 3);
    }

    #[test]
    fn dyadic_lemma_examples() {
        let pow2 = PointSet::from_ints(&[1, 2, 4, 8, 16, 32, 64, 128]);
        let r = dyadic_lemma_report(&pow2, &s("1/2"), 64).unwrap();
        assert_eq!(r.sumset_size, 36);
        assert_eq!(r.best_bucket, 1);
        // 8^(3/2) / (3 ln 8) = 3.6276...
        assert!(r.threshold_lo.to_f64() > 3.62 && r.threshold_hi.to_f64() < 3.63);
        assert!(!r.hypothesis_holds && !r.conclusion_holds);
        assert!(r.implication_holds() && r.is_vacuous());

        let ap = make_ap(&s("64"), 32).unwrap();
        let r = dyadic_lemma_report(&ap, &s("1/4"), 64).unwrap();
        assert!(r.conclusion_holds && r.implication_holds());
        assert!(dyadic_lemma_report(&ap, &s("1"), 64).is_err());
    }
}
