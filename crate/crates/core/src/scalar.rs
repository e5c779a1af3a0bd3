//! Exact rational scalars, grid rounding, dyadic indexing and validated
//! enclosures of irrational thresholds.
//!
//! Every real quantity in the lab is a [`Scalar`]. Quantities such as
//! `n^(1-eps)` or `ln n` that are irrational in general are carried as an
//! [`Enclosure`]: a pair of rationals that provably brackets the true value.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{arg, LabError, Result};

/// Default precision, in bits, of enclosures.
pub const DEFAULT_BITS: u32 = 64;

/// An exact rational number in canonical form.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Scalar(BigRational);

impl Scalar {
    pub fn new(numer: impl Into<BigInt>, denom: impl Into<BigInt>) -> Result<Self> {
        let denom = denom.into();
        if denom.is_zero() {
            return arg("zero denominator");
        }
        Ok(Scalar(BigRational::new(numer.into(), denom)))
    }

    /// `numer / denom` for small literals. Panics on a zero denominator.
    pub fn ratio(numer: i64, denom: i64) -> Self {
        assert!(denom != 0, "zero denominator");
        Scalar(BigRational::new(numer.into(), denom.into()))
    }

    pub fn int(v: i64) -> Self {
        Scalar(BigRational::from_integer(v.into()))
    }

    pub fn from_bigint(v: BigInt) -> Self {
        Scalar(BigRational::from_integer(v))
    }

    pub fn zero() -> Self {
        Scalar(BigRational::zero())
    }

    pub fn one() -> Self {
        Scalar(BigRational::one())
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn as_ratio(&self) -> &BigRational {
        &self.0
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn abs(&self) -> Self {
        Scalar(self.0.abs())
    }

    pub fn recip(&self) -> Self {
        Scalar(self.0.recip())
    }

    pub fn floor(&self) -> BigInt {
        self.0.floor().to_integer()
    }

    pub fn ceil(&self) -> BigInt {
        self.0.ceil().to_integer()
    }

    pub fn powi(&self, exp: i32) -> Self {
        Scalar(num_traits::Pow::pow(&self.0, exp))
    }

    /// `2^k` for any integer `k`.
    pub fn pow2(k: i64) -> Self {
        let mag = BigInt::one() << k.unsigned_abs();
        if k >= 0 {
            Scalar::from_bigint(mag)
        } else {
            Scalar(BigRational::new(BigInt::one(), mag))
        }
    }

    pub fn min(self, other: Self) -> Self {
        std::cmp::min(self, other)
    }

    pub fn max(self, other: Self) -> Self {
        std::cmp::max(self, other)
    }

    /// Lossy conversion for display and plotting only.
    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }
}

impl From<i64> for Scalar {
    fn from(v: i64) -> Self {
        Scalar::int(v)
    }
}

impl From<BigInt> for Scalar {
    fn from(v: BigInt) -> Self {
        Scalar::from_bigint(v)
    }
}

impl From<BigRational> for Scalar {
    fn from(v: BigRational) -> Self {
        Scalar(v)
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl fmt::Debug for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Scalar {
    type Err = LabError;

    /// Accepts `p/q` or a bare integer `p`, with an optional sign on either part.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || LabError::Parse(format!("not a rational: {s:?}"));
        let (p, q) = match s.split_once('/') {
            Some((p, q)) => (p.trim(), q.trim()),
            None => (s, "1"),
        };
        let p: BigInt = p.parse().map_err(|_| bad())?;
        let q: BigInt = q.parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(LabError::Parse(format!("zero denominator in {s:?}")));
        }
        Ok(Scalar(BigRational::new(p, q)))
    }
}

impl Serialize for Scalar {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Scalar {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

macro_rules! forward_binop {
    ($tr:ident, $m:ident) => {
        impl $tr<&Scalar> for &Scalar {
            type Output = Scalar;
            fn $m(self, rhs: &Scalar) -> Scalar {
                Scalar((&self.0).$m(&rhs.0))
            }
        }
        impl $tr<Scalar> for Scalar {
            type Output = Scalar;
            fn $m(self, rhs: Scalar) -> Scalar {
                Scalar(self.0.$m(rhs.0))
            }
        }
        impl $tr<&Scalar> for Scalar {
            type Output = Scalar;
            fn $m(self, rhs: &Scalar) -> Scalar {
                Scalar(self.0.$m(&rhs.0))
            }
        }
        impl $tr<Scalar> for &Scalar {
            type Output = Scalar;
            fn $m(self, rhs: Scalar) -> Scalar {
                Scalar((&self.0).$m(rhs.0))
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);
forward_binop!(Div, div);

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar(-self.0)
    }
}

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        Scalar(-&self.0)
    }
}

impl std::iter::Sum for Scalar {
    fn sum<I: Iterator<Item = Scalar>>(iter: I) -> Scalar {
        iter.fold(Scalar::zero(), |acc, x| acc + x)
    }
}

/// Index of the nearest multiple of `delta` to `t`; exact half-integers round
/// toward +infinity.
pub fn grid_index(t: &Scalar, delta: &Scalar) -> Result<BigInt> {
    if !delta.is_positive() {
        return arg(format!("grid step must be positive, got {delta}"));
    }
    Ok((t / delta + Scalar::ratio(1, 2)).floor())
}

/// Nearest multiple of `delta` to `t` (ties toward +infinity).
pub fn round_to_grid(t: &Scalar, delta: &Scalar) -> Result<Scalar> {
    let m = grid_index(t, delta)?;
    Ok(Scalar::from_bigint(m) * delta)
}

/// The unique `k` with `2^k <= t < 2^(k+1)`.
pub fn dyadic_index(t: &Scalar) -> Result<i64> {
    if !t.is_positive() {
        return arg(format!("dyadic index needs a positive value, got {t}"));
    }
    let (p, q) = (t.numer(), t.denom());
    let mut k = p.bits() as i64 - q.bits() as i64;
    // p/q >= 2^k  <=>  p * 2^-k >= q (shift whichever side keeps integers)
    let ge_pow2 = |k: i64| -> bool {
        if k >= 0 {
            p >= &(q << k as u64)
        } else {
            (p << (-k) as u64) >= *q
        }
    };
    while !ge_pow2(k) {
        k -= 1;
    }
    while ge_pow2(k + 1) {
        k += 1;
    }
    Ok(k)
}

/// A rational bracket `[lo, hi]` around a real value.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Enclosure {
    pub lo: Scalar,
    pub hi: Scalar,
    pub bits: u32,
}

impl Serialize for Enclosure {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [&self.lo, &self.hi].serialize(s)
    }
}

impl Enclosure {
    pub fn exact(v: Scalar, bits: u32) -> Self {
        Enclosure {
            lo: v.clone(),
            hi: v,
            bits,
        }
    }

    pub fn is_exact(&self) -> bool {
        self.lo == self.hi
    }

    pub fn width(&self) -> Scalar {
        &self.hi - &self.lo
    }

    pub fn contains(&self, v: &Scalar) -> bool {
        &self.lo <= v && v <= &self.hi
    }

    /// `hi - lo <= 2^-bits * max(1, |hi|)`.
    pub fn meets_width(&self) -> bool {
        let scale = self.hi.abs().max(Scalar::one());
        self.width() <= Scalar::pow2(-(self.bits as i64)) * scale
    }

    pub fn add(&self, o: &Enclosure) -> Enclosure {
        Enclosure {
            lo: &self.lo + &o.lo,
            hi: &self.hi + &o.hi,
            bits: self.bits.min(o.bits),
        }
    }

    pub fn sub(&self, o: &Enclosure) -> Enclosure {
        Enclosure {
            lo: &self.lo - &o.hi,
            hi: &self.hi - &o.lo,
            bits: self.bits.min(o.bits),
        }
    }

    pub fn mul(&self, o: &Enclosure) -> Enclosure {
        let c = [
            &self.lo * &o.lo,
            &self.lo * &o.hi,
            &self.hi * &o.lo,
            &self.hi * &o.hi,
        ];
        let lo = c.iter().min().unwrap().clone();
        let hi = c.iter().max().unwrap().clone();
        Enclosure {
            lo,
            hi,
            bits: self.bits.min(o.bits),
        }
    }

    pub fn div(&self, o: &Enclosure) -> Result<Enclosure> {
        if !o.lo.is_positive() && !o.hi.is_negative() {
            return Err(LabError::Domain(format!(
                "division by an enclosure containing zero [{}, {}]",
                o.lo, o.hi
            )));
        }
        let recip = Enclosure {
            lo: o.hi.recip(),
            hi: o.lo.recip(),
            bits: o.bits,
        };
        Ok(self.mul(&recip))
    }

    pub fn scale(&self, k: &Scalar) -> Enclosure {
        self.mul(&Enclosure::exact(k.clone(), self.bits))
    }

    /// Rounds `lo` down and `hi` up onto a dyadic grid fine enough that the
    /// widening is at most `2^-(bits+2)` relative. Keeps denominators small
    /// after long chains of exact operations.
    pub fn outward(&self) -> Enclosure {
        if self.is_exact() && self.lo.denom().bits() <= self.bits as u64 + 2 {
            return self.clone();
        }
        let mag = self.lo.abs().max(self.hi.abs());
        let top = if mag >= Scalar::one() {
            dyadic_index(&mag).unwrap_or(0)
        } else {
            0
        };
        let g = Scalar::pow2(top - self.bits as i64 - 4);
        let lo = Scalar::from_bigint((&self.lo / &g).floor()) * &g;
        let hi = Scalar::from_bigint((&self.hi / &g).ceil()) * &g;
        Enclosure {
            lo,
            hi,
            bits: self.bits,
        }
    }
}

/// Encloses `value^(p/q)` for a non-negative rational `value`.
///
/// The result is exact whenever the power is rational.
pub fn rational_power_enclosure(value: &Scalar, exponent: &Scalar, bits: u32) -> Result<Enclosure> {
    if value.is_negative() {
        return arg(format!("power of a negative value {value}"));
    }
    if value.is_zero() {
        if !exponent.is_positive() {
            return arg("zero raised to a non-positive power");
        }
        return Ok(Enclosure::exact(Scalar::zero(), bits));
    }
    let p = exponent
        .numer()
        .to_i32()
        .ok_or_else(|| LabError::Argument(format!("exponent numerator too large: {exponent}")))?;
    let q = exponent
        .denom()
        .to_u32()
        .ok_or_else(|| LabError::Argument(format!("exponent denominator too large: {exponent}")))?;
    let w = value.powi(p);
    if q == 1 {
        return Ok(Enclosure::exact(w, bits));
    }
    // w^(1/q) = (u * v^(q-1) * 2^(q*s))^(1/q) / (v * 2^s)
    let s = bits as u64 + 2;
    let (u, v) = (w.numer().clone(), w.denom().clone());
    let radicand = (u * num_traits::pow(v.clone(), q as usize - 1)) << (q as u64 * s);
    let r = radicand.nth_root(q);
    let den = v << s;
    let lo = Scalar::new(r.clone(), den.clone())?;
    if num_traits::pow(r.clone(), q as usize) == radicand {
        return Ok(Enclosure::exact(lo, bits));
    }
    let hi = Scalar::new(r + 1, den)?;
    Ok(Enclosure { lo, hi, bits })
}

/// Encloses `base^exponent` for an integer `base >= 1`.
pub fn power_enclosure(base: u64, exponent: &Scalar, bits: u32) -> Result<Enclosure> {
    if base < 1 {
        return arg("power base must be at least 1");
    }
    if bits < 8 {
        return arg(format!(
            "enclosure precision must be at least 8 bits, got {bits}"
        ));
    }
    rational_power_enclosure(&Scalar::int(base as i64), exponent, bits)
}

/// `atanh(z)` for rational `0 <= z <= 1/2`, as a fixed-point bracket with
/// `prec` fractional bits.
fn atanh_enclosure(z: &Scalar, prec: u64) -> (BigInt, BigInt) {
    debug_assert!(!z.is_negative() && z <= &Scalar::ratio(1, 2));
    let (a, b) = (z.numer().clone(), z.denom().clone());
    let a2 = &a * &a;
    let b2 = &b * &b;
    let mut num = a.clone() << prec;
    let mut den = b.clone();
    let mut sum = BigInt::zero();
    let mut terms = 0i64;
    let mut i = 0i64;
    let z2 = z * z;
    let tail_factor = (Scalar::one() - &z2).recip();
    let ulp = Scalar::pow2(-(prec as i64));
    let mut zpow = z.clone();
    loop {
        let k = 2 * i + 1;
        // operands are positive, so truncating division is floor
        sum += &num / (&den * k);
        terms += 1;
        num *= &a2;
        den *= &b2;
        zpow = &zpow * &z2;
        i += 1;
        // remaining tail <= z^(2i+1) / ((2i+1)(1-z^2))
        let tail = &zpow * &tail_factor / Scalar::int(2 * i + 1);
        if tail <= ulp {
            break;
        }
    }
    (sum.clone(), sum + terms + 1)
}

/// Encloses the natural logarithm of a positive rational.
pub fn ln_enclosure(t: &Scalar, bits: u32) -> Result<Enclosure> {
    if !t.is_positive() {
        return arg(format!("logarithm of non-positive value {t}"));
    }
    if t == &Scalar::one() {
        return Ok(Enclosure::exact(Scalar::zero(), bits));
    }
    let k = dyadic_index(t)?;
    let m = t / Scalar::pow2(k);
    let prec = bits as u64 + 24 + (64 - (k.unsigned_abs() + 2).leading_zeros() as u64);
    let scale = Scalar::pow2(-(prec as i64));
    let to_enc = |(lo, hi): (BigInt, BigInt)| Enclosure {
        lo: Scalar::from_bigint(lo) * &scale * Scalar::int(2),
        hi: Scalar::from_bigint(hi) * &scale * Scalar::int(2),
        bits,
    };
    // ln m = 2 atanh((m-1)/(m+1)), with (m-1)/(m+1) in [0, 1/3)
    let z = (&m - Scalar::one()) / (&m + Scalar::one());
    let ln_m = if z.is_zero() {
        Enclosure::exact(Scalar::zero(), bits)
    } else {
        to_enc(atanh_enclosure(&z, prec))
    };
    let ln2 = to_enc(atanh_enclosure(&Scalar::ratio(1, 3), prec));
    let out = ln2.scale(&Scalar::int(k)).add(&ln_m);
    Ok(out.outward())
}

/// `|a - b|` compared against `bound`, exactly.
pub fn within(a: &Scalar, b: &Scalar, bound: &Scalar) -> bool {
    (a - b).abs().cmp(bound) != Ordering::Greater
}
