//! Exact logarithms of positive rationals.
//!
//! A [`LogNumber`] stands for `log q` and is stored as `q`. Sums are products
//! of arguments, so any integer combination stays exact. Rational combinations
//! are compared by clearing denominators and exponentiating both sides; when
//! the resulting integers would exceed [`EXACT_BIT_BUDGET`] bits the sign is
//! decided by fixed-point interval evaluation, widening precision until the
//! enclosure excludes zero.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::arith::ln_biguint;
use crate::error::{Error, Result};

/// Largest bit size of either side of a cross-exponentiated comparison.
pub const EXACT_BIT_BUDGET: u64 = 1 << 22;
/// Starting precision (bits) for interval evaluation.
pub const INTERVAL_START_BITS: u32 = 256;
/// Number of precision doublings before a comparison is declared undecided.
pub const INTERVAL_DOUBLINGS: u32 = 8;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LogNumber {
    arg: BigRational,
}

impl LogNumber {
    pub fn new(arg: BigRational) -> Result<Self> {
        if !arg.is_positive() {
            return Err(Error::InvalidArgument(format!("log of non-positive value {arg}")));
        }
        Ok(LogNumber { arg })
    }

    /// `log 1 = 0`.
    pub fn zero() -> Self {
        LogNumber { arg: BigRational::one() }
    }

    pub fn of_int(n: &BigInt) -> Result<Self> {
        Self::new(BigRational::from_integer(n.clone()))
    }

    pub fn of_u64(n: u64) -> Self {
        assert!(n > 0, "log of zero");
        LogNumber { arg: BigRational::from_integer(BigInt::from(n)) }
    }

    pub fn of_ratio(num: &BigInt, den: &BigInt) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::ZeroInput);
        }
        Self::new(BigRational::new(num.clone(), den.clone()))
    }

    /// The positive rational `q` with `self = log q`.
    pub fn arg(&self) -> &BigRational {
        &self.arg
    }

    pub fn is_zero(&self) -> bool {
        self.arg.is_one()
    }

    pub fn add(&self, other: &LogNumber) -> LogNumber {
        LogNumber { arg: &self.arg * &other.arg }
    }

    pub fn sub(&self, other: &LogNumber) -> LogNumber {
        LogNumber { arg: &self.arg / &other.arg }
    }

    pub fn neg(&self) -> LogNumber {
        LogNumber { arg: self.arg.recip() }
    }

    pub fn scale(&self, k: u32) -> LogNumber {
        LogNumber { arg: num_traits::pow(self.arg.clone(), k as usize) }
    }

    /// `max(0, self)`.
    pub fn positive_part(&self) -> LogNumber {
        if self.arg > BigRational::one() {
            self.clone()
        } else {
            LogNumber::zero()
        }
    }

    pub fn to_f64(&self) -> f64 {
        ln_biguint(self.arg.numer().magnitude()) - ln_biguint(self.arg.denom().magnitude())
    }

    /// Sign of the quantity relative to zero.
    pub fn signum(&self) -> Ordering {
        self.arg.cmp(&BigRational::one())
    }
}

impl PartialOrd for LogNumber {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for LogNumber {
    fn cmp(&self, other: &Self) -> Ordering {
        self.arg.cmp(&other.arg)
    }
}

impl fmt::Display for LogNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "log({})", self.arg)
    }
}

impl Serialize for LogNumber {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("LogNumber", 3)?;
        st.serialize_field("value", &self.to_f64())?;
        st.serialize_field("exp_num", &self.arg.numer().to_string())?;
        st.serialize_field("exp_den", &self.arg.denom().to_string())?;
        st.end()
    }
}

/// A finite sum `sum_i c_i * log q_i` with rational coefficients.
#[derive(Clone, Debug, Default)]
pub struct LogCombination {
    terms: Vec<(BigRational, LogNumber)>,
}

impl LogCombination {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn term(mut self, coeff: BigRational, log: LogNumber) -> Self {
        self.push(coeff, log);
        self
    }

    pub fn push(&mut self, coeff: BigRational, log: LogNumber) {
        if coeff.is_zero() || log.is_zero() {
            return;
        }
        if let Some(slot) = self.terms.iter_mut().find(|(_, l)| *l == log) {
            slot.0 += coeff;
        } else {
            self.terms.push((coeff, log));
        }
        self.terms.retain(|(c, _)| !c.is_zero());
    }

    pub fn terms(&self) -> &[(BigRational, LogNumber)] {
        &self.terms
    }

    pub fn to_f64(&self) -> f64 {
        self.terms
            .iter()
            .map(|(c, l)| c.to_f64().unwrap_or(f64::NAN) * l.to_f64())
            .sum()
    }

    /// Certified sign of the combination.
    pub fn signum(&self) -> Result<Ordering> {
        if self.terms.is_empty() {
            return Ok(Ordering::Equal);
        }
        if let Some(ord) = self.signum_exact(EXACT_BIT_BUDGET) {
            return Ok(ord);
        }
        let mut bits = INTERVAL_START_BITS;
        for _ in 0..=INTERVAL_DOUBLINGS {
            if let Some(ord) = self.signum_interval(bits) {
                return Ok(ord);
            }
            bits *= 2;
        }
        Err(Error::Undecided(INTERVAL_DOUBLINGS))
    }

    /// Exact sign by cross-exponentiation; `None` when over `budget` bits.
    pub fn signum_exact(&self, budget: u64) -> Option<Ordering> {
        let lcm = self
            .terms
            .iter()
            .fold(BigInt::one(), |acc, (c, _)| acc.lcm(c.denom()));
        let mut total_bits: u64 = 0;
        let mut exps = Vec::with_capacity(self.terms.len());
        for (c, l) in &self.terms {
            let e = (c * BigRational::from_integer(lcm.clone())).to_integer();
            let mag = e.magnitude().to_u64()?;
            let bits = l.arg.numer().bits() + l.arg.denom().bits();
            total_bits = total_bits.checked_add(mag.checked_mul(bits)?)?;
            if total_bits > budget {
                return None;
            }
            exps.push((e.sign(), mag));
        }
        let mut lhs = BigUint::one();
        let mut rhs = BigUint::one();
        for ((_, l), (sign, mag)) in self.terms.iter().zip(exps) {
            let num = l.arg.numer().magnitude();
            let den = l.arg.denom().magnitude();
            let k = mag as u32;
            match sign {
                Sign::Plus => {
                    lhs *= num.pow(k);
                    rhs *= den.pow(k);
                }
                Sign::Minus => {
                    lhs *= den.pow(k);
                    rhs *= num.pow(k);
                }
                Sign::NoSign => {}
            }
        }
        Some(lhs.cmp(&rhs))
    }

    /// Sign from a fixed-point enclosure at `bits` of precision; `None` if the
    /// enclosure straddles zero.
    pub fn signum_interval(&self, bits: u32) -> Option<Ordering> {
        let (lo, hi) = self.enclose(bits);
        if lo.is_positive() {
            Some(Ordering::Greater)
        } else if hi.is_negative() {
            Some(Ordering::Less)
        } else {
            None
        }
    }

    /// Enclosure `[lo, hi]` of the combination, scaled by `2^work` where
    /// `work = bits + GUARD_BITS`.
    pub fn enclose(&self, bits: u32) -> (BigInt, BigInt) {
        let work = bits + GUARD_BITS;
        let mut lo = BigInt::zero();
        let mut hi = BigInt::zero();
        for (c, l) in &self.terms {
            let (llo, lhi) = ln_rational_enclosure(&l.arg, work);
            let (n, d) = (c.numer(), c.denom());
            let (a, b) = if c.is_positive() { (llo, lhi) } else { (lhi, llo) };
            lo += (n * a).div_floor(d);
            hi += {
                let t = n * b;
                -((-t).div_floor(d))
            };
        }
        (lo, hi)
    }
}

/// Exact comparison of `a * log p` against `b * log q`.
pub fn compare_scaled(a: &BigRational, p: &LogNumber, b: &BigRational, q: &LogNumber) -> Result<Ordering> {
    LogCombination::new()
        .term(a.clone(), p.clone())
        .term(-b.clone(), q.clone())
        .signum()
}

const GUARD_BITS: u32 = 64;

/// Fixed-point `2*atanh(num/den)` scaled by `2^work`, truncated; returns the
/// value and the number of series terms used.
fn two_atanh_fixed(num: &BigUint, den: &BigUint, work: u32) -> (BigInt, u64) {
    let s: BigInt = BigInt::from((num << work) / den);
    let s2: BigInt = (&s * &s) >> work;
    let mut term = s;
    let mut sum = BigInt::zero();
    let mut k: u64 = 0;
    while !term.is_zero() {
        sum += &term / BigInt::from(2 * k + 1);
        term = (&term * &s2) >> work;
        k += 1;
    }
    (sum << 1u32, k)
}

fn ln2_fixed(work: u32) -> (BigInt, u64) {
    two_atanh_fixed(&BigUint::one(), &BigUint::from(3u32), work)
}

/// Enclosure of `ln n` scaled by `2^work`.
fn ln_biguint_enclosure(n: &BigUint, work: u32) -> (BigInt, BigInt) {
    debug_assert!(!n.is_zero());
    let k = n.bits() - 1;
    let base = BigUint::one() << k;
    let (ln2, t2) = ln2_fixed(work);
    let (lnm, tm) = two_atanh_fixed(&(n - &base), &(n + &base), work);
    let center = BigInt::from(k) * ln2 + lnm;
    // Each truncation costs at most one ulp; the atanh series loses at most
    // two ulps per term (division and product), doubled by the factor 2.
    let err = BigInt::from((k + 1) * (4 * t2 + 8) + 4 * tm + 8);
    (&center - &err, &center + &err)
}

fn ln_rational_enclosure(q: &BigRational, work: u32) -> (BigInt, BigInt) {
    let (nlo, nhi) = ln_biguint_enclosure(q.numer().magnitude(), work);
    let (dlo, dhi) = ln_biguint_enclosure(q.denom().magnitude(), work);
    (nlo - dhi, nhi - dlo)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn log(n: i64, d: i64) -> LogNumber {
        LogNumber::new(r(n, d)).unwrap()
    }

    #[test]
    fn sums_are_products() {
        let s = log(2, 1).add(&log(3, 1));
        assert_eq!(s, log(6, 1));
        assert!(log(1, 1).is_zero());
        assert_eq!(log(2, 3).neg(), log(3, 2));
        assert_eq!(log(2, 1).scale(10), log(1024, 1));
    }

    #[test]
    fn rejects_nonpositive() {
        assert!(LogNumber::new(r(0, 1)).is_err());
        assert!(LogNumber::new(r(-2, 1)).is_err());
    }

    #[test]
    fn exact_equal_combination() {
        // 2 log 2 - log 4 = 0
        let c = LogCombination::new().term(r(2, 1), log(2, 1)).term(r(-1, 1), log(4, 1));
        assert!(c.terms().is_empty() || c.signum().unwrap() == Ordering::Equal);
        let c = LogCombination::new().term(r(1, 2), log(9, 1)).term(r(-1, 1), log(3, 1));
        assert_eq!(c.signum().unwrap(), Ordering::Equal);
    }

    #[test]
    fn interval_agrees_with_exact_on_close_values() {
        // log 3 / log 2 vs 1.58496 ~ 3^100000 vs 2^158496
        let c = LogCombination::new()
            .term(r(100_000, 1), log(3, 1))
            .term(r(-158_496, 1), log(2, 1));
        let exact = c.signum_exact(u64::MAX).unwrap();
        let interval = c.signum_interval(256).unwrap();
        assert_eq!(exact, interval);
        assert_eq!(c.signum().unwrap(), exact);
    }

    #[test]
    fn interval_fallback_beyond_budget() {
        // 10^7 * log 3 > 1.58 * 10^7 * log 2
        let c = LogCombination::new()
            .term(r(10_000_000, 1), log(3, 1))
            .term(r(-15_800_000, 1), log(2, 1));
        assert!(c.signum_exact(EXACT_BIT_BUDGET).is_none());
        assert_eq!(c.signum().unwrap(), Ordering::Greater);
    }

    #[test]
    fn enclosure_contains_ln() {
        for n in [2u64, 3, 10, 12345, u64::MAX] {
            let (lo, hi) = ln_biguint_enclosure(&BigUint::from(n), 128);
            let scale = 2f64.powi(128 + 0);
            let lo_f = lo.to_f64().unwrap() / scale / 2f64.powi(0);
            let hi_f = hi.to_f64().unwrap() / scale;
            let want = (n as f64).ln();
            assert!(lo_f <= want + 1e-12 && want - 1e-12 <= hi_f, "{n}: {lo_f} {want} {hi_f}");
        }
    }
}
