//! Places of Q, normalized projective points, absolute values and the
//! chordal metrics.
//!
//! Every local degree is 1 over Q, so no weights appear anywhere below.

use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::arith::{is_prime_u64, strip_prime};
use crate::error::{Error, Result};
use crate::logs::LogNumber;

/// A rational prime, checked on construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Prime(u64);

impl Prime {
    pub fn new(p: u64) -> Result<Self> {
        if is_prime_u64(p) {
            Ok(Prime(p))
        } else {
            Err(Error::NotPrime(p))
        }
    }

    pub fn get(self) -> u64 {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Place {
    Archimedean,
    Finite(Prime),
}

impl Place {
    pub fn finite(p: u64) -> Result<Self> {
        Prime::new(p).map(Place::Finite)
    }

    pub fn prime(self) -> Option<u64> {
        match self {
            Place::Archimedean => None,
            Place::Finite(p) => Some(p.get()),
        }
    }

    pub fn is_archimedean(self) -> bool {
        matches!(self, Place::Archimedean)
    }
}

impl fmt::Display for Place {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Place::Archimedean => f.write_str("inf"),
            Place::Finite(p) => write!(f, "{}", p.get()),
        }
    }
}

impl FromStr for Place {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("inf") {
            return Ok(Place::Archimedean);
        }
        let p: u64 = s.parse().map_err(|_| Error::Parse(format!("bad place {s:?}")))?;
        Place::finite(p)
    }
}

impl Serialize for Place {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Place {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A point of P^1(Q) as coprime integers `[x0:x1]`, standing for `x0/x1`.
///
/// Invariant: `x1 > 0`, or the point is `[1:0]` (infinity).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ProjPoint {
    x0: BigInt,
    x1: BigInt,
}

impl ProjPoint {
    pub fn new(x0: BigInt, x1: BigInt) -> Result<Self> {
        if x0.is_zero() && x1.is_zero() {
            return Err(Error::ZeroPoint);
        }
        Ok(Self::normalized(x0, x1))
    }

    /// Normalizes a pair known not to be `(0, 0)`.
    pub(crate) fn normalized(mut x0: BigInt, mut x1: BigInt) -> Self {
        if x1.is_zero() {
            return Self::infinity();
        }
        if x0.is_zero() {
            return Self::zero();
        }
        let g = x0.gcd(&x1);
        if !g.is_one() {
            x0 /= &g;
            x1 /= &g;
        }
        if x1.is_negative() {
            x0 = -x0;
            x1 = -x1;
        }
        ProjPoint { x0, x1 }
    }

    /// Normalizes `(x0, x1)` given that any common factor divides `bound`.
    pub(crate) fn normalized_with_gcd_bound(mut x0: BigInt, mut x1: BigInt, bound: &BigInt) -> Self {
        if x1.is_zero() {
            return Self::infinity();
        }
        if x0.is_zero() {
            return Self::zero();
        }
        let g = (&x0 % bound).gcd(bound).gcd(&(&x1 % bound));
        if !g.is_one() && !g.is_zero() {
            x0 /= &g;
            x1 /= &g;
        }
        if x1.is_negative() {
            x0 = -x0;
            x1 = -x1;
        }
        ProjPoint { x0, x1 }
    }

    pub fn infinity() -> Self {
        ProjPoint { x0: BigInt::one(), x1: BigInt::zero() }
    }

    pub fn zero() -> Self {
        ProjPoint { x0: BigInt::zero(), x1: BigInt::one() }
    }

    pub fn from_rational(q: &BigRational) -> Self {
        Self::normalized(q.numer().clone(), q.denom().clone())
    }

    pub fn from_int(n: i64) -> Self {
        ProjPoint { x0: BigInt::from(n), x1: BigInt::one() }
    }

    pub fn from_ratio(n: i64, d: i64) -> Result<Self> {
        Self::new(BigInt::from(n), BigInt::from(d))
    }

    pub fn x0(&self) -> &BigInt {
        &self.x0
    }

    pub fn x1(&self) -> &BigInt {
        &self.x1
    }

    pub fn is_infinity(&self) -> bool {
        self.x1.is_zero()
    }

    pub fn to_rational(&self) -> Option<BigRational> {
        (!self.is_infinity()).then(|| BigRational::new_raw(self.x0.clone(), self.x1.clone()))
    }

    /// `x0*y1 - x1*y0`.
    pub fn cross(&self, other: &ProjPoint) -> BigInt {
        &self.x0 * &other.x1 - &self.x1 * &other.x0
    }

    /// Bit length of the larger coordinate.
    pub fn bits(&self) -> u64 {
        self.x0.bits().max(self.x1.bits())
    }

    pub fn max_abs(&self) -> BigInt {
        BigInt::from(self.x0.magnitude().max(self.x1.magnitude()).clone())
    }
}

impl fmt::Display for ProjPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}:{}]", self.x0, self.x1)
    }
}

impl FromStr for ProjPoint {
    type Err = Error;

    /// Accepts `inf`, an integer, `p/q`, or `[x0:x1]`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("inf") {
            return Ok(Self::infinity());
        }
        let parse = |t: &str| -> Result<BigInt> {
            t.trim().parse::<BigInt>().map_err(|_| Error::Parse(format!("bad integer {t:?}")))
        };
        if let Some(inner) = s.strip_prefix('[').and_then(|t| t.strip_suffix(']')) {
            let (a, b) = inner.split_once(':').ok_or_else(|| Error::Parse(format!("bad point {s:?}")))?;
            return Self::new(parse(a)?, parse(b)?);
        }
        Ok(Self::from_rational(&parse_rational(s)?))
    }
}

impl Serialize for ProjPoint {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [self.x0.to_string(), self.x1.to_string()].serialize(s)
    }
}

/// Parses `n` or `p/q` into a rational.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("bad rational {s:?}"));
    match s.split_once('/') {
        Some((n, d)) => {
            let n: BigInt = n.trim().parse().map_err(|_| bad())?;
            let d: BigInt = d.trim().parse().map_err(|_| bad())?;
            if d.is_zero() {
                return Err(Error::Parse(format!("zero denominator in {s:?}")));
            }
            Ok(BigRational::new(n, d))
        }
        None => Ok(BigRational::from_integer(s.parse().map_err(|_| bad())?)),
    }
}

/// `v_p(x)` for nonzero rational `x`.
pub fn valuation(x: &BigRational, p: u64) -> Result<i64> {
    if x.is_zero() {
        return Err(Error::ZeroInput);
    }
    Prime::new(p)?;
    Ok(valuation_unchecked(x, p))
}

pub(crate) fn valuation_unchecked(x: &BigRational, p: u64) -> i64 {
    let vn = strip_prime(x.numer().magnitude(), p).0 as i64;
    let vd = strip_prime(x.denom().magnitude(), p).0 as i64;
    vn - vd
}

/// `|x|_v` as an exact positive rational (`x != 0`).
pub fn abs_at(x: &BigRational, v: Place) -> Result<BigRational> {
    if x.is_zero() {
        return Err(Error::ZeroInput);
    }
    Ok(match v {
        Place::Archimedean => x.abs(),
        Place::Finite(p) => p_power(p.get(), -valuation_unchecked(x, p.get())),
    })
}

pub(crate) fn p_power(p: u64, e: i64) -> BigRational {
    let pe = BigInt::from(p).pow(e.unsigned_abs() as u32);
    if e >= 0 {
        BigRational::from_integer(pe)
    } else {
        BigRational::new_raw(BigInt::one(), pe)
    }
}

/// `log |x|_v` (`x != 0`).
pub fn log_abs(x: &BigRational, v: Place) -> Result<LogNumber> {
    LogNumber::new(abs_at(x, v)?)
}

/// `log^+ |x|_v = max(0, log |x|_v)`; zero for `x = 0`.
pub fn log_plus_abs(x: &BigRational, v: Place) -> LogNumber {
    if x.is_zero() {
        return LogNumber::zero();
    }
    log_abs(x, v).expect("nonzero").positive_part()
}

/// A chordal distance: exact at finite places, a double at infinity.
#[derive(Clone, Debug, PartialEq)]
pub enum Distance {
    Exact(BigRational),
    Real(f64),
}

impl Distance {
    pub fn to_f64(&self) -> f64 {
        match self {
            Distance::Exact(q) => q.to_f64().unwrap_or(0.0),
            Distance::Real(x) => *x,
        }
    }

    pub fn exact(&self) -> Option<&BigRational> {
        match self {
            Distance::Exact(q) => Some(q),
            Distance::Real(_) => None,
        }
    }
}

/// Default mantissa precision for archimedean chordal distances.
pub const CHORDAL_PRECISION_BITS: u32 = 128;

/// Chordal distance with the max norm at finite places and the Euclidean
/// norm at infinity.
pub fn chordal(x: &ProjPoint, y: &ProjPoint, v: Place) -> Distance {
    chordal_with_precision(x, y, v, CHORDAL_PRECISION_BITS)
}

pub fn chordal_with_precision(x: &ProjPoint, y: &ProjPoint, v: Place, bits: u32) -> Distance {
    let cross = x.cross(y);
    match v {
        Place::Finite(p) => {
            if cross.is_zero() {
                return Distance::Exact(BigRational::zero());
            }
            // Coordinates are coprime, so both max norms are 1.
            let e = strip_prime(cross.magnitude(), p.get()).0 as i64;
            Distance::Exact(p_power(p.get(), -e))
        }
        Place::Archimedean => {
            if cross.is_zero() {
                return Distance::Real(0.0);
            }
            let c2 = cross.magnitude().pow(2u32);
            let n = (x.x0.magnitude().pow(2u32) + x.x1.magnitude().pow(2u32))
                * (y.x0.magnitude().pow(2u32) + y.x1.magnitude().pow(2u32));
            Distance::Real(sqrt_ratio(&c2, &n, bits))
        }
    }
}

/// `sqrt(a/b)` evaluated through an integer square root with `bits` of
/// relative precision.
fn sqrt_ratio(a: &BigUint, b: &BigUint, bits: u32) -> f64 {
    // Choose an even shift so the quotient carries ~2*bits significant bits.
    let want = 2 * bits as i64;
    let mut shift = want - (a.bits() as i64 - b.bits() as i64);
    if shift % 2 != 0 {
        shift += 1;
    }
    let q = if shift >= 0 { (a << shift as u64) / b } else { (a >> (-shift) as u64) / b };
    let s = q.sqrt();
    let half = shift / 2;
    let top = s.bits().saturating_sub(60);
    let mant = (&s >> top).to_f64().unwrap_or(0.0);
    mant * 2f64.powi((top as i64 - half) as i32)
}

/// Logarithmic chordal distance with max norms at every place:
/// `-log(|x0 y1 - x1 y0|_v / (max|x|_v max|y|_v))`.
pub fn log_chordal(x: &ProjPoint, y: &ProjPoint, v: Place) -> Result<LogNumber> {
    let cross = x.cross(y);
    if cross.is_zero() {
        return Err(Error::CoincidentPoints);
    }
    match v {
        Place::Finite(p) => {
            let e = strip_prime(cross.magnitude(), p.get()).0 as i64;
            Ok(LogNumber::new(p_power(p.get(), e)).expect("positive"))
        }
        Place::Archimedean => {
            let num = x.max_abs() * y.max_abs();
            LogNumber::of_ratio(&num, &BigInt::from_biguint(Sign::Plus, cross.magnitude().clone()))
        }
    }
}

/// Finite places where `x` has nonzero valuation, plus infinity.
pub fn support(x: &BigRational) -> Vec<Place> {
    let mut primes: Vec<u64> = Vec::new();
    for part in [x.numer(), x.denom()] {
        if let Some(n) = part.magnitude().to_u64() {
            primes.extend(crate::arith::factor_u64(n).into_iter().map(|(p, _)| p));
        } else {
            primes.extend(crate::integrality::factor_partial(part.magnitude()).primes_u64());
        }
    }
    primes.sort_unstable();
    primes.dedup();
    std::iter::once(Place::Archimedean)
        .chain(primes.into_iter().map(|p| Place::Finite(Prime(p))))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn pt(n: i64, d: i64) -> ProjPoint {
        ProjPoint::from_ratio(n, d).unwrap()
    }

    #[test]
    fn valuation_examples() {
        assert_eq!(valuation(&q(12, 1), 3).unwrap(), 1);
        assert_eq!(valuation(&q(1, 2), 2).unwrap(), -1);
        assert_eq!(valuation(&q(-45, 8), 2).unwrap(), -3);
        assert_eq!(valuation(&q(0, 1), 2), Err(Error::ZeroInput));
        assert_eq!(valuation(&q(5, 1), 4), Err(Error::NotPrime(4)));
    }

    #[test]
    fn log_plus_examples() {
        let inf = Place::Archimedean;
        let two = Place::finite(2).unwrap();
        let three = Place::finite(3).unwrap();
        assert_eq!(log_plus_abs(&q(8, 1), inf), LogNumber::of_u64(8));
        assert!(log_plus_abs(&q(8, 1), two).is_zero());
        assert_eq!(log_plus_abs(&q(1, 9), three), LogNumber::of_u64(9));
        assert!(log_plus_abs(&q(0, 1), inf).is_zero());
    }

    #[test]
    fn normalization() {
        let p = ProjPoint::new((-6).into(), (-4).into()).unwrap();
        assert_eq!((p.x0().clone(), p.x1().clone()), (BigInt::from(3), BigInt::from(2)));
        let inf = ProjPoint::new((-7).into(), 0.into()).unwrap();
        assert!(inf.is_infinity());
        assert_eq!(inf.x0(), &BigInt::one());
        assert_eq!(ProjPoint::new(0.into(), 0.into()), Err(Error::ZeroPoint));
        assert_eq!("[4:-2]".parse::<ProjPoint>().unwrap(), pt(-2, 1));
        assert_eq!("-45/8".parse::<ProjPoint>().unwrap(), pt(-45, 8));
    }

    #[test]
    fn chordal_examples() {
        let three = Place::finite(3).unwrap();
        assert_eq!(chordal(&pt(1, 1), &pt(4, 1), three), Distance::Exact(q(1, 3)));
        assert_eq!(chordal(&pt(0, 1), &pt(0, 1), Place::Archimedean).to_f64(), 0.0);
        let d = chordal(&pt(0, 1), &pt(1, 1), Place::Archimedean).to_f64();
        assert!((d - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn chordal_with_huge_coordinates() {
        let big = BigInt::one() << 3000u32;
        let a = ProjPoint::new(big.clone(), BigInt::one()).unwrap();
        let b = ProjPoint::new(big + 1, BigInt::one()).unwrap();
        let d = chordal(&a, &b, Place::Archimedean).to_f64();
        // Both points sit next to infinity; the distance is about 2^-6000.
        assert!(d == 0.0 || d < 1e-300);
        let d = chordal(&a, &ProjPoint::zero(), Place::Archimedean).to_f64();
        assert!((d - 1.0).abs() < 1e-12);
    }

    #[test]
    fn log_chordal_examples() {
        let three = Place::finite(3).unwrap();
        let seven = Place::finite(7).unwrap();
        let two = Place::finite(2).unwrap();
        assert_eq!(log_chordal(&pt(4, 1), &pt(1, 1), three).unwrap(), LogNumber::of_u64(3));
        assert!(log_chordal(&pt(4, 1), &pt(1, 1), seven).unwrap().is_zero());
        assert!(log_chordal(&pt(5, 2), &pt(2, 1), two).unwrap().is_zero());
        assert_eq!(log_chordal(&pt(2, 1), &pt(2, 1), two), Err(Error::CoincidentPoints));
        // archimedean: max(4,1)*max(1,1)/3
        assert_eq!(log_chordal(&pt(4, 1), &pt(1, 1), Place::Archimedean).unwrap(), LogNumber::new(q(4, 3)).unwrap());
    }

    #[test]
    fn place_parsing() {
        assert_eq!("inf".parse::<Place>().unwrap(), Place::Archimedean);
        assert_eq!("7".parse::<Place>().unwrap(), Place::finite(7).unwrap());
        assert!("8".parse::<Place>().is_err());
        assert_eq!(Place::finite(13).unwrap().to_string(), "13");
    }
}
