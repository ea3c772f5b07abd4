//! p-adic valuations along orbits by iterating homogeneous coordinates
//! in p-adic floating point, plus lifting-the-exponent and minimal exponents.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::arith::{is_prime_u64, multiplicative_order, strip_prime};
use crate::error::{Error, Result};
use crate::places::ProjPoint;
use crate::ratmap::RationalMap;

/// `v_p(a^n - b^n)` for odd `p` with `p | a - b`, `p` dividing neither.
pub fn lte_valuation(a: &BigInt, b: &BigInt, n: u64, p: u64) -> Result<u64> {
    if !is_prime_u64(p) {
        return Err(Error::NotPrime(p));
    }
    if p == 2 {
        return Err(Error::LtePrecondition("p must be odd"));
    }
    if n == 0 {
        return Err(Error::LtePrecondition("n must be positive"));
    }
    let diff = a - b;
    if diff.is_zero() {
        return Err(Error::LtePrecondition("a = b, so a^n - b^n = 0 has no valuation"));
    }
    let pb = BigInt::from(p);
    if !(&diff % &pb).is_zero() {
        return Err(Error::LtePrecondition("p must divide a - b"));
    }
    if (a % &pb).is_zero() || (b % &pb).is_zero() {
        return Err(Error::LtePrecondition("p must not divide a or b"));
    }
    let mut vn = 0;
    let mut m = n;
    while m % p == 0 {
        m /= p;
        vn += 1;
    }
    Ok(strip_prime(diff.magnitude(), p).0 + vn)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrecisionSchedule {
    pub initial_digits: u64,
    pub max_digits: u64,
}

impl Default for PrecisionSchedule {
    fn default() -> Self {
        PrecisionSchedule { initial_digits: 64, max_digits: 1 << 16 }
    }
}

impl PrecisionSchedule {
    pub fn new(initial_digits: u64, max_digits: u64) -> Result<Self> {
        if initial_digits == 0 || initial_digits > max_digits {
            return Err(Error::InvalidArgument(format!(
                "need 1 <= initial ({initial_digits}) <= max ({max_digits})"
            )));
        }
        Ok(PrecisionSchedule { initial_digits, max_digits })
    }

    /// Working precisions tried in order: doubling, capped at the maximum.
    pub fn steps(&self) -> Vec<u64> {
        let mut out = vec![self.initial_digits];
        while *out.last().unwrap() < self.max_digits {
            let next = (out.last().unwrap() * 2).min(self.max_digits);
            out.push(next);
        }
        out
    }
}

/// Orbits with coordinates up to this many bits are also run exactly to
/// detect `phi^n(alpha) = beta` or a pole.
const EXACT_CHECK_BITS: u64 = 4096;

enum Attempt {
    Done(i64),
    /// More digits needed; the index where precision ran out.
    NeedMore(usize),
}

/// `p^val * unit` with `unit` a p-adic unit known modulo `p^rel`.
/// `Zero` is an exact zero; `Small(a)` is only known to be `0 mod p^a`.
#[derive(Clone, Debug)]
enum PFloat {
    Zero,
    Small(u64),
    Num { val: u64, unit: BigInt, rel: u64 },
}

impl PFloat {
    fn val(&self) -> Option<u64> {
        match self {
            PFloat::Num { val, .. } => Some(*val),
            _ => None,
        }
    }
}

/// Arithmetic on [`PFloat`]s with units stored modulo `p^digits`. `None`
/// means a valuation overflowed.
struct Digits {
    p: u64,
    digits: u64,
    modulus: BigInt,
}

impl Digits {
    fn new(p: u64, digits: u64) -> Self {
        Digits { p, digits, modulus: BigInt::from(p).pow(digits as u32) }
    }

    fn exact(&self, x: &BigInt) -> PFloat {
        if x.is_zero() {
            return PFloat::Zero;
        }
        let (val, unit) = strip_prime(x.magnitude(), self.p);
        let unit = BigInt::from_biguint(x.sign(), unit).mod_floor(&self.modulus);
        PFloat::Num { val, unit, rel: self.digits }
    }

    fn mul(&self, a: &PFloat, b: &PFloat) -> Option<PFloat> {
        use PFloat::*;
        Some(match (a, b) {
            (Zero, _) | (_, Zero) => Zero,
            (Small(x), Small(y)) => Small(x.checked_add(*y)?),
            (Small(x), Num { val, .. }) | (Num { val, .. }, Small(x)) => Small(x.checked_add(*val)?),
            (Num { val: va, unit: ua, rel: ra }, Num { val: vb, unit: ub, rel: rb }) => {
                Num { val: va.checked_add(*vb)?, unit: (ua * ub).mod_floor(&self.modulus), rel: *ra.min(rb) }
            }
        })
    }

    fn add(&self, a: &PFloat, b: &PFloat) -> Option<PFloat> {
        use PFloat::*;
        let (ea, ua, ra, eb, ub, rb) = match (a, b) {
            (Zero, x) | (x, Zero) => return Some(x.clone()),
            (Small(x), Small(y)) => return Some(Small(*x.min(y))),
            (Small(x), Num { val, unit, rel }) | (Num { val, unit, rel }, Small(x)) => {
                return Some(if val < x {
                    Num { val: *val, unit: unit.clone(), rel: (*rel).min(x - val) }
                } else {
                    Small(*x)
                });
            }
            (Num { val: va, unit: ua, rel: ra }, Num { val: vb, unit: ub, rel: rb }) if va <= vb => (va, ua, ra, vb, ub, rb),
            (Num { val: va, unit: ua, rel: ra }, Num { val: vb, unit: ub, rel: rb }) => (vb, ub, rb, va, ua, ra),
        };
        let shift = eb - ea;
        let known = (*ra).min(shift.saturating_add(*rb));
        let s = if shift >= known {
            ua.clone()
        } else {
            (ua + BigInt::from(self.p).pow(shift as u32) * ub).mod_floor(&self.modulus)
        };
        let (v, unit) = if s.is_zero() { (known, Default::default()) } else { strip_prime(s.magnitude(), self.p) };
        Some(if v < known {
            Num { val: ea + v, unit: unit.into(), rel: known - v }
        } else {
            Small(ea.checked_add(known)?)
        })
    }
}

fn attempt(phi: &RationalMap, alpha: &ProjPoint, beta: &ProjPoint, p: u64, n: usize, digits: u64) -> Result<Attempt> {
    let ring = Digits::new(p, digits);
    let overflow = || Error::InvalidArgument(format!("valuations along the orbit overflow at p = {p}"));
    let d = phi.degree();
    let num: Vec<PFloat> = phi.num().iter().map(|c| ring.exact(c)).collect();
    let den: Vec<PFloat> = phi.den().iter().map(|c| ring.exact(c)).collect();
    let one = ring.exact(&BigInt::from(1));
    let mut x0 = ring.exact(alpha.x0());
    let mut x1 = ring.exact(alpha.x1());
    for k in 1..=n {
        let mut p0 = vec![one.clone()];
        let mut p1 = vec![one.clone()];
        for i in 1..=d {
            p0.push(ring.mul(&p0[i - 1], &x0).ok_or_else(overflow)?);
            p1.push(ring.mul(&p1[i - 1], &x1).ok_or_else(overflow)?);
        }
        let mut y0 = PFloat::Zero;
        let mut y1 = PFloat::Zero;
        for i in 0..=d {
            let mono = ring.mul(&p0[i], &p1[d - i]).ok_or_else(overflow)?;
            y0 = ring.add(&y0, &ring.mul(&num[i], &mono).ok_or_else(overflow)?).ok_or_else(overflow)?;
            y1 = ring.add(&y1, &ring.mul(&den[i], &mono).ok_or_else(overflow)?).ok_or_else(overflow)?;
        }
        // Rescale so the smaller valuation is zero; it must be known.
        let m = match (&y0, &y1) {
            (PFloat::Num { val: a, .. }, PFloat::Num { val: b, .. }) => *a.min(b),
            (PFloat::Num { val, .. }, PFloat::Zero) | (PFloat::Zero, PFloat::Num { val, .. }) => *val,
            (PFloat::Num { val, .. }, PFloat::Small(a)) | (PFloat::Small(a), PFloat::Num { val, .. }) if val < a => *val,
            _ => return Ok(Attempt::NeedMore(k)),
        };
        for y in [&mut y0, &mut y1] {
            match y {
                PFloat::Num { val, .. } | PFloat::Small(val) => *val -= m,
                PFloat::Zero => {}
            }
        }
        x0 = y0;
        x1 = y1;
    }
    let vx1 = match x1 {
        PFloat::Num { val, .. } => val,
        PFloat::Zero => return Err(Error::Pole(format!("phi^{n}(alpha)"))),
        PFloat::Small(_) => return Ok(Attempt::NeedMore(n)),
    };
    let lhs = ring.mul(&x0, &ring.exact(beta.x1())).ok_or_else(overflow)?;
    let rhs = ring.mul(&x1, &ring.exact(&-beta.x0())).ok_or_else(overflow)?;
    let Some(vc) = ring.add(&lhs, &rhs).ok_or_else(overflow)?.val() else {
        return Ok(Attempt::NeedMore(n));
    };
    let vb1 = strip_prime(beta.x1().magnitude(), p).0;
    let as_i64 = |v: u64| i64::try_from(v).map_err(|_| overflow());
    Ok(Attempt::Done(as_i64(vc)? - as_i64(vx1)? - as_i64(vb1)?))
}

/// `v_p(phi^n(alpha) - beta)` without forming the orbit exactly.
///
/// Homogeneous coordinates are carried as `p^e * u` with the exponent exact
/// and the unit `u` known to `k` digits, so digits are lost only when terms
/// cancel. `k` is doubled along `sched` whenever the answer is not
/// determined.
pub fn orbit_valuation(
    phi: &RationalMap,
    alpha: &BigRational,
    beta: &BigRational,
    p: u64,
    n: usize,
    sched: PrecisionSchedule,
) -> Result<i64> {
    if !is_prime_u64(p) {
        return Err(Error::NotPrime(p));
    }
    let a = ProjPoint::from_rational(alpha);
    let b = ProjPoint::from_rational(beta);
    if let Ok(exact) = phi.iterate(&a, n, EXACT_CHECK_BITS) {
        if exact == b {
            return Err(Error::ExactZero);
        }
        if exact.is_infinity() {
            return Err(Error::Pole(format!("phi^{n}(alpha)")));
        }
    }
    let mut last = 0;
    for digits in sched.steps() {
        match attempt(phi, &a, &b, p, n, digits)? {
            Attempt::Done(v) => return Ok(v),
            Attempt::NeedMore(idx) => last = idx,
        }
    }
    Err(Error::PrecisionExhausted { index: last, digits: sched.max_digits })
}

/// Exact `v_p(phi^n(alpha) - beta)` through the full orbit; the oracle for
/// [`orbit_valuation`].
pub fn orbit_valuation_exact(
    phi: &RationalMap,
    alpha: &BigRational,
    beta: &BigRational,
    p: u64,
    n: usize,
) -> Result<i64> {
    if !is_prime_u64(p) {
        return Err(Error::NotPrime(p));
    }
    // Unreduced homogeneous coordinates: the answer is invariant under
    // common scaling, and skipping gcds keeps megabit orbits cheap.
    let a = ProjPoint::from_rational(alpha);
    let (mut x0, mut x1) = (a.x0().clone(), a.x1().clone());
    for _ in 0..n {
        (x0, x1) = phi.eval_homogeneous(&x0, &x1);
    }
    if x1.is_zero() {
        return Err(Error::Pole(format!("phi^{n}(alpha)")));
    }
    // x0/x1 - b0/b1 = cross / (x1 b1).
    let b = ProjPoint::from_rational(beta);
    let cross = &x0 * b.x1() - &x1 * b.x0();
    if cross.is_zero() {
        return Err(Error::ExactZero);
    }
    let v = |n: &BigInt| strip_prime(n.magnitude(), p).0 as i64;
    Ok(v(&cross) - v(&x1) - v(b.x1()))
}

/// Multiplicative order of the `p`-unit `beta` modulo `p`.
pub fn min_exponent_kv(beta: &BigRational, p: u64) -> Result<u64> {
    if !is_prime_u64(p) {
        return Err(Error::NotPrime(p));
    }
    let pb = BigInt::from(p);
    let (num, den) = (beta.numer().mod_floor(&pb), beta.denom().mod_floor(&pb));
    if num.is_zero() || den.is_zero() {
        return Err(Error::NotAUnit(beta.to_string(), p));
    }
    let num = num.to_u64().expect("reduced");
    let den = den.to_u64().expect("reduced");
    let inv = crate::arith::pow_mod(den, p - 2, p);
    let unit = crate::arith::mul_mod(num, if p == 2 { 1 } else { inv }, p);
    Ok(if p == 2 { 1 } else { multiplicative_order(unit, p) })
}
