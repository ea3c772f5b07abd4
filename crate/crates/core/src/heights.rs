//! Weil heights, map heights, one-step height-drop constants and certified
//! canonical heights.

use std::collections::HashSet;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::arith::ln_bigint_abs;
use crate::error::{Error, Result};
use crate::logs::LogNumber;
use crate::places::ProjPoint;
use crate::ratmap::RationalMap;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HeightValue {
    pub exact: LogNumber,
    pub float: f64,
}

impl HeightValue {
    fn of_int(n: &BigInt) -> Self {
        let exact = LogNumber::of_int(n).expect("heights are logs of positive integers");
        let float = exact.to_f64();
        HeightValue { exact, float }
    }
}

/// `log max(|x0|, |x1|)` for a normalized point.
pub fn weil_height(x: &ProjPoint) -> HeightValue {
    HeightValue::of_int(&x.max_abs())
}

pub fn rational_height(q: &BigRational) -> HeightValue {
    weil_height(&ProjPoint::from_rational(q))
}

/// Height of the joint normalized coefficient vector.
pub fn map_height(phi: &RationalMap) -> HeightValue {
    let m = phi.num().iter().chain(phi.den()).map(|c| c.abs()).max().expect("nonempty");
    HeightValue::of_int(&m)
}

/// Slacks of the three elementary height inequalities for a pair of
/// rationals; each is nonnegative exactly when its inequality holds.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HeightSlacks {
    /// `h(x) + h(y) + log 2 - h(x + y)`
    pub sum: LogNumber,
    /// `h(x - y) - (|h(x) - h(y)| - log 2)`
    pub difference: LogNumber,
    /// `h(x) + h(y) - h(xy)`
    pub product: LogNumber,
}

impl HeightSlacks {
    pub fn all_hold(&self) -> bool {
        [&self.sum, &self.difference, &self.product].iter().all(|s| !s.signum().is_lt())
    }
}

pub fn height_sum_check(x: &BigRational, y: &BigRational) -> HeightSlacks {
    let h = |q: &BigRational| rational_height(q).exact;
    let (hx, hy) = (h(x), h(y));
    let log2 = LogNumber::of_u64(2);
    let gap = if hx >= hy { hx.sub(&hy) } else { hy.sub(&hx) };
    HeightSlacks {
        sum: hx.add(&hy).add(&log2).sub(&h(&(x + y))),
        difference: h(&(x - y)).sub(&gap).add(&log2),
        product: hx.add(&hy).sub(&h(&(x * y))),
    }
}

/// One-step bounds `d h(x) - e_low <= h(phi x) <= d h(x) + d e_up`.
///
/// `e_up` and `e_low` follow the classical argument: the coefficient count
/// bound for the upper side, and the height of the Bezout cofactors solved
/// from the Sylvester system for the lower side. `sharp_up` and `sharp_low`
/// are additive constants for `h(phi x) - d h(x)` obtained place by place
/// from the same cofactors, and drive the canonical-height certificate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HeightDropConstants {
    pub degree: usize,
    pub e_up: f64,
    pub e_low: f64,
    pub sharp_up: f64,
    pub sharp_low: f64,
    #[serde(skip)]
    exact: ExactDrop,
}

#[derive(Clone, Debug, PartialEq)]
struct ExactDrop {
    /// `H(phi) * binom(d+2, 2)`, so `e_up = log` of it.
    up: BigInt,
    /// `2(d+1) * H(w)` for the joint cofactor vector `w`.
    low: BigInt,
    /// `max(l1(a), l1(b))`.
    sharp_up: BigInt,
    /// `max_i l1(cofactors_i) * D / G`.
    sharp_low: BigRational,
}

fn binom(n: u64, k: u64) -> u64 {
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

pub fn height_drop_constants(phi: &RationalMap) -> HeightDropConstants {
    let d = phi.degree();
    let hphi = phi.num().iter().chain(phi.den()).map(|c| c.abs()).max().expect("nonempty");
    let up = &hphi * BigInt::from(binom(d as u64 + 2, 2));

    let cof = phi.bezout_cofactors();
    let all: Vec<&BigRational> = cof.iter().flat_map(|(g0, g1)| g0.iter().chain(g1)).collect();
    let den_lcm = all.iter().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
    let scaled: Vec<BigInt> = all
        .iter()
        .map(|c| (*c * BigRational::from_integer(den_lcm.clone())).to_integer())
        .collect();
    let num_gcd = scaled.iter().fold(BigInt::zero(), |g, c| g.gcd(c));
    let w_height = scaled.iter().map(|c| c.abs()).max().expect("nonempty") / &num_gcd;
    let low = BigInt::from(2 * (d as u64 + 1)) * w_height;

    let l1 = |v: &[BigInt]| v.iter().map(|c| c.abs()).fold(BigInt::zero(), |a, b| a + b);
    let sharp_up = l1(phi.num()).max(l1(phi.den()));
    let l1q = |v: &[BigRational]| v.iter().map(|c| c.abs()).fold(BigRational::zero(), |a, b| a + b);
    let cof_l1 = cof
        .iter()
        .map(|(g0, g1)| l1q(g0) + l1q(g1))
        .max()
        .expect("two systems");
    let sharp_low = cof_l1 * BigRational::new(den_lcm, num_gcd);

    let lnq = |q: &BigRational| ln_bigint_abs(q.numer()) - ln_bigint_abs(q.denom());
    HeightDropConstants {
        degree: d,
        e_up: ln_bigint_abs(&up),
        e_low: ln_bigint_abs(&low),
        sharp_up: ln_bigint_abs(&sharp_up),
        sharp_low: lnq(&sharp_low).max(0.0),
        exact: ExactDrop { up, low, sharp_up, sharp_low },
    }
}

/// Outcome of validating the drop constants at one point; all comparisons
/// are exact integer inequalities between heights raised to powers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct DropCheck {
    pub upper: bool,
    pub lower: bool,
    pub sharp_upper: bool,
    pub sharp_lower: bool,
}

impl DropCheck {
    pub fn all(&self) -> bool {
        self.upper && self.lower && self.sharp_upper && self.sharp_lower
    }
}

impl HeightDropConstants {
    pub fn check(&self, phi: &RationalMap, x: &ProjPoint) -> DropCheck {
        let d = self.degree;
        let hx_d = num_traits::pow(x.max_abs(), d);
        let hy = phi.apply(x).max_abs();
        let e = &self.exact;
        DropCheck {
            upper: hy <= &hx_d * num_traits::pow(e.up.clone(), d),
            lower: &hy * &e.low >= hx_d,
            sharp_upper: hy <= &hx_d * &e.sharp_up,
            sharp_lower: BigRational::from_integer(hy.clone()) * &e.sharp_low
                >= BigRational::from_integer(hx_d.clone()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CanonicalHeightInterval {
    pub lo: f64,
    pub hi: f64,
    pub iterations_used: usize,
}

impl CanonicalHeightInterval {
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CanonicalOptions {
    pub iteration_cap: usize,
    pub bit_cap: u64,
}

impl Default for CanonicalOptions {
    fn default() -> Self {
        CanonicalOptions { iteration_cap: 64, bit_cap: 1 << 22 }
    }
}

/// Relative padding for floating rounding in `h(phi^n x) / d^n`.
const ROUNDING_PAD: f64 = 1e-14;
/// Orbit points up to this size are remembered for cycle detection.
const CYCLE_TRACK_BITS: u64 = 512;

pub fn canonical_height(phi: &RationalMap, x: &ProjPoint, tol: f64) -> Result<CanonicalHeightInterval> {
    canonical_height_with(phi, x, tol, CanonicalOptions::default())
}

/// Telescoping enclosure: with `up`/`low` bounding `h(phi y) - d h(y)`,
/// after `n` steps the limit lies in
/// `[h_n/d^n - low/(d^n (d-1)), h_n/d^n + up/(d^n (d-1))]`.
pub fn canonical_height_with(
    phi: &RationalMap,
    x: &ProjPoint,
    tol: f64,
    opts: CanonicalOptions,
) -> Result<CanonicalHeightInterval> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance must be positive, got {tol}")));
    }
    let consts = height_drop_constants(phi);
    let d = phi.degree() as f64;
    let (up, low) = (consts.sharp_up, consts.sharp_low);
    let mut seen: HashSet<ProjPoint> = HashSet::new();
    let mut cur = x.clone();
    let mut scale = 1.0f64;
    for n in 0..=opts.iteration_cap {
        if cur.bits() <= CYCLE_TRACK_BITS && !seen.insert(cur.clone()) {
            // Preperiodic: the canonical height vanishes.
            return Ok(CanonicalHeightInterval { lo: 0.0, hi: 0.0, iterations_used: n });
        }
        let base = ln_bigint_abs(&cur.max_abs()) / scale;
        let tail = 1.0 / (scale * (d - 1.0));
        let pad = ROUNDING_PAD * (base + (up + low) * tail) + f64::MIN_POSITIVE;
        let lo = (base - low * tail - pad).max(0.0);
        let hi = base + up * tail + pad;
        if hi - lo <= 2.0 * tol {
            return Ok(CanonicalHeightInterval { lo, hi, iterations_used: n });
        }
        if n == opts.iteration_cap {
            break;
        }
        cur = phi.apply(&cur);
        if cur.bits() > opts.bit_cap {
            return Err(Error::BitCapExceeded { index: n + 1, cap: opts.bit_cap });
        }
        scale *= d;
    }
    Err(Error::IterationCap(opts.iteration_cap))
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
    fn weil_height_examples() {
        assert_eq!(weil_height(&pt(2, 3)).exact, LogNumber::of_u64(3));
        assert!(weil_height(&ProjPoint::infinity()).exact.is_zero());
        assert_eq!(weil_height(&pt(-45, 8)).exact, LogNumber::of_u64(45));
    }

    #[test]
    fn map_height_examples() {
        assert!(map_height(&RationalMap::power(2)).exact.is_zero());
        let m = RationalMap::from_i64(&[1, 0, 3], &[0, 2]).unwrap();
        assert_eq!(map_height(&m).exact, LogNumber::of_u64(3));
        let m = RationalMap::from_i64(&[0, 0, 1], &[5]).unwrap();
        assert_eq!(map_height(&m).exact, LogNumber::of_u64(5));
    }

    #[test]
    fn slack_examples() {
        let s = height_sum_check(&q(1, 1), &q(1, 1));
        // h(2) = log 2 uses up the whole allowance.
        assert!(s.sum.is_zero());
        assert_eq!(s.difference, LogNumber::of_u64(2));
        assert!(s.product.is_zero());
        let s = height_sum_check(&q(2, 1), &q(3, 1));
        assert_eq!(s.sum.arg(), &q(12, 5));
        let s = height_sum_check(&q(1, 2), &q(1, 2));
        // h(1/4) = 2 log 2 = h(1/2) + h(1/2).
        assert!(s.product.is_zero());
        assert!(s.all_hold());
    }

    #[test]
    fn drop_constants_examples() {
        let z2p1 = RationalMap::from_i64(&[1, 0, 1], &[1]).unwrap();
        let c = height_drop_constants(&z2p1);
        assert!((c.e_up - 6f64.ln()).abs() < 1e-12);
        assert!(c.e_low.is_finite());
        let z2 = RationalMap::power(2);
        let c = height_drop_constants(&z2);
        assert_eq!(c.sharp_up, 0.0);
        assert_eq!(c.sharp_low, 0.0);
        for n in 1..50 {
            assert!(c.check(&z2, &pt(n, 7)).all());
        }
        let m = RationalMap::from_i64(&[-1, 0, 1], &[0, 1]).unwrap();
        let c = height_drop_constants(&m);
        for a in -60..60 {
            for b in 1..20 {
                assert!(c.check(&m, &pt(a, b)).all(), "{a}/{b}");
            }
        }
    }

    #[test]
    fn canonical_examples() {
        let z2 = RationalMap::power(2);
        let iv = canonical_height(&z2, &pt(2, 1), 1e-9).unwrap();
        assert!(iv.contains(2f64.ln()) && iv.width() <= 2e-9);
        let z2m1 = RationalMap::from_i64(&[-1, 0, 1], &[1]).unwrap();
        let iv = canonical_height(&z2m1, &pt(0, 1), 1e-9).unwrap();
        assert!(iv.contains(0.0));
        let z2p1 = RationalMap::from_i64(&[1, 0, 1], &[1]).unwrap();
        let iv = canonical_height(&z2p1, &pt(0, 1), 1e-6).unwrap();
        // h(phi^6(0)) / 2^6 with phi^6(0) = 458330.
        let oracle = 458_330f64.ln() / 64.0;
        assert!(iv.width() <= 2e-6);
        assert!((iv.midpoint() - oracle).abs() < 5e-3, "{iv:?}");
        assert!((iv.midpoint() - 0.20368).abs() < 1e-4, "{iv:?}");
    }

    #[test]
    fn canonical_caps() {
        let z2p1 = RationalMap::from_i64(&[1, 0, 1], &[1]).unwrap();
        let opts = CanonicalOptions { iteration_cap: 3, bit_cap: 1 << 22 };
        assert_eq!(canonical_height_with(&z2p1, &pt(0, 1), 1e-9, opts), Err(Error::IterationCap(3)));
        let opts = CanonicalOptions { iteration_cap: 64, bit_cap: 40 };
        assert!(matches!(
            canonical_height_with(&z2p1, &pt(0, 1), 1e-9, opts),
            Err(Error::BitCapExceeded { .. })
        ));
        assert!(canonical_height(&z2p1, &pt(0, 1), 0.0).is_err());
    }
}
