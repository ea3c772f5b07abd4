//! S-integrality and S-units over Q, orbit scans, quasi-integrality and the
//! conjugated family with many early integral points.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::arith::{factor_u64, is_probable_prime, small_primes, strip_prime};
use crate::error::{Error, Result};
use crate::heights::{weil_height, HeightValue};
use crate::logs::{compare_scaled, LogNumber};
use crate::par::{self, Execution};
use crate::places::{log_plus_abs, Place, ProjPoint};
use crate::ratmap::RationalMap;

/// A finite set of places containing the archimedean one.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct PlaceSet {
    primes: BTreeSet<u64>,
}

impl PlaceSet {
    /// `{inf}`.
    pub fn archimedean() -> Self {
        PlaceSet::default()
    }

    pub fn from_places(places: &[Place]) -> Result<Self> {
        if !places.iter().any(|p| p.is_archimedean()) {
            return Err(Error::InvalidArgument("place set must contain inf".into()));
        }
        Ok(PlaceSet { primes: places.iter().filter_map(|p| p.prime()).collect() })
    }

    pub fn with_primes(primes: &[u64]) -> Result<Self> {
        let mut places = vec![Place::Archimedean];
        for &p in primes {
            places.push(Place::finite(p)?);
        }
        Self::from_places(&places)
    }

    pub fn primes(&self) -> impl Iterator<Item = u64> + '_ {
        self.primes.iter().copied()
    }

    pub fn contains(&self, v: Place) -> bool {
        match v {
            Place::Archimedean => true,
            Place::Finite(p) => self.primes.contains(&p.get()),
        }
    }

    /// `|S|`, counting the archimedean place.
    pub fn len(&self) -> usize {
        self.primes.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn places(&self) -> Vec<Place> {
        std::iter::once(Place::Archimedean)
            .chain(self.primes.iter().map(|&p| Place::finite(p).expect("validated")))
            .collect()
    }

    /// Removes every prime of `S` from `n`.
    pub fn strip(&self, n: &BigUint) -> BigUint {
        self.primes.iter().fold(n.clone(), |acc, &p| strip_prime(&acc, p).1)
    }
}

impl fmt::Display for PlaceSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.places().iter().map(|p| p.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

impl FromStr for PlaceSet {
    type Err = Error;

    /// Comma-separated places, e.g. `inf,3,5`.
    fn from_str(s: &str) -> Result<Self> {
        let places = s
            .split(',')
            .map(|t| t.trim())
            .filter(|t| !t.is_empty())
            .map(Place::from_str)
            .collect::<Result<Vec<_>>>()?;
        Self::from_places(&places)
    }
}

impl Serialize for PlaceSet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.places().serialize(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessKind {
    Prime,
    /// Passed Miller-Rabin but is too large to certify.
    ProbablePrime,
    /// Known composite with no factor found within the trial budget.
    Composite,
}

/// A prime (or unresolved cofactor) outside `S` dividing a cross product.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Witness {
    pub value: BigUint,
    pub kind: WitnessKind,
}

impl Witness {
    pub fn prime(p: u64) -> Self {
        Witness { value: BigUint::from(p), kind: WitnessKind::Prime }
    }

    pub fn as_u64(&self) -> Option<u64> {
        (self.kind == WitnessKind::Prime).then(|| self.value.to_u64()).flatten()
    }
}

impl fmt::Display for Witness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            WitnessKind::Prime => write!(f, "{}", self.value),
            WitnessKind::ProbablePrime => write!(f, "prp:{}", self.value),
            WitnessKind::Composite => write!(f, "composite:{}", self.value),
        }
    }
}

impl Serialize for Witness {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Residuals above this size are only trial-divided by the primes below
/// [`HUGE_TRIAL_LIMIT`].
const HUGE_RESIDUAL_BITS: u64 = 4096;
const HUGE_TRIAL_LIMIT: u64 = 1000;
const MR_ROUNDS: usize = 24;

/// Primes found in an integer, plus whatever could not be split further.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct PartialFactorization {
    pub primes: Vec<(u64, u32)>,
    pub rest: Vec<Witness>,
}

impl PartialFactorization {
    /// Distinct machine-word primes found.
    pub fn primes_u64(&self) -> Vec<u64> {
        let mut out: Vec<u64> = self.primes.iter().map(|&(p, _)| p).collect();
        out.extend(self.rest.iter().filter_map(|w| w.as_u64()));
        out.sort_unstable();
        out.dedup();
        out
    }

    pub fn witnesses(&self) -> Vec<Witness> {
        let mut out: Vec<Witness> = self.primes.iter().map(|&(p, _)| Witness::prime(p)).collect();
        out.extend(self.rest.iter().cloned());
        out.sort();
        out.dedup();
        out
    }

    pub fn is_complete(&self) -> bool {
        self.rest.iter().all(|w| w.kind == WitnessKind::Prime)
    }
}

/// Factors `n` as far as trial division below 10^6 (10^3 for huge inputs),
/// 64-bit rho, and a probable-prime test allow.
pub fn factor_partial(n: &BigUint) -> PartialFactorization {
    let mut out = PartialFactorization::default();
    if n.is_zero() {
        return out;
    }
    if let Some(small) = n.to_u64() {
        out.primes = factor_u64(small);
        return out;
    }
    let limit = if n.bits() > HUGE_RESIDUAL_BITS { HUGE_TRIAL_LIMIT } else { u64::MAX };
    let mut cur = n.clone();
    // Test a word-sized product of primes first so most primes cost one
    // big remainder shared with their neighbours.
    let primes = small_primes();
    let mut i = 0;
    while i < primes.len() && primes[i] < limit {
        let mut block = 1u64;
        let mut j = i;
        while j < primes.len() && primes[j] < limit {
            match block.checked_mul(primes[j]) {
                Some(b) => {
                    block = b;
                    j += 1;
                }
                None => break,
            }
        }
        let r = (&cur % block).to_u64().expect("remainder fits");
        for &p in &primes[i..j] {
            if r % p == 0 {
                let (e, rest) = strip_prime(&cur, p);
                out.primes.push((p, e as u32));
                cur = rest;
            }
        }
        i = j;
        if cur.is_one() {
            return out;
        }
        if let Some(small) = cur.to_u64() {
            out.primes.extend(factor_u64(small));
            return out;
        }
    }
    let trial_bound = primes.iter().take_while(|&&p| p < limit).last().copied().unwrap_or(2);
    let kind = if cur.bits() < 2 * 64 - 1 && cur < BigUint::from(trial_bound) * trial_bound {
        WitnessKind::Prime
    } else if is_probable_prime(&cur, MR_ROUNDS) {
        WitnessKind::ProbablePrime
    } else {
        WitnessKind::Composite
    };
    out.rest.push(Witness { value: cur, kind });
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct IntegralityVerdict {
    pub integral: bool,
    pub witnesses: Vec<Witness>,
}

/// `x` is S-integral relative to `y` when the cross product has no prime
/// factor outside `S`.
pub fn is_s_integral(x: &ProjPoint, y: &ProjPoint, s: &PlaceSet) -> Result<IntegralityVerdict> {
    if x == y {
        return Err(Error::CoincidentPoints);
    }
    Ok(verdict_for_cross(&x.cross(y), s))
}

fn verdict_for_cross(cross: &BigInt, s: &PlaceSet) -> IntegralityVerdict {
    let residual = s.strip(cross.magnitude());
    if residual.is_one() {
        IntegralityVerdict { integral: true, witnesses: Vec::new() }
    } else {
        IntegralityVerdict { integral: false, witnesses: factor_partial(&residual).witnesses() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanFlag {
    /// The orbit point equals the target exactly.
    EqualsTarget,
    /// The orbit point is infinity.
    AtInfinity,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScanEntry {
    pub n: usize,
    pub point: ProjPoint,
    pub height: HeightValue,
    pub integral: bool,
    pub witnesses: Vec<Witness>,
    pub flags: Vec<ScanFlag>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrbitScanReport {
    pub entries: Vec<ScanEntry>,
    pub truncated: bool,
    /// First orbit index whose coordinates exceeded the bit cap.
    pub truncated_at: Option<usize>,
}

impl OrbitScanReport {
    pub fn integral_indices(&self) -> Vec<usize> {
        self.entries.iter().filter(|e| e.integral).map(|e| e.n).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,point,height,integral,witnesses,flags\n");
        for e in &self.entries {
            let w: Vec<String> = e.witnesses.iter().map(|w| w.to_string()).collect();
            let f: Vec<&str> = e
                .flags
                .iter()
                .map(|f| match f {
                    ScanFlag::EqualsTarget => "equals_target",
                    ScanFlag::AtInfinity => "at_infinity",
                })
                .collect();
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                e.n,
                e.point,
                e.height.float,
                e.integral,
                w.join(";"),
                f.join(";")
            ));
        }
        out
    }
}

/// Verdicts for `phi^n(alpha)` relative to `beta`, `0 <= n <= n_max`; when
/// `alpha == beta` the scan starts at `n = 1`.
pub fn scan_orbit(
    phi: &RationalMap,
    alpha: &ProjPoint,
    beta: &ProjPoint,
    s: &PlaceSet,
    n_max: usize,
    bit_cap: u64,
    exec: Execution,
) -> OrbitScanReport {
    let (orbit, truncated_at) = phi.orbit(alpha, n_max, bit_cap);
    let start = usize::from(alpha == beta);
    let entries = par::map_range(exec, start.min(orbit.len())..orbit.len(), |n| {
        let point = &orbit[n];
        let mut flags = Vec::new();
        if point.is_infinity() {
            flags.push(ScanFlag::AtInfinity);
        }
        let verdict = if point == beta {
            flags.push(ScanFlag::EqualsTarget);
            IntegralityVerdict { integral: false, witnesses: Vec::new() }
        } else {
            verdict_for_cross(&point.cross(beta), s)
        };
        ScanEntry {
            n,
            point: point.clone(),
            height: weil_height(point),
            integral: verdict.integral,
            witnesses: verdict.witnesses,
            flags,
        }
    });
    OrbitScanReport { entries, truncated: truncated_at.is_some(), truncated_at }
}

/// True iff numerator and denominator are products of primes in `S`.
pub fn is_s_unit(x: &BigRational, s: &PlaceSet) -> Result<bool> {
    if x.is_zero() {
        return Err(Error::ZeroInput);
    }
    Ok(s.strip(x.numer().magnitude()).is_one() && s.strip(x.denom().magnitude()).is_one())
}

/// The S-part `sum_{v in S} log+ |x|_v` as one exact logarithm.
pub fn s_part(x: &BigRational, s: &PlaceSet) -> LogNumber {
    s.places().into_iter().fold(LogNumber::zero(), |acc, v| acc.add(&log_plus_abs(x, v)))
}

/// `sum_{v in S} log+ |x|_v >= eps * h(x)`, decided exactly.
pub fn is_quasi_integral(x: &BigRational, s: &PlaceSet, eps: &BigRational) -> Result<bool> {
    if x.is_zero() {
        return Err(Error::ZeroInput);
    }
    if eps.is_negative_or_above_one() {
        return Err(Error::InvalidArgument(format!("epsilon must lie in [0, 1], got {eps}")));
    }
    let h = weil_height(&ProjPoint::from_rational(x)).exact;
    let ord = compare_scaled(&BigRational::one(), &s_part(x, s), eps, &h)?;
    Ok(ord != Ordering::Less)
}

trait UnitInterval {
    fn is_negative_or_above_one(&self) -> bool;
}

impl UnitInterval for BigRational {
    fn is_negative_or_above_one(&self) -> bool {
        *self < BigRational::zero() || *self > BigRational::one()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SkipReason {
    EqualsTarget,
    AtInfinity,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct QuasiScanReport {
    pub gamma: Vec<usize>,
    pub skipped: Vec<(usize, SkipReason)>,
    pub truncated: bool,
    pub truncated_at: Option<usize>,
}

/// Indices `n <= n_max` with `(phi^n(alpha) - beta)^-1` quasi-(S, eps)-integral.
#[allow(clippy::too_many_arguments)]
pub fn scan_quasi(
    phi: &RationalMap,
    alpha: &ProjPoint,
    beta: &BigRational,
    s: &PlaceSet,
    eps: &BigRational,
    n_max: usize,
    bit_cap: u64,
    exec: Execution,
) -> Result<QuasiScanReport> {
    if eps.is_negative_or_above_one() {
        return Err(Error::InvalidArgument(format!("epsilon must lie in [0, 1], got {eps}")));
    }
    let (orbit, truncated_at) = phi.orbit(alpha, n_max, bit_cap);
    let target = ProjPoint::from_rational(beta);
    let verdicts = par::map(exec, &orbit, |pt| -> Result<std::result::Result<bool, SkipReason>> {
        if pt.is_infinity() {
            return Ok(Err(SkipReason::AtInfinity));
        }
        if *pt == target {
            return Ok(Err(SkipReason::EqualsTarget));
        }
        // phi^n(alpha) - beta = cross / (x1 b1)
        let inv = BigRational::new(pt.x1() * target.x1(), pt.cross(&target));
        Ok(Ok(is_quasi_integral(&inv, s, eps)?))
    });
    let mut gamma = Vec::new();
    let mut skipped = Vec::new();
    for (n, v) in verdicts.into_iter().enumerate() {
        match v? {
            Ok(true) => gamma.push(n),
            Ok(false) => {}
            Err(reason) => skipped.push((n, reason)),
        }
    }
    Ok(QuasiScanReport { gamma, skipped, truncated: truncated_at.is_some(), truncated_at })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AdversarialInstance {
    pub m: usize,
    /// Product of the numerators of `phi^i(0)`, `1 <= i <= m`, for `z^2 + 1`.
    #[serde(serialize_with = "ser_display")]
    pub a_m: BigInt,
    #[serde(serialize_with = "ser_display")]
    pub map: RationalMap,
    pub alpha: ProjPoint,
    pub beta: ProjPoint,
    pub places: PlaceSet,
}

fn ser_display<T: fmt::Display, S: Serializer>(v: &T, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(v)
}

/// Largest `m` accepted by [`adversarial_family`].
pub const ADVERSARIAL_MAX_M: usize = 10;

/// Conjugates `z^2 + 1` by `psi(z) = z / a_m + 1`. The orbit of `0` maps to
/// points `(z_i + a_m) / a_m` whose cross product with `1` is `z_i / gcd`,
/// which is `1` whenever `z_i` divides `a_m`, that is for `1 <= i <= m`.
/// Returns the map with `alpha = beta = 1 = psi(0)` and `S = {inf}`.
pub fn adversarial_family(m: usize) -> Result<AdversarialInstance> {
    if m == 0 || m > ADVERSARIAL_MAX_M {
        return Err(Error::InvalidArgument(format!("m must lie in 1..={ADVERSARIAL_MAX_M}, got {m}")));
    }
    let base = RationalMap::from_i64(&[1, 0, 1], &[1])?;
    let mut a = BigInt::one();
    let mut z = ProjPoint::zero();
    for _ in 0..m {
        z = base.apply(&z);
        a *= z.x0();
    }
    // psi^-1(w) = a w - a, so psi o phi o psi^-1 = affine conjugate by (a, -a).
    let ar = BigRational::from_integer(a.clone());
    let map = base.affine_conjugate(&ar, &-ar.clone())?;
    Ok(AdversarialInstance {
        m,
        a_m: a,
        map,
        alpha: ProjPoint::from_int(1),
        beta: ProjPoint::from_int(1),
        places: PlaceSet::archimedean(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(n: i64, d: i64) -> ProjPoint {
        ProjPoint::from_ratio(n, d).unwrap()
    }

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn set(s: &str) -> PlaceSet {
        s.parse().unwrap()
    }

    #[test]
    fn place_set_parsing() {
        assert_eq!(set("inf,3,5").len(), 3);
        assert!("3,5".parse::<PlaceSet>().is_err());
        assert!("inf,4".parse::<PlaceSet>().is_err());
        assert_eq!(set("inf, 5,3").to_string(), "inf,3,5");
    }

    #[test]
    fn integrality_examples() {
        let v = is_s_integral(&pt(4, 1), &pt(1, 1), &set("inf,3")).unwrap();
        assert!(v.integral && v.witnesses.is_empty());
        let v = is_s_integral(&pt(16, 1), &pt(1, 1), &set("inf,3")).unwrap();
        assert!(!v.integral);
        assert_eq!(v.witnesses, vec![Witness::prime(5)]);
        assert!(is_s_integral(&pt(2, 1), &pt(1, 1), &set("inf")).unwrap().integral);
        assert_eq!(is_s_integral(&pt(2, 1), &pt(2, 1), &set("inf")), Err(Error::CoincidentPoints));
    }

    #[test]
    fn scan_examples() {
        let z2 = RationalMap::power(2);
        let r = scan_orbit(&z2, &pt(2, 1), &pt(1, 1), &set("inf,3,5"), 10, 1 << 22, Execution::Parallel);
        assert_eq!(r.integral_indices(), vec![0, 1, 2]);
        assert!(r.entries.iter().all(|e| e.integral == e.witnesses.is_empty()));
        let w3: Vec<String> = r.entries[3].witnesses.iter().map(|w| w.to_string()).collect();
        assert_eq!(w3, vec!["17"]);
        let r = scan_orbit(&z2, &pt(2, 1), &pt(1, 1), &set("inf"), 10, 1 << 22, Execution::Sequential);
        assert_eq!(r.integral_indices(), vec![0]);
        let z2m1 = RationalMap::from_i64(&[-1, 0, 1], &[1]).unwrap();
        let r = scan_orbit(&z2m1, &pt(0, 1), &pt(5, 1), &set("inf"), 3, 1 << 22, Execution::Sequential);
        assert!(r.integral_indices().is_empty());
        for e in &r.entries {
            let ws: Vec<u64> = e.witnesses.iter().filter_map(|w| w.as_u64()).collect();
            assert!(ws == vec![5] || ws == vec![2, 3], "{ws:?}");
        }
    }

    #[test]
    fn scan_truncates_and_flags_target() {
        let z2 = RationalMap::power(2);
        let r = scan_orbit(&z2, &pt(2, 1), &pt(1, 1), &set("inf"), 10, 20, Execution::Sequential);
        assert!(r.truncated);
        assert_eq!(r.truncated_at, Some(5));
        assert_eq!(r.entries.len(), 5);
        let z2m1 = RationalMap::from_i64(&[-1, 0, 1], &[1]).unwrap();
        let r = scan_orbit(&z2m1, &pt(0, 1), &pt(-1, 1), &set("inf"), 2, 64, Execution::Sequential);
        assert_eq!(r.entries[1].flags, vec![ScanFlag::EqualsTarget]);
        assert!(!r.entries[1].integral && r.entries[1].witnesses.is_empty());
        // beta == alpha starts at n = 1
        let r = scan_orbit(&z2m1, &pt(0, 1), &pt(0, 1), &set("inf"), 2, 64, Execution::Sequential);
        assert_eq!(r.entries[0].n, 1);
    }

    #[test]
    fn unit_examples() {
        let s = set("inf,3,5");
        assert!(is_s_unit(&q(45, 1), &s).unwrap());
        assert!(!is_s_unit(&q(14, 1), &s).unwrap());
        assert!(is_s_unit(&q(9, 5), &s).unwrap());
        assert_eq!(is_s_unit(&q(0, 1), &s), Err(Error::ZeroInput));
    }

    #[test]
    fn quasi_examples() {
        assert!(is_quasi_integral(&q(8, 1), &set("inf"), &q(1, 1)).unwrap());
        assert!(!is_quasi_integral(&q(3, 8), &set("inf"), &q(1, 2)).unwrap());
        assert!(is_quasi_integral(&q(8, 3), &set("inf,3"), &q(1, 1)).unwrap());
        assert!(is_quasi_integral(&q(8, 1), &set("inf"), &q(3, 2)).is_err());
    }

    #[test]
    fn quasi_scan_examples() {
        let z2 = RationalMap::power(2);
        let r = scan_quasi(&z2, &pt(2, 1), &q(1, 1), &set("inf"), &q(0, 1), 5, 1 << 20, Execution::Parallel)
            .unwrap();
        assert_eq!(r.gamma, vec![0, 1, 2, 3, 4, 5]);
        let r = scan_quasi(&z2, &pt(2, 1), &q(1, 1), &set("inf,3,5"), &q(1, 1), 5, 1 << 20, Execution::Parallel)
            .unwrap();
        assert!([0, 1, 2].iter().all(|n| r.gamma.contains(n)));
        // 1/(2^(2^n) - 1) over {inf}: the S-part is 0 unless the cross is 1.
        let r = scan_quasi(&z2, &pt(2, 1), &q(1, 1), &set("inf"), &q(1, 2), 5, 1 << 20, Execution::Sequential)
            .unwrap();
        assert_eq!(r.gamma, vec![0]);
    }

    #[test]
    fn adversarial_examples() {
        let a1 = adversarial_family(1).unwrap();
        assert_eq!(a1.a_m, BigInt::from(1));
        let a4 = adversarial_family(4).unwrap();
        assert_eq!(a4.a_m, BigInt::from(260));
        for inst in [a1, a4] {
            let r = scan_orbit(&inst.map, &inst.alpha, &inst.beta, &inst.places, inst.m, 1 << 22, Execution::Sequential);
            let hits = r.integral_indices().iter().filter(|&&n| (1..=inst.m).contains(&n)).count();
            assert!(hits >= inst.m);
        }
        assert!(adversarial_family(0).is_err());
    }

    #[test]
    fn factor_partial_big() {
        let p = BigUint::from(999_983u64);
        let n = BigUint::from(17u32) * &p * &p * BigUint::from(u64::MAX - 58);
        let f = factor_partial(&n);
        let primes = f.primes_u64();
        assert!(primes.contains(&17) && primes.contains(&999_983));
        // 2^127 - 1 survives trial division as a probable prime.
        let m127 = (BigUint::one() << 127u32) - 1u32;
        let f = factor_partial(&(m127.clone() * 3u32));
        assert_eq!(f.primes, vec![(3, 1)]);
        assert_eq!(f.rest, vec![Witness { value: m127, kind: WitnessKind::ProbablePrime }]);
    }
}
