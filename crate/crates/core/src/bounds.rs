//! Evaluators for the explicit bounds and constants, the parameter
//! bookkeeping for the Thue-Siegel type criterion, and numeric checks of
//! the distribution and linearization estimates.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::arith::{ln_bigint_abs, ratio_to_f64};
use crate::error::{Error, Result};
use crate::heights::rational_height;
use crate::places::{valuation, Place};
use crate::ratmap::RationalMap;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundReport {
    pub name: String,
    pub inputs: BTreeMap<String, f64>,
    pub value: f64,
    pub notes: String,
}

impl BoundReport {
    fn new(name: &str, inputs: &[(&str, f64)], value: f64, notes: &str) -> Self {
        BoundReport {
            name: name.to_string(),
            inputs: inputs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            value,
            notes: notes.to_string(),
        }
    }
}

const INEFFECTIVE: &str = "constant supplied by the caller; no effective value is known";

fn check_s(s: u64) -> Result<f64> {
    if s == 0 {
        return Err(Error::InvalidArgument("|S| must be at least 1".into()));
    }
    Ok(s as f64)
}

/// `max(0, log x / log d)`.
pub fn logplus_d(x: f64, d: u64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::InvalidArgument(format!("log_d^+ needs a positive argument, got {x}")));
    }
    if d < 2 {
        return Err(Error::DegreeTooSmall(d as usize));
    }
    Ok((x.ln() / (d as f64).ln()).max(0.0))
}

fn height_ratio_term(d: u64, h_phi: f64, h_hat: f64) -> Result<f64> {
    if !(h_hat > 0.0) {
        return Err(Error::InvalidArgument(format!("canonical height must be positive, got {h_hat}")));
    }
    logplus_d((h_phi + 1.0) / h_hat, d)
}

/// `c1 |S| (log|S| + 1)^6`.
pub fn bound_theorem1(s: u64, c1: f64) -> Result<BoundReport> {
    let sf = check_s(s)?;
    let value = c1 * sf * (sf.ln() + 1.0).powi(6);
    Ok(BoundReport::new("theorem1", &[("s", sf), ("c1", c1)], value, INEFFECTIVE))
}

/// `c4 |S| (log|S| + 1)^6 + log_d^+((h(phi) + 1) / hhat(alpha))`.
pub fn bound_theorem3(s: u64, d: u64, h_phi: f64, h_hat: f64, c4: f64) -> Result<BoundReport> {
    let sf = check_s(s)?;
    let value = c4 * sf * (sf.ln() + 1.0).powi(6) + height_ratio_term(d, h_phi, h_hat)?;
    Ok(BoundReport::new(
        "theorem3",
        &[("s", sf), ("d", d as f64), ("h_phi", h_phi), ("h_hat", h_hat), ("c4", c4)],
        value,
        INEFFECTIVE,
    ))
}

/// `c2 |S| + c3 (log|S| + 1)`; `c2 = 3` for power maps, `5` for Lattes maps.
pub fn bound_power_lattes(s: u64, c2: f64, c3: f64) -> Result<BoundReport> {
    let sf = check_s(s)?;
    let value = c2 * sf + c3 * (sf.ln() + 1.0);
    Ok(BoundReport::new(
        "theorem2",
        &[("s", sf), ("c2", c2), ("c3", c3)],
        value,
        "c2 = 3 for power maps and 5 for Lattes maps; c3 supplied by the caller",
    ))
}

/// `3|S| + 12 log2|S| + 50`.
pub fn bound_z2_explicit(s: u64) -> Result<BoundReport> {
    let sf = check_s(s)?;
    let value = 3.0 * sf + 12.0 * sf.log2() + 50.0;
    Ok(BoundReport::new("z2", &[("s", sf)], value, "fully explicit for z^2, alpha = 2, over Q"))
}

/// `|S| + c7 log(|S| + 1) + log_d^+((h(phi) + 1) / hhat(alpha))`.
pub fn bound_critical(s: u64, d: u64, h_phi: f64, h_hat: f64, c7: f64) -> Result<BoundReport> {
    let sf = check_s(s)?;
    let value = sf + c7 * (sf + 1.0).ln() + height_ratio_term(d, h_phi, h_hat)?;
    Ok(BoundReport::new(
        "theorem5",
        &[("s", sf), ("d", d as f64), ("h_phi", h_phi), ("h_hat", h_hat), ("c7", c7)],
        value,
        INEFFECTIVE,
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RothConstants {
    pub c1: f64,
    /// `log c2 = log 28 + log Gamma(4608 log r + 2)`.
    pub log_c2: f64,
}

/// `c1 = (2304 log r)^3` and `c2 = 28 (4608 log r + 1)!`, the latter in log
/// form through the gamma function.
pub fn roth_constants(r: u64) -> Result<RothConstants> {
    if r < 2 {
        return Err(Error::InvalidArgument(format!("r must be at least 2, got {r}")));
    }
    let lr = (r as f64).ln();
    Ok(RothConstants { c1: (2304.0 * lr).powi(3), log_c2: 28f64.ln() + ln_gamma(4608.0 * lr + 2.0) })
}

/// The unique `N` with `d^(N-1) <= 56 * 2^(2d-2) |S| < d^N`.
pub fn preimage_level_n(d: u64, s: u64) -> Result<u32> {
    if d < 2 {
        return Err(Error::DegreeTooSmall(d as usize));
    }
    check_s(s)?;
    let target = BigUint::from(56u32) * (BigUint::one() << (2 * d - 2)) * BigUint::from(s);
    let db = BigUint::from(d);
    let mut pow = BigUint::one();
    let mut n = 0u32;
    while pow <= target {
        pow *= &db;
        n += 1;
    }
    Ok(n)
}

/// Volume of `{x in [0,1]^m : sum x_i <= t}` by inclusion-exclusion.
pub fn simplex_volume(t: f64, m: u32) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    if t >= m as f64 {
        return 1.0;
    }
    let mut total = 0.0;
    let mut binom = 1.0;
    let mut fact = 1.0;
    for i in 1..=m {
        fact *= i as f64;
    }
    let mut k = 0u32;
    while (k as f64) < t && k <= m {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        total += sign * binom * (t - k as f64).powi(m as i32);
        binom = binom * (m - k) as f64 / (k + 1) as f64;
        k += 1;
    }
    (total / fact).clamp(0.0, 1.0)
}

/// The `t` with `V(t) = 1/(2r)`, by bisection.
pub fn solve_volume_threshold(m: u32, r: u64) -> Result<f64> {
    if m == 0 || r == 0 {
        return Err(Error::InvalidArgument("m and r must be positive".into()));
    }
    let target = 1.0 / (2.0 * r as f64);
    let (mut lo, mut hi) = (0.0f64, m as f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if simplex_volume(mid, m) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Diophantine5Check {
    /// Per-index verdicts of the proximity condition.
    pub proximity: Vec<bool>,
    pub condition1: bool,
    pub condition2: bool,
    pub condition3: bool,
    /// `(4 m C r^(1/m))^(2^(m-1))`.
    pub growth_factor: f64,
    /// All three hold: the configuration the criterion rules out.
    pub all: bool,
}

/// Evaluates the three conditions of the Thue-Siegel type criterion for
/// `alpha_1..alpha_m` with local proximities `N_v log|alpha_h - beta_h|_v^-1`
/// supplied by the caller.
#[allow(clippy::too_many_arguments)]
pub fn diophantine5_check(
    alpha: &[BigRational],
    beta_heights: &[f64],
    _v: Place,
    r: u64,
    m: usize,
    c: f64,
    c_prime: f64,
    local_log_gaps: &[f64],
) -> Result<Diophantine5Check> {
    if alpha.len() != m || beta_heights.len() != m || local_log_gaps.len() != m {
        return Err(Error::LengthMismatch(format!(
            "m = {m}, alpha {}, beta heights {}, proximities {}",
            alpha.len(),
            beta_heights.len(),
            local_log_gaps.len()
        )));
    }
    if m == 0 {
        return Err(Error::EmptyRange);
    }
    let h: Vec<f64> = alpha.iter().map(|a| rational_height(a).float).collect();
    let rm = (r as f64).powf(1.0 / m as f64);
    let proximity: Vec<bool> = h
        .iter()
        .zip(local_log_gaps)
        .map(|(&ha, &gap)| gap >= 4.0 * c * rm * ha)
        .collect();
    let growth_factor = (4.0 * m as f64 * c * rm).powf(2f64.powi(m as i32 - 1));
    let condition2 = h.windows(2).all(|w| w[0] > 0.0 && w[1] / w[0] >= 2.0 * growth_factor);
    let beta_sum: f64 = beta_heights.iter().map(|b| b + 1.0).sum::<f64>() + 2.0 * m as f64;
    let beta_max = beta_heights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let condition3 = h[0] >= c_prime * growth_factor * beta_sum
        && h[0] >= 2.0 * c_prime * (beta_max + 2f64.ln()) + 4f64.ln();
    let condition1 = proximity.iter().all(|&b| b);
    Ok(Diophantine5Check {
        proximity,
        condition1,
        condition2,
        condition3,
        growth_factor,
        all: condition1 && condition2 && condition3,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExplicitZ2Params {
    pub n: u32,
    /// `r <= 2^(2N - 1)`.
    pub r_bound_log2: u32,
    pub r_bound: f64,
    pub m_threshold: f64,
    pub gap_threshold: f64,
    pub final_threshold: f64,
}

pub fn explicit_z2_params(s: u64) -> Result<ExplicitZ2Params> {
    let sf = check_s(s)?;
    let l = sf.log2();
    // ceil(3 log2 s) computed exactly: the least k with 2^k >= s^3.
    let s3 = BigUint::from(s).pow(3);
    let mut k = 0u32;
    while (BigUint::one() << k) < s3 {
        k += 1;
    }
    let n = k + 9;
    Ok(ExplicitZ2Params {
        n,
        r_bound_log2: 2 * n - 1,
        r_bound: 2f64.powi(2 * n as i32 - 1),
        m_threshold: 9.0 * l + 40.0,
        gap_threshold: 8.0 * l + 41.0,
        final_threshold: 11.0 * l + 45.0,
    })
}

/// Slack in the distribution estimate for `z^2` at the archimedean place:
/// `max_i log|x - y_i|^-1 - (log|x^(2^n) - y|^-1 - h(y) - (2^n + n) log 2)`
/// over the `2^n` roots `y_i` of `z^(2^n) = y`. The right side is exact;
/// the roots are evaluated in double precision.
pub fn distribution_gap_check(x: &BigRational, y: &BigRational, n: u32) -> Result<f64> {
    if n > 8 {
        return Err(Error::InvalidArgument(format!("n must be at most 8, got {n}")));
    }
    let big_n = 1u64 << n;
    let diff = num_traits::pow(x.clone(), big_n as usize) - y;
    if diff.is_zero() {
        return Err(Error::CoincidentPoints);
    }
    let log_inv_diff = ln_bigint_abs(diff.denom()) - ln_bigint_abs(diff.numer());
    let rhs = log_inv_diff - rational_height(y).float - (big_n as f64 + n as f64) * std::f64::consts::LN_2;

    let xf = ratio_to_f64(x.numer(), x.denom());
    let yabs = ratio_to_f64(&y.numer().abs(), y.denom());
    let radius = if y.is_zero() { 0.0 } else { (yabs.ln() / big_n as f64).exp() };
    let offset = if y.is_negative() { 0.5 } else { 0.0 };
    let mut best = f64::NEG_INFINITY;
    for k in 0..big_n {
        let theta = std::f64::consts::TAU * (k as f64 + offset) / big_n as f64;
        let root = Complex64::from_polar(radius, theta);
        // Along the real axis take the difference directly.
        let dist = if theta == 0.0 {
            (xf - radius).abs()
        } else {
            (Complex64::new(xf, 0.0) - root).norm()
        };
        if dist == 0.0 {
            return Err(Error::CoincidentPoints);
        }
        best = best.max(-dist.ln());
    }
    Ok(best - rhs)
}

/// Largest deviation `|log|phi(z) - phi(beta)|_v - k log|z - beta|_v|` over
/// `samples` points with `|z - beta|_v = e^radius_log`, where `k` is the
/// order of vanishing at `beta`. At a finite place the radius is rounded to
/// the nearest power of `p` and everything is exact.
pub fn euclid_linearization_check(
    phi: &RationalMap,
    beta: &BigRational,
    v: Place,
    samples: usize,
    radius_log: f64,
) -> Result<f64> {
    let k = phi.order_of_vanishing(beta)?;
    let fb = phi.eval_rational(beta).ok_or_else(|| Error::Pole(beta.to_string()))?;
    if samples == 0 {
        return Err(Error::EmptyRange);
    }
    match v {
        Place::Finite(p) => {
            let p = p.get();
            let t = (-radius_log / (p as f64).ln()).round() as i64;
            let pt = crate::places::p_power(p, t);
            let mut worst = 0.0f64;
            let mut u = 1u64;
            let mut taken = 0;
            while taken < samples {
                if u % p != 0 {
                    let z = beta + &pt * BigRational::from_integer(BigInt::from(u));
                    if let Some(fz) = phi.eval_rational(&z) {
                        if fz != fb {
                            let dev = -valuation(&(fz - &fb), p)? + k as i64 * t;
                            worst = worst.max((dev as f64 * (p as f64).ln()).abs());
                        }
                    }
                    taken += 1;
                }
                u += 1;
            }
            Ok(worst)
        }
        Place::Archimedean => {
            let (num, den) = (phi.num(), phi.den());
            let conv = |c: &[BigInt]| -> Vec<f64> { c.iter().map(|a| a.to_f64().unwrap_or(f64::NAN)).collect() };
            let (nf, df) = (conv(num), conv(den));
            let eval = |c: &[f64], z: Complex64| c.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &a| acc * z + a);
            let bf = ratio_to_f64(beta.numer(), beta.denom());
            let fbf = ratio_to_f64(fb.numer(), fb.denom());
            let r = radius_log.exp();
            let mut worst = 0.0f64;
            for j in 0..samples {
                let theta = std::f64::consts::TAU * j as f64 / samples as f64;
                let dz = Complex64::from_polar(r, theta);
                let z = Complex64::new(bf, 0.0) + dz;
                let fz = eval(&nf, z) / eval(&df, z);
                let dev = (fz - fbf).norm().ln() - k as f64 * radius_log;
                worst = worst.max(dev.abs());
            }
            Ok(worst)
        }
    }
}
