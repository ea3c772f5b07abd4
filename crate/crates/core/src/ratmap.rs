//! Rational maps of P^1 over Q.
//!
//! A map `f(z)/g(z)` of degree `d` is stored through its homogeneous lift
//! `F0(x0, x1) = sum a_i x0^i x1^(d-i)`, `F1(x0, x1) = sum b_i x0^i x1^(d-i)`
//! with coprime integer coefficients. Coefficient vectors are ascending in
//! `z`, which is also ascending in `x0` for the lifted binary forms.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::arith::{ln_bigint_abs, strip_prime};
use crate::error::{Error, Result};
use crate::places::{chordal, p_power, parse_rational, Distance, Place, ProjPoint};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RationalMap {
    degree: usize,
    num: Vec<BigInt>,
    den: Vec<BigInt>,
    resultant: BigInt,
}

/// JSON form of a map: decimal-string rationals, ascending powers of `z`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSpec {
    pub num: Vec<String>,
    pub den: Vec<String>,
}

impl MapSpec {
    pub fn build(&self) -> Result<RationalMap> {
        let parse = |v: &[String]| v.iter().map(|s| parse_rational(s)).collect::<Result<Vec<_>>>();
        build_map(&parse(&self.num)?, &parse(&self.den)?)
    }
}

/// Builds a map from rational coefficient vectors (ascending in `z`).
///
/// Common factors of numerator and denominator are rejected, not cancelled.
pub fn build_map(num: &[BigRational], den: &[BigRational]) -> Result<RationalMap> {
    let lcm = num
        .iter()
        .chain(den)
        .fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
    let scale = |v: &[BigRational]| -> Vec<BigInt> {
        v.iter()
            .map(|c| (c * BigRational::from_integer(lcm.clone())).to_integer())
            .collect()
    };
    RationalMap::from_int_coeffs(scale(num), scale(den))
}

fn poly_degree(p: &[BigInt]) -> Option<usize> {
    p.iter().rposition(|c| !c.is_zero())
}

impl RationalMap {
    pub fn from_int_coeffs(mut num: Vec<BigInt>, mut den: Vec<BigInt>) -> Result<Self> {
        let dg = poly_degree(&den).ok_or(Error::ZeroDenominator)?;
        let dn = poly_degree(&num).unwrap_or(0);
        let degree = dn.max(dg);
        if poly_degree(&num).is_none() || degree < 2 {
            return Err(Error::DegreeTooSmall(degree));
        }
        num.resize(degree + 1, BigInt::zero());
        den.resize(degree + 1, BigInt::zero());
        num.truncate(degree + 1);
        den.truncate(degree + 1);
        let content = num.iter().chain(&den).fold(BigInt::zero(), |g, c| g.gcd(c));
        let flip = den[dg].is_negative();
        for c in num.iter_mut().chain(den.iter_mut()) {
            *c /= &content;
            if flip {
                *c = -c.clone();
            }
        }
        let resultant = determinant(&sylvester(&num, &den));
        if resultant.is_zero() {
            return Err(Error::ZeroResultant);
        }
        Ok(RationalMap { degree, num, den, resultant })
    }

    pub fn from_i64(num: &[i64], den: &[i64]) -> Result<Self> {
        Self::from_int_coeffs(
            num.iter().map(|&c| BigInt::from(c)).collect(),
            den.iter().map(|&c| BigInt::from(c)).collect(),
        )
    }

    /// `z^d`.
    pub fn power(d: usize) -> Self {
        let mut num = vec![0i64; d + 1];
        num[d] = 1;
        Self::from_i64(&num, &[1]).expect("power map is valid")
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn num(&self) -> &[BigInt] {
        &self.num
    }

    pub fn den(&self) -> &[BigInt] {
        &self.den
    }

    /// Homogeneous resultant of the lift; nonzero by construction.
    pub fn resultant(&self) -> &BigInt {
        &self.resultant
    }

    pub fn spec(&self) -> MapSpec {
        MapSpec {
            num: self.num.iter().map(|c| c.to_string()).collect(),
            den: self.den.iter().map(|c| c.to_string()).collect(),
        }
    }

    /// True when `g` is constant, so the map is a polynomial.
    pub fn is_polynomial(&self) -> bool {
        poly_degree(&self.den) == Some(0)
    }

    pub fn coefficient_bits(&self) -> u64 {
        self.num.iter().chain(&self.den).map(|c| c.bits()).max().unwrap_or(0)
    }

    /// The pair `(F0(x), F1(x))` before normalization.
    pub fn eval_homogeneous(&self, x0: &BigInt, x1: &BigInt) -> (BigInt, BigInt) {
        let d = self.degree;
        let mut p0 = Vec::with_capacity(d + 1);
        let mut p1 = Vec::with_capacity(d + 1);
        p0.push(BigInt::one());
        p1.push(BigInt::one());
        for i in 1..=d {
            p0.push(&p0[i - 1] * x0);
            p1.push(&p1[i - 1] * x1);
        }
        let mut f0 = BigInt::zero();
        let mut f1 = BigInt::zero();
        for i in 0..=d {
            if self.num[i].is_zero() && self.den[i].is_zero() {
                continue;
            }
            let mono = &p0[i] * &p1[d - i];
            if !self.num[i].is_zero() {
                f0 += &self.num[i] * &mono;
            }
            if !self.den[i].is_zero() {
                f1 += &self.den[i] * &mono;
            }
        }
        (f0, f1)
    }

    /// `phi(x)`, normalized. Poles map to `[1:0]`.
    pub fn apply(&self, x: &ProjPoint) -> ProjPoint {
        let (f0, f1) = self.eval_homogeneous(x.x0(), x.x1());
        // gcd(F0(x), F1(x)) divides the resultant for coprime x.
        ProjPoint::normalized_with_gcd_bound(f0, f1, &self.resultant)
    }

    /// `phi^n(x)`, failing once a coordinate exceeds `bit_cap` bits.
    pub fn iterate(&self, x: &ProjPoint, n: usize, bit_cap: u64) -> Result<ProjPoint> {
        let mut cur = x.clone();
        for k in 1..=n {
            cur = self.apply(&cur);
            if cur.bits() > bit_cap {
                return Err(Error::BitCapExceeded { index: k, cap: bit_cap });
            }
        }
        Ok(cur)
    }

    /// The orbit `x, phi(x), ..., phi^n(x)`, truncated before the first point
    /// over `bit_cap` bits. The second component is that offending index.
    pub fn orbit(&self, x: &ProjPoint, n: usize, bit_cap: u64) -> (Vec<ProjPoint>, Option<usize>) {
        let mut out = Vec::with_capacity(n + 1);
        out.push(x.clone());
        for k in 1..=n {
            let next = self.apply(&out[k - 1]);
            if next.bits() > bit_cap {
                return (out, Some(k));
            }
            out.push(next);
        }
        (out, None)
    }

    /// Value at a rational; `None` at a pole.
    pub fn eval_rational(&self, z: &BigRational) -> Option<BigRational> {
        let img = self.apply(&ProjPoint::from_rational(z));
        img.to_rational()
    }

    /// Multiplicity of `z = beta` as a root of the numerator of
    /// `phi(z) - phi(beta)`.
    pub fn order_of_vanishing(&self, beta: &BigRational) -> Result<u32> {
        let (g0, g1) = self.eval_homogeneous(beta.numer(), beta.denom());
        if g1.is_zero() {
            return Err(Error::Pole(beta.to_string()));
        }
        // f(z) * F1(beta) - g(z) * F0(beta): same roots as phi(z) - phi(beta).
        let mut poly: Vec<BigRational> = self
            .num
            .iter()
            .zip(&self.den)
            .map(|(a, b)| BigRational::from_integer(a * &g1 - b * &g0))
            .collect();
        let mut k = 0;
        loop {
            while poly.last().is_some_and(|c| c.is_zero()) {
                poly.pop();
            }
            if poly.is_empty() {
                unreachable!("phi(z) - phi(beta) vanishes identically only for constant maps");
            }
            let (quot, rem) = synthetic_division(&poly, beta);
            if !rem.is_zero() {
                return Ok(k);
            }
            k += 1;
            poly = quot;
        }
    }

    /// Exact Lipschitz constant `1/|Res|_p` at a finite place.
    pub fn lipschitz_exact(&self, p: u64) -> BigRational {
        let e = strip_prime(self.resultant.magnitude(), p).0 as i64;
        p_power(p, e)
    }

    /// Lipschitz constant for the chordal metric at `v`. At infinity this is
    /// a sampled estimate of the supremum of the chordal derivative times
    /// [`ARCH_LIPSCHITZ_SAFETY`].
    pub fn lipschitz_constant(&self, v: Place) -> f64 {
        match v {
            Place::Finite(p) => self.lipschitz_exact(p.get()).to_f64().unwrap_or(f64::INFINITY),
            Place::Archimedean => ARCH_LIPSCHITZ_SAFETY * self.sup_chordal_derivative(),
        }
    }

    fn float_coeffs(&self) -> (Vec<f64>, Vec<f64>) {
        // Scale by the largest coefficient; the chordal derivative is
        // invariant under a common scaling of f and g.
        let top = self
            .num
            .iter()
            .chain(&self.den)
            .filter(|c| !c.is_zero())
            .map(ln_bigint_abs)
            .fold(f64::NEG_INFINITY, f64::max);
        let conv = |c: &BigInt| -> f64 {
            if c.is_zero() {
                0.0
            } else {
                c.signum().to_f64().unwrap() * (ln_bigint_abs(c) - top).exp()
            }
        };
        (self.num.iter().map(conv).collect(), self.den.iter().map(conv).collect())
    }

    /// Chordal derivative `|f'g - fg'|(1+|z|^2)/(|f|^2+|g|^2)` at complex `z`.
    pub fn chordal_derivative(&self, z: Complex64) -> f64 {
        let (f, g) = self.float_coeffs();
        chordal_derivative_at(&f, &g, z)
    }

    /// Sampled maximum of the chordal derivative over the Riemann sphere.
    pub fn sup_chordal_derivative(&self) -> f64 {
        let (f, g) = self.float_coeffs();
        let fr: Vec<f64> = f.iter().rev().copied().collect();
        let gr: Vec<f64> = g.iter().rev().copied().collect();
        let mut best = 0.0f64;
        // The unit disc in both charts covers the sphere; z -> 1/z is a
        // chordal isometry, and phi(1/w) = rev f(w) / rev g(w).
        for (a, b) in [(&f, &g), (&fr, &gr)] {
            let eval = |r: f64, t: f64| chordal_derivative_at(a, b, Complex64::from_polar(r, t));
            let mut seeds: Vec<(f64, f64, f64)> = Vec::new();
            const RADII: usize = 96;
            const ANGLES: usize = 256;
            for i in 0..=RADII {
                let r = i as f64 / RADII as f64;
                for j in 0..ANGLES {
                    let t = std::f64::consts::TAU * j as f64 / ANGLES as f64;
                    seeds.push((eval(r, t), r, t));
                }
            }
            seeds.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap_or(Ordering::Equal));
            for &(val, r0, t0) in seeds.iter().take(12) {
                best = best.max(val);
                // Pattern search with shrinking steps.
                let (mut r, mut t, mut cur) = (r0, t0, val);
                let mut step_r = 1.0 / RADII as f64;
                let mut step_t = std::f64::consts::TAU / ANGLES as f64;
                for _ in 0..60 {
                    let mut improved = false;
                    for (dr, dt) in [(step_r, 0.0), (-step_r, 0.0), (0.0, step_t), (0.0, -step_t)] {
                        let nr = (r + dr).clamp(0.0, 1.0);
                        let nt = t + dt;
                        let v = eval(nr, nt);
                        if v > cur {
                            cur = v;
                            r = nr;
                            t = nt;
                            improved = true;
                        }
                    }
                    if !improved {
                        step_r *= 0.5;
                        step_t *= 0.5;
                    }
                }
                best = best.max(cur);
            }
        }
        best
    }

    /// Conjugate by the Mobius transformation with integer matrix
    /// `[[p, q], [r, s]]`: returns `T^-1 o phi o T`.
    pub fn conjugate_by_matrix(&self, m: [[BigInt; 2]; 2]) -> Result<RationalMap> {
        let [[p, q], [r, s]] = m;
        if (&p * &s - &q * &r).is_zero() {
            return Err(Error::InvalidArgument("singular conjugating matrix".into()));
        }
        let d = self.degree;
        let l0 = vec![q.clone(), p.clone()];
        let l1 = vec![s.clone(), r.clone()];
        let pow0 = form_powers(&l0, d);
        let pow1 = form_powers(&l1, d);
        let mut g0 = vec![BigInt::zero(); d + 1];
        let mut g1 = vec![BigInt::zero(); d + 1];
        for i in 0..=d {
            let mono = form_mul(&pow0[i], &pow1[d - i]);
            for (k, c) in mono.iter().enumerate() {
                g0[k] += &self.num[i] * c;
                g1[k] += &self.den[i] * c;
            }
        }
        // Apply adj(T) = [[s, -q], [-r, p]] to the output.
        let new_num: Vec<BigInt> = g0.iter().zip(&g1).map(|(a, b)| &s * a - &q * b).collect();
        let new_den: Vec<BigInt> = g0.iter().zip(&g1).map(|(a, b)| -(&r * a) + &p * b).collect();
        let out = RationalMap::from_int_coeffs(new_num, new_den)?;
        assert_eq!(out.degree, d, "conjugation preserves degree");
        Ok(out)
    }

    /// `psi o phi o psi^-1` for `psi(z) = 1/(z - M)`: the map in the
    /// coordinate `w = 1/(z - M)`.
    pub fn mobius_conjugate(&self, m: &BigRational) -> Result<RationalMap> {
        // psi^-1(w) = (M w + 1)/w, scaled to integers.
        let (mn, md) = (m.numer().clone(), m.denom().clone());
        self.conjugate_by_matrix([[mn, md.clone()], [md, BigInt::zero()]])
    }

    /// `psi^-1 o phi o psi` for `psi(z) = a z + b`.
    pub fn affine_conjugate(&self, a: &BigRational, b: &BigRational) -> Result<RationalMap> {
        if a.is_zero() {
            return Err(Error::InvalidArgument("affine scale must be nonzero".into()));
        }
        let l = a.denom().lcm(b.denom());
        let lr = BigRational::from_integer(l.clone());
        let an = (a * &lr).to_integer();
        let bn = (b * &lr).to_integer();
        self.conjugate_by_matrix([[an, bn], [BigInt::zero(), l]])
    }

    /// Exact Lipschitz check at a finite place:
    /// `rho_p(phi x, phi y) <= C rho_p(x, y)` with `C = 1/|Res|_p`.
    pub fn lipschitz_holds_finite(&self, x: &ProjPoint, y: &ProjPoint, p: u64) -> bool {
        let c = self.lipschitz_exact(p);
        let lhs = chordal(&self.apply(x), &self.apply(y), Place::finite(p).expect("prime"));
        let rhs = chordal(x, y, Place::finite(p).expect("prime"));
        match (lhs, rhs) {
            (Distance::Exact(a), Distance::Exact(b)) => a <= c * b,
            _ => unreachable!("finite places give exact distances"),
        }
    }
}

impl fmt::Display for RationalMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |v: &[BigInt]| -> String {
            let mut parts = Vec::new();
            for (i, c) in v.iter().enumerate().rev() {
                if c.is_zero() {
                    continue;
                }
                parts.push(match i {
                    0 => format!("{c}"),
                    1 => format!("{c}*z"),
                    _ => format!("{c}*z^{i}"),
                });
            }
            if parts.is_empty() {
                "0".into()
            } else {
                parts.join(" + ")
            }
        };
        write!(f, "({}) / ({})", show(&self.num), show(&self.den))
    }
}

/// Safety factor applied to the sampled archimedean Lipschitz estimate.
pub const ARCH_LIPSCHITZ_SAFETY: f64 = 1.05;

fn horner_with_derivative(c: &[f64], z: Complex64) -> (Complex64, Complex64) {
    let mut val = Complex64::new(0.0, 0.0);
    let mut der = Complex64::new(0.0, 0.0);
    for &a in c.iter().rev() {
        der = der * z + val;
        val = val * z + a;
    }
    (val, der)
}

fn chordal_derivative_at(f: &[f64], g: &[f64], z: Complex64) -> f64 {
    let (fv, fd) = horner_with_derivative(f, z);
    let (gv, gd) = horner_with_derivative(g, z);
    let den = fv.norm_sqr() + gv.norm_sqr();
    if den == 0.0 {
        return 0.0;
    }
    (fd * gv - fv * gd).norm() * (1.0 + z.norm_sqr()) / den
}

fn synthetic_division(poly: &[BigRational], root: &BigRational) -> (Vec<BigRational>, BigRational) {
    let n = poly.len();
    if n == 0 {
        return (Vec::new(), BigRational::zero());
    }
    let mut quot = vec![BigRational::zero(); n - 1];
    let mut acc = BigRational::zero();
    for i in (0..n).rev() {
        acc = &acc * root + &poly[i];
        if i > 0 {
            quot[i - 1] = acc.clone();
        }
    }
    (quot, acc)
}

fn form_mul(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    let mut out = vec![BigInt::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn form_powers(l: &[BigInt], d: usize) -> Vec<Vec<BigInt>> {
    let mut out = vec![vec![BigInt::one()]];
    for k in 1..=d {
        let next = form_mul(&out[k - 1], l);
        out.push(next);
    }
    out
}

/// The `2d x 2d` matrix of `(g0, g1) -> g0 F0 + g1 F1` on pairs of binary
/// forms of degree `d-1`; its determinant is the homogeneous resultant.
pub fn sylvester(num: &[BigInt], den: &[BigInt]) -> Vec<Vec<BigInt>> {
    let d = num.len() - 1;
    let n = 2 * d;
    let mut m = vec![vec![BigInt::zero(); n]; n];
    for i in 0..d {
        for k in 0..=d {
            m[i + k][i] = num[k].clone();
            m[i + k][d + i] = den[k].clone();
        }
    }
    m
}

/// Fraction-free (Bareiss) determinant of a square integer matrix.
pub fn determinant(matrix: &[Vec<BigInt>]) -> BigInt {
    let n = matrix.len();
    if n == 0 {
        return BigInt::one();
    }
    let mut a: Vec<Vec<BigInt>> = matrix.to_vec();
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&i| !a[i][k].is_zero()) {
                Some(i) => {
                    a.swap(k, i);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let t = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                a[i][j] = t / &prev;
            }
        }
        prev = a[k][k].clone();
    }
    sign * a[n - 1][n - 1].clone()
}

/// Solves `A x = b` exactly over Q; `None` if `A` is singular.
pub fn solve_rational(a: &[Vec<BigInt>], b: &[BigInt]) -> Option<Vec<BigRational>> {
    let n = a.len();
    let mut m: Vec<Vec<BigRational>> = a
        .iter()
        .zip(b)
        .map(|(row, rhs)| {
            row.iter()
                .chain(std::iter::once(rhs))
                .map(|c| BigRational::from_integer(c.clone()))
                .collect()
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, piv);
        let inv = m[col][col].recip();
        for j in col..=n {
            m[col][j] = &m[col][j] * &inv;
        }
        for r in 0..n {
            if r != col && !m[r][col].is_zero() {
                let factor = m[r][col].clone();
                for j in col..=n {
                    let t = &factor * &m[col][j];
                    m[r][j] -= t;
                }
            }
        }
    }
    Some(m.into_iter().map(|row| row[n].clone()).collect())
}

impl RationalMap {
    /// Cofactors `(g_i0, g_i1)`, binary forms of degree `d-1`, with
    /// `g_i0 F0 + g_i1 F1 = x_i^(2d-1)` for `i = 0, 1`.
    pub fn bezout_cofactors(&self) -> [(Vec<BigRational>, Vec<BigRational>); 2] {
        let d = self.degree;
        let a = sylvester(&self.num, &self.den);
        let solve = |target: usize| {
            let mut rhs = vec![BigInt::zero(); 2 * d];
            rhs[target] = BigInt::one();
            let sol = solve_rational(&a, &rhs).expect("Sylvester matrix is invertible when Res != 0");
            (sol[..d].to_vec(), sol[d..].to_vec())
        };
        // x0^(2d-1) is the top coefficient; x1^(2d-1) the constant one.
        [solve(2 * d - 1), solve(0)]
    }
}

/// `f_c = integral_0^z prod (t - c_i) dt`, the monic-derivative normal form
/// of degree `len(c) + 1`.
pub fn normal_form_fc(c: &[BigRational]) -> Result<RationalMap> {
    let d = c.len() + 1;
    if d < 2 {
        return Err(Error::DegreeTooSmall(d));
    }
    // prod (t - c_i), ascending coefficients.
    let mut deriv = vec![BigRational::one()];
    for ci in c {
        let mut next = vec![BigRational::zero(); deriv.len() + 1];
        for (k, a) in deriv.iter().enumerate() {
            next[k + 1] += a;
            next[k] -= a * ci;
        }
        deriv = next;
    }
    let mut num = vec![BigRational::zero(); d + 1];
    for (k, a) in deriv.iter().enumerate() {
        num[k + 1] = a / BigRational::from_integer(BigInt::from(k as u64 + 1));
    }
    build_map(&num, &[BigRational::one()])
}

/// Outcome of the critical-point contraction check at one sample.
#[derive(Clone, Debug, PartialEq)]
pub struct ContractionSample {
    pub rho: f64,
    pub applicable: bool,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// For a critical point `c` and constant `C`: when `rho(x, c) <= 1/(8C)`,
/// checks `rho(phi x, phi c) <= factor * C^2 rho(x, c)^2`. Exact at finite
/// places.
pub fn critical_contraction(
    phi: &RationalMap,
    c: &ProjPoint,
    x: &ProjPoint,
    v: Place,
    lipschitz: f64,
    factor: f64,
) -> ContractionSample {
    let d0 = chordal(x, c, v);
    let d1 = chordal(&phi.apply(x), &phi.apply(c), v);
    match (&d0, &d1, v) {
        (Distance::Exact(r0), Distance::Exact(r1), Place::Finite(p)) => {
            let cexact = phi.lipschitz_exact(p.get());
            let fac = BigRational::from_float(factor).expect("finite factor");
            let applicable = r0 * &cexact * BigRational::from_integer(8.into()) <= BigRational::one();
            let rhs = fac * &cexact * &cexact * r0 * r0;
            ContractionSample {
                rho: r0.to_f64().unwrap_or(0.0),
                applicable,
                lhs: r1.to_f64().unwrap_or(0.0),
                rhs: rhs.to_f64().unwrap_or(0.0),
                holds: !applicable || *r1 <= rhs,
            }
        }
        _ => {
            let r0 = d0.to_f64();
            let r1 = d1.to_f64();
            let applicable = r0 <= 1.0 / (8.0 * lipschitz);
            let rhs = factor * lipschitz * lipschitz * r0 * r0;
            ContractionSample { rho: r0, applicable, lhs: r1, rhs, holds: !applicable || r1 <= rhs }
        }
    }
}
