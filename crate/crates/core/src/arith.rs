//! Integer helpers: primality, factorization of machine words, prime
//! stripping, and floating logarithms of big integers.

use std::sync::OnceLock;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, ToPrimitive, Zero};

/// Bases making Miller-Rabin deterministic on all of `u64`.
const MR_BASES_U64: [u64; 7] = [2, 325, 9375, 28178, 450775, 9780504, 1795265022];

#[inline]
pub fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

pub fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, m);
        }
        base = mul_mod(base, base, m);
        exp >>= 1;
    }
    acc
}

/// Montgomery arithmetic modulo an odd `n`, with `R = 2^64`.
#[derive(Clone, Copy)]
struct Mont {
    n: u64,
    /// `n^-1 mod 2^64`.
    inv: u64,
}

impl Mont {
    fn new(n: u64) -> Self {
        debug_assert!(n % 2 == 1);
        let mut inv = n;
        for _ in 0..5 {
            inv = inv.wrapping_mul(2u64.wrapping_sub(n.wrapping_mul(inv)));
        }
        Mont { n, inv }
    }

    /// `t R^-1 mod n` for `t < n R`.
    #[inline]
    fn reduce(self, t: u128) -> u64 {
        let m = (t as u64).wrapping_mul(self.inv);
        let mn = ((m as u128 * self.n as u128) >> 64) as u64;
        let hi = (t >> 64) as u64;
        if hi >= mn {
            hi - mn
        } else {
            hi.wrapping_add(self.n).wrapping_sub(mn)
        }
    }

    #[inline]
    fn mul(self, a: u64, b: u64) -> u64 {
        self.reduce(a as u128 * b as u128)
    }

    fn to_mont(self, a: u64) -> u64 {
        ((((a % self.n) as u128) << 64) % self.n as u128) as u64
    }

    fn pow(self, base: u64, mut exp: u64) -> u64 {
        let mut acc = self.to_mont(1);
        let mut b = base;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, b);
            }
            b = self.mul(b, b);
            exp >>= 1;
        }
        acc
    }
}

/// Deterministic Miller-Rabin for 64-bit integers.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n % p == 0 {
            return n == p;
        }
    }
    if n < 41 * 41 {
        return true;
    }
    let mont = Mont::new(n);
    let one = mont.to_mont(1);
    let minus_one = mont.to_mont(n - 1);
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in &MR_BASES_U64 {
        if a % n == 0 {
            continue;
        }
        let mut x = mont.pow(mont.to_mont(a), d);
        if x == one || x == minus_one {
            continue;
        }
        for _ in 1..s {
            x = mont.mul(x, x);
            if x == minus_one {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Miller-Rabin on arbitrary-size integers with the first `rounds` prime bases.
/// Deterministic below 3.3e24; probabilistic beyond.
pub fn is_probable_prime(n: &BigUint, rounds: usize) -> bool {
    if let Some(small) = n.to_u64() {
        return is_prime_u64(small);
    }
    let one = BigUint::one();
    let two = BigUint::from(2u32);
    if n.is_even() {
        return false;
    }
    for &p in small_primes().iter().take(200) {
        if (n % p).is_zero() {
            return false;
        }
    }
    let n_minus_one = n - &one;
    let s = n_minus_one.trailing_zeros().unwrap_or(0);
    let d = &n_minus_one >> s;
    'witness: for &a in small_primes().iter().take(rounds.max(1)) {
        let mut x = BigUint::from(a).modpow(&d, n);
        if x == one || x == n_minus_one {
            continue;
        }
        for _ in 1..s {
            x = x.modpow(&two, n);
            if x == n_minus_one {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn gcd_u64(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

/// Finds a nontrivial factor of an odd composite `n` (Brent's variant of
/// rho). The walk runs in Montgomery form; gcds are unaffected since `R` is
/// a unit mod `n`.
fn rho_factor(n: u64) -> u64 {
    let mont = Mont::new(n);
    let mut c = 1u64;
    loop {
        let f = |x: u64| {
            let (y, over) = mont.mul(x, x).overflowing_add(c);
            if over || y >= n {
                y.wrapping_sub(n)
            } else {
                y
            }
        };
        let (mut x, mut y, mut ys) = (2u64, 2u64, 2u64);
        let mut q = mont.to_mont(1);
        let mut g = 1u64;
        let mut r = 1u64;
        let m = 128u64;
        while g == 1 {
            x = y;
            for _ in 0..r {
                y = f(y);
            }
            let mut k = 0;
            while k < r && g == 1 {
                ys = y;
                for _ in 0..m.min(r - k) {
                    y = f(y);
                    q = mont.mul(q, x.abs_diff(y));
                }
                g = gcd_u64(q, n);
                k += m;
            }
            r <<= 1;
        }
        if g == n {
            loop {
                ys = f(ys);
                g = gcd_u64(x.abs_diff(ys), n);
                if g > 1 {
                    break;
                }
            }
        }
        if g != n {
            return g;
        }
        c += 1;
    }
}

/// Full factorization of a 64-bit integer as sorted (prime, exponent) pairs.
pub fn factor_u64(mut n: u64) -> Vec<(u64, u32)> {
    let mut out: Vec<(u64, u32)> = Vec::new();
    if n <= 1 {
        return out;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47] {
        let mut e = 0;
        while n % p == 0 {
            n /= p;
            e += 1;
        }
        if e > 0 {
            out.push((p, e));
        }
    }
    let mut stack = vec![n];
    let mut primes = Vec::new();
    while let Some(m) = stack.pop() {
        if m == 1 {
            continue;
        }
        if is_prime_u64(m) {
            primes.push(m);
            continue;
        }
        let f = rho_factor(m);
        stack.push(f);
        stack.push(m / f);
    }
    primes.sort_unstable();
    for p in primes {
        match out.last_mut() {
            Some((q, e)) if *q == p => *e += 1,
            _ => out.push((p, 1)),
        }
    }
    out
}

/// Primes below 10^6, shared by all trial-division callers.
pub fn small_primes() -> &'static [u64] {
    static PRIMES: OnceLock<Vec<u64>> = OnceLock::new();
    PRIMES.get_or_init(|| primes_up_to(1_000_000))
}

pub fn primes_up_to(limit: u64) -> Vec<u64> {
    let limit = limit as usize;
    if limit < 2 {
        return Vec::new();
    }
    let mut sieve = vec![true; limit + 1];
    sieve[0] = false;
    sieve[1] = false;
    let mut i = 2;
    while i * i <= limit {
        if sieve[i] {
            let mut j = i * i;
            while j <= limit {
                sieve[j] = false;
                j += i;
            }
        }
        i += 1;
    }
    sieve
        .iter()
        .enumerate()
        .filter_map(|(k, &b)| b.then_some(k as u64))
        .collect()
}

/// Removes every factor `p` from `n`, returning the multiplicity and cofactor.
pub fn strip_prime(n: &BigUint, p: u64) -> (u64, BigUint) {
    debug_assert!(p >= 2);
    if n.is_zero() {
        return (0, BigUint::zero());
    }
    if p == 2 {
        let t = n.trailing_zeros().unwrap_or(0);
        return (t, n >> t);
    }
    let mut count = 0u64;
    let mut cur = n.clone();
    // Divide by the largest power of p fitting a word first.
    let mut chunk = p;
    let mut chunk_exp = 1u64;
    while let Some(next) = chunk.checked_mul(p) {
        chunk = next;
        chunk_exp += 1;
    }
    loop {
        let (q, r) = cur.div_rem(&BigUint::from(chunk));
        if r.is_zero() {
            cur = q;
            count += chunk_exp;
        } else {
            break;
        }
    }
    loop {
        let (q, r) = cur.div_rem(&BigUint::from(p));
        if r.is_zero() {
            cur = q;
            count += 1;
        } else {
            break;
        }
    }
    (count, cur)
}

/// p-adic valuation of a nonzero integer.
pub fn valuation_int(n: &BigInt, p: u64) -> u64 {
    strip_prime(n.magnitude(), p).0
}

/// Natural logarithm of a positive big integer as a double.
pub fn ln_biguint(n: &BigUint) -> f64 {
    let bits = n.bits();
    if bits <= 1000 {
        if let Some(f) = n.to_f64() {
            return f.ln();
        }
    }
    let shift = bits - 64;
    let top = (n >> shift).to_u64().unwrap_or(u64::MAX) as f64;
    top.ln() + shift as f64 * std::f64::consts::LN_2
}

pub fn ln_bigint_abs(n: &BigInt) -> f64 {
    ln_biguint(n.magnitude())
}

/// Ratio a/b of two big integers as f64 without overflow.
pub fn ratio_to_f64(a: &BigInt, b: &BigInt) -> f64 {
    if a.is_zero() {
        return 0.0;
    }
    let sign = if (a.sign() == Sign::Minus) ^ (b.sign() == Sign::Minus) {
        -1.0
    } else {
        1.0
    };
    sign * (ln_bigint_abs(a) - ln_bigint_abs(b)).exp()
}

/// Multiplicative order of `a` modulo the prime `p` (requires p does not divide a).
pub fn multiplicative_order(a: u64, p: u64) -> u64 {
    let a = a % p;
    debug_assert!(a != 0);
    let mut order = p - 1;
    for (q, _) in factor_u64(p - 1) {
        while order % q == 0 && pow_mod(a, order / q, p) == 1 {
            order /= q;
        }
    }
    order
}
