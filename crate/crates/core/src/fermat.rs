//! Brute-force counts of `y * 2^(2^n) - x = 3^i 5^j` over grids of `(x, y)`.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::arith::strip_prime;
use crate::error::{Error, Result};
use crate::par::{self, Execution};

/// Largest `n` accepted: `2^(2^24)` already has 16 million bits.
pub const MAX_N: u32 = 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct SolutionTriple {
    pub n: u32,
    pub i: u32,
    pub j: u32,
}

impl SolutionTriple {
    /// Re-checks `y * 2^(2^n) = x + 3^i 5^j` by exact multiplication.
    pub fn holds(&self, x: i64, y: i64) -> bool {
        let lhs = BigInt::from(y) << (1usize << self.n);
        let rhs = BigInt::from(x) + BigInt::from(3u32).pow(self.i) * BigInt::from(5u32).pow(self.j);
        lhs == rhs
    }
}

/// Splits `value = prod p_k^e_k * residual` with the residual coprime to all
/// listed primes.
pub fn strip_smooth(value: &BigUint, primes: &[u64]) -> Result<(Vec<u64>, BigUint)> {
    if value.is_zero() {
        return Err(Error::ZeroInput);
    }
    let mut cur = value.clone();
    let mut exps = Vec::with_capacity(primes.len());
    for &p in primes {
        let (e, rest) = strip_prime(&cur, p);
        exps.push(e);
        cur = rest;
    }
    Ok((exps, cur))
}

fn check_n_max(n_max: u32) -> Result<()> {
    if n_max > MAX_N {
        return Err(Error::BitCapExceeded { index: n_max as usize, cap: 1 << MAX_N });
    }
    Ok(())
}

fn solution_for(n: u32, v: &BigInt) -> Option<SolutionTriple> {
    if !v.is_positive() {
        return None;
    }
    let (e, rest) = strip_smooth(v.magnitude(), &[3, 5]).expect("positive");
    rest.is_one().then(|| SolutionTriple { n, i: e[0] as u32, j: e[1] as u32 })
}

/// All `(n, i, j)` with `n <= n_max`, by exact arithmetic.
pub fn count_solutions(x: i64, y: i64, n_max: u32) -> Result<Vec<SolutionTriple>> {
    if x == 0 || y == 0 {
        return Err(Error::ZeroInput);
    }
    check_n_max(n_max)?;
    let (xb, yb) = (BigInt::from(x), BigInt::from(y));
    let mut power = BigInt::from(2u32);
    let mut out = Vec::new();
    for n in 0..=n_max {
        if n > 0 {
            power = &power * &power;
        }
        if let Some(t) = solution_for(n, &(&yb * &power - &xb)) {
            out.push(t);
        }
    }
    Ok(out)
}

const MOD3: u64 = 12_157_665_459_056_928_801; // 3^40
const MOD3_DIGITS: u32 = 40;
const MOD5: u64 = 7_450_580_596_923_828_125; // 5^27
const MOD5_DIGITS: u32 = 27;

/// Powers `2^(2^n)` shared by every cell of a sweep.
struct PowerTable {
    exact: Vec<BigInt>,
    mod3: Vec<u64>,
    mod5: Vec<u64>,
}

impl PowerTable {
    fn new(n_max: u32) -> Self {
        let mut exact = vec![BigInt::from(2u32)];
        for n in 1..=n_max as usize {
            let next = &exact[n - 1] * &exact[n - 1];
            exact.push(next);
        }
        let residues = |m: u64| -> Vec<u64> {
            let mut r = vec![2u64];
            for n in 1..=n_max as usize {
                let prev = r[n - 1] as u128;
                r.push((prev * prev % m as u128) as u64);
            }
            r
        };
        PowerTable { exact, mod3: residues(MOD3), mod5: residues(MOD5) }
    }
}

fn residue(y: i64, x: i64, pow: u64, m: u64) -> u64 {
    let m128 = m as i128;
    let v = (y as i128).rem_euclid(m128) * pow as i128 % m128 - x as i128;
    v.rem_euclid(m128) as u64
}

fn val_residue(r: u64, p: u64, cap: u32) -> u32 {
    if r == 0 {
        return cap;
    }
    let (mut r, mut v) = (r, 0);
    while r % p == 0 {
        r /= p;
        v += 1;
    }
    v
}

/// Same result as [`count_solutions`] using the shared table. For `n <= 6`
/// the value fits an `i128`. For `n >= 7` the value is at least
/// `2^128 - |x|`, so it can only be `3^i 5^j` if `v_3 >= 40` or `v_5 >= 27`;
/// both valuations are read off residues and the rare survivors are checked
/// exactly.
fn count_fast(table: &PowerTable, x: i64, y: i64) -> Vec<SolutionTriple> {
    let mut out = Vec::new();
    for n in 0..table.exact.len() as u32 {
        if n <= 6 {
            let pow: i128 = 1i128 << (1u32 << n);
            let Some(v) = (y as i128).checked_mul(pow).and_then(|t| t.checked_sub(x as i128)) else {
                if let Some(t) = solution_for(n, &(BigInt::from(y) * &table.exact[n as usize] - x)) {
                    out.push(t);
                }
                continue;
            };
            if v <= 0 {
                continue;
            }
            let (mut r, mut i, mut j) = (v as u128, 0, 0);
            while r % 3 == 0 {
                r /= 3;
                i += 1;
            }
            while r % 5 == 0 {
                r /= 5;
                j += 1;
            }
            if r == 1 {
                out.push(SolutionTriple { n, i, j });
            }
            continue;
        }
        if y < 0 {
            continue;
        }
        let v3 = val_residue(residue(y, x, table.mod3[n as usize], MOD3), 3, MOD3_DIGITS);
        let v5 = val_residue(residue(y, x, table.mod5[n as usize], MOD5), 5, MOD5_DIGITS);
        if v3 < MOD3_DIGITS && v5 < MOD5_DIGITS {
            continue;
        }
        if let Some(t) = solution_for(n, &(BigInt::from(y) * &table.exact[n as usize] - x)) {
            out.push(t);
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SweepStats {
    pub max_count: usize,
    /// First `(x, y)` in row-major order reaching the maximum.
    pub argmax: (i64, i64),
    pub argmax_solutions: Vec<SolutionTriple>,
    /// Number of grid cells per solution count.
    pub histogram: BTreeMap<usize, u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SweepReport {
    pub cells: u64,
    pub n_max: u32,
    /// Counting `n >= 0`.
    pub all: SweepStats,
    /// Counting `n >= 1` only.
    pub positive_n: SweepStats,
    pub within_bound: bool,
}

/// The bound being tested.
pub const SOLUTION_BOUND: usize = 17;

fn nonzero(lo: i64, hi: i64) -> Vec<i64> {
    (lo..=hi).filter(|&v| v != 0).collect()
}

fn stats(rows: &[(i64, Vec<(i64, Vec<SolutionTriple>)>)], keep: impl Fn(&SolutionTriple) -> bool) -> SweepStats {
    let mut best: Option<(usize, (i64, i64), Vec<SolutionTriple>)> = None;
    let mut histogram = BTreeMap::new();
    for (x, row) in rows {
        for (y, sols) in row {
            let kept: Vec<SolutionTriple> = sols.iter().copied().filter(&keep).collect();
            *histogram.entry(kept.len()).or_insert(0) += 1;
            if best.as_ref().is_none_or(|b| kept.len() > b.0) {
                best = Some((kept.len(), (*x, *y), kept));
            }
        }
    }
    let (max_count, argmax, argmax_solutions) = best.expect("nonempty grid");
    SweepStats { max_count, argmax, argmax_solutions, histogram }
}

/// Counts solutions for every `(x, y)` in the grid (zeros excluded).
pub fn sweep(x_range: (i64, i64), y_range: (i64, i64), n_max: u32, exec: Execution) -> Result<SweepReport> {
    check_n_max(n_max)?;
    let xs = nonzero(x_range.0, x_range.1);
    let ys = nonzero(y_range.0, y_range.1);
    if xs.is_empty() || ys.is_empty() {
        return Err(Error::EmptyRange);
    }
    let table = PowerTable::new(n_max);
    let rows: Vec<(i64, Vec<(i64, Vec<SolutionTriple>)>)> = par::map(exec, &xs, |&x| {
        (x, ys.iter().map(|&y| (y, count_fast(&table, x, y))).collect())
    });
    let all = stats(&rows, |_| true);
    let positive_n = stats(&rows, |t| t.n >= 1);
    Ok(SweepReport {
        cells: (xs.len() * ys.len()) as u64,
        n_max,
        within_bound: all.max_count <= SOLUTION_BOUND,
        all,
        positive_n,
    })
}

/// Fast counter for one cell, exposed for cross-checking against
/// [`count_solutions`].
pub fn count_solutions_fast(x: i64, y: i64, n_max: u32) -> Result<Vec<SolutionTriple>> {
    if x == 0 || y == 0 {
        return Err(Error::ZeroInput);
    }
    check_n_max(n_max)?;
    Ok(count_fast(&PowerTable::new(n_max), x, y))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(n: u32, i: u32, j: u32) -> SolutionTriple {
        SolutionTriple { n, i, j }
    }

    #[test]
    fn strip_examples() {
        let s = |v: u64| strip_smooth(&BigUint::from(v), &[3, 5]).unwrap();
        assert_eq!(s(45), (vec![2, 1], BigUint::from(1u32)));
        assert_eq!(s(255), (vec![1, 1], BigUint::from(17u32)));
        assert_eq!(s(1), (vec![0, 0], BigUint::from(1u32)));
        assert!(strip_smooth(&BigUint::zero(), &[3]).is_err());
    }

    #[test]
    fn count_examples() {
        assert_eq!(count_solutions(-1, 1, 16).unwrap(), vec![t(0, 1, 0), t(1, 0, 1)]);
        assert_eq!(count_solutions(1, 1, 16).unwrap(), vec![t(0, 0, 0), t(1, 1, 0), t(2, 1, 1)]);
        // 2*2 - 7 < 0; 2*4 - 7 = 1; 2*16 - 7 = 25; 2*256 - 7 = 505 = 5 * 101
        assert_eq!(count_solutions(7, 2, 16).unwrap(), vec![t(1, 0, 0), t(2, 0, 2)]);
        assert!(count_solutions(1, 1, 25).is_err());
    }

    #[test]
    fn fast_matches_exact() {
        for x in -30..=30 {
            for y in -30..=30 {
                if x == 0 || y == 0 {
                    continue;
                }
                assert_eq!(count_solutions_fast(x, y, 9).unwrap(), count_solutions(x, y, 9).unwrap(), "{x} {y}");
            }
        }
        // Force the exact fallback at n = 7: pick x = y 2^128 mod 3^40.
        let table = PowerTable::new(7);
        let y = (1..100i64)
            .find(|&y| residue(y, 0, table.mod3[7], MOD3) < 1 << 62)
            .expect("some small residue");
        let x = residue(y, 0, table.mod3[7], MOD3) as i64;
        let v = BigInt::from(y) * &table.exact[7] - x;
        assert!(strip_prime(v.magnitude(), 3).0 >= 40);
        assert_eq!(count_solutions_fast(x, y, 7).unwrap(), count_solutions(x, y, 7).unwrap());
    }

    #[test]
    fn sweep_examples() {
        let r = sweep((-1, -1), (1, 1), 16, Execution::Sequential).unwrap();
        assert_eq!(r.all.max_count, 2);
        assert_eq!(r.all.argmax, (-1, 1));
        assert_eq!(r.positive_n.max_count, 1);
        assert!(sweep((0, 0), (1, 1), 4, Execution::Sequential).is_err());
        assert!(sweep((3, 2), (1, 1), 4, Execution::Sequential).is_err());
        let a = sweep((-20, 20), (-20, 20), 10, Execution::Sequential).unwrap();
        let b = sweep((-20, 20), (-20, 20), 10, Execution::Parallel).unwrap();
        assert_eq!(a, b);
        assert!(a.within_bound);
        assert_eq!(a.all.histogram.values().sum::<u64>(), a.cells);
    }
}
