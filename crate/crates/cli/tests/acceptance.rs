//! Acceptance criteria, one line each. Runs without the libtest harness so
//! the verdict lines are always printed.

use std::collections::BTreeSet;
use std::process::Command;
use std::time::{Duration, Instant};

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use orbit_heights::bounds::{
    bound_z2_explicit, distribution_gap_check, explicit_z2_params, preimage_level_n, roth_constants,
};
use orbit_heights::fermat::{count_solutions, sweep, SolutionTriple};
use orbit_heights::heights::{canonical_height, height_sum_check};
use orbit_heights::integrality::{adversarial_family, scan_orbit, PlaceSet};
use orbit_heights::padic::{lte_valuation, orbit_valuation, PrecisionSchedule};
use orbit_heights::places::{log_abs, support, Place, ProjPoint};
use orbit_heights::ratmap::critical_contraction;
use orbit_heights::{height_drop_constants, weil_height, Execution, LogNumber, RationalMap};

type Verdict = Result<String, String>;

struct Runner {
    failed: Vec<u32>,
}

impl Runner {
    fn run(&mut self, id: u32, name: &str, limit: Option<Duration>, f: impl FnOnce() -> Verdict) {
        let start = Instant::now();
        let outcome = f();
        let elapsed = start.elapsed();
        let outcome = match (outcome, limit) {
            (Ok(_), Some(l)) if elapsed > l => Err(format!("took {elapsed:.2?}, limit {l:?}")),
            (o, _) => o,
        };
        let (tag, detail) = match &outcome {
            Ok(d) => ("PASS", d),
            Err(d) => ("FAIL", d),
        };
        println!("criterion {id:>2} [{tag}] {name}: {detail} ({:.2}s)", elapsed.as_secs_f64());
        if outcome.is_err() {
            self.failed.push(id);
        }
    }
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn v_p(n: &BigInt, p: u64) -> u64 {
    if p == 2 {
        return n.trailing_zeros().unwrap_or(0);
    }
    let mut n = n.clone();
    let mut v = 0;
    // Strip the largest word-sized power of p first.
    let k = (1..).take_while(|&k| p.checked_pow(k).is_some()).last().unwrap_or(1);
    let chunk = BigInt::from(p.pow(k));
    while !n.is_zero() && (&n % &chunk).is_zero() {
        n /= &chunk;
        v += k as u64;
    }
    let pb = BigInt::from(p);
    while !n.is_zero() && (&n % &pb).is_zero() {
        n /= &pb;
        v += 1;
    }
    v
}

fn random_rational(rng: &mut ChaCha8Rng, bound: u64) -> BigRational {
    let n = rng.gen_range(1..=bound);
    let d = rng.gen_range(1..=bound);
    let n = if rng.gen() { BigInt::from(n) } else { -BigInt::from(n) };
    BigRational::new(n, BigInt::from(d))
}

fn random_map(rng: &mut ChaCha8Rng, max_deg: usize, coeff: i64) -> RationalMap {
    loop {
        let d = rng.gen_range(2..=max_deg);
        let num: Vec<i64> = (0..=d).map(|_| rng.gen_range(-coeff..=coeff)).collect();
        let den: Vec<i64> = (0..=rng.gen_range(0..=d)).map(|_| rng.gen_range(-coeff..=coeff)).collect();
        if let Ok(m) = RationalMap::from_i64(&num, &den) {
            return m;
        }
    }
}

fn product_formula() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for k in 0..100_000 {
        let x = random_rational(&mut rng, u64::MAX);
        let total = support(&x).into_iter().fold(LogNumber::zero(), |acc, v| acc.add(&log_abs(&x, v).unwrap()));
        check(total.is_zero(), || format!("sample {k}: {x} sums to {total}"))?;
    }
    Ok("100000 rationals, every sum exactly 0".into())
}

fn height_inequalities() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for k in 0..10_000 {
        let x = random_rational(&mut rng, u64::MAX);
        let y = random_rational(&mut rng, u64::MAX);
        check(height_sum_check(&x, &y).all_hold(), || format!("pair {k}: {x}, {y}"))?;
    }
    Ok("0 violations on 10000 pairs".into())
}

fn power_canonical_height() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let z2 = RationalMap::power(2);
    let mut widest = 0.0f64;
    for _ in 0..100 {
        let x = ProjPoint::from_rational(&random_rational(&mut rng, 1 << 40));
        let iv = canonical_height(&z2, &x, 5e-10).map_err(|e| e.to_string())?;
        let h = weil_height(&x).float;
        check(iv.contains(h), || format!("{x}: [{}, {}] misses {h}", iv.lo, iv.hi))?;
        check(iv.width() <= 1e-9, || format!("{x}: width {}", iv.width()))?;
        widest = widest.max(iv.width());
    }
    let m = RationalMap::from_i64(&[-1, 0, 1], &[1]).unwrap();
    let iv = canonical_height(&m, &ProjPoint::zero(), 1e-9).map_err(|e| e.to_string())?;
    check(iv.contains(0.0), || format!("z^2-1 at 0: [{}, {}]", iv.lo, iv.hi))?;
    Ok(format!("100 points, max width {widest:.1e}; z^2-1 at 0 gives [{}, {}]", iv.lo, iv.hi))
}

fn drop_constants() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for m in 0..20 {
        let phi = random_map(&mut rng, 4, 50);
        let c = height_drop_constants(&phi);
        let d = phi.degree() as f64;
        for _ in 0..10_000 {
            let x = ProjPoint::from_rational(&random_rational(&mut rng, 1 << 20));
            let r = c.check(&phi, &x);
            check(r.upper && r.lower, || format!("map {m} ({phi}) at {x}: {r:?}"))?;
            // Floating cross-check of the same inequalities.
            let (hx, hy) = (weil_height(&x).float, weil_height(&phi.apply(&x)).float);
            check(d * hx - c.e_low <= hy + 1e-9 && hy <= d * hx + d * c.e_up + 1e-9, || {
                format!("map {m} at {x}: float check failed")
            })?;
        }
    }
    Ok("20 maps x 10000 points, 0 violations".into())
}

fn lte_oracle() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let primes: Vec<u64> = (3..50u64).filter(|&p| (2..p).all(|k| p % k != 0)).collect();
    let mut done = 0;
    while done < 10_000 {
        let p = primes[rng.gen_range(0..primes.len())];
        let b: u64 = rng.gen_range(1..=1_000_000);
        let a = b + p * rng.gen_range(1..=1000u64);
        if b % p == 0 || a > 1_000_000 {
            continue;
        }
        let n: u64 = rng.gen_range(1..=200);
        let (ab, bb) = (BigInt::from(a), BigInt::from(b));
        let brute = v_p(&(num_traits::pow(ab.clone(), n as usize) - num_traits::pow(bb.clone(), n as usize)), p);
        let got = lte_valuation(&ab, &bb, n, p).map_err(|e| e.to_string())?;
        check(got == brute, || format!("({p}, {a}, {b}, {n}): {got} vs {brute}"))?;
        done += 1;
    }
    Ok("10000 instances match".into())
}

fn padic_orbits() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let primes = [2u64, 3, 5, 7, 11];
    let (mut done, mut skipped) = (0, 0);
    let (mut oracle_time, mut capped_time) = (Duration::ZERO, Duration::ZERO);
    while done < 1000 {
        let phi = random_map(&mut rng, 3, 100);
        let alpha = random_rational(&mut rng, 100);
        let beta = random_rational(&mut rng, 100);
        let p = primes[rng.gen_range(0..primes.len())];
        let n = rng.gen_range(0..=12usize);
        // Oracle: exact unreduced iteration, then v_p of cross / (x1 b1).
        let t = Instant::now();
        let a = ProjPoint::from_rational(&alpha);
        let (mut x0, mut x1) = (a.x0().clone(), a.x1().clone());
        for _ in 0..n {
            (x0, x1) = phi.eval_homogeneous(&x0, &x1);
        }
        let b = ProjPoint::from_rational(&beta);
        let cross = &x0 * b.x1() - &x1 * b.x0();
        if x1.is_zero() || cross.is_zero() {
            skipped += 1;
            continue;
        }
        let exact = v_p(&cross, p) as i64 - v_p(&x1, p) as i64 - v_p(b.x1(), p) as i64;
        oracle_time += t.elapsed();
        let t = Instant::now();
        let got = orbit_valuation(&phi, &alpha, &beta, p, n, PrecisionSchedule::default()).map_err(|e| e.to_string())?;
        capped_time += t.elapsed();
        check(got == exact, || format!("{phi}, alpha {alpha}, beta {beta}, p {p}, n {n}: {got} vs {exact}"))?;
        done += 1;
    }
    // The time limit covers the capped computation, not the exact oracle.
    check(capped_time < Duration::from_secs(60), || format!("capped valuations took {capped_time:.2?}, limit 60s"))?;
    Ok(format!(
        "1000 cases match ({skipped} exact zeros or poles skipped); capped {:.2}s, exact oracle {:.2}s",
        capped_time.as_secs_f64(),
        oracle_time.as_secs_f64()
    ))
}

fn orbit_scan() -> Verdict {
    let z2 = RationalMap::power(2);
    let s: PlaceSet = "inf,3,5".parse().unwrap();
    let r = scan_orbit(&z2, &ProjPoint::from_int(2), &ProjPoint::from_int(1), &s, 10, 1 << 20, Execution::Parallel);
    let got = r.integral_indices();
    check(got == vec![0, 1, 2], || format!("got {got:?}"))?;
    Ok(format!("integral indices {got:?}"))
}

fn fermat() -> Verdict {
    let report = sweep((-200, 200), (-200, 200), 16, Execution::Parallel).map_err(|e| e.to_string())?;
    check(report.all.max_count <= 17, || format!("max {} at {:?}", report.all.max_count, report.all.argmax))?;
    let single: BTreeSet<SolutionTriple> = count_solutions(-1, 1, 16).unwrap().into_iter().collect();
    let want: BTreeSet<SolutionTriple> =
        [SolutionTriple { n: 0, i: 1, j: 0 }, SolutionTriple { n: 1, i: 0, j: 1 }].into_iter().collect();
    check(single == want, || format!("(-1, 1) gives {single:?}"))?;
    let ones = count_solutions(1, 1, 16).unwrap();
    check(ones.len() == 3, || format!("(1, 1) gives {ones:?}"))?;
    Ok(format!(
        "{} cells, max {} at {:?} (n >= 1: max {}); (-1,1) and (1,1) exact",
        report.cells, report.all.max_count, report.all.argmax, report.positive_n.max_count
    ))
}

fn explicit_bounds() -> Verdict {
    let b = bound_z2_explicit(2).unwrap().value;
    check(b == (3 * 2 + 12 + 50) as f64, || format!("bound_z2_explicit(2) = {b}"))?;
    let p = explicit_z2_params(2).unwrap();
    check(p.final_threshold == 56.0, || format!("final threshold {}", p.final_threshold))?;
    for d in 2..=5u64 {
        for s in 1..=64u64 {
            let n = preimage_level_n(d, s).unwrap();
            let t = BigUint::from(56u32) * BigUint::from(4u32).pow(d as u32 - 1) * BigUint::from(s);
            let db = BigUint::from(d);
            check(db.pow(n - 1) <= t && t < db.pow(n), || format!("N({d}, {s}) = {n}"))?;
        }
    }
    Ok("z2 bound 68, final threshold 56, N checked for d <= 5, |S| <= 64".into())
}

fn roth() -> Verdict {
    let c = roth_constants(2).unwrap();
    check((c.c1 / 4.0730e9 - 1.0).abs() <= 1e-3, || format!("c1 = {}", c.c1))?;
    let oracle = (2304.0 * std::f64::consts::LN_2).powi(3);
    check((c.c1 / oracle - 1.0).abs() <= 1e-12, || format!("c1 = {} vs {oracle}", c.c1))?;
    let mut prev = f64::NEG_INFINITY;
    for r in 2..=64 {
        let l = roth_constants(r).unwrap().log_c2;
        check(l.is_finite() && l > prev, || format!("log c2 at r = {r}: {l}"))?;
        prev = l;
    }
    Ok(format!("c1(2) = {:.5e}, log c2(2) = {:.3}", c.c1, c.log_c2))
}

fn lipschitz() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut pairs = 0u64;
    for _ in 0..10 {
        let phi = random_map(&mut rng, 3, 20);
        for p in [2u64, 3, 5, 7] {
            let c = phi.lipschitz_exact(p);
            for _ in 0..10_000 {
                let x = ProjPoint::from_rational(&random_rational(&mut rng, 10_000));
                let y = ProjPoint::from_rational(&random_rational(&mut rng, 10_000));
                if x == y {
                    continue;
                }
                // rho_p = p^-v_p(cross) for coprime coordinates.
                let rho = |a: &ProjPoint, b: &ProjPoint| -> BigRational {
                    let c = a.cross(b);
                    if c.is_zero() {
                        return BigRational::zero();
                    }
                    BigRational::new(BigInt::one(), BigInt::from(p).pow(v_p(&c, p) as u32))
                };
                let lhs = rho(&phi.apply(&x), &phi.apply(&y));
                check(lhs <= &c * rho(&x, &y), || format!("{phi}, p = {p}, {x}, {y}"))?;
                pairs += 1;
            }
        }
    }
    let z2 = RationalMap::power(2);
    let c = ProjPoint::zero();
    let lip = z2.lipschitz_constant(Place::Archimedean);
    let mut applicable = 0;
    for _ in 0..10_000 {
        let x = ProjPoint::from_rational(&random_rational(&mut rng, 1_000_000));
        let near = ProjPoint::new(x.x0().clone(), x.x1() * BigInt::from(rng.gen_range(1..=1000u32))).unwrap();
        for pt in [x, near] {
            let s = critical_contraction(&z2, &c, &pt, Place::Archimedean, lip, 0.5);
            check(s.holds, || format!("contraction fails at {pt}: {} > {}", s.lhs, s.rhs))?;
            applicable += usize::from(s.applicable);
        }
    }
    check(applicable > 0, || "no sample within (8C)^-1".into())?;
    Ok(format!("{pairs} finite-place pairs, 0 violations; contraction holds on {applicable} applicable samples"))
}

fn distribution_gap() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut min = f64::INFINITY;
    let mut done = 0;
    while done < 1000 {
        let x = random_rational(&mut rng, 1000);
        let y = random_rational(&mut rng, 1000);
        let n = rng.gen_range(0..=6u32);
        match distribution_gap_check(&x, &y, n) {
            Ok(s) => min = min.min(s),
            Err(_) => continue,
        }
        done += 1;
    }
    check(min >= -1e-9, || format!("min slack {min}"))?;
    Ok(format!("min slack {min:.4} over 1000 samples"))
}

fn adversarial() -> Verdict {
    let mut counts = Vec::new();
    for m in 1..=8 {
        let inst = adversarial_family(m).unwrap();
        let r = scan_orbit(&inst.map, &inst.alpha, &inst.beta, &inst.places, m, 1 << 22, Execution::Parallel);
        let hits = r.integral_indices().into_iter().filter(|n| (1..=m).contains(n)).count();
        check(hits >= m, || format!("m = {m}: {hits}"))?;
        counts.push(hits);
    }
    Ok(format!("integral counts in 1..m for m = 1..8: {counts:?}"))
}

fn cli(args: &[&str]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_orbit-heights")).args(args).output().expect("binary runs");
    (out.status.code().unwrap_or(-1), String::from_utf8(out.stdout).expect("utf-8"))
}

/// The report with its metadata removed, in both formats.
fn strip_metadata(text: &str) -> String {
    match serde_json::from_str::<Value>(text) {
        Ok(mut v) => {
            v.as_object_mut().map(|o| o.remove("metadata"));
            v.to_string()
        }
        Err(_) => text.lines().filter(|l| !l.starts_with("# metadata")).collect::<Vec<_>>().join("\n"),
    }
}

fn determinism() -> Verdict {
    let dir = std::env::temp_dir().join(format!("orbit-heights-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let config = dir.join("scan.json");
    std::fs::write(
        &config,
        r#"{"map": {"num": ["1", "0", "1"], "den": ["0", "2"]}, "alpha": "3", "beta": "1/2", "places": "inf,2,3", "n-max": 6, "seed": 7}"#,
    )
    .map_err(|e| e.to_string())?;
    let z2 = r#"{"num":[1,0,1],"den":[1]}"#;
    let config = config.to_str().unwrap();
    let runs: Vec<Vec<&str>> = vec![
        vec!["scan", "--config", config],
        vec!["scan", "--config", config, "--format", "csv", "--execution", "sequential"],
        vec!["lipschitz", "--map", z2, "--place", "inf", "--samples", "500", "--seed", "42"],
        vec!["lipschitz", "--map", z2, "--place", "3", "--samples", "500", "--seed", "42"],
        vec!["canheight", "--map", z2, "--point", "0", "--tol", "1e-6"],
        vec!["fermat-sweep", "--x-min", "-20", "--x-max", "20", "--y-min", "-20", "--y-max", "20", "--n-max", "10"],
        vec!["quasi-scan", "--map", z2, "--alpha", "1/2", "--beta", "3", "--places", "inf,2", "--eps", "1/2"],
        vec!["adversarial", "--m", "4", "--format", "csv"],
        vec!["bound", "--theorem", "z2", "--s", "3"],
        vec!["params-z2", "--s", "5"],
        vec!["height", "--point", "-45/8"],
        vec!["lte", "--a", "4", "--b", "1", "--n", "3", "--p", "3"],
        vec!["orbit-valuation", "--map", z2, "--alpha", "0", "--beta", "2", "--p", "5", "--n", "4"],
    ];
    for args in &runs {
        let (c1, a) = cli(args);
        let (c2, b) = cli(args);
        check(c1 == 0 && c2 == 0, || format!("{args:?} exited {c1}, {c2}"))?;
        check(strip_metadata(&a) == strip_metadata(&b), || format!("{args:?} differs between runs"))?;
    }
    let _ = std::fs::remove_dir_all(&dir);
    Ok(format!("{} commands byte-identical across two runs (metadata excluded)", runs.len()))
}

fn main() {
    // `cargo test -- <filter>` style arguments are accepted and ignored.
    let mut r = Runner { failed: Vec::new() };
    let s = |n: u64| Some(Duration::from_secs(n));
    r.run(1, "product formula", s(10), product_formula);
    r.run(2, "height inequalities", s(5), height_inequalities);
    r.run(3, "canonical height of power maps", s(10), power_canonical_height);
    r.run(4, "height-drop constants", s(60), drop_constants);
    r.run(5, "LTE oracle equivalence", s(30), lte_oracle);
    r.run(6, "capped p-adic orbit valuations", None, padic_orbits);
    r.run(7, "orbit scan ground truth", s(1), orbit_scan);
    r.run(8, "Fermat sweep", s(600), fermat);
    r.run(9, "explicit bound values", s(1), explicit_bounds);
    r.run(10, "Roth constants", s(1), roth);
    r.run(11, "Lipschitz and critical contraction", s(60), lipschitz);
    r.run(12, "distribution gap", s(30), distribution_gap);
    r.run(13, "adversarial family", s(60), adversarial);
    r.run(14, "determinism", None, determinism);
    if r.failed.is_empty() {
        println!("acceptance: all 14 criteria pass");
    } else {
        println!("acceptance: failed criteria {:?}", r.failed);
        std::process::exit(1);
    }
}
