//! One function per subcommand. Each fills in defaults on its resolved
//! arguments, which are then echoed in the report.

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use orbit_heights::bounds::{
    bound_critical, bound_power_lattes, bound_theorem1, bound_theorem3, bound_z2_explicit, explicit_z2_params,
    roth_constants,
};
use orbit_heights::fermat::sweep;
use orbit_heights::heights::{canonical_height_with, CanonicalOptions};
use orbit_heights::integrality::{adversarial_family, scan_quasi};
use orbit_heights::padic::{lte_valuation, orbit_valuation, PrecisionSchedule};
use orbit_heights::places::parse_rational;
use orbit_heights::{
    chordal, map_height, scan_orbit, weil_height, Error, Execution, MapSpec, Place, PlaceSet, ProjPoint, RationalMap,
};

use crate::config::{require, FileConfig};
use crate::error::CliError;
use crate::report::{Outcome, Status};

pub struct Context {
    pub execution: Execution,
    pub seed: u64,
}

type CmdResult = Result<Outcome, CliError>;

pub fn resolve_and_run<A>(
    file: &FileConfig,
    flags: &A,
    ctx: &Context,
    f: fn(&mut A, &Context) -> CmdResult,
) -> Result<(Value, Outcome), CliError>
where
    A: Serialize + DeserializeOwned,
{
    let mut args: A = file.command(flags)?;
    let outcome = f(&mut args, ctx)?;
    let resolved = serde_json::to_value(&args).map_err(|e| CliError::Invalid(e.to_string()))?;
    Ok((resolved, outcome))
}

/// Flag values that look like JSON are kept as JSON, anything else as a string.
fn parse_json(s: &str) -> Result<Value, String> {
    Ok(serde_json::from_str(s).unwrap_or_else(|_| Value::String(s.to_string())))
}

/// A map given as `{"num": [...], "den": [...]}`, either inline or as a JSON
/// string; coefficients may be integers or rational strings.
fn parse_map(v: &Value) -> Result<RationalMap, CliError> {
    let obj = match v {
        Value::String(s) => serde_json::from_str::<Value>(s)
            .map_err(|e| CliError::Invalid(format!("map is not valid JSON: {e}")))?,
        other => other.clone(),
    };
    let coeffs = |key: &str| -> Result<Vec<String>, CliError> {
        let arr = obj
            .get(key)
            .and_then(Value::as_array)
            .ok_or_else(|| CliError::Invalid(format!("map needs a {key:?} array")))?;
        arr.iter()
            .map(|c| match c {
                Value::String(s) => Ok(s.clone()),
                Value::Number(n) if n.is_i64() || n.is_u64() => Ok(n.to_string()),
                other => Err(CliError::Invalid(format!("bad coefficient {other}"))),
            })
            .collect()
    };
    if let Some(extra) = obj.as_object().and_then(|o| o.keys().find(|k| *k != "num" && *k != "den")) {
        return Err(CliError::Invalid(format!("unknown map field {extra:?}")));
    }
    Ok(MapSpec { num: coeffs("num")?, den: coeffs("den")? }.build()?)
}

fn parse_point(s: &str) -> Result<ProjPoint, CliError> {
    Ok(s.parse()?)
}

fn parse_places(s: &str) -> Result<PlaceSet, CliError> {
    Ok(s.parse()?)
}

fn parse_int(s: &str, what: &str) -> Result<BigInt, CliError> {
    s.trim().parse().map_err(|_| CliError::Invalid(format!("{what}: bad integer {s:?}")))
}

fn rational(s: &str) -> Result<BigRational, CliError> {
    Ok(parse_rational(s)?)
}

fn truncation(truncated: bool) -> Status {
    if truncated {
        Status::CapReached
    } else {
        Status::Ok
    }
}

macro_rules! args_struct {
    ($(#[$meta:meta])* $name:ident { $($(#[$fmeta:meta])* $field:ident : $ty:ty),* $(,)? }) => {
        $(#[$meta])*
        #[derive(clap::Args, Serialize, Deserialize, Clone, Debug, Default)]
        #[serde(deny_unknown_fields, rename_all = "kebab-case")]
        pub struct $name {
            $(
                $(#[$fmeta])*
                #[arg(allow_hyphen_values = true)]
                #[serde(default, skip_serializing_if = "Option::is_none")]
                pub $field: Option<$ty>,
            )*
        }
    };
}

args_struct!(ScanArgs {
    /// Map as JSON: {"num": [...], "den": [...]}, ascending powers of z.
    #[arg(long, value_parser = parse_json)]
    map: Value,
    /// Starting point: inf, p/q, or [x0:x1].
    #[arg(long)]
    alpha: String,
    #[arg(long)]
    beta: String,
    /// Places of S, e.g. inf,3,5.
    #[arg(long)]
    places: String,
    #[arg(long)]
    n_max: usize,
    #[arg(long)]
    bit_cap: u64,
    /// Allow beta = alpha (critical-orbit mode; the scan starts at n = 1).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    critical: bool,
});

pub fn cmd_scan(a: &mut ScanArgs, ctx: &Context) -> CmdResult {
    let phi = parse_map(&require(&a.map, "map")?)?;
    let alpha = parse_point(&require(&a.alpha, "alpha")?)?;
    let beta = parse_point(&require(&a.beta, "beta")?)?;
    let s = parse_places(a.places.get_or_insert_with(|| "inf".into()))?;
    let n_max = *a.n_max.get_or_insert(10);
    let bit_cap = *a.bit_cap.get_or_insert(1 << 20);
    let critical = *a.critical.get_or_insert(false);
    if alpha == beta && !critical {
        return Err(CliError::Invalid("beta equals alpha; pass --critical to scan a critical orbit".into()));
    }
    let report = scan_orbit(&phi, &alpha, &beta, &s, n_max, bit_cap, ctx.execution);
    let table = report.to_csv();
    let result = json!({
        "integral_indices": report.integral_indices(),
        "truncated": report.truncated,
        "truncated_at": report.truncated_at,
        "entries": report.entries,
    });
    Ok(Outcome::with_status(truncation(report.truncated), result).table(table))
}

args_struct!(QuasiArgs {
    #[arg(long, value_parser = parse_json)]
    map: Value,
    #[arg(long)]
    alpha: String,
    /// Finite target, an integer or p/q.
    #[arg(long)]
    beta: String,
    #[arg(long)]
    places: String,
    /// Rational in [0, 1].
    #[arg(long)]
    eps: String,
    #[arg(long)]
    n_max: usize,
    #[arg(long)]
    bit_cap: u64,
});

pub fn cmd_quasi(a: &mut QuasiArgs, ctx: &Context) -> CmdResult {
    let phi = parse_map(&require(&a.map, "map")?)?;
    let alpha = parse_point(&require(&a.alpha, "alpha")?)?;
    let beta = rational(&require(&a.beta, "beta")?)?;
    let eps = rational(&require(&a.eps, "eps")?)?;
    let s = parse_places(a.places.get_or_insert_with(|| "inf".into()))?;
    let n_max = *a.n_max.get_or_insert(10);
    let bit_cap = *a.bit_cap.get_or_insert(1 << 20);
    let report = scan_quasi(&phi, &alpha, &beta, &s, &eps, n_max, bit_cap, ctx.execution)?;
    Ok(Outcome::with_status(truncation(report.truncated), report))
}

args_struct!(BoundArgs {
    /// One of 1, 2, 3, 5 (or critical), z2, roth.
    #[arg(long)]
    theorem: String,
    /// |S|.
    #[arg(long)]
    s: u64,
    #[arg(long)]
    d: u64,
    #[arg(long)]
    h_phi: f64,
    #[arg(long)]
    h_hat: f64,
    #[arg(long)]
    c1: f64,
    #[arg(long)]
    c2: f64,
    #[arg(long)]
    c3: f64,
    #[arg(long)]
    c4: f64,
    #[arg(long)]
    c7: f64,
    /// Number of approximated values, for roth.
    #[arg(long)]
    r: u64,
});

pub fn cmd_bound(a: &mut BoundArgs, _: &Context) -> CmdResult {
    let theorem = require(&a.theorem, "theorem")?;
    let report = match theorem.as_str() {
        "1" => bound_theorem1(require(&a.s, "s")?, require(&a.c1, "c1")?)?,
        "2" => bound_power_lattes(require(&a.s, "s")?, require(&a.c2, "c2")?, require(&a.c3, "c3")?)?,
        "3" => bound_theorem3(
            require(&a.s, "s")?,
            require(&a.d, "d")?,
            require(&a.h_phi, "h-phi")?,
            require(&a.h_hat, "h-hat")?,
            require(&a.c4, "c4")?,
        )?,
        "5" | "critical" => bound_critical(
            require(&a.s, "s")?,
            require(&a.d, "d")?,
            require(&a.h_phi, "h-phi")?,
            require(&a.h_hat, "h-hat")?,
            require(&a.c7, "c7")?,
        )?,
        "z2" => bound_z2_explicit(require(&a.s, "s")?)?,
        "roth" => return Ok(Outcome::ok(roth_constants(require(&a.r, "r")?)?)),
        other => return Err(CliError::Invalid(format!("unknown theorem tag {other:?}"))),
    };
    Ok(Outcome::ok(report))
}

args_struct!(CanheightArgs {
    #[arg(long, value_parser = parse_json)]
    map: Value,
    #[arg(long)]
    point: String,
    /// Target half-width of the interval.
    #[arg(long)]
    tol: f64,
    #[arg(long)]
    iteration_cap: usize,
    #[arg(long)]
    bit_cap: u64,
});

pub fn cmd_canheight(a: &mut CanheightArgs, _: &Context) -> CmdResult {
    let phi = parse_map(&require(&a.map, "map")?)?;
    let x = parse_point(&require(&a.point, "point")?)?;
    let tol = *a.tol.get_or_insert(1e-6);
    let opts = CanonicalOptions {
        iteration_cap: *a.iteration_cap.get_or_insert(64),
        bit_cap: *a.bit_cap.get_or_insert(1 << 22),
    };
    match canonical_height_with(&phi, &x, tol, opts) {
        Ok(iv) => Ok(Outcome::ok(json!({
            "lo": iv.lo,
            "hi": iv.hi,
            "midpoint": iv.midpoint(),
            "width": iv.width(),
            "iterations_used": iv.iterations_used,
        }))),
        Err(e @ (Error::BitCapExceeded { .. } | Error::IterationCap(_))) => {
            Ok(Outcome::with_status(Status::CapReached, json!({ "error": e.to_string() })))
        }
        Err(e) => Err(e.into()),
    }
}

args_struct!(HeightArgs {
    #[arg(long)]
    point: String,
    /// Give a map instead of a point for the height of its coefficients.
    #[arg(long, value_parser = parse_json)]
    map: Value,
});

pub fn cmd_height(a: &mut HeightArgs, _: &Context) -> CmdResult {
    let h = match (&a.point, &a.map) {
        (Some(p), None) => weil_height(&parse_point(p)?),
        (None, Some(m)) => map_height(&parse_map(m)?),
        (Some(_), Some(_)) => return Err(CliError::Invalid("give either --point or --map, not both".into())),
        (None, None) => return Err(CliError::Missing("point")),
    };
    Ok(Outcome::ok(h))
}

args_struct!(LteArgs {
    #[arg(long, allow_hyphen_values = true)]
    a: String,
    #[arg(long, allow_hyphen_values = true)]
    b: String,
    #[arg(long)]
    n: u64,
    #[arg(long)]
    p: u64,
});

pub fn cmd_lte(a: &mut LteArgs, _: &Context) -> CmdResult {
    let x = parse_int(&require(&a.a, "a")?, "a")?;
    let y = parse_int(&require(&a.b, "b")?, "b")?;
    let v = lte_valuation(&x, &y, require(&a.n, "n")?, require(&a.p, "p")?)?;
    Ok(Outcome::ok(json!({ "valuation": v })))
}

args_struct!(OrbitValuationArgs {
    #[arg(long, value_parser = parse_json)]
    map: Value,
    #[arg(long, allow_hyphen_values = true)]
    alpha: String,
    #[arg(long, allow_hyphen_values = true)]
    beta: String,
    #[arg(long)]
    p: u64,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    initial_digits: u64,
    #[arg(long)]
    max_digits: u64,
});

pub fn cmd_orbit_valuation(a: &mut OrbitValuationArgs, _: &Context) -> CmdResult {
    let phi = parse_map(&require(&a.map, "map")?)?;
    let alpha = rational(&require(&a.alpha, "alpha")?)?;
    let beta = rational(&require(&a.beta, "beta")?)?;
    let sched = PrecisionSchedule::new(*a.initial_digits.get_or_insert(64), *a.max_digits.get_or_insert(1 << 16))?;
    match orbit_valuation(&phi, &alpha, &beta, require(&a.p, "p")?, require(&a.n, "n")?, sched) {
        Ok(v) => Ok(Outcome::ok(json!({ "valuation": v }))),
        Err(Error::ExactZero) => Ok(Outcome::ok(json!({ "valuation": "inf" }))),
        Err(e @ Error::PrecisionExhausted { .. }) => {
            Ok(Outcome::with_status(Status::CapReached, json!({ "error": e.to_string() })))
        }
        Err(e) => Err(e.into()),
    }
}

args_struct!(FermatArgs {
    #[arg(long, allow_hyphen_values = true)]
    x_min: i64,
    #[arg(long, allow_hyphen_values = true)]
    x_max: i64,
    #[arg(long, allow_hyphen_values = true)]
    y_min: i64,
    #[arg(long, allow_hyphen_values = true)]
    y_max: i64,
    #[arg(long)]
    n_max: u32,
});

pub fn cmd_fermat(a: &mut FermatArgs, ctx: &Context) -> CmdResult {
    let xr = (*a.x_min.get_or_insert(-200), *a.x_max.get_or_insert(200));
    let yr = (*a.y_min.get_or_insert(-200), *a.y_max.get_or_insert(200));
    let n_max = *a.n_max.get_or_insert(16);
    Ok(Outcome::ok(sweep(xr, yr, n_max, ctx.execution)?))
}

args_struct!(AdversarialArgs {
    #[arg(long)]
    m: usize,
    /// Orbit length to scan; defaults to m.
    #[arg(long)]
    n_max: usize,
    #[arg(long)]
    bit_cap: u64,
});

pub fn cmd_adversarial(a: &mut AdversarialArgs, ctx: &Context) -> CmdResult {
    let m = require(&a.m, "m")?;
    let n_max = *a.n_max.get_or_insert(m);
    let bit_cap = *a.bit_cap.get_or_insert(1 << 20);
    let inst = adversarial_family(m)?;
    let report = scan_orbit(&inst.map, &inst.alpha, &inst.beta, &inst.places, n_max, bit_cap, ctx.execution);
    let indices = report.integral_indices();
    let in_range = indices.iter().filter(|&&n| (1..=m).contains(&n)).count();
    let table = report.to_csv();
    let result = json!({
        "instance": inst,
        "map_spec": inst.map.spec(),
        "integral_indices": indices,
        "integral_in_1_to_m": in_range,
        "truncated": report.truncated,
        "entries": report.entries,
    });
    Ok(Outcome::with_status(truncation(report.truncated), result).table(table))
}

args_struct!(LipschitzArgs {
    #[arg(long, value_parser = parse_json)]
    map: Value,
    /// inf or a prime.
    #[arg(long)]
    place: String,
    /// Random pairs to check the constant on.
    #[arg(long)]
    samples: usize,
});

fn random_point(rng: &mut ChaCha8Rng) -> ProjPoint {
    if rng.gen_ratio(1, 50) {
        return ProjPoint::infinity();
    }
    let n: i64 = rng.gen_range(-10_000..=10_000);
    let d: i64 = rng.gen_range(1..=10_000);
    ProjPoint::from_ratio(n, d).expect("d > 0")
}

pub fn cmd_lipschitz(a: &mut LipschitzArgs, ctx: &Context) -> CmdResult {
    let phi = parse_map(&require(&a.map, "map")?)?;
    let v: Place = a.place.get_or_insert_with(|| "inf".into()).parse()?;
    let samples = *a.samples.get_or_insert(10_000);
    let constant = phi.lipschitz_constant(v);
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
    let mut violations = 0usize;
    let mut max_ratio = 0.0f64;
    for _ in 0..samples {
        let (x, y) = (random_point(&mut rng), random_point(&mut rng));
        if x == y {
            continue;
        }
        let before = chordal(&x, &y, v).to_f64();
        let after = chordal(&phi.apply(&x), &phi.apply(&y), v).to_f64();
        let ok = match v {
            Place::Finite(p) => phi.lipschitz_holds_finite(&x, &y, p.get()),
            Place::Archimedean => after <= constant * before * (1.0 + 1e-12),
        };
        if before > 0.0 {
            max_ratio = max_ratio.max(after / before);
        }
        violations += usize::from(!ok);
    }
    Ok(Outcome::ok(json!({
        "place": v,
        "constant": constant,
        "exact": matches!(v, Place::Finite(_)),
        "samples": samples,
        "violations": violations,
        "max_observed_ratio": max_ratio,
    })))
}

args_struct!(ParamsZ2Args {
    /// |S|.
    #[arg(long)]
    s: u64,
});

pub fn cmd_params_z2(a: &mut ParamsZ2Args, _: &Context) -> CmdResult {
    let s = require(&a.s, "s")?;
    Ok(Outcome::ok(json!({
        "params": explicit_z2_params(s)?,
        "bound": bound_z2_explicit(s)?,
    })))
}
