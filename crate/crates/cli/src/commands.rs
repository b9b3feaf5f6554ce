//! One function per subcommand, each producing a [`Report`].

use std::f64::consts::SQRT_2;
use std::fmt;

use anyhow::{Context, Result};
use num_bigint::{BigInt, BigUint};
use num_complex::Complex64;
use num_traits::{One, Signed};
use serde_json::Value;

use collatz_flows::coeffs::{build_coeff_table_with_budget, coeff_sums, verify_mod_decomposition};
use collatz_flows::derivative::{build_derivative_decomposition, verify_affine_exhaustive, ClassCoefficients};
use collatz_flows::energy::{partial_sums, pseudo_virial, BlockSweep};
use collatz_flows::map::{orbit, parity_bijection_check, parity_vector, MAX_BIJECTION_K};
use collatz_flows::spectral::{
    build_flow_closure, solve_closed_form, solve_numerical, ClosureBudget, NumericalScheme, SpectralError,
    SpectralState, GROWTH_SLACK,
};
use collatz_flows::verify::{run_suite, SuiteConfig};
use collatz_flows::{CoeffTable, CollatzParams, DerivativeDecomposition, DerivativeError, EnergyError};

use crate::args::{FlowArgs, Grid, ParamArgs, Scheme};
use crate::emit::{int_json, json_int, object, Report};
use crate::init::parse_init;

/// Marks an error as a configuration problem (exit code 2).
#[derive(Debug)]
pub struct InvalidConfig(pub String);

impl fmt::Display for InvalidConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InvalidConfig {}

pub fn invalid(e: impl fmt::Display) -> anyhow::Error {
    InvalidConfig(e.to_string()).into()
}

/// Exit code for an error: 2 for configuration problems, 1 otherwise.
pub fn exit_code(e: &anyhow::Error) -> u8 {
    if e.chain().any(|c| c.is::<InvalidConfig>()) {
        2
    } else {
        1
    }
}

fn params(p: ParamArgs) -> Result<CollatzParams> {
    CollatzParams::new(p.alpha, p.beta).map_err(invalid)
}

fn param_fields(p: CollatzParams) -> [(&'static str, Value); 2] {
    [("alpha", Value::from(p.alpha())), ("beta", Value::from(p.beta()))]
}

fn parse_bigint(s: &str, what: &str) -> Result<BigInt> {
    s.trim().parse().map_err(|_| invalid(format!("{what} must be an integer (got {s:?})")))
}

/// A decimal integer or `2^K`.
pub fn parse_max_value(s: &str) -> Result<BigInt> {
    let value = match s.trim().split_once('^') {
        Some((base, exp)) if base.trim() == "2" => {
            let k: u32 = exp.trim().parse().map_err(|_| invalid(format!("bad exponent in --max-value {s:?}")))?;
            BigInt::one() << k
        }
        Some(_) => return Err(invalid(format!("--max-value must be a decimal or 2^K (got {s:?})"))),
        None => parse_bigint(s, "--max-value")?,
    };
    if !value.is_positive() {
        return Err(invalid("--max-value must be positive"));
    }
    Ok(value)
}

/// `n0..n1`, inclusive on both ends.
pub fn parse_sweep(s: &str) -> Result<(u64, u64)> {
    let bad = || invalid(format!("--sweep must be n0..n1 with 1 <= n0 <= n1 (got {s:?})"));
    let (lo, hi) = s.split_once("..").ok_or_else(bad)?;
    let lo: u64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: u64 = hi.trim().parse().map_err(|_| bad())?;
    if lo == 0 || lo > hi {
        return Err(bad());
    }
    Ok((lo, hi))
}

fn parity_of(x: &BigInt) -> u8 {
    u8::from(x.bit(0))
}

pub fn orbit_cmd(p: ParamArgs, n: &str, max_steps: u64, max_value: &str) -> Result<Report> {
    let params = params(p)?;
    let n = parse_bigint(n, "--n")?;
    let max_value = parse_max_value(max_value)?;
    if max_steps == 0 {
        return Err(invalid("--max-steps must be positive"));
    }
    let rec = orbit(params, &n, max_steps, &max_value);
    let [a, b] = param_fields(params);
    let json = object([
        a,
        b,
        ("start", int_json(&rec.start)),
        ("values", rec.values.iter().map(int_json).collect()),
        ("cycle_entry_index", rec.cycle_entry_index.map_or(Value::Null, Value::from)),
        ("cycle_length", rec.cycle_length.map_or(Value::Null, Value::from)),
        ("cycle", rec.cycle().map_or(Value::Null, |c| c.iter().map(int_json).collect())),
        ("terminated_by", Value::from(rec.terminated_by.as_str())),
    ]);
    let mut report = Report::new(vec!["step", "value", "parity"], json);
    report.rows = rec
        .values
        .iter()
        .enumerate()
        .map(|(i, v)| vec![i.to_string(), v.to_string(), parity_of(v).to_string()])
        .collect();
    Ok(report)
}

pub fn parity_cmd(p: ParamArgs, k: u32, n: Option<&str>, check_bijection: bool) -> Result<Report> {
    let params = params(p)?;
    if k == 0 {
        return Err(invalid("--k must be at least 1"));
    }
    let starts: Vec<BigInt> = match n {
        Some(n) => vec![parse_bigint(n, "--n")?],
        None if k <= MAX_BIJECTION_K => (1..=1u64 << k).map(BigInt::from).collect(),
        None => return Err(invalid(format!("listing [1, 2^{k}] exceeds the budget 2^{MAX_BIJECTION_K}; pass --n"))),
    };
    let mut rows = Vec::with_capacity(starts.len());
    let mut entries = Vec::with_capacity(starts.len());
    for n in &starts {
        let pv = parity_vector(params, n, k as usize).map_err(invalid)?;
        let bits: String = pv.bits.iter().map(|b| char::from(b'0' + b)).collect();
        entries.push(object([
            ("n", int_json(n)),
            ("parity_vector", Value::from(bits.clone())),
            ("ones", Value::from(pv.ones())),
        ]));
        rows.push(vec![n.to_string(), bits, pv.ones().to_string()]);
    }

    let mut failure = None;
    let bijection = if check_bijection {
        let check = parity_bijection_check(params, k).map_err(invalid)?;
        if let Some((x, y)) = check.collision {
            failure = Some(format!("parity vectors of {x} and {y} agree at k={k}"));
        }
        object([
            ("bijective", Value::from(check.is_bijective())),
            ("distinct", Value::from(check.distinct)),
            ("collision", check.collision.map_or(Value::Null, |(x, y)| Value::from(vec![x, y]))),
        ])
    } else {
        Value::Null
    };
    let [a, b] = param_fields(params);
    let json = object([a, b, ("k", Value::from(k)), ("rows", Value::from(entries)), ("bijection", bijection)]);
    let mut report = Report::new(vec!["n", "parity_vector", "ones"], json);
    report.rows = rows;
    report.failure = failure;
    Ok(report)
}

/// Random samples per `coeffs --verify` run, on top of the exhaustive sweep.
pub const COEFF_VERIFY_SAMPLES: u64 = 10_000;

pub fn coeffs_cmd(p: ParamArgs, k: u32, verify: bool, max_k: u32) -> Result<Report> {
    let params = params(p)?;
    let table = build_coeff_table_with_budget(params, k, max_k).map_err(invalid)?;
    let mut failure = None;
    if verify {
        let check = verify_mod_decomposition(&table, COEFF_VERIFY_SAMPLES);
        if let Some(bad) = &check.counterexample {
            failure = Some(format!(
                "2^k C^k(n) != a n + b at n={} (residue {}): {} vs {}",
                bad.n, bad.residue, bad.lhs, bad.rhs
            ));
        } else if let Err(e) = coeff_sums(&table) {
            failure = Some(e.to_string());
        }
    }
    let mut report = Report::new(vec!["residue", "a", "b", "alpha_exponent"], coeff_table_json(&table));
    report.rows = (0..table.len())
        .map(|i| {
            vec![
                i.to_string(),
                table.a[i].to_string(),
                table.b[i].to_string(),
                table.alpha_exponent[i].to_string(),
            ]
        })
        .collect();
    report.failure = failure;
    Ok(report)
}

pub fn coeff_table_json(table: &CoeffTable) -> Value {
    let big = |v: &[BigUint]| v.iter().map(|x| int_json(&BigInt::from(x.clone()))).collect::<Value>();
    let [a, b] = param_fields(table.params);
    object([
        a,
        b,
        ("k", Value::from(table.k)),
        ("a", big(&table.a)),
        ("b", big(&table.b)),
        ("alpha_exponent", Value::from(table.alpha_exponent.clone())),
    ])
}

fn field<'a>(v: &'a Value, key: &str) -> Result<&'a Value> {
    v.get(key).with_context(|| format!("missing field {key:?}"))
}

fn u64_field(v: &Value, key: &str) -> Result<u64> {
    field(v, key)?.as_u64().with_context(|| format!("field {key:?} is not an unsigned integer"))
}

fn u32_field(v: &Value, key: &str) -> Result<u32> {
    Ok(u32::try_from(u64_field(v, key)?)?)
}

fn params_from_json(v: &Value) -> Result<CollatzParams> {
    Ok(CollatzParams::new(u64_field(v, "alpha")?, u64_field(v, "beta")?)?)
}

fn array<'a>(v: &'a Value, key: &str) -> Result<&'a Vec<Value>> {
    field(v, key)?.as_array().with_context(|| format!("field {key:?} is not an array"))
}

fn biguint(v: &Value) -> Result<BigUint> {
    json_int(v)?.to_biguint().context("expected a nonnegative integer")
}

/// Inverse of [`coeff_table_json`].
pub fn coeff_table_from_json(v: &Value) -> Result<CoeffTable> {
    let table = CoeffTable {
        params: params_from_json(v)?,
        k: u32_field(v, "k")?,
        a: array(v, "a")?.iter().map(biguint).collect::<Result<_>>()?,
        b: array(v, "b")?.iter().map(biguint).collect::<Result<_>>()?,
        alpha_exponent: array(v, "alpha_exponent")?
            .iter()
            .map(|e| Ok(u32::try_from(e.as_u64().context("alpha_exponent entries are integers")?)?))
            .collect::<Result<_>>()?,
    };
    let rows = 1usize << table.k;
    if table.a.len() != rows || table.b.len() != rows || table.alpha_exponent.len() != rows {
        anyhow::bail!("table of order {} must have {rows} rows", table.k);
    }
    Ok(table)
}

pub fn energy_cmd(p: ParamArgs, n: Option<u64>, k: u32, m: u64, sweep: Option<&str>) -> Result<Report> {
    let params = params(p)?;
    if m == 0 {
        return Err(invalid("--m must be at least 1"));
    }
    if k > MAX_BIJECTION_K {
        return Err(invalid(format!("--k {k} exceeds the block budget 2^{MAX_BIJECTION_K}")));
    }
    let mut failure = None;
    let mut sums = Vec::new();
    match (sweep, n) {
        (Some(range), _) => {
            let (lo, hi) = parse_sweep(range)?;
            let blocks = BlockSweep::new(params, k, lo, hi, m);
            for n in lo..=hi {
                let s = blocks.sums(n, m);
                if let Err(e) = s.check() {
                    failure.get_or_insert(e.to_string());
                }
                sums.push(s);
            }
        }
        (None, Some(n)) => match check(partial_sums(params, &BigInt::from(n), k, m))? {
            Ok(s) => sums.push(s),
            Err(e) => return Ok(Report { failure: Some(e.to_string()), ..Report::new(energy_header(), Value::Null) }),
        },
        (None, None) => return Err(invalid("pass --n or --sweep")),
    }

    let mut report = Report::new(energy_header(), Value::Null);
    let mut entries = Vec::with_capacity(sums.len());
    for s in &sums {
        let energy = (&s.s_km - &s.s_k) / BigInt::from(m);
        let virial = check(pseudo_virial(params, &s.n, k))?.map_err(anyhow::Error::from)?;
        entries.push(object([
            ("n", int_json(&s.n)),
            ("k", Value::from(k)),
            ("m", Value::from(m)),
            ("s_k", int_json(&s.s_k)),
            ("s_km", int_json(&s.s_km)),
            ("energy", int_json(&energy)),
            ("pseudo_virial_num", int_json(virial.numer())),
            ("pseudo_virial_den", int_json(virial.denom())),
        ]));
        report.rows.push(vec![
            s.n.to_string(),
            k.to_string(),
            m.to_string(),
            s.s_k.to_string(),
            s.s_km.to_string(),
            energy.to_string(),
            virial.numer().to_string(),
            virial.denom().to_string(),
        ]);
    }
    let [a, b] = param_fields(params);
    report.json = object([a, b, ("k", Value::from(k)), ("m", Value::from(m)), ("rows", Value::from(entries))]);
    report.failure = failure;
    Ok(report)
}

/// Splits a nonpositive start (config error) from invariant violations.
fn check<T>(r: Result<T, EnergyError>) -> Result<Result<T, EnergyError>> {
    match r {
        Err(EnergyError::NonPositiveStart(n)) => Err(invalid(format!("--n must be >= 1 (got {n})"))),
        other => Ok(other),
    }
}

fn energy_header() -> Vec<&'static str> {
    vec!["n", "k", "m", "s_k", "s_km", "energy", "pseudo_virial_num", "pseudo_virial_den"]
}

pub fn deriv_cmd(p: ParamArgs, m: u32, verify: bool) -> Result<Report> {
    let params = params(p)?;
    let decomp = match build_derivative_decomposition(params, m) {
        Ok(d) => d,
        Err(e @ DerivativeError::SumMismatch { .. }) => {
            return Ok(Report { failure: Some(e.to_string()), ..Report::new(deriv_header(), Value::Null) })
        }
        Err(e) => return Err(invalid(e)),
    };
    let mut failure = None;
    if verify {
        let check = verify_affine_exhaustive(&decomp, 1u64 << (m + 2), 4);
        if let Some(bad) = check.counterexample {
            failure = Some(format!(
                "affine form fails at n={}, k={} (residue {}): {} vs {}",
                bad.n, bad.k, bad.residue, bad.lhs, bad.rhs
            ));
        }
    }
    let denominator = decomp.denominator();
    let mut report = Report::new(deriv_header(), derivative_json(&decomp));
    report.rows = decomp
        .per_class
        .iter()
        .map(|c| {
            vec![
                c.residue.to_string(),
                c.n_coeff_numerator.to_string(),
                c.free_coeff_numerator.to_string(),
                denominator.to_string(),
            ]
        })
        .collect();
    report.failure = failure;
    Ok(report)
}

fn deriv_header() -> Vec<&'static str> {
    vec!["residue", "n_coeff_num", "free_coeff_num", "denominator"]
}

pub fn derivative_json(d: &DerivativeDecomposition) -> Value {
    let classes: Vec<Value> = d
        .per_class
        .iter()
        .map(|c| {
            object([
                ("residue", Value::from(c.residue)),
                ("n_coeff_num", int_json(&c.n_coeff_numerator)),
                ("free_coeff_num", int_json(&c.free_coeff_numerator)),
            ])
        })
        .collect();
    let [a, b] = param_fields(d.params);
    object([
        a,
        b,
        ("m", Value::from(d.m)),
        ("denominator", int_json(&d.denominator())),
        ("classes", Value::from(classes)),
        ("n_coeff_sum", int_json(&d.n_coeff_sum)),
        ("free_coeff_sum", int_json(&d.free_coeff_sum)),
        ("normalized_n_coeff_sum", Value::from(d.normalized_n_coeff_sum().to_string())),
        ("normalized_free_coeff_sum", Value::from(d.normalized_free_coeff_sum().to_string())),
    ])
}

/// Inverse of [`derivative_json`].
pub fn derivative_from_json(v: &Value) -> Result<DerivativeDecomposition> {
    let per_class = array(v, "classes")?
        .iter()
        .map(|c| {
            Ok(ClassCoefficients {
                residue: u64_field(c, "residue")?,
                n_coeff_numerator: json_int(field(c, "n_coeff_num")?)?,
                free_coeff_numerator: json_int(field(c, "free_coeff_num")?)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let d = DerivativeDecomposition {
        params: params_from_json(v)?,
        m: u32_field(v, "m")?,
        per_class,
        n_coeff_sum: json_int(field(v, "n_coeff_sum")?)?,
        free_coeff_sum: json_int(field(v, "free_coeff_sum")?)?,
    };
    if d.per_class.len() != 1usize << d.m {
        anyhow::bail!("order {} needs {} classes", d.m, 1usize << d.m);
    }
    Ok(d)
}

fn spectral_error(e: SpectralError) -> anyhow::Error {
    match e {
        SpectralError::BudgetExhausted { .. } | SpectralError::PicardNotConverged { .. } => e.into(),
        other => invalid(other),
    }
}

pub fn flow_cmd(args: &FlowArgs) -> Result<Report> {
    let params = params(args.params)?;
    if !(args.t_max.is_finite() && args.t_max >= 0.0) {
        return Err(invalid(format!("--t-max must be finite and nonnegative (got {})", args.t_max)));
    }
    if args.t_steps == 0 || args.max_steps == 0 {
        return Err(invalid("--t-steps and --max-steps must be positive"));
    }
    let pairs = parse_init(&args.init).map_err(|e| invalid(format!("{e:#}")))?;
    let initial = SpectralState::from_pairs(params, pairs).map_err(spectral_error)?;
    let window: Vec<u64> = initial.support().chain(1..=args.window.unwrap_or(0)).collect();
    let budget = ClosureBudget { max_steps: args.max_steps, ..ClosureBudget::default() };
    let closure = build_flow_closure(params, window, budget).map_err(spectral_error)?;
    let scheme = match args.scheme {
        Scheme::Closed => None,
        Scheme::Rk4 => Some(NumericalScheme::rk4(args.dt)),
        Scheme::Picard => Some(NumericalScheme::picard()),
    };

    let initial_norm = initial.norm();
    let mut report = Report::new(vec!["t", "frequency", "re", "im", "windowed_norm", "growth_bound"], Value::Null);
    let mut snapshots = Vec::with_capacity(args.t_steps + 1);
    for i in 0..=args.t_steps {
        let t = args.t_max * i as f64 / args.t_steps as f64;
        let u = match scheme {
            None => solve_closed_form(&closure, &initial, t),
            Some(s) => solve_numerical(&closure, &initial, t, s),
        }
        .map_err(spectral_error)?;
        let norm = u.windowed_norm(closure.closure.iter().copied());
        let bound = (SQRT_2 * t).exp() * initial_norm * (1.0 + GROWTH_SLACK);
        if norm > bound && report.failure.is_none() {
            report.failure = Some(format!("closure norm {norm} exceeds exp(sqrt2 t)|u0| = {bound} at t={t}"));
        }
        let mut amplitudes = Vec::with_capacity(closure.len());
        for &n in &closure.closure {
            let z: Complex64 = u.get(n);
            amplitudes.push(object([("frequency", Value::from(n)), ("re", Value::from(z.re)), ("im", Value::from(z.im))]));
            report.rows.push(vec![
                t.to_string(),
                n.to_string(),
                z.re.to_string(),
                z.im.to_string(),
                norm.to_string(),
                bound.to_string(),
            ]);
        }
        snapshots.push(object([
            ("t", Value::from(t)),
            ("windowed_norm", Value::from(norm)),
            ("growth_bound", Value::from(bound)),
            ("amplitudes", Value::from(amplitudes)),
        ]));
    }
    let scheme_name = match args.scheme {
        Scheme::Closed => "closed",
        Scheme::Rk4 => "rk4",
        Scheme::Picard => "picard",
    };
    let [a, b] = param_fields(params);
    report.json = object([
        a,
        b,
        ("scheme", Value::from(scheme_name)),
        ("t_max", Value::from(args.t_max)),
        ("t_steps", Value::from(args.t_steps)),
        ("closure", closure.closure.iter().copied().collect()),
        ("cycles", closure.cycles.iter().map(|c| Value::from(c.clone())).collect()),
        ("snapshots", Value::from(snapshots)),
    ]);
    Ok(report)
}

pub fn verify_cmd(grid: Grid, timing: bool, threads: Option<usize>) -> Result<Report> {
    let mut config = match grid {
        Grid::Default => SuiteConfig::default(),
        Grid::Quick => SuiteConfig::quick(),
    };
    if let Some(t) = threads {
        if t == 0 {
            return Err(invalid("--threads must be positive"));
        }
        config.threads = t;
    }
    let cert = run_suite(&config);

    let mut header = vec!["name", "status", "witness"];
    if timing {
        header.push("elapsed_ms");
    }
    let mut report = Report::new(header, Value::Null);
    let mut checks = Vec::with_capacity(cert.checks.len());
    for c in &cert.checks {
        let elapsed_ms = c.elapsed.as_secs_f64() * 1e3;
        let mut row = vec![c.name.to_string(), c.status.as_str().to_string(), c.witness.clone().unwrap_or_default()];
        let mut entry = object([
            ("name", Value::from(c.name)),
            ("status", Value::from(c.status.as_str())),
            ("witness", c.witness.clone().map_or(Value::Null, Value::from)),
        ]);
        if timing {
            row.push(format!("{elapsed_ms:.3}"));
            entry["elapsed_ms"] = Value::from(elapsed_ms);
        }
        report.rows.push(row);
        checks.push(entry);
    }
    let failures: Vec<String> =
        cert.failures().map(|c| format!("{}: {}", c.name, c.witness.as_deref().unwrap_or("failed"))).collect();
    if !failures.is_empty() {
        report.failure = Some(failures.join("\n"));
    }
    report.json = object([
        ("suite_version", Value::from(cert.suite_version)),
        ("param_grid", cert.param_grid.iter().map(|&(a, b)| Value::from(vec![a, b])).collect()),
        ("checks", Value::from(checks)),
    ]);
    Ok(report)
}
