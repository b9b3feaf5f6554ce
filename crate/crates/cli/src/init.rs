//! Initial-data mini-language for `flow --init`:
//! `delta:5`, `ones:1,2`, `list:3=1.0+0.5i,7=2.0`.

use anyhow::{bail, Context, Result};
use num_complex::Complex64;

/// Parses an init spec into `(frequency, amplitude)` pairs in input order.
pub fn parse_init(spec: &str) -> Result<Vec<(u64, Complex64)>> {
    let (kind, body) = spec.split_once(':').with_context(|| format!("init spec {spec:?} lacks a `kind:` prefix"))?;
    let one = Complex64::new(1.0, 0.0);
    let pairs = match kind.trim() {
        "delta" => vec![(parse_freq(body)?, one)],
        "ones" => body.split(',').map(|f| Ok((parse_freq(f)?, one))).collect::<Result<_>>()?,
        "list" => body
            .split(',')
            .map(|item| {
                let (f, v) = item.split_once('=').with_context(|| format!("list entry {item:?} is not freq=value"))?;
                Ok((parse_freq(f)?, parse_complex(v)?))
            })
            .collect::<Result<_>>()?,
        other => bail!("unknown init kind {other:?} (expected delta, ones or list)"),
    };
    Ok(pairs)
}

fn parse_freq(s: &str) -> Result<u64> {
    let f: u64 = s.trim().parse().with_context(|| format!("{s:?} is not a frequency"))?;
    if f == 0 {
        bail!("frequencies must be >= 1");
    }
    Ok(f)
}

/// `re`, `re+imi` or `re-imi`.
pub fn parse_complex(s: &str) -> Result<Complex64> {
    let s = s.trim();
    let Some(body) = s.strip_suffix('i') else {
        let re: f64 = s.parse().with_context(|| format!("{s:?} is not a number"))?;
        return Ok(Complex64::new(re, 0.0));
    };
    // The sign that splits re from im: not the leading one, not an exponent sign.
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| matches!(bytes[i], b'+' | b'-') && !matches!(bytes[i - 1], b'e' | b'E'))
        .with_context(|| format!("{s:?} must be written re+imi"))?;
    let re: f64 = body[..split].parse().with_context(|| format!("bad real part in {s:?}"))?;
    let im: f64 = body[split..].parse().with_context(|| format!("bad imaginary part in {s:?}"))?;
    Ok(Complex64::new(re, im))
}
