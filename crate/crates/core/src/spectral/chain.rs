//! Finite chains `n_0 -> n_1 -> ... -> n_{L-1}` cut off after `L` nodes.
//!
//! A divergent orbit never closes, so its flow is a pure Taylor tail
//! `u_{n_j}(t) = sum_k u_{n_{j+k}}(0) t^k / k!`. Truncating the chain sets
//! the amplitude beyond the last node to zero, which makes the series finite.

use num_bigint::BigInt;
use num_complex::Complex64;

use super::solve::LinearCoupling;
use super::SpectralError;
use crate::map::apply;
use crate::params::CollatzParams;

/// The first `length` points `start, C(start), ...` of an orbit.
pub fn truncated_orbit_chain(params: CollatzParams, start: &BigInt, length: usize) -> Vec<BigInt> {
    let mut out = Vec::with_capacity(length);
    let mut x = start.clone();
    for _ in 0..length {
        let next = apply(params, &x);
        out.push(std::mem::replace(&mut x, next));
    }
    out
}

/// Exact flow on a truncated chain: a finite Taylor sum per node.
pub fn chain_series_solution(initial: &[Complex64], t: f64) -> Result<Vec<Complex64>, SpectralError> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(SpectralError::InvalidTime(t));
    }
    let len = initial.len();
    let out = (0..len)
        .map(|j| {
            let mut sum = Complex64::default();
            let mut term = 1.0;
            for (k, v) in initial[j..].iter().enumerate() {
                if k > 0 {
                    term *= t / k as f64;
                }
                sum += v * term;
            }
            sum
        })
        .collect();
    Ok(out)
}

/// RK4 integration of the truncated chain, for comparison with the series.
pub fn chain_rk4_solution(initial: &[Complex64], t: f64, dt: f64) -> Result<Vec<Complex64>, SpectralError> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(SpectralError::InvalidTime(t));
    }
    if !(dt.is_finite() && dt > 0.0) {
        return Err(SpectralError::InvalidStep(dt));
    }
    if t == 0.0 {
        return Ok(initial.to_vec());
    }
    let len = initial.len();
    let system = LinearCoupling { target: (0..len).map(|j| (j + 1 < len).then_some(j + 1)).collect() };
    Ok(system.rk4(initial, t, dt))
}
