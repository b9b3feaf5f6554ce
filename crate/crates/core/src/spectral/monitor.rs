use std::collections::BTreeMap;
use std::f64::consts::SQRT_2;

use super::{build_flow_closure, solve_closed_form, ClosureBudget, FlowClosure, SpectralError, SpectralState};
use crate::params::CollatzParams;

/// Relative slack on the exponential growth bound.
pub const GROWTH_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthRow {
    pub t: f64,
    pub windowed_norm: f64,
    /// `exp(sqrt(2) t) |u0| (1 + slack)`.
    pub bound: f64,
    pub within: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GrowthReport {
    pub initial_norm: f64,
    pub rows: Vec<GrowthRow>,
}

impl GrowthReport {
    pub fn all_within(&self) -> bool {
        self.rows.iter().all(|r| r.within)
    }
}

/// Norm of the closed-form solution over the closure at each time.
///
/// The true solution lives on the whole backward tree, so the closure norm is
/// a lower bound and checking it against `exp(sqrt(2) t)|u0|` is a valid
/// necessary condition.
pub fn growth_monitor(
    closure: &FlowClosure,
    initial: &SpectralState,
    t_grid: &[f64],
) -> Result<GrowthReport, SpectralError> {
    let initial_norm = initial.norm();
    let rows = t_grid
        .iter()
        .map(|&t| {
            let u = solve_closed_form(closure, initial, t)?;
            let windowed_norm = u.windowed_norm(closure.closure.iter().copied());
            let bound = (SQRT_2 * t).exp() * initial_norm * (1.0 + GROWTH_SLACK);
            Ok(GrowthRow { t, windowed_norm, bound, within: windowed_norm <= bound })
        })
        .collect::<Result<_, SpectralError>>()?;
    Ok(GrowthReport { initial_norm, rows })
}

/// `I_0(x) = sum_j (x/2)^{2j} / (j!)^2`, summed until terms stop changing the total.
pub fn bessel_i0_series(x: f64) -> f64 {
    let q = x * x / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for j in 1.. {
        term *= q / (j as f64 * j as f64);
        let next = sum + term;
        if next == sum {
            break;
        }
        sum = next;
    }
    sum
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaProbeRow {
    pub t: f64,
    /// `sum_k |u_k(t)|^2` over the hitting frequencies in the window.
    pub norm_sqr: f64,
    /// `I_0(2 sqrt(2) t)`.
    pub bessel_bound: f64,
    pub within: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeltaProbeReport {
    pub pivot: u64,
    /// Frequency `k` to the number of steps `m_k` with `C^{m_k}(k) = pivot`.
    pub hits: BTreeMap<u64, u32>,
    pub rows: Vec<DeltaProbeRow>,
}

impl DeltaProbeReport {
    /// `u_k(t) = t^{m_k} / m_k!`, zero off the hitting set.
    pub fn amplitude(&self, k: u64, t: f64) -> f64 {
        self.hits.get(&k).map_or(0.0, |&m| taylor_monomial(m, t))
    }

    pub fn all_within(&self) -> bool {
        self.rows.iter().all(|r| r.within)
    }
}

fn taylor_monomial(m: u32, t: f64) -> f64 {
    (1..=m).fold(1.0, |acc, i| acc * t / i as f64)
}

/// Flow of `delta_pivot` restricted to `1..=window_max`: frequency `k` whose
/// orbit passes through the pivot after `m_k` steps carries `t^{m_k}/m_k!`.
pub fn delta_probe(
    params: CollatzParams,
    pivot: u64,
    window_max: u64,
    t_grid: &[f64],
    budget: ClosureBudget,
) -> Result<DeltaProbeReport, SpectralError> {
    if pivot == 0 {
        return Err(SpectralError::ZeroFrequency);
    }
    let pivot_closure = build_flow_closure(params, [pivot], budget)?;
    if pivot_closure.orbit_meta[&pivot].ell == 0 {
        return Err(SpectralError::PivotOnCycle(pivot));
    }
    let closure = build_flow_closure(params, 1..=window_max, budget)?;

    let mut hits = BTreeMap::new();
    for k in 1..=window_max {
        if let Some(m) = closure.path_to_cycle(k)?.iter().position(|&x| x == pivot) {
            hits.insert(k, m as u32);
        }
    }

    let rows = t_grid
        .iter()
        .map(|&t| {
            let norm_sqr: f64 = hits.values().map(|&m| taylor_monomial(m, t).powi(2)).sum();
            let bessel_bound = bessel_i0_series(2.0 * SQRT_2 * t);
            DeltaProbeRow { t, norm_sqr, bessel_bound, within: norm_sqr <= bessel_bound * (1.0 + 1e-12) }
        })
        .collect();
    Ok(DeltaProbeReport { pivot, hits, rows })
}
