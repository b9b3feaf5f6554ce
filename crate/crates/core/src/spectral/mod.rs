//! The Collatz operator on finitely supported sequences and the linear flow
//! `d/dt u_n = u_{C(n)}`.

mod chain;
mod closure;
mod monitor;
mod operator;
mod solve;
mod state;

pub use chain::{chain_rk4_solution, chain_series_solution, truncated_orbit_chain};
pub use closure::{build_flow_closure, ClosureBudget, FlowClosure, OrbitMeta};
pub use monitor::{
    bessel_i0_series, delta_probe, growth_monitor, DeltaProbeReport, DeltaProbeRow, GrowthReport,
    GrowthRow, GROWTH_SLACK,
};
pub use operator::{
    adjoint_kernel_basis, apply_adjoint, apply_operator, has_odd_preimage, norm_certificates,
    preimages, NormEntry, NormReport, SupportClass,
};
pub use solve::{
    cycle_modes, solve_closed_form, solve_numerical, CycleModeDecomposition, NumericalScheme,
    PICARD_SUBINTERVAL,
};
pub use state::SpectralState;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectralError {
    #[error("frequencies must be >= 1")]
    ZeroFrequency,
    #[error("frequency arithmetic overflowed at {0}")]
    FrequencyOverflow(u64),
    #[error("states carry different map parameters")]
    ParamsMismatch,
    #[error("window must contain at least one frequency")]
    EmptyWindow,
    #[error("orbit of frequency {frequency} exhausted its budget without reaching a cycle")]
    BudgetExhausted { frequency: u64 },
    #[error("frequency {0} has no orbit metadata in the closure")]
    MissingOrbitMeta(u64),
    #[error("initial data at frequency {0} lies outside the closure")]
    NotInClosure(u64),
    #[error("closure is not forward-closed at frequency {0}")]
    NotForwardClosed(u64),
    #[error("flow time must be finite and nonnegative (got {0})")]
    InvalidTime(f64),
    #[error("step size must be finite and positive (got {0})")]
    InvalidStep(f64),
    #[error("picard iteration did not converge on the subinterval ending at t={time} (last update {residual:e})")]
    PicardNotConverged { time: f64, residual: f64 },
    #[error("pivot {0} lies on a cycle, so its hitting times are not unique")]
    PivotOnCycle(u64),
}
