//! Exact dynamics of the generalized accelerated Collatz map
//! `C(n) = n/2` (n even), `(alpha n + beta)/2` (n odd), and the linear flow
//! `d/dt u_n = u_{C(n)}` it induces on coefficient sequences.

pub mod coeffs;
pub mod derivative;
pub mod energy;
pub mod map;
pub mod params;
pub mod spectral;
pub mod verify;

pub use coeffs::{build_coeff_table, coeff_sums, verify_mod_decomposition, CoeffError, CoeffTable, CoeffTableBuilder};
pub use derivative::{
    build_derivative_decomposition, discrete_derivative_value, verify_affine_representation, DerivativeDecomposition,
    DerivativeError,
};
pub use energy::{conserved_energy, partial_sums, pseudo_virial, ratio_report, EnergyError, EnergySums};
pub use map::{apply, iterate, orbit, parity_bijection_check, parity_vector, MapError, OrbitRecord, ParityVector, Termination};
pub use params::{CollatzParams, ParamsError};
pub use spectral::{SpectralError, SpectralState};
pub use verify::{run_suite, CheckResult, CheckStatus, SuiteConfig, VerificationCertificate};
