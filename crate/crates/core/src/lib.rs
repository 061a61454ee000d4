//! Three-state N-canonical model of an open molecular domain.
//!
//! A domain with `N` electrons that can give or take up to `q` is described
//! by the mixture `ρ = exp(-γM)/Ξ` over the states `{N - q, N, N + q}`.
//! This crate provides
//!
//! - [`ensemble`]: closed forms for the weights, `ln Ξ`, mean population,
//!   transferred charge, variance, purity, the `ρ`–`M` covariance and the
//!   von Neumann entropy;
//! - [`oracle`]: a brute-force ensemble over arbitrary integer states used
//!   to cross-check the closed forms;
//! - [`qei`]: finite-difference checks of the expectation identities
//!   (particle-number and purity fluctuation–dissipation relations among them);
//! - [`calibration`]: the inverse map from a target charge to `γ`.

pub mod calibration;
pub mod ensemble;
pub mod error;
pub mod oracle;
pub mod qei;

pub use calibration::{gamma_for_charge, gamma_for_population, gamma_for_transferred, InversionResult};
pub use ensemble::{
    covariance_rho_m, entropy, log_partition, log_weights, mean_population, purity, transferred_charge,
    variance, weights, Capacity, ChemicalPotential, DomainSpec, TransferredCharge, WeightVector,
};
pub use error::{Error, Result};
pub use oracle::{make_ensemble, GeneralEnsemble};
pub use qei::{
    expectation, qei_lhs_fd, qei_rhs, verify_fdt, verify_pfdt, verify_qei, DiagonalObservable, FdScheme,
    FiniteDiffConfig, QeiReport, QeiTerms, Tolerance,
};
