//! Valuation of equity and debt claims in networks of firms with
//! cross-holdings, and their risk-neutral network Greeks.
//!
//! The pieces, bottom-up:
//!
//! * [`network`]: cross-holding matrices, validation, accounting identities.
//! * [`fixpoint`]: ex-post claim values as the fixed point `x = g(a, x)`.
//! * [`sensitivity`]: exact derivatives of the fixed point (weighting matrix,
//!   threat index, impact, outside-investor sensitivities).
//! * [`gbm`]: correlated GBM terminal sampling and pathwise partials.
//! * [`mc`]: Monte-Carlo prices and network Greeks with standard errors.
//! * [`analytic`]: closed forms for the symmetric network.
//! * [`local`]: local ex-ante approximations (put-insured debt, marginal
//!   contagion, independent defaults).
//! * [`netgen`]: Erdős–Rényi cross-holding ensembles.
//! * [`experiment`]: config-driven experiment runners behind the CLI.

pub mod analytic;
pub mod black_scholes;
pub mod error;
pub mod experiment;
pub mod fixpoint;
pub mod gbm;
pub mod local;
pub mod mc;
pub mod netgen;
pub mod network;
pub mod sensitivity;
mod stats;

pub use error::{Error, Result};
pub use fixpoint::{solve_claims, FixedPointConfig, FixedPointSolution};
pub use gbm::GbmParams;
pub use mc::{mc_greeks, price_claims, GreekReport, McConfig};
pub use network::{ClaimVector, FirmNetwork, SolvencyVector};
