//! The linear-optical GHZ analyzer and what it does to Bell-pair halves.
//!
//! Two routes compute the same statistics. [`exact`] contracts a ring
//! transfer matrix and works for any n. The Monte Carlo estimators propagate
//! the joint kept+travel state through [`AnalyzerCircuit`] with the optics
//! layer, and are limited to [`MAX_STATEVECTOR_USERS`] users.
//!
//! Detector sign convention: `D_{i,H}` registers `|+>` after the output HWP.
//! With the default `i` reflection phase, a heralded pattern with `v` V-clicks
//! is Phi+ iff `v + n` is odd.

mod circuit;
mod classify;
mod error_rates;
pub mod exact;
mod projection;
mod response;
mod swap;

pub use circuit::{build_analyzer, AnalyzerCircuit, CircuitElement};
pub use classify::{classify_clicks, GhzOutcome};
pub use error_rates::{estimate_error_rates, ErrorRateEstimate, ErrorRates, Stratum, MIN_SUCCESSES};
pub use exact::{exact_error_rates, exact_projection_success};
pub use projection::ghz_projection_success;
pub use response::{analyzer_response, check_click_table, ClassCheck, ClickDistribution, TableCheck};
pub use swap::{swap, SwapResult, Swapper, MAX_STATEVECTOR_USERS};
