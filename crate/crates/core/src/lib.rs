//! Core numerics for running maxima of φ-subgaussian random double arrays.
//!
//! The crate bundles five pieces of machinery that together describe how the
//! anchored-rectangle maxima of a centered random field `X_{k,n}` fluctuate
//! around the normalizer `a_{m,j} = g(ln(mj)) ψ⁻¹(ln(mj))`:
//!
//! * [`orlicz`] — Orlicz N-function families `(φ, p_φ, q_φ, ψ, ψ⁻¹)` with
//!   closed-form or tabulated evaluation and numeric Young–Fenchel
//!   conjugation.
//! * [`tails`] — φ-subgaussian norm estimation from a log-MGF, the
//!   `exp(−ψ(x/τ))` upper tail bound, and lower-tail models `(κ, r, C, C₀)`.
//! * [`conditions`] — numeric finiteness verdicts for the integral and series
//!   conditions that drive the convergence theorems.
//! * [`simulate`] — seeded, counter-addressable generation of Gaussian and
//!   reflected-Weibull double arrays.
//! * [`maxima`] — prefix maxima over all anchored windows, deviations
//!   `Y_{m,j}`, `Z_{m,j}`, their positive/negative parts, and argmax
//!   locations.
//! * [`montecarlo`] — replicated experiments: RMSE ladders, grouped
//!   `lim(max)` statistics, empirical rate series, and tail-bound checks.
//!
//! Everything is `no_std`-compatible (with `alloc`); the `std` feature is on
//! by default and only gates conveniences. Floating-point math goes through
//! [`math`] so results are identical with and without `std`.

#![cfg_attr(not(feature = "std"), no_std)]
#![deny(unsafe_code)]

extern crate alloc;

pub mod conditions;
pub mod math;
pub mod maxima;
pub mod montecarlo;
pub mod numeric;
pub mod orlicz;
pub mod simulate;
pub mod tails;

pub use conditions::{
    improper_integral, improper_integral_log, check_corollary2, check_theorem1, check_theorem2,
    check_theorem4, theorem3_partial_sum, FinitenessVerdict, Growth, NormalizerSpec, RateParams,
    Verdict,
};
pub use maxima::{argmax_locations, deviations, normalizer, prefix_max, window_series, RunningMaxGrid};
pub use montecarlo::{run_sequential, ExperimentConfig, ExperimentReport};
pub use orlicz::{
    gaussian_quadratic_family, generalized_inverse_q, make_power_family,
    make_weibull_conjugate_family, numeric_table_family, young_fenchel_numeric, FamilyKind,
    OrliczFamily,
};
pub use simulate::{sample, sample_gaussian, sample_reflected_weibull, DistKind, DoubleArray, WeibullParams};
pub use tails::{
    gaussian_lower_tail_model, ln_mgf_reflected_weibull, mgf_reflected_weibull, tau_phi_estimate,
    upper_tail_bound, weibull_lower_tail_model, weibull_norm_estimate, SubgaussianEstimate,
    TailModel,
};
