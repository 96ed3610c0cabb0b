//! φ-subgaussian norm estimation and tail machinery.
//!
//! The norm of a centered variable with even moment generating function is
//! recovered from the supremum representation
//! `τ_φ = sup_{λ>0} φ⁻¹(ln E e^{λX}) / λ`; the estimator here consumes a
//! log-MGF so that truncated series never overflow even at `λ = 10³`.
//! Lemma-style upper tail bounds `exp(−ψ(x/τ))` and the lower-tail models
//! `(κ, r, C, C₀, B, C₁, C₂, x₀)` used by the divergence-side theorems
//! complete the module.

use alloc::boxed::Box;
use alloc::vec::Vec;

use crate::math;
use crate::numeric;
use crate::orlicz::OrliczFamily;

/// Errors from norm estimation and tail evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum TailsError {
    /// Series truncation must keep at least one term (`M >= 1`).
    InvalidTruncation { m: u32 },
    /// The MGF series accumulated to a non-finite value.
    NonFiniteSeries { lambda: f64 },
    /// The supremum search kept hitting the bracket edge after widening.
    BoundaryMaximum { lambda: f64 },
    /// Upper tail bound is defined for `x > 0` only.
    NonPositiveX { x: f64 },
    /// Upper tail bound needs `τ > 0`.
    NonPositiveTau { tau: f64 },
}

impl core::fmt::Display for TailsError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            TailsError::InvalidTruncation { m } => write!(f, "series truncation M = {m} must be >= 1"),
            TailsError::NonFiniteSeries { lambda } => {
                write!(f, "MGF series not finite at lambda = {lambda}")
            }
            TailsError::BoundaryMaximum { lambda } => {
                write!(f, "objective maximum stuck at bracket edge lambda = {lambda}")
            }
            TailsError::NonPositiveX { x } => write!(f, "tail bound requires x > 0, got {x}"),
            TailsError::NonPositiveTau { tau } => write!(f, "tail bound requires tau > 0, got {tau}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for TailsError {}

/// Result of the supremum-representation norm estimate.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SubgaussianEstimate {
    /// Estimated norm `τ_φ`; zero for a degenerate (point-mass) variable.
    pub tau: f64,
    /// Argmax of `φ⁻¹(ln mgf(λ))/λ` over the searched half-line.
    pub lambda_star: f64,
    /// MGF series truncation that produced the log-MGF, when applicable.
    pub series_terms: Option<u32>,
    /// The objective was constant over the whole grid (e.g. the Gaussian
    /// case, where the representation is exact at every `λ`); `lambda_star`
    /// then reports the smallest grid point.
    pub flat: bool,
    /// The log-MGF was identically zero on the grid.
    pub degenerate: bool,
    /// Sampled `(λ, h(λ))` pairs for diagnostics, when requested.
    pub objective_curve: Option<Vec<(f64, f64)>>,
}

/// Search controls for [`tau_phi_estimate`]: a geometric coarse grid
/// followed by golden-section refinement around the best cell.
#[derive(Debug, Clone, Copy)]
pub struct TauSearch {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub grid_points: usize,
    /// Keep the sampled objective curve in the estimate.
    pub keep_curve: bool,
}

impl Default for TauSearch {
    fn default() -> Self {
        TauSearch { lambda_min: 1e-2, lambda_max: 1e3, grid_points: 200, keep_curve: false }
    }
}

/// Log of the truncated even MGF series of a reflected Weibull variable:
/// `ln Σ_{n=0}^{M} λ^{2n} b^{2n} Γ(1 + 2n/θ) / (2n)!`.
///
/// Terms are assembled from `ln Γ` and summed max-shifted with Kahan
/// compensation; the gamma factor and the factorial pull in opposite
/// directions violently for large `θ`, so no term is ever formed directly.
pub fn ln_mgf_reflected_weibull(
    lambda: f64,
    theta: f64,
    b: f64,
    m_terms: u32,
) -> Result<f64, TailsError> {
    if m_terms < 1 {
        return Err(TailsError::InvalidTruncation { m: m_terms });
    }
    let scale = lambda.abs() * b;
    if !scale.is_finite() {
        return Err(TailsError::NonFiniteSeries { lambda });
    }
    if scale == 0.0 {
        return Ok(0.0);
    }
    let ln_scale = math::ln(scale);
    let mut ln_terms = Vec::with_capacity(m_terms as usize + 1);
    let mut peak = 0.0_f64; // n = 0 term is exactly 1.
    ln_terms.push(0.0);
    for n in 1..=m_terms {
        let two_n = 2.0 * n as f64;
        let ln_t = two_n * ln_scale + math::ln_gamma(1.0 + two_n / theta)
            - math::ln_gamma(two_n + 1.0);
        ln_terms.push(ln_t);
        peak = peak.max(ln_t);
    }
    // Kahan-compensated sum of the shifted terms.
    let mut sum = 0.0_f64;
    let mut carry = 0.0_f64;
    for &ln_t in &ln_terms {
        let v = math::exp(ln_t - peak);
        let y = v - carry;
        let t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    let out = peak + math::ln(sum);
    if out.is_finite() {
        Ok(out)
    } else {
        Err(TailsError::NonFiniteSeries { lambda })
    }
}

/// Truncated even MGF series itself (`>= 1`); errors when the value does not
/// fit a finite `f64`, which signals `λ` or `M` out of the supported range.
pub fn mgf_reflected_weibull(
    lambda: f64,
    theta: f64,
    b: f64,
    m_terms: u32,
) -> Result<f64, TailsError> {
    let v = math::exp(ln_mgf_reflected_weibull(lambda, theta, b, m_terms)?);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(TailsError::NonFiniteSeries { lambda })
    }
}

/// Estimate `τ_φ` from an evaluable log-MGF by maximizing
/// `h(λ) = φ⁻¹(ln mgf(λ)) / λ` over `λ > 0` (the objective is even, so the
/// positive half-line suffices).
///
/// A 200-point geometric grid locates the best cell and golden-section
/// search refines it; `φ⁻¹` is the monotone bisection inverse of the
/// family. A maximizer that sits on the grid boundary widens the bracket a
/// hundredfold once and is a hard error if it persists.
pub fn tau_phi_estimate<F: Fn(f64) -> f64>(
    ln_mgf: F,
    family: &OrliczFamily,
    search: TauSearch,
) -> Result<SubgaussianEstimate, TailsError> {
    let h = |lambda: f64| -> f64 {
        let lm = ln_mgf(lambda);
        if lm.is_nan() {
            return f64::NAN;
        }
        family.phi_inverse(lm.max(0.0)) / lambda
    };
    let mut lo = search.lambda_min;
    let mut hi = search.lambda_max;
    let mut widened = false;
    loop {
        let n = search.grid_points.max(8);
        let (ln_lo, ln_hi) = (math::ln(lo), math::ln(hi));
        let mut grid = Vec::with_capacity(n);
        let mut values = Vec::with_capacity(n);
        let mut best = 0usize;
        let (mut vmin, mut vmax) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..n {
            let lambda = math::exp(ln_lo + (ln_hi - ln_lo) * i as f64 / (n - 1) as f64);
            let v = h(lambda);
            if v.is_nan() {
                return Err(TailsError::NonFiniteSeries { lambda });
            }
            if v > values.get(best).copied().unwrap_or(f64::NEG_INFINITY) {
                best = i;
            }
            vmin = vmin.min(v);
            vmax = vmax.max(v);
            grid.push(lambda);
            values.push(v);
        }
        let curve = search
            .keep_curve
            .then(|| grid.iter().copied().zip(values.iter().copied()).collect());

        if vmax <= 1e-15 {
            return Ok(SubgaussianEstimate {
                tau: 0.0,
                lambda_star: grid[0],
                series_terms: None,
                flat: false,
                degenerate: true,
                objective_curve: curve,
            });
        }
        if (vmax - vmin) <= 1e-9 * vmax.abs() {
            return Ok(SubgaussianEstimate {
                tau: values[0],
                lambda_star: grid[0],
                series_terms: None,
                flat: true,
                degenerate: false,
                objective_curve: curve,
            });
        }
        if best == 0 || best == n - 1 {
            if widened {
                return Err(TailsError::BoundaryMaximum { lambda: grid[best] });
            }
            widened = true;
            lo /= 1e2;
            hi *= 1e2;
            continue;
        }
        let (bl, bh) = (grid[best - 1], grid[best + 1]);
        let (lambda_star, tau) = numeric::golden_max(h, bl, bh, 1e-9);
        return Ok(SubgaussianEstimate {
            tau,
            lambda_star,
            series_terms: None,
            flat: false,
            degenerate: false,
            objective_curve: curve,
        });
    }
}

/// Norm estimate for the reflected-Weibull family itself: truncated series
/// log-MGF against the matching family.
pub fn weibull_norm_estimate(
    theta: f64,
    b: f64,
    m_terms: u32,
    search: TauSearch,
) -> Result<SubgaussianEstimate, TailsError> {
    ln_mgf_reflected_weibull(1.0, theta, b, m_terms)?;
    let family = OrliczFamily::from_kind(crate::orlicz::FamilyKind::WeibullConjugate { theta, b })
        .map_err(|_| TailsError::NonFiniteSeries { lambda: 0.0 })?;
    let ln_mgf = move |lambda: f64| {
        ln_mgf_reflected_weibull(lambda, theta, b, m_terms).unwrap_or(f64::NAN)
    };
    let mut est = tau_phi_estimate(ln_mgf, &family, search)?;
    est.series_terms = Some(m_terms);
    Ok(est)
}

/// Upper tail bound `P(X >= x) <= exp(−ψ(x/τ))` for a φ-subgaussian `X`
/// with norm `τ`; stated for `x > 0`.
pub fn upper_tail_bound(family: &OrliczFamily, tau: f64, x: f64) -> Result<f64, TailsError> {
    if !(x > 0.0) {
        return Err(TailsError::NonPositiveX { x });
    }
    if !(tau > 0.0) {
        return Err(TailsError::NonPositiveTau { tau });
    }
    Ok(math::exp(-family.psi(x / tau)))
}

type RealFn = Box<dyn Fn(f64) -> f64 + Send + Sync>;

/// Lower-tail specification: an increasing positive `κ` with non-decreasing
/// derivative `r = κ'`, the constant `C` of the bound
/// `P(X >= x) >= C e^{−κ(x)}`, the slack function `C₀`, and the constants
/// `(B, C₁, C₂, x₀)` entering the divergence-side rate conditions.
pub struct TailModel {
    kappa: RealFn,
    r_deriv: RealFn,
    c0: RealFn,
    /// Lower-tail constant `C`.
    pub c: f64,
    /// Exponent factor `B` in `exp(−κ(x)) >= C₁ exp(−B ψ(x))`.
    pub b_factor: f64,
    /// Scale constant `C₁` of the same comparison.
    pub c1: f64,
    /// Claimed bound on `q_φ(x+ε)/ψ(x)` for `x > x₀`.
    pub c2: f64,
    /// Left edge of the verification range.
    pub x0: f64,
}

impl TailModel {
    pub fn new(
        kappa: RealFn,
        r_deriv: RealFn,
        c0: RealFn,
        c: f64,
        b_factor: f64,
        c1: f64,
        c2: f64,
        x0: f64,
    ) -> Self {
        TailModel { kappa, r_deriv, c0, c, b_factor, c1, c2, x0 }
    }

    pub fn kappa(&self, x: f64) -> f64 {
        (self.kappa)(x)
    }

    /// Derivative `r(x) = κ'(x)`.
    pub fn r(&self, x: f64) -> f64 {
        (self.r_deriv)(x)
    }

    pub fn c0(&self, x: f64) -> f64 {
        (self.c0)(x)
    }

    /// Check κ increasing and positive and r non-decreasing on a log grid.
    /// Returns the first offending abscissa.
    pub fn validate(&self, lo: f64, hi: f64, samples: usize) -> Result<(), f64> {
        let n = samples.max(2);
        let (la, lb) = (math::ln(lo), math::ln(hi));
        let mut prev_k = f64::NEG_INFINITY;
        let mut prev_r = f64::NEG_INFINITY;
        for i in 0..n {
            let x = math::exp(la + (lb - la) * i as f64 / (n - 1) as f64);
            let k = self.kappa(x);
            let r = self.r(x);
            if !(k > 0.0) || k < prev_k || r + 1e-12 * r.abs().max(1.0) < prev_r {
                return Err(x);
            }
            prev_k = k;
            prev_r = r;
        }
        Ok(())
    }
}

impl core::fmt::Debug for TailModel {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("TailModel")
            .field("c", &self.c)
            .field("b_factor", &self.b_factor)
            .field("c1", &self.c1)
            .field("c2", &self.c2)
            .field("x0", &self.x0)
            .finish_non_exhaustive()
    }
}

/// Standard-normal lower-tail model built from the two-sided estimate
/// `P(N(0,1) >= x) >= √(2/π) · e^{−x²/2} / (√(4+x²)+x)`:
/// `κ(x) = x²/2 + ln(√(4+x²)+x)`, `r(x) = x + 1/√(4+x²)`,
/// `C = √(2/π)`, `C₀(x) = −ln(x+√(4+x²))`.
///
/// The rate constants certify `e^{−κ} >= C₁ e^{−B ψ}` with `B = 1.1`,
/// `C₁ = 1` from `x₀ = 8` on, and `C₂ = 0.3` bounds `q(x+ε)/ψ(x)` there for
/// `ε <= 1.6`; the condition checker re-verifies both on its own grid.
pub fn gaussian_lower_tail_model() -> TailModel {
    TailModel::new(
        Box::new(|x| 0.5 * x * x + math::ln(math::sqrt(4.0 + x * x) + x)),
        Box::new(|x| x + 1.0 / math::sqrt(4.0 + x * x)),
        Box::new(|x| -math::ln(x + math::sqrt(4.0 + x * x))),
        math::sqrt(2.0 / core::f64::consts::PI),
        1.1,
        1.0,
        0.3,
        8.0,
    )
}

/// Reflected-Weibull lower-tail model: the exact right tail is
/// `P(X >= x) = ½ e^{−(x/b)^θ}`, so `κ = ψ`, `C = ½`, `r = q_φ`, and
/// `C₀ ≡ 0` (valid whenever the norm-growth constant is at most one, where
/// `ψ(x) − κ(cx) = (1−c^θ)(x/b)^θ >= 0`).
///
/// Comparison constants are exact with `B = C₁ = 1`; `C₂` is the ratio
/// bound at `x₀ = 2b` evaluated with unit shift, valid for `ε <= 1`.
pub fn weibull_lower_tail_model(theta: f64, b: f64) -> TailModel {
    let bt = math::pow(b, theta);
    let q = move |x: f64| theta * math::pow(x.max(0.0), theta - 1.0) / bt;
    let psi = move |x: f64| math::pow(x.max(0.0) / b, theta);
    let x0 = 2.0 * b;
    let c2 = q(x0 + 1.0) / psi(x0);
    TailModel::new(
        Box::new(psi),
        Box::new(q),
        Box::new(|_| 0.0),
        0.5,
        1.0,
        1.0,
        c2,
        x0,
    )
}

/// Model with `κ = ψ` of the given family and `r = q_φ` (so `B = C₁ = 1`
/// identically); `C₂` is measured as the grid supremum of `q(x+ε)/ψ(x)`
/// over `[x₀, 1024·x₀]` for the given shift.
pub fn kappa_psi_model(family: &OrliczFamily, c: f64, x0: f64, eps_for_c2: f64) -> TailModel {
    let f1 = family.clone();
    let f2 = family.clone();
    let f3 = family.clone();
    let mut c2 = 0.0_f64;
    let n = 512;
    for i in 0..=n {
        let x = x0 * math::pow(2.0, 10.0 * i as f64 / n as f64);
        c2 = c2.max(f3.q_inverse(x + eps_for_c2) / f3.psi(x));
    }
    TailModel::new(
        Box::new(move |x| f1.psi(x)),
        Box::new(move |x| f2.q_inverse(x)),
        Box::new(|_| 0.0),
        c,
        1.0,
        1.0,
        c2,
        x0,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orlicz::{gaussian_quadratic_family, make_weibull_conjugate_family};

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn mgf_at_zero_is_one() {
        assert_eq!(ln_mgf_reflected_weibull(0.0, 9.0, 1.25, 50).unwrap(), 0.0);
        assert_eq!(mgf_reflected_weibull(0.0, 3.0, 0.7, 10).unwrap(), 1.0);
    }

    #[test]
    fn mgf_rejects_zero_truncation() {
        assert!(matches!(
            ln_mgf_reflected_weibull(1.0, 9.0, 1.25, 0),
            Err(TailsError::InvalidTruncation { .. })
        ));
    }

    #[test]
    fn mgf_matches_quadrature_oracle() {
        // E e^{λX} for the reflected Weibull, by direct integration of
        // e^{λx} p(x) with p(x) = (θ/2b)(|x|/b)^{θ-1} e^{-(|x|/b)^θ}.
        let (theta, b, lambda) = (2.0, 1.0, 1.0);
        let density = move |x: f64| {
            theta / (2.0 * b) * math::pow(x.abs() / b, theta - 1.0)
                * math::exp(-math::pow(x.abs() / b, theta))
        };
        let oracle =
            numeric::integrate(&|x: f64| math::exp(lambda * x) * density(x), -10.0, 10.0, 1e-12, 40)
                .unwrap();
        let series = mgf_reflected_weibull(lambda, theta, b, 50).unwrap();
        assert!(rel_err(series, oracle) < 1e-8, "{series} vs {oracle}");
    }

    #[test]
    fn mgf_is_overflow_free_in_log_space_at_large_lambda() {
        let v = ln_mgf_reflected_weibull(1e3, 9.0, 1.25, 50).unwrap();
        assert!(v.is_finite() && v > 100.0);
        // The plain value genuinely does not fit and must say so.
        assert!(matches!(
            mgf_reflected_weibull(1e3, 9.0, 1.25, 50),
            Err(TailsError::NonFiniteSeries { .. })
        ));
    }

    #[test]
    fn weibull_norm_reproduces_reference_values() {
        let est = weibull_norm_estimate(9.0, 1.25, 50, TauSearch::default()).unwrap();
        assert!(est.tau > 0.996 && est.tau < 0.998, "tau = {}", est.tau);
        assert!(
            est.lambda_star > 8.57 && est.lambda_star < 8.59,
            "lambda_star = {}",
            est.lambda_star
        );
        assert!(!est.flat && !est.degenerate);
        assert_eq!(est.series_terms, Some(50));
    }

    #[test]
    fn norm_is_stable_under_series_extension() {
        let a = weibull_norm_estimate(9.0, 1.25, 50, TauSearch::default()).unwrap();
        let b = weibull_norm_estimate(9.0, 1.25, 100, TauSearch::default()).unwrap();
        assert!((a.tau - b.tau).abs() < 1e-6);
        // And the truncated log-MGF itself is stable for |lambda| <= 20.
        for i in 0..=40 {
            let lambda = 0.5 + 19.5 * i as f64 / 40.0;
            let m50 = ln_mgf_reflected_weibull(lambda, 9.0, 1.25, 50).unwrap();
            let m100 = ln_mgf_reflected_weibull(lambda, 9.0, 1.25, 100).unwrap();
            assert!((m50 - m100).abs() <= 1e-9 * m50.abs().max(1.0));
        }
    }

    #[test]
    fn gaussian_objective_is_flat_at_one() {
        let family = gaussian_quadratic_family();
        let est = tau_phi_estimate(|l| 0.5 * l * l, &family, TauSearch::default()).unwrap();
        assert!(est.flat);
        assert!((est.tau - 1.0).abs() < 1e-9);
    }

    #[test]
    fn point_mass_is_degenerate() {
        let family = gaussian_quadratic_family();
        let est = tau_phi_estimate(|_| 0.0, &family, TauSearch::default()).unwrap();
        assert!(est.degenerate);
        assert_eq!(est.tau, 0.0);
    }

    #[test]
    fn objective_curve_is_recorded_on_request() {
        let search = TauSearch { keep_curve: true, ..TauSearch::default() };
        let est = weibull_norm_estimate(9.0, 1.25, 50, search).unwrap();
        let curve = est.objective_curve.unwrap();
        assert_eq!(curve.len(), 200);
        let best = curve.iter().fold(0.0_f64, |m, &(_, v)| m.max(v));
        assert!(est.tau >= best - 1e-12, "refined value dominates the grid");
    }

    #[test]
    fn upper_tail_bound_values_and_domain() {
        let gauss = gaussian_quadratic_family();
        assert!(rel_err(upper_tail_bound(&gauss, 1.0, 2.0).unwrap(), math::exp(-2.0)) < 1e-12);
        let weib = make_weibull_conjugate_family(9.0, 1.25).unwrap();
        assert!(rel_err(upper_tail_bound(&weib, 1.0, 1.25).unwrap(), math::exp(-1.0)) < 1e-12);
        assert!(upper_tail_bound(&gauss, 1.0, 0.0).is_err());
        assert!(upper_tail_bound(&gauss, 0.0, 1.0).is_err());
        // Monotone directions: non-increasing in x, non-decreasing in tau.
        let b1 = upper_tail_bound(&gauss, 1.0, 1.0).unwrap();
        let b2 = upper_tail_bound(&gauss, 1.0, 2.0).unwrap();
        let b3 = upper_tail_bound(&gauss, 2.0, 2.0).unwrap();
        assert!(b2 <= b1 && b3 >= b2);
    }

    #[test]
    fn gaussian_model_closed_forms() {
        let model = gaussian_lower_tail_model();
        assert!(rel_err(model.kappa(0.0), math::ln(2.0)) < 1e-12);
        assert!(rel_err(model.r(2.0), 2.0 + 1.0 / math::sqrt(8.0)) < 1e-12);
        assert!(model.validate(1e-3, 1e3, 400).is_ok());
        // Birnbaum-type bound against the exact normal tail.
        for &x in &[0.5, 1.0, 2.0, 4.0] {
            let exact = math::normal_sf(x);
            let lower = model.c * math::exp(-model.kappa(x));
            assert!(exact >= lower, "x = {x}: {exact} < {lower}");
        }
    }

    #[test]
    fn weibull_model_closed_forms() {
        let model = weibull_lower_tail_model(9.0, 1.25);
        assert!(rel_err(model.kappa(1.25), 1.0) < 1e-12);
        assert_eq!(model.c0(3.0), 0.0);
        assert!(model.validate(1e-2, 1e2, 400).is_ok());
        assert_eq!(model.b_factor, 1.0);
        assert_eq!(model.c1, 1.0);
    }

    #[test]
    fn kappa_psi_model_measures_ratio_supremum() {
        // For the quadratic family, q(x+eps)/psi(x) = 2(x+eps)/x^2 is
        // decreasing, so the supremum over x > x0 sits at x0.
        let fam = gaussian_quadratic_family();
        let model = kappa_psi_model(&fam, 1.0, 1.0, 0.5);
        let expected = 2.0 * (1.0 + 0.5) / 1.0;
        assert!(rel_err(model.c2, expected) < 1e-3, "c2 = {}", model.c2);
    }
}
