//! Orlicz N-function families and their conjugate apparatus.
//!
//! A family bundles five evaluable pieces: the N-function `φ`, its density
//! `p_φ` (so `φ(x) = ∫₀^|x| p_φ`), the generalized inverse `q_φ` of the
//! density, the Young–Fenchel transform `ψ` (with `ψ' = q_φ`), and `ψ⁻¹`
//! restricted to the nonnegative axis. All evaluations are even in `x` by
//! construction.
//!
//! Built-in kinds are closed-form; [`FamilyKind::NumericTable`] supports a
//! user-supplied convex sample table with exact piecewise-linear conjugation.

use alloc::vec::Vec;

use crate::math;
use crate::numeric::{self, InvertOpts, NumericError};

/// Descriptor for constructing an [`OrliczFamily`]. This is plain data and
/// maps one-to-one onto the JSON form, e.g. `{"kind":"weibull","theta":9.0,"b":1.25}`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "lowercase"))]
pub enum FamilyKind {
    /// `φ(x) = |x|^r / r`, `ψ(x) = |x|^q / q` with `1/r + 1/q = 1`.
    Power { r: f64 },
    /// `φ(x) = ψ(x) = x²/2`; the self-conjugate quadratic.
    #[cfg_attr(feature = "serde", serde(rename = "gaussian"))]
    GaussianQuadratic,
    /// Reflected-Weibull pair with tail exponent `ψ(x) = (x/b)^θ`.
    #[cfg_attr(feature = "serde", serde(rename = "weibull"))]
    WeibullConjugate { theta: f64, b: f64 },
    /// Sampled `(x, φ(x))` table with monotone convex piecewise-linear
    /// interpolation.
    #[cfg_attr(feature = "serde", serde(rename = "table"))]
    NumericTable { xs: Vec<f64>, phis: Vec<f64> },
}

/// Construction errors for [`OrliczFamily`].
#[derive(Debug, Clone, PartialEq)]
pub enum OrliczError {
    /// Power exponent must satisfy `r > 1` for superlinear growth.
    ExponentOutOfRange { r: f64 },
    /// Weibull shape must satisfy `θ > 1`.
    ThetaOutOfRange { theta: f64 },
    /// Weibull scale must satisfy `b > 0`.
    ScaleOutOfRange { b: f64 },
    /// Table needs at least two samples and equal-length columns.
    TableShape,
    /// Table abscissae must be finite, nonnegative, strictly increasing.
    TableNotIncreasing { index: usize },
    /// Table values must be finite, nonnegative, and anchored at `φ(0) = 0`.
    TableNotAnchored,
    /// Secant slopes must be nonnegative and non-decreasing (convexity).
    TableNotConvex { index: usize },
}

impl core::fmt::Display for OrliczError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            OrliczError::ExponentOutOfRange { r } => {
                write!(f, "power exponent r = {r} is not > 1")
            }
            OrliczError::ThetaOutOfRange { theta } => {
                write!(f, "weibull shape theta = {theta} is not > 1")
            }
            OrliczError::ScaleOutOfRange { b } => write!(f, "weibull scale b = {b} is not > 0"),
            OrliczError::TableShape => write!(f, "table needs >= 2 samples of equal length"),
            OrliczError::TableNotIncreasing { index } => {
                write!(f, "table xs not strictly increasing at index {index}")
            }
            OrliczError::TableNotAnchored => write!(f, "table must start at (0, 0)"),
            OrliczError::TableNotConvex { index } => {
                write!(f, "table slopes decrease at index {index}; not convex")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for OrliczError {}

/// Preprocessed sample table: vertices plus secant slopes.
#[derive(Debug, Clone, PartialEq)]
struct TableData {
    xs: Vec<f64>,
    phis: Vec<f64>,
    slopes: Vec<f64>,
}

/// A conjugate bundle `(φ, p_φ, q_φ, ψ, ψ⁻¹)` with even, immutable
/// evaluation. Values are safe to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct OrliczFamily {
    kind: FamilyKind,
    table: Option<TableData>,
}

impl OrliczFamily {
    /// Validate a descriptor and build the family.
    pub fn from_kind(kind: FamilyKind) -> Result<Self, OrliczError> {
        match &kind {
            FamilyKind::Power { r } => {
                if !(r.is_finite() && *r > 1.0) {
                    return Err(OrliczError::ExponentOutOfRange { r: *r });
                }
            }
            FamilyKind::GaussianQuadratic => {}
            FamilyKind::WeibullConjugate { theta, b } => {
                if !(theta.is_finite() && *theta > 1.0) {
                    return Err(OrliczError::ThetaOutOfRange { theta: *theta });
                }
                if !(b.is_finite() && *b > 0.0) {
                    return Err(OrliczError::ScaleOutOfRange { b: *b });
                }
            }
            FamilyKind::NumericTable { xs, phis } => {
                let table = build_table(xs, phis)?;
                return Ok(OrliczFamily { kind, table: Some(table) });
            }
        }
        Ok(OrliczFamily { kind, table: None })
    }

    pub fn kind(&self) -> &FamilyKind {
        &self.kind
    }

    /// The N-function `φ(x)`; even in `x`.
    pub fn phi(&self, x: f64) -> f64 {
        let x = x.abs();
        match &self.kind {
            FamilyKind::Power { r } => math::pow(x, *r) / r,
            FamilyKind::GaussianQuadratic => 0.5 * x * x,
            FamilyKind::WeibullConjugate { theta, b } => {
                let (coeff, p) = weibull_phi_constants(*theta, *b);
                coeff * math::pow(x, p)
            }
            FamilyKind::NumericTable { .. } => table_eval(self.table.as_ref().unwrap(), x),
        }
    }

    /// Density of `φ`: the non-decreasing `p_φ` with `φ(x) = ∫₀^|x| p_φ`.
    pub fn p_density(&self, t: f64) -> f64 {
        let t = t.max(0.0);
        match &self.kind {
            FamilyKind::Power { r } => math::pow(t, r - 1.0),
            FamilyKind::GaussianQuadratic => t,
            FamilyKind::WeibullConjugate { theta, b } => {
                let (coeff, p) = weibull_phi_constants(*theta, *b);
                coeff * p * math::pow(t, p - 1.0)
            }
            FamilyKind::NumericTable { .. } => table_slope_at(self.table.as_ref().unwrap(), t),
        }
    }

    /// Generalized inverse `q_φ(t) = sup{u >= 0 : p_φ(u) <= t}`; also the
    /// density of `ψ`.
    pub fn q_inverse(&self, t: f64) -> f64 {
        let t = t.max(0.0);
        match &self.kind {
            FamilyKind::Power { r } => math::pow(t, 1.0 / (r - 1.0)),
            FamilyKind::GaussianQuadratic => t,
            FamilyKind::WeibullConjugate { theta, b } => {
                theta * math::pow(t, theta - 1.0) / math::pow(*b, *theta)
            }
            FamilyKind::NumericTable { .. } => {
                table_generalized_inverse(self.table.as_ref().unwrap(), t)
            }
        }
    }

    /// Young–Fenchel transform `ψ(x)`; even in `x`. For table families this
    /// is the exact piecewise-linear conjugate, `+inf` past the last slope.
    pub fn psi(&self, x: f64) -> f64 {
        let x = x.abs();
        match &self.kind {
            FamilyKind::Power { r } => {
                let q = r / (r - 1.0);
                math::pow(x, q) / q
            }
            FamilyKind::GaussianQuadratic => 0.5 * x * x,
            FamilyKind::WeibullConjugate { theta, b } => math::pow(x / b, *theta),
            FamilyKind::NumericTable { .. } => table_conjugate(self.table.as_ref().unwrap(), x),
        }
    }

    /// Inverse of `ψ` on the nonnegative axis, closed-form where available,
    /// bisection otherwise. Negative `y` is clamped to zero.
    pub fn psi_inverse(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        match &self.kind {
            FamilyKind::Power { r } => {
                let q = r / (r - 1.0);
                math::pow(q * y, 1.0 / q)
            }
            FamilyKind::GaussianQuadratic => math::sqrt(2.0 * y),
            FamilyKind::WeibullConjugate { theta, b } => b * math::pow(y, 1.0 / theta),
            FamilyKind::NumericTable { .. } => {
                let table = self.table.as_ref().unwrap();
                let s_last = *table.slopes.last().unwrap();
                let cap = table_conjugate(table, s_last);
                if y > cap {
                    return f64::INFINITY;
                }
                numeric::invert_increasing(|x| table_conjugate(table, x), y, InvertOpts::default())
            }
        }
    }

    /// Inverse of `φ` on the nonnegative axis by monotone bisection, to
    /// `1e-12` absolute (plus `1e-13` relative) on the `φ` scale.
    pub fn phi_inverse(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        numeric::invert_increasing(|x| self.phi(x), y, InvertOpts::default())
    }
}

/// `φ(x) = coeff · x^p` for the reflected-Weibull family in the classical
/// normalization: `coeff = ((θ-1)/θ) (θ/b^θ)^{1/(θ-1)}`, `p = θ/(θ-1)`.
///
/// Note: the exact convex conjugate of `ψ(x) = (x/b)^θ` carries `(b^θ/θ)`
/// instead of `(θ/b^θ)` inside the root, so `sup_y(xy − φ(y))` evaluates to
/// `b^θ x^θ / θ²`, not to `ψ` itself. The classical normalization is kept
/// because the subgaussian norm of the reflected-Weibull field is defined
/// against this `φ` downstream.
fn weibull_phi_constants(theta: f64, b: f64) -> (f64, f64) {
    let p = theta / (theta - 1.0);
    let coeff =
        (theta - 1.0) / theta * math::pow(theta / math::pow(b, theta), 1.0 / (theta - 1.0));
    (coeff, p)
}

/// `φ(x) = |x|^r / r` with conjugate `ψ(x) = |x|^q / q`, `1/r + 1/q = 1`.
/// Rejects `r <= 1` (not superlinear, hence not an N-function).
pub fn make_power_family(r: f64) -> Result<OrliczFamily, OrliczError> {
    OrliczFamily::from_kind(FamilyKind::Power { r })
}

/// The self-conjugate quadratic `φ(x) = ψ(x) = x²/2` (so `ψ⁻¹(y) = √(2y)`).
pub fn gaussian_quadratic_family() -> OrliczFamily {
    OrliczFamily::from_kind(FamilyKind::GaussianQuadratic).unwrap()
}

/// Reflected-Weibull family with tail exponent `ψ(x) = (x/b)^θ` and density
/// `q_φ(x) = θ x^{θ-1} / b^θ`. See [`weibull_phi_constants`] for the `φ`
/// normalization caveat.
pub fn make_weibull_conjugate_family(theta: f64, b: f64) -> Result<OrliczFamily, OrliczError> {
    OrliczFamily::from_kind(FamilyKind::WeibullConjugate { theta, b })
}

/// Family from `(x, φ(x))` samples. The table must be anchored at the
/// origin, strictly increasing in `x`, and convex; evaluation is linear
/// between samples and extends the last slope beyond them.
pub fn numeric_table_family(xs: Vec<f64>, phis: Vec<f64>) -> Result<OrliczFamily, OrliczError> {
    OrliczFamily::from_kind(FamilyKind::NumericTable { xs, phis })
}

fn build_table(xs: &[f64], phis: &[f64]) -> Result<TableData, OrliczError> {
    if xs.len() != phis.len() || xs.len() < 2 {
        return Err(OrliczError::TableShape);
    }
    for (i, &x) in xs.iter().enumerate() {
        if !x.is_finite() || x < 0.0 {
            return Err(OrliczError::TableNotIncreasing { index: i });
        }
        if i > 0 && x <= xs[i - 1] {
            return Err(OrliczError::TableNotIncreasing { index: i });
        }
    }
    if phis.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(OrliczError::TableNotAnchored);
    }
    let (mut xs, mut phis) = (xs.to_vec(), phis.to_vec());
    if xs[0] > 0.0 {
        xs.insert(0, 0.0);
        phis.insert(0, 0.0);
    } else if phis[0] != 0.0 {
        return Err(OrliczError::TableNotAnchored);
    }
    let mut slopes = Vec::with_capacity(xs.len() - 1);
    for i in 0..xs.len() - 1 {
        let s = (phis[i + 1] - phis[i]) / (xs[i + 1] - xs[i]);
        if s < 0.0 || (i > 0 && s < slopes[i - 1]) {
            return Err(OrliczError::TableNotConvex { index: i });
        }
        slopes.push(s);
    }
    Ok(TableData { xs, phis, slopes })
}

fn table_eval(t: &TableData, x: f64) -> f64 {
    let n = t.xs.len();
    if x >= t.xs[n - 1] {
        return t.phis[n - 1] + t.slopes[n - 2] * (x - t.xs[n - 1]);
    }
    let i = t.xs.partition_point(|&v| v <= x).max(1) - 1;
    t.phis[i] + t.slopes[i] * (x - t.xs[i])
}

fn table_slope_at(t: &TableData, u: f64) -> f64 {
    let n = t.xs.len();
    if u >= t.xs[n - 1] {
        return t.slopes[n - 2];
    }
    let i = t.xs.partition_point(|&v| v <= u).max(1) - 1;
    t.slopes[i]
}

fn table_generalized_inverse(t: &TableData, level: f64) -> f64 {
    let last = *t.slopes.last().unwrap();
    if level >= last {
        return f64::INFINITY;
    }
    // Largest interval whose slope stays <= level; its right edge is the sup.
    let i = t.slopes.partition_point(|&s| s <= level);
    t.xs[i]
}

/// Exact conjugate of the piecewise-linear interpolant:
/// `ψ(x) = x·x_i − φ_i` on the slope cell containing `x`.
fn table_conjugate(t: &TableData, x: f64) -> f64 {
    let last = *t.slopes.last().unwrap();
    if x > last {
        return f64::INFINITY;
    }
    let i = t.slopes.partition_point(|&s| s < x);
    (x * t.xs[i] - t.phis[i]).max(0.0)
}

/// Numeric Young–Fenchel transform `sup_{y}(x·y − φ(y))` for an evaluable
/// N-function `φ`; even in `x`.
///
/// The objective is concave, so an expanding bracket followed by
/// golden-section search is exact up to the `1e-10` relative tolerance.
/// Expansion past the cap signals a `φ` without superlinear growth.
pub fn young_fenchel_numeric<F: Fn(f64) -> f64>(phi: F, x: f64) -> Result<f64, NumericError> {
    let x = x.abs();
    let objective = |y: f64| x * y - phi(y);
    let (_, value) = numeric::maximize_concave(objective, 1e180, 1e-10)?;
    Ok(value.max(0.0))
}

/// Generalized inverse `q_φ(t) = sup{u >= 0 : p_φ(u) <= t}` for an evaluable
/// non-decreasing density, resolving plateaus to their rightmost point.
pub fn generalized_inverse_q<P: Fn(f64) -> f64>(p_density: P, t: f64) -> f64 {
    numeric::generalized_inverse(p_density, t.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    /// Deterministic log-spaced grid over [lo, hi].
    fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        let (la, lb) = (math::ln(lo), math::ln(hi));
        (0..n)
            .map(|i| math::exp(la + (lb - la) * i as f64 / (n - 1) as f64))
            .collect()
    }

    #[test]
    fn power_family_quadratic_is_self_conjugate() {
        let fam = make_power_family(2.0).unwrap();
        assert_eq!(fam.phi(3.0), 4.5);
        assert_eq!(fam.psi(3.0), 4.5);
        assert_eq!(fam.phi(0.0), 0.0);
        assert_eq!(fam.psi(0.0), 0.0);
        assert_eq!(fam.phi(-3.0), fam.phi(3.0));
    }

    #[test]
    fn power_family_rejects_sublinear_exponent() {
        assert!(make_power_family(1.0).is_err());
        assert!(make_power_family(0.5).is_err());
        assert!(make_power_family(f64::NAN).is_err());
    }

    #[test]
    fn cubic_conjugate_matches_grid_maximization() {
        // Independent oracle: brute grid max of 2y - y^3/3 over [0, 10].
        let fam = make_power_family(3.0).unwrap();
        let mut best = 0.0_f64;
        let mut y = 0.0;
        while y <= 10.0 {
            best = best.max(2.0 * y - y * y * y / 3.0);
            y += 1e-4;
        }
        let expected = math::pow(2.0, 1.5) / 1.5;
        assert!(rel_err(best, expected) < 1e-6);
        assert!(rel_err(fam.psi(2.0), expected) < 1e-12);
        let numeric = young_fenchel_numeric(|v| fam.phi(v), 2.0).unwrap();
        assert!(rel_err(numeric, expected) < 1e-9);
    }

    #[test]
    fn young_fenchel_quadratic_examples() {
        let v = young_fenchel_numeric(|y| 0.5 * y * y, 3.0).unwrap();
        assert!(rel_err(v, 4.5) < 1e-9);
        let v0 = young_fenchel_numeric(|y| 0.5 * y * y, 0.0).unwrap();
        assert!(v0.abs() < 1e-12);
        let vn = young_fenchel_numeric(|y| 0.5 * y * y, -3.0).unwrap();
        assert!(rel_err(vn, 4.5) < 1e-9, "conjugate must be even");
    }

    #[test]
    fn young_fenchel_rejects_linear_phi() {
        assert!(young_fenchel_numeric(|y| y, 5.0).is_err());
    }

    #[test]
    fn weibull_family_tail_exponent_values() {
        let fam = make_weibull_conjugate_family(9.0, 1.25).unwrap();
        assert!(rel_err(fam.psi(1.25), 1.0) < 1e-12);
        let x = 1.5_f64;
        assert!(rel_err(fam.psi(x), math::pow(1.5 / 1.25, 9.0)) < 1e-12);
        // q_phi(x) = theta x^{theta-1} / b^theta
        assert!(rel_err(fam.q_inverse(1.25), 9.0 / 1.25) < 1e-12);
    }

    #[test]
    fn weibull_psi_inverse_root_finding() {
        let fam = make_weibull_conjugate_family(9.0, 1.25).unwrap();
        let y = math::ln(1e6);
        let x = numeric::invert_increasing(|v| fam.psi(v), y, InvertOpts::default());
        assert!((fam.psi(x) - y).abs() < 1e-10);
        assert!(rel_err(x, fam.psi_inverse(y)) < 1e-10);
        assert!(rel_err(fam.psi_inverse(math::ln(4.0)), 1.25 * math::pow(math::ln(4.0), 1.0 / 9.0)) < 1e-12);
    }

    #[test]
    fn weibull_phi_conjugate_normalization() {
        // The classical phi normalization conjugates to b^t x^t / t^2, not to
        // psi; and the exact conjugate partner of psi carries the reciprocal
        // constant. Both identities are pinned here against the numeric
        // transform.
        let (theta, b) = (9.0_f64, 1.25_f64);
        let fam = make_weibull_conjugate_family(theta, b).unwrap();
        let bt = math::pow(b, theta);
        for &x in &[0.5, 1.0, 1.5, 3.0] {
            let numeric = young_fenchel_numeric(|y| fam.phi(y), x).unwrap();
            let conj_of_classical = bt * math::pow(x, theta) / (theta * theta);
            assert!(
                rel_err(numeric, conj_of_classical) < 1e-6,
                "x={x}: {numeric} vs {conj_of_classical}"
            );

            let p = theta / (theta - 1.0);
            let exact_coeff =
                (theta - 1.0) / theta * math::pow(bt / theta, 1.0 / (theta - 1.0));
            let exact_partner = |y: f64| exact_coeff * math::pow(y.abs(), p);
            let numeric2 = young_fenchel_numeric(exact_partner, x).unwrap();
            assert!(
                rel_err(numeric2, fam.psi(x)) < 1e-6,
                "x={x}: {numeric2} vs {}",
                fam.psi(x)
            );
        }
    }

    #[test]
    fn weibull_rejects_bad_parameters() {
        assert!(make_weibull_conjugate_family(1.0, 1.25).is_err());
        assert!(make_weibull_conjugate_family(9.0, 0.0).is_err());
        assert!(make_weibull_conjugate_family(9.0, -1.0).is_err());
    }

    #[test]
    fn generalized_inverse_examples() {
        // Identity density (quadratic family).
        assert!(rel_err(generalized_inverse_q(|u| u, 2.5), 2.5) < 1e-9);
        // p(u) = u^2 (power r = 3): invert u^2 = 4.
        assert!(rel_err(generalized_inverse_q(|u| u * u, 4.0), 2.0) < 1e-9);
        let fam = make_power_family(3.0).unwrap();
        assert!(rel_err(fam.q_inverse(4.0), 2.0) < 1e-12);
    }

    #[test]
    fn psi_inverse_examples() {
        let gauss = gaussian_quadratic_family();
        assert!(rel_err(gauss.psi_inverse(2.0), 2.0) < 1e-12);
        assert_eq!(gauss.psi_inverse(0.0), 0.0);
        assert_eq!(gauss.psi_inverse(-1.0), 0.0);
    }

    #[test]
    fn phi_inverse_round_trips() {
        for fam in [
            make_power_family(1.5).unwrap(),
            gaussian_quadratic_family(),
            make_weibull_conjugate_family(9.0, 1.25).unwrap(),
        ] {
            for &y in &[1e-3, 0.1, 1.0, 7.3, 100.0, 2000.0] {
                let x = fam.phi_inverse(y);
                assert!(
                    (fam.phi(x) - y).abs() <= 1e-12 + 2e-13 * y,
                    "phi({x}) = {} vs {y}",
                    fam.phi(x)
                );
            }
        }
    }

    #[test]
    fn integral_representations_hold() {
        // phi = ∫ p and psi = ∫ q within quadrature tolerance.
        for fam in [
            make_power_family(1.5).unwrap(),
            make_power_family(3.0).unwrap(),
            gaussian_quadratic_family(),
            make_weibull_conjugate_family(9.0, 1.25).unwrap(),
        ] {
            for &x in &[0.3, 1.0, 2.7] {
                let phi_int =
                    numeric::integrate(&|t| fam.p_density(t), 0.0, x, 1e-11, 30).unwrap();
                assert!(rel_err(phi_int, fam.phi(x)) < 1e-8, "phi integral at {x}");
                let psi_int =
                    numeric::integrate(&|t| fam.q_inverse(t), 0.0, x, 1e-11, 30).unwrap();
                assert!(rel_err(psi_int, fam.psi(x)) < 1e-8, "psi integral at {x}");
            }
        }
    }

    #[test]
    fn psi_derivative_matches_q() {
        let h = 1e-6;
        for fam in [
            make_power_family(3.0).unwrap(),
            gaussian_quadratic_family(),
            make_weibull_conjugate_family(9.0, 1.25).unwrap(),
        ] {
            for &x in &[0.5, 1.0, 2.0, 4.0] {
                let fd = (fam.psi(x + h) - fam.psi(x - h)) / (2.0 * h);
                let q = fam.q_inverse(x);
                assert!(
                    (fd - q).abs() <= 1e-4 * (1.0 + q.abs()),
                    "psi' vs q at {x}: {fd} vs {q}"
                );
            }
        }
    }

    #[test]
    fn fenchel_young_inequality_on_grid() {
        for fam in [
            make_power_family(1.5).unwrap(),
            gaussian_quadratic_family(),
            make_weibull_conjugate_family(9.0, 1.25).unwrap(),
        ] {
            for &x in log_grid(1e-2, 10.0, 25).iter() {
                for &y in log_grid(1e-2, 10.0, 25).iter() {
                    assert!(
                        x * y <= fam.phi(y) + fam.psi(x) + 1e-12,
                        "Fenchel-Young violated at ({x}, {y})"
                    );
                }
            }
        }
    }

    #[test]
    fn q_monotone_and_psi_superhomogeneous() {
        for fam in [
            make_power_family(2.5).unwrap(),
            make_weibull_conjugate_family(9.0, 1.25).unwrap(),
            gaussian_quadratic_family(),
        ] {
            let grid = log_grid(1e-3, 50.0, 60);
            for w in grid.windows(2) {
                assert!(fam.q_inverse(w[0]) <= fam.q_inverse(w[1]) + 1e-12);
                assert!(fam.phi(w[0]) <= fam.phi(w[1]) + 1e-12);
            }
            for &scale in &[1.0, 1.5, 2.0, 10.0] {
                for &x in grid.iter() {
                    assert!(
                        fam.psi(scale * x) >= scale * fam.psi(x) - 1e-9 * fam.psi(scale * x).max(1.0),
                        "superhomogeneity at scale {scale}, x {x}"
                    );
                }
            }
        }
    }

    #[test]
    fn conjugate_duality_closed_forms() {
        // Numeric transform matches the closed-form psi on a log grid for the
        // self-dual and power families.
        let cases = [
            make_power_family(1.5).unwrap(),
            make_power_family(2.0).unwrap(),
            make_power_family(3.0).unwrap(),
            gaussian_quadratic_family(),
        ];
        for fam in cases {
            for &x in log_grid(1e-3, 1e2, 40).iter() {
                let numeric = young_fenchel_numeric(|y| fam.phi(y), x).unwrap();
                assert!(
                    rel_err(numeric, fam.psi(x)) < 1e-6,
                    "duality at x = {x}: {numeric} vs {}",
                    fam.psi(x)
                );
            }
        }
    }

    #[test]
    fn table_family_tracks_sampled_power() {
        // Dense sample of phi(x) = x^2/2; interpolation error shrinks with
        // the grid, conjugation and inverses must stay consistent.
        let xs: Vec<f64> = (0..=4000).map(|i| i as f64 * 5e-3).collect();
        let phis: Vec<f64> = xs.iter().map(|x| 0.5 * x * x).collect();
        let fam = numeric_table_family(xs, phis).unwrap();
        for &x in &[0.25, 1.0, 3.7, 9.9] {
            assert!(rel_err(fam.phi(x), 0.5 * x * x) < 1e-4);
            assert!(rel_err(fam.psi(x), 0.5 * x * x) < 2e-2, "conjugate at {x}");
            let y = fam.psi(x);
            assert!(rel_err(fam.psi_inverse(y), x) < 1e-6);
        }
        // Density is the local slope and q is its right-continuous inverse.
        assert!((fam.p_density(1.0) - 1.0).abs() < 5e-3);
        assert!((fam.q_inverse(1.0) - 1.0).abs() < 5e-3);
        // Beyond the last slope the conjugate escapes to +inf.
        assert_eq!(fam.psi(1e9), f64::INFINITY);
    }

    #[test]
    fn table_family_rejects_bad_data() {
        assert!(matches!(
            numeric_table_family(vec![0.0, 1.0], vec![0.0]),
            Err(OrliczError::TableShape)
        ));
        assert!(matches!(
            numeric_table_family(vec![0.0, 1.0, 1.0], vec![0.0, 1.0, 2.0]),
            Err(OrliczError::TableNotIncreasing { .. })
        ));
        assert!(matches!(
            numeric_table_family(vec![0.0, 1.0, 2.0], vec![0.5, 1.0, 2.0]),
            Err(OrliczError::TableNotAnchored)
        ));
        // Concave data: slopes decrease.
        assert!(matches!(
            numeric_table_family(vec![0.0, 1.0, 2.0], vec![0.0, 2.0, 3.0]),
            Err(OrliczError::TableNotConvex { .. })
        ));
    }
}
