//! Shared one-dimensional numerics: golden-section maximization of concave
//! objectives, monotone inversion by bisection, generalized inverses with the
//! supremum convention, and a log-domain adaptive Gauss–Kronrod rule.
//!
//! The quadrature works on `ln f` rather than `f`. Integrands produced by the
//! convergence conditions span hundreds of orders of magnitude (values like
//! `exp(ψ(x) − c·e^{S(x)})` peak near `e^{100}` and underflow a few units
//! later), so every accumulation here is max-shifted. `-inf` always means an
//! exact zero.

use alloc::vec::Vec;

use crate::math;

/// 15-point Kronrod abscissae on `[-1, 1]` (positive half; symmetric).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];

/// Kronrod weights matching `XGK`.
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// 7-point Gauss weights (positive half) embedded in the Kronrod rule.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Where a bracketing or integration routine gave up.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NumericError {
    /// The objective kept increasing past the expansion cap, i.e. the
    /// supplied function is not superlinear enough to bracket a maximum.
    BracketExhausted { last_abscissa: f64 },
    /// The integrand returned NaN or +inf at this abscissa.
    BadIntegrand { abscissa: f64 },
}

impl core::fmt::Display for NumericError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            NumericError::BracketExhausted { last_abscissa } => {
                write!(f, "bracket expansion exhausted at {last_abscissa:e}")
            }
            NumericError::BadIntegrand { abscissa } => {
                write!(f, "integrand not finite at {abscissa:e}")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for NumericError {}

/// Golden-section maximization of a unimodal `f` on `[a, b]`.
///
/// Stops when the bracket shrinks to `rel_tol * max(1, |b|)`.
pub fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, rel_tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let tol = rel_tol * b.abs().max(1.0);
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut iter = 0;
    while (b - a) > tol && iter < 400 {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
        iter += 1;
    }
    let xm = 0.5 * (a + b);
    let fm = f(xm);
    if f1.max(f2) > fm {
        if f1 >= f2 {
            (x1, f1)
        } else {
            (x2, f2)
        }
    } else {
        (xm, fm)
    }
}

/// Maximize a concave `f` on `[0, ∞)` by doubling the right edge until the
/// objective drops, then golden-section inside the bracket.
///
/// `cap` bounds the expansion; exceeding it means `f` never turned over.
pub fn maximize_concave<F: Fn(f64) -> f64>(
    f: F,
    cap: f64,
    rel_tol: f64,
) -> Result<(f64, f64), NumericError> {
    let f0 = f(0.0);
    let mut prev_x = 0.0;
    let mut prev_v = f0;
    let mut x = 1.0;
    loop {
        let v = f(x);
        if v.is_nan() {
            return Err(NumericError::BadIntegrand { abscissa: x });
        }
        if v < prev_v {
            // Peak lies in [prev_x / 2, x] (or [0, x] on the first step).
            let lo = if prev_x == 0.0 { 0.0 } else { prev_x * 0.25 };
            return Ok(golden_max(f, lo, x, rel_tol));
        }
        prev_x = x;
        prev_v = v;
        x *= 2.0;
        if x > cap {
            return Err(NumericError::BracketExhausted { last_abscissa: prev_x });
        }
    }
}

/// Tolerances for [`invert_increasing`], expressed on the function scale.
#[derive(Debug, Clone, Copy)]
pub struct InvertOpts {
    pub f_abs_tol: f64,
    pub f_rel_tol: f64,
}

impl Default for InvertOpts {
    fn default() -> Self {
        InvertOpts { f_abs_tol: 1e-12, f_rel_tol: 1e-13 }
    }
}

/// Solve `f(x) = y` for an increasing `f` with `f(0) = 0`, `y >= 0`.
///
/// The right bracket doubles from 1 until `f` clears `y` (capped well below
/// overflow since `f` is increasing and superlinear in every caller), then
/// plain bisection runs until either the value tolerance or the argument
/// resolution is hit.
pub fn invert_increasing<F: Fn(f64) -> f64>(f: F, y: f64, opts: InvertOpts) -> f64 {
    if y <= 0.0 {
        return 0.0;
    }
    let mut lo = 0.0_f64;
    let mut hi = 1.0_f64;
    while f(hi) < y {
        lo = hi;
        hi *= 2.0;
        if hi > 1e300 {
            return f64::INFINITY;
        }
    }
    let tol = opts.f_abs_tol + opts.f_rel_tol * y.abs();
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let v = f(mid);
        if (v - y).abs() <= tol {
            return mid;
        }
        if v < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Generalized inverse `sup{u >= 0 : p(u) <= t}` for a non-decreasing `p`.
///
/// Plateaus resolve to their rightmost point: the bisection keeps the
/// invariant `p(lo) <= t < p(hi)` and converges to the upper boundary of the
/// sublevel set. Returns `+inf` when `p` never exceeds `t` inside the
/// expansion cap.
pub fn generalized_inverse<P: Fn(f64) -> f64>(p: P, t: f64) -> f64 {
    if p(0.0) > t {
        return 0.0;
    }
    let mut lo = 0.0_f64;
    let mut hi = 1.0_f64;
    while p(hi) <= t {
        lo = hi;
        hi *= 2.0;
        if hi > 1e280 {
            return f64::INFINITY;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if p(mid) <= t {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// One integrated segment in log space.
#[derive(Debug, Clone, Copy)]
pub struct LogIntegral {
    /// `ln` of the integral over the segment; `-inf` is an exact zero.
    pub ln_value: f64,
    /// Relative error estimate from the Gauss/Kronrod difference.
    pub rel_err: f64,
}

fn gk15_log<F: Fn(f64) -> f64>(ln_f: &F, a: f64, b: f64) -> Result<LogIntegral, NumericError> {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut ln_vals = [f64::NEG_INFINITY; 15];
    let mut shift = f64::NEG_INFINITY;
    for (i, &xi) in XGK.iter().enumerate() {
        let (xl, xr) = (c - h * xi, c + h * xi);
        let vl = ln_f(xl);
        if vl.is_nan() || vl == f64::INFINITY {
            return Err(NumericError::BadIntegrand { abscissa: xl });
        }
        ln_vals[i] = vl;
        shift = shift.max(vl);
        if i < 7 {
            let vr = ln_f(xr);
            if vr.is_nan() || vr == f64::INFINITY {
                return Err(NumericError::BadIntegrand { abscissa: xr });
            }
            ln_vals[14 - i] = vr;
            shift = shift.max(vr);
        }
    }
    if shift == f64::NEG_INFINITY {
        return Ok(LogIntegral { ln_value: f64::NEG_INFINITY, rel_err: 0.0 });
    }
    let mut kronrod = 0.0;
    let mut gauss = 0.0;
    for i in 0..8 {
        let v = math::exp(ln_vals[i] - shift)
            + if i < 7 { math::exp(ln_vals[14 - i] - shift) } else { 0.0 };
        kronrod += WGK[i] * v;
        // Odd Kronrod indices are the embedded 7-point Gauss nodes.
        if i % 2 == 1 {
            gauss += WG[i / 2] * v;
        }
    }
    let rel_err = if kronrod > 0.0 { ((kronrod - gauss) / kronrod).abs() } else { 0.0 };
    Ok(LogIntegral { ln_value: shift + math::ln(kronrod * h), rel_err })
}

/// Adaptive Gauss–Kronrod integration of `exp(ln_f)` over `[a, b]`,
/// bisecting until each piece meets `rel_tol` or `max_depth` splits.
pub fn integrate_log<F: Fn(f64) -> f64>(
    ln_f: &F,
    a: f64,
    b: f64,
    rel_tol: f64,
    max_depth: u32,
) -> Result<LogIntegral, NumericError> {
    // Explicit stack; each entry is (lo, hi, depth).
    let mut stack: Vec<(f64, f64, u32)> = alloc::vec![(a, b, 0)];
    let mut ln_total = f64::NEG_INFINITY;
    let mut worst = 0.0_f64;
    while let Some((lo, hi, depth)) = stack.pop() {
        let seg = gk15_log(ln_f, lo, hi)?;
        if seg.rel_err <= rel_tol || depth >= max_depth {
            ln_total = math::ln_add_exp(ln_total, seg.ln_value);
            worst = worst.max(seg.rel_err);
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((lo, mid, depth + 1));
            stack.push((mid, hi, depth + 1));
        }
    }
    Ok(LogIntegral { ln_value: ln_total, rel_err: worst })
}

/// Convenience wrapper integrating a plain non-negative `f`.
pub fn integrate<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    rel_tol: f64,
    max_depth: u32,
) -> Result<f64, NumericError> {
    let ln_f = |x: f64| {
        let v = f(x);
        if v < 0.0 {
            f64::NAN
        } else {
            math::ln(v)
        }
    };
    integrate_log(&ln_f, a, b, rel_tol, max_depth).map(|r| math::exp(r.ln_value))
}
