//! Seeded generation of independent double arrays.
//!
//! Every cell value is a pure function of `(distribution, master seed,
//! realization, row, column)`: a ChaCha12 stream is keyed by the seed and a
//! distribution tag, the realization index selects the stream, and the cell
//! address selects the word position (four 32-bit words, i.e. two 64-bit
//! draws, per cell). Rows are therefore contiguous stream segments that can
//! be generated independently and in any order, any sub-rectangle of a
//! realization is reproducible without generating the rest, and results do
//! not depend on thread count.

use alloc::vec::Vec;

use rand_chacha::ChaCha12Rng;
use rand_core::{RngCore, SeedableRng};

use crate::math;

const TWO_PI: f64 = core::f64::consts::TAU;

/// Reflected-Weibull parameters; the tail is `P(|X| > x) = e^{−(x/b)^θ}`
/// and `θ > 1` keeps the variable φ-subgaussian.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WeibullParams {
    pub theta: f64,
    pub b: f64,
}

impl WeibullParams {
    pub fn new(theta: f64, b: f64) -> Result<Self, SimulateError> {
        if !(theta.is_finite() && theta > 1.0) {
            return Err(SimulateError::InvalidTheta { theta });
        }
        if !(b.is_finite() && b > 0.0) {
            return Err(SimulateError::InvalidScale { b });
        }
        Ok(WeibullParams { theta, b })
    }
}

/// Marginal distribution of the array entries.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "lowercase"))]
pub enum DistKind {
    /// Standard normal entries.
    Gaussian,
    /// Symmetric reflected Weibull: `X = S · b (−ln U)^{1/θ}` with `U`
    /// uniform and `S` a fair sign, matching the tail exactly.
    #[cfg_attr(feature = "serde", serde(rename = "weibull"))]
    ReflectedWeibull { theta: f64, b: f64 },
    /// Degenerate field `X ≡ value`; useful as an analytic fixture.
    Constant { value: f64 },
}

impl DistKind {
    pub fn validate(&self) -> Result<(), SimulateError> {
        match *self {
            DistKind::Gaussian => Ok(()),
            DistKind::ReflectedWeibull { theta, b } => WeibullParams::new(theta, b).map(|_| ()),
            DistKind::Constant { value } => {
                if value.is_finite() {
                    Ok(())
                } else {
                    Err(SimulateError::NonFiniteConstant { value })
                }
            }
        }
    }

    /// Stable tag folded into the stream key so distinct distributions
    /// (including distinct parameters) draw from unrelated streams.
    fn tag(&self) -> u64 {
        match *self {
            DistKind::Gaussian => fold_bits(1, &[]),
            DistKind::ReflectedWeibull { theta, b } => {
                fold_bits(2, &[theta.to_bits(), b.to_bits()])
            }
            DistKind::Constant { value } => fold_bits(3, &[value.to_bits()]),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SimulateError {
    /// Grid extents must be at least 1×1.
    ZeroExtent { m: u32, j: u32 },
    InvalidTheta { theta: f64 },
    InvalidScale { b: f64 },
    NonFiniteConstant { value: f64 },
    /// Value count does not match the extents.
    ShapeMismatch { m: u32, j: u32, len: usize },
    /// Grid values must all be finite.
    NonFiniteValue { index: usize },
}

impl core::fmt::Display for SimulateError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            SimulateError::ZeroExtent { m, j } => write!(f, "grid extents {m}x{j} must be >= 1"),
            SimulateError::InvalidTheta { theta } => write!(f, "weibull theta = {theta} must be > 1"),
            SimulateError::InvalidScale { b } => write!(f, "weibull scale b = {b} must be > 0"),
            SimulateError::NonFiniteConstant { value } => {
                write!(f, "constant value {value} must be finite")
            }
            SimulateError::ShapeMismatch { m, j, len } => {
                write!(f, "{len} values do not fill a {m}x{j} grid")
            }
            SimulateError::NonFiniteValue { index } => {
                write!(f, "grid value at flat index {index} is not finite")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for SimulateError {}

/// Generation metadata: regeneration from these fields is bit-identical.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GenMeta {
    pub dist: DistKind,
    pub seed: u64,
    pub realization: u64,
}

/// Dense `m × j` grid of samples `X_{k,n}`, row-major with `k` as the row
/// index (both 1-based in the mathematical indexing, 0-based in accessors).
/// `meta` is present for generated arrays and absent for grids loaded from
/// files.
#[derive(Debug, Clone, PartialEq)]
pub struct DoubleArray {
    m: u32,
    j: u32,
    values: Vec<f64>,
    pub meta: Option<GenMeta>,
}

impl DoubleArray {
    /// Wrap an existing row-major buffer, checking shape and finiteness.
    pub fn from_values(
        m: u32,
        j: u32,
        values: Vec<f64>,
        meta: Option<GenMeta>,
    ) -> Result<Self, SimulateError> {
        if m == 0 || j == 0 {
            return Err(SimulateError::ZeroExtent { m, j });
        }
        if values.len() != m as usize * j as usize {
            return Err(SimulateError::ShapeMismatch { m, j, len: values.len() });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(SimulateError::NonFiniteValue { index });
        }
        Ok(DoubleArray { m, j, values, meta })
    }

    /// Number of rows (the `m`/`k` direction).
    pub fn rows(&self) -> u32 {
        self.m
    }

    /// Number of columns (the `j`/`n` direction).
    pub fn cols(&self) -> u32 {
        self.j
    }

    /// Entry `X_{k+1, n+1}` at 0-based `(row, col)`.
    pub fn get(&self, row: u32, col: u32) -> f64 {
        self.values[row as usize * self.j as usize + col as usize]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, row: u32) -> &[f64] {
        let w = self.j as usize;
        let start = row as usize * w;
        &self.values[start..start + w]
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fold_bits(id: u64, params: &[u64]) -> u64 {
    let mut state = id;
    let mut acc = splitmix64(&mut state);
    for &p in params {
        state ^= p;
        acc ^= splitmix64(&mut state);
    }
    acc
}

fn derive_key(seed: u64, tag: u64) -> [u8; 32] {
    let mut state = seed.wrapping_add(tag.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    key
}

/// Uniform in `(0, 1]` from the top 53 bits; the `+1` keeps `ln` finite.
#[inline]
fn unit_open_closed(bits: u64) -> f64 {
    ((bits >> 11) + 1) as f64 * (1.0 / 9_007_199_254_740_992.0)
}

/// Fill one row of a realization. `row` is 0-based; cells consume a fixed
/// four words each, so the row starting position is `(row << 32) * 4`.
pub fn sample_row_into(dist: &DistKind, seed: u64, realization: u64, row: u32, out: &mut [f64]) {
    debug_assert!(out.len() < (1usize << 32));
    if let DistKind::Constant { value } = dist {
        out.fill(*value);
        return;
    }
    let mut rng = ChaCha12Rng::from_seed(derive_key(seed, dist.tag()));
    rng.set_stream(realization);
    rng.set_word_pos((row as u128) << 34);
    match *dist {
        DistKind::Gaussian => {
            for slot in out.iter_mut() {
                let u1 = unit_open_closed(rng.next_u64());
                let u2 = unit_open_closed(rng.next_u64());
                *slot = math::sqrt(-2.0 * math::ln(u1)) * math::cos(TWO_PI * u2);
            }
        }
        DistKind::ReflectedWeibull { theta, b } => {
            let inv_theta = 1.0 / theta;
            for slot in out.iter_mut() {
                let u = unit_open_closed(rng.next_u64());
                let sign = if rng.next_u64() & 1 == 1 { -1.0 } else { 1.0 };
                *slot = sign * b * math::pow(-math::ln(u), inv_theta);
            }
        }
        DistKind::Constant { .. } => unreachable!(),
    }
}

/// Generate the `m × j` realization `realization` of the keyed field.
pub fn sample(
    dist: &DistKind,
    seed: u64,
    realization: u64,
    m: u32,
    j: u32,
) -> Result<DoubleArray, SimulateError> {
    dist.validate()?;
    if m == 0 || j == 0 {
        return Err(SimulateError::ZeroExtent { m, j });
    }
    let mut values = alloc::vec![0.0; m as usize * j as usize];
    for row in 0..m {
        let start = row as usize * j as usize;
        sample_row_into(dist, seed, realization, row, &mut values[start..start + j as usize]);
    }
    Ok(DoubleArray { m, j, values, meta: Some(GenMeta { dist: *dist, seed, realization }) })
}

/// Standard Gaussian array, realization 0.
pub fn sample_gaussian(seed: u64, m: u32, j: u32) -> Result<DoubleArray, SimulateError> {
    sample(&DistKind::Gaussian, seed, 0, m, j)
}

/// Reflected-Weibull array, realization 0.
pub fn sample_reflected_weibull(
    seed: u64,
    m: u32,
    j: u32,
    params: WeibullParams,
) -> Result<DoubleArray, SimulateError> {
    sample(&DistKind::ReflectedWeibull { theta: params.theta, b: params.b }, seed, 0, m, j)
}

/// A flat vector of `n` i.i.d. draws (row 0 of the keyed field).
pub fn draws(dist: &DistKind, seed: u64, realization: u64, n: usize) -> Vec<f64> {
    let mut out = alloc::vec![0.0; n];
    sample_row_into(dist, seed, realization, 0, &mut out);
    out
}

/// Exact CDF of the supported marginals, for distributional tests.
pub fn exact_cdf(dist: &DistKind, x: f64) -> f64 {
    match *dist {
        DistKind::Gaussian => 1.0 - math::normal_sf(x),
        DistKind::ReflectedWeibull { theta, b } => {
            if x >= 0.0 {
                1.0 - 0.5 * math::exp(-math::pow(x / b, theta))
            } else {
                0.5 * math::exp(-math::pow(-x / b, theta))
            }
        }
        DistKind::Constant { value } => {
            if x >= value {
                1.0
            } else {
                0.0
            }
        }
    }
}
