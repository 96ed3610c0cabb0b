//! Running-maxima functionals over anchored rectangular windows.
//!
//! For a double array `X` the window `(m, j)` is the rectangle
//! `{(k, n) : k <= m, n <= j}`. A single dynamic-programming pass
//! `M_{m,j} = max(M_{m-1,j}, M_{m,j-1}, X_{m,j})` produces the maxima of all
//! `m·j` windows in `O(mj)`, and the deviations follow from the normalizer
//! `a_{m,j} = g(ln(mj)) ψ⁻¹(ln(mj))`:
//! `Y_{m,j} = M_{m,j} − a_{m,j}`, `Z_{m,j} = X_{m,j} − a_{m,j}`,
//! `Y⁺ = max(Y, 0)`, `Y⁻ = max(−Y, 0)`.

use alloc::vec::Vec;

use crate::conditions::NormalizerSpec;
use crate::math;
use crate::simulate::DoubleArray;

/// Errors from window extraction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MaximaError {
    /// Requested window exceeds the grid extents (1-based indices).
    WindowOutOfRange { m: u32, j: u32 },
}

impl core::fmt::Display for MaximaError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            MaximaError::WindowOutOfRange { m, j } => {
                write!(f, "window ({m}, {j}) is outside the grid")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for MaximaError {}

/// All per-window functionals of one realization.
#[derive(Debug, Clone, PartialEq)]
pub struct RunningMaxGrid {
    m: u32,
    j: u32,
    /// `M_{m,j}`: maximum over the anchored window, non-decreasing along
    /// both axes.
    pub prefix_max: Vec<f64>,
    /// `Y_{m,j} = M_{m,j} − a_{m,j}`.
    pub y: Vec<f64>,
    /// `Z_{m,j} = X_{m,j} − a_{m,j}`.
    pub z: Vec<f64>,
    pub y_plus: Vec<f64>,
    pub y_minus: Vec<f64>,
    /// 1-based `(k*, n*)` of the maximum in each window; ties resolve to
    /// the lexicographically smallest location.
    pub argmax: Vec<(u32, u32)>,
}

impl RunningMaxGrid {
    pub fn rows(&self) -> u32 {
        self.m
    }

    pub fn cols(&self) -> u32 {
        self.j
    }

    #[inline]
    fn idx(&self, row: u32, col: u32) -> usize {
        row as usize * self.j as usize + col as usize
    }

    /// `Y` at the 1-based window `(m, j)`.
    pub fn y_at(&self, m: u32, j: u32) -> Result<f64, MaximaError> {
        if m == 0 || j == 0 || m > self.m || j > self.j {
            return Err(MaximaError::WindowOutOfRange { m, j });
        }
        Ok(self.y[self.idx(m - 1, j - 1)])
    }
}

/// Prefix maxima `M_{m,j}` of every anchored window, row-major.
pub fn prefix_max(array: &DoubleArray) -> Vec<f64> {
    let (m, j) = (array.rows() as usize, array.cols() as usize);
    let mut out = array.as_slice().to_vec();
    for r in 0..m {
        for c in 0..j {
            let i = r * j + c;
            if c > 0 && out[i - 1] > out[i] {
                out[i] = out[i - 1];
            }
            if r > 0 && out[i - j] > out[i] {
                out[i] = out[i - j];
            }
        }
    }
    out
}

fn prefix_max_with_argmax(array: &DoubleArray) -> (Vec<f64>, Vec<(u32, u32)>) {
    let (m, j) = (array.rows() as usize, array.cols() as usize);
    let mut vals = array.as_slice().to_vec();
    let mut locs: Vec<(u32, u32)> = Vec::with_capacity(m * j);
    for r in 0..m {
        for c in 0..j {
            let i = r * j + c;
            let mut best = vals[i];
            let mut loc = (r as u32 + 1, c as u32 + 1);
            if c > 0 {
                let (v, l) = (vals[i - 1], locs[i - 1]);
                if v > best || (v == best && l < loc) {
                    best = v;
                    loc = l;
                }
            }
            if r > 0 {
                let (v, l) = (vals[i - j], locs[i - j]);
                if v > best || (v == best && l < loc) {
                    best = v;
                    loc = l;
                }
            }
            vals[i] = best;
            locs.push(loc);
        }
    }
    (vals, locs)
}

/// Normalizer `a_{m,j} = g(ln(mj)) ψ⁻¹(ln(mj))`; zero at `m = j = 1`.
pub fn normalizer(spec: &NormalizerSpec, m: u32, j: u32) -> f64 {
    let ln_prod = math::ln(m as f64 * j as f64);
    spec.g.eval(ln_prod) * spec.family.psi_inverse(ln_prod)
}

/// The full `m × j` grid of normalizer values, row-major. The value depends
/// on the window only through `m·j`, but the dense grid is what the
/// streaming pipelines subtract cell by cell.
pub fn normalizer_grid(spec: &NormalizerSpec, m: u32, j: u32) -> Vec<f64> {
    let mut out = Vec::with_capacity(m as usize * j as usize);
    for r in 1..=m {
        for c in 1..=j {
            out.push(normalizer(spec, r, c));
        }
    }
    out
}

/// Compute every running-maxima functional of one realization.
pub fn deviations(array: &DoubleArray, spec: &NormalizerSpec) -> RunningMaxGrid {
    let (m, j) = (array.rows(), array.cols());
    let (prefix, argmax) = prefix_max_with_argmax(array);
    let a = normalizer_grid(spec, m, j);
    let n = prefix.len();
    let mut y = Vec::with_capacity(n);
    let mut z = Vec::with_capacity(n);
    let mut y_plus = Vec::with_capacity(n);
    let mut y_minus = Vec::with_capacity(n);
    let xs = array.as_slice();
    for i in 0..n {
        let yi = prefix[i] - a[i];
        y.push(yi);
        z.push(xs[i] - a[i]);
        y_plus.push(yi.max(0.0));
        y_minus.push((-yi).max(0.0));
    }
    RunningMaxGrid { m, j, prefix_max: prefix, y, z, y_plus, y_minus, argmax }
}

/// 1-based argmax locations of all anchored windows, ties to the
/// lexicographically smallest `(k, n)`.
pub fn argmax_locations(array: &DoubleArray) -> Vec<(u32, u32)> {
    prefix_max_with_argmax(array).1
}

/// Extract `Y` along a list of 1-based windows, preserving order.
pub fn window_series(grid: &RunningMaxGrid, windows: &[(u32, u32)]) -> Result<Vec<f64>, MaximaError> {
    windows.iter().map(|&(m, j)| grid.y_at(m, j)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conditions::Growth;
    use crate::orlicz::{gaussian_quadratic_family, make_weibull_conjugate_family};
    use crate::simulate::sample_gaussian;

    fn gauss_spec() -> NormalizerSpec {
        NormalizerSpec::new(Growth::Constant { value: 1.0 }, gaussian_quadratic_family()).unwrap()
    }

    fn array_from(rows: u32, cols: u32, data: &[f64]) -> DoubleArray {
        DoubleArray::from_values(rows, cols, data.to_vec(), None).unwrap()
    }

    /// Exhaustive per-window recomputation with the same tie rule.
    fn brute_force(array: &DoubleArray) -> (Vec<f64>, Vec<(u32, u32)>) {
        let (m, j) = (array.rows(), array.cols());
        let mut maxima = Vec::new();
        let mut locs = Vec::new();
        for wm in 1..=m {
            for wj in 1..=j {
                let mut best = f64::NEG_INFINITY;
                let mut loc = (0, 0);
                for k in 0..wm {
                    for n in 0..wj {
                        let v = array.get(k, n);
                        if v > best {
                            best = v;
                            loc = (k + 1, n + 1);
                        }
                    }
                }
                maxima.push(best);
                locs.push(loc);
            }
        }
        (maxima, locs)
    }

    #[test]
    fn single_cell_grid() {
        let arr = array_from(1, 1, &[1.0]);
        assert_eq!(prefix_max(&arr), alloc::vec![1.0]);
        let grid = deviations(&arr, &gauss_spec());
        // a_{1,1} = 0, so Y = Z = X.
        assert_eq!(grid.y, alloc::vec![1.0]);
        assert_eq!(grid.z, alloc::vec![1.0]);
    }

    #[test]
    fn two_by_two_enumeration() {
        let arr = array_from(2, 2, &[1.0, 3.0, 2.0, 0.0]);
        assert_eq!(prefix_max(&arr), alloc::vec![1.0, 3.0, 2.0, 3.0]);
        assert_eq!(
            argmax_locations(&arr),
            alloc::vec![(1, 1), (1, 2), (2, 1), (1, 2)]
        );
    }

    #[test]
    fn dominant_corner_owns_every_window() {
        let arr = array_from(2, 2, &[5.0, 1.0, 1.0, 1.0]);
        assert!(argmax_locations(&arr).iter().all(|&l| l == (1, 1)));
    }

    #[test]
    fn ties_resolve_lexicographically() {
        let arr = array_from(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(argmax_locations(&arr).iter().all(|&l| l == (1, 1)));
        let (_, brute) = brute_force(&arr);
        assert_eq!(argmax_locations(&arr), brute);
    }

    #[test]
    fn dp_equals_brute_force_on_random_grids() {
        let spec = gauss_spec();
        for seed in 0..25u64 {
            let m = 3 + (seed % 18) as u32;
            let j = 3 + (seed % 23) as u32;
            let arr = sample_gaussian(seed, m, j).unwrap();
            let (bm, bl) = brute_force(&arr);
            let grid = deviations(&arr, &spec);
            assert_eq!(grid.prefix_max, bm, "seed {seed}");
            assert_eq!(grid.argmax, bl, "seed {seed}");
            // Y matches per-window recomputation.
            for wm in 1..=m {
                for wj in 1..=j {
                    let direct = bm[((wm - 1) * j + (wj - 1)) as usize] - normalizer(&spec, wm, wj);
                    assert_eq!(grid.y_at(wm, wj).unwrap(), direct);
                }
            }
        }
    }

    #[test]
    fn invariants_on_random_grids() {
        let spec = gauss_spec();
        for seed in 100..110u64 {
            let arr = sample_gaussian(seed, 20, 20).unwrap();
            let grid = deviations(&arr, &spec);
            let (m, j) = (20usize, 20usize);
            for r in 0..m {
                for c in 0..j {
                    let i = r * j + c;
                    if r > 0 {
                        assert!(grid.prefix_max[i] >= grid.prefix_max[i - j]);
                    }
                    if c > 0 {
                        assert!(grid.prefix_max[i] >= grid.prefix_max[i - 1]);
                    }
                    // Decomposition and complementarity.
                    assert_eq!(grid.y[i], grid.y_plus[i] - grid.y_minus[i]);
                    assert_eq!(grid.y_plus[i].min(grid.y_minus[i]), 0.0);
                    // X at the argmax equals the window maximum.
                    let (k, n) = grid.argmax[i];
                    assert_eq!(arr.get(k - 1, n - 1), grid.prefix_max[i]);
                    // Z > eps implies Y > eps at the same index.
                    for eps in [0.0, 0.5] {
                        if grid.z[i] > eps {
                            assert!(grid.y[i] > eps);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn zero_field_deviations() {
        let arr = array_from(3, 4, &[0.0; 12]);
        let spec = gauss_spec();
        let grid = deviations(&arr, &spec);
        for wm in 1..=3u32 {
            for wj in 1..=4u32 {
                let a = normalizer(&spec, wm, wj);
                let i = ((wm - 1) * 4 + (wj - 1)) as usize;
                assert_eq!(grid.y[i], -a);
                assert_eq!(grid.y_plus[i], 0.0);
                assert_eq!(grid.y_minus[i], a);
            }
        }
    }

    #[test]
    fn normalizer_closed_forms() {
        let spec = gauss_spec();
        assert_eq!(normalizer(&spec, 1, 1), 0.0);
        // a = sqrt(2 ln(mj)) for the quadratic family with g = 1.
        let a = normalizer(&spec, 2, 4);
        assert!((a - math::sqrt(2.0 * math::ln(8.0))).abs() < 1e-12);
        // psi_inverse at ln(mj) = 2 gives exactly 2.
        assert!((spec.family.psi_inverse(2.0) - 2.0).abs() < 1e-12);

        let wspec = NormalizerSpec::new(
            Growth::Constant { value: 1.0 },
            make_weibull_conjugate_family(9.0, 1.25).unwrap(),
        )
        .unwrap();
        let a = normalizer(&wspec, 1000, 1000);
        let expected = 1.25 * math::pow(math::ln(1e6), 1.0 / 9.0);
        assert!((a - expected).abs() < 1e-12);
    }

    #[test]
    fn normalizer_monotone_in_each_extent() {
        for spec in [
            gauss_spec(),
            NormalizerSpec::new(
                Growth::PowerLog { scale: 1.0, exponent: 0.5 },
                make_weibull_conjugate_family(9.0, 1.25).unwrap(),
            )
            .unwrap(),
        ] {
            for m in 1..40u32 {
                for j in 1..40u32 {
                    assert!(normalizer(&spec, m + 1, j) >= normalizer(&spec, m, j));
                    assert!(normalizer(&spec, m, j + 1) >= normalizer(&spec, m, j));
                }
            }
        }
    }

    #[test]
    fn argmax_locations_are_sparse() {
        let arr = sample_gaussian(5, 50, 50).unwrap();
        let mut locs = argmax_locations(&arr);
        locs.sort_unstable();
        locs.dedup();
        // Records of an i.i.d. field stay near the anchored corner: far
        // fewer distinct maxima than cells.
        assert!(locs.len() < 250, "distinct locations = {}", locs.len());
    }

    #[test]
    fn window_series_extraction() {
        let spec = gauss_spec();
        let arr = sample_gaussian(11, 20, 20).unwrap();
        let grid = deviations(&arr, &spec);
        assert_eq!(window_series(&grid, &[(1, 1)]).unwrap(), alloc::vec![grid.y[0]]);
        let path: Vec<(u32, u32)> = (1..=20).map(|i| (i, i)).collect();
        let series = window_series(&grid, &path).unwrap();
        for (i, &(m, j)) in path.iter().enumerate() {
            assert_eq!(series[i], grid.y_at(m, j).unwrap());
        }
        assert!(window_series(&grid, &[(21, 1)]).is_err());
        assert!(window_series(&grid, &[(0, 1)]).is_err());
    }
}
