//! Replicated experiments over double arrays: RMSE of `Y_{m,j}` at window
//! ladders, grouped `lim(max)` statistics, empirical exceedance and rate
//! series, and tail-bound checks.
//!
//! The pipeline is streaming: a replication is generated row by row, the
//! prefix-max recursion keeps only the previous row, and every statistic is
//! folded into fixed-size accumulators, so a 1000×1200×1200 study never
//! holds more than two grid rows per worker (plus the shared normalizer
//! grid).
//!
//! Determinism is structural. Accumulators split into a commutative part
//! (integer histogram counts, exceedance counts, exact min/max) that may be
//! merged in any order, and an ordered part (the few floating-point sums
//! each replication produces) that is always folded in replication order.
//! Reports are therefore byte-identical for any worker count.

use alloc::string::String;
use alloc::vec::Vec;

use crate::conditions::{Growth, GrowthError, NormalizerSpec};
use crate::math;
use crate::maxima;
use crate::orlicz::{FamilyKind, OrliczError, OrliczFamily};
use crate::simulate::{self, DistKind, SimulateError};

/// A named list of 1-based observation windows `(m, j)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WindowSet {
    pub name: String,
    pub windows: Vec<(u32, u32)>,
}

/// Fixed-range histogram used for group quantiles: `bins` cells over
/// `[-range, range]`, values outside clamped into the edge bins (clamp
/// events are counted and surfaced as a warning).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HistogramSpec {
    pub range: f64,
    pub bins: u32,
}

impl Default for HistogramSpec {
    fn default() -> Self {
        HistogramSpec { range: 16.0, bins: 1 << 17 }
    }
}

/// Empirical check of the upper tail bound `exp(−ψ(x/τ))` on raw draws.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TailCheckSpec {
    /// Subgaussian norm to plug into the bound.
    pub tau: f64,
    pub xs: Vec<f64>,
    pub draws: u64,
}

/// Full description of a replicated experiment. The report is a pure
/// function of this value.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExperimentConfig {
    pub dist: DistKind,
    pub family: FamilyKind,
    pub g: Growth,
    /// Grid extents: rows (`m` direction) and columns (`j` direction).
    pub rows: u32,
    pub cols: u32,
    pub replications: u32,
    pub seed: u64,
    #[cfg_attr(feature = "serde", serde(default))]
    pub window_sets: Vec<WindowSet>,
    /// Group thresholds `r_i` for the `r = m ∨ j` grouping, strictly
    /// increasing.
    #[cfg_attr(feature = "serde", serde(default))]
    pub group_thresholds: Vec<u32>,
    /// Exceedance levels `ε` for the rate series and per-window reports.
    #[cfg_attr(feature = "serde", serde(default))]
    pub epsilons: Vec<f64>,
    /// Exponents `α` of the rate series `Σ (mj)^{−α} P(Y⁺ > ε)`.
    #[cfg_attr(feature = "serde", serde(default))]
    pub alphas: Vec<f64>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub histogram: HistogramSpec,
    #[cfg_attr(feature = "serde", serde(default))]
    pub tail_check: Option<TailCheckSpec>,
}

/// Configuration rejection, with the offending field spelled out.
#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    Dist(SimulateError),
    Family(OrliczError),
    Growth(GrowthError),
    ZeroReplications,
    ZeroExtent { rows: u32, cols: u32 },
    ThresholdsNotIncreasing { index: usize },
    WindowOutOfRange { set: String, index: usize, m: u32, j: u32 },
    NonFiniteEpsilon { index: usize },
    NonFiniteAlpha { index: usize },
    BadHistogram,
    BadTailCheck(&'static str),
}

impl core::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            ConfigError::Dist(e) => write!(f, "dist: {e}"),
            ConfigError::Family(e) => write!(f, "family: {e}"),
            ConfigError::Growth(e) => write!(f, "g: {e}"),
            ConfigError::ZeroReplications => write!(f, "replications: must be >= 1"),
            ConfigError::ZeroExtent { rows, cols } => {
                write!(f, "rows/cols: extents {rows}x{cols} must be >= 1")
            }
            ConfigError::ThresholdsNotIncreasing { index } => {
                write!(f, "group_thresholds[{index}]: not strictly increasing")
            }
            ConfigError::WindowOutOfRange { set, index, m, j } => {
                write!(f, "window_sets[{set}][{index}]: window ({m}, {j}) exceeds extents")
            }
            ConfigError::NonFiniteEpsilon { index } => write!(f, "epsilons[{index}]: not finite"),
            ConfigError::NonFiniteAlpha { index } => write!(f, "alphas[{index}]: not finite"),
            ConfigError::BadHistogram => write!(f, "histogram: needs range > 0 and bins >= 2"),
            ConfigError::BadTailCheck(msg) => write!(f, "tail_check: {msg}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for ConfigError {}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.dist.validate().map_err(ConfigError::Dist)?;
        OrliczFamily::from_kind(self.family.clone()).map_err(ConfigError::Family)?;
        self.g.validate().map_err(ConfigError::Growth)?;
        if self.replications == 0 {
            return Err(ConfigError::ZeroReplications);
        }
        if self.rows == 0 || self.cols == 0 {
            return Err(ConfigError::ZeroExtent { rows: self.rows, cols: self.cols });
        }
        for (i, w) in self.group_thresholds.windows(2).enumerate() {
            if w[1] <= w[0] {
                return Err(ConfigError::ThresholdsNotIncreasing { index: i + 1 });
            }
        }
        if self.group_thresholds.first() == Some(&0) {
            return Err(ConfigError::ThresholdsNotIncreasing { index: 0 });
        }
        for set in &self.window_sets {
            for (i, &(m, j)) in set.windows.iter().enumerate() {
                if m == 0 || j == 0 || m > self.rows || j > self.cols {
                    return Err(ConfigError::WindowOutOfRange {
                        set: set.name.clone(),
                        index: i,
                        m,
                        j,
                    });
                }
            }
        }
        if let Some(i) = self.epsilons.iter().position(|e| !e.is_finite()) {
            return Err(ConfigError::NonFiniteEpsilon { index: i });
        }
        if let Some(i) = self.alphas.iter().position(|a| !a.is_finite()) {
            return Err(ConfigError::NonFiniteAlpha { index: i });
        }
        if !(self.histogram.range > 0.0) || self.histogram.bins < 2 {
            return Err(ConfigError::BadHistogram);
        }
        if let Some(tc) = &self.tail_check {
            if !(tc.tau > 0.0) {
                return Err(ConfigError::BadTailCheck("tau must be > 0"));
            }
            if tc.draws == 0 {
                return Err(ConfigError::BadTailCheck("draws must be >= 1"));
            }
            if tc.xs.iter().any(|x| !(*x > 0.0)) {
                return Err(ConfigError::BadTailCheck("xs must be > 0"));
            }
        }
        Ok(())
    }
}

/// RMSE of `Y` at one window across replications.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WindowRmse {
    pub set: String,
    pub index: usize,
    pub m: u32,
    pub j: u32,
    pub rmse: f64,
    pub n_reps: u32,
}

/// Five-number summary plus mean of the pooled `Y` values of one group
/// (`None` throughout for an empty group). Quantiles are interpolated from
/// the fixed-range histogram; min/max/mean are exact.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GroupStat {
    pub group: usize,
    pub r_min: u32,
    pub count: u64,
    pub min: Option<f64>,
    pub q1: Option<f64>,
    pub median: Option<f64>,
    pub q3: Option<f64>,
    pub max: Option<f64>,
    pub mean: Option<f64>,
}

/// Empirical exceedance probability of one window at one level, with a
/// 95% interval (normal approximation, Wilson under 10 successes).
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExceedanceEntry {
    pub set: String,
    pub index: usize,
    pub m: u32,
    pub j: u32,
    pub epsilon: f64,
    pub successes: u64,
    pub n: u64,
    pub p_hat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub wilson: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum RateClass {
    /// Relative increment below `1e-3` over the last doubling.
    Stabilizing,
    /// Growth above 10% over the last doubling.
    Growing,
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RatePoint {
    pub n: u32,
    pub partial_sum: f64,
}

/// Partial sums `S_N = Σ_{m,j<=N} (mj)^{−α} p̂(Y > ε)` for doubling `N`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RateEntry {
    pub alpha: f64,
    pub epsilon: f64,
    pub partial: Vec<RatePoint>,
    pub classification: RateClass,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TailCheckEntry {
    pub x: f64,
    pub bound: f64,
    pub empirical: f64,
    pub sigma: f64,
    pub ok: bool,
}

/// Aggregated outputs of one experiment, echoing the config that produced
/// them.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub rmse: Vec<WindowRmse>,
    pub groups: Vec<GroupStat>,
    pub exceedance: Vec<ExceedanceEntry>,
    pub rate: Vec<RateEntry>,
    pub tail_check: Vec<TailCheckEntry>,
    pub warnings: Vec<String>,
}

/// Precomputed immutable state shared by all replications.
pub struct ExperimentContext {
    config: ExperimentConfig,
    family: OrliczFamily,
    /// Normalizer `a` at every cell, row-major.
    a_grid: Vec<f64>,
    /// Level (count of thresholds `<=` the 1-based index) per row / column.
    lvl_row: Vec<u8>,
    lvl_col: Vec<u8>,
    /// Cells per disjoint level.
    level_cells: Vec<u64>,
    /// Flattened window slots `(set index, window index, m, j)`.
    window_slots: Vec<(usize, usize, u32, u32)>,
    /// Per row: `(col, slot)` pairs sorted by column (0-based).
    row_windows: Vec<Vec<(u32, u32)>>,
}

/// Order-insensitive accumulator half: integer counts and exact extrema.
pub struct CommutativeAcc {
    level_hist: Vec<Vec<u64>>,
    level_min: Vec<f64>,
    level_max: Vec<f64>,
    clip_lo: u64,
    clip_hi: u64,
    /// Per epsilon: exceedance count per cell.
    exceed: Vec<Vec<u32>>,
}

/// Reusable per-worker buffers.
pub struct RepScratch {
    prev: Vec<f64>,
    cur: Vec<f64>,
}

impl ExperimentContext {
    pub fn new(config: ExperimentConfig) -> Result<Self, ConfigError> {
        config.validate()?;
        let family = OrliczFamily::from_kind(config.family.clone()).map_err(ConfigError::Family)?;
        let spec = NormalizerSpec { g: config.g.clone(), family: family.clone() };
        let a_grid = maxima::normalizer_grid(&spec, config.rows, config.cols);

        let level_of = |r: u32| -> u8 {
            config.group_thresholds.partition_point(|&t| t <= r) as u8
        };
        let lvl_row: Vec<u8> = (1..=config.rows).map(level_of).collect();
        let lvl_col: Vec<u8> = (1..=config.cols).map(level_of).collect();
        let n_levels = config.group_thresholds.len() + 1;
        let mut level_cells = alloc::vec![0u64; n_levels];
        for &lr in &lvl_row {
            for &lc in &lvl_col {
                level_cells[lr.max(lc) as usize] += 1;
            }
        }

        let mut window_slots = Vec::new();
        let mut row_windows: Vec<Vec<(u32, u32)>> = alloc::vec![Vec::new(); config.rows as usize];
        for (si, set) in config.window_sets.iter().enumerate() {
            for (wi, &(m, j)) in set.windows.iter().enumerate() {
                let slot = window_slots.len() as u32;
                window_slots.push((si, wi, m, j));
                row_windows[(m - 1) as usize].push((j - 1, slot));
            }
        }
        for rw in &mut row_windows {
            rw.sort_unstable();
        }

        Ok(ExperimentContext {
            config,
            family,
            a_grid,
            lvl_row,
            lvl_col,
            level_cells,
            window_slots,
            row_windows,
        })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn replications(&self) -> u32 {
        self.config.replications
    }

    fn n_levels(&self) -> usize {
        self.config.group_thresholds.len() + 1
    }

    fn track_groups(&self) -> bool {
        !self.config.group_thresholds.is_empty()
    }

    pub fn new_commutative(&self) -> CommutativeAcc {
        let bins = self.config.histogram.bins as usize;
        let n_levels = self.n_levels();
        let cells = self.a_grid.len();
        CommutativeAcc {
            level_hist: if self.track_groups() {
                (0..n_levels).map(|_| alloc::vec![0u64; bins]).collect()
            } else {
                Vec::new()
            },
            level_min: alloc::vec![f64::INFINITY; n_levels],
            level_max: alloc::vec![f64::NEG_INFINITY; n_levels],
            clip_lo: 0,
            clip_hi: 0,
            exceed: self
                .config
                .epsilons
                .iter()
                .map(|_| alloc::vec![0u32; cells])
                .collect(),
        }
    }

    pub fn new_scratch(&self) -> RepScratch {
        RepScratch {
            prev: alloc::vec![0.0; self.config.cols as usize],
            cur: alloc::vec![0.0; self.config.cols as usize],
        }
    }

    /// Merge two commutative halves; all fields commute, so any merge tree
    /// yields the same result.
    pub fn merge_commutative(into: &mut CommutativeAcc, from: &CommutativeAcc) {
        for (a, b) in into.level_hist.iter_mut().zip(&from.level_hist) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += *y;
            }
        }
        for (a, b) in into.level_min.iter_mut().zip(&from.level_min) {
            *a = a.min(*b);
        }
        for (a, b) in into.level_max.iter_mut().zip(&from.level_max) {
            *a = a.max(*b);
        }
        into.clip_lo += from.clip_lo;
        into.clip_hi += from.clip_hi;
        for (a, b) in into.exceed.iter_mut().zip(&from.exceed) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += *y;
            }
        }
    }

    /// Run one replication, updating the commutative half in place and
    /// returning the ordered floating-point part:
    /// `[level sums…, window Y values…]`.
    pub fn replicate(&self, rep: u64, acc: &mut CommutativeAcc, scratch: &mut RepScratch) -> Vec<f64> {
        let cfg = &self.config;
        let cols = cfg.cols as usize;
        let track_groups = self.track_groups();
        let bins = cfg.histogram.bins as usize;
        let range = cfg.histogram.range;
        let scale = bins as f64 / (2.0 * range);
        let mut level_sums = alloc::vec![0.0f64; self.n_levels()];
        let mut window_y = alloc::vec![0.0f64; self.window_slots.len()];

        for row in 0..cfg.rows {
            let r = row as usize;
            simulate::sample_row_into(&cfg.dist, cfg.seed, rep, row, &mut scratch.cur);
            // Prefix-max recursion against the previous row and the left
            // neighbour.
            if row > 0 {
                let mut left = f64::NEG_INFINITY;
                for c in 0..cols {
                    let mut v = scratch.cur[c];
                    let up = scratch.prev[c];
                    if up > v {
                        v = up;
                    }
                    if left > v {
                        v = left;
                    }
                    scratch.cur[c] = v;
                    left = v;
                }
            } else {
                let mut left = f64::NEG_INFINITY;
                for c in 0..cols {
                    let mut v = scratch.cur[c];
                    if left > v {
                        v = left;
                    }
                    scratch.cur[c] = v;
                    left = v;
                }
            }

            let a_row = &self.a_grid[r * cols..(r + 1) * cols];
            let lr = self.lvl_row[r];
            for c in 0..cols {
                let y = scratch.cur[c] - a_row[c];
                if track_groups {
                    let level = lr.max(self.lvl_col[c]) as usize;
                    let mut idx = ((y + range) * scale) as i64;
                    if idx < 0 {
                        idx = 0;
                        acc.clip_lo += 1;
                    } else if idx >= bins as i64 {
                        idx = bins as i64 - 1;
                        acc.clip_hi += 1;
                    }
                    acc.level_hist[level][idx as usize] += 1;
                    if y < acc.level_min[level] {
                        acc.level_min[level] = y;
                    }
                    if y > acc.level_max[level] {
                        acc.level_max[level] = y;
                    }
                    level_sums[level] += y;
                }
                for (ei, &eps) in cfg.epsilons.iter().enumerate() {
                    if y > eps {
                        acc.exceed[ei][r * cols + c] += 1;
                    }
                }
            }
            for &(col, slot) in &self.row_windows[r] {
                window_y[slot as usize] = scratch.cur[col as usize] - a_row[col as usize];
            }
            core::mem::swap(&mut scratch.prev, &mut scratch.cur);
        }

        level_sums.extend_from_slice(&window_y);
        level_sums
    }

    /// Assemble the report. `ordered[rep]` must be the value returned by
    /// [`ExperimentContext::replicate`] for that replication index; the fold
    /// happens here, sequentially, in index order.
    pub fn finalize(&self, acc: &CommutativeAcc, ordered: &[Vec<f64>]) -> ExperimentReport {
        let cfg = &self.config;
        let reps = cfg.replications as u64;
        let n_levels = self.n_levels();
        let mut warnings: Vec<String> = Vec::new();

        // Ordered folds.
        let mut level_sums = alloc::vec![0.0f64; n_levels];
        let mut window_sumsq = alloc::vec![0.0f64; self.window_slots.len()];
        let mut window_exceed =
            alloc::vec![alloc::vec![0u64; self.window_slots.len()]; cfg.epsilons.len()];
        for rep in ordered {
            for l in 0..n_levels {
                level_sums[l] += rep[l];
            }
            for (w, &y) in rep[n_levels..].iter().enumerate() {
                window_sumsq[w] += y * y;
                for (ei, &eps) in cfg.epsilons.iter().enumerate() {
                    if y > eps {
                        window_exceed[ei][w] += 1;
                    }
                }
            }
        }

        let rmse: Vec<WindowRmse> = self
            .window_slots
            .iter()
            .enumerate()
            .map(|(slot, &(si, wi, m, j))| WindowRmse {
                set: cfg.window_sets[si].name.clone(),
                index: wi,
                m,
                j,
                rmse: math::sqrt(window_sumsq[slot] / reps as f64),
                n_reps: cfg.replications,
            })
            .collect();

        // Group statistics: group i pools disjoint levels >= i.
        let mut groups = Vec::new();
        if self.track_groups() {
            let bins = cfg.histogram.bins as usize;
            let width = 2.0 * cfg.histogram.range / bins as f64;
            for gi in 1..n_levels {
                let count: u64 =
                    (gi..n_levels).map(|l| self.level_cells[l]).sum::<u64>() * reps;
                if count == 0 {
                    groups.push(GroupStat {
                        group: gi,
                        r_min: cfg.group_thresholds[gi - 1],
                        count: 0,
                        min: None,
                        q1: None,
                        median: None,
                        q3: None,
                        max: None,
                        mean: None,
                    });
                    continue;
                }
                let mut hist = alloc::vec![0u64; bins];
                let mut mn = f64::INFINITY;
                let mut mx = f64::NEG_INFINITY;
                let mut sum = 0.0;
                for l in gi..n_levels {
                    for (h, v) in hist.iter_mut().zip(&acc.level_hist[l]) {
                        *h += *v;
                    }
                    mn = mn.min(acc.level_min[l]);
                    mx = mx.max(acc.level_max[l]);
                    sum += level_sums[l];
                }
                let q = |p: f64| hist_quantile(&hist, count, -cfg.histogram.range, width, p);
                groups.push(GroupStat {
                    group: gi,
                    r_min: cfg.group_thresholds[gi - 1],
                    count,
                    min: Some(mn),
                    q1: Some(q(0.25)),
                    median: Some(q(0.5)),
                    q3: Some(q(0.75)),
                    max: Some(mx),
                    mean: Some(sum / count as f64),
                });
            }
            if acc.clip_lo + acc.clip_hi > 0 {
                warnings.push(alloc::format!(
                    "{} histogram values clamped into edge bins; widen histogram.range for exact quantiles",
                    acc.clip_lo + acc.clip_hi
                ));
            }
            for g in &groups {
                if g.count == 0 {
                    warnings.push(alloc::format!(
                        "group {} (r >= {}) is empty: threshold beyond grid extents",
                        g.group, g.r_min
                    ));
                }
            }
        }

        // Per-window exceedance with binomial intervals.
        let mut exceedance = Vec::new();
        for (ei, &eps) in cfg.epsilons.iter().enumerate() {
            for (slot, &(si, wi, m, j)) in self.window_slots.iter().enumerate() {
                let s = window_exceed[ei][slot];
                let (p, lo, hi, wilson) = binomial_interval(s, reps);
                if wilson {
                    warnings.push(alloc::format!(
                        "exceedance CI for window ({m}, {j}) at eps = {eps} uses the Wilson fallback ({s} successes); add replications to narrow it",
                    ));
                }
                exceedance.push(ExceedanceEntry {
                    set: cfg.window_sets[si].name.clone(),
                    index: wi,
                    m,
                    j,
                    epsilon: eps,
                    successes: s,
                    n: reps,
                    p_hat: p,
                    ci_lo: lo,
                    ci_hi: hi,
                    wilson,
                });
            }
        }

        // Rate series over doubling sub-squares.
        let mut rate = Vec::new();
        if !cfg.alphas.is_empty() && !cfg.epsilons.is_empty() {
            let side = cfg.rows.min(cfg.cols);
            let mut doubles = Vec::new();
            let mut n = 4u32;
            while n <= side {
                doubles.push(n);
                if n > side / 2 {
                    break;
                }
                n *= 2;
            }
            for &alpha in &cfg.alphas {
                for (ei, &eps) in cfg.epsilons.iter().enumerate() {
                    let counts = &acc.exceed[ei];
                    let mut partial = Vec::with_capacity(doubles.len());
                    let mut prev_n = 0u32;
                    let mut running = 0.0f64;
                    for &nn in &doubles {
                        // Cells new to [1, nn]², row-major order.
                        for r in 0..nn as usize {
                            let base = r * cfg.cols as usize;
                            let c_lo = if (r as u32) < prev_n { prev_n as usize } else { 0 };
                            for c in c_lo..nn as usize {
                                let cnt = counts[base + c];
                                if cnt > 0 {
                                    let prod = (r + 1) as f64 * (c + 1) as f64;
                                    running += math::pow(prod, -alpha)
                                        * (cnt as f64 / reps as f64);
                                }
                            }
                        }
                        partial.push(RatePoint { n: nn, partial_sum: running });
                        prev_n = nn;
                    }
                    let classification = classify_rate(&partial);
                    rate.push(RateEntry { alpha, epsilon: eps, partial, classification });
                }
            }
        }

        // Raw-draw tail check against exp(−ψ(x/τ)); the draw stream uses
        // the first realization index the grids never touch.
        let mut tail_check = Vec::new();
        if let Some(tc) = &cfg.tail_check {
            let n = tc.draws as usize;
            let xs_draws = simulate::draws(&cfg.dist, cfg.seed, reps, n);
            for &x in &tc.xs {
                let bound = math::exp(-self.family.psi(x / tc.tau));
                let hits = xs_draws.iter().filter(|&&v| v >= x).count() as f64;
                let empirical = hits / n as f64;
                let sigma = math::sqrt(bound * (1.0 - bound) / n as f64);
                tail_check.push(TailCheckEntry {
                    x,
                    bound,
                    empirical,
                    sigma,
                    ok: empirical <= bound + 3.0 * sigma,
                });
            }
        }

        ExperimentReport {
            config: cfg.clone(),
            rmse,
            groups,
            exceedance,
            rate,
            tail_check,
            warnings,
        }
    }
}

fn classify_rate(partial: &[RatePoint]) -> RateClass {
    if partial.len() < 2 {
        return RateClass::Indeterminate;
    }
    let last = partial[partial.len() - 1].partial_sum;
    let prev = partial[partial.len() - 2].partial_sum;
    if last == 0.0 {
        return RateClass::Stabilizing;
    }
    if (last - prev) / last < 1e-3 {
        return RateClass::Stabilizing;
    }
    if prev > 0.0 && (last - prev) / prev > 0.10 {
        return RateClass::Growing;
    }
    RateClass::Indeterminate
}

/// Interpolated quantile of a fixed-width histogram holding `n` values.
fn hist_quantile(hist: &[u64], n: u64, lo: f64, width: f64, p: f64) -> f64 {
    debug_assert!(n > 0);
    let rank = p * (n - 1) as f64;
    let target = rank as u64;
    let frac = rank - target as f64;
    let mut cum = 0u64;
    let mut v_lo = None;
    let mut v_hi = None;
    for (i, &c) in hist.iter().enumerate() {
        if c == 0 {
            continue;
        }
        let next = cum + c;
        let order_value = |k: u64| lo + (i as f64 + (k - cum) as f64 / c as f64 + 0.5 / c as f64) * width;
        if v_lo.is_none() && target < next {
            v_lo = Some(order_value(target));
        }
        if v_hi.is_none() && target + 1 < next.max(1) {
            v_hi = Some(order_value((target + 1).min(next - 1)));
        }
        if v_lo.is_some() && v_hi.is_some() {
            break;
        }
        cum = next;
    }
    let a = v_lo.unwrap_or(lo);
    let b = v_hi.unwrap_or(a);
    a * (1.0 - frac) + b * frac
}

/// 95% binomial interval: normal approximation, Wilson below 10 successes.
fn binomial_interval(successes: u64, n: u64) -> (f64, f64, f64, bool) {
    let z = 1.959_963_984_540_054;
    let p = successes as f64 / n as f64;
    if successes >= 10 && n - successes >= 10 {
        let half = z * math::sqrt(p * (1.0 - p) / n as f64);
        (p, (p - half).max(0.0), (p + half).min(1.0), false)
    } else {
        let nf = n as f64;
        let denom = 1.0 + z * z / nf;
        let centre = (p + z * z / (2.0 * nf)) / denom;
        let half = z * math::sqrt(p * (1.0 - p) / nf + z * z / (4.0 * nf * nf)) / denom;
        (p, (centre - half).max(0.0), (centre + half).min(1.0), true)
    }
}

/// Run the whole experiment on the current thread.
pub fn run_sequential(config: ExperimentConfig) -> Result<ExperimentReport, ConfigError> {
    let ctx = ExperimentContext::new(config)?;
    let mut acc = ctx.new_commutative();
    let mut scratch = ctx.new_scratch();
    let mut ordered = Vec::with_capacity(ctx.replications() as usize);
    for rep in 0..ctx.replications() as u64 {
        ordered.push(ctx.replicate(rep, &mut acc, &mut scratch));
    }
    Ok(ctx.finalize(&acc, &ordered))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maxima::{deviations, normalizer};
    use alloc::string::ToString;
    use alloc::vec;

    fn desk_config() -> ExperimentConfig {
        ExperimentConfig {
            dist: DistKind::ReflectedWeibull { theta: 9.0, b: 1.25 },
            family: FamilyKind::WeibullConjugate { theta: 9.0, b: 1.25 },
            g: Growth::Constant { value: 1.0 },
            rows: 32,
            cols: 32,
            replications: 20,
            seed: 11,
            window_sets: vec![WindowSet {
                name: "square".to_string(),
                windows: vec![(4, 4), (8, 8), (16, 16), (32, 32)],
            }],
            group_thresholds: vec![2, 8, 24],
            epsilons: vec![0.1, 50.0],
            alphas: vec![0.0, 1.5],
            histogram: HistogramSpec::default(),
            tail_check: Some(TailCheckSpec { tau: 0.997, xs: vec![0.625, 1.25], draws: 20_000 }),
        }
    }

    #[test]
    fn report_is_deterministic() {
        let a = run_sequential(desk_config()).unwrap();
        let b = run_sequential(desk_config()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rmse_matches_direct_recomputation() {
        let cfg = desk_config();
        let report = run_sequential(cfg.clone()).unwrap();
        let family = OrliczFamily::from_kind(cfg.family.clone()).unwrap();
        let spec = NormalizerSpec { g: cfg.g.clone(), family };
        for entry in &report.rmse {
            let mut sumsq = 0.0;
            for rep in 0..cfg.replications as u64 {
                let arr = simulate::sample(&cfg.dist, cfg.seed, rep, cfg.rows, cfg.cols).unwrap();
                let grid = deviations(&arr, &spec);
                let y = grid.y_at(entry.m, entry.j).unwrap();
                sumsq += y * y;
            }
            let direct = math::sqrt(sumsq / cfg.replications as f64);
            assert!(
                (entry.rmse - direct).abs() <= 1e-12 * direct.max(1.0),
                "window ({}, {}): {} vs {direct}",
                entry.m,
                entry.j,
                entry.rmse
            );
        }
    }

    #[test]
    fn constant_field_rmse_equals_normalizer() {
        let mut cfg = desk_config();
        cfg.dist = DistKind::Constant { value: 0.0 };
        cfg.tail_check = None;
        let report = run_sequential(cfg.clone()).unwrap();
        let family = OrliczFamily::from_kind(cfg.family.clone()).unwrap();
        let spec = NormalizerSpec { g: cfg.g.clone(), family };
        for entry in &report.rmse {
            let a = normalizer(&spec, entry.m, entry.j);
            assert!((entry.rmse - a).abs() < 1e-12, "rmse {} vs a {a}", entry.rmse);
        }
    }

    #[test]
    fn group_counts_nest_and_medians_exist() {
        let report = run_sequential(desk_config()).unwrap();
        assert_eq!(report.groups.len(), 3);
        for w in report.groups.windows(2) {
            assert!(w[1].count < w[0].count, "pooled counts must strictly decrease");
        }
        for g in &report.groups {
            assert!(g.count > 0);
            let (q1, med, q3) = (g.q1.unwrap(), g.median.unwrap(), g.q3.unwrap());
            assert!(g.min.unwrap() <= q1 && q1 <= med && med <= q3 && q3 <= g.max.unwrap());
        }
    }

    #[test]
    fn empty_group_is_reported_not_erred() {
        let mut cfg = desk_config();
        cfg.group_thresholds = vec![2, 64];
        let report = run_sequential(cfg).unwrap();
        assert_eq!(report.groups.len(), 2);
        assert_eq!(report.groups[1].count, 0);
        assert!(report.groups[1].median.is_none());
        assert!(report.warnings.iter().any(|w| w.contains("empty")));
    }

    #[test]
    fn rate_series_monotone_and_degenerate_epsilon() {
        let report = run_sequential(desk_config()).unwrap();
        for entry in &report.rate {
            for w in entry.partial.windows(2) {
                assert!(w[1].partial_sum >= w[0].partial_sum, "partial sums non-decreasing");
            }
            if entry.epsilon == 50.0 {
                assert!(entry.partial.iter().all(|p| p.partial_sum == 0.0));
                assert_eq!(entry.classification, RateClass::Stabilizing);
            }
        }
    }

    #[test]
    fn exceedance_probabilities_are_sane() {
        let report = run_sequential(desk_config()).unwrap();
        for e in &report.exceedance {
            assert!(e.p_hat >= 0.0 && e.p_hat <= 1.0);
            assert!(e.ci_lo <= e.p_hat && e.p_hat <= e.ci_hi);
            if e.epsilon == 50.0 {
                assert_eq!(e.successes, 0);
                assert!(e.wilson);
            }
        }
    }

    #[test]
    fn tail_check_passes_for_true_norm() {
        let report = run_sequential(desk_config()).unwrap();
        assert_eq!(report.tail_check.len(), 2);
        for t in &report.tail_check {
            assert!(t.ok, "x = {}: {} > {} + 3*{}", t.x, t.empirical, t.bound, t.sigma);
        }
    }

    #[test]
    fn config_validation_rejections() {
        let mut cfg = desk_config();
        cfg.replications = 0;
        assert!(matches!(cfg.validate(), Err(ConfigError::ZeroReplications)));

        let mut cfg = desk_config();
        cfg.window_sets[0].windows.push((33, 1));
        assert!(matches!(cfg.validate(), Err(ConfigError::WindowOutOfRange { .. })));

        let mut cfg = desk_config();
        cfg.group_thresholds = vec![4, 4];
        assert!(matches!(cfg.validate(), Err(ConfigError::ThresholdsNotIncreasing { .. })));

        let mut cfg = desk_config();
        cfg.dist = DistKind::ReflectedWeibull { theta: 0.5, b: 1.0 };
        assert!(matches!(cfg.validate(), Err(ConfigError::Dist(_))));

        let mut cfg = desk_config();
        cfg.tail_check = Some(TailCheckSpec { tau: 0.0, xs: vec![1.0], draws: 10 });
        assert!(matches!(cfg.validate(), Err(ConfigError::BadTailCheck(_))));
    }

    #[test]
    fn histogram_quantile_interpolation() {
        // 4 values in known bins: quantiles must land inside the data range.
        let mut hist = vec![0u64; 8];
        hist[1] = 1; // ~ -0.75 on [-1, 1) with width 0.25
        hist[2] = 1;
        hist[5] = 1;
        hist[6] = 1;
        let med = hist_quantile(&hist, 4, -1.0, 0.25, 0.5);
        assert!(med > -0.5 && med < 0.5, "median = {med}");
        let q0 = hist_quantile(&hist, 4, -1.0, 0.25, 0.0);
        let q1 = hist_quantile(&hist, 4, -1.0, 0.25, 1.0);
        assert!(q0 < q1);
    }
}
