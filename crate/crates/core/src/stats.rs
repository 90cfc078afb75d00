//! Peak extraction and the paired signed-rank test used to decide whether a
//! secondary response differs from the primary one.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::StatsError;

/// Pairs needed before a verdict is attempted.
pub const MIN_PAIRS: usize = 5;
/// Largest sample for which the null distribution is computed exactly.
pub const EXACT_LIMIT: usize = 20;
/// Peaks are searched in `[injection, injection + PEAK_WINDOW)`.
pub const PEAK_WINDOW: usize = 40;
pub const SIGNIFICANCE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakPair {
    pub primary_peak: f64,
    pub secondary_peak: f64,
    pub window_length: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    pub p_value: f64,
    pub significant_99: bool,
    /// Mean secondary peak over mean primary peak.
    pub ratio: f64,
    pub n_nonzero: usize,
    pub exact: bool,
    /// Every difference was zero; the test carries no information.
    pub degenerate: bool,
}

impl WilcoxonResult {
    /// A memory verdict: the secondary peak is significantly smaller.
    pub fn shows_memory(&self) -> bool {
        self.significant_99 && self.ratio < 1.0
    }
}

/// Maximum of `series[start..end]` and the earliest index attaining it.
pub fn detect_peak(series: &[f64], start: usize, end: usize) -> Result<(usize, f64), StatsError> {
    if start >= end || end > series.len() {
        return Err(StatsError::BadWindow {
            start,
            end,
            len: series.len(),
        });
    }
    let mut best = (start, series[start]);
    for (i, &v) in series.iter().enumerate().take(end).skip(start + 1) {
        if v > best.1 {
            best = (i, v);
        }
    }
    Ok(best)
}

/// Average ranks (1-based) of `values`, ties sharing the mean of their ranks.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j + 1) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = avg;
        }
        i = j;
    }
    ranks
}

/// Two-sided signed-rank test on `(primary, secondary)` pairs.
///
/// Zero differences are dropped and tied magnitudes share average ranks.
/// Up to [`EXACT_LIMIT`] non-zero differences the null distribution of the
/// positive rank sum is computed exactly; larger samples use the normal
/// approximation with tie and continuity corrections.
pub fn wilcoxon_signed_rank(pairs: &[(f64, f64)]) -> Result<WilcoxonResult, StatsError> {
    if pairs.len() < MIN_PAIRS {
        return Err(StatsError::TooFewPairs {
            min: MIN_PAIRS,
            got: pairs.len(),
        });
    }
    let mean_primary = pairs.iter().map(|p| p.0).sum::<f64>() / pairs.len() as f64;
    let mean_secondary = pairs.iter().map(|p| p.1).sum::<f64>() / pairs.len() as f64;
    let ratio = mean_secondary / mean_primary;

    let diffs: Vec<f64> = pairs
        .iter()
        .map(|&(a, b)| b - a)
        .filter(|d| *d != 0.0)
        .collect();
    let n = diffs.len();
    if n == 0 {
        return Ok(WilcoxonResult {
            p_value: 1.0,
            significant_99: false,
            ratio,
            n_nonzero: 0,
            exact: true,
            degenerate: true,
        });
    }
    let magnitudes: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = average_ranks(&magnitudes);
    let (p_value, exact) = if n <= EXACT_LIMIT {
        (exact_p_value(&diffs, &ranks), true)
    } else {
        (normal_p_value(&diffs, &ranks, &magnitudes), false)
    };
    Ok(WilcoxonResult {
        p_value,
        significant_99: p_value < SIGNIFICANCE,
        ratio,
        n_nonzero: n,
        exact,
        degenerate: false,
    })
}

/// Exact two-sided p: `P(|W - mu| >= |w - mu|)` under random signs.
///
/// Average ranks are multiples of 1/2, so doubled ranks are integers and the
/// distribution of the doubled positive sum is built by counting subsets.
fn exact_p_value(diffs: &[f64], ranks: &[f64]) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let total: usize = doubled.iter().sum();
    let observed: usize = diffs
        .iter()
        .zip(&doubled)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| *r)
        .sum();

    // counts[s] = number of sign assignments whose doubled positive sum is s
    let mut counts = vec![0.0f64; total + 1];
    counts[0] = 1.0;
    let mut reach = 0;
    for &r in &doubled {
        for s in (0..=reach).rev() {
            let c = counts[s];
            if c != 0.0 {
                counts[s + r] += c;
            }
        }
        reach += r;
    }

    // compare |2s - total| against |2*observed - total| in integer arithmetic
    let dev = |s: usize| (2 * s).abs_diff(total);
    let threshold = dev(observed);
    let extreme: f64 = counts
        .iter()
        .enumerate()
        .filter(|(s, _)| dev(*s) >= threshold)
        .map(|(_, c)| *c)
        .sum();
    let p = extreme / 2f64.powi(diffs.len() as i32);
    p.min(1.0)
}

fn normal_p_value(diffs: &[f64], ranks: &[f64], magnitudes: &[f64]) -> f64 {
    let n = diffs.len() as f64;
    let w_plus: f64 = diffs
        .iter()
        .zip(ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| r)
        .sum();
    let mean = n * (n + 1.0) / 4.0;
    let tie_term: f64 = tie_group_sizes(magnitudes)
        .into_iter()
        .map(|t| {
            let t = t as f64;
            t * t * t - t
        })
        .sum::<f64>()
        / 48.0;
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term;
    if var <= 0.0 {
        return 1.0;
    }
    let z = ((w_plus - mean).abs() - 0.5).max(0.0) / var.sqrt();
    // two-sided: 2 * (1 - Phi(z)) = erfc(z / sqrt 2)
    erfc(z / std::f64::consts::SQRT_2).min(1.0)
}

fn tie_group_sizes(values: &[f64]) -> Vec<usize> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut groups = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        if j - i > 1 {
            groups.push(j - i);
        }
        i = j;
    }
    groups
}

/// Injection-anchored peak windows: `[at, at + PEAK_WINDOW)` clipped to the
/// next injection and the series end.
pub fn peak_windows(injections: &[usize], len: usize) -> Vec<(usize, usize)> {
    injections
        .iter()
        .enumerate()
        .map(|(i, &at)| {
            let next = injections.get(i + 1).copied().unwrap_or(len);
            (at, (at + PEAK_WINDOW).min(next).min(len))
        })
        .collect()
}

/// Primary and secondary peaks of one replicate's series.
pub fn peak_pair(series: &[f64], injections: &[usize]) -> Result<PeakPair, StatsError> {
    if injections.len() < 2 {
        return Err(StatsError::NeedTwoInjections(injections.len()));
    }
    let windows = peak_windows(&injections[..2], series.len());
    let (_, primary_peak) = detect_peak(series, windows[0].0, windows[0].1)?;
    let (_, secondary_peak) = detect_peak(series, windows[1].0, windows[1].1)?;
    Ok(PeakPair {
        primary_peak,
        secondary_peak,
        window_length: windows[0].1 - windows[0].0,
    })
}

/// Runs the signed-rank test over the antigen peaks of a set of replicates.
pub fn classify_experiment<'a, I>(
    series: I,
    injections: &[usize],
) -> Result<WilcoxonResult, StatsError>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let pairs = series
        .into_iter()
        .map(|s| peak_pair(s, injections).map(|p| (p.primary_peak, p.secondary_peak)))
        .collect::<Result<Vec<_>, _>>()?;
    wilcoxon_signed_rank(&pairs)
}
