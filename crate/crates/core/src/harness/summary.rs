//! Run-level regret statistics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SUMMARY_VERSION: u32 = 1;

/// Log-spaced checkpoints (four per decade) up to `horizon`, always
/// including `horizon` itself.
pub fn default_checkpoints(horizon: u64) -> Vec<u64> {
    let mut out = Vec::new();
    for j in 0.. {
        let t = 10f64.powf(j as f64 / 4.0).round() as u64;
        if t >= horizon {
            break;
        }
        if out.last() != Some(&t) {
            out.push(t);
        }
    }
    out.push(horizon);
    out
}

/// Least-squares slope of `ln y` against `ln x` over the points with both
/// coordinates positive. `None` with fewer than two such points.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    let logs: Vec<(f64, f64)> =
        points.iter().filter(|(x, y)| *x > 0.0 && *y > 0.0).map(|(x, y)| (x.ln(), y.ln())).collect();
    if logs.len() < 2 {
        return None;
    }
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Linear-interpolation quantile of unsorted data.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

/// Regret of one seed at the checkpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedRegret {
    pub seed: u64,
    pub regret: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Summary {
    pub schema_version: u32,
    pub setting: String,
    pub algorithm: String,
    pub environment: String,
    pub horizon: u64,
    pub seeds: Vec<u64>,
    pub checkpoints: Vec<u64>,
    pub mean_regret: Vec<f64>,
    pub median_regret: Vec<f64>,
    pub q10_regret: Vec<f64>,
    pub q90_regret: Vec<f64>,
    pub q95_regret: Vec<f64>,
    /// Checkpoint range used for the slope fit.
    pub fit_range: [u64; 2],
    /// Slope of log mean regret against log t; `null` when undefined.
    pub loglog_slope: Option<f64>,
    pub final_regret: Vec<SeedRegret>,
}

/// Labels of the run a summary describes.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunLabels {
    pub setting: String,
    pub algorithm: String,
    pub environment: String,
}

/// Aggregates per-seed regret at common checkpoints.
pub fn summarize(
    labels: &RunLabels,
    horizon: u64,
    checkpoints: &[u64],
    per_seed: &[SeedRegret],
    fit_range: Option<(u64, u64)>,
) -> Result<Summary> {
    if per_seed.is_empty() {
        return Err(Error::invalid("no seeds to summarize"));
    }
    if per_seed.iter().any(|s| s.regret.len() != checkpoints.len()) {
        return Err(Error::invalid("every seed needs one regret value per checkpoint"));
    }
    let column = |k: usize| per_seed.iter().map(|s| s.regret[k]).collect::<Vec<_>>();
    let stat = |f: &dyn Fn(&[f64]) -> f64| (0..checkpoints.len()).map(|k| f(&column(k))).collect::<Vec<_>>();
    let mean_regret = stat(&|v| v.iter().sum::<f64>() / v.len() as f64);
    let (from, to) = fit_range.unwrap_or((1, horizon));
    let points: Vec<(f64, f64)> = checkpoints
        .iter()
        .zip(&mean_regret)
        .filter(|(t, _)| (from..=to).contains(*t))
        .map(|(t, r)| (*t as f64, *r))
        .collect();
    Ok(Summary {
        schema_version: SUMMARY_VERSION,
        setting: labels.setting.clone(),
        algorithm: labels.algorithm.clone(),
        environment: labels.environment.clone(),
        horizon,
        seeds: per_seed.iter().map(|s| s.seed).collect(),
        checkpoints: checkpoints.to_vec(),
        median_regret: stat(&|v| quantile(v, 0.5)),
        q10_regret: stat(&|v| quantile(v, 0.1)),
        q90_regret: stat(&|v| quantile(v, 0.9)),
        q95_regret: stat(&|v| quantile(v, 0.95)),
        mean_regret,
        fit_range: [from, to],
        loglog_slope: loglog_slope(&points),
        final_regret: per_seed
            .iter()
            .map(|s| SeedRegret { seed: s.seed, regret: s.regret.last().copied().into_iter().collect() })
            .collect(),
    })
}

/// Picks the regret at each checkpoint from a full `(t, regret)` series.
pub fn at_checkpoints(series: &[(u64, f64)], checkpoints: &[u64]) -> Result<Vec<f64>> {
    checkpoints
        .iter()
        .map(|c| {
            series
                .binary_search_by_key(c, |p| p.0)
                .map(|i| series[i].1)
                .map_err(|_| Error::invalid(format!("trace has no row for t = {c}")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_regret_has_slope_one() {
        let pts: Vec<(f64, f64)> = (1..100).map(|t| (t as f64, 3.0 * t as f64)).collect();
        assert!((loglog_slope(&pts).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sqrt_regret_has_slope_half() {
        let cps = default_checkpoints(100_000);
        let pts: Vec<(f64, f64)> = cps.iter().map(|t| (*t as f64, (*t as f64).sqrt())).collect();
        assert!((loglog_slope(&pts).unwrap() - 0.5).abs() < 0.01);
    }

    #[test]
    fn checkpoints_are_log_spaced() {
        let c = default_checkpoints(1000);
        assert_eq!(c, vec![1, 2, 3, 6, 10, 18, 32, 56, 100, 178, 316, 562, 1000]);
        assert_eq!(default_checkpoints(1), vec![1]);
    }

    #[test]
    fn quantiles_interpolate() {
        let v = [4.0, 1.0, 3.0, 2.0];
        assert_eq!(quantile(&v, 0.0), 1.0);
        assert_eq!(quantile(&v, 0.5), 2.5);
        assert_eq!(quantile(&v, 1.0), 4.0);
    }

    #[test]
    fn summary_has_a_fixed_key_set() {
        let labels = RunLabels { setting: "bandit".into(), algorithm: "scb".into(), environment: "x".into() };
        let s = summarize(&labels, 10, &[1, 10], &[SeedRegret { seed: 0, regret: vec![1.0, 10.0] }], None).unwrap();
        let v: serde_json::Value = serde_json::to_value(&s).unwrap();
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(|k| k.as_str()).collect();
        assert_eq!(keys.len(), 15);
        assert_eq!(s.loglog_slope, Some(1.0));
    }
}
