//! Log-log slope fits of learning curves.

use serde::Serialize;

use crate::error::{LabError, Result};

/// A learning curve with its fitted power law `risk ~ C ell^slope`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateSeries {
    pub points: Vec<(u64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    /// RMS residual of the log-log fit.
    pub residual: f64,
    /// Half-open index range of `points` used by the fit.
    pub fit_window: (usize, usize),
    /// Slopes of consecutive three-point windows over the positive points.
    pub sliding_slopes: Vec<f64>,
    /// Set when the sliding slopes steepen monotonically, as for `exp(-ell)`.
    pub super_polynomial: bool,
}

struct LineFit {
    slope: f64,
    intercept: f64,
    stderr: f64,
    rms: f64,
}

fn least_squares(xy: &[(f64, f64)]) -> LineFit {
    let n = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / n;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xy.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let stderr = if xy.len() > 2 { (sse / (n - 2.0) / sxx).sqrt() } else { f64::NAN };
    LineFit { slope, intercept, stderr, rms: (sse / n).sqrt() }
}

/// Fit with the default window, which drops the smallest third of the `ell` values.
pub fn fit_rate(points: &[(u64, f64)]) -> Result<RateSeries> {
    fit_rate_from(points, points.len() / 3)
}

/// Fit over `points[start..]`, skipping points with nonpositive risk.
pub fn fit_rate_from(points: &[(u64, f64)], start: usize) -> Result<RateSeries> {
    let mut points = points.to_vec();
    points.sort_by_key(|p| p.0);
    if points.windows(2).any(|w| w[0].0 == w[1].0) {
        return Err(LabError::Fit("repeated ell value".into()));
    }
    let start = start.min(points.len());
    let logged = |range: &[(u64, f64)]| -> Vec<(f64, f64)> {
        range
            .iter()
            .filter(|p| p.0 > 0 && p.1 > 0.0 && p.1.is_finite())
            .map(|p| ((p.0 as f64).ln(), p.1.ln()))
            .collect()
    };
    let window = logged(&points[start..]);
    if window.len() < 3 {
        return Err(LabError::Fit(format!("{} usable points in the fit window, need 3", window.len())));
    }
    let fit = least_squares(&window);
    let all = logged(&points);
    let sliding_slopes: Vec<f64> = all.windows(3).map(|w| least_squares(w).slope).collect();
    let super_polynomial = sliding_slopes.len() >= 2
        && sliding_slopes.windows(2).all(|w| w[1].abs() > w[0].abs() * (1.0 + 1e-9) + 1e-9)
        && sliding_slopes.last().unwrap().abs() >= 1.5 * sliding_slopes[0].abs();
    Ok(RateSeries {
        fit_window: (start, points.len()),
        points,
        slope: fit.slope,
        intercept: fit.intercept,
        slope_stderr: fit.stderr,
        residual: fit.rms,
        sliding_slopes,
        super_polynomial,
    })
}
