//! Empirical decay rates of trace columns.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum number of positive samples for a fit.
pub const MIN_POINTS: usize = 10;

/// Least-squares fit of `log(value)` against `log(n)` over `window`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub window: (u64, u64),
    pub slope: f64,
    pub r2: f64,
    pub n_points: usize,
    /// Samples in the window dropped for being zero, negative or non-finite.
    pub dropped: usize,
}

/// The last decade `[N/10, N]` of the largest index present.
pub fn last_decade(points: &[(u64, f64)]) -> Option<(u64, u64)> {
    let n = points.iter().map(|p| p.0).max()?;
    Some(((n / 10).max(1), n))
}

/// Fits over `window`, or over the last decade when `None`. Index `0` is
/// always excluded since `log 0` is undefined.
pub fn fit_slope(points: &[(u64, f64)], window: Option<(u64, u64)>) -> Result<SlopeFit> {
    let window = match window.or_else(|| last_decade(points)) {
        Some(w) if w.0 < w.1 => w,
        Some(w) => {
            return Err(Error::InvalidParameter(format!(
                "empty window [{}, {}]",
                w.0, w.1
            )))
        }
        None => return Err(Error::InvalidParameter("no samples to fit".into())),
    };
    let inside: Vec<(u64, f64)> = points
        .iter()
        .copied()
        .filter(|&(n, _)| n >= window.0.max(1) && n <= window.1)
        .collect();
    let logs: Vec<(f64, f64)> = inside
        .iter()
        .filter(|&&(_, v)| v > 0.0 && v.is_finite())
        .map(|&(n, v)| ((n as f64).ln(), v.ln()))
        .collect();
    let dropped = inside.len() - logs.len();
    if logs.len() < MIN_POINTS {
        return Err(Error::InvalidParameter(format!(
            "window [{}, {}] holds {} positive samples, at least {MIN_POINTS} are needed ({dropped} dropped)",
            window.0,
            window.1,
            logs.len()
        )));
    }
    let m = logs.len() as f64;
    let (mx, my) = logs
        .iter()
        .fold((0.0, 0.0), |(a, b), &(x, y)| (a + x / m, b + y / m));
    let (sxx, sxy, syy) = logs.iter().fold((0.0, 0.0, 0.0), |(a, b, c), &(x, y)| {
        let (dx, dy) = (x - mx, y - my);
        (a + dx * dx, b + dx * dy, c + dy * dy)
    });
    let slope = sxy / sxx;
    // a constant column is fitted exactly
    let r2 = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    Ok(SlopeFit {
        window,
        slope,
        r2,
        n_points: logs.len(),
        dropped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_law_and_constant() {
        let pts: Vec<_> = (1..=1000u64).map(|n| (n, (n as f64).powi(-2))).collect();
        let fit = fit_slope(&pts, None).unwrap();
        assert_eq!(fit.window, (100, 1000));
        assert!((fit.slope + 2.0).abs() < 1e-9);
        assert!((fit.r2 - 1.0).abs() < 1e-12);
        let flat: Vec<_> = (1..=1000u64).map(|n| (n, 3.0)).collect();
        assert!(fit_slope(&flat, None).unwrap().slope.abs() < 1e-12);
    }

    #[test]
    fn zeros_are_dropped_and_counted() {
        let mut pts: Vec<_> = (1..=200u64).map(|n| (n, 1.0 / n as f64)).collect();
        pts[150].1 = 0.0;
        let fit = fit_slope(&pts, None).unwrap();
        assert_eq!(fit.dropped, 1);
        let zeros: Vec<_> = (1..=200u64).map(|n| (n, 0.0)).collect();
        assert!(fit_slope(&zeros, None).is_err());
        assert!(fit_slope(&pts, Some((5, 5))).is_err());
    }
}
