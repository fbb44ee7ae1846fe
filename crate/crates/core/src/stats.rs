//! Least-squares fits and the per-strip series behind the figures.

use crate::strips::{primary_score, rounded_strip, strip_width, Strip};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("x values are all equal")]
    Degenerate,
    #[error("need at least {need} points, got {got}")]
    TooFew { need: usize, got: usize },
    #[error("series lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
}

pub type Result<T> = std::result::Result<T, StatsError>;

/// Ordinary least squares `y = intercept + slope x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub intercept_stderr: f64,
    pub n: usize,
}

impl FitResult {
    /// Is `value` within `k` standard errors of the slope?
    pub fn slope_within(&self, value: f64, k: f64) -> bool {
        (self.slope - value).abs() <= k * self.slope_stderr
    }
}

pub fn linfit(xs: &[f64], ys: &[f64]) -> Result<FitResult> {
    if xs.len() != ys.len() {
        return Err(StatsError::LengthMismatch(xs.len(), ys.len()));
    }
    let n = xs.len();
    if n < 3 {
        return Err(StatsError::TooFew { need: 3, got: n });
    }
    let nf = n as f64;
    let x_mean = xs.iter().sum::<f64>() / nf;
    let y_mean = ys.iter().sum::<f64>() / nf;
    let (mut sxx, mut sxy) = (0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let dx = x - x_mean;
        sxx += dx * dx;
        sxy += dx * (y - y_mean);
    }
    if sxx == 0.0 {
        return Err(StatsError::Degenerate);
    }
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    let ssr: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - intercept - slope * x;
            r * r
        })
        .sum();
    let s2 = ssr / (nf - 2.0);
    Ok(FitResult {
        slope,
        intercept,
        slope_stderr: (s2 / sxx).sqrt(),
        intercept_stderr: (s2 * (1.0 / nf + x_mean * x_mean / sxx)).sqrt(),
        n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesId {
    Bottoms,
    Tops,
    Widths,
    Zeros,
    ZerosPerWidth,
    PrimaryScore,
}

impl SeriesId {
    pub const ALL: [SeriesId; 6] = [
        SeriesId::Bottoms,
        SeriesId::Tops,
        SeriesId::Widths,
        SeriesId::Zeros,
        SeriesId::ZerosPerWidth,
        SeriesId::PrimaryScore,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SeriesId::Bottoms => "bottoms",
            SeriesId::Tops => "tops",
            SeriesId::Widths => "widths",
            SeriesId::Zeros => "zeros",
            SeriesId::ZerosPerWidth => "zeros_per_width",
            SeriesId::PrimaryScore => "primary_score",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub m: u32,
    pub value: f64,
}

/// One row per strip. Heights and widths are the rounded integers when
/// `rounded` is set, and `zeros_per_width` then divides by the rounded width.
pub fn series(strips: &[Strip], id: SeriesId, rounded: bool) -> Vec<SeriesRow> {
    strips
        .iter()
        .map(|s| {
            let r = rounded_strip(s);
            let width = if rounded { r.width as f64 } else { strip_width(s) };
            let value = match id {
                SeriesId::Bottoms if rounded => r.bottom as f64,
                SeriesId::Bottoms => s.bottom_t,
                SeriesId::Tops if rounded => r.top as f64,
                SeriesId::Tops => s.top_t,
                SeriesId::Widths => width,
                SeriesId::Zeros => s.n_zeros() as f64,
                SeriesId::ZerosPerWidth => s.n_zeros() as f64 / width,
                SeriesId::PrimaryScore => primary_score(s).value,
            };
            SeriesRow { m: s.m, value }
        })
        .collect()
}

pub fn fit_series(rows: &[SeriesRow], x_offset: f64) -> Result<FitResult> {
    let xs: Vec<f64> = rows.iter().map(|r| r.m as f64 + x_offset).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.value).collect();
    linfit(&xs, &ys)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub n: usize,
    pub mean: f64,
    /// Unbiased sample variance.
    pub variance: f64,
}

impl Moments {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let variance = if n > 1 {
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0)
        } else {
            0.0
        };
        Self { n, mean, variance }
    }

    pub fn std_error(&self) -> f64 {
        (self.variance / self.n as f64).sqrt()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalvesReport {
    pub first: Moments,
    pub second: Moments,
    pub pooled: Moments,
    /// `second.variance / first.variance`; 1 when both vanish, `None`
    /// when only the first does.
    pub variance_ratio: Option<f64>,
}

/// Splits the scores into a lower and an upper half (the lower half takes
/// the extra element of an odd count) and compares their moments.
pub fn dispersion_compare(scores: &[f64]) -> Result<HalvesReport> {
    if scores.len() < 4 {
        return Err(StatsError::TooFew {
            need: 4,
            got: scores.len(),
        });
    }
    let (a, b) = scores.split_at(scores.len().div_ceil(2));
    let first = Moments::of(a);
    let second = Moments::of(b);
    let variance_ratio = match (first.variance == 0.0, second.variance == 0.0) {
        (true, true) => Some(1.0),
        (true, false) => None,
        _ => Some(second.variance / first.variance),
    };
    Ok(HalvesReport {
        first,
        second,
        pooled: Moments::of(scores),
        variance_ratio,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScatterReport {
    /// Residual standard error about the fit against `ln m`, over the mean.
    pub cv_a: f64,
    pub cv_b: f64,
    /// `cv_b / cv_a`; 1 when both vanish.
    pub ratio: f64,
}

pub fn detrended_cv(rows: &[SeriesRow]) -> Result<f64> {
    let xs: Vec<f64> = rows.iter().map(|r| (r.m as f64).ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.value).collect();
    let fit = linfit(&xs, &ys)?;
    let ssr: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - fit.intercept - fit.slope * x).powi(2))
        .sum();
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let spread = (ssr / (ys.len() as f64 - 2.0)).sqrt();
    Ok(if spread == 0.0 { 0.0 } else { spread / mean.abs() })
}

pub fn scatter_dispersion(series_a: &[SeriesRow], series_b: &[SeriesRow]) -> Result<ScatterReport> {
    if series_a.len() != series_b.len() {
        return Err(StatsError::LengthMismatch(series_a.len(), series_b.len()));
    }
    let cv_a = detrended_cv(series_a)?;
    let cv_b = detrended_cv(series_b)?;
    let ratio = if cv_a == 0.0 && cv_b == 0.0 { 1.0 } else { cv_b / cv_a };
    Ok(ScatterReport { cv_a, cv_b, ratio })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Normal equations `[n sx; sx sxx] [a; b] = [sy; sxy]` solved by
    /// Cramer's rule, with the covariance from the inverse matrix.
    fn normal_equations(xs: &[f64], ys: &[f64]) -> (f64, f64, f64, f64) {
        let n = xs.len() as f64;
        let sx: f64 = xs.iter().sum();
        let sy: f64 = ys.iter().sum();
        let sxx: f64 = xs.iter().map(|x| x * x).sum();
        let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| x * y).sum();
        let det = n * sxx - sx * sx;
        let a = (sy * sxx - sx * sxy) / det;
        let b = (n * sxy - sx * sy) / det;
        let rss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - a - b * x).powi(2)).sum();
        let s2 = rss / (n - 2.0);
        (b, a, (s2 * n / det).sqrt(), (s2 * sxx / det).sqrt())
    }

    #[test]
    fn exact_line() {
        let xs: Vec<f64> = (1..=200).map(f64::from).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 9.06472 * x).collect();
        let fit = linfit(&xs, &ys).unwrap();
        assert!((fit.slope - 9.06472).abs() < 1e-12);
        assert!(fit.intercept.abs() < 1e-10);
        assert!(fit.slope_stderr < 1e-12 && fit.intercept_stderr < 1e-10);
    }

    #[test]
    fn degenerate_inputs() {
        assert_eq!(linfit(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]), Err(StatsError::Degenerate));
        assert!(matches!(linfit(&[1.0, 2.0], &[1.0, 2.0]), Err(StatsError::TooFew { .. })));
    }

    #[test]
    fn matches_normal_equations_on_seeded_data() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let xs: Vec<f64> = (0..200).map(|_| rng.gen_range(0.0..100.0)).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 0.3 + 9.0 * x + rng.gen_range(-3.0..3.0)).collect();
        let fit = linfit(&xs, &ys).unwrap();
        let (b, a, sb, sa) = normal_equations(&xs, &ys);
        assert!((fit.slope - b).abs() < 1e-10);
        assert!((fit.intercept - a).abs() < 1e-10);
        assert!((fit.slope_stderr - sb).abs() < 1e-10);
        assert!((fit.intercept_stderr - sa).abs() < 1e-10);
    }

    #[test]
    fn halves_degenerate_ratio() {
        let r = dispersion_compare(&[0.5; 10]).unwrap();
        assert_eq!(r.first.variance, 0.0);
        assert_eq!(r.variance_ratio, Some(1.0));
        assert_eq!(r.pooled.mean, 0.5);
    }

    #[test]
    fn halves_split() {
        let r = dispersion_compare(&[0.0, 1.0, 0.0, 1.0, 0.0, 2.0, 0.0, 2.0]).unwrap();
        assert_eq!(r.first.n, 4);
        assert!((r.variance_ratio.unwrap() - 4.0).abs() < 1e-12);
        assert!(dispersion_compare(&[0.5, 0.5, 0.5]).is_err());
    }

    fn rows(values: &[f64]) -> Vec<SeriesRow> {
        values.iter().zip(1..).map(|(&value, m)| SeriesRow { m, value }).collect()
    }

    #[test]
    fn scatter_examples() {
        let a = rows(&[1.0, 3.0, 2.0, 5.0, 4.0, 4.0]);
        assert_eq!(scatter_dispersion(&a, &a).unwrap().ratio, 1.0);
        let flat = rows(&[2.0; 6]);
        let r = scatter_dispersion(&flat, &flat).unwrap();
        assert_eq!((r.cv_a, r.cv_b, r.ratio), (0.0, 0.0, 1.0));
        // a pure log trend detrends to nothing
        let trend: Vec<SeriesRow> =
            (1..=50).map(|m| SeriesRow { m, value: 3.0 + (m as f64).ln() }).collect();
        assert!(detrended_cv(&trend).unwrap() < 1e-12);
    }

    proptest! {
        #[test]
        fn ols_agrees_with_normal_equations(
            pts in proptest::collection::vec((-50.0f64..50.0, -50.0f64..50.0), 3..60)
        ) {
            let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
            let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
            prop_assume!(xs.iter().any(|x| (x - xs[0]).abs() > 1e-3));
            let fit = linfit(&xs, &ys).unwrap();
            let (b, a, sb, _) = normal_equations(&xs, &ys);
            prop_assert!((fit.slope - b).abs() <= 1e-8 * (1.0 + b.abs()));
            prop_assert!((fit.intercept - a).abs() <= 1e-6 * (1.0 + a.abs()));
            prop_assert!((fit.slope_stderr - sb).abs() <= 1e-6 * (1.0 + sb));
            prop_assert!(fit.slope_stderr >= 0.0 && fit.intercept_stderr >= 0.0);
        }
    }
}
