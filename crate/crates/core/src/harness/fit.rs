//! Log-log rate fits of swept quantities against `N1`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::run::{read_csv, CsvRow};
use crate::error::{Error, Result};

/// Values below this are replaced before taking logarithms.
pub const ZERO_FLOOR: f64 = 1e-14;
pub const MIN_POINTS: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    /// `a1 + a2`.
    A,
    A1,
    A2,
    TraceNorm,
    HsNorm,
}

impl Quantity {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "a" | "a1+a2" => Quantity::A,
            "a1" => Quantity::A1,
            "a2" => Quantity::A2,
            "trace_norm" => Quantity::TraceNorm,
            "hs_norm" => Quantity::HsNorm,
            _ => {
                return Err(Error::Fit(format!(
                    "unknown quantity {s:?}; expected a, a1, a2, trace_norm or hs_norm"
                )))
            }
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Quantity::A => "a1+a2",
            Quantity::A1 => "a1",
            Quantity::A2 => "a2",
            Quantity::TraceNorm => "trace_norm",
            Quantity::HsNorm => "hs_norm",
        }
    }

    fn depends_on_theta(&self) -> bool {
        matches!(self, Quantity::TraceNorm)
    }

    fn value(&self, r: &CsvRow) -> f64 {
        match self {
            Quantity::A => r.a1 + r.a2,
            Quantity::A1 => r.a1,
            Quantity::A2 => r.a2,
            Quantity::TraceNorm => r.trace_norm,
            Quantity::HsNorm => r.hs_norm,
        }
    }

    /// Exponent of `N1` the theory predicts at fixed `t`.
    pub fn predicted_exponent(&self, theta: f64) -> Option<f64> {
        match self {
            Quantity::A | Quantity::A1 | Quantity::A2 => Some(-1.0),
            Quantity::TraceNorm => Some(-(1.0 - theta) / 2.0),
            Quantity::HsNorm => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub quantity: String,
    pub t: f64,
    pub theta: f64,
    pub n1: Vec<usize>,
    pub values: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub predicted: Option<f64>,
    pub deviation: Option<f64>,
    /// RMS of the log residuals.
    pub residual: f64,
    /// Standard error of the slope, `sqrt(rss / (n - 2) / Sxx)`.
    pub slope_stderr: f64,
    /// Some value was at or below [`ZERO_FLOOR`].
    pub floored: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Line {
    pub slope: f64,
    pub intercept: f64,
    /// RMS residual.
    pub residual: f64,
    /// NaN for two points.
    pub slope_stderr: f64,
}

/// Least-squares line through `(x, y)`.
pub fn least_squares(x: &[f64], y: &[f64]) -> Result<Line> {
    let n = x.len() as f64;
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Fit(format!("need at least 2 paired points, got {}", x.len().min(y.len()))));
    }
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    if !slope.is_finite() {
        return Err(Error::Fit("slope is not finite".into()));
    }
    let slope_stderr = if x.len() > 2 { (rss / (n - 2.0) / sxx).sqrt() } else { f64::NAN };
    Ok(Line {
        slope,
        intercept,
        residual: (rss / n).sqrt(),
        slope_stderr,
    })
}

/// Fits `log q = slope log N1 + intercept` over explicit `(N1, q)` points.
pub fn fit_points(quantity: Quantity, t: f64, theta: f64, points: &[(usize, f64)]) -> Result<RateFit> {
    if points.len() < MIN_POINTS {
        return Err(Error::Fit(format!(
            "{} needs at least {MIN_POINTS} N-points at t = {t}, found {}",
            quantity.name(),
            points.len()
        )));
    }
    let mut floored = false;
    let x: Vec<f64> = points.iter().map(|p| (p.0 as f64).ln()).collect();
    let y: Vec<f64> = points
        .iter()
        .map(|p| {
            if p.1 <= ZERO_FLOOR {
                floored = true;
                ZERO_FLOOR.ln()
            } else {
                p.1.ln()
            }
        })
        .collect();
    let Line {
        slope,
        intercept,
        residual,
        slope_stderr,
    } = least_squares(&x, &y)?;
    let predicted = quantity.predicted_exponent(theta);
    Ok(RateFit {
        quantity: quantity.name().into(),
        t,
        theta,
        n1: points.iter().map(|p| p.0).collect(),
        values: points.iter().map(|p| p.1).collect(),
        slope,
        intercept,
        predicted,
        deviation: predicted.map(|p| slope - p),
        residual,
        slope_stderr,
        floored,
    })
}

fn same_time(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

/// Selects one value per `N1` at time `t` (and `theta`, for trace norms) and fits.
pub fn fit_rows(rows: &[CsvRow], quantity: Quantity, t: f64, theta: f64) -> Result<RateFit> {
    let mut points: Vec<(usize, f64)> = Vec::new();
    for r in rows {
        if !same_time(r.t, t) || (quantity.depends_on_theta() && r.theta != theta) {
            continue;
        }
        if points.iter().any(|p| p.0 == r.n1) {
            continue;
        }
        points.push((r.n1, quantity.value(r)));
    }
    if points.is_empty() && !rows.is_empty() {
        let mut times: Vec<f64> = rows.iter().map(|r| r.t).collect();
        times.dedup();
        return Err(Error::Fit(format!("no rows at t = {t} (theta = {theta}); sampled times {times:?}")));
    }
    points.sort_by_key(|p| p.0);
    fit_points(quantity, t, theta, &points)
}

/// `fit_rows` over a sweep CSV on disk.
pub fn fit_rate(csv: &Path, quantity: &str, t: f64, theta: f64) -> Result<RateFit> {
    let q = Quantity::parse(quantity)?;
    fit_rows(&read_csv(csv)?, q, t, theta)
}

/// Empirical exponential envelope `q(t) ~ exp(rate t)` for one `N1`, over
/// the strictly positive samples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    pub quantity: String,
    pub n1: usize,
    pub rate: f64,
    pub intercept: f64,
    pub residual: f64,
}

pub fn fit_growth(rows: &[CsvRow], quantity: Quantity, n1: usize, theta: f64) -> Result<GrowthFit> {
    let mut t = Vec::new();
    let mut y = Vec::new();
    for r in rows {
        if r.n1 != n1 || (quantity.depends_on_theta() && r.theta != theta) || t.last() == Some(&r.t) {
            continue;
        }
        let v = quantity.value(r);
        if v > ZERO_FLOOR {
            t.push(r.t);
            y.push(v.ln());
        }
    }
    if t.len() < MIN_POINTS {
        return Err(Error::Fit(format!("growth fit for N1 = {n1} needs {MIN_POINTS} positive samples, found {}", t.len())));
    }
    let line = least_squares(&t, &y)?;
    Ok(GrowthFit {
        quantity: quantity.name().into(),
        n1,
        rate: line.slope,
        intercept: line.intercept,
        residual: line.residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn row(t: f64, n1: usize, theta: f64, a: f64, trace: f64) -> CsvRow {
        CsvRow {
            t,
            n1,
            n2: n1,
            theta,
            trace_norm: trace,
            hs_norm: trace,
            a1: a / 2.0,
            a2: a / 2.0,
            est_a_bound: 0.0,
            weighted_bound: 0.0,
            a_n: 0.0,
            b_n: 0.0,
            energy_drift: 0.0,
            violations: String::new(),
        }
    }

    #[test]
    fn exact_power_laws() {
        let inv: Vec<(usize, f64)> = [1, 2, 4, 8].iter().map(|&n| (n, 0.3 / n as f64)).collect();
        let f = fit_points(Quantity::A, 0.5, 0.0, &inv).unwrap();
        assert!((f.slope + 1.0).abs() < 1e-6);
        assert!(f.deviation.unwrap().abs() < 1e-6);
        assert!(f.residual < 1e-12 && f.slope_stderr < 1e-12 && !f.floored);

        let sqrt: Vec<(usize, f64)> = [1, 2, 3].iter().map(|&n| (n, 2.0 / (n as f64).sqrt())).collect();
        let f = fit_points(Quantity::TraceNorm, 0.5, 0.0, &sqrt).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-9);
        assert_eq!(f.predicted, Some(-0.5));
    }

    #[test]
    fn predicted_exponents() {
        assert_eq!(Quantity::TraceNorm.predicted_exponent(0.5), Some(-0.25));
        assert_eq!(Quantity::A.predicted_exponent(0.7), Some(-1.0));
        assert_eq!(Quantity::HsNorm.predicted_exponent(0.0), None);
    }

    #[test]
    fn needs_three_points() {
        let e = fit_points(Quantity::A, 0.0, 0.0, &[(1, 1.0), (2, 0.5)]).unwrap_err();
        assert!(matches!(e, Error::Fit(_)));
    }

    #[test]
    fn zeros_are_floored_and_flagged() {
        let f = fit_points(Quantity::A, 0.0, 0.0, &[(1, 0.0), (2, 0.0), (3, 0.0)]).unwrap();
        assert!(f.floored);
        assert_eq!(f.slope, 0.0);
        assert!((f.intercept - ZERO_FLOOR.ln()).abs() < 1e-12);
    }

    #[test]
    fn row_selection_by_time_and_theta() {
        let mut rows = Vec::new();
        for n in [1, 2, 4] {
            for t in [0.0, 0.5] {
                rows.push(row(t, n, 0.0, 1.0 / n as f64, 1.0 / (n as f64).sqrt()));
                rows.push(row(t, n, 0.5, 1.0 / n as f64, 7.0));
            }
        }
        let f = fit_rows(&rows, Quantity::TraceNorm, 0.5, 0.0).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-12);
        assert_eq!(f.n1, vec![1, 2, 4]);
        let f = fit_rows(&rows, Quantity::TraceNorm, 0.5, 0.5).unwrap();
        assert!(f.slope.abs() < 1e-12);
        let f = fit_rows(&rows, Quantity::A, 0.5, 0.25).unwrap();
        assert!((f.slope + 1.0).abs() < 1e-12);
        assert!(fit_rows(&rows, Quantity::A, 0.3, 0.0).is_err());
    }

    #[test]
    fn growth_rate_of_exponential() {
        let rows: Vec<CsvRow> = (0..6).map(|i| {
            let t = 0.1 * i as f64;
            row(t, 2, 0.0, 1e-3 * (1.7 * t).exp(), 0.0)
        }).collect();
        let g = fit_growth(&rows, Quantity::A, 2, 0.0).unwrap();
        assert!((g.rate - 1.7).abs() < 1e-9);
    }

    #[test]
    fn slope_error_of_noisy_line() {
        // residuals +e, -2e, +e around y = x: rss = 6e^2, Sxx = 2
        let e = 0.01;
        let l = least_squares(&[0.0, 1.0, 2.0], &[e, 1.0 - 2.0 * e, 2.0 + e]).unwrap();
        assert!((l.slope - 1.0).abs() < 1e-12);
        assert!((l.slope_stderr - (6.0 * e * e / 2.0).sqrt()).abs() < 1e-12);
        assert!(least_squares(&[0.0, 1.0], &[0.0, 1.0]).unwrap().slope_stderr.is_nan());
    }

    #[test]
    fn unknown_quantity() {
        assert!(Quantity::parse("energy").is_err());
        assert_eq!(Quantity::parse("a").unwrap(), Quantity::A);
    }

    proptest! {
        #[test]
        fn recovers_any_power(p in -2.0f64..1.0, c in 0.01f64..10.0) {
            let pts: Vec<(usize, f64)> = [1, 2, 3, 5].iter().map(|&n| (n, c * (n as f64).powf(p))).collect();
            let f = fit_points(Quantity::HsNorm, 0.0, 0.0, &pts).unwrap();
            prop_assert!((f.slope - p).abs() < 1e-9);
            prop_assert!((f.intercept - c.ln()).abs() < 1e-9);
        }
    }
}
