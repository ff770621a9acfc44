//! Ordinary least-squares trend lines on dated series.

use chrono::NaiveDate;

use crate::error::{Error, Result};

const DAYS_PER_YEAR: f64 = 365.25;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrendFit {
    /// Change per year.
    pub slope: f64,
    /// Fitted value at `start_date`.
    pub intercept: f64,
    pub r_squared: f64,
    pub start_date: NaiveDate,
    pub n_points: usize,
}

/// Fractional years elapsed since `origin`.
pub fn years_since(origin: NaiveDate, date: NaiveDate) -> f64 {
    (date - origin).num_days() as f64 / DAYS_PER_YEAR
}

/// Fits `value = intercept + slope·years` to the points dated on or after
/// `start_date`. A constant target gives `slope = 0` and `r_squared = 0`.
pub fn linear_fit(dates: &[NaiveDate], values: &[f64], start_date: NaiveDate) -> Result<TrendFit> {
    if dates.len() != values.len() {
        return Err(Error::InvalidInput(format!(
            "{} dates but {} values",
            dates.len(),
            values.len()
        )));
    }
    let (x, y): (Vec<f64>, Vec<f64>) = dates
        .iter()
        .zip(values)
        .filter(|(d, _)| **d >= start_date)
        .map(|(d, v)| (years_since(start_date, *d), *v))
        .unzip();
    let n = x.len();
    if n < 2 {
        return Err(Error::InsufficientPoints(n));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if sxx <= 0.0 {
        return Err(Error::DegenerateAbscissa);
    }
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy > 0.0 {
        let ss_res: f64 = x
            .iter()
            .zip(&y)
            .map(|(a, b)| {
                let e = b - (intercept + slope * a);
                e * e
            })
            .sum();
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    } else {
        0.0
    };
    Ok(TrendFit {
        slope: if syy > 0.0 { slope } else { 0.0 },
        intercept,
        r_squared,
        start_date,
        n_points: n,
    })
}
