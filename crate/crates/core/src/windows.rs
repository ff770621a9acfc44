//! Calendar-month sliding windows over a daily (or irregular) time axis,
//! per-window Fisher-Shannon estimation, and z-score standardization.

use std::ops::Range;

use chrono::{Datelike, Days, Months, NaiveDate};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fisher_shannon::{fs_point, QuadratureSpec};
use crate::kde::Samples;

/// Strictly increasing calendar dates.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TimeAxis {
    dates: Vec<NaiveDate>,
}

impl TimeAxis {
    pub fn new(dates: Vec<NaiveDate>) -> Result<Self> {
        if let Some(w) = dates.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput(format!(
                "time axis must be strictly increasing ({} then {})",
                w[0], w[1]
            )));
        }
        Ok(TimeAxis { dates })
    }

    /// `count` consecutive days starting at `start`.
    pub fn daily(start: NaiveDate, count: usize) -> Self {
        let dates = start.iter_days().take(count).collect();
        TimeAxis { dates }
    }

    /// Every day from `start` to `end` inclusive.
    pub fn daily_range(start: NaiveDate, end: NaiveDate) -> Self {
        let count = if end < start {
            0
        } else {
            (end - start).num_days() as usize + 1
        };
        TimeAxis::daily(start, count)
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn len(&self) -> usize {
        self.dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dates.is_empty()
    }

    pub fn first(&self) -> Option<NaiveDate> {
        self.dates.first().copied()
    }

    pub fn last(&self) -> Option<NaiveDate> {
        self.dates.last().copied()
    }

    /// True when the axis is a run of consecutive days.
    pub fn is_daily(&self) -> bool {
        self.dates.windows(2).all(|w| w[0].succ_opt() == Some(w[1]))
    }

    /// Index range of dates falling in `[start, end]`.
    pub fn range_between(&self, start: NaiveDate, end: NaiveDate) -> Range<usize> {
        let lo = self.dates.partition_point(|d| *d < start);
        let hi = self.dates.partition_point(|d| *d <= end);
        lo..hi.max(lo)
    }
}

/// Window width and step in calendar months, plus the occupancy threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowSpec {
    pub width_months: u32,
    pub step_months: u32,
    /// Windows with fewer non-missing observations yield missing measures.
    pub min_valid: usize,
}

impl Default for WindowSpec {
    fn default() -> Self {
        WindowSpec {
            width_months: 60,
            step_months: 1,
            min_valid: 100,
        }
    }
}

impl WindowSpec {
    pub fn validate(&self) -> Result<()> {
        if self.step_months < 1 || self.width_months < self.step_months {
            return Err(Error::BadParameters(format!(
                "window needs width_months >= step_months >= 1 (got width {}, step {})",
                self.width_months, self.step_months
            )));
        }
        if self.min_valid < 2 {
            return Err(Error::BadParameters(format!(
                "min_valid must be >= 2, got {}",
                self.min_valid
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Window {
    pub start: NaiveDate,
    /// Inclusive; always `start + width_months months - 1 day`.
    pub end: NaiveDate,
    /// Positions on the axis covered by the window.
    pub range: Range<usize>,
}

/// Month-aligned windows that fit entirely within the axis.
pub fn make_windows(axis: &TimeAxis, spec: &WindowSpec) -> Result<Vec<Window>> {
    spec.validate()?;
    let (first, last) = match (axis.first(), axis.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(Error::EmptyAxis),
    };
    let origin = first.with_day(1).expect("day 1 exists in every month");
    let mut out = Vec::new();
    for k in 0u32.. {
        let Some(start) = origin.checked_add_months(Months::new(k * spec.step_months)) else {
            break;
        };
        let Some(end) = start
            .checked_add_months(Months::new(spec.width_months))
            .and_then(|d| d.checked_sub_days(Days::new(1)))
        else {
            break;
        };
        if end > last {
            break;
        }
        out.push(Window {
            start,
            end,
            range: axis.range_between(start, end),
        });
    }
    Ok(out)
}

/// Per-window measures for one location. Entries are `None` where the window
/// had too few observations or a degenerate sample.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureSeries {
    /// Each entry is keyed by its window's end date.
    pub window_end_dates: Vec<NaiveDate>,
    pub sep: Vec<Option<f64>>,
    pub fim: Vec<Option<f64>>,
    pub fsc: Vec<Option<f64>>,
    pub standardized: bool,
}

impl MeasureSeries {
    pub fn len(&self) -> usize {
        self.window_end_dates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.window_end_dates.is_empty()
    }
}

/// Sliding-window SEP/FIM/FSC over one series aligned with `axis`.
///
/// `values[i]` is `None` where the observation is missing. The window
/// computations run in parallel; results are assembled in window order.
pub fn analyze_series(
    values: &[Option<f64>],
    axis: &TimeAxis,
    spec: &WindowSpec,
    quad: &QuadratureSpec,
) -> Result<MeasureSeries> {
    if values.len() != axis.len() {
        return Err(Error::InvalidInput(format!(
            "series has {} values but the axis has {} dates",
            values.len(),
            axis.len()
        )));
    }
    quad.validate()?;
    let windows = make_windows(axis, spec)?;
    let points: Vec<_> = windows
        .par_iter()
        .map(|w| window_point(&values[w.range.clone()], spec, quad))
        .collect();
    Ok(MeasureSeries {
        window_end_dates: windows.iter().map(|w| w.end).collect(),
        sep: points.iter().map(|p| p.map(|p| p.sep)).collect(),
        fim: points.iter().map(|p| p.map(|p| p.fim)).collect(),
        fsc: points.iter().map(|p| p.map(|p| p.fsc)).collect(),
        standardized: false,
    })
}

fn window_point(
    values: &[Option<f64>],
    spec: &WindowSpec,
    quad: &QuadratureSpec,
) -> Option<crate::fisher_shannon::FsPoint> {
    let valid: Vec<f64> = values.iter().flatten().copied().collect();
    if valid.len() < spec.min_valid {
        return None;
    }
    let samples = Samples::new(valid).ok()?;
    fs_point(samples, quad).ok()
}

/// Z-scores each measure independently over its non-missing entries
/// (population standard deviation).
pub fn zscore(series: &MeasureSeries) -> Result<MeasureSeries> {
    Ok(MeasureSeries {
        window_end_dates: series.window_end_dates.clone(),
        sep: zscore_values(&series.sep)?,
        fim: zscore_values(&series.fim)?,
        fsc: zscore_values(&series.fsc)?,
        standardized: true,
    })
}

/// `(x - mean) / std` over the present entries; missing stays missing.
pub fn zscore_values(values: &[Option<f64>]) -> Result<Vec<Option<f64>>> {
    let present: Vec<f64> = values.iter().flatten().copied().collect();
    if present.len() < 2 {
        return Err(Error::DegenerateSeries(format!(
            "need at least 2 non-missing values, got {}",
            present.len()
        )));
    }
    let n = present.len() as f64;
    let mean = present.iter().sum::<f64>() / n;
    let var = present.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    if std.is_nan() || std <= 0.0 || std <= 1e-14 * mean.abs() {
        return Err(Error::DegenerateSeries("zero variance".into()));
    }
    Ok(values.iter().map(|v| v.map(|x| (x - mean) / std)).collect())
}
