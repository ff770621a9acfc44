//! Gridded space-time fields, per-location windowed analysis, latitude-time
//! (Hovmöller) means and the bridge to EOF input matrices.
//!
//! Values are stored flat in (lat, lon, time) order. Missingness is an
//! explicit mask; the sentinel only exists in serialized files.

mod csv_io;
mod native;

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use chrono::NaiveDate;
use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::eof::SpaceTimeMatrix;
use crate::error::{Error, Result};
use crate::fisher_shannon::QuadratureSpec;
use crate::windows::{analyze_series, zscore_values, TimeAxis, WindowSpec};

pub use csv_io::{hovmoller_csv, measure_csv, read_csv_long, write_hovmoller_csv, write_measure_csv};
pub use native::{encode_native, read_native, write_native, NativeFiles};

/// On-disk layout accepted by [`load_grid`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridFormat {
    /// Text header plus raw f64 payload.
    Native,
    /// Long-format `lat,lon,date,value` rows.
    Csv,
}

impl GridFormat {
    /// `.csv` files are CSV, anything else is treated as a native header.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => GridFormat::Csv,
            _ => GridFormat::Native,
        }
    }
}

impl FromStr for GridFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "native" | "hdr" => Ok(GridFormat::Native),
            "csv" => Ok(GridFormat::Csv),
            other => Err(Error::BadParameters(format!("unknown grid format '{other}'"))),
        }
    }
}

/// Reads and validates a grid.
pub fn load_grid(path: impl AsRef<Path>, format: GridFormat) -> Result<FieldGrid> {
    match format {
        GridFormat::Native => read_native(path),
        GridFormat::Csv => read_csv_long(path),
    }
}

/// Writes the canonical native pair `<stem>.hdr` + `<stem>.bin`.
pub fn save_grid(grid: &FieldGrid, header_path: impl AsRef<Path>) -> Result<NativeFiles> {
    write_native(grid, header_path)
}

/// Integer region labels per (lat, lon) cell, with optional names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionMask {
    pub labels: Vec<u8>,
    pub names: BTreeMap<u8, String>,
}

impl RegionMask {
    /// Resolves a region given by name or by numeric label.
    pub fn resolve(&self, region: &str) -> Result<u8> {
        if let Some((label, _)) = self.names.iter().find(|(_, n)| n.as_str() == region) {
            return Ok(*label);
        }
        match region.parse::<u8>() {
            Ok(label) if self.labels.contains(&label) || self.names.contains_key(&label) => Ok(label),
            _ => Err(Error::UnknownRegion(region.to_string())),
        }
    }
}

/// A space-time field on a regular (lat, lon) grid.
#[derive(Debug, Clone)]
pub struct FieldGrid {
    latitudes: Vec<f64>,
    longitudes: Vec<f64>,
    time_axis: TimeAxis,
    values: Vec<f64>,
    valid: Vec<bool>,
    pub units: String,
    /// Sentinel written for missing cells when serializing.
    pub missing_value: f64,
    pub region_mask: Option<RegionMask>,
    /// Free-form `attr.*` header entries, kept sorted for canonical output.
    pub attributes: BTreeMap<String, String>,
}

/// Cells compare by value and missingness; the sentinel compares bitwise so
/// two NaN-sentinel grids are equal.
impl PartialEq for FieldGrid {
    fn eq(&self, other: &Self) -> bool {
        self.latitudes == other.latitudes
            && self.longitudes == other.longitudes
            && self.time_axis == other.time_axis
            && self.cells().eq(other.cells())
            && self.units == other.units
            && self.missing_value.to_bits() == other.missing_value.to_bits()
            && self.region_mask == other.region_mask
            && self.attributes == other.attributes
    }
}

impl FieldGrid {
    /// `values` is in (lat, lon, time) order.
    pub fn new(
        latitudes: Vec<f64>,
        longitudes: Vec<f64>,
        time_axis: TimeAxis,
        values: Vec<Option<f64>>,
    ) -> Result<Self> {
        check_coordinates(&latitudes, &longitudes).map_err(Error::InvalidInput)?;
        let expected = latitudes.len() * longitudes.len() * time_axis.len();
        if values.len() != expected {
            return Err(Error::InvalidInput(format!(
                "value count {} != {} lat x {} lon x {} time",
                values.len(),
                latitudes.len(),
                longitudes.len(),
                time_axis.len()
            )));
        }
        let valid = values.iter().map(|v| v.is_some_and(f64::is_finite)).collect::<Vec<_>>();
        let values = values
            .iter()
            .map(|v| v.filter(|x| x.is_finite()).unwrap_or(0.0))
            .collect();
        Ok(FieldGrid {
            latitudes,
            longitudes,
            time_axis,
            values,
            valid,
            units: String::new(),
            missing_value: f64::NAN,
            region_mask: None,
            attributes: BTreeMap::new(),
        })
    }

    pub fn with_units(mut self, units: impl Into<String>) -> Self {
        self.units = units.into();
        self
    }

    pub fn with_region_mask(mut self, mask: RegionMask) -> Result<Self> {
        if mask.labels.len() != self.num_locations() {
            return Err(Error::InvalidInput(format!(
                "region mask has {} labels for {} locations",
                mask.labels.len(),
                self.num_locations()
            )));
        }
        self.region_mask = Some(mask);
        Ok(self)
    }

    pub fn latitudes(&self) -> &[f64] {
        &self.latitudes
    }

    pub fn longitudes(&self) -> &[f64] {
        &self.longitudes
    }

    pub fn time_axis(&self) -> &TimeAxis {
        &self.time_axis
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.latitudes.len(), self.longitudes.len(), self.time_axis.len())
    }

    pub fn num_locations(&self) -> usize {
        self.latitudes.len() * self.longitudes.len()
    }

    fn offset(&self, lat: usize, lon: usize) -> usize {
        (lat * self.longitudes.len() + lon) * self.time_axis.len()
    }

    pub fn value(&self, lat: usize, lon: usize, t: usize) -> Option<f64> {
        let k = self.offset(lat, lon) + t;
        self.valid[k].then(|| self.values[k])
    }

    /// The time series at one location.
    pub fn series(&self, lat: usize, lon: usize) -> Vec<Option<f64>> {
        let start = self.offset(lat, lon);
        let end = start + self.time_axis.len();
        self.values[start..end]
            .iter()
            .zip(&self.valid[start..end])
            .map(|(v, ok)| ok.then_some(*v))
            .collect()
    }

    /// All cells in (lat, lon, time) order.
    pub fn cells(&self) -> impl Iterator<Item = Option<f64>> + '_ {
        self.values.iter().zip(&self.valid).map(|(v, ok)| ok.then_some(*v))
    }

    /// Index of the grid cell whose coordinates match within 1e-6 degrees.
    pub fn locate(&self, lat: f64, lon: f64) -> Option<(usize, usize)> {
        locate(&self.latitudes, &self.longitudes, lat, lon)
    }
}

fn locate(lats: &[f64], lons: &[f64], lat: f64, lon: f64) -> Option<(usize, usize)> {
    let i = lats.iter().position(|v| (v - lat).abs() < 1e-6)?;
    let j = lons.iter().position(|v| (v - lon).abs() < 1e-6)?;
    Some((i, j))
}

pub(crate) fn check_coordinates(lats: &[f64], lons: &[f64]) -> std::result::Result<(), String> {
    if lats.is_empty() || lons.is_empty() {
        return Err("grid needs at least one latitude and one longitude".into());
    }
    if let Some(bad) = lats.iter().find(|v| !(-90.0..=90.0).contains(*v)) {
        return Err(format!("latitude {bad} outside [-90, 90]"));
    }
    if let Some(bad) = lons.iter().find(|v| !(v.is_finite() && (-180.0..=360.0).contains(*v))) {
        return Err(format!("longitude {bad} outside [-180, 360]"));
    }
    if !strictly_monotone(lats) {
        return Err("latitudes are not strictly monotone".into());
    }
    if !strictly_monotone(lons) {
        return Err("longitudes are not strictly monotone".into());
    }
    Ok(())
}

fn strictly_monotone(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] < w[1]) || v.windows(2).all(|w| w[0] > w[1])
}

/// One of the three per-window measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Measure {
    Sep,
    Fim,
    Fsc,
}

impl Measure {
    pub const ALL: [Measure; 3] = [Measure::Sep, Measure::Fim, Measure::Fsc];

    pub fn as_str(self) -> &'static str {
        match self {
            Measure::Sep => "sep",
            Measure::Fim => "fim",
            Measure::Fsc => "fsc",
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sep" => Ok(Measure::Sep),
            "fim" => Ok(Measure::Fim),
            "fsc" => Ok(Measure::Fsc),
            _ => Err(Error::UnknownMeasure(s.to_string())),
        }
    }
}

/// SEP/FIM/FSC per (lat, lon, window), flat in that order.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureField {
    pub latitudes: Vec<f64>,
    pub longitudes: Vec<f64>,
    pub window_end_dates: Vec<NaiveDate>,
    pub sep: Vec<Option<f64>>,
    pub fim: Vec<Option<f64>>,
    pub fsc: Vec<Option<f64>>,
    pub standardized: bool,
    pub region_mask: Option<RegionMask>,
}

impl MeasureField {
    pub fn num_windows(&self) -> usize {
        self.window_end_dates.len()
    }

    pub fn num_locations(&self) -> usize {
        self.latitudes.len() * self.longitudes.len()
    }

    pub fn measure(&self, m: Measure) -> &[Option<f64>] {
        match m {
            Measure::Sep => &self.sep,
            Measure::Fim => &self.fim,
            Measure::Fsc => &self.fsc,
        }
    }

    fn measure_mut(&mut self, m: Measure) -> &mut Vec<Option<f64>> {
        match m {
            Measure::Sep => &mut self.sep,
            Measure::Fim => &mut self.fim,
            Measure::Fsc => &mut self.fsc,
        }
    }

    /// Window series of one measure at one location.
    pub fn series(&self, m: Measure, lat: usize, lon: usize) -> &[Option<f64>] {
        let w = self.num_windows();
        let start = (lat * self.longitudes.len() + lon) * w;
        &self.measure(m)[start..start + w]
    }

    pub fn locate(&self, lat: f64, lon: f64) -> Option<(usize, usize)> {
        locate(&self.latitudes, &self.longitudes, lat, lon)
    }

    /// Locations where the measure is missing in every window.
    pub fn empty_locations(&self, m: Measure) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.latitudes.len() {
            for j in 0..self.longitudes.len() {
                if self.series(m, i, j).iter().all(Option::is_none) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// One measure as a grid whose time axis is the window end dates.
    pub fn to_grid(&self, m: Measure) -> Result<FieldGrid> {
        let axis = TimeAxis::new(self.window_end_dates.clone())?;
        let mut grid = FieldGrid::new(
            self.latitudes.clone(),
            self.longitudes.clone(),
            axis,
            self.measure(m).to_vec(),
        )?;
        grid.attributes.insert("measure".into(), m.as_str().into());
        grid.attributes.insert("standardized".into(), self.standardized.to_string());
        grid.attributes.insert("window_key".into(), "end_date".into());
        grid.region_mask = self.region_mask.clone();
        Ok(grid)
    }

    /// Reassembles a field from the three per-measure grids.
    pub fn from_grids(sep: &FieldGrid, fim: &FieldGrid, fsc: &FieldGrid) -> Result<Self> {
        for g in [fim, fsc] {
            if g.latitudes != sep.latitudes
                || g.longitudes != sep.longitudes
                || g.time_axis != sep.time_axis
            {
                return Err(Error::InvalidInput("measure grids have different coordinates".into()));
            }
        }
        let standardized = sep.attributes.get("standardized").is_some_and(|v| v == "true");
        Ok(MeasureField {
            latitudes: sep.latitudes.clone(),
            longitudes: sep.longitudes.clone(),
            window_end_dates: sep.time_axis.dates().to_vec(),
            sep: sep.cells().collect(),
            fim: fim.cells().collect(),
            fsc: fsc.cells().collect(),
            standardized,
            region_mask: sep.region_mask.clone(),
        })
    }
}

/// Runs the windowed analysis independently at every location.
///
/// Locations are processed in parallel and assembled in (lat, lon) order, so
/// the result does not depend on the thread count.
pub fn analyze_grid(grid: &FieldGrid, spec: &WindowSpec, quad: &QuadratureSpec) -> Result<MeasureField> {
    spec.validate()?;
    quad.validate()?;
    let (n_lat, n_lon, _) = grid.shape();
    let per_location: Vec<_> = (0..n_lat * n_lon)
        .into_par_iter()
        .map(|loc| {
            let series = grid.series(loc / n_lon, loc % n_lon);
            analyze_series(&series, &grid.time_axis, spec, quad)
        })
        .collect::<Result<_>>()?;

    let window_end_dates = match per_location.first() {
        Some(s) => s.window_end_dates.clone(),
        None => Vec::new(),
    };
    let mut field = MeasureField {
        latitudes: grid.latitudes.clone(),
        longitudes: grid.longitudes.clone(),
        window_end_dates,
        sep: Vec::new(),
        fim: Vec::new(),
        fsc: Vec::new(),
        standardized: false,
        region_mask: grid.region_mask.clone(),
    };
    for s in per_location {
        field.sep.extend(s.sep);
        field.fim.extend(s.fim);
        field.fsc.extend(s.fsc);
    }
    Ok(field)
}

/// Per-location, per-measure z-scores over windows. Series that cannot be
/// standardized (fewer than two values, zero variance) become fully missing.
pub fn standardize_field(field: &MeasureField) -> MeasureField {
    let mut out = field.clone();
    let w = field.num_windows();
    for m in Measure::ALL {
        let data = out.measure_mut(m);
        if w == 0 {
            continue;
        }
        for chunk in data.chunks_mut(w) {
            match zscore_values(chunk) {
                Ok(z) => chunk.copy_from_slice(&z),
                Err(_) => chunk.iter_mut().for_each(|v| *v = None),
            }
        }
    }
    out.standardized = true;
    out
}

/// Latitude × window means of one measure.
#[derive(Debug, Clone, PartialEq)]
pub struct HovmollerTable {
    pub latitudes: Vec<f64>,
    pub window_end_dates: Vec<NaiveDate>,
    /// (lat, window) order; `None` where no longitude contributed.
    pub means: Vec<Option<f64>>,
    pub measure: Measure,
    pub region: Option<String>,
}

impl HovmollerTable {
    pub fn get(&self, lat: usize, window: usize) -> Option<f64> {
        self.means[lat * self.window_end_dates.len() + window]
    }
}

/// Arithmetic mean over non-missing longitudes for every (latitude, window),
/// optionally restricted to the cells of one region.
pub fn hovmoller(field: &MeasureField, measure: Measure, region: Option<&str>) -> Result<HovmollerTable> {
    let include: Vec<bool> = match region {
        None => vec![true; field.num_locations()],
        Some(name) => {
            let mask = field
                .region_mask
                .as_ref()
                .ok_or_else(|| Error::UnknownRegion(format!("{name} (field has no region mask)")))?;
            let label = mask.resolve(name)?;
            mask.labels.iter().map(|l| *l == label).collect()
        }
    };
    let (n_lat, n_lon, n_win) = (field.latitudes.len(), field.longitudes.len(), field.num_windows());
    let mut means = Vec::with_capacity(n_lat * n_win);
    for i in 0..n_lat {
        for w in 0..n_win {
            let mut sum = 0.0;
            let mut count = 0usize;
            for j in 0..n_lon {
                if !include[i * n_lon + j] {
                    continue;
                }
                if let Some(v) = field.series(measure, i, j)[w] {
                    sum += v;
                    count += 1;
                }
            }
            means.push((count > 0).then(|| sum / count as f64));
        }
    }
    Ok(HovmollerTable {
        latitudes: field.latitudes.clone(),
        window_end_dates: field.window_end_dates.clone(),
        means,
        measure,
        region: region.map(str::to_string),
    })
}

/// Maps EOF matrix rows back to grid cells.
#[derive(Debug, Clone, PartialEq)]
pub struct LocationRegistry {
    pub n_lat: usize,
    pub n_lon: usize,
    /// (lat index, lon index) of each matrix row.
    pub retained: Vec<(usize, usize)>,
    /// Locations left out because at least one window was missing.
    pub dropped: Vec<(usize, usize)>,
    /// Row weights applied before decomposition, if any.
    pub weights: Option<Vec<f64>>,
}

impl LocationRegistry {
    pub fn row_of(&self, lat: usize, lon: usize) -> Option<usize> {
        self.retained.iter().position(|&c| c == (lat, lon))
    }

    /// Scatters one value per row onto the (lat, lon) grid; dropped cells are `None`.
    pub fn to_grid(&self, rows: &[f64]) -> Vec<Option<f64>> {
        let mut out = vec![None; self.n_lat * self.n_lon];
        for (&(i, j), v) in self.retained.iter().zip(rows) {
            out[i * self.n_lon + j] = Some(*v);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EofMatrixOptions {
    /// Multiply each row by √cos(latitude). Off by default.
    pub area_weighting: bool,
}

/// Flattens one measure into locations × windows, dropping incomplete
/// locations.
pub fn to_eof_matrix(
    field: &MeasureField,
    measure: Measure,
    options: EofMatrixOptions,
) -> Result<(SpaceTimeMatrix, LocationRegistry)> {
    let (n_lat, n_lon, n_win) = (field.latitudes.len(), field.longitudes.len(), field.num_windows());
    let mut retained = Vec::new();
    let mut dropped = Vec::new();
    let mut rows: Vec<&[Option<f64>]> = Vec::new();
    for i in 0..n_lat {
        for j in 0..n_lon {
            let s = field.series(measure, i, j);
            if n_win > 0 && s.iter().all(Option::is_some) {
                retained.push((i, j));
                rows.push(s);
            } else {
                dropped.push((i, j));
            }
        }
    }
    if retained.is_empty() {
        return Err(Error::EmptyMatrix);
    }
    let weights = options.area_weighting.then(|| {
        retained
            .iter()
            .map(|&(i, _)| field.latitudes[i].to_radians().cos().max(0.0).sqrt())
            .collect::<Vec<f64>>()
    });
    let data = DMatrix::from_fn(rows.len(), n_win, |r, t| {
        let v = rows[r][t].expect("retained rows are complete");
        weights.as_ref().map_or(v, |w| v * w[r])
    });
    let location_ids = retained
        .iter()
        .map(|&(i, j)| format!("{}:{}", field.latitudes[i], field.longitudes[j]))
        .collect();
    let time_ids = field.window_end_dates.iter().map(|d| d.to_string()).collect();
    let matrix = SpaceTimeMatrix::new(data, location_ids, time_ids)?;
    Ok((
        matrix,
        LocationRegistry {
            n_lat,
            n_lon,
            retained,
            dropped,
            weights,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(y: i32, m: u32, day: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, day).unwrap()
    }

    fn field(n_lat: usize, n_lon: usize, n_win: usize, f: impl Fn(usize, usize, usize) -> Option<f64>) -> MeasureField {
        let mut vals = Vec::new();
        for i in 0..n_lat {
            for j in 0..n_lon {
                for w in 0..n_win {
                    vals.push(f(i, j, w));
                }
            }
        }
        MeasureField {
            latitudes: (0..n_lat).map(|i| -10.0 + 5.0 * i as f64).collect(),
            longitudes: (0..n_lon).map(|j| 2.5 * j as f64).collect(),
            window_end_dates: (0..n_win).map(|w| d(2000, 1, 1) + chrono::Days::new(31 * w as u64)).collect(),
            sep: vals.clone(),
            fim: vals.clone(),
            fsc: vals,
            standardized: false,
            region_mask: None,
        }
    }

    #[test]
    fn grid_shape_checked() {
        let axis = TimeAxis::daily(d(2000, 1, 1), 3);
        assert!(FieldGrid::new(vec![0.0], vec![0.0, 1.0], axis.clone(), vec![Some(1.0); 5]).is_err());
        assert!(FieldGrid::new(vec![95.0], vec![0.0], axis.clone(), vec![Some(1.0); 3]).is_err());
        assert!(FieldGrid::new(vec![0.0, 0.0], vec![0.0], axis.clone(), vec![Some(1.0); 6]).is_err());
        let g = FieldGrid::new(vec![10.0, 0.0], vec![0.0], axis, vec![Some(1.0), None, Some(f64::NAN), Some(2.0), Some(3.0), Some(4.0)]).unwrap();
        assert_eq!(g.series(0, 0), vec![Some(1.0), None, None]);
        assert_eq!(g.value(1, 0, 2), Some(4.0));
    }

    #[test]
    fn hovmoller_constant_per_latitude() {
        let f = field(3, 4, 5, |i, _, _| Some(i as f64 * 2.0 + 1.0));
        let h = hovmoller(&f, Measure::Sep, None).unwrap();
        for i in 0..3 {
            for w in 0..5 {
                assert_eq!(h.get(i, w), Some(i as f64 * 2.0 + 1.0));
            }
        }
    }

    #[test]
    fn hovmoller_skips_missing() {
        let f = field(1, 3, 2, |_, j, w| if j == 1 && w == 0 { None } else { Some(j as f64) });
        let h = hovmoller(&f, Measure::Fim, None).unwrap();
        assert_eq!(h.get(0, 0), Some(1.0));
        assert_eq!(h.get(0, 1), Some(1.0));
        let f = field(1, 2, 1, |_, _, _| None);
        assert_eq!(hovmoller(&f, Measure::Fsc, None).unwrap().get(0, 0), None);
    }

    #[test]
    fn hovmoller_region() {
        let c = 3.0;
        let mut f = field(2, 4, 3, |_, j, _| Some(if j < 2 { 2.0 * c } else { c }));
        assert!(matches!(hovmoller(&f, Measure::Sep, Some("land")), Err(Error::UnknownRegion(_))));
        f.region_mask = Some(RegionMask {
            labels: vec![1, 1, 0, 0, 1, 1, 0, 0],
            names: BTreeMap::from([(0, "ocean".to_string()), (1, "land".to_string())]),
        });
        let land = hovmoller(&f, Measure::Sep, Some("land")).unwrap();
        let all = hovmoller(&f, Measure::Sep, None).unwrap();
        assert_eq!(land.get(1, 2), Some(2.0 * c));
        assert_eq!(all.get(1, 2), Some(1.5 * c));
        assert_eq!(hovmoller(&f, Measure::Sep, Some("1")).unwrap().means, land.means);
        assert!(matches!(hovmoller(&f, Measure::Sep, Some("ice")), Err(Error::UnknownRegion(_))));
    }

    #[test]
    fn unknown_measure() {
        assert!(matches!("entropy".parse::<Measure>(), Err(Error::UnknownMeasure(_))));
        assert_eq!("FSC".parse::<Measure>().unwrap(), Measure::Fsc);
    }

    #[test]
    fn eof_matrix_complete_and_dropped() {
        let f = field(4, 4, 10, |i, j, w| Some((i * 7 + j * 3 + w) as f64));
        let (m, reg) = to_eof_matrix(&f, Measure::Sep, EofMatrixOptions::default()).unwrap();
        assert_eq!((m.num_locations(), m.num_times()), (16, 10));
        assert!(reg.dropped.is_empty());

        let f = field(4, 4, 10, |i, j, w| if (i, j, w) == (2, 1, 4) { None } else { Some(1.0 + w as f64) });
        let (m, reg) = to_eof_matrix(&f, Measure::Sep, EofMatrixOptions::default()).unwrap();
        assert_eq!((m.num_locations(), m.num_times()), (15, 10));
        assert_eq!(reg.dropped, vec![(2, 1)]);
        assert_eq!(reg.row_of(2, 1), None);

        let f = field(2, 2, 3, |_, _, _| None);
        assert!(matches!(to_eof_matrix(&f, Measure::Sep, EofMatrixOptions::default()), Err(Error::EmptyMatrix)));
    }

    #[test]
    fn eof_matrix_round_trip() {
        let f = field(3, 5, 4, |i, j, w| if (i + j) % 4 == 0 && w == 2 { None } else { Some((i * 10 + j) as f64) });
        let (m, reg) = to_eof_matrix(&f, Measure::Fim, EofMatrixOptions::default()).unwrap();
        let first_col: Vec<f64> = m.data().column(0).iter().copied().collect();
        let back = reg.to_grid(&first_col);
        for i in 0..3 {
            for j in 0..5 {
                let cell = back[i * 5 + j];
                if reg.dropped.contains(&(i, j)) {
                    assert_eq!(cell, None);
                } else {
                    assert_eq!(cell, Some((i * 10 + j) as f64));
                }
            }
        }
    }

    #[test]
    fn area_weighting_scales_rows() {
        let f = field(2, 1, 3, |_, _, w| Some(w as f64));
        let (m, reg) = to_eof_matrix(&f, Measure::Sep, EofMatrixOptions { area_weighting: true }).unwrap();
        let w0 = (-10.0f64).to_radians().cos().sqrt();
        assert!((m.data()[(0, 2)] - 2.0 * w0).abs() < 1e-15);
        assert_eq!(reg.weights.as_ref().unwrap().len(), 2);
    }

    #[test]
    fn standardize_single_location() {
        let f = field(1, 1, 3, |_, _, w| Some(1.0 + w as f64));
        let z = standardize_field(&f);
        let e = 1.5f64.sqrt();
        assert!((z.sep[0].unwrap() + e).abs() < 1e-12);
        assert!(z.sep[1].unwrap().abs() < 1e-15);
        assert!((z.sep[2].unwrap() - e).abs() < 1e-12);
        assert!(z.standardized);
    }

    #[test]
    fn standardize_keeps_empty_locations_missing() {
        let f = field(1, 2, 4, |_, j, w| if j == 0 { None } else { Some(w as f64 * w as f64) });
        let z = standardize_field(&f);
        assert!(z.series(Measure::Sep, 0, 0).iter().all(Option::is_none));
        assert!(z.series(Measure::Sep, 0, 1).iter().all(Option::is_some));
    }
}
