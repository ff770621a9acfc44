//! Long-format CSV: one observation per row.

use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use chrono::NaiveDate;

use super::{check_coordinates, FieldGrid, HovmollerTable, Measure, MeasureField};
use crate::error::{Error, Result};
use crate::windows::TimeAxis;

/// Imports `lat,lon,date,value` rows (header required, any column order).
///
/// Coordinates and dates are sorted ascending; combinations absent from the
/// file, empty values and `NaN`/`NA` are missing.
pub fn read_csv_long(path: impl AsRef<Path>) -> Result<FieldGrid> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let headers = reader
        .headers()
        .map_err(|e| Error::parse(path, e.to_string()))?
        .clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return Err(Error::parse(path, "empty file"));
    }
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::parse(path, format!("missing column '{name}'")))
    };
    let (ci_lat, ci_lon, ci_date, ci_val) = (col("lat")?, col("lon")?, col("date")?, col("value")?);

    let mut rows = Vec::new();
    for (k, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::parse(path, e.to_string()))?;
        let line = k + 2;
        let num = |i: usize, what: &str| -> Result<f64> {
            rec.get(i)
                .unwrap_or("")
                .parse::<f64>()
                .map_err(|_| Error::parse(path, format!("line {line}: bad {what} '{}'", rec.get(i).unwrap_or(""))))
        };
        let lat = num(ci_lat, "lat")?;
        let lon = num(ci_lon, "lon")?;
        let date_s = rec.get(ci_date).unwrap_or("");
        let date = NaiveDate::parse_from_str(date_s, "%Y-%m-%d")
            .map_err(|_| Error::parse(path, format!("line {line}: bad date '{date_s}'")))?;
        let raw = rec.get(ci_val).unwrap_or("");
        let value = match raw {
            "" | "NA" | "NaN" | "nan" => None,
            s => {
                let v: f64 = s
                    .parse()
                    .map_err(|_| Error::parse(path, format!("line {line}: bad value '{s}'")))?;
                v.is_finite().then_some(v)
            }
        };
        rows.push((lat, lon, date, value));
    }
    if rows.is_empty() {
        return Err(Error::parse(path, "no data rows"));
    }

    let key = |v: f64| v.to_bits();
    let lats: Vec<f64> = sorted_unique(rows.iter().map(|r| r.0));
    let lons: Vec<f64> = sorted_unique(rows.iter().map(|r| r.1));
    check_coordinates(&lats, &lons).map_err(|m| Error::schema(path, m))?;
    let dates: Vec<NaiveDate> = rows.iter().map(|r| r.2).collect::<BTreeSet<_>>().into_iter().collect();
    let lat_ix: HashMap<u64, usize> = lats.iter().enumerate().map(|(i, v)| (key(*v), i)).collect();
    let lon_ix: HashMap<u64, usize> = lons.iter().enumerate().map(|(i, v)| (key(*v), i)).collect();
    let date_ix: HashMap<NaiveDate, usize> = dates.iter().enumerate().map(|(i, d)| (*d, i)).collect();

    let (nl, nn, nt) = (lats.len(), lons.len(), dates.len());
    let mut values = vec![None; nl * nn * nt];
    let mut seen = vec![false; nl * nn * nt];
    for (lat, lon, date, value) in rows {
        let k = (lat_ix[&key(lat)] * nn + lon_ix[&key(lon)]) * nt + date_ix[&date];
        if seen[k] {
            return Err(Error::schema(path, format!("duplicate row for ({lat}, {lon}, {date})")));
        }
        seen[k] = true;
        values[k] = value;
    }
    let axis = TimeAxis::new(dates).map_err(|e| Error::schema(path, e.to_string()))?;
    FieldGrid::new(lats, lons, axis, values).map_err(|e| Error::schema(path, e.to_string()))
}

fn sorted_unique(it: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = it.collect();
    v.sort_by(f64::total_cmp);
    v.dedup_by(|a, b| a.to_bits() == b.to_bits());
    v
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// `lat,lon,date,value` rows for one measure; missing cells have an empty value.
pub fn measure_csv(field: &MeasureField, measure: Measure) -> String {
    let mut body = String::from("lat,lon,date,value\n");
    for (i, lat) in field.latitudes.iter().enumerate() {
        for (j, lon) in field.longitudes.iter().enumerate() {
            for (date, v) in field.window_end_dates.iter().zip(field.series(measure, i, j)) {
                body.push_str(&format!("{lat},{lon},{date},{}\n", fmt_opt(*v)));
            }
        }
    }
    body
}

/// `lat,date,value` rows of a Hovmöller table.
pub fn hovmoller_csv(table: &HovmollerTable) -> String {
    let mut body = String::from("lat,date,value\n");
    for (i, lat) in table.latitudes.iter().enumerate() {
        for (w, date) in table.window_end_dates.iter().enumerate() {
            body.push_str(&format!("{lat},{date},{}\n", fmt_opt(table.get(i, w))));
        }
    }
    body
}

fn write_text(path: &Path, body: &str) -> Result<()> {
    let mut out = File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))?;
    out.write_all(body.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn write_measure_csv(field: &MeasureField, measure: Measure, path: impl AsRef<Path>) -> Result<()> {
    write_text(path.as_ref(), &measure_csv(field, measure))
}

pub fn write_hovmoller_csv(table: &HovmollerTable, path: impl AsRef<Path>) -> Result<()> {
    write_text(path.as_ref(), &hovmoller_csv(table))
}
