//! Native grid format: a `key: value` text header plus a flat payload of
//! 64-bit floats in (lat, lon, time) order.
//!
//! ```text
//! fishclim-grid: 1
//! units: K
//! missing_value: NaN
//! byte_order: little
//! n_lat: 2
//! n_lon: 3
//! n_time: 1461
//! latitudes: 2.5,0
//! longitudes: 0,2.5,5
//! time: daily 2000-01-01
//! region_mask: 0,1,1,0,0,1
//! region_names: 0=ocean,1=land
//! attr.measure: sep
//! payload: field.bin
//! ```
//!
//! `time` is either `daily <start>` (n_time consecutive days) or
//! `dates <d1>,<d2>,...`. `region_mask`, `region_names` and `attr.*` are
//! optional. The payload path is relative to the header. Lines starting
//! with `#` are comments. Writing is canonical: a grid written, loaded and
//! written again produces identical bytes.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;

use super::{check_coordinates, FieldGrid, RegionMask};
use crate::error::{Error, Result};
use crate::windows::TimeAxis;

const MAGIC: &str = "fishclim-grid";
const VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NativeFiles {
    pub header: PathBuf,
    pub payload: PathBuf,
}

impl NativeFiles {
    /// `<stem>.hdr` and `<stem>.bin` next to each other.
    pub fn for_header(header: impl Into<PathBuf>) -> Self {
        let header = header.into();
        let payload = header.with_extension("bin");
        NativeFiles { header, payload }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ByteOrder {
    Little,
    Big,
}

fn fmt_list(values: &[f64]) -> String {
    values.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

/// Serializes the header (naming `payload_name` as its payload) and returns
/// it with the payload bytes.
pub fn encode_native(grid: &FieldGrid, payload_name: &str) -> (String, Vec<u8>) {
    let (n_lat, n_lon, n_time) = grid.shape();
    let mut h = String::new();
    let _ = writeln!(h, "{MAGIC}: {VERSION}");
    let _ = writeln!(h, "units: {}", grid.units.replace(['\n', '\r'], " "));
    let _ = writeln!(h, "missing_value: {}", grid.missing_value);
    let _ = writeln!(h, "byte_order: little");
    let _ = writeln!(h, "n_lat: {n_lat}");
    let _ = writeln!(h, "n_lon: {n_lon}");
    let _ = writeln!(h, "n_time: {n_time}");
    let _ = writeln!(h, "latitudes: {}", fmt_list(&grid.latitudes));
    let _ = writeln!(h, "longitudes: {}", fmt_list(&grid.longitudes));
    let axis = &grid.time_axis;
    match axis.first() {
        Some(start) if axis.is_daily() => {
            let _ = writeln!(h, "time: daily {start}");
        }
        _ => {
            let dates: Vec<String> = axis.dates().iter().map(|d| d.to_string()).collect();
            let _ = writeln!(h, "time: dates {}", dates.join(","));
        }
    }
    if let Some(mask) = &grid.region_mask {
        let labels: Vec<String> = mask.labels.iter().map(|l| l.to_string()).collect();
        let _ = writeln!(h, "region_mask: {}", labels.join(","));
        if !mask.names.is_empty() {
            let names: Vec<String> = mask.names.iter().map(|(k, v)| format!("{k}={v}")).collect();
            let _ = writeln!(h, "region_names: {}", names.join(","));
        }
    }
    for (k, v) in &grid.attributes {
        let _ = writeln!(h, "attr.{k}: {}", v.replace(['\n', '\r'], " "));
    }
    let _ = writeln!(h, "payload: {payload_name}");

    let sentinel = grid.missing_value;
    let mut bytes = Vec::with_capacity(grid.values.len() * 8);
    for (v, ok) in grid.values.iter().zip(&grid.valid) {
        let x = if *ok { *v } else { sentinel };
        bytes.extend_from_slice(&x.to_le_bytes());
    }
    (h, bytes)
}

/// Writes `<stem>.hdr` + `<stem>.bin` for the given header path.
pub fn write_native(grid: &FieldGrid, header_path: impl AsRef<Path>) -> Result<NativeFiles> {
    let files = NativeFiles::for_header(header_path.as_ref());
    let payload_name = files
        .payload
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| Error::InvalidInput(format!("bad header path {}", files.header.display())))?
        .to_string();
    let (header, payload) = encode_native(grid, &payload_name);
    fs::write(&files.payload, payload).map_err(|e| Error::io(&files.payload, e))?;
    fs::write(&files.header, header).map_err(|e| Error::io(&files.header, e))?;
    Ok(files)
}

/// Header fields before cross-validation against the payload.
struct Header {
    entries: BTreeMap<String, String>,
}

impl Header {
    fn parse(path: &Path, text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once(':')
                .ok_or_else(|| Error::parse(path, format!("line {}: expected 'key: value'", lineno + 1)))?;
            let k = k.trim().to_string();
            if entries.insert(k.clone(), v.trim().to_string()).is_some() {
                return Err(Error::parse(path, format!("duplicate key '{k}'")));
            }
        }
        if entries.is_empty() {
            return Err(Error::parse(path, "empty header"));
        }
        match entries.get(MAGIC).map(String::as_str) {
            Some(VERSION) => {}
            Some(v) => return Err(Error::parse(path, format!("unsupported format version {v}"))),
            None => return Err(Error::parse(path, format!("missing '{MAGIC}' line"))),
        }
        Ok(Header { entries })
    }

    fn required(&self, path: &Path, key: &str) -> Result<&str> {
        self.entries
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| Error::parse(path, format!("missing key '{key}'")))
    }

    fn count(&self, path: &Path, key: &str) -> Result<usize> {
        let v = self.required(path, key)?;
        v.parse()
            .map_err(|_| Error::parse(path, format!("{key}: not a non-negative integer: '{v}'")))
    }
}

fn parse_list<T: std::str::FromStr>(path: &Path, key: &str, v: &str) -> Result<Vec<T>> {
    if v.trim().is_empty() {
        return Ok(Vec::new());
    }
    v.split(',')
        .map(|s| {
            s.trim()
                .parse::<T>()
                .map_err(|_| Error::parse(path, format!("{key}: cannot parse '{}'", s.trim())))
        })
        .collect()
}

fn parse_date(path: &Path, s: &str) -> Result<NaiveDate> {
    NaiveDate::parse_from_str(s.trim(), "%Y-%m-%d")
        .map_err(|_| Error::parse(path, format!("bad date '{}'", s.trim())))
}

/// Loads and validates a native grid from its header path.
pub fn read_native(header_path: impl AsRef<Path>) -> Result<FieldGrid> {
    let path = header_path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let header = Header::parse(path, &text)?;

    let known = [
        MAGIC,
        "units",
        "missing_value",
        "byte_order",
        "n_lat",
        "n_lon",
        "n_time",
        "latitudes",
        "longitudes",
        "time",
        "region_mask",
        "region_names",
        "payload",
    ];
    if let Some(k) = header
        .entries
        .keys()
        .find(|k| !known.contains(&k.as_str()) && !k.starts_with("attr."))
    {
        return Err(Error::parse(path, format!("unknown key '{k}'")));
    }

    let n_lat = header.count(path, "n_lat")?;
    let n_lon = header.count(path, "n_lon")?;
    let n_time = header.count(path, "n_time")?;
    let latitudes: Vec<f64> = parse_list(path, "latitudes", header.required(path, "latitudes")?)?;
    let longitudes: Vec<f64> = parse_list(path, "longitudes", header.required(path, "longitudes")?)?;
    if latitudes.len() != n_lat || longitudes.len() != n_lon {
        return Err(Error::schema(
            path,
            format!(
                "coordinate lengths ({}, {}) do not match n_lat/n_lon ({n_lat}, {n_lon})",
                latitudes.len(),
                longitudes.len()
            ),
        ));
    }
    check_coordinates(&latitudes, &longitudes).map_err(|m| Error::schema(path, m))?;

    let time = header.required(path, "time")?;
    let (kind, rest) = time.split_once(' ').unwrap_or((time, ""));
    let axis = match kind {
        "daily" => TimeAxis::daily(parse_date(path, rest)?, n_time),
        "dates" => {
            let dates = if rest.trim().is_empty() {
                Vec::new()
            } else {
                rest.split(',').map(|s| parse_date(path, s)).collect::<Result<Vec<_>>>()?
            };
            if dates.len() != n_time {
                return Err(Error::schema(
                    path,
                    format!("{} dates listed but n_time is {n_time}", dates.len()),
                ));
            }
            TimeAxis::new(dates).map_err(|e| Error::schema(path, e.to_string()))?
        }
        other => return Err(Error::parse(path, format!("time: unknown kind '{other}'"))),
    };

    let byte_order = match header.entries.get("byte_order").map(String::as_str) {
        None | Some("little") => ByteOrder::Little,
        Some("big") => ByteOrder::Big,
        Some(other) => return Err(Error::parse(path, format!("byte_order: '{other}'"))),
    };
    let missing_value: f64 = match header.entries.get("missing_value") {
        None => f64::NAN,
        Some(v) => v
            .parse()
            .map_err(|_| Error::parse(path, format!("missing_value: cannot parse '{v}'")))?,
    };

    let region_mask = match header.entries.get("region_mask") {
        None => None,
        Some(v) => {
            let labels: Vec<u8> = parse_list(path, "region_mask", v)?;
            if labels.len() != n_lat * n_lon {
                return Err(Error::schema(
                    path,
                    format!("region_mask has {} labels for {} cells", labels.len(), n_lat * n_lon),
                ));
            }
            let mut names = BTreeMap::new();
            if let Some(v) = header.entries.get("region_names") {
                for item in v.split(',').filter(|s| !s.trim().is_empty()) {
                    let (k, name) = item
                        .split_once('=')
                        .ok_or_else(|| Error::parse(path, format!("region_names: bad entry '{item}'")))?;
                    let k: u8 = k
                        .trim()
                        .parse()
                        .map_err(|_| Error::parse(path, format!("region_names: bad label '{k}'")))?;
                    names.insert(k, name.trim().to_string());
                }
            }
            Some(RegionMask { labels, names })
        }
    };
    if region_mask.is_none() && header.entries.contains_key("region_names") {
        return Err(Error::parse(path, "region_names given without region_mask"));
    }

    let payload_name = header.required(path, "payload")?;
    let payload_path = path.parent().unwrap_or(Path::new(".")).join(payload_name);
    let bytes = fs::read(&payload_path).map_err(|e| Error::io(&payload_path, e))?;
    let expected = n_lat * n_lon * n_time;
    if bytes.len() != expected * 8 {
        return Err(Error::schema(
            path,
            format!(
                "payload holds {} bytes ({} values), expected {expected} values for {n_lat} x {n_lon} x {n_time}",
                bytes.len(),
                bytes.len() as f64 / 8.0
            ),
        ));
    }
    let values: Vec<Option<f64>> = bytes
        .chunks_exact(8)
        .map(|c| {
            let raw: [u8; 8] = c.try_into().expect("chunk of 8");
            let v = match byte_order {
                ByteOrder::Little => f64::from_le_bytes(raw),
                ByteOrder::Big => f64::from_be_bytes(raw),
            };
            let missing = !v.is_finite() || (missing_value.is_finite() && v == missing_value);
            (!missing).then_some(v)
        })
        .collect();

    let mut grid = FieldGrid::new(latitudes, longitudes, axis, values).map_err(|e| Error::schema(path, e.to_string()))?;
    grid.units = header.entries.get("units").cloned().unwrap_or_default();
    grid.missing_value = missing_value;
    grid.region_mask = region_mask;
    grid.attributes = header
        .entries
        .iter()
        .filter_map(|(k, v)| k.strip_prefix("attr.").map(|k| (k.to_string(), v.clone())))
        .collect();
    Ok(grid)
}
