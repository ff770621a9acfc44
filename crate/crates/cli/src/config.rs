//! Run configuration: `key: value` files, `--set` overrides and flags.
//!
//! Precedence is flags > `--set` > file > defaults. Every source is first
//! merged into one string map so all values go through the same validation.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::NaiveDate;
use fishclim::fisher_shannon::QuadratureSpec;
use fishclim::grid::{GridFormat, Measure, RegionMask};
use fishclim::synth::{GeneratorKind, GeneratorSpec, Rank1Temporal};
use fishclim::windows::{TimeAxis, WindowSpec};

use crate::failure::Failure;

/// Overrides the automatic worker count when `workers` is not set.
pub const WORKERS_ENV: &str = "FISHCLIM_WORKERS";

const RUN_KEYS: &[&str] = &[
    "input",
    "format",
    "outdir",
    "width_months",
    "step_months",
    "min_valid",
    "extension_factor",
    "num_points",
    "density_floor",
    "standardize",
    "measures",
    "region",
    "modes",
    "start_date",
    "workers",
    "area_weighting",
    "locations",
    "seed",
];

const SYNTH_KEYS: &[&str] = &[
    "kind",
    "mean",
    "sigma",
    "center",
    "separation",
    "weight",
    "sigma_before",
    "sigma_after",
    "switch_date",
    "offset",
    "temporal",
    "growth",
    "slope",
    "noise",
    "latitudes",
    "longitudes",
    "time_start",
    "days",
    "time_end",
    "output",
    "units",
    "region_mask",
    "region_names",
];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Settings(BTreeMap<String, String>);

impl Settings {
    /// Parses `key: value` lines; `#` starts a comment line.
    pub fn parse(text: &str, origin: &str) -> Result<Self, Failure> {
        let mut map = BTreeMap::new();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once(':')
                .ok_or_else(|| Failure::parse(format!("{origin}:{}: expected 'key: value'", k + 1)))?;
            let key = key.trim();
            if key.is_empty() {
                return Err(Failure::parse(format!("{origin}:{}: empty key", k + 1)));
            }
            if map.insert(key.to_string(), value.trim().to_string()).is_some() {
                return Err(Failure::parse(format!("{origin}:{}: duplicate key '{key}'", k + 1)));
            }
        }
        Ok(Settings(map))
    }

    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = fs::read_to_string(path).map_err(|e| Failure::io(path, e))?;
        Settings::parse(&text, &path.display().to_string())
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.0.insert(key.to_string(), value.into());
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, kv: &str) -> Result<(), Failure> {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Failure::parameter(format!("--set expects key=value, got '{kv}'")))?;
        self.set(k.trim(), v.trim());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.get(key).map(String::as_str).filter(|v| !v.is_empty())
    }

    pub fn check_known(&self) -> Result<(), Failure> {
        match self.0.keys().find(|k| !RUN_KEYS.contains(&k.as_str()) && !SYNTH_KEYS.contains(&k.as_str())) {
            Some(k) => Err(Failure::parameter(format!("unknown configuration key '{k}'"))),
            None => Ok(()),
        }
    }

    pub fn entries(&self) -> impl Iterator<Item = (&String, &String)> {
        self.0.iter()
    }

    fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>, Failure> {
        self.get(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| Failure::parameter(format!("invalid value for '{key}': '{v}'")))
            })
            .transpose()
    }

    fn or<T: FromStr>(&self, key: &str, default: T) -> Result<T, Failure> {
        Ok(self.parsed(key)?.unwrap_or(default))
    }

    fn flag(&self, key: &str, default: bool) -> Result<bool, Failure> {
        match self.get(key) {
            None => Ok(default),
            Some("true" | "yes" | "on" | "1") => Ok(true),
            Some("false" | "no" | "off" | "0") => Ok(false),
            Some(v) => Err(Failure::parameter(format!("invalid value for '{key}': '{v}'"))),
        }
    }

    fn date(&self, key: &str) -> Result<Option<NaiveDate>, Failure> {
        self.get(key)
            .map(|v| {
                NaiveDate::parse_from_str(v, "%Y-%m-%d")
                    .map_err(|_| Failure::parameter(format!("invalid date for '{key}': '{v}' (expected YYYY-MM-DD)")))
            })
            .transpose()
    }

    fn list(&self, key: &str) -> Result<Option<Vec<f64>>, Failure> {
        self.get(key)
            .map(|v| {
                v.split(',')
                    .map(|x| {
                        x.trim()
                            .parse::<f64>()
                            .map_err(|_| Failure::parameter(format!("invalid number '{x}' in '{key}'")))
                    })
                    .collect()
            })
            .transpose()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input: Option<PathBuf>,
    pub format: Option<GridFormat>,
    pub outdir: PathBuf,
    pub window: WindowSpec,
    pub quad: QuadratureSpec,
    pub standardize: bool,
    pub measures: Vec<Measure>,
    pub region: Option<String>,
    pub modes: usize,
    pub start_date: Option<NaiveDate>,
    /// 0 selects the pool default (all cores).
    pub workers: usize,
    pub area_weighting: bool,
    pub locations: Vec<(f64, f64)>,
    pub seed: u64,
    pub settings: Settings,
}

impl RunConfig {
    pub fn from_settings(settings: Settings) -> Result<Self, Failure> {
        settings.check_known()?;
        let s = &settings;
        let window = WindowSpec {
            width_months: s.or("width_months", WindowSpec::default().width_months)?,
            step_months: s.or("step_months", WindowSpec::default().step_months)?,
            min_valid: s.or("min_valid", WindowSpec::default().min_valid)?,
        };
        window.validate().map_err(Failure::from)?;
        let quad = QuadratureSpec {
            extension_factor: s.or("extension_factor", QuadratureSpec::default().extension_factor)?,
            num_points: s.or("num_points", QuadratureSpec::default().num_points)?,
            density_floor: s.or("density_floor", QuadratureSpec::default().density_floor)?,
        };
        quad.validate().map_err(Failure::from)?;

        let measures = match s.get("measures") {
            None => Measure::ALL.to_vec(),
            Some(v) => {
                let mut out: Vec<Measure> = Vec::new();
                for name in v.split(',') {
                    let m: Measure = name.trim().parse().map_err(Failure::from)?;
                    if !out.contains(&m) {
                        out.push(m);
                    }
                }
                out
            }
        };
        let modes: usize = s.or("modes", 2)?;
        if modes == 0 {
            return Err(Failure::parameter("modes must be at least 1"));
        }
        let workers = match s.parsed::<usize>("workers")? {
            Some(w) => w,
            None => match std::env::var(WORKERS_ENV) {
                Ok(v) if !v.trim().is_empty() => v
                    .trim()
                    .parse()
                    .map_err(|_| Failure::parameter(format!("invalid {WORKERS_ENV} value '{v}'")))?,
                _ => 0,
            },
        };
        let format = s.parsed::<GridFormat>("format").map_err(|_| {
            Failure::parameter(format!("invalid format '{}' (expected native or csv)", s.get("format").unwrap_or("")))
        })?;

        Ok(RunConfig {
            input: s.get("input").map(PathBuf::from),
            format,
            outdir: PathBuf::from(s.get("outdir").unwrap_or("out")),
            window,
            quad,
            standardize: s.flag("standardize", true)?,
            measures,
            region: s.get("region").map(str::to_string),
            modes,
            start_date: s.date("start_date")?,
            workers,
            area_weighting: s.flag("area_weighting", false)?,
            locations: parse_locations(s.get("locations").unwrap_or(""))?,
            seed: s.or("seed", 1)?,
            settings: settings.clone(),
        })
    }

    /// Effective values of every run setting, defaults included.
    pub fn echo(&self) -> BTreeMap<String, String> {
        let mut m = BTreeMap::new();
        let mut put = |k: &str, v: String| {
            m.insert(k.to_string(), v);
        };
        put("input", self.input.as_ref().map(|p| p.display().to_string()).unwrap_or_default());
        put(
            "format",
            match self.format {
                None => "auto".into(),
                Some(GridFormat::Native) => "native".into(),
                Some(GridFormat::Csv) => "csv".into(),
            },
        );
        put("outdir", self.outdir.display().to_string());
        put("width_months", self.window.width_months.to_string());
        put("step_months", self.window.step_months.to_string());
        put("min_valid", self.window.min_valid.to_string());
        put("extension_factor", format!("{:?}", self.quad.extension_factor));
        put("num_points", self.quad.num_points.to_string());
        put("density_floor", format!("{:?}", self.quad.density_floor));
        put("standardize", self.standardize.to_string());
        put(
            "measures",
            self.measures.iter().map(|m| m.as_str()).collect::<Vec<_>>().join(","),
        );
        put("region", self.region.clone().unwrap_or_default());
        put("modes", self.modes.to_string());
        put("start_date", self.start_date.map(|d| d.to_string()).unwrap_or_default());
        put("workers", self.workers.to_string());
        put("area_weighting", self.area_weighting.to_string());
        put(
            "locations",
            self.locations
                .iter()
                .map(|(a, b)| format!("{a},{b}"))
                .collect::<Vec<_>>()
                .join(";"),
        );
        put("seed", self.seed.to_string());
        m
    }
}

/// `lat,lon;lat,lon;...`
pub fn parse_locations(text: &str) -> Result<Vec<(f64, f64)>, Failure> {
    text.split(';')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|pair| {
            let bad = || Failure::parameter(format!("invalid location '{pair}' (expected lat,lon)"));
            let (a, b) = pair.split_once(',').ok_or_else(bad)?;
            Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
        })
        .collect()
}

/// Everything the synth command needs besides the output directory.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub spec: GeneratorSpec,
    pub latitudes: Vec<f64>,
    pub longitudes: Vec<f64>,
    pub axis: TimeAxis,
    pub output: String,
    pub units: String,
    pub region_mask: Option<RegionMask>,
}

impl SynthConfig {
    pub fn from_settings(s: &Settings, seed: u64) -> Result<Self, Failure> {
        let kind = match s.get("kind").unwrap_or("gaussian") {
            "gaussian" => GeneratorKind::Gaussian {
                mean: s.or("mean", 0.0)?,
                sigma: s.or("sigma", 1.0)?,
            },
            "gaussian_mixture_2" => GeneratorKind::GaussianMixture2 {
                center: s.or("center", 0.0)?,
                separation: s.or("separation", 4.0)?,
                sigma: s.or("sigma", 1.0)?,
                weight: s.or("weight", 0.5)?,
            },
            "variance_switch" => GeneratorKind::VarianceSwitch {
                mean: s.or("mean", 0.0)?,
                sigma_before: s.or("sigma_before", 1.0)?,
                sigma_after: s.or("sigma_after", 3.0)?,
                switch_date: s.date("switch_date")?,
            },
            "rank1_field" => GeneratorKind::Rank1Field {
                offset: s.or("offset", 0.0)?,
                temporal: match s.get("temporal").unwrap_or("gaussian") {
                    "gaussian" => Rank1Temporal::Gaussian {
                        sigma: s.or("sigma", 1.0)?,
                        growth_per_year: s.or("growth", 0.0)?,
                    },
                    "linear" => Rank1Temporal::Linear {
                        slope_per_year: s.or("slope", 1.0)?,
                    },
                    other => {
                        return Err(Failure::parameter(format!(
                            "unknown temporal '{other}' (expected gaussian or linear)"
                        )))
                    }
                },
                noise: s.or("noise", 0.0)?,
            },
            other => {
                return Err(Failure::parameter(format!(
                    "unknown generator kind '{other}' (expected gaussian, gaussian_mixture_2, variance_switch or rank1_field)"
                )))
            }
        };
        let spec = GeneratorSpec { kind, seed };
        spec.validate().map_err(Failure::from)?;

        let default_coords = vec![0.0, 2.5, 5.0, 7.5];
        let latitudes = s.list("latitudes")?.unwrap_or_else(|| default_coords.clone());
        let longitudes = s.list("longitudes")?.unwrap_or(default_coords);
        let start = s.date("time_start")?.unwrap_or(NaiveDate::from_ymd_opt(2000, 1, 1).expect("valid date"));
        let axis = match (s.date("time_end")?, s.parsed::<usize>("days")?) {
            (Some(_), Some(_)) => return Err(Failure::parameter("set either 'days' or 'time_end', not both")),
            (Some(end), None) if end >= start => TimeAxis::daily_range(start, end),
            (Some(_), None) => return Err(Failure::parameter("time_end precedes time_start")),
            (None, days) => {
                let days = days.unwrap_or(3650);
                if days < 2 {
                    return Err(Failure::parameter("days must be at least 2"));
                }
                TimeAxis::daily(start, days)
            }
        };
        let output = s.get("output").unwrap_or("synth").to_string();
        if output.contains(['/', '\\']) || output.starts_with('.') {
            return Err(Failure::parameter(format!("output must be a plain file stem, got '{output}'")));
        }
        let region_mask = match s.get("region_mask") {
            None => None,
            Some(labels) => {
                let labels = labels
                    .split(',')
                    .map(|x| {
                        x.trim()
                            .parse::<u8>()
                            .map_err(|_| Failure::parameter(format!("invalid region label '{x}'")))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                let mut names = BTreeMap::new();
                for item in s.get("region_names").unwrap_or("").split(',').filter(|x| !x.trim().is_empty()) {
                    let (k, v) = item
                        .split_once('=')
                        .ok_or_else(|| Failure::parameter(format!("invalid region name entry '{item}'")))?;
                    let k: u8 = k
                        .trim()
                        .parse()
                        .map_err(|_| Failure::parameter(format!("invalid region label '{k}'")))?;
                    names.insert(k, v.trim().to_string());
                }
                Some(RegionMask { labels, names })
            }
        };
        Ok(SynthConfig {
            spec,
            latitudes,
            longitudes,
            axis,
            output,
            units: s.get("units").unwrap_or("synthetic").to_string(),
            region_mask,
        })
    }
}
