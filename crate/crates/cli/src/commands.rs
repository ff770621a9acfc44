use std::path::{Path, PathBuf};

use fishclim::eof::{decompose, pc_series};
use fishclim::grid::{
    analyze_grid, hovmoller, hovmoller_csv, load_grid, measure_csv, read_native, standardize_field, to_eof_matrix,
    EofMatrixOptions, FieldGrid, GridFormat, Measure, MeasureField,
};
use fishclim::stats::linear_fit;
use fishclim::synth::gen_field;
use fishclim::windows::make_windows;
use fishclim::Error;
use rayon::ThreadPool;
use serde_json::{json, Value};

use crate::config::{RunConfig, SynthConfig};
use crate::failure::Failure;
use crate::output::{Manifest, Staged};

fn pool(workers: usize) -> Result<ThreadPool, Failure> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Failure::parameter(format!("cannot start {workers} workers: {e}")))
}

fn stem(m: Measure, standardized: bool) -> String {
    if standardized {
        format!("{}_z", m.as_str())
    } else {
        m.as_str().to_string()
    }
}

fn coords(field: &MeasureField, cells: &[(usize, usize)]) -> Value {
    json!(cells
        .iter()
        .map(|&(i, j)| [field.latitudes[i], field.longitudes[j]])
        .collect::<Vec<_>>())
}

pub fn analyze(cfg: &RunConfig) -> Result<PathBuf, Failure> {
    let input = cfg
        .input
        .as_ref()
        .ok_or_else(|| Failure::parameter("analyze needs an input grid (--input)"))?;
    let mut man = Manifest::new("analyze", cfg);
    let format = cfg.format.unwrap_or_else(|| GridFormat::from_path(input));
    let grid = man.timed("load", || load_grid(input, format))?;
    let windows = make_windows(grid.time_axis(), &cfg.window)?;
    if windows.is_empty() {
        return Err(Failure::degenerate(format!(
            "time axis {} .. {} is shorter than one {}-month window",
            grid.time_axis().first().map(|d| d.to_string()).unwrap_or_default(),
            grid.time_axis().last().map(|d| d.to_string()).unwrap_or_default(),
            cfg.window.width_months
        )));
    }
    let workers = pool(cfg.workers)?;
    let field = man.timed("analyze", || workers.install(|| analyze_grid(&grid, &cfg.window, &cfg.quad)))?;
    let z = cfg
        .standardize
        .then(|| man.timed("standardize", || standardize_field(&field)));

    let mut staged = Staged::new();
    let mut per_measure = serde_json::Map::new();
    for &m in &cfg.measures {
        staged.add_grid(&stem(m, false), &field.to_grid(m)?);
        staged.add(format!("{}.csv", stem(m, false)), measure_csv(&field, m));
        let empty = field.empty_locations(m);
        let missing = field.measure(m).iter().filter(|v| v.is_none()).count();
        let mut entry = json!({
            "empty_locations": coords(&field, &empty),
            "empty_location_count": empty.len(),
            "missing_cells": missing,
        });
        for &(i, j) in &empty {
            man.warn(format!(
                "{m}: location ({}, {}) has no estimable window and is missing throughout",
                field.latitudes[i], field.longitudes[j]
            ));
        }
        if let Some(z) = &z {
            staged.add_grid(&stem(m, true), &z.to_grid(m)?);
            staged.add(format!("{}.csv", stem(m, true)), measure_csv(z, m));
            let lost: Vec<_> = z
                .empty_locations(m)
                .into_iter()
                .filter(|c| !empty.contains(c))
                .collect();
            for &(i, j) in &lost {
                man.warn(format!(
                    "{m}: location ({}, {}) cannot be standardized (fewer than two windows or zero variance)",
                    field.latitudes[i], field.longitudes[j]
                ));
            }
            entry["unstandardizable_locations"] = coords(&field, &lost);
        }
        per_measure.insert(m.as_str().into(), entry);
    }

    let (n_lat, n_lon, n_time) = grid.shape();
    man.insert(
        "summary",
        json!({
            "grid": { "n_lat": n_lat, "n_lon": n_lon, "n_time": n_time, "units": grid.units },
            "windows": {
                "count": windows.len(),
                "key": "end_date",
                "first": [windows[0].start.to_string(), windows[0].end.to_string()],
                "last": [windows[windows.len() - 1].start.to_string(), windows[windows.len() - 1].end.to_string()],
            },
            "standardized_outputs": cfg.standardize,
            "measures": per_measure,
        }),
    );
    staged.commit(&cfg.outdir, man)
}

/// Directory holding analyze outputs: `--input` when given, else the outdir.
fn source_dir(cfg: &RunConfig) -> &Path {
    cfg.input.as_deref().unwrap_or(&cfg.outdir)
}

fn load_measure(dir: &Path, m: Measure, standardized: bool) -> Result<FieldGrid, Failure> {
    let path = dir.join(format!("{}.hdr", stem(m, standardized)));
    if !path.exists() {
        let hint = if standardized {
            " (run analyze with standardize enabled, or set standardize: false)"
        } else {
            ""
        };
        return Err(Failure::upstream(format!(
            "{} not found; run analyze first{hint}",
            path.display()
        )));
    }
    Ok(read_native(&path)?)
}

/// A measure field holding only the loaded measures; the rest are missing.
fn assemble(grids: &[(Measure, FieldGrid)], standardized: bool) -> Result<MeasureField, Failure> {
    let (_, first) = &grids[0];
    let mut field = MeasureField {
        latitudes: first.latitudes().to_vec(),
        longitudes: first.longitudes().to_vec(),
        window_end_dates: first.time_axis().dates().to_vec(),
        sep: Vec::new(),
        fim: Vec::new(),
        fsc: Vec::new(),
        standardized,
        region_mask: first.region_mask.clone(),
    };
    let len = first.cells().count();
    for m in Measure::ALL {
        let cells = match grids.iter().find(|(k, _)| *k == m) {
            Some((_, g)) => {
                if g.latitudes() != first.latitudes()
                    || g.longitudes() != first.longitudes()
                    || g.time_axis() != first.time_axis()
                {
                    return Err(Error::InvalidInput(format!("{m} output does not match the other measures")).into());
                }
                g.cells().collect()
            }
            None => vec![None; len],
        };
        match m {
            Measure::Sep => field.sep = cells,
            Measure::Fim => field.fim = cells,
            Measure::Fsc => field.fsc = cells,
        }
    }
    Ok(field)
}

fn file_label(text: &str) -> String {
    text.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

pub fn hovmoller_cmd(cfg: &RunConfig) -> Result<PathBuf, Failure> {
    let mut man = Manifest::new("hovmoller", cfg);
    let dir = source_dir(cfg);
    let mut staged = Staged::new();
    let mut tables = serde_json::Map::new();
    for &m in &cfg.measures {
        let grid = load_measure(dir, m, cfg.standardize)?;
        let field = assemble(&[(m, grid)], cfg.standardize)?;
        let table = hovmoller(&field, m, cfg.region.as_deref())?;
        let name = match &cfg.region {
            None => format!("hovmoller_{m}.csv"),
            Some(r) => format!("hovmoller_{m}_{}.csv", file_label(r)),
        };
        staged.add(name.clone(), hovmoller_csv(&table));
        tables.insert(
            m.as_str().into(),
            json!({
                "file": name,
                "source": format!("{}.hdr", stem(m, cfg.standardize)),
                "n_lat": table.latitudes.len(),
                "n_windows": table.window_end_dates.len(),
                "missing_cells": table.means.iter().filter(|v| v.is_none()).count(),
            }),
        );
    }
    man.insert(
        "summary",
        json!({ "standardized": cfg.standardize, "region": cfg.region, "tables": tables }),
    );
    staged.commit(&cfg.outdir, man)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn eof_cmd(cfg: &RunConfig) -> Result<PathBuf, Failure> {
    let mut man = Manifest::new("eof", cfg);
    let dir = source_dir(cfg);
    let workers = pool(cfg.workers)?;
    let mut staged = Staged::new();
    let mut summary = serde_json::Map::new();
    for &m in &cfg.measures {
        let grid = load_measure(dir, m, cfg.standardize)?;
        let field = assemble(&[(m, grid)], cfg.standardize)?;
        let options = EofMatrixOptions {
            area_weighting: cfg.area_weighting,
        };
        let (matrix, registry) = to_eof_matrix(&field, m, options)?;
        let result = man.timed(&format!("decompose_{m}"), || workers.install(|| decompose(&matrix)))?;
        let r = result.num_modes();
        let k = cfg.modes.min(r);
        if cfg.modes > r {
            man.warn(format!("{m}: requested {} modes but only {r} are available; writing {r}", cfg.modes));
        }
        for &(i, j) in &registry.dropped {
            man.warn(format!(
                "{m}: location ({}, {}) left out of the EOF matrix (missing windows)",
                field.latitudes[i], field.longitudes[j]
            ));
        }
        let explained = result.explained_variance();
        let dates = &field.window_end_dates;

        let mut eig = String::from("mode,eigenvalue,explained_variance\n");
        let mut maps = String::from("mode,lat,lon,value\n");
        let mut pcs = String::from("mode,date,value\n");
        let mut trends = String::from("mode,start_date,slope_per_year,intercept,r_squared,n_points\n");
        let mut trend_json = Vec::new();
        let start = cfg.start_date.unwrap_or(dates[0]);
        for mode in 1..=k {
            eig.push_str(&format!("{mode},{},{}\n", result.eigenvalues[mode - 1], explained[mode - 1]));
            let column: Vec<f64> = result.eofs.column(mode - 1).iter().copied().collect();
            let cells = registry.to_grid(&column);
            for (i, lat) in field.latitudes.iter().enumerate() {
                for (j, lon) in field.longitudes.iter().enumerate() {
                    maps.push_str(&format!("{mode},{lat},{lon},{}\n", fmt_opt(cells[i * field.longitudes.len() + j])));
                }
            }
            let pc = pc_series(&matrix, &result, mode)?;
            for (d, v) in dates.iter().zip(&pc) {
                pcs.push_str(&format!("{mode},{d},{v}\n"));
            }
            match linear_fit(dates, &pc, start) {
                Ok(fit) => {
                    trends.push_str(&format!(
                        "{mode},{},{},{},{},{}\n",
                        fit.start_date, fit.slope, fit.intercept, fit.r_squared, fit.n_points
                    ));
                    trend_json.push(json!({
                        "mode": mode, "slope_per_year": fit.slope, "intercept": fit.intercept,
                        "r_squared": fit.r_squared, "n_points": fit.n_points,
                    }));
                }
                Err(e) => man.warn(format!("{m}: no trend for mode {mode}: {e}")),
            }
        }
        let base = format!("eof_{m}");
        staged.add(format!("{base}_eigenvalues.csv"), eig);
        staged.add(format!("{base}_maps.csv"), maps);
        staged.add(format!("{base}_pcs.csv"), pcs);
        staged.add(format!("{base}_trends.csv"), trends);
        summary.insert(
            m.as_str().into(),
            json!({
                "source": format!("{}.hdr", stem(m, cfg.standardize)),
                "retained_locations": registry.retained.len(),
                "dropped_locations": coords(&field, &registry.dropped),
                "available_modes": r,
                "modes_written": k,
                "eigenvalues": &result.eigenvalues[..k],
                "explained_variance": &explained[..k],
                "total_variance": result.eigenvalues.iter().sum::<f64>(),
                "trend_start_date": start.to_string(),
                "trends": trend_json,
            }),
        );
    }
    man.insert(
        "summary",
        json!({ "standardized": cfg.standardize, "area_weighting": cfg.area_weighting, "measures": summary }),
    );
    staged.commit(&cfg.outdir, man)
}

pub fn fsip_cmd(cfg: &RunConfig) -> Result<PathBuf, Failure> {
    if cfg.locations.is_empty() {
        return Err(Failure::parameter("fsip needs --locations lat,lon[;lat,lon...]"));
    }
    let mut man = Manifest::new("fsip", cfg);
    let dir = source_dir(cfg);
    let grids = Measure::ALL
        .iter()
        .map(|&m| Ok((m, load_measure(dir, m, false)?)))
        .collect::<Result<Vec<_>, Failure>>()?;
    let field = assemble(&grids, false)?;
    let mut csv = String::from("lat,lon,date,sep,fim,fsc\n");
    let mut locs = Vec::new();
    for &(lat, lon) in &cfg.locations {
        let (i, j) = field
            .locate(lat, lon)
            .ok_or_else(|| Error::UnknownLocation(format!("({lat}, {lon}) is not a grid point")))?;
        let (glat, glon) = (field.latitudes[i], field.longitudes[j]);
        let (sep, fim, fsc) = (
            field.series(Measure::Sep, i, j),
            field.series(Measure::Fim, i, j),
            field.series(Measure::Fsc, i, j),
        );
        for (w, d) in field.window_end_dates.iter().enumerate() {
            csv.push_str(&format!(
                "{glat},{glon},{d},{},{},{}\n",
                fmt_opt(sep[w]),
                fmt_opt(fim[w]),
                fmt_opt(fsc[w])
            ));
        }
        let valid: Vec<f64> = fsc.iter().flatten().copied().collect();
        if valid.is_empty() {
            man.warn(format!("location ({glat}, {glon}) has no estimable window"));
        }
        locs.push(json!({
            "lat": glat, "lon": glon,
            "windows": field.num_windows(),
            "valid_windows": valid.len(),
            "fsc_min": valid.iter().cloned().reduce(f64::min),
            "fsc_max": valid.iter().cloned().reduce(f64::max),
        }));
    }
    staged_single(cfg, man, "fsip.csv", csv, json!({ "locations": locs }))
}

fn staged_single(cfg: &RunConfig, mut man: Manifest, name: &str, body: String, summary: Value) -> Result<PathBuf, Failure> {
    let mut staged = Staged::new();
    staged.add(name, body);
    man.insert("summary", summary);
    staged.commit(&cfg.outdir, man)
}

pub fn synth_cmd(cfg: &RunConfig) -> Result<PathBuf, Failure> {
    let sc = SynthConfig::from_settings(&cfg.settings, cfg.seed)?;
    let mut man = Manifest::new("synth", cfg);
    let workers = pool(cfg.workers)?;
    let mut grid = man.timed("generate", || {
        workers.install(|| gen_field(&sc.spec, &sc.latitudes, &sc.longitudes, &sc.axis))
    })?;
    grid.units = sc.units.clone();
    if let Some(mask) = sc.region_mask.clone() {
        grid = grid.with_region_mask(mask)?;
    }
    let mut staged = Staged::new();
    staged.add_grid(&sc.output, &grid);
    let (n_lat, n_lon, n_time) = grid.shape();
    let settings: serde_json::Map<String, Value> = cfg
        .settings
        .entries()
        .map(|(k, v)| (k.clone(), json!(v)))
        .collect();
    man.insert(
        "generator",
        json!({
            "kind": sc.spec.kind.name(),
            "seed": sc.spec.seed,
            "spec": sc.spec.to_string(),
            "prng": "ChaCha20; key = seed (little-endian) + zero bytes; stream (lat_index << 32) | lon_index",
            "normal_transform": "inverse CDF (Wichura AS241)",
            "settings": settings,
        }),
    );
    man.insert(
        "summary",
        json!({
            "grid": { "n_lat": n_lat, "n_lon": n_lon, "n_time": n_time,
                      "first_date": sc.axis.first().map(|d| d.to_string()),
                      "last_date": sc.axis.last().map(|d| d.to_string()) },
            "header": format!("{}.hdr", sc.output),
        }),
    );
    staged.commit(&cfg.outdir, man)
}
