//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Runs with `cargo test -p fishclim-cli --test acceptance`.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::collections::BTreeMap;
use std::fs;
use std::panic;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use chrono::{Days, Months, NaiveDate};
use common::{jacobi_eigen, median, naive_covariance, rel_err, sj_bandwidth_naive, trapezoid, TestRng};
use fishclim::eof::{decompose, pc_series, reconstruct, SpaceTimeMatrix};
use fishclim::fisher_shannon::{fs_point, QuadratureSpec};
use fishclim::grid::{read_native, write_native, FieldGrid};
use fishclim::kde::{kde_pdf, kde_pdf_derivative, sj_bandwidth, DensityModel, Samples};
use fishclim::synth::{gen_series, GeneratorKind, GeneratorSpec};
use fishclim::windows::{make_windows, TimeAxis, WindowSpec};
use serde_json::Value;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn d(y: i32, m: u32, day: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, day).unwrap()
}

fn quad() -> QuadratureSpec {
    QuadratureSpec::default()
}

fn fishclim(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_fishclim"))
        .args(args)
        .env_remove("FISHCLIM_WORKERS")
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || {
        format!("fishclim {args:?}: {}", String::from_utf8_lossy(&out.stderr).trim())
    })
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn gaussian_boundary() -> Outcome {
    let t0 = Instant::now();
    let mut fsc = Vec::new();
    for seed in 0..50u64 {
        let p = fs_point(Samples::new(TestRng::new(1000 + seed).normals(5000)).unwrap(), &quad()).map_err(|e| e.to_string())?;
        ensure(p.sep * p.fim >= 0.98, || format!("seed {seed}: N·I = {}", p.sep * p.fim))?;
        fsc.push(p.fsc);
    }
    let elapsed = t0.elapsed();
    let min = fsc.iter().cloned().fold(f64::MAX, f64::min);
    let med = median(fsc);
    ensure((0.95..=1.10).contains(&med), || format!("median FSC {med}"))?;
    ensure(elapsed < Duration::from_secs(60), || format!("took {elapsed:?}"))?;
    Ok(format!("median FSC {med:.4}, min {min:.4}, {:.1} s", elapsed.as_secs_f64()))
}

fn mixture_fsc(d: f64) -> Result<f64, String> {
    let spec = GeneratorSpec {
        kind: GeneratorKind::GaussianMixture2 {
            center: 0.0,
            separation: d,
            sigma: 1.0,
            weight: 0.5,
        },
        seed: 7,
    };
    let x = gen_series(&spec, &TimeAxis::daily(d_start(), 20_000)).map_err(|e| e.to_string())?;
    Ok(fs_point(Samples::new(x).unwrap(), &quad()).map_err(|e| e.to_string())?.fsc)
}

fn d_start() -> NaiveDate {
    d(1950, 1, 1)
}

fn mixture_limit() -> Outcome {
    let t0 = Instant::now();
    let mut values = Vec::new();
    for sep in [0.0, 2.0, 4.0, 6.0, 10.0] {
        values.push((sep, mixture_fsc(sep)?));
    }
    for w in values.windows(2) {
        ensure(w[1].1 >= w[0].1 - 0.15, || format!("FSC drops from {} at d={} to {} at d={}", w[0].1, w[0].0, w[1].1, w[1].0))?;
    }
    let at10 = values[4].1;
    ensure((3.4..=4.4).contains(&at10), || format!("FSC at d=10 is {at10}"))?;
    let elapsed = t0.elapsed();
    ensure(elapsed < Duration::from_secs(30), || format!("took {elapsed:?}"))?;
    let listed: Vec<String> = values.iter().map(|(d, f)| format!("d={d}: {f:.3}")).collect();
    Ok(format!("{}, {:.1} s", listed.join(", "), elapsed.as_secs_f64()))
}

/// Normal, skewed, uniform and bimodal draws of varying size and location.
fn random_dataset(rng: &mut TestRng, kind: u64) -> Vec<f64> {
    let n = 50 + (rng.next_u64() % 3000) as usize;
    let loc = 20.0 * (rng.uniform() - 0.5);
    (0..n)
        .map(|_| {
            loc + match kind % 4 {
                0 => rng.normal() * 2.0,
                1 => rng.normal().exp(),
                2 => 5.0 * rng.uniform(),
                _ => rng.normal() + if rng.uniform() < 0.3 { 4.0 } else { 0.0 },
            }
        })
        .collect()
}

fn scaling_laws() -> Outcome {
    let mut rng = TestRng::new(33);
    let mut worst: f64 = 0.0;
    let mut cases = 0;
    for k in 0..20u64 {
        let x = Samples::new(random_dataset(&mut rng, k)).unwrap();
        let p = fs_point(x.clone(), &quad()).map_err(|e| e.to_string())?;
        for a in [0.1, 3.0, 100.0] {
            let b = 50.0 * (rng.uniform() - 0.5);
            let q = fs_point(x.affine(a, b).unwrap(), &quad()).map_err(|e| e.to_string())?;
            let errs = [rel_err(q.sep, a * a * p.sep), rel_err(q.fim, p.fim / (a * a)), rel_err(q.fsc, p.fsc)];
            let e = errs.iter().cloned().fold(0.0, f64::max);
            ensure(e <= 1e-6, || format!("dataset {k}, a = {a}: relative errors {errs:?}"))?;
            worst = worst.max(e);
            cases += 1;
        }
    }
    Ok(format!("{cases} cases, worst relative error {worst:.2e}"))
}

fn kde_correctness() -> Outcome {
    let mut rng = TestRng::new(44);
    let mut worst_fd: f64 = 0.0;
    let mut worst_int: f64 = 0.0;
    let mut worst_sj: f64 = 0.0;
    for (k, n) in [2usize, 5, 30, 100, 400, 1000, 1500, 2000].into_iter().enumerate() {
        let x: Vec<f64> = random_dataset(&mut rng, k as u64).into_iter().cycle().take(n).collect();
        let samples = Samples::new(x.clone()).unwrap();
        let h = sj_bandwidth(&samples).map_err(|e| e.to_string())?.get();
        let oracle = sj_bandwidth_naive(&x);
        let e = rel_err(h, oracle);
        ensure(e <= 1e-8, || format!("n = {n}: SJ {h} vs naive {oracle}"))?;
        worst_sj = worst_sj.max(e);

        let model = DensityModel::with_sj_bandwidth(samples).unwrap();
        let total = trapezoid(|t| kde_pdf(&model, t), model.min() - 8.0 * h, model.max() + 8.0 * h, 4096);
        ensure((total - 1.0).abs() <= 1e-6, || format!("n = {n}: density integrates to {total}"))?;
        worst_int = worst_int.max((total - 1.0).abs());

        let (lo, hi) = (model.min() - 4.0 * h, model.max() + 4.0 * h);
        for _ in 0..100 {
            let t = lo + (hi - lo) * rng.uniform();
            let analytic = kde_pdf_derivative(&model, t);
            if analytic.abs() <= 1e-12 {
                continue;
            }
            let step = 1e-6 * h;
            let fd = (kde_pdf(&model, t + step) - kde_pdf(&model, t - step)) / (2.0 * step);
            let e = rel_err(fd, analytic);
            ensure(e <= 1e-5, || format!("n = {n}, x = {t}: fd {fd} vs analytic {analytic}"))?;
            worst_fd = worst_fd.max(e);
        }
    }
    Ok(format!(
        "derivative {worst_fd:.1e}, integral {worst_int:.1e}, SJ {worst_sj:.1e} (worst errors)"
    ))
}

fn window_protocol() -> Outcome {
    let axis = TimeAxis::daily_range(d(1948, 1, 1), d(2018, 11, 30));
    let w = make_windows(&axis, &WindowSpec::default()).map_err(|e| e.to_string())?;
    let first = (w[0].start, w[0].end);
    let last = (w[w.len() - 1].start, w[w.len() - 1].end);
    ensure(first == (d(1948, 1, 1), d(1952, 12, 31)), || format!("first window {first:?}"))?;
    ensure(last == (d(2013, 12, 1), d(2018, 11, 30)), || format!("last window {last:?}"))?;
    Ok(format!("{} windows, first {} .. {}, last {} .. {}", w.len(), first.0, first.1, last.0, last.1))
}

fn population_variance(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mu = x.iter().sum::<f64>() / n;
    x.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / n
}

fn eof_equivalence() -> Outcome {
    let mut rng = TestRng::new(66);
    let mut worst = [0.0f64; 4];
    let mut compared_vectors = 0;
    for field_no in 0..100 {
        let m = 1 + (rng.next_u64() % 10) as usize;
        let t = 2 + (rng.next_u64() % 49) as usize;
        let rows: Vec<Vec<f64>> = (0..m)
            .map(|i| (0..t).map(|_| rng.normal() * (1.0 + i as f64) + i as f64).collect())
            .collect();
        let field = SpaceTimeMatrix::from_rows(&rows).map_err(|e| e.to_string())?;
        let res = decompose(&field).map_err(|e| e.to_string())?;
        let (vals, vecs) = jacobi_eigen(&naive_covariance(&rows));
        let r = res.num_modes();
        let l1 = vals[0];
        // rank-deficient (null) modes are compared on an absolute floor
        let null_floor = 1e-13 * l1;
        for k in 0..r {
            let diff = (res.eigenvalues[k] - vals[k]).abs();
            ensure(diff <= 1e-8 * vals[k].abs() || diff <= null_floor, || {
                format!("field {field_no}: eigenvalue {k} {} vs {}", res.eigenvalues[k], vals[k])
            })?;
            if vals[k] > null_floor {
                worst[0] = worst[0].max(diff / vals[k]);
            }
            let gap_before = k == 0 || vals[k - 1] - vals[k] > 1e-6 * l1;
            let gap_after = k + 1 == m || vals[k] - vals[k + 1] > 1e-6 * l1;
            if vals[k] > 1e-10 * l1 && gap_before && gap_after {
                let dot: f64 = (0..m).map(|i| res.eofs[(i, k)] * vecs[i][k]).sum();
                ensure(dot.abs() >= 1.0 - 1e-8, || format!("field {field_no}: mode {k} |<φ,ψ>| = {}", dot.abs()))?;
                worst[1] = worst[1].max(1.0 - dot.abs());
                compared_vectors += 1;
            }
        }
        let all: Vec<usize> = (1..=r).collect();
        let err = (reconstruct(&res, &all).map_err(|e| e.to_string())? - field.data()).abs().max();
        ensure(err <= 1e-8, || format!("field {field_no}: reconstruction error {err}"))?;
        worst[2] = worst[2].max(err);
        for k in 1..=r {
            let v = population_variance(&pc_series(&field, &res, k).map_err(|e| e.to_string())?);
            let lk = res.eigenvalues[k - 1];
            let diff = (v - lk).abs();
            ensure(diff <= 1e-8 * lk || diff <= null_floor, || {
                format!("field {field_no}: PC {k} variance {v} vs eigenvalue {lk}")
            })?;
            if lk > null_floor {
                worst[3] = worst[3].max(diff / lk);
            }
        }
    }
    Ok(format!(
        "100 fields; eigenvalue {:.1e}, subspace {:.1e} over {compared_vectors} modes, reconstruction {:.1e}, PC variance {:.1e}",
        worst[0], worst[1], worst[2], worst[3]
    ))
}

fn csv_rows(path: &Path) -> Result<Vec<Vec<String>>, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    Ok(text.lines().skip(1).map(|l| l.split(',').map(str::to_string).collect()).collect())
}

fn change_detection(work: &Path) -> Outcome {
    let dir = work.join("switch");
    fishclim(&[
        "synth", "--outdir", s(&dir),
        "--set", "kind=variance_switch", "--set", "sigma_before=1", "--set", "sigma_after=3",
        "--set", "time_start=1990-01-01", "--set", "time_end=2009-12-31",
        "--set", "latitudes=45", "--set", "longitudes=240",
    ])?;
    fishclim(&["analyze", "--input", s(&dir.join("synth.hdr")), "--outdir", s(&dir)])?;
    fishclim(&["fsip", "--outdir", s(&dir), "--locations", "45,240"])?;
    let switch = d(2000, 1, 1);
    let mut before = Vec::new();
    let mut after = Vec::new();
    for row in csv_rows(&dir.join("fsip.csv"))? {
        let end: NaiveDate = row[2].parse().map_err(|e| format!("{e}"))?;
        let start = end + Days::new(1) - Months::new(60);
        let point: (f64, f64) = (row[3].parse().unwrap(), row[4].parse().unwrap());
        if end < switch {
            before.push(point);
        } else if start >= switch {
            after.push(point);
        }
    }
    ensure(!before.is_empty() && !after.is_empty(), || "no fully-before or fully-after windows".into())?;
    let mean = |v: &[(f64, f64)], f: fn(&(f64, f64)) -> f64| v.iter().map(f).sum::<f64>() / v.len() as f64;
    let sep_ratio = mean(&after, |p| p.0) / mean(&before, |p| p.0);
    let fim_ratio = mean(&after, |p| p.1) / mean(&before, |p| p.1);
    ensure((7.0..=11.0).contains(&sep_ratio), || format!("SEP ratio {sep_ratio}"))?;
    // the trajectory moves along the Gaussian boundary: FIM falls by the same factor
    ensure((1.0 / 11.0..=1.0 / 7.0).contains(&fim_ratio), || format!("FIM ratio {fim_ratio}"))?;
    let max_before = before.iter().map(|p| p.0).fold(f64::MIN, f64::max);
    let min_after = after.iter().map(|p| p.0).fold(f64::MAX, f64::min);
    ensure(min_after > max_before, || format!("SEP ranges overlap: before max {max_before}, after min {min_after}"))?;
    Ok(format!(
        "SEP ratio {sep_ratio:.3}, FIM ratio {fim_ratio:.4} ({} before, {} after windows)",
        before.len(),
        after.len()
    ))
}

fn data_files(dir: &Path) -> Result<BTreeMap<String, Vec<u8>>, String> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir).map_err(|e| e.to_string())? {
        let path = entry.map_err(|e| e.to_string())?.path();
        let name = path.file_name().unwrap().to_str().unwrap().to_string();
        if !name.starts_with("manifest_") {
            out.insert(name, fs::read(&path).map_err(|e| e.to_string())?);
        }
    }
    Ok(out)
}

/// Copy of `grid` with every cell of location (lat, lon) missing.
fn blank_location(grid: &FieldGrid, lat: usize, lon: usize) -> FieldGrid {
    let (n_lat, n_lon, n_t) = grid.shape();
    let mut values = Vec::with_capacity(n_lat * n_lon * n_t);
    for i in 0..n_lat {
        for j in 0..n_lon {
            for t in 0..n_t {
                values.push(if (i, j) == (lat, lon) { None } else { grid.value(i, j, t) });
            }
        }
    }
    let mut out = FieldGrid::new(grid.latitudes().to_vec(), grid.longitudes().to_vec(), grid.time_axis().clone(), values)
        .unwrap()
        .with_units(grid.units.clone());
    out.attributes = grid.attributes.clone();
    out
}

fn determinism_and_totality(work: &Path) -> Outcome {
    let input = work.join("grid");
    fishclim(&["synth", "--outdir", s(&input), "--set", "days=3652", "--set", "latitudes=-30,0,30,60", "--set", "longitudes=0,90,180,270"])?;
    let hdr = input.join("synth.hdr");
    let grid = read_native(&hdr).map_err(|e| e.to_string())?;
    ensure(grid.shape() == (4, 4, 3652), || format!("shape {:?}", grid.shape()))?;
    write_native(&blank_location(&grid, 1, 2), &hdr).map_err(|e| e.to_string())?;

    let mut runs = Vec::new();
    let mut slowest = Duration::ZERO;
    for workers in ["1", "4", "8"] {
        let out = work.join(format!("analyze_w{workers}"));
        let t0 = Instant::now();
        fishclim(&["analyze", "--input", s(&hdr), "--outdir", s(&out), "--workers", workers])?;
        let elapsed = t0.elapsed();
        ensure(elapsed < Duration::from_secs(300), || format!("{workers} workers took {elapsed:?}"))?;
        slowest = slowest.max(elapsed);
        runs.push((workers, data_files(&out)?, out));
    }
    for (workers, files, _) in &runs[1..] {
        ensure(files == &runs[0].1, || format!("outputs with {workers} workers differ from 1 worker"))?;
    }

    let out = &runs[0].2;
    for m in ["sep", "fim", "fsc"] {
        let g = read_native(out.join(format!("{m}.hdr"))).map_err(|e| e.to_string())?;
        let blank = g.series(1, 2);
        ensure(!blank.is_empty() && blank.iter().all(Option::is_none), || format!("{m}: injected location not missing"))?;
        let others = (0..4).flat_map(|i| (0..4).map(move |j| (i, j))).filter(|&c| c != (1, 2));
        for (i, j) in others {
            ensure(g.series(i, j).iter().all(Option::is_some), || format!("{m}: location ({i}, {j}) has missing windows"))?;
        }
    }
    let manifest: Value = serde_json::from_str(&fs::read_to_string(out.join("manifest_analyze.json")).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let warned = manifest["warnings"]
        .as_array()
        .is_some_and(|w| w.iter().any(|m| m.as_str().is_some_and(|m| m.contains("location (0, 180)"))));
    ensure(warned, || "manifest has no warning for the injected location".into())?;
    Ok(format!(
        "{} identical files across workers 1/4/8, injected location missing and reported, slowest run {:.1} s",
        runs[0].1.len(),
        slowest.as_secs_f64()
    ))
}

fn standardization(work: &Path) -> Outcome {
    // standardized outputs of the determinism run
    let out = work.join("analyze_w1");
    let mut worst: f64 = 0.0;
    let mut series = 0;
    for m in ["sep", "fim", "fsc"] {
        let g = read_native(out.join(format!("{m}_z.hdr"))).map_err(|e| e.to_string())?;
        let (n_lat, n_lon, _) = g.shape();
        for i in 0..n_lat {
            for j in 0..n_lon {
                let v: Vec<f64> = g.series(i, j).into_iter().flatten().collect();
                if v.is_empty() {
                    continue;
                }
                let n = v.len() as f64;
                let mu = v.iter().sum::<f64>() / n;
                let sd = (v.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / n).sqrt();
                ensure(mu.abs() <= 1e-10 && (sd - 1.0).abs() <= 1e-10, || {
                    format!("{m} at ({i}, {j}): mean {mu:e}, std {sd}")
                })?;
                worst = worst.max(mu.abs()).max((sd - 1.0).abs());
                series += 1;
            }
        }
    }
    ensure(series == 45, || format!("{series} standardized series, expected 45"))?;
    Ok(format!("{series} series, worst deviation {worst:.1e}"))
}

fn run(name: &str, f: impl FnOnce() -> Outcome) -> bool {
    let t0 = Instant::now();
    let result = panic::catch_unwind(panic::AssertUnwindSafe(f)).unwrap_or_else(|e| {
        Err(e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into()))
    });
    let secs = t0.elapsed().as_secs_f64();
    match result {
        Ok(detail) => {
            println!("PASS {name}: {detail} [{secs:.1} s]");
            true
        }
        Err(why) => {
            println!("FAIL {name}: {why} [{secs:.1} s]");
            false
        }
    }
}

fn main() -> ExitCode {
    let work = tempfile::tempdir().expect("temporary directory");
    let w = work.path();
    let results = [
        run("1 gaussian boundary", gaussian_boundary),
        run("2 mixture limit", mixture_limit),
        run("3 scaling laws", scaling_laws),
        run("4 kde correctness", kde_correctness),
        run("5 window protocol", window_protocol),
        run("6 eof oracle equivalence", eof_equivalence),
        run("7 change detection", || change_detection(w)),
        run("8 determinism and totality", || determinism_and_totality(w)),
        run("9 standardization", || standardization(w)),
    ];
    let failed = results.iter().filter(|ok| !**ok).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
