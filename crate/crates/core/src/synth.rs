//! Seeded synthetic series and fields with known ground truth.
//!
//! Generator contract (fixed so any implementation can reproduce fixtures
//! bit for bit):
//!
//! - PRNG: ChaCha20 (`rand_chacha::ChaCha20Rng`), key = the 64-bit seed in
//!   little-endian followed by 24 zero bytes.
//! - Streams: location (i, j) uses stream `(i << 32) | j`; the shared
//!   temporal coefficient of `rank1_field` uses stream `u64::MAX`.
//!   [`gen_series`] uses stream 0, i.e. the series of location (0, 0).
//! - Uniforms: `((next_u64 >> 11) + 0.5) / 2^53`, strictly inside (0, 1).
//! - Normals: inverse CDF of one uniform, Wichura's AS241 (PPND16).
//! - Mixture draws consume one uniform for the component, then one normal.

use std::fmt;

use chrono::NaiveDate;
use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::FieldGrid;
use crate::stats::years_since;
use crate::windows::TimeAxis;

/// Time dependence of the shared coefficient g(t) in a rank-1 field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rank1Temporal {
    /// g(t) = σ·(1 + growth·years)·z(t) with i.i.d. standard normal z.
    Gaussian { sigma: f64, growth_per_year: f64 },
    /// g(t) = slope·(years - mid), no randomness.
    Linear { slope_per_year: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GeneratorKind {
    Gaussian {
        mean: f64,
        sigma: f64,
    },
    /// Components at `center ∓ separation/2`, common `sigma`, first-component
    /// probability `weight`.
    GaussianMixture2 {
        center: f64,
        separation: f64,
        sigma: f64,
        weight: f64,
    },
    /// σ switches from `sigma_before` to `sigma_after` on `switch_date`
    /// (the midpoint of the axis when `None`).
    VarianceSwitch {
        mean: f64,
        sigma_before: f64,
        sigma_after: f64,
        switch_date: Option<NaiveDate>,
    },
    /// X(s, t) = offset + g(t)·v(s) + noise·ε, with v a fixed unit-norm
    /// spatial pattern.
    Rank1Field {
        offset: f64,
        temporal: Rank1Temporal,
        noise: f64,
    },
}

impl GeneratorKind {
    pub fn name(&self) -> &'static str {
        match self {
            GeneratorKind::Gaussian { .. } => "gaussian",
            GeneratorKind::GaussianMixture2 { .. } => "gaussian_mixture_2",
            GeneratorKind::VarianceSwitch { .. } => "variance_switch",
            GeneratorKind::Rank1Field { .. } => "rank1_field",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    pub seed: u64,
}

impl fmt::Display for GeneratorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} seed={}", self.kind.name(), self.seed)?;
        match self.kind {
            GeneratorKind::Gaussian { mean, sigma } => write!(f, " mean={mean} sigma={sigma}"),
            GeneratorKind::GaussianMixture2 {
                center,
                separation,
                sigma,
                weight,
            } => write!(f, " center={center} separation={separation} sigma={sigma} weight={weight}"),
            GeneratorKind::VarianceSwitch {
                mean,
                sigma_before,
                sigma_after,
                switch_date,
            } => {
                write!(f, " mean={mean} sigma_before={sigma_before} sigma_after={sigma_after}")?;
                match switch_date {
                    Some(d) => write!(f, " switch_date={d}"),
                    None => write!(f, " switch_date=midpoint"),
                }
            }
            GeneratorKind::Rank1Field {
                offset,
                temporal,
                noise,
            } => {
                write!(f, " offset={offset} noise={noise}")?;
                match temporal {
                    Rank1Temporal::Gaussian { sigma, growth_per_year } => {
                        write!(f, " temporal=gaussian sigma={sigma} growth={growth_per_year}")
                    }
                    Rank1Temporal::Linear { slope_per_year } => {
                        write!(f, " temporal=linear slope={slope_per_year}")
                    }
                }
            }
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::BadParameters(format!("{name} must be positive and finite, got {v}")))
    }
}

fn finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::BadParameters(format!("{name} must be finite, got {v}")))
    }
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<()> {
        match self.kind {
            GeneratorKind::Gaussian { mean, sigma } => {
                finite("mean", mean)?;
                positive("sigma", sigma)
            }
            GeneratorKind::GaussianMixture2 {
                center,
                separation,
                sigma,
                weight,
            } => {
                finite("center", center)?;
                finite("separation", separation)?;
                positive("sigma", sigma)?;
                if !(weight > 0.0 && weight < 1.0) {
                    return Err(Error::BadParameters(format!("weight must lie in (0, 1), got {weight}")));
                }
                Ok(())
            }
            GeneratorKind::VarianceSwitch {
                mean,
                sigma_before,
                sigma_after,
                ..
            } => {
                finite("mean", mean)?;
                positive("sigma_before", sigma_before)?;
                positive("sigma_after", sigma_after)
            }
            GeneratorKind::Rank1Field {
                offset,
                temporal,
                noise,
            } => {
                finite("offset", offset)?;
                if !(noise.is_finite() && noise >= 0.0) {
                    return Err(Error::BadParameters(format!("noise must be >= 0, got {noise}")));
                }
                match temporal {
                    Rank1Temporal::Gaussian { sigma, growth_per_year } => {
                        positive("sigma", sigma)?;
                        finite("growth", growth_per_year)
                    }
                    Rank1Temporal::Linear { slope_per_year } => finite("slope", slope_per_year),
                }
            }
        }
    }
}

/// The fixture random stream: ChaCha20 with explicit stream selection.
pub struct StreamRng {
    inner: ChaCha20Rng,
}

impl StreamRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        let mut inner = ChaCha20Rng::from_seed(key);
        inner.set_stream(stream);
        StreamRng { inner }
    }

    pub fn for_location(seed: u64, lat: usize, lon: usize) -> Self {
        StreamRng::new(seed, ((lat as u64) << 32) | lon as u64)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    pub fn uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) / (1u64 << 53) as f64
    }

    pub fn standard_normal(&mut self) -> f64 {
        inverse_normal_cdf(self.uniform())
    }
}

/// Standard normal quantile, Wichura (1988) AS241 PPND16; ~1e-16 relative.
pub fn inverse_normal_cdf(p: f64) -> f64 {
    if p <= 0.0 {
        return f64::NEG_INFINITY;
    }
    if p >= 1.0 {
        return f64::INFINITY;
    }
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        let num = ((((((r * 2_509.080_928_730_122_7 + 33_430.575_583_588_13) * r + 67_265.770_927_008_7) * r
            + 45_921.953_931_549_87)
            * r
            + 13_731.693_765_509_46)
            * r
            + 1_971.590_950_306_551_4)
            * r
            + 133.141_667_891_784_38)
            * r
            + 3.387_132_872_796_366_5;
        let den = ((((((r * 5_226.495_278_852_546 + 28_729.085_735_721_943) * r + 39_307.895_800_092_71) * r
            + 21_213.794_301_586_597)
            * r
            + 5_394.196_021_424_751)
            * r
            + 687.187_007_492_057_9)
            * r
            + 42.313_330_701_600_91)
            * r
            + 1.0;
        return q * num / den;
    }
    let tail = if q < 0.0 { p } else { 1.0 - p };
    let mut r = (-tail.ln()).sqrt();
    let val = if r <= 5.0 {
        r -= 1.6;
        let num = ((((((r * 7.745_450_142_783_414e-4 + 0.022_723_844_989_269_184) * r
            + 0.241_780_725_177_450_6)
            * r
            + 1.270_458_252_452_368_4)
            * r
            + 3.647_848_324_763_204_5)
            * r
            + 5.769_497_221_460_691)
            * r
            + 4.630_337_846_156_545)
            * r
            + 1.423_437_110_749_683_5;
        let den = ((((((r * 1.050_750_071_644_416_9e-9 + 5.475_938_084_995_345e-4) * r
            + 0.015_198_666_563_616_457)
            * r
            + 0.148_103_976_427_480_08)
            * r
            + 0.689_767_334_985_1)
            * r
            + 1.676_384_830_183_803_8)
            * r
            + 2.053_191_626_637_759)
            * r
            + 1.0;
        num / den
    } else {
        r -= 5.0;
        let num = ((((((r * 2.010_334_399_292_288_1e-7 + 2.711_555_568_743_487_6e-5) * r
            + 0.001_242_660_947_388_078_4)
            * r
            + 0.026_532_189_526_576_124)
            * r
            + 0.296_560_571_828_504_9)
            * r
            + 1.784_826_539_917_291_3)
            * r
            + 5.463_784_911_164_114)
            * r
            + 6.657_904_643_501_103;
        let den = ((((((r * 2.044_263_103_389_939_7e-15 + 1.421_511_758_316_446e-7) * r
            + 1.846_318_317_510_054_8e-5)
            * r
            + 7.868_691_311_456_133e-4)
            * r
            + 0.014_875_361_290_850_615)
            * r
            + 0.136_929_880_922_735_8)
            * r
            + 0.599_832_206_555_887_9)
            * r
            + 1.0;
        num / den
    };
    if q < 0.0 {
        -val
    } else {
        val
    }
}

fn midpoint(axis: &TimeAxis) -> Option<NaiveDate> {
    let first = axis.first()?;
    let last = axis.last()?;
    Some(first + (last - first) / 2)
}

/// Draws one location's series from its own stream.
fn draw_series(kind: &GeneratorKind, rng: &mut StreamRng, axis: &TimeAxis) -> Vec<f64> {
    match *kind {
        GeneratorKind::Gaussian { mean, sigma } => {
            axis.dates().iter().map(|_| mean + sigma * rng.standard_normal()).collect()
        }
        GeneratorKind::GaussianMixture2 {
            center,
            separation,
            sigma,
            weight,
        } => axis
            .dates()
            .iter()
            .map(|_| {
                let mu = if rng.uniform() < weight {
                    center - 0.5 * separation
                } else {
                    center + 0.5 * separation
                };
                mu + sigma * rng.standard_normal()
            })
            .collect(),
        GeneratorKind::VarianceSwitch {
            mean,
            sigma_before,
            sigma_after,
            switch_date,
        } => {
            let switch = switch_date.or_else(|| midpoint(axis));
            axis.dates()
                .iter()
                .map(|d| {
                    let s = if switch.is_some_and(|sw| *d >= sw) {
                        sigma_after
                    } else {
                        sigma_before
                    };
                    mean + s * rng.standard_normal()
                })
                .collect()
        }
        GeneratorKind::Rank1Field { .. } => unreachable!("rank-1 fields are drawn per grid"),
    }
}

/// A single series; identical to location (0, 0) of [`gen_field`].
pub fn gen_series(spec: &GeneratorSpec, axis: &TimeAxis) -> Result<Vec<f64>> {
    spec.validate()?;
    if let GeneratorKind::Rank1Field { .. } = spec.kind {
        let g = gen_field(spec, &[0.0], &[0.0], axis)?;
        return Ok(g.series(0, 0).into_iter().map(|v| v.unwrap_or(f64::NAN)).collect());
    }
    let mut rng = StreamRng::new(spec.seed, 0);
    Ok(draw_series(&spec.kind, &mut rng, axis))
}

/// The unit-norm spatial pattern of rank-1 fields:
/// v ∝ 1.5 + cos(lat)·sin(lon), strictly positive everywhere.
pub fn rank1_pattern(lats: &[f64], lons: &[f64]) -> Vec<f64> {
    let mut v: Vec<f64> = lats
        .iter()
        .flat_map(|lat| lons.iter().map(move |lon| 1.5 + lat.to_radians().cos() * lon.to_radians().sin()))
        .collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    v
}

/// The temporal coefficient g(t) of a rank-1 field.
pub fn rank1_coefficient(temporal: &Rank1Temporal, seed: u64, axis: &TimeAxis) -> Vec<f64> {
    let Some(first) = axis.first() else {
        return Vec::new();
    };
    match *temporal {
        Rank1Temporal::Gaussian { sigma, growth_per_year } => {
            let mut rng = StreamRng::new(seed, u64::MAX);
            axis.dates()
                .iter()
                .map(|d| sigma * (1.0 + growth_per_year * years_since(first, *d)) * rng.standard_normal())
                .collect()
        }
        Rank1Temporal::Linear { slope_per_year } => {
            let mid = years_since(first, axis.last().unwrap_or(first)) / 2.0;
            axis.dates()
                .iter()
                .map(|d| slope_per_year * (years_since(first, *d) - mid))
                .collect()
        }
    }
}

/// Fills a grid with the generator, one independent stream per location.
pub fn gen_field(spec: &GeneratorSpec, lats: &[f64], lons: &[f64], axis: &TimeAxis) -> Result<FieldGrid> {
    spec.validate()?;
    let n_lon = lons.len();
    let n_loc = lats.len() * n_lon;

    let per_location: Vec<Vec<f64>> = match spec.kind {
        GeneratorKind::Rank1Field {
            offset,
            temporal,
            noise,
        } => {
            let g = rank1_coefficient(&temporal, spec.seed, axis);
            let v = rank1_pattern(lats, lons);
            (0..n_loc)
                .into_par_iter()
                .map(|loc| {
                    let mut rng = StreamRng::for_location(spec.seed, loc / n_lon, loc % n_lon);
                    g.iter()
                        .map(|gt| {
                            let eps = if noise > 0.0 { noise * rng.standard_normal() } else { 0.0 };
                            offset + gt * v[loc] + eps
                        })
                        .collect()
                })
                .collect()
        }
        ref kind => (0..n_loc)
            .into_par_iter()
            .map(|loc| {
                let mut rng = StreamRng::for_location(spec.seed, loc / n_lon, loc % n_lon);
                draw_series(kind, &mut rng, axis)
            })
            .collect(),
    };

    let values = per_location.into_iter().flatten().map(Some).collect();
    let mut grid = FieldGrid::new(lats.to_vec(), lons.to_vec(), axis.clone(), values)?;
    grid.units = "synthetic".into();
    grid.attributes.insert("generator".into(), spec.to_string());
    Ok(grid)
}
