//! Shannon entropy power, Fisher information and Fisher-Shannon complexity
//! estimated from a Gaussian KDE by composite trapezoid quadrature.
//!
//! For a density f the three measures are
//!
//! ```text
//! H = -∫ f log f          (differential entropy, nats)
//! N = exp(2H) / (2πe)     (entropy power)
//! I = ∫ f'² / f           (Fisher information)
//! C = N · I ≥ 1           (equality only for Gaussians)
//! ```
//!
//! The quadrature grid is laid out relative to the sample range and the
//! bandwidth, so an affine map of the data maps the grid with it and `C` is
//! unchanged up to rounding.

use std::f64::consts::{E, PI};

use crate::error::{Error, Result};
use crate::kde::{DensityModel, Samples};

/// Quadrature layout for the entropy and Fisher integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    /// Support is `[min - extension_factor·h, max + extension_factor·h]`.
    pub extension_factor: f64,
    pub num_points: usize,
    /// Grid points where the density is below `density_floor · max(f̂)`
    /// contribute nothing to either integral.
    pub density_floor: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            extension_factor: 8.0,
            num_points: 4096,
            density_floor: 1e-300,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.num_points < 64 {
            return Err(Error::BadParameters(format!(
                "quadrature num_points must be >= 64, got {}",
                self.num_points
            )));
        }
        if !(self.extension_factor > 0.0 && self.extension_factor.is_finite()) {
            return Err(Error::BadParameters(format!(
                "quadrature extension_factor must be positive, got {}",
                self.extension_factor
            )));
        }
        if !(self.density_floor >= 0.0 && self.density_floor.is_finite()) {
            return Err(Error::BadParameters(format!(
                "quadrature density_floor must be non-negative, got {}",
                self.density_floor
            )));
        }
        Ok(())
    }
}

/// One point of the Fisher-Shannon information plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FsPoint {
    pub sep: f64,
    pub fim: f64,
    /// Always exactly `sep * fim`.
    pub fsc: f64,
    pub n_used: usize,
}

/// Raw integrals for one density model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integrals {
    pub entropy: f64,
    pub fim: f64,
}

impl Integrals {
    pub fn sep(&self) -> f64 {
        entropy_power(self.entropy)
    }
}

/// `exp(2H) / (2πe)`.
pub fn entropy_power(entropy: f64) -> f64 {
    (2.0 * entropy).exp() / (2.0 * PI * E)
}

/// Evaluates both integrals in one pass over the quadrature grid.
pub fn integrate(model: &DensityModel, quad: &QuadratureSpec) -> Result<Integrals> {
    quad.validate()?;
    let h = model.bandwidth().get();
    let lo = model.min() - quad.extension_factor * h;
    let hi = model.max() + quad.extension_factor * h;
    let count = quad.num_points;
    let step = (hi - lo) / (count - 1) as f64;
    let (f, df) = model.eval_grid(lo, step, count);

    let peak = f.iter().copied().fold(0.0, f64::max);
    let floor = quad.density_floor * peak;

    let mut neg_flogf = 0.0;
    let mut fisher = 0.0;
    for (k, (&p, &dp)) in f.iter().zip(&df).enumerate() {
        if p <= floor || p <= 0.0 {
            continue;
        }
        let w = if k == 0 || k == count - 1 { 0.5 } else { 1.0 };
        neg_flogf -= w * p * p.ln();
        fisher += w * dp * dp / p;
    }
    let entropy = neg_flogf * step;
    let fim = fisher * step;
    if !entropy.is_finite() {
        return Err(Error::QuadratureFailure(format!("entropy integral is {entropy}")));
    }
    if !(fim.is_finite() && fim > 0.0) {
        return Err(Error::QuadratureFailure(format!("Fisher integral is {fim}")));
    }
    Ok(Integrals { entropy, fim })
}

/// Differential entropy `-∫ f̂ log f̂` in nats.
pub fn estimate_entropy(model: &DensityModel, quad: &QuadratureSpec) -> Result<f64> {
    integrate(model, quad).map(|i| i.entropy)
}

/// Shannon entropy power `exp(2Ĥ) / (2πe)`.
pub fn estimate_sep(model: &DensityModel, quad: &QuadratureSpec) -> Result<f64> {
    let sep = integrate(model, quad)?.sep();
    if sep.is_finite() && sep > 0.0 {
        Ok(sep)
    } else {
        Err(Error::QuadratureFailure(format!("entropy power is {sep}")))
    }
}

/// Fisher information `∫ f̂'² / f̂`.
pub fn estimate_fim(model: &DensityModel, quad: &QuadratureSpec) -> Result<f64> {
    integrate(model, quad).map(|i| i.fim)
}

/// Selects the Sheather-Jones bandwidth, fits the KDE and returns the
/// (SEP, FIM, FSC) triple.
pub fn fs_point(samples: Samples, quad: &QuadratureSpec) -> Result<FsPoint> {
    let n_used = samples.len();
    let model = DensityModel::with_sj_bandwidth(samples)?;
    fs_point_for_model(&model, quad).map(|p| FsPoint { n_used, ..p })
}

pub fn fs_point_for_model(model: &DensityModel, quad: &QuadratureSpec) -> Result<FsPoint> {
    let integrals = integrate(model, quad)?;
    let sep = integrals.sep();
    if !(sep.is_finite() && sep > 0.0) {
        return Err(Error::QuadratureFailure(format!("entropy power is {sep}")));
    }
    let fim = integrals.fim;
    Ok(FsPoint {
        sep,
        fim,
        fsc: sep * fim,
        n_used: model.samples().len(),
    })
}
