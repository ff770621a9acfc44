//! Empirical orthogonal functions of a space-time matrix.
//!
//! Rows are locations, columns are times. With `X_t` the column at time t,
//!
//! ```text
//! μ̂ = 1/T Σ X_t
//! Ĉ = 1/T Σ (X_t - μ̂)(X_t - μ̂)'  = Φ Λ Φ'
//! a_k(t) = φ_k' X_t
//! ```
//!
//! The eigenproblem is solved on the m × m covariance when m ≤ T and on the
//! T × T Gram matrix of the centered data otherwise; both give the same
//! non-zero spectrum.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative size below which a Gram-path eigenvalue is treated as zero and
/// its EOF is completed from the orthogonal complement instead.
const NULL_MODE_TOL: f64 = 1e-12;

/// m locations × T times, no missing values.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeMatrix {
    data: DMatrix<f64>,
    pub location_ids: Vec<String>,
    pub time_ids: Vec<String>,
}

impl SpaceTimeMatrix {
    pub fn new(data: DMatrix<f64>, location_ids: Vec<String>, time_ids: Vec<String>) -> Result<Self> {
        let (m, t) = data.shape();
        if m < 1 || t < 2 {
            return Err(Error::InvalidInput(format!(
                "space-time matrix needs m >= 1 and T >= 2, got {m} x {t}"
            )));
        }
        if location_ids.len() != m || time_ids.len() != t {
            return Err(Error::InvalidInput(format!(
                "id lengths ({}, {}) do not match matrix shape {m} x {t}",
                location_ids.len(),
                time_ids.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("space-time matrix contains non-finite values".into()));
        }
        Ok(SpaceTimeMatrix {
            data,
            location_ids,
            time_ids,
        })
    }

    /// Builds a matrix from row vectors with index-based ids.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.len();
        let t = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != t) {
            return Err(Error::InvalidInput("ragged rows".into()));
        }
        let data = DMatrix::from_fn(m, t, |i, j| rows[i][j]);
        SpaceTimeMatrix::new(
            data,
            (0..m).map(|i| i.to_string()).collect(),
            (0..t).map(|j| j.to_string()).collect(),
        )
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn num_locations(&self) -> usize {
        self.data.nrows()
    }

    pub fn num_times(&self) -> usize {
        self.data.ncols()
    }
}

/// Which eigenproblem [`decompose_with`] solves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EofMethod {
    /// Covariance when m ≤ T, Gram otherwise.
    #[default]
    Auto,
    Covariance,
    Gram,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EofResult {
    pub mean: DVector<f64>,
    /// Non-increasing, clamped at zero; length r = min(m, T).
    pub eigenvalues: Vec<f64>,
    /// m × r, orthonormal columns.
    pub eofs: DMatrix<f64>,
    /// r × T, uncentered projections φ_k' X_t.
    pub pcs: DMatrix<f64>,
}

impl EofResult {
    pub fn num_modes(&self) -> usize {
        self.eigenvalues.len()
    }

    /// λ_k / Σλ for each mode; zeros when the field has no variance.
    pub fn explained_variance(&self) -> Vec<f64> {
        let total: f64 = self.eigenvalues.iter().sum();
        self.eigenvalues
            .iter()
            .map(|l| if total > 0.0 { l / total } else { 0.0 })
            .collect()
    }

    fn check_mode(&self, k: usize) -> Result<usize> {
        if k == 0 || k > self.num_modes() {
            Err(Error::ModeOutOfRange {
                mode: k,
                available: self.num_modes(),
            })
        } else {
            Ok(k - 1)
        }
    }
}

/// Row-wise mean over time.
pub fn spatial_mean(field: &SpaceTimeMatrix) -> DVector<f64> {
    let t = field.num_times() as f64;
    DVector::from_iterator(field.num_locations(), field.data.row_iter().map(|r| r.sum() / t))
}

fn centered(field: &SpaceTimeMatrix, mean: &DVector<f64>) -> DMatrix<f64> {
    let mut xc = field.data.clone();
    for mut col in xc.column_iter_mut() {
        col -= mean;
    }
    xc
}

/// Spatial covariance with divisor T.
pub fn spatial_covariance(field: &SpaceTimeMatrix) -> DMatrix<f64> {
    let xc = centered(field, &spatial_mean(field));
    let t = field.num_times() as f64;
    let mut c = &xc * xc.transpose() / t;
    symmetrize(&mut c);
    c
}

fn symmetrize(c: &mut DMatrix<f64>) {
    let n = c.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (c[(i, j)] + c[(j, i)]);
            c[(i, j)] = v;
            c[(j, i)] = v;
        }
    }
}

pub fn decompose(field: &SpaceTimeMatrix) -> Result<EofResult> {
    decompose_with(field, EofMethod::Auto)
}

pub fn decompose_with(field: &SpaceTimeMatrix, method: EofMethod) -> Result<EofResult> {
    let (m, t) = field.data.shape();
    let use_gram = match method {
        EofMethod::Auto => m > t,
        EofMethod::Covariance => false,
        EofMethod::Gram => true,
    };
    let mean = spatial_mean(field);
    let xc = centered(field, &mean);
    let r = m.min(t);

    let (eigenvalues, mut eofs) = if use_gram {
        gram_modes(&xc, r)?
    } else {
        let mut c = &xc * xc.transpose() / t as f64;
        symmetrize(&mut c);
        let (vals, vecs) = sorted_eigen(c)?;
        let vecs = vecs.columns(0, r).into_owned();
        (vals[..r].to_vec(), vecs)
    };

    orient(&mut eofs);
    let pcs = eofs.transpose() * &field.data;
    Ok(EofResult {
        mean,
        eigenvalues,
        eofs,
        pcs,
    })
}

/// Eigenpairs sorted by non-increasing eigenvalue, negatives clamped to 0.
fn sorted_eigen(c: DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = c.nrows();
    let eig = SymmetricEigen::try_new(c, f64::EPSILON, 1000 + 100 * n).ok_or_else(|| {
        Error::NumericalFailure("symmetric eigensolver did not converge".into())
    })?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let vals = order.iter().map(|&k| eig.eigenvalues[k].max(0.0)).collect();
    let vecs = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    Ok((vals, vecs))
}

/// EOFs from the T × T Gram matrix: φ = Xc u / √(Tλ), then re-orthonormalized;
/// null modes are filled from the orthogonal complement.
fn gram_modes(xc: &DMatrix<f64>, r: usize) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let (m, t) = xc.shape();
    let mut g = xc.transpose() * xc / t as f64;
    symmetrize(&mut g);
    let (vals, vecs) = sorted_eigen(g)?;
    let lead = vals.first().copied().unwrap_or(0.0);

    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(r);
    let mut eigenvalues = Vec::with_capacity(r);
    for (k, &val) in vals.iter().enumerate().take(r) {
        if val <= NULL_MODE_TOL * lead || val <= 0.0 {
            break;
        }
        let phi = xc * vecs.column(k) / (t as f64 * val).sqrt();
        let phi = orthonormalize_against(phi, &basis).ok_or_else(|| {
            Error::NumericalFailure("Gram eigenvector collapsed during orthonormalization".into())
        })?;
        basis.push(phi);
        eigenvalues.push(val);
    }
    // complete with canonical directions carrying the largest residual
    while basis.len() < r {
        let best = (0..m)
            .filter_map(|i| {
                let e = DVector::from_fn(m, |j, _| if i == j { 1.0 } else { 0.0 });
                orthonormalize_residual(e, &basis).map(|(v, norm)| (norm, v))
            })
            .max_by(|a, b| a.0.total_cmp(&b.0))
            .map(|(_, v)| v)
            .ok_or_else(|| Error::NumericalFailure("cannot complete EOF basis".into()))?;
        basis.push(best);
        eigenvalues.push(vals[eigenvalues.len()].max(0.0));
    }
    let eofs = DMatrix::from_columns(&basis);
    Ok((eigenvalues, eofs))
}

fn orthonormalize_residual(
    mut v: DVector<f64>,
    basis: &[DVector<f64>],
) -> Option<(DVector<f64>, f64)> {
    for _ in 0..2 {
        for b in basis {
            let proj = b.dot(&v);
            v.axpy(-proj, b, 1.0);
        }
    }
    let norm = v.norm();
    if norm > 1e-8 {
        Some((v / norm, norm))
    } else {
        None
    }
}

fn orthonormalize_against(v: DVector<f64>, basis: &[DVector<f64>]) -> Option<DVector<f64>> {
    let scale = v.norm();
    orthonormalize_residual(v / scale, basis).map(|(v, _)| v)
}

/// Flips each column so its largest-magnitude component is positive.
fn orient(eofs: &mut DMatrix<f64>) {
    for mut col in eofs.column_iter_mut() {
        let mut pivot = 0;
        for i in 1..col.len() {
            if col[i].abs() > col[pivot].abs() {
                pivot = i;
            }
        }
        if col[pivot] < 0.0 {
            col.neg_mut();
        }
    }
}

/// a_k(t) = φ_k' X_t for mode `k` (1-based).
pub fn pc_series(field: &SpaceTimeMatrix, result: &EofResult, k: usize) -> Result<Vec<f64>> {
    let idx = result.check_mode(k)?;
    let phi = result.eofs.column(idx);
    Ok(field.data.column_iter().map(|x| phi.dot(&x)).collect())
}

/// μ̂ 1' + Σ_{k ∈ modes} φ_k (a_k - φ_k'μ̂)' with 1-based mode indices.
pub fn reconstruct(result: &EofResult, modes: &[usize]) -> Result<DMatrix<f64>> {
    let t = result.pcs.ncols();
    let m = result.mean.len();
    let mut out = DMatrix::from_fn(m, t, |i, _| result.mean[i]);
    for &k in modes {
        let idx = result.check_mode(k)?;
        let phi = result.eofs.column(idx);
        let offset = phi.dot(&result.mean);
        let anomaly = result.pcs.row(idx).map(|a| a - offset);
        out += phi * anomaly;
    }
    Ok(out)
}
