//! Reference implementations used only by tests. None of this code shares a
//! path with the library internals it is compared against.

#![allow(dead_code, clippy::needless_range_loop)]

use std::f64::consts::PI;

/// Straight O(n²) double sum of the Sheather-Jones direct plug-in formulas:
/// normal-scale ψ₆ → pilot g → ψ̂₄(g) → h.
pub fn sj_bandwidth_naive(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    let sigma = var.sqrt();

    let psi6 = -15.0 / (16.0 * PI.sqrt() * sigma.powi(7));
    let k4_zero = 3.0 / (2.0 * PI).sqrt();
    let g = (-2.0 * k4_zero / (psi6 * n)).powf(1.0 / 7.0);

    let mut sum = 0.0;
    for xi in x {
        for xj in x {
            let u = (xi - xj) / g;
            let phi = (-0.5 * u * u).exp() / (2.0 * PI).sqrt();
            sum += (u.powi(4) - 6.0 * u * u + 3.0) * phi;
        }
    }
    let psi4 = sum / (n * n * g.powi(5));
    let rk = 1.0 / (2.0 * PI.sqrt());
    (rk / (n * psi4)).powf(0.2)
}

/// Classical cyclic Jacobi rotations on a dense symmetric matrix stored as
/// rows. Returns eigenvalues sorted descending and matching eigenvectors as
/// columns (`vecs[i][k]` is component i of vector k).
pub fn jacobi_eigen(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    let mut a: Vec<Vec<f64>> = a.to_vec();
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for _sweep in 0..100 {
        let mut off = 0.0;
        let mut diag = 0.0;
        for i in 0..n {
            diag += a[i][i] * a[i][i];
            for j in 0..n {
                if i != j {
                    off += a[i][j] * a[i][j];
                }
            }
        }
        if off <= 1e-30 * diag.max(1e-300) || off == 0.0 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let vp = row[p];
                    let vq = row[q];
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j][j].partial_cmp(&a[i][i]).unwrap());
    let vals = order.iter().map(|&k| a[k][k]).collect();
    let vecs = (0..n)
        .map(|i| order.iter().map(|&k| v[i][k]).collect())
        .collect();
    (vals, vecs)
}

/// Population covariance of rows (locations) over columns (times), divisor T.
pub fn naive_covariance(rows: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let m = rows.len();
    let t = rows[0].len() as f64;
    let means: Vec<f64> = rows.iter().map(|r| r.iter().sum::<f64>() / t).collect();
    let mut c = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in 0..m {
            let mut s = 0.0;
            for k in 0..rows[0].len() {
                s += (rows[i][k] - means[i]) * (rows[j][k] - means[j]);
            }
            c[i][j] = s / t;
        }
    }
    c
}

/// Composite trapezoid rule over `count` uniformly spaced points.
pub fn trapezoid(f: impl Fn(f64) -> f64, lo: f64, hi: f64, count: usize) -> f64 {
    let step = (hi - lo) / (count - 1) as f64;
    let mut s = 0.0;
    for k in 0..count {
        let w = if k == 0 || k == count - 1 { 0.5 } else { 1.0 };
        s += w * f(lo + step * k as f64);
    }
    s * step
}

/// Small self-contained generator so test fixtures do not depend on the
/// library's synthetic-data module. SplitMix64 + Box-Muller.
pub struct TestRng(u64);

impl TestRng {
    pub fn new(seed: u64) -> Self {
        TestRng(seed)
    }

    pub fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    pub fn uniform(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) / (1u64 << 53) as f64
    }

    pub fn normal(&mut self) -> f64 {
        let u1 = self.uniform();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
    }

    pub fn normals(&mut self, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.normal()).collect()
    }
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
