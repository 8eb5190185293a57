//! Gaussian-copula machinery: Kendall's tau (exact and private), the
//! sine map to Pearson correlation, eigenvalue repair to a positive definite
//! correlation matrix, copula sampling and the private Gaussian-copula
//! generator.

use std::cmp::Ordering;

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::dp::{NoiseSource, PrivacyBudget};
use crate::error::{invalid_arg, invalid_data, Error, Result};
use crate::marginals::{dp_marginal, inverse_cdf, quantize, StepCdf, DEFAULT_UNIQUE_CAP};

/// Eigenvalue floor used by [`nearest_pd`].
pub const MIN_EIGENVALUE: f64 = 1e-8;

const SYMMETRY_TOLERANCE: f64 = 1e-12;

/// Count inversions of `v` while merge-sorting it; equal elements are not inversions.
fn merge_count(v: &mut [f64], buf: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps =
        merge_count(&mut v[..mid], &mut buf[..mid]) + merge_count(&mut v[mid..], &mut buf[mid..]);
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if v[j].total_cmp(&v[i]) == Ordering::Less {
            buf[k] = v[j];
            swaps += (mid - i) as u64;
            j += 1;
        } else {
            buf[k] = v[i];
            i += 1;
        }
        k += 1;
    }
    buf[k..k + mid - i].copy_from_slice(&v[i..mid]);
    k += mid - i;
    buf[k..k + n - j].copy_from_slice(&v[j..n]);
    v.copy_from_slice(&buf[..n]);
    swaps
}

fn tied_pairs<T, F: Fn(&T, &T) -> bool>(sorted: &[T], same: F) -> u64 {
    let mut total = 0u64;
    let mut run = 1u64;
    for w in sorted.windows(2) {
        if same(&w[0], &w[1]) {
            run += 1;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
        }
    }
    total + run * (run - 1) / 2
}

/// Sum over all pairs `i < j` of `sign(x_i - x_j) * sign(y_i - y_j)`,
/// in O(n log n) by counting inversions.
pub fn kendall_pair_sum(x: &[f64], y: &[f64]) -> Result<i64> {
    if x.len() != y.len() {
        return Err(invalid_arg(format!(
            "length mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    let n = x.len();
    let mut pairs: Vec<(f64, f64)> = x.iter().copied().zip(y.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let n0 = (n as u64) * (n as u64).saturating_sub(1) / 2;
    let ties_x = tied_pairs(&pairs, |a, b| a.0 == b.0);
    let ties_xy = tied_pairs(&pairs, |a, b| a.0 == b.0 && a.1 == b.1);
    let mut ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let mut buf = vec![0.0; n];
    let swaps = merge_count(&mut ys, &mut buf);
    let ties_y = tied_pairs(&ys, |a, b| a == b);
    Ok(n0 as i64 - ties_x as i64 - ties_y as i64 + ties_xy as i64 - 2 * swaps as i64)
}

/// Kendall's tau estimator: the pair-sign sum divided by `n choose 2`.
pub fn kendall_tau(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() < 2 {
        return Err(invalid_arg("Kendall's tau needs at least two observations"));
    }
    let s = kendall_pair_sum(x, y)?;
    let n = x.len() as f64;
    Ok(s as f64 / (n * (n - 1.0) / 2.0))
}

/// Pairwise Kendall coefficients; symmetric with unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct TauMatrix(DMatrix<f64>);

impl TauMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }
}

/// Exact Kendall matrix of numeric columns.
pub fn kendall_matrix(columns: &[Vec<f64>]) -> Result<TauMatrix> {
    let p = columns.len();
    let mut m = DMatrix::identity(p, p);
    for i in 0..p {
        for j in i + 1..p {
            let t = kendall_tau(&columns[i], &columns[j])?;
            m[(i, j)] = t;
            m[(j, i)] = t;
        }
    }
    Ok(TauMatrix(m))
}

/// Multiplier on the per-coefficient sensitivity in the private Kendall matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TauNoiseFactor {
    /// The number of columns `p`.
    #[default]
    Columns,
    /// The number of column pairs `p (p - 1) / 2`.
    Pairs,
}

impl TauNoiseFactor {
    pub fn multiplier(self, p: usize) -> f64 {
        match self {
            TauNoiseFactor::Columns => p as f64,
            TauNoiseFactor::Pairs => (p * (p - 1) / 2) as f64,
        }
    }
}

/// Sensitivity of one Kendall coefficient over `n` rows: `4 / (n + 1)`.
pub fn kendall_sensitivity(n: usize) -> f64 {
    4.0 / (n as f64 + 1.0)
}

/// Laplace scale applied to each coefficient of the private Kendall matrix.
pub fn dp_kendall_scale(n: usize, p: usize, epsilon: f64, factor: TauNoiseFactor) -> f64 {
    factor.multiplier(p) * kendall_sensitivity(n) / epsilon
}

/// Kendall matrix with Laplace noise on each upper-triangle entry, clamped to [-1, 1].
pub fn dp_kendall_matrix(
    columns: &[Vec<f64>],
    epsilon: f64,
    factor: TauNoiseFactor,
    noise: &mut dyn NoiseSource,
) -> Result<TauMatrix> {
    let p = columns.len();
    if p < 2 {
        return Err(invalid_arg(
            "private Kendall matrix needs at least two columns",
        ));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(invalid_arg(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let n = columns[0].len();
    let scale = dp_kendall_scale(n, p, epsilon, factor);
    let exact = kendall_matrix(columns)?;
    let mut m = exact.0;
    for i in 0..p {
        for j in i + 1..p {
            let t = (m[(i, j)] + noise.laplace(scale)?).clamp(-1.0, 1.0);
            m[(i, j)] = t;
            m[(j, i)] = t;
        }
    }
    Ok(TauMatrix(m))
}

/// Symmetric positive definite matrix with unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix(DMatrix<f64>);

impl CorrelationMatrix {
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn identity(p: usize) -> Self {
        Self(DMatrix::identity(p, p))
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim())
            .map(|i| self.0.row(i).iter().copied().collect())
            .collect()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_eigenvalue(&self.0)
    }
}

fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m.clone())
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

fn is_symmetric(m: &DMatrix<f64>) -> bool {
    m.is_square()
        && (0..m.nrows())
            .all(|i| (0..i).all(|j| (m[(i, j)] - m[(j, i)]).abs() <= SYMMETRY_TOLERANCE))
}

/// Repair a symmetric matrix into a correlation matrix.
///
/// Eigenvalues are clipped from below, the matrix is reassembled and scaled
/// back to a unit diagonal. Scaling can push the smallest eigenvalue under
/// the floor again, so the floor is raised by the largest diagonal entry and
/// the repair repeats until the result clears [`MIN_EIGENVALUE`].
pub fn nearest_pd(m: &DMatrix<f64>) -> Result<CorrelationMatrix> {
    if !is_symmetric(m) {
        return Err(invalid_data("nearest_pd needs a symmetric matrix"));
    }
    let p = m.nrows();
    let unit_diag = (0..p).all(|i| (m[(i, i)] - 1.0).abs() <= SYMMETRY_TOLERANCE);
    if unit_diag && min_eigenvalue(m) >= MIN_EIGENVALUE {
        return Ok(CorrelationMatrix(m.clone()));
    }
    let mut floor = MIN_EIGENVALUE;
    for _ in 0..64 {
        let eig = SymmetricEigen::new(m.clone());
        let clipped = eig.eigenvalues.map(|l| l.max(floor));
        let rebuilt =
            &eig.eigenvectors * DMatrix::from_diagonal(&clipped) * eig.eigenvectors.transpose();
        let diag: Vec<f64> = (0..p).map(|i| rebuilt[(i, i)]).collect();
        let mut out = DMatrix::from_fn(p, p, |i, j| rebuilt[(i, j)] / (diag[i] * diag[j]).sqrt());
        for i in 0..p {
            out[(i, i)] = 1.0;
            for j in 0..i {
                let v = 0.5 * (out[(i, j)] + out[(j, i)]);
                out[(i, j)] = v;
                out[(j, i)] = v;
            }
        }
        if min_eigenvalue(&out) >= MIN_EIGENVALUE {
            return Ok(CorrelationMatrix(out));
        }
        let max_diag = diag.iter().copied().fold(1.0, f64::max);
        floor = floor.max(MIN_EIGENVALUE * max_diag) * 1.01;
    }
    Err(Error::NotPositiveDefinite)
}

/// `rho = sin(pi * tau / 2)` elementwise, then repaired to a correlation matrix.
pub fn tau_to_rho(tau: &TauMatrix) -> Result<CorrelationMatrix> {
    let m = tau
        .0
        .map(|t| (std::f64::consts::FRAC_PI_2 * t.clamp(-1.0, 1.0)).sin());
    nearest_pd(&m)
}

fn cholesky(rho: &CorrelationMatrix) -> Result<DMatrix<f64>> {
    if let Some(c) = Cholesky::new(rho.0.clone()) {
        return Ok(c.l());
    }
    let p = rho.dim();
    let jittered = &rho.0 + DMatrix::identity(p, p) * 1e-10;
    Cholesky::new(jittered)
        .map(|c| c.l())
        .ok_or(Error::NotPositiveDefinite)
}

/// Draw `n` points of the Gaussian copula with correlation `rho`.
///
/// Returns one vector of `n` values in (0, 1) per dimension.
pub fn sample_gaussian_copula<R: Rng + ?Sized>(
    rho: &CorrelationMatrix,
    n: usize,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    let l = cholesky(rho)?;
    let p = rho.dim();
    let phi = Normal::standard();
    let hi = 1.0 - f64::EPSILON / 2.0;
    let mut out = vec![Vec::with_capacity(n); p];
    let mut z = vec![0.0; p];
    for _ in 0..n {
        for zi in z.iter_mut() {
            *zi = rng.sample(StandardNormal);
        }
        for i in 0..p {
            let x: f64 = (0..=i).map(|k| l[(i, k)] * z[k]).sum();
            out[i].push(phi.cdf(x).clamp(f64::MIN_POSITIVE, hi));
        }
    }
    Ok(out)
}

/// Fitted private Gaussian copula: private marginals plus a repaired correlation matrix.
#[derive(Debug, Clone)]
pub struct DpCopulaModel {
    marginals: Vec<StepCdf>,
    rho: CorrelationMatrix,
    ledger: PrivacyBudget,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DpCopulaOptions {
    /// Share of the budget spent on marginals; the rest goes to the correlation matrix.
    pub marginal_fraction: f64,
    pub noise_factor: TauNoiseFactor,
    pub unique_cap: usize,
}

impl Default for DpCopulaOptions {
    fn default() -> Self {
        Self {
            marginal_fraction: 0.5,
            noise_factor: TauNoiseFactor::Columns,
            unique_cap: DEFAULT_UNIQUE_CAP,
        }
    }
}

impl DpCopulaModel {
    pub fn marginals(&self) -> &[StepCdf] {
        &self.marginals
    }

    pub fn correlation(&self) -> &CorrelationMatrix {
        &self.rho
    }

    pub fn ledger(&self) -> &PrivacyBudget {
        &self.ledger
    }

    /// Copula draws mapped through the inverse private marginals.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<Vec<f64>>> {
        let uniforms = sample_gaussian_copula(&self.rho, n, rng)?;
        uniforms
            .iter()
            .zip(&self.marginals)
            .map(|(col, f)| col.iter().map(|&u| inverse_cdf(f, u)).collect())
            .collect()
    }
}

/// Fit the private Gaussian copula on numeric columns.
///
/// Each marginal gets `epsilon * marginal_fraction / p`; the Kendall matrix
/// gets the remainder. With a single column there is no dependence to
/// estimate and the whole budget goes to the marginal.
pub fn dp_copula_fit(
    columns: &[Vec<f64>],
    epsilon: f64,
    options: &DpCopulaOptions,
    noise: &mut dyn NoiseSource,
) -> Result<DpCopulaModel> {
    let p = columns.len();
    if p == 0 {
        return Err(invalid_data("no columns to fit"));
    }
    let f = options.marginal_fraction;
    if !(f > 0.0 && f < 1.0) {
        return Err(invalid_arg(format!(
            "marginal budget fraction {f} outside (0, 1)"
        )));
    }
    let mut ledger = PrivacyBudget::new(epsilon)?;
    let eps_marginal = if p == 1 {
        epsilon
    } else {
        epsilon * f / p as f64
    };
    let marginals = columns
        .iter()
        .enumerate()
        .map(|(i, col)| {
            ledger.spend(format!("dpcopula/marginal/{i}"), eps_marginal)?;
            dp_marginal(&quantize(col, options.unique_cap), eps_marginal, noise)
        })
        .collect::<Result<Vec<_>>>()?;
    let rho = if p == 1 {
        CorrelationMatrix::identity(1)
    } else {
        let eps_corr = epsilon * (1.0 - f);
        ledger.spend("dpcopula/kendall", eps_corr)?;
        tau_to_rho(&dp_kendall_matrix(
            columns,
            eps_corr,
            options.noise_factor,
            noise,
        )?)?
    };
    Ok(DpCopulaModel {
        marginals,
        rho,
        ledger,
    })
}

/// Fit and sample `n` rows in one step.
pub fn dp_copula_generate<R: Rng + ?Sized>(
    columns: &[Vec<f64>],
    epsilon: f64,
    options: &DpCopulaOptions,
    n: usize,
    noise: &mut dyn NoiseSource,
    rng: &mut R,
) -> Result<(Vec<Vec<f64>>, PrivacyBudget)> {
    let model = dp_copula_fit(columns, epsilon, options, noise)?;
    let rows = model.sample(n, rng)?;
    Ok((rows, model.ledger))
}
