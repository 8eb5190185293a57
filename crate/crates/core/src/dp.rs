//! Differential-privacy primitives: Laplace noise, the exponential mechanism,
//! the orthonormal real DFT, Fourier-perturbed histograms (EFPA), naive
//! noisy histograms and sequential-composition budget accounting.

use std::sync::Arc;

use rand::Rng;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{invalid_arg, invalid_data, Error, Result};
use crate::rng::open_unit;

/// Laplace(0, scale) by inverse CDF of a uniform `u` in (0, 1).
pub fn laplace_from_uniform(u: f64, scale: f64) -> f64 {
    let c = u - 0.5;
    -scale * c.signum() * (1.0 - 2.0 * c.abs()).ln()
}

pub fn laplace<R: Rng + ?Sized>(scale: f64, rng: &mut R) -> Result<f64> {
    check_positive("laplace scale", scale)?;
    Ok(laplace_from_uniform(open_unit(rng), scale))
}

fn check_positive(what: &str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(invalid_arg(format!(
            "{what} must be positive and finite, got {value}"
        )))
    }
}

fn check_costs(costs: &[f64]) -> Result<()> {
    if costs.is_empty() {
        return Err(invalid_arg(
            "exponential mechanism needs at least one candidate",
        ));
    }
    if costs.iter().any(|c| !c.is_finite()) {
        return Err(invalid_arg("exponential mechanism costs must be finite"));
    }
    Ok(())
}

/// Selection weights `exp(-epsilon * cost / 4)`, normalized to sum to one.
pub fn exponential_weights(costs: &[f64], epsilon: f64) -> Result<Vec<f64>> {
    check_costs(costs)?;
    check_positive("epsilon", epsilon)?;
    let min = costs.iter().copied().fold(f64::INFINITY, f64::min);
    let w: Vec<f64> = costs
        .iter()
        .map(|c| (-epsilon * (c - min) / 4.0).exp())
        .collect();
    let total: f64 = w.iter().sum();
    Ok(w.into_iter().map(|x| x / total).collect())
}

/// Pick an index with probability proportional to `exp(-epsilon * cost / 4)`.
pub fn exponential_mechanism<R: Rng + ?Sized>(
    costs: &[f64],
    epsilon: f64,
    rng: &mut R,
) -> Result<usize> {
    let weights = exponential_weights(costs, epsilon)?;
    let target = rng.random::<f64>();
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if target < acc {
            return Ok(i);
        }
    }
    // Rounding left the cumulative sum a hair under one.
    Ok(weights.iter().rposition(|&w| w > 0.0).unwrap_or(0))
}

/// Source of the randomness consumed by private mechanisms.
///
/// Swapping the source lets the same fitting code run noise-free, which is
/// how the private generators are checked against their exact counterparts.
pub trait NoiseSource {
    fn laplace(&mut self, scale: f64) -> Result<f64>;
    /// Exponential-mechanism choice over `costs` (lower is better).
    fn select(&mut self, costs: &[f64], epsilon: f64) -> Result<usize>;
}

/// Real noise drawn from a seeded stream.
#[derive(Debug, Clone)]
pub struct SeededNoise<R> {
    rng: R,
}

impl<R: Rng> SeededNoise<R> {
    pub fn new(rng: R) -> Self {
        Self { rng }
    }
}

impl<R: Rng> NoiseSource for SeededNoise<R> {
    fn laplace(&mut self, scale: f64) -> Result<f64> {
        laplace(scale, &mut self.rng)
    }

    fn select(&mut self, costs: &[f64], epsilon: f64) -> Result<usize> {
        exponential_mechanism(costs, epsilon, &mut self.rng)
    }
}

/// Deterministic stub: Laplace draws are zero and selection returns the
/// last candidate, which in EFPA keeps the full spectrum.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroNoise;

impl NoiseSource for ZeroNoise {
    fn laplace(&mut self, scale: f64) -> Result<f64> {
        check_positive("laplace scale", scale)?;
        Ok(0.0)
    }

    fn select(&mut self, costs: &[f64], epsilon: f64) -> Result<usize> {
        check_costs(costs)?;
        check_positive("epsilon", epsilon)?;
        Ok(costs.len() - 1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bins {
    /// `n + 1` bin edges.
    Edges(Vec<f64>),
    /// One value per bin, as for a histogram over distinct values.
    Values(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    bins: Bins,
    counts: Vec<f64>,
}

impl Histogram {
    pub fn new(bins: Bins, counts: Vec<f64>) -> Result<Self> {
        if counts.iter().any(|c| !c.is_finite()) {
            return Err(invalid_data("histogram counts must be finite"));
        }
        match &bins {
            Bins::Edges(edges) => {
                if edges.len() != counts.len() + 1 {
                    return Err(invalid_data("histogram needs one more edge than bins"));
                }
                let degenerate = edges.len() == 2 && edges[0] == edges[1];
                if !degenerate && edges.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(invalid_data("histogram edges must be strictly increasing"));
                }
            }
            Bins::Values(values) => {
                if values.len() != counts.len() {
                    return Err(invalid_data("histogram needs one value per bin"));
                }
                if values.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(invalid_data("histogram values must be strictly increasing"));
                }
            }
        }
        Ok(Self { bins, counts })
    }

    /// Counts indexed `0..n` with no further bin meaning.
    pub fn from_counts(counts: Vec<f64>) -> Result<Self> {
        let values = (0..counts.len()).map(|i| i as f64).collect();
        Self::new(Bins::Values(values), counts)
    }

    pub fn bins(&self) -> &Bins {
        &self.bins
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }

    fn with_counts(&self, counts: Vec<f64>) -> Self {
        Self {
            bins: self.bins.clone(),
            counts,
        }
    }
}

fn fft(n: usize, inverse: bool) -> Arc<dyn rustfft::Fft<f64>> {
    let mut planner = FftPlanner::new();
    if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    }
}

/// Orthonormal real DFT in packed form.
///
/// Entry 0 is the DC term; entries `2j - 1` and `2j` hold `sqrt(2) * Re` and
/// `-sqrt(2) * Im` of complex coefficient `j` (both scaled by `1 / sqrt(n)`);
/// for even `n` the last entry is the Nyquist term. The map is orthogonal, so
/// it preserves the Euclidean norm.
pub fn dft_real(h: &[f64]) -> Result<Vec<f64>> {
    let n = h.len();
    if n == 0 {
        return Err(invalid_arg("cannot transform an empty vector"));
    }
    let mut buf: Vec<Complex64> = h.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    fft(n, false).process(&mut buf);
    let norm = 1.0 / (n as f64).sqrt();
    let mut out = vec![0.0; n];
    out[0] = buf[0].re * norm;
    for j in 1..=(n - 1) / 2 {
        out[2 * j - 1] = std::f64::consts::SQRT_2 * buf[j].re * norm;
        out[2 * j] = -std::f64::consts::SQRT_2 * buf[j].im * norm;
    }
    if n.is_multiple_of(2) {
        out[n - 1] = buf[n / 2].re * norm;
    }
    Ok(out)
}

/// Inverse of [`dft_real`] after zero-padding `f` to length `n`.
pub fn idft_real(f: &[f64], n: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(invalid_arg("output length must be positive"));
    }
    if f.len() > n {
        return Err(invalid_arg(format!(
            "spectrum of length {} exceeds output length {n}",
            f.len()
        )));
    }
    let mut packed = f.to_vec();
    packed.resize(n, 0.0);
    let root = (n as f64).sqrt();
    let half = root / std::f64::consts::SQRT_2;
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    buf[0] = Complex64::new(packed[0] * root, 0.0);
    for j in 1..=(n - 1) / 2 {
        let c = Complex64::new(packed[2 * j - 1] * half, -packed[2 * j] * half);
        buf[j] = c;
        buf[n - j] = c.conj();
    }
    if n.is_multiple_of(2) {
        buf[n / 2] = Complex64::new(packed[n - 1] * root, 0.0);
    }
    fft(n, true).process(&mut buf);
    Ok(buf.iter().map(|c| c.re / n as f64).collect())
}

/// The first `k` complex coefficients of a packed odd-length spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumK {
    k: usize,
    coefficients: Vec<f64>,
    original_length: usize,
}

impl SpectrumK {
    /// Keep coefficients `0..k`, i.e. the first `2k - 1` packed entries.
    pub fn truncate(spectrum: &[f64], k: usize) -> Result<Self> {
        let n = spectrum.len();
        if n.is_multiple_of(2) {
            return Err(invalid_arg("spectrum truncation needs an odd length"));
        }
        if k < 1 || k > n.div_ceil(2) {
            return Err(invalid_arg(format!(
                "k = {k} outside [1, {}]",
                n.div_ceil(2)
            )));
        }
        Ok(Self {
            k,
            coefficients: spectrum[..2 * k - 1].to_vec(),
            original_length: n,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn coefficients_mut(&mut self) -> &mut [f64] {
        &mut self.coefficients
    }

    pub fn original_length(&self) -> usize {
        self.original_length
    }

    /// Zero-pad back to full length and invert.
    pub fn reconstruct(&self) -> Result<Vec<f64>> {
        idft_real(&self.coefficients, self.original_length)
    }
}

/// EFPA selection cost for keeping `k` coefficients: the norm of the
/// discarded coefficients plus the expected noise magnitude `2z / epsilon`,
/// `z = 2k + 1`.
pub fn efpa_costs(spectrum: &[f64], epsilon: f64) -> Result<Vec<f64>> {
    let n = spectrum.len();
    if n.is_multiple_of(2) {
        return Err(invalid_arg("EFPA costs need an odd-length spectrum"));
    }
    check_positive("epsilon", epsilon)?;
    let m = n.div_ceil(2);
    // tail[k] = energy of complex coefficients k..m-1; each pair already carries the factor 2.
    let mut tail = vec![0.0; m + 1];
    for j in (1..m).rev() {
        tail[j] = tail[j + 1] + spectrum[2 * j - 1].powi(2) + spectrum[2 * j].powi(2);
    }
    Ok((1..=m)
        .map(|k| {
            let z = (2 * k + 1) as f64;
            tail[k].sqrt() + 2.0 * z / epsilon
        })
        .collect())
}

/// Clip negative counts to zero and rescale to the noisy total.
///
/// Falls back to the clipped counts when the noisy total is not positive,
/// and to a flat histogram when every count was clipped.
pub fn postprocess_counts(noisy: &[f64]) -> Vec<f64> {
    let total: f64 = noisy.iter().sum();
    let clipped: Vec<f64> = noisy.iter().map(|&c| c.max(0.0)).collect();
    let mass: f64 = clipped.iter().sum();
    if mass > 0.0 && total > 0.0 {
        let scale = total / mass;
        clipped.into_iter().map(|c| c * scale).collect()
    } else if mass > 0.0 {
        clipped
    } else {
        vec![1.0; noisy.len()]
    }
}

/// Enhanced Fourier perturbation of a histogram under budget `epsilon`.
///
/// Even-length inputs get one zero bin appended for the transform; it is
/// dropped again before post-processing.
pub fn efpa(h: &Histogram, epsilon: f64, noise: &mut dyn NoiseSource) -> Result<Histogram> {
    check_positive("epsilon", epsilon)?;
    let n0 = h.len();
    if n0 == 0 {
        return Err(invalid_arg("EFPA needs at least one bin"));
    }
    let mut counts = h.counts().to_vec();
    if n0.is_multiple_of(2) {
        counts.push(0.0);
    }
    let spectrum = dft_real(&counts)?;
    let costs = efpa_costs(&spectrum, epsilon)?;
    let k = noise.select(&costs, epsilon)? + 1;
    let z = (2 * k + 1) as f64;
    let scale = 2.0 * z.sqrt() / epsilon;
    let mut kept = SpectrumK::truncate(&spectrum, k)?;
    for c in kept.coefficients_mut() {
        *c += noise.laplace(scale)?;
    }
    let mut noisy = kept.reconstruct()?;
    noisy.truncate(n0);
    Ok(h.with_counts(postprocess_counts(&noisy)))
}

/// Independent Laplace(sensitivity / epsilon) noise on every count, then post-processing.
pub fn naive_dp_histogram(
    h: &Histogram,
    epsilon: f64,
    sensitivity: f64,
    noise: &mut dyn NoiseSource,
) -> Result<Histogram> {
    check_positive("epsilon", epsilon)?;
    check_positive("sensitivity", sensitivity)?;
    let scale = sensitivity / epsilon;
    let noisy = h
        .counts()
        .iter()
        .map(|&c| Ok(c + noise.laplace(scale)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(h.with_counts(postprocess_counts(&noisy)))
}

/// Count sensitivity used by the naive noisy histogram baseline.
pub const NAIVE_HISTOGRAM_SENSITIVITY: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub label: String,
    pub epsilon: f64,
}

/// Total budget plus the list of charges made against it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrivacyBudget {
    epsilon: f64,
    entries: Vec<LedgerEntry>,
}

/// Slack allowed when checking charges against the total.
pub const BUDGET_SLACK: f64 = 1e-12;

impl PrivacyBudget {
    pub fn new(epsilon: f64) -> Result<Self> {
        check_positive("epsilon", epsilon)?;
        Ok(Self {
            epsilon,
            entries: Vec::new(),
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    /// Sum of all charges (compensated summation).
    pub fn spent(&self) -> f64 {
        let mut sum = 0.0f64;
        let mut carry = 0.0f64;
        for e in &self.entries {
            let t = sum + e.epsilon;
            if sum.abs() >= e.epsilon.abs() {
                carry += (sum - t) + e.epsilon;
            } else {
                carry += (e.epsilon - t) + sum;
            }
            sum = t;
        }
        sum + carry
    }

    pub fn remaining(&self) -> f64 {
        self.epsilon - self.spent()
    }

    pub fn spend(&mut self, label: impl Into<String>, epsilon: f64) -> Result<()> {
        check_positive("charge", epsilon)?;
        let remaining = self.remaining();
        if epsilon > remaining + BUDGET_SLACK {
            return Err(Error::BudgetExceeded {
                requested: epsilon,
                remaining,
            });
        }
        self.entries.push(LedgerEntry {
            label: label.into(),
            epsilon,
        });
        Ok(())
    }
}

/// Per-call budget for the non-parametric copula fit: `epsilon / (2p)`,
/// one share for each column's marginal and one for its frequency table.
pub fn budget_split_dpnpc(epsilon: f64, columns: usize) -> Result<f64> {
    check_positive("epsilon", epsilon)?;
    if columns == 0 {
        return Err(invalid_arg("need at least one column"));
    }
    Ok(epsilon / (2 * columns) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use proptest::prelude::*;
    use rand::Rng;

    /// O(n^2) packed real DFT straight from the basis definition.
    fn naive_dft_real(h: &[f64]) -> Vec<f64> {
        let n = h.len();
        let nf = n as f64;
        let mut out = vec![0.0; n];
        out[0] = h.iter().sum::<f64>() / nf.sqrt();
        for j in 1..=(n - 1) / 2 {
            let (mut c, mut s) = (0.0, 0.0);
            for (t, &x) in h.iter().enumerate() {
                let theta = 2.0 * std::f64::consts::PI * (j * t) as f64 / nf;
                c += x * theta.cos();
                s += x * theta.sin();
            }
            out[2 * j - 1] = (2.0 / nf).sqrt() * c;
            out[2 * j] = (2.0 / nf).sqrt() * s;
        }
        if n.is_multiple_of(2) {
            out[n - 1] = h
                .iter()
                .enumerate()
                .map(|(t, &x)| if t % 2 == 0 { x } else { -x })
                .sum::<f64>()
                / nf.sqrt();
        }
        out
    }

    #[test]
    fn laplace_inverse_cdf_values() {
        assert_eq!(laplace_from_uniform(0.5, 3.0), 0.0);
        assert!((laplace_from_uniform(0.75, 1.0) - std::f64::consts::LN_2).abs() < 1e-15);
        assert!((laplace_from_uniform(0.25, 1.0) + std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn laplace_rejects_bad_scale() {
        let mut rng = stream(0, "l");
        assert!(laplace(0.0, &mut rng).is_err());
        assert!(laplace(-1.0, &mut rng).is_err());
    }

    #[test]
    fn laplace_variance_monte_carlo() {
        let mut rng = stream(3, "lap");
        let n = 100_000;
        let draws: Vec<f64> = (0..n).map(|_| laplace(2.0, &mut rng).unwrap()).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((var - 8.0).abs() < 0.4, "variance {var}");
    }

    #[test]
    fn exponential_mechanism_single_and_lopsided() {
        let mut rng = stream(1, "em");
        assert_eq!(exponential_mechanism(&[5.0], 1.0, &mut rng).unwrap(), 0);
        let w = exponential_weights(&[0.0, 100.0], 1.0).unwrap();
        let expected = 1.0 / (1.0 + (-25.0f64).exp());
        assert!((w[0] - expected).abs() < 1e-15);
        let tail = (-25.0f64).exp() / (1.0 + (-25.0f64).exp());
        assert!((w[1] - tail).abs() < 1e-12 * tail);
        assert!((tail - 1.3887943864771144e-11).abs() < 1e-24);
    }

    #[test]
    fn exponential_mechanism_errors() {
        let mut rng = stream(1, "em");
        assert!(exponential_mechanism(&[], 1.0, &mut rng).is_err());
        assert!(exponential_mechanism(&[0.0, f64::NAN], 1.0, &mut rng).is_err());
        assert!(exponential_mechanism(&[0.0], 0.0, &mut rng).is_err());
    }

    #[test]
    fn exponential_mechanism_uniform_when_costs_equal() {
        let mut rng = stream(9, "em");
        let n = 10_000;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            counts[exponential_mechanism(&[1.0; 4], 2.0, &mut rng).unwrap()] += 1;
        }
        let chi2: f64 = counts
            .iter()
            .map(|&c| (c as f64 - 2500.0).powi(2) / 2500.0)
            .sum();
        // 99.9th percentile of chi-square with 3 degrees of freedom.
        assert!(chi2 < 16.27, "chi2 = {chi2}, counts {counts:?}");
    }

    #[test]
    fn exponential_mechanism_matches_softmax() {
        let costs = [0.0, 1.0, 2.0, 4.0, 8.0];
        let eps = 1.5;
        let weights = exponential_weights(&costs, eps).unwrap();
        let mut rng = stream(4, "em");
        let n = 10_000;
        let mut counts = [0usize; 5];
        for _ in 0..n {
            counts[exponential_mechanism(&costs, eps, &mut rng).unwrap()] += 1;
        }
        for (c, p) in counts.iter().zip(&weights) {
            let sd = (n as f64 * p * (1.0 - p)).sqrt();
            assert!(
                (*c as f64 - n as f64 * p).abs() <= 3.0 * sd + 1e-9,
                "{counts:?} vs {weights:?}"
            );
        }
    }

    #[test]
    fn dft_constant_signal() {
        let c = 2.5;
        let f = dft_real(&[c, c, c]).unwrap();
        assert!((f[0] - c * 3f64.sqrt()).abs() < 1e-12);
        assert!(f[1].abs() < 1e-12 && f[2].abs() < 1e-12);
    }

    #[test]
    fn dft_parseval_ramp() {
        let h = [1.0, 2.0, 3.0, 4.0, 5.0];
        let f = dft_real(&h).unwrap();
        let norm = f.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((norm - 55f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn dft_matches_naive_definition() {
        let mut rng = stream(2, "dft");
        for n in [1usize, 2, 3, 4, 7, 10, 31] {
            let h: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 10.0).collect();
            let fast = dft_real(&h).unwrap();
            let slow = naive_dft_real(&h);
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).abs() < 1e-9, "n={n}: {fast:?} vs {slow:?}");
            }
        }
    }

    #[test]
    fn idft_examples() {
        let h = idft_real(&dft_real(&[1.0, 2.0, 3.0]).unwrap(), 3).unwrap();
        for (a, b) in h.iter().zip([1.0, 2.0, 3.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        let c = 1.75;
        let n = 6;
        let flat = idft_real(&[c * (n as f64).sqrt()], n).unwrap();
        assert!(flat.iter().all(|x| (x - c).abs() < 1e-12));
        // Keeping only k = 1 projects a ramp onto its mean.
        let ramp = [1.0, 2.0, 3.0, 4.0, 5.0];
        let dc = SpectrumK::truncate(&dft_real(&ramp).unwrap(), 1)
            .unwrap()
            .reconstruct()
            .unwrap();
        assert!(dc.iter().all(|x| (x - 3.0).abs() < 1e-12));
    }

    #[test]
    fn transform_errors() {
        assert!(dft_real(&[]).is_err());
        assert!(idft_real(&[1.0, 2.0, 3.0], 2).is_err());
        assert!(SpectrumK::truncate(&[1.0, 2.0, 3.0], 3).is_err());
        assert!(SpectrumK::truncate(&[1.0, 2.0, 3.0], 0).is_err());
    }

    #[test]
    fn efpa_cost_at_full_spectrum() {
        let h = [3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0];
        let eps = 0.7;
        let costs = efpa_costs(&dft_real(&h).unwrap(), eps).unwrap();
        let m = 4;
        assert_eq!(costs.len(), m);
        assert_eq!(costs[m - 1], 2.0 * (2 * m + 1) as f64 / eps);
    }

    #[test]
    fn efpa_zero_noise_reconstructs() {
        let h = Histogram::from_counts(vec![4.0, 0.0, 7.0, 2.0, 9.0]).unwrap();
        let out = efpa(&h, 1.0, &mut ZeroNoise).unwrap();
        for (a, b) in out.counts().iter().zip(h.counts()) {
            assert!((a - b).abs() < 1e-9);
        }
        let even = Histogram::from_counts(vec![1.0, 5.0, 2.0, 8.0]).unwrap();
        let out = efpa(&even, 1.0, &mut ZeroNoise).unwrap();
        assert_eq!(out.len(), 4);
        for (a, b) in out.counts().iter().zip(even.counts()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn efpa_output_nonnegative() {
        let h = Histogram::from_counts(vec![10.0, 10.0, 10.0]).unwrap();
        for seed in 0..50 {
            let mut noise = SeededNoise::new(stream(seed, "efpa"));
            let out = efpa(&h, 0.5, &mut noise).unwrap();
            assert_eq!(out.len(), 3);
            assert!(out.counts().iter().all(|&c| c >= 0.0));
        }
        assert!(efpa(&h, 0.0, &mut ZeroNoise).is_err());
    }

    #[test]
    fn naive_histogram_scale_and_identity() {
        let h = Histogram::from_counts(vec![3.0, 0.0, 5.0]).unwrap();
        assert_eq!(
            naive_dp_histogram(&h, 1.0, 2.0, &mut ZeroNoise)
                .unwrap()
                .counts(),
            h.counts()
        );

        struct Recorder(Vec<f64>);
        impl NoiseSource for Recorder {
            fn laplace(&mut self, scale: f64) -> Result<f64> {
                self.0.push(scale);
                Ok(0.0)
            }
            fn select(&mut self, _: &[f64], _: f64) -> Result<usize> {
                Ok(0)
            }
        }
        let mut rec = Recorder(Vec::new());
        naive_dp_histogram(&h, 0.5, NAIVE_HISTOGRAM_SENSITIVITY, &mut rec).unwrap();
        assert_eq!(rec.0, vec![4.0; 3]);
        assert!(naive_dp_histogram(&h, -1.0, 2.0, &mut ZeroNoise).is_err());
    }

    #[test]
    fn naive_histogram_noise_std() {
        // A single large bin keeps clipping out of play, so the output is count + noise.
        let h = Histogram::from_counts(vec![1e6]).unwrap();
        let runs = 10_000;
        let mut noise = SeededNoise::new(stream(8, "naive"));
        let sq: f64 = (0..runs)
            .map(|_| {
                let out =
                    naive_dp_histogram(&h, 1.0, NAIVE_HISTOGRAM_SENSITIVITY, &mut noise).unwrap();
                (out.counts()[0] - 1e6).powi(2)
            })
            .sum();
        let sd = (sq / runs as f64).sqrt();
        let expected = std::f64::consts::SQRT_2 * 2.0;
        assert!((sd - expected).abs() < 0.05 * expected, "sd {sd}");
    }

    #[test]
    fn postprocess_rules() {
        let out = postprocess_counts(&[4.0, -1.0, 2.0]);
        assert_eq!(out, vec![4.0 * 5.0 / 6.0, 0.0, 2.0 * 5.0 / 6.0]);
        assert_eq!(postprocess_counts(&[1.0, -3.0]), vec![1.0, 0.0]);
        assert_eq!(postprocess_counts(&[-1.0, -3.0]), vec![1.0, 1.0]);
    }

    #[test]
    fn budget_split_examples() {
        assert_eq!(budget_split_dpnpc(1.0, 5).unwrap(), 0.1);
        assert_eq!(budget_split_dpnpc(2.0, 1).unwrap(), 1.0);
        let mut b = PrivacyBudget::new(1.0).unwrap();
        for i in 0..10 {
            b.spend(format!("call {i}"), 0.1).unwrap();
        }
        assert_eq!(b.spent(), 1.0);
        assert!(b.spend("over", 0.01).is_err());
        assert!(budget_split_dpnpc(0.0, 3).is_err());
        assert!(budget_split_dpnpc(1.0, 0).is_err());
    }

    #[test]
    fn histogram_validation() {
        assert!(Histogram::new(Bins::Edges(vec![0.0, 1.0]), vec![1.0, 2.0]).is_err());
        assert!(Histogram::new(Bins::Edges(vec![1.0, 0.0]), vec![1.0]).is_err());
        assert!(Histogram::new(Bins::Edges(vec![2.0, 2.0]), vec![1.0]).is_ok());
        assert!(Histogram::new(Bins::Values(vec![1.0, 1.0]), vec![1.0, 1.0]).is_err());
        assert!(Histogram::new(Bins::Values(vec![1.0]), vec![f64::NAN]).is_err());
    }

    proptest! {
        #[test]
        fn dft_roundtrip_and_parseval(h in proptest::collection::vec(-1e3f64..1e3, 1..400)) {
            let f = dft_real(&h).unwrap();
            let back = idft_real(&f, h.len()).unwrap();
            for (a, b) in back.iter().zip(&h) {
                prop_assert!((a - b).abs() < 1e-9);
            }
            let nf: f64 = f.iter().map(|x| x * x).sum::<f64>().sqrt();
            let nh: f64 = h.iter().map(|x| x * x).sum::<f64>().sqrt();
            prop_assert!((nf - nh).abs() < 1e-9 * nh.max(1.0));
        }

        #[test]
        fn efpa_preserves_length(counts in proptest::collection::vec(0f64..50.0, 1..60), seed in any::<u64>()) {
            let h = Histogram::from_counts(counts.clone()).unwrap();
            let out = efpa(&h, 1.0, &mut SeededNoise::new(stream(seed, "p"))).unwrap();
            prop_assert_eq!(out.len(), counts.len());
            prop_assert!(out.counts().iter().all(|&c| c >= 0.0 && c.is_finite()));
        }
    }
}
