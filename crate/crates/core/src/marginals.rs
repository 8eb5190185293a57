//! Empirical and private marginals: step CDFs over distinct values,
//! equal-width frequency tables, and the generalized inverse CDF.

use serde::{Deserialize, Serialize};

use crate::dp::{efpa, Bins, Histogram, NoiseSource};
use crate::error::{invalid_arg, invalid_data, Result};

/// Cumulative masses are compared with this slack when searching for a bin,
/// so values that agree up to rounding land in the same class interval.
pub const CDF_TIE_TOLERANCE: f64 = 1e-12;

/// Distinct-value cap above which a column is pre-quantized.
pub const DEFAULT_UNIQUE_CAP: usize = 10_000;

/// Turn non-negative masses into a cumulative sequence ending at exactly 1.
fn cumulative_from_masses(masses: &[f64]) -> Result<Vec<f64>> {
    if masses.iter().any(|m| !m.is_finite() || *m < 0.0) {
        return Err(invalid_data("masses must be finite and non-negative"));
    }
    let total: f64 = masses.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return Err(invalid_data("masses sum to zero"));
    }
    let mut acc = 0.0;
    let mut out: Vec<f64> = masses
        .iter()
        .map(|m| {
            acc += m;
            (acc / total).min(1.0)
        })
        .collect();
    *out.last_mut().unwrap() = 1.0;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepCdf {
    support: Vec<f64>,
    cdf: Vec<f64>,
}

impl StepCdf {
    pub fn new(support: Vec<f64>, cdf: Vec<f64>) -> Result<Self> {
        if support.is_empty() || support.len() != cdf.len() {
            return Err(invalid_data(
                "step CDF needs matching, non-empty support and values",
            ));
        }
        if support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid_data("step CDF support must be strictly increasing"));
        }
        if cdf.windows(2).any(|w| w[0] > w[1]) || cdf.iter().any(|&c| !(0.0..=1.0).contains(&c)) {
            return Err(invalid_data(
                "step CDF values must be non-decreasing in [0, 1]",
            ));
        }
        if (cdf.last().unwrap() - 1.0).abs() > 1e-12 {
            return Err(invalid_data("step CDF must end at 1"));
        }
        Ok(Self { support, cdf })
    }

    /// CDF with the given point masses on `support`.
    pub fn from_masses(support: Vec<f64>, masses: &[f64]) -> Result<Self> {
        let cdf = cumulative_from_masses(masses)?;
        Self::new(support, cdf)
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn cdf(&self) -> &[f64] {
        &self.cdf
    }

    /// `F(x)`: cumulative mass of support points `<= x`.
    pub fn eval(&self, x: f64) -> f64 {
        match self.support.partition_point(|&s| s <= x) {
            0 => 0.0,
            i => self.cdf[i - 1],
        }
    }
}

/// Generalized inverse: the smallest support value `v` with `F(v) >= u`.
pub fn inverse_cdf(f: &StepCdf, u: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&u) {
        return Err(invalid_arg(format!("probability {u} outside [0, 1]")));
    }
    let idx = f.cdf.partition_point(|&c| c < u).min(f.support.len() - 1);
    Ok(f.support[idx])
}

fn check_column(col: &[f64]) -> Result<()> {
    if col.is_empty() {
        return Err(invalid_data("empty column"));
    }
    if col.iter().any(|v| !v.is_finite()) {
        return Err(invalid_data("column holds non-finite values"));
    }
    Ok(())
}

fn min_max(col: &[f64]) -> (f64, f64) {
    col.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        })
}

/// Replace each value by the upper edge of its cell in `cap` equal-width
/// cells when the column has more than `cap` distinct values; otherwise the
/// column is returned unchanged.
pub fn quantize(col: &[f64], cap: usize) -> Vec<f64> {
    let mut sorted = col.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    if cap == 0 || sorted.len() <= cap {
        return col.to_vec();
    }
    let (lo, hi) = (sorted[0], sorted[sorted.len() - 1]);
    let width = (hi - lo) / cap as f64;
    col.iter()
        .map(|&x| {
            let cell = (((x - lo) / width).ceil() as usize).clamp(1, cap);
            if cell == cap {
                hi
            } else {
                lo + cell as f64 * width
            }
        })
        .collect()
}

/// One bin per distinct value, ordered by value, counting multiplicities.
pub fn histogram_unique(col: &[f64]) -> Result<Histogram> {
    check_column(col)?;
    let mut sorted = col.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut values = Vec::new();
    let mut counts: Vec<f64> = Vec::new();
    for v in sorted {
        if values.last() == Some(&v) {
            *counts.last_mut().unwrap() += 1.0;
        } else {
            values.push(v);
            counts.push(1.0);
        }
    }
    Histogram::new(Bins::Values(values), counts)
}

fn cdf_from_value_histogram(h: &Histogram) -> Result<StepCdf> {
    match h.bins() {
        Bins::Values(values) => StepCdf::from_masses(values.clone(), h.counts()),
        Bins::Edges(_) => Err(invalid_data("expected a histogram over distinct values")),
    }
}

/// `F(x) = #{values <= x} / n` over the sorted distinct values.
pub fn empirical_cdf(col: &[f64]) -> Result<StepCdf> {
    cdf_from_value_histogram(&histogram_unique(col)?)
}

/// Private marginal: distinct-value histogram perturbed by EFPA under `epsilon`.
pub fn dp_marginal(col: &[f64], epsilon: f64, noise: &mut dyn NoiseSource) -> Result<StepCdf> {
    let h = histogram_unique(col)?;
    cdf_from_value_histogram(&efpa(&h, epsilon, noise)?)
}

/// Equal-width partition `a_0 < ... < a_t` of a column range with the
/// cumulative mass of each class interval.
///
/// The first interval is closed, the others are left-open and right-closed.
/// A constant column gets a single degenerate interval `[c, c]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyTable {
    edges: Vec<f64>,
    cumulative: Vec<f64>,
}

impl FrequencyTable {
    pub fn from_histogram(h: &Histogram) -> Result<Self> {
        match h.bins() {
            Bins::Edges(edges) => Ok(Self {
                edges: edges.clone(),
                cumulative: cumulative_from_masses(h.counts())?,
            }),
            Bins::Values(_) => Err(invalid_data("expected a histogram with bin edges")),
        }
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    pub fn n_bins(&self) -> usize {
        self.cumulative.len()
    }

    /// Index `s` (0-based) of the first interval with `R(B_s) >= u`.
    pub fn class_of(&self, u: f64) -> usize {
        self.cumulative
            .partition_point(|&r| r < u - CDF_TIE_TOLERANCE)
            .min(self.cumulative.len() - 1)
    }

    /// Interval `(a_{s-1}, a_s)` bounds of class `s`.
    pub fn interval(&self, s: usize) -> (f64, f64) {
        (self.edges[s], self.edges[s + 1])
    }

    /// Interval holding an observed value `x`.
    pub fn bin_of_value(&self, x: f64) -> usize {
        self.edges[1..]
            .partition_point(|&e| e < x)
            .min(self.n_bins() - 1)
    }
}

/// Equal-width histogram counts with `t` bins over the column range.
pub fn binned_counts(col: &[f64], t: usize) -> Result<Histogram> {
    check_column(col)?;
    if t == 0 {
        return Err(invalid_arg("bin count must be at least 1"));
    }
    let (lo, hi) = min_max(col);
    if lo == hi {
        return Histogram::new(Bins::Edges(vec![lo, hi]), vec![col.len() as f64]);
    }
    let width = (hi - lo) / t as f64;
    let mut edges: Vec<f64> = (0..t).map(|s| lo + s as f64 * width).collect();
    edges.push(hi);
    if edges.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid_data(format!(
            "range [{lo}, {hi}] too narrow for {t} bins"
        )));
    }
    let mut counts = vec![0.0; t];
    for &x in col {
        let s = edges[1..].partition_point(|&e| e < x).min(t - 1);
        counts[s] += 1.0;
    }
    Histogram::new(Bins::Edges(edges), counts)
}

pub fn histogram_binned(col: &[f64], t: usize) -> Result<FrequencyTable> {
    FrequencyTable::from_histogram(&binned_counts(col, t)?)
}

/// Frequency table whose bin counts are perturbed by EFPA under `epsilon`.
pub fn dp_frequency_table(
    col: &[f64],
    t: usize,
    epsilon: f64,
    noise: &mut dyn NoiseSource,
) -> Result<FrequencyTable> {
    let h = binned_counts(col, t)?;
    FrequencyTable::from_histogram(&efpa(&h, epsilon, noise)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dp::{SeededNoise, ZeroNoise};
    use crate::rng::stream;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn empirical_cdf_values() {
        let f = empirical_cdf(&[1.0, 1.0, 2.0, 4.0]).unwrap();
        assert_eq!(f.support(), [1.0, 2.0, 4.0]);
        assert_eq!(f.eval(1.0), 0.5);
        assert_eq!(f.eval(2.0), 0.75);
        assert_eq!(f.eval(4.0), 1.0);
        assert_eq!(f.eval(0.0), 0.0);
        assert_eq!(f.eval(3.0), 0.75);
        let c = empirical_cdf(&[7.0; 3]).unwrap();
        assert_eq!((c.support(), c.eval(7.0)), (&[7.0][..], 1.0));
        assert!(empirical_cdf(&[]).is_err());
    }

    #[test]
    fn unique_histograms() {
        let h = histogram_unique(&[1.0, 1.0, 2.0]).unwrap();
        assert_eq!(h.bins(), &Bins::Values(vec![1.0, 2.0]));
        assert_eq!(h.counts(), [2.0, 1.0]);
        let h = histogram_unique(&[3.0, 1.0, 3.0, 3.0]).unwrap();
        assert_eq!(h.bins(), &Bins::Values(vec![1.0, 3.0]));
        assert_eq!(h.counts(), [1.0, 3.0]);
        let h = histogram_unique(&[5.0, 2.0, 9.0, 1.0]).unwrap();
        assert_eq!(h.counts(), [1.0; 4]);
    }

    #[test]
    fn binned_examples() {
        let t = histogram_binned(&[0.0, 1.0, 2.0, 3.0], 2).unwrap();
        assert_eq!(t.edges(), [0.0, 1.5, 3.0]);
        assert_eq!(t.cumulative(), [0.5, 1.0]);
        let single = histogram_binned(&[0.0, 1.0, 2.0], 1).unwrap();
        assert_eq!(single.cumulative(), [1.0]);
        let constant = histogram_binned(&[4.0; 5], 10).unwrap();
        assert_eq!(constant.edges(), [4.0, 4.0]);
        assert_eq!(constant.cumulative(), [1.0]);
        assert!(histogram_binned(&[1.0, 2.0], 0).is_err());
    }

    #[test]
    fn first_bin_is_closed_others_right_closed() {
        let t = histogram_binned(&[0.0, 1.0, 2.0, 4.0], 2).unwrap();
        // edges 0, 2, 4: 0 and 1 and 2 fall in [0, 2], 4 in (2, 4].
        assert_eq!(t.cumulative(), [0.75, 1.0]);
        assert_eq!(t.bin_of_value(2.0), 0);
        assert_eq!(t.bin_of_value(2.0000001), 1);
    }

    #[test]
    fn inverse_cdf_examples() {
        let f = empirical_cdf(&[1.0, 1.0, 2.0, 4.0]).unwrap();
        assert_eq!(inverse_cdf(&f, 0.5).unwrap(), 1.0);
        assert_eq!(inverse_cdf(&f, 0.6).unwrap(), 2.0);
        assert_eq!(inverse_cdf(&f, 1.0).unwrap(), 4.0);
        assert_eq!(inverse_cdf(&f, 0.0).unwrap(), 1.0);
        for &v in f.support() {
            assert_eq!(inverse_cdf(&f, f.eval(v)).unwrap(), v);
        }
        assert!(inverse_cdf(&f, 1.5).is_err());
        assert!(inverse_cdf(&f, -0.1).is_err());
    }

    #[test]
    fn zero_noise_private_marginals_match() {
        let col = [3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0, 5.0, 3.0, 5.0];
        let exact = empirical_cdf(&col).unwrap();
        let private = dp_marginal(&col, 1.0, &mut ZeroNoise).unwrap();
        assert_eq!(exact.support(), private.support());
        for (a, b) in exact.cdf().iter().zip(private.cdf()) {
            assert!((a - b).abs() < 1e-9);
        }
        let table = histogram_binned(&col, 4).unwrap();
        let private = dp_frequency_table(&col, 4, 1.0, &mut ZeroNoise).unwrap();
        assert_eq!(table.edges(), private.edges());
        for (a, b) in table.cumulative().iter().zip(private.cumulative()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn private_outputs_are_valid_cdfs() {
        let mut rng = stream(1, "col");
        let col: Vec<f64> = (0..300)
            .map(|_| (rng.random::<f64>() * 50.0).round())
            .collect();
        for seed in 0..20 {
            let mut noise = SeededNoise::new(stream(seed, "m"));
            let f = dp_marginal(&col, 0.1, &mut noise).unwrap();
            assert!(f.cdf().windows(2).all(|w| w[0] <= w[1]));
            assert_eq!(*f.cdf().last().unwrap(), 1.0);
            let t = dp_frequency_table(&col, 40, 0.1, &mut noise).unwrap();
            assert_eq!(t.n_bins(), 40);
            assert!(t.cumulative().windows(2).all(|w| w[0] <= w[1]));
            assert_eq!(*t.cumulative().last().unwrap(), 1.0);
        }
        assert!(dp_marginal(&col, 0.0, &mut ZeroNoise).is_err());
        assert!(dp_frequency_table(&col, 4, -1.0, &mut ZeroNoise).is_err());
    }

    #[test]
    fn private_marginal_error_shrinks_with_epsilon() {
        let mut rng = stream(2, "col");
        let col: Vec<f64> = (0..500)
            .map(|_| (rng.random::<f64>() * 30.0).round())
            .collect();
        let exact = empirical_cdf(&col).unwrap();
        let l1 = |eps: f64| -> f64 {
            (0..20)
                .map(|seed| {
                    let mut noise = SeededNoise::new(stream(seed, "trend"));
                    let f = dp_marginal(&col, eps, &mut noise).unwrap();
                    f.cdf()
                        .iter()
                        .zip(exact.cdf())
                        .map(|(a, b)| (a - b).abs())
                        .sum::<f64>()
                })
                .sum::<f64>()
                / 20.0
        };
        let errors: Vec<f64> = [0.1, 1.0, 10.0].iter().map(|&e| l1(e)).collect();
        assert!(errors[0] > errors[1] && errors[1] > errors[2], "{errors:?}");
    }

    #[test]
    fn quantize_caps_distinct_values() {
        let col: Vec<f64> = (0..100).map(|i| i as f64).collect();
        assert_eq!(quantize(&col, 1000), col);
        let q = quantize(&col, 10);
        let mut distinct = q.clone();
        distinct.dedup();
        assert!(distinct.len() <= 10);
        assert!(q.iter().zip(&col).all(|(r, x)| r >= x && *r <= 99.0));
        assert_eq!(q[0], 9.9);
        assert_eq!(q[99], 99.0);
    }

    #[test]
    fn class_search() {
        let t = histogram_binned(&[0.0, 1.0, 2.0, 3.0], 2).unwrap();
        assert_eq!(t.class_of(0.0), 0);
        assert_eq!(t.class_of(0.5), 0);
        assert_eq!(t.class_of(0.5 + 1e-15), 0);
        assert_eq!(t.class_of(0.75), 1);
        assert_eq!(t.class_of(1.0), 1);
    }

    proptest! {
        #[test]
        fn binned_partition_property(col in proptest::collection::vec(-100f64..100.0, 1..80), t in 1usize..30) {
            let h = binned_counts(&col, t).unwrap();
            prop_assert_eq!(h.total(), col.len() as f64);
            let table = FrequencyTable::from_histogram(&h).unwrap();
            prop_assert_eq!(*table.cumulative().last().unwrap(), 1.0);
            for &x in &col {
                let s = table.bin_of_value(x);
                let (a, b) = table.interval(s);
                if s == 0 {
                    prop_assert!(a <= x && x <= b);
                } else {
                    prop_assert!(a < x && x <= b);
                }
            }
        }

        #[test]
        fn empirical_cdf_ends_at_one(col in proptest::collection::vec(-1e6f64..1e6, 1..100)) {
            let f = empirical_cdf(&col).unwrap();
            prop_assert_eq!(*f.cdf().last().unwrap(), 1.0);
            let max = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert_eq!(f.eval(max), 1.0);
        }
    }
}
