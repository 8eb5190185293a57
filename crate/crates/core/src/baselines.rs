//! Independent-marginal baseline: a noisy equal-width histogram per column,
//! sampled cell by cell with no dependence between columns.

use rand::Rng;

use crate::dp::{naive_dp_histogram, NoiseSource, PrivacyBudget, NAIVE_HISTOGRAM_SENSITIVITY};
use crate::error::{invalid_arg, invalid_data, Result};
use crate::marginals::{binned_counts, FrequencyTable};

/// Fit one noisy histogram per column (`epsilon / p` each) and draw `n`
/// rows with every cell sampled independently.
pub fn dp_histogram_generate<R: Rng + ?Sized>(
    columns: &[Vec<f64>],
    epsilon: f64,
    bins: &[usize],
    n: usize,
    noise: &mut dyn NoiseSource,
    rng: &mut R,
) -> Result<(Vec<Vec<f64>>, PrivacyBudget)> {
    let p = columns.len();
    if p == 0 {
        return Err(invalid_data("no columns to fit"));
    }
    if bins.len() != p {
        return Err(invalid_arg(format!(
            "{} bin counts given for {p} columns",
            bins.len()
        )));
    }
    let mut ledger = PrivacyBudget::new(epsilon)?;
    let share = epsilon / p as f64;
    let tables = columns
        .iter()
        .zip(bins)
        .enumerate()
        .map(|(i, (col, &t))| {
            ledger.spend(format!("dphist/column/{i}"), share)?;
            let h = binned_counts(col, t)?;
            let noisy = naive_dp_histogram(&h, share, NAIVE_HISTOGRAM_SENSITIVITY, noise)?;
            FrequencyTable::from_histogram(&noisy)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = vec![Vec::with_capacity(n); p];
    for _ in 0..n {
        for (col, table) in out.iter_mut().zip(&tables) {
            let (a, b) = table.interval(table.class_of(rng.random::<f64>()));
            col.push((a + (b - a) * rng.random::<f64>()).min(b));
        }
    }
    Ok((out, ledger))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::copula::kendall_tau;
    use crate::dp::{SeededNoise, ZeroNoise};
    use crate::marginals::histogram_binned;
    use crate::rng::stream;

    #[test]
    fn zero_noise_masses_match_bins() {
        let col: Vec<f64> = (0..400).map(|i| ((i * i) % 97) as f64).collect();
        let (out, ledger) = dp_histogram_generate(
            std::slice::from_ref(&col),
            1.0,
            &[5],
            10_000,
            &mut ZeroNoise,
            &mut stream(1, "s"),
        )
        .unwrap();
        let exact = histogram_binned(&col, 5).unwrap();
        let mut prev = 0.0;
        for (s, &r) in exact.cumulative().iter().enumerate() {
            let got = out[0]
                .iter()
                .filter(|&&v| exact.bin_of_value(v) == s)
                .count() as f64
                / 1e4;
            assert!(
                (got - (r - prev)).abs() < 0.02,
                "bin {s}: {got} vs {}",
                r - prev
            );
            prev = r;
        }
        assert_eq!(ledger.spent(), 1.0);
    }

    #[test]
    fn columns_are_independent() {
        let x: Vec<f64> = (0..1000).map(f64::from).collect();
        let y: Vec<f64> = x.iter().map(|v| v * 2.0).collect();
        let mut noise = SeededNoise::new(stream(2, "n"));
        let (out, ledger) = dp_histogram_generate(
            &[x, y],
            2.0,
            &[20, 20],
            10_000,
            &mut noise,
            &mut stream(2, "s"),
        )
        .unwrap();
        assert!(kendall_tau(&out[0], &out[1]).unwrap().abs() < 0.05);
        assert_eq!(ledger.entries().len(), 2);
        assert!(ledger.entries().iter().all(|e| e.epsilon == 1.0));
        assert!(out[0].iter().all(|&v| (0.0..=999.0).contains(&v)));
    }

    #[test]
    fn rejects_bad_input() {
        let col = vec![vec![1.0, 2.0]];
        assert!(
            dp_histogram_generate(&col, 0.0, &[2], 5, &mut ZeroNoise, &mut stream(0, "s")).is_err()
        );
        assert!(
            dp_histogram_generate(&col, 1.0, &[2, 3], 5, &mut ZeroNoise, &mut stream(0, "s"))
                .is_err()
        );
    }
}
