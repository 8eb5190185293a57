//! Seeded synthetic tables for tests, demos and benchmarks.

use rand::Rng;
use rand_distr::StandardNormal;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::Result;
use crate::rng::stream;
use crate::tabular::{Column, ColumnSpec, Schema, Table};

/// Level `0..levels` for a uniform `u`, with Zipf-like level frequencies.
fn zipf_level(u: f64, levels: usize) -> usize {
    let total: f64 = (1..=levels).map(|j| 1.0 / j as f64).sum();
    let mut acc = 0.0;
    for j in 0..levels {
        acc += 1.0 / (j + 1) as f64 / total;
        if u < acc {
            return j;
        }
    }
    levels - 1
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        })
}

/// Census-like mixed table driven by three correlated Gaussian factors.
///
/// Numeric: `age`, `hours`, `weight`, `tenure`. Categorical: `workclass`
/// (8 levels), `education` (12), `marital` (6), `occupation` (5), `sex`
/// and the binary target `salary` (about a quarter `>50K`).
pub fn census(n: usize, seed: u64) -> Result<Table> {
    const LEVELS: [(&str, usize, &str); 5] = [
        ("workclass", 8, "w"),
        ("education", 12, "e"),
        ("marital", 6, "m"),
        ("occupation", 5, "o"),
        ("sex", 2, "s"),
    ];
    let mut rng = stream(seed, "fixture/census");
    let phi = Normal::standard();
    let mut num: Vec<Vec<f64>> = (0..4).map(|_| Vec::with_capacity(n)).collect();
    let mut cat: Vec<Vec<String>> = (0..LEVELS.len()).map(|_| Vec::with_capacity(n)).collect();
    let mut salary = Vec::with_capacity(n);
    for _ in 0..n {
        let f: [f64; 3] = [
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
            rng.sample(StandardNormal),
        ];
        let mut mix = |k: usize| -> f64 {
            let e: f64 = rng.sample(StandardNormal);
            phi.cdf(0.7 * f[k % 3] + 0.714 * e)
        };
        num[0].push((17.0 + 73.0 * mix(0)).floor());
        num[1].push((10.0 + 70.0 * mix(1)).floor());
        num[2].push((1000.0 * mix(2)).round());
        num[3].push((400.0 * mix(3)).round() / 10.0);
        for (j, &(_, levels, prefix)) in LEVELS.iter().enumerate() {
            cat[j].push(format!("{prefix}{}", zipf_level(mix(j + 4), levels)));
        }
        let noise: f64 = rng.sample(StandardNormal);
        let s = 0.6 * f[1] + 0.5 * f[0] + 0.3 * f[2] + 0.55 * noise;
        salary.push(if s > 0.7 { ">50K" } else { "<=50K" }.to_string());
    }
    let mut specs: Vec<ColumnSpec> = ["age", "hours", "weight", "tenure"]
        .iter()
        .zip(&num)
        .map(|(name, v)| {
            let (lo, hi) = min_max(v);
            ColumnSpec::numeric(*name, lo, hi)
        })
        .collect();
    for &(name, levels, prefix) in &LEVELS {
        specs.push(ColumnSpec::categorical(
            name,
            (0..levels).map(|l| format!("{prefix}{l}")),
        ));
    }
    specs.push(ColumnSpec::categorical("salary", ["<=50K", ">50K"]));
    let mut columns: Vec<Column> = num.into_iter().map(Column::Numeric).collect();
    columns.extend(cat.into_iter().map(Column::Categorical));
    columns.push(Column::Categorical(salary));
    Table::new(Schema::new(specs)?, columns)
}

/// Two continuous columns from a Gaussian copula with Kendall's tau `tau`.
pub fn tau_pair(n: usize, tau: f64, seed: u64) -> Result<Table> {
    let rho = (std::f64::consts::FRAC_PI_2 * tau).sin();
    let mut rng = stream(seed, "fixture/tau");
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let a: f64 = rng.sample(StandardNormal);
        let b: f64 = rng.sample(StandardNormal);
        x.push(a);
        y.push(rho * a + (1.0 - rho * rho).sqrt() * b);
    }
    let ((xl, xh), (yl, yh)) = (min_max(&x), min_max(&y));
    let schema = Schema::new(vec![
        ColumnSpec::numeric("x", xl, xh),
        ColumnSpec::numeric("y", yl, yh),
    ])?;
    Table::new(schema, vec![Column::Numeric(x), Column::Numeric(y)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::copula::kendall_tau;

    #[test]
    fn zipf_levels_cover_range() {
        assert_eq!(zipf_level(0.0, 4), 0);
        assert_eq!(zipf_level(0.999_999, 4), 3);
        assert_eq!(zipf_level(0.5, 1), 0);
    }

    #[test]
    fn census_shape_and_balance() {
        let t = census(2000, 1).unwrap();
        assert_eq!((t.n_rows(), t.n_cols()), (2000, 10));
        let pos = t
            .column(9)
            .as_categorical()
            .unwrap()
            .iter()
            .filter(|s| *s == ">50K")
            .count();
        let share = pos as f64 / 2000.0;
        assert!((0.15..0.35).contains(&share), "{share}");
        assert_eq!(census(50, 3).unwrap(), census(50, 3).unwrap());
    }

    #[test]
    fn tau_pair_hits_target() {
        let t = tau_pair(3000, 0.7, 2).unwrap();
        let tau = kendall_tau(
            t.column(0).as_numeric().unwrap(),
            t.column(1).as_numeric().unwrap(),
        )
        .unwrap();
        assert!((tau - 0.7).abs() < 0.03, "{tau}");
    }
}
