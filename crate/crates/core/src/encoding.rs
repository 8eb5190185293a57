//! Uniform encoder: categorical labels to sub-intervals of [0, 1] and back.
//!
//! Categories are ordered from most to least frequent (ties lexicographic)
//! and each gets an interval whose width is its empirical frequency. A label
//! is encoded as a draw from a Gaussian truncated to its interval; decoding
//! is an interval lookup.

use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{invalid_arg, invalid_data, Error, Result};
use crate::rng::open_unit;

/// Where the truncated Gaussian is centered inside a category interval `[a, b)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CenterRule {
    /// `(a + b) / 2`.
    #[default]
    Midpoint,
    /// `(b - a) / 2`, the half-width taken literally as the mean.
    HalfWidth,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "EncoderParts")]
pub struct EncoderSpec {
    order: Vec<String>,
    breakpoints: Vec<f64>,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

#[derive(Deserialize)]
struct EncoderParts {
    order: Vec<String>,
    breakpoints: Vec<f64>,
}

impl TryFrom<EncoderParts> for EncoderSpec {
    type Error = Error;

    fn try_from(parts: EncoderParts) -> Result<Self> {
        Self::from_parts(parts.order, parts.breakpoints)
    }
}

impl EncoderSpec {
    /// Rebuild from a serialized order and breakpoint list.
    pub fn from_parts(order: Vec<String>, breakpoints: Vec<f64>) -> Result<Self> {
        if order.is_empty() || breakpoints.len() != order.len() + 1 {
            return Err(invalid_data(
                "encoder needs K categories and K+1 breakpoints",
            ));
        }
        if breakpoints[0] != 0.0 || *breakpoints.last().unwrap() != 1.0 {
            return Err(invalid_data("encoder breakpoints must run from 0 to 1"));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid_data(
                "encoder breakpoints must be strictly increasing",
            ));
        }
        let index: HashMap<String, usize> = order
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, l)| (l, i))
            .collect();
        if index.len() != order.len() {
            return Err(invalid_data("duplicate category in encoder order"));
        }
        Ok(Self {
            order,
            breakpoints,
            index,
        })
    }

    pub fn order(&self) -> &[String] {
        &self.order
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn interval(&self, label: &str) -> Option<(f64, f64)> {
        self.index
            .get(label)
            .map(|&i| (self.breakpoints[i], self.breakpoints[i + 1]))
    }

    /// Interval midpoint of a label: the deterministic center of its encoding.
    pub fn midpoint(&self, label: &str) -> Option<f64> {
        self.interval(label).map(|(a, b)| 0.5 * (a + b))
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string(self).expect("encoder serialization is infallible")
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// Category whose interval holds `value`; out-of-range values are clamped.
    pub fn decode_value(&self, value: f64) -> &str {
        let v = if value.is_nan() {
            0.0
        } else {
            value.clamp(0.0, 1.0)
        };
        let interior = &self.breakpoints[1..];
        let idx = interior
            .partition_point(|&b| b <= v)
            .min(self.order.len() - 1);
        &self.order[idx]
    }
}

/// Fit the encoder on a categorical column.
pub fn fit_uniform_encoder<S: AsRef<str>>(col: &[S]) -> Result<EncoderSpec> {
    if col.is_empty() {
        return Err(invalid_data("cannot fit an encoder on an empty column"));
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for label in col {
        *counts.entry(label.as_ref()).or_default() += 1;
    }
    let mut ranked: Vec<(&str, usize)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));

    let n = col.len() as f64;
    let mut breakpoints = Vec::with_capacity(ranked.len() + 1);
    breakpoints.push(0.0);
    let mut cumulative = 0usize;
    for (_, c) in &ranked {
        cumulative += c;
        breakpoints.push(cumulative as f64 / n);
    }
    *breakpoints.last_mut().unwrap() = 1.0;
    let order = ranked.into_iter().map(|(l, _)| l.to_string()).collect();
    EncoderSpec::from_parts(order, breakpoints)
}

/// Inverse-CDF draw from Normal(mu, sigma) restricted to `[a, b]`, driven by `u`.
pub fn truncated_gaussian_from_uniform(u: f64, a: f64, b: f64, mu: f64, sigma: f64) -> Result<f64> {
    if a.is_nan() || b.is_nan() || a >= b {
        return Err(invalid_arg(format!(
            "truncation bounds need a < b, got [{a}, {b}]"
        )));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(invalid_arg(format!("sigma must be positive, got {sigma}")));
    }
    let std = Normal::standard();
    let lo = std.cdf((a - mu) / sigma);
    let hi = std.cdf((b - mu) / sigma);
    let mass = hi - lo;
    let value = if mass > 1e-300 {
        let p = (lo + u.clamp(0.0, 1.0) * mass).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0);
        mu + sigma * std.inverse_cdf(p)
    } else {
        // Interval lies deep in one tail: all mass sits at the endpoint nearest mu.
        mu
    };
    Ok(value.clamp(a, b))
}

pub fn sample_truncated_gaussian<R: Rng + ?Sized>(
    a: f64,
    b: f64,
    mu: f64,
    sigma: f64,
    rng: &mut R,
) -> Result<f64> {
    truncated_gaussian_from_uniform(open_unit(rng), a, b, mu, sigma)
}

/// Encode labels as values inside their category intervals.
pub fn encode<S: AsRef<str>, R: Rng + ?Sized>(
    spec: &EncoderSpec,
    col: &[S],
    center: CenterRule,
    rng: &mut R,
) -> Result<Vec<f64>> {
    col.iter()
        .map(|label| {
            let label = label.as_ref();
            let (a, b) = spec.interval(label).ok_or_else(|| Error::UnknownCategory {
                column: String::new(),
                label: label.to_string(),
            })?;
            let mu = match center {
                CenterRule::Midpoint => 0.5 * (a + b),
                CenterRule::HalfWidth => 0.5 * (b - a),
            };
            let v = sample_truncated_gaussian(a, b, mu, (b - a) / 6.0, rng)?;
            // Intervals are half-open; keep the value strictly below b.
            Ok(if v >= b { b.next_down().max(a) } else { v })
        })
        .collect()
}

pub fn decode(spec: &EncoderSpec, col: &[f64]) -> Vec<String> {
    col.iter()
        .map(|&v| spec.decode_value(v).to_string())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn fit_orders_by_frequency() {
        let spec = fit_uniform_encoder(&["A", "A", "B", "C"]).unwrap();
        assert_eq!(spec.order(), ["A", "B", "C"]);
        assert_eq!(spec.breakpoints(), [0.0, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn fit_single_category() {
        let spec = fit_uniform_encoder(&["X", "X"]).unwrap();
        assert_eq!(spec.breakpoints(), [0.0, 1.0]);
    }

    #[test]
    fn fit_ties_are_lexicographic() {
        let spec = fit_uniform_encoder(&["B", "A"]).unwrap();
        assert_eq!(spec.order(), ["A", "B"]);
        assert_eq!(spec.breakpoints(), [0.0, 0.5, 1.0]);
    }

    #[test]
    fn fit_empty_fails() {
        assert!(fit_uniform_encoder::<&str>(&[]).is_err());
    }

    #[test]
    fn encode_lands_in_interval() {
        let spec = fit_uniform_encoder(&["A", "A", "B", "C"]).unwrap();
        let mut rng = stream(1, "t");
        let vals = encode(&spec, &["B"; 200], CenterRule::Midpoint, &mut rng).unwrap();
        assert!(vals.iter().all(|&v| (0.5..0.75).contains(&v)));
        let one = fit_uniform_encoder(&["X"]).unwrap();
        let vals = encode(&one, &["X"; 50], CenterRule::Midpoint, &mut rng).unwrap();
        assert!(vals.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn encode_unknown_label_fails() {
        let spec = fit_uniform_encoder(&["A"]).unwrap();
        assert!(encode(&spec, &["Z"], CenterRule::Midpoint, &mut stream(0, "t")).is_err());
    }

    #[test]
    fn decode_lookup_and_boundaries() {
        let spec = fit_uniform_encoder(&["A", "A", "B", "C"]).unwrap();
        assert_eq!(spec.decode_value(0.6), "B");
        assert_eq!(spec.decode_value(0.0), "A");
        assert_eq!(spec.decode_value(0.5), "B");
        assert_eq!(spec.decode_value(1.0), "C");
        assert_eq!(spec.decode_value(1.2), "C");
        assert_eq!(spec.decode_value(-0.3), "A");
    }

    #[test]
    fn symmetric_truncation_median() {
        let v = truncated_gaussian_from_uniform(0.5, 0.2, 0.6, 0.4, 0.1).unwrap();
        assert!((v - 0.4).abs() < 1e-12);
    }

    #[test]
    fn truncated_gaussian_errors() {
        assert!(truncated_gaussian_from_uniform(0.5, 1.0, 1.0, 0.5, 0.1).is_err());
        assert!(truncated_gaussian_from_uniform(0.5, 0.0, 1.0, 0.5, 0.0).is_err());
    }

    #[test]
    fn truncated_gaussian_monte_carlo_mean() {
        let mut rng = stream(11, "tg");
        let n = 100_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let v = sample_truncated_gaussian(0.0, 1.0, 0.5, 1.0 / 6.0, &mut rng).unwrap();
            assert!((0.0..=1.0).contains(&v));
            sum += v;
        }
        assert!((sum / n as f64 - 0.5).abs() < 0.005);
    }

    #[test]
    fn half_width_rule_stays_inside() {
        let spec = fit_uniform_encoder(&["A", "A", "A", "B"]).unwrap();
        let mut rng = stream(2, "t");
        let vals = encode(&spec, &["B"; 100], CenterRule::HalfWidth, &mut rng).unwrap();
        assert!(vals.iter().all(|&v| (0.75..1.0).contains(&v)));
        assert_eq!(decode(&spec, &vals), vec!["B"; 100]);
    }

    #[test]
    fn json_roundtrip() {
        let spec = fit_uniform_encoder(&["A", "A", "B", "C"]).unwrap();
        let text = spec.to_json_string();
        assert!(text.contains("\"order\"") && text.contains("\"breakpoints\""));
        assert_eq!(EncoderSpec::from_json_str(&text).unwrap(), spec);
    }

    #[test]
    fn decoded_frequencies_track_interval_widths() {
        // Chi-square goodness of fit of decoded uniform draws against widths (3 categories, df = 2).
        let spec = fit_uniform_encoder(&["A", "A", "B", "C"]).unwrap();
        let mut rng = stream(5, "chi");
        let n = 20_000;
        let draws: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let labels = decode(&spec, &draws);
        let widths = [0.5, 0.25, 0.25];
        let chi2: f64 = ["A", "B", "C"]
            .iter()
            .zip(widths)
            .map(|(l, w)| {
                let obs = labels.iter().filter(|x| x == l).count() as f64;
                let exp = w * n as f64;
                (obs - exp).powi(2) / exp
            })
            .sum();
        assert!(chi2 < 13.8, "chi2 = {chi2}");
    }

    proptest! {
        #[test]
        fn encode_decode_roundtrip(labels in proptest::collection::vec("[a-e]", 1..60), seed in any::<u64>()) {
            let spec = fit_uniform_encoder(&labels).unwrap();
            let widths: f64 = spec.breakpoints().windows(2).map(|w| w[1] - w[0]).sum();
            prop_assert!((widths - 1.0).abs() < 1e-12);
            let enc = encode(&spec, &labels, CenterRule::Midpoint, &mut stream(seed, "p")).unwrap();
            prop_assert_eq!(decode(&spec, &enc), labels);
        }
    }
}
