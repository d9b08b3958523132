// Copyright 2026 The ci-recon Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Confidence intervals for a mean Dice score, reconstructed from an
//! aggregate report (t interval) or from per-case values (percentile
//! bootstrap).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::glm::SdModel;
use crate::stats::{quantile_sorted, sorted_copy, t_quantile};

pub const DEFAULT_ALPHA: f64 = 0.05;
pub const MIN_RESAMPLES: usize = 100;

/// What a publication reports about one method: mean Dice, test size and,
/// sometimes, the SD. Fraction scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregateReport {
    pub mean_dsc: f64,
    pub n: usize,
    pub sd: Option<f64>,
}

impl AggregateReport {
    pub fn new(mean_dsc: f64, n: usize, sd: Option<f64>) -> Result<Self> {
        check_mean(mean_dsc)?;
        if n < 1 {
            return Err(Error::domain("test size must be at least 1"));
        }
        if let Some(sd) = sd {
            check_sd(sd)?;
        }
        Ok(Self { mean_dsc, n, sd })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CiMethod {
    ParametricT,
    BootstrapPercentile,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub lower: f64,
    pub upper: f64,
    pub alpha: f64,
    pub method: CiMethod,
    /// Whether the bounds were clipped to [0, 1].
    pub clamped: bool,
}

impl ConfidenceInterval {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, value: f64) -> bool {
        self.lower <= value && value <= self.upper
    }
}

/// Signed differences `a - b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CiComparison {
    pub lower_diff: f64,
    pub upper_diff: f64,
    pub width_diff: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SdSource {
    Reported,
    Model,
}

fn check_mean(mean_dsc: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&mean_dsc) {
        return Err(Error::domain(format!("mean DSC must lie in [0, 1], got {mean_dsc}")));
    }
    Ok(())
}

fn check_sd(sd: f64) -> Result<()> {
    if !(sd >= 0.0) || !sd.is_finite() {
        return Err(Error::domain(format!("SD must be finite and >= 0, got {sd}")));
    }
    Ok(())
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::config(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    Ok(())
}

/// Model-based SD for a report, fraction scale. Ignores `report.sd`.
pub fn approximate_sd(report: &AggregateReport, model: &SdModel) -> Result<f64> {
    model.sd_fraction(report.mean_dsc)
}

/// The SD to use for a report: the reported one when present, unless
/// `force_model` asks for the model value.
pub fn resolve_sd(report: &AggregateReport, model: &SdModel, force_model: bool) -> Result<(f64, SdSource)> {
    match report.sd {
        Some(sd) if !force_model => Ok((sd, SdSource::Reported)),
        _ => Ok((approximate_sd(report, model)?, SdSource::Model)),
    }
}

/// `t_{n-1, 1-alpha/2} * sd / sqrt(n)`.
pub fn half_width(sd: f64, n: usize, alpha: f64) -> Result<f64> {
    if n < 2 {
        return Err(Error::DegreesOfFreedom(n));
    }
    check_sd(sd)?;
    check_alpha(alpha)?;
    let t = t_quantile(1.0 - alpha / 2.0, (n - 1) as f64)?;
    Ok(t * sd / (n as f64).sqrt())
}

/// t interval around a mean Dice score, clipped to [0, 1].
pub fn parametric_ci(mean_dsc: f64, sd: f64, n: usize, alpha: f64) -> Result<ConfidenceInterval> {
    parametric_ci_with(mean_dsc, sd, n, alpha, true)
}

pub fn parametric_ci_with(
    mean_dsc: f64,
    sd: f64,
    n: usize,
    alpha: f64,
    clamp: bool,
) -> Result<ConfidenceInterval> {
    check_mean(mean_dsc)?;
    let h = half_width(sd, n, alpha)?;
    let (mut lower, mut upper) = (mean_dsc - h, mean_dsc + h);
    if clamp {
        lower = lower.max(0.0);
        upper = upper.min(1.0);
    }
    Ok(ConfidenceInterval {
        lower,
        upper,
        alpha,
        method: CiMethod::ParametricT,
        clamped: clamp,
    })
}

/// Percentile bootstrap interval for the mean of per-case values.
///
/// Resample `r` draws from its own ChaCha stream `(seed, r)`, so the result
/// does not depend on how resamples are scheduled across threads. Values are
/// sorted before resampling, which makes the result a function of the
/// multiset of inputs.
pub fn bootstrap_ci(values: &[f64], alpha: f64, n_resamples: usize, seed: u64) -> Result<ConfidenceInterval> {
    if values.is_empty() {
        return Err(Error::domain("bootstrap requires at least one value"));
    }
    if let Some(bad) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(Error::domain(format!("per-case DSC must lie in [0, 1], got {bad}")));
    }
    if n_resamples < MIN_RESAMPLES {
        return Err(Error::config(format!(
            "need at least {MIN_RESAMPLES} resamples, got {n_resamples}"
        )));
    }
    check_alpha(alpha)?;

    let sorted = sorted_copy(values);
    let n = sorted.len();
    let mut means: Vec<f64> = (0..n_resamples)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            let mut sum = 0.0;
            for _ in 0..n {
                sum += sorted[rng.random_range(0..n)];
            }
            // Rounding in the sum can step just outside the sample range.
            (sum / n as f64).clamp(sorted[0], sorted[n - 1])
        })
        .collect();
    means.sort_by(f64::total_cmp);

    Ok(ConfidenceInterval {
        lower: quantile_sorted(&means, alpha / 2.0),
        upper: quantile_sorted(&means, 1.0 - alpha / 2.0),
        alpha,
        method: CiMethod::BootstrapPercentile,
        clamped: false,
    })
}

pub fn compare_cis(a: &ConfidenceInterval, b: &ConfidenceInterval) -> Result<CiComparison> {
    if (a.alpha - b.alpha).abs() > 1e-12 {
        return Err(Error::config(format!(
            "cannot compare intervals with alpha {} and {}",
            a.alpha, b.alpha
        )));
    }
    Ok(CiComparison {
        lower_diff: a.lower - b.lower,
        upper_diff: a.upper - b.upper,
        width_diff: a.width() - b.width(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand_distr::Distribution;

    const T99: f64 = 1.9842169515864171;
    const T29: f64 = 2.0452296421327039;
    const SD90: f64 = 0.08044591481697683;

    pub(crate) fn beta_sample(seed: u64, n: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let beta = rand_distr::Beta::new(8.0, 2.0).unwrap();
        (0..n).map(|_| beta.sample(&mut rng)).collect()
    }

    #[test]
    fn approximate_sd_examples() {
        let model = SdModel::paper();
        let r = AggregateReport::new(0.9, 100, None).unwrap();
        assert_abs_diff_eq!(approximate_sd(&r, &model).unwrap(), SD90, epsilon = 1e-12);
        assert_abs_diff_eq!(approximate_sd(&r, &model).unwrap(), 0.080447, epsilon = 1e-5);

        let zero = AggregateReport::new(0.0, 100, None).unwrap();
        let raw = approximate_sd(&zero, &model.with_clamp(false)).unwrap();
        assert_abs_diff_eq!(raw, 2.031_f64.exp() / 100.0, epsilon = 1e-14);
        assert_abs_diff_eq!(raw, 0.076224, epsilon = 1e-5);
        assert_eq!(approximate_sd(&zero, &model).unwrap(), 0.0);

        let constant = SdModel::new([5.0_f64.ln(), 0.0, 0.0]);
        for mean in [0.2, 0.5, 0.93] {
            let r = AggregateReport::new(mean, 10, None).unwrap();
            assert_abs_diff_eq!(approximate_sd(&r, &constant).unwrap(), 0.05, epsilon = 1e-14);
        }
    }

    #[test]
    fn resolve_prefers_reported_sd() {
        let model = SdModel::paper();
        let r = AggregateReport::new(0.9, 100, Some(0.1)).unwrap();
        assert_eq!(resolve_sd(&r, &model, false).unwrap(), (0.1, SdSource::Reported));
        let (sd, src) = resolve_sd(&r, &model, true).unwrap();
        assert_eq!(src, SdSource::Model);
        assert_abs_diff_eq!(sd, SD90, epsilon = 1e-12);
    }

    #[test]
    fn parametric_examples() {
        let ci = parametric_ci(0.90, SD90, 100, 0.05).unwrap();
        assert_abs_diff_eq!(ci.lower, 0.9 - T99 * SD90 / 10.0, epsilon = 1e-12);
        assert_abs_diff_eq!(ci.lower, 0.88404, epsilon = 1e-5);
        assert_abs_diff_eq!(ci.upper, 0.91596, epsilon = 1e-5);
        assert_abs_diff_eq!(ci.width(), 0.031924429573144505, epsilon = 1e-12);
        assert_eq!(ci.method, CiMethod::ParametricT);

        let ci = parametric_ci(0.90, 0.0, 50, 0.05).unwrap();
        assert_eq!((ci.lower, ci.upper), (0.90, 0.90));

        let ci = parametric_ci(0.90, SD90, 30, 0.05).unwrap();
        let h = T29 * SD90 / 30.0_f64.sqrt();
        assert_abs_diff_eq!(ci.lower, 0.9 - h, epsilon = 1e-12);
        assert_abs_diff_eq!(ci.lower, 0.86996, epsilon = 1e-5);
        assert_abs_diff_eq!(ci.upper, 0.93004, epsilon = 1e-5);
        assert_abs_diff_eq!(ci.width(), 0.06008, epsilon = 1e-5);
    }

    #[test]
    fn parametric_clamps_at_the_metric_bounds() {
        let ci = parametric_ci(0.98, 0.2, 3, 0.05).unwrap();
        assert_eq!(ci.upper, 1.0);
        assert!(ci.clamped);
        let raw = parametric_ci_with(0.98, 0.2, 3, 0.05, false).unwrap();
        assert!(raw.upper > 1.0 && !raw.clamped);
        let low = parametric_ci(0.01, 0.2, 3, 0.05).unwrap();
        assert_eq!(low.lower, 0.0);
    }

    #[test]
    fn parametric_errors() {
        assert!(matches!(parametric_ci(0.9, 0.1, 1, 0.05), Err(Error::DegreesOfFreedom(1))));
        assert!(matches!(parametric_ci(0.9, -0.1, 10, 0.05), Err(Error::Domain(_))));
        assert!(matches!(parametric_ci(1.2, 0.1, 10, 0.05), Err(Error::Domain(_))));
        assert!(matches!(parametric_ci(0.9, 0.1, 10, 0.0), Err(Error::Config(_))));
    }

    #[test]
    fn parametric_width_shrinks_with_n() {
        let mut prev = f64::INFINITY;
        for n in [2, 3, 5, 10, 30, 100, 1000, 10_000, 1_000_000] {
            let w = parametric_ci_with(0.5, 0.25, n, 0.05, false).unwrap().width();
            assert!(w < prev);
            prev = w;
        }
        assert!(prev < 1e-3);
        // 2 * 1.96 * 0.3 / 1000 ~ 1.18e-3 at sd = 0.3.
        let w = parametric_ci_with(0.5, 0.3, 1_000_000, 0.05, false).unwrap().width();
        assert!(w < 1.2e-3);
    }

    #[test]
    fn bootstrap_constant_sample() {
        let ci = bootstrap_ci(&[0.8; 25], 0.05, 1000, 3).unwrap();
        assert_eq!((ci.lower, ci.upper), (0.8, 0.8));
        assert_eq!(ci.method, CiMethod::BootstrapPercentile);
    }

    #[test]
    fn bootstrap_two_point_sample() {
        let ci = bootstrap_ci(&[0.0, 1.0], 0.05, 10_000, 42).unwrap();
        assert!(ci.lower >= 0.0 && ci.upper <= 1.0);
        assert!(ci.contains(0.5));
    }

    /// Straight-line resampling loop, kept separate from the parallel path.
    fn bootstrap_oracle(values: &[f64], alpha: f64, b: usize, seed: u64) -> (f64, f64) {
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mut means = Vec::with_capacity(b);
        for r in 0..b {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(r as u64);
            let mut s = 0.0;
            for _ in 0..sorted.len() {
                s += sorted[rng.random_range(0..sorted.len())];
            }
            means.push((s / sorted.len() as f64).clamp(sorted[0], sorted[sorted.len() - 1]));
        }
        means.sort_by(f64::total_cmp);
        let q = |p: f64| {
            let pos = (b - 1) as f64 * p;
            let (i, f) = (pos.floor() as usize, pos.fract());
            if f == 0.0 { means[i] } else { means[i] + (means[i + 1] - means[i]) * f }
        };
        (q(alpha / 2.0), q(1.0 - alpha / 2.0))
    }

    #[test]
    fn bootstrap_matches_sequential_oracle() {
        let values = beta_sample(9, 100);
        let ci = bootstrap_ci(&values, 0.05, 2000, 17).unwrap();
        assert_eq!((ci.lower, ci.upper), bootstrap_oracle(&values, 0.05, 2000, 17));
    }

    #[test]
    fn bootstrap_agrees_with_parametric_on_beta_sample() {
        let values = beta_sample(2024, 100);
        let boot = bootstrap_ci(&values, 0.05, 10_000, 7).unwrap();
        let s = crate::stats::summarize(&values).unwrap();
        let par = parametric_ci(s.mean, s.sd.unwrap(), values.len(), 0.05).unwrap();
        assert!((boot.lower - par.lower).abs() < 0.01);
        assert!((boot.upper - par.upper).abs() < 0.01);
        let cmp = compare_cis(&par, &boot).unwrap();
        assert!(cmp.width_diff.abs() < 0.01);
    }

    #[test]
    fn bootstrap_errors() {
        assert!(matches!(bootstrap_ci(&[], 0.05, 1000, 1), Err(Error::Domain(_))));
        assert!(matches!(bootstrap_ci(&[0.5], 0.05, 99, 1), Err(Error::Config(_))));
        assert!(matches!(bootstrap_ci(&[1.5], 0.05, 1000, 1), Err(Error::Domain(_))));
    }

    #[test]
    fn bootstrap_is_thread_count_independent() {
        let values = beta_sample(1, 60);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| bootstrap_ci(&values, 0.05, 5000, 99).unwrap())
        };
        let one = run(1);
        for threads in [2, 4, 7] {
            let other = run(threads);
            assert_eq!(one.lower.to_bits(), other.lower.to_bits());
            assert_eq!(one.upper.to_bits(), other.upper.to_bits());
        }
    }

    #[test]
    fn compare_examples() {
        let a = parametric_ci(0.9, 0.1, 40, 0.05).unwrap();
        let z = compare_cis(&a, &a).unwrap();
        assert_eq!((z.lower_diff, z.upper_diff, z.width_diff), (0.0, 0.0, 0.0));

        let mk = |lower, upper| ConfidenceInterval {
            lower,
            upper,
            alpha: 0.05,
            method: CiMethod::ParametricT,
            clamped: true,
        };
        let d = compare_cis(&mk(0.88, 0.92), &mk(0.87, 0.93)).unwrap();
        assert_abs_diff_eq!(d.width_diff, -0.02, epsilon = 1e-12);
        let mut other = mk(0.87, 0.93);
        other.alpha = 0.1;
        assert!(matches!(compare_cis(&mk(0.88, 0.92), &other), Err(Error::Config(_))));
    }

    proptest! {
        #[test]
        fn mean_inside_interval(mean in 0.0..=1.0f64, sd in 0.0..0.5f64, n in 2usize..500, clamp in any::<bool>()) {
            let ci = parametric_ci_with(mean, sd, n, 0.05, clamp).unwrap();
            prop_assert!(ci.lower <= mean && mean <= ci.upper);
            if clamp {
                prop_assert!(0.0 <= ci.lower && ci.upper <= 1.0);
            }
        }

        #[test]
        fn width_is_linear_in_sd(sd in 1e-4..0.5f64, k in 0.1..10.0f64, n in 2usize..500) {
            let w1 = parametric_ci_with(0.5, sd, n, 0.05, false).unwrap().width();
            let wk = parametric_ci_with(0.5, sd * k, n, 0.05, false).unwrap().width();
            prop_assert!((wk - k * w1).abs() <= 1e-12 * wk.max(1.0));
        }

        #[test]
        fn bootstrap_permutation_invariant_and_bounded(values in prop::collection::vec(0.0..=1.0f64, 1..40), seed in any::<u64>()) {
            let mut reversed = values.clone();
            reversed.reverse();
            let a = bootstrap_ci(&values, 0.05, 200, seed).unwrap();
            let b = bootstrap_ci(&reversed, 0.05, 200, seed).unwrap();
            prop_assert_eq!(a, b);
            let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(lo <= a.lower && a.upper <= hi);
        }
    }
}
