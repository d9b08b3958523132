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

//! Seeded synthetic stand-ins for per-case challenge results and for
//! publication corpora.
//!
//! Every (task, method) group and every synthetic paper draws from its own
//! ChaCha8 stream selected by index, so output depends only on the seed and
//! the `SimSpec`, never on scheduling.

use std::collections::BTreeMap;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::calibration::CalibrationInput;
use crate::corpus::{MethodResult, PaperRecord};
use crate::error::{Error, Result};
use crate::glm::{SdModel, TrainingPair, PAPER_COEFFICIENTS};
use crate::stats::{mean, sample_sd};

/// Per-case distribution of Dice scores.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Family {
    Constant { value: f64 },
    /// The same Beta(a, b) for every group.
    Beta { a: f64, b: f64 },
    /// Each group draws its mean uniformly from `[mean_lo, mean_hi]` and
    /// takes its SD from the given model; cases are Beta with those moments.
    ModelBeta {
        coefficients: [f64; 3],
        mean_lo: f64,
        mean_hi: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSpec {
    pub n_tasks: usize,
    pub methods_per_task: usize,
    pub cases_per_task: usize,
    pub family: Family,
    pub seed: u64,
    /// Zero-based (task, method) groups to leave out.
    #[serde(default)]
    pub exclude: Vec<(usize, usize)>,
}

impl Default for SimSpec {
    fn default() -> Self {
        Self {
            n_tasks: 10,
            methods_per_task: 19,
            cases_per_task: 50,
            family: Family::ModelBeta {
                coefficients: PAPER_COEFFICIENTS,
                mean_lo: 0.35,
                mean_hi: 0.95,
            },
            seed: 42,
            exclude: Vec::new(),
        }
    }
}

impl SimSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_tasks == 0 || self.methods_per_task == 0 || self.cases_per_task == 0 {
            return Err(Error::config("task, method and case counts must be >= 1"));
        }
        match self.family {
            Family::Constant { value } if !(0.0..=1.0).contains(&value) => {
                Err(Error::config(format!("constant DSC must lie in [0, 1], got {value}")))
            }
            Family::Beta { a, b } if !(a > 0.0 && b > 0.0) => {
                Err(Error::config(format!("beta parameters must be > 0, got ({a}, {b})")))
            }
            Family::ModelBeta { mean_lo, mean_hi, .. }
                if !(0.0 < mean_lo && mean_lo <= mean_hi && mean_hi < 1.0) =>
            {
                Err(Error::config(format!(
                    "model-beta mean range must satisfy 0 < lo <= hi < 1, got [{mean_lo}, {mean_hi}]"
                )))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseRow {
    pub task_id: String,
    pub method_id: String,
    pub case_id: usize,
    pub dsc: f64,
}

pub fn task_id(task: usize) -> String {
    format!("task{:02}", task + 1)
}

pub fn method_id(method: usize) -> String {
    format!("method{:02}", method + 1)
}

fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Marsaglia–Tsang Gamma(shape, 1) variate.
pub fn sample_gamma<R: RngCore + ?Sized>(shape: f64, rng: &mut R) -> Result<f64> {
    if !(shape > 0.0) || !shape.is_finite() {
        return Err(Error::domain(format!("gamma shape must be > 0, got {shape}")));
    }
    if shape < 1.0 {
        let boost = rng.random::<f64>().powf(1.0 / shape);
        return Ok(sample_gamma(shape + 1.0, rng)? * boost);
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x: f64 = rng.sample(StandardNormal);
        let v = 1.0 + c * x;
        if v <= 0.0 {
            continue;
        }
        let v = v * v * v;
        let u: f64 = rng.random();
        let x2 = x * x;
        if u < 1.0 - 0.0331 * x2 * x2 || u.ln() < 0.5 * x2 + d * (1.0 - v + v.ln()) {
            return Ok(d * v);
        }
    }
}

/// Beta(a, b) variate as X / (X + Y) with independent Gamma draws.
pub fn sample_beta<R: RngCore + ?Sized>(a: f64, b: f64, rng: &mut R) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::domain(format!("beta parameters must be > 0, got ({a}, {b})")));
    }
    let x = sample_gamma(a, rng)?;
    let y = sample_gamma(b, rng)?;
    Ok(x / (x + y))
}

/// Beta parameters with the given mean and SD. The variance is capped
/// below the two-point bound `m (1 - m)`.
pub fn beta_from_moments(m: f64, sd: f64) -> (f64, f64) {
    let bound = m * (1.0 - m);
    let var = (sd * sd).min(0.95 * bound).max(1e-12);
    let nu = bound / var - 1.0;
    (m * nu, (1.0 - m) * nu)
}

enum Sampler {
    Constant(f64),
    Beta(f64, f64),
}

impl Sampler {
    fn draw<R: RngCore>(&self, rng: &mut R) -> Result<f64> {
        match *self {
            Sampler::Constant(v) => Ok(v),
            Sampler::Beta(a, b) => sample_beta(a, b, rng),
        }
    }
}

pub fn generate_results(spec: &SimSpec) -> Result<Vec<CaseRow>> {
    spec.validate()?;
    let groups: Vec<(usize, usize)> = (0..spec.n_tasks)
        .flat_map(|t| (0..spec.methods_per_task).map(move |m| (t, m)))
        .filter(|g| !spec.exclude.contains(g))
        .collect();

    let blocks = groups
        .par_iter()
        .map(|&(t, m)| {
            let index = (t * spec.methods_per_task + m) as u64;
            let mut rng = stream(spec.seed, index);
            let sampler = match spec.family {
                Family::Constant { value } => Sampler::Constant(value),
                Family::Beta { a, b } => Sampler::Beta(a, b),
                Family::ModelBeta {
                    coefficients,
                    mean_lo,
                    mean_hi,
                } => {
                    let group_mean = rng.random_range(mean_lo..=mean_hi);
                    let sd = SdModel::new(coefficients).sd_fraction(group_mean)?;
                    let (a, b) = beta_from_moments(group_mean, sd);
                    Sampler::Beta(a, b)
                }
            };
            (0..spec.cases_per_task)
                .map(|case| {
                    Ok(CaseRow {
                        task_id: task_id(t),
                        method_id: method_id(m),
                        case_id: case + 1,
                        dsc: sampler.draw(&mut rng)?,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(blocks.into_iter().flatten().collect())
}

fn group_values(rows: &[CaseRow]) -> BTreeMap<(&str, &str), Vec<f64>> {
    let mut groups: BTreeMap<(&str, &str), Vec<f64>> = BTreeMap::new();
    for row in rows {
        groups
            .entry((row.task_id.as_str(), row.method_id.as_str()))
            .or_default()
            .push(row.dsc);
    }
    groups
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainingSet {
    pub pairs: Vec<TrainingPair>,
    pub n_groups: usize,
    /// Groups whose sample SD was exactly zero.
    pub dropped_zero_sd: usize,
    /// Groups with fewer than two cases.
    pub skipped_small: usize,
}

/// One (mean, SD) pair per (task, method) group, in percent, ordered by
/// (task_id, method_id).
pub fn make_training_pairs(rows: &[CaseRow]) -> Result<TrainingSet> {
    let groups = group_values(rows);
    let mut set = TrainingSet {
        n_groups: groups.len(),
        ..Default::default()
    };
    for values in groups.values() {
        let Some(sd) = sample_sd(values) else {
            set.skipped_small += 1;
            continue;
        };
        if sd == 0.0 {
            set.dropped_zero_sd += 1;
            continue;
        }
        set.pairs.push(TrainingPair::new(mean(values) * 100.0, sd * 100.0)?);
    }
    Ok(set)
}

/// Per-group observed summaries suitable for calibration; groups with fewer
/// than two cases are skipped.
pub fn group_summaries(rows: &[CaseRow]) -> Vec<CalibrationInput> {
    group_values(rows)
        .into_iter()
        .filter_map(|((task, method), values)| {
            Some(CalibrationInput {
                task_id: task.to_string(),
                method_id: method.to_string(),
                n: values.len(),
                mean_dsc: mean(&values),
                observed_sd: sample_sd(&values)?,
            })
        })
        .collect()
}

/// Shape of a synthetic publication corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSpec {
    pub n_papers: usize,
    pub seed: u64,
    /// Uniform range of the best method's mean DSC.
    pub lead_mean: (f64, f64),
    /// Log-uniform range of test-set sizes.
    pub test_n: (usize, usize),
    /// Inclusive range of methods per paper.
    pub methods: (usize, usize),
    /// Mean of the exponential gap between consecutive methods.
    pub gap_mean: f64,
    /// Decimal places reported for mean DSC values.
    pub decimals: u32,
    /// Probability a method also reports its SD.
    pub reported_sd_rate: f64,
    pub coefficients: [f64; 3],
}

impl CorpusSpec {
    /// Parameters of the bundled 77-paper demo corpus.
    pub fn demo() -> Self {
        Self {
            n_papers: 77,
            seed: 7,
            lead_mean: (0.70, 0.95),
            test_n: (40, 1500),
            methods: (2, 6),
            gap_mean: 0.015,
            decimals: 3,
            reported_sd_rate: 0.0,
            coefficients: PAPER_COEFFICIENTS,
        }
    }
}

pub fn generate_corpus(spec: &CorpusSpec) -> Result<Vec<PaperRecord>> {
    let (lo, hi) = spec.test_n;
    if spec.n_papers == 0 || lo < 2 || hi < lo {
        return Err(Error::config("corpus needs >= 1 paper and 2 <= test_n.0 <= test_n.1"));
    }
    if spec.methods.0 == 0 || spec.methods.1 < spec.methods.0 {
        return Err(Error::config("corpus method range must satisfy 1 <= min <= max"));
    }
    if !(spec.gap_mean > 0.0) {
        return Err(Error::config("gap mean must be > 0"));
    }
    let model = SdModel::new(spec.coefficients);
    let scale = 10f64.powi(spec.decimals as i32);
    let round = |v: f64| ((v * scale).round() / scale).clamp(0.0, 1.0);

    (0..spec.n_papers)
        .map(|i| {
            let mut rng = stream(spec.seed, i as u64);
            let log_n = rng.random_range((lo as f64).ln()..=(hi as f64).ln());
            let test_n = (log_n.exp().round() as usize).clamp(lo, hi);
            let n_methods = rng.random_range(spec.methods.0..=spec.methods.1);
            let mut current = rng.random_range(spec.lead_mean.0..=spec.lead_mean.1);
            let mut methods = Vec::with_capacity(n_methods);
            for k in 0..n_methods {
                if k > 0 {
                    let u: f64 = rng.random();
                    current -= -spec.gap_mean * (1.0 - u).ln();
                }
                let mean_dsc = round(current.max(0.0));
                let reported_sd = if rng.random::<f64>() < spec.reported_sd_rate {
                    let noise = rng.random_range(0.7..=1.3);
                    Some(model.sd_fraction(mean_dsc)? * noise)
                } else {
                    None
                };
                methods.push(MethodResult {
                    method_id: format!("m{}", k + 1),
                    mean_dsc,
                    reported_sd,
                });
            }
            Ok(PaperRecord {
                paper_id: format!("paper{:03}", i + 1),
                test_n,
                methods,
            })
        })
        .collect()
}
