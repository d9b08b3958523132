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

//! Corpus analysis: per publication, how the gap between the two best
//! methods compares with the reconstructed CI of the best one.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ci::{parametric_ci_with, resolve_sd, AggregateReport, ConfidenceInterval, SdSource, DEFAULT_ALPHA};
use crate::error::{Error, Result};
use crate::glm::SdModel;
use crate::stats::{quantile_sorted, sorted_copy};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    pub method_id: String,
    pub mean_dsc: f64,
    pub reported_sd: Option<f64>,
}

/// One publication's comparison table. All methods share `test_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaperRecord {
    pub paper_id: String,
    pub test_n: usize,
    pub methods: Vec<MethodResult>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisConfig {
    pub alpha: f64,
    pub clamp_ci: bool,
    /// Use a method's reported SD instead of the model when available.
    pub prefer_reported_sd: bool,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
            clamp_ci: true,
            prefer_reported_sd: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PaperAnalysis {
    pub paper_id: String,
    pub test_n: usize,
    pub first: String,
    pub first_mean: f64,
    pub second: Option<String>,
    pub second_mean: Option<f64>,
    pub delta_dsc: Option<f64>,
    pub sd_used: f64,
    pub sd_source: SdSource,
    pub ci_first: ConfidenceInterval,
    pub second_within_ci: Option<bool>,
    pub ratio_delta_over_width: Option<f64>,
}

/// Five-number summary of one boxplot panel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxplotStats {
    pub n: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl BoxplotStats {
    pub fn from_values(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let s = sorted_copy(values);
        Some(Self {
            n: s.len(),
            min: s[0],
            q1: quantile_sorted(&s, 0.25),
            median: quantile_sorted(&s, 0.5),
            q3: quantile_sorted(&s, 0.75),
            max: s[s.len() - 1],
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub n_papers: usize,
    /// Papers with at least two methods.
    pub n_with_runner_up: usize,
    pub n_second_within_ci: usize,
    /// Share of papers with a runner-up whose runner-up mean lies in the
    /// leader's CI.
    pub overlap_fraction: Option<f64>,
    /// CI width of the first-ranked method, all papers.
    pub ci_width: BoxplotStats,
    pub delta_dsc: Option<BoxplotStats>,
    pub ratio_delta_over_width: Option<BoxplotStats>,
    /// Median CI width divided by median delta DSC.
    pub median_width_over_median_delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusAnalysis {
    pub summary: CorpusSummary,
    /// Sorted by `paper_id`.
    pub papers: Vec<PaperAnalysis>,
}

/// Methods by descending mean DSC; ties keep input order.
pub fn rank_methods(paper: &PaperRecord) -> Vec<MethodResult> {
    let mut ranked = paper.methods.clone();
    ranked.sort_by(|a, b| b.mean_dsc.total_cmp(&a.mean_dsc));
    ranked
}

pub fn analyze_paper(paper: &PaperRecord, model: &SdModel, config: &AnalysisConfig) -> Result<PaperAnalysis> {
    if paper.test_n < 2 {
        return Err(Error::DegreesOfFreedom(paper.test_n));
    }
    if paper.methods.is_empty() {
        return Err(Error::domain(format!("paper {} lists no methods", paper.paper_id)));
    }
    let ranked = rank_methods(paper);
    let first = &ranked[0];
    let report = AggregateReport::new(first.mean_dsc, paper.test_n, first.reported_sd)?;
    let (sd_used, sd_source) = resolve_sd(&report, model, !config.prefer_reported_sd)?;
    let ci_first = parametric_ci_with(first.mean_dsc, sd_used, paper.test_n, config.alpha, config.clamp_ci)?;

    let second = ranked.get(1);
    if let Some(s) = second {
        AggregateReport::new(s.mean_dsc, paper.test_n, s.reported_sd)?;
    }
    let delta_dsc = second.map(|s| first.mean_dsc - s.mean_dsc);
    let width = ci_first.width();
    Ok(PaperAnalysis {
        paper_id: paper.paper_id.clone(),
        test_n: paper.test_n,
        first: first.method_id.clone(),
        first_mean: first.mean_dsc,
        second: second.map(|s| s.method_id.clone()),
        second_mean: second.map(|s| s.mean_dsc),
        delta_dsc,
        sd_used,
        sd_source,
        ci_first,
        second_within_ci: second.map(|s| ci_first.contains(s.mean_dsc)),
        ratio_delta_over_width: delta_dsc.filter(|_| width > 0.0).map(|d| d / width),
    })
}

pub fn analyze_corpus(papers: &[PaperRecord], model: &SdModel, config: &AnalysisConfig) -> Result<CorpusAnalysis> {
    if papers.is_empty() {
        return Err(Error::domain("corpus contains no papers"));
    }
    let mut seen = HashSet::new();
    for p in papers {
        if !seen.insert(p.paper_id.as_str()) {
            return Err(Error::domain(format!("duplicate paper id {:?}", p.paper_id)));
        }
    }

    let mut analyses = papers
        .par_iter()
        .map(|p| analyze_paper(p, model, config))
        .collect::<Result<Vec<_>>>()?;
    analyses.sort_by(|a, b| a.paper_id.cmp(&b.paper_id));

    let widths: Vec<f64> = analyses.iter().map(|a| a.ci_first.width()).collect();
    let deltas: Vec<f64> = analyses.iter().filter_map(|a| a.delta_dsc).collect();
    let ratios: Vec<f64> = analyses.iter().filter_map(|a| a.ratio_delta_over_width).collect();
    let n_second_within_ci = analyses.iter().filter(|a| a.second_within_ci == Some(true)).count();

    let ci_width = BoxplotStats::from_values(&widths).expect("corpus is nonempty");
    let delta_dsc = BoxplotStats::from_values(&deltas);
    let median_width_over_median_delta = delta_dsc
        .filter(|d| d.median > 0.0)
        .map(|d| ci_width.median / d.median);

    Ok(CorpusAnalysis {
        summary: CorpusSummary {
            n_papers: analyses.len(),
            n_with_runner_up: deltas.len(),
            n_second_within_ci,
            overlap_fraction: (!deltas.is_empty()).then(|| n_second_within_ci as f64 / deltas.len() as f64),
            ci_width,
            delta_dsc,
            ratio_delta_over_width: BoxplotStats::from_values(&ratios),
            median_width_over_median_delta,
        },
        papers: analyses,
    })
}
