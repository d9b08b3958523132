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

//! External validation of the SD model: CI widths computed from observed
//! SDs against widths computed from model-predicted SDs.

use serde::{Deserialize, Serialize};

use crate::ci::{check_alpha, half_width};
use crate::error::{Error, Result};
use crate::glm::SdModel;
use crate::stats::{quantile_sorted, sorted_copy};

/// Records with `n <= DEFAULT_MIN_N` are left out of the summary.
pub const DEFAULT_MIN_N: usize = 20;

/// One observed (task, method) result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationInput {
    pub task_id: String,
    pub method_id: String,
    pub n: usize,
    pub mean_dsc: f64,
    pub observed_sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRecord {
    pub task_id: String,
    pub method_id: String,
    pub n: usize,
    pub mean_dsc: f64,
    pub observed_sd: f64,
    pub predicted_sd: f64,
    pub observed_width: f64,
    pub predicted_width: f64,
}

impl CalibrationRecord {
    /// Observed minus predicted CI width.
    pub fn width_diff(&self) -> f64 {
        self.observed_width - self.predicted_width
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSummary {
    pub n_records: usize,
    pub n_after_filter: usize,
    pub min_n_filter: usize,
    /// No record survived the `n > min_n_filter` filter.
    pub empty: bool,
    pub median_width_diff: Option<f64>,
    pub iqr_width_diff: Option<(f64, f64)>,
    pub median_abs_width_diff: Option<f64>,
    pub iqr_abs_width_diff: Option<(f64, f64)>,
}

/// Scatter point for the predicted-versus-observed width plot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationPoint {
    pub predicted_width: f64,
    pub observed_width: f64,
    pub n: usize,
}

/// Axis description accompanying exported points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlotSpec {
    pub x: String,
    pub y: String,
    /// Reference line `y = x`.
    pub identity_line: bool,
}

impl Default for PlotSpec {
    fn default() -> Self {
        Self {
            x: "predicted_width".into(),
            y: "observed_width".into(),
            identity_line: true,
        }
    }
}

fn median_iqr(values: &[f64]) -> (f64, (f64, f64)) {
    let sorted = sorted_copy(values);
    (
        quantile_sorted(&sorted, 0.5),
        (quantile_sorted(&sorted, 0.25), quantile_sorted(&sorted, 0.75)),
    )
}

pub fn calibrate(
    results: &[CalibrationInput],
    model: &SdModel,
    alpha: f64,
    min_n: usize,
) -> Result<(Vec<CalibrationRecord>, CalibrationSummary)> {
    if results.is_empty() {
        return Err(Error::domain("calibration needs at least one result"));
    }
    check_alpha(alpha)?;

    let records = results
        .iter()
        .map(|r| {
            if !(r.observed_sd >= 0.0) || !r.observed_sd.is_finite() {
                return Err(Error::domain(format!(
                    "{}/{}: observed SD must be >= 0, got {}",
                    r.task_id, r.method_id, r.observed_sd
                )));
            }
            let predicted_sd = model.sd_fraction(r.mean_dsc)?;
            Ok(CalibrationRecord {
                task_id: r.task_id.clone(),
                method_id: r.method_id.clone(),
                n: r.n,
                mean_dsc: r.mean_dsc,
                observed_sd: r.observed_sd,
                predicted_sd,
                observed_width: 2.0 * half_width(r.observed_sd, r.n, alpha)?,
                predicted_width: 2.0 * half_width(predicted_sd, r.n, alpha)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let diffs: Vec<f64> = records
        .iter()
        .filter(|r| r.n > min_n)
        .map(CalibrationRecord::width_diff)
        .collect();
    let mut summary = CalibrationSummary {
        n_records: records.len(),
        n_after_filter: diffs.len(),
        min_n_filter: min_n,
        empty: diffs.is_empty(),
        median_width_diff: None,
        iqr_width_diff: None,
        median_abs_width_diff: None,
        iqr_abs_width_diff: None,
    };
    if !diffs.is_empty() {
        let (median, iqr) = median_iqr(&diffs);
        let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
        let (abs_median, abs_iqr) = median_iqr(&abs);
        summary.median_width_diff = Some(median);
        summary.iqr_width_diff = Some(iqr);
        summary.median_abs_width_diff = Some(abs_median);
        summary.iqr_abs_width_diff = Some(abs_iqr);
    }
    Ok((records, summary))
}

pub fn export_calibration_points(records: &[CalibrationRecord]) -> Vec<CalibrationPoint> {
    records
        .iter()
        .map(|r| CalibrationPoint {
            predicted_width: r.predicted_width,
            observed_width: r.observed_width,
            n: r.n,
        })
        .collect()
}
