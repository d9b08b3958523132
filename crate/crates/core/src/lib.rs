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

//! Reconstruction of confidence intervals for segmentation performance from
//! what publications report: mean Dice score and test-set size.
//!
//! The pieces:
//!
//! - [`stats`]: log-gamma, incomplete beta, Student-t quantiles, summaries.
//! - [`glm`]: Gamma/log-link GLM that predicts SD from mean Dice.
//! - [`ci`]: parametric t intervals and percentile bootstrap intervals.
//! - [`calibration`]: predicted versus observed CI widths.
//! - [`corpus`]: leader CI against runner-up gap, per paper and in aggregate.
//! - [`synth`]: seeded synthetic results and corpora.
//! - [`io`]: CSV and JSON formats.

pub mod calibration;
pub mod ci;
pub mod corpus;
pub mod error;
pub mod glm;
pub mod io;
pub mod stats;
pub mod synth;

pub use calibration::{calibrate, export_calibration_points, CalibrationInput, CalibrationRecord, CalibrationSummary};
pub use ci::{approximate_sd, bootstrap_ci, compare_cis, parametric_ci, AggregateReport, CiMethod, ConfidenceInterval};
pub use corpus::{analyze_corpus, analyze_paper, rank_methods, AnalysisConfig, MethodResult, PaperRecord};
pub use error::{Error, Result};
pub use glm::{fit_gamma_log_glm, predict_sd_pct, GlmFit, ModelDocument, SdModel, TrainingPair, PAPER_COEFFICIENTS};
pub use stats::{ln_gamma, regularized_incomplete_beta, summarize, t_quantile, SampleSummary};
