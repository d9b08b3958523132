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

//! Gamma-family GLM with log link, fitted by iteratively reweighted least
//! squares, expressing the per-method SD of the Dice score as an
//! exponentiated quadratic of the mean Dice score (both in percent).

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Coefficients `[b0, b1, b2]` of the published SD model, percent scale.
pub const PAPER_COEFFICIENTS: [f64; 3] = [2.0310, 0.0726, -0.0008];

const PAPER_MODEL_JSON: &str = include_str!("../data/paper_model.json");

/// One training observation: mean Dice and SD of Dice for a method on a
/// task, both in percentage points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingPair {
    pub dsc_mean_pct: f64,
    pub sd_pct: f64,
}

impl TrainingPair {
    pub fn new(dsc_mean_pct: f64, sd_pct: f64) -> Result<Self> {
        if !(0.0..=100.0).contains(&dsc_mean_pct) {
            return Err(Error::domain(format!(
                "mean DSC must lie in [0, 100] percent, got {dsc_mean_pct}"
            )));
        }
        if !(sd_pct > 0.0) || !sd_pct.is_finite() {
            return Err(Error::domain(format!(
                "Gamma response must be positive, got SD {sd_pct}"
            )));
        }
        Ok(Self {
            dsc_mean_pct,
            sd_pct,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IrlsConfig {
    pub max_iterations: usize,
    /// Relative deviance change below which the fit is declared converged.
    pub tolerance: f64,
    /// Bound on `max_k |sum_i X_ik (y_i - mu_i) / mu_i| / n`, checked
    /// together with the deviance criterion.
    pub score_tolerance: f64,
    /// Lower bound on fitted means.
    pub mu_floor: f64,
}

impl Default for IrlsConfig {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            tolerance: 1e-8,
            score_tolerance: 1e-7,
            mu_floor: 1e-6,
        }
    }
}

/// Result of a Gamma/log-link IRLS fit on an arbitrary design matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct IrlsOutcome {
    pub coefficients: Vec<f64>,
    pub fitted: Vec<f64>,
    pub deviance: f64,
    /// Pearson dispersion; `None` when there are no residual degrees of freedom.
    pub dispersion: Option<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Fitted quadratic SD model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlmFit {
    pub coefficients: [f64; 3],
    pub dispersion: f64,
    pub deviance: f64,
    pub iterations: usize,
    pub converged: bool,
    pub n_obs: usize,
}

/// Gamma unit deviance summed over observations.
pub fn gamma_deviance(y: &[f64], mu: &[f64]) -> f64 {
    2.0 * y
        .iter()
        .zip(mu)
        .map(|(&y, &m)| -(y / m).ln() + (y - m) / m)
        .sum::<f64>()
}

/// Least-squares solver for a fixed design, with column equilibration and
/// a rank check on the triangular factor.
struct LeastSquares {
    q_t: DMatrix<f64>,
    r: DMatrix<f64>,
    column_scale: Vec<f64>,
}

impl LeastSquares {
    const RANK_TOL: f64 = 1e-10;

    fn new(design: &DMatrix<f64>) -> Result<Self> {
        let mut scaled = design.clone();
        let mut column_scale = Vec::with_capacity(design.ncols());
        for mut col in scaled.column_iter_mut() {
            let norm = col.norm();
            if norm == 0.0 {
                return Err(Error::RankDeficient("design has an all-zero column".into()));
            }
            col /= norm;
            column_scale.push(norm);
        }
        let qr = scaled.qr();
        let r = qr.r();
        let diag: Vec<f64> = r.diagonal().iter().map(|v| v.abs()).collect();
        let max = diag.iter().cloned().fold(0.0, f64::max);
        if let Some(k) = diag.iter().position(|&d| d <= Self::RANK_TOL * max) {
            return Err(Error::RankDeficient(format!(
                "column {k} is linearly dependent on the preceding columns"
            )));
        }
        Ok(Self {
            q_t: qr.q().transpose(),
            r,
            column_scale,
        })
    }

    fn solve(&self, rhs: &DVector<f64>) -> Result<DVector<f64>> {
        let mut beta = self
            .r
            .solve_upper_triangular(&(&self.q_t * rhs))
            .ok_or_else(|| Error::RankDeficient("singular normal equations".into()))?;
        for (b, s) in beta.iter_mut().zip(&self.column_scale) {
            *b /= s;
        }
        Ok(beta)
    }
}

/// Fits `ln E[y] = X beta` with Gamma-distributed `y`.
///
/// For this family and link the IRLS working weights are constant, so each
/// step is an ordinary least-squares solve on the working response
/// `z = eta + (y - mu) / mu`.
pub fn fit_gamma_log(design: &DMatrix<f64>, y: &[f64], config: &IrlsConfig) -> Result<IrlsOutcome> {
    let n = y.len();
    let p = design.ncols();
    if design.nrows() != n {
        return Err(Error::config(format!(
            "design has {} rows but response has {n} values",
            design.nrows()
        )));
    }
    if n < p {
        return Err(Error::InsufficientData { needed: p, got: n });
    }
    if let Some(bad) = y.iter().find(|v| !(**v > 0.0) || !v.is_finite()) {
        return Err(Error::domain(format!("Gamma response must be positive, got {bad}")));
    }

    let solver = LeastSquares::new(design)?;
    let mut mu: Vec<f64> = y.iter().map(|v| v.max(config.mu_floor)).collect();
    let mut eta: Vec<f64> = mu.iter().map(|m| m.ln()).collect();
    let mut deviance_old = gamma_deviance(y, &mu);
    let mut beta = DVector::zeros(p);
    let mut deviance = deviance_old;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < config.max_iterations {
        iterations += 1;
        let z = DVector::from_iterator(
            n,
            eta.iter().zip(&mu).zip(y).map(|((e, m), y)| e + (y - m) / m),
        );
        beta = solver.solve(&z)?;
        let linear = design * &beta;
        eta = linear.iter().copied().collect();
        mu = eta.iter().map(|e| e.exp().max(config.mu_floor)).collect();
        deviance = gamma_deviance(y, &mu);
        if !deviance.is_finite() {
            break;
        }
        if (deviance - deviance_old).abs() / (deviance + 1e-10) < config.tolerance
            && max_score(design, y, &mu) <= config.score_tolerance * n as f64
        {
            converged = true;
            break;
        }
        deviance_old = deviance;
    }

    let dispersion = (n > p).then(|| {
        y.iter()
            .zip(&mu)
            .map(|(y, m)| ((y - m) / m).powi(2))
            .sum::<f64>()
            / (n - p) as f64
    });

    Ok(IrlsOutcome {
        coefficients: beta.iter().copied().collect(),
        fitted: mu,
        deviance,
        dispersion,
        iterations,
        converged,
    })
}

/// Largest absolute component of the score `X' (y - mu) / mu`.
fn max_score(design: &DMatrix<f64>, y: &[f64], mu: &[f64]) -> f64 {
    let r = DVector::from_iterator(y.len(), y.iter().zip(mu).map(|(y, m)| (y - m) / m));
    (design.transpose() * r).amax()
}

/// Design matrix with columns `1, x, x^2`.
pub fn quadratic_design(x: &[f64]) -> DMatrix<f64> {
    DMatrix::from_fn(x.len(), 3, |i, j| x[i].powi(j as i32))
}

pub fn fit_gamma_log_glm(data: &[TrainingPair]) -> Result<GlmFit> {
    fit_gamma_log_glm_with(data, &IrlsConfig::default())
}

pub fn fit_gamma_log_glm_with(data: &[TrainingPair], config: &IrlsConfig) -> Result<GlmFit> {
    const MIN_PAIRS: usize = 4;
    if data.len() < MIN_PAIRS {
        return Err(Error::InsufficientData {
            needed: MIN_PAIRS,
            got: data.len(),
        });
    }
    for pair in data {
        TrainingPair::new(pair.dsc_mean_pct, pair.sd_pct)?;
    }
    let x: Vec<f64> = data.iter().map(|p| p.dsc_mean_pct).collect();
    let y: Vec<f64> = data.iter().map(|p| p.sd_pct).collect();
    let outcome = fit_gamma_log(&quadratic_design(&x), &y, config)?;
    let c = &outcome.coefficients;
    Ok(GlmFit {
        coefficients: [c[0], c[1], c[2]],
        dispersion: outcome.dispersion.unwrap_or(f64::NAN),
        deviance: outcome.deviance,
        iterations: outcome.iterations,
        converged: outcome.converged,
        n_obs: data.len(),
    })
}

/// Largest SD a variable bounded on [0, 100] can have at mean `x`
/// (two-point distribution on the bounds).
pub fn sd_upper_bound_pct(x: f64) -> f64 {
    (x * (100.0 - x)).max(0.0).sqrt()
}

/// Evaluates `exp(b0 + b1 x + b2 x^2)` at mean Dice `x` in percent,
/// optionally capped at [`sd_upper_bound_pct`].
pub fn predict_sd_pct(coefficients: &[f64; 3], dsc_mean_pct: f64, clamp: bool) -> Result<f64> {
    if !(0.0..=100.0).contains(&dsc_mean_pct) {
        return Err(Error::domain(format!(
            "mean DSC must lie in [0, 100] percent, got {dsc_mean_pct}"
        )));
    }
    let x = dsc_mean_pct;
    let [b0, b1, b2] = *coefficients;
    let sd = (b0 + b1 * x + b2 * x * x).exp();
    Ok(if clamp { sd.min(sd_upper_bound_pct(x)) } else { sd })
}

/// SD model used to fill in unreported variability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdModel {
    pub coefficients: [f64; 3],
    /// Cap predictions at the bound for a [0, 100]-valued variable.
    pub clamp: bool,
}

impl SdModel {
    pub fn new(coefficients: [f64; 3]) -> Self {
        Self {
            coefficients,
            clamp: true,
        }
    }

    pub fn paper() -> Self {
        Self::new(PAPER_COEFFICIENTS)
    }

    pub fn with_clamp(mut self, clamp: bool) -> Self {
        self.clamp = clamp;
        self
    }

    pub fn sd_pct(&self, dsc_mean_pct: f64) -> Result<f64> {
        predict_sd_pct(&self.coefficients, dsc_mean_pct, self.clamp)
    }

    /// Predicted SD on the fraction scale for a mean Dice in [0, 1].
    pub fn sd_fraction(&self, mean_dsc: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&mean_dsc) {
            return Err(Error::domain(format!("mean DSC must lie in [0, 1], got {mean_dsc}")));
        }
        Ok(self.sd_pct(mean_dsc * 100.0)? / 100.0)
    }
}

impl From<[f64; 3]> for SdModel {
    fn from(coefficients: [f64; 3]) -> Self {
        Self::new(coefficients)
    }
}

impl From<&GlmFit> for SdModel {
    fn from(fit: &GlmFit) -> Self {
        Self::new(fit.coefficients)
    }
}

impl From<&ModelDocument> for SdModel {
    fn from(doc: &ModelDocument) -> Self {
        Self::new(doc.coefficients)
    }
}

/// On-disk form of a fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub coefficients: [f64; 3],
    pub dispersion: Option<f64>,
    pub scale: String,
    pub n_obs: Option<usize>,
    pub converged: Option<bool>,
}

impl ModelDocument {
    pub const SCALE: &'static str = "percent";

    /// The published coefficients shipped with the crate.
    pub fn paper() -> Self {
        Self::from_json(PAPER_MODEL_JSON).expect("bundled model file is valid")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDocument = serde_json::from_str(text)?;
        if doc.scale != Self::SCALE {
            return Err(Error::config(format!(
                "unsupported model scale {:?}, expected {:?}",
                doc.scale,
                Self::SCALE
            )));
        }
        if doc.coefficients.iter().any(|c| !c.is_finite()) {
            return Err(Error::config("model coefficients must be finite"));
        }
        Ok(doc)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model document serializes")
    }
}

impl From<&GlmFit> for ModelDocument {
    fn from(fit: &GlmFit) -> Self {
        Self {
            coefficients: fit.coefficients,
            dispersion: fit.dispersion.is_finite().then_some(fit.dispersion),
            scale: Self::SCALE.to_string(),
            n_obs: Some(fit.n_obs),
            converged: Some(fit.converged),
        }
    }
}
