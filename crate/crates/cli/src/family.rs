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

//! Parsing of `--family` and `--exclude` values.

use ci_recon::glm::PAPER_COEFFICIENTS;
use ci_recon::synth::Family;

fn numbers(text: &str) -> Result<Vec<f64>, String> {
    text.split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("bad number {p:?}: {e}")))
        .collect()
}

pub fn parse(text: &str) -> Result<Family, String> {
    let (name, params) = match text.split_once(':') {
        Some((n, p)) => (n, Some(p)),
        None => (text, None),
    };
    match (name, params) {
        ("constant", Some(p)) => match numbers(p)?.as_slice() {
            [value] => Ok(Family::Constant { value: *value }),
            _ => Err("constant takes one value, e.g. constant:0.8".into()),
        },
        ("beta", Some(p)) => match numbers(p)?.as_slice() {
            [a, b] => Ok(Family::Beta { a: *a, b: *b }),
            _ => Err("beta takes two parameters, e.g. beta:8,2".into()),
        },
        ("model-beta", None) => Ok(Family::ModelBeta {
            coefficients: PAPER_COEFFICIENTS,
            mean_lo: 0.35,
            mean_hi: 0.95,
        }),
        ("model-beta", Some(p)) => match numbers(p)?.as_slice() {
            [lo, hi] => Ok(Family::ModelBeta {
                coefficients: PAPER_COEFFICIENTS,
                mean_lo: *lo,
                mean_hi: *hi,
            }),
            _ => Err("model-beta takes a mean range, e.g. model-beta:0.4,0.9".into()),
        },
        _ => Err(format!("unknown family {text:?}; expected constant:C, beta:A,B or model-beta[:LO,HI]")),
    }
}

/// `TASK:METHOD`, 1-based, into a zero-based pair.
pub fn parse_group(text: &str) -> Result<(usize, usize), String> {
    let (t, m) = text
        .split_once(':')
        .ok_or_else(|| format!("expected TASK:METHOD, got {text:?}"))?;
    let parse = |s: &str| match s.trim().parse::<usize>() {
        Ok(v) if v >= 1 => Ok(v - 1),
        _ => Err(format!("group indices are 1-based integers, got {text:?}")),
    };
    Ok((parse(t)?, parse(m)?))
}
