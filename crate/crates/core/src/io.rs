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

//! CSV and JSON file formats.
//!
//! | kind           | header                                         |
//! |----------------|------------------------------------------------|
//! | per-case       | `task_id,method_id,case_id,dsc`                |
//! | training pairs | `dsc_mean_pct,sd_pct`                          |
//! | results        | `task_id,method_id,n,mean_dsc,observed_sd`     |
//! | corpus         | `paper_id,method_id,mean_dsc,test_n,sd`        |
//! | points         | `predicted_width,observed_width,n`             |
//!
//! Numbers are written with six decimals and a dot separator.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::str::FromStr;

use serde_json::Value;

use crate::calibration::{CalibrationInput, CalibrationPoint};
use crate::corpus::{MethodResult, PaperRecord};
use crate::error::{Error, Result};
use crate::glm::TrainingPair;
use crate::synth::CaseRow;

pub const CASE_HEADER: [&str; 4] = ["task_id", "method_id", "case_id", "dsc"];
pub const PAIRS_HEADER: [&str; 2] = ["dsc_mean_pct", "sd_pct"];
pub const RESULTS_HEADER: [&str; 5] = ["task_id", "method_id", "n", "mean_dsc", "observed_sd"];
pub const CORPUS_HEADER: [&str; 5] = ["paper_id", "method_id", "mean_dsc", "test_n", "sd"];
pub const POINTS_HEADER: [&str; 3] = ["predicted_width", "observed_width", "n"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableKind {
    Cases,
    Pairs,
    Results,
    Corpus,
}

impl TableKind {
    fn header(self) -> &'static [&'static str] {
        match self {
            TableKind::Cases => &CASE_HEADER,
            TableKind::Pairs => &PAIRS_HEADER,
            TableKind::Results => &RESULTS_HEADER,
            TableKind::Corpus => &CORPUS_HEADER,
        }
    }

    /// Identifies a table by its exact column set; anything else is rejected.
    pub fn detect(columns: &[String]) -> Result<Self> {
        let mut given: Vec<&str> = columns.iter().map(String::as_str).collect();
        given.sort_unstable();
        [TableKind::Cases, TableKind::Pairs, TableKind::Results, TableKind::Corpus]
            .into_iter()
            .find(|kind| {
                let mut want = kind.header().to_vec();
                want.sort_unstable();
                want == given
            })
            .ok_or_else(|| Error::parse(1, format!("unrecognized header: {}", columns.join(","))))
    }
}

/// Six-decimal fixed formatting.
pub fn fmt6(x: f64) -> String {
    format!("{x:.6}")
}

pub fn round6(x: f64) -> f64 {
    (x * 1e6).round() / 1e6
}

/// Rounds every non-integer number in a JSON tree to six decimals.
pub fn round_json(value: &mut Value) {
    match value {
        Value::Number(n) if n.is_f64() => {
            if let Some(x) = n.as_f64() {
                if let Some(r) = serde_json::Number::from_f64(round6(x)) {
                    *n = r;
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_json),
        Value::Object(map) => map.values_mut().for_each(round_json),
        _ => {}
    }
}

/// A parsed CSV table with its header, positioned by column name.
pub struct Table {
    pub kind: TableKind,
    index: HashMap<String, usize>,
    rows: Vec<(u64, csv::StringRecord)>,
}

impl Table {
    pub fn read<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| Error::parse(1, e.to_string()))?
            .clone();
        if headers.is_empty() || headers.iter().all(str::is_empty) {
            return Err(Error::parse(1, "empty input: missing header"));
        }
        let columns: Vec<String> = headers.iter().map(str::to_string).collect();
        let kind = TableKind::detect(&columns)?;
        let index = columns.iter().enumerate().map(|(i, c)| (c.clone(), i)).collect();
        let mut rows = Vec::new();
        for record in rdr.records() {
            let record = record.map_err(|e| {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                Error::parse(line, e.to_string())
            })?;
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            rows.push((line, record));
        }
        Ok(Self { kind, index, rows })
    }

    pub fn expect(self, kind: TableKind) -> Result<Self> {
        if self.kind != kind {
            return Err(Error::parse(
                1,
                format!("expected a {:?} table with header {}, found {:?}", kind, kind.header().join(","), self.kind),
            ));
        }
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn field<'a>(&self, record: &'a csv::StringRecord, name: &str) -> &'a str {
        record.get(self.index[name]).unwrap_or("")
    }

    fn parse<T: FromStr>(&self, line: u64, record: &csv::StringRecord, name: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        let raw = self.field(record, name);
        raw.parse()
            .map_err(|e| Error::parse(line, format!("column {name}: cannot parse {raw:?}: {e}")))
    }

    fn optional<T: FromStr>(&self, line: u64, record: &csv::StringRecord, name: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        if self.field(record, name).is_empty() {
            Ok(None)
        } else {
            self.parse(line, record, name).map(Some)
        }
    }

    pub fn case_rows(&self) -> Result<Vec<CaseRow>> {
        self.rows
            .iter()
            .map(|(line, r)| {
                let dsc: f64 = self.parse(*line, r, "dsc")?;
                if !(0.0..=1.0).contains(&dsc) {
                    return Err(Error::parse(*line, format!("dsc must lie in [0, 1], got {dsc}")));
                }
                Ok(CaseRow {
                    task_id: self.field(r, "task_id").to_string(),
                    method_id: self.field(r, "method_id").to_string(),
                    case_id: self.parse(*line, r, "case_id")?,
                    dsc,
                })
            })
            .collect()
    }

    pub fn training_pairs(&self) -> Result<Vec<TrainingPair>> {
        self.rows
            .iter()
            .map(|(line, r)| {
                TrainingPair::new(self.parse(*line, r, "dsc_mean_pct")?, self.parse(*line, r, "sd_pct")?)
                    .map_err(|e| Error::parse(*line, e.to_string()))
            })
            .collect()
    }

    pub fn calibration_inputs(&self) -> Result<Vec<CalibrationInput>> {
        self.rows
            .iter()
            .map(|(line, r)| {
                Ok(CalibrationInput {
                    task_id: self.field(r, "task_id").to_string(),
                    method_id: self.field(r, "method_id").to_string(),
                    n: self.parse(*line, r, "n")?,
                    mean_dsc: self.parse(*line, r, "mean_dsc")?,
                    observed_sd: self.parse(*line, r, "observed_sd")?,
                })
            })
            .collect()
    }

    /// Groups rows into papers in order of first appearance.
    pub fn papers(&self) -> Result<Vec<PaperRecord>> {
        let mut papers: Vec<PaperRecord> = Vec::new();
        let mut position: HashMap<String, usize> = HashMap::new();
        for (line, r) in &self.rows {
            let paper_id = self.field(r, "paper_id").to_string();
            let test_n: usize = self.parse(*line, r, "test_n")?;
            let method = MethodResult {
                method_id: self.field(r, "method_id").to_string(),
                mean_dsc: self.parse(*line, r, "mean_dsc")?,
                reported_sd: self.optional(*line, r, "sd")?,
            };
            if !(0.0..=1.0).contains(&method.mean_dsc) {
                return Err(Error::parse(*line, format!("mean_dsc must lie in [0, 1], got {}", method.mean_dsc)));
            }
            if let Some(sd) = method.reported_sd {
                if !(sd >= 0.0) {
                    return Err(Error::parse(*line, format!("sd must be >= 0, got {sd}")));
                }
            }
            match position.get(&paper_id) {
                Some(&i) => {
                    if papers[i].test_n != test_n {
                        return Err(Error::parse(
                            *line,
                            format!("paper {paper_id} has test_n {test_n}, earlier rows say {}", papers[i].test_n),
                        ));
                    }
                    papers[i].methods.push(method);
                }
                None => {
                    position.insert(paper_id.clone(), papers.len());
                    papers.push(PaperRecord {
                        paper_id,
                        test_n,
                        methods: vec![method],
                    });
                }
            }
        }
        Ok(papers)
    }
}

fn writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().from_writer(out)
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::parse(0, format!("{other:?}")),
    }
}

pub fn write_case_rows<W: Write>(out: W, rows: &[CaseRow]) -> Result<()> {
    let mut w = writer(out);
    w.write_record(CASE_HEADER).map_err(csv_err)?;
    for r in rows {
        w.write_record([r.task_id.clone(), r.method_id.clone(), r.case_id.to_string(), fmt6(r.dsc)])
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_training_pairs<W: Write>(out: W, pairs: &[TrainingPair]) -> Result<()> {
    let mut w = writer(out);
    w.write_record(PAIRS_HEADER).map_err(csv_err)?;
    for p in pairs {
        w.write_record([fmt6(p.dsc_mean_pct), fmt6(p.sd_pct)]).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_calibration_inputs<W: Write>(out: W, rows: &[CalibrationInput]) -> Result<()> {
    let mut w = writer(out);
    w.write_record(RESULTS_HEADER).map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.task_id.clone(),
            r.method_id.clone(),
            r.n.to_string(),
            fmt6(r.mean_dsc),
            fmt6(r.observed_sd),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_calibration_points<W: Write>(out: W, points: &[CalibrationPoint]) -> Result<()> {
    let mut w = writer(out);
    w.write_record(POINTS_HEADER).map_err(csv_err)?;
    for p in points {
        w.write_record([fmt6(p.predicted_width), fmt6(p.observed_width), p.n.to_string()])
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_corpus<W: Write>(out: W, papers: &[PaperRecord]) -> Result<()> {
    let mut w = writer(out);
    w.write_record(CORPUS_HEADER).map_err(csv_err)?;
    for p in papers {
        for m in &p.methods {
            w.write_record([
                p.paper_id.clone(),
                m.method_id.clone(),
                fmt6(m.mean_dsc),
                p.test_n.to_string(),
                m.reported_sd.map(fmt6).unwrap_or_default(),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}
