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

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use ci_recon::ci::{bootstrap_ci, compare_cis, parametric_ci_with, resolve_sd, AggregateReport, DEFAULT_ALPHA};
use ci_recon::calibration::{calibrate, export_calibration_points, PlotSpec, DEFAULT_MIN_N};
use ci_recon::corpus::{analyze_corpus, AnalysisConfig};
use ci_recon::glm::{fit_gamma_log_glm, ModelDocument, SdModel};
use ci_recon::io::{self as formats, fmt6, round_json, Table, TableKind};
use ci_recon::stats::summarize;
use ci_recon::synth::{self, CorpusSpec, SimSpec};
use ci_recon::Error;

mod family;

const SCHEMA: u32 = 1;

#[derive(Debug, Parser)]
#[command(name = "ci-recon", version, about = "Reconstruct confidence intervals for segmentation results")]
struct Cli {
    #[command(flatten)]
    config: RunConfig,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct RunConfig {
    /// Significance level; 0.05 gives 95% intervals.
    #[arg(long, global = true, default_value_t = DEFAULT_ALPHA)]
    alpha: f64,
    /// Calibration summaries use records with n > MIN_N.
    #[arg(long, global = true, default_value_t = DEFAULT_MIN_N)]
    min_n: usize,
    /// Do not clip reconstructed intervals to [0, 1].
    #[arg(long, global = true)]
    no_clamp: bool,
    /// Do not cap predicted SDs at sqrt(m (1 - m)).
    #[arg(long, global = true)]
    no_sd_clamp: bool,
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    #[arg(long, global = true, default_value_t = 10_000)]
    boot_samples: usize,
    /// Model JSON file; defaults to the bundled published model.
    #[arg(long, global = true)]
    model: Option<PathBuf>,
    /// Use the model SD even where an SD is reported.
    #[arg(long, global = true)]
    force_model_sd: bool,
    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit the SD model from a per-case or training-pairs CSV.
    Fit {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Confidence interval for one reported mean.
    Ci {
        #[arg(long)]
        mean: f64,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        sd: Option<f64>,
    },
    /// Model-predicted SD for a mean DSC.
    PredictSd {
        #[arg(long)]
        mean: f64,
    },
    /// Predicted versus observed CI widths.
    Calibrate {
        /// Results CSV or per-case CSV.
        #[arg(long)]
        input: PathBuf,
        /// Summary JSON (default: standard output).
        #[arg(long)]
        output: Option<PathBuf>,
        /// Scatter points CSV.
        #[arg(long)]
        points: Option<PathBuf>,
    },
    /// Leader CI versus runner-up gap over a publication corpus.
    Analyze {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Parametric and bootstrap intervals per group of a per-case CSV.
    Bootstrap {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Generate a synthetic per-case CSV.
    Simulate {
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = 10)]
        tasks: usize,
        #[arg(long, default_value_t = 19)]
        methods: usize,
        #[arg(long, default_value_t = 50)]
        cases: usize,
        /// constant:C, beta:A,B, or model-beta[:LO,HI].
        #[arg(long, default_value = "model-beta")]
        family: String,
        /// Groups to leave out, as TASK:METHOD (1-based), repeatable.
        #[arg(long, value_name = "TASK:METHOD")]
        exclude: Vec<String>,
    },
    /// Generate a synthetic corpus CSV.
    SimulateCorpus {
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = 77)]
        papers: usize,
        /// Probability that a method reports its SD.
        #[arg(long, default_value_t = 0.0)]
        reported_sd_rate: f64,
    },
}

/// Exit status 1: invalid arguments. Exit status 2: bad input data.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Data(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) => Failure::Usage(e.to_string()),
            _ => Failure::Data(e.to_string()),
        }
    }
}

fn usage(e: Error) -> Failure {
    Failure::Usage(e.to_string())
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Usage(msg) => eprintln!("error: {msg}"),
                Failure::Data(msg) => eprintln!("error: {msg}"),
            }
            ExitCode::from(f.code())
        }
    }
}

fn run(cli: Cli) -> CmdResult {
    let cfg = &cli.config;
    if !(cfg.alpha > 0.0 && cfg.alpha < 1.0) {
        return Err(Failure::Usage(format!("--alpha must lie in (0, 1), got {}", cfg.alpha)));
    }
    if cfg.boot_samples < ci_recon::ci::MIN_RESAMPLES {
        return Err(Failure::Usage(format!(
            "--boot-samples must be >= {}, got {}",
            ci_recon::ci::MIN_RESAMPLES,
            cfg.boot_samples
        )));
    }
    if let Some(threads) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Failure::Usage(e.to_string()))?;
    }
    match &cli.command {
        Command::Fit { input, output } => cmd_fit(input, output),
        Command::Ci { mean, n, sd } => cmd_ci(cfg, *mean, *n, *sd),
        Command::PredictSd { mean } => cmd_predict_sd(cfg, *mean),
        Command::Calibrate { input, output, points } => cmd_calibrate(cfg, input, output.as_deref(), points.as_deref()),
        Command::Analyze { input, output } => cmd_analyze(cfg, input, output.as_deref()),
        Command::Bootstrap { input, output } => cmd_bootstrap(cfg, input, output.as_deref()),
        Command::Simulate {
            output,
            tasks,
            methods,
            cases,
            family,
            exclude,
        } => {
            let family = family::parse(family).map_err(Failure::Usage)?;
            let exclude = exclude
                .iter()
                .map(|s| family::parse_group(s))
                .collect::<Result<Vec<_>, _>>()
                .map_err(Failure::Usage)?;
            let spec = SimSpec {
                n_tasks: *tasks,
                methods_per_task: *methods,
                cases_per_task: *cases,
                family,
                seed: cfg.seed,
                exclude,
            };
            cmd_simulate(&spec, output)
        }
        Command::SimulateCorpus {
            output,
            papers,
            reported_sd_rate,
        } => {
            let spec = CorpusSpec {
                n_papers: *papers,
                seed: cfg.seed,
                reported_sd_rate: *reported_sd_rate,
                ..CorpusSpec::demo()
            };
            let corpus = synth::generate_corpus(&spec)?;
            let out = create(output)?;
            formats::write_corpus(out, &corpus)?;
            Ok(())
        }
    }
}

fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Failure::Data(format!("cannot open {}: {e}", path.display())))
}

fn create(path: &Path) -> Result<BufWriter<File>, Failure> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Failure::Data(format!("cannot create {}: {e}", path.display())))
}

fn read_table(path: &Path) -> Result<Table, Failure> {
    let mut text = String::new();
    open(path)?
        .read_to_string(&mut text)
        .map_err(|e| Failure::Data(format!("cannot read {}: {e}", path.display())))?;
    Table::read(text.as_bytes()).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))
}

fn load_model(cfg: &RunConfig) -> Result<SdModel, Failure> {
    let doc = match &cfg.model {
        None => ModelDocument::paper(),
        Some(path) => {
            let mut text = String::new();
            open(path)?
                .read_to_string(&mut text)
                .map_err(|e| Failure::Data(format!("cannot read {}: {e}", path.display())))?;
            ModelDocument::from_json(&text).map_err(|e| Failure::Data(format!("{}: {e}", path.display())))?
        }
    };
    Ok(SdModel::from(&doc).with_clamp(!cfg.no_sd_clamp))
}

fn emit_json(mut value: Value, output: Option<&Path>) -> CmdResult {
    round_json(&mut value);
    let text = serde_json::to_string_pretty(&value).expect("JSON value serializes") + "\n";
    match output {
        None => io::stdout().write_all(text.as_bytes()),
        Some(path) => create(path)?.write_all(text.as_bytes()),
    }
    .map_err(|e| Failure::Data(e.to_string()))
}

fn cmd_fit(input: &Path, output: &Path) -> CmdResult {
    let table = read_table(input)?;
    let pairs = match table.kind {
        TableKind::Pairs => table.training_pairs()?,
        TableKind::Cases => {
            let set = synth::make_training_pairs(&table.case_rows()?)?;
            if set.dropped_zero_sd + set.skipped_small > 0 {
                eprintln!(
                    "note: {} groups, {} dropped with zero SD, {} skipped with < 2 cases",
                    set.n_groups, set.dropped_zero_sd, set.skipped_small
                );
            }
            set.pairs
        }
        other => {
            return Err(Failure::Data(format!(
                "{}: fit needs a per-case or training-pairs CSV, found {other:?}",
                input.display()
            )))
        }
    };
    let fit = fit_gamma_log_glm(&pairs)?;
    if !fit.converged {
        eprintln!("warning: IRLS did not converge after {} iterations", fit.iterations);
    }
    let doc = ModelDocument::from(&fit);
    create(output)?
        .write_all((doc.to_json() + "\n").as_bytes())
        .map_err(|e| Failure::Data(e.to_string()))?;
    let [b0, b1, b2] = fit.coefficients;
    println!("coefficients: {} {} {}", fmt6(b0), fmt6(b1), fmt6(b2));
    println!("deviance: {}", fmt6(fit.deviance));
    println!("dispersion: {}", fmt6(fit.dispersion));
    println!("n_obs: {}", fit.n_obs);
    println!("iterations: {}", fit.iterations);
    println!("converged: {}", fit.converged);
    Ok(())
}

fn cmd_ci(cfg: &RunConfig, mean: f64, n: usize, sd: Option<f64>) -> CmdResult {
    let model = load_model(cfg)?;
    let report = AggregateReport::new(mean, n, sd).map_err(usage)?;
    let (sd_used, source) = resolve_sd(&report, &model, cfg.force_model_sd).map_err(usage)?;
    let ci = parametric_ci_with(mean, sd_used, n, cfg.alpha, !cfg.no_clamp).map_err(usage)?;
    emit_json(
        json!({
            "schema": SCHEMA,
            "mean": mean,
            "n": n,
            "alpha": cfg.alpha,
            "lower": ci.lower,
            "upper": ci.upper,
            "width": ci.width(),
            "sd_used": sd_used,
            "sd_source": source,
            "clamped": ci.clamped,
        }),
        None,
    )
}

fn cmd_predict_sd(cfg: &RunConfig, mean: f64) -> CmdResult {
    let model = load_model(cfg)?;
    let sd = model.sd_fraction(mean).map_err(usage)?;
    emit_json(
        json!({"schema": SCHEMA, "mean": mean, "sd": sd, "sd_pct": sd * 100.0, "sd_clamped": model.clamp}),
        None,
    )
}

fn cmd_calibrate(cfg: &RunConfig, input: &Path, output: Option<&Path>, points: Option<&Path>) -> CmdResult {
    let model = load_model(cfg)?;
    let table = read_table(input)?;
    let inputs = match table.kind {
        TableKind::Results => table.calibration_inputs()?,
        TableKind::Cases => synth::group_summaries(&table.case_rows()?),
        other => {
            return Err(Failure::Data(format!(
                "{}: calibrate needs a results or per-case CSV, found {other:?}",
                input.display()
            )))
        }
    };
    let (records, summary) = calibrate(&inputs, &model, cfg.alpha, cfg.min_n)?;
    if let Some(path) = points {
        formats::write_calibration_points(create(path)?, &export_calibration_points(&records))?;
    }
    let empty = summary.empty;
    emit_json(
        json!({
            "schema": SCHEMA,
            "alpha": cfg.alpha,
            "model_coefficients": model.coefficients,
            "summary": summary,
            "plot": PlotSpec::default(),
        }),
        output,
    )?;
    if empty {
        return Err(Failure::Data(format!(
            "no record has n > {}; calibration summary is empty",
            cfg.min_n
        )));
    }
    Ok(())
}

fn cmd_analyze(cfg: &RunConfig, input: &Path, output: Option<&Path>) -> CmdResult {
    let model = load_model(cfg)?;
    let papers = read_table(input)?.expect(TableKind::Corpus)?.papers()?;
    let config = AnalysisConfig {
        alpha: cfg.alpha,
        clamp_ci: !cfg.no_clamp,
        prefer_reported_sd: !cfg.force_model_sd,
    };
    let analysis = analyze_corpus(&papers, &model, &config)?;
    let mut summary = serde_json::to_value(&analysis.summary).expect("summary serializes");
    if let Some(f) = analysis.summary.overlap_fraction {
        summary["overlap_fraction"] = json!((f * 1000.0).round() / 1000.0);
    }
    emit_json(
        json!({
            "schema": SCHEMA,
            "alpha": cfg.alpha,
            "model_coefficients": model.coefficients,
            "summary": summary,
            "papers": analysis.papers,
        }),
        output,
    )
}

fn cmd_bootstrap(cfg: &RunConfig, input: &Path, output: Option<&Path>) -> CmdResult {
    let rows = read_table(input)?.expect(TableKind::Cases)?.case_rows()?;
    let mut groups: Vec<((String, String), Vec<f64>)> = Vec::new();
    for row in rows {
        let key = (row.task_id, row.method_id);
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, values)) => values.push(row.dsc),
            None => groups.push((key, vec![row.dsc])),
        }
    }
    let mut out = Vec::with_capacity(groups.len());
    for ((task_id, method_id), values) in &groups {
        let s = summarize(values)?;
        let Some(sd) = s.sd else { continue };
        let parametric = parametric_ci_with(s.mean, sd, s.n, cfg.alpha, !cfg.no_clamp)?;
        let boot = bootstrap_ci(values, cfg.alpha, cfg.boot_samples, cfg.seed)?;
        out.push(json!({
            "task_id": task_id,
            "method_id": method_id,
            "n": s.n,
            "mean": s.mean,
            "sd": sd,
            "parametric": parametric,
            "bootstrap": boot,
            "difference": compare_cis(&parametric, &boot)?,
        }));
    }
    emit_json(
        json!({"schema": SCHEMA, "alpha": cfg.alpha, "boot_samples": cfg.boot_samples, "seed": cfg.seed, "groups": out}),
        output,
    )
}

fn cmd_simulate(spec: &SimSpec, output: &Path) -> CmdResult {
    spec.validate().map_err(usage)?;
    let rows = synth::generate_results(spec)?;
    formats::write_case_rows(create(output)?, &rows)?;
    Ok(())
}
