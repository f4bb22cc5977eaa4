//! Batch command-line front end. Every command returns a JSON report plus a
//! pass flag; exit codes are 0 (pass), 1 (mathematical rejection or failed
//! check), 2 (usage or input error).

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::gaussian::{
    cf_reference, dual_norm_tail_probability, empirical_char_functional, moment_estimate, GaussianError,
    SampleBatch, TOLERANCE_STD_ERRORS,
};
use crate::spaces::{p_norm, CoeffVector};
use crate::spectrum::{hs_inclusion_norm, validate_spectrum, Spectrum, SpectrumError, TruncationPolicy};
use crate::topology::{classify_dual_convergence, rho_metric, DualSequence, SequenceRule, TopologyError};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error(transparent)]
    Gaussian(#[from] GaussianError),
    #[error(transparent)]
    Topology(#[from] TopologyError),
}

#[derive(Debug, Parser)]
#[command(name = "nuclear-scale", version, about = "Hilbert-scale norms, dual topologies, and white-noise Monte Carlo checks")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Spectrum JSON file.
    #[arg(long, global = true)]
    pub spectrum: Option<PathBuf>,
    /// Number of coordinates kept.
    #[arg(long = "N", global = true, default_value_t = 40)]
    pub n: usize,
    #[arg(long, global = true, default_value_t = 6)]
    pub pmax: u32,
    /// Series / metric tolerance.
    #[arg(long, global = true, default_value_t = 1e-12)]
    pub eps: f64,
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    /// Monte Carlo sample count M.
    #[arg(long, global = true, default_value_t = 100_000)]
    pub samples: usize,
    /// Output path (the batch file for `sample`, a JSON copy of the report otherwise).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Validate a spectrum and report Hilbert–Schmidt inclusion norms.
    Validate,
    /// Scale norms of a vector.
    Norm {
        /// Vector literal or path, `{"entries": {"0": 1.0}}`.
        #[arg(long)]
        vector: String,
        /// Scale indices; defaults to −pmax..=pmax.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        p: Vec<i64>,
    },
    /// Truncated Fréchet metric between two vectors.
    Metric {
        #[arg(long)]
        u: String,
        #[arg(long)]
        v: String,
    },
    /// Draw a sample batch and write it to --out.
    Sample,
    /// Check the empirical characteristic functional against exp(−t²‖ξ‖₀²/2).
    VerifyCf {
        #[arg(long)]
        xi: String,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0,0.5,1,2")]
        t: Vec<f64>,
        /// Added to every reference value (negative control).
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        reference_offset: f64,
    },
    /// Check weighted second moments and Markov bounds on dual-norm tails.
    VerifyMoments {
        #[arg(long, value_delimiter = ',', default_value = "1,2")]
        p: Vec<u32>,
        #[arg(long, value_delimiter = ',', default_value = "1,10,100")]
        c: Vec<f64>,
    },
    /// Classify convergence of a dual sequence.
    Classify {
        /// Sequence JSON or path, e.g. `{"kind":"scaled_delta","scale":"inv_k","index":"const0"}`.
        #[arg(long)]
        sequence: String,
        /// Limit vector; defaults to zero.
        #[arg(long)]
        limit: Option<String>,
        #[arg(long, default_value_t = 64)]
        horizon: usize,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Recompute estimates from a saved batch.
    Report {
        #[arg(long)]
        batch: PathBuf,
        #[arg(long)]
        xi: Option<String>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_value = "0,0.5,1,2")]
        t: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_value = "1,2")]
        p: Vec<u32>,
    },
}

/// Result of one command: the JSON report and whether its checks passed.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub report: Value,
    pub pass: bool,
}

impl Outcome {
    pub fn exit_code(&self) -> u8 {
        if self.pass {
            0
        } else {
            1
        }
    }
}

/// JSON summary of one scalar estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimateSummary {
    pub value: f64,
    pub std_error: f64,
    pub reference: f64,
    pub pass: bool,
}

fn read_path(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Inline JSON when the argument starts with `{`, otherwise a file path.
fn json_arg(arg: &str) -> Result<Value, CliError> {
    let text = if arg.trim_start().starts_with('{') {
        arg.to_string()
    } else {
        read_path(Path::new(arg))?
    };
    Ok(serde_json::from_str(&text)?)
}

fn vector_arg(arg: &str) -> Result<CoeffVector, CliError> {
    Ok(serde_json::from_value(json_arg(arg)?)?)
}

impl GlobalArgs {
    fn policy(&self) -> Result<TruncationPolicy, CliError> {
        TruncationPolicy::new(self.n, self.eps, self.pmax).map_err(|e| CliError::Usage(e.to_string()))
    }

    fn spectrum(&self) -> Result<Spectrum, CliError> {
        let path = self
            .spectrum
            .as_ref()
            .ok_or_else(|| CliError::Usage("--spectrum is required for this command".into()))?;
        Ok(Spectrum::from_json(&serde_json::from_str(&read_path(path)?)?)?)
    }

    fn echo(&self) -> Value {
        json!({
            "schema_version": REPORT_SCHEMA_VERSION,
            "spectrum": self.spectrum,
            "N": self.n,
            "pmax": self.pmax,
            "eps": self.eps,
            "seed": self.seed,
            "samples": self.samples,
        })
    }
}

pub fn cmd_validate(g: &GlobalArgs) -> Result<Outcome, CliError> {
    let policy = g.policy()?;
    let spectrum = g.spectrum()?;
    let mut report = json!({"config": g.echo(), "spectrum": spectrum.to_json()});
    let pass = match validate_spectrum(&spectrum, &policy) {
        Ok(validation) => {
            let norms = (0..i64::from(policy.p_max))
                .map(|p| {
                    let hs = hs_inclusion_norm(&spectrum, p + 1, p, &policy)?;
                    Ok(json!({"from": p + 1, "to": p, "value": hs.value, "error": hs.error}))
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            report["accepted"] = json!(true);
            report["validation"] = serde_json::to_value(validation)?;
            report["hs_inclusion_norms"] = json!(norms);
            true
        }
        Err(SpectrumError::Malformed(msg)) => return Err(CliError::Usage(msg)),
        Err(rejection) => {
            report["accepted"] = json!(false);
            report["rejection"] = serde_json::to_value(&rejection)?;
            report["message"] = json!(rejection.to_string());
            false
        }
    };
    Ok(Outcome { report, pass })
}

pub fn cmd_norm(g: &GlobalArgs, vector: &str, ps: &[i64]) -> Result<Outcome, CliError> {
    let spectrum = g.spectrum()?;
    let x = vector_arg(vector)?;
    let ps: Vec<i64> = if ps.is_empty() {
        (-i64::from(g.pmax)..=i64::from(g.pmax)).collect()
    } else {
        ps.to_vec()
    };
    let norms: Vec<Value> = ps.iter().map(|&p| json!({"p": p, "norm": p_norm(&x, p, &spectrum)})).collect();
    Ok(Outcome {
        report: json!({"config": g.echo(), "vector": x, "norms": norms}),
        pass: true,
    })
}

pub fn cmd_metric(g: &GlobalArgs, u: &str, v: &str) -> Result<Outcome, CliError> {
    g.policy()?;
    let spectrum = g.spectrum()?;
    let rho = rho_metric(&vector_arg(u)?, &vector_arg(v)?, &spectrum, g.eps);
    Ok(Outcome {
        report: json!({"config": g.echo(), "rho": rho}),
        pass: true,
    })
}

pub fn cmd_sample(g: &GlobalArgs) -> Result<Outcome, CliError> {
    let out = g
        .out
        .as_ref()
        .ok_or_else(|| CliError::Usage("sample requires --out for the batch file".into()))?;
    let batch = SampleBatch::generate(g.n, g.samples, g.seed)?;
    let file = fs::File::create(out).map_err(|source| CliError::Io {
        path: out.clone(),
        source,
    })?;
    batch.write_to(std::io::BufWriter::new(file))?;
    let columns: Vec<Value> = batch
        .column_moments()
        .iter()
        .map(|c| json!({"mean": c.value, "variance": c.std_error * c.std_error * c.samples as f64}))
        .collect();
    Ok(Outcome {
        report: json!({
            "config": g.echo(),
            "batch": out,
            "M": batch.samples(),
            "N": batch.coordinates(),
            "generator_id": batch.generator_id(),
            "columns": columns,
        }),
        pass: true,
    })
}

fn cf_rows(batch: &SampleBatch, xi: &CoeffVector, ts: &[f64], offset: f64) -> Result<(Vec<Value>, bool), CliError> {
    let mut all = true;
    let mut rows = Vec::with_capacity(ts.len());
    for &t in ts {
        let est = empirical_char_functional(batch, xi, t)?;
        let reference = cf_reference(xi, t) + offset;
        let re_ok = (est.re.value - reference).abs() <= TOLERANCE_STD_ERRORS * est.re.std_error;
        let im_ok = est.im.value.abs() <= TOLERANCE_STD_ERRORS * est.im.std_error;
        let pass = re_ok && im_ok;
        all &= pass;
        rows.push(json!({
            "t": t,
            "value": [est.re.value, est.im.value],
            "std_error": [est.re.std_error, est.im.std_error],
            "reference": reference,
            "pass": pass,
        }));
    }
    Ok((rows, all))
}

pub fn cmd_verify_cf(g: &GlobalArgs, xi: &str, ts: &[f64], offset: f64) -> Result<Outcome, CliError> {
    let policy = g.policy()?;
    let xi = vector_arg(xi)?;
    if xi.support_end() > policy.n {
        return Err(GaussianError::SupportExceedsTruncation {
            support_end: xi.support_end() - 1,
            n: policy.n,
        }
        .into());
    }
    // Rows are generated coordinate by coordinate, so the first columns of the
    // full N-column batch are reproduced exactly by a narrower draw.
    let width = xi.support_end().max(1);
    let batch = SampleBatch::generate(width, g.samples, g.seed)?;
    let (rows, pass) = cf_rows(&batch, &xi, ts, offset)?;
    Ok(Outcome {
        report: json!({
            "config": g.echo(),
            "xi": xi,
            "generator_id": batch.generator_id(),
            "results": rows,
            "pass": pass,
        }),
        pass,
    })
}

fn moment_rows(batch: &SampleBatch, ps: &[u32], spectrum: &Spectrum) -> Result<(Vec<Value>, bool), CliError> {
    let mut all = true;
    let mut rows = Vec::new();
    for &p in ps {
        let m = moment_estimate(batch, p, spectrum)?;
        all &= m.pass();
        rows.push(json!({
            "p": p,
            "value": m.estimate.value,
            "std_error": m.estimate.std_error,
            "reference": m.reference,
            "tail_bound": m.tail_bound,
            "pass": m.pass(),
        }));
    }
    Ok((rows, all))
}

pub fn cmd_verify_moments(g: &GlobalArgs, ps: &[u32], cs: &[f64]) -> Result<Outcome, CliError> {
    let policy = g.policy()?;
    let spectrum = g.spectrum()?;
    validate_spectrum(&spectrum, &policy)?;
    let batch = SampleBatch::generate(policy.n, g.samples, g.seed)?;
    let (moments, mut pass) = moment_rows(&batch, ps, &spectrum)?;
    let mut markov = Vec::new();
    for &p in ps {
        for &c in cs {
            let tail = dual_norm_tail_probability(&batch, p, c, &spectrum)?;
            pass &= tail.pass;
            markov.push(json!({
                "p": p,
                "c": c,
                "value": tail.estimate.value,
                "std_error": tail.estimate.std_error,
                "reference": tail.markov_bound,
                "pass": tail.pass,
            }));
        }
    }
    Ok(Outcome {
        report: json!({"config": g.echo(), "moments": moments, "markov": markov, "pass": pass}),
        pass,
    })
}

pub fn cmd_classify(
    g: &GlobalArgs,
    sequence: &str,
    limit: Option<&str>,
    horizon: usize,
    tol: f64,
) -> Result<Outcome, CliError> {
    let policy = g.policy()?;
    let spectrum = g.spectrum()?;
    let rule: SequenceRule = serde_json::from_value(json_arg(sequence)?)?;
    let seq = match rule {
        SequenceRule::Explicit { terms } => DualSequence::explicit(terms),
        rule => DualSequence { rule, horizon },
    };
    let limit = limit.map(vector_arg).transpose()?.unwrap_or_default();
    let verdict = classify_dual_convergence(&seq, &limit, &spectrum, &policy, tol)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(Outcome {
        report: json!({
            "config": g.echo(),
            "horizon": seq.horizon,
            "tol": tol,
            "verdict": verdict,
        }),
        pass: true,
    })
}

pub fn cmd_report(g: &GlobalArgs, batch_path: &Path, xi: Option<&str>, ts: &[f64], ps: &[u32]) -> Result<Outcome, CliError> {
    let file = fs::File::open(batch_path).map_err(|source| CliError::Io {
        path: batch_path.to_path_buf(),
        source,
    })?;
    let batch = SampleBatch::read_from(std::io::BufReader::new(file))?;
    let mut report = json!({
        "config": g.echo(),
        "batch": {"M": batch.samples(), "N": batch.coordinates(), "seed": batch.seed(), "generator_id": batch.generator_id()},
    });
    let mut pass = true;
    if let Some(xi) = xi {
        let (rows, ok) = cf_rows(&batch, &vector_arg(xi)?, ts, 0.0)?;
        report["cf"] = json!(rows);
        pass &= ok;
    }
    if g.spectrum.is_some() {
        let spectrum = g.spectrum()?;
        let (rows, ok) = moment_rows(&batch, ps, &spectrum)?;
        report["moments"] = json!(rows);
        pass &= ok;
    }
    report["pass"] = json!(pass);
    Ok(Outcome { report, pass })
}

/// Runs a parsed command; `--out` receives a copy of the JSON report except for
/// `sample`, where it names the batch file.
pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    let g = &cli.global;
    let outcome = match &cli.command {
        Command::Validate => cmd_validate(g),
        Command::Norm { vector, p } => cmd_norm(g, vector, p),
        Command::Metric { u, v } => cmd_metric(g, u, v),
        Command::Sample => return cmd_sample(g),
        Command::VerifyCf { xi, t, reference_offset } => cmd_verify_cf(g, xi, t, *reference_offset),
        Command::VerifyMoments { p, c } => cmd_verify_moments(g, p, c),
        Command::Classify {
            sequence,
            limit,
            horizon,
            tol,
        } => cmd_classify(g, sequence, limit.as_deref(), *horizon, *tol),
        Command::Report { batch, xi, t, p } => cmd_report(g, batch, xi.as_deref(), t, p),
    }?;
    if let Some(out) = &g.out {
        let text = serde_json::to_string_pretty(&outcome.report)?;
        fs::write(out, text + "\n").map_err(|source| CliError::Io {
            path: out.clone(),
            source,
        })?;
    }
    Ok(outcome)
}
