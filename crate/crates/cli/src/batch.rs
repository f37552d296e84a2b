// Copyright 2026 the pkcurve Authors
// SPDX-License-Identifier: Apache-2.0

//! The `build` command.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use pkcurve::io::{render_svg, BuildOutcome, CurveFile, PointSetFile, SvgOptions};
use pkcurve::{ContinuityMode, Error};

/// Process exit status for a failed command.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExitStatus {
    Malformed = 1,
    Degenerate = 2,
    Solver = 3,
}

#[derive(Debug)]
pub struct CliError {
    pub status: ExitStatus,
    pub message: String,
}

impl CliError {
    fn new(e: Error) -> Self {
        let status = if e.is_malformed() {
            ExitStatus::Malformed
        } else if e.is_degenerate_input() {
            ExitStatus::Degenerate
        } else {
            ExitStatus::Solver
        };
        CliError {
            status,
            message: e.to_string(),
        }
    }

    fn context(mut self, what: impl std::fmt::Display) -> Self {
        self.message = format!("{what}: {}", self.message);
        self
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::new(e)
    }
}

#[derive(Clone, Debug, Default)]
pub struct BuildOptions {
    pub out: Option<PathBuf>,
    pub svg: Option<PathBuf>,
    pub comb: Option<f64>,
    pub report: bool,
    pub continuity: Option<ContinuityMode>,
    pub lambda_e: Option<f64>,
    pub lambda_c: Option<f64>,
}

/// Reads `input`, applies the flag overrides and builds the curve.
pub fn build_file(input: &Path, opts: &BuildOptions) -> Result<(PointSetFile, BuildOutcome), CliError> {
    let text = fs::read_to_string(input).map_err(|e| CliError::new(e.into()).context(input.display()))?;
    let mut file = PointSetFile::from_json(&text).map_err(|e| CliError::new(e).context(input.display()))?;
    if let Some(mode) = opts.continuity {
        file.continuity = mode;
    }
    if opts.lambda_e.is_some() || opts.lambda_c.is_some() {
        let mut w = file.weights.unwrap_or_default();
        w.lambda_e = opts.lambda_e.unwrap_or(w.lambda_e);
        w.lambda_c = opts.lambda_c.unwrap_or(w.lambda_c);
        w.validate()?;
        file.weights = Some(w);
    }
    let outcome = file.build()?;
    Ok((file, outcome))
}

/// One row in the layout of the usual statistics table: points, open and
/// closed curve counts, Ē, Ê and the mean insertion time, followed by
/// the individual insertion times.
pub fn report_table(name: &str, outcome: &BuildOutcome, curve: &CurveFile) -> String {
    let doc = &outcome.document;
    let closed = usize::from(doc.is_closed());
    let times = &outcome.edit_times;
    let mean = if times.is_empty() {
        Duration::ZERO
    } else {
        times.iter().sum::<Duration>() / times.len() as u32
    };
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<24} {:>5} {:>4} {:>4} {:>10} {:>10} {:>9}",
        "Example", "N_I", "N_O", "N_C", "E_avg", "E_max", "T (sec.)"
    );
    let _ = writeln!(
        out,
        "{:<24} {:>5} {:>4} {:>4} {:>10.2e} {:>10.2e} {:>9.3}",
        name,
        doc.points().len(),
        1 - closed,
        closed,
        curve.energy_report.average_ep,
        curve.energy_report.max_ep,
        mean.as_secs_f64()
    );
    let _ = writeln!(out);
    let _ = writeln!(out, "{:>5} {:>10} {:>9}", "edit", "T (sec.)", "segments");
    for (i, (t, r)) in times.iter().zip(&outcome.reports).enumerate() {
        let label = if i < doc.points().len() { i.to_string() } else { "close".into() };
        let _ = writeln!(
            out,
            "{label:>5} {:>10.4} {:>9}",
            t.as_secs_f64(),
            r.changed_segment_indices.len()
        );
    }
    out
}

/// Runs `build`; the curve goes to `--out` or, without it, to `stdout`.
/// The report goes to `stdout` when the curve does not, otherwise to
/// `stderr`.
pub fn run_build(
    input: &Path,
    opts: &BuildOptions,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), CliError> {
    let (_, outcome) = build_file(input, opts)?;
    let curve = CurveFile::from_document(&outcome.document)?;
    let json = curve.to_json()?;
    let io = |e: std::io::Error| CliError::new(e.into());
    match &opts.out {
        Some(path) => fs::write(path, &json).map_err(io)?,
        None => stdout.write_all(json.as_bytes()).map_err(io)?,
    }
    if let Some(path) = &opts.svg {
        let svg = render_svg(
            &outcome.document,
            &SvgOptions {
                comb_scale: opts.comb,
                ..SvgOptions::default()
            },
        )?;
        fs::write(path, svg).map_err(io)?;
    }
    if opts.report {
        let name = input.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let table = report_table(&name, &outcome, &curve);
        let sink: &mut dyn Write = if opts.out.is_some() { stdout } else { stderr };
        sink.write_all(table.as_bytes()).map_err(io)?;
    }
    Ok(())
}
