// Copyright 2026 the pkcurve Authors
// SPDX-License-Identifier: Apache-2.0

use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pkcurve::ContinuityMode;
use pkcurve_cli::batch::{run_build, BuildOptions};
use tracing_subscriber::EnvFilter;

#[derive(Parser)]
#[command(name = "pkcurve", version, about = "Interpolating Bézier curves with parabola-shaped curvature")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a curve from a point-set file.
    Build {
        input: PathBuf,
        /// Write the curve file here instead of standard output.
        #[arg(long, env = "PKC_OUT")]
        out: Option<PathBuf>,
        #[arg(long, env = "PKC_SVG")]
        svg: Option<PathBuf>,
        /// Draw the curvature comb in the SVG at this scale.
        #[arg(long, env = "PKC_COMB")]
        comb: Option<f64>,
        /// Print energies and insertion times.
        #[arg(long, env = "PKC_REPORT")]
        report: bool,
        #[arg(long, env = "PKC_CONTINUITY")]
        continuity: Option<ContinuityMode>,
        #[arg(long, env = "PKC_LAMBDA_E")]
        lambda_e: Option<f64>,
        #[arg(long, env = "PKC_LAMBDA_C")]
        lambda_c: Option<f64>,
    },
    /// Run the HTTP editing service.
    Serve {
        #[arg(long, env = "PKC_BIND", default_value = "127.0.0.1:8080")]
        bind: String,
        /// Write every revision of every document here.
        #[arg(long, env = "PKC_SNAPSHOT_DIR")]
        snapshot_dir: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_env("PKC_LOG").unwrap_or_else(|_| EnvFilter::new("info")))
        .with_writer(io::stderr)
        .init();
    match Cli::parse().command {
        Command::Build {
            input,
            out,
            svg,
            comb,
            report,
            continuity,
            lambda_e,
            lambda_c,
        } => {
            let opts = BuildOptions {
                out,
                svg,
                comb,
                report,
                continuity,
                lambda_e,
                lambda_c,
            };
            match run_build(&input, &opts, &mut io::stdout().lock(), &mut io::stderr().lock()) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(e.status as u8)
                }
            }
        }
        Command::Serve { bind, snapshot_dir } => {
            let runtime = match tokio::runtime::Runtime::new() {
                Ok(rt) => rt,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::FAILURE;
                }
            };
            match runtime.block_on(pkcurve_cli::service::serve(&bind, snapshot_dir)) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::FAILURE
                }
            }
        }
    }
}
