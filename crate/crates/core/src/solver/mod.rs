// Copyright 2026 the pkcurve Authors
// SPDX-License-Identifier: Apache-2.0

//! Constrained energy minimization over segment windows.

mod nlp;
mod window;

pub use nlp::{
    kkt_report, restore, solve_stage, KktReport, NlpProblem, SolveOutcome, SolverSettings, StageReport,
    Termination,
};
pub use window::{
    fit_parabola, SegmentProblem, WindowGeometry, WindowInput, WindowJointInput, WindowSegmentInput, FIT_SAMPLES,
};

use crate::energy::EnergyWeights;
use crate::error::Result;

/// Runs `first`, then `second` from its result.
///
/// If the second stage fails the first stage's result is returned with
/// `degraded` set.
pub fn solve_two_stage<P: NlpProblem + ?Sized>(
    first: &P,
    second: &P,
    settings: &SolverSettings,
    start: &[f64],
) -> Result<SolveOutcome> {
    let mut one = solve_stage(first, settings, start)?;
    match solve_stage(second, settings, &one.unknowns) {
        Ok(mut two) => {
            let mut reports = std::mem::take(&mut one.stage_reports);
            reports.append(&mut two.stage_reports);
            two.stage_reports = reports;
            Ok(two)
        }
        Err(_) => {
            one.degraded = true;
            Ok(one)
        }
    }
}

/// Result of optimizing one window.
#[derive(Clone, Debug)]
pub struct WindowSolution {
    pub geometry: WindowGeometry,
    pub outcome: SolveOutcome,
}

/// Two-stage optimization of a window: first with the input's weights, then
/// with the regularizers switched off.
pub fn solve_window(input: &WindowInput, settings: &SolverSettings) -> Result<WindowSolution> {
    let stage1 = SegmentProblem::new(input)?;
    let stage2 = stage1.with_weights(EnergyWeights::ZERO);
    // The trailing-segment construction can start far from the energy
    // valley when t̂ is small, and neither start dominates the other across
    // windows, so a faired start that satisfies the same constraints is
    // solved as well and the lower final energy wins.
    let mut outcome = solve_two_stage(&stage1, &stage2, settings, stage1.start());
    if let Ok(faired) = stage1.faired_start() {
        if let Ok(other) = solve_two_stage(&stage1, &stage2, settings, &faired) {
            if outcome.as_ref().map_or(true, |o| other.objective < o.objective) {
                outcome = Ok(other);
            }
        }
    }
    let outcome = outcome?;
    let geometry = stage1.unpack(&outcome.unknowns)?;
    Ok(WindowSolution { geometry, outcome })
}

