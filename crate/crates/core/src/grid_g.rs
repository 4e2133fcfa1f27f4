//! Empirical distribution `g(R | S, O)` of the runs still to score in a
//! half-inning from base state `S` with `O` outs.
//!
//! Every plate appearance in innings 1 to 8 opens a state; the runs scored
//! from that plate appearance to the end of its half-inning are tallied for
//! that state. Counts above 13 land in the 13 bin so each row stays a proper
//! distribution.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{half_inning_groups, sorted_by_half_inning, PlateAppearance};
use crate::types::{BaseState, YearWindow};

pub const G_R_MAX: u32 = 13;
pub const G_BINS: usize = G_R_MAX as usize + 1;
pub const DEFAULT_MIN_COUNT: u64 = 100;
/// Innings pooled into the fit.
pub const LAST_POOLED_INNING: u32 = 8;
pub const DIST_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GError {
    #[error("cells below the minimum count of {min}: {}", .cells.join(", "))]
    DeficientCells { min: u64, cells: Vec<String> },
    #[error("outs {0} outside 0..=2")]
    Outs(u8),
    #[error("no data for state {state} with {outs} outs")]
    Unfitted { state: BaseState, outs: u8 },
}

/// One (state, outs) row of the distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GCell {
    pub state: BaseState,
    pub outs: u8,
    pub count: u64,
    /// `None` when nothing was observed (only possible with a zero minimum).
    pub probs: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InningRunDist {
    pub schema_version: u32,
    pub window: YearWindow,
    pub min_count: u64,
    /// 24 cells ordered by state (see [`BaseState::ALL`]) then outs.
    pub cells: Vec<GCell>,
}

fn cell_index(state: BaseState, outs: u8) -> usize {
    state.index() * 3 + outs as usize
}

/// Raw tallies per (state, outs, runs) before normalisation.
#[derive(Debug, Clone, PartialEq)]
pub struct GTally {
    counts: Vec<[u64; G_BINS]>,
}

impl Default for GTally {
    fn default() -> Self {
        GTally { counts: vec![[0; G_BINS]; 24] }
    }
}

impl GTally {
    pub fn add(&mut self, pas: &[PlateAppearance], window: YearWindow) {
        let sorted = sorted_by_half_inning(pas);
        for group in half_inning_groups(&sorted) {
            let first = group[0];
            if first.inning > LAST_POOLED_INNING || !window.contains(first.year) {
                continue;
            }
            // Runs from each plate appearance to the end of the half-inning.
            let mut remaining: u32 = group.iter().map(|p| p.runs_on_play).sum();
            for pa in group {
                let bin = remaining.min(G_R_MAX) as usize;
                self.counts[cell_index(pa.base_state_before, pa.outs_before)][bin] += 1;
                remaining -= pa.runs_on_play;
            }
        }
    }

    pub fn merge(&mut self, other: &GTally) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn count(&self, state: BaseState, outs: u8, runs: u32) -> u64 {
        self.counts[cell_index(state, outs)][runs.min(G_R_MAX) as usize]
    }

    pub fn into_dist(self, window: YearWindow, min_count: u64) -> Result<InningRunDist, GError> {
        let mut cells = Vec::with_capacity(24);
        let mut deficient = Vec::new();
        for state in BaseState::ALL {
            for outs in 0..3u8 {
                let row = &self.counts[cell_index(state, outs)];
                let count: u64 = row.iter().sum();
                if count < min_count {
                    deficient.push(format!("{state}/{outs} ({count})"));
                }
                let probs = (count > 0).then(|| row.iter().map(|&c| c as f64 / count as f64).collect());
                cells.push(GCell { state, outs, count, probs });
            }
        }
        if !deficient.is_empty() {
            return Err(GError::DeficientCells { min: min_count, cells: deficient });
        }
        Ok(InningRunDist { schema_version: DIST_SCHEMA_VERSION, window, min_count, cells })
    }
}

pub fn fit_g(pas: &[PlateAppearance], window: YearWindow, min_count: u64) -> Result<InningRunDist, GError> {
    let mut tally = GTally::default();
    tally.add(pas, window);
    tally.into_dist(window, min_count)
}

impl InningRunDist {
    pub fn cell(&self, state: BaseState, outs: u8) -> Result<&GCell, GError> {
        if outs > 2 {
            return Err(GError::Outs(outs));
        }
        Ok(&self.cells[cell_index(state, outs)])
    }

    /// The full row `g(. | S, O)` over 0..=13.
    pub fn row(&self, state: BaseState, outs: u8) -> Result<&[f64], GError> {
        self.cell(state, outs)?
            .probs
            .as_deref()
            .ok_or(GError::Unfitted { state, outs })
    }

    /// A point mass at zero runs for every state, useful as a neutral `g`.
    pub fn point_mass_at_zero(window: YearWindow) -> Self {
        let mut tally = GTally::default();
        for row in tally.counts.iter_mut() {
            row[0] = 1;
        }
        tally.into_dist(window, 0).expect("every cell has a count")
    }

    /// Builds a distribution from explicit rows; rows must sum to one.
    pub fn from_rows(window: YearWindow, rows: BTreeMap<(BaseState, u8), Vec<f64>>) -> Self {
        let mut cells: Vec<GCell> = BaseState::ALL
            .iter()
            .flat_map(|&state| (0..3u8).map(move |outs| GCell { state, outs, count: 0, probs: None }))
            .collect();
        for ((state, outs), mut probs) in rows {
            probs.resize(G_BINS, 0.0);
            let c = &mut cells[cell_index(state, outs)];
            c.count = 1;
            c.probs = Some(probs);
        }
        InningRunDist { schema_version: DIST_SCHEMA_VERSION, window, min_count: 0, cells }
    }
}

/// `g(R | S, O)`; zero outside the 0..=13 support.
pub fn eval_g(dist: &InningRunDist, state: BaseState, outs: u8, runs: u32) -> Result<f64, GError> {
    let row = dist.row(state, outs)?;
    Ok(if runs > G_R_MAX { 0.0 } else { row[runs as usize] })
}
