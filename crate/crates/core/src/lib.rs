//! Grid WAR: per-game wins above replacement for starting pitchers from a
//! win-probability grid over (innings, runs allowed), with park adjustment.
//!
//! The pipeline: [`ingest`] play-by-play into plate appearances, half-innings
//! and start lines; fit [`grid_f`] (win probability after `R` runs through `I`
//! innings) and [`grid_g`] (runs still to score from a base-out state); fit
//! [`park`] effects; value starts with [`gwar`].

pub mod cli;
pub mod grid_f;
pub mod grid_g;
pub mod gwar;
pub mod ingest;
pub mod io;
pub mod linalg;
pub mod park;
pub mod rng;
pub mod synth;
pub mod types;
