//! Writes a synthetic play-by-play file for the bundled 30-team league.
//!
//! cargo run --release --example synth_league -- --out /tmp/league --years 2019:2019

use std::path::PathBuf;

use clap::Parser;
use gridwar::ingest::write_plate_appearances;
use gridwar::synth::{simulate_plate_appearances, SynthConfig};
use gridwar::types::YearWindow;

#[derive(Parser)]
struct Args {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "2019:2019")]
    years: YearWindow,
    #[arg(long, default_value_t = 2019)]
    seed: u64,
    /// Games per season, at most 2340.
    #[arg(long, default_value_t = 2340)]
    games: usize,
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let a = Args::parse();
    let cfg = SynthConfig { seed: a.seed, years: a.years, games_per_season: a.games, ..Default::default() };
    let pas = simulate_plate_appearances(&cfg);
    std::fs::create_dir_all(&a.out)?;
    let mut buf = Vec::new();
    write_plate_appearances(&mut buf, &pas)?;
    let path = a.out.join("plate_appearances.csv");
    gridwar::io::write_atomic(&path, &buf)?;
    println!("{} plate appearances -> {}", pas.len(), path.display());
    Ok(())
}
