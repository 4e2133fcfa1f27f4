#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use chrono::NaiveDate;
use gridwar::grid_f::{fit_f, WinProbGrid, DEFAULT_MAX_ITER, DEFAULT_TOL};
use gridwar::grid_g::{fit_g, InningRunDist, DEFAULT_MIN_COUNT};
use gridwar::ingest::{
    build_half_innings, build_start_lines, write_plate_appearances, HalfInningRecord, PlateAppearance, RunsCharged,
    StartLine,
};
use gridwar::synth::{simulate_plate_appearances, SynthConfig};
use gridwar::types::{BaseState, Half, League, YearWindow};

pub const SEASON: i32 = 2019;

pub struct Fixture {
    pub pas: Vec<PlateAppearance>,
    pub halves: Vec<HalfInningRecord>,
    pub starts: Vec<StartLine>,
    pub f: WinProbGrid,
    pub g: InningRunDist,
}

pub fn window() -> YearWindow {
    YearWindow::new(2017, SEASON).unwrap()
}

pub fn synth_config() -> SynthConfig {
    SynthConfig { years: window(), ..Default::default() }
}

/// The synthetic 2017-2019 league with the fitted grids, built once per test binary.
pub fn league() -> &'static Fixture {
    static CELL: OnceLock<Fixture> = OnceLock::new();
    CELL.get_or_init(|| {
        let pas = simulate_plate_appearances(&synth_config());
        let halves = build_half_innings(&pas).records;
        let starts = build_start_lines(&pas, RunsCharged::Total).unwrap().lines;
        let f = fit_f(&starts, window(), DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        let g = fit_g(&pas, window(), DEFAULT_MIN_COUNT).unwrap();
        Fixture { pas, halves, starts, f, g }
    })
}

/// A plate appearance in its own half-inning `game`, top of `inning`.
pub fn pa(game: &str, inning: u32, state: &str, outs: u8, runs: u32, outs_recorded: u8) -> PlateAppearance {
    PlateAppearance {
        game_id: game.into(),
        year: SEASON,
        date: NaiveDate::from_ymd_opt(SEASON, 5, 1).unwrap(),
        home_team: "ANA".into(),
        away_team: "SEA".into(),
        league: League::AL,
        park: "ANA01".into(),
        inning,
        half: Half::Top,
        pitcher_id: "p".into(),
        batter_id: "b".into(),
        is_starter: true,
        outs_before: outs,
        base_state_before: BaseState::from_code(state).unwrap(),
        runs_on_play: runs,
        outs_recorded,
        earned_runs_on_play: None,
    }
}

/// Writes the synthetic play-by-play file for `cfg` under `dir`.
pub fn write_synth_pa(dir: &Path, cfg: &SynthConfig) -> PathBuf {
    let pas = simulate_plate_appearances(cfg);
    let mut buf = Vec::new();
    write_plate_appearances(&mut buf, &pas).unwrap();
    let p = dir.join("raw.csv");
    std::fs::write(&p, buf).unwrap();
    p
}

pub fn gridwar(args: &[&str]) -> i32 {
    let mut argv = vec!["gridwar"];
    argv.extend_from_slice(args);
    gridwar::cli::run(argv)
}

/// Runs ingest through gwar on the bundled synthetic league inside `dir`.
/// Returns the seasons CSV path.
pub fn run_pipeline(dir: &Path) -> PathBuf {
    let raw = write_synth_pa(dir, &synth_config());
    let s = |p: PathBuf| p.to_str().unwrap().to_string();
    let ing = s(dir.join("ingest"));
    let years = window().to_string();
    assert_eq!(gridwar(&["ingest", "--input", &s(raw), "--out", &ing]), 0);
    let starts = format!("{ing}/start_lines.csv");
    let f = s(dir.join("f_grid.json"));
    let g = s(dir.join("g_dist.json"));
    let park = s(dir.join("park_fx.json"));
    assert_eq!(gridwar(&["fit-f", "--starts", &starts, "--years", &years, "--out", &f]), 0);
    assert_eq!(gridwar(&["fit-g", "--pa", &format!("{ing}/plate_appearances.csv"), "--years", &years, "--out", &g]), 0);
    assert_eq!(
        gridwar(&["fit-park", "--half-innings", &format!("{ing}/half_innings.csv"), "--years", &years, "--out", &park]),
        0
    );
    let games = dir.join("gwar_games.csv");
    let seasons = dir.join("gwar_seasons.csv");
    let out = format!("{},{}", s(games), s(seasons.clone()));
    assert_eq!(gridwar(&["gwar", "--starts", &starts, "--f", &f, "--g", &g, "--park", &park, "--out", &out]), 0);
    seasons
}

pub fn golden_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/gwar_seasons.csv")
}
