//! A small plate-appearance simulator over the synthetic schedule, used for
//! fixtures, the end-to-end example and the golden pipeline test.
//!
//! The model is deliberately crude: each plate appearance is an out, walk,
//! single, double, triple or home run with rates scaled by offense, pitcher
//! and park; runners advance by fixed rules with a little randomness.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::ingest::PlateAppearance;
use crate::park::league::{season_schedule, ScheduledGame, Team, OUTLIER_PARK, TEAMS};
use crate::rng;
use crate::types::{BaseState, Half, YearWindow};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    pub years: YearWindow,
    /// Games simulated per season, taken from the front of the shuffled schedule.
    pub games_per_season: usize,
    /// Spread of team-season offense on the log hit-rate scale.
    pub offense_sd: f64,
    pub park_sd: f64,
    /// Log hit-rate boost at the outlier park.
    pub outlier_boost: f64,
    pub rotation: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 2019,
            years: YearWindow { first: 2019, last: 2019 },
            games_per_season: 2340,
            offense_sd: 0.12,
            park_sd: 0.06,
            outlier_boost: 0.25,
            rotation: 5,
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum Outcome {
    Out,
    Walk,
    Single,
    Double,
    Triple,
    HomeRun,
}

/// Base rates per plate appearance; hits and walks scale together.
const WALK: f64 = 0.085;
const SINGLE: f64 = 0.145;
const DOUBLE: f64 = 0.047;
const TRIPLE: f64 = 0.005;
const HOME_RUN: f64 = 0.032;

fn draw_outcome(rng: &mut ChaCha20Rng, log_mult: f64) -> Outcome {
    let m = log_mult.exp();
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (p, o) in [
        (WALK, Outcome::Walk),
        (SINGLE, Outcome::Single),
        (DOUBLE, Outcome::Double),
        (TRIPLE, Outcome::Triple),
        (HOME_RUN, Outcome::HomeRun),
    ] {
        acc += p * m;
        if u < acc {
            return o;
        }
    }
    Outcome::Out
}

/// Runner advancement. Returns (new bases, runs, outs recorded).
fn advance(rng: &mut ChaCha20Rng, bases: BaseState, outs: u8, o: Outcome) -> (BaseState, u32, u8) {
    let (f, s, t) = (bases.first(), bases.second(), bases.third());
    match o {
        Outcome::Walk => {
            let runs = (f && s && t) as u32;
            let third = t || (f && s);
            let second = s || f;
            (BaseState::new(true, second, third), runs, 0)
        }
        Outcome::Single => {
            let mut runs = t as u32;
            let mut third = false;
            if s {
                if rng.random_bool(0.6) {
                    runs += 1;
                } else {
                    third = true;
                }
            }
            let second = f;
            (BaseState::new(true, second, third), runs, 0)
        }
        Outcome::Double => {
            let mut runs = t as u32 + s as u32;
            let mut third = false;
            if f {
                if rng.random_bool(0.4) {
                    runs += 1;
                } else {
                    third = true;
                }
            }
            (BaseState::new(false, true, third), runs, 0)
        }
        Outcome::Triple => (BaseState::new(false, false, true), f as u32 + s as u32 + t as u32, 0),
        Outcome::HomeRun => (BaseState::EMPTY, 1 + f as u32 + s as u32 + t as u32, 0),
        Outcome::Out => {
            if f && outs < 2 && rng.random_bool(0.12) {
                // Double play: lead runners move up, batter and runner from first out.
                let runs = if outs == 0 && t { 1 } else { 0 };
                let third = s || (t && runs == 0);
                return (BaseState::new(false, false, third && outs == 0), runs, 2);
            }
            if t && outs < 2 && rng.random_bool(0.3) {
                return (BaseState::new(f, s, false), 1, 1);
            }
            (bases, 0, 1)
        }
    }
}

/// Per-inning chance a starter leaves at the end of an inning regardless of workload.
const EARLY_EXIT: f64 = 0.01;

struct Staff {
    starters: Vec<String>,
    skill: Vec<f64>,
    reliever: String,
    next: usize,
}

struct SeasonState {
    offense: BTreeMap<&'static str, f64>,
    park: BTreeMap<&'static str, f64>,
    staff: BTreeMap<&'static str, Staff>,
}

fn normal(rng: &mut ChaCha20Rng, sd: f64) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    sd * z
}

fn season_state(cfg: &SynthConfig, year: i32) -> SeasonState {
    let mut r = rng::stream(cfg.seed, "synth-season", year as u64);
    let mut park_rng = rng::stream(cfg.seed, "synth-parks", 0);
    let mut offense = BTreeMap::new();
    let mut park = BTreeMap::new();
    let mut staff = BTreeMap::new();
    for t in &TEAMS {
        offense.insert(t.code, normal(&mut r, cfg.offense_sd));
        let boost = if t.park == OUTLIER_PARK { cfg.outlier_boost } else { 0.0 };
        park.insert(t.park, boost + normal(&mut park_rng, cfg.park_sd));
        let starters: Vec<String> = (1..=cfg.rotation).map(|k| format!("{}sp{k}", t.code.to_lowercase())).collect();
        let mut skill_rng = rng::stream(cfg.seed, &format!("synth-staff-{}", t.code), 0);
        let skill = (0..cfg.rotation).map(|_| normal(&mut skill_rng, 0.1)).collect();
        staff.insert(t.code, Staff { starters, skill, reliever: format!("{}rp", t.code.to_lowercase()), next: 0 });
    }
    SeasonState { offense, park, staff }
}

struct Pitching {
    id: String,
    skill: f64,
    is_starter: bool,
    faced: u32,
    runs: u32,
    limit: u32,
    blowup: u32,
}

fn play_game(
    rng: &mut ChaCha20Rng,
    g: &ScheduledGame,
    st: &mut SeasonState,
    out: &mut Vec<PlateAppearance>,
) {
    let mut take_starter = |team: &Team, rng: &mut ChaCha20Rng| {
        let s = st.staff.get_mut(team.code).expect("team staff");
        let k = s.next % s.starters.len();
        s.next += 1;
        Pitching {
            id: s.starters[k].clone(),
            skill: s.skill[k],
            is_starter: true,
            faced: 0,
            runs: 0,
            limit: rng.random_range(18..38),
            blowup: rng.random_range(4..13),
        }
    };
    // Index 0 pitches to the away side (home staff), index 1 to the home side.
    let mut pitchers = [take_starter(g.home, rng), take_starter(g.away, rng)];
    let relievers = [st.staff[g.home.code].reliever.clone(), st.staff[g.away.code].reliever.clone()];
    let park_mult = st.park[g.home.park];
    let offense = [st.offense[g.away.code], st.offense[g.home.code]];
    let mut score = [0u32, 0u32]; // away, home

    let mut inning = 1u32;
    loop {
        for half in [Half::Top, Half::Bottom] {
            let side = (half == Half::Bottom) as usize;
            if half == Half::Bottom && inning >= 9 && score[1] > score[0] {
                break;
            }
            let mut outs = 0u8;
            let mut bases = BaseState::EMPTY;
            while outs < 3 {
                let p = &mut pitchers[side];
                let tired = p.is_starter && (p.faced >= p.limit + 8 || (p.runs >= p.blowup && outs > 0 && p.faced > 3));
                if tired {
                    *p = Pitching {
                        id: relievers[side].clone(),
                        skill: 0.0,
                        is_starter: false,
                        faced: 0,
                        runs: 0,
                        limit: u32::MAX,
                        blowup: u32::MAX,
                    };
                }
                let p = &mut pitchers[side];
                let o = draw_outcome(rng, offense[side] + park_mult - p.skill);
                let (next, runs, rec) = advance(rng, bases, outs, o);
                out.push(PlateAppearance {
                    game_id: g.game_id.clone(),
                    year: g.year,
                    date: g.date,
                    home_team: g.home.code.to_string(),
                    away_team: g.away.code.to_string(),
                    league: g.home.league,
                    park: g.home.park.to_string(),
                    inning,
                    half,
                    pitcher_id: p.id.clone(),
                    batter_id: format!("{}b{}", if side == 0 { g.away.code } else { g.home.code }.to_lowercase(), p.faced % 9 + 1),
                    is_starter: p.is_starter,
                    outs_before: outs,
                    base_state_before: bases,
                    runs_on_play: runs,
                    outs_recorded: rec,
                    earned_runs_on_play: Some(runs),
                });
                p.faced += 1;
                p.runs += runs;
                score[side] += runs;
                outs += rec;
                bases = if outs >= 3 { BaseState::EMPTY } else { next };
                if half == Half::Bottom && inning >= 9 && score[1] > score[0] {
                    break;
                }
            }
            // Starters past their limit leave between innings; a few leave early.
            let p = &mut pitchers[side];
            if p.is_starter && (p.faced >= p.limit || rng.random_bool(EARLY_EXIT)) {
                p.is_starter = false;
                p.id = relievers[side].clone();
                p.skill = 0.0;
            }
        }
        let done = inning >= 9 && score[0] != score[1];
        if done || inning >= 30 {
            break;
        }
        inning += 1;
    }
}

/// Simulates every configured season.
pub fn simulate_plate_appearances(cfg: &SynthConfig) -> Vec<PlateAppearance> {
    let mut out = Vec::new();
    for year in cfg.years.years() {
        let mut st = season_state(cfg, year);
        let games = season_schedule(year);
        let n = cfg.games_per_season.min(games.len());
        let mut played: Vec<&ScheduledGame> = games.iter().take(n).collect();
        played.sort_by(|a, b| (a.date, &a.game_id).cmp(&(b.date, &b.game_id)));
        for (k, g) in played.into_iter().enumerate() {
            let mut r = rng::stream(cfg.seed, &format!("synth-game-{year}"), k as u64);
            play_game(&mut r, g, &mut st, &mut out);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{build_half_innings, build_start_lines, RunsCharged};

    #[test]
    fn simulated_games_are_well_formed() {
        let cfg = SynthConfig { games_per_season: 60, ..Default::default() };
        let pas = simulate_plate_appearances(&cfg);
        assert_eq!(pas, simulate_plate_appearances(&cfg));
        assert!(pas.iter().all(|p| p.outs_before + p.outs_recorded <= 3 && p.runs_on_play <= 4));
        let halves = build_half_innings(&pas);
        assert!(halves.warnings.is_empty(), "{:?}", halves.warnings);
        let starts = build_start_lines(&pas, RunsCharged::Total).unwrap();
        assert_eq!(starts.lines.len() + starts.rejected.len(), 120);
        let runs: u32 = pas.iter().map(|p| p.runs_on_play).sum();
        let per_game = runs as f64 / 60.0;
        assert!((5.0..14.0).contains(&per_game), "{per_game} runs per game");
    }
}
