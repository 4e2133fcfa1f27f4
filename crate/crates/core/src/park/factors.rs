//! Multiplicative home/road run-ratio park factors and their additive form.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::ingest::HalfInningRecord;
use crate::types::{split_team_season, YearWindow};

use super::{Estimator, ParkEffectSet, ParkError};

/// League mean runs per half-inning used for the additive conversion.
pub const LEAGUE_MEAN_RUNS: f64 = 0.5227;

/// Home and road run totals of one team over a window.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TeamAggregate {
    pub team: String,
    /// Park hosting most of the team's home games (ties: smallest code).
    pub park: String,
    pub home_games: u32,
    pub road_games: u32,
    pub home_runs_scored: u32,
    pub home_runs_allowed: u32,
    pub road_runs_scored: u32,
    pub road_runs_allowed: u32,
}

impl TeamAggregate {
    fn merge(&mut self, o: &TeamAggregate) {
        self.home_games += o.home_games;
        self.road_games += o.road_games;
        self.home_runs_scored += o.home_runs_scored;
        self.home_runs_allowed += o.home_runs_allowed;
        self.road_runs_scored += o.road_runs_scored;
        self.road_runs_allowed += o.road_runs_allowed;
    }

    /// Runs per game, both teams combined, at home and on the road.
    pub fn rates(&self) -> (f64, f64) {
        (
            (self.home_runs_scored + self.home_runs_allowed) as f64 / self.home_games as f64,
            (self.road_runs_scored + self.road_runs_allowed) as f64 / self.road_games as f64,
        )
    }
}

fn team_of(code: &str) -> Result<&str, ParkError> {
    split_team_season(code).map(|(t, _)| t).ok_or_else(|| ParkError::TeamSeason(code.to_string()))
}

/// Per-team aggregates over the half-innings inside `window`, sorted by team.
pub fn team_aggregates(half_innings: &[HalfInningRecord], window: YearWindow) -> Result<Vec<TeamAggregate>, ParkError> {
    #[derive(Default)]
    struct Acc {
        agg: TeamAggregate,
        home_games: BTreeSet<String>,
        road_games: BTreeSet<String>,
        parks: BTreeMap<String, BTreeSet<String>>,
    }
    let mut teams: BTreeMap<String, Acc> = BTreeMap::new();
    for h in half_innings.iter().filter(|h| window.contains(h.year)) {
        let off = team_of(&h.offense_team_season)?.to_string();
        let def = team_of(&h.defense_team_season)?.to_string();
        let (home, away) = if h.half.home_bats() { (off, def) } else { (def, off) };
        {
            let a = teams.entry(home.clone()).or_default();
            a.home_games.insert(h.game_id.clone());
            a.parks.entry(h.park.clone()).or_default().insert(h.game_id.clone());
            if h.half.home_bats() {
                a.agg.home_runs_scored += h.runs;
            } else {
                a.agg.home_runs_allowed += h.runs;
            }
        }
        let a = teams.entry(away).or_default();
        a.road_games.insert(h.game_id.clone());
        if h.half.home_bats() {
            a.agg.road_runs_allowed += h.runs;
        } else {
            a.agg.road_runs_scored += h.runs;
        }
    }
    Ok(teams
        .into_iter()
        .map(|(team, acc)| {
            let park = acc
                .parks
                .iter()
                .max_by(|a, b| a.1.len().cmp(&b.1.len()).then_with(|| b.0.cmp(a.0)))
                .map(|(p, _)| p.clone())
                .unwrap_or_default();
            TeamAggregate {
                team,
                park,
                home_games: acc.home_games.len() as u32,
                road_games: acc.road_games.len() as u32,
                ..acc.agg
            }
        })
        .collect())
}

/// Aggregates pooled by home park, skipping teams without home or road games.
fn by_park(aggs: &[TeamAggregate]) -> BTreeMap<String, TeamAggregate> {
    let mut out: BTreeMap<String, TeamAggregate> = BTreeMap::new();
    for a in aggs.iter().filter(|a| a.home_games > 0 && a.road_games > 0) {
        out.entry(a.park.clone())
            .or_insert_with(|| TeamAggregate { team: a.team.clone(), park: a.park.clone(), ..Default::default() })
            .merge(a);
    }
    out
}

/// Ratio of combined runs per game at home to combined runs per game on the road.
pub fn espn_park_factor(home_rpg: f64, road_rpg: f64) -> f64 {
    home_rpg / road_rpg
}

pub fn espn_park_factors(aggs: &[TeamAggregate]) -> BTreeMap<String, f64> {
    by_park(aggs)
        .into_iter()
        .map(|(p, a)| {
            let (h, r) = a.rates();
            (p, espn_park_factor(h, r))
        })
        .collect()
}

/// The intermediate quantities of the regressed run-ratio factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FangraphsFactor {
    pub xi: f64,
    pub raw: f64,
    pub ipf: f64,
    pub alpha: f64,
}

/// Regression weight for an `years`-year factor.
pub fn fangraphs_weight(years: usize) -> Result<f64, ParkError> {
    match years {
        3 => Ok(0.8),
        n => Err(ParkError::FangraphsWeight(n)),
    }
}

pub fn fangraphs_park_factor(home_rpg: f64, road_rpg: f64, n_teams: usize, weight: f64) -> FangraphsFactor {
    let xi = (home_rpg - road_rpg) / n_teams as f64;
    let raw = home_rpg / (road_rpg + xi);
    let ipf = (raw + 1.0) / 2.0;
    let alpha = 1.0 - (1.0 - ipf) * weight;
    FangraphsFactor { xi, raw, ipf, alpha }
}

pub fn fangraphs_park_factors(aggs: &[TeamAggregate], weight: f64) -> BTreeMap<String, FangraphsFactor> {
    let n_teams = aggs.iter().filter(|a| a.home_games > 0 && a.road_games > 0).count();
    by_park(aggs)
        .into_iter()
        .map(|(p, a)| {
            let (h, r) = a.rates();
            (p, fangraphs_park_factor(h, r, n_teams, weight))
        })
        .collect()
}

/// `(alpha - 1) * y_bar`
pub fn to_additive(alpha: f64, y_bar: f64) -> f64 {
    (alpha - 1.0) * y_bar
}

/// Mean runs per half-inning inside `window`.
pub fn mean_runs(half_innings: &[HalfInningRecord], window: YearWindow) -> Option<f64> {
    let (n, s) = half_innings
        .iter()
        .filter(|h| window.contains(h.year))
        .fold((0usize, 0u64), |(n, s), h| (n + 1, s + h.runs as u64));
    (n > 0).then(|| s as f64 / n as f64)
}

/// Additive effect set from multiplicative factors. Not centered.
pub fn additive_effect_set(
    multiplicative: &BTreeMap<String, f64>,
    y_bar: f64,
    estimator: Estimator,
    window: YearWindow,
) -> ParkEffectSet {
    let alpha = multiplicative.iter().map(|(p, a)| (p.clone(), to_additive(*a, y_bar))).collect();
    let mut set = ParkEffectSet::new(estimator, alpha, false);
    set.window = Some(window);
    set
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Half;

    #[test]
    fn espn_arithmetic() {
        assert_eq!(espn_park_factor(9.0, 9.0), 1.0);
        assert_eq!(espn_park_factor(10.0, 8.0), 1.25);
    }

    #[test]
    fn fangraphs_fixed_point() {
        let f = fangraphs_park_factor(9.0, 9.0, 30, 0.8);
        assert_eq!((f.xi, f.raw, f.ipf, f.alpha), (0.0, 1.0, 1.0, 1.0));
        assert_eq!(fangraphs_weight(3).unwrap(), 0.8);
        assert!(fangraphs_weight(1).is_err());
    }

    #[test]
    fn additive_arithmetic() {
        assert_eq!(to_additive(1.0, 0.5227), 0.0);
        assert!((to_additive(0.9, 0.5) + 0.05).abs() < 1e-15);
    }

    #[test]
    fn aggregates_from_half_innings() {
        let hi = |game: &str, park: &str, half: Half, off: &str, def: &str, runs| HalfInningRecord {
            game_id: game.into(),
            year: 2019,
            park: park.into(),
            inning: 1,
            half,
            offense_team_season: format!("{off}2019"),
            defense_team_season: format!("{def}2019"),
            runs,
        };
        let rows = vec![
            hi("G1", "AAA01", Half::Top, "BBB", "AAA", 3),
            hi("G1", "AAA01", Half::Bottom, "AAA", "BBB", 5),
            hi("G2", "BBB01", Half::Top, "AAA", "BBB", 1),
            hi("G2", "BBB01", Half::Bottom, "BBB", "AAA", 1),
        ];
        let aggs = team_aggregates(&rows, YearWindow::single(2019)).unwrap();
        assert_eq!(aggs[0].team, "AAA");
        assert_eq!(aggs[0].park, "AAA01");
        assert_eq!((aggs[0].home_runs_scored, aggs[0].home_runs_allowed), (5, 3));
        assert_eq!((aggs[0].road_runs_scored, aggs[0].road_runs_allowed), (1, 1));
        let espn = espn_park_factors(&aggs);
        assert_eq!(espn["AAA01"], 4.0);
        assert_eq!(espn["BBB01"], 0.25);
    }
}
