//! The 30-team league of 2017-2019 (Retrosheet team and park codes) and a
//! deterministic synthetic schedule with the same shape as a real season.

use std::collections::BTreeMap;

use chrono::{Duration, NaiveDate};
use rand::seq::SliceRandom;

use crate::ingest::HalfInningRecord;
use crate::rng;
use crate::types::{team_season, Half, League};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Team {
    pub code: &'static str,
    pub park: &'static str,
    pub league: League,
    pub division: &'static str,
}

const fn team(code: &'static str, park: &'static str, league: League, division: &'static str) -> Team {
    Team { code, park, league, division }
}

pub const TEAMS: [Team; 30] = [
    team("ANA", "ANA01", League::AL, "ALW"),
    team("ARI", "PHO01", League::NL, "NLW"),
    team("ATL", "ATL03", League::NL, "NLE"),
    team("BAL", "BAL12", League::AL, "ALE"),
    team("BOS", "BOS07", League::AL, "ALE"),
    team("CHA", "CHI12", League::AL, "ALC"),
    team("CHN", "CHI11", League::NL, "NLC"),
    team("CIN", "CIN09", League::NL, "NLC"),
    team("CLE", "CLE08", League::AL, "ALC"),
    team("COL", "DEN02", League::NL, "NLW"),
    team("DET", "DET05", League::AL, "ALC"),
    team("HOU", "HOU03", League::AL, "ALW"),
    team("KCA", "KAN06", League::AL, "ALC"),
    team("LAN", "LOS03", League::NL, "NLW"),
    team("MIA", "MIA02", League::NL, "NLE"),
    team("MIL", "MIL06", League::NL, "NLC"),
    team("MIN", "MIN04", League::AL, "ALC"),
    team("NYA", "NYC21", League::AL, "ALE"),
    team("NYN", "NYC20", League::NL, "NLE"),
    team("OAK", "OAK01", League::AL, "ALW"),
    team("PHI", "PHI13", League::NL, "NLE"),
    team("PIT", "PIT08", League::NL, "NLC"),
    team("SDN", "SAN02", League::NL, "NLW"),
    team("SEA", "SEA03", League::AL, "ALW"),
    team("SFN", "SFO03", League::NL, "NLW"),
    team("SLN", "STL10", League::NL, "NLC"),
    team("TBA", "STP01", League::AL, "ALE"),
    team("TEX", "ARL02", League::AL, "ALW"),
    team("TOR", "TOR02", League::AL, "ALE"),
    team("WAS", "WAS11", League::NL, "NLE"),
];

/// Coors Field, the high-altitude outlier.
pub const OUTLIER_PARK: &str = "DEN02";

pub fn team_by_code(code: &str) -> Option<&'static Team> {
    TEAMS.iter().find(|t| t.code == code)
}

/// Team code -> division label.
pub fn divisions() -> BTreeMap<String, String> {
    TEAMS.iter().map(|t| (t.code.to_string(), t.division.to_string())).collect()
}

/// Division paired with each division for interleague play.
fn mirror_division(d: &str) -> &'static str {
    match d {
        "ALE" => "NLE",
        "ALC" => "NLC",
        "ALW" => "NLW",
        "NLE" => "ALE",
        "NLC" => "ALC",
        _ => "ALW",
    }
}

/// Games per pairing: 19 within a division, 6 against the rest of the
/// league, 4 against the mirrored division of the other league. 156 a team.
fn games_between(a: &Team, b: &Team) -> u32 {
    if a.division == b.division {
        19
    } else if a.league == b.league {
        6
    } else if mirror_division(a.division) == b.division {
        4
    } else {
        0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScheduledGame {
    pub game_id: String,
    pub year: i32,
    pub date: NaiveDate,
    pub home: &'static Team,
    pub away: &'static Team,
}

/// A deterministic season schedule: 2340 games, shuffled across ~180 days.
pub fn season_schedule(year: i32) -> Vec<ScheduledGame> {
    let mut pairs: Vec<(&'static Team, &'static Team)> = Vec::new();
    for (i, a) in TEAMS.iter().enumerate() {
        for b in TEAMS.iter().skip(i + 1) {
            for g in 0..games_between(a, b) {
                if (g + year as u32).is_multiple_of(2) {
                    pairs.push((a, b));
                } else {
                    pairs.push((b, a));
                }
            }
        }
    }
    let mut order = rng::stream(0, "schedule", year as u64);
    pairs.shuffle(&mut order);

    let opening = NaiveDate::from_ymd_opt(year, 4, 1).expect("valid date");
    let n = pairs.len();
    let mut per_day: BTreeMap<(&str, NaiveDate), u32> = BTreeMap::new();
    pairs
        .into_iter()
        .enumerate()
        .map(|(k, (home, away))| {
            let date = opening + Duration::days((k * 180 / n) as i64);
            let seq = per_day.entry((home.code, date)).or_insert(0);
            *seq += 1;
            ScheduledGame {
                game_id: format!("{}{}{}", home.code, date.format("%Y%m%d"), seq),
                year,
                date,
                home,
                away,
            }
        })
        .collect()
}

/// Half-inning skeleton of a schedule with zero runs: 18 half-innings per
/// game, minus the bottom of the 9th in every other game.
pub fn half_inning_shape(games: &[ScheduledGame]) -> Vec<HalfInningRecord> {
    let mut out = Vec::with_capacity(games.len() * 18);
    for (k, g) in games.iter().enumerate() {
        for inning in 1..=9 {
            for half in [Half::Top, Half::Bottom] {
                if inning == 9 && half == Half::Bottom && k % 2 == 0 {
                    continue;
                }
                let (off, def) = if half == Half::Top { (g.away, g.home) } else { (g.home, g.away) };
                out.push(HalfInningRecord {
                    game_id: g.game_id.clone(),
                    year: g.year,
                    park: g.home.park.to_string(),
                    inning,
                    half,
                    offense_team_season: team_season(off.code, g.year),
                    defense_team_season: team_season(def.code, g.year),
                    runs: 0,
                });
            }
        }
    }
    out
}

/// Zero-run half-innings for every season in `years`.
pub fn synthetic_design_template(years: impl IntoIterator<Item = i32>) -> Vec<HalfInningRecord> {
    years.into_iter().flat_map(|y| half_inning_shape(&season_schedule(y))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn catalog_is_sorted_and_divisions_have_five_teams() {
        let codes: Vec<&str> = TEAMS.iter().map(|t| t.code).collect();
        let mut sorted = codes.clone();
        sorted.sort_unstable();
        assert_eq!(codes, sorted);
        let d = divisions();
        for div in ["ALE", "ALC", "ALW", "NLE", "NLC", "NLW"] {
            assert_eq!(d.values().filter(|v| *v == div).count(), 5);
        }
        assert_eq!(TEAMS.iter().map(|t| t.park).collect::<HashSet<_>>().len(), 30);
    }

    #[test]
    fn schedule_shape() {
        let s = season_schedule(2018);
        assert_eq!(s.len(), 30 * 156 / 2);
        for t in &TEAMS {
            let home = s.iter().filter(|g| g.home.code == t.code).count();
            let away = s.iter().filter(|g| g.away.code == t.code).count();
            assert_eq!(home + away, 156);
            assert!((home as i64 - away as i64).abs() <= 12, "{} {home} {away}", t.code);
        }
        let ids: HashSet<&str> = s.iter().map(|g| g.game_id.as_str()).collect();
        assert_eq!(ids.len(), s.len());
        assert_eq!(s, season_schedule(2018));
    }

    #[test]
    fn template_row_count() {
        let games = season_schedule(2017);
        let rows = half_inning_shape(&games);
        let skipped = games.len().div_ceil(2);
        assert_eq!(rows.len(), games.len() * 18 - skipped);
    }
}
