//! Play-by-play ingestion.
//!
//! Turns delimiter-separated plate-appearance exports into validated
//! [`PlateAppearance`] rows, then derives per-half-inning run totals and one
//! [`StartLine`] per starting pitcher per game.
//!
//! Rows that fail validation are never dropped silently; they come back as
//! [`Rejection`] records carrying the source line number.

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::types::{team_season, BaseState, Half, League};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("schema error: missing required column {0:?}")]
    MissingColumn(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("data error in game {game_id}: {message}")]
    Data { game_id: String, message: String },
}

/// One plate appearance with the game state it started from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlateAppearance {
    pub game_id: String,
    pub year: i32,
    pub date: NaiveDate,
    pub home_team: String,
    pub away_team: String,
    /// League whose rules govern the game (the home team's league).
    pub league: League,
    pub park: String,
    pub inning: u32,
    pub half: Half,
    pub pitcher_id: String,
    pub batter_id: String,
    pub is_starter: bool,
    pub outs_before: u8,
    pub base_state_before: BaseState,
    pub runs_on_play: u32,
    pub outs_recorded: u8,
    /// Earned runs on the play, when the export carries them.
    #[serde(default)]
    pub earned_runs_on_play: Option<u32>,
}

impl PlateAppearance {
    pub fn batting_team(&self) -> &str {
        if self.half.home_bats() {
            &self.home_team
        } else {
            &self.away_team
        }
    }

    pub fn fielding_team(&self) -> &str {
        if self.half.home_bats() {
            &self.away_team
        } else {
            &self.home_team
        }
    }

    pub fn outs_after(&self) -> u8 {
        self.outs_before + self.outs_recorded
    }
}

/// Logical field names, in canonical output order.
pub const PA_FIELDS: [&str; 17] = [
    "game_id",
    "year",
    "date",
    "home_team",
    "away_team",
    "league",
    "park",
    "inning",
    "half",
    "pitcher_id",
    "batter_id",
    "is_starter",
    "outs_before",
    "base_state_before",
    "runs_on_play",
    "outs_recorded",
    "earned_runs_on_play",
];

const OPTIONAL_FIELDS: [&str; 1] = ["earned_runs_on_play"];

/// Maps logical plate-appearance fields onto source column headers.
///
/// Fields absent from `columns` are looked up under their logical name, so
/// the default map reads files written by [`write_plate_appearances`].
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ColumnMap {
    #[serde(default)]
    pub delimiter: Option<char>,
    #[serde(default)]
    pub columns: BTreeMap<String, String>,
}

impl ColumnMap {
    pub fn from_json(text: &str) -> Result<Self, IngestError> {
        let map: ColumnMap =
            serde_json::from_str(text).map_err(|e| IngestError::Schema(e.to_string()))?;
        for key in map.columns.keys() {
            if !PA_FIELDS.contains(&key.as_str()) {
                return Err(IngestError::Schema(format!("unknown logical field {key:?}")));
            }
        }
        if let Some(d) = map.delimiter {
            if !d.is_ascii() {
                return Err(IngestError::Schema(format!("delimiter {d:?} is not ASCII")));
            }
        }
        Ok(map)
    }

    fn source_name<'a>(&'a self, field: &'a str) -> &'a str {
        self.columns.get(field).map(String::as_str).unwrap_or(field)
    }

    fn delimiter(&self) -> u8 {
        self.delimiter.map(|c| c as u8).unwrap_or(b',')
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub line: u64,
    pub reason: String,
    pub raw: String,
}

#[derive(Debug, Default)]
pub struct ParsedPlateAppearances {
    pub records: Vec<PlateAppearance>,
    pub rejects: Vec<Rejection>,
}

/// Parses plate appearances. Header problems are fatal; row problems become
/// rejections and parsing continues.
pub fn parse_plate_appearances<R: Read>(
    source: R,
    schema: &ColumnMap,
) -> Result<ParsedPlateAppearances, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(schema.delimiter())
        .flexible(true)
        .from_reader(source);
    let headers = reader.headers()?.clone();
    let position: HashMap<&str, usize> =
        headers.iter().enumerate().map(|(i, h)| (h.trim(), i)).collect();

    let mut index = [None; PA_FIELDS.len()];
    for (slot, field) in index.iter_mut().zip(PA_FIELDS) {
        let name = schema.source_name(field);
        match position.get(name) {
            Some(&i) => *slot = Some(i),
            None if OPTIONAL_FIELDS.contains(&field) && !schema.columns.contains_key(field) => {}
            None => return Err(IngestError::MissingColumn(name.to_string())),
        }
    }

    let delim = (schema.delimiter() as char).to_string();
    let mut out = ParsedPlateAppearances::default();
    for result in reader.records() {
        let record = result?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        match parse_row(&record, &index) {
            Ok(pa) => out.records.push(pa),
            Err(reason) => out.rejects.push(Rejection {
                line,
                reason,
                raw: record.iter().collect::<Vec<_>>().join(&delim),
            }),
        }
    }
    Ok(out)
}

fn parse_row(
    record: &csv::StringRecord,
    index: &[Option<usize>; PA_FIELDS.len()],
) -> Result<PlateAppearance, String> {
    let field = |k: usize| -> Result<&str, String> {
        let i = index[k].expect("required columns resolved at header time");
        record
            .get(i)
            .map(str::trim)
            .ok_or_else(|| format!("missing value for {}", PA_FIELDS[k]))
    };
    let text = |k: usize| -> Result<String, String> {
        let v = field(k)?;
        if v.is_empty() {
            Err(format!("empty {}", PA_FIELDS[k]))
        } else {
            Ok(v.to_string())
        }
    };
    let int = |k: usize| -> Result<i64, String> {
        let v = field(k)?;
        v.parse::<i64>().map_err(|_| format!("invalid {} {v:?}", PA_FIELDS[k]))
    };

    let year = int(1)? as i32;
    let date_raw = field(2)?;
    let date = NaiveDate::parse_from_str(date_raw, "%Y-%m-%d")
        .or_else(|_| NaiveDate::parse_from_str(date_raw, "%Y%m%d"))
        .map_err(|_| format!("invalid date {date_raw:?}"))?;
    let league = field(5)?
        .parse::<League>()
        .map_err(|_| format!("unknown league code {:?}", field(5).unwrap_or_default()))?;
    let inning = int(7)?;
    if inning < 1 {
        return Err(format!("invalid inning {inning}"));
    }
    let half = field(8)?.parse::<Half>().map_err(|e| e.to_string())?;
    let is_starter = parse_bool(field(11)?).ok_or_else(|| {
        format!("invalid is_starter {:?}", field(11).unwrap_or_default())
    })?;
    let outs_before = int(12)?;
    if !(0..=2).contains(&outs_before) {
        return Err(format!("invalid outs_before {outs_before}"));
    }
    let base_raw = field(13)?;
    let base_state_before =
        BaseState::from_code(base_raw).map_err(|_| format!("invalid base state {base_raw:?}"))?;
    let runs_on_play = int(14)?;
    if !(0..=4).contains(&runs_on_play) {
        return Err(format!("invalid runs_on_play {runs_on_play}"));
    }
    let outs_recorded = int(15)?;
    if !(0..=3).contains(&outs_recorded) {
        return Err(format!("invalid outs_recorded {outs_recorded}"));
    }
    if outs_before + outs_recorded > 3 {
        return Err(format!(
            "outs_before + outs_recorded = {} exceeds 3",
            outs_before + outs_recorded
        ));
    }
    let earned_runs_on_play = match index[16] {
        None => None,
        Some(_) => match field(16)? {
            "" => None,
            v => {
                let e: u32 = v.parse().map_err(|_| format!("invalid earned_runs_on_play {v:?}"))?;
                if e as i64 > runs_on_play {
                    return Err(format!("earned runs {e} exceed runs on play {runs_on_play}"));
                }
                Some(e)
            }
        },
    };

    Ok(PlateAppearance {
        game_id: text(0)?,
        year,
        date,
        home_team: text(3)?,
        away_team: text(4)?,
        league,
        park: text(6)?,
        inning: inning as u32,
        half,
        pitcher_id: text(9)?,
        batter_id: text(10)?,
        is_starter,
        outs_before: outs_before as u8,
        base_state_before,
        runs_on_play: runs_on_play as u32,
        outs_recorded: outs_recorded as u8,
        earned_runs_on_play,
    })
}

fn parse_bool(v: &str) -> Option<bool> {
    match v {
        "1" | "true" | "TRUE" | "True" | "T" | "t" | "Y" | "y" => Some(true),
        "0" | "false" | "FALSE" | "False" | "F" | "f" | "N" | "n" => Some(false),
        _ => None,
    }
}

/// Writes plate appearances with the canonical header ([`PA_FIELDS`]).
pub fn write_plate_appearances<W: Write>(out: W, pas: &[PlateAppearance]) -> Result<(), IngestError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(PA_FIELDS)?;
    for pa in pas {
        w.write_record([
            pa.game_id.clone(),
            pa.year.to_string(),
            pa.date.format("%Y-%m-%d").to_string(),
            pa.home_team.clone(),
            pa.away_team.clone(),
            pa.league.to_string(),
            pa.park.clone(),
            pa.inning.to_string(),
            pa.half.to_string(),
            pa.pitcher_id.clone(),
            pa.batter_id.clone(),
            (pa.is_starter as u8).to_string(),
            pa.outs_before.to_string(),
            pa.base_state_before.code(),
            pa.runs_on_play.to_string(),
            pa.outs_recorded.to_string(),
            pa.earned_runs_on_play.map(|e| e.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_rejects<W: Write>(out: W, rejects: &[Rejection]) -> Result<(), IngestError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["line", "reason", "raw"])?;
    for r in rejects {
        w.write_record([r.line.to_string(), r.reason.clone(), r.raw.clone()])?;
    }
    w.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Half-innings

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HalfInningRecord {
    pub game_id: String,
    pub year: i32,
    pub park: String,
    pub inning: u32,
    pub half: Half,
    pub offense_team_season: String,
    pub defense_team_season: String,
    pub runs: u32,
}

impl HalfInningRecord {
    /// Team-season of the home side: fielding in the top half, batting in the bottom.
    pub fn home_team_season(&self) -> &str {
        if self.half.home_bats() {
            &self.offense_team_season
        } else {
            &self.defense_team_season
        }
    }
}

#[derive(Debug, Default)]
pub struct HalfInnings {
    pub records: Vec<HalfInningRecord>,
    pub warnings: Vec<String>,
}

/// Stable ordering of plate appearances by (game first appearance, inning, half).
/// Within a half-inning the source order is kept.
pub fn sorted_by_half_inning(pas: &[PlateAppearance]) -> Vec<&PlateAppearance> {
    let mut game_order: HashMap<&str, usize> = HashMap::new();
    for pa in pas {
        let n = game_order.len();
        game_order.entry(pa.game_id.as_str()).or_insert(n);
    }
    let mut sorted: Vec<&PlateAppearance> = pas.iter().collect();
    sorted.sort_by_key(|pa| (game_order[pa.game_id.as_str()], pa.inning, pa.half));
    sorted
}

/// Splits an already-sorted sequence into half-inning groups.
pub fn half_inning_groups<'a>(sorted: &[&'a PlateAppearance]) -> Vec<Vec<&'a PlateAppearance>> {
    let mut groups: Vec<Vec<&PlateAppearance>> = Vec::new();
    for pa in sorted {
        match groups.last_mut() {
            Some(g)
                if g[0].game_id == pa.game_id && g[0].inning == pa.inning && g[0].half == pa.half =>
            {
                g.push(pa)
            }
            _ => groups.push(vec![pa]),
        }
    }
    groups
}

pub fn build_half_innings(pas: &[PlateAppearance]) -> HalfInnings {
    let sorted = sorted_by_half_inning(pas);
    let mut out = HalfInnings::default();
    for group in half_inning_groups(&sorted) {
        let first = group[0];
        let runs = group.iter().map(|pa| pa.runs_on_play).sum();
        let outs: u32 = group.iter().map(|pa| pa.outs_recorded as u32).sum();
        if outs > 3 {
            out.warnings.push(format!(
                "game {} inning {} {}: {outs} outs recorded",
                first.game_id, first.inning, first.half
            ));
        }
        out.records.push(HalfInningRecord {
            game_id: first.game_id.clone(),
            year: first.year,
            park: first.park.clone(),
            inning: first.inning,
            half: first.half,
            offense_team_season: team_season(first.batting_team(), first.year),
            defense_team_season: team_season(first.fielding_team(), first.year),
            runs,
        });
    }
    out
}

// ---------------------------------------------------------------------------
// Start lines

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExitKind {
    EndOfInning,
    MidInning,
}

/// A starting pitcher's line for one game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StartLine {
    pub pitcher_id: String,
    pub game_id: String,
    pub year: i32,
    pub date: NaiveDate,
    pub park: String,
    pub is_home: bool,
    pub league: League,
    pub exit_kind: ExitKind,
    /// Innings completed, or the inning being pitched for a mid-inning exit. Capped at 9.
    pub inning: u32,
    pub exit_outs: Option<u8>,
    pub exit_base_state: Option<BaseState>,
    pub runs_allowed: u32,
    pub team_won: bool,
}

/// Which runs are charged to the starter.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunsCharged {
    #[default]
    Total,
    Earned,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RejectedStart {
    pub game_id: String,
    pub pitcher_id: String,
    pub reason: String,
}

#[derive(Debug, Default)]
pub struct StartLines {
    pub lines: Vec<StartLine>,
    pub rejected: Vec<RejectedStart>,
}

pub const MAX_INNING: u32 = 9;

pub fn build_start_lines(pas: &[PlateAppearance], charged: RunsCharged) -> Result<StartLines, IngestError> {
    let sorted = sorted_by_half_inning(pas);
    let mut out = StartLines::default();
    let mut start = 0;
    while start < sorted.len() {
        let game_id = &sorted[start].game_id;
        let mut end = start;
        while end < sorted.len() && &sorted[end].game_id == game_id {
            end += 1;
        }
        game_start_lines(&sorted[start..end], charged, &mut out)?;
        start = end;
    }
    Ok(out)
}

fn game_start_lines(
    game: &[&PlateAppearance],
    charged: RunsCharged,
    out: &mut StartLines,
) -> Result<(), IngestError> {
    let game_id = game[0].game_id.clone();
    let data_err = |message: String| IngestError::Data { game_id: game_id.clone(), message };
    let away_runs: u32 = game.iter().filter(|p| p.half == Half::Top).map(|p| p.runs_on_play).sum();
    let home_runs: u32 = game.iter().filter(|p| p.half == Half::Bottom).map(|p| p.runs_on_play).sum();

    // The home staff pitches the top halves.
    for pitching_half in [Half::Top, Half::Bottom] {
        let side: Vec<&PlateAppearance> =
            game.iter().copied().filter(|p| p.half == pitching_half).collect();
        if side.is_empty() {
            continue;
        }
        let mut starters: Vec<&str> =
            side.iter().filter(|p| p.is_starter).map(|p| p.pitcher_id.as_str()).collect();
        starters.sort_unstable();
        starters.dedup();
        let starter = match starters.as_slice() {
            [] => {
                out.rejected.push(RejectedStart {
                    game_id: game_id.clone(),
                    pitcher_id: String::new(),
                    reason: format!("no starter flagged for {} side", side_label(pitching_half)),
                });
                continue;
            }
            [one] => *one,
            many => {
                return Err(data_err(format!(
                    "several starters flagged for {} side: {}",
                    side_label(pitching_half),
                    many.join(",")
                )))
            }
        };

        let positions: Vec<usize> = side
            .iter()
            .enumerate()
            .filter(|(_, p)| p.is_starter && p.pitcher_id == starter)
            .map(|(i, _)| i)
            .collect();
        let (first, last) = (positions[0], *positions.last().unwrap());
        if last - first + 1 != positions.len() {
            return Err(data_err(format!(
                "starter {starter} appears in non-consecutive innings"
            )));
        }
        let stint = &side[first..=last];
        for w in stint.windows(2) {
            if w[1].inning > w[0].inning + 1 {
                return Err(data_err(format!(
                    "starter {starter} appears in non-consecutive innings"
                )));
            }
        }

        let outs: u32 = stint.iter().map(|p| p.outs_recorded as u32).sum();
        if outs == 0 {
            out.rejected.push(RejectedStart {
                game_id: game_id.clone(),
                pitcher_id: starter.to_string(),
                reason: "zero recorded outs".to_string(),
            });
            continue;
        }
        let mut runs = 0;
        for p in stint {
            runs += match charged {
                RunsCharged::Total => p.runs_on_play,
                RunsCharged::Earned => p.earned_runs_on_play.ok_or_else(|| {
                    data_err("earned runs requested but the export has no earned_runs_on_play".into())
                })?,
            };
        }

        let exit = stint[stint.len() - 1];
        let next = side.get(last + 1).filter(|n| n.inning == exit.inning);
        let (exit_kind, exit_outs, exit_base_state) = match next {
            Some(n) if exit.outs_after() < 3 => {
                (ExitKind::MidInning, Some(n.outs_before), Some(n.base_state_before))
            }
            // Either three outs were made or the game ended during the inning.
            _ => (ExitKind::EndOfInning, None, None),
        };

        let is_home = pitching_half == Half::Top;
        let team_won = if is_home { home_runs > away_runs } else { away_runs > home_runs };
        out.lines.push(StartLine {
            pitcher_id: starter.to_string(),
            game_id: game_id.clone(),
            year: exit.year,
            date: exit.date,
            park: exit.park.clone(),
            is_home,
            league: exit.league,
            exit_kind,
            inning: exit.inning.min(MAX_INNING),
            exit_outs,
            exit_base_state,
            runs_allowed: runs,
            team_won,
        });
    }
    Ok(())
}

fn side_label(pitching_half: Half) -> &'static str {
    match pitching_half {
        Half::Top => "home",
        Half::Bottom => "away",
    }
}
