//! Per-game and seasonal Grid WAR for starting pitchers, with park
//! adjustment, rescaling against a reference WAR and comparison helpers.

use std::collections::BTreeMap;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid_f::{eval_f, FContext, GridError, WinProbability, R_MAX};
use crate::grid_g::{GError, InningRunDist, G_R_MAX};
use crate::ingest::{ExitKind, StartLine};
use crate::park::ParkEffectSet;
use crate::types::{BaseState, League};

pub const W_REP_MIN: f64 = 0.294;
pub const W_REP_MAX: f64 = 0.5;
pub const DEFAULT_W_REP: f64 = 0.41;
/// Adjusted win probabilities are kept this far inside (0, 1).
pub const PROB_FLOOR: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GwarError {
    #[error("replacement level {0} outside ({W_REP_MIN}, {W_REP_MAX})")]
    ReplacementLevel(f64),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Dist(#[from] GError),
    #[error("park {park} (game {game_id}) has no park effect")]
    UnknownPark { park: String, game_id: String },
    #[error("mid-inning exit in game {0} is missing its outs or base state")]
    MissingExitState(String),
    #[error("no starts to aggregate")]
    NoStarts,
    #[error("season mixes {0}")]
    MixedSeason(String),
    #[error("no pitcher appears in both the seasons and the reference")]
    NoOverlap,
    #[error("GWAR over the overlapping pitchers sums to zero")]
    ZeroTotal,
    #[error("rescaling factor {0} is not positive")]
    NonPositiveScale(f64),
}

/// Win probability of an average team with a replacement-level starter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct ReplacementLevel(f64);

impl ReplacementLevel {
    pub fn new(w_rep: f64) -> Result<Self, GwarError> {
        if w_rep > W_REP_MIN && w_rep < W_REP_MAX {
            Ok(ReplacementLevel(w_rep))
        } else {
            Err(GwarError::ReplacementLevel(w_rep))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl Default for ReplacementLevel {
    fn default() -> Self {
        ReplacementLevel(DEFAULT_W_REP)
    }
}

impl TryFrom<f64> for ReplacementLevel {
    type Error = GwarError;
    fn try_from(v: f64) -> Result<Self, GwarError> {
        ReplacementLevel::new(v)
    }
}

impl From<ReplacementLevel> for f64 {
    fn from(w: ReplacementLevel) -> f64 {
        w.0
    }
}

/// How the run-shift weight `h = I |alpha|` is treated.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaylorMode {
    /// `h` clamped to [0, 1].
    #[default]
    Clamped,
    /// `h` used as is.
    Literal,
}

/// GWAR of a start that ends at an inning boundary.
pub fn gwar_complete<F: WinProbability + ?Sized>(
    f: &F,
    ctx: &FContext,
    inning: u32,
    runs: u32,
    w_rep: ReplacementLevel,
) -> Result<f64, GwarError> {
    Ok(eval_f(f, ctx, inning, runs)? - w_rep.value())
}

/// Expected GWAR at the end of the exit inning: `sum_r g(r|S,O) q(I, r+R) - w_rep`.
fn convolve(
    g: &InningRunDist,
    state: BaseState,
    outs: u8,
    runs: u32,
    mut q: impl FnMut(u32) -> Result<f64, GwarError>,
) -> Result<f64, GwarError> {
    let row = g.row(state, outs)?;
    let mut total = 0.0;
    for r in 0..=G_R_MAX {
        let p = row[r as usize];
        if p != 0.0 {
            total += p * q(r + runs)?;
        }
    }
    Ok(total)
}

/// GWAR of a start that ends with `outs` outs and runners `state` in `inning`.
#[allow(clippy::too_many_arguments)]
pub fn gwar_mid_inning<F: WinProbability + ?Sized>(
    f: &F,
    g: &InningRunDist,
    ctx: &FContext,
    inning: u32,
    runs: u32,
    state: BaseState,
    outs: u8,
    w_rep: ReplacementLevel,
) -> Result<f64, GwarError> {
    let e = convolve(g, state, outs, runs, |r| Ok(eval_f(f, ctx, inning, r)?))?;
    Ok(e - w_rep.value())
}

/// `f(I, R - I alpha)` by a first-order expansion around the integer run
/// levels. `alpha > 0` is a hitter's park, which lowers the effective runs.
pub fn park_adjusted_f<F: WinProbability + ?Sized>(
    f: &F,
    ctx: &FContext,
    inning: u32,
    runs: u32,
    alpha: f64,
    mode: TaylorMode,
) -> Result<f64, GwarError> {
    let at = |r: u32| eval_f(f, ctx, inning, r);
    if alpha == 0.0 {
        return Ok(at(runs)?);
    }
    let mut h = inning as f64 * alpha.abs();
    if mode == TaylorMode::Clamped {
        h = h.clamp(0.0, 1.0);
    }
    let v = if alpha > 0.0 {
        if runs > 0 {
            (1.0 - h) * at(runs)? + h * at(runs - 1)?
        } else {
            (1.0 + h) * at(0)? - h * at(1)?
        }
    } else if runs < R_MAX {
        (1.0 - h) * at(runs)? + h * at(runs + 1)?
    } else if runs == R_MAX {
        (1.0 + h) * at(R_MAX)? - h * at(R_MAX - 1)?
    } else {
        // Beyond the cap f is flat, so shifting up changes nothing.
        at(runs)?
    };
    Ok(v)
}

/// One start's valuation with the inputs that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GwarGame {
    pub pitcher_id: String,
    pub game_id: String,
    pub year: i32,
    pub date: NaiveDate,
    pub park: String,
    pub is_home: bool,
    pub league: League,
    pub exit_kind: ExitKind,
    pub inning: u32,
    pub exit_outs: Option<u8>,
    pub exit_base_state: Option<BaseState>,
    pub runs_allowed: u32,
    pub alpha: f64,
    pub raw_gwar: f64,
    pub park_adjusted_gwar: f64,
}

fn bounded(p: f64) -> f64 {
    p.clamp(PROB_FLOOR, 1.0 - PROB_FLOOR)
}

pub fn gwar_game<F: WinProbability + ?Sized>(
    start: &StartLine,
    f: &F,
    g: &InningRunDist,
    parks: &ParkEffectSet,
    w_rep: ReplacementLevel,
    mode: TaylorMode,
) -> Result<GwarGame, GwarError> {
    let alpha = parks
        .get(&start.park)
        .ok_or_else(|| GwarError::UnknownPark { park: start.park.clone(), game_id: start.game_id.clone() })?;
    let ctx = FContext::of(start);
    let inning = start.inning;
    let q_raw = |r: u32| -> Result<f64, GwarError> { Ok(eval_f(f, &ctx, inning, r)?) };
    let q_adj = |r: u32| -> Result<f64, GwarError> {
        let v = park_adjusted_f(f, &ctx, inning, r, alpha, mode)?;
        Ok(if alpha == 0.0 { v } else { bounded(v) })
    };
    let (raw, adjusted) = match start.exit_kind {
        ExitKind::EndOfInning => (q_raw(start.runs_allowed)?, q_adj(start.runs_allowed)?),
        ExitKind::MidInning => {
            let (Some(state), Some(outs)) = (start.exit_base_state, start.exit_outs) else {
                return Err(GwarError::MissingExitState(start.game_id.clone()));
            };
            (
                convolve(g, state, outs, start.runs_allowed, q_raw)?,
                convolve(g, state, outs, start.runs_allowed, q_adj)?,
            )
        }
    };
    Ok(GwarGame {
        pitcher_id: start.pitcher_id.clone(),
        game_id: start.game_id.clone(),
        year: start.year,
        date: start.date,
        park: start.park.clone(),
        is_home: start.is_home,
        league: start.league,
        exit_kind: start.exit_kind,
        inning,
        exit_outs: start.exit_outs,
        exit_base_state: start.exit_base_state,
        runs_allowed: start.runs_allowed,
        alpha,
        raw_gwar: raw - w_rep.value(),
        park_adjusted_gwar: adjusted - w_rep.value(),
    })
}

/// A pitcher's season: the sum of the park-adjusted game values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GwarSeason {
    pub pitcher_id: String,
    pub year: i32,
    pub games: usize,
    pub gwar: f64,
    pub raw_gwar: f64,
    pub rescaled_gwar: Option<f64>,
}

/// Sums the games left to right in the order given.
pub fn gwar_season(games: &[GwarGame]) -> Result<GwarSeason, GwarError> {
    let first = games.first().ok_or(GwarError::NoStarts)?;
    if let Some(g) = games.iter().find(|g| g.pitcher_id != first.pitcher_id || g.year != first.year) {
        return Err(GwarError::MixedSeason(format!(
            "{} {} and {} {}",
            first.pitcher_id, first.year, g.pitcher_id, g.year
        )));
    }
    let mut gwar = 0.0;
    let mut raw = 0.0;
    for g in games {
        gwar += g.park_adjusted_gwar;
        raw += g.raw_gwar;
    }
    Ok(GwarSeason {
        pitcher_id: first.pitcher_id.clone(),
        year: first.year,
        games: games.len(),
        gwar,
        raw_gwar: raw,
        rescaled_gwar: None,
    })
}

/// Seasons for every (pitcher, year), games summed in (date, game id) order.
pub fn seasons_from_games(games: &[GwarGame]) -> Vec<GwarSeason> {
    let mut groups: BTreeMap<(&str, i32), Vec<&GwarGame>> = BTreeMap::new();
    for g in games {
        groups.entry((g.pitcher_id.as_str(), g.year)).or_default().push(g);
    }
    groups
        .into_values()
        .map(|mut v| {
            v.sort_by(|a, b| (a.date, &a.game_id).cmp(&(b.date, &b.game_id)));
            let owned: Vec<GwarGame> = v.into_iter().cloned().collect();
            gwar_season(&owned).expect("non-empty single-season group")
        })
        .collect()
}

/// Pitcher-season identity used to join against reference WAR.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SeasonKey {
    pub pitcher_id: String,
    pub year: i32,
}

/// Multiplies every value by `c = sum(reference) / sum(values)`, both sums
/// over the keys present in both maps. Returns `(c, rescaled)`.
pub fn rescale<K: Ord + Clone>(
    values: &BTreeMap<K, f64>,
    reference: &BTreeMap<K, f64>,
) -> Result<(f64, BTreeMap<K, f64>), GwarError> {
    let shared: Vec<&K> = values.keys().filter(|k| reference.contains_key(*k)).collect();
    if shared.is_empty() {
        return Err(GwarError::NoOverlap);
    }
    let total: f64 = shared.iter().map(|k| values[*k]).sum();
    let target: f64 = shared.iter().map(|k| reference[*k]).sum();
    if total == 0.0 {
        return Err(GwarError::ZeroTotal);
    }
    let c = target / total;
    if !(c > 0.0 && c.is_finite()) {
        return Err(GwarError::NonPositiveScale(c));
    }
    Ok((c, values.iter().map(|(k, v)| (k.clone(), v * c)).collect()))
}

/// Count of games at each runs-allowed value.
pub fn runs_histogram<'a>(runs: impl IntoIterator<Item = &'a u32>) -> BTreeMap<u32, i64> {
    let mut h = BTreeMap::new();
    for &r in runs {
        *h.entry(r).or_insert(0) += 1;
    }
    h
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Positive,
    Negative,
    Zero,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiffBin {
    pub runs: u32,
    pub a: i64,
    pub b: i64,
    pub diff: i64,
    pub sign: Sign,
}

/// Bin-by-bin `a - b` over every runs value from 0 to the largest seen.
pub fn compare_histograms(a: &BTreeMap<u32, i64>, b: &BTreeMap<u32, i64>) -> Vec<DiffBin> {
    let top = a.keys().chain(b.keys()).copied().max();
    let Some(top) = top else { return Vec::new() };
    (0..=top)
        .map(|runs| {
            let x = a.get(&runs).copied().unwrap_or(0);
            let y = b.get(&runs).copied().unwrap_or(0);
            let diff = x - y;
            let sign = match diff.cmp(&0) {
                std::cmp::Ordering::Greater => Sign::Positive,
                std::cmp::Ordering::Less => Sign::Negative,
                std::cmp::Ordering::Equal => Sign::Zero,
            };
            DiffBin { runs, a: x, b: y, diff, sign }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankRow<K> {
    pub rank: usize,
    pub key: K,
    pub gwar: f64,
    pub rescaled_gwar: f64,
    pub reference: Option<f64>,
    /// `rescaled_gwar - reference`.
    pub difference: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankReport<K> {
    pub scale: f64,
    pub ranking: Vec<RankRow<K>>,
    /// Largest positive differences first.
    pub undervalued: Vec<RankRow<K>>,
    /// Most negative differences first.
    pub overvalued: Vec<RankRow<K>>,
}

/// Ranks by GWAR (descending, ties by key) after rescaling to the reference,
/// and lists the `extremes` largest differences in each direction.
pub fn rank_and_report<K: Ord + Clone>(
    values: &BTreeMap<K, f64>,
    reference: &BTreeMap<K, f64>,
    extremes: usize,
) -> Result<RankReport<K>, GwarError> {
    let (scale, rescaled) = rescale(values, reference)?;
    let mut ranking: Vec<RankRow<K>> = values
        .iter()
        .map(|(k, &gwar)| {
            let r = reference.get(k).copied();
            let s = rescaled[k];
            RankRow { rank: 0, key: k.clone(), gwar, rescaled_gwar: s, reference: r, difference: r.map(|r| s - r) }
        })
        .collect();
    ranking.sort_by(|a, b| b.gwar.total_cmp(&a.gwar).then_with(|| a.key.cmp(&b.key)));
    for (i, row) in ranking.iter_mut().enumerate() {
        row.rank = i + 1;
    }
    let mut diffs: Vec<&RankRow<K>> = ranking.iter().filter(|r| r.difference.is_some()).collect();
    diffs.sort_by(|a, b| b.difference.unwrap().total_cmp(&a.difference.unwrap()).then_with(|| a.key.cmp(&b.key)));
    let undervalued = diffs.iter().take(extremes).map(|r| (*r).clone()).collect();
    diffs.sort_by(|a, b| a.difference.unwrap().total_cmp(&b.difference.unwrap()).then_with(|| a.key.cmp(&b.key)));
    let overvalued = diffs.iter().take(extremes).map(|r| (*r).clone()).collect();
    Ok(RankReport { scale, ranking, undervalued, overvalued })
}
