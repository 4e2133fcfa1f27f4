use std::collections::{BTreeMap, BTreeSet};

use crate::ingest::HalfInningRecord;
use crate::linalg::SparseDesign;
use crate::types::{split_team_season, YearWindow};

use super::ParkError;

/// One half-inning as catalog indices. Index 0 of each catalog is the
/// reference level and has no column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParkRow {
    pub park: u32,
    pub offense: u32,
    pub defense: u32,
    pub home_bats: bool,
}

/// Reference levels. `None` picks the lexicographically first code.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct References {
    pub park: Option<String>,
    pub team_season: Option<String>,
}

/// The indicator design `[1 | P | O | D]` over half-innings.
///
/// Columns: intercept, then parks `1..P`, offense team-seasons `1..T`,
/// defense team-seasons `1..T`, all in catalog order.
///
/// Each half-inning pairs an offense and a defense from the same season, so
/// per season the offense block minus the defense block sums to zero. One
/// defense column per season besides the reference's is dropped as well
/// (`season_refs`, the first team-season of that season in catalog order).
#[derive(Debug, Clone, PartialEq)]
pub struct ParkDesign {
    pub parks: Vec<String>,
    pub team_seasons: Vec<String>,
    /// Catalog indices of the extra defense references, ascending.
    pub season_refs: Vec<u32>,
    pub rows: Vec<ParkRow>,
    pub y: Vec<f64>,
    pub window: YearWindow,
}

fn catalog<'a>(codes: impl Iterator<Item = &'a str>, reference: Option<&str>) -> Result<Vec<String>, ParkError> {
    let set: BTreeSet<&str> = codes.collect();
    let mut out: Vec<String> = set.iter().map(|s| s.to_string()).collect();
    if let Some(r) = reference {
        let pos = out.iter().position(|c| c == r).ok_or_else(|| ParkError::UnknownReference(r.to_string()))?;
        let code = out.remove(pos);
        out.insert(0, code);
    }
    Ok(out)
}

pub fn build_park_design(
    half_innings: &[HalfInningRecord],
    window: YearWindow,
    refs: &References,
) -> Result<ParkDesign, ParkError> {
    let kept: Vec<&HalfInningRecord> = half_innings.iter().filter(|h| window.contains(h.year)).collect();
    if kept.is_empty() {
        return Err(ParkError::Empty(window));
    }
    let parks = catalog(kept.iter().map(|h| h.park.as_str()), refs.park.as_deref())?;
    let team_seasons = catalog(
        kept.iter().flat_map(|h| [h.offense_team_season.as_str(), h.defense_team_season.as_str()]),
        refs.team_season.as_deref(),
    )?;
    let park_idx: BTreeMap<&str, u32> = parks.iter().enumerate().map(|(i, p)| (p.as_str(), i as u32)).collect();
    let ts_idx: BTreeMap<&str, u32> =
        team_seasons.iter().enumerate().map(|(i, p)| (p.as_str(), i as u32)).collect();
    let rows = kept
        .iter()
        .map(|h| ParkRow {
            park: park_idx[h.park.as_str()],
            offense: ts_idx[h.offense_team_season.as_str()],
            defense: ts_idx[h.defense_team_season.as_str()],
            home_bats: h.half.home_bats(),
        })
        .collect();
    let y = kept.iter().map(|h| h.runs as f64).collect();
    let season_refs = season_references(&team_seasons);
    Ok(ParkDesign { parks, team_seasons, season_refs, rows, y, window })
}

fn season_references(team_seasons: &[String]) -> Vec<u32> {
    let season = |c: &str| split_team_season(c).map(|(_, y)| y);
    let mut seen: BTreeSet<Option<i32>> = team_seasons.first().map(|c| season(c)).into_iter().collect();
    let mut out = Vec::new();
    for (k, c) in team_seasons.iter().enumerate().skip(1) {
        if let Some(y) = season(c) {
            if seen.insert(Some(y)) {
                out.push(k as u32);
            }
        }
    }
    out
}

impl ParkDesign {
    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_parks(&self) -> usize {
        self.parks.len()
    }

    pub fn n_team_seasons(&self) -> usize {
        self.team_seasons.len()
    }

    pub fn ncols(&self) -> usize {
        1 + (self.n_parks() - 1) + 2 * (self.n_team_seasons() - 1) - self.season_refs.len()
    }

    /// Column of park `j`, if it is not the reference.
    pub fn park_col(&self, j: u32) -> Option<u32> {
        (j > 0).then_some(j)
    }

    pub fn offense_col(&self, k: u32) -> Option<u32> {
        (k > 0).then(|| self.n_parks() as u32 - 1 + k)
    }

    pub fn defense_col(&self, k: u32) -> Option<u32> {
        if k == 0 {
            return None;
        }
        let skipped = match self.season_refs.binary_search(&k) {
            Ok(_) => return None,
            Err(pos) => pos as u32,
        };
        Some(self.n_parks() as u32 - 1 + self.n_team_seasons() as u32 - 1 + k - skipped)
    }

    pub fn column_names(&self) -> Vec<String> {
        let mut names = vec!["intercept".to_string()];
        names.extend(self.parks[1..].iter().map(|p| format!("park_{p}")));
        names.extend(self.team_seasons[1..].iter().map(|t| format!("off_{t}")));
        names.extend(
            self.team_seasons
                .iter()
                .enumerate()
                .skip(1)
                .filter(|(k, _)| self.season_refs.binary_search(&(*k as u32)).is_err())
                .map(|(_, t)| format!("def_{t}")),
        );
        names
    }

    /// The full indicator matrix.
    pub fn full_design(&self) -> SparseDesign {
        let mut x = SparseDesign::new(self.column_names());
        for r in &self.rows {
            let mut e = vec![(0, 1.0)];
            e.extend(self.park_col(r.park).map(|c| (c, 1.0)));
            e.extend(self.offense_col(r.offense).map(|c| (c, 1.0)));
            e.extend(self.defense_col(r.defense).map(|c| (c, 1.0)));
            x.push_row(e);
        }
        x
    }

    /// Intercept plus the park block.
    pub fn park_only_design(&self) -> SparseDesign {
        let mut names = vec!["intercept".to_string()];
        names.extend(self.parks[1..].iter().map(|p| format!("park_{p}")));
        let mut x = SparseDesign::new(names);
        for r in &self.rows {
            let mut e = vec![(0, 1.0)];
            e.extend(self.park_col(r.park).map(|c| (c, 1.0)));
            x.push_row(e);
        }
        x
    }

    /// Intercept, parks and one team block, over the rows where the home
    /// team bats (`home_bats`) or fields. The team block is defense when
    /// the home team bats and offense otherwise.
    pub fn subset_design(&self, home_bats: bool) -> (SparseDesign, Vec<usize>) {
        let np = self.n_parks() as u32;
        let mut names = vec!["intercept".to_string()];
        names.extend(self.parks[1..].iter().map(|p| format!("park_{p}")));
        let prefix = if home_bats { "def" } else { "off" };
        names.extend(self.team_seasons[1..].iter().map(|t| format!("{prefix}_{t}")));
        let mut x = SparseDesign::new(names);
        let mut idx = Vec::new();
        for (i, r) in self.rows.iter().enumerate().filter(|(_, r)| r.home_bats == home_bats) {
            let team = if home_bats { r.defense } else { r.offense };
            let mut e = vec![(0, 1.0)];
            e.extend(self.park_col(r.park).map(|c| (c, 1.0)));
            if team > 0 {
                e.push((np - 1 + team, 1.0));
            }
            x.push_row(e);
            idx.push(i);
        }
        (x, idx)
    }

    /// Park codes of every row, as catalog indices.
    pub fn park_index(&self) -> Vec<u32> {
        self.rows.iter().map(|r| r.park).collect()
    }

    /// A copy with a different response.
    pub fn with_response(&self, y: Vec<f64>) -> ParkDesign {
        ParkDesign { y, ..self.clone() }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Half;

    fn hi(park: &str, off: &str, def: &str, half: Half, runs: u32) -> HalfInningRecord {
        HalfInningRecord {
            game_id: "G".into(),
            year: 2017,
            park: park.into(),
            inning: 1,
            half,
            offense_team_season: off.into(),
            defense_team_season: def.into(),
            runs,
        }
    }

    #[test]
    fn all_reference_row_is_intercept_only() {
        let d = build_park_design(
            &[hi("ANA01", "ANA2017", "ANA2017", Half::Top, 1)],
            YearWindow::single(2017),
            &References::default(),
        )
        .unwrap();
        assert_eq!(d.ncols(), 1);
        assert_eq!(d.full_design().to_dense().as_slice(), &[1.0]);
    }

    #[test]
    fn two_park_two_team_league_by_hand() {
        // ANA hosts SEA, then SEA hosts ANA.
        let rows = vec![
            hi("ANA01", "SEA2017", "ANA2017", Half::Top, 0),
            hi("ANA01", "ANA2017", "SEA2017", Half::Bottom, 2),
            hi("SEA03", "ANA2017", "SEA2017", Half::Top, 1),
            hi("SEA03", "SEA2017", "ANA2017", Half::Bottom, 0),
        ];
        let d = build_park_design(&rows, YearWindow::single(2017), &References::default()).unwrap();
        assert_eq!(d.column_names(), vec!["intercept", "park_SEA03", "off_SEA2017", "def_SEA2017"]);
        let x = d.full_design().to_dense();
        let expect = [
            [1.0, 0.0, 1.0, 0.0],
            [1.0, 0.0, 0.0, 1.0],
            [1.0, 1.0, 0.0, 1.0],
            [1.0, 1.0, 1.0, 0.0],
        ];
        for (i, row) in expect.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                assert_eq!(x[(i, j)], *v, "({i},{j})");
            }
        }
        assert_eq!(d.y, vec![0.0, 2.0, 1.0, 0.0]);
    }

    #[test]
    fn explicit_reference_moves_to_front() {
        let rows = vec![hi("ANA01", "SEA2017", "ANA2017", Half::Top, 0), hi("SEA03", "ANA2017", "SEA2017", Half::Top, 0)];
        let refs = References { park: Some("SEA03".into()), team_season: None };
        let d = build_park_design(&rows, YearWindow::single(2017), &refs).unwrap();
        assert_eq!(d.parks, vec!["SEA03", "ANA01"]);
        let bad = References { park: Some("XXX01".into()), team_season: None };
        assert!(matches!(
            build_park_design(&rows, YearWindow::single(2017), &bad),
            Err(ParkError::UnknownReference(_))
        ));
        assert!(matches!(
            build_park_design(&rows, YearWindow::single(2018), &References::default()),
            Err(ParkError::Empty(_))
        ));
    }
}
