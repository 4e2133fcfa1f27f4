mod common;

use std::collections::BTreeMap;

use approx::assert_relative_eq;
use chrono::NaiveDate;
use proptest::prelude::*;

use gridwar::grid_f::{jensen_gap, interpolate_f, row_is_convex, FContext, GridError, WinProbability, R_MAX};
use gridwar::grid_g::{fit_g, G_BINS};
use gridwar::gwar::{
    compare_histograms, gwar_season, park_adjusted_f, rescale, runs_histogram, GwarGame, Sign, TaylorMode,
};
use gridwar::ingest::{ExitKind, PlateAppearance};
use gridwar::io::{csv_bytes, read_csv};
use gridwar::park::center;
use gridwar::types::{BaseState, League, YearWindow};

/// One row of win probabilities, shared by every inning and context.
#[derive(Debug)]
struct Row(Vec<f64>);

impl WinProbability for Row {
    fn win_prob(&self, _: &FContext, _: u32, runs: u32) -> Result<f64, GridError> {
        Ok(self.0[runs.min(R_MAX) as usize])
    }
}

const CTX: FContext = FContext { is_home: false, league: League::AL, year: common::SEASON };

/// Decreasing convex rows: the drops shrink from one run to the next.
fn convex_row() -> impl Strategy<Value = Row> {
    (0.5f64..0.95, prop::collection::vec(0.0f64..1.0, R_MAX as usize)).prop_map(|(top, mut drops)| {
        drops.sort_by(|a, b| b.total_cmp(a));
        let total: f64 = drops.iter().sum::<f64>().max(1e-9);
        let scale = 0.9 * top / total;
        let mut row = vec![top];
        for d in drops {
            let last = *row.last().unwrap();
            row.push(last - d * scale);
        }
        Row(row)
    })
}

fn decreasing_row() -> impl Strategy<Value = Row> {
    prop::collection::vec(0.0f64..1.0, R_MAX as usize + 1).prop_map(|mut v| {
        v.sort_by(|a, b| b.total_cmp(a));
        Row(v)
    })
}

fn game(pitcher: &str, day: u32, value: f64, runs: u32) -> GwarGame {
    GwarGame {
        pitcher_id: pitcher.into(),
        game_id: format!("G{day:03}"),
        year: common::SEASON,
        date: NaiveDate::from_ymd_opt(common::SEASON, 4, 1).unwrap() + chrono::Days::new(day as u64),
        park: "ANA01".into(),
        is_home: day.is_multiple_of(2),
        league: League::AL,
        exit_kind: ExitKind::EndOfInning,
        inning: 6,
        exit_outs: None,
        exit_base_state: None,
        runs_allowed: runs,
        alpha: 0.0,
        raw_gwar: value,
        park_adjusted_gwar: value,
    }
}

/// Half-innings as (base state code, outs recorded, runs) per plate appearance.
fn half_innings() -> impl Strategy<Value = Vec<Vec<(u8, u8, u32)>>> {
    let pa = (0u8..8, prop::bool::weighted(0.6), 0u32..3);
    let half = prop::collection::vec(pa, 3..12).prop_map(|v| {
        let mut outs = 0;
        let mut out = Vec::new();
        for (state, is_out, runs) in v {
            if outs == 3 {
                break;
            }
            let rec = u8::from(is_out);
            out.push((state, rec, runs));
            outs += rec;
        }
        // Close the inning.
        while outs < 3 {
            out.push((0, 1, 0));
            outs += 1;
        }
        out
    });
    prop::collection::vec(half, 1..20)
}

fn to_plate_appearances(halves: &[Vec<(u8, u8, u32)>]) -> Vec<PlateAppearance> {
    let mut pas = Vec::new();
    for (h, plays) in halves.iter().enumerate() {
        let mut outs = 0;
        for &(state, rec, runs) in plays {
            let code = BaseState::new(state & 1 != 0, state & 2 != 0, state & 4 != 0).code();
            pas.push(common::pa(&format!("G{h:03}"), 1 + (h % 8) as u32, &code, outs, runs, rec));
            outs += rec;
        }
    }
    pas
}

proptest! {
    #[test]
    fn base_state_codes_round_trip(first: bool, second: bool, third: bool) {
        let s = BaseState::new(first, second, third);
        prop_assert_eq!(BaseState::from_code(&s.code()).unwrap(), s);
        prop_assert_eq!(s.runners(), first as u32 + second as u32 + third as u32);
    }

    #[test]
    fn centered_values_have_zero_mean(mut v in prop::collection::vec(-5.0f64..5.0, 1..60)) {
        let before = v.clone();
        center(&mut v);
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        prop_assert!(mean.abs() < 1e-12);
        for w in 1..v.len() {
            prop_assert!(((v[w] - v[0]) - (before[w] - before[0])).abs() < 1e-12);
        }
    }

    #[test]
    fn rescale_matches_the_reference_total_and_keeps_order(
        values in prop::collection::vec(0.1f64..8.0, 2..40),
        factor in 0.2f64..3.0,
    ) {
        let v: BTreeMap<usize, f64> = values.iter().copied().enumerate().collect();
        let reference: BTreeMap<usize, f64> = v.iter().filter(|(k, _)| *k % 3 != 1).map(|(k, x)| (*k, x * factor + 0.01)).collect();
        let (c, out) = rescale(&v, &reference).unwrap();
        let shared: f64 = reference.keys().map(|k| out[k]).sum();
        assert_relative_eq!(shared, reference.values().sum::<f64>(), max_relative = 1e-12);
        prop_assert!(c > 0.0);
        for (a, b) in v.keys().zip(v.keys().skip(1)) {
            prop_assert_eq!(v[a] < v[b], out[a] < out[b]);
        }
    }

    #[test]
    fn histogram_difference_is_antisymmetric(
        a in prop::collection::vec(0u32..15, 0..40),
        b in prop::collection::vec(0u32..15, 0..40),
    ) {
        let (ha, hb) = (runs_histogram(&a), runs_histogram(&b));
        let ab = compare_histograms(&ha, &hb);
        let ba = compare_histograms(&hb, &ha);
        prop_assert_eq!(ab.len(), ba.len());
        for (x, y) in ab.iter().zip(&ba) {
            prop_assert_eq!(x.diff, -y.diff);
            prop_assert_eq!(x.sign == Sign::Zero, y.sign == Sign::Zero);
        }
        prop_assert_eq!(ab.iter().map(|d| d.a).sum::<i64>(), a.len() as i64);
        prop_assert_eq!(ab.iter().map(|d| d.diff).sum::<i64>(), a.len() as i64 - b.len() as i64);
    }

    #[test]
    fn season_is_the_sum_of_its_games(values in prop::collection::vec(-0.4f64..0.6, 1..35)) {
        let games: Vec<GwarGame> = values.iter().enumerate().map(|(d, v)| game("p", d as u32, *v, 2)).collect();
        let season = gwar_season(&games).unwrap();
        prop_assert_eq!(season.games, values.len());
        let mut expect = 0.0;
        for v in &values {
            expect += v;
        }
        prop_assert_eq!(season.gwar, expect);
        prop_assert_eq!(season.raw_gwar, expect);
    }

    #[test]
    fn zero_alpha_is_the_identity(row in decreasing_row(), inning in 1u32..10, runs in 0u32..14) {
        for mode in [TaylorMode::Clamped, TaylorMode::Literal] {
            let v = park_adjusted_f(&row, &CTX, inning, runs, 0.0, mode).unwrap();
            prop_assert_eq!(v.to_bits(), row.win_prob(&CTX, inning, runs).unwrap().to_bits());
        }
    }

    #[test]
    fn hitters_parks_never_lower_the_value(
        row in decreasing_row(), inning in 1u32..10, runs in 0u32..=R_MAX, alpha in 0.0f64..0.5,
    ) {
        // Within the clamp, a positive alpha interpolates toward fewer runs.
        let base = row.win_prob(&CTX, inning, runs).unwrap();
        let adj = park_adjusted_f(&row, &CTX, inning, runs, alpha, TaylorMode::Clamped).unwrap();
        prop_assert!(adj >= base - 1e-15);
        let neg = park_adjusted_f(&row, &CTX, inning, runs, -alpha, TaylorMode::Clamped).unwrap();
        if runs < R_MAX {
            prop_assert!(neg <= base + 1e-15);
        }
    }

    #[test]
    fn jensen_gap_is_nonnegative_on_convex_rows(
        row in convex_row(), runs in prop::collection::vec(0u32..14, 1..30),
    ) {
        prop_assert!(row_is_convex(&row, &CTX, 5).unwrap());
        let gap = jensen_gap(&row, &CTX, 5, &runs).unwrap();
        prop_assert!(gap >= 0.0, "gap {}", gap);
        // Against the direct definition.
        let mean_f = runs.iter().map(|&r| row.win_prob(&CTX, 5, r).unwrap()).sum::<f64>() / runs.len() as f64;
        let rbar = runs.iter().sum::<u32>() as f64 / runs.len() as f64;
        let direct = mean_f - interpolate_f(&row, &CTX, 5, rbar).unwrap();
        prop_assert!((gap - direct).abs() < 1e-12);
    }

    #[test]
    fn inning_run_rows_are_distributions(halves in half_innings()) {
        let pas = to_plate_appearances(&halves);
        let g = fit_g(&pas, YearWindow::single(common::SEASON), 0).unwrap();
        prop_assert_eq!(g.cells.iter().map(|c| c.count).sum::<u64>(), pas.len() as u64);
        let mut cells = 0;
        for code in 0..8u8 {
            let state = BaseState::new(code & 1 != 0, code & 2 != 0, code & 4 != 0);
            for outs in 0..3 {
                if let Ok(row) = g.row(state, outs) {
                    cells += 1;
                    prop_assert_eq!(row.len(), G_BINS);
                    prop_assert!(row.iter().all(|p| *p >= 0.0));
                    prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                }
            }
        }
        prop_assert!(cells > 0);
    }

    #[test]
    fn game_csv_round_trips(values in prop::collection::vec((-1.0f64..1.0, 0u32..20), 0..30)) {
        let games: Vec<GwarGame> = values.iter().enumerate().map(|(d, (v, r))| game("p", d as u32, *v, *r)).collect();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.csv");
        std::fs::write(&path, csv_bytes(&games).unwrap()).unwrap();
        let back: Vec<GwarGame> = read_csv(&path).unwrap();
        prop_assert_eq!(back, games);
    }
}
