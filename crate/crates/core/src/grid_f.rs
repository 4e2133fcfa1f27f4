//! The win-probability grid `f(I, R)`: probability that a team wins after its
//! starter allows `R` runs through `I` complete innings, context-neutralised
//! by home field, league and season fixed effects.
//!
//! The grid is a fixed-effects logistic regression. Inning levels 2..=9 and
//! run levels 1..=10 are indicator columns against the references inning 1
//! and zero runs; runs above 10 are pooled into the 10-run level.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::{ExitKind, StartLine};
use crate::linalg::{Cholesky, LinalgError, SparseDesign};
use crate::types::{League, YearWindow};

pub const R_MAX: u32 = 10;
pub const INNINGS: u32 = 9;
/// Logit-scale magnitude treated as a sign of (quasi-)separation.
pub const SEPARATION_LIMIT: f64 = 15.0;
pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 50;
pub const GRID_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error("non-identifiable: response takes fewer than two distinct values")]
    NonIdentifiable,
    #[error("no training rows in window {0}")]
    Empty(YearWindow),
    #[error("no training rows at {0}; every inning and season level needs data")]
    EmptyLevel(String),
    #[error("quasi-separation: coefficient {column} reached {value:.3} on the logit scale")]
    QuasiSeparation { column: String, value: f64 },
    #[error("logistic fit did not converge in {max_iter} iterations (log-likelihood trace: {trace:?})")]
    NoConvergence { max_iter: usize, trace: Vec<f64> },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("inning {0} outside 1..=9")]
    Inning(u32),
    #[error("season {year} outside the grid's training window {window}")]
    YearOutsideWindow { year: i32, window: YearWindow },
    #[error("jensen gap needs at least one run value")]
    EmptyRuns,
}

/// The context a start is evaluated in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FContext {
    pub is_home: bool,
    pub league: League,
    pub year: i32,
}

impl FContext {
    pub fn of(start: &StartLine) -> Self {
        FContext { is_home: start.is_home, league: start.league, year: start.year }
    }
}

/// Anything that can answer `f(I, R)` for a context.
pub trait WinProbability {
    fn win_prob(&self, ctx: &FContext, inning: u32, runs: u32) -> Result<f64, GridError>;
}

// ---------------------------------------------------------------------------
// Design

#[derive(Debug, Clone)]
pub struct FDesign {
    pub x: SparseDesign,
    pub response: Vec<f64>,
    pub window: YearWindow,
}

fn column_names(window: YearWindow) -> Vec<String> {
    let mut names = vec!["intercept".to_string()];
    names.extend((2..=INNINGS).map(|i| format!("inning_{i}")));
    names.extend((1..=R_MAX).map(|r| format!("runs_{r}")));
    names.push("home".into());
    names.push("league_NL".into());
    names.extend(window.years().skip(1).map(|y| format!("year_{y}")));
    names
}

const HOME_COL: u32 = 1 + (INNINGS - 1) + R_MAX;
const NL_COL: u32 = HOME_COL + 1;
const YEAR_COL0: u32 = NL_COL + 1;

fn row_entries(window: YearWindow, ctx: &FContext, inning: u32, runs: u32) -> Vec<(u32, f64)> {
    let mut row = vec![(0, 1.0)];
    if inning >= 2 {
        row.push((inning - 1, 1.0));
    }
    let r = runs.min(R_MAX);
    if r >= 1 {
        row.push((INNINGS - 1 + r, 1.0));
    }
    if ctx.is_home {
        row.push((HOME_COL, 1.0));
    }
    if ctx.league == League::NL {
        row.push((NL_COL, 1.0));
    }
    if ctx.year > window.first {
        row.push((YEAR_COL0 + (ctx.year - window.first - 1) as u32, 1.0));
    }
    row
}

/// One row per end-of-inning start inside `window`. Home starts through the
/// 9th are dropped: the bottom of the 9th is skipped when the home side leads.
pub fn build_f_design(starts: &[StartLine], window: YearWindow) -> Result<FDesign, FitError> {
    let mut x = SparseDesign::new(column_names(window));
    let mut response = Vec::new();
    for s in starts {
        if s.exit_kind != ExitKind::EndOfInning || !window.contains(s.year) {
            continue;
        }
        if s.inning == INNINGS && s.is_home {
            continue;
        }
        let inning = s.inning.clamp(1, INNINGS);
        x.push_row(row_entries(window, &FContext::of(s), inning, s.runs_allowed));
        response.push(if s.team_won { 1.0 } else { 0.0 });
    }
    if response.is_empty() {
        return Err(FitError::Empty(window));
    }
    let wins = response.iter().filter(|&&y| y == 1.0).count();
    if wins == 0 || wins == response.len() {
        return Err(FitError::NonIdentifiable);
    }
    Ok(FDesign { x, response, window })
}

// ---------------------------------------------------------------------------
// Logistic regression by iteratively reweighted least squares

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LogisticFit {
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub trace: Vec<f64>,
}

fn sigmoid(eta: f64) -> f64 {
    if eta >= 0.0 {
        1.0 / (1.0 + (-eta).exp())
    } else {
        let e = eta.exp();
        e / (1.0 + e)
    }
}

/// log(1 + exp(x)) without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

pub fn log_likelihood(x: &SparseDesign, y: &[f64], beta: &nalgebra::DVector<f64>) -> f64 {
    x.mul(beta).iter().zip(y).map(|(&eta, &yi)| yi * eta - softplus(eta)).sum()
}

fn check_separation(names: &[String], beta: &nalgebra::DVector<f64>) -> Result<(), FitError> {
    match beta.iter().enumerate().find(|(_, b)| b.abs() > SEPARATION_LIMIT) {
        Some((j, &b)) => Err(FitError::QuasiSeparation { column: names[j].clone(), value: b }),
        None => Ok(()),
    }
}

/// Maximises the Bernoulli log-likelihood under the logit link by Newton /
/// IRLS steps with step halving. Stops when the log-likelihood moves less
/// than `tol`.
pub fn fit_logistic(x: &SparseDesign, y: &[f64], tol: f64, max_iter: usize) -> Result<LogisticFit, FitError> {
    assert!(tol > 0.0, "tolerance must be positive");
    if y.len() != x.nrows() {
        return Err(LinalgError::Dimension(format!("{} rows, {} responses", x.nrows(), y.len())).into());
    }
    let names = x.names().to_vec();
    let mut beta = nalgebra::DVector::zeros(x.ncols());
    let mut ll = log_likelihood(x, y, &beta);
    let mut trace = vec![ll];

    for iter in 1..=max_iter {
        let eta = x.mul(&beta);
        let p: Vec<f64> = eta.iter().map(|&e| sigmoid(e)).collect();
        let w: Vec<f64> = p.iter().map(|&pi| pi * (1.0 - pi)).collect();
        let resid: Vec<f64> = y.iter().zip(&p).map(|(yi, pi)| yi - pi).collect();
        let hessian = x.gram(Some(&w));
        let step = match Cholesky::factor(&hessian, &names) {
            Ok(c) => c.solve(&x.transpose_mul(&resid)),
            Err(e) => {
                check_separation(&names, &beta)?;
                return Err(e.into());
            }
        };

        let mut scale = 1.0;
        let mut candidate = &beta + &step;
        let mut next_ll = log_likelihood(x, y, &candidate);
        while next_ll < ll && scale > 1e-6 {
            scale *= 0.5;
            candidate = &beta + &step * scale;
            next_ll = log_likelihood(x, y, &candidate);
        }
        let change = (next_ll - ll).abs();
        beta = candidate;
        ll = next_ll;
        trace.push(ll);
        if change < tol {
            check_separation(&names, &beta)?;
            return Ok(LogisticFit {
                names,
                coefficients: beta.iter().copied().collect(),
                log_likelihood: ll,
                iterations: iter,
                trace,
            });
        }
    }
    check_separation(&names, &beta)?;
    Err(FitError::NoConvergence { max_iter, trace })
}

// ---------------------------------------------------------------------------
// The fitted grid

/// Fixed-effect coefficients on the logit scale. Reference levels carry 0:
/// inning 1, zero runs, away, AL, the window's first season.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FCoefficients {
    pub intercept: f64,
    /// Index 0 is inning 1.
    pub inning: Vec<f64>,
    /// Index 0 is zero runs; length `R_MAX + 1`.
    pub runs: Vec<f64>,
    pub home: f64,
    pub league_nl: f64,
    pub year: BTreeMap<i32, f64>,
}

impl FCoefficients {
    pub fn zeros(window: YearWindow) -> Self {
        FCoefficients {
            intercept: 0.0,
            inning: vec![0.0; INNINGS as usize],
            runs: vec![0.0; R_MAX as usize + 1],
            home: 0.0,
            league_nl: 0.0,
            year: window.years().map(|y| (y, 0.0)).collect(),
        }
    }

    fn from_fit(fit: &LogisticFit, window: YearWindow) -> Self {
        let c = &fit.coefficients;
        let mut out = FCoefficients::zeros(window);
        out.intercept = c[0];
        for i in 2..=INNINGS {
            out.inning[i as usize - 1] = c[(i - 1) as usize];
        }
        for r in 1..=R_MAX {
            out.runs[r as usize] = c[(INNINGS - 1 + r) as usize];
        }
        out.home = c[HOME_COL as usize];
        out.league_nl = c[NL_COL as usize];
        for (k, y) in window.years().skip(1).enumerate() {
            out.year.insert(y, c[YEAR_COL0 as usize + k]);
        }
        out
    }

    pub fn named(&self) -> BTreeMap<String, f64> {
        let mut m = BTreeMap::new();
        m.insert("intercept".to_string(), self.intercept);
        for (i, v) in self.inning.iter().enumerate().skip(1) {
            m.insert(format!("inning_{}", i + 1), *v);
        }
        for (r, v) in self.runs.iter().enumerate().skip(1) {
            m.insert(format!("runs_{r}"), *v);
        }
        m.insert("home".into(), self.home);
        m.insert("league_NL".into(), self.league_nl);
        for (y, v) in self.year.iter().skip(1) {
            m.insert(format!("year_{y}"), *v);
        }
        m
    }
}

/// One context's materialised `f` table, rows = innings 1..=9, columns = runs 0..=10.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextTable {
    pub context: FContext,
    pub values: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WinProbGrid {
    pub schema_version: u32,
    pub r_max: u32,
    pub window: YearWindow,
    pub coefficients: FCoefficients,
    /// Audit copy of the coefficients by column name.
    pub named_coefficients: BTreeMap<String, f64>,
    pub n_rows: usize,
    pub log_likelihood: Option<f64>,
    /// Audit table over every context in the window. Evaluation reads the coefficients.
    pub values: Vec<ContextTable>,
}

impl WinProbGrid {
    pub fn from_coefficients(coefficients: FCoefficients, window: YearWindow) -> Self {
        let mut grid = WinProbGrid {
            schema_version: GRID_SCHEMA_VERSION,
            r_max: R_MAX,
            window,
            named_coefficients: coefficients.named(),
            coefficients,
            n_rows: 0,
            log_likelihood: None,
            values: Vec::new(),
        };
        grid.values = grid.materialize();
        grid
    }

    fn materialize(&self) -> Vec<ContextTable> {
        let mut out = Vec::new();
        for year in self.window.years() {
            for league in [League::AL, League::NL] {
                for is_home in [false, true] {
                    let context = FContext { is_home, league, year };
                    let values = (1..=INNINGS)
                        .map(|i| (0..=R_MAX).map(|r| self.linear_prob(&context, i, r)).collect())
                        .collect();
                    out.push(ContextTable { context, values });
                }
            }
        }
        out
    }

    fn linear_prob(&self, ctx: &FContext, inning: u32, runs: u32) -> f64 {
        let c = &self.coefficients;
        let mut eta = c.intercept + c.inning[inning as usize - 1] + c.runs[runs.min(R_MAX) as usize];
        if ctx.is_home {
            eta += c.home;
        }
        if ctx.league == League::NL {
            eta += c.league_nl;
        }
        eta += c.year.get(&ctx.year).copied().unwrap_or(0.0);
        sigmoid(eta)
    }
}

impl WinProbability for WinProbGrid {
    fn win_prob(&self, ctx: &FContext, inning: u32, runs: u32) -> Result<f64, GridError> {
        if !(1..=INNINGS).contains(&inning) {
            return Err(GridError::Inning(inning));
        }
        if !self.window.contains(ctx.year) {
            return Err(GridError::YearOutsideWindow { year: ctx.year, window: self.window });
        }
        Ok(self.linear_prob(ctx, inning, runs))
    }
}

/// `f(I, R)` for a context; runs above 10 read the 10-run value.
pub fn eval_f<F: WinProbability + ?Sized>(f: &F, ctx: &FContext, inning: u32, runs: u32) -> Result<f64, GridError> {
    f.win_prob(ctx, inning, runs)
}

/// Fits the grid on the end-of-inning starts inside `window`.
/// The first inning or season level with no rows, if any. Such a level
/// makes the design rank-deficient.
fn empty_level(d: &FDesign) -> Option<String> {
    let names = d.x.names();
    let mut seen = vec![false; names.len()];
    let (mut ref_inning, mut ref_year) = (false, false);
    for row in d.x.rows() {
        ref_inning |= !row.iter().any(|&(c, _)| (1..INNINGS).contains(&c));
        ref_year |= !row.iter().any(|&(c, _)| c >= YEAR_COL0);
        for &(c, _) in row {
            seen[c as usize] = true;
        }
    }
    if !ref_inning {
        return Some("inning_1".into());
    }
    if !ref_year {
        return Some(format!("year_{}", d.window.first));
    }
    let inning_and_year = (1..INNINGS).chain(YEAR_COL0..names.len() as u32);
    if let Some(c) = inning_and_year.into_iter().find(|&c| !seen[c as usize]) {
        return Some(names[c as usize].clone());
    }
    None
}

pub fn fit_f(starts: &[StartLine], window: YearWindow, tol: f64, max_iter: usize) -> Result<WinProbGrid, FitError> {
    let design = build_f_design(starts, window)?;
    if let Some(level) = empty_level(&design) {
        return Err(FitError::EmptyLevel(level));
    }
    let fit = fit_logistic(&design.x, &design.response, tol, max_iter)?;
    let mut grid = WinProbGrid::from_coefficients(FCoefficients::from_fit(&fit, window), window);
    grid.n_rows = design.response.len();
    grid.log_likelihood = Some(fit.log_likelihood);
    Ok(grid)
}

// ---------------------------------------------------------------------------
// Convexity diagnostics

/// `f(I, x)` at fractional `x` by linear interpolation between integer run
/// levels, flat beyond `R_MAX`.
pub fn interpolate_f<F: WinProbability + ?Sized>(f: &F, ctx: &FContext, inning: u32, x: f64) -> Result<f64, GridError> {
    if x >= R_MAX as f64 {
        return f.win_prob(ctx, inning, R_MAX);
    }
    let x = x.max(0.0);
    let lo = x.floor() as u32;
    let t = x - lo as f64;
    let a = f.win_prob(ctx, inning, lo)?;
    if t == 0.0 {
        return Ok(a);
    }
    let b = f.win_prob(ctx, inning, lo + 1)?;
    Ok(a + t * (b - a))
}

/// Mean of `f(I, R_j)` minus `f` at the mean run count. Non-negative when the
/// row is convex, which is the Jensen argument for valuing games one at a time.
///
/// Evaluated through the hinge form of the piecewise-linear row,
/// `f(x) = f(0) + s x + sum_k d_k (x - k)+` with `d_k` the second difference
/// at `k`: the gap is `sum_k d_k [mean (R_j - k)+ - (mean R - k)+]`. The
/// brackets are exact integer ratios and never negative, so a convex row
/// never yields a negative gap through rounding.
pub fn jensen_gap<F: WinProbability + ?Sized>(f: &F, ctx: &FContext, inning: u32, runs: &[u32]) -> Result<f64, GridError> {
    if runs.is_empty() {
        return Err(GridError::EmptyRuns);
    }
    let row: Vec<f64> = (0..=R_MAX + 1).map(|r| f.win_prob(ctx, inning, r)).collect::<Result<_, _>>()?;
    let n = runs.len() as u64;
    let total: u64 = runs.iter().map(|&r| r as u64).sum();
    let mut gap = 0.0;
    for k in 1..=R_MAX as u64 {
        let d = row[k as usize - 1] - 2.0 * row[k as usize] + row[k as usize + 1];
        let above: u64 = runs.iter().map(|&r| (r as u64).saturating_sub(k)).sum();
        let bracket = above - total.saturating_sub(n * k);
        if bracket != 0 {
            gap += d * (bracket as f64 / n as f64);
        }
    }
    Ok(gap)
}

/// Whether the row `R -> f(I, R)` has non-negative second differences,
/// including the join onto the flat region past `R_MAX`.
pub fn row_is_convex<F: WinProbability + ?Sized>(f: &F, ctx: &FContext, inning: u32) -> Result<bool, GridError> {
    let row: Vec<f64> =
        (0..=R_MAX + 1).map(|r| f.win_prob(ctx, inning, r)).collect::<Result<_, _>>()?;
    Ok(row.windows(3).all(|w| w[0] - 2.0 * w[1] + w[2] >= 0.0))
}
