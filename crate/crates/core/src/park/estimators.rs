use std::collections::BTreeMap;

use nalgebra::DVector;

use crate::linalg::{penalized_least_squares, Cholesky, SparseDesign};

use super::{center, Estimator, ParkDesign, ParkEffectSet, ParkError};

/// Centered per-park effects from a coefficient vector whose park block
/// starts at column 1.
fn park_block(n_parks: usize, coefs: &DVector<f64>) -> Vec<f64> {
    let mut alpha = Vec::with_capacity(n_parks);
    alpha.push(0.0);
    alpha.extend((1..n_parks).map(|j| coefs[j]));
    center(&mut alpha);
    alpha
}

fn effect_set(design: &ParkDesign, estimator: Estimator, alpha: Vec<f64>, lambda: Option<f64>) -> ParkEffectSet {
    let map: BTreeMap<String, f64> = design.parks.iter().cloned().zip(alpha).collect();
    let mut set = ParkEffectSet::new(estimator, map, true);
    set.lambda = lambda;
    set.window = Some(design.window);
    set
}

fn check_lambda(lambda: f64) -> Result<(), ParkError> {
    if lambda.is_finite() && lambda >= 0.0 {
        Ok(())
    } else {
        Err(ParkError::Lambda(lambda))
    }
}

/// Least squares on the full design.
pub fn ols_coefficients(design: &ParkDesign, y: &[f64]) -> Result<DVector<f64>, ParkError> {
    Ok(penalized_least_squares(&design.full_design(), y, 0.0, &[0])?)
}

/// Minimiser of `|y - X b|^2 + lambda |b_-0|^2`, the intercept unpenalised.
pub fn ridge_coefficients(design: &ParkDesign, y: &[f64], lambda: f64) -> Result<DVector<f64>, ParkError> {
    check_lambda(lambda)?;
    Ok(penalized_least_squares(&design.full_design(), y, lambda, &[0])?)
}

pub fn fit_park_naive_ols(design: &ParkDesign) -> Result<ParkEffectSet, ParkError> {
    let b = penalized_least_squares(&design.park_only_design(), &design.y, 0.0, &[0])?;
    Ok(effect_set(design, Estimator::NaiveOls, park_block(design.n_parks(), &b), None))
}

pub fn fit_park_ols(design: &ParkDesign) -> Result<ParkEffectSet, ParkError> {
    let b = ols_coefficients(design, &design.y)?;
    Ok(effect_set(design, Estimator::Ols, park_block(design.n_parks(), &b), None))
}

pub fn fit_park_ridge(design: &ParkDesign, lambda: f64) -> Result<ParkEffectSet, ParkError> {
    let b = ridge_coefficients(design, &design.y, lambda)?;
    Ok(effect_set(design, Estimator::Ridge, park_block(design.n_parks(), &b), Some(lambda)))
}

pub fn fit_park_three_part_ols(design: &ParkDesign) -> Result<ParkEffectSet, ParkError> {
    let fit = three_part_coefficients(design, &design.y)?;
    Ok(effect_set(design, Estimator::ThreePartOls, fit.alpha, None))
}

/// Dispatches the model-based estimators. Ridge uses `lambda`.
pub fn fit_park(design: &ParkDesign, estimator: Estimator, lambda: f64) -> Result<ParkEffectSet, ParkError> {
    match estimator {
        Estimator::NaiveOls => fit_park_naive_ols(design),
        Estimator::Ols => fit_park_ols(design),
        Estimator::ThreePartOls => fit_park_three_part_ols(design),
        Estimator::Ridge => fit_park_ridge(design, lambda),
        Estimator::EspnAdditive | Estimator::FangraphsAdditive => Err(ParkError::Baseline(format!(
            "{estimator} is built from team aggregates, not the indicator design"
        ))),
    }
}

/// Intermediate results of the three-step estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct ThreePartFit {
    /// Offense quality per team-season (reference = 0), from road-batting rows.
    pub offense: Vec<f64>,
    /// Defense quality per team-season, from home-batting rows.
    pub defense: Vec<f64>,
    /// Weights on the plugged-in offense and defense scores (0 when a score is identically 0).
    pub weights: (f64, f64),
    /// Centered park effects.
    pub alpha: Vec<f64>,
}

fn team_block(design: &ParkDesign, coefs: &DVector<f64>) -> Vec<f64> {
    let np = design.n_parks();
    let mut out = vec![0.0];
    out.extend((1..design.n_team_seasons()).map(|k| coefs[np - 1 + k]));
    out
}

fn subset_y(y: &[f64], idx: &[usize]) -> Vec<f64> {
    idx.iter().map(|&i| y[i]).collect()
}

pub fn three_part_coefficients(design: &ParkDesign, y: &[f64]) -> Result<ThreePartFit, ParkError> {
    let (road, road_idx) = design.subset_design(false);
    let (home, home_idx) = design.subset_design(true);
    if road_idx.is_empty() {
        return Err(ParkError::EmptySubset("road-batting"));
    }
    if home_idx.is_empty() {
        return Err(ParkError::EmptySubset("home-batting"));
    }
    let off = penalized_least_squares(&road, &subset_y(y, &road_idx), 0.0, &[0])?;
    let def = penalized_least_squares(&home, &subset_y(y, &home_idx), 0.0, &[0])?;
    three_part_final(design, y, team_block(design, &off), team_block(design, &def))
}

/// Step three: parks plus weighted offense and defense scores, on every row.
fn three_part_final(
    design: &ParkDesign,
    y: &[f64],
    offense: Vec<f64>,
    defense: Vec<f64>,
) -> Result<ThreePartFit, ParkError> {
    // A score that is zero everywhere carries no information; leave it out.
    let live = |v: &[f64]| v.iter().any(|x| x.abs() > 1e-12);
    let use_off = live(&offense);
    let use_def = live(&defense);
    let mut names = vec!["intercept".to_string()];
    if use_off {
        names.push("offense_score".into());
    }
    if use_def {
        names.push("defense_score".into());
    }
    let park0 = names.len() as u32;
    names.extend(design.parks[1..].iter().map(|p| format!("park_{p}")));
    let mut x = SparseDesign::new(names);
    for r in &design.rows {
        let mut e = vec![(0u32, 1.0)];
        let mut c = 1;
        if use_off {
            e.push((c, offense[r.offense as usize]));
            c += 1;
        }
        if use_def {
            e.push((c, defense[r.defense as usize]));
        }
        if r.park > 0 {
            e.push((park0 + r.park - 1, 1.0));
        }
        x.push_row(e);
    }
    let b = penalized_least_squares(&x, y, 0.0, &[0])?;
    let mut alpha = vec![0.0];
    alpha.extend((1..design.n_parks()).map(|j| b[park0 as usize + j - 1]));
    center(&mut alpha);
    let w_off = if use_off { b[1] } else { 0.0 };
    let w_def = if use_def { b[if use_off { 2 } else { 1 }] } else { 0.0 };
    Ok(ThreePartFit { offense, defense, weights: (w_off, w_def), alpha })
}

struct Factored {
    x: SparseDesign,
    chol: Cholesky,
    rows: Option<Vec<usize>>,
}

impl Factored {
    fn new(x: SparseDesign, lambda: f64, rows: Option<Vec<usize>>) -> Result<Self, ParkError> {
        let mut g = x.gram(None);
        if lambda > 0.0 {
            for j in 1..x.ncols() {
                g[(j, j)] += lambda;
            }
        }
        let chol = Cholesky::factor(&g, x.names())?;
        Ok(Factored { x, chol, rows })
    }

    fn solve(&self, y: &[f64]) -> DVector<f64> {
        match &self.rows {
            Some(idx) => self.chol.solve(&self.x.transpose_mul(&subset_y(y, idx))),
            None => self.chol.solve(&self.x.transpose_mul(y)),
        }
    }
}

/// The four model-based estimators with their normal matrices factored once,
/// for refitting many responses on the same design.
pub struct PreparedFits<'a> {
    design: &'a ParkDesign,
    naive: Factored,
    ols: Factored,
    ridge: Factored,
    road: Factored,
    home: Factored,
}

impl<'a> PreparedFits<'a> {
    pub fn new(design: &'a ParkDesign, lambda: f64) -> Result<Self, ParkError> {
        check_lambda(lambda)?;
        let (road, road_idx) = design.subset_design(false);
        let (home, home_idx) = design.subset_design(true);
        if road_idx.is_empty() {
            return Err(ParkError::EmptySubset("road-batting"));
        }
        if home_idx.is_empty() {
            return Err(ParkError::EmptySubset("home-batting"));
        }
        let full = design.full_design();
        Ok(PreparedFits {
            design,
            naive: Factored::new(design.park_only_design(), 0.0, None)?,
            ols: Factored::new(full.clone(), 0.0, None)?,
            ridge: Factored::new(full, lambda, None)?,
            road: Factored::new(road, 0.0, Some(road_idx))?,
            home: Factored::new(home, 0.0, Some(home_idx))?,
        })
    }

    /// Centered effects over the design's park catalog.
    pub fn fit(&self, estimator: Estimator, y: &[f64]) -> Result<Vec<f64>, ParkError> {
        let np = self.design.n_parks();
        match estimator {
            Estimator::NaiveOls => Ok(park_block(np, &self.naive.solve(y))),
            Estimator::Ols => Ok(park_block(np, &self.ols.solve(y))),
            Estimator::Ridge => Ok(park_block(np, &self.ridge.solve(y))),
            Estimator::ThreePartOls => {
                let off = team_block(self.design, &self.road.solve(y));
                let def = team_block(self.design, &self.home.solve(y));
                Ok(three_part_final(self.design, y, off, def)?.alpha)
            }
            other => Err(ParkError::Baseline(format!("{other} is not a fixed-effects estimator"))),
        }
    }
}
