use serde::{Deserialize, Serialize};

use crate::linalg::{penalized_least_squares, SparseDesign};

use super::{fit_park_ridge, ParkDesign, ParkEffectSet, ParkError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OutOfSample {
    pub rmse: f64,
    pub ecological_rmse: f64,
    /// Fitted weight on the frozen park score; `None` when the score was constant.
    pub park_weight: Option<f64>,
    pub n_rows: usize,
    pub n_parks: usize,
}

pub fn rmse(y: &[f64], yhat: &[f64]) -> f64 {
    let n = y.len().max(1) as f64;
    (y.iter().zip(yhat).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / n).sqrt()
}

/// RMS over parks of (mean predicted - mean observed) per half-inning.
/// `park[i]` indexes the park of row `i`; parks without rows are skipped.
pub fn ecological_rmse(park: &[u32], y: &[f64], yhat: &[f64]) -> f64 {
    let n_parks = park.iter().map(|&p| p as usize + 1).max().unwrap_or(0);
    let mut acc = vec![(0usize, 0.0f64, 0.0f64); n_parks];
    for ((&p, &obs), &pred) in park.iter().zip(y).zip(yhat) {
        let a = &mut acc[p as usize];
        a.0 += 1;
        a.1 += obs;
        a.2 += pred;
    }
    let diffs: Vec<f64> = acc.iter().filter(|a| a.0 > 0).map(|a| (a.2 - a.1) / a.0 as f64).collect();
    if diffs.is_empty() {
        return 0.0;
    }
    (diffs.iter().map(|d| d * d).sum::<f64>() / diffs.len() as f64).sqrt()
}

fn summarize(test: &ParkDesign, yhat: &[f64], park_weight: Option<f64>) -> OutOfSample {
    let park = test.park_index();
    OutOfSample {
        rmse: rmse(&test.y, yhat),
        ecological_rmse: ecological_rmse(&park, &test.y, yhat),
        park_weight,
        n_rows: test.nrows(),
        n_parks: test.n_parks(),
    }
}

/// Freezes `effects`, refits intercept, park weight and team quality on the
/// test design by least squares, and scores the fitted values.
pub fn evaluate_out_of_sample(effects: &ParkEffectSet, test: &ParkDesign) -> Result<OutOfSample, ParkError> {
    let missing = effects.missing(test.parks.iter().map(String::as_str));
    if !missing.is_empty() {
        return Err(ParkError::MissingParks(missing));
    }
    let score: Vec<f64> = test.parks.iter().map(|p| effects.alpha[p]).collect();
    let used: Vec<f64> = {
        let mut seen = vec![false; test.n_parks()];
        for r in &test.rows {
            seen[r.park as usize] = true;
        }
        score.iter().zip(seen).filter(|(_, s)| *s).map(|(v, _)| *v).collect()
    };
    let spread = used.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - used.iter().cloned().fold(f64::INFINITY, f64::min);
    let with_score = spread > 1e-12;

    let nt = test.n_team_seasons() as u32;
    let team0: u32 = if with_score { 2 } else { 1 };
    let mut names = vec!["intercept".to_string()];
    if with_score {
        names.push("park_score".into());
    }
    names.extend(test.team_seasons[1..].iter().map(|t| format!("off_{t}")));
    names.extend(test.team_seasons[1..].iter().map(|t| format!("def_{t}")));
    let mut x = SparseDesign::new(names);
    for r in &test.rows {
        let mut e = vec![(0u32, 1.0)];
        if with_score {
            e.push((1, score[r.park as usize]));
        }
        if r.offense > 0 {
            e.push((team0 + r.offense - 1, 1.0));
        }
        if r.defense > 0 {
            e.push((team0 + nt - 1 + r.defense - 1, 1.0));
        }
        x.push_row(e);
    }
    let b = penalized_least_squares(&x, &test.y, 0.0, &[0])?;
    let yhat = x.mul(&b);
    Ok(summarize(test, &yhat, with_score.then(|| b[1])))
}

/// Scores a constant prediction, such as the overall training mean.
pub fn evaluate_constant(prediction: f64, test: &ParkDesign) -> OutOfSample {
    let yhat = vec![prediction; test.nrows()];
    summarize(test, &yhat, None)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaScore {
    pub lambda: f64,
    pub rmse: f64,
    pub ecological_rmse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneReport {
    pub scores: Vec<LambdaScore>,
    /// Smallest validation RMSE; ties go to the smaller lambda.
    pub best_lambda: f64,
}

/// Fits ridge on `train` for each lambda and scores it on `validation`.
pub fn tune_lambda(train: &ParkDesign, validation: &ParkDesign, grid: &[f64]) -> Result<TuneReport, ParkError> {
    if grid.is_empty() {
        return Err(ParkError::Spec("empty lambda grid".into()));
    }
    let mut scores = Vec::with_capacity(grid.len());
    for &lambda in grid {
        let fx = fit_park_ridge(train, lambda)?;
        let s = evaluate_out_of_sample(&fx, validation)?;
        scores.push(LambdaScore { lambda, rmse: s.rmse, ecological_rmse: s.ecological_rmse });
    }
    let best = scores
        .iter()
        .min_by(|a, b| a.rmse.total_cmp(&b.rmse).then(a.lambda.total_cmp(&b.lambda)))
        .expect("non-empty grid");
    Ok(TuneReport { best_lambda: best.lambda, scores })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_predictions_score_zero() {
        let y = [1.0, 0.0, 2.0];
        assert_eq!(rmse(&y, &y), 0.0);
        assert_eq!(ecological_rmse(&[0, 1, 1], &y, &y), 0.0);
    }

    #[test]
    fn ecological_rmse_by_hand() {
        // park 0: obs mean 1, park 1: obs mean 2; predict 1.5 everywhere.
        let park = [0, 0, 1, 1];
        let y = [0.0, 2.0, 1.0, 3.0];
        let yhat = [1.5; 4];
        assert!((ecological_rmse(&park, &y, &yhat) - 0.5).abs() < 1e-15);
        // Parks absent from the rows do not count.
        let park = [0, 0, 3, 3];
        assert!((ecological_rmse(&park, &y, &yhat) - 0.5).abs() < 1e-15);
    }
}
