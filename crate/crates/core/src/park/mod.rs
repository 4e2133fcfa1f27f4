//! Additive park effects: runs per half-inning at a park above the average
//! park, for an average offense facing an average defense.

mod design;
mod estimators;
mod evaluate;
mod factors;
pub mod league;
mod simulate;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::LinalgError;
use crate::types::YearWindow;

pub use design::{build_park_design, ParkDesign, ParkRow, References};
pub use estimators::{
    fit_park, fit_park_naive_ols, fit_park_ols, fit_park_ridge, fit_park_three_part_ols, ols_coefficients,
    ridge_coefficients, three_part_coefficients, PreparedFits, ThreePartFit,
};
pub use evaluate::{
    ecological_rmse, evaluate_constant, evaluate_out_of_sample, rmse, tune_lambda, LambdaScore, OutOfSample,
    TuneReport,
};
pub use factors::{
    additive_effect_set, espn_park_factor, espn_park_factors, fangraphs_park_factor, fangraphs_park_factors,
    fangraphs_weight, mean_runs, team_aggregates, to_additive, FangraphsFactor, TeamAggregate, LEAGUE_MEAN_RUNS,
};
pub use simulate::{
    simulate_study, truncated_normal_positive, DrawReport, MethodError, MethodSummary, NormalSpec, SimulationReport,
    SimulationSpec, Study,
};

pub const PARK_SCHEMA_VERSION: u32 = 1;
pub const DEFAULT_LAMBDA: f64 = 0.25;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParkError {
    #[error("no half-innings inside {0}")]
    Empty(YearWindow),
    #[error("reference level {0} does not occur in the data")]
    UnknownReference(String),
    #[error("three-part fit has no {0} half-innings")]
    EmptySubset(&'static str),
    #[error("lambda must be finite and >= 0, got {0}")]
    Lambda(f64),
    #[error("parks missing from the effect set: {}", .0.join(", "))]
    MissingParks(Vec<String>),
    #[error("unknown study {0:?}; expected 1, 2, independent or divisional_outlier")]
    UnknownStudy(String),
    #[error("unknown estimator {0:?}")]
    UnknownEstimator(String),
    #[error("invalid simulation spec: {0}")]
    Spec(String),
    #[error("malformed team-season code {0:?}")]
    TeamSeason(String),
    #[error("no division known for team {0}")]
    NoDivision(String),
    #[error("no regression weight for a {0}-year factor; pass one explicitly")]
    FangraphsWeight(usize),
    #[error("{0}")]
    Baseline(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    NaiveOls,
    Ols,
    ThreePartOls,
    Ridge,
    EspnAdditive,
    FangraphsAdditive,
}

impl Estimator {
    /// The four estimators of the fixed-effects model, in reporting order.
    pub const MODEL_BASED: [Estimator; 4] =
        [Estimator::NaiveOls, Estimator::Ols, Estimator::ThreePartOls, Estimator::Ridge];

    pub fn name(self) -> &'static str {
        match self {
            Estimator::NaiveOls => "naive_ols",
            Estimator::Ols => "ols",
            Estimator::ThreePartOls => "three_part_ols",
            Estimator::Ridge => "ridge",
            Estimator::EspnAdditive => "espn_additive",
            Estimator::FangraphsAdditive => "fangraphs_additive",
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Estimator {
    type Err = ParkError;
    fn from_str(s: &str) -> Result<Self, ParkError> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        Ok(match key.as_str() {
            "naive_ols" | "naive" => Estimator::NaiveOls,
            "ols" => Estimator::Ols,
            "three_part_ols" | "three_part" => Estimator::ThreePartOls,
            "ridge" => Estimator::Ridge,
            "espn_additive" | "espn" => Estimator::EspnAdditive,
            "fangraphs_additive" | "fangraphs" => Estimator::FangraphsAdditive,
            _ => return Err(ParkError::UnknownEstimator(s.to_string())),
        })
    }
}

/// Per-park additive effects plus the metadata of the fit that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParkEffectSet {
    pub schema_version: u32,
    pub estimator: Estimator,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<YearWindow>,
    pub centered: bool,
    pub alpha: BTreeMap<String, f64>,
}

impl ParkEffectSet {
    pub fn new(estimator: Estimator, alpha: BTreeMap<String, f64>, centered: bool) -> Self {
        ParkEffectSet { schema_version: PARK_SCHEMA_VERSION, estimator, lambda: None, window: None, centered, alpha }
    }

    pub fn get(&self, park: &str) -> Option<f64> {
        self.alpha.get(park).copied()
    }

    pub fn mean(&self) -> f64 {
        if self.alpha.is_empty() {
            0.0
        } else {
            self.alpha.values().sum::<f64>() / self.alpha.len() as f64
        }
    }

    /// Parks among `parks` that have no effect in this set, sorted and deduplicated.
    pub fn missing<'a>(&self, parks: impl IntoIterator<Item = &'a str>) -> Vec<String> {
        let mut out: Vec<String> =
            parks.into_iter().filter(|p| !self.alpha.contains_key(*p)).map(str::to_string).collect();
        out.sort();
        out.dedup();
        out
    }
}

/// Subtracts the mean so the effects sum to zero.
pub fn center(values: &mut [f64]) {
    if values.is_empty() {
        return;
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    for v in values.iter_mut() {
        *v -= mean;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn estimator_names_round_trip() {
        for e in [
            Estimator::NaiveOls,
            Estimator::Ols,
            Estimator::ThreePartOls,
            Estimator::Ridge,
            Estimator::EspnAdditive,
            Estimator::FangraphsAdditive,
        ] {
            assert_eq!(e.name().parse::<Estimator>().unwrap(), e);
            assert_eq!(serde_json::to_string(&e).unwrap(), format!("\"{}\"", e.name()));
        }
        assert!("lasso".parse::<Estimator>().is_err());
    }

    #[test]
    fn centering() {
        let mut v = vec![1.0, 2.0, 6.0];
        center(&mut v);
        assert_eq!(v, vec![-2.0, -1.0, 3.0]);
    }
}
