//! Monte-Carlo comparison of the park estimators against known truth.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::rng;
use crate::types::split_team_season;

use super::{center, Estimator, ParkDesign, ParkError, PreparedFits, DEFAULT_LAMBDA, PARK_SCHEMA_VERSION};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Study {
    Independent,
    DivisionalOutlier,
}

impl FromStr for Study {
    type Err = ParkError;
    fn from_str(s: &str) -> Result<Self, ParkError> {
        match s.trim() {
            "1" | "independent" => Ok(Study::Independent),
            "2" | "divisional_outlier" | "divisional-outlier" => Ok(Study::DivisionalOutlier),
            other => Err(ParkError::UnknownStudy(other.to_string())),
        }
    }
}

impl fmt::Display for Study {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Study::Independent => "independent",
            Study::DivisionalOutlier => "divisional_outlier",
        })
    }
}

/// `N(mean, sd)`, sd a standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalSpec {
    pub mean: f64,
    pub sd: f64,
}

impl NormalSpec {
    pub const fn new(mean: f64, sd: f64) -> Self {
        NormalSpec { mean, sd }
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let z: f64 = rng.sample(StandardNormal);
        self.mean + self.sd * z
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSpec {
    pub study: Study,
    pub n_sims: usize,
    pub seed: u64,
    pub lambda: f64,
    pub intercept: f64,
    /// Standard deviation of the truncated normal run draw.
    pub noise_sd: f64,
    pub park: NormalSpec,
    /// Team-season offense for the independent study, division means otherwise.
    pub offense: NormalSpec,
    pub defense: NormalSpec,
    /// Team-season spread around the division mean (divisional study only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offense_within_sd: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub defense_within_sd: Option<f64>,
    /// A park held at a fixed effect instead of drawn.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outlier_park: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outlier_value: Option<f64>,
}

impl SimulationSpec {
    pub fn independent(n_sims: usize, seed: u64) -> Self {
        SimulationSpec {
            study: Study::Independent,
            n_sims,
            seed,
            lambda: DEFAULT_LAMBDA,
            intercept: 0.4,
            noise_sd: 1.0,
            park: NormalSpec::new(0.04, 0.065),
            offense: NormalSpec::new(0.02, 0.045),
            defense: NormalSpec::new(0.03, 0.07),
            offense_within_sd: None,
            defense_within_sd: None,
            outlier_park: None,
            outlier_value: None,
        }
    }

    pub fn divisional_outlier(n_sims: usize, seed: u64) -> Self {
        SimulationSpec {
            study: Study::DivisionalOutlier,
            n_sims,
            seed,
            lambda: DEFAULT_LAMBDA,
            intercept: 0.15,
            noise_sd: 1.0,
            park: NormalSpec::new(0.04, 0.065),
            offense: NormalSpec::new(0.02, 0.05),
            defense: NormalSpec::new(0.03, 0.0),
            offense_within_sd: Some(0.02),
            defense_within_sd: Some(0.033),
            outlier_park: Some(super::league::OUTLIER_PARK.to_string()),
            outlier_value: Some(0.32),
        }
    }

    pub fn for_study(study: Study, n_sims: usize, seed: u64) -> Self {
        match study {
            Study::Independent => Self::independent(n_sims, seed),
            Study::DivisionalOutlier => Self::divisional_outlier(n_sims, seed),
        }
    }

    fn validate(&self) -> Result<(), ParkError> {
        let bad = |m: &str| Err(ParkError::Spec(m.to_string()));
        if self.n_sims < 1 {
            return bad("n_sims must be at least 1");
        }
        if !(self.noise_sd > 0.0 && self.noise_sd.is_finite()) {
            return bad("noise_sd must be positive");
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(ParkError::Lambda(self.lambda));
        }
        let sds = [Some(self.park.sd), Some(self.offense.sd), Some(self.defense.sd), self.offense_within_sd, self.defense_within_sd];
        if sds.iter().flatten().any(|s| !(*s >= 0.0 && s.is_finite())) {
            return bad("standard deviations must be finite and >= 0");
        }
        if self.outlier_park.is_some() != self.outlier_value.is_some() {
            return bad("outlier_park and outlier_value go together");
        }
        if self.study == Study::DivisionalOutlier && (self.offense_within_sd.is_none() || self.defense_within_sd.is_none()) {
            return bad("the divisional study needs within-division standard deviations");
        }
        Ok(())
    }
}

/// A draw from `N(mu, sd)` truncated to `[0, inf)`, by rejection.
///
/// Close to the mode the normal itself is the proposal; deep in the tail an
/// exponential proposal keeps the acceptance rate high.
pub fn truncated_normal_positive<R: Rng + ?Sized>(rng: &mut R, mu: f64, sd: f64) -> f64 {
    let a = -mu / sd;
    if a < 0.5 {
        loop {
            let z: f64 = rng.sample(StandardNormal);
            if z >= a {
                return mu + sd * z;
            }
        }
    }
    let rate = (a + (a * a + 4.0).sqrt()) / 2.0;
    loop {
        let e: f64 = rng.sample(Exp1);
        let z = a + e / rate;
        let u: f64 = rng.random();
        if u <= (-(z - rate) * (z - rate) / 2.0).exp() {
            return mu + sd * z;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MethodError {
    pub method: Estimator,
    /// Euclidean distance between estimated and true centered park effects.
    pub l2: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outlier_abs: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub non_outlier_l2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrawReport {
    pub draw: usize,
    pub mean_runs: f64,
    pub errors: Vec<MethodError>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: Estimator,
    pub mean_l2: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_outlier_abs: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mean_non_outlier_l2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub schema_version: u32,
    pub spec: SimulationSpec,
    pub rows: usize,
    pub parks: usize,
    pub team_seasons: usize,
    pub methods: Vec<MethodSummary>,
    pub draws: Vec<DrawReport>,
}

impl SimulationReport {
    pub fn method(&self, e: Estimator) -> Option<&MethodSummary> {
        self.methods.iter().find(|m| m.method == e)
    }
}

struct Truth {
    park: Vec<f64>,
    offense: Vec<f64>,
    defense: Vec<f64>,
}

/// Division label of every team-season in the catalog, plus the season.
fn division_keys(design: &ParkDesign, divisions: &BTreeMap<String, String>) -> Result<Vec<(String, i32)>, ParkError> {
    design
        .team_seasons
        .iter()
        .map(|ts| {
            let (team, year) = split_team_season(ts).ok_or_else(|| ParkError::TeamSeason(ts.clone()))?;
            let div = divisions.get(team).ok_or_else(|| ParkError::NoDivision(team.to_string()))?;
            Ok((div.clone(), year))
        })
        .collect()
}

fn draw_truth<R: Rng + ?Sized>(
    spec: &SimulationSpec,
    design: &ParkDesign,
    outlier: Option<usize>,
    div_keys: &[(String, i32)],
    rng: &mut R,
) -> Truth {
    let mut park: Vec<f64> = (0..design.n_parks()).map(|_| spec.park.draw(rng)).collect();
    if let (Some(j), Some(v)) = (outlier, spec.outlier_value) {
        park[j] = v;
    }
    let nt = design.n_team_seasons();
    let (offense, defense) = match spec.study {
        Study::Independent => {
            let off = (0..nt).map(|_| spec.offense.draw(rng)).collect();
            let def = (0..nt).map(|_| spec.defense.draw(rng)).collect();
            (off, def)
        }
        Study::DivisionalOutlier => {
            let mut groups: Vec<&(String, i32)> = div_keys.iter().collect();
            groups.sort();
            groups.dedup();
            let off_mean: BTreeMap<&(String, i32), f64> = groups.iter().map(|g| (*g, spec.offense.draw(rng))).collect();
            let def_mean: BTreeMap<&(String, i32), f64> = groups.iter().map(|g| (*g, spec.defense.draw(rng))).collect();
            let w_off = spec.offense_within_sd.unwrap_or(0.0);
            let w_def = spec.defense_within_sd.unwrap_or(0.0);
            let off = div_keys.iter().map(|k| NormalSpec::new(off_mean[k], w_off).draw(rng)).collect();
            let def = div_keys.iter().map(|k| NormalSpec::new(def_mean[k], w_def).draw(rng)).collect();
            (off, def)
        }
    };
    Truth { park, offense, defense }
}

fn l2(a: &[f64], b: &[f64], skip: Option<usize>) -> f64 {
    a.iter()
        .zip(b)
        .enumerate()
        .filter(|(j, _)| Some(*j) != skip)
        .map(|(_, (x, y))| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Runs `spec.n_sims` independent draws on the template's indicator
/// structure, fitting the four fixed-effects estimators to each.
///
/// `divisions` maps team codes to division labels and is read only by the
/// divisional study. Each draw owns the random stream `(seed, "park-draw", m)`,
/// so the report does not depend on thread count.
pub fn simulate_study(
    spec: &SimulationSpec,
    template: &ParkDesign,
    divisions: &BTreeMap<String, String>,
) -> Result<SimulationReport, ParkError> {
    spec.validate()?;
    let outlier = match &spec.outlier_park {
        Some(p) => Some(
            template
                .parks
                .iter()
                .position(|q| q == p)
                .ok_or_else(|| ParkError::Spec(format!("outlier park {p} is not in the design")))?,
        ),
        None => None,
    };
    let div_keys = match spec.study {
        Study::DivisionalOutlier => division_keys(template, divisions)?,
        Study::Independent => Vec::new(),
    };
    let fits = PreparedFits::new(template, spec.lambda)?;

    let draws: Vec<DrawReport> = (0..spec.n_sims)
        .into_par_iter()
        .map(|m| {
            let mut rng = rng::stream(spec.seed, "park-draw", m as u64);
            let truth = draw_truth(spec, template, outlier, &div_keys, &mut rng);
            let y: Vec<f64> = template
                .rows
                .iter()
                .map(|r| {
                    let mu = spec.intercept
                        + truth.park[r.park as usize]
                        + truth.offense[r.offense as usize]
                        + truth.defense[r.defense as usize];
                    truncated_normal_positive(&mut rng, mu, spec.noise_sd).round()
                })
                .collect();
            let mut true_park = truth.park.clone();
            center(&mut true_park);
            let errors = Estimator::MODEL_BASED
                .iter()
                .map(|&method| {
                    let est = fits.fit(method, &y)?;
                    Ok(MethodError {
                        method,
                        l2: l2(&est, &true_park, None),
                        outlier_abs: outlier.map(|j| (est[j] - true_park[j]).abs()),
                        non_outlier_l2: outlier.map(|j| l2(&est, &true_park, Some(j))),
                    })
                })
                .collect::<Result<Vec<_>, ParkError>>()?;
            Ok(DrawReport { draw: m, mean_runs: y.iter().sum::<f64>() / y.len() as f64, errors })
        })
        .collect::<Result<Vec<_>, ParkError>>()?;

    let n = draws.len() as f64;
    let methods = Estimator::MODEL_BASED
        .iter()
        .enumerate()
        .map(|(k, &method)| {
            let mean = |f: &dyn Fn(&MethodError) -> Option<f64>| -> Option<f64> {
                let v: Option<Vec<f64>> = draws.iter().map(|d| f(&d.errors[k])).collect();
                v.map(|v| v.iter().sum::<f64>() / n)
            };
            MethodSummary {
                method,
                mean_l2: mean(&|e| Some(e.l2)).unwrap_or(f64::NAN),
                mean_outlier_abs: mean(&|e| e.outlier_abs),
                mean_non_outlier_l2: mean(&|e| e.non_outlier_l2),
            }
        })
        .collect();

    Ok(SimulationReport {
        schema_version: PARK_SCHEMA_VERSION,
        spec: spec.clone(),
        rows: template.nrows(),
        parks: template.n_parks(),
        team_seasons: template.n_team_seasons(),
        methods,
        draws,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn study_parsing() {
        assert_eq!("1".parse::<Study>().unwrap(), Study::Independent);
        assert_eq!("divisional_outlier".parse::<Study>().unwrap(), Study::DivisionalOutlier);
        assert!(matches!("3".parse::<Study>(), Err(ParkError::UnknownStudy(_))));
    }

    #[test]
    fn truncated_normal_is_nonnegative_with_the_right_mean() {
        let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(1);
        for (mu, expect) in [(-3.0, 0.2831), (-0.4, 0.6688), (0.0, 0.7979), (0.5, 1.0091), (2.0, 2.0553)] {
            let n = 40_000;
            let draws: Vec<f64> = (0..n).map(|_| truncated_normal_positive(&mut rng, mu, 1.0)).collect();
            assert!(draws.iter().all(|&x| x >= 0.0));
            // E[X] = mu + phi(a) / (1 - Phi(a)) with a = -mu.
            let mean = draws.iter().sum::<f64>() / n as f64;
            assert!((mean - expect).abs() < 0.015, "mu {mu}: {mean} vs {expect}");
        }
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let mut s = SimulationSpec::independent(0, 1);
        assert!(s.validate().is_err());
        s.n_sims = 1;
        s.lambda = -0.1;
        assert!(s.validate().is_err());
        let mut s = SimulationSpec::divisional_outlier(1, 1);
        s.outlier_value = None;
        assert!(s.validate().is_err());
    }
}
