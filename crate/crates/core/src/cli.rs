//! The `gridwar` command line.
//!
//! Exit codes: 0 success, 1 validation error (bad arguments, inputs or
//! data), 2 internal error. Errors are printed to stderr as one JSON line.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::grid_f::{fit_f, WinProbGrid, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::grid_g::{fit_g, InningRunDist, DEFAULT_MIN_COUNT};
use crate::gwar::{
    compare_histograms, gwar_game, rank_and_report, runs_histogram, seasons_from_games, DiffBin, GwarGame,
    GwarSeason, RankReport, ReplacementLevel, SeasonKey, TaylorMode,
};
use crate::ingest::{
    build_half_innings, build_start_lines, parse_plate_appearances, write_plate_appearances, ColumnMap,
    HalfInningRecord, PlateAppearance, Rejection, RunsCharged, StartLine,
};
use crate::io::{self, ReferenceWar};
use crate::park::{
    additive_effect_set, build_park_design, espn_park_factors, evaluate_constant, evaluate_out_of_sample, fangraphs_park_factors,
    fangraphs_weight, fit_park, league, mean_runs, simulate_study, team_aggregates, tune_lambda, Estimator,
    ParkDesign, ParkEffectSet, References, SimulationSpec, Study, TuneReport, DEFAULT_LAMBDA,
};
use crate::types::YearWindow;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Parser)]
#[command(name = "gridwar", version, about = "Grid WAR for starting pitchers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse play-by-play files into plate appearances, half-innings and start lines.
    Ingest(IngestArgs),
    /// Fit the win-probability grid f(I, R).
    FitF(FitFArgs),
    /// Fit the rest-of-inning run distribution g(R | S, O).
    FitG(FitGArgs),
    /// Fit per-park additive run effects.
    FitPark(FitParkArgs),
    /// Sweep the ridge penalty against out-of-sample runs.
    TuneLambda(TuneLambdaArgs),
    /// Per-game and seasonal Grid WAR.
    Gwar(GwarArgs),
    /// Rescale seasons to a reference WAR, rank them and compare pitchers.
    Compare(CompareArgs),
    /// Compare park estimators on simulated seasons.
    SimulatePark(SimulateArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ChargedArg {
    Total,
    Earned,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TaylorArg {
    Clamped,
    Literal,
}

#[derive(Debug, Args)]
struct IngestArgs {
    #[arg(long, num_args = 1.., required = true)]
    input: Vec<PathBuf>,
    /// JSON column map; defaults to the canonical column names.
    #[arg(long)]
    schema: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Runs charged to the starter.
    #[arg(long, value_enum, default_value = "total")]
    runs: ChargedArg,
}

#[derive(Debug, Args)]
struct FitFArgs {
    #[arg(long)]
    starts: PathBuf,
    #[arg(long)]
    years: YearWindow,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
    max_iter: usize,
}

#[derive(Debug, Args)]
struct FitGArgs {
    #[arg(long)]
    pa: PathBuf,
    #[arg(long)]
    years: YearWindow,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_MIN_COUNT)]
    min_count: u64,
}

#[derive(Debug, Args)]
struct ParkDataArgs {
    #[arg(long)]
    half_innings: PathBuf,
    /// Reference park; defaults to the first code in sort order.
    #[arg(long)]
    reference_park: Option<String>,
    /// Reference team-season; defaults to the first code in sort order.
    #[arg(long)]
    reference_team_season: Option<String>,
}

impl ParkDataArgs {
    fn refs(&self) -> References {
        References { park: self.reference_park.clone(), team_season: self.reference_team_season.clone() }
    }
}

#[derive(Debug, Args)]
struct FitParkArgs {
    #[command(flatten)]
    data: ParkDataArgs,
    #[arg(long)]
    years: YearWindow,
    #[arg(long, default_value = "ridge")]
    method: Estimator,
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    lambda: f64,
    /// Mean runs per half-inning for the additive conversion; defaults to the window mean.
    #[arg(long)]
    ybar: Option<f64>,
    /// Regression weight of the FanGraphs factor; required unless the window spans 3 seasons.
    #[arg(long)]
    fangraphs_weight: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct TuneLambdaArgs {
    #[command(flatten)]
    data: ParkDataArgs,
    #[arg(long)]
    train: YearWindow,
    #[arg(long)]
    validate: YearWindow,
    #[arg(long, value_delimiter = ',', default_value = "0.01,0.05,0.1,0.25,0.5,1,2")]
    grid: Vec<f64>,
    #[arg(long)]
    fangraphs_weight: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct GwarArgs {
    #[arg(long)]
    starts: PathBuf,
    #[arg(long)]
    f: PathBuf,
    #[arg(long)]
    g: PathBuf,
    #[arg(long)]
    park: PathBuf,
    #[arg(long, default_value_t = crate::gwar::DEFAULT_W_REP)]
    wrep: f64,
    #[arg(long, value_enum, default_value = "clamped")]
    taylor: TaylorArg,
    /// Game and season output paths, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    out: Vec<PathBuf>,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[arg(long)]
    seasons: PathBuf,
    /// CSV with columns pitcher, season, war.
    #[arg(long)]
    reference: PathBuf,
    /// Per-game values, for the runs-allowed histograms.
    #[arg(long)]
    games: Option<PathBuf>,
    /// Two pitcher ids to compare, `a,b`. Repeatable.
    #[arg(long)]
    pair: Vec<String>,
    /// Restrict histograms to one season.
    #[arg(long)]
    year: Option<i32>,
    #[arg(long, default_value_t = 5)]
    extremes: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long)]
    study: String,
    #[arg(long, default_value_t = 25)]
    sims: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_LAMBDA)]
    lambda: f64,
    /// Observed half-innings to take the design from; defaults to the synthetic league.
    #[arg(long)]
    half_innings: Option<PathBuf>,
    #[arg(long, default_value = "2017:2019")]
    years: YearWindow,
    /// Override the spread of division defense means (divisional study).
    #[arg(long)]
    defense_division_sd: Option<f64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug)]
enum CliError {
    Validation(String),
    Internal(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Internal(_) => 2,
        }
    }
}

fn invalid(e: impl std::fmt::Display) -> CliError {
    CliError::Validation(e.to_string())
}

/// Reading inputs fails as a validation error; writing outputs as internal.
fn read_err(e: io::IoError) -> CliError {
    CliError::Validation(e.to_string())
}

fn write_err(e: io::IoError) -> CliError {
    CliError::Internal(e.to_string())
}

#[derive(Serialize)]
struct ErrorLine<'a> {
    error: &'a str,
    message: String,
}

fn report_error(e: &CliError) {
    let (kind, msg) = match e {
        CliError::Validation(m) => ("validation", m),
        CliError::Internal(m) => ("internal", m),
    };
    let line = ErrorLine { error: kind, message: msg.replace('\n', " ") };
    eprintln!("{}", serde_json::to_string(&line).unwrap_or_else(|_| format!("{{\"error\":\"{kind}\"}}")));
}

fn configure_threads() {
    if let Some(n) = std::env::var("GRIDWAR_THREADS").ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        // Fails harmlessly if a pool already exists in this process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = e.print();
                    0
                }
                ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                    let _ = e.print();
                    1
                }
                _ => {
                    let text = e.render().to_string();
                    let msg: Vec<&str> = text
                        .lines()
                        .take_while(|l| !l.starts_with("Usage:") && !l.starts_with("For more information"))
                        .map(str::trim)
                        .filter(|l| !l.is_empty())
                        .collect();
                    report_error(&CliError::Validation(msg.join(" ").trim_start_matches("error: ").to_string()));
                    1
                }
            };
        }
    };
    configure_threads();
    let outcome = std::panic::catch_unwind(|| execute(cli.command));
    match outcome {
        Ok(Ok(())) => 0,
        Ok(Err(e)) => {
            report_error(&e);
            e.code()
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            report_error(&CliError::Internal(msg));
            2
        }
    }
}

fn execute(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Ingest(a) => ingest(a),
        Command::FitF(a) => fit_f_cmd(a),
        Command::FitG(a) => fit_g_cmd(a),
        Command::FitPark(a) => fit_park_cmd(a),
        Command::TuneLambda(a) => tune_lambda_cmd(a),
        Command::Gwar(a) => gwar_cmd(a),
        Command::Compare(a) => compare_cmd(a),
        Command::SimulatePark(a) => simulate_cmd(a),
    }
}

fn ensure_exists(p: &Path) -> Result<(), CliError> {
    if p.exists() {
        Ok(())
    } else {
        Err(invalid(format!("{}: no such file", p.display())))
    }
}

// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct RejectRow<'a> {
    file: String,
    line: u64,
    reason: &'a str,
    raw: &'a str,
}

fn ingest(a: IngestArgs) -> Result<(), CliError> {
    for p in &a.input {
        ensure_exists(p)?;
    }
    let map = match &a.schema {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| invalid(format!("{}: {e}", p.display())))?;
            ColumnMap::from_json(&text).map_err(invalid)?
        }
        None => ColumnMap::default(),
    };
    let parsed: Vec<(PathBuf, Vec<PlateAppearance>, Vec<Rejection>)> = a
        .input
        .par_iter()
        .map(|p| {
            let f = fs::File::open(p).map_err(|e| invalid(format!("{}: {e}", p.display())))?;
            let parsed = parse_plate_appearances(std::io::BufReader::new(f), &map)
                .map_err(|e| invalid(format!("{}: {e}", p.display())))?;
            Ok((p.clone(), parsed.records, parsed.rejects))
        })
        .collect::<Result<_, CliError>>()?;

    let mut pas = Vec::new();
    let mut rejects = Vec::new();
    for (path, recs, rej) in &parsed {
        pas.extend(recs.iter().cloned());
        for r in rej {
            rejects.push(RejectRow { file: path.display().to_string(), line: r.line, reason: &r.reason, raw: &r.raw });
        }
    }
    let halves = build_half_innings(&pas);
    for w in &halves.warnings {
        eprintln!("warning: {w}");
    }
    let charged = match a.runs {
        ChargedArg::Total => RunsCharged::Total,
        ChargedArg::Earned => RunsCharged::Earned,
    };
    let starts = build_start_lines(&pas, charged).map_err(invalid)?;

    fs::create_dir_all(&a.out).map_err(|e| CliError::Internal(format!("{}: {e}", a.out.display())))?;
    let mut buf = Vec::new();
    write_plate_appearances(&mut buf, &pas).map_err(|e| CliError::Internal(e.to_string()))?;
    io::write_atomic(&a.out.join("plate_appearances.csv"), &buf).map_err(write_err)?;
    io::write_csv(&a.out.join("half_innings.csv"), &halves.records).map_err(write_err)?;
    io::write_csv(&a.out.join("start_lines.csv"), &starts.lines).map_err(write_err)?;

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["file", "line", "reason", "raw"]).map_err(|e| CliError::Internal(e.to_string()))?;
    for r in &rejects {
        w.write_record([r.file.as_str(), &r.line.to_string(), r.reason, r.raw])
            .map_err(|e| CliError::Internal(e.to_string()))?;
    }
    io::write_atomic(&a.out.join("rejects.csv"), &w.into_inner().map_err(|e| CliError::Internal(e.to_string()))?)
        .map_err(write_err)?;

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["game_id", "pitcher_id", "reason"]).map_err(|e| CliError::Internal(e.to_string()))?;
    for r in &starts.rejected {
        w.write_record([&r.game_id, &r.pitcher_id, &r.reason]).map_err(|e| CliError::Internal(e.to_string()))?;
    }
    io::write_atomic(&a.out.join("rejected_starts.csv"), &w.into_inner().map_err(|e| CliError::Internal(e.to_string()))?)
        .map_err(write_err)?;

    println!(
        "plate_appearances={} rejects={} half_innings={} start_lines={} rejected_starts={}",
        pas.len(),
        rejects.len(),
        halves.records.len(),
        starts.lines.len(),
        starts.rejected.len()
    );
    Ok(())
}

fn fit_f_cmd(a: FitFArgs) -> Result<(), CliError> {
    ensure_exists(&a.starts)?;
    let starts: Vec<StartLine> = io::read_csv(&a.starts).map_err(read_err)?;
    let grid = fit_f(&starts, a.years, a.tol, a.max_iter).map_err(invalid)?;
    io::write_json(&a.out, &grid).map_err(write_err)?;
    println!("rows={} log_likelihood={}", grid.n_rows, grid.log_likelihood.unwrap_or(f64::NAN));
    Ok(())
}

fn read_pa_file(p: &Path) -> Result<Vec<PlateAppearance>, CliError> {
    ensure_exists(p)?;
    let f = fs::File::open(p).map_err(|e| invalid(format!("{}: {e}", p.display())))?;
    let parsed =
        parse_plate_appearances(std::io::BufReader::new(f), &ColumnMap::default()).map_err(invalid)?;
    if !parsed.rejects.is_empty() {
        eprintln!("warning: {} rows of {} rejected", parsed.rejects.len(), p.display());
    }
    Ok(parsed.records)
}

fn fit_g_cmd(a: FitGArgs) -> Result<(), CliError> {
    let pas = read_pa_file(&a.pa)?;
    let dist = fit_g(&pas, a.years, a.min_count).map_err(invalid)?;
    io::write_json(&a.out, &dist).map_err(write_err)?;
    println!("cells={} observations={}", dist.cells.len(), dist.cells.iter().map(|c| c.count).sum::<u64>());
    Ok(())
}

fn read_half_innings(p: &Path) -> Result<Vec<HalfInningRecord>, CliError> {
    ensure_exists(p)?;
    io::read_csv(p).map_err(read_err)
}

fn baseline_weight(explicit: Option<f64>, window: YearWindow) -> Result<f64, CliError> {
    match explicit {
        Some(w) => Ok(w),
        None => fangraphs_weight(window.len()).map_err(invalid),
    }
}

fn park_effects(
    halves: &[HalfInningRecord],
    design: &ParkDesign,
    method: Estimator,
    lambda: f64,
    ybar: Option<f64>,
    fg_weight: Option<f64>,
) -> Result<ParkEffectSet, CliError> {
    let window = design.window;
    match method {
        Estimator::EspnAdditive | Estimator::FangraphsAdditive => {
            let aggs = team_aggregates(halves, window).map_err(invalid)?;
            let ybar = ybar.or_else(|| mean_runs(halves, window)).ok_or_else(|| invalid("no runs to average"))?;
            let mult: BTreeMap<String, f64> = if method == Estimator::EspnAdditive {
                espn_park_factors(&aggs)
            } else {
                let w = baseline_weight(fg_weight, window)?;
                fangraphs_park_factors(&aggs, w).into_iter().map(|(p, f)| (p, f.alpha)).collect()
            };
            Ok(additive_effect_set(&mult, ybar, method, window))
        }
        _ => fit_park(design, method, lambda).map_err(invalid),
    }
}

fn fit_park_cmd(a: FitParkArgs) -> Result<(), CliError> {
    let halves = read_half_innings(&a.data.half_innings)?;
    let design = build_park_design(&halves, a.years, &a.data.refs()).map_err(invalid)?;
    let set = park_effects(&halves, &design, a.method, a.lambda, a.ybar, a.fangraphs_weight)?;
    io::write_json(&a.out, &set).map_err(write_err)?;
    println!("parks={} method={} rows={}", set.alpha.len(), set.estimator, design.nrows());
    Ok(())
}

#[derive(Serialize)]
struct BaselineScore {
    method: String,
    rmse: f64,
    ecological_rmse: f64,
}

#[derive(Serialize)]
struct TuneOutput {
    schema_version: u32,
    train: YearWindow,
    validate: YearWindow,
    #[serde(flatten)]
    tuning: TuneReport,
    baselines: Vec<BaselineScore>,
}

fn tune_lambda_cmd(a: TuneLambdaArgs) -> Result<(), CliError> {
    let halves = read_half_innings(&a.data.half_innings)?;
    let refs = a.data.refs();
    let train = build_park_design(&halves, a.train, &refs).map_err(invalid)?;
    let test = build_park_design(&halves, a.validate, &refs).map_err(invalid)?;
    let tuning = tune_lambda(&train, &test, &a.grid).map_err(invalid)?;

    let mut baselines = Vec::new();
    let ybar = mean_runs(&halves, a.train).ok_or_else(|| invalid("empty training window"))?;
    let s = evaluate_constant(ybar, &test);
    baselines.push(BaselineScore { method: "overall_mean".into(), rmse: s.rmse, ecological_rmse: s.ecological_rmse });
    let mut methods = vec![Estimator::Ols, Estimator::Ridge, Estimator::EspnAdditive];
    if a.fangraphs_weight.is_some() || fangraphs_weight(a.train.len()).is_ok() {
        methods.push(Estimator::FangraphsAdditive);
    } else {
        eprintln!("warning: no FanGraphs weight for a {}-season window; baseline skipped", a.train.len());
    }
    for m in methods {
        let set = park_effects(&halves, &train, m, DEFAULT_LAMBDA, None, a.fangraphs_weight)?;
        let s = evaluate_out_of_sample(&set, &test).map_err(invalid)?;
        baselines.push(BaselineScore { method: m.to_string(), rmse: s.rmse, ecological_rmse: s.ecological_rmse });
    }
    let best = tuning.best_lambda;
    io::write_json(
        &a.out,
        &TuneOutput { schema_version: REPORT_SCHEMA_VERSION, train: a.train, validate: a.validate, tuning, baselines },
    )
    .map_err(write_err)?;
    println!("best_lambda={best}");
    Ok(())
}

fn gwar_cmd(a: GwarArgs) -> Result<(), CliError> {
    if a.out.len() != 2 {
        return Err(invalid("--out takes two paths: games.csv,seasons.csv"));
    }
    let w_rep = ReplacementLevel::new(a.wrep).map_err(invalid)?;
    for p in [&a.starts, &a.f, &a.g, &a.park] {
        ensure_exists(p)?;
    }
    let starts: Vec<StartLine> = io::read_csv(&a.starts).map_err(read_err)?;
    let f: WinProbGrid = io::read_json(&a.f).map_err(read_err)?;
    let g: InningRunDist = io::read_json(&a.g).map_err(read_err)?;
    let parks: ParkEffectSet = io::read_json(&a.park).map_err(read_err)?;
    let mode = match a.taylor {
        TaylorArg::Clamped => TaylorMode::Clamped,
        TaylorArg::Literal => TaylorMode::Literal,
    };
    let games: Vec<GwarGame> = starts
        .par_iter()
        .map(|s| gwar_game(s, &f, &g, &parks, w_rep, mode))
        .collect::<Result<_, _>>()
        .map_err(invalid)?;
    let seasons = seasons_from_games(&games);
    io::write_csv(&a.out[0], &games).map_err(write_err)?;
    io::write_csv(&a.out[1], &seasons).map_err(write_err)?;
    println!("games={} seasons={}", games.len(), seasons.len());
    Ok(())
}

#[derive(Serialize)]
struct Histogram {
    a: String,
    b: String,
    year: Option<i32>,
    bins: Vec<DiffBin>,
}

#[derive(Serialize)]
struct CompareOutput {
    schema_version: u32,
    #[serde(flatten)]
    report: RankReport<SeasonKey>,
    histograms: Vec<Histogram>,
}

fn compare_cmd(a: CompareArgs) -> Result<(), CliError> {
    ensure_exists(&a.seasons)?;
    ensure_exists(&a.reference)?;
    let seasons: Vec<GwarSeason> = io::read_csv(&a.seasons).map_err(read_err)?;
    let reference: Vec<ReferenceWar> = io::read_csv(&a.reference).map_err(read_err)?;
    let values: BTreeMap<SeasonKey, f64> = seasons
        .iter()
        .map(|s| (SeasonKey { pitcher_id: s.pitcher_id.clone(), year: s.year }, s.gwar))
        .collect();
    let refs: BTreeMap<SeasonKey, f64> = reference
        .iter()
        .map(|r| (SeasonKey { pitcher_id: r.pitcher.clone(), year: r.season }, r.war))
        .collect();
    let report = rank_and_report(&values, &refs, a.extremes).map_err(invalid)?;

    let mut histograms = Vec::new();
    if let Some(path) = &a.games {
        ensure_exists(path)?;
        let games: Vec<GwarGame> = io::read_csv(path).map_err(read_err)?;
        let mut pairs = Vec::new();
        for p in &a.pair {
            match p.split_once(',') {
                Some((x, y)) if !x.is_empty() && !y.is_empty() && !y.contains(',') => {
                    pairs.push((x.to_string(), y.to_string(), a.year))
                }
                _ => return Err(invalid(format!("--pair expects two pitcher ids `a,b`, got {p:?}"))),
            }
        }
        if pairs.is_empty() {
            if let (Some(u), Some(o)) = (report.undervalued.first(), report.overvalued.first()) {
                if u.key.year == o.key.year {
                    pairs.push((u.key.pitcher_id.clone(), o.key.pitcher_id.clone(), Some(u.key.year)));
                }
            }
        }
        for (pa, pb, year) in pairs {
            let runs = |who: &str| {
                let r: Vec<u32> = games
                    .iter()
                    .filter(|g| g.pitcher_id == who && year.is_none_or(|y| g.year == y))
                    .map(|g| g.runs_allowed)
                    .collect();
                runs_histogram(&r)
            };
            let bins = compare_histograms(&runs(&pa), &runs(&pb));
            histograms.push(Histogram { a: pa, b: pb, year, bins });
        }
    }
    let n = report.ranking.len();
    let scale = report.scale;
    io::write_json(&a.out, &CompareOutput { schema_version: REPORT_SCHEMA_VERSION, report, histograms })
        .map_err(write_err)?;
    println!("seasons={n} scale={scale}");
    Ok(())
}

fn simulate_cmd(a: SimulateArgs) -> Result<(), CliError> {
    let study: Study = a.study.parse().map_err(invalid)?;
    let mut spec = SimulationSpec::for_study(study, a.sims, a.seed);
    spec.lambda = a.lambda;
    if let Some(sd) = a.defense_division_sd {
        spec.defense.sd = sd;
    }
    let halves = match &a.half_innings {
        Some(p) => read_half_innings(p)?,
        None => league::synthetic_design_template(a.years.years()),
    };
    let template = build_park_design(&halves, a.years, &References::default()).map_err(invalid)?;
    let report = simulate_study(&spec, &template, &league::divisions()).map_err(invalid)?;
    io::write_json(&a.out, &report).map_err(write_err)?;
    for m in &report.methods {
        let mut line = format!("{:<15} l2={:.4}", m.method.name(), m.mean_l2);
        if let (Some(o), Some(n)) = (m.mean_outlier_abs, m.mean_non_outlier_l2) {
            line.push_str(&format!(" outlier={o:.4} others={n:.4}"));
        }
        println!("{line}");
    }
    Ok(())
}
