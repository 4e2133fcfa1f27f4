//! File formats: CSV tables with fixed headers, JSON documents, and atomic
//! writes (temporary file in the target directory, then rename).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gwar::{GwarGame, GwarSeason};
use crate::ingest::{HalfInningRecord, StartLine};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: {source}")]
    Json { path: PathBuf, source: serde_json::Error },
    #[error("{path}: expected header {expected:?}, found {found:?}")]
    Header { path: PathBuf, expected: String, found: String },
}

/// A row type with a documented CSV header.
pub trait CsvRecord: Serialize + DeserializeOwned {
    const HEADER: &'static [&'static str];
}

impl CsvRecord for HalfInningRecord {
    const HEADER: &'static [&'static str] =
        &["game_id", "year", "park", "inning", "half", "offense_team_season", "defense_team_season", "runs"];
}

impl CsvRecord for StartLine {
    const HEADER: &'static [&'static str] = &[
        "pitcher_id",
        "game_id",
        "year",
        "date",
        "park",
        "is_home",
        "league",
        "exit_kind",
        "inning",
        "exit_outs",
        "exit_base_state",
        "runs_allowed",
        "team_won",
    ];
}

impl CsvRecord for GwarGame {
    const HEADER: &'static [&'static str] = &[
        "pitcher_id",
        "game_id",
        "year",
        "date",
        "park",
        "is_home",
        "league",
        "exit_kind",
        "inning",
        "exit_outs",
        "exit_base_state",
        "runs_allowed",
        "alpha",
        "raw_gwar",
        "park_adjusted_gwar",
    ];
}

impl CsvRecord for GwarSeason {
    const HEADER: &'static [&'static str] = &["pitcher_id", "year", "games", "gwar", "raw_gwar", "rescaled_gwar"];
}

/// One row of a user-supplied reference WAR table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceWar {
    #[serde(alias = "pitcher_id")]
    pub pitcher: String,
    #[serde(alias = "year")]
    pub season: i32,
    pub war: f64,
}

impl CsvRecord for ReferenceWar {
    const HEADER: &'static [&'static str] = &["pitcher", "season", "war"];
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io { path: path.to_path_buf(), source }
}

/// Writes `bytes` to a sibling temporary file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(io_err(path))
}

/// CSV bytes with `T::HEADER` first, even for zero rows.
pub fn csv_bytes<T: CsvRecord>(rows: &[T]) -> Result<Vec<u8>, csv::Error> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(T::HEADER)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| csv::Error::from(e.into_error()))
}

pub fn write_csv<T: CsvRecord>(path: &Path, rows: &[T]) -> Result<(), IoError> {
    let bytes = csv_bytes(rows).map_err(|source| IoError::Csv { path: path.to_path_buf(), source })?;
    write_atomic(path, &bytes)
}

/// Reads a CSV written with `T::HEADER`. Extra columns are an error only if
/// a required one is missing.
pub fn read_csv<T: CsvRecord>(path: &Path) -> Result<Vec<T>, IoError> {
    let file = fs::File::open(path).map_err(io_err(path))?;
    let mut r = csv::Reader::from_reader(std::io::BufReader::new(file));
    let headers = r.headers().map_err(|source| IoError::Csv { path: path.to_path_buf(), source })?.clone();
    let present: Vec<&str> = headers.iter().collect();
    if let Some(missing) = T::HEADER.iter().find(|h| !present.contains(h)) {
        // The reference table accepts its aliases.
        let alias_ok = matches!(*missing, "pitcher" | "season")
            && present.contains(&if *missing == "pitcher" { "pitcher_id" } else { "year" });
        if !alias_ok {
            return Err(IoError::Header {
                path: path.to_path_buf(),
                expected: T::HEADER.join(","),
                found: present.join(","),
            });
        }
    }
    r.deserialize().collect::<Result<Vec<T>, _>>().map_err(|source| IoError::Csv { path: path.to_path_buf(), source })
}

pub fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>, serde_json::Error> {
    let mut v = serde_json::to_vec_pretty(value)?;
    v.push(b'\n');
    Ok(v)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), IoError> {
    let bytes = json_bytes(value).map_err(|source| IoError::Json { path: path.to_path_buf(), source })?;
    write_atomic(path, &bytes)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, IoError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|source| IoError::Json { path: path.to_path_buf(), source })
}
