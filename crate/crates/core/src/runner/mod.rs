//! Configuration, experiment dispatch and report export.

mod config;
mod experiments;
mod report;

pub use config::ExperimentConfig;
pub use experiments::{canonical, run, EXPERIMENTS};
pub use report::{num, ExperimentReport, Record, Series, VERSION};

use crate::error::{Error, Result};
use std::path::{Path, PathBuf};
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(Error::Validation(format!("format must be csv or json, got {other:?}"))),
        }
    }
}

fn file_stem(s: &str) -> String {
    s.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '.' { c } else { '_' }).collect()
}

/// Writes `<experiment>.csv` or `<experiment>.json` into `dir`, plus one
/// `<experiment>.<series>.csv` per plot series. Returns the written paths.
pub fn export(report: &ExperimentReport, dir: &Path, format: Format) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let stem = file_stem(&report.experiment);
    let mut written = Vec::new();
    let main = match format {
        Format::Csv => {
            let path = dir.join(format!("{stem}.csv"));
            report.write_csv(std::fs::File::create(&path)?)?;
            path
        }
        Format::Json => {
            let path = dir.join(format!("{stem}.json"));
            std::fs::write(&path, report.to_json()?)?;
            path
        }
    };
    written.push(main);
    for s in &report.series {
        let path = dir.join(format!("{stem}.{}.csv", file_stem(&s.name)));
        report.write_series_csv(s, std::fs::File::create(&path)?)?;
        written.push(path);
    }
    Ok(written)
}
