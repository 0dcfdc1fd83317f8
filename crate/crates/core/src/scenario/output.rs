//! CSV and report files. Floats are written with `{}`, Rust's shortest
//! round-trip decimal form, so output is byte-stable for identical values.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::spectral::NoiseSpectrum;

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(io_err(path))
}

/// Header plus one row per entry of `rows`.
pub fn write_csv<R, I>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: AsRef<[f64]>,
{
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let row = row.as_ref();
        for (i, v) in row.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            write!(out, "{v}").expect("string write");
        }
        out.push('\n');
    }
    write_file(path, &out)
}

/// Columns `freq_hz, psd_snl, db_rel_snl, below_floor`.
pub fn emit_spectrum_csv(spectrum: &NoiseSpectrum, path: &Path) -> Result<()> {
    let db = spectrum.db_rel_snl();
    let flags = spectrum.below_floor();
    let rows = (0..spectrum.len()).map(|i| {
        [
            spectrum.freq_hz[i],
            spectrum.psd[i],
            db[i],
            if flags[i] { 1.0 } else { 0.0 },
        ]
    });
    write_csv(path, &["freq_hz", "psd_snl", "db_rel_snl", "below_floor"], rows)
}

/// Columns `time_s, power_snl, db_rel_snl, theta_rad`.
pub fn emit_zero_span_csv(time_s: &[f64], power_snl: &[f64], theta_rad: &[f64], path: &Path) -> Result<()> {
    let rows = (0..time_s.len()).map(|i| [time_s[i], power_snl[i], 10.0 * power_snl[i].log10(), theta_rad[i]]);
    write_csv(path, &["time_s", "power_snl", "db_rel_snl", "theta_rad"], rows)
}

/// A reported number and the artifact it was read from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Headline {
    pub name: String,
    pub value: f64,
    pub unit: String,
    /// Emitted file the value derives from, or `model` for closed-form
    /// predictions.
    pub source: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub scenario: super::Scenario,
    pub headlines: Vec<Headline>,
    pub artifacts: Vec<PathBuf>,
    pub wall_time_s: f64,
}

impl RunReport {
    pub fn headline(&self, name: &str) -> Option<f64> {
        self.headlines.iter().find(|h| h.name == name).map(|h| h.value)
    }
}

/// Collects artifacts and headline numbers while a scenario runs.
pub(crate) struct Outputs {
    dir: PathBuf,
    pub artifacts: Vec<PathBuf>,
    pub headlines: Vec<Headline>,
}

impl Outputs {
    pub fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            artifacts: Vec::new(),
            headlines: Vec::new(),
        })
    }

    /// Path for a new artifact, registered in the report.
    pub fn path(&mut self, file: &str) -> PathBuf {
        let p = self.dir.join(file);
        self.artifacts.push(p.clone());
        p
    }

    pub fn spectrum(&mut self, file: &str, s: &NoiseSpectrum) -> Result<()> {
        let p = self.path(file);
        emit_spectrum_csv(s, &p)
    }

    pub fn headline(&mut self, name: &str, value: f64, unit: &str, source: &str) {
        self.headlines.push(Headline {
            name: name.into(),
            value,
            unit: unit.into(),
            source: source.into(),
        });
    }

    /// `headline.csv` (deterministic) and `report.toml` (adds wall time).
    pub fn finish(mut self, scenario: &super::Scenario, wall_time_s: f64) -> Result<RunReport> {
        let path = self.path("headline.csv");
        let mut text = String::from("name,value,unit,source\n");
        for h in &self.headlines {
            writeln!(text, "{},{},{},{}", h.name, h.value, h.unit, h.source).expect("string write");
        }
        write_file(&path, &text)?;

        #[derive(Serialize)]
        struct ReportFile<'a> {
            scenario: String,
            seed: u64,
            wall_time_s: f64,
            artifacts: Vec<String>,
            headline: &'a [Headline],
        }
        let report_path = self.dir.join("report.toml");
        self.artifacts.push(report_path.clone());
        let file = ReportFile {
            scenario: scenario.scenario.name.to_string(),
            seed: scenario.scenario.seed,
            wall_time_s,
            artifacts: self
                .artifacts
                .iter()
                .map(|p| {
                    p.file_name()
                        .map_or_else(String::new, |n| n.to_string_lossy().into_owned())
                })
                .collect(),
            headline: &self.headlines,
        };
        let body = toml::to_string(&file).map_err(|e| Error::Domain(format!("report serialization: {e}")))?;
        write_file(&report_path, &body)?;
        Ok(RunReport {
            scenario: scenario.clone(),
            headlines: self.headlines,
            artifacts: self.artifacts,
            wall_time_s,
        })
    }
}
