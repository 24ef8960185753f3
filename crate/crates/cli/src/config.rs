use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use leadtime::model::Family;
use leadtime::planning::{Granularity, LaneMap};
use leadtime::synth::GeneratorConfig;
use leadtime::tuning::HyperGrid;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Everything a pipeline run needs. Loaded from TOML or JSON, then
/// overridden by command-line flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Order CSV; synthetic orders are generated when absent.
    pub input: Option<PathBuf>,
    pub out: PathBuf,
    /// Required; there is no clock-based fallback.
    pub seed: Option<u64>,
    pub ratio: f64,
    pub folds: usize,
    pub families: Vec<Family>,
    /// TOML or JSON grid file; built-in grids when absent.
    pub grid: Option<PathBuf>,
    /// Random-search draws per family.
    pub candidates: usize,
    /// Thread count. Changes wall time only.
    #[serde(skip_serializing)]
    pub workers: usize,
    pub generator: GeneratorConfig,
    /// Unparseable input rows tolerated before the run fails. Rows that
    /// parse but fail validation are dropped and only reported.
    pub max_bad_rows: usize,
    pub bins: usize,
    pub plan: PlanConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlanConfig {
    /// Planning date; defaults to the latest order creation date.
    pub as_of: Option<NaiveDate>,
    pub horizon: usize,
    pub granularity: Granularity,
    /// Lane map file (TOML or JSON); every origin ships to `US` otherwise.
    pub lanes: Option<PathBuf>,
}

impl Default for PlanConfig {
    fn default() -> Self {
        PlanConfig {
            as_of: None,
            horizon: 12,
            granularity: Granularity::Month,
            lanes: None,
        }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            input: None,
            out: PathBuf::from("leadtime-out"),
            seed: None,
            ratio: 0.8,
            folds: 5,
            families: Family::ALL.to_vec(),
            grid: None,
            candidates: 4,
            workers: 1,
            generator: GeneratorConfig::default(),
            max_bad_rows: 0,
            bins: leadtime::evaluation::DEFAULT_BINS,
            plan: PlanConfig::default(),
        }
    }
}

fn parse_by_extension<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if is_json {
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    } else {
        toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<RunConfig, CliError> {
        parse_by_extension(path)
    }

    pub fn seed(&self) -> Result<u64, CliError> {
        self.seed
            .ok_or_else(|| CliError::Usage("a seed is required (--seed or `seed` in the config file)".into()))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.seed()?;
        if !(self.ratio > 0.0 && self.ratio < 1.0) {
            return Err(CliError::Usage(format!(
                "--ratio must be in (0, 1), got {}",
                self.ratio
            )));
        }
        if self.folds < 2 {
            return Err(CliError::Usage(format!(
                "--folds must be at least 2, got {}",
                self.folds
            )));
        }
        if self.families.is_empty() {
            return Err(CliError::Usage("no model families selected".into()));
        }
        if self.candidates == 0 {
            return Err(CliError::Usage("--candidates must be at least 1".into()));
        }
        if self.workers == 0 {
            return Err(CliError::Usage("--workers must be at least 1".into()));
        }
        if self.bins == 0 {
            return Err(CliError::Usage("bins must be at least 1".into()));
        }
        if let Some(p) = &self.input {
            if !p.is_file() {
                return Err(CliError::Usage(format!("input file {} does not exist", p.display())));
            }
        }
        for p in [&self.grid, &self.plan.lanes].into_iter().flatten() {
            if !p.is_file() {
                return Err(CliError::Usage(format!("{} does not exist", p.display())));
            }
        }
        Ok(())
    }

    pub fn load_grid(&self) -> Result<HyperGrid, CliError> {
        match &self.grid {
            Some(p) => parse_by_extension(p),
            None => Ok(HyperGrid::default()),
        }
    }

    pub fn load_lanes(&self) -> Result<LaneMap, CliError> {
        match &self.plan.lanes {
            Some(p) => parse_by_extension(p),
            None => Ok(LaneMap::default()),
        }
    }
}

/// Parses `rf,gbm,ols`.
pub fn parse_families(s: &str) -> Result<Vec<Family>, String> {
    let mut out: Vec<Family> = Vec::new();
    for part in s.split(',').filter(|p| !p.trim().is_empty()) {
        let f: Family = part.parse()?;
        if !out.contains(&f) {
            out.push(f);
        }
    }
    if out.is_empty() {
        return Err("no families given".into());
    }
    Ok(out)
}
