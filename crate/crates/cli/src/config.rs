use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use ssl_rate_lab::eval::budget::UnlabeledBudget;
use ssl_rate_lab::eval::exact::DEFAULT_NODE_CAP;
use ssl_rate_lab::learners::LearnerSpec;
use ssl_rate_lab::problem::{FamilyKind, GridSpec};

use crate::error::CliError;

/// Experiment settings, read from JSON and overridden by flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub ell_grid: Vec<u64>,
    pub budget: String,
    pub family: String,
    pub learners: Vec<String>,
    pub output_dir: PathBuf,
    pub node_cap: u64,
    /// Points per parameter axis of the family grid.
    pub grid_points: usize,
    /// `minimax`: also try every learner with some labeled draws discarded.
    pub with_discards: bool,
    /// `sweep`: Monte Carlo repetitions at each worst member; 0 disables.
    pub mc_reps: u64,
    pub jobs: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            ell_grid: vec![4, 8, 16, 32, 64],
            budget: "square".into(),
            family: "pi1".into(),
            learners: vec!["majority".into()],
            output_dir: PathBuf::from("out"),
            node_cap: DEFAULT_NODE_CAP,
            grid_points: GridSpec::default().points,
            with_discards: false,
            mc_reps: 0,
            jobs: None,
        }
    }
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub ell: Option<Vec<u64>>,
    pub budget: Option<String>,
    pub family: Option<String>,
    pub learners: Option<Vec<String>>,
    pub out: Option<PathBuf>,
    pub jobs: Option<usize>,
}

impl RunConfig {
    /// Reads a config file; a manifest written by an earlier run is accepted
    /// too and yields the config it recorded.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
        let value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| CliError::Validation(format!("{} is not valid JSON: {e}", path.display())))?;
        let value = match value.get("config") {
            Some(inner) if value.get("manifest_hash").is_some() => inner.clone(),
            _ => value,
        };
        serde_json::from_value(value).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
    }

    pub fn resolve(config: Option<&Path>, flags: Overrides) -> Result<Self, CliError> {
        let mut cfg = match config {
            Some(p) => Self::load(p)?,
            None => Self::default(),
        };
        if let Some(v) = flags.seed {
            cfg.seed = v;
        }
        if let Some(v) = flags.ell {
            cfg.ell_grid = v;
        }
        if let Some(v) = flags.budget {
            cfg.budget = v;
        }
        if let Some(v) = flags.family {
            cfg.family = v;
        }
        if let Some(v) = flags.learners {
            cfg.learners = v;
        }
        if let Some(v) = flags.out {
            cfg.output_dir = v;
        }
        if flags.jobs.is_some() {
            cfg.jobs = flags.jobs;
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<Validated, CliError> {
        if self.ell_grid.is_empty() {
            return Err(CliError::Validation("ell grid is empty".into()));
        }
        if self.ell_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CliError::Validation(format!("ell grid {:?} is not strictly increasing", self.ell_grid)));
        }
        if self.ell_grid[0] == 0 {
            return Err(CliError::Validation("ell values must be positive".into()));
        }
        if self.learners.is_empty() {
            return Err(CliError::Validation("learner list is empty".into()));
        }
        let learners = self
            .learners
            .iter()
            .map(|s| s.parse::<LearnerSpec>().map_err(|e| CliError::Validation(e.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        let budget = self.budget.parse::<UnlabeledBudget>().map_err(|e| CliError::Validation(e.to_string()))?;
        let family = self.family.parse::<FamilySpec>()?;
        if self.grid_points == 0 {
            return Err(CliError::Validation("grid_points must be positive".into()));
        }
        if self.jobs == Some(0) {
            return Err(CliError::Validation("jobs must be positive".into()));
        }
        Ok(Validated { learners, budget, family, grid: GridSpec::with_points(self.grid_points) })
    }

    /// The fields that determine the numbers written, as canonical JSON.
    /// Output location and worker count are left out.
    pub fn hashed_view(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("config serializes");
        if let Some(map) = v.as_object_mut() {
            map.remove("output_dir");
            map.remove("jobs");
        }
        v
    }
}

#[derive(Debug, Clone)]
pub struct Validated {
    pub learners: Vec<LearnerSpec>,
    pub budget: UnlabeledBudget,
    pub family: FamilySpec,
    pub grid: GridSpec,
}

/// A family name as given on the command line; `piell` without an index
/// follows the labeled sample size.
#[derive(Debug, Clone, PartialEq)]
pub enum FamilySpec {
    Pi0,
    Pi1,
    PiEll(Option<u64>),
    PiC(f64),
    Rich { c: f64, c_prime: f64 },
}

pub const DEFAULT_RICH: (f64, f64) = (0.5, 0.375);

impl FamilySpec {
    pub fn at(&self, ell: u64) -> FamilyKind {
        match *self {
            FamilySpec::Pi0 => FamilyKind::Pi0,
            FamilySpec::Pi1 => FamilyKind::Pi1,
            FamilySpec::PiEll(fixed) => FamilyKind::PiEll(fixed.unwrap_or(ell)),
            FamilySpec::PiC(c) => FamilyKind::PiC(c),
            FamilySpec::Rich { c, c_prime } => FamilyKind::Rich { c, c_prime },
        }
    }

    pub fn require_two_point(&self) -> Result<(), CliError> {
        if let FamilySpec::Rich { .. } = self {
            return Err(CliError::Validation(
                "the rich family lives on three points; only the `bounds` subcommand supports it".into(),
            ));
        }
        Ok(())
    }
}

impl FromStr for FamilySpec {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let bad = |why: &str| CliError::Validation(format!("family '{s}': {why}"));
        let num = |v: &str| v.parse::<f64>().map_err(|_| bad("expected a number"));
        let parts: Vec<&str> = s.trim().split(':').collect();
        match parts.as_slice() {
            ["pi0"] => Ok(FamilySpec::Pi0),
            ["pi1"] => Ok(FamilySpec::Pi1),
            ["piell"] => Ok(FamilySpec::PiEll(None)),
            ["piell", n] => Ok(FamilySpec::PiEll(Some(n.parse().map_err(|_| bad("expected an integer"))?))),
            ["pic", c] => {
                let c = num(c)?;
                if !(c > 0.0 && c < 0.5) {
                    return Err(bad("c must lie in (0, 1/2)"));
                }
                Ok(FamilySpec::PiC(c))
            }
            ["rich"] => Ok(FamilySpec::Rich { c: DEFAULT_RICH.0, c_prime: DEFAULT_RICH.1 }),
            ["rich", c, cp] => Ok(FamilySpec::Rich { c: num(c)?, c_prime: num(cp)? }),
            _ => Err(bad("expected pi0, pi1, piell[:n], pic:c or rich[:c:c']")),
        }
    }
}

impl fmt::Display for FamilySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FamilySpec::Pi0 => write!(f, "pi0"),
            FamilySpec::Pi1 => write!(f, "pi1"),
            FamilySpec::PiEll(None) => write!(f, "piell"),
            FamilySpec::PiEll(Some(n)) => write!(f, "piell:{n}"),
            FamilySpec::PiC(c) => write!(f, "pic:{c}"),
            FamilySpec::Rich { c, c_prime } => write!(f, "rich:{c}:{c_prime}"),
        }
    }
}

/// `4,8,16` or an inclusive range `4..=64`.
pub fn parse_ell_list(s: &str) -> Result<Vec<u64>, String> {
    if let Some((a, b)) = s.split_once("..=") {
        let (a, b): (u64, u64) = (a.trim().parse().map_err(|_| "bad range start")?, b.trim().parse().map_err(|_| "bad range end")?);
        return Ok((a..=b).collect());
    }
    s.split(',').map(|t| t.trim().parse::<u64>().map_err(|_| format!("'{t}' is not an integer"))).collect()
}
