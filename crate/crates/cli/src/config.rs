//! Experiment configuration: a TOML file, `--set key=value` overrides on
//! top, built-in defaults underneath.

use std::path::Path;

use brwlab::engine::{PruneMode, PrunePolicy, DEFAULT_CAPACITY, DEFAULT_HARD_BOUND};
use brwlab::stats::{Model, RunSettings};
use brwlab::{IncrementLaw, OffspringLaw};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{0}")]
    Parse(String),
    #[error("missing required key `{0}`")]
    MissingKey(&'static str),
    #[error("bad override `{0}`: expected key=value")]
    Override(String),
    #[error("invalid value for `{key}`: {reason}")]
    Invalid { key: String, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IncrementFamily {
    Gaussian,
    UniformBall,
    UniformCube,
    AnisotropicGaussian,
    Mixture,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IncrementConfig {
    pub kind: IncrementFamily,
    pub sigma: f64,
    pub radius: f64,
    pub half_width: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scales: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub means: Option<Vec<Vec<f64>>>,
}

impl Default for IncrementConfig {
    fn default() -> Self {
        Self {
            kind: IncrementFamily::Gaussian,
            sigma: 1.0,
            radius: 1.0,
            half_width: 1.0,
            scales: None,
            weights: None,
            means: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OffspringConfig {
    /// `pmf[k] = P(k children)`.
    pub pmf: Vec<f64>,
}

impl Default for OffspringConfig {
    fn default() -> Self {
        Self { pmf: vec![0.0, 0.0, 1.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PruneConfig {
    pub mode: PruneMode,
    pub capacity: usize,
    /// Defaults to `15 / c2`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window_w0: Option<f64>,
    pub hard_bound: usize,
}

impl Default for PruneConfig {
    fn default() -> Self {
        Self {
            mode: PruneMode::Both,
            capacity: DEFAULT_CAPACITY,
            window_w0: None,
            hard_bound: DEFAULT_HARD_BOUND,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub replications: usize,
    pub horizon: u32,
    pub max_restarts: usize,
    pub prune: PruneConfig,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            seed: None,
            replications: 200,
            horizon: 400,
            max_restarts: 1000,
            prune: PruneConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TargetConfig {
    pub dimension: usize,
    pub x_grid: Vec<f64>,
    pub radius: f64,
}

impl Default for TargetConfig {
    fn default() -> Self {
        Self {
            dimension: 1,
            x_grid: vec![20.0, 30.0, 45.0, 65.0, 95.0],
            radius: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MaximaConfig {
    pub n_grid: Vec<u32>,
    pub band_limit: f64,
    pub check_doubling: bool,
    pub tail_n: u32,
    pub z_grid: Vec<f64>,
    /// Replications of the tail run; `sim.replications` when unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tail_replications: Option<usize>,
    /// Capacity of the tail run; `sim.prune.capacity` when unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tail_capacity: Option<usize>,
}

impl Default for MaximaConfig {
    fn default() -> Self {
        Self {
            n_grid: (30..=80).step_by(5).collect(),
            band_limit: 2.0,
            check_doubling: true,
            tail_n: 60,
            z_grid: vec![1.0, 2.0, 3.0, 4.0, 5.0],
            tail_replications: None,
            tail_capacity: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FptConfig {
    /// Fit the exceedance tail of `τ` at this grid point.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub concentration_x: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProductionConfig {
    /// Largest `target.x_grid` entry when unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClustersConfig {
    /// `target.x_grid` when unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x_grid: Option<Vec<f64>>,
    pub lag_k: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BarrierConfig {
    pub n: u32,
    pub betas: Vec<f64>,
}

impl Default for BarrierConfig {
    fn default() -> Self {
        Self {
            n: 40,
            betas: vec![4.0, 6.0, 8.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CountsConfig {
    pub n: u32,
    pub x_grid: Vec<f64>,
}

impl Default for CountsConfig {
    fn default() -> Self {
        Self {
            n: 60,
            x_grid: vec![2.0, 3.0, 4.0, 5.0, 6.0, 7.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CltConfig {
    pub x_grid: Vec<f64>,
    pub batch: usize,
    pub batches_per_round: usize,
    pub min_hits: usize,
    pub max_walks: usize,
}

impl Default for CltConfig {
    fn default() -> Self {
        Self {
            x_grid: (4..=8).map(|k| (k as f64).exp()).collect(),
            batch: 2_000,
            batches_per_round: 8,
            min_hits: 4_000,
            max_walks: 20_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TwodescConfig {
    pub n: u32,
    pub g_grid: Vec<f64>,
}

impl Default for TwodescConfig {
    fn default() -> Self {
        Self {
            n: 16,
            g_grid: (1..=6).map(|g| -(g as f64)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EscapeConfig {
    pub n_grid: Vec<u32>,
}

impl Default for EscapeConfig {
    fn default() -> Self {
        Self { n_grid: vec![4, 8, 12] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BallotConfig {
    pub n_grid: Vec<u32>,
    pub y: f64,
    pub a: f64,
    pub boxed: bool,
    pub walks: usize,
    pub chunk: usize,
}

impl Default for BallotConfig {
    fn default() -> Self {
        Self {
            n_grid: vec![32, 64, 128, 256],
            y: 1.0,
            a: 0.0,
            boxed: false,
            walks: 1_000_000,
            chunk: 10_000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: String,
    pub formats: Vec<Format>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: "out".into(),
            formats: vec![Format::Csv, Format::Json],
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub increment: IncrementConfig,
    pub offspring: OffspringConfig,
    pub sim: SimConfig,
    pub target: TargetConfig,
    pub maxima: MaximaConfig,
    pub fpt: FptConfig,
    pub production: ProductionConfig,
    pub clusters: ClustersConfig,
    pub barrier: BarrierConfig,
    pub counts: CountsConfig,
    pub clt: CltConfig,
    pub twodesc: TwodescConfig,
    pub escape: EscapeConfig,
    pub ballot: BallotConfig,
    pub output: OutputConfig,
}

/// Parses `raw` as a TOML value, falling back to a bare string.
fn parse_value(raw: &str) -> toml::Value {
    match format!("v = {raw}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<(), ConfigError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| ConfigError::Override(assignment.to_string()))?;
    let path: Vec<&str> = key.trim().split('.').collect();
    if path.iter().any(|p| p.is_empty()) {
        return Err(ConfigError::Override(assignment.to_string()));
    }
    let mut node = table;
    for part in &path[..path.len() - 1] {
        let entry = node
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        node = entry.as_table_mut().ok_or_else(|| ConfigError::Invalid {
            key: key.trim().to_string(),
            reason: format!("`{part}` is not a table"),
        })?;
    }
    node.insert(path[path.len() - 1].to_string(), parse_value(raw.trim()));
    Ok(())
}

impl Config {
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self, ConfigError> {
        // the file alone first, so errors in it carry line numbers
        let from_file: Config = toml::from_str(text).map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        let config = if overrides.is_empty() {
            from_file
        } else {
            let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
            for o in overrides {
                apply_override(&mut table, o)?;
            }
            Config::deserialize(table).map_err(|e| ConfigError::Parse(e.to_string()))?
        };
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml_str(&text, overrides)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn seed(&self) -> u64 {
        self.sim.seed.expect("validated")
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if self.sim.seed.is_none() {
            return Err(ConfigError::MissingKey("sim.seed"));
        }
        let invalid = |key: &str, reason: &str| ConfigError::Invalid {
            key: key.into(),
            reason: reason.into(),
        };
        if self.target.dimension == 0 {
            return Err(invalid("target.dimension", "must be positive"));
        }
        if !(self.target.radius > 0.0) {
            return Err(invalid("target.radius", "must be positive"));
        }
        if self.sim.replications == 0 {
            return Err(invalid("sim.replications", "must be positive"));
        }
        if self.sim.prune.capacity == 0 {
            return Err(invalid("sim.prune.capacity", "must be positive"));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&canonical))
    }

    pub fn increment_law(&self) -> Result<IncrementLaw, ConfigError> {
        let d = self.target.dimension;
        let c = &self.increment;
        let law = match c.kind {
            IncrementFamily::Gaussian => IncrementLaw::isotropic_gaussian(d, c.sigma),
            IncrementFamily::UniformBall => IncrementLaw::uniform_ball(d, c.radius),
            IncrementFamily::UniformCube => IncrementLaw::uniform_cube(d, c.half_width),
            IncrementFamily::AnisotropicGaussian => {
                let scales = c.scales.clone().ok_or(ConfigError::MissingKey("increment.scales"))?;
                if scales.len() != d {
                    return Err(ConfigError::Invalid {
                        key: "increment.scales".into(),
                        reason: format!("needs {d} entries to match target.dimension"),
                    });
                }
                IncrementLaw::anisotropic_gaussian(scales)
            }
            IncrementFamily::Mixture => {
                let weights = c.weights.clone().ok_or(ConfigError::MissingKey("increment.weights"))?;
                let means = c.means.clone().ok_or(ConfigError::MissingKey("increment.means"))?;
                if means.iter().any(|m| m.len() != d) {
                    return Err(ConfigError::Invalid {
                        key: "increment.means".into(),
                        reason: format!("every mean needs {d} entries to match target.dimension"),
                    });
                }
                IncrementLaw::gaussian_mixture(c.sigma, weights, means)
            }
        };
        law.map_err(|e| ConfigError::Invalid {
            key: "increment".into(),
            reason: e.to_string(),
        })
    }

    pub fn offspring_law(&self) -> Result<OffspringLaw, ConfigError> {
        let pairs: Vec<(usize, f64)> = self.offspring.pmf.iter().copied().enumerate().collect();
        OffspringLaw::from_pairs(&pairs).map_err(|e| ConfigError::Invalid {
            key: "offspring.pmf".into(),
            reason: e.to_string(),
        })
    }

    pub fn model(&self) -> Result<Model, ConfigError> {
        Model::new(self.increment_law()?, self.offspring_law()?).map_err(|e| ConfigError::Invalid {
            key: "increment/offspring".into(),
            reason: e.to_string(),
        })
    }

    pub fn policy(&self, model: &Model) -> PrunePolicy {
        let p = &self.sim.prune;
        if p.mode == PruneMode::Off {
            let mut off = PrunePolicy::off();
            off.hard_bound = p.hard_bound;
            return off;
        }
        let mut policy = model.frontier_policy(p.capacity);
        policy.mode = p.mode;
        policy.hard_bound = p.hard_bound;
        if let Some(w0) = p.window_w0 {
            policy.window_w0 = w0;
        }
        policy
    }

    pub fn run_settings(&self, model: &Model) -> RunSettings {
        RunSettings {
            seed: self.seed(),
            replications: self.sim.replications,
            horizon: self.sim.horizon,
            policy: self.policy(model),
            max_restarts: self.sim.max_restarts,
            target_radius: self.target.radius,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_is_mandatory() {
        let err = Config::from_toml_str("[sim]\nreplications = 3\n", &[]).unwrap_err();
        assert!(matches!(err, ConfigError::MissingKey("sim.seed")));
        assert!(err.to_string().contains("sim.seed"));
    }

    #[test]
    fn unknown_keys_are_rejected_with_location() {
        let err = Config::from_toml_str("[sim]\nseed = 1\nsede = 2\n", &[]).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("sede"), "{msg}");
        assert!(msg.contains("line 3"), "{msg}");
    }

    #[test]
    fn overrides_beat_the_file() {
        let c = Config::from_toml_str(
            "[sim]\nseed = 1\nreplications = 5\n",
            &["sim.replications=7".into(), "target.x_grid=[1.5, 2.5]".into(), "output.dir=elsewhere".into()],
        )
        .unwrap();
        assert_eq!(c.sim.replications, 7);
        assert_eq!(c.target.x_grid, vec![1.5, 2.5]);
        assert_eq!(c.output.dir, "elsewhere");
        // defaults fill the rest
        assert_eq!(c.sim.horizon, 400);
        let seeded = Config::from_toml_str("", &["sim.seed=9".into()]).unwrap();
        assert_eq!(seeded.seed(), 9);
        assert!(Config::from_toml_str("[sim]\nseed = 1\n", &["novalue".into()]).is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = Config::from_toml_str("[sim]\nseed = 1\n", &[]).unwrap();
        let b = Config::from_toml_str("[sim]\nseed = 2\n", &[]).unwrap();
        assert_eq!(a.hash(), a.clone().hash());
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn anisotropic_scales_must_match_dimension() {
        let c = Config::from_toml_str(
            "[sim]\nseed = 1\n[target]\ndimension = 2\n[increment]\nkind = \"anisotropic_gaussian\"\nscales = [1.0]\n",
            &[],
        )
        .unwrap();
        assert!(c.increment_law().is_err());
    }

    #[test]
    fn round_trip_is_identity() {
        let text = "[sim]\nseed = 11\nreplications = 9\n[sim.prune]\nmode = \"window\"\nwindow_w0 = 4.5\n\
                    [increment]\nkind = \"mixture\"\nweights = [0.5, 0.5]\nmeans = [[1.0], [-1.0]]\n\
                    [maxima]\ntail_replications = 30\n[fpt]\nconcentration_x = 45.0\n\
                    [output]\nformats = [\"svg\"]\n";
        let a = Config::from_toml_str(text, &[]).unwrap();
        let b = Config::from_toml_str(&a.to_toml_string(), &[]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.hash(), b.hash());
        let d = Config::from_toml_str("[sim]\nseed = 3\n", &[]).unwrap();
        assert_eq!(Config::from_toml_str(&d.to_toml_string(), &[]).unwrap(), d);
    }
}
