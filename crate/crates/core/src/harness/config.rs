//! Scenario configuration, read from sectioned TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::contact_data::MaskMode;
use crate::epidemic::SirParams;
use crate::error::{Error, Result};
use crate::multilayer::{CiPreset, MultilayerConfig, ObservationMasking};
use crate::strategies::StrategyKind;

/// Environment variable that overrides `school.dataset`.
pub const DATASET_ENV: &str = "NETVAX_DATASET";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    School,
    Multilayer,
}

/// Whether strategy arms share stochastic inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RandomnessMode {
    /// Initial infections, infection draws and random-strategy draws are
    /// identical across arms.
    #[default]
    Common,
    /// Every arm gets its own streams.
    Independent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InfectionModel {
    /// Fixed probability per nonzero edge.
    #[default]
    Constant,
    /// Fixed probability per raw contact, compounded over the edge weight.
    PerContact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchoolArm {
    Free,
    Random,
    BackgroundHd,
    BackgroundBc,
    AssimilatedHd,
    AssimilatedBc,
}

impl SchoolArm {
    pub const ALL: [SchoolArm; 6] = [
        SchoolArm::Free,
        SchoolArm::Random,
        SchoolArm::BackgroundHd,
        SchoolArm::BackgroundBc,
        SchoolArm::AssimilatedHd,
        SchoolArm::AssimilatedBc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchoolArm::Free => "free",
            SchoolArm::Random => "random",
            SchoolArm::BackgroundHd => "background-hd",
            SchoolArm::BackgroundBc => "background-bc",
            SchoolArm::AssimilatedHd => "assimilated-hd",
            SchoolArm::AssimilatedBc => "assimilated-bc",
        }
    }

    pub fn strategy(self) -> Option<StrategyKind> {
        match self {
            SchoolArm::Free => None,
            SchoolArm::Random => Some(StrategyKind::Random),
            SchoolArm::BackgroundHd | SchoolArm::AssimilatedHd => Some(StrategyKind::HighestDegree),
            SchoolArm::BackgroundBc | SchoolArm::AssimilatedBc => Some(StrategyKind::HighestCentrality),
        }
    }
}

/// Where the multilayer arms take layer probabilities from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Knowledge {
    /// Homogeneous mean of the initial condition.
    Prior,
    Assimilated,
    True,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LayerArm {
    PriorHd,
    DaHd,
    TrueHd,
    PriorBc,
    DaBc,
    TrueBc,
}

impl LayerArm {
    pub const ALL: [LayerArm; 6] = [
        LayerArm::PriorHd,
        LayerArm::DaHd,
        LayerArm::TrueHd,
        LayerArm::PriorBc,
        LayerArm::DaBc,
        LayerArm::TrueBc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LayerArm::PriorHd => "prior-hd",
            LayerArm::DaHd => "da-hd",
            LayerArm::TrueHd => "true-hd",
            LayerArm::PriorBc => "prior-bc",
            LayerArm::DaBc => "da-bc",
            LayerArm::TrueBc => "true-bc",
        }
    }

    pub fn knowledge(self) -> Knowledge {
        match self {
            LayerArm::PriorHd | LayerArm::PriorBc => Knowledge::Prior,
            LayerArm::DaHd | LayerArm::DaBc => Knowledge::Assimilated,
            LayerArm::TrueHd | LayerArm::TrueBc => Knowledge::True,
        }
    }

    pub fn strategy(self) -> StrategyKind {
        match self {
            LayerArm::PriorHd | LayerArm::DaHd | LayerArm::TrueHd => StrategyKind::HighestDegree,
            _ => StrategyKind::HighestCentrality,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Topology {
    /// A new multilayer graph at every step.
    #[default]
    Fresh,
    /// One graph per run, reused at every step.
    Frozen,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchoolConfig {
    /// Whitespace-separated contact log; the synthetic generator is used when absent.
    pub dataset: Option<PathBuf>,
    pub window: usize,
    pub communities: usize,
    pub infection_prob: f64,
    pub infection_model: InfectionModel,
    pub doses: usize,
    pub missing_fractions: Vec<f64>,
    pub mask_mode: MaskMode,
    pub b_scale: f64,
    pub o_scale: f64,
    pub arms: Vec<SchoolArm>,
    /// Caps the horizon; every condensed snapshot is used when absent.
    pub steps: Option<usize>,
}

impl Default for SchoolConfig {
    fn default() -> Self {
        SchoolConfig {
            dataset: None,
            window: 100,
            communities: 3,
            infection_prob: 0.02,
            infection_model: InfectionModel::Constant,
            doses: 6,
            missing_fractions: vec![0.5, 0.6, 0.7],
            mask_mode: MaskMode::Static,
            b_scale: 1.0,
            o_scale: 1.0,
            arms: SchoolArm::ALL.to_vec(),
            steps: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MultilayerScenarioConfig {
    /// Initial conditions to sweep; each replaces `network.initial_probs`.
    pub conditions: Vec<CiPreset>,
    pub steps: usize,
    pub doses: usize,
    pub arms: Vec<LayerArm>,
    pub topology: Topology,
    pub masking: ObservationMasking,
    pub b_scale: f64,
    pub o_scale: f64,
    pub network: MultilayerConfig,
}

impl Default for MultilayerScenarioConfig {
    fn default() -> Self {
        MultilayerScenarioConfig {
            conditions: CiPreset::ALL.to_vec(),
            steps: 75,
            doses: 20,
            arms: LayerArm::ALL.to_vec(),
            topology: Topology::Fresh,
            masking: ObservationMasking::Susceptible,
            b_scale: 1.0,
            o_scale: 1.0,
            network: MultilayerConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: ScenarioKind,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default = "default_seed")]
    pub root_seed: u64,
    #[serde(default)]
    pub randomness: RandomnessMode,
    #[serde(default)]
    pub sir: SirParams,
    #[serde(default)]
    pub school: SchoolConfig,
    #[serde(default)]
    pub multilayer: MultilayerScenarioConfig,
}

fn default_runs() -> usize {
    10
}

fn default_seed() -> u64 {
    2021
}

impl ScenarioConfig {
    pub fn new(scenario: ScenarioKind) -> Self {
        ScenarioConfig {
            scenario,
            runs: default_runs(),
            root_seed: default_seed(),
            randomness: RandomnessMode::Common,
            sir: SirParams::default(),
            school: SchoolConfig::default(),
            multilayer: MultilayerScenarioConfig::default(),
        }
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads, applies the dataset environment override, and validates.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml_str(&text)?;
        if let Some(dir) = path.parent() {
            if let Some(d) = cfg.school.dataset.as_mut() {
                if d.is_relative() {
                    *d = dir.join(&*d);
                }
            }
        }
        cfg.apply_env();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply_env(&mut self) {
        if let Some(path) = std::env::var_os(DATASET_ENV).filter(|p| !p.is_empty()) {
            self.school.dataset = Some(PathBuf::from(path));
        }
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.runs == 0 {
            return Err(Error::Config("runs must be at least 1".into()));
        }
        self.sir.validate()?;
        let check_scales = |b: f64, o: f64| {
            if b > 0.0 && o > 0.0 && b.is_finite() && o.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("covariance scales must be positive, got B={b}, O={o}")))
            }
        };
        match self.scenario {
            ScenarioKind::School => {
                let s = &self.school;
                if let Some(d) = &s.dataset {
                    if !d.is_file() {
                        return Err(Error::Config(format!("dataset {} does not exist", d.display())));
                    }
                }
                if s.window == 0 {
                    return Err(Error::Config("school.window must be positive".into()));
                }
                if s.communities == 0 {
                    return Err(Error::Config("school.communities must be positive".into()));
                }
                if !(0.0..=1.0).contains(&s.infection_prob) {
                    return Err(Error::Config(format!("infection probability {} outside [0, 1]", s.infection_prob)));
                }
                if s.missing_fractions.is_empty() || s.missing_fractions.iter().any(|f| !(0.0..=1.0).contains(f)) {
                    return Err(Error::Config("missing fractions must be a non-empty list in [0, 1]".into()));
                }
                if s.arms.is_empty() {
                    return Err(Error::Config("school.arms is empty".into()));
                }
                if s.steps == Some(0) {
                    return Err(Error::Config("school.steps must be positive".into()));
                }
                check_scales(s.b_scale, s.o_scale)
            }
            ScenarioKind::Multilayer => {
                let m = &self.multilayer;
                m.network.validate()?;
                if m.conditions.is_empty() || m.arms.is_empty() {
                    return Err(Error::Config("multilayer conditions and arms must be non-empty".into()));
                }
                if m.steps == 0 {
                    return Err(Error::Config("multilayer.steps must be positive".into()));
                }
                check_scales(m.b_scale, m.o_scale)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_uses_defaults() {
        let cfg = ScenarioConfig::from_toml_str("scenario = \"school\"").unwrap();
        assert_eq!(cfg.runs, 10);
        assert_eq!(cfg.school.doses, 6);
        assert_eq!(cfg.school.arms.len(), 6);
        assert_eq!(cfg.sir, SirParams::default());
        cfg.validate().unwrap();
    }

    #[test]
    fn sections_override_fields() {
        let cfg = ScenarioConfig::from_toml_str(
            r#"
            scenario = "multilayer"
            runs = 3
            root_seed = 9

            [sir]
            initial_infection_prob = 0.05

            [multilayer]
            conditions = ["ci_a", "ci_f"]
            arms = ["prior-hd", "da-hd"]
            topology = "frozen"

            [multilayer.network]
            ba_m = 3
            "#,
        )
        .unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.sir.initial_infection_prob, 0.05);
        assert_eq!(cfg.sir.recovery_low, 55);
        assert_eq!(cfg.multilayer.conditions, vec![CiPreset::CiA, CiPreset::CiF]);
        assert_eq!(cfg.multilayer.topology, Topology::Frozen);
        assert_eq!(cfg.multilayer.network.ba_m, 3);
        assert_eq!(cfg.multilayer.network.layer_size, 200);
    }

    #[test]
    fn resolved_copy_round_trips() {
        let cfg = ScenarioConfig::new(ScenarioKind::Multilayer);
        let text = cfg.to_toml().unwrap();
        assert_eq!(ScenarioConfig::from_toml_str(&text).unwrap(), cfg);
        let cfg = ScenarioConfig::new(ScenarioKind::School);
        assert_eq!(ScenarioConfig::from_toml_str(&cfg.to_toml().unwrap()).unwrap(), cfg);
    }

    #[test]
    fn invalid_configs_are_config_errors() {
        for text in [
            "scenario = \"school\"\nruns = 0",
            "scenario = \"nope\"",
            "scenario = \"school\"\nbogus = 1",
            "scenario = \"school\"\n[school]\nmissing_fractions = [1.5]",
            "scenario = \"school\"\n[school]\ndataset = \"/definitely/not/here.txt\"",
            "scenario = \"multilayer\"\n[multilayer.network]\nba_m = 0",
        ] {
            let r = ScenarioConfig::from_toml_str(text).and_then(|c| c.validate());
            assert!(matches!(r, Err(Error::Config(_))), "{text}: {r:?}");
            assert_eq!(r.unwrap_err().exit_code(), 2);
        }
    }
}
