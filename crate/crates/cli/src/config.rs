//! Experiment configuration files.
//!
//! Energies are in units of the bare hopping `J`, times in units of `1/J`, and dephasing
//! rates in units of the bound-particle hopping `J_eff`.

use std::f64::consts::PI;
use std::path::Path;

use boundwalk::lattice::OnsiteConvention;
use boundwalk::open::EvolutionOptions;
use boundwalk::protocols::{
    EdgeField, Engineering, ExperimentConfig, FieldFormula, PhaseMode, SplitField,
};
use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

/// What a run computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Transfer,
    UnlockOpt,
    Noon,
    SplitOpt,
    Fringes,
    QuenchFringes,
    Fisher,
    DephasingSweep,
    EffectiveDump,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Transfer => "transfer",
            Command::UnlockOpt => "unlock-opt",
            Command::Noon => "noon",
            Command::SplitOpt => "split-opt",
            Command::Fringes => "fringes",
            Command::QuenchFringes => "quench-fringes",
            Command::Fisher => "fisher",
            Command::DephasingSweep => "dephasing-sweep",
            Command::EffectiveDump => "effective-dump",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Used when no subcommand is given on the command line.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<Command>,
    pub chain: ChainSection,
    #[serde(default)]
    pub edge: EdgeSection,
    #[serde(default)]
    pub engineering: EngineeringSection,
    #[serde(default)]
    pub split: SplitSection,
    #[serde(default)]
    pub window: WindowSection,
    #[serde(default)]
    pub phase: PhaseSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub dephasing: DephasingSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSection {
    pub sites: usize,
    pub particles: usize,
    /// `U/J`.
    pub interaction: f64,
    #[serde(default)]
    pub convention: ConventionName,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConventionName {
    #[default]
    PairCount,
    Shifted,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EdgeSection {
    #[default]
    Off,
    ClosedForm {
        #[serde(default = "one")]
        factor: f64,
    },
    Fixed {
        beta: f64,
    },
    Optimize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormulaName {
    #[default]
    Balanced,
    Nominal,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EngineeringSection {
    #[default]
    None,
    Minimal {
        /// `J₀/J`; optimised when absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        edge_hopping: Option<f64>,
        #[serde(default)]
        fields: FormulaName,
    },
    EvenChain {
        #[serde(default)]
        fields: FormulaName,
    },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SplitSection {
    #[default]
    Off,
    Fixed {
        beta: f64,
    },
    Asymptotic {
        #[serde(default = "one")]
        factor: f64,
    },
    Prefactor {
        alpha: f64,
    },
    Optimize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSection {
    /// Window length in units of `L/J_eff`.
    #[serde(default = "default_window_factor")]
    pub factor: f64,
    #[serde(default = "default_steps")]
    pub steps: usize,
}

impl Default for WindowSection {
    fn default() -> Self {
        Self {
            factor: default_window_factor(),
            steps: default_steps(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhaseModeName {
    #[default]
    Diagonal,
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseSection {
    #[serde(default)]
    pub mode: PhaseModeName,
    /// Tilt `β_L/J` for the literal mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<f64>,
    #[serde(default = "minus_pi")]
    pub lo: f64,
    #[serde(default = "plus_pi")]
    pub hi: f64,
    #[serde(default = "default_phase_points")]
    pub points: usize,
}

impl Default for PhaseSection {
    fn default() -> Self {
        Self {
            mode: PhaseModeName::Diagonal,
            field: None,
            lo: minus_pi(),
            hi: plus_pi(),
            points: default_phase_points(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    /// `U/J` values for the sweeping subcommands; defaults to the chain's own value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interactions: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DephasingSection {
    /// `Γ/J_eff` values.
    #[serde(default = "default_rates")]
    pub rates: Vec<f64>,
    /// Largest sector dimension propagated with a dense Liouvillian exponential.
    #[serde(default = "default_dense_max_dim")]
    pub dense_max_dim: usize,
}

impl Default for DephasingSection {
    fn default() -> Self {
        Self {
            rates: default_rates(),
            dense_max_dim: default_dense_max_dim(),
        }
    }
}

fn one() -> f64 {
    1.0
}
fn default_window_factor() -> f64 {
    2.0
}
fn default_steps() -> usize {
    2000
}
fn minus_pi() -> f64 {
    -PI
}
fn plus_pi() -> f64 {
    PI
}
fn default_phase_points() -> usize {
    361
}
fn default_rates() -> Vec<f64> {
    vec![1e-4, 1e-3, 1e-2]
}
fn default_dense_max_dim() -> usize {
    EvolutionOptions::default().dense_max_dim
}

/// Parse and validate a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let config: RunConfig =
        toml::from_str(text).map_err(|e| ConfigError::Parse(e.message().to_owned()))?;
    config.experiment()?;
    Ok(config)
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_owned(),
        source,
    })?;
    parse_config(&text)
}

impl RunConfig {
    /// Protocol configuration with `J = 1`.
    pub fn experiment(&self) -> Result<ExperimentConfig, ConfigError> {
        let c = &self.chain;
        let mut e = ExperimentConfig::new(c.sites, c.particles, 1.0, c.interaction);
        e.convention = match c.convention {
            ConventionName::PairCount => OnsiteConvention::PairCount,
            ConventionName::Shifted => OnsiteConvention::Shifted,
        };
        e.edge_field = match self.edge {
            EdgeSection::Off => EdgeField::Off,
            EdgeSection::ClosedForm { factor } => EdgeField::ClosedForm { factor },
            EdgeSection::Fixed { beta } => EdgeField::Fixed(beta),
            EdgeSection::Optimize => EdgeField::Optimize,
        };
        let formula = |f: FormulaName| match f {
            FormulaName::Balanced => FieldFormula::Balanced,
            FormulaName::Nominal => FieldFormula::Nominal,
        };
        e.engineering = match self.engineering {
            EngineeringSection::None => Engineering::None,
            EngineeringSection::Minimal {
                edge_hopping,
                fields,
            } => Engineering::Minimal {
                edge_hopping,
                fields: formula(fields),
            },
            EngineeringSection::EvenChain { fields } => Engineering::EvenChain {
                fields: formula(fields),
            },
        };
        e.split_field = match self.split {
            SplitSection::Off => SplitField::Off,
            SplitSection::Fixed { beta } => SplitField::Fixed(beta),
            SplitSection::Asymptotic { factor } => SplitField::Asymptotic { factor },
            SplitSection::Prefactor { alpha } => SplitField::Prefactor { alpha },
            SplitSection::Optimize => SplitField::Optimize,
        };
        e.window_factor = self.window.factor;
        e.scan_steps = self.window.steps;
        e.phase_mode = match (self.phase.mode, self.phase.field) {
            (PhaseModeName::Diagonal, _) => PhaseMode::Diagonal,
            (PhaseModeName::Literal, Some(field)) => PhaseMode::Literal { field },
            (PhaseModeName::Literal, None) => {
                return Err(ConfigError::Invalid(
                    "phase.mode = \"literal\" needs phase.field".into(),
                ))
            }
        };
        e.validate()
            .map_err(|err| ConfigError::Invalid(err.to_string()))?;
        if !(self.window.factor.is_finite() && self.window.factor > 0.0) || self.window.steps < 2 {
            return Err(ConfigError::Invalid(
                "window.factor must be positive and window.steps at least 2".into(),
            ));
        }
        let ordered =
            self.phase.lo.is_finite() && self.phase.hi.is_finite() && self.phase.hi > self.phase.lo;
        if self.phase.points < 3 || !ordered {
            return Err(ConfigError::Invalid(
                "phase grid needs hi > lo and at least 3 points".into(),
            ));
        }
        if let Some(us) = &self.sweep.interactions {
            if us.is_empty() || us.iter().any(|u| !(u.is_finite() && *u > 0.0)) {
                return Err(ConfigError::Invalid(
                    "sweep.interactions must be a non-empty list of positive values".into(),
                ));
            }
        }
        if self
            .dephasing
            .rates
            .iter()
            .any(|g| !(g.is_finite() && *g >= 0.0))
        {
            return Err(ConfigError::Invalid(
                "dephasing.rates must be non-negative".into(),
            ));
        }
        Ok(e)
    }

    /// Interactions swept by `unlock-opt`, `split-opt` and `fisher`.
    pub fn interactions(&self) -> Vec<f64> {
        self.sweep
            .interactions
            .clone()
            .unwrap_or_else(|| vec![self.chain.interaction])
    }

    pub fn evolution_options(&self) -> EvolutionOptions {
        EvolutionOptions {
            dense_max_dim: self.dephasing.dense_max_dim,
            ..EvolutionOptions::default()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        [chain]
        sites = 5
        particles = 2
        interaction = 5.0

        [edge]
        kind = "closed_form"
    "#;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.edge, EdgeSection::ClosedForm { factor: 1.0 });
        assert_eq!(c.window, WindowSection::default());
        assert_eq!(c.split, SplitSection::Off);
        let e = c.experiment().unwrap();
        assert_eq!(e.hopping, 1.0);
        assert_eq!(e.scan_steps, 2000);
    }

    #[test]
    fn unknown_keys_are_named() {
        let err = parse_config(&format!("{MINIMAL}\nfactr = 2.0\n")).unwrap_err();
        assert!(err.to_string().contains("factr"), "{err}");
        let err =
            parse_config("[chain]\nsites = 5\nparticles = 2\ninteraction = 5.0\nhopping = 1.0\n")
                .unwrap_err();
        assert!(err.to_string().contains("hopping"), "{err}");
    }

    #[test]
    fn constraints_are_reported() {
        let err =
            parse_config("[chain]\nsites = 5\nparticles = 2\ninteraction = -5.0\n").unwrap_err();
        assert!(matches!(err, ConfigError::Invalid(_)));
        assert!(err.to_string().contains("interaction"), "{err}");
        let err =
            parse_config("[chain]\nsites = 5\nparticles = 4\ninteraction = 5.0\n").unwrap_err();
        assert!(matches!(err, ConfigError::Invalid(_)));
        let err = parse_config("[chain]\nsites = 5\nparticles = 2\n").unwrap_err();
        assert!(err.to_string().contains("interaction"), "{err}");
    }

    #[test]
    fn literal_phase_needs_a_field() {
        let err = parse_config(&format!("{MINIMAL}\n[phase]\nmode = \"literal\"\n")).unwrap_err();
        assert!(err.to_string().contains("phase.field"));
    }
}
