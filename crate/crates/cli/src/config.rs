use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use fracnash_core::gallery::GeneratorSpec;
use fracnash_core::nash::{DecayProfile, RateFunction};
use fracnash_core::spectral::SpectralOperator;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    CertifyNash,
    RateFromProfile,
    Subordinate,
    UltraProfile,
    HalfPowerCheck,
    JensenCheck,
    LogsobCheck,
    TorusSweep,
    OuSuite,
    ExploreBernstein,
    Selftest,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = self.to_possible_value().expect("no skipped variants");
        f.write_str(v.get_name())
    }
}

/// Named closed-form families for decay profiles and rate functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum RateSpec {
    /// From the profile `m(t) = t^{−n/2}`.
    Power { n: f64 },
    /// From the profile `m(t) = e^{t^{−γ}}`.
    Stretched { gamma: f64 },
    /// `B(x) = log x`.
    Log,
    /// `B ≡ c`.
    Constant { c: f64 },
    /// `λ₁(1 − 1/(x μ(X)))₊` of the generator.
    Gap,
    /// `c · Θ_emp(x)/x` from the measured decay of the generator.
    Empirical { c: f64 },
}

impl RateSpec {
    pub fn profile(&self) -> Option<DecayProfile> {
        match *self {
            RateSpec::Power { n } => Some(DecayProfile::power(n)),
            RateSpec::Stretched { gamma } => Some(DecayProfile::stretched_exp(gamma)),
            _ => None,
        }
    }

    pub fn rate(&self, op: Option<&SpectralOperator>) -> Result<RateFunction> {
        let need_op = || op.context("this rate family needs a generator");
        Ok(match self {
            RateSpec::Power { .. } | RateSpec::Stretched { .. } => {
                RateFunction::from_profile(&self.profile().expect("profile family"))
            }
            RateSpec::Log => RateFunction::log(),
            RateSpec::Constant { c } => RateFunction::constant(*c),
            RateSpec::Gap => RateFunction::spectral_gap(need_op()?)?,
            RateSpec::Empirical { c } => RateFunction::empirical(need_op()?, *c),
        })
    }

    /// Closed form of the Legendre-type rate, where known.
    pub fn closed_form(&self, x: f64) -> Option<f64> {
        match *self {
            RateSpec::Power { n } => Some(n / (2.0 * std::f64::consts::E) * x.powf(2.0 / n)),
            RateSpec::Stretched { gamma: g } => {
                Some(g * (1.0 + g).powf(-(1.0 + 1.0 / g)) * x.ln().powf(1.0 + 1.0 / g))
            }
            RateSpec::Log => Some(x.ln()),
            RateSpec::Constant { c } => Some(c),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleSection {
    pub per_family: usize,
    pub count: usize,
}

impl Default for EnsembleSection {
    fn default() -> Self {
        Self { per_family: 50, count: 500 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub max_deviation: f64,
    pub min_slack: f64,
    pub min_infimum: f64,
    pub relative: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { max_deviation: 1e-6, min_slack: -1e-8, min_infimum: 0.0, relative: 1e-5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TorusSection {
    pub gamma: f64,
    /// Coordinates used for classification.
    pub k: usize,
    /// Coordinate cap for subordinated values.
    pub k_values: usize,
    /// Times used for the exponent fit; values elsewhere are best effort.
    pub fit_t: Vec<f64>,
}

impl Default for TorusSection {
    fn default() -> Self {
        Self { gamma: 1.0, k: 20_000, k_values: 500_000, fit_t: vec![0.05, 0.0707, 0.1, 0.1414, 0.2] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OuSection {
    pub n: usize,
    pub samples: usize,
    pub n_list: Vec<usize>,
    pub probe_alpha: f64,
    pub probe_t: f64,
}

impl Default for OuSection {
    fn default() -> Self {
        Self { n: 16, samples: 500, n_list: vec![16, 32, 64], probe_alpha: 0.5, probe_t: 0.1 }
    }
}

/// One experiment. Every field except `command` and `seed` has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub generator: Option<GeneratorSpec>,
    #[serde(default)]
    pub rate: Option<RateSpec>,
    #[serde(default)]
    pub alpha: Vec<f64>,
    #[serde(default)]
    pub t: Vec<f64>,
    #[serde(default)]
    pub x: Vec<f64>,
    /// Names of scalar functions for jensen-check and explore-bernstein.
    #[serde(default)]
    pub functions: Vec<String>,
    #[serde(default)]
    pub ensemble: EnsembleSection,
    #[serde(default)]
    pub tolerance: Tolerances,
    #[serde(default)]
    pub torus: TorusSection,
    #[serde(default)]
    pub ou: OuSection,
}

impl ExperimentConfig {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            seed: None,
            out: None,
            generator: None,
            rate: None,
            alpha: Vec::new(),
            t: Vec::new(),
            x: Vec::new(),
            functions: Vec::new(),
            ensemble: EnsembleSection::default(),
            tolerance: Tolerances::default(),
            torus: TorusSection::default(),
            ou: OuSection::default(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).unwrap_or_else(|e| format!("# config not serializable: {e}\n"))
    }

    /// Fills per-command defaults and checks the result.
    pub fn resolve(mut self) -> Result<Self> {
        use Command::*;
        if self.seed.is_none() {
            bail!("a seed is required (config `seed = N` or --seed N)");
        }
        let default_generator = match self.command {
            CertifyNash => Some(GeneratorSpec::Diagonal { eigenvalues: vec![1.0; 8] }),
            Subordinate => Some(GeneratorSpec::cycle(64)),
            HalfPowerCheck => Some(GeneratorSpec::cycle(32)),
            JensenCheck | LogsobCheck | ExploreBernstein => Some(GeneratorSpec::cycle(16)),
            _ => None,
        };
        if self.generator.is_none() {
            self.generator = default_generator;
        }
        if self.rate.is_none() {
            self.rate = match self.command {
                CertifyNash => Some(RateSpec::Constant { c: 1.0 }),
                RateFromProfile | UltraProfile => Some(RateSpec::Power { n: 2.0 }),
                HalfPowerCheck | ExploreBernstein => Some(RateSpec::Gap),
                _ => None,
            };
        }
        if self.alpha.is_empty() {
            self.alpha = match self.command {
                Subordinate => vec![0.3, 0.5, 0.7, 0.9],
                TorusSweep => vec![0.3, 0.5, 0.75],
                LogsobCheck => vec![1.0, 0.5],
                _ => vec![1.0],
            };
        }
        if self.t.is_empty() {
            self.t = match self.command {
                Subordinate => vec![0.1, 1.0, 10.0],
                UltraProfile => vec![0.01, 0.0251, 0.0631, 0.1585, 0.3981, 1.0],
                HalfPowerCheck => vec![50.0],
                TorusSweep => vec![0.001, 0.01, 0.1, 1.0, 10.0],
                _ => Vec::new(),
            };
        }
        if self.x.is_empty() && self.command == RateFromProfile {
            self.x = [2.0f64, 5.0, 10.0].iter().map(|y| y.exp()).collect();
        }
        if self.functions.is_empty() {
            self.functions = match self.command {
                JensenCheck => vec!["square".into(), "cube".into(), "exp".into()],
                ExploreBernstein => vec!["sqrt".into(), "log1p".into(), "one_minus_exp".into()],
                _ => Vec::new(),
            };
        }
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        if let Some(g) = &self.generator {
            g.validate()?;
        }
        if let Some(a) = self.alpha.iter().find(|a| !(**a > 0.0)) {
            bail!("alpha values must be positive, got {a}");
        }
        if let Some(t) = self.t.iter().find(|t| !(**t > 0.0)) {
            bail!("t values must be positive, got {t}");
        }
        if let Some(x) = self.x.iter().find(|x| !(**x > 0.0)) {
            bail!("x values must be positive, got {x}");
        }
        for f in &self.functions {
            crate::commands::named_function(f)?;
        }
        let needs_generator = matches!(
            self.command,
            Command::CertifyNash
                | Command::Subordinate
                | Command::HalfPowerCheck
                | Command::JensenCheck
                | Command::LogsobCheck
                | Command::ExploreBernstein
        );
        if needs_generator && self.generator.is_none() {
            bail!("command {} needs a [generator] section", self.command);
        }
        if matches!(self.command, Command::RateFromProfile) && self.rate.as_ref().and_then(|r| r.profile()).is_none() {
            bail!("rate-from-profile needs a profile family (power or stretched)");
        }
        Ok(())
    }

    pub fn seed(&self) -> u64 {
        self.seed.expect("resolved config has a seed")
    }
}
