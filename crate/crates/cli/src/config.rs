//! Run configuration: one strict JSON document.

use std::path::{Path, PathBuf};

use phonon_core::boson_stats::{OccupationVector, NORMALIZATION_TOL};
use phonon_core::dd_compiler::{CompileOptions, Scheme, DEFAULT_N_SUB};
use phonon_core::detection::{DetectionParams, DEFAULT_MAX_REPETITIONS, DEFAULT_PREP_ERROR};
use phonon_core::ion_chain::{TrapParams, DEFAULT_SOLVER_TOL};
use phonon_core::linear_optics::UNITARITY_TOL;
use serde::Deserialize;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub trap: TrapSection,
    pub chain: ChainSection,
    pub input: InputSection,
    pub target: TargetSection,
    /// Absent means no pulse compilation: the ideal target drives the distribution.
    #[serde(default)]
    pub dd: Option<DdSection>,
    #[serde(default)]
    pub sampling: SamplingSection,
    #[serde(default)]
    pub detection: DetectionSection,
    #[serde(default)]
    pub tolerances: Tolerances,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrapSection {
    pub omega_x_hz: f64,
    pub omega_z_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSection {
    pub num_ions: usize,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputSection {
    pub occupations: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum TargetSection {
    Identity,
    Fourier,
    Haar { seed: u64 },
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DdSection {
    #[serde(default = "default_n_sub")]
    pub n_sub: usize,
    #[serde(default = "default_scheme")]
    pub scheme: SchemeName,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeName {
    Nn,
    Hadamard,
}

fn default_n_sub() -> usize {
    DEFAULT_N_SUB
}

fn default_scheme() -> SchemeName {
    SchemeName::Hadamard
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingSection {
    pub num_samples: usize,
    pub seed: u64,
}

impl Default for SamplingSection {
    fn default() -> Self {
        SamplingSection { num_samples: 1000, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectionSection {
    pub readout_fidelity: f64,
    pub prep_error: f64,
    pub max_repetitions: u32,
    pub seed: u64,
}

impl Default for DetectionSection {
    fn default() -> Self {
        DetectionSection {
            readout_fidelity: 1.0,
            prep_error: DEFAULT_PREP_ERROR,
            max_repetitions: DEFAULT_MAX_REPETITIONS,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub solver: f64,
    pub unitarity: f64,
    pub normalization: f64,
    /// Bound on TVD between the permanent and Fock-space distributions.
    pub oracle_tvd: f64,
    /// Bound on TVD between compiled and ideal distributions.
    pub compiled_tvd: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            solver: DEFAULT_SOLVER_TOL,
            unitarity: UNITARITY_TOL,
            normalization: NORMALIZATION_TOL,
            oracle_tvd: 1e-8,
            compiled_tvd: 1e-3,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            CliError::Config(format!("{path}: {}", e.inner()))
        })?;
        config.validate()?;
        Ok(config)
    }

    /// Reads a config and resolves a relative target file against the
    /// config's own directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut config = Self::from_json(&text)?;
        if let TargetSection::File { path: target } = &mut config.target {
            if target.is_relative() {
                if let Some(dir) = path.parent() {
                    *target = dir.join(&*target);
                }
            }
        }
        Ok(config)
    }

    /// Field-level checks; each failure names the offending field.
    pub fn validate(&self) -> Result<(), CliError> {
        let invalid = |field: &str, msg: String| Err(CliError::Config(format!("{field}: {msg}")));
        if !(self.trap.omega_x_hz.is_finite() && self.trap.omega_x_hz > 0.0) {
            return invalid("trap.omega_x_hz", format!("must be positive, got {}", self.trap.omega_x_hz));
        }
        if !(self.trap.omega_z_hz.is_finite() && self.trap.omega_z_hz > 0.0) {
            return invalid("trap.omega_z_hz", format!("must be positive, got {}", self.trap.omega_z_hz));
        }
        if self.trap.omega_z_hz >= self.trap.omega_x_hz {
            return invalid("trap.omega_z_hz", "must be below trap.omega_x_hz".into());
        }
        if self.chain.num_ions == 0 {
            return invalid("chain.num_ions", "must be at least 1".into());
        }
        if self.input.occupations.len() != self.chain.num_ions {
            return invalid(
                "input.occupations",
                format!(
                    "length {} does not match chain.num_ions {}",
                    self.input.occupations.len(),
                    self.chain.num_ions
                ),
            );
        }
        if let Some(dd) = &self.dd {
            if dd.n_sub == 0 {
                return invalid("dd.n_sub", "must be at least 1".into());
            }
        }
        if self.sampling.num_samples == 0 {
            return invalid("sampling.num_samples", "must be at least 1".into());
        }
        let d = &self.detection;
        if !(d.readout_fidelity > 0.5 && d.readout_fidelity <= 1.0) {
            return invalid("detection.readout_fidelity", format!("must lie in (0.5, 1], got {}", d.readout_fidelity));
        }
        if !(0.0..1.0).contains(&d.prep_error) {
            return invalid("detection.prep_error", format!("must lie in [0, 1), got {}", d.prep_error));
        }
        if d.max_repetitions == 0 {
            return invalid("detection.max_repetitions", "must be at least 1".into());
        }
        let t = &self.tolerances;
        for (field, v) in [
            ("tolerances.solver", t.solver),
            ("tolerances.unitarity", t.unitarity),
            ("tolerances.normalization", t.normalization),
            ("tolerances.oracle_tvd", t.oracle_tvd),
            ("tolerances.compiled_tvd", t.compiled_tvd),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return invalid(field, format!("must be positive, got {v}"));
            }
        }
        Ok(())
    }

    /// Replaces every stage seed.
    pub fn override_seed(&mut self, seed: u64) {
        if let TargetSection::Haar { seed: s } = &mut self.target {
            *s = seed;
        }
        self.sampling.seed = seed;
        self.detection.seed = seed;
    }

    pub fn trap_params(&self) -> Result<TrapParams, CliError> {
        TrapParams::from_hz(self.trap.omega_x_hz, self.trap.omega_z_hz, self.chain.num_ions)
            .map_err(|e| CliError::Config(format!("trap: {e}")))
    }

    pub fn input_state(&self) -> OccupationVector {
        OccupationVector::new(self.input.occupations.clone())
    }

    pub fn compile_options(&self) -> Option<CompileOptions> {
        self.dd.as_ref().map(|dd| {
            let scheme = match dd.scheme {
                SchemeName::Nn => Scheme::NearestNeighbor,
                SchemeName::Hadamard => Scheme::Hadamard,
            };
            CompileOptions::new(dd.n_sub, scheme)
        })
    }

    pub fn detection_params(&self) -> Result<DetectionParams, CliError> {
        let d = &self.detection;
        DetectionParams::new(d.readout_fidelity, d.max_repetitions, d.prep_error)
            .map_err(|e| CliError::Config(format!("detection: {e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"{
        "trap": {"omega_x_hz": 5e6, "omega_z_hz": 5e5},
        "chain": {"num_ions": 2},
        "input": {"occupations": [1, 1]},
        "target": {"kind": "fourier"}
    }"#;

    fn message(text: &str) -> String {
        match RunConfig::from_json(text) {
            Err(CliError::Config(m)) => m,
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn minimal_config_takes_defaults() {
        let c = RunConfig::from_json(BASE).unwrap();
        assert_eq!(c.target, TargetSection::Fourier);
        assert!(c.dd.is_none());
        assert_eq!(c.tolerances, Tolerances::default());
        assert_eq!(c.detection.max_repetitions, 10);
    }

    #[test]
    fn unknown_keys_are_rejected_with_their_path() {
        let text = BASE.replace(r#""num_ions": 2"#, r#""num_ions": 2, "spacing": 3"#);
        let m = message(&text);
        assert!(m.starts_with("chain"), "{m}");
        assert!(m.contains("spacing"), "{m}");
        let text = BASE.replace(r#""kind": "fourier""#, r#""kind": "haar", "seed": 1, "sed": 2"#);
        assert!(message(&text).contains("sed"));
    }

    #[test]
    fn type_errors_name_the_field() {
        let text = BASE.replace("5e5", r#""fast""#);
        assert!(message(&text).starts_with("trap.omega_z_hz"));
    }

    #[test]
    fn occupation_length_is_checked() {
        let text = BASE.replace("[1, 1]", "[1, 1, 0]");
        assert!(message(&text).starts_with("input.occupations: length 3"));
    }

    #[test]
    fn haar_needs_a_seed() {
        let text = BASE.replace(r#""kind": "fourier""#, r#""kind": "haar""#);
        assert!(message(&text).contains("seed"));
    }

    #[test]
    fn seed_override_reaches_every_stage() {
        let text = BASE.replace(r#""kind": "fourier""#, r#""kind": "haar", "seed": 1"#);
        let mut c = RunConfig::from_json(&text).unwrap();
        c.override_seed(99);
        assert_eq!(c.target, TargetSection::Haar { seed: 99 });
        assert_eq!((c.sampling.seed, c.detection.seed), (99, 99));
    }

    #[test]
    fn detection_ranges() {
        let with = |section: &str| {
            BASE.replacen(
                r#""target": {"kind": "fourier"}"#,
                &format!(r#""target": {{"kind": "fourier"}}, {section}"#),
                1,
            )
        };
        assert!(message(&with(r#""detection": {"readout_fidelity": 0.4}"#)).starts_with("detection.readout_fidelity"));
        assert!(message(&with(r#""detection": {"prep_error": 1.0}"#)).starts_with("detection.prep_error"));
        assert!(message(&with(r#""dd": {"n_sub": 0}"#)).starts_with("dd.n_sub"));
    }
}
