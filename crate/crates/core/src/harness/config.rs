use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::elasticity::{lame_from_moduli, ElasticModuli, LamePair};
use crate::error::{Error, Result};
use crate::iim::{InversionMode, OutOfFrame};
use crate::imaging::PhantomSpec;
use crate::optimizer::{NmCoefficients, NmOptions};

pub const DEFAULT_GRID: [usize; 2] = [254, 108];
pub const PAPER_GRID: [usize; 2] = [508, 216];

/// Young's modulus (kPa) of background and inclusions 1 to 4; all at ν = 0.45.
pub const TRUTH_YOUNGS: [f64; 5] = [100.0, 200.0, 50.0, 75.0, 150.0];
pub const TRUTH_POISSON: f64 = 0.45;

/// Which images receive noise in a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseTarget {
    #[default]
    Both,
    ReferenceOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSection {
    /// `single` or `four`; ignored when a `[phantom]` table is present.
    pub preset: String,
    pub grid: [usize; 2],
    /// Sample size `(lx1, lx2)` in mm.
    pub extent: [f64; 2],
    /// Top-edge displacement `c_D` in mm.
    pub compression: f64,
    pub mode: InversionMode,
    pub noise_levels: Vec<f64>,
    /// Master seeds; every (noise level, seed) pair is one run.
    pub seeds: Vec<u64>,
    /// `α = alpha_coefficient · δ`.
    pub alpha_coefficient: f64,
    pub noise_target: NoiseTarget,
    pub initial_guess: ElasticModuli<f64>,
    pub bounds: [f64; 2],
    pub out_of_frame: OutOfFrame,
    pub fill: f64,
    /// Writes measured wall time into the summary; off keeps reports byte-reproducible.
    pub record_wall_time: bool,
    pub output_dir: Option<PathBuf>,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        ExperimentSection {
            preset: "single".into(),
            grid: DEFAULT_GRID,
            extent: [6.8, 2.9],
            compression: 0.267,
            mode: InversionMode::Full,
            noise_levels: Vec::new(),
            seeds: vec![1],
            alpha_coefficient: 0.1,
            noise_target: NoiseTarget::Both,
            initial_guess: ElasticModuli { youngs_modulus: 150.0, poisson_ratio: 0.45 },
            bounds: [10.0, 1000.0],
            out_of_frame: OutOfFrame::Exclude,
            fill: 0.0,
            record_wall_time: false,
            output_dir: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerSection {
    pub max_iterations: usize,
    pub initial_step: f64,
    pub f_tolerance: f64,
    pub x_tolerance: f64,
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
}

impl Default for OptimizerSection {
    fn default() -> Self {
        let c = NmCoefficients::<f64>::default();
        OptimizerSection {
            max_iterations: 100,
            initial_step: 0.05,
            f_tolerance: 1e-12,
            x_tolerance: 1e-12,
            reflection: c.reflection,
            expansion: c.expansion,
            contraction: c.contraction,
            shrink: c.shrink,
        }
    }
}

impl OptimizerSection {
    pub fn options(&self, dim: usize, lower: f64, upper: f64) -> NmOptions<f64> {
        NmOptions {
            max_iterations: self.max_iterations,
            coefficients: NmCoefficients {
                reflection: self.reflection,
                expansion: self.expansion,
                contraction: self.contraction,
                shrink: self.shrink,
            },
            initial_step: self.initial_step,
            f_tolerance: self.f_tolerance,
            x_tolerance: self.x_tolerance,
            ..NmOptions::with_box(dim, lower, upper)
        }
    }
}

/// Complete description of an experiment; the TOML form rejects unknown keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    /// Ground truth per region, background first. Empty means the built-in table.
    pub truth: Vec<ElasticModuli<f64>>,
    pub optimizer: OptimizerSection,
    /// Inline phantom, overriding `experiment.preset`.
    pub phantom: Option<PhantomSpec<f64>>,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn phantom_spec(&self) -> Result<PhantomSpec<f64>> {
        match &self.phantom {
            Some(spec) => Ok(spec.clone()),
            None => PhantomSpec::preset(&self.experiment.preset),
        }
    }

    /// Explicit truth table, or the built-in one cut to the phantom's region count.
    pub fn truth_moduli(&self) -> Result<Vec<ElasticModuli<f64>>> {
        let regions = self.phantom_spec()?.region_count();
        if self.truth.is_empty() {
            if regions > TRUTH_YOUNGS.len() {
                return Err(Error::Config(format!("no built-in truth for {regions} regions; add [[truth]] tables")));
            }
            return Ok(TRUTH_YOUNGS[..regions]
                .iter()
                .map(|&e| ElasticModuli { youngs_modulus: e, poisson_ratio: TRUTH_POISSON })
                .collect());
        }
        if self.truth.len() != regions {
            return Err(Error::Config(format!(
                "{} [[truth]] entries for a phantom with {regions} regions",
                self.truth.len()
            )));
        }
        Ok(self.truth.clone())
    }

    pub fn truth_pairs(&self) -> Result<Vec<LamePair<f64>>> {
        self.truth_moduli()?.into_iter().map(lame_from_moduli).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let e = &self.experiment;
        let bad = |m: String| Err(Error::Config(m));
        if e.grid[0] == 0 || e.grid[1] == 0 {
            return bad("grid must be positive".into());
        }
        if !(e.extent[0] > 0.0 && e.extent[1] > 0.0) {
            return bad("extent must be positive".into());
        }
        if !(e.compression >= 0.0 && e.compression.is_finite()) {
            return bad("compression must be non-negative".into());
        }
        if e.noise_levels.iter().any(|d| !(*d >= 0.0 && d.is_finite())) {
            return bad("noise levels must be non-negative".into());
        }
        if e.seeds.is_empty() {
            return bad("at least one seed is required".into());
        }
        if !(e.alpha_coefficient >= 0.0) {
            return bad("alpha_coefficient must be non-negative".into());
        }
        if !(e.bounds[0] >= 0.0 && e.bounds[0] < e.bounds[1] && e.bounds[1].is_finite()) {
            return bad(format!("bounds [{}, {}] are not an interval", e.bounds[0], e.bounds[1]));
        }
        e.initial_guess.validate()?;
        for m in &self.truth {
            m.validate()?;
        }
        self.phantom_spec()?.validate(e.extent)?;
        self.truth_moduli()?;
        let dim = match e.mode {
            InversionMode::MuOnly => 1,
            InversionMode::Full => 2,
        };
        self.optimizer.options(dim, e.bounds[0], e.bounds[1]).validate(dim)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let cfg = ExperimentConfig::from_toml_str("").unwrap();
        assert_eq!(cfg, ExperimentConfig::default());
        cfg.validate().unwrap();
        assert_eq!(cfg.truth_pairs().unwrap().len(), 2);
    }

    #[test]
    fn unknown_keys_rejected_at_every_level() {
        for text in [
            "bogus = 1",
            "[experiment]\nbogus = 1",
            "[optimizer]\nbogus = 1",
            "[[truth]]\nyoungs_modulus = 1.0\npoisson_ratio = 0.3\nbogus = 1",
        ] {
            assert!(ExperimentConfig::from_toml_str(text).is_err(), "{text}");
        }
    }

    #[test]
    fn parses_full_document() {
        let text = r#"
[experiment]
preset = "four"
grid = [127, 54]
mode = "mu-only"
noise_levels = [0.01, 0.02]
seeds = [1, 2, 3]
noise_target = "reference-only"
out_of_frame = "fill"

[optimizer]
max_iterations = 7
"#;
        let cfg = ExperimentConfig::from_toml_str(text).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.experiment.mode, InversionMode::MuOnly);
        assert_eq!(cfg.experiment.noise_target, NoiseTarget::ReferenceOnly);
        assert_eq!(cfg.experiment.out_of_frame, OutOfFrame::Fill);
        assert_eq!(cfg.optimizer.max_iterations, 7);
        assert_eq!(cfg.truth_moduli().unwrap().len(), 5);
        let back = ExperimentConfig::from_toml_str(&cfg.to_toml_string()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn truth_table_matches_region_count() {
        let mut cfg = ExperimentConfig::default();
        cfg.truth = vec![ElasticModuli { youngs_modulus: 10.0, poisson_ratio: 0.3 }];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn invalid_values_rejected() {
        let mut cfg = ExperimentConfig::default();
        cfg.experiment.noise_levels = vec![-0.1];
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::default();
        cfg.experiment.bounds = [5.0, 5.0];
        assert!(cfg.validate().is_err());
        let mut cfg = ExperimentConfig::default();
        cfg.experiment.preset = "nine".into();
        assert!(cfg.validate().is_err());
    }
}
