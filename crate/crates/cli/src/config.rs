use std::path::{Path, PathBuf};

use mtlab::constants::{sharp_constants, Dimension};
use mtlab::mesh::{build_annulus, build_disk, build_polygon, build_rectangle, Mesh, Point};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DomainSpec {
    Disk { radius: f64, h: f64 },
    Rectangle { width: f64, height: f64, h: f64 },
    Annulus { inner: f64, outer: f64, h: f64 },
    Polygon { vertices: Vec<Point>, h: f64 },
}

impl Default for DomainSpec {
    fn default() -> Self {
        DomainSpec::Disk { radius: 1.0, h: 0.05 }
    }
}

impl DomainSpec {
    pub fn h(&self) -> f64 {
        match self {
            DomainSpec::Disk { h, .. }
            | DomainSpec::Rectangle { h, .. }
            | DomainSpec::Annulus { h, .. }
            | DomainSpec::Polygon { h, .. } => *h,
        }
    }

    pub fn build(&self, h: f64) -> mtlab::error::Result<Mesh> {
        match self {
            DomainSpec::Disk { radius, .. } => build_disk(*radius, h),
            DomainSpec::Rectangle { width, height, .. } => build_rectangle(*width, *height, h),
            DomainSpec::Annulus { inner, outer, .. } => build_annulus(*inner, *outer, h),
            DomainSpec::Polygon { vertices, .. } => build_polygon(vertices, h),
        }
    }
}

/// `alpha = 1.5` or `alpha = { fraction_of_lambda1 = 0.5 }`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum AlphaSpec {
    Value(f64),
    Fraction { fraction_of_lambda1: f64 },
}

impl Default for AlphaSpec {
    fn default() -> Self {
        AlphaSpec::Fraction { fraction_of_lambda1: 0.0 }
    }
}

impl AlphaSpec {
    pub fn resolve(&self, lambda1: f64) -> f64 {
        match *self {
            AlphaSpec::Value(a) => a,
            AlphaSpec::Fraction { fraction_of_lambda1 } => fraction_of_lambda1 * lambda1,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub eigen_tol: f64,
    pub eigen_max_iter: usize,
    pub maximize_tol: f64,
    pub maximize_max_iter: usize,
    pub green_tol: f64,
    pub green_relaxation: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            eigen_tol: 1e-9,
            eigen_max_iter: 1000,
            maximize_tol: 1e-8,
            maximize_max_iter: 5000,
            green_tol: 1e-10,
            green_relaxation: 0.5,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct EigenConfig {
    /// Mesh sizes of the refinement ladder; defaults to `4h, 2h, h` for the
    /// domain `h`.
    pub ladder: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct BlowupConfig {
    pub sample_radius: f64,
    pub per_radius: usize,
    pub concentration_radius: f64,
}

impl Default for BlowupConfig {
    fn default() -> Self {
        BlowupConfig {
            sample_radius: 2.0,
            per_radius: 16,
            concentration_radius: 10.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct GreenConfig {
    /// Pole; defaults to the peak of a prior maximize run, else the boundary
    /// node with the largest x coordinate.
    pub point: Option<Point>,
    /// Uniform refinements after the base mesh, for the Cauchy check.
    pub refinements: u32,
    pub fit_annulus: Option<(f64, f64)>,
}

impl Default for GreenConfig {
    fn default() -> Self {
        GreenConfig {
            point: None,
            refinements: 2,
            fit_annulus: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct BoundsConfig {
    pub epsilons: Vec<f64>,
    pub refine_radius: f64,
    /// Smallest element size near the pole, relative to the smallest epsilon.
    pub h_min_factor: f64,
    pub grading: f64,
    pub fit_annulus: Option<(f64, f64)>,
}

impl Default for BoundsConfig {
    fn default() -> Self {
        BoundsConfig {
            epsilons: vec![1e-2, 3e-3, 1e-3, 3e-4, 1e-4],
            refine_radius: 0.5,
            h_min_factor: 0.25,
            grading: 0.3,
            fit_annulus: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct BubbleConfig {
    pub mass_radii: Vec<f64>,
    pub residual_step: f64,
    pub residual_range: (f64, f64),
    pub samples: usize,
}

impl Default for BubbleConfig {
    fn default() -> Self {
        BubbleConfig {
            mass_radii: vec![1.0, 10.0, 100.0, 1000.0],
            residual_step: 1e-4,
            residual_range: (0.1, 10.0),
            samples: 200,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct CapacityConfig {
    pub inner: f64,
    pub outer: f64,
    pub ladder: Vec<f64>,
    /// Radius of the local Green patch on the domain mesh.
    pub local_delta: f64,
}

impl Default for CapacityConfig {
    fn default() -> Self {
        CapacityConfig {
            inner: 0.5,
            outer: 1.0,
            ladder: vec![0.02, 0.01],
            local_delta: 0.4,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub domain: DomainSpec,
    pub n: u32,
    pub alpha: AlphaSpec,
    /// Strictly decreasing values in `(0, β_n)`; defaults to `β_n 2^{-k}`,
    /// `k = 1..4`.
    pub epsilon_schedule: Option<Vec<f64>>,
    pub seed: u64,
    /// Not part of the hash: results do not depend on where they are written.
    #[serde(skip_serializing)]
    pub out: PathBuf,
    /// Wall-clock stamps in the run records; off keeps outputs byte-identical.
    pub timestamps: bool,
    pub solver: SolverConfig,
    pub eigen: EigenConfig,
    pub blowup: BlowupConfig,
    pub green: GreenConfig,
    pub bounds: BoundsConfig,
    pub bubble: BubbleConfig,
    pub capacity: CapacityConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            domain: DomainSpec::default(),
            n: 2,
            alpha: AlphaSpec::default(),
            epsilon_schedule: None,
            seed: 1,
            out: PathBuf::from("out"),
            timestamps: false,
            solver: SolverConfig::default(),
            eigen: EigenConfig::default(),
            blowup: BlowupConfig::default(),
            green: GreenConfig::default(),
            bounds: BoundsConfig::default(),
            bubble: BubbleConfig::default(),
            capacity: CapacityConfig::default(),
        }
    }
}

fn config_error(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl ExperimentConfig {
    /// Reads TOML, or JSON when the extension is `.json`.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| config_error(format!("{}: {e}", path.display())))?;
        let json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        Self::parse(&text, json)
    }

    pub fn parse(text: &str, json: bool) -> Result<Self, CliError> {
        if json {
            serde_json::from_str(text).map_err(|e| config_error(format!("invalid JSON config: {e}")))
        } else {
            toml::from_str(text).map_err(|e| config_error(format!("invalid TOML config: {e}")))
        }
    }

    pub fn dimension(&self) -> Result<Dimension, CliError> {
        let n = Dimension::new(self.n).map_err(|e| config_error(e.to_string()))?;
        if n.get() != 2 {
            return Err(config_error(format!("n = {} needs a {}-dimensional mesh; only planar meshes are available", self.n, self.n)));
        }
        Ok(n)
    }

    pub fn schedule(&self) -> Vec<f64> {
        let n = Dimension::new(self.n).unwrap_or(Dimension::TWO);
        self.epsilon_schedule
            .clone()
            .unwrap_or_else(|| mtlab::subcritical::default_schedule(n, 4))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let n = self.dimension()?;
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(config_error(format!("{name} must be positive, got {v}")))
            }
        };
        positive("domain.h", self.domain.h())?;
        match self.alpha {
            AlphaSpec::Value(a) if !(a >= 0.0) => return Err(config_error(format!("alpha must be nonnegative, got {a}"))),
            AlphaSpec::Fraction { fraction_of_lambda1: f } if !(0.0..1.0).contains(&f) => {
                return Err(config_error(format!("fraction_of_lambda1 must lie in [0, 1), got {f}")))
            }
            _ => {}
        }
        let beta_n = sharp_constants(n).beta_n;
        let schedule = self.schedule();
        if schedule.is_empty() {
            return Err(config_error("epsilon_schedule is empty"));
        }
        if schedule.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(config_error("epsilon_schedule must be strictly decreasing"));
        }
        if !(schedule[0] < beta_n) || !(schedule[schedule.len() - 1] > 0.0) {
            return Err(config_error(format!("epsilon_schedule must lie in (0, {beta_n})")));
        }
        let s = &self.solver;
        for (name, v) in [
            ("solver.eigen_tol", s.eigen_tol),
            ("solver.maximize_tol", s.maximize_tol),
            ("solver.green_tol", s.green_tol),
            ("solver.green_relaxation", s.green_relaxation),
            ("blowup.sample_radius", self.blowup.sample_radius),
            ("blowup.concentration_radius", self.blowup.concentration_radius),
            ("bounds.refine_radius", self.bounds.refine_radius),
            ("bounds.h_min_factor", self.bounds.h_min_factor),
            ("bounds.grading", self.bounds.grading),
            ("bubble.residual_step", self.bubble.residual_step),
            ("capacity.local_delta", self.capacity.local_delta),
        ] {
            positive(name, v)?;
        }
        if let Some(ladder) = &self.eigen.ladder {
            if ladder.is_empty() {
                return Err(config_error("eigen.ladder is empty"));
            }
            for &h in ladder {
                positive("eigen.ladder entry", h)?;
            }
        }
        for &h in &self.capacity.ladder {
            positive("capacity.ladder entry", h)?;
        }
        if self.bounds.epsilons.is_empty() || self.bounds.epsilons.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
            return Err(config_error("bounds.epsilons must be nonempty and lie in (0, 1)"));
        }
        if !(self.capacity.inner > 0.0 && self.capacity.outer > self.capacity.inner) {
            return Err(config_error("capacity needs 0 < inner < outer"));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form (output directory excluded).
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_and_json_agree() {
        let toml_text = r#"
            n = 2
            alpha = { fraction_of_lambda1 = 0.5 }
            seed = 7
            [domain]
            kind = "rectangle"
            width = 2.0
            height = 1.0
            h = 0.1
        "#;
        let json_text = r#"{"n": 2, "alpha": {"fraction_of_lambda1": 0.5}, "seed": 7,
            "domain": {"kind": "rectangle", "width": 2.0, "height": 1.0, "h": 0.1}}"#;
        let a = ExperimentConfig::parse(toml_text, false).unwrap();
        let b = ExperimentConfig::parse(json_text, true).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.alpha.resolve(4.0), 2.0);
        a.validate().unwrap();
    }

    #[test]
    fn hash_tracks_inputs_not_output_dir() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        b.out = PathBuf::from("elsewhere");
        assert_eq!(a.hash(), b.hash());
        b.seed = 2;
        assert_ne!(a.hash(), b.hash());
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(ExperimentConfig::parse("bogus = 1", false).is_err());
        let bad = [
            "alpha = { fraction_of_lambda1 = 1.0 }",
            "alpha = -1.0",
            "epsilon_schedule = [1.0, 2.0]",
            "epsilon_schedule = [7.0, 1.0]",
            "n = 3",
            "n = 1",
            "[domain]\nkind = \"disk\"\nradius = 1.0\nh = 0.0",
        ];
        for text in bad {
            let parsed = ExperimentConfig::parse(text, false);
            assert!(parsed.map_or(true, |c| c.validate().is_err()), "{text}");
        }
        let alpha = ExperimentConfig::parse("alpha = 1.5", false).unwrap();
        assert_eq!(alpha.alpha, AlphaSpec::Value(1.5));
    }
}
