use serde::{Deserialize, Serialize};
use std::path::PathBuf;

use diraclax_core::deriv::DerivativeBackend;
use diraclax_core::potential::PotentialSpec;
use diraclax_core::spectral::SearchBox;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    GaugeCheck,
    FactorizationCheck,
    JsymmetryCheck,
    PositivityCheck,
    Spectrum,
    Shooting,
    Evolve,
    Isospectral,
    ZeroCurvature,
    LaxCheck,
}

impl ExperimentKind {
    pub fn all() -> [(ExperimentKind, &'static str, &'static str); 10] {
        use ExperimentKind::*;
        [
            (GaugeCheck, "gauge-check", "solve the gauge initial value problem and check unitarity and determinant of the family"),
            (FactorizationCheck, "factorization-check", "verify M(-Q) M(Q) = N(Q)^2 on a random band-limited test field"),
            (JsymmetryCheck, "jsymmetry-check", "verify the conjugation-symmetry bilinear identity for M(Q)"),
            (PositivityCheck, "positivity-check", "assemble M(-Q) M(Q) and bound its spectrum from below"),
            (Spectrum, "spectrum", "dense eigenvalues of the assembled operator, written as CSV"),
            (Shooting, "shooting", "locate discrete eigenvalues of the scalar line problem by transfer-matrix shooting"),
            (Evolve, "evolve", "run the split-step matrix NLS evolution and track the conserved norm"),
            (Isospectral, "isospectral", "evolve and measure spectrum drift of the operator against the initial snapshot"),
            (ZeroCurvature, "zero-curvature", "evaluate the zero-curvature residual over the probe set on a sampled trajectory"),
            (LaxCheck, "lax-check", "evaluate the Lax-equation residual on a sampled trajectory"),
        ]
    }

    pub fn name(&self) -> &'static str {
        Self::all()
            .iter()
            .find(|(k, _, _)| k == self)
            .map(|(_, n, _)| *n)
            .unwrap()
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
    pub periodic: bool,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionParams {
    pub dt: f64,
    pub steps: usize,
    #[serde(default = "default_snapshot_every")]
    pub snapshot_every: usize,
}

fn default_snapshot_every() -> usize {
    250
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralParams {
    #[serde(default = "default_search_box")]
    pub search_box: SearchBox,
    #[serde(default = "default_region_min_im")]
    pub region_min_im: f64,
    #[serde(default = "default_top_k")]
    pub top_k: usize,
    #[serde(default = "default_grid_density")]
    pub grid_density: usize,
}

fn default_search_box() -> SearchBox {
    SearchBox {
        re_min: -1.0,
        re_max: 1.0,
        im_min: 0.05,
        im_max: 5.0,
    }
}

fn default_region_min_im() -> f64 {
    0.1
}

fn default_top_k() -> usize {
    8
}

fn default_grid_density() -> usize {
    40
}

impl Default for SpectralParams {
    fn default() -> Self {
        SpectralParams {
            search_box: default_search_box(),
            region_min_im: default_region_min_im(),
            top_k: default_top_k(),
            grid_density: default_grid_density(),
        }
    }
}

/// Tolerances applied at runtime; every default comes from the module
/// contracts and is echoed into summary.json.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub unitarity: f64,
    pub determinant: f64,
    pub factorization: f64,
    pub jsymmetry: f64,
    pub positivity_rel: f64,
    pub kernel_shift: f64,
    pub l2_drift_per_1k_steps: f64,
    pub isospectral_drift: f64,
    pub zero_curvature: f64,
    pub lax: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            unitarity: 1e-10,
            determinant: 1e-10,
            factorization: 1e-8,
            jsymmetry: 1e-10,
            positivity_rel: 1e-8,
            kernel_shift: 1e-8,
            l2_drift_per_1k_steps: 1e-12,
            isospectral_drift: 1e-3,
            zero_curvature: 1e-5,
            lax: 1e-5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Expectation {
    Pass,
    Fail,
}

impl Default for Expectation {
    fn default() -> Self {
        Expectation::Pass
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub m: usize,
    pub grid: GridConfig,
    pub potential: PotentialSpec,
    #[serde(default = "default_backend")]
    pub backend: DerivativeBackend,
    #[serde(default)]
    pub evolution: Option<EvolutionParams>,
    #[serde(default)]
    pub spectral: Option<SpectralParams>,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub expect: Expectation,
    #[serde(default)]
    pub tolerances: Tolerances,
}

fn default_backend() -> DerivativeBackend {
    DerivativeBackend::Spectral
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.m == 0 {
            return Err("m must be positive".into());
        }
        if matches!(
            self.experiment,
            ExperimentKind::Evolve
                | ExperimentKind::Isospectral
                | ExperimentKind::ZeroCurvature
                | ExperimentKind::LaxCheck
        ) && self.evolution.is_none()
        {
            return Err(format!(
                "experiment '{}' requires the evolution parameter block",
                self.experiment.name()
            ));
        }
        if let Some(ev) = &self.evolution {
            if ev.dt <= 0.0 || ev.steps == 0 || ev.snapshot_every == 0 {
                return Err("evolution parameters must be positive".into());
            }
        }
        Ok(())
    }
}
