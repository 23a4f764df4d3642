use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filtration::DEFAULT_SIMPLEX_BUDGET;
use crate::partgen::{
    gen_cube, gen_cube_lattice, gen_egg_like_lattice, gen_layered_tube, DefectSpec, Wireframe,
};
use crate::persistence::PhSettings;
use crate::spc::ChartConfig;

/// A part generator and its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "generator", rename_all = "snake_case", deny_unknown_fields)]
pub enum PartRecipe {
    Cube {
        edge: f64,
        spacing: f64,
    },
    LayeredTube {
        edge: f64,
        layers: usize,
        spacing: f64,
    },
    CubeLattice {
        nx: usize,
        ny: usize,
        nz: usize,
        cell_edge: f64,
        spacing: f64,
    },
    Egg {
        rings: usize,
        struts_per_ring: usize,
        height: f64,
        radius: f64,
        spacing: f64,
    },
}

impl PartRecipe {
    pub fn build(&self) -> Result<Wireframe> {
        match *self {
            PartRecipe::Cube { edge, spacing } => gen_cube(edge, spacing),
            PartRecipe::LayeredTube { edge, layers, spacing } => gen_layered_tube(edge, layers, spacing),
            PartRecipe::CubeLattice {
                nx,
                ny,
                nz,
                cell_edge,
                spacing,
            } => gen_cube_lattice(nx, ny, nz, cell_edge, spacing),
            PartRecipe::Egg {
                rings,
                struts_per_ring,
                height,
                radius,
                spacing,
            } => gen_egg_like_lattice(rings, struts_per_ring, height, radius, spacing),
        }
    }
}

/// A defect together with the first Phase II part it affects (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DefectConfig {
    #[serde(flatten)]
    pub spec: DefectSpec,
    #[serde(default = "default_onset")]
    pub onset: usize,
}

fn default_onset() -> usize {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_diameter: Option<f64>,
    pub simplex_budget: usize,
}

impl Default for PhConfig {
    fn default() -> Self {
        PhConfig {
            max_diameter: None,
            simplex_budget: DEFAULT_SIMPLEX_BUDGET,
        }
    }
}

/// Where each replication's Phase I reference comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhaseOnePolicy {
    /// A new noisy reference sample for every replication.
    #[default]
    Fresh,
    /// One reference sample reused by all replications.
    Shared,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub replications: usize,
    pub base_seed: u64,
    #[serde(default)]
    pub phase_one: PhaseOnePolicy,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub part: PartRecipe,
    pub noise: NoiseConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub defect: Option<DefectConfig>,
    #[serde(default)]
    pub chart: ChartConfig,
    #[serde(default)]
    pub ph: PhConfig,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("experiment configs always serialize")
    }

    pub fn ph_settings(&self) -> PhSettings {
        PhSettings {
            max_homology_dim: self.chart.dims.max_dim(),
            max_diameter: self.ph.max_diameter,
            simplex_budget: self.ph.simplex_budget,
        }
    }

    /// Checks everything that can be checked without computing a diagram.
    /// Returns the nominal and (if configured) defective wireframes.
    pub fn validate(&self) -> Result<(Wireframe, Option<Wireframe>)> {
        if self.replications < 1 {
            return Err(Error::validation("replications must be at least 1"));
        }
        self.chart.validate()?;
        if !(self.noise.sigma >= 0.0) || !self.noise.sigma.is_finite() {
            return Err(Error::validation("noise sigma must be finite and >= 0"));
        }
        if let Some(cap) = self.ph.max_diameter {
            if !(cap > 0.0) {
                return Err(Error::validation("ph.max_diameter must be positive"));
            }
        }
        let nominal = self.part.build()?;
        let n = nominal.sampled_len();
        if self.ph.max_diameter.is_none()
            && self.chart.dims.max_dim() > 0
            && n > crate::filtration::FULL_FILTRATION_MAX_POINTS
        {
            return Err(Error::validation(format!(
                "the part samples to {n} points; set ph.max_diameter for clouds above {} points",
                crate::filtration::FULL_FILTRATION_MAX_POINTS
            )));
        }
        let defective = match &self.defect {
            Some(d) => {
                if d.onset < 1 {
                    return Err(Error::validation("defect onset must be at least 1"));
                }
                Some(crate::partgen::apply_defect(&nominal, &d.spec)?)
            }
            None => None,
        };
        Ok((nominal, defective))
    }
}
