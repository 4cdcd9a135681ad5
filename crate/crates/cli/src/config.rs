//! Run configuration. Every physical field carries its unit in its name.

use std::path::PathBuf;

use demuxforge_core::dynamics::DynamicsOptions;
use demuxforge_core::mapping::MappingConfig;
use demuxforge_core::model2l::DesignParams;
use demuxforge_core::presets::LATTICE_CONSTANT;
use demuxforge_core::protocols::{ProtocolKind, ProtocolSpec, Thresholds, DEFAULT_FLIP_DURATION};
use demuxforge_core::spectral::SpatialGrid;
use demuxforge_core::units::{hz, hz_energy, RB87_MASS};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub case: String,
    #[serde(default = "default_kind")]
    pub protocol: ProtocolKind,
    pub design: DesignSection,
    pub trap: TrapSection,
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub mapping: MappingSection,
    #[serde(default)]
    pub dynamics: DynamicsSection,
    #[serde(default = "default_flip")]
    pub bias_flip_duration_s: f64,
    /// Also run the linear-ramp baseline in `simulate`.
    #[serde(default)]
    pub baseline: bool,
    #[serde(default)]
    pub thresholds: Thresholds,
    /// Curve to map instead of designing one inline.
    #[serde(default)]
    pub curve_csv: Option<PathBuf>,
    /// Schedule to simulate instead of designing and mapping inline.
    #[serde(default)]
    pub schedule_csv: Option<PathBuf>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

fn default_kind() -> ProtocolKind {
    ProtocolKind::Demux
}

fn default_flip() -> f64 {
    DEFAULT_FLIP_DURATION
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignSection {
    pub trap_frequency_hz: f64,
    pub lambda_f_rad_per_s: f64,
    pub dlambda0_rad_per_s2: f64,
    pub tf_s: f64,
    #[serde(default = "default_samples")]
    pub n_samples: usize,
}

fn default_samples() -> usize {
    DesignParams::DEFAULT_SAMPLES
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrapSection {
    #[serde(default = "default_mass")]
    pub mass_kg: f64,
    #[serde(default = "default_lattice")]
    pub lattice_constant_m: f64,
    pub dx_shift_m: f64,
}

fn default_mass() -> f64 {
    RB87_MASS
}

fn default_lattice() -> f64 {
    LATTICE_CONSTANT
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub x_min_m: f64,
    pub x_max_m: f64,
    pub n_points: usize,
}

impl Default for GridSection {
    fn default() -> Self {
        let g = SpatialGrid::default();
        Self { x_min_m: g.x_min, x_max_m: g.x_max, n_points: g.n_points }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MappingSection {
    pub v0_max_hz: f64,
    pub omega_min_hz: f64,
    pub omega_max_hz: f64,
    /// Defaults to `(1e-3 omega0)^2`.
    #[serde(default)]
    pub cost_tol_rad2_per_s2: Option<f64>,
    pub max_evals: usize,
    pub stride: usize,
}

impl Default for MappingSection {
    fn default() -> Self {
        Self {
            v0_max_hz: 800.0,
            omega_min_hz: 5.0,
            omega_max_hz: 300.0,
            cost_tol_rad2_per_s2: None,
            max_evals: 600,
            stride: 10,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsSection {
    pub dt_s: f64,
    pub diagnostic_samples: usize,
    pub levels: usize,
    /// Smallest step the `--verify-dt` halving may reach.
    pub dt_min_s: f64,
    /// Fidelity change accepted between a step and its half.
    pub fidelity_tol: f64,
}

impl Default for DynamicsSection {
    fn default() -> Self {
        let d = DynamicsOptions::default();
        Self { dt_s: d.dt, diagnostic_samples: d.diagnostic_samples, levels: d.levels, dt_min_s: d.dt / 16.0, fidelity_tol: 1e-7 }
    }
}

impl RunConfig {
    pub fn design_params(&self) -> DesignParams {
        DesignParams {
            omega0: hz(self.design.trap_frequency_hz),
            lambda_f: self.design.lambda_f_rad_per_s,
            dlambda0: self.design.dlambda0_rad_per_s2,
            tf: self.design.tf_s,
            n_samples: self.design.n_samples,
        }
    }

    pub fn grid(&self) -> SpatialGrid {
        SpatialGrid { x_min: self.grid.x_min_m, x_max: self.grid.x_max_m, n_points: self.grid.n_points }
    }

    pub fn mapping_config(&self, stride: Option<usize>) -> MappingConfig {
        let omega0 = hz(self.design.trap_frequency_hz);
        let mut m = MappingConfig::new(omega0, self.trap.lattice_constant_m, self.trap.dx_shift_m);
        m.grid = self.grid();
        m.mass = self.trap.mass_kg;
        m.v0_max = hz_energy(self.mapping.v0_max_hz);
        m.omega_bounds = (hz(self.mapping.omega_min_hz), hz(self.mapping.omega_max_hz));
        if let Some(t) = self.mapping.cost_tol_rad2_per_s2 {
            m.cost_tol = t;
        }
        m.max_evals = self.mapping.max_evals;
        m.stride = stride.unwrap_or(self.mapping.stride);
        m
    }

    pub fn dynamics_options(&self) -> DynamicsOptions {
        DynamicsOptions {
            dt: self.dynamics.dt_s,
            diagnostic_samples: self.dynamics.diagnostic_samples,
            levels: self.dynamics.levels,
        }
    }

    pub fn spec(&self, stride: Option<usize>) -> ProtocolSpec {
        ProtocolSpec {
            kind: self.protocol,
            design: self.design_params(),
            mapping: self.mapping_config(stride),
            dynamics: self.dynamics_options(),
            bias_flip_duration: self.bias_flip_duration_s,
            thresholds: self.thresholds,
        }
    }

    /// Checks every nested invariant.
    pub fn validate(&self, stride: Option<usize>) -> demuxforge_core::Result<()> {
        self.spec(stride).validate()?;
        if !(self.dynamics.dt_min_s > 0.0 && self.dynamics.fidelity_tol > 0.0) {
            return Err(demuxforge_core::Error::InvalidParams("dt_min_s and fidelity_tol must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "case": "X",
        "design": {"trap_frequency_hz": 78.0, "lambda_f_rad_per_s": 10.0, "dlambda0_rad_per_s2": 10.0, "tf_s": 0.25},
        "trap": {"dx_shift_m": 1e-7}
    }"#;

    #[test]
    fn defaults_fill_in() {
        let c: RunConfig = serde_json::from_str(MINIMAL).unwrap();
        assert_eq!(c.protocol, ProtocolKind::Demux);
        assert_eq!(c.grid(), SpatialGrid::default());
        assert_eq!(c.design_params().n_samples, 2001);
        let m = c.mapping_config(None);
        assert_eq!(m.stride, 10);
        assert!((m.cost_tol - (1e-3 * hz(78.0)).powi(2)).abs() < 1e-12);
        assert_eq!(c.mapping_config(Some(1)).stride, 1);
        assert!(c.validate(None).is_ok());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let bad = MINIMAL.replace("\"tf_s\"", "\"tf\"");
        assert!(serde_json::from_str::<RunConfig>(&bad).is_err());
    }
}
