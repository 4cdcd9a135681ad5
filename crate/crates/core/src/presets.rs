//! The two reference parameter sets: a slow design (A) and a faster,
//! strongly biased one (B). Both start from a 78 Hz trap of Rb-87 atoms
//! under a 5.18 um lattice.

use serde::{Deserialize, Serialize};

use crate::mapping::MappingConfig;
use crate::model2l::DesignParams;
use crate::units::hz;

pub const OMEGA0: f64 = 2.0 * std::f64::consts::PI * 78.0;
pub const LATTICE_CONSTANT: f64 = 5.18e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Preset {
    pub name: &'static str,
    pub design: DesignParams,
    /// Lattice displacement (m).
    pub dx_shift: f64,
}

impl Preset {
    pub fn mapping(&self) -> MappingConfig {
        MappingConfig::new(self.design.omega0, LATTICE_CONSTANT, self.dx_shift)
    }
}

pub fn case_a() -> Preset {
    Preset {
        name: "A",
        design: DesignParams {
            omega0: hz(78.0),
            lambda_f: 10.0,
            dlambda0: 10.0,
            tf: 0.25,
            n_samples: DesignParams::DEFAULT_SAMPLES,
        },
        dx_shift: 100e-9,
    }
}

pub fn case_b() -> Preset {
    Preset {
        name: "B",
        design: DesignParams {
            omega0: hz(78.0),
            lambda_f: 190.0,
            dlambda0: 180.0,
            tf: 0.1,
            n_samples: DesignParams::DEFAULT_SAMPLES,
        },
        dx_shift: 200e-9,
    }
}
