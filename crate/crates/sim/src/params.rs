use serde::{Deserialize, Serialize};

use crate::SimError;

/// The three simulation parameters a dataset is sampled over.
///
/// `bending_stiffness` maps to the inverse compliance of the dihedral
/// bending constraint (0 disables bending entirely), `mass_density` is the
/// garment's area density in kg/m², and `timescale` is a dimensionless
/// multiplier on the integration step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimParams {
    pub bending_stiffness: f64,
    pub mass_density: f64,
    pub timescale: f64,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            bending_stiffness: 1e-7,
            mass_density: 0.04,
            timescale: 1.0,
        }
    }
}

impl SimParams {
    pub const BENDING_RANGE: (f64, f64) = (0.0, 1.0);
    pub const DENSITY_RANGE: (f64, f64) = (1e-4, 10.0);
    pub const TIMESCALE_RANGE: (f64, f64) = (1e-3, 100.0);

    pub fn new(
        bending_stiffness: f64,
        mass_density: f64,
        timescale: f64,
    ) -> Result<Self, SimError> {
        let p = SimParams {
            bending_stiffness,
            mass_density,
            timescale,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let check = |name: &str, v: f64, (lo, hi): (f64, f64)| {
            if !v.is_finite() || v < lo || v > hi {
                Err(SimError::BadParams(format!(
                    "{name} = {v} outside [{lo}, {hi}]"
                )))
            } else {
                Ok(())
            }
        };
        check(
            "bending_stiffness",
            self.bending_stiffness,
            Self::BENDING_RANGE,
        )?;
        check("mass_density", self.mass_density, Self::DENSITY_RANGE)?;
        check("timescale", self.timescale, Self::TIMESCALE_RANGE)
    }

    /// The ten-point dataset grid: each axis swept through its interesting
    /// range while the other two sit at the defaults. Bending stiffness
    /// moves in decades (its effect is logarithmic), density and timescale
    /// in octave-ish steps.
    pub fn dataset_grid() -> Vec<SimParams> {
        let d = SimParams::default();
        vec![
            SimParams { bending_stiffness: 1e-8, ..d },
            d,
            SimParams { bending_stiffness: 1e-6, ..d },
            SimParams { bending_stiffness: 1e-5, ..d },
            SimParams { mass_density: 0.02, ..d },
            SimParams { mass_density: 0.08, ..d },
            SimParams { mass_density: 0.16, ..d },
            SimParams { timescale: 0.5, ..d },
            SimParams { timescale: 1.5, ..d },
            SimParams { timescale: 2.0, ..d },
        ]
    }
}
