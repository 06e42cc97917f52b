//! A complete run description in library units, independent of any file
//! format.

use crate::cavity::{CavityConfig, CouplingMode};
use crate::constants::{PhysicalParams, SpeciesUnits};
use crate::error::Result;
use crate::traploss::ScanConfig;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavitySetup {
    /// Mirror separation (cm).
    pub length: f64,
    pub n_atoms_total: f64,
    /// cm⁻³.
    pub density: f64,
    pub coupling_mode: CouplingMode,
}

impl Default for CavitySetup {
    fn default() -> Self {
        CavitySetup {
            length: 1.0,
            n_atoms_total: 2.0e9,
            density: 4.0e13,
            coupling_mode: CouplingMode::default_anchor(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Setup {
    pub species: SpeciesUnits,
    pub cavity: CavitySetup,
    pub scan: ScanConfig,
}

impl Setup {
    pub fn params(&self) -> Result<PhysicalParams> {
        PhysicalParams::resolve(&self.species)
    }

    /// Cavity tuned to the bare atomic line; callers retune per detuning.
    pub fn cavity_config(&self, params: &PhysicalParams) -> Result<CavityConfig> {
        let cfg = CavityConfig {
            length: self.cavity.length,
            omega_c: params.omega_a,
            n_atoms_total: self.cavity.n_atoms_total,
            density: self.cavity.density,
            coupling_mode: self.cavity.coupling_mode,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn resolve(&self) -> Result<(PhysicalParams, CavityConfig)> {
        let params = self.params()?;
        let cavity = self.cavity_config(&params)?;
        Ok((params, cavity))
    }
}
