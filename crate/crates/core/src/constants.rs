//! Physical constants, unit conversions and the resolved parameter set.
//!
//! Everything inside the library works in CGS-Gaussian units (erg, cm, s,
//! rad/s, g). Human-facing quantities (nm, MHz, amu, erg·Å³, mK) are
//! converted exactly once, in [`PhysicalParams::resolve`].
//!
//! | constant | value | unit |
//! |----------|-------|------|
//! | ħ        | 1.054571817e-27 | erg·s |
//! | c        | 2.99792458e10   | cm/s |
//! | amu      | 1.66053906660e-24 | g |
//! | k_B      | 1.380649e-16    | erg/K |
//!
//! Values are CODATA 2018; c, h and k_B are exact in SI.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reduced Planck constant (erg·s).
pub const HBAR: f64 = 1.054_571_817e-27;
/// Speed of light (cm/s).
pub const C_LIGHT: f64 = 2.997_924_58e10;
/// Atomic mass unit (g).
pub const AMU: f64 = 1.660_539_066_60e-24;
/// Boltzmann constant (erg/K).
pub const K_B: f64 = 1.380_649e-16;

pub const CM_PER_NM: f64 = 1e-7;
pub const CM_PER_ANGSTROM: f64 = 1e-8;
pub const CM3_PER_ANGSTROM3: f64 = 1e-24;

/// Mass of ⁸⁵Rb in amu.
pub const RB85_MASS_AMU: f64 = 84.911_789_738;

/// Converts an ordinary frequency in MHz to an angular frequency in rad/s.
#[inline]
pub fn mhz_to_angular(mhz: f64) -> f64 {
    2.0 * PI * mhz * 1e6
}

/// Inverse of [`mhz_to_angular`].
#[inline]
pub fn angular_to_mhz(omega: f64) -> f64 {
    omega / (2.0 * PI * 1e6)
}

/// How the trap depth V₀ is specified.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrapDepth {
    /// V₀ / k_B in mK.
    Millikelvin(f64),
    /// 2V₀ / h in MHz.
    TwiceDepthMhz(f64),
}

/// Species and potential constants in laboratory units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeciesUnits {
    pub mass_amu: f64,
    pub lambda_nm: f64,
    /// Γ_A / 2π in MHz.
    pub gamma_a_mhz: f64,
    pub c3_erg_ang3: f64,
    pub trap_depth: TrapDepth,
}

impl SpeciesUnits {
    /// ⁸⁵Rb on the 5S₁/₂ → 5P₁/₂ line with a 5 mK trap.
    pub fn rb85() -> Self {
        SpeciesUnits {
            mass_amu: RB85_MASS_AMU,
            lambda_nm: 795.0,
            gamma_a_mhz: 6.0,
            c3_erg_ang3: 11e-11,
            trap_depth: TrapDepth::Millikelvin(5.0),
        }
    }
}

impl Default for SpeciesUnits {
    fn default() -> Self {
        Self::rb85()
    }
}

/// Resolved species constants in CGS-Gaussian units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    /// Atomic transition angular frequency ω_A (rad/s).
    pub omega_a: f64,
    /// Atomic decay rate Γ_A (rad/s).
    pub gamma_a: f64,
    /// Quasimolecule decay rate Γ = 2Γ_A (rad/s).
    pub gamma_mol: f64,
    /// Single-atom mass (g).
    pub mass_atom: f64,
    /// Reduced mass of an identical pair (g).
    pub mu: f64,
    /// Dipole–dipole coefficient C₃ (erg·cm³).
    pub c3: f64,
    /// Trap depth V₀ (erg).
    pub trap_depth: f64,
    trap_depth_input: TrapDepthKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TrapDepthKind {
    Millikelvin,
    TwiceDepthMhz,
}

fn positive(field: &str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(Error::config(
            field,
            format!("must be a finite positive number, got {value}"),
        ))
    }
}

impl PhysicalParams {
    pub fn resolve(input: &SpeciesUnits) -> Result<Self> {
        let mass_amu = positive("species.mass_amu", input.mass_amu)?;
        let lambda_nm = positive("species.lambda_nm", input.lambda_nm)?;
        let gamma_a_mhz = positive("species.gamma_a_mhz", input.gamma_a_mhz)?;
        let c3 = positive("species.c3_erg_ang3", input.c3_erg_ang3)?;

        let (trap_depth, trap_depth_input) = match input.trap_depth {
            TrapDepth::Millikelvin(mk) => (
                K_B * positive("species.trap_depth_mk", mk)? * 1e-3,
                TrapDepthKind::Millikelvin,
            ),
            TrapDepth::TwiceDepthMhz(mhz) => (
                0.5 * HBAR * mhz_to_angular(positive("species.trap_depth_mhz", mhz)?),
                TrapDepthKind::TwiceDepthMhz,
            ),
        };

        let gamma_a = mhz_to_angular(gamma_a_mhz);
        let mass_atom = mass_amu * AMU;
        Ok(PhysicalParams {
            omega_a: 2.0 * PI * C_LIGHT / (lambda_nm * CM_PER_NM),
            gamma_a,
            gamma_mol: 2.0 * gamma_a,
            mass_atom,
            mu: mass_atom / 2.0,
            c3: c3 * CM3_PER_ANGSTROM3,
            trap_depth,
            trap_depth_input,
        })
    }

    /// Converts back to laboratory units, in the same trap-depth form the
    /// parameters were resolved from.
    pub fn to_units(&self) -> SpeciesUnits {
        let trap_depth = match self.trap_depth_input {
            TrapDepthKind::Millikelvin => TrapDepth::Millikelvin(self.trap_depth / K_B * 1e3),
            TrapDepthKind::TwiceDepthMhz => {
                TrapDepth::TwiceDepthMhz(angular_to_mhz(2.0 * self.trap_depth / HBAR))
            }
        };
        SpeciesUnits {
            mass_amu: self.mass_atom / AMU,
            lambda_nm: 2.0 * PI * C_LIGHT / self.omega_a / CM_PER_NM,
            gamma_a_mhz: angular_to_mhz(self.gamma_a),
            c3_erg_ang3: self.c3 / CM3_PER_ANGSTROM3,
            trap_depth,
        }
    }

    /// Transition wavelength λ_A (cm).
    pub fn wavelength(&self) -> f64 {
        2.0 * PI * C_LIGHT / self.omega_a
    }

    /// Collective coupling that puts cavity emission exactly on the trap
    /// depth, ħΩ̃ = 2V₀ (rad/s).
    pub fn resonant_omega_tilde(&self) -> f64 {
        2.0 * self.trap_depth / HBAR
    }
}
