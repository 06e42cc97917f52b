//! Cavity coupling chain: mode geometry → field per photon → dipole →
//! single-quasimolecule Rabi frequency Ω → pair count N(δ) → collective
//! coupling Ω̃(δ). Also the Landau–Zener excitation probability at R_C.

use std::f64::consts::PI;

use crate::constants::{PhysicalParams, C_LIGHT, HBAR};
use crate::error::{Error, Result};
use crate::potential::{check_red_detuning, condon_radius, potential_slope};

/// How Ω̃(δ) is obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CouplingMode {
    /// Ω̃(δ) = Ω̃_ref |δ_ref / δ|, pinned to a reference point.
    Anchored { omega_tilde_ref: f64, delta_ref: f64 },
    /// Ω̃(δ) = Ω √N(δ) from the mode volume and the gas.
    Microscopic,
}

impl CouplingMode {
    /// Ω̃/2π = 200 MHz at δ/2π = −350 MHz.
    pub fn default_anchor() -> Self {
        CouplingMode::Anchored {
            omega_tilde_ref: crate::constants::mhz_to_angular(200.0),
            delta_ref: crate::constants::mhz_to_angular(-350.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityConfig {
    /// Mirror separation l (cm).
    pub length: f64,
    /// Mode angular frequency ω_c (rad/s).
    pub omega_c: f64,
    /// Number of atoms in the mode volume N_A.
    pub n_atoms_total: f64,
    /// Atomic density n_A (cm⁻³).
    pub density: f64,
    pub coupling_mode: CouplingMode,
}

impl CavityConfig {
    /// 1 cm resonator tuned to the atomic line with a 2×10⁹ atom,
    /// 4×10¹³ cm⁻³ gas, anchored coupling.
    pub fn reference(params: &PhysicalParams) -> Self {
        CavityConfig {
            length: 1.0,
            omega_c: params.omega_a,
            n_atoms_total: 2.0e9,
            density: 4.0e13,
            coupling_mode: CouplingMode::default_anchor(),
        }
    }

    /// Same resonator retuned to ω_c = ω_A + δ.
    pub fn tuned(&self, delta: f64, params: &PhysicalParams) -> Self {
        CavityConfig {
            omega_c: params.omega_a + delta,
            ..*self
        }
    }

    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("cavity.length_cm", self.length),
            ("cavity.n_atoms", self.n_atoms_total),
            ("cavity.density_cm3", self.density),
        ];
        for (field, v) in checks {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(field, format!("must be positive, got {v}")));
            }
        }
        if let CouplingMode::Anchored { omega_tilde_ref, delta_ref } = self.coupling_mode {
            if !(omega_tilde_ref.is_finite() && omega_tilde_ref > 0.0) {
                return Err(Error::config(
                    "coupling.omega_tilde_ref_mhz",
                    format!("anchored coupling needs a positive reference, got {omega_tilde_ref}"),
                ));
            }
            if !(delta_ref.is_finite() && delta_ref < 0.0) {
                return Err(Error::config(
                    "coupling.delta_ref_mhz",
                    format!("anchored coupling needs a red reference detuning, got {delta_ref}"),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeGeometry {
    /// Waist w₀ (cm).
    pub waist: f64,
    /// Mode volume V (cm³).
    pub volume: f64,
}

/// w₀ = sqrt(c l / ω_c), V = π w₀² l.
pub fn mode_geometry(length: f64, omega_c: f64) -> Result<ModeGeometry> {
    if !(length > 0.0 && omega_c > 0.0) {
        return Err(Error::domain(format!(
            "mode geometry needs positive length and frequency, got l={length}, omega_c={omega_c}"
        )));
    }
    let waist = (C_LIGHT * length / omega_c).sqrt();
    Ok(ModeGeometry {
        waist,
        volume: PI * waist * waist * length,
    })
}

/// Gaussian-units field amplitude of one photon, (2πħω/V)^{1/2}.
pub fn field_per_photon(omega: f64, volume: f64) -> Result<f64> {
    if !(omega > 0.0 && volume > 0.0) {
        return Err(Error::domain(format!(
            "field per photon needs positive omega and volume, got {omega}, {volume}"
        )));
    }
    Ok((2.0 * PI * HBAR * omega / volume).sqrt())
}

/// Atomic transition dipole from Γ_A = 4 d_A² ω_A³ / 3ħc³ (esu·cm).
pub fn atomic_dipole(params: &PhysicalParams) -> f64 {
    (3.0 * HBAR * C_LIGHT.powi(3) * params.gamma_a / (4.0 * params.omega_a.powi(3))).sqrt()
}

/// Quasimolecule dipole d = √2 d_A.
pub fn molecular_dipole(params: &PhysicalParams) -> f64 {
    std::f64::consts::SQRT_2 * atomic_dipole(params)
}

/// Single-quasimolecule Rabi frequency from a field amplitude and dipole,
/// with the mode-profile and orientation averages fixed at 1/6.
pub fn rabi_from_field(field: f64, dipole: f64) -> f64 {
    field * dipole / (6f64.sqrt() * HBAR)
}

/// Averaged single-quasimolecule Rabi frequency Ω (rad/s).
pub fn single_rabi(config: &CavityConfig, params: &PhysicalParams) -> Result<f64> {
    let mode = mode_geometry(config.length, config.omega_c)?;
    let field = field_per_photon(config.omega_c, mode.volume)?;
    Ok(rabi_from_field(field, molecular_dipole(params)))
}

/// Number of resonant pairs N(δ) = N_A n_A (2πC₃/3ħΓ)(Γ/δ)², with Γ the
/// quasimolecule linewidth.
pub fn pair_count(delta: f64, config: &CavityConfig, params: &PhysicalParams) -> Result<f64> {
    check_red_detuning(delta)?;
    let gamma = params.gamma_mol;
    Ok(config.n_atoms_total
        * config.density
        * (2.0 * PI * params.c3 / (3.0 * HBAR * gamma))
        * (gamma / delta).powi(2))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CouplingPoint {
    pub delta: f64,
    /// Ω (rad/s).
    pub omega_single: f64,
    /// N; back-filled as (Ω̃/Ω)² in anchored mode.
    pub n_pairs: f64,
    /// Ω̃ (rad/s).
    pub omega_tilde: f64,
}

/// Collective coupling at detuning δ, with the mode retuned to ω_A + δ.
pub fn collective_rabi(
    delta: f64,
    config: &CavityConfig,
    params: &PhysicalParams,
) -> Result<CouplingPoint> {
    check_red_detuning(delta)?;
    config.validate()?;
    let omega_single = single_rabi(&config.tuned(delta, params), params)?;
    let (n_pairs, omega_tilde) = match config.coupling_mode {
        CouplingMode::Microscopic => {
            let n = pair_count(delta, config, params)?;
            (n, omega_single * n.sqrt())
        }
        CouplingMode::Anchored { omega_tilde_ref, delta_ref } => {
            let ot = omega_tilde_ref * (delta_ref / delta).abs();
            ((ot / omega_single).powi(2), ot)
        }
    };
    Ok(CouplingPoint { delta, omega_single, n_pairs, omega_tilde })
}

/// Landau–Zener adiabaticity parameter Δ̃ = ħΩ̃² / (v∞ |U′(R_C)|).
pub fn landau_zener_parameter(
    delta: f64,
    omega_tilde: f64,
    v_inf: f64,
    params: &PhysicalParams,
) -> Result<f64> {
    if !(v_inf.is_finite() && v_inf > 0.0) {
        return Err(Error::domain(format!("relative velocity must be positive, got {v_inf} cm/s")));
    }
    let slope = potential_slope(condon_radius(delta, params)?, params)?;
    Ok(HBAR * omega_tilde * omega_tilde / (v_inf * slope))
}

/// Excitation probability P_E = 1 − exp(−2πΔ̃) for passage through R_C.
pub fn landau_zener(
    delta: f64,
    omega_tilde: f64,
    v_inf: f64,
    params: &PhysicalParams,
) -> Result<f64> {
    let adiabaticity = landau_zener_parameter(delta, omega_tilde, v_inf, params)?;
    Ok(-(-2.0 * PI * adiabaticity).exp_m1())
}
