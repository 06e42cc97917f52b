//! Excited-state dipole–dipole potential U(R) = −C₃/R³ and the resonance
//! geometry it induces for a red-detuned mode.

use crate::constants::{PhysicalParams, HBAR};
use crate::error::{Error, Result};

fn check_radius(r: f64) -> Result<()> {
    if r.is_finite() && r > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "internuclear distance must be positive, got {r} cm"
        )))
    }
}

pub(crate) fn check_red_detuning(delta: f64) -> Result<()> {
    if delta.is_finite() && delta < 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "red detuning required (delta < 0), got {delta} rad/s"
        )))
    }
}

/// U(r) = −C₃/r³ in erg.
pub fn u_dd(r: f64, params: &PhysicalParams) -> Result<f64> {
    check_radius(r)?;
    Ok(-params.c3 / (r * r * r))
}

/// R-dependent transition frequency ω_R = ω_A + U(R)/ħ.
pub fn omega_r(r: f64, params: &PhysicalParams) -> Result<f64> {
    Ok(params.omega_a + u_dd(r, params)? / HBAR)
}

/// Condon radius where ω_R equals ω_A + δ: R_C = (C₃/ħ|δ|)^{1/3}.
pub fn condon_radius(delta: f64, params: &PhysicalParams) -> Result<f64> {
    check_red_detuning(delta)?;
    Ok((params.c3 / (HBAR * delta.abs())).cbrt())
}

/// |U′(r)| = 3C₃/r⁴.
pub fn potential_slope(r: f64, params: &PhysicalParams) -> Result<f64> {
    check_radius(r)?;
    let r2 = r * r;
    Ok(3.0 * params.c3 / (r2 * r2))
}

/// Ratio R_e/R_C = (1 + Ω̃/|δ|)^{−1/3}.
pub fn escape_ratio(delta: f64, omega_tilde: f64) -> Result<f64> {
    check_red_detuning(delta)?;
    if !(omega_tilde.is_finite() && omega_tilde >= 0.0) {
        return Err(Error::domain(format!(
            "collective coupling must be non-negative, got {omega_tilde} rad/s"
        )));
    }
    Ok((1.0 + omega_tilde / delta.abs()).cbrt().recip())
}

/// Resonance geometry at one detuning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonanceGeometry {
    /// δ = ω_c − ω_A (rad/s, negative).
    pub detuning: f64,
    /// R_C (cm).
    pub r_condon: f64,
    /// R_e (cm); the inner edge of the resonant region.
    pub r_escape: f64,
    /// R_e / R_C.
    pub r_ratio: f64,
}

impl ResonanceGeometry {
    pub fn new(delta: f64, omega_tilde: f64, params: &PhysicalParams) -> Result<Self> {
        let (r_escape, r_ratio) = escape_radius(delta, omega_tilde, params)?;
        Ok(ResonanceGeometry {
            detuning: delta,
            r_condon: r_escape / r_ratio,
            r_escape,
            r_ratio,
        })
    }
}

/// Escape radius R_e, where ω_R has dropped by Ω̃ below the mode frequency,
/// together with the ratio r = R_e/R_C.
pub fn escape_radius(delta: f64, omega_tilde: f64, params: &PhysicalParams) -> Result<(f64, f64)> {
    let ratio = escape_ratio(delta, omega_tilde)?;
    Ok((condon_radius(delta, params)? * ratio, ratio))
}
