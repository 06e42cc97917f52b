//! Classical in-fall times on the attractive −C₃/R³ curve.
//!
//! A pair starting at rest at R_C takes t₀(δ) to reach R = 0. The share of
//! that time spent in the resonant region R_e < R < R_C is
//!
//! ```text
//! f = (1/g₀) ∫_r^1 du / sqrt(u⁻³ − 1),   r = R_e/R_C,
//! ```
//!
//! with g₀ the same integral taken from 0. The integrand diverges like
//! (1 − u)^{−1/2} at u = 1; after u = 1 − s² it becomes
//! 2(1 − s²)^{3/2} / sqrt(3 − 3s² + s⁴), which is smooth on [0, 1].

use std::sync::OnceLock;

use crate::constants::{PhysicalParams, HBAR};
use crate::error::Result;
use crate::potential::{check_red_detuning, ResonanceGeometry};
use crate::quadrature::{self, QuadResult};

/// Absolute tolerance used for every resonant-fraction integral.
pub const QUAD_TOL: f64 = 1e-10;

/// Regularized integrand in the s variable.
#[inline]
pub fn regularized_integrand(s: f64) -> f64 {
    let x = s * s;
    let one_minus = 1.0 - x;
    2.0 * one_minus * one_minus.sqrt() / (3.0 - 3.0 * x + x * x).sqrt()
}

/// ∫_r^1 du / sqrt(u⁻³ − 1) at the given absolute tolerance.
pub fn resonant_integral(r: f64, abs_tol: f64) -> Result<QuadResult> {
    let upper = (1.0 - r.clamp(0.0, 1.0)).sqrt();
    quadrature::integrate(regularized_integrand, 0.0, upper, abs_tol)
}

/// g₀ = ∫₀¹ du / sqrt(u⁻³ − 1) ≈ 0.74683.
pub fn g0_constant() -> f64 {
    static G0: OnceLock<f64> = OnceLock::new();
    *G0.get_or_init(|| {
        resonant_integral(0.0, QUAD_TOL)
            .expect("g0 integrand is smooth on [0, 1]")
            .value
    })
}

/// Fraction of t₀ spent between R_e and R_C for a given ratio r = R_e/R_C,
/// normalized by `g0`.
pub fn fraction_for_ratio(r: f64, g0: f64) -> Result<f64> {
    Ok(resonant_integral(r, QUAD_TOL)?.value / g0)
}

/// f(δ, Ω̃).
pub fn fraction_f(delta: f64, omega_tilde: f64) -> Result<f64> {
    let r = crate::potential::escape_ratio(delta, omega_tilde)?;
    fraction_for_ratio(r, g0_constant())
}

/// t₀(δ) = g₀ (μ/2C₃)^{1/2} (C₃/ħ|δ|)^{5/6}.
pub fn total_time(delta: f64, params: &PhysicalParams) -> Result<f64> {
    check_red_detuning(delta)?;
    Ok(g0_constant()
        * (params.mu / (2.0 * params.c3)).sqrt()
        * (params.c3 / (HBAR * delta.abs())).powf(5.0 / 6.0))
}

/// Time bundle for one detuning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollisionTimes {
    /// t₀, from R_C to R = 0 (s).
    pub t_total: f64,
    /// f = t_c / t₀ (for t′ = 0).
    pub frac_resonant: f64,
    /// t_c, between R′ and R_C (s).
    pub t_resonant: f64,
    /// t_e, between R = 0 and R_e (s).
    pub t_escape_region: f64,
    /// t′, between R_e and R′ (s). Zero unless set explicitly.
    pub t_prime: f64,
    pub geometry: ResonanceGeometry,
}

impl CollisionTimes {
    /// Builds a bundle from explicit segment durations. t₀ is their sum.
    pub fn from_segments(
        t_resonant: f64,
        t_prime: f64,
        t_escape_region: f64,
        geometry: ResonanceGeometry,
    ) -> Self {
        let t_total = t_resonant + t_prime + t_escape_region;
        CollisionTimes {
            t_total,
            frac_resonant: if t_total > 0.0 { t_resonant / t_total } else { 0.0 },
            t_resonant,
            t_escape_region,
            t_prime,
            geometry,
        }
    }

    /// Accumulated Rabi phase Ω̃ t_c over the resonant region.
    pub fn phase(&self, omega_tilde: f64) -> f64 {
        omega_tilde * self.t_resonant
    }
}

/// Assembles t₀, f, t_c and t_e (t′ = 0) at one detuning.
pub fn collision_times(
    delta: f64,
    omega_tilde: f64,
    params: &PhysicalParams,
) -> Result<CollisionTimes> {
    let geometry = ResonanceGeometry::new(delta, omega_tilde, params)?;
    let t_total = total_time(delta, params)?;
    let f = fraction_for_ratio(geometry.r_ratio, g0_constant())?;
    let t_resonant = t_total * f;
    Ok(CollisionTimes {
        t_total,
        frac_resonant: f,
        t_resonant,
        t_escape_region: t_total - t_resonant,
        t_prime: 0.0,
        geometry,
    })
}

/// True when Ω̃ t_c exceeds a single Rabi cycle by more than `margin`
/// (relative), i.e. the neglected ω_R drift may no longer be small.
pub fn exceeds_single_cycle(phase: f64, margin: f64) -> bool {
    phase > 2.0 * std::f64::consts::PI * (1.0 + margin)
}
