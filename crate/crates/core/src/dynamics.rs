//! Dissipative dynamics in the one-excitation subspace {|E,0⟩, |G,1⟩} plus
//! the decay sink |V⟩ = |G,0⟩, in the interaction picture.
//!
//! The equations of motion are
//!
//! ```text
//! ṗ_E  = −Γ p_E + iΩ̃ (c_EG − c_EG*)
//! ṗ_G  = −iΩ̃ (c_EG − c_EG*)
//! ṗ_V  =  Γ p_E
//! ċ_EG = −(Γ/2) c_EG + iΩ̃ (p_E − p_G)
//! ċ_EV = −(Γ/2) c_EV − iΩ̃ c_GV
//! ċ_GV = −iΩ̃ c_EV
//! ```
//!
//! and for ρ(0) = |E,0⟩⟨E,0| the excited population has the closed form
//! p_Ω(t) = e^{−Γt/2} (cos βt − (Γ/4β) sin βt)², β² = Ω̃² − (Γ/4)².

use num_complex::Complex64;

use crate::error::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedState {
    pub p_e: f64,
    pub p_g: f64,
    pub p_v: f64,
    pub c_eg: Complex64,
    pub c_ev: Complex64,
    pub c_gv: Complex64,
}

impl ReducedState {
    /// |E,0⟩⟨E,0|.
    pub fn excited() -> Self {
        ReducedState {
            p_e: 1.0,
            p_g: 0.0,
            p_v: 0.0,
            c_eg: Complex64::new(0.0, 0.0),
            c_ev: Complex64::new(0.0, 0.0),
            c_gv: Complex64::new(0.0, 0.0),
        }
    }

    pub fn trace(&self) -> f64 {
        self.p_e + self.p_g + self.p_v
    }

    fn add_scaled(&self, k: &ReducedState, h: f64) -> ReducedState {
        ReducedState {
            p_e: self.p_e + h * k.p_e,
            p_g: self.p_g + h * k.p_g,
            p_v: self.p_v + h * k.p_v,
            c_eg: self.c_eg + k.c_eg * h,
            c_ev: self.c_ev + k.c_ev * h,
            c_gv: self.c_gv + k.c_gv * h,
        }
    }
}

/// Time derivative of the reduced state.
pub fn master_rhs(s: &ReducedState, omega_tilde: f64, gamma: f64) -> ReducedState {
    // iΩ̃(c − c*) = iΩ̃·2i Im c = −2Ω̃ Im c
    let exchange = -2.0 * omega_tilde * s.c_eg.im;
    ReducedState {
        p_e: -gamma * s.p_e + exchange,
        p_g: -exchange,
        p_v: gamma * s.p_e,
        c_eg: -0.5 * gamma * s.c_eg + I * omega_tilde * (s.p_e - s.p_g),
        c_ev: -0.5 * gamma * s.c_ev - I * omega_tilde * s.c_gv,
        c_gv: -I * omega_tilde * s.c_ev,
    }
}

fn rk4_step(s: &ReducedState, h: f64, omega_tilde: f64, gamma: f64) -> ReducedState {
    let k1 = master_rhs(s, omega_tilde, gamma);
    let k2 = master_rhs(&s.add_scaled(&k1, 0.5 * h), omega_tilde, gamma);
    let k3 = master_rhs(&s.add_scaled(&k2, 0.5 * h), omega_tilde, gamma);
    let k4 = master_rhs(&s.add_scaled(&k3, h), omega_tilde, gamma);
    ReducedState {
        p_e: s.p_e + h / 6.0 * (k1.p_e + 2.0 * k2.p_e + 2.0 * k3.p_e + k4.p_e),
        p_g: s.p_g + h / 6.0 * (k1.p_g + 2.0 * k2.p_g + 2.0 * k3.p_g + k4.p_g),
        p_v: s.p_v + h / 6.0 * (k1.p_v + 2.0 * k2.p_v + 2.0 * k3.p_v + k4.p_v),
        c_eg: s.c_eg + (k1.c_eg + k2.c_eg * 2.0 + k3.c_eg * 2.0 + k4.c_eg) * (h / 6.0),
        c_ev: s.c_ev + (k1.c_ev + k2.c_ev * 2.0 + k3.c_ev * 2.0 + k4.c_ev) * (h / 6.0),
        c_gv: s.c_gv + (k1.c_gv + k2.c_gv * 2.0 + k3.c_gv * 2.0 + k4.c_gv) * (h / 6.0),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegimeKind {
    Underdamped,
    Critical,
    Overdamped,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RabiRegime {
    /// |β| = sqrt|Ω̃² − (Γ/4)²| (rad/s).
    pub beta: f64,
    pub kind: RegimeKind,
}

/// Half-width of the critical band, in units of Γ.
pub const CRITICAL_BAND: f64 = 1e-6;

pub fn rabi_regime(omega_tilde: f64, gamma: f64) -> RabiRegime {
    let q = 0.25 * gamma;
    let beta = ((omega_tilde - q) * (omega_tilde + q)).abs().sqrt();
    let kind = if (omega_tilde - q).abs() < CRITICAL_BAND * gamma {
        RegimeKind::Critical
    } else if omega_tilde > q {
        RegimeKind::Underdamped
    } else {
        RegimeKind::Overdamped
    };
    RabiRegime { beta, kind }
}

/// Largest step accepted by [`integrate_master`] without an override:
/// 1/200 of the period 2π / max(|β|, Γ).
pub fn max_stable_step(omega_tilde: f64, gamma: f64) -> f64 {
    let rate = rabi_regime(omega_tilde, gamma).beta.max(gamma);
    if rate > 0.0 {
        2.0 * std::f64::consts::PI / rate / 200.0
    } else {
        f64::INFINITY
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOptions {
    /// Record every n-th step (the final step is always recorded).
    pub sample_every: usize,
    /// Accept a step larger than [`max_stable_step`].
    pub allow_large_step: bool,
}

impl Default for StepOptions {
    fn default() -> Self {
        StepOptions { sample_every: 1, allow_large_step: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<ReducedState>,
    /// Step actually used, t_end / n ≤ requested dt.
    pub step: f64,
    /// max |tr ρ − 1| over every step, not only the recorded ones.
    pub max_trace_error: f64,
}

/// Fixed-step classical RK4 from `initial` to `t_end`. `observe` is called at
/// t = 0 and after every step.
pub fn evolve<F>(
    initial: &ReducedState,
    omega_tilde: f64,
    gamma: f64,
    t_end: f64,
    dt: f64,
    allow_large_step: bool,
    mut observe: F,
) -> Result<f64>
where
    F: FnMut(f64, &ReducedState),
{
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Parameter(format!("step must be positive, got {dt}")));
    }
    if !(t_end.is_finite() && t_end >= 0.0) {
        return Err(Error::Parameter(format!("end time must be non-negative, got {t_end}")));
    }
    let limit = max_stable_step(omega_tilde, gamma);
    if dt > limit && !allow_large_step {
        return Err(Error::Parameter(format!(
            "step {dt:e} s exceeds the stability limit {limit:e} s (1/200 of the fastest period)"
        )));
    }
    let n = ((t_end / dt) * (1.0 - 1e-12)).ceil().max(if t_end > 0.0 { 1.0 } else { 0.0 }) as usize;
    let h = if n > 0 { t_end / n as f64 } else { 0.0 };

    let mut state = *initial;
    observe(0.0, &state);
    for k in 1..=n {
        state = rk4_step(&state, h, omega_tilde, gamma);
        let t = if k == n { t_end } else { k as f64 * h };
        observe(t, &state);
    }
    Ok(h)
}

/// Integrates the master equation and returns sampled states.
pub fn integrate_master(
    initial: &ReducedState,
    omega_tilde: f64,
    gamma: f64,
    t_end: f64,
    dt: f64,
    options: StepOptions,
) -> Result<Trajectory> {
    let every = options.sample_every.max(1);
    let mut times = Vec::new();
    let mut states = Vec::new();
    let mut last = (0.0, *initial);
    let mut max_trace_error: f64 = 0.0;
    let mut count = 0usize;
    let step = evolve(
        initial,
        omega_tilde,
        gamma,
        t_end,
        dt,
        options.allow_large_step,
        |t, s| {
            max_trace_error = max_trace_error.max((s.trace() - 1.0).abs());
            if count.is_multiple_of(every) {
                times.push(t);
                states.push(*s);
            }
            last = (t, *s);
            count += 1;
        },
    )?;
    if !(count - 1).is_multiple_of(every) {
        times.push(last.0);
        states.push(last.1);
    }
    Ok(Trajectory { times, states, step, max_trace_error })
}

// Series threshold on |β²| t².
const SERIES_LIMIT: f64 = 0.25;

/// cos βt and sin(βt)/β as entire functions of z = β², so that the
/// overdamped (z < 0) and critical (z ≈ 0) cases need no special branch.
fn cos_sinc_series(z: f64, t: f64) -> (f64, f64) {
    let x = -z * t * t;
    let mut c_term = 1.0;
    let mut s_term = t;
    let mut c = c_term;
    let mut s = s_term;
    for k in 1..=12 {
        let k = k as f64;
        c_term *= x / ((2.0 * k - 1.0) * (2.0 * k));
        s_term *= x / ((2.0 * k) * (2.0 * k + 1.0));
        c += c_term;
        s += s_term;
    }
    (c, s)
}

/// Excited-state survival p_Ω(t) for ρ(0) = |E,0⟩⟨E,0|, valid in every
/// damping regime.
pub fn p_omega_analytic(t: f64, omega_tilde: f64, gamma: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::domain(format!("time must be non-negative, got {t}")));
    }
    if !(gamma >= 0.0) {
        return Err(Error::domain(format!("decay rate must be non-negative, got {gamma}")));
    }
    if omega_tilde == 0.0 {
        return Ok((-gamma * t).exp());
    }
    let q = 0.25 * gamma;
    let z = (omega_tilde - q) * (omega_tilde + q);
    if z.abs() * t * t <= SERIES_LIMIT {
        let (c, s) = cos_sinc_series(z, t);
        let amp = c - q * s;
        return Ok((-0.5 * gamma * t).exp() * amp * amp);
    }
    if z > 0.0 {
        let beta = z.sqrt();
        let amp = (beta * t).cos() - q / beta * (beta * t).sin();
        Ok((-0.5 * gamma * t).exp() * amp * amp)
    } else {
        // cosh x − a sinh x with the e^{−Γt/4} envelope folded in.
        let b = (-z).sqrt();
        let a = q / b;
        let amp = 0.5 * ((1.0 - a) * ((b - q) * t).exp() + (1.0 + a) * (-(b + q) * t).exp());
        Ok(amp * amp)
    }
}

/// p_Ω(t) ≈ e^{−Γt/2} cos²(Ω̃t), the β ≈ Ω̃ form without the sine term.
pub fn p_omega_approx(t: f64, omega_tilde: f64, gamma: f64) -> f64 {
    let c = (omega_tilde * t).cos();
    (-0.5 * gamma * t).exp() * c * c
}

/// Free-space survival e^{−Γt}.
pub fn p_pure_decay(t: f64, gamma: f64) -> f64 {
    (-gamma * t).exp()
}
