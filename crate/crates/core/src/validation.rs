//! Self-check suite: every module invariant, evaluated on a user setup.
//!
//! Each check yields a named pass/fail [`CheckOutcome`]. A configuration
//! that cannot be resolved still runs as many checks as possible so the
//! report shows which modules are affected.

use std::f64::consts::PI;

use crate::cavity::{collective_rabi, CavityConfig, CouplingMode};
use crate::constants::{PhysicalParams, SpeciesUnits, HBAR};
use crate::dynamics::{self, ReducedState};
use crate::error::Error;
use crate::kinematics::{self, collision_times, fraction_for_ratio};
use crate::potential::{condon_radius, escape_radius, u_dd};
use crate::setup::Setup;
use crate::traploss::{self, SurvivalKernel};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SuiteOptions {
    /// Replace g₀ in the resonant-fraction normalization (mutation testing).
    pub g0_override: Option<f64>,
    /// Points of the detuning grid used by grid-based checks; defaults to the
    /// setup's scan.
    pub grid_points: Option<usize>,
}

pub struct Report {
    pub outcomes: Vec<CheckOutcome>,
}

impl Report {
    pub fn all_passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckOutcome> {
        self.outcomes.iter().filter(|o| !o.passed)
    }
}

type CheckResult = std::result::Result<String, String>;
type Check = (&'static str, fn(&Ctx) -> CheckResult);

struct Ctx {
    setup: Setup,
    params: PhysicalParams,
    cavity: CavityConfig,
    g0: f64,
    grid: Vec<f64>,
}

fn err_text(e: Error) -> String {
    e.to_string()
}

/// Resolves with Γ_A temporarily replaced so that the remaining checks can
/// still run; the configured Γ is patched back in afterwards.
fn lenient_params(species: &SpeciesUnits) -> Option<PhysicalParams> {
    let mut s = *species;
    let raw_gamma = s.gamma_a_mhz;
    s.gamma_a_mhz = 1.0;
    let mut p = PhysicalParams::resolve(&s).ok()?;
    if raw_gamma.is_finite() {
        p.gamma_a = crate::constants::mhz_to_angular(raw_gamma);
        p.gamma_mol = 2.0 * p.gamma_a;
    }
    Some(p)
}

pub fn run_suite(setup: &Setup, opts: &SuiteOptions) -> Report {
    let mut outcomes = Vec::new();
    let mut push = |name: &'static str, r: CheckResult| {
        let (passed, detail) = match r {
            Ok(d) => (true, d),
            Err(d) => (false, d),
        };
        outcomes.push(CheckOutcome { name, passed, detail });
    };

    let strict = setup.resolve();
    push(
        "config.resolve",
        strict.as_ref().map(|_| "configuration resolved".to_string()).map_err(|e| e.to_string()),
    );

    let params = match strict {
        Ok((p, _)) => Some(p),
        Err(_) => lenient_params(&setup.species),
    };
    let Some(params) = params else {
        push("suite", Err("species section unusable; remaining checks skipped".into()));
        return Report { outcomes };
    };
    let cavity = match setup.cavity_config(&params) {
        Ok(c) => c,
        Err(e) => {
            push("suite", Err(format!("{e}; remaining checks skipped")));
            return Report { outcomes };
        }
    };
    let mut scan = setup.scan;
    if let Some(n) = opts.grid_points {
        scan.points = n;
    }
    if let Err(e) = scan.validate() {
        push("scan.config", Err(e.to_string()));
        scan = traploss::ScanConfig::default();
    }
    let ctx = Ctx {
        setup: *setup,
        params,
        cavity,
        g0: opts.g0_override.unwrap_or_else(kinematics::g0_constant),
        grid: scan.grid(),
    };

    let checks: [Check; 19] = [
        ("constants.round_trip", check_round_trip),
        ("constants.molecular_rate", check_molecular_rate),
        ("potential.condon_condition", check_condon_condition),
        ("potential.escape_shift", check_escape_shift),
        ("potential.condon_monotone", check_condon_monotone),
        ("kinematics.g0_reference", check_g0_reference),
        ("kinematics.f_normalization", check_f_normalization),
        ("kinematics.time_split", check_time_split),
        ("kinematics.monotonicity", check_kinematic_monotonicity),
        ("kinematics.phase_bound", check_phase_bound),
        ("cavity.coupling_scaling", check_coupling_scaling),
        ("dynamics.analytic_agreement", check_dynamics),
        ("dynamics.critical_continuity", check_critical_continuity),
        ("traploss.series_closed_form", check_series),
        ("traploss.no_cavity_identity", check_no_cavity_identity),
        ("traploss.envelope", check_envelope),
        ("traploss.bounds", check_bounds),
        ("traploss.minima_alignment", check_minima_alignment),
        ("traploss.divergence_guard", check_divergence_guard),
    ];
    for (name, check) in checks {
        push(name, check(&ctx));
    }
    Report { outcomes }
}

fn rel(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        a.abs()
    } else {
        ((a - b) / b).abs()
    }
}

fn omega_tilde_at(ctx: &Ctx, delta: f64) -> Result<f64, String> {
    collective_rabi(delta, &ctx.cavity, &ctx.params)
        .map(|c| c.omega_tilde)
        .map_err(err_text)
}

fn check_round_trip(ctx: &Ctx) -> CheckResult {
    let back = ctx.params.to_units();
    let s = &ctx.setup.species;
    let worst = [
        rel(back.mass_amu, s.mass_amu),
        rel(back.lambda_nm, s.lambda_nm),
        rel(back.c3_erg_ang3, s.c3_erg_ang3),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    if worst < 1e-12 {
        Ok(format!("max relative deviation {worst:.3e}"))
    } else {
        Err(format!("unit round trip deviates by {worst:.3e}"))
    }
}

fn check_molecular_rate(ctx: &Ctx) -> CheckResult {
    let p = &ctx.params;
    if p.gamma_mol == 2.0 * p.gamma_a && p.mu == p.mass_atom / 2.0 {
        Ok("Γ = 2Γ_A, μ = m/2".into())
    } else {
        Err("derived rates or reduced mass inconsistent".into())
    }
}

fn check_condon_condition(ctx: &Ctx) -> CheckResult {
    let mut worst: f64 = 0.0;
    for &d in &ctx.grid {
        let rc = condon_radius(d, &ctx.params).map_err(err_text)?;
        let u = u_dd(rc, &ctx.params).map_err(err_text)?;
        worst = worst.max(rel(u, HBAR * d));
    }
    if worst <= 1e-12 {
        Ok(format!("max relative error {worst:.3e}"))
    } else {
        Err(format!("U(R_C) − ħδ relative error {worst:.3e} > 1e-12"))
    }
}

fn check_escape_shift(ctx: &Ctx) -> CheckResult {
    let mut worst: f64 = 0.0;
    for &d in &ctx.grid {
        let ot = omega_tilde_at(ctx, d)?;
        let (re, _) = escape_radius(d, ot, &ctx.params).map_err(err_text)?;
        let rc = condon_radius(d, &ctx.params).map_err(err_text)?;
        let shift = (u_dd(re, &ctx.params).map_err(err_text)? - u_dd(rc, &ctx.params).map_err(err_text)?) / HBAR;
        worst = worst.max(rel(shift, -ot));
    }
    if worst <= 1e-12 {
        Ok(format!("max relative error {worst:.3e}"))
    } else {
        Err(format!("ω_R(R_e) − ω_R(R_C) + Ω̃ relative error {worst:.3e}"))
    }
}

fn check_condon_monotone(ctx: &Ctx) -> CheckResult {
    let radii: Vec<f64> = ctx
        .grid
        .iter()
        .map(|&d| condon_radius(d, &ctx.params))
        .collect::<Result<_, _>>()
        .map_err(err_text)?;
    // grid ascends in δ, i.e. descends in |δ|
    if radii.windows(2).all(|w| w[1] > w[0]) {
        Ok("R_C strictly decreasing in |δ|".into())
    } else {
        Err("R_C not monotone in |δ|".into())
    }
}

fn check_g0_reference(ctx: &Ctx) -> CheckResult {
    if (ctx.g0 - 0.746).abs() <= 1e-3 {
        Ok(format!("g0 = {:.6}", ctx.g0))
    } else {
        Err(format!("g0 = {:.6} outside 0.746 ± 0.001", ctx.g0))
    }
}

fn check_f_normalization(ctx: &Ctx) -> CheckResult {
    let f0 = fraction_for_ratio(0.0, ctx.g0).map_err(err_text)?;
    if (f0 - 1.0).abs() <= 1e-9 {
        Ok(format!("f(r→0) − 1 = {:.3e}", f0 - 1.0))
    } else {
        Err(format!("f(r→0) = {f0:.9}, normalization broken"))
    }
}

fn check_time_split(ctx: &Ctx) -> CheckResult {
    for &d in &ctx.grid {
        let ot = omega_tilde_at(ctx, d)?;
        let t = collision_times(d, ot, &ctx.params).map_err(err_text)?;
        if rel(t.t_resonant + t.t_prime + t.t_escape_region, t.t_total) > 1e-14 {
            return Err(format!("t_c + t′ + t_e ≠ t₀ at δ = {d:e}"));
        }
        if !(0.0..=1.0).contains(&t.frac_resonant) || t.t_resonant < 0.0 || t.t_escape_region < 0.0 {
            return Err(format!("fraction or times out of range at δ = {d:e}"));
        }
    }
    Ok(format!("{} points", ctx.grid.len()))
}

fn check_kinematic_monotonicity(ctx: &Ctx) -> CheckResult {
    let t0: Vec<f64> = ctx
        .grid
        .iter()
        .map(|&d| kinematics::total_time(d, &ctx.params))
        .collect::<Result<_, _>>()
        .map_err(err_text)?;
    if !t0.windows(2).all(|w| w[1] > w[0]) {
        return Err("t₀ not strictly decreasing in |δ|".into());
    }
    let d = ctx.grid[ctx.grid.len() / 2];
    let mut prev = -1.0;
    for k in 1..=20 {
        let ot = d.abs() * 0.02 * k as f64;
        let r = crate::potential::escape_ratio(d, ot).map_err(err_text)?;
        let f = fraction_for_ratio(r, ctx.g0).map_err(err_text)?;
        if f <= prev {
            return Err("f not strictly increasing in Ω̃".into());
        }
        prev = f;
    }
    Ok("t₀ decreasing in |δ|, f increasing in Ω̃".into())
}

fn check_phase_bound(ctx: &Ctx) -> CheckResult {
    let mut flagged = 0;
    let mut max_phase: f64 = 0.0;
    for &d in &ctx.grid {
        let ot = omega_tilde_at(ctx, d)?;
        let t = collision_times(d, ot, &ctx.params).map_err(err_text)?;
        let ph = t.phase(ot);
        max_phase = max_phase.max(ph);
        if kinematics::exceeds_single_cycle(ph, 0.0) {
            flagged += 1;
        }
    }
    // informational: exceeding one cycle is flagged, not failed
    Ok(format!(
        "max Ω̃t_c = {:.4}π; {flagged} of {} points beyond one cycle",
        max_phase / PI,
        ctx.grid.len()
    ))
}

fn check_coupling_scaling(ctx: &Ctx) -> CheckResult {
    let micro = CavityConfig { coupling_mode: CouplingMode::Microscopic, ..ctx.cavity };
    let mut worst_identity: f64 = 0.0;
    let mut products = Vec::new();
    for &d in &ctx.grid {
        let c = collective_rabi(d, &micro, &ctx.params).map_err(err_text)?;
        worst_identity = worst_identity.max(rel(c.n_pairs * c.omega_single.powi(2), c.omega_tilde.powi(2)));
        let a = collective_rabi(d, &ctx.cavity, &ctx.params).map_err(err_text)?;
        products.push(a.omega_tilde * d.abs());
    }
    if worst_identity > 1e-12 {
        return Err(format!("Ω̃² − NΩ² relative error {worst_identity:.3e}"));
    }
    if let CouplingMode::Anchored { .. } = ctx.cavity.coupling_mode {
        let worst = products.iter().map(|&p| rel(p, products[0])).fold(0.0, f64::max);
        if worst > 1e-12 {
            return Err(format!("Ω̃|δ| varies by {worst:.3e} in anchored mode"));
        }
    }
    Ok(format!("identity error {worst_identity:.3e}"))
}

fn check_dynamics(ctx: &Ctx) -> CheckResult {
    let gamma = ctx.params.gamma_mol;
    if !(gamma >= 0.0) {
        return Err(format!("negative decay rate {gamma}"));
    }
    let ends = [ctx.grid[0], ctx.grid[ctx.grid.len() - 1]];
    let mut worst_err: f64 = 0.0;
    let mut worst_trace: f64 = 0.0;
    let mut worst_coh: f64 = 0.0;
    for d in ends {
        let ot = omega_tilde_at(ctx, d)?;
        let rate = dynamics::rabi_regime(ot, gamma).beta.max(gamma).max(ot);
        let t_end = if gamma > 0.0 { 5.0 / gamma } else { 10.0 * PI / ot };
        let dt = 2.0 * PI / rate / 4000.0;
        let mut err = Ok(());
        dynamics::evolve(&ReducedState::excited(), ot, gamma, t_end, dt, false, |t, s| {
            match dynamics::p_omega_analytic(t, ot, gamma) {
                Ok(p) => worst_err = worst_err.max((s.p_e - p).abs()),
                Err(e) => err = Err(e),
            }
            worst_trace = worst_trace.max((s.trace() - 1.0).abs());
            worst_coh = worst_coh.max(s.c_ev.norm()).max(s.c_gv.norm());
        })
        .map_err(err_text)?;
        err.map_err(err_text)?;
    }
    if worst_err > 1e-8 || worst_trace > 1e-10 || worst_coh > 1e-12 {
        Err(format!(
            "max |Δp_E| {worst_err:.3e}, trace error {worst_trace:.3e}, |c_EV|,|c_GV| {worst_coh:.3e}"
        ))
    } else {
        Ok(format!("max |Δp_E| {worst_err:.3e}, trace error {worst_trace:.3e}"))
    }
}

fn check_critical_continuity(ctx: &Ctx) -> CheckResult {
    let gamma = ctx.params.gamma_mol;
    if !(gamma > 0.0) {
        return Err(format!("critical point Ω̃ = Γ/4 undefined for Γ = {gamma}"));
    }
    let q = 0.25 * gamma;
    let mut worst: f64 = 0.0;
    for k in 1..=10 {
        let t = k as f64 / gamma;
        for c in [q, q * (1.0 + dynamics::CRITICAL_BAND * 4.0), q * (1.0 - dynamics::CRITICAL_BAND * 4.0)] {
            let h = 1e-10 * q;
            let a = dynamics::p_omega_analytic(t, c - h, gamma).map_err(err_text)?;
            let b = dynamics::p_omega_analytic(t, c + h, gamma).map_err(err_text)?;
            worst = worst.max((a - b).abs());
        }
    }
    if worst <= 1e-9 {
        Ok(format!("max jump {worst:.3e}"))
    } else {
        Err(format!("p_Ω jumps by {worst:.3e} near Ω̃ = Γ/4"))
    }
}

fn kernel(ctx: &Ctx) -> SurvivalKernel {
    ctx.setup.scan.kernel
}

fn check_series(ctx: &Ctx) -> CheckResult {
    let gamma = ctx.params.gamma_mol;
    let mut worst: f64 = 0.0;
    for &d in &ctx.grid {
        let ot = omega_tilde_at(ctx, d)?;
        let t = collision_times(d, ot, &ctx.params).map_err(err_text)?;
        let s = traploss::loss_series(&t, ot, gamma, kernel(ctx), traploss::DEFAULT_MAX_TERMS)
            .map_err(err_text)?;
        let c = traploss::loss_closed_form(&t, ot, gamma, kernel(ctx)).map_err(err_text)?;
        worst = worst.max((s.value - c).abs());
    }
    if worst <= 1e-12 {
        Ok(format!("max |series − closed form| {worst:.3e}"))
    } else {
        Err(format!("series and closed form differ by {worst:.3e}"))
    }
}

fn check_no_cavity_identity(ctx: &Ctx) -> CheckResult {
    let gamma = ctx.params.gamma_mol;
    let mut worst: f64 = 0.0;
    for &d in &ctx.grid {
        let ot = omega_tilde_at(ctx, d)?;
        let t = collision_times(d, ot, &ctx.params).map_err(err_text)?;
        let a = traploss::loss_closed_form(&t, ot, gamma, SurvivalKernel::PureDecay).map_err(err_text)?;
        let b = traploss::loss_no_cavity(&t, gamma).map_err(err_text)?;
        worst = worst.max((a - b).abs());
    }
    if worst <= 1e-12 {
        Ok(format!("max deviation {worst:.3e}"))
    } else {
        Err(format!("pure-decay closed form differs from free loss by {worst:.3e}"))
    }
}

fn check_envelope(ctx: &Ctx) -> CheckResult {
    let gamma = ctx.params.gamma_mol;
    for &d in &ctx.grid {
        let ot = omega_tilde_at(ctx, d)?;
        let t = collision_times(d, ot, &ctx.params).map_err(err_text)?;
        let lc = traploss::loss_closed_form(&t, ot, gamma, kernel(ctx)).map_err(err_text)?;
        let p = kernel(ctx).eval(t.t_resonant, ot, gamma).map_err(err_text)?;
        if lc > p * (1.0 + 1e-12) {
            return Err(format!("L_c = {lc} exceeds p(t_c) = {p} at δ = {d:e}"));
        }
    }
    Ok("L_c ≤ p(t_c) everywhere".into())
}

fn check_bounds(ctx: &Ctx) -> CheckResult {
    let gamma = ctx.params.gamma_mol;
    for &d in &ctx.grid {
        let ot = omega_tilde_at(ctx, d)?;
        let t = collision_times(d, ot, &ctx.params).map_err(err_text)?;
        let lc = traploss::loss_closed_form(&t, ot, gamma, kernel(ctx)).map_err(err_text)?;
        let lo = traploss::loss_no_cavity(&t, gamma).map_err(err_text)?;
        if !((0.0..=1.0).contains(&lc) && (0.0..=1.0).contains(&lo)) {
            return Err(format!("probability out of [0,1] at δ = {d:e}: L_c={lc}, L_o={lo}"));
        }
    }
    Ok("all probabilities in [0, 1]".into())
}

fn check_minima_alignment(ctx: &Ctx) -> CheckResult {
    let gamma = ctx.params.gamma_mol;
    let mut lc = Vec::with_capacity(ctx.grid.len());
    let mut cos2 = Vec::with_capacity(ctx.grid.len());
    for &d in &ctx.grid {
        let ot = omega_tilde_at(ctx, d)?;
        let t = collision_times(d, ot, &ctx.params).map_err(err_text)?;
        lc.push(traploss::loss_closed_form(&t, ot, gamma, kernel(ctx)).map_err(err_text)?);
        cos2.push(t.phase(ot).cos().powi(2));
    }
    let a = traploss::interior_minima(&lc);
    let b = traploss::interior_minima(&cos2);
    let aligned = a.len() == b.len() && a.iter().zip(&b).all(|(i, j)| i.abs_diff(*j) <= 1);
    if aligned {
        Ok(format!("{} interior minima aligned with cos²(Ω̃t_c)", a.len()))
    } else {
        Err(format!("L_c minima at {a:?}, cos² minima at {b:?}"))
    }
}

fn check_divergence_guard(ctx: &Ctx) -> CheckResult {
    let d = ctx.grid[0];
    let ot = omega_tilde_at(ctx, d)?;
    let geometry = crate::potential::ResonanceGeometry::new(d, ot, &ctx.params).map_err(err_text)?;
    let t = kinematics::CollisionTimes::from_segments(PI / ot, 0.0, 1e-9, geometry);
    match traploss::loss_series(&t, ot, 0.0, kernel(ctx), traploss::DEFAULT_MAX_TERMS) {
        Err(Error::Divergence(_)) => Ok("Γ = 0 with Ω̃t_c = π rejected".into()),
        other => Err(format!("expected a divergence error, got {other:?}")),
    }
}
