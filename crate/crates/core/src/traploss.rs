//! Trap-loss probabilities with and without the cavity mode, and the
//! detuning scan.
//!
//! An excited quasimolecule leaves the resonant region still excited with
//! probability p(t_c), decays inside R_e during the round trip with
//! probability 1 − e^{−2t_eΓ}, and otherwise returns through the resonant
//! region (survival p(2t_c)) for another attempt. The passages form a
//! geometric series with ratio q = e^{−2(t′+t_e)Γ} p(2t_c).

use rayon::prelude::*;

use crate::cavity::{collective_rabi, landau_zener, CavityConfig};
use crate::constants::{mhz_to_angular, PhysicalParams};
use crate::dynamics::{p_omega_analytic, p_omega_approx, p_pure_decay};
use crate::error::{Error, Result};
use crate::kinematics::{collision_times, exceeds_single_cycle, CollisionTimes};

/// Excited-state survival law used inside the resonant region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SurvivalKernel {
    /// e^{−Γt/2} cos²(Ω̃t).
    #[default]
    Approx,
    /// Full damped-Rabi solution in every regime.
    Analytic,
    /// e^{−Γt}, no cavity.
    PureDecay,
}

impl SurvivalKernel {
    pub fn eval(self, t: f64, omega_tilde: f64, gamma: f64) -> Result<f64> {
        match self {
            SurvivalKernel::Approx => Ok(p_omega_approx(t, omega_tilde, gamma)),
            SurvivalKernel::Analytic => p_omega_analytic(t, omega_tilde, gamma),
            SurvivalKernel::PureDecay => Ok(p_pure_decay(t, gamma)),
        }
    }
}

/// Ratios at or above 1 − this are reported as divergent.
pub const DIVERGENCE_TOL: f64 = 1e-12;
pub const DEFAULT_MAX_TERMS: usize = 10_000;

/// First-passage loss l₁ = p(t_c) e^{−t′Γ} (1 − e^{−2t_eΓ}).
pub fn single_passage_loss(
    times: &CollisionTimes,
    omega_tilde: f64,
    gamma: f64,
    kernel: SurvivalKernel,
) -> Result<f64> {
    let exit_excited = kernel.eval(times.t_resonant, omega_tilde, gamma)?;
    let decay_inside = -(-2.0 * times.t_escape_region * gamma).exp_m1();
    Ok(exit_excited * (-times.t_prime * gamma).exp() * decay_inside)
}

/// Ratio between successive passages.
pub fn passage_ratio(
    times: &CollisionTimes,
    omega_tilde: f64,
    gamma: f64,
    kernel: SurvivalKernel,
) -> Result<f64> {
    let back_and_forth = kernel.eval(2.0 * times.t_resonant, omega_tilde, gamma)?;
    Ok((-2.0 * (times.t_prime + times.t_escape_region) * gamma).exp() * back_and_forth)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesSum {
    pub value: f64,
    pub terms: usize,
}

/// Explicit sum l₁ + l₂ + …, stopped once a term falls below 10⁻¹⁵ of the
/// running total or after `max_terms` terms.
pub fn loss_series(
    times: &CollisionTimes,
    omega_tilde: f64,
    gamma: f64,
    kernel: SurvivalKernel,
    max_terms: usize,
) -> Result<SeriesSum> {
    let q = passage_ratio(times, omega_tilde, gamma, kernel)?;
    if q >= 1.0 - DIVERGENCE_TOL {
        return Err(Error::Divergence(format!(
            "lossless multiple passage: passage ratio {q} >= 1 (Γ=0 with full revival)"
        )));
    }
    let mut term = single_passage_loss(times, omega_tilde, gamma, kernel)?;
    let mut sum = 0.0;
    let mut terms = 0;
    loop {
        sum += term;
        terms += 1;
        let next = term * q;
        if next == 0.0 || next < 1e-15 * sum || terms >= max_terms {
            break;
        }
        term = next;
    }
    Ok(SeriesSum { value: sum, terms })
}

/// Closed-form multiple-passage loss
/// p(t_c) sinh(Γt_e) / (½[e^{(t′+t_e)Γ} − p(2t_c) e^{−(t′+t_e)Γ}]).
pub fn loss_closed_form(
    times: &CollisionTimes,
    omega_tilde: f64,
    gamma: f64,
    kernel: SurvivalKernel,
) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::domain(format!(
            "closed-form loss needs a positive decay rate, got {gamma}"
        )));
    }
    if times.t_escape_region == 0.0 {
        return Ok(0.0);
    }
    let p1 = kernel.eval(times.t_resonant, omega_tilde, gamma)?;
    let p2 = kernel.eval(2.0 * times.t_resonant, omega_tilde, gamma)?;
    let x = (times.t_prime + times.t_escape_region) * gamma;
    Ok(p1 * (gamma * times.t_escape_region).sinh() / (0.5 * (x.exp() - p2 * (-x).exp())))
}

/// Loss without the cavity, sinh(t_eΓ) / sinh(t₀Γ) with t₀ = t_c + t′ + t_e.
pub fn loss_no_cavity(times: &CollisionTimes, gamma: f64) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::domain(format!(
            "free-space loss needs a positive decay rate, got {gamma}"
        )));
    }
    let t0 = times.t_resonant + times.t_prime + times.t_escape_region;
    if times.t_escape_region == 0.0 {
        return Ok(0.0);
    }
    Ok((times.t_escape_region * gamma).sinh() / (t0 * gamma).sinh())
}

/// Default validity window for |δ|/2π, in MHz.
pub const WINDOW_MHZ: (f64, f64) = (350.0, 1000.0);

pub fn in_window(delta: f64) -> bool {
    let lo = mhz_to_angular(WINDOW_MHZ.0) * (1.0 - 1e-9);
    let hi = mhz_to_angular(WINDOW_MHZ.1) * (1.0 + 1e-9);
    (lo..=hi).contains(&delta.abs())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanConfig {
    /// First detuning (rad/s).
    pub from: f64,
    /// Last detuning (rad/s); `from < to < 0`.
    pub to: f64,
    pub points: usize,
    pub kernel: SurvivalKernel,
    pub allow_out_of_window: bool,
    /// Worker threads; `None` uses the global pool.
    pub jobs: Option<usize>,
    /// Relative velocity for the optional excitation column (cm/s).
    pub v_inf: Option<f64>,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            from: mhz_to_angular(-WINDOW_MHZ.1),
            to: mhz_to_angular(-WINDOW_MHZ.0),
            points: 200,
            kernel: SurvivalKernel::Approx,
            allow_out_of_window: false,
            jobs: None,
            v_inf: None,
        }
    }
}

impl ScanConfig {
    pub fn grid(&self) -> Vec<f64> {
        let n = self.points;
        let span = self.to - self.from;
        (0..n)
            .map(|i| {
                if i + 1 == n {
                    self.to
                } else {
                    self.from + span * i as f64 / (n - 1) as f64
                }
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.points < 2 {
            return Err(Error::config("scan.points", format!("need at least 2 points, got {}", self.points)));
        }
        if !(self.to.is_finite() && self.to < 0.0) {
            return Err(Error::config("scan.to_mhz", "detuning must be negative (red)"));
        }
        if !(self.from.is_finite() && self.from < self.to) {
            return Err(Error::config("scan.from_mhz", "range is empty: from_mhz must be below to_mhz"));
        }
        if !self.allow_out_of_window {
            for (field, d) in [("scan.from_mhz", self.from), ("scan.to_mhz", self.to)] {
                if !in_window(d) {
                    return Err(Error::config(
                        field,
                        format!(
                            "|delta|/2pi outside the validated {}..{} MHz window; pass --allow-out-of-window to override",
                            WINDOW_MHZ.0, WINDOW_MHZ.1
                        ),
                    ));
                }
            }
        }
        if matches!(self.jobs, Some(0)) {
            return Err(Error::config("jobs", "must be at least 1"));
        }
        Ok(())
    }
}

/// One row of a detuning scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossPoint {
    pub delta: f64,
    pub omega_tilde: f64,
    pub omega_single: f64,
    pub n_pairs: f64,
    pub times: CollisionTimes,
    /// Ω̃ t_c (rad).
    pub phase: f64,
    pub loss_cavity: f64,
    pub loss_free: f64,
    pub series_terms_used: usize,
    /// Landau–Zener excitation probability; never folded into the losses.
    pub p_excite: Option<f64>,
    pub in_window: bool,
    /// Ω̃ t_c > 2π, where drift of ω_R across the region is no longer small.
    pub phase_exceeds_cycle: bool,
}

/// Evaluates every quantity of a scan row at a single detuning.
pub fn loss_point(
    delta: f64,
    scan: &ScanConfig,
    params: &PhysicalParams,
    cavity: &CavityConfig,
) -> Result<LossPoint> {
    let coupling = collective_rabi(delta, cavity, params)?;
    let ot = coupling.omega_tilde;
    let gamma = params.gamma_mol;
    let times = collision_times(delta, ot, params)?;
    let loss_cavity = loss_closed_form(&times, ot, gamma, scan.kernel)?;
    let series = loss_series(&times, ot, gamma, scan.kernel, DEFAULT_MAX_TERMS)?;
    let loss_free = loss_no_cavity(&times, gamma)?;
    let p_excite = scan
        .v_inf
        .map(|v| landau_zener(delta, ot, v, params))
        .transpose()?;
    let phase = times.phase(ot);
    Ok(LossPoint {
        delta,
        omega_tilde: ot,
        omega_single: coupling.omega_single,
        n_pairs: coupling.n_pairs,
        times,
        phase,
        loss_cavity,
        loss_free,
        series_terms_used: series.terms,
        p_excite,
        in_window: in_window(delta),
        phase_exceeds_cycle: exceeds_single_cycle(phase, 0.0),
    })
}

/// Scans δ over the configured grid; rows come back in ascending δ.
pub fn scan_detuning(
    scan: &ScanConfig,
    params: &PhysicalParams,
    cavity: &CavityConfig,
) -> Result<Vec<LossPoint>> {
    scan.validate()?;
    cavity.validate()?;
    let grid = scan.grid();
    let run = || -> Result<Vec<LossPoint>> {
        grid.par_iter()
            .map(|&d| loss_point(d, scan, params, cavity))
            .collect()
    };
    match scan.jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Parameter(format!("cannot start {n} worker threads: {e}")))?
            .install(run),
        None => run(),
    }
}

/// Indices i with v[i−1] > v[i] < v[i+1].
pub fn interior_minima(v: &[f64]) -> Vec<usize> {
    (1..v.len().saturating_sub(1))
        .filter(|&i| v[i] < v[i - 1] && v[i] < v[i + 1])
        .collect()
}

/// Indices i with v[i−1] < v[i] > v[i+1].
pub fn interior_maxima(v: &[f64]) -> Vec<usize> {
    (1..v.len().saturating_sub(1))
        .filter(|&i| v[i] > v[i - 1] && v[i] > v[i + 1])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::SpeciesUnits;
    use crate::potential::ResonanceGeometry;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn rb() -> PhysicalParams {
        PhysicalParams::resolve(&SpeciesUnits::rb85()).unwrap()
    }

    fn geometry() -> ResonanceGeometry {
        ResonanceGeometry::new(-1e9, 1e8, &rb()).unwrap()
    }

    fn preset() -> (CollisionTimes, f64, f64) {
        let p = rb();
        let ot = mhz_to_angular(200.0);
        (collision_times(mhz_to_angular(-350.0), ot, &p).unwrap(), ot, p.gamma_mol)
    }

    #[test]
    fn single_passage_edges() {
        let t = CollisionTimes::from_segments(1e-9, 0.0, 0.0, geometry());
        assert_eq!(single_passage_loss(&t, 1e9, 1e8, SurvivalKernel::Analytic).unwrap(), 0.0);
        let t = CollisionTimes::from_segments(1e-9, 0.0, 4e-9, geometry());
        assert_eq!(single_passage_loss(&t, 1e9, 0.0, SurvivalKernel::Approx).unwrap(), 0.0);
    }

    #[test]
    fn single_passage_preset() {
        let (t, ot, g) = preset();
        let gte = g * t.t_escape_region;
        assert!((gte - 0.357).abs() < 0.01, "{gte}");
        let l1 = single_passage_loss(&t, ot, g, SurvivalKernel::Analytic).unwrap();
        let oracle = p_omega_analytic(t.t_resonant, ot, g).unwrap() * (1.0 - (-2.0 * gte).exp());
        assert!((l1 - oracle).abs() < 1e-15);
    }

    #[test]
    fn series_single_term_when_escape_is_certain() {
        let t = CollisionTimes::from_segments(1e-9, 0.0, 1.0, geometry());
        let s = loss_series(&t, 1e9, 1e8, SurvivalKernel::Analytic, 100).unwrap();
        let l1 = single_passage_loss(&t, 1e9, 1e8, SurvivalKernel::Analytic).unwrap();
        assert_eq!(s.value, l1);
        assert_eq!(s.terms, 1);
    }

    #[test]
    fn series_diverges_without_loss() {
        let ot = 1e9;
        let t = CollisionTimes::from_segments(PI / ot, 0.0, 5e-9, geometry());
        for kernel in [SurvivalKernel::Approx, SurvivalKernel::Analytic] {
            let r = loss_series(&t, ot, 0.0, kernel, DEFAULT_MAX_TERMS);
            assert!(matches!(r, Err(Error::Divergence(_))), "{r:?}");
        }
        assert!(loss_closed_form(&t, ot, 0.0, SurvivalKernel::Approx).is_err());
        assert!(loss_no_cavity(&t, 0.0).is_err());
    }

    #[test]
    fn closed_form_limits() {
        let t = CollisionTimes::from_segments(0.0, 0.0, 3e-9, geometry());
        for kernel in [SurvivalKernel::Approx, SurvivalKernel::Analytic, SurvivalKernel::PureDecay] {
            let l = loss_closed_form(&t, 1e9, 7.5e7, kernel).unwrap();
            assert!((l - 1.0).abs() < 1e-14, "{l}");
        }
        assert_eq!(loss_no_cavity(&t, 7.5e7).unwrap(), 1.0);
        let t = CollisionTimes::from_segments(3e-9, 0.0, 0.0, geometry());
        assert_eq!(loss_no_cavity(&t, 7.5e7).unwrap(), 0.0);
        assert_eq!(loss_closed_form(&t, 1e9, 7.5e7, SurvivalKernel::Approx).unwrap(), 0.0);
    }

    #[test]
    fn pure_decay_kernel_reproduces_free_loss() {
        let (t, ot, g) = preset();
        let a = loss_closed_form(&t, ot, g, SurvivalKernel::PureDecay).unwrap();
        let b = loss_no_cavity(&t, g).unwrap();
        assert!((a - b).abs() < 1e-12);
        let t = CollisionTimes::from_segments(2e-9, 1.5e-9, 3e-9, geometry());
        let a = loss_closed_form(&t, ot, g, SurvivalKernel::PureDecay).unwrap();
        let b = loss_no_cavity(&t, g).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn preset_values() {
        let (t, ot, g) = preset();
        let lo = loss_no_cavity(&t, g).unwrap();
        let oracle = (g * t.t_escape_region).sinh() / (g * t.t_total).sinh();
        assert!((lo - oracle).abs() < 1e-15);
        assert!((lo - 0.41).abs() < 0.01, "{lo}");

        // independent chain: damped-Rabi closed form, then the geometric sum by hand
        let beta = (ot * ot - g * g / 16.0).sqrt();
        let p = |s: f64| (-g * s / 2.0).exp() * ((beta * s).cos() - g / (4.0 * beta) * (beta * s).sin()).powi(2);
        let l1 = p(t.t_resonant) * (1.0 - (-2.0 * g * t.t_escape_region).exp());
        let q = (-2.0 * g * t.t_escape_region).exp() * p(2.0 * t.t_resonant);
        let lc = loss_closed_form(&t, ot, g, SurvivalKernel::Analytic).unwrap();
        assert!((lc - l1 / (1.0 - q)).abs() < 1e-12);
        assert!((lc - 0.117).abs() < 0.002, "{lc}");
    }

    #[test]
    fn series_matches_closed_form_with_t_prime() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let g = rng.gen_range(1e7..2e8);
            let ot = rng.gen_range(1e7..3e9);
            let t = CollisionTimes::from_segments(
                rng.gen_range(0.0..1e-8),
                rng.gen_range(0.0..5e-9),
                rng.gen_range(1e-10..1e-8),
                geometry(),
            );
            for kernel in [SurvivalKernel::Approx, SurvivalKernel::Analytic] {
                let s = loss_series(&t, ot, g, kernel, DEFAULT_MAX_TERMS).unwrap();
                let c = loss_closed_form(&t, ot, g, kernel).unwrap();
                assert!((s.value - c).abs() <= 1e-12, "{} vs {c}", s.value);
            }
        }
    }

    #[test]
    fn scan_rows_sorted_and_bounded() {
        let p = rb();
        let cav = CavityConfig::reference(&p);
        let scan = ScanConfig { points: 40, jobs: Some(3), ..Default::default() };
        let rows = scan_detuning(&scan, &p, &cav).unwrap();
        assert_eq!(rows.len(), 40);
        assert!(rows.windows(2).all(|w| w[0].delta < w[1].delta));
        for r in &rows {
            assert!((0.0..=1.0).contains(&r.loss_cavity));
            assert!((0.0..=1.0).contains(&r.loss_free));
            assert!(r.phase >= 0.0);
            assert!(r.in_window);
            assert!(r.p_excite.is_none());
        }
        let first = rows.first().unwrap();
        assert!((crate::constants::angular_to_mhz(first.omega_tilde) - 70.0).abs() < 1e-9);
        let last = rows.last().unwrap();
        assert!((last.phase / PI / 2.35 - 1.0).abs() < 0.02);
        assert!(last.phase_exceeds_cycle);
    }

    #[test]
    fn scan_is_deterministic_across_thread_counts() {
        let p = rb();
        let cav = CavityConfig::reference(&p);
        let a = scan_detuning(&ScanConfig { points: 25, jobs: Some(1), ..Default::default() }, &p, &cav).unwrap();
        let b = scan_detuning(&ScanConfig { points: 25, jobs: Some(4), ..Default::default() }, &p, &cav).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn scan_config_errors() {
        let p = rb();
        let cav = CavityConfig::reference(&p);
        let bad = |s: ScanConfig| scan_detuning(&s, &p, &cav).unwrap_err();
        let base = ScanConfig::default();
        assert!(matches!(bad(ScanConfig { points: 1, ..base }), Error::Config { field, .. } if field == "scan.points"));
        assert!(matches!(bad(ScanConfig { from: base.to, to: base.from, ..base }), Error::Config { .. }));
        assert!(matches!(bad(ScanConfig { to: 0.0, ..base }), Error::Config { field, .. } if field == "scan.to_mhz"));
        assert!(matches!(bad(ScanConfig { to: mhz_to_angular(-200.0), ..base }), Error::Config { field, .. } if field == "scan.to_mhz"));
        let wide = ScanConfig { to: mhz_to_angular(-200.0), allow_out_of_window: true, points: 5, ..base };
        let rows = scan_detuning(&wide, &p, &cav).unwrap();
        assert!(!rows.last().unwrap().in_window);
        assert!(rows.first().unwrap().in_window);
    }

    #[test]
    fn excitation_column() {
        let p = rb();
        let cav = CavityConfig::reference(&p);
        let scan = ScanConfig { points: 3, v_inf: Some(12.0), ..Default::default() };
        let rows = scan_detuning(&scan, &p, &cav).unwrap();
        assert!(rows.iter().all(|r| r.p_excite.is_some_and(|x| x > 0.99)));
    }

    #[test]
    fn extrema_helpers() {
        let v = [3.0, 1.0, 2.0, 0.5, 4.0, 4.0, 1.0];
        assert_eq!(interior_minima(&v), vec![1, 3]);
        assert_eq!(interior_maxima(&v), vec![2]);
        assert!(interior_minima(&[1.0]).is_empty());
    }

    fn tuple_times(tc_ns: f64, tp_ns: f64, te_ns: f64) -> CollisionTimes {
        CollisionTimes::from_segments(tc_ns * 1e-9, tp_ns * 1e-9, te_ns * 1e-9, geometry())
    }

    fn any_kernel() -> impl Strategy<Value = SurvivalKernel> {
        prop_oneof![Just(SurvivalKernel::Approx), Just(SurvivalKernel::Analytic)]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]

        #[test]
        fn probabilities_bounded(
            g_mhz in 0.5f64..100.0, ot_mhz in 0.0f64..600.0,
            tc in 0.0f64..30.0, tp in 0.0f64..10.0, te in 0.0f64..30.0,
            kernel in any_kernel(),
        ) {
            let (g, ot) = (mhz_to_angular(g_mhz), mhz_to_angular(ot_mhz));
            let t = tuple_times(tc, tp, te);
            let lc = loss_closed_form(&t, ot, g, kernel).unwrap();
            let lo = loss_no_cavity(&t, g).unwrap();
            let l1 = single_passage_loss(&t, ot, g, kernel).unwrap();
            prop_assert!((0.0..=1.0).contains(&lc), "L_c = {lc}");
            prop_assert!((0.0..=1.0).contains(&lo), "L_o = {lo}");
            prop_assert!((0.0..=1.0).contains(&l1));
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn series_equals_closed_form(
            g_mhz in 4.0f64..50.0, ot_mhz in 10.0f64..500.0,
            tc in 0.1f64..20.0, tp in 0.0f64..10.0, te in 0.5f64..20.0,
            kernel in any_kernel(),
        ) {
            let (g, ot) = (mhz_to_angular(g_mhz), mhz_to_angular(ot_mhz));
            let t = tuple_times(tc, tp, te);
            let s = loss_series(&t, ot, g, kernel, DEFAULT_MAX_TERMS).unwrap();
            let c = loss_closed_form(&t, ot, g, kernel).unwrap();
            prop_assert!((s.value - c).abs() <= 1e-12, "{} vs {c}", s.value);
        }

        #[test]
        fn pure_decay_equals_free_loss(
            g_mhz in 0.5f64..100.0, tc in 0.0f64..30.0, tp in 0.0f64..10.0, te in 0.01f64..30.0,
        ) {
            let g = mhz_to_angular(g_mhz);
            let t = tuple_times(tc, tp, te);
            let a = loss_closed_form(&t, 1e8, g, SurvivalKernel::PureDecay).unwrap();
            prop_assert!((a - loss_no_cavity(&t, g).unwrap()).abs() <= 1e-12);
        }

        #[test]
        fn loss_below_first_exit_probability(
            g_mhz in 0.5f64..100.0, ot_mhz in 0.0f64..600.0,
            tc in 0.0f64..30.0, te in 0.0f64..30.0, kernel in any_kernel(),
        ) {
            let (g, ot) = (mhz_to_angular(g_mhz), mhz_to_angular(ot_mhz));
            let t = tuple_times(tc, 0.0, te);
            let lc = loss_closed_form(&t, ot, g, kernel).unwrap();
            let p = kernel.eval(t.t_resonant, ot, g).unwrap();
            prop_assert!(lc <= p * (1.0 + 1e-12) + 1e-300);
        }
    }
}
