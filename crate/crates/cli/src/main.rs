//! `cavloss`: constants, collision times, master-equation dynamics, trap-loss
//! scans and the invariant suite, driven by a JSON config plus flags.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use cavloss::cavity::{
    atomic_dipole, collective_rabi, field_per_photon, mode_geometry, molecular_dipole, single_rabi,
    CouplingMode,
};
use cavloss::constants::{angular_to_mhz, mhz_to_angular, CM_PER_ANGSTROM, K_B};
use cavloss::dynamics::{evolve, p_omega_analytic, ReducedState};
use cavloss::kinematics::collision_times;
use cavloss::traploss::{in_window, scan_detuning, WINDOW_MHZ};
use cavloss::validation::{run_suite, SuiteOptions};
use cavloss::Error;
use clap::{Parser, Subcommand};

use config::{CouplingKind, PModel, Resolved, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "cavloss", version, about = "Cavity-modified trap loss of cold colliding atom pairs")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// JSON configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Detuning δ/2π for `times`, `dynamics` and the microscopic `constants` report.
    #[arg(long, global = true, allow_hyphen_values = true)]
    delta_mhz: Option<f64>,
    #[arg(long, global = true)]
    t_max_ns: Option<f64>,
    #[arg(long, global = true)]
    dt_ps: Option<f64>,
    #[arg(long, global = true)]
    points: Option<usize>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    from_mhz: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    to_mhz: Option<f64>,
    #[arg(long, global = true, value_enum)]
    p_model: Option<PModel>,
    #[arg(long, global = true, value_enum)]
    coupling: Option<CouplingKind>,
    /// Worker threads for `scan`.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Accept |δ|/2π outside 350..1000 MHz; rows are tagged.
    #[arg(long, global = true)]
    allow_out_of_window: bool,
    /// Write data here instead of standard output.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Resolved parameters, mode geometry and couplings as key=value lines.
    Constants,
    /// Condon/escape radii and collision times at one detuning.
    Times,
    /// Master equation vs closed-form survival at one detuning.
    Dynamics {
        /// Replace Γ_A/2π (MHz) after the coupling is computed; 0 is allowed.
        #[arg(long)]
        gamma_a_mhz: Option<f64>,
        /// Approximate number of rows to print.
        #[arg(long, default_value_t = 1000)]
        rows: usize,
    },
    /// Trap-loss spectra L_c(δ), L_o(δ) over the detuning grid.
    Scan,
    /// Run the invariant suite; exit 1 if any check fails.
    Validate {
        #[arg(long, hide = true)]
        g0_override: Option<f64>,
    },
}

const DEFAULT_DELTA_MHZ: f64 = -350.0;

fn sci(x: f64, precision: usize) -> String {
    format!("{:.*e}", precision - 1, x)
}

fn merge(cli: &Cli) -> anyhow::Result<Resolved> {
    let file = match &cli.config {
        Some(p) => config::load(p)?,
        None => RunConfig::default(),
    };
    let mut r = file.resolve()?;
    let scan = &mut r.setup.scan;
    if let Some(v) = cli.from_mhz {
        scan.from = mhz_to_angular(v);
    }
    if let Some(v) = cli.to_mhz {
        scan.to = mhz_to_angular(v);
    }
    if let Some(n) = cli.points {
        scan.points = n;
    }
    if let Some(m) = cli.p_model {
        scan.kernel = m.into();
    }
    if cli.jobs.is_some() {
        scan.jobs = cli.jobs;
    }
    scan.allow_out_of_window |= cli.allow_out_of_window;
    if let Some(kind) = cli.coupling {
        let (ot, dr) = match r.setup.cavity.coupling_mode {
            CouplingMode::Anchored { omega_tilde_ref, delta_ref } => {
                (Some(angular_to_mhz(omega_tilde_ref)), Some(angular_to_mhz(delta_ref)))
            }
            CouplingMode::Microscopic => (None, None),
        };
        r.setup.cavity.coupling_mode = config::coupling_mode(kind, ot, dr);
    }
    if cli.output.is_some() {
        r.output = cli.output.clone();
    }
    Ok(r)
}

/// δ for the single-point commands, with the sign and window gates applied.
fn point_delta(cli: &Cli, r: &Resolved) -> anyhow::Result<f64> {
    let mhz = cli.delta_mhz.unwrap_or(DEFAULT_DELTA_MHZ);
    if !(mhz < 0.0) {
        return Err(Error::config("delta_mhz", format!("detuning must be negative (red), got {mhz}")).into());
    }
    let delta = mhz_to_angular(mhz);
    if !in_window(delta) && !r.setup.scan.allow_out_of_window {
        return Err(Error::config(
            "delta_mhz",
            format!(
                "|delta|/2pi = {} MHz outside the validated {}..{} MHz window; pass --allow-out-of-window to override",
                mhz.abs(),
                WINDOW_MHZ.0,
                WINDOW_MHZ.1
            ),
        )
        .into());
    }
    Ok(delta)
}

fn emit(r: &Resolved, text: &str) -> anyhow::Result<()> {
    match &r.output {
        Some(path) => std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display())),
        None => {
            use std::io::Write;
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

fn cmd_constants(cli: &Cli, r: &Resolved) -> anyhow::Result<String> {
    let (p, cavity) = r.setup.resolve()?;
    let prec = r.precision;
    let mode = mode_geometry(cavity.length, cavity.omega_c)?;
    let field = field_per_photon(cavity.omega_c, mode.volume)?;
    let omega = single_rabi(&cavity, &p)?;
    let (label, delta_ref) = match cavity.coupling_mode {
        CouplingMode::Anchored { delta_ref, .. } => ("anchored", delta_ref),
        CouplingMode::Microscopic => ("microscopic", point_delta(cli, r)?),
    };
    let at_ref = collective_rabi(delta_ref, &cavity, &p)?;

    let mut s = String::new();
    let mut kv = |k: &str, v: f64| writeln!(s, "{k}={}", sci(v, prec)).unwrap();
    kv("mass_amu", r.setup.species.mass_amu);
    kv("mass_g", p.mass_atom);
    kv("mu_g", p.mu);
    kv("lambda_nm", p.wavelength() / 1e-7);
    kv("omega_a_rad_s", p.omega_a);
    kv("gamma_a_mhz", angular_to_mhz(p.gamma_a));
    kv("gamma_mhz", angular_to_mhz(p.gamma_mol));
    kv("c3_erg_cm3", p.c3);
    kv("trap_depth_erg", p.trap_depth);
    kv("trap_depth_mk", p.trap_depth / K_B * 1e3);
    kv("resonant_omega_tilde_mhz", angular_to_mhz(p.resonant_omega_tilde()));
    kv("cavity_length_cm", cavity.length);
    kv("waist_um", mode.waist * 1e4);
    kv("mode_volume_cm3", mode.volume);
    kv("field_per_photon_statvolt_cm", field);
    kv("dipole_atomic_esu_cm", atomic_dipole(&p));
    kv("dipole_molecular_esu_cm", molecular_dipole(&p));
    kv("omega_single_mhz", angular_to_mhz(omega));
    kv("delta_ref_mhz", angular_to_mhz(delta_ref));
    kv("n_pairs", at_ref.n_pairs);
    kv("omega_tilde_mhz", angular_to_mhz(at_ref.omega_tilde));
    writeln!(s, "coupling_mode={label}").unwrap();
    Ok(s)
}

fn cmd_times(cli: &Cli, r: &Resolved) -> anyhow::Result<String> {
    let (p, cavity) = r.setup.resolve()?;
    let delta = point_delta(cli, r)?;
    let ot = collective_rabi(delta, &cavity, &p)?.omega_tilde;
    let t = collision_times(delta, ot, &p)?;
    let prec = r.precision;
    let mut s = String::from("delta_mhz,r_condon_ang,r_escape_ang,t0_s,f,tc_s,te_s,phase_over_pi\n");
    let row = [
        angular_to_mhz(delta),
        t.geometry.r_condon / CM_PER_ANGSTROM,
        t.geometry.r_escape / CM_PER_ANGSTROM,
        t.t_total,
        t.frac_resonant,
        t.t_resonant,
        t.t_escape_region,
        t.phase(ot) / std::f64::consts::PI,
    ];
    s.push_str(&row.iter().map(|&x| sci(x, prec)).collect::<Vec<_>>().join(","));
    s.push('\n');
    Ok(s)
}

fn cmd_dynamics(cli: &Cli, r: &Resolved, gamma_a_mhz: Option<f64>, rows: usize) -> anyhow::Result<String> {
    let (p, cavity) = r.setup.resolve()?;
    let delta = point_delta(cli, r)?;
    let ot = collective_rabi(delta, &cavity, &p)?.omega_tilde;
    let gamma = match gamma_a_mhz {
        Some(g) if g.is_finite() && g >= 0.0 => 2.0 * mhz_to_angular(g),
        Some(g) => bail!(Error::config("gamma_a_mhz", format!("must be non-negative, got {g}"))),
        None => p.gamma_mol,
    };
    let t_end = match cli.t_max_ns {
        Some(ns) => ns * 1e-9,
        None if gamma > 0.0 => 5.0 / gamma,
        // five full periods of cos²(Ω̃t)
        None => 5.0 * std::f64::consts::PI / ot,
    };
    let dt = cli.dt_ps.unwrap_or(1.0) * 1e-12;
    if !(t_end.is_finite() && t_end > 0.0) {
        bail!(Error::config("t_max_ns", format!("must be positive, got {}", t_end * 1e9)));
    }

    let n_steps = ((t_end / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let stride = n_steps.div_ceil(rows.max(1)).max(1);
    let prec = r.precision;
    let mut s = String::from("t_s,p_e_numeric,p_e_analytic,p_g,p_v,abs_err,trace_dev\n");
    let mut max_err: f64 = 0.0;
    let mut max_trace: f64 = 0.0;
    let mut k = 0usize;
    let mut failure = None;
    evolve(&ReducedState::excited(), ot, gamma, t_end, dt, false, |t, st: &ReducedState| {
        let analytic = match p_omega_analytic(t, ot, gamma) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                f64::NAN
            }
        };
        let err = (st.p_e - analytic).abs();
        let trace = st.trace() - 1.0;
        max_err = max_err.max(err);
        max_trace = max_trace.max(trace.abs());
        if k.is_multiple_of(stride) || t == t_end {
            let row = [t, st.p_e, analytic, st.p_g, st.p_v, err, trace];
            s.push_str(&row.iter().map(|&x| sci(x, prec)).collect::<Vec<_>>().join(","));
            s.push('\n');
        }
        k += 1;
    })?;
    if let Some(e) = failure {
        return Err(e.into());
    }
    writeln!(s, "# max_abs_err={}", sci(max_err, prec)).unwrap();
    writeln!(s, "# max_trace_dev={}", sci(max_trace, prec)).unwrap();
    Ok(s)
}

fn cmd_scan(r: &Resolved) -> anyhow::Result<String> {
    let (p, cavity) = r.setup.resolve()?;
    let mut scan = r.setup.scan;
    if r.include_excitation {
        scan.v_inf = Some(r.v_inf);
    }
    let rows = scan_detuning(&scan, &p, &cavity)?;
    let prec = r.precision;
    let mut s = String::from(
        "delta_mhz,omega_tilde_mhz,n_pairs,rc_ang,re_ang,t0_s,f,tc_s,te_s,phase_over_pi,loss_cavity,loss_free",
    );
    if r.include_excitation {
        s.push_str(",p_excite");
    }
    if scan.allow_out_of_window {
        s.push_str(",in_window");
    }
    s.push('\n');
    for pt in &rows {
        let t = &pt.times;
        let mut fields: Vec<String> = [
            angular_to_mhz(pt.delta),
            angular_to_mhz(pt.omega_tilde),
            pt.n_pairs,
            t.geometry.r_condon / CM_PER_ANGSTROM,
            t.geometry.r_escape / CM_PER_ANGSTROM,
            t.t_total,
            t.frac_resonant,
            t.t_resonant,
            t.t_escape_region,
            pt.phase / std::f64::consts::PI,
            pt.loss_cavity,
            pt.loss_free,
        ]
        .iter()
        .map(|&x| sci(x, prec))
        .collect();
        if let Some(pe) = pt.p_excite {
            fields.push(sci(pe, prec));
        }
        if scan.allow_out_of_window {
            fields.push(u8::from(pt.in_window).to_string());
        }
        s.push_str(&fields.join(","));
        s.push('\n');
    }
    Ok(s)
}

fn cmd_validate(r: &Resolved, g0_override: Option<f64>) -> (String, Vec<String>) {
    let report = run_suite(&r.setup, &SuiteOptions { g0_override, grid_points: None });
    let mut s = String::new();
    for o in &report.outcomes {
        let tag = if o.passed { "PASS" } else { "FAIL" };
        writeln!(s, "{tag} {}: {}", o.name, o.detail).unwrap();
    }
    let failed = report.failures().map(|o| o.name.to_string()).collect();
    (s, failed)
}

fn run(cli: &Cli) -> anyhow::Result<ExitCode> {
    let r = merge(cli)?;
    let text = match &cli.command {
        Command::Constants => cmd_constants(cli, &r)?,
        Command::Times => cmd_times(cli, &r)?,
        Command::Dynamics { gamma_a_mhz, rows } => cmd_dynamics(cli, &r, *gamma_a_mhz, *rows)?,
        Command::Scan => cmd_scan(&r)?,
        Command::Validate { g0_override } => {
            let (text, failed) = cmd_validate(&r, *g0_override);
            emit(&r, &text)?;
            if failed.is_empty() {
                return Ok(ExitCode::SUCCESS);
            }
            eprintln!("cavloss: {} check(s) failed: {}", failed.len(), failed.join(", "));
            return Ok(ExitCode::from(1));
        }
    };
    emit(&r, &text)?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("cavloss: {e:#}");
            ExitCode::from(2)
        }
    }
}
