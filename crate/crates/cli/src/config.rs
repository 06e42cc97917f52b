//! JSON run configuration. Every section is optional and falls back to the
//! Rb-85 / 1 cm cavity defaults; a `species` section, when present, must be
//! complete because its fields only make sense together.

use std::path::{Path, PathBuf};

use anyhow::Context;
use cavloss::cavity::CouplingMode;
use cavloss::constants::{mhz_to_angular, SpeciesUnits, TrapDepth};
use cavloss::setup::Setup;
use cavloss::traploss::SurvivalKernel;
use cavloss::Error;
use serde::Deserialize;

pub const DEFAULT_PRECISION: usize = 12;
pub const DEFAULT_V_INF: f64 = 12.0;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub species: Option<SpeciesSection>,
    #[serde(default)]
    pub cavity: CavitySection,
    #[serde(default)]
    pub coupling: CouplingSection,
    #[serde(default)]
    pub scan: ScanSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeciesSection {
    pub mass_amu: Option<f64>,
    pub lambda_nm: Option<f64>,
    pub gamma_a_mhz: Option<f64>,
    pub c3_erg_ang3: Option<f64>,
    pub trap_depth_mk: Option<f64>,
    /// Alternative to `trap_depth_mk`: 2V₀/h in MHz.
    pub trap_depth_mhz: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavitySection {
    pub length_cm: Option<f64>,
    pub n_atoms: Option<f64>,
    pub density_cm3: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum CouplingKind {
    Anchored,
    Microscopic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum PModel {
    Approx,
    Analytic,
}

impl From<PModel> for SurvivalKernel {
    fn from(m: PModel) -> Self {
        match m {
            PModel::Approx => SurvivalKernel::Approx,
            PModel::Analytic => SurvivalKernel::Analytic,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingSection {
    pub mode: Option<CouplingKind>,
    pub omega_tilde_ref_mhz: Option<f64>,
    pub delta_ref_mhz: Option<f64>,
    pub v_inf_cm_s: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanSection {
    pub from_mhz: Option<f64>,
    pub to_mhz: Option<f64>,
    pub points: Option<usize>,
    pub p_model: Option<PModel>,
    pub allow_out_of_window: Option<bool>,
    /// Adds the Landau–Zener p_excite column.
    pub include_excitation: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub path: Option<PathBuf>,
    pub precision: Option<usize>,
}

/// Everything a command needs after config and flags are merged.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub setup: Setup,
    pub v_inf: f64,
    pub include_excitation: bool,
    pub output: Option<PathBuf>,
    pub precision: usize,
}

pub fn load(path: &Path) -> anyhow::Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("invalid config {}", path.display()))
}

fn required(section: &str, field: &str, v: Option<f64>) -> Result<f64, Error> {
    v.ok_or_else(|| Error::config(format!("{section}.{field}"), "missing required field"))
}

impl SpeciesSection {
    pub fn to_units(&self) -> Result<SpeciesUnits, Error> {
        let trap_depth = match (self.trap_depth_mk, self.trap_depth_mhz) {
            (Some(mk), None) => TrapDepth::Millikelvin(mk),
            (None, Some(mhz)) => TrapDepth::TwiceDepthMhz(mhz),
            (None, None) => {
                return Err(Error::config(
                    "species.trap_depth_mk",
                    "missing required field (or give species.trap_depth_mhz)",
                ))
            }
            (Some(_), Some(_)) => {
                return Err(Error::config(
                    "species.trap_depth_mhz",
                    "give either trap_depth_mk or trap_depth_mhz, not both",
                ))
            }
        };
        Ok(SpeciesUnits {
            mass_amu: required("species", "mass_amu", self.mass_amu)?,
            lambda_nm: required("species", "lambda_nm", self.lambda_nm)?,
            gamma_a_mhz: required("species", "gamma_a_mhz", self.gamma_a_mhz)?,
            c3_erg_ang3: required("species", "c3_erg_ang3", self.c3_erg_ang3)?,
            trap_depth,
        })
    }
}

impl RunConfig {
    /// Merges the file with library defaults. Physical validation is left to
    /// the library so that `validate` can still report on bad values.
    pub fn resolve(&self) -> Result<Resolved, Error> {
        let mut setup = Setup::default();
        if let Some(s) = &self.species {
            setup.species = s.to_units()?;
        }

        let c = &self.cavity;
        setup.cavity.length = c.length_cm.unwrap_or(setup.cavity.length);
        setup.cavity.n_atoms_total = c.n_atoms.unwrap_or(setup.cavity.n_atoms_total);
        setup.cavity.density = c.density_cm3.unwrap_or(setup.cavity.density);

        let cp = &self.coupling;
        setup.cavity.coupling_mode = coupling_mode(
            cp.mode.unwrap_or(CouplingKind::Anchored),
            cp.omega_tilde_ref_mhz,
            cp.delta_ref_mhz,
        );

        let sc = &self.scan;
        if let Some(v) = sc.from_mhz {
            setup.scan.from = mhz_to_angular(v);
        }
        if let Some(v) = sc.to_mhz {
            setup.scan.to = mhz_to_angular(v);
        }
        setup.scan.points = sc.points.unwrap_or(setup.scan.points);
        setup.scan.kernel = sc.p_model.map(Into::into).unwrap_or(setup.scan.kernel);
        setup.scan.allow_out_of_window = sc.allow_out_of_window.unwrap_or(false);

        let precision = self.output.precision.unwrap_or(DEFAULT_PRECISION);
        check_precision(precision)?;

        Ok(Resolved {
            setup,
            v_inf: cp.v_inf_cm_s.unwrap_or(DEFAULT_V_INF),
            include_excitation: sc.include_excitation.unwrap_or(false),
            output: self.output.path.clone(),
            precision,
        })
    }
}

pub fn check_precision(p: usize) -> Result<(), Error> {
    if (6..=17).contains(&p) {
        Ok(())
    } else {
        Err(Error::config("output.precision", format!("must be 6..=17 significant digits, got {p}")))
    }
}

pub fn coupling_mode(kind: CouplingKind, ot_ref_mhz: Option<f64>, delta_ref_mhz: Option<f64>) -> CouplingMode {
    match kind {
        CouplingKind::Microscopic => CouplingMode::Microscopic,
        CouplingKind::Anchored => {
            let CouplingMode::Anchored { omega_tilde_ref, delta_ref } = CouplingMode::default_anchor() else {
                unreachable!("default anchor is anchored")
            };
            CouplingMode::Anchored {
                omega_tilde_ref: ot_ref_mhz.map(mhz_to_angular).unwrap_or(omega_tilde_ref),
                delta_ref: delta_ref_mhz.map(mhz_to_angular).unwrap_or(delta_ref),
            }
        }
    }
}
