//! Single-run orchestration: classify, simulate, fit and persist.

use std::path::Path;

use piezowave_core::blowup::{self, BlowupReport, Convention, Threshold, TmaxBound};
use piezowave_core::decay::{self, DecayFit};
use piezowave_core::integrator::{Stepper, Trigger};
use piezowave_core::well::{poincare_constant, Classification, WellReport};
use piezowave_core::{EnergyRecord, Outcome, Trajectory};
use serde::Serialize;

use crate::config::{FitRequest, RunConfig, Setup};
use crate::error::{HarnessError, Result};
use crate::output::{energy_csv, write_json, write_text};

/// Slack allowed for a decrease of `G` between records.
pub const MONITOR_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub classification: Classification,
    pub outcome: &'static str,
    pub t_detect: Option<f64>,
    pub trigger: Option<Trigger>,
    pub t_final: f64,
    pub records: usize,
    pub dt: f64,
    #[serde(rename = "E0")]
    pub e0: f64,
    pub tmax_bound: Option<f64>,
    pub criterion: blowup::Criterion,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub fits: Vec<DecayFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_error: Option<String>,
}

impl Summary {
    /// Rate of the preferred fit, if any.
    pub fn omega(&self) -> Option<f64> {
        self.fits.first().map(|f| f.omega)
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub setup: Setup,
    pub well: WellReport,
    pub trajectory: Trajectory,
    pub blowup: BlowupReport,
    pub summary: Summary,
}

pub fn well_report(cfg: &RunConfig, setup: &Setup) -> WellReport {
    WellReport::compute(&setup.grid, &setup.params, &setup.exps, cfg.run.seed).with_classification(
        &setup.state0,
        &setup.params,
        &setup.exps,
        &setup.grid,
    )
}

/// Decay fits of `ℰ` requested in the config, best first.
pub fn fit_energy(records: &[EnergyRecord], cfg: &RunConfig, eta: f64) -> Result<Vec<DecayFit>> {
    let t: Vec<f64> = records.iter().map(|r| r.t).collect();
    let e: Vec<f64> = records.iter().map(|r| r.etot).collect();
    let tail = cfg.run.fit_tail_start;
    let fits = match cfg.run.fit {
        FitRequest::None => Vec::new(),
        FitRequest::Exp => vec![decay::fit_exponential(&t, &e, tail)?],
        FitRequest::Poly => vec![decay::fit_polynomial(&t, &e, eta, tail)?],
        FitRequest::Log => vec![decay::fit_logarithmic(&t, &e, eta, cfg.run.fit_c, tail)?],
        FitRequest::Auto => decay::select_model(&t, &e, eta, cfg.run.fit_c, tail)?,
    };
    Ok(fits)
}

/// Runs everything in memory without touching the filesystem.
pub fn execute(cfg: &RunConfig) -> Result<RunOutput> {
    let setup = cfg.setup()?;
    let well = well_report(cfg, &setup);
    let stepper = Stepper::new(&setup.params, &setup.exps, &setup.grid, &setup.step)?;
    let trajectory = stepper.simulate(&setup.state0, cfg.run.t_end, cfg.run.record_every)?;
    let blowup = BlowupReport::assemble(
        &trajectory,
        &setup.state0,
        &setup.params,
        &setup.exps,
        &setup.grid,
        &well,
        cfg.run.poincare_convention,
        MONITOR_TOL,
    );
    let (fits, fit_error) = match fit_energy(&trajectory.records, cfg, setup.exps.eta()) {
        Ok(f) => (f, None),
        Err(e) => (Vec::new(), Some(e.to_string())),
    };
    let summary = Summary {
        classification: well.classification.unwrap_or(Classification::Indeterminate),
        outcome: trajectory.outcome.label(),
        t_detect: trajectory.outcome.t_detect(),
        trigger: match trajectory.outcome {
            Outcome::Blowup { trigger, .. } => Some(trigger),
            Outcome::Completed => None,
        },
        t_final: trajectory.last().t,
        records: trajectory.records.len(),
        dt: setup.step.dt,
        e0: trajectory.records[0].etot,
        tmax_bound: blowup.tmax_bound,
        criterion: blowup.criterion,
        fits,
        fit_error,
    };
    Ok(RunOutput {
        setup,
        well,
        trajectory,
        blowup,
        summary,
    })
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))
}

pub fn persist(out: &RunOutput, dir: &Path) -> Result<()> {
    ensure_dir(dir)?;
    write_text(
        &dir.join("energy.csv"),
        &energy_csv(&out.trajectory.records),
    )?;
    write_json(&dir.join("well.json"), &out.well)?;
    write_json(&dir.join("blowup.json"), &out.blowup)?;
    write_json(&dir.join("summary.json"), &out.summary)
}

/// `simulate`: runs and writes `energy.csv`, `well.json`, `blowup.json` and
/// `summary.json` into the configured output directory.
pub fn simulate(cfg: &RunConfig) -> Result<RunOutput> {
    let out = execute(cfg)?;
    persist(&out, &cfg.output.dir)?;
    Ok(out)
}

/// `classify`: well analysis and prediction only; writes `well.json`.
pub fn classify(cfg: &RunConfig) -> Result<WellReport> {
    let setup = cfg.setup()?;
    let well = well_report(cfg, &setup);
    ensure_dir(&cfg.output.dir)?;
    write_json(&cfg.output.dir.join("well.json"), &well)?;
    Ok(well)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConventionBounds {
    pub convention: Convention,
    pub threshold: Threshold,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bound: Option<TmaxBound>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bounds {
    pub poincare_c: f64,
    pub c_hat: f64,
    pub levine_constant: f64,
    pub conventions: Vec<ConventionBounds>,
}

/// `bounds`: `κ`, `τ` and the blow-up time bound under both conventions.
pub fn bounds(cfg: &RunConfig) -> Result<Bounds> {
    let s = cfg.setup()?;
    let c = poincare_constant(&s.grid);
    let conventions = [Convention::PoincareConsistent, Convention::PaperLiteral]
        .into_iter()
        .map(|convention| {
            let res =
                blowup::tmax_upper_bound(&s.state0, &s.params, &s.exps, &s.grid, c, convention);
            ConventionBounds {
                convention,
                threshold: blowup::blowup_time_threshold(
                    &s.state0, &s.params, &s.exps, &s.grid, c, convention,
                ),
                bound: res.as_ref().ok().copied(),
                error: res.err().map(|e| e.to_string()),
            }
        })
        .collect();
    Ok(Bounds {
        poincare_c: c,
        c_hat: s.exps.c_hat,
        levine_constant: blowup::levine_constant(&s.params, s.exps.c_hat, c),
        conventions,
    })
}
