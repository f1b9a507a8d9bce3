//! Mean-field, single exact and swept runs, with their CSV/JSON output.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{IntegratorKind, RunConfig};
use super::fit::{fit_rows, Quantity, RateFit};
use crate::error::{Error, Result};
use crate::fidelity::{Diagnostics, FidelityReport, Sample};
use crate::fock::{product_state_with_cap, Hamiltonian, HamiltonianSpec, ManyBodyState};
use crate::interaction::CouplingMatrix;
use crate::meanfield::{mass_defect, save_checkpoint, CheckpointMeta, HartreeState, HartreeSystem, MixtureSize};
use crate::par;

pub const SWEEP_CSV: &str = "sweep.csv";
pub const SWEEP_SUMMARY: &str = "summary.json";
pub const SWEEP_REPORTS: &str = "reports.json";
pub const HARTREE_CSV: &str = "hartree.csv";

/// One CSV line: one sampled time, one theta.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub t: f64,
    #[serde(rename = "N1")]
    pub n1: usize,
    #[serde(rename = "N2")]
    pub n2: usize,
    pub theta: f64,
    pub trace_norm: f64,
    pub hs_norm: f64,
    pub a1: f64,
    pub a2: f64,
    pub est_a_bound: f64,
    #[serde(rename = "thm23_bound")]
    pub weighted_bound: f64,
    #[serde(rename = "A_N")]
    pub a_n: f64,
    #[serde(rename = "B_N")]
    pub b_n: f64,
    /// `|<H_N>_t - <H_N>_0| / max(1, |<H_N>_0|)`.
    pub energy_drift: f64,
    /// `;`-separated, empty when every inequality held.
    pub violations: String,
}

fn rows_of(sample: &Sample, energy_drift: f64) -> Vec<CsvRow> {
    sample
        .reports()
        .into_iter()
        .map(|r| CsvRow {
            t: r.t,
            n1: r.n1,
            n2: r.n2,
            theta: r.theta,
            trace_norm: r.trace_norm,
            hs_norm: r.hs_norm,
            a1: r.a1,
            a2: r.a2,
            est_a_bound: r.est_a_bound,
            weighted_bound: r.weighted_bound,
            a_n: r.a_n,
            b_n: r.b_n,
            energy_drift,
            violations: r.violations.join(";"),
        })
        .collect()
}

pub fn write_csv(path: &Path, rows: &[CsvRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_error)?;
    for r in rows {
        w.serialize(r).map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<Vec<CsvRow>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_error)?;
    r.deserialize().map(|row| row.map_err(csv_error)).collect()
}

pub(crate) fn csv_error(e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            _ => unreachable!(),
        }
    } else {
        Error::Format(format!("csv: {e}"))
    }
}

fn sampled(n: usize, stride: usize, steps: usize) -> bool {
    n % stride == 0 || n == steps
}

pub fn hartree_system(cfg: &RunConfig) -> Result<HartreeSystem> {
    HartreeSystem::new(cfg.grid, [&cfg.kinetics[0], &cfg.kinetics[1]], cfg.couplings, cfg.r)
}

/// Mean-field states at every exact-propagation step `n dt`, `n = 0..=steps`.
pub fn hartree_trajectory(cfg: &RunConfig) -> Result<Vec<HartreeState>> {
    let sys = hartree_system(cfg)?;
    let dt = cfg.raw.time.dt;
    let mut cur = HartreeState::new(cfg.psi0(), cfg.phi0())?;
    let mut out = Vec::with_capacity(cfg.steps + 1);
    out.push(cur.clone());
    for n in 1..=cfg.steps {
        cur = match cfg.raw.integrator.kind {
            IntegratorKind::Strang => {
                sys.evolve(&cur, cfg.raw.time.hartree_dt, cfg.hartree_substeps, cfg.order, |_, _| Ok(()))?
            }
            IntegratorKind::Picard => {
                let i = &cfg.raw.integrator;
                sys.picard_solve(&cur, dt, i.picard_iterations, i.picard_nodes)?.state
            }
        };
        cur.t = n as f64 * dt;
        out.push(cur.clone());
    }
    Ok(out)
}

/// Result of one exact run against a precomputed mean-field trajectory.
#[derive(Clone, Debug)]
pub struct PointRun {
    pub mixture: MixtureSize,
    pub samples: Vec<Sample>,
    pub energy_drift: Vec<f64>,
    pub final_state: ManyBodyState,
}

impl PointRun {
    pub fn rows(&self) -> Vec<CsvRow> {
        self.samples
            .iter()
            .zip(&self.energy_drift)
            .flat_map(|(s, d)| rows_of(s, *d))
            .collect()
    }

    pub fn reports(&self) -> Vec<FidelityReport> {
        self.samples.iter().flat_map(|s| s.reports()).collect()
    }
}

/// Propagates the product state of `mixture` exactly and samples the
/// diagnostics against `traj` on the stride.
pub fn run_point(cfg: &RunConfig, mixture: MixtureSize, traj: &[HartreeState]) -> Result<PointRun> {
    if traj.len() != cfg.steps + 1 {
        return Err(Error::InvalidParameter(format!(
            "trajectory has {} states, run needs {}",
            traj.len(),
            cfg.steps + 1
        )));
    }
    let spec = HamiltonianSpec {
        kinetics: cfg.kinetics.clone(),
        couplings: cfg.couplings,
        mixture,
    };
    let h = Hamiltonian::with_cap(&spec, cfg.grid, cfg.raw.state_cap)?;
    let (psi0, phi0) = (&traj[0].psi, &traj[0].phi);
    let st0 = product_state_with_cap(psi0, phi0, mixture, cfg.raw.state_cap)?;
    let d = &cfg.raw.diagnostics;
    let diag = Diagnostics::new(&h, d.k, d.l, d.observables, cfg.raw.seed)?.with_initial_orbitals(psi0, phi0)?;
    let e0 = h.energy(&st0)?;
    let scale = e0.abs().max(1.0);
    let stride = cfg.raw.time.stride;

    let mut samples = Vec::new();
    let mut energy_drift = Vec::new();
    let final_state = h.propagate_observed(&st0, cfg.raw.time.dt, cfg.steps, |n, st| {
        if sampled(n, stride, cfg.steps) {
            let s = &traj[n];
            samples.push(diag.sample(st, &s.psi, &s.phi, s.t, cfg.thetas())?);
            energy_drift.push((h.energy(st)? - e0).abs() / scale);
        }
        Ok(())
    })?;
    Ok(PointRun {
        mixture,
        samples,
        energy_drift,
        final_state,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointSummary {
    #[serde(rename = "N1")]
    pub n1: usize,
    #[serde(rename = "N2")]
    pub n2: usize,
    pub ok: bool,
    pub error: Option<String>,
    pub samples: usize,
    /// Rows whose violations column is nonempty.
    pub violating_rows: usize,
    pub max_bookkeeping_residual: f64,
    pub max_energy_drift: f64,
    /// `a1 + a2` at the last sampled time.
    pub final_a: f64,
    /// Plain trace norm at the last sampled time.
    pub final_trace_norm: f64,
}

impl PointSummary {
    fn failed(m: MixtureSize, e: &Error) -> Self {
        Self {
            n1: m.n1,
            n2: m.n2,
            ok: false,
            error: Some(e.to_string()),
            samples: 0,
            violating_rows: 0,
            max_bookkeeping_residual: f64::NAN,
            max_energy_drift: f64::NAN,
            final_a: f64::NAN,
            final_trace_norm: f64::NAN,
        }
    }

    fn of(run: &PointRun) -> Self {
        let last = run.samples.last();
        Self {
            n1: run.mixture.n1,
            n2: run.mixture.n2,
            ok: true,
            error: None,
            samples: run.samples.len(),
            violating_rows: run.samples.iter().map(|s| if s.violations.is_empty() { 0 } else { s.per_theta.len() }).sum(),
            max_bookkeeping_residual: run.samples.iter().map(|s| s.bookkeeping.residual()).fold(0.0, f64::max),
            max_energy_drift: run.energy_drift.iter().copied().fold(0.0, f64::max),
            final_a: last.map(|s| s.a1 + s.a2).unwrap_or(f64::NAN),
            final_trace_norm: last.map(|s| s.trace_raw).unwrap_or(f64::NAN),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    #[serde(rename = "R")]
    pub r: f64,
    pub d: usize,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "L")]
    pub l: f64,
    pub couplings: CouplingMatrix,
    pub sr_margin: Option<f64>,
    #[serde(rename = "T")]
    pub t_end: f64,
    pub dt: f64,
    pub points: Vec<PointSummary>,
    /// Rate fits at the last sampled time, when at least three points succeeded.
    pub fits: Vec<RateFit>,
    pub notes: Vec<String>,
}

impl SweepSummary {
    pub fn failed_points(&self) -> usize {
        self.points.iter().filter(|p| !p.ok).count()
    }
}

/// Runs every mixture of the configuration against one shared mean-field
/// trajectory and writes `sweep.csv`, `reports.json` and `summary.json` into
/// `out_dir`. A failing point is recorded in the summary and skipped.
pub fn run_sweep(cfg: &RunConfig, out_dir: &Path) -> Result<SweepSummary> {
    fs::create_dir_all(out_dir)?;
    let traj = hartree_trajectory(cfg)?;
    let runs = par::map_ordered(&cfg.mixtures, |m| run_point(cfg, *m, &traj));

    let mut rows = Vec::new();
    let mut reports = Vec::new();
    let mut points = Vec::new();
    for (m, run) in cfg.mixtures.iter().zip(&runs) {
        match run {
            Ok(run) => {
                rows.extend(run.rows());
                reports.extend(run.reports());
                points.push(PointSummary::of(run));
            }
            Err(e) => points.push(PointSummary::failed(*m, e)),
        }
    }
    write_csv(&out_dir.join(SWEEP_CSV), &rows)?;
    fs::write(out_dir.join(SWEEP_REPORTS), serde_json::to_string_pretty(&reports)?)?;

    let mut fits = Vec::new();
    let mut notes = Vec::new();
    if let Some(t_last) = rows.last().map(|r| r.t) {
        let mut wanted = vec![(Quantity::A, cfg.thetas()[0])];
        wanted.extend(cfg.thetas().iter().map(|th| (Quantity::TraceNorm, *th)));
        for (q, theta) in wanted {
            match fit_rows(&rows, q, t_last, theta) {
                Ok(f) => fits.push(f),
                Err(e) => notes.push(format!("fit {} theta={theta}: {e}", q.name())),
            }
        }
    }
    let summary = SweepSummary {
        r: cfg.r,
        d: cfg.grid.dim(),
        m: cfg.grid.points(),
        l: cfg.grid.length(),
        couplings: cfg.couplings,
        sr_margin: cfg.sr.map(|s| s.margin),
        t_end: cfg.raw.time.t_end,
        dt: cfg.raw.time.dt,
        points,
        fits,
        notes,
    };
    fs::write(out_dir.join(SWEEP_SUMMARY), serde_json::to_string_pretty(&summary)?)?;
    Ok(summary)
}

/// A single exact run for the mixture at `index`; writes
/// `manybody_<N1>_<N2>.{csv,json,bin}`.
pub fn run_manybody(cfg: &RunConfig, index: usize, out_dir: &Path) -> Result<PointSummary> {
    let m = *cfg.mixtures.get(index).ok_or_else(|| {
        Error::Config(vec![format!("mixture index {index} out of range (have {})", cfg.mixtures.len())])
    })?;
    fs::create_dir_all(out_dir)?;
    let traj = hartree_trajectory(cfg)?;
    let run = run_point(cfg, m, &traj)?;
    let stem = format!("manybody_{}_{}", m.n1, m.n2);
    write_csv(&out_dir.join(format!("{stem}.csv")), &run.rows())?;
    fs::write(out_dir.join(format!("{stem}.json")), serde_json::to_string_pretty(&run.reports())?)?;
    run.final_state.write(&mut fs::File::create(out_dir.join(format!("{stem}.bin")))?)?;
    Ok(PointSummary::of(&run))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HartreeRow {
    pub t: f64,
    pub mass1: f64,
    pub mass2: f64,
    pub kinetic1: f64,
    pub kinetic2: f64,
    pub pot11: f64,
    pub pot22: f64,
    pub pot12: f64,
    pub e_total: f64,
    #[serde(rename = "hN_per_particle")]
    pub hn_per_particle: f64,
    pub energy_drift: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HartreeSummary {
    pub steps: usize,
    pub max_mass_defect: f64,
    /// Relative, against `max(1, |e_total(0)|)`.
    pub max_energy_drift: f64,
}

/// Mean-field run only; writes `hartree.csv` on the stride and a final
/// checkpoint `hartree_final`.
pub fn run_hartree(cfg: &RunConfig, out_dir: &Path) -> Result<HartreeSummary> {
    fs::create_dir_all(out_dir)?;
    let sys = hartree_system(cfg)?;
    let traj = hartree_trajectory(cfg)?;
    let e0 = sys.energy_report(&traj[0])?.e_total;
    let scale = e0.abs().max(1.0);
    let mut rows = Vec::new();
    let mut max_mass: f64 = 0.0;
    let mut max_drift: f64 = 0.0;
    for (n, s) in traj.iter().enumerate() {
        max_mass = max_mass.max(mass_defect(s));
        if !sampled(n, cfg.raw.time.stride, cfg.steps) {
            continue;
        }
        let e = sys.energy_report(s)?;
        let drift = (e.e_total - e0).abs() / scale;
        max_drift = max_drift.max(drift);
        rows.push(HartreeRow {
            t: s.t,
            mass1: crate::lattice::norm(&s.psi).powi(2),
            mass2: crate::lattice::norm(&s.phi).powi(2),
            kinetic1: e.kinetic1,
            kinetic2: e.kinetic2,
            pot11: e.pot11,
            pot22: e.pot22,
            pot12: e.pot12,
            e_total: e.e_total,
            hn_per_particle: e.hn_per_particle,
            energy_drift: drift,
        });
    }
    let mut w = csv::Writer::from_path(out_dir.join(HARTREE_CSV)).map_err(csv_error)?;
    for r in &rows {
        w.serialize(r).map_err(csv_error)?;
    }
    w.flush()?;
    let last = traj.last().expect("trajectory holds the initial state");
    save_checkpoint(out_dir, "hartree_final", last, &CheckpointMeta::for_system(&sys, last.t))?;
    Ok(HartreeSummary {
        steps: cfg.steps,
        max_mass_defect: max_mass,
        max_energy_drift: max_drift,
    })
}
