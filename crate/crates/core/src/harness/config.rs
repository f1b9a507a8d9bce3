//! Run configuration: a TOML file with dotted sections.
//!
//! ```toml
//! seed = 0
//! output = "out"
//!
//! [grid]
//! d = 1
//! M = 8
//! L = 8.0
//!
//! [kinetics.species1]
//! kind = "semirelativistic"   # or "magnetic"
//! mass = 1.0
//!
//! [kinetics.species2]
//! kind = "magnetic"
//! mass = 1.0
//! potential = { constant = [0.3, 0.0, 0.0] }   # or "zero", { sine = { amplitude = 0.5, offset = [0, 0, 0] } }
//!
//! [couplings]
//! lambda11 = 0.5
//! lambda22 = 0.5
//! lambda12 = -0.5
//! mu12 = 0.1            # mu's default to 0
//! epsilon = 2.0         # defaults to 2h
//!
//! [mixture]
//! pairs = [[1, 1], [2, 2], [3, 3]]
//!
//! [time]
//! T = 0.5
//! dt = 0.025            # N-body step; sampling happens on multiples of it
//! hartree_dt = 0.001    # must divide dt
//! stride = 4
//!
//! [integrator]
//! kind = "strang"       # or "picard"
//! order = 4
//!
//! [diagnostics]
//! theta = [0.0, 0.25, 0.5, 0.75]
//! k = 1
//! l = 1
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interaction::{check_sr_stability, CouplingMatrix, SrCheck};
use crate::lattice::{Field, GridSpec, KineticKind, KineticSpec, VectorPotential};
use crate::meanfield::{MixtureSize, SplittingOrder};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub d: usize,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "L")]
    pub l: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PotentialConfig {
    Zero,
    Constant([f64; 3]),
    Sine {
        amplitude: f64,
        #[serde(default)]
        offset: [f64; 3],
    },
}

impl PotentialConfig {
    pub fn to_potential(&self) -> VectorPotential {
        match self {
            PotentialConfig::Zero => VectorPotential::Zero,
            PotentialConfig::Constant(a) => VectorPotential::Constant(*a),
            PotentialConfig::Sine { amplitude, offset } => VectorPotential::Sine {
                amplitude: *amplitude,
                offset: *offset,
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeciesKinetics {
    pub kind: KineticKind,
    #[serde(default = "one")]
    pub mass: f64,
    #[serde(default = "zero_potential")]
    pub potential: PotentialConfig,
}

fn one() -> f64 {
    1.0
}

fn zero_potential() -> PotentialConfig {
    PotentialConfig::Zero
}

impl SpeciesKinetics {
    pub fn to_spec(&self) -> KineticSpec {
        KineticSpec {
            kind: self.kind,
            mass: self.mass,
            potential: self.potential.to_potential(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KineticsConfig {
    pub species1: SpeciesKinetics,
    pub species2: SpeciesKinetics,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingConfig {
    pub lambda11: f64,
    pub lambda22: f64,
    pub lambda12: f64,
    #[serde(default)]
    pub mu11: f64,
    #[serde(default)]
    pub mu22: f64,
    #[serde(default)]
    pub mu12: f64,
    pub epsilon: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixtureConfig {
    pub pairs: Vec<[usize; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeConfig {
    #[serde(rename = "T")]
    pub t_end: f64,
    pub dt: f64,
    #[serde(default = "default_hartree_dt")]
    pub hartree_dt: f64,
    #[serde(default = "one_usize")]
    pub stride: usize,
}

fn default_hartree_dt() -> f64 {
    1e-3
}

fn one_usize() -> usize {
    1
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntegratorKind {
    #[default]
    Strang,
    Picard,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    #[serde(default)]
    pub kind: IntegratorKind,
    #[serde(default = "four")]
    pub order: u8,
    #[serde(default = "default_picard_iterations")]
    pub picard_iterations: usize,
    /// Quadrature nodes per sampling interval.
    #[serde(default = "default_picard_nodes")]
    pub picard_nodes: usize,
}

fn four() -> u8 {
    4
}

fn default_picard_iterations() -> usize {
    60
}

fn default_picard_nodes() -> usize {
    101
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            kind: IntegratorKind::Strang,
            order: 4,
            picard_iterations: default_picard_iterations(),
            picard_nodes: default_picard_nodes(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsConfig {
    #[serde(default = "default_thetas")]
    pub theta: Vec<f64>,
    #[serde(default = "one_usize")]
    pub k: usize,
    #[serde(default = "one_usize")]
    pub l: usize,
    /// Random probe observables for the duality bound.
    #[serde(default = "default_observables")]
    pub observables: usize,
}

fn default_thetas() -> Vec<f64> {
    vec![0.0, 0.25, 0.5, 0.75]
}

fn default_observables() -> usize {
    4
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self {
            theta: default_thetas(),
            k: 1,
            l: 1,
            observables: default_observables(),
        }
    }
}

/// Gaussian wave packet `exp(-|x - center|^2 / (2 width^2) + i momentum . x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrbitalConfig {
    #[serde(default)]
    pub center: [f64; 3],
    pub width: f64,
    #[serde(default)]
    pub momentum: [f64; 3],
}

impl OrbitalConfig {
    pub fn build(&self, grid: GridSpec) -> Field {
        Field::gaussian(grid, self.center, self.width, self.momentum)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    pub psi: OrbitalConfig,
    pub phi: OrbitalConfig,
}

impl Default for InitialConfig {
    fn default() -> Self {
        Self {
            psi: OrbitalConfig {
                center: [-0.5, 0.0, 0.0],
                width: 1.0,
                momentum: [0.5, 0.0, 0.0],
            },
            phi: OrbitalConfig {
                center: [0.5, 0.0, 0.0],
                width: 1.0,
                momentum: [-0.5, 0.0, 0.0],
            },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default = "default_cap")]
    pub state_cap: usize,
    pub grid: GridConfig,
    pub kinetics: KineticsConfig,
    pub couplings: CouplingConfig,
    pub mixture: MixtureConfig,
    pub time: TimeConfig,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig,
    #[serde(default)]
    pub initial: InitialConfig,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

fn default_cap() -> usize {
    crate::fock::DEFAULT_STATE_CAP
}

/// A configuration that passed every gate.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub raw: RawConfig,
    pub grid: GridSpec,
    pub kinetics: [KineticSpec; 2],
    pub couplings: CouplingMatrix,
    pub mixtures: Vec<MixtureSize>,
    pub r: f64,
    /// Present whenever a species is semi-relativistic.
    pub sr: Option<SrCheck>,
    pub order: SplittingOrder,
    /// Hartree sub-steps per N-body step.
    pub hartree_substeps: usize,
    /// N-body steps in the run.
    pub steps: usize,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<RunConfig> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(vec![format!("parse: {e}")]))?;
        validate_config(raw)
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(vec![format!("cannot read {}: {e}", path.display())]))?;
        Self::from_toml(&text)
    }

    pub fn psi0(&self) -> Field {
        self.raw.initial.psi.build(self.grid)
    }

    pub fn phi0(&self) -> Field {
        self.raw.initial.phi.build(self.grid)
    }

    pub fn thetas(&self) -> &[f64] {
        &self.raw.diagnostics.theta
    }
}

fn integer_ratio(total: f64, step: f64) -> Option<usize> {
    let n = (total / step).round();
    ((n * step - total).abs() <= 1e-9 * total.abs().max(step) && n >= 0.0).then_some(n as usize)
}

/// Checks the assumptions behind a run and normalizes the configuration.
/// Every violation is reported, tagged with the assumption it breaks:
/// (MF) mean-field scaling at fixed R, (RM)/(RS) regularity and
/// normalization of the data, (SR) semi-relativistic stability.
pub fn validate_config(raw: RawConfig) -> Result<RunConfig> {
    let mut errors = Vec::new();

    let grid = match GridSpec::new(raw.grid.d, raw.grid.m, raw.grid.l) {
        Ok(g) => Some(g),
        Err(e) => {
            errors.push(format!("grid: {e}"));
            None
        }
    };

    // (MF)
    let mut mixtures = Vec::new();
    if raw.mixture.pairs.is_empty() {
        errors.push("(MF) mixture list is empty".into());
    }
    for &[n1, n2] in &raw.mixture.pairs {
        match MixtureSize::new(n1, n2) {
            Ok(m) => mixtures.push(m),
            Err(_) => errors.push(format!("(MF) particle numbers ({n1}, {n2}) must be positive")),
        }
    }
    if let Some(first) = mixtures.first().copied() {
        for m in &mixtures[1..] {
            if !first.same_ratio(m) {
                errors.push(format!(
                    "(MF) R mismatch: ({}, {}) has N1/N2 = {}/{}, but ({}, {}) has {}/{}",
                    m.n1, m.n2, m.n1, m.n2, first.n1, first.n2, first.n1, first.n2
                ));
            }
        }
    }
    let r = mixtures.first().map(|m| m.r()).unwrap_or(1.0);

    // kinetics: (RM) for magnetic, (RS) for semi-relativistic
    let kinetics = [raw.kinetics.species1.to_spec(), raw.kinetics.species2.to_spec()];
    for (i, k) in kinetics.iter().enumerate() {
        let tag = match k.kind {
            KineticKind::Magnetic => "(RM)",
            KineticKind::Semirelativistic => "(RS)",
        };
        if let Err(e) = k.validate() {
            errors.push(format!("{tag} species {}: {e}", i + 1));
        }
        if let (Some(g), KineticKind::Magnetic) = (grid, k.kind) {
            if let Err(e) = k.potential.links(&g) {
                errors.push(format!("(RM) species {} vector potential: {e}", i + 1));
            }
        }
    }

    let epsilon = raw.couplings.epsilon.unwrap_or_else(|| 2.0 * grid.map(|g| g.spacing()).unwrap_or(1.0));
    let c = &raw.couplings;
    let couplings = CouplingMatrix {
        lambda11: c.lambda11,
        lambda22: c.lambda22,
        lambda12: c.lambda12,
        mu11: c.mu11,
        mu22: c.mu22,
        mu12: c.mu12,
        epsilon,
    };
    if let Err(e) = couplings.validate() {
        errors.push(format!("couplings: {e}"));
    }

    let semirel = kinetics.iter().any(|k| k.kind == KineticKind::Semirelativistic);
    let sr = semirel.then(|| check_sr_stability(&couplings));
    if let Some(s) = sr {
        if !s.pass {
            errors.push(format!(
                "(SR) violated: negative parts (l11, l22, l12) = ({:.6}, {:.6}, {:.6}) need l11, l22 < 4/pi and l12^2 < (4/pi - l11)(4/pi - l22); margin {:.6}",
                s.negative_parts[0], s.negative_parts[1], s.negative_parts[2], s.margin
            ));
        }
    }

    // initial data
    for (name, o) in [("psi", &raw.initial.psi), ("phi", &raw.initial.phi)] {
        let tag = if semirel { "(RS)" } else { "(RM)" };
        if !(o.width.is_finite() && o.width > 0.0) {
            errors.push(format!("{tag} initial {name}: width {} must be positive", o.width));
        } else if let Some(g) = grid {
            if o.width < g.spacing() {
                errors.push(format!(
                    "{tag} initial {name}: width {} is below the grid spacing {}; the orbital is not resolved",
                    o.width,
                    g.spacing()
                ));
            }
        }
    }

    // time
    let t = &raw.time;
    let mut steps = 0;
    let mut substeps = 1;
    if !(t.t_end.is_finite() && t.t_end >= 0.0) {
        errors.push(format!("time: T = {} must be >= 0", t.t_end));
    }
    if !(t.dt.is_finite() && t.dt > 0.0) {
        errors.push(format!("time: dt = {} must be > 0", t.dt));
    } else {
        match integer_ratio(t.t_end, t.dt) {
            Some(n) => steps = n,
            None => errors.push(format!("time: T = {} is not a multiple of dt = {}", t.t_end, t.dt)),
        }
        if !(t.hartree_dt.is_finite() && t.hartree_dt > 0.0) {
            errors.push(format!("time: hartree_dt = {} must be > 0", t.hartree_dt));
        } else {
            match integer_ratio(t.dt, t.hartree_dt) {
                Some(n) if n >= 1 => substeps = n,
                _ => errors.push(format!("time: hartree_dt = {} does not divide dt = {}", t.hartree_dt, t.dt)),
            }
        }
    }
    if t.stride == 0 {
        errors.push("time: stride must be >= 1".into());
    }

    let order = match raw.integrator.order {
        2 => SplittingOrder::Second,
        4 => SplittingOrder::Fourth,
        o => {
            errors.push(format!("integrator: order {o} is not 2 or 4"));
            SplittingOrder::Second
        }
    };
    if raw.integrator.kind == IntegratorKind::Picard && raw.integrator.picard_nodes < 2 {
        errors.push("integrator: picard_nodes must be >= 2".into());
    }

    let d = &raw.diagnostics;
    if d.theta.is_empty() {
        errors.push("diagnostics: theta list is empty".into());
    }
    for th in &d.theta {
        if !(0.0..1.0).contains(th) {
            errors.push(format!("diagnostics: theta = {th} outside [0, 1)"));
        }
    }
    if d.k + d.l == 0 {
        errors.push("diagnostics: k and l are both zero".into());
    }
    for m in &mixtures {
        if d.k > m.n1 || d.l > m.n2 {
            errors.push(format!("diagnostics: (k, l) = ({}, {}) exceeds N = ({}, {})", d.k, d.l, m.n1, m.n2));
        }
    }

    if !errors.is_empty() {
        return Err(Error::Config(errors));
    }
    Ok(RunConfig {
        grid: grid.expect("checked"),
        kinetics,
        couplings,
        mixtures,
        r,
        sr,
        order,
        hartree_substeps: substeps,
        steps,
        raw,
    })
}
