//! Coupled Hartree system for the two condensate orbitals.
//!
//! ```text
//! i d/dt psi = S1 psi + (u11 * |psi|^2) psi + R^-1 (u12 * |phi|^2) psi
//! i d/dt phi = S2 phi + (u22 * |phi|^2) phi + R    (u12 * |psi|^2) phi
//! ```
//!
//! Strang splitting is the production integrator; a Picard iteration on the
//! Duhamel form serves as an independent oracle.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interaction::{build_kernel, pair_energy, CouplingMatrix, Kernel};
use crate::krylov::LanczosConfig;
use crate::lattice::{self, io, Field, GridSpec, KineticKind, KineticOperator, KineticSpec};
use crate::C64;

/// Particle numbers with the mean-field scaling `R = sqrt(N1/N2)` and
/// `m(N1, N2) = sqrt(N1 N2)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MixtureSize {
    pub n1: usize,
    pub n2: usize,
}

impl MixtureSize {
    pub fn new(n1: usize, n2: usize) -> Result<Self> {
        if n1 == 0 || n2 == 0 {
            return Err(Error::InvalidParameter(format!(
                "particle numbers must be positive, got ({n1}, {n2})"
            )));
        }
        Ok(Self { n1, n2 })
    }

    pub fn r(&self) -> f64 {
        (self.n1 as f64 / self.n2 as f64).sqrt()
    }

    pub fn m(&self) -> f64 {
        ((self.n1 * self.n2) as f64).sqrt()
    }

    pub fn total(&self) -> usize {
        self.n1 + self.n2
    }

    /// Exact rational comparison of `R^2`.
    pub fn same_ratio(&self, other: &MixtureSize) -> bool {
        self.n1 * other.n2 == other.n1 * self.n2
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HartreeState {
    pub psi: Field,
    pub phi: Field,
    pub t: f64,
}

impl HartreeState {
    pub fn new(psi: Field, phi: Field) -> Result<Self> {
        psi.grid().check_same(phi.grid())?;
        Ok(Self { psi, phi, t: 0.0 })
    }

    pub fn grid(&self) -> &GridSpec {
        self.psi.grid()
    }

    /// `sqrt(|psi - psi'|^2 + |phi - phi'|^2)`.
    pub fn distance(&self, other: &HartreeState) -> Result<f64> {
        let a = self.psi.distance(&other.psi)?;
        let b = self.phi.distance(&other.phi)?;
        Ok(a.hypot(b))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub kinetic1: f64,
    pub kinetic2: f64,
    pub pot11: f64,
    pub pot22: f64,
    pub pot12: f64,
    pub e_total: f64,
    #[serde(rename = "hN_per_particle")]
    pub hn_per_particle: f64,
}

/// Splitting order of [`HartreeSystem::step`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplittingOrder {
    #[default]
    Second,
    /// Yoshida triple jump of Strang steps.
    Fourth,
}

#[derive(Clone, Debug)]
pub struct HartreeSystem {
    grid: GridSpec,
    kin1: KineticOperator,
    kin2: KineticOperator,
    u11: Kernel,
    u22: Kernel,
    u12: Kernel,
    couplings: CouplingMatrix,
    r: f64,
    lanczos: LanczosConfig,
}

impl HartreeSystem {
    pub fn new(grid: GridSpec, kinetics: [&KineticSpec; 2], couplings: CouplingMatrix, r: f64) -> Result<Self> {
        couplings.validate()?;
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::InvalidParameter(format!("R = {r} must be positive")));
        }
        let c = &couplings;
        Ok(Self {
            grid,
            kin1: KineticOperator::new(kinetics[0], grid)?,
            kin2: KineticOperator::new(kinetics[1], grid)?,
            u11: build_kernel(grid, c.lambda11, c.mu11, c.epsilon)?,
            u22: build_kernel(grid, c.lambda22, c.mu22, c.epsilon)?,
            u12: build_kernel(grid, c.lambda12, c.mu12, c.epsilon)?,
            couplings,
            r,
            lanczos: LanczosConfig::default(),
        })
    }

    pub fn with_lanczos(mut self, cfg: LanczosConfig) -> Self {
        self.lanczos = cfg;
        self
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn couplings(&self) -> &CouplingMatrix {
        &self.couplings
    }

    pub fn kinetics(&self) -> [&KineticOperator; 2] {
        [&self.kin1, &self.kin2]
    }

    pub fn kernels(&self) -> [&Kernel; 3] {
        [&self.u11, &self.u22, &self.u12]
    }

    fn check(&self, s: &HartreeState) -> Result<()> {
        self.grid.check_same(s.psi.grid())?;
        self.grid.check_same(s.phi.grid())
    }

    /// Mean-field potentials `(f, g)` felt by `psi` and `phi`.
    pub fn potentials(&self, psi: &Field, phi: &Field) -> Result<(Vec<f64>, Vec<f64>)> {
        let rho1 = psi.density();
        let rho2 = phi.density();
        let v11 = self.u11.convolve(&rho1)?;
        let v12_2 = self.u12.convolve(&rho2)?;
        let v22 = self.u22.convolve(&rho2)?;
        let v12_1 = self.u12.convolve(&rho1)?;
        let f = v11.iter().zip(&v12_2).map(|(a, b)| a + b / self.r).collect();
        let g = v22.iter().zip(&v12_1).map(|(a, b)| a + b * self.r).collect();
        Ok((f, g))
    }

    /// Time derivative `(d psi/dt, d phi/dt)`.
    pub fn rhs(&self, s: &HartreeState) -> Result<(Field, Field)> {
        self.check(s)?;
        let (f, g) = self.potentials(&s.psi, &s.phi)?;
        let generator = |kin: &KineticOperator, x: &Field, v: &[f64]| -> Result<Field> {
            let mut y = vec![C64::new(0.0, 0.0); x.values().len()];
            kin.apply_slice(x.values(), &mut y);
            let mi = C64::new(0.0, -1.0);
            for ((yi, xi), vi) in y.iter_mut().zip(x.values()).zip(v) {
                *yi = mi * (*yi + xi * vi);
            }
            Field::new(self.grid, y)
        };
        Ok((generator(&self.kin1, &s.psi, &f)?, generator(&self.kin2, &s.phi, &g)?))
    }

    /// One Strang step: half kinetic, nonlinear phase, half kinetic.
    pub fn strang_step(&self, s: &HartreeState, dt: f64) -> Result<HartreeState> {
        self.check(s)?;
        if !dt.is_finite() {
            return Err(Error::InvalidParameter(format!("time step {dt}")));
        }
        let half = 0.5 * dt;
        let mut psi = self.kin1.propagate_slice(s.psi.values(), half, &self.lanczos)?;
        let mut phi = self.kin2.propagate_slice(s.phi.values(), half, &self.lanczos)?;
        let a = Field::new(self.grid, psi)?;
        let b = Field::new(self.grid, phi)?;
        let (f, g) = self.potentials(&a, &b)?;
        psi = a.into_values();
        phi = b.into_values();
        for (x, v) in psi.iter_mut().zip(&f) {
            *x *= C64::from_polar(1.0, -v * dt);
        }
        for (x, v) in phi.iter_mut().zip(&g) {
            *x *= C64::from_polar(1.0, -v * dt);
        }
        let psi = self.kin1.propagate_slice(&psi, half, &self.lanczos)?;
        let phi = self.kin2.propagate_slice(&phi, half, &self.lanczos)?;
        Ok(HartreeState {
            psi: Field::new(self.grid, psi)?,
            phi: Field::new(self.grid, phi)?,
            t: s.t + dt,
        })
    }

    pub fn step(&self, s: &HartreeState, dt: f64, order: SplittingOrder) -> Result<HartreeState> {
        match order {
            SplittingOrder::Second => self.strang_step(s, dt),
            SplittingOrder::Fourth => {
                let cbrt2 = 2f64.cbrt();
                let w1 = 1.0 / (2.0 - cbrt2);
                let w0 = -cbrt2 * w1;
                let a = self.strang_step(s, w1 * dt)?;
                let b = self.strang_step(&a, w0 * dt)?;
                let mut c = self.strang_step(&b, w1 * dt)?;
                c.t = s.t + dt;
                Ok(c)
            }
        }
    }

    /// `steps` steps of size `dt`, calling `observe` on the initial state and
    /// after every step.
    pub fn evolve<F>(
        &self,
        s: &HartreeState,
        dt: f64,
        steps: usize,
        order: SplittingOrder,
        mut observe: F,
    ) -> Result<HartreeState>
    where
        F: FnMut(usize, &HartreeState) -> Result<()>,
    {
        let mut cur = s.clone();
        observe(0, &cur)?;
        for n in 1..=steps {
            cur = self.step(&cur, dt, order)?;
            cur.t = s.t + n as f64 * dt;
            observe(n, &cur)?;
        }
        Ok(cur)
    }

    /// Fixed-point iteration of the Duhamel map on `[0, T]` with trapezoidal
    /// quadrature on `n_quad` nodes. The kinetic flow is applied exactly, only
    /// the nonlinear source is discretized:
    ///
    /// ```text
    /// w_j = U(D) [w_{j-1} - i D/2 F_{j-1}] - i D/2 F_j,   F_j = V[v_j] v_j
    /// ```
    ///
    /// with `v` the previous iterate. Stops once the maximal node-wise L2
    /// change drops below `1e-8`.
    pub fn picard_solve(&self, s0: &HartreeState, t_end: f64, n_iter: usize, n_quad: usize) -> Result<PicardOutcome> {
        self.check(s0)?;
        if n_quad < 2 {
            return Err(Error::InvalidParameter("picard needs at least 2 quadrature nodes".into()));
        }
        if !(t_end.is_finite() && t_end > 0.0) {
            return Err(Error::InvalidParameter(format!("horizon T = {t_end} must be positive")));
        }
        let delta = t_end / (n_quad - 1) as f64;
        let w = self.grid.cell_volume();
        let dist = |a: &[C64], b: &[C64]| -> f64 { (w * a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>()).sqrt() };

        // iterate 0: free evolution
        let mut traj: Vec<(Vec<C64>, Vec<C64>)> = Vec::with_capacity(n_quad);
        traj.push((s0.psi.values().to_vec(), s0.phi.values().to_vec()));
        for j in 1..n_quad {
            let (p, q) = &traj[j - 1];
            traj.push((
                self.kin1.propagate_slice(p, delta, &self.lanczos)?,
                self.kin2.propagate_slice(q, delta, &self.lanczos)?,
            ));
        }

        let mut residuals = Vec::new();
        let source = |p: &[C64], q: &[C64]| -> Result<(Vec<C64>, Vec<C64>)> {
            let a = Field::new(self.grid, p.to_vec())?;
            let b = Field::new(self.grid, q.to_vec())?;
            let (f, g) = self.potentials(&a, &b)?;
            let sp = p.iter().zip(&f).map(|(x, v)| x * v).collect();
            let sq = q.iter().zip(&g).map(|(x, v)| x * v).collect();
            Ok((sp, sq))
        };
        let half = C64::new(0.0, -0.5 * delta);
        for it in 1..=n_iter {
            let sources = traj
                .iter()
                .map(|(p, q)| source(p, q))
                .collect::<Result<Vec<_>>>()?;
            let mut next: Vec<(Vec<C64>, Vec<C64>)> = Vec::with_capacity(n_quad);
            next.push(traj[0].clone());
            let mut res = 0.0f64;
            for j in 1..n_quad {
                let (wp, wq) = &next[j - 1];
                let (fp0, fq0) = &sources[j - 1];
                let (fp1, fq1) = &sources[j];
                let ap: Vec<C64> = wp.iter().zip(fp0).map(|(x, f)| x + half * f).collect();
                let aq: Vec<C64> = wq.iter().zip(fq0).map(|(x, f)| x + half * f).collect();
                let mut p = self.kin1.propagate_slice(&ap, delta, &self.lanczos)?;
                let mut q = self.kin2.propagate_slice(&aq, delta, &self.lanczos)?;
                for (x, f) in p.iter_mut().zip(fp1) {
                    *x += half * f;
                }
                for (x, f) in q.iter_mut().zip(fq1) {
                    *x += half * f;
                }
                if p.iter().chain(&q).any(|z| !z.is_finite()) {
                    return Err(Error::NoContraction {
                        iterations: it,
                        residual: f64::INFINITY,
                    });
                }
                res = res.max(dist(&p, &traj[j].0).hypot(dist(&q, &traj[j].1)));
                next.push((p, q));
            }
            traj = next;
            residuals.push(res);
            if res < PICARD_TOL {
                let (p, q) = traj.pop().expect("n_quad >= 2");
                return Ok(PicardOutcome {
                    state: HartreeState {
                        psi: Field::new(self.grid, p)?,
                        phi: Field::new(self.grid, q)?,
                        t: s0.t + t_end,
                    },
                    iterations: it,
                    residuals,
                });
            }
        }
        Err(Error::NoContraction {
            iterations: n_iter,
            residual: residuals.last().copied().unwrap_or(f64::INFINITY),
        })
    }

    /// Kinetic and pair energies, the conserved `E_mag`/`E_sr` and the
    /// Hartree functional per species-2 particle.
    pub fn energy_report(&self, s: &HartreeState) -> Result<EnergyReport> {
        self.check(s)?;
        let kinetic1 = self.kin1.expectation(&s.psi)?;
        let kinetic2 = self.kin2.expectation(&s.phi)?;
        let pot11 = pair_energy(&self.u11, &s.psi, &s.psi)?;
        let pot22 = pair_energy(&self.u22, &s.phi, &s.phi)?;
        let pot12 = pair_energy(&self.u12, &s.psi, &s.phi)?;
        let r = self.r;
        let e_total = r * (kinetic1 + 0.5 * pot11) + (kinetic2 + 0.5 * pot22) / r + pot12;
        Ok(EnergyReport {
            kinetic1,
            kinetic2,
            pot11,
            pot22,
            pot12,
            e_total,
            // H_N / N2 = R^2 (k1 + p11/2) + (k2 + p22/2) + R p12
            hn_per_particle: r * e_total,
        })
    }

    /// Relative difference of two Hartree solutions propagated from initial
    /// data a distance `eps` apart, divided by `eps`.
    pub fn sensitivity(&self, s: &HartreeState, perturbation: &HartreeState, eps: f64, dt: f64, steps: usize) -> Result<f64> {
        let mut psi = s.psi.values().to_vec();
        let mut phi = s.phi.values().to_vec();
        for (x, d) in psi.iter_mut().zip(perturbation.psi.values()) {
            *x += eps * d;
        }
        for (x, d) in phi.iter_mut().zip(perturbation.phi.values()) {
            *x += eps * d;
        }
        let s2 = HartreeState {
            psi: Field::new(self.grid, psi)?.normalized(),
            phi: Field::new(self.grid, phi)?.normalized(),
            t: s.t,
        };
        let d0 = s.distance(&s2)?;
        let a = self.evolve(s, dt, steps, SplittingOrder::Second, |_, _| Ok(()))?;
        let b = self.evolve(&s2, dt, steps, SplittingOrder::Second, |_, _| Ok(()))?;
        Ok(a.distance(&b)? / d0)
    }
}

pub const PICARD_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct PicardOutcome {
    pub state: HartreeState,
    pub iterations: usize,
    /// Successive-iterate distances, one per iteration.
    pub residuals: Vec<f64>,
}

/// Sidecar record stored next to a checkpoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub t: f64,
    pub couplings: CouplingMatrix,
    pub kinds: [KineticKind; 2],
    pub masses: [f64; 2],
    pub r: f64,
}

impl CheckpointMeta {
    pub fn for_system(sys: &HartreeSystem, t: f64) -> Self {
        Self {
            t,
            couplings: sys.couplings,
            kinds: [sys.kin1.kind(), sys.kin2.kind()],
            masses: [sys.kin1.mass(), sys.kin2.mass()],
            r: sys.r,
        }
    }
}

fn checkpoint_paths(dir: &Path, name: &str) -> [PathBuf; 3] {
    [
        dir.join(format!("{name}_psi.bin")),
        dir.join(format!("{name}_phi.bin")),
        dir.join(format!("{name}.json")),
    ]
}

/// Writes `<name>_psi.bin`, `<name>_phi.bin` and `<name>.json` into `dir`.
pub fn save_checkpoint(dir: &Path, name: &str, s: &HartreeState, meta: &CheckpointMeta) -> Result<()> {
    fs::create_dir_all(dir)?;
    let [p, q, m] = checkpoint_paths(dir, name);
    io::write_field(&mut fs::File::create(p)?, &s.psi)?;
    io::write_field(&mut fs::File::create(q)?, &s.phi)?;
    fs::write(m, serde_json::to_string_pretty(meta)?)?;
    Ok(())
}

pub fn load_checkpoint(dir: &Path, name: &str) -> Result<(HartreeState, CheckpointMeta)> {
    let [p, q, m] = checkpoint_paths(dir, name);
    let psi = io::read_field(&mut fs::File::open(p)?)?;
    let phi = io::read_field(&mut fs::File::open(q)?)?;
    let meta: CheckpointMeta = serde_json::from_str(&fs::read_to_string(m)?)?;
    let mut s = HartreeState::new(psi, phi)?;
    s.t = meta.t;
    Ok((s, meta))
}

/// Sum of the orbital masses' deviation from one.
pub fn mass_defect(s: &HartreeState) -> f64 {
    (lattice::norm(&s.psi) - 1.0).abs().max((lattice::norm(&s.phi) - 1.0).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{inner, kinetic_propagator, VectorPotential};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid() -> GridSpec {
        GridSpec::new(1, 64, 16.0).unwrap()
    }

    fn initial(g: GridSpec) -> HartreeState {
        HartreeState::new(
            Field::gaussian(g, [-1.0, 0.0, 0.0], 1.2, [0.8, 0.0, 0.0]),
            Field::gaussian(g, [1.5, 0.0, 0.0], 0.9, [-0.5, 0.0, 0.0]),
        )
        .unwrap()
    }

    fn couplings(l: f64) -> CouplingMatrix {
        CouplingMatrix {
            lambda11: l,
            lambda22: -l,
            lambda12: l,
            mu11: 0.2,
            mu22: 0.0,
            mu12: 0.1,
            epsilon: 0.5,
        }
    }

    fn random_state(g: GridSpec, seed: u64) -> HartreeState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut f = || {
            Field::new(g, (0..g.sites()).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect())
                .unwrap()
                .normalized()
        };
        HartreeState::new(f(), f()).unwrap()
    }

    #[test]
    fn mixture_scaling() {
        let m = MixtureSize::new(4, 1).unwrap();
        assert_eq!(m.r(), 2.0);
        assert_eq!(m.m(), 2.0);
        assert!(m.same_ratio(&MixtureSize::new(8, 2).unwrap()));
        assert!(!m.same_ratio(&MixtureSize::new(2, 1).unwrap()));
        assert!(MixtureSize::new(0, 3).is_err());
    }

    #[test]
    fn free_rhs_is_kinetic_generator() {
        let g = grid();
        let spec = KineticSpec::magnetic(1.0, VectorPotential::Zero);
        let sys = HartreeSystem::new(g, [&spec, &spec], CouplingMatrix::uniform(0.0, 0.0, 0.5), 1.0).unwrap();
        let s = initial(g);
        let (a, _) = sys.rhs(&s).unwrap();
        let k = sys.kinetics()[0].apply(&s.psi).unwrap().scaled(C64::new(0.0, -1.0));
        assert!(a.distance(&k).unwrap() < 1e-13);
    }

    #[test]
    fn symmetric_rhs_components_agree() {
        let g = grid();
        let spec = KineticSpec::semirelativistic(1.0);
        let sys = HartreeSystem::new(g, [&spec, &spec], CouplingMatrix::uniform(0.7, 0.3, 0.5), 1.0).unwrap();
        let psi = Field::gaussian(g, [0.3, 0.0, 0.0], 1.0, [0.2, 0.0, 0.0]);
        let (a, b) = sys.rhs(&HartreeState::new(psi.clone(), psi).unwrap()).unwrap();
        assert!(a.distance(&b).unwrap() < 1e-14);
    }

    #[test]
    fn mass_flux_vanishes() {
        let g = GridSpec::new(2, 8, 4.0).unwrap();
        let spec = KineticSpec::magnetic(1.0, VectorPotential::Constant([0.3, -0.2, 0.0]));
        let sys = HartreeSystem::new(g, [&spec, &spec], couplings(0.8), 1.3).unwrap();
        let s = random_state(g, 3);
        let (a, b) = sys.rhs(&s).unwrap();
        assert!(inner(&s.psi, &a).unwrap().re.abs() < 1e-12);
        assert!(inner(&s.phi, &b).unwrap().re.abs() < 1e-12);
    }

    #[test]
    fn free_strang_matches_propagator() {
        let g = grid();
        for spec in [KineticSpec::semirelativistic(1.0), KineticSpec::magnetic(0.7, VectorPotential::Zero)] {
            let sys = HartreeSystem::new(g, [&spec, &spec], CouplingMatrix::uniform(0.0, 0.0, 0.5), 1.0).unwrap();
            let s = initial(g);
            let out = sys.strang_step(&s, 0.05).unwrap();
            let want = kinetic_propagator(&spec, 0.05, &s.psi).unwrap();
            assert!(out.psi.distance(&want).unwrap() < 1e-12);
        }
    }

    #[test]
    fn strang_is_second_order() {
        let g = grid();
        let spec = KineticSpec::magnetic(1.0, VectorPotential::Zero);
        let sys = HartreeSystem::new(g, [&spec, &spec], couplings(1.0), 1.0).unwrap();
        let s = initial(g);
        let t = 0.2;
        let reference = sys.evolve(&s, t / 64.0, 64, SplittingOrder::Fourth, |_, _| Ok(())).unwrap();
        let err = |n: usize| {
            sys.evolve(&s, t / n as f64, n, SplittingOrder::Second, |_, _| Ok(()))
                .unwrap()
                .distance(&reference)
                .unwrap()
        };
        let ratio = err(4) / err(8);
        assert!((ratio - 4.0).abs() < 0.3, "{ratio}");
        // single step local error ~ dt^3
        let one = |dt: f64| {
            let a = sys.strang_step(&s, dt).unwrap();
            let b = sys.step(&s, dt, SplittingOrder::Fourth).unwrap();
            a.distance(&b).unwrap()
        };
        let local = one(0.04) / one(0.02);
        assert!((local - 8.0).abs() < 1.0, "{local}");
    }

    #[test]
    fn strang_preserves_mass() {
        let g = GridSpec::new(1, 32, 8.0).unwrap();
        let spec = KineticSpec::magnetic(1.0, VectorPotential::Sine { amplitude: 0.5, offset: [0.2, 0.0, 0.0] });
        let sys = HartreeSystem::new(g, [&spec, &spec], couplings(0.5), 1.0).unwrap();
        let mut s = initial(g);
        for _ in 0..20 {
            s = sys.strang_step(&s, 0.01).unwrap();
            assert!(mass_defect(&s) < 1e-12);
        }
    }

    #[test]
    fn picard_free_converges_in_one_iteration() {
        let g = grid();
        let spec = KineticSpec::semirelativistic(1.0);
        let sys = HartreeSystem::new(g, [&spec, &spec], CouplingMatrix::uniform(0.0, 0.0, 0.5), 1.0).unwrap();
        let s = initial(g);
        let out = sys.picard_solve(&s, 0.3, 5, 11).unwrap();
        assert_eq!(out.iterations, 1);
        let want = kinetic_propagator(&spec, 0.3, &s.psi).unwrap();
        assert!(out.state.psi.distance(&want).unwrap() < 1e-12);
    }

    #[test]
    fn picard_contracts_geometrically() {
        let g = grid();
        let spec = KineticSpec::magnetic(1.0, VectorPotential::Zero);
        let sys = HartreeSystem::new(g, [&spec, &spec], couplings(0.3), 1.0).unwrap();
        let out = sys.picard_solve(&initial(g), 0.1, 30, 101).unwrap();
        let r = &out.residuals;
        assert!(r.len() >= 3);
        for w in r.windows(2) {
            assert!(w[1] < w[0]);
        }
        let strang = sys.evolve(&initial(g), 1e-3, 100, SplittingOrder::Second, |_, _| Ok(())).unwrap();
        assert!(out.state.distance(&strang).unwrap() < 1e-5);
    }

    #[test]
    fn picard_reports_no_contraction() {
        let g = grid();
        let spec = KineticSpec::magnetic(1.0, VectorPotential::Zero);
        let sys = HartreeSystem::new(g, [&spec, &spec], couplings(0.3), 1.0).unwrap();
        match sys.picard_solve(&initial(g), 0.1, 1, 11) {
            Err(Error::NoContraction { iterations: 1, residual }) => assert!(residual > 0.0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn free_energy_is_weighted_kinetic() {
        let g = GridSpec::new(1, 16, 2.0 * std::f64::consts::PI).unwrap();
        let spec = KineticSpec::semirelativistic(1.0);
        let sys = HartreeSystem::new(g, [&spec, &spec], CouplingMatrix::uniform(0.0, 0.0, 0.5), 2.0).unwrap();
        let s = HartreeState::new(Field::plane_wave(g, [1, 0, 0]), Field::plane_wave(g, [2, 0, 0])).unwrap();
        let e = sys.energy_report(&s).unwrap();
        let want = 2.0 * 2f64.sqrt() + 5f64.sqrt() / 2.0;
        assert!((e.e_total - want).abs() < 1e-12);
        assert!((e.hn_per_particle - 2.0 * want).abs() < 1e-12);
    }

    #[test]
    fn energy_combination_identity() {
        let g = GridSpec::new(1, 32, 8.0).unwrap();
        let spec = KineticSpec::magnetic(1.0, VectorPotential::Zero);
        let sys = HartreeSystem::new(g, [&spec, &spec], couplings(0.9), 0.5).unwrap();
        let e = sys.energy_report(&random_state(g, 9)).unwrap();
        let r = 0.5;
        let want = r * (e.kinetic1 + 0.5 * e.pot11) + (e.kinetic2 + 0.5 * e.pot22) / r + e.pot12;
        assert!((e.e_total - want).abs() < 1e-12);
    }

    #[test]
    fn fourth_order_conserves_energy_tightly() {
        let g = grid();
        let spec = KineticSpec::semirelativistic(1.0);
        let sys = HartreeSystem::new(g, [&spec, &spec], couplings(0.5), 1.0).unwrap();
        let s = initial(g);
        let e0 = sys.energy_report(&s).unwrap().e_total;
        let out = sys.evolve(&s, 1e-2, 50, SplittingOrder::Fourth, |_, _| Ok(())).unwrap();
        let e1 = sys.energy_report(&out).unwrap().e_total;
        assert!(((e1 - e0) / e0).abs() < 1e-8, "{}", (e1 - e0) / e0);
    }

    #[test]
    fn checkpoint_roundtrip() {
        let g = GridSpec::new(1, 16, 4.0).unwrap();
        let spec = KineticSpec::magnetic(1.0, VectorPotential::Zero);
        let sys = HartreeSystem::new(g, [&spec, &spec], couplings(0.2), 1.0).unwrap();
        let mut s = random_state(g, 1);
        s.t = 0.25;
        let dir = tempfile::tempdir().unwrap();
        let meta = CheckpointMeta::for_system(&sys, s.t);
        save_checkpoint(dir.path(), "run", &s, &meta).unwrap();
        let (back, m) = load_checkpoint(dir.path(), "run").unwrap();
        assert_eq!(back, s);
        assert_eq!(m, meta);
    }

    #[test]
    fn sensitivity_is_finite() {
        let g = GridSpec::new(1, 32, 8.0).unwrap();
        let spec = KineticSpec::magnetic(1.0, VectorPotential::Zero);
        let sys = HartreeSystem::new(g, [&spec, &spec], couplings(0.5), 1.0).unwrap();
        let s = initial(g);
        let ratio = sys.sensitivity(&s, &random_state(g, 4), 1e-6, 1e-2, 20).unwrap();
        assert!(ratio.is_finite() && ratio > 0.1 && ratio < 10.0, "{ratio}");
    }
}
