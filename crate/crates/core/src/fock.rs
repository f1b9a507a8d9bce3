//! Exact N-body wavefunctions on the full product grid and their dynamics
//! under the mean-field-scaled Hamiltonian
//!
//! ```text
//! H_N = sum_j S1_j + sum_j S2_j
//!     + 1/(N1-1) sum_{i<j} u11(x_i - x_j) + 1/(N2-1) sum_{i<j} u22(y_i - y_j)
//!     + 1/sqrt(N1 N2) sum_{i,j} u12(x_i - y_j)
//! ```
//!
//! Amplitudes are stored row-major over `N1 + N2` slots, species-1 slots
//! first, slot 0 most significant. Each slot ranges over the `M^d` sites.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::interaction::{build_kernel, CouplingMatrix, Kernel};
use crate::krylov::{self, LanczosConfig};
use crate::lattice::{io, Field, GridSpec, KineticOperator, KineticSpec};
use crate::linalg::{self, CMatrix};
use crate::meanfield::MixtureSize;
use crate::{par, C64};

/// Default amplitude cap, about 512 MiB of complex doubles.
pub const DEFAULT_STATE_CAP: usize = 1 << 25;
/// Largest single-slot site count for which the dense kinetic matrices are built.
pub const SLOT_CAP: usize = 1024;
/// Largest dimension assembled densely.
pub const DENSE_CAP: usize = 4096;

fn state_len(grid: &GridSpec, mixture: &MixtureSize, cap: usize) -> Result<usize> {
    let s = grid.sites() as u128;
    let n = (0..mixture.total()).try_fold(1u128, |acc, _| acc.checked_mul(s)).unwrap_or(u128::MAX);
    if n > cap as u128 {
        return Err(Error::SizeCap {
            what: "many-body state vector",
            needed: n,
            cap: cap as u128,
        });
    }
    Ok(n as usize)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ManyBodyState {
    mixture: MixtureSize,
    grid: GridSpec,
    values: Vec<C64>,
}

impl ManyBodyState {
    pub fn new(mixture: MixtureSize, grid: GridSpec, values: Vec<C64>) -> Result<Self> {
        let n = state_len(&grid, &mixture, usize::MAX)?;
        if values.len() != n {
            return Err(Error::GridMismatch(format!(
                "{} amplitudes for {} slots of {} sites",
                values.len(),
                mixture.total(),
                grid.sites()
            )));
        }
        if values.iter().any(|z| !z.is_finite()) {
            return Err(Error::NonFinite("many-body amplitudes"));
        }
        Ok(Self { mixture, grid, values })
    }

    pub fn mixture(&self) -> &MixtureSize {
        &self.mixture
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<C64> {
        self.values
    }

    pub fn slots(&self) -> usize {
        self.mixture.total()
    }

    /// Volume element `h^{d (N1 + N2)}` of the product grid.
    pub fn weight(&self) -> f64 {
        self.grid.cell_volume().powi(self.slots() as i32)
    }

    pub fn norm(&self) -> f64 {
        (self.weight() * par::norm_sqr(&self.values)).sqrt()
    }

    pub fn normalized(mut self) -> Self {
        let n = self.norm();
        if n > 0.0 {
            self.values.iter_mut().for_each(|z| *z /= n);
        }
        self
    }

    pub fn inner(&self, other: &ManyBodyState) -> Result<C64> {
        self.check_compatible(other)?;
        Ok(par::dot(&self.values, &other.values) * self.weight())
    }

    pub fn distance(&self, other: &ManyBodyState) -> Result<f64> {
        self.check_compatible(other)?;
        let d: f64 = self.values.iter().zip(&other.values).map(|(a, b)| (a - b).norm_sqr()).sum();
        Ok((self.weight() * d).sqrt())
    }

    /// Amplitudes as coefficients in the orthonormal site basis,
    /// `h^{d (N1 + N2) / 2} Psi`.
    pub fn coefficients(&self) -> Vec<C64> {
        let w = self.weight().sqrt();
        self.values.iter().map(|z| z * w).collect()
    }

    fn check_compatible(&self, other: &ManyBodyState) -> Result<()> {
        self.grid.check_same(&other.grid)?;
        if self.mixture != other.mixture {
            return Err(Error::GridMismatch(format!(
                "mixtures {:?} and {:?} differ",
                self.mixture, other.mixture
            )));
        }
        Ok(())
    }

    pub fn write<W: Write>(&self, w: &mut W) -> Result<()> {
        io::write_many_body(w, &self.grid, self.mixture.n1, self.mixture.n2, &self.values)
    }

    pub fn read<R: Read>(r: &mut R) -> Result<Self> {
        let (grid, n1, n2, values) = io::read_many_body(r)?;
        Self::new(MixtureSize::new(n1, n2)?, grid, values)
    }
}

/// Tensor product with one orbital per slot.
pub fn product_of(orbitals: &[&Field], mixture: MixtureSize, cap: usize) -> Result<ManyBodyState> {
    if orbitals.len() != mixture.total() {
        return Err(Error::InvalidParameter(format!(
            "{} orbitals for {} slots",
            orbitals.len(),
            mixture.total()
        )));
    }
    let grid = *orbitals[0].grid();
    for f in orbitals {
        grid.check_same(f.grid())?;
    }
    let len = state_len(&grid, &mixture, cap)?;
    let mut values = vec![C64::new(1.0, 0.0)];
    values.reserve(len);
    for f in orbitals {
        values = values
            .iter()
            .flat_map(|a| f.values().iter().map(move |b| a * b))
            .collect();
    }
    ManyBodyState::new(mixture, grid, values)
}

/// `psi^{x N1} x phi^{x N2}` under the default cap.
pub fn product_state(psi: &Field, phi: &Field, mixture: MixtureSize) -> Result<ManyBodyState> {
    product_state_with_cap(psi, phi, mixture, DEFAULT_STATE_CAP)
}

pub fn product_state_with_cap(psi: &Field, phi: &Field, mixture: MixtureSize, cap: usize) -> Result<ManyBodyState> {
    let mut orbitals = vec![psi; mixture.n1];
    orbitals.extend(std::iter::repeat_n(phi, mixture.n2));
    product_of(&orbitals, mixture, cap)
}

#[derive(Clone, Debug)]
pub struct HamiltonianSpec {
    pub kinetics: [KineticSpec; 2],
    pub couplings: CouplingMatrix,
    pub mixture: MixtureSize,
}

/// Matrix-free `H_N`: dense single-slot kinetic matrices plus a precomputed
/// diagonal pair potential.
#[derive(Clone, Debug)]
pub struct Hamiltonian {
    grid: GridSpec,
    mixture: MixtureSize,
    /// Row-major single-particle kinetic matrices, one per species.
    kinetic: [Vec<C64>; 2],
    kinetic_ops: [KineticOperator; 2],
    kernels: [Kernel; 3],
    diagonal: Vec<f64>,
    lanczos: LanczosConfig,
}

impl Hamiltonian {
    pub fn new(spec: &HamiltonianSpec, grid: GridSpec) -> Result<Self> {
        Self::with_cap(spec, grid, DEFAULT_STATE_CAP)
    }

    pub fn with_cap(spec: &HamiltonianSpec, grid: GridSpec, cap: usize) -> Result<Self> {
        spec.couplings.validate()?;
        let len = state_len(&grid, &spec.mixture, cap)?;
        let s = grid.sites();
        if s > SLOT_CAP {
            return Err(Error::SizeCap {
                what: "single-slot kinetic matrix",
                needed: s as u128,
                cap: SLOT_CAP as u128,
            });
        }
        let ops = [
            KineticOperator::new(&spec.kinetics[0], grid)?,
            KineticOperator::new(&spec.kinetics[1], grid)?,
        ];
        let row_major = |op: &KineticOperator| -> Vec<C64> {
            let m = linalg::hermitian_part(&op.dense());
            (0..s * s).map(|i| m[(i / s, i % s)]).collect()
        };
        let kinetic = [row_major(&ops[0]), row_major(&ops[1])];
        let c = &spec.couplings;
        let kernels = [
            build_kernel(grid, c.lambda11, c.mu11, c.epsilon)?,
            build_kernel(grid, c.lambda22, c.mu22, c.epsilon)?,
            build_kernel(grid, c.lambda12, c.mu12, c.epsilon)?,
        ];
        let diagonal = pair_diagonal(&grid, &spec.mixture, &kernels, len);
        Ok(Self {
            grid,
            mixture: spec.mixture,
            kinetic,
            kinetic_ops: ops,
            kernels,
            diagonal,
            lanczos: LanczosConfig {
                krylov_dim: 30,
                ..LanczosConfig::default()
            },
        })
    }

    pub fn with_lanczos(mut self, cfg: LanczosConfig) -> Self {
        self.lanczos = cfg;
        self
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn mixture(&self) -> &MixtureSize {
        &self.mixture
    }

    pub fn kinetic_operators(&self) -> &[KineticOperator; 2] {
        &self.kinetic_ops
    }

    /// `(u11, u22, u12)`.
    pub fn kernels(&self) -> &[Kernel; 3] {
        &self.kernels
    }

    /// Diagonal pair-potential part of `H_N` on the product grid.
    pub fn pair_potential(&self) -> &[f64] {
        &self.diagonal
    }

    pub fn dimension(&self) -> usize {
        self.diagonal.len()
    }

    /// `y = H_N x` on raw amplitudes.
    pub fn apply_slice(&self, x: &[C64], y: &mut [C64]) {
        let s = self.grid.sites();
        let slots = self.mixture.total();
        let n1 = self.mixture.n1;
        let strides: Vec<usize> = (0..slots).map(|j| s.pow((slots - 1 - j) as u32)).collect();
        par::for_each_chunk_mut(y, par::CHUNK, |offset, chunk| {
            for (i, yi) in chunk.iter_mut().enumerate() {
                let idx = offset + i;
                let mut acc = x[idx] * self.diagonal[idx];
                for (j, &stride) in strides.iter().enumerate() {
                    let c = (idx / stride) % s;
                    let base = idx - c * stride;
                    let k = &self.kinetic[usize::from(j >= n1)][c * s..(c + 1) * s];
                    for (a, kv) in k.iter().enumerate() {
                        acc += kv * x[base + a * stride];
                    }
                }
                *yi = acc;
            }
        });
    }

    fn check(&self, st: &ManyBodyState) -> Result<()> {
        self.grid.check_same(st.grid())?;
        if *st.mixture() != self.mixture {
            return Err(Error::GridMismatch(format!(
                "state mixture {:?} vs Hamiltonian {:?}",
                st.mixture(),
                self.mixture
            )));
        }
        Ok(())
    }

    pub fn apply(&self, st: &ManyBodyState) -> Result<ManyBodyState> {
        self.check(st)?;
        let mut y = vec![C64::new(0.0, 0.0); st.values.len()];
        self.apply_slice(&st.values, &mut y);
        ManyBodyState::new(self.mixture, self.grid, y)
    }

    /// `<Psi, H_N Psi>`.
    pub fn energy(&self, st: &ManyBodyState) -> Result<f64> {
        let hs = self.apply(st)?;
        Ok(st.inner(&hs)?.re)
    }

    /// `steps` Lanczos steps of `exp(-i H_N dt)`.
    pub fn propagate(&self, st: &ManyBodyState, dt: f64, steps: usize) -> Result<ManyBodyState> {
        self.propagate_observed(st, dt, steps, |_, _| Ok(()))
    }

    /// As [`Hamiltonian::propagate`], calling `observe(n, state)` on the
    /// initial state and after every step.
    pub fn propagate_observed<F>(&self, st: &ManyBodyState, dt: f64, steps: usize, mut observe: F) -> Result<ManyBodyState>
    where
        F: FnMut(usize, &ManyBodyState) -> Result<()>,
    {
        self.check(st)?;
        let mut cur = st.clone();
        observe(0, &cur)?;
        for n in 1..=steps {
            let v = krylov::expm_apply(|a, b| self.apply_slice(a, b), &cur.values, dt, &self.lanczos)?;
            if v.iter().any(|z| !z.is_finite()) {
                return Err(Error::NonFinite("propagated many-body state"));
            }
            cur.values = v;
            observe(n, &cur)?;
        }
        Ok(cur)
    }

    /// Dense matrix of `H_N` in the site basis, for oracle sizes only.
    pub fn dense(&self) -> Result<CMatrix> {
        let n = self.dimension();
        if n > DENSE_CAP {
            return Err(Error::SizeCap {
                what: "dense Hamiltonian",
                needed: n as u128,
                cap: DENSE_CAP as u128,
            });
        }
        Ok(linalg::assemble(n, |x, y| self.apply_slice(x, y)))
    }

    /// Single-slot kinetic matrix of species `species` (0 or 1).
    pub fn kinetic_matrix(&self, species: usize) -> CMatrix {
        let s = self.grid.sites();
        CMatrix::from_fn(s, s, |r, c| self.kinetic[species][r * s + c])
    }
}

fn pair_diagonal(grid: &GridSpec, mixture: &MixtureSize, kernels: &[Kernel; 3], len: usize) -> Vec<f64> {
    let s = grid.sites();
    let (n1, n2) = (mixture.n1, mixture.n2);
    let slots = n1 + n2;
    // the empty intraspecies sum for N_i = 1 never evaluates its prefactor
    let c11 = if n1 > 1 { 1.0 / (n1 - 1) as f64 } else { 0.0 };
    let c22 = if n2 > 1 { 1.0 / (n2 - 1) as f64 } else { 0.0 };
    let c12 = 1.0 / mixture.m();
    let mut diag = vec![0.0; len];
    par::for_each_chunk_mut(&mut diag, par::CHUNK, |offset, chunk| {
        let mut sites = vec![0usize; slots];
        for (i, d) in chunk.iter_mut().enumerate() {
            let mut idx = offset + i;
            for j in (0..slots).rev() {
                sites[j] = idx % s;
                idx /= s;
            }
            let mut v = 0.0;
            for a in 0..n1 {
                for b in a + 1..n1 {
                    v += c11 * kernels[0].between(sites[a], sites[b]);
                }
            }
            for a in n1..slots {
                for b in a + 1..slots {
                    v += c22 * kernels[1].between(sites[a], sites[b]);
                }
            }
            for a in 0..n1 {
                for b in n1..slots {
                    v += c12 * kernels[2].between(sites[a], sites[b]);
                }
            }
            *d = v;
        }
    });
    diag
}

/// `H_N s`.
pub fn apply_hamiltonian(spec: &HamiltonianSpec, st: &ManyBodyState) -> Result<ManyBodyState> {
    Hamiltonian::new(spec, *st.grid())?.apply(st)
}

/// `exp(-i H_N dt)^steps s`.
pub fn propagate(spec: &HamiltonianSpec, st: &ManyBodyState, dt: f64, steps: usize) -> Result<ManyBodyState> {
    Hamiltonian::new(spec, *st.grid())?.propagate(st, dt, steps)
}

fn transposed(st: &ManyBodyState, a: usize, b: usize) -> Vec<C64> {
    let s = st.grid.sites();
    let slots = st.slots();
    let sa = s.pow((slots - 1 - a) as u32);
    let sb = s.pow((slots - 1 - b) as u32);
    (0..st.values.len())
        .map(|idx| {
            let ca = (idx / sa) % s;
            let cb = (idx / sb) % s;
            st.values[idx - ca * sa - cb * sb + cb * sa + ca * sb]
        })
        .collect()
}

/// Largest `|s - s o tau|` over all transpositions `tau` of two slots of
/// the same species.
pub fn symmetry_defect(st: &ManyBodyState) -> f64 {
    let n1 = st.mixture.n1;
    let slots = st.slots();
    let w = st.weight();
    let mut worst = 0.0f64;
    let pairs = (0..slots).flat_map(|a| (a + 1..slots).map(move |b| (a, b)));
    for (a, b) in pairs.filter(|&(a, b)| (a < n1) == (b < n1)) {
        let t = transposed(st, a, b);
        let d: f64 = st.values.iter().zip(&t).map(|(x, y)| (x - y).norm_sqr()).sum();
        worst = worst.max((w * d).sqrt());
    }
    worst
}

/// `<Psi, u(x_a - x_b) Psi>` for two distinct slots.
pub fn pair_expectation(st: &ManyBodyState, kernel: &Kernel, a: usize, b: usize) -> Result<f64> {
    st.grid.check_same(kernel.grid())?;
    let s = st.grid.sites();
    let slots = st.slots();
    if a == b || a >= slots || b >= slots {
        return Err(Error::InvalidParameter(format!("slots ({a}, {b}) of {slots}")));
    }
    let sa = s.pow((slots - 1 - a) as u32);
    let sb = s.pow((slots - 1 - b) as u32);
    let sum = par::sum_by(st.values.len(), |idx| {
        st.values[idx].norm_sqr() * kernel.between((idx / sa) % s, (idx / sb) % s)
    });
    Ok(st.weight() * sum)
}

/// `<Psi, A_slot Psi>` for a single-site operator `A` given in the site basis.
pub fn one_body_expectation(st: &ManyBodyState, op: &CMatrix, slot: usize) -> Result<C64> {
    if op.nrows() != st.grid.sites() || slot >= st.slots() {
        return Err(Error::InvalidParameter(format!(
            "operator of size {} on slot {slot}",
            op.nrows()
        )));
    }
    let y = linalg::apply_on_factor(op, &st.values, slot, st.slots());
    Ok(par::dot(&st.values, &y) * st.weight())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interaction::pair_energy;
    use crate::lattice::{kinetic_propagator, VectorPotential};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn spec(n1: usize, n2: usize, lambda: f64) -> HamiltonianSpec {
        HamiltonianSpec {
            kinetics: [KineticSpec::magnetic(1.0, VectorPotential::Zero), KineticSpec::semirelativistic(1.5)],
            couplings: CouplingMatrix {
                lambda11: lambda,
                lambda22: 0.5 * lambda,
                lambda12: -lambda,
                mu11: 0.1,
                mu22: 0.0,
                mu12: 0.3,
                epsilon: 0.5,
            },
            mixture: MixtureSize::new(n1, n2).unwrap(),
        }
    }

    fn orbitals(g: GridSpec) -> (Field, Field) {
        (
            Field::gaussian(g, [-0.5, 0.0, 0.0], 1.0, [0.7, 0.0, 0.0]),
            Field::gaussian(g, [0.8, 0.0, 0.0], 0.8, [-0.3, 0.0, 0.0]),
        )
    }

    fn random_field(g: GridSpec, rng: &mut ChaCha8Rng) -> Field {
        Field::new(g, (0..g.sites()).map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect())
            .unwrap()
            .normalized()
    }

    /// Symmetrized sum of random products.
    fn random_symmetric(g: GridSpec, mixture: MixtureSize, seed: u64) -> ManyBodyState {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut acc: Option<Vec<C64>> = None;
        for _ in 0..3 {
            let (a, b) = (random_field(g, &mut rng), random_field(g, &mut rng));
            let c = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let p = product_state(&a, &b, mixture).unwrap().into_values();
            acc = Some(match acc {
                None => p.iter().map(|z| z * c).collect(),
                Some(v) => v.iter().zip(&p).map(|(x, z)| x + z * c).collect(),
            });
        }
        ManyBodyState::new(mixture, g, acc.unwrap()).unwrap().normalized()
    }

    #[test]
    fn product_of_single_pair_is_outer_product() {
        let g = GridSpec::new(1, 8, 4.0).unwrap();
        let (a, b) = orbitals(g);
        let st = product_state(&a, &b, MixtureSize::new(1, 1).unwrap()).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                assert_eq!(st.values()[i * 8 + j], a.values()[i] * b.values()[j]);
            }
        }
        assert!((st.norm() - 1.0).abs() < 1e-12);
        assert_eq!(symmetry_defect(&st), 0.0);
    }

    #[test]
    fn state_cap_is_enforced() {
        let g = GridSpec::new(1, 8, 4.0).unwrap();
        let (a, b) = orbitals(g);
        let m = MixtureSize::new(3, 3).unwrap();
        assert!(matches!(
            product_state_with_cap(&a, &b, m, 1000),
            Err(Error::SizeCap { needed: 262144, .. })
        ));
        let big = GridSpec::new(3, 16, 4.0).unwrap();
        assert!(Hamiltonian::new(&spec(3, 3, 1.0), big).is_err());
    }

    #[test]
    fn two_slot_hamiltonian_matches_explicit_formula() {
        let g = GridSpec::new(1, 8, 4.0).unwrap();
        let sp = spec(1, 1, 0.8);
        let h = Hamiltonian::new(&sp, g).unwrap();
        let dense = h.dense().unwrap();
        let k1 = KineticOperator::new(&sp.kinetics[0], g).unwrap().dense();
        let k2 = KineticOperator::new(&sp.kinetics[1], g).unwrap().dense();
        let u = build_kernel(g, -0.8, 0.3, 0.5).unwrap();
        let id = CMatrix::identity(8, 8);
        let mut want = linalg::kron(&k1, &id) + linalg::kron(&id, &k2);
        for x in 0..8 {
            for y in 0..8 {
                want[(x * 8 + y, x * 8 + y)] += u.between(x, y);
            }
        }
        assert!(linalg::hs_norm(&(dense - want)) < 1e-12);
    }

    #[test]
    fn product_energy_matches_hartree_functional() {
        let g = GridSpec::new(1, 6, 4.0).unwrap();
        let sp = spec(2, 2, 0.9);
        let h = Hamiltonian::new(&sp, g).unwrap();
        let (a, b) = orbitals(g);
        let st = product_state(&a, &b, sp.mixture).unwrap();
        let e = h.energy(&st).unwrap();
        let k = h.kinetic_operators();
        let [u11, u22, u12] = h.kernels();
        let (n1, n2) = (2.0, 2.0);
        let want = n1 * k[0].expectation(&a).unwrap()
            + n2 * k[1].expectation(&b).unwrap()
            + n1 / 2.0 * pair_energy(u11, &a, &a).unwrap()
            + n2 / 2.0 * pair_energy(u22, &b, &b).unwrap()
            + n1 * n2 / sp.mixture.m() * pair_energy(u12, &a, &b).unwrap();
        assert!((e - want).abs() < 1e-10, "{e} {want}");
    }

    #[test]
    fn single_particle_species_drop_intraspecies_term() {
        let g = GridSpec::new(1, 6, 4.0).unwrap();
        let sp = spec(1, 2, 0.9);
        let h = Hamiltonian::new(&sp, g).unwrap();
        let (a, b) = orbitals(g);
        let st = product_state(&a, &b, sp.mixture).unwrap();
        let k = h.kinetic_operators();
        let [_, u22, u12] = h.kernels();
        let want = k[0].expectation(&a).unwrap()
            + 2.0 * k[1].expectation(&b).unwrap()
            + pair_energy(u22, &b, &b).unwrap()
            + 2.0 / 2f64.sqrt() * pair_energy(u12, &a, &b).unwrap();
        assert!((h.energy(&st).unwrap() - want).abs() < 1e-10);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn hamiltonian_is_hermitian(seed in 0u64..1000) {
            let g = GridSpec::new(1, 4, 3.0).unwrap();
            let sp = spec(2, 1, 0.7);
            let h = Hamiltonian::new(&sp, g).unwrap();
            let f = random_symmetric(g, sp.mixture, seed);
            let gg = random_symmetric(g, sp.mixture, seed + 7);
            let a = f.inner(&h.apply(&gg).unwrap()).unwrap();
            let b = gg.inner(&h.apply(&f).unwrap()).unwrap();
            prop_assert!((a - b.conj()).norm() < 1e-10);
            prop_assert!(symmetry_defect(&h.apply(&f).unwrap()) < 1e-10 * h.apply(&f).unwrap().norm());
        }
    }

    #[test]
    fn free_evolution_stays_product() {
        let g = GridSpec::new(1, 6, 4.0).unwrap();
        let sp = spec(2, 1, 0.0);
        let h = Hamiltonian::new(&sp, g).unwrap();
        let (a, b) = orbitals(g);
        let st = product_state(&a, &b, sp.mixture).unwrap();
        let out = h.propagate(&st, 0.05, 10).unwrap();
        let a1 = kinetic_propagator(&sp.kinetics[0], 0.5, &a).unwrap();
        let b1 = kinetic_propagator(&sp.kinetics[1], 0.5, &b).unwrap();
        let want = product_state(&a1, &b1, sp.mixture).unwrap();
        assert!(out.distance(&want).unwrap() < 1e-9);
    }

    #[test]
    fn zero_step_is_identity() {
        let g = GridSpec::new(1, 4, 3.0).unwrap();
        let sp = spec(1, 2, 1.0);
        let h = Hamiltonian::new(&sp, g).unwrap();
        let st = random_symmetric(g, sp.mixture, 2);
        assert_eq!(h.propagate(&st, 0.0, 3).unwrap(), st);
    }

    #[test]
    fn lanczos_matches_dense_exponential() {
        let g = GridSpec::new(1, 8, 4.0).unwrap();
        let sp = spec(1, 1, 1.0);
        let h = Hamiltonian::new(&sp, g).unwrap();
        let (a, b) = orbitals(g);
        let st = product_state(&a, &b, sp.mixture).unwrap();
        let u = linalg::expm_hermitian(&h.dense().unwrap(), 1.0);
        let mut want = vec![C64::new(0.0, 0.0); 64];
        linalg::matvec(&u, st.values(), &mut want);
        let got = h.propagate(&st, 0.05, 20).unwrap();
        let want = ManyBodyState::new(sp.mixture, g, want).unwrap();
        assert!(got.distance(&want).unwrap() < 1e-9);
    }

    #[test]
    fn propagation_conserves_norm_energy_symmetry() {
        let g = GridSpec::new(1, 6, 4.0).unwrap();
        let sp = spec(2, 2, 1.2);
        let h = Hamiltonian::new(&sp, g).unwrap();
        let (a, b) = orbitals(g);
        let st = product_state(&a, &b, sp.mixture).unwrap();
        let e0 = h.energy(&st).unwrap();
        h.propagate_observed(&st, 0.05, 20, |_, s| {
            assert!((s.norm() - 1.0).abs() < 1e-10);
            assert!(symmetry_defect(s) < 1e-10);
            let e = h.energy(s).unwrap();
            assert!(((e - e0) / e0).abs() < 1e-8);
            Ok(())
        })
        .unwrap();
    }

    #[test]
    fn antisymmetric_pair_has_maximal_defect() {
        let g = GridSpec::new(1, 6, 4.0).unwrap();
        let a = Field::plane_wave(g, [1, 0, 0]);
        let b = Field::plane_wave(g, [2, 0, 0]);
        let m = MixtureSize::new(2, 1).unwrap();
        let ab = product_of(&[&a, &b, &a], m, DEFAULT_STATE_CAP).unwrap();
        let ba = product_of(&[&b, &a, &a], m, DEFAULT_STATE_CAP).unwrap();
        let anti = ManyBodyState::new(m, g, ab.values().iter().zip(ba.values()).map(|(x, y)| x - y).collect()).unwrap();
        let n = anti.norm();
        assert!((symmetry_defect(&anti) - 2.0 * n).abs() < 1e-12);
        // an unsymmetrized product of orthogonal orbitals sits in between
        assert!((symmetry_defect(&ab) - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn io_roundtrip() {
        let g = GridSpec::new(1, 4, 3.0).unwrap();
        let st = random_symmetric(g, MixtureSize::new(2, 1).unwrap(), 11);
        let mut buf = Vec::new();
        st.write(&mut buf).unwrap();
        assert_eq!(buf.len(), 32 + 16 * 64);
        assert_eq!(ManyBodyState::read(&mut buf.as_slice()).unwrap(), st);
    }

    #[test]
    fn expectation_helpers() {
        let g = GridSpec::new(1, 6, 4.0).unwrap();
        let (a, b) = orbitals(g);
        let m = MixtureSize::new(2, 1).unwrap();
        let st = product_state(&a, &b, m).unwrap();
        let u = build_kernel(g, 0.7, 0.0, 0.5).unwrap();
        let got = pair_expectation(&st, &u, 0, 2).unwrap();
        assert!((got - pair_energy(&u, &a, &b).unwrap()).abs() < 1e-12);
        let k = KineticOperator::new(&KineticSpec::semirelativistic(1.0), g).unwrap();
        let e = one_body_expectation(&st, &k.dense(), 2).unwrap();
        assert!((e.re - k.expectation(&b).unwrap()).abs() < 1e-12);
        assert!(pair_expectation(&st, &u, 1, 1).is_err());
    }
}
