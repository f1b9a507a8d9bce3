//! Condensate fidelity: reduced density matrices, Hartree projectors,
//! counting functionals, Sobolev-weighted norms and the computable
//! inequalities relating them.
//!
//! All matrices live in the orthonormal site basis of `(C^{M^d})^{k+l}`,
//! species-1 factors first.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock::{self, Hamiltonian, ManyBodyState, DENSE_CAP};
use crate::interaction::{pair_energy, Kernel};
use crate::lattice::Field;
use crate::linalg::{self, CMatrix};
use crate::meanfield::MixtureSize;
use crate::C64;

/// Numerical slack for the inequality checks.
pub const SLACK: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DensityRole {
    Reduced,
    Projector,
    Difference,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReducedDensity {
    pub k: usize,
    pub l: usize,
    pub matrix: CMatrix,
    pub role: DensityRole,
}

impl ReducedDensity {
    /// `self - other` for matching `(k, l)`.
    pub fn minus(&self, other: &ReducedDensity) -> Result<ReducedDensity> {
        if (self.k, self.l) != (other.k, other.l) {
            return Err(Error::InvalidParameter(format!(
                "(k, l) = ({}, {}) vs ({}, {})",
                self.k, self.l, other.k, other.l
            )));
        }
        Ok(ReducedDensity {
            k: self.k,
            l: self.l,
            matrix: &self.matrix - &other.matrix,
            role: DensityRole::Difference,
        })
    }

    pub fn factors(&self) -> usize {
        self.k + self.l
    }
}

fn dense_size(sites: usize, factors: usize) -> Result<usize> {
    let n = (sites as u128).checked_pow(factors as u32).unwrap_or(u128::MAX);
    if n > DENSE_CAP as u128 {
        return Err(Error::SizeCap {
            what: "reduced density matrix",
            needed: n,
            cap: DENSE_CAP as u128,
        });
    }
    Ok(n as usize)
}

/// `gamma^(k,l)`: keeps the first `k` species-1 slots and the last `l`
/// species-2 slots, tracing out the contiguous block in between.
pub fn reduce(st: &ManyBodyState, k: usize, l: usize) -> Result<ReducedDensity> {
    let mix = st.mixture();
    if k > mix.n1 || l > mix.n2 || k + l == 0 {
        return Err(Error::InvalidParameter(format!(
            "(k, l) = ({k}, {l}) for N = ({}, {})",
            mix.n1, mix.n2
        )));
    }
    let s = st.grid().sites();
    let n = dense_size(s, k + l)?;
    let a = s.pow(k as u32);
    let c = s.pow(l as u32);
    let b = s.pow((st.slots() - k - l) as u32);
    let coef = st.coefficients();
    // X[(i, j), t] = Psi[i, t, j]
    let x = CMatrix::from_fn(n, b, |row, t| {
        let (i, j) = (row / c, row % c);
        coef[(i * b + t) * c + j]
    });
    debug_assert_eq!(a * c, n);
    Ok(ReducedDensity {
        k,
        l,
        matrix: &x * x.adjoint(),
        role: DensityRole::Reduced,
    })
}

/// Coefficient vector of `psi^{x k} x phi^{x l}` in the orthonormal basis.
fn product_vector(psi: &Field, phi: &Field, k: usize, l: usize) -> Vec<C64> {
    let w = psi.grid().cell_volume().sqrt();
    let mut v = vec![C64::new(1.0, 0.0)];
    for f in std::iter::repeat_n(psi, k).chain(std::iter::repeat_n(phi, l)) {
        v = v.iter().flat_map(|a| f.values().iter().map(move |b| a * b * w)).collect();
    }
    v
}

/// `P^(k,l) = |psi><psi|^{x k} x |phi><phi|^{x l}`.
pub fn hartree_projector(psi: &Field, phi: &Field, k: usize, l: usize) -> Result<ReducedDensity> {
    psi.grid().check_same(phi.grid())?;
    if k + l == 0 {
        return Err(Error::InvalidParameter("k and l are both zero".into()));
    }
    let n = dense_size(psi.grid().sites(), k + l)?;
    let v = product_vector(psi, phi, k, l);
    Ok(ReducedDensity {
        k,
        l,
        matrix: CMatrix::from_fn(n, n, |r, c| v[r] * v[c].conj()),
        role: DensityRole::Projector,
    })
}

/// `|(1 - p^h_slot) Psi|^2`, where `p^h` projects slot `slot` onto `h`.
fn counting(st: &ManyBodyState, h: &Field, slot: usize) -> Result<f64> {
    st.grid().check_same(h.grid())?;
    let s = st.grid().sites();
    let cv = st.grid().cell_volume();
    let proj = CMatrix::from_fn(s, s, |r, c| h.values()[r] * h.values()[c].conj() * cv);
    let p = linalg::apply_on_factor(&proj, st.values(), slot, st.slots());
    let q: f64 = st.values().iter().zip(&p).map(|(a, b)| (a - b).norm_sqr()).sum();
    Ok((q * st.weight()).clamp(0.0, 1.0))
}

/// Counting functionals `(a1, a2) = (|q^psi_{1,1} Psi|^2, |q^phi_{1,2} Psi|^2)`.
pub fn pickl_a(st: &ManyBodyState, psi: &Field, phi: &Field) -> Result<(f64, f64)> {
    Ok((counting(st, psi, 0)?, counting(st, phi, st.mixture().n1)?))
}

/// `S_{k,l,theta}` in the tensor eigenbasis of the single-particle kinetic
/// matrices.
#[derive(Clone, Debug)]
pub struct SobolevWeight {
    pub theta: f64,
    pub k: usize,
    pub l: usize,
    values: [Vec<f64>; 2],
    vectors: [CMatrix; 2],
}

impl SobolevWeight {
    /// From the two single-particle kinetic matrices (Hermitian, `>= 0`).
    pub fn new(theta: f64, k: usize, l: usize, kin: [&CMatrix; 2]) -> Result<Self> {
        if !(0.0..=1.0).contains(&theta) {
            return Err(Error::InvalidParameter(format!("theta = {theta} outside [0, 1]")));
        }
        let (v1, u1) = linalg::eigh(kin[0]);
        let (v2, u2) = linalg::eigh(kin[1]);
        Ok(Self {
            theta,
            k,
            l,
            values: [v1, v2],
            vectors: [u1, u2],
        })
    }

    pub fn with_theta(&self, theta: f64) -> Self {
        Self { theta, ..self.clone() }
    }

    pub fn eigenvalues(&self, species: usize) -> &[f64] {
        &self.values[species]
    }

    /// Diagonal of `S_{k,l,theta}` over the tensor eigenbasis, with the
    /// eigenvalues clamped at 0 against roundoff.
    pub fn diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0];
        for sp in std::iter::repeat_n(0, self.k).chain(std::iter::repeat_n(1, self.l)) {
            let f: Vec<f64> = self.values[sp].iter().map(|x| (1.0 + x.max(0.0)).powf(self.theta)).collect();
            d = d.iter().flat_map(|a| f.iter().map(move |b| a + b)).collect();
        }
        d
    }

    /// `U^dagger m U` with `U` the tensor product of the eigenvector bases.
    pub fn to_eigenbasis(&self, m: &CMatrix) -> Result<CMatrix> {
        let factors = self.k + self.l;
        let s = self.values[0].len();
        if m.nrows() != s.pow(factors as u32) || !m.is_square() {
            return Err(Error::Factorization {
                dim: m.nrows(),
                factors: vec![s; factors],
            });
        }
        let adj = [self.vectors[0].adjoint(), self.vectors[1].adjoint()];
        let left = |x: &CMatrix| -> CMatrix {
            let n = x.nrows();
            let mut out = x.clone();
            for col in out.as_mut_slice().chunks_mut(n) {
                let mut v = col.to_vec();
                for f in 0..factors {
                    v = linalg::apply_on_factor(&adj[usize::from(f >= self.k)], &v, f, factors);
                }
                col.copy_from_slice(&v);
            }
            out
        };
        Ok(left(&left(m).adjoint()).adjoint())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedNorms {
    pub trace: f64,
    pub hs: f64,
}

fn scaled(m: &CMatrix, w: &[f64]) -> CMatrix {
    let r: Vec<f64> = w.iter().map(|x| x.sqrt()).collect();
    CMatrix::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)] * (r[i] * r[j]))
}

/// `tr|S^{1/2} D S^{1/2}|` and `|S^{1/2} D S^{1/2}|_HS` for Hermitian `D`.
pub fn weighted_norms(diff: &ReducedDensity, w: &SobolevWeight) -> Result<WeightedNorms> {
    if (diff.k, diff.l) != (w.k, w.l) {
        return Err(Error::InvalidParameter("weight and density disagree on (k, l)".into()));
    }
    let m = scaled(&w.to_eigenbasis(&diff.matrix)?, &w.diagonal());
    Ok(WeightedNorms {
        trace: linalg::trace_norm_hermitian(&m),
        hs: linalg::hs_norm(&m),
    })
}

/// `sqrt(8 (k a1 + l a2))`.
pub fn est_a_bound(a1: f64, a2: f64, k: usize, l: usize) -> f64 {
    (8.0 * (k as f64 * a1 + l as f64 * a2)).sqrt()
}

/// `C (k + l) (a1^e + a2^e + |gamma - P|_HS^{1 - theta})`, `e = min(1/2, 1 - theta)`.
pub fn weighted_bound(c: f64, k: usize, l: usize, theta: f64, a1: f64, a2: f64, hs: f64) -> f64 {
    let e = 0.5f64.min(1.0 - theta);
    c * (k + l) as f64 * (a1.powf(e) + a2.powf(e) + hs.powf(1.0 - theta))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Contraction {
    pub lhs: f64,
    pub rhs: f64,
}

/// `tr|tr_{q+1..m} rho|` against `tr|rho|` for `rho` on `m` equal factors
/// given by `dims`.
pub fn partial_trace_contraction(rho: &CMatrix, dims: &[usize], q_keep: usize) -> Result<Contraction> {
    if q_keep == 0 || q_keep > dims.len() {
        return Err(Error::InvalidParameter(format!("keep {q_keep} of {} factors", dims.len())));
    }
    let keep: Vec<bool> = (0..dims.len()).map(|i| i < q_keep).collect();
    let reduced = linalg::partial_trace(rho, dims, &keep)?;
    Ok(Contraction {
        lhs: linalg::trace_norm(&reduced),
        rhs: linalg::trace_norm(rho),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KineticGaps {
    #[serde(rename = "A_N")]
    pub a_n: f64,
    #[serde(rename = "B_N")]
    pub b_n: f64,
    #[serde(rename = "meanS_half")]
    pub mean_s_half: f64,
}

fn orbital_expectation(m: &CMatrix, f: &Field) -> f64 {
    let mut y = vec![C64::new(0.0, 0.0); f.values().len()];
    linalg::matvec(m, f.values(), &mut y);
    f.grid().cell_volume() * f.values().iter().zip(&y).map(|(a, b)| (a.conj() * b).re).sum::<f64>()
}

/// `A_N = <Psi, S1_1 Psi> - <psi, S1 psi>`, `B_N` likewise for species 2,
/// and `|S_{1,1,1/2} Psi|`.
pub fn kinetic_gaps(st: &ManyBodyState, psi: &Field, phi: &Field, kin: [&CMatrix; 2]) -> Result<KineticGaps> {
    let n1 = st.mixture().n1;
    let e1 = fock::one_body_expectation(st, kin[0], 0)?.re;
    let e2 = fock::one_body_expectation(st, kin[1], n1)?.re;
    let root = |m: &CMatrix| linalg::hermitian_function(m, |x| C64::new((1.0 + x.max(0.0)).sqrt(), 0.0));
    let mut y = linalg::apply_on_factor(&root(kin[0]), st.values(), 0, st.slots());
    let y2 = linalg::apply_on_factor(&root(kin[1]), st.values(), n1, st.slots());
    y.iter_mut().zip(&y2).for_each(|(a, b)| *a += b);
    let mean_s_half = (st.weight() * y.iter().map(|z| z.norm_sqr()).sum::<f64>()).sqrt();
    Ok(KineticGaps {
        a_n: e1 - orbital_expectation(kin[0], psi),
        b_n: e2 - orbital_expectation(kin[1], phi),
        mean_s_half,
    })
}

/// `C_{Psi,psi,phi} = 2 (|S_{1,1,1/2} Psi| + |(1+S1)^{1/2} psi| + |(1+S2)^{1/2} phi|)^2`.
pub fn weighted_bound_constant(gaps: &KineticGaps, psi: &Field, phi: &Field, kin: [&CMatrix; 2]) -> f64 {
    let r1 = (1.0 + orbital_expectation(kin[0], psi)).max(0.0).sqrt();
    let r2 = (1.0 + orbital_expectation(kin[1], phi)).max(0.0).sqrt();
    2.0 * (gaps.mean_s_half + r1 + r2).powi(2)
}

/// Both sides of the kinetic/potential gap identity implied by energy
/// conservation of the N-body and Hartree dynamics:
///
/// ```text
/// R^2 A_N + B_N = -R^2/2 (X11 - p11) - 1/2 (X22 - p22) - R (X12 - p12)
/// ```
///
/// `X` are pair expectations in `Psi` and `p` the Hartree pair energies at
/// the same time. A species with a single particle has no intraspecies pair;
/// its `X` is frozen at the initial Hartree value, which is what the
/// conserved N-body energy carries in its place.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyBookkeeping {
    pub lhs: f64,
    pub rhs: f64,
}

impl EnergyBookkeeping {
    pub fn residual(&self) -> f64 {
        (self.lhs - self.rhs).abs()
    }
}

/// Hartree pair energies `(p11, p22, p12)` of an orbital pair.
pub fn pair_energies(kernels: &[Kernel; 3], psi: &Field, phi: &Field) -> Result<[f64; 3]> {
    Ok([
        pair_energy(&kernels[0], psi, psi)?,
        pair_energy(&kernels[1], phi, phi)?,
        pair_energy(&kernels[2], psi, phi)?,
    ])
}

pub fn energy_bookkeeping(
    st: &ManyBodyState,
    kernels: &[Kernel; 3],
    hartree_pairs: [f64; 3],
    initial_pairs: [f64; 3],
    gaps: &KineticGaps,
) -> Result<EnergyBookkeeping> {
    let mix = st.mixture();
    let n1 = mix.n1;
    let x11 = if mix.n1 > 1 {
        fock::pair_expectation(st, &kernels[0], 0, 1)?
    } else {
        initial_pairs[0]
    };
    let x22 = if mix.n2 > 1 {
        fock::pair_expectation(st, &kernels[1], n1, n1 + 1)?
    } else {
        initial_pairs[1]
    };
    let x12 = fock::pair_expectation(st, &kernels[2], 0, n1)?;
    let r = mix.r();
    let [p11, p22, p12] = hartree_pairs;
    Ok(EnergyBookkeeping {
        lhs: r * r * gaps.a_n + gaps.b_n,
        rhs: -0.5 * r * r * (x11 - p11) - 0.5 * (x22 - p22) - r * (x12 - p12),
    })
}

/// One row of the fixed-schema fidelity report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
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
    #[serde(rename = "meanS_half")]
    pub mean_s_half: f64,
    pub violations: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaNorms {
    pub theta: f64,
    pub trace: f64,
    pub hs: f64,
    pub weighted_bound: f64,
    /// `max |tr(A D)| - |S^{-1/2} A S^{-1/2}| tr|S^{1/2} D S^{1/2}|` over the
    /// probe observables; nonpositive when the duality bound holds.
    pub duality_excess: f64,
}

/// Everything measured on one (N-body, Hartree) snapshot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub mixture: MixtureSize,
    pub k: usize,
    pub l: usize,
    pub a1: f64,
    pub a2: f64,
    /// `tr|gamma - P|`.
    pub trace_raw: f64,
    /// `|gamma - P|_HS`.
    pub hs_raw: f64,
    pub est_a_bound: f64,
    pub weighted_bound_constant: f64,
    pub per_theta: Vec<ThetaNorms>,
    pub gaps: KineticGaps,
    pub bookkeeping: EnergyBookkeeping,
    /// Worst `lhs - rhs` of the partial-trace contraction over all cuts.
    pub contraction_excess: f64,
    pub violations: Vec<String>,
}

impl Sample {
    pub fn reports(&self) -> Vec<FidelityReport> {
        self.per_theta
            .iter()
            .map(|p| FidelityReport {
                t: self.t,
                n1: self.mixture.n1,
                n2: self.mixture.n2,
                theta: p.theta,
                trace_norm: p.trace,
                hs_norm: self.hs_raw,
                a1: self.a1,
                a2: self.a2,
                est_a_bound: self.est_a_bound,
                weighted_bound: p.weighted_bound,
                a_n: self.gaps.a_n,
                b_n: self.gaps.b_n,
                mean_s_half: self.gaps.mean_s_half,
                violations: self.violations.clone(),
            })
            .collect()
    }

    pub fn theta(&self, theta: f64) -> Option<&ThetaNorms> {
        self.per_theta.iter().find(|p| p.theta == theta)
    }
}

/// Random Hermitian matrix with entries of order one.
pub fn random_hermitian(n: usize, rng: &mut impl Rng) -> CMatrix {
    let m = CMatrix::from_fn(n, n, |_, _| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    linalg::hermitian_part(&m)
}

/// Precomputed context for repeated snapshots of one exact run.
#[derive(Clone, Debug)]
pub struct Diagnostics {
    mixture: MixtureSize,
    k: usize,
    l: usize,
    kin: [CMatrix; 2],
    weight: SobolevWeight,
    kernels: [Kernel; 3],
    initial_pairs: [f64; 3],
    /// Probe observables in the tensor eigenbasis.
    observables: Vec<CMatrix>,
    /// Energy bookkeeping is only meaningful for runs that started from the
    /// product of the Hartree initial data.
    bookkeeping: bool,
}

impl Diagnostics {
    /// `observables` random Hermitian probes are drawn from `seed` for the
    /// duality bound.
    pub fn new(h: &Hamiltonian, k: usize, l: usize, observables: usize, seed: u64) -> Result<Self> {
        let mixture = *h.mixture();
        if k > mixture.n1 || l > mixture.n2 || k + l == 0 {
            return Err(Error::InvalidParameter(format!(
                "(k, l) = ({k}, {l}) for N = ({}, {})",
                mixture.n1, mixture.n2
            )));
        }
        let n = dense_size(h.grid().sites(), k + l)?;
        let kin = [h.kinetic_matrix(0), h.kinetic_matrix(1)];
        let weight = SobolevWeight::new(0.0, k, l, [&kin[0], &kin[1]])?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let observables = (0..observables)
            .map(|_| weight.to_eigenbasis(&random_hermitian(n, &mut rng)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            mixture,
            k,
            l,
            kin,
            weight,
            kernels: h.kernels().clone(),
            initial_pairs: [0.0; 3],
            observables,
            bookkeeping: false,
        })
    }

    /// Enables the energy bookkeeping identity for a run started from
    /// `psi0^{x N1} x phi0^{x N2}`.
    pub fn with_initial_orbitals(mut self, psi0: &Field, phi0: &Field) -> Result<Self> {
        self.initial_pairs = pair_energies(&self.kernels, psi0, phi0)?;
        self.bookkeeping = true;
        Ok(self)
    }

    pub fn kinetic_matrices(&self) -> [&CMatrix; 2] {
        [&self.kin[0], &self.kin[1]]
    }

    pub fn weight(&self, theta: f64) -> SobolevWeight {
        self.weight.with_theta(theta)
    }

    pub fn sample(&self, st: &ManyBodyState, psi: &Field, phi: &Field, t: f64, thetas: &[f64]) -> Result<Sample> {
        if *st.mixture() != self.mixture {
            return Err(Error::InvalidParameter("state mixture differs from diagnostics".into()));
        }
        let (k, l) = (self.k, self.l);
        let gamma = reduce(st, k, l)?;
        let p = hartree_projector(psi, phi, k, l)?;
        let diff = gamma.minus(&p)?;
        let (a1, a2) = pickl_a(st, psi, phi)?;
        let trace_raw = linalg::trace_norm_hermitian(&diff.matrix);
        let hs_raw = linalg::hs_norm(&diff.matrix);
        let est = est_a_bound(a1, a2, k, l);
        let kin = self.kinetic_matrices();
        let gaps = kinetic_gaps(st, psi, phi, kin)?;
        let c = weighted_bound_constant(&gaps, psi, phi, kin);
        let mut violations = Vec::new();
        if trace_raw > est + SLACK {
            violations.push(format!("trace norm {trace_raw:.3e} > depletion bound {est:.3e}"));
        }

        let rotated = self.weight.to_eigenbasis(&diff.matrix)?;
        let mut per_theta = Vec::with_capacity(thetas.len());
        for &theta in thetas {
            let w = self.weight.with_theta(theta).diagonal();
            let m = scaled(&rotated, &w);
            let trace = linalg::trace_norm_hermitian(&m);
            let bound = weighted_bound(c, k, l, theta, a1, a2, hs_raw);
            if theta > 0.0 && theta < 1.0 && trace > bound + SLACK {
                violations.push(format!("weighted trace norm (theta={theta}) {trace:.3e} > bound {bound:.3e}"));
            }
            let mut duality_excess = f64::NEG_INFINITY;
            for a in &self.observables {
                let lhs = (0..m.nrows())
                    .map(|i| (0..m.ncols()).map(|j| a[(i, j)] * rotated[(j, i)]).sum::<C64>())
                    .sum::<C64>()
                    .norm();
                let inv: Vec<f64> = w.iter().map(|x| 1.0 / x).collect();
                let rhs = linalg::op_norm(&scaled(a, &inv)) * trace;
                duality_excess = duality_excess.max(lhs - rhs);
            }
            if duality_excess > SLACK {
                violations.push(format!("duality(theta={theta}) excess {duality_excess:.3e}"));
            }
            per_theta.push(ThetaNorms {
                theta,
                trace,
                hs: linalg::hs_norm(&m),
                weighted_bound: bound,
                duality_excess,
            });
        }

        // partial-trace contraction of the theta = 1 weighted difference over every cut
        let weighted = scaled(&rotated, &self.weight.with_theta(1.0).diagonal());
        let dims = vec![st.grid().sites(); k + l];
        let mut contraction_excess = f64::NEG_INFINITY;
        for q in 1..k + l {
            let c = partial_trace_contraction(&weighted, &dims, q)?;
            contraction_excess = contraction_excess.max(c.lhs - c.rhs);
        }
        if contraction_excess > SLACK {
            violations.push(format!("partial-trace contraction excess {contraction_excess:.3e}"));
        }

        let bookkeeping = if self.bookkeeping {
            let b = energy_bookkeeping(st, &self.kernels, pair_energies(&self.kernels, psi, phi)?, self.initial_pairs, &gaps)?;
            if b.residual() > SLACK {
                violations.push(format!("energy bookkeeping residual {:.3e}", b.residual()));
            }
            b
        } else {
            EnergyBookkeeping { lhs: f64::NAN, rhs: f64::NAN }
        };

        Ok(Sample {
            t,
            mixture: self.mixture,
            k,
            l,
            a1,
            a2,
            trace_raw,
            hs_raw,
            est_a_bound: est,
            weighted_bound_constant: c,
            per_theta,
            gaps,
            bookkeeping,
            contraction_excess,
            violations,
        })
    }
}
