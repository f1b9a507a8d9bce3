use serde::{Deserialize, Serialize};

use super::{Field, GridSpec, LinkField, Spectral};
use crate::error::{Error, Result};
use crate::krylov::{self, LanczosConfig};
use crate::linalg::{self, CMatrix};
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KineticKind {
    /// `D_A^2 / (2m)`.
    Magnetic,
    /// `sqrt(m^2 - Laplacian)`.
    Semirelativistic,
}

/// Vector potential on the box, evaluated at link midpoints.
#[derive(Clone, Debug, PartialEq, Default)]
pub enum VectorPotential {
    #[default]
    Zero,
    Constant([f64; 3]),
    /// `A_e(x) = offset_e + amplitude sin(2 pi x_{e'} / L)` with `e' = e + 1
    /// mod d`; in one dimension `e' = e`, which makes it a pure gauge plus
    /// the flux of `offset`.
    Sine { amplitude: f64, offset: [f64; 3] },
    /// Explicit link values, e.g. the result of a gauge transformation.
    Links(LinkField),
}

impl VectorPotential {
    pub fn is_zero(&self) -> bool {
        match self {
            VectorPotential::Zero => true,
            VectorPotential::Constant(a) => a.iter().all(|x| *x == 0.0),
            VectorPotential::Sine { amplitude, offset } => {
                *amplitude == 0.0 && offset.iter().all(|x| *x == 0.0)
            }
            VectorPotential::Links(l) => l.values().iter().all(|x| *x == 0.0),
        }
    }

    fn value(&self, grid: &GridSpec, x: [f64; 3], axis: usize) -> f64 {
        match self {
            VectorPotential::Zero | VectorPotential::Links(_) => 0.0,
            VectorPotential::Constant(a) => a[axis],
            VectorPotential::Sine { amplitude, offset } => {
                let other = if grid.dim() == 1 { axis } else { (axis + 1) % grid.dim() };
                let tau = 2.0 * std::f64::consts::PI / grid.length();
                offset[axis] + amplitude * (tau * x[other]).sin()
            }
        }
    }

    /// `A_e(x_j + h e / 2)` on every link.
    pub fn links(&self, grid: &GridSpec) -> Result<LinkField> {
        if let VectorPotential::Links(l) = self {
            grid.check_same(l.grid())?;
            return Ok(l.clone());
        }
        let h = grid.spacing();
        let d = grid.dim();
        let mut values = Vec::with_capacity(grid.sites() * d);
        for s in 0..grid.sites() {
            let x = grid.position(s);
            for axis in 0..d {
                let mut mid = x;
                mid[axis] += 0.5 * h;
                values.push(self.value(grid, mid, axis));
            }
        }
        LinkField::new(*grid, values)
    }
}

/// Kinetic energy of one species.
#[derive(Clone, Debug, PartialEq)]
pub struct KineticSpec {
    pub kind: KineticKind,
    pub mass: f64,
    pub potential: VectorPotential,
}

impl KineticSpec {
    pub fn magnetic(mass: f64, potential: VectorPotential) -> Self {
        Self {
            kind: KineticKind::Magnetic,
            mass,
            potential,
        }
    }

    pub fn semirelativistic(mass: f64) -> Self {
        Self {
            kind: KineticKind::Semirelativistic,
            mass,
            potential: VectorPotential::Zero,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass.is_finite() && self.mass > 0.0) {
            return Err(Error::InvalidParameter(format!("mass {} must be positive", self.mass)));
        }
        if self.kind == KineticKind::Semirelativistic && !self.potential.is_zero() {
            return Err(Error::InvalidParameter(
                "semirelativistic kinetics take no vector potential".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
enum Repr {
    Fourier { symbol: Vec<f64>, spectral: Spectral },
    Peierls { hops: Vec<C64>, coef: f64 },
}

/// A kinetic operator prepared for repeated application on one grid.
#[derive(Clone, Debug)]
pub struct KineticOperator {
    grid: GridSpec,
    kind: KineticKind,
    mass: f64,
    repr: Repr,
}

impl KineticOperator {
    pub fn new(spec: &KineticSpec, grid: GridSpec) -> Result<Self> {
        spec.validate()?;
        let m = spec.mass;
        match spec.kind {
            KineticKind::Semirelativistic => Ok(Self::fourier(grid, spec.kind, m, |k2| (m * m + k2).sqrt())),
            KineticKind::Magnetic if spec.potential.is_zero() => {
                Ok(Self::fourier(grid, spec.kind, m, |k2| k2 / (2.0 * m)))
            }
            KineticKind::Magnetic => {
                let links = spec.potential.links(&grid)?;
                if links.values().iter().any(|a| !a.is_finite()) {
                    return Err(Error::NonFinite("vector potential"));
                }
                Ok(Self::peierls(grid, m, &links))
            }
        }
    }

    fn fourier(grid: GridSpec, kind: KineticKind, mass: f64, sym: impl Fn(f64) -> f64) -> Self {
        let symbol = (0..grid.sites()).map(|s| sym(grid.k_squared(s))).collect();
        Self {
            grid,
            kind,
            mass,
            repr: Repr::Fourier {
                symbol,
                spectral: Spectral::new(grid),
            },
        }
    }

    /// Peierls link-phase discretization of `D_A^2 / (2m)`. With zero links
    /// this is the nearest-neighbour lattice Laplacian.
    pub fn peierls(grid: GridSpec, mass: f64, links: &LinkField) -> Self {
        let h = grid.spacing();
        let hops = links.values().iter().map(|a| C64::from_polar(1.0, -h * a)).collect();
        Self {
            grid,
            kind: KineticKind::Magnetic,
            mass,
            repr: Repr::Peierls {
                hops,
                coef: 1.0 / (2.0 * mass * h * h),
            },
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn kind(&self) -> KineticKind {
        self.kind
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// Fourier symbol for the diagonal kinds, `None` for Peierls.
    pub fn symbol(&self) -> Option<&[f64]> {
        match &self.repr {
            Repr::Fourier { symbol, .. } => Some(symbol),
            Repr::Peierls { .. } => None,
        }
    }

    /// Upper bound on the operator norm.
    pub fn norm_bound(&self) -> f64 {
        match &self.repr {
            Repr::Fourier { symbol, .. } => symbol.iter().fold(0.0, |m, x| m.max(x.abs())),
            Repr::Peierls { coef, .. } => 4.0 * self.grid.dim() as f64 * coef,
        }
    }

    /// `y = S x` on raw site values.
    pub fn apply_slice(&self, x: &[C64], y: &mut [C64]) {
        match &self.repr {
            Repr::Fourier { symbol, spectral } => {
                y.copy_from_slice(x);
                spectral.multiply(y, |i| C64::new(symbol[i], 0.0));
            }
            Repr::Peierls { hops, coef } => {
                let g = &self.grid;
                let d = g.dim();
                for (j, yj) in y.iter_mut().enumerate() {
                    let mut acc = C64::new(0.0, 0.0);
                    for axis in 0..d {
                        let fwd = g.shift(j, axis, 1);
                        let bwd = g.shift(j, axis, -1);
                        acc += 2.0 * x[j] - hops[j * d + axis] * x[fwd] - hops[bwd * d + axis].conj() * x[bwd];
                    }
                    *yj = acc * *coef;
                }
            }
        }
    }

    pub fn apply(&self, f: &Field) -> Result<Field> {
        self.grid.check_same(f.grid())?;
        f.check_finite()?;
        let mut out = vec![C64::new(0.0, 0.0); f.values().len()];
        self.apply_slice(f.values(), &mut out);
        Field::new(self.grid, out)
    }

    /// `exp(-i S dt) x`. Exact multiplier for the Fourier kinds; Lanczos for
    /// Peierls, split into sub-steps with `|S| dt_sub <= 2`.
    pub fn propagate_slice(&self, x: &[C64], dt: f64, cfg: &LanczosConfig) -> Result<Vec<C64>> {
        if !dt.is_finite() {
            return Err(Error::InvalidParameter(format!("time step {dt}")));
        }
        match &self.repr {
            Repr::Fourier { symbol, spectral } => {
                let mut y = x.to_vec();
                if dt != 0.0 {
                    spectral.multiply(&mut y, |i| C64::from_polar(1.0, -symbol[i] * dt));
                }
                Ok(y)
            }
            Repr::Peierls { .. } => {
                let max_step = 2.0 / self.norm_bound();
                krylov::expm_apply_stepped(|a, b| self.apply_slice(a, b), x, dt, max_step, cfg)
            }
        }
    }

    pub fn propagate(&self, f: &Field, dt: f64, cfg: &LanczosConfig) -> Result<Field> {
        self.grid.check_same(f.grid())?;
        Field::new(self.grid, self.propagate_slice(f.values(), dt, cfg)?)
    }

    /// `<f, S f>`, real for Hermitian `S`.
    pub fn expectation(&self, f: &Field) -> Result<f64> {
        let sf = self.apply(f)?;
        Ok(super::inner(f, &sf)?.re)
    }

    /// Dense matrix of `S` in the site basis.
    pub fn dense(&self) -> CMatrix {
        linalg::assemble(self.grid.sites(), |x, y| self.apply_slice(x, y))
    }
}

/// `S f` for the kinetic spec, built on the field's grid.
pub fn apply_kinetic(spec: &KineticSpec, f: &Field) -> Result<Field> {
    KineticOperator::new(spec, *f.grid())?.apply(f)
}

/// `exp(-i S dt) f` with the default Lanczos settings.
pub fn kinetic_propagator(spec: &KineticSpec, dt: f64, f: &Field) -> Result<Field> {
    KineticOperator::new(spec, *f.grid())?.propagate(f, dt, &LanczosConfig::default())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{inner, norm};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_field(grid: GridSpec, rng: &mut ChaCha8Rng) -> Field {
        let v = (0..grid.sites())
            .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        Field::new(grid, v).unwrap()
    }

    fn random_links(grid: GridSpec, rng: &mut ChaCha8Rng) -> VectorPotential {
        let v = (0..grid.sites() * grid.dim()).map(|_| rng.random_range(-2.0..2.0)).collect();
        VectorPotential::Links(LinkField::new(grid, v).unwrap())
    }

    fn all_kinds(grid: GridSpec, rng: &mut ChaCha8Rng) -> Vec<KineticSpec> {
        vec![
            KineticSpec::semirelativistic(1.3),
            KineticSpec::magnetic(0.7, VectorPotential::Zero),
            KineticSpec::magnetic(0.7, random_links(grid, rng)),
            KineticSpec::magnetic(1.0, VectorPotential::Sine { amplitude: 0.8, offset: [0.3, -0.2, 0.1] }),
        ]
    }

    #[test]
    fn semirelativistic_plane_wave_eigenvalue() {
        let g = GridSpec::new(1, 8, 2.0 * std::f64::consts::PI).unwrap();
        let f = Field::plane_wave(g, [1, 0, 0]);
        let sf = apply_kinetic(&KineticSpec::semirelativistic(1.0), &f).unwrap();
        for (a, b) in sf.values().iter().zip(f.values()) {
            assert!((a - b * 2f64.sqrt()).norm() < 1e-13);
        }
        assert!((norm(&sf) - 1.414214).abs() < 1e-6);
    }

    #[test]
    fn constant_field_has_zero_kinetic_energy() {
        let g = GridSpec::new(2, 8, 3.0).unwrap();
        let f = Field::from_fn(g, |_| C64::new(0.4, -0.1));
        let sf = apply_kinetic(&KineticSpec::magnetic(1.0, VectorPotential::Zero), &f).unwrap();
        assert!(sf.values().iter().all(|v| v.norm() < 1e-14));
    }

    #[test]
    fn peierls_is_hermitian_and_positive_as_dense_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = GridSpec::new(2, 6, 2.5).unwrap();
        let op = KineticOperator::new(&KineticSpec::magnetic(0.9, random_links(g, &mut rng)), g).unwrap();
        let m = op.dense();
        assert!(linalg::hs_norm(&(&m - m.adjoint())) < 1e-12);
        let lo = linalg::eigvalsh(&m)[0];
        assert!(lo > -1e-10, "lowest eigenvalue {lo}");
        let f = random_field(g, &mut rng);
        let q = inner(&f, &op.apply(&f).unwrap()).unwrap();
        assert!(q.im.abs() < 1e-12 * q.re.abs().max(1.0) && q.re >= 0.0);
    }

    #[test]
    fn hermiticity_all_kinds() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for g in [GridSpec::new(1, 16, 4.0).unwrap(), GridSpec::new(2, 8, 4.0).unwrap()] {
            for spec in all_kinds(g, &mut rng) {
                let op = KineticOperator::new(&spec, g).unwrap();
                for _ in 0..5 {
                    let f = random_field(g, &mut rng);
                    let h = random_field(g, &mut rng);
                    let a = inner(&f, &op.apply(&h).unwrap()).unwrap();
                    let b = inner(&h, &op.apply(&f).unwrap()).unwrap().conj();
                    assert!((a - b).norm() < 1e-12, "{spec:?}: {}", (a - b).norm());
                }
            }
        }
    }

    #[test]
    fn semirelativistic_bounded_below_by_mass() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = GridSpec::new(1, 32, 6.0).unwrap();
        let spec = KineticSpec::semirelativistic(1.7);
        for _ in 0..20 {
            let f = random_field(g, &mut rng);
            let e = apply_kinetic(&spec, &f).map(|sf| inner(&f, &sf).unwrap().re).unwrap();
            assert!(e >= 1.7 * norm(&f).powi(2) * (1.0 - 1e-12));
        }
    }

    #[test]
    fn discrete_diamagnetic_inequality() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for g in [GridSpec::new(1, 16, 5.0).unwrap(), GridSpec::new(2, 8, 5.0).unwrap()] {
            let zero = LinkField::zeros(g);
            let mass = 0.8;
            let lap = KineticOperator::peierls(g, mass, &zero);
            for _ in 0..20 {
                let links = random_links(g, &mut rng);
                let op = KineticOperator::new(&KineticSpec::magnetic(mass, links), g).unwrap();
                let f = random_field(g, &mut rng);
                let modulus = Field::new(g, f.values().iter().map(|v| C64::new(v.norm(), 0.0)).collect()).unwrap();
                let lhs = lap.expectation(&modulus).unwrap();
                let rhs = op.expectation(&f).unwrap();
                assert!(lhs <= rhs + 1e-12, "{lhs} > {rhs}");
            }
        }
    }

    #[test]
    fn propagator_identity_and_plane_wave_phase() {
        let g = GridSpec::new(1, 8, 2.0 * std::f64::consts::PI).unwrap();
        let f = Field::plane_wave(g, [2, 0, 0]);
        let spec = KineticSpec::semirelativistic(1.0);
        assert_eq!(kinetic_propagator(&spec, 0.0, &f).unwrap(), f);
        let dt = 0.37;
        let out = kinetic_propagator(&spec, dt, &f).unwrap();
        let phase = C64::from_polar(1.0, -(5f64).sqrt() * dt);
        for (a, b) in out.values().iter().zip(f.values()) {
            assert!((a - b * phase).norm() < 1e-13);
        }
        assert!((norm(&out) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn peierls_propagator_is_unitary_and_matches_dense_expm() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = GridSpec::new(1, 32, 6.0).unwrap();
        let op = KineticOperator::new(&KineticSpec::magnetic(1.0, random_links(g, &mut rng)), g).unwrap();
        let f = random_field(g, &mut rng);
        let cfg = LanczosConfig::default();
        let dense = op.dense();
        for dt in [1e-3, 0.05, 0.4] {
            let out = op.propagate(&f, dt, &cfg).unwrap();
            assert!((norm(&out) - norm(&f)).abs() < 1e-10);
            let u = linalg::expm_hermitian(&dense, dt);
            let mut want = vec![C64::new(0.0, 0.0); g.sites()];
            linalg::matvec(&u, f.values(), &mut want);
            let want = Field::new(g, want).unwrap();
            assert!(out.distance(&want).unwrap() < 1e-9);
        }
    }

    #[test]
    fn semirelativistic_rejects_vector_potential() {
        let spec = KineticSpec {
            kind: KineticKind::Semirelativistic,
            mass: 1.0,
            potential: VectorPotential::Constant([1.0, 0.0, 0.0]),
        };
        assert!(spec.validate().is_err());
        assert!(KineticSpec::magnetic(0.0, VectorPotential::Zero).validate().is_err());
    }
}
