//! Regularized Yukawa kernels, Hartree mean-field potentials, and the
//! stability conditions on the coupling constants.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::krylov;
use crate::lattice::{Field, GridSpec, KineticOperator, Spectral};
use crate::C64;

/// `4 / pi`, the critical negative coupling of the semi-relativistic case.
pub const CRITICAL_COUPLING: f64 = 4.0 / PI;

/// Coupling constants `lambda^(i,j)`, screening lengths `mu^(i,j)` and the
/// core regularization `epsilon` shared by all kernels.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplingMatrix {
    pub lambda11: f64,
    pub lambda22: f64,
    pub lambda12: f64,
    #[serde(default)]
    pub mu11: f64,
    #[serde(default)]
    pub mu22: f64,
    #[serde(default)]
    pub mu12: f64,
    pub epsilon: f64,
}

impl CouplingMatrix {
    pub fn uniform(lambda: f64, mu: f64, epsilon: f64) -> Self {
        Self {
            lambda11: lambda,
            lambda22: lambda,
            lambda12: lambda,
            mu11: mu,
            mu22: mu,
            mu12: mu,
            epsilon,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.lambda11, self.lambda22, self.lambda12, self.mu11, self.mu22, self.mu12];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("non-finite coupling".into()));
        }
        if self.mu11 < 0.0 || self.mu22 < 0.0 || self.mu12 < 0.0 {
            return Err(Error::InvalidParameter("screening parameters mu must be >= 0".into()));
        }
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "core regularization epsilon = {} must be > 0",
                self.epsilon
            )));
        }
        Ok(())
    }

    /// `(lambda11_-, lambda22_-, lambda12_-)` with `x_- = -min(0, x)`.
    pub fn negative_parts(&self) -> [f64; 3] {
        [self.lambda11, self.lambda22, self.lambda12].map(|l| if l < 0.0 { -l } else { 0.0 })
    }

    pub fn scaled(&self, t: f64) -> Self {
        Self {
            lambda11: self.lambda11 * t,
            lambda22: self.lambda22 * t,
            lambda12: self.lambda12 * t,
            ..*self
        }
    }
}

/// `u(x) = lambda exp(-mu r) / sqrt(r^2 + epsilon^2)` sampled with the
/// minimum-image distance `r`, together with its discrete Fourier transform.
#[derive(Clone, Debug)]
pub struct Kernel {
    grid: GridSpec,
    lambda: f64,
    mu: f64,
    epsilon: f64,
    values: Vec<f64>,
    spectrum: Vec<C64>,
    spectral: Spectral,
}

pub fn build_kernel(grid: GridSpec, lambda: f64, mu: f64, epsilon: f64) -> Result<Kernel> {
    if !(epsilon.is_finite() && epsilon > 0.0) {
        return Err(Error::InvalidParameter(format!("epsilon = {epsilon} must be > 0")));
    }
    if !(mu.is_finite() && mu >= 0.0) {
        return Err(Error::InvalidParameter(format!("mu = {mu} must be >= 0")));
    }
    if !lambda.is_finite() {
        return Err(Error::NonFinite("lambda"));
    }
    let values: Vec<f64> = (0..grid.sites())
        .map(|s| {
            let x = grid.min_image(s);
            let r = x.iter().map(|c| c * c).sum::<f64>().sqrt();
            lambda * (-mu * r).exp() / (r * r + epsilon * epsilon).sqrt()
        })
        .collect();
    let spectral = Spectral::new(grid);
    let mut spectrum: Vec<C64> = values.iter().map(|v| C64::new(*v, 0.0)).collect();
    spectral.forward(&mut spectrum);
    Ok(Kernel {
        grid,
        lambda,
        mu,
        epsilon,
        values,
        spectrum,
        spectral,
    })
}

impl Kernel {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `u` evaluated at the periodic difference of two sites.
    pub fn between(&self, a: usize, b: usize) -> f64 {
        self.values[self.grid.difference(a, b)]
    }

    pub fn is_zero(&self) -> bool {
        self.lambda == 0.0
    }

    /// `h^d (u * rho)` by FFT.
    pub fn convolve(&self, density: &[f64]) -> Result<Vec<f64>> {
        if density.len() != self.grid.sites() {
            return Err(Error::GridMismatch(format!(
                "density has {} values for {} sites",
                density.len(),
                self.grid.sites()
            )));
        }
        if density.iter().any(|r| !(r.is_finite() && *r >= -1e-12)) {
            return Err(Error::InvalidParameter("density must be finite and nonnegative".into()));
        }
        if self.is_zero() {
            return Ok(vec![0.0; density.len()]);
        }
        let mut buf: Vec<C64> = density.iter().map(|r| C64::new(*r, 0.0)).collect();
        self.spectral.multiply(&mut buf, |i| self.spectrum[i]);
        let w = self.grid.cell_volume();
        Ok(buf.into_iter().map(|z| z.re * w).collect())
    }
}

/// Mean-field potential `u * |f|^2` for a density on the kernel's grid.
pub fn mean_field_potential(u: &Kernel, density: &[f64]) -> Result<Vec<f64>> {
    u.convolve(density)
}

/// `<f, (u * |g|^2) f>`: the two-body expectation of `u(x - y)` in `f (x) g`.
pub fn pair_energy(u: &Kernel, f: &Field, g: &Field) -> Result<f64> {
    u.grid.check_same(f.grid())?;
    let v = u.convolve(&g.density())?;
    let w = u.grid.cell_volume();
    Ok(w * f.density().iter().zip(&v).map(|(r, p)| r * p).sum::<f64>())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SrCheck {
    pub pass: bool,
    pub margin: f64,
    pub negative_parts: [f64; 3],
}

/// Semi-relativistic stability condition on the negative parts:
/// `l12^2 < (4/pi - l11)(4/pi - l22)` and `l11, l22 < 4/pi`, all strict.
pub fn check_sr_stability(c: &CouplingMatrix) -> SrCheck {
    let [n11, n22, n12] = c.negative_parts();
    let a = CRITICAL_COUPLING - n11;
    let b = CRITICAL_COUPLING - n22;
    let cross = a * b - n12 * n12;
    SrCheck {
        pass: a > 0.0 && b > 0.0 && cross > 0.0,
        margin: a.min(b).min(cross),
        negative_parts: [n11, n22, n12],
    }
}

#[derive(Clone, Copy, Debug)]
pub struct KatoOptions {
    /// Largest site count assembled densely.
    pub dense_cap: usize,
    /// Random Lanczos starts above the cap.
    pub trials: usize,
    pub krylov_dim: usize,
    pub seed: u64,
}

impl Default for KatoOptions {
    fn default() -> Self {
        Self {
            dense_cap: 4096,
            trials: 4,
            krylov_dim: 80,
            seed: 0,
        }
    }
}

/// Smallest eigenvalue of `(pi/2) sqrt(-Laplacian) - exp(-mu r)/sqrt(r^2 + eps^2)`
/// on the grid, with the spectral `|k|`. Without coupling only the kinetic
/// part remains.
///
/// Dense assembly up to `dense_cap` sites, lowest Ritz value over random
/// starts above.
pub fn kato_margin(grid: GridSpec, lambda: f64, mu: f64, epsilon: f64, opts: &KatoOptions) -> Result<f64> {
    let n = grid.sites();
    let potential: Vec<f64> = if lambda == 0.0 {
        vec![0.0; n]
    } else {
        build_kernel(grid, 1.0, mu, epsilon)?.values
    };
    let spectral = Spectral::new(grid);
    let symbol: Vec<f64> = (0..n).map(|s| 0.5 * PI * grid.k_squared(s).sqrt()).collect();
    if n <= opts.dense_cap {
        // circulant: first column is the inverse transform of the symbol
        let mut col: Vec<C64> = symbol.iter().map(|s| C64::new(*s, 0.0)).collect();
        spectral.inverse(&mut col);
        let m = DMatrix::<f64>::from_fn(n, n, |r, c| {
            let k = col[grid.difference(r, c)].re;
            if r == c {
                k - potential[r]
            } else {
                k
            }
        });
        return Ok(SymmetricEigen::new(m).eigenvalues.min());
    }
    if opts.trials == 0 {
        return Err(Error::SizeCap {
            what: "Kato margin dense assembly",
            needed: n as u128,
            cap: opts.dense_cap as u128,
        });
    }
    let apply = |x: &[C64], y: &mut [C64]| {
        y.copy_from_slice(x);
        spectral.multiply(y, |i| C64::new(symbol[i], 0.0));
        for (yi, (xi, v)) in y.iter_mut().zip(x.iter().zip(&potential)) {
            *yi -= xi * v;
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut best = f64::INFINITY;
    for _ in 0..opts.trials {
        let v: Vec<C64> = (0..n).map(|_| C64::new(rng.random_range(-1.0..1.0), 0.0)).collect();
        best = best.min(krylov::lowest_ritz(apply, &v, opts.krylov_dim));
    }
    Ok(best)
}

/// Empirical overshoot of `<f, u^2 f> <= 4 lambda^2 <f, D f>` over random
/// normalized trial functions, where `D` is the supplied operator playing
/// the role of `D_A^2`. Returns `max(0, max_f ratio - 1)`.
pub fn form_bound_overshoot(d_squared: &KineticOperator, kernel: &Kernel, trials: usize, seed: u64) -> Result<f64> {
    let grid = *kernel.grid();
    grid.check_same(d_squared.grid())?;
    if kernel.is_zero() {
        return Ok(0.0);
    }
    let lam2 = kernel.lambda.powi(2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let f = Field::new(
            grid,
            (0..grid.sites())
                .map(|_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect(),
        )?
        .normalized();
        let lhs: f64 = grid.cell_volume()
            * f.density()
                .iter()
                .zip(&kernel.values)
                .map(|(r, u)| r * u * u)
                .sum::<f64>();
        let rhs = 4.0 * lam2 * d_squared.expectation(&f)?;
        if rhs > 0.0 {
            worst = worst.max(lhs / rhs - 1.0);
        }
    }
    Ok(worst.max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{KineticSpec, LinkField, VectorPotential};
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn kernel_formula_values() {
        let g = GridSpec::new(1, 8, 8.0).unwrap();
        let zero = build_kernel(g, 0.0, 0.3, 1.0).unwrap();
        assert!(zero.values().iter().all(|v| *v == 0.0));
        let k = build_kernel(g, 1.0, 0.0, 1.0).unwrap();
        assert_eq!(k.values()[0], 1.0);
        assert!((k.values()[1] - 1.0 / 2f64.sqrt()).abs() < 1e-15);
        let k2 = build_kernel(g, -0.7, 0.5, 0.25).unwrap();
        assert_eq!(k2.values()[0], -0.7 / 0.25);
        assert!(build_kernel(g, 1.0, 0.0, 0.0).is_err());
        assert!(build_kernel(g, 1.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn kernel_is_even() {
        let g = GridSpec::new(2, 8, 5.0).unwrap();
        let k = build_kernel(g, 1.3, 0.2, 0.4).unwrap();
        for s in 0..g.sites() {
            assert_eq!(k.values()[s], k.values()[g.reflect(s)]);
        }
    }

    #[test]
    fn delta_density_returns_kernel() {
        let g = GridSpec::new(2, 8, 3.0).unwrap();
        let k = build_kernel(g, 0.9, 0.1, 0.5).unwrap();
        let mut rho = vec![0.0; g.sites()];
        rho[0] = 1.0 / g.cell_volume();
        let v = mean_field_potential(&k, &rho).unwrap();
        for (a, b) in v.iter().zip(k.values()) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn uniform_density_gives_constant() {
        let g = GridSpec::new(1, 16, 4.0).unwrap();
        let k = build_kernel(g, -0.5, 0.0, 0.5).unwrap();
        let rho0 = 0.37;
        let v = mean_field_potential(&k, &vec![rho0; 16]).unwrap();
        let want = rho0 * g.cell_volume() * k.values().iter().sum::<f64>();
        for x in v {
            assert!((x - want).abs() < 1e-13);
        }
    }

    fn brute_convolution(k: &Kernel, rho: &[f64]) -> Vec<f64> {
        let g = k.grid();
        (0..g.sites())
            .map(|x| g.cell_volume() * (0..g.sites()).map(|y| k.between(x, y) * rho[y]).sum::<f64>())
            .collect()
    }

    #[test]
    fn spectral_convolution_matches_direct_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for g in [GridSpec::new(1, 32, 6.0).unwrap(), GridSpec::new(2, 8, 4.0).unwrap(), GridSpec::new(3, 4, 2.0).unwrap()] {
            let k = build_kernel(g, 1.1, 0.3, 2.0 * g.spacing()).unwrap();
            let rho: Vec<f64> = (0..g.sites()).map(|_| rng.random_range(0.0..2.0)).collect();
            let fast = mean_field_potential(&k, &rho).unwrap();
            let slow = brute_convolution(&k, &rho);
            for (a, b) in fast.iter().zip(&slow) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn reflection_symmetry_of_convolution() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = GridSpec::new(2, 8, 4.0).unwrap();
        let k = build_kernel(g, 0.8, 0.0, 0.5).unwrap();
        let rho: Vec<f64> = (0..g.sites()).map(|_| rng.random_range(0.0..1.0)).collect();
        let reflected: Vec<f64> = (0..g.sites()).map(|s| rho[g.reflect(s)]).collect();
        let v = mean_field_potential(&k, &rho).unwrap();
        let vr = mean_field_potential(&k, &reflected).unwrap();
        for s in 0..g.sites() {
            assert!((v[s] - vr[g.reflect(s)]).abs() < 1e-13);
        }
    }

    #[test]
    fn rejects_negative_density_and_mismatch() {
        let g = GridSpec::new(1, 8, 4.0).unwrap();
        let k = build_kernel(g, 1.0, 0.0, 1.0).unwrap();
        let mut rho = vec![0.1; 8];
        rho[3] = -1e-6;
        assert!(mean_field_potential(&k, &rho).is_err());
        assert!(mean_field_potential(&k, &[0.0; 4]).is_err());
        rho[3] = -1e-14;
        assert!(mean_field_potential(&k, &rho).is_ok());
    }

    #[test]
    fn sr_stability_examples() {
        let pos = CouplingMatrix { lambda11: 0.5, lambda22: 2.0, lambda12: 0.1, mu11: 0.0, mu22: 0.0, mu12: 0.0, epsilon: 0.1 };
        assert!(check_sr_stability(&pos).pass);
        let cross = CouplingMatrix { lambda11: 0.0, lambda22: 0.0, lambda12: -1.0, ..pos };
        let r = check_sr_stability(&cross);
        assert!(r.pass);
        assert!((r.margin - ((4.0 / PI).powi(2) - 1.0)).abs() < 1e-15);
        assert!(((4.0 / PI).powi(2) - 1.621139).abs() < 1e-6);
        let critical = CouplingMatrix { lambda11: -4.0 / PI, ..pos };
        let r = check_sr_stability(&critical);
        assert!(!r.pass);
        assert_eq!(r.margin, 0.0);
    }

    proptest! {
        #[test]
        fn sr_margin_monotone_under_shrinking(l11 in -1.5f64..0.0, l22 in -1.5f64..0.0, l12 in -1.5f64..0.0, t in 0.0f64..=1.0) {
            let c = CouplingMatrix { lambda11: l11, lambda22: l22, lambda12: l12, mu11: 0.0, mu22: 0.0, mu12: 0.0, epsilon: 1.0 };
            let m0 = check_sr_stability(&c).margin;
            let m1 = check_sr_stability(&c.scaled(t)).margin;
            prop_assert!(m1 >= m0 - 1e-12);
        }
    }

    #[test]
    fn kato_margin_without_coupling_is_zero() {
        let g = GridSpec::new(1, 16, 4.0).unwrap();
        let m = kato_margin(g, 0.0, 0.0, 0.5, &KatoOptions::default()).unwrap();
        assert!(m.abs() < 1e-12, "{m}");
    }

    #[test]
    fn kato_margin_three_dimensions() {
        let g = GridSpec::new(3, 8, 16.0).unwrap();
        let h = g.spacing();
        let opts = KatoOptions::default();
        let margins: Vec<f64> = [1.0, 2.0, 4.0]
            .iter()
            .map(|f| kato_margin(g, -1.0, 0.0, f * h, &opts).unwrap())
            .collect();
        assert!(margins[1] >= -0.2, "{margins:?}");
        assert!(margins[0] <= margins[1] && margins[1] <= margins[2], "{margins:?}");
    }

    #[test]
    fn kato_margin_scales_inversely_with_box() {
        // mu = 0 and eps proportional to h: homogeneous of degree -1 in length
        let opts = KatoOptions::default();
        let a = GridSpec::new(2, 8, 4.0).unwrap();
        let b = GridSpec::new(2, 8, 8.0).unwrap();
        let ma = kato_margin(a, -1.0, 0.0, 2.0 * a.spacing(), &opts).unwrap();
        let mb = kato_margin(b, -1.0, 0.0, 2.0 * b.spacing(), &opts).unwrap();
        assert!((ma - 2.0 * mb).abs() < 1e-10, "{ma} {mb}");
    }

    #[test]
    fn kato_ritz_path_agrees_with_dense() {
        let g = GridSpec::new(2, 8, 4.0).unwrap();
        let dense = kato_margin(g, 1.0, 0.1, 0.5, &KatoOptions::default()).unwrap();
        let ritz = kato_margin(g, 1.0, 0.1, 0.5, &KatoOptions { dense_cap: 0, trials: 2, krylov_dim: 64, seed: 3 }).unwrap();
        assert!(ritz >= dense - 1e-9);
        assert!((ritz - dense).abs() < 1e-6, "{ritz} vs {dense}");
    }

    #[test]
    fn form_bound_overshoot_basics() {
        let g = GridSpec::new(1, 32, 8.0).unwrap();
        // mass 1/2 turns D_A^2/(2m) into D_A^2
        let d2 = KineticOperator::peierls(g, 0.5, &LinkField::zeros(g));
        let zero = build_kernel(g, 0.0, 0.0, 0.5).unwrap();
        assert_eq!(form_bound_overshoot(&d2, &zero, 10, 1).unwrap(), 0.0);
        let k = build_kernel(g, 1.0, 0.0, 2.0 * g.spacing()).unwrap();
        let o = form_bound_overshoot(&d2, &k, 20, 1).unwrap();
        assert!(o.is_finite() && o >= 0.0);
        let mag = KineticOperator::new(&KineticSpec::magnetic(0.5, VectorPotential::Constant([0.4, 0.0, 0.0])), g).unwrap();
        assert!(form_bound_overshoot(&mag, &k, 20, 1).unwrap().is_finite());
    }
}
