//! Periodic box discretization, complex fields on it, and the single-particle
//! kinetic operators.

mod fft;
mod field;
mod gauge;
pub mod io;
mod kinetic;

pub use fft::Spectral;
pub use field::{inner, norm, Field};
pub use gauge::{gauge_transform, LinkField};
pub use kinetic::{
    apply_kinetic, kinetic_propagator, KineticKind, KineticOperator, KineticSpec, VectorPotential,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Regular periodic grid on `[0, L)^d` with `M` points per axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    dim: usize,
    points: usize,
    length: f64,
}

impl GridSpec {
    pub fn new(dim: usize, points: usize, length: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in 1..=3")));
        }
        if points < 4 || points % 2 != 0 {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be even and at least 4, got {points}"
            )));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidGrid(format!("box length {length}")));
        }
        Ok(Self { dim, points, length })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.points as f64
    }

    /// `h^d`, the quadrature weight of one site.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    pub fn sites(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    /// Axis indices of a site, axis 0 most significant.
    pub fn coords(&self, site: usize) -> [usize; 3] {
        let mut c = [0usize; 3];
        let mut s = site;
        for axis in (0..self.dim).rev() {
            c[axis] = s % self.points;
            s /= self.points;
        }
        c
    }

    pub fn site(&self, coords: [usize; 3]) -> usize {
        (0..self.dim).fold(0, |acc, axis| acc * self.points + coords[axis] % self.points)
    }

    /// Neighbour of `site` one step along `axis` in direction `sign`.
    pub fn shift(&self, site: usize, axis: usize, sign: i32) -> usize {
        let mut c = self.coords(site);
        let m = self.points;
        c[axis] = if sign >= 0 { (c[axis] + 1) % m } else { (c[axis] + m - 1) % m };
        self.site(c)
    }

    /// Signed integer offset in `[-M/2, M/2)` of axis index `j`.
    pub fn signed_index(&self, j: usize) -> i64 {
        let m = self.points as i64;
        let j = j as i64;
        if j < m / 2 {
            j
        } else {
            j - m
        }
    }

    /// `2 pi n / L` for FFT index `j`; the Nyquist index maps to `-pi M / L`.
    pub fn wavenumber(&self, j: usize) -> f64 {
        2.0 * std::f64::consts::PI * self.signed_index(j) as f64 / self.length
    }

    /// `|k|^2` of the Fourier mode stored at `site`.
    pub fn k_squared(&self, site: usize) -> f64 {
        let c = self.coords(site);
        (0..self.dim).map(|a| self.wavenumber(c[a]).powi(2)).sum()
    }

    /// Box coordinates of a site in `[0, L)^d`.
    pub fn position(&self, site: usize) -> [f64; 3] {
        let c = self.coords(site);
        let h = self.spacing();
        let mut x = [0.0; 3];
        for a in 0..self.dim {
            x[a] = c[a] as f64 * h;
        }
        x
    }

    /// Minimum-image displacement of a site from the origin.
    pub fn min_image(&self, site: usize) -> [f64; 3] {
        let c = self.coords(site);
        let h = self.spacing();
        let mut x = [0.0; 3];
        for a in 0..self.dim {
            x[a] = self.signed_index(c[a]) as f64 * h;
        }
        x
    }

    /// Site holding the periodic difference `a - b`.
    pub fn difference(&self, a: usize, b: usize) -> usize {
        let ca = self.coords(a);
        let cb = self.coords(b);
        let m = self.points;
        let mut c = [0usize; 3];
        for ax in 0..self.dim {
            c[ax] = (ca[ax] + m - cb[ax]) % m;
        }
        self.site(c)
    }

    /// Site of `-x` for the site of `x`.
    pub fn reflect(&self, site: usize) -> usize {
        let c = self.coords(site);
        let m = self.points;
        let mut r = [0usize; 3];
        for ax in 0..self.dim {
            r[ax] = (m - c[ax]) % m;
        }
        self.site(r)
    }

    pub(crate) fn check_same(&self, other: &GridSpec) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{self:?} vs {other:?}")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_odd_or_small_grids() {
        assert!(GridSpec::new(1, 7, 1.0).is_err());
        assert!(GridSpec::new(1, 2, 1.0).is_err());
        assert!(GridSpec::new(4, 8, 1.0).is_err());
        assert!(GridSpec::new(2, 8, 0.0).is_err());
    }

    #[test]
    fn spacing_and_momenta() {
        let g = GridSpec::new(1, 8, 8.0).unwrap();
        assert_eq!(g.spacing(), 1.0);
        assert_eq!(g.sites(), 8);
        let pi = std::f64::consts::PI;
        assert_eq!(g.wavenumber(0), 0.0);
        assert_eq!(g.wavenumber(4), -pi);
        assert_eq!(g.wavenumber(3), 3.0 * 2.0 * pi / 8.0);
        assert_eq!(g.wavenumber(7), -2.0 * pi / 8.0);
    }

    #[test]
    fn site_indexing_roundtrip() {
        let g = GridSpec::new(3, 4, 1.0).unwrap();
        for s in 0..g.sites() {
            assert_eq!(g.site(g.coords(s)), s);
            assert_eq!(g.reflect(g.reflect(s)), s);
            for ax in 0..3 {
                assert_eq!(g.shift(g.shift(s, ax, 1), ax, -1), s);
            }
        }
        assert_eq!(g.coords(g.site([1, 2, 3])), [1, 2, 3]);
    }
}
