use super::GridSpec;
use crate::error::{Error, Result};
use crate::par;
use crate::C64;

/// Complex single-particle wavefunction sampled on a grid.
///
/// Norm convention: `|f|^2 = h^d sum_j |f_j|^2`.
#[derive(Clone, Debug, PartialEq)]
pub struct Field {
    grid: GridSpec,
    values: Vec<C64>,
}

impl Field {
    pub fn new(grid: GridSpec, values: Vec<C64>) -> Result<Self> {
        if values.len() != grid.sites() {
            return Err(Error::GridMismatch(format!(
                "{} values for {} sites",
                values.len(),
                grid.sites()
            )));
        }
        if values.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::NonFinite("field values"));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            values: vec![C64::new(0.0, 0.0); grid.sites()],
        }
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn([f64; 3]) -> C64) -> Self {
        let values = (0..grid.sites()).map(|s| f(grid.position(s))).collect();
        Self { grid, values }
    }

    /// Normalized periodic Gaussian `exp(-|x - c|^2 / (2 w^2) + i p.x)`, with
    /// the minimum-image distance to the center.
    pub fn gaussian(grid: GridSpec, center: [f64; 3], width: f64, momentum: [f64; 3]) -> Self {
        let l = grid.length();
        let d = grid.dim();
        let f = Self::from_fn(grid, |x| {
            let mut r2 = 0.0;
            let mut phase = 0.0;
            for a in 0..d {
                let mut dx = x[a] - center[a];
                dx -= l * (dx / l).round();
                r2 += dx * dx;
                phase += momentum[a] * dx;
            }
            C64::from_polar((-r2 / (2.0 * width * width)).exp(), phase)
        });
        f.normalized()
    }

    /// Normalized plane wave `exp(i k_n . x)` with integer mode numbers `n`.
    pub fn plane_wave(grid: GridSpec, modes: [i64; 3]) -> Self {
        let tau = 2.0 * std::f64::consts::PI / grid.length();
        let d = grid.dim();
        Self::from_fn(grid, |x| {
            let phase: f64 = (0..d).map(|a| tau * modes[a] as f64 * x[a]).sum();
            C64::from_polar(1.0, phase)
        })
        .normalized()
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [C64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<C64> {
        self.values
    }

    pub fn norm(&self) -> f64 {
        (self.grid.cell_volume() * par::norm_sqr(&self.values)).sqrt()
    }

    pub fn normalized(mut self) -> Self {
        let n = self.norm();
        if n > 0.0 {
            for v in &mut self.values {
                *v /= n;
            }
        }
        self
    }

    /// Pointwise `|f|^2`.
    pub fn density(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm_sqr()).collect()
    }

    pub fn scaled(&self, c: C64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    /// `|self - other|` in the weighted L2 norm.
    pub fn distance(&self, other: &Field) -> Result<f64> {
        self.grid.check_same(&other.grid)?;
        let s: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        Ok((s * self.grid.cell_volume()).sqrt())
    }

    pub(crate) fn check_finite(&self) -> Result<()> {
        if self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite("field values"))
        }
    }
}

/// `h^d sum_j conj(f_j) g_j`.
pub fn inner(f: &Field, g: &Field) -> Result<C64> {
    f.grid.check_same(&g.grid)?;
    Ok(par::dot(&f.values, &g.values) * f.grid.cell_volume())
}

pub fn norm(f: &Field) -> f64 {
    f.norm()
}
