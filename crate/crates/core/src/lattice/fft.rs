use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use super::GridSpec;
use crate::C64;

/// Multi-dimensional FFT on a [`GridSpec`], axis by axis.
#[derive(Clone)]
pub struct Spectral {
    grid: GridSpec,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral").field("grid", &self.grid).finish()
    }
}

impl Spectral {
    pub fn new(grid: GridSpec) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            grid,
            forward: planner.plan_fft_forward(grid.points()),
            inverse: planner.plan_fft_inverse(grid.points()),
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    fn transform(&self, data: &mut [C64], plan: &Arc<dyn Fft<f64>>) {
        let m = self.grid.points();
        let d = self.grid.dim();
        let n = self.grid.sites();
        debug_assert_eq!(data.len(), n);
        let mut line = vec![C64::new(0.0, 0.0); m];
        let mut scratch = vec![C64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        for axis in 0..d {
            let stride = m.pow((d - 1 - axis) as u32);
            let block = stride * m;
            for outer in (0..n).step_by(block) {
                for inner in 0..stride {
                    let base = outer + inner;
                    for (k, v) in line.iter_mut().enumerate() {
                        *v = data[base + k * stride];
                    }
                    plan.process_with_scratch(&mut line, &mut scratch);
                    for (k, v) in line.iter().enumerate() {
                        data[base + k * stride] = *v;
                    }
                }
            }
        }
    }

    /// Unnormalized forward transform, `sum_x f(x) exp(-i k x)`.
    pub fn forward(&self, data: &mut [C64]) {
        self.transform(data, &self.forward);
    }

    /// Inverse transform including the `1/M^d` normalization.
    pub fn inverse(&self, data: &mut [C64]) {
        self.transform(data, &self.inverse);
        let s = 1.0 / self.grid.sites() as f64;
        for v in data.iter_mut() {
            *v *= s;
        }
    }

    /// Applies the Fourier multiplier `symbol` (indexed like the sites).
    pub fn multiply(&self, data: &mut [C64], symbol: impl Fn(usize) -> C64) {
        self.forward(data);
        for (i, v) in data.iter_mut().enumerate() {
            *v *= symbol(i);
        }
        self.inverse(data);
    }
}
