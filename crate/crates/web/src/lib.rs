//! Browser front end: a live two-species Hartree run on a 1-d ring, the
//! (SR) stability check and the interaction-kernel profile.
//!
//! The plain Rust API ([`Demo`], [`sr_report`], [`kernel_profile`]) is what
//! the `#[wasm_bindgen]` wrappers call; it also builds natively for tests.

use bosemix::interaction::{build_kernel, check_sr_stability, CouplingMatrix};
use bosemix::lattice::{Field, GridSpec, KineticSpec, VectorPotential};
use bosemix::meanfield::{mass_defect, HartreeState, HartreeSystem, SplittingOrder};
use bosemix::Result;
use wasm_bindgen::prelude::*;

/// `{"pass": bool, "margin": f64, "negative_parts": [..]}`.
pub fn sr_report(lambda11: f64, lambda22: f64, lambda12: f64) -> String {
    let c = CouplingMatrix {
        lambda11,
        lambda22,
        lambda12,
        ..CouplingMatrix::uniform(0.0, 0.0, 1.0)
    };
    serde_json::to_string(&check_sr_stability(&c)).expect("plain struct")
}

/// Kernel values ordered by position from `-L/2` to `L/2`.
pub fn kernel_profile(points: usize, length: f64, lambda: f64, mu: f64, epsilon: f64) -> Result<Vec<f64>> {
    let g = GridSpec::new(1, points, length)?;
    let k = build_kernel(g, lambda, mu, epsilon)?;
    let mut pairs: Vec<(f64, f64)> = (0..g.sites()).map(|s| (g.min_image(s)[0], k.values()[s])).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(pairs.into_iter().map(|p| p.1).collect())
}

/// Two Gaussian packets sent towards each other on a ring.
#[wasm_bindgen]
pub struct Demo {
    sys: HartreeSystem,
    state: HartreeState,
    e0: f64,
}

impl Demo {
    #[allow(clippy::too_many_arguments)]
    pub fn build(
        points: usize,
        length: f64,
        semirelativistic1: bool,
        semirelativistic2: bool,
        lambda11: f64,
        lambda22: f64,
        lambda12: f64,
        momentum: f64,
    ) -> Result<Demo> {
        let g = GridSpec::new(1, points, length)?;
        let kinetic = |semi: bool| {
            if semi {
                KineticSpec::semirelativistic(1.0)
            } else {
                KineticSpec::magnetic(1.0, VectorPotential::Zero)
            }
        };
        let specs = [kinetic(semirelativistic1), kinetic(semirelativistic2)];
        let c = CouplingMatrix {
            lambda11,
            lambda22,
            lambda12,
            ..CouplingMatrix::uniform(0.0, 0.0, 2.0 * g.spacing())
        };
        let sys = HartreeSystem::new(g, [&specs[0], &specs[1]], c, 1.0)?;
        let w = length / 12.0;
        let state = HartreeState::new(
            Field::gaussian(g, [-length / 6.0, 0.0, 0.0], w, [momentum, 0.0, 0.0]),
            Field::gaussian(g, [length / 6.0, 0.0, 0.0], w, [-momentum, 0.0, 0.0]),
        )?;
        let e0 = sys.energy_report(&state)?.e_total;
        Ok(Demo { sys, state, e0 })
    }

    pub fn advance(&mut self, dt: f64, steps: usize) -> Result<()> {
        self.state = self.sys.evolve(&self.state, dt, steps, SplittingOrder::Second, |_, _| Ok(()))?;
        Ok(())
    }

    pub fn relative_energy_drift(&self) -> Result<f64> {
        let e = self.sys.energy_report(&self.state)?.e_total;
        Ok((e - self.e0).abs() / self.e0.abs().max(1e-300))
    }
}

fn js(e: bosemix::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
impl Demo {
    #[wasm_bindgen(constructor)]
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        points: usize,
        length: f64,
        semirelativistic1: bool,
        semirelativistic2: bool,
        lambda11: f64,
        lambda22: f64,
        lambda12: f64,
        momentum: f64,
    ) -> std::result::Result<Demo, JsError> {
        Self::build(points, length, semirelativistic1, semirelativistic2, lambda11, lambda22, lambda12, momentum).map_err(js)
    }

    pub fn step(&mut self, dt: f64, steps: usize) -> std::result::Result<(), JsError> {
        self.advance(dt, steps).map_err(js)
    }

    pub fn time(&self) -> f64 {
        self.state.t
    }

    pub fn density1(&self) -> Vec<f64> {
        self.state.psi.density()
    }

    pub fn density2(&self) -> Vec<f64> {
        self.state.phi.density()
    }

    #[wasm_bindgen(js_name = massDefect)]
    pub fn mass_defect(&self) -> f64 {
        mass_defect(&self.state)
    }

    #[wasm_bindgen(js_name = energyDrift)]
    pub fn energy_drift(&self) -> std::result::Result<f64, JsError> {
        self.relative_energy_drift().map_err(js)
    }
}

#[wasm_bindgen(js_name = srCheck)]
pub fn sr_check(lambda11: f64, lambda22: f64, lambda12: f64) -> String {
    sr_report(lambda11, lambda22, lambda12)
}

#[wasm_bindgen(js_name = kernelProfile)]
pub fn kernel_profile_js(points: usize, length: f64, lambda: f64, mu: f64, epsilon: f64) -> std::result::Result<Vec<f64>, JsError> {
    kernel_profile(points, length, lambda, mu, epsilon).map_err(js)
}
