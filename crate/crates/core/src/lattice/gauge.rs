use super::{Field, GridSpec, VectorPotential};
use crate::error::{Error, Result};
use crate::C64;

/// Real values on the links `(j, j + e)`, stored as `site * d + axis`, read
/// as the vector potential component `A_e` at the link midpoint.
#[derive(Clone, Debug, PartialEq)]
pub struct LinkField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl LinkField {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.sites() * grid.dim() {
            return Err(Error::GridMismatch(format!(
                "{} link values for {} links",
                values.len(),
                grid.sites() * grid.dim()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.sites() * grid.dim()],
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Gauge transformation by the site function `chi`:
/// `f -> exp(i chi) f` and `A_e(j + e/2) -> A_e(j + e/2) + (chi_{j+e} - chi_j) / h`.
pub fn gauge_transform(f: &Field, potential: &VectorPotential, chi: &[f64]) -> Result<(Field, VectorPotential)> {
    let grid = *f.grid();
    if chi.len() != grid.sites() {
        return Err(Error::GridMismatch(format!(
            "gauge function has {} values for {} sites",
            chi.len(),
            grid.sites()
        )));
    }
    let links = potential.links(&grid)?;
    let h = grid.spacing();
    let d = grid.dim();
    let mut shifted = links.values.clone();
    for site in 0..grid.sites() {
        for axis in 0..d {
            let next = grid.shift(site, axis, 1);
            shifted[site * d + axis] += (chi[next] - chi[site]) / h;
        }
    }
    let values = f
        .values()
        .iter()
        .zip(chi)
        .map(|(v, c)| v * C64::from_polar(1.0, *c))
        .collect();
    Ok((
        Field::new(grid, values)?,
        VectorPotential::Links(LinkField::new(grid, shifted)?),
    ))
}
