use ndarray::Array2;
use num_complex::Complex64;

use super::{Boundary, ModelSpec};
use crate::{Error, Result};

/// Row-major hypercubic lattice; the first extent varies slowest.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lattice {
    pub dims: Vec<usize>,
    pub boundary: Boundary,
    strides: Vec<usize>,
}

impl Lattice {
    pub fn new(dims: &[usize], boundary: Boundary) -> Self {
        let mut strides = vec![1; dims.len()];
        for a in (0..dims.len().saturating_sub(1)).rev() {
            strides[a] = strides[a + 1] * dims[a + 1];
        }
        Lattice { dims: dims.to_vec(), boundary, strides }
    }

    pub fn sites(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn coords(&self, site: usize) -> Vec<usize> {
        self.dims.iter().zip(&self.strides).map(|(&l, &s)| (site / s) % l).collect()
    }

    /// Site reached from `site` by moving `r` steps along `axis`, or `None`
    /// when an open boundary is crossed.
    pub fn shift(&self, site: usize, axis: usize, r: isize) -> Option<usize> {
        let l = self.dims[axis] as isize;
        let x = ((site / self.strides[axis]) % self.dims[axis]) as isize;
        let y = x + r;
        let y = match self.boundary {
            Boundary::Periodic => y.rem_euclid(l),
            Boundary::Open if (0..l).contains(&y) => y,
            Boundary::Open => return None,
        };
        Some((site as isize + (y - x) * self.strides[axis] as isize) as usize)
    }
}

/// `M_ii = G`, `M_ij = Λ/(2D)` per nearest-neighbour relation, zero otherwise.
///
/// A bond reached in both directions (periodic extent 2) or wrapping onto the
/// same site (extent 1) accumulates once per relation, which keeps the
/// Fourier singular values `|Λ/D Σ cos k + G|` exact for every extent.
pub fn build_pairing_matrix(spec: &ModelSpec) -> Result<Array2<Complex64>> {
    let n = spec.n_modes;
    if let Some(m) = &spec.pairing_override {
        return Ok(m.clone());
    }
    let d = spec.dimension();
    if d == 0 && spec.bond_drive != Complex64::new(0.0, 0.0) {
        return Err(Error::InvalidModel("nearest-neighbour drive requires a lattice (D > 0)".into()));
    }
    let mut m = Array2::<Complex64>::zeros((n, n));
    for i in 0..n {
        m[[i, i]] = spec.onsite_drive;
    }
    if d == 0 {
        return Ok(m);
    }
    let lat = Lattice::new(&spec.dims, spec.boundary);
    let bond = spec.bond_drive / (2.0 * d as f64);
    for i in 0..n {
        for axis in 0..d {
            for step in [-1isize, 1] {
                if let Some(j) = lat.shift(i, axis, step) {
                    m[[i, j]] += bond;
                }
            }
        }
    }
    Ok(m)
}
