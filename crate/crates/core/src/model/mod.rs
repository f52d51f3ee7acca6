//! Model parameters, the pair-drive matrix and its Takagi factorization.

mod config;
mod lattice;
mod takagi;

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use config::{read_matrix_csv, ModelConfig};
pub use lattice::{build_pairing_matrix, Lattice};
pub use takagi::{singular_value_formula, takagi, zone_singular_values, PairingSpectrum, DEGENERACY_RTOL};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[default]
    Periodic,
    Open,
}

/// Physical parameters. Energies and rates share one absolute unit.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpec {
    pub n_modes: usize,
    /// Lattice extents; empty means no spatial structure.
    pub dims: Vec<usize>,
    pub boundary: Boundary,
    /// Global Hubbard energy `U`; the per-mode Kerr is `U/N`.
    pub interaction: f64,
    pub detuning: f64,
    pub loss: f64,
    /// On-site pair drive `G`.
    pub onsite_drive: Complex64,
    /// Nearest-neighbour pair drive `Λ`.
    pub bond_drive: Complex64,
    pub pairing_override: Option<Array2<Complex64>>,
}

/// Scalars every closed form is written in.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DerivedScalars {
    /// `u = U/N`.
    pub kerr_per_mode: f64,
    /// `Δ + iκ/2`.
    pub complex_detuning: Complex64,
    /// `δ = 1 - (Δ + iκ/2)/(2u)`.
    pub reduced_detuning: Complex64,
}

impl ModelSpec {
    /// All-to-all model with on-site drive only.
    pub fn uniform(n_modes: usize, interaction: f64, detuning: f64, loss: f64, onsite_drive: Complex64) -> Self {
        ModelSpec {
            n_modes,
            dims: Vec::new(),
            boundary: Boundary::Periodic,
            interaction,
            detuning,
            loss,
            onsite_drive,
            bond_drive: Complex64::new(0.0, 0.0),
            pairing_override: None,
        }
    }

    /// Hypercubic lattice with extents `dims`.
    pub fn lattice(
        dims: &[usize],
        boundary: Boundary,
        interaction: f64,
        detuning: f64,
        loss: f64,
        onsite_drive: Complex64,
        bond_drive: Complex64,
    ) -> Self {
        ModelSpec {
            n_modes: dims.iter().product(),
            dims: dims.to_vec(),
            boundary,
            interaction,
            detuning,
            loss,
            onsite_drive,
            bond_drive,
            pairing_override: None,
        }
    }

    pub fn with_pairing(mut self, m: Array2<Complex64>) -> Self {
        self.pairing_override = Some(m);
        self
    }

    pub fn dimension(&self) -> usize {
        self.dims.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_modes == 0 {
            return Err(Error::InvalidModel("mode count must be positive".into()));
        }
        if !self.dims.is_empty() && self.dims.iter().product::<usize>() != self.n_modes {
            return Err(Error::InvalidModel(format!(
                "lattice extents {:?} do not multiply to N = {}",
                self.dims, self.n_modes
            )));
        }
        if self.dims.contains(&0) {
            return Err(Error::InvalidModel("lattice extents must be positive".into()));
        }
        if self.interaction == 0.0 || !self.interaction.is_finite() {
            return Err(Error::InvalidModel("interaction U must be finite and nonzero".into()));
        }
        if self.loss < 0.0 || !self.loss.is_finite() {
            return Err(Error::InvalidModel("loss rate must be finite and non-negative".into()));
        }
        if !self.detuning.is_finite() {
            return Err(Error::InvalidModel("detuning must be finite".into()));
        }
        if let Some(m) = &self.pairing_override {
            if m.dim() != (self.n_modes, self.n_modes) {
                return Err(Error::InvalidModel(format!(
                    "pairing matrix has shape {:?}, expected {n}x{n}",
                    m.dim(),
                    n = self.n_modes
                )));
            }
        }
        Ok(())
    }

    pub fn derived(&self) -> DerivedScalars {
        let u = self.interaction / self.n_modes as f64;
        let complex_detuning = Complex64::new(self.detuning, self.loss / 2.0);
        DerivedScalars {
            kerr_per_mode: u,
            complex_detuning,
            reduced_detuning: Complex64::new(1.0, 0.0) - complex_detuning / (2.0 * u),
        }
    }

    pub fn pairing_matrix(&self) -> Result<Array2<Complex64>> {
        build_pairing_matrix(self)
    }

    /// Pairing matrix, Takagi factors and singular values of `M/u`.
    pub fn spectrum(&self) -> Result<PairingSpectrum> {
        self.validate()?;
        let m = build_pairing_matrix(self)?;
        takagi(&m, self.derived().kerr_per_mode)
    }

    /// Detuning at which `δ = -n`, the `n`-th multiphoton resonance.
    pub fn resonance_detuning(&self, n: usize) -> f64 {
        2.0 * self.interaction * (n as f64 + 1.0) / self.n_modes as f64
    }

    /// Detuning where the steady state becomes a pair coherent state as κ → 0⁺.
    pub fn pcs_detuning(&self) -> f64 {
        let n = self.n_modes as f64;
        self.interaction * (2.0 - n) / n
    }
}

/// Distance of `δ` from the nearest non-positive integer, or `None` when
/// `Re δ > 0.5`.
pub fn resonance_distance(delta: Complex64) -> Option<f64> {
    if delta.re > 0.5 {
        return None;
    }
    let k = delta.re.round().min(0.0);
    Some((delta - k).norm())
}

/// Rejects `δ` sitting exactly on a multiphoton resonance.
pub fn check_nonresonant(delta: Complex64) -> Result<()> {
    if let Some(d) = resonance_distance(delta) {
        if d < 1e-14 {
            return Err(Error::Resonant { delta: delta.to_string(), distance: d });
        }
    }
    Ok(())
}
