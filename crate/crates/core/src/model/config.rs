use std::path::{Path, PathBuf};

use ndarray::Array2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{Boundary, ModelSpec};
use crate::{Error, Result};

/// TOML model description.
///
/// ```toml
/// n = 24
/// d = 1
/// dims = [24]
/// boundary = "periodic"
/// big_u = 1.0
/// delta = 3.0
/// kappa = 0.01
/// g_re = 0.2
/// lambda_re = 0.25
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub n: usize,
    #[serde(default)]
    pub d: Option<usize>,
    #[serde(default)]
    pub dims: Vec<usize>,
    #[serde(default)]
    pub boundary: Boundary,
    pub big_u: f64,
    pub delta: f64,
    pub kappa: f64,
    #[serde(default)]
    pub g_re: f64,
    #[serde(default)]
    pub g_im: f64,
    #[serde(default)]
    pub lambda_re: f64,
    #[serde(default)]
    pub lambda_im: f64,
    /// CSV with `N` rows and `2N` columns, real and imaginary parts interleaved.
    #[serde(default)]
    pub matrix: Option<PathBuf>,
}

impl ModelConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = Self::from_toml_str(&text)?;
        if let (Some(m), Some(dir)) = (&cfg.matrix, path.parent()) {
            if m.is_relative() {
                cfg.matrix = Some(dir.join(m));
            }
        }
        Ok(cfg)
    }

    pub fn to_spec(&self) -> Result<ModelSpec> {
        let d = self.d.unwrap_or(self.dims.len());
        if d != self.dims.len() {
            return Err(Error::Config(format!("d = {d} but dims has {} entries", self.dims.len())));
        }
        let spec = ModelSpec {
            n_modes: self.n,
            dims: self.dims.clone(),
            boundary: self.boundary,
            interaction: self.big_u,
            detuning: self.delta,
            loss: self.kappa,
            onsite_drive: Complex64::new(self.g_re, self.g_im),
            bond_drive: Complex64::new(self.lambda_re, self.lambda_im),
            pairing_override: match &self.matrix {
                Some(p) => Some(read_matrix_csv(p, self.n)?),
                None => None,
            },
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Reads an `n x n` complex matrix stored as `n` rows of `2n` interleaved columns.
pub fn read_matrix_csv(path: &Path, n: usize) -> Result<Array2<Complex64>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let mut m = Array2::<Complex64>::zeros((n, n));
    let mut rows = 0;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Config(e.to_string()))?;
        if i >= n {
            return Err(Error::Config(format!("matrix file has more than {n} rows")));
        }
        if rec.len() != 2 * n {
            return Err(Error::Config(format!("row {i} has {} columns, expected {}", rec.len(), 2 * n)));
        }
        for j in 0..n {
            let parse = |s: &str| s.parse::<f64>().map_err(|e| Error::Config(format!("row {i}: {e}")));
            m[[i, j]] = Complex64::new(parse(&rec[2 * j])?, parse(&rec[2 * j + 1])?);
        }
        rows += 1;
    }
    if rows != n {
        return Err(Error::Config(format!("matrix file has {rows} rows, expected {n}")));
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_lattice_config() {
        let cfg = ModelConfig::from_toml_str(
            "n = 6\ndims = [2, 3]\nboundary = \"open\"\nbig_u = 1.0\ndelta = 0.5\nkappa = 0.01\ng_re = 0.2\nlambda_re = 0.25\n",
        )
        .unwrap();
        let spec = cfg.to_spec().unwrap();
        assert_eq!(spec.dimension(), 2);
        assert_eq!(spec.boundary, Boundary::Open);
        assert_eq!(spec.bond_drive, Complex64::new(0.25, 0.0));
    }

    #[test]
    fn rejects_inconsistent_dimension() {
        let cfg = ModelConfig::from_toml_str("n = 4\nd = 1\nbig_u = 1.0\ndelta = 0.0\nkappa = 0.1\n").unwrap();
        assert!(cfg.to_spec().is_err());
    }

    #[test]
    fn reads_interleaved_matrix() {
        let dir = std::env::temp_dir().join(format!("kl-cfg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("m.csv");
        std::fs::write(&p, "1.0, 0.0, 0.5, 0.1\n0.5, 0.1, -1.0, 0.0\n").unwrap();
        let m = read_matrix_csv(&p, 2).unwrap();
        assert_eq!(m[[0, 1]], Complex64::new(0.5, 0.1));
        assert_eq!(m[[1, 1]], Complex64::new(-1.0, 0.0));
        assert!(read_matrix_csv(&p, 3).is_err());
        std::fs::remove_dir_all(&dir).ok();
    }
}
