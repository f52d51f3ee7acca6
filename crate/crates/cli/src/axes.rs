//! Sweep axes and parameter assignment.

use std::str::FromStr;

use clap::ValueEnum;
use kerrlattice::model::ModelConfig;

/// Parameters a sweep may vary, named after the config fields.
pub const PARAMETERS: [&str; 8] = ["n", "big_u", "delta", "kappa", "g_re", "g_im", "lambda_re", "lambda_im"];

#[derive(Clone, Debug, PartialEq)]
pub struct Axis {
    pub name: String,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
    pub log: bool,
}

impl FromStr for Axis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (name, range) = s.split_once('=').ok_or_else(|| format!("expected name=start:stop:count, got '{s}'"))?;
        let name = name.trim().to_string();
        if !PARAMETERS.contains(&name.as_str()) {
            return Err(format!("unknown parameter '{name}', expected one of {}", PARAMETERS.join(", ")));
        }
        let parts: Vec<&str> = range.split(':').collect();
        if !(3..=4).contains(&parts.len()) {
            return Err(format!("expected start:stop:count[:log], got '{range}'"));
        }
        let num = |p: &str| p.trim().parse::<f64>().map_err(|e| format!("'{p}': {e}"));
        let count: usize = parts[2].trim().parse().map_err(|e| format!("'{}': {e}", parts[2]))?;
        if count == 0 {
            return Err("axis count must be at least 1".into());
        }
        let log = match parts.get(3).map(|p| p.trim()) {
            None | Some("lin") | Some("linear") => false,
            Some("log") => true,
            Some(other) => return Err(format!("unknown spacing '{other}'")),
        };
        let (start, stop) = (num(parts[0])?, num(parts[1])?);
        if log && !(start > 0.0 && stop > 0.0) {
            return Err("log axes need positive endpoints".into());
        }
        Ok(Axis { name, start, stop, count, log })
    }
}

impl Axis {
    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let step = |i: usize| i as f64 / (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                if self.log {
                    (self.start.ln() + (self.stop.ln() - self.start.ln()) * step(i)).exp()
                } else {
                    self.start + (self.stop - self.start) * step(i)
                }
            })
            .collect()
    }
}

/// Row-major grid over the axes, last axis fastest.
pub fn grid(axes: &[Axis]) -> Vec<Vec<f64>> {
    let mut points = vec![Vec::new()];
    for axis in axes {
        let vals = axis.values();
        points = points
            .into_iter()
            .flat_map(|p| {
                vals.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    points
}

/// Sets `name` on `cfg`; energies are given in units of `U` unless `si`.
pub fn assign(cfg: &mut ModelConfig, name: &str, value: f64, si: bool) -> Result<(), String> {
    let scale = if si { 1.0 } else { cfg.big_u };
    match name {
        "n" => {
            let n = value.round();
            if n < 1.0 || (n - value).abs() > 1e-9 {
                return Err(format!("n must be a positive integer, got {value}"));
            }
            let n = n as usize;
            if !cfg.dims.is_empty() {
                let d = cfg.dims.len() as i32;
                let side = (n as f64).powf(1.0 / d as f64).round() as usize;
                if side.pow(d as u32) != n {
                    return Err(format!("n = {n} is not a {d}-dimensional hypercube"));
                }
                cfg.dims = vec![side; d as usize];
            }
            cfg.n = n;
        }
        "big_u" => cfg.big_u = value,
        "delta" => cfg.delta = value * scale,
        "kappa" => cfg.kappa = value * scale,
        "g_re" => cfg.g_re = value * scale,
        "g_im" => cfg.g_im = value * scale,
        "lambda_re" => cfg.lambda_re = value * scale,
        "lambda_im" => cfg.lambda_im = value * scale,
        other => return Err(format!("unknown parameter '{other}'")),
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Observable {
    Nbar,
    OneParticle,
    Pairing,
    /// `g2` at the largest displacement
    G2Far,
    G2K,
    G2Phi,
    /// `∂n̄/∂Δ`
    Chi,
    Concentration,
}

impl Observable {
    pub fn needs_quartic(self) -> bool {
        matches!(self, Observable::G2Far | Observable::G2K | Observable::G2Phi)
    }

    pub fn columns(self, r: usize) -> Vec<String> {
        match self {
            Observable::Nbar => vec!["nbar".into()],
            Observable::OneParticle => vec![format!("one_particle_r{r}_re"), format!("one_particle_r{r}_im")],
            Observable::Pairing => vec![format!("pairing_r{r}_re"), format!("pairing_r{r}_im")],
            Observable::G2Far => vec!["g2_far".into()],
            Observable::G2K => vec!["g2_k".into()],
            Observable::G2Phi => vec!["g2_phi".into()],
            Observable::Chi => vec!["chi".into()],
            Observable::Concentration => vec!["concentration".into()],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> ModelConfig {
        ModelConfig::from_toml_str("n = 16\ndims = [4, 4]\nbig_u = 2.0\ndelta = 0.0\nkappa = 0.1\n").unwrap()
    }

    #[test]
    fn parses_axes() {
        let a: Axis = "delta=-1:1:5".parse().unwrap();
        assert_eq!(a.values(), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        let b: Axis = "kappa=0.01:1:3:log".parse().unwrap();
        assert!((b.values()[1] - 0.1).abs() < 1e-15);
        assert!("delta=0:1:0".parse::<Axis>().is_err());
        assert!("mass=0:1:3".parse::<Axis>().is_err());
        assert!("kappa=0:1:3:log".parse::<Axis>().is_err());
    }

    #[test]
    fn single_point_axis() {
        let a: Axis = "delta=0.3:9:1".parse().unwrap();
        assert_eq!(a.values(), vec![0.3]);
    }

    #[test]
    fn grid_is_row_major() {
        let axes = ["delta=0:1:2".parse().unwrap(), "kappa=1:3:3".parse().unwrap()];
        let g = grid(&axes);
        assert_eq!(g.len(), 6);
        assert_eq!(g[1], vec![0.0, 2.0]);
        assert_eq!(g[3], vec![1.0, 1.0]);
    }

    #[test]
    fn energies_scale_with_u() {
        let mut cfg = base();
        assign(&mut cfg, "delta", 0.5, false).unwrap();
        assert_eq!(cfg.delta, 1.0);
        assign(&mut cfg, "delta", 0.5, true).unwrap();
        assert_eq!(cfg.delta, 0.5);
    }

    #[test]
    fn size_keeps_lattice_shape() {
        let mut cfg = base();
        assign(&mut cfg, "n", 36.0, false).unwrap();
        assert_eq!(cfg.dims, vec![6, 6]);
        assert!(assign(&mut cfg, "n", 10.0, false).is_err());
    }
}
