use num_complex::Complex64;

use crate::formfactors::{convolve, mode_weights, ClassConvolver};
use crate::model::{check_nonresonant, PairingSpectrum};
use crate::specialfn::{ln_pochhammer_real, pochhammer, LogComplex, LogSum};
use crate::{Error, Result};

/// One distinguished mode in a normally ordered moment
/// `b†^{2n+b} b^{2m+b}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ModePower {
    pub mode: usize,
    pub n: usize,
    pub m: usize,
    pub b: bool,
}

impl ModePower {
    pub fn new(mode: usize, n: usize, m: usize, b: bool) -> Self {
        ModePower { mode, n, m, b }
    }

    /// `b†^p b^q` on `mode`, or `None` when `p` and `q` differ in parity.
    pub fn from_powers(mode: usize, p: usize, q: usize) -> Option<Self> {
        if p % 2 != q % 2 {
            return None;
        }
        let b = p % 2 == 1;
        Some(ModePower { mode, n: p / 2, m: q / 2, b })
    }
}

const CUTOFF_CAP: usize = 1 << 20;

/// Series evaluator for moments of the exact steady state in the
/// singular-mode basis.
///
/// A moment `⟨Π_j b_j†^{2n_j+b_j} b_j^{2m_j+b_j}⟩` equals
/// `2^{-(S_n+S_m+B)} (-1)^{S_n+S_m} Π_j (2λ_j)^{n_j+m_j+2b_j}(1/2)_{n_j+b_j}(1/2)_{m_j+b_j}
///  / [(δ*)_{S_n+B}(δ)_{S_m+B}] · Σ_l Φ_l / [(δ*+S_n+B)_l (δ+S_m+B)_l]`
/// divided by the norm `Σ_l Φ⁰_l/|(δ)_l|²`, where `Φ` convolves the
/// [`mode_weights`] of the distinguished modes with the remaining classes.
#[derive(Clone, Debug)]
pub struct MomentEngine<'a> {
    spectrum: &'a PairingSpectrum,
    delta: Complex64,
    tol: f64,
    conv: ClassConvolver,
    log_norm: f64,
}

impl<'a> MomentEngine<'a> {
    /// Picks the cutoff from the decay of the norm series.
    pub fn new(spectrum: &'a PairingSpectrum, delta: Complex64, tol: f64) -> Result<Self> {
        let k = select_cutoff(spectrum, delta, tol)?;
        Self::with_cutoff(spectrum, delta, tol, k)
    }

    pub fn with_cutoff(spectrum: &'a PairingSpectrum, delta: Complex64, tol: f64, cutoff: usize) -> Result<Self> {
        check_nonresonant(delta)?;
        let conv = ClassConvolver::new(&spectrum.class_values(), &spectrum.class_sizes(), cutoff);
        let mut engine = MomentEngine { spectrum, delta, tol, conv, log_norm: 0.0 };
        let norm = engine.series(engine.conv.full(), 0, 0)?;
        engine.log_norm = norm.log_mag;
        Ok(engine)
    }

    pub fn cutoff(&self) -> usize {
        self.conv.cutoff()
    }

    pub fn delta(&self) -> Complex64 {
        self.delta
    }

    pub fn spectrum(&self) -> &PairingSpectrum {
        self.spectrum
    }

    /// `ln ⟨Ψ|Ψ⟩` with the vacuum coefficient set to one.
    pub fn log_norm(&self) -> f64 {
        self.log_norm
    }

    /// `Φ_l` of the plain (all-zero) configuration.
    pub fn plain_table(&self) -> &[f64] {
        self.conv.full()
    }

    /// `Σ_l e^{Φ_l} / [(δ* + a)_l (δ + b)_l]`, with a tail check.
    fn series(&self, phi: &[f64], a: usize, b: usize) -> Result<LogComplex> {
        let dc = self.delta.conj() + a as f64;
        let d = self.delta + b as f64;
        let l_safe = (-self.delta.re).max(0.0).ceil() as usize + 1;
        let ln_tol = self.tol.ln();
        let mut sum = LogSum::new();
        let mut den_log = 0.0;
        let mut den_phase = 0.0;
        let mut max_partial = f64::NEG_INFINITY;
        let mut small = 0;
        let mut converged = false;
        for (l, &p) in phi.iter().enumerate() {
            let t = LogComplex::new(p - den_log, -den_phase);
            sum.push(t);
            let part = sum.value().log_mag;
            if part > max_partial {
                max_partial = part;
            }
            if t.is_zero() || t.log_mag < ln_tol + max_partial {
                small += 1;
            } else {
                small = 0;
            }
            if small >= 3 && l >= l_safe {
                converged = true;
            }
            let x = dc + l as f64;
            let y = d + l as f64;
            den_log += x.norm().ln() + y.norm().ln();
            den_phase += x.arg() + y.arg();
        }
        let all_zero_tail = phi.iter().skip(1).all(|&p| p == f64::NEG_INFINITY);
        if !converged && !all_zero_tail {
            return Err(Error::MaxTermsExceeded { max_terms: phi.len() });
        }
        Ok(sum.value())
    }

    /// Normalized moment with the given distinguished modes (distinct modes).
    pub fn moment(&self, powers: &[ModePower]) -> Result<Complex64> {
        let sp = self.spectrum;
        let k = self.cutoff();
        let mut touched: Vec<(usize, usize)> = Vec::new();
        for p in powers {
            let c = sp.class_of[p.mode];
            match touched.iter_mut().find(|(cc, _)| *cc == c) {
                Some(e) => e.1 += 1,
                None => touched.push((c, 1)),
            }
        }
        let mut phi = match touched.len() {
            0 => self.conv.full().to_vec(),
            1 => self.conv.excluding(touched[0].0),
            2 => self.conv.excluding_pair(touched[0].0, touched[1].0),
            _ => {
                let mut acc = unit(k);
                for c in 0..self.conv.n_classes() {
                    if touched.iter().all(|t| t.0 != c) {
                        acc = convolve(&acc, &self.conv.reduced_class(c, 0), k);
                    }
                }
                acc
            }
        };
        for &(c, r) in &touched {
            phi = convolve(&phi, &self.conv.reduced_class(c, r), k);
        }
        self.moment_with_rest(powers, phi)
    }

    /// Moment given the convolution of every non-distinguished mode.
    pub(crate) fn moment_with_rest(&self, powers: &[ModePower], mut phi: Vec<f64>) -> Result<Complex64> {
        let k = self.cutoff();
        let sp = self.spectrum;
        let (mut sn, mut sm, mut nb) = (0usize, 0usize, 0usize);
        let mut pref = LogComplex::ONE;
        for p in powers {
            let lam = sp.lambda[p.mode];
            let bi = p.b as usize;
            sn += p.n;
            sm += p.m;
            nb += bi;
            let e = p.n + p.m + 2 * bi;
            if e > 0 {
                if lam == 0.0 {
                    return Ok(Complex64::new(0.0, 0.0));
                }
                pref = pref.scale_log(e as f64 * (2.0 * lam).ln());
            }
            pref = pref.scale_log(ln_pochhammer_real(0.5, p.n + bi) + ln_pochhammer_real(0.5, p.m + bi));
            phi = convolve(&phi, &mode_weights(lam, p.n, p.m, p.b, k), k);
        }
        let a = sn + nb;
        let b = sm + nb;
        pref = pref.scale_log(-((sn + sm + nb) as f64) * 2f64.ln());
        if (sn + sm) % 2 == 1 {
            pref = -pref;
        }
        pref = pref / pochhammer(self.delta.conj(), a) / pochhammer(self.delta, b);
        let s = self.series(&phi, a, b)?;
        Ok((pref * s).scale_log(-self.log_norm).to_complex())
    }

    /// `⟨Ψ|K₊ⁿ N₊ᵏ K₋ᵐ|Ψ⟩/⟨Ψ|Ψ⟩` on the purification, with `K₋` built from
    /// the nonzero singular values only.
    pub fn collective(&self, n: usize, kpow: u32, m: usize) -> Result<Complex64> {
        let rank = self.spectrum.rank();
        if rank == 0 {
            let v = if n == 0 && m == 0 && kpow == 0 { 1.0 } else { 0.0 };
            return Ok(Complex64::new(v, 0.0));
        }
        let half = rank as f64 / 2.0;
        let phi = self.conv.full();
        let k = self.cutoff();
        if n > k {
            return Err(Error::MaxTermsExceeded { max_terms: k });
        }
        let dc = self.delta.conj() + n as f64;
        let d = self.delta + m as f64;
        let l_safe = (-self.delta.re).max(0.0).ceil() as usize + 1;
        let ln_tol = self.tol.ln();
        let mut sum = LogSum::new();
        let mut acc = crate::specialfn::ln_factorial(n);
        let mut phase = 0.0;
        let mut max_partial = f64::NEG_INFINITY;
        let mut small = 0;
        let mut converged = false;
        for l in 0..=(k - n) {
            let w = if kpow == 0 {
                0.0
            } else if l == 0 {
                f64::NEG_INFINITY
            } else {
                kpow as f64 * (2.0 * l as f64).ln()
            };
            let t = LogComplex::new(acc + phi[n + l] + w, phase);
            sum.push(t);
            let part = sum.value().log_mag;
            max_partial = max_partial.max(part);
            if t.is_zero() || t.log_mag < ln_tol + max_partial {
                small += 1;
            } else {
                small = 0;
            }
            if small >= 3 && l >= l_safe {
                converged = true;
            }
            let lf = l as f64;
            // (N/2+m)_l (n+l)! / [(δ*+n)_l (δ+m)_l (N/2)_l l!]
            acc += (half + m as f64 + lf).ln() + (n as f64 + lf + 1.0).ln()
                - (dc + lf).norm().ln()
                - (d + lf).norm().ln()
                - (half + lf).ln()
                - (lf + 1.0).ln();
            phase -= (dc + lf).arg() + (d + lf).arg();
        }
        if !converged && phi.iter().skip(n + 1).any(|&p| p > f64::NEG_INFINITY) {
            return Err(Error::MaxTermsExceeded { max_terms: k });
        }
        let mut pref = pochhammer(Complex64::new(half, 0.0), m) / pochhammer(self.delta.conj(), n) / pochhammer(self.delta, m);
        if (n + m) % 2 == 1 {
            pref = -pref;
        }
        Ok((pref * sum.value()).scale_log(-self.log_norm).to_complex())
    }
}

fn unit(k: usize) -> Vec<f64> {
    let mut u = vec![f64::NEG_INFINITY; k + 1];
    u[0] = 0.0;
    u
}

/// Smallest table length over which the norm series has converged to `tol`,
/// padded so that shifted moment series converge as well.
pub fn select_cutoff(spectrum: &PairingSpectrum, delta: Complex64, tol: f64) -> Result<usize> {
    check_nonresonant(delta)?;
    if spectrum.lambda_star == 0.0 {
        return Ok(8);
    }
    let n = spectrum.n_modes() as f64;
    let ls = spectrum.lambda_star;
    let past_resonance = (-delta.re).max(0.0).ceil() as usize;
    let mut k = 64usize.max(8 * (ls * ls / n).ceil() as usize).max(2 * past_resonance + 32);
    let vals = spectrum.class_values();
    let sizes = spectrum.class_sizes();
    let ln_tol = tol.ln();
    loop {
        let mut phi = unit(k);
        for (l, s) in vals.iter().zip(&sizes) {
            phi = convolve(&phi, &crate::formfactors::class_weights(*l, *s, k), k);
        }
        let mut sum = f64::NEG_INFINITY;
        let mut den = 0.0;
        let mut small = 0;
        for (l, &p) in phi.iter().enumerate() {
            let t = p - den;
            sum = crate::specialfn::log_add_exp(sum, t);
            small = if t < ln_tol + sum { small + 1 } else { 0 };
            if small >= 3 && l > past_resonance + 1 {
                let padded = (l as f64 * 1.25) as usize + 24;
                return Ok(padded);
            }
            den += 2.0 * (delta + l as f64).norm().ln();
        }
        k *= 2;
        if k > CUTOFF_CAP {
            return Err(Error::MaxTermsExceeded { max_terms: CUTOFF_CAP });
        }
    }
}
