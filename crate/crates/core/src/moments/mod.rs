//! Steady-state expectation values.
//!
//! The purification of the steady state is
//! `|Ψ⟩ = Σ_m (-1)^m / (m! (δ)_m) K₊^m |0⟩` with
//! `K₊ = ½ Σ_j λ_j β_j†²` on the symmetric purification modes `β`, whose
//! antisymmetric partners stay in vacuum. Physical normally ordered moments of
//! the singular modes `b = V† a` equal the `β` moments times `2^{-1/2}` per
//! operator, and physical-site correlators follow by re-expansion through the
//! Takagi factor `V`:
//!
//! * `⟨a_i† a_j⟩ = Σ_k V*_ik V_jk ⟨b_k† b_k⟩`
//! * `⟨a_i a_j⟩ = Σ_k V_ik V_jk ⟨b_k²⟩`
//!
//! Per-mode parity makes every other quadratic `b` moment vanish.

mod engine;
mod unitary;

use ndarray::Array2;
use num_complex::Complex64;

use crate::formfactors::ClassConvolver;
use crate::model::{check_nonresonant, Lattice, ModelSpec, PairingSpectrum};
use crate::specialfn::{ln_factorial, LogComplex, LogSum, SeriesOptions};
use crate::{Error, Result};

pub use engine::{select_cutoff, ModePower, MomentEngine};
pub use unitary::{collective_moment_unitary, log_norm_unitary, unitary_mode_moments, UnitaryModeMoments};

/// How the `1/m!` of the pair expansion is book-kept.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Convention {
    /// `|Ψ⟩ = Σ_m (c_m/m!) K₊^m |0⟩` with `c_m = (-1)^m/(δ)_m`.
    MainText,
    /// `|Ψ⟩ = Σ_m c_m K₊^m |0⟩` with `c_m = (-1)^m/(m!(δ)_m)`.
    Absorbed,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PurificationCoefficients {
    pub delta: Complex64,
    pub convention: Convention,
}

impl PurificationCoefficients {
    pub fn new(delta: Complex64, convention: Convention) -> Self {
        PurificationCoefficients { delta, convention }
    }

    pub fn coefficient(&self, m: usize) -> LogComplex {
        let mut c = crate::specialfn::pochhammer(self.delta, m).recip();
        if m % 2 == 1 {
            c = -c;
        }
        match self.convention {
            Convention::MainText => c,
            Convention::Absorbed => c.scale_log(-ln_factorial(m)),
        }
    }
}

/// Physical normally ordered moments of the singular modes, one entry per
/// degeneracy class.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeMoments {
    /// `⟨b†b⟩`.
    pub occupation: Vec<f64>,
    /// `⟨b²⟩`.
    pub pair: Vec<Complex64>,
    pub quartic: Option<QuarticMoments>,
    /// `ln ⟨Ψ|Ψ⟩`.
    pub log_norm: f64,
    /// Series cutoff used, zero for closed forms.
    pub cutoff: usize,
}

/// Quartic singular-mode moments indexed by class.
#[derive(Clone, Debug, PartialEq)]
pub struct QuarticMoments {
    /// `⟨b†² b²⟩` on one mode.
    pub same_mode: Vec<f64>,
    /// `⟨b_j†² b_j'²⟩` for distinct modes in classes `(c, c')`.
    pub pair_transfer: Array2<f64>,
    /// `⟨b_j† b_j'† b_j b_j'⟩` for distinct modes in classes `(c, c')`.
    pub density: Array2<f64>,
}

fn vacuum_moments(classes: usize, quartic: bool) -> ModeMoments {
    ModeMoments {
        occupation: vec![0.0; classes],
        pair: vec![Complex64::new(0.0, 0.0); classes],
        quartic: quartic.then(|| QuarticMoments {
            same_mode: vec![0.0; classes],
            pair_transfer: Array2::zeros((classes, classes)),
            density: Array2::zeros((classes, classes)),
        }),
        log_norm: 0.0,
        cutoff: 0,
    }
}

/// Computes singular-mode moments; closed forms when the spectrum is
/// degenerate, class-grouped form-factor series otherwise.
pub fn mode_moments(spectrum: &PairingSpectrum, delta: Complex64, tol: f64, quartic: bool) -> Result<ModeMoments> {
    check_nonresonant(delta)?;
    let nc = spectrum.classes.len();
    if spectrum.lambda_star == 0.0 {
        return Ok(vacuum_moments(nc, quartic));
    }
    if spectrum.is_unitary() {
        let opts = SeriesOptions { tol, ..SeriesOptions::default() };
        let u = unitary_mode_moments(spectrum.lambda_star, spectrum.n_modes(), delta, opts)?;
        return Ok(ModeMoments {
            occupation: vec![u.occupation],
            pair: vec![u.pair],
            quartic: quartic.then(|| QuarticMoments {
                same_mode: vec![u.same_mode],
                pair_transfer: Array2::from_elem((1, 1), u.pair_transfer),
                density: Array2::from_elem((1, 1), u.density),
            }),
            log_norm: u.log_norm,
            cutoff: 0,
        });
    }
    let mut k = select_cutoff(spectrum, delta, tol)?;
    for _ in 0..4 {
        let engine = MomentEngine::with_cutoff(spectrum, delta, tol, k)?;
        match general_mode_moments(&engine, quartic) {
            Err(Error::MaxTermsExceeded { .. }) => k *= 2,
            other => return other,
        }
    }
    Err(Error::MaxTermsExceeded { max_terms: k })
}

fn general_mode_moments(engine: &MomentEngine<'_>, quartic: bool) -> Result<ModeMoments> {
    let sp = engine.spectrum();
    let nc = sp.classes.len();
    let mut occupation = Vec::with_capacity(nc);
    let mut pair = Vec::with_capacity(nc);
    for cls in &sp.classes {
        let j = cls[0];
        occupation.push(engine.moment(&[ModePower::new(j, 0, 0, true)])?.re);
        pair.push(engine.moment(&[ModePower::new(j, 0, 1, false)])?);
    }
    let quartic = if quartic { Some(general_quartic(engine)?) } else { None };
    Ok(ModeMoments { occupation, pair, quartic, log_norm: engine.log_norm(), cutoff: engine.cutoff() })
}

fn general_quartic(engine: &MomentEngine<'_>) -> Result<QuarticMoments> {
    let sp = engine.spectrum();
    let nc = sp.classes.len();
    let k = engine.cutoff();
    let conv = ClassConvolver::new(&sp.class_values(), &sp.class_sizes(), k);
    let mut same_mode = Vec::with_capacity(nc);
    let mut pair_transfer = Array2::from_elem((nc, nc), f64::NAN);
    let mut density = Array2::from_elem((nc, nc), f64::NAN);
    for c in 0..nc {
        let j = sp.classes[c][0];
        same_mode.push(engine.moment(&[ModePower::new(j, 1, 1, false)])?.re);
    }
    for c1 in 0..nc {
        for c2 in c1..nc {
            let (j1, j2, rest) = if c1 == c2 {
                if sp.classes[c1].len() < 2 {
                    continue;
                }
                let r = crate::formfactors::convolve(&conv.excluding(c1), &conv.reduced_class(c1, 2), k);
                (sp.classes[c1][0], sp.classes[c1][1], r)
            } else {
                let r = crate::formfactors::convolve(&conv.excluding_pair(c1, c2), &conv.reduced_class(c1, 1), k);
                let r = crate::formfactors::convolve(&r, &conv.reduced_class(c2, 1), k);
                (sp.classes[c1][0], sp.classes[c2][0], r)
            };
            let p = engine
                .moment_with_rest(&[ModePower::new(j1, 1, 0, false), ModePower::new(j2, 0, 1, false)], rest.clone())?
                .re;
            let d = engine.moment_with_rest(&[ModePower::new(j1, 0, 0, true), ModePower::new(j2, 0, 0, true)], rest)?.re;
            pair_transfer[[c1, c2]] = p;
            pair_transfer[[c2, c1]] = p;
            density[[c1, c2]] = d;
            density[[c2, c1]] = d;
        }
    }
    Ok(QuarticMoments { same_mode, pair_transfer, density })
}

/// `⟨Ψ|K₊ⁿ N₊ᵏ K₋ᵐ|Ψ⟩/⟨Ψ|Ψ⟩` from the form-factor series, growing the cutoff
/// until the tail criterion holds.
pub fn collective_moment_general(
    n: usize,
    k: u32,
    m: usize,
    spectrum: &PairingSpectrum,
    delta: Complex64,
    tol: f64,
) -> Result<Complex64> {
    let mut cut = select_cutoff(spectrum, delta, tol)? + n;
    for _ in 0..6 {
        let engine = MomentEngine::with_cutoff(spectrum, delta, tol, cut)?;
        match engine.collective(n, k, m) {
            Err(Error::MaxTermsExceeded { .. }) => cut *= 2,
            other => return other,
        }
    }
    Err(Error::MaxTermsExceeded { max_terms: cut })
}

/// Normalized `⟨Π_j b_j†^{2n_j+b_j} b_j^{2m_j+b_j}⟩` in the singular-mode basis.
pub fn local_moment_general(
    n_vec: &[usize],
    m_vec: &[usize],
    b_vec: &[bool],
    spectrum: &PairingSpectrum,
    delta: Complex64,
    tol: f64,
) -> Result<Complex64> {
    let nm = spectrum.n_modes();
    if n_vec.len() != nm || m_vec.len() != nm || b_vec.len() != nm {
        return Err(Error::InvalidArgument("exponent vectors must have one entry per mode".into()));
    }
    let powers: Vec<ModePower> = (0..nm)
        .filter(|&j| n_vec[j] > 0 || m_vec[j] > 0 || b_vec[j])
        .map(|j| ModePower::new(j, n_vec[j], m_vec[j], b_vec[j]))
        .collect();
    moment_with_retry(spectrum, delta, tol, &powers)
}

/// Normalized `⟨Π_j b_j†^{p_j} b_j^{q_j}⟩`; exactly zero when any `p_j - q_j` is odd.
pub fn normal_moment(p_vec: &[usize], q_vec: &[usize], spectrum: &PairingSpectrum, delta: Complex64, tol: f64) -> Result<Complex64> {
    if p_vec.len() != spectrum.n_modes() || q_vec.len() != spectrum.n_modes() {
        return Err(Error::InvalidArgument("power vectors must have one entry per mode".into()));
    }
    let mut powers = Vec::new();
    for (j, (&p, &q)) in p_vec.iter().zip(q_vec).enumerate() {
        match ModePower::from_powers(j, p, q) {
            None => return Ok(Complex64::new(0.0, 0.0)),
            Some(mp) if p + q > 0 => powers.push(mp),
            Some(_) => {}
        }
    }
    moment_with_retry(spectrum, delta, tol, &powers)
}

fn moment_with_retry(spectrum: &PairingSpectrum, delta: Complex64, tol: f64, powers: &[ModePower]) -> Result<Complex64> {
    let extra: usize = powers.iter().map(|p| p.n + p.m + 2).sum();
    let mut cut = select_cutoff(spectrum, delta, tol)? + extra;
    for _ in 0..6 {
        let engine = MomentEngine::with_cutoff(spectrum, delta, tol, cut)?;
        match engine.moment(powers) {
            Err(Error::MaxTermsExceeded { .. }) => cut *= 2,
            other => return other,
        }
    }
    Err(Error::MaxTermsExceeded { max_terms: cut })
}

/// Physical-site correlators assembled from singular-mode moments.
#[derive(Clone, Debug)]
pub struct Assembler<'a> {
    spectrum: &'a PairingSpectrum,
    moments: &'a ModeMoments,
    support: Vec<Vec<usize>>,
}

impl<'a> Assembler<'a> {
    pub fn new(spectrum: &'a PairingSpectrum, moments: &'a ModeMoments) -> Self {
        let n = spectrum.n_modes();
        let scale = spectrum.v.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let support =
            (0..n).map(|i| (0..n).filter(|&k| spectrum.v[[i, k]].norm() > 1e-15 * scale).collect()).collect();
        Assembler { spectrum, moments, support }
    }

    fn occ(&self, k: usize) -> f64 {
        self.moments.occupation[self.spectrum.class_of[k]]
    }

    /// `⟨a_i† a_j⟩`.
    pub fn one_particle(&self, i: usize, j: usize) -> Complex64 {
        let v = &self.spectrum.v;
        self.support[i].iter().map(|&k| v[[i, k]].conj() * v[[j, k]] * self.occ(k)).sum()
    }

    /// `⟨a_i a_j⟩`.
    pub fn pairing(&self, i: usize, j: usize) -> Complex64 {
        let v = &self.spectrum.v;
        let cl = &self.spectrum.class_of;
        self.support[i].iter().map(|&k| v[[i, k]] * v[[j, k]] * self.moments.pair[cl[k]]).sum()
    }

    /// `⟨a_i† a_j† a_i a_j⟩` (for `i = j` this is `⟨a_i†² a_i²⟩`).
    pub fn normal_density(&self, i: usize, j: usize) -> Result<f64> {
        let q = self
            .moments
            .quartic
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("quartic moments were not computed".into()))?;
        let v = &self.spectrum.v;
        let cl = &self.spectrum.class_of;
        let mut s: Vec<usize> = self.support[i].iter().chain(&self.support[j]).copied().collect();
        s.sort_unstable();
        s.dedup();
        let x: Vec<Complex64> = s.iter().map(|&k| v[[i, k]] * v[[j, k]]).collect();
        let mut total = 0.0;
        for (a, &k) in s.iter().enumerate() {
            for (b, &kp) in s.iter().enumerate() {
                let (ck, ckp) = (cl[k], cl[kp]);
                if a == b {
                    total += x[a].norm_sqr() * q.same_mode[ck];
                } else {
                    total += (x[a].conj() * x[b]).re * q.pair_transfer[[ck, ckp]];
                    let w = v[[i, k]] * v[[j, kp]] + v[[i, kp]] * v[[j, k]];
                    total += 0.5 * w.norm_sqr() * q.density[[ck, ckp]];
                }
            }
        }
        Ok(total)
    }

    /// `⟨n_i n_j⟩`.
    pub fn density_density(&self, i: usize, j: usize) -> Result<f64> {
        let d = self.normal_density(i, j)?;
        Ok(if i == j { d + self.one_particle(i, i).re } else { d })
    }
}

/// Observables of one steady state.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservableSet {
    /// Site-averaged density.
    pub nbar: f64,
    pub site_density: Vec<f64>,
    pub displacements: Vec<usize>,
    /// Site-averaged `⟨a_i† a_{i+r}⟩` per displacement.
    pub one_particle: Vec<Complex64>,
    /// Site-averaged `⟨a_i a_{i+r}⟩` per displacement.
    pub pairing: Vec<Complex64>,
    /// `(⟨n_i n_{i+r}⟩ - n̄²)/n̄²`, site-averaged.
    pub g2: Option<Vec<f64>>,
    /// Same with the exact densities `⟨n_i⟩⟨n_{i+r}⟩` in place of `n̄²`.
    pub g2_site: Option<Vec<f64>>,
    /// Pair-lowering `g2` from `k₋ = ½ Σ (uM⁻¹)_ij a_i a_j`; absent when `M` is singular
    /// or quartic moments were skipped.
    pub g2_k: Option<f64>,
    pub g2_phi: Option<f64>,
    pub log_norm: f64,
    /// Set when the largest displacement is short of half the lattice extent
    /// or the lattice has open boundaries, so `g2` cannot show the plateau.
    pub finite_size_caveat: bool,
    pub cutoff: usize,
}

impl ObservableSet {
    pub fn norm(&self) -> f64 {
        self.log_norm.exp()
    }

    /// `g2` at the largest available displacement.
    pub fn g2_far(&self) -> Option<f64> {
        self.g2.as_ref().and_then(|g| g.last().copied())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CorrelatorOptions {
    pub displacements: Option<Vec<usize>>,
    pub quartic: bool,
    pub tol: f64,
}

impl Default for CorrelatorOptions {
    fn default() -> Self {
        CorrelatorOptions { displacements: None, quartic: true, tol: 1e-12 }
    }
}

/// Extent along which displacements are taken.
fn axis_extent(spec: &ModelSpec) -> usize {
    spec.dims.first().copied().unwrap_or(spec.n_modes)
}

/// Default displacements `0..=L/2` along the first axis.
pub fn default_displacements(spec: &ModelSpec) -> Vec<usize> {
    (0..=axis_extent(spec) / 2).collect()
}

/// Pairs `(i, i+r)` used to average a displacement-`r` correlator.
pub(crate) fn displaced_pairs(spec: &ModelSpec, r: usize) -> Vec<(usize, usize)> {
    let n = spec.n_modes;
    if spec.dims.is_empty() {
        return (0..n).map(|i| (i, (i + r) % n)).collect();
    }
    let lat = Lattice::new(&spec.dims, spec.boundary);
    (0..n).filter_map(|i| lat.shift(i, 0, r as isize).map(|j| (i, j))).collect()
}

/// Full steady-state observable set.
pub fn correlators(spec: &ModelSpec, spectrum: &PairingSpectrum, opts: &CorrelatorOptions) -> Result<ObservableSet> {
    let delta = spec.derived().reduced_detuning;
    let mm = mode_moments(spectrum, delta, opts.tol, opts.quartic)?;
    observables_from_moments(spec, spectrum, &mm, opts)
}

pub fn observables_from_moments(
    spec: &ModelSpec,
    spectrum: &PairingSpectrum,
    mm: &ModeMoments,
    opts: &CorrelatorOptions,
) -> Result<ObservableSet> {
    let n = spec.n_modes;
    let asm = Assembler::new(spectrum, mm);
    let site_density: Vec<f64> = (0..n).map(|i| asm.one_particle(i, i).re).collect();
    let nbar = site_density.iter().sum::<f64>() / n as f64;
    let displacements = opts.displacements.clone().unwrap_or_else(|| default_displacements(spec));
    let mut one_particle = Vec::with_capacity(displacements.len());
    let mut pairing = Vec::with_capacity(displacements.len());
    let mut g2 = opts.quartic.then(Vec::new);
    let mut g2_site = opts.quartic.then(Vec::new);
    for &r in &displacements {
        let pairs = displaced_pairs(spec, r);
        let cnt = pairs.len().max(1) as f64;
        one_particle.push(pairs.iter().map(|&(i, j)| asm.one_particle(i, j)).sum::<Complex64>() / cnt);
        pairing.push(pairs.iter().map(|&(i, j)| asm.pairing(i, j)).sum::<Complex64>() / cnt);
        if let (Some(g), Some(gs)) = (g2.as_mut(), g2_site.as_mut()) {
            let mut avg = 0.0;
            let mut avg_site = 0.0;
            for &(i, j) in &pairs {
                let nn = asm.density_density(i, j)?;
                avg += nn;
                avg_site += (nn - site_density[i] * site_density[j]) / (site_density[i] * site_density[j]);
            }
            g.push((avg / cnt - nbar * nbar) / (nbar * nbar));
            gs.push(avg_site / cnt);
        }
    }

    let g2_k = if spectrum.rank() == n && spectrum.lambda_star > 0.0 { pair_lowering_g2(spectrum, mm) } else { None };

    let g2_phi = if opts.quartic && nbar > 0.0 {
        let mut acc = 0.0;
        for i in 0..n {
            let phi = asm.pairing(i, i).norm_sqr();
            acc += (asm.normal_density(i, i)? - phi) / phi;
        }
        Some(acc / n as f64)
    } else {
        None
    };

    let finite_size_caveat = spec.boundary == crate::model::Boundary::Open
        || displacements.iter().max().copied().unwrap_or(0) < axis_extent(spec) / 2;
    Ok(ObservableSet {
        nbar,
        site_density,
        displacements,
        one_particle,
        pairing,
        g2,
        g2_site,
        g2_k,
        g2_phi,
        log_norm: mm.log_norm,
        finite_size_caveat,
        cutoff: mm.cutoff,
    })
}

/// `⟨k₋†k₋⟩/|⟨k₋⟩|² - 1` with `k₋ = ½ Σ (uM⁻¹)_ij a_i a_j = ½ Σ_j b_j²/λ_j`.
fn pair_lowering_g2(spectrum: &PairingSpectrum, mm: &ModeMoments) -> Option<f64> {
    let q = mm.quartic.as_ref()?;
    let sizes = spectrum.class_sizes();
    let lam = spectrum.class_values();
    let mean: Complex64 = (0..lam.len()).map(|c| mm.pair[c] * (sizes[c] as f64 / lam[c])).sum();
    let mut second = 0.0;
    for c1 in 0..lam.len() {
        second += sizes[c1] as f64 * q.same_mode[c1] / (lam[c1] * lam[c1]);
        for c2 in 0..lam.len() {
            let pairs = if c1 == c2 { sizes[c1] * (sizes[c1] - 1) } else { sizes[c1] * sizes[c2] };
            if pairs > 0 {
                second += pairs as f64 * q.pair_transfer[[c1, c2]] / (lam[c1] * lam[c2]);
            }
        }
    }
    Some(second / mean.norm_sqr() - 1.0)
}

/// Fraction of photons in the max-pairing class.
pub fn max_pairing_fraction(spectrum: &PairingSpectrum, mm: &ModeMoments) -> Result<f64> {
    let sizes = spectrum.class_sizes();
    let total: f64 = mm.occupation.iter().zip(&sizes).map(|(o, &s)| o * s as f64).sum();
    if !(total > 0.0) {
        return Err(Error::InvalidArgument("total occupation is zero".into()));
    }
    Ok(mm.occupation[0] * sizes[0] as f64 / total)
}

/// `⟨n_j n_j'⟩/(⟨n_j⟩⟨n_j'⟩) - 1` for two distinct max-pairing modes.
pub fn max_pairing_cross_correlation(spectrum: &PairingSpectrum, mm: &ModeMoments) -> Result<f64> {
    if spectrum.multiplicity < 2 {
        return Err(Error::InvalidArgument("max-pairing class has a single mode".into()));
    }
    let q = mm.quartic.as_ref().ok_or_else(|| Error::InvalidArgument("quartic moments were not computed".into()))?;
    let n0 = mm.occupation[0];
    Ok(q.density[[0, 0]] / (n0 * n0) - 1.0)
}

/// `‖(K₋ + 1)|Ψ⟩‖ / ‖Ψ‖` with `|Ψ⟩` truncated after `cutoff` pairs,
/// using `K₋ K₊^m |0⟩ = m(N/2 + m - 1) K₊^{m-1} |0⟩` and
/// `‖K₊^m|0⟩‖² = (m!)² Φ_m`.
pub fn pcs_residual(spectrum: &PairingSpectrum, delta: Complex64, cutoff: usize) -> Result<f64> {
    check_nonresonant(delta)?;
    let half = spectrum.rank() as f64 / 2.0;
    let conv = ClassConvolver::new(&spectrum.class_values(), &spectrum.class_sizes(), cutoff);
    let phi = conv.full();
    let coeff = PurificationCoefficients::new(delta, Convention::Absorbed);
    let c: Vec<LogComplex> = (0..=cutoff).map(|m| coeff.coefficient(m)).collect();
    let mut norm = LogSum::new();
    let mut res = LogSum::new();
    for m in 0..=cutoff {
        let w = 2.0 * ln_factorial(m) + phi[m];
        norm.push(LogComplex::from_log(2.0 * c[m].log_mag + w));
        let e = if m < cutoff {
            let lowered = c[m + 1].scale_log(((m + 1) as f64).ln() + (half + m as f64).ln());
            lowered + c[m]
        } else {
            c[m]
        };
        if !e.is_zero() {
            res.push(LogComplex::from_log(2.0 * e.log_mag + w));
        }
    }
    let r = res.value();
    if r.is_zero() {
        return Ok(0.0);
    }
    Ok((0.5 * (r.log_mag - norm.value().log_mag)).exp())
}

#[cfg(test)]
mod tests;
