use approx::assert_relative_eq;
use ndarray::Array2;
use num_complex::Complex64;
use proptest::prelude::*;

use super::*;
use crate::model::{Boundary, ModelSpec, PairingSpectrum};
use crate::specialfn::pochhammer;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Purification of two singular modes written out in the Fock basis
/// `|2a, 2b⟩` of the symmetric modes.
struct TwoModeFock {
    lambda: [f64; 2],
    psi: Array2<Complex64>,
}

impl TwoModeFock {
    fn new(l1: f64, l2: f64, delta: Complex64, cut: usize) -> Self {
        let mut psi = Array2::zeros((cut + 1, cut + 1));
        for a in 0..=cut {
            for b in 0..=cut - a {
                let m = a + b;
                let mut mag = 0.0;
                for (p, l) in [(a, l1), (b, l2)] {
                    mag += p as f64 * (l / 2.0).ln() + 0.5 * ln_fact(2 * p) - ln_fact(p);
                }
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                psi[[a, b]] = sign * mag.exp() / pochhammer(delta, m).to_complex();
            }
        }
        TwoModeFock { lambda: [l1, l2], psi }
    }

    fn dot(&self, x: &Array2<Complex64>, y: &Array2<Complex64>) -> Complex64 {
        x.iter().zip(y.iter()).map(|(p, q)| p.conj() * q).sum()
    }

    /// `β_j²` applied to `x`.
    fn lower(&self, x: &Array2<Complex64>, j: usize) -> Array2<Complex64> {
        let n = x.nrows();
        let mut out = Array2::zeros((n, n));
        for a in 0..n {
            for b in 0..n {
                let (p, t) = if j == 0 { (a, (a.wrapping_sub(1), b)) } else { (b, (a, b.wrapping_sub(1))) };
                if p > 0 {
                    let f = ((2 * p) as f64 * (2 * p - 1) as f64).sqrt();
                    out[[t.0, t.1]] += x[[a, b]] * f;
                }
            }
        }
        out
    }

    fn number(&self, x: &Array2<Complex64>, j: usize) -> Array2<Complex64> {
        let mut out = x.clone();
        for ((a, b), v) in out.indexed_iter_mut() {
            *v *= 2.0 * if j == 0 { a } else { b } as f64;
        }
        out
    }

    fn k_minus(&self, x: &Array2<Complex64>) -> Array2<Complex64> {
        self.lower(x, 0) * c(0.5 / self.lambda[0], 0.0) + self.lower(x, 1) * c(0.5 / self.lambda[1], 0.0)
    }

    /// Adjoint of `K₊ = ½ Σ λ_j β_j†²`.
    fn raise_adjoint(&self, x: &Array2<Complex64>) -> Array2<Complex64> {
        self.lower(x, 0) * c(0.5 * self.lambda[0], 0.0) + self.lower(x, 1) * c(0.5 * self.lambda[1], 0.0)
    }

    fn norm(&self) -> f64 {
        self.dot(&self.psi, &self.psi).re
    }

    fn expect(&self, left: &Array2<Complex64>, right: &Array2<Complex64>) -> Complex64 {
        self.dot(left, right) / self.norm()
    }
}

fn ln_fact(n: usize) -> f64 {
    crate::specialfn::ln_factorial(n)
}

fn two_mode_spectrum(l1: f64, l2: f64) -> PairingSpectrum {
    PairingSpectrum::from_parts(Array2::eye(2).mapv(|x| c(x, 0.0)), vec![l1, l2])
}

#[test]
fn coefficients_follow_conventions() {
    let d = c(0.7, -0.3);
    let main = PurificationCoefficients::new(d, Convention::MainText);
    let abs = PurificationCoefficients::new(d, Convention::Absorbed);
    let expected = -1.0 / (d * (d + 1.0) * (d + 2.0));
    assert_relative_eq!(main.coefficient(3).to_complex().re, expected.re, max_relative = 1e-13);
    assert_relative_eq!(abs.coefficient(3).to_complex().im, expected.im / 6.0, max_relative = 1e-13);
    assert_relative_eq!(abs.coefficient(0).to_complex().re, 1.0);
}

#[test]
fn two_mode_moments_match_fock_state() {
    let (l1, l2) = (1.6, 0.7);
    let delta = c(0.8, 0.45);
    let fock = TwoModeFock::new(l1, l2, delta, 70);
    let sp = two_mode_spectrum(l1, l2);
    let mm = mode_moments(&sp, delta, 1e-13, true).unwrap();
    let q = mm.quartic.as_ref().unwrap();
    let psi = &fock.psi;
    assert_relative_eq!(mm.log_norm, fock.norm().ln(), epsilon = 1e-12);
    for j in 0..2 {
        let occ = fock.expect(psi, &fock.number(psi, j)).re / 2.0;
        assert_relative_eq!(mm.occupation[j], occ, max_relative = 1e-11);
        let pair = fock.expect(psi, &fock.lower(psi, j)) / 2.0;
        assert_relative_eq!(mm.pair[j].re, pair.re, max_relative = 1e-11);
        assert_relative_eq!(mm.pair[j].im, pair.im, max_relative = 1e-11);
        let lo = fock.lower(psi, j);
        let same = fock.expect(&lo, &lo).re / 4.0;
        assert_relative_eq!(q.same_mode[j], same, max_relative = 1e-11);
    }
    let transfer = fock.expect(&fock.lower(psi, 0), &fock.lower(psi, 1)).re / 4.0;
    assert_relative_eq!(q.pair_transfer[[0, 1]], transfer, max_relative = 1e-11);
    let nn = fock.expect(psi, &fock.number(&fock.number(psi, 0), 1)).re / 4.0;
    assert_relative_eq!(q.density[[0, 1]], nn, max_relative = 1e-11);
}

#[test]
fn two_mode_collective_matches_fock_state() {
    let (l1, l2) = (1.3, 0.5);
    let delta = c(-0.6, 0.8);
    let fock = TwoModeFock::new(l1, l2, delta, 70);
    let sp = two_mode_spectrum(l1, l2);
    let psi = &fock.psi;
    let km = fock.k_minus(psi);
    let kp = fock.raise_adjoint(psi);
    let total = fock.number(psi, 0) + fock.number(psi, 1);
    let cases = [
        ((0, 0, 1), fock.expect(psi, &km)),
        ((1, 0, 1), fock.expect(&kp, &km)),
        ((0, 1, 0), fock.expect(psi, &total)),
        ((0, 0, 2), fock.expect(psi, &fock.k_minus(&km))),
        ((1, 1, 1), fock.expect(&kp, &(fock.number(&km, 0) + fock.number(&km, 1)))),
    ];
    for ((n, k, m), want) in cases {
        let got = collective_moment_general(n, k, m, &sp, delta, 1e-13).unwrap();
        assert!((got - want).norm() <= 1e-10 * want.norm().max(1.0), "({n},{k},{m}): {got} vs {want}");
    }
}

#[test]
fn general_engine_reproduces_unitary_closed_forms() {
    let delta = c(1.3, -0.4);
    for &(n_modes, lam) in &[(1usize, 0.9), (3, 2.1), (4, 3.5)] {
        let sp = PairingSpectrum::uniform(n_modes, lam);
        let engine = MomentEngine::new(&sp, delta, 1e-14).unwrap();
        let opts = SeriesOptions { tol: 1e-14, ..SeriesOptions::default() };
        assert_relative_eq!(engine.log_norm(), log_norm_unitary(lam, n_modes, delta, opts).unwrap(), epsilon = 1e-11);
        for n in 0..=3 {
            for k in 0..=2u32 {
                for m in 0..=3 {
                    let g = engine.collective(n, k, m).unwrap();
                    let u = collective_moment_unitary(n, k, m, lam, n_modes, delta, opts).unwrap();
                    assert!((g - u).norm() <= 1e-9 * u.norm().max(1e-300), "N={n_modes} ({n},{k},{m}): {g} vs {u}");
                }
            }
        }
        let general = general_mode_moments(&engine, n_modes > 1).unwrap();
        let closed = unitary_mode_moments(lam, n_modes, delta, opts).unwrap();
        assert_relative_eq!(general.occupation[0], closed.occupation, max_relative = 1e-10);
        assert_relative_eq!(general.pair[0].re, closed.pair.re, max_relative = 1e-10);
        if let Some(q) = general.quartic {
            assert_relative_eq!(q.same_mode[0], closed.same_mode, max_relative = 1e-10);
            assert_relative_eq!(q.pair_transfer[[0, 0]], closed.pair_transfer, max_relative = 1e-9, epsilon = 1e-12);
            assert_relative_eq!(q.density[[0, 0]], closed.density, max_relative = 1e-10);
        }
    }
}

#[test]
fn pair_lowering_g2_matches_collective_moments() {
    let n = 4;
    let spec = ModelSpec::uniform(n, 1.0, 0.4, 0.3, c(0.9, 0.2));
    let sp = spec.spectrum().unwrap();
    let delta = spec.derived().reduced_detuning;
    let obs = correlators(&spec, &sp, &CorrelatorOptions::default()).unwrap();
    let opts = SeriesOptions::default();
    let lam = sp.lambda_star;
    let kk = collective_moment_unitary(1, 0, 1, lam, n, delta, opts).unwrap().re / (lam * lam);
    let km = collective_moment_unitary(0, 0, 1, lam, n, delta, opts).unwrap();
    assert_relative_eq!(obs.g2_k.unwrap(), kk / km.norm_sqr() - 1.0, max_relative = 1e-9);
}

#[test]
fn pair_lowering_g2_vanishes_at_pcs_point() {
    let n = 6;
    let mut spec = ModelSpec::uniform(n, 1.0, 0.0, 1e-9, c(1.0, 0.0));
    spec.detuning = spec.pcs_detuning();
    let sp = spec.spectrum().unwrap();
    let obs = correlators(&spec, &sp, &CorrelatorOptions::default()).unwrap();
    assert!(obs.g2_k.unwrap().abs() < 1e-6);
}

#[test]
fn parity_violating_moment_is_zero() {
    let sp = two_mode_spectrum(1.0, 0.5);
    let z = normal_moment(&[1, 0], &[0, 0], &sp, c(1.2, 0.1), 1e-12).unwrap();
    assert_eq!(z, c(0.0, 0.0));
    let n = normal_moment(&[1, 0], &[1, 0], &sp, c(1.2, 0.1), 1e-12).unwrap();
    let mm = mode_moments(&sp, c(1.2, 0.1), 1e-12, false).unwrap();
    assert_relative_eq!(n.re, mm.occupation[0], max_relative = 1e-11);
}

#[test]
fn local_moment_matches_normal_moment() {
    let sp = two_mode_spectrum(1.4, 0.9);
    let d = c(0.5, 0.7);
    let a = local_moment_general(&[1, 0], &[0, 1], &[false, true], &sp, d, 1e-12).unwrap();
    let b = normal_moment(&[2, 1], &[0, 3], &sp, d, 1e-12).unwrap();
    assert!((a - b).norm() < 1e-14 * a.norm().max(1.0));
}

#[test]
fn pcs_residual_vanishes_only_at_special_detuning() {
    for n in [2usize, 3, 5] {
        let sp = PairingSpectrum::uniform(n, 2.0);
        let at = pcs_residual(&sp, c(n as f64 / 2.0, 0.0), 200).unwrap();
        assert!(at < 1e-12, "N={n}: {at}");
        let off = pcs_residual(&sp, c(n as f64 / 2.0 + 0.5, 0.0), 200).unwrap();
        assert!(off > 1e-3, "N={n}: {off}");
    }
}

#[test]
fn vacuum_when_drive_vanishes() {
    let spec = ModelSpec::uniform(3, 1.0, 0.2, 1.0, c(0.0, 0.0));
    let sp = spec.spectrum().unwrap();
    let obs = correlators(&spec, &sp, &CorrelatorOptions::default()).unwrap();
    assert_eq!(obs.nbar, 0.0);
    assert!(obs.g2_k.is_none());
}

fn small_lattice() -> (ModelSpec, PairingSpectrum) {
    let spec = ModelSpec::lattice(&[6], Boundary::Periodic, 1.0, 0.3, 1.0, c(0.8, 0.0), c(0.5, 0.2));
    let sp = spec.spectrum().unwrap();
    (spec, sp)
}

#[test]
fn correlators_are_hermitian_and_symmetric() {
    let (spec, sp) = small_lattice();
    let mm = mode_moments(&sp, spec.derived().reduced_detuning, 1e-12, true).unwrap();
    let asm = Assembler::new(&sp, &mm);
    for i in 0..6 {
        for j in 0..6 {
            let x = asm.one_particle(i, j);
            let y = asm.one_particle(j, i);
            assert!((x - y.conj()).norm() < 1e-12);
            assert!((asm.pairing(i, j) - asm.pairing(j, i)).norm() < 1e-12);
            let dd = asm.density_density(i, j).unwrap() - asm.density_density(j, i).unwrap();
            assert!(dd.abs() < 1e-10);
        }
    }
}

#[test]
fn periodic_lattice_is_translation_invariant() {
    let (spec, sp) = small_lattice();
    let obs = correlators(&spec, &sp, &CorrelatorOptions::default()).unwrap();
    let spread = obs.site_density.iter().map(|d| (d - obs.nbar).abs()).fold(0.0, f64::max);
    assert!(spread < 1e-10 * obs.nbar);
    assert_eq!(obs.displacements, vec![0, 1, 2, 3]);
    assert!(!obs.finite_size_caveat);
    assert_relative_eq!(obs.one_particle[0].re, obs.nbar, max_relative = 1e-12);
    let g2 = obs.g2.as_ref().unwrap();
    let g2s = obs.g2_site.as_ref().unwrap();
    for (a, b) in g2.iter().zip(g2s) {
        assert_relative_eq!(*a, *b, epsilon = 1e-9);
    }
}

#[test]
fn pairing_fraction_and_cross_correlation() {
    let spec = ModelSpec::uniform(3, 1.0, 0.0, 1.0, c(1.0, 0.0));
    let sp = spec.spectrum().unwrap();
    let mm = mode_moments(&sp, spec.derived().reduced_detuning, 1e-12, true).unwrap();
    assert_relative_eq!(max_pairing_fraction(&sp, &mm).unwrap(), 1.0);
    let x = max_pairing_cross_correlation(&sp, &mm).unwrap();
    assert!(x.is_finite());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn moments_physical(l1 in 0.1f64..3.0, ratio in 0.1f64..0.95, dre in -2.5f64..3.0, dim in 0.2f64..2.0) {
        let delta = c(dre, dim);
        let sp = two_mode_spectrum(l1, l1 * ratio);
        let mm = mode_moments(&sp, delta, 1e-12, true).unwrap();
        let q = mm.quartic.unwrap();
        for j in 0..2 {
            prop_assert!(mm.occupation[j] >= 0.0);
            // Cauchy-Schwarz on the pair amplitude.
            prop_assert!(mm.pair[j].norm_sqr() <= mm.occupation[j] * (mm.occupation[j] + 1.0) * (1.0 + 1e-9));
            prop_assert!(q.same_mode[j] >= -1e-12);
        }
        prop_assert!(q.density[[0, 1]] >= -1e-12);
        prop_assert!(mm.occupation[0] >= mm.occupation[1] * (1.0 - 1e-9));
    }
}
