use std::f64::consts::PI;

use num_complex::Complex64;

use super::LogComplex;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Principal-ish `ln Γ(z)` for complex `z`. The imaginary part is only meaningful
/// modulo 2π, which is all the callers need.
pub fn ln_gamma(z: Complex64) -> Complex64 {
    if z.re < 0.5 {
        // reflection: Γ(z)Γ(1-z) = π / sin(πz)
        return Complex64::new(PI.ln(), 0.0) - ln_sin_pi(z) - ln_gamma(Complex64::new(1.0, 0.0) - z);
    }
    let z = z - 1.0;
    let mut x = Complex64::new(LANCZOS[0], 0.0);
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        x += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    (z + 0.5) * t.ln() - t + x.ln() + HALF_LN_2PI
}

/// `ln sin(πz)` without overflow for large `|Im z|`.
fn ln_sin_pi(z: Complex64) -> Complex64 {
    let w = z * PI;
    let i = Complex64::new(0.0, 1.0);
    if w.im > 20.0 {
        -i * w + (i * 0.5).ln() + (Complex64::new(1.0, 0.0) - (2.0 * i * w).exp()).ln()
    } else if w.im < -20.0 {
        i * w + (-i * 0.5).ln() + (Complex64::new(1.0, 0.0) - (-2.0 * i * w).exp()).ln()
    } else {
        w.sin().ln()
    }
}

/// `ln n!` for real non-negative `n`.
pub fn ln_factorial(n: usize) -> f64 {
    if n < 2 {
        return 0.0;
    }
    if n <= 32 {
        return (2..=n).map(|i| (i as f64).ln()).sum();
    }
    ln_gamma(Complex64::new(n as f64 + 1.0, 0.0)).re
}

fn nonpositive_integer(a: Complex64) -> Option<usize> {
    if a.im == 0.0 && a.re <= 0.0 && a.re == a.re.round() {
        Some((-a.re) as usize)
    } else {
        None
    }
}

/// Rising factorial `(a)_m = a(a+1)···(a+m-1)`.
pub fn pochhammer(a: Complex64, m: usize) -> LogComplex {
    if m == 0 {
        return LogComplex::ONE;
    }
    if let Some(k) = nonpositive_integer(a) {
        if m > k {
            return LogComplex::ZERO;
        }
        return pochhammer_direct(a, m);
    }
    if m <= 32 {
        return pochhammer_direct(a, m);
    }
    let d = ln_gamma(a + m as f64) - ln_gamma(a);
    LogComplex::new(d.re, d.im)
}

pub(crate) fn pochhammer_direct(a: Complex64, m: usize) -> LogComplex {
    let mut lm = 0.0;
    let mut ph = 0.0;
    for j in 0..m {
        let f = a + j as f64;
        if f.re == 0.0 && f.im == 0.0 {
            return LogComplex::ZERO;
        }
        lm += f.norm().ln();
        ph += f.arg();
    }
    LogComplex::new(lm, ph)
}

/// `ln (a)_m` for real `a > 0`.
pub fn ln_pochhammer_real(a: f64, m: usize) -> f64 {
    pochhammer(Complex64::new(a, 0.0), m).log_mag
}
