use num_complex::Complex64;

use super::{LogComplex, LogSum};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesOptions {
    pub tol: f64,
    pub max_terms: usize,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        SeriesOptions { tol: 1e-12, max_terms: 2_000_000 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesResult {
    pub value: LogComplex,
    pub terms_used: usize,
    /// Estimated relative truncation error of the neglected tail.
    pub tail_bound: f64,
    /// Largest term magnitude divided by the result magnitude.
    pub inflation: f64,
    /// Set when `inflation` exceeds 1e6: cancellation may have cost digits.
    pub flagged: bool,
}

const INFLATION_LIMIT: f64 = 1e6;

fn is_nonpositive_integer(b: Complex64) -> bool {
    b.im == 0.0 && b.re <= 0.0 && b.re == b.re.round()
}

/// Generalized hypergeometric series `pFq(a; b; z)`.
pub fn hyper_pfq(a: &[Complex64], b: &[Complex64], z: Complex64, opts: SeriesOptions) -> Result<SeriesResult> {
    hyper_pfq_weighted(a, b, z, |_| 0.0, opts)
}

/// `Σ_l e^{w(l)} t_l` where `t_l` is the `l`-th pFq term and `w` a log weight.
///
/// With `w(l) = k ln(2l)` this is `(2 z d/dz)^k pFq`.
pub fn hyper_pfq_weighted<W>(
    a: &[Complex64],
    b: &[Complex64],
    z: Complex64,
    log_weight: W,
    opts: SeriesOptions,
) -> Result<SeriesResult>
where
    W: Fn(usize) -> f64,
{
    if let Some(bad) = b.iter().find(|&&bj| is_nonpositive_integer(bj)) {
        return Err(Error::NonPositiveIntegerParameter(bad.to_string()));
    }
    if z == Complex64::new(0.0, 0.0) {
        let v = LogComplex::from_log(log_weight(0));
        return Ok(SeriesResult { value: v, terms_used: 1, tail_bound: 0.0, inflation: 1.0, flagged: false });
    }
    // past this index no (a+l) or (b+l) factor can approach zero again
    let l_safe = a
        .iter()
        .chain(b.iter())
        .map(|p| if p.re < 0.0 { (-p.re).ceil() as usize + 1 } else { 0 })
        .max()
        .unwrap_or(0);
    let ln_tol = opts.tol.ln();
    let lz = LogComplex::from_complex(z);

    let mut term = LogComplex::ONE;
    let mut sum = LogSum::new();
    let mut max_partial = f64::NEG_INFINITY;
    let mut small_run = 0usize;

    for l in 0..opts.max_terms {
        let w = log_weight(l);
        let t = if w == f64::NEG_INFINITY { LogComplex::ZERO } else { term.scale_log(w) };
        sum.push(t);
        let partial = sum.value();
        if partial.log_mag > max_partial {
            max_partial = partial.log_mag;
        }
        if t.log_mag < ln_tol + max_partial {
            small_run += 1;
        } else {
            small_run = 0;
        }

        let lf = l as f64;
        let mut ratio = lz.scale_log(-(lf + 1.0).ln());
        for &ai in a {
            ratio = ratio * LogComplex::from_complex(ai + lf);
        }
        for &bi in b {
            ratio = ratio / LogComplex::from_complex(bi + lf);
        }
        if ratio.is_zero() {
            return Ok(finish(&sum, l + 1, 0.0));
        }
        if small_run >= 3 && l >= l_safe && ratio.log_mag < 0.0 {
            let rr = ratio.log_mag.exp();
            let wr = (log_weight(l + 1) - w).exp();
            let tail = (t.log_mag - partial.log_mag).exp() * rr * wr.max(1.0) / (1.0 - rr);
            if tail <= opts.tol || !tail.is_finite() && t.is_zero() {
                return Ok(finish(&sum, l + 1, tail));
            }
        }
        term = term * ratio;
    }
    Err(Error::MaxTermsExceeded { max_terms: opts.max_terms })
}

fn finish(sum: &LogSum, terms_used: usize, tail: f64) -> SeriesResult {
    let value = sum.value();
    let inflation = if value.is_zero() { f64::INFINITY } else { (sum.max_term_log() - value.log_mag).exp() };
    let tail_bound = if tail.is_finite() { tail } else { 0.0 };
    SeriesResult { value, terms_used, tail_bound, inflation, flagged: inflation > INFLATION_LIMIT }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn zero_argument_gives_one() {
        let d = c(3.0, -0.5);
        let r = hyper_pfq(&[c(2.0, 0.0)], &[d, d.conj()], c(0.0, 0.0), SeriesOptions::default()).unwrap();
        assert_eq!(r.value, LogComplex::ONE);
    }

    #[test]
    fn bessel_like_0f1() {
        // direct 30-term summation of 1/(l!)^2
        let mut direct = 0.0;
        let mut f = 1.0;
        for l in 0..30 {
            if l > 0 {
                f *= l as f64;
            }
            direct += 1.0 / (f * f);
        }
        let r = hyper_pfq(&[], &[c(1.0, 0.0)], c(1.0, 0.0), SeriesOptions::default()).unwrap();
        assert!((r.value.re() - direct).abs() < 1e-14);
        assert!((direct - 2.279_585_302_336_067).abs() < 1e-14);
    }

    #[test]
    fn parameter_cancellation() {
        for &z in &[c(0.7, 0.0), c(-3.0, 2.0), c(25.0, 0.0)] {
            let e = hyper_pfq(&[c(1.0, 0.0)], &[c(1.0, 0.0)], z, SeriesOptions::default()).unwrap();
            assert!((e.value.to_complex() - z.exp()).norm() < 1e-12 * z.exp().norm().max(1.0));
            // an upper 1 cancels one lower 1, leaving 0F1(;1;z)
            let r = hyper_pfq(&[c(1.0, 0.0)], &[c(1.0, 0.0), c(1.0, 0.0)], z, SeriesOptions::default()).unwrap();
            let b = hyper_pfq(&[], &[c(1.0, 0.0)], z, SeriesOptions::default()).unwrap();
            assert!((r.value.to_complex() - b.value.to_complex()).norm() < 1e-12 * b.value.to_complex().norm());
        }
    }

    #[test]
    fn huge_argument_does_not_overflow() {
        let n = 500.0;
        let d = c(1.0 - n * 1.0, -n * 0.005);
        let r = hyper_pfq(&[c(n / 2.0, 0.0)], &[d, d.conj()], c(n * n, 0.0), SeriesOptions::default()).unwrap();
        assert!(r.value.log_mag.is_finite());
        assert!(r.value.log_mag > 700.0);
        assert!(r.tail_bound <= 1e-12);
    }

    #[test]
    fn rejects_nonpositive_integer_denominator() {
        let e = hyper_pfq(&[], &[c(-3.0, 0.0)], c(1.0, 0.0), SeriesOptions::default());
        assert!(matches!(e, Err(Error::NonPositiveIntegerParameter(_))));
    }

    #[test]
    fn terminating_series() {
        // 2F1(-2, 1; 1; z) = (1 - z)^2
        let z = c(0.3, 0.4);
        let r = hyper_pfq(&[c(-2.0, 0.0), c(1.0, 0.0)], &[c(1.0, 0.0)], z, SeriesOptions::default()).unwrap();
        let exact = (c(1.0, 0.0) - z).powi(2);
        assert!((r.value.to_complex() - exact).norm() < 1e-15);
    }

    #[test]
    fn max_terms_error() {
        let opts = SeriesOptions { tol: 1e-12, max_terms: 5 };
        assert!(matches!(
            hyper_pfq(&[], &[c(1.0, 0.0)], c(100.0, 0.0), opts),
            Err(Error::MaxTermsExceeded { .. })
        ));
    }
}
