use std::f64::consts::PI;
use std::ops::{Add, Div, Mul, Neg};

use num_complex::Complex64;

/// Complex number stored as `(ln|z|, arg z)`.
///
/// Zero is `log_mag = -inf`. Products never overflow; sums are formed relative
/// to the larger operand.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogComplex {
    pub log_mag: f64,
    pub phase: f64,
}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_phase(phi: f64) -> f64 {
    if phi > -PI && phi <= PI {
        return phi;
    }
    let mut r = phi.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    r
}

impl LogComplex {
    pub const ZERO: LogComplex = LogComplex { log_mag: f64::NEG_INFINITY, phase: 0.0 };
    pub const ONE: LogComplex = LogComplex { log_mag: 0.0, phase: 0.0 };

    pub fn new(log_mag: f64, phase: f64) -> Self {
        if log_mag == f64::NEG_INFINITY {
            return Self::ZERO;
        }
        LogComplex { log_mag, phase: wrap_phase(phase) }
    }

    pub fn from_complex(z: Complex64) -> Self {
        if z.re == 0.0 && z.im == 0.0 {
            return Self::ZERO;
        }
        // hypot keeps subnormal/huge components exact before the log
        LogComplex { log_mag: z.re.hypot(z.im).ln(), phase: z.im.atan2(z.re) }
    }

    pub fn from_real(x: f64) -> Self {
        if x == 0.0 {
            Self::ZERO
        } else if x > 0.0 {
            LogComplex { log_mag: x.ln(), phase: 0.0 }
        } else {
            LogComplex { log_mag: (-x).ln(), phase: PI }
        }
    }

    /// Positive real number `e^{log}`.
    pub fn from_log(log: f64) -> Self {
        Self::new(log, 0.0)
    }

    pub fn to_complex(self) -> Complex64 {
        if self.is_zero() {
            return Complex64::new(0.0, 0.0);
        }
        Complex64::from_polar(self.log_mag.exp(), self.phase)
    }

    /// Real part of the represented value.
    pub fn re(self) -> f64 {
        self.to_complex().re
    }

    pub fn is_zero(self) -> bool {
        self.log_mag == f64::NEG_INFINITY
    }

    pub fn conj(self) -> Self {
        if self.is_zero() {
            return self;
        }
        LogComplex::new(self.log_mag, -self.phase)
    }

    pub fn recip(self) -> Self {
        LogComplex::new(-self.log_mag, -self.phase)
    }

    pub fn powi(self, n: i32) -> Self {
        if n == 0 {
            return Self::ONE;
        }
        if self.is_zero() {
            return if n > 0 { Self::ZERO } else { LogComplex::new(f64::INFINITY, 0.0) };
        }
        LogComplex::new(self.log_mag * n as f64, self.phase * n as f64)
    }

    pub fn scale_log(self, log_factor: f64) -> Self {
        if self.is_zero() {
            return self;
        }
        LogComplex::new(self.log_mag + log_factor, self.phase)
    }

    pub fn abs_log(self) -> f64 {
        self.log_mag
    }
}

impl Mul for LogComplex {
    type Output = LogComplex;
    fn mul(self, rhs: LogComplex) -> LogComplex {
        if self.is_zero() || rhs.is_zero() {
            return Self::ZERO;
        }
        LogComplex::new(self.log_mag + rhs.log_mag, self.phase + rhs.phase)
    }
}

impl Mul<Complex64> for LogComplex {
    type Output = LogComplex;
    fn mul(self, rhs: Complex64) -> LogComplex {
        self * LogComplex::from_complex(rhs)
    }
}

impl Div for LogComplex {
    type Output = LogComplex;
    fn div(self, rhs: LogComplex) -> LogComplex {
        if self.is_zero() {
            return Self::ZERO;
        }
        LogComplex::new(self.log_mag - rhs.log_mag, self.phase - rhs.phase)
    }
}

impl Neg for LogComplex {
    type Output = LogComplex;
    fn neg(self) -> LogComplex {
        if self.is_zero() {
            return self;
        }
        LogComplex::new(self.log_mag, self.phase + PI)
    }
}

impl Add for LogComplex {
    type Output = LogComplex;
    fn add(self, rhs: LogComplex) -> LogComplex {
        let (big, small) = if self.log_mag >= rhs.log_mag { (self, rhs) } else { (rhs, self) };
        if small.is_zero() {
            return big;
        }
        let r = Complex64::from_polar((small.log_mag - big.log_mag).exp(), small.phase - big.phase);
        let s = LogComplex::from_complex(Complex64::new(1.0, 0.0) + r);
        if s.is_zero() {
            return Self::ZERO;
        }
        LogComplex::new(big.log_mag + s.log_mag, big.phase + s.phase)
    }
}

/// Running sum of `LogComplex` terms held as a complex mantissa and a log scale.
#[derive(Clone, Copy, Debug)]
pub struct LogSum {
    scale: f64,
    acc: Complex64,
    max_term: f64,
}

impl Default for LogSum {
    fn default() -> Self {
        Self::new()
    }
}

impl LogSum {
    pub fn new() -> Self {
        LogSum { scale: f64::NEG_INFINITY, acc: Complex64::new(0.0, 0.0), max_term: f64::NEG_INFINITY }
    }

    pub fn push(&mut self, t: LogComplex) {
        if t.is_zero() {
            return;
        }
        if t.log_mag > self.max_term {
            self.max_term = t.log_mag;
        }
        if t.log_mag > self.scale {
            if self.scale > f64::NEG_INFINITY {
                self.acc *= (self.scale - t.log_mag).exp();
            }
            self.scale = t.log_mag;
        }
        self.acc += Complex64::from_polar((t.log_mag - self.scale).exp(), t.phase);
    }

    pub fn value(&self) -> LogComplex {
        if self.scale == f64::NEG_INFINITY {
            return LogComplex::ZERO;
        }
        LogComplex::from_complex(self.acc).scale_log(self.scale)
    }

    /// Log of the largest term magnitude pushed so far.
    pub fn max_term_log(&self) -> f64 {
        self.max_term
    }
}

/// `ln(e^a + e^b)` for real logs.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    if a > b {
        a + (b - a).exp().ln_1p()
    } else {
        b + (a - b).exp().ln_1p()
    }
}
