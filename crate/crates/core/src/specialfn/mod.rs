//! Log-domain complex arithmetic, Pochhammer symbols and generalized
//! hypergeometric series.

mod gamma;
mod hyper;
mod logcomplex;

pub use gamma::{ln_factorial, ln_gamma, ln_pochhammer_real, pochhammer};
pub use hyper::{hyper_pfq, hyper_pfq_weighted, SeriesOptions, SeriesResult};
pub use logcomplex::{log_add_exp, wrap_phase, LogComplex, LogSum};
