//! Log-space densities of the central and noncentral t and F distributions,
//! with the special functions and quadrature they rely on.

mod f;
pub mod quadrature;
pub mod special;
mod t;

pub use f::{log_central_f_pdf, log_noncentral_f_pdf, FDensityParams};
pub use quadrature::{integrate_adaptive, log_integrate_exp, Integral, LogIntegral};
pub use t::{log_central_t_pdf, log_noncentral_t_pdf, TDensityParams};
