//! Numerical kernel: normal and chi-squared distribution functions, the
//! truncated normal law and the arcsine transform for proportions.

mod arcsine;
mod chi2;
pub(crate) mod normal;
mod truncnorm;

pub use arcsine::{arcsine_z, arcsine_z_from_proportions, count_from_percent, ArcsineTest};
pub use chi2::{chi2_quantile, chi2_upper_quantile};
pub use normal::{erfc, std_normal_cdf, std_normal_pdf, std_normal_quantile, std_normal_sf, std_normal_upper_quantile};
pub use truncnorm::{truncnorm_sample, TruncNormParams};
