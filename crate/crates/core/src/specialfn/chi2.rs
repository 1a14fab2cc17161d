//! Chi-squared quantiles for the degrees of freedom the combination tests need.
//!
//! df = 1 reduces to the normal quantile. Even df have the closed-form
//! survival function e^{-x/2} Σ_{k<df/2} (x/2)^k / k!, which is inverted by a
//! bracketed Newton iteration in log space.

use super::normal::{quantile, upper_quantile};
use crate::error::{domain, Error, Result};
use crate::scalar::{lit, to_f64, Real};

fn check_df(df: u32) -> Result<()> {
    if df < 1 {
        return domain("chi-squared df must be at least 1");
    }
    if df != 1 && df % 2 == 1 {
        return Err(Error::Unsupported(format!(
            "chi-squared quantile for odd df = {df} (only df = 1 and even df are provided)"
        )));
    }
    Ok(())
}

#[cfg(test)]
/// Survival function of χ²_df for even df at x = 2u: e^{-u} Σ_{k<m} u^k/k!.
pub(crate) fn even_df_sf<T: Real>(x: T, df: u32) -> T {
    let u = x * lit(0.5);
    let mut term = T::one();
    let mut sum = T::one();
    for k in 1..df / 2 {
        term = term * u / lit(k as f64);
        sum = sum + term;
    }
    (-u).exp() * sum
}

/// Solves log S(2u) = log_q for u, with m = df/2.
fn even_df_upper_quantile<T: Real>(log_q: T, df: u32) -> Result<T> {
    let m = df / 2;
    let log_sf = |u: T| {
        let mut term = T::one();
        let mut sum = T::one();
        for k in 1..m {
            term = term * u / lit(k as f64);
            sum = sum + term;
        }
        (-u + sum.ln(), term, sum)
    };
    // Bracket: h(u) = log S(u) − log q is decreasing from −log q > 0 at u = 0.
    let mut lo = T::zero();
    let mut hi = (-log_q).max(T::one()) + lit(m as f64);
    while log_sf(hi).0 > log_q {
        lo = hi;
        hi = hi * lit(2.0);
        if hi > lit(1e6) {
            return Err(Error::Numerical {
                message: "chi-squared quantile bracket did not close".into(),
                estimate: to_f64(hi),
                error: f64::INFINITY,
                evaluations: 0,
            });
        }
    }
    let mut u = lit::<T>(0.5) * (lo + hi);
    for _ in 0..200 {
        let (h, last, sum) = log_sf(u);
        let h = h - log_q;
        if h > T::zero() {
            lo = u;
        } else {
            hi = u;
        }
        // d/du log S = −(u^{m−1}/(m−1)!) / Σ
        let slope = -last / sum;
        let mut next = if slope < T::zero() {
            u - h / slope
        } else {
            lo - T::one()
        };
        if !(next > lo && next < hi) {
            next = lit::<T>(0.5) * (lo + hi);
        }
        if (next - u).abs() <= lit::<T>(4.0) * T::epsilon() * u.abs().max(T::min_positive_value()) {
            return Ok(next * lit(2.0));
        }
        u = next;
        if hi - lo <= T::epsilon() * hi {
            return Ok(u * lit(2.0));
        }
    }
    Ok(u * lit(2.0))
}

/// Lower-tail quantile: the x with P(χ²_df ≤ x) = p.
pub fn chi2_quantile<T: Real>(p: T, df: u32) -> Result<T> {
    check_df(df)?;
    if !(p > T::zero() && p < T::one()) {
        return domain(format!("chi-squared quantile needs p in (0, 1), got {p}"));
    }
    if df == 1 {
        let z = quantile((T::one() + p) * lit(0.5));
        Ok(z * z)
    } else {
        even_df_upper_quantile((-p).ln_1p(), df)
    }
}

/// Upper-tail quantile: the x with P(χ²_df ≥ x) = q, precise for small q.
pub fn chi2_upper_quantile<T: Real>(q: T, df: u32) -> Result<T> {
    check_df(df)?;
    if !(q > T::zero() && q < T::one()) {
        return domain(format!("chi-squared upper quantile needs q in (0, 1), got {q}"));
    }
    if df == 1 {
        let z = upper_quantile(q * lit(0.5));
        Ok(z * z)
    } else {
        even_df_upper_quantile(q.ln(), df)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specialfn::normal::std_normal_quantile;

    #[test]
    fn df1_squared_normal_identity() {
        for i in 1..=100 {
            let p = 0.001 + 0.998 * (i as f64 - 0.5) / 100.0;
            let z = std_normal_quantile((1.0 + p) / 2.0).unwrap();
            assert!((chi2_quantile(p, 1).unwrap() - z * z).abs() <= 1e-9);
        }
    }

    #[test]
    fn harmonic_critical_value_point() {
        let p = 1.0 - 4.0 * 0.025_f64.powi(2);
        let c = chi2_quantile(p, 1).unwrap();
        assert!((c - 9.14).abs() < 0.005, "{c}");
        let c_upper = chi2_upper_quantile(4.0 * 0.025_f64.powi(2), 1).unwrap();
        assert!((c_upper - 9.140_593_461_243_98).abs() < 1e-10);
    }

    #[test]
    fn df4_fisher_constant() {
        let gamma = 0.025_f64.powi(2);
        let v = chi2_quantile(1.0 - gamma, 4).unwrap();
        assert!(((-v / 2.0).exp() - 0.000058).abs() < 2e-6);
        // mpmath: 2u where e^{-u}(1 + u) = γ
        let v_upper = chi2_upper_quantile(gamma, 4).unwrap();
        assert!((v_upper - 19.505_875_840_765_2).abs() < 1e-9);
        assert!((even_df_sf(v_upper, 4) - gamma).abs() < 1e-15);
    }

    #[test]
    fn lower_limit_tends_to_zero() {
        assert!(chi2_quantile(1e-12_f64, 1).unwrap() < 1e-20);
        assert!(chi2_quantile(1e-6_f64, 1).unwrap() < 1e-10);
        assert!(chi2_quantile(1e-6_f64, 4).unwrap() < 1e-2);
    }

    #[test]
    fn even_df_round_trip() {
        for df in [2, 4, 6, 10] {
            for p in [0.01_f64, 0.3, 0.5, 0.9, 0.999] {
                let x = chi2_quantile(p, df).unwrap();
                let back = 1.0 - even_df_sf(x, df);
                assert!((back - p).abs() < 1e-12, "df={df} p={p}");
            }
        }
        // df = 2 is exponential with mean 2.
        let x = chi2_quantile(0.5, 2).unwrap();
        assert!((x - 2.0 * std::f64::consts::LN_2).abs() < 1e-13);
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(chi2_quantile(0.5_f64, 0), Err(Error::Domain(_))));
        assert!(matches!(chi2_quantile(0.5_f64, 3), Err(Error::Unsupported(_))));
        assert!(chi2_quantile(0.0_f64, 1).is_err());
        assert!(chi2_quantile(1.0_f64, 4).is_err());
        assert!(chi2_upper_quantile(1.2_f64, 1).is_err());
    }
}
