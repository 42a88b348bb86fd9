//! Standard normal distribution primitives.
//!
//! The CDF is evaluated through the complementary error function,
//! `Φ(z) = erfc(-z / √2) / 2`, which keeps full relative precision deep in
//! the lower tail where small p-values live. The quantile starts from the
//! inverse complementary error function and is polished with Newton steps
//! against [`std_normal_cdf`].

use libm::erfc;
use statrs::function::erf::erfc_inv;
use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

use crate::error::{invalid, Result};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Φ(z), the standard normal CDF.
pub fn std_normal_cdf(z: f64) -> Result<f64> {
    if !z.is_finite() {
        return Err(invalid(format!("normal cdf argument must be finite, got {z}")));
    }
    Ok(cdf_unchecked(z))
}

#[inline]
pub(crate) fn cdf_unchecked(z: f64) -> f64 {
    0.5 * erfc(-z * FRAC_1_SQRT_2)
}

/// Standard normal density.
#[inline]
pub fn std_normal_pdf(z: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * z * z).exp()
}

/// Φ⁻¹(u) for u in the open unit interval.
pub fn std_normal_quantile(u: f64) -> Result<f64> {
    if !(u > 0.0 && u < 1.0) {
        return Err(invalid(format!("normal quantile requires 0 < u < 1, got {u}")));
    }
    Ok(quantile_unchecked(u))
}

#[inline]
pub(crate) fn quantile_unchecked(u: f64) -> f64 {
    let mut z = -SQRT_2 * erfc_inv(2.0 * u);
    // Residuals are taken on the smaller tail so they keep relative precision.
    for _ in 0..2 {
        let density = std_normal_pdf(z);
        if density <= 0.0 || !z.is_finite() {
            break;
        }
        let residual = if u < 0.5 { cdf_unchecked(z) - u } else { (1.0 - u) - cdf_unchecked(-z) };
        z -= residual / density;
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent erf: Maclaurin series for |x| < 1.5, Lentz continued fraction for erfc beyond.
    fn oracle_cdf(z: f64) -> f64 {
        let x = -z / SQRT_2;
        if x.abs() < 1.5 {
            let mut term = x;
            let mut sum = x;
            let mut n = 0.0;
            loop {
                n += 1.0;
                term *= -x * x / n;
                let add = term / (2.0 * n + 1.0);
                sum += add;
                if add.abs() < 1e-18 * sum.abs().max(1e-300) {
                    break;
                }
            }
            let erf = sum * 2.0 / std::f64::consts::PI.sqrt();
            0.5 * (1.0 - erf)
        } else if x > 0.0 {
            0.5 * erfc_cf(x)
        } else {
            1.0 - 0.5 * erfc_cf(-x)
        }
    }

    fn erfc_cf(x: f64) -> f64 {
        // erfc(x) = exp(-x^2)/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
        let mut f = x;
        let tiny = 1e-300;
        let mut c = f;
        let mut d = 0.0;
        for k in 1..20_000 {
            let a = k as f64 / 2.0;
            d = x + a * d;
            if d.abs() < tiny {
                d = tiny;
            }
            c = x + a / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = c * d;
            f *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                break;
            }
        }
        (-x * x).exp() / std::f64::consts::PI.sqrt() / f
    }

    #[test]
    fn cdf_at_zero_is_half() {
        assert_eq!(std_normal_cdf(0.0).unwrap(), 0.5);
    }

    #[test]
    fn cdf_upper_tail_bound() {
        let v = std_normal_cdf(8.0).unwrap();
        assert!(v > 1.0 - 1e-14 && v < 1.0);
    }

    #[test]
    fn cdf_matches_bisection_oracle_at_five_percent() {
        // Bisect the independent oracle for Φ(z) = 0.05.
        let (mut lo, mut hi) = (-3.0_f64, 0.0_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if oracle_cdf(mid) < 0.05 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((lo - (-1.6448536269514722)).abs() < 1e-12);
        let v = std_normal_cdf(-1.6448536269514722).unwrap();
        assert!((v - 0.05).abs() < 1e-10);
    }

    #[test]
    fn cdf_relative_precision_against_oracle() {
        let mut z = -37.0;
        while z <= 8.0 {
            let a = std_normal_cdf(z).unwrap();
            let b = oracle_cdf(z);
            let rel = ((a - b) / b).abs();
            assert!(rel < 1e-12, "z = {z}: {a} vs {b} (rel {rel})");
            z += 0.173;
        }
    }

    #[test]
    fn cdf_symmetry() {
        let mut z = -10.0;
        while z <= 10.0 {
            let s = std_normal_cdf(z).unwrap() + std_normal_cdf(-z).unwrap();
            assert!((s - 1.0).abs() <= 1e-12, "z = {z}");
            z += 0.01;
        }
    }

    #[test]
    fn cdf_monotone() {
        let mut prev = 0.0;
        let mut z = -40.0;
        while z <= 10.0 {
            let v = std_normal_cdf(z).unwrap();
            assert!(v >= prev);
            prev = v;
            z += 0.001;
        }
    }

    #[test]
    fn cdf_rejects_non_finite() {
        assert!(std_normal_cdf(f64::NAN).is_err());
        assert!(std_normal_cdf(f64::INFINITY).is_err());
        assert!(std_normal_cdf(f64::NEG_INFINITY).is_err());
    }

    #[test]
    fn quantile_examples() {
        assert_eq!(std_normal_quantile(0.5).unwrap(), 0.0);
        // bisection on the cdf
        let (mut lo, mut hi) = (0.0_f64, 5.0_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if std_normal_cdf(mid).unwrap() < 0.975 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let q = std_normal_quantile(0.975).unwrap();
        assert!((q - lo).abs() < 1e-9);
        assert!((q - 1.959964).abs() < 1e-5);
    }

    #[test]
    fn quantile_round_trip() {
        for x in [-3.0, -1.0, 0.0, 1.0, 3.0] {
            let u = std_normal_cdf(x).unwrap();
            let back = std_normal_quantile(u).unwrap();
            assert!((back - x).abs() < 1e-8, "{x} -> {back}");
        }
    }

    #[test]
    fn quantile_inverts_cdf_across_range() {
        let mut prev = f64::NEG_INFINITY;
        for k in 1..10_000 {
            let u = k as f64 / 10_000.0;
            let q = std_normal_quantile(u).unwrap();
            assert!(q > prev);
            prev = q;
            assert!((std_normal_cdf(q).unwrap() - u).abs() < 1e-10);
        }
        for u in [1e-300, 1e-100, 1e-20, 1e-10, 1.0 - 1e-10] {
            let q = std_normal_quantile(u).unwrap();
            assert!((std_normal_cdf(q).unwrap() - u).abs() < 1e-10);
        }
    }

    #[test]
    fn quantile_rejects_out_of_range() {
        for u in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(std_normal_quantile(u).is_err());
        }
    }
}
