//! Gauss quadrature node/weight generation by Newton iteration on the
//! orthogonal-polynomial recurrences. Only what the fading grids need:
//! Legendre on `[-1, 1]` and generalized Laguerre for the weight
//! `x^alpha e^-x` (used with `alpha = 0` for the Exp(1) channel gain and
//! `alpha = -1/2` for the squared half-normal reduction).

use crate::{lit, Error, Float, Result};

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub(crate) fn gauss_legendre<F: Float>(n: usize) -> Result<(Vec<F>, Vec<F>)> {
    if n < 1 {
        return Err(Error::Domain("gauss_legendre needs n >= 1".into()));
    }
    let mut x = vec![F::zero(); n];
    let mut w = vec![F::zero(); n];
    let nf = F::from_usize(n).unwrap();
    let m = n.div_ceil(2);
    for i in 0..m {
        // cosine initial guess for the i-th root
        let mut z: F = (F::PI() * (F::from_usize(i).unwrap() + lit(0.75)) / (nf + lit(0.5))).cos();
        let mut pp = F::zero();
        for _ in 0..100 {
            let mut p1 = F::one();
            let mut p2 = F::zero();
            for j in 0..n {
                let jf = F::from_usize(j).unwrap();
                let p3 = p2;
                p2 = p1;
                p1 = ((lit::<F>(2.0) * jf + F::one()) * z * p2 - jf * p3) / (jf + F::one());
            }
            pp = nf * (z * p1 - p2) / (z * z - F::one());
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= F::epsilon() {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = lit::<F>(2.0) / ((F::one() - z * z) * pp * pp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    Ok((x, w))
}

/// Generalized Gauss-Laguerre rule for the probability density
/// `x^alpha e^-x / Gamma(alpha + 1)` on `[0, inf)`; the returned weights sum
/// to one. `alpha > -1`.
///
/// The polynomial recurrence overflows `f64` somewhere past 160 nodes (the
/// largest node grows like `4n` and the recurrence tracks values of order
/// `e^(x/2)`), so the node count is capped there.
pub(crate) fn gauss_gen_laguerre<F: Float>(n: usize, alpha: f64) -> Result<(Vec<F>, Vec<F>)> {
    if n < 1 {
        return Err(Error::Domain("gauss_gen_laguerre needs n >= 1".into()));
    }
    if n > 160 {
        return Err(Error::Domain(format!(
            "gauss_gen_laguerre supports at most 160 nodes, requested {n}"
        )));
    }
    let alf: F = lit(alpha);
    let nf = F::from_usize(n).unwrap();
    let mut x = vec![F::zero(); n];
    let mut w = vec![F::zero(); n];
    // Gamma(n + alpha) / (Gamma(n) Gamma(1 + alpha)), accumulated as a product
    // so no loggamma is needed.
    let mut gamma_ratio = F::one();
    for j in 1..n {
        let jf = F::from_usize(j).unwrap();
        gamma_ratio = gamma_ratio * (jf + alf) / jf;
    }
    let mut z = F::zero();
    for i in 0..n {
        // standard initial guesses, then Newton
        if i == 0 {
            z = (F::one() + alf) * (lit::<F>(3.0) + lit::<F>(0.92) * alf)
                / (F::one() + lit::<F>(2.4) * nf + lit::<F>(1.8) * alf);
        } else if i == 1 {
            z += (lit::<F>(15.0) + lit::<F>(6.25) * alf)
                / (F::one() + lit::<F>(0.9) * alf + lit::<F>(2.5) * nf);
        } else {
            let ai = F::from_usize(i - 1).unwrap();
            z = z + ((F::one() + lit::<F>(2.55) * ai) / (lit::<F>(1.9) * ai)
                + lit::<F>(1.26) * ai * alf / (F::one() + lit::<F>(3.5) * ai))
                * (z - x[i - 2])
                / (F::one() + lit::<F>(0.3) * alf);
        }
        let mut pp = F::zero();
        let mut p2 = F::zero();
        for _ in 0..100 {
            let mut p1 = F::one();
            p2 = F::zero();
            for j in 0..n {
                let jf = F::from_usize(j).unwrap();
                let p3 = p2;
                p2 = p1;
                p1 = ((lit::<F>(2.0) * jf + F::one() + alf - z) * p2 - (jf + alf) * p3)
                    / (jf + F::one());
            }
            pp = (nf * p1 - (nf + alf) * p2) / z;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= F::epsilon() * z.abs() {
                break;
            }
        }
        x[i] = z;
        w[i] = -gamma_ratio / (pp * nf * p2);
    }
    Ok((x, w))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dot(a: &[f64], b: impl Iterator<Item = f64>) -> f64 {
        a.iter().zip(b).map(|(w, v)| w * v).sum()
    }

    #[test]
    fn legendre_two_point_rule() {
        let (x, w) = gauss_legendre::<f64>(2).unwrap();
        let r = 1.0 / 3.0f64.sqrt();
        assert!((x[0] + r).abs() < 1e-15 && (x[1] - r).abs() < 1e-15);
        assert!((w[0] - 1.0).abs() < 1e-15 && (w[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn legendre_moments() {
        for n in [8usize, 63, 64] {
            let (x, w) = gauss_legendre::<f64>(n).unwrap();
            let s: f64 = w.iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "n={n}");
            let m2 = dot(&w, x.iter().map(|v| v * v));
            assert!((m2 - 2.0 / 3.0).abs() < 1e-13, "n={n}");
            // exactness at the highest polynomial degree 2n-1 (odd => zero)
            let modd = dot(&w, x.iter().map(|v| v.powi(2 * n as i32 - 1)));
            assert!(modd.abs() < 1e-13, "n={n}");
        }
    }

    #[test]
    fn laguerre_two_point_rule() {
        let (x, w) = gauss_gen_laguerre::<f64>(2, 0.0).unwrap();
        let s2 = 2.0f64.sqrt();
        assert!((x[0] - (2.0 - s2)).abs() < 1e-14);
        assert!((x[1] - (2.0 + s2)).abs() < 1e-14);
        assert!((w[0] - (2.0 + s2) / 4.0).abs() < 1e-14);
        assert!((w[1] - (2.0 - s2) / 4.0).abs() < 1e-14);
    }

    #[test]
    fn laguerre_exponential_moments() {
        for n in [8usize, 64, 128, 160] {
            let (x, w) = gauss_gen_laguerre::<f64>(n, 0.0).unwrap();
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12, "n={n}");
            assert!((dot(&w, x.iter().copied()) - 1.0).abs() < 1e-11, "n={n}");
            assert!((dot(&w, x.iter().map(|v| v * v)) - 2.0).abs() < 1e-10, "n={n}");
        }
    }

    #[test]
    fn half_normal_square_moments() {
        // u ~ (Re CN(0,1))^2 has density e^-u / sqrt(pi u): E[u] = 1/2, E[u^2] = 3/4
        for n in [1usize, 8, 64, 128] {
            let (x, w) = gauss_gen_laguerre::<f64>(n, -0.5).unwrap();
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-10, "n={n}");
            if n >= 1 {
                assert!((dot(&w, x.iter().copied()) - 0.5).abs() < 1e-12, "n={n}");
            }
            if n >= 2 {
                assert!((dot(&w, x.iter().map(|v| v * v)) - 0.75).abs() < 1e-11, "n={n}");
            }
        }
        // n = 1: single node at 1 + alpha = 1/2 with unit weight
        let (x, w) = gauss_gen_laguerre::<f64>(1, -0.5).unwrap();
        assert!((x[0] - 0.5).abs() < 1e-14 && (w[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn node_count_limits() {
        assert!(gauss_gen_laguerre::<f64>(0, 0.0).is_err());
        assert!(gauss_gen_laguerre::<f64>(161, 0.0).is_err());
        assert!(gauss_legendre::<f64>(0).is_err());
    }
}
