//! Numerically stable scalar kernels shared by every formula in the crate:
//! the Gaussian tail probability `Q`, its logarithm, binary entropy, the
//! entropy-of-a-tail composition `H_b(Q(sqrt(k*beta)))`, and its exact
//! derivative in `beta`.
//!
//! `Q` is evaluated from two self-contained pieces:
//!
//! * `|x| < 2`: the central series `Q(x) = 1/2 - phi(x) * sum x^(2n+1)/(2n+1)!!`,
//!   whose terms are all positive (no cancellation in the sum);
//! * `x >= 2`: the Mills-ratio continued fraction
//!   `Q(x) = phi(x) / (x + 1/(x + 2/(x + 3/(x + ...))))`,
//!   a scaled-tail form that also yields `ln Q` directly, so arguments up
//!   to `x ~ 1e6` stay finite long after `Q` itself underflows.
//!
//! Negative arguments go through the exact complement `Q(x) = 1 - Q(-x)`,
//! which makes the symmetry identity hold to machine precision.
//!
//! All entropies and rates are in bits (base-2 logarithms throughout).

use crate::{lit, Error, Float, Result};

/// A probability, validated to lie in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Probability<F>(F);

impl<F: Float> Probability<F> {
    pub fn new(value: F) -> Result<Self> {
        if !value.is_finite() || value < F::zero() || value > F::one() {
            return Err(Error::Domain(format!("probability must lie in [0, 1], got {value}")));
        }
        Ok(Self(value))
    }

    pub fn get(self) -> F {
        self.0
    }
}

/// A rate in bits per channel use. Everything this crate computes lives in
/// `[0, 2]` because the quantizer output alphabet has four letters; tiny
/// negative round-off is clamped to zero.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Rate<F>(F);

impl<F: Float> Rate<F> {
    pub fn new(value: F) -> Result<Self> {
        let slack = lit::<F>(1e-9);
        if !value.is_finite() || value < -slack || value > lit::<F>(2.0) + slack {
            return Err(Error::Domain(format!("rate must lie in [0, 2] bits/cu, got {value}")));
        }
        Ok(Self(value.max(F::zero()).min(lit(2.0))))
    }

    pub fn get(self) -> F {
        self.0
    }
}

fn sqrt_2pi<F: Float>() -> F {
    (F::PI() + F::PI()).sqrt()
}

fn ln_sqrt_2pi<F: Float>() -> F {
    sqrt_2pi::<F>().ln()
}

/// `sum_{n>=0} x^(2n+1) / (1*3*5*...*(2n+1))`; all terms positive.
fn central_series<F: Float>(x: F) -> F {
    let xx = x * x;
    let mut term = x;
    let mut sum = x;
    let mut n = 1u32;
    while n < 80 {
        term = term * xx / lit::<F>(2.0 * f64::from(n) + 1.0);
        let next = sum + term;
        if next == sum {
            break;
        }
        sum = next;
        n += 1;
    }
    sum
}

/// Mills ratio `R(x) = Q(x)/phi(x)` via the continued fraction
/// `1/(x + 1/(x + 2/(x + 3/...)))`, evaluated with modified Lentz.
fn mills_ratio_cf<F: Float>(x: F) -> F {
    let tiny = F::min_positive_value();
    let tol = F::epsilon() * lit::<F>(0.5);
    let mut f = if x == F::zero() { tiny } else { x };
    let mut c = f;
    let mut d = F::zero();
    let mut i = 1u32;
    while i <= 200 {
        let a = F::from_u32(i).unwrap();
        d = x + a * d;
        if d == F::zero() {
            d = tiny;
        }
        c = x + a / c;
        if c == F::zero() {
            c = tiny;
        }
        d = d.recip();
        let delta = c * d;
        f *= delta;
        if (delta - F::one()).abs() < tol {
            break;
        }
        i += 1;
    }
    f.recip()
}

const SERIES_LIMIT: f64 = 2.0;

pub(crate) fn q_raw<F: Float>(x: F) -> F {
    if x < F::zero() {
        return F::one() - q_raw(-x);
    }
    if x < lit(SERIES_LIMIT) {
        let phi = (-x * x / lit::<F>(2.0)).exp() / sqrt_2pi::<F>();
        lit::<F>(0.5) - phi * central_series(x)
    } else {
        log_q_raw(x).exp()
    }
}

pub(crate) fn log_q_raw<F: Float>(x: F) -> F {
    if x < F::zero() {
        (-q_raw(-x)).ln_1p()
    } else if x < lit(SERIES_LIMIT) {
        q_raw(x).ln()
    } else {
        -x * x / lit::<F>(2.0) - ln_sqrt_2pi::<F>() + mills_ratio_cf(x).ln()
    }
}

/// `log2((1 - Q(x)) / Q(x))` for `x >= 0`; positive, and finite for any
/// finite `x` because it goes through `log_q_raw`.
pub(crate) fn log2_tail_ratio_raw<F: Float>(x: F) -> F {
    let lq = log_q_raw(x);
    let p = lq.exp();
    ((-p).ln_1p() - lq) / F::LN_2()
}

pub(crate) fn entropy_hb_q_raw<F: Float>(k: F, beta: F) -> F {
    let s = k * beta;
    if s == F::zero() {
        return F::one();
    }
    let lq = log_q_raw(s.sqrt());
    let p = lq.exp();
    -(p * lq + (F::one() - p) * (-p).ln_1p()) / F::LN_2()
}

pub(crate) fn d_raw<F: Float>(k: F, beta: F) -> F {
    let two = lit::<F>(2.0);
    let s = k * beta;
    let l2 = log2_tail_ratio_raw(s.sqrt());
    let ln_mag =
        (k.ln() - (lit::<F>(8.0) * F::PI() * beta).ln()) / two - s / two + l2.ln();
    -ln_mag.exp()
}

/// `d_raw` with the `exp(-k*beta/2)` factor stripped. The power-control
/// solver recombines that factor with the fading density analytically, which
/// keeps its quadrature well-conditioned at arbitrarily large `beta`.
pub(crate) fn d_tilde_raw<F: Float>(k: F, beta: F) -> F {
    let two = lit::<F>(2.0);
    let s = k * beta;
    let l2 = log2_tail_ratio_raw(s.sqrt());
    let ln_mag = (k.ln() - (lit::<F>(8.0) * F::PI() * beta).ln()) / two + l2.ln();
    -ln_mag.exp()
}

fn check_finite<F: Float>(name: &str, x: F) -> Result<()> {
    if !x.is_finite() {
        return Err(Error::Domain(format!("{name} must be finite, got {x}")));
    }
    Ok(())
}

/// Tail probability of the standard Gaussian, `P(N(0,1) > x)`.
pub fn q_function<F: Float>(x: F) -> Result<Probability<F>> {
    check_finite("q_function argument", x)?;
    Probability::new(q_raw(x).max(F::zero()).min(F::one()))
}

/// Natural logarithm of [`q_function`], finite even where `Q` underflows.
pub fn log_q_function<F: Float>(x: F) -> Result<F> {
    check_finite("log_q_function argument", x)?;
    Ok(log_q_raw(x))
}

/// Binary entropy `H_b(p) = -p log2 p - (1-p) log2 (1-p)` in bits, with the
/// limit convention `0 log 0 = 0`.
pub fn binary_entropy<F: Float>(p: Probability<F>) -> Rate<F> {
    let p = p.get();
    if p == F::zero() || p == F::one() {
        return Rate(F::zero());
    }
    let h = -(p * p.ln() + (F::one() - p) * (F::one() - p).ln()) / F::LN_2();
    Rate(h.max(F::zero()).min(F::one()))
}

/// `xi(x) = -x log2 x` on `[0, 1]`, with `xi(0) = 0`.
pub fn xi<F: Float>(x: F) -> Result<F> {
    if !x.is_finite() || x < F::zero() || x > F::one() {
        return Err(Error::Domain(format!("xi argument must lie in [0, 1], got {x}")));
    }
    if x == F::zero() {
        return Ok(F::zero());
    }
    Ok(-x * x.log2())
}

/// `H_b(Q(sqrt(k * beta)))` in bits, stable for `k * beta` up to `1e6` and
/// beyond (it simply decays to zero).
pub fn entropy_hb_q<F: Float>(k: F, beta: F) -> Result<Rate<F>> {
    if !k.is_finite() || !beta.is_finite() || k < F::zero() || beta < F::zero() {
        return Err(Error::Domain(format!(
            "entropy_hb_q requires k >= 0 and beta >= 0, got k={k}, beta={beta}"
        )));
    }
    Ok(Rate(entropy_hb_q_raw(k, beta)))
}

/// Exact derivative of [`entropy_hb_q`] with respect to `beta`:
///
/// `D(k, b) = -sqrt(k / (8 pi b)) * exp(-k b / 2) * log2((1 - Q(sqrt(k b))) / Q(sqrt(k b)))`.
///
/// Always negative (the entropy decreases in `beta`); evaluated in the log
/// domain so very large `k * beta` underflows gracefully to `-0.0` instead
/// of producing NaN.
pub fn d_derivative<F: Float>(k: F, beta: F) -> Result<F> {
    if !k.is_finite() || !beta.is_finite() || k <= F::zero() || beta <= F::zero() {
        return Err(Error::Domain(format!(
            "d_derivative requires k > 0 and beta > 0, got k={k}, beta={beta}"
        )));
    }
    Ok(d_raw(k, beta))
}

/// The `beta -> 0+` limit of [`d_derivative`]: `-k / (pi ln 2)`.
pub fn d_derivative_at_zero<F: Float>(k: F) -> Result<F> {
    if !k.is_finite() || k < F::zero() {
        return Err(Error::Domain(format!("d_derivative_at_zero requires k >= 0, got {k}")));
    }
    Ok(-k / (F::PI() * F::LN_2()))
}

#[cfg(test)]
#[allow(clippy::excessive_precision)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    // High-precision reference values, frozen from an independent
    // arbitrary-precision evaluation of the same expressions.
    const Q_NEG_SQRT2: f64 = 0.92135039612657568476; // Q(-1.41421356)
    const LOG_Q_40: f64 = -804.60844201375378817;
    const LOG_Q_NEG5: f64 = -2.8665161296376359338e-7;
    const LOG_Q_8: f64 = -35.013437159914549896;
    const HB_011: f64 = 0.49991595816452799564;
    const HB_Q_SQRT2: f64 = 0.39740301928466939055; // H_b(Q(sqrt(2)))
    const D_1_1: f64 = -0.2911877848933137073;
    const NEG_INV_PI_LN2: f64 = -0.45922409426328517124;

    fn rel_close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * b.abs().max(a.abs())
    }

    #[test]
    fn q_at_zero_is_half() {
        assert_eq!(q_function(0.0f64).unwrap().get(), 0.5);
    }

    #[test]
    fn q_deep_tail_underflows_but_log_path_stays_finite() {
        let q = q_function(40.0f64).unwrap().get();
        assert!(q < 1e-300);
        let lq = log_q_function(40.0f64).unwrap();
        assert!(lq.is_finite());
        assert!(rel_close(lq, LOG_Q_40, 1e-12));
        // leading-order asymptote -x^2/2 - ln(x sqrt(2 pi))
        let x = 40.0f64;
        let lead = -x * x / 2.0 - (x * (2.0 * std::f64::consts::PI).sqrt()).ln();
        assert!(rel_close(lq, lead, 1e-5));
    }

    #[test]
    #[allow(clippy::approx_constant)] // the truncated literal is the tested input
    fn q_matches_reference_at_negative_sqrt2() {
        let q = q_function(-1.41421356f64).unwrap().get();
        assert!(rel_close(q, Q_NEG_SQRT2, 1e-13), "{q}");
    }

    #[test]
    fn log_q_reference_values() {
        assert!(rel_close(log_q_function(0.0f64).unwrap(), 0.5f64.ln(), 1e-15));
        assert!(rel_close(log_q_function(8.0f64).unwrap(), LOG_Q_8, 1e-13));
        assert!(rel_close(log_q_function(-5.0f64).unwrap(), LOG_Q_NEG5, 1e-12));
    }

    #[test]
    fn log_q_survives_huge_arguments() {
        let lq = log_q_function(1.0e6f64).unwrap();
        assert!(lq.is_finite());
        assert!(lq < -4.9e11);
    }

    #[test]
    fn non_finite_arguments_are_domain_errors() {
        assert!(q_function(f64::NAN).is_err());
        assert!(q_function(f64::INFINITY).is_err());
        assert!(log_q_function(f64::NAN).is_err());
    }

    #[test]
    fn binary_entropy_examples() {
        let h = |p: f64| binary_entropy(Probability::new(p).unwrap()).get();
        assert_eq!(h(0.5), 1.0);
        assert_eq!(h(0.0), 0.0);
        assert_eq!(h(1.0), 0.0);
        assert!(rel_close(h(0.11), HB_011, 1e-14));
    }

    #[test]
    fn probability_rejects_out_of_range() {
        assert!(Probability::new(-0.01f64).is_err());
        assert!(Probability::new(1.01f64).is_err());
        assert!(Probability::new(f64::NAN).is_err());
    }

    #[test]
    fn xi_examples_and_domain() {
        assert_eq!(xi(1.0f64).unwrap(), 0.0);
        assert_eq!(xi(0.0f64).unwrap(), 0.0);
        assert!((xi(0.25f64).unwrap() - 0.5).abs() < 1e-15);
        assert!(xi(-0.1f64).is_err());
        assert!(xi(1.1f64).is_err());
    }

    #[test]
    fn entropy_hb_q_examples() {
        assert_eq!(entropy_hb_q(0.0f64, 3.0).unwrap().get(), 1.0);
        assert_eq!(entropy_hb_q(5.0f64, 0.0).unwrap().get(), 1.0);
        // k*beta -> infinity drives the entropy to zero
        assert_eq!(entropy_hb_q(1.0f64, 1e12).unwrap().get(), 0.0);
        let h = entropy_hb_q(2.0f64, 1.0).unwrap().get();
        assert!(rel_close(h, HB_Q_SQRT2, 1e-13));
        // same value through the public composition
        let composed = binary_entropy(q_function(2.0f64.sqrt()).unwrap()).get();
        assert!(rel_close(h, composed, 1e-13));
        assert!(entropy_hb_q(-1.0f64, 1.0).is_err());
        assert!(entropy_hb_q(1.0f64, -1.0).is_err());
    }

    #[test]
    fn entropy_hb_q_huge_arguments_stay_finite() {
        for kb in [1e4f64, 1e5, 1e6] {
            let h = entropy_hb_q(kb, 1.0).unwrap().get();
            assert!(h.is_finite() && h >= 0.0, "k*beta={kb} gave {h}");
        }
    }

    #[test]
    fn d_reference_value() {
        let d = d_derivative(1.0f64, 1.0).unwrap();
        assert!(rel_close(d, D_1_1, 1e-13), "{d}");
    }

    #[test]
    fn d_small_beta_limit() {
        let d = d_derivative(1.0f64, 1e-12).unwrap();
        assert!(rel_close(d, NEG_INV_PI_LN2, 1e-5), "{d}");
        for k in [0.3f64, 1.0, 7.5] {
            let lim = d_derivative_at_zero(k).unwrap();
            assert!(rel_close(lim, k * NEG_INV_PI_LN2, 1e-14));
            let d = d_derivative(k, 1e-12).unwrap();
            assert!(rel_close(d, lim, 1e-5));
        }
    }

    #[test]
    fn d_huge_argument_underflows_without_nan() {
        let d = d_derivative(1.0f64, 1e4).unwrap();
        assert!(!d.is_nan());
        assert!(d.is_sign_negative());
        assert!(d.abs() < 1e-100);
    }

    #[test]
    fn d_rejects_non_positive_arguments() {
        assert!(d_derivative(0.0f64, 1.0).is_err());
        assert!(d_derivative(1.0f64, 0.0).is_err());
        assert!(d_derivative(-1.0f64, 1.0).is_err());
    }

    #[test]
    fn entropy_strictly_decreasing_in_beta() {
        let k = 2.0f64;
        let mut prev = entropy_hb_q(k, 1e-4).unwrap().get();
        let mut beta = 1e-4f64;
        while beta < 50.0 {
            beta *= 1.6;
            let h = entropy_hb_q(k, beta).unwrap().get();
            assert!(h < prev, "entropy not decreasing at beta={beta}");
            prev = h;
        }
    }

    fn centered_fd(k: f64, beta: f64) -> f64 {
        let h_rel = (5e-3 / (k * beta)).clamp(1e-6, 1e-3);
        let h = beta * h_rel;
        (entropy_hb_q_raw(k, beta + h) - entropy_hb_q_raw(k, beta - h)) / (2.0 * h)
    }

    #[test]
    fn d_matches_finite_difference_spot() {
        let d = d_derivative(1.0f64, 1.0).unwrap();
        let fd = centered_fd(1.0, 1.0);
        assert!(rel_close(d, fd, 1e-6));
    }

    #[test]
    fn f32_smoke() {
        assert_eq!(q_function(0.0f32).unwrap().get(), 0.5);
        let q = q_function(1.0f32).unwrap().get();
        assert!((q - 0.158655).abs() < 1e-5);
        let s = q_function(1.7f32).unwrap().get() + q_function(-1.7f32).unwrap().get();
        assert!((s - 1.0).abs() < 1e-6);
        assert_eq!(binary_entropy(Probability::new(0.5f32).unwrap()).get(), 1.0);
    }

    proptest! {
        #[test]
        fn q_symmetry(x in -40.0f64..40.0) {
            let s = q_raw(x) + q_raw(-x);
            prop_assert!((s - 1.0).abs() <= 1e-14);
        }

        // strict only where neither side saturates at 0 or 1
        #[test]
        fn q_monotone_decreasing(x in -8.0f64..7.9) {
            prop_assert!(q_raw(x + 0.1) < q_raw(x));
        }

        #[test]
        fn binary_entropy_symmetric(p in 0.0f64..=1.0) {
            let a = binary_entropy(Probability::new(p).unwrap()).get();
            let b = binary_entropy(Probability::new(1.0 - p).unwrap()).get();
            prop_assert!((a - b).abs() <= 1e-14);
        }

        #[test]
        fn d_matches_finite_difference(
            lk in -3.0f64..3.0,
            lb in -3.0f64..3.0,
        ) {
            let (k, beta) = (10f64.powf(lk), 10f64.powf(lb));
            prop_assume!(k * beta <= 1e3);
            let d = d_raw(k, beta);
            let fd = centered_fd(k, beta);
            prop_assert!((d - fd).abs() <= 1e-5 * d.abs(), "k={k} beta={beta} d={d} fd={fd}");
        }

        #[test]
        fn log_q_consistent_with_q(x in -8.0f64..35.0) {
            let lq = log_q_raw(x);
            let q = q_raw(x);
            prop_assert!((lq.exp() - q).abs() <= 1e-14 * q.abs().max(1e-300));
        }
    }
}
