//! The 1-bit I/Q quantizer and its channel law.
//!
//! The quantizer keeps only `(sign Re, sign Im)`, so the output alphabet is
//! the four unit-magnitude quadrant representatives
//! `y_l = e^(j(π/4 + π l/2))`, `l ∈ {0,1,2,3}`. Given a noiseless point `z`
//! and complex noise of total variance σ² (σ²/2 per component), the two
//! sign decisions are conditionally independent, so the letter probability
//! factorizes into two Gaussian tails:
//!
//! `W_l(z) = Q(-s_I(l) Re z / (σ/√2)) * Q(-s_Q(l) Im z / (σ/√2))`
//!
//! with `s_I, s_Q ∈ {±1}` the quadrant signs of `y_l`. Only the signs of
//! `Re y_l, Im y_l` enter — their common magnitude `1/√2` is absorbed into
//! the sign decision, which is the normalization that reproduces the
//! closed-form capacities downstream.
//!
//! Rotating the input by `-π k/2` shifts the output letter index by `k`
//! modulo 4; that identity is exercised heavily by the property tests and
//! is what makes one phase quadrant of fading statistics sufficient.
//!
//! [`simulate`] is an intentionally independent Monte-Carlo path (sampling
//! and counting instead of quadrature) used as an oracle for everything
//! built on [`channel_law`].

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::distributions::{DiscreteInputDistribution, FadingGrid};
use crate::scalar_math::{q_raw, Probability};
use crate::{accum::NeumaierSum, lit, Error, Float, Result};

/// One of the four quantizer output letters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct QuantizedSymbol {
    index: u8,
}

impl QuantizedSymbol {
    pub fn new(index: usize) -> Result<Self> {
        if index > 3 {
            return Err(Error::Domain(format!("letter index must be in 0..=3, got {index}")));
        }
        Ok(Self { index: index as u8 })
    }

    pub fn index(self) -> usize {
        self.index as usize
    }

    /// All four letters in index order.
    pub fn alphabet() -> [Self; 4] {
        [0, 1, 2, 3].map(|i| Self { index: i })
    }

    /// Modulo-4 index shift `l ⊕ k`.
    pub fn shifted(self, k: i32) -> Self {
        Self { index: (i32::from(self.index) + k).rem_euclid(4) as u8 }
    }

    /// Quadrant signs `(sign Re y_l, sign Im y_l)`.
    pub fn quadrant_signs(self) -> (i8, i8) {
        match self.index {
            0 => (1, 1),
            1 => (-1, 1),
            2 => (-1, -1),
            _ => (1, -1),
        }
    }

    /// The representative point `y_l = e^(j(π/4 + π l/2))`.
    pub fn point<F: Float>(self) -> Complex<F> {
        let c = F::FRAC_1_SQRT_2();
        let (si, sq) = self.quadrant_signs();
        let sgn = |s: i8| if s > 0 { c } else { -c };
        Complex::new(sgn(si), sgn(sq))
    }
}

/// Noise powers of the two links and the average transmit power budget.
#[derive(Debug, Clone, Copy)]
pub struct ChannelParams<F> {
    sigma_c_sq: F,
    sigma_s_sq: F,
    power_budget: F,
}

impl<F: Float> ChannelParams<F> {
    pub fn new(sigma_c_sq: F, sigma_s_sq: F, power_budget: F) -> Result<Self> {
        for (name, v) in [("sigma_c_sq", sigma_c_sq), ("sigma_s_sq", sigma_s_sq)] {
            if !v.is_finite() || v <= F::zero() {
                return Err(Error::Domain(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        if !power_budget.is_finite() || power_budget < F::zero() {
            return Err(Error::Domain(format!(
                "power_budget must be finite and >= 0, got {power_budget}"
            )));
        }
        Ok(Self { sigma_c_sq, sigma_s_sq, power_budget })
    }

    pub fn sigma_c_sq(&self) -> F {
        self.sigma_c_sq
    }

    pub fn sigma_s_sq(&self) -> F {
        self.sigma_s_sq
    }

    pub fn power_budget(&self) -> F {
        self.power_budget
    }
}

/// A probability vector over the four output letters.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct OutputPmf<F> {
    probs: [F; 4],
}

impl<F: Float> OutputPmf<F> {
    pub fn new(probs: [F; 4]) -> Result<Self> {
        let mut sum = F::zero();
        for &p in &probs {
            if !p.is_finite() || p < -lit::<F>(1e-15) || p > F::one() + lit::<F>(1e-15) {
                return Err(Error::Contract(format!("letter probability out of range: {p}")));
            }
            sum += p;
        }
        if (sum - F::one()).abs() > lit(1e-12) {
            return Err(Error::Contract(format!("output PMF must sum to 1 within 1e-12, got {sum}")));
        }
        Ok(Self { probs: probs.map(|p| p.max(F::zero()).min(F::one())) })
    }

    pub fn probs(&self) -> [F; 4] {
        self.probs
    }

    pub fn prob(&self, l: QuantizedSymbol) -> F {
        self.probs[l.index()]
    }
}

/// Map a noiseless complex observation to its quadrant letter. Zero
/// components count as positive (a fixed, measure-zero tie convention).
pub fn quantize<F: Float>(v: Complex<F>) -> Result<QuantizedSymbol> {
    if !v.re.is_finite() || !v.im.is_finite() {
        return Err(Error::Domain(format!("cannot quantize non-finite value {v}")));
    }
    let re_neg = v.re < F::zero();
    let im_neg = v.im < F::zero();
    let index = match (re_neg, im_neg) {
        (false, false) => 0,
        (true, false) => 1,
        (true, true) => 2,
        (false, true) => 3,
    };
    Ok(QuantizedSymbol { index })
}

/// The four letter probabilities for noiseless point `z` under noise power
/// `sigma_sq`, as one factorized evaluation. The I/Q complements are formed
/// exactly, so the vector sums to one to machine precision.
pub(crate) fn letter_pmf<F: Float>(z: Complex<F>, sigma_sq: F) -> [F; 4] {
    let scale = (sigma_sq / lit::<F>(2.0)).sqrt().recip();
    let a = z.re * scale;
    let b = z.im * scale;
    let p_re_pos = q_raw(-a);
    let p_re_neg = F::one() - p_re_pos;
    let p_im_pos = q_raw(-b);
    let p_im_neg = F::one() - p_im_pos;
    [
        p_re_pos * p_im_pos,
        p_re_neg * p_im_pos,
        p_re_neg * p_im_neg,
        p_re_pos * p_im_neg,
    ]
}

/// `W_l(z)`: probability that the quantizer emits letter `l` when `z` is
/// sent over AWGN with total complex noise power `sigma_sq`.
pub fn channel_law<F: Float>(l: QuantizedSymbol, z: Complex<F>, sigma_sq: F) -> Result<Probability<F>> {
    if !sigma_sq.is_finite() || sigma_sq <= F::zero() {
        return Err(Error::Domain(format!("sigma_sq must be finite and > 0, got {sigma_sq}")));
    }
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::Domain(format!("channel_law input must be finite, got {z}")));
    }
    Probability::new(letter_pmf(z, sigma_sq)[l.index()])
}

/// Output PMF of the data link given the fading value `h_c`, mixing the
/// channel law over the input constellation.
pub fn output_pmf_comm<F: Float>(
    h_c: Complex<F>,
    input: &DiscreteInputDistribution<F>,
    sigma_c_sq: F,
) -> Result<OutputPmf<F>> {
    if !sigma_c_sq.is_finite() || sigma_c_sq <= F::zero() {
        return Err(Error::Domain(format!("sigma_c_sq must be finite and > 0, got {sigma_c_sq}")));
    }
    let mut acc = [NeumaierSum::new(), NeumaierSum::new(), NeumaierSum::new(), NeumaierSum::new()];
    for (x, p) in input.iter() {
        let pmf = letter_pmf(h_c * x, sigma_c_sq);
        for l in 0..4 {
            acc[l].add(p * pmf[l]);
        }
    }
    OutputPmf::new([acc[0].value(), acc[1].value(), acc[2].value(), acc[3].value()])
}

/// Output PMF of the sensing echo given the transmit symbol `x`, averaging
/// the channel law over the CN(0,1) fading state.
///
/// The grid stores one phase quadrant, so the full-circle average is formed
/// from the four exact quarter-turn replicas of each grid state. With
/// phase-uniform fading this PMF is uniform for every `x`; computing it
/// through the quadrature keeps that fact a test result rather than an
/// assumption.
pub fn output_pmf_sense<F: Float>(
    x: Complex<F>,
    fading: &FadingGrid<F>,
    sigma_s_sq: F,
) -> Result<OutputPmf<F>> {
    if !sigma_s_sq.is_finite() || sigma_s_sq <= F::zero() {
        return Err(Error::Domain(format!("sigma_s_sq must be finite and > 0, got {sigma_s_sq}")));
    }
    if !x.re.is_finite() || !x.im.is_finite() {
        return Err(Error::Domain(format!("sensing input must be finite, got {x}")));
    }
    let quarter = lit::<F>(0.25);
    let mut acc = [NeumaierSum::new(), NeumaierSum::new(), NeumaierSum::new(), NeumaierSum::new()];
    for (h, w) in fading.iter_states() {
        let z = h * x;
        for k in 0..4 {
            let pmf = letter_pmf(crate::distributions::rotate_quarters(z, k), sigma_s_sq);
            for l in 0..4 {
                acc[l].add(w * quarter * pmf[l]);
            }
        }
    }
    OutputPmf::new([acc[0].value(), acc[1].value(), acc[2].value(), acc[3].value()])
}

/// Draw `n` noisy observations of `h * x`, quantize each, and tally the
/// letters. Deterministic for a given seed (ChaCha8 stream).
pub fn simulate<F>(
    x: Complex<F>,
    h: Complex<F>,
    sigma_sq: F,
    n: u64,
    seed: u64,
) -> Result<[u64; 4]>
where
    F: Float,
    StandardNormal: Distribution<F>,
{
    if n == 0 {
        return Err(Error::Domain("simulate needs at least one sample".into()));
    }
    if !sigma_sq.is_finite() || sigma_sq <= F::zero() {
        return Err(Error::Domain(format!("sigma_sq must be finite and > 0, got {sigma_sq}")));
    }
    let z0 = h * x;
    let per_component = (sigma_sq / lit::<F>(2.0)).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = [0u64; 4];
    for _ in 0..n {
        let n_re: F = rng.sample(StandardNormal);
        let n_im: F = rng.sample(StandardNormal);
        let v = Complex::new(z0.re + per_component * n_re, z0.im + per_component * n_im);
        counts[quantize(v)?.index()] += 1;
    }
    Ok(counts)
}

/// Critical value of the chi-square distribution with 3 degrees of freedom
/// at significance 1e-3.
pub const CHI2_CRIT_3DF_P999: f64 = 16.26623619623813;

/// One Monte-Carlo-versus-analytic check case.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SimCheckCase {
    pub x: [f64; 2],
    pub h: [f64; 2],
    pub sigma_sq: f64,
}

/// Result of one chi-square goodness-of-fit comparison.
#[derive(Debug, Clone, Serialize)]
pub struct SimCheckResult {
    pub case: SimCheckCase,
    pub n: u64,
    pub seed: u64,
    pub counts: [u64; 4],
    pub expected: [f64; 4],
    pub z_scores: [f64; 4],
    pub chi2: f64,
    pub chi2_critical: f64,
    pub pass: bool,
}

/// The fixed seed battery: twenty `(x, h, σ²)` cases chosen so every letter
/// keeps a healthy expected count (chi-square validity).
pub fn sim_check_battery() -> Vec<SimCheckCase> {
    let cases: [([f64; 2], [f64; 2], f64); 20] = [
        ([0.0, 0.0], [1.0, 0.0], 1.0),
        ([1.0, 0.0], [1.0, 0.0], 1.0),
        ([0.0, 1.0], [1.0, 0.0], 1.0),
        ([0.71, 0.71], [1.0, 0.0], 1.0),
        ([1.0, 0.0], [0.0, 1.0], 1.0),
        ([1.0, 0.0], [-0.6, 0.3], 1.0),
        ([0.5, -0.5], [1.0, 0.0], 0.5),
        ([0.3, 0.4], [1.0, -1.0], 2.0),
        ([1.0, 1.0], [0.5, 0.25], 1.0),
        ([-0.8, 0.2], [0.9, 0.1], 1.5),
        ([0.2, 0.0], [1.0, 0.0], 0.25),
        ([0.0, -0.7], [0.8, -0.2], 1.0),
        ([1.2, 0.0], [0.5, 0.5], 2.0),
        ([0.6, 0.6], [-0.7, 0.0], 1.0),
        ([0.9, -0.3], [0.3, 0.6], 0.75),
        ([0.4, 0.8], [1.0, 0.0], 4.0),
        ([1.5, 0.0], [0.4, -0.4], 2.5),
        ([-0.5, -0.5], [0.6, 0.6], 1.0),
        ([0.25, 0.75], [1.1, -0.2], 1.25),
        ([1.0, -1.0], [0.2, 0.9], 3.0),
    ];
    cases.iter().map(|&(x, h, sigma_sq)| SimCheckCase { x, h, sigma_sq }).collect()
}

/// Run the battery: simulate each case with `n` samples and compare letter
/// frequencies against [`channel_law`] with a chi-square test at
/// significance 1e-3. Per-case seeds derive from `seed`.
pub fn run_sim_checks(seed: u64, n: u64) -> Result<Vec<SimCheckResult>> {
    let mut out = Vec::new();
    for (i, case) in sim_check_battery().into_iter().enumerate() {
        let x = Complex::new(case.x[0], case.x[1]);
        let h = Complex::new(case.h[0], case.h[1]);
        let case_seed = seed.wrapping_add(i as u64);
        let counts = simulate(x, h, case.sigma_sq, n, case_seed)?;
        let pmf = letter_pmf(h * x, case.sigma_sq);
        let nf = n as f64;
        let mut chi2 = 0.0;
        let mut expected = [0.0; 4];
        let mut z_scores = [0.0; 4];
        for l in 0..4 {
            let e = nf * pmf[l];
            expected[l] = e;
            let o = counts[l] as f64;
            chi2 += (o - e) * (o - e) / e;
            z_scores[l] = (o - e) / (e * (1.0 - pmf[l])).sqrt();
        }
        out.push(SimCheckResult {
            case,
            n,
            seed: case_seed,
            counts,
            expected,
            z_scores,
            chi2,
            chi2_critical: CHI2_CRIT_3DF_P999,
            pass: chi2 < CHI2_CRIT_3DF_P999,
        });
    }
    Ok(out)
}
