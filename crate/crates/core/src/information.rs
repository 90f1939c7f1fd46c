//! Mutual-information integrals and the closed-form capacities.
//!
//! Communication MI conditions on the fading state known at the receiver:
//! `I(X; Y_c | H_c) = H(Y_c | H_c) - H(Y_c | H_c, X)`. Sensing MI measures
//! what the quantized echo reveals about the fading coefficient itself:
//! `I(H_s; Y_s | X) = H(Y_s | X) - H(Y_s | H_s, X)`. Both are evaluated as
//! deterministic quadrature sums over a [`FadingGrid`] and the input
//! constellation; Monte-Carlo appears only as a test oracle.
//!
//! For any constant-amplitude input that is invariant under quarter
//! rotations, both MIs collapse to the same closed form
//!
//! `C(P) = 2 - E{ H_b(Q(sqrt(Γ P cos²Θ / (σ²/2)))) + H_b(Q(sqrt(Γ P sin²Θ / (σ²/2)))) }`,
//!
//! and the communication/sensing capacity region is the rectangle with
//! corner `(C_comm(P), C_sense(P))` — the tests verify the collapse
//! numerically rather than assuming it.

use serde::Serialize;

use crate::distributions::{DiscreteInputDistribution, FadingGrid, PowerValue};
use crate::power_control::{integrate_policy_states, PowerControlPolicy};
use crate::quantized_channel::{letter_pmf, output_pmf_sense, ChannelParams};
use crate::scalar_math::{entropy_hb_q_raw, Rate};
use crate::{accum::NeumaierSum, lit, Error, Float, Result};

/// A mutual-information value together with its two entropy terms.
#[derive(Debug, Clone, Copy)]
pub struct MutualInformationResult<F> {
    pub value: Rate<F>,
    pub h_output: Rate<F>,
    pub h_output_given_state: Rate<F>,
}

impl<F: Float> MutualInformationResult<F> {
    fn new(h_output: F, h_output_given_state: F) -> Result<Self> {
        Ok(Self {
            value: Rate::new(h_output - h_output_given_state)?,
            h_output: Rate::new(h_output)?,
            h_output_given_state: Rate::new(h_output_given_state)?,
        })
    }
}

/// `sum_l xi(p_l)` over a four-letter PMF, in bits.
fn xi_sum<F: Float>(pmf: [F; 4]) -> F {
    let mut acc = F::zero();
    for p in pmf {
        if p > F::zero() {
            acc -= p * p.log2();
        }
    }
    acc
}

fn check_sigma<F: Float>(name: &str, sigma_sq: F) -> Result<()> {
    if !sigma_sq.is_finite() || sigma_sq <= F::zero() {
        return Err(Error::Domain(format!("{name} must be finite and > 0, got {sigma_sq}")));
    }
    Ok(())
}

/// Communication mutual information `I(X; Y_c | H_c)` of the given input.
pub fn cmi<F: Float>(
    input: &DiscreteInputDistribution<F>,
    grid: &FadingGrid<F>,
    sigma_c_sq: F,
) -> Result<MutualInformationResult<F>> {
    check_sigma("sigma_c_sq", sigma_c_sq)?;
    let mut h_out = NeumaierSum::new();
    let mut h_cond = NeumaierSum::new();
    for (h, w) in grid.iter_states() {
        let mut mix = [F::zero(); 4];
        for (x, p) in input.iter() {
            let pmf = letter_pmf(h * x, sigma_c_sq);
            h_cond.add(w * p * xi_sum(pmf));
            for l in 0..4 {
                mix[l] += p * pmf[l];
            }
        }
        h_out.add(w * xi_sum(mix));
    }
    MutualInformationResult::new(h_out.value(), h_cond.value())
}

/// Sensing mutual information `I(H_s; Y_s | X)` of the given input.
pub fn smi<F: Float>(
    input: &DiscreteInputDistribution<F>,
    grid: &FadingGrid<F>,
    sigma_s_sq: F,
) -> Result<MutualInformationResult<F>> {
    check_sigma("sigma_s_sq", sigma_s_sq)?;
    let mut h_out = NeumaierSum::new();
    let mut h_cond = NeumaierSum::new();
    for (x, p) in input.iter() {
        let pmf = output_pmf_sense(x, grid, sigma_s_sq)?;
        h_out.add(p * xi_sum(pmf.probs()));
        let mut cond = NeumaierSum::new();
        for (h, w) in grid.iter_states() {
            cond.add(w * xi_sum(letter_pmf(h * x, sigma_s_sq)));
        }
        h_cond.add(p * cond.value());
    }
    MutualInformationResult::new(h_out.value(), h_cond.value())
}

/// The fading-averaged entropy penalty in the closed forms:
/// `E{H_b(Q(sqrt(Γ P cos²Θ / (σ²/2)))) + H_b(Q(sqrt(Γ P sin²Θ / (σ²/2))))}`.
pub(crate) fn entropy_penalty_raw<F: Float>(power: F, sigma_sq: F, grid: &FadingGrid<F>) -> F {
    let half_sigma = sigma_sq / lit::<F>(2.0);
    let mut acc = NeumaierSum::new();
    for (gamma, theta, w) in grid.iter_polar() {
        let c2 = theta.cos().powi(2);
        let s2 = theta.sin().powi(2);
        let h = entropy_hb_q_raw(gamma * c2 / half_sigma, power)
            + entropy_hb_q_raw(gamma * s2 / half_sigma, power);
        acc.add(w * h);
    }
    acc.value()
}

pub(crate) fn c_closed_raw<F: Float>(power: F, sigma_sq: F, grid: &FadingGrid<F>) -> F {
    lit::<F>(2.0) - entropy_penalty_raw(power, sigma_sq, grid)
}

/// Closed-form communication capacity of the 1-bit link at average power `P`.
pub fn c_comm_closed_form<F: Float>(
    p: PowerValue<F>,
    sigma_c_sq: F,
    grid: &FadingGrid<F>,
) -> Result<Rate<F>> {
    check_sigma("sigma_c_sq", sigma_c_sq)?;
    Rate::new(c_closed_raw(p.get(), sigma_c_sq, grid))
}

/// Closed-form sensing capacity of the 1-bit echo at average power `P`.
pub fn c_sense_closed_form<F: Float>(
    p: PowerValue<F>,
    sigma_s_sq: F,
    grid: &FadingGrid<F>,
) -> Result<Rate<F>> {
    check_sigma("sigma_s_sq", sigma_s_sq)?;
    Rate::new(c_closed_raw(p.get(), sigma_s_sq, grid))
}

/// Corner of the rectangular communication-sensing capacity region:
/// `(C_comm(P), C_sense(P))`. Both coordinates are achieved simultaneously.
pub fn capacity_region<F: Float>(
    p: PowerValue<F>,
    params: &ChannelParams<F>,
    grid: &FadingGrid<F>,
) -> Result<(Rate<F>, Rate<F>)> {
    Ok((
        c_comm_closed_form(p, params.sigma_c_sq(), grid)?,
        c_sense_closed_form(p, params.sigma_s_sq(), grid)?,
    ))
}

/// Communication rate when the fading state is also known at the
/// transmitter: the transmit phase pre-rotates against the channel phase,
/// removing the phase expectation, and power follows the policy:
///
/// `R = 2 - 2 E_Γ{ H_b(Q(sqrt(Γ P_Γ / σ_c²))) }`.
pub fn c_comm_csit<F: Float>(
    policy: &PowerControlPolicy<F>,
    sigma_c_sq: F,
    grid: &FadingGrid<F>,
) -> Result<Rate<F>> {
    check_sigma("sigma_c_sq", sigma_c_sq)?;
    if !policy.grid().same_shape(grid) {
        return Err(Error::Contract(
            "policy is not defined on the supplied grid (node counts differ)".into(),
        ));
    }
    let two = lit::<F>(2.0);
    let r = integrate_policy_states(policy, |gamma, power| {
        if power > F::zero() {
            two - two * entropy_hb_q_raw(gamma / sigma_c_sq, power)
        } else {
            F::zero()
        }
    })?;
    Rate::new(r)
}

/// One row of the capacity-versus-power table exposed to the CLI.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CapacityRecord {
    #[serde(rename = "P")]
    pub p: f64,
    pub sigma_c_sq: f64,
    pub sigma_s_sq: f64,
    #[serde(rename = "C_comm")]
    pub c_comm: f64,
    #[serde(rename = "C_sense")]
    pub c_sense: f64,
}
