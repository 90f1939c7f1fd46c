//! Input constellations and the fading-state quadrature grid.
//!
//! Channel inputs are finite complex constellations with probabilities.
//! Quarter-turn rotations (`z -> j z`) are carried out exactly on the
//! component pair, so the π/2-symmetrization transform and its idempotence
//! hold to machine precision and duplicate points from exact rotation
//! orbits merge cleanly.
//!
//! The fading coefficient `H ~ CN(0,1)` is represented in polar form: the
//! squared magnitude `Γ ~ Exp(1)` gets a Gauss-Laguerre rule, and the phase
//! gets a Gauss-Legendre rule on `[0, π/2)` — every integrand in this crate
//! depends on the phase only through the pair `(cos²Θ, sin²Θ)`, which is
//! π/2-periodic, so one quadrant of phase suffices.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::quadrature::{gauss_gen_laguerre, gauss_legendre};
use crate::{accum::NeumaierSum, lit, Error, Float, Result};

/// Non-negative average power.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct PowerValue<F>(F);

impl<F: Float> PowerValue<F> {
    pub fn new(value: F) -> Result<Self> {
        if !value.is_finite() || value < F::zero() {
            return Err(Error::Domain(format!("power must be finite and >= 0, got {value}")));
        }
        Ok(Self(value))
    }

    pub fn get(self) -> F {
        self.0
    }
}

/// Exact quarter-turn rotation `z * e^(j pi/2)`.
pub(crate) fn rotate_quarter<F: Float>(z: Complex<F>) -> Complex<F> {
    Complex::new(-z.im, z.re)
}

/// Exact rotation by `e^(j pi k / 2)` for any integer `k`.
pub(crate) fn rotate_quarters<F: Float>(z: Complex<F>, k: i32) -> Complex<F> {
    match k.rem_euclid(4) {
        0 => z,
        1 => rotate_quarter(z),
        2 => Complex::new(-z.re, -z.im),
        _ => Complex::new(z.im, -z.re),
    }
}

/// A finite set of complex constellation points with probabilities.
///
/// Construction normalizes the representation: points closer than the merge
/// tolerance (`1e-9` in absolute complex distance) are combined and the list
/// is sorted by real then imaginary part.
#[derive(Debug, Clone)]
pub struct DiscreteInputDistribution<F> {
    points: Vec<Complex<F>>,
    probs: Vec<F>,
}

/// On-disk form: `{"points": [[re, im], ...], "probs": [p, ...]}`.
#[derive(Debug, Serialize, Deserialize)]
pub struct ConstellationJson {
    pub points: Vec<[f64; 2]>,
    pub probs: Vec<f64>,
}

const MERGE_TOL: f64 = 1e-9;

impl<F: Float> DiscreteInputDistribution<F> {
    pub fn new(points: Vec<Complex<F>>, probs: Vec<F>) -> Result<Self> {
        if points.len() != probs.len() || points.is_empty() {
            return Err(Error::Contract(format!(
                "need equally many points and probabilities (got {} and {})",
                points.len(),
                probs.len()
            )));
        }
        for z in &points {
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(Error::Domain("constellation points must be finite".into()));
            }
        }
        let mut sum = NeumaierSum::new();
        for &p in &probs {
            if !p.is_finite() || p < F::zero() {
                return Err(Error::Domain(format!("probabilities must be >= 0, got {p}")));
            }
            sum.add(p);
        }
        if (sum.value() - F::one()).abs() > lit(1e-12) {
            return Err(Error::Contract(format!(
                "probabilities must sum to 1 within 1e-12, got {}",
                sum.value()
            )));
        }

        // canonical merge: O(n^2) nearest-match, fine at constellation sizes
        let tol: F = lit(MERGE_TOL);
        let mut mpts: Vec<Complex<F>> = Vec::with_capacity(points.len());
        let mut mpr: Vec<F> = Vec::with_capacity(points.len());
        for (z, p) in points.into_iter().zip(probs) {
            match mpts.iter().position(|c| (*c - z).norm() <= tol) {
                Some(i) => mpr[i] += p,
                None => {
                    mpts.push(z);
                    mpr.push(p);
                }
            }
        }
        let mut order: Vec<usize> = (0..mpts.len()).collect();
        order.sort_by(|&a, &b| {
            (mpts[a].re, mpts[a].im)
                .partial_cmp(&(mpts[b].re, mpts[b].im))
                .expect("finite points are totally ordered")
        });
        Ok(Self {
            points: order.iter().map(|&i| mpts[i]).collect(),
            probs: order.iter().map(|&i| mpr[i]).collect(),
        })
    }

    /// `M` equiprobable points `amplitude * e^(j(2 pi m / M + offset))`.
    pub fn psk(order: usize, amplitude: F, phase_offset: F) -> Result<Self> {
        if order < 2 {
            return Err(Error::Domain(format!("PSK order must be >= 2, got {order}")));
        }
        if !amplitude.is_finite() || amplitude < F::zero() {
            return Err(Error::Domain("PSK amplitude must be finite and >= 0".into()));
        }
        let m = F::from_usize(order).unwrap();
        let p = m.recip();
        let mut points = Vec::with_capacity(order);
        for i in 0..order {
            let phase = lit::<F>(2.0) * F::PI() * F::from_usize(i).unwrap() / m + phase_offset;
            points.push(Complex::new(amplitude * phase.cos(), amplitude * phase.sin()));
        }
        Self::new(points, vec![p; order])
    }

    /// Single deterministic point.
    pub fn point_mass(z: Complex<F>) -> Result<Self> {
        Self::new(vec![z], vec![F::one()])
    }

    pub fn points(&self) -> &[Complex<F>] {
        &self.points
    }

    pub fn probs(&self) -> &[F] {
        &self.probs
    }

    pub fn iter(&self) -> impl Iterator<Item = (Complex<F>, F)> + '_ {
        self.points.iter().copied().zip(self.probs.iter().copied())
    }

    /// Equal mixture of the four quarter-turn rotations of this
    /// distribution. Idempotent, power-preserving, and always π/2-symmetric.
    pub fn symmetrize(&self) -> Self {
        let quarter = lit::<F>(0.25);
        let mut points = Vec::with_capacity(self.points.len() * 4);
        let mut probs = Vec::with_capacity(self.points.len() * 4);
        for k in 0..4 {
            for (z, p) in self.iter() {
                points.push(rotate_quarters(z, k));
                probs.push(p * quarter);
            }
        }
        Self::new(points, probs).expect("rotation mixture of a valid distribution is valid")
    }

    /// Rotate every point by `e^(j pi k / 2)` (exact arithmetic).
    pub fn rotated_quarters(&self, k: i32) -> Self {
        let points = self.points.iter().map(|&z| rotate_quarters(z, k)).collect();
        Self::new(points, self.probs.clone()).expect("rotation preserves validity")
    }

    /// True iff a quarter-turn rotation maps the weighted point set to
    /// itself within `tol` (matched pairwise on position and probability).
    pub fn is_pi2_symmetric(&self, tol: F) -> bool {
        let rotated = self.rotated_quarters(1);
        if rotated.points.len() != self.points.len() {
            return false;
        }
        let mut used = vec![false; self.points.len()];
        for (z, p) in rotated.iter() {
            let hit = self.iter().enumerate().position(|(i, (c, q))| {
                !used[i] && (c - z).norm() <= tol && (q - p).abs() <= tol
            });
            match hit {
                Some(i) => used[i] = true,
                None => return false,
            }
        }
        true
    }

    /// Average transmit power `sum_i p_i |x_i|^2`.
    pub fn average_power(&self) -> PowerValue<F> {
        let mut sum = NeumaierSum::new();
        for (z, p) in self.iter() {
            sum.add(p * z.norm_sqr());
        }
        PowerValue(sum.value().max(F::zero()))
    }

    pub fn from_json_str(text: &str) -> Result<Self>
    where
        F: Float,
    {
        let raw: ConstellationJson = serde_json::from_str(text)
            .map_err(|e| Error::Contract(format!("constellation JSON: {e}")))?;
        Self::try_from(raw)
    }

    pub fn to_json(&self) -> ConstellationJson {
        ConstellationJson {
            points: self
                .points
                .iter()
                .map(|z| [z.re.to_f64().unwrap(), z.im.to_f64().unwrap()])
                .collect(),
            probs: self.probs.iter().map(|p| p.to_f64().unwrap()).collect(),
        }
    }
}

impl<F: Float> TryFrom<ConstellationJson> for DiscreteInputDistribution<F> {
    type Error = Error;

    fn try_from(raw: ConstellationJson) -> Result<Self> {
        if raw.points.len() != raw.probs.len() {
            return Err(Error::Contract(format!(
                "field \"points\" has {} entries but \"probs\" has {}",
                raw.points.len(),
                raw.probs.len()
            )));
        }
        let points = raw
            .points
            .iter()
            .map(|&[re, im]| Complex::new(lit::<F>(re), lit::<F>(im)))
            .collect();
        let probs = raw.probs.iter().map(|&p| lit::<F>(p)).collect();
        Self::new(points, probs)
    }
}

/// Quadrature representation of the CN(0,1) fading state in polar form.
///
/// `gamma` carries Gauss-Laguerre nodes/weights for `Γ ~ Exp(1)`; `theta`
/// carries Gauss-Legendre nodes/weights for a uniform phase on `[0, π/2)`.
/// Weights are probability-normalized (each set sums to one).
#[derive(Debug, Clone)]
pub struct FadingGrid<F> {
    gamma_nodes: Vec<F>,
    gamma_weights: Vec<F>,
    theta_nodes: Vec<F>,
    theta_weights: Vec<F>,
    // Rule for u = Γ cos²Θ (density e^-u / sqrt(pi u)); the power-control
    // solver integrates the sensing marginal-gain expectation in this
    // variable.
    sense_u_nodes: Vec<F>,
    sense_u_weights: Vec<F>,
}

pub const MIN_GRID_NODES: usize = 8;

impl<F: Float> FadingGrid<F> {
    pub fn build(n_gamma: usize, n_theta: usize) -> Result<Self> {
        if n_gamma < MIN_GRID_NODES || n_theta < MIN_GRID_NODES {
            return Err(Error::Domain(format!(
                "fading grid needs at least {MIN_GRID_NODES} nodes per dimension, got {n_gamma} x {n_theta}"
            )));
        }
        let (gamma_nodes, gamma_weights) = gauss_gen_laguerre(n_gamma, 0.0)?;
        let (u, w) = gauss_legendre::<F>(n_theta)?;
        let quarter_pi = F::PI() / lit::<F>(4.0);
        let theta_nodes: Vec<F> = u.iter().map(|&t| (t + F::one()) * quarter_pi).collect();
        let theta_weights: Vec<F> = w.iter().map(|&wi| wi / lit::<F>(2.0)).collect();
        let (sense_u_nodes, sense_u_weights) = gauss_gen_laguerre(n_gamma, -0.5)?;
        Ok(Self {
            gamma_nodes,
            gamma_weights,
            theta_nodes,
            theta_weights,
            sense_u_nodes,
            sense_u_weights,
        })
    }

    pub fn n_gamma(&self) -> usize {
        self.gamma_nodes.len()
    }

    pub fn n_theta(&self) -> usize {
        self.theta_nodes.len()
    }

    pub fn gamma_nodes(&self) -> &[F] {
        &self.gamma_nodes
    }

    pub fn gamma_weights(&self) -> &[F] {
        &self.gamma_weights
    }

    pub fn theta_nodes(&self) -> &[F] {
        &self.theta_nodes
    }

    pub fn theta_weights(&self) -> &[F] {
        &self.theta_weights
    }

    pub(crate) fn sense_u_nodes(&self) -> &[F] {
        &self.sense_u_nodes
    }

    pub(crate) fn sense_u_weights(&self) -> &[F] {
        &self.sense_u_weights
    }

    /// Iterate `(gamma, theta, weight)` over the product rule.
    pub fn iter_polar(&self) -> impl Iterator<Item = (F, F, F)> + '_ {
        self.gamma_nodes.iter().zip(&self.gamma_weights).flat_map(move |(&g, &wg)| {
            self.theta_nodes
                .iter()
                .zip(&self.theta_weights)
                .map(move |(&t, &wt)| (g, t, wg * wt))
        })
    }

    /// Iterate `(h, weight)` over fading realizations `h = sqrt(Γ) e^(jΘ)`.
    pub fn iter_states(&self) -> impl Iterator<Item = (Complex<F>, F)> + '_ {
        self.iter_polar()
            .map(|(g, t, w)| (Complex::from_polar(g.sqrt(), t), w))
    }

    /// Structural equality within floating tolerance; used to check that a
    /// policy's grid matches a caller-provided grid.
    pub fn same_shape(&self, other: &Self) -> bool {
        self.n_gamma() == other.n_gamma() && self.n_theta() == other.n_theta()
    }
}
