//! Compensated (Neumaier) summation for the quadrature accumulators, so
//! results do not depend on evaluation order beyond one or two ulps.

use crate::Float;

#[derive(Debug, Clone, Copy)]
pub(crate) struct NeumaierSum<F> {
    sum: F,
    comp: F,
}

impl<F: Float> NeumaierSum<F> {
    pub fn new() -> Self {
        Self { sum: F::zero(), comp: F::zero() }
    }

    pub fn add(&mut self, v: F) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> F {
        self.sum + self.comp
    }
}
