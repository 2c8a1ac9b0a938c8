//! Compensated summation.

use crate::C64;

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Compensated {
    sum: f64,
    carry: f64,
}

impl Compensated {
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn merge(&mut self, other: &Compensated) {
        self.add(other.sum);
        self.add(other.carry);
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Componentwise compensated accumulator for complex vectors.
#[derive(Debug, Clone)]
pub(crate) struct CompensatedVec {
    re: Vec<Compensated>,
    im: Vec<Compensated>,
}

impl CompensatedVec {
    pub(crate) fn zeros(dim: usize) -> Self {
        Self { re: vec![Compensated::default(); dim], im: vec![Compensated::default(); dim] }
    }

    pub(crate) fn add_scaled(&mut self, xs: &[C64], w: C64) {
        for (k, x) in xs.iter().enumerate() {
            let v = x * w;
            self.re[k].add(v.re);
            self.im[k].add(v.im);
        }
    }

    pub(crate) fn merge(&mut self, other: &CompensatedVec) {
        for k in 0..self.re.len() {
            self.re[k].merge(&other.re[k]);
            self.im[k].merge(&other.im[k]);
        }
    }

    pub(crate) fn values(&self) -> Vec<C64> {
        self.re.iter().zip(&self.im).map(|(r, i)| C64::new(r.value(), i.value())).collect()
    }
}

/// Sums a slice in order with compensation.
pub(crate) fn compensated_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = Compensated::default();
    for x in xs {
        acc.add(x);
    }
    acc.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_cancelled_mass() {
        let xs = [1e16, 1.0, -1e16, 1.0];
        assert_eq!(compensated_sum(xs), 2.0);
    }
}
