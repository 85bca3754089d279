//! Compensated accumulators. Results depend only on the order of `add`
//! calls, so a fixed traversal order gives bit-identical sums.

/// Neumaier's variant of Kahan summation.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }

    fn scale(&mut self, factor: f64) {
        self.sum *= factor;
        self.compensation *= factor;
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = NeumaierSum::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

/// Accumulates `log Σ exp(x_i)` without overflow.
///
/// Terms are stored relative to a reference exponent that is raised only
/// when a term exceeds it by more than `RESCALE_GAP`, so a run of equal
/// terms sums exactly.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LogSumExp {
    reference: f64,
    terms: NeumaierSum,
    count: u64,
}

const RESCALE_GAP: f64 = 30.0;

impl LogSumExp {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        self.add_scaled(x, 1.0, 1);
    }

    /// Adds `mass * exp(x)` counting as `count` terms.
    fn add_scaled(&mut self, x: f64, mass: f64, count: u64) {
        if self.count == 0 {
            self.reference = x;
        } else if x > self.reference + RESCALE_GAP {
            self.terms.scale((self.reference - x).exp());
            self.reference = x;
        }
        self.terms.add(mass * (x - self.reference).exp());
        self.count += count;
    }

    pub fn merge(&mut self, other: &LogSumExp) {
        if other.count == 0 {
            return;
        }
        self.add_scaled(other.reference, other.terms.value(), other.count);
    }

    /// `log Σ exp(x_i)`; negative infinity when empty.
    pub fn ln(&self) -> f64 {
        if self.count == 0 {
            f64::NEG_INFINITY
        } else {
            self.reference + self.terms.value().ln()
        }
    }
}
