//! Compensated floating-point accumulation.
//!
//! Every mean/variance in this crate funnels through these helpers so that
//! results are independent of accumulation order at the 1e-12 level.

/// Streaming Neumaier-compensated accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct NeumaierSum {
    sum: f64,
    compensation: f64,
    count: usize,
}

impl NeumaierSum {
    pub(crate) fn new() -> Self {
        Self::default()
    }

    pub(crate) fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.compensation += (self.sum - t) + v;
        } else {
            self.compensation += (v - t) + self.sum;
        }
        self.sum = t;
        self.count += 1;
    }

    pub(crate) fn total(&self) -> f64 {
        self.sum + self.compensation
    }

    /// Mean of everything added so far; caller guarantees at least one add.
    pub(crate) fn mean(&self) -> f64 {
        debug_assert!(self.count > 0, "mean of empty accumulator");
        self.total() / self.count as f64
    }
}

/// Neumaier-compensated sum.
pub(crate) fn compensated_sum<I>(values: I) -> f64
where
    I: IntoIterator<Item = f64>,
{
    let mut acc = NeumaierSum::new();
    for v in values {
        acc.add(v);
    }
    acc.total()
}

/// Compensated arithmetic mean. Caller guarantees a non-empty iterator.
pub(crate) fn compensated_mean<I>(values: I) -> f64
where
    I: IntoIterator<Item = f64>,
{
    let mut n = 0usize;
    let sum = compensated_sum(values.into_iter().inspect(|_| n += 1));
    debug_assert!(n > 0, "mean of empty input");
    sum / n as f64
}
