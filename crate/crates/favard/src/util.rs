//! Small numeric helpers.

/// Kahan compensated accumulator. Summation order is fixed by the caller,
/// which keeps parallel map + ordered reduce bit-reproducible.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct KahanSum {
    sum: f64,
    compensation: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let y = value - self.compensation;
        let t = self.sum + y;
        self.compensation = (t - self.sum) - y;
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum
    }

    pub fn sum_iter<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
        let mut kahan = Self::new();
        for v in iter {
            kahan.add(v);
        }
        kahan.value()
    }
}

/// Mean and standard error of the mean, two-pass with compensated sums.
pub(crate) fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    assert!(n >= 1, "mean of empty sample");
    let mean = KahanSum::sum_iter(values.iter().copied()) / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss = KahanSum::sum_iter(values.iter().map(|v| {
        let d = v - mean;
        d * d
    }));
    let var = ss / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Sample covariance of paired observations (two-pass).
pub(crate) fn covariance(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    assert!(n >= 2, "covariance needs at least two pairs");
    let mx = KahanSum::sum_iter(xs.iter().copied()) / n as f64;
    let my = KahanSum::sum_iter(ys.iter().copied()) / n as f64;
    let cross = KahanSum::sum_iter(xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)));
    cross / (n - 1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kahan_recovers_small_terms() {
        // 1 + 1e-16 * 10^4 loses the tail with naive accumulation
        let mut naive = 1.0f64;
        let mut kahan = KahanSum::new();
        kahan.add(1.0);
        for _ in 0..10_000 {
            naive += 1e-16;
            kahan.add(1e-16);
        }
        assert_eq!(naive, 1.0);
        assert!((kahan.value() - (1.0 + 1e-12)).abs() < 1e-15);
    }

    #[test]
    fn mean_stderr_basic() {
        let (m, se) = mean_and_stderr(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        // sd = sqrt(5/3), se = sd/2
        assert!((se - (5.0f64 / 3.0).sqrt() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn covariance_of_identical_series_is_variance() {
        let xs = [0.5, 1.5, 2.0, 4.0];
        let c = covariance(&xs, &xs);
        let (_, se) = mean_and_stderr(&xs);
        assert!((c - se * se * xs.len() as f64).abs() < 1e-12);
    }
}
