//! Small numeric helpers: compensated summation, sample moments, integer
//! binomial coefficients.

/// Neumaier compensated accumulator. Batch reductions sum in a fixed order
/// with this to stay independent of how work was split across threads.
#[derive(Debug, Clone, Copy, Default)]
pub struct Kahan {
    sum: f64,
    comp: f64,
}

impl Kahan {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.comp += (self.sum - t) + value;
        } else {
            self.comp += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut acc = Kahan::new();
    for v in values {
        acc.add(v);
    }
    acc.total()
}

/// Sample moments of a data set: mean, unbiased variance, standardized
/// skewness and excess kurtosis (central-moment ratios, n denominators).
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct Moments {
    pub n: usize,
    pub mean: f64,
    /// Unbiased (n-1) sample variance.
    pub variance: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
}

impl Moments {
    pub fn of(data: &[f64]) -> Moments {
        let n = data.len();
        assert!(n >= 2, "moments need at least two observations");
        let nf = n as f64;
        let mean = compensated_sum(data.iter().copied()) / nf;
        let mut m2 = Kahan::new();
        let mut m3 = Kahan::new();
        let mut m4 = Kahan::new();
        for &x in data {
            let d = x - mean;
            m2.add(d * d);
            m3.add(d * d * d);
            m4.add(d * d * d * d);
        }
        let m2n = m2.total() / nf;
        let variance = m2.total() / (nf - 1.0);
        let (skewness, excess_kurtosis) = if m2n > 0.0 {
            (
                (m3.total() / nf) / m2n.powf(1.5),
                (m4.total() / nf) / (m2n * m2n) - 3.0,
            )
        } else {
            (0.0, 0.0)
        };
        Moments {
            n,
            mean,
            variance,
            skewness,
            excess_kurtosis,
        }
    }
}

/// Exact binomial coefficient; saturates would overflow far beyond the
/// in-degree ranges used here (arguments stay <= alpha_d * k <= 36).
pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as u64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomial_small_table() {
        assert_eq!(binomial(0, 0), 1);
        assert_eq!(binomial(4, 2), 6);
        assert_eq!(binomial(5, 0), 1);
        assert_eq!(binomial(5, 6), 0);
        assert_eq!(binomial(36, 18), 9_075_135_300);
    }

    #[test]
    fn compensated_sum_handles_cancellation() {
        let vals = vec![1e16, 1.0, -1e16];
        assert_eq!(compensated_sum(vals), 1.0);
    }

    #[test]
    fn moments_of_symmetric_data() {
        let data = [-2.0, -1.0, 0.0, 1.0, 2.0];
        let m = Moments::of(&data);
        assert_eq!(m.mean, 0.0);
        assert!((m.variance - 2.5).abs() < 1e-15);
        assert_eq!(m.skewness, 0.0);
    }

    #[test]
    fn moments_of_constant_data_do_not_divide_by_zero() {
        let m = Moments::of(&[3.0, 3.0, 3.0]);
        assert_eq!(m.variance, 0.0);
        assert_eq!(m.skewness, 0.0);
        assert_eq!(m.excess_kurtosis, 0.0);
    }
}
