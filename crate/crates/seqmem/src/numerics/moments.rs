//! Single-pass central moments up to fourth order.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct MomentAccumulator {
    n: u64,
    mean: f64,
    m2: f64,
    m3: f64,
    m4: f64,
}

impl MomentAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        let n1 = self.n as f64;
        self.n += 1;
        let n = self.n as f64;
        let delta = x - self.mean;
        let delta_n = delta / n;
        let delta_n2 = delta_n * delta_n;
        let term1 = delta * delta_n * n1;
        self.mean += delta_n;
        self.m4 += term1 * delta_n2 * (n * n - 3.0 * n + 3.0) + 6.0 * delta_n2 * self.m2 - 4.0 * delta_n * self.m3;
        self.m3 += term1 * delta_n * (n - 2.0) - 3.0 * delta_n * self.m2;
        self.m2 += term1;
    }

    /// Combines two accumulators as if their streams were concatenated.
    pub fn merge(&mut self, other: &MomentAccumulator) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let na = self.n as f64;
        let nb = other.n as f64;
        let n = na + nb;
        let delta = other.mean - self.mean;
        let d2 = delta * delta;
        let d3 = d2 * delta;
        let d4 = d2 * d2;
        let m2 = self.m2 + other.m2 + d2 * na * nb / n;
        let m3 = self.m3 + other.m3 + d3 * na * nb * (na - nb) / (n * n)
            + 3.0 * delta * (na * other.m2 - nb * self.m2) / n;
        let m4 = self.m4
            + other.m4
            + d4 * na * nb * (na * na - na * nb + nb * nb) / (n * n * n)
            + 6.0 * d2 * (na * na * other.m2 + nb * nb * self.m2) / (n * n)
            + 4.0 * delta * (na * other.m3 - nb * self.m3) / n;
        self.n += other.n;
        self.mean += delta * nb / n;
        self.m2 = m2;
        self.m3 = m3;
        self.m4 = m4;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance; zero for fewer than two samples.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn population_variance(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.m2 / self.n as f64
        }
    }

    /// Sample excess kurtosis `m4 / m2^2 - 3`.
    pub fn excess_kurtosis(&self) -> Result<f64> {
        if self.n < 4 {
            return Err(Error::TooFewSamples { need: 4, have: self.n });
        }
        if self.m2 <= 0.0 {
            return Err(Error::ZeroVariance);
        }
        let n = self.n as f64;
        Ok(n * self.m4 / (self.m2 * self.m2) - 3.0)
    }

    /// Sample skewness `m3 / m2^1.5`.
    pub fn skewness(&self) -> Result<f64> {
        if self.n < 3 {
            return Err(Error::TooFewSamples { need: 3, have: self.n });
        }
        if self.m2 <= 0.0 {
            return Err(Error::ZeroVariance);
        }
        Ok((self.n as f64).sqrt() * self.m3 / self.m2.powf(1.5))
    }

    /// Large-sample standard error of the unbiased variance,
    /// `sqrt((m4 - m2^2 (n-3)/(n-1)) / n)` with population moments.
    pub fn variance_standard_error(&self) -> f64 {
        if self.n < 4 {
            return f64::INFINITY;
        }
        let n = self.n as f64;
        let m2 = self.m2 / n;
        let m4 = self.m4 / n;
        ((m4 - m2 * m2 * (n - 3.0) / (n - 1.0)) / n).max(0.0).sqrt()
    }

    pub fn summary(&self) -> Moments {
        Moments {
            count: self.n,
            mean: self.mean,
            variance: self.variance(),
            excess_kurtosis: self.excess_kurtosis().ok(),
        }
    }
}

impl Extend<f64> for MomentAccumulator {
    fn extend<I: IntoIterator<Item = f64>>(&mut self, iter: I) {
        for x in iter {
            self.push(x);
        }
    }
}

impl FromIterator<f64> for MomentAccumulator {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = MomentAccumulator::new();
        acc.extend(iter);
        acc
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Moments {
    pub count: u64,
    pub mean: f64,
    pub variance: f64,
    /// `None` when the variance is zero or fewer than four samples were seen.
    pub excess_kurtosis: Option<f64>,
}

impl Moments {
    pub fn kurtosis(&self) -> Result<f64> {
        match self.excess_kurtosis {
            Some(k) => Ok(k),
            None if self.count < 4 => Err(Error::TooFewSamples { need: 4, have: self.count }),
            None => Err(Error::ZeroVariance),
        }
    }
}

pub fn moments<I: IntoIterator<Item = f64>>(stream: I) -> Moments {
    stream.into_iter().collect::<MomentAccumulator>().summary()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_stream_signals() {
        let m = moments(std::iter::repeat_n(3.0, 100));
        assert_eq!(m.variance, 0.0);
        assert!(matches!(m.kurtosis(), Err(Error::ZeroVariance)));
    }

    #[test]
    fn small_hand_values() {
        // 1,2,3,4: mean 2.5, unbiased var 5/3, m2 = 1.25, m4 = 2.5625
        let m = moments([1.0, 2.0, 3.0, 4.0]);
        assert!((m.mean - 2.5).abs() < 1e-15);
        assert!((m.variance - 5.0 / 3.0).abs() < 1e-15);
        assert!((m.kurtosis().unwrap() - (2.5625 / 1.5625 - 3.0)).abs() < 1e-14);
    }
}
