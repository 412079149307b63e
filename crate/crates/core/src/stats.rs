//! Small statistical estimators shared by the field and ensemble layers.

use serde::{Deserialize, Serialize};

/// A value with its one-sigma standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

impl Estimate {
    pub fn new(value: f64, stderr: f64) -> Self {
        Estimate { value, stderr }
    }

    /// Signed distance from `target` in units of the standard error.
    pub fn z_score(&self, target: f64) -> f64 {
        if self.stderr > 0.0 {
            (self.value - target) / self.stderr
        } else if self.value == target {
            0.0
        } else {
            f64::INFINITY.copysign(self.value - target)
        }
    }

    pub fn within_sigma(&self, target: f64, n_sigma: f64) -> bool {
        (self.value - target).abs() <= n_sigma * self.stderr
    }

    pub fn relative_error(&self, target: f64) -> f64 {
        ((self.value - target) / target).abs()
    }
}

/// Sample mean with standard error of the mean.
pub fn mean_stderr(xs: &[f64]) -> Estimate {
    let n = xs.len();
    if n == 0 {
        return Estimate::new(f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return Estimate::new(mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    Estimate::new(mean, (var / n as f64).sqrt())
}

/// Delete-one jackknife of an arbitrary statistic over `n` samples.
///
/// `stat` receives a mask-free view through the `skip` index (`None` for the
/// full sample) and returns the statistic.
pub fn jackknife<F: Fn(Option<usize>) -> f64>(n: usize, stat: F) -> Estimate {
    let full = stat(None);
    if n < 2 {
        return Estimate::new(full, f64::NAN);
    }
    let loo: Vec<f64> = (0..n).map(|i| stat(Some(i))).collect();
    let mean = loo.iter().sum::<f64>() / n as f64;
    let var = loo.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() * (n - 1) as f64 / n as f64;
    Estimate::new(full, var.sqrt())
}

/// Mean of `xs` with the element at `skip` removed.
pub fn mean_skipping(xs: &[f64], skip: Option<usize>) -> f64 {
    let total: f64 = xs.iter().sum();
    match skip {
        None => total / xs.len() as f64,
        Some(i) => (total - xs[i]) / (xs.len() - 1) as f64,
    }
}

/// Block averages of a correlated series, one mean per complete block.
pub fn block_means(series: &[f64], block_len: usize) -> Vec<f64> {
    assert!(block_len > 0);
    series
        .chunks_exact(block_len)
        .map(|c| c.iter().sum::<f64>() / block_len as f64)
        .collect()
}

/// Ordinary least squares `y = a + b x`; returns `(a, b, stderr_b)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(u, v)| (u - mx) * (v - my)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let rss: f64 = x.iter().zip(y).map(|(u, v)| (v - a - b * u).powi(2)).sum();
    let se = if x.len() > 2 { (rss / (n - 2.0) / sxx).sqrt() } else { f64::NAN };
    (a, b, se)
}

/// Sample excess kurtosis with its large-sample standard error `sqrt(24/n)`.
pub fn excess_kurtosis(xs: &[f64]) -> Estimate {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    Estimate::new(m4 / (m2 * m2) - 3.0, (24.0 / n).sqrt())
}

/// Online mean/variance accumulator (Welford).
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Welford {
    pub n: u64,
    pub mean: f64,
    pub m2: f64,
}

impl Welford {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn estimate(&self) -> Estimate {
        if self.n < 2 {
            return Estimate::new(self.mean, f64::NAN);
        }
        let var = self.m2 / (self.n - 1) as f64;
        Estimate::new(self.mean, (var / self.n as f64).sqrt())
    }
}
