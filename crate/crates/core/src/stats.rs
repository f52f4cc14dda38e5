//! Small sample-statistics helpers.

use serde::Serialize;

/// Sample mean, standard error and extrema.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    pub std_err: f64,
    pub min: f64,
    pub max: f64,
}

impl Summary {
    pub fn of(xs: &[f64]) -> Summary {
        let count = xs.len();
        if count == 0 {
            return Summary {
                count,
                mean: f64::NAN,
                std_err: f64::NAN,
                min: f64::NAN,
                max: f64::NAN,
            };
        }
        let n = count as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = if count > 1 {
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Summary {
            count,
            mean,
            std_err: (var / n).sqrt(),
            min: xs.iter().copied().fold(f64::INFINITY, f64::min),
            max: xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

/// Median of a sample; NaN when empty.
pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Accumulates sums and sums of squares for a vector of quantities.
/// Streaming per-coordinate mean and variance (Welford, Chan merge).
#[derive(Debug, Clone)]
pub struct Moments {
    pub n: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Moments {
    pub fn new(dim: usize) -> Self {
        Moments {
            n: 0,
            mean: vec![0.0; dim],
            m2: vec![0.0; dim],
        }
    }

    pub fn push(&mut self, xs: &[f64]) {
        self.n += 1;
        let n = self.n as f64;
        for ((m, q), &x) in self.mean.iter_mut().zip(&mut self.m2).zip(xs) {
            let d = x - *m;
            *m += d / n;
            *q += d * (x - *m);
        }
    }

    pub fn merge(&mut self, other: &Moments) {
        if other.n == 0 {
            return;
        }
        let (na, nb) = (self.n as f64, other.n as f64);
        let n = na + nb;
        for i in 0..self.mean.len() {
            let d = other.mean[i] - self.mean[i];
            self.mean[i] += d * nb / n;
            self.m2[i] += other.m2[i] + d * d * na * nb / n;
        }
        self.n += other.n;
    }

    pub fn mean(&self) -> Vec<f64> {
        self.mean.clone()
    }

    /// Standard error of each mean (unbiased variance).
    pub fn std_err(&self) -> Vec<f64> {
        if self.n < 2 {
            return vec![0.0; self.mean.len()];
        }
        let n = self.n as f64;
        self.m2
            .iter()
            .map(|q| (q.max(0.0) / (n - 1.0) / n).sqrt())
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_and_moments_agree() {
        let xs = [1.0, 2.0, 4.0, 7.0];
        let s = Summary::of(&xs);
        assert_eq!(s.mean, 3.5);
        let mut m = Moments::new(1);
        for x in xs {
            m.push(&[x]);
        }
        assert!((m.mean()[0] - 3.5).abs() < 1e-15);
        assert!((m.std_err()[0] - s.std_err).abs() < 1e-12);
        assert_eq!(median(&xs), 3.0);
        assert_eq!(median(&[5.0, 1.0, 3.0]), 3.0);
    }

    #[test]
    fn merge_matches_single_pass() {
        let xs: Vec<f64> = (0..37).map(|i| ((i * 7919) % 101) as f64 / 13.0).collect();
        let mut whole = Moments::new(1);
        let mut parts = Moments::new(1);
        for chunk in xs.chunks(10) {
            let mut m = Moments::new(1);
            for &x in chunk {
                whole.push(&[x]);
                m.push(&[x]);
            }
            parts.merge(&m);
        }
        let s = Summary::of(&xs);
        assert!((parts.mean()[0] - s.mean).abs() < 1e-12);
        assert!((parts.std_err()[0] - whole.std_err()[0]).abs() < 1e-12);
        assert!((parts.std_err()[0] - s.std_err).abs() < 1e-12);
    }
}
