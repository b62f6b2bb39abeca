//! Causal smoothing filters applied to logged signals.

use alloc::collections::VecDeque;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Causal moving average. Sample `k` averages the last `min(k + 1, window)`
/// inputs, so the warm-up uses the available prefix instead of zero padding.
pub fn moving_average(x: &[f64], window: usize) -> Result<Vec<f64>> {
    let mut f = MovingAverage::new(window)?;
    Ok(x.iter().map(|&v| f.push(v)).collect())
}

/// Streaming form of [`moving_average`].
#[derive(Debug, Clone)]
pub struct MovingAverage {
    window: usize,
    buf: VecDeque<f64>,
}

impl MovingAverage {
    pub fn new(window: usize) -> Result<Self> {
        if window == 0 {
            return Err(Error::InvalidParameter { name: "filter_window", reason: "must be >= 1" });
        }
        Ok(Self { window, buf: VecDeque::with_capacity(window) })
    }

    pub fn push(&mut self, v: f64) -> f64 {
        if self.buf.len() == self.window {
            self.buf.pop_front();
        }
        self.buf.push_back(v);
        // Summed afresh each sample: no running-sum drift, and the output
        // depends only on the window contents.
        self.buf.iter().sum::<f64>() / self.buf.len() as f64
    }
}

/// Running median over the last five samples (fewer during warm-up).
#[derive(Debug, Clone, Default)]
pub struct Median5 {
    buf: VecDeque<f64>,
}

impl Median5 {
    pub fn push(&mut self, v: f64) -> f64 {
        if self.buf.len() == 5 {
            self.buf.pop_front();
        }
        self.buf.push_back(v);
        let mut tmp = [0.0; 5];
        let n = self.buf.len();
        for (t, b) in tmp.iter_mut().zip(self.buf.iter()) {
            *t = *b;
        }
        let s = &mut tmp[..n];
        s.sort_by(f64::total_cmp);
        if n % 2 == 1 {
            s[n / 2]
        } else {
            0.5 * (s[n / 2 - 1] + s[n / 2])
        }
    }
}

/// Backward difference `(x[k] - x[k-1]) / dt`, zero at `k = 0`.
pub fn backward_difference(x: &[f64], dt: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len());
    for k in 0..x.len() {
        out.push(if k == 0 { 0.0 } else { (x[k] - x[k - 1]) / dt });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_is_preserved() {
        let y = moving_average(&[2.0; 300], 100).unwrap();
        assert!(y.iter().all(|v| (v - 2.0).abs() < 1e-15));
    }

    #[test]
    fn prefix_mean_warm_up() {
        let y = moving_average(&[1.0; 6], 4).unwrap();
        assert!(y.iter().all(|v| *v == 1.0));

        let x = [0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0];
        let y = moving_average(&x, 4).unwrap();
        // hand-computed prefix/window means
        let want = [0.0, 0.0, 1.0 / 3.0, 2.0 / 4.0, 3.0 / 4.0, 1.0, 1.0];
        for (a, b) in y.iter().zip(want) {
            assert!((a - b).abs() < 1e-15, "{a} vs {b}");
        }
    }

    #[test]
    fn window_one_is_identity() {
        let x = [3.0, -1.0, 4.0, 1.5];
        assert_eq!(moving_average(&x, 1).unwrap(), x.to_vec());
    }

    #[test]
    fn zero_window_is_rejected() {
        assert!(matches!(moving_average(&[1.0], 0), Err(Error::InvalidParameter { .. })));
    }

    #[test]
    fn median_rejects_single_spike() {
        let mut m = Median5::default();
        let out: Vec<f64> = [1.0, 1.0, 1.0, 50.0, 1.0, 1.0].iter().map(|&v| m.push(v)).collect();
        assert!(out.iter().all(|v| *v == 1.0));
    }

    proptest! {
        #[test]
        fn moving_average_is_linear(
            x in proptest::collection::vec(-10.0f64..10.0, 1..80),
            y in proptest::collection::vec(-10.0f64..10.0, 80),
            a in -3.0f64..3.0,
            b in -3.0f64..3.0,
            w in 1usize..20,
        ) {
            let y = &y[..x.len()];
            let combo: Vec<f64> = x.iter().zip(y).map(|(xi, yi)| a * xi + b * yi).collect();
            let lhs = moving_average(&combo, w).unwrap();
            let fx = moving_average(&x, w).unwrap();
            let fy = moving_average(y, w).unwrap();
            for k in 0..x.len() {
                prop_assert!((lhs[k] - (a * fx[k] + b * fy[k])).abs() < 1e-9);
            }
        }
    }
}
