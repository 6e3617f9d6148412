//! Monotone piecewise-cubic (Fritsch–Carlson / PCHIP) interpolation.

use crate::error::{McfError, Result};

#[derive(Debug, Clone)]
pub struct MonotoneCubic {
    x: Vec<f64>,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl MonotoneCubic {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n < 2 || y.len() != n {
            return Err(McfError::InvalidInput("monotone cubic needs ≥ 2 matching samples".into()));
        }
        if let Some(i) = x.windows(2).position(|w| w[1] <= w[0]) {
            return Err(McfError::NonMonotone { node: i + 1 });
        }
        let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
        let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / h[i]).collect();
        let mut m = vec![0.0; n];
        if n == 2 {
            m[0] = delta[0];
            m[1] = delta[0];
        } else {
            for i in 1..n - 1 {
                if delta[i - 1] * delta[i] <= 0.0 {
                    m[i] = 0.0;
                } else {
                    let w1 = 2.0 * h[i] + h[i - 1];
                    let w2 = h[i] + 2.0 * h[i - 1];
                    m[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
                }
            }
            m[0] = end_slope(h[0], h[1], delta[0], delta[1]);
            m[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
        }
        Ok(Self { x, y, m })
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        let i = match self.x.binary_search_by(|v| v.partial_cmp(&t).unwrap()) {
            Ok(i) => return self.y[i],
            Err(0) => 0,
            Err(i) if i >= n => n - 2,
            Err(i) => i - 1,
        };
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        h00 * self.y[i] + h * h10 * self.m[i] + h01 * self.y[i + 1] + h * h11 * self.m[i + 1]
    }
}

fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if m * d0 <= 0.0 {
        0.0
    } else if d0 * d1 <= 0.0 && m.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn reproduces_nodes_and_rejects_unsorted() {
        let c = MonotoneCubic::new(vec![0.0, 1.0, 3.0], vec![1.0, 2.0, 5.0]).unwrap();
        assert_eq!(c.eval(1.0), 2.0);
        assert!(MonotoneCubic::new(vec![0.0, 0.0, 1.0], vec![0.0; 3]).is_err());
    }

    proptest! {
        #[test]
        fn preserves_monotonicity(steps in proptest::collection::vec(0.0f64..3.0, 3..30)) {
            let x: Vec<f64> = (0..steps.len()).map(|i| i as f64).collect();
            let y: Vec<f64> = steps.iter().scan(0.0, |s, d| { *s += d; Some(*s) }).collect();
            let c = MonotoneCubic::new(x.clone(), y).unwrap();
            let mut prev = f64::NEG_INFINITY;
            for k in 0..=(10 * (x.len() - 1)) {
                let v = c.eval(k as f64 / 10.0);
                prop_assert!(v >= prev - 1e-12);
                prev = v;
            }
        }
    }
}
