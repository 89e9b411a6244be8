//! Chebyshev–Lobatto collocation on `z in [-1, 0]`.
//!
//! Node 0 is the surface `z = 0`, node `n-1` the bottom `z = -1`.

use std::f64::consts::PI;

#[derive(Debug, Clone)]
pub struct Chebyshev {
    pub n: usize,
    pub z: Vec<f64>,
    /// `d/dz`, row-major `n x n`.
    pub d1: Vec<f64>,
    /// Clenshaw–Curtis weights on `[-1, 0]`.
    pub weights: Vec<f64>,
}

impl Chebyshev {
    pub fn new(n: usize) -> Self {
        assert!(n >= 3, "need at least three collocation points");
        let m = n - 1;
        let x: Vec<f64> = (0..n).map(|j| (PI * j as f64 / m as f64).cos()).collect();
        let z = x.iter().map(|&x| (x - 1.0) / 2.0).collect();

        let c = |i: usize| {
            let s = if i.is_multiple_of(2) { 1.0 } else { -1.0 };
            if i == 0 || i == m {
                2.0 * s
            } else {
                s
            }
        };
        let mut d1 = vec![0.0; n * n];
        for i in 0..n {
            let mut row = 0.0;
            for j in 0..n {
                if i != j {
                    let v = c(i) / c(j) / (x[i] - x[j]);
                    d1[i * n + j] = 2.0 * v;
                    row += 2.0 * v;
                }
            }
            d1[i * n + i] = -row;
        }

        let mut weights = vec![0.0; n];
        let theta: Vec<f64> = (0..n).map(|j| PI * j as f64 / m as f64).collect();
        let mf = m as f64;
        let mut v = vec![1.0; n];
        if m.is_multiple_of(2) {
            weights[0] = 1.0 / (mf * mf - 1.0);
            for k in 1..m / 2 {
                let kf = k as f64;
                for j in 1..m {
                    v[j] -= 2.0 * (2.0 * kf * theta[j]).cos() / (4.0 * kf * kf - 1.0);
                }
            }
            for j in 1..m {
                v[j] -= (mf * theta[j]).cos() / (mf * mf - 1.0);
            }
        } else {
            weights[0] = 1.0 / (mf * mf);
            for k in 1..=(m - 1) / 2 {
                let kf = k as f64;
                for j in 1..m {
                    v[j] -= 2.0 * (2.0 * kf * theta[j]).cos() / (4.0 * kf * kf - 1.0);
                }
            }
        }
        weights[m] = weights[0];
        for j in 1..m {
            weights[j] = 2.0 * v[j] / mf;
        }
        for w in weights.iter_mut() {
            *w *= 0.5;
        }

        Chebyshev { n, z, d1, weights }
    }

    /// Apply `d/dz` to a column of nodal values.
    pub fn diff(&self, f: &[f64]) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .map(|i| (0..n).map(|j| self.d1[i * n + j] * f[j]).sum())
            .collect()
    }

    pub fn integrate(&self, f: &[f64]) -> f64 {
        self.weights.iter().zip(f).map(|(w, v)| w * v).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn differentiates_and_integrates_exponential() {
        for n in [12, 16, 17] {
            let ch = Chebyshev::new(n);
            assert_eq!(ch.z[0], 0.0);
            assert!((ch.z[n - 1] + 1.0).abs() < 1e-15);
            let f: Vec<f64> = ch.z.iter().map(|z| (1.3 * z).exp()).collect();
            let df = ch.diff(&f);
            for (d, z) in df.iter().zip(&ch.z) {
                assert!((d - 1.3 * (1.3 * z).exp()).abs() < 1e-9, "n={n}");
            }
            let exact = (1.0 - (-1.3f64).exp()) / 1.3;
            assert!((ch.integrate(&f) - exact).abs() < 1e-12);
        }
    }
}
