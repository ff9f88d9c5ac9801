//! Dense LU factorization with partial pivoting for the small bordered
//! systems assembled by kriging.

/// Pivot ratios above this trigger a conditioning warning.
pub const CONDITION_WARN_RATIO: f64 = 1e12;

/// Row-major `PA = LU` factors of an `n × n` matrix.
#[derive(Debug, Clone)]
pub struct LuFactors {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
    pivot_ratio: f64,
}

impl LuFactors {
    /// Factors the row-major matrix `a`. Returns the column at which the
    /// elimination met a zero pivot (relative to the matrix scale) on failure.
    pub fn factor(mut a: Vec<f64>, n: usize) -> Result<Self, usize> {
        assert_eq!(a.len(), n * n, "matrix must be n × n");
        let scale = a.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let tiny = scale * f64::EPSILON * n as f64;
        let mut perm: Vec<usize> = (0..n).collect();
        let (mut pmax, mut pmin) = (0.0_f64, f64::INFINITY);
        for k in 0..n {
            let mut p = k;
            let mut best = a[k * n + k].abs();
            for r in k + 1..n {
                let v = a[r * n + k].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if !(best > tiny) {
                return Err(k);
            }
            if p != k {
                for c in 0..n {
                    a.swap(k * n + c, p * n + c);
                }
                perm.swap(k, p);
            }
            pmax = pmax.max(best);
            pmin = pmin.min(best);
            let pivot = a[k * n + k];
            for r in k + 1..n {
                let f = a[r * n + k] / pivot;
                a[r * n + k] = f;
                if f != 0.0 {
                    for c in k + 1..n {
                        a[r * n + c] -= f * a[k * n + c];
                    }
                }
            }
        }
        let pivot_ratio = if n == 0 { 1.0 } else { pmax / pmin };
        if pivot_ratio > CONDITION_WARN_RATIO {
            log::warn!("ill-conditioned {n}×{n} system: pivot ratio {pivot_ratio:.3e}");
        }
        Ok(Self {
            n,
            lu: a,
            perm,
            pivot_ratio,
        })
    }

    /// Ratio of the largest to the smallest pivot magnitude; a cheap
    /// lower-bound proxy for the condition number.
    pub fn pivot_ratio(&self) -> f64 {
        self.pivot_ratio
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        assert_eq!(b.len(), n, "right-hand side length");
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for r in 0..n {
            let row = &self.lu[r * n..r * n + r];
            x[r] -= row.iter().zip(&x[..r]).map(|(l, v)| l * v).sum::<f64>();
        }
        for r in (0..n).rev() {
            let row = &self.lu[r * n + r + 1..(r + 1) * n];
            let s = x[r] - row.iter().zip(&x[r + 1..]).map(|(u, v)| u * v).sum::<f64>();
            x[r] = s / self.lu[r * n + r];
        }
        x
    }
}
