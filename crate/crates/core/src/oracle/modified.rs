//! The complete-graph count chain modified so that it never dies.
//!
//! When a single neuron is left it does not leak and spikes at rate
//! `1 + gamma`, sending the count back to `N - 1`. The resulting chain on
//! `1..=N` is positive recurrent; its invariant measure has the closed form
//! `mu_n ∝ (1 + gamma)^(n-1) / (n gamma^(n-1))` for `n < N` and `mu_N = 0`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ModifiedChain {
    n: usize,
    gamma: f64,
    /// Off-diagonal rates, row `k - 1` for count `k`.
    rows: Vec<Vec<(usize, f64)>>,
    diag: Vec<f64>,
}

impl ModifiedChain {
    pub fn new(n: usize, gamma: f64) -> Result<ModifiedChain> {
        if n < 3 {
            return Err(Error::InvalidParameter(format!(
                "the modified chain is defined for n >= 3, got {n}"
            )));
        }
        if !(gamma.is_finite() && gamma >= 0.0) {
            return Err(Error::InvalidParameter(format!("gamma must be finite and non-negative, got {gamma}")));
        }
        let g = gamma;
        let mut rows = Vec::with_capacity(n);
        for k in 1..=n {
            let kf = k as f64;
            let row = if k == 1 {
                vec![(n - 2, 1.0 + g)]
            } else if k == n {
                vec![(n - 2, kf * (1.0 + g))]
            } else if k == n - 1 {
                vec![(n - 3, kf * g)]
            } else {
                vec![(k - 2, kf * g), (n - 2, kf)]
            };
            rows.push(row);
        }
        let diag = rows.iter().map(|r| -r.iter().map(|&(_, x)| x).sum::<f64>()).collect();
        Ok(ModifiedChain { n, gamma, rows, diag })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Entry `Q[k][l]` for counts `k, l` in `1..=N`.
    pub fn rate(&self, k: usize, l: usize) -> f64 {
        assert!((1..=self.n).contains(&k) && (1..=self.n).contains(&l));
        if k == l {
            return self.diag[k - 1];
        }
        self.rows[k - 1]
            .iter()
            .find(|&&(j, _)| j == l - 1)
            .map_or(0.0, |&(_, r)| r)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (1..=self.n)
            .map(|k| (1..=self.n).map(|l| self.rate(k, l)).collect())
            .collect()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.rows
            .iter()
            .zip(&self.diag)
            .map(|(r, d)| r.iter().map(|&(_, x)| x).sum::<f64>() + d)
            .collect()
    }

    /// `mu Q` as a vector indexed by count.
    pub fn left_apply(&self, mu: &[f64]) -> Vec<f64> {
        assert_eq!(mu.len(), self.n);
        let mut out: Vec<f64> = mu.iter().zip(&self.diag).map(|(m, d)| m * d).collect();
        for (k, row) in self.rows.iter().enumerate() {
            for &(j, r) in row {
                out[j] += mu[k] * r;
            }
        }
        out
    }
}

pub fn modified_chain(n: usize, gamma: f64) -> Result<ModifiedChain> {
    ModifiedChain::new(n, gamma)
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct InvariantMeasure {
    /// `mu[k - 1]` is the mass of count `k`.
    pub mu: Vec<f64>,
}

impl InvariantMeasure {
    pub fn get(&self, k: usize) -> f64 {
        self.mu[k - 1]
    }

    pub fn n(&self) -> usize {
        self.mu.len()
    }
}

/// Closed-form invariant measure of the modified chain.
///
/// Terms are formed in log space and shifted by their maximum before
/// exponentiating; `((1 + gamma)/gamma)^n` overflows long before `N = 1000`
/// for small `gamma`.
pub fn invariant_measure(n: usize, gamma: f64) -> Result<InvariantMeasure> {
    if n < 3 {
        return Err(Error::InvalidParameter(format!("invariant measure needs n >= 3, got {n}")));
    }
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "invariant measure needs gamma > 0 (the closed form degenerates at 0), got {gamma}"
        )));
    }
    let log_ratio = ((1.0 + gamma) / gamma).ln();
    let logs: Vec<f64> = (1..n).map(|k| (k - 1) as f64 * log_ratio - (k as f64).ln()).collect();
    let shift = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut mu: Vec<f64> = logs.iter().map(|l| (l - shift).exp()).collect();
    let total: f64 = mu.iter().sum();
    mu.iter_mut().for_each(|m| *m /= total);
    mu.push(0.0);
    Ok(InvariantMeasure { mu })
}

/// Lower bound `1 / (2 gamma (N - 1))` on `mu_{N-1}`, valid when `gamma (N - 1) > 1`.
pub fn top_mass_lower_bound(n: usize, gamma: f64) -> Option<f64> {
    let scale = gamma * (n as f64 - 1.0);
    (scale > 1.0).then(|| 1.0 / (2.0 * scale))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_states() {
        let q = modified_chain(3, 1.0).unwrap();
        assert_eq!(
            q.to_dense(),
            vec![vec![-2.0, 2.0, 0.0], vec![2.0, -2.0, 0.0], vec![0.0, 6.0, -6.0]]
        );
        let mu = invariant_measure(3, 1.0).unwrap();
        assert_eq!(mu.mu, vec![0.5, 0.5, 0.0]);
    }

    #[test]
    fn rows_conserve_mass() {
        for n in [3, 10, 100] {
            for g in [0.5, 1.0, 2.0] {
                let q = modified_chain(n, g).unwrap();
                let scale = n as f64 * (1.0 + g);
                assert!(q.row_sums().iter().all(|s| s.abs() <= 1e-14 * scale));
            }
        }
    }

    #[test]
    fn displayed_rows() {
        let (n, g) = (7, 0.3);
        let q = modified_chain(n, g).unwrap();
        assert_eq!(q.rate(1, n - 1), 1.0 + g);
        assert_eq!(q.rate(n, n - 1), n as f64 * (1.0 + g));
        assert_eq!(q.rate(n - 1, n - 2), (n - 1) as f64 * g);
        assert_eq!(q.rate(4, 3), 4.0 * g);
        assert_eq!(q.rate(4, n - 1), 4.0);
        assert_eq!(q.rate(4, n), 0.0);
    }

    #[test]
    fn stationarity() {
        for n in [3, 10, 100, 1000] {
            for g in [0.5, 1.0, 2.0] {
                let mu = invariant_measure(n, g).unwrap();
                let q = modified_chain(n, g).unwrap();
                let residual = q.left_apply(&mu.mu).iter().fold(0.0f64, |m, x| m.max(x.abs()));
                assert!(residual <= 1e-10, "n={n} g={g}: {residual}");
                assert!((mu.mu.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
                assert_eq!(mu.get(n), 0.0);
            }
        }
    }

    #[test]
    fn top_mass_bound() {
        for n in [10, 100, 1000] {
            for g in [0.5, 1.0, 2.0] {
                let bound = top_mass_lower_bound(n, g).unwrap();
                let mu = invariant_measure(n, g).unwrap();
                assert!(mu.get(n - 1) >= bound, "n={n} g={g}");
            }
        }
        assert!(top_mass_lower_bound(2, 0.5).is_none());
    }

    #[test]
    fn rejections() {
        assert!(modified_chain(2, 1.0).is_err());
        assert!(invariant_measure(5, 0.0).is_err());
        assert!(invariant_measure(2, 1.0).is_err());
    }
}
