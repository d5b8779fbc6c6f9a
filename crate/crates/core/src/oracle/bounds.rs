//! Closed-form bounds and probabilities.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct BranchingBound {
    pub value: f64,
    /// True when `gamma <= 1`, where the bound is at least 1 and says nothing.
    pub vacuous: bool,
}

/// `e^{-(gamma - 1) t}`: the expected population of the dominating branching
/// process, hence a bound on the survival probability from one neuron.
pub fn branching_bound(gamma: f64, t: f64) -> Result<BranchingBound> {
    if !(gamma.is_finite() && gamma >= 0.0) {
        return Err(Error::InvalidParameter(format!("gamma must be finite and non-negative, got {gamma}")));
    }
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::InvalidParameter(format!("t must be finite and non-negative, got {t}")));
    }
    Ok(BranchingBound { value: (-(gamma - 1.0) * t).exp(), vacuous: gamma <= 1.0 })
}

/// Probability that `k` active neurons on `K_N` all leak before any spike.
pub fn ek_probability(n: usize, gamma: f64, k: usize) -> Result<f64> {
    if !(1..=n).contains(&k) {
        return Err(Error::InvalidParameter(format!("k must lie in 1..={n}, got {k}")));
    }
    if !(gamma.is_finite() && gamma >= 0.0) {
        return Err(Error::InvalidParameter(format!("gamma must be finite and non-negative, got {gamma}")));
    }
    Ok((gamma / (1.0 + gamma)).powi(k as i32))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn branching_values() {
        let b = branching_bound(1.0, 17.0).unwrap();
        assert_eq!(b.value, 1.0);
        assert!(b.vacuous);
        assert_eq!(branching_bound(2.0, 0.0).unwrap().value, 1.0);
        let b = branching_bound(2.0, 3.0).unwrap();
        assert!((b.value - 0.049_787_068_367_863_944).abs() < 1e-15);
        assert!(!b.vacuous);
        assert!(branching_bound(0.5, 2.0).unwrap().value > 1.0);
        assert!(branching_bound(2.0, -1.0).is_err());
    }

    #[test]
    fn ek_values() {
        assert_eq!(ek_probability(10, 1.0, 1).unwrap(), 0.5);
        assert_eq!(ek_probability(10, 1.0, 2).unwrap(), 0.25);
        assert_eq!(ek_probability(10, 1.0, 5).unwrap(), 0.03125);
        assert!(ek_probability(10, 1.0, 0).is_err());
        assert!(ek_probability(10, 1.0, 11).is_err());
    }
}
