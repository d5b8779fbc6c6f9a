//! Mean absorption times.
//!
//! Solves `(-T) m = 1` for the transient sub-generator `T`. Small systems use
//! Gaussian elimination in state-reduction form: eliminating a state folds
//! its transitions into the remaining ones and every pivot is recomputed as
//! `exit + sum of off-diagonal rates`, never as a difference. All quantities
//! stay non-negative, so the result keeps full relative accuracy even for
//! strongly metastable chains whose mean absorption time exceeds `1e50`.
//! Larger systems fall back to Gauss-Seidel sweeps with a residual check.

use super::generator::SubGenerator;
use crate::error::{Error, Result};

/// Systems up to this many states are eliminated densely.
pub const DENSE_LIMIT: usize = 2048;

/// Target normwise relative residual.
pub const RESIDUAL_TOLERANCE: f64 = 1e-12;

const MAX_SWEEPS: usize = 200_000;

/// Mean absorption time from every transient state.
pub fn mean_absorption_times(gen: &SubGenerator) -> Result<Vec<f64>> {
    gen.check_absorbing()?;
    let m = if gen.len() <= DENSE_LIMIT {
        eliminate(gen)?
    } else {
        gauss_seidel(gen)?
    };
    let res = relative_residual(gen, &m);
    if res > RESIDUAL_TOLERANCE {
        return Err(Error::NoConvergence(format!(
            "mean absorption residual {res:.3e} exceeds {RESIDUAL_TOLERANCE:.0e}"
        )));
    }
    Ok(m)
}

/// Mean absorption time from the initial distribution `init`.
pub fn expected_absorption(gen: &SubGenerator, init: &[f64]) -> Result<f64> {
    check_distribution(gen, init)?;
    let m = mean_absorption_times(gen)?;
    Ok(init.iter().zip(&m).map(|(p, x)| p * x).sum())
}

pub(crate) fn check_distribution(gen: &SubGenerator, init: &[f64]) -> Result<()> {
    if init.len() != gen.len() {
        return Err(Error::InvalidParameter(format!(
            "initial distribution has {} entries, chain has {} states",
            init.len(),
            gen.len()
        )));
    }
    if init.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
        return Err(Error::InvalidParameter("initial distribution has a negative entry".into()));
    }
    let total: f64 = init.iter().sum();
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "initial distribution sums to {total}, not 1"
        )));
    }
    Ok(())
}

/// `max_i |((-T) m - 1)_i| / max_i (out_i m_i + sum_j r_ij m_j + 1)`.
pub fn relative_residual(gen: &SubGenerator, m: &[f64]) -> f64 {
    let mut worst: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for i in 0..gen.len() {
        let inflow: f64 = gen.row(i).iter().map(|&(j, r)| r * m[j]).sum();
        let diag = gen.out_rate(i) * m[i];
        worst = worst.max((diag - inflow - 1.0).abs());
        scale = scale.max(diag + inflow + 1.0);
    }
    worst / scale
}

fn eliminate(gen: &SubGenerator) -> Result<Vec<f64>> {
    let n = gen.len();
    let mut a = vec![0.0; n * n];
    let mut exit = vec![0.0; n];
    let mut rhs = vec![1.0; n];
    for i in 0..n {
        for &(j, r) in gen.row(i) {
            a[i * n + j] = r;
        }
        exit[i] = gen.exit_rate(i);
    }
    let mut pivots = vec![0.0; n];
    // Eliminate from the last state down; state p only sees states < p afterwards.
    for p in (0..n).rev() {
        let pivot = exit[p] + (0..p).map(|l| a[p * n + l]).sum::<f64>();
        if !(pivot > 0.0) {
            return Err(Error::Singular(format!(
                "state {:#x} has no way out once later states are eliminated",
                gen.states()[p]
            )));
        }
        pivots[p] = pivot;
        for j in 0..p {
            let w = a[j * n + p];
            if w == 0.0 {
                continue;
            }
            let f = w / pivot;
            a[j * n + p] = f;
            exit[j] += f * exit[p];
            rhs[j] += f * rhs[p];
            for l in 0..p {
                a[j * n + l] += f * a[p * n + l];
            }
        }
    }
    // Back substitution: m_p = (rhs_p + sum_{l<p} a_pl m_l) / pivot_p.
    let mut m = vec![0.0; n];
    for p in 0..n {
        let acc: f64 = (0..p).map(|l| a[p * n + l] * m[l]).sum();
        m[p] = (rhs[p] + acc) / pivots[p];
    }
    Ok(m)
}

fn gauss_seidel(gen: &SubGenerator) -> Result<Vec<f64>> {
    let n = gen.len();
    let out: Vec<f64> = (0..n).map(|i| gen.out_rate(i)).collect();
    let mut m = vec![0.0; n];
    for sweep in 0..MAX_SWEEPS {
        for i in 0..n {
            let inflow: f64 = gen.row(i).iter().map(|&(j, r)| r * m[j]).sum();
            m[i] = (1.0 + inflow) / out[i];
        }
        if sweep % 16 == 15 && relative_residual(gen, &m) <= RESIDUAL_TOLERANCE {
            return Ok(m);
        }
    }
    Err(Error::NoConvergence(format!(
        "Gauss-Seidel did not reach residual {RESIDUAL_TOLERANCE:.0e} in {MAX_SWEEPS} sweeps"
    )))
}
