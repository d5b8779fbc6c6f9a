//! Survival function of the absorption time by uniformization.
//!
//! With `L` the largest total outflow, `P = I + T/L` is sub-stochastic and
//! `exp(T s) = sum_n Pois(n; L s) P^n`. The state vector is pushed forward
//! between consecutive grid times in slices with `L * ds <= SLICE_MASS`, so
//! the Poisson weights never underflow; each slice is truncated once the
//! remaining Poisson tail is below its share of the error budget. Every
//! operation adds non-negative terms, so small survival probabilities keep
//! their relative accuracy.

use super::absorption::{check_distribution, expected_absorption};
use super::generator::SubGenerator;
use crate::error::{Error, Result};

pub const DEFAULT_TOLERANCE: f64 = 1e-10;

/// Cap on matrix-vector products per curve (counted in stored nonzeros).
pub const WORK_LIMIT: f64 = 2e10;

const SLICE_MASS: f64 = 32.0;

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SurvivalCurve {
    pub times: Vec<f64>,
    pub probs: Vec<f64>,
    /// Bound on the error of every entry: the requested truncation budget
    /// plus a first-order bound on accumulated rounding.
    pub tolerance: f64,
}

impl SurvivalCurve {
    /// Sup-distance to `e^{-t/scale}` over the grid.
    pub fn sup_distance_to_exponential(&self, scale: f64) -> f64 {
        self.times
            .iter()
            .zip(&self.probs)
            .map(|(&t, &p)| (p - (-t / scale).exp()).abs())
            .fold(0.0, f64::max)
    }
}

struct Uniformized<'a> {
    gen: &'a SubGenerator,
    rate: f64,
    stay: Vec<f64>,
}

impl<'a> Uniformized<'a> {
    fn new(gen: &'a SubGenerator) -> Result<Self> {
        let rate = (0..gen.len()).map(|i| gen.out_rate(i)).fold(0.0, f64::max);
        if !(rate > 0.0) {
            return Err(Error::Singular("chain has no transitions".into()));
        }
        let stay = (0..gen.len()).map(|i| (1.0 - gen.out_rate(i) / rate).max(0.0)).collect();
        Ok(Uniformized { gen, rate, stay })
    }

    /// `w = v P`.
    fn apply(&self, v: &[f64], w: &mut [f64]) {
        for (wi, (vi, s)) in w.iter_mut().zip(v.iter().zip(&self.stay)) {
            *wi = vi * s;
        }
        for (i, &vi) in v.iter().enumerate() {
            if vi == 0.0 {
                continue;
            }
            for &(j, r) in self.gen.row(i) {
                w[j] += vi * r / self.rate;
            }
        }
    }

    /// Pushes `v` forward by time `dt`, truncating each slice at `slice_tol`.
    fn advance(&self, v: &mut Vec<f64>, dt: f64, slices: usize, slice_tol: f64) -> Result<()> {
        if dt <= 0.0 {
            return Ok(());
        }
        let lambda = self.rate * dt / slices as f64;
        let mut term = vec![0.0; v.len()];
        let mut next = vec![0.0; v.len()];
        let mut acc = vec![0.0; v.len()];
        for _ in 0..slices {
            term.copy_from_slice(v);
            let mut weight = (-lambda).exp();
            acc.iter_mut().zip(&term).for_each(|(a, t)| *a = weight * t);
            let mut n = 0usize;
            loop {
                // Tail bound for Pois(lambda) beyond n once n + 2 > lambda:
                // P(X > n) <= w_{n+1} / (1 - lambda / (n + 2)).
                let w_next = weight * lambda / (n + 1) as f64;
                if (n + 2) as f64 > lambda && w_next / (1.0 - lambda / (n + 2) as f64) <= slice_tol {
                    break;
                }
                self.apply(&term, &mut next);
                std::mem::swap(&mut term, &mut next);
                n += 1;
                weight = w_next;
                acc.iter_mut().zip(&term).for_each(|(a, t)| *a += weight * t);
                if n > 10_000 {
                    return Err(Error::NoConvergence("Poisson truncation did not terminate".into()));
                }
            }
            v.copy_from_slice(&acc);
        }
        Ok(())
    }
}

/// `P(absorption time > t)` on an increasing grid of times.
pub fn survival_function(gen: &SubGenerator, init: &[f64], times: &[f64], tolerance: f64) -> Result<SurvivalCurve> {
    check_distribution(gen, init)?;
    if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::InvalidParameter("survival times must be finite and non-negative".into()));
    }
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidParameter("survival times must be increasing".into()));
    }
    if !(tolerance > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be positive, got {tolerance}")));
    }
    let uni = Uniformized::new(gen)?;
    let mut prev = 0.0;
    let slices: Vec<usize> = times
        .iter()
        .map(|&t| {
            let dt = t - prev;
            prev = t;
            ((uni.rate * dt) / SLICE_MASS).ceil().max(1.0) as usize
        })
        .collect();
    let total_slices: usize = slices.iter().sum();
    let work = uni.rate * times.last().copied().unwrap_or(0.0) * (gen.nnz() + gen.len()) as f64;
    if work > WORK_LIMIT {
        return Err(Error::NoConvergence(format!(
            "tolerance unreachable within the iteration cap: uniformization needs about {work:.2e} operations \
             (limit {WORK_LIMIT:.0e}); for metastable complete graphs use the regenerative analysis"
        )));
    }
    let slice_tol = tolerance / total_slices.max(1) as f64;
    let mut v = init.to_vec();
    let mut probs = Vec::with_capacity(times.len());
    let mut prev = 0.0;
    for (&t, &s) in times.iter().zip(&slices) {
        uni.advance(&mut v, t - prev, s, slice_tol)?;
        prev = t;
        probs.push(v.iter().sum::<f64>().min(1.0));
    }
    // Each product v P costs at most (k + 1) roundings per unit of mass, with
    // k the longest row; the Poisson sums add two per slice.
    let k = (0..gen.len()).map(|i| gen.row(i).len()).max().unwrap_or(0);
    let products = uni.rate * times.last().copied().unwrap_or(0.0);
    let rounding = (products * (k + 1) as f64 + 2.0 * total_slices as f64) * f64::EPSILON;
    Ok(SurvivalCurve { times: times.to_vec(), probs, tolerance: tolerance + rounding })
}

/// The time `beta` with `P(absorption > beta) = e^{-1}`, to within `1e-13`
/// in probability.
pub fn beta_quantile(gen: &SubGenerator, init: &[f64]) -> Result<f64> {
    const TARGET_TOL: f64 = 1e-13;
    let target = (-1.0f64).exp();
    let f = |t: f64| -> Result<f64> { Ok(survival_function(gen, init, &[t], 1e-14)?.probs[0] - target) };
    let mean = expected_absorption(gen, init)?;
    let (mut lo, mut hi) = (0.0, mean.max(f64::MIN_POSITIVE));
    let mut f_lo = 1.0 - target;
    let mut f_hi = f(hi)?;
    let mut doublings = 0;
    while f_hi > 0.0 {
        (lo, f_lo) = (hi, f_hi);
        hi *= 2.0;
        f_hi = f(hi)?;
        doublings += 1;
        if doublings > 200 {
            return Err(Error::NoConvergence("could not bracket the e^-1 quantile".into()));
        }
    }
    // Illinois variant of regula falsi: the survival curve is smooth and
    // monotone, so this converges superlinearly inside the bracket.
    let mut side = 0;
    for _ in 0..200 {
        let mid = (lo * f_hi - hi * f_lo) / (f_hi - f_lo);
        let mid = if mid > lo && mid < hi { mid } else { 0.5 * (lo + hi) };
        let fm = f(mid)?;
        if fm.abs() <= TARGET_TOL || hi - lo <= 4.0 * f64::EPSILON * hi {
            return Ok(mid);
        }
        if fm > 0.0 {
            (lo, f_lo) = (mid, fm);
            if side == -1 {
                f_hi *= 0.5;
            }
            side = -1;
        } else {
            (hi, f_hi) = (mid, fm);
            if side == 1 {
                f_lo *= 0.5;
            }
            side = 1;
        }
    }
    Err(Error::NoConvergence("root search for the e^-1 quantile did not converge".into()))
}
