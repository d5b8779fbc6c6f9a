//! Survival of the complete-graph extinction time in the metastable regime.
//!
//! Uniformization needs about `L * t` matrix-vector products to reach time
//! `t`, and `E(sigma_N)` grows geometrically in `N`: at `N = 50` it is near
//! `1e13` for `gamma = 1`. Past a few dozen neurons the survival curve is
//! computed from the regenerative structure of the count chain instead.
//!
//! After the first event the count sits at `N - 1`. Each excursion from
//! there dies with probability `p = (gamma/(1+gamma))^(N-2)` and otherwise
//! returns. With `psi_0`, `psi_1` the Laplace transforms of a dying and a
//! returning excursion and `R(s) = (1 - psi_0 - psi_1)/s`, the transform of
//! the absorption time from `N - 1` is `psi_0 / (1 - psi_1)`. Its pole of
//! smallest modulus is `-theta` with `theta = psi_0(-theta) / R(-theta)`, and
//!
//! ```text
//! P(sigma_N > t) = c e^{-theta t} + (terms decaying on the excursion scale).
//! ```
//!
//! All quantities are assembled from `log1p`/`expm1` of small numbers, so
//! `theta E - 1` and `c - 1` keep full relative accuracy even when they are
//! below `1e-50`.

use super::absorption::expected_absorption;
use super::generator::count_chain_generator;
use super::survival::{beta_quantile, survival_function, SurvivalCurve};
use crate::error::{Error, Result};

/// The leading term is used only from this many relaxation times on.
pub const RELAXATION_FACTOR: f64 = 1000.0;

/// Grid of the exponentiality gap: `u = 0, 0.01, ..., 4` in units of the mean.
pub const GAP_GRID_POINTS: usize = 401;
pub const GAP_GRID_STEP: f64 = 0.01;

/// Uniformization is used while `L * 4 E(sigma_N)` stays below this.
pub const UNIFORMIZATION_BUDGET: f64 = 2e7;

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct MetastableAnalysis {
    pub n: usize,
    pub gamma: f64,
    /// `E(sigma_N)` from the full state.
    pub mean: f64,
    /// Decay rate of the leading term.
    pub theta: f64,
    /// `ln c`.
    pub log_amplitude: f64,
    /// `theta E - 1`.
    pub mean_defect: f64,
    /// Sum of the mean holding times along `N, N-1, ..., 1`.
    pub relaxation: f64,
}

struct Levels {
    /// Holding rate at counts `1..=N-1`.
    rates: Vec<f64>,
    /// `W_k(0) / r_k` for `k = 1..=N-1`.
    weights: Vec<f64>,
    top_rate: f64,
    log_p: f64,
}

impl Levels {
    fn new(n: usize, gamma: f64) -> Levels {
        let g = gamma;
        let rates: Vec<f64> = (1..n)
            .map(|k| if k == n - 1 { k as f64 * g } else { k as f64 * (1.0 + g) })
            .collect();
        let log_a = (g / (1.0 + g)).ln();
        let weights = (1..n)
            .map(|k| {
                let w = if k == n - 1 { 1.0 } else { ((n - 2 - k) as f64 * log_a).exp() };
                w / rates[k - 1]
            })
            .collect();
        Levels { rates, weights, top_rate: n as f64 * (1.0 + g), log_p: (n - 2) as f64 * log_a }
    }

    fn r0(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Suffix sums `L_k = sum_{j >= k} -ln(1 - theta/r_j)` and
    /// `S_k = sum_{j >= k} 1/(r_j - theta)`, indexed by `k - 1`.
    fn suffixes(&self, theta: f64) -> (Vec<f64>, Vec<f64>) {
        let m = self.rates.len();
        let mut logs = vec![0.0; m];
        let mut invs = vec![0.0; m];
        let (mut l, mut s) = (0.0, 0.0);
        for k in (0..m).rev() {
            l += -(-theta / self.rates[k]).ln_1p();
            s += 1.0 / (self.rates[k] - theta);
            logs[k] = l;
            invs[k] = s;
        }
        (logs, invs)
    }

    /// `R(-theta)` and `R(-theta) - R(0)`.
    fn r_at(&self, logs: &[f64]) -> (f64, f64) {
        let mut r = 0.0;
        let mut dr = 0.0;
        for (w, l) in self.weights.iter().zip(logs) {
            r += w * l.exp();
            dr += w * l.exp_m1();
        }
        (r, dr)
    }
}

/// Regenerative analysis of `K_N`, `N >= 3`, `gamma > 0`.
pub fn metastable_analysis(n: usize, gamma: f64) -> Result<MetastableAnalysis> {
    if n < 3 {
        return Err(Error::InvalidParameter(format!("regenerative analysis needs n >= 3, got {n}")));
    }
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::InvalidParameter(format!("regenerative analysis needs gamma > 0, got {gamma}")));
    }
    let lv = Levels::new(n, gamma);
    let r0 = lv.r0();
    let p = lv.log_p.exp();
    let min_rate = lv.rates.iter().copied().fold(lv.top_rate, f64::min);
    let theta0 = p / r0;

    let mut theta = theta0;
    let mut converged = false;
    for _ in 0..500 {
        if theta >= min_rate {
            break;
        }
        let (logs, _) = lv.suffixes(theta);
        let (r, _) = lv.r_at(&logs);
        let next = (lv.log_p + logs[0]).exp() / r;
        let done = (next - theta).abs() <= 4.0 * f64::EPSILON * next;
        theta = next;
        if done {
            converged = true;
            break;
        }
    }
    if !converged || !(theta < min_rate) {
        return Err(Error::NoConvergence(format!(
            "decay rate iteration failed for n={n}, gamma={gamma}; the chain is not metastable"
        )));
    }

    let (logs, invs) = lv.suffixes(theta);
    let (r, dr) = lv.r_at(&logs);
    // theta / theta0 - 1
    let x = (logs[0] - (dr / r0).ln_1p()).exp_m1();
    let mean_defect = theta / lv.top_rate + x;
    let abs_r_prime: f64 = lv
        .weights
        .iter()
        .zip(&logs)
        .zip(&invs)
        .map(|((w, l), s)| w * l.exp() * s)
        .sum();
    let y = theta * (abs_r_prime / r - invs[0]);
    let log_amplitude = -((-theta / lv.top_rate).ln_1p() + y.ln_1p());
    let relaxation = lv.rates.iter().map(|r| 1.0 / r).sum::<f64>() + 1.0 / lv.top_rate;
    Ok(MetastableAnalysis {
        n,
        gamma,
        mean: 1.0 / lv.top_rate + r0 / p,
        theta,
        log_amplitude,
        mean_defect,
        relaxation,
    })
}

impl MetastableAnalysis {
    /// Time from which the leading term is trusted.
    pub fn valid_from(&self) -> f64 {
        RELAXATION_FACTOR * self.relaxation
    }

    /// True when the whole gap grid beyond `u = 0` lies in the trusted range.
    pub fn covers_gap_grid(&self) -> bool {
        GAP_GRID_STEP * self.mean >= self.valid_from()
    }

    /// Bound on `|survival(t) - P(sigma_N > t)|` for `t` below [`Self::valid_from`].
    pub fn early_error(&self) -> f64 {
        self.log_amplitude.abs().exp_m1().abs() + self.theta * self.valid_from()
    }

    /// `P(sigma_N > t)` from the leading term, clamped to 1.
    pub fn survival(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 1.0;
        }
        (self.log_amplitude - self.theta * t).exp().min(1.0)
    }

    /// `P(sigma_N / E sigma_N > u) - e^{-u}`, exactly 0 at `u = 0`.
    pub fn gap(&self, u: f64) -> f64 {
        if u <= 0.0 {
            return 0.0;
        }
        (-u).exp() * (self.log_amplitude - self.mean_defect * u).exp_m1()
    }

    /// Time with `P(sigma_N > beta) = e^{-1}`.
    pub fn beta(&self) -> f64 {
        (1.0 + self.log_amplitude) / self.theta
    }

    /// `E(sigma_N) / beta_N - 1`.
    pub fn mean_to_beta_minus_one(&self) -> f64 {
        (self.mean_defect - self.log_amplitude) / (1.0 + self.log_amplitude)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GapMethod {
    Uniformization,
    Regenerative,
}

impl GapMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            GapMethod::Uniformization => "uniformization",
            GapMethod::Regenerative => "regenerative",
        }
    }
}

/// Exact distance of the normalized complete-graph extinction time from `Exp(1)`.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ExponentialityGap {
    pub n: usize,
    pub gamma: f64,
    pub mean: f64,
    pub beta: f64,
    /// `max_u |P(sigma_N / E sigma_N > u) - e^{-u}|` over the grid.
    pub sup_distance: f64,
    /// `E(sigma_N) / beta_N - 1`, kept separately so tiny values survive.
    pub ratio_minus_one: f64,
    pub method: GapMethod,
}

impl ExponentialityGap {
    pub fn ratio(&self) -> f64 {
        1.0 + self.ratio_minus_one
    }
}

pub fn gap_grid() -> Vec<f64> {
    (0..GAP_GRID_POINTS).map(|i| i as f64 * GAP_GRID_STEP).collect()
}

/// Computes the gap by uniformization when affordable, else regeneratively.
pub fn exponentiality_gap(n: usize, gamma: f64) -> Result<ExponentialityGap> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::InvalidParameter(format!("exponentiality gap needs gamma > 0, got {gamma}")));
    }
    let chain = count_chain_generator(n, gamma)?;
    let gen = chain.generator();
    let init = chain.full_start();
    let mean = expected_absorption(gen, &init)?;
    let rate = n as f64 * (1.0 + gamma);
    let horizon = GAP_GRID_STEP * (GAP_GRID_POINTS - 1) as f64;
    if rate * horizon * mean <= UNIFORMIZATION_BUDGET {
        let times: Vec<f64> = gap_grid().iter().map(|u| u * mean).collect();
        let curve = survival_function(gen, &init, &times, 1e-12)?;
        let sup_distance = gap_grid()
            .iter()
            .zip(&curve.probs)
            .map(|(u, p)| (p - (-u).exp()).abs())
            .fold(0.0, f64::max);
        let beta = beta_quantile(gen, &init)?;
        return Ok(ExponentialityGap {
            n,
            gamma,
            mean,
            beta,
            sup_distance,
            ratio_minus_one: mean / beta - 1.0,
            method: GapMethod::Uniformization,
        });
    }
    let m = metastable_analysis(n, gamma)?;
    if !m.covers_gap_grid() {
        return Err(Error::NoConvergence(format!(
            "n={n}, gamma={gamma}: too large for uniformization and not metastable enough for the regenerative form"
        )));
    }
    if (m.mean / mean - 1.0).abs() > 1e-9 {
        return Err(Error::NoConvergence(format!(
            "regenerative mean {} disagrees with the linear solve {mean}",
            m.mean
        )));
    }
    let sup_distance = gap_grid().iter().map(|&u| m.gap(u).abs()).fold(0.0, f64::max);
    Ok(ExponentialityGap {
        n,
        gamma,
        mean,
        beta: m.beta(),
        sup_distance,
        ratio_minus_one: m.mean_to_beta_minus_one(),
        method: GapMethod::Regenerative,
    })
}

/// Rounding allowance of the leading term past [`MetastableAnalysis::valid_from`].
pub const LEADING_TERM_ERROR: f64 = 1e-14;

/// `P(sigma_N > t)` on `K_n` from the full state, at increasing `times`.
///
/// Uniformization covers the whole grid when `n (1 + gamma) t_max` is within
/// [`UNIFORMIZATION_BUDGET`]. Otherwise it covers only the times below
/// `valid_from` and the leading term takes the rest; the method returned is
/// then [`GapMethod::Regenerative`]. The curve's `tolerance` bounds the error
/// of every entry in both cases.
pub fn complete_graph_survival(n: usize, gamma: f64, times: &[f64], tolerance: f64) -> Result<(SurvivalCurve, GapMethod)> {
    let chain = count_chain_generator(n, gamma)?;
    let (gen, init) = (chain.generator(), chain.full_start());
    let t_max = times.last().copied().unwrap_or(0.0);
    if n < 3 || n as f64 * (1.0 + gamma) * t_max <= UNIFORMIZATION_BUDGET {
        return Ok((survival_function(gen, &init, times, tolerance)?, GapMethod::Uniformization));
    }
    let m = metastable_analysis(n, gamma)?;
    let split = times.partition_point(|&t| t < m.valid_from());
    let mut curve = survival_function(gen, &init, &times[..split], tolerance)?;
    curve.times.extend_from_slice(&times[split..]);
    curve.probs.extend(times[split..].iter().map(|&t| m.survival(t)));
    if split < times.len() {
        curve.tolerance = curve.tolerance.max(LEADING_TERM_ERROR);
    }
    Ok((curve, GapMethod::Regenerative))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a / b - 1.0).abs()
    }

    // 90-digit references: mean, gap at u = 0.25, 1, 2, and E/beta - 1.
    const REFS: [(usize, f64, f64, [f64; 3], f64); 3] = [
        (12, 1.0, 211.786_544_011_544_01, [3.974_398_664_731_422_8e-3, 1.513_332_988_746_789_4e-6, -9.141_206_475_142_678_3e-4], -4.085_931_479_867_343_8e-6),
        (16, 2.0, 35.956_372_952_405_667, [1.730_593_030_181_317_3e-2, 2.333_686_156_079_466_5e-5, -3.888_859_377_758_521_5e-3], -6.162_947_113_591_084_6e-5),
        (30, 1.0, 19_229_757.380_688_929, [5.953_734_938_772_618_3e-8, 1.997_124_108_914_591_7e-16, -1.379_471_857_915_939_6e-8], -5.428_745_621_088_195_5e-16),
    ];

    #[test]
    fn matches_high_precision_references() {
        for (n, g, mean, gaps, ratio) in REFS {
            let m = metastable_analysis(n, g).unwrap();
            assert!(rel(m.mean, mean) < 1e-13, "n={n}: {}", m.mean);
            for (u, want) in [0.25, 1.0, 2.0].into_iter().zip(gaps) {
                let tol = if n == 30 && u == 1.0 { 1e-7 } else { 1e-10 };
                assert!(rel(m.gap(u), want) < tol, "n={n} u={u}: {} vs {want}", m.gap(u));
            }
            // At n = 30 the ratio is a 1e-16 difference of 1e-8 terms.
            let tol = if n == 30 { 1e-7 } else { 1e-9 };
            assert!(rel(m.mean_to_beta_minus_one(), ratio) < tol, "n={n}: {}", m.mean_to_beta_minus_one());
        }
    }

    #[test]
    fn three_neurons_mean() {
        let m = metastable_analysis(3, 1.0).unwrap();
        assert!((m.mean - 13.0 / 6.0).abs() < 1e-14);
    }

    #[test]
    fn agrees_with_uniformization() {
        for (n, g) in [(20, 1.0), (26, 2.0), (14, 0.5)] {
            let chain = count_chain_generator(n, g).unwrap();
            let init = chain.full_start();
            let m = metastable_analysis(n, g).unwrap();
            let times = [0.5 * m.mean, m.mean, 2.0 * m.mean];
            let curve = survival_function(chain.generator(), &init, &times, 1e-13).unwrap();
            for (t, p) in times.iter().zip(&curve.probs) {
                assert!((m.survival(*t) - p).abs() < 1e-11, "n={n} g={g} t={t}");
            }
            let beta = beta_quantile(chain.generator(), &init).unwrap();
            assert!(rel(m.beta(), beta) < 1e-8, "n={n}: {} vs {beta}", m.beta());
        }
    }

    #[test]
    fn hybrid_survival_matches_references() {
        let (n, g) = (30, 1.0);
        let times = [0.0, 10.0, 1e3, 3e3, 1e5, 1e9];
        let (curve, method) = complete_graph_survival(n, g, &times, 1e-13).unwrap();
        assert_eq!(method, GapMethod::Regenerative);
        // 60-digit matrix exponentials of the count chain.
        for (p, want) in curve.probs[3..5].iter().zip([0.999_844_105_858_248_83, 0.994_813_325_270_228_30]) {
            assert!((p - want).abs() < 1e-15, "{p} vs {want}");
        }
        let chain = count_chain_generator(n, g).unwrap();
        let direct = survival_function(chain.generator(), &chain.full_start(), &times[..5], 1e-13).unwrap();
        for (a, b) in curve.probs.iter().zip(&direct.probs) {
            assert!((a - b).abs() <= direct.tolerance, "{a} vs {b} (tolerance {})", direct.tolerance);
        }
        let (small, method) = complete_graph_survival(2, 1.0, &[0.0, 1.0], 1e-12).unwrap();
        assert_eq!(method, GapMethod::Uniformization);
        assert_eq!(small.probs[0], 1.0);
    }

    #[test]
    fn beta_matches_its_definition() {
        let m = metastable_analysis(60, 1.0).unwrap();
        assert!((m.survival(m.beta()) - (-1.0f64).exp()).abs() < 1e-12);
        assert_eq!(m.gap(0.0), 0.0);
    }

    #[test]
    fn gap_shrinks_with_n() {
        for g in [0.5, 1.0, 2.0] {
            let d: Vec<f64> = [10, 50, 200]
                .iter()
                .map(|&n| exponentiality_gap(n, g).unwrap().sup_distance)
                .collect();
            assert!(d[0] > d[1] && d[1] > d[2], "g={g}: {d:?}");
            assert!(d[2] > 0.0);
        }
    }

    #[test]
    fn dispatcher_picks_a_method() {
        assert_eq!(exponentiality_gap(10, 1.0).unwrap().method, GapMethod::Uniformization);
        let big = exponentiality_gap(200, 1.0).unwrap();
        assert_eq!(big.method, GapMethod::Regenerative);
        assert!(big.ratio_minus_one.abs() < 1e-50);
        let small = exponentiality_gap(10, 1.0).unwrap();
        assert!((small.sup_distance - 0.018_122_5).abs() < 1e-6, "{}", small.sup_distance);
    }

    #[test]
    fn rejects_small_or_degenerate() {
        assert!(metastable_analysis(2, 1.0).is_err());
        assert!(metastable_analysis(10, 0.0).is_err());
        assert!(exponentiality_gap(10, 0.0).is_err());
    }
}
