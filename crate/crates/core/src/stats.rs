//! Estimators and goodness-of-fit tests for extinction-time samples.

use crate::engine::{ExtinctionOutcome, Status};
use crate::error::{Error, Result};

/// Asymptotic Kolmogorov constant at the 1% level.
pub const KS_CRITICAL_1PCT: f64 = 1.628;

/// 97.5% standard normal quantile, for two-sided 95% intervals.
const Z_975: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SampleSummary {
    pub count: usize,
    pub mean: f64,
    /// Unbiased; 0 for a single sample.
    pub variance: f64,
    pub std_error: f64,
    pub min: f64,
    pub max: f64,
    pub censored_count: usize,
}

impl SampleSummary {
    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }

    pub fn coefficient_of_variation(&self) -> f64 {
        self.std_dev() / self.mean
    }
}

/// What to do with censored outcomes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CensoredPolicy {
    #[default]
    Reject,
    Drop,
}

impl CensoredPolicy {
    pub fn as_str(self) -> &'static str {
        match self {
            CensoredPolicy::Reject => "reject",
            CensoredPolicy::Drop => "drop",
        }
    }
}

/// Moments of `samples`.
///
/// Values are shifted by the first sample before summing, which keeps the
/// variance accurate when all samples share a large offset.
pub fn summarize(samples: &[f64]) -> Result<SampleSummary> {
    summarize_with_censored(samples, 0)
}

fn summarize_with_censored(samples: &[f64], censored_count: usize) -> Result<SampleSummary> {
    if samples.is_empty() {
        return Err(if censored_count > 0 {
            Error::InvalidParameter(format!("all {censored_count} samples are censored"))
        } else {
            Error::InvalidParameter("no samples to summarize".into())
        });
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter("samples must be finite".into()));
    }
    let n = samples.len() as f64;
    let shift = samples[0];
    let mean_shifted = samples.iter().map(|x| x - shift).sum::<f64>() / n;
    let ss: f64 = samples.iter().map(|x| (x - shift - mean_shifted).powi(2)).sum();
    let variance = if samples.len() > 1 { ss / (n - 1.0) } else { 0.0 };
    Ok(SampleSummary {
        count: samples.len(),
        mean: shift + mean_shifted,
        variance,
        std_error: (variance / n).sqrt(),
        min: samples.iter().copied().fold(f64::INFINITY, f64::min),
        max: samples.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        censored_count,
    })
}

/// Extinction times of the uncensored outcomes, after applying `policy`.
pub fn extinction_times(outcomes: &[ExtinctionOutcome], policy: CensoredPolicy) -> Result<Vec<f64>> {
    let censored = outcomes.iter().filter(|o| o.status == Status::Censored).count();
    if censored > 0 && policy == CensoredPolicy::Reject {
        return Err(Error::CensoredInput { censored, total: outcomes.len() });
    }
    Ok(outcomes.iter().filter(|o| o.status == Status::Extinct).map(|o| o.time).collect())
}

/// Moments of the extinct outcomes; censored ones are counted but excluded.
pub fn summarize_outcomes(outcomes: &[ExtinctionOutcome]) -> Result<SampleSummary> {
    let censored = outcomes.iter().filter(|o| o.status == Status::Censored).count();
    let times = extinction_times(outcomes, CensoredPolicy::Drop)?;
    summarize_with_censored(&times, censored)
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub enum Normalization {
    /// Samples are used as given.
    None,
    /// Divide by the sample mean.
    SampleMean,
    /// Divide by a known mean.
    Mean(f64),
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub n: usize,
    pub critical_value: f64,
    pub reject_at_1pct: bool,
}

fn sorted(samples: &[f64]) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(Error::InvalidParameter("empty sample".into()));
    }
    if samples.iter().any(|x| x.is_nan()) {
        return Err(Error::InvalidParameter("sample contains NaN".into()));
    }
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Exact sup-distance between the empirical survival function of `samples`
/// and a continuous survival function `surv`.
pub fn survival_sup_distance(samples: &[f64], surv: impl Fn(f64) -> f64) -> Result<f64> {
    let xs = sorted(samples)?;
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let s = surv(x);
        let above = 1.0 - i as f64 / n;
        let below = 1.0 - (i + 1) as f64 / n;
        d = d.max((above - s).abs()).max((s - below).abs());
    }
    Ok(d)
}

/// Same as [`survival_sup_distance`] for ascending `sorted` samples with the
/// survival function already evaluated at them.
pub fn survival_sup_distance_sorted(sorted: &[f64], surv: &[f64]) -> Result<f64> {
    if sorted.is_empty() || sorted.len() != surv.len() {
        return Err(Error::InvalidParameter("need one survival value per sample".into()));
    }
    if sorted.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::InvalidParameter("samples must be sorted ascending".into()));
    }
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &s) in surv.iter().enumerate() {
        d = d.max((1.0 - i as f64 / n - s).abs()).max((s - 1.0 + (i + 1) as f64 / n).abs());
    }
    Ok(d)
}

/// Large-sample standard error of the unbiased sample variance,
/// `sqrt((m4 - s^4) / n)` with `m4` the fourth central moment.
pub fn variance_std_error(samples: &[f64]) -> Result<f64> {
    let s = summarize(samples)?;
    if s.count < 2 {
        return Err(Error::InvalidParameter("variance standard error needs two samples".into()));
    }
    let n = s.count as f64;
    let m4 = samples.iter().map(|x| (x - s.mean).powi(4)).sum::<f64>() / n;
    Ok(((m4 - s.variance * s.variance).max(0.0) / n).sqrt())
}

/// One-sample KS test against `Exp(1)`.
pub fn ks_to_unit_exponential(samples: &[f64], norm: Normalization) -> Result<KsResult> {
    if samples.is_empty() {
        return Err(Error::InvalidParameter("KS test needs at least one sample".into()));
    }
    let scale = match norm {
        Normalization::None => 1.0,
        Normalization::SampleMean => summarize(samples)?.mean,
        Normalization::Mean(m) => m,
    };
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::InvalidParameter(format!("normalizing mean must be positive, got {scale}")));
    }
    let statistic = survival_sup_distance(samples, |x| (-(x / scale).max(0.0)).exp())?;
    let n = samples.len();
    let critical_value = KS_CRITICAL_1PCT / (n as f64).sqrt();
    Ok(KsResult { statistic, n, critical_value, reject_at_1pct: statistic > critical_value })
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct TwoSampleKs {
    pub statistic: f64,
    pub n: usize,
    pub m: usize,
    pub critical_value: f64,
    pub reject_at_1pct: bool,
}

/// Two-sample KS test with the asymptotic 1% critical value.
pub fn two_sample_ks(a: &[f64], b: &[f64]) -> Result<TwoSampleKs> {
    let (xs, ys) = (sorted(a)?, sorted(b)?);
    let (n, m) = (xs.len(), ys.len());
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let t = xs[i].min(ys[j]);
        while i < n && xs[i] <= t {
            i += 1;
        }
        while j < m && ys[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    let (nf, mf) = (n as f64, m as f64);
    let critical_value = KS_CRITICAL_1PCT * ((nf + mf) / (nf * mf)).sqrt();
    Ok(TwoSampleKs { statistic: d, n, m, critical_value, reject_at_1pct: d > critical_value })
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct QuantileEstimate {
    /// CDF level of the quantile.
    pub level: f64,
    pub value: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Order-statistic estimate of the time where the survival function equals
/// `e^{-1}`, with a 95% distribution-free interval from the normal
/// approximation of the binomial rank distribution.
pub fn empirical_beta(samples: &[f64]) -> Result<QuantileEstimate> {
    let n = samples.len();
    if n < 20 {
        return Err(Error::InvalidParameter(format!("empirical beta needs at least 20 samples, got {n}")));
    }
    let xs = sorted(samples)?;
    let q = 1.0 - (-1.0f64).exp();
    let nf = n as f64;
    let rank = (q * nf).ceil() as usize;
    let half = Z_975 * (nf * q * (1.0 - q)).sqrt();
    let lo = ((q * nf - half).floor() as usize).clamp(1, rank);
    let hi = ((q * nf + half).ceil() as usize).clamp(rank, n);
    Ok(QuantileEstimate { level: q, value: xs[rank - 1], ci_low: xs[lo - 1], ci_high: xs[hi - 1] })
}

/// Dvoretzky-Kiefer-Wolfowitz half-width `sqrt(ln(2/level) / (2n))`.
pub fn dkw_band(n: usize, level: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter("DKW band needs n >= 1".into()));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidParameter(format!("DKW level must lie in (0, 1), got {level}")));
    }
    Ok(((2.0 / level).ln() / (2.0 * n as f64)).sqrt())
}
