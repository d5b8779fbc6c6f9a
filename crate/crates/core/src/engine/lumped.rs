//! Fast exact sampler of complete-graph extinction times.
//!
//! On the complete graph only the number of active neurons matters. From
//! `k` active neurons the next event comes at rate `k(1 + gamma)`; a leak
//! lowers the count by one and a spike resets it to `N - 1` (the spiker goes
//! quiescent, everyone else becomes active). Count `N - 1` is therefore a
//! regeneration point: every excursion below it either returns there or
//! dies, and it dies only after `N - 2` leaks in a row once it has left
//! `N - 1`.
//!
//! Extinction times grow geometrically in `N`, so stepping through events is
//! hopeless beyond a few dozen neurons. Instead the sampler draws the number
//! of failed excursions (geometric), spreads them over the levels they reach
//! by successive binomial thinning, and adds one gamma variate per level for
//! the total holding time there. The law of the result equals the law of the
//! event-by-event process, apart from the normal approximation used for
//! binomial draws with more than [`EXACT_BINOMIAL_LIMIT`] trials.

use rand::Rng;
use rand_distr::{Binomial, Distribution, Gamma, Normal};

use crate::error::{Error, Result};
use crate::rng::{exponential, open_unit};

/// Binomial draws with more trials than this use a normal approximation.
pub const EXACT_BINOMIAL_LIMIT: f64 = 1e12;

#[derive(Debug, Clone)]
pub struct CompleteGraphSampler {
    n: usize,
    gamma: f64,
    /// Probability of a leak at any event.
    leak_prob: f64,
    /// `leak_prob^(N-2)`: an excursion from `N - 1` ends in extinction.
    success: f64,
}

impl CompleteGraphSampler {
    pub fn new(n: usize, gamma: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("complete graph needs n >= 1".into()));
        }
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "count-chain sampler needs gamma > 0, got {gamma}"
            )));
        }
        let leak_prob = gamma / (1.0 + gamma);
        let success = if n >= 3 { leak_prob.powi(n as i32 - 2) } else { 1.0 };
        Ok(CompleteGraphSampler { n, gamma, leak_prob, success })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    fn level_rate(&self, k: usize) -> f64 {
        let n = self.n;
        if k == n {
            n as f64 * (1.0 + self.gamma)
        } else if k + 1 == n {
            // Spikes from N - 1 keep the count at N - 1.
            k as f64 * self.gamma
        } else {
            k as f64 * (1.0 + self.gamma)
        }
    }

    /// Extinction time from the all-active state.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.sample_from(self.n, rng)
    }

    /// Extinction time starting from `k` active neurons (`0 <= k <= N`).
    pub fn sample_from<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> f64 {
        assert!(k <= self.n, "cannot start from {k} active neurons out of {}", self.n);
        let n = self.n;
        if k == 0 {
            return 0.0;
        }
        match n {
            1 => return exponential(rng, 1.0 + self.gamma),
            2 => {
                let mut t = 0.0;
                if k == 2 {
                    t += exponential(rng, self.level_rate(2));
                }
                return t + exponential(rng, self.level_rate(1));
            }
            _ => {}
        }
        let mut t = 0.0;
        let mut k = k;
        if k == n {
            t += exponential(rng, self.level_rate(n));
            k = n - 1;
        }
        if k < n - 1 {
            // Partial excursion from below the regeneration level.
            loop {
                t += exponential(rng, self.level_rate(k));
                if rng.random::<f64>() < self.leak_prob {
                    k -= 1;
                    if k == 0 {
                        return t;
                    }
                } else {
                    break;
                }
            }
        }
        t + self.from_regeneration(rng)
    }

    /// Absorption time starting from `N - 1` active neurons, `N >= 3`.
    fn from_regeneration<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let n = self.n;
        let failures = geometric_failures(rng, self.success);
        // Time at level N - 1: one visit per excursion, the last one included.
        let mut t = gamma_sum(rng, failures + 1.0, self.level_rate(n - 1));
        // Failed excursions still alive at level k, walking down from N - 2.
        let mut alive = failures;
        let a = self.leak_prob;
        let mut a_pow_k = a.powi(n as i32 - 2); // a^k for k = N - 2
        for k in (1..=n - 2).rev() {
            t += gamma_sum(rng, alive + 1.0, self.level_rate(k));
            if k == 1 {
                break;
            }
            // Given failure, P(leak at k) = a (1 - a^(k-1)) / (1 - a^k).
            let a_pow_km1 = a_pow_k / a;
            let q = a * (1.0 - a_pow_km1) / (1.0 - a_pow_k);
            alive = binomial(rng, alive, q);
            a_pow_k = a_pow_km1;
        }
        t
    }
}

/// Number of failures before the first success, as an `f64` (may exceed `u64`).
fn geometric_failures<R: Rng + ?Sized>(rng: &mut R, p: f64) -> f64 {
    if p >= 1.0 {
        return 0.0;
    }
    (open_unit(rng).ln() / (-p).ln_1p()).floor()
}

/// Sum of `count` independent `Exp(rate)` variables.
fn gamma_sum<R: Rng + ?Sized>(rng: &mut R, count: f64, rate: f64) -> f64 {
    if count <= 0.0 {
        0.0
    } else if count == 1.0 {
        exponential(rng, rate)
    } else {
        Gamma::new(count, 1.0 / rate)
            .expect("positive shape and scale")
            .sample(rng)
    }
}

fn binomial<R: Rng + ?Sized>(rng: &mut R, trials: f64, p: f64) -> f64 {
    if trials <= 0.0 || p <= 0.0 {
        return 0.0;
    }
    if p >= 1.0 {
        return trials;
    }
    if trials <= EXACT_BINOMIAL_LIMIT {
        Binomial::new(trials as u64, p).expect("valid binomial").sample(rng) as f64
    } else {
        let mean = trials * p;
        let sd = (trials * p * (1.0 - p)).sqrt();
        let x = Normal::new(mean, sd).expect("finite normal").sample(rng).round();
        x.clamp(0.0, trials)
    }
}
