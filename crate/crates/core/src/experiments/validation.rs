//! Exact identities that must hold with zero violations.

use crate::engine::{build_timeline, check_coupling, CouplingReport, ModelParams};
use crate::error::Result;
use crate::network::Network;
use crate::oracle::{
    count_chain_generator, expected_absorption, full_state_generator, invariant_measure, modified_chain,
    survival_function, top_mass_lower_bound,
};
use crate::output::{fmt_f64, CsvTable};
use crate::rng::{derive_seed, stream};

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ValidationRow {
    pub check: &'static str,
    pub cases: usize,
    pub violations: usize,
    /// Largest observed error, 0 for exact set identities.
    pub worst: f64,
    pub threshold: f64,
}

impl ValidationRow {
    pub fn pass(&self) -> bool {
        self.violations == 0
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ValidationReport {
    pub seed: u64,
    pub rows: Vec<ValidationRow>,
}

impl ValidationReport {
    pub fn pass(&self) -> bool {
        self.rows.iter().all(ValidationRow::pass)
    }

    pub fn to_csv(&self) -> CsvTable {
        let mut t = CsvTable::new(["check", "cases", "violations", "worst", "threshold", "pass"]);
        for r in &self.rows {
            t.push(vec![
                r.check.to_string(),
                r.cases.to_string(),
                r.violations.to_string(),
                fmt_f64(r.worst),
                fmt_f64(r.threshold),
                r.pass().to_string(),
            ]);
        }
        t
    }
}

/// Timelines per network in the coupling check.
pub const COUPLING_TIMELINES: usize = 100;
pub const COUPLING_HORIZON: f64 = 20.0;

/// Coupling identities on shared timelines for lattice `N = 3` and `K_5` at `gamma = 1`.
pub fn coupling_identities(seed: u64) -> Result<CouplingReport> {
    let params = ModelParams::new(1.0)?;
    let times: Vec<f64> = (0..=40).map(|i| i as f64 * 0.5).collect();
    let mut total = CouplingReport::default();
    for (tag, net) in [(3u64, Network::lattice(3)), (5, Network::complete(5)?)] {
        let s = derive_seed(seed, tag);
        for i in 0..COUPLING_TIMELINES {
            let mut rng = stream(s, i as u64);
            let tl = build_timeline(&net, params, COUPLING_HORIZON, &mut rng)?;
            total.merge(&check_coupling(&tl, &net, &times, &mut rng)?);
        }
    }
    Ok(total)
}

/// Runs the coupling identities and the oracle identities.
pub fn validation_suite(seed: u64) -> Result<ValidationReport> {
    let mut rows = Vec::new();
    let c = coupling_identities(seed)?;
    rows.push(ValidationRow {
        check: "additivity",
        cases: c.additivity_checks,
        violations: c.additivity_violations,
        worst: 0.0,
        threshold: 0.0,
    });
    rows.push(ValidationRow {
        check: "monotonicity",
        cases: c.monotonicity_checks,
        violations: c.monotonicity_violations,
        worst: 0.0,
        threshold: 0.0,
    });
    rows.push(ValidationRow {
        check: "extinction_coupling",
        cases: c.extinction_checks,
        violations: c.extinction_violations,
        worst: 0.0,
        threshold: 0.0,
    });

    let (mut mean_row, mut surv_row) = (
        ValidationRow { check: "lumping_mean", cases: 0, violations: 0, worst: 0.0, threshold: 1e-10 },
        ValidationRow { check: "lumping_survival", cases: 0, violations: 0, worst: 0.0, threshold: 1e-8 },
    );
    for n in [2, 3, 4] {
        for g in [0.5, 1.0, 2.0] {
            let (rel, sup) = lumping_gap(n, g)?;
            for (row, err) in [(&mut mean_row, rel), (&mut surv_row, sup)] {
                row.cases += 1;
                row.worst = row.worst.max(err);
                row.violations += (err > row.threshold) as usize;
            }
        }
    }
    rows.push(mean_row);
    rows.push(surv_row);

    let mut stat = ValidationRow { check: "invariant_stationarity", cases: 0, violations: 0, worst: 0.0, threshold: 1e-10 };
    let mut norm = ValidationRow { check: "invariant_normalization", cases: 0, violations: 0, worst: 0.0, threshold: 1e-12 };
    let mut top = ValidationRow { check: "invariant_top_mass", cases: 0, violations: 0, worst: 0.0, threshold: 0.0 };
    for n in [3, 10, 100, 1000] {
        for g in [0.5, 1.0, 2.0] {
            let mu = invariant_measure(n, g)?;
            let q = modified_chain(n, g)?;
            let res = q.left_apply(&mu.mu).iter().fold(0.0f64, |m, x| m.max(x.abs()));
            stat.cases += 1;
            stat.worst = stat.worst.max(res);
            stat.violations += (res > stat.threshold || mu.get(n) != 0.0) as usize;
            let dev = (mu.mu.iter().sum::<f64>() - 1.0).abs();
            norm.cases += 1;
            norm.worst = norm.worst.max(dev);
            norm.violations += (dev > norm.threshold) as usize;
            if let Some(bound) = top_mass_lower_bound(n, g) {
                top.cases += 1;
                top.violations += (mu.get(n - 1) < bound) as usize;
            }
        }
    }
    rows.extend([stat, norm, top]);
    Ok(ValidationReport { seed, rows })
}

/// Relative gap of the means and sup gap of the survival curves on
/// `[0, 5 mean]` between the full-state chain of `K_n` and its count chain.
pub fn lumping_gap(n: usize, gamma: f64) -> Result<(f64, f64)> {
    let params = ModelParams::new(gamma)?;
    let full = full_state_generator(&Network::complete(n)?, params)?;
    let full_init = full.point_mass((1u64 << n) - 1)?;
    let chain = count_chain_generator(n, gamma)?;
    let m_full = expected_absorption(&full, &full_init)?;
    let m_count = expected_absorption(chain.generator(), &chain.full_start())?;
    let times: Vec<f64> = (0..=200).map(|i| i as f64 * 5.0 * m_count / 200.0).collect();
    let a = survival_function(&full, &full_init, &times, 1e-12)?;
    let b = survival_function(chain.generator(), &chain.full_start(), &times, 1e-12)?;
    let sup = a.probs.iter().zip(&b.probs).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    Ok(((m_full / m_count - 1.0).abs(), sup))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_is_clean() {
        let r = validation_suite(1).unwrap();
        assert!(r.pass(), "{r:?}");
        let add = r.rows.iter().find(|x| x.check == "additivity").unwrap();
        assert_eq!(add.cases, 2 * COUPLING_TIMELINES * 41);
    }
}
