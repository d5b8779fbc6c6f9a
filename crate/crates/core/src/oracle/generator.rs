use crate::engine::ModelParams;
use crate::error::{Error, Result};
use crate::network::{Network, NetworkKind};

/// Largest network accepted by [`full_state_generator`].
pub const FULL_STATE_LIMIT: usize = 20;

/// Generator of a continuous-time chain restricted to its transient states.
///
/// Off-diagonal rates between transient states are stored as sparse rows;
/// the rate of jumping straight into the single absorbing state is kept
/// separately. The diagonal is implied: `-(row sum + exit)`. Keeping the exit
/// rates explicit lets the solvers work with non-negative quantities only.
#[derive(Debug, Clone, PartialEq)]
pub struct SubGenerator {
    /// Identifier of each transient state (bitmask or active count).
    states: Vec<u64>,
    rows: Vec<Vec<(usize, f64)>>,
    exit: Vec<f64>,
}

impl SubGenerator {
    /// Builds from per-state transition lists. Entries pointing at the same
    /// target are summed and self-loops are dropped (they do not change the law).
    pub fn new(states: Vec<u64>, rows: Vec<Vec<(usize, f64)>>, exit: Vec<f64>) -> Result<SubGenerator> {
        let n = states.len();
        if rows.len() != n || exit.len() != n {
            return Err(Error::InvalidParameter(
                "states, rows and exit rates must have equal length".into(),
            ));
        }
        if let Some(&e) = exit.iter().find(|e| !(e.is_finite() && **e >= 0.0)) {
            return Err(Error::InvalidParameter(format!("exit rate {e} is not a non-negative number")));
        }
        let mut clean = Vec::with_capacity(n);
        for (i, mut row) in rows.into_iter().enumerate() {
            for &(j, r) in &row {
                if j >= n {
                    return Err(Error::InvalidParameter(format!("state {i} jumps to unknown state {j}")));
                }
                if !(r.is_finite() && r >= 0.0) {
                    return Err(Error::InvalidParameter(format!("rate {r} from {i} to {j} is not a non-negative number")));
                }
            }
            row.retain(|&(j, r)| j != i && r > 0.0);
            row.sort_by_key(|&(j, _)| j);
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(row.len());
            for (j, r) in row {
                match merged.last_mut() {
                    Some((last, acc)) if *last == j => *acc += r,
                    _ => merged.push((j, r)),
                }
            }
            clean.push(merged);
        }
        Ok(SubGenerator { states, rows: clean, exit })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[u64] {
        &self.states
    }

    pub fn state_index(&self, id: u64) -> Option<usize> {
        self.states.binary_search(&id).ok()
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn exit_rate(&self, i: usize) -> f64 {
        self.exit[i]
    }

    /// Total rate of leaving state `i` (minus the diagonal entry).
    pub fn out_rate(&self, i: usize) -> f64 {
        self.exit[i] + self.rows[i].iter().map(|&(_, r)| r).sum::<f64>()
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// Errors unless every state can reach absorption.
    pub fn check_absorbing(&self) -> Result<()> {
        let n = self.len();
        let mut reverse = vec![Vec::new(); n];
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, _) in row {
                reverse[j].push(i);
            }
        }
        let mut reached = vec![false; n];
        let mut stack: Vec<usize> = (0..n).filter(|&i| self.exit[i] > 0.0).collect();
        for &i in &stack {
            reached[i] = true;
        }
        while let Some(j) = stack.pop() {
            for &i in &reverse[j] {
                if !reached[i] {
                    reached[i] = true;
                    stack.push(i);
                }
            }
        }
        match reached.iter().position(|r| !r) {
            None => Ok(()),
            Some(i) => Err(Error::Singular(format!(
                "absorption is unreachable from state {:#x}",
                self.states[i]
            ))),
        }
    }

    /// Point mass on the state with identifier `id`.
    pub fn point_mass(&self, id: u64) -> Result<Vec<f64>> {
        let idx = self
            .state_index(id)
            .ok_or_else(|| Error::InvalidParameter(format!("{id:#x} is not a transient state")))?;
        let mut v = vec![0.0; self.len()];
        v[idx] = 1.0;
        Ok(v)
    }
}

/// Generator on all non-empty configurations of `net` (bitmask state ids).
///
/// From a configuration with neuron `i` active: rate `gamma` to the leak
/// successor, rate 1 to the spike successor; a successor equal to the empty
/// configuration becomes exit rate.
pub fn full_state_generator(net: &Network, params: ModelParams) -> Result<SubGenerator> {
    let size = net.size();
    if size > FULL_STATE_LIMIT {
        return Err(Error::StateSpaceTooLarge {
            size,
            limit: FULL_STATE_LIMIT,
            hint: "for complete graphs use the count chain instead",
        });
    }
    let post_mask: Vec<u64> = (0..size)
        .map(|i| net.postsynaptic(i).iter().fold(0u64, |m, &j| m | 1 << j))
        .collect();
    let gamma = params.gamma();
    let count = (1u64 << size) - 1;
    let mut rows = Vec::with_capacity(count as usize);
    let mut exit = Vec::with_capacity(count as usize);
    for mask in 1..=count {
        let mut row = Vec::with_capacity(2 * size);
        let mut out = 0.0;
        let mut bits = mask;
        while bits != 0 {
            let i = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            let cleared = mask & !(1 << i);
            let spiked = cleared | post_mask[i];
            // Both maps silence i, so neither can be a self-loop.
            debug_assert!(cleared != mask && spiked != mask);
            for (target, rate) in [(cleared, gamma), (spiked, 1.0)] {
                if rate == 0.0 {
                    continue;
                }
                if target == 0 {
                    out += rate;
                } else {
                    row.push((target as usize - 1, rate));
                }
            }
        }
        rows.push(row);
        exit.push(out);
    }
    SubGenerator::new((1..=count).collect(), rows, exit)
}

/// Active-count chain of the complete graph on `n` neurons.
#[derive(Debug, Clone)]
pub struct CountChain {
    n: usize,
    gamma: f64,
    generator: SubGenerator,
}

impl CountChain {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn generator(&self) -> &SubGenerator {
        &self.generator
    }

    /// Point mass on `k` active neurons.
    pub fn start(&self, k: usize) -> Result<Vec<f64>> {
        self.generator.point_mass(k as u64)
    }

    /// Point mass on the all-active state.
    pub fn full_start(&self) -> Vec<f64> {
        self.start(self.n).expect("state n exists")
    }
}

/// Count chain on states `1..=n`: from `k`, leaks at rate `k*gamma` to
/// `k - 1` (absorption from 1) and spikes at rate `k` to `n - 1`.
/// Spikes from `n - 1` are self-loops and are dropped; for `n = 1` the lone
/// spike also empties the system.
pub fn count_chain_generator(n: usize, gamma: f64) -> Result<CountChain> {
    if n == 0 {
        return Err(Error::InvalidParameter("count chain needs n >= 1".into()));
    }
    let params = ModelParams::new(gamma)?;
    let g = params.gamma();
    let mut rows = Vec::with_capacity(n);
    let mut exit = Vec::with_capacity(n);
    for k in 1..=n {
        let kf = k as f64;
        let mut row = Vec::with_capacity(2);
        let mut out = 0.0;
        if k == n && n > 1 {
            // Any event from the full state leaves n - 1 active.
            row.push((n - 2, kf * (1.0 + g)));
        } else {
            if k == 1 {
                out += g;
            } else {
                row.push((k - 2, kf * g));
            }
            if n == 1 {
                out += 1.0;
            } else {
                row.push((n - 2, kf));
            }
        }
        rows.push(row);
        exit.push(out);
    }
    Ok(CountChain {
        n,
        gamma: g,
        generator: SubGenerator::new((1..=n as u64).collect(), rows, exit)?,
    })
}

/// Convenience: the right generator for a network, using the count chain for
/// complete graphs beyond the full-state limit.
pub fn generator_for(net: &Network, params: ModelParams) -> Result<SubGenerator> {
    match net.kind() {
        NetworkKind::Complete { n } if n > FULL_STATE_LIMIT => {
            Ok(count_chain_generator(n, params.gamma())?.generator)
        }
        _ => full_state_generator(net, params),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_neuron() {
        let g = full_state_generator(&Network::lattice(0), ModelParams::new(1.0).unwrap()).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g.exit_rate(0), 2.0);
        assert!(g.row(0).is_empty());
    }

    #[test]
    fn conservativeness() {
        let params = ModelParams::new(0.7).unwrap();
        for net in [Network::lattice(2), Network::complete(4).unwrap()] {
            let g = full_state_generator(&net, params).unwrap();
            for i in 0..g.len() {
                let k = g.states()[i].count_ones() as f64;
                // Every active neuron contributes 1 + gamma of outflow.
                assert!((g.out_rate(i) - k * 1.7).abs() < 1e-12);
                assert!(g.row(i).iter().all(|&(j, _)| j != i));
            }
        }
    }

    #[test]
    fn count_chain_shapes() {
        let one = count_chain_generator(1, 1.0).unwrap();
        assert_eq!(one.generator().exit_rate(0), 2.0);

        let two = count_chain_generator(2, 1.0).unwrap();
        let g = two.generator();
        assert_eq!(g.row(1), &[(0, 4.0)]);
        assert!(g.row(0).is_empty(), "spike from 1 on K_2 is a self-loop");
        assert_eq!(g.exit_rate(0), 1.0);

        let five = count_chain_generator(5, 2.0).unwrap();
        let g = five.generator();
        assert_eq!(g.row(2), &[(1, 6.0), (3, 3.0)]); // k=3
        assert_eq!(g.row(3), &[(2, 8.0)]); // k=4=N-1, spike self-loop dropped
        assert_eq!(g.row(4), &[(3, 15.0)]); // k=5
        assert_eq!(g.row(0), &[(3, 1.0)]); // k=1
        assert_eq!(g.exit_rate(0), 2.0);
    }

    #[test]
    fn size_cap() {
        let err = full_state_generator(&Network::lattice(10), ModelParams::new(1.0).unwrap()).unwrap_err();
        assert!(matches!(err, Error::StateSpaceTooLarge { size: 21, .. }));
        assert!(err.to_string().contains("count chain"));
    }

    #[test]
    fn unreachable_absorption_detected() {
        let g = full_state_generator(&Network::lattice(1), ModelParams::new(0.0).unwrap()).unwrap();
        assert!(matches!(g.check_absorbing(), Err(Error::Singular(_))));
        let g = full_state_generator(&Network::lattice(1), ModelParams::new(0.5).unwrap()).unwrap();
        g.check_absorbing().unwrap();
    }

    #[test]
    fn merges_and_drops() {
        let g = SubGenerator::new(vec![1, 2], vec![vec![(1, 1.0), (1, 2.0), (0, 5.0)], vec![]], vec![0.0, 1.0]).unwrap();
        assert_eq!(g.row(0), &[(1, 3.0)]);
        assert!(SubGenerator::new(vec![1], vec![vec![(0, -1.0)]], vec![0.0]).is_err());
    }
}
