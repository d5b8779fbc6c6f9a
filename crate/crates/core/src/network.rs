//! Interaction graphs.
//!
//! A [`Network`] stores, for every neuron, the set of its presynaptic
//! neurons: the neurons whose spikes activate it. Neurons carry integer
//! labels (the finite lattice uses `-N..=N`, the complete graph `1..=N`) but
//! are addressed internally by contiguous indices `0..size`, which is what the
//! simulation engine and the bitset state encoding use.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NetworkKind {
    /// Finite one-dimensional lattice on `-n..=n`.
    Lattice { n: usize },
    /// Complete graph on `1..=n` without self-loops.
    Complete { n: usize },
    Custom,
}

#[derive(Debug, Clone)]
pub struct Network {
    kind: NetworkKind,
    labels: Vec<i64>,
    index: HashMap<i64, usize>,
    presynaptic: Vec<Vec<usize>>,
    postsynaptic: Vec<Vec<usize>>,
}

impl Network {
    /// Finite lattice with `2n + 1` neurons labelled `-n..=n`.
    ///
    /// Interior neurons listen to both neighbours, the two boundary neurons
    /// to their single neighbour. `n = 0` gives one isolated neuron.
    pub fn lattice(n: usize) -> Network {
        let size = 2 * n + 1;
        let labels: Vec<i64> = (0..size).map(|i| i as i64 - n as i64).collect();
        let presynaptic = (0..size)
            .map(|i| {
                let mut pre = Vec::with_capacity(2);
                if i > 0 {
                    pre.push(i - 1);
                }
                if i + 1 < size {
                    pre.push(i + 1);
                }
                pre
            })
            .collect();
        Network::assemble(NetworkKind::Lattice { n }, labels, presynaptic)
    }

    /// Complete graph on `1..=n`; every neuron listens to every other one.
    pub fn complete(n: usize) -> Result<Network> {
        if n == 0 {
            return Err(Error::InvalidNetwork(
                "complete graph needs at least one neuron".into(),
            ));
        }
        let labels = (1..=n as i64).collect();
        let presynaptic = (0..n)
            .map(|i| (0..n).filter(|&j| j != i).collect())
            .collect();
        Ok(Network::assemble(
            NetworkKind::Complete { n },
            labels,
            presynaptic,
        ))
    }

    /// Arbitrary digraph from `(label, presynaptic labels)` entries.
    ///
    /// Neuron order follows the entry order. Self-loops, duplicate labels,
    /// duplicates inside one presynaptic set and references to labels without
    /// an entry of their own are all rejected.
    pub fn custom<I, P>(entries: I) -> Result<Network>
    where
        I: IntoIterator<Item = (i64, P)>,
        P: IntoIterator<Item = i64>,
    {
        let entries: Vec<(i64, Vec<i64>)> = entries
            .into_iter()
            .map(|(label, pre)| (label, pre.into_iter().collect()))
            .collect();
        if entries.is_empty() {
            return Err(Error::InvalidNetwork("network has no neurons".into()));
        }
        let mut index = HashMap::with_capacity(entries.len());
        for (i, (label, _)) in entries.iter().enumerate() {
            if index.insert(*label, i).is_some() {
                return Err(Error::InvalidNetwork(format!(
                    "neuron {label} is declared twice"
                )));
            }
        }
        let mut presynaptic = Vec::with_capacity(entries.len());
        for (label, pre) in &entries {
            let mut seen = BTreeSet::new();
            let mut resolved = Vec::with_capacity(pre.len());
            for &j in pre {
                if j == *label {
                    return Err(Error::InvalidNetwork(format!(
                        "neuron {label} lists itself as presynaptic"
                    )));
                }
                if !seen.insert(j) {
                    return Err(Error::InvalidNetwork(format!(
                        "neuron {label} lists presynaptic neuron {j} more than once"
                    )));
                }
                let &idx = index.get(&j).ok_or_else(|| {
                    Error::InvalidNetwork(format!(
                        "neuron {label} references undeclared neuron {j}"
                    ))
                })?;
                resolved.push(idx);
            }
            resolved.sort_unstable();
            presynaptic.push(resolved);
        }
        let labels = entries.iter().map(|(l, _)| *l).collect();
        Ok(Network::assemble(NetworkKind::Custom, labels, presynaptic))
    }

    /// Parses the plain-text adjacency format: one line per neuron,
    /// `i: j1 j2 ...` meaning the presynaptic set of `i` is `{j1, j2, ...}`.
    /// Blank lines and lines starting with `#` are skipped.
    pub fn parse_adjacency(text: &str) -> Result<Network> {
        let mut entries = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                line: lineno + 1,
                message,
            };
            let (head, tail) = line
                .split_once(':')
                .ok_or_else(|| parse_err(format!("expected `i: j1 j2 ...`, got `{line}`")))?;
            let label: i64 = head
                .trim()
                .parse()
                .map_err(|_| parse_err(format!("bad neuron label `{}`", head.trim())))?;
            let pre = tail
                .split_whitespace()
                .map(|tok| {
                    tok.parse::<i64>()
                        .map_err(|_| parse_err(format!("bad neuron label `{tok}`")))
                })
                .collect::<Result<Vec<_>>>()?;
            entries.push((label, pre));
        }
        Network::custom(entries)
    }

    pub fn from_adjacency_file(path: impl AsRef<Path>) -> Result<Network> {
        let text = std::fs::read_to_string(path)?;
        Network::parse_adjacency(&text)
    }

    /// Serializes to the adjacency format accepted by [`Network::parse_adjacency`].
    pub fn to_adjacency_string(&self) -> String {
        let mut out = String::new();
        for (i, pre) in self.presynaptic.iter().enumerate() {
            let _ = write!(out, "{}:", self.labels[i]);
            for &j in pre {
                let _ = write!(out, " {}", self.labels[j]);
            }
            out.push('\n');
        }
        out
    }

    fn assemble(kind: NetworkKind, labels: Vec<i64>, presynaptic: Vec<Vec<usize>>) -> Network {
        let mut postsynaptic = vec![Vec::new(); labels.len()];
        for (i, pre) in presynaptic.iter().enumerate() {
            for &j in pre {
                postsynaptic[j].push(i);
            }
        }
        let index = labels.iter().enumerate().map(|(i, &l)| (l, i)).collect();
        Network {
            kind,
            labels,
            index,
            presynaptic,
            postsynaptic,
        }
    }

    pub fn kind(&self) -> NetworkKind {
        self.kind
    }

    pub fn size(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[i64] {
        &self.labels
    }

    pub fn label(&self, idx: usize) -> i64 {
        self.labels[idx]
    }

    pub fn index_of(&self, label: i64) -> Result<usize> {
        self.index
            .get(&label)
            .copied()
            .ok_or(Error::UnknownNeuron(label))
    }

    /// Presynaptic indices of neuron `idx`, sorted.
    pub fn presynaptic(&self, idx: usize) -> &[usize] {
        &self.presynaptic[idx]
    }

    /// Indices of the neurons activated when `idx` spikes, sorted.
    pub fn postsynaptic(&self, idx: usize) -> &[usize] {
        &self.postsynaptic[idx]
    }

    pub fn presynaptic_labels(&self, label: i64) -> Result<BTreeSet<i64>> {
        let idx = self.index_of(label)?;
        Ok(self.presynaptic[idx].iter().map(|&j| self.labels[j]).collect())
    }

    /// `{ j : label ∈ presynaptic(j) }`, by label.
    pub fn postsynaptic_labels(&self, label: i64) -> Result<BTreeSet<i64>> {
        let idx = self.index_of(label)?;
        Ok(self.postsynaptic[idx].iter().map(|&j| self.labels[j]).collect())
    }

    /// Number of directed edges `j -> i` with `j` presynaptic to `i`.
    pub fn edge_count(&self) -> usize {
        self.presynaptic.iter().map(Vec::len).sum()
    }

    pub fn describe(&self) -> String {
        match self.kind {
            NetworkKind::Lattice { n } => format!("lattice(n={n})"),
            NetworkKind::Complete { n } => format!("complete(n={n})"),
            NetworkKind::Custom => format!("custom(size={})", self.size()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(xs: &[i64]) -> BTreeSet<i64> {
        xs.iter().copied().collect()
    }

    #[test]
    fn lattice_one() {
        let net = Network::lattice(1);
        assert_eq!(net.labels(), &[-1, 0, 1]);
        assert_eq!(net.presynaptic_labels(0).unwrap(), set(&[-1, 1]));
        assert_eq!(net.presynaptic_labels(1).unwrap(), set(&[0]));
        assert_eq!(net.presynaptic_labels(-1).unwrap(), set(&[0]));
    }

    #[test]
    fn lattice_zero_is_isolated_neuron() {
        let net = Network::lattice(0);
        assert_eq!(net.size(), 1);
        assert_eq!(net.labels(), &[0]);
        assert!(net.presynaptic(0).is_empty());
        assert_eq!(net.edge_count(), 0);
    }

    #[test]
    fn lattice_two() {
        let net = Network::lattice(2);
        assert_eq!(net.size(), 5);
        assert_eq!(net.presynaptic_labels(2).unwrap(), set(&[1]));
        assert_eq!(net.presynaptic_labels(-2).unwrap(), set(&[-1]));
        assert_eq!(net.presynaptic_labels(0).unwrap(), set(&[-1, 1]));
    }

    #[test]
    fn lattice_sizes() {
        for n in 0..=100 {
            assert_eq!(Network::lattice(n).size(), 2 * n + 1);
        }
    }

    #[test]
    fn complete_graphs() {
        let one = Network::complete(1).unwrap();
        assert!(one.presynaptic(0).is_empty());

        let two = Network::complete(2).unwrap();
        assert_eq!(two.presynaptic_labels(1).unwrap(), set(&[2]));
        assert_eq!(two.presynaptic_labels(2).unwrap(), set(&[1]));

        let three = Network::complete(3).unwrap();
        assert_eq!(three.presynaptic_labels(1).unwrap(), set(&[2, 3]));
        assert_eq!(three.presynaptic_labels(2).unwrap(), set(&[1, 3]));
        assert_eq!(three.presynaptic_labels(3).unwrap(), set(&[1, 2]));
    }

    #[test]
    fn complete_rejects_empty() {
        assert!(matches!(Network::complete(0), Err(Error::InvalidNetwork(_))));
    }

    #[test]
    fn postsynaptic_queries() {
        let lat = Network::lattice(1);
        assert_eq!(lat.postsynaptic_labels(0).unwrap(), set(&[-1, 1]));
        let k3 = Network::complete(3).unwrap();
        assert_eq!(k3.postsynaptic_labels(2).unwrap(), set(&[1, 3]));
        let custom = Network::custom([(1, vec![]), (2, vec![1])]).unwrap();
        assert_eq!(custom.postsynaptic_labels(1).unwrap(), set(&[2]));
        assert!(custom.postsynaptic_labels(2).unwrap().is_empty());
        assert!(matches!(
            custom.postsynaptic_labels(7),
            Err(Error::UnknownNeuron(7))
        ));
    }

    #[test]
    fn symmetric_topologies() {
        let nets = [
            Network::lattice(0),
            Network::lattice(4),
            Network::complete(1).unwrap(),
            Network::complete(6).unwrap(),
        ];
        for net in &nets {
            for i in 0..net.size() {
                for j in 0..net.size() {
                    assert_eq!(
                        net.presynaptic(j).contains(&i),
                        net.presynaptic(i).contains(&j),
                        "{} asymmetric at ({i},{j})",
                        net.describe()
                    );
                }
                assert_eq!(net.presynaptic(i), net.postsynaptic(i));
            }
        }
    }

    #[test]
    fn custom_rejections() {
        let self_loop = Network::custom([(1, vec![1])]);
        assert!(matches!(self_loop, Err(Error::InvalidNetwork(_))));
        let dup = Network::custom([(1, vec![2, 2]), (2, vec![])]);
        assert!(matches!(dup, Err(Error::InvalidNetwork(_))));
        let undeclared = Network::custom([(1, vec![5])]);
        assert!(matches!(undeclared, Err(Error::InvalidNetwork(_))));
        let twice = Network::custom([(1, vec![]), (1, vec![])]);
        assert!(matches!(twice, Err(Error::InvalidNetwork(_))));
    }

    #[test]
    fn adjacency_parse() {
        let net = Network::parse_adjacency("# ring\n1: 3\n2: 1\n\n3: 2\n").unwrap();
        assert_eq!(net.size(), 3);
        assert_eq!(net.presynaptic_labels(1).unwrap(), set(&[3]));
        assert_eq!(net.postsynaptic_labels(1).unwrap(), set(&[2]));
        let err = Network::parse_adjacency("1: 2\n2 1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = Network::parse_adjacency("1: x\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn adjacency_roundtrip_lattice() {
        let net = Network::lattice(3);
        let back = Network::parse_adjacency(&net.to_adjacency_string()).unwrap();
        assert_eq!(back.labels(), net.labels());
        for i in 0..net.size() {
            assert_eq!(back.presynaptic(i), net.presynaptic(i));
        }
    }

    fn arb_custom() -> impl Strategy<Value = Vec<(i64, Vec<i64>)>> {
        (1usize..12).prop_flat_map(|n| {
            proptest::collection::vec(proptest::collection::btree_set(0..n as i64, 0..n), n)
                .prop_map(move |sets| {
                    sets.into_iter()
                        .enumerate()
                        .map(|(i, s)| (i as i64, s.into_iter().filter(|&j| j != i as i64).collect()))
                        .collect()
                })
        })
    }

    proptest! {
        #[test]
        fn custom_indices_are_valid(entries in arb_custom()) {
            let net = Network::custom(entries.clone()).unwrap();
            for i in 0..net.size() {
                for &j in net.presynaptic(i) {
                    prop_assert!(j < net.size());
                    prop_assert_ne!(i, j);
                    prop_assert!(net.postsynaptic(j).contains(&i));
                }
            }
            let reparsed = Network::parse_adjacency(&net.to_adjacency_string()).unwrap();
            prop_assert_eq!(reparsed.edge_count(), net.edge_count());
        }
    }
}
