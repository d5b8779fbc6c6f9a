use std::fmt;

use crate::error::{Error, Result};
use crate::network::Network;

const NONE: usize = usize::MAX;

/// Active/quiescent state of every neuron.
///
/// Backed by a bit vector plus a dense list of active indices, so that
/// membership, insertion, removal and uniform sampling of an active neuron
/// are all O(1).
#[derive(Clone)]
pub struct Configuration {
    bits: Vec<u64>,
    width: usize,
    active: Vec<usize>,
    slot: Vec<usize>,
}

impl Configuration {
    pub fn empty(width: usize) -> Configuration {
        Configuration {
            bits: vec![0; width.div_ceil(64)],
            width,
            active: Vec::new(),
            slot: vec![NONE; width],
        }
    }

    pub fn full(width: usize) -> Configuration {
        Configuration::from_indices(width, 0..width)
    }

    /// Panics if an index is out of range.
    pub fn from_indices(width: usize, indices: impl IntoIterator<Item = usize>) -> Configuration {
        let mut cfg = Configuration::empty(width);
        for i in indices {
            assert!(i < width, "neuron index {i} out of range for width {width}");
            cfg.activate(i);
        }
        cfg
    }

    /// Configuration of `net` with exactly the given labels active.
    pub fn from_labels(net: &Network, labels: impl IntoIterator<Item = i64>) -> Result<Configuration> {
        let mut cfg = Configuration::empty(net.size());
        for label in labels {
            cfg.activate(net.index_of(label)?);
        }
        Ok(cfg)
    }

    /// Decodes a bitmask (bit `i` = neuron `i`); only for widths up to 64.
    pub fn from_mask(width: usize, mask: u64) -> Result<Configuration> {
        if width > 64 || (width < 64 && mask >> width != 0) {
            return Err(Error::InvalidParameter(format!(
                "mask {mask:#x} does not fit width {width}"
            )));
        }
        Ok(Configuration::from_indices(
            width,
            (0..width).filter(|&i| mask >> i & 1 == 1),
        ))
    }

    /// Low 64 bits of the state.
    pub fn mask(&self) -> u64 {
        self.bits.first().copied().unwrap_or(0)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn count(&self) -> usize {
        self.active.len()
    }

    pub fn is_extinct(&self) -> bool {
        self.active.is_empty()
    }

    #[inline]
    pub fn is_active(&self, i: usize) -> bool {
        self.bits[i / 64] >> (i % 64) & 1 == 1
    }

    #[inline]
    pub fn activate(&mut self, i: usize) {
        if !self.is_active(i) {
            self.bits[i / 64] |= 1 << (i % 64);
            self.slot[i] = self.active.len();
            self.active.push(i);
        }
    }

    #[inline]
    pub fn deactivate(&mut self, i: usize) {
        if self.is_active(i) {
            self.bits[i / 64] &= !(1 << (i % 64));
            let pos = self.slot[i];
            let last = self.active.pop().expect("active list out of sync");
            if last != i {
                self.active[pos] = last;
                self.slot[last] = pos;
            }
            self.slot[i] = NONE;
        }
    }

    /// The `k`-th entry of the internal active list (arbitrary but fixed order).
    #[inline]
    pub(crate) fn nth_active(&self, k: usize) -> usize {
        self.active[k]
    }

    /// Active indices in increasing order.
    pub fn active_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter().enumerate().flat_map(|(w, &word)| {
            let mut word = word;
            std::iter::from_fn(move || {
                if word == 0 {
                    None
                } else {
                    let b = word.trailing_zeros() as usize;
                    word &= word - 1;
                    Some(w * 64 + b)
                }
            })
        })
    }

    pub fn active_labels(&self, net: &Network) -> Vec<i64> {
        self.active_indices().map(|i| net.label(i)).collect()
    }

    pub fn is_subset(&self, other: &Configuration) -> bool {
        self.width == other.width && self.bits.iter().zip(&other.bits).all(|(a, b)| a & !b == 0)
    }

    pub fn union(&self, other: &Configuration) -> Configuration {
        assert_eq!(self.width, other.width, "width mismatch");
        let mut out = self.clone();
        for i in other.active_indices() {
            out.activate(i);
        }
        out
    }

    /// Spike map: `i` goes quiescent, every postsynaptic neuron of `i` goes active.
    pub fn apply_spike(&mut self, net: &Network, i: usize) {
        self.deactivate(i);
        for &j in net.postsynaptic(i) {
            self.activate(j);
        }
    }

    /// Leak map: `i` goes quiescent.
    pub fn apply_leak(&mut self, i: usize) {
        self.deactivate(i);
    }
}

impl PartialEq for Configuration {
    fn eq(&self, other: &Self) -> bool {
        self.width == other.width && self.bits == other.bits
    }
}

impl Eq for Configuration {}

impl fmt::Debug for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.active_indices()).finish()
    }
}
