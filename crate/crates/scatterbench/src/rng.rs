//! Labelled, reproducible random streams.
//!
//! Every stochastic element of the bench (medium draw, camera noise,
//! Monte Carlo sampling) pulls from a [`SeededRng`] identified by a
//! 64-bit master seed and a textual stream label. The same
//! `(seed, label)` pair always reproduces the same sequence, and
//! distinct labels fan out independent streams from one master seed, so
//! re-running a single protocol stage does not perturb the others.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

/// A reproducible random stream addressed by `(master seed, label)`.
#[derive(Clone, Debug)]
pub struct SeededRng {
    master: u64,
    label: String,
    inner: ChaCha12Rng,
}

impl SeededRng {
    pub fn new(master: u64, label: &str) -> Self {
        let key = derive_key(master, label);
        SeededRng {
            master,
            label: label.to_owned(),
            inner: ChaCha12Rng::from_seed(key),
        }
    }

    /// Derive an independent stream under this stream's namespace.
    pub fn substream(&self, label: &str) -> Self {
        SeededRng::new(self.master, &format!("{}/{}", self.label, label))
    }

    pub fn master_seed(&self) -> u64 {
        self.master
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

impl RngCore for SeededRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> std::result::Result<(), rand::Error> {
        self.inner.try_fill_bytes(dest)
    }
}

/// Expand `(seed, label)` into a ChaCha key.
///
/// FNV-1a over the label bytes, mixed with the master seed through
/// SplitMix64. Pure integer arithmetic, so the mapping is identical on
/// every platform and toolchain.
fn derive_key(master: u64, label: &str) -> [u8; 32] {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in label.as_bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut state = master ^ h.rotate_left(31);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    key
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
