//! Splittable, path-addressed seeding.
//!
//! A [`SeedTree`] names a random stream by `(root, path)`. The stream key is a
//! hash of the full address, so the stream a record receives never depends on
//! how many workers ran or in which order records were processed.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Error;

pub type Rng = ChaCha8Rng;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SeedTree {
    pub root: u64,
    #[serde(default)]
    pub path: Vec<u64>,
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl SeedTree {
    pub fn new(root: u64) -> Self {
        SeedTree { root, path: Vec::new() }
    }

    /// The `index`-th child stream.
    pub fn child(&self, index: u64) -> SeedTree {
        let mut path = self.path.clone();
        path.push(index);
        SeedTree { root: self.root, path }
    }

    /// Descends through several indices at once.
    pub fn descend(&self, indices: &[u64]) -> SeedTree {
        let mut path = self.path.clone();
        path.extend_from_slice(indices);
        SeedTree { root: self.root, path }
    }

    fn key(&self) -> [u8; 32] {
        let mut h = splitmix64(self.root ^ 0x5EED_0F_7EE5);
        for (depth, &i) in self.path.iter().enumerate() {
            h = splitmix64(h ^ splitmix64(i.wrapping_add((depth as u64) << 56)));
        }
        let mut key = [0u8; 32];
        for (k, chunk) in key.chunks_exact_mut(8).enumerate() {
            chunk.copy_from_slice(&splitmix64(h.wrapping_add(k as u64)).to_le_bytes());
        }
        key
    }

    /// A fresh generator positioned at the start of this node's stream.
    pub fn rng(&self) -> Rng {
        ChaCha8Rng::from_seed(self.key())
    }
}

/// Serialized form `root/i/j/...`, e.g. `42/2/5`.
impl fmt::Display for SeedTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.root)?;
        for i in &self.path {
            write!(f, "/{i}")?;
        }
        Ok(())
    }
}

impl FromStr for SeedTree {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut parts = s.split('/');
        let parse = |p: &str| {
            p.trim()
                .parse::<u64>()
                .map_err(|_| Error::Format(format!("bad seed path component {p:?} in {s:?}")))
        };
        let root = parse(parts.next().unwrap_or(""))?;
        let path = parts.map(parse).collect::<Result<Vec<_>, _>>()?;
        Ok(SeedTree { root, path })
    }
}
