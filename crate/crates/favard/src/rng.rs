//! Splittable, order-independent randomness for angle trees.
//!
//! Every angle is a pure function of a [`SeedKey`] and a [`NodePath`]: no
//! generator state is ever advanced. Streams are derived by hashing the
//! master seed together with a byte label (SHA-256, folded to 64 bits), and
//! per-node values come from a splitmix64 finalizer applied to the node's
//! position in the breadth-first enumeration of the 4-ary tree. This makes
//! Monte Carlo sampling order-independent and lets two constructions share a
//! subtree (same key, same paths) while everything else varies — the coupling
//! the pathwise shift check relies on.

use sha2::{Digest, Sha256};

use crate::Error;

/// Hard cap on tree depth, keeping `4^depth` enumerable in 64 bits and
/// center round-off negligible against the radius `4^-depth`.
pub const MAX_DEPTH: u32 = 15;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// splitmix64 finalizer (Stafford mix 13). Passes BigCrush when driven by a
/// counter, which is exactly how we drive it.
#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Position of one angle in the rooted 4-ary tree: the root is `(1, 1)` and
/// the children of `(k, j)` are `(k+1, 4j-3+alpha)` for `alpha = 0..4`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct NodePath {
    depth: u32,
    index: u64,
}

impl NodePath {
    /// Number of nodes at `depth`, i.e. `4^(depth-1)`.
    pub fn nodes_at(depth: u32) -> u64 {
        1u64 << (2 * (depth - 1))
    }

    pub fn new(depth: u32, index: u64) -> Result<Self, Error> {
        if depth == 0 || depth > MAX_DEPTH {
            return Err(Error::DepthCap {
                depth,
                cap: MAX_DEPTH,
            });
        }
        let max = Self::nodes_at(depth);
        if index == 0 || index > max {
            return Err(Error::InvalidNodePath { depth, index, max });
        }
        Ok(Self { depth, index })
    }

    pub fn root() -> Self {
        Self { depth: 1, index: 1 }
    }

    pub fn depth(self) -> u32 {
        self.depth
    }

    pub fn index(self) -> u64 {
        self.index
    }

    /// The `alpha`-th child, `alpha` in `0..4`.
    pub fn child(self, alpha: u8) -> Result<Self, Error> {
        assert!(alpha < 4, "child branch must be in 0..4");
        Self::new(self.depth + 1, 4 * self.index - 3 + alpha as u64)
    }

    pub fn parent(self) -> Option<Self> {
        if self.depth == 1 {
            None
        } else {
            Some(Self {
                depth: self.depth - 1,
                index: (self.index + 3) / 4,
            })
        }
    }

    /// Position in the breadth-first enumeration of the whole tree
    /// (root = 0). Nodes at depth `d` start at `(4^(d-1) - 1) / 3`.
    pub(crate) fn ordinal(self) -> u64 {
        (Self::nodes_at(self.depth) - 1) / 3 + self.index - 1
    }
}

/// A reproducible randomness stream: a master seed plus a byte label.
///
/// Identical `(master_seed, label, path)` triples always yield the identical
/// angle; distinct labels give statistically independent streams. There is no
/// mutable state, so a key can be shared freely across workers.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeedKey {
    master_seed: u64,
    stream_label: Vec<u8>,
    stream: u64,
}

impl SeedKey {
    pub fn new(master_seed: u64) -> Self {
        Self::with_label(master_seed, Vec::new())
    }

    fn with_label(master_seed: u64, stream_label: Vec<u8>) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(master_seed.to_le_bytes());
        hasher.update(&stream_label);
        let digest = hasher.finalize();
        let stream = u64::from_le_bytes(digest[..8].try_into().unwrap());
        Self {
            master_seed,
            stream_label,
            stream,
        }
    }

    /// Derive an independent child stream. Splitting is deterministic and
    /// composes: `split(split(k, "a"), "b")` names the stream `a/b`.
    pub fn split(&self, label: impl AsRef<[u8]>) -> SeedKey {
        let mut full = self.stream_label.clone();
        if !full.is_empty() {
            full.push(b'/');
        }
        full.extend_from_slice(label.as_ref());
        Self::with_label(self.master_seed, full)
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    /// Human-readable descriptor embedded in reports: `seed:label`.
    pub fn descriptor(&self) -> String {
        format!(
            "{}:{}",
            self.master_seed,
            String::from_utf8_lossy(&self.stream_label)
        )
    }

    /// The uniform angle in `[0, pi/2)` attached to a tree node.
    ///
    /// Counter-based: splitmix64 of the node ordinal under this stream's key,
    /// mapped to the interval through the top 53 bits (no modulo bias).
    pub fn derive_angle(&self, path: NodePath) -> f64 {
        let counter = path.ordinal().wrapping_add(1);
        let z = mix64(self.stream.wrapping_add(counter.wrapping_mul(GOLDEN)));
        let unit = (z >> 11) as f64 / (1u64 << 53) as f64;
        unit * std::f64::consts::FRAC_PI_2
    }
}

/// Parse a master seed given as decimal or 0x-prefixed hex.
pub fn parse_seed(text: &str) -> Result<u64, Error> {
    let t = text.trim();
    let parsed = if let Some(hex) = t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        u64::from_str_radix(hex, 16)
    } else {
        t.parse::<u64>()
    };
    parsed.map_err(|_| Error::InvalidSeed(text.to_string()))
}
