//! Hashed Morgan (circular) and atom-pair bit fingerprints, Dice similarity.
//!
//! All identifiers are xxHash64 digests (seed [`HASH_SEED`]) of little-endian
//! byte encodings, so bit patterns are identical across platforms:
//!
//! * atom invariant: `0x01, element bytes, 0x00, degree:u32, formal_charge:i32,
//!   hydrogens:u32, aromatic:u8, in_ring:u8`
//! * Morgan update at radius `r`: `0x02, r:u32, previous:u64`, then for each
//!   neighbor sorted by `(bond code, neighbor identifier)`: `code:u8, neighbor:u64`
//! * atom pair: `0x03, low:u64, high:u64, distance:u32` with `low <= high`
//!
//! Bit index is `identifier mod width`.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use xxhash_rust::xxh64::xxh64;

use crate::smiles::MolGraph;

pub const HASH_SEED: u64 = 0x5653_4352_4545_4e31;

pub const DEFAULT_WIDTH: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FingerprintKind {
    Morgan,
    AtomPair,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FingerprintError {
    #[error("fingerprint widths differ ({0} vs {1})")]
    WidthMismatch(usize, usize),
    #[error("fingerprint kinds differ")]
    KindMismatch,
    #[error("need at least two fingerprints, got {0}")]
    TooFewItems(usize),
    #[error("invalid fingerprint parameters: {0}")]
    InvalidParameters(String),
}

/// Parameters identifying one fingerprint flavour.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FingerprintSpec {
    Morgan { radius: u32, width: usize },
    AtomPair { min_radius: u32, max_radius: u32, width: usize },
}

impl FingerprintSpec {
    /// Surrogate input features: atom pairs at distances 1..=3, 2048 bits.
    pub const ATOM_PAIR_DEFAULT: FingerprintSpec = FingerprintSpec::AtomPair { min_radius: 1, max_radius: 3, width: DEFAULT_WIDTH };
    /// Diversity measure: radius-3 Morgan, 2048 bits.
    pub const MORGAN_DEFAULT: FingerprintSpec = FingerprintSpec::Morgan { radius: 3, width: DEFAULT_WIDTH };

    pub fn width(&self) -> usize {
        match *self {
            FingerprintSpec::Morgan { width, .. } | FingerprintSpec::AtomPair { width, .. } => width,
        }
    }

    pub fn validate(&self) -> Result<(), FingerprintError> {
        let width = self.width();
        if !width.is_power_of_two() || width < 64 {
            return Err(FingerprintError::InvalidParameters(format!(
                "width {width} must be a power of two >= 64"
            )));
        }
        if let FingerprintSpec::AtomPair { min_radius, max_radius, .. } = *self {
            if min_radius < 1 || min_radius > max_radius {
                return Err(FingerprintError::InvalidParameters(format!(
                    "atom-pair radii must satisfy 1 <= min ({min_radius}) <= max ({max_radius})"
                )));
            }
        }
        Ok(())
    }

    pub fn compute(&self, g: &MolGraph) -> Fingerprint {
        match *self {
            FingerprintSpec::Morgan { radius, width } => morgan_fingerprint(g, radius, width),
            FingerprintSpec::AtomPair { min_radius, max_radius, width } => {
                atom_pair_fingerprint(g, min_radius, max_radius, width)
            }
        }
    }
}

/// Fixed-width bit vector.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Fingerprint {
    words: Vec<u64>,
    width: usize,
    kind: FingerprintKind,
    radius: (u32, u32),
}

impl Fingerprint {
    pub fn empty(kind: FingerprintKind, width: usize, radius: (u32, u32)) -> Self {
        Fingerprint { words: vec![0; width.div_ceil(64)], width, kind, radius }
    }

    /// Build from explicit bit positions (each must be `< width`).
    pub fn from_bits(kind: FingerprintKind, width: usize, bits: impl IntoIterator<Item = usize>) -> Self {
        let mut fp = Self::empty(kind, width, (0, 0));
        for b in bits {
            fp.set(b);
        }
        fp
    }

    pub fn set(&mut self, bit: usize) {
        assert!(bit < self.width, "bit {bit} out of range for width {}", self.width);
        self.words[bit / 64] |= 1u64 << (bit % 64);
    }

    pub fn get(&self, bit: usize) -> bool {
        bit < self.width && self.words[bit / 64] & (1u64 << (bit % 64)) != 0
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn kind(&self) -> FingerprintKind {
        self.kind
    }

    pub fn radius_params(&self) -> (u32, u32) {
        self.radius
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn popcount(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut rest = w;
            std::iter::from_fn(move || {
                if rest == 0 {
                    return None;
                }
                let bit = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(wi * 64 + bit)
            })
        })
    }

    /// Lowercase hex of the little-endian byte image of the bit vector.
    pub fn to_hex(&self) -> String {
        let bytes: Vec<u8> = self.words.iter().flat_map(|w| w.to_le_bytes()).collect();
        hex::encode(&bytes[..self.width.div_ceil(8)])
    }

    fn intersection_count(&self, other: &Fingerprint) -> usize {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }
}

struct Hasher(Vec<u8>);

impl Hasher {
    fn new(tag: u8) -> Self {
        Hasher(vec![tag])
    }
    fn bytes(mut self, b: &[u8]) -> Self {
        self.0.extend_from_slice(b);
        self
    }
    fn u8(self, v: u8) -> Self {
        self.bytes(&[v])
    }
    fn u32(self, v: u32) -> Self {
        self.bytes(&v.to_le_bytes())
    }
    fn i32(self, v: i32) -> Self {
        self.bytes(&v.to_le_bytes())
    }
    fn u64(self, v: u64) -> Self {
        self.bytes(&v.to_le_bytes())
    }
    fn finish(&self) -> u64 {
        xxh64(&self.0, HASH_SEED)
    }
}

/// Radius-0 atom identifiers shared by both fingerprint kinds.
pub fn atom_invariants(g: &MolGraph) -> Vec<u64> {
    let in_ring = g.ring_atoms();
    g.atoms()
        .iter()
        .zip(in_ring)
        .map(|(a, ring)| {
            Hasher::new(0x01)
                .bytes(a.element.as_bytes())
                .u8(0)
                .u32(a.degree)
                .i32(a.formal_charge)
                .u32(a.explicit_h)
                .u8(u8::from(a.aromatic))
                .u8(u8::from(ring))
                .finish()
        })
        .collect()
}

/// Morgan identifiers for every atom at radius `0..=radius`, grouped by radius.
pub fn morgan_identifiers(g: &MolGraph, radius: u32) -> Vec<Vec<u64>> {
    let mut layers = vec![atom_invariants(g)];
    for r in 1..=radius {
        let prev = layers.last().expect("radius 0 layer");
        let next = (0..g.n_atoms())
            .map(|atom| {
                let mut env: Vec<(u8, u64)> =
                    g.neighbors(atom).iter().map(|&(nb, order)| (order.code(), prev[nb])).collect();
                env.sort_unstable();
                env.into_iter()
                    .fold(Hasher::new(0x02).u32(r).u64(prev[atom]), |h, (code, id)| h.u8(code).u64(id))
                    .finish()
            })
            .collect();
        layers.push(next);
    }
    layers
}

pub fn morgan_fingerprint(g: &MolGraph, radius: u32, width: usize) -> Fingerprint {
    let mut fp = Fingerprint::empty(FingerprintKind::Morgan, width, (0, radius));
    let mut ids: Vec<u64> = morgan_identifiers(g, radius).into_iter().flatten().collect();
    ids.sort_unstable();
    ids.dedup();
    for id in ids {
        fp.set((id % width as u64) as usize);
    }
    fp
}

pub fn atom_pair_fingerprint(g: &MolGraph, min_radius: u32, max_radius: u32, width: usize) -> Fingerprint {
    let mut fp = Fingerprint::empty(FingerprintKind::AtomPair, width, (min_radius, max_radius));
    let inv = atom_invariants(g);
    for i in 0..g.n_atoms() {
        let dist = g.distances_from(i, max_radius as usize);
        for (j, d) in dist.iter().enumerate().skip(i + 1) {
            let Some(d) = *d else { continue };
            let d = d as u32;
            if d < min_radius || d > max_radius {
                continue;
            }
            let (lo, hi) = if inv[i] <= inv[j] { (inv[i], inv[j]) } else { (inv[j], inv[i]) };
            let id = Hasher::new(0x03).u64(lo).u64(hi).u32(d).finish();
            fp.set((id % width as u64) as usize);
        }
    }
    fp
}

/// `2|a & b| / (|a| + |b|)`, defined as 1.0 when both are empty.
pub fn dice_similarity(a: &Fingerprint, b: &Fingerprint) -> Result<f64, FingerprintError> {
    if a.width != b.width {
        return Err(FingerprintError::WidthMismatch(a.width, b.width));
    }
    if a.kind != b.kind {
        return Err(FingerprintError::KindMismatch);
    }
    let total = a.popcount() + b.popcount();
    if total == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * a.intersection_count(b) as f64 / total as f64)
}

/// How [`mean_pairwise_dice`] enumerates pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum PairSampling {
    /// Every unordered pair.
    Exact,
    /// All pairs up to `threshold` items; above it, `pairs` distinct pairs
    /// drawn uniformly with the given seed.
    Subsample { threshold: usize, pairs: usize, seed: u64 },
}

/// Mean Dice similarity over unordered pairs.
pub fn mean_pairwise_dice(fps: &[Fingerprint], sampling: PairSampling) -> Result<f64, FingerprintError> {
    use rayon::prelude::*;

    let n = fps.len();
    if n < 2 {
        return Err(FingerprintError::TooFewItems(n));
    }
    let width = fps[0].width;
    if let Some(bad) = fps.iter().find(|f| f.width != width) {
        return Err(FingerprintError::WidthMismatch(width, bad.width));
    }
    if fps.iter().any(|f| f.kind != fps[0].kind) {
        return Err(FingerprintError::KindMismatch);
    }
    let total_pairs = n * (n - 1) / 2;
    let pair_sim = |i: usize, j: usize| dice_similarity(&fps[i], &fps[j]).expect("checked widths");

    let exact = match sampling {
        PairSampling::Exact => true,
        PairSampling::Subsample { threshold, pairs, .. } => n <= threshold || pairs >= total_pairs,
    };
    if exact {
        let sum: f64 = (0..n)
            .into_par_iter()
            .map(|i| ((i + 1)..n).map(|j| pair_sim(i, j)).sum::<f64>())
            .collect::<Vec<_>>()
            .into_iter()
            .sum();
        return Ok(sum / total_pairs as f64);
    }
    let PairSampling::Subsample { pairs, seed, .. } = sampling else { unreachable!() };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks = index::sample(&mut rng, total_pairs, pairs).into_vec();
    let sum: f64 = picks
        .par_iter()
        .map(|&p| {
            let (i, j) = unrank_pair(p, n);
            pair_sim(i, j)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .sum();
    Ok(sum / pairs as f64)
}

/// Maps `0..n(n-1)/2` onto pairs `(i, j)` with `i < j`, row-major.
fn unrank_pair(mut p: usize, n: usize) -> (usize, usize) {
    let mut i = 0;
    loop {
        let row = n - 1 - i;
        if p < row {
            return (i, i + 1 + p);
        }
        p -= row;
        i += 1;
    }
}
