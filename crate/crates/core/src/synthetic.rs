//! Seeded synthetic screening libraries for tests and benchmarks.
//!
//! Molecules are linear assemblies of small fragments, so every generated
//! SMILES parses and the libraries cover a realistic spread of fingerprints.
//! Scores follow the docking convention: lower is better.

use std::collections::HashSet;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::fingerprint::FingerprintSpec;
use crate::smiles::parse_smiles;

/// Box-Muller draw from N(0, 1).
pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

// chainable pieces: each starts and ends on an atom with a free valence
const LINKERS: &[&str] = &[
    "C", "CC", "N", "O", "S", "C(C)", "C(=O)", "C(F)", "C(O)", "N(C)", "C(Cl)", "C(N)", "C(=O)N", "CO", "CN",
    "c1ccc(cc1)", "c1ccncc1", "C1CCC(CC1)", "C1CCN(CC1)", "c1ccc(cc1F)", "c1cc(ccc1Cl)", "c1ccc(o1)", "c1ccc(s1)",
    "C(C)(C)", "C=C", "C#C", "c1cnc(nc1)", "C(C(F)(F)F)", "[nH]1cccc1", "C1CC1",
];
const CAPS: &[&str] = &["C", "O", "N", "F", "Cl", "Br", "C#N", "C(=O)O", "c1ccccc1", "C(F)(F)F", "OC", "N(C)C", "S(=O)(=O)N"];

/// One random fragment-chain SMILES with `2..=max_linkers + 1` pieces.
pub fn random_smiles<R: Rng + ?Sized>(rng: &mut R, max_linkers: usize) -> String {
    let n = rng.random_range(1..=max_linkers.max(1));
    let mut s = String::new();
    for _ in 0..n {
        s.push_str(LINKERS.choose(rng).expect("non-empty"));
    }
    s.push_str(CAPS.choose(rng).expect("non-empty"));
    s
}

/// `n` distinct random SMILES.
pub fn distinct_smiles(n: usize, max_linkers: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::with_capacity(n);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let s = random_smiles(&mut rng, max_linkers);
        if seen.insert(s.clone()) {
            out.push(s);
        }
    }
    out
}

/// Library rows plus the generating model.
#[derive(Debug, Clone)]
pub struct SyntheticLibrary {
    /// `(smiles, score)`; score = −utility.
    pub rows: Vec<(String, f64)>,
    /// Noise-free utility part of each row.
    pub signal: Vec<f64>,
    /// `(bit, weight)` terms of the linear model, empty for non-linear generators.
    pub terms: Vec<(usize, f64)>,
}

impl SyntheticLibrary {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// CSV text with `smiles,score` header.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("smiles,score\n");
        for (smi, score) in &self.rows {
            s.push_str(&format!("{smi},{score}\n"));
        }
        s
    }
}

/// Utility = Σ w_b · bit_b(atom-pair fingerprint) + noise, over `n_terms`
/// bits drawn among those set in 2%..50% of molecules. Weights are N(0, 1);
/// noise variance is `var(signal) / snr`.
pub fn sparse_linear_library(n: usize, n_terms: usize, snr: f64, seed: u64) -> SyntheticLibrary {
    let smiles = distinct_smiles(n, 8, seed);
    let spec = FingerprintSpec::ATOM_PAIR_DEFAULT;
    let fps: Vec<_> = smiles
        .par_iter()
        .map(|s| spec.compute(&parse_smiles(s).expect("generated SMILES parse")))
        .collect();
    let mut counts = vec![0usize; spec.width()];
    for fp in &fps {
        for b in fp.ones() {
            counts[b] += 1;
        }
    }
    let mut candidates: Vec<usize> = (0..spec.width())
        .filter(|&b| {
            let f = counts[b] as f64 / n.max(1) as f64;
            (0.02..=0.5).contains(&f)
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x005e_ed0f_7e57);
    let (chosen, _) = candidates.partial_shuffle(&mut rng, n_terms);
    let mut terms: Vec<(usize, f64)> = chosen.iter().map(|&b| (b, 0.0)).collect();
    terms.sort_unstable_by_key(|t| t.0);
    for t in &mut terms {
        t.1 = standard_normal(&mut rng);
    }
    let signal: Vec<f64> = fps.iter().map(|fp| terms.iter().filter(|(b, _)| fp.get(*b)).map(|(_, w)| w).sum()).collect();
    let mean = signal.iter().sum::<f64>() / n.max(1) as f64;
    let var = signal.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n.max(1) as f64;
    let noise_sd = if snr > 0.0 { (var / snr).sqrt() } else { 0.0 };
    let rows = smiles
        .into_iter()
        .zip(&signal)
        .map(|(s, &u)| (s, -(u + noise_sd * standard_normal(&mut rng))))
        .collect();
    SyntheticLibrary { rows, signal, terms }
}

const CLUSTER_CORE: &str = "O=C(Nc1ccc2ccccc2c1)c1ccc(cc1)";
const CLUSTER_TAILS: &[&str] = &["C", "CC", "N", "O", "F", "Cl", "C(=O)", "C(C)", "OC", "C#N"];

/// A tight high-utility cluster (one shared scaffold with short tails) in a
/// diffuse lower-utility background of random fragment chains.
///
/// Cluster utilities ~ N(2, 0.5²), background ~ N(0, 1).
pub fn two_cluster_library(n: usize, cluster_fraction: f64, seed: u64) -> SyntheticLibrary {
    let n_cluster = ((cluster_fraction * n as f64).round() as usize).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = HashSet::with_capacity(n);
    let mut cluster = Vec::with_capacity(n_cluster);
    while cluster.len() < n_cluster {
        let mut s = String::from(CLUSTER_CORE);
        for _ in 0..rng.random_range(1..=5) {
            s.push_str(CLUSTER_TAILS.choose(&mut rng).expect("non-empty"));
        }
        if seen.insert(s.clone()) {
            cluster.push(s);
        }
    }
    let mut background = Vec::with_capacity(n - n_cluster);
    while background.len() < n - n_cluster {
        let s = random_smiles(&mut rng, 8);
        if seen.insert(s.clone()) {
            background.push(s);
        }
    }
    let mut rows = Vec::with_capacity(n);
    let mut signal = Vec::with_capacity(n);
    for s in cluster {
        let u = 2.0 + 0.5 * standard_normal(&mut rng);
        rows.push((s, -u));
        signal.push(u);
    }
    for s in background {
        let u = standard_normal(&mut rng);
        rows.push((s, -u));
        signal.push(u);
    }
    // interleave so cluster membership is not visible from the index
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let rows = order.iter().map(|&i| rows[i].clone()).collect();
    let signal = order.iter().map(|&i| signal[i]).collect();
    SyntheticLibrary { rows, signal, terms: Vec::new() }
}
