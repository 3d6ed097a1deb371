use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Ledger, NftId, NftKind};
use crate::market::WeightVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateEntry {
    pub id: NftId,
    pub kind: NftKind,
    pub quality: f64,
    pub price: f64,
    pub pi_r: f64,
    pub weights: WeightVector,
    /// Rounds since the mint, measured from the querying height.
    pub age: u64,
}

/// Quality-weighted sample of live NFTs from a sliding window.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub entries: Vec<CandidateEntry>,
}

impl CandidateSet {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn qualities(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.quality).collect()
    }

    /// Candidate maximising `quality - gamma * price` among those that can
    /// fill `slot`, skipping `exclude`. Ties go to the lowest id.
    pub fn best_for(&self, slot: NftKind, gamma: f64, exclude: &[NftId]) -> Option<&CandidateEntry> {
        let mut best: Option<(&CandidateEntry, f64)> = None;
        for e in &self.entries {
            if !e.kind.fills(slot) || exclude.contains(&e.id) {
                continue;
            }
            let score = e.quality - gamma * e.price;
            best = match best {
                Some((b, s)) if s > score || (s == score && b.id < e.id) => Some((b, s)),
                _ => Some((e, score)),
            };
        }
        best.map(|(e, _)| e)
    }
}

impl Ledger {
    /// Samples up to `size` live NFTs minted in `(height - window, height]`
    /// without replacement, each draw proportional to quality (uniform when
    /// every remaining quality is zero).
    pub fn candidate_set<R: Rng + ?Sized>(&self, height: u64, window: u64, size: usize, rng: &mut R) -> CandidateSet {
        let lower = height.saturating_sub(window);
        let mut pool: Vec<&super::RNft> = self
            .live
            .iter()
            .map(|id| &self.nfts[id.0 as usize])
            .filter(|n| !n.settled && n.height <= height && (window > height || n.height > lower))
            .collect();

        let mut entries = Vec::with_capacity(size.min(pool.len()));
        while entries.len() < size && !pool.is_empty() {
            let pick = match WeightedIndex::new(pool.iter().map(|n| n.quality)) {
                Ok(dist) => dist.sample(rng),
                Err(_) => rng.random_range(0..pool.len()),
            };
            let n = pool.swap_remove(pick);
            entries.push(CandidateEntry {
                id: n.id,
                kind: n.kind,
                quality: n.quality,
                price: n.price,
                pi_r: n.pi_r,
                weights: n.weights.clone(),
                age: height - n.height,
            });
        }
        CandidateSet { entries }
    }
}
