//! Append-only reference DAG of minted NFTs.
//!
//! Heights advance one round at a time. New NFTs are always minted into the
//! open round `height() + 1`, so every reference points strictly backwards
//! and the DAG is acyclic by construction; [`Ledger::mint`] still checks it.
//! Closing a round books one installment and one income entry for every NFT
//! whose horizon covers it and settles the NFTs that reach `h + d`.

mod candidate;
mod dump;

pub use candidate::{CandidateEntry, CandidateSet};
pub use dump::{write_dump, DUMP_COLUMNS};

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::market::{
    self, base_price, derive_terms, income_amount, installment_amount, topup_fee, CostBreakdown, DerivedTerms,
    IncomeBreakdown, IncomeRound, Installment, MarketParams, WeightVector,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NftId(pub u64);

impl fmt::Display for NftId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NftKind {
    Dataset,
    Model,
    /// Bundle of a dataset and a model; may fill either reference slot.
    Composite,
}

impl NftKind {
    /// Whether an NFT of this kind may be cited in a `slot` reference.
    pub fn fills(self, slot: NftKind) -> bool {
        self == slot || self == NftKind::Composite
    }

    pub fn as_str(self) -> &'static str {
        match self {
            NftKind::Dataset => "dataset",
            NftKind::Model => "model",
            NftKind::Composite => "composite",
        }
    }
}

/// One entry of a reference list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Reference {
    pub id: NftId,
    /// The role the referenced resource plays for the new NFT.
    pub slot: NftKind,
}

/// A referable NFT and its running ledgers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RNft {
    pub id: NftId,
    /// `None` for genesis NFTs seeded by the platform.
    pub publisher: Option<usize>,
    pub height: u64,
    pub theta: Vec<Reference>,
    pub weights: WeightVector,
    pub quality: f64,
    pub price: f64,
    pub pi_r: f64,
    pub lambda: f64,
    pub terms: DerivedTerms,
    pub kind: NftKind,
    /// Share of the base price owed to each component of `weights`.
    pub shares: Vec<f64>,
    pub outcome_ledger: CostBreakdown,
    pub income_ledger: IncomeBreakdown,
    /// Referrals received in rounds `1..=d` after the mint.
    pub referrals: Vec<u32>,
    /// Payments routed to this NFT by the NFTs that reference it.
    pub received: f64,
    pub settled: bool,
    pub bonus_awarded: bool,
    pub settled_payoff: Option<f64>,
}

impl RNft {
    /// Height at which the NFT settles.
    pub fn expiry(&self) -> u64 {
        self.height + self.terms.d as u64
    }
}

/// What a publisher submits to mint.
#[derive(Debug, Clone, PartialEq)]
pub struct MintRequest {
    pub publisher: Option<usize>,
    pub kind: NftKind,
    pub theta: Vec<Reference>,
    pub weights: WeightVector,
    pub quality: f64,
    pub price: f64,
    pub pi_r: f64,
    pub lambda: f64,
}

/// Emitted once per NFT at `h + d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettlementEvent {
    pub id: NftId,
    pub publisher: Option<usize>,
    pub mint_height: u64,
    pub height: u64,
    pub income_total: f64,
    pub outcome_total: f64,
    pub payoff: f64,
}

#[derive(Debug, Clone)]
pub struct Ledger {
    params: MarketParams,
    nfts: Vec<RNft>,
    live: BTreeSet<NftId>,
    height: u64,
}

impl Ledger {
    pub fn new(params: MarketParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            params,
            nfts: Vec::new(),
            live: BTreeSet::new(),
            height: 0,
        })
    }

    pub fn params(&self) -> &MarketParams {
        &self.params
    }

    /// Last closed round.
    pub fn height(&self) -> u64 {
        self.height
    }

    /// Round that new mints land in.
    pub fn open_height(&self) -> u64 {
        self.height + 1
    }

    pub fn get(&self, id: NftId) -> Result<&RNft> {
        self.nfts.get(id.0 as usize).ok_or(Error::UnknownNft(id))
    }

    pub fn nfts(&self) -> &[RNft] {
        &self.nfts
    }

    pub fn len(&self) -> usize {
        self.nfts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nfts.is_empty()
    }

    pub fn live_ids(&self) -> impl Iterator<Item = NftId> + '_ {
        self.live.iter().copied()
    }

    /// Unsettled NFTs owned by `publisher`.
    pub fn pending_count(&self, publisher: usize) -> usize {
        self.live
            .iter()
            .filter(|id| self.nfts[id.0 as usize].publisher == Some(publisher))
            .count()
    }

    /// Seeds a platform-owned NFT at height 0, paid in full and unreferenced.
    pub fn seed_genesis(&mut self, kind: NftKind, quality: f64, price: f64) -> Result<NftId> {
        if self.height != 0 {
            return Err(Error::Sequencing {
                expected: 0,
                got: self.height,
            });
        }
        let request = MintRequest {
            publisher: None,
            kind,
            theta: Vec::new(),
            weights: WeightVector::self_only(),
            quality,
            price,
            pi_r: 0.0,
            lambda: 1.0,
        };
        self.insert(request, 0, false)
    }

    /// Mints into the open round. `competitors` are the qualities of the
    /// candidate set the NFT was drawn against; the fixed reward is awarded
    /// when the new quality strictly exceeds all of them.
    pub fn mint(&mut self, request: MintRequest, competitors: &[f64]) -> Result<NftId> {
        let height = self.open_height();
        let bonus_awarded = competitors.iter().all(|&q| request.quality > q);
        self.insert(request, height, bonus_awarded)
    }

    fn insert(&mut self, request: MintRequest, height: u64, bonus_awarded: bool) -> Result<NftId> {
        let p = &self.params;
        if request.theta.len() != request.weights.refs().len() {
            return Err(Error::Shape {
                what: "reference weights",
                expected: request.theta.len(),
                got: request.weights.refs().len(),
            });
        }
        if !(0.0..=1.0).contains(&request.quality) {
            return Err(Error::Domain {
                field: "quality",
                value: request.quality,
                bound: "[0, 1]",
            });
        }
        if !(request.price > 0.0 && request.price <= p.psi_max) {
            return Err(Error::Domain {
                field: "price",
                value: request.price,
                bound: "(0, psi_max]",
            });
        }
        let terms = derive_terms(p, request.lambda, request.pi_r)?;

        let mut ref_prices = Vec::with_capacity(request.theta.len());
        for (i, r) in request.theta.iter().enumerate() {
            if request.theta[..i].iter().any(|o| o.id == r.id) {
                return Err(Error::InconsistentAction(format!("{} referenced twice", r.id)));
            }
            let target = self.nfts.get(r.id.0 as usize).ok_or(Error::DanglingReference(r.id))?;
            if target.settled {
                return Err(Error::ExpiredReference(r.id));
            }
            if target.height >= height {
                return Err(Error::Acyclicity {
                    reference: r.id,
                    reference_height: target.height,
                    height,
                });
            }
            ref_prices.push(target.price);
        }

        let topup = topup_fee(&request.weights, &ref_prices)?;
        let (p0_total, shares) = base_price(p, topup, &request.weights)?;
        let mut outcome_ledger = market::outcome_with_terms(&terms, request.lambda, request.pi_r, p0_total, request.quality)?;
        // Installments are booked round by round.
        outcome_ledger.installments.clear();
        outcome_ledger.total = outcome_ledger.down_payment + outcome_ledger.pi_r;

        let id = NftId(self.nfts.len() as u64);
        // The down payment is split among the referenced owners right away.
        for (r, w) in request.theta.iter().zip(request.weights.refs()) {
            self.nfts[r.id.0 as usize].received += w * outcome_ledger.down_payment;
            let j = (height - self.nfts[r.id.0 as usize].height) as usize;
            self.nfts[r.id.0 as usize].referrals[j - 1] += 1;
        }

        self.nfts.push(RNft {
            id,
            publisher: request.publisher,
            height,
            theta: request.theta,
            weights: request.weights,
            quality: request.quality,
            price: request.price,
            pi_r: request.pi_r,
            lambda: request.lambda,
            terms,
            kind: request.kind,
            shares,
            outcome_ledger,
            income_ledger: IncomeBreakdown {
                per_round: Vec::new(),
                bonus: 0.0,
                total: 0.0,
            },
            referrals: vec![0; terms.d as usize],
            received: 0.0,
            settled: false,
            bonus_awarded,
            settled_payoff: None,
        });
        self.live.insert(id);
        Ok(id)
    }

    /// Closes round `new_height`: books installment and income entries for
    /// every NFT with `h < new_height <= h + d` and settles those reaching
    /// `h + d`.
    pub fn advance_round(&mut self, new_height: u64) -> Result<Vec<SettlementEvent>> {
        if new_height != self.height + 1 {
            return Err(Error::Sequencing {
                expected: self.height + 1,
                got: new_height,
            });
        }
        let k = self.params.k;
        let fixed_reward = self.params.fixed_reward;
        let mut events = Vec::new();
        let mut routed: Vec<(NftId, f64)> = Vec::new();
        let ids: Vec<NftId> = self.live.iter().copied().collect();
        for id in ids {
            let nft = &mut self.nfts[id.0 as usize];
            if nft.height >= new_height {
                continue;
            }
            let round = (new_height - nft.height) as u32;
            debug_assert!(round <= nft.terms.d);
            if nft.lambda < 1.0 {
                let amount = installment_amount(&nft.terms, nft.lambda, nft.outcome_ledger.p0_total, nft.quality, round);
                nft.outcome_ledger.installments.push(Installment { round, amount });
                nft.outcome_ledger.total += amount;
                for (r, w) in nft.theta.iter().zip(nft.weights.refs()) {
                    routed.push((r.id, w * amount));
                }
            }
            let referrals = nft.referrals[round as usize - 1] as f64;
            let amount = income_amount(k, nft.terms.sigma, nft.quality, round, referrals);
            nft.income_ledger.per_round.push(IncomeRound {
                round,
                referrals,
                amount,
            });
            nft.income_ledger.total += amount;

            if round == nft.terms.d {
                if nft.bonus_awarded {
                    nft.income_ledger.bonus = fixed_reward;
                    nft.income_ledger.total += fixed_reward;
                }
                nft.settled = true;
                let payoff = market::payoff(nft.income_ledger.total, nft.outcome_ledger.total);
                nft.settled_payoff = Some(payoff);
                events.push(SettlementEvent {
                    id,
                    publisher: nft.publisher,
                    mint_height: nft.height,
                    height: new_height,
                    income_total: nft.income_ledger.total,
                    outcome_total: nft.outcome_ledger.total,
                    payoff,
                });
            }
        }
        for (to, amount) in routed {
            self.nfts[to.0 as usize].received += amount;
        }
        for e in &events {
            self.live.remove(&e.id);
        }
        self.height = new_height;
        Ok(events)
    }

    /// Number of NFTs minted at `h + round` that reference `id`.
    pub fn referral_count(&self, id: NftId, round: u32) -> Result<u32> {
        let nft = self.get(id)?;
        if round < 1 || round > nft.terms.d {
            return Err(Error::Domain {
                field: "round",
                value: round as f64,
                bound: "[1, d]",
            });
        }
        Ok(nft.referrals[round as usize - 1])
    }

    /// Checks the height order of every edge.
    pub fn verify_acyclic(&self) -> Result<()> {
        for nft in &self.nfts {
            for r in &nft.theta {
                let target = self.get(r.id)?;
                if target.height >= nft.height {
                    return Err(Error::Acyclicity {
                        reference: r.id,
                        reference_height: target.height,
                        height: nft.height,
                    });
                }
            }
        }
        Ok(())
    }
}
