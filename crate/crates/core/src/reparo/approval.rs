use serde::Serialize;

use crate::consensus::{epoch_of, epoch_window, ConsensusParams};
use crate::hash::{sha256, Digest};
use crate::params::ChainParams;
use crate::state::{special_call, SpecialCall};
use crate::types::{Block, Chain, Height, TxEntry};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ApprovalStatus {
    Approve,
    Reject,
    Voting,
}

/// Voting window opened by one repair request. Bounds are block heights
/// under proof of work and slots under proof of stake, both inclusive.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct VoteWindow {
    pub request_height: Height,
    pub start: u64,
    pub end: u64,
    pub by_slot: bool,
}

impl VoteWindow {
    pub fn admits(&self, height: Height, slot: u64) -> bool {
        let x = if self.by_slot { slot } else { height };
        (self.start..=self.end).contains(&x)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Tally {
    pub votes: u64,
    pub window_size: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Approval {
    pub status: ApprovalStatus,
    /// The decision is buried at least k blocks deep and can no longer flip.
    pub stable: bool,
    pub window: Option<VoteWindow>,
    pub tally: Tally,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ApprovalError {
    #[error("no repair request for proposal {0} on this chain")]
    UnknownProposal(Digest),
}

/// Heights of authenticated repair requests whose payload hashes to `id`.
fn request_heights(c: &Chain, id: &Digest, params: &ChainParams) -> Vec<Height> {
    let mut out = Vec::new();
    for (h, b) in c.blocks.iter().enumerate().skip(1) {
        let found = b.txs.iter().any(|e| match e {
            TxEntry::Full(tx) => {
                special_call(&tx.to) == SpecialCall::RepairCall
                    && sha256(&tx.data) == *id
                    && params.registry.verify(&tx.from, &tx.payload(), &tx.auth)
            }
            TxEntry::Redacted(_) => false,
        });
        if found {
            out.push(h as Height);
        }
    }
    out
}

/// A block counts as one vote if its producer included an authenticated
/// vote for `id`.
fn has_vote(b: &Block, id: &Digest, params: &ChainParams) -> bool {
    let producer = b.header.producer();
    b.txs.iter().any(|e| match e {
        TxEntry::Full(tx) => {
            special_call(&tx.to) == SpecialCall::VoteCall
                && tx.from == producer
                && tx.data == id.0
                && params.registry.verify(&tx.from, &tx.payload(), &tx.auth)
        }
        TxEntry::Redacted(_) => false,
    })
}

/// Window opened by a request at height `h`, once it can be determined.
pub(crate) fn window_for(c: &Chain, h: Height, params: &ChainParams) -> Option<VoteWindow> {
    let k = params.stability_depth;
    match params.consensus {
        ConsensusParams::Pow { .. } => Some(VoteWindow {
            request_height: h,
            start: h + k + 1,
            end: h + k + params.policy.window,
            by_slot: false,
        }),
        ConsensusParams::Pos { epoch_len, .. } => {
            // The first full epoch after the request became stable.
            let anchor = c.get(h + k)?;
            let (start, end) = epoch_window(epoch_of(anchor.header.slot, epoch_len) + 1, epoch_len);
            Some(VoteWindow {
                request_height: h,
                start,
                end,
                by_slot: true,
            })
        }
    }
}

/// Decision for the request at height `h`.
fn decide(c: &Chain, h: Height, id: &Digest, params: &ChainParams) -> Approval {
    let k = params.stability_depth;
    let Some(w) = window_for(c, h, params) else {
        return Approval {
            status: ApprovalStatus::Voting,
            stable: false,
            window: None,
            tally: Tally::default(),
        };
    };
    let mut tally = Tally::default();
    let (closed, stable) = if w.by_slot {
        let from = c.blocks.partition_point(|b| b.header.slot < w.start);
        let to = c.blocks.partition_point(|b| b.header.slot <= w.end);
        for b in &c.blocks[from..to] {
            tally.window_size += 1;
            tally.votes += u64::from(has_vote(b, id, params));
        }
        let after = (c.len() - to) as u64;
        (after >= 1, after >= k)
    } else {
        tally.window_size = w.end + 1 - w.start;
        let last = w.end.min(c.tip());
        for height in w.start..=last {
            tally.votes += u64::from(has_vote(&c.blocks[height as usize], id, params));
        }
        (c.tip() >= w.end, c.tip() >= w.end + k)
    };
    let status = if !closed {
        ApprovalStatus::Voting
    } else if params.policy.clears_threshold(tally.votes, tally.window_size) {
        ApprovalStatus::Approve
    } else {
        ApprovalStatus::Reject
    };
    Approval {
        status,
        stable: closed && stable,
        window: Some(w),
        tally,
    }
}

/// Every voting window opened for `id` on `c`, oldest first.
pub fn vote_windows(c: &Chain, id: &Digest, params: &ChainParams) -> Vec<VoteWindow> {
    request_heights(c, id, params)
        .into_iter()
        .filter_map(|h| window_for(c, h, params))
        .collect()
}

/// Approval status of proposal `id` on chain `c`. Approve once any request
/// gathered strictly more than ρ of its window; Voting while any window is
/// still open; Reject otherwise or when vetoed.
pub fn chk_approval(c: &Chain, id: &Digest, params: &ChainParams) -> Result<Approval, ApprovalError> {
    let heights = request_heights(c, id, params);
    if heights.is_empty() {
        return Err(ApprovalError::UnknownProposal(*id));
    }
    if params.policy.vetoes(id) {
        return Ok(Approval {
            status: ApprovalStatus::Reject,
            stable: true,
            window: None,
            tally: Tally::default(),
        });
    }
    let decisions: Vec<Approval> = heights.iter().map(|&h| decide(c, h, id, params)).collect();
    let pick = |s: ApprovalStatus| decisions.iter().filter(move |a| a.status == s);
    if let Some(a) = pick(ApprovalStatus::Approve).max_by_key(|a| a.stable) {
        return Ok(a.clone());
    }
    if let Some(a) = pick(ApprovalStatus::Voting).next() {
        return Ok(a.clone());
    }
    let mut last = decisions.last().cloned().expect("non-empty");
    last.stable = decisions.iter().all(|a| a.stable);
    Ok(last)
}
