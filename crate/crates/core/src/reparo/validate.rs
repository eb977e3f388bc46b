use std::borrow::Cow;
use std::collections::{BTreeMap, BTreeSet};

use crate::consensus::{chk_pow, vfy_pos, ConsensusParams};
use crate::hash::{Digest, Encode};
use crate::params::ChainParams;
use crate::state::apply_transactions;
use crate::types::{Block, Chain, ConsensusData, Height};

use super::approval::{chk_approval, ApprovalStatus};
use super::policy::{normalize_proposal, Mode, ProposalError};
use super::repair::apply_repair;
use super::{AdbEntry, RepairLayer};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BlockError {
    #[error("parent link does not match the previous block")]
    BadParent,
    #[error("slot {slot} does not exceed the parent slot {parent}")]
    SlotNotIncreasing { slot: u64, parent: u64 },
    #[error("transactions do not match the header's root")]
    TxRootMismatch,
    #[error("state does not match the header's root")]
    StateRootMismatch,
    #[error("consensus data of the wrong kind or difficulty")]
    WrongConsensus,
    #[error("proof of work below target")]
    BadPow,
    #[error("stake proof rejected")]
    BadStakeProof,
    #[error("Adb entries not in ascending id order")]
    AdbOrder,
    #[error("Adb entry logged at height {found}, expected {expected}")]
    AdbHeight { found: Height, expected: Height },
    #[error("proposal {0} was already applied")]
    AlreadyApplied(Digest),
    #[error("proposal {0} has no repair request")]
    UnknownProposal(Digest),
    #[error("proposal {id} is {status:?} (stable: {stable})")]
    NotApproved {
        id: Digest,
        status: ApprovalStatus,
        stable: bool,
    },
    #[error("proposal {id} invalid: {reason}")]
    InvalidProposal { id: Digest, reason: ProposalError },
    #[error("logged proposal {0} differs from its recomputation")]
    AlteredProposal(Digest),
    #[error("state is not the result of applying the block's transactions")]
    BadTransition,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ChainFault {
    Empty,
    LayerLength { chain: usize, layer: usize },
    Genesis,
    /// An Rdb entry does not match the header commitments.
    Rdb,
    Block(BlockError),
    /// Replay succeeded but produced a different chain or repair layer.
    Divergence,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid at height {height}: {fault:?}")]
pub struct ChainError {
    pub height: Height,
    pub fault: ChainFault,
}

/// Block `i` in the form it had when produced.
pub(crate) fn original_block<'a>(c: &'a Chain, layer: &'a RepairLayer, i: usize) -> Cow<'a, Block> {
    match &layer.rdb[i] {
        None => Cow::Borrowed(&c.blocks[i]),
        Some(e) => Cow::Owned(Block {
            header: c.blocks[i].header.clone(),
            txs: e.original_txs.clone(),
            state: e.original_state.clone(),
        }),
    }
}

type Deferred = BTreeMap<Height, BTreeSet<Digest>>;

/// Leaves each logged redaction will stub out, keyed by target, for the
/// entries logged after position `from` in application order.
fn deferred_after(entries: &[&AdbEntry]) -> Vec<Deferred> {
    let mut acc = Deferred::new();
    let mut out = vec![Deferred::new(); entries.len()];
    for (i, e) in entries.iter().enumerate().rev() {
        out[i] = acc.clone();
        acc.entry(e.proposal.target_height)
            .or_default()
            .extend(e.proposal.redacted.iter().copied());
    }
    out
}

fn check_header(c: &Chain, b: &Block, params: &ChainParams) -> Result<(), BlockError> {
    let head = c.head().expect("non-empty prefix");
    if b.header.parent != head.hash() {
        return Err(BlockError::BadParent);
    }
    if b.header.slot <= head.header.slot {
        return Err(BlockError::SlotNotIncreasing {
            slot: b.header.slot,
            parent: head.header.slot,
        });
    }
    if crate::merkle::tx_root(&b.txs) != b.header.tx_root {
        return Err(BlockError::TxRootMismatch);
    }
    if b.state.root() != b.header.state_root {
        return Err(BlockError::StateRootMismatch);
    }
    match (&params.consensus, &b.header.consensus) {
        (ConsensusParams::Pow { difficulty }, ConsensusData::Pow { difficulty: d, .. }) => {
            if d != difficulty {
                return Err(BlockError::WrongConsensus);
            }
            if !chk_pow(&b.header) {
                return Err(BlockError::BadPow);
            }
        }
        (ConsensusParams::Pos { f, epoch_len }, ConsensusData::Pos { .. }) => {
            if !vfy_pos(c, &b.header, *f, *epoch_len, &params.registry) {
                return Err(BlockError::BadStakeProof);
            }
        }
        _ => return Err(BlockError::WrongConsensus),
    }
    Ok(())
}

/// Validates original-form block `b` on top of the repaired prefix
/// `(c, layer)`, applies its logged repairs and appends it.
fn step(
    c: &mut Chain,
    layer: &mut RepairLayer,
    b: &Block,
    adb: &[AdbEntry],
    deferred: &[Deferred],
    params: &ChainParams,
) -> Result<(), BlockError> {
    check_header(c, b, params)?;
    let n = c.len() as Height;
    if adb.windows(2).any(|w| w[0].proposal.id >= w[1].proposal.id) {
        return Err(BlockError::AdbOrder);
    }
    let empty = BTreeSet::new();
    for (e, later) in adb.iter().zip(deferred) {
        let id = e.proposal.id;
        if e.approval_height != n {
            return Err(BlockError::AdbHeight {
                found: e.approval_height,
                expected: n,
            });
        }
        if layer.is_applied(&id) {
            return Err(BlockError::AlreadyApplied(id));
        }
        let approval = chk_approval(c, &id, params).map_err(|_| BlockError::UnknownProposal(id))?;
        if approval.status != ApprovalStatus::Approve || !approval.stable {
            return Err(BlockError::NotApproved {
                id,
                status: approval.status,
                stable: approval.stable,
            });
        }
        let stubs = later.get(&e.proposal.target_height).unwrap_or(&empty);
        let rp = normalize_proposal(c, &e.proposal, params, Mode::Logged(stubs))
            .map_err(|reason| BlockError::InvalidProposal { id, reason })?;
        if rp != e.proposal {
            return Err(BlockError::AlteredProposal(id));
        }
        apply_repair(c, layer, &rp, params).expect("normalized proposal targets an existing block");
    }
    let head = c.head().expect("non-empty prefix");
    let expected = apply_transactions(&head.state, &b.txs, &b.header.producer(), &params.registry);
    if expected != b.state {
        return Err(BlockError::BadTransition);
    }
    c.blocks.push(b.clone());
    layer.push_empty();
    *layer.adb.last_mut().expect("just pushed") = adb.to_vec();
    Ok(())
}

/// Validates a freshly produced block (original form) with its Adb entries
/// against the repaired chain `(c, layer)`.
pub fn validate_block(
    c: &Chain,
    layer: &RepairLayer,
    b: &Block,
    adb: &[AdbEntry],
    params: &ChainParams,
) -> Result<(), BlockError> {
    let mut c = c.clone();
    let mut layer = layer.clone();
    step(&mut c, &mut layer, b, adb, &vec![Deferred::new(); adb.len()], params)
}

/// Validates `b` like [`validate_block`] and, on success, appends it to
/// `(c, layer)` with its repairs applied. On error nothing changes.
pub fn append_block(
    c: &mut Chain,
    layer: &mut RepairLayer,
    b: &Block,
    adb: &[AdbEntry],
    params: &ChainParams,
) -> Result<(), BlockError> {
    let none = vec![Deferred::new(); adb.len()];
    if adb.is_empty() {
        // Nothing is mutated before the final push.
        return step(c, layer, b, adb, &none, params);
    }
    let mut c2 = c.clone();
    let mut l2 = layer.clone();
    step(&mut c2, &mut l2, b, adb, &none, params)?;
    *c = c2;
    *layer = l2;
    Ok(())
}

fn check_shape(c: &Chain, layer: &RepairLayer, params: &ChainParams) -> Result<(), ChainError> {
    let fail = |height, fault| Err(ChainError { height, fault });
    if c.is_empty() {
        return fail(0, ChainFault::Empty);
    }
    if layer.len() != c.len() || layer.adb.len() != c.len() {
        return fail(
            0,
            ChainFault::LayerLength {
                chain: c.len(),
                layer: layer.len(),
            },
        );
    }
    let g = &c.blocks[0];
    if layer.rdb[0].is_some() || !layer.adb[0].is_empty() || g.header.parent != params.digest() || !g.commitments_match()
    {
        return fail(0, ChainFault::Genesis);
    }
    for i in 1..c.len() {
        if layer.rdb[i].is_some() && !original_block(c, layer, i).commitments_match() {
            return fail(i as Height, ChainFault::Rdb);
        }
    }
    Ok(())
}

/// Replays blocks `from..` of `(c, layer)` on top of an already validated
/// repaired prefix and checks the result reproduces the input exactly.
fn replay_from(
    mut rc: Chain,
    mut rl: RepairLayer,
    c: &Chain,
    layer: &RepairLayer,
    params: &ChainParams,
) -> Result<(), ChainError> {
    let from = rc.len();
    let entries: Vec<&AdbEntry> = layer.adb[from..].iter().flatten().collect();
    let deferred = deferred_after(&entries);
    let mut k = 0;
    for i in from..c.len() {
        let adb = &layer.adb[i];
        let b = original_block(c, layer, i);
        step(&mut rc, &mut rl, &b, adb, &deferred[k..k + adb.len()], params).map_err(|e| ChainError {
            height: i as Height,
            fault: ChainFault::Block(e),
        })?;
        k += adb.len();
    }
    if rc != *c || rl != *layer {
        let height = (0..c.len())
            .find(|&i| rc.blocks[i] != c.blocks[i] || rl.rdb[i] != layer.rdb[i] || rl.adb[i] != layer.adb[i])
            .unwrap_or(0) as Height;
        return Err(ChainError {
            height,
            fault: ChainFault::Divergence,
        });
    }
    Ok(())
}

/// Full validation from genesis, reporting the first fault.
pub fn validate_chain_detailed(c: &Chain, layer: &RepairLayer, params: &ChainParams) -> Result<(), ChainError> {
    check_shape(c, layer, params)?;
    replay_from(c.prune_close(1), RepairLayer::empty(1), c, layer, params)
}

pub fn validate_chain(c: &Chain, layer: &RepairLayer, params: &ChainParams) -> bool {
    validate_chain_detailed(c, layer, params).is_ok()
}

/// Validates `(c, layer)` reusing an already validated `(trusted,
/// trusted_layer)`. When the candidate extends the trusted chain (same
/// headers, same original bodies, same Adb) only the new blocks are
/// replayed; otherwise falls back to full validation.
pub fn validate_extension(
    trusted: &Chain,
    trusted_layer: &RepairLayer,
    c: &Chain,
    layer: &RepairLayer,
    params: &ChainParams,
) -> Result<(), ChainError> {
    check_shape(c, layer, params)?;
    let m = trusted.len();
    let extends = m >= 1
        && m <= c.len()
        && trusted_layer.len() == m
        && (0..m).all(|i| {
            trusted.blocks[i].header == c.blocks[i].header
                && trusted_layer.adb[i] == layer.adb[i]
                && *original_block(trusted, trusted_layer, i) == *original_block(c, layer, i)
        });
    if extends {
        replay_from(trusted.clone(), trusted_layer.clone(), c, layer, params)
    } else {
        replay_from(c.prune_close(1), RepairLayer::empty(1), c, layer, params)
    }
}
