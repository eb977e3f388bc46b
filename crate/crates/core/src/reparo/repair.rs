use crate::hash::Digest;
use crate::params::ChainParams;
use crate::state::apply_transactions;
use crate::types::{Chain, Height};

use super::approval::{chk_approval, ApprovalError, ApprovalStatus};
use super::policy::{normalize_proposal, Mode, ProposalError};
use super::proposal::{redact_matching, RepairKind, RepairProposal};
use super::{RdbEntry, RepairLayer};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RepairError {
    #[error("no block at height {0}")]
    UnknownTarget(Height),
    #[error("repair layer covers {layer} blocks but the chain has {chain}")]
    LayerMismatch { layer: usize, chain: usize },
    #[error(transparent)]
    Invalid(#[from] ProposalError),
    #[error(transparent)]
    Approval(#[from] ApprovalError),
    #[error("proposal {0} is not approved ({1:?})")]
    NotApproved(Digest, ApprovalStatus),
}

/// Applies an already checked proposal in place: records the original body
/// in the Rdb, swaps in the replacement and recomputes every later state.
/// Headers are left untouched. Does not log the proposal in the Adb.
pub fn apply_repair(
    c: &mut Chain,
    layer: &mut RepairLayer,
    rp: &RepairProposal,
    params: &ChainParams,
) -> Result<(), RepairError> {
    if layer.len() != c.len() {
        return Err(RepairError::LayerMismatch {
            layer: layer.len(),
            chain: c.len(),
        });
    }
    let j = rp.target_height as usize;
    if j == 0 {
        return Err(ProposalError::GenesisImmutable.into());
    }
    if j >= c.len() {
        return Err(RepairError::UnknownTarget(rp.target_height));
    }
    let redaction = rp.kind == RepairKind::Redaction;
    match &mut layer.rdb[j] {
        slot @ None => {
            let block = &c.blocks[j];
            *slot = Some(RdbEntry {
                original_txs: if redaction { rp.new_txs.clone() } else { block.txs.clone() },
                original_state: block.state.clone(),
            });
        }
        Some(entry) if redaction => {
            redact_matching(&mut entry.original_txs, &rp.redacted);
            for e in layer.adb.iter_mut().flatten() {
                if e.proposal.target_height == rp.target_height {
                    redact_matching(&mut e.proposal.new_txs, &rp.redacted);
                }
            }
        }
        Some(_) => {}
    }
    c.blocks[j].txs = rp.new_txs.clone();
    c.blocks[j].state = rp.new_state.clone();
    if redaction {
        // State-neutral by construction: nothing downstream changes.
        return Ok(());
    }
    for i in j + 1..c.len() {
        if layer.rdb[i].is_none() {
            layer.rdb[i] = Some(RdbEntry {
                original_txs: c.blocks[i].txs.clone(),
                original_state: c.blocks[i].state.clone(),
            });
        }
        let producer = c.blocks[i].header.producer();
        let next = apply_transactions(&c.blocks[i - 1].state, &c.blocks[i].txs, &producer, &params.registry);
        c.blocks[i].state = next;
    }
    Ok(())
}

/// Checks that `rp` is approved and policy-valid on `c`, then returns the
/// repaired chain and repair layer.
pub fn repair_chain(
    c: &Chain,
    layer: &RepairLayer,
    rp: &RepairProposal,
    params: &ChainParams,
) -> Result<(Chain, RepairLayer), RepairError> {
    let approval = chk_approval(c, &rp.id, params)?;
    if approval.status != ApprovalStatus::Approve {
        return Err(RepairError::NotApproved(rp.id, approval.status));
    }
    let rp = normalize_proposal(c, rp, params, Mode::Apply)?;
    let mut c2 = c.clone();
    let mut layer2 = layer.clone();
    apply_repair(&mut c2, &mut layer2, &rp, params)?;
    Ok((c2, layer2))
}

/// Brings entries logged together in one block into their final form: a
/// redaction logged later in the list also stubs the leaves in earlier
/// entries for the same target.
pub(crate) fn settle_entries(entries: &mut [super::AdbEntry]) {
    for k in 0..entries.len() {
        if entries[k].proposal.kind != RepairKind::Redaction {
            continue;
        }
        let (earlier, rest) = entries.split_at_mut(k);
        let r = &rest[0].proposal;
        for e in earlier.iter_mut().filter(|e| e.proposal.target_height == r.target_height) {
            redact_matching(&mut e.proposal.new_txs, &r.redacted);
        }
    }
}
