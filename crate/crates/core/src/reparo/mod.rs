//! The repair layer: proposals, the voting policy, cascading repair and
//! repair-aware validation backed by the Rdb/Adb databases.
//!
//! A repair replaces the body of a stable block. Headers are never touched:
//! the original body (or a redacted version of it) moves into the block's
//! Rdb entry so the old commitments remain checkable, and the approved
//! proposal is logged in the Adb at the height where it was applied so any
//! validator can replay the repair in order.

mod approval;
mod policy;
mod pool;
mod proposal;
mod repair;
mod validate;

use serde::{Deserialize, Serialize};

use crate::types::{AccountState, Height, TxEntry};

pub use approval::{chk_approval, vote_windows, Approval, ApprovalError, ApprovalStatus, Tally, VoteWindow};
pub use policy::{validate_proposal, Policy, ProposalError, Veto};
pub use pool::{update_proposal_pool, PoolEvent, ProposalPool};
pub use proposal::{
    build_repair_tx, build_vote_tx, merge_redactions, propose_repair, redact_matching, retain_and_redact,
    vote, RedactError, RepairKind, RepairProposal,
};
pub(crate) use policy::normalize_for_apply;
pub(crate) use repair::settle_entries;
pub use repair::{apply_repair, repair_chain, RepairError};
pub use validate::{
    append_block, validate_block, validate_chain, validate_chain_detailed, validate_extension, BlockError, ChainError, ChainFault,
};

/// Original contents of a repaired block, recorded at its first repair.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RdbEntry {
    pub original_txs: Vec<TxEntry>,
    pub original_state: AccountState,
}

/// A repair applied while producing the block at `approval_height`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdbEntry {
    pub approval_height: Height,
    pub proposal: RepairProposal,
}

/// Per-height Rdb and Adb, aligned with the chain.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RepairLayer {
    pub rdb: Vec<Option<RdbEntry>>,
    pub adb: Vec<Vec<AdbEntry>>,
}

impl RepairLayer {
    /// Empty layer for a chain of `len` blocks.
    pub fn empty(len: usize) -> Self {
        RepairLayer {
            rdb: vec![None; len],
            adb: vec![Vec::new(); len],
        }
    }

    pub fn len(&self) -> usize {
        self.rdb.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rdb.is_empty()
    }

    pub fn push_empty(&mut self) {
        self.rdb.push(None);
        self.adb.push(Vec::new());
    }

    pub fn truncate(&mut self, len: usize) {
        self.rdb.truncate(len);
        self.adb.truncate(len);
    }

    /// Every Adb entry in application order.
    pub fn approvals(&self) -> impl Iterator<Item = &AdbEntry> {
        self.adb.iter().flatten()
    }

    pub fn is_applied(&self, id: &crate::hash::Digest) -> bool {
        self.approvals().any(|e| e.proposal.id == *id)
    }

    pub fn repaired_heights(&self) -> impl Iterator<Item = Height> + '_ {
        self.rdb
            .iter()
            .enumerate()
            .filter(|(_, e)| e.is_some())
            .map(|(h, _)| h as Height)
    }
}
