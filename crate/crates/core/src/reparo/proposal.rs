use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::hash::{sha256_concat, Digest};
use crate::keys::Identity;
use crate::merkle::tx_root;
use crate::params::ChainParams;
use crate::state::{apply_transactions, special_format_ok};
use crate::types::{AccountState, Chain, Height, Transaction, TxEntry, REQ_ADDR, VOTE_ADDR};

use super::policy::ProposalError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RepairKind {
    Redaction,
    Stateful,
}

/// Replacement body for block `target_height`: new transactions plus the
/// post-state they produce on top of the previous block's state.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepairProposal {
    pub target_height: Height,
    /// Transaction root of the block body being replaced.
    pub old_tx_root: Digest,
    pub new_txs: Vec<TxEntry>,
    pub new_state: AccountState,
    pub kind: RepairKind,
    /// Leaf digests newly redacted by this proposal, ascending. Empty for
    /// stateful repairs.
    #[serde(default)]
    pub redacted: Vec<Digest>,
    pub id: Digest,
}

impl RepairProposal {
    /// Second half of the repair request: the transaction root of the
    /// replacement for stateful repairs. A redaction leaves the root
    /// unchanged, so it commits to the redacted leaves instead.
    pub fn replacement_commitment(&self) -> Digest {
        commitment(self.kind, &self.new_txs, &self.redacted)
    }

    /// `old_tx_root || replacement_commitment`, the 64-byte repair request payload.
    pub fn request_data(&self) -> Vec<u8> {
        let mut data = Vec::with_capacity(64);
        data.extend_from_slice(&self.old_tx_root.0);
        data.extend_from_slice(&self.replacement_commitment().0);
        data
    }

    pub fn compute_id(&self) -> Digest {
        crate::hash::sha256(&self.request_data())
    }
}

fn commitment(kind: RepairKind, new_txs: &[TxEntry], redacted: &[Digest]) -> Digest {
    match kind {
        RepairKind::Stateful => tx_root(new_txs),
        RepairKind::Redaction => {
            let root = tx_root(new_txs);
            let mut parts: Vec<&[u8]> = vec![b"reparo/redaction", &root.0];
            parts.extend(redacted.iter().map(|d| &d.0[..]));
            sha256_concat(&parts)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RedactError {
    #[error("index {0} out of range")]
    IndexOutOfRange(usize),
    #[error("entry {0} already redacted")]
    AlreadyRedacted(usize),
}

/// Replaces the entries at `indices` with redacted stubs. The transaction
/// root is preserved.
pub fn retain_and_redact(txs: &[TxEntry], indices: &BTreeSet<usize>) -> Result<Vec<TxEntry>, RedactError> {
    let mut out = txs.to_vec();
    for &i in indices {
        match out.get(i) {
            None => return Err(RedactError::IndexOutOfRange(i)),
            Some(TxEntry::Redacted(_)) => return Err(RedactError::AlreadyRedacted(i)),
            Some(TxEntry::Full(tx)) => out[i] = TxEntry::Redacted(tx.redacted()),
        }
    }
    Ok(out)
}

/// Redacts every full entry whose leaf is in `leaves`. Idempotent.
pub fn redact_matching(txs: &mut [TxEntry], leaves: &[Digest]) {
    if leaves.is_empty() {
        return;
    }
    for e in txs.iter_mut() {
        if let TxEntry::Full(tx) = e {
            if leaves.contains(&tx.hash()) {
                *e = TxEntry::Redacted(tx.redacted());
            }
        }
    }
}

/// Carries redactions already applied to `current` over into `proposed`.
pub fn merge_redactions(current: &[TxEntry], proposed: &[TxEntry]) -> Vec<TxEntry> {
    proposed
        .iter()
        .enumerate()
        .map(|(i, p)| match (current.get(i), p) {
            (Some(TxEntry::Redacted(stub)), TxEntry::Full(tx)) if tx.hash() == stub.digest => {
                TxEntry::Redacted(stub.clone())
            }
            _ => p.clone(),
        })
        .collect()
}

/// Redaction iff the only differences are full→stub substitutions of the
/// same transaction (at least one). Returns the kind and the redacted leaves.
pub(crate) fn infer_kind(current: &[TxEntry], proposed: &[TxEntry]) -> (RepairKind, Vec<Digest>) {
    if current.len() != proposed.len() {
        return (RepairKind::Stateful, Vec::new());
    }
    let mut redacted = Vec::new();
    for (c, p) in current.iter().zip(proposed) {
        if c == p {
            continue;
        }
        match (c, p) {
            (TxEntry::Full(tx), TxEntry::Redacted(stub)) if tx.redacted() == *stub => redacted.push(stub.digest),
            _ => return (RepairKind::Stateful, Vec::new()),
        }
    }
    if redacted.is_empty() {
        (RepairKind::Stateful, Vec::new())
    } else {
        redacted.sort();
        (RepairKind::Redaction, redacted)
    }
}

/// δ(ACC_{j−1}, txs) with block j's producer credited.
pub(crate) fn recompute_state(c: &Chain, j: Height, txs: &[TxEntry], params: &ChainParams) -> AccountState {
    let prev = &c.blocks[j as usize - 1].state;
    let producer = c.blocks[j as usize].header.producer();
    apply_transactions(prev, txs, &producer, &params.registry)
}

/// Builds a repair proposal for block `j` of `c`.
pub fn propose_repair(
    c: &Chain,
    j: Height,
    new_txs: Vec<TxEntry>,
    params: &ChainParams,
) -> Result<RepairProposal, ProposalError> {
    if j == 0 {
        return Err(ProposalError::GenesisImmutable);
    }
    let Some(block) = c.get(j) else {
        return Err(ProposalError::UnknownTarget(j));
    };
    if c.depth_of(j) < params.stability_depth {
        return Err(ProposalError::UnstableTarget(j));
    }
    for (i, e) in new_txs.iter().enumerate() {
        if let TxEntry::Full(tx) = e {
            let authentic = params.registry.verify(&tx.from, &tx.payload(), &tx.auth);
            if !authentic || !special_format_ok(tx) {
                return Err(ProposalError::MalformedReplacement(i));
            }
        }
    }
    let new_txs = merge_redactions(&block.txs, &new_txs);
    let (kind, redacted) = infer_kind(&block.txs, &new_txs);
    let new_state = recompute_state(c, j, &new_txs, params);
    let mut rp = RepairProposal {
        target_height: j,
        old_tx_root: tx_root(&block.txs),
        new_txs,
        new_state,
        kind,
        redacted,
        id: Digest::ZERO,
    };
    rp.id = rp.compute_id();
    Ok(rp)
}

/// Vote value for `rp` on chain `c`: `H(txRoot(TX_j) || commitment(TX★_j))`.
pub fn vote(c: &Chain, rp: &RepairProposal) -> Digest {
    let current_root = c
        .get(rp.target_height)
        .map(|b| tx_root(&b.txs))
        .unwrap_or(rp.old_tx_root);
    sha256_concat(&[&current_root.0, &rp.replacement_commitment().0])
}

/// Repair request carrying `old_tx_root || commitment` (64 bytes) to `REQ_ADDR`.
pub fn build_repair_tx(sender: &Identity, nonce: u64, rp: &RepairProposal) -> Transaction {
    Transaction::signed(sender, REQ_ADDR, 0, nonce, rp.request_data())
}

/// Vote carrying the 32-byte proposal id to `VOTE_ADDR`.
pub fn build_vote_tx(sender: &Identity, nonce: u64, id: &Digest) -> Transaction {
    Transaction::signed(sender, VOTE_ADDR, 0, nonce, id.0.to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hash::Address;

    fn txs(n: u64) -> Vec<TxEntry> {
        let id = Identity::derive("p", 0);
        (0..n)
            .map(|i| Transaction::signed(&id, Address::special(5), i, i, vec![i as u8; 4]).into())
            .collect()
    }

    #[test]
    fn redact_one_of_three() {
        let t = txs(3);
        let out = retain_and_redact(&t, &BTreeSet::from([1])).unwrap();
        assert_eq!(out[0], t[0]);
        assert_eq!(out[1], TxEntry::Redacted(t[1].as_full().unwrap().redacted()));
        assert_eq!(out[2], t[2]);
        assert_eq!(tx_root(&out), tx_root(&t));
    }

    #[test]
    fn redact_singleton_and_errors() {
        let t = txs(1);
        let out = retain_and_redact(&t, &BTreeSet::from([0])).unwrap();
        assert!(out[0].is_redacted());
        assert_eq!(
            retain_and_redact(&txs(3), &BTreeSet::from([5])),
            Err(RedactError::IndexOutOfRange(5))
        );
        assert_eq!(
            retain_and_redact(&out, &BTreeSet::from([0])),
            Err(RedactError::AlreadyRedacted(0))
        );
    }

    #[test]
    fn kind_inference() {
        let t = txs(3);
        let red = retain_and_redact(&t, &BTreeSet::from([0, 2])).unwrap();
        let (kind, leaves) = infer_kind(&t, &red);
        assert_eq!(kind, RepairKind::Redaction);
        assert_eq!(leaves.len(), 2);
        assert_eq!(infer_kind(&t, &t).0, RepairKind::Stateful);
        assert_eq!(infer_kind(&t, &t[..2]).0, RepairKind::Stateful);
    }

    #[test]
    fn merge_keeps_existing_stubs() {
        let t = txs(3);
        let red = retain_and_redact(&t, &BTreeSet::from([1])).unwrap();
        assert_eq!(merge_redactions(&red, &t), red);
    }

    #[test]
    fn special_tx_lengths() {
        let id = Identity::derive("s", 0);
        let rp = RepairProposal {
            target_height: 1,
            old_tx_root: Digest([7; 32]),
            new_txs: txs(2),
            new_state: AccountState::new(),
            kind: RepairKind::Stateful,
            redacted: vec![],
            id: Digest::ZERO,
        };
        let req = build_repair_tx(&id, 0, &rp);
        assert_eq!(req.data.len(), 64);
        assert_eq!(req.to.0[19], 0x13);
        assert_eq!(&req.data[..32], &rp.old_tx_root.0);
        assert_eq!(crate::hash::sha256(&req.data), rp.compute_id());
        let v = build_vote_tx(&id, 0, &rp.compute_id());
        assert_eq!(v.data.len(), 32);
        assert_eq!(v.to.0[19], 0x14);
    }
}
