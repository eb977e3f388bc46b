use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::hash::Digest;
use crate::merkle::tx_root;
use crate::params::ChainParams;
use crate::state::{is_contract_creation, special_call, special_format_ok, SpecialCall};
use crate::types::{Chain, Height, TxEntry};

use super::proposal::{merge_redactions, recompute_state, RepairKind, RepairProposal};

/// Off-chain veto hook ("is this a double spend in disguise?").
#[derive(Clone)]
pub struct Veto(pub Arc<dyn Fn(&Digest) -> bool + Send + Sync>);

impl fmt::Debug for Veto {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Veto(..)")
    }
}

/// Repair policy. Sender, recipient and value of retained transactions are
/// always immutable, votes and repair requests can never be edited, and
/// consensus data lives in headers which repairs never touch.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Policy {
    /// Voting window ℓ in blocks (proof of work). Under proof of stake the
    /// window is one epoch.
    pub window: u64,
    /// Approval requires strictly more than `rho` of the window's blocks to vote.
    pub rho: f64,
    pub allow_redaction: bool,
    pub allow_stateful: bool,
    /// Proposal ids rejected by real-world information.
    #[serde(default)]
    pub vetoed: BTreeSet<Digest>,
    #[serde(skip)]
    pub external_veto: Option<Veto>,
}

impl PartialEq for Policy {
    fn eq(&self, other: &Self) -> bool {
        self.window == other.window
            && self.rho == other.rho
            && self.allow_redaction == other.allow_redaction
            && self.allow_stateful == other.allow_stateful
            && self.vetoed == other.vetoed
    }
}

impl Default for Policy {
    fn default() -> Self {
        Policy {
            window: 10,
            rho: 0.5,
            allow_redaction: true,
            allow_stateful: true,
            vetoed: BTreeSet::new(),
            external_veto: None,
        }
    }
}

impl Policy {
    pub fn validate(&self) -> Result<(), String> {
        if self.window == 0 {
            return Err("policy window must be >= 1".into());
        }
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return Err(format!("rho must be in (0,1], got {}", self.rho));
        }
        Ok(())
    }

    pub fn protects_votes(&self) -> bool {
        true
    }

    pub fn protects_consensus_params(&self) -> bool {
        true
    }

    pub fn permits(&self, kind: RepairKind) -> bool {
        match kind {
            RepairKind::Redaction => self.allow_redaction,
            RepairKind::Stateful => self.allow_stateful,
        }
    }

    pub fn vetoes(&self, id: &Digest) -> bool {
        self.vetoed.contains(id) || self.external_veto.as_ref().is_some_and(|v| (v.0)(id))
    }

    /// Strictly more than `rho` of `window_size`.
    pub fn clears_threshold(&self, votes: u64, window_size: u64) -> bool {
        votes as f64 > self.rho * window_size as f64
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProposalError {
    #[error("genesis cannot be repaired")]
    GenesisImmutable,
    #[error("no block at height {0}")]
    UnknownTarget(Height),
    #[error("block {0} is not yet stable")]
    UnstableTarget(Height),
    #[error("replacement transaction {0} fails authentication or format checks")]
    MalformedReplacement(usize),
    #[error("referenced transaction root matches no block (spam)")]
    Spam,
    #[error("proposal id does not match its contents")]
    IdMismatch,
    #[error("declared kind does not match the replacement")]
    KindMismatch,
    #[error("{0:?} repairs are not permitted by the policy")]
    KindNotPermitted(RepairKind),
    #[error("replacement changes the number of transactions")]
    StructureChanged,
    #[error("transaction {index} changes immutable field `{field}`")]
    ForbiddenField { index: usize, field: &'static str },
    #[error("transaction {0} is a vote or repair request and cannot be edited")]
    VoteProtected(usize),
    #[error("redacted entry {0} was altered")]
    StubAltered(usize),
    #[error("transaction {0} may not be redacted")]
    NotRedactable(usize),
    #[error("a proposal cannot mix redactions with other edits")]
    MixedRepair,
    #[error("redaction would change the account state")]
    NotStateNeutral,
    #[error("proposed state does not match the recomputed state")]
    StateMismatch,
}

fn may_redact(entry: &TxEntry, pos: bool) -> bool {
    let TxEntry::Full(tx) = entry else {
        return false;
    };
    if special_call(&tx.to) != SpecialCall::Normal || is_contract_creation(&tx.from, &tx.to, tx.nonce) {
        return false;
    }
    // Under PoW, zero-value carriers may be redacted whole.
    !tx.data.is_empty() || (!pos && tx.value == 0)
}

/// How strictly `normalize_proposal` treats a proposal.
#[derive(Clone, Copy, Debug)]
pub(crate) enum Mode<'a> {
    /// A new proposal: its post-state must match the recomputed one.
    Fresh,
    /// An approved proposal about to be applied: the post-state is recomputed.
    Apply,
    /// A proposal replayed from the Adb. Its body may carry stubs for the
    /// given leaves, which later logged redactions of the target remove.
    Logged(&'a BTreeSet<Digest>),
}

/// Position-wise comparison of the current body with the replacement.
/// Returns the newly redacted leaves (ascending) and whether any entry was
/// otherwise modified.
fn classify(
    current: &[TxEntry],
    proposed: &[TxEntry],
    params: &ChainParams,
    deferred: &BTreeSet<Digest>,
    early: &[Digest],
) -> Result<(Vec<Digest>, bool), ProposalError> {
    if current.len() != proposed.len() {
        return Err(ProposalError::StructureChanged);
    }
    let mut redacted = Vec::new();
    let mut modified = false;
    for (i, (c, p)) in current.iter().zip(proposed).enumerate() {
        if c == p {
            // A logged redaction whose stub was already placed by an
            // earlier logged proposal.
            if let TxEntry::Redacted(stub) = p {
                if early.contains(&stub.digest) {
                    redacted.push(stub.digest);
                }
            }
            continue;
        }
        if special_call(&c.to()) != SpecialCall::Normal {
            return Err(ProposalError::VoteProtected(i));
        }
        for (field, same) in [
            ("from", p.from() == c.from()),
            ("to", p.to() == c.to()),
            ("value", p.value() == c.value()),
        ] {
            if !same {
                return Err(ProposalError::ForbiddenField { index: i, field });
            }
        }
        match (c, p) {
            (_, TxEntry::Redacted(stub)) if deferred.contains(&stub.digest) => {
                modified |= c.leaf() != stub.digest;
            }
            (TxEntry::Full(old), TxEntry::Redacted(stub)) if *stub == old.redacted() => {
                if !may_redact(c, params.is_pos()) {
                    return Err(ProposalError::NotRedactable(i));
                }
                redacted.push(stub.digest);
            }
            (_, TxEntry::Redacted(_)) => return Err(ProposalError::StubAltered(i)),
            (_, TxEntry::Full(new)) => {
                if !params.registry.verify(&new.from, &new.payload(), &new.auth) || !special_format_ok(new) {
                    return Err(ProposalError::MalformedReplacement(i));
                }
                modified = true;
            }
        }
    }
    redacted.sort();
    Ok((redacted, modified))
}

/// Checks `rp` against the current chain and returns it normalized: prior
/// redactions of the target merged in and the post-state recomputed.
pub(crate) fn normalize_proposal(
    c: &Chain,
    rp: &RepairProposal,
    params: &ChainParams,
    mode: Mode<'_>,
) -> Result<RepairProposal, ProposalError> {
    let j = rp.target_height;
    if j == 0 {
        return Err(ProposalError::GenesisImmutable);
    }
    let Some(block) = c.get(j) else {
        return Err(ProposalError::UnknownTarget(j));
    };
    if c.depth_of(j) < params.stability_depth {
        return Err(ProposalError::UnstableTarget(j));
    }
    if rp.old_tx_root != tx_root(&block.txs) {
        return Err(ProposalError::Spam);
    }
    if rp.compute_id() != rp.id {
        return Err(ProposalError::IdMismatch);
    }
    let none = BTreeSet::new();
    let (deferred, early) = match mode {
        Mode::Logged(d) => (d, &rp.redacted[..]),
        _ => (&none, &[][..]),
    };
    let merged = merge_redactions(&block.txs, &rp.new_txs);
    let (redacted, modified) = classify(&block.txs, &merged, params, deferred, early)?;
    let kind = match (redacted.is_empty(), modified) {
        (false, true) => return Err(ProposalError::MixedRepair),
        (false, false) => RepairKind::Redaction,
        (true, _) => RepairKind::Stateful,
    };
    if kind != rp.kind || redacted != rp.redacted {
        return Err(ProposalError::KindMismatch);
    }
    if !params.policy.permits(kind) {
        return Err(ProposalError::KindNotPermitted(kind));
    }
    let state = recompute_state(c, j, &merged, params);
    if kind == RepairKind::Redaction && state != block.state {
        return Err(ProposalError::NotStateNeutral);
    }
    if matches!(mode, Mode::Fresh) && state != rp.new_state {
        return Err(ProposalError::StateMismatch);
    }
    Ok(RepairProposal {
        new_txs: merged,
        new_state: state,
        ..rp.clone()
    })
}

/// Full policy check of a proposal against chain `c`.
pub fn validate_proposal(c: &Chain, rp: &RepairProposal, params: &ChainParams) -> Result<(), ProposalError> {
    normalize_proposal(c, rp, params, Mode::Fresh).map(|_| ())
}

/// Normalizes an approved proposal for application on `c`.
pub(crate) fn normalize_for_apply(
    c: &Chain,
    rp: &RepairProposal,
    params: &ChainParams,
) -> Result<RepairProposal, ProposalError> {
    normalize_proposal(c, rp, params, Mode::Apply)
}
