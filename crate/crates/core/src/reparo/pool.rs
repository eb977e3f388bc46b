use std::collections::BTreeMap;

use crate::hash::Digest;
use crate::params::ChainParams;
use crate::types::Chain;

use super::approval::{chk_approval, ApprovalStatus};
use super::policy::{normalize_proposal, Mode, ProposalError};
use super::proposal::RepairProposal;
use super::RepairLayer;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PoolEvent {
    Added(Digest),
    Duplicate(Digest),
    /// Target unknown or not yet stable; retried on the next update.
    Deferred(Digest),
    Invalid(Digest, ProposalError),
    /// Applied on the current chain.
    Applied(Digest),
    /// Rejected with a stable decision.
    Rejected(Digest),
}

/// Proposals a node knows about, keyed by id.
#[derive(Clone, Debug, Default)]
pub struct ProposalPool {
    pub valid: BTreeMap<Digest, RepairProposal>,
    pub pending: BTreeMap<Digest, RepairProposal>,
}

impl ProposalPool {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.valid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.valid.is_empty()
    }

    pub fn contains(&self, id: &Digest) -> bool {
        self.valid.contains_key(id) || self.pending.contains_key(id)
    }

    pub fn get(&self, id: &Digest) -> Option<&RepairProposal> {
        self.valid.get(id)
    }

    /// Approved with a stable decision and not yet applied, in id order.
    pub fn approvable<'a>(
        &'a self,
        c: &'a Chain,
        layer: &'a RepairLayer,
        params: &'a ChainParams,
    ) -> impl Iterator<Item = &'a RepairProposal> + 'a {
        self.valid.values().filter(move |rp| {
            !layer.is_applied(&rp.id)
                && chk_approval(c, &rp.id, params)
                    .is_ok_and(|a| a.status == ApprovalStatus::Approve && a.stable)
        })
    }
}

fn admit(pool: &mut ProposalPool, c: &Chain, rp: RepairProposal, params: &ChainParams) -> PoolEvent {
    let id = rp.id;
    match normalize_proposal(c, &rp, params, Mode::Fresh) {
        Ok(_) => {
            pool.pending.remove(&id);
            pool.valid.insert(id, rp);
            PoolEvent::Added(id)
        }
        Err(ProposalError::UnknownTarget(_) | ProposalError::UnstableTarget(_)) => {
            pool.pending.insert(id, rp);
            PoolEvent::Deferred(id)
        }
        Err(e) => {
            pool.pending.remove(&id);
            PoolEvent::Invalid(id, e)
        }
    }
}

/// Admits `incoming` proposals that pass the policy on `c`, retries deferred
/// ones and drops proposals that were applied or finally rejected.
pub fn update_proposal_pool(
    pool: &mut ProposalPool,
    c: &Chain,
    layer: &RepairLayer,
    incoming: impl IntoIterator<Item = RepairProposal>,
    params: &ChainParams,
) -> Vec<PoolEvent> {
    let mut events = Vec::new();
    for rp in incoming {
        if pool.contains(&rp.id) || layer.is_applied(&rp.id) {
            events.push(PoolEvent::Duplicate(rp.id));
        } else {
            events.push(admit(pool, c, rp, params));
        }
    }
    let retry: Vec<RepairProposal> = pool.pending.values().cloned().collect();
    for rp in retry {
        match admit(pool, c, rp, params) {
            PoolEvent::Deferred(_) => {}
            ev => events.push(ev),
        }
    }
    let ids: Vec<Digest> = pool.valid.keys().copied().collect();
    for id in ids {
        if layer.is_applied(&id) {
            pool.valid.remove(&id);
            events.push(PoolEvent::Applied(id));
        } else if chk_approval(c, &id, params).is_ok_and(|a| a.status == ApprovalStatus::Reject && a.stable) {
            pool.valid.remove(&id);
            events.push(PoolEvent::Rejected(id));
        }
    }
    events
}
