use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::builder::{produce_block, BlockTemplate, ProduceError};
use crate::hash::{Address, Digest};
use crate::keys::Identity;
use crate::params::ChainParams;
use crate::reparo::{
    apply_repair, propose_repair, retain_and_redact, update_proposal_pool, validate_extension, vote_windows,
    AdbEntry, ApprovalStatus, ChainError, PoolEvent, ProposalPool, RdbEntry, RepairLayer, RepairProposal,
};
use crate::state::{special_call, SpecialCall, REPAIR_TX_DATA_LEN};
use crate::types::{Chain, Transaction, TxEntry, REQ_ADDR};

use super::config::Strategy;

/// A chain together with its repair layer, as broadcast.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainView {
    pub chain: Chain,
    pub layer: RepairLayer,
}

#[derive(Clone, Debug)]
pub(crate) enum Msg {
    Chain(Arc<ChainView>),
    Tx(TxEntry),
    Proposal(RepairProposal),
}

pub(crate) enum Received {
    Adopted,
    Rejected(ChainError),
    Ignored,
}

pub(crate) struct Node {
    pub index: usize,
    pub ident: Identity,
    pub strategy: Option<Strategy>,
    pub params: ChainParams,
    pub view: ChainView,
    pub pool: ProposalPool,
    /// Pending transactions keyed by sender and nonce; first seen wins.
    mempool: BTreeMap<(Address, u64), TxEntry>,
    heard: BTreeSet<Digest>,
    private: Option<ChainView>,
}

impl Node {
    pub fn new(index: usize, ident: Identity, strategy: Option<Strategy>, params: ChainParams, genesis: &Chain) -> Self {
        Node {
            index,
            ident,
            strategy,
            params,
            view: ChainView {
                chain: genesis.clone(),
                layer: RepairLayer::empty(genesis.len()),
            },
            pool: ProposalPool::new(),
            mempool: BTreeMap::new(),
            heard: BTreeSet::new(),
            private: None,
        }
    }

    pub fn is_honest(&self) -> bool {
        self.strategy.is_none()
    }

    pub fn len(&self) -> usize {
        self.view.chain.len()
    }

    fn prune_mempool(&mut self) {
        let st = &self.view.chain.head().expect("genesis").state;
        self.mempool.retain(|(from, nonce), _| *nonce >= st.nonce(from));
    }

    pub fn add_tx(&mut self, tx: TxEntry) {
        let key = (tx.from(), tx.nonce());
        if key.1 >= self.view.chain.head().expect("genesis").state.nonce(&key.0) {
            self.mempool.entry(key).or_insert(tx);
        }
    }

    /// Next nonce for a transaction of this node, past anything pending.
    pub fn next_nonce(&self) -> u64 {
        let base = self.view.chain.head().expect("genesis").state.nonce(&self.ident.address);
        self.mempool
            .range((self.ident.address, base)..=(self.ident.address, u64::MAX))
            .map(|((_, n), _)| n + 1)
            .max()
            .unwrap_or(base)
    }

    pub fn add_proposal(&mut self, rp: RepairProposal) -> Vec<PoolEvent> {
        self.heard.insert(rp.id);
        update_proposal_pool(&mut self.pool, &self.view.chain, &self.view.layer, [rp], &self.params)
    }

    pub fn refresh_pool(&mut self) -> Vec<PoolEvent> {
        update_proposal_pool(&mut self.pool, &self.view.chain, &self.view.layer, [], &self.params)
    }

    /// Longest valid chain wins; ties keep the chain seen first.
    pub fn receive_chain(&mut self, cand: &ChainView) -> Received {
        if cand.chain.len() <= self.view.chain.len() {
            return Received::Ignored;
        }
        match validate_extension(&self.view.chain, &self.view.layer, &cand.chain, &cand.layer, &self.params) {
            Ok(()) => {
                self.view = cand.clone();
                self.prune_mempool();
                Received::Adopted
            }
            Err(e) => Received::Rejected(e),
        }
    }

    fn candidate_txs(&self) -> Vec<TxEntry> {
        let own = self.ident.address;
        let mine = self.mempool.iter().filter(|((f, _), _)| *f == own);
        let rest = self.mempool.iter().filter(|((f, _), _)| *f != own);
        mine.chain(rest).map(|(_, tx)| tx.clone()).collect()
    }

    fn votes_for(&self, c: &Chain, slot: u64) -> Vec<Digest> {
        let n = c.len() as u64;
        let ids: Vec<Digest> = match self.strategy {
            Some(Strategy::Withhold) | Some(Strategy::ForkExtend) => return Vec::new(),
            Some(Strategy::SpamVote) => self.heard.iter().chain(self.pool.valid.keys()).copied().collect(),
            _ => self
                .pool
                .valid
                .keys()
                .copied()
                .filter(|id| {
                    crate::reparo::chk_approval(c, id, &self.params).is_ok_and(|a| a.status == ApprovalStatus::Voting)
                })
                .collect(),
        };
        let ids: BTreeSet<Digest> = ids.into_iter().collect();
        ids.into_iter()
            .filter(|id| vote_windows(c, id, &self.params).iter().any(|w| w.admits(n, slot)))
            .collect()
    }

    /// Tries to extend a chain at `slot`. Returns the chain to broadcast.
    pub fn produce(
        &mut self,
        slot: u64,
        apply_repairs: bool,
        max_txs: usize,
        pow_attempts: u64,
        rng: &mut ChaCha8Rng,
    ) -> Option<Arc<ChainView>> {
        if self.strategy == Some(Strategy::ForkExtend) {
            return self.produce_private(slot, max_txs, pow_attempts);
        }
        let mut txs = self.candidate_txs();
        if self.strategy == Some(Strategy::SpamVote) {
            let mut data = vec![0u8; REPAIR_TX_DATA_LEN];
            rng.fill(&mut data[..]);
            let bogus = Transaction::signed(&self.ident, REQ_ADDR, 0, self.next_nonce(), data);
            txs.insert(0, bogus.into());
        }
        let votes = self.votes_for(&self.view.chain, slot);
        let pool: Vec<RepairProposal> = if apply_repairs && self.strategy.is_none() {
            self.pool.valid.values().cloned().collect()
        } else {
            Vec::new()
        };
        let tpl = BlockTemplate {
            slot,
            txs,
            proposals: pool.iter().collect(),
            votes,
            max_txs: Some(max_txs),
            max_attempts: Some(pow_attempts),
        };
        match produce_block(&mut self.view.chain, &mut self.view.layer, &self.params, &self.ident, tpl) {
            Ok(_) => {}
            Err(ProduceError::NotLeader(..) | ProduceError::PowExhausted | ProduceError::StaleSlot(_)) => return None,
        }
        self.prune_mempool();
        let honest = Arc::new(self.view.clone());
        let out = match self.strategy {
            Some(Strategy::TamperBody) => tamper_body(&self.view, rng),
            Some(Strategy::TamperRdb) => tamper_rdb(&self.view, rng),
            Some(Strategy::UnapprovedRepair) => {
                unapproved_repair(&self.view, &self.params).unwrap_or_else(|| tamper_body(&self.view, rng))
            }
            _ => return Some(honest),
        };
        Some(Arc::new(out))
    }

    fn produce_private(&mut self, slot: u64, max_txs: usize, pow_attempts: u64) -> Option<Arc<ChainView>> {
        let public = &self.view;
        let restart = match &self.private {
            None => true,
            Some(p) => public.chain.len() > p.chain.len() + 2,
        };
        if restart {
            self.private = Some(fork_point(public));
        }
        let private = self.private.as_mut().expect("set above");
        let tpl = BlockTemplate {
            slot,
            txs: Vec::new(),
            proposals: Vec::new(),
            votes: Vec::new(),
            max_txs: Some(max_txs),
            max_attempts: Some(pow_attempts),
        };
        produce_block(&mut private.chain, &mut private.layer, &self.params, &self.ident, tpl).ok()?;
        if private.chain.len() > self.view.chain.len() {
            let released = self.private.take().expect("present");
            self.view = released.clone();
            self.prune_mempool();
            return Some(Arc::new(released));
        }
        None
    }
}

/// Two blocks behind the head, unless that would cut off logged repairs.
fn fork_point(v: &ChainView) -> ChainView {
    let len = v.chain.len();
    let back = 2.min(len - 1);
    let keep = len - back;
    if v.layer.adb[keep..].iter().any(|a| !a.is_empty()) {
        return v.clone();
    }
    let mut layer = v.layer.clone();
    layer.truncate(keep);
    ChainView {
        chain: v.chain.prune_close(keep),
        layer,
    }
}

fn pick_height(v: &ChainView, rng: &mut ChaCha8Rng) -> usize {
    rng.gen_range(1..v.chain.len())
}

fn alter_state(state: &mut crate::types::AccountState) {
    if let Some(acc) = state.accounts.values_mut().next() {
        acc.bal ^= 1;
    }
}

/// Alters one block body (a payload byte or, for empty bodies, a balance).
pub(crate) fn tamper_body(v: &ChainView, rng: &mut ChaCha8Rng) -> ChainView {
    let mut out = v.clone();
    let h = pick_height(v, rng);
    let b = &mut out.chain.blocks[h];
    match b.txs.first_mut() {
        Some(TxEntry::Full(tx)) => tx.data.push(0x5a),
        Some(TxEntry::Redacted(r)) => r.value ^= 1,
        None => alter_state(&mut b.state),
    }
    out
}

/// Forges an Rdb entry for one block.
pub(crate) fn tamper_rdb(v: &ChainView, rng: &mut ChaCha8Rng) -> ChainView {
    let mut out = v.clone();
    let h = pick_height(v, rng);
    let block = &out.chain.blocks[h];
    let entry = out.layer.rdb[h].get_or_insert_with(|| RdbEntry {
        original_txs: block.txs.clone(),
        original_state: block.state.clone(),
    });
    match entry.original_txs.first_mut() {
        Some(TxEntry::Full(tx)) => tx.data.push(0xa5),
        _ => alter_state(&mut entry.original_state),
    }
    out
}

/// Redacts the first redactable transaction of a stable block without any
/// vote and logs the repair as if approved at the head.
pub(crate) fn unapproved_repair(v: &ChainView, params: &ChainParams) -> Option<ChainView> {
    let c = &v.chain;
    let tip = c.tip();
    let k = params.stability_depth;
    for h in 1..=tip.saturating_sub(k) {
        let idx = c.blocks[h as usize].txs.iter().position(|e| match e {
            TxEntry::Full(tx) => !tx.data.is_empty() && special_call(&tx.to) == SpecialCall::Normal,
            TxEntry::Redacted(_) => false,
        });
        let Some(i) = idx else { continue };
        let new_txs = retain_and_redact(&c.blocks[h as usize].txs, &BTreeSet::from([i])).ok()?;
        let rp = propose_repair(c, h, new_txs, params).ok()?;
        if v.layer.is_applied(&rp.id) {
            continue;
        }
        let mut out = v.clone();
        apply_repair(&mut out.chain, &mut out.layer, &rp, params).ok()?;
        let adb = &mut out.layer.adb[tip as usize];
        adb.push(AdbEntry {
            approval_height: tip,
            proposal: rp,
        });
        adb.sort_by_key(|e| e.proposal.id);
        return Some(out);
    }
    None
}
