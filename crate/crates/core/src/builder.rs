//! Genesis construction, block production and a single-writer [`Ledger`].

use crate::consensus::{is_leader, pow_seal, prf_pos, ConsensusParams, ProofPayload};
use crate::hash::{Address, Digest, Encode};
use crate::keys::Identity;
use crate::merkle::tx_root;
use crate::params::ChainParams;
use crate::reparo::{
    append_block, apply_repair, build_vote_tx, chk_approval, normalize_for_apply, settle_entries, AdbEntry,
    ApprovalStatus, BlockError, RepairLayer, RepairProposal,
};
use crate::state::apply_entry;
use crate::types::{Account, AccountState, Block, Chain, ConsensusData, Header, TxEntry};

/// Default bound on PoW sealing attempts per block.
pub const DEFAULT_MAX_ATTEMPTS: u64 = 1 << 32;

pub fn genesis_block(params: &ChainParams, allocations: impl IntoIterator<Item = (Address, u64)>) -> Block {
    let state: AccountState = allocations
        .into_iter()
        .map(|(a, bal)| Account::external(a, bal))
        .collect();
    let consensus = match params.consensus {
        ConsensusParams::Pow { difficulty } => ConsensusData::Pow {
            difficulty,
            ctr: 0,
            miner: Address::ZERO,
        },
        ConsensusParams::Pos { .. } => ConsensusData::Pos {
            proof: Digest::ZERO,
            leader: Address::ZERO,
        },
    };
    Block {
        header: Header {
            parent: params.digest(),
            tx_root: tx_root(&[]),
            state_root: state.root(),
            slot: 0,
            consensus,
        },
        txs: Vec::new(),
        state,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProduceError {
    #[error("{0} is not a slot leader for slot {1}")]
    NotLeader(Address, u64),
    #[error("slot {0} does not follow the head")]
    StaleSlot(u64),
    #[error("no proof of work found within the attempt budget")]
    PowExhausted,
}

/// Inputs for one block.
#[derive(Clone, Debug, Default)]
pub struct BlockTemplate<'a> {
    pub slot: u64,
    /// Candidate transactions, in order. Invalid ones are left out.
    pub txs: Vec<TxEntry>,
    /// Proposals to apply if approved with a stable decision.
    pub proposals: Vec<&'a RepairProposal>,
    /// Proposal ids to vote for; vote transactions are built here.
    pub votes: Vec<Digest>,
    pub max_txs: Option<usize>,
    /// PoW sealing budget; defaults to [`DEFAULT_MAX_ATTEMPTS`].
    pub max_attempts: Option<u64>,
}

/// Builds, repairs and seals the next block on `(c, layer)` and appends it.
/// Returns the block in its original form and its Adb entries. On error
/// `(c, layer)` is left unchanged.
pub fn produce_block(
    c: &mut Chain,
    layer: &mut RepairLayer,
    params: &ChainParams,
    who: &Identity,
    tpl: BlockTemplate<'_>,
) -> Result<(Block, Vec<AdbEntry>), ProduceError> {
    let head = c.head().expect("chain has a genesis block");
    if tpl.slot <= head.header.slot {
        return Err(ProduceError::StaleSlot(tpl.slot));
    }
    if let ConsensusParams::Pos { f, epoch_len } = params.consensus {
        if !is_leader(c, &who.address, tpl.slot, f, epoch_len) {
            return Err(ProduceError::NotLeader(who.address, tpl.slot));
        }
    }
    let mut ready: Vec<&RepairProposal> = tpl
        .proposals
        .iter()
        .copied()
        .filter(|rp| {
            !layer.is_applied(&rp.id)
                && chk_approval(c, &rp.id, params).is_ok_and(|a| a.status == ApprovalStatus::Approve && a.stable)
        })
        .collect();
    ready.sort_by_key(|rp| rp.id);
    ready.dedup_by_key(|rp| rp.id);
    if ready.is_empty() {
        return build(c, layer, None, params, who, tpl, &[]);
    }
    let mut chain = c.clone();
    let mut lay = layer.clone();
    let out = build(&mut chain, &mut lay, Some(c), params, who, tpl, &ready)?;
    *c = chain;
    *layer = lay;
    Ok(out)
}

fn build(
    chain: &mut Chain,
    layer: &mut RepairLayer,
    pre: Option<&Chain>,
    params: &ChainParams,
    who: &Identity,
    tpl: BlockTemplate<'_>,
    ready: &[&RepairProposal],
) -> Result<(Block, Vec<AdbEntry>), ProduceError> {
    let n = chain.len() as u64;
    let parent = chain.head().expect("non-empty").hash();
    let mut adb = Vec::new();
    for rp in ready {
        let Ok(rp) = normalize_for_apply(chain, rp, params) else {
            continue;
        };
        apply_repair(chain, layer, &rp, params).expect("normalized proposal targets an existing block");
        adb.push(AdbEntry {
            approval_height: n,
            proposal: rp,
        });
    }
    settle_entries(&mut adb);

    let mut state = chain.head().expect("non-empty").state.clone();
    let limit = tpl.max_txs.unwrap_or(usize::MAX);
    let mut txs = Vec::new();
    for e in tpl.txs {
        if txs.len() >= limit {
            break;
        }
        if apply_entry(&mut state, &e, &who.address, &params.registry).applied {
            txs.push(e);
        }
    }
    for id in tpl.votes {
        let v: TxEntry = build_vote_tx(who, state.nonce(&who.address), &id).into();
        if apply_entry(&mut state, &v, &who.address, &params.registry).applied {
            txs.push(v);
        }
    }

    let mut header = Header {
        parent,
        tx_root: tx_root(&txs),
        state_root: state.root(),
        slot: tpl.slot,
        consensus: ConsensusData::Pos {
            proof: Digest::ZERO,
            leader: who.address,
        },
    };
    match params.consensus {
        ConsensusParams::Pow { difficulty } => {
            header.consensus = ConsensusData::Pow {
                difficulty,
                ctr: 0,
                miner: who.address,
            };
            let budget = tpl.max_attempts.unwrap_or(DEFAULT_MAX_ATTEMPTS);
            header = pow_seal(&header, budget).ok_or(ProduceError::PowExhausted)?;
        }
        ConsensusParams::Pos { f, epoch_len } => {
            let pre: &Chain = pre.unwrap_or(chain);
            let proof = prf_pos(pre, who, ProofPayload::of(&header), tpl.slot, f, epoch_len)
                .map_err(|e| ProduceError::NotLeader(e.0, e.1))?;
            header.consensus = ConsensusData::Pos {
                proof,
                leader: who.address,
            };
        }
    }
    let block = Block { header, txs, state };
    chain.blocks.push(block.clone());
    layer.push_empty();
    *layer.adb.last_mut().expect("just pushed") = adb.clone();
    Ok((block, adb))
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LedgerError {
    #[error(transparent)]
    Produce(#[from] ProduceError),
    #[error(transparent)]
    Block(#[from] BlockError),
}

/// A chain with its repair layer and parameters, extended one block at a
/// time.
#[derive(Clone, Debug)]
pub struct Ledger {
    pub params: ChainParams,
    pub chain: Chain,
    pub layer: RepairLayer,
}

impl Ledger {
    pub fn new(params: ChainParams, genesis: Block) -> Self {
        Ledger {
            params,
            chain: Chain::new(genesis),
            layer: RepairLayer::empty(1),
        }
    }

    pub fn tip(&self) -> u64 {
        self.chain.tip()
    }

    pub fn head(&self) -> &Block {
        self.chain.head().expect("ledger always holds genesis")
    }

    pub fn state(&self) -> &AccountState {
        &self.head().state
    }

    /// Next unused nonce of `a` at the head.
    pub fn nonce(&self, a: &Address) -> u64 {
        self.state().nonce(a)
    }

    /// Produces the next block. Returns it in its original form with its
    /// Adb entries.
    pub fn produce(&mut self, who: &Identity, tpl: BlockTemplate<'_>) -> Result<(Block, Vec<AdbEntry>), LedgerError> {
        Ok(produce_block(&mut self.chain, &mut self.layer, &self.params, who, tpl)?)
    }

    /// Validates an original-form block with its Adb entries and appends it.
    pub fn append(&mut self, b: Block, adb: Vec<AdbEntry>) -> Result<(), LedgerError> {
        Ok(append_block(&mut self.chain, &mut self.layer, &b, &adb, &self.params)?)
    }
}
