//! Block sealing and verification: hash-target proof of work and a
//! stake-weighted slot lottery with epoch-frozen stake snapshots.

use serde::{Deserialize, Serialize};

use crate::hash::{sha256_concat, Digest, Encoder};
use crate::keys::{Identity, KeyRegistry};
use crate::types::{AccountState, Chain, ConsensusData, Header};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ConsensusParams {
    Pow { difficulty: u64 },
    Pos { f: f64, epoch_len: u64 },
}

impl ConsensusParams {
    pub fn validate(&self) -> Result<(), String> {
        match *self {
            ConsensusParams::Pow { difficulty } if difficulty == 0 => Err("difficulty must be >= 1".into()),
            ConsensusParams::Pos { f, .. } if !(f > 0.0 && f <= 1.0) => Err(format!("f must be in (0,1], got {f}")),
            ConsensusParams::Pos { epoch_len, .. } if epoch_len == 0 => Err("epoch_len must be >= 1".into()),
            _ => Ok(()),
        }
    }
}

// ---------------------------------------------------------------------------
// Proof of work

/// `hash(h) < 2^256 / d`, evaluated exactly as `hash * d < 2^256`.
pub fn chk_pow(h: &Header) -> bool {
    let ConsensusData::Pow { difficulty, .. } = h.consensus else {
        return false;
    };
    below_target(&h.hash(), difficulty)
}

pub(crate) fn below_target(hash: &Digest, difficulty: u64) -> bool {
    if difficulty == 0 {
        return false;
    }
    let mut carry: u128 = 0;
    for limb in hash.0.chunks(8).rev() {
        let v = u64::from_be_bytes(limb.try_into().expect("8-byte limb")) as u128;
        carry = (v * difficulty as u128 + carry) >> 64;
    }
    carry == 0
}

/// Tries `ctr = 0, 1, …` until the header meets its target. Returns `None`
/// after `max_attempts` failures.
pub fn pow_seal(h: &Header, max_attempts: u64) -> Option<Header> {
    let ConsensusData::Pow { difficulty, miner, .. } = h.consensus else {
        return None;
    };
    let mut cand = h.clone();
    for ctr in 0..max_attempts {
        cand.consensus = ConsensusData::Pow {
            difficulty,
            ctr,
            miner,
        };
        if chk_pow(&cand) {
            return Some(cand);
        }
    }
    None
}

// ---------------------------------------------------------------------------
// Proof of stake

pub fn epoch_of(slot: u64, epoch_len: u64) -> u64 {
    slot / epoch_len
}

/// Inclusive slot range of epoch `e`.
pub fn epoch_window(e: u64, epoch_len: u64) -> (u64, u64) {
    (e * epoch_len, (e + 1) * epoch_len - 1)
}

/// `φ_f = 1 − (1 − f)^(bal/total)`.
pub fn win_probability(bal: u64, total: u64, f: f64) -> f64 {
    if bal == 0 || total == 0 {
        return 0.0;
    }
    let alpha = bal as f64 / total as f64;
    -(alpha * (-f).ln_1p()).exp_m1()
}

/// Maps `H(seed || address)` to `[0, 1)` via its top 64 bits.
pub fn lottery_draw(seed: &Digest, address: &crate::hash::Address) -> f64 {
    let d = sha256_concat(&[&seed.0, &address.0]);
    d.top_u64() as f64 / 18_446_744_073_709_551_616.0
}

pub fn slot_lottery(acc: &crate::types::Account, total_stake: u64, f: f64, seed: &Digest) -> bool {
    lottery_draw(seed, &acc.address) < win_probability(acc.bal, total_stake, f)
}

/// Index of the last block whose slot is `< slot`, if any.
fn last_block_before(c: &Chain, slot: u64) -> Option<usize> {
    let idx = c.blocks.partition_point(|b| b.header.slot < slot);
    idx.checked_sub(1)
}

/// Stake distribution frozen for `epoch`: the state at the last block of
/// the previous epoch (genesis state for epoch 0).
pub fn stake_snapshot(c: &Chain, epoch: u64, epoch_len: u64) -> &AccountState {
    let idx = last_block_before(c, epoch * epoch_len).unwrap_or(0);
    &c.blocks[idx].state
}

/// Per-slot lottery seed: `H(H(epoch || digest of the last block of epoch e−2) || slot)`.
pub fn slot_seed(c: &Chain, slot: u64, epoch_len: u64) -> Digest {
    let e = epoch_of(slot, epoch_len);
    let anchor = if e >= 2 {
        last_block_before(c, (e - 1) * epoch_len).unwrap_or(0)
    } else {
        0
    };
    let anchor_digest = c.blocks[anchor].hash();
    let epoch_nonce = sha256_concat(&[&e.to_be_bytes(), &anchor_digest.0]);
    sha256_concat(&[&epoch_nonce.0, &slot.to_be_bytes()])
}

/// Whether `address` is a slot leader at `slot` on top of prefix `c`.
pub fn is_leader(c: &Chain, address: &crate::hash::Address, slot: u64, f: f64, epoch_len: u64) -> bool {
    if c.is_empty() {
        return false;
    }
    let snap = stake_snapshot(c, epoch_of(slot, epoch_len), epoch_len);
    let total = snap.total_supply().min(u64::MAX as u128) as u64;
    match snap.get(address) {
        Some(acc) => slot_lottery(acc, total, f, &slot_seed(c, slot, epoch_len)),
        None => false,
    }
}

/// Payload a stake proof commits to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ProofPayload {
    pub parent: Digest,
    pub tx_root: Digest,
    pub state_root: Digest,
}

impl ProofPayload {
    pub fn of(h: &Header) -> Self {
        ProofPayload {
            parent: h.parent,
            tx_root: h.tx_root,
            state_root: h.state_root,
        }
    }

    fn bytes(&self, slot: u64) -> Vec<u8> {
        let mut enc = Encoder::new();
        enc.digest(&self.parent)
            .digest(&self.tx_root)
            .digest(&self.state_root)
            .u64(slot);
        enc.finish()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{0} did not win the lottery for slot {1}")]
pub struct NotLeader(pub crate::hash::Address, pub u64);

/// Produces σ for a block at `slot` extending `c`; refuses non-winners.
pub fn prf_pos(
    c: &Chain,
    who: &Identity,
    payload: ProofPayload,
    slot: u64,
    f: f64,
    epoch_len: u64,
) -> Result<Digest, NotLeader> {
    if !is_leader(c, &who.address, slot, f, epoch_len) {
        return Err(NotLeader(who.address, slot));
    }
    Ok(who.key.tag(&payload.bytes(slot)))
}

/// Verifies the leader's eligibility under the frozen snapshot and σ.
pub fn vfy_pos(c: &Chain, h: &Header, f: f64, epoch_len: u64, registry: &KeyRegistry) -> bool {
    let ConsensusData::Pos { proof, leader } = &h.consensus else {
        return false;
    };
    is_leader(c, leader, h.slot, f, epoch_len)
        && registry.verify(leader, &ProofPayload::of(h).bytes(h.slot), proof)
}
