//! A single ledger driven by a fixed set of producer identities and client
//! accounts. Used by the examples, the CLI demo chains and the tests.

use crate::builder::{genesis_block, BlockTemplate, Ledger, LedgerError};
use crate::consensus::{is_leader, ConsensusParams};
use crate::hash::{Address, Digest};
use crate::keys::{Identity, KeyRegistry};
use crate::params::ChainParams;
use crate::reparo::{build_repair_tx, AdbEntry, Policy, RepairProposal};
use crate::types::{Block, Transaction, TxEntry};

#[derive(Clone, Debug)]
pub struct Testbed {
    pub ledger: Ledger,
    pub producers: Vec<Identity>,
    pub clients: Vec<Identity>,
    /// Next slot to try.
    pub slot: u64,
    turn: usize,
}

/// Starting balance of every producer and client.
pub const INITIAL_BALANCE: u64 = 1_000_000;

impl Testbed {
    pub fn new(consensus: ConsensusParams, policy: Policy, k: u64, producers: usize, clients: usize) -> Self {
        let producers: Vec<Identity> = (0..producers as u64).map(|i| Identity::derive("producer", i)).collect();
        let clients: Vec<Identity> = (0..clients as u64).map(|i| Identity::derive("client", i)).collect();
        let registry: KeyRegistry = producers.iter().chain(&clients).copied().collect();
        let params = ChainParams::new(consensus, policy, registry).with_stability_depth(k);
        let alloc = producers.iter().chain(&clients).map(|id| (id.address, INITIAL_BALANCE));
        let genesis = genesis_block(&params, alloc);
        Testbed {
            ledger: Ledger::new(params, genesis),
            producers,
            clients,
            slot: 1,
            turn: 0,
        }
    }

    /// Proof of work at difficulty 1 (every header seals at `ctr = 0`).
    pub fn pow(k: u64, window: u64, producers: usize, clients: usize) -> Self {
        let policy = Policy {
            window,
            ..Policy::default()
        };
        Self::new(ConsensusParams::Pow { difficulty: 1 }, policy, k, producers, clients)
    }

    pub fn pos(k: u64, epoch_len: u64, f: f64, producers: usize, clients: usize) -> Self {
        let policy = Policy {
            window: epoch_len,
            ..Policy::default()
        };
        Self::new(ConsensusParams::Pos { f, epoch_len }, policy, k, producers, clients)
    }

    pub fn params(&self) -> &ChainParams {
        &self.ledger.params
    }

    /// A signed transaction from client `i` at its next nonce, counting
    /// `pending` transactions not yet on chain.
    pub fn client_tx(&self, i: usize, to: Address, value: u64, data: Vec<u8>, pending: u64) -> TxEntry {
        let c = &self.clients[i];
        Transaction::signed(c, to, value, self.ledger.nonce(&c.address) + pending, data).into()
    }

    /// Next producer: round robin under PoW, the first slot leader under PoS
    /// (advancing the slot until one wins).
    fn next_producer(&mut self) -> Identity {
        match self.ledger.params.consensus {
            ConsensusParams::Pow { .. } => {
                let p = self.producers[self.turn % self.producers.len()];
                self.turn += 1;
                p
            }
            ConsensusParams::Pos { f, epoch_len } => loop {
                let chain = &self.ledger.chain;
                let slot = self.slot;
                if let Some(p) = self.producers.iter().find(|p| is_leader(chain, &p.address, slot, f, epoch_len)) {
                    return *p;
                }
                self.slot += 1;
            },
        }
    }

    /// Produces one block carrying `txs`, applying any of `proposals` that
    /// are approved and voting for `votes`.
    pub fn mine(
        &mut self,
        txs: Vec<TxEntry>,
        proposals: &[&RepairProposal],
        votes: &[Digest],
    ) -> Result<(Block, Vec<AdbEntry>), LedgerError> {
        let who = self.next_producer();
        let tpl = BlockTemplate {
            slot: self.slot,
            txs,
            proposals: proposals.to_vec(),
            votes: votes.to_vec(),
            max_txs: None,
            max_attempts: None,
        };
        let out = self.ledger.produce(&who, tpl)?;
        self.slot += 1;
        Ok(out)
    }

    pub fn mine_empty(&mut self, n: usize) {
        for _ in 0..n {
            self.mine(Vec::new(), &[], &[]).expect("empty block");
        }
    }

    /// Submits the repair request for `rp` from client 0 and mines blocks,
    /// every producer voting, until the repair is applied. Returns the
    /// height that logged it, or `None` after `max_blocks`.
    pub fn push_repair(&mut self, rp: &RepairProposal, max_blocks: usize) -> Option<u64> {
        let c = self.clients[0];
        let req = build_repair_tx(&c, self.ledger.nonce(&c.address), rp);
        self.mine(vec![req.into()], &[], &[]).ok()?;
        for _ in 0..max_blocks {
            self.mine(Vec::new(), &[rp], &[rp.id]).ok()?;
            if self.ledger.layer.is_applied(&rp.id) {
                return Some(self.ledger.tip());
            }
        }
        None
    }
}
