//! Blocks, transactions, accounts and chain-prefix operations.

use std::collections::BTreeMap;

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use crate::hash::{hex_bytes, Address, Digest, Encode, Encoder};
use crate::keys::Identity;
use crate::merkle;
use crate::state::vm::Instruction;

/// Reserved recipient of repair requests.
pub const REQ_ADDR: Address = Address::special(0x13);
/// Reserved recipient of votes.
pub const VOTE_ADDR: Address = Address::special(0x14);

/// Block height; genesis is 0.
pub type Height = u64;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Transaction {
    pub from: Address,
    pub to: Address,
    pub value: u64,
    pub nonce: u64,
    #[serde(with = "hex_bytes")]
    pub data: Vec<u8>,
    pub auth: Digest,
}

impl Transaction {
    /// Builds and authenticates a transaction with `sender`'s key.
    pub fn signed(sender: &Identity, to: Address, value: u64, nonce: u64, data: Vec<u8>) -> Self {
        let mut tx = Transaction {
            from: sender.address,
            to,
            value,
            nonce,
            data,
            auth: Digest::ZERO,
        };
        tx.auth = sender.key.tag(&tx.payload());
        tx
    }

    /// Canonical encoding of the authenticated fields (everything but `auth`).
    pub fn payload(&self) -> Vec<u8> {
        let mut enc = Encoder::new();
        self.payload_to(&mut enc);
        enc.finish()
    }

    fn payload_to(&self, enc: &mut Encoder) {
        enc.address(&self.from)
            .address(&self.to)
            .u64(self.value)
            .u64(self.nonce)
            .bytes(&self.data);
    }

    /// `H(encode(tx))`, the Merkle leaf of this transaction.
    pub fn hash(&self) -> Digest {
        self.digest()
    }

    pub fn redacted(&self) -> RedactedTx {
        RedactedTx {
            digest: self.hash(),
            from: self.from,
            to: self.to,
            value: self.value,
            nonce: self.nonce,
        }
    }
}

impl Encode for Transaction {
    fn encode_to(&self, enc: &mut Encoder) {
        self.payload_to(enc);
        enc.digest(&self.auth);
    }
}

/// What remains of a transaction after its payload was redacted: the leaf
/// digest that keeps the Merkle root intact, and the payment fields that keep
/// the state transition replayable.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RedactedTx {
    pub digest: Digest,
    pub from: Address,
    pub to: Address,
    pub value: u64,
    pub nonce: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum TxEntry {
    Full(Transaction),
    Redacted(RedactedTx),
}

impl TxEntry {
    /// Merkle leaf: `H(encode(tx))` for a full entry, the stored digest for a stub.
    pub fn leaf(&self) -> Digest {
        match self {
            TxEntry::Full(tx) => tx.hash(),
            TxEntry::Redacted(r) => r.digest,
        }
    }

    pub fn as_full(&self) -> Option<&Transaction> {
        match self {
            TxEntry::Full(tx) => Some(tx),
            TxEntry::Redacted(_) => None,
        }
    }

    pub fn is_redacted(&self) -> bool {
        matches!(self, TxEntry::Redacted(_))
    }

    pub fn from(&self) -> Address {
        match self {
            TxEntry::Full(tx) => tx.from,
            TxEntry::Redacted(r) => r.from,
        }
    }

    pub fn to(&self) -> Address {
        match self {
            TxEntry::Full(tx) => tx.to,
            TxEntry::Redacted(r) => r.to,
        }
    }

    pub fn value(&self) -> u64 {
        match self {
            TxEntry::Full(tx) => tx.value,
            TxEntry::Redacted(r) => r.value,
        }
    }

    pub fn nonce(&self) -> u64 {
        match self {
            TxEntry::Full(tx) => tx.nonce,
            TxEntry::Redacted(r) => r.nonce,
        }
    }
}

impl From<Transaction> for TxEntry {
    fn from(tx: Transaction) -> Self {
        TxEntry::Full(tx)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Account {
    pub address: Address,
    pub bal: u64,
    pub nonce: u64,
    #[serde(default)]
    pub code: Vec<Instruction>,
    #[serde(default)]
    pub storage: BTreeMap<Digest, Digest>,
}

impl Account {
    pub fn external(address: Address, bal: u64) -> Self {
        Account {
            address,
            bal,
            nonce: 0,
            code: Vec::new(),
            storage: BTreeMap::new(),
        }
    }

    pub fn is_contract(&self) -> bool {
        !self.code.is_empty()
    }
}

impl Encode for Account {
    fn encode_to(&self, enc: &mut Encoder) {
        enc.address(&self.address).u64(self.bal).u64(self.nonce);
        enc.u64(self.code.len() as u64);
        for ins in &self.code {
            ins.encode_to(enc);
        }
        enc.u64(self.storage.len() as u64);
        for (k, v) in &self.storage {
            enc.digest(k).digest(v);
        }
    }
}

/// Accounts keyed (and therefore ordered) by address.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct AccountState {
    pub accounts: BTreeMap<Address, Account>,
}

impl AccountState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, a: &Address) -> Option<&Account> {
        self.accounts.get(a)
    }

    pub fn balance(&self, a: &Address) -> u64 {
        self.accounts.get(a).map_or(0, |acc| acc.bal)
    }

    pub fn nonce(&self, a: &Address) -> u64 {
        self.accounts.get(a).map_or(0, |acc| acc.nonce)
    }

    /// Returns the account at `a`, creating an empty external one if absent.
    pub fn entry(&mut self, a: Address) -> &mut Account {
        self.accounts
            .entry(a)
            .or_insert_with(|| Account::external(a, 0))
    }

    pub fn insert(&mut self, acc: Account) {
        self.accounts.insert(acc.address, acc);
    }

    pub fn total_supply(&self) -> u128 {
        self.accounts.values().map(|a| a.bal as u128).sum()
    }

    pub fn root(&self) -> Digest {
        merkle::state_root(self)
    }
}

impl FromIterator<Account> for AccountState {
    fn from_iter<I: IntoIterator<Item = Account>>(iter: I) -> Self {
        let mut st = AccountState::new();
        for acc in iter {
            st.insert(acc);
        }
        st
    }
}

impl Serialize for AccountState {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.accounts.values())
    }
}

impl<'de> Deserialize<'de> for AccountState {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let list = Vec::<Account>::deserialize(d)?;
        let mut accounts = BTreeMap::new();
        let mut last: Option<Address> = None;
        for acc in list {
            if last.is_some_and(|prev| prev >= acc.address) {
                return Err(de::Error::custom("accounts must be in strictly ascending address order"));
            }
            last = Some(acc.address);
            accounts.insert(acc.address, acc);
        }
        Ok(AccountState { accounts })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ConsensusData {
    Pow {
        difficulty: u64,
        ctr: u64,
        miner: Address,
    },
    Pos {
        proof: Digest,
        leader: Address,
    },
}

impl ConsensusData {
    /// The account credited with fees for this block.
    pub fn producer(&self) -> Address {
        match self {
            ConsensusData::Pow { miner, .. } => *miner,
            ConsensusData::Pos { leader, .. } => *leader,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Header {
    pub parent: Digest,
    pub tx_root: Digest,
    pub state_root: Digest,
    pub slot: u64,
    pub consensus: ConsensusData,
}

impl Header {
    pub fn hash(&self) -> Digest {
        self.digest()
    }

    pub fn producer(&self) -> Address {
        self.consensus.producer()
    }
}

impl Encode for Header {
    fn encode_to(&self, enc: &mut Encoder) {
        enc.digest(&self.parent)
            .digest(&self.tx_root)
            .digest(&self.state_root)
            .u64(self.slot);
        match &self.consensus {
            ConsensusData::Pow {
                difficulty,
                ctr,
                miner,
            } => {
                enc.u8(0).u64(*difficulty).u64(*ctr).address(miner);
            }
            ConsensusData::Pos { proof, leader } => {
                enc.u8(1).digest(proof).address(leader);
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    pub header: Header,
    pub txs: Vec<TxEntry>,
    pub state: AccountState,
}

impl Block {
    pub fn hash(&self) -> Digest {
        self.header.hash()
    }

    /// True iff the body matches the header commitments.
    pub fn commitments_match(&self) -> bool {
        merkle::tx_root(&self.txs) == self.header.tx_root && self.state.root() == self.header.state_root
    }
}

/// An ordered list of blocks; `blocks[0]` is genesis.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Chain {
    pub blocks: Vec<Block>,
}

impl Chain {
    pub fn new(genesis: Block) -> Self {
        Chain {
            blocks: vec![genesis],
        }
    }

    pub fn empty() -> Self {
        Chain { blocks: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn head(&self) -> Option<&Block> {
        self.blocks.last()
    }

    /// Height of the head block.
    pub fn tip(&self) -> Height {
        self.blocks.len().saturating_sub(1) as Height
    }

    pub fn get(&self, h: Height) -> Option<&Block> {
        self.blocks.get(h as usize)
    }

    /// Drops the `q` rightmost blocks.
    pub fn prune(&self, q: usize) -> Chain {
        let keep = self.blocks.len().saturating_sub(q);
        Chain {
            blocks: self.blocks[..keep].to_vec(),
        }
    }

    /// Keeps the first `q` blocks.
    pub fn prune_close(&self, q: usize) -> Chain {
        let keep = q.min(self.blocks.len());
        Chain {
            blocks: self.blocks[..keep].to_vec(),
        }
    }

    /// Drops the `q` leftmost blocks.
    pub fn prune_back(&self, q: usize) -> Chain {
        let skip = q.min(self.blocks.len());
        Chain {
            blocks: self.blocks[skip..].to_vec(),
        }
    }

    /// `self ≺ other`: every block of `self` equals the block at the same
    /// position in `other`.
    pub fn is_prefix_of(&self, other: &Chain) -> bool {
        self.blocks.len() <= other.blocks.len()
            && self.blocks.iter().zip(&other.blocks).all(|(a, b)| a == b)
    }

    pub fn concat(mut self, other: Chain) -> Chain {
        self.blocks.extend(other.blocks);
        self
    }

    /// Number of blocks after the block at height `h`.
    pub fn depth_of(&self, h: Height) -> u64 {
        self.tip().saturating_sub(h)
    }
}
