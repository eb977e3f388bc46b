//! The global state transition δ and transaction validation.

pub mod vm;

use crate::hash::{sha256_concat, Address};
use crate::keys::KeyRegistry;
use crate::types::{AccountState, Transaction, TxEntry, REQ_ADDR, VOTE_ADDR};

/// Flat fee per applied transaction, credited to the block producer.
pub const FEE: u64 = 1;
pub const REPAIR_TX_DATA_LEN: usize = 64;
pub const VOTE_TX_DATA_LEN: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpecialCall {
    RepairCall,
    VoteCall,
    Normal,
}

pub fn special_call(to: &Address) -> SpecialCall {
    if *to == REQ_ADDR {
        SpecialCall::RepairCall
    } else if *to == VOTE_ADDR {
        SpecialCall::VoteCall
    } else {
        SpecialCall::Normal
    }
}

pub fn is_special_call(tx: &Transaction) -> SpecialCall {
    special_call(&tx.to)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reason {
    Ok,
    BadAuth,
    BadNonce,
    InsufficientBalance,
    ContractAbort,
    SpecialCall,
    /// A repair or vote call whose data has the wrong length.
    BadFormat,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TxOutcome {
    pub applied: bool,
    pub reason: Reason,
}

impl TxOutcome {
    fn of(reason: Reason) -> Self {
        TxOutcome {
            applied: matches!(reason, Reason::Ok | Reason::SpecialCall),
            reason,
        }
    }
}

/// Address of a contract created by `from` at `nonce`.
pub fn contract_address(from: &Address, nonce: u64) -> Address {
    Address::from_digest(&sha256_concat(&[&from.0, &nonce.to_be_bytes()]))
}

pub fn is_contract_creation(from: &Address, to: &Address, nonce: u64) -> bool {
    contract_address(from, nonce) == *to
}

/// Checks the special-call data format only.
pub fn special_format_ok(tx: &Transaction) -> bool {
    match is_special_call(tx) {
        SpecialCall::RepairCall => tx.data.len() == REPAIR_TX_DATA_LEN,
        SpecialCall::VoteCall => tx.data.len() == VOTE_TX_DATA_LEN,
        SpecialCall::Normal => true,
    }
}

pub fn validate_tx(st: &AccountState, tx: &Transaction, registry: &KeyRegistry) -> TxOutcome {
    if !registry.verify(&tx.from, &tx.payload(), &tx.auth) {
        return TxOutcome::of(Reason::BadAuth);
    }
    if !special_format_ok(tx) {
        return TxOutcome::of(Reason::BadFormat);
    }
    match check_funds(st, &tx.from, tx.nonce, tx.value) {
        Reason::Ok if is_special_call(tx) != SpecialCall::Normal => TxOutcome::of(Reason::SpecialCall),
        r => TxOutcome::of(r),
    }
}

fn check_funds(st: &AccountState, from: &Address, nonce: u64, value: u64) -> Reason {
    let Some(acc) = st.get(from) else {
        return Reason::InsufficientBalance;
    };
    if acc.nonce != nonce {
        return Reason::BadNonce;
    }
    match value.checked_add(FEE) {
        Some(cost) if acc.bal >= cost => Reason::Ok,
        _ => Reason::InsufficientBalance,
    }
}

/// Applies one entry in place, returning its outcome. Invalid entries leave
/// `st` untouched. Redacted stubs replay their retained payment fields; their
/// authentication was checked when the full transaction was first applied.
pub fn apply_entry(
    st: &mut AccountState,
    entry: &TxEntry,
    producer: &Address,
    registry: &KeyRegistry,
) -> TxOutcome {
    let outcome = match entry {
        TxEntry::Full(tx) => validate_tx(st, tx, registry),
        TxEntry::Redacted(r) => TxOutcome::of(check_funds(st, &r.from, r.nonce, r.value)),
    };
    if !outcome.applied {
        return outcome;
    }
    let (from, to, value, nonce) = (entry.from(), entry.to(), entry.value(), entry.nonce());
    let creates = match entry {
        TxEntry::Full(tx) if is_contract_creation(&from, &to, nonce) => vm::decode_code(&tx.data)
            .filter(|_| st.get(&to).is_none_or(|a| a.code.is_empty())),
        _ => None,
    };
    let runs_code = creates.is_none() && st.get(&to).is_some_and(|a| a.is_contract());
    let snapshot = runs_code.then(|| st.clone());

    {
        let sender = st.entry(from);
        sender.bal -= value + FEE;
        sender.nonce += 1;
    }
    st.entry(*producer).bal += FEE;
    st.entry(to).bal += value;
    if let Some(code) = creates {
        st.entry(to).code = code;
    }
    if runs_code && !vm::run(st, to, from) {
        *st = snapshot.expect("snapshot taken for contract calls");
        return TxOutcome::of(Reason::ContractAbort);
    }
    outcome
}

/// δ: folds `txs` over `st` left to right, skipping invalid entries.
pub fn apply_transactions(
    st: &AccountState,
    txs: &[TxEntry],
    producer: &Address,
    registry: &KeyRegistry,
) -> AccountState {
    let mut next = st.clone();
    for entry in txs {
        apply_entry(&mut next, entry, producer, registry);
    }
    next
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::keys::Identity;
    use crate::state::vm::{encode_code, Amount, Instruction};
    use crate::types::Account;

    struct World {
        a: Identity,
        b: Identity,
        producer: Address,
        reg: KeyRegistry,
        st: AccountState,
    }

    fn world() -> World {
        let a = Identity::derive("a", 0);
        let b = Identity::derive("b", 0);
        let reg: KeyRegistry = [a, b].into_iter().collect();
        let st: AccountState = [Account::external(a.address, 10), Account::external(b.address, 0)]
            .into_iter()
            .collect();
        World {
            a,
            b,
            producer: Address::special(0x77),
            reg,
            st,
        }
    }

    #[test]
    fn transfer_arithmetic() {
        let w = world();
        let tx = Transaction::signed(&w.a, w.b.address, 5, 0, vec![]);
        assert_eq!(validate_tx(&w.st, &tx, &w.reg).reason, Reason::Ok);
        let next = apply_transactions(&w.st, &[tx.into()], &w.producer, &w.reg);
        assert_eq!(next.balance(&w.a.address), 4);
        assert_eq!(next.balance(&w.b.address), 5);
        assert_eq!(next.balance(&w.producer), 1);
        assert_eq!(next.nonce(&w.a.address), 1);
        assert_eq!(next.total_supply(), w.st.total_supply());
    }

    #[test]
    fn empty_block_is_identity() {
        let w = world();
        assert_eq!(apply_transactions(&w.st, &[], &w.producer, &w.reg), w.st);
    }

    #[test]
    fn rejections() {
        let w = world();
        let too_much = Transaction::signed(&w.a, w.b.address, 10, 0, vec![]);
        assert_eq!(validate_tx(&w.st, &too_much, &w.reg).reason, Reason::InsufficientBalance);
        let bad_nonce = Transaction::signed(&w.a, w.b.address, 1, 3, vec![]);
        assert_eq!(validate_tx(&w.st, &bad_nonce, &w.reg).reason, Reason::BadNonce);
        let mut forged = Transaction::signed(&w.a, w.b.address, 1, 0, vec![]);
        forged.value = 2;
        assert_eq!(validate_tx(&w.st, &forged, &w.reg).reason, Reason::BadAuth);
        let short_repair = Transaction::signed(&w.a, REQ_ADDR, 0, 0, vec![0; 63]);
        let out = validate_tx(&w.st, &short_repair, &w.reg);
        assert!(!out.applied);
        assert_eq!(out.reason, Reason::BadFormat);
        let vote = Transaction::signed(&w.a, VOTE_ADDR, 0, 0, vec![0; 32]);
        assert_eq!(validate_tx(&w.st, &vote, &w.reg), TxOutcome::of(Reason::SpecialCall));
        assert!(validate_tx(&w.st, &vote, &w.reg).applied);
    }

    #[test]
    fn special_call_classification() {
        assert_eq!(special_call(&Address::special(0x13)), SpecialCall::RepairCall);
        assert_eq!(special_call(&Address::special(0x14)), SpecialCall::VoteCall);
        assert_eq!(special_call(&Address::special(0x15)), SpecialCall::Normal);
    }

    #[test]
    fn creation_installs_code_and_abort_rolls_back() {
        let w = world();
        let escrow = contract_address(&w.a.address, 0);
        let code = vec![
            Instruction::RequireSender {
                addr: Address::special(0xee),
            },
            Instruction::Pay {
                to: w.a.address,
                amount: Amount::FullBalance,
            },
        ];
        let create = Transaction::signed(&w.a, escrow, 5, 0, encode_code(&code));
        let st1 = apply_transactions(&w.st, &[create.into()], &w.producer, &w.reg);
        assert_eq!(st1.get(&escrow).unwrap().code, code);
        assert_eq!(st1.balance(&escrow), 5);
        let withdraw = Transaction::signed(&w.a, escrow, 0, 1, vec![]);
        let mut st2 = st1.clone();
        let out = apply_entry(&mut st2, &withdraw.into(), &w.producer, &w.reg);
        assert_eq!(out.reason, Reason::ContractAbort);
        assert_eq!(st2.root(), st1.root());
    }

    #[test]
    fn stub_replays_payment() {
        let w = world();
        let tx = Transaction::signed(&w.a, w.b.address, 2, 0, b"note".to_vec());
        let full = apply_transactions(&w.st, &[tx.clone().into()], &w.producer, &w.reg);
        let stub = apply_transactions(&w.st, &[TxEntry::Redacted(tx.redacted())], &w.producer, &w.reg);
        assert_eq!(full, stub);
    }
}
