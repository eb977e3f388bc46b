//! Binary Merkle commitments over transactions and account state.

use crate::hash::{sha256, sha256_concat, Digest, Encode};
use crate::types::{AccountState, TxEntry};

/// Binary Merkle root. An odd node at any level is paired with itself; the
/// empty tree commits to `H("")`.
pub fn merkle_root(leaves: &[Digest]) -> Digest {
    if leaves.is_empty() {
        return sha256(b"");
    }
    let mut level: Vec<Digest> = leaves.to_vec();
    while level.len() > 1 {
        level = level
            .chunks(2)
            .map(|pair| {
                let right = pair.get(1).unwrap_or(&pair[0]);
                sha256_concat(&[&pair[0].0, &right.0])
            })
            .collect();
    }
    level[0]
}

pub fn tx_root(txs: &[TxEntry]) -> Digest {
    let leaves: Vec<Digest> = txs.iter().map(TxEntry::leaf).collect();
    merkle_root(&leaves)
}

/// Root over `H(encode(account))` in ascending address order.
pub fn state_root(st: &AccountState) -> Digest {
    let leaves: Vec<Digest> = st.accounts.values().map(|a| a.digest()).collect();
    merkle_root(&leaves)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hash::Address;
    use crate::keys::Identity;
    use crate::types::{Account, Transaction};

    fn h2(a: &Digest, b: &Digest) -> Digest {
        let mut buf = a.0.to_vec();
        buf.extend_from_slice(&b.0);
        sha256(&buf)
    }

    fn tx(n: u64) -> Transaction {
        Transaction::signed(&Identity::derive("m", n), Address::special(9), n, 0, vec![n as u8])
    }

    #[test]
    fn empty_roots() {
        assert_eq!(tx_root(&[]), sha256(b""));
        assert_eq!(state_root(&AccountState::new()), sha256(b""));
    }

    #[test]
    fn stub_substitutes_leaf() {
        let t = tx(1);
        let full = vec![TxEntry::Full(t.clone())];
        let stub = vec![TxEntry::Redacted(t.redacted())];
        assert_eq!(tx_root(&full), tx_root(&stub));
        assert_eq!(tx_root(&full), t.hash());
    }

    #[test]
    fn three_leaf_manual() {
        let ts: Vec<TxEntry> = (0..3).map(|n| TxEntry::Full(tx(n))).collect();
        let l: Vec<Digest> = ts.iter().map(|e| e.as_full().unwrap().digest()).collect();
        let expected = h2(&h2(&l[0], &l[1]), &h2(&l[2], &l[2]));
        assert_eq!(tx_root(&ts), expected);
    }

    #[test]
    fn two_account_manual_and_order_independent() {
        let a = Account::external(Address::special(1), 10);
        let b = Account::external(Address::special(2), 20);
        let s1: AccountState = [a.clone(), b.clone()].into_iter().collect();
        let s2: AccountState = [b.clone(), a.clone()].into_iter().collect();
        assert_eq!(state_root(&s1), state_root(&s2));
        assert_eq!(state_root(&s1), h2(&a.digest(), &b.digest()));
    }
}
