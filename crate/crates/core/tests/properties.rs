use std::collections::BTreeSet;

use proptest::prelude::*;
use reparo::codec::{decode_chain, encode_chain};
use reparo::merkle::{merkle_root, tx_root};
use reparo::reparo::{propose_repair, retain_and_redact, validate_chain_detailed, validate_proposal, Policy};
use reparo::hash::sha256;
use reparo::testbed::Testbed;
use reparo::types::TxEntry;

type Plan = Vec<Vec<(usize, usize, u64, usize)>>;

fn blocks() -> impl Strategy<Value = Plan> {
    prop::collection::vec(prop::collection::vec((0..3usize, 0..3usize, 0..50u64, 0..6usize), 0..4), 1..8)
}

/// Mines one block per entry of `plan`; returns the testbed and the total
/// number of transactions offered.
fn build(plan: &Plan) -> (Testbed, usize) {
    let mut tb = Testbed::pow(2, 4, 2, 3);
    let mut offered = 0;
    for txs in plan {
        let mut pending = [0u64; 3];
        let body: Vec<TxEntry> = txs
            .iter()
            .map(|&(from, to, value, len)| {
                let data = (0..len as u8).collect();
                let to = tb.clients[to].address;
                let tx = tb.client_tx(from, to, value, data, pending[from]);
                pending[from] += 1;
                tx
            })
            .collect();
        offered += body.len();
        tb.mine(body, &[], &[]).unwrap();
    }
    tb.mine_empty(2);
    (tb, offered)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn export_round_trips(plan in blocks()) {
        let (tb, _) = build(&plan);
        let text = encode_chain(tb.params(), &tb.ledger.chain, &tb.ledger.layer);
        let back = decode_chain(&text).unwrap();
        prop_assert_eq!(&back.chain, &tb.ledger.chain);
        prop_assert_eq!(&back.layer, &tb.ledger.layer);
        prop_assert_eq!(&back.params, tb.params());
        prop_assert_eq!(encode_chain(&back.params, &back.chain, &back.layer), text);
    }

    #[test]
    fn transitions_conserve_supply(plan in blocks()) {
        let (tb, _) = build(&plan);
        let genesis = tb.ledger.chain.blocks[0].state.total_supply();
        for b in &tb.ledger.chain.blocks {
            prop_assert_eq!(b.state.total_supply(), genesis);
        }
        prop_assert!(validate_chain_detailed(&tb.ledger.chain, &tb.ledger.layer, tb.params()).is_ok());
    }

    #[test]
    fn redaction_preserves_roots(plan in blocks(), pick in any::<prop::sample::Index>(), mask in any::<u8>()) {
        let (tb, _) = build(&plan);
        let c = &tb.ledger.chain;
        let h = 1 + pick.index(plan.len());
        let body = &c.blocks[h].txs;
        let idx: BTreeSet<usize> = (0..body.len())
            .filter(|i| mask >> (i % 8) & 1 == 1)
            .filter(|&i| body[i].as_full().is_some_and(|t| !t.data.is_empty()))
            .collect();
        let red = retain_and_redact(body, &idx).unwrap();
        prop_assert_eq!(tx_root(&red), tx_root(body));
        for (i, e) in red.iter().enumerate() {
            prop_assert_eq!(e.is_redacted(), idx.contains(&i));
        }
        if idx.is_empty() || c.depth_of(h as u64) < tb.params().stability_depth {
            return Ok(());
        }
        let rp = propose_repair(c, h as u64, red, tb.params()).unwrap();
        prop_assert_eq!(&rp.new_state, &c.blocks[h].state);
        prop_assert!(validate_proposal(c, &rp, tb.params()).is_ok());
    }

    #[test]
    fn prune_partitions_the_chain(plan in blocks(), q in 0usize..20) {
        let (tb, _) = build(&plan);
        let c = &tb.ledger.chain;
        let front = c.prune_close(q);
        prop_assert!(front.is_prefix_of(c));
        prop_assert_eq!(&front.clone().concat(c.prune_back(q)), c);
        prop_assert_eq!(c.prune(q).len(), c.len().saturating_sub(q));
        prop_assert!(c.prune(q).is_prefix_of(c));
    }

    #[test]
    fn merkle_root_binds_every_leaf(n in 1usize..20, pos in any::<prop::sample::Index>()) {
        let leaves: Vec<_> = (0..n as u64).map(|i| sha256(&i.to_be_bytes())).collect();
        let root = merkle_root(&leaves);
        let mut changed = leaves.clone();
        let i = pos.index(n);
        changed[i] = sha256(b"other");
        prop_assert_ne!(merkle_root(&changed), root);
    }

    #[test]
    fn threshold_is_strict(size in 1u64..200, votes in 0u64..200, rho in 0.0f64..1.0) {
        let p = Policy { rho, ..Policy::default() };
        prop_assert_eq!(p.clears_threshold(votes, size), votes as f64 > rho * size as f64);
    }
}
