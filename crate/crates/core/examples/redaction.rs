//! Redact an unwanted payload from a stable PoW block: propose, request,
//! vote, apply, then show the chain still validates from genesis and the
//! payload is gone from the export.

use std::collections::BTreeSet;

use reparo::codec::encode_chain;
use reparo::hash::Address;
use reparo::merkle::tx_root;
use reparo::reparo::{chk_approval, propose_repair, retain_and_redact, validate_chain};
use reparo::testbed::Testbed;

fn main() {
    let mut tb = Testbed::pow(6, 10, 3, 2);
    let payload = b"personal data that must go".to_vec();
    let bad = tb.client_tx(1, Address::special(0x77), 0, payload.clone(), 0);
    let ok = tb.client_tx(0, tb.clients[1].address, 25, vec![], 0);
    tb.mine(vec![bad, ok], &[], &[]).unwrap();
    tb.mine_empty(6);
    let root = tx_root(&tb.ledger.chain.blocks[1].txs);

    let body = retain_and_redact(&tb.ledger.chain.blocks[1].txs, &BTreeSet::from([0])).unwrap();
    let rp = propose_repair(&tb.ledger.chain, 1, body, tb.params()).unwrap();
    println!("proposal {} ({:?})", rp.id, rp.kind);

    let at = tb.push_repair(&rp, 40).expect("approved within the window");
    let a = chk_approval(&tb.ledger.chain, &rp.id, tb.params()).unwrap();
    println!(
        "applied at height {at}: {} of {} blocks voted",
        a.tally.votes, a.tally.window_size
    );

    let b1 = &tb.ledger.chain.blocks[1];
    assert!(b1.txs[0].is_redacted());
    assert_eq!(tx_root(&b1.txs), root);
    let export = encode_chain(tb.params(), &tb.ledger.chain, &tb.ledger.layer);
    assert!(!export.contains(&hex::encode(&payload)));
    println!("tx root unchanged, payload absent from {} bytes of export", export.len());
    println!("chain valid: {}", validate_chain(&tb.ledger.chain, &tb.ledger.layer, tb.params()));
}
