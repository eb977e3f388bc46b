//! Export a repaired chain to JSON lines, read it back, validate it, then
//! alter one header field and watch validation fail where the hash link
//! breaks.

use std::collections::BTreeSet;

use reparo::codec::{decode_chain, encode_chain};
use reparo::hash::Address;
use reparo::reparo::{propose_repair, retain_and_redact, validate_chain_detailed};
use reparo::testbed::Testbed;

fn main() {
    let mut tb = Testbed::pow(2, 4, 3, 2);
    let tx = tb.client_tx(1, Address::special(0x77), 0, b"to be redacted".to_vec(), 0);
    tb.mine(vec![tx], &[], &[]).unwrap();
    tb.mine_empty(3);
    let body = retain_and_redact(&tb.ledger.chain.blocks[1].txs, &BTreeSet::from([0])).unwrap();
    let rp = propose_repair(&tb.ledger.chain, 1, body, tb.params()).unwrap();
    tb.push_repair(&rp, 20).unwrap();

    let text = encode_chain(tb.params(), &tb.ledger.chain, &tb.ledger.layer);
    println!("{} blocks, {} bytes", tb.ledger.chain.len(), text.len());
    let back = decode_chain(&text).unwrap();
    println!("round trip valid: {:?}", validate_chain_detailed(&back.chain, &back.layer, &back.params));

    let line = text.lines().nth(3).unwrap();
    let slot = format!("\"slot\":{}", back.chain.blocks[3].header.slot);
    let tampered = text.replacen(line, &line.replacen(&slot, "\"slot\":99", 1), 1);
    let bad = decode_chain(&tampered).unwrap();
    match validate_chain_detailed(&bad.chain, &bad.layer, &bad.params) {
        Ok(()) => println!("tampered chain accepted?!"),
        Err(e) => println!("tampered chain rejected: {e}"),
    }
}
