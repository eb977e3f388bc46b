//! A stateful repair: an escrow contract was deployed with the wrong owner
//! check, locking its funds. Replacing the creation transaction re-runs every
//! later block on top of the fixed code.

use reparo::hash::Address;
use reparo::reparo::{propose_repair, validate_chain};
use reparo::state::contract_address;
use reparo::state::vm::{encode_code, Amount, Instruction};
use reparo::testbed::Testbed;
use reparo::types::Transaction;

fn escrow_code(owner: Address) -> Vec<Instruction> {
    vec![
        Instruction::RequireSender { addr: owner },
        Instruction::Pay {
            to: owner,
            amount: Amount::FullBalance,
        },
    ]
}

fn main() {
    let mut tb = Testbed::pow(3, 5, 2, 2);
    let owner = tb.clients[0];
    let escrow = contract_address(&owner.address, 0);

    let typo = Address::special(0xee);
    let create = tb.client_tx(0, escrow, 500, encode_code(&escrow_code(typo)), 0);
    tb.mine(vec![create], &[], &[]).unwrap();
    let withdraw = tb.client_tx(0, escrow, 0, vec![], 0);
    tb.mine(vec![withdraw], &[], &[]).unwrap();
    println!("escrow balance after failed withdraw: {}", tb.ledger.state().balance(&escrow));
    tb.mine_empty(3);

    let fixed = Transaction::signed(&owner, escrow, 500, 0, encode_code(&escrow_code(owner.address)));
    let rp = propose_repair(&tb.ledger.chain, 1, vec![fixed.into()], tb.params()).unwrap();
    println!("proposal {} ({:?})", rp.id, rp.kind);
    tb.push_repair(&rp, 30).expect("approved");

    let before = tb.ledger.state().balance(&owner.address);
    let withdraw = tb.client_tx(0, escrow, 0, vec![], 0);
    tb.mine(vec![withdraw], &[], &[]).unwrap();
    let after = tb.ledger.state().balance(&owner.address);
    println!("owner received {} (fee 1)", after + 1 - before);
    println!("escrow balance now {}", tb.ledger.state().balance(&escrow));
    println!("chain valid: {}", validate_chain(&tb.ledger.chain, &tb.ledger.layer, tb.params()));
}
