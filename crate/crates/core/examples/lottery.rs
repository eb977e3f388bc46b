//! Slot-lottery fidelity: a holder of half the stake wins a slot with
//! probability 1 - (1 - f)^(1/2).

use reparo::consensus::{lottery_draw, win_probability};
use reparo::hash::{sha256, Address};

fn main() {
    let f = 0.1;
    let p = win_probability(50, 100, f);
    let me = Address::special(0x42);
    let slots = 100_000u64;
    let wins = (0..slots)
        .filter(|s| lottery_draw(&sha256(&s.to_be_bytes()), &me) < p)
        .count();
    let rate = wins as f64 / slots as f64;
    let sigma = (p * (1.0 - p) / slots as f64).sqrt();
    println!("phi_f(1/2) = {p:.6}");
    println!("observed   = {rate:.6} ({:+.2} sigma)", (rate - p) / sigma);
}
