//! How often does a Byzantine minority, voting alone, clear the approval
//! threshold? Compares simulation, the exact binomial tail and the loose
//! closed-form estimate.

use reparo::simnet::monte_carlo_malicious_approval;

fn main() {
    println!("{:>4} {:>5} {:>10} {:>10} {:>10}", "ell", "rho", "empirical", "exact", "estimate");
    for ell in [6, 10, 20] {
        for rho in [0.1, 0.2, 0.3, 0.4] {
            let r = monte_carlo_malicious_approval(ell, rho, 100_000, 7);
            println!(
                "{ell:>4} {rho:>5} {:>10.5} {:>10.5} {:>10.5}",
                r.empirical, r.binomial_tail, r.closed_form
            );
        }
    }
}
