use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MonteCarloResult {
    pub ell: u64,
    pub rho_tilde: f64,
    pub trials: u64,
    pub empirical: f64,
    pub binomial_tail: f64,
    /// `ℓ·ρ̃^(⌊ℓ/2⌋+1)`, a loose closed-form estimate reported for comparison.
    #[serde(rename = "paper_expression")]
    pub closed_form: f64,
    /// One binomial standard deviation of the empirical rate around the tail.
    pub sigma: f64,
}

/// `P[X > ℓ/2]` for `X ~ Binomial(ℓ, p)`, summed exactly.
pub fn binomial_tail(ell: u64, p: f64) -> f64 {
    let mut total = 0.0;
    let mut coeff = 1.0f64;
    for i in 0..=ell {
        if i > 0 {
            coeff = coeff * (ell - i + 1) as f64 / i as f64;
        }
        if 2 * i > ell {
            total += coeff * p.powi(i as i32) * (1.0 - p).powi((ell - i) as i32);
        }
    }
    total
}

/// Simulates `trials` voting windows of `ell` blocks where each block is
/// Byzantine (and votes for a malicious proposal) with probability
/// `rho_tilde`, counting windows with strictly more than `ell/2` votes.
pub fn monte_carlo_malicious_approval(ell: u64, rho_tilde: f64, trials: u64, seed: u64) -> MonteCarloResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = 0u64;
    for _ in 0..trials {
        let votes = (0..ell).filter(|_| rng.gen::<f64>() < rho_tilde).count() as u64;
        if 2 * votes > ell {
            hits += 1;
        }
    }
    let tail = binomial_tail(ell, rho_tilde);
    MonteCarloResult {
        ell,
        rho_tilde,
        trials,
        empirical: hits as f64 / trials.max(1) as f64,
        binomial_tail: tail,
        closed_form: ell as f64 * rho_tilde.powi((ell / 2 + 1) as i32),
        sigma: (tail * (1.0 - tail) / trials.max(1) as f64).sqrt(),
    }
}
