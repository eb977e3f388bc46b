//! Seven proof-of-stake nodes, two of them Byzantine, over a one-slot delay
//! network. An honest node proposes a redaction mid-run; the report shows
//! growth, quality, approvals and common-prefix checks.

use reparo::consensus::ConsensusParams;
use reparo::reparo::Policy;
use reparo::simnet::{Event, RepairAction, ScenarioConfig, ScriptedEvent, Simulation};

fn main() {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let cfg = ScenarioConfig {
        seed,
        consensus: ConsensusParams::Pos { f: 0.5, epoch_len: 10 },
        nodes: 7,
        byzantine_fraction: 0.3,
        strategies: Vec::new(),
        max_delay: 1,
        rounds: 150,
        policy: Policy {
            window: 10,
            ..Policy::default()
        },
        stability_depth: 6,
        clients: 4,
        tx_rate: 1,
        max_block_txs: 64,
        pow_attempts: 1,
        apply_repairs: true,
        growth_window: None,
        scripted_events: vec![ScriptedEvent {
            at_slot: 30,
            event: Event::Propose {
                by: 0,
                target: 3,
                action: RepairAction::Redact { indices: vec![0] },
            },
        }],
    };
    let sim = Simulation::new(cfg).unwrap().run();
    let r = sim.report();
    for n in &r.nodes {
        let role = n.strategy.map_or("honest", |s| s.name());
        println!("node {} {:>17} length {:3} head {}", n.node, role, n.length, &n.head.to_hex()[..12]);
    }
    println!("growth {:.3}  quality {:.3}", r.growth, r.quality);
    println!("common-prefix violations {}", r.editable_common_prefix_violations);
    for a in &r.approvals {
        println!("repair {:?} of height {} logged at {}", a.kind, a.target_height, a.approval_height);
    }
}
