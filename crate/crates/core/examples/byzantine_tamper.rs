//! Byzantine producers that tamper with bodies, forge Rdb entries or log
//! repairs nobody voted for. Honest nodes refuse every such chain.

use reparo::consensus::ConsensusParams;
use reparo::simnet::{run_scenario, ScenarioConfig, Strategy};

fn main() {
    for s in [Strategy::TamperBody, Strategy::TamperRdb, Strategy::UnapprovedRepair] {
        let cfg = ScenarioConfig::from_json(&format!(
            r#"{{"seed": 3, "consensus": {{"pow": {{"difficulty": 8}}}}, "nodes": 4,
                "byzantine_fraction": 0.25, "strategies": ["{}"], "rounds": 80}}"#,
            s.name()
        ))
        .unwrap();
        assert_eq!(cfg.consensus, ConsensusParams::Pow { difficulty: 8 });
        let r = run_scenario(cfg).unwrap();
        let first = r.timeline.iter().find(|e| e.event.starts_with("reject@"));
        println!(
            "{:>17}: {} rejections, common-prefix violations {}, first at slot {}",
            s.name(),
            r.rejections,
            r.editable_common_prefix_violations,
            first.map_or("-".into(), |e| e.slot.to_string())
        );
    }
}
