use serde::{Deserialize, Serialize};

use crate::consensus::ConsensusParams;
use crate::params::DEFAULT_STABILITY_DEPTH;
use crate::reparo::Policy;
use crate::types::Height;

/// Misbehaviour of a Byzantine node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Never votes.
    Withhold,
    /// Votes for every proposal it hears of and files bogus repair requests.
    SpamVote,
    /// Broadcasts its chain with a stable block body altered.
    TamperBody,
    /// Broadcasts its chain with a forged Rdb entry.
    TamperRdb,
    /// Redacts a stable block without a vote and logs it in the Adb.
    UnapprovedRepair,
    /// Mines a private fork two blocks behind and releases it once longer.
    ForkExtend,
}

impl Strategy {
    pub const CATALOG: [Strategy; 6] = [
        Strategy::Withhold,
        Strategy::SpamVote,
        Strategy::TamperBody,
        Strategy::TamperRdb,
        Strategy::UnapprovedRepair,
        Strategy::ForkExtend,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Withhold => "withhold",
            Strategy::SpamVote => "spam_vote",
            Strategy::TamperBody => "tamper_body",
            Strategy::TamperRdb => "tamper_rdb",
            Strategy::UnapprovedRepair => "unapproved_repair",
            Strategy::ForkExtend => "fork_extend",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum RepairAction {
    /// Redact the transactions at these positions.
    Redact { indices: Vec<usize> },
    /// Re-sign the transaction at `index` with new data (hex).
    Rewrite {
        index: usize,
        #[serde(with = "crate::hash::hex_bytes")]
        data: Vec<u8>,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Event {
    Propose {
        /// Proposing node; must be honest.
        #[serde(default)]
        by: usize,
        target: Height,
        action: RepairAction,
    },
    /// Every node vetoes the n-th scripted proposal.
    Veto { proposal: usize },
    /// Messages only flow within a group until the next heal.
    Partition { groups: Vec<Vec<usize>> },
    Heal,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptedEvent {
    pub at_slot: u64,
    pub event: Event,
}

fn default_depth() -> u64 {
    DEFAULT_STABILITY_DEPTH
}

fn default_clients() -> usize {
    4
}

fn default_tx_rate() -> usize {
    1
}

fn default_block_txs() -> usize {
    64
}

fn default_attempts() -> u64 {
    1
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub consensus: ConsensusParams,
    pub nodes: usize,
    #[serde(default)]
    pub byzantine_fraction: f64,
    /// Strategies assigned round-robin to Byzantine nodes; empty means the
    /// whole catalog.
    #[serde(default)]
    pub strategies: Vec<Strategy>,
    #[serde(default)]
    pub max_delay: u64,
    pub rounds: u64,
    #[serde(default)]
    pub policy: Policy,
    #[serde(default = "default_depth")]
    pub stability_depth: u64,
    #[serde(default = "default_clients")]
    pub clients: usize,
    /// Workload transactions broadcast per slot.
    #[serde(default = "default_tx_rate")]
    pub tx_rate: usize,
    #[serde(default = "default_block_txs")]
    pub max_block_txs: usize,
    /// Sealing attempts per node per slot under proof of work.
    #[serde(default = "default_attempts")]
    pub pow_attempts: u64,
    #[serde(default = "yes")]
    pub apply_repairs: bool,
    /// Window length s for the growth estimate; defaults to the policy window.
    #[serde(default)]
    pub growth_window: Option<u64>,
    #[serde(default)]
    pub scripted_events: Vec<ScriptedEvent>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid scenario: {0}")]
pub struct ConfigError(pub String);

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let err = |m: String| Err(ConfigError(m));
        if self.nodes == 0 {
            return err("nodes must be >= 1".into());
        }
        if self.rounds == 0 {
            return err("rounds must be >= 1".into());
        }
        if !(0.0..1.0).contains(&self.byzantine_fraction) {
            return err(format!("byzantine_fraction must be in [0,1), got {}", self.byzantine_fraction));
        }
        if self.clients == 0 {
            return err("clients must be >= 1".into());
        }
        self.consensus.validate().map_err(ConfigError)?;
        self.policy.validate().map_err(ConfigError)?;
        let byz = self.byzantine_count();
        for ev in &self.scripted_events {
            match &ev.event {
                Event::Propose { by, .. } if *by >= self.nodes - byz => {
                    return err(format!("proposer {by} is not an honest node"));
                }
                Event::Partition { groups } if groups.iter().flatten().any(|&n| n >= self.nodes) => {
                    return err("partition names an unknown node".into());
                }
                Event::Veto { proposal } if *proposal >= self.proposal_count() => {
                    return err(format!("veto refers to unknown proposal {proposal}"));
                }
                _ => {}
            }
        }
        Ok(())
    }

    /// Byzantine nodes are the last `⌊ρ̃·n⌋` node indices.
    pub fn byzantine_count(&self) -> usize {
        (self.byzantine_fraction * self.nodes as f64).floor() as usize
    }

    pub fn strategy_of(&self, node: usize) -> Option<Strategy> {
        let honest = self.nodes - self.byzantine_count();
        if node < honest {
            return None;
        }
        let list: &[Strategy] = if self.strategies.is_empty() {
            &Strategy::CATALOG
        } else {
            &self.strategies
        };
        Some(list[(node - honest) % list.len()])
    }

    fn proposal_count(&self) -> usize {
        self.scripted_events
            .iter()
            .filter(|e| matches!(e.event, Event::Propose { .. }))
            .count()
    }

    pub fn from_json(s: &str) -> Result<Self, ConfigError> {
        let cfg: ScenarioConfig = serde_json::from_str(s).map_err(|e| ConfigError(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }
}
