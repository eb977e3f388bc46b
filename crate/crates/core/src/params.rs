use serde::{Deserialize, Serialize};

use crate::consensus::ConsensusParams;
use crate::hash::{Encode, Encoder};
use crate::keys::KeyRegistry;
use crate::reparo::Policy;

/// Default stability depth k.
pub const DEFAULT_STABILITY_DEPTH: u64 = 6;

/// Everything a validator needs besides the chain itself. Fixed at genesis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainParams {
    pub consensus: ConsensusParams,
    pub policy: Policy,
    /// Blocks that must follow a block before it counts as stable.
    pub stability_depth: u64,
    pub registry: KeyRegistry,
}

impl ChainParams {
    pub fn new(consensus: ConsensusParams, policy: Policy, registry: KeyRegistry) -> Self {
        ChainParams {
            consensus,
            policy,
            stability_depth: DEFAULT_STABILITY_DEPTH,
            registry,
        }
    }

    pub fn with_stability_depth(mut self, k: u64) -> Self {
        self.stability_depth = k;
        self
    }

    pub fn is_pos(&self) -> bool {
        matches!(self.consensus, ConsensusParams::Pos { .. })
    }

    pub fn validate(&self) -> Result<(), String> {
        self.consensus.validate()?;
        self.policy.validate()
    }
}

/// Genesis commits to this encoding. The veto set is local knowledge and is
/// left out.
impl Encode for ChainParams {
    fn encode_to(&self, enc: &mut Encoder) {
        match self.consensus {
            ConsensusParams::Pow { difficulty } => enc.u8(0).u64(difficulty),
            ConsensusParams::Pos { f, epoch_len } => enc.u8(1).u64(f.to_bits()).u64(epoch_len),
        };
        let p = &self.policy;
        enc.u64(p.window)
            .u64(p.rho.to_bits())
            .u8(p.allow_redaction as u8)
            .u8(p.allow_stateful as u8)
            .u64(self.stability_depth)
            .u64(self.registry.len() as u64);
        for (addr, key) in self.registry.iter() {
            enc.address(addr).digest(&key.0);
        }
    }
}
