use std::collections::{BTreeMap, BTreeSet};

use crate::hash::{Address, Digest};
use crate::params::ChainParams;
use crate::reparo::{chk_approval, ApprovalStatus, RepairLayer};
use crate::types::{Chain, Height};

/// τ̂: the smallest length gain over any `s` consecutive slots, per slot.
/// `trace[t]` is a node's chain length after slot `t`.
pub fn measure_chain_growth(trace: &[usize], s: usize) -> f64 {
    if s == 0 || trace.len() <= s {
        return match (trace.first(), trace.last()) {
            (Some(a), Some(b)) if trace.len() > 1 => (b - a) as f64 / (trace.len() - 1) as f64,
            _ => 0.0,
        };
    }
    trace
        .windows(s + 1)
        .map(|w| w[s].saturating_sub(w[0]) as f64 / s as f64)
        .fold(f64::INFINITY, f64::min)
}

/// Who produced each block, with approved repairs turning their targets
/// honest.
#[derive(Clone, Debug, Default)]
pub struct OwnershipLedger {
    byzantine: BTreeSet<Address>,
    endorsed: BTreeSet<Height>,
}

impl OwnershipLedger {
    pub fn new(byzantine: impl IntoIterator<Item = Address>) -> Self {
        OwnershipLedger {
            byzantine: byzantine.into_iter().collect(),
            endorsed: BTreeSet::new(),
        }
    }

    /// Marks every block targeted by a logged repair as protocol-endorsed.
    pub fn endorse_repairs(&mut self, layer: &RepairLayer) {
        self.endorsed
            .extend(layer.approvals().map(|e| e.proposal.target_height));
    }

    pub fn endorse(&mut self, h: Height) {
        self.endorsed.insert(h);
    }

    pub fn is_byzantine(&self, c: &Chain, h: Height) -> bool {
        h > 0 && !self.endorsed.contains(&h) && self.byzantine.contains(&c.blocks[h as usize].header.producer())
    }
}

/// μ̂: the largest fraction of Byzantine blocks in any `ell` consecutive
/// non-genesis blocks (the whole chain when shorter).
pub fn measure_chain_quality(c: &Chain, own: &OwnershipLedger, ell: usize) -> f64 {
    let flags: Vec<bool> = (1..c.len() as Height).map(|h| own.is_byzantine(c, h)).collect();
    if flags.is_empty() {
        return 0.0;
    }
    let w = ell.clamp(1, flags.len());
    flags
        .windows(w)
        .map(|win| win.iter().filter(|&&b| b).count() as f64 / w as f64)
        .fold(0.0, f64::max)
}

fn approved_targets(
    chains: [&Chain; 2],
    ids: impl IntoIterator<Item = (Digest, Height)>,
    params: &ChainParams,
) -> Vec<Height> {
    let unique: BTreeMap<Digest, Height> = ids.into_iter().collect();
    unique
        .into_iter()
        .filter(|(id, _)| {
            chains
                .iter()
                .any(|c| chk_approval(c, id, params).is_ok_and(|a| a.status == ApprovalStatus::Approve))
        })
        .map(|(_, h)| h)
        .collect()
}

/// k-editable common prefix between two chains. Either `prune(A, k) ≺ B`, or
/// every block of B's matching prefix that differs from A's sits under the
/// same header and is covered by an approved repair at or below its height
/// (a repair's cascade rewrites the states above its target).
pub fn check_editable_common_prefix(
    a: &Chain,
    la: &RepairLayer,
    b: &Chain,
    lb: &RepairLayer,
    k: u64,
    params: &ChainParams,
) -> bool {
    let (a, la, b, lb) = if a.len() <= b.len() { (a, la, b, lb) } else { (b, lb, a, la) };
    let keep = a.len().saturating_sub(k as usize);
    let pa = &a.blocks[..keep];
    if pa.iter().zip(&b.blocks).all(|(x, y)| x == y) {
        return true;
    }
    let ids = la
        .approvals()
        .chain(lb.approvals())
        .map(|e| (e.proposal.id, e.proposal.target_height));
    let targets = approved_targets([b, a], ids, params);
    pa.iter().zip(&b.blocks).enumerate().all(|(i, (x, y))| {
        x == y || (x.header == y.header && targets.iter().any(|&t| t <= i as Height))
    })
}
