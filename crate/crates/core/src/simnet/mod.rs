//! Deterministic slot-driven simulation of honest and Byzantine nodes over a
//! delayed broadcast network, with growth, quality and editable-common-prefix
//! measurements.

mod config;
mod metrics;
mod montecarlo;
mod node;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::builder::genesis_block;
use crate::hash::{Address, Digest};
use crate::keys::{Identity, KeyRegistry};
use crate::params::ChainParams;
use crate::reparo::{build_repair_tx, propose_repair, retain_and_redact, PoolEvent, RepairKind};
use crate::testbed::INITIAL_BALANCE;
use crate::types::{Chain, Height, Transaction, TxEntry};

pub use config::{ConfigError, Event, RepairAction, ScenarioConfig, ScriptedEvent, Strategy};
pub use metrics::{check_editable_common_prefix, measure_chain_growth, measure_chain_quality, OwnershipLedger};
pub use montecarlo::{binomial_tail, monte_carlo_malicious_approval, MonteCarloResult};
pub use node::ChainView;

use node::{Msg, Node, Received};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TimelineEvent {
    pub slot: u64,
    /// `None` for network-wide events.
    pub node: Option<usize>,
    pub event: String,
    pub digest: Option<Digest>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NodeReport {
    pub node: usize,
    pub strategy: Option<Strategy>,
    pub length: usize,
    pub head: Digest,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ApprovalRecord {
    pub id: Digest,
    pub target_height: Height,
    pub approval_height: Height,
    pub kind: RepairKind,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunReport {
    pub seed: u64,
    pub rounds: u64,
    pub nodes: Vec<NodeReport>,
    /// τ̂ in blocks per slot, minimum over honest nodes.
    pub growth: f64,
    /// μ̂, maximum over honest nodes.
    pub quality: f64,
    pub editable_common_prefix_violations: usize,
    /// Repairs logged on node 0's final chain.
    pub approvals: Vec<ApprovalRecord>,
    /// Chains honest nodes refused to adopt.
    pub rejections: usize,
    pub timeline: Vec<TimelineEvent>,
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Timeline as `slot,node,event,digest` rows.
    pub fn timeline_csv(&self) -> String {
        let mut out = String::from("slot,node,event,digest\n");
        for e in &self.timeline {
            let node = e.node.map(|n| n.to_string()).unwrap_or_default();
            let digest = e.digest.map(|d| d.to_hex()).unwrap_or_default();
            writeln!(out, "{},{},{},{}", e.slot, node, e.event, digest).expect("write to string");
        }
        out
    }
}

/// A running scenario. [`run_scenario`] drives one to completion.
pub struct Simulation {
    cfg: ScenarioConfig,
    nodes: Vec<Node>,
    clients: Vec<Identity>,
    client_nonces: Vec<u64>,
    rng: ChaCha8Rng,
    slot: u64,
    queue: BTreeMap<u64, Vec<(usize, Msg)>>,
    groups: Option<Vec<usize>>,
    held: Vec<(usize, Msg)>,
    traces: Vec<Vec<usize>>,
    timeline: Vec<TimelineEvent>,
    scripted: Vec<Option<Digest>>,
    rejections: usize,
}

impl Simulation {
    pub fn new(cfg: ScenarioConfig) -> Result<Self, ConfigError> {
        cfg.validate()?;
        let idents: Vec<Identity> = (0..cfg.nodes as u64).map(|i| Identity::derive("node", i)).collect();
        let clients: Vec<Identity> = (0..cfg.clients as u64).map(|i| Identity::derive("client", i)).collect();
        let registry: KeyRegistry = idents.iter().chain(&clients).copied().collect();
        let params = ChainParams::new(cfg.consensus.clone(), cfg.policy.clone(), registry)
            .with_stability_depth(cfg.stability_depth);
        let alloc = idents.iter().chain(&clients).map(|id| (id.address, INITIAL_BALANCE));
        let genesis = Chain::new(genesis_block(&params, alloc));
        let nodes = idents
            .iter()
            .enumerate()
            .map(|(i, id)| Node::new(i, *id, cfg.strategy_of(i), params.clone(), &genesis))
            .collect();
        Ok(Simulation {
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            client_nonces: vec![0; clients.len()],
            clients,
            traces: vec![vec![1]; cfg.nodes],
            nodes,
            slot: 0,
            queue: BTreeMap::new(),
            groups: None,
            held: Vec::new(),
            timeline: Vec::new(),
            scripted: Vec::new(),
            rejections: 0,
            cfg,
        })
    }

    fn log(&mut self, node: Option<usize>, event: impl Into<String>, digest: Option<Digest>) {
        self.timeline.push(TimelineEvent {
            slot: self.slot,
            node,
            event: event.into(),
            digest,
        });
    }

    fn connected(&self, a: usize, b: usize) -> bool {
        self.groups.as_ref().is_none_or(|g| g[a] == g[b])
    }

    fn send(&mut self, from: Option<usize>, msg: Msg) {
        for to in 0..self.nodes.len() {
            if Some(to) == from {
                continue;
            }
            let d = self.rng.gen_range(0..=self.cfg.max_delay);
            if from.is_some_and(|f| !self.connected(f, to)) {
                self.held.push((to, msg.clone()));
            } else {
                self.queue.entry(self.slot + d).or_default().push((to, msg.clone()));
            }
        }
    }

    fn deliver(&mut self) {
        let due: Vec<u64> = self.queue.range(..=self.slot).map(|(s, _)| *s).collect();
        for s in due {
            for (to, msg) in self.queue.remove(&s).unwrap_or_default() {
                self.handle(to, msg);
            }
        }
    }

    fn handle(&mut self, to: usize, msg: Msg) {
        match msg {
            Msg::Tx(tx) => self.nodes[to].add_tx(tx),
            Msg::Proposal(rp) => {
                let events = self.nodes[to].add_proposal(rp);
                self.log_pool(to, events);
            }
            Msg::Chain(view) => match self.nodes[to].receive_chain(&view) {
                Received::Adopted => {
                    let head = view.chain.head().map(|b| b.hash());
                    self.log(Some(to), "adopt", head);
                }
                Received::Rejected(e) => {
                    if self.nodes[to].is_honest() {
                        self.rejections += 1;
                    }
                    let head = view.chain.head().map(|b| b.hash());
                    self.log(Some(to), format!("reject@{}", e.height), head);
                }
                Received::Ignored => {}
            },
        }
    }

    fn log_pool(&mut self, node: usize, events: Vec<PoolEvent>) {
        for ev in events {
            let (name, id) = match ev {
                PoolEvent::Added(id) => ("pool_add", id),
                PoolEvent::Invalid(id, _) => ("pool_invalid", id),
                PoolEvent::Applied(id) => ("pool_applied", id),
                PoolEvent::Rejected(id) => ("pool_rejected", id),
                PoolEvent::Duplicate(_) | PoolEvent::Deferred(_) => continue,
            };
            self.log(Some(node), name, Some(id));
        }
    }

    fn scripted_event(&mut self, ev: Event) {
        match ev {
            Event::Propose { by, target, action } => {
                let id = self.propose(by, target, &action);
                self.scripted.push(id);
            }
            Event::Veto { proposal } => {
                if let Some(Some(id)) = self.scripted.get(proposal).copied() {
                    for n in &mut self.nodes {
                        n.params.policy.vetoed.insert(id);
                    }
                    self.log(None, "veto", Some(id));
                }
            }
            Event::Partition { groups } => {
                let mut g: Vec<usize> = (0..self.nodes.len()).map(|i| groups.len() + i).collect();
                for (gi, members) in groups.iter().enumerate() {
                    for &m in members {
                        g[m] = gi;
                    }
                }
                self.groups = Some(g);
                self.log(None, "partition", None);
            }
            Event::Heal => {
                self.groups = None;
                for (to, msg) in std::mem::take(&mut self.held) {
                    let d = self.rng.gen_range(0..=self.cfg.max_delay);
                    self.queue.entry(self.slot + d).or_default().push((to, msg));
                }
                self.log(None, "heal", None);
            }
        }
    }

    fn propose(&mut self, by: usize, target: Height, action: &RepairAction) -> Option<Digest> {
        let node = &self.nodes[by];
        let c = &node.view.chain;
        let Some(block) = c.get(target) else {
            self.log(Some(by), "propose_failed", None);
            return None;
        };
        let new_txs = match action {
            RepairAction::Redact { indices } => retain_and_redact(&block.txs, &indices.iter().copied().collect()).ok(),
            RepairAction::Rewrite { index, data } => block.txs.get(*index).and_then(|e| {
                let TxEntry::Full(tx) = e else { return None };
                let signer = self
                    .clients
                    .iter()
                    .chain(self.nodes.iter().map(|n| &n.ident))
                    .find(|id| id.address == tx.from)?;
                let mut txs = block.txs.clone();
                txs[*index] = Transaction::signed(signer, tx.to, tx.value, tx.nonce, data.clone()).into();
                Some(txs)
            }),
        };
        let rp = match new_txs.map(|txs| propose_repair(c, target, txs, &node.params)) {
            Some(Ok(rp)) => rp,
            Some(Err(e)) => {
                self.log(Some(by), format!("propose_failed:{e}"), None);
                return None;
            }
            None => {
                self.log(Some(by), "propose_failed:bad_action", None);
                return None;
            }
        };
        let req: TxEntry = build_repair_tx(&node.ident, node.next_nonce(), &rp).into();
        let id = rp.id;
        let events = self.nodes[by].add_proposal(rp.clone());
        self.log_pool(by, events);
        self.nodes[by].add_tx(req.clone());
        self.log(Some(by), "propose", Some(id));
        self.send(Some(by), Msg::Proposal(rp));
        self.send(Some(by), Msg::Tx(req));
        Some(id)
    }

    fn workload(&mut self) {
        if self.clients.len() < 2 {
            return;
        }
        for _ in 0..self.cfg.tx_rate {
            let from = self.rng.gen_range(0..self.clients.len());
            let mut to = self.rng.gen_range(0..self.clients.len() - 1);
            if to >= from {
                to += 1;
            }
            let value = self.rng.gen_range(1..=10);
            let mut data = vec![0u8; 8];
            self.rng.fill(&mut data[..]);
            let nonce = self.client_nonces[from];
            self.client_nonces[from] += 1;
            let tx = Transaction::signed(&self.clients[from], self.clients[to].address, value, nonce, data);
            let tx: TxEntry = tx.into();
            for n in &mut self.nodes {
                n.add_tx(tx.clone());
            }
        }
    }

    /// Runs one slot.
    pub fn step(&mut self) {
        self.slot += 1;
        self.deliver();
        let events: Vec<Event> = self
            .cfg
            .scripted_events
            .iter()
            .filter(|e| e.at_slot == self.slot)
            .map(|e| e.event.clone())
            .collect();
        for ev in events {
            self.scripted_event(ev);
        }
        self.workload();
        for i in 0..self.nodes.len() {
            let (apply, max_txs, attempts) = (self.cfg.apply_repairs, self.cfg.max_block_txs, self.cfg.pow_attempts);
            let slot = self.slot;
            let produced = self.nodes[i].produce(slot, apply, max_txs, attempts, &mut self.rng);
            if let Some(view) = produced {
                let head = view.chain.head().map(|b| b.hash());
                self.log(Some(i), "produce", head);
                self.send(Some(i), Msg::Chain(view));
            }
        }
        self.deliver();
        for i in 0..self.nodes.len() {
            let events = self.nodes[i].refresh_pool();
            self.log_pool(i, events);
            self.traces[i].push(self.nodes[i].len());
        }
    }

    pub fn run(mut self) -> Self {
        while self.slot < self.cfg.rounds {
            self.step();
        }
        self
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.cfg
    }

    pub fn params(&self) -> &ChainParams {
        &self.nodes[0].params
    }

    pub fn view(&self, node: usize) -> &ChainView {
        &self.nodes[node].view
    }

    pub fn honest_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.nodes.iter().filter(|n| n.is_honest()).map(|n| n.index)
    }

    pub fn byzantine_addresses(&self) -> Vec<Address> {
        self.nodes.iter().filter(|n| !n.is_honest()).map(|n| n.ident.address).collect()
    }

    pub fn trace(&self, node: usize) -> &[usize] {
        &self.traces[node]
    }

    pub fn report(&self) -> RunReport {
        let honest: Vec<usize> = self.honest_nodes().collect();
        let k = self.cfg.stability_depth;
        let ell = self.cfg.policy.window as usize;
        let s = self.cfg.growth_window.unwrap_or(self.cfg.policy.window) as usize;
        let growth = honest
            .iter()
            .map(|&i| measure_chain_growth(&self.traces[i], s))
            .fold(f64::INFINITY, f64::min);
        let byz = self.byzantine_addresses();
        let quality = honest
            .iter()
            .map(|&i| {
                let mut own = OwnershipLedger::new(byz.iter().copied());
                own.endorse_repairs(&self.nodes[i].view.layer);
                measure_chain_quality(&self.nodes[i].view.chain, &own, ell)
            })
            .fold(0.0, f64::max);
        let mut violations = 0;
        for (x, &a) in honest.iter().enumerate() {
            for &b in &honest[x + 1..] {
                let (va, vb) = (&self.nodes[a].view, &self.nodes[b].view);
                if !check_editable_common_prefix(&va.chain, &va.layer, &vb.chain, &vb.layer, k, self.params()) {
                    violations += 1;
                }
            }
        }
        let approvals = self.nodes[0]
            .view
            .layer
            .approvals()
            .map(|e| ApprovalRecord {
                id: e.proposal.id,
                target_height: e.proposal.target_height,
                approval_height: e.approval_height,
                kind: e.proposal.kind,
            })
            .collect();
        RunReport {
            seed: self.cfg.seed,
            rounds: self.cfg.rounds,
            nodes: self
                .nodes
                .iter()
                .map(|n| NodeReport {
                    node: n.index,
                    strategy: n.strategy,
                    length: n.len(),
                    head: n.view.chain.head().expect("genesis").hash(),
                })
                .collect(),
            growth: if growth.is_finite() { growth } else { 0.0 },
            quality,
            editable_common_prefix_violations: violations,
            approvals,
            rejections: self.rejections,
            timeline: self.timeline.clone(),
        }
    }
}

/// Runs `cfg` to completion and reports.
pub fn run_scenario(cfg: ScenarioConfig) -> Result<RunReport, ConfigError> {
    Ok(Simulation::new(cfg)?.run().report())
}
