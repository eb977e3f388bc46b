//! A ledger kernel with a policy-gated repair layer.
//!
//! Blocks commit to their transactions and account state through header
//! roots. Stable blocks can later be repaired, either by redacting
//! transaction payloads or by replacing transactions, once a proposal has
//! won an on-chain vote. Headers never change, so the chain stays linked
//! and every validator can replay the repairs from the Rdb/Adb databases.

pub mod builder;
pub mod cli;
pub mod codec;
pub mod consensus;
pub mod hash;
pub mod keys;
pub mod merkle;
pub mod params;
pub mod reparo;
pub mod simnet;
pub mod state;
pub mod testbed;
pub mod types;
