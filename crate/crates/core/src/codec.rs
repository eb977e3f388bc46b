//! JSON-lines chain export: one record per block, genesis first. The
//! genesis record also carries the chain parameters.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::params::ChainParams;
use crate::reparo::{AdbEntry, RdbEntry, RepairLayer};
use crate::types::{AccountState, Block, Chain, Header, Height, TxEntry};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockRecord {
    pub height: Height,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<ChainParams>,
    pub header: Header,
    pub txs: Vec<TxEntry>,
    pub state: AccountState,
    pub rdb: Option<RdbEntry>,
    pub adb: Vec<AdbEntry>,
}

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("line {line}: {msg}")]
    Json { line: usize, msg: String },
    #[error("empty export")]
    Empty,
    #[error("line 1: genesis record must carry params")]
    MissingParams,
    #[error("line {0}: params are only allowed on the genesis record")]
    UnexpectedParams(usize),
    #[error("line {line}: expected height {expected}, found {found}")]
    Height { line: usize, expected: Height, found: Height },
    #[error("line {line}: Adb entry logged at height {found}")]
    AdbHeight { line: usize, found: Height },
    #[error("invalid params: {0}")]
    Params(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// An exported chain: parameters, repaired chain and repair layer.
#[derive(Clone, Debug, PartialEq)]
pub struct Export {
    pub params: ChainParams,
    pub chain: Chain,
    pub layer: RepairLayer,
}

pub fn write_chain<W: Write>(
    mut w: W,
    params: &ChainParams,
    chain: &Chain,
    layer: &RepairLayer,
) -> Result<(), FormatError> {
    for (i, b) in chain.blocks.iter().enumerate() {
        let rec = BlockRecord {
            height: i as Height,
            params: (i == 0).then(|| params.clone()),
            header: b.header.clone(),
            txs: b.txs.clone(),
            state: b.state.clone(),
            rdb: layer.rdb.get(i).cloned().flatten(),
            adb: layer.adb.get(i).cloned().unwrap_or_default(),
        };
        serde_json::to_writer(&mut w, &rec).map_err(|e| FormatError::Json {
            line: i + 1,
            msg: e.to_string(),
        })?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn encode_chain(params: &ChainParams, chain: &Chain, layer: &RepairLayer) -> String {
    let mut out = Vec::new();
    write_chain(&mut out, params, chain, layer).expect("writing to memory");
    String::from_utf8(out).expect("JSON is UTF-8")
}

pub fn read_chain<R: BufRead>(r: R) -> Result<Export, FormatError> {
    let mut params = None;
    let mut chain = Chain::empty();
    let mut layer = RepairLayer::default();
    for (idx, line) in r.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: BlockRecord = serde_json::from_str(&line).map_err(|e| FormatError::Json {
            line: line_no,
            msg: e.to_string(),
        })?;
        let expected = chain.len() as Height;
        if rec.height != expected {
            return Err(FormatError::Height {
                line: line_no,
                expected,
                found: rec.height,
            });
        }
        match (expected, rec.params) {
            (0, Some(p)) => {
                p.validate().map_err(FormatError::Params)?;
                params = Some(p);
            }
            (0, None) => return Err(FormatError::MissingParams),
            (_, Some(_)) => return Err(FormatError::UnexpectedParams(line_no)),
            (_, None) => {}
        }
        if let Some(e) = rec.adb.iter().find(|e| e.approval_height != rec.height) {
            return Err(FormatError::AdbHeight {
                line: line_no,
                found: e.approval_height,
            });
        }
        chain.blocks.push(Block {
            header: rec.header,
            txs: rec.txs,
            state: rec.state,
        });
        layer.rdb.push(rec.rdb);
        layer.adb.push(rec.adb);
    }
    let params = params.ok_or(FormatError::Empty)?;
    Ok(Export { params, chain, layer })
}

pub fn decode_chain(s: &str) -> Result<Export, FormatError> {
    read_chain(s.as_bytes())
}
