//! A tiny contract machine: enough to write an escrow with a bug in it.

use serde::{Deserialize, Serialize};

use crate::hash::{Address, Digest, Encode, Encoder};
use crate::types::AccountState;

pub const MAX_CODE_LEN: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Amount {
    Const(u64),
    FullBalance,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum Instruction {
    Pay { to: Address, amount: Amount },
    Store { key: Digest, value: Digest },
    RequireSender { addr: Address },
    Halt,
    Abort,
}

impl Encode for Instruction {
    fn encode_to(&self, enc: &mut Encoder) {
        match self {
            Instruction::Pay { to, amount } => {
                enc.u8(0).address(to);
                match amount {
                    Amount::Const(n) => enc.u8(0).u64(*n),
                    Amount::FullBalance => enc.u8(1),
                };
            }
            Instruction::Store { key, value } => {
                enc.u8(1).digest(key).digest(value);
            }
            Instruction::RequireSender { addr } => {
                enc.u8(2).address(addr);
            }
            Instruction::Halt => {
                enc.u8(3);
            }
            Instruction::Abort => {
                enc.u8(4);
            }
        }
    }
}

/// Serializes code as the JSON carried in a contract-creation `data` field.
pub fn encode_code(code: &[Instruction]) -> Vec<u8> {
    serde_json::to_vec(code).expect("instructions serialize")
}

/// Parses a contract-creation payload. `None` unless it is a non-empty
/// instruction list of at most [`MAX_CODE_LEN`] entries.
pub fn decode_code(data: &[u8]) -> Option<Vec<Instruction>> {
    let code: Vec<Instruction> = serde_json::from_slice(data).ok()?;
    (!code.is_empty() && code.len() <= MAX_CODE_LEN).then_some(code)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExecResult {
    Committed,
    Aborted,
}

/// Moves `value` from `caller` into `contract` and runs the contract's code.
/// On `ABORT` the input state is returned untouched.
pub fn exec_contract(
    st: &AccountState,
    contract: Address,
    caller: Address,
    value: u64,
) -> (AccountState, ExecResult) {
    let mut next = st.clone();
    let ok = transfer(&mut next, caller, contract, value) && run(&mut next, contract, caller);
    if ok {
        (next, ExecResult::Committed)
    } else {
        (st.clone(), ExecResult::Aborted)
    }
}

fn transfer(st: &mut AccountState, from: Address, to: Address, value: u64) -> bool {
    if value == 0 {
        return true;
    }
    let Some(src) = st.accounts.get_mut(&from) else {
        return false;
    };
    if src.bal < value {
        return false;
    }
    src.bal -= value;
    st.entry(to).bal += value;
    true
}

/// Executes `contract`'s code in place. Returns false on abort, leaving `st`
/// partially modified; callers roll back.
pub(crate) fn run(st: &mut AccountState, contract: Address, caller: Address) -> bool {
    let code = match st.get(&contract) {
        Some(acc) => acc.code.clone(),
        None => return true,
    };
    for ins in code.iter().take(MAX_CODE_LEN) {
        match ins {
            Instruction::Pay { to, amount } => {
                let bal = st.balance(&contract);
                let amt = match amount {
                    Amount::Const(n) => (*n).min(bal),
                    Amount::FullBalance => bal,
                };
                transfer(st, contract, *to, amt);
            }
            Instruction::Store { key, value } => {
                st.entry(contract).storage.insert(*key, *value);
            }
            Instruction::RequireSender { addr } => {
                if caller != *addr {
                    return false;
                }
            }
            Instruction::Halt => return true,
            Instruction::Abort => return false,
        }
    }
    true
}
