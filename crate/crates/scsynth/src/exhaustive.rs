//! Brute-force enumeration baseline for small circuits.
//!
//! The candidate space fixes one destination per slot and ranges every
//! operand over the full register pool, so it holds
//! `(sum over opcodes of pool^arity)^length` programs. That grows by roughly
//! three orders of magnitude per added slot, which is why enumeration is only
//! a baseline: it guarantees optimality where it is tractable at all.

use num_bigint::BigUint;
use thiserror::Error;

use crate::cost::{evaluate_cost, TestSuite};
use crate::ir::{Instruction, Opcode, Program, Reg};

/// The candidate space for a given shape.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnumSpace {
    pub n_inputs: usize,
    pub length: usize,
    pub total_candidates: BigUint,
}

impl EnumSpace {
    pub fn new(n_inputs: usize, length: usize) -> EnumSpace {
        EnumSpace {
            n_inputs,
            length,
            total_candidates: count_candidates(n_inputs, length),
        }
    }
}

/// Exact candidate count: per slot, every opcode with every combination of
/// operands drawn from the `n_inputs + length` register pool.
pub fn count_candidates(n_inputs: usize, length: usize) -> BigUint {
    assert!(n_inputs >= 1 && length >= 1);
    let pool = BigUint::from(n_inputs + length);
    let per_slot: BigUint = Opcode::ALL
        .iter()
        .map(|op| pool.pow(op.arity() as u32))
        .sum();
    per_slot.pow(length as u32)
}

#[derive(Debug, Error, PartialEq)]
pub enum EnumError {
    #[error("candidate space holds {count} programs, above the limit of {limit}")]
    SpaceTooLarge { count: BigUint, limit: u64 },
}

/// Per-slot candidate count as a machine integer (valid whenever the space
/// passed the limit check).
fn slot_space(pool: usize) -> u64 {
    Opcode::ALL
        .iter()
        .map(|op| (pool as u64).pow(op.arity() as u32))
        .sum()
}

fn decode_slot(mut idx: u64, pool: usize) -> Instruction {
    for op in Opcode::ALL {
        let span = (pool as u64).pow(op.arity() as u32);
        if idx < span {
            let mut ops = [Reg(0); 3];
            for k in (0..op.arity()).rev() {
                ops[k] = Reg((idx % pool as u64) as u32);
                idx /= pool as u64;
            }
            return Instruction::new(op, &ops[..op.arity()]);
        }
        idx -= span;
    }
    unreachable!("slot index within per-slot space")
}

/// Evaluates every candidate of the given shape and returns a minimum-cost
/// program, ties broken by enumeration order. Invalid candidates fold into
/// the search through their cost of 1.0.
pub fn enumerate_best(
    suite: &TestSuite,
    n_inputs: usize,
    length: usize,
    limit: u64,
) -> Result<(Program, f64), EnumError> {
    let count = count_candidates(n_inputs, length);
    if count > BigUint::from(limit) {
        return Err(EnumError::SpaceTooLarge { count, limit });
    }
    let total: u64 = count.try_into().expect("count fits after limit check");
    let pool = n_inputs + length;
    let per_slot = slot_space(pool);

    let mut best: Option<(Program, f64)> = None;
    for idx in 0..total {
        let mut rest = idx;
        let instructions: Vec<Instruction> = (0..length)
            .map(|_| {
                let slot_idx = rest % per_slot;
                rest /= per_slot;
                decode_slot(slot_idx, pool)
            })
            .collect();
        let p = Program::new(n_inputs, instructions);
        let cost = evaluate_cost(&p, suite);
        let better = match &best {
            None => true,
            Some((_, c)) => cost < *c,
        };
        if better {
            let exact = cost == 0.0;
            best = Some((p, cost));
            if exact {
                break;
            }
        }
    }
    Ok(best.expect("space is non-empty"))
}
