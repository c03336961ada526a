//! Liveness analysis and combinational-loop detection.
//!
//! A program realizes a legal circuit when its live slots (the transitive
//! fan-in of the output) contain no same-cycle dependency cycle. Flip-flops
//! read their operands one cycle late, so they break loops; a loop confined to
//! dead slots does not invalidate the program because the realized circuit
//! never evaluates it.

use std::collections::BTreeSet;

use crate::ir::{Program, Reg};

/// Outcome of [`validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidityReport {
    pub valid: bool,
    pub live_slots: BTreeSet<usize>,
    /// Registers forming a combinational cycle, present iff `valid` is false.
    pub loop_witness: Option<Vec<Reg>>,
}

/// Slots in the transitive fan-in of the output register, traversing both
/// combinational and sequential edges. Slots outside the set cannot affect
/// the output bitstream.
pub fn dead_code_eliminate(p: &Program) -> BTreeSet<usize> {
    let mut live = BTreeSet::new();
    let mut stack = vec![p.slot_of(p.output()).expect("output is a slot dst")];
    while let Some(slot) = stack.pop() {
        if !live.insert(slot) {
            continue;
        }
        for &r in p.instruction(slot).operands() {
            if let Some(src) = p.slot_of(r) {
                if !live.contains(&src) {
                    stack.push(src);
                }
            }
        }
    }
    live
}

/// Searches the live sub-circuit for a same-cycle dependency cycle and
/// returns the registers on one such cycle if it exists.
///
/// Edges run from an operand's driving slot to the consuming slot, but only
/// when the consumer is combinational; DFF and TFF read `src[n-1]` (and TFF
/// its own `dst[n-1]`), contributing no same-cycle edges.
pub fn check_combinational_loops(p: &Program, live: &BTreeSet<usize>) -> Option<Vec<Reg>> {
    match topo_order_comb(p, live) {
        Ok(_) => None,
        Err(cycle) => Some(cycle.into_iter().map(|slot| p.dst(slot)).collect()),
    }
}

/// Composes dead-code elimination with the loop check on the live subgraph.
pub fn validate(p: &Program) -> ValidityReport {
    let live_slots = dead_code_eliminate(p);
    let loop_witness = check_combinational_loops(p, &live_slots);
    ValidityReport {
        valid: loop_witness.is_none(),
        live_slots,
        loop_witness,
    }
}

/// Topologically orders the live *combinational* slots so that every slot
/// appears after the slots it reads in the same cycle. Returns the slots of a
/// combinational cycle on failure.
pub(crate) fn topo_order_comb(
    p: &Program,
    live: &BTreeSet<usize>,
) -> Result<Vec<usize>, Vec<usize>> {
    // indegree over live combinational slots; edges src-slot -> consumer.
    let n = p.len();
    let mut indegree = vec![0usize; n];
    let mut consumers: Vec<Vec<usize>> = vec![Vec::new(); n];
    let comb = |slot: usize| !p.instruction(slot).opcode.is_sequential();

    for &slot in live {
        if !comb(slot) {
            continue;
        }
        for &r in p.instruction(slot).operands() {
            if let Some(src) = p.slot_of(r) {
                if comb(src) {
                    debug_assert!(live.contains(&src));
                    consumers[src].push(slot);
                    indegree[slot] += 1;
                }
            }
        }
    }

    let mut order: Vec<usize> = Vec::new();
    let mut queue: Vec<usize> = live
        .iter()
        .copied()
        .filter(|&s| comb(s) && indegree[s] == 0)
        .collect();
    let mut head = 0;
    while head < queue.len() {
        let slot = queue[head];
        head += 1;
        order.push(slot);
        for &c in &consumers[slot] {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                queue.push(c);
            }
        }
    }

    let n_comb_live = live.iter().filter(|&&s| comb(s)).count();
    if order.len() == n_comb_live {
        return Ok(order);
    }

    // Some combinational slots never reached indegree zero; they feed a cycle.
    // Walk predecessors among the stuck slots until one repeats.
    let stuck: BTreeSet<usize> = live
        .iter()
        .copied()
        .filter(|&s| comb(s) && indegree[s] > 0)
        .collect();
    let pred = |slot: usize| -> usize {
        p.instruction(slot)
            .operands()
            .iter()
            .filter_map(|&r| p.slot_of(r))
            .find(|src| stuck.contains(src))
            .expect("stuck slot has a stuck predecessor")
    };
    let mut seen = Vec::new();
    let mut cur = *stuck.iter().next().expect("cycle exists");
    while !seen.contains(&cur) {
        seen.push(cur);
        cur = pred(cur);
    }
    let start = seen.iter().position(|&s| s == cur).unwrap();
    let mut cycle = seen.split_off(start);
    cycle.reverse(); // follow dataflow direction
    Err(cycle)
}

/// Rebuilds a program containing only the live slots of `p`, renumbering
/// registers accordingly. The output wire is preserved.
pub fn strip_dead(p: &Program) -> Program {
    let live = dead_code_eliminate(p);
    let slots: Vec<usize> = live.iter().copied().collect();
    let remap = |r: Reg| -> Reg {
        match p.slot_of(r) {
            None => r,
            Some(slot) => {
                let new_slot = slots.binary_search(&slot).expect("live operand slot");
                Reg((p.n_inputs() + new_slot) as u32)
            }
        }
    };
    let instructions = slots
        .iter()
        .map(|&slot| {
            let instr = p.instruction(slot);
            let ops: Vec<Reg> = instr.operands().iter().map(|&r| remap(r)).collect();
            crate::ir::Instruction::new(instr.opcode, &ops)
        })
        .collect();
    Program::new(p.n_inputs(), instructions)
}
