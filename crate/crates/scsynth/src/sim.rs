//! Cycle-accurate circuit evaluation.
//!
//! Per cycle, sequential slots first publish their destinations from values
//! latched at the previous cycle, then live combinational slots evaluate in
//! topological order. All flip-flops power on at 0, so `DFF` yields
//! `dst[n] = src[n-1]` with `dst[0] = 0` and `TFF` yields
//! `dst[n] = dst[n-1] ^ src[n-1]` with `dst[0] = 0`.
//!
//! [`simulate`] is the single-case reference. The crate-internal packed
//! evaluator runs many cases at once, one bit lane per case, with identical
//! per-cycle semantics; the equivalence is enforced by tests.

use thiserror::Error;

use crate::bitgen::Bitstream;
use crate::ir::{Opcode, Program, Reg};
use crate::validity::{dead_code_eliminate, topo_order_comb};

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("program realizes an invalid circuit: combinational loop through {}",
            .witness.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(" -> "))]
    InvalidCircuit { witness: Vec<Reg> },
    #[error("expected {expected} input bitstreams, got {got}")]
    WrongInputCount { expected: usize, got: usize },
    #[error("input {reg} has length {got}, expected {expected}")]
    LengthMismatch {
        reg: Reg,
        got: usize,
        expected: usize,
    },
}

/// A validated program with its live slots scheduled for evaluation.
#[derive(Debug, Clone)]
pub struct CompiledCircuit {
    program: Program,
    seq_slots: Vec<usize>,
    comb_order: Vec<usize>,
}

impl CompiledCircuit {
    pub fn compile(p: &Program) -> Result<CompiledCircuit, SimError> {
        let live = dead_code_eliminate(p);
        let comb_order = topo_order_comb(p, &live).map_err(|cycle| SimError::InvalidCircuit {
            witness: cycle.into_iter().map(|slot| p.dst(slot)).collect(),
        })?;
        let seq_slots = live
            .iter()
            .copied()
            .filter(|&s| p.instruction(s).opcode.is_sequential())
            .collect();
        Ok(CompiledCircuit {
            program: p.clone(),
            seq_slots,
            comb_order,
        })
    }

    pub fn program(&self) -> &Program {
        &self.program
    }

    fn check_inputs(&self, inputs: &[Bitstream], n_cycles: usize) -> Result<(), SimError> {
        if inputs.len() != self.program.n_inputs() {
            return Err(SimError::WrongInputCount {
                expected: self.program.n_inputs(),
                got: inputs.len(),
            });
        }
        for (i, s) in inputs.iter().enumerate() {
            if s.len() != n_cycles {
                return Err(SimError::LengthMismatch {
                    reg: Reg(i as u32),
                    got: s.len(),
                    expected: n_cycles,
                });
            }
        }
        Ok(())
    }

    /// Runs the circuit for `n_cycles` and returns the output register's
    /// bitstream.
    pub fn run(&self, inputs: &[Bitstream], n_cycles: usize) -> Result<Bitstream, SimError> {
        self.check_inputs(inputs, n_cycles)?;
        let p = &self.program;
        let mut regs = vec![false; p.pool_size()];
        let mut latch = vec![false; self.seq_slots.len()];
        let out_reg = p.output().index();
        let mut out = Vec::with_capacity(n_cycles);

        for n in 0..n_cycles {
            for (si, &slot) in self.seq_slots.iter().enumerate() {
                regs[p.dst(slot).index()] = latch[si];
            }
            for (i, stream) in inputs.iter().enumerate() {
                regs[i] = stream.bit(n);
            }
            for &slot in &self.comb_order {
                let instr = p.instruction(slot);
                let v = |pos: usize| regs[instr.operand(pos).index()];
                regs[p.dst(slot).index()] = match instr.opcode {
                    Opcode::And => v(0) & v(1),
                    Opcode::Or => v(0) | v(1),
                    Opcode::Xor => v(0) ^ v(1),
                    Opcode::Not => !v(0),
                    Opcode::Pass => v(0),
                    Opcode::Mux => {
                        if v(2) {
                            v(0)
                        } else {
                            v(1)
                        }
                    }
                    Opcode::Dff | Opcode::Tff => unreachable!("sequential slot in comb order"),
                };
            }
            out.push(regs[out_reg]);
            for (si, &slot) in self.seq_slots.iter().enumerate() {
                let instr = p.instruction(slot);
                let src = regs[instr.operand(0).index()];
                latch[si] = match instr.opcode {
                    Opcode::Dff => src,
                    Opcode::Tff => regs[p.dst(slot).index()] ^ src,
                    _ => unreachable!(),
                };
            }
        }
        Ok(Bitstream::from_bits(out))
    }
}

/// Simulates a valid program over `n_cycles`, binding `inputs[i]` to `r<i>`.
pub fn simulate(p: &Program, inputs: &[Bitstream], n_cycles: usize) -> Result<Bitstream, SimError> {
    CompiledCircuit::compile(p)?.run(inputs, n_cycles)
}

/// Input bitstreams for a batch of test cases, packed one case per bit lane.
#[derive(Debug, Clone)]
pub(crate) struct PackedCases {
    pub n_cases: usize,
    pub n_cycles: usize,
    words: usize,
    /// `inputs[reg][cycle * words + w]`
    inputs: Vec<Vec<u64>>,
}

impl PackedCases {
    /// `cases[c][i]` is the bitstream bound to input `i` in case `c`; all
    /// streams share one length.
    pub fn pack(cases: &[Vec<Bitstream>], n_inputs: usize, n_cycles: usize) -> PackedCases {
        let n_cases = cases.len();
        let words = n_cases.div_ceil(64).max(1);
        let mut inputs = vec![vec![0u64; n_cycles * words]; n_inputs];
        for (c, case) in cases.iter().enumerate() {
            debug_assert_eq!(case.len(), n_inputs);
            let (word, bit) = (c / 64, c % 64);
            for (i, stream) in case.iter().enumerate() {
                debug_assert_eq!(stream.len(), n_cycles);
                for n in 0..n_cycles {
                    if stream.bit(n) {
                        inputs[i][n * words + word] |= 1u64 << bit;
                    }
                }
            }
        }
        PackedCases {
            n_cases,
            n_cycles,
            words,
            inputs,
        }
    }
}

/// Runs every packed case through the circuit and returns, per case, how many
/// cycles drove the output high. Bit-exact with [`simulate`] lane by lane.
pub(crate) fn count_output_ones(cc: &CompiledCircuit, packed: &PackedCases) -> Vec<u32> {
    let p = &cc.program;
    debug_assert_eq!(packed.inputs.len(), p.n_inputs());
    let w = packed.words;
    let mut regs = vec![0u64; p.pool_size() * w];
    let mut latch = vec![0u64; cc.seq_slots.len() * w];
    // Vertical per-lane counters: plane b holds bit b of every lane's count.
    let n_planes = (usize::BITS - packed.n_cycles.leading_zeros()) as usize;
    let mut planes = vec![0u64; n_planes * w];
    let out_base = p.output().index() * w;

    for n in 0..packed.n_cycles {
        for (si, &slot) in cc.seq_slots.iter().enumerate() {
            let dst = p.dst(slot).index() * w;
            for k in 0..w {
                regs[dst + k] = latch[si * w + k];
            }
        }
        for (i, stream) in packed.inputs.iter().enumerate() {
            regs[i * w..i * w + w].copy_from_slice(&stream[n * w..n * w + w]);
        }
        for &slot in &cc.comb_order {
            let instr = p.instruction(slot);
            let dst = p.dst(slot).index() * w;
            for k in 0..w {
                let v = |pos: usize| regs[instr.operand(pos).index() * w + k];
                regs[dst + k] = match instr.opcode {
                    Opcode::And => v(0) & v(1),
                    Opcode::Or => v(0) | v(1),
                    Opcode::Xor => v(0) ^ v(1),
                    Opcode::Not => !v(0),
                    Opcode::Pass => v(0),
                    Opcode::Mux => (v(0) & v(2)) | (v(1) & !v(2)),
                    Opcode::Dff | Opcode::Tff => unreachable!(),
                };
            }
        }
        for k in 0..w {
            let mut carry = regs[out_base + k];
            for b in 0..n_planes {
                let plane = &mut planes[b * w + k];
                let sum = *plane ^ carry;
                carry &= *plane;
                *plane = sum;
            }
            debug_assert_eq!(carry, 0, "counter planes overflowed");
        }
        for (si, &slot) in cc.seq_slots.iter().enumerate() {
            let instr = p.instruction(slot);
            let src = instr.operand(0).index() * w;
            let dst = p.dst(slot).index() * w;
            for k in 0..w {
                latch[si * w + k] = match instr.opcode {
                    Opcode::Dff => regs[src + k],
                    Opcode::Tff => regs[dst + k] ^ regs[src + k],
                    _ => unreachable!(),
                };
            }
        }
    }

    (0..packed.n_cases)
        .map(|c| {
            let (word, bit) = (c / 64, c % 64);
            (0..n_planes)
                .map(|b| (((planes[b * w + word] >> bit) & 1) as u32) << b)
                .sum()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bitgen::{generate_sn, CorrelationClass, SequenceKind};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn prog(text: &str) -> Program {
        Program::from_netlist(text).unwrap()
    }

    fn bs(s: &str) -> Bitstream {
        s.parse().unwrap()
    }

    #[test]
    fn and_multiplier_worked_example() {
        let p = prog("inputs 2\nAND r0 r1 -> r2\noutput r2");
        let out = simulate(&p, &[bs("11101110"), bs("01110010")], 8).unwrap();
        assert_eq!(out.to_string(), "01100010");
        assert_eq!(out.decode_unipolar(), 0.375);
    }

    #[test]
    fn tff_recurrence() {
        let p = prog("inputs 1\nTFF r0 -> r1\noutput r1");
        let out = simulate(&p, &[bs("1111")], 4).unwrap();
        assert_eq!(out.to_string(), "0101");
        assert_eq!(out.decode_unipolar(), 0.5);
    }

    #[test]
    fn dff_delays_with_zero_fill() {
        let p = prog("inputs 1\nDFF r0 -> r1\noutput r1");
        let out = simulate(&p, &[bs("1011")], 4).unwrap();
        assert_eq!(out.to_string(), "0101");
    }

    #[test]
    fn scale_half_circuit_on_vdc_input() {
        let p = prog("inputs 1\nTFF r0 -> r1\nAND r0 r1 -> r2\noutput r2");
        let x = generate_sn(0.75, 8, SequenceKind::VanDerCorput, CorrelationClass(0)).unwrap();
        let out = simulate(&p, &[x], 8).unwrap();
        assert_eq!(out.decode_unipolar(), 0.375);
    }

    #[test]
    fn mux_scaled_adder_with_uncorrelated_select() {
        let p = prog("inputs 3\nMUX r0 r1 r2 -> r3\noutput r3");
        let n = 256;
        let mut worst: f64 = 0.0;
        for (x, y) in [(0.25, 0.75), (0.5, 0.5), (0.9, 0.1), (1.0, 0.5)] {
            let sx = generate_sn(x, n, SequenceKind::VanDerCorput, CorrelationClass(0)).unwrap();
            let sy = generate_sn(y, n, SequenceKind::VanDerCorput, CorrelationClass(0)).unwrap();
            let sel = generate_sn(0.5, n, SequenceKind::Lfsr, CorrelationClass(0)).unwrap();
            let out = simulate(&p, &[sx, sy, sel], n).unwrap();
            worst = worst.max((out.decode_unipolar() - (x + y) / 2.0).abs());
        }
        assert!(worst <= 0.05, "scaled adder error {worst}");
    }

    #[test]
    fn simulate_rejects_invalid_circuits() {
        let p = prog("inputs 1\nAND r0 r2 -> r1\nAND r0 r1 -> r2\noutput r2");
        assert!(matches!(
            simulate(&p, &[bs("1010")], 4),
            Err(SimError::InvalidCircuit { .. })
        ));
    }

    #[test]
    fn simulate_rejects_bad_bindings() {
        let p = prog("inputs 2\nAND r0 r1 -> r2\noutput r2");
        assert_eq!(
            simulate(&p, &[bs("1010")], 4),
            Err(SimError::WrongInputCount {
                expected: 2,
                got: 1
            })
        );
        assert_eq!(
            simulate(&p, &[bs("1010"), bs("10")], 4),
            Err(SimError::LengthMismatch {
                reg: Reg(1),
                got: 2,
                expected: 4
            })
        );
    }

    fn random_inputs<R: Rng>(n_inputs: usize, n_cycles: usize, rng: &mut R) -> Vec<Bitstream> {
        (0..n_inputs)
            .map(|_| Bitstream::from_bits((0..n_cycles).map(|_| rng.random()).collect()))
            .collect()
    }

    /// Permutes the slots of `p` (keeping the output-driving slot last) and
    /// renames destination registers accordingly.
    fn permute_slots<R: Rng>(p: &Program, rng: &mut R) -> Program {
        use crate::ir::Instruction;
        let l = p.len();
        let mut perm: Vec<usize> = (0..l - 1).collect();
        for i in (1..perm.len()).rev() {
            perm.swap(i, rng.random_range(0..=i));
        }
        perm.push(l - 1);
        // new slot j holds old slot perm[j]; old register -> new register map
        let mut new_of_old = vec![0u32; l];
        for (j, &old) in perm.iter().enumerate() {
            new_of_old[old] = (p.n_inputs() + j) as u32;
        }
        let remap = |r: Reg| match p.slot_of(r) {
            None => r,
            Some(slot) => Reg(new_of_old[slot]),
        };
        let instructions = perm
            .iter()
            .map(|&old| {
                let instr = p.instruction(old);
                let ops: Vec<Reg> = instr.operands().iter().map(|&r| remap(r)).collect();
                Instruction::new(instr.opcode, &ops)
            })
            .collect();
        Program::new(p.n_inputs(), instructions)
    }

    #[test]
    fn slot_permutation_leaves_output_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut tested = 0;
        while tested < 50 {
            let p = Program::random(2, 6, &mut rng);
            let inputs = random_inputs(2, 64, &mut rng);
            let Ok(base) = simulate(&p, &inputs, 64) else {
                continue;
            };
            let q = permute_slots(&p, &mut rng);
            let permuted = simulate(&q, &inputs, 64).unwrap();
            assert_eq!(base, permuted, "\n{p}\nvs\n{q}");
            tested += 1;
        }
    }

    #[test]
    fn prefix_of_longer_run_matches_shorter_run() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let mut tested = 0;
        while tested < 50 {
            let p = Program::random(2, 5, &mut rng);
            let inputs = random_inputs(2, 96, &mut rng);
            let Ok(long) = simulate(&p, &inputs, 96) else {
                continue;
            };
            let short_inputs: Vec<Bitstream> = inputs.iter().map(|s| s.truncated(40)).collect();
            let short = simulate(&p, &short_inputs, 40).unwrap();
            assert_eq!(long.truncated(40), short);
            tested += 1;
        }
    }

    #[test]
    fn combinational_programs_are_stateless() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut tested = 0;
        while tested < 50 {
            let p = Program::random(2, 4, &mut rng);
            if p.instructions().iter().any(|i| i.opcode.is_sequential()) {
                continue;
            }
            let inputs = random_inputs(2, 32, &mut rng);
            let Ok(base) = simulate(&p, &inputs, 32) else {
                continue;
            };
            let mut perm: Vec<usize> = (0..32).collect();
            for i in (1..perm.len()).rev() {
                perm.swap(i, rng.random_range(0..=i));
            }
            let shuffle =
                |s: &Bitstream| Bitstream::from_bits(perm.iter().map(|&n| s.bit(n)).collect());
            let shuffled_inputs: Vec<Bitstream> = inputs.iter().map(shuffle).collect();
            let shuffled_out = simulate(&p, &shuffled_inputs, 32).unwrap();
            assert_eq!(shuffled_out, shuffle(&base));
            tested += 1;
        }
    }

    #[test]
    fn dead_slots_never_affect_the_output() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let mut tested = 0;
        while tested < 50 {
            let p = Program::random(2, 6, &mut rng);
            let live = crate::validity::dead_code_eliminate(&p);
            if live.len() == p.len() {
                continue;
            }
            let inputs = random_inputs(2, 64, &mut rng);
            let Ok(base) = simulate(&p, &inputs, 64) else {
                continue;
            };
            let stripped = crate::validity::strip_dead(&p);
            let out = simulate(&stripped, &inputs, 64).unwrap();
            assert_eq!(base, out);
            tested += 1;
        }
    }

    #[test]
    fn packed_counts_match_reference_simulation() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let mut tested = 0;
        while tested < 40 {
            let n_inputs = rng.random_range(1..=3);
            let p = Program::random(n_inputs, rng.random_range(1..=6), &mut rng);
            let Ok(cc) = CompiledCircuit::compile(&p) else {
                continue;
            };
            let n_cycles = 48;
            let n_cases = rng.random_range(1..=130);
            let cases: Vec<Vec<Bitstream>> = (0..n_cases)
                .map(|_| random_inputs(n_inputs, n_cycles, &mut rng))
                .collect();
            let packed = PackedCases::pack(&cases, n_inputs, n_cycles);
            let counts = count_output_ones(&cc, &packed);
            for (case, &count) in cases.iter().zip(&counts) {
                let reference = cc.run(case, n_cycles).unwrap();
                assert_eq!(reference.ones() as u32, count, "\n{p}");
            }
            tested += 1;
        }
    }
}
