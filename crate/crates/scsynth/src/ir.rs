//! Hardware instruction set, register model, and program representation.
//!
//! A program is a fixed-length list of instructions over a register file.
//! Registers `r0..r{n_inputs-1}` are circuit inputs; the instruction in slot
//! `k` always drives register `r{n_inputs + k}`, so every wire has exactly one
//! driver (single static assignment by construction). Operands may reference
//! any register in the pool, including destinations of later slots: feedback
//! is expressed structurally and judged legal or not by the validity pass.

use std::fmt;

use rand::Rng;
use thiserror::Error;

/// Primitive operations available to a circuit slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Opcode {
    And,
    Or,
    Xor,
    Not,
    Pass,
    Dff,
    Tff,
    Mux,
}

impl Opcode {
    pub const ALL: [Opcode; 8] = [
        Opcode::And,
        Opcode::Or,
        Opcode::Xor,
        Opcode::Not,
        Opcode::Pass,
        Opcode::Dff,
        Opcode::Tff,
        Opcode::Mux,
    ];

    /// Number of input operands. MUX order is `src, trg, sel`.
    pub fn arity(self) -> usize {
        match self {
            Opcode::Not | Opcode::Pass | Opcode::Dff | Opcode::Tff => 1,
            Opcode::And | Opcode::Or | Opcode::Xor => 2,
            Opcode::Mux => 3,
        }
    }

    /// DFF and TFF read their operands one cycle late; everything else is
    /// combinational (MUX in all three inputs).
    pub fn is_sequential(self) -> bool {
        matches!(self, Opcode::Dff | Opcode::Tff)
    }

    pub fn name(self) -> &'static str {
        match self {
            Opcode::And => "AND",
            Opcode::Or => "OR",
            Opcode::Xor => "XOR",
            Opcode::Not => "NOT",
            Opcode::Pass => "PASS",
            Opcode::Dff => "DFF",
            Opcode::Tff => "TFF",
            Opcode::Mux => "MUX",
        }
    }

    fn parse(s: &str) -> Option<Opcode> {
        Some(match s.to_ascii_uppercase().as_str() {
            "AND" => Opcode::And,
            "OR" => Opcode::Or,
            "XOR" => Opcode::Xor,
            "NOT" => Opcode::Not,
            "PASS" => Opcode::Pass,
            "DFF" => Opcode::Dff,
            "TFF" => Opcode::Tff,
            "MUX" => Opcode::Mux,
            _ => return None,
        })
    }
}

impl fmt::Display for Opcode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Index into the register file. Written `r<k>` in netlists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Reg(pub u32);

impl Reg {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for Reg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "r{}", self.0)
    }
}

/// One slot of a program. The destination register is implied by the slot
/// index and is not stored; unused operand positions are kept at `r0` so that
/// structural equality is well defined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Instruction {
    pub opcode: Opcode,
    ops: [Reg; 3],
}

impl Instruction {
    pub fn new(opcode: Opcode, operands: &[Reg]) -> Instruction {
        assert_eq!(operands.len(), opcode.arity(), "operand count mismatch");
        let mut ops = [Reg(0); 3];
        ops[..operands.len()].copy_from_slice(operands);
        Instruction { opcode, ops }
    }

    pub fn operands(&self) -> &[Reg] {
        &self.ops[..self.opcode.arity()]
    }

    pub fn operand(&self, pos: usize) -> Reg {
        debug_assert!(pos < self.opcode.arity());
        self.ops[pos]
    }

    pub fn set_operand(&mut self, pos: usize, reg: Reg) {
        debug_assert!(pos < self.opcode.arity());
        self.ops[pos] = reg;
    }
}

/// Errors produced while reading a netlist.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum NetlistError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("register {reg} is driven by more than one instruction")]
    DoublyDriven { reg: Reg },
    #[error("line {line}: instruction drives input register {reg}")]
    DrivesInput { line: usize, reg: Reg },
    #[error("line {line}: register {reg} is outside the pool of {pool} registers")]
    OutOfRange { line: usize, reg: Reg, pool: usize },
    #[error("output {reg} is not driven by any instruction")]
    UndrivenOutput { reg: Reg },
    #[error("netlist has no instructions")]
    Empty,
    #[error("missing `inputs <n>` header")]
    MissingHeader,
    #[error("missing `output r<k>` footer")]
    MissingOutput,
}

/// A circuit expressed as `n_inputs` input registers plus one instruction per
/// slot. The output wire is the destination of the last slot; any circuit is
/// expressible under that convention because PASS can route a wire forward.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Program {
    n_inputs: usize,
    instructions: Vec<Instruction>,
}

impl Program {
    pub fn new(n_inputs: usize, instructions: Vec<Instruction>) -> Program {
        assert!(n_inputs >= 1 && !instructions.is_empty());
        let p = Program {
            n_inputs,
            instructions,
        };
        let pool = p.pool_size();
        for instr in &p.instructions {
            for &r in instr.operands() {
                assert!(r.index() < pool, "operand {r} outside register pool");
            }
        }
        p
    }

    /// Draws a uniformly random opcode and uniformly random operands (from the
    /// full register pool) for every slot. The result may realize an invalid
    /// circuit; validity is checked later.
    pub fn random<R: Rng + ?Sized>(n_inputs: usize, length: usize, rng: &mut R) -> Program {
        assert!(n_inputs >= 1 && length >= 1);
        let pool = n_inputs + length;
        let instructions = (0..length).map(|_| random_instruction(pool, rng)).collect();
        Program {
            n_inputs,
            instructions,
        }
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn len(&self) -> usize {
        self.instructions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instructions.is_empty()
    }

    /// Registers addressable as operands: all inputs plus all destinations.
    pub fn pool_size(&self) -> usize {
        self.n_inputs + self.instructions.len()
    }

    pub fn instructions(&self) -> &[Instruction] {
        &self.instructions
    }

    pub fn instruction(&self, slot: usize) -> &Instruction {
        &self.instructions[slot]
    }

    pub fn instruction_mut(&mut self, slot: usize) -> &mut Instruction {
        &mut self.instructions[slot]
    }

    /// Destination register of a slot.
    pub fn dst(&self, slot: usize) -> Reg {
        Reg((self.n_inputs + slot) as u32)
    }

    /// Slot index driving `reg`, or `None` for input registers.
    pub fn slot_of(&self, reg: Reg) -> Option<usize> {
        (reg.index() >= self.n_inputs).then(|| reg.index() - self.n_inputs)
    }

    pub fn is_input(&self, reg: Reg) -> bool {
        reg.index() < self.n_inputs
    }

    /// The circuit output: destination of the final slot.
    pub fn output(&self) -> Reg {
        self.dst(self.instructions.len() - 1)
    }

    /// Parses the line-oriented netlist format. Instructions may appear in any
    /// order; they are placed into slots by destination register. A footer
    /// naming a register other than the last destination is normalized by
    /// swapping the two wire names throughout, which preserves the circuit.
    pub fn from_netlist(text: &str) -> Result<Program, NetlistError> {
        parse_netlist(text)
    }

    /// Canonical netlist text; `Program::from_netlist` round-trips it.
    pub fn to_netlist(&self) -> String {
        let mut out = format!("inputs {}\n", self.n_inputs);
        for (slot, instr) in self.instructions.iter().enumerate() {
            out.push_str(instr.opcode.name());
            for r in instr.operands() {
                out.push_str(&format!(" {r}"));
            }
            out.push_str(&format!(" -> {}\n", self.dst(slot)));
        }
        out.push_str(&format!("output {}\n", self.output()));
        out
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_netlist())
    }
}

pub(crate) fn random_instruction<R: Rng + ?Sized>(pool: usize, rng: &mut R) -> Instruction {
    let opcode = Opcode::ALL[rng.random_range(0..Opcode::ALL.len())];
    let mut ops = [Reg(0); 3];
    for op in ops.iter_mut().take(opcode.arity()) {
        *op = Reg(rng.random_range(0..pool as u32));
    }
    Instruction { opcode, ops }
}

fn parse_reg(tok: &str, line: usize) -> Result<Reg, NetlistError> {
    let body = tok.strip_prefix('r').ok_or_else(|| NetlistError::Parse {
        line,
        msg: format!("expected register `r<k>`, got `{tok}`"),
    })?;
    let idx: u32 = body.parse().map_err(|_| NetlistError::Parse {
        line,
        msg: format!("invalid register index `{tok}`"),
    })?;
    Ok(Reg(idx))
}

fn parse_netlist(text: &str) -> Result<Program, NetlistError> {
    let mut n_inputs: Option<usize> = None;
    let mut output: Option<(Reg, usize)> = None;
    let mut parsed: Vec<(Opcode, Vec<Reg>, Reg, usize)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let stripped = raw.split('#').next().unwrap_or("").trim();
        if stripped.is_empty() {
            continue;
        }
        let toks: Vec<&str> = stripped.split_whitespace().collect();
        match toks[0] {
            "inputs" => {
                if n_inputs.is_some() {
                    return Err(NetlistError::Parse {
                        line,
                        msg: "duplicate `inputs` header".into(),
                    });
                }
                let n = toks
                    .get(1)
                    .and_then(|t| t.parse::<usize>().ok())
                    .filter(|&n| n >= 1)
                    .ok_or_else(|| NetlistError::Parse {
                        line,
                        msg: "`inputs` expects a count of at least 1".into(),
                    })?;
                if toks.len() > 2 {
                    return Err(NetlistError::Parse {
                        line,
                        msg: "trailing tokens after `inputs <n>`".into(),
                    });
                }
                n_inputs = Some(n);
            }
            "output" => {
                if output.is_some() {
                    return Err(NetlistError::Parse {
                        line,
                        msg: "duplicate `output` footer".into(),
                    });
                }
                if toks.len() != 2 {
                    return Err(NetlistError::Parse {
                        line,
                        msg: "`output` expects exactly one register".into(),
                    });
                }
                output = Some((parse_reg(toks[1], line)?, line));
            }
            op_tok => {
                let opcode = Opcode::parse(op_tok).ok_or_else(|| NetlistError::Parse {
                    line,
                    msg: format!("unknown opcode `{op_tok}`"),
                })?;
                if n_inputs.is_none() {
                    return Err(NetlistError::MissingHeader);
                }
                let arrow = toks.len().checked_sub(2).filter(|&i| toks[i] == "->");
                let arrow = arrow.ok_or_else(|| NetlistError::Parse {
                    line,
                    msg: "expected `-> r<dst>` at end of instruction".into(),
                })?;
                let operand_toks = &toks[1..arrow];
                if operand_toks.len() != opcode.arity() {
                    return Err(NetlistError::Parse {
                        line,
                        msg: format!(
                            "{} takes {} operand(s), got {}",
                            opcode,
                            opcode.arity(),
                            operand_toks.len()
                        ),
                    });
                }
                let operands = operand_toks
                    .iter()
                    .map(|t| parse_reg(t, line))
                    .collect::<Result<Vec<_>, _>>()?;
                let dst = parse_reg(toks[toks.len() - 1], line)?;
                parsed.push((opcode, operands, dst, line));
            }
        }
    }

    let n_inputs = n_inputs.ok_or(NetlistError::MissingHeader)?;
    let (out_reg, _) = output.ok_or(NetlistError::MissingOutput)?;
    if parsed.is_empty() {
        return Err(NetlistError::Empty);
    }

    let length = parsed.len();
    let pool = n_inputs + length;
    let mut slots: Vec<Option<(Opcode, Vec<Reg>, usize)>> = vec![None; length];
    for (opcode, operands, dst, line) in parsed {
        if dst.index() < n_inputs {
            return Err(NetlistError::DrivesInput { line, reg: dst });
        }
        if dst.index() >= pool {
            return Err(NetlistError::OutOfRange {
                line,
                reg: dst,
                pool,
            });
        }
        for &r in &operands {
            if r.index() >= pool {
                return Err(NetlistError::OutOfRange { line, reg: r, pool });
            }
        }
        let slot = dst.index() - n_inputs;
        if slots[slot].is_some() {
            return Err(NetlistError::DoublyDriven { reg: dst });
        }
        slots[slot] = Some((opcode, operands, line));
    }
    // length instructions, length distinct in-range destinations: every slot
    // is filled.
    let mut instructions: Vec<Instruction> = slots
        .into_iter()
        .map(|s| {
            let (opcode, operands, _) = s.expect("slot filled by pigeonhole");
            Instruction::new(opcode, &operands)
        })
        .collect();

    if out_reg.index() < n_inputs || out_reg.index() >= pool {
        return Err(NetlistError::UndrivenOutput { reg: out_reg });
    }
    let last = Reg((pool - 1) as u32);
    if out_reg != last {
        // Rename the output wire to the last destination (and vice versa):
        // swap the two slots and rewrite operands. Wire names are arbitrary,
        // so the circuit is unchanged.
        let a = out_reg.index() - n_inputs;
        let b = last.index() - n_inputs;
        instructions.swap(a, b);
        for instr in &mut instructions {
            for pos in 0..instr.opcode.arity() {
                let r = instr.operand(pos);
                if r == out_reg {
                    instr.set_operand(pos, last);
                } else if r == last {
                    instr.set_operand(pos, out_reg);
                }
            }
        }
    }

    Ok(Program {
        n_inputs,
        instructions,
    })
}
