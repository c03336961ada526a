//! Synthesis of stochastic-computing circuits by MCMC search.
//!
//! Stochastic computing encodes a value as the fraction of 1s in a bitstream,
//! which lets arithmetic be built from a handful of gates and flip-flops.
//! This crate searches the space of small sequential circuits for one that
//! realizes a target function on user-specified test cases, including the
//! correlation conditions between input streams. It also ships a
//! cycle-accurate simulator, an exhaustive-search baseline for small circuit
//! sizes, and a benchmark registry of standard arithmetic targets.

pub mod bench;
pub mod bitgen;
pub mod cost;
pub mod exhaustive;
pub mod ir;
pub mod sim;
pub mod specfile;
pub mod synth;
pub mod validity;

pub use bitgen::{Bitstream, CorrelationClass, SequenceKind};
pub use cost::{evaluate_cost, make_test_suite, InputSpec, TargetSpec, TestSuite};
pub use ir::{Instruction, NetlistError, Opcode, Program, Reg};
pub use sim::{simulate, CompiledCircuit, SimError};
pub use synth::{synthesize, SynthConfig, SynthesisResult};
pub use validity::{validate, ValidityReport};
