//! Registry of benchmark arithmetic targets and SN-length sweeps.
//!
//! Each benchmark pairs a target function with the correlation setup its
//! canonical circuit expects: correlated operands share a Van der Corput
//! class, uncorrelated operands use LFSRs with distinct seeds. Reference
//! errors and lengths are the best known results the synthesized circuits are
//! judged against; a run passes when it lands within [`PASS_TOLERANCE`] of
//! the reference error.

use std::f64::consts::TAU;

use thiserror::Error;

use crate::bitgen::SequenceKind;
use crate::cost::{
    evaluate_cost, make_test_suite, InputSpec, SuiteError, TargetFunction, TargetSpec,
};
use crate::ir::Program;
use crate::sim::{CompiledCircuit, SimError};
use crate::synth::{synthesize_chains, SynthConfig, SynthesisResult};
use crate::validity::strip_dead;

pub const DEFAULT_GRID: usize = 16;
pub const DEFAULT_SN_LENGTH: usize = 256;
/// A benchmark passes when `best_cost <= reference_error + PASS_TOLERANCE`.
pub const PASS_TOLERANCE: f64 = 0.05;

/// One registered arithmetic target.
#[derive(Debug, Clone)]
pub struct Benchmark {
    pub name: &'static str,
    pub formula: &'static str,
    pub inputs: Vec<InputSpec>,
    /// Default instruction count I for the search.
    pub program_length: usize,
    /// Best known absolute error for this target.
    pub reference_error: f64,
    /// Instruction count of the best known solution.
    pub reference_length: usize,
}

impl Benchmark {
    pub fn n_inputs(&self) -> usize {
        self.inputs.len()
    }

    pub fn target_spec(&self, grid: usize, sn_length: usize) -> TargetSpec {
        TargetSpec {
            function: builtin_target(self.name, grid).expect("registered name"),
            inputs: self.inputs.clone(),
            grid,
            sn_length,
        }
    }
}

/// The target function behind a benchmark name. `grid` feeds the division
/// guard, which excludes denominators below `2 / grid`.
pub fn builtin_target(name: &str, grid: usize) -> Option<TargetFunction> {
    Some(match name {
        "scaled_adder" => TargetFunction::total(|v| (v[0] + v[1]) / 2.0),
        "subtractor" => TargetFunction::total(|v| (v[0] - v[1]).abs()),
        "uncorr_multiplier" | "corr_multiplier" => TargetFunction::total(|v| v[0] * v[1]),
        "division" => {
            let floor = 2.0 / grid as f64;
            TargetFunction::new(move |v| (v[1] >= floor).then(|| (v[0] / v[1]).min(1.0)))
        }
        "scale_quarter" => TargetFunction::total(|v| v[0] / 4.0),
        "scale_third" => TargetFunction::total(|v| v[0] / 3.0),
        "scale_half" => TargetFunction::total(|v| v[0] / 2.0),
        "scaled_relu" => TargetFunction::total(|v| v[0].max(0.5)),
        "sqrt" => TargetFunction::total(|v| v[0].sqrt()),
        "sine" => TargetFunction::total(|v| ((TAU * v[0]).sin() + 1.0) / 2.0),
        "exponentiation" => TargetFunction::total(|v| v[0].powf(v[1])),
        "cosine" => TargetFunction::total(|v| ((TAU * v[0]).cos() + 1.0) / 2.0),
        _ => return None,
    })
}

/// Expected argument count of a builtin target.
pub fn builtin_arity(name: &str) -> Option<usize> {
    Some(match name {
        "scaled_adder" | "subtractor" | "uncorr_multiplier" | "corr_multiplier" | "division"
        | "exponentiation" => 2,
        "scale_quarter" | "scale_third" | "scale_half" | "scaled_relu" | "sqrt" | "sine"
        | "cosine" => 1,
        _ => return None,
    })
}

fn correlated_pair() -> Vec<InputSpec> {
    vec![
        InputSpec::new(SequenceKind::VanDerCorput, 0),
        InputSpec::new(SequenceKind::VanDerCorput, 0),
    ]
}

fn uncorrelated_pair() -> Vec<InputSpec> {
    vec![
        InputSpec::new(SequenceKind::Lfsr, 0),
        InputSpec::new(SequenceKind::Lfsr, 1),
    ]
}

fn single_vdc() -> Vec<InputSpec> {
    vec![InputSpec::new(SequenceKind::VanDerCorput, 0)]
}

/// All registered benchmarks, in report order.
pub fn benchmark_registry() -> Vec<Benchmark> {
    let entry = |name, formula, inputs, i, err, len| Benchmark {
        name,
        formula,
        inputs,
        program_length: i,
        reference_error: err,
        reference_length: len,
    };
    vec![
        entry(
            "scaled_adder",
            "(x + y) / 2",
            correlated_pair(),
            3,
            0.027,
            3,
        ),
        entry("subtractor", "|x - y|", correlated_pair(), 1, 0.0, 1),
        entry(
            "uncorr_multiplier",
            "x * y",
            uncorrelated_pair(),
            2,
            0.021,
            2,
        ),
        entry("division", "x / y", correlated_pair(), 2, 0.038, 2),
        entry("scale_quarter", "x / 4", single_vdc(), 5, 0.0, 5),
        entry("scale_third", "x / 3", single_vdc(), 5, 0.0, 5),
        entry("scale_half", "x / 2", single_vdc(), 2, 0.0, 2),
        entry("scaled_relu", "max(0.5, x)", single_vdc(), 16, 0.0, 16),
        entry("corr_multiplier", "x * y", correlated_pair(), 4, 0.035, 4),
        entry("sqrt", "sqrt(x)", single_vdc(), 5, 0.024, 5),
        entry("sine", "(sin(2*pi*x) + 1) / 2", single_vdc(), 8, 0.068, 8),
        entry("exponentiation", "x ^ y", correlated_pair(), 7, 0.031, 7),
        entry(
            "cosine",
            "(cos(2*pi*x) + 1) / 2",
            single_vdc(),
            10,
            0.15,
            10,
        ),
    ]
}

pub fn find_benchmark(name: &str) -> Option<Benchmark> {
    benchmark_registry().into_iter().find(|b| b.name == name)
}

/// Known-good hand-built circuits used to validate suites independently of
/// the search.
pub fn reference_circuit(name: &str) -> Option<Program> {
    let netlist = match name {
        "subtractor" => "inputs 2\nXOR r0 r1 -> r2\noutput r2",
        "scale_half" => "inputs 1\nTFF r0 -> r1\nAND r0 r1 -> r2\noutput r2",
        // AND with a flip-flop isolator on one operand.
        "uncorr_multiplier" => "inputs 2\nDFF r1 -> r2\nAND r0 r2 -> r3\noutput r3",
        // Select toggles on input differences, halving them between x and y.
        "scaled_adder" => "inputs 2\nXOR r0 r1 -> r2\nTFF r2 -> r3\nMUX r0 r1 r3 -> r4\noutput r4",
        _ => return None,
    };
    Some(Program::from_netlist(netlist).expect("reference netlists parse"))
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("unknown benchmark `{0}`")]
    UnknownBenchmark(String),
    #[error(transparent)]
    Suite(#[from] SuiteError),
}

#[derive(Debug, Clone)]
pub struct BenchmarkReport {
    pub name: String,
    pub program_length: usize,
    pub budget: u64,
    /// Best program found, dead slots stripped.
    pub best: Program,
    pub best_cost: f64,
    pub reference_error: f64,
    pub pass: bool,
    pub result: SynthesisResult,
}

/// Builds the benchmark's default suite, runs the search, and grades the
/// result against the reference error. `cfg` supplies budget, beta, seed and
/// early-stop; input count and program length come from the registry.
pub fn run_benchmark(
    name: &str,
    cfg: &SynthConfig,
    chains: usize,
) -> Result<BenchmarkReport, BenchError> {
    let bench = find_benchmark(name).ok_or_else(|| BenchError::UnknownBenchmark(name.into()))?;
    let suite = make_test_suite(&bench.target_spec(DEFAULT_GRID, DEFAULT_SN_LENGTH))?;
    let mut run_cfg = cfg.clone();
    run_cfg.n_inputs = bench.n_inputs();
    run_cfg.program_length = bench.program_length;
    let result = synthesize_chains(&run_cfg, &suite, chains);
    Ok(BenchmarkReport {
        name: bench.name.into(),
        program_length: bench.program_length,
        budget: run_cfg.budget,
        best: strip_dead(&result.best),
        best_cost: result.best_cost,
        reference_error: bench.reference_error,
        pass: result.best_cost <= bench.reference_error + PASS_TOLERANCE,
        result,
    })
}

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("sweep lengths must be at least 8, got {0}")]
    LengthTooShort(usize),
    #[error(transparent)]
    InvalidProgram(#[from] SimError),
    #[error(transparent)]
    Suite(#[from] SuiteError),
}

/// Re-evaluates one circuit on suites regenerated at each SN length and
/// returns `(length, mean absolute error)` rows in ascending length order.
pub fn sweep_lengths(
    p: &Program,
    spec: &TargetSpec,
    lengths: &[usize],
) -> Result<Vec<(usize, f64)>, SweepError> {
    if let Some(&short) = lengths.iter().find(|&&n| n < 8) {
        return Err(SweepError::LengthTooShort(short));
    }
    CompiledCircuit::compile(p)?;
    let mut sorted: Vec<usize> = lengths.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    sorted
        .into_iter()
        .map(|n| {
            let mut at_n = spec.clone();
            at_n.sn_length = n;
            let suite = make_test_suite(&at_n)?;
            Ok((n, evaluate_cost(p, &suite)))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_has_thirteen_unique_benchmarks() {
        let registry = benchmark_registry();
        assert_eq!(registry.len(), 13);
        let mut names: Vec<&str> = registry.iter().map(|b| b.name).collect();
        names.sort_unstable();
        names.dedup();
        assert_eq!(names.len(), 13);
    }

    #[test]
    fn registry_reference_values() {
        let sub = find_benchmark("subtractor").unwrap();
        assert_eq!(sub.reference_error, 0.0);
        assert_eq!(sub.reference_length, 1);
        assert_eq!(sub.program_length, 1);

        let sqrt = find_benchmark("sqrt").unwrap();
        assert_eq!(sqrt.reference_error, 0.024);
        assert_eq!(sqrt.reference_length, 5);
    }

    #[test]
    fn every_benchmark_builds_a_default_suite_in_unit_range() {
        for bench in benchmark_registry() {
            let suite = make_test_suite(&bench.target_spec(DEFAULT_GRID, DEFAULT_SN_LENGTH))
                .unwrap_or_else(|e| panic!("{}: {e}", bench.name));
            assert!(!suite.cases().is_empty(), "{}", bench.name);
            for case in suite.cases() {
                assert!(
                    (0.0..=1.0).contains(&case.expected),
                    "{}: expected {}",
                    bench.name,
                    case.expected
                );
            }
        }
    }

    #[test]
    fn hand_built_references_meet_reference_errors() {
        for (name, bound) in [
            ("subtractor", 0.0 + 0.02),
            ("scale_half", 0.0 + 0.02),
            ("uncorr_multiplier", 0.021 + 0.02),
            ("scaled_adder", 0.027 + 0.02),
        ] {
            let bench = find_benchmark(name).unwrap();
            let suite =
                make_test_suite(&bench.target_spec(DEFAULT_GRID, DEFAULT_SN_LENGTH)).unwrap();
            let circuit = reference_circuit(name).unwrap();
            let cost = evaluate_cost(&circuit, &suite);
            assert!(cost <= bound, "{name}: cost {cost} above {bound}");
        }
    }

    #[test]
    fn exact_references_score_zero() {
        for name in ["subtractor", "scale_half"] {
            let bench = find_benchmark(name).unwrap();
            let suite =
                make_test_suite(&bench.target_spec(DEFAULT_GRID, DEFAULT_SN_LENGTH)).unwrap();
            assert_eq!(
                evaluate_cost(&reference_circuit(name).unwrap(), &suite),
                0.0
            );
        }
    }

    #[test]
    fn exact_circuits_beat_every_single_gate_program() {
        // Only exact references are guaranteed to dominate the single-gate
        // space; on distinct-seed LFSRs a bare AND can edge out the isolator
        // multiplier because its operands are already decorrelated.
        for name in ["subtractor", "scale_half", "scaled_adder"] {
            let bench = find_benchmark(name).unwrap();
            let suite =
                make_test_suite(&bench.target_spec(DEFAULT_GRID, DEFAULT_SN_LENGTH)).unwrap();
            let reference = evaluate_cost(&reference_circuit(name).unwrap(), &suite);
            let (_, single_gate) =
                crate::exhaustive::enumerate_best(&suite, bench.n_inputs(), 1, 10_000).unwrap();
            assert!(
                reference <= single_gate,
                "{name}: {reference} vs best single gate {single_gate}"
            );
        }
    }

    #[test]
    fn run_benchmark_passes_on_the_subtractor() {
        let mut cfg = SynthConfig::new(2, 1);
        cfg.seed = 5;
        let report = run_benchmark("subtractor", &cfg, 1).unwrap();
        assert_eq!(report.best_cost, 0.0);
        assert!(report.pass);
    }

    #[test]
    fn run_benchmark_rejects_unknown_names() {
        let cfg = SynthConfig::new(1, 1);
        assert!(matches!(
            run_benchmark("nosuch", &cfg, 1),
            Err(BenchError::UnknownBenchmark(_))
        ));
    }

    #[test]
    fn subtractor_sweeps_exactly_across_lengths() {
        let bench = find_benchmark("subtractor").unwrap();
        let spec = bench.target_spec(DEFAULT_GRID, DEFAULT_SN_LENGTH);
        let rows = sweep_lengths(
            &reference_circuit("subtractor").unwrap(),
            &spec,
            &[1024, 64, 256],
        )
        .unwrap();
        assert_eq!(
            rows.iter().map(|r| r.0).collect::<Vec<_>>(),
            [64, 256, 1024]
        );
        assert!(rows.iter().all(|&(_, err)| err == 0.0), "{rows:?}");
    }

    #[test]
    fn scale_half_sweeps_exactly_across_lengths() {
        let bench = find_benchmark("scale_half").unwrap();
        let spec = bench.target_spec(DEFAULT_GRID, DEFAULT_SN_LENGTH);
        let rows = sweep_lengths(
            &reference_circuit("scale_half").unwrap(),
            &spec,
            &[64, 256, 1024],
        )
        .unwrap();
        assert!(rows.iter().all(|&(_, err)| err == 0.0), "{rows:?}");
    }

    #[test]
    fn sweep_rejects_short_lengths_and_invalid_circuits() {
        let bench = find_benchmark("subtractor").unwrap();
        let spec = bench.target_spec(DEFAULT_GRID, DEFAULT_SN_LENGTH);
        let p = reference_circuit("subtractor").unwrap();
        assert!(matches!(
            sweep_lengths(&p, &spec, &[4]),
            Err(SweepError::LengthTooShort(4))
        ));
        let looped =
            Program::from_netlist("inputs 2\nAND r0 r3 -> r2\nAND r1 r2 -> r3\noutput r3").unwrap();
        assert!(matches!(
            sweep_lengths(&looped, &spec, &[64]),
            Err(SweepError::InvalidProgram(_))
        ));
    }
}
