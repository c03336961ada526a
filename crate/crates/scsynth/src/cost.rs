//! Test-suite construction and program cost evaluation.
//!
//! A suite binds every input register to a generated bitstream per test case
//! and records the expected output value. Expected values are computed from
//! the *realized* (quantized) input probabilities and then floored onto the
//! output quantization grid of 1/N, so a circuit that is exact up to SN
//! quantization scores exactly zero. Invalid programs cost exactly 1.0;
//! otherwise cost is the mean absolute error over all cases, a value in
//! [0, 1] that is agnostic to SN length and case count.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::bitgen::{generate_sn, BitgenError, Bitstream, CorrelationClass, SequenceKind};
use crate::ir::Program;
use crate::sim::{count_output_ones, CompiledCircuit, PackedCases};

type TargetFn = dyn Fn(&[f64]) -> Option<f64> + Send + Sync;

/// Map from primary input values to a target output in [0, 1]. `None` marks a
/// sample where the function is undefined; such cases are excluded.
#[derive(Clone)]
pub struct TargetFunction(Arc<TargetFn>);

impl TargetFunction {
    pub fn new(f: impl Fn(&[f64]) -> Option<f64> + Send + Sync + 'static) -> TargetFunction {
        TargetFunction(Arc::new(f))
    }

    /// A function defined on every sample.
    pub fn total(f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> TargetFunction {
        TargetFunction(Arc::new(move |args| Some(f(args))))
    }

    pub fn eval(&self, args: &[f64]) -> Option<f64> {
        (self.0)(args)
    }
}

impl fmt::Debug for TargetFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("TargetFunction(..)")
    }
}

/// How one input register's bitstreams are generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InputSpec {
    pub kind: SequenceKind,
    pub class: CorrelationClass,
    /// When set, this input carries the same value as the referenced primary
    /// input in every test case (under its own kind and class). Used to let
    /// the search discover which correlation condition a circuit needs.
    pub duplicate_of: Option<usize>,
}

impl InputSpec {
    pub fn new(kind: SequenceKind, class: u32) -> InputSpec {
        InputSpec {
            kind,
            class: CorrelationClass(class),
            duplicate_of: None,
        }
    }

    pub fn duplicate(of: usize, kind: SequenceKind, class: u32) -> InputSpec {
        InputSpec {
            kind,
            class: CorrelationClass(class),
            duplicate_of: Some(of),
        }
    }
}

/// Everything needed to build a [`TestSuite`].
#[derive(Debug, Clone)]
pub struct TargetSpec {
    pub function: TargetFunction,
    pub inputs: Vec<InputSpec>,
    /// Sample points per primary input: the values `{i / (grid - 1)}`.
    pub grid: usize,
    /// SN length N.
    pub sn_length: usize,
}

impl TargetSpec {
    pub fn n_inputs(&self) -> usize {
        self.inputs.len()
    }

    /// Indices of inputs that carry their own grid dimension.
    pub fn primary_inputs(&self) -> Vec<usize> {
        (0..self.inputs.len())
            .filter(|&i| self.inputs[i].duplicate_of.is_none())
            .collect()
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SuiteError {
    #[error("grid must be at least 2, got {0}")]
    GridTooSmall(usize),
    #[error("a target spec needs at least one input")]
    NoInputs,
    #[error("input {input} duplicates input {of}, which is not a distinct primary input")]
    BadDuplicate { input: usize, of: usize },
    #[error(transparent)]
    Bitgen(#[from] BitgenError),
    #[error("the target function was undefined on every sample")]
    AllExcluded,
}

/// One input binding with its expected output value.
#[derive(Debug, Clone)]
pub struct TestCase {
    pub inputs: Vec<Bitstream>,
    pub expected: f64,
}

/// Immutable set of test cases; defines the cost landscape.
#[derive(Debug, Clone)]
pub struct TestSuite {
    cases: Vec<TestCase>,
    sn_length: usize,
    n_inputs: usize,
    excluded: usize,
    packed: PackedCases,
    expected: Vec<f64>,
}

impl TestSuite {
    pub fn new(cases: Vec<TestCase>, sn_length: usize, n_inputs: usize) -> TestSuite {
        Self::with_excluded(cases, sn_length, n_inputs, 0)
    }

    fn with_excluded(
        cases: Vec<TestCase>,
        sn_length: usize,
        n_inputs: usize,
        excluded: usize,
    ) -> TestSuite {
        assert!(!cases.is_empty(), "a test suite needs at least one case");
        for case in &cases {
            assert_eq!(case.inputs.len(), n_inputs);
            assert!((0.0..=1.0).contains(&case.expected));
            for s in &case.inputs {
                assert_eq!(s.len(), sn_length);
            }
        }
        let packed_inputs: Vec<Vec<Bitstream>> = cases.iter().map(|c| c.inputs.clone()).collect();
        let packed = PackedCases::pack(&packed_inputs, n_inputs, sn_length);
        let expected = cases.iter().map(|c| c.expected).collect();
        TestSuite {
            cases,
            sn_length,
            n_inputs,
            excluded,
            packed,
            expected,
        }
    }

    pub fn cases(&self) -> &[TestCase] {
        &self.cases
    }

    pub fn sn_length(&self) -> usize {
        self.sn_length
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    /// Samples dropped because the target function was undefined there.
    pub fn excluded(&self) -> usize {
        self.excluded
    }
}

/// Builds the Cartesian test-case grid for a target spec.
///
/// Each primary input sweeps the values `{i / (grid - 1)}`; duplicate inputs
/// replicate their primary's value under their own kind and class. The
/// expected output is the target function applied to the realized input
/// probabilities, clamped to [0, 1] and floored to the 1/N output grid.
pub fn make_test_suite(spec: &TargetSpec) -> Result<TestSuite, SuiteError> {
    if spec.inputs.is_empty() {
        return Err(SuiteError::NoInputs);
    }
    if spec.grid < 2 {
        return Err(SuiteError::GridTooSmall(spec.grid));
    }
    for (i, input) in spec.inputs.iter().enumerate() {
        if let Some(of) = input.duplicate_of {
            let ok = of != i && of < spec.inputs.len() && spec.inputs[of].duplicate_of.is_none();
            if !ok {
                return Err(SuiteError::BadDuplicate { input: i, of });
            }
        }
    }

    let primaries = spec.primary_inputs();
    let n = spec.sn_length;
    let grid = spec.grid;
    let mut cases = Vec::new();
    let mut excluded = 0usize;

    let mut odometer = vec![0usize; primaries.len()];
    loop {
        // Nominal value for every input: its own grid coordinate for
        // primaries, the primary's coordinate for duplicates.
        let mut values = vec![0.0f64; spec.inputs.len()];
        for (k, &i) in primaries.iter().enumerate() {
            values[i] = odometer[k] as f64 / (grid - 1) as f64;
        }
        for (i, input) in spec.inputs.iter().enumerate() {
            if let Some(of) = input.duplicate_of {
                values[i] = values[of];
            }
        }

        let streams = spec
            .inputs
            .iter()
            .enumerate()
            .map(|(i, input)| generate_sn(values[i], n, input.kind, input.class))
            .collect::<Result<Vec<_>, _>>()?;

        let realized: Vec<f64> = primaries
            .iter()
            .map(|&i| streams[i].decode_unipolar())
            .collect();
        match spec.function.eval(&realized) {
            None => excluded += 1,
            Some(y) => {
                let clamped = y.clamp(0.0, 1.0);
                let expected = (clamped * n as f64 + 1e-9).floor().min(n as f64) / n as f64;
                cases.push(TestCase {
                    inputs: streams,
                    expected,
                });
            }
        }

        // advance the odometer
        let mut k = 0;
        loop {
            if k == odometer.len() {
                if cases.is_empty() {
                    return Err(SuiteError::AllExcluded);
                }
                return Ok(TestSuite::with_excluded(
                    cases,
                    n,
                    spec.inputs.len(),
                    excluded,
                ));
            }
            odometer[k] += 1;
            if odometer[k] < grid {
                break;
            }
            odometer[k] = 0;
            k += 1;
        }
    }
}

/// Mean absolute error of the program over the suite; exactly 1.0 when the
/// program realizes an invalid circuit.
pub fn evaluate_cost(p: &Program, suite: &TestSuite) -> f64 {
    let Ok(cc) = CompiledCircuit::compile(p) else {
        return 1.0;
    };
    cost_of_compiled(&cc, suite)
}

pub(crate) fn cost_of_compiled(cc: &CompiledCircuit, suite: &TestSuite) -> f64 {
    let counts = count_output_ones(cc, &suite.packed);
    let n = suite.sn_length as f64;
    let total: f64 = counts
        .iter()
        .zip(&suite.expected)
        .map(|(&c, &e)| (f64::from(c) / n - e).abs())
        .sum();
    total / counts.len() as f64
}
