//! Flat key-value run specification files.
//!
//! A run spec names the target function, the input generators, and the search
//! hyperparameters in a diff-friendly line format:
//!
//! ```text
//! # SC subtractor, correlated operands
//! function = subtractor
//! n_inputs = 2
//! N = 256
//! I = 1
//! input.0.kind = vdc
//! input.0.class = 0
//! input.1.kind = vdc
//! input.1.class = 0
//! ```
//!
//! `function`, `n_inputs`, `N`, and `I` are required. Per-input keys live
//! under `input.<i>.`; omitted inputs default to Van der Corput class 0.
//! Unknown keys are rejected. The target is either a registered benchmark
//! function or `poly c0 c1 ...`, a univariate polynomial in the input value.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::bench::{builtin_arity, builtin_target};
use crate::bitgen::SequenceKind;
use crate::cost::{InputSpec, TargetFunction, TargetSpec};
use crate::synth::SynthConfig;

pub const DEFAULT_GRID: usize = 16;
pub const DEFAULT_BUDGET: u64 = 1_000_000;
pub const DEFAULT_BETA: f64 = 2.0;

/// Target function field: a registered name or polynomial coefficients
/// `c0 + c1*x + c2*x^2 + ...`.
#[derive(Debug, Clone, PartialEq)]
pub enum FunctionSpec {
    Named(String),
    Poly(Vec<f64>),
}

impl FunctionSpec {
    fn to_field(&self) -> String {
        match self {
            FunctionSpec::Named(name) => name.clone(),
            FunctionSpec::Poly(coeffs) => {
                let mut s = String::from("poly");
                for c in coeffs {
                    let _ = write!(s, " {c}");
                }
                s
            }
        }
    }
}

/// Parsed run spec, before functions are resolved.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpecFile {
    pub function: FunctionSpec,
    pub n_inputs: usize,
    pub inputs: Vec<InputSpec>,
    pub grid: usize,
    pub sn_length: usize,
    pub program_length: usize,
    pub budget: u64,
    pub beta: f64,
    pub seed: u64,
    pub chains: usize,
    pub early_stop: f64,
}

#[derive(Debug, Error, PartialEq)]
pub enum SpecFileError {
    #[error("line {line}: expected `key = value`")]
    BadLine { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key `{key}`")]
    DuplicateKey { line: usize, key: String },
    #[error("line {line}: invalid value for `{key}`: {msg}")]
    BadValue {
        line: usize,
        key: String,
        msg: String,
    },
    #[error("missing required field `{0}`")]
    MissingField(&'static str),
    #[error("`input.{0}` is out of range for n_inputs")]
    InputIndexOutOfRange(usize),
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("function `{name}` takes {expected} primary input(s), this spec has {got}")]
    ArityMismatch {
        name: String,
        expected: usize,
        got: usize,
    },
}

impl RunSpecFile {
    pub fn parse(text: &str) -> Result<RunSpecFile, SpecFileError> {
        let mut fields: BTreeMap<String, (String, usize)> = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let stripped = raw.split('#').next().unwrap_or("").trim();
            if stripped.is_empty() {
                continue;
            }
            let (key, value) = stripped
                .split_once('=')
                .ok_or(SpecFileError::BadLine { line })?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() || value.is_empty() {
                return Err(SpecFileError::BadLine { line });
            }
            if fields.insert(key.clone(), (value, line)).is_some() {
                return Err(SpecFileError::DuplicateKey { line, key });
            }
        }

        let mut take = |key: &str| fields.remove(key);

        fn number<T: std::str::FromStr>(
            key: &str,
            entry: Option<(String, usize)>,
            default: Option<T>,
        ) -> Result<T, SpecFileError> {
            match entry {
                None => default.ok_or(SpecFileError::MissingField(match key {
                    "function" => "function",
                    "n_inputs" => "n_inputs",
                    "N" => "N",
                    "I" => "I",
                    _ => "value",
                })),
                Some((value, line)) => value.parse::<T>().map_err(|_| SpecFileError::BadValue {
                    line,
                    key: key.into(),
                    msg: format!("`{value}` is not a valid number"),
                }),
            }
        }

        let function = match take("function") {
            None => return Err(SpecFileError::MissingField("function")),
            Some((value, line)) => {
                let mut toks = value.split_whitespace();
                let head = toks.next().unwrap();
                if head == "poly" {
                    let coeffs = toks
                        .map(|t| t.parse::<f64>())
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(|_| SpecFileError::BadValue {
                            line,
                            key: "function".into(),
                            msg: "polynomial coefficients must be numbers".into(),
                        })?;
                    if coeffs.is_empty() {
                        return Err(SpecFileError::BadValue {
                            line,
                            key: "function".into(),
                            msg: "`poly` needs at least one coefficient".into(),
                        });
                    }
                    FunctionSpec::Poly(coeffs)
                } else if toks.next().is_some() {
                    return Err(SpecFileError::BadValue {
                        line,
                        key: "function".into(),
                        msg: "expected a single function name or `poly c0 c1 ...`".into(),
                    });
                } else {
                    FunctionSpec::Named(head.to_string())
                }
            }
        };

        let n_inputs: usize = number("n_inputs", take("n_inputs"), None)?;
        if n_inputs == 0 {
            return Err(SpecFileError::MissingField("n_inputs"));
        }
        let sn_length: usize = number("N", take("N"), None)?;
        let program_length: usize = number("I", take("I"), None)?;
        let grid: usize = number("grid", take("grid"), Some(DEFAULT_GRID))?;
        let budget: u64 = number("budget", take("budget"), Some(DEFAULT_BUDGET))?;
        let beta: f64 = number("beta", take("beta"), Some(DEFAULT_BETA))?;
        let seed: u64 = number("seed", take("seed"), Some(0))?;
        let chains: usize = number("chains", take("chains"), Some(1))?;
        let early_stop: f64 = number("early_stop", take("early_stop"), Some(0.0))?;

        let mut inputs = vec![InputSpec::new(SequenceKind::VanDerCorput, 0); n_inputs];
        let remaining: Vec<(String, (String, usize))> = fields.into_iter().collect();
        for (key, (value, line)) in remaining {
            let parts: Vec<&str> = key.split('.').collect();
            let bad_key = || SpecFileError::UnknownKey {
                line,
                key: key.clone(),
            };
            if parts.len() != 3 || parts[0] != "input" {
                return Err(bad_key());
            }
            let idx: usize = parts[1].parse().map_err(|_| bad_key())?;
            if idx >= n_inputs {
                return Err(SpecFileError::InputIndexOutOfRange(idx));
            }
            match parts[2] {
                "kind" => {
                    inputs[idx].kind =
                        SequenceKind::parse(&value).ok_or_else(|| SpecFileError::BadValue {
                            line,
                            key: key.clone(),
                            msg: format!("`{value}` is not one of lfsr, vdc, halton3"),
                        })?;
                }
                "class" => {
                    inputs[idx].class.0 = value.parse().map_err(|_| SpecFileError::BadValue {
                        line,
                        key: key.clone(),
                        msg: format!("`{value}` is not a class id"),
                    })?;
                }
                "duplicate_of" => {
                    let of: usize = value.parse().map_err(|_| SpecFileError::BadValue {
                        line,
                        key: key.clone(),
                        msg: format!("`{value}` is not an input index"),
                    })?;
                    inputs[idx].duplicate_of = Some(of);
                }
                _ => return Err(bad_key()),
            }
        }

        Ok(RunSpecFile {
            function,
            n_inputs,
            inputs,
            grid,
            sn_length,
            program_length,
            budget,
            beta,
            seed,
            chains,
            early_stop,
        })
    }

    /// Canonical text listing every resolved field; parsing it reproduces
    /// this value exactly.
    pub fn format(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "function = {}", self.function.to_field());
        let _ = writeln!(out, "n_inputs = {}", self.n_inputs);
        let _ = writeln!(out, "N = {}", self.sn_length);
        let _ = writeln!(out, "I = {}", self.program_length);
        let _ = writeln!(out, "grid = {}", self.grid);
        let _ = writeln!(out, "budget = {}", self.budget);
        let _ = writeln!(out, "beta = {}", self.beta);
        let _ = writeln!(out, "seed = {}", self.seed);
        let _ = writeln!(out, "chains = {}", self.chains);
        let _ = writeln!(out, "early_stop = {}", self.early_stop);
        for (i, input) in self.inputs.iter().enumerate() {
            let _ = writeln!(out, "input.{i}.kind = {}", input.kind.name());
            let _ = writeln!(out, "input.{i}.class = {}", input.class.0);
            if let Some(of) = input.duplicate_of {
                let _ = writeln!(out, "input.{i}.duplicate_of = {of}");
            }
        }
        out
    }

    fn target_function(&self) -> Result<TargetFunction, SpecFileError> {
        let primaries = self
            .inputs
            .iter()
            .filter(|i| i.duplicate_of.is_none())
            .count();
        match &self.function {
            FunctionSpec::Named(name) => {
                let target = builtin_target(name, self.grid)
                    .ok_or_else(|| SpecFileError::UnknownFunction(name.clone()))?;
                let expected = builtin_arity(name).expect("arity known for builtin");
                if primaries != expected {
                    return Err(SpecFileError::ArityMismatch {
                        name: name.clone(),
                        expected,
                        got: primaries,
                    });
                }
                Ok(target)
            }
            FunctionSpec::Poly(coeffs) => {
                if primaries != 1 {
                    return Err(SpecFileError::ArityMismatch {
                        name: "poly".into(),
                        expected: 1,
                        got: primaries,
                    });
                }
                let coeffs = coeffs.clone();
                Ok(TargetFunction::total(move |v| {
                    coeffs.iter().rev().fold(0.0, |acc, &c| acc * v[0] + c)
                }))
            }
        }
    }

    /// Builds the target spec and search config this file describes.
    pub fn resolve(&self) -> Result<(TargetSpec, SynthConfig), SpecFileError> {
        let target = TargetSpec {
            function: self.target_function()?,
            inputs: self.inputs.clone(),
            grid: self.grid,
            sn_length: self.sn_length,
        };
        let mut synth = SynthConfig::new(self.n_inputs, self.program_length);
        synth.budget = self.budget;
        synth.beta = self.beta;
        synth.seed = self.seed;
        synth.early_stop_cost = self.early_stop;
        Ok((target, synth))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SUBTRACTOR: &str = "\
# subtractor, correlated operands
function = subtractor
n_inputs = 2
N = 256
I = 1
";

    #[test]
    fn parses_with_defaults() {
        let spec = RunSpecFile::parse(SUBTRACTOR).unwrap();
        assert_eq!(spec.function, FunctionSpec::Named("subtractor".into()));
        assert_eq!(spec.grid, 16);
        assert_eq!(spec.budget, 1_000_000);
        assert_eq!(spec.beta, 2.0);
        assert_eq!(spec.chains, 1);
        assert_eq!(spec.inputs.len(), 2);
        assert_eq!(
            spec.inputs[0],
            InputSpec::new(SequenceKind::VanDerCorput, 0)
        );
    }

    #[test]
    fn missing_n_is_reported_by_field_name() {
        let err = RunSpecFile::parse("function = subtractor\nn_inputs = 2\nI = 1\n").unwrap_err();
        assert_eq!(err, SpecFileError::MissingField("N"));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let err = RunSpecFile::parse(&format!("{SUBTRACTOR}wibble = 3\n")).unwrap_err();
        assert_eq!(
            err,
            SpecFileError::UnknownKey {
                line: 6,
                key: "wibble".into()
            }
        );
    }

    #[test]
    fn input_keys_configure_generators() {
        let text =
            format!("{SUBTRACTOR}input.0.kind = lfsr\ninput.0.class = 3\ninput.1.kind = halton3\n");
        let spec = RunSpecFile::parse(&text).unwrap();
        assert_eq!(spec.inputs[0].kind, SequenceKind::Lfsr);
        assert_eq!(spec.inputs[0].class.0, 3);
        assert_eq!(spec.inputs[1].kind, SequenceKind::Halton3);
    }

    #[test]
    fn out_of_range_input_index_is_rejected() {
        let err = RunSpecFile::parse(&format!("{SUBTRACTOR}input.7.kind = lfsr\n")).unwrap_err();
        assert_eq!(err, SpecFileError::InputIndexOutOfRange(7));
    }

    #[test]
    fn format_round_trips() {
        let text = format!(
            "{SUBTRACTOR}seed = 9\nchains = 4\ninput.0.class = 2\nbudget = 5000\nbeta = 1.5\n"
        );
        let spec = RunSpecFile::parse(&text).unwrap();
        let dumped = spec.format();
        assert_eq!(RunSpecFile::parse(&dumped).unwrap(), spec);
    }

    #[test]
    fn poly_round_trips_and_resolves() {
        let text = "function = poly 0.5 0.25\nn_inputs = 1\nN = 64\nI = 2\n";
        let spec = RunSpecFile::parse(text).unwrap();
        assert_eq!(spec.function, FunctionSpec::Poly(vec![0.5, 0.25]));
        let reparsed = RunSpecFile::parse(&spec.format()).unwrap();
        assert_eq!(reparsed, spec);
        let (target, _) = spec.resolve().unwrap();
        // 0.5 + 0.25 * 0.5 = 0.625
        assert!((target.function.eval(&[0.5]).unwrap() - 0.625).abs() < 1e-12);
    }

    #[test]
    fn named_function_arity_is_checked() {
        let err = RunSpecFile::parse("function = sqrt\nn_inputs = 2\nN = 64\nI = 2\n")
            .unwrap()
            .resolve()
            .unwrap_err();
        assert_eq!(
            err,
            SpecFileError::ArityMismatch {
                name: "sqrt".into(),
                expected: 1,
                got: 2
            }
        );
    }

    #[test]
    fn unknown_function_is_rejected() {
        let err = RunSpecFile::parse("function = nosuch\nn_inputs = 1\nN = 64\nI = 1\n")
            .unwrap()
            .resolve()
            .unwrap_err();
        assert_eq!(err, SpecFileError::UnknownFunction("nosuch".into()));
    }

    #[test]
    fn duplicate_operand_specs_resolve() {
        let text = "\
function = subtractor
n_inputs = 3
N = 256
I = 2
input.0.kind = lfsr
input.0.class = 0
input.1.duplicate_of = 0
input.1.class = 1
input.2.class = 1
";
        let spec = RunSpecFile::parse(text).unwrap();
        let (target, synth) = spec.resolve().unwrap();
        assert_eq!(target.inputs[1].duplicate_of, Some(0));
        assert_eq!(target.primary_inputs(), vec![0, 2]);
        assert_eq!(synth.n_inputs, 3);
    }
}
