use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use scsynth::bench::{benchmark_registry, run_benchmark, sweep_lengths};
use scsynth::bitgen::{generate_sn, CorrelationClass, SequenceKind};
use scsynth::cost::make_test_suite;
use scsynth::exhaustive::{count_candidates, enumerate_best};
use scsynth::ir::Program;
use scsynth::sim::simulate;
use scsynth::specfile::RunSpecFile;
use scsynth::synth::{synthesize_chains, SynthConfig, Termination};
use scsynth::validity::strip_dead;
use scsynth::Bitstream;

/// Stochastic-computing circuit synthesizer.
#[derive(Parser)]
#[command(name = "scsynth", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Search for a circuit matching a run spec and write the best netlist.
    Synth {
        /// Run spec file.
        spec: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        budget: Option<u64>,
        #[arg(long)]
        beta: Option<f64>,
        /// Independent search chains, merged by minimum cost.
        #[arg(long)]
        chains: Option<usize>,
        /// Directory for best.netlist and runlog.csv.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Print the fully resolved config and exit.
        #[arg(long)]
        dump_config: bool,
    },
    /// Simulate a netlist and print the decoded output value.
    Simulate {
        netlist: PathBuf,
        /// Input values in [0,1], one per input register.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        values: Vec<f64>,
        /// Literal input bitstreams (overrides --values).
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        streams: Vec<String>,
        /// Sequence kind for generated inputs: lfsr, vdc, or halton3.
        #[arg(long, default_value = "vdc")]
        kind: String,
        /// Correlation class per input; defaults to all 0 (correlated).
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        classes: Vec<u32>,
        /// SN length for generated inputs.
        #[arg(long, default_value_t = 256)]
        n: usize,
        /// Also print the raw output bitstream.
        #[arg(long)]
        dump: bool,
    },
    /// Run registered benchmarks and emit a CSV report.
    Bench {
        /// Benchmark names; see `bench --list`.
        names: Vec<String>,
        /// Run every registered benchmark.
        #[arg(long)]
        all: bool,
        /// List registered benchmarks and exit.
        #[arg(long)]
        list: bool,
        #[arg(long, default_value_t = 1_000_000)]
        budget: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        chains: usize,
        /// Also write the CSV to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-evaluate a circuit across SN lengths and emit (N, error) rows.
    Sweep {
        netlist: PathBuf,
        /// Run spec file naming the target function and input setup.
        spec: PathBuf,
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
        lengths: Vec<usize>,
        /// Also write the CSV to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exhaustively enumerate circuits of a given length for a run spec.
    #[command(name = "enum")]
    Enumerate {
        spec: PathBuf,
        /// Instruction count to enumerate; defaults to the run spec's I.
        #[arg(long)]
        length: Option<usize>,
        /// Largest candidate space to accept.
        #[arg(long, default_value_t = 10_000_000)]
        limit: u64,
    },
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Synth {
            spec,
            seed,
            budget,
            beta,
            chains,
            out,
            dump_config,
        } => cmd_synth(&spec, seed, budget, beta, chains, &out, dump_config),
        Command::Simulate {
            netlist,
            values,
            streams,
            kind,
            classes,
            n,
            dump,
        } => cmd_simulate(&netlist, &values, &streams, &kind, &classes, n, dump),
        Command::Bench {
            names,
            all,
            list,
            budget,
            seed,
            chains,
            out,
        } => cmd_bench(&names, all, list, budget, seed, chains, out.as_deref()),
        Command::Sweep {
            netlist,
            spec,
            lengths,
            out,
        } => cmd_sweep(&netlist, &spec, &lengths, out.as_deref()),
        Command::Enumerate {
            spec,
            length,
            limit,
        } => cmd_enum(&spec, length, limit),
    }
}

fn load_spec(path: &Path) -> Result<RunSpecFile> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading spec file {}", path.display()))?;
    RunSpecFile::parse(&text).with_context(|| format!("parsing {}", path.display()))
}

fn load_netlist(path: &Path) -> Result<Program> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading netlist {}", path.display()))?;
    Program::from_netlist(&text).with_context(|| format!("parsing {}", path.display()))
}

fn cmd_synth(
    spec_path: &Path,
    seed: Option<u64>,
    budget: Option<u64>,
    beta: Option<f64>,
    chains: Option<usize>,
    out_dir: &Path,
    dump_config: bool,
) -> Result<()> {
    let mut spec = load_spec(spec_path)?;
    if let Some(seed) = seed {
        spec.seed = seed;
    }
    if let Some(budget) = budget {
        spec.budget = budget;
    }
    if let Some(beta) = beta {
        spec.beta = beta;
    }
    if let Some(chains) = chains {
        spec.chains = chains;
    }
    if dump_config {
        print!("{}", spec.format());
        return Ok(());
    }

    let (target, cfg) = spec.resolve().context("resolving spec")?;
    let suite = make_test_suite(&target).context("building test suite")?;
    if suite.excluded() > 0 {
        eprintln!(
            "note: {} sample(s) excluded where the target function is undefined",
            suite.excluded()
        );
    }

    let started = Instant::now();
    let result = synthesize_chains(&cfg, &suite, spec.chains.max(1));
    let elapsed = started.elapsed().as_secs_f64();
    let best = strip_dead(&result.best);

    fs::create_dir_all(out_dir)
        .with_context(|| format!("creating output directory {}", out_dir.display()))?;
    let netlist_path = out_dir.join("best.netlist");
    fs::write(&netlist_path, best.to_netlist())
        .with_context(|| format!("writing {}", netlist_path.display()))?;
    let rate = result.proposals_evaluated as f64 / elapsed.max(1e-9);
    let acceptance = if result.proposals_evaluated > 0 {
        100.0 * result.accepted as f64 / result.proposals_evaluated as f64
    } else {
        0.0
    };

    let runlog_path = out_dir.join("runlog.csv");
    let mut runlog = String::new();
    let _ = writeln!(runlog, "# proposals: {}", result.proposals_evaluated);
    let _ = writeln!(runlog, "# accepted: {} ({acceptance:.1}%)", result.accepted);
    let _ = writeln!(runlog, "# restarts: {}", result.restarts);
    runlog.push_str("proposal,best_cost\n");
    for (proposal, cost) in &result.trajectory {
        let _ = writeln!(runlog, "{proposal},{cost}");
    }
    fs::write(&runlog_path, runlog)
        .with_context(|| format!("writing {}", runlog_path.display()))?;
    println!("best cost: {}", result.best_cost);
    println!("proposals: {} ({rate:.0}/s)", result.proposals_evaluated);
    println!("accepted: {} ({acceptance:.1}%)", result.accepted);
    println!("restarts: {}", result.restarts);
    println!(
        "terminated: {}",
        match result.terminated_by {
            Termination::BudgetExhausted => "budget exhausted",
            Termination::ExactSolution => "exact solution",
        }
    );
    println!("netlist: {}", netlist_path.display());
    println!("runlog: {}", runlog_path.display());
    print!("{}", best.to_netlist());
    Ok(())
}

fn cmd_simulate(
    netlist_path: &Path,
    values: &[f64],
    streams: &[String],
    kind: &str,
    classes: &[u32],
    n: usize,
    dump: bool,
) -> Result<()> {
    let program = load_netlist(netlist_path)?;
    let n_inputs = program.n_inputs();

    let (inputs, n_cycles): (Vec<Bitstream>, usize) = if !streams.is_empty() {
        if streams.len() != n_inputs {
            bail!(
                "netlist has {n_inputs} input(s), got {} stream(s)",
                streams.len()
            );
        }
        let parsed: Vec<Bitstream> = streams
            .iter()
            .map(|s| s.parse().map_err(anyhow::Error::msg))
            .collect::<Result<_>>()?;
        let len = parsed[0].len();
        if parsed.iter().any(|s| s.len() != len) {
            bail!("all input streams must share one length");
        }
        (parsed, len)
    } else if !values.is_empty() {
        if values.len() != n_inputs {
            bail!(
                "netlist has {n_inputs} input(s), got {} value(s)",
                values.len()
            );
        }
        let kind =
            SequenceKind::parse(kind).with_context(|| format!("unknown sequence kind `{kind}`"))?;
        let classes: Vec<u32> = if classes.is_empty() {
            vec![0; n_inputs]
        } else if classes.len() == n_inputs {
            classes.to_vec()
        } else {
            bail!(
                "netlist has {n_inputs} input(s), got {} class(es)",
                classes.len()
            );
        };
        let generated = values
            .iter()
            .zip(&classes)
            .map(|(&v, &c)| generate_sn(v, n, kind, CorrelationClass(c)))
            .collect::<Result<Vec<_>, _>>()?;
        (generated, n)
    } else {
        bail!("provide --values or --streams");
    };

    let out = simulate(&program, &inputs, n_cycles)?;
    println!("{}", out.decode_unipolar());
    if dump {
        println!("{out}");
    }
    Ok(())
}

fn cmd_bench(
    names: &[String],
    all: bool,
    list: bool,
    budget: u64,
    seed: u64,
    chains: usize,
    out: Option<&Path>,
) -> Result<()> {
    let registry = benchmark_registry();
    if list {
        for bench in &registry {
            println!(
                "{}: f = {}, I = {}, reference error {}",
                bench.name, bench.formula, bench.program_length, bench.reference_error
            );
        }
        return Ok(());
    }

    let requested: Vec<String> = if all {
        registry.iter().map(|b| b.name.to_string()).collect()
    } else {
        names.to_vec()
    };
    if requested.is_empty() {
        bail!("no benchmarks requested; pass names, --all, or --list");
    }
    let unknown: Vec<&String> = requested
        .iter()
        .filter(|n| !registry.iter().any(|b| b.name == n.as_str()))
        .collect();
    for name in &unknown {
        eprintln!("warning: unknown benchmark `{name}` skipped");
    }

    let mut csv = String::from("name,I,budget,best_cost,reference_error,pass\n");
    // Stable report order: the registry's, filtered to the request.
    for bench in &registry {
        if !requested.iter().any(|n| n == bench.name) {
            continue;
        }
        let mut cfg = SynthConfig::new(bench.n_inputs(), bench.program_length);
        cfg.budget = budget;
        cfg.seed = seed;
        eprintln!("running {} (I = {}) ...", bench.name, bench.program_length);
        let report = run_benchmark(bench.name, &cfg, chains)?;
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            report.name,
            report.program_length,
            report.budget,
            report.best_cost,
            report.reference_error,
            report.pass
        );
    }
    print!("{csv}");
    if let Some(path) = out {
        fs::write(path, &csv).with_context(|| format!("writing {}", path.display()))?;
    }
    if !unknown.is_empty() {
        bail!("{} unknown benchmark name(s)", unknown.len());
    }
    Ok(())
}

fn cmd_sweep(
    netlist_path: &Path,
    spec_path: &Path,
    lengths: &[usize],
    out: Option<&Path>,
) -> Result<()> {
    let program = load_netlist(netlist_path)?;
    let spec = load_spec(spec_path)?;
    let (target, _) = spec.resolve().context("resolving spec")?;
    let rows = sweep_lengths(&program, &target, lengths)?;
    let mut csv = String::from("N,error\n");
    for (n, err) in rows {
        let _ = writeln!(csv, "{n},{err}");
    }
    print!("{csv}");
    if let Some(path) = out {
        fs::write(path, &csv).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn cmd_enum(spec_path: &Path, length: Option<usize>, limit: u64) -> Result<()> {
    let spec = load_spec(spec_path)?;
    let (target, cfg) = spec.resolve().context("resolving spec")?;
    let length = length.unwrap_or(cfg.program_length);
    let count = count_candidates(cfg.n_inputs, length);
    println!("candidates: {count}");
    let suite = make_test_suite(&target).context("building test suite")?;
    let (best, cost) = enumerate_best(&suite, cfg.n_inputs, length, limit)
        .map_err(|e| anyhow::anyhow!("{e}; raise --limit to force the scan"))?;
    println!("best cost: {cost}");
    print!("{}", best.to_netlist());
    Ok(())
}
