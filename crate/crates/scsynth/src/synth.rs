//! Markov-chain Monte Carlo search over programs.
//!
//! The search walks the program space by applying one randomly selected
//! rewrite rule per step and accepting or rejecting the proposal with the
//! Metropolis ratio `min(1, exp(-beta * (C(P') - C(P))))`. Local rules carry
//! most of the selection probability; a rare whole-program restart rescues
//! the chain from deep local minima. The best proposal ever evaluated is
//! tracked separately from the current program and returned at the end.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::cost::{evaluate_cost, TestSuite};
use crate::ir::{random_instruction, Instruction, Opcode, Program, Reg};

/// Program rewrite rules, from most local to most global.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RewriteRule {
    ReplaceOperand,
    ReplaceOpcode,
    ReplaceInstruction,
    SwapAllOperands,
    RandomRestart,
}

impl RewriteRule {
    pub const ALL: [RewriteRule; 5] = [
        RewriteRule::ReplaceOperand,
        RewriteRule::ReplaceOpcode,
        RewriteRule::ReplaceInstruction,
        RewriteRule::SwapAllOperands,
        RewriteRule::RandomRestart,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RewriteRule::ReplaceOperand => "replace-operand",
            RewriteRule::ReplaceOpcode => "replace-opcode",
            RewriteRule::ReplaceInstruction => "replace-instruction",
            RewriteRule::SwapAllOperands => "swap-all-operands",
            RewriteRule::RandomRestart => "random-restart",
        }
    }
}

/// Default selection weights; they are normalized on construction (the raw
/// column sums to 0.999).
pub const DEFAULT_RULE_WEIGHTS: [f64; 5] = [0.817, 0.091, 0.045, 0.045, 0.001];

#[derive(Debug, Error, PartialEq)]
pub enum MixtureError {
    #[error("rule weights must be non-negative and sum to a positive value")]
    Invalid,
}

/// Normalized selection probabilities over [`RewriteRule::ALL`].
#[derive(Debug, Clone, PartialEq)]
pub struct RuleMixture {
    weights: [f64; 5],
}

impl RuleMixture {
    pub fn new(raw: [f64; 5]) -> Result<RuleMixture, MixtureError> {
        if raw.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(MixtureError::Invalid);
        }
        let total: f64 = raw.iter().sum();
        if total <= 0.0 {
            return Err(MixtureError::Invalid);
        }
        let mut weights = raw;
        for w in &mut weights {
            *w /= total;
        }
        Ok(RuleMixture { weights })
    }

    pub fn probability(&self, rule: RewriteRule) -> f64 {
        let idx = RewriteRule::ALL.iter().position(|&r| r == rule).unwrap();
        self.weights[idx]
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> RewriteRule {
        let mut x: f64 = rng.random();
        for (idx, &w) in self.weights.iter().enumerate() {
            if x < w {
                return RewriteRule::ALL[idx];
            }
            x -= w;
        }
        *RewriteRule::ALL.last().unwrap()
    }
}

impl Default for RuleMixture {
    fn default() -> RuleMixture {
        RuleMixture::new(DEFAULT_RULE_WEIGHTS).unwrap()
    }
}

/// Search hyperparameters.
#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub n_inputs: usize,
    /// Instruction count I of every candidate. Allowing a few more slots than
    /// the expected solution size gives the search slack; dead slots are
    /// stripped in reporting.
    pub program_length: usize,
    /// Number of proposals to evaluate.
    pub budget: u64,
    pub beta: f64,
    pub mixture: RuleMixture,
    pub seed: u64,
    /// The search stops as soon as the best cost reaches this value.
    pub early_stop_cost: f64,
}

impl SynthConfig {
    pub fn new(n_inputs: usize, program_length: usize) -> SynthConfig {
        SynthConfig {
            n_inputs,
            program_length,
            budget: 1_000_000,
            beta: 2.0,
            mixture: RuleMixture::default(),
            seed: 0,
            early_stop_cost: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    BudgetExhausted,
    ExactSolution,
}

#[derive(Debug, Clone)]
pub struct SynthesisResult {
    pub best: Program,
    pub best_cost: f64,
    pub proposals_evaluated: u64,
    pub accepted: u64,
    /// Accepted whole-program restarts.
    pub restarts: u64,
    pub terminated_by: Termination,
    /// `(proposal index, best cost)` at every strict improvement; index 0 is
    /// the initial program.
    pub trajectory: Vec<(u64, f64)>,
}

fn arity_group(op: Opcode) -> &'static [Opcode] {
    match op.arity() {
        1 => &[Opcode::Not, Opcode::Pass, Opcode::Dff, Opcode::Tff],
        2 => &[Opcode::And, Opcode::Or, Opcode::Xor],
        _ => &[Opcode::Mux],
    }
}

/// Applies exactly one randomly selected rewrite rule and returns the
/// proposal together with the rule that produced it. Destination registers
/// are never touched.
pub fn propose<R: Rng + ?Sized>(
    p: &Program,
    mixture: &RuleMixture,
    rng: &mut R,
) -> (Program, RewriteRule) {
    let rule = mixture.sample(rng);
    let pool = p.pool_size() as u32;
    let mut q = p.clone();
    match rule {
        RewriteRule::ReplaceOperand => {
            let slot = rng.random_range(0..q.len());
            let instr = q.instruction_mut(slot);
            let pos = rng.random_range(0..instr.opcode.arity());
            instr.set_operand(pos, Reg(rng.random_range(0..pool)));
        }
        RewriteRule::ReplaceOpcode => {
            let slot = rng.random_range(0..q.len());
            let instr = q.instruction(slot);
            let group = arity_group(instr.opcode);
            let opcode = group[rng.random_range(0..group.len())];
            *q.instruction_mut(slot) = Instruction::new(opcode, instr.operands());
        }
        RewriteRule::ReplaceInstruction => {
            let slot = rng.random_range(0..q.len());
            *q.instruction_mut(slot) = random_instruction(pool as usize, rng);
        }
        RewriteRule::SwapAllOperands => {
            let ra = Reg(rng.random_range(0..pool));
            let mut rb = Reg(rng.random_range(0..pool - 1));
            if rb.0 >= ra.0 {
                rb.0 += 1;
            }
            for slot in 0..q.len() {
                let instr = q.instruction_mut(slot);
                for pos in 0..instr.opcode.arity() {
                    let r = instr.operand(pos);
                    if r == ra {
                        instr.set_operand(pos, rb);
                    } else if r == rb {
                        instr.set_operand(pos, ra);
                    }
                }
            }
        }
        RewriteRule::RandomRestart => {
            q = Program::random(p.n_inputs(), p.len(), rng);
        }
    }
    (q, rule)
}

/// True with probability `min(1, exp(-beta * (c_new - c_old)))`.
pub fn metropolis_accept<R: Rng + ?Sized>(c_old: f64, c_new: f64, beta: f64, rng: &mut R) -> bool {
    let alpha = (-beta * (c_new - c_old)).exp().min(1.0);
    rng.random::<f64>() < alpha
}

/// Runs one search chain. Deterministic given the config seed.
pub fn synthesize(cfg: &SynthConfig, suite: &TestSuite) -> SynthesisResult {
    assert_eq!(
        cfg.n_inputs,
        suite.n_inputs(),
        "config inputs must match the suite"
    );
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut current = Program::random(cfg.n_inputs, cfg.program_length, &mut rng);
    let mut current_cost = evaluate_cost(&current, suite);
    let mut best = current.clone();
    let mut best_cost = current_cost;
    let mut trajectory = vec![(0u64, best_cost)];
    let mut accepted = 0u64;
    let mut restarts = 0u64;
    let mut proposals = 0u64;
    let mut terminated_by = Termination::BudgetExhausted;

    if best_cost <= cfg.early_stop_cost {
        terminated_by = Termination::ExactSolution;
    } else {
        while proposals < cfg.budget {
            let (proposal, rule) = propose(&current, &cfg.mixture, &mut rng);
            let proposal_cost = evaluate_cost(&proposal, suite);
            proposals += 1;
            if metropolis_accept(current_cost, proposal_cost, cfg.beta, &mut rng) {
                current = proposal.clone();
                current_cost = proposal_cost;
                accepted += 1;
                if rule == RewriteRule::RandomRestart {
                    restarts += 1;
                }
            }
            if proposal_cost < best_cost {
                best = proposal;
                best_cost = proposal_cost;
                trajectory.push((proposals, best_cost));
            }
            if best_cost <= cfg.early_stop_cost {
                terminated_by = Termination::ExactSolution;
                break;
            }
        }
    }

    SynthesisResult {
        best,
        best_cost,
        proposals_evaluated: proposals,
        accepted,
        restarts,
        terminated_by,
        trajectory,
    }
}

/// Seed for chain `index`; chain 0 uses the configured seed unchanged.
pub fn chain_seed(seed: u64, index: u64) -> u64 {
    seed.wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Runs `chains` independent chains (in parallel) and merges by minimum cost,
/// ties broken by chain index. Counters are summed across chains; the
/// trajectory and termination reason come from the winning chain.
pub fn synthesize_chains(cfg: &SynthConfig, suite: &TestSuite, chains: usize) -> SynthesisResult {
    assert!(chains >= 1);
    let mut results: Vec<SynthesisResult> = Vec::with_capacity(chains);
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..chains)
            .map(|i| {
                let mut chain_cfg = cfg.clone();
                chain_cfg.seed = chain_seed(cfg.seed, i as u64);
                scope.spawn(move || synthesize(&chain_cfg, suite))
            })
            .collect();
        for handle in handles {
            results.push(handle.join().expect("search chain panicked"));
        }
    });

    let winner = results
        .iter()
        .enumerate()
        .min_by(|(ia, a), (ib, b)| {
            a.best_cost
                .partial_cmp(&b.best_cost)
                .unwrap()
                .then(ia.cmp(ib))
        })
        .map(|(i, _)| i)
        .unwrap();
    let proposals = results.iter().map(|r| r.proposals_evaluated).sum();
    let accepted = results.iter().map(|r| r.accepted).sum();
    let restarts = results.iter().map(|r| r.restarts).sum();
    let mut merged = results.swap_remove(winner);
    merged.proposals_evaluated = proposals;
    merged.accepted = accepted;
    merged.restarts = restarts;
    merged
}
