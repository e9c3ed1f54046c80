//! Semi-honest coalition analysis.
//!
//! What a coalition learns from a run is exactly the set of linear
//! equations implied by the messages it sends or receives, its own
//! segments, and the announced sum. A victim's input "leaks" when it is
//! uniquely determined by that real-world view but not by the ideal-world
//! baseline (own inputs plus the announced sum alone).

mod brute;
mod linear;

pub use brute::enumerate_determinations;
pub use linear::{linear_oracle, Equation, SpanSolver};

use std::collections::BTreeSet;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::engine::{run_protocol, Config, ProtocolKind, ProtocolRun, Transcript};
use crate::modular::{Modulus, ModulusError, Residue};
use crate::shares::seeded_stream;
use crate::topology::PartyId;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AdversaryError {
    #[error("coalition must be non-empty")]
    EmptyCoalition,
    #[error("coalition of {size} is not a proper subset of {n} parties")]
    NotProperSubset { size: usize, n: usize },
    #[error("coalition member {member} out of range for {n} parties")]
    MemberOutOfRange { member: PartyId, n: usize },
    #[error("coalition was built for {coalition_n} parties but the run has {run_n}")]
    PartyCountMismatch { coalition_n: usize, run_n: usize },
    #[error("trial count must be at least 1")]
    InvalidTrials,
    #[error("coalition size {size} out of range [1, {max}] for {n} parties")]
    CoalitionSizeOutOfRange { size: usize, n: usize, max: usize },
    #[error("coalition view is inconsistent with itself")]
    InconsistentView,
    #[error("oracle recovered {got} for {victim}, ground truth is {expected}")]
    OracleMismatch {
        victim: PartyId,
        expected: u64,
        got: u64,
    },
    #[error(transparent)]
    Modulus(#[from] ModulusError),
    #[error(transparent)]
    Engine(#[from] crate::engine::EngineError),
}

/// Column layout of the unknowns a coalition reasons about: one column per
/// segment `d_{i,j}`, plus one per round mask when the run is masked.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VarLayout {
    pub n: usize,
    pub k: usize,
    pub masks: usize,
}

impl VarLayout {
    pub fn for_transcript(t: &Transcript) -> Self {
        VarLayout {
            n: t.config.n,
            k: t.config.segments_per_party(),
            masks: if t.config.masked() { t.config.rounds() } else { 0 },
        }
    }

    pub fn num_vars(&self) -> usize {
        self.n * self.k + self.masks
    }

    /// Column of `d_{p,j}` (round `j` is 1-based).
    pub fn seg_col(&self, p: PartyId, j: usize) -> usize {
        debug_assert!(j >= 1 && j <= self.k);
        (p.index() - 1) * self.k + (j - 1)
    }

    pub fn mask_col(&self, j: usize) -> usize {
        debug_assert!(j >= 1 && j <= self.masks);
        self.n * self.k + (j - 1)
    }

    /// Functional recovering `x_p = sum_j d_{p,j}`.
    pub fn input_target(&self, p: PartyId) -> Vec<u64> {
        let mut target = vec![0; self.num_vars()];
        for j in 1..=self.k {
            target[self.seg_col(p, j)] = 1;
        }
        target
    }

    /// Functional recovering the single segment `d_{p,j}`.
    pub fn segment_target(&self, p: PartyId, j: usize) -> Vec<u64> {
        let mut target = vec![0; self.num_vars()];
        target[self.seg_col(p, j)] = 1;
        target
    }
}

/// A non-empty proper subset of the parties, assumed semi-honest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Coalition {
    members: BTreeSet<PartyId>,
    n: usize,
}

impl Coalition {
    pub fn new(
        members: impl IntoIterator<Item = PartyId>,
        n: usize,
    ) -> Result<Self, AdversaryError> {
        let members: BTreeSet<PartyId> = members.into_iter().collect();
        if members.is_empty() {
            return Err(AdversaryError::EmptyCoalition);
        }
        if let Some(&member) = members.iter().find(|p| p.index() > n) {
            return Err(AdversaryError::MemberOutOfRange { member, n });
        }
        if members.len() >= n {
            return Err(AdversaryError::NotProperSubset {
                size: members.len(),
                n,
            });
        }
        Ok(Coalition { members, n })
    }

    /// Convenience constructor from 1-based indices.
    pub fn of(indices: &[usize], n: usize) -> Result<Self, AdversaryError> {
        Self::new(indices.iter().map(|&i| PartyId::new(i)), n)
    }

    pub fn contains(&self, p: PartyId) -> bool {
        self.members.contains(&p)
    }

    pub fn members(&self) -> impl Iterator<Item = PartyId> + '_ {
        self.members.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn party_count(&self) -> usize {
        self.n
    }

    /// Parties outside the coalition, in index order.
    pub fn victims(&self) -> Vec<PartyId> {
        (1..=self.n)
            .map(PartyId::new)
            .filter(|p| !self.contains(*p))
            .collect()
    }
}

/// Everything a coalition observes, as linear equations over the unknowns.
#[derive(Debug, Clone)]
pub struct CoalitionView {
    pub layout: VarLayout,
    pub modulus: Modulus,
    pub equations: Vec<Equation>,
}

fn check_party_count(run: &ProtocolRun, c: &Coalition) -> Result<(), AdversaryError> {
    if c.party_count() != run.config().n {
        return Err(AdversaryError::PartyCountMismatch {
            coalition_n: c.party_count(),
            run_n: run.config().n,
        });
    }
    Ok(())
}

/// The real-world view: observed messages, own segments (and own masks for
/// the initiator), and the announced sum.
pub fn extract_view(run: &ProtocolRun, c: &Coalition) -> Result<CoalitionView, AdversaryError> {
    check_party_count(run, c)?;
    let t = &run.transcript;
    let layout = VarLayout::for_transcript(t);
    let mut equations = Vec::new();

    for msg in &t.messages {
        if !c.contains(msg.sender) && !c.contains(msg.receiver) {
            continue;
        }
        let order = &t.orders[msg.round - 1];
        let mut coeffs = vec![0u64; layout.num_vars()];
        for &p in &order.parties()[..msg.hop] {
            coeffs[layout.seg_col(p, msg.round)] = 1;
        }
        if layout.masks > 0 {
            coeffs[layout.mask_col(msg.round)] = 1;
        }
        equations.push(Equation { coeffs, rhs: msg.value });
    }

    for p in c.members() {
        for j in 1..=layout.k {
            equations.push(Equation::unit(
                layout.num_vars(),
                layout.seg_col(p, j),
                run.segments.segment(p, j),
            ));
        }
    }
    if layout.masks > 0 && c.contains(PartyId::INITIATOR) {
        for j in 1..=layout.masks {
            equations.push(Equation::unit(
                layout.num_vars(),
                layout.mask_col(j),
                run.masks[j - 1],
            ));
        }
    }

    equations.push(announced_sum_equation(&layout, t.announced));

    Ok(CoalitionView {
        layout,
        modulus: t.config.modulus,
        equations,
    })
}

/// The ideal-world baseline: own segments and the announced sum only.
pub fn ideal_view(run: &ProtocolRun, c: &Coalition) -> Result<CoalitionView, AdversaryError> {
    check_party_count(run, c)?;
    let t = &run.transcript;
    let layout = VarLayout::for_transcript(t);
    let mut equations = Vec::new();
    for p in c.members() {
        for j in 1..=layout.k {
            equations.push(Equation::unit(
                layout.num_vars(),
                layout.seg_col(p, j),
                run.segments.segment(p, j),
            ));
        }
    }
    equations.push(announced_sum_equation(&layout, t.announced));
    Ok(CoalitionView {
        layout,
        modulus: t.config.modulus,
        equations,
    })
}

fn announced_sum_equation(layout: &VarLayout, announced: Residue) -> Equation {
    let mut coeffs = vec![0u64; layout.num_vars()];
    for col in coeffs.iter_mut().take(layout.n * layout.k) {
        *col = 1;
    }
    Equation { coeffs, rhs: announced }
}

/// First-order bracketing closure: a segment is determined when the hop
/// values entering and leaving its owner in that round are both known.
/// Sound but incomplete relative to [`SpanSolver`], which also combines
/// round totals with the announced sum.
pub fn rule_closure(run: &ProtocolRun, c: &Coalition) -> BTreeSet<(PartyId, usize)> {
    let t = &run.transcript;
    let n = t.n();
    let rounds = t.orders.len();
    let mask_known = !t.config.masked() || c.contains(PartyId::INITIATOR);

    let mut known_segments: BTreeSet<(PartyId, usize)> = c
        .members()
        .flat_map(|p| (1..=rounds).map(move |j| (p, j)))
        .collect();
    // known_values[j][t] = the coalition knows the round-j hop-t value
    let mut known_values = vec![vec![false; n + 1]; rounds + 1];
    for msg in &t.messages {
        if c.contains(msg.sender) || c.contains(msg.receiver) {
            known_values[msg.round][msg.hop] = true;
        }
    }

    loop {
        let mut changed = false;
        // j indexes rounds in lockstep across orders and known_values
        #[allow(clippy::needless_range_loop)]
        for j in 1..=rounds {
            let order = t.orders[j - 1].parties();
            if mask_known {
                let first = order[0];
                if known_values[j][1] && known_segments.insert((first, j)) {
                    changed = true;
                }
                if known_segments.contains(&(first, j)) && !known_values[j][1] {
                    known_values[j][1] = true;
                    changed = true;
                }
            }
            for hop in 2..=n {
                let p = order[hop - 1];
                if known_values[j][hop]
                    && known_values[j][hop - 1]
                    && known_segments.insert((p, j))
                {
                    changed = true;
                }
                if known_segments.contains(&(p, j)) {
                    if known_values[j][hop] && !known_values[j][hop - 1] {
                        known_values[j][hop - 1] = true;
                        changed = true;
                    }
                    if known_values[j][hop - 1] && !known_values[j][hop] {
                        known_values[j][hop] = true;
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            return known_segments;
        }
    }
}

/// Per-victim outcome of a coalition analysis.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LeakageVerdict {
    pub victim: PartyId,
    pub real_determined: bool,
    pub ideal_determined: bool,
    pub leaked: bool,
    pub segments_learned: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub recovered_value: Option<u64>,
}

/// Analyze one coalition against an existing run.
pub fn analyze_coalition(
    run: &ProtocolRun,
    c: &Coalition,
) -> Result<Vec<LeakageVerdict>, AdversaryError> {
    let view = extract_view(run, c)?;
    let real = SpanSolver::new(&view)?;
    let ideal = SpanSolver::new(&ideal_view(run, c)?)?;
    let layout = view.layout;
    let m = run.config().modulus;

    let mut verdicts = Vec::new();
    for victim in c.victims() {
        let target = layout.input_target(victim);
        let truth = run.segments.party_total(victim, m);
        let real_value = real.determine(&target);
        if let Some(got) = real_value {
            if got != truth {
                return Err(AdversaryError::OracleMismatch {
                    victim,
                    expected: truth,
                    got,
                });
            }
        }
        let ideal_value = ideal.determine(&target);
        let mut segments_learned = 0;
        for j in 1..=layout.k {
            if let Some(got) = real.determine(&layout.segment_target(victim, j)) {
                let expected = run.segments.segment(victim, j);
                if got != expected {
                    return Err(AdversaryError::OracleMismatch {
                        victim,
                        expected,
                        got,
                    });
                }
                segments_learned += 1;
            }
        }
        verdicts.push(LeakageVerdict {
            victim,
            real_determined: real_value.is_some(),
            ideal_determined: ideal_value.is_some(),
            leaked: real_value.is_some() && ideal_value.is_none(),
            segments_learned,
            recovered_value: real_value,
        });
    }
    Ok(verdicts)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Aggregates {
    pub victims: usize,
    pub leaked: usize,
    pub initiator_leaked: usize,
    pub middle_leaked: usize,
}

/// The structured report emitted for a single coalition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LeakageReport {
    pub protocol: ProtocolKind,
    pub n: usize,
    pub modulus: u64,
    pub seed: u64,
    pub initiator_mask: bool,
    pub coalition: Vec<PartyId>,
    pub verdicts: Vec<LeakageVerdict>,
    pub aggregates: Aggregates,
}

impl LeakageReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serialization");
        s.push('\n');
        s
    }
}

/// Run the protocol and render per-victim verdicts for one coalition.
pub fn leakage_report(
    config: &Config,
    inputs: &[Residue],
    c: &Coalition,
) -> Result<LeakageReport, AdversaryError> {
    let run = run_protocol(config, inputs)?;
    let verdicts = analyze_coalition(&run, c)?;
    Ok(build_report(config, c, verdicts))
}

fn build_report(config: &Config, c: &Coalition, verdicts: Vec<LeakageVerdict>) -> LeakageReport {
    let leaked: Vec<&LeakageVerdict> = verdicts.iter().filter(|v| v.leaked).collect();
    let aggregates = Aggregates {
        victims: verdicts.len(),
        leaked: leaked.len(),
        initiator_leaked: leaked.iter().filter(|v| v.victim.is_initiator()).count(),
        middle_leaked: leaked.iter().filter(|v| !v.victim.is_initiator()).count(),
    };
    LeakageReport {
        protocol: config.kind,
        n: config.n,
        modulus: config.modulus.get(),
        seed: config.master_seed,
        initiator_mask: config.initiator_mask,
        coalition: c.members().collect(),
        verdicts,
        aggregates,
    }
}

/// One (coalition pair, victim) cell of an exhaustive sweep.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SweepCell {
    pub n: usize,
    pub protocol: ProtocolKind,
    pub coalition: [PartyId; 2],
    pub victim: PartyId,
    pub real_determined: bool,
    pub ideal_determined: bool,
    pub leaked: bool,
    pub segments_learned: usize,
}

/// Verdicts for every 2-party coalition and every victim of one run.
/// Inputs are drawn from a seed-derived stream.
pub fn exhaustive_pair_sweep(config: &Config) -> Result<Vec<SweepCell>, AdversaryError> {
    let inputs = random_inputs(config);
    let run = run_protocol(config, &inputs)?;
    let mut cells = Vec::new();
    for a in 1..=config.n - 1 {
        for b in a + 1..=config.n {
            let c = Coalition::of(&[a, b], config.n)?;
            for v in analyze_coalition(&run, &c)? {
                cells.push(SweepCell {
                    n: config.n,
                    protocol: config.kind,
                    coalition: [PartyId::new(a), PartyId::new(b)],
                    victim: v.victim,
                    real_determined: v.real_determined,
                    ideal_determined: v.ideal_determined,
                    leaked: v.leaked,
                    segments_learned: v.segments_learned,
                });
            }
        }
    }
    Ok(cells)
}

/// Uniform inputs for sweeps, from a stream disjoint from the per-party
/// segment streams.
pub fn random_inputs(config: &Config) -> Vec<Residue> {
    let mut rng = seeded_stream(config.master_seed, config.n as u64 + 1);
    (0..config.n)
        .map(|_| rng.gen_range(0..config.modulus.get()))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassEstimate {
    pub observations: usize,
    pub leaked: usize,
    pub probability: f64,
    pub std_error: f64,
}

impl ClassEstimate {
    fn from_counts(leaked: usize, observations: usize) -> Self {
        let p = if observations == 0 {
            0.0
        } else {
            leaked as f64 / observations as f64
        };
        let std_error = if observations == 0 {
            0.0
        } else {
            (p * (1.0 - p) / observations as f64).sqrt()
        };
        ClassEstimate {
            observations,
            leaked,
            probability: p,
            std_error,
        }
    }
}

/// Estimated leakage probability per victim class.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloResult {
    pub protocol: ProtocolKind,
    pub n: usize,
    pub trials: usize,
    pub coalition_size: usize,
    pub initiator: ClassEstimate,
    pub middle: ClassEstimate,
}

impl MonteCarloResult {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("result serialization");
        s.push('\n');
        s
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Leaked/observed counts of one trial, [initiator class, middle class].
fn trial_leak_counts(
    config: &Config,
    coalition_size: usize,
    trial: u64,
) -> Result<[(usize, usize); 2], AdversaryError> {
    let n = config.n;
    // each trial derives its own stream, so trials can run in any order
    let mut rng = seeded_stream(splitmix64(config.master_seed ^ trial), n as u64 + 2);
    let members: Vec<PartyId> = rand::seq::index::sample(&mut rng, n, coalition_size)
        .iter()
        .map(|i| PartyId::new(i + 1))
        .collect();
    let inputs: Vec<Residue> = (0..n)
        .map(|_| rng.gen_range(0..config.modulus.get()))
        .collect();
    let trial_config = Config {
        master_seed: rng.gen(),
        ..*config
    };
    let run = run_protocol(&trial_config, &inputs)?;
    let coalition = Coalition::new(members, n)?;
    let mut counts = [(0usize, 0usize); 2];
    for verdict in analyze_coalition(&run, &coalition)? {
        let class = usize::from(!verdict.victim.is_initiator());
        counts[class].1 += 1;
        if verdict.leaked {
            counts[class].0 += 1;
        }
    }
    Ok(counts)
}

/// Sample random coalitions of a fixed size and estimate leak frequency
/// per victim class; every trial uses fresh inputs and segment seeds.
/// Trials run in parallel; the merged counts do not depend on thread
/// scheduling.
pub fn monte_carlo_leakage(
    config: &Config,
    trials: usize,
    coalition_size: usize,
) -> Result<MonteCarloResult, AdversaryError> {
    if trials == 0 {
        return Err(AdversaryError::InvalidTrials);
    }
    let n = config.n;
    if coalition_size == 0 || coalition_size > n - 1 {
        return Err(AdversaryError::CoalitionSizeOutOfRange {
            size: coalition_size,
            n,
            max: n - 1,
        });
    }
    let per_trial: Vec<[(usize, usize); 2]> = (0..trials as u64)
        .into_par_iter()
        .map(|trial| trial_leak_counts(config, coalition_size, trial))
        .collect::<Result<_, _>>()?;
    let mut counts = [(0usize, 0usize); 2];
    for trial in per_trial {
        for class in 0..2 {
            counts[class].0 += trial[class].0;
            counts[class].1 += trial[class].1;
        }
    }
    Ok(MonteCarloResult {
        protocol: config.kind,
        n,
        trials,
        coalition_size,
        initiator: ClassEstimate::from_counts(counts[0].0, counts[0].1),
        middle: ClassEstimate::from_counts(counts[1].0, counts[1].1),
    })
}

#[cfg(test)]
mod tests;
