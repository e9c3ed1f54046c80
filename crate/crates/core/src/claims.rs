//! The quantitative claim suite behind `verify` and the acceptance tests.
//!
//! Each claim checks one published property of the protocols against the
//! implementation: correctness of the announced sum, the four-party round
//! orders, the round/exchange/message counts, the leakage guarantees, and
//! reproducibility. Claims are pure and deterministic.

use rand::Rng;

use crate::adversary::{
    analyze_coalition, enumerate_determinations, exhaustive_pair_sweep, extract_view, Coalition,
    SpanSolver,
};
use crate::engine::{compute_metrics, run_protocol, Config, ProtocolKind};
use crate::modular::{Modulus, Residue};
use crate::shares::seeded_stream;
use crate::topology::{self, PartyId};

/// Outcome of one claim check.
#[derive(Debug, Clone)]
pub struct ClaimReport {
    pub name: &'static str,
    pub detail: String,
    pub pass: bool,
}

impl ClaimReport {
    fn pass(name: &'static str, detail: String) -> Self {
        ClaimReport { name, detail, pass: true }
    }

    fn from_failures(name: &'static str, ok_detail: String, failures: Vec<String>) -> Self {
        if failures.is_empty() {
            Self::pass(name, ok_detail)
        } else {
            let shown = failures.iter().take(4).cloned().collect::<Vec<_>>().join("; ");
            let suffix = if failures.len() > 4 {
                format!(" (+{} more)", failures.len() - 4)
            } else {
                String::new()
            };
            ClaimReport {
                name,
                detail: format!("{shown}{suffix}"),
                pass: false,
            }
        }
    }
}

/// Run every claim with the given modulus and seed.
pub fn all_claims(modulus: Modulus, seed: u64) -> Vec<ClaimReport> {
    vec![
        announced_sum_correctness(modulus, seed, false),
        four_party_round_orders(),
        complexity_formulas(modulus, seed),
        middle_party_zero_leakage(modulus, seed, false),
        baseline_attacks(modulus, seed),
        oracle_equivalence(seed),
        neighbor_change(),
        determinism(modulus, seed),
        initiator_finding(modulus, seed),
    ]
}

const CORRECTNESS_SIZES: [usize; 4] = [4, 5, 8, 16];
const CORRECTNESS_CASES: usize = 1000;

/// Announced sum equals the direct mod-M sum of the inputs for random
/// cases of every protocol kind.
pub fn announced_sum_correctness(modulus: Modulus, seed: u64, masked: bool) -> ClaimReport {
    let name = if masked {
        "announced sum = direct sum (masked)"
    } else {
        "announced sum = direct sum"
    };
    let mut failures = Vec::new();
    let mut rng = seeded_stream(seed, 1_000_001);
    let mut cases = 0usize;
    for kind in ProtocolKind::ALL {
        for &n in &CORRECTNESS_SIZES {
            for _ in 0..CORRECTNESS_CASES {
                let inputs: Vec<Residue> =
                    (0..n).map(|_| rng.gen_range(0..modulus.get())).collect();
                let config =
                    Config::new(n, modulus, kind, rng.gen()).with_initiator_mask(masked);
                // direct summation oracle, independent of the engine
                let expected = modulus.sum(inputs.iter().copied());
                cases += 1;
                match run_protocol(&config, &inputs) {
                    Ok(run) if run.announced() == expected => {}
                    Ok(run) => failures.push(format!(
                        "{kind} n={n}: announced {} != {expected}",
                        run.announced()
                    )),
                    Err(e) => failures.push(format!("{kind} n={n}: {e}")),
                }
            }
        }
    }
    ClaimReport::from_failures(
        name,
        format!("{cases} random cases across {:?}", CORRECTNESS_SIZES),
        failures,
    )
}

/// The four-party round orders are exactly the published snapshots.
pub fn four_party_round_orders() -> ClaimReport {
    let name = "four-party round orders";
    let expected: [&[usize]; 3] = [&[1, 2, 3, 4], &[1, 3, 2, 4], &[1, 3, 4, 2]];
    let mut failures = Vec::new();
    // check both the topology layer and a realized transcript
    for (j, want) in expected.iter().enumerate() {
        let order = topology::order_for_round(4, j + 1).unwrap();
        let got: Vec<usize> = order.parties().iter().map(|p| p.index()).collect();
        if got != *want {
            failures.push(format!("round {}: order {:?}", j + 1, got));
        }
    }
    let config = Config::new(4, Modulus::new(97).unwrap(), ProtocolKind::CkSecureSum, 42);
    match run_protocol(&config, &[1, 2, 3, 4]) {
        Ok(run) => {
            for (j, want) in expected.iter().enumerate() {
                let got: Vec<usize> = run.transcript.orders[j]
                    .parties()
                    .iter()
                    .map(|p| p.index())
                    .collect();
                if got != *want {
                    failures.push(format!("transcript round {}: order {:?}", j + 1, got));
                }
            }
        }
        Err(e) => failures.push(e.to_string()),
    }
    ClaimReport::from_failures(name, "orders 1234 / 1324 / 1342".into(), failures)
}

/// rounds = n-1, exchanges = n-2, messages = n(n-1) for n in [4, 32].
pub fn complexity_formulas(modulus: Modulus, seed: u64) -> ClaimReport {
    let name = "rounds n-1, exchanges n-2, messages n(n-1)";
    let mut failures = Vec::new();
    for n in 4..=32 {
        let inputs: Vec<Residue> = (0..n as u64).collect();
        let config = Config::new(n, modulus, ProtocolKind::CkSecureSum, seed);
        match run_protocol(&config, &inputs).and_then(|run| compute_metrics(&run.transcript)) {
            Ok(metrics) => {
                if metrics.rounds != n - 1 {
                    failures.push(format!("n={n}: rounds {}", metrics.rounds));
                }
                if metrics.exchanges != n - 2 {
                    failures.push(format!("n={n}: exchanges {}", metrics.exchanges));
                }
                if metrics.messages != n * (n - 1) {
                    failures.push(format!("n={n}: messages {}", metrics.messages));
                }
            }
            Err(e) => failures.push(format!("n={n}: {e}")),
        }
    }
    ClaimReport::from_failures(name, "verified for n in [4, 32]".into(), failures)
}

/// Exhaustive sweep over all 2-coalitions: no non-initiator victim leaks
/// under the changing-neighbors protocol, n in [4, 12].
pub fn middle_party_zero_leakage(modulus: Modulus, seed: u64, masked: bool) -> ClaimReport {
    let name = if masked {
        "zero middle-party leakage (masked)"
    } else {
        "zero middle-party leakage"
    };
    let mut failures = Vec::new();
    let mut cells_checked = 0usize;
    for n in 4..=12 {
        let config =
            Config::new(n, modulus, ProtocolKind::CkSecureSum, seed).with_initiator_mask(masked);
        match exhaustive_pair_sweep(&config) {
            Ok(cells) => {
                for cell in cells {
                    if cell.victim.is_initiator() {
                        continue;
                    }
                    cells_checked += 1;
                    if cell.leaked {
                        failures.push(format!(
                            "n={n}: {}+{} leaks {}",
                            cell.coalition[0], cell.coalition[1], cell.victim
                        ));
                    }
                }
            }
            Err(e) => failures.push(format!("n={n}: {e}")),
        }
    }
    ClaimReport::from_failures(
        name,
        format!("{cells_checked} (coalition, victim) cells, n in [4, 12]"),
        failures,
    )
}

/// The classic collusion attacks on the baselines still work: bracketing
/// pairs recover a clifton victim's input exactly, and learn every segment
/// of a fixed-ring segmented victim.
pub fn baseline_attacks(modulus: Modulus, seed: u64) -> ClaimReport {
    let name = "baseline bracketing attacks reproduce";
    let mut failures = Vec::new();
    let mut rng = seeded_stream(seed, 1_000_002);
    for n in 4..=8 {
        let inputs: Vec<Residue> = (0..n).map(|_| rng.gen_range(0..modulus.get())).collect();
        let clifton = Config::new(n, modulus, ProtocolKind::CliftonSum, seed);
        let ksecure = Config::new(n, modulus, ProtocolKind::KSecureSum, seed);
        let clifton_run = match run_protocol(&clifton, &inputs) {
            Ok(r) => r,
            Err(e) => {
                failures.push(format!("clifton n={n}: {e}"));
                continue;
            }
        };
        let ksecure_run = match run_protocol(&ksecure, &inputs) {
            Ok(r) => r,
            Err(e) => {
                failures.push(format!("ksecure n={n}: {e}"));
                continue;
            }
        };
        for v in 2..=n {
            let pred = v - 1;
            let succ = if v == n { 1 } else { v + 1 };
            let coalition = Coalition::of(&[pred, succ], n).unwrap();
            match analyze_coalition(&clifton_run, &coalition) {
                Ok(verdicts) => {
                    let verdict = verdicts
                        .iter()
                        .find(|c| c.victim == PartyId::new(v))
                        .unwrap();
                    if !verdict.leaked {
                        failures.push(format!("clifton n={n}: {{P{pred},P{succ}}} misses P{v}"));
                    }
                    if verdict.recovered_value != Some(inputs[v - 1]) {
                        failures.push(format!(
                            "clifton n={n}: recovered {:?} for P{v}, input {}",
                            verdict.recovered_value,
                            inputs[v - 1]
                        ));
                    }
                }
                Err(e) => failures.push(format!("clifton n={n}: {e}")),
            }
            match analyze_coalition(&ksecure_run, &coalition) {
                Ok(verdicts) => {
                    let verdict = verdicts
                        .iter()
                        .find(|c| c.victim == PartyId::new(v))
                        .unwrap();
                    if verdict.segments_learned != n - 1 {
                        failures.push(format!(
                            "ksecure n={n}: {{P{pred},P{succ}}} learned {}/{} segments of P{v}",
                            verdict.segments_learned,
                            n - 1
                        ));
                    }
                }
                Err(e) => failures.push(format!("ksecure n={n}: {e}")),
            }
        }
    }
    ClaimReport::from_failures(name, "clifton and ksecure, n in [4, 8]".into(), failures)
}

/// The span oracle and the brute-force consistency enumeration agree on
/// every determinacy verdict over Z_5.
pub fn oracle_equivalence(seed: u64) -> ClaimReport {
    let name = "span oracle = enumeration oracle (Z_5)";
    let m5 = Modulus::new(5).unwrap();
    let mut failures = Vec::new();
    let mut targets_checked = 0usize;
    for kind in ProtocolKind::ALL {
        for n in 4..=6 {
            let inputs: Vec<Residue> = (0..n as u64).map(|v| v % 5).collect();
            let config = Config::new(n, m5, kind, seed);
            let run = match run_protocol(&config, &inputs) {
                Ok(r) => r,
                Err(e) => {
                    failures.push(format!("{kind} n={n}: {e}"));
                    continue;
                }
            };
            for a in 1..n {
                for b in a + 1..=n {
                    let c = Coalition::of(&[a, b], n).unwrap();
                    let view = extract_view(&run, &c).unwrap();
                    let solver = match SpanSolver::new(&view) {
                        Ok(s) => s,
                        Err(e) => {
                            failures.push(format!("{kind} n={n}: {e}"));
                            continue;
                        }
                    };
                    let mut targets = Vec::new();
                    let mut labels = Vec::new();
                    for victim in c.victims() {
                        targets.push(view.layout.input_target(victim));
                        labels.push(format!("{victim} input"));
                        for j in 1..=view.layout.k {
                            targets.push(view.layout.segment_target(victim, j));
                            labels.push(format!("{victim} segment {j}"));
                        }
                    }
                    let brute = match enumerate_determinations(&view, &targets) {
                        Ok(b) => b,
                        Err(e) => {
                            failures.push(format!("{kind} n={n}: {e}"));
                            continue;
                        }
                    };
                    for ((target, brute), label) in targets.iter().zip(brute).zip(labels) {
                        targets_checked += 1;
                        let linear = solver.determine(target);
                        if linear != brute {
                            failures.push(format!(
                                "{kind} n={n} {{P{a},P{b}}} {label}: span {linear:?} vs enumeration {brute:?}"
                            ));
                        }
                    }
                }
            }
        }
    }
    ClaimReport::from_failures(
        name,
        format!("{targets_checked} targets across all kinds, n in [4, 6]"),
        failures,
    )
}

/// No non-initiator party keeps the same neighbor pair in all rounds.
pub fn neighbor_change() -> ClaimReport {
    let name = "every party changes neighbors";
    let mut failures = Vec::new();
    for n in 4..=32 {
        for i in 2..=n {
            let party = PartyId::new(i);
            let pairs: std::collections::BTreeSet<(PartyId, PartyId)> = (1..=n - 1)
                .map(|j| {
                    topology::neighbors(&topology::order_for_round(n, j).unwrap(), party).unwrap()
                })
                .collect();
            if pairs.len() < 2 {
                failures.push(format!("n={n}: P{i} kept its neighbors"));
            }
        }
    }
    ClaimReport::from_failures(name, "n in [4, 32], all non-initiator parties".into(), failures)
}

/// Identical parameters produce byte-identical transcripts and reports.
pub fn determinism(modulus: Modulus, seed: u64) -> ClaimReport {
    let name = "byte-identical reruns";
    let mut failures = Vec::new();
    for kind in ProtocolKind::ALL {
        let config = Config::new(5, modulus, kind, seed);
        let inputs = [3, 1, 4, 1, 5];
        let first = run_protocol(&config, &inputs).map(|r| r.transcript.to_text());
        let second = run_protocol(&config, &inputs).map(|r| r.transcript.to_text());
        if first != second {
            failures.push(format!("{kind}: transcripts differ between runs"));
        }
        let c = Coalition::of(&[2, 4], 5).unwrap();
        let a = crate::adversary::leakage_report(&config, &inputs, &c).map(|r| r.to_json());
        let b = crate::adversary::leakage_report(&config, &inputs, &c).map(|r| r.to_json());
        if a != b {
            failures.push(format!("{kind}: reports differ between runs"));
        }
    }
    ClaimReport::from_failures(name, "transcripts and reports, all kinds".into(), failures)
}

/// The unmasked protocol leaks the initiator's input to its first-round
/// neighbors; enabling the initiator mask removes every leak while the
/// other guarantees keep holding.
pub fn initiator_finding(modulus: Modulus, seed: u64) -> ClaimReport {
    let name = "initiator leak, and its repair by masking";
    let mut failures = Vec::new();

    let config = Config::new(4, modulus, ProtocolKind::CkSecureSum, seed);
    let inputs = [17, 2, 3, 4];
    let coalition = Coalition::of(&[2, 3], 4).unwrap();
    match crate::adversary::leakage_report(&config, &inputs, &coalition) {
        Ok(report) => {
            let v1 = report
                .verdicts
                .iter()
                .find(|v| v.victim.is_initiator())
                .unwrap();
            if !v1.leaked || v1.recovered_value != Some(17) {
                failures.push(format!(
                    "unmasked: expected {{P2,P3}} to recover x1 = 17, got {:?}",
                    v1.recovered_value
                ));
            }
        }
        Err(e) => failures.push(e.to_string()),
    }

    // masked sweep: nobody leaks, including the initiator
    for n in 4..=8 {
        let masked =
            Config::new(n, modulus, ProtocolKind::CkSecureSum, seed).with_initiator_mask(true);
        match exhaustive_pair_sweep(&masked) {
            Ok(cells) => {
                for cell in cells.iter().filter(|c| c.leaked) {
                    failures.push(format!(
                        "masked n={n}: {}+{} leaks {}",
                        cell.coalition[0], cell.coalition[1], cell.victim
                    ));
                }
            }
            Err(e) => failures.push(format!("masked n={n}: {e}")),
        }
    }

    // the repaired variant keeps the other guarantees
    for dependent in [
        announced_sum_correctness(modulus, seed, true),
        middle_party_zero_leakage(modulus, seed, true),
    ] {
        if !dependent.pass {
            failures.push(format!("with mask, '{}' fails: {}", dependent.name, dependent.detail));
        }
    }

    ClaimReport::from_failures(
        name,
        "unmasked leak reproduced; masked sweeps clean for n in [4, 8]".into(),
        failures,
    )
}
