use super::*;
use crate::engine::{run_protocol, Config, ProtocolKind};
use crate::modular::Modulus;
use crate::topology::PartyId;

fn p(i: usize) -> PartyId {
    PartyId::new(i)
}

fn m97() -> Modulus {
    Modulus::new(97).unwrap()
}

fn config(kind: ProtocolKind, n: usize, seed: u64) -> Config {
    Config::new(n, m97(), kind, seed)
}

fn run(kind: ProtocolKind, n: usize, seed: u64, inputs: &[u64]) -> ProtocolRun {
    run_protocol(&config(kind, n, seed), inputs).unwrap()
}

#[test]
fn coalition_validation() {
    assert!(matches!(
        Coalition::of(&[], 4),
        Err(AdversaryError::EmptyCoalition)
    ));
    assert!(matches!(
        Coalition::of(&[1, 2, 3, 4], 4),
        Err(AdversaryError::NotProperSubset { .. })
    ));
    assert!(matches!(
        Coalition::of(&[5], 4),
        Err(AdversaryError::MemberOutOfRange { .. })
    ));
    let c = Coalition::of(&[2, 4], 5).unwrap();
    assert_eq!(c.victims(), vec![p(1), p(3), p(5)]);
}

#[test]
fn clifton_bracketing_view_pins_the_middle_party() {
    let inputs = [10, 20, 30, 40, 50];
    let run = run(ProtocolKind::CliftonSum, 5, 7, &inputs);
    let c = Coalition::of(&[2, 4], 5).unwrap();
    let view = extract_view(&run, &c).unwrap();
    let solver = SpanSolver::new(&view).unwrap();
    assert_eq!(solver.determine(&view.layout.input_target(p(3))), Some(30));
}

#[test]
fn ck_round_two_equations_follow_the_prefix_sum_rule() {
    let run = run(ProtocolKind::CkSecureSum, 4, 42, &[1, 2, 3, 4]);
    let c = Coalition::of(&[3, 4], 4).unwrap();
    let view = extract_view(&run, &c).unwrap();
    let layout = view.layout;

    // round 2 order is P1,P3,P2,P4: P3 receives the hop-1 value d_{1,2},
    // P4 receives the hop-3 value d_{1,2} + d_{3,2} + d_{2,2}
    let mut hop1 = vec![0u64; layout.num_vars()];
    hop1[layout.seg_col(p(1), 2)] = 1;
    let mut hop3 = hop1.clone();
    hop3[layout.seg_col(p(3), 2)] = 1;
    hop3[layout.seg_col(p(2), 2)] = 1;
    assert!(view.equations.iter().any(|eq| eq.coeffs == hop1));
    assert!(view.equations.iter().any(|eq| eq.coeffs == hop3));
}

#[test]
fn complement_of_a_singleton_determines_everything() {
    let inputs = [9, 8, 7, 6];
    let run = run(ProtocolKind::CkSecureSum, 4, 3, &inputs);
    let c = Coalition::of(&[1, 2, 3], 4).unwrap();
    let verdicts = analyze_coalition(&run, &c).unwrap();
    assert_eq!(verdicts.len(), 1);
    assert!(verdicts[0].real_determined);
    assert_eq!(verdicts[0].recovered_value, Some(6));
    // forced by the announced sum alone, so ideal-determined too
    assert!(verdicts[0].ideal_determined);
    assert!(!verdicts[0].leaked);
}

#[test]
fn ksecure_bracketing_pair_learns_every_victim_segment() {
    let inputs = [10, 20, 30, 40, 50];
    let run = run(ProtocolKind::KSecureSum, 5, 11, &inputs);
    let c = Coalition::of(&[2, 4], 5).unwrap();
    let determined = rule_closure(&run, &c);
    let k = run.segments.k();
    assert_eq!(k, 4);
    for j in 1..=k {
        assert!(determined.contains(&(p(3), j)), "missing d_{{3,{j}}}");
    }
}

#[test]
fn ck_neighbors_of_initiator_learn_all_its_segments() {
    let run = run(ProtocolKind::CkSecureSum, 4, 42, &[1, 2, 3, 4]);
    let c = Coalition::of(&[2, 3], 4).unwrap();
    let determined = rule_closure(&run, &c);
    let learned: Vec<usize> = (1..=3).filter(|&j| determined.contains(&(p(1), j))).collect();
    assert_eq!(learned, vec![1, 2, 3]);
}

#[test]
fn ck_bracketing_pair_misses_some_victim_segments() {
    let run = run(ProtocolKind::CkSecureSum, 4, 42, &[1, 2, 3, 4]);
    let c = Coalition::of(&[3, 4], 4).unwrap();
    let determined = rule_closure(&run, &c);
    let learned = (1..=3).filter(|&j| determined.contains(&(p(2), j))).count();
    assert!(learned < 3, "rule closure learned all segments of P2");
}

#[test]
fn rule_closure_is_sound_for_the_linear_oracle() {
    for (kind, n) in [
        (ProtocolKind::CliftonSum, 5),
        (ProtocolKind::KSecureSum, 5),
        (ProtocolKind::CkSecureSum, 6),
    ] {
        let inputs: Vec<u64> = (0..n as u64).collect();
        let run = run(kind, n, 5, &inputs);
        let c = Coalition::of(&[2, 3], n).unwrap();
        let view = extract_view(&run, &c).unwrap();
        let solver = SpanSolver::new(&view).unwrap();
        for (party, j) in rule_closure(&run, &c) {
            let got = solver.determine(&view.layout.segment_target(party, j));
            assert_eq!(
                got,
                Some(run.segments.segment(party, j)),
                "{kind:?}: rule closure marked d_{{{party},{j}}} but the oracle disagrees"
            );
        }
    }
}

#[test]
fn ck_victim_input_stays_hidden_while_some_segments_leak() {
    let run = run(ProtocolKind::CkSecureSum, 4, 42, &[1, 2, 3, 4]);
    let c = Coalition::of(&[3, 4], 4).unwrap();
    let verdicts = analyze_coalition(&run, &c).unwrap();
    let v2 = verdicts.iter().find(|v| v.victim == p(2)).unwrap();
    assert!(!v2.real_determined);
    assert!(!v2.leaked);
    // the span oracle pins two of the three segments of P2 (one via
    // bracketing, one via round totals and the announced sum) yet the
    // input itself stays free
    assert_eq!(v2.segments_learned, 2);

    // cross-check determinacy with the enumeration oracle over Z_5
    let tiny = Config::new(4, Modulus::new(5).unwrap(), ProtocolKind::CkSecureSum, 42);
    let tiny_run = run_protocol(&tiny, &[1, 2, 3, 4]).unwrap();
    let view = extract_view(&tiny_run, &c).unwrap();
    let target = view.layout.input_target(p(2));
    let brute = enumerate_determinations(&view, std::slice::from_ref(&target)).unwrap();
    assert_eq!(brute, vec![None]);
    assert_eq!(linear_oracle(&view, &target).unwrap(), None);
}

#[test]
fn ck_initiator_leaks_to_its_first_round_neighbors() {
    let inputs = [17, 2, 3, 4];
    let report = leakage_report(
        &config(ProtocolKind::CkSecureSum, 4, 42),
        &inputs,
        &Coalition::of(&[2, 3], 4).unwrap(),
    )
    .unwrap();
    let v1 = report.verdicts.iter().find(|v| v.victim == p(1)).unwrap();
    assert!(v1.leaked);
    assert_eq!(v1.recovered_value, Some(17));
    assert_eq!(v1.segments_learned, 3);
}

#[test]
fn ck_middle_party_does_not_leak_to_its_bracketing_pair() {
    let report = leakage_report(
        &config(ProtocolKind::CkSecureSum, 4, 42),
        &[1, 2, 3, 4],
        &Coalition::of(&[3, 4], 4).unwrap(),
    )
    .unwrap();
    let v2 = report.verdicts.iter().find(|v| v.victim == p(2)).unwrap();
    assert!(!v2.leaked);
    assert_eq!(report.aggregates.middle_leaked, 0);
}

#[test]
fn clifton_bracketing_pair_leaks_the_middle_party() {
    let inputs = [10, 20, 30, 40, 50];
    let report = leakage_report(
        &config(ProtocolKind::CliftonSum, 5, 9),
        &inputs,
        &Coalition::of(&[2, 4], 5).unwrap(),
    )
    .unwrap();
    let v3 = report.verdicts.iter().find(|v| v.victim == p(3)).unwrap();
    assert!(v3.leaked);
    assert_eq!(v3.recovered_value, Some(30));
}

#[test]
fn clifton_sweep_every_bracketing_pair_leaks() {
    let cfg = config(ProtocolKind::CliftonSum, 4, 1);
    let cells = exhaustive_pair_sweep(&cfg).unwrap();
    for v in 2..=4 {
        let (pred, succ) = (if v == 2 { 1 } else { v - 1 }, if v == 4 { 1 } else { v + 1 });
        let cell = cells
            .iter()
            .find(|c| {
                c.victim == p(v)
                    && c.coalition == [p(pred.min(succ)), p(pred.max(succ))]
            })
            .unwrap();
        assert!(cell.leaked, "bracketing pair failed to leak P{v}");
    }
}

#[test]
fn ksecure_sweep_middle_victims_leak_exactly_to_their_bracketing_pair() {
    let cfg = config(ProtocolKind::KSecureSum, 4, 1);
    let cells = exhaustive_pair_sweep(&cfg).unwrap();
    for cell in &cells {
        let v = cell.victim.index();
        let pred = if v == 1 { 4 } else { v - 1 };
        let succ = if v == 4 { 1 } else { v + 1 };
        let bracket = [p(pred.min(succ)), p(pred.max(succ))];
        if cell.coalition == bracket {
            assert!(cell.leaked, "bracketing pair missed P{v}");
            assert_eq!(cell.segments_learned, 3);
        }
    }
}

#[test]
fn ideal_knowledge_is_subsumed_by_real_knowledge() {
    for kind in ProtocolKind::ALL {
        let cfg = config(kind, 5, 3);
        for cell in exhaustive_pair_sweep(&cfg).unwrap() {
            assert!(
                !cell.ideal_determined || cell.real_determined,
                "{kind:?}: ideal view stronger than real view for {}",
                cell.victim
            );
        }
    }
}

#[test]
fn real_knowledge_grows_with_the_coalition() {
    let inputs = [1, 2, 3, 4, 5];
    let run = run(ProtocolKind::CkSecureSum, 5, 8, &inputs);
    let small = Coalition::of(&[2, 3], 5).unwrap();
    let large = Coalition::of(&[2, 3, 4], 5).unwrap();
    let small_verdicts = analyze_coalition(&run, &small).unwrap();
    let large_verdicts = analyze_coalition(&run, &large).unwrap();
    for lv in &large_verdicts {
        let sv = small_verdicts.iter().find(|v| v.victim == lv.victim).unwrap();
        assert!(!sv.real_determined || lv.real_determined);
        assert!(sv.segments_learned <= lv.segments_learned);
    }
}

#[test]
fn linear_oracle_matches_enumeration_on_a_tiny_field() {
    let m5 = Modulus::new(5).unwrap();
    let cfg = Config::new(4, m5, ProtocolKind::CkSecureSum, 13);
    let run = run_protocol(&cfg, &[1, 2, 3, 4]).unwrap();
    for a in 1..=3 {
        for b in a + 1..=4 {
            let c = Coalition::of(&[a, b], 4).unwrap();
            let view = extract_view(&run, &c).unwrap();
            let solver = SpanSolver::new(&view).unwrap();
            let mut targets = Vec::new();
            for victim in c.victims() {
                targets.push(view.layout.input_target(victim));
                for j in 1..=view.layout.k {
                    targets.push(view.layout.segment_target(victim, j));
                }
            }
            let brute = enumerate_determinations(&view, &targets).unwrap();
            for (target, brute) in targets.iter().zip(brute) {
                assert_eq!(solver.determine(target), brute);
            }
        }
    }
}

#[test]
fn monte_carlo_masked_ck_never_leaks() {
    let cfg = config(ProtocolKind::CkSecureSum, 5, 21).with_initiator_mask(true);
    let result = monte_carlo_leakage(&cfg, 40, 2).unwrap();
    assert_eq!(result.initiator.leaked, 0);
    assert_eq!(result.middle.leaked, 0);
    assert_eq!(result.middle.probability, 0.0);
}

#[test]
fn unmasked_ck_pair_sweep_has_exactly_two_leaking_cells() {
    // the two leaks of the unmasked protocol: the initiator to its
    // round-1 neighbors {P2,P3}, and the last party to {P2,P_{n-1}}
    // (P2 holds the final ring position in the last round and hands the
    // round total to P1, which combines with the announced sum)
    for n in [5usize, 6, 7] {
        let cfg = config(ProtocolKind::CkSecureSum, n, 1);
        let leaks: Vec<(usize, usize, usize)> = exhaustive_pair_sweep(&cfg)
            .unwrap()
            .into_iter()
            .filter(|c| c.leaked)
            .map(|c| (c.coalition[0].index(), c.coalition[1].index(), c.victim.index()))
            .collect();
        assert_eq!(leaks, vec![(2, 3, 1), (2, n - 1, n)], "n={n}");
    }
}

#[test]
fn monte_carlo_clifton_matches_the_counting_argument() {
    // probability that a random pair brackets a given victim at n = 5 is
    // 1 / C(4,2) = 1/6
    let cfg = config(ProtocolKind::CliftonSum, 5, 2);
    let result = monte_carlo_leakage(&cfg, 2000, 2).unwrap();
    let expected = 1.0 / 6.0;
    assert!(
        (result.middle.probability - expected).abs() < 0.03,
        "estimate {} too far from {expected}",
        result.middle.probability
    );
    assert!(result.middle.std_error > 0.0);
}

#[test]
fn monte_carlo_rejects_bad_parameters() {
    let cfg = config(ProtocolKind::CkSecureSum, 4, 0);
    assert!(matches!(
        monte_carlo_leakage(&cfg, 0, 2),
        Err(AdversaryError::InvalidTrials)
    ));
    assert!(matches!(
        monte_carlo_leakage(&cfg, 10, 0),
        Err(AdversaryError::CoalitionSizeOutOfRange { .. })
    ));
    assert!(matches!(
        monte_carlo_leakage(&cfg, 10, 4),
        Err(AdversaryError::CoalitionSizeOutOfRange { .. })
    ));
}

#[test]
fn masked_runs_hide_the_initiator() {
    let cfg = config(ProtocolKind::CkSecureSum, 4, 42).with_initiator_mask(true);
    let report = leakage_report(&cfg, &[17, 2, 3, 4], &Coalition::of(&[2, 3], 4).unwrap()).unwrap();
    let v1 = report.verdicts.iter().find(|v| v.victim == p(1)).unwrap();
    assert!(!v1.real_determined);
    assert!(!v1.leaked);
}

#[test]
fn report_serialization_is_deterministic() {
    let cfg = config(ProtocolKind::CkSecureSum, 4, 42);
    let c = Coalition::of(&[2, 3], 4).unwrap();
    let a = leakage_report(&cfg, &[1, 2, 3, 4], &c).unwrap().to_json();
    let b = leakage_report(&cfg, &[1, 2, 3, 4], &c).unwrap().to_json();
    assert_eq!(a, b);
    assert!(a.contains("\"protocol\": \"ck\""));
}
