use super::oracle::*;
use super::*;
use crate::align::{align_log, alignment_cost, is_valid_alignment, CostTable, MoveKind, SearchOptions};
use crate::eventlog::parse_csv;
use crate::fixtures;
use crate::ilp::check_feasible;
use crate::rcnu::{Mode, Variable};

fn composed(net: &RcNuNet, log: &EventLog) -> ComposedAlignment {
    compose_cases(net, log, &CostTable::default(), &SearchOptions::default()).unwrap()
}

fn desk_mode(case: &str, desk: &str) -> Mode {
    Mode([(Variable::Case("c".into()), case.to_string()), (Variable::Resource("k".into()), desk.to_string())].into())
}

/// take/give of cases a and b on one desk, both takes before both gives.
fn overlapping_desks(net: &RcNuNet) -> (Vec<Move>, BitMatrix) {
    let take = net.transition_index("take").unwrap();
    let give = net.transition_index("give").unwrap();
    let moves = vec![
        Move::model(take, desk_mode("a", "k1")),
        Move::model(give, desk_mode("a", "k1")),
        Move::model(take, desk_mode("b", "k1")),
        Move::model(give, desk_mode("b", "k1")),
    ];
    let mut o = BitMatrix::new(4);
    for (x, y) in [(0, 1), (2, 3), (0, 3), (2, 1)] {
        o.set(x, y);
    }
    (moves, o)
}

#[test]
fn one_case_is_its_alignment() {
    let net = fixtures::hospital_net();
    let log = fixtures::hospital_log().project_case("c1");
    let r = align_log(&net, &log, &CostTable::default(), &SearchOptions::default()).unwrap();
    let c = composed(&net, &log);
    assert_eq!(c.len(), r.alignment.len());
    assert_eq!(c.moves.order().count(), r.alignment.order().count());
    assert!(c.case_of.iter().all(|x| x == "c1"));
}

#[test]
fn hospital_composition_keeps_case_and_log_order() {
    let net = fixtures::hospital_net();
    let log = fixtures::hospital_log();
    let c = composed(&net, &log);
    let per = align_cases(&net, &log, &CostTable::default(), &SearchOptions::default()).unwrap();
    for (case, (al, _)) in &per {
        let idx = c.case_moves(case);
        assert_eq!(idx.len(), al.len());
        let sub = c.moves.subposet(&idx);
        assert_eq!(sub.order().count(), al.order().count(), "case {case}");
    }
    let events: Vec<(usize, usize)> = (0..c.len())
        .filter_map(|i| c.moves.element(i).event.as_ref().map(|e| (i, log.position(e.id).unwrap())))
        .collect();
    for &(i, x) in &events {
        for &(j, y) in &events {
            if log.lt(x, y) {
                assert!(c.moves.lt(i, j));
            }
        }
    }
    let cross = (0..c.len()).any(|i| (0..c.len()).any(|j| c.case_of[i] != c.case_of[j] && c.moves.lt(i, j)));
    assert!(cross);
}

#[test]
fn two_cases_without_log_order_are_disjoint() {
    let net = fixtures::desk_net(2);
    let log = parse_csv("case,activity,timestamp,resources\na,take,1,desk:k1\na,give,2,desk:k1\nb,take,1,desk:k2\nb,give,2,desk:k2\n")
        .unwrap();
    let c = composed(&net, &log);
    for i in 0..c.len() {
        for j in 0..c.len() {
            if c.case_of[i] != c.case_of[j] {
                let (x, y) = (c.moves.element(i), c.moves.element(j));
                let ordered = log.lt(log.position(x.event.as_ref().unwrap().id).unwrap(), log.position(y.event.as_ref().unwrap().id).unwrap());
                assert_eq!(c.moves.lt(i, j), ordered);
            }
        }
    }
}

#[test]
fn fresh_identifiers_are_renamed_apart() {
    let net = fixtures::arrivals_net();
    let log = parse_csv("case,activity,timestamp,resources\na,serve,1,clerk:k1\nb,serve,5,clerk:k1\n").unwrap();
    let c = composed(&net, &log);
    let arrive = net.transition_index("arrive").unwrap();
    let created: Vec<&str> = c
        .moves
        .elements()
        .iter()
        .filter_map(|m| m.firing.as_ref())
        .filter(|f| f.transition == arrive)
        .map(|f| f.mode.get(&Variable::NuCase).unwrap())
        .collect();
    let distinct: BTreeSet<&str> = created.iter().copied().collect();
    assert_eq!(created.len(), distinct.len());
}

#[test]
fn simultaneous_claims_violate() {
    let net = fixtures::desk_net(1);
    let (moves, o) = overlapping_desks(&net);
    assert!(violating_antichain(&net, &moves, &o, &[0, 2]));
    // Both claims lie before the gives, so the desk is overdrawn there too.
    assert!(violating_antichain(&net, &moves, &o, &[1, 3]));
    let al = Poset::from_closed(moves, o).unwrap();
    assert!(is_violating_by_enumeration(&net, &al));
}

#[test]
fn capacity_two_covers_both_claims() {
    let text = r#"{
  "places": [{"id": "start"}, {"id": "mid"}, {"id": "end"},
             {"id": "desk", "kind": "available", "role": "desk"},
             {"id": "desk_busy", "kind": "busy", "role": "desk"}],
  "transitions": [
    {"id": "take", "label": "take",
      "in": [{"place": "start", "case": "c"}, {"place": "desk", "resource": "k"}],
      "out": [{"place": "mid", "case": "c"}, {"place": "desk_busy", "case": "c", "resource": "k"}]},
    {"id": "give", "label": "give",
      "in": [{"place": "mid", "case": "c"}, {"place": "desk_busy", "case": "c", "resource": "k"}],
      "out": [{"place": "end", "case": "c"}, {"place": "desk", "resource": "k"}]}
  ],
  "initial": [{"place": "start", "case": "*"}, {"place": "desk", "resource": "k1", "count": 2}],
  "final": [{"place": "end", "case": "*"}, {"place": "desk", "resource": "k1", "count": 2}]
}"#;
    let net = crate::format::netfile::parse_net(text).unwrap();
    let (moves, o) = overlapping_desks(&net);
    assert!(!violating_antichain(&net, &moves, &o, &[0, 2]));
}

#[test]
fn fitting_disjoint_cases_do_not_violate() {
    let net = fixtures::desk_net(2);
    let log = parse_csv("case,activity,timestamp,resources\na,take,1,desk:k1\nb,take,1,desk:k2\na,give,2,desk:k1\nb,give,2,desk:k2\n")
        .unwrap();
    let c = composed(&net, &log);
    assert!(!is_violating(&net, &c, 100_000).unwrap());
    assert!(!is_violating_by_enumeration(&net, &c.moves));
}

#[test]
fn cost_zero_iff_not_violating() {
    let mut seen = [0; 2];
    for (f, c) in fixtures::composed_fixtures() {
        let ilp = is_violating(&f.net, &c, 1_000_000).unwrap();
        let brute = is_violating_by_enumeration(&f.net, &c.moves);
        assert_eq!(ilp, brute, "{}", f.name);
        seen[brute as usize] += 1;
    }
    assert!(seen[0] > 0 && seen[1] > 0, "{seen:?}");
}

#[test]
fn violating_compositions_do_not_replay() {
    for (f, c) in fixtures::composed_fixtures() {
        if is_violating_by_enumeration(&f.net, &c.moves) {
            let n = replaying_linearizations(&f.net, &c.moves, &c.initial_marking(&f.net), &c.final_marking(&f.net));
            assert_eq!(n, 0, "{}", f.name);
        }
    }
}

#[test]
fn antichain_markings_reachable_iff_prefix_not_violating() {
    for (f, c) in fixtures::composed_fixtures() {
        let m_i = c.initial_marking(&f.net);
        for g in c.moves.maximal_antichains().unwrap() {
            let prefix = c.moves.prefix(&g, true).unwrap();
            let reach = replayable(&f.net, &c.moves, &prefix, &m_i);
            let sub = c.moves.subposet(&prefix);
            assert_eq!(reach, !is_violating_by_enumeration(&f.net, &sub), "{} {g:?}", f.name);
        }
    }
}

#[test]
fn extensions_of_a_two_chain() {
    let mut o = BitMatrix::new(3);
    o.set(0, 1);
    // 0<1 with 2 free: 2 apart, 2 below 0, 2 between, 2 above 1, 2 below 1 only, 2 above 0 only.
    assert_eq!(extensions(&o).len(), 6);
    assert_eq!(extensions(&BitMatrix::new(3)).len(), 19);
}

#[test]
fn same_case_pairs_are_fixed() {
    let net = fixtures::desk_net(1);
    let log = parse_csv("case,activity,timestamp,resources\na,take,1,desk:k1\na,give,2,desk:k1\n").unwrap();
    let inst = build_ilp(&net, &composed(&net, &log));
    assert_eq!(inst.free_vars(), 0);
}

#[test]
fn free_variables_are_cross_case_pairs() {
    let f = fixtures::perf_fixture();
    let log = fixtures::contention_log(3);
    let c = composed(&f.net, &log);
    let inst = build_ilp(&f.net, &c);
    let cross = (0..c.len()).flat_map(|i| (0..c.len()).map(move |j| (i, j))).filter(|&(i, j)| c.case_of[i] != c.case_of[j]).count();
    assert_eq!(inst.free_vars(), cross);
}

#[test]
fn block_triangular_is_feasible() {
    for seed in 0..40 {
        let f = fixtures::generated(seed);
        let c = composed(&f.net, &f.log);
        let inst = build_ilp(&f.net, &c);
        let x = inst.block_triangular();
        assert_eq!(inst.check(&x), Ok(()), "{}", f.name);
    }
}

#[test]
fn broken_transitivity_is_reported() {
    let net = fixtures::desk_net(2);
    let log = parse_csv("case,activity,timestamp,resources\na,take,1,desk:k1\nb,take,1,desk:k2\na,give,2,desk:k1\nb,give,2,desk:k2\n")
        .unwrap();
    let c = composed(&net, &log);
    let inst = build_ilp(&net, &c);
    let mut x = inst.block_triangular();
    // a's take precedes b's take only through a's give.
    let (a_take, b_take) = (c.case_moves("a")[0], c.case_moves("b")[0]);
    x[inst.var(a_take, b_take).unwrap()] = false;
    let err = inst.check(&x).unwrap_err();
    assert!(format!("{err:?}").contains("trans_"), "{err:?}");
}

#[test]
fn solver_matches_enumeration_on_small_instances() {
    for (f, c) in fixtures::composed_fixtures() {
        let inst = build_ilp(&f.net, &c);
        if inst.free_vars() > 12 {
            continue;
        }
        let free: Vec<usize> = (0..inst.program.n_vars).filter(|v| !inst.program.fixings.contains_key(v)).collect();
        let mut best = i64::MAX;
        for bits in 0u32..(1 << free.len()) {
            let mut x = vec![false; inst.program.n_vars];
            for (&v, &b) in &inst.program.fixings {
                x[v] = b;
            }
            for (k, &v) in free.iter().enumerate() {
                x[v] = bits >> k & 1 == 1;
            }
            if inst.check(&x).is_ok() {
                best = best.min(inst.program.value(&x));
            }
        }
        let out = solve_instance(&inst, 1_000_000).unwrap();
        assert!(out.proven);
        assert_eq!(out.objective, best, "{}", f.name);
        assert!(check_feasible(&inst.program, &out.x).is_ok());
    }
}

#[test]
fn non_violating_has_no_intervals() {
    let net = fixtures::hospital_net();
    let log = fixtures::hospital_log();
    let c = composed(&net, &log);
    let ext = solve_and_extract(&c, &build_ilp(&net, &c), 20_000).unwrap();
    assert_eq!(ext.objective, 0);
    assert!(ext.intervals.is_empty());
}

fn claims(net: &RcNuNet, c: &ComposedAlignment, act: &str) -> Vec<usize> {
    (0..c.len())
        .filter(|&i| c.moves.element(i).firing.as_ref().is_some_and(|f| net.transitions[f.transition].id == act))
        .collect()
}

#[test]
fn contention_gives_one_interval_with_both_claims() {
    let f = fixtures::perf_fixture();
    let log = fixtures::contention_log(3);
    let c = composed(&f.net, &log);
    let ext = solve_and_extract(&c, &build_ilp(&f.net, &c), 20_000).unwrap();
    assert_eq!(ext.intervals.len(), 1, "{:?}", ext.intervals);
    let iv = &ext.intervals.intervals[0];
    let scan_in = claims(&f.net, &c, "scan_in");
    let shared: Vec<usize> = scan_in.iter().copied().filter(|&i| c.case_of[i] != "c03").collect();
    let scan_out_c01 = claims(&f.net, &c, "scan_out").into_iter().find(|&i| c.case_of[i] == "c01").unwrap();
    assert!(iv.moves.contains(&shared[1]) && iv.moves.contains(&scan_out_c01), "{iv:?}");
    let g: Vec<usize> = shared.clone();
    assert!(violating_antichain(&f.net, c.moves.elements(), c.moves.order(), &[g[1], scan_out_c01]) || c.moves.lt(g[1], scan_out_c01));
}

#[test]
fn independent_contentions_give_two_intervals() {
    let net = fixtures::desk_net(2);
    let log = parse_csv(
        "case,activity,timestamp,resources\n\
         a,take,1,desk:k1\nb,take,2,desk:k1\na,give,3,desk:k1\nb,give,4,desk:k1\n\
         c,take,11,desk:k2\nd,take,12,desk:k2\nc,give,13,desk:k2\nd,give,14,desk:k2\n",
    )
    .unwrap();
    let c = composed(&net, &log);
    let ext = solve_and_extract(&c, &build_ilp(&net, &c), 20_000).unwrap();
    assert_eq!(ext.intervals.len(), 2);
    let (x, y) = (&ext.intervals.intervals[0].moves, &ext.intervals.intervals[1].moves);
    assert!(x.iter().all(|g| !y.contains(g)));
}

#[test]
fn serializing_claims_needs_no_model_move() {
    let net = fixtures::desk_net(1);
    let log = parse_csv("case,activity,timestamp,resources\na,take,1,desk:k1\na,give,1,desk:k1\nb,take,1,desk:k1\nb,give,1,desk:k1\n")
        .unwrap();
    let c = composed(&net, &log);
    assert!(!is_violating_by_enumeration(&net, &c.moves));
    assert!(oracle::has_violating_antichain(&net, c.moves.elements(), c.moves.order()));
    let r = approximate_alignment(&net, &log, &ApproxOptions::default()).unwrap();
    assert_eq!(r.cost, 0);
    let iv = Interval { moves: (0..c.len()).collect(), a: vec![], b: vec![] };
    let order = c.moves.order().clone();
    let re = realign_interval(&net, &log, &c, &order, &iv, &CostTable::default(), &SearchOptions::default());
    assert!(!re.fallback);
    assert_eq!(re.cost, 0);
    assert!(re.alignment.elements().iter().all(|m| m.kind == MoveKind::Sync));
}

#[test]
fn forced_interleaving_needs_model_moves() {
    let net = fixtures::desk_net(1);
    let log = parse_csv("case,activity,timestamp,resources\na,take,1,desk:k1\nb,take,2,desk:k1\na,give,3,desk:k1\nb,give,4,desk:k1\n")
        .unwrap();
    let r = approximate_alignment(&net, &log, &ApproxOptions::default()).unwrap();
    let exact = align_log(&net, &log, &CostTable::default(), &SearchOptions::default()).unwrap();
    assert_eq!(r.intervals.len(), 1);
    assert!(r.intervals.iter().all(|i| !i.fallback));
    assert!(r.cost >= exact.cost);
    assert_eq!(r.cost, 20_000);
    assert_eq!(exact.cost, 20_000);
}

#[test]
fn fitting_log_is_exact() {
    let net = fixtures::hospital_net();
    let log = fixtures::hospital_log();
    let r = approximate_alignment(&net, &log, &ApproxOptions::default()).unwrap();
    let exact = align_log(&net, &log, &CostTable::default(), &SearchOptions::default()).unwrap();
    assert_eq!(r.cost, exact.cost);
    assert!(r.intervals.is_empty());
    assert!(!r.global_fallback);
}

#[test]
fn hospital_violations_three_regions() {
    let net = fixtures::hospital_net();
    let log = fixtures::hospital_violations_log();
    let r = approximate_alignment(&net, &log, &ApproxOptions::default()).unwrap();
    let cases = log.cases();
    let v = is_valid_alignment(&net, &net.initial_marking(&cases), &net.final_marking_for(&cases), &log, &r.alignment);
    assert!(v.is_valid(), "{v:?}");
    assert_eq!(r.intervals.len(), 3, "{:?}", r.intervals.iter().map(|i| &i.interval).collect::<Vec<_>>());
    assert!(!r.global_fallback);
    assert_eq!(r.cost, alignment_cost(&r.alignment, &net, &CostTable::default()));
}

#[test]
fn generated_approximations_are_valid_and_dominate() {
    for seed in 0..24 {
        let f = fixtures::generated(seed);
        let r = approximate_alignment(&f.net, &f.log, &ApproxOptions::default()).unwrap();
        let cases = f.log.cases();
        let v = is_valid_alignment(&f.net, &f.net.initial_marking(&cases), &f.net.final_marking_for(&cases), &f.log, &r.alignment);
        assert!(v.is_valid(), "{}: {v:?}", f.name);
        let opts = SearchOptions { node_budget: 200_000, ..Default::default() };
        if let Ok(exact) = align_log(&f.net, &f.log, &CostTable::default(), &opts) {
            assert!(r.cost >= exact.cost, "{}", f.name);
            if r.ilp_objective == 0 {
                assert_eq!(r.cost, exact.cost, "{}", f.name);
            }
        }
    }
}
