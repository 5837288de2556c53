use coalign_core::approx::{approximate_alignment, ApproxOptions};
use coalign_core::eventlog::EventLog;
use coalign_core::format::report::AlignmentReport;
use coalign_core::lognet::build_log_net;
use coalign_core::net::{self, LabeledNet};
use coalign_core::poset::Poset;
use coalign_core::rcnu::simulate::case_names;
use coalign_core::rcnu::{enabled_modes, fire_mode, ColoredMarking, PlaceKind, RcNuNet};
use coalign_core::{fixtures, rcnu};
use num_traits::ToPrimitive;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet};

fn reversed(n: &LabeledNet) -> LabeledNet {
    LabeledNet { pre: n.post.clone(), post: n.pre.clone(), ..n.clone() }
}

fn weigh(y: &[i64], m: &[u64]) -> i64 {
    y.iter().zip(m).map(|(a, &b)| a * b as i64).sum()
}

fn bundled() -> Vec<RcNuNet> {
    vec![fixtures::operation_net(), fixtures::hospital_net(), fixtures::clinic_net(), fixtures::arrivals_net()]
}

/// Tokens per resource instance over a role's available and busy places.
fn resource_counts(net: &RcNuNet, m: &ColoredMarking) -> BTreeMap<String, u64> {
    let mut out = BTreeMap::new();
    for (p, place) in net.places.iter().enumerate() {
        if matches!(place.kind, PlaceKind::Production) {
            continue;
        }
        for (tok, n) in m.0[p].iter() {
            if let Some(r) = &tok.resource {
                *out.entry(r.clone()).or_insert(0) += n;
            }
        }
    }
    out
}

fn busy_holders(net: &RcNuNet, m: &ColoredMarking) -> BTreeMap<String, BTreeSet<String>> {
    let mut out: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for (p, place) in net.places.iter().enumerate() {
        if let PlaceKind::Busy(_) = place.kind {
            for (tok, _) in m.0[p].iter() {
                if let (Some(c), Some(r)) = (&tok.case, &tok.resource) {
                    out.entry(r.clone()).or_default().insert(c.clone());
                }
            }
        }
    }
    out
}

fn arb_log() -> impl Strategy<Value = EventLog> {
    (0u64..200).prop_map(|s| fixtures::generated(s).log)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn reverse_firing_restores_the_marking(seed in any::<u64>(), tokens in 1u64..4) {
        let n = fixtures::operation_classical();
        let back = reversed(&n);
        let mut m = n.marking(&[("p_i", tokens), ("p_s", 2)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..30 {
            let on: Vec<usize> = (0..n.transitions.len()).filter(|&t| net::enabled(&n, &m, t)).collect();
            let Some(&t) = on.choose(&mut rng) else { break };
            let next = net::fire(&n, &m, t).unwrap();
            prop_assert_eq!(net::fire(&back, &next, t).unwrap(), m.clone());
            m = next;
        }
    }

    #[test]
    fn place_invariants_are_conserved(seed in any::<u64>(), tokens in 1u64..4) {
        let n = fixtures::operation_classical();
        let ys: Vec<Vec<i64>> = net::place_invariants(&n)
            .iter()
            .map(|y| y.iter().map(|q| q.to_integer().to_i64().unwrap()).collect())
            .collect();
        prop_assert!(!ys.is_empty());
        let mut m = n.marking(&[("p_i", tokens), ("p_s", 2)]).unwrap();
        let start: Vec<i64> = ys.iter().map(|y| weigh(y, &m)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..40 {
            let on: Vec<usize> = (0..n.transitions.len()).filter(|&t| net::enabled(&n, &m, t)).collect();
            let Some(&t) = on.choose(&mut rng) else { break };
            m = net::fire(&n, &m, t).unwrap();
            let now: Vec<i64> = ys.iter().map(|y| weigh(y, &m)).collect();
            prop_assert_eq!(&now, &start);
        }
    }

    #[test]
    fn rc_walks_conserve_resources(seed in any::<u64>(), which in 0usize..4, cases in 1usize..4) {
        let nets = bundled();
        let net = &nets[which];
        let names = case_names(cases);
        let pool: Vec<String> = (0..2).map(|i| format!("fresh{i}")).collect();
        let mut m = net.initial_marking(&names);
        let start = resource_counts(net, &m);
        let caps = net.resource_capacities();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..60 {
            let steps: Vec<(usize, rcnu::Mode)> = (0..net.transitions.len())
                .flat_map(|t| enabled_modes(net, &m, t, &pool).into_iter().map(move |md| (t, md)))
                .collect();
            let Some((t, mode)) = steps.choose(&mut rng).cloned() else { break };
            let values: BTreeSet<&String> = mode.0.values().collect();
            prop_assert_eq!(values.len(), mode.0.len(), "mode {} is not injective", mode);
            m = fire_mode(net, &m, t, &mode).unwrap();
            prop_assert_eq!(resource_counts(net, &m), start.clone());
            for (r, holders) in busy_holders(net, &m) {
                if caps.get(&r).map(|c| c.1) == Some(1) {
                    prop_assert!(holders.len() <= 1, "{} held by {:?}", r, holders);
                }
            }
        }
    }

    #[test]
    fn case_projections_partition_the_log(log in arb_log()) {
        let mut seen = BTreeSet::new();
        let mut total = 0;
        for c in log.cases() {
            let p = log.project_case(&c);
            total += p.len();
            for i in 0..p.len() {
                prop_assert!(seen.insert(p.event(i).id));
                for j in 0..p.len() {
                    let (a, b) = (log.position(p.event(i).id).unwrap(), log.position(p.event(j).id).unwrap());
                    prop_assert_eq!(p.lt(i, j), log.lt(a, b));
                }
            }
        }
        prop_assert_eq!(total, log.len());
    }

    #[test]
    fn log_net_fires_each_transition_once(log in arb_log(), seed in any::<u64>()) {
        let ln = build_log_net(&log);
        let cases = log.cases();
        let mut m = ln.net.initial_marking(&cases);
        let end = ln.net.final_marking_for(&cases);
        let mut fired = vec![0usize; ln.net.transitions.len()];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        loop {
            let steps: Vec<(usize, rcnu::Mode)> = (0..ln.net.transitions.len())
                .flat_map(|t| enabled_modes(&ln.net, &m, t, &[]).into_iter().map(move |md| (t, md)))
                .collect();
            if steps.is_empty() {
                break;
            }
            let (t, mode) = steps[rng.gen_range(0..steps.len())].clone();
            m = fire_mode(&ln.net, &m, t, &mode).unwrap();
            fired[t] += 1;
        }
        prop_assert!(fired.iter().all(|&k| k == 1), "{:?}", fired);
        prop_assert_eq!(m, end);
    }

    #[test]
    fn one_linearization_iff_total(n in 1usize..6, pairs in proptest::collection::vec((0usize..6, 0usize..6), 0..12)) {
        let pairs: Vec<(usize, usize)> = pairs.into_iter().filter(|&(a, b)| a < b && b < n).collect();
        let p = Poset::new((0..n).collect::<Vec<usize>>(), pairs).unwrap();
        let total = (0..n).all(|a| (0..n).all(|b| a == b || p.le(a, b) || p.le(b, a)));
        prop_assert_eq!(p.linearizations(usize::MAX).len() == 1, total);
        for a in p.maximal_antichains().unwrap() {
            prop_assert!(p.is_antichain(&a));
            for x in (0..n).filter(|x| !a.contains(x)) {
                let mut b = a.clone();
                b.push(x);
                prop_assert!(!p.is_antichain(&b));
            }
        }
    }
}

#[test]
fn language_grows_with_the_length_bound() {
    let n = fixtures::operation_classical();
    let mi = n.marking(&[("p_i", 1), ("p_s", 2)]).unwrap();
    let mf = n.marking(&[("p_f", 1), ("p_s", 2)]).unwrap();
    let mut prev = BTreeSet::new();
    for k in 0..8 {
        let l = net::language(&n, &mi, &mf, k).unwrap();
        assert!(prev.is_subset(&l), "bound {k}");
        prev = l;
    }
    assert!(!prev.is_empty());
}

#[test]
fn approximation_is_deterministic() {
    let opts = ApproxOptions::default();
    for seed in 0..40 {
        let f = fixtures::generated(seed);
        let a = approximate_alignment(&f.net, &f.log, &opts).unwrap();
        let b = approximate_alignment(&f.net, &f.log, &opts).unwrap();
        let ra = AlignmentReport::from_approx(&f.net, &a, &opts.costs).to_json();
        let rb = AlignmentReport::from_approx(&f.net, &b, &opts.costs).to_json();
        assert_eq!(ra, rb, "{}", f.name);
    }
}
