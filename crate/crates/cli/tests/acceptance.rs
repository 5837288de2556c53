//! Acceptance suite: one PASS/FAIL line per criterion, each under its time limit.

use coalign_core::align::oracle::brute_force_cost;
use coalign_core::align::{align_log, is_valid_alignment, AlignError, CostTable, SearchOptions};
use coalign_core::approx::oracle::{is_violating_by_enumeration, replayable, replaying_linearizations};
use coalign_core::approx::{approximate_alignment, build_ilp, compose_cases, is_violating, ApproxOptions, ApproxResult};
use coalign_core::fixtures::{self, Fixture};
use coalign_core::ilp::check_feasible;
use coalign_core::net::{self, spans_invariant};
use coalign_core::poset::Multiset;
use coalign_core::rcnu::{self, enabled_modes, fire_mode, ColoredMarking};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Runs one criterion and prints its line straight to stderr, past the test harness capture.
fn criterion(id: usize, name: &str, limit: Duration, run: impl FnOnce() -> Outcome) -> bool {
    let t = Instant::now();
    let out = run();
    let took = t.elapsed();
    let (ok, detail) = match out {
        Ok(d) if took <= limit => (true, d),
        Ok(d) => (false, format!("{d}; took longer than {limit:?}")),
        Err(e) => (false, e),
    };
    let line = format!(
        "{} [{id:>2}] {name} ({:.2} s, limit {} s): {detail}\n",
        if ok { "PASS" } else { "FAIL" },
        took.as_secs_f64(),
        limit.as_secs()
    );
    let _ = std::io::stderr().write_all(line.as_bytes());
    ok
}

fn words(v: &[&[&str]]) -> BTreeSet<Vec<String>> {
    v.iter().map(|w| w.iter().map(|s| s.to_string()).collect()).collect()
}

fn language_facts() -> Outcome {
    let op = fixtures::operation_classical();
    let one_i = op.marking(&[("p_i", 1), ("p_s", 2)]).map_err(|e| e.to_string())?;
    let one_f = op.marking(&[("p_f", 1), ("p_s", 2)]).map_err(|e| e.to_string())?;
    let lang = net::language(&op, &one_i, &one_f, 12).map_err(|e| e.to_string())?;
    let single = words(&[
        &["o_p", "o_a", "o_sc"],
        &["o_p", "o_sc", "o_a"],
        &["o_p", "o_a", "o_so", "o_c"],
        &["o_p", "o_so", "o_a", "o_c"],
    ]);
    ensure(lang == single, || format!("single-case language is {lang:?}"))?;

    let two_i = op.marking(&[("p_i", 2), ("p_s", 2)]).map_err(|e| e.to_string())?;
    let two_f = op.marking(&[("p_f", 2), ("p_s", 2)]).map_err(|e| e.to_string())?;
    let lang2 = net::language(&op, &two_i, &two_f, 14).map_err(|e| e.to_string())?;
    let impossible: Vec<String> = ["o_p", "o_a", "o_sc", "o_p", "o_a", "o_so", "o_c"].iter().map(|s| s.to_string()).collect();
    ensure(lang2.contains(&impossible), || "indistinguishable cases miss the mixed interleaving".into())?;

    let rc = fixtures::operation_net();
    let cases = vec!["c".to_string(), "d".to_string()];
    let rc_lang =
        rcnu::language(&rc, &rc.initial_marking(&cases), &rc.final_marking_for(&cases), 14, &[]).map_err(|e| e.to_string())?;
    let rc_single = rcnu::language(&rc, &rc.initial_marking(&cases[..1]), &rc.final_marking_for(&cases[..1]), 12, &[])
        .map_err(|e| e.to_string())?;
    let rc_single: BTreeSet<Vec<String>> = rc_single.into_iter().map(|w| w.into_iter().map(|(l, _)| l).collect()).collect();
    ensure(rc_single == single, || format!("single-case RC language is {rc_single:?}"))?;
    for w in &rc_lang {
        for c in &cases {
            let proj: Vec<String> = w.iter().filter(|(_, k)| k.as_ref() == Some(c)).map(|(l, _)| l.clone()).collect();
            ensure(single.contains(&proj), || format!("RC word {w:?} projects to {proj:?} on {c}"))?;
        }
    }
    let mixed = |a: &str, b: &str| -> Vec<(String, Option<String>)> {
        let owner = [a, a, a, b, b, b, a];
        impossible.iter().zip(owner).map(|(l, c)| (l.clone(), Some(c.to_string()))).collect()
    };
    ensure(!rc_lang.contains(&mixed("c", "d")) && !rc_lang.contains(&mixed("d", "c")), || {
        "distinguishable cases still produce the mixed interleaving".into()
    })?;
    Ok(format!(
        "operation language = 4 known words; mixed word in classical 2-case language; absent from RC language of {} words",
        rc_lang.len()
    ))
}

fn resource_ids(m: &ColoredMarking, place: usize) -> Multiset<String> {
    Multiset::from_counts(m.0[place].iter().filter_map(|(t, n)| t.resource.clone().map(|r| (r, n))))
}

fn durability() -> Outcome {
    let net = fixtures::hospital_net();
    let roles = net.roles();
    let skel = net.skeleton();
    for (role, (avail, busy)) in &roles {
        let (a, b) = (avail.ok_or("role without available place")?, busy.ok_or("role without busy place")?);
        let mut y = vec![0i64; net.places.len()];
        y[a] = 1;
        y[b] = 1;
        ensure(spans_invariant(&skel, &y), || format!("(1,1) on role {role} is not a place invariant"))?;
    }
    let mut markings = 0usize;
    for seed in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = 1 + (seed % 4) as usize;
        let cases: Vec<String> = (1..=k).map(|i| format!("c{i}")).collect();
        let pool = vec!["nu1".to_string(), "nu2".to_string()];
        let m_i = net.initial_marking(&cases);
        let mut m = m_i.clone();
        for _ in 0..60 {
            for (role, (avail, busy)) in &roles {
                let (a, b) = (avail.unwrap(), busy.unwrap());
                let held = resource_ids(&m, a).sum(&resource_ids(&m, b));
                ensure(held == resource_ids(&m_i, a), || format!("walk {seed}: role {role} holds {held:?}"))?;
            }
            markings += 1;
            let steps: Vec<_> = (0..net.transitions.len())
                .flat_map(|t| enabled_modes(&net, &m, t, &pool).into_iter().map(move |mode| (t, mode)))
                .collect();
            let Some((t, mode)) = steps.choose(&mut rng) else { break };
            m = fire_mode(&net, &m, *t, mode).map_err(|e| e.to_string())?;
        }
    }
    Ok(format!("{} roles with (1,1) invariants; {markings} markings over 200 walks keep every instance", roles.len()))
}

fn small_alignment_fixtures() -> Vec<Fixture> {
    let tiny = (0..40).map(fixtures::tiny_fixture);
    let small = (0..80).map(fixtures::small_fixture);
    tiny.chain(small).filter(|f| f.log.len() <= 6 && f.net.transitions.len() <= 8).collect()
}

fn exact_optimality() -> Outcome {
    let costs = CostTable::default();
    let fx = small_alignment_fixtures();
    for f in &fx {
        let want = brute_force_cost(&f.net, &f.log, &costs);
        let got = align_log(&f.net, &f.log, &costs, &SearchOptions::default()).map(|r| r.cost).ok();
        ensure(got == want, || format!("{}: search {got:?}, oracle {want:?}", f.name))?;
    }
    Ok(format!("{} fixtures agree with exhaustive exploration", fx.len()))
}

fn no_violating_replay() -> Outcome {
    let mut violating = 0;
    let all = fixtures::composed_fixtures();
    for (f, c) in &all {
        if is_violating_by_enumeration(&f.net, &c.moves) {
            violating += 1;
            let n = replaying_linearizations(&f.net, &c.moves, &c.initial_marking(&f.net), &c.final_marking(&f.net));
            ensure(n == 0, || format!("{}: {n} linearizations replay", f.name))?;
        }
    }
    ensure(violating > 0, || "no violating composition among the fixtures".into())?;
    Ok(format!("{violating} of {} compositions violating, none replays", all.len()))
}

fn antichain_reachability() -> Outcome {
    let mut checked = 0;
    let all = fixtures::composed_fixtures();
    for (f, c) in &all {
        let m_i = c.initial_marking(&f.net);
        for g in c.moves.maximal_antichains().map_err(|e| e.to_string())? {
            let prefix = c.moves.prefix(&g, true).map_err(|e| e.to_string())?;
            let reach = replayable(&f.net, &c.moves, &prefix, &m_i);
            let ok = !is_violating_by_enumeration(&f.net, &c.moves.subposet(&prefix));
            ensure(reach == ok, || format!("{} antichain {g:?}: reachable {reach}, not violating {ok}", f.name))?;
            checked += 1;
        }
    }
    Ok(format!("{checked} antichains over {} compositions", all.len()))
}

fn cost_zero_equivalence() -> Outcome {
    let mut seen = [0; 2];
    for (f, c) in fixtures::composed_fixtures() {
        let ilp = is_violating(&f.net, &c, 1_000_000).map_err(|e| e.to_string())?;
        let brute = is_violating_by_enumeration(&f.net, &c.moves);
        ensure(ilp == brute, || format!("{}: program says {ilp}, enumeration {brute}", f.name))?;
        seen[brute as usize] += 1;
    }
    ensure(seen[0] > 0 && seen[1] > 0, || format!("one-sided sample {seen:?}"))?;
    Ok(format!("{} non-violating with optimum 0, {} violating with positive optimum", seen[0], seen[1]))
}

fn block_triangular_feasible() -> Outcome {
    let costs = CostTable::default();
    let mut vars = 0;
    for seed in 0..200 {
        let f = fixtures::generated(seed);
        let c = compose_cases(&f.net, &f.log, &costs, &SearchOptions::default()).map_err(|e| format!("{}: {e}", f.name))?;
        let inst = build_ilp(&f.net, &c);
        let x = inst.block_triangular();
        check_feasible(&inst.program, &x).map_err(|e| format!("{}: {e:?}", f.name))?;
        inst.check(&x).map_err(|e| format!("{}: {e:?}", f.name))?;
        vars += inst.program.n_vars;
    }
    Ok(format!("200 instances, {vars} variables in total"))
}

fn approximations(fx: &[Fixture]) -> Result<Vec<ApproxResult>, String> {
    fx.iter()
        .map(|f| approximate_alignment(&f.net, &f.log, &ApproxOptions::default()).map_err(|e| format!("{}: {e}", f.name)))
        .collect()
}

fn approximations_are_alignments(fx: &[Fixture], res: &[ApproxResult]) -> Outcome {
    let mut with_intervals = 0;
    for (f, r) in fx.iter().zip(res) {
        let cases = f.log.cases();
        let v = is_valid_alignment(&f.net, &f.net.initial_marking(&cases), &f.net.final_marking_for(&cases), &f.log, &r.alignment);
        ensure(v.is_valid(), || format!("{}: {v:?}", f.name))?;
        with_intervals += (!r.intervals.is_empty()) as usize;
    }
    ensure(with_intervals > 0, || "no fixture needed realignment".into())?;
    Ok(format!("{} approximations valid, {with_intervals} with realigned intervals", fx.len()))
}

fn dominance(fx: &[Fixture], res: &[ApproxResult]) -> Outcome {
    let opts = SearchOptions { node_budget: 500_000, ..Default::default() };
    let (mut compared, mut equal, mut skipped) = (0, 0, 0);
    for (f, r) in fx.iter().zip(res) {
        let exact = match align_log(&f.net, &f.log, &CostTable::default(), &opts) {
            Ok(e) => e,
            Err(AlignError::Exhausted(_)) => {
                skipped += 1;
                continue;
            }
            Err(e) => return Err(format!("{}: {e}", f.name)),
        };
        compared += 1;
        ensure(r.cost >= exact.cost, || format!("{}: approx {} < exact {}", f.name, r.cost, exact.cost))?;
        if !is_violating(&f.net, &r.composed, 1_000_000).map_err(|e| e.to_string())? {
            ensure(r.cost == exact.cost, || format!("{}: violation-free but approx {} != exact {}", f.name, r.cost, exact.cost))?;
            equal += 1;
        }
    }
    Ok(format!("{compared} compared ({equal} violation-free and equal), {skipped} beyond the exact budget"))
}

fn performance() -> Outcome {
    let f = fixtures::perf_fixture();
    let budget = 2_000_000;
    let search = SearchOptions { node_budget: budget, ..Default::default() };
    let opts = ApproxOptions { search: search.clone(), realign_nodes: budget, ..Default::default() };
    let t = Instant::now();
    let approx = approximate_alignment(&f.net, &f.log, &opts).map_err(|e| format!("approximation failed: {e}"))?;
    let t_approx = t.elapsed();
    let t = Instant::now();
    let exact = align_log(&f.net, &f.log, &CostTable::default(), &search);
    let t_exact = t.elapsed();
    let ratio = t_exact.as_secs_f64() / t_approx.as_secs_f64().max(1e-9);
    let summary = format!(
        "{} events; approx cost {} in {:.2} s; exact {} in {:.2} s (x{ratio:.1})",
        f.log.len(),
        approx.cost,
        t_approx.as_secs_f64(),
        match &exact {
            Ok(r) => format!("cost {}", r.cost),
            Err(AlignError::Exhausted(_)) => "exhausted the budget".into(),
            Err(e) => format!("failed ({e})"),
        },
        t_exact.as_secs_f64()
    );
    match exact {
        Err(AlignError::Exhausted(_)) => Ok(summary),
        _ if ratio >= 5.0 => Ok(summary),
        _ => Err(summary),
    }
}

fn coalign(args: &[&str]) -> Result<i32, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_coalign")).args(args).output().map_err(|e| e.to_string())?;
    Ok(out.status.code().unwrap_or(-1))
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let p = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    let put = |name: &str, text: &str| std::fs::write(dir.path().join(name), text).map(|_| p(name)).map_err(|e| e.to_string());
    let net = put("net.json", fixtures::HOSPITAL_JSON)?;
    let log = put("log.csv", fixtures::HOSPITAL_VIOLATIONS_CSV)?;
    let runs: Vec<(&str, Vec<String>, Vec<&str>)> = vec![
        ("validate", vec!["validate".into(), net.clone(), "--out".into()], vec!["v.json"]),
        ("align exact", vec!["align".into(), net.clone(), log.clone(), "--dot".into(), p("e.dot"), "--out".into()], vec!["e.json", "e.dot"]),
        (
            "align approx",
            vec!["align".into(), net.clone(), log.clone(), "--mode".into(), "approx".into(), "--dot".into(), p("a.dot"), "--out".into()],
            vec!["a.json", "a.dot"],
        ),
        ("simulate", vec!["simulate".into(), net.clone(), "--cases".into(), "3".into(), "--seed".into(), "42".into(), "--drop-events".into(), "1".into(), "--out".into()], vec!["s.csv"]),
        ("dot net", vec!["dot".into(), net.clone(), "--out".into()], vec!["n.dot"]),
        ("dot log", vec!["dot".into(), log.clone(), "--out".into()], vec!["l.dot"]),
        ("dot report", vec!["dot".into(), p("a.json"), "--out".into()], vec!["r.dot"]),
    ];
    let mut files = 0;
    for (name, args, outs) in &runs {
        let mut first: Vec<Vec<u8>> = Vec::new();
        for round in 0..2 {
            let mut argv = args.clone();
            argv.push(p(outs[0]));
            let argv: Vec<&str> = argv.iter().map(String::as_str).collect();
            let code = coalign(&argv)?;
            ensure(code == 0, || format!("{name} exited with {code}"))?;
            let bytes: Vec<Vec<u8>> =
                outs.iter().map(|o| std::fs::read(Path::new(&p(o)))).collect::<Result<_, _>>().map_err(|e| e.to_string())?;
            if round == 0 {
                first = bytes;
            } else {
                ensure(first == bytes, || format!("{name} output differs between runs"))?;
            }
        }
        files += outs.len();
    }
    Ok(format!("{} commands, {files} output files byte-identical across two runs", runs.len()))
}

#[test]
fn acceptance() {
    let s = Duration::from_secs;
    let mut ok = Vec::new();
    ok.push(criterion(1, "language facts", s(1), language_facts));
    ok.push(criterion(2, "resource durability", s(5), durability));
    ok.push(criterion(3, "exact aligner optimality", s(60), exact_optimality));
    ok.push(criterion(4, "violating compositions never replay", s(30), no_violating_replay));
    ok.push(criterion(5, "antichain reachability", s(60), antichain_reachability));
    ok.push(criterion(6, "cost-0 equivalence", s(60), cost_zero_equivalence));
    ok.push(criterion(7, "block triangular order feasible", s(10), block_triangular_feasible));
    let fx: Vec<Fixture> = (0..200).map(fixtures::generated).collect();
    let mut res: Option<Vec<ApproxResult>> = None;
    ok.push(criterion(8, "approximations are alignments", s(300), || {
        let r = approximations(&fx)?;
        let out = approximations_are_alignments(&fx, &r);
        res = Some(r);
        out
    }));
    ok.push(criterion(9, "approximation dominance", s(300), || dominance(&fx, res.as_deref().ok_or("no approximations")?)));
    ok.push(criterion(10, "approximation speed", s(600), performance));
    ok.push(criterion(11, "CLI determinism", s(120), determinism));
    let failed: Vec<usize> = ok.iter().enumerate().filter(|(_, &b)| !b).map(|(i, _)| i + 1).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
