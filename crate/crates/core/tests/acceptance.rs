//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails. Criterion 8 (EXPTIME-hardness) is not
//! reproduced and is reported as such.

mod common;

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::Rng;

use common::*;
use tsogame::arena::{build_arena, classify, GameSpec, Group, UpdatePolicy};
use tsogame::compiler::{canonical_play, compile, probe_gadgets, P1};
use tsogame::game::{extract_strategies, play, solve, NodeId, Player, PositionalStrategy, SafetyGame, Verdict};
use tsogame::pcs::{pcs_replay, ChanOp, PcsConfig};
use tsogame::program::Program;
use tsogame::reductions::{
    bounded_winner, build_view_game, exact_bound, group2_bound, solve_tso, view_of, view_step, Method,
};
use tsogame::tso::{check_config, enabled, step, Configuration, Label, Message};

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(id: &str, limit: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let t = Instant::now();
    let o = f();
    let took = t.elapsed();
    let in_time = took <= limit;
    let pass = o.pass && in_time;
    println!(
        "{} criterion {id}: {} [{:.1}s, limit {}s]",
        if pass { "PASS" } else { "FAIL" },
        o.detail,
        took.as_secs_f64(),
        limit.as_secs()
    );
    pass
}

fn secs(s: u64) -> Duration {
    Duration::from_secs(s)
}

const POLICIES: [UpdatePolicy; 4] = UpdatePolicy::ALL;

fn solver_correctness() -> Outcome {
    let mut r = rng(1);
    let mut mismatches = 0;
    let mut overlap = 0;
    let mut max_nodes = 0;
    for _ in 0..1000 {
        let n = r.gen_range(2..=2000);
        let extra = r.gen_range(0..=(8000 - n).min(3 * n));
        let fp = r.gen_range(0.0..0.2);
        let g = random_arena(&mut r, n, extra, fp);
        max_nodes = max_nodes.max(g.num_nodes());
        assert!(g.num_edges() <= 8000);
        let regions = solve(&g);
        let oracle = naive_winners(&g);
        if g.nodes().any(|v| regions.winner_at(v) != oracle[v.index()]) {
            mismatches += 1;
        }
        let a: BTreeSet<NodeId> = regions.win_a().into_iter().collect();
        let b: BTreeSet<NodeId> = regions.win_b().into_iter().collect();
        if !a.is_disjoint(&b) || a.len() + b.len() != g.num_nodes() {
            overlap += 1;
        }
    }
    Outcome {
        pass: mismatches == 0 && overlap == 0,
        detail: format!(
            "solver vs fixpoint oracle on 1000 arenas (up to {max_nodes} nodes): {mismatches} mismatching, {overlap} non-partitioning"
        ),
    }
}

/// Arena with at most 12 A-nodes of out-degree at most 2.
fn small_arena(r: &mut rand_chacha::ChaCha8Rng) -> SafetyGame {
    let na = r.gen_range(1..=12);
    let nb = r.gen_range(1..=12);
    let n = na + nb;
    let owner: Vec<Player> = (0..n).map(|i| if i < na { Player::A } else { Player::B }).collect();
    let mut edges = BTreeSet::new();
    for a in 0..na {
        for _ in 0..r.gen_range(1..=2) {
            edges.insert((a as u32, r.gen_range(na..n) as u32));
        }
    }
    for b in na..n {
        for _ in 0..r.gen_range(1..=3) {
            edges.insert((b as u32, r.gen_range(0..na) as u32));
        }
    }
    let is_final = (0..n).map(|i| i < na && r.gen_bool(0.2)).collect();
    SafetyGame::new(owner, is_final, edges.into_iter().collect()).unwrap()
}

fn all_a_strategies(g: &SafetyGame) -> Vec<PositionalStrategy> {
    let a_nodes: Vec<NodeId> = g.nodes().filter(|v| g.owner(*v) == Player::A).collect();
    let mut out = vec![PositionalStrategy {
        player: Player::A,
        choice: vec![None; g.num_nodes()],
    }];
    for v in a_nodes {
        out = out
            .into_iter()
            .flat_map(|s| {
                g.successors(v).iter().map(move |t| {
                    let mut s = s.clone();
                    s.choice[v.index()] = Some(*t);
                    s
                })
            })
            .collect();
    }
    out
}

/// Whether some play consistent with `sa` hits a final node within `steps`
/// moves from `v`, with B free to move anywhere.
fn b_can_reach_final(g: &SafetyGame, sa: &PositionalStrategy, v: NodeId, steps: usize) -> bool {
    let mut frontier = BTreeSet::from([v]);
    for _ in 0..=steps {
        if frontier.iter().any(|u| g.is_final(*u)) {
            return true;
        }
        frontier = frontier
            .iter()
            .flat_map(|u| match g.owner(*u) {
                Player::A => vec![sa.choose(*u).unwrap()],
                Player::B => g.successors(*u).to_vec(),
            })
            .collect();
    }
    false
}

fn strategy_soundness() -> Outcome {
    let mut r = rng(2);
    let mut bad_b = 0;
    let mut bad_a = 0;
    let mut plays = 0usize;
    for _ in 0..300 {
        let g = small_arena(&mut r);
        let regions = solve(&g);
        let (sa, sb) = extract_strategies(&g, &regions).unwrap();
        let n = g.num_nodes();
        let a_strats = all_a_strategies(&g);
        for v in g.nodes() {
            match regions.winner_at(v) {
                Player::B => {
                    for s in &a_strats {
                        plays += 1;
                        let p = play(&g, s, &sb, v, n).unwrap();
                        if !matches!(p.verdict, Verdict::BReachedFinal(_)) {
                            bad_b += 1;
                        }
                    }
                }
                Player::A => {
                    if b_can_reach_final(&g, &sa, v, 10 * n) {
                        bad_a += 1;
                    }
                }
            }
        }
    }
    Outcome {
        pass: bad_b == 0 && bad_a == 0,
        detail: format!(
            "300 arenas, {plays} B-strategy plays against every A-strategy: {bad_b} B failures, {bad_a} A failures"
        ),
    }
}

const GROUP_I: [(UpdatePolicy, UpdatePolicy); 7] = {
    use UpdatePolicy::*;
    [
        (Always, Always),
        (Always, Before),
        (Always, After),
        (Before, Always),
        (Before, After),
        (After, Always),
        (After, Before),
    ]
};

fn group1_theorem() -> Outcome {
    let mut r = rng(3);
    let mut disagree = 0;
    let mut unstable = 0;
    let mut oracle_disagree = 0;
    let mut checked = 0;
    for _ in 0..200 {
        let vars = r.gen_range(1..=2);
        let p = random_program(&mut r, 2, 3, vars, 2);
        for (a, b) in GROUP_I {
            let spec = GameSpec::new(p.clone(), a, b);
            let sol = solve_tso(&spec).unwrap();
            assert_eq!(sol.method, Method::GroupI);
            let ws: Vec<Player> = [2, 3, 4].iter().map(|k| bounded_winner(&spec, *k).unwrap()).collect();
            if ws.iter().any(|w| *w != ws[0]) {
                unstable += 1;
            }
            if ws.iter().any(|w| *w != sol.winner) {
                disagree += 1;
            }
            if naive_bounded_winner(&spec, 2) != ws[0] {
                oracle_disagree += 1;
            }
            checked += 1;
        }
    }
    Outcome {
        pass: disagree == 0 && unstable == 0 && oracle_disagree == 0,
        detail: format!(
            "{checked} group I games, k = 2,3,4: {disagree} reduction mismatches, {unstable} unstable across k, {oracle_disagree} arena/oracle mismatches at k = 2"
        ),
    }
}

fn random_buffers(r: &mut rand_chacha::ChaCha8Rng, p: &Program, size: usize) -> Configuration {
    let mut c = Configuration::initial(p);
    for _ in 0..size {
        let i = r.gen_range(0..p.num_processes());
        let var = tsogame::program::VarId(r.gen_range(0..p.vars.len()) as u16);
        let value = tsogame::program::Value(r.gen_range(0..p.domain.len()) as u16);
        c.buffers[i].push(Message { var, value });
    }
    c
}

fn group2_theorem() -> Outcome {
    let mut r = rng(4);
    let mut disagree = 0;
    let mut checked = 0;
    for _ in 0..200 {
        let vars = r.gen_range(1..=2);
        let p = random_program(&mut r, 2, 3, vars, 2);
        for size in 0..=2 {
            let mut spec = GameSpec::new(p.clone(), UpdatePolicy::Before, UpdatePolicy::Before);
            spec.initial = random_buffers(&mut r, &p, size);
            let sol = solve_tso(&spec).unwrap();
            let k = group2_bound(&spec);
            for kk in [k + 1, k + 2] {
                if bounded_winner(&spec, kk).unwrap() != sol.winner {
                    disagree += 1;
                }
            }
            checked += 1;
        }
    }
    Outcome {
        pass: disagree == 0,
        detail: format!("{checked} (before, before) games with initial buffers 0/1/2: {disagree} mismatches at k = bound+1, bound+2"),
    }
}

fn random_config(r: &mut rand_chacha::ChaCha8Rng, p: &Program) -> Configuration {
    let size = r.gen_range(0..=4);
    let mut c = random_buffers(r, p, size);
    for (i, proc_) in p.processes.iter().enumerate() {
        c.global[i] = proc_.states[r.gen_range(0..proc_.states.len())];
    }
    for m in c.memory.iter_mut() {
        *m = tsogame::program::Value(r.gen_range(0..p.domain.len()) as u16);
    }
    c
}

fn view_lemma() -> Outcome {
    let mut r = rng(5);
    let mut samples = 0;
    let mut commute_bad = 0;
    let mut enabled_bad = 0;
    while samples < 10_000 {
        let (procs, vars, dom) = (r.gen_range(1..=3), r.gen_range(1..=2), r.gen_range(1..=3));
        let p = random_program(&mut r, procs, 3, vars, dom);
        for _ in 0..20 {
            let c = random_config(&mut r, &p);
            check_config(&p, &c).unwrap();
            let en = enabled(&p, &c).unwrap();
            let v = view_of(&p, &c);
            for i in p.proc_ids() {
                for (edge, _) in p.process(i).outgoing(c.state(i)) {
                    samples += 1;
                    let label = Label::Instr { process: i, edge };
                    let vs = view_step(&p, &v, i, edge);
                    if en.contains(&label) != vs.is_some() {
                        enabled_bad += 1;
                    } else if let Some(vs) = vs {
                        if view_of(&p, &step(&p, &c, label).unwrap()) != vs {
                            commute_bad += 1;
                        }
                    }
                }
            }
        }
    }
    let mut r = rng(6);
    let mut game_bad = 0;
    let mut games = 0;
    let mut max_bound = 0;
    for _ in 0..150 {
        let vars = r.gen_range(1..=2);
        let p = random_write_acyclic(&mut r, 2, 3, vars, 2);
        let spec = GameSpec::new(p, UpdatePolicy::Never, UpdatePolicy::Never);
        let vg = build_view_game(&spec).unwrap();
        let vw = solve(&vg.game).winner_at(vg.initial);
        let k = exact_bound(&spec).unwrap();
        max_bound = max_bound.max(k);
        let exact = spec.clone().with_bound(k);
        let a = build_arena(&exact).unwrap();
        let aw = solve(&a.game).winner_at(a.initial);
        if vw != aw || naive_bounded_winner(&spec, k) != aw {
            game_bad += 1;
        }
        games += 1;
    }
    Outcome {
        pass: commute_bad == 0 && enabled_bad == 0 && game_bad == 0,
        detail: format!(
            "{samples} samples: {commute_bad} non-commuting, {enabled_bad} enabledness mismatches; {games} write-acyclic view games (exact bound up to {max_bound}): {game_bad} mismatches"
        ),
    }
}

fn classification() -> Outcome {
    use Group::*;
    // rows: A = always, before, after, never; columns: B likewise
    let table = [
        [I, I, I, III],
        [I, II, I, III],
        [I, I, III, III],
        [III, III, III, IV],
    ];
    let mut wrong = 0;
    let mut sizes = [0usize; 4];
    for (ai, a) in POLICIES.iter().enumerate() {
        for (bi, b) in POLICIES.iter().enumerate() {
            let g = classify(*a, *b);
            sizes[g as usize] += 1;
            let want = table[row(*a)][row(*b)];
            if g != want {
                wrong += 1;
            }
            let _ = (ai, bi);
        }
    }
    Outcome {
        pass: wrong == 0 && sizes == [7, 1, 7, 1],
        detail: format!(
            "16 policy pairs, {wrong} off the table, group sizes {}/{}/{}/{}",
            sizes[0], sizes[1], sizes[2], sizes[3]
        ),
    }
}

fn row(p: UpdatePolicy) -> usize {
    match p {
        UpdatePolicy::Always => 0,
        UpdatePolicy::Before => 1,
        UpdatePolicy::After => 2,
        UpdatePolicy::Never => 3,
    }
}

fn construction_fidelity() -> Outcome {
    let mut r = rng(7);
    let mut problems: Vec<String> = Vec::new();
    let mut total_moves = 0;
    let mut receives = 0;
    for inst in 0..20 {
        let (l, t, run) = random_pcs(&mut r, 6, if inst < 15 { 1 + inst % 2 } else { 0 });
        let cg = compile(&l, t);
        let cp = match canonical_play(&cg, &run) {
            Ok(cp) => cp,
            Err(e) => {
                problems.push(format!("instance {inst}: {e}"));
                continue;
            }
        };
        total_moves += cp.play.prefix.len();
        if !matches!(cp.play.verdict, Verdict::BReachedFinal(_)) {
            problems.push(format!("instance {inst}: no final node"));
        }
        if cp.segment_lengths().iter().any(|n| n % 2 != 0) {
            problems.push(format!("instance {inst}: odd segment {:?}", cp.segment_lengths()));
        }
        for (_, end) in &cp.segments {
            if let Some((_, who)) = cp.play.prefix.get(*end) {
                if *who != Player::B {
                    problems.push(format!("instance {inst}: segment ends at an A node"));
                }
            }
        }
        let received: Vec<_> = run
            .iter()
            .filter_map(|ti| match l.transitions[*ti].op {
                ChanOp::Recv(m) => Some(m),
                _ => None,
            })
            .collect();
        receives += received.len();
        if cp.x_r_trace != received {
            problems.push(format!("instance {inst}: x_r trace {:?} vs receives {:?}", cp.x_r_trace, received));
        }
        let ends = pcs_replay(&l, &PcsConfig::initial(&l), &run).unwrap();
        let last = cp.play.prefix.last().unwrap();
        if last.0.state(P1) != cg.roles.p1_state[ends.last().unwrap().state.0 as usize] {
            problems.push(format!("instance {inst}: P1 does not end in the target"));
        }
        let report = probe_gadgets(&cg);
        if !report.all_pass() {
            problems.push(format!("instance {inst}: probes\n{report}"));
        }
    }
    Outcome {
        pass: problems.is_empty(),
        detail: if problems.is_empty() {
            format!("20 compiled channel systems, {total_moves} canonical moves covering {receives} receives, all segments even, traces exact, all probes pass")
        } else {
            problems.join("; ")
        },
    }
}

const SCALE: &str = include_str!("../../../samples/scale.tso");

fn scale() -> Outcome {
    let p = tsogame::program::parse_program(SCALE).unwrap();
    assert!(p.num_processes() == 2 && p.processes.iter().all(|q| q.states.len() == 4));
    let mut rows = Vec::new();
    let mut largest = 0;
    for a in POLICIES {
        for b in POLICIES {
            let spec = GameSpec::new(p.clone(), a, b).with_bound(3);
            let arena = build_arena(&spec).unwrap();
            let w = solve(&arena.game).winner_at(arena.initial);
            largest = largest.max(arena.game.num_nodes());
            if (a, b) == (UpdatePolicy::Always, UpdatePolicy::Always) {
                rows.push(format!(
                    "(always, always) {} nodes {} edges winner {w}",
                    arena.game.num_nodes(),
                    arena.game.num_edges()
                ));
            }
        }
    }
    Outcome {
        pass: true,
        detail: format!("16 policy pairs at bound 3, largest arena {largest} nodes; {}", rows.join(", ")),
    }
}

fn main() -> ExitCode {
    let results = [
        check("1 (solver vs oracle)", secs(60), solver_correctness),
        check("2 (strategy soundness)", secs(120), strategy_soundness),
        check("3 (group I reduction)", secs(600), group1_theorem),
        check("4 (group II reduction)", secs(300), group2_theorem),
        check("5 (views)", secs(120), view_lemma),
        check("6 (classification)", secs(1), classification),
        check("7 (channel-system compilation)", secs(300), construction_fidelity),
        check("9 (scale)", secs(60), scale),
    ];
    println!("SKIP criterion 8 (EXPTIME-hardness): not reproduced, the alternating Turing machine reduction is out of scope");
    if results.iter().all(|x| *x) {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
