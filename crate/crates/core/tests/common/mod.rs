//! Reference oracles and random corpora shared by the integration tests.
//! The oracles deliberately avoid the library's solver and move generator.

#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tsogame::arena::{DeadlockConvention, GameSpec, UpdatePolicy};
use tsogame::game::{NodeId, Player, SafetyGame};
use tsogame::pcs::{pcs_reach, ChanOp, ChanStateId, ChanTransition, MsgId, Pcs, PcsConfig};
use tsogame::program::{Instruction, Program, ProgramBuilder};
use tsogame::tso::{buffer_size, enabled, step, Configuration, Label};

pub fn rng(stream: u64) -> ChaCha8Rng {
    let seed = std::env::var("TSOGAME_SEED")
        .ok()
        .and_then(|s| s.parse::<u64>().ok())
        .unwrap_or(0x5eed);
    ChaCha8Rng::seed_from_u64(seed ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

/// Winner of every node by plain iteration: B's set grows until no B-node
/// has a successor in it and no A-node has all successors in it.
pub fn naive_winners(g: &SafetyGame) -> Vec<Player> {
    let mut win_b: Vec<bool> = g.nodes().map(|v| g.is_final(v)).collect();
    loop {
        let mut changed = false;
        for v in g.nodes() {
            if win_b[v.index()] {
                continue;
            }
            let succ = g.successors(v);
            let hit = match g.owner(v) {
                Player::B => succ.iter().any(|s| win_b[s.index()]),
                Player::A => succ.iter().all(|s| win_b[s.index()]),
            };
            if hit {
                win_b[v.index()] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    win_b
        .into_iter()
        .map(|b| if b { Player::B } else { Player::A })
        .collect()
}

/// Random bipartite deadlock-free arena with final nodes only among A's.
pub fn random_arena(r: &mut ChaCha8Rng, n: usize, extra_edges: usize, final_p: f64) -> SafetyGame {
    assert!(n >= 2);
    let mut owner: Vec<Player> = (0..n)
        .map(|_| if r.gen_bool(0.5) { Player::A } else { Player::B })
        .collect();
    owner[0] = Player::A;
    owner[1] = Player::B;
    let a_nodes: Vec<u32> = (0..n as u32).filter(|i| owner[*i as usize] == Player::A).collect();
    let b_nodes: Vec<u32> = (0..n as u32).filter(|i| owner[*i as usize] == Player::B).collect();
    let other = |v: usize| if owner[v] == Player::A { &b_nodes } else { &a_nodes };
    let mut edges = BTreeSet::new();
    for v in 0..n {
        edges.insert((v as u32, *other(v).choose(r).unwrap()));
    }
    for _ in 0..extra_edges {
        let v = r.gen_range(0..n);
        edges.insert((v as u32, *other(v).choose(r).unwrap()));
    }
    let is_final = (0..n)
        .map(|v| owner[v] == Player::A && r.gen_bool(final_p))
        .collect();
    SafetyGame::new(owner, is_final, edges.into_iter().collect()).expect("well-formed arena")
}

/// Random program: `procs` processes of at most `states` states, writes and
/// reads over `vars` variables and a domain of `dom` values.
pub fn random_program(r: &mut ChaCha8Rng, procs: usize, states: usize, vars: usize, dom: usize) -> Program {
    let domain: Vec<String> = (0..dom).map(|v| v.to_string()).collect();
    let var_names: Vec<String> = (0..vars).map(|x| format!("x{x}")).collect();
    let mut b = ProgramBuilder::new(domain, var_names.iter().map(String::as_str));
    let vals: Vec<_> = (0..dom).map(|v| b.value(&v.to_string())).collect();
    let xs: Vec<_> = var_names.iter().map(|x| b.var(x)).collect();
    for pi in 0..procs {
        let p = b.process(&format!("P{pi}"), "s0");
        let n = r.gen_range(1..=states);
        let names: Vec<String> = (0..n).map(|s| format!("s{s}")).collect();
        for name in &names {
            b.state(p, name);
        }
        let n_edges = r.gen_range(1..=n + 2);
        for _ in 0..n_edges {
            let from = names.choose(r).unwrap();
            let to = names.choose(r).unwrap();
            let x = *xs.choose(r).unwrap();
            let v = *vals.choose(r).unwrap();
            let instr = match r.gen_range(0..10) {
                0..=2 => Instruction::Write(x, v),
                3..=5 => Instruction::Read(x, v),
                6..=7 => Instruction::Skip,
                _ => Instruction::Fence,
            };
            b.edge(p, from, instr, to);
        }
        if r.gen_bool(0.6) {
            let f = names.choose(r).unwrap().clone();
            b.mark_final(p, &f);
        }
    }
    b.build().expect("random program is valid")
}

/// Random program in which no process cycle contains a write.
pub fn random_write_acyclic(r: &mut ChaCha8Rng, procs: usize, states: usize, vars: usize, dom: usize) -> Program {
    loop {
        let p = random_program(r, procs, states, vars, dom);
        if p.is_write_acyclic() {
            return p;
        }
    }
}

/// Every configuration reachable from `c` by committing buffered messages,
/// enumerated by trying each process at each step.
pub fn brute_updates(p: &Program, c: &Configuration) -> BTreeSet<Configuration> {
    let mut seen = BTreeSet::new();
    let mut stack = vec![c.clone()];
    while let Some(d) = stack.pop() {
        if !seen.insert(d.clone()) {
            continue;
        }
        for l in enabled(p, &d).expect("valid configuration") {
            if let Label::Update(_) = l {
                stack.push(step(p, &d, l).unwrap());
            }
        }
    }
    seen
}

/// One move built only from single steps of the semantics.
pub fn naive_moves(p: &Program, c: &Configuration, pol: UpdatePolicy, bound: usize) -> BTreeSet<Configuration> {
    let before = matches!(pol, UpdatePolicy::Before | UpdatePolicy::Always);
    let after = matches!(pol, UpdatePolicy::After | UpdatePolicy::Always);
    let pre = if before { brute_updates(p, c) } else { BTreeSet::from([c.clone()]) };
    let mut out = BTreeSet::new();
    for d in &pre {
        for l in enabled(p, d).unwrap() {
            if let Label::Instr { .. } = l {
                let e = step(p, d, l).unwrap();
                let post = if after { brute_updates(p, &e) } else { BTreeSet::from([e]) };
                out.extend(post.into_iter().filter(|f| buffer_size(f) <= bound));
            }
        }
    }
    out
}

/// Winner of the `bound`-restricted game of `spec` from its initial
/// configuration, by explicit enumeration and least fixpoint.
pub fn naive_bounded_winner(spec: &GameSpec, bound: usize) -> Player {
    let p = &spec.program;
    let mut index: HashMap<(Configuration, Player), usize> = HashMap::new();
    let mut nodes: Vec<(Configuration, Player)> = Vec::new();
    let mut succ: Vec<Vec<usize>> = Vec::new();
    let start = (spec.initial.clone(), spec.first_mover);
    index.insert(start.clone(), 0);
    nodes.push(start);
    let mut i = 0;
    while i < nodes.len() {
        let (c, who) = nodes[i].clone();
        let mut out = Vec::new();
        for d in naive_moves(p, &c, spec.policy(who), bound) {
            let key = (d, who.opponent());
            let id = *index.entry(key.clone()).or_insert_with(|| {
                nodes.push(key);
                nodes.len() - 1
            });
            out.push(id);
        }
        succ.push(out);
        i += 1;
    }
    let is_final = |k: usize| {
        let (c, who) = &nodes[k];
        *who == Player::A && c.global.iter().any(|s| p.is_final_state(*s))
    };
    let mut win_b: Vec<bool> = (0..nodes.len()).map(is_final).collect();
    loop {
        let mut changed = false;
        for v in 0..nodes.len() {
            if win_b[v] {
                continue;
            }
            let hit = match (nodes[v].1, succ[v].is_empty()) {
                (Player::B, true) => false,
                (Player::A, true) => spec.deadlock == DeadlockConvention::Loses,
                (Player::B, false) => succ[v].iter().any(|s| win_b[*s]),
                (Player::A, false) => succ[v].iter().all(|s| win_b[*s]),
            };
            if hit {
                win_b[v] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    if win_b[0] {
        Player::B
    } else {
        Player::A
    }
}

/// Random PCS with a target reachable within `depth` steps, plus a shortest
/// witness run containing at least `min_recv` receives. The target differs
/// from the initial state.
pub fn random_pcs(r: &mut ChaCha8Rng, depth: usize, min_recv: usize) -> (Pcs, ChanStateId, Vec<usize>) {
    loop {
        let n_states = r.gen_range(2..=4);
        let n_msgs = r.gen_range(1..=2);
        let n_trans = r.gen_range(2..=6);
        let transitions = (0..n_trans)
            .map(|_| {
                let m = MsgId(r.gen_range(0..n_msgs) as u16);
                ChanTransition {
                    from: ChanStateId(r.gen_range(0..n_states) as u32),
                    op: match r.gen_range(0..5) {
                        0..=1 => ChanOp::Send(m),
                        2..=3 => ChanOp::Recv(m),
                        _ => ChanOp::Nop,
                    },
                    to: ChanStateId(r.gen_range(0..n_states) as u32),
                }
            })
            .collect();
        let l = Pcs {
            states: (0..n_states).map(|q| format!("q{q}")).collect(),
            messages: ["a", "b"][..n_msgs].iter().map(|s| s.to_string()).collect(),
            transitions,
            initial: ChanStateId(0),
            target: None,
        };
        let t = ChanStateId(r.gen_range(1..n_states) as u32);
        let run = pcs_reach(&l, &PcsConfig::initial(&l), t, depth);
        let recvs = |run: &Vec<usize>| {
            run.iter()
                .filter(|ti| matches!(l.transitions[**ti].op, ChanOp::Recv(_)))
                .count()
        };
        if let Some(run) = run.filter(|run| recvs(run) >= min_recv) {
            let mut l = l;
            l.target = Some(t);
            return (l, t, run);
        }
    }
}

pub fn node(i: usize) -> NodeId {
    NodeId(i as u32)
}
