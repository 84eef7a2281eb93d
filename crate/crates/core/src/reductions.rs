//! Finite reductions for the decidable groups, the view abstraction used
//! when nobody updates, and the dispatcher that picks between them.

use std::fmt;

use thiserror::Error;

use crate::arena::{
    explore, explore_configs, build_arena, Arena, ArenaError, Explore, GameSpec, Group,
    UpdatePolicy,
};
use crate::game::{
    extract_strategies, solve, GameError, NodeId, Player, PositionalStrategy, Regions,
    SafetyGame,
};
use crate::program::{Instruction, ProcId, Program, StateId, Value, VarId};
use crate::tso::{buffer_size, check_config, visible_value, Configuration};

/// What each process can observe: local states, the value each process
/// would read for each variable, and whether each process may fence.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct View {
    pub global: Vec<StateId>,
    /// Row-major: `values[proc * num_vars + var]`.
    pub values: Vec<Value>,
    pub fence_ok: Vec<bool>,
}

impl View {
    pub fn value(&self, p: &Program, i: ProcId, x: VarId) -> Value {
        self.values[i.index() * p.vars.len() + x.index()]
    }

    pub fn display<'a>(&'a self, p: &'a Program) -> ViewDisplay<'a> {
        ViewDisplay { prog: p, view: self }
    }
}

pub struct ViewDisplay<'a> {
    prog: &'a Program,
    view: &'a View,
}

impl fmt::Display for ViewDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = self.prog;
        let v = self.view;
        let states: Vec<&str> = v.global.iter().map(|s| p.state_name(*s)).collect();
        write!(f, "S=[{}] V=[", states.join(" "))?;
        for i in p.proc_ids() {
            if i.index() > 0 {
                write!(f, " | ")?;
            }
            let vals: Vec<String> = (0..p.vars.len())
                .map(|x| {
                    let x = VarId(x as u16);
                    format!("{}={}", p.var_name(x), p.value_name(v.value(p, i, x)))
                })
                .collect();
            write!(f, "{}", vals.join(" "))?;
        }
        let fences: Vec<&str> = v
            .fence_ok
            .iter()
            .map(|b| if *b { "1" } else { "0" })
            .collect();
        write!(f, "] F=[{}]", fences.join(" "))
    }
}

pub fn view_of(p: &Program, c: &Configuration) -> View {
    let mut values = Vec::with_capacity(p.num_processes() * p.vars.len());
    for i in p.proc_ids() {
        for x in 0..p.vars.len() {
            values.push(visible_value(c, i, VarId(x as u16)));
        }
    }
    View {
        global: c.global.clone(),
        values,
        fence_ok: c.buffers.iter().map(Vec::is_empty).collect(),
    }
}

/// Successor view after process `i` takes edge `edge`, if that edge leaves
/// its current state and is enabled on the view.
pub fn view_step(p: &Program, v: &View, i: ProcId, edge: usize) -> Option<View> {
    let t = p.process(i).transitions.get(edge)?;
    if t.from != v.global[i.index()] {
        return None;
    }
    let mut next = v.clone();
    match t.instr {
        Instruction::Read(x, val) => {
            if v.value(p, i, x) != val {
                return None;
            }
        }
        Instruction::Fence => {
            if !v.fence_ok[i.index()] {
                return None;
            }
        }
        Instruction::Write(x, val) => {
            next.values[i.index() * p.vars.len() + x.index()] = val;
            next.fence_ok[i.index()] = false;
        }
        Instruction::Skip => {}
    }
    next.global[i.index()] = t.to;
    Some(next)
}

fn view_successors(p: &Program, v: &View) -> Vec<View> {
    let mut out = Vec::new();
    for i in p.proc_ids() {
        for (e, _) in p.process(i).outgoing(v.global[i.index()]) {
            if let Some(w) = view_step(p, v, i, e) {
                out.push(w);
            }
        }
    }
    out.sort();
    out.dedup();
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ReductionError {
    #[error("policies ({a}, {b}) fall in group {found}, this reduction needs group {expected}")]
    WrongGroup {
        expected: Group,
        found: Group,
        a: UpdatePolicy,
        b: UpdatePolicy,
    },
    #[error("policies ({a}, {b}) form an undecidable group III variant; pass a buffer bound for bounded exploration")]
    UndecidableVariant { a: UpdatePolicy, b: UpdatePolicy },
    #[error(transparent)]
    Arena(#[from] ArenaError),
    #[error(transparent)]
    Game(#[from] GameError),
}

fn require(spec: &GameSpec, expected: Group) -> Result<(), ReductionError> {
    let found = spec.group();
    if found == expected {
        Ok(())
    } else {
        Err(ReductionError::WrongGroup {
            expected,
            found,
            a: spec.policy_a,
            b: spec.policy_b,
        })
    }
}

/// The game played on views when neither player updates.
pub fn build_view_game(spec: &GameSpec) -> Result<Arena<View>, ReductionError> {
    require(spec, Group::IV)?;
    let p = &spec.program;
    check_config(p, &spec.initial).map_err(ArenaError::from)?;
    let successors = |v: &View, _: Player| view_successors(p, v);
    let is_final = |v: &View| v.global.iter().any(|s| p.is_final_state(*s));
    Ok(explore(Explore {
        initial: view_of(p, &spec.initial),
        first: spec.first_mover,
        successors: &successors,
        keep: &|_, _| true,
        is_final: &is_final,
        deadlock: spec.deadlock,
        node_limit: spec.node_limit,
        parallel: spec.parallel,
    })?)
}

/// The player who updates after her moves in a group I game, and the other
/// one. A takes the first role when both fit.
pub fn group1_roles(a: UpdatePolicy, b: UpdatePolicy) -> (Player, Player) {
    if a.can_after() && b.can_before() {
        (Player::A, Player::B)
    } else {
        (Player::B, Player::A)
    }
}

/// Group I arena: nodes of the second player carry at most one message
/// (the initial node excepted); nodes of the first player are whatever the
/// second player's moves reach.
pub fn reduce_group1(spec: &GameSpec) -> Result<Arena<Configuration>, ReductionError> {
    require(spec, Group::I)?;
    let (x, _) = group1_roles(spec.policy_a, spec.policy_b);
    let keep = move |c: &Configuration, owner: Player| owner == x || buffer_size(c) <= 1;
    Ok(explore_configs(spec, None, &keep)?)
}

pub fn group2_bound(spec: &GameSpec) -> usize {
    buffer_size(&spec.initial).max(1)
}

/// Group II arena: every node holds at most max(1, |initial buffers|) messages.
pub fn reduce_group2(spec: &GameSpec) -> Result<Arena<Configuration>, ReductionError> {
    require(spec, Group::II)?;
    let k = group2_bound(spec);
    Ok(explore_configs(spec, Some(k), &|_, _| true)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    GroupI,
    GroupII { bound: usize },
    GroupIV,
    /// Bounded exploration of a group III game. Carries no soundness claim
    /// in either direction.
    BoundedApprox { bound: usize },
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::GroupI => write!(f, "GroupI"),
            Method::GroupII { .. } => write!(f, "GroupII"),
            Method::GroupIV => write!(f, "GroupIV"),
            Method::BoundedApprox { .. } => write!(f, "BoundedApprox"),
        }
    }
}

#[derive(Clone, Debug)]
pub enum SolvedArena {
    Configurations(Arena<Configuration>),
    Views(Arena<View>),
}

impl SolvedArena {
    pub fn game(&self) -> &SafetyGame {
        match self {
            SolvedArena::Configurations(a) => &a.game,
            SolvedArena::Views(a) => &a.game,
        }
    }

    pub fn initial(&self) -> NodeId {
        match self {
            SolvedArena::Configurations(a) => a.initial,
            SolvedArena::Views(a) => a.initial,
        }
    }

    pub fn index_text(&self, p: &Program) -> String {
        match self {
            SolvedArena::Configurations(a) => a.config_index(p),
            SolvedArena::Views(a) => a.index_text(|v| v.display(p).to_string()),
        }
    }
}

#[derive(Clone, Debug)]
pub struct TsoSolution {
    pub winner: Player,
    pub method: Method,
    pub arena: SolvedArena,
    pub regions: Regions,
    pub strategy_a: PositionalStrategy,
    pub strategy_b: PositionalStrategy,
}

fn finish(method: Method, arena: SolvedArena) -> Result<TsoSolution, ReductionError> {
    let regions = solve(arena.game());
    let (strategy_a, strategy_b) = extract_strategies(arena.game(), &regions)?;
    Ok(TsoSolution {
        winner: regions.winner_at(arena.initial()),
        method,
        arena,
        regions,
        strategy_a,
        strategy_b,
    })
}

/// Decides the game of `spec` by the reduction matching its group. Group III
/// is refused unless a buffer bound is given.
pub fn solve_tso(spec: &GameSpec) -> Result<TsoSolution, ReductionError> {
    match spec.group() {
        Group::I => finish(Method::GroupI, SolvedArena::Configurations(reduce_group1(spec)?)),
        Group::II => finish(
            Method::GroupII {
                bound: group2_bound(spec),
            },
            SolvedArena::Configurations(reduce_group2(spec)?),
        ),
        Group::IV => finish(Method::GroupIV, SolvedArena::Views(build_view_game(spec)?)),
        Group::III => match spec.buffer_bound {
            None => Err(ReductionError::UndecidableVariant {
                a: spec.policy_a,
                b: spec.policy_b,
            }),
            Some(bound) => finish(
                Method::BoundedApprox { bound },
                SolvedArena::Configurations(build_arena(spec)?),
            ),
        },
    }
}

/// Winner of the full arena restricted to `k` buffered messages.
pub fn bounded_winner(spec: &GameSpec, k: usize) -> Result<Player, ReductionError> {
    let mut s = spec.clone();
    s.buffer_bound = Some(k);
    let a = build_arena(&s)?;
    Ok(solve(&a.game).winner_at(a.initial))
}

/// Bound under which a write-acyclic program's full arena is exact.
pub fn exact_bound(spec: &GameSpec) -> Option<usize> {
    spec.program
        .write_path_bound()
        .map(|w| w + buffer_size(&spec.initial))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Comparison {
    pub method: Method,
    pub reduced: Player,
    pub bounded: Vec<(usize, Player)>,
}

impl Comparison {
    pub fn agrees(&self) -> bool {
        self.bounded.iter().all(|(_, w)| *w == self.reduced)
    }
}

/// Solves `spec` through its reduction and through bounded full arenas for
/// each `k`.
pub fn compare_with_bounded(spec: &GameSpec, ks: &[usize]) -> Result<Comparison, ReductionError> {
    let mut s = spec.clone();
    if s.group() == Group::III {
        return Err(ReductionError::UndecidableVariant {
            a: s.policy_a,
            b: s.policy_b,
        });
    }
    s.buffer_bound = None;
    let sol = solve_tso(&s)?;
    let bounded = ks
        .iter()
        .map(|&k| bounded_winner(spec, k).map(|w| (k, w)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Comparison {
        method: sol.method,
        reduced: sol.winner,
        bounded,
    })
}
