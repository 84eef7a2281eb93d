//! Explicit safety-game arenas induced by a program under TSO, for each of
//! the sixteen update-policy pairs.

use std::collections::HashMap;
use std::fmt;
use std::hash::Hash;
use std::str::FromStr;

use thiserror::Error;

use crate::game::{GameError, NodeId, Player, SafetyGame};
use crate::par;
use crate::program::Program;
use crate::tso::{
    apply_instr, buffer_size, check_config, enabled_instrs, update_closure, Configuration, TsoError,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum UpdatePolicy {
    Never,
    Before,
    After,
    Always,
}

impl UpdatePolicy {
    pub const ALL: [UpdatePolicy; 4] = [
        UpdatePolicy::Never,
        UpdatePolicy::Before,
        UpdatePolicy::After,
        UpdatePolicy::Always,
    ];

    pub fn can_before(self) -> bool {
        matches!(self, UpdatePolicy::Before | UpdatePolicy::Always)
    }

    pub fn can_after(self) -> bool {
        matches!(self, UpdatePolicy::After | UpdatePolicy::Always)
    }
}

impl fmt::Display for UpdatePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            UpdatePolicy::Never => "never",
            UpdatePolicy::Before => "before",
            UpdatePolicy::After => "after",
            UpdatePolicy::Always => "always",
        })
    }
}

impl FromStr for UpdatePolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "never" => Ok(UpdatePolicy::Never),
            "before" => Ok(UpdatePolicy::Before),
            "after" => Ok(UpdatePolicy::After),
            "always" => Ok(UpdatePolicy::Always),
            _ => Err(format!("unknown update policy `{s}` (never|before|after|always)")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Group {
    I,
    II,
    III,
    IV,
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Group::I => "I",
            Group::II => "II",
            Group::III => "III",
            Group::IV => "IV",
        })
    }
}

pub fn classify(a: UpdatePolicy, b: UpdatePolicy) -> Group {
    use UpdatePolicy::*;
    if (a.can_after() && b.can_before()) || (a.can_before() && b.can_after()) {
        Group::I
    } else if a == Before && b == Before {
        Group::II
    } else if a == Never && b == Never {
        Group::IV
    } else {
        Group::III
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum DeadlockConvention {
    /// A player without a move loses.
    #[default]
    Loses,
    /// A player without a move is parked in a non-final cycle.
    Safe,
}

impl FromStr for DeadlockConvention {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "loses" => Ok(DeadlockConvention::Loses),
            "safe" => Ok(DeadlockConvention::Safe),
            _ => Err(format!("unknown deadlock convention `{s}` (loses|safe)")),
        }
    }
}

pub const DEFAULT_NODE_LIMIT: usize = 5_000_000;

#[derive(Clone, Debug)]
pub struct GameSpec {
    pub program: Program,
    pub policy_a: UpdatePolicy,
    pub policy_b: UpdatePolicy,
    pub initial: Configuration,
    pub first_mover: Player,
    pub deadlock: DeadlockConvention,
    pub buffer_bound: Option<usize>,
    /// Exploration aborts with [`ArenaError::Capacity`] beyond this many nodes.
    pub node_limit: usize,
    /// Expand large frontiers on the rayon pool (ignored without the feature).
    pub parallel: bool,
}

impl GameSpec {
    /// Initial configuration from the program, B moves first, deadlocked
    /// player loses, no bound.
    pub fn new(program: Program, policy_a: UpdatePolicy, policy_b: UpdatePolicy) -> Self {
        let initial = Configuration::initial(&program);
        GameSpec {
            program,
            policy_a,
            policy_b,
            initial,
            first_mover: Player::B,
            deadlock: DeadlockConvention::Loses,
            buffer_bound: None,
            node_limit: DEFAULT_NODE_LIMIT,
            parallel: par::AVAILABLE,
        }
    }

    pub fn with_bound(mut self, k: usize) -> Self {
        self.buffer_bound = Some(k);
        self
    }

    pub fn policy(&self, who: Player) -> UpdatePolicy {
        match who {
            Player::A => self.policy_a,
            Player::B => self.policy_b,
        }
    }

    pub fn group(&self) -> Group {
        classify(self.policy_a, self.policy_b)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ArenaError {
    #[error("explicit arena construction needs a buffer bound")]
    MissingBound,
    #[error("initial configuration holds {size} messages, above the bound {bound}")]
    InitialExceedsBound { size: usize, bound: usize },
    #[error("arena exceeds the node limit {limit} ({nodes} nodes explored)")]
    Capacity { nodes: usize, limit: usize },
    #[error(transparent)]
    Config(#[from] TsoError),
    #[error(transparent)]
    Game(#[from] GameError),
}

/// Landing configurations of one move by a player with `policy` from `c`:
/// optional updates, exactly one instruction of some process, optional
/// updates. Landings with more than `bound` messages are dropped. Sorted and
/// duplicate-free.
pub fn moves(
    p: &Program,
    c: &Configuration,
    policy: UpdatePolicy,
    bound: Option<usize>,
) -> Vec<Configuration> {
    let pre = if policy.can_before() {
        update_closure(c)
    } else {
        vec![c.clone()]
    };
    let fits = |d: &Configuration| bound.is_none_or(|k| buffer_size(d) <= k);
    let mut out = Vec::new();
    for d in &pre {
        for i in p.proc_ids() {
            for edge in enabled_instrs(p, d, i) {
                let e = apply_instr(p, d, i, edge);
                if policy.can_after() {
                    out.extend(update_closure(&e).into_iter().filter(|f| fits(f)));
                } else if fits(&e) {
                    out.push(e);
                }
            }
        }
    }
    out.sort();
    out.dedup();
    out
}

/// Whether any process of `c` sits in a final local state.
pub fn has_final_process(p: &Program, c: &Configuration) -> bool {
    c.global.iter().any(|s| p.is_final_state(*s))
}

/// Completion gadgets appended after the explored nodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sink {
    /// B-node that can only move into [`Sink::FinalA`].
    LoseB,
    /// Final A-node cycling with [`Sink::LoseB`].
    FinalA,
    /// Non-final A-node cycling with [`Sink::SafeB`].
    SafeA,
    /// Non-final B-node cycling with [`Sink::SafeA`].
    SafeB,
}

impl Sink {
    pub fn owner(self) -> Player {
        match self {
            Sink::LoseB | Sink::SafeB => Player::B,
            Sink::FinalA | Sink::SafeA => Player::A,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeKey<K> {
    Real(K, Player),
    Sink(Sink),
}

impl<K> NodeKey<K> {
    pub fn real(&self) -> Option<&K> {
        match self {
            NodeKey::Real(k, _) => Some(k),
            NodeKey::Sink(_) => None,
        }
    }
}

/// An arena under construction, before deadlock completion.
#[derive(Clone, Debug, Default)]
pub struct RawArena {
    pub owner: Vec<Player>,
    pub is_final: Vec<bool>,
    pub edges: Vec<(u32, u32)>,
}

/// Routes every deadlocked node into shared sink gadgets and validates the
/// result. Returns the game and the sinks appended, in node order.
pub fn complete_deadlocks(
    mut raw: RawArena,
    convention: DeadlockConvention,
) -> Result<(SafetyGame, Vec<Sink>), GameError> {
    let n = raw.owner.len();
    let mut out_deg = vec![0usize; n];
    for &(s, _) in &raw.edges {
        out_deg[s as usize] += 1;
    }
    let dead: Vec<usize> = (0..n).filter(|i| out_deg[*i] == 0).collect();
    let mut sinks: Vec<Sink> = Vec::new();
    let sink_id = |s: Sink, sinks: &mut Vec<Sink>, raw: &mut RawArena| -> u32 {
        if let Some(pos) = sinks.iter().position(|x| *x == s) {
            return (n + pos) as u32;
        }
        sinks.push(s);
        raw.owner.push(s.owner());
        raw.is_final.push(s == Sink::FinalA);
        (n + sinks.len() - 1) as u32
    };
    for i in dead {
        let target = match (raw.owner[i], convention) {
            (Player::A, DeadlockConvention::Loses) => Sink::LoseB,
            (Player::A, DeadlockConvention::Safe) => Sink::SafeB,
            (Player::B, _) => Sink::SafeA,
        };
        let t = sink_id(target, &mut sinks, &mut raw);
        raw.edges.push((i as u32, t));
    }
    // close the gadgets into two-cycles
    let mut k = 0;
    while k < sinks.len() {
        let partner = match sinks[k] {
            Sink::LoseB => Sink::FinalA,
            Sink::FinalA => Sink::LoseB,
            Sink::SafeA => Sink::SafeB,
            Sink::SafeB => Sink::SafeA,
        };
        let me = (n + k) as u32;
        let t = sink_id(partner, &mut sinks, &mut raw);
        raw.edges.push((me, t));
        k += 1;
    }
    let g = SafetyGame::new(raw.owner, raw.is_final, raw.edges)?;
    Ok((g, sinks))
}

/// A solved-ready arena together with what each node stands for.
#[derive(Clone, Debug)]
pub struct Arena<K> {
    pub game: SafetyGame,
    pub keys: Vec<NodeKey<K>>,
    pub initial: NodeId,
}

impl<K: Ord> Arena<K> {
    pub fn node_of(&self, key: &K, owner: Player) -> Option<NodeId> {
        // real nodes come first in canonical order
        let real = self
            .keys
            .iter()
            .position(|k| matches!(k, NodeKey::Sink(_)))
            .unwrap_or(self.keys.len());
        self.keys[..real]
            .binary_search_by(|k| match k {
                NodeKey::Real(kk, o) => (kk, *o).cmp(&(key, owner)),
                NodeKey::Sink(_) => unreachable!(),
            })
            .ok()
            .map(|i| NodeId(i as u32))
    }

    pub fn real_nodes(&self) -> impl Iterator<Item = (NodeId, &K, Player)> {
        self.keys.iter().enumerate().filter_map(|(i, k)| match k {
            NodeKey::Real(kk, o) => Some((NodeId(i as u32), kk, *o)),
            NodeKey::Sink(_) => None,
        })
    }

    /// Sidecar index: one line per node naming what it stands for.
    pub fn index_text(&self, describe: impl Fn(&K) -> String) -> String {
        let mut out = format!("index v1 {}\n", self.keys.len());
        for (i, k) in self.keys.iter().enumerate() {
            match k {
                NodeKey::Real(kk, o) => out.push_str(&format!("{i} {o} {}\n", describe(kk))),
                NodeKey::Sink(s) => out.push_str(&format!("{i} {} sink:{s:?}\n", s.owner())),
            }
        }
        out
    }
}

/// Options for the generic explorer.
pub(crate) struct Explore<'a, K> {
    pub initial: K,
    pub first: Player,
    pub successors: &'a (dyn Fn(&K, Player) -> Vec<K> + Sync),
    /// Successor nodes failing this test are not generated.
    pub keep: &'a (dyn Fn(&K, Player) -> bool + Sync),
    pub is_final: &'a (dyn Fn(&K) -> bool + Sync),
    pub deadlock: DeadlockConvention,
    pub node_limit: usize,
    pub parallel: bool,
}

const PAR_FRONTIER: usize = 64;

/// Level-synchronous forward exploration. Node ids are assigned by sorting
/// the reachable keys, so the result does not depend on expansion order.
pub(crate) fn explore<K>(opts: Explore<'_, K>) -> Result<Arena<K>, ArenaError>
where
    K: Clone + Ord + Hash + Send + Sync,
{
    let mut ids: HashMap<(K, Player), u32> = HashMap::new();
    let mut nodes: Vec<(K, Player)> = Vec::new();
    let mut edges: Vec<(u32, u32)> = Vec::new();
    let start = (opts.initial.clone(), opts.first);
    ids.insert(start.clone(), 0);
    nodes.push(start);
    let mut frontier: Vec<u32> = vec![0];
    while !frontier.is_empty() {
        let work: Vec<(u32, K, Player)> = frontier
            .iter()
            .map(|&i| {
                let (k, o) = &nodes[i as usize];
                (i, k.clone(), *o)
            })
            .collect();
        let parallel = opts.parallel && work.len() >= PAR_FRONTIER;
        let expanded = par::map_collect(&work, parallel, |(_, k, o)| {
            let next_owner = o.opponent();
            (opts.successors)(k, *o)
                .into_iter()
                .filter(|s| (opts.keep)(s, next_owner))
                .collect::<Vec<K>>()
        });
        let mut next_frontier = Vec::new();
        for ((src, _, o), succs) in work.into_iter().zip(expanded) {
            let next_owner = o.opponent();
            for s in succs {
                let key = (s, next_owner);
                let id = match ids.get(&key) {
                    Some(id) => *id,
                    None => {
                        let id = nodes.len() as u32;
                        if nodes.len() >= opts.node_limit {
                            return Err(ArenaError::Capacity {
                                nodes: nodes.len(),
                                limit: opts.node_limit,
                            });
                        }
                        ids.insert(key.clone(), id);
                        nodes.push(key);
                        next_frontier.push(id);
                        id
                    }
                };
                edges.push((src, id));
            }
        }
        frontier = next_frontier;
    }
    drop(ids);

    let mut order: Vec<u32> = (0..nodes.len() as u32).collect();
    order.sort_by(|a, b| nodes[*a as usize].cmp(&nodes[*b as usize]));
    let mut remap = vec![0u32; nodes.len()];
    for (new, old) in order.iter().enumerate() {
        remap[*old as usize] = new as u32;
    }
    let mut slots: Vec<Option<(K, Player)>> = nodes.into_iter().map(Some).collect();
    let sorted: Vec<(K, Player)> = order
        .iter()
        .map(|old| slots[*old as usize].take().expect("each node moved once"))
        .collect();
    let raw = RawArena {
        owner: sorted.iter().map(|(_, o)| *o).collect(),
        is_final: sorted
            .iter()
            .map(|(k, o)| *o == Player::A && (opts.is_final)(k))
            .collect(),
        edges: edges
            .into_iter()
            .map(|(s, d)| (remap[s as usize], remap[d as usize]))
            .collect(),
    };
    let (game, sinks) = complete_deadlocks(raw, opts.deadlock)?;
    let mut keys: Vec<NodeKey<K>> = sorted.into_iter().map(|(k, o)| NodeKey::Real(k, o)).collect();
    keys.extend(sinks.into_iter().map(NodeKey::Sink));
    Ok(Arena {
        game,
        keys,
        initial: NodeId(remap[0]),
    })
}

/// Explores the configuration arena of `spec`, with an optional total
/// buffer bound and an extra filter on generated nodes.
pub(crate) fn explore_configs(
    spec: &GameSpec,
    bound: Option<usize>,
    keep: &(dyn Fn(&Configuration, Player) -> bool + Sync),
) -> Result<Arena<Configuration>, ArenaError> {
    let p = &spec.program;
    check_config(p, &spec.initial)?;
    let successors = |c: &Configuration, who: Player| moves(p, c, spec.policy(who), bound);
    let is_final = |c: &Configuration| has_final_process(p, c);
    explore(Explore {
        initial: spec.initial.clone(),
        first: spec.first_mover,
        successors: &successors,
        keep,
        is_final: &is_final,
        deadlock: spec.deadlock,
        node_limit: spec.node_limit,
        parallel: spec.parallel,
    })
}

/// The full arena of `spec` restricted to configurations within the buffer bound.
pub fn build_arena(spec: &GameSpec) -> Result<Arena<Configuration>, ArenaError> {
    let bound = spec.buffer_bound.ok_or(ArenaError::MissingBound)?;
    check_config(&spec.program, &spec.initial)?;
    let size = buffer_size(&spec.initial);
    if size > bound {
        return Err(ArenaError::InitialExceedsBound { size, bound });
    }
    explore_configs(spec, Some(bound), &|_, _| true)
}

impl Arena<Configuration> {
    pub fn config_index(&self, p: &Program) -> String {
        self.index_text(|c| c.display(p).to_string())
    }
}
