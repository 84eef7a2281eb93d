//! Finite two-player safety games on explicit bipartite arenas.
//!
//! Player B wants to reach a final node, player A wants to avoid it forever.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Player {
    A,
    B,
}

impl Player {
    pub fn opponent(self) -> Player {
        match self {
            Player::A => Player::B,
            Player::B => Player::A,
        }
    }
}

impl fmt::Display for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Player::A => "A",
            Player::B => "B",
        })
    }
}

impl FromStr for Player {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "A" | "a" => Ok(Player::A),
            "B" | "b" => Ok(Player::B),
            _ => Err(format!("expected A or B, got `{s}`")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum GameError {
    #[error("edge {0} -> {1} does not alternate ownership")]
    NonBipartite(NodeId, NodeId),
    #[error("final node {0} is not owned by A")]
    FinalNotA(NodeId),
    #[error("node {0} has no successor")]
    Deadlock(NodeId),
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("regions do not belong to this game")]
    InconsistentRegions,
    #[error("strategy has no choice at node {0}")]
    StrategyUndefined(NodeId),
    #[error("strategy moves from {0} to {1}, which is not a successor")]
    IllegalChoice(NodeId, NodeId),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// Explicit arena in compressed adjacency form. Successor lists are sorted
/// and duplicate-free.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SafetyGame {
    owner: Vec<Player>,
    is_final: Vec<bool>,
    succ_off: Vec<u32>,
    succ: Vec<NodeId>,
    pred_off: Vec<u32>,
    pred: Vec<NodeId>,
}

fn csr(n: usize, edges: &[(u32, u32)]) -> (Vec<u32>, Vec<NodeId>) {
    let mut off = vec![0u32; n + 1];
    for &(s, _) in edges {
        off[s as usize + 1] += 1;
    }
    for i in 0..n {
        off[i + 1] += off[i];
    }
    let mut fill = off.clone();
    let mut out = vec![NodeId(0); edges.len()];
    for &(s, d) in edges {
        out[fill[s as usize] as usize] = NodeId(d);
        fill[s as usize] += 1;
    }
    (off, out)
}

impl SafetyGame {
    /// Builds and validates an arena. Edges may come in any order and may
    /// repeat.
    pub fn new(
        owner: Vec<Player>,
        is_final: Vec<bool>,
        mut edges: Vec<(u32, u32)>,
    ) -> Result<Self, GameError> {
        let n = owner.len();
        assert_eq!(n, is_final.len(), "owner and final vectors differ in length");
        for &(s, d) in &edges {
            for x in [s, d] {
                if x as usize >= n {
                    return Err(GameError::UnknownNode(NodeId(x)));
                }
            }
            if owner[s as usize] == owner[d as usize] {
                return Err(GameError::NonBipartite(NodeId(s), NodeId(d)));
            }
        }
        for (i, f) in is_final.iter().enumerate() {
            if *f && owner[i] != Player::A {
                return Err(GameError::FinalNotA(NodeId(i as u32)));
            }
        }
        edges.sort_unstable();
        edges.dedup();
        let (succ_off, succ) = csr(n, &edges);
        for i in 0..n {
            if succ_off[i] == succ_off[i + 1] {
                return Err(GameError::Deadlock(NodeId(i as u32)));
            }
        }
        let mut rev: Vec<(u32, u32)> = edges.iter().map(|&(s, d)| (d, s)).collect();
        rev.sort_unstable();
        let (pred_off, pred) = csr(n, &rev);
        Ok(SafetyGame {
            owner,
            is_final,
            succ_off,
            succ,
            pred_off,
            pred,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.owner.len()
    }

    pub fn num_edges(&self) -> usize {
        self.succ.len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        (0..self.owner.len() as u32).map(NodeId)
    }

    pub fn owner(&self, n: NodeId) -> Player {
        self.owner[n.index()]
    }

    pub fn is_final(&self, n: NodeId) -> bool {
        self.is_final[n.index()]
    }

    pub fn successors(&self, n: NodeId) -> &[NodeId] {
        let i = n.index();
        &self.succ[self.succ_off[i] as usize..self.succ_off[i + 1] as usize]
    }

    pub fn predecessors(&self, n: NodeId) -> &[NodeId] {
        let i = n.index();
        &self.pred[self.pred_off[i] as usize..self.pred_off[i + 1] as usize]
    }

    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.nodes()
            .flat_map(move |s| self.successors(s).iter().map(move |d| (s, *d)))
    }

    fn check(&self, n: NodeId) -> Result<(), GameError> {
        if n.index() < self.num_nodes() {
            Ok(())
        } else {
            Err(GameError::UnknownNode(n))
        }
    }

    fn union_of<'a>(
        &'a self,
        ns: &[NodeId],
        adj: impl Fn(NodeId) -> &'a [NodeId],
    ) -> Result<Vec<NodeId>, GameError> {
        let mut mark = vec![false; self.num_nodes()];
        for &n in ns {
            self.check(n)?;
            for &m in adj(n) {
                mark[m.index()] = true;
            }
        }
        Ok(self.nodes().filter(|n| mark[n.index()]).collect())
    }

    /// Union of successors, ascending.
    pub fn post_set(&self, ns: &[NodeId]) -> Result<Vec<NodeId>, GameError> {
        self.union_of(ns, |n| self.successors(n))
    }

    /// Union of predecessors, ascending.
    pub fn pre_set(&self, ns: &[NodeId]) -> Result<Vec<NodeId>, GameError> {
        self.union_of(ns, |n| self.predecessors(n))
    }

    /// Canonical text dump: nodes ascending, edges lexicographic.
    pub fn dump(&self) -> String {
        let mut out = format!("game v1 {} {}\n", self.num_nodes(), self.num_edges());
        for n in self.nodes() {
            let tag = if self.is_final(n) { "final" } else { "-" };
            out.push_str(&format!("node {} {} {}\n", n, self.owner(n), tag));
        }
        for (s, d) in self.edges() {
            out.push_str(&format!("edge {s} {d}\n"));
        }
        out
    }

    pub fn from_dump(text: &str) -> Result<Self, GameError> {
        let perr = |line: usize, msg: &str| GameError::Parse {
            line,
            msg: msg.to_string(),
        };
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (ln, header) = lines.next().ok_or_else(|| perr(1, "empty dump"))?;
        let h: Vec<&str> = header.split_whitespace().collect();
        if h.len() != 4 || h[0] != "game" || h[1] != "v1" {
            return Err(perr(ln, "expected `game v1 <n> <m>`"));
        }
        let n: usize = h[2].parse().map_err(|_| perr(ln, "bad node count"))?;
        let m: usize = h[3].parse().map_err(|_| perr(ln, "bad edge count"))?;
        let mut owner = vec![None; n];
        let mut is_final = vec![false; n];
        let mut edges = Vec::with_capacity(m);
        for (ln, line) in lines {
            let t: Vec<&str> = line.split_whitespace().collect();
            let num = |s: &str| -> Result<u32, GameError> {
                let v: u32 = s.parse().map_err(|_| perr(ln, "bad node id"))?;
                if v as usize >= n {
                    return Err(perr(ln, "node id out of range"));
                }
                Ok(v)
            };
            match t.as_slice() {
                ["node", id, who, tag] => {
                    let id = num(id)? as usize;
                    owner[id] = Some(who.parse::<Player>().map_err(|e| perr(ln, &e))?);
                    is_final[id] = match *tag {
                        "final" => true,
                        "-" => false,
                        _ => return Err(perr(ln, "expected `final` or `-`")),
                    };
                }
                ["edge", s, d] => edges.push((num(s)?, num(d)?)),
                _ => return Err(perr(ln, "expected a node or edge line")),
            }
        }
        if edges.len() != m {
            return Err(perr(1, "edge count does not match header"));
        }
        let owner = owner
            .into_iter()
            .enumerate()
            .map(|(i, o)| o.ok_or_else(|| perr(1, &format!("node {i} not declared"))))
            .collect::<Result<Vec<_>, _>>()?;
        SafetyGame::new(owner, is_final, edges)
    }
}

/// Winning regions with the attractor rank of every B-winning node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Regions {
    pub winner: Vec<Player>,
    /// Layer in which the node joined B's attractor; `u32::MAX` on A's region.
    pub rank: Vec<u32>,
}

impl Regions {
    pub fn winner_at(&self, n: NodeId) -> Player {
        self.winner[n.index()]
    }

    pub fn win_a(&self) -> Vec<NodeId> {
        self.region(Player::A)
    }

    pub fn win_b(&self) -> Vec<NodeId> {
        self.region(Player::B)
    }

    pub fn region(&self, who: Player) -> Vec<NodeId> {
        self.winner
            .iter()
            .enumerate()
            .filter(|(_, w)| **w == who)
            .map(|(i, _)| NodeId(i as u32))
            .collect()
    }
}

/// Attractor of the final set for B, by backward breadth-first search with
/// out-degree counters on A-nodes. Linear in nodes plus edges.
pub fn solve(g: &SafetyGame) -> Regions {
    let n = g.num_nodes();
    let mut rank = vec![u32::MAX; n];
    let mut remaining: Vec<u32> = g
        .nodes()
        .map(|v| g.successors(v).len() as u32)
        .collect();
    let mut queue = VecDeque::new();
    for v in g.nodes() {
        if g.is_final(v) {
            rank[v.index()] = 0;
            queue.push_back(v);
        }
    }
    while let Some(u) = queue.pop_front() {
        let r = rank[u.index()] + 1;
        for &v in g.predecessors(u) {
            let i = v.index();
            if rank[i] != u32::MAX {
                continue;
            }
            let attracted = match g.owner(v) {
                Player::B => true,
                Player::A => {
                    remaining[i] -= 1;
                    remaining[i] == 0
                }
            };
            if attracted {
                rank[i] = r;
                queue.push_back(v);
            }
        }
    }
    let winner = rank
        .iter()
        .map(|r| if *r == u32::MAX { Player::A } else { Player::B })
        .collect();
    Regions { winner, rank }
}

/// A positional strategy for one player: one successor per node the player owns.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PositionalStrategy {
    pub player: Player,
    pub choice: Vec<Option<NodeId>>,
}

impl PositionalStrategy {
    pub fn choose(&self, n: NodeId) -> Option<NodeId> {
        self.choice.get(n.index()).copied().flatten()
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("strategy v1 {}\n", self.player);
        for (i, c) in self.choice.iter().enumerate() {
            if let Some(c) = c {
                out.push_str(&format!("choose {i} {c}\n"));
            }
        }
        out
    }

    /// Reads the text form and checks each choice against `g`.
    pub fn parse(text: &str, g: &SafetyGame) -> Result<Self, GameError> {
        let perr = |line: usize, msg: &str| GameError::Parse {
            line,
            msg: msg.to_string(),
        };
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (ln, header) = lines.next().ok_or_else(|| perr(1, "empty strategy"))?;
        let h: Vec<&str> = header.split_whitespace().collect();
        if h.len() != 3 || h[0] != "strategy" || h[1] != "v1" {
            return Err(perr(ln, "expected `strategy v1 <A|B>`"));
        }
        let player: Player = h[2].parse().map_err(|e: String| perr(ln, &e))?;
        let mut choice = vec![None; g.num_nodes()];
        for (ln, line) in lines {
            let t: Vec<&str> = line.split_whitespace().collect();
            let ["choose", s, d] = t.as_slice() else {
                return Err(perr(ln, "expected `choose <node> <successor>`"));
            };
            let s = NodeId(s.parse().map_err(|_| perr(ln, "bad node id"))?);
            let d = NodeId(d.parse().map_err(|_| perr(ln, "bad node id"))?);
            g.check(s)?;
            if g.owner(s) != player {
                return Err(perr(ln, "node is not owned by the strategy's player"));
            }
            if !g.successors(s).contains(&d) {
                return Err(GameError::IllegalChoice(s, d));
            }
            choice[s.index()] = Some(d);
        }
        Ok(PositionalStrategy { player, choice })
    }
}

/// Positional strategies read off the solved regions. B descends in rank on
/// its region; A stays inside its region; elsewhere both take the lowest id.
pub fn extract_strategies(
    g: &SafetyGame,
    r: &Regions,
) -> Result<(PositionalStrategy, PositionalStrategy), GameError> {
    if r.winner.len() != g.num_nodes() || r.rank.len() != g.num_nodes() {
        return Err(GameError::InconsistentRegions);
    }
    let mut sa = vec![None; g.num_nodes()];
    let mut sb = vec![None; g.num_nodes()];
    for v in g.nodes() {
        let succ = g.successors(v);
        let lowest = succ[0];
        let me = r.winner_at(v);
        match g.owner(v) {
            Player::A => {
                let pick = if me == Player::A {
                    *succ
                        .iter()
                        .find(|s| r.winner_at(**s) == Player::A)
                        .ok_or(GameError::InconsistentRegions)?
                } else {
                    lowest
                };
                sa[v.index()] = Some(pick);
            }
            Player::B => {
                let pick = if me == Player::B && !g.is_final(v) {
                    let rv = r.rank[v.index()];
                    *succ
                        .iter()
                        .find(|s| r.rank[s.index()] < rv)
                        .ok_or(GameError::InconsistentRegions)?
                } else {
                    lowest
                };
                sb[v.index()] = Some(pick);
            }
        }
    }
    Ok((
        PositionalStrategy {
            player: Player::A,
            choice: sa,
        },
        PositionalStrategy {
            player: Player::B,
            choice: sb,
        },
    ))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    /// First final node at this prefix index.
    BReachedFinal(usize),
    ASurvivedHorizon,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Play<N = NodeId> {
    pub prefix: Vec<N>,
    pub verdict: Verdict,
}

/// Follows both strategies from `start` for at most `horizon` moves,
/// stopping at the first final node.
pub fn play(
    g: &SafetyGame,
    sa: &PositionalStrategy,
    sb: &PositionalStrategy,
    start: NodeId,
    horizon: usize,
) -> Result<Play, GameError> {
    g.check(start)?;
    let mut cur = start;
    let mut prefix = vec![cur];
    for _ in 0..horizon {
        if g.is_final(cur) {
            break;
        }
        let s = match g.owner(cur) {
            Player::A => sa,
            Player::B => sb,
        };
        let next = s.choose(cur).ok_or(GameError::StrategyUndefined(cur))?;
        if !g.successors(cur).contains(&next) {
            return Err(GameError::IllegalChoice(cur, next));
        }
        prefix.push(next);
        cur = next;
    }
    let verdict = match prefix.iter().position(|n| g.is_final(*n)) {
        Some(i) => Verdict::BReachedFinal(i),
        None => Verdict::ASurvivedHorizon,
    };
    Ok(Play { prefix, verdict })
}
