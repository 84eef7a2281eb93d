//! Perfect channel systems: finite control plus one unbounded, reliable
//! FIFO channel. The channel is stored oldest-first.

use std::collections::{HashMap, VecDeque};

use crate::program::{err_at, tokenize, ParseError, ParseErrorKind};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ChanStateId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MsgId(pub u16);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ChanOp {
    Send(MsgId),
    Recv(MsgId),
    Nop,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ChanTransition {
    pub from: ChanStateId,
    pub op: ChanOp,
    pub to: ChanStateId,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pcs {
    pub states: Vec<String>,
    pub messages: Vec<String>,
    pub transitions: Vec<ChanTransition>,
    pub initial: ChanStateId,
    /// Optional target state recorded in the text format.
    pub target: Option<ChanStateId>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PcsConfig {
    pub state: ChanStateId,
    pub channel: Vec<MsgId>,
}

impl PcsConfig {
    pub fn initial(l: &Pcs) -> Self {
        PcsConfig {
            state: l.initial,
            channel: Vec::new(),
        }
    }
}

impl Pcs {
    pub fn state_name(&self, q: ChanStateId) -> &str {
        &self.states[q.0 as usize]
    }

    pub fn message_name(&self, m: MsgId) -> &str {
        &self.messages[m.0 as usize]
    }

    pub fn state_named(&self, name: &str) -> Option<ChanStateId> {
        self.states
            .iter()
            .position(|s| s == name)
            .map(|i| ChanStateId(i as u32))
    }

    pub fn validate(&self) -> Result<(), String> {
        let nq = self.states.len() as u32;
        let nm = self.messages.len() as u16;
        if self.initial.0 >= nq {
            return Err("initial state out of range".into());
        }
        if self.target.is_some_and(|t| t.0 >= nq) {
            return Err("target state out of range".into());
        }
        for (i, t) in self.transitions.iter().enumerate() {
            if t.from.0 >= nq || t.to.0 >= nq {
                return Err(format!("transition {i} has an endpoint out of range"));
            }
            if let ChanOp::Send(m) | ChanOp::Recv(m) = t.op {
                if m.0 >= nm {
                    return Err(format!("transition {i} uses an undeclared message"));
                }
            }
        }
        Ok(())
    }

    fn format_op(&self, op: ChanOp) -> String {
        match op {
            ChanOp::Send(m) => format!("! {}", self.message_name(m)),
            ChanOp::Recv(m) => format!("? {}", self.message_name(m)),
            ChanOp::Nop => "nop".into(),
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("pcs v1\n");
        out.push_str(&format!("messages {}\n", self.messages.join(" ")));
        out.push_str(&format!("states {}\n", self.states.join(" ")));
        out.push_str(&format!("init {}\n", self.state_name(self.initial)));
        if let Some(t) = self.target {
            out.push_str(&format!("target {}\n", self.state_name(t)));
        }
        for t in &self.transitions {
            out.push_str(&format!(
                "{} -> {} : {}\n",
                self.state_name(t.from),
                self.state_name(t.to),
                self.format_op(t.op)
            ));
        }
        out
    }
}

/// Successor of `c` along transition `t` (an index into `l.transitions`),
/// if `t` leaves `c.state` and is enabled.
pub fn pcs_step(l: &Pcs, c: &PcsConfig, t: usize) -> Option<PcsConfig> {
    let tr = l.transitions.get(t)?;
    if tr.from != c.state {
        return None;
    }
    let mut channel = c.channel.clone();
    match tr.op {
        ChanOp::Send(m) => channel.push(m),
        ChanOp::Recv(m) => {
            if channel.first() != Some(&m) {
                return None;
            }
            channel.remove(0);
        }
        ChanOp::Nop => {}
    }
    Some(PcsConfig {
        state: tr.to,
        channel,
    })
}

/// Shortest run (transition indices) of at most `depth` steps from `c0` to a
/// configuration in state `target`.
pub fn pcs_reach(l: &Pcs, c0: &PcsConfig, target: ChanStateId, depth: usize) -> Option<Vec<usize>> {
    if c0.state == target {
        return Some(Vec::new());
    }
    let mut parent: HashMap<PcsConfig, (PcsConfig, usize)> = HashMap::new();
    let mut queue = VecDeque::new();
    queue.push_back((c0.clone(), 0usize));
    parent.insert(c0.clone(), (c0.clone(), usize::MAX));
    while let Some((c, d)) = queue.pop_front() {
        if d == depth {
            continue;
        }
        for t in 0..l.transitions.len() {
            let Some(n) = pcs_step(l, &c, t) else { continue };
            if parent.contains_key(&n) {
                continue;
            }
            parent.insert(n.clone(), (c.clone(), t));
            if n.state == target {
                let mut run = vec![t];
                let mut cur = c;
                while cur != *c0 {
                    let (prev, via) = parent[&cur].clone();
                    run.push(via);
                    cur = prev;
                }
                run.reverse();
                return Some(run);
            }
            queue.push_back((n, d + 1));
        }
    }
    None
}

/// Replays `run` from `c0`, returning every visited configuration.
pub fn pcs_replay(l: &Pcs, c0: &PcsConfig, run: &[usize]) -> Option<Vec<PcsConfig>> {
    let mut out = vec![c0.clone()];
    for &t in run {
        let next = pcs_step(l, out.last().expect("nonempty"), t)?;
        out.push(next);
    }
    Some(out)
}

/// Parses the `pcs v1` format.
pub fn parse_pcs(text: &str) -> Result<Pcs, ParseError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| tokenize(i + 1, l))
        .filter(|t| !t.is_empty());
    let syntax = |tok: &crate::program::Tok<'_>, m: &str| err_at(tok, ParseErrorKind::Syntax(m.into()));
    let header = lines.next().ok_or(ParseError {
        line: 1,
        column: 1,
        kind: ParseErrorKind::Syntax("empty input, expected `pcs v1`".into()),
    })?;
    if header.len() != 2 || header[0].text != "pcs" || header[1].text != "v1" {
        return Err(syntax(&header[0], "expected header `pcs v1`"));
    }
    let mut messages: Vec<String> = Vec::new();
    let mut states: Vec<String> = Vec::new();
    let mut init = None;
    let mut target = None;
    let mut transitions = Vec::new();
    for toks in lines {
        let head = toks[0];
        match head.text {
            "messages" | "states" => {
                let list = if head.text == "messages" { &mut messages } else { &mut states };
                for t in &toks[1..] {
                    if list.iter().any(|x| x == t.text) {
                        return Err(err_at(t, ParseErrorKind::Duplicate(t.text.into())));
                    }
                    list.push(t.text.to_string());
                }
            }
            "init" | "target" => {
                if toks.len() != 2 {
                    return Err(syntax(&head, "expected one state name"));
                }
                let q = states
                    .iter()
                    .position(|s| s == toks[1].text)
                    .ok_or_else(|| err_at(&toks[1], ParseErrorKind::UnknownState(toks[1].text.into())))?;
                let slot = if head.text == "init" { &mut init } else { &mut target };
                *slot = Some(ChanStateId(q as u32));
            }
            _ => {
                if toks.len() < 5 || toks[1].text != "->" || toks[3].text != ":" {
                    return Err(syntax(&head, "expected `<state> -> <state> : ! m | ? m | nop`"));
                }
                let state = |t: &crate::program::Tok<'_>| {
                    states
                        .iter()
                        .position(|s| s == t.text)
                        .map(|i| ChanStateId(i as u32))
                        .ok_or_else(|| err_at(t, ParseErrorKind::UnknownState(t.text.into())))
                };
                let msg = |t: &crate::program::Tok<'_>| {
                    messages
                        .iter()
                        .position(|s| s == t.text)
                        .map(|i| MsgId(i as u16))
                        .ok_or_else(|| err_at(t, ParseErrorKind::ValueOutsideDomain(t.text.into())))
                };
                let from = state(&toks[0])?;
                let to = state(&toks[2])?;
                let op = match (toks[4].text, toks.len()) {
                    ("!", 6) => ChanOp::Send(msg(&toks[5])?),
                    ("?", 6) => ChanOp::Recv(msg(&toks[5])?),
                    ("nop", 5) => ChanOp::Nop,
                    _ => return Err(syntax(&toks[4], "expected `! m`, `? m` or `nop`")),
                };
                transitions.push(ChanTransition { from, op, to });
            }
        }
    }
    let eof = ParseError {
        line: text.lines().count().max(1),
        column: 1,
        kind: ParseErrorKind::Syntax("missing `init` line".into()),
    };
    let initial = init.ok_or(eof)?;
    Ok(Pcs {
        states,
        messages,
        transitions,
        initial,
        target,
    })
}
