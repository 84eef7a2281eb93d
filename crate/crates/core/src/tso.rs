//! TSO configurations and the store-buffer transition rules.
//!
//! Buffers are stored oldest-first: a write appends, an update pops index 0,
//! and read-own-write looks for the last entry on the variable.

use std::collections::{BTreeSet, HashSet, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::program::{Instruction, ProcId, Program, StateId, Value, VarId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Message {
    pub var: VarId,
    pub value: Value,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Configuration {
    pub global: Vec<StateId>,
    pub buffers: Vec<Vec<Message>>,
    pub memory: Vec<Value>,
}

/// A transition label. Instruction labels name the process-graph edge by its
/// index in the process's transition list, which keeps `step` a function even
/// when two edges from one state carry the same instruction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Instr { process: ProcId, edge: usize },
    Update(ProcId),
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum TsoError {
    #[error("malformed configuration: {0}")]
    Malformed(String),
    #[error("label {0:?} is not enabled")]
    NotEnabled(Label),
}

impl Configuration {
    pub fn initial(p: &Program) -> Self {
        Configuration {
            global: p.initial_global(),
            buffers: vec![Vec::new(); p.num_processes()],
            memory: p.initial_memory.clone(),
        }
    }

    pub fn state(&self, i: ProcId) -> StateId {
        self.global[i.index()]
    }

    pub fn buffer(&self, i: ProcId) -> &[Message] {
        &self.buffers[i.index()]
    }

    pub fn buffers_empty(&self) -> bool {
        self.buffers.iter().all(Vec::is_empty)
    }

    pub fn display<'a>(&'a self, p: &'a Program) -> ConfigDisplay<'a> {
        ConfigDisplay { prog: p, config: self }
    }
}

pub struct ConfigDisplay<'a> {
    prog: &'a Program,
    config: &'a Configuration,
}

impl fmt::Display for ConfigDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = self.prog;
        let c = self.config;
        write!(f, "S=[")?;
        for (i, s) in c.global.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{}", p.state_name(*s))?;
        }
        write!(f, "] B=[")?;
        for (i, b) in c.buffers.iter().enumerate() {
            if i > 0 {
                write!(f, " | ")?;
            }
            for (j, m) in b.iter().enumerate() {
                if j > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{}={}", p.var_name(m.var), p.value_name(m.value))?;
            }
        }
        write!(f, "] M=[")?;
        for (i, v) in c.memory.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{}={}", p.vars[i], p.value_name(*v))?;
        }
        write!(f, "]")
    }
}

/// Checks that `c` has the shape demanded by `p`.
pub fn check_config(p: &Program, c: &Configuration) -> Result<(), TsoError> {
    let bad = |m: String| Err(TsoError::Malformed(m));
    if c.global.len() != p.num_processes() {
        return bad(format!("{} local states for {} processes", c.global.len(), p.num_processes()));
    }
    if c.buffers.len() != p.num_processes() {
        return bad(format!("{} buffers for {} processes", c.buffers.len(), p.num_processes()));
    }
    if c.memory.len() != p.vars.len() {
        return bad(format!("{} memory cells for {} variables", c.memory.len(), p.vars.len()));
    }
    for (i, s) in c.global.iter().enumerate() {
        match p.states.get(s.index()) {
            Some(info) if info.process.index() == i => {}
            _ => return bad(format!("process {i} is in a state it does not own")),
        }
    }
    let in_domain = |v: Value| v.index() < p.domain.len();
    if !c.memory.iter().all(|v| in_domain(*v)) {
        return bad("memory value outside the domain".into());
    }
    for b in &c.buffers {
        for m in b {
            if m.var.index() >= p.vars.len() || !in_domain(m.value) {
                return bad("buffered message outside vars or domain".into());
            }
        }
    }
    Ok(())
}

/// The value process `i` would read for `x`: its newest pending write, else memory.
pub fn visible_value(c: &Configuration, i: ProcId, x: VarId) -> Value {
    c.buffer(i)
        .iter()
        .rev()
        .find(|m| m.var == x)
        .map_or(c.memory[x.index()], |m| m.value)
}

pub fn buffer_size(c: &Configuration) -> usize {
    c.buffers.iter().map(Vec::len).sum()
}

fn instr_enabled(c: &Configuration, i: ProcId, instr: &Instruction) -> bool {
    match *instr {
        Instruction::Read(x, v) => visible_value(c, i, x) == v,
        Instruction::Fence => c.buffer(i).is_empty(),
        Instruction::Write(..) | Instruction::Skip => true,
    }
}

/// Instruction labels of process `i` enabled at `c`, in edge order.
pub fn enabled_instrs<'a>(
    p: &'a Program,
    c: &'a Configuration,
    i: ProcId,
) -> impl Iterator<Item = usize> + 'a {
    p.process(i)
        .outgoing(c.state(i))
        .filter(move |(_, t)| instr_enabled(c, i, &t.instr))
        .map(|(e, _)| e)
}

pub fn enabled(p: &Program, c: &Configuration) -> Result<Vec<Label>, TsoError> {
    check_config(p, c)?;
    let mut out = Vec::new();
    for i in p.proc_ids() {
        out.extend(enabled_instrs(p, c, i).map(|edge| Label::Instr { process: i, edge }));
        if !c.buffer(i).is_empty() {
            out.push(Label::Update(i));
        }
    }
    Ok(out)
}

/// Applies an instruction edge without rechecking its premise.
pub(crate) fn apply_instr(p: &Program, c: &Configuration, i: ProcId, edge: usize) -> Configuration {
    let t = &p.process(i).transitions[edge];
    let mut next = c.clone();
    next.global[i.index()] = t.to;
    if let Instruction::Write(var, value) = t.instr {
        next.buffers[i.index()].push(Message { var, value });
    }
    next
}

pub(crate) fn apply_update(c: &Configuration, i: ProcId) -> Configuration {
    let mut next = c.clone();
    let m = next.buffers[i.index()].remove(0);
    next.memory[m.var.index()] = m.value;
    next
}

pub fn step(p: &Program, c: &Configuration, l: Label) -> Result<Configuration, TsoError> {
    check_config(p, c)?;
    match l {
        Label::Instr { process, edge } => {
            if process.index() >= p.num_processes() {
                return Err(TsoError::NotEnabled(l));
            }
            let t = p
                .process(process)
                .transitions
                .get(edge)
                .ok_or(TsoError::NotEnabled(l))?;
            if t.from != c.state(process) || !instr_enabled(c, process, &t.instr) {
                return Err(TsoError::NotEnabled(l));
            }
            Ok(apply_instr(p, c, process, edge))
        }
        Label::Update(i) => {
            if i.index() >= p.num_processes() || c.buffer(i).is_empty() {
                return Err(TsoError::NotEnabled(l));
            }
            Ok(apply_update(c, i))
        }
    }
}

/// Every configuration reachable from `c` by zero or more updates, sorted.
pub fn update_closure(c: &Configuration) -> Vec<Configuration> {
    if c.buffers_empty() {
        return vec![c.clone()];
    }
    let mut seen: HashSet<Configuration> = HashSet::new();
    let mut queue = VecDeque::new();
    seen.insert(c.clone());
    queue.push_back(c.clone());
    while let Some(cur) = queue.pop_front() {
        for (i, b) in cur.buffers.iter().enumerate() {
            if b.is_empty() {
                continue;
            }
            let next = apply_update(&cur, ProcId(i as u16));
            if seen.insert(next.clone()) {
                queue.push_back(next);
            }
        }
    }
    let mut out: Vec<_> = seen.into_iter().collect();
    out.sort();
    out
}

/// The members of the update closure with every buffer drained. More than
/// one element means the drain order matters for memory.
pub fn full_flush(c: &Configuration) -> Vec<Configuration> {
    // Only memory outcomes vary, so track (remaining suffix lengths, memory).
    let mut seen: BTreeSet<(Vec<usize>, Vec<Value>)> = BTreeSet::new();
    let mut stack = vec![(vec![0usize; c.buffers.len()], c.memory.clone())];
    let mut out = BTreeSet::new();
    while let Some((pos, mem)) = stack.pop() {
        if !seen.insert((pos.clone(), mem.clone())) {
            continue;
        }
        let mut done = true;
        for (i, b) in c.buffers.iter().enumerate() {
            if pos[i] < b.len() {
                done = false;
                let m = b[pos[i]];
                let mut np = pos.clone();
                np[i] += 1;
                let mut nm = mem.clone();
                nm[m.var.index()] = m.value;
                stack.push((np, nm));
            }
        }
        if done {
            out.insert(mem);
        }
    }
    out.into_iter()
        .map(|memory| Configuration {
            global: c.global.clone(),
            buffers: vec![Vec::new(); c.buffers.len()],
            memory,
        })
        .collect()
}
