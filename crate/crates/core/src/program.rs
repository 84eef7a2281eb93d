//! Concurrent programs: processes as labeled graphs over shared variables,
//! plus the line-based `tsogame v1` text format.

use std::fmt;

use thiserror::Error;

/// Index of a process in declaration order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ProcId(pub u16);

/// Interned shared variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VarId(pub u16);

/// Interned domain value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Value(pub u16);

/// Interned local state. State ids are global to the program; each one is
/// owned by exactly one process.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateId(pub u32);

impl ProcId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl VarId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl Value {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl StateId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Instruction {
    Read(VarId, Value),
    Write(VarId, Value),
    Skip,
    Fence,
}

impl Instruction {
    pub fn is_write(&self) -> bool {
        matches!(self, Instruction::Write(..))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Transition {
    pub from: StateId,
    pub instr: Instruction,
    pub to: StateId,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StateInfo {
    pub name: String,
    pub process: ProcId,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Process {
    pub name: String,
    pub states: Vec<StateId>,
    pub init: StateId,
    pub finals: Vec<StateId>,
    pub transitions: Vec<Transition>,
}

impl Process {
    /// Transitions leaving `state`, paired with their index in `transitions`.
    pub fn outgoing(&self, state: StateId) -> impl Iterator<Item = (usize, &Transition)> {
        self.transitions
            .iter()
            .enumerate()
            .filter(move |(_, t)| t.from == state)
    }
}

/// A concurrent program. Fields are public so that malformed programs can be
/// assembled and inspected with [`validate`]; use [`ProgramBuilder`] or
/// [`parse_program`] for checked construction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Program {
    pub domain: Vec<String>,
    pub vars: Vec<String>,
    pub initial_memory: Vec<Value>,
    pub states: Vec<StateInfo>,
    pub processes: Vec<Process>,
}

impl Program {
    pub fn num_processes(&self) -> usize {
        self.processes.len()
    }

    pub fn process(&self, p: ProcId) -> &Process {
        &self.processes[p.index()]
    }

    pub fn proc_ids(&self) -> impl Iterator<Item = ProcId> {
        (0..self.processes.len() as u16).map(ProcId)
    }

    pub fn state_name(&self, s: StateId) -> &str {
        &self.states[s.index()].name
    }

    pub fn var_name(&self, x: VarId) -> &str {
        &self.vars[x.index()]
    }

    pub fn value_name(&self, v: Value) -> &str {
        &self.domain[v.index()]
    }

    pub fn var_named(&self, name: &str) -> Option<VarId> {
        self.vars.iter().position(|v| v == name).map(|i| VarId(i as u16))
    }

    pub fn value_named(&self, name: &str) -> Option<Value> {
        self.domain.iter().position(|v| v == name).map(|i| Value(i as u16))
    }

    pub fn process_named(&self, name: &str) -> Option<ProcId> {
        self.processes
            .iter()
            .position(|p| p.name == name)
            .map(|i| ProcId(i as u16))
    }

    pub fn state_named(&self, p: ProcId, name: &str) -> Option<StateId> {
        self.process(p)
            .states
            .iter()
            .copied()
            .find(|s| self.states[s.index()].name == name)
    }

    pub fn is_final_state(&self, s: StateId) -> bool {
        let owner = self.states[s.index()].process;
        self.process(owner).finals.contains(&s)
    }

    /// One flag per global state id.
    pub fn final_flags(&self) -> Vec<bool> {
        let mut flags = vec![false; self.states.len()];
        for p in &self.processes {
            for s in &p.finals {
                if let Some(f) = flags.get_mut(s.index()) {
                    *f = true;
                }
            }
        }
        flags
    }

    pub fn initial_global(&self) -> Vec<StateId> {
        self.processes.iter().map(|p| p.init).collect()
    }

    pub fn format_instr(&self, i: &Instruction) -> String {
        match *i {
            Instruction::Read(x, v) => format!("r {} {}", self.var_name(x), self.value_name(v)),
            Instruction::Write(x, v) => format!("w {} {}", self.var_name(x), self.value_name(v)),
            Instruction::Skip => "skip".to_string(),
            Instruction::Fence => "mf".to_string(),
        }
    }

    /// Canonical text emitter; `parse_program(&p.to_text())` reproduces `p`.
    pub fn to_text(&self) -> String {
        let mut out = String::from("tsogame v1\n");
        out.push_str(&format!("domain {}\n", self.domain.join(" ")));
        out.push_str(&format!("vars {}\n", self.vars.join(" ")));
        out.push_str("init-mem");
        for (i, v) in self.initial_memory.iter().enumerate() {
            out.push_str(&format!(" {} {}", self.vars[i], self.value_name(*v)));
        }
        out.push('\n');
        for p in &self.processes {
            out.push_str(&format!("process {}\n", p.name));
            let names: Vec<&str> = p.states.iter().map(|s| self.state_name(*s)).collect();
            out.push_str(&format!("  states {}\n", names.join(" ")));
            out.push_str(&format!("  init {}\n", self.state_name(p.init)));
            out.push_str("  final");
            for f in &p.finals {
                out.push(' ');
                out.push_str(self.state_name(*f));
            }
            out.push('\n');
            for t in &p.transitions {
                out.push_str(&format!(
                    "  {} -> {} : {}\n",
                    self.state_name(t.from),
                    self.state_name(t.to),
                    self.format_instr(&t.instr)
                ));
            }
        }
        out
    }

    /// Longest number of writes a single play can leave buffered, if finite:
    /// the sum over processes of the heaviest write-path through the
    /// condensation of the process graph. `None` when some cycle writes.
    pub fn write_path_bound(&self) -> Option<usize> {
        let mut total = 0;
        for p in &self.processes {
            total += process_write_bound(self, p)?;
        }
        Some(total)
    }

    pub fn is_write_acyclic(&self) -> bool {
        self.write_path_bound().is_some()
    }
}

fn process_write_bound(prog: &Program, p: &Process) -> Option<usize> {
    fn reaches(p: &Process, from: StateId, to: StateId) -> bool {
        let mut seen = vec![from];
        let mut stack = vec![from];
        while let Some(s) = stack.pop() {
            if s == to {
                return true;
            }
            for (_, t) in p.outgoing(s) {
                if !seen.contains(&t.to) {
                    seen.push(t.to);
                    stack.push(t.to);
                }
            }
        }
        false
    }

    // a write edge s -> t lies on a cycle iff t reaches s
    if p
        .transitions
        .iter()
        .any(|t| t.instr.is_write() && reaches(p, t.to, t.from))
    {
        return None;
    }

    // remaining cycles are write-free, so longest-path relaxation converges
    let n = prog.states.len();
    let mut best: Vec<Option<usize>> = vec![None; n];
    best[p.init.index()] = Some(0);
    loop {
        let mut changed = false;
        for t in &p.transitions {
            if let Some(b) = best[t.from.index()] {
                let cand = b + usize::from(t.instr.is_write());
                if best[t.to.index()].is_none_or(|cur| cand > cur) {
                    best[t.to.index()] = Some(cand);
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    Some(best.into_iter().flatten().max().unwrap_or(0))
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum Diagnostic {
    #[error("domain is empty")]
    EmptyDomain,
    #[error("no variables declared")]
    NoVariables,
    #[error("initial memory has {found} entries for {expected} variables")]
    MemoryArity { expected: usize, found: usize },
    #[error("value id {0} outside the domain")]
    ValueOutOfDomain(u16),
    #[error("variable id {0} is not declared")]
    UnknownVariable(u16),
    #[error("state id {0} does not exist")]
    UnknownState(u32),
    #[error("process `{process}` lists state `{state}` owned by another process")]
    ForeignState { process: String, state: String },
    #[error("process `{process}`: initial state `{state}` is not one of its states")]
    InitNotOwned { process: String, state: String },
    #[error("process `{process}`: final state `{state}` is not one of its states")]
    FinalNotOwned { process: String, state: String },
    #[error("process `{process}`: transition {index} has an endpoint outside the process")]
    TransitionEndpoint { process: String, index: usize },
}

/// One diagnostic per violated program invariant; empty iff well-formed.
pub fn validate(p: &Program) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    if p.domain.is_empty() {
        out.push(Diagnostic::EmptyDomain);
    }
    if p.vars.is_empty() {
        out.push(Diagnostic::NoVariables);
    }
    if p.initial_memory.len() != p.vars.len() {
        out.push(Diagnostic::MemoryArity {
            expected: p.vars.len(),
            found: p.initial_memory.len(),
        });
    }
    for v in &p.initial_memory {
        if v.index() >= p.domain.len() {
            out.push(Diagnostic::ValueOutOfDomain(v.0));
        }
    }
    let state_name = |s: StateId| {
        p.states
            .get(s.index())
            .map(|i| i.name.clone())
            .unwrap_or_else(|| format!("#{}", s.0))
    };
    for (pi, proc_) in p.processes.iter().enumerate() {
        let owns = |s: StateId| {
            proc_.states.contains(&s)
                && p.states
                    .get(s.index())
                    .is_some_and(|info| info.process.index() == pi)
        };
        for s in &proc_.states {
            match p.states.get(s.index()) {
                None => out.push(Diagnostic::UnknownState(s.0)),
                Some(info) if info.process.index() != pi => out.push(Diagnostic::ForeignState {
                    process: proc_.name.clone(),
                    state: info.name.clone(),
                }),
                _ => {}
            }
        }
        if !owns(proc_.init) {
            out.push(Diagnostic::InitNotOwned {
                process: proc_.name.clone(),
                state: state_name(proc_.init),
            });
        }
        for f in &proc_.finals {
            if !owns(*f) {
                out.push(Diagnostic::FinalNotOwned {
                    process: proc_.name.clone(),
                    state: state_name(*f),
                });
            }
        }
        for (ti, t) in proc_.transitions.iter().enumerate() {
            if !owns(t.from) || !owns(t.to) {
                out.push(Diagnostic::TransitionEndpoint {
                    process: proc_.name.clone(),
                    index: ti,
                });
            }
            match t.instr {
                Instruction::Read(x, v) | Instruction::Write(x, v) => {
                    if x.index() >= p.vars.len() {
                        out.push(Diagnostic::UnknownVariable(x.0));
                    }
                    if v.index() >= p.domain.len() {
                        out.push(Diagnostic::ValueOutOfDomain(v.0));
                    }
                }
                Instruction::Skip | Instruction::Fence => {}
            }
        }
    }
    out
}

/// Checked programmatic construction.
#[derive(Debug)]
pub struct ProgramBuilder {
    prog: Program,
}

impl ProgramBuilder {
    pub fn new<D, V>(domain: D, vars: V) -> Self
    where
        D: IntoIterator,
        D::Item: Into<String>,
        V: IntoIterator,
        V::Item: Into<String>,
    {
        let domain: Vec<String> = domain.into_iter().map(Into::into).collect();
        let vars: Vec<String> = vars.into_iter().map(Into::into).collect();
        let initial_memory = vec![Value(0); vars.len()];
        ProgramBuilder {
            prog: Program {
                domain,
                vars,
                initial_memory,
                states: Vec::new(),
                processes: Vec::new(),
            },
        }
    }

    pub fn value(&self, name: &str) -> Value {
        self.prog
            .value_named(name)
            .unwrap_or_else(|| panic!("value `{name}` not in domain"))
    }

    pub fn var(&self, name: &str) -> VarId {
        self.prog
            .var_named(name)
            .unwrap_or_else(|| panic!("variable `{name}` not declared"))
    }

    pub fn set_memory(&mut self, x: VarId, v: Value) -> &mut Self {
        self.prog.initial_memory[x.index()] = v;
        self
    }

    /// Adds a process whose initial state is named `init`.
    pub fn process(&mut self, name: &str, init: &str) -> ProcId {
        let id = ProcId(self.prog.processes.len() as u16);
        let s = StateId(self.prog.states.len() as u32);
        self.prog.states.push(StateInfo {
            name: init.to_string(),
            process: id,
        });
        self.prog.processes.push(Process {
            name: name.to_string(),
            states: vec![s],
            init: s,
            finals: Vec::new(),
            transitions: Vec::new(),
        });
        id
    }

    /// Returns the state named `name` in `p`, creating it if needed.
    pub fn state(&mut self, p: ProcId, name: &str) -> StateId {
        if let Some(s) = self.prog.state_named(p, name) {
            return s;
        }
        let s = StateId(self.prog.states.len() as u32);
        self.prog.states.push(StateInfo {
            name: name.to_string(),
            process: p,
        });
        self.prog.processes[p.index()].states.push(s);
        s
    }

    pub fn edge(&mut self, p: ProcId, from: &str, instr: Instruction, to: &str) -> &mut Self {
        let from = self.state(p, from);
        let to = self.state(p, to);
        self.prog.processes[p.index()]
            .transitions
            .push(Transition { from, instr, to });
        self
    }

    pub fn mark_final(&mut self, p: ProcId, name: &str) -> &mut Self {
        let s = self.state(p, name);
        let finals = &mut self.prog.processes[p.index()].finals;
        if !finals.contains(&s) {
            finals.push(s);
        }
        self
    }

    /// Validates and renumbers states so that each process owns a contiguous
    /// block in process order, which is the numbering the parser produces.
    pub fn build(self) -> Result<Program, Vec<Diagnostic>> {
        let diags = validate(&self.prog);
        if diags.is_empty() {
            Ok(renumber_states(self.prog))
        } else {
            Err(diags)
        }
    }
}

fn renumber_states(mut prog: Program) -> Program {
    let mut map = vec![StateId(0); prog.states.len()];
    let mut states = Vec::with_capacity(prog.states.len());
    for proc_ in &prog.processes {
        for s in &proc_.states {
            map[s.index()] = StateId(states.len() as u32);
            states.push(prog.states[s.index()].clone());
        }
    }
    prog.states = states;
    for proc_ in &mut prog.processes {
        let m = |s: &mut StateId| *s = map[s.index()];
        proc_.states.iter_mut().for_each(m);
        m(&mut proc_.init);
        proc_.finals.iter_mut().for_each(m);
        for t in &mut proc_.transitions {
            m(&mut t.from);
            m(&mut t.to);
        }
    }
    prog
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("undeclared variable `{0}`")]
    UndeclaredVariable(String),
    #[error("value `{0}` is outside the domain")]
    ValueOutsideDomain(String),
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("duplicate declaration `{0}`")]
    Duplicate(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct Tok<'a> {
    pub text: &'a str,
    pub line: usize,
    pub column: usize,
}

/// Splits a line into whitespace-separated tokens, dropping `#` comments.
pub(crate) fn tokenize(line_no: usize, line: &str) -> Vec<Tok<'_>> {
    let line = match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    };
    let mut toks = Vec::new();
    let mut start = None;
    for (i, ch) in line.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                toks.push(Tok {
                    text: &line[s..i],
                    line: line_no,
                    column: line[..s].chars().count() + 1,
                });
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        toks.push(Tok {
            text: &line[s..],
            line: line_no,
            column: line[..s].chars().count() + 1,
        });
    }
    toks
}

pub(crate) fn err_at(tok: &Tok<'_>, kind: ParseErrorKind) -> ParseError {
    ParseError {
        line: tok.line,
        column: tok.column,
        kind,
    }
}

fn syntax(tok: &Tok<'_>, msg: impl Into<String>) -> ParseError {
    err_at(tok, ParseErrorKind::Syntax(msg.into()))
}

struct RawProcess<'a> {
    name: Tok<'a>,
    states: Option<Vec<Tok<'a>>>,
    init: Option<Tok<'a>>,
    finals: Vec<Tok<'a>>,
    edges: Vec<(Tok<'a>, Tok<'a>, Vec<Tok<'a>>)>,
}

/// Parses the `tsogame v1` program format.
pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| tokenize(i + 1, l))
        .filter(|t| !t.is_empty());

    let header = lines.next().ok_or(ParseError {
        line: 1,
        column: 1,
        kind: ParseErrorKind::Syntax("empty input, expected `tsogame v1`".into()),
    })?;
    if header.len() != 2 || header[0].text != "tsogame" || header[1].text != "v1" {
        return Err(syntax(&header[0], "expected header `tsogame v1`"));
    }

    let mut domain: Option<Vec<String>> = None;
    let mut vars: Option<Vec<String>> = None;
    let mut init_mem: Vec<(Tok<'_>, Tok<'_>)> = Vec::new();
    let mut procs: Vec<RawProcess<'_>> = Vec::new();

    for toks in lines {
        let head = toks[0];
        match head.text {
            "domain" | "vars" => {
                if !procs.is_empty() {
                    return Err(syntax(&head, "declarations must precede processes"));
                }
                if toks.len() < 2 {
                    return Err(syntax(&head, format!("`{}` needs at least one name", head.text)));
                }
                let mut names: Vec<String> = Vec::new();
                for t in &toks[1..] {
                    if names.iter().any(|n| n == t.text) {
                        return Err(err_at(t, ParseErrorKind::Duplicate(t.text.into())));
                    }
                    names.push(t.text.to_string());
                }
                let slot = if head.text == "domain" { &mut domain } else { &mut vars };
                if slot.is_some() {
                    return Err(err_at(&head, ParseErrorKind::Duplicate(head.text.into())));
                }
                *slot = Some(names);
            }
            "init-mem" => {
                if !procs.is_empty() {
                    return Err(syntax(&head, "declarations must precede processes"));
                }
                if toks.len() < 3 || (toks.len() - 1) % 2 != 0 {
                    return Err(syntax(&head, "`init-mem` expects <var> <value> pairs"));
                }
                for pair in toks[1..].chunks(2) {
                    init_mem.push((pair[0], pair[1]));
                }
            }
            "process" => {
                if toks.len() != 2 {
                    return Err(syntax(&head, "expected `process <name>`"));
                }
                if procs.iter().any(|p| p.name.text == toks[1].text) {
                    return Err(err_at(&toks[1], ParseErrorKind::Duplicate(toks[1].text.into())));
                }
                procs.push(RawProcess {
                    name: toks[1],
                    states: None,
                    init: None,
                    finals: Vec::new(),
                    edges: Vec::new(),
                });
            }
            _ => {
                let Some(cur) = procs.last_mut() else {
                    return Err(syntax(&head, format!("unexpected `{}` outside a process", head.text)));
                };
                match head.text {
                    "init" => {
                        if toks.len() != 2 {
                            return Err(syntax(&head, "expected `init <state>`"));
                        }
                        if cur.init.is_some() {
                            return Err(err_at(&head, ParseErrorKind::Duplicate("init".into())));
                        }
                        cur.init = Some(toks[1]);
                    }
                    "final" => cur.finals.extend_from_slice(&toks[1..]),
                    "states" => {
                        if cur.states.is_some() {
                            return Err(err_at(&head, ParseErrorKind::Duplicate("states".into())));
                        }
                        cur.states = Some(toks[1..].to_vec());
                    }
                    _ => {
                        if toks.len() < 5 || toks[1].text != "->" || toks[3].text != ":" {
                            return Err(syntax(
                                &head,
                                "expected `<state> -> <state> : <instruction>`",
                            ));
                        }
                        cur.edges.push((toks[0], toks[2], toks[4..].to_vec()));
                    }
                }
            }
        }
    }

    let eof = Tok {
        text: "",
        line: text.lines().count().max(1),
        column: 1,
    };
    let domain = domain.ok_or_else(|| syntax(&eof, "missing `domain` declaration"))?;
    let vars = vars.ok_or_else(|| syntax(&eof, "missing `vars` declaration"))?;
    if procs.is_empty() {
        return Err(syntax(&eof, "no processes declared"));
    }

    let var_of = |t: &Tok<'_>| {
        vars.iter()
            .position(|v| v == t.text)
            .map(|i| VarId(i as u16))
            .ok_or_else(|| err_at(t, ParseErrorKind::UndeclaredVariable(t.text.into())))
    };
    let val_of = |t: &Tok<'_>| {
        domain
            .iter()
            .position(|v| v == t.text)
            .map(|i| Value(i as u16))
            .ok_or_else(|| err_at(t, ParseErrorKind::ValueOutsideDomain(t.text.into())))
    };

    let mut initial_memory = vec![Value(0); vars.len()];
    let mut seen_mem = vec![false; vars.len()];
    for (x, v) in &init_mem {
        let xi = var_of(x)?;
        if seen_mem[xi.index()] {
            return Err(err_at(x, ParseErrorKind::Duplicate(x.text.into())));
        }
        seen_mem[xi.index()] = true;
        initial_memory[xi.index()] = val_of(v)?;
    }

    let mut prog = Program {
        domain: domain.clone(),
        vars: vars.clone(),
        initial_memory,
        states: Vec::new(),
        processes: Vec::new(),
    };

    for (pi, raw) in procs.iter().enumerate() {
        let pid = ProcId(pi as u16);
        let init_tok = raw
            .init
            .ok_or_else(|| syntax(&raw.name, format!("process `{}` has no `init`", raw.name.text)))?;
        let mut local: Vec<(String, StateId)> = Vec::new();
        let declared = raw.states.is_some();

        let mut intern = |prog: &mut Program, t: &Tok<'_>, may_create: bool| -> Result<StateId, ParseError> {
            if let Some((_, s)) = local.iter().find(|(n, _)| n == t.text) {
                return Ok(*s);
            }
            if !may_create {
                return Err(err_at(t, ParseErrorKind::UnknownState(t.text.into())));
            }
            let s = StateId(prog.states.len() as u32);
            prog.states.push(StateInfo {
                name: t.text.to_string(),
                process: pid,
            });
            local.push((t.text.to_string(), s));
            Ok(s)
        };

        if let Some(decl) = &raw.states {
            for t in decl {
                if local_contains(&prog, pid, t.text) {
                    return Err(err_at(t, ParseErrorKind::Duplicate(t.text.into())));
                }
                intern(&mut prog, t, true)?;
            }
        }
        let init = intern(&mut prog, &init_tok, !declared)?;
        let mut transitions = Vec::new();
        for (from, to, instr) in &raw.edges {
            let f = intern(&mut prog, from, !declared)?;
            let t = intern(&mut prog, to, !declared)?;
            let ins = match (instr[0].text, instr.len()) {
                ("r", 3) => Instruction::Read(var_of(&instr[1])?, val_of(&instr[2])?),
                ("w", 3) => Instruction::Write(var_of(&instr[1])?, val_of(&instr[2])?),
                ("skip", 1) => Instruction::Skip,
                ("mf", 1) => Instruction::Fence,
                _ => {
                    return Err(syntax(
                        &instr[0],
                        "expected `r <var> <value>`, `w <var> <value>`, `skip` or `mf`",
                    ))
                }
            };
            transitions.push(Transition {
                from: f,
                instr: ins,
                to: t,
            });
        }
        let mut finals = Vec::new();
        for f in &raw.finals {
            let s = intern(&mut prog, f, false)?;
            if !finals.contains(&s) {
                finals.push(s);
            }
        }
        let states = prog
            .states
            .iter()
            .enumerate()
            .filter(|(_, info)| info.process == pid)
            .map(|(i, _)| StateId(i as u32))
            .collect();
        prog.processes.push(Process {
            name: raw.name.text.to_string(),
            states,
            init,
            finals,
            transitions,
        });
    }
    debug_assert!(validate(&prog).is_empty());
    Ok(prog)
}

fn local_contains(prog: &Program, pid: ProcId, name: &str) -> bool {
    prog.states
        .iter()
        .any(|info| info.process == pid && info.name == name)
}

impl fmt::Display for ProcId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p{}", self.0)
    }
}
