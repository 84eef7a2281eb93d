//! Compiles a perfect channel system into a TSO game in which A may update
//! at any time and B never does, so that B steers the simulation and A
//! performs the buffer updates.
//!
//! P1 keeps the channel in its own store buffer as `x_w` writes, each
//! followed by an auxiliary `y = 1`. P2 rotates the oldest committed message
//! from `x_w` into `x_r` and runs the `y` protocol. P3 decides games in which
//! a player is stuck in P1 and P2.
//!
//! Every step meant for B enters a state marked `*` in the comments below;
//! such a state has a `skip` edge to a final catch state, so A has to leave
//! it on her very next move. Memory-dependent checks are placed on those exit
//! edges, which turns each failed check into a one-move loss for A. P2's own
//! writes sit in its buffer until A commits them, which the `mf` exits force.

use std::fmt;

use thiserror::Error;

use crate::arena::{build_arena, has_final_process, moves, GameSpec, UpdatePolicy};
use crate::game::{solve, Play, Player, Verdict};
use crate::pcs::{pcs_replay, ChanOp, ChanStateId, MsgId, Pcs, PcsConfig};
use crate::program::{Instruction, ProcId, Program, ProgramBuilder, StateId, Value, VarId};
use crate::tso::{apply_instr, apply_update, buffer_size, enabled_instrs, Configuration};

pub const P1: ProcId = ProcId(0);
pub const P2: ProcId = ProcId(1);
pub const P3: ProcId = ProcId(2);

/// Named gadget states.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Markers {
    pub rotation_start: StateId,
    pub y_check: StateId,
    pub b_win_catch: StateId,
    pub p1_catch: StateId,
    pub p3_intermediate: StateId,
    pub p3_win_a: StateId,
    pub p3_win_b: StateId,
}

#[derive(Clone, Debug)]
pub struct RoleMap {
    /// P1 state simulating each PCS state.
    pub p1_state: Vec<StateId>,
    pub x_w: VarId,
    pub x_r: VarId,
    pub y: VarId,
    pub bot: Value,
    pub zero: Value,
    pub one: Value,
    /// Domain value standing for each PCS message.
    pub msg_value: Vec<Value>,
}

#[derive(Clone, Debug)]
pub struct CompiledGame {
    pub spec: GameSpec,
    pub pcs: Pcs,
    pub target: ChanStateId,
    pub roles: RoleMap,
    pub markers: Markers,
}

fn q_name(l: &Pcs, q: ChanStateId) -> String {
    format!("q_{}", l.state_name(q))
}

/// Builds the three-process program for `l` with `target` as the goal.
pub fn compile(l: &Pcs, target: ChanStateId) -> CompiledGame {
    let msg_names: Vec<String> = l.messages.iter().map(|m| format!("m_{m}")).collect();
    let mut domain = vec!["bot".to_string(), "0".to_string(), "1".to_string()];
    domain.extend(msg_names.iter().cloned());
    let mut b = ProgramBuilder::new(domain, ["x_w", "x_r", "y"]);
    let (x_w, x_r, y) = (b.var("x_w"), b.var("x_r"), b.var("y"));
    let (bot, zero, one) = (b.value("bot"), b.value("0"), b.value("1"));
    b.set_memory(x_w, bot).set_memory(x_r, bot).set_memory(y, zero);
    let msg_value: Vec<Value> = msg_names.iter().map(|m| b.value(m)).collect();
    let rd = Instruction::Read;
    let wr = Instruction::Write;
    let skip = Instruction::Skip;

    let p1 = b.process("P1", &q_name(l, l.initial));
    let p2 = b.process("P2", "r0");
    let p3 = b.process("P3", "p3_init");
    for q in 0..l.states.len() {
        b.state(p1, &q_name(l, ChanStateId(q as u32)));
    }

    let mut p1_star: Vec<String> = Vec::new();
    let mut rq_done = vec![false; l.states.len()];
    for (ti, t) in l.transitions.iter().enumerate() {
        let q = q_name(l, t.from);
        let q2 = q_name(l, t.to);
        match t.op {
            ChanOp::Nop => {
                let n = format!("n{ti}");
                b.edge(p1, &q, skip, &n).edge(p1, &n, skip, &q2);
                p1_star.push(n);
            }
            ChanOp::Send(m) => {
                let s = format!("s{ti}");
                b.edge(p1, &q, wr(x_w, msg_value[m.0 as usize]), &s)
                    .edge(p1, &s, wr(y, one), &q2);
                p1_star.push(s);
            }
            ChanOp::Recv(m) => {
                // B announces a receive while some channel message is pending,
                // picks the transition once x_r holds the head message, and P1
                // then waits until the rotation has cleared x_r again.
                let rq = format!("rq_{}", l.state_name(t.from));
                if !rq_done[t.from.0 as usize] {
                    rq_done[t.from.0 as usize] = true;
                    b.edge(p1, &q, rd(y, one), &rq);
                }
                let (rr, rw, rz) = (format!("rr{ti}"), format!("rw{ti}"), format!("rz{ti}"));
                b.edge(p1, &rq, rd(x_r, msg_value[m.0 as usize]), &rr)
                    .edge(p1, &rr, skip, &rw)
                    .edge(p1, &rw, rd(x_r, bot), &rz)
                    .edge(p1, &rz, skip, &q2);
                p1_star.push(rr);
                p1_star.push(rz);
            }
        }
    }
    for s in &p1_star {
        b.edge(p1, s, skip, "p1_catch");
    }
    b.edge(p1, "p1_catch", skip, "p1_catch");
    b.mark_final(p1, "p1_catch");
    b.mark_final(p1, &q_name(l, target));

    // P2: rotation (A reads x_w, B hands over, A copies to x_r and clears
    // x_w, A commits both), then the y protocol, then x_r is cleared.
    let mut p2_star: Vec<String> = Vec::new();
    for (mi, v) in msg_value.iter().enumerate() {
        let (ra, rb) = (format!("ra_{}", l.messages[mi]), format!("rb_{}", l.messages[mi]));
        b.edge(p2, "r0", rd(x_w, *v), &ra)
            .edge(p2, &ra, skip, &rb)
            .edge(p2, &rb, wr(x_r, *v), "rc");
        p2_star.push(rb);
    }
    let chain: [(&str, Instruction, &str); 20] = [
        ("rc", skip, "rd*"),
        ("rd*", wr(x_w, bot), "re"),
        ("re", skip, "rf*"),
        ("rf*", Instruction::Fence, "rg"),
        ("rg", skip, "y1*"),
        // only one channel message has been committed so far
        ("y1*", rd(y, zero), "y2"),
        ("y2", skip, "y3*"),
        // A commits exactly the auxiliary message of the rotated entry
        ("y3*", rd(y, one), "y4"),
        ("y4", skip, "y5*"),
        ("y5*", wr(y, zero), "y6"),
        ("y6", skip, "y7*"),
        ("y7*", Instruction::Fence, "y8"),
        ("y8", skip, "y9*"),
        // and nothing beyond it
        ("y9*", rd(x_w, bot), "y10"),
        ("y10", skip, "y11*"),
        ("y11*", wr(x_r, bot), "y12"),
        ("y12", skip, "y13*"),
        ("y13*", Instruction::Fence, "r0"),
        // a y update started by A while P2 is idle hands B the game
        ("r0", rd(y, one), "p2_catch"),
        ("p2_catch", skip, "p2_catch"),
    ];
    for (from, i, to) in chain {
        b.edge(p2, from, i, to);
        if from.ends_with('*') && !p2_star.iter().any(|s| s == from) {
            p2_star.push(from.to_string());
        }
    }
    for s in &p2_star {
        b.edge(p2, s, skip, "p2_catch");
    }
    b.mark_final(p2, "p2_catch");

    b.edge(p3, "p3_init", skip, "p3_mid")
        .edge(p3, "p3_mid", skip, "p3_winA")
        .edge(p3, "p3_mid", skip, "p3_winB")
        .edge(p3, "p3_winA", skip, "p3_winA")
        .edge(p3, "p3_winB", skip, "p3_winB");
    b.mark_final(p3, "p3_winB");

    let program = b.build().expect("compiled program is well formed");
    let st = |p: ProcId, name: &str| program.state_named(p, name).expect("gadget state exists");
    let p1_state: Vec<StateId> = (0..l.states.len())
        .map(|q| st(p1, &q_name(l, ChanStateId(q as u32))))
        .collect();
    let markers = Markers {
        rotation_start: st(p2, "r0"),
        y_check: st(p2, "y1*"),
        b_win_catch: st(p2, "p2_catch"),
        p1_catch: st(p1, "p1_catch"),
        p3_intermediate: st(p3, "p3_mid"),
        p3_win_a: st(p3, "p3_winA"),
        p3_win_b: st(p3, "p3_winB"),
    };
    let spec = GameSpec::new(program, UpdatePolicy::Always, UpdatePolicy::Never);
    CompiledGame {
        spec,
        pcs: l.clone(),
        target,
        roles: RoleMap {
            p1_state,
            x_w,
            x_r,
            y,
            bot,
            zero,
            one,
            msg_value,
        },
        markers,
    }
}

impl CompiledGame {
    pub fn program(&self) -> &Program {
        &self.spec.program
    }

    /// Sidecar naming the gadget states: `<marker> <process> <state>`.
    pub fn markers_text(&self) -> String {
        let p = self.program();
        let m = &self.markers;
        let rows = [
            ("rotation_start", P2, m.rotation_start),
            ("y_check", P2, m.y_check),
            ("b_win_catch", P2, m.b_win_catch),
            ("p1_catch", P1, m.p1_catch),
            ("p3_intermediate", P3, m.p3_intermediate),
            ("p3_winA", P3, m.p3_win_a),
            ("p3_winB", P3, m.p3_win_b),
        ];
        let mut out = String::from("markers v1\n");
        for (name, proc_, s) in rows {
            out.push_str(&format!("{name} {} {}\n", p.process(proc_).name, p.state_name(s)));
        }
        out
    }

    fn edge(&self, proc_: ProcId, from: &str, to: &str) -> usize {
        let p = self.program();
        let f = p.state_named(proc_, from).expect("known state");
        let t = p.state_named(proc_, to).expect("known state");
        p.process(proc_)
            .transitions
            .iter()
            .position(|tr| tr.from == f && tr.to == t)
            .unwrap_or_else(|| panic!("no edge {from} -> {to}"))
    }

    fn message_of(&self, v: Value) -> Option<MsgId> {
        self.roles
            .msg_value
            .iter()
            .position(|x| *x == v)
            .map(|i| MsgId(i as u16))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum HarnessError {
    #[error("step {0} of the run is not enabled in the channel system")]
    InvalidRun(usize),
    #[error("the run needs buffer bound {required}, above {bound}")]
    BoundExceeded { required: usize, bound: usize },
    #[error("scripted move {index} is not a legal game move: {detail}")]
    IllegalMove { index: usize, detail: String },
}

/// One move of the scripted play.
#[derive(Clone, Debug)]
struct Scripted {
    who: Player,
    before: Vec<ProcId>,
    process: ProcId,
    edge: usize,
    after: Vec<ProcId>,
}

fn mv(who: Player, process: ProcId, edge: usize) -> Scripted {
    Scripted {
        who,
        before: Vec::new(),
        process,
        edge,
        after: Vec::new(),
    }
}

#[derive(Clone, Debug)]
pub struct CanonicalPlay {
    pub play: Play<(Configuration, Player)>,
    /// Prefix index range `[start, end]` of the moves simulating each run step.
    pub segments: Vec<(usize, usize)>,
    /// Successive messages that appeared in `x_r`.
    pub x_r_trace: Vec<MsgId>,
    pub bound: usize,
}

impl CanonicalPlay {
    pub fn segment_lengths(&self) -> Vec<usize> {
        self.segments.iter().map(|(s, e)| e - s).collect()
    }
}

/// Drives B through the simulation of every run step and A through the
/// cooperative responses, checking each move against the game rules.
pub fn canonical_play(cg: &CompiledGame, run: &[usize]) -> Result<CanonicalPlay, HarnessError> {
    let l = &cg.pcs;
    let trace = pcs_replay(l, &PcsConfig::initial(l), run).ok_or_else(|| {
        let mut c = PcsConfig::initial(l);
        let mut bad = 0;
        for (i, &t) in run.iter().enumerate() {
            match crate::pcs::pcs_step(l, &c, t) {
                Some(n) => c = n,
                None => {
                    bad = i;
                    break;
                }
            }
        }
        HarnessError::InvalidRun(bad)
    })?;
    let high_water = trace.iter().map(|c| c.channel.len()).max().unwrap_or(0);
    let bound = 2 * high_water + 2;

    let p = cg.program();
    let (a, bb) = (Player::A, Player::B);
    let mut script: Vec<Vec<Scripted>> = Vec::new();
    for &ti in run {
        let t = l.transitions[ti];
        let q = q_name(l, t.from);
        let q2 = q_name(l, t.to);
        let seg = match t.op {
            ChanOp::Nop => {
                let n = format!("n{ti}");
                vec![mv(bb, P1, cg.edge(P1, &q, &n)), mv(a, P1, cg.edge(P1, &n, &q2))]
            }
            ChanOp::Send(_) => {
                let s = format!("s{ti}");
                vec![mv(bb, P1, cg.edge(P1, &q, &s)), mv(a, P1, cg.edge(P1, &s, &q2))]
            }
            ChanOp::Recv(m) => {
                let name = &l.messages[m.0 as usize];
                let rq = format!("rq_{}", l.state_name(t.from));
                let (ra, rb) = (format!("ra_{name}"), format!("rb_{name}"));
                let (rr, rw, rz) = (format!("rr{ti}"), format!("rw{ti}"), format!("rz{ti}"));
                let e2 = |f: &str, t: &str| cg.edge(P2, f, t);
                let with_before = |mut s: Scripted, ups: &[ProcId]| {
                    s.before = ups.to_vec();
                    s
                };
                vec![
                    mv(bb, P1, cg.edge(P1, &q, &rq)),
                    with_before(mv(a, P2, e2("r0", &ra)), &[P1]),
                    mv(bb, P2, e2(&ra, &rb)),
                    mv(a, P2, e2(&rb, "rc")),
                    mv(bb, P2, e2("rc", "rd*")),
                    mv(a, P2, e2("rd*", "re")),
                    mv(bb, P2, e2("re", "rf*")),
                    with_before(mv(a, P2, e2("rf*", "rg")), &[P2, P2]),
                    mv(bb, P1, cg.edge(P1, &rq, &rr)),
                    mv(a, P1, cg.edge(P1, &rr, &rw)),
                    mv(bb, P2, e2("rg", "y1*")),
                    mv(a, P2, e2("y1*", "y2")),
                    mv(bb, P2, e2("y2", "y3*")),
                    with_before(mv(a, P2, e2("y3*", "y4")), &[P1]),
                    mv(bb, P2, e2("y4", "y5*")),
                    mv(a, P2, e2("y5*", "y6")),
                    mv(bb, P2, e2("y6", "y7*")),
                    with_before(mv(a, P2, e2("y7*", "y8")), &[P2]),
                    mv(bb, P2, e2("y8", "y9*")),
                    mv(a, P2, e2("y9*", "y10")),
                    mv(bb, P2, e2("y10", "y11*")),
                    mv(a, P2, e2("y11*", "y12")),
                    mv(bb, P2, e2("y12", "y13*")),
                    with_before(mv(a, P2, e2("y13*", "r0")), &[P2]),
                    mv(bb, P1, cg.edge(P1, &rw, &rz)),
                    mv(a, P1, cg.edge(P1, &rz, &q2)),
                ]
            }
        };
        script.push(seg);
    }
    // one more B move so that the position reached becomes an A-node
    let closing = mv(bb, P3, cg.edge(P3, "p3_init", "p3_mid"));

    let mut cur = cg.spec.initial.clone();
    let mut owner = cg.spec.first_mover;
    let mut prefix = vec![(cur.clone(), owner)];
    let mut segments = Vec::new();
    let mut x_r_trace = Vec::new();
    let mut index = 0;
    let mut apply = |s: &Scripted,
                     cur: &mut Configuration,
                     owner: &mut Player,
                     prefix: &mut Vec<(Configuration, Player)>|
     -> Result<(), HarnessError> {
        let illegal = |detail: String| HarnessError::IllegalMove { index, detail };
        if s.who != *owner {
            return Err(illegal(format!("scripted for {} on {}'s turn", s.who, owner)));
        }
        let mut c = cur.clone();
        for u in &s.before {
            if c.buffer(*u).is_empty() {
                return Err(illegal(format!("no message to update in {}", p.process(*u).name)));
            }
            c = apply_update(&c, *u);
        }
        if !enabled_instrs(p, &c, s.process).any(|e| e == s.edge) {
            let t = &p.process(s.process).transitions[s.edge];
            return Err(illegal(format!(
                "{} -> {} : {} is disabled",
                p.state_name(t.from),
                p.state_name(t.to),
                p.format_instr(&t.instr)
            )));
        }
        c = apply_instr(p, &c, s.process, s.edge);
        for u in &s.after {
            c = apply_update(&c, *u);
        }
        let size = buffer_size(&c);
        if size > bound {
            return Err(HarnessError::BoundExceeded { required: size, bound });
        }
        if moves(p, cur, cg.spec.policy(*owner), Some(bound)).binary_search(&c).is_err() {
            return Err(illegal("landing is not among the move's successors".into()));
        }
        *cur = c;
        *owner = owner.opponent();
        prefix.push((cur.clone(), *owner));
        index += 1;
        Ok(())
    };
    let x_r = cg.roles.x_r;
    let mut last_x_r = cur.memory[x_r.index()];
    for seg in &script {
        let start = prefix.len() - 1;
        for s in seg {
            apply(s, &mut cur, &mut owner, &mut prefix)?;
            let v = cur.memory[x_r.index()];
            if v != last_x_r {
                if let Some(m) = cg.message_of(v) {
                    x_r_trace.push(m);
                }
                last_x_r = v;
            }
        }
        segments.push((start, prefix.len() - 1));
    }
    apply(&closing, &mut cur, &mut owner, &mut prefix)?;

    let verdict = prefix
        .iter()
        .position(|(c, o)| *o == Player::A && has_final_process(p, c))
        .map_or(Verdict::ASurvivedHorizon, Verdict::BReachedFinal);
    Ok(CanonicalPlay {
        play: Play { prefix, verdict },
        segments,
        x_r_trace,
        bound,
    })
}

#[derive(Clone, Debug)]
pub struct ProbeResult {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
    /// Printed configurations of the scripted play.
    pub prefix: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct ProbeReport {
    pub probes: Vec<ProbeResult>,
}

impl ProbeReport {
    pub fn all_pass(&self) -> bool {
        self.probes.iter().all(|p| p.pass)
    }
}

impl fmt::Display for ProbeReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.probes {
            writeln!(f, "{} {}: {}", if p.pass { "PASS" } else { "FAIL" }, p.name, p.detail)?;
            if !p.pass {
                for line in &p.prefix {
                    writeln!(f, "    {line}")?;
                }
            }
        }
        Ok(())
    }
}

fn a_moves(cg: &CompiledGame, c: &Configuration) -> Vec<Configuration> {
    moves(cg.program(), c, UpdatePolicy::Always, None)
}

fn b_moves(cg: &CompiledGame, c: &Configuration) -> Vec<Configuration> {
    moves(cg.program(), c, UpdatePolicy::Never, None)
}

fn final_reply(cg: &CompiledGame, c: &Configuration) -> Option<Configuration> {
    b_moves(cg, c)
        .into_iter()
        .find(|d| has_final_process(cg.program(), d))
}

fn count_var(c: &Configuration, i: ProcId, x: VarId) -> usize {
    c.buffer(i).iter().filter(|m| m.var == x).count()
}

fn with_state(cg: &CompiledGame, c: &mut Configuration, proc_: ProcId, name: &str) {
    c.global[proc_.index()] = cg
        .program()
        .state_named(proc_, name)
        .unwrap_or_else(|| panic!("no state {name}"));
}

/// Runs the adversarial scenarios against the punish gadgets.
pub fn probe_gadgets(cg: &CompiledGame) -> ProbeReport {
    let probes = vec![
        probe_double_update(cg),
        probe_a_alone(cg),
        probe_blocked_receive(cg),
        probe_deadlocks(cg),
    ];
    ProbeReport { probes }
}

fn show(cg: &CompiledGame, c: &Configuration, who: Player) -> String {
    format!("{who} {}", c.display(cg.program()))
}

/// A commits two channel messages without a rotation in between.
fn probe_double_update(cg: &CompiledGame) -> ProbeResult {
    let name = "double-update";
    let l = &cg.pcs;
    let Some((ti, m)) = l.transitions.iter().enumerate().find_map(|(i, t)| match t.op {
        ChanOp::Send(m) => Some((i, m)),
        _ => None,
    }) else {
        return ProbeResult {
            name,
            pass: true,
            detail: "vacuous: no send transition".into(),
            prefix: vec![],
        };
    };
    let r = &cg.roles;
    let v = r.msg_value[m.0 as usize];
    // A to move after B's second send: P1 holds x_w=m y=1 x_w=m
    let mut c = cg.spec.initial.clone();
    with_state(cg, &mut c, P1, &format!("s{ti}"));
    c.buffers[P1.index()] = vec![
        crate::tso::Message { var: r.x_w, value: v },
        crate::tso::Message { var: r.y, value: r.one },
        crate::tso::Message { var: r.x_w, value: v },
    ];
    let mut tried = 0;
    for d in a_moves(cg, &c) {
        if count_var(&d, P1, r.x_w) > 0 {
            continue;
        }
        tried += 1;
        if final_reply(cg, &d).is_none() {
            return ProbeResult {
                name,
                pass: false,
                detail: "A committed both messages and B has no winning reply".into(),
                prefix: vec![show(cg, &c, Player::A), show(cg, &d, Player::B)],
            };
        }
    }
    ProbeResult {
        name,
        pass: tried > 0,
        detail: format!("{tried} double-commit moves by A, each answered by a B move into a final node"),
        prefix: vec![show(cg, &c, Player::A)],
    }
}

/// A tries to start the y protocol on her own, either by entering it in P2
/// or by committing an auxiliary message while P2 is idle.
fn probe_a_alone(cg: &CompiledGame) -> ProbeResult {
    let name = "rotation-by-A";
    let r = &cg.roles;
    let Some(v) = r.msg_value.first().copied() else {
        return ProbeResult {
            name,
            pass: true,
            detail: "vacuous: no messages".into(),
            prefix: vec![],
        };
    };
    let p = cg.program();
    let mut c = cg.spec.initial.clone();
    with_state(cg, &mut c, P2, "rg");
    c.memory[r.x_r.index()] = v;
    c.buffers[P1.index()] = vec![crate::tso::Message { var: r.y, value: r.one }];
    let y1 = cg.markers.y_check;

    // A enters the protocol herself: B answers with the catch
    let entered: Vec<Configuration> = a_moves(cg, &c)
        .into_iter()
        .filter(|d| d.state(P2) == y1)
        .collect();
    let caught = !entered.is_empty() && entered.iter().all(|d| final_reply(cg, d).is_some());
    // B enters it: A has a reply that leaves B no immediate win
    let b_entered: Vec<Configuration> = b_moves(cg, &c)
        .into_iter()
        .filter(|d| d.state(P2) == y1)
        .collect();
    let a_escapes = b_entered
        .iter()
        .all(|d| a_moves(cg, d).iter().any(|e| final_reply(cg, e).is_none() && !has_final_process(p, e)));

    // A commits the auxiliary message while P2 sits at the rotation start
    let mut idle = cg.spec.initial.clone();
    idle.buffers[P1.index()] = vec![crate::tso::Message { var: r.y, value: r.one }];
    let idle_hits: Vec<Configuration> = a_moves(cg, &idle)
        .into_iter()
        .filter(|d| d.memory[r.y.index()] == r.one && d.state(P2) == cg.markers.rotation_start)
        .collect();
    let idle_caught = !idle_hits.is_empty()
        && idle_hits.iter().all(|d| {
            b_moves(cg, d)
                .iter()
                .any(|e| e.state(P2) == cg.markers.b_win_catch)
        });

    ProbeResult {
        name,
        pass: caught && !b_entered.is_empty() && a_escapes && idle_caught,
        detail: format!(
            "A-initiated entries caught: {caught}; B-initiated entries survivable by A: {a_escapes}; idle y commit caught: {idle_caught}"
        ),
        prefix: vec![show(cg, &c, Player::A), show(cg, &idle, Player::A)],
    }
}

/// Configuration where P1 waits for x_r to clear after a receive and P2 is
/// idle with empty buffers.
fn blocked_config(cg: &CompiledGame) -> Option<Configuration> {
    let l = &cg.pcs;
    let (ti, m) = l.transitions.iter().enumerate().find_map(|(i, t)| match t.op {
        ChanOp::Recv(m) => Some((i, m)),
        _ => None,
    })?;
    let mut c = cg.spec.initial.clone();
    with_state(cg, &mut c, P1, &format!("rw{ti}"));
    c.memory[cg.roles.x_r.index()] = cg.roles.msg_value[m.0 as usize];
    Some(c)
}

/// B tries to receive again before the rotation finished.
fn probe_blocked_receive(cg: &CompiledGame) -> ProbeResult {
    let name = "blocked-receive";
    let Some(c) = blocked_config(cg) else {
        return ProbeResult {
            name,
            pass: true,
            detail: "vacuous: no receive transition".into(),
            prefix: vec![],
        };
    };
    let p = cg.program();
    let p1_blocked = enabled_instrs(p, &c, P1).next().is_none();
    let bm = b_moves(cg, &c);
    let only_p3 = !bm.is_empty()
        && bm
            .iter()
            .all(|d| d.state(P3) == cg.markers.p3_intermediate && d.global[..2] == c.global[..2]);
    let a_wins = bm.iter().all(|d| {
        a_moves(cg, d)
            .into_iter()
            .filter(|e| e.state(P3) == cg.markers.p3_win_a)
            .any(|e| refusing_a_wins(cg, &e))
    });
    ProbeResult {
        name,
        pass: p1_blocked && only_p3 && a_wins,
        detail: format!("P1 blocked: {p1_blocked}; B forced into P3: {only_p3}; A safe without updates: {a_wins}"),
        prefix: vec![show(cg, &c, Player::B)],
    }
}

/// Solves the game from `c` (B to move) with neither player updating.
fn refusing_a_wins(cg: &CompiledGame, c: &Configuration) -> bool {
    let mut spec = cg.spec.clone();
    spec.policy_a = UpdatePolicy::Never;
    spec.initial = c.clone();
    spec.first_mover = Player::B;
    spec.buffer_bound = Some(buffer_size(c) + 2);
    match build_arena(&spec) {
        Ok(a) => solve(&a.game).winner_at(a.initial) == Player::A,
        Err(_) => false,
    }
}

/// A player stuck in P1 and P2 loses through P3.
fn probe_deadlocks(cg: &CompiledGame) -> ProbeResult {
    let name = "p3-deadlock";
    let Some(c) = blocked_config(cg) else {
        return ProbeResult {
            name,
            pass: true,
            detail: "vacuous: no receive transition".into(),
            prefix: vec![],
        };
    };
    let p = cg.program();
    let m = &cg.markers;
    // B stuck: A parks P3 in her winning state and the play never hits final
    let mut prefix = vec![show(cg, &c, Player::B)];
    let mut b_stuck_ok = false;
    if let Some(d) = b_moves(cg, &c).into_iter().next() {
        prefix.push(show(cg, &d, Player::A));
        if let Some(e) = a_moves(cg, &d).into_iter().find(|e| e.state(P3) == m.p3_win_a) {
            prefix.push(show(cg, &e, Player::B));
            let mut cur = e;
            let mut hit = false;
            for _ in 0..20 {
                let Some(n) = b_moves(cg, &cur).into_iter().next() else { break };
                if has_final_process(p, &n) {
                    hit = true;
                }
                let Some(n2) = moves(p, &n, UpdatePolicy::Never, None)
                    .into_iter()
                    .find(|x| x.state(P3) == m.p3_win_a && x.global[..2] == n.global[..2])
                else {
                    break;
                };
                cur = n2;
            }
            b_stuck_ok = !hit && refusing_a_wins(cg, &cur);
        }
    }
    // A stuck: every A move goes through P3 and B then reaches final
    let am = a_moves(cg, &c);
    let a_stuck_ok = !am.is_empty()
        && am.iter().all(|d| {
            d.state(P3) == m.p3_intermediate
                && final_reply(cg, d).is_some_and(|e| e.state(P3) == m.p3_win_b)
        });
    ProbeResult {
        name,
        pass: b_stuck_ok && a_stuck_ok,
        detail: format!("B stuck loses: {b_stuck_ok}; A stuck loses: {a_stuck_ok}"),
        prefix,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pcs::{parse_pcs, pcs_reach};
    use crate::program::parse_program;

    const SEND_RECV: &str = "pcs v1\nmessages a b\nstates q0 q1 q2\ninit q0\ntarget q2\nq0 -> q1 : ! a\nq1 -> q2 : ? a\nq1 -> q1 : ! b\n";

    #[test]
    fn nop_loop_compiles_to_skip_pair() {
        let l = parse_pcs("pcs v1\nmessages a\nstates q\ninit q\nq -> q : nop\n").unwrap();
        let cg = compile(&l, ChanStateId(0));
        let p = cg.program();
        let q = p.state_named(P1, "q_q").unwrap();
        let n = p.state_named(P1, "n0").unwrap();
        let t = &p.process(P1).transitions;
        assert!(t.iter().any(|e| e.from == q && e.to == n && e.instr == Instruction::Skip));
        assert!(t.iter().any(|e| e.from == n && e.to == q && e.instr == Instruction::Skip));
    }

    #[test]
    fn send_writes_message_then_y() {
        let l = parse_pcs("pcs v1\nmessages a\nstates q r\ninit q\nq -> r : ! a\n").unwrap();
        let cg = compile(&l, ChanStateId(1));
        let p = cg.program();
        let t = &p.process(P1).transitions;
        let a = p.value_named("m_a").unwrap();
        assert_eq!(t[0].instr, Instruction::Write(cg.roles.x_w, a));
        assert_eq!(t[1].from, t[0].to);
        assert_eq!(t[1].instr, Instruction::Write(cg.roles.y, cg.roles.one));
    }

    #[test]
    fn shape_of_compiled_program() {
        let l = parse_pcs(SEND_RECV).unwrap();
        let cg = compile(&l, ChanStateId(2));
        let p = cg.program();
        assert_eq!(p.num_processes(), 3);
        assert_eq!(p.vars, vec!["x_w", "x_r", "y"]);
        assert_eq!(p.domain.len(), l.messages.len() + 3);
        assert_eq!(cg.spec.policy_a, UpdatePolicy::Always);
        assert_eq!(cg.spec.policy_b, UpdatePolicy::Never);
        assert!(p.is_final_state(cg.markers.p3_win_b));
        assert!(p.is_final_state(cg.markers.b_win_catch));
        assert!(p.is_final_state(cg.roles.p1_state[2]));
        assert!(!p.is_final_state(cg.markers.p3_win_a));
        assert_eq!(parse_program(&p.to_text()).unwrap(), *p);
        assert!(cg.markers_text().contains("y_check P2 y1*"));
    }

    #[test]
    fn empty_run_reaches_final_after_one_move() {
        let l = parse_pcs(SEND_RECV).unwrap();
        let cg = compile(&l, ChanStateId(0));
        let cp = canonical_play(&cg, &[]).unwrap();
        assert_eq!(cp.play.verdict, Verdict::BReachedFinal(1));
    }

    #[test]
    fn send_receive_rotation_trace() {
        let l = parse_pcs(SEND_RECV).unwrap();
        let cg = compile(&l, ChanStateId(2));
        let run = pcs_reach(&l, &PcsConfig::initial(&l), ChanStateId(2), 4).unwrap();
        assert_eq!(run, vec![0, 1]);
        let cp = canonical_play(&cg, &run).unwrap();
        assert!(matches!(cp.play.verdict, Verdict::BReachedFinal(_)));
        assert_eq!(cp.x_r_trace, vec![MsgId(0)]);
        assert_eq!(cp.segment_lengths(), vec![2, 26]);
        // x_r goes a then back to bot
        let x_r = cg.roles.x_r;
        let vals: Vec<Value> = cp.play.prefix.iter().map(|(c, _)| c.memory[x_r.index()]).collect();
        let first_a = vals.iter().position(|v| *v != cg.roles.bot).unwrap();
        assert_eq!(*vals.last().unwrap(), cg.roles.bot);
        assert!(vals[first_a..].contains(&cg.roles.bot));
        for (_, e) in &cp.segments {
            assert_eq!(cp.play.prefix[*e].1, Player::B);
        }
    }

    #[test]
    fn invalid_run_is_reported() {
        let l = parse_pcs(SEND_RECV).unwrap();
        let cg = compile(&l, ChanStateId(2));
        assert_eq!(canonical_play(&cg, &[1]).unwrap_err(), HarnessError::InvalidRun(0));
    }

    #[test]
    fn probes_pass_on_send_receive() {
        let l = parse_pcs(SEND_RECV).unwrap();
        let cg = compile(&l, ChanStateId(2));
        let report = probe_gadgets(&cg);
        assert!(report.all_pass(), "{report}");
        assert_eq!(report.probes.len(), 4);
    }
}
