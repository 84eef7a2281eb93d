//! Command-line front end. [`run`] returns the exit status and the report so
//! the binary stays a thin wrapper and tests can drive it in-process.
//!
//! Exit codes: 0 success, 1 failed property or unexpected winner, 2 usage or
//! parse error, 3 undecidable variant without a bound.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::arena::{build_arena, classify, DeadlockConvention, GameSpec, NodeKey, UpdatePolicy};
use crate::compiler::{compile, probe_gadgets};
use crate::game::{play, solve, NodeId, Player, PositionalStrategy, SafetyGame, Verdict};
use crate::pcs::{parse_pcs, ChanStateId, Pcs};
use crate::program::{parse_program, Program};
use crate::reductions::{
    build_view_game, compare_with_bounded, exact_bound, solve_tso, ReductionError, SolvedArena,
};

#[derive(Parser, Debug)]
#[command(name = "tsogame", about = "Safety games over programs under TSO store buffers")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Debug, Clone)]
struct GameArgs {
    /// Update policy of player A.
    #[arg(long = "a", default_value = "never")]
    a: UpdatePolicy,
    /// Update policy of player B.
    #[arg(long = "b", default_value = "never")]
    b: UpdatePolicy,
    /// Player making the first move.
    #[arg(long, default_value = "B")]
    first: Player,
    /// Maximum number of buffered messages in explored configurations.
    #[arg(long)]
    bound: Option<usize>,
    #[arg(long, default_value = "loses")]
    deadlock: DeadlockConvention,
    /// Explore sequentially even when the parallel feature is enabled.
    #[arg(long)]
    sequential: bool,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Parse and validate a program.
    Check { program: PathBuf },
    /// Print the group of a policy pair.
    Classify {
        #[arg(long = "a")]
        a: UpdatePolicy,
        #[arg(long = "b")]
        b: UpdatePolicy,
    },
    /// Decide the game through the reduction matching its group.
    Solve {
        program: PathBuf,
        #[command(flatten)]
        game: GameArgs,
        /// Exit 1 unless this player wins.
        #[arg(long)]
        expect: Option<Player>,
        /// Print a play of both extracted strategies of at most this length.
        #[arg(long)]
        horizon: Option<usize>,
        /// Write the solved arena (dump, plus `.index` and strategy files).
        #[arg(long)]
        emit: Option<PathBuf>,
    },
    /// Build the bounded full arena.
    EmitArena {
        program: PathBuf,
        #[command(flatten)]
        game: GameArgs,
        #[arg(long)]
        emit: Option<PathBuf>,
    },
    /// Build the view game (both players never update).
    ViewGame {
        program: PathBuf,
        #[arg(long, default_value = "B")]
        first: Player,
        #[arg(long, default_value = "loses")]
        deadlock: DeadlockConvention,
        #[arg(long)]
        emit: Option<PathBuf>,
    },
    /// Replay positional strategies on the solved arena.
    Play {
        program: PathBuf,
        #[command(flatten)]
        game: GameArgs,
        /// Strategy file for A; the extracted strategy when absent.
        #[arg(long)]
        strategy_a: Option<PathBuf>,
        #[arg(long)]
        strategy_b: Option<PathBuf>,
        #[arg(long, default_value_t = 100)]
        horizon: usize,
        #[arg(long)]
        expect: Option<Player>,
    },
    /// Compile a channel system into an A-TSO game.
    CompilePcs {
        pcs: PathBuf,
        /// Target state; defaults to the `target` line of the input.
        #[arg(long)]
        target: Option<String>,
        /// Program output path; the markers go to `<path>.markers`.
        #[arg(long)]
        emit: Option<PathBuf>,
    },
    /// Run the gadget probes on a compiled channel system.
    Probe {
        pcs: PathBuf,
        #[arg(long)]
        target: Option<String>,
    },
    /// Compare the reduction against bounded full arenas.
    Compare {
        program: PathBuf,
        #[command(flatten)]
        game: GameArgs,
        /// Bounds to check; defaults to the exact bound of a write-acyclic
        /// program, else 2 3 4.
        #[arg(long = "k")]
        ks: Vec<usize>,
    },
}

struct Failure {
    code: i32,
    msg: String,
}

impl Failure {
    fn usage(msg: impl Into<String>) -> Self {
        Failure { code: 2, msg: msg.into() }
    }
}

impl From<ReductionError> for Failure {
    fn from(e: ReductionError) -> Self {
        let code = match e {
            ReductionError::UndecidableVariant { .. } => 3,
            _ => 2,
        };
        Failure { code, msg: e.to_string() }
    }
}

type Out = Result<(i32, String), Failure>;

/// Runs one invocation; `argv[0]` is the program name.
pub fn run<I, T>(argv: I) -> (i32, String)
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            return (code, e.to_string());
        }
    };
    match dispatch(cli.cmd) {
        Ok(r) => r,
        Err(f) => (f.code, format!("error: {}\n", f.msg)),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn load_program(path: &Path) -> Result<Program, Failure> {
    parse_program(&read(path)?).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn load_pcs(path: &Path, target: Option<&str>) -> Result<(Pcs, ChanStateId), Failure> {
    let l = parse_pcs(&read(path)?).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
    l.validate().map_err(Failure::usage)?;
    let t = match target {
        Some(name) => l
            .state_named(name)
            .ok_or_else(|| Failure::usage(format!("unknown target state `{name}`")))?,
        None => l
            .target
            .ok_or_else(|| Failure::usage("no target: pass --target or add a `target` line"))?,
    };
    Ok((l, t))
}

fn spec_of(program: Program, g: &GameArgs) -> GameSpec {
    let mut spec = GameSpec::new(program, g.a, g.b);
    spec.first_mover = g.first;
    spec.deadlock = g.deadlock;
    spec.buffer_bound = g.bound;
    if g.sequential {
        spec.parallel = false;
    }
    spec
}

fn trailer(out: &mut String, winner: Player, method: &str, g: &SafetyGame) {
    let _ = writeln!(
        out,
        "RESULT winner={winner} method={method} nodes={} edges={}",
        g.num_nodes(),
        g.num_edges()
    );
}

fn expect_code(expect: Option<Player>, winner: Player, out: &mut String) -> i32 {
    match expect {
        Some(e) if e != winner => {
            let _ = writeln!(out, "expected winner {e}, got {winner}");
            1
        }
        _ => 0,
    }
}

fn dispatch(cmd: Cmd) -> Out {
    let mut out = String::new();
    match cmd {
        Cmd::Check { program } => {
            let p = load_program(&program)?;
            let n_states: usize = p.processes.iter().map(|q| q.states.len()).sum();
            let n_edges: usize = p.processes.iter().map(|q| q.transitions.len()).sum();
            let _ = writeln!(
                out,
                "ok: {} processes, {n_states} states, {n_edges} transitions, {} variables, domain of {}",
                p.num_processes(),
                p.vars.len(),
                p.domain.len()
            );
            match p.write_path_bound() {
                Some(w) => {
                    let _ = writeln!(out, "write-acyclic, longest write path {w}");
                }
                None => out.push_str("has a write on a cycle\n"),
            }
            Ok((0, out))
        }
        Cmd::Classify { a, b } => {
            let _ = writeln!(out, "{}", classify(a, b));
            Ok((0, out))
        }
        Cmd::Solve {
            program,
            game,
            expect,
            horizon,
            emit,
        } => {
            let spec = spec_of(load_program(&program)?, &game);
            let sol = solve_tso(&spec)?;
            let g = sol.arena.game();
            let _ = writeln!(out, "group {}", spec.group());
            let _ = writeln!(out, "winner {}", sol.winner);
            let _ = writeln!(out, "method {}", sol.method);
            let _ = writeln!(
                out,
                "regions win_A={} win_B={}",
                sol.regions.win_a().len(),
                sol.regions.win_b().len()
            );
            if let Some(h) = horizon {
                let pl = play(g, &sol.strategy_a, &sol.strategy_b, sol.arena.initial(), h)
                    .map_err(|e| Failure::usage(e.to_string()))?;
                write_play(&mut out, &sol.arena, &spec.program, &pl.prefix, pl.verdict);
            }
            if let Some(path) = emit {
                write(&path, &g.dump())?;
                write(&with_suffix(&path, ".index"), &sol.arena.index_text(&spec.program))?;
                write(&with_suffix(&path, ".strategy-a"), &sol.strategy_a.to_text())?;
                write(&with_suffix(&path, ".strategy-b"), &sol.strategy_b.to_text())?;
            }
            let code = expect_code(expect, sol.winner, &mut out);
            trailer(&mut out, sol.winner, &sol.method.to_string(), g);
            Ok((code, out))
        }
        Cmd::EmitArena { program, game, emit } => {
            let spec = spec_of(load_program(&program)?, &game);
            let arena = build_arena(&spec).map_err(|e| Failure::usage(e.to_string()))?;
            let winner = solve(&arena.game).winner_at(arena.initial);
            if let Some(path) = emit {
                write(&path, &arena.game.dump())?;
                write(&with_suffix(&path, ".index"), &arena.config_index(&spec.program))?;
            }
            trailer(&mut out, winner, "BoundedArena", &arena.game);
            Ok((0, out))
        }
        Cmd::ViewGame {
            program,
            first,
            deadlock,
            emit,
        } => {
            let mut spec = GameSpec::new(load_program(&program)?, UpdatePolicy::Never, UpdatePolicy::Never);
            spec.first_mover = first;
            spec.deadlock = deadlock;
            let arena = build_view_game(&spec)?;
            let winner = solve(&arena.game).winner_at(arena.initial);
            if let Some(path) = emit {
                let p = &spec.program;
                write(&path, &arena.game.dump())?;
                write(&with_suffix(&path, ".index"), &arena.index_text(|v| v.display(p).to_string()))?;
            }
            trailer(&mut out, winner, "GroupIV", &arena.game);
            Ok((0, out))
        }
        Cmd::Play {
            program,
            game,
            strategy_a,
            strategy_b,
            horizon,
            expect,
        } => {
            let spec = spec_of(load_program(&program)?, &game);
            let sol = solve_tso(&spec)?;
            let g = sol.arena.game();
            let load = |path: Option<PathBuf>, fallback: &PositionalStrategy| match path {
                None => Ok(fallback.clone()),
                Some(p) => PositionalStrategy::parse(&read(&p)?, g)
                    .map_err(|e| Failure::usage(format!("{}: {e}", p.display()))),
            };
            let sa = load(strategy_a, &sol.strategy_a)?;
            let sb = load(strategy_b, &sol.strategy_b)?;
            if sa.player != Player::A || sb.player != Player::B {
                return Err(Failure::usage("strategy files are for the wrong players"));
            }
            let pl = play(g, &sa, &sb, sol.arena.initial(), horizon)
                .map_err(|e| Failure::usage(e.to_string()))?;
            write_play(&mut out, &sol.arena, &spec.program, &pl.prefix, pl.verdict);
            let winner = match pl.verdict {
                Verdict::BReachedFinal(_) => Player::B,
                Verdict::ASurvivedHorizon => Player::A,
            };
            let code = expect_code(expect, winner, &mut out);
            trailer(&mut out, winner, &sol.method.to_string(), g);
            Ok((code, out))
        }
        Cmd::CompilePcs { pcs, target, emit } => {
            let (l, t) = load_pcs(&pcs, target.as_deref())?;
            let cg = compile(&l, t);
            let text = cg.program().to_text();
            match emit {
                Some(path) => {
                    write(&path, &text)?;
                    write(&with_suffix(&path, ".markers"), &cg.markers_text())?;
                    let _ = writeln!(
                        out,
                        "compiled {} PCS transitions into {} program states",
                        l.transitions.len(),
                        cg.program().states.len()
                    );
                }
                None => {
                    out.push_str(&text);
                    out.push_str(&cg.markers_text());
                }
            }
            Ok((0, out))
        }
        Cmd::Probe { pcs, target } => {
            let (l, t) = load_pcs(&pcs, target.as_deref())?;
            let report = probe_gadgets(&compile(&l, t));
            let _ = write!(out, "{report}");
            Ok((if report.all_pass() { 0 } else { 1 }, out))
        }
        Cmd::Compare { program, game, ks } => {
            let spec = spec_of(load_program(&program)?, &game);
            let ks = if ks.is_empty() {
                match exact_bound(&spec) {
                    Some(k) => vec![k],
                    None => vec![2, 3, 4],
                }
            } else {
                ks
            };
            let c = compare_with_bounded(&spec, &ks)?;
            let _ = writeln!(out, "reduced winner {} via {}", c.reduced, c.method);
            for (k, w) in &c.bounded {
                let verdict = if *w == c.reduced { "PASS" } else { "FAIL" };
                let _ = writeln!(out, "{verdict} k={k} bounded winner {w}");
            }
            Ok((if c.agrees() { 0 } else { 1 }, out))
        }
    }
}

fn describe<K>(key: &NodeKey<K>, show: impl Fn(&K) -> String) -> String {
    match key {
        NodeKey::Real(k, _) => show(k),
        NodeKey::Sink(s) => format!("sink:{s:?}"),
    }
}

fn write_play(out: &mut String, arena: &SolvedArena, p: &Program, prefix: &[NodeId], v: Verdict) {
    let g = arena.game();
    for (i, n) in prefix.iter().enumerate() {
        let desc = match arena {
            SolvedArena::Configurations(a) => describe(&a.keys[n.index()], |c| c.display(p).to_string()),
            SolvedArena::Views(a) => describe(&a.keys[n.index()], |w| w.display(p).to_string()),
        };
        let _ = writeln!(out, "  {i:>3} {n} {} {desc}", g.owner(*n));
    }
    match v {
        Verdict::BReachedFinal(i) => {
            let _ = writeln!(out, "play: B reached a final node at step {i}");
        }
        Verdict::ASurvivedHorizon => {
            let _ = writeln!(out, "play: A survived {} moves", prefix.len() - 1);
        }
    }
}
