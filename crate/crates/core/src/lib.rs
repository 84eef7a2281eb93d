//! Two-player safety games over programs running under TSO store buffers.

pub mod arena;
pub mod game;
pub mod par;
pub mod program;
pub mod tso;
pub mod reductions;
pub mod pcs;
pub mod compiler;
pub mod cli;
