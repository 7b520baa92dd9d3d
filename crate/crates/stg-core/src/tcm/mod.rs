//! Two-counter machine programs and their compilation into the
//! undecidability constructions, with closed-form gadget laws for empirical
//! verification.

pub mod laws;
pub mod machine;
pub mod onehalf;
pub mod timebounded;

pub use machine::{parse_tcm, run_tcm, Config, Counter, Instr, MachineRun, TcmError, TwoCounterMachine};
