//! Two-counter (Minsky) machine programs: parsing and deterministic
//! interpretation.

use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Counter {
    C1,
    C2,
}

impl fmt::Display for Counter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Counter::C1 => write!(f, "c1"),
            Counter::C2 => write!(f, "c2"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Instr {
    Inc { counter: Counter, next: usize },
    Dec { counter: Counter, next: usize },
    /// if counter == 0 goto `if_zero` else goto `if_pos`
    Jz { counter: Counter, if_zero: usize, if_pos: usize },
    Halt,
}

#[derive(Debug, Clone)]
pub struct TwoCounterMachine {
    pub labels: Vec<String>,
    pub instrs: Vec<Instr>,
}

#[derive(Debug, Error)]
pub enum TcmError {
    #[error("line {0}: syntax error: {1}")]
    Syntax(usize, String),
    #[error("line {0}: unknown counter `{1}` (expected c1 or c2)")]
    UnknownCounter(usize, String),
    #[error("undefined label `{0}`")]
    UndefinedLabel(String),
    #[error("duplicate label `{0}`")]
    DuplicateLabel(String),
    #[error("program must contain exactly one halt instruction, found {0}")]
    HaltCount(usize),
    #[error("decrement of zero counter {counter} at step {step} (label `{label}`)")]
    DecrementZero { counter: Counter, step: usize, label: String },
    #[error("program is empty")]
    Empty,
}

/// Grammar (one instruction per line, `#` comments):
///   LABEL: inc (c1|c2) goto LABEL
///   LABEL: dec (c1|c2) goto LABEL
///   LABEL: jz (c1|c2) LABEL LABEL
///   LABEL: halt
pub fn parse_tcm(text: &str) -> Result<TwoCounterMachine, TcmError> {
    struct Raw<'a> {
        line: usize,
        label: &'a str,
        body: Vec<&'a str>,
    }
    let mut raws = vec![];
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let stripped = line.split('#').next().unwrap_or("").trim();
        if stripped.is_empty() {
            continue;
        }
        let (label, rest) = stripped
            .split_once(':')
            .ok_or_else(|| TcmError::Syntax(line_no, "missing `LABEL:`".into()))?;
        let label = label.trim();
        if label.is_empty() {
            return Err(TcmError::Syntax(line_no, "empty label".into()));
        }
        raws.push(Raw { line: line_no, label, body: rest.split_whitespace().collect() });
    }
    if raws.is_empty() {
        return Err(TcmError::Empty);
    }
    let labels: Vec<String> = raws.iter().map(|r| r.label.to_string()).collect();
    for (i, l) in labels.iter().enumerate() {
        if labels[..i].contains(l) {
            return Err(TcmError::DuplicateLabel(l.clone()));
        }
    }
    let resolve = |name: &str| -> Result<usize, TcmError> {
        labels
            .iter()
            .position(|l| l == name)
            .ok_or_else(|| TcmError::UndefinedLabel(name.to_string()))
    };
    let counter = |line: usize, name: &str| -> Result<Counter, TcmError> {
        match name {
            "c1" => Ok(Counter::C1),
            "c2" => Ok(Counter::C2),
            other => Err(TcmError::UnknownCounter(line, other.to_string())),
        }
    };
    let mut instrs = vec![];
    for r in &raws {
        let instr = match r.body.as_slice() {
            ["inc", c, "goto", l] => Instr::Inc { counter: counter(r.line, c)?, next: resolve(l)? },
            ["dec", c, "goto", l] => Instr::Dec { counter: counter(r.line, c)?, next: resolve(l)? },
            ["jz", c, l1, l2] => Instr::Jz {
                counter: counter(r.line, c)?,
                if_zero: resolve(l1)?,
                if_pos: resolve(l2)?,
            },
            ["halt"] => Instr::Halt,
            other => {
                return Err(TcmError::Syntax(r.line, format!("unrecognized instruction {other:?}")))
            }
        };
        instrs.push(instr);
    }
    let halts = instrs.iter().filter(|i| matches!(i, Instr::Halt)).count();
    if halts != 1 {
        return Err(TcmError::HaltCount(halts));
    }
    Ok(TwoCounterMachine { labels, instrs })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Config {
    pub pc: usize,
    pub c1: u64,
    pub c2: u64,
}

impl Config {
    pub fn counter(&self, c: Counter) -> u64 {
        match c {
            Counter::C1 => self.c1,
            Counter::C2 => self.c2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MachineRun {
    pub configurations: Vec<Config>,
    pub halted: bool,
}

/// Deterministic trace from (l0, 0, 0), truncated at `max_steps` if the
/// machine has not halted by then.
pub fn run_tcm(m: &TwoCounterMachine, max_steps: usize) -> Result<MachineRun, TcmError> {
    let mut cfg = Config { pc: 0, c1: 0, c2: 0 };
    let mut configurations = vec![cfg];
    for step in 0..max_steps {
        match &m.instrs[cfg.pc] {
            Instr::Halt => return Ok(MachineRun { configurations, halted: true }),
            Instr::Inc { counter, next } => {
                match counter {
                    Counter::C1 => cfg.c1 += 1,
                    Counter::C2 => cfg.c2 += 1,
                }
                cfg.pc = *next;
            }
            Instr::Dec { counter, next } => {
                let v = match counter {
                    Counter::C1 => &mut cfg.c1,
                    Counter::C2 => &mut cfg.c2,
                };
                if *v == 0 {
                    return Err(TcmError::DecrementZero {
                        counter: *counter,
                        step,
                        label: m.labels[cfg.pc].clone(),
                    });
                }
                *v -= 1;
                cfg.pc = *next;
            }
            Instr::Jz { counter, if_zero, if_pos } => {
                cfg.pc = if cfg.counter(*counter) == 0 { *if_zero } else { *if_pos };
            }
        }
        configurations.push(cfg);
    }
    let halted = matches!(m.instrs[cfg.pc], Instr::Halt);
    Ok(MachineRun { configurations, halted })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_inc_halt() {
        let m = parse_tcm("l0: inc c1 goto l1\nl1: halt").unwrap();
        assert_eq!(m.instrs.len(), 2);
        let run = run_tcm(&m, 100).unwrap();
        assert!(run.halted);
        assert_eq!(run.configurations.last().unwrap().c1, 1);
    }

    #[test]
    fn parse_jz() {
        let m = parse_tcm("l0: jz c1 l1 l0\nl1: halt").unwrap();
        let run = run_tcm(&m, 100).unwrap();
        assert!(run.halted);
        assert_eq!(run.configurations.len(), 2);
    }

    #[test]
    fn unknown_counter_rejected() {
        let err = parse_tcm("l0: inc c3 goto l1\nl1: halt");
        assert!(matches!(err, Err(TcmError::UnknownCounter(1, _))));
    }

    #[test]
    fn nonhalting_truncated() {
        let m = parse_tcm("l0: inc c1 goto l0\nl1: halt").unwrap();
        let run = run_tcm(&m, 50).unwrap();
        assert!(!run.halted);
        assert_eq!(run.configurations.len(), 51);
    }

    #[test]
    fn decrement_zero_is_error() {
        let m = parse_tcm("l0: dec c1 goto l1\nl1: halt").unwrap();
        assert!(matches!(run_tcm(&m, 10), Err(TcmError::DecrementZero { .. })));
    }

    #[test]
    fn comments_and_blank_lines() {
        let m = parse_tcm("# a comment\n\nl0: inc c2 goto l1  # trailing\nl1: halt").unwrap();
        assert_eq!(m.labels, vec!["l0", "l1"]);
    }
}
