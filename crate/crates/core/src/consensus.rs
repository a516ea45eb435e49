//! Global agreement machine run across all strips of a row.
//!
//! Each strip carries a base-4 string after its `S` marker. One Outer Loop
//! compares every string against the first one digit by digit, marking the
//! digits it has checked, and lands on a verification tile whenever a digit
//! differs or one string is shorter or longer than the first. The cost of a
//! run is the number of steps whose head tile is a verification tile.
//!
//! Tile colours (the blue/red side markers of Layer-1 style head squares) are
//! not modelled; rows are plain configurations.

use crate::error::{Error, Result};
use crate::tm::{tm_step, Direction, Move, Step, TmConfiguration, TuringMachine};
use serde::{Deserialize, Serialize};

/// Tape alphabet; `#` is the blank and never appears inside a row.
pub const SYMBOLS: [&str; 16] = ["⊲", "⊳", "X", "0", "1", "2", "3", "0̄", "1̄", "2̄", "3̄", "B", "S", "T", "+", "#"];
pub const LEFT: usize = 0;
pub const RIGHT: usize = 1;
pub const X: usize = 2;
pub const B: usize = 11;
pub const S: usize = 12;
pub const T: usize = 13;
pub const PLUS: usize = 14;

/// Symbol id of digit `k`, marked or not.
pub fn digit(k: u8, marked: bool) -> usize {
    3 + k as usize + if marked { 4 } else { 0 }
}

/// `(digit, marked)` for digit symbols.
pub fn as_digit(sym: usize) -> Option<(u8, bool)> {
    match sym {
        3..=6 => Some(((sym - 3) as u8, false)),
        7..=10 => Some(((sym - 7) as u8, true)),
        _ => None,
    }
}

const FILLERS: [usize; 4] = [B, X, PLUS, T];

/// State names in id order.
pub fn state_names() -> Vec<String> {
    let mut v = vec!["findS".to_string(), "read".to_string()];
    for j in 0..4 {
        v.push(format!("q1_{j}"));
    }
    for j in 0..4 {
        v.push(format!("q2_{j}"));
    }
    v.extend(["ret", "sweep", "clear"].map(String::from));
    v
}

pub const FIND_S: usize = 0;
pub const READ: usize = 1;
pub fn q1(j: u8) -> usize {
    2 + j as usize
}
pub fn q2(j: u8) -> usize {
    6 + j as usize
}
pub const RET: usize = 10;
pub const SWEEP: usize = 11;
pub const CLEAR: usize = 12;

/// The consensus machine. Where the rule table and the Outer Loop
/// pseudo-code disagree, the pseudo-code is followed: `q2_j` on `⊳` moves
/// left into `ret`, `ret` and `clear` hand over to `findS` at `⊲`.
pub fn consensus_machine() -> TuringMachine {
    let names = state_names();
    let mut tm = TuringMachine::new(&names, &SYMBOLS, "#", Direction::Up).expect("static alphabet");
    let mut set = |q: usize, s: usize, next: usize, write: usize, mv: Move| {
        tm.set_rule(q, s, Some(crate::tm::Rule { next, write, mv }));
    };
    let digits: Vec<(u8, usize, usize)> = (0..4u8).map(|k| (k, digit(k, false), digit(k, true))).collect();
    let all: Vec<usize> = (0..15).collect();

    for &s in &all {
        set(FIND_S, s, FIND_S, s, Move::R);
        set(RET, s, RET, s, Move::L);
        set(SWEEP, s, SWEEP, s, Move::R);
        set(CLEAR, s, CLEAR, s, Move::L);
        set(READ, s, READ, s, Move::R);
        for j in 0..4 {
            set(q1(j), s, q1(j), s, Move::R);
            set(q2(j), s, q2(j), s, Move::R);
        }
    }
    set(FIND_S, S, READ, S, Move::R);
    set(FIND_S, RIGHT, CLEAR, RIGHT, Move::L);

    for &(k, u, _) in &digits {
        set(READ, u, q1(k), digit(k, true), Move::R);
    }
    for &c in FILLERS.iter().chain([S].iter()) {
        set(READ, c, SWEEP, c, Move::R);
    }
    set(READ, RIGHT, CLEAR, RIGHT, Move::L);

    for j in 0..4 {
        set(q1(j), S, q2(j), S, Move::R);
        set(q1(j), RIGHT, RET, RIGHT, Move::L);
        for &(k, u, _) in &digits {
            set(q2(j), u, q1(j), digit(k, true), Move::R);
        }
        for &c in &FILLERS {
            set(q2(j), c, q1(j), c, Move::R);
        }
        set(q2(j), RIGHT, RET, RIGHT, Move::L);
    }
    set(RET, LEFT, FIND_S, LEFT, Move::R);
    set(SWEEP, RIGHT, CLEAR, RIGHT, Move::L);
    for &(k, _, m) in &digits {
        set(CLEAR, m, CLEAR, digit(k, false), Move::L);
    }
    set(CLEAR, LEFT, FIND_S, LEFT, Move::R);
    tm
}

/// Head tiles that carry a verification cost: `q2_j` over a different
/// unmarked digit or over any non-digit other than `⊲`, and `sweep` over an
/// unmarked digit.
pub fn is_verification_tile(state: usize, sym: usize) -> bool {
    if (q2(0)..=q2(3)).contains(&state) {
        let j = (state - q2(0)) as u8;
        return match as_digit(sym) {
            Some((k, false)) => k != j,
            Some((_, true)) => false,
            None => matches!(sym, B | S | T | PLUS | X | RIGHT),
        };
    }
    state == SWEEP && matches!(as_digit(sym), Some((_, false)))
}

/// A base-4 string with optional check marks.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Digit4String {
    pub digits: Vec<u8>,
    pub marked: Vec<bool>,
}

impl Digit4String {
    pub fn new(digits: Vec<u8>) -> Result<Self> {
        if let Some(d) = digits.iter().find(|&&d| d > 3) {
            return Err(Error::Precondition(format!("digit {d} outside 0..=3")));
        }
        let marked = vec![false; digits.len()];
        Ok(Digit4String { digits, marked })
    }

    pub fn parse(s: &str) -> Result<Self> {
        let digits = s
            .chars()
            .map(|c| c.to_digit(4).map(|d| d as u8).ok_or_else(|| Error::Parse(format!("not a base-4 digit: {c}"))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(digits)
    }

    /// Digit `i` is `2 x_i + z_i`.
    pub fn from_bits(x: &[bool], z: &[bool]) -> Result<Self> {
        if x.len() != z.len() {
            return Err(Error::Precondition(format!("bit strings of lengths {} and {}", x.len(), z.len())));
        }
        Self::new(x.iter().zip(z).map(|(&a, &b)| 2 * a as u8 + b as u8).collect())
    }

    /// First-bit projection: 1 exactly for digits 2 and 3.
    pub fn f1(&self) -> Vec<bool> {
        self.digits.iter().map(|&d| d >= 2).collect()
    }

    /// Second-bit projection: 1 exactly for odd digits.
    pub fn f2(&self) -> Vec<bool> {
        self.digits.iter().map(|&d| d % 2 == 1).collect()
    }

    /// Digits with marks dropped.
    pub fn val(&self) -> Vec<u8> {
        self.digits.clone()
    }

    pub fn symbols(&self) -> Vec<usize> {
        self.digits.iter().zip(&self.marked).map(|(&d, &m)| digit(d, m)).collect()
    }
}

impl std::fmt::Display for Digit4String {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (&d, &m) in self.digits.iter().zip(&self.marked) {
            write!(f, "{}", SYMBOLS[digit(d, m)])?;
        }
        Ok(())
    }
}

/// Start-of-loop configuration for strips carrying `ys`: each strip is
/// `S y B T` and strips are separated by `X`, framed by `⊲ … ⊳`. The head is
/// in `clear` one cell left of `⊳`.
pub fn consensus_row(ys: &[Digit4String]) -> TmConfiguration {
    let mut tape = vec![LEFT];
    for (i, y) in ys.iter().enumerate() {
        if i > 0 {
            tape.push(X);
        }
        tape.push(S);
        tape.extend(y.symbols());
        tape.extend([B, T]);
    }
    tape.push(RIGHT);
    let head = tape.len() - 2;
    TmConfiguration { tape, head, state: CLEAR }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OuterLoopRun {
    pub steps: usize,
    /// Step indices (0 = start row) whose head tile is a verification tile.
    pub cost_steps: Vec<usize>,
    pub completed: bool,
}

impl OuterLoopRun {
    pub fn cost(&self) -> usize {
        self.cost_steps.len()
    }
}

/// Runs from `start` through the first sweep-left pass and one complete
/// Outer Loop, stopping when the head next enters `clear` at `⊳`.
pub fn outer_loop(tm: &TuringMachine, start: &TmConfiguration, max_steps: usize) -> OuterLoopRun {
    let mut cfg = start.clone();
    let mut cost_steps = Vec::new();
    let mut left_start = false;
    for step in 0..max_steps {
        let sym = cfg.tape[cfg.head];
        if is_verification_tile(cfg.state, sym) {
            cost_steps.push(step);
        }
        if cfg.state == FIND_S {
            left_start = true;
        }
        match tm_step(tm, &cfg) {
            Step::Halt => return OuterLoopRun { steps: step, cost_steps, completed: false },
            Step::Moved(next) => {
                let back = left_start && next.state == CLEAR && cfg.state != CLEAR;
                cfg = next;
                if back {
                    return OuterLoopRun { steps: step + 1, cost_steps, completed: true };
                }
            }
        }
    }
    OuterLoopRun { steps: max_steps, cost_steps, completed: false }
}

/// Verification cost of one Outer Loop over strips carrying `ys`.
pub fn consensus_cost(ys: &[Digit4String]) -> OuterLoopRun {
    let tm = consensus_machine();
    let row = consensus_row(ys);
    let len: usize = row.tape.len();
    let digits: usize = ys.iter().map(|y| y.digits.len()).max().unwrap_or(0);
    outer_loop(&tm, &row, 4 * len * (digits + 2) + 16)
}
