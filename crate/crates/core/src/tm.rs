//! Single-tape Turing machines and their computation squares.
//!
//! A configuration is drawn as a row of tiles: tape tiles carry a symbol and
//! the head tile carries a state and the symbol under the head. Consecutive
//! rows are consistent with one machine step exactly when every 2x2 square
//! spanning them is legal. [`compile_tm_to_squares`] emits the legal squares
//! and [`square_legal`] decides membership without building the set.
//!
//! Legality of a square in which a head appears without a head below it
//! depends on the move that brought the head there. Machines are therefore
//! normalized first so that each state is entered by a single move direction.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap, HashSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Move {
    L,
    R,
    S,
}

impl Move {
    pub fn delta(self) -> isize {
        match self {
            Move::L => -1,
            Move::R => 1,
            Move::S => 0,
        }
    }

    fn suffix(self) -> &'static str {
        match self {
            Move::L => "L",
            Move::R => "R",
            Move::S => "S",
        }
    }
}

/// Whether successive configurations are drawn upward or downward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Up,
    Down,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Rule {
    pub next: usize,
    pub write: usize,
    pub mv: Move,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TuringMachine {
    pub states: Vec<String>,
    pub alphabet: Vec<String>,
    pub blank: usize,
    pub direction: Direction,
    rules: Vec<Option<Rule>>,
    pub weights: BTreeMap<String, u8>,
}

impl TuringMachine {
    pub fn new<S: AsRef<str>, T: AsRef<str>>(
        states: &[S],
        alphabet: &[T],
        blank: &str,
        direction: Direction,
    ) -> Result<Self> {
        let states: Vec<String> = states.iter().map(|s| s.as_ref().to_string()).collect();
        let alphabet: Vec<String> = alphabet.iter().map(|s| s.as_ref().to_string()).collect();
        let blank = alphabet
            .iter()
            .position(|a| a == blank)
            .ok_or_else(|| Error::UnknownSymbol(blank.to_string()))?;
        let n = states.len() * alphabet.len();
        Ok(TuringMachine { states, alphabet, blank, direction, rules: vec![None; n], weights: BTreeMap::new() })
    }

    pub fn state(&self, name: &str) -> Result<usize> {
        self.states.iter().position(|s| s == name).ok_or_else(|| Error::UnknownState(name.to_string()))
    }

    pub fn symbol(&self, name: &str) -> Result<usize> {
        self.alphabet.iter().position(|s| s == name).ok_or_else(|| Error::UnknownSymbol(name.to_string()))
    }

    pub fn rule(&self, q: usize, s: usize) -> Option<Rule> {
        self.rules[q * self.alphabet.len() + s]
    }

    pub fn set_rule(&mut self, q: usize, s: usize, r: Option<Rule>) {
        let k = self.alphabet.len();
        self.rules[q * k + s] = r;
    }

    /// Adds `delta(state, read) = (next, write, mv)` by names.
    pub fn add(&mut self, state: &str, read: &str, next: &str, write: &str, mv: Move) -> Result<()> {
        let (q, s) = (self.state(state)?, self.symbol(read)?);
        let r = Rule { next: self.state(next)?, write: self.symbol(write)?, mv };
        self.set_rule(q, s, Some(r));
        Ok(())
    }

    /// All defined rules as `(state, read, rule)`.
    pub fn rules(&self) -> impl Iterator<Item = (usize, usize, Rule)> + '_ {
        let k = self.alphabet.len();
        self.rules.iter().enumerate().filter_map(move |(i, r)| r.map(|r| (i / k, i % k, r)))
    }

    /// Move directions by which each state is entered.
    pub fn arrivals(&self) -> Vec<Vec<Move>> {
        let mut a: Vec<Vec<Move>> = vec![Vec::new(); self.states.len()];
        for (_, _, r) in self.rules() {
            if !a[r.next].contains(&r.mv) {
                a[r.next].push(r.mv);
            }
        }
        for v in &mut a {
            v.sort();
        }
        a
    }

    pub fn is_normalized(&self) -> bool {
        self.arrivals().iter().all(|a| a.len() <= 1)
    }

    /// Unique arrival direction per state, or an error naming the first
    /// state entered from several directions.
    pub fn arrival_map(&self) -> Result<Vec<Option<Move>>> {
        self.arrivals()
            .into_iter()
            .enumerate()
            .map(|(q, a)| match a.len() {
                0 => Ok(None),
                1 => Ok(Some(a[0])),
                _ => Err(Error::NotNormalized(self.states[q].clone())),
            })
            .collect()
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let f: TmFile = serde_json::from_str(s)?;
        Self::from_file(&f)
    }

    pub fn from_file(f: &TmFile) -> Result<Self> {
        let mut tm = TuringMachine::new(&f.states, &f.alphabet, &f.blank, f.direction)?;
        for r in &f.rules {
            tm.add(&r.state, &r.read, &r.next, &r.write, r.mv)?;
        }
        tm.weights = f.weights.clone();
        Ok(tm)
    }

    pub fn to_file(&self) -> TmFile {
        TmFile {
            states: self.states.clone(),
            alphabet: self.alphabet.clone(),
            blank: self.alphabet[self.blank].clone(),
            direction: self.direction,
            rules: self
                .rules()
                .map(|(q, s, r)| RuleEntry {
                    state: self.states[q].clone(),
                    read: self.alphabet[s].clone(),
                    write: self.alphabet[r.write].clone(),
                    next: self.states[r.next].clone(),
                    mv: r.mv,
                })
                .collect(),
            weights: self.weights.clone(),
        }
    }
}

/// On-disk machine format.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TmFile {
    pub states: Vec<String>,
    pub alphabet: Vec<String>,
    pub blank: String,
    pub direction: Direction,
    pub rules: Vec<RuleEntry>,
    #[serde(default)]
    pub weights: BTreeMap<String, u8>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RuleEntry {
    pub state: String,
    pub read: String,
    pub write: String,
    pub next: String,
    #[serde(rename = "move")]
    pub mv: Move,
}

/// Splits every state entered from more than one direction into one copy
/// per direction. Returns the machine and, for each new state, the index of
/// the state it copies.
pub fn normalize_with_origin(tm: &TuringMachine) -> (TuringMachine, Vec<usize>) {
    let arr = tm.arrivals();
    if arr.iter().all(|a| a.len() <= 1) {
        return (tm.clone(), (0..tm.states.len()).collect());
    }
    let mut names = Vec::new();
    let mut origin = Vec::new();
    // copy index of (old state, arrival move)
    let mut copy: HashMap<(usize, Move), usize> = HashMap::new();
    for (q, a) in arr.iter().enumerate() {
        if a.len() <= 1 {
            if let Some(&m) = a.first() {
                copy.insert((q, m), names.len());
            }
            names.push(tm.states[q].clone());
            origin.push(q);
        } else {
            for &m in a {
                copy.insert((q, m), names.len());
                names.push(format!("{}_{}", tm.states[q], m.suffix()));
                origin.push(q);
            }
        }
    }
    let mut out = TuringMachine::new(&names, &tm.alphabet, &tm.alphabet[tm.blank], tm.direction)
        .expect("blank symbol unchanged");
    out.weights = tm.weights.clone();
    for (nq, &oq) in origin.iter().enumerate() {
        for s in 0..tm.alphabet.len() {
            if let Some(r) = tm.rule(oq, s) {
                let next = copy[&(r.next, r.mv)];
                out.set_rule(nq, s, Some(Rule { next, write: r.write, mv: r.mv }));
            }
        }
    }
    (out, origin)
}

pub fn normalize_direction_uniqueness(tm: &TuringMachine) -> TuringMachine {
    normalize_with_origin(tm).0
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TmConfiguration {
    pub tape: Vec<usize>,
    pub head: usize,
    pub state: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Step {
    Moved(TmConfiguration),
    Halt,
}

/// Applies one transition, padding the tape with blanks as the head moves
/// past either end.
pub fn tm_step(tm: &TuringMachine, cfg: &TmConfiguration) -> Step {
    let mut c = cfg.clone();
    if c.tape.is_empty() {
        c.tape.push(tm.blank);
    }
    while c.head >= c.tape.len() {
        c.tape.push(tm.blank);
    }
    let Some(r) = tm.rule(c.state, c.tape[c.head]) else {
        return Step::Halt;
    };
    c.tape[c.head] = r.write;
    c.state = r.next;
    match r.mv {
        Move::L if c.head == 0 => c.tape.insert(0, tm.blank),
        Move::L => c.head -= 1,
        Move::R => {
            c.head += 1;
            if c.head == c.tape.len() {
                c.tape.push(tm.blank);
            }
        }
        Move::S => {}
    }
    Step::Moved(c)
}

/// Runs until halting or `max_steps`; returns the final configuration, the
/// number of steps taken and whether the machine halted.
pub fn tm_run(tm: &TuringMachine, cfg: &TmConfiguration, max_steps: usize) -> (TmConfiguration, usize, bool) {
    let mut c = cfg.clone();
    for i in 0..max_steps {
        match tm_step(tm, &c) {
            Step::Moved(n) => c = n,
            Step::Halt => return (c, i, true),
        }
    }
    let halted = matches!(tm_step(tm, &c), Step::Halt);
    (c, max_steps, halted)
}

/// One cell of a configuration row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TmTile {
    Border,
    Tape(usize),
    Head(usize, usize),
}

impl TmTile {
    pub fn symbol(self) -> Option<usize> {
        match self {
            TmTile::Border => None,
            TmTile::Tape(s) | TmTile::Head(_, s) => Some(s),
        }
    }

    pub fn is_head(self) -> bool {
        matches!(self, TmTile::Head(..))
    }

    pub fn name(self, tm: &TuringMachine) -> String {
        match self {
            TmTile::Border => "□".to_string(),
            TmTile::Tape(s) => tm.alphabet[s].clone(),
            TmTile::Head(q, s) => format!("{}/{}", tm.states[q], tm.alphabet[s]),
        }
    }
}

/// Every interior tile of a machine: tape tiles then head tiles.
pub fn interior_tiles(tm: &TuringMachine) -> Vec<TmTile> {
    let k = tm.alphabet.len();
    let mut v: Vec<TmTile> = (0..k).map(TmTile::Tape).collect();
    for q in 0..tm.states.len() {
        for s in 0..k {
            v.push(TmTile::Head(q, s));
        }
    }
    v
}

/// Legality of a square given in time orientation: `tl, tr` is the later
/// configuration and `bl, br` the earlier one. All four tiles are interior.
pub fn legal_in_time(tm: &TuringMachine, arrival: &[Option<Move>], tl: TmTile, tr: TmTile, bl: TmTile, br: TmTile) -> bool {
    use TmTile::*;
    let hb = bl.is_head() as u8 + br.is_head() as u8;
    match hb {
        2 => false,
        1 => {
            let (q0, a, other, at_right) = match (bl, br) {
                (Head(q, a), o) => (q, a, o, false),
                (o, Head(q, a)) => (q, a, o, true),
                _ => unreachable!(),
            };
            let Tape(x) = other else { return false };
            let Some(r) = tm.rule(q0, a) else { return false };
            match (at_right, r.mv) {
                (true, Move::L) => tl == Head(r.next, x) && tr == Tape(r.write),
                (true, Move::R) => tl == Tape(x) && tr == Tape(r.write),
                (true, Move::S) => tl == Tape(x) && tr == Head(r.next, r.write),
                (false, Move::L) => tl == Tape(r.write) && tr == Tape(x),
                (false, Move::R) => tl == Tape(r.write) && tr == Head(r.next, x),
                (false, Move::S) => tl == Head(r.next, r.write) && tr == Tape(x),
            }
        }
        _ => match (tl, tr) {
            (Head(..), Head(..)) => false,
            (Tape(_), Head(q1, x)) => arrival[q1] == Some(Move::L) && br == Tape(x) && tl == bl,
            (Head(q1, x), Tape(_)) => arrival[q1] == Some(Move::R) && bl == Tape(x) && tr == br,
            (Tape(_), Tape(_)) => tl == bl && tr == br,
            _ => false,
        },
    }
}

/// Square legality in grid orientation for interior tiles.
pub fn square_legal(tm: &TuringMachine, arrival: &[Option<Move>], nw: TmTile, ne: TmTile, sw: TmTile, se: TmTile) -> bool {
    match tm.direction {
        Direction::Up => legal_in_time(tm, arrival, nw, ne, sw, se),
        Direction::Down => legal_in_time(tm, arrival, sw, se, nw, ne),
    }
}

/// Explicit legal square set, keys in grid order `[nw, ne, sw, se]`.
#[derive(Debug, Clone)]
pub struct LegalSquares {
    pub direction: Direction,
    pub set: HashSet<[TmTile; 4]>,
}

impl LegalSquares {
    pub fn contains(&self, nw: TmTile, ne: TmTile, sw: TmTile, se: TmTile) -> bool {
        self.set.contains(&[nw, ne, sw, se])
    }
}

/// Emits the legal squares of a normalized machine from the per-rule
/// schemas and the tape copy square.
pub fn compile_tm_to_squares(tm: &TuringMachine) -> Result<LegalSquares> {
    tm.arrival_map()?;
    use TmTile::*;
    let k = tm.alphabet.len();
    // time orientation: [tl, tr, bl, br]
    let mut time: Vec<[TmTile; 4]> = Vec::new();
    for x in 0..k {
        for y in 0..k {
            time.push([Tape(x), Tape(y), Tape(x), Tape(y)]);
        }
    }
    for (q0, a, r) in tm.rules() {
        let (q1, b) = (r.next, r.write);
        match r.mv {
            Move::L => {
                for x in 0..k {
                    time.push([Head(q1, x), Tape(b), Tape(x), Head(q0, a)]);
                    time.push([Tape(b), Tape(x), Head(q0, a), Tape(x)]);
                    time.push([Border, Head(q1, x), Border, Tape(x)]);
                    for y in 0..k {
                        time.push([Tape(y), Head(q1, x), Tape(y), Tape(x)]);
                    }
                }
            }
            Move::R => {
                for x in 0..k {
                    time.push([Tape(b), Head(q1, x), Head(q0, a), Tape(x)]);
                    time.push([Tape(x), Tape(b), Tape(x), Head(q0, a)]);
                    for y in 0..k {
                        time.push([Head(q1, x), Tape(y), Tape(x), Tape(y)]);
                    }
                }
                time.push([Border, Tape(b), Border, Head(q0, a)]);
            }
            Move::S => {
                for x in 0..k {
                    time.push([Head(q1, b), Tape(x), Head(q0, a), Tape(x)]);
                    time.push([Tape(x), Head(q1, b), Tape(x), Head(q0, a)]);
                }
                time.push([Border, Head(q1, b), Border, Head(q0, a)]);
            }
        }
    }
    let set = time
        .into_iter()
        .map(|[tl, tr, bl, br]| match tm.direction {
            Direction::Up => [tl, tr, bl, br],
            Direction::Down => [bl, br, tl, tr],
        })
        .collect();
    Ok(LegalSquares { direction: tm.direction, set })
}

/// Applies every head of a row simultaneously. Returns `None` when a head
/// has no rule, would leave the row, or two heads collide.
pub fn next_tm_row(tm: &TuringMachine, row: &[TmTile]) -> Option<Vec<TmTile>> {
    let mut out: Vec<TmTile> = row
        .iter()
        .map(|&t| match t {
            TmTile::Head(_, s) => TmTile::Tape(s),
            t => t,
        })
        .collect();
    let mut placed: Vec<(usize, usize)> = Vec::new();
    for (c, &t) in row.iter().enumerate() {
        if let TmTile::Head(q, s) = t {
            let r = tm.rule(q, s)?;
            out[c] = TmTile::Tape(r.write);
            let nc = c as isize + r.mv.delta();
            if nc < 0 || nc as usize >= row.len() {
                return None;
            }
            placed.push((nc as usize, r.next));
        }
    }
    for (c, q) in placed {
        match out[c] {
            TmTile::Tape(s) => out[c] = TmTile::Head(q, s),
            _ => return None,
        }
    }
    Some(out)
}

/// Rule set whose illegal interior squares cost 1. The alphabet is the
/// border tile followed by all interior tiles.
pub fn squares_rule_set(tm: &TuringMachine, limit: u128) -> Result<crate::tiling::TileRuleSet> {
    use crate::tiling::{TileRuleSet, TileSpec};
    let legal = compile_tm_to_squares(tm)?;
    let tiles = interior_tiles(tm);
    let n = tiles.len() as u128;
    if n.pow(4) > limit {
        return Err(Error::Capacity { needed: n.pow(4), limit });
    }
    let mut specs = vec![TileSpec { name: "□".into(), layers: vec![], border: true }];
    specs.extend(tiles.iter().map(|t| TileSpec::plain(t.name(tm))));
    let mut rs = TileRuleSet::new(specs, 1)?;
    let id = |i: usize| (i + 1) as u32;
    for (a, &nw) in tiles.iter().enumerate() {
        for (b, &ne) in tiles.iter().enumerate() {
            for (c, &sw) in tiles.iter().enumerate() {
                for (d, &se) in tiles.iter().enumerate() {
                    if !legal.contains(nw, ne, sw, se) {
                        rs.set_sq([id(a), id(b), id(c), id(d)], 1);
                    }
                }
            }
        }
    }
    Ok(rs)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn random_tm(rng: &mut ChaCha8Rng, nq: usize, ns: usize, dir: Direction) -> TuringMachine {
        let states: Vec<String> = (0..nq).map(|i| format!("q{i}")).collect();
        let alpha: Vec<String> = (0..ns).map(|i| format!("s{i}")).collect();
        let mut tm = TuringMachine::new(&states, &alpha, "s0", dir).unwrap();
        for q in 0..nq {
            for s in 0..ns {
                if rng.gen_bool(0.8) {
                    let mv = [Move::L, Move::R, Move::S][rng.gen_range(0..3)];
                    tm.set_rule(q, s, Some(Rule { next: rng.gen_range(0..nq), write: rng.gen_range(0..ns), mv }));
                }
            }
        }
        tm
    }

    /// All rows that sit legally on top of `row` in time order, found by
    /// left-to-right search over interior tiles. Edge tape cells are held
    /// fixed, standing in for walls that no head crosses.
    pub(crate) fn successors(tm: &TuringMachine, row: &[TmTile]) -> Vec<Vec<TmTile>> {
        let arr = tm.arrival_map().unwrap();
        let tiles = interior_tiles(tm);
        let mut out = Vec::new();
        let mut cur = Vec::new();
        fn rec(
            tm: &TuringMachine,
            arr: &[Option<Move>],
            tiles: &[TmTile],
            row: &[TmTile],
            cur: &mut Vec<TmTile>,
            out: &mut Vec<Vec<TmTile>>,
        ) {
            let c = cur.len();
            if c == row.len() {
                out.push(cur.clone());
                return;
            }
            for &t in tiles {
                let edge = c == 0 || c + 1 == row.len();
                if edge && !row[c].is_head() && t != row[c] {
                    continue;
                }
                if c > 0 && !legal_in_time(tm, arr, cur[c - 1], t, row[c - 1], row[c]) {
                    continue;
                }
                cur.push(t);
                rec(tm, arr, tiles, row, cur, out);
                cur.pop();
            }
        }
        rec(tm, &arr, &tiles, row, &mut cur, &mut out);
        out
    }

    fn binary_counter() -> TuringMachine {
        let mut tm = TuringMachine::new(&["ql", "qr"], &["S", "0", "1", "B", "T"], "B", Direction::Down).unwrap();
        tm.add("ql", "S", "qr", "S", Move::R).unwrap();
        tm.add("qr", "1", "qr", "0", Move::R).unwrap();
        tm.add("qr", "0", "ql", "1", Move::L).unwrap();
        tm.add("qr", "B", "ql", "1", Move::L).unwrap();
        tm.add("ql", "0", "ql", "0", Move::L).unwrap();
        tm.add("ql", "1", "ql", "1", Move::L).unwrap();
        tm
    }

    #[test]
    fn counter_reaches_one_after_two_steps() {
        let tm = binary_counter();
        let start = TmConfiguration { tape: vec![0, 3], head: 0, state: 0 };
        let (c, steps, _) = tm_run(&tm, &start, 2);
        assert_eq!(steps, 2);
        assert_eq!(c, TmConfiguration { tape: vec![0, 2], head: 0, state: 0 });
    }

    #[test]
    fn undefined_rule_halts() {
        let tm = binary_counter();
        let c = TmConfiguration { tape: vec![4], head: 0, state: 0 };
        assert_eq!(tm_step(&tm, &c), Step::Halt);
    }

    #[test]
    fn normalized_machine_is_fixed_point() {
        let mut tm = TuringMachine::new(&["a", "b"], &["0", "1"], "0", Direction::Up).unwrap();
        tm.add("a", "0", "b", "1", Move::R).unwrap();
        tm.add("b", "1", "a", "0", Move::L).unwrap();
        assert!(tm.is_normalized());
        assert_eq!(normalize_direction_uniqueness(&tm), tm);
        let empty = TuringMachine::new(&["a"], &["0"], "0", Direction::Up).unwrap();
        assert_eq!(normalize_direction_uniqueness(&empty), empty);
    }

    #[test]
    fn split_state_gets_one_copy_per_direction() {
        let mut tm = TuringMachine::new(&["a", "b", "q"], &["0"], "0", Direction::Up).unwrap();
        tm.add("a", "0", "q", "0", Move::L).unwrap();
        tm.add("b", "0", "q", "0", Move::R).unwrap();
        tm.add("q", "0", "a", "0", Move::S).unwrap();
        let (n, origin) = normalize_with_origin(&tm);
        assert!(n.is_normalized());
        assert!(n.state("q_L").is_ok() && n.state("q_R").is_ok());
        assert!(n.state("q").is_err());
        for name in ["q_L", "q_R"] {
            let q = n.state(name).unwrap();
            assert_eq!(origin[q], 2);
            assert_eq!(n.rule(q, 0).map(|r| n.states[r.next].clone()), Some("a".to_string()));
        }
    }

    #[test]
    fn unnormalized_machine_is_rejected() {
        let mut tm = TuringMachine::new(&["a", "q"], &["0", "1"], "0", Direction::Up).unwrap();
        tm.add("a", "0", "q", "0", Move::L).unwrap();
        tm.add("a", "1", "q", "0", Move::R).unwrap();
        assert!(matches!(compile_tm_to_squares(&tm), Err(Error::NotNormalized(_))));
    }

    #[test]
    fn left_move_schema_is_legal_for_every_tape_symbol() {
        let mut tm = TuringMachine::new(&["q0", "q1"], &["a", "b", "c"], "a", Direction::Up).unwrap();
        tm.add("q0", "a", "q1", "b", Move::L).unwrap();
        let ls = compile_tm_to_squares(&tm).unwrap();
        let arr = tm.arrival_map().unwrap();
        use TmTile::*;
        for x in 0..3 {
            assert!(ls.contains(Head(1, x), Tape(1), Tape(x), Head(0, 0)));
            assert!(square_legal(&tm, &arr, Head(1, x), Tape(1), Tape(x), Head(0, 0)));
        }
        // copy square legal, altered column illegal
        assert!(ls.contains(Tape(0), Tape(2), Tape(0), Tape(2)));
        assert!(!ls.contains(Tape(1), Tape(2), Tape(0), Tape(2)));
    }

    #[test]
    fn unchanged_symbol_above_head_without_rule_is_illegal_on_both_sides() {
        let mut tm = TuringMachine::new(&["q0", "q1"], &["a", "c"], "a", Direction::Up).unwrap();
        tm.add("q0", "a", "q1", "a", Move::R).unwrap();
        let arr = tm.arrival_map().unwrap();
        use TmTile::*;
        // (q0/c) has no rule, tape c above it
        for x in 0..2 {
            for y in 0..2 {
                for z in 0..2 {
                    assert!(!square_legal(&tm, &arr, Tape(x), Tape(1), Tape(y), Head(0, 1)));
                    assert!(!square_legal(&tm, &arr, Tape(1), Tape(z), Head(0, 1), Tape(y)));
                }
            }
        }
    }

    #[test]
    fn downward_machine_flips_rows() {
        let tm = binary_counter();
        let up = {
            let mut t = tm.clone();
            t.direction = Direction::Up;
            t
        };
        let (n_down, _) = normalize_with_origin(&tm);
        let (n_up, _) = normalize_with_origin(&up);
        let ld = compile_tm_to_squares(&n_down).unwrap();
        let lu = compile_tm_to_squares(&n_up).unwrap();
        assert_eq!(ld.set.len(), lu.set.len());
        for [nw, ne, sw, se] in &lu.set {
            assert!(ld.contains(*sw, *se, *nw, *ne));
        }
    }

    #[test]
    fn predicate_matches_compiled_set_exhaustively() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..40 {
            let dir = if rng.gen_bool(0.5) { Direction::Up } else { Direction::Down };
            let tm = normalize_direction_uniqueness(&random_tm(&mut rng, 2, 2, dir));
            let ls = compile_tm_to_squares(&tm).unwrap();
            let arr = tm.arrival_map().unwrap();
            let tiles = interior_tiles(&tm);
            for &a in &tiles {
                for &b in &tiles {
                    for &c in &tiles {
                        for &d in &tiles {
                            assert_eq!(square_legal(&tm, &arr, a, b, c, d), ls.contains(a, b, c, d));
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn squares_rule_set_respects_limit() {
        let tm = normalize_direction_uniqueness(&binary_counter());
        assert!(matches!(squares_rule_set(&tm, 10), Err(Error::Capacity { .. })));
        let rs = squares_rule_set(&tm, 1 << 40).unwrap();
        assert_eq!(rs.size(), 1 + interior_tiles(&tm).len());
    }

    fn cfg_row(c: &TmConfiguration) -> Vec<TmTile> {
        c.tape
            .iter()
            .enumerate()
            .map(|(i, &s)| if i == c.head { TmTile::Head(c.state, s) } else { TmTile::Tape(s) })
            .collect()
    }

    #[test]
    fn unique_legal_successor_is_the_machine_step() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut checked = 0;
        while checked < 1000 {
            let (nq, ns) = (rng.gen_range(1..=3), rng.gen_range(2..=3));
            let tm = normalize_direction_uniqueness(&random_tm(&mut rng, nq, ns, Direction::Up));
            let w = 7;
            let mut cfg = TmConfiguration {
                tape: (0..w).map(|_| rng.gen_range(0..ns)).collect(),
                head: w / 2,
                state: rng.gen_range(0..tm.states.len()),
            };
            for _ in 0..50 {
                if cfg.head < 2 || cfg.head + 2 >= w {
                    break;
                }
                let row = cfg_row(&cfg);
                let succ = successors(&tm, &row);
                checked += 1;
                match tm_step(&tm, &cfg) {
                    Step::Halt => {
                        assert!(succ.is_empty());
                        break;
                    }
                    Step::Moved(n) => {
                        assert_eq!(succ, vec![cfg_row(&n)]);
                        assert_eq!(next_tm_row(&tm, &row), Some(cfg_row(&n)));
                        cfg = n;
                    }
                }
            }
        }
    }

    #[test]
    fn headless_row_has_only_the_copy_successor() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let tm = normalize_direction_uniqueness(&random_tm(&mut rng, 2, 2, Direction::Up));
        let row: Vec<TmTile> = (0..5).map(|i| TmTile::Tape(i % 2)).collect();
        assert_eq!(successors(&tm, &row), vec![row.clone()]);
    }

    #[test]
    fn json_round_trip() {
        let tm = binary_counter();
        let s = serde_json::to_string(&tm.to_file()).unwrap();
        assert!(s.contains("\"move\":\"R\"") && s.contains("\"direction\":\"down\""));
        assert_eq!(TuringMachine::from_json_str(&s).unwrap(), tm);
    }

    proptest! {
        #[test]
        fn normalization_preserves_behaviour(seed in 0u64..100_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let tm = random_tm(&mut rng, 3, 3, Direction::Up);
            let (n, origin) = normalize_with_origin(&tm);
            prop_assert!(n.is_normalized());
            let tape: Vec<usize> = (0..6).map(|_| rng.gen_range(0..3)).collect();
            let q = rng.gen_range(0..3);
            let start_copy = origin.iter().position(|&o| o == q).unwrap();
            let mut a = TmConfiguration { tape: tape.clone(), head: 3, state: q };
            let mut b = TmConfiguration { tape, head: 3, state: start_copy };
            for _ in 0..100 {
                match (tm_step(&tm, &a), tm_step(&n, &b)) {
                    (Step::Halt, Step::Halt) => break,
                    (Step::Moved(x), Step::Moved(y)) => {
                        prop_assert_eq!(&x.tape, &y.tape);
                        prop_assert_eq!(x.head, y.head);
                        prop_assert_eq!(x.state, origin[y.state]);
                        a = x; b = y;
                    }
                    _ => prop_assert!(false, "one machine halted alone"),
                }
            }
        }

        #[test]
        fn legal_rows_conserve_head_count(seed in 0u64..100_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let tm = normalize_direction_uniqueness(&random_tm(&mut rng, 2, 2, Direction::Up));
            let tiles = interior_tiles(&tm);
            let mut row: Vec<TmTile> = (0..5).map(|_| tiles[rng.gen_range(0..tiles.len())]).collect();
            row[0] = TmTile::Tape(rng.gen_range(0..2));
            row[4] = TmTile::Tape(rng.gen_range(0..2));
            let heads = row.iter().filter(|t| t.is_head()).count();
            for s in successors(&tm, &row) {
                prop_assert_eq!(s.iter().filter(|t| t.is_head()).count(), heads);
            }
        }
    }
}
