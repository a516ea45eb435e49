//! Layer 2: the binary counter.
//!
//! The final Layer-1 row is translated into a row of `X` columns separating
//! strips. Each strip of size at least 4 starts as `X (q_l/S) B* T X` and
//! runs a counter that increments a reversed binary number on its tape.
//! Computation runs top-down, one machine step per grid row. A strip whose
//! head reaches `T` idles there forever at no cost.
//!
//! Tiles are [`TmTile`]s of the normalized counter machine, so a head tile
//! also records the move that brought the head to its cell.

use crate::error::{Error, Result};
use crate::layer1::{self, L1Tile, Layer1Tiling, RowAnnotation};
use crate::tm::{legal_in_time, normalize_with_origin, Direction, Move, TmTile, TuringMachine};
use rayon::prelude::*;
use serde::Serialize;
use std::collections::HashMap;
use std::sync::OnceLock;

pub const SYMBOLS: [&str; 7] = ["S", "0", "1", "B", "T", "X", "#"];
pub const S: usize = 0;
pub const ZERO: usize = 1;
pub const ONE: usize = 2;
pub const B: usize = 3;
pub const T: usize = 4;
pub const X: usize = 5;
pub const HASH: usize = 6;

const Q_L: usize = 0;

/// The counter machine as stated, with states `q_l`, `q_r`.
pub fn binary_counter_machine() -> TuringMachine {
    let mut tm = TuringMachine::new(&["q_l", "q_r"], &SYMBOLS, "B", Direction::Down).expect("blank present");
    let rules: [(&str, &str, &str, &str, Move); 8] = [
        ("q_l", "S", "q_r", "S", Move::R),
        ("q_r", "1", "q_r", "0", Move::R),
        ("q_r", "0", "q_l", "1", Move::L),
        ("q_r", "B", "q_l", "1", Move::L),
        ("q_l", "0", "q_l", "0", Move::L),
        ("q_l", "1", "q_l", "1", Move::L),
        ("q_l", "T", "q_l", "T", Move::S),
        ("q_r", "T", "q_r", "T", Move::S),
    ];
    for (q, a, p, b, m) in &rules {
        tm.add(q, a, p, b, *m).expect("names valid");
    }
    tm
}

/// Normalized counter with bookkeeping for naming head tiles.
pub struct Counter {
    pub raw: TuringMachine,
    pub tm: TuringMachine,
    pub origin: Vec<usize>,
    pub arrival: Vec<Option<Move>>,
    /// Copy of `q_l` used for the initial head.
    pub start_state: usize,
}

pub fn counter() -> &'static Counter {
    static C: OnceLock<Counter> = OnceLock::new();
    C.get_or_init(|| {
        let raw = binary_counter_machine();
        let (tm, origin) = normalize_with_origin(&raw);
        let arrival = tm.arrival_map().expect("normalized");
        let start_state = (0..tm.states.len())
            .find(|&q| origin[q] == Q_L && arrival[q] == Some(Move::L))
            .expect("q_l is entered by a left move");
        Counter { raw, tm, origin, arrival, start_state }
    })
}

pub fn start_head() -> TmTile {
    TmTile::Head(counter().start_state, S)
}

/// Display name using the unnormalized state, e.g. `q_l/S`.
pub fn tile_name(t: TmTile) -> String {
    let c = counter();
    match t {
        TmTile::Border => "□".into(),
        TmTile::Tape(s) => SYMBOLS[s].into(),
        TmTile::Head(q, s) => format!("{}/{}", c.raw.states[c.origin[q]], SYMBOLS[s]),
    }
}

pub fn format_row(row: &[TmTile]) -> String {
    row.iter().map(|&t| tile_name(t)).collect::<Vec<_>>().join(" ")
}

/// Parses a tile. `q/s` resolves to the first normalized copy of `q`;
/// normalized names such as `q_r_S/T` are accepted as well.
pub fn parse_tile(s: &str) -> Result<TmTile> {
    let c = counter();
    let sym = |t: &str| SYMBOLS.iter().position(|x| *x == t).ok_or_else(|| Error::UnknownSymbol(t.into()));
    if s == "□" {
        return Ok(TmTile::Border);
    }
    match s.split_once('/') {
        None => Ok(TmTile::Tape(sym(s)?)),
        Some((q, a)) => {
            let a = sym(a)?;
            if let Ok(i) = c.tm.state(q) {
                return Ok(TmTile::Head(i, a));
            }
            let oq = c.raw.state(q)?;
            let i = (0..c.tm.states.len()).find(|&i| c.origin[i] == oq).expect("every state has a copy");
            Ok(TmTile::Head(i, a))
        }
    }
}

pub fn parse_row(s: &str) -> Result<Vec<TmTile>> {
    s.split_whitespace().map(parse_tile).collect()
}

fn parse_bits(x: &str) -> Result<Vec<bool>> {
    x.chars()
        .map(|ch| match ch {
            '0' => Ok(false),
            '1' => Ok(true),
            _ => Err(Error::Parse(format!("`{x}` is not a bit string"))),
        })
        .collect()
}

/// Steps until the counter holds `x1` (least significant bit first) with
/// the head back on `S`.
pub fn bctm_steps(x: &str) -> Result<u128> {
    let bits = parse_bits(x)?;
    if bits.len() > 120 {
        return Err(Error::Precondition("bit string longer than 120".into()));
    }
    // value of 1 followed by reverse(x)
    let mut v: u128 = 1;
    for &b in bits.iter().rev() {
        v = 2 * v + b as u128;
    }
    let ones = bits.iter().filter(|&&b| b).count() as u128 + 1;
    Ok(4 * v - 2 * ones)
}

/// Grid size whose last Layer-2 row carries `x1` in every long-form strip.
pub fn reduce_input(x: &str) -> Result<u128> {
    if x.is_empty() {
        return Err(Error::Precondition("input must be nonempty".into()));
    }
    Ok(bctm_steps(x)? + 3)
}

/// Runs the counter on an unbounded tape and records, for every tape
/// content `x1` with `|x| <= max_len`, the step at which the head is first
/// back on `S` holding it.
pub fn simulated_step_table(max_len: usize) -> HashMap<String, u128> {
    use crate::tm::{tm_step, Step, TmConfiguration};
    let tm = binary_counter_machine();
    let mut cfg = TmConfiguration { tape: vec![S], head: 0, state: Q_L };
    let want = (1usize << (max_len + 1)) - 1;
    let mut table = HashMap::with_capacity(want);
    let mut steps: u128 = 0;
    while table.len() < want {
        match tm_step(&tm, &cfg) {
            Step::Moved(c) => cfg = c,
            Step::Halt => unreachable!("the counter never halts on an open tape"),
        }
        steps += 1;
        if cfg.state == Q_L && cfg.tape[cfg.head] == S {
            let digits: String =
                cfg.tape[1..].iter().take_while(|&&s| s == ZERO || s == ONE).map(|&s| SYMBOLS[s]).collect();
            let x = digits[..digits.len() - 1].to_string();
            if x.len() <= max_len {
                table.entry(x).or_insert(steps);
            }
        }
    }
    table
}

/// Node of the first-row initialization graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum InitNode {
    Box,
    X,
    T,
    Start,
    B,
    Hash,
    Other,
}

fn init_node(t: TmTile) -> InitNode {
    let c = counter();
    match t {
        TmTile::Border => InitNode::Box,
        TmTile::Tape(X) => InitNode::X,
        TmTile::Tape(T) => InitNode::T,
        TmTile::Tape(B) => InitNode::B,
        TmTile::Tape(HASH) => InitNode::Hash,
        TmTile::Head(q, S) if c.origin[q] == Q_L => InitNode::Start,
        _ => InitNode::Other,
    }
}

fn init_edge(a: InitNode, b: InitNode) -> bool {
    use InitNode::*;
    matches!(
        (a, b),
        (Box, X)
            | (X, X)
            | (X, T)
            | (X, Start)
            | (Start, B)
            | (Start, T)
            | (B, B)
            | (B, T)
            | (T, X)
            | (X, Hash)
            | (Hash, Hash)
            | (Hash, Box)
            | (X, Box)
    )
}

fn l1_at(row: &[L1Tile], i: usize) -> L1Tile {
    row.get(i).copied().unwrap_or(L1Tile::HASH)
}

fn translation_ok(l1: L1Tile, l2: TmTile) -> bool {
    if l1.is_plain_hash() {
        l2 == TmTile::Tape(HASH)
    } else if l1.weight() > 0 {
        l2 == TmTile::Tape(X)
    } else {
        matches!(init_node(l2), InitNode::B | InitNode::T | InitNode::Start)
    }
}

/// Translation of one column from the last Layer-1 row into Layer 2.
pub fn first_row_tile_ok(l1: L1Tile, l2: TmTile) -> bool {
    translation_ok(l1, l2)
}

/// Edge of the initialization graph between two first-row tiles, with
/// `None` for the border.
pub fn first_row_pair_legal(a: Option<TmTile>, b: Option<TmTile>) -> bool {
    let node = |t: Option<TmTile>| init_node(t.unwrap_or(TmTile::Border));
    init_edge(node(a), node(b))
}

/// Canonical first Layer-2 row (interior columns only) for a Layer-1 row.
pub fn translate_l1_to_l2(l1_last: &[L1Tile], width: usize) -> Vec<TmTile> {
    let mut out: Vec<TmTile> = (0..width)
        .map(|i| {
            let t = l1_at(l1_last, i);
            if t.is_plain_hash() {
                TmTile::Tape(HASH)
            } else if t.weight() > 0 {
                TmTile::Tape(X)
            } else {
                TmTile::Tape(B)
            }
        })
        .collect();
    for iv in layer1::intervals(l1_last) {
        if iv.size < 3 {
            continue;
        }
        // interior grid columns start+1 ..= end-1 are row indices start ..= end-2
        out[iv.end - 2] = TmTile::Tape(T);
        if iv.size >= 4 {
            out[iv.start] = start_head();
        }
    }
    out
}

/// Grid columns (1-based interior) of every translation or initialization
/// violation between the last Layer-1 row and a candidate first Layer-2 row.
/// Initialization violations are reported at the left column of the pair;
/// column 0 and `width + 1` stand for the border.
pub fn translation_violations(l1_last: &[L1Tile], l2_first: &[TmTile]) -> Vec<usize> {
    let w = l2_first.len();
    let mut bad = Vec::new();
    for (i, &t) in l2_first.iter().enumerate() {
        if !translation_ok(l1_at(l1_last, i), t) {
            bad.push(i + 1);
        }
    }
    let at = |c: usize| if c == 0 || c == w + 1 { TmTile::Border } else { l2_first[c - 1] };
    for c in 0..=w {
        if !init_edge(init_node(at(c)), init_node(at(c + 1))) {
            bad.push(c);
        }
    }
    bad.sort_unstable();
    bad
}

/// Interval of `X` columns in a Layer-2 row, in grid columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Strip {
    pub start: usize,
    pub end: usize,
    pub size: usize,
}

pub fn strips(row: &[TmTile]) -> Vec<Strip> {
    let xs: Vec<usize> = row.iter().enumerate().filter(|(_, &t)| t == TmTile::Tape(X)).map(|(i, _)| i + 1).collect();
    xs.windows(2).map(|w| Strip { start: w[0], end: w[1], size: w[1] - w[0] + 1 }).collect()
}

/// Runs one strip interior for `steps` machine steps. Returns `None` if the
/// head halts or leaves the strip.
fn run_strip(cells: &mut [TmTile], steps: u64) -> Option<()> {
    let c = counter();
    let Some(mut h) = cells.iter().position(|t| t.is_head()) else { return Some(()) };
    if cells.iter().filter(|t| t.is_head()).count() > 1 {
        return None;
    }
    let TmTile::Head(mut q, _) = cells[h] else { unreachable!() };
    let mut tape: Vec<usize> = cells.iter().map(|t| t.symbol().unwrap_or(HASH)).collect();
    for _ in 0..steps {
        let r = c.tm.rule(q, tape[h])?;
        if r.mv == Move::S && r.next == q && r.write == tape[h] {
            break;
        }
        tape[h] = r.write;
        q = r.next;
        let nh = h as isize + r.mv.delta();
        if nh < 0 || nh as usize >= tape.len() {
            return None;
        }
        h = nh as usize;
    }
    for (i, cell) in cells.iter_mut().enumerate() {
        *cell = if i == h { TmTile::Head(q, tape[i]) } else { TmTile::Tape(tape[i]) };
    }
    Some(())
}

/// Layer 2 of an `n x n` grid: rows `r_{n-2}` down to `r_1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layer2Run {
    pub n: usize,
    pub first: Vec<TmTile>,
    pub last: Vec<TmTile>,
    /// Every row in step order when requested.
    pub rows: Option<Vec<Vec<TmTile>>>,
}

/// Runs every strip independently for `n - 3` steps.
pub fn simulate_layer2(first: &[TmTile], n: usize, keep_rows: bool) -> Result<Layer2Run> {
    if n < 5 {
        return Err(Error::Precondition(format!("n = {n} is below the minimum of 5")));
    }
    let steps = (n - 3) as u64;
    let mut last = first.to_vec();
    let spans: Vec<(usize, usize)> = strips(first).iter().map(|s| (s.start, s.end - 2)).collect();
    // interiors are disjoint: split the row into owned chunks
    let mut chunks: Vec<&mut [TmTile]> = Vec::new();
    let mut rest: &mut [TmTile] = &mut last;
    let mut offset = 0;
    for &(a, b) in &spans {
        let (_, tail) = rest.split_at_mut(a - offset);
        let (mid, tail) = tail.split_at_mut(b + 1 - a);
        chunks.push(mid);
        rest = tail;
        offset = b + 1;
    }
    let ok = chunks.into_par_iter().all(|cells| run_strip(cells, steps).is_some());
    if !ok || last.iter().enumerate().any(|(i, t)| t.is_head() && !spans.iter().any(|&(a, b)| a <= i && i <= b)) {
        return Err(Error::Precondition("a head halts or leaves its strip".into()));
    }
    let rows = if keep_rows {
        let tm = &counter().tm;
        let mut rows = vec![first.to_vec()];
        for _ in 0..steps {
            let next = crate::tm::next_tm_row(tm, rows.last().unwrap())
                .ok_or_else(|| Error::Precondition("row has no successor".into()))?;
            rows.push(next);
        }
        Some(rows)
    } else {
        None
    };
    Ok(Layer2Run { n, first: first.to_vec(), last, rows })
}

/// Columns `c` (grid, 1-based) at which the square over columns `c, c+1`
/// between a row and the next computed row is illegal.
pub fn illegal_squares(earlier: &[TmTile], later: &[TmTile]) -> Vec<usize> {
    let c = counter();
    (0..earlier.len().saturating_sub(1))
        .filter(|&i| !legal_in_time(&c.tm, &c.arrival, later[i], later[i + 1], earlier[i], earlier[i + 1]))
        .map(|i| i + 1)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Form {
    Long,
    Short,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StripRecord {
    pub tag: Option<usize>,
    pub start: usize,
    pub end: usize,
    pub size: usize,
    pub clean: bool,
    pub form: Form,
    /// Counter digits to the right of `S`.
    pub tape: String,
}

pub fn strip_form(row: &[TmTile], s: &Strip) -> Form {
    let head_on_t = row[s.start..s.end - 1].iter().any(|t| matches!(t, TmTile::Head(_, T)));
    if s.size >= 4 && !head_on_t {
        Form::Long
    } else {
        Form::Short
    }
}

pub fn strip_tape(row: &[TmTile], s: &Strip) -> String {
    let interior = &row[s.start..s.end - 1];
    let Some(p) = interior.iter().position(|t| t.symbol() == Some(S)) else { return String::new() };
    interior[p + 1..]
        .iter()
        .map(|t| t.symbol().unwrap_or(HASH))
        .take_while(|&s| s == ZERO || s == ONE)
        .map(|s| SYMBOLS[s])
        .collect()
}

/// Per-strip census of the last Layer-2 row. A strip is clean when the
/// Layer-1 interval at the same place is clean and no translation,
/// initialization or computation fault touches its columns.
pub fn census(l1_last: &[L1Tile], l1_ann: &RowAnnotation, run: &Layer2Run) -> Vec<StripRecord> {
    let by_span: HashMap<(usize, usize), _> = l1_ann.intervals.iter().map(|a| ((a.start, a.end), a)).collect();
    let mut faulty: Vec<usize> = translation_violations(l1_last, &run.first);
    if let Some(rows) = &run.rows {
        for w in rows.windows(2) {
            faulty.extend(illegal_squares(&w[0], &w[1]));
        }
    }
    strips(&run.last)
        .into_iter()
        .map(|s| {
            let l1 = by_span.get(&(s.start, s.end));
            // a square or pair at column c covers c and c + 1
            let touched = faulty.iter().any(|&c| c + 1 >= s.start && c <= s.end);
            let unchanged = strips(&run.first).contains(&s);
            let clean = l1.is_some_and(|a| a.clean) && !touched && unchanged;
            StripRecord {
                tag: if clean { l1.and_then(|a| a.tag) } else { None },
                start: s.start,
                end: s.end,
                size: s.size,
                clean,
                form: strip_form(&run.last, &s),
                tape: strip_tape(&run.last, &s),
            }
        })
        .collect()
}

/// Fault-free Layer 1 and Layer 2 of an `n x n` grid with the census.
pub struct Pipeline {
    pub layer1: Layer1Tiling,
    pub layer1_tags: RowAnnotation,
    pub run: Layer2Run,
    pub census: Vec<StripRecord>,
}

pub fn fault_free_pipeline(n: usize, keep_rows: bool) -> Result<Pipeline> {
    let l1 = layer1::simulate_layer1(n)?;
    let tags = layer1::tag_clean_corrupt(&l1).pop().unwrap_or_default();
    let first = translate_l1_to_l2(l1.last(), n - 2);
    let run = simulate_layer2(&first, n, keep_rows)?;
    let census = census(l1.last(), &tags, &run);
    Ok(Pipeline { layer1: l1, layer1_tags: tags, run, census })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DigitRun {
    pub start: usize,
    pub len: usize,
    /// Faults whose squares touch the run's columns.
    pub faults: usize,
}

/// Runs of `0`/`1` tiles in the last row longer than `log2 n + 3`, each with
/// the number of faults in its columns. A run with no faults breaks the
/// bound on counter length.
pub fn digit_run_audit(l1_last: &[L1Tile], run: &Layer2Run) -> Vec<DigitRun> {
    let limit = (run.n as f64).log2() + 3.0;
    let mut faulty = translation_violations(l1_last, &run.first);
    if let Some(rows) = &run.rows {
        for w in rows.windows(2) {
            faulty.extend(illegal_squares(&w[0], &w[1]));
        }
    }
    let mut out = Vec::new();
    let mut i = 0;
    let row = &run.last;
    while i < row.len() {
        let is_digit = |t: TmTile| matches!(t.symbol(), Some(ZERO) | Some(ONE));
        if !is_digit(row[i]) {
            i += 1;
            continue;
        }
        let a = i;
        while i < row.len() && is_digit(row[i]) {
            i += 1;
        }
        let (start, end) = (a + 1, i);
        if (i - a) as f64 > limit {
            let faults = faulty.iter().filter(|&&c| c + 1 >= start && c <= end).count();
            out.push(DigitRun { start, len: i - a, faults });
        }
    }
    out
}

/// Grid columns of `X` or `#` tiles whose vertical neighbour differs.
pub fn broken_columns(rows: &[Vec<TmTile>]) -> Vec<usize> {
    let mut out = Vec::new();
    for w in rows.windows(2) {
        for (i, (&a, &b)) in w[0].iter().zip(&w[1]).enumerate() {
            let pinned = |t: TmTile| matches!(t, TmTile::Tape(X) | TmTile::Tape(HASH));
            if (pinned(a) || pinned(b)) && a != b {
                out.push(i + 1);
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tm::{tm_run, TmConfiguration};
    use proptest::prelude::*;

    #[test]
    fn machine_rules() {
        let tm = binary_counter_machine();
        assert_eq!(tm.rules().count(), 8);
        let r = tm.rule(1, ONE).unwrap();
        assert_eq!((r.next, r.write, r.mv), (1, ZERO, Move::R));
        assert!(!tm.is_normalized());
        let c = counter();
        assert!(c.tm.is_normalized());
        assert_eq!(c.tm.states.len(), 4);
    }

    #[test]
    fn short_traces() {
        let tm = binary_counter_machine();
        let cfg = TmConfiguration { tape: vec![S, B], head: 0, state: Q_L };
        let (out, _, _) = tm_run(&tm, &cfg, 2);
        assert_eq!((out.head, out.state, &out.tape[..2]), (0, Q_L, &[S, ONE][..]));
        let cfg = TmConfiguration { tape: vec![S, ZERO, ONE], head: 0, state: Q_L };
        let (out, _, _) = tm_run(&tm, &cfg, 2);
        assert_eq!((out.head, out.state, &out.tape[..3]), (0, Q_L, &[S, ONE, ONE][..]));
    }

    #[test]
    fn step_formula_examples() {
        assert_eq!(bctm_steps("").unwrap(), 2);
        assert_eq!(bctm_steps("0").unwrap(), 6);
        assert_eq!(bctm_steps("1").unwrap(), 8);
        assert_eq!(reduce_input("1").unwrap(), 11);
        assert_eq!(reduce_input("0").unwrap(), 9);
        assert!(reduce_input("").is_err());
        assert!(bctm_steps("012").is_err());
    }

    #[test]
    fn formula_matches_simulation_up_to_eight_bits() {
        let table = simulated_step_table(8);
        assert_eq!(table.len(), 511);
        for (x, &steps) in &table {
            assert_eq!(bctm_steps(x).unwrap(), steps, "x = {x}");
        }
    }

    #[test]
    fn translation_shapes() {
        let c = |s: &str| layer1::parse_row(s).unwrap();
        // intervals of size 5, 2 and 3 in layer-1 grid columns
        let l1 = c("⊲ B:b B:b B:b X:b X:b B:b X:b #");
        let row = translate_l1_to_l2(&l1, 10);
        assert_eq!(format_row(&row), "X q_l/S B T X X T X # #");
        assert!(translation_violations(&l1, &row).is_empty());
        assert_eq!(strips(&row).iter().map(|s| s.size).collect::<Vec<_>>(), vec![5, 2, 3]);
        let mut bad = row.clone();
        bad[2] = TmTile::Tape(ONE);
        assert!(!translation_violations(&l1, &bad).is_empty());
    }

    #[test]
    fn size_one_interval_collapses() {
        let l1 = layer1::parse_row("⊲ B:b q_wX/X B:b X:b #").unwrap();
        assert!(layer1::sizes(&l1).contains(&1));
        let row = translate_l1_to_l2(&l1, 6);
        assert_eq!(format_row(&row), "X T X T X #");
        assert!(translation_violations(&l1, &row).is_empty());
    }

    #[test]
    fn narrow_strip_idles_on_t() {
        let first = parse_row("X q_l/S B T X #").unwrap();
        let run = simulate_layer2(&first, 40, true).unwrap();
        let rows = run.rows.as_ref().unwrap();
        assert_eq!(rows.last().unwrap(), &run.last);
        assert!(matches!(run.last[3], TmTile::Head(_, T)));
        assert_eq!(strip_form(&run.last, &strips(&run.last)[0]), Form::Short);
        for w in rows.windows(2) {
            assert!(illegal_squares(&w[0], &w[1]).is_empty());
        }
    }

    #[test]
    fn strip_runs_match_whole_row_steps() {
        for n in [9usize, 30, 120, 300] {
            let p = fault_free_pipeline(n, true).unwrap();
            let rows = p.run.rows.as_ref().unwrap();
            assert_eq!(rows.last().unwrap(), &p.run.last, "n = {n}");
            assert!(broken_columns(rows).is_empty());
            for w in rows.windows(2) {
                assert!(illegal_squares(&w[0], &w[1]).is_empty());
            }
        }
    }

    #[test]
    fn fault_free_census_matches_layer1() {
        for n in [16usize, 100, 700] {
            let p = fault_free_pipeline(n, false).unwrap();
            let l1_clean = p.layer1_tags.clean().filter(|a| a.size >= 2).count();
            assert_eq!(p.census.iter().filter(|r| r.clean).count(), l1_clean, "n = {n}");
            let limit = (n as f64).log2() + 5.0;
            for r in &p.census {
                if r.size as f64 >= limit {
                    assert_eq!(r.form, Form::Long);
                }
            }
        }
    }

    #[test]
    fn reduction_round_trip() {
        let x = "01";
        let n = reduce_input(x).unwrap() as usize;
        let first = parse_row("X q_l/S B B B B B B T X").unwrap();
        let run = simulate_layer2(&first, n, false).unwrap();
        let s = strips(&run.last)[0];
        assert_eq!(strip_form(&run.last, &s), Form::Long);
        assert_eq!(strip_tape(&run.last, &s), format!("{x}1"));
        assert_eq!(run.last[1], TmTile::Head(counter().start_state, S));
    }

    #[test]
    fn long_digit_runs_are_charged_to_faults() {
        let mut first = vec![TmTile::Tape(X), start_head()];
        first.extend(std::iter::repeat(TmTile::Tape(B)).take(20));
        first.extend([TmTile::Tape(T), TmTile::Tape(X)]);
        let l1 = layer1::parse_row(&format!("⊲{} X:b", " B:b".repeat(22))).unwrap();
        assert!(translation_violations(&l1, &first).is_empty());
        let mut run = simulate_layer2(&first, 40, true).unwrap();
        assert!(digit_run_audit(&l1, &run).is_empty());
        for i in 2..20 {
            run.last[i] = TmTile::Tape(ONE);
        }
        run.rows.as_mut().unwrap().last_mut().unwrap().clone_from(&run.last);
        let runs = digit_run_audit(&l1, &run);
        assert_eq!(runs.len(), 1);
        assert!(runs[0].faults > 0);
    }

    proptest! {
        #[test]
        fn formula_matches_simulation_on_random_strings(x in "[01]{0,10}") {
            let n = bctm_steps(&x).unwrap() as usize;
            let first = {
                let mut r = vec![TmTile::Tape(X), start_head()];
                r.extend(std::iter::repeat(TmTile::Tape(B)).take(14));
                r.extend([TmTile::Tape(T), TmTile::Tape(X)]);
                r
            };
            let run = simulate_layer2(&first, n + 3, false).unwrap();
            let s = strips(&run.last)[0];
            prop_assert_eq!(strip_tape(&run.last, &s), format!("{x}1"));
            prop_assert!(matches!(run.last[1], TmTile::Head(q, S) if counter().origin[q] == Q_L));
        }

        #[test]
        fn strip_boundaries_never_move(n in 5usize..400) {
            let p = fault_free_pipeline(n, false).unwrap();
            prop_assert_eq!(strips(&p.run.first), strips(&p.run.last));
        }
    }
}
