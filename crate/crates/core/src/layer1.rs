//! The interval-creating machine and the quantities used to analyse its
//! tilings.
//!
//! Rows are stored trimmed: interior columns only, with trailing plain `#`
//! tiles left implicit. Interior index `i` is grid column `i + 1`; grid
//! columns 0 and `n - 1` hold the border. A tiling stores rows `r_1` through
//! `r_{n-2}`; `r_0` and `r_{n-1}` are border rows.

use crate::error::{Error, Result};
use crate::tm::{self, Direction, Move, TmTile, TuringMachine};
use serde::Serialize;
use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::OnceLock;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sym {
    Lt,
    X,
    B,
    XBar,
    Gt,
    Hash,
}

pub const SYMS: [Sym; 6] = [Sym::Lt, Sym::X, Sym::B, Sym::XBar, Sym::Gt, Sym::Hash];

impl Sym {
    pub fn text(self) -> &'static str {
        match self {
            Sym::Lt => "⊲",
            Sym::X => "X",
            Sym::B => "B",
            Sym::XBar => "X̄",
            Sym::Gt => "⊳",
            Sym::Hash => "#",
        }
    }

    pub fn weight(self) -> u8 {
        match self {
            Sym::B | Sym::Hash => 0,
            _ => 1,
        }
    }

    pub fn colored(self) -> bool {
        matches!(self, Sym::X | Sym::B | Sym::XBar)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum State {
    OS,
    Left,
    IS,
    WXBar,
    WX,
    WB,
    WGt,
    E1,
    E2,
}

pub const STATES: [State; 9] =
    [State::OS, State::Left, State::IS, State::WXBar, State::WX, State::WB, State::WGt, State::E1, State::E2];

impl State {
    pub fn text(self) -> &'static str {
        match self {
            State::OS => "q_OS",
            State::Left => "q_left",
            State::IS => "q_IS",
            State::WXBar => "q_wX̄",
            State::WX => "q_wX",
            State::WB => "q_wB",
            State::WGt => "q_w⊳",
            State::E1 => "q_e1",
            State::E2 => "q_e2",
        }
    }

    pub fn weight(self) -> u8 {
        matches!(self, State::WX | State::WGt | State::WXBar | State::E1 | State::E2) as u8
    }

    /// Writing state that carries a symbol.
    fn carrying(s: Sym) -> State {
        match s {
            Sym::XBar => State::WXBar,
            Sym::X => State::WX,
            Sym::B => State::WB,
            Sym::Gt => State::WGt,
            _ => unreachable!("only X̄, X, B and ⊳ are carried"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Color {
    None,
    Red,
    Blue,
}

/// Transition table; `None` is "no legal transition".
pub fn delta(q: State, s: Sym) -> Option<(State, Sym, Move)> {
    use Move::*;
    use State::*;
    use Sym::*;
    match (q, s) {
        (OS, Lt) => Some((IS, Lt, R)),
        (OS, X | B | Gt) => Some((OS, s, L)),
        (OS, XBar) => Some((OS, X, L)),
        (Left, Lt) => Some((IS, Lt, R)),
        (Left, X | B | Gt) => Some((Left, s, L)),
        (Left, XBar) => Some((IS, X, R)),
        (IS, Lt) => Some((IS, Lt, R)),
        (IS, X) => Some((WXBar, B, R)),
        (IS, B | XBar) => Some((IS, s, R)),
        (IS, Gt) => Some((E1, B, R)),
        (WXBar | WX | WB, Lt) => Some((q, Lt, R)),
        (WXBar | WX | WB, X | B | XBar | Gt) => {
            let carried = match q {
                WXBar => XBar,
                WX => X,
                _ => B,
            };
            Some((State::carrying(s), carried, R))
        }
        (WGt, Hash) => Some((Left, Gt, L)),
        (E1, Hash) => Some((E2, X, R)),
        (E2, Hash) => Some((OS, Gt, L)),
        _ => None,
    }
}

/// The transition table as a generic machine.
pub fn layer1_machine() -> TuringMachine {
    let states: Vec<&str> = STATES.iter().map(|s| s.text()).collect();
    let syms: Vec<&str> = SYMS.iter().map(|s| s.text()).collect();
    let mut tm = TuringMachine::new(&states, &syms, "#", Direction::Up).expect("blank present");
    for (qi, &q) in STATES.iter().enumerate() {
        for (si, &s) in SYMS.iter().enumerate() {
            if let Some((q2, w, m)) = delta(q, s) {
                tm.set_rule(qi, si, Some(tm::Rule { next: q2 as usize, write: w as usize, mv: m }));
            }
        }
    }
    for s in SYMS {
        tm.weights.insert(s.text().to_string(), s.weight());
    }
    for q in STATES {
        tm.weights.insert(q.text().to_string(), q.weight());
    }
    tm
}

fn machine() -> &'static (TuringMachine, Vec<Option<Move>>) {
    static M: OnceLock<(TuringMachine, Vec<Option<Move>>)> = OnceLock::new();
    M.get_or_init(|| {
        let tm = layer1_machine();
        let arr = tm.arrival_map().expect("layer-1 machine is direction-unique");
        (tm, arr)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct L1Tile {
    pub sym: Sym,
    pub state: Option<State>,
    pub color: Color,
}

impl L1Tile {
    pub const HASH: L1Tile = L1Tile { sym: Sym::Hash, state: None, color: Color::None };

    pub fn tape(sym: Sym) -> Self {
        debug_assert!(!sym.colored());
        L1Tile { sym, state: None, color: Color::None }
    }

    pub fn colored(sym: Sym, color: Color) -> Self {
        L1Tile { sym, state: None, color }
    }

    pub fn head(state: State, sym: Sym) -> Self {
        L1Tile { sym, state: Some(state), color: Color::None }
    }

    pub fn weight(self) -> u8 {
        self.sym.weight() + self.state.map_or(0, |q| q.weight())
    }

    pub fn is_plain_hash(self) -> bool {
        self == L1Tile::HASH
    }

    fn tm_tile(self) -> TmTile {
        match self.state {
            Some(q) => TmTile::Head(q as usize, self.sym as usize),
            None => TmTile::Tape(self.sym as usize),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("bad layer-1 tile `{s}`"));
        let sym_of = |t: &str| SYMS.iter().copied().find(|x| x.text() == t).ok_or_else(bad);
        let body = s.trim_start_matches('(').trim_end_matches(')');
        if let Some((q, c)) = body.split_once('/') {
            let q = STATES.iter().copied().find(|x| x.text() == q).ok_or_else(bad)?;
            return Ok(L1Tile::head(q, sym_of(c)?));
        }
        let (sym, color) = match body.rsplit_once(':') {
            Some((t, "r")) => (sym_of(t)?, Color::Red),
            Some((t, "b")) => (sym_of(t)?, Color::Blue),
            Some(_) => return Err(bad()),
            None => (sym_of(body)?, Color::None),
        };
        if sym.colored() != (color != Color::None) {
            return Err(bad());
        }
        Ok(L1Tile { sym, state: None, color })
    }
}

impl fmt::Display for L1Tile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.state, self.color) {
            (Some(q), _) => write!(f, "{}/{}", q.text(), self.sym.text()),
            (None, Color::Red) => write!(f, "{}:r", self.sym.text()),
            (None, Color::Blue) => write!(f, "{}:b", self.sym.text()),
            (None, Color::None) => write!(f, "{}", self.sym.text()),
        }
    }
}

/// All 63 interior tiles.
pub fn alphabet() -> Vec<L1Tile> {
    let mut v = Vec::new();
    for s in SYMS {
        if s.colored() {
            v.push(L1Tile::colored(s, Color::Blue));
            v.push(L1Tile::colored(s, Color::Red));
        } else {
            v.push(L1Tile::tape(s));
        }
    }
    for q in STATES {
        for s in SYMS {
            v.push(L1Tile::head(q, s));
        }
    }
    v
}

pub fn format_row(row: &[L1Tile]) -> String {
    row.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(" ")
}

pub fn parse_row(s: &str) -> Result<Vec<L1Tile>> {
    s.split_whitespace().map(L1Tile::parse).collect()
}

/// Drops trailing plain `#` tiles.
pub fn trim(mut row: Vec<L1Tile>) -> Vec<L1Tile> {
    while row.last().is_some_and(|t| t.is_plain_hash()) {
        row.pop();
    }
    row
}

#[inline]
fn at(row: &[L1Tile], i: usize) -> L1Tile {
    row.get(i).copied().unwrap_or(L1Tile::HASH)
}

// Vertices of the valid-row graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Node {
    Source,
    Sink,
    V(u8),
}

fn vertex(t: L1Tile) -> Option<u8> {
    use State::*;
    let ends = |q: State| matches!(q, E1 | E2 | WGt);
    match (t.state, t.sym, t.color) {
        (None, Sym::Lt, _) => Some(2),
        (None, Sym::Gt, _) => Some(6),
        (None, Sym::Hash, _) => Some(7),
        (None, _, Color::Blue) => Some(3),
        (None, _, Color::Red) => Some(5),
        (None, _, Color::None) => None,
        (Some(q), Sym::Lt, _) if !ends(q) => Some(1),
        (Some(q), Sym::X | Sym::B | Sym::XBar, _) if !ends(q) => Some(4),
        (Some(q), Sym::Gt, _) if !ends(q) => Some(8),
        (Some(q), Sym::Hash, _) if ends(q) => Some(9),
        _ => None,
    }
}

fn edge(a: Node, b: Node) -> bool {
    use Node::*;
    match (a, b) {
        (Source, V(1 | 2)) => true,
        (V(1), V(5 | 6)) => true,
        (V(5), V(5 | 6)) => true,
        (V(6 | 7 | 8 | 9), V(7) | Sink) => true,
        (V(2 | 3), V(3 | 4 | 8 | 9)) => true,
        (V(4), V(5 | 6)) => true,
        _ => false,
    }
}

/// Horizontal pair legality; `None` stands for the border.
pub fn pair_legal(a: Option<L1Tile>, b: Option<L1Tile>) -> bool {
    let na = match a {
        None => Node::Source,
        Some(t) => match vertex(t) {
            Some(v) => Node::V(v),
            None => return false,
        },
    };
    let nb = match b {
        None => Node::Sink,
        Some(t) => match vertex(t) {
            Some(v) => Node::V(v),
            None => return false,
        },
    };
    edge(na, nb)
}

/// Positions `p` (pair between interior `p-1` and `p`, with `-1` and
/// `width` standing for the border) of illegal horizontal pairs.
pub fn illegal_pairs(row: &[L1Tile], width: usize) -> Vec<usize> {
    let mut out = Vec::new();
    // pairs beyond the trimmed prefix are (#, #) or (#, border), both legal
    let span = (row.len() + 1).min(width);
    for p in 0..=span {
        let a = (p > 0).then(|| at(row, p - 1));
        let b = (p < width).then(|| at(row, p));
        if !pair_legal(a, b) {
            out.push(p);
        }
    }
    out
}

pub fn h_cost(row: &[L1Tile], width: usize) -> usize {
    illegal_pairs(row, width).len()
}

/// Validity check; `Err(p)` carries the first illegal pair position.
pub fn check_valid_row(row: &[L1Tile], width: usize) -> std::result::Result<(), usize> {
    if row.len() > width {
        return Err(width);
    }
    match illegal_pairs(row, width).first() {
        Some(&p) => Err(p),
        None => Ok(()),
    }
}

pub fn is_valid_row(row: &[L1Tile], width: usize) -> bool {
    check_valid_row(row, width).is_ok()
}

/// Legality of an initialization square: the bottom border row below the
/// pair `a, b` of `r_1`, with `None` for the border.
pub fn init_pair_legal(a: Option<L1Tile>, b: Option<L1Tile>) -> bool {
    #[derive(PartialEq, Clone, Copy)]
    enum I {
        Border,
        Lt,
        Start,
        Hash,
        Other,
    }
    let kind = |t: Option<L1Tile>| match t {
        None => I::Border,
        Some(t) if t == L1Tile::tape(Sym::Lt) => I::Lt,
        Some(t) if t == L1Tile::head(State::E2, Sym::Hash) => I::Start,
        Some(t) if t.is_plain_hash() => I::Hash,
        Some(_) => I::Other,
    };
    matches!(
        (kind(a), kind(b)),
        (I::Border, I::Lt)
            | (I::Lt, I::Start)
            | (I::Start, I::Hash)
            | (I::Start, I::Border)
            | (I::Hash, I::Hash)
            | (I::Hash, I::Border)
    )
}

/// Illegal initialization squares between the bottom border row and `r_1`.
pub fn init_cost(r1: &[L1Tile], width: usize) -> usize {
    let cell = |i: usize| (i != 0 && i != width + 1).then(|| at(r1, i - 1));
    // later pairs are (#, #) or (#, border)
    (0..=r1.len().min(width)).filter(|&c| !init_pair_legal(cell(c), cell(c + 1))).count()
}

/// Legality of a square of interior tiles in grid orientation.
pub fn square_legal(nw: L1Tile, ne: L1Tile, sw: L1Tile, se: L1Tile) -> bool {
    let (tm, arr) = machine();
    if !tm::legal_in_time(tm, arr, nw.tm_tile(), ne.tm_tile(), sw.tm_tile(), se.tm_tile()) {
        return false;
    }
    for (top, bot) in [(nw, sw), (ne, se)] {
        if top.color != Color::None && bot.color != Color::None && top.color != bot.color {
            return false;
        }
    }
    let top_head = [nw, ne].iter().position(|t| t.state.is_some());
    let bot_head = [sw, se].iter().position(|t| t.state.is_some());
    if let (Some(a), Some(b)) = (top_head, bot_head) {
        for (col, t) in [(0usize, nw), (1, ne), (0, sw), (1, se)] {
            if t.color == Color::None {
                continue;
            }
            let right_of_head = col > a || col > b;
            let left_of_head = col < a || col < b;
            if (left_of_head && t.color != Color::Blue) || (right_of_head && t.color != Color::Red) {
                return false;
            }
        }
    }
    true
}

/// Legality of a square whose other column is the side border: a head may
/// neither move into the border nor appear as if it came out of it.
fn border_square_legal(lower: L1Tile, upper: L1Tile, left_side: bool) -> bool {
    let (_, arr) = machine();
    let toward_border = if left_side { Move::L } else { Move::R };
    let from_inside = if left_side { Move::L } else { Move::R };
    match (lower.state, upper.state) {
        (Some(q), _) => delta(q, lower.sym).map_or(true, |(_, _, m)| m != toward_border),
        (None, Some(q)) => arr[q as usize] == Some(from_inside),
        (None, None) => true,
    }
}

/// Illegal squares between `lower` and `upper`; positions are the grid
/// column of each square's left tile, so 0 is the square on the left border.
pub fn illegal_squares(lower: &[L1Tile], upper: &[L1Tile], width: usize) -> Vec<usize> {
    let mut out = Vec::new();
    if width > 0 && !border_square_legal(at(lower, 0), at(upper, 0), true) {
        out.push(0);
    }
    // beyond both trimmed prefixes every square is the legal (#, #) copy
    let span = (lower.len().max(upper.len()) + 1).min(width.saturating_sub(1));
    out.extend(
        (0..span)
            .filter(|&c| !square_legal(at(upper, c), at(upper, c + 1), at(lower, c), at(lower, c + 1)))
            .map(|c| c + 1),
    );
    if width > 0 && !border_square_legal(at(lower, width - 1), at(upper, width - 1), false) {
        out.push(width);
    }
    out
}

pub fn v_cost(lower: &[L1Tile], upper: &[L1Tile], width: usize) -> usize {
    illegal_squares(lower, upper, width).len()
}

/// The unique fault-free successor of a valid row.
pub fn next_row(row: &[L1Tile], width: usize) -> Result<Vec<L1Tile>> {
    if let Err(p) = check_valid_row(row, width) {
        return Err(Error::Precondition(format!("row is not valid (illegal pair at {p})")));
    }
    next_row_unchecked(row, width)
        .ok_or_else(|| Error::Precondition("head would leave the grid".into()))
}

/// Applies the head's rule without checking validity. Returns `None` if the
/// row has no head, the head has no rule or it would leave the grid.
fn next_row_unchecked(row: &[L1Tile], width: usize) -> Option<Vec<L1Tile>> {
    let c = row.iter().position(|t| t.state.is_some())?;
    let mut out = row.to_vec();
    apply_head(&mut out, c, width)?;
    Some(trim(out))
}

/// Applies the rule of the head at `c` in place.
fn apply_head(out: &mut Vec<L1Tile>, c: usize, width: usize) -> Option<()> {
    let t = out[c];
    let (q2, w, m) = delta(t.state?, t.sym)?;
    let color = match (w.colored(), m) {
        (false, _) => Color::None,
        (true, Move::L) => Color::Red,
        (true, _) => Color::Blue,
    };
    out[c] = L1Tile { sym: w, state: None, color };
    let nc = c as isize + m.delta();
    if nc < 0 || nc as usize >= width {
        return None;
    }
    let nc = nc as usize;
    if nc >= out.len() {
        out.resize(nc + 1, L1Tile::HASH);
    }
    out[nc] = L1Tile::head(q2, out[nc].sym);
    Some(())
}

/// Greedy continuation of an arbitrary row: every head applies its rule
/// where it has one and stays put otherwise. Used to extend a tiling above
/// an injected fault.
pub fn greedy_step(row: &[L1Tile], width: usize) -> Vec<L1Tile> {
    let mut out = row.to_vec();
    let mut placed = Vec::new();
    for (c, t) in row.iter().enumerate() {
        let Some(q) = t.state else { continue };
        let Some((q2, w, m)) = delta(q, t.sym) else {
            placed.push((c, q));
            continue;
        };
        let color = match (w.colored(), m) {
            (false, _) => Color::None,
            (true, Move::L) => Color::Red,
            (true, _) => Color::Blue,
        };
        out[c] = L1Tile { sym: w, state: None, color };
        let nc = c as isize + m.delta();
        if nc >= 0 && (nc as usize) < width {
            placed.push((nc as usize, q2));
        }
    }
    for (c, q) in placed {
        if c >= out.len() {
            out.resize(c + 1, L1Tile::HASH);
        }
        out[c] = L1Tile::head(q, out[c].sym);
    }
    trim(out)
}

/// Rows `r_1 ..= r_{n-2}` of a Layer-1 tiling.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layer1Tiling {
    pub n: usize,
    pub rows: Vec<Vec<L1Tile>>,
}

impl Layer1Tiling {
    pub fn width(&self) -> usize {
        self.n - 2
    }

    /// Row `r_t` for `1 <= t <= n - 2`.
    pub fn row(&self, t: usize) -> &[L1Tile] {
        &self.rows[t - 1]
    }

    pub fn last(&self) -> &[L1Tile] {
        self.rows.last().expect("at least one row")
    }
}

pub fn start_row() -> Vec<L1Tile> {
    vec![L1Tile::tape(Sym::Lt), L1Tile::head(State::E2, Sym::Hash)]
}

/// Fault-free tiling of an `n x n` grid.
pub fn simulate_layer1(n: usize) -> Result<Layer1Tiling> {
    if n < 5 {
        return Err(Error::Precondition(format!("n = {n} is below the minimum of 5")));
    }
    let width = n - 2;
    let mut rows = Vec::with_capacity(n - 2);
    rows.push(start_row());
    for _ in 1..n - 2 {
        let next = next_row(rows.last().unwrap(), width)?;
        rows.push(next);
    }
    Ok(Layer1Tiling { n, rows })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Interval {
    /// Grid column of the left heavy tile.
    pub start: usize,
    /// Grid column of the right heavy tile.
    pub end: usize,
    pub size: usize,
}

pub fn weight(row: &[L1Tile]) -> usize {
    row.iter().map(|t| t.weight() as usize).sum()
}

pub fn intervals(row: &[L1Tile]) -> Vec<Interval> {
    let mut out = Vec::new();
    let mut prev: Option<usize> = None;
    for (i, t) in row.iter().enumerate() {
        let w = t.weight();
        if w == 0 {
            continue;
        }
        let col = i + 1;
        if let Some(p) = prev {
            out.push(Interval { start: p, end: col, size: col - p + 1 });
        }
        if w == 2 {
            out.push(Interval { start: col, end: col, size: 1 });
        }
        prev = Some(col);
    }
    out
}

pub fn sizes(row: &[L1Tile]) -> Vec<usize> {
    intervals(row).iter().map(|i| i.size).collect()
}

/// Number of tiles that are not plain `#`.
pub fn length(row: &[L1Tile]) -> usize {
    row.iter().filter(|t| !t.is_plain_hash()).count()
}

/// Steps of one outer-loop iteration as given by the interval sizes.
pub fn x_value(sizes: &[usize]) -> u128 {
    sizes.iter().enumerate().map(|(j, &s)| 2 * (j as u128 + 1) * (s as u128 - 1) + 1).sum()
}

/// Deviation of a size sequence from the ideal `(m+1, m, ..., 2)`.
pub fn a_value(sizes: &[usize]) -> u64 {
    let Some(&last) = sizes.last() else { return 0 };
    let pairs: u64 = sizes.windows(2).map(|w| (w[0] as i64 - w[1] as i64 - 1).unsigned_abs()).sum();
    pairs + (last as i64 - 2).unsigned_abs()
}

/// Sum of `x_value` over the ideal sequences with 1 to `m - 1` intervals.
pub fn f_value(m: u64) -> u128 {
    let m = m as u128;
    if m == 0 {
        return 0;
    }
    (m - 1) * m * (m + 1) * (m + 2) / 12 + (m - 1) * m / 2
}

/// Row index of the `m`-th end row in a fault-free tiling. Consecutive end
/// rows are `x_value + 1` apart.
pub fn end_row_index(m: u64) -> u128 {
    1 + f_value(m) + (m as u128).saturating_sub(1)
}

/// Interval count of the last row of a fault-free `n x n` tiling.
pub fn mu(n: u64) -> Result<u64> {
    if n < 5 {
        return Err(Error::Precondition(format!("n = {n} is below the minimum of 5")));
    }
    let target = n as u128 - 2;
    let (mut lo, mut hi) = (1u64, 2u64);
    while end_row_index(hi) <= target {
        hi *= 2;
    }
    // invariant: end_row_index(lo) <= target < end_row_index(hi)
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if end_row_index(mid) <= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// End row: valid with the head in the final wind-down state.
pub fn is_end_row(row: &[L1Tile], width: usize) -> bool {
    row.iter().any(|t| t.state == Some(State::E2)) && is_valid_row(row, width)
}

/// Per-row `(h, v)` for `r_0 ..= r_{n-1}`.
pub fn row_costs(tiling: &Layer1Tiling) -> Vec<(usize, usize)> {
    let w = tiling.width();
    let mut out = vec![(0, 0); tiling.n];
    out[0].1 = init_cost(tiling.row(1), w);
    for t in 1..=tiling.n - 2 {
        out[t].0 = h_cost(tiling.row(t), w);
        if t + 1 <= tiling.n - 2 {
            out[t].1 = v_cost(tiling.row(t), tiling.row(t + 1), w);
        }
    }
    out
}

/// Row costs reusing a reference tiling's costs wherever the relevant rows
/// coincide.
pub fn row_costs_against(tiling: &Layer1Tiling, base: &Layer1Tiling, base_costs: &[(usize, usize)]) -> Vec<(usize, usize)> {
    let w = tiling.width();
    let same = |t: usize| tiling.row(t) == base.row(t);
    let mut out = vec![(0, 0); tiling.n];
    out[0].1 = if same(1) { base_costs[0].1 } else { init_cost(tiling.row(1), w) };
    for t in 1..=tiling.n - 2 {
        let s0 = same(t);
        out[t].0 = if s0 { base_costs[t].0 } else { h_cost(tiling.row(t), w) };
        if t + 1 <= tiling.n - 2 {
            out[t].1 = if s0 && same(t + 1) {
                base_costs[t].1
            } else {
                v_cost(tiling.row(t), tiling.row(t + 1), w)
            };
        }
    }
    out
}

pub fn total_faults(costs: &[(usize, usize)]) -> usize {
    costs.iter().map(|(h, v)| h + v).sum()
}

/// Number of positions where two rows differ.
pub fn row_distance(a: &[L1Tile], b: &[L1Tile]) -> usize {
    (0..a.len().max(b.len())).filter(|&i| at(a, i) != at(b, i)).count()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AnnotatedInterval {
    pub start: usize,
    pub end: usize,
    pub size: usize,
    pub clean: bool,
    pub tag: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct RowAnnotation {
    pub intervals: Vec<AnnotatedInterval>,
}

impl RowAnnotation {
    pub fn clean(&self) -> impl Iterator<Item = &AnnotatedInterval> {
        self.intervals.iter().filter(|i| i.clean)
    }

    pub fn clean_sizes(&self) -> Vec<usize> {
        self.clean().map(|i| i.size).collect()
    }

    pub fn tags(&self) -> BTreeSet<usize> {
        self.clean().filter_map(|i| i.tag).collect()
    }

    /// Potential over the clean interval sizes.
    pub fn a(&self) -> u64 {
        a_value(&self.clean_sizes())
    }
}

fn designate(row: &[L1Tile], reference: &[L1Tile], ref_ann: &[AnnotatedInterval]) -> RowAnnotation {
    let by_span: HashMap<(usize, usize), &AnnotatedInterval> = ref_ann.iter().map(|a| ((a.start, a.end), a)).collect();
    let intervals = intervals(row)
        .into_iter()
        .map(|iv| {
            let diff = (iv.start..=iv.end).any(|col| at(row, col - 1) != at(reference, col - 1));
            let matched = if diff { None } else { by_span.get(&(iv.start, iv.end)) };
            match matched {
                Some(r) => AnnotatedInterval { start: iv.start, end: iv.end, size: iv.size, clean: r.clean, tag: r.tag },
                None => AnnotatedInterval { start: iv.start, end: iv.end, size: iv.size, clean: false, tag: None },
            }
        })
        .collect();
    RowAnnotation { intervals }
}

/// Comparison row used when tagging `r_t`, with its designations. Returns
/// `(row, annotation, from_successor)`.
fn comparison(
    tiling: &Layer1Tiling,
    t: usize,
    prev_ann: &RowAnnotation,
    valid_prev: bool,
) -> (Vec<L1Tile>, Vec<AnnotatedInterval>, bool) {
    let w = tiling.width();
    if t == 1 {
        let r = start_row();
        let iv = intervals(&r)[0];
        let ann = AnnotatedInterval { start: iv.start, end: iv.end, size: iv.size, clean: true, tag: Some(1) };
        return (r, vec![ann], false);
    }
    let prev = tiling.row(t - 1);
    if valid_prev {
        if let Some(nr) = next_row_unchecked(prev, w) {
            let ivs = intervals(&nr);
            let ann = ivs
                .iter()
                .enumerate()
                .map(|(j, iv)| match prev_ann.intervals.get(j) {
                    Some(p) => AnnotatedInterval { start: iv.start, end: iv.end, size: iv.size, clean: p.clean, tag: p.tag },
                    None if j == prev_ann.intervals.len() => {
                        AnnotatedInterval { start: iv.start, end: iv.end, size: iv.size, clean: true, tag: Some(t) }
                    }
                    None => AnnotatedInterval { start: iv.start, end: iv.end, size: iv.size, clean: false, tag: None },
                })
                .collect();
            return (nr, ann, true);
        }
    }
    (prev.to_vec(), prev_ann.intervals.clone(), false)
}

/// Clean/corrupt designation and tags for every row `r_1 ..= r_{n-2}`
/// (index `t - 1`).
pub fn tag_clean_corrupt(tiling: &Layer1Tiling) -> Vec<RowAnnotation> {
    let w = tiling.width();
    let mut out: Vec<RowAnnotation> = Vec::with_capacity(tiling.rows.len());
    let empty = RowAnnotation::default();
    for t in 1..=tiling.n - 2 {
        let prev_ann = if t >= 2 { &out[t - 2] } else { &empty };
        let valid_prev = t >= 2 && is_valid_row(tiling.row(t - 1), w);
        let (cmp, ann, _) = comparison(tiling, t, prev_ann, valid_prev);
        let a = designate(tiling.row(t), &cmp, &ann);
        out.push(a);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Segment {
    pub first: usize,
    pub last: usize,
    pub complete: bool,
    /// False for a tail that reaches the last row without an end row or a
    /// costly row.
    pub closed: bool,
}

pub fn segment_decomposition(tiling: &Layer1Tiling, costs: &[(usize, usize)]) -> Vec<Segment> {
    let w = tiling.width();
    let c = |t: usize| costs[t].0 + costs[t].1;
    let mut segs = vec![Segment { first: 0, last: 1, complete: c(0) == 0 && c(1) == 0, closed: true }];
    let last_row = tiling.n - 2;
    let mut t = 2;
    while t <= last_row {
        let first = t;
        let mut end = None;
        while t <= last_row {
            if c(t) > 0 || is_end_row(tiling.row(t), w) {
                end = Some(t);
                break;
            }
            t += 1;
        }
        let prev_last = segs.last().unwrap().last;
        match end {
            Some(e) => {
                segs.push(Segment { first, last: e, complete: c(e) == 0 && c(prev_last) == 0, closed: true });
                t = e + 1;
            }
            None => segs.push(Segment { first, last: last_row, complete: false, closed: false }),
        }
    }
    segs
}

/// The four shape properties of fault-free interval sizes during the `m`-th
/// outer-loop iteration. Returns the list of violated property numbers.
pub fn error_free_size_violations(sizes: &[usize], m: usize) -> Vec<u8> {
    let mut bad = Vec::new();
    if sizes.windows(2).any(|w| w[0] < w[1]) {
        bad.push(1);
    }
    let mut counts: HashMap<usize, usize> = HashMap::new();
    for &s in sizes {
        *counts.entry(s).or_default() += 1;
    }
    let max = sizes.iter().copied().max().unwrap_or(0);
    if counts.values().any(|&c| c > 2) || counts.get(&max).copied().unwrap_or(0) > 1 {
        bad.push(2);
    }
    if sizes.iter().any(|&s| s < 1 || s > m + 2) {
        bad.push(3);
    }
    let missing = (2..=m + 2).filter(|s| !counts.contains_key(s)).count();
    if missing > 2 {
        bad.push(4);
    }
    bad
}

/// Raw configuration without colors, for long fault-free runs.
#[derive(Debug, Clone)]
pub struct RawConfig {
    pub tape: Vec<Sym>,
    pub head: usize,
    pub state: State,
}

impl RawConfig {
    pub fn step(&mut self) -> bool {
        let Some((q, w, m)) = delta(self.state, self.tape[self.head]) else { return false };
        self.tape[self.head] = w;
        self.state = q;
        match m {
            Move::L => self.head -= 1,
            Move::R => {
                self.head += 1;
                if self.head == self.tape.len() {
                    self.tape.push(Sym::Hash);
                }
            }
            Move::S => {}
        }
        true
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut prev: Option<usize> = None;
        for (i, &s) in self.tape.iter().enumerate() {
            let w = s.weight() + if i == self.head { self.state.weight() } else { 0 };
            if w == 0 {
                continue;
            }
            if let Some(p) = prev {
                out.push(i - p + 1);
            }
            if w == 2 {
                out.push(1);
            }
            prev = Some(i);
        }
        out
    }

    /// End configuration with the ideal sizes `(m+1, ..., 2)`.
    fn end_config(m: usize) -> Self {
        let mut tape = vec![Sym::Lt];
        for j in 1..m {
            let s = m + 2 - j;
            tape.extend(std::iter::repeat(Sym::B).take(s - 2));
            tape.push(Sym::X);
        }
        tape.push(Sym::Hash);
        let head = tape.len() - 1;
        RawConfig { tape, head, state: State::E2 }
    }

    /// Configuration at the start of inner pass `j` (1-based) of the
    /// iteration that begins with `m` ideal intervals.
    fn pass_config(m: usize, j: usize) -> Self {
        let mut tape = vec![Sym::Lt];
        let mut head = 0;
        for i in 1..=m {
            let s = m + 2 - i + usize::from(i < j);
            if i == j {
                head = tape.len();
            }
            tape.extend(std::iter::repeat(Sym::B).take(s - 2));
            tape.push(if i == m { Sym::Gt } else { Sym::X });
        }
        RawConfig { tape, head, state: State::IS }
    }
}

/// Interval sizes of the last row of a fault-free `n x n` tiling, computed
/// by jumping over whole phases of the outer loop and stepping only through
/// the final partial phase.
pub fn fault_free_final_sizes(n: u64) -> Result<Vec<usize>> {
    let m = mu(n)? as usize;
    let mut offset = n as u128 - 2 - end_row_index(m as u64);
    let ideal: Vec<u128> = (1..=m).map(|j| (m + 2 - j) as u128).collect();
    let run = |mut c: RawConfig, steps: u128| {
        for _ in 0..steps {
            c.step();
        }
        c.sizes()
    };
    let total: u128 = 1 + ideal.iter().map(|s| s - 1).sum::<u128>();
    if offset < total {
        return Ok(run(RawConfig::end_config(m), offset));
    }
    offset -= total;
    for j in 1..m {
        let tail: u128 = ideal[j..].iter().map(|s| s - 1).sum();
        let len = ideal[j - 1] + 2 * tail;
        if offset < len {
            return Ok(run(RawConfig::pass_config(m, j), offset));
        }
        offset -= len;
    }
    Ok(run(RawConfig::pass_config(m, m), offset))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn row(s: &str) -> Vec<L1Tile> {
        parse_row(s).unwrap()
    }

    #[test]
    fn machine_table_entries() {
        assert_eq!(delta(State::IS, Sym::X), Some((State::WXBar, Sym::B, Move::R)));
        assert_eq!(delta(State::E1, Sym::Hash), Some((State::E2, Sym::X, Move::R)));
        assert_eq!(delta(State::WGt, Sym::X), None);
        let tm = layer1_machine();
        assert!(tm.is_normalized());
        assert_eq!(tm.rules().count(), 5 + 5 + 5 + 3 * 5 + 3);
    }

    #[test]
    fn alphabet_has_63_tiles() {
        let a = alphabet();
        assert_eq!(a.len(), 63);
        for t in a {
            assert_eq!(L1Tile::parse(&t.to_string()).unwrap(), t);
        }
    }

    #[test]
    fn valid_row_examples() {
        assert!(is_valid_row(&start_row(), 10));
        assert!(!is_valid_row(&row("⊲ B:b X:b ⊳"), 10));
        assert!(!is_valid_row(&row("⊲ q_IS/B B:b ⊳"), 10));
        assert!(is_valid_row(&row("⊲ q_IS/B B:r ⊳"), 10));
        assert!(is_valid_row(&row("⊲ B:b q_IS/X B:r X:r ⊳"), 10));
    }

    #[test]
    fn next_row_examples() {
        let r = next_row(&start_row(), 10).unwrap();
        assert_eq!(r, row("q_OS/⊲ ⊳"));
        let r = row("⊲ q_IS/B B:r X:r ⊳");
        assert_eq!(next_row(&r, 10).unwrap(), row("⊲ B:b q_IS/B X:r ⊳"));
        assert!(next_row(&row("⊲ B:b"), 10).is_err());
    }

    #[test]
    fn next_row_matches_generic_step() {
        let tm = layer1_machine();
        let t = simulate_layer1(60).unwrap();
        for r in 1..t.rows.len() {
            let cur = t.row(r);
            let head = cur.iter().position(|x| x.state.is_some()).unwrap();
            let cfg = tm::TmConfiguration {
                tape: cur.iter().map(|x| x.sym as usize).collect(),
                head,
                state: cur[head].state.unwrap() as usize,
            };
            let tm::Step::Moved(nc) = tm::tm_step(&tm, &cfg) else { panic!("halted") };
            let nxt = t.row(r + 1);
            let syms: Vec<usize> = (0..nc.tape.len()).map(|i| at(nxt, i).sym as usize).collect();
            assert_eq!(syms, nc.tape);
            assert_eq!(nxt.iter().position(|x| x.state.is_some()), Some(nc.head));
            // colours: blue left of the head, red right of it
            for (i, x) in nxt.iter().enumerate() {
                if x.color != Color::None {
                    assert_eq!(x.color, if i < nc.head { Color::Blue } else { Color::Red });
                }
            }
        }
    }

    #[test]
    fn small_runs() {
        let t = simulate_layer1(5).unwrap();
        assert_eq!(sizes(t.last()), vec![2]);
        let t = simulate_layer1(18).unwrap();
        assert_eq!(format_row(t.row(16)), "⊲ B:b B:b X:b B:b X:b q_e2/#");
        assert_eq!(sizes(t.row(16)), vec![4, 3, 2]);
    }

    #[test]
    fn interval_examples() {
        assert_eq!(sizes(&row("⊲ B:b B:b X:r B:r ⊳")), vec![4, 3]);
        let r = row("⊲ B:b q_wX/X B:r ⊳");
        let iv = intervals(&r);
        assert_eq!(iv.len(), weight(&r) - 1);
        assert!(iv.contains(&Interval { start: 3, end: 3, size: 1 }));
    }

    #[test]
    fn x_and_a_examples() {
        assert_eq!(x_value(&[2]), 3);
        assert_eq!(x_value(&[3, 2]), 10);
        assert_eq!(x_value(&[5, 4, 3, 2]), 44);
        assert_eq!(a_value(&[5, 4, 3, 2]), 0);
        assert_eq!(a_value(&[4, 4, 2]), 2);
        assert_eq!(a_value(&[3, 3, 3]), 3);
        assert_eq!(a_value(&[]), 0);
    }

    #[test]
    fn f_matches_direct_sum() {
        for m in 1..40u64 {
            let direct: u128 = (1..m).map(|t| x_value(&(0..t).map(|j| (t + 1 - j) as usize).collect::<Vec<_>>())).sum();
            assert_eq!(f_value(m), direct);
        }
    }

    #[test]
    fn mu_small_values() {
        assert_eq!(mu(6).unwrap(), 1);
        assert_eq!(mu(7).unwrap(), 2);
        assert_eq!(mu(11).unwrap(), 2);
        assert_eq!(mu(16).unwrap(), 2);
        assert_eq!(mu(18).unwrap(), 3);
        assert!(mu(4).is_err());
    }

    #[test]
    fn fault_free_rows_cost_nothing() {
        let t = simulate_layer1(200).unwrap();
        let costs = row_costs(&t);
        assert_eq!(total_faults(&costs), 0);
        let ann = tag_clean_corrupt(&t);
        for (i, a) in ann.iter().enumerate() {
            assert!(a.intervals.iter().all(|x| x.clean));
            let tags = a.tags();
            assert_eq!(tags.len(), a.intervals.len());
            assert!(tags.iter().all(|&g| g <= i + 1));
        }
        assert_eq!(ann[0].intervals[0].tag, Some(1));
    }

    #[test]
    fn flipped_tape_tile_costs_above_and_below() {
        let mut t = simulate_layer1(40).unwrap();
        let r = 20;
        let head = t.row(r).iter().position(|x| x.state.is_some()).unwrap();
        let c = (0..t.row(r).len()).find(|&i| i + 2 < head || i > head + 2).filter(|&i| t.row(r)[i].sym.colored()).unwrap_or(1);
        let old = t.rows[r - 1][c];
        let flipped = if old.sym == Sym::X { Sym::B } else { Sym::X };
        t.rows[r - 1][c] = L1Tile { sym: flipped, ..old };
        let costs = row_costs(&t);
        assert!(costs[r - 1].1 >= 1 && costs[r].1 >= 1);
    }

    #[test]
    fn segments_fault_free_small() {
        let t = simulate_layer1(18).unwrap();
        let costs = row_costs(&t);
        let segs = segment_decomposition(&t, &costs);
        let complete = segs.iter().filter(|s| s.complete).count();
        assert_eq!(complete as u64, mu(18).unwrap());
    }

    #[test]
    fn raw_model_matches_simulation() {
        let t = simulate_layer1(1500).unwrap();
        for n in 5..=1500u64 {
            assert_eq!(fault_free_final_sizes(n).unwrap(), sizes(t.row(n as usize - 2)), "n = {n}");
        }
    }

    fn random_valid_row(rng: &mut ChaCha8Rng, width: usize) -> Vec<L1Tile> {
        let left: Vec<Sym> = vec![Sym::X, Sym::B, Sym::XBar];
        let nb = rng.gen_range(0..4);
        let nr = rng.gen_range(0..4);
        let mut r = vec![L1Tile::tape(Sym::Lt)];
        let heads = [State::OS, State::Left, State::IS, State::WXBar, State::WX, State::WB];
        for _ in 0..nb {
            r.push(L1Tile::colored(left[rng.gen_range(0..3)], Color::Blue));
        }
        match rng.gen_range(0..3) {
            0 => {
                r.push(L1Tile::head(heads[rng.gen_range(0..6)], left[rng.gen_range(0..3)]));
                for _ in 0..nr {
                    r.push(L1Tile::colored(left[rng.gen_range(0..3)], Color::Red));
                }
                r.push(L1Tile::tape(Sym::Gt));
            }
            1 => r.push(L1Tile::head(heads[rng.gen_range(0..6)], Sym::Gt)),
            _ => r.push(L1Tile::head([State::E1, State::E2, State::WGt][rng.gen_range(0..3)], Sym::Hash)),
        }
        assert!(r.len() <= width);
        r
    }

    proptest! {
        #[test]
        fn valid_rows_map_to_valid_rows(seed in 0u64..100_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let w = 14;
            let r = random_valid_row(&mut rng, w);
            prop_assert!(is_valid_row(&r, w));
            if let Ok(n) = next_row(&r, w) {
                prop_assert!(is_valid_row(&n, w));
                prop_assert_eq!(n.iter().filter(|t| t.state.is_some()).count(), 1);
                prop_assert_eq!(v_cost(&r, &n, w), 0);
                prop_assert!(weight(&n) >= weight(&r));
            }
        }

        #[test]
        fn weight_is_interval_count_plus_one(seed in 0u64..100_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = alphabet();
            let r: Vec<L1Tile> = (0..rng.gen_range(1..12)).map(|_| a[rng.gen_range(0..a.len())]).collect();
            let w = weight(&r);
            prop_assert_eq!(intervals(&r).len(), w.saturating_sub(1));
        }
    }
}
