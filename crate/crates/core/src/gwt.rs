//! Three-layer composite tiles for the gapped problem.
//!
//! An interior tile stacks a Layer-1 tile, a Layer-2 counter tile and a
//! Layer-3 verifier tile. The perimeter holds one of four border tiles whose
//! position-dependent bonuses and penalties make a border-only perimeter
//! optimal. A square costs `p + f1 + f2 + f3 + r` plus the border
//! adjustments, where `p` flags an illegal Layer-1 pair along the bottom of
//! the square, `f_i` an illegal square of Layer `i` (or of the translation
//! into it) and `r` a rejecting verifier state.
//!
//! Grid rows are numbered bottom-up with the border in row 0 and row
//! `n - 1`. Layer 1 and Layer 3 compute upward; Layer 2 computes downward.

use crate::error::{Error, Result};
use crate::layer1::{self, L1Tile};
use crate::layer2;
use crate::tiling::{CostRules, Grid, TileRuleSet, TileSpec};
use crate::tm::{legal_in_time, next_tm_row, Direction, Move, TmTile, TuringMachine};
use serde::Serialize;

pub const BORDER_C: i64 = 21;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum BorderKind {
    NW,
    NE,
    SE,
    SW,
}

pub const BORDER_KINDS: [BorderKind; 4] = [BorderKind::NW, BorderKind::NE, BorderKind::SE, BorderKind::SW];

impl BorderKind {
    pub fn name(self) -> &'static str {
        match self {
            BorderKind::NW => "□NW",
            BorderKind::NE => "□NE",
            BorderKind::SE => "□SE",
            BorderKind::SW => "□SW",
        }
    }
}

/// Bonus or penalty of the border tiles in a square.
pub fn border_adjustment(
    nw: Option<BorderKind>,
    ne: Option<BorderKind>,
    sw: Option<BorderKind>,
    se: Option<BorderKind>,
    c: i64,
) -> i64 {
    use BorderKind::*;
    let at_nw = match nw {
        Some(NW) => -c,
        Some(SE) => 2 * c,
        _ => 0,
    };
    let at_ne = match ne {
        Some(NE) => -c,
        Some(SW) => 2 * c,
        _ => 0,
    };
    let at_se = match se {
        Some(SE) => -c,
        Some(NW) => 2 * c,
        _ => 0,
    };
    let at_sw = match sw {
        Some(SW) => -c,
        Some(NE) => 2 * c,
        _ => 0,
    };
    at_nw + at_ne + at_se + at_sw
}

/// Border kind placed at `(r, c)` by the canonical perimeter; `None` for
/// interior cells. Every perimeter cell collects exactly one bonus.
pub fn canonical_border(r: usize, c: usize, height: usize, width: usize) -> Option<BorderKind> {
    let (top, right) = (height - 1, width - 1);
    if r == top {
        Some(if c == right { BorderKind::NE } else { BorderKind::NW })
    } else if r == 0 {
        Some(if c == 0 { BorderKind::SW } else { BorderKind::SE })
    } else if c == right {
        Some(BorderKind::NE)
    } else if c == 0 {
        Some(BorderKind::SW)
    } else {
        None
    }
}

/// Adds the four border tiles to a rule set. Squares containing a border
/// tile cost only their adjustment; pairs with a border tile cost nothing.
pub fn border_cost_gadget(rules: &TileRuleSet) -> Result<TileRuleSet> {
    let d = rules.size();
    let mut specs: Vec<TileSpec> = rules.tiles().to_vec();
    for k in BORDER_KINDS {
        specs.push(TileSpec { name: k.name().into(), layers: vec![], border: true });
    }
    let mut out = TileRuleSet::new(specs, rules.layer_count())?;
    for a in 0..d as u32 {
        for b in 0..d as u32 {
            out.set_h(a, b, rules.h(a, b));
            out.set_v(a, b, rules.v(a, b));
        }
    }
    for (k, c) in rules.square_entries() {
        out.set_sq(k, c);
    }
    let n = (d + 4) as u32;
    let kind = |t: u32| (t as usize >= d).then(|| BORDER_KINDS[t as usize - d]);
    for nw in 0..n {
        for ne in 0..n {
            for sw in 0..n {
                for se in 0..n {
                    if [nw, ne, sw, se].iter().all(|&t| (t as usize) < d) {
                        continue;
                    }
                    let adj = border_adjustment(kind(nw), kind(ne), kind(sw), kind(se), BORDER_C);
                    out.set_sq([nw, ne, sw, se], adj);
                }
            }
        }
    }
    Ok(out)
}

/// Layer-3 alphabet: the Layer-2 symbols plus two witness symbols.
pub const L3_SYMBOLS: [&str; 9] = ["S", "0", "1", "B", "T", "X", "#", "W0", "W1"];
pub const W0: usize = 7;
pub const W1: usize = 8;

/// A verifier prepared for Layer 3: idles on `T` in every state and is
/// direction-unique. `s1` is the idle start state, `s2` the working one.
#[derive(Debug, Clone)]
pub struct Verifier {
    pub tm: TuringMachine,
    pub arrival: Vec<Option<Move>>,
    pub s1: usize,
    pub s2: usize,
    pub rejecting: Vec<bool>,
}

impl Verifier {
    /// `tm` must use the Layer-3 alphabet in order and contain the states
    /// `s1` and `s2`; states whose names start with `rej` reject. Idle loops
    /// on `T` are added and the result is normalized.
    pub fn new(tm: &TuringMachine) -> Result<Self> {
        if tm.alphabet != L3_SYMBOLS {
            return Err(Error::Precondition("verifier must use the Layer-3 alphabet".into()));
        }
        let mut tm = tm.clone();
        tm.direction = Direction::Up;
        let t = layer2::T;
        for q in 0..tm.states.len() {
            tm.set_rule(q, t, Some(crate::tm::Rule { next: q, write: t, mv: Move::S }));
        }
        let rejecting_raw: Vec<bool> = tm.states.iter().map(|s| s.starts_with("rej")).collect();
        let (s1_raw, s2_raw) = (tm.state("s1")?, tm.state("s2")?);
        let (tm, origin) = crate::tm::normalize_with_origin(&tm);
        let arrival = tm.arrival_map()?;
        let first_copy = |q: usize| (0..origin.len()).find(|&i| origin[i] == q).expect("every state has a copy");
        let (s1, s2) = (first_copy(s1_raw), first_copy(s2_raw));
        let rejecting = origin.iter().map(|&q| rejecting_raw[q]).collect();
        Ok(Verifier { tm, arrival, s1, s2, rejecting })
    }

    fn is_rejecting(&self, t: TmTile) -> bool {
        matches!(t, TmTile::Head(q, _) if self.rejecting[q])
    }
}

/// Toy verifier accepting iff the input ends in 1; the witness is ignored.
pub fn ends_in_one_verifier() -> Verifier {
    let states = ["s1", "s2", "scan", "back", "check", "acc", "rej"];
    let mut tm = TuringMachine::new(&states, &L3_SYMBOLS, "B", Direction::Up).expect("blank present");
    let rules: [(&str, &str, &str, &str, Move); 12] = [
        ("s2", "S", "scan", "S", Move::R),
        ("scan", "0", "scan", "0", Move::R),
        ("scan", "1", "scan", "1", Move::R),
        ("scan", "B", "back", "B", Move::L),
        ("scan", "W0", "back", "W0", Move::L),
        ("scan", "W1", "back", "W1", Move::L),
        ("back", "1", "check", "1", Move::L),
        ("back", "0", "check", "0", Move::L),
        ("check", "1", "acc", "1", Move::S),
        ("check", "0", "rej", "0", Move::S),
        ("check", "S", "rej", "S", Move::S),
        ("acc", "1", "acc", "1", Move::S),
    ];
    for (q, a, p, b, m) in rules {
        tm.add(q, a, p, b, m).expect("names valid");
    }
    tm.add("rej", "0", "rej", "0", Move::S).expect("names valid");
    tm.add("rej", "S", "rej", "S", Move::S).expect("names valid");
    Verifier::new(&tm).expect("well formed")
}

/// Translation of one Layer-2 tile into Layer 3.
pub fn l3_translation_ok(v: &Verifier, l2: TmTile, l3: TmTile) -> bool {
    match (l2, l3) {
        (TmTile::Tape(layer2::B), TmTile::Tape(s)) => s == layer2::B || s == W0 || s == W1,
        (TmTile::Tape(a), TmTile::Tape(b)) => a == b,
        (TmTile::Head(_, layer2::T), TmTile::Head(q, s)) => q == v.s1 && s == layer2::T,
        (TmTile::Head(_, c), TmTile::Head(q, s)) => q == v.s2 && s == c,
        (TmTile::Border, TmTile::Border) => true,
        _ => false,
    }
}

/// Canonical Layer-3 start row: heads become `s1` on `T` and `s2`
/// elsewhere, and `witness` is written into the blanks after the counter in
/// every `s2` strip.
pub fn translate_l2_to_l3(v: &Verifier, l2_last: &[TmTile], witness: &[bool]) -> Vec<TmTile> {
    let mut out: Vec<TmTile> = l2_last
        .iter()
        .map(|&t| match t {
            TmTile::Head(_, layer2::T) => TmTile::Head(v.s1, layer2::T),
            TmTile::Head(_, c) => TmTile::Head(v.s2, c),
            t => t,
        })
        .collect();
    for (i, t) in l2_last.iter().enumerate() {
        if !matches!(t, TmTile::Head(_, c) if *c != layer2::T) {
            continue;
        }
        let mut j = i + 1;
        while j < out.len() && matches!(out[j], TmTile::Tape(layer2::ZERO | layer2::ONE)) {
            j += 1;
        }
        for &bit in witness {
            if j >= out.len() || out[j] != TmTile::Tape(layer2::B) {
                break;
            }
            out[j] = TmTile::Tape(if bit { W1 } else { W0 });
            j += 1;
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GwtTile {
    Border(BorderKind),
    Interior { l1: L1Tile, l2: TmTile, l3: TmTile },
}

impl GwtTile {
    fn border(self) -> Option<BorderKind> {
        match self {
            GwtTile::Border(k) => Some(k),
            _ => None,
        }
    }

    fn layers(self) -> Option<(L1Tile, TmTile, TmTile)> {
        match self {
            GwtTile::Interior { l1, l2, l3 } => Some((l1, l2, l3)),
            _ => None,
        }
    }
}

/// Per-square weights. The gapped problem uses all ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SquareWeights {
    pub p: i64,
    pub f1: i64,
    pub f2: i64,
    pub f3: i64,
    pub r: i64,
    pub border_c: i64,
}

impl SquareWeights {
    pub const GAPPED: SquareWeights = SquareWeights { p: 1, f1: 1, f2: 1, f3: 1, r: 1, border_c: BORDER_C };
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct SquareFlags {
    pub p: bool,
    pub f1: bool,
    pub f2: bool,
    pub f3: bool,
    pub r: bool,
}

#[derive(Clone, Copy)]
enum Side {
    Left,
    Right,
}

/// Whether a single column next to the border can be part of a legal
/// square: some tape column on the border side makes it legal.
fn tm_column_legal(tm: &TuringMachine, arr: &[Option<Move>], top: TmTile, bottom: TmTile, side: Side) -> bool {
    let (later, earlier) = match tm.direction {
        Direction::Up => (top, bottom),
        Direction::Down => (bottom, top),
    };
    (0..tm.alphabet.len()).any(|x| {
        let x = TmTile::Tape(x);
        match side {
            Side::Left => legal_in_time(tm, arr, x, later, x, earlier),
            Side::Right => legal_in_time(tm, arr, later, x, earlier, x),
        }
    })
}

fn l1_column_legal(top: L1Tile, bottom: L1Tile, side: Side) -> bool {
    layer1::alphabet().into_iter().filter(|t| t.state.is_none()).any(|t| match side {
        Side::Left => layer1::square_legal(t, top, t, bottom),
        Side::Right => layer1::square_legal(top, t, bottom, t),
    })
}

/// Cost model of the composite tiling.
pub struct GwtCost<'a> {
    pub verifier: &'a Verifier,
    pub weights: SquareWeights,
}

impl<'a> GwtCost<'a> {
    pub fn new(verifier: &'a Verifier) -> Self {
        GwtCost { verifier, weights: SquareWeights::GAPPED }
    }

    /// Fault flags of one square, ignoring border adjustments.
    pub fn flags(&self, nw: GwtTile, ne: GwtTile, sw: GwtTile, se: GwtTile) -> SquareFlags {
        let v = self.verifier;
        let cnt = &layer2::counter();
        let l1_trans = |t: (L1Tile, TmTile, TmTile)| layer2::first_row_tile_ok(t.0, t.1);
        let l3_trans = |t: (L1Tile, TmTile, TmTile)| l3_translation_ok(v, t.1, t.2);
        let mut f = SquareFlags {
            r: [nw, ne, sw, se].iter().any(|t| t.layers().is_some_and(|l| v.is_rejecting(l.2))),
            ..Default::default()
        };
        let q = [nw.layers(), ne.layers(), sw.layers(), se.layers()];
        match q {
            [Some(a), Some(b), Some(c), Some(d)] => {
                f.p = !layer1::pair_legal(Some(c.0), Some(d.0));
                f.f1 = !layer1::square_legal(a.0, b.0, c.0, d.0);
                f.f2 = !legal_in_time(&cnt.tm, &cnt.arrival, c.1, d.1, a.1, b.1);
                f.f3 = !legal_in_time(&v.tm, &v.arrival, a.2, b.2, c.2, d.2);
            }
            // top edge and corners: translation into Layer 2
            [None, None, c, d] if c.is_some() || d.is_some() => {
                f.p = !layer1::pair_legal(c.map(|t| t.0), d.map(|t| t.0));
                f.f2 = !(c.map_or(true, l1_trans)
                    && d.map_or(true, l1_trans)
                    && layer2::first_row_pair_legal(c.map(|t| t.1), d.map(|t| t.1)));
            }
            // bottom edge and corners: Layer-1 start row, translation into Layer 3
            [a, b, None, None] if a.is_some() || b.is_some() => {
                f.f1 = !layer1::init_pair_legal(a.map(|t| t.0), b.map(|t| t.0));
                f.f3 = !(a.map_or(true, l3_trans) && b.map_or(true, l3_trans));
            }
            [None, Some(b), None, Some(d)] => {
                f.p = !layer1::pair_legal(None, Some(d.0));
                f.f1 = !l1_column_legal(b.0, d.0, Side::Left);
                f.f2 = !tm_column_legal(&cnt.tm, &cnt.arrival, b.1, d.1, Side::Left);
                f.f3 = !tm_column_legal(&v.tm, &v.arrival, b.2, d.2, Side::Left);
            }
            [Some(a), None, Some(c), None] => {
                f.p = !layer1::pair_legal(Some(c.0), None);
                f.f1 = !l1_column_legal(a.0, c.0, Side::Right);
                f.f2 = !tm_column_legal(&cnt.tm, &cnt.arrival, a.1, c.1, Side::Right);
                f.f3 = !tm_column_legal(&v.tm, &v.arrival, a.2, c.2, Side::Right);
            }
            [None, None, None, None] => {}
            _ => {
                f.p = true;
                f.f1 = true;
                f.f2 = true;
                f.f3 = true;
            }
        }
        f
    }

    pub fn weighted(&self, f: SquareFlags) -> i64 {
        let w = self.weights;
        w.p * f.p as i64 + w.f1 * f.f1 as i64 + w.f2 * f.f2 as i64 + w.f3 * f.f3 as i64 + w.r * f.r as i64
    }
}

impl CostRules<GwtTile> for GwtCost<'_> {
    fn horizontal(&self, _: &GwtTile, _: &GwtTile) -> i64 {
        0
    }

    fn vertical(&self, _: &GwtTile, _: &GwtTile) -> i64 {
        0
    }

    fn square(&self, nw: &GwtTile, ne: &GwtTile, sw: &GwtTile, se: &GwtTile) -> i64 {
        let adj = border_adjustment(nw.border(), ne.border(), sw.border(), se.border(), self.weights.border_c);
        self.weighted(self.flags(*nw, *ne, *sw, *se)) + adj
    }
}

/// Sum of border adjustments alone.
pub fn border_contribution(g: &Grid<GwtTile>, c: i64) -> i64 {
    let mut total = 0;
    for r in 0..g.height - 1 {
        for col in 0..g.width - 1 {
            total += border_adjustment(
                g.get(r + 1, col).border(),
                g.get(r + 1, col + 1).border(),
                g.get(r, col).border(),
                g.get(r, col + 1).border(),
                c,
            );
        }
    }
    total
}

/// Per-component fault totals over a grid.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct FaultTotals {
    pub p: usize,
    pub f1: usize,
    pub f2: usize,
    pub f3: usize,
    pub r: usize,
}

pub fn fault_totals(cost: &GwtCost, g: &Grid<GwtTile>) -> FaultTotals {
    let mut t = FaultTotals::default();
    for r in 0..g.height - 1 {
        for c in 0..g.width - 1 {
            let f = cost.flags(*g.get(r + 1, c), *g.get(r + 1, c + 1), *g.get(r, c), *g.get(r, c + 1));
            t.p += f.p as usize;
            t.f1 += f.f1 as usize;
            t.f2 += f.f2 as usize;
            t.f3 += f.f3 as usize;
            t.r += f.r as usize;
        }
    }
    t
}

/// Fault-free composite tiling of the `n x n` grid with the canonical
/// perimeter. `witness` is written into every working verifier strip.
pub fn canonical_grid(n: usize, v: &Verifier, witness: &[bool]) -> Result<Grid<GwtTile>> {
    let l1 = layer1::simulate_layer1(n)?;
    let w = n - 2;
    let first = layer2::translate_l1_to_l2(l1.last(), w);
    let run = layer2::simulate_layer2(&first, n, true)?;
    let l2_rows = run.rows.expect("rows kept");
    let mut l3_rows = vec![translate_l2_to_l3(v, &run.last, witness)];
    for _ in 1..n - 2 {
        let next = next_tm_row(&v.tm, l3_rows.last().unwrap())
            .ok_or_else(|| Error::Precondition("verifier halts inside a strip".into()))?;
        l3_rows.push(next);
    }
    let mut g = Grid::filled(n, n, GwtTile::Border(BorderKind::NW));
    for r in 0..n {
        for c in 0..n {
            let t = match canonical_border(r, c, n, n) {
                Some(k) => GwtTile::Border(k),
                None => GwtTile::Interior {
                    l1: l1.row(r).get(c - 1).copied().unwrap_or(L1Tile::HASH),
                    l2: l2_rows[n - 2 - r][c - 1],
                    l3: l3_rows[r - 1][c - 1],
                },
            };
            g.set(r, c, t);
        }
    }
    Ok(g)
}

/// Minimum Layer-3 cost of one strip over every translation-legal start
/// row. `l2_strip` is the strip's last Layer-2 row from `X` to `X`; the
/// blanks may each become `B`, `W0` or `W1`. Returns the cost of every
/// choice (rejection squares, the computation being fault-free).
pub fn strip_witness_costs(v: &Verifier, l2_strip: &[TmTile], steps: usize) -> Result<Vec<(Vec<TmTile>, usize)>> {
    let base: Vec<TmTile> = l2_strip
        .iter()
        .map(|&t| match t {
            TmTile::Head(_, layer2::T) => TmTile::Head(v.s1, layer2::T),
            TmTile::Head(_, c) => TmTile::Head(v.s2, c),
            t => t,
        })
        .collect();
    let blanks: Vec<usize> = (0..base.len()).filter(|&i| base[i] == TmTile::Tape(layer2::B)).collect();
    let choices = [layer2::B, W0, W1];
    let total = 3usize.pow(blanks.len() as u32);
    let mut out = Vec::with_capacity(total);
    for k in 0..total {
        let mut row = base.clone();
        let mut code = k;
        for &i in &blanks {
            row[i] = TmTile::Tape(choices[code % 3]);
            code /= 3;
        }
        let start = row.clone();
        let mut cost = 0;
        for _ in 0..steps {
            let next = next_tm_row(&v.tm, &row).ok_or_else(|| Error::Precondition("verifier halts".into()))?;
            cost += rejection_squares(v, &row, &next);
            row = next;
        }
        out.push((start, cost));
    }
    Ok(out)
}

fn rejection_squares(v: &Verifier, lower: &[TmTile], upper: &[TmTile]) -> usize {
    (0..lower.len() - 1)
        .filter(|&c| [lower[c], lower[c + 1], upper[c], upper[c + 1]].iter().any(|&t| v.is_rejecting(t)))
        .count()
}

/// Last Layer-2 row of a single strip of the given size after the counter
/// has run for `reduce_input(x) - 3` steps.
pub fn counter_strip(x: &str, size: usize) -> Result<Vec<TmTile>> {
    if size < 4 {
        return Err(Error::Precondition("strip size below 4".into()));
    }
    let n = layer2::reduce_input(x)? as usize;
    let mut first = vec![TmTile::Tape(layer2::X), layer2::start_head()];
    first.extend(std::iter::repeat(TmTile::Tape(layer2::B)).take(size - 4));
    first.extend([TmTile::Tape(layer2::T), TmTile::Tape(layer2::X)]);
    Ok(layer2::simulate_layer2(&first, n, false)?.last)
}
