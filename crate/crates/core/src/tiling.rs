//! Tile alphabets, cost rules and grid evaluation.
//!
//! A [`TileRuleSet`] assigns an integer cost to every horizontally adjacent
//! pair, every vertically adjacent pair and every 2x2 square of tiles.
//! Undeclared entries cost 0. Grids are stored row-major with row 0 at the
//! bottom.
//!
//! [`CostRules`] abstracts over the rule representation so that structured
//! alphabets (the layered composite tiles) can be evaluated without
//! materializing a dense table.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

pub type TileId = u32;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TileSpec {
    pub name: String,
    #[serde(default)]
    pub layers: Vec<String>,
    #[serde(default)]
    pub border: bool,
}

impl TileSpec {
    pub fn plain(name: impl Into<String>) -> Self {
        TileSpec { name: name.into(), layers: Vec::new(), border: false }
    }
}

/// Pair and square costs over a finite alphabet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TileRuleSet {
    tiles: Vec<TileSpec>,
    index: HashMap<String, TileId>,
    h: Vec<i64>,
    v: Vec<i64>,
    squares: HashMap<[TileId; 4], i64>,
    layer_count: usize,
}

impl TileRuleSet {
    pub fn new(tiles: Vec<TileSpec>, layer_count: usize) -> Result<Self> {
        let mut index = HashMap::new();
        for (i, t) in tiles.iter().enumerate() {
            if index.insert(t.name.clone(), i as TileId).is_some() {
                return Err(Error::Parse(format!("duplicate tile name `{}`", t.name)));
            }
            if t.border && !t.layers.is_empty() {
                return Err(Error::Parse(format!("border tile `{}` carries layer ids", t.name)));
            }
            if !t.border && layer_count > 0 && !t.layers.is_empty() && t.layers.len() != layer_count {
                return Err(Error::Parse(format!(
                    "tile `{}` has {} layer ids, expected {}",
                    t.name,
                    t.layers.len(),
                    layer_count
                )));
            }
        }
        let d = tiles.len();
        Ok(TileRuleSet {
            tiles,
            index,
            h: vec![0; d * d],
            v: vec![0; d * d],
            squares: HashMap::new(),
            layer_count: layer_count.max(1),
        })
    }

    /// Alphabet of plain tiles named by the given strings.
    pub fn with_names<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        Self::new(names.iter().map(|n| TileSpec::plain(n.as_ref())).collect(), 1)
    }

    pub fn size(&self) -> usize {
        self.tiles.len()
    }

    pub fn layer_count(&self) -> usize {
        self.layer_count
    }

    pub fn tiles(&self) -> &[TileSpec] {
        &self.tiles
    }

    pub fn name(&self, id: TileId) -> &str {
        &self.tiles[id as usize].name
    }

    pub fn id(&self, name: &str) -> Result<TileId> {
        self.index.get(name).copied().ok_or_else(|| Error::UnknownTile(name.to_string()))
    }

    fn check(&self, id: TileId) -> Result<()> {
        if (id as usize) < self.tiles.len() {
            Ok(())
        } else {
            Err(Error::TileOutOfRange { id: id as usize, size: self.tiles.len() })
        }
    }

    pub fn h(&self, l: TileId, r: TileId) -> i64 {
        self.h[l as usize * self.tiles.len() + r as usize]
    }

    pub fn v(&self, lower: TileId, upper: TileId) -> i64 {
        self.v[lower as usize * self.tiles.len() + upper as usize]
    }

    pub fn sq(&self, nw: TileId, ne: TileId, sw: TileId, se: TileId) -> i64 {
        if self.squares.is_empty() {
            return 0;
        }
        self.squares.get(&[nw, ne, sw, se]).copied().unwrap_or(0)
    }

    pub fn set_h(&mut self, l: TileId, r: TileId, cost: i64) {
        let d = self.tiles.len();
        self.h[l as usize * d + r as usize] = cost;
    }

    pub fn set_v(&mut self, lower: TileId, upper: TileId, cost: i64) {
        let d = self.tiles.len();
        self.v[lower as usize * d + upper as usize] = cost;
    }

    /// Sets a square cost; a zero cost removes the entry.
    pub fn set_sq(&mut self, key: [TileId; 4], cost: i64) {
        if cost == 0 {
            self.squares.remove(&key);
        } else {
            self.squares.insert(key, cost);
        }
    }

    pub fn has_squares(&self) -> bool {
        !self.squares.is_empty()
    }

    /// Nonzero square entries in a deterministic order.
    pub fn square_entries(&self) -> Vec<([TileId; 4], i64)> {
        let mut e: Vec<_> = self.squares.iter().map(|(k, v)| (*k, *v)).collect();
        e.sort_unstable();
        e
    }

    pub fn h_table(&self) -> &[i64] {
        &self.h
    }

    pub fn v_table(&self) -> &[i64] {
        &self.v
    }

    /// Largest absolute value of any single constraint cost.
    pub fn max_abs_cost(&self) -> i64 {
        let pairs = self.h.iter().chain(self.v.iter()).map(|c| c.abs()).max().unwrap_or(0);
        let sq = self.squares.values().map(|c| c.abs()).max().unwrap_or(0);
        pairs.max(sq)
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let file: RuleFile = serde_json::from_str(s)?;
        Self::from_file(file)
    }

    pub fn from_file(file: RuleFile) -> Result<Self> {
        let layer_count = file
            .tiles
            .iter()
            .filter(|t| !t.border)
            .map(|t| t.layers.len())
            .max()
            .unwrap_or(0)
            .max(1);
        let mut rs = TileRuleSet::new(file.tiles, layer_count)?;
        for (a, b, c) in file.horizontal {
            let (a, b) = (rs.id(&a)?, rs.id(&b)?);
            rs.set_h(a, b, c);
        }
        for (a, b, c) in file.vertical {
            let (a, b) = (rs.id(&a)?, rs.id(&b)?);
            rs.set_v(a, b, c);
        }
        for (names, c) in file.squares {
            let mut key = [0; 4];
            for (k, n) in key.iter_mut().zip(names.iter()) {
                *k = rs.id(n)?;
            }
            rs.set_sq(key, c);
        }
        Ok(rs)
    }

    pub fn to_file(&self) -> RuleFile {
        let d = self.size() as TileId;
        let mut horizontal = Vec::new();
        let mut vertical = Vec::new();
        for a in 0..d {
            for b in 0..d {
                if self.h(a, b) != 0 {
                    horizontal.push((self.name(a).to_string(), self.name(b).to_string(), self.h(a, b)));
                }
                if self.v(a, b) != 0 {
                    vertical.push((self.name(a).to_string(), self.name(b).to_string(), self.v(a, b)));
                }
            }
        }
        let squares = self
            .square_entries()
            .into_iter()
            .map(|(k, c)| (k.map(|t| self.name(t).to_string()), c))
            .collect();
        RuleFile { tiles: self.tiles.clone(), horizontal, vertical, squares }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self.to_file()).expect("rule file serializes")
    }
}

/// On-disk rule format.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RuleFile {
    pub tiles: Vec<TileSpec>,
    #[serde(default)]
    pub horizontal: Vec<(String, String, i64)>,
    #[serde(default)]
    pub vertical: Vec<(String, String, i64)>,
    #[serde(default)]
    pub squares: Vec<([String; 4], i64)>,
}

/// Rectangular grid, row 0 at the bottom.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Grid<T> {
    pub height: usize,
    pub width: usize,
    pub cells: Vec<T>,
}

pub type GridTiling = Grid<TileId>;

impl<T: Clone> Grid<T> {
    pub fn filled(height: usize, width: usize, t: T) -> Self {
        Grid { height, width, cells: vec![t; height * width] }
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.len());
        let mut cells = Vec::with_capacity(height * width);
        for (i, r) in rows.into_iter().enumerate() {
            if r.len() != width {
                return Err(Error::Ragged { row: i, got: r.len(), expected: width });
            }
            cells.extend(r);
        }
        Ok(Grid { height, width, cells })
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.cells[r * self.width..(r + 1) * self.width]
    }

    pub fn rows(&self) -> Vec<Vec<T>> {
        (0..self.height).map(|r| self.row(r).to_vec()).collect()
    }
}

impl<T> Grid<T> {
    pub fn get(&self, r: usize, c: usize) -> &T {
        &self.cells[r * self.width + c]
    }

    pub fn set(&mut self, r: usize, c: usize, t: T) {
        self.cells[r * self.width + c] = t;
    }

    pub fn map<U>(&self, f: impl Fn(&T) -> U) -> Grid<U> {
        Grid { height: self.height, width: self.width, cells: self.cells.iter().map(f).collect() }
    }
}

/// Cost oracle for a tile type `T`.
pub trait CostRules<T> {
    fn horizontal(&self, left: &T, right: &T) -> i64;
    fn vertical(&self, lower: &T, upper: &T) -> i64;
    fn square(&self, nw: &T, ne: &T, sw: &T, se: &T) -> i64;
}

impl CostRules<TileId> for TileRuleSet {
    fn horizontal(&self, left: &TileId, right: &TileId) -> i64 {
        self.h(*left, *right)
    }
    fn vertical(&self, lower: &TileId, upper: &TileId) -> i64 {
        self.v(*lower, *upper)
    }
    fn square(&self, nw: &TileId, ne: &TileId, sw: &TileId, se: &TileId) -> i64 {
        self.sq(*nw, *ne, *sw, *se)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CostBreakdown {
    pub horizontal: i64,
    pub vertical: i64,
    pub square: i64,
}

impl CostBreakdown {
    pub fn total(&self) -> i64 {
        self.horizontal + self.vertical + self.square
    }
}

pub fn evaluate_breakdown<T, R: CostRules<T> + ?Sized>(rules: &R, g: &Grid<T>) -> CostBreakdown {
    let mut b = CostBreakdown::default();
    for r in 0..g.height {
        for c in 0..g.width {
            if c + 1 < g.width {
                b.horizontal += rules.horizontal(g.get(r, c), g.get(r, c + 1));
            }
            if r + 1 < g.height {
                b.vertical += rules.vertical(g.get(r, c), g.get(r + 1, c));
                if c + 1 < g.width {
                    b.square += rules.square(
                        g.get(r + 1, c),
                        g.get(r + 1, c + 1),
                        g.get(r, c),
                        g.get(r, c + 1),
                    );
                }
            }
        }
    }
    b
}

pub fn evaluate_grid<T, R: CostRules<T> + ?Sized>(rules: &R, g: &Grid<T>) -> i64 {
    evaluate_breakdown(rules, g).total()
}

/// Total cost of a tiling, validating dimensions and ids.
pub fn evaluate_tiling(rules: &TileRuleSet, tiling: &GridTiling) -> Result<i64> {
    if tiling.height < 2 || tiling.width < 2 {
        return Err(Error::Dimension { height: tiling.height, width: tiling.width, min: 2 });
    }
    if tiling.cells.len() != tiling.height * tiling.width {
        return Err(Error::Precondition("cell count does not match dimensions".into()));
    }
    for &t in &tiling.cells {
        rules.check(t)?;
    }
    Ok(evaluate_grid(rules, tiling))
}

/// On-disk tiling format; rows listed bottom-up.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TilingFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    pub rows: Vec<Vec<String>>,
}

pub fn tiling_from_file(rules: &TileRuleSet, file: &TilingFile) -> Result<GridTiling> {
    let rows = file
        .rows
        .iter()
        .map(|r| r.iter().map(|n| rules.id(n)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let g = Grid::from_rows(rows)?;
    if let Some(n) = file.n {
        if g.height != n || g.width != n {
            return Err(Error::Parse(format!("declared n={n} but grid is {}x{}", g.height, g.width)));
        }
    }
    Ok(g)
}

pub fn tiling_to_file(rules: &TileRuleSet, g: &GridTiling) -> TilingFile {
    TilingFile {
        n: (g.height == g.width).then_some(g.height),
        rows: (0..g.height)
            .map(|r| g.row(r).iter().map(|&t| rules.name(t).to_string()).collect())
            .collect(),
    }
}

/// Result of lowering square costs to pair costs.
///
/// Compiled tile `[a, b]` stores the original tile `b` at its own cell and
/// the tile `a` expected to its left. The first component may be the empty
/// anchor, which is what column 0 carries.
#[derive(Debug, Clone)]
pub struct PairCompilation {
    pub rules: TileRuleSet,
    pub penalty: i64,
    pub original_size: usize,
}

impl PairCompilation {
    /// Index of the empty left component.
    pub fn anchor(&self) -> usize {
        self.original_size
    }

    pub fn pair_id(&self, left: Option<TileId>, own: TileId) -> TileId {
        let d = self.original_size;
        let a = left.map_or(d, |t| t as usize);
        (a * d + own as usize) as TileId
    }

    pub fn split(&self, id: TileId) -> (Option<TileId>, TileId) {
        let d = self.original_size;
        let a = id as usize / d;
        let b = (id as usize % d) as TileId;
        ((a < d).then_some(a as TileId), b)
    }

    /// Consistent compiled tiling corresponding to an original tiling.
    pub fn lift(&self, g: &GridTiling) -> GridTiling {
        let mut out = Grid::filled(g.height, g.width, 0);
        for r in 0..g.height {
            for c in 0..g.width {
                let left = (c > 0).then(|| *g.get(r, c - 1));
                out.set(r, c, self.pair_id(left, *g.get(r, c)));
            }
        }
        out
    }

    pub fn project(&self, g: &GridTiling) -> GridTiling {
        g.map(|&t| self.split(t).1)
    }

    pub fn is_consistent(&self, g: &GridTiling) -> bool {
        (0..g.height).all(|r| {
            (0..g.width).all(|c| {
                let (left, _) = self.split(*g.get(r, c));
                if c == 0 {
                    left.is_none()
                } else {
                    left == Some(self.split(*g.get(r, c - 1)).1)
                }
            })
        })
    }
}

/// Lowers a rule set with square costs to an equivalent pair-only rule set
/// for grids of the given size.
///
/// Every consistent compiled tiling costs exactly what its projection costs.
/// Inconsistent neighbours pay a penalty exceeding the total cost of any
/// consistent tiling on the grid. Column 0 tiles whose left component is a
/// real tile see extra squares against a phantom column; with nonnegative
/// square costs these can only add cost, so the global minimum is preserved.
pub fn compile_squares_to_pairs(rules: &TileRuleSet, height: usize, width: usize) -> PairCompilation {
    let d = rules.size();
    let (hh, ww) = (height as i64, width as i64);
    let constraints = hh * (ww - 1).max(0) + (hh - 1).max(0) * ww + (hh - 1).max(0) * (ww - 1).max(0);
    let pair_slots = hh * (ww - 1).max(0) + (hh - 1).max(0) * ww;
    let m = rules.max_abs_cost();
    let penalty = 1 + m * (constraints + 2 * pair_slots);

    let name_of = |a: usize, b: usize| {
        let left = if a == d { String::new() } else { rules.name(a as TileId).to_string() };
        format!("[{},{}]", left, rules.name(b as TileId))
    };
    let mut tiles = Vec::with_capacity((d + 1) * d);
    for a in 0..=d {
        for b in 0..d {
            tiles.push(TileSpec::plain(name_of(a, b)));
        }
    }
    let mut out = TileRuleSet::new(tiles, 1).expect("pair names are distinct");
    let id = |a: usize, b: usize| (a * d + b) as TileId;
    for p in 0..=d {
        for a in 0..d {
            for a2 in 0..=d {
                for b in 0..d {
                    let cost = if a2 != a { penalty } else { rules.h(a as TileId, b as TileId) };
                    out.set_h(id(p, a), id(a2, b), cost);
                }
            }
        }
    }
    for p in 0..=d {
        for c in 0..d {
            for q in 0..=d {
                for a in 0..d {
                    let cost = match (p == d, q == d) {
                        (false, false) => {
                            rules.sq(q as TileId, a as TileId, p as TileId, c as TileId)
                                + rules.v(c as TileId, a as TileId)
                        }
                        (true, true) => rules.v(c as TileId, a as TileId),
                        _ => penalty,
                    };
                    out.set_v(id(p, c), id(q, a), cost);
                }
            }
        }
    }
    PairCompilation { rules: out, penalty, original_size: d }
}
