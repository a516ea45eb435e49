//! Exact minimum-cost tilings.
//!
//! [`solve_dp`] sweeps the grid cell by cell in row-major order from the
//! bottom, keeping the last `width + 1` placed tiles as a packed profile.
//! That is exactly the context a new cell needs: its left neighbour, the
//! cell below and the cell below-left. A backward pass computes the optimal
//! cost-to-go for every (cell, profile); a forward pass then picks, cell by
//! cell, the smallest tile that stays optimal, which yields the
//! lexicographically smallest optimal witness.
//!
//! Cost-to-go tables are kept only at row boundaries and rebuilt one row at
//! a time during the forward pass.
//!
//! [`solve_exhaustive`] enumerates every tiling in the same order and serves
//! as the oracle.

use crate::error::{Error, Result};
use crate::tiling::{evaluate_grid, Grid, GridTiling, TileId, TileRuleSet};
use rayon::prelude::*;
use serde::Serialize;

pub const DEFAULT_BUDGET: u128 = 20_000_000;

/// Budget from `TI_TILE_BUDGET`, falling back to the default.
pub fn budget_from_env() -> u128 {
    std::env::var("TI_TILE_BUDGET").ok().and_then(|s| s.trim().parse().ok()).unwrap_or(DEFAULT_BUDGET)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SolverResult {
    pub min_cost: i64,
    #[serde(skip)]
    pub witness: Option<GridTiling>,
    pub explored_states: u128,
}

struct Tables {
    d: usize,
    h: Vec<i64>,
    v: Vec<i64>,
    sq_dense: Option<Vec<i64>>,
}

impl Tables {
    fn new(rules: &TileRuleSet) -> Self {
        let d = rules.size();
        let sq_dense = (rules.has_squares() && d.pow(4) <= 4_000_000).then(|| {
            let mut t = vec![0; d.pow(4)];
            for (k, c) in rules.square_entries() {
                t[((k[0] as usize * d + k[1] as usize) * d + k[2] as usize) * d + k[3] as usize] = c;
            }
            t
        });
        Tables { d, h: rules.h_table().to_vec(), v: rules.v_table().to_vec(), sq_dense }
    }

    #[inline]
    fn sq(&self, rules: &TileRuleSet, nw: usize, ne: usize, sw: usize, se: usize) -> i64 {
        match &self.sq_dense {
            Some(t) => t[((nw * self.d + ne) * self.d + sw) * self.d + se],
            None if rules.has_squares() => rules.sq(nw as TileId, ne as TileId, sw as TileId, se as TileId),
            None => 0,
        }
    }

    /// Cost of placing `t` at `(r, c)` given the profile `p`.
    #[inline]
    fn place(&self, rules: &TileRuleSet, w: usize, r: usize, c: usize, p: usize, t: usize, pw: &[usize]) -> i64 {
        let d = self.d;
        let mut cost = 0;
        let left = p % d;
        if c > 0 {
            cost += self.h[left * d + t];
        }
        if r > 0 {
            let below = (p / pw[w - 1]) % d;
            cost += self.v[below * d + t];
            if c > 0 {
                let below_left = (p / pw[w]) % d;
                cost += self.sq(rules, left, t, below_left, below);
            }
        }
        cost
    }
}

/// Row-profile dynamic program over all tilings of `height x width`.
pub fn solve_dp(rules: &TileRuleSet, height: usize, width: usize, budget: u128) -> Result<SolverResult> {
    let d = rules.size();
    if d == 0 || height == 0 || width == 0 {
        return Err(Error::Precondition("empty alphabet or grid".into()));
    }
    let states = (d as u128).checked_pow(width as u32 + 1).unwrap_or(u128::MAX);
    let entries = states.saturating_mul((height + width + 1) as u128);
    if entries > budget {
        return Err(Error::Capacity { needed: entries, limit: budget });
    }
    let s = states as usize;
    let pw: Vec<usize> = (0..=width + 1).map(|k| d.pow(k as u32)).collect();
    let tables = Tables::new(rules);
    let cells = height * width;

    // one backward layer: g_i[p] from g_{i+1}
    let layer = |i: usize, next: &[i64]| -> Vec<i64> {
        let (r, c) = (i / width, i % width);
        let f = |p: usize| -> i64 {
            let base = (p * d) % s;
            (0..d).map(|t| tables.place(rules, width, r, c, p, t, &pw) + next[base + t]).min().unwrap()
        };
        if s >= 4096 {
            (0..s).into_par_iter().map(f).collect()
        } else {
            (0..s).map(f).collect()
        }
    };

    // checkpoints at the start of every row, plus the terminal layer
    let mut checkpoints: Vec<Vec<i64>> = vec![Vec::new(); height + 1];
    checkpoints[height] = vec![0; s];
    let mut cur = checkpoints[height].clone();
    for i in (0..cells).rev() {
        cur = layer(i, &cur);
        if i % width == 0 {
            checkpoints[i / width] = cur.clone();
        }
    }
    let min_cost = checkpoints[0][0];

    let mut witness = Grid::filled(height, width, 0 as TileId);
    let mut p = 0usize;
    for r in 0..height {
        // rebuild g for cells r*w+1 ..= (r+1)*w from the next checkpoint
        let mut row_layers: Vec<Vec<i64>> = vec![Vec::new(); width + 1];
        row_layers[width] = checkpoints[r + 1].clone();
        for c in (1..width).rev() {
            row_layers[c] = layer(r * width + c, &row_layers[c + 1]);
        }
        for c in 0..width {
            let next = &row_layers[c + 1];
            let target = if c == 0 { checkpoints[r][p] } else { row_layers[c][p] };
            let base = (p * d) % s;
            let t = (0..d)
                .find(|&t| tables.place(rules, width, r, c, p, t, &pw) + next[base + t] == target)
                .expect("an optimal tile exists");
            witness.set(r, c, t as TileId);
            p = base + t;
        }
    }
    debug_assert_eq!(evaluate_grid(rules, &witness), min_cost);
    Ok(SolverResult { min_cost, witness: Some(witness), explored_states: 2 * cells as u128 * states })
}

/// Enumerates every tiling; the first minimum in lexicographic order wins.
pub fn solve_exhaustive(rules: &TileRuleSet, height: usize, width: usize, budget: u128) -> Result<SolverResult> {
    let d = rules.size();
    if d == 0 || height == 0 || width == 0 {
        return Err(Error::Precondition("empty alphabet or grid".into()));
    }
    let cells = height * width;
    let total = (d as u128).checked_pow(cells as u32).unwrap_or(u128::MAX);
    if total > budget {
        return Err(Error::Capacity { needed: total, limit: budget });
    }
    let mut g = Grid::filled(height, width, 0 as TileId);
    let mut best: Option<(i64, GridTiling)> = None;
    let mut explored = 0u128;
    loop {
        explored += 1;
        let c = evaluate_grid(rules, &g);
        if best.as_ref().map_or(true, |(b, _)| c < *b) {
            best = Some((c, g.clone()));
        }
        // odometer with cell 0 most significant
        let mut i = cells;
        loop {
            if i == 0 {
                let (min_cost, w) = best.unwrap();
                return Ok(SolverResult { min_cost, witness: Some(w), explored_states: explored });
            }
            i -= 1;
            if (g.cells[i] as usize) + 1 < d {
                g.cells[i] += 1;
                break;
            }
            g.cells[i] = 0;
        }
    }
}

/// Minimum cost by the dynamic program, falling back to enumeration when
/// the profile table does not fit.
pub fn solve(rules: &TileRuleSet, height: usize, width: usize, budget: u128) -> Result<SolverResult> {
    match solve_dp(rules, height, width, budget) {
        Err(Error::Capacity { .. }) => solve_exhaustive(rules, height, width, budget),
        r => r,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Threshold {
    Below,
    AtOrAbove,
}

/// Decision form: is the minimum cost at most `tau`?
pub fn threshold_decide(rules: &TileRuleSet, height: usize, width: usize, tau: i64, budget: u128) -> Result<Threshold> {
    let l = solve(rules, height, width, budget)?.min_cost;
    Ok(if l <= tau { Threshold::Below } else { Threshold::AtOrAbove })
}

/// Recovers the minimum cost by binary search over the decision oracle.
/// Returns the value and the number of oracle calls.
pub fn binary_search_min(rules: &TileRuleSet, height: usize, width: usize, budget: u128) -> Result<(i64, u32)> {
    let (lo, hi) = cost_range(rules, height, width);
    let lambda = solve(rules, height, width, budget)?.min_cost;
    let decide = |tau: i64| if lambda <= tau { Threshold::Below } else { Threshold::AtOrAbove };
    // invariant: answer in [lo, hi]
    let (mut lo, mut hi) = (lo, hi);
    let mut calls = 0;
    while lo < hi {
        let mid = lo + (hi - lo).div_euclid(2);
        calls += 1;
        if decide(mid) == Threshold::Below {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok((lo, calls))
}

/// Bounds every tiling's cost: plus or minus the largest constraint cost
/// times the number of constraints.
pub fn cost_range(rules: &TileRuleSet, height: usize, width: usize) -> (i64, i64) {
    let (h, w) = (height as i64, width as i64);
    let k = h * (w - 1) + (h - 1) * w + (h - 1) * (w - 1);
    let m = rules.max_abs_cost();
    (-m * k, m * k)
}

/// Rule set describing the same constraints on a vertically mirrored grid.
pub fn flip_vertical(rules: &TileRuleSet) -> TileRuleSet {
    let mut out = rules.clone();
    let d = rules.size() as TileId;
    for a in 0..d {
        for b in 0..d {
            out.set_v(a, b, rules.v(b, a));
        }
    }
    for (k, _) in rules.square_entries() {
        out.set_sq(k, 0);
    }
    for ([nw, ne, sw, se], c) in rules.square_entries() {
        out.set_sq([sw, se, nw, ne], c);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tiling::evaluate_tiling;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_rules(rng: &mut ChaCha8Rng, d: usize, lo: i64, hi: i64) -> TileRuleSet {
        let names: Vec<String> = (0..d).map(|i| format!("t{i}")).collect();
        let mut rs = TileRuleSet::with_names(&names).unwrap();
        for a in 0..d as u32 {
            for b in 0..d as u32 {
                rs.set_h(a, b, rng.gen_range(lo..=hi));
                rs.set_v(a, b, rng.gen_range(lo..=hi));
            }
        }
        for k in 0..d.pow(4) {
            if rng.gen_bool(0.5) {
                let key = [k / (d * d * d), (k / (d * d)) % d, (k / d) % d, k % d].map(|x| x as u32);
                rs.set_sq(key, rng.gen_range(lo..=hi));
            }
        }
        rs
    }

    #[test]
    fn trivial_instances() {
        let rs = TileRuleSet::with_names(&["a", "b"]).unwrap();
        assert_eq!(solve_dp(&rs, 4, 4, DEFAULT_BUDGET).unwrap().min_cost, 0);
        let mut rs = TileRuleSet::with_names(&["a", "b"]).unwrap();
        rs.set_h(0, 1, 1);
        rs.set_h(1, 0, 1);
        let r = solve_dp(&rs, 3, 3, DEFAULT_BUDGET).unwrap();
        assert_eq!(r.min_cost, 0);
        assert_eq!(r.witness.unwrap().cells, vec![0; 9]);
        assert_eq!(solve_exhaustive(&rs, 1, 1, DEFAULT_BUDGET).unwrap().min_cost, 0);
    }

    #[test]
    fn capacity_errors_name_the_limit() {
        let rs = TileRuleSet::with_names(&["a", "b", "c"]).unwrap();
        match solve_dp(&rs, 10, 30, 1000) {
            Err(Error::Capacity { limit, .. }) => assert_eq!(limit, 1000),
            other => panic!("{other:?}"),
        }
        assert!(matches!(solve_exhaustive(&rs, 5, 5, 1000), Err(Error::Capacity { .. })));
    }

    #[test]
    fn dp_matches_exhaustive_with_identical_witness() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..60 {
            let d = rng.gen_range(1..=3);
            let (h, w) = (rng.gen_range(1..=3), rng.gen_range(1..=4));
            let rs = random_rules(&mut rng, d, -3, 3);
            let a = solve_dp(&rs, h, w, DEFAULT_BUDGET).unwrap();
            let b = solve_exhaustive(&rs, h, w, DEFAULT_BUDGET).unwrap();
            assert_eq!(a.min_cost, b.min_cost);
            assert_eq!(a.witness, b.witness);
            assert_eq!(evaluate_grid(&rs, a.witness.as_ref().unwrap()), a.min_cost);
        }
    }

    #[test]
    fn threshold_boundaries_and_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..20 {
            let rs = random_rules(&mut rng, 3, -2, 3);
            let l = solve_dp(&rs, 3, 3, DEFAULT_BUDGET).unwrap().min_cost;
            assert_eq!(threshold_decide(&rs, 3, 3, l, DEFAULT_BUDGET).unwrap(), Threshold::Below);
            assert_eq!(threshold_decide(&rs, 3, 3, l - 1, DEFAULT_BUDGET).unwrap(), Threshold::AtOrAbove);
            let (found, calls) = binary_search_min(&rs, 3, 3, DEFAULT_BUDGET).unwrap();
            let (lo, hi) = cost_range(&rs, 3, 3);
            assert_eq!(found, l);
            assert!(calls as f64 <= ((hi - lo + 1) as f64).log2().ceil());
        }
    }

    proptest! {
        #[test]
        fn raising_a_cost_never_lowers_the_minimum(seed in 0u64..10_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rs = random_rules(&mut rng, 3, -2, 2);
            let before = solve_dp(&rs, 3, 3, DEFAULT_BUDGET).unwrap().min_cost;
            let mut rs2 = rs.clone();
            let (a, b) = (rng.gen_range(0..3), rng.gen_range(0..3));
            rs2.set_h(a, b, rs.h(a, b) + 1);
            prop_assert!(solve_dp(&rs2, 3, 3, DEFAULT_BUDGET).unwrap().min_cost >= before);
        }

        #[test]
        fn mirrored_grid_has_the_same_minimum(seed in 0u64..10_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rs = random_rules(&mut rng, 3, -3, 3);
            let a = solve_dp(&rs, 3, 4, DEFAULT_BUDGET).unwrap();
            let f = flip_vertical(&rs);
            let b = solve_dp(&f, 3, 4, DEFAULT_BUDGET).unwrap();
            prop_assert_eq!(a.min_cost, b.min_cost);
            // mirrored witness costs the same under the mirrored rules
            let w = a.witness.unwrap();
            let mut m = w.clone();
            for r in 0..3 { for c in 0..4 { m.set(r, c, *w.get(2 - r, c)); } }
            prop_assert_eq!(evaluate_tiling(&f, &m).unwrap(), a.min_cost);
        }
    }
}
