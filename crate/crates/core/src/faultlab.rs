//! Fault injection into Layer-1 tilings and audits of the interval bounds.
//!
//! [`inject`] substitutes tiles at seeded positions. The [`Repair`] policy
//! decides what happens above a substitution: leave the original rows,
//! re-derive every row from the one below with [`layer1::greedy_step`], or
//! re-derive only while that yields a valid row and fall back to the original
//! row otherwise. The last policy keeps each substitution at O(1) counted
//! faults while still letting a substitution that produces a different valid
//! configuration run on as a computation of its own. [`audit`] recomputes every counted quantity from scratch and
//! evaluates each bound as an inequality; a failing bound means a bug in the
//! metric code, since the bounds hold for every tiling.

use crate::error::{Error, Result};
use crate::layer1::{self, Color, L1Tile, Layer1Tiling, Segment};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Placement {
    /// Any cell of rows `r_1 ..= r_{n-2}`.
    Uniform,
    /// Any cell of the given row.
    Row(usize),
    /// A cell inside the non-blank extent of a uniformly chosen row.
    Interval,
    /// The head tile of the given row becomes a tape tile.
    HeadDeletion(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Repair {
    /// Rows above a substitution keep their original tiles.
    None,
    /// Every row above the first substitution is the greedy step of the
    /// row below.
    Greedy,
    /// Greedy step while it gives a valid row, otherwise the original row.
    Heal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FaultPlan {
    pub seed: u64,
    pub count: usize,
    pub placement: Placement,
    pub repair: Repair,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Substitution {
    pub row: usize,
    pub col: usize,
    pub old: String,
    pub new: String,
}

fn tile_at(row: &[L1Tile], c: usize) -> L1Tile {
    row.get(c).copied().unwrap_or(L1Tile::HASH)
}

fn set_tile(row: &mut Vec<L1Tile>, c: usize, t: L1Tile) {
    if c >= row.len() {
        row.resize(c + 1, L1Tile::HASH);
    }
    row[c] = t;
}

/// The head tile of a row with its state dropped.
fn without_head(t: L1Tile) -> L1Tile {
    if t.sym.colored() {
        L1Tile::colored(t.sym, Color::Blue)
    } else {
        L1Tile::tape(t.sym)
    }
}

/// Applies `plan` to `base`. Substitution sites are distinct cells, each
/// receiving a tile different from the one it replaces.
pub fn inject(base: &Layer1Tiling, plan: &FaultPlan) -> Result<(Layer1Tiling, Vec<Substitution>)> {
    let rows = base.rows.len();
    let width = base.width();
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    let alphabet = layer1::alphabet();
    let mut sites: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut forced: Vec<(usize, usize, L1Tile)> = Vec::new();
    match plan.placement {
        Placement::HeadDeletion(t) => {
            if !(1..=rows).contains(&t) {
                return Err(Error::Precondition(format!("row {t} outside 1..={rows}")));
            }
            let row = base.row(t);
            let c = row.iter().position(|x| x.state.is_some()).ok_or_else(|| Error::Precondition(format!("row {t} has no head")))?;
            forced.push((t, c, without_head(row[c])));
        }
        _ => {
            let cells = match plan.placement {
                Placement::Row(_) => width,
                _ => rows * width,
            };
            if plan.count > cells {
                return Err(Error::Precondition(format!("{} faults requested for {cells} cells", plan.count)));
            }
            let mut guard = 0usize;
            while sites.len() < plan.count {
                guard += 1;
                if guard > 1000 * (plan.count + 1) {
                    return Err(Error::Precondition("could not place faults".into()));
                }
                let site = match plan.placement {
                    Placement::Uniform => (rng.gen_range(1..=rows), rng.gen_range(0..width)),
                    Placement::Row(t) => {
                        if !(1..=rows).contains(&t) {
                            return Err(Error::Precondition(format!("row {t} outside 1..={rows}")));
                        }
                        (t, rng.gen_range(0..width))
                    }
                    Placement::Interval => {
                        let t = rng.gen_range(1..=rows);
                        let len = base.row(t).len().clamp(1, width);
                        (t, rng.gen_range(0..len))
                    }
                    Placement::HeadDeletion(_) => unreachable!(),
                };
                sites.insert(site);
            }
        }
    }
    // choose replacement tiles in site order so the draw is reproducible
    let mut subs_by_row: Vec<Vec<(usize, Option<L1Tile>)>> = vec![Vec::new(); rows + 1];
    for &(t, c) in &sites {
        subs_by_row[t].push((c, None));
    }
    for &(t, c, tile) in &forced {
        subs_by_row[t].push((c, Some(tile)));
    }
    let mut out_rows: Vec<Vec<L1Tile>> = Vec::with_capacity(rows);
    let mut log = Vec::new();
    let mut touched = false;
    for t in 1..=rows {
        let mut row = match plan.repair {
            Repair::Greedy if touched => layer1::greedy_step(&out_rows[t - 2], width),
            Repair::Heal if touched => {
                let g = layer1::greedy_step(&out_rows[t - 2], width);
                if layer1::is_valid_row(&g, width) {
                    g
                } else {
                    base.row(t).to_vec()
                }
            }
            _ => base.row(t).to_vec(),
        };
        for &(c, fixed) in &subs_by_row[t] {
            let old = tile_at(&row, c);
            let new = match fixed {
                Some(x) => x,
                None => loop {
                    let cand = alphabet[rng.gen_range(0..alphabet.len())];
                    if cand != old {
                        break cand;
                    }
                },
            };
            set_tile(&mut row, c, new);
            log.push(Substitution { row: t, col: c, old: old.to_string(), new: new.to_string() });
            touched = true;
        }
        out_rows.push(layer1::trim(row));
    }
    Ok((Layer1Tiling { n: base.n, rows: out_rows }, log))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCheck {
    pub name: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    /// Row at which the tightest instance occurs, for per-row bounds.
    pub row: Option<usize>,
    /// False when the bound's side condition does not hold.
    pub applicable: bool,
    pub pass: bool,
}

impl BoundCheck {
    fn new(name: &'static str, lhs: f64, rhs: f64, row: Option<usize>, applicable: bool) -> Self {
        BoundCheck { name, lhs, rhs, row, applicable, pass: !applicable || lhs <= rhs }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CleanCensus {
    pub tags: Vec<usize>,
    pub sizes: Vec<usize>,
    /// Values in `2 ..= mu + 1` with no clean interval of that size.
    pub missing: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub n: usize,
    pub seed: Option<u64>,
    pub mu: u64,
    /// Fault count per layer; only Layer 1 is audited here.
    pub faults: Vec<usize>,
    /// `(h, v)` for `r_0 ..= r_{n-1}`.
    pub row_costs: Vec<(usize, usize)>,
    pub segments: Vec<Segment>,
    pub complete_count: usize,
    pub clean_census: CleanCensus,
    pub final_a: u64,
    /// `(start row, next end row, X at the start row)` for every pair of
    /// consecutive zero-cost end rows.
    pub cadence: Vec<(usize, usize, u128)>,
    pub bound_checks: Vec<BoundCheck>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.bound_checks.iter().all(|b| b.pass)
    }

    pub fn failures(&self) -> Vec<&BoundCheck> {
        self.bound_checks.iter().filter(|b| !b.pass).collect()
    }
    /// Whether the clean potential is zero at every zero-cost end row.
    pub fn segment_a_zero(&self, tiling: &Layer1Tiling) -> bool {
        let ann = layer1::tag_clean_corrupt(tiling);
        let w = tiling.width();
        (1..=tiling.n - 2)
            .filter(|&t| self.row_costs[t] == (0, 0) && layer1::is_end_row(tiling.row(t), w))
            .all(|t| ann[t - 1].a() == 0)
    }
}

/// Keeps the instance with the largest `lhs - rhs` among applicable rows.
struct Worst {
    name: &'static str,
    best: Option<(f64, f64, usize)>,
}

impl Worst {
    fn new(name: &'static str) -> Self {
        Worst { name, best: None }
    }

    fn see(&mut self, lhs: f64, rhs: f64, row: usize) {
        if self.best.map_or(true, |(l, r, _)| lhs - rhs > l - r) {
            self.best = Some((lhs, rhs, row));
        }
    }

    fn check(self) -> BoundCheck {
        match self.best {
            Some((l, r, t)) => BoundCheck::new(self.name, l, r, Some(t), true),
            None => BoundCheck::new(self.name, 0.0, 0.0, None, false),
        }
    }
}

/// Recomputes faults, segments, clean tags and the potential of `tiling`
/// and evaluates every bound.
pub fn audit(tiling: &Layer1Tiling) -> Result<AuditReport> {
    let costs = layer1::row_costs(tiling);
    audit_with_costs(tiling, costs, None)
}

/// As [`audit`], reusing `base`'s row costs for rows that coincide.
pub fn audit_against(tiling: &Layer1Tiling, base: &Layer1Tiling, base_costs: &[(usize, usize)], seed: Option<u64>) -> Result<AuditReport> {
    let costs = layer1::row_costs_against(tiling, base, base_costs);
    audit_with_costs(tiling, costs, seed)
}

fn audit_with_costs(tiling: &Layer1Tiling, costs: Vec<(usize, usize)>, seed: Option<u64>) -> Result<AuditReport> {
    let n = tiling.n;
    let w = tiling.width();
    let last = n - 2;
    let mu = layer1::mu(n as u64)?;
    let f1 = layer1::total_faults(&costs);
    let f = f1 as f64;
    let nf = n as f64;
    let ann = layer1::tag_clean_corrupt(tiling);
    let segments = layer1::segment_decomposition(tiling, &costs);
    let complete_count = segments.iter().filter(|s| s.complete).count();
    let c = |t: usize| costs[t].0 + costs[t].1;
    let mut checks = Vec::new();

    // consecutive rows
    let mut dist_invalid = Worst::new("row_distance_after_invalid_row");
    let mut dist_valid = Worst::new("row_distance_after_valid_row");
    for t in 2..=last {
        let prev = tiling.row(t - 1);
        let cur = tiling.row(t);
        let (h, v) = costs[t - 1];
        if h > 0 {
            dist_invalid.see(layer1::row_distance(prev, cur) as f64, (4 * h + 2 * v) as f64, t);
        } else if let Ok(next) = layer1::next_row(prev, w) {
            dist_valid.see(layer1::row_distance(&next, cur) as f64, (2 * v) as f64, t);
        }
    }
    checks.push(dist_invalid.check());
    checks.push(dist_valid.check());

    let mut lost = Worst::new("clean_tags_lost_per_row");
    for t in 1..last {
        let now = ann[t - 1].tags();
        let next = ann[t].tags();
        let gone = now.difference(&next).count();
        let (h, v) = costs[t];
        lost.see(gone as f64, (12 * h + 6 * v) as f64, t);
    }
    checks.push(lost.check());

    // potential: A(r_t) <= 3 + 12 c(r_{t-1}) + 18 sum_{j=2}^{t-2} c(r_j)
    let mut pot = Worst::new("potential_bound");
    let mut prefix = vec![0usize; n + 1];
    for t in 0..n {
        prefix[t + 1] = prefix[t] + c(t);
    }
    let sum = |a: usize, b: usize| if b >= a { prefix[b + 1] - prefix[a] } else { 0 };
    for t in 1..=last {
        let rhs = 3 + 12 * c(t - 1) + 18 * if t >= 4 { sum(2, t - 2) } else { 0 };
        pot.see(ann[t - 1].a() as f64, rhs as f64, t);
    }
    checks.push(pot.check());

    let complete_rhs = mu as f64 - 14.0 * f;
    checks.push(BoundCheck::new("complete_segments_lower", -(complete_count as f64), -complete_rhs, None, true));

    let final_ann = &ann[last - 1];
    let clean_count = final_ann.clean().count();
    checks.push(BoundCheck::new("clean_intervals_lower", -(clean_count as f64), -(mu as f64 - 26.0 * f), None, true));

    let sizes: BTreeSet<usize> = final_ann.clean_sizes().into_iter().collect();
    let missing: Vec<usize> = (2..=mu as usize + 1).filter(|s| !sizes.contains(s)).collect();
    checks.push(BoundCheck::new("missing_sizes_upper", missing.len() as f64, 44.0 * f + 3.0, None, true));

    let gate = f <= nf.powf(0.25) / 40.0;
    checks.push(BoundCheck::new("segment_count_upper", segments.len() as f64, 4.0 * nf.powf(0.25) + 2.0 * f, None, gate));
    let len = layer1::length(tiling.last()) as f64;
    checks.push(BoundCheck::new("row_length_upper", len, 9.0 * nf.sqrt() + 2.0 * nf.powf(0.25) + 1.0, None, gate));

    let tags = final_ann.tags();
    let tag_list: Vec<usize> = final_ann.clean().filter_map(|i| i.tag).collect();
    checks.push(BoundCheck::new("clean_tags_unique", tag_list.len() as f64, tags.len() as f64, None, true));

    let summed: usize = costs.iter().map(|(h, v)| h + v).sum();
    checks.push(BoundCheck::new("fault_total_matches_rows", (summed as f64 - f).abs(), 0.0, None, true));

    let mut cadence = Vec::new();
    let ends: Vec<usize> = (1..=last).filter(|&t| c(t) == 0 && layer1::is_end_row(tiling.row(t), w)).collect();
    for p in ends.windows(2) {
        let x = layer1::x_value(&layer1::sizes(tiling.row(p[0])));
        cadence.push((p[0], p[1], x));
    }

    Ok(AuditReport {
        n,
        seed,
        mu,
        faults: vec![f1],
        row_costs: costs,
        segments,
        complete_count,
        clean_census: CleanCensus { tags: tags.into_iter().collect(), sizes: final_ann.clean_sizes(), missing },
        final_a: final_ann.a(),
        cadence,
        bound_checks: checks,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CampaignSummary {
    pub n: usize,
    pub runs: usize,
    pub max_faults: usize,
    pub gated_runs: usize,
    /// `(seed, failing check names)` for every run with a failure.
    pub failures: Vec<(u64, Vec<&'static str>)>,
}

/// Plan used for seed `s` in a campaign: one to three faults, alternating
/// between uniform and interval-targeted placement, healed upward.
pub fn campaign_plan(seed: u64) -> FaultPlan {
    let placement = if seed % 2 == 0 { Placement::Uniform } else { Placement::Interval };
    FaultPlan { seed, count: 1 + (seed % 3) as usize, placement, repair: Repair::Heal }
}

/// Injects and audits `runs` seeded plans on the fault-free `n x n` tiling.
pub fn campaign(n: usize, runs: usize, first_seed: u64) -> Result<CampaignSummary> {
    let base = layer1::simulate_layer1(n)?;
    let base_costs = layer1::row_costs(&base);
    let results: Vec<Result<(u64, usize, bool, Vec<&'static str>)>> = (first_seed..first_seed + runs as u64)
        .into_par_iter()
        .map(|seed| {
            let (t, _) = inject(&base, &campaign_plan(seed))?;
            let r = audit_against(&t, &base, &base_costs, Some(seed))?;
            let gated = r.bound_checks.iter().any(|b| b.name == "segment_count_upper" && b.applicable);
            Ok((seed, r.faults[0], gated, r.failures().iter().map(|b| b.name).collect()))
        })
        .collect();
    let mut s = CampaignSummary { n, runs, max_faults: 0, gated_runs: 0, failures: Vec::new() };
    for r in results {
        let (seed, f, gated, fails) = r?;
        s.max_faults = s.max_faults.max(f);
        s.gated_runs += gated as usize;
        if !fails.is_empty() {
            s.failures.push((seed, fails));
        }
    }
    Ok(s)
}
