//! Oracle accounting on the top layer.
//!
//! Every strip that survives to the last row knows its own size `r`. With
//! `I = mu + 2 - r` the strips are split into consecutive role ranges: the
//! first `check_1(z)` values of `I` check oracle bit 1, the next `check_2(z)`
//! check bit 2 and so on, the following `8 f(x, z)` strips reject outright and
//! the rest accept. A strip checking bit `k` costs 1 when `z_k = 0`, and when
//! `z_k = 1` it costs 0 exactly when the verifier accepts the `k`-th oracle
//! query for some witness. Summed over a fault-free size sequence the total
//! is `2^(nbar+5) C(x, z) + 8 f(x, z)` up to a few units, so the correct
//! answers are the unique minimizer and `f` sits in the low bits.
//!
//! Evaluation is strip-level: toy role ranges need thousands of strips, so
//! the fault-free size sequence is taken from [`layer1::fault_free_final_sizes`]
//! and costs are summed per strip instead of materializing a grid. The size
//! measurement itself is a real machine ([`stage1_counter_machine`]).
//!
//! Machines in an [`OracleProblem`] start in the state named `start` and
//! accept by halting in a state whose name starts with `acc`. The query
//! machine `M` runs on `Q x + z_1 .. z_{j-1}` for query `j` and on
//! `F x + z` for the output; its answer is the 0/1 word under and right of
//! the head when it halts. The verifier `V` runs on `< o + w`.

use crate::error::{Error, Result};
use crate::layer1;
use crate::tm::{tm_run, Direction, Move, TmConfiguration, TmFile, TuringMachine};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};

/// Longest witness the verifier may be given.
pub const MAX_WITNESS: usize = 4;
const STEP_LIMIT: usize = 100_000;

/// Interval count in the check ranges for bit `k` (1-based).
pub fn check_k(z: &[bool], nbar: usize, k: usize) -> i64 {
    assert!((1..=nbar).contains(&k) && z.len() >= nbar, "check_k needs 1 <= k <= nbar <= |z|");
    let base = 1i64 << (nbar + 5);
    if z[k - 1] {
        base << nbar
    } else {
        base << (nbar - k)
    }
}

#[derive(Debug, Clone)]
pub struct OracleProblem {
    pub name: String,
    pub nbar: usize,
    pub machine_m: TuringMachine,
    pub verifier_v: TuringMachine,
    /// Ground truth for the oracle language; audits only.
    pub membership: BTreeMap<String, bool>,
    /// Ground truth for `f`, keyed `"x,z"`; audits only.
    pub f_table: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemFile {
    #[serde(default)]
    pub name: String,
    pub nbar: usize,
    pub machine_m: TmFile,
    pub verifier_v: TmFile,
    #[serde(default)]
    pub membership: BTreeMap<String, bool>,
    #[serde(default)]
    pub f_table: BTreeMap<String, u64>,
}

pub fn bits_to_string(b: &[bool]) -> String {
    b.iter().map(|&v| if v { '1' } else { '0' }).collect()
}

pub fn parse_bits(s: &str) -> Result<Vec<bool>> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            _ => Err(Error::Parse(format!("not a bit: {c}"))),
        })
        .collect()
}

fn f_key(x: &[bool], z: &[bool]) -> String {
    format!("{},{}", bits_to_string(x), bits_to_string(z))
}

fn run_to_halt(tm: &TuringMachine, tape: &[&str], head: usize) -> Result<TmConfiguration> {
    let tape = tape.iter().map(|s| tm.symbol(s)).collect::<Result<Vec<_>>>()?;
    let cfg = TmConfiguration { tape, head, state: tm.state("start")? };
    let (end, _, halted) = tm_run(tm, &cfg, STEP_LIMIT);
    if !halted {
        return Err(Error::Precondition(format!("machine did not halt within {STEP_LIMIT} steps")));
    }
    Ok(end)
}

fn bit_symbols(b: &[bool]) -> impl Iterator<Item = &'static str> + '_ {
    b.iter().map(|&v| if v { "1" } else { "0" })
}

impl OracleProblem {
    pub fn from_file(f: &ProblemFile) -> Result<Self> {
        Ok(OracleProblem {
            name: f.name.clone(),
            nbar: f.nbar,
            machine_m: TuringMachine::from_file(&f.machine_m)?,
            verifier_v: TuringMachine::from_file(&f.verifier_v)?,
            membership: f.membership.clone(),
            f_table: f.f_table.clone(),
        })
    }

    pub fn to_file(&self) -> ProblemFile {
        ProblemFile {
            name: self.name.clone(),
            nbar: self.nbar,
            machine_m: self.machine_m.to_file(),
            verifier_v: self.verifier_v.to_file(),
            membership: self.membership.clone(),
            f_table: self.f_table.clone(),
        }
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        Self::from_file(&serde_json::from_str(s)?)
    }

    fn run_m(&self, mode: &'static str, x: &[bool], z: &[bool]) -> Result<Vec<bool>> {
        let mut tape = vec![mode];
        tape.extend(bit_symbols(x));
        tape.push("+");
        tape.extend(bit_symbols(z));
        let end = run_to_halt(&self.machine_m, &tape, 0)?;
        let (zero, one) = (self.machine_m.symbol("0")?, self.machine_m.symbol("1")?);
        let mut out = Vec::new();
        for &s in &end.tape[end.head..] {
            match s {
                s if s == zero => out.push(false),
                s if s == one => out.push(true),
                _ => break,
            }
        }
        Ok(out)
    }

    /// Query `j` (1-based) given the earlier answers.
    pub fn query(&self, x: &[bool], answers: &[bool]) -> Result<Vec<bool>> {
        self.run_m("Q", x, answers)
    }

    /// All `nbar` queries asked when the oracle answers with `z`.
    pub fn queries(&self, x: &[bool], z: &[bool]) -> Result<Vec<Vec<bool>>> {
        self.check_z(z)?;
        (0..self.nbar).map(|j| self.query(x, &z[..j])).collect()
    }

    /// `f(x, z)`, the output word read as a binary number.
    pub fn f(&self, x: &[bool], z: &[bool]) -> Result<u64> {
        self.check_z(z)?;
        let w = self.run_m("F", x, &z[..self.nbar])?;
        Ok(w.iter().fold(0u64, |a, &b| 2 * a + b as u64))
    }

    /// Decision read of `M`: accept when `f(x, z)` is odd.
    pub fn accepts(&self, x: &[bool], z: &[bool]) -> Result<bool> {
        Ok(self.f(x, z)? % 2 == 1)
    }

    fn check_z(&self, z: &[bool]) -> Result<()> {
        if z.len() < self.nbar {
            return Err(Error::Precondition(format!("|z| = {} below nbar = {}", z.len(), self.nbar)));
        }
        Ok(())
    }

    /// One verifier run on query `o` with witness `w`.
    pub fn verify(&self, o: &[bool], w: &[bool]) -> Result<bool> {
        let mut tape = vec!["<"];
        tape.extend(bit_symbols(o));
        tape.push("+");
        tape.extend(bit_symbols(w));
        let end = run_to_halt(&self.verifier_v, &tape, 0)?;
        Ok(self.verifier_v.states[end.state].starts_with("acc"))
    }

    /// Witness search over every string of at most [`MAX_WITNESS`] bits.
    pub fn accepting_witness(&self, o: &[bool]) -> Result<Option<Vec<bool>>> {
        for len in 0..=MAX_WITNESS {
            for bits in 0..1u32 << len {
                let w: Vec<bool> = (0..len).map(|i| bits >> (len - 1 - i) & 1 == 1).collect();
                if self.verify(o, &w)? {
                    return Ok(Some(w));
                }
            }
        }
        Ok(None)
    }

    /// Correct oracle answers computed from the membership table.
    pub fn true_answers(&self, x: &[bool]) -> Result<Vec<bool>> {
        let mut z = Vec::new();
        for _ in 0..self.nbar {
            let o = bits_to_string(&self.query(x, &z)?);
            let a = *self.membership.get(&o).ok_or_else(|| Error::Precondition(format!("no membership entry for {o:?}")))?;
            z.push(a);
        }
        Ok(z)
    }

    /// Ground-truth `f` from the table.
    pub fn table_f(&self, x: &[bool], z: &[bool]) -> Result<u64> {
        let k = f_key(x, &z[..self.nbar]);
        self.f_table.get(&k).copied().ok_or_else(|| Error::Precondition(format!("no f_table entry for {k:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KrentelValue {
    pub c: i64,
    pub f: u64,
    pub target_total: i64,
}

/// `C(x, z)` with each yes-guess charged `2^nbar` only when the verifier
/// rejects its query, and the idealized total `2^(nbar+5) C + 8 f`.
pub fn krentel_cost(p: &OracleProblem, x: &[bool], z: &[bool]) -> Result<KrentelValue> {
    let n = p.nbar;
    let qs = p.queries(x, z)?;
    let mut c = 0i64;
    for j in 1..=n {
        if !z[j - 1] {
            c += 1 << (n - j);
        } else if p.accepting_witness(&qs[j - 1])?.is_none() {
            c += 1 << n;
        }
    }
    let f = p.f(x, z)?;
    Ok(KrentelValue { c, f, target_total: (c << (n + 5)) + 8 * f as i64 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    Accept,
    Reject,
    CheckBit(usize),
}

/// Role of a strip of size `r` when the last row has `mu` intervals.
pub fn interval_role(r: usize, mu: usize, z: &[bool], nbar: usize, f: u64) -> Role {
    let i = mu as i64 + 2 - r as i64;
    if i <= 0 {
        return Role::Accept;
    }
    let mut acc = 0i64;
    for k in 1..=nbar {
        acc += check_k(z, nbar, k);
        if i <= acc {
            return Role::CheckBit(k);
        }
    }
    if i <= acc + 8 * f as i64 {
        Role::Reject
    } else {
        Role::Accept
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Gwt,
    Fwt,
    Pwt,
}

/// Square weights per construction variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostModel {
    pub variant: Variant,
    /// Cost of a rejecting square in an ordinary strip.
    pub rejection: i64,
    /// Cost of the parity square in the leftmost strip.
    pub leftmost_rejection: i64,
    /// Weight of an illegal pair or square in Layer 1.
    pub layer1_fault: i64,
    /// Weight of an illegal pair or square in the upper layers.
    pub upper_fault: i64,
    pub border_c: i64,
}

impl CostModel {
    pub fn new(variant: Variant) -> Self {
        match variant {
            Variant::Gwt => CostModel { variant, rejection: 1, leftmost_rejection: 1, layer1_fault: 1, upper_fault: 1, border_c: 21 },
            Variant::Fwt => CostModel { variant, rejection: 1, leftmost_rejection: 1, layer1_fault: 48, upper_fault: 5, border_c: 0 },
            Variant::Pwt => CostModel { variant, rejection: 2, leftmost_rejection: 1, layer1_fault: 96, upper_fault: 10, border_c: 0 },
        }
    }

    /// Square cost from its flags: rejection, Layer-1 pair/square faults and
    /// upper-layer faults.
    pub fn square_cost(&self, rejecting: bool, f1_p1: i64, upper: i64) -> i64 {
        self.rejection * rejecting as i64 + self.layer1_fault * f1_p1 + self.upper_fault * upper
    }
}

/// Smallest last-row interval count that fits every role range for any `z`.
pub fn required_mu(nbar: usize) -> usize {
    nbar * (1 << (2 * nbar + 5)) + 8 * ((1 << nbar) - 1) + 2
}

/// A grid size whose fault-free last row has exactly [`required_mu`]
/// intervals, placed partway into an outer-loop pass so the size sequence
/// shows its duplicate.
pub fn krentel_grid_n(nbar: usize) -> u64 {
    let m = required_mu(nbar) as u64;
    (layer1::end_row_index(m) + 2) as u64 + m * m
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SizeSequence {
    pub n: u64,
    pub mu: usize,
    /// Interval sizes left to right, size-1 intervals dropped.
    pub sizes: Vec<usize>,
}

pub fn fault_free_sizes(n: u64) -> Result<SizeSequence> {
    let mu = layer1::mu(n)? as usize;
    let sizes = layer1::fault_free_final_sizes(n)?.into_iter().filter(|&s| s >= 2).collect();
    Ok(SizeSequence { n, mu, sizes })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleCensus {
    /// Strips checking bit `k`, index `k - 1`.
    pub check: Vec<usize>,
    pub reject: usize,
    pub accept: usize,
}

pub fn role_census(seq: &SizeSequence, z: &[bool], nbar: usize, f: u64) -> RoleCensus {
    let mut c = RoleCensus { check: vec![0; nbar], reject: 0, accept: 0 };
    for &r in &seq.sizes {
        match interval_role(r, seq.mu, z, nbar, f) {
            Role::Accept => c.accept += 1,
            Role::Reject => c.reject += 1,
            Role::CheckBit(k) => c.check[k - 1] += 1,
        }
    }
    c
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StripTotal {
    pub total: i64,
    pub census: RoleCensus,
    /// Whether the strips checking each bit can be tiled at zero cost.
    pub bit_free: Vec<bool>,
    pub leftmost_accepts: Option<bool>,
}

/// Minimum top-layer cost over a fault-free size sequence when every strip
/// carries `(x, z)`. Strips pick their best witness independently.
pub fn strip_level_total(p: &OracleProblem, x: &[bool], z: &[bool], seq: &SizeSequence, variant: Variant) -> Result<StripTotal> {
    let model = CostModel::new(variant);
    let n = p.nbar;
    let f = p.f(x, z)?;
    let qs = p.queries(x, z)?;
    let bit_free = (0..n)
        .map(|k| Ok(z[k] && p.accepting_witness(&qs[k])?.is_some()))
        .collect::<Result<Vec<bool>>>()?;
    let strip_cost = |r: usize| match interval_role(r, seq.mu, z, n, f) {
        Role::Accept => 0,
        Role::Reject => model.rejection,
        Role::CheckBit(k) if bit_free[k - 1] => 0,
        Role::CheckBit(_) => model.rejection,
    };
    let (mut total, mut leftmost_accepts, body) = match variant {
        Variant::Pwt => {
            let acc = p.accepts(x, z)?;
            (model.leftmost_rejection * acc as i64, Some(acc), seq.sizes.get(1..).unwrap_or(&[]))
        }
        _ => (0, None, &seq.sizes[..]),
    };
    total += body.iter().map(|&r| strip_cost(r)).sum::<i64>();
    if variant != Variant::Pwt {
        leftmost_accepts = None;
    }
    let census = role_census(&SizeSequence { n: seq.n, mu: seq.mu, sizes: body.to_vec() }, z, n, f);
    Ok(StripTotal { total, census, bit_free, leftmost_accepts })
}

/// All `2^nbar` answer strings, `z_1` first.
pub fn all_z(nbar: usize) -> Vec<Vec<bool>> {
    (0..1u32 << nbar).map(|b| (0..nbar).map(|i| b >> (nbar - 1 - i) & 1 == 1).collect()).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Minimization {
    pub totals: Vec<(String, i64)>,
    pub best: Vec<bool>,
    pub best_total: i64,
    pub unique: bool,
}

/// Exhaustive minimization of the strip-level total over `z`.
pub fn minimize_over_z(p: &OracleProblem, x: &[bool], seq: &SizeSequence, variant: Variant) -> Result<Minimization> {
    let mut totals = Vec::new();
    for z in all_z(p.nbar) {
        let t = strip_level_total(p, x, &z, seq, variant)?.total;
        totals.push((z, t));
    }
    let best_total = totals.iter().map(|t| t.1).min().expect("at least one z");
    let winners: Vec<&(Vec<bool>, i64)> = totals.iter().filter(|t| t.1 == best_total).collect();
    Ok(Minimization {
        best: winners[0].0.clone(),
        unique: winners.len() == 1,
        best_total,
        totals: totals.iter().map(|(z, t)| (bits_to_string(z), *t)).collect(),
    })
}

/// Recovery rule: `round(total / 8) mod 2^nbar`.
pub fn recover_f(total: i64, nbar: usize) -> u64 {
    let q = (total as f64 / 8.0).round() as i64;
    q.rem_euclid(1 << nbar) as u64
}

// ---- Stage 1: measuring the strip ------------------------------------------

pub const STAGE1_SYMBOLS: [&str; 18] =
    ["X", "S", "0", "1", "2", "3", "0'", "1'", "2'", "3'", "B", "B'", "c0", "c0'", "c1", "c1'", "T", "#"];

/// Shuttle counter for one strip `X S y B* T X`. A marker sweeps right and
/// marks one uncounted cell per pass; after each mark the head returns to
/// the binary counter at the left end of the `B` run (least significant bit
/// first) and increments it. Reaching `T` ends the count in `done`; a carry
/// into `T` ends it in `over`. The counter then holds `r - 4`.
pub fn stage1_counter_machine() -> TuringMachine {
    let states = ["start", "back_inc", "seek", "inc", "back_scan", "done", "over"];
    let mut tm = TuringMachine::new(&states, &STAGE1_SYMBOLS, "#", Direction::Up).expect("static alphabet");
    let digits = ["0", "1", "2", "3"];
    let mut add = |q: &str, a: &str, p: &str, b: &str, m: Move| tm.add(q, a, p, b, m).expect("names valid");
    add("start", "S", "start", "S", Move::R);
    for d in digits {
        let dm = format!("{d}'");
        add("start", d, "back_inc", &dm, Move::L);
        add("start", &dm, "start", &dm, Move::R);
    }
    add("start", "B", "back_inc", "B'", Move::L);
    add("start", "c0", "back_inc", "c0'", Move::L);
    add("start", "c1", "back_inc", "c1'", Move::L);
    for s in ["B'", "c0'", "c1'"] {
        add("start", s, "start", s, Move::R);
    }
    add("start", "T", "done", "T", Move::S);
    for s in STAGE1_SYMBOLS.iter().filter(|&&s| !matches!(s, "S" | "X" | "#")) {
        add("back_inc", s, "back_inc", s, Move::L);
        add("back_scan", s, "back_scan", s, Move::L);
    }
    add("back_inc", "S", "seek", "S", Move::R);
    add("back_scan", "S", "start", "S", Move::R);
    for d in digits {
        add("seek", d, "seek", d, Move::R);
        let dm = format!("{d}'");
        add("seek", &dm, "seek", &dm, Move::R);
    }
    for (from, to) in [("B", "c1"), ("B'", "c1'"), ("c0", "c1"), ("c0'", "c1'")] {
        add("seek", from, "back_scan", to, Move::L);
        add("inc", from, "back_scan", to, Move::L);
    }
    for (from, to) in [("c1", "c0"), ("c1'", "c0'")] {
        add("seek", from, "inc", to, Move::R);
        add("inc", from, "inc", to, Move::R);
    }
    add("seek", "T", "over", "T", Move::S);
    add("inc", "T", "over", "T", Move::S);
    tm
}

/// Strip tape `X S y B^blanks T X`.
pub fn stage1_strip(y: &[u8], blanks: usize) -> Vec<&'static str> {
    let mut t = vec!["X", "S"];
    t.extend(y.iter().map(|&d| STAGE1_SYMBOLS[2 + d as usize]));
    t.extend(std::iter::repeat("B").take(blanks));
    t.extend(["T", "X"]);
    t
}

/// Runs the counter on a strip and returns the counted value, or `None`
/// when the counter overflows into `T` (a strip too narrow to measure
/// itself).
pub fn run_stage1(y: &[u8], blanks: usize) -> Result<Option<u64>> {
    let tm = stage1_counter_machine();
    let strip = stage1_strip(y, blanks);
    let tape = strip.iter().map(|s| tm.symbol(s)).collect::<Result<Vec<_>>>()?;
    let r = tape.len();
    let cfg = TmConfiguration { tape, head: 1, state: tm.state("start")? };
    let (end, _, halted) = tm_run(&tm, &cfg, 4 * r * r + 100);
    if !halted {
        return Err(Error::Precondition("stage-1 counter did not halt".into()));
    }
    if tm.states[end.state] != "done" {
        return Ok(None);
    }
    let mut value = 0u64;
    for (i, &s) in end.tape[2 + y.len()..].iter().take_while(|&&s| tm.alphabet[s] != "T").enumerate() {
        if tm.alphabet[s].starts_with("c1") {
            value |= 1 << i;
        }
    }
    Ok(Some(value))
}

// ---- toy problems ----------------------------------------------------------

/// `M`: query `j` is `x` followed by the first `j - 1` answers (each
/// complemented when `complement` is set); the output is `z` itself.
pub fn append_query_machine(complement: bool) -> TuringMachine {
    let states = ["start", "toplus", "take", "put0", "put1", "rewind", "skipf", "emit"];
    let alphabet = ["Q", "F", "0", "1", "+", "#"];
    let mut tm = TuringMachine::new(&states, &alphabet, "#", Direction::Up).expect("static alphabet");
    let (w0, w1) = if complement { ("1", "0") } else { ("0", "1") };
    let rules: [(&str, &str, &str, &str, Move); 17] = [
        ("start", "Q", "toplus", "Q", Move::R),
        ("start", "F", "skipf", "F", Move::R),
        ("toplus", "0", "toplus", "0", Move::R),
        ("toplus", "1", "toplus", "1", Move::R),
        ("toplus", "+", "take", "+", Move::R),
        ("take", "0", "put0", "+", Move::L),
        ("take", "1", "put1", "+", Move::L),
        ("take", "#", "rewind", "#", Move::L),
        ("put0", "+", "toplus", w0, Move::R),
        ("put1", "+", "toplus", w1, Move::R),
        ("rewind", "0", "rewind", "0", Move::L),
        ("rewind", "1", "rewind", "1", Move::L),
        ("rewind", "+", "rewind", "+", Move::L),
        ("rewind", "Q", "emit", "Q", Move::R),
        ("skipf", "0", "skipf", "0", Move::R),
        ("skipf", "1", "skipf", "1", Move::R),
        ("skipf", "+", "emit", "+", Move::R),
    ];
    for (q, a, p, b, m) in rules {
        tm.add(q, a, p, b, m).expect("names valid");
    }
    tm
}

const V_ALPHABET: [&str; 6] = ["<", "0", "1", "+", "x", "#"];

/// `V`: accept iff the query ends in 1; the witness is ignored.
pub fn ends_in_one_oracle_verifier() -> TuringMachine {
    let states = ["start", "scan", "last", "acc", "rej"];
    let mut tm = TuringMachine::new(&states, &V_ALPHABET, "#", Direction::Up).expect("static alphabet");
    let rules: [(&str, &str, &str, &str, Move); 7] = [
        ("start", "<", "scan", "<", Move::R),
        ("scan", "0", "scan", "0", Move::R),
        ("scan", "1", "scan", "1", Move::R),
        ("scan", "+", "last", "+", Move::L),
        ("last", "1", "acc", "1", Move::S),
        ("last", "0", "rej", "0", Move::S),
        ("last", "<", "rej", "<", Move::S),
    ];
    for (q, a, p, b, m) in rules {
        tm.add(q, a, p, b, m).expect("names valid");
    }
    tm
}

/// `V`: the witness `1^i` (then anything not starting with 1) points at
/// position `i` of the query; accept iff that bit is 1. Some witness of at
/// most four bits works exactly when one of the first five query bits is 1.
pub fn pointer_oracle_verifier() -> TuringMachine {
    let states = ["start", "findw", "atw", "back", "eat", "check", "look", "acc", "rej"];
    let mut tm = TuringMachine::new(&states, &V_ALPHABET, "#", Direction::Up).expect("static alphabet");
    let mut add = |q: &str, a: &str, p: &str, b: &str, m: Move| tm.add(q, a, p, b, m).expect("names valid");
    add("start", "<", "findw", "<", Move::R);
    for s in ["0", "1", "x"] {
        add("findw", s, "findw", s, Move::R);
    }
    add("findw", "+", "atw", "+", Move::R);
    add("atw", "x", "atw", "x", Move::R);
    add("atw", "1", "back", "x", Move::L);
    add("atw", "0", "check", "0", Move::L);
    add("atw", "#", "check", "#", Move::L);
    for s in ["0", "1", "x", "+"] {
        add("back", s, "back", s, Move::L);
        add("check", s, "check", s, Move::L);
    }
    add("back", "<", "eat", "<", Move::R);
    add("check", "<", "look", "<", Move::R);
    add("eat", "x", "eat", "x", Move::R);
    add("eat", "0", "findw", "x", Move::R);
    add("eat", "1", "findw", "x", Move::R);
    add("eat", "+", "rej", "+", Move::S);
    add("look", "x", "look", "x", Move::R);
    add("look", "1", "acc", "1", Move::S);
    add("look", "0", "rej", "0", Move::S);
    add("look", "+", "rej", "+", Move::S);
    tm
}

fn all_strings(max_len: usize) -> Vec<Vec<bool>> {
    let mut v = Vec::new();
    for len in 0..=max_len {
        for b in 0..1u32 << len {
            v.push((0..len).map(|i| b >> (len - 1 - i) & 1 == 1).collect());
        }
    }
    v
}

/// Longest input the toy problems are tabulated for.
pub const TOY_MAX_X: usize = 2;

fn toy(name: &str, nbar: usize, complement: bool, pointer: bool) -> OracleProblem {
    let member = |o: &[bool]| if pointer { o.iter().take(MAX_WITNESS + 1).any(|&b| b) } else { o.last() == Some(&true) };
    let membership = all_strings(TOY_MAX_X + nbar - 1).into_iter().map(|o| (bits_to_string(&o), member(&o))).collect();
    let mut f_table = BTreeMap::new();
    for x in all_strings(TOY_MAX_X) {
        for z in all_z(nbar) {
            let f = z.iter().fold(0u64, |a, &b| 2 * a + b as u64);
            f_table.insert(f_key(&x, &z), f);
        }
    }
    OracleProblem {
        name: name.to_string(),
        nbar,
        machine_m: append_query_machine(complement),
        verifier_v: if pointer { pointer_oracle_verifier() } else { ends_in_one_oracle_verifier() },
        membership,
        f_table,
    }
}

/// Four toy problems: one to three oracle bits, two verifiers, plain and
/// complemented query feedback. In every one `f(x, z) = z` read in binary,
/// so `x` is in the decision language when the last correct answer is 1.
pub fn toy_problems() -> Vec<OracleProblem> {
    vec![
        toy("ends1-n1", 1, false, false),
        toy("ends1-n2", 2, false, false),
        toy("contains1-n2", 2, false, true),
        toy("ends1-n3-flip", 3, true, false),
    ]
}

/// Strip-level sequences for each `nbar`, computed once.
pub fn sequences_for(nbars: &[usize]) -> Result<HashMap<usize, SizeSequence>> {
    nbars.iter().map(|&b| Ok((b, fault_free_sizes(krentel_grid_n(b))?))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn check_k_values() {
        let z = [true, false, true];
        assert_eq!(check_k(&z, 3, 1), 2048);
        assert_eq!(check_k(&z, 3, 2), 512);
        assert_eq!(check_k(&z, 3, 3), 2048);
    }

    /// A problem with a chosen verifier outcome per query.
    fn scripted(nbar: usize) -> OracleProblem {
        toy("t", nbar, false, false)
    }

    #[test]
    fn krentel_cost_examples() {
        let p = scripted(2);
        // z = 00: both no-guesses, C = 2 + 1
        assert_eq!(krentel_cost(&p, &[true], &[false, false]).unwrap().c, 3);
        // z = 11 with x = "1": o_1 = "1" accepted, o_2 = "11" accepted
        assert_eq!(krentel_cost(&p, &[true], &[true, true]).unwrap().c, 0);
        // x = "1", z = 10: o_2 = "11" but z_2 = 0 charges 1
        assert_eq!(krentel_cost(&p, &[true], &[true, false]).unwrap().c, 1);
        // x = "0", z = 11: o_1 = "0" rejected (4), o_2 = "01" accepted
        let v = krentel_cost(&p, &[false], &[true, true]).unwrap();
        assert_eq!(v.c, 4);
        assert_eq!(v.target_total, (4 << 7) + 8 * 3);
    }

    #[test]
    fn queries_follow_answers() {
        let p = toy("t", 3, true, false);
        let q = p.queries(&[true, false], &[true, false, true]).unwrap();
        let s: Vec<String> = q.iter().map(|o| bits_to_string(o)).collect();
        assert_eq!(s, ["10", "100", "1001"]);
        assert_eq!(p.f(&[true, false], &[true, false, true]).unwrap(), 5);
        assert_eq!(p.query(&[], &[]).unwrap(), Vec::<bool>::new());
    }

    #[test]
    fn verifiers_match_membership() {
        for p in toy_problems() {
            for (o, &m) in &p.membership {
                let o = parse_bits(o).unwrap();
                assert_eq!(p.accepting_witness(&o).unwrap().is_some(), m, "{} on {:?}", p.name, o);
            }
        }
    }

    #[test]
    fn pointer_verifier_needs_the_right_witness() {
        let v = toy("t", 2, false, true);
        assert!(v.verify(&[false, true], &[true]).unwrap());
        assert!(!v.verify(&[false, true], &[]).unwrap());
        assert!(!v.verify(&[false, true], &[true, true]).unwrap());
        assert!(v.verify(&[true, false], &[false, true]).unwrap());
    }

    #[test]
    fn interval_role_boundaries() {
        let z = [false];
        assert_eq!(interval_role(12, 10, &z, 1, 0), Role::Accept);
        assert_eq!(interval_role(11, 10, &z, 1, 0), Role::CheckBit(1));
        let mu = 200;
        assert_eq!(interval_role(mu + 2 - 64, mu, &z, 1, 1), Role::CheckBit(1));
        assert_eq!(interval_role(mu + 2 - 65, mu, &z, 1, 1), Role::Reject);
        assert_eq!(interval_role(mu + 2 - 72, mu, &z, 1, 1), Role::Reject);
        assert_eq!(interval_role(mu + 2 - 73, mu, &z, 1, 1), Role::Accept);
    }

    #[test]
    fn stage1_counts_strip_size() {
        for y in [vec![], vec![3], vec![0, 1, 2, 3]] {
            for blanks in 4..40 {
                let r = y.len() + blanks + 4;
                assert_eq!(run_stage1(&y, blanks).unwrap(), Some(r as u64 - 4), "y={y:?} blanks={blanks}");
            }
        }
    }

    #[test]
    fn stage1_overflow_on_narrow_strip() {
        assert_eq!(run_stage1(&[1, 2, 3, 0], 1).unwrap(), None);
    }

    #[test]
    fn census_within_slack() {
        let seq = fault_free_sizes(krentel_grid_n(1)).unwrap();
        assert_eq!(seq.mu, required_mu(1));
        for z in all_z(1) {
            for f in 0..2u64 {
                let c = role_census(&seq, &z, 1, f);
                let ideal = check_k(&z, 1, 1) + 8 * f as i64;
                let got = (c.check[0] + c.reject) as i64;
                assert!((ideal - 2..=ideal + 2).contains(&got), "{got} vs {ideal}");
            }
        }
    }

    #[test]
    fn cost_model_separation() {
        for v in [Variant::Gwt, Variant::Fwt, Variant::Pwt] {
            let m = CostModel::new(v);
            assert!(m.rejection <= m.layer1_fault && m.rejection <= m.upper_fault);
            assert!(m.leftmost_rejection <= m.rejection);
        }
        let f = CostModel::new(Variant::Fwt);
        let p = CostModel::new(Variant::Pwt);
        assert_eq!(f.square_cost(true, 1, 2), 1 + 48 + 10);
        assert_eq!(p.square_cost(true, 1, 2), 2 * f.square_cost(true, 1, 2));
        assert!(p.rejection > f.rejection);
    }

    #[test]
    fn problem_file_round_trip() {
        let p = toy_problems().remove(2);
        let s = serde_json::to_string(&p.to_file()).unwrap();
        let q = OracleProblem::from_json_str(&s).unwrap();
        assert_eq!(q.membership, p.membership);
        assert_eq!(q.verify(&[false, true], &[true]).unwrap(), true);
    }

    #[test]
    fn pwt_non_leftmost_costs_even() {
        let p = scripted(1);
        let seq = fault_free_sizes(krentel_grid_n(1)).unwrap();
        for x in all_strings(2) {
            for z in all_z(1) {
                let t = strip_level_total(&p, &x, &z, &seq, Variant::Pwt).unwrap();
                let parity = t.leftmost_accepts.unwrap() as i64;
                assert_eq!((t.total - parity) % 2, 0);
            }
        }
    }

    proptest! {
        #[test]
        fn roles_partition_range(zb in 0u32..8, f in 0u64..8, mu in 6000usize..6300) {
            let z: Vec<bool> = (0..3).map(|i| zb >> i & 1 == 1).collect();
            let checks: i64 = (1..=3).map(|k| check_k(&z, 3, k)).sum();
            let mut last = 0usize;
            for r in (2..=mu + 2).rev() {
                let i = mu as i64 + 2 - r as i64;
                let role = interval_role(r, mu, &z, 3, f);
                let want = if i <= 0 { Role::Accept } else if i <= checks { role } else if i <= checks + 8 * f as i64 { Role::Reject } else { Role::Accept };
                prop_assert_eq!(role, want);
                if let Role::CheckBit(k) = role {
                    prop_assert!(k >= last);
                    last = k;
                }
            }
        }
    }
}
