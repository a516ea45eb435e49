//! `ti`: command line front end.
//!
//! Every command writes one JSON document to standard output. `--pretty`
//! adds row art on standard error. Exit codes: 0 success, 1 a failed bound
//! check, 2 bad flags or unreadable input, 3 a capacity limit.

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use ti_core::consensus::{self, Digit4String};
use ti_core::faultlab::{self, FaultPlan, Placement, Repair};
use ti_core::gwt::{self, GwtCost, GwtTile};
use ti_core::krentel::{self, OracleProblem, Variant};
use ti_core::layer1::{self, Layer1Tiling};
use ti_core::layer2;
use ti_core::solver;
use ti_core::tiling::{self, TileRuleSet};
use ti_core::tm::TuringMachine;
use ti_core::Error;

#[derive(Parser)]
#[command(name = "ti", version, about = "Weighted tiling constructions, simulation and exact solving")]
struct Cli {
    /// Worker threads for parallel stages (default: available cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Write row art to standard error.
    #[arg(long, global = true)]
    pretty: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compile a Turing machine file into a rule set of computation squares.
    CompileTm {
        #[arg(long)]
        machine: PathBuf,
        /// Largest square table allowed (alphabet size to the fourth power).
        #[arg(long)]
        budget: Option<u128>,
    },
    /// Lower a rule set with square costs to pair costs for a fixed grid.
    CompileSquares {
        #[arg(long)]
        rules: PathBuf,
        #[arg(long)]
        height: usize,
        #[arg(long)]
        width: usize,
    },
    /// Fault-free run of one layer on an n x n grid.
    Simulate {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=4))]
        layer: u8,
        #[arg(long)]
        n: usize,
        /// Include the final row text (layers 1 and 2).
        #[arg(long)]
        dump_final: bool,
        /// Include every row (layers 1 and 2).
        #[arg(long)]
        dump_rows: bool,
        /// Layer 3: witness bits written into every verifier strip.
        #[arg(long, default_value = "")]
        witness: String,
        /// Layer 3: run the consensus machine on these base-4 strings instead.
        #[arg(long, value_delimiter = ',')]
        ys: Vec<String>,
        /// Layer 4: toy problem name.
        #[arg(long)]
        toy: Option<String>,
        /// Layer 4: input bits.
        #[arg(long)]
        x: Option<String>,
        /// Layer 4: oracle answer bits.
        #[arg(long)]
        z: Option<String>,
        #[arg(long, value_enum, default_value_t = VariantArg::Fwt)]
        variant: VariantArg,
    },
    /// Grid side produced for input bits: counter steps plus three.
    Reduce {
        #[arg(long)]
        x: String,
    },
    /// Interval count of the final row of a fault-free grid.
    Mu {
        #[arg(long)]
        n: u64,
    },
    /// Exact minimum cost of a rule set on a grid.
    Solve {
        #[arg(long)]
        rules: PathBuf,
        #[arg(long)]
        height: usize,
        #[arg(long)]
        width: usize,
        /// Write the optimal tiling here.
        #[arg(long)]
        witness: Option<PathBuf>,
        /// State budget; overrides TI_TILE_BUDGET.
        #[arg(long)]
        budget: Option<u128>,
        #[arg(long, value_enum, default_value_t = Method::Auto)]
        method: Method,
    },
    /// Audit a Layer-1 tiling (fault-free unless --rows is given).
    Audit {
        #[arg(long)]
        n: Option<usize>,
        /// Tiling file: {"n": N, "rows": [row text, ...]} for r_1 ..= r_{n-2}.
        #[arg(long)]
        rows: Option<PathBuf>,
    },
    /// Inject seeded faults into the fault-free Layer-1 tiling and audit it.
    Inject {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        count: usize,
        /// uniform, interval, row:T or head-deletion:T
        #[arg(long, default_value = "uniform")]
        placement: String,
        #[arg(long, value_enum, default_value_t = RepairArg::Heal)]
        repair: RepairArg,
        /// Write the perturbed rows here for a later `audit --rows`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fault-free invariant checks for each grid size.
    VerifyLemmas {
        #[arg(long, value_delimiter = ',', required = true)]
        n_list: Vec<u64>,
    },
    /// Oracle accounting for one problem, input and answer string.
    Krentel {
        /// Problem file.
        #[arg(long, conflicts_with = "toy")]
        problem: Option<PathBuf>,
        /// Built-in toy problem name.
        #[arg(long)]
        toy: Option<String>,
        #[arg(long)]
        x: Option<String>,
        /// Defaults to the correct answers.
        #[arg(long)]
        z: Option<String>,
        #[arg(long, value_enum, default_value_t = VariantArg::Fwt)]
        variant: VariantArg,
        /// Print the problem file instead.
        #[arg(long)]
        export: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Auto,
    Dp,
    Exhaustive,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Gwt,
    Fwt,
    Pwt,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Gwt => Variant::Gwt,
            VariantArg::Fwt => Variant::Fwt,
            VariantArg::Pwt => Variant::Pwt,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum RepairArg {
    None,
    Greedy,
    Heal,
}

impl From<RepairArg> for Repair {
    fn from(r: RepairArg) -> Self {
        match r {
            RepairArg::None => Repair::None,
            RepairArg::Greedy => Repair::Greedy,
            RepairArg::Heal => Repair::Heal,
        }
    }
}

enum Failure {
    Usage(String),
    Capacity(String),
    Bound(Value),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Capacity { .. } => Failure::Capacity(e.to_string()),
            e => Failure::Usage(e.to_string()),
        }
    }
}

type Outcome = Result<Value, Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn write(path: &Path, v: &Value) -> Result<(), Failure> {
    std::fs::write(path, to_text(v)).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn to_text(v: &Value) -> String {
    let mut s = serde_json::to_string(v).expect("json values serialize");
    s.push('\n');
    s
}

/// Writes the result document; a closed pipe is not an error.
fn emit(v: &Value) {
    use std::io::Write;
    let _ = std::io::stdout().lock().write_all(to_text(v).as_bytes());
}

fn to_value<T: serde::Serialize>(t: &T) -> Value {
    serde_json::to_value(t).expect("report types serialize")
}

fn bits(s: &str) -> Result<Vec<bool>, Failure> {
    Ok(krentel::parse_bits(s)?)
}

fn budget(flag: Option<u128>) -> u128 {
    flag.unwrap_or_else(solver::budget_from_env)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli.command, cli.pretty) {
        Ok(v) => {
            emit(&v);
            ExitCode::SUCCESS
        }
        Err(Failure::Bound(v)) => {
            emit(&v);
            ExitCode::from(1)
        }
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Capacity(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}

fn run(cmd: Command, pretty: bool) -> Outcome {
    match cmd {
        Command::CompileTm { machine, budget: b } => {
            let tm = TuringMachine::from_json_str(&read(&machine)?)?;
            Ok(tm_rules(&tm, budget(b))?.to_json())
        }
        Command::CompileSquares { rules, height, width } => {
            let rs = TileRuleSet::from_json_str(&read(&rules)?)?;
            let comp = tiling::compile_squares_to_pairs(&rs, height, width);
            Ok(json!({
                "height": height,
                "width": width,
                "penalty": comp.penalty,
                "original_size": comp.original_size,
                "rules": comp.rules.to_json(),
            }))
        }
        Command::Simulate { layer, n, dump_final, dump_rows, witness, ys, toy, x, z, variant } => match layer {
            1 => simulate_layer1(n, dump_final, dump_rows, pretty),
            2 => simulate_layer2(n, dump_final, dump_rows, pretty),
            3 if ys.is_empty() => simulate_verifier(n, &witness, pretty),
            3 => simulate_consensus(&ys),
            _ => simulate_accounting(n, toy, x, z, variant.into()),
        },
        Command::Reduce { x } => Ok(json!(layer2::reduce_input(&x)? as u64)),
        Command::Mu { n } => Ok(json!(layer1::mu(n)?)),
        Command::Solve { rules, height, width, witness, budget: b, method } => {
            let rs = TileRuleSet::from_json_str(&read(&rules)?)?;
            let k = budget(b);
            let res = match method {
                Method::Auto => solver::solve(&rs, height, width, k)?,
                Method::Dp => solver::solve_dp(&rs, height, width, k)?,
                Method::Exhaustive => solver::solve_exhaustive(&rs, height, width, k)?,
            };
            if let (Some(path), Some(g)) = (witness, &res.witness) {
                write(&path, &to_value(&tiling::tiling_to_file(&rs, g)))?;
            }
            Ok(to_value(&res))
        }
        Command::Audit { n, rows } => {
            let t = match (rows, n) {
                (Some(path), _) => read_rows(&path)?,
                (None, Some(n)) => layer1::simulate_layer1(n)?,
                (None, None) => return Err(usage("audit needs --n or --rows")),
            };
            if pretty {
                eprint!("{}", row_art(&t));
            }
            let report = faultlab::audit(&t)?;
            let v = to_value(&report);
            if report.passed() {
                Ok(v)
            } else {
                Err(Failure::Bound(v))
            }
        }
        Command::Inject { n, seed, count, placement, repair, out } => {
            let plan = FaultPlan { seed, count, placement: parse_placement(&placement)?, repair: repair.into() };
            let base = layer1::simulate_layer1(n)?;
            let base_costs = layer1::row_costs(&base);
            let (t, subs) = faultlab::inject(&base, &plan)?;
            if let Some(path) = out {
                write(&path, &rows_value(&t))?;
            }
            if pretty {
                eprint!("{}", row_art(&t));
            }
            let report = faultlab::audit_against(&t, &base, &base_costs, Some(seed))?;
            let v = json!({ "plan": to_value(&plan), "substitutions": to_value(&subs), "report": to_value(&report) });
            if report.passed() {
                Ok(v)
            } else {
                Err(Failure::Bound(v))
            }
        }
        Command::VerifyLemmas { n_list } => verify_lemmas(&n_list),
        Command::Krentel { problem, toy, x, z, variant, export } => {
            let p = match (problem, toy) {
                (Some(path), _) => OracleProblem::from_json_str(&read(&path)?)?,
                (None, Some(name)) => toy_problem(&name)?,
                (None, None) => return Err(usage("krentel needs --problem or --toy")),
            };
            if export {
                return Ok(to_value(&p.to_file()));
            }
            let x = x.ok_or_else(|| usage("krentel needs --x"))?;
            krentel_report(&p, &x, z.as_deref(), variant.into())
        }
    }
}

fn tm_rules(tm: &TuringMachine, budget: u128) -> Result<TileRuleSet, Failure> {
    Ok(ti_core::tm::squares_rule_set(tm, budget)?)
}

fn parse_placement(s: &str) -> Result<Placement, Failure> {
    let row = |t: &str| t.parse::<usize>().map_err(|_| usage(format!("bad row in placement `{s}`")));
    match s.split_once(':') {
        None if s == "uniform" => Ok(Placement::Uniform),
        None if s == "interval" => Ok(Placement::Interval),
        Some(("row", t)) => Ok(Placement::Row(row(t)?)),
        Some(("head-deletion", t)) => Ok(Placement::HeadDeletion(row(t)?)),
        _ => Err(usage(format!("unknown placement `{s}`"))),
    }
}

fn rows_value(t: &Layer1Tiling) -> Value {
    json!({ "n": t.n, "rows": t.rows.iter().map(|r| layer1::format_row(r)).collect::<Vec<_>>() })
}

fn read_rows(path: &Path) -> Result<Layer1Tiling, Failure> {
    let v: Value = serde_json::from_str(&read(path)?).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let rows = v["rows"].as_array().ok_or_else(|| usage("tiling file needs a `rows` array"))?;
    let rows = rows
        .iter()
        .map(|r| r.as_str().ok_or_else(|| usage("rows must be strings")).and_then(|s| Ok(layer1::parse_row(s)?)))
        .collect::<Result<Vec<_>, _>>()?;
    let n = v["n"].as_u64().map_or(rows.len() + 2, |n| n as usize);
    if rows.len() != n.saturating_sub(2) || n < 5 {
        return Err(usage(format!("n = {n} needs {} rows, file has {}", n.saturating_sub(2), rows.len())));
    }
    Ok(Layer1Tiling { n, rows })
}

fn row_art(t: &Layer1Tiling) -> String {
    (1..=t.n - 2).rev().map(|r| format!("{r:>6} {}\n", layer1::format_row(t.row(r)))).collect()
}

fn simulate_layer1(n: usize, dump_final: bool, dump_rows: bool, pretty: bool) -> Outcome {
    let t = layer1::simulate_layer1(n)?;
    if pretty {
        eprint!("{}", row_art(&t));
    }
    let w = t.width();
    let last = t.last();
    let end_rows: Vec<usize> = (1..=n - 2).filter(|&r| layer1::is_end_row(t.row(r), w)).collect();
    let mut v = json!({
        "n": n,
        "mu": layer1::mu(n as u64)?,
        "final_sizes": layer1::sizes(last),
        "final_intervals": to_value(&layer1::intervals(last)),
        "final_length": layer1::length(last),
        "final_a": layer1::a_value(&layer1::sizes(last)),
        "end_rows": end_rows,
        "faults": layer1::total_faults(&layer1::row_costs(&t)),
    });
    if dump_final {
        v["final_row"] = json!(layer1::format_row(last));
    }
    if dump_rows {
        v["rows"] = rows_value(&t)["rows"].take();
    }
    Ok(v)
}

fn simulate_layer2(n: usize, dump_final: bool, dump_rows: bool, pretty: bool) -> Outcome {
    let p = layer2::fault_free_pipeline(n, dump_rows || pretty)?;
    if pretty {
        for row in p.run.rows.iter().flatten() {
            eprintln!("{}", layer2::format_row(row));
        }
    }
    let mut v = json!({
        "n": n,
        "strips": to_value(&p.census),
        "long_form": p.census.iter().filter(|s| s.form == layer2::Form::Long).count(),
    });
    if dump_final {
        v["first_row"] = json!(layer2::format_row(&p.run.first));
        v["final_row"] = json!(layer2::format_row(&p.run.last));
    }
    if dump_rows {
        v["rows"] = json!(p.run.rows.iter().flatten().map(|r| layer2::format_row(r)).collect::<Vec<_>>());
    }
    Ok(v)
}

fn simulate_verifier(n: usize, witness: &str, pretty: bool) -> Outcome {
    let v = gwt::ends_in_one_verifier();
    let g = gwt::canonical_grid(n, &v, &bits(witness)?)?;
    let cost = GwtCost::new(&v);
    let layer3 = |r: usize| -> Vec<String> {
        (1..n - 1)
            .map(|c| match g.get(r, c) {
                GwtTile::Interior { l3, .. } => l3.name(&v.tm),
                GwtTile::Border(k) => k.name().to_string(),
            })
            .collect()
    };
    if pretty {
        for r in (1..n - 1).rev() {
            eprintln!("{r:>6} {}", layer3(r).join(" "));
        }
    }
    Ok(json!({
        "n": n,
        "verifier": "ends-in-one",
        "cost": tiling::evaluate_grid(&cost, &g),
        "border_contribution": gwt::border_contribution(&g, gwt::BORDER_C),
        "faults": to_value(&gwt::fault_totals(&cost, &g)),
        "final_row": layer3(n - 2).join(" "),
    }))
}

fn simulate_consensus(ys: &[String]) -> Outcome {
    let ys = ys.iter().map(|y| Digit4String::parse(y)).collect::<ti_core::Result<Vec<_>>>()?;
    let run = consensus::consensus_cost(&ys);
    Ok(json!({
        "ys": ys.iter().map(|y| y.to_string()).collect::<Vec<_>>(),
        "steps": run.steps,
        "completed": run.completed,
        "cost": run.cost(),
        "cost_steps": run.cost_steps,
    }))
}

fn toy_problem(name: &str) -> Result<OracleProblem, Failure> {
    let all = krentel::toy_problems();
    let names: Vec<String> = all.iter().map(|p| p.name.clone()).collect();
    all.into_iter().find(|p| p.name == name).ok_or_else(|| usage(format!("unknown toy `{name}`; known: {}", names.join(", "))))
}

fn simulate_accounting(n: usize, toy: Option<String>, x: Option<String>, z: Option<String>, variant: Variant) -> Outcome {
    let p = toy_problem(toy.as_deref().ok_or_else(|| usage("layer 4 needs --toy"))?)?;
    let x = bits(&x.ok_or_else(|| usage("layer 4 needs --x"))?)?;
    let z = match z {
        Some(z) => bits(&z)?,
        None => p.true_answers(&x)?,
    };
    let seq = krentel::fault_free_sizes(n as u64)?;
    let st = krentel::strip_level_total(&p, &x, &z, &seq, variant)?;
    Ok(json!({
        "n": n,
        "mu": seq.mu,
        "strips": seq.sizes.len(),
        "required_mu": krentel::required_mu(p.nbar),
        "total": st.total,
        "census": to_value(&st.census),
        "bit_free": st.bit_free,
    }))
}

fn krentel_report(p: &OracleProblem, x: &str, z: Option<&str>, variant: Variant) -> Outcome {
    let xb = bits(x)?;
    let truth = p.true_answers(&xb)?;
    let zb = match z {
        Some(z) => bits(z)?,
        None => truth.clone(),
    };
    if zb.len() != p.nbar {
        return Err(usage(format!("--z needs {} bits", p.nbar)));
    }
    let value = krentel::krentel_cost(p, &xb, &zb)?;
    let seq = krentel::fault_free_sizes(krentel::krentel_grid_n(p.nbar))?;
    let st = krentel::strip_level_total(p, &xb, &zb, &seq, variant)?;
    let min = krentel::minimize_over_z(p, &xb, &seq, variant)?;
    Ok(json!({
        "problem": p.name,
        "nbar": p.nbar,
        "x": x,
        "z": krentel::bits_to_string(&zb),
        "true_answers": krentel::bits_to_string(&truth),
        "c": value.c,
        "f": value.f,
        "target_total": value.target_total,
        "grid_n": seq.n,
        "mu": seq.mu,
        "strip_total": st.total,
        "recovered_f": krentel::recover_f(st.total, p.nbar),
        "minimizer": krentel::bits_to_string(&min.best),
        "minimizer_unique": min.unique,
        "min_total": min.best_total,
    }))
}

fn verify_lemmas(ns: &[u64]) -> Outcome {
    let mut all_pass = true;
    let mut out = Vec::new();
    for &n in ns {
        let t = layer1::simulate_layer1(n as usize)?;
        let w = t.width();
        let last = layer1::sizes(t.last());
        let mu = layer1::mu(n)?;
        let ends: Vec<usize> = (1..=n as usize - 2).filter(|&r| layer1::is_end_row(t.row(r), w)).collect();
        let mut offsets: Vec<i128> = ends
            .windows(2)
            .map(|p| (p[1] - p[0]) as i128 - layer1::x_value(&layer1::sizes(t.row(p[0]))) as i128)
            .collect();
        offsets.sort_unstable();
        offsets.dedup();
        let audit = faultlab::audit(&t)?;
        let checks = [
            ("mu_matches_final_interval_count", mu == last.len() as u64),
            ("mu_lower_bound", mu as f64 >= (n as f64).powf(0.25) / 2.0),
            ("final_sizes_shape", layer1::error_free_size_violations(&last, mu as usize).is_empty()),
            ("end_rows_have_zero_potential", ends.iter().all(|&r| layer1::a_value(&layer1::sizes(t.row(r))) == 0)),
            ("end_row_spacing_is_x_plus_one", offsets.iter().all(|&o| o == 1)),
            ("fault_free", audit.faults[0] == 0),
            ("audit_bounds", audit.passed()),
        ];
        all_pass &= checks.iter().all(|c| c.1);
        out.push(json!({
            "n": n,
            "mu": mu,
            "end_rows": ends,
            "end_row_spacing_minus_x": offsets,
            "complete_segments": audit.complete_count,
            "checks": checks.iter().map(|(name, pass)| json!({ "name": name, "pass": pass })).collect::<Vec<_>>(),
        }));
    }
    let v = json!({ "passed": all_pass, "results": out });
    if all_pass {
        Ok(v)
    } else {
        Err(Failure::Bound(v))
    }
}
