use serde_json::{json, Map, Value};

use cyldisc::boolalg::{self, AtomMeasure, FiniteBooleanAlgebra};
use cyldisc::cylinder::Relation;
use cyldisc::discrepancy::{self, BhkBound, GipSpec};
use cyldisc::finfield::FieldSpec;
use cyldisc::rational::{self, Rational};
use cyldisc::regularity::{self, WeightedMeasure};
use cyldisc::schema::{AlgebraFile, GeneratedRelation, MeasuresFile, PartitionFile, RelationSpec};
use cyldisc::Execution;

use crate::args::*;
use crate::output::{emit, read_json, to_value, Report};
use crate::{CliError, THREADS_ENV};

/// Largest `k` accepted by `bound`: the exact comparison raises rationals
/// to the power `2^{k−1}`.
const MAX_BOUND_K: u32 = 12;

pub fn run(cli: Cli) -> Result<(), CliError> {
    let threads = resolve_threads(cli.global.threads)?;
    let exec = configure_pool(threads)?;
    let mut global = cli.global.clone();
    global.threads = threads;
    let ctx = Ctx { global, exec };

    let (args, report) = match &cli.command {
        Command::Bound(a) => (to_value(a), bound(a)?),
        Command::GipDiscrepancy(a) => (to_value(a), gip_discrepancy(&ctx, a)?),
        Command::SehSearch(a) => (to_value(a), seh_search(&ctx, a)?),
        Command::RegularityDefect(a) => (to_value(a), regularity_defect(&ctx, a)?),
        Command::MeasureExtend(a) => (to_value(a), measure_extend(a)?),
        Command::DeterminacyCheck(a) => (to_value(a), determinacy_check(&ctx, a)?),
        Command::GenRelation(a) => (to_value(a), gen_relation(&ctx, a)?),
    };
    let config = json!({
        "args": args,
        "ci_budget": ctx.global.ci_budget,
        "execution": match ctx.exec {
            Execution::Parallel => "parallel",
            Execution::Sequential => "sequential",
        },
        "format": ctx.global.format,
        "grid_budget": ctx.global.grid_budget,
        "output": ctx.global.output,
        "point_budget": ctx.global.point_budget,
        "threads": threads,
    });
    emit(&report, cli.command.name(), &config, ctx.global.format, ctx.global.output.as_deref())?;
    match report.failure {
        Some(msg) => Err(CliError::internal(msg)),
        None => Ok(()),
    }
}

struct Ctx {
    global: GlobalArgs,
    exec: Execution,
}

fn resolve_threads(flag: usize) -> Result<usize, CliError> {
    let requested = match std::env::var(THREADS_ENV) {
        Ok(v) => v.trim().parse::<usize>().map_err(|_| {
            CliError::validation(format!("{THREADS_ENV}={v:?} is not a thread count"))
        })?,
        Err(_) => flag,
    };
    Ok(match requested {
        0 => std::thread::available_parallelism().map_or(1, |n| n.get()),
        n => n,
    })
}

#[cfg(feature = "parallel")]
fn configure_pool(threads: usize) -> Result<Execution, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::internal(format!("thread pool: {e}")))?;
    Ok(if threads > 1 { Execution::Parallel } else { Execution::Sequential })
}

#[cfg(not(feature = "parallel"))]
fn configure_pool(_threads: usize) -> Result<Execution, CliError> {
    Ok(Execution::Sequential)
}

fn fmt(r: &Rational) -> String {
    rational::format(r)
}

fn parse_rational(what: &str, text: &str) -> Result<Rational, CliError> {
    rational::parse(text).map_err(|e| CliError::validation(format!("--{what}: {e}")))
}

fn load_relation(path: &std::path::Path, point_budget: u64) -> Result<Relation, CliError> {
    let spec: RelationSpec = read_json(path)?;
    Ok(spec.build(point_budget)?)
}

fn load_measures(path: Option<&std::path::Path>, rel: &Relation) -> Result<Vec<WeightedMeasure>, CliError> {
    match path {
        None => Ok(regularity::uniform_measures(&rel.space)),
        Some(p) => {
            let file: MeasuresFile = read_json(p)?;
            Ok(file.build()?)
        }
    }
}

fn field(p: u64, m: u32, poly: &Option<Vec<u64>>) -> Result<FieldSpec, CliError> {
    Ok(match poly {
        Some(poly) => FieldSpec::new(p, m, poly.clone())?,
        None => FieldSpec::first_irreducible(p, m)?,
    })
}

fn field_json(f: &FieldSpec) -> Value {
    json!({ "p": f.p(), "m": f.m(), "poly": f.poly(), "q": f.q() })
}

/// `"0.125"` as the rational `125/1000`.
fn decimal(text: &str) -> Rational {
    let (int, frac) = text.split_once('.').unwrap_or((text, ""));
    let den = format!("1{}", "0".repeat(frac.len()));
    rational::parse(&format!("{int}{frac}/{den}")).expect("decimal rendering")
}

fn bound_json(b: &BhkBound) -> Value {
    let shown = b.display();
    let exact = b.exact_rational();
    json!({
        "value": shown,
        // the shown decimal is an upper bound, equal to the bound only when `upper` is false
        "upper": exact.as_ref() != Some(&decimal(&shown)),
        "exact": exact.as_ref().map(fmt),
        "power": 1u64 << (b.k - 1),
        "powered_rhs": fmt(&b.powered_rhs()),
    })
}

fn bound(a: &BoundArgs) -> Result<Report, CliError> {
    if a.q < 2 || a.s < 1 || !(2..=MAX_BOUND_K).contains(&a.k) {
        return Err(CliError::validation(format!(
            "bound needs q >= 2, s >= 1 and 2 <= k <= {MAX_BOUND_K}"
        )));
    }
    let b = discrepancy::bhk_bound(a.q, a.s, a.k);
    let mut result = json!({ "q": a.q, "s": a.s, "k": a.k });
    result["bound"] = bound_json(&b);
    let row = vec![
        a.q.to_string(),
        a.s.to_string(),
        a.k.to_string(),
        b.display(),
        result["bound"]["exact"].as_str().unwrap_or("").to_string(),
    ];
    Ok(Report::new(result).csv(["q", "s", "k", "bound_float", "exact"], vec![row]))
}

const GIP_CSV: [&str; 8] = ["q", "s", "k", "gamma_max_num", "gamma_max_den", "bound_float", "pass", "witness"];

fn gip_discrepancy(ctx: &Ctx, a: &GipArgs) -> Result<Report, CliError> {
    let f = field(a.field.p, a.field.m, &a.field.poly)?;
    let spec = GipSpec::new(f.clone(), a.s, a.k)?;
    if spec.k > MAX_BOUND_K as usize {
        return Err(CliError::validation(format!("k must be <= {MAX_BOUND_K}")));
    }
    let b = spec.bound();
    let head = vec![spec.q().to_string(), a.s.to_string(), a.k.to_string()];
    let mut result = Map::new();
    result.insert("field".into(), field_json(&f));
    result.insert("mode".into(), to_value(&a.mode));
    result.insert("bound".into(), bound_json(&b));
    let (gamma, pass, witness, failure) = match a.mode {
        GipMode::Bound => {
            let row = [head, vec![String::new(), String::new(), b.display(), String::new(), String::new()]].concat();
            return Ok(Report::new(Value::Object(result)).csv(GIP_CSV, vec![row]));
        }
        GipMode::Exact => {
            let table = discrepancy::gip_function(&spec, ctx.global.point_budget)?;
            let m = discrepancy::max_discrepancy_over_cis(&table.function, &table.space, ctx.global.ci_budget, ctx.exec)?;
            let pass = b.compare_exact(&m.gamma);
            result.insert("ci_count".into(), json!(m.ci_count));
            result.insert("gamma_max".into(), json!(fmt(&m.gamma)));
            result.insert("witness_index".into(), json!(m.witness_index));
            result.insert("witness".into(), json!(m.witness));
            result.insert("pass".into(), json!(pass));
            let failure = (!pass).then(|| "maximum discrepancy exceeds the bound".to_string());
            (m.gamma, pass, m.witness, failure)
        }
        GipMode::Check => {
            let sweep = discrepancy::gip_sweep(&spec, ctx.global.point_budget, ctx.global.ci_budget, ctx.exec)?;
            let Value::Object(fields) = to_value(&sweep) else { unreachable!() };
            for (k, v) in fields {
                if !matches!(k.as_str(), "q" | "s" | "k" | "bound") {
                    result.insert(k, v);
                }
            }
            let pass = sweep.passed();
            result.insert("pass".into(), json!(pass));
            let failure = (!pass).then(|| "a checked property failed; see the report".to_string());
            (sweep.gamma_max, pass, sweep.witness, failure)
        }
    };
    let row = [
        head,
        vec![
            gamma.numer().to_string(),
            gamma.denom().to_string(),
            b.display(),
            pass.to_string(),
            serde_json::to_string(&witness).expect("json"),
        ],
    ]
    .concat();
    let mut report = Report::new(Value::Object(result)).csv(GIP_CSV, vec![row]);
    report.failure = failure;
    Ok(report)
}

fn seh_search(ctx: &Ctx, a: &SehArgs) -> Result<Report, CliError> {
    let rel = load_relation(&a.relation, ctx.global.point_budget)?;
    let measures = load_measures(a.measures.as_deref(), &rel)?;
    let alpha = parse_rational("alpha", &a.alpha)?;
    if !rational::is_probability(&alpha) {
        return Err(CliError::validation("--alpha must lie in [0, 1]"));
    }
    let best = match a.mode {
        SehMode::Exact => regularity::seh_best_exact(&rel, &measures, ctx.global.ci_budget, ctx.exec)?,
        SehMode::Greedy => regularity::seh_best_greedy(&rel, &measures, a.seed, a.restarts, ctx.exec)?,
    };
    let found = best.as_ref().is_some_and(|w| w.measure >= alpha);
    let result = json!({
        "factors": rel.space.factors(),
        "edges": rel.edges.count(),
        "alpha": fmt(&alpha),
        "found": found,
        "best": best,
    });
    let row = match &best {
        Some(w) => vec![
            fmt(&alpha),
            found.to_string(),
            fmt(&w.measure),
            w.size.to_string(),
            to_value(&w.homogeneity).as_str().unwrap_or_default().to_string(),
            w.index.to_string(),
            serde_json::to_string(&w.bases).expect("json"),
        ],
        None => vec![fmt(&alpha), "false".into(), String::new(), String::new(), String::new(), String::new(), String::new()],
    };
    Ok(Report::new(result).csv(["alpha", "found", "measure", "size", "homogeneity", "index", "bases"], vec![row]))
}

fn regularity_defect(ctx: &Ctx, a: &DefectArgs) -> Result<Report, CliError> {
    let rel = load_relation(&a.relation, ctx.global.point_budget)?;
    let measures = load_measures(a.measures.as_deref(), &rel)?;
    let (partition, mut result) = match (&a.partition, &a.epsilon) {
        (Some(path), _) => {
            let file: PartitionFile = read_json(path)?;
            (file.build(&rel)?, json!({}))
        }
        (None, Some(eps)) => {
            let eps = parse_rational("epsilon", eps)?;
            if a.max_blocks == 0 {
                return Err(CliError::validation("--max-blocks must be >= 1"));
            }
            let out = regularity::greedy_refine(&rel, &measures, &eps, a.max_blocks, ctx.global.grid_budget)?;
            let r = out.refinement();
            let info = json!({
                "epsilon": fmt(&eps),
                "converged": out.converged(),
                "splits": r.splits,
            });
            (r.partition.clone(), info)
        }
        (None, None) => return Err(CliError::validation("either --partition or --epsilon is required")),
    };
    let report = regularity::regularity_defect(&partition, &rel, &measures, ctx.global.grid_budget)?;
    result["defect"] = json!(fmt(&report.defect));
    result["cells"] = json!(report.cells);
    result["bad_cells"] = to_value(&report.bad_cells);
    result["partition"] = to_value(&PartitionFile::from_partition(&partition));
    let row = vec![
        fmt(&report.defect),
        report.cells.to_string(),
        report.bad_cells.len().to_string(),
        serde_json::to_string(&partition.block_counts()).expect("json"),
        result.get("converged").map_or(String::new(), |v| v.to_string()),
    ];
    Ok(Report::new(result).csv(["defect", "cells", "bad_cells", "blocks", "converged"], vec![row]))
}

fn atoms_json(alg: &FiniteBooleanAlgebra) -> Value {
    json!(alg.atoms().iter().map(|&a| boolalg::mask_to_points(a)).collect::<Vec<_>>())
}

fn measure_extend(a: &ExtendArgs) -> Result<Report, CliError> {
    let file: AlgebraFile = read_json(&a.algebra)?;
    let (alg, mu): (FiniteBooleanAlgebra, AtomMeasure) = file.atom_measure()?;
    let set = boolalg::points_to_mask(alg.n(), &a.set)?;
    let (lo, hi) = boolalg::extension_interval(&alg, &mu, set);
    let alpha = match &a.alpha {
        Some(text) => parse_rational("alpha", text)?,
        None => (&lo + &hi) / rational::int(2),
    };
    let ext = boolalg::extend_measure(&alg, &mu, set, &alpha)?;
    let attained = ext.measure.measure_of(&ext.algebra, set);
    if attained.as_ref() != Some(&alpha) {
        return Err(CliError::internal("extension does not give the set its target measure"));
    }
    let result = json!({
        "set": a.set,
        "lo": fmt(&lo),
        "hi": fmt(&hi),
        "alpha": fmt(&alpha),
        "atoms": atoms_json(&ext.algebra),
        "weights": ext.measure.weights().iter().map(fmt).collect::<Vec<_>>(),
    });
    let row = vec![
        serde_json::to_string(&a.set).expect("json"),
        fmt(&lo),
        fmt(&hi),
        fmt(&alpha),
        ext.algebra.atoms().len().to_string(),
    ];
    Ok(Report::new(result).csv(["set", "lo", "hi", "alpha", "atoms"], vec![row]))
}

fn determinacy_check(ctx: &Ctx, a: &DeterminacyArgs) -> Result<Report, CliError> {
    let file: AlgebraFile = read_json(&a.algebra)?;
    let alg = file.algebra()?;
    let weights = file.point_weights()?;
    let report = boolalg::is_determined(alg.n(), weights, alg.gens(), ctx.exec)?;
    let result = json!({
        "n": alg.n(),
        "atoms": atoms_json(&alg),
        "determined": report.verdict,
        "report": report,
    });
    let row = vec![
        alg.n().to_string(),
        report.verdict.to_string(),
        report.border_method.to_string(),
        report.interval_method.to_string(),
        report.exhaustive.to_string(),
        report.witness.as_ref().map_or(String::new(), |w| serde_json::to_string(w).expect("json")),
    ];
    Ok(Report::new(result).csv(
        ["n", "determined", "border_method", "interval_method", "exhaustive", "witness"],
        vec![row],
    ))
}

fn gen_relation(ctx: &Ctx, a: &GenArgs) -> Result<Report, CliError> {
    let generated = match a.kind {
        RelationKind::Halfgraph => GeneratedRelation::Halfgraph {
            n: a.n.ok_or_else(|| CliError::validation("--n is required"))?,
        },
        RelationKind::Gip => {
            let p = a.p.ok_or_else(|| CliError::validation("--p is required"))?;
            let f = field(p, a.m, &a.poly)?;
            GeneratedRelation::Gip {
                field: f.into(),
                s: a.s,
                k: a.k.ok_or_else(|| CliError::validation("--k is required"))?,
            }
        }
    };
    let rel = RelationSpec::Generated(generated).build(ctx.global.point_budget)?;
    let explicit = RelationSpec::explicit(&rel);
    let Value::Object(fields) = to_value(&explicit) else { unreachable!() };
    let header: Vec<String> = (0..rel.space.arity()).map(|i| format!("x{i}")).collect();
    let rows = rel
        .tuples()
        .into_iter()
        .map(|t| t.iter().map(usize::to_string).collect())
        .collect();
    let mut report = Report::new(Value::Null).csv(header, rows);
    // top-level factors/edges so the document is itself a relation file
    report.fields = fields;
    Ok(report)
}
