// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use nscache_core::bank::BankPPA;
use nscache_core::config::ConfigDocument;
use nscache_core::llcsim::{self, CacheConfig, SimSettings};
use nscache_core::optimizer::{self, Objective, RankedDesign, SearchOutcome};
use nscache_core::report::{self, fmt6};
use nscache_core::tracegen::{self, GenParams, TraceKind};

#[derive(Parser)]
#[command(name = "nscache", version, about = "LLC bank modeling, design search and trace simulation")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Model the best design of a config; writes a JSON report.
    Model {
        #[arg(long)]
        config: PathBuf,
        /// JSON report; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Component audit CSV.
        #[arg(long)]
        audit: Option<PathBuf>,
    },
    /// Rank candidate organizations.
    Optimize {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        top_k: Option<usize>,
        #[arg(long)]
        objective: Option<Objective>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Every candidate with its objective or rejection reason.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Run a trace against the modeled bank.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Load-to-use CDF CSV.
        #[arg(long)]
        cdf: Option<PathBuf>,
        /// Keep per-access and refresh logs in the report.
        #[arg(long)]
        events: bool,
    },
    /// Percent deltas of a candidate against a baseline. Each side is a
    /// config or a saved model report.
    Compare {
        baseline: PathBuf,
        candidate: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a synthetic trace.
    GenTrace {
        #[arg(long)]
        kind: TraceKind,
        #[arg(long, default_value_t = 1000)]
        events: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1 << 24)]
        footprint: u64,
        #[arg(long, default_value_t = 64)]
        line: u64,
        #[arg(long, default_value_t = 64)]
        stride: u64,
        #[arg(long, default_value_t = 1.0)]
        zipf_exponent: f64,
        #[arg(long, default_value_t = 0.0)]
        write_fraction: f64,
        #[arg(long, default_value_t = 0)]
        base: u64,
        #[arg(long, default_value_t = 4)]
        tick_gap: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

struct Loaded {
    doc: ConfigDocument,
    outcome: SearchOutcome,
}

fn run_search(config: &Path, top_k: Option<usize>, objective: Option<Objective>) -> Result<Loaded> {
    let doc = ConfigDocument::load(config)?;
    let (tech, mut spec) = optimizer::spec_from_document(&doc)?;
    if let Some(k) = top_k {
        spec.top_k = k;
    }
    if let Some(o) = objective {
        spec.objective = o;
    }
    let outcome = optimizer::search(&spec, &tech)?;
    Ok(Loaded { doc, outcome })
}

fn best(l: &Loaded) -> Result<&RankedDesign> {
    l.outcome.ranked.first().ok_or_else(|| anyhow!("search returned no design"))
}

/// Design summary without the nested mat and bank reports.
fn design_json(d: &RankedDesign) -> Value {
    json!({
        "rank": d.rank,
        "org": d.org,
        "mat_rows": d.mat_rows,
        "mat_cols": d.mat_cols,
        "bl_mux": d.bl_mux,
        "sa_mux": d.sa_mux,
        "folds": d.folds,
        "objective_value": d.objective_value,
    })
}

fn model(config: &Path, out: Option<&Path>, audit: Option<&Path>) -> Result<()> {
    let l = run_search(config, Some(1), None)?;
    let d = best(&l)?;
    let body = json!({
        "objective": l.outcome.objective,
        "design": design_json(d),
        "ppa": d.ppa,
        "mat": d.mat,
    });
    emit(out, &report::render("model", &body)?)?;
    if let Some(p) = audit {
        fs::write(p, d.ppa.audit_csv()).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(())
}

const RANK_HEADER: &str = "rank,subarrays,active_subarrays,mats,active_mats,mat_rows,mat_cols,bl_mux,sa_mux,folds,objective,area_mm2,t_hit_s,t_write_s,e_hit_j,e_write_j,leakage_w\n";

fn ranked_csv(ranked: &[RankedDesign]) -> String {
    let mut s = String::from(RANK_HEADER);
    for d in ranked {
        let o = &d.org;
        let p = &d.ppa;
        s += &format!(
            "{},{}x{},{}x{},{}x{},{}x{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            d.rank,
            o.n_sr,
            o.n_sc,
            o.n_asr,
            o.n_asc,
            o.mats_r,
            o.mats_c,
            o.n_amr,
            o.n_amc,
            d.mat_rows,
            d.mat_cols,
            d.bl_mux,
            d.sa_mux,
            d.folds,
            fmt6(d.objective_value),
            fmt6(p.area_mm2),
            fmt6(p.t_hit_s),
            fmt6(p.t_write_s),
            fmt6(p.e_hit_j),
            fmt6(p.e_write_j),
            fmt6(p.leakage_w),
        );
    }
    s
}

fn log_csv(outcome: &SearchOutcome) -> String {
    let mut s = String::from("subarrays,mats,mat_rows,mat_cols,bl_mux,sa_mux,folds,active_subarrays,objective,note\n");
    for r in &outcome.log {
        let k = &r.key;
        s += &format!(
            "{}x{},{}x{},{},{},{},{},{},{}x{},{},\"{}\"\n",
            k.n_sr,
            k.n_sc,
            k.mats_r,
            k.mats_c,
            k.rows,
            k.cols,
            k.bl_mux,
            k.sa_mux,
            k.folds,
            k.n_asr,
            k.n_asc,
            r.objective_value.map(fmt6).unwrap_or_default(),
            r.note.replace('"', "'"),
        );
    }
    s
}

fn optimize(config: &Path, top_k: Option<usize>, objective: Option<Objective>, out: Option<&Path>, csv: Option<&Path>, log: Option<&Path>) -> Result<()> {
    let l = run_search(config, top_k, objective)?;
    let o = &l.outcome;
    let ranked: Vec<Value> = o
        .ranked
        .iter()
        .map(|d| {
            let mut v = design_json(d);
            v["ppa"] = serde_json::to_value(&d.ppa).unwrap_or(Value::Null);
            v
        })
        .collect();
    let body = json!({
        "objective": o.objective,
        "evaluated": o.evaluated,
        "feasible": o.feasible,
        "ranked": ranked,
    });
    emit(out, &report::render("optimize", &body)?)?;
    if let Some(p) = csv {
        fs::write(p, ranked_csv(&o.ranked)).with_context(|| format!("writing {}", p.display()))?;
    }
    if let Some(p) = log {
        fs::write(p, log_csv(o)).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(())
}

fn simulate(config: &Path, trace: &Path, out: Option<&Path>, cdf: Option<&Path>, events: bool) -> Result<()> {
    let l = run_search(config, Some(1), None)?;
    let d = best(&l)?;
    let settings = SimSettings::from_document(&l.doc)?;
    let text = fs::read_to_string(trace).with_context(|| format!("reading {}", trace.display()))?;
    let tr = llcsim::parse_trace(&text)?;
    let ppa = &d.ppa;
    let cache = CacheConfig {
        capacity_bytes: ppa.capacity_bytes,
        line_bytes: d.org.w_block_data as u64 / 8,
        ways: d.org.associativity,
        address_bits: 48,
    };
    let timing = settings.timing(ppa, &d.org)?;
    let mut stats = llcsim::simulate(&tr, &cache, &timing, true)?;
    let ep = settings.energy(ppa);
    let t_run = stats.runtime_s(timing.f_clk_hz);
    let energy = llcsim::energy_program(&stats, &ep, t_run)?;
    let event_log_j = llcsim::event_log_energy(&stats, &ep, t_run);
    let csv = stats.cdf_csv();
    if !events {
        stats.events.clear();
        stats.refreshes.clear();
    }
    let body = json!({
        "design": design_json(d),
        "cache": cache,
        "timing": timing,
        "energy_params": ep,
        "stats": stats,
        "energy": energy,
        "refresh_share": energy.refresh_share(),
        "event_log_total_j": event_log_j,
    });
    emit(out, &report::render("simulate", &body)?)?;
    if let Some(p) = cdf {
        fs::write(p, csv).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(())
}

/// A config is modeled; anything else must be a `model` report.
fn load_ppa(path: &Path) -> Result<BankPPA> {
    if path.extension().is_some_and(|e| e == "cfg") {
        let l = run_search(path, Some(1), None)?;
        return Ok(best(&l)?.ppa.clone());
    }
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let v: Value = serde_json::from_str(&text).with_context(|| format!("{} is not JSON", path.display()))?;
    let ppa = v.get("model").and_then(|m| m.get("ppa")).ok_or_else(|| anyhow!("{} is not a model report", path.display()))?;
    serde_json::from_value(ppa.clone()).with_context(|| format!("{}: bad ppa block", path.display()))
}

fn compare(baseline: &Path, candidate: &Path, out: Option<&Path>) -> Result<()> {
    let a = load_ppa(baseline)?;
    let b = load_ppa(candidate)?;
    let r = optimizer::compare_designs(&a, &b)?;
    print!("{}", r.to_table());
    if let Some(p) = out {
        emit(Some(p), &report::render("compare", &r)?)?;
    }
    Ok(())
}

fn gen_trace(kind: TraceKind, p: GenParams, seed: u64, out: Option<&Path>) -> Result<()> {
    let t = tracegen::generate(kind, &p, seed)?;
    let mut text = format!("# {kind} events={} seed={seed}\n", p.events);
    text += &llcsim::format_trace(&t);
    emit(out, &text)
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Model { config, out, audit } => model(&config, out.as_deref(), audit.as_deref()),
        Cmd::Optimize { config, top_k, objective, out, csv, log } => {
            optimize(&config, top_k, objective, out.as_deref(), csv.as_deref(), log.as_deref())
        }
        Cmd::Simulate { config, trace, out, cdf, events } => simulate(&config, &trace, out.as_deref(), cdf.as_deref(), events),
        Cmd::Compare { baseline, candidate, out } => compare(&baseline, &candidate, out.as_deref()),
        Cmd::GenTrace { kind, events, seed, footprint, line, stride, zipf_exponent, write_fraction, base, tick_gap, out } => {
            if events == 0 {
                bail!("--events must be > 0");
            }
            let p = GenParams {
                events,
                footprint_bytes: footprint,
                line_bytes: line,
                stride_bytes: stride,
                zipf_exponent,
                write_fraction,
                base,
                tick_gap,
            };
            gen_trace(kind, p, seed, out.as_deref())
        }
    }
}

fn error_json(kind: &str, e: &anyhow::Error) -> String {
    // Core errors already print their source; skip repeats.
    let mut chain: Vec<String> = Vec::new();
    for c in e.chain().map(|c| c.to_string()) {
        if !chain.last().is_some_and(|p| p.ends_with(&c)) {
            chain.push(c);
        }
    }
    let v = json!({
        "schema_version": report::SCHEMA_VERSION,
        "error": { "kind": kind, "message": chain.join(": ") },
    });
    report::to_json_string(&v)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprint!("{}", error_json("usage", &anyhow!(e.to_string().trim().to_string())));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let kind = e.chain().find_map(|c| c.downcast_ref::<nscache_core::Error>()).map_or("io", |c| c.kind());
            eprint!("{}", error_json(kind, &e));
            ExitCode::FAILURE
        }
    }
}
