// SPDX-License-Identifier: Apache-2.0

//! Exhaustive search over bank organizations.
//!
//! Mats are evaluated once per distinct design, banks once per candidate, both
//! in parallel. Ranking happens after the parallel phase on a canonical key so
//! thread scheduling never shows up in the output.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::bank::{
    build_bank, build_tau_bank, replicate_slices, AccessMode, BankKind, BankOrg, BankPPA, TauInputs,
    DEFAULT_TAU_CENTRAL_FRACTION,
};
use crate::cells::{load_cell, CellModel, BUILTIN_CELLS};
use crate::config::ConfigDocument;
use crate::error::{Error, Result};
use crate::m3d::{assemble_m3d_mat, MAX_FOLDS};
use crate::mat::{build_mat, MatDesign, MatPPA, MAX_MAT_DIM, MIN_MAT_DIM};
use crate::num::is_pow2;
use crate::tech::{load_tech, TechNode};

pub const DEFAULT_TOP_K: usize = 10;
pub const DEFAULT_MAX_MUX: usize = 8;
pub const DEFAULT_MAX_SUBARRAY_GRID: usize = 64;
pub const DEFAULT_MAX_MATS_PER_SUBARRAY: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    ReadLatency,
    WriteLatency,
    RwDelayProduct,
    Area,
    Leakage,
    Edp,
}

text_enum!(
    Objective,
    "read_latency" => Objective::ReadLatency,
    "write_latency" => Objective::WriteLatency,
    "rw_delay_product" => Objective::RwDelayProduct,
    "area" => Objective::Area,
    "leakage" => Objective::Leakage,
    "edp" => Objective::Edp
);

impl Objective {
    pub fn value(self, p: &BankPPA) -> f64 {
        match self {
            Objective::ReadLatency => p.t_hit_s,
            Objective::WriteLatency => p.t_write_s,
            Objective::RwDelayProduct => p.t_hit_s * p.t_write_s,
            Objective::Area => p.area_mm2,
            Objective::Leakage => p.leakage_w,
            Objective::Edp => p.t_hit_s * p.e_hit_j,
        }
    }
}

/// Fields the user fixed. Anything left `None` is searched.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Pins {
    pub subarrays: Option<(usize, usize)>,
    pub active_subarrays: Option<(usize, usize)>,
    pub mats: Option<(usize, usize)>,
    pub active_mats: Option<(usize, usize)>,
    pub mat_dims: Option<(usize, usize)>,
    pub bl_mux: Option<usize>,
    pub sa_mux: Option<usize>,
    pub folds: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bounds {
    pub mat_rows: (usize, usize),
    pub mat_cols: (usize, usize),
    /// Largest bitline mux times sense-amp mux.
    pub max_mux: usize,
    /// Largest subarray count along either side.
    pub max_subarray_grid: usize,
    /// Largest mat count along either side of a subarray.
    pub max_mats_per_subarray: usize,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds {
            mat_rows: (MIN_MAT_DIM, MAX_MAT_DIM),
            mat_cols: (MIN_MAT_DIM, MAX_MAT_DIM),
            max_mux: DEFAULT_MAX_MUX,
            max_subarray_grid: DEFAULT_MAX_SUBARRAY_GRID,
            max_mats_per_subarray: DEFAULT_MAX_MATS_PER_SUBARRAY,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Constraints {
    pub max_area_mm2: Option<f64>,
    /// Applies to the hit latency.
    pub max_latency_s: Option<f64>,
    /// Memory tiers; `None` allows every fold count.
    pub max_tiers: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchSpec {
    pub capacity_bytes: u64,
    pub line_bytes: usize,
    pub associativity: usize,
    pub address_bits: usize,
    pub access_mode: AccessMode,
    pub kind: BankKind,
    pub ecc_ratio: f64,
    pub cell: CellModel,
    /// Tag cell for TAU banks.
    pub tag_cell: Option<CellModel>,
    pub central_fraction: f64,
    pub wl_segments: usize,
    pub slices: usize,
    pub ring_hop_s: f64,
    pub objective: Objective,
    pub constraints: Constraints,
    pub bounds: Bounds,
    pub pins: Pins,
    pub top_k: usize,
}

impl SearchSpec {
    /// A data-bank search with defaults for everything but the cell and
    /// capacity.
    pub fn new(cell: CellModel, capacity_bytes: u64) -> Self {
        SearchSpec {
            capacity_bytes,
            line_bytes: 64,
            associativity: 16,
            address_bits: crate::bank::DEFAULT_ADDRESS_BITS,
            access_mode: AccessMode::Normal,
            kind: BankKind::Data,
            ecc_ratio: 0.0,
            cell,
            tag_cell: None,
            central_fraction: DEFAULT_TAU_CENTRAL_FRACTION,
            wl_segments: 1,
            slices: 1,
            ring_hop_s: 0.0,
            objective: Objective::RwDelayProduct,
            constraints: Constraints::default(),
            bounds: Bounds::default(),
            pins: Pins::default(),
            top_k: DEFAULT_TOP_K,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.capacity_bytes == 0 {
            return Err(Error::design("capacity must be > 0"));
        }
        if self.top_k == 0 {
            return Err(Error::invalid("top-K must be >= 1"));
        }
        if self.kind == BankKind::Tag {
            return Err(Error::design("search data or TAU banks; tag banks follow from the data organization"));
        }
        if self.kind.is_tau() && self.tag_cell.is_none() {
            return Err(Error::design("TAU search needs a tag cell"));
        }
        if self.slices == 0 {
            return Err(Error::invalid("slices must be >= 1"));
        }
        let b = &self.bounds;
        for (what, (lo, hi)) in [("mat rows", b.mat_rows), ("mat columns", b.mat_cols)] {
            if lo > hi || hi < MIN_MAT_DIM || lo > MAX_MAT_DIM {
                return Err(Error::invalid(format!("empty {what} bound {lo}..={hi}")));
            }
        }
        if b.max_mux == 0 || b.max_subarray_grid == 0 || b.max_mats_per_subarray == 0 {
            return Err(Error::invalid("search bounds must be >= 1"));
        }
        Ok(())
    }

    fn fold_range(&self) -> Vec<usize> {
        if !self.cell.is_beol {
            return vec![0];
        }
        let max = self.constraints.max_tiers.unwrap_or(1 << MAX_FOLDS);
        (0..=MAX_FOLDS).filter(|&k| (1usize << k) <= max).collect()
    }
}

fn pow2_upto(lo: usize, hi: usize) -> impl Iterator<Item = usize> + Clone {
    (0..usize::BITS).map(|k| 1usize << k).skip_while(move |&n| n < lo.max(1)).take_while(move |&n| n <= hi)
}

fn pinned_or<I: Iterator<Item = usize>>(pin: Option<usize>, all: I) -> Vec<usize> {
    match pin {
        Some(p) => vec![p],
        None => all.collect(),
    }
}

/// One point of the search space.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Candidate {
    pub org: BankOrg,
    pub design: MatDesign,
    pub folds: usize,
}

/// Canonical ordering key of a candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct CandidateKey {
    pub n_sr: usize,
    pub n_sc: usize,
    pub mats_r: usize,
    pub mats_c: usize,
    pub rows: usize,
    pub cols: usize,
    pub bl_mux: usize,
    pub sa_mux: usize,
    pub folds: usize,
    pub n_asr: usize,
    pub n_asc: usize,
}

impl Candidate {
    pub fn key(&self) -> CandidateKey {
        CandidateKey {
            n_sr: self.org.n_sr,
            n_sc: self.org.n_sc,
            mats_r: self.org.mats_r,
            mats_c: self.org.mats_c,
            rows: self.design.n_rows,
            cols: self.design.n_cols,
            bl_mux: self.design.bl_mux,
            sa_mux: self.design.sa_mux,
            folds: self.folds,
            n_asr: self.org.n_asr,
            n_asc: self.org.n_asc,
        }
    }

    fn mat_key(&self) -> MatKey {
        MatKey {
            rows: self.design.n_rows,
            cols: self.design.n_cols,
            bl_mux: self.design.bl_mux,
            sa_mux: self.design.sa_mux,
            folds: self.folds,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct MatKey {
    rows: usize,
    cols: usize,
    bl_mux: usize,
    sa_mux: usize,
    folds: usize,
}

/// Every capacity-consistent candidate, in canonical order.
pub fn enumerate_candidates(spec: &SearchSpec) -> Result<Vec<Candidate>> {
    spec.validate()?;
    let b = &spec.bounds;
    let p = &spec.pins;
    let grid = pow2_upto(1, b.max_subarray_grid);
    let per_sub = pow2_upto(1, b.max_mats_per_subarray);
    let (sr, sc) = match p.subarrays {
        Some((r, c)) => (vec![r], vec![c]),
        None => (grid.clone().collect(), grid.collect()),
    };
    let (mr, mc) = match p.mats {
        Some((r, c)) => (vec![r], vec![c]),
        None => (per_sub.clone().collect(), per_sub.collect()),
    };
    let muxes: Vec<(usize, usize)> = pinned_or(p.bl_mux, pow2_upto(1, b.max_mux))
        .into_iter()
        .flat_map(|bl| {
            let sa_all = if spec.cell.kind.is_gain_cell() { vec![1] } else { pow2_upto(1, b.max_mux).collect() };
            pinned_or(p.sa_mux, sa_all.into_iter()).into_iter().map(move |sa| (bl, sa))
        })
        .filter(|&(bl, sa)| p.bl_mux.is_some() && p.sa_mux.is_some() || bl * sa <= b.max_mux)
        .collect();
    let folds = match p.folds {
        Some(f) => vec![f],
        None => spec.fold_range(),
    };
    let bits = spec.capacity_bytes * 8;
    let base = BankOrg::data(spec.capacity_bytes, spec.line_bytes, spec.associativity, (1, 1), (1, 1), spec.access_mode)?
        .with_address_bits(spec.address_bits)?
        .with_ecc(spec.ecc_ratio)
        .as_kind(spec.kind);

    let mut out = Vec::new();
    for (&n_sr, &n_sc) in sr.iter().flat_map(|r| sc.iter().map(move |c| (r, c))) {
        for (&m_r, &m_c) in mr.iter().flat_map(|r| mc.iter().map(move |c| (r, c))) {
            let mats = (n_sr * n_sc * m_r * m_c) as u64;
            if bits % mats != 0 {
                continue;
            }
            let per_mat = bits / mats;
            let dims: Vec<(usize, usize)> = match p.mat_dims {
                Some(d) => vec![d],
                None => pow2_upto(b.mat_rows.0, b.mat_rows.1)
                    .filter_map(|r| {
                        let c = per_mat / r as u64;
                        (c * r as u64 == per_mat && c >= b.mat_cols.0 as u64 && c <= b.mat_cols.1 as u64)
                            .then_some((r, c as usize))
                    })
                    .collect(),
            };
            for &(rows, cols) in &dims {
                if (rows * cols) as u64 != per_mat {
                    continue;
                }
                let (asr, asc) = p.active_subarrays.unwrap_or((1, 1));
                let org = BankOrg { n_sr, n_sc, mats_r: m_r, mats_c: m_c, n_asr: asr, n_asc: asc, ..base.clone() };
                for &(bl, sa) in &muxes {
                    let mut design = MatDesign::new(spec.cell.clone(), rows, cols).with_mux(bl, sa).with_ecc(spec.ecc_ratio);
                    design.wl_segments = spec.wl_segments;
                    if design.validate().is_err() {
                        continue;
                    }
                    for &f in &folds {
                        out.push(Candidate { org: org.clone(), design: design.clone(), folds: f });
                    }
                }
            }
        }
    }
    if out.is_empty() {
        return Err(Error::EmptySearchSpace("no organization matches the capacity within the search bounds".into()));
    }
    out.sort_by_key(Candidate::key);
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct RankedDesign {
    pub rank: usize,
    pub org: BankOrg,
    pub mat_rows: usize,
    pub mat_cols: usize,
    pub bl_mux: usize,
    pub sa_mux: usize,
    pub folds: usize,
    pub objective_value: f64,
    pub ppa: BankPPA,
    /// Mat the bank was tiled from.
    pub mat: MatPPA,
}

impl RankedDesign {
    pub fn key(&self) -> CandidateKey {
        CandidateKey {
            n_sr: self.org.n_sr,
            n_sc: self.org.n_sc,
            mats_r: self.org.mats_r,
            mats_c: self.org.mats_c,
            rows: self.mat_rows,
            cols: self.mat_cols,
            bl_mux: self.bl_mux,
            sa_mux: self.sa_mux,
            folds: self.folds,
            n_asr: self.org.n_asr,
            n_asc: self.org.n_asc,
        }
    }
}

/// One line of the candidate audit log.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogRow {
    pub key: CandidateKey,
    pub objective_value: Option<f64>,
    /// Why the candidate was dropped; empty when feasible.
    pub note: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct SearchOutcome {
    pub objective: Objective,
    pub evaluated: usize,
    pub feasible: usize,
    pub ranked: Vec<RankedDesign>,
    pub log: Vec<LogRow>,
}

/// Square-ish power-of-two shape for a tag mat of `bits`.
pub fn tag_mat_shape(bits: u64) -> Option<(usize, usize)> {
    if !is_pow2(bits as usize) {
        return None;
    }
    let lg = bits.trailing_zeros();
    let rows = 1usize << lg.div_ceil(2);
    let cols = (bits / rows as u64) as usize;
    let ok = |n: usize| (MIN_MAT_DIM..=MAX_MAT_DIM).contains(&n);
    (ok(rows) && ok(cols)).then_some((rows, cols))
}

fn build_stacked(design: &MatDesign, folds: usize, tech: &TechNode) -> Result<MatPPA> {
    if design.cell.is_beol {
        assemble_m3d_mat(design, tech, folds)
    } else if folds > 0 {
        Err(Error::design("only BEOL cells can be folded"))
    } else {
        build_mat(design, tech)
    }
}

fn evaluate(spec: &SearchSpec, cand: &Candidate, mat: &MatPPA, tech: &TechNode) -> Result<BankPPA> {
    let mut org = cand.org.clone();
    let data_view = org.as_kind(BankKind::Data);
    let mut fit = data_view.clone();
    fit.fit_active_mats(mat.output_bits)?;
    (org.n_amr, org.n_amc) = (fit.n_amr, fit.n_amc);
    if let Some((r, c)) = spec.pins.active_mats {
        if r * c < fit.n_amr * fit.n_amc {
            return Err(Error::design(format!("pinned {r}x{c} active mats deliver too few bits")));
        }
        (org.n_amr, org.n_amc) = (r, c);
    }
    org.validate()?;
    let bank = if org.kind.is_tau() {
        let tag_bits = org.tag_bank().bits_per_mat();
        let (tr, tc) = tag_mat_shape(tag_bits)
            .ok_or_else(|| Error::design(format!("no tag mat shape holds {tag_bits} bits")))?;
        let tag_cell = spec.tag_cell.clone().expect("validated");
        let tag_design = MatDesign::new(tag_cell, tr, tc);
        let data_org = org.as_kind(BankKind::Data);
        let inp = TauInputs {
            data_org: &data_org,
            data_design: &cand.design,
            tag_design: &tag_design,
            folds: cand.folds,
            central_fraction: spec.central_fraction,
        };
        build_tau_bank(&inp, org.kind, tech)?
    } else {
        build_bank(&org, &cand.design, mat, tech)?
    };
    if spec.slices > 1 {
        replicate_slices(&bank, spec.slices, spec.ring_hop_s)
    } else {
        Ok(bank)
    }
}

fn violation(spec: &SearchSpec, p: &BankPPA) -> Option<String> {
    let c = &spec.constraints;
    if let Some(a) = c.max_area_mm2 {
        if p.area_mm2 > a {
            return Some(format!("area {:.4} mm2 over {a}", p.area_mm2));
        }
    }
    if let Some(t) = c.max_latency_s {
        if p.t_hit_s > t {
            return Some(format!("hit latency {:.4e} s over {t:e}", p.t_hit_s));
        }
    }
    None
}

/// Objective, then area, then leakage, then the canonical key.
fn rank_order(a: &RankedDesign, b: &RankedDesign) -> Ordering {
    a.objective_value
        .total_cmp(&b.objective_value)
        .then(a.ppa.area_mm2.total_cmp(&b.ppa.area_mm2))
        .then(a.ppa.leakage_w.total_cmp(&b.ppa.leakage_w))
        .then(a.key().cmp(&b.key()))
}

/// Evaluates every candidate and returns the best `top_k` with the audit log.
pub fn search(spec: &SearchSpec, tech: &TechNode) -> Result<SearchOutcome> {
    let cands = enumerate_candidates(spec)?;
    let mut designs: BTreeMap<MatKey, &Candidate> = BTreeMap::new();
    for c in &cands {
        designs.entry(c.mat_key()).or_insert(c);
    }
    let mats: BTreeMap<MatKey, Result<MatPPA>> = designs
        .into_par_iter()
        .map(|(k, c)| (k, build_stacked(&c.design, c.folds, tech)))
        .collect::<Vec<_>>()
        .into_iter()
        .collect();

    let results: Vec<(LogRow, Option<RankedDesign>)> = cands
        .par_iter()
        .map(|c| {
            let key = c.key();
            let mat = match &mats[&c.mat_key()] {
                Ok(m) => m,
                Err(e) => return (LogRow { key, objective_value: None, note: format!("mat: {e}") }, None),
            };
            match evaluate(spec, c, mat, tech) {
                Err(e) => (LogRow { key, objective_value: None, note: e.to_string() }, None),
                Ok(ppa) => {
                    let value = spec.objective.value(&ppa);
                    let note = violation(spec, &ppa).unwrap_or_default();
                    let keep = note.is_empty();
                    let row = LogRow { key, objective_value: Some(value), note };
                    let ranked = keep.then(|| RankedDesign {
                        rank: 0,
                        org: BankOrg { n_amr: 0, n_amc: 0, ..c.org.clone() },
                        mat_rows: c.design.n_rows,
                        mat_cols: c.design.n_cols,
                        bl_mux: c.design.bl_mux,
                        sa_mux: c.design.sa_mux,
                        folds: c.folds,
                        objective_value: value,
                        ppa,
                        mat: mat.clone(),
                    });
                    (row, ranked)
                }
            }
        })
        .collect();

    let evaluated = results.len();
    let mut log = Vec::with_capacity(evaluated);
    let mut feasible = Vec::new();
    for (row, d) in results {
        log.push(row);
        feasible.extend(d);
    }
    if feasible.is_empty() {
        let why = log.iter().find(|r| !r.note.is_empty()).map(|r| r.note.clone()).unwrap_or_default();
        return Err(Error::NoFeasibleDesign(format!("{evaluated} candidates evaluated; e.g. {why}")));
    }
    let n_feasible = feasible.len();
    feasible.sort_by(rank_order);
    feasible.truncate(spec.top_k);
    for (i, d) in feasible.iter_mut().enumerate() {
        d.rank = i + 1;
        // The active-mat counts depend on the mat; recover them for display.
        let mut org = d.org.as_kind(BankKind::Data);
        org.fit_active_mats(d.mat.output_bits)?;
        if let Some((r, c)) = spec.pins.active_mats {
            (org.n_amr, org.n_amc) = (r, c);
        }
        (d.org.n_amr, d.org.n_amc) = (org.n_amr, org.n_amc);
    }
    Ok(SearchOutcome { objective: spec.objective, evaluated, feasible: n_feasible, ranked: feasible, log })
}

/// One metric of a side-by-side comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricDelta {
    pub metric: &'static str,
    pub unit: &'static str,
    pub baseline: f64,
    pub candidate: f64,
    /// Percent change of the candidate against the baseline; `None` when the
    /// baseline is zero and the candidate is not.
    pub delta_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub capacity_bytes: u64,
    pub metrics: Vec<MetricDelta>,
}

impl ComparisonReport {
    pub fn delta(&self, metric: &str) -> Option<f64> {
        self.metrics.iter().find(|m| m.metric == metric).and_then(|m| m.delta_pct)
    }

    pub fn to_table(&self) -> String {
        let mut s = format!("{:<16} {:>14} {:>14} {:>10}\n", "metric", "baseline", "candidate", "change");
        for m in &self.metrics {
            let d = m.delta_pct.map_or_else(|| "n/a".to_string(), |d| format!("{d:+.1}%"));
            writeln!(s, "{:<16} {:>14.6e} {:>14.6e} {:>10}", format!("{} ({})", m.metric, m.unit), m.baseline, m.candidate, d)
                .expect("writing to a String cannot fail");
        }
        s
    }
}

/// Percent deltas of `candidate` against `baseline`.
pub fn compare_designs(baseline: &BankPPA, candidate: &BankPPA) -> Result<ComparisonReport> {
    if baseline.capacity_bytes != candidate.capacity_bytes {
        return Err(Error::CapacityMismatch(baseline.capacity_bytes, candidate.capacity_bytes));
    }
    let rows: [(&'static str, &'static str, fn(&BankPPA) -> f64); 6] = [
        ("area", "mm2", |p| p.area_mm2),
        ("read_latency", "s", |p| p.t_hit_s),
        ("write_latency", "s", |p| p.t_write_s),
        ("read_energy", "J", |p| p.e_hit_j),
        ("write_energy", "J", |p| p.e_write_j),
        ("leakage", "W", |p| p.leakage_w),
    ];
    let metrics = rows
        .iter()
        .map(|&(metric, unit, f)| {
            let (a, b) = (f(baseline), f(candidate));
            let delta_pct = if a != 0.0 {
                Some(100.0 * (b - a) / a)
            } else {
                (b == 0.0).then_some(0.0)
            };
            MetricDelta { metric, unit, baseline: a, candidate: b, delta_pct }
        })
        .collect();
    Ok(ComparisonReport { capacity_bytes: baseline.capacity_bytes, metrics })
}

/// Resolves a cell or tech reference: a catalog name, or a path relative to
/// the file that named it.
fn source_of(doc: &ConfigDocument, key: &str, catalog: &[&str]) -> Option<String> {
    let raw = doc.get_text(key)?;
    if catalog.iter().any(|n| n.eq_ignore_ascii_case(raw)) {
        return Some(raw.to_string());
    }
    doc.get_path(key).map(|p| p.to_string_lossy().into_owned())
}

/// The node a design file refers to.
pub fn tech_from_document(doc: &ConfigDocument) -> Result<TechNode> {
    if let Some(src) = source_of(doc, "TechnologyInputFile", &["7nm", "3nm", "7", "3"]) {
        let t = crate::tech::load_tech_with(&src, doc.get_f64("Temperature")?)?;
        return Ok(t);
    }
    match doc.get_usize("ProcessNode")? {
        Some(n) => crate::tech::load_tech_with(&format!("{n}nm"), doc.get_f64("Temperature")?),
        None => Err(Error::MissingKey { key: "TechnologyInputFile".into(), context: Some("design file".into()) }),
    }
}

fn pair(doc: &ConfigDocument, a: &str, b: &str) -> Result<Option<(usize, usize)>> {
    match (doc.get_usize(a)?, doc.get_usize(b)?) {
        (Some(x), Some(y)) => Ok(Some((x, y))),
        (None, None) => Ok(None),
        _ => Err(Error::MissingKey { key: if doc.contains(a) { b.into() } else { a.into() }, context: Some("pair".into()) }),
    }
}

/// Reads a design or search file. Returns the node and the search it
/// describes; fully pinned files describe exactly one design.
pub fn spec_from_document(doc: &ConfigDocument) -> Result<(TechNode, SearchSpec)> {
    let tech = tech_from_document(doc)?;
    let catalog: Vec<&str> = BUILTIN_CELLS.iter().map(|(n, _)| *n).collect();
    let cell_src = source_of(doc, "MemoryCellInputFile", &catalog)
        .ok_or_else(|| Error::MissingKey { key: "MemoryCellInputFile".into(), context: Some("design file".into()) })?;
    let cell = load_cell(&cell_src, &tech)?;
    let capacity = doc.get_i64("Capacity")?.ok_or_else(|| Error::MissingKey { key: "Capacity".into(), context: None })?;
    if capacity <= 0 {
        return Err(Error::non_positive("Capacity", capacity as f64));
    }
    let mut s = SearchSpec::new(cell, capacity as u64);
    if let Some(v) = doc.get_usize("CacheLineSize")? {
        s.line_bytes = v;
    }
    if let Some(v) = doc.get_usize("Associativity")? {
        s.associativity = v;
    }
    if let Some(v) = doc.get_usize("AddressBits")? {
        s.address_bits = v;
    }
    if let Some(v) = doc.get_text("AccessMode") {
        s.access_mode = v.parse()?;
    }
    if let Some(v) = doc.get_text("BankKind") {
        s.kind = v.parse()?;
    }
    if let Some(v) = doc.get_text("TAUVariant") {
        s.kind = match v.to_ascii_lowercase().as_str() {
            "hm" | "tau_hm" => BankKind::TauHm,
            "ht" | "tau_ht" => BankKind::TauHt,
            "none" => BankKind::Data,
            _ => return Err(doc.invalid("TAUVariant", format!("expected hm, ht or none, got `{v}`"))),
        };
    }
    if let Some(v) = doc.get_f64("ECCRatio")? {
        s.ecc_ratio = v;
    }
    if let Some(v) = doc.get_f64("TAUCentralFraction")? {
        s.central_fraction = v;
    }
    if let Some(v) = doc.get_usize("WordlineSegments")? {
        s.wl_segments = v;
    }
    if let Some(v) = doc.get_usize("Slices")? {
        s.slices = v;
    }
    if let Some(v) = doc.get_f64("RingHopLatency")? {
        s.ring_hop_s = v;
    }
    if s.kind.is_tau() {
        let src = source_of(doc, "TagCellInputFile", &catalog).unwrap_or_else(|| format!("sram_{}nm", tech.node_nm));
        s.tag_cell = Some(load_cell(&src, &tech)?);
    }
    if let Some(v) = doc.get_text("OptimizationTarget") {
        s.objective = v.parse()?;
    }
    s.constraints = Constraints {
        max_area_mm2: doc.get_f64("MaxArea")?,
        max_latency_s: doc.get_f64("MaxLatency")?,
        max_tiers: doc.get_usize("MaxTiers")?,
    };
    if let Some(v) = doc.get_usize("TopK")? {
        s.top_k = v;
    }
    let b = &mut s.bounds;
    b.mat_rows.0 = doc.get_usize("MinMatRows")?.unwrap_or(b.mat_rows.0);
    b.mat_rows.1 = doc.get_usize("MaxMatRows")?.unwrap_or(b.mat_rows.1);
    b.mat_cols.0 = doc.get_usize("MinMatCols")?.unwrap_or(b.mat_cols.0);
    b.mat_cols.1 = doc.get_usize("MaxMatCols")?.unwrap_or(b.mat_cols.1);
    b.max_mux = doc.get_usize("MaxMux")?.unwrap_or(b.max_mux);
    b.max_subarray_grid = doc.get_usize("MaxSubarrayGrid")?.unwrap_or(b.max_subarray_grid);
    b.max_mats_per_subarray = doc.get_usize("MaxMatsPerSubarray")?.unwrap_or(b.max_mats_per_subarray);
    s.pins = Pins {
        subarrays: pair(doc, "SubarrayRows", "SubarrayCols")?,
        active_subarrays: pair(doc, "ActiveSubarrayRows", "ActiveSubarrayCols")?,
        mats: pair(doc, "MatsPerSubarrayRows", "MatsPerSubarrayCols")?,
        active_mats: pair(doc, "ActiveMatRows", "ActiveMatCols")?,
        mat_dims: pair(doc, "MatRows", "MatCols")?,
        bl_mux: doc.get_usize("BitlineMux")?,
        sa_mux: doc.get_usize("SenseAmpMux")?,
        folds: doc.get_usize("Folds")?,
    };
    s.validate()?;
    Ok((tech, s))
}

/// Loads a design file from disk.
pub fn load_spec(path: &Path) -> Result<(TechNode, SearchSpec)> {
    spec_from_document(&ConfigDocument::load(path)?)
}

/// Convenience for tests and examples: a search on a catalog node and cell.
pub fn catalog_spec(node: &str, cell: &str, capacity_bytes: u64) -> Result<(TechNode, SearchSpec)> {
    let tech = load_tech(node)?;
    let cell = load_cell(cell, &tech)?;
    Ok((tech, SearchSpec::new(cell, capacity_bytes)))
}
