// SPDX-License-Identifier: Apache-2.0

//! Trace-driven set-associative LLC with cycle-quantized bank timings,
//! single-ported subarrays and rolling refresh.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::bank::{AccessMode, BankOrg, BankPPA};
use crate::config::ConfigDocument;
use crate::error::{Error, Result};
use crate::num::is_pow2;

pub const DEFAULT_OFFCHIP_CYCLES: u64 = 100;
pub const DEFAULT_MISS_MULTIPLIER: f64 = 92.0;
pub const DEFAULT_CLOCK_HZ: f64 = 3e9;

/// Simulation knobs read from a design file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimSettings {
    pub f_clk_hz: f64,
    pub offchip_cycles: u64,
    pub refresh_enabled: bool,
    pub blocking_scope: BlockingScope,
    pub miss_offchip_multiplier: f64,
}

impl Default for SimSettings {
    fn default() -> Self {
        SimSettings {
            f_clk_hz: DEFAULT_CLOCK_HZ,
            offchip_cycles: DEFAULT_OFFCHIP_CYCLES,
            refresh_enabled: true,
            blocking_scope: BlockingScope::Mat,
            miss_offchip_multiplier: DEFAULT_MISS_MULTIPLIER,
        }
    }
}

impl SimSettings {
    pub fn from_document(doc: &ConfigDocument) -> Result<Self> {
        let d = SimSettings::default();
        let offchip = doc.get_i64("OffChipLatencyCycles")?.unwrap_or(d.offchip_cycles as i64);
        if offchip < 0 {
            return Err(doc.invalid("OffChipLatencyCycles", "must be >= 0"));
        }
        let s = SimSettings {
            f_clk_hz: doc.get_f64("ClockFrequency")?.unwrap_or(d.f_clk_hz),
            offchip_cycles: offchip as u64,
            refresh_enabled: doc.get_bool("RefreshEnabled")?.unwrap_or(d.refresh_enabled),
            blocking_scope: doc.get_text("RefreshBlockingScope").map(str::parse).transpose()?.unwrap_or(d.blocking_scope),
            miss_offchip_multiplier: doc.get_f64("MissEnergyMultiplier")?.unwrap_or(d.miss_offchip_multiplier),
        };
        if !(s.f_clk_hz > 0.0) {
            return Err(doc.invalid("ClockFrequency", "must be positive"));
        }
        Ok(s)
    }

    /// Timing of a modeled bank under these settings.
    pub fn timing(&self, ppa: &BankPPA, org: &BankOrg) -> Result<TimingParams> {
        let mut t = TimingParams::from_bank(ppa, org, self.f_clk_hz, self.offchip_cycles)?;
        t.blocking_scope = self.blocking_scope;
        if !self.refresh_enabled {
            t.refresh = RefreshParams::OFF;
        }
        Ok(t)
    }

    pub fn energy(&self, ppa: &BankPPA) -> EnergyParams {
        EnergyParams { miss_offchip_multiplier: self.miss_offchip_multiplier, ..EnergyParams::from_bank(ppa) }
    }
}

/// Latency in whole cycles, rounded up. Products within one ulp of an
/// integer count as that integer.
pub fn quantize_cycles(latency_s: f64, f_clk_hz: f64) -> Result<u64> {
    if !(latency_s >= 0.0) || !latency_s.is_finite() {
        return Err(Error::invalid(format!("latency must be finite and >= 0, got {latency_s}")));
    }
    if !(f_clk_hz > 0.0) || !f_clk_hz.is_finite() {
        return Err(Error::non_positive("clock frequency", f_clk_hz));
    }
    let x = latency_s * f_clk_hz;
    let r = x.round();
    let c = if (x - r).abs() <= f64::EPSILON * r.max(1.0) { r } else { x.ceil() };
    Ok(c as u64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Op {
    Read,
    Write,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEvent {
    pub tick: u64,
    pub op: Op,
    pub address: u64,
}

/// Parses `<tick> <R|W> <hex address>` lines. `#` starts a comment.
pub fn parse_trace(text: &str) -> Result<Vec<TraceEvent>> {
    let mut out = Vec::new();
    let mut last = 0u64;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let bad = |msg: String| Error::Trace { line, msg };
        let mut parts = body.split_whitespace();
        let (Some(t), Some(o), Some(a), None) = (parts.next(), parts.next(), parts.next(), parts.next()) else {
            return Err(bad(format!("expected `<tick> <R|W> <address>`, got `{body}`")));
        };
        let tick: u64 = t.parse().map_err(|_| bad(format!("bad tick `{t}`")))?;
        let op = match o {
            "R" | "r" => Op::Read,
            "W" | "w" => Op::Write,
            _ => return Err(bad(format!("bad op `{o}`, expected R or W"))),
        };
        let hex = a.strip_prefix("0x").or_else(|| a.strip_prefix("0X")).unwrap_or(a);
        let address = u64::from_str_radix(hex, 16).map_err(|_| bad(format!("bad hex address `{a}`")))?;
        if tick < last {
            return Err(bad(format!("tick {tick} is before the previous tick {last}")));
        }
        last = tick;
        out.push(TraceEvent { tick, op, address });
    }
    Ok(out)
}

pub fn format_trace(events: &[TraceEvent]) -> String {
    let mut s = String::with_capacity(events.len() * 24);
    for e in events {
        let op = if e.op == Op::Read { 'R' } else { 'W' };
        writeln!(s, "{} {} {:#x}", e.tick, op, e.address).expect("writing to a String cannot fail");
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheConfig {
    pub capacity_bytes: u64,
    pub line_bytes: u64,
    pub ways: usize,
    pub address_bits: u32,
}

impl CacheConfig {
    pub fn new(capacity_bytes: u64, ways: usize) -> Self {
        CacheConfig { capacity_bytes, line_bytes: 64, ways, address_bits: 48 }
    }

    pub fn sets(&self) -> u64 {
        self.capacity_bytes / (self.line_bytes * self.ways as u64).max(1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.ways == 0 || self.line_bytes == 0 || !is_pow2(self.line_bytes as usize) {
            return Err(Error::invalid("ways must be >= 1 and the line size a power of two"));
        }
        let sets = self.sets();
        if sets == 0 || sets * self.line_bytes * self.ways as u64 != self.capacity_bytes || !is_pow2(sets as usize) {
            return Err(Error::invalid(format!("{} bytes in {}-way sets of {} B lines is not a power-of-two set count", self.capacity_bytes, self.ways, self.line_bytes)));
        }
        if !(1..=64).contains(&self.address_bits) {
            return Err(Error::invalid("address bits must be in 1..=64"));
        }
        Ok(())
    }

    /// Set index and tag of an address.
    pub fn locate(&self, address: u64) -> (u64, u64) {
        let masked = if self.address_bits >= 64 { address } else { address & ((1u64 << self.address_bits) - 1) };
        let line = masked / self.line_bytes;
        (line % self.sets(), line / self.sets())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockingScope {
    Mat,
    Subarray,
}

text_enum!(BlockingScope, "mat" => BlockingScope::Mat, "subarray" => BlockingScope::Subarray);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Cycles {
    /// Data-side access on a hit, composed with the tag per access mode.
    pub hit: u64,
    pub miss_detect: u64,
    pub write: u64,
    pub tag_access: u64,
    pub tag_broadcast: u64,
    pub refresh_row: u64,
    /// Port occupancy of a read and of a write.
    pub busy_read: u64,
    pub busy_write: u64,
    /// Fill latency beyond the LLC.
    pub offchip: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RefreshParams {
    pub enabled: bool,
    /// Each row is refreshed once per period.
    pub row_period_s: f64,
    pub n_rows: usize,
}

impl RefreshParams {
    pub const OFF: RefreshParams = RefreshParams { enabled: false, row_period_s: 0.0, n_rows: 0 };
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimingParams {
    pub f_clk_hz: f64,
    pub cycles: Cycles,
    pub mode: AccessMode,
    pub refresh: RefreshParams,
    pub blocking_scope: BlockingScope,
    /// Independent single-ported subarrays.
    pub ports: usize,
    /// Mat groups per subarray an access can land in; refresh under the mat
    /// scope only blocks its own group.
    pub mat_groups: usize,
}

impl TimingParams {
    /// Plain timing for tests and quick runs: one port, no refresh.
    pub fn simple(f_clk_hz: f64, cycles: Cycles, mode: AccessMode) -> Self {
        TimingParams {
            f_clk_hz,
            cycles,
            mode,
            refresh: RefreshParams::OFF,
            blocking_scope: BlockingScope::Mat,
            ports: 1,
            mat_groups: 1,
        }
    }

    /// Quantizes a modeled bank. `org` supplies the port and mat-group
    /// counts.
    pub fn from_bank(ppa: &BankPPA, org: &BankOrg, f_clk_hz: f64, offchip: u64) -> Result<Self> {
        let q = |t: f64| quantize_cycles(t.max(0.0), f_clk_hz);
        let tag = ppa.t_tag_s;
        let bcast = ppa.t_broadcast_s;
        let (hit, miss_detect) = match ppa.access_mode {
            AccessMode::Sequential => (q(ppa.t_hit_s - tag)?, q(ppa.t_miss_detect_s - tag)?),
            AccessMode::Normal => (q(ppa.t_hit_s - bcast)?, q(ppa.t_miss_detect_s)?),
            AccessMode::Fast => (q(ppa.t_hit_s)?, q(ppa.t_miss_detect_s)?),
        };
        let cycles = Cycles {
            hit,
            miss_detect,
            write: q(ppa.t_write_s)? + u64::from(ppa.write_penalty_cycles),
            tag_access: q(tag)?,
            tag_broadcast: q(bcast)?,
            refresh_row: ppa.refresh.map_or(Ok(0), |r| q(r.t_row_s))?,
            busy_read: q(ppa.subarray_busy_s)?.max(1),
            busy_write: q(ppa.subarray_busy_write_s)?.max(1),
            offchip,
        };
        let refresh = match ppa.refresh {
            Some(r) if r.t_retention_s.is_finite() => RefreshParams { enabled: true, row_period_s: r.t_retention_s, n_rows: r.n_rows },
            _ => RefreshParams::OFF,
        };
        let active = (org.n_amr * org.n_amc).max(1);
        let t = TimingParams {
            f_clk_hz,
            cycles,
            mode: ppa.access_mode,
            refresh,
            blocking_scope: BlockingScope::Mat,
            ports: org.n_subarrays(),
            mat_groups: (org.mats_per_subarray() / active).max(1),
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.f_clk_hz > 0.0) {
            return Err(Error::non_positive("clock frequency", self.f_clk_hz));
        }
        if self.ports == 0 || self.mat_groups == 0 {
            return Err(Error::invalid("ports and mat groups must be >= 1"));
        }
        if self.refresh.enabled {
            if !(self.refresh.row_period_s > 0.0) || self.refresh.n_rows == 0 {
                return Err(Error::invalid("refresh needs a positive row period and at least one row"));
            }
            if self.period_cycles() < self.refresh.n_rows as u64 {
                return Err(Error::invalid("refresh period is shorter than one cycle per row"));
            }
        }
        Ok(())
    }

    /// Row period in whole cycles, rounded down so no gap exceeds it.
    pub fn period_cycles(&self) -> u64 {
        (self.refresh.row_period_s * self.f_clk_hz).floor() as u64
    }

    /// Read latency before any off-chip fill.
    pub fn read_cycles(&self, hit: bool) -> u64 {
        let c = &self.cycles;
        match (self.mode, hit) {
            (AccessMode::Sequential, true) => c.tag_access + c.hit,
            (AccessMode::Sequential, false) => c.tag_access + c.miss_detect,
            (AccessMode::Normal, true) => c.tag_access.max(c.hit) + c.tag_broadcast,
            (AccessMode::Fast, true) => c.tag_access.max(c.hit),
            (_, false) => c.miss_detect,
        }
    }
}

/// A refresh event: at `tick` every mat refreshes `row`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RefreshEvent {
    pub tick: u64,
    pub row: usize,
}

/// Rolling schedule: row `i` of every mat at `i * P / N + k * P`.
#[derive(Debug, Clone)]
pub struct RefreshSchedule {
    period: u64,
    n_rows: usize,
    next: u64,
}

impl Iterator for RefreshSchedule {
    type Item = RefreshEvent;

    fn next(&mut self) -> Option<RefreshEvent> {
        let n = self.n_rows as u64;
        let (k, i) = (self.next / n, self.next % n);
        self.next += 1;
        let tick = k.checked_mul(self.period)?.checked_add(i * self.period / n)?;
        Some(RefreshEvent { tick, row: i as usize })
    }
}

pub fn refresh_schedule(timing: &TimingParams) -> Result<RefreshSchedule> {
    if !timing.refresh.enabled {
        return Err(Error::invalid("refresh is disabled"));
    }
    timing.validate()?;
    Ok(RefreshSchedule { period: timing.period_cycles(), n_rows: timing.refresh.n_rows, next: 0 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    ReadHit,
    ReadMiss,
    WriteHit,
    WriteMiss,
}

impl Outcome {
    pub fn is_hit(self) -> bool {
        matches!(self, Outcome::ReadHit | Outcome::WriteHit)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EventRecord {
    pub index: usize,
    pub tick: u64,
    pub start: u64,
    pub done: u64,
    pub outcome: Outcome,
    /// A dirty line was written back to make room.
    pub writeback: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct SimStats {
    pub n_reads: u64,
    pub n_hits: u64,
    pub n_misses: u64,
    /// Write requests plus dirty write-backs.
    pub n_writes: u64,
    pub n_write_requests: u64,
    pub n_writebacks: u64,
    pub runtime_cycles: u64,
    pub refresh_stall_cycles: u64,
    pub n_refreshes: u64,
    /// Read load-to-use cycles and their counts.
    pub load_to_use: BTreeMap<u64, u64>,
    pub events: Vec<EventRecord>,
    pub refreshes: Vec<RefreshEvent>,
}

impl SimStats {
    /// `(cycles, cumulative fraction)` points of the load-to-use CDF.
    pub fn load_to_use_cdf(&self) -> Vec<(u64, f64)> {
        let total: u64 = self.load_to_use.values().sum();
        let mut acc = 0u64;
        self.load_to_use
            .iter()
            .map(|(&c, &n)| {
                acc += n;
                (c, acc as f64 / total.max(1) as f64)
            })
            .collect()
    }

    pub fn cdf_csv(&self) -> String {
        let mut s = String::from("cycle_bucket,cumulative_fraction\n");
        for (c, f) in self.load_to_use_cdf() {
            writeln!(s, "{c},{}", crate::report::fmt6(f)).expect("writing to a String cannot fail");
        }
        s
    }

    pub fn runtime_s(&self, f_clk_hz: f64) -> f64 {
        self.runtime_cycles as f64 / f_clk_hz
    }

    /// Largest gap between consecutive refreshes of any row in the log,
    /// counting from time zero.
    pub fn max_refresh_gap(&self) -> u64 {
        let mut last: BTreeMap<usize, u64> = BTreeMap::new();
        let mut worst = 0;
        for r in &self.refreshes {
            let prev = last.insert(r.row, r.tick).unwrap_or(0);
            worst = worst.max(r.tick - prev);
        }
        worst
    }
}

#[derive(Debug, Clone, Copy)]
struct Line {
    tag: u64,
    dirty: bool,
    used: u64,
}

/// Set-associative LRU store. Sets are allocated on first touch.
struct Store {
    sets: BTreeMap<u64, Vec<Line>>,
    ways: usize,
    clock: u64,
}

struct Access {
    hit: bool,
    writeback: bool,
}

impl Store {
    fn new(ways: usize) -> Self {
        Store { sets: BTreeMap::new(), ways, clock: 0 }
    }

    fn access(&mut self, set: u64, tag: u64, write: bool) -> Access {
        self.clock += 1;
        let lines = self.sets.entry(set).or_default();
        if let Some(l) = lines.iter_mut().find(|l| l.tag == tag) {
            l.used = self.clock;
            l.dirty |= write;
            return Access { hit: true, writeback: false };
        }
        let fresh = Line { tag, dirty: write, used: self.clock };
        if lines.len() < self.ways {
            lines.push(fresh);
            return Access { hit: false, writeback: false };
        }
        let victim = lines.iter_mut().min_by_key(|l| l.used).expect("full set");
        let writeback = victim.dirty;
        *victim = fresh;
        Access { hit: false, writeback }
    }
}

/// Per-port occupancy and the refresh events that can still collide.
struct Ports {
    free: Vec<u64>,
    window: Vec<RefreshEvent>,
    schedule: Option<RefreshSchedule>,
    refresh_len: u64,
    scope: BlockingScope,
    groups: usize,
}

impl Ports {
    /// Refresh events are pulled in until one starts after `until`.
    fn fill(&mut self, until: u64, log: &mut Vec<RefreshEvent>) {
        let Some(s) = self.schedule.as_mut() else { return };
        while self.window.last().is_none_or(|r| r.tick <= until) {
            match s.next() {
                Some(r) => {
                    log.push(r);
                    self.window.push(r);
                }
                None => break,
            }
        }
    }

    fn blocks(&self, r: &RefreshEvent, group: usize) -> bool {
        self.scope == BlockingScope::Subarray || r.row % self.groups == group
    }

    /// Earliest start at or after `ready` that does not overlap a refresh of
    /// the blocking unit. Returns the start and the stall cycles.
    fn slot(&mut self, ready: u64, busy: u64, group: usize, log: &mut Vec<RefreshEvent>) -> (u64, u64) {
        if self.schedule.is_none() {
            return (ready, 0);
        }
        let mut s = ready;
        loop {
            self.fill(s + busy, log);
            let clash = self
                .window
                .iter()
                .filter(|r| self.blocks(r, group))
                .find(|r| r.tick < s + busy.max(1) && s < r.tick + self.refresh_len);
            match clash {
                Some(r) => s = r.tick + self.refresh_len,
                None => return (s, s - ready),
            }
        }
    }

    /// Drops refresh events that ended before `t`; later accesses never
    /// start earlier than the current arrival.
    fn retire(&mut self, t: u64) {
        let len = self.refresh_len;
        let keep = self.window.iter().position(|r| r.tick + len > t).unwrap_or(self.window.len());
        self.window.drain(..keep);
    }
}

/// Runs a trace. `log_events` keeps a record per access.
pub fn simulate(trace: &[TraceEvent], cache: &CacheConfig, timing: &TimingParams, log_events: bool) -> Result<SimStats> {
    cache.validate()?;
    timing.validate()?;
    let mut stats = SimStats::default();
    if trace.is_empty() {
        return Ok(stats);
    }
    let c = timing.cycles;
    let schedule = if timing.refresh.enabled && c.refresh_row > 0 { Some(refresh_schedule(timing)?) } else { None };
    let mut ports = Ports {
        free: vec![0; timing.ports],
        window: Vec::new(),
        schedule,
        refresh_len: c.refresh_row,
        scope: timing.blocking_scope,
        groups: timing.mat_groups,
    };
    let mut store = Store::new(cache.ways);
    let mut last_tick = 0;
    let mut end = 0u64;
    for (index, e) in trace.iter().enumerate() {
        if e.tick < last_tick {
            return Err(Error::Trace { line: index + 1, msg: format!("tick {} is before {}", e.tick, last_tick) });
        }
        last_tick = e.tick;
        ports.retire(e.tick);
        let (set, tag) = cache.locate(e.address);
        let port = (set % timing.ports as u64) as usize;
        let group = ((set / timing.ports as u64) % timing.mat_groups as u64) as usize;
        let write = e.op == Op::Write;
        let a = store.access(set, tag, write);
        let busy = if write { c.busy_write } else { c.busy_read };
        let ready = e.tick.max(ports.free[port]);
        let (start, stall) = ports.slot(ready, busy, group, &mut stats.refreshes);
        stats.refresh_stall_cycles += stall;
        ports.free[port] = start + busy;
        let (outcome, done) = if write {
            stats.n_write_requests += 1;
            (if a.hit { Outcome::WriteHit } else { Outcome::WriteMiss }, start + c.write)
        } else {
            stats.n_reads += 1;
            let lat = timing.read_cycles(a.hit) + if a.hit { 0 } else { c.offchip };
            if a.hit {
                stats.n_hits += 1;
            } else {
                stats.n_misses += 1;
            }
            *stats.load_to_use.entry(start + lat - e.tick).or_default() += 1;
            (if a.hit { Outcome::ReadHit } else { Outcome::ReadMiss }, start + lat)
        };
        if a.writeback {
            stats.n_writebacks += 1;
        }
        end = end.max(done).max(ports.free[port]);
        if log_events {
            stats.events.push(EventRecord { index, tick: e.tick, start, done, outcome, writeback: a.writeback });
        }
    }
    stats.n_writes = stats.n_write_requests + stats.n_writebacks;
    stats.runtime_cycles = end;
    // Keep refreshes inside the run and top the log up to the end.
    if ports.schedule.is_some() {
        ports.fill(end, &mut stats.refreshes);
        stats.refreshes.retain(|r| r.tick <= end);
    }
    stats.n_refreshes = stats.refreshes.len() as u64;
    Ok(stats)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyParams {
    pub e_hit_j: f64,
    pub e_miss_j: f64,
    pub e_write_j: f64,
    pub e_refresh_row_j: f64,
    pub p_static_w: f64,
    pub t_retention_s: f64,
    pub n_row: usize,
    pub miss_offchip_multiplier: f64,
}

impl EnergyParams {
    pub fn from_bank(ppa: &BankPPA) -> Self {
        let (t_r, n) = ppa.refresh.map_or((f64::INFINITY, 0), |r| (r.t_retention_s, r.n_rows));
        EnergyParams {
            e_hit_j: ppa.e_hit_j,
            e_miss_j: ppa.e_miss_j,
            e_write_j: ppa.e_write_j,
            e_refresh_row_j: ppa.e_refresh_row_j,
            p_static_w: ppa.leakage_w,
            t_retention_s: t_r,
            n_row: n,
            miss_offchip_multiplier: DEFAULT_MISS_MULTIPLIER,
        }
    }

    fn validate(&self) -> Result<()> {
        let all = [self.e_hit_j, self.e_miss_j, self.e_write_j, self.e_refresh_row_j, self.p_static_w];
        if all.iter().any(|x| !(*x >= 0.0)) {
            return Err(Error::invalid("energies and static power must be >= 0"));
        }
        if !(self.t_retention_s > 0.0) {
            return Err(Error::non_positive("retention time", self.t_retention_s));
        }
        if !(self.miss_offchip_multiplier >= 1.0) {
            return Err(Error::invalid("off-chip miss multiplier must be >= 1"));
        }
        Ok(())
    }

    /// Average refresh power.
    pub fn refresh_power_w(&self) -> f64 {
        if self.t_retention_s.is_infinite() {
            0.0
        } else {
            self.n_row as f64 * self.e_refresh_row_j / self.t_retention_s
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyReport {
    pub t_run_s: f64,
    pub hits_j: f64,
    pub misses_j: f64,
    pub writes_j: f64,
    pub refresh_j: f64,
    pub static_j: f64,
    pub total_j: f64,
    /// Energy of fetching misses from beyond the LLC, not in the total.
    pub offchip_miss_j: f64,
}

impl EnergyReport {
    pub fn refresh_share(&self) -> f64 {
        if self.total_j > 0.0 {
            self.refresh_j / self.total_j
        } else {
            0.0
        }
    }

    /// `(term, joules)` in a fixed order.
    pub fn breakdown(&self) -> [(&'static str, f64); 5] {
        [
            ("hits", self.hits_j),
            ("misses", self.misses_j),
            ("writes", self.writes_j),
            ("refresh", self.refresh_j),
            ("static", self.static_j),
        ]
    }
}

/// Program energy from event counts.
pub fn energy_program(stats: &SimStats, ep: &EnergyParams, t_run_s: f64) -> Result<EnergyReport> {
    energy_from_counts(stats.n_hits, stats.n_misses, stats.n_writes, ep, t_run_s)
}

pub fn energy_from_counts(n_hits: u64, n_misses: u64, n_writes: u64, ep: &EnergyParams, t_run_s: f64) -> Result<EnergyReport> {
    ep.validate()?;
    if !(t_run_s >= 0.0) {
        return Err(Error::invalid(format!("run time must be >= 0, got {t_run_s}")));
    }
    let hits_j = n_hits as f64 * ep.e_hit_j;
    let misses_j = n_misses as f64 * ep.e_miss_j;
    let writes_j = n_writes as f64 * ep.e_write_j;
    let refresh_j = t_run_s * ep.refresh_power_w();
    let static_j = ep.p_static_w * t_run_s;
    Ok(EnergyReport {
        t_run_s,
        hits_j,
        misses_j,
        writes_j,
        refresh_j,
        static_j,
        total_j: hits_j + misses_j + writes_j + refresh_j + static_j,
        offchip_miss_j: n_misses as f64 * ep.e_hit_j * ep.miss_offchip_multiplier,
    })
}

/// Dynamic energy of each logged access, a write-back adding one write.
pub fn event_energies(stats: &SimStats, ep: &EnergyParams) -> Vec<f64> {
    stats
        .events
        .iter()
        .map(|r| {
            let base = match r.outcome {
                Outcome::ReadHit => ep.e_hit_j,
                Outcome::ReadMiss => ep.e_miss_j,
                Outcome::WriteHit | Outcome::WriteMiss => ep.e_write_j,
            };
            if r.writeback {
                base + ep.e_write_j
            } else {
                base
            }
        })
        .collect()
}

/// Total from the event log plus the time-proportional terms. Equals
/// [`energy_program`] up to rounding.
pub fn event_log_energy(stats: &SimStats, ep: &EnergyParams, t_run_s: f64) -> f64 {
    let dynamic: f64 = event_energies(stats, ep).iter().sum();
    dynamic + t_run_s * (ep.refresh_power_w() + ep.p_static_w)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cyc() -> Cycles {
        Cycles { hit: 10, miss_detect: 6, write: 8, tag_access: 4, tag_broadcast: 2, refresh_row: 3, busy_read: 5, busy_write: 5, offchip: 100 }
    }

    #[test]
    fn quantize_examples() {
        assert_eq!(quantize_cycles(9.794e-9, 3e9).unwrap(), 30);
        assert_eq!(quantize_cycles(0.0, 3e9).unwrap(), 0);
        assert_eq!(quantize_cycles(1.0 / 3e9, 3e9).unwrap(), 1);
        assert_eq!(quantize_cycles(1e-9, 1e9).unwrap(), 1);
        assert!(quantize_cycles(-1e-9, 1e9).is_err());
    }

    #[test]
    fn trace_grammar() {
        let t = parse_trace("# head\n0 R 0x40\n\n5 W ff  # tail\n").unwrap();
        assert_eq!(t, vec![
            TraceEvent { tick: 0, op: Op::Read, address: 0x40 },
            TraceEvent { tick: 5, op: Op::Write, address: 0xff },
        ]);
        assert_eq!(parse_trace(&format_trace(&t)).unwrap(), t);
        match parse_trace("5 R 0\n3 R 0\n") {
            Err(Error::Trace { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_trace("1 X 0"), Err(Error::Trace { line: 1, .. })));
        assert!(matches!(parse_trace("1 R zz"), Err(Error::Trace { line: 1, .. })));
    }

    #[test]
    fn cold_miss_then_hit() {
        let cache = CacheConfig::new(1 << 16, 4);
        let t = TimingParams::simple(1e9, cyc(), AccessMode::Normal);
        let s = simulate(&[], &cache, &t, false).unwrap();
        assert_eq!(s, SimStats::default());
        let tr = [TraceEvent { tick: 0, op: Op::Read, address: 0x1000 }, TraceEvent { tick: 1, op: Op::Read, address: 0x1000 }];
        let s = simulate(&tr, &cache, &t, true).unwrap();
        assert_eq!((s.n_misses, s.n_hits), (1, 1));
        assert_eq!(s.events[0].done, 6 + 100);
        // The second read waits for the port.
        assert_eq!(s.events[1].start, 5);
        assert_eq!(s.events[1].done, 5 + 10 + 2);
    }

    #[test]
    fn mode_read_latency() {
        let mut t = TimingParams::simple(1e9, cyc(), AccessMode::Sequential);
        assert_eq!((t.read_cycles(true), t.read_cycles(false)), (14, 10));
        t.mode = AccessMode::Normal;
        assert_eq!((t.read_cycles(true), t.read_cycles(false)), (12, 6));
        t.mode = AccessMode::Fast;
        assert_eq!(t.read_cycles(true), 10);
    }

    #[test]
    fn lru_eviction_and_writeback() {
        // Two ways, one set.
        let cache = CacheConfig::new(128, 2);
        let t = TimingParams::simple(1e9, cyc(), AccessMode::Normal);
        let ev = |tick, op, a| TraceEvent { tick, op, address: a };
        let tr = [ev(0, Op::Write, 0), ev(1, Op::Read, 64), ev(2, Op::Read, 0), ev(3, Op::Read, 128), ev(4, Op::Read, 64)];
        let s = simulate(&tr, &cache, &t, true).unwrap();
        let o: Vec<_> = s.events.iter().map(|r| r.outcome).collect();
        assert_eq!(o, [Outcome::WriteMiss, Outcome::ReadMiss, Outcome::ReadHit, Outcome::ReadMiss, Outcome::ReadMiss]);
        // 128 evicted 64 (clean); then 64 evicts the dirty line 0.
        assert_eq!(s.n_writebacks, 1);
        assert_eq!(s.n_writes, 2);
    }

    #[test]
    fn schedule_is_rolling() {
        let mut t = TimingParams::simple(1e3, cyc(), AccessMode::Normal);
        t.refresh = RefreshParams { enabled: true, row_period_s: 1.0, n_rows: 4 };
        let ev: Vec<_> = refresh_schedule(&t).unwrap().take(8).collect();
        let ticks: Vec<_> = ev.iter().map(|r| r.tick).collect();
        assert_eq!(ticks, [0, 250, 500, 750, 1000, 1250, 1500, 1750]);
        t.refresh.n_rows = 1;
        let one: Vec<_> = refresh_schedule(&t).unwrap().take(3).map(|r| r.tick).collect();
        assert_eq!(one, [0, 1000, 2000]);
        t.refresh.enabled = false;
        assert!(refresh_schedule(&t).is_err());
    }

    #[test]
    fn refresh_stalls_conflicting_access() {
        let cache = CacheConfig::new(1 << 16, 4);
        let mut t = TimingParams::simple(1e3, cyc(), AccessMode::Normal);
        t.refresh = RefreshParams { enabled: true, row_period_s: 1.0, n_rows: 4 };
        t.blocking_scope = BlockingScope::Subarray;
        let tr = [TraceEvent { tick: 251, op: Op::Read, address: 0 }];
        let s = simulate(&tr, &cache, &t, true).unwrap();
        assert_eq!(s.events[0].start, 253);
        assert_eq!(s.refresh_stall_cycles, 2);
        t.refresh.enabled = false;
        let s2 = simulate(&tr, &cache, &t, true).unwrap();
        assert!(s2.runtime_cycles < s.runtime_cycles);
    }

    #[test]
    fn eq5_worked_example() {
        let ep = EnergyParams {
            e_hit_j: 1e-9,
            e_miss_j: 92e-9,
            e_write_j: 2e-9,
            e_refresh_row_j: 0.1e-9,
            p_static_w: 10e-3,
            t_retention_s: 0.315,
            n_row: 128,
            miss_offchip_multiplier: 92.0,
        };
        let r = energy_from_counts(100, 10, 50, &ep, 1e-3).unwrap();
        assert!((r.total_j - 1.112e-5).abs() / 1.112e-5 < 5e-4, "{}", r.total_j);
        let zero = EnergyParams { p_static_w: 0.0, n_row: 0, ..ep };
        assert_eq!(energy_from_counts(0, 0, 0, &zero, 1e-3).unwrap().total_j, 0.0);
        let edram = EnergyParams { t_retention_s: 170e-6, ..ep };
        let ratio = energy_from_counts(0, 0, 0, &edram, 1.0).unwrap().refresh_j / energy_from_counts(0, 0, 0, &ep, 1.0).unwrap().refresh_j;
        assert!((ratio - 0.315 / 170e-6).abs() < 1e-6 * ratio);
    }

    #[test]
    fn cache_geometry_checked() {
        assert!(CacheConfig::new(3 << 10, 4).validate().is_err());
        let c = CacheConfig::new(1 << 20, 16);
        assert_eq!(c.sets(), 1024);
        assert_eq!(c.locate(64 * 1025), (1, 1));
    }
}
