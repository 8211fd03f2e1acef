// SPDX-License-Identifier: Apache-2.0

use std::collections::HashMap;

use nscache_core::bank::AccessMode;
use nscache_core::llcsim::{
    energy_program, event_log_energy, refresh_schedule, simulate, BlockingScope, CacheConfig, Cycles, EnergyParams, Op, Outcome,
    RefreshParams, TimingParams, TraceEvent,
};
use nscache_core::tracegen::{generate, GenParams, TraceKind};
use proptest::prelude::*;

/// Untimed reference: each set is a recency list, most recent last.
fn oracle(trace: &[TraceEvent], cache: &CacheConfig) -> Vec<bool> {
    let line = cache.line_bytes;
    let sets = cache.capacity_bytes / (line * cache.ways as u64);
    let mut lists: HashMap<u64, Vec<u64>> = HashMap::new();
    trace
        .iter()
        .map(|e| {
            let l = (e.address & ((1u64 << cache.address_bits) - 1)) / line;
            let list = lists.entry(l % sets).or_default();
            let hit = match list.iter().position(|&x| x == l) {
                Some(i) => {
                    list.remove(i);
                    true
                }
                None => {
                    if list.len() == cache.ways {
                        list.remove(0);
                    }
                    false
                }
            };
            list.push(l);
            hit
        })
        .collect()
}

fn cycles() -> Cycles {
    Cycles { hit: 6, miss_detect: 4, write: 5, tag_access: 3, tag_broadcast: 2, refresh_row: 4, busy_read: 2, busy_write: 3, offchip: 100 }
}

fn refreshing(period_s: f64, n_rows: usize) -> TimingParams {
    let mut t = TimingParams::simple(1e9, cycles(), AccessMode::Normal);
    t.ports = 8;
    t.mat_groups = 4;
    t.refresh = RefreshParams { enabled: true, row_period_s: period_s, n_rows };
    t
}

fn energy_params(t_r: f64) -> EnergyParams {
    EnergyParams {
        e_hit_j: 1e-10,
        e_miss_j: 2e-10,
        e_write_j: 1.5e-10,
        e_refresh_row_j: 3e-9,
        p_static_w: 0.1,
        t_retention_s: t_r,
        n_row: 128,
        miss_offchip_multiplier: 92.0,
    }
}

fn mixed_trace(seed: u64, n: usize) -> Vec<TraceEvent> {
    let z = GenParams { events: n / 2, footprint_bytes: 1 << 20, write_fraction: 0.3, tick_gap: 3, ..GenParams::default() };
    let s = GenParams { stride_bytes: 192, footprint_bytes: 3 << 18, ..z };
    let a = generate(TraceKind::Zipf, &z, seed).unwrap();
    let b = generate(TraceKind::Strided, &s, seed + 1).unwrap();
    // Interleave by index; ticks stay ordered.
    a.into_iter().zip(b).flat_map(|(x, y)| [x, TraceEvent { tick: x.tick, ..y }]).collect()
}

fn assert_identity(stats: &nscache_core::llcsim::SimStats, ep: &EnergyParams, f: f64) {
    let t = stats.runtime_s(f);
    let total = energy_program(stats, ep, t).unwrap().total_j;
    let logged = event_log_energy(stats, ep, t);
    assert!((total - logged).abs() <= 1e-9 * total.abs().max(f64::MIN_POSITIVE), "{total} vs {logged}");
}

#[test]
fn oracle_equivalence_mixed_traces() {
    let cache = CacheConfig::new(256 * 1024, 8);
    let timing = refreshing(20e-6, 64);
    for seed in 0..10 {
        let tr = mixed_trace(seed, 20_000);
        let s = simulate(&tr, &cache, &timing, true).unwrap();
        let want = oracle(&tr, &cache);
        let got: Vec<bool> = s.events.iter().map(|r| r.outcome.is_hit()).collect();
        assert_eq!(got, want, "seed {seed}");
        assert_eq!(s.n_hits + s.n_misses, s.n_reads);
        assert_eq!(s.n_reads + s.n_write_requests, tr.len() as u64);
        assert_identity(&s, &energy_params(20e-6), timing.f_clk_hz);
    }
}

#[test]
fn refresh_gap_within_period() {
    let cache = CacheConfig::new(64 * 1024, 4);
    for (period, rows, scope) in [(5e-6, 128, BlockingScope::Mat), (2e-6, 7, BlockingScope::Subarray), (1e-6, 1, BlockingScope::Mat)] {
        let mut t = refreshing(period, rows);
        t.blocking_scope = scope;
        let p = t.period_cycles();
        let n = (12 * p / 3) as usize;
        let tr = generate(TraceKind::UniformRandom, &GenParams { events: n, tick_gap: 3, write_fraction: 0.2, ..GenParams::default() }, 5).unwrap();
        let s = simulate(&tr, &cache, &t, true).unwrap();
        assert!(s.runtime_cycles >= 10 * p);
        assert!(s.max_refresh_gap() <= p, "gap {} over {p}", s.max_refresh_gap());
        let window = s.runtime_cycles / p;
        let count = s.n_refreshes as i64;
        let expect = (rows as u64 * window) as i64;
        assert!((count - expect).abs() <= rows as i64 + 1, "{count} vs {expect}");
    }
}

#[test]
fn refresh_schedule_count_over_window() {
    let t = refreshing(315e-3 / 1000.0, 128);
    let p = t.period_cycles();
    let horizon = 37 * p + p / 3;
    let n = refresh_schedule(&t).unwrap().take_while(|r| r.tick <= horizon).count() as i64;
    let expect = 128 * (horizon / p) as i64;
    assert!((n - expect).abs() <= 128);
}

#[test]
fn disabling_refresh_helps_when_it_conflicts() {
    let cache = CacheConfig::new(64 * 1024, 4);
    let mut t = refreshing(4e-6, 16);
    t.blocking_scope = BlockingScope::Subarray;
    t.ports = 1;
    let tr: Vec<_> = (0..4000u64).map(|i| TraceEvent { tick: i * 2, op: Op::Read, address: (i % 64) * 64 }).collect();
    let on = simulate(&tr, &cache, &t, false).unwrap();
    assert!(on.refresh_stall_cycles > 0);
    t.refresh.enabled = false;
    let off = simulate(&tr, &cache, &t, false).unwrap();
    assert!(off.runtime_cycles < on.runtime_cycles);
}

#[test]
fn refresh_energy_ratio() {
    let s = nscache_core::llcsim::SimStats::default();
    let e = energy_program(&s, &energy_params(170e-6), 1e-3).unwrap().refresh_j;
    let g = energy_program(&s, &energy_params(315e-3), 1e-3).unwrap().refresh_j;
    assert!((e / g - 1853.0).abs() < 1.0);
}

#[test]
fn outcomes_cover_writes() {
    let cache = CacheConfig::new(64 * 1024, 4);
    let t = TimingParams::simple(1e9, cycles(), AccessMode::Sequential);
    let tr = [TraceEvent { tick: 0, op: Op::Write, address: 0 }, TraceEvent { tick: 1, op: Op::Write, address: 0 }];
    let s = simulate(&tr, &cache, &t, true).unwrap();
    assert_eq!(s.events[0].outcome, Outcome::WriteMiss);
    assert_eq!(s.events[1].outcome, Outcome::WriteHit);
    assert_eq!((s.n_writes, s.n_reads), (2, 0));
}

fn arb_trace() -> impl Strategy<Value = Vec<TraceEvent>> {
    prop::collection::vec((0u64..6, any::<bool>(), 0u64..256), 1..300).prop_map(|v| {
        let mut tick = 0;
        v.into_iter()
            .map(|(gap, w, line)| {
                tick += gap;
                TraceEvent { tick, op: if w { Op::Write } else { Op::Read }, address: line * 64 }
            })
            .collect()
    })
}

fn arb_cycles() -> impl Strategy<Value = Cycles> {
    (1u64..20, 1u64..20, 1u64..20, 0u64..10, 0u64..5, 1u64..6, 1u64..6, 1u64..6).prop_map(|(h, m, w, t, b, r, br, bw)| Cycles {
        hit: h,
        miss_detect: m,
        write: w,
        tag_access: t,
        tag_broadcast: b,
        refresh_row: r,
        busy_read: br,
        busy_write: bw,
        offchip: 50,
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn matches_oracle(tr in arb_trace(), ways in prop::sample::select(vec![1usize, 2, 4])) {
        let cache = CacheConfig::new(64 * 8 * ways as u64, ways);
        let t = refreshing(1e-6, 8);
        let s = simulate(&tr, &cache, &t, true).unwrap();
        let got: Vec<bool> = s.events.iter().map(|r| r.outcome.is_hit()).collect();
        prop_assert_eq!(got, oracle(&tr, &cache));
        prop_assert_eq!(s.n_hits + s.n_misses, s.n_reads);
        prop_assert!(s.max_refresh_gap() <= t.period_cycles());
        assert_identity(&s, &energy_params(1e-6), t.f_clk_hz);
    }

    #[test]
    fn cycles_are_monotone(tr in arb_trace(), c in arb_cycles(), field in 0usize..8, bump in 1u64..5, mode in 0usize..3) {
        let cache = CacheConfig::new(4096, 2);
        let mut t = refreshing(0.5e-6, 8);
        t.mode = [AccessMode::Sequential, AccessMode::Normal, AccessMode::Fast][mode];
        t.ports = 2;
        t.cycles = c;
        let base = simulate(&tr, &cache, &t, false).unwrap().runtime_cycles;
        let f = [
            &mut t.cycles.hit,
            &mut t.cycles.miss_detect,
            &mut t.cycles.write,
            &mut t.cycles.tag_access,
            &mut t.cycles.tag_broadcast,
            &mut t.cycles.refresh_row,
            &mut t.cycles.busy_read,
            &mut t.cycles.busy_write,
        ];
        *f.into_iter().nth(field).unwrap() += bump;
        let after = simulate(&tr, &cache, &t, false).unwrap().runtime_cycles;
        prop_assert!(after >= base, "{after} < {base}");
    }

    #[test]
    fn refresh_never_speeds_up(tr in arb_trace(), scope in any::<bool>()) {
        let cache = CacheConfig::new(4096, 2);
        let mut t = refreshing(0.3e-6, 16);
        t.blocking_scope = if scope { BlockingScope::Subarray } else { BlockingScope::Mat };
        let on = simulate(&tr, &cache, &t, false).unwrap();
        t.refresh.enabled = false;
        let off = simulate(&tr, &cache, &t, false).unwrap();
        prop_assert!(off.runtime_cycles <= on.runtime_cycles);
        prop_assert_eq!(off.refresh_stall_cycles, 0);
    }
}
