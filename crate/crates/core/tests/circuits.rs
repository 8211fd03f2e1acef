// SPDX-License-Identifier: Apache-2.0

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use nscache_core::circuits::{chain_delay_model, elmore_delay, optimal_stage_count, size_chain, RcLadder};
use nscache_core::{BufferChainF32, RcLadderF32};
use proptest::prelude::*;

/// Far-end 50% crossing of a unit step into a pi-segment ladder, solved
/// exactly from the symmetric eigen decomposition of C^-1/2 G C^-1/2.
fn ode_t50(l: &RcLadder) -> f64 {
    let n = l.segments.len() + 1;
    let mut c = vec![0.0; n];
    for (k, &(_, ck)) in l.segments.iter().enumerate() {
        c[k] += ck / 2.0;
        c[k + 1] += ck / 2.0;
    }
    c[n - 1] += l.load_c;
    let mut g = DMatrix::<f64>::zeros(n, n);
    g[(0, 0)] += 1.0 / l.driver_r;
    for (k, &(r, _)) in l.segments.iter().enumerate() {
        let y = 1.0 / r;
        g[(k, k)] += y;
        g[(k + 1, k + 1)] += y;
        g[(k, k + 1)] -= y;
        g[(k + 1, k)] -= y;
    }
    let s: Vec<f64> = c.iter().map(|x| 1.0 / x.sqrt()).collect();
    let a = DMatrix::from_fn(n, n, |i, j| s[i] * g[(i, j)] * s[j]);
    let eig = SymmetricEigen::new(a);
    // x = C^1/2 (1 - v), starts at C^1/2 * 1 and decays per mode.
    let x0 = DVector::from_fn(n, |i, _| c[i].sqrt());
    let coef = eig.eigenvectors.transpose() * &x0;
    let far = |t: f64| {
        let decayed = DVector::from_fn(n, |i, _| coef[i] * (-eig.eigenvalues[i] * t).exp());
        let x = &eig.eigenvectors * decayed;
        1.0 - x[n - 1] * s[n - 1]
    };
    let mut hi = elmore_delay(l);
    while far(hi) < 0.5 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if far(mid) < 0.5 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn stage_count_at_powers_of_e() {
    for k in 1..=4 {
        let f = (k as f64).exp();
        let n = optimal_stage_count(f, 0.0).unwrap();
        assert_eq!(n, k, "F = e^{k}");
        let d = chain_delay_model(n, f, 0.0);
        assert!(d <= chain_delay_model(n + 1, f, 0.0));
        if n > 1 {
            assert!(d <= chain_delay_model(n - 1, f, 0.0));
        }
    }
}

#[test]
fn stage_count_rejects_bad_input() {
    assert!(optimal_stage_count(0.5, 0.0).is_err());
    assert!(optimal_stage_count(10.0, -1.0).is_err());
    assert_eq!(optimal_stage_count(1.0, 0.0).unwrap(), 1);
}

#[test]
fn single_rc_oracle() {
    // A lumped RC: the segment is negligible next to driver and load.
    let l = RcLadder::new(vec![(1.0, 1e-19)], 1e3, 1e-15).unwrap();
    let t = ode_t50(&l);
    let want = 1e-12 * std::f64::consts::LN_2;
    assert!((t - want).abs() < 3e-3 * want, "{t} vs {want}");
}

#[test]
fn f32_aliases() {
    let c: BufferChainF32 = size_chain(1.0f32, 64.0, 4).unwrap();
    assert!((c.ratio_product() - 64.0).abs() < 1e-3);
    let l: RcLadderF32 = RcLadder::uniform(100.0f32, 1e-15, 4, 50.0, 1e-16).unwrap();
    assert!(elmore_delay(&l) > 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn chain_ratio_product(c_in in 1e-17f64..1e-14, mult in 1.0f64..1e4, n in 1usize..12) {
        let c_load = c_in * mult;
        let ch = size_chain(c_in, c_load, n).unwrap();
        let want = if n == 1 { 1.0 } else { c_load / c_in };
        prop_assert!((ch.ratio_product() - want).abs() <= 1e-12 * want);
    }

    #[test]
    fn stage_count_is_local_minimum(f in 1.5f64..1e5, gamma in 0.0f64..2.0) {
        let n = optimal_stage_count(f, gamma).unwrap();
        let d = chain_delay_model(n, f, gamma);
        prop_assert!(d <= chain_delay_model(n + 1, f, gamma) * (1.0 + 1e-12));
        if n > 1 {
            prop_assert!(d <= chain_delay_model(n - 1, f, gamma) * (1.0 + 1e-12));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn elmore_bounds_ode(
        segs in prop::collection::vec((1.0f64..1e4, 1e-16f64..1e-13), 1..=8),
        driver in 1.0f64..1e4,
        load in 0.0f64..1e-13,
    ) {
        let l = RcLadder::new(segs, driver, load).unwrap();
        let e = elmore_delay(&l);
        let t = ode_t50(&l);
        prop_assert!(e >= t * (1.0 - 1e-9), "elmore {e} below oracle {t}");
        prop_assert!(e <= 3.0 * t, "elmore {e} over 3x oracle {t}");
    }
}
