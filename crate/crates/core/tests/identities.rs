use cachecoder::analysis::formulas::{
    decentralized_at_q, feedback_at_t, formula_point, grouped_at_m, grouped_at_t,
    grouped_operating_region, mt_at_m, mt_at_t, q, qi, single_stream_decentralized, CacheInput, Q,
};
use cachecoder::analysis::gap::{dominates, fraction_grid, gap_curves};
use cachecoder::combinatorics::binom;
use cachecoder::schemes::{valid_t, SchemeKind};
use num_traits::{One, Zero};
use proptest::prelude::*;

/// Single-stream centralized row: K(1-p)/(1+Kp) with p = (M-1)/(N-1).
fn single_stream_centralized(k: usize, n: usize, m: &Q) -> Q {
    let p = (m - Q::one()) / qi(n as i64 - 1);
    let kk = qi(k as i64);
    &kk * (Q::one() - &p) / (Q::one() + &kk * &p)
}

#[test]
fn key_storage_ratios_hold_on_shared_grid() {
    for k in 2..=12 {
        for l in 1..=k {
            for t in 0..=k {
                let t = qi(t as i64);
                let base = mt_at_t(k, l, k, &t).unwrap().m_k;
                assert_eq!(grouped_at_t(k, l, k, &t).unwrap().m_k, qi(l as i64) * &base);
                let factor = qi(l as i64) * (&t + Q::one()) / (&t + qi(l as i64));
                assert_eq!(feedback_at_t(k, l, k, &t).unwrap().m_k, factor * &base);
            }
        }
    }
}

#[test]
fn grouped_crossover_sits_at_region_lower_bound() {
    let (lo, hi) = grouped_operating_region(8, 2, 8).unwrap();
    assert_eq!((lo.clone(), hi), (q(16, 5), q(29, 4)));
    for j in 0..=48 {
        let m = qi(2) + q(j, 8);
        let p = grouped_at_m(8, 2, 8, &m).unwrap();
        assert_eq!(p.m_d >= p.m_k, m >= lo, "M={m}");
    }
    let p = grouped_at_m(8, 2, 8, &lo).unwrap();
    assert_eq!(p.m_d, p.m_k);
}

#[test]
fn grouped_region_reduces_to_single_stream() {
    // with one stream the bounds are 2N/(N+1) and (K-1)(N-1)/K + 1
    let (lo, hi) = grouped_operating_region(6, 1, 10).unwrap();
    assert_eq!(lo, q(20, 11));
    assert_eq!(hi, q(5 * 9, 6) + Q::one());
}

#[test]
fn single_stream_rows() {
    for k in 2..=8 {
        for n in [k, k + 1, 2 * k] {
            for t in 0..=k {
                let t = qi(t as i64);
                for kind in [SchemeKind::Mt, SchemeKind::Grouped, SchemeKind::Feedback] {
                    let p = formula_point(kind, k, 1, n, &CacheInput::T(t.clone())).unwrap();
                    assert_eq!(
                        p.delay,
                        single_stream_centralized(k, n, &p.memory),
                        "{kind:?} K={k} N={n} t={t}"
                    );
                    assert_eq!(p.m_k, Q::one() - &t / qi(k as i64));
                }
            }
            for j in 1..10 {
                let prob = q(j, 10);
                let p = decentralized_at_q(k, 1, n, &prob).unwrap();
                assert_eq!(p.m_k, Q::one() - &prob);
                assert_eq!(p.delay, single_stream_decentralized(k, n, &p.memory));
            }
        }
    }
}

#[test]
fn key_storage_dominates_per_target_indexing() {
    for k in 1..=16 {
        for l in 1..=k {
            for t in 0..=k {
                let base = q((k - t) as i64, k as i64);
                assert!(qi(binom(t + l - 1, t) as i64) * &base >= base);
            }
        }
    }
}

#[test]
fn more_streams_means_less_delay() {
    for k in 2..=10 {
        for j in 0..8 {
            let m = Q::one() + q(j * (k as i64 - 1), 8);
            let delays: Vec<Q> = (1..=k)
                .map(|l| mt_at_m(k, l, k, &m).unwrap().delay)
                .collect();
            assert!(delays.windows(2).all(|w| w[1] < w[0]), "K={k} M={m}");
        }
    }
}

#[test]
fn secure_curves_dominate_insecure() {
    for l in [2, 4] {
        let grid = fraction_grid(8, 16);
        for kind in [SchemeKind::Mt, SchemeKind::Decentralized] {
            assert!(
                dominates(&gap_curves(kind, 8, l, 8, &grid)),
                "{kind:?} L={l}"
            );
        }
    }
}

#[test]
fn full_memory_delivers_nothing() {
    let p = mt_at_m(8, 2, 8, &qi(8)).unwrap();
    assert!(p.delay.is_zero() && p.delay_insecure.is_zero());
    let p = formula_point(SchemeKind::Decentralized, 8, 2, 8, &CacheInput::M(qi(8))).unwrap();
    assert!(p.delay.is_zero());
}

#[test]
fn valid_parameters_per_scheme() {
    assert_eq!(valid_t(SchemeKind::Mt, 5, 2), [0, 1, 2, 3, 5]);
    assert_eq!(valid_t(SchemeKind::Grouped, 6, 2), [0, 2, 4, 6]);
    assert_eq!(valid_t(SchemeKind::Feedback, 6, 2), [0, 2, 4, 6]);
    assert!(valid_t(SchemeKind::Grouped, 5, 2).is_empty());
}

proptest! {
    #[test]
    fn memory_splits_into_data_and_keys(k in 2usize..12, l in 1usize..4, extra in 0usize..4, num in 0i64..=100) {
        prop_assume!(l <= k);
        let n = k + extra;
        let m = Q::one() + q(num * (n as i64 - 1), 100);
        let p = mt_at_m(k, l, n, &m).unwrap();
        prop_assert_eq!(&p.m_d + &p.m_k, m);
        prop_assert!(p.delay >= Q::zero());
        prop_assert!(p.delay >= p.delay_insecure);
    }

    #[test]
    fn decentralized_series_is_a_probability_mix(k in 1usize..10, l in 1usize..4, num in 1i64..20) {
        prop_assume!(l <= k);
        let prob = q(num, 20);
        let p = decentralized_at_q(k, l, k, &prob).unwrap();
        prop_assert_eq!(&p.m_d + &p.m_k, p.memory.clone());
        prop_assert!(p.delay >= Q::zero() && p.delay <= qi(k as i64));
    }
}
