mod common;

use deltasketch::ncd::ncd_from_estimates;
use deltasketch::oracle::{self, brute_force_counts, naive_bwt, Ratio};
use deltasketch::{DeltaSketch, DynamicRlbwt, SketchParams, StreamConfig, StreamEstimator};
use proptest::prelude::*;

fn small_alphabet_string(max_len: usize) -> impl Strategy<Value = Vec<u8>> {
    (1u8..=4).prop_flat_map(move |sigma| {
        proptest::collection::vec((0..sigma).prop_map(|c| b'a' + c), 1..=max_len)
    })
}

fn registers(s: &DeltaSketch) -> Vec<Vec<u8>> {
    s.counters().map(|(_, c)| c.registers().to_vec()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn profile_invariants(s in small_alphabet_string(300)) {
        let p = oracle::exact_profile(&s);
        let n = s.len() as u64;
        prop_assert_eq!(&p.d, &brute_force_counts(&s));
        let sigma = s.iter().collect::<std::collections::HashSet<_>>().len() as u64;
        for k in 1..=n {
            let cap = sigma.checked_pow(k as u32).unwrap_or(u64::MAX).min(n - k + 1);
            prop_assert!(p.d_k(k) <= cap);
            if k < n {
                prop_assert!(p.d_k(k + 1) + 1 >= p.d_k(k));
            }
        }
        prop_assert_eq!(p.d_k(n), 1);
        prop_assert!(p.k_hat >= 1 && p.k_hat <= n.div_ceil(2));
        if sigma > 1 {
            prop_assert!(p.delta >= Ratio::new(2, 1));
        } else {
            prop_assert_eq!(p.delta, Ratio::new(1, 1));
        }
    }

    #[test]
    fn pair_sandwich_and_concatenation(s in small_alphabet_string(200), t in small_alphabet_string(200)) {
        let ds = oracle::exact_delta(&s).to_f64();
        let dt = oracle::exact_delta(&t).to_f64();
        let pair = oracle::exact_delta_pair(&s, &t).to_f64();
        let concat = oracle::exact_delta(&[s.as_slice(), t.as_slice()].concat()).to_f64();
        prop_assert!(ds.max(dt) <= pair + 1e-12);
        prop_assert!(pair <= ds + dt + 1e-12);
        prop_assert!((pair - concat).abs() <= 1.0 + 1e-12);
        prop_assert_eq!(oracle::exact_delta_pair(&s, &s), oracle::exact_delta(&s));
        let ncd = oracle::exact_ncd(&s, &t).unwrap();
        prop_assert!((0.0..=1.0).contains(&ncd));
    }

    #[test]
    fn ncd_survives_relative_perturbation(
        s in small_alphabet_string(150),
        t in small_alphabet_string(150),
        eps in 0.01f64..=1.0,
    ) {
        let ds = oracle::exact_delta(&s).to_f64();
        let dt = oracle::exact_delta(&t).to_f64();
        let dst = oracle::exact_delta_pair(&s, &t).to_f64();
        let exact = ncd_from_estimates(ds, dt, dst).unwrap().raw;
        let e = eps / 5.0;
        for corner in 0..8 {
            let f = |bit: u32, v: f64| if corner & (1 << bit) == 0 { v * (1.0 - e) } else { v * (1.0 + e) };
            let got = ncd_from_estimates(f(0, ds), f(1, dt), f(2, dst)).unwrap().raw;
            prop_assert!((got - exact).abs() <= eps + 1e-12, "corner {} {} vs {}", corner, got, exact);
        }
    }

    #[test]
    fn rlbwt_matches_naive(s in proptest::collection::vec(any::<u8>(), 0..200)) {
        let b = DynamicRlbwt::from_stream(&s);
        let naive = naive_bwt(&s);
        prop_assert_eq!(b.to_symbols(), naive.bwt);
        prop_assert_eq!(b.runs(), (naive.runs, naive.runs_without_sentinel));
        for j in 1..=b.len() {
            prop_assert_eq!(b.lf(j).ok(), naive.lf[j as usize - 1]);
        }
    }

    #[test]
    fn streaming_equals_in_memory(
        s in proptest::collection::vec(0u8..3, 10..1500),
        block in 1usize..700,
        seed in any::<u64>(),
    ) {
        let p = SketchParams::new(0.4, s.len() as u64).unwrap().with_precision(8).with_seed(seed);
        let expected = DeltaSketch::build(p.clone(), &s).unwrap();
        let config = StreamConfig { window: Some(s.len() as u64), rlbwt: false, block_size: block };
        let mut est = StreamEstimator::new(p.clone(), config).unwrap();
        for chunk in s.chunks(97) {
            est.push_slice(chunk).unwrap();
        }
        prop_assert_eq!(&est.finalize().unwrap(), &expected);

        let forced = StreamConfig { window: Some(8), rlbwt: true, block_size: block };
        let mut est = StreamEstimator::new(p, forced).unwrap();
        est.push_slice(&s).unwrap();
        prop_assert_eq!(registers(&est.finalize().unwrap()), registers(&expected));
    }

    #[test]
    fn serialization_and_merge_agree(
        s in proptest::collection::vec(any::<u8>(), 0..400),
        t in proptest::collection::vec(any::<u8>(), 0..400),
    ) {
        let p = SketchParams::new(0.5, 400).unwrap().with_precision(6);
        let a = DeltaSketch::build(p.clone(), &s).unwrap();
        let b = DeltaSketch::build(p, &t).unwrap();
        prop_assert_eq!(&DeltaSketch::deserialize(&a.serialize()).unwrap(), &a);
        let merged = a.merge(&b).unwrap();
        prop_assert_eq!(&DeltaSketch::deserialize(&merged.serialize()).unwrap(), &merged);
        prop_assert_eq!(merged.estimate(), a.union_estimate(&b).unwrap());
        prop_assert_eq!(registers(&merged), registers(&b.merge(&a).unwrap()));
    }
}

#[test]
fn family_generators() {
    assert_eq!(common::fibonacci_word(8), b"abaababa");
    assert_eq!(common::thue_morse(8), b"abbabaab");
}
