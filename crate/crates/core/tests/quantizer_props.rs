use fuzzquant_core::quantizer::{
    kmeans_quantize, sse, Init, Quantization, QuantizeError, QuantizeOptions, Signal,
};
use proptest::prelude::*;

/// Independent SSE: straight double loop over clusters then samples.
fn sse_by_cluster(values: &[f64], q: &Quantization) -> f64 {
    let mut total = 0.0;
    for (j, c) in q.centroids.iter().enumerate() {
        for (i, v) in values.iter().enumerate() {
            if q.labels[i] == j + 1 {
                total += (v - c) * (v - c);
            }
        }
    }
    total
}

fn check_lloyd_invariants(values: &[f64], q: &Quantization) {
    let k = q.k;
    assert!(
        q.centroids.windows(2).all(|w| w[0] < w[1]),
        "{:?}",
        q.centroids
    );
    assert!(q.cluster_sizes().iter().all(|&s| s > 0));
    for (i, &v) in values.iter().enumerate() {
        let l = q.labels[i] - 1;
        let d = (v - q.centroids[l]).abs();
        for j in 0..k {
            let dj = (v - q.centroids[j]).abs();
            assert!(d <= dj, "sample {i} not at nearest centroid");
            if j < l {
                assert!(d < dj, "tie at {i} not broken low");
            }
        }
    }
    for j in 0..k {
        let members: Vec<f64> = values
            .iter()
            .zip(&q.labels)
            .filter(|(_, &l)| l == j + 1)
            .map(|(&v, _)| v)
            .collect();
        let mean = members.iter().sum::<f64>() / members.len() as f64;
        let scale = members.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        assert!((q.centroids[j] - mean).abs() <= 1e-9 * scale);
    }
    for w in q.sse_history.windows(2) {
        assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-12, "{:?}", q.sse_history);
    }
}

fn signal_strategy() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1000.0f64..1000.0, 3..200)
}

proptest! {
    #[test]
    fn lloyd_fixed_point_holds(values in signal_strategy(), k in 1usize..6, quantile in any::<bool>()) {
        let s = Signal::new(values.clone()).unwrap();
        let init = if quantile { Init::Quantile } else { Init::Auto };
        match kmeans_quantize(&s, k, &QuantizeOptions::with_init(init)) {
            Ok(q) => check_lloyd_invariants(&values, &q),
            Err(e) => {
                let degenerate = matches!(e, QuantizeError::DegenerateK { .. });
                prop_assert!(degenerate, "{:?}", e);
            }
        }
    }

    #[test]
    fn integer_valued_signals_with_ties(values in prop::collection::vec(0u8..12, 3..100), k in 1usize..4) {
        let values: Vec<f64> = values.into_iter().map(f64::from).collect();
        let s = Signal::new(values.clone()).unwrap();
        if let Ok(q) = kmeans_quantize(&s, k, &QuantizeOptions::with_init(Init::Quantile)) {
            check_lloyd_invariants(&values, &q);
        }
    }

    #[test]
    fn sse_matches_independent_sum(values in signal_strategy(), k in 1usize..5) {
        let s = Signal::new(values.clone()).unwrap();
        if let Ok(q) = kmeans_quantize(&s, k, &QuantizeOptions::default()) {
            let a = sse(&s, &q).unwrap();
            let b = sse_by_cluster(&values, &q);
            prop_assert!((a - b).abs() <= 1e-9 * b.max(1.0));
            prop_assert!((q.sse - b).abs() <= 1e-9 * b.max(1.0));
        }
    }

    #[test]
    fn shuffling_keeps_centroids_and_sse(values in signal_strategy(), k in 1usize..5, seed in any::<u64>()) {
        let s = Signal::new(values.clone()).unwrap();
        let Ok(q) = kmeans_quantize(&s, k, &QuantizeOptions::default()) else { return Ok(()); };
        // deterministic Fisher-Yates driven by a small LCG
        let mut perm: Vec<usize> = (0..values.len()).collect();
        let mut state = seed | 1;
        for i in (1..perm.len()).rev() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            perm.swap(i, (state >> 33) as usize % (i + 1));
        }
        let shuffled: Vec<f64> = perm.iter().map(|&i| values[i]).collect();
        let q2 = kmeans_quantize(&Signal::new(shuffled).unwrap(), k, &QuantizeOptions::default()).unwrap();
        prop_assert_eq!(&q.centroids, &q2.centroids);
        for (new_i, &old_i) in perm.iter().enumerate() {
            prop_assert_eq!(q2.labels[new_i], q.labels[old_i]);
        }
        prop_assert!((q.sse - q2.sse).abs() <= 1e-9 * q.sse.max(1.0));
    }

    #[test]
    fn repeat_runs_are_identical(values in signal_strategy(), k in 1usize..5) {
        let s = Signal::new(values).unwrap();
        let a = kmeans_quantize(&s, k, &QuantizeOptions::default());
        let b = kmeans_quantize(&s, k, &QuantizeOptions::default());
        prop_assert_eq!(a, b);
    }
}

#[test]
fn one_more_lloyd_step_changes_nothing() {
    let values: Vec<f64> = (0..300).map(|i| ((i * 37) % 101) as f64 * 1.7).collect();
    let s = Signal::new(values.clone()).unwrap();
    let q = kmeans_quantize(&s, 4, &QuantizeOptions::default()).unwrap();
    let relabel: Vec<usize> = values
        .iter()
        .map(|&v| {
            1 + (0..q.k)
                .min_by(|&a, &b| {
                    (v - q.centroids[a])
                        .abs()
                        .total_cmp(&(v - q.centroids[b]).abs())
                        .then(a.cmp(&b))
                })
                .unwrap()
        })
        .collect();
    assert_eq!(relabel, q.labels);
}

#[test]
fn iteration_cap_is_reported() {
    let values: Vec<f64> = (0..50).map(|i| (i * i) as f64).collect();
    let s = Signal::new(values).unwrap();
    let opts = QuantizeOptions {
        init: Init::Quantile,
        max_iterations: 1,
        ..Default::default()
    };
    assert_eq!(
        kmeans_quantize(&s, 3, &opts),
        Err(QuantizeError::NotConverged(1))
    );
}
