use fuzzquant_core::indicators::{
    boundary_indicator, encode_symbols, fuzzy_indicator, verify_triplet, CombinedIndicators,
};
use fuzzquant_core::quantizer::{kmeans_quantize, Quantization, QuantizeOptions, Signal};
use proptest::prelude::*;

fn quantized(values: &[f64], k: usize) -> Option<(Signal, Quantization)> {
    let s = Signal::new(values.to_vec()).ok()?;
    let q = kmeans_quantize(&s, k, &QuantizeOptions::default()).ok()?;
    Some((s, q))
}

proptest! {
    #[test]
    fn triplet_always_verifies(values in prop::collection::vec(0.0f64..255.0, 3..300), k in 2usize..6) {
        let Some((s, q)) = quantized(&values, k) else { return Ok(()); };
        let ind = CombinedIndicators::from_quantization(&s, &q).unwrap();
        let report = verify_triplet(&ind, Some(s.values()));
        prop_assert!(report.ok, "{:?}", report.violations);
    }

    #[test]
    fn round_back_reproduces_crisp(values in prop::collection::vec(-50.0f64..50.0, 3..200), k in 2usize..5) {
        let Some((s, q)) = quantized(&values, k) else { return Ok(()); };
        let ind = CombinedIndicators::from_quantization(&s, &q).unwrap();
        for i in 0..ind.len() {
            let cfi = ind.cfi[i];
            let floor = cfi.floor();
            // nearest integer, halves resolved toward the stored crisp label
            let rounded = if cfi - floor == 0.5 {
                if (floor as usize) == ind.cci[i] { floor } else { floor + 1.0 }
            } else {
                cfi.round()
            };
            prop_assert_eq!(rounded as usize, ind.cci[i]);
        }
    }

    #[test]
    fn symbol_reencoding_is_invariant(values in prop::collection::vec(0.0f64..100.0, 3..100), offset in 1i64..1000) {
        let Some((s, q)) = quantized(&values, 3) else { return Ok(()); };
        let symbols: Vec<i64> = (0..3).map(|j| offset * 7 - j * offset).collect();
        let encoded = encode_symbols(&q, &symbols).unwrap();
        // same partition: equal symbols exactly where labels are equal
        for i in 0..values.len() {
            for j in 0..values.len() {
                prop_assert_eq!(encoded[i] == encoded[j], q.labels[i] == q.labels[j]);
            }
        }
        // residuals and fib depend only on the partition and the values
        let ind = CombinedIndicators::from_quantization(&s, &q).unwrap();
        let mut relabeled = q.clone();
        relabeled.labels = encoded
            .iter()
            .map(|e| symbols.iter().position(|s| s == e).unwrap() + 1)
            .collect();
        let cfi = fuzzy_indicator(&s, &relabeled).unwrap();
        let fib = boundary_indicator(&relabeled.labels, &cfi).unwrap();
        prop_assert_eq!(fib, ind.fib);
    }

    #[test]
    fn fib_matches_independent_pass(cci in prop::collection::vec(1usize..6, 1..100), seed in prop::collection::vec(-0.5f64..=0.5, 100)) {
        let cfi: Vec<f64> = cci.iter().zip(&seed).map(|(&c, &d)| c as f64 + d).collect();
        let fib = boundary_indicator(&cci, &cfi).unwrap();
        let mut independent = Vec::new();
        for i in 0..cci.len() {
            let diff = cfi[i] - cci[i] as f64;
            independent.push(if diff < 0.0 { -diff } else { diff } * 2.0);
        }
        prop_assert_eq!(fib, independent);
    }
}

#[test]
fn boundary_peaks_along_a_sweep() {
    // base signal whose centroids are 10, 50, 90 exactly
    let base = vec![9.0, 10.0, 11.0, 49.0, 50.0, 51.0, 89.0, 90.0, 91.0];
    let s = Signal::new(base.clone()).unwrap();
    let q = kmeans_quantize(&s, 3, &QuantizeOptions::default()).unwrap();
    assert_eq!(q.centroids, vec![10.0, 50.0, 90.0]);

    let sweep: Vec<f64> = (0..=1000).map(|i| i as f64 / 10.0).collect();
    let labels: Vec<usize> = sweep
        .iter()
        .map(|&v| {
            if v <= 30.0 {
                1
            } else if v <= 70.0 {
                2
            } else {
                3
            }
        })
        .collect();
    let sq = Quantization {
        labels,
        ..q.clone()
    };
    let ss = Signal::new(sweep.clone()).unwrap();
    let cfi = fuzzy_indicator(&ss, &sq).unwrap();
    let fib = boundary_indicator(&sq.labels, &cfi).unwrap();
    for (i, &v) in sweep.iter().enumerate() {
        if v == 30.0 || v == 70.0 {
            assert_eq!(fib[i], 1.0, "v={v}");
        } else {
            assert!(fib[i] < 1.0, "v={v}");
        }
        if v == 10.0 || v == 50.0 || v == 90.0 || v <= 10.0 || v >= 90.0 {
            assert_eq!(fib[i], 0.0, "v={v}");
        }
    }
    assert!(cfi.windows(2).all(|w| w[0] <= w[1]));
    let ind = CombinedIndicators {
        n: 3,
        cci: sq.labels.clone(),
        cfi,
        fib,
    };
    assert!(verify_triplet(&ind, Some(&sweep)).ok);
}

#[test]
fn three_means_indicators_live_in_one_to_three() {
    let values: Vec<f64> = (0..90)
        .map(|i| [30.0, 110.0, 220.0][i / 30] + (i % 7) as f64)
        .collect();
    let (s, q) = quantized(&values, 3).unwrap();
    let ind = CombinedIndicators::from_quantization(&s, &q).unwrap();
    assert!(ind.cci.iter().all(|c| (1..=3).contains(c)));
    assert!(ind.cfi.iter().all(|c| (1.0..=3.0).contains(c)));
}
