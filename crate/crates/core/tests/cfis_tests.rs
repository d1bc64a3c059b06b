use fuzzquant_core::cfis::{
    iris_band, limbic_boundary, radial_profiles, segment, segment_with_artifacts, vote_iris_rows,
    CfisConfig, CfisError, Stage,
};
use fuzzquant_core::par::Parallelism;
use fuzzquant_core::quantizer::{kmeans_quantize, QuantizeOptions, Signal};
use fuzzquant_core::raster::GrayImage;
use fuzzquant_core::synth::{generate_eye, Intensities, SynthEyeSpec};
use proptest::prelude::*;

fn eye(noise_sigma: f64, seed: u64) -> SynthEyeSpec {
    SynthEyeSpec {
        width: 320,
        height: 240,
        center: [160.0, 120.0],
        r_p: 30.0,
        r_i: 75.0,
        intensities: Intensities {
            pupil: 30,
            iris: 110,
            sclera: 220,
        },
        noise_sigma,
        highlight: None,
        blur_width: 0.0,
        rng_seed: seed,
    }
}

fn band_of(profile: &[f64]) -> Vec<bool> {
    let q = kmeans_quantize(
        &Signal::new(profile.to_vec()).unwrap(),
        3,
        &QuantizeOptions::default(),
    )
    .unwrap();
    iris_band(profile, &q).unwrap().crisp
}

#[test]
fn limbic_row_near_iris_radius() {
    for (sigma, seed) in [(0.0, 1), (3.0, 2), (6.0, 3)] {
        let img = generate_eye(&eye(sigma, seed)).unwrap();
        let r = segment(&img, &CfisConfig::default()).unwrap();
        assert!(
            r.limbic_row.abs_diff(75) <= 3,
            "sigma={sigma} row={}",
            r.limbic_row
        );
        assert!(r.limbic_row as f64 > r.pupil.radius);
        assert!(r.limbic_row <= r.unwrap_radius);
        assert_eq!(r.iris_segment.last_ring, r.limbic_row);
        assert_eq!(
            r.iris_segment.rows(),
            r.iris_segment.pixels.len() / r.iris_segment.width
        );
        assert_eq!(r.search_cells, 3 * r.unwrap_radius);
    }
}

#[test]
fn profile_a_is_a_staircase() {
    let img = generate_eye(&eye(2.0, 9)).unwrap();
    let (r, _) = segment_with_artifacts(&img, &CfisConfig::default()).unwrap();
    let a = &r.profiles.a;
    // plateaus away from the transitions
    let plateau = |lo: usize, hi: usize| a[lo - 1..hi].iter().sum::<f64>() / (hi + 1 - lo) as f64;
    assert!((plateau(1, 25) - 30.0).abs() <= 2.0);
    assert!((plateau(36, 70) - 110.0).abs() <= 2.0);
    assert!((plateau(81, r.unwrap_radius) - 220.0).abs() <= 2.0);
}

#[test]
fn c_is_the_mean_of_a_and_b() {
    let img = generate_eye(&eye(4.0, 5)).unwrap();
    let (r, art) = segment_with_artifacts(&img, &CfisConfig::default()).unwrap();
    let again = radial_profiles(&art.ui, &art.rui).unwrap();
    assert_eq!(again, r.profiles);
    for i in 0..r.profiles.len() {
        let valid = art.ui.valid_row(i);
        let a = valid.iter().map(|&v| f64::from(v)).sum::<f64>() / valid.len() as f64;
        assert!((r.profiles.a[i] - a).abs() <= 1e-9);
        assert_eq!(r.profiles.c[i], (r.profiles.a[i] + r.profiles.b[i]) / 2.0);
    }
}

#[test]
fn segmentation_is_deterministic_across_modes() {
    let img = generate_eye(&eye(5.0, 11)).unwrap();
    let par = CfisConfig::default();
    let seq = CfisConfig {
        parallelism: Parallelism::Sequential,
        ..par
    };
    let a = segment(&img, &par).unwrap();
    let b = segment(&img, &par).unwrap();
    let c = segment(&img, &seq).unwrap();
    for other in [&b, &c] {
        assert_eq!(a.limbic_row, other.limbic_row);
        assert_eq!(a.voted, other.voted);
        assert_eq!(a.bands, other.bands);
        assert_eq!(a.profiles, other.profiles);
        assert_eq!(a.pupil, other.pupil);
        assert_eq!(a.iris_segment, other.iris_segment);
    }
}

#[test]
fn max_radius_bounds_the_unwrap() {
    let img = generate_eye(&eye(0.0, 1)).unwrap();
    let cfg = CfisConfig {
        max_radius: Some(112),
        ..CfisConfig::default()
    };
    let r = segment(&img, &cfg).unwrap();
    assert_eq!(r.unwrap_radius, 112);
    assert_eq!(r.search_cells, 336);
}

#[test]
fn gray_image_fails_at_pupil_stage() {
    let err = segment(&GrayImage::filled(320, 240, 128), &CfisConfig::default()).unwrap_err();
    assert_eq!(err.stage, Stage::Pupil);
}

#[test]
fn staircase_c_consistency() {
    for (lo, mid, hi) in [(5, 20, 8), (12, 30, 12), (3, 7, 40)] {
        let mut a = vec![30.0; lo];
        a.extend(vec![110.0; mid]);
        a.extend(vec![220.0; hi]);
        let b: Vec<f64> = a.iter().map(|v| v * 0.9 + 10.0).collect();
        let c: Vec<f64> = a.iter().zip(&b).map(|(x, y)| (x + y) / 2.0).collect();
        let (ba, bb, bc) = (band_of(&a), band_of(&b), band_of(&c));
        for i in 0..a.len() {
            if ba[i] && bb[i] {
                assert!(bc[i], "row {i}");
            }
        }
        let expected: Vec<bool> = (0..a.len()).map(|i| i >= lo && i < lo + mid).collect();
        assert_eq!(bc, expected);
    }
}

#[test]
fn mismatched_inputs_rejected() {
    assert!(matches!(
        vote_iris_rows([&[true, false], &[true], &[false, false]]),
        Err(CfisError::LengthMismatch { .. })
    ));
    assert_eq!(limbic_boundary(&[false; 4]), Err(CfisError::NoIrisBand));
}

fn bools(n: usize) -> impl Strategy<Value = Vec<bool>> {
    prop::collection::vec(any::<bool>(), n)
}

proptest! {
    #[test]
    fn voting_is_symmetric_and_monotone((p, q, r, flip) in (1usize..60).prop_flat_map(|n| (bools(n), bools(n), bools(n), 0..n))) {
        let voted = vote_iris_rows([&p, &q, &r]).unwrap();
        for perm in [[&q, &p, &r], [&r, &q, &p], [&p, &r, &q], [&q, &r, &p], [&r, &p, &q]] {
            prop_assert_eq!(&vote_iris_rows([perm[0], perm[1], perm[2]]).unwrap(), &voted);
        }
        let mut p2 = p.clone();
        p2[flip] = true;
        let voted2 = vote_iris_rows([&p2, &q, &r]).unwrap();
        for i in 0..voted.len() {
            prop_assert!(!voted[i] || voted2[i]);
        }
    }

    #[test]
    fn limbic_row_ends_a_longest_run(voted in prop::collection::vec(any::<bool>(), 1..80)) {
        match limbic_boundary(&voted) {
            Ok(row) => {
                prop_assert!(voted[row - 1]);
                prop_assert!(row == voted.len() || !voted[row]);
                let len = voted[..row].iter().rev().take_while(|&&v| v).count();
                // no run is longer, and no equally long run starts later
                let mut cur = 0;
                for (i, &v) in voted.iter().enumerate() {
                    cur = if v { cur + 1 } else { 0 };
                    prop_assert!(cur <= len);
                    if cur == len && i + 1 > row {
                        prop_assert!(false, "later run of equal length ends at {}", i + 1);
                    }
                }
            }
            Err(e) => {
                prop_assert_eq!(e, CfisError::NoIrisBand);
                prop_assert!(voted.iter().all(|v| !v));
            }
        }
    }

    #[test]
    fn monotone_profile_gives_contiguous_band(steps in prop::collection::vec(0.0f64..20.0, 3..120)) {
        let profile: Vec<f64> = steps.iter().scan(0.0, |acc, s| { *acc += s; Some(*acc) }).collect();
        let q = match kmeans_quantize(&Signal::new(profile.clone()).unwrap(), 3, &QuantizeOptions::default()) {
            Ok(q) => q,
            Err(_) => return Ok(()),
        };
        let band = iris_band(&profile, &q).unwrap();
        let raw: Vec<bool> = q.labels.iter().map(|&l| l == 2).collect();
        prop_assert_eq!(&band.crisp, &raw);
    }
}
