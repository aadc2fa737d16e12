mod common;

use common::*;
use endsel::features::*;
use endsel::ranking::*;
use endsel::signal::*;
use endsel::synth::*;
use proptest::prelude::*;

fn small_dataset(seed: u64) -> Dataset {
    let spec = SynthSpec {
        n_per_class: 3,
        n_samples: 1024,
        n_channels: 6,
        planted_channels: vec![1, 4],
        effect_size: 2.0,
    };
    segment_dataset(&synthesize_dataset(&spec, seed).unwrap(), 512).unwrap()
}

#[test]
fn feature_vector_lengths() {
    let ds = small_dataset(1);
    let segs: Vec<&Segment> = ds.segments.iter().collect();
    let cfg = ExtractorConfig::default();
    for (extractor, per_channel) in [(Extractor::Emd, 12), (Extractor::Dwt, 16), (Extractor::Slbp, 31)] {
        for n in 1..=3 {
            let channels: Vec<usize> = (0..n).collect();
            let m = extract_features(&segs, ds.channel_names(), &channels, extractor, &cfg).unwrap();
            assert_eq!(m.n_features(), per_channel * n);
            assert_eq!(m.n_rows(), segs.len());
            assert_eq!(m.names.len(), per_channel * n);
        }
    }
}

#[test]
fn feature_names_are_unique_and_ordered() {
    let ds = small_dataset(2);
    let segs: Vec<&Segment> = ds.segments.iter().collect();
    let m = extract_features(
        &segs,
        ds.channel_names(),
        &[2, 0],
        Extractor::Dwt,
        &ExtractorConfig::default(),
    )
    .unwrap();
    assert_eq!(m.names[0], "Pz/dwt/cA3/entropy");
    assert_eq!(m.names[16], "Fz/dwt/cA3/entropy");
    let unique: std::collections::HashSet<_> = m.names.iter().collect();
    assert_eq!(unique.len(), m.names.len());
}

#[test]
fn chi_square_hand_case() {
    assert_eq!(chi_square_statistic(&[vec![30, 10], vec![10, 30]]), 20.0);
    assert_eq!(chi_square_statistic(&[vec![10, 20], vec![5, 10], vec![1, 2]]), 0.0);
}

#[test]
fn independent_feature_scores_zero() {
    // each bin holds the two classes in equal numbers
    let values: Vec<f64> = (0..40).map(|i| (i / 2) as f64).collect();
    let labels: Vec<ClassLabel> = (0..40)
        .map(|i| if i % 2 == 0 { ClassLabel::Adhd } else { ClassLabel::Hc })
        .collect();
    let x: Vec<Vec<f64>> = values.iter().map(|&v| vec![v]).collect();
    let mask = chi_square_select(&matrix(&x, &labels), 10, 1.0).unwrap();
    assert_eq!(mask.statistics[0], 0.0);
}

#[test]
fn ranking_of_constant_channel_is_zero_entropy() {
    let ds = small_dataset(3);
    let mut flat = ds.clone();
    for s in &mut flat.segments {
        s.data.row_mut(0).fill(1.5);
    }
    let r = rank_by_entropy(&flat, 256).unwrap();
    let fz = r.scores.iter().find(|s| s.channel_index == 0).unwrap();
    assert_eq!(fz.score, 0.0);
    assert_eq!(r.scores.last().unwrap().channel_index, 0);
}

#[test]
fn end_is_symmetric_under_label_swap() {
    for seed in 0..10 {
        let ds = small_dataset(seed);
        let mut swapped = ds.clone();
        for s in &mut swapped.segments {
            s.label = s.label.other();
        }
        assert_eq!(rank_by_end(&ds, 256).unwrap(), rank_by_end(&swapped, 256).unwrap());
    }
}

#[test]
fn standardized_training_columns_are_centred() {
    let ds = small_dataset(4);
    let segs: Vec<&Segment> = ds.segments.iter().collect();
    let m = extract_features(
        &segs,
        ds.channel_names(),
        &[0, 1],
        Extractor::Slbp,
        &ExtractorConfig::default(),
    )
    .unwrap();
    let s = fit_standardizer(&m).unwrap();
    let z = apply_standardizer(&s, &m).unwrap();
    for (j, col) in z.values.columns().into_iter().enumerate() {
        let n = col.len() as f64;
        let mean = col.sum() / n;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        assert!(mean.abs() < 1e-9);
        if s.degenerate[j] {
            assert!(var < 1e-18);
        } else {
            assert!((var - 1.0).abs() < 1e-9);
        }
    }
}

#[test]
fn mask_rejects_foreign_feature_names() {
    let x = vec![vec![0.0, 1.0], vec![1.0, 0.0], vec![0.5, 0.2], vec![0.7, 0.9]];
    let y = vec![ClassLabel::Adhd, ClassLabel::Hc, ClassLabel::Adhd, ClassLabel::Hc];
    let m = matrix(&x, &y);
    let mask = chi_square_select(&m, 2, 0.5).unwrap();
    let mut other = m.clone();
    other.names[0] = "renamed".into();
    assert!(matches!(apply_mask(&mask, &other), Err(endsel::Error::NameMismatch)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn chi_square_is_invariant_to_monotone_maps(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = 60;
        let v = gaussian(&mut r, n);
        let labels: Vec<ClassLabel> = v.iter().zip(gaussian(&mut r, n))
            .map(|(a, e)| if a + e > 0.0 { ClassLabel::Adhd } else { ClassLabel::Hc })
            .collect();
        let x: Vec<Vec<f64>> = v.iter().map(|&a| vec![a, a.exp(), a.powi(3) - 4.0]).collect();
        let mask = chi_square_select(&matrix(&x, &labels), 10, 1.0).unwrap();
        prop_assert_eq!(mask.statistics[0], mask.statistics[1]);
        prop_assert_eq!(mask.statistics[0], mask.statistics[2]);
    }

    #[test]
    fn kept_indices_are_the_top_statistics(seed in any::<u64>(), d in 1usize..30, frac in 0.05f64..1.0) {
        let mut r = rng(seed);
        let x: Vec<Vec<f64>> = (0..40).map(|_| gaussian(&mut r, d)).collect();
        let y: Vec<ClassLabel> = (0..40).map(|i| if i % 2 == 0 { ClassLabel::Adhd } else { ClassLabel::Hc }).collect();
        let mask = chi_square_select(&matrix(&x, &y), 5, frac).unwrap();
        prop_assert_eq!(mask.kept_indices.len(), keep_count(d, frac));
        prop_assert!(mask.kept_indices.windows(2).all(|w| w[0] < w[1]));
        let worst_kept = mask.kept_indices.iter().map(|&j| mask.statistics[j]).fold(f64::INFINITY, f64::min);
        for j in 0..d {
            if !mask.kept_indices.contains(&j) {
                prop_assert!(mask.statistics[j] <= worst_kept);
            }
        }
    }

    #[test]
    fn equal_frequency_bins_are_balanced(v in prop::collection::vec(-1e6f64..1e6, 20..200)) {
        let bins = equal_frequency_bins(&v, 10);
        let mut counts = [0usize; 10];
        for b in &bins {
            counts[*b] += 1;
        }
        // distinct values almost surely: every bin within one of n/10
        let target = v.len() / 10;
        prop_assert!(counts.iter().all(|&c| c + 1 >= target && c <= target + 2));
    }
}
