use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use xmimo::channel::complex_gaussian;
use xmimo::complexity::dldf_cost;
use xmimo::graphsic::{build_graph, select_subarrays};
use xmimo::harness::{run_sweep, Detector, SweepParam, SweepSpec};
use xmimo::lindet::{detect_dldf_with, dldf_weights, zf_post_snr, zf_receiver, ZfMode};
use xmimo::{ChannelMatrix, CMatrix, MulCount, SubarrayLayout, SubarrayPartition, SystemConfig, C64};

fn gaussian_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

#[test]
fn power_concentrates_on_a_visibility_region() {
    let config = SystemConfig { antennas: 512, users: 16, subarrays: 16, ..Default::default() };
    let top = config.antennas / 5;
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let draws = 500;
    let mut good = 0;
    for _ in 0..draws {
        let (_, ch) = ChannelMatrix::generate(&config, &mut rng).unwrap();
        let all_users = (0..config.users).all(|k| {
            let mut p: Vec<f64> = ch.h.column(k).iter().map(|z| z.norm_sqr()).collect();
            let total: f64 = p.iter().sum();
            p.sort_by(|a, b| b.total_cmp(a));
            p[..top].iter().sum::<f64>() > 0.5 * total
        });
        good += all_users as usize;
    }
    assert!(good as f64 >= 0.95 * draws as f64, "{good} of {draws} draws concentrated");
}

#[test]
fn post_snr_predicts_empirical_mse() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let h = gaussian_matrix(12, 4, &mut rng);
    let sigma2 = 0.2;
    let k = 2;
    let rx = zf_receiver(&h, k, &mut ()).unwrap();
    let snr = zf_post_snr(&h, k, 1.0 / sigma2, &mut ()).unwrap();
    let n = 100_000;
    let mut mse = 0.0;
    for _ in 0..n {
        let x: Vec<C64> = (0..4).map(|_| complex_gaussian(&mut rng)).collect();
        let y: Vec<C64> = h
            .mul_vec(&x, &mut ())
            .into_iter()
            .map(|v| v + complex_gaussian(&mut rng) * sigma2.sqrt())
            .collect();
        mse += (rx.apply(&y, &mut ()) - x[k]).norm_sqr();
    }
    mse /= n as f64;
    assert!((mse * snr - 1.0).abs() < 0.03, "mse {mse} vs 1/snr {}", 1.0 / snr);
}

#[test]
fn per_user_dldf_count_tracks_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for (b, k) in [(2, 2), (4, 4), (2, 8), (8, 4), (4, 8)] {
        for mb in [k, 2 * k] {
            let m = b * mb;
            let h = gaussian_matrix(m, k, &mut rng);
            let y: Vec<C64> = (0..m).map(|_| complex_gaussian(&mut rng)).collect();
            let p = SubarrayPartition::new(m, b, SubarrayLayout::Contiguous).unwrap();
            let mut ops = MulCount::default();
            detect_dldf_with(&h, &y, &p, 100.0, ZfMode::PerUser, &mut ops).unwrap();
            let f = dldf_cost(b as u64, k as u64, mb as u64) as f64;
            let ratio = ops.get() as f64 / f;
            assert!((0.25..=4.0).contains(&ratio), "B={b} K={k} Mb={mb}: measured {} formula {f}", ops.get());
        }
    }
}

#[test]
fn ber_falls_with_snr() {
    let base = SystemConfig { antennas: 128, users: 8, subarrays: 4, seed: 11, ..Default::default() };
    let values: Vec<f64> = (0..=6).map(|i| 5.0 * i as f64).collect();
    let spec = SweepSpec {
        param: SweepParam::SnrDb,
        values: values.clone(),
        trials: 125,
        symbols_per_trial: 10,
        detectors: vec![Detector::CentralizedZf, Detector::Dldf, Detector::GraphSic],
        ..Default::default()
    };
    let report = run_sweep(&spec, &base).unwrap();
    for det in &spec.detectors {
        for w in values.windows(2) {
            let lo = report.row(*det, w[0]).unwrap();
            let hi = report.row(*det, w[1]).unwrap();
            assert!(lo.bits / 3 >= 10_000);
            let slack = 2.0 * (lo.ber_std_error().powi(2) + hi.ber_std_error().powi(2)).sqrt();
            assert!(hi.ber() <= lo.ber() + slack, "{det}: {} dB {} -> {} dB {}", w[0], lo.ber(), w[1], hi.ber());
        }
    }
}

#[test]
fn centralized_zf_matches_dldf_with_one_subarray_in_sweeps() {
    let base = SystemConfig { antennas: 64, users: 6, subarrays: 1, noise_variance: 0.3, seed: 4, ..Default::default() };
    let spec = SweepSpec {
        param: SweepParam::Subarrays,
        values: vec![1.0],
        trials: 40,
        symbols_per_trial: 5,
        detectors: vec![Detector::CentralizedZf, Detector::Dldf],
        ..Default::default()
    };
    let r = run_sweep(&spec, &base).unwrap();
    assert!(r.rows[0].bit_errors > 0);
    assert_eq!((r.rows[0].bits, r.rows[0].bit_errors), (r.rows[1].bits, r.rows[1].bit_errors));
}

fn fused_mse(weights: &[f64], snr: &[f64]) -> f64 {
    weights.iter().zip(snr).map(|(a, s)| a * a / s).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn snr_weights_beat_random_simplex_points(snr in prop::collection::vec(0.01f64..1e3, 2..16), seed in any::<u64>()) {
        let alpha = dldf_weights(&snr).unwrap();
        prop_assert!((alpha.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let best = fused_mse(&alpha, &snr);
        prop_assert!((best * snr.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..50 {
            let raw: Vec<f64> = (0..snr.len()).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
            let s: f64 = raw.iter().sum();
            let w: Vec<f64> = raw.iter().map(|v| v / s).collect();
            prop_assert!(best <= fused_mse(&w, &snr) * (1.0 + 1e-12));
        }
    }

    #[test]
    fn raising_p0_only_adds_edges(seed in any::<u64>(), p_lo in 0.05f64..1.0, dp in 0.0f64..0.5) {
        let p_hi = (p_lo + dp).min(1.0);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = gaussian_matrix(32, 5, &mut rng);
        let part = SubarrayPartition::new(32, 8, SubarrayLayout::Interleaved).unwrap();
        let g_lo = build_graph(&h, &part, p_lo, &mut ()).unwrap();
        let g_hi = build_graph(&h, &part, p_hi, &mut ()).unwrap();
        for b in 0..8 {
            for k in 0..5 {
                prop_assert!(!g_lo.has_edge(b, k) || g_hi.has_edge(b, k));
            }
        }
    }

    #[test]
    fn selection_is_a_greedy_prefix(powers in prop::collection::vec(0.0f64..10.0, 1..20), p0 in 0.01f64..=1.0) {
        let total: f64 = powers.iter().sum();
        prop_assume!(total > 0.0);
        let chosen = select_subarrays(&powers, total, p0);
        let mut acc = 0.0;
        for (i, &b) in chosen.iter().enumerate() {
            prop_assert!(acc <= p0 * total);
            if i > 0 {
                prop_assert!(powers[b] <= powers[chosen[i - 1]]);
            }
            acc += powers[b];
        }
        let rest_positive = (0..powers.len()).any(|b| !chosen.contains(&b) && powers[b] > 0.0);
        prop_assert!(!rest_positive || acc > p0 * total);
    }
}
