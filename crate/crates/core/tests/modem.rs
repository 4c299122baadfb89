use permfsk_core::modem::{
    add_white_noise, bandwidth_efficiency, correlate_envelopes, derive_params, envelope_statistics, modulate,
    noise_exceedance_prob, uncoded_efficiency, ModemParams, PhasePolicy,
};
use permfsk_core::permcode::{perm, Codeword};
use permfsk_core::sim::noise_exceedance_rate;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Parameters with `f0 * Ts` an integer so every tone fits whole cycles.
fn aligned_params(m: usize) -> ModemParams {
    let base = derive_params(m, 4800.0, perm::factorial(m).unwrap() as usize, 0.0).unwrap();
    derive_params(m, 4800.0, base.code_size, 3.0 * base.tone_spacing).unwrap()
}

#[test]
fn segment_energy_and_orthogonality() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for m in 2..=8 {
        let p = aligned_params(m).with_symbol_energy(2.5);
        let fs = 8.0 * (p.f0 + m as f64 / p.symbol_duration);
        let word = Codeword::identity(m);
        for policy in [PhasePolicy::Zero, PhasePolicy::RandomPerSymbol] {
            let w = modulate(&word, &p, fs, policy, &mut rng).unwrap();
            assert_eq!(w.segments(), m);
            for k in 0..m {
                let e = w.segment_energy(k);
                assert!((e / p.symbol_energy - 1.0).abs() < 1e-6, "M={m} slot {k}: {e}");
            }
            for a in 0..m {
                for b in a + 1..m {
                    let cross: f64 = w.segment(a).iter().zip(w.segment(b)).map(|(x, y)| x * y).sum::<f64>() * w.dt;
                    let norm = (w.segment_energy(a) * w.segment_energy(b)).sqrt();
                    assert!((cross / norm).abs() < 1e-3, "M={m} tones {a},{b}");
                }
            }
        }
    }
}

#[test]
fn zero_phase_segments_use_tone_plan() {
    let p = aligned_params(4);
    let fs = 16.0 * (p.f0 + 4.0 / p.symbol_duration);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let w = modulate(&Codeword::identity(4), &p, fs, PhasePolicy::Zero, &mut rng).unwrap();
    let amp = (2.0 * p.symbol_energy / p.symbol_duration).sqrt();
    for k in 0..4 {
        let f = p.f0 + k as f64 / p.symbol_duration;
        assert!((f - p.tone_frequency(k + 1)).abs() < 1e-9);
        let seg = w.segment(k);
        assert!((seg[0] - amp).abs() < 1e-9 * amp);
        let j = 5;
        let expect = amp * (2.0 * std::f64::consts::PI * f * j as f64 * w.dt).cos();
        assert!((seg[j] - expect).abs() < 1e-9 * amp);
    }
}

#[test]
fn correlator_bank_recovers_noiseless_envelopes() {
    let p = aligned_params(5).with_symbol_energy(0.7);
    let fs = 8.0 * (p.f0 + 5.0 / p.symbol_duration);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let word = Codeword::new(vec![3, 5, 1, 2, 4]).unwrap();
    let w = modulate(&word, &p, fs, PhasePolicy::RandomPerSymbol, &mut rng).unwrap();
    let env = correlate_envelopes(&w, &p);
    for (k, e) in env.iter().enumerate() {
        for (i, &v) in e.values().iter().enumerate() {
            let expect = if i + 1 == word.symbols()[k] as usize { p.symbol_energy.sqrt() } else { 0.0 };
            assert!((v - expect).abs() < 1e-6, "slot {k} tone {i}: {v}");
        }
    }
}

/// The sampled-waveform detector and the sufficient-statistic shortcut
/// should agree on the no-signal exceedance rate and the signal-tone mean.
#[test]
fn waveform_path_matches_statistic_path() {
    let p = aligned_params(4);
    let es = p.symbol_energy;
    let noise = es / 4.0; // 6 dB
    let threshold = es.sqrt() / 2.0;
    let fs = 4.0 * (p.f0 + 4.0 / p.symbol_duration);
    let word = Codeword::identity(4);
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let words = 1500;
    let (mut wave_hits, mut wave_sig, mut stat_hits, mut stat_sig) = (0u32, 0.0, 0u32, 0.0);
    for _ in 0..words {
        let mut w = modulate(&word, &p, fs, PhasePolicy::RandomPerSymbol, &mut rng).unwrap();
        add_white_noise(&mut w, noise, &mut rng);
        for (k, e) in correlate_envelopes(&w, &p).iter().enumerate() {
            for (i, &v) in e.values().iter().enumerate() {
                if i == k {
                    wave_sig += v;
                } else if v > threshold {
                    wave_hits += 1;
                }
            }
        }
        for k in 0..4 {
            let e = envelope_statistics(Some(k + 1), &p, noise, &mut rng).unwrap();
            for (i, &v) in e.values().iter().enumerate() {
                if i == k {
                    stat_sig += v;
                } else if v > threshold {
                    stat_hits += 1;
                }
            }
        }
    }
    let opportunities = (words * 4 * 3) as f64;
    let p_wave = wave_hits as f64 / opportunities;
    let p_stat = stat_hits as f64 / opportunities;
    let p_true = noise_exceedance_prob(threshold, noise);
    let se = (p_true * (1.0 - p_true) / opportunities).sqrt();
    assert!((p_wave - p_true).abs() < 4.0 * se, "waveform {p_wave} vs {p_true}");
    assert!((p_stat - p_true).abs() < 4.0 * se, "statistic {p_stat} vs {p_true}");
    let n = (words * 4) as f64;
    assert!((wave_sig / n - stat_sig / n).abs() < 0.03, "{} vs {}", wave_sig / n, stat_sig / n);
}

#[test]
fn rayleigh_tail_matches_closed_form() {
    let p = derive_params(4, 4800.0, 24, 0.0).unwrap();
    for snr in [2.0, 6.0, 10.0] {
        let n = p.symbol_energy / snr;
        let (hits, total) = noise_exceedance_rate(&p, n, p.symbol_energy.sqrt() / 2.0, 200_000, 42).unwrap();
        let rate = hits as f64 / total as f64;
        let expect = (-snr / 4.0f64).exp();
        let se = (expect * (1.0 - expect) / total as f64).sqrt();
        assert!((rate - expect).abs() < 3.0 * se, "SNR {snr}: {rate} vs {expect}");
    }
}

#[test]
fn bandwidth_decreases_with_code_size() {
    for m in 2..=6 {
        let bws: Vec<f64> = (2..=perm::factorial(m).unwrap() as usize)
            .map(|c| derive_params(m, 4800.0, c, 0.0).unwrap().bandwidth())
            .collect();
        assert!(bws.windows(2).all(|w| w[1] < w[0]));
    }
}

#[test]
fn full_code_efficiency_approaches_uncoded() {
    let mut prev = 0.0;
    let mut log2_fact = 0.0;
    for m in 2..=64usize {
        log2_fact += (m as f64).log2();
        let coded = if m <= 20 {
            bandwidth_efficiency(m, perm::factorial(m).unwrap() as usize).unwrap()
        } else {
            log2_fact / (m * m) as f64
        };
        let ratio = coded / uncoded_efficiency(m).unwrap();
        assert!((0.5..=1.0).contains(&ratio), "M={m}: {ratio}");
        assert!(ratio > prev, "M={m}");
        prev = ratio;
    }
}
