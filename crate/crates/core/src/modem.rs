//! M-ary FSK parameters, efficiency formulas and envelope detection.
//!
//! Two fidelity levels are provided. [`envelope_statistics`] draws the
//! per-tone correlator outputs directly (complex Gaussian sufficient
//! statistic) and is what the Monte Carlo paths use. [`modulate`],
//! [`add_white_noise`] and [`correlate_envelopes`] build and demodulate a
//! sampled waveform and are used to check the statistic path.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::permcode::Codeword;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModemParams {
    pub m: usize,
    /// Information rate in bits per second.
    pub bit_rate: f64,
    pub code_size: usize,
    /// Frequency of tone 1 in Hz.
    pub f0: f64,
    /// Symbol (slot) duration in seconds.
    pub symbol_duration: f64,
    /// Tone spacing `1 / Ts` in Hz.
    pub tone_spacing: f64,
    /// Received energy per symbol in joules.
    pub symbol_energy: f64,
}

/// Derives the slot duration and tone plan for a rate-`b` link carrying
/// `code_size` messages in `m` slots. Symbol energy defaults to 1 J; use
/// [`ModemParams::with_received_power`] to tie it to a link budget.
pub fn derive_params(m: usize, bit_rate: f64, code_size: usize, f0: f64) -> Result<ModemParams> {
    if m < 2 {
        return Err(Error::invalid(format!("M = {m} must be at least 2")));
    }
    if !(bit_rate > 0.0 && bit_rate.is_finite()) {
        return Err(Error::invalid(format!("bit rate {bit_rate} must be positive")));
    }
    if code_size < 2 {
        return Err(Error::invalid(format!(
            "code size {code_size} must be at least 2"
        )));
    }
    if !(f0 >= 0.0 && f0.is_finite()) {
        return Err(Error::invalid(format!("base frequency {f0} must be >= 0")));
    }
    let ts = (code_size as f64).log2() / (m as f64 * bit_rate);
    Ok(ModemParams {
        m,
        bit_rate,
        code_size,
        f0,
        symbol_duration: ts,
        tone_spacing: 1.0 / ts,
        symbol_energy: 1.0,
    })
}

impl ModemParams {
    pub fn with_symbol_energy(mut self, es: f64) -> Self {
        self.symbol_energy = es;
        self
    }

    /// Sets `Es = S_re * Ts`: the whole received power sits in the one
    /// active tone.
    pub fn with_received_power(self, s_re: f64) -> Self {
        let es = s_re * self.symbol_duration;
        self.with_symbol_energy(es)
    }

    /// Frequency of 1-based tone `i`.
    pub fn tone_frequency(&self, i: usize) -> f64 {
        self.f0 + (i as f64 - 1.0) / self.symbol_duration
    }

    /// Occupied bandwidth `M / Ts` in Hz.
    pub fn bandwidth(&self) -> f64 {
        self.m as f64 / self.symbol_duration
    }

    pub fn bandwidth_efficiency(&self) -> f64 {
        self.bit_rate / self.bandwidth()
    }
}

/// `log2|C| / M^2` bits/s/Hz.
pub fn bandwidth_efficiency(m: usize, code_size: usize) -> Result<f64> {
    if m < 2 || code_size < 2 {
        return Err(Error::invalid(format!(
            "need M >= 2 and |C| >= 2, got M = {m}, |C| = {code_size}"
        )));
    }
    Ok((code_size as f64).log2() / (m * m) as f64)
}

/// Efficiency of uncoded M-ary FSK, `log2 M / M`.
pub fn uncoded_efficiency(m: usize) -> Result<f64> {
    if m < 2 {
        return Err(Error::invalid(format!("M = {m} must be at least 2")));
    }
    Ok((m as f64).log2() / m as f64)
}

/// Large-`M` efficiency of a distance-`d` code meeting the cardinality
/// bound: `((M - d + 1) / M) * log2 M / M`.
pub fn asymptotic_efficiency(m: usize, d: usize) -> Result<f64> {
    check_distance(m, d)?;
    Ok((m - d + 1) as f64 / m as f64 * (m as f64).log2() / m as f64)
}

/// Efficiency of a hypothetical code of size exactly `M!/(d-1)!`,
/// evaluated as a sum of logs so it stays finite for any `M`.
pub fn bound_efficiency(m: usize, d: usize) -> Result<f64> {
    check_distance(m, d)?;
    let log2_bound: f64 = (d..=m).map(|k| (k as f64).log2()).sum();
    Ok(log2_bound / (m * m) as f64)
}

fn check_distance(m: usize, d: usize) -> Result<()> {
    if m < 2 || d < 2 || d > m {
        return Err(Error::invalid(format!("need 2 <= d <= M, got M = {m}, d = {d}")));
    }
    Ok(())
}

/// High-SNR AWGN symbol error approximation `0.5 exp(-Es / (2 N0))`.
pub fn awgn_symbol_error_approx(es_over_n0: f64) -> f64 {
    0.5 * (-es_over_n0 / 2.0).exp()
}

/// Threshold-detector insertion/deletion approximation `0.5 exp(-SNR / 4)`.
pub fn insertion_deletion_prob_approx(snr: f64) -> f64 {
    0.5 * (-snr / 4.0).exp()
}

/// Probability that a noise-only envelope exceeds `threshold` when each
/// quadrature component has variance `N / 2`: `exp(-T^2 / N)`.
pub fn noise_exceedance_prob(threshold: f64, noise_psd: f64) -> f64 {
    if noise_psd == 0.0 {
        return if threshold >= 0.0 { 0.0 } else { 1.0 };
    }
    (-threshold * threshold / noise_psd).exp()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhasePolicy {
    Zero,
    RandomPerSymbol,
}

/// Sampled passband waveform. Samples are spaced `dt = Ts / samples_per_symbol`.
#[derive(Clone, Debug, PartialEq)]
pub struct Waveform {
    pub samples: Vec<f64>,
    pub dt: f64,
    pub samples_per_symbol: usize,
}

impl Waveform {
    pub fn segment(&self, k: usize) -> &[f64] {
        let n = self.samples_per_symbol;
        &self.samples[k * n..(k + 1) * n]
    }

    pub fn segments(&self) -> usize {
        self.samples.len() / self.samples_per_symbol
    }

    /// `sum s^2 dt` over slot `k`.
    pub fn segment_energy(&self, k: usize) -> f64 {
        self.segment(k).iter().map(|s| s * s).sum::<f64>() * self.dt
    }
}

/// Sends the word's tones one per slot at amplitude `sqrt(2 Es / Ts)`.
///
/// The sample count per slot is `ceil(Ts * sample_rate)`, so the actual
/// spacing may be slightly finer than requested.
pub fn modulate<R: Rng + ?Sized>(
    word: &Codeword,
    params: &ModemParams,
    sample_rate: f64,
    phase: PhasePolicy,
    rng: &mut R,
) -> Result<Waveform> {
    if word.len() != params.m {
        return Err(Error::invalid(format!(
            "word length {} does not match M = {}",
            word.len(),
            params.m
        )));
    }
    let ts = params.symbol_duration;
    let f_top = params.f0 + params.m as f64 / ts;
    if !(sample_rate >= 4.0 * f_top) {
        return Err(Error::invalid(format!(
            "sample rate {sample_rate} Hz below 4 x {f_top} Hz"
        )));
    }
    let n = (ts * sample_rate).ceil() as usize;
    let dt = ts / n as f64;
    let amp = (2.0 * params.symbol_energy / ts).sqrt();
    let mut samples = Vec::with_capacity(n * word.len());
    for &tone in word.symbols() {
        let f = params.tone_frequency(tone as usize);
        let theta = match phase {
            PhasePolicy::Zero => 0.0,
            PhasePolicy::RandomPerSymbol => rng.random::<f64>() * 2.0 * PI,
        };
        samples.extend((0..n).map(|j| amp * (2.0 * PI * f * j as f64 * dt + theta).cos()));
    }
    Ok(Waveform {
        samples,
        dt,
        samples_per_symbol: n,
    })
}

/// Adds white Gaussian noise of single-sided density `noise_psd` W/Hz.
pub fn add_white_noise<R: Rng + ?Sized>(wave: &mut Waveform, noise_psd: f64, rng: &mut R) {
    if noise_psd <= 0.0 {
        return;
    }
    let sigma = (noise_psd / (2.0 * wave.dt)).sqrt();
    for s in &mut wave.samples {
        let z: f64 = StandardNormal.sample(rng);
        *s += sigma * z;
    }
}

/// Complex correlator output `∫ r(t) sqrt(2/Ts) e^{-j 2 pi f t} dt` over one slot.
pub fn correlate(segment: &[f64], freq: f64, dt: f64) -> (f64, f64) {
    let ts = segment.len() as f64 * dt;
    let scale = (2.0 / ts).sqrt() * dt;
    let (mut i, mut q) = (0.0, 0.0);
    for (j, &r) in segment.iter().enumerate() {
        let ph = 2.0 * PI * freq * j as f64 * dt;
        i += r * ph.cos();
        q -= r * ph.sin();
    }
    (i * scale, q * scale)
}

/// Runs the 2M-correlator envelope detector over every slot of `wave`.
pub fn correlate_envelopes(wave: &Waveform, params: &ModemParams) -> Vec<EnvelopeVector> {
    (0..wave.segments())
        .map(|k| {
            let seg = wave.segment(k);
            EnvelopeVector(
                (1..=params.m)
                    .map(|i| {
                        let (re, im) = correlate(seg, params.tone_frequency(i), wave.dt);
                        re.hypot(im)
                    })
                    .collect(),
            )
        })
        .collect()
}

/// Per-tone envelope magnitudes for one slot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeVector(pub Vec<f64>);

impl EnvelopeVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

/// Draws the noncoherent envelope of every tone for one slot.
///
/// The correlator output of tone `i` is `s_i + n_i` with
/// `s_i = sqrt(Es) e^{j theta}` on the transmitted tone (uniform phase) and
/// zero elsewhere; `n_i` is complex Gaussian with variance `N / 2` per
/// component, independent across tones.
pub fn envelope_statistics<R: Rng + ?Sized>(
    tx_tone: Option<usize>,
    params: &ModemParams,
    noise_psd: f64,
    rng: &mut R,
) -> Result<EnvelopeVector> {
    let mut out = vec![0.0; params.m];
    fill_envelopes(&mut out, tx_tone, params.symbol_energy, noise_psd, rng)?;
    Ok(EnvelopeVector(out))
}

pub(crate) fn fill_envelopes<R: Rng + ?Sized>(
    out: &mut [f64],
    tx_tone: Option<usize>,
    es: f64,
    noise_psd: f64,
    rng: &mut R,
) -> Result<()> {
    if !(noise_psd >= 0.0) {
        return Err(Error::invalid(format!("noise density {noise_psd} must be >= 0")));
    }
    if let Some(t) = tx_tone {
        if t == 0 || t > out.len() {
            return Err(Error::invalid(format!("tone {t} outside 1..={}", out.len())));
        }
    }
    let amp = es.sqrt();
    if noise_psd == 0.0 {
        out.fill(0.0);
        if let Some(t) = tx_tone {
            out[t - 1] = amp;
        }
        return Ok(());
    }
    let sigma = (noise_psd / 2.0).sqrt();
    for (i, e) in out.iter_mut().enumerate() {
        let nx: f64 = StandardNormal.sample(rng);
        let ny: f64 = StandardNormal.sample(rng);
        let (mut re, mut im) = (sigma * nx, sigma * ny);
        if tx_tone == Some(i + 1) {
            // noise is circularly symmetric, so a uniform carrier phase
            // leaves the envelope law unchanged; keep it explicit anyway
            let theta = rng.random::<f64>() * 2.0 * PI;
            re += amp * theta.cos();
            im += amp * theta.sin();
        }
        *e = re.hypot(im);
    }
    Ok(())
}
