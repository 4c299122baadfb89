//! Power-line channel: cable attenuation, worst-case noise density, link
//! budget, and scenario-driven error injection at symbol and envelope level.

use std::collections::BTreeSet;
use std::ops::Range;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::codec::{DemodFrame, ToneSet};
use crate::error::{Error, Result};
use crate::modem::{fill_envelopes, EnvelopeVector, ModemParams};
use crate::permcode::Codeword;

/// Received power `S_in * 10^(-0.01 L)` for a cable run of `distance_m` metres.
pub fn received_power(s_in: f64, distance_m: f64) -> Result<f64> {
    if !(s_in > 0.0) || !(distance_m >= 0.0) {
        return Err(Error::invalid(format!(
            "need S_in > 0 and L >= 0, got {s_in} W, {distance_m} m"
        )));
    }
    Ok(s_in * 10f64.powf(-0.01 * distance_m))
}

/// Worst-case single-sided noise density `10^(-8 - 4e-5 f)` W/Hz, `f` in Hz.
pub fn worst_case_noise_psd(f_hz: f64) -> Result<f64> {
    if !(f_hz >= 0.0) {
        return Err(Error::invalid(format!("frequency {f_hz} Hz must be >= 0")));
    }
    Ok(10f64.powf(-8.0 - 4e-5 * f_hz))
}

/// Fixed link constants for the SNR lower bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    /// Transmitter output power in watts.
    pub s_in: f64,
    pub distance_m: f64,
    /// Top of the usable band in kHz.
    pub band_edge_khz: f64,
    /// Number of equal-power sub-bands the signalling band is split into.
    pub subbands: usize,
}

impl Default for LinkBudget {
    fn default() -> Self {
        LinkBudget {
            s_in: 25.0,
            distance_m: 500.0,
            band_edge_khz: 95.0,
            subbands: 4,
        }
    }
}

impl LinkBudget {
    /// Lower bound on the per-sub-channel SNR when the `bandwidth_khz` wide
    /// band sits at the top of the range: received power over the
    /// sub-band noise power at the band's lower edge.
    pub fn snr_lower_bound(&self, bandwidth_khz: f64) -> Result<f64> {
        if !(bandwidth_khz > 0.0 && bandwidth_khz < self.band_edge_khz) {
            return Err(Error::invalid(format!(
                "bandwidth {bandwidth_khz} kHz outside (0, {})",
                self.band_edge_khz
            )));
        }
        let s_re = received_power(self.s_in, self.distance_m)?;
        let noise = worst_case_noise_psd((self.band_edge_khz - bandwidth_khz) * 1e3)?;
        let subband_hz = bandwidth_khz / self.subbands as f64 * 1e3;
        Ok(s_re / (subband_hz * noise))
    }
}

/// [`LinkBudget::snr_lower_bound`] with the default constants
/// (25 W, 500 m, 95 kHz, 4 sub-bands).
pub fn snr_lower_bound(bandwidth_khz: f64) -> Result<f64> {
    LinkBudget::default().snr_lower_bound(bandwidth_khz)
}

pub fn to_db(ratio: f64) -> f64 {
    10.0 * ratio.log10()
}

pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkBudgetRow {
    pub d_min: usize,
    pub code_size: usize,
    pub bandwidth_khz: f64,
    pub snr_db: f64,
}

/// One row per `(d_min, |C|)`: `B = b M^2 / log2|C|` and its SNR bound.
pub fn link_budget_table(
    bit_rate: f64,
    m: usize,
    code_sizes: &[(usize, usize)],
    budget: &LinkBudget,
) -> Result<Vec<LinkBudgetRow>> {
    code_sizes
        .iter()
        .map(|&(d_min, code_size)| {
            let params = crate::modem::derive_params(m, bit_rate, code_size, 0.0)?;
            let bandwidth_khz = params.bandwidth() / 1e3;
            let snr = budget.snr_lower_bound(bandwidth_khz)?;
            Ok(LinkBudgetRow {
                d_min,
                code_size,
                bandwidth_khz,
                snr_db: to_db(snr),
            })
        })
        .collect()
}

/// Number of consecutive slots one impulse can touch: `ceil(duration / Ts) + 1`
/// (an impulse may straddle a slot boundary).
pub fn impulse_slot_count(signaling_rate_hz: f64, impulse_duration_s: f64) -> Result<usize> {
    if !(signaling_rate_hz > 0.0 && impulse_duration_s > 0.0) {
        return Err(Error::invalid("signalling rate and impulse duration must be positive"));
    }
    let ratio = impulse_duration_s * signaling_rate_hz;
    // absorb rounding in products like 100e-6 * 1e4
    Ok((ratio - 1e-9).ceil().max(0.0) as usize + 1)
}

/// Impulse arrivals: fixed burst length, inter-arrival gaps uniform on
/// `[min_gap_s, max_gap_s]` and independent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImpulseProcess {
    pub duration_s: f64,
    pub min_gap_s: f64,
    pub max_gap_s: f64,
}

impl Default for ImpulseProcess {
    fn default() -> Self {
        ImpulseProcess {
            duration_s: 100e-6,
            min_gap_s: 0.1,
            max_gap_s: 1.0,
        }
    }
}

impl ImpulseProcess {
    pub fn new(duration_s: f64, min_gap_s: f64, max_gap_s: f64) -> Result<Self> {
        if !(duration_s > 0.0) || !(min_gap_s > 0.0) || !(max_gap_s >= min_gap_s) {
            return Err(Error::invalid("need duration > 0 and 0 < min_gap <= max_gap"));
        }
        Ok(ImpulseProcess {
            duration_s,
            min_gap_s,
            max_gap_s,
        })
    }

    pub fn next_gap<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.max_gap_s == self.min_gap_s {
            return self.min_gap_s;
        }
        rng.random_range(self.min_gap_s..=self.max_gap_s)
    }

    /// Impulse start times in `[0, horizon_s)`.
    pub fn arrivals<R: Rng + ?Sized>(&self, horizon_s: f64, rng: &mut R) -> Vec<f64> {
        let mut out = Vec::new();
        let mut t = self.next_gap(rng);
        while t < horizon_s {
            out.push(t);
            t += self.next_gap(rng);
        }
        out
    }

    /// Global slot indices overlapped by an impulse starting at `start_s`.
    pub fn affected_slots(&self, start_s: f64, symbol_duration: f64) -> Range<usize> {
        let first = (start_s / symbol_duration).floor() as usize;
        let last = ((start_s + self.duration_s) / symbol_duration).ceil() as usize;
        first..last.max(first + 1)
    }
}

fn default_amplitude() -> f64 {
    1.0
}

fn is_default_amplitude(a: &f64) -> bool {
    *a == 1.0
}

/// Declarative error pattern for one codeword transmission. Slots and
/// tones are 1-based.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelScenario {
    /// Tones with a permanent narrowband disturbance.
    #[serde(default)]
    pub jammed_tones: BTreeSet<usize>,
    /// Slots hit by an impulse (every tone detected).
    #[serde(default)]
    pub impulse_slots: BTreeSet<usize>,
    /// `(slot, tone)` pairs removed from the detector output.
    #[serde(default)]
    pub deletions: BTreeSet<(usize, usize)>,
    /// `(slot, tone)` pairs added to the detector output.
    #[serde(default)]
    pub insertions: BTreeSet<(usize, usize)>,
    /// Background noise density in W/Hz; 0 disables stochastic noise.
    #[serde(default, rename = "background_N", alias = "background_n")]
    pub background_n: f64,
    /// Jammer envelope as a multiple of `sqrt(Es)`.
    #[serde(default = "default_amplitude", skip_serializing_if = "is_default_amplitude")]
    pub jammer_amplitude: f64,
    /// Impulse envelope as a multiple of `sqrt(Es)`.
    #[serde(default = "default_amplitude", skip_serializing_if = "is_default_amplitude")]
    pub impulse_amplitude: f64,
}

impl Default for ChannelScenario {
    fn default() -> Self {
        ChannelScenario {
            jammed_tones: BTreeSet::new(),
            impulse_slots: BTreeSet::new(),
            deletions: BTreeSet::new(),
            insertions: BTreeSet::new(),
            background_n: 0.0,
            jammer_amplitude: 1.0,
            impulse_amplitude: 1.0,
        }
    }
}

impl ChannelScenario {
    pub fn clean() -> Self {
        Self::default()
    }

    pub fn with_noise(background_n: f64) -> Self {
        ChannelScenario {
            background_n,
            ..Self::clean()
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::parse(e.line(), e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// Number of deterministic error events.
    pub fn event_count(&self) -> usize {
        self.jammed_tones.len() + self.impulse_slots.len() + self.deletions.len() + self.insertions.len()
    }

    /// Checks every index against a word length of `m`.
    pub fn validate(&self, m: usize) -> Result<()> {
        let in_range = |i: usize| (1..=m).contains(&i);
        if let Some(t) = self.jammed_tones.iter().find(|&&t| !in_range(t)) {
            return Err(Error::invalid(format!("jammed tone {t} outside 1..={m}")));
        }
        if let Some(s) = self.impulse_slots.iter().find(|&&s| !in_range(s)) {
            return Err(Error::invalid(format!("impulse slot {s} outside 1..={m}")));
        }
        for (what, set) in [("deletion", &self.deletions), ("insertion", &self.insertions)] {
            if let Some((s, t)) = set.iter().find(|(s, t)| !in_range(*s) || !in_range(*t)) {
                return Err(Error::invalid(format!("{what} ({s}, {t}) outside 1..={m}")));
            }
        }
        if !(self.background_n >= 0.0) {
            return Err(Error::invalid(format!(
                "background noise {} must be >= 0",
                self.background_n
            )));
        }
        if !(self.jammer_amplitude >= 0.0) || !(self.impulse_amplitude >= 0.0) {
            return Err(Error::invalid("disturbance amplitudes must be >= 0"));
        }
        Ok(())
    }

    /// Drops deletions of tones that were not sent and insertions of tones
    /// that were.
    pub fn normalized_for(&self, tx: &Codeword) -> ChannelScenario {
        let sent = |s: usize, t: usize| tx.symbols().get(s - 1).map(|&x| x as usize) == Some(t);
        ChannelScenario {
            deletions: self.deletions.iter().copied().filter(|&(s, t)| sent(s, t)).collect(),
            insertions: self.insertions.iter().copied().filter(|&(s, t)| !sent(s, t)).collect(),
            ..self.clone()
        }
    }
}

/// Deterministic demodulator output for `tx` under `scenario`. Per slot:
/// the sent tone, widened to every tone on an impulse slot, plus jammed
/// tones and insertions, minus deletions. Background noise is ignored.
pub fn apply_scenario_symbolic(tx: &Codeword, scenario: &ChannelScenario) -> Result<DemodFrame> {
    let m = tx.len();
    scenario.validate(m)?;
    let jammed: ToneSet = scenario.jammed_tones.iter().copied().collect();
    let mut frame = DemodFrame::from_word(tx);
    for (k, set) in frame.slots_mut().iter_mut().enumerate() {
        let slot = k + 1;
        if scenario.impulse_slots.contains(&slot) {
            *set = ToneSet::full(m);
        }
        *set = set.union(jammed);
    }
    for &(s, t) in &scenario.insertions {
        frame.slots_mut()[s - 1].insert(t);
    }
    for &(s, t) in &scenario.deletions {
        frame.slots_mut()[s - 1].remove(t);
    }
    Ok(frame)
}

/// Envelope-level counterpart of [`apply_scenario_symbolic`].
///
/// Each slot's envelopes come from [`envelope_statistics`](crate::modem::envelope_statistics)
/// with the scenario's background noise. Jammers, impulses and insertions
/// add an incoherent component (envelopes combine as `sqrt(e^2 + A^2)`),
/// so a disturbance of amplitude above the threshold is always detected.
/// Deletions zero the envelope. With zero background noise and default
/// amplitudes, thresholding at `sqrt(Es)/2` reproduces the symbolic frame.
pub fn apply_scenario_stochastic<R: Rng + ?Sized>(
    tx: &Codeword,
    scenario: &ChannelScenario,
    params: &ModemParams,
    rng: &mut R,
) -> Result<Vec<EnvelopeVector>> {
    let m = tx.len();
    if m != params.m {
        return Err(Error::invalid(format!("word length {m} vs M = {}", params.m)));
    }
    scenario.validate(m)?;
    let mut out = Vec::with_capacity(m);
    for &sym in tx.symbols() {
        let mut env = vec![0.0; m];
        fill_envelopes(&mut env, Some(sym as usize), params.symbol_energy, scenario.background_n, rng)?;
        out.push(EnvelopeVector(env));
    }
    inject_disturbances(&mut out, scenario, params.symbol_energy);
    Ok(out)
}

pub(crate) fn inject_disturbances(slots: &mut [EnvelopeVector], scenario: &ChannelScenario, es: f64) {
    let amp = es.sqrt();
    let jam = scenario.jammer_amplitude * amp;
    let imp = scenario.impulse_amplitude * amp;
    for (k, env) in slots.iter_mut().enumerate() {
        let slot = k + 1;
        if scenario.impulse_slots.contains(&slot) {
            for e in env.0.iter_mut() {
                *e = e.hypot(imp);
            }
        }
        for &t in &scenario.jammed_tones {
            env.0[t - 1] = env.0[t - 1].hypot(jam);
        }
    }
    for &(s, t) in &scenario.insertions {
        let e = &mut slots[s - 1].0[t - 1];
        *e = e.hypot(amp);
    }
    for &(s, t) in &scenario.deletions {
        slots[s - 1].0[t - 1] = 0.0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::{threshold_demodulate, Thresholds};
    use crate::modem::derive_params;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn word(s: &[u8]) -> Codeword {
        Codeword::new(s.to_vec()).unwrap()
    }

    #[test]
    fn attenuation_examples() {
        assert!((received_power(25.0, 500.0).unwrap() - 25e-5).abs() < 1e-18);
        assert_eq!(received_power(3.0, 0.0).unwrap(), 3.0);
        assert!((received_power(25.0, 100.0).unwrap() - 2.5).abs() < 1e-12);
        assert!(received_power(0.0, 1.0).is_err());
        assert!(received_power(1.0, -1.0).is_err());
    }

    #[test]
    fn noise_psd_examples() {
        assert_eq!(worst_case_noise_psd(0.0).unwrap(), 1e-8);
        let n = worst_case_noise_psd(57_000.0).unwrap();
        assert!((n / 10f64.powf(-10.28) - 1.0).abs() < 1e-12);
        let n = worst_case_noise_psd(95_000.0).unwrap();
        assert!((n / 10f64.powf(-11.8) - 1.0).abs() < 1e-12);
        assert!(worst_case_noise_psd(-1.0).is_err());
    }

    #[test]
    fn snr_bound_range() {
        assert!(snr_lower_bound(0.0).is_err());
        assert!(snr_lower_bound(95.0).is_err());
        assert!(snr_lower_bound(1.0).is_ok());
    }

    #[test]
    fn impulse_slot_counts() {
        assert_eq!(impulse_slot_count(10e3, 100e-6).unwrap(), 2);
        assert_eq!(impulse_slot_count(10e3, 10e-6).unwrap(), 2);
        assert_eq!(impulse_slot_count(10e3, 250e-6).unwrap(), 4);
        assert!(impulse_slot_count(0.0, 1e-6).is_err());
    }

    #[test]
    fn impulse_process() {
        let p = ImpulseProcess::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let arrivals = p.arrivals(100.0, &mut rng);
        assert!(arrivals.windows(2).all(|w| (0.1..=1.0).contains(&(w[1] - w[0]))));
        assert!(arrivals.len() > 90 && arrivals.len() < 1000);
        assert_eq!(p.affected_slots(0.00015, 1e-4), 1..3);
        assert!(ImpulseProcess::new(0.0, 0.1, 1.0).is_err());
        assert!(ImpulseProcess::new(1e-4, 1.0, 0.1).is_err());
    }

    #[test]
    fn symbolic_examples() {
        let tx = word(&[3, 4, 1, 2]);
        let jam = ChannelScenario {
            jammed_tones: [4].into(),
            ..ChannelScenario::clean()
        };
        assert_eq!(
            apply_scenario_symbolic(&tx, &jam).unwrap(),
            DemodFrame::from_lists(&[&[3, 4], &[4], &[1, 4], &[2, 4]]).unwrap()
        );
        let imp = ChannelScenario {
            impulse_slots: [1, 2, 3].into(),
            ..ChannelScenario::clean()
        };
        assert_eq!(
            apply_scenario_symbolic(&tx, &imp).unwrap(),
            DemodFrame::from_lists(&[&[1, 2, 3, 4], &[1, 2, 3, 4], &[1, 2, 3, 4], &[2]]).unwrap()
        );
        let id = Codeword::identity(4);
        assert_eq!(
            apply_scenario_symbolic(&id, &ChannelScenario::clean()).unwrap(),
            DemodFrame::from_word(&id)
        );
    }

    #[test]
    fn deletion_can_empty_a_slot() {
        let tx = word(&[3, 4, 1, 2]);
        let s = ChannelScenario {
            deletions: [(2, 4)].into(),
            ..ChannelScenario::clean()
        };
        let f = apply_scenario_symbolic(&tx, &s).unwrap();
        assert!(f.slots()[1].is_empty());
    }

    #[test]
    fn scenario_validation() {
        let tx = Codeword::identity(4);
        for bad in [
            ChannelScenario { jammed_tones: [5].into(), ..ChannelScenario::clean() },
            ChannelScenario { impulse_slots: [0].into(), ..ChannelScenario::clean() },
            ChannelScenario { deletions: [(1, 9)].into(), ..ChannelScenario::clean() },
            ChannelScenario { background_n: -1.0, ..ChannelScenario::clean() },
        ] {
            assert!(apply_scenario_symbolic(&tx, &bad).is_err());
        }
    }

    #[test]
    fn normalization() {
        let tx = word(&[3, 4, 1, 2]);
        let s = ChannelScenario {
            deletions: [(1, 3), (1, 4)].into(),
            insertions: [(2, 4), (2, 1)].into(),
            ..ChannelScenario::clean()
        };
        let n = s.normalized_for(&tx);
        assert_eq!(n.deletions, [(1, 3)].into());
        assert_eq!(n.insertions, [(2, 1)].into());
    }

    #[test]
    fn scenario_json() {
        let s = ChannelScenario::from_json(
            r#"{"jammed_tones":[4],"impulse_slots":[1,2],"deletions":[[3,1]],"insertions":[[4,3]],"background_N":1e-9}"#,
        )
        .unwrap();
        assert_eq!(s.jammed_tones, [4].into());
        assert_eq!(s.deletions, [(3, 1)].into());
        assert_eq!(s.jammer_amplitude, 1.0);
        assert_eq!(ChannelScenario::from_json(&s.to_json()).unwrap(), s);
        assert_eq!(ChannelScenario::from_json("{}").unwrap(), ChannelScenario::clean());
        assert!(ChannelScenario::from_json(r#"{"jammed":[1]}"#).is_err());
    }

    #[test]
    fn stochastic_noiseless_matches_jammer_example() {
        let params = derive_params(4, 4800.0, 4, 0.0).unwrap();
        let t = Thresholds::uniform(4, params.symbol_energy).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let tx = word(&[3, 4, 1, 2]);
        let jam = ChannelScenario {
            jammed_tones: [4].into(),
            ..ChannelScenario::clean()
        };
        let env = apply_scenario_stochastic(&tx, &jam, &params, &mut rng).unwrap();
        assert_eq!(
            threshold_demodulate(&env, &t).unwrap(),
            DemodFrame::from_lists(&[&[3, 4], &[4], &[1, 4], &[2, 4]]).unwrap()
        );
        let id = Codeword::identity(4);
        let env = apply_scenario_stochastic(&id, &ChannelScenario::clean(), &params, &mut rng).unwrap();
        assert_eq!(threshold_demodulate(&env, &t).unwrap(), DemodFrame::from_word(&id));
    }
}
