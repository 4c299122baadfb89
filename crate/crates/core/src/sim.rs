//! Seeded Monte Carlo experiments and exhaustive scenario enumeration.
//!
//! Trials are grouped in fixed blocks of [`BLOCK_TRIALS`]. Block `b` of
//! sweep point `p` draws from [`trial_stream`]`(seed, p, b)`, so the counts
//! do not depend on how blocks are scheduled across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{apply_scenario_symbolic, from_db, inject_disturbances, ChannelScenario};
use crate::codec::{decode_max_agreement, detect, make_thresholds, DecisionKind, DemodFrame, ToneSet};
use crate::error::{Error, Result};
use crate::modem::{fill_envelopes, insertion_deletion_prob_approx, EnvelopeVector, ModemParams};
use crate::permcode::{CodeBook, Codeword};

pub const BLOCK_TRIALS: u64 = 4096;

const POINT_STRIDE: u64 = 0x9E37_79B9_7F4A_7C15;

/// Random stream for one block: ChaCha8 keyed by
/// `seed + point * 0x9E3779B97F4A7C15` (wrapping), stream id `block`.
pub fn trial_stream(seed: u64, point: u64, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(point.wrapping_mul(POINT_STRIDE)));
    rng.set_stream(block);
    rng
}

/// Raw event counts; additive across blocks.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub trials: u64,
    pub slots: u64,
    /// Detected tones that were not sent.
    pub insertions: u64,
    /// Slots whose sent tone was not detected.
    pub deletions: u64,
    /// Trials not decoded uniquely to the sent message (ties included).
    pub word_errors: u64,
    pub ties: u64,
}

impl Counts {
    fn merge(self, o: Counts) -> Counts {
        Counts {
            trials: self.trials + o.trials,
            slots: self.slots + o.slots,
            insertions: self.insertions + o.insertions,
            deletions: self.deletions + o.deletions,
            word_errors: self.word_errors + o.word_errors,
            ties: self.ties + o.ties,
        }
    }
}

/// A resolved Monte Carlo experiment over one codebook.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub code: CodeBook,
    pub scenario: ChannelScenario,
    /// Per-tone SNR points `Es/N` in dB. Empty means a single point using
    /// the scenario's own background noise.
    pub snr_db: Vec<f64>,
    pub trials: u64,
    pub seed: u64,
    /// Threshold margin `c` in `sqrt(Es)/2 + c * sigma`.
    pub noise_margin: f64,
    /// Symbol energy in joules.
    pub symbol_energy: f64,
}

impl Experiment {
    pub fn new(code: CodeBook, scenario: ChannelScenario, trials: u64, seed: u64) -> Self {
        Experiment {
            code,
            scenario,
            snr_db: Vec::new(),
            trials,
            seed,
            noise_margin: 0.0,
            symbol_energy: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::invalid("trial count must be at least 1"));
        }
        if self.code.is_empty() {
            return Err(Error::invalid("codebook is empty"));
        }
        if let Some(s) = self.snr_db.iter().find(|s| !s.is_finite()) {
            return Err(Error::invalid(format!("SNR {s} dB is not finite")));
        }
        if !(self.symbol_energy > 0.0) {
            return Err(Error::invalid("symbol energy must be positive"));
        }
        if !(self.noise_margin >= 0.0) {
            return Err(Error::invalid("noise margin must be >= 0"));
        }
        self.scenario.validate(self.code.m())
    }

    /// Runs every point on the current rayon pool.
    pub fn run(&self) -> Result<Vec<PointResult>> {
        self.validate()?;
        let points: Vec<Option<f64>> = if self.snr_db.is_empty() {
            vec![None]
        } else {
            self.snr_db.iter().copied().map(Some).collect()
        };
        points
            .iter()
            .enumerate()
            .map(|(p, &snr_db)| self.run_point(p as u64, snr_db))
            .collect()
    }

    /// Runs on a dedicated pool of `threads` workers.
    pub fn run_with_threads(&self, threads: usize) -> Result<Vec<PointResult>> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;
        pool.install(|| self.run())
    }

    fn run_point(&self, point: u64, snr_db: Option<f64>) -> Result<PointResult> {
        let m = self.code.m();
        let es = self.symbol_energy;
        let noise_psd = match snr_db {
            Some(db) => es / from_db(db),
            None => self.scenario.background_n,
        };
        let sigma = (noise_psd / 2.0).sqrt();
        let thresholds = make_thresholds(&vec![es; m], self.noise_margin, &vec![sigma; m])?;
        let mut scenario = self.scenario.clone();
        scenario.background_n = noise_psd;

        let blocks = self.trials.div_ceil(BLOCK_TRIALS);
        let counts = (0..blocks)
            .into_par_iter()
            .map(|b| {
                let n = BLOCK_TRIALS.min(self.trials - b * BLOCK_TRIALS);
                let mut rng = trial_stream(self.seed, point, b);
                let mut runner = TrialRunner::new(&self.code, &scenario, es, &thresholds);
                let mut c = Counts::default();
                for _ in 0..n {
                    runner.trial(&mut rng, &mut c);
                }
                c
            })
            .reduce(Counts::default, Counts::merge);
        Ok(PointResult::new(snr_db, noise_psd, es, m, self.seed, counts))
    }
}

struct TrialRunner<'a> {
    code: &'a CodeBook,
    scenario: &'a ChannelScenario,
    es: f64,
    thresholds: &'a crate::codec::Thresholds,
    env: Vec<EnvelopeVector>,
    frame: DemodFrame,
}

impl<'a> TrialRunner<'a> {
    fn new(
        code: &'a CodeBook,
        scenario: &'a ChannelScenario,
        es: f64,
        thresholds: &'a crate::codec::Thresholds,
    ) -> Self {
        let m = code.m();
        TrialRunner {
            code,
            scenario,
            es,
            thresholds,
            env: vec![EnvelopeVector(vec![0.0; m]); m],
            frame: DemodFrame::new(m, vec![ToneSet::EMPTY; m]).expect("valid empty frame"),
        }
    }

    fn trial<R: Rng>(&mut self, rng: &mut R, c: &mut Counts) {
        let msg = rng.random_range(0..self.code.len());
        let tx = &self.code.words()[msg];
        for (env, &sym) in self.env.iter_mut().zip(tx.symbols()) {
            fill_envelopes(&mut env.0, Some(sym as usize), self.es, self.scenario.background_n, rng)
                .expect("validated noise and tone");
        }
        inject_disturbances(&mut self.env, self.scenario, self.es);
        for ((slot, env), &sym) in self.frame.slots_mut().iter_mut().zip(&self.env).zip(tx.symbols()) {
            *slot = detect(env.values(), self.thresholds);
            let sent = slot.contains(sym as usize);
            c.deletions += u64::from(!sent);
            c.insertions += (slot.len() - usize::from(sent)) as u64;
        }
        let d = decode_max_agreement(&self.frame, self.code).expect("frame matches code");
        c.trials += 1;
        c.slots += tx.len() as u64;
        if d.kind == DecisionKind::Tie {
            c.ties += 1;
        }
        if !d.is_unique(msg) {
            c.word_errors += 1;
        }
    }
}

/// One sweep point's counts and derived rates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointResult {
    pub snr_db: Option<f64>,
    /// Background noise density `N` used for this point.
    pub noise_psd: f64,
    pub counts: Counts,
    /// Insertions per non-sent tone decision.
    pub insertion_rate: f64,
    /// Deletions per slot.
    pub deletion_rate: f64,
    /// `(insertion_rate + deletion_rate) / 2`: on/off keying error rate with
    /// equally likely on and off tones.
    pub combined_rate: f64,
    pub word_error_rate: f64,
    pub tie_rate: f64,
    /// `0.5 exp(-SNR/4)` at this point, when an SNR is defined.
    pub approx_rate: Option<f64>,
    pub seed: u64,
}

impl PointResult {
    fn new(snr_db: Option<f64>, noise_psd: f64, es: f64, m: usize, seed: u64, counts: Counts) -> Self {
        let ratio = |a: u64, b: u64| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let insertion_rate = ratio(counts.insertions, counts.slots * (m as u64 - 1));
        let deletion_rate = ratio(counts.deletions, counts.slots);
        let snr = if noise_psd > 0.0 { Some(es / noise_psd) } else { None };
        PointResult {
            snr_db,
            noise_psd,
            counts,
            insertion_rate,
            deletion_rate,
            combined_rate: (insertion_rate + deletion_rate) / 2.0,
            word_error_rate: ratio(counts.word_errors, counts.trials),
            tie_rate: ratio(counts.ties, counts.trials),
            approx_rate: snr.map(insertion_deletion_prob_approx),
            seed,
        }
    }
}

/// Monte Carlo estimate of `P(e > threshold)` for a noise-only tone,
/// drawn through the same envelope generator the experiments use.
pub fn noise_exceedance_rate(
    params: &ModemParams,
    noise_psd: f64,
    threshold: f64,
    trials: u64,
    seed: u64,
) -> Result<(u64, u64)> {
    let blocks = trials.div_ceil(BLOCK_TRIALS);
    let m = params.m;
    let hits = (0..blocks)
        .into_par_iter()
        .map(|b| -> Result<u64> {
            let n = BLOCK_TRIALS.min(trials - b * BLOCK_TRIALS);
            let mut rng = trial_stream(seed, u64::MAX, b);
            let mut env = vec![0.0; m];
            let mut hits = 0;
            for _ in 0..n {
                fill_envelopes(&mut env, None, params.symbol_energy, noise_psd, &mut rng)?;
                hits += env.iter().filter(|&&e| e > threshold).count() as u64;
            }
            Ok(hits)
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    Ok((hits, trials * m as u64))
}

/// A single deterministic error event.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind")]
pub enum Event {
    Jam { tone: usize },
    Impulse { slot: usize },
    Insert { slot: usize, tone: usize },
    Delete { slot: usize },
}

/// Every distinct single event that can affect `tx`: each jammed tone, each
/// impulse slot, each insertion of a non-sent tone, and each deletion of a
/// sent tone.
pub fn single_events(tx: &Codeword) -> Vec<Event> {
    let m = tx.len();
    let mut out = Vec::new();
    out.extend((1..=m).map(|tone| Event::Jam { tone }));
    out.extend((1..=m).map(|slot| Event::Impulse { slot }));
    for (k, &sym) in tx.symbols().iter().enumerate() {
        for tone in (1..=m).filter(|&t| t != sym as usize) {
            out.push(Event::Insert { slot: k + 1, tone });
        }
    }
    out.extend((1..=m).map(|slot| Event::Delete { slot }));
    out
}

/// Scenario realizing a set of events on `tx` (no background noise).
pub fn scenario_from_events(tx: &Codeword, events: &[Event]) -> ChannelScenario {
    let mut s = ChannelScenario::clean();
    for e in events {
        match *e {
            Event::Jam { tone } => {
                s.jammed_tones.insert(tone);
            }
            Event::Impulse { slot } => {
                s.impulse_slots.insert(slot);
            }
            Event::Insert { slot, tone } => {
                s.insertions.insert((slot, tone));
            }
            Event::Delete { slot } => {
                s.deletions.insert((slot, tx.symbols()[slot - 1] as usize));
            }
        }
    }
    s
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct RadiusReport {
    pub max_events: usize,
    pub cases: u64,
    pub failures: u64,
    /// First failing `(message, events)` pair, if any.
    pub first_failure: Option<(usize, Vec<Event>)>,
}

/// Exhaustively checks that every codeword survives every combination of
/// at most `max_events` distinct events under symbolic decoding.
pub fn verify_correction_radius(code: &CodeBook, max_events: usize) -> Result<RadiusReport> {
    let mut report = RadiusReport {
        max_events,
        ..Default::default()
    };
    for (msg, tx) in code.words().iter().enumerate() {
        let events = single_events(tx);
        let mut chosen = Vec::with_capacity(max_events);
        check_subsets(code, msg, tx, &events, 0, max_events, &mut chosen, &mut report)?;
    }
    Ok(report)
}

#[allow(clippy::too_many_arguments)]
fn check_subsets(
    code: &CodeBook,
    msg: usize,
    tx: &Codeword,
    events: &[Event],
    from: usize,
    left: usize,
    chosen: &mut Vec<Event>,
    report: &mut RadiusReport,
) -> Result<()> {
    let frame = apply_scenario_symbolic(tx, &scenario_from_events(tx, chosen))?;
    let d = decode_max_agreement(&frame, code)?;
    report.cases += 1;
    if !d.is_unique(msg) {
        report.failures += 1;
        if report.first_failure.is_none() {
            report.first_failure = Some((msg, chosen.clone()));
        }
    }
    if left == 0 {
        return Ok(());
    }
    for i in from..events.len() {
        chosen.push(events[i]);
        check_subsets(code, msg, tx, events, i + 1, left - 1, chosen, report)?;
        chosen.pop();
    }
    Ok(())
}
