//! Threshold demodulation into multi-valued frames, and max-agreement
//! decoding against a permutation codebook.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::modem::EnvelopeVector;
use crate::permcode::{CodeBook, Codeword};

/// Largest tone index a [`ToneSet`] can hold.
pub const MAX_TONES: usize = 128;

/// Set of 1-based tone indices detected in one slot.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct ToneSet(u128);

impl ToneSet {
    pub const EMPTY: ToneSet = ToneSet(0);

    pub fn single(tone: usize) -> Self {
        let mut s = Self::EMPTY;
        s.insert(tone);
        s
    }

    /// `{1, ..., m}`.
    pub fn full(m: usize) -> Self {
        debug_assert!(m <= MAX_TONES);
        if m == MAX_TONES {
            ToneSet(u128::MAX)
        } else {
            ToneSet((1u128 << m) - 1)
        }
    }

    pub fn contains(self, tone: usize) -> bool {
        tone >= 1 && tone <= MAX_TONES && self.0 >> (tone - 1) & 1 == 1
    }

    pub fn insert(&mut self, tone: usize) {
        debug_assert!((1..=MAX_TONES).contains(&tone));
        self.0 |= 1 << (tone - 1);
    }

    pub fn remove(&mut self, tone: usize) {
        debug_assert!((1..=MAX_TONES).contains(&tone));
        self.0 &= !(1 << (tone - 1));
    }

    pub fn union(self, other: ToneSet) -> ToneSet {
        ToneSet(self.0 | other.0)
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_subset(self, other: ToneSet) -> bool {
        self.0 & !other.0 == 0
    }

    /// Highest tone present, 0 if empty.
    pub fn max_tone(self) -> usize {
        (u128::BITS - self.0.leading_zeros()) as usize
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        (1..=MAX_TONES).filter(move |&t| self.contains(t))
    }
}

impl FromIterator<usize> for ToneSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let mut s = ToneSet::EMPTY;
        for t in iter {
            s.insert(t);
        }
        s
    }
}

/// Demodulator output: one detected tone set per time slot.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DemodFrame {
    m: usize,
    slots: Vec<ToneSet>,
}

impl DemodFrame {
    /// `slots.len()` must equal `m` and every tone must lie in `1..=m`.
    pub fn new(m: usize, slots: Vec<ToneSet>) -> Result<Self> {
        if m == 0 || m > MAX_TONES {
            return Err(Error::invalid(format!("M = {m} outside 1..={MAX_TONES}")));
        }
        if slots.len() != m {
            return Err(Error::invalid(format!(
                "frame has {} slots, expected {m}",
                slots.len()
            )));
        }
        if let Some(k) = slots.iter().position(|s| s.max_tone() > m) {
            return Err(Error::invalid(format!("slot {} has a tone above {m}", k + 1)));
        }
        Ok(DemodFrame { m, slots })
    }

    /// Builds a frame from explicit 1-based tone lists.
    pub fn from_lists(lists: &[&[usize]]) -> Result<Self> {
        let m = lists.len();
        if let Some(&t) = lists.iter().flat_map(|l| l.iter()).find(|&&t| t == 0 || t > m) {
            return Err(Error::invalid(format!("tone {t} outside 1..={m}")));
        }
        let slots = lists.iter().map(|l| l.iter().copied().collect()).collect();
        DemodFrame::new(m, slots)
    }

    /// The noiseless frame `{w_1}, ..., {w_M}`.
    pub fn from_word(word: &Codeword) -> Self {
        let slots = word.symbols().iter().map(|&s| ToneSet::single(s as usize)).collect();
        DemodFrame::new(word.len(), slots).expect("codeword symbols lie in 1..=M")
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn slots(&self) -> &[ToneSet] {
        &self.slots
    }

    pub fn slots_mut(&mut self) -> &mut [ToneSet] {
        &mut self.slots
    }

    pub fn to_lists(&self) -> Vec<Vec<usize>> {
        self.slots.iter().map(|s| s.iter().collect()).collect()
    }
}

/// Test-vector format: one line per slot, comma-separated tones, `-` for
/// an empty slot.
impl fmt::Display for DemodFrame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.slots {
            if s.is_empty() {
                writeln!(f, "-")?;
            } else {
                let tones: Vec<String> = s.iter().map(|t| t.to_string()).collect();
                writeln!(f, "{}", tones.join(","))?;
            }
        }
        Ok(())
    }
}

impl FromStr for DemodFrame {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let lines: Vec<(usize, &str)> = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty())
            .collect();
        let m = lines.len();
        let mut slots = Vec::with_capacity(m);
        for (ln, line) in lines {
            if line == "-" {
                slots.push(ToneSet::EMPTY);
                continue;
            }
            let mut set = ToneSet::EMPTY;
            for tok in line.split(',') {
                let t: usize = tok
                    .trim()
                    .parse()
                    .map_err(|_| Error::parse(ln, format!("bad tone {tok:?}")))?;
                if t == 0 || t > m {
                    return Err(Error::parse(ln, format!("tone {t} outside 1..={m}")));
                }
                set.insert(t);
            }
            slots.push(set);
        }
        DemodFrame::new(m, slots)
    }
}

/// Per-tone detection thresholds in envelope (sqrt-energy) units.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Thresholds(Vec<f64>);

impl Thresholds {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::invalid(format!("threshold {v} must be positive")));
        }
        Ok(Thresholds(values))
    }

    /// `sqrt(Es)/2` on every tone.
    pub fn uniform(m: usize, es: f64) -> Result<Self> {
        make_thresholds(&vec![es; m], 0.0, &vec![0.0; m])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

/// `T_i = sqrt(Es_i)/2 + c * sigma_i`.
pub fn make_thresholds(es_per_tone: &[f64], noise_margin: f64, noise_sigma: &[f64]) -> Result<Thresholds> {
    if es_per_tone.len() != noise_sigma.len() {
        return Err(Error::invalid("energy and sigma vectors differ in length"));
    }
    if !(noise_margin >= 0.0) {
        return Err(Error::invalid(format!("noise margin {noise_margin} must be >= 0")));
    }
    let values = es_per_tone
        .iter()
        .zip(noise_sigma)
        .map(|(&es, &sigma)| {
            if !(es > 0.0) {
                return Err(Error::invalid(format!("tone energy {es} must be positive")));
            }
            if !(sigma >= 0.0) {
                return Err(Error::invalid(format!("noise sigma {sigma} must be >= 0")));
            }
            Ok(es.sqrt() / 2.0 + noise_margin * sigma)
        })
        .collect::<Result<Vec<_>>>()?;
    Thresholds::new(values)
}

/// Tones whose envelope strictly exceeds the threshold.
pub fn detect(envelopes: &[f64], thresholds: &Thresholds) -> ToneSet {
    envelopes
        .iter()
        .zip(thresholds.values())
        .enumerate()
        .filter(|(_, (e, t))| e > t)
        .map(|(i, _)| i + 1)
        .collect()
}

/// Thresholds every slot's envelopes into a frame.
pub fn threshold_demodulate(envelopes: &[EnvelopeVector], thresholds: &Thresholds) -> Result<DemodFrame> {
    let m = thresholds.values().len();
    if envelopes.len() != m {
        return Err(Error::invalid(format!(
            "{} slots of envelopes, expected {m}",
            envelopes.len()
        )));
    }
    if let Some(e) = envelopes.iter().find(|e| e.len() != m) {
        return Err(Error::invalid(format!("envelope vector of length {}, expected {m}", e.len())));
    }
    let slots = envelopes.iter().map(|e| detect(e.values(), thresholds)).collect();
    DemodFrame::new(m, slots)
}

/// Number of slots whose detected set contains the word's symbol.
pub fn agreement_score(word: &Codeword, frame: &DemodFrame) -> Result<usize> {
    if word.len() != frame.m() {
        return Err(Error::invalid(format!(
            "word length {} vs frame length {}",
            word.len(),
            frame.m()
        )));
    }
    Ok(score(word, frame))
}

fn score(word: &Codeword, frame: &DemodFrame) -> usize {
    word.symbols()
        .iter()
        .zip(frame.slots())
        .filter(|(&s, set)| set.contains(s as usize))
        .count()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DecisionKind {
    /// One word attains the maximum agreement.
    Unique,
    /// Several words share the maximum.
    Tie,
    /// No word agrees in any slot.
    Empty,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Decision {
    pub kind: DecisionKind,
    /// 0-based message index, set only for [`DecisionKind::Unique`].
    pub message: Option<usize>,
    /// All 0-based message indices attaining `score`, ascending.
    pub candidates: Vec<usize>,
    pub score: usize,
}

impl Decision {
    pub fn is_unique(&self, message: usize) -> bool {
        self.message == Some(message)
    }
}

/// Picks the codeword with the most agreements. Ties are reported, not broken.
pub fn decode_max_agreement(frame: &DemodFrame, code: &CodeBook) -> Result<Decision> {
    if code.is_empty() {
        return Err(Error::invalid("cannot decode against an empty codebook"));
    }
    if frame.m() != code.m() {
        return Err(Error::invalid(format!(
            "frame length {} vs code length {}",
            frame.m(),
            code.m()
        )));
    }
    let mut best = 0;
    let mut candidates = Vec::new();
    for (i, w) in code.words().iter().enumerate() {
        let s = score(w, frame);
        if s > best || candidates.is_empty() {
            if s > best {
                best = s;
            }
            candidates.clear();
            candidates.push(i);
        } else if s == best {
            candidates.push(i);
        }
    }
    let kind = if best == 0 {
        DecisionKind::Empty
    } else if candidates.len() == 1 {
        DecisionKind::Unique
    } else {
        DecisionKind::Tie
    };
    Ok(Decision {
        kind,
        message: (kind == DecisionKind::Unique).then(|| candidates[0]),
        candidates,
        score: best,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::permcode::{example_code_m4, table1_code};

    fn word(s: &[u8]) -> Codeword {
        Codeword::new(s.to_vec()).unwrap()
    }

    fn jammer_frame() -> DemodFrame {
        DemodFrame::from_lists(&[&[3, 4], &[4], &[1, 4], &[2, 4]]).unwrap()
    }

    fn impulse_frame() -> DemodFrame {
        DemodFrame::from_lists(&[&[1, 2, 3, 4], &[1, 2, 3, 4], &[1, 2, 3, 4], &[2]]).unwrap()
    }

    #[test]
    fn threshold_examples() {
        assert_eq!(Thresholds::uniform(1, 1.0).unwrap().values(), &[0.5]);
        assert_eq!(Thresholds::uniform(1, 4.0).unwrap().values(), &[1.0]);
        let t = make_thresholds(&[1.0], 1.0, &[0.1]).unwrap();
        assert!((t.values()[0] - 0.6).abs() < 1e-15);
        assert!(make_thresholds(&[0.0], 0.0, &[0.0]).is_err());
        assert!(make_thresholds(&[-1.0], 0.0, &[0.0]).is_err());
        assert!(make_thresholds(&[1.0], -1.0, &[0.0]).is_err());
    }

    #[test]
    fn demodulate_examples() {
        let t = Thresholds::uniform(4, 1.0).unwrap();
        let clean: Vec<EnvelopeVector> = [1usize, 2, 3, 4]
            .iter()
            .map(|&k| {
                let mut v = vec![0.0; 4];
                v[k - 1] = 1.0;
                EnvelopeVector(v)
            })
            .collect();
        assert_eq!(
            threshold_demodulate(&clean, &t).unwrap(),
            DemodFrame::from_word(&Codeword::identity(4))
        );
        let zeros = vec![EnvelopeVector(vec![0.0; 4]); 4];
        let f = threshold_demodulate(&zeros, &t).unwrap();
        assert!(f.slots().iter().all(|s| s.is_empty()));

        let jammed: Vec<EnvelopeVector> = [3usize, 4, 1, 2]
            .iter()
            .map(|&k| {
                let mut v = vec![0.0, 0.0, 0.0, 1.0];
                v[k - 1] = 1.0;
                EnvelopeVector(v)
            })
            .collect();
        assert_eq!(threshold_demodulate(&jammed, &t).unwrap(), jammer_frame());
    }

    #[test]
    fn threshold_is_strict() {
        let t = Thresholds::uniform(2, 1.0).unwrap();
        assert_eq!(detect(&[0.5, 0.5000001], &t), ToneSet::single(2));
    }

    #[test]
    fn agreement_examples() {
        let tx = word(&[3, 4, 1, 2]);
        assert_eq!(agreement_score(&tx, &jammer_frame()).unwrap(), 4);
        let code = example_code_m4();
        for w in code.words() {
            let s = agreement_score(w, &impulse_frame()).unwrap();
            assert_eq!(s, if *w == tx { 4 } else { 3 });
        }
        let empty = DemodFrame::new(4, vec![ToneSet::EMPTY; 4]).unwrap();
        assert_eq!(agreement_score(&tx, &empty).unwrap(), 0);
        assert!(agreement_score(&word(&[1, 2, 3]), &empty).is_err());
    }

    #[test]
    fn decode_examples() {
        let code = example_code_m4();
        let d = decode_max_agreement(&jammer_frame(), &code).unwrap();
        assert_eq!((d.kind, d.message, d.score), (DecisionKind::Unique, Some(2), 4));
        let d = decode_max_agreement(&impulse_frame(), &code).unwrap();
        assert_eq!((d.kind, d.message, d.score), (DecisionKind::Unique, Some(2), 4));

        let full = DemodFrame::new(4, vec![ToneSet::full(4); 4]).unwrap();
        let d = decode_max_agreement(&full, &table1_code()).unwrap();
        assert_eq!(d.kind, DecisionKind::Tie);
        assert_eq!(d.candidates, (0..12).collect::<Vec<_>>());
        assert_eq!((d.message, d.score), (None, 4));

        let empty = DemodFrame::new(4, vec![ToneSet::EMPTY; 4]).unwrap();
        let d = decode_max_agreement(&empty, &code).unwrap();
        assert_eq!((d.kind, d.score, d.candidates.len()), (DecisionKind::Empty, 0, 4));
    }

    #[test]
    fn decode_errors() {
        let empty_code = CodeBook::new(4, vec![]).unwrap();
        assert!(decode_max_agreement(&jammer_frame(), &empty_code).is_err());
        let f3 = DemodFrame::from_lists(&[&[1], &[2], &[3]]).unwrap();
        assert!(decode_max_agreement(&f3, &example_code_m4()).is_err());
    }

    #[test]
    fn frame_text_format() {
        let f = DemodFrame::from_lists(&[&[3, 4], &[], &[1, 4], &[2, 4]]).unwrap();
        let text = f.to_string();
        assert_eq!(text, "3,4\n-\n1,4\n2,4\n");
        assert_eq!(text.parse::<DemodFrame>().unwrap(), f);
        assert!("1,5\n2\n3\n4\n".parse::<DemodFrame>().is_err());
        assert!("1,x\n2\n".parse::<DemodFrame>().is_err());
        assert!(DemodFrame::from_lists(&[&[0], &[1]]).is_err());
    }
}
