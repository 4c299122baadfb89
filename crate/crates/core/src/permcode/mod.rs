//! Permutation codes under the Hamming metric.
//!
//! A codeword of length `M` is a permutation of the tone indices `1..=M`;
//! symbol `k` of a word is the tone sent in time slot `k`. A [`CodeBook`]
//! keeps its words together with the exact minimum pairwise distance.

pub mod perm;
mod search;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use search::{search_max_code, Budget, SearchReport};

/// Largest word length the codebook types accept (symbols are stored as `u8`).
pub const MAX_WORD_LEN: usize = 255;

/// Largest `M` for which [`cardinality_bound`] is guaranteed to fit in `u128`.
pub const MAX_BOUND_M: usize = 34;

/// A permutation of `1..=M`, stored with 1-based symbols.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<u8>", into = "Vec<u8>")]
pub struct Codeword(Vec<u8>);

impl Codeword {
    /// Validates that `symbols` is a permutation of `1..=symbols.len()`.
    pub fn new(symbols: Vec<u8>) -> Result<Self> {
        let m = symbols.len();
        if m == 0 || m > MAX_WORD_LEN {
            return Err(Error::invalid(format!("codeword length {m} out of range")));
        }
        let mut seen = vec![false; m];
        for &s in &symbols {
            let i = s as usize;
            if i == 0 || i > m {
                return Err(Error::invalid(format!(
                    "symbol {s} outside 1..={m} in {symbols:?}"
                )));
            }
            if std::mem::replace(&mut seen[i - 1], true) {
                return Err(Error::invalid(format!(
                    "symbol {s} repeated in {symbols:?}"
                )));
            }
        }
        Ok(Codeword(symbols))
    }

    pub fn identity(m: usize) -> Self {
        Codeword((1..=m as u8).collect())
    }

    /// Builds a word from 0-based permutation images.
    pub fn from_zero_based(p: &[u8]) -> Result<Self> {
        Codeword::new(p.iter().map(|&x| x + 1).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// 1-based symbols.
    pub fn symbols(&self) -> &[u8] {
        &self.0
    }

    pub fn to_zero_based(&self) -> Vec<u8> {
        self.0.iter().map(|&s| s - 1).collect()
    }
}

impl TryFrom<Vec<u8>> for Codeword {
    type Error = Error;

    fn try_from(v: Vec<u8>) -> Result<Self> {
        Codeword::new(v)
    }
}

impl From<Codeword> for Vec<u8> {
    fn from(w: Codeword) -> Self {
        w.0
    }
}

impl fmt::Display for Codeword {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

impl FromStr for Codeword {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let symbols = s
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<u8>()
                    .map_err(|_| Error::invalid(format!("bad symbol {t:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Codeword::new(symbols)
    }
}

/// Number of positions in which `a` and `b` differ.
pub fn hamming_distance(a: &Codeword, b: &Codeword) -> Result<usize> {
    if a.len() != b.len() {
        return Err(Error::invalid(format!(
            "length mismatch: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    Ok(slice_distance(a.symbols(), b.symbols()))
}

pub(crate) fn slice_distance(a: &[u8], b: &[u8]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

/// Upper bound `M! / (d-1)!` on the size of a permutation code with
/// length `m` and minimum distance `d`.
pub fn cardinality_bound(m: usize, d: usize) -> Result<u128> {
    if m < 2 {
        return Err(Error::invalid(format!("M = {m} must be at least 2")));
    }
    if d < 2 || d > m {
        return Err(Error::invalid(format!("d = {d} must lie in 2..={m}")));
    }
    // M!/(d-1)! = d * (d+1) * ... * M
    (d as u128..=m as u128).try_fold(1u128, |acc, k| {
        acc.checked_mul(k).ok_or_else(|| {
            Error::Overflow(format!("M!/(d-1)! for M = {m}, d = {d} exceeds 128 bits"))
        })
    })
}

/// An ordered list of distinct codewords of a common length.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CodeBook {
    m: usize,
    words: Vec<Codeword>,
    d_min: Option<usize>,
}

impl CodeBook {
    /// Builds a codebook, sorting the words lexicographically.
    pub fn new(m: usize, mut words: Vec<Codeword>) -> Result<Self> {
        words.sort();
        Self::with_order(m, words)
    }

    /// Builds a codebook keeping the given word order.
    pub fn with_order(m: usize, words: Vec<Codeword>) -> Result<Self> {
        if m < 1 || m > MAX_WORD_LEN {
            return Err(Error::invalid(format!("M = {m} out of range")));
        }
        if let Some(w) = words.iter().find(|w| w.len() != m) {
            return Err(Error::invalid(format!(
                "word ({w}) has length {}, expected {m}",
                w.len()
            )));
        }
        let mut sorted: Vec<&Codeword> = words.iter().collect();
        sorted.sort();
        if let Some(pair) = sorted.windows(2).find(|p| p[0] == p[1]) {
            return Err(Error::invalid(format!("duplicate word ({})", pair[0])));
        }
        let d_min = exact_min_distance(&words);
        Ok(CodeBook { m, words, d_min })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn words(&self) -> &[Codeword] {
        &self.words
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Cached minimum distance; `None` for fewer than two words.
    pub fn d_min(&self) -> Option<usize> {
        self.d_min
    }

    /// Position of `word` in the codebook, if present.
    pub fn index_of(&self, word: &Codeword) -> Option<usize> {
        self.words.iter().position(|w| w == word)
    }

    /// Serializes to the plain-text codebook format: a header line
    /// `M d_min count` (`d_min` is `-` below two words) followed by one
    /// space-separated 1-based word per line.
    pub fn to_text(&self) -> String {
        let d = self
            .d_min
            .map(|d| d.to_string())
            .unwrap_or_else(|| "-".into());
        let mut out = format!("{} {} {}\n", self.m, d, self.words.len());
        for w in &self.words {
            out.push_str(&w.to_string());
            out.push('\n');
        }
        out
    }

    /// Parses the format written by [`CodeBook::to_text`], preserving word order.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (hl, header) = lines.next().ok_or_else(|| Error::parse(1, "missing header"))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::parse(hl + 1, "header must be \"M d_min count\""));
        }
        let m: usize = fields[0]
            .parse()
            .map_err(|_| Error::parse(hl + 1, "bad M"))?;
        let d_declared: Option<usize> = match fields[1] {
            "-" => None,
            s => Some(s.parse().map_err(|_| Error::parse(hl + 1, "bad d_min"))?),
        };
        let count: usize = fields[2]
            .parse()
            .map_err(|_| Error::parse(hl + 1, "bad count"))?;
        let mut words = Vec::with_capacity(count);
        for (ln, line) in lines {
            let mut symbols = Vec::with_capacity(m);
            for tok in line.split(' ') {
                symbols.push(
                    tok.parse::<u8>()
                        .map_err(|_| Error::parse(ln + 1, format!("bad symbol {tok:?}")))?,
                );
            }
            let w = Codeword::new(symbols).map_err(|e| Error::parse(ln + 1, e.to_string()))?;
            words.push(w);
        }
        if words.len() != count {
            return Err(Error::parse(
                hl + 1,
                format!("header declares {count} words, found {}", words.len()),
            ));
        }
        let book = CodeBook::with_order(m, words).map_err(|e| Error::parse(hl + 1, e.to_string()))?;
        if book.d_min != d_declared {
            return Err(Error::parse(
                hl + 1,
                format!(
                    "declared d_min {} but words have {}",
                    fields[1],
                    book.d_min.map(|d| d.to_string()).unwrap_or_else(|| "-".into())
                ),
            ));
        }
        Ok(book)
    }
}

fn exact_min_distance(words: &[Codeword]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, a) in words.iter().enumerate() {
        for b in &words[i + 1..] {
            let d = slice_distance(a.symbols(), b.symbols());
            best = Some(best.map_or(d, |x| x.min(d)));
        }
    }
    best
}

/// Exact minimum pairwise Hamming distance, recomputed from the words.
pub fn min_distance(code: &CodeBook) -> Result<usize> {
    exact_min_distance(code.words()).ok_or(Error::UndefinedDistance(code.len()))
}

/// The alternating group on `m` letters: `m!/2` words at minimum distance 3.
pub fn even_permutation_code(m: usize) -> Result<CodeBook> {
    if m < 3 {
        return Err(Error::invalid(format!("M = {m}: even permutation code needs M >= 3")));
    }
    if m > 10 {
        return Err(Error::Capacity { m, max: 10 });
    }
    let words = perm::all_permutations(m)
        .into_iter()
        .filter(|p| perm::is_even(p))
        .map(|p| Codeword::from_zero_based(&p))
        .collect::<Result<Vec<_>>>()?;
    CodeBook::new(m, words)
}

/// Maps a 0-based message index to its codeword.
pub fn encode(message: usize, code: &CodeBook) -> Result<&Codeword> {
    code.words().get(message).ok_or_else(|| {
        Error::invalid(format!(
            "message index {message} out of range for {} words",
            code.len()
        ))
    })
}

fn canned(m: usize, rows: &[&[u8]]) -> CodeBook {
    let words = rows
        .iter()
        .map(|r| Codeword::new(r.to_vec()).expect("canned word is a permutation"))
        .collect();
    CodeBook::with_order(m, words).expect("canned code is valid")
}

/// Four-word `M = 4` code with `d_min = 4`.
pub fn example_code_m4() -> CodeBook {
    canned(4, &[&[1, 2, 3, 4], &[2, 1, 4, 3], &[3, 4, 1, 2], &[4, 3, 2, 1]])
}

/// Twelve-word `M = 4` code with `d_min = 3`, in its published message order.
pub fn table1_code() -> CodeBook {
    canned(
        4,
        &[
            &[1, 2, 3, 4],
            &[1, 3, 4, 2],
            &[2, 1, 4, 3],
            &[2, 4, 3, 1],
            &[3, 1, 2, 4],
            &[3, 4, 1, 2],
            &[4, 2, 1, 3],
            &[4, 3, 2, 1],
            &[1, 4, 2, 3],
            &[2, 3, 1, 4],
            &[3, 2, 4, 1],
            &[4, 1, 3, 2],
        ],
    )
}

/// The two `M = 3` codebooks: all six permutations (`d_min = 2`) and the
/// three cyclic shifts (`d_min = 3`).
pub fn table2_codes() -> (CodeBook, CodeBook) {
    (
        canned(
            3,
            &[
                &[1, 2, 3],
                &[1, 3, 2],
                &[2, 1, 3],
                &[2, 3, 1],
                &[3, 1, 2],
                &[3, 2, 1],
            ],
        ),
        canned(3, &[&[1, 2, 3], &[2, 3, 1], &[3, 1, 2]]),
    )
}

/// Published code sizes for `M = 2..=5`, `d = 2..=M`, as `(M, d, |C|)`.
pub const TABLE3: [(usize, usize, usize); 10] = [
    (2, 2, 2),
    (3, 2, 6),
    (3, 3, 3),
    (4, 2, 24),
    (4, 3, 12),
    (4, 4, 4),
    (5, 2, 120),
    (5, 3, 60),
    (5, 4, 20),
    (5, 5, 5),
];

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &[u8]) -> Codeword {
        Codeword::new(s.to_vec()).unwrap()
    }

    #[test]
    fn hamming_examples() {
        assert_eq!(hamming_distance(&w(&[1, 2, 3, 4]), &w(&[1, 2, 3, 4])).unwrap(), 0);
        assert_eq!(hamming_distance(&w(&[1, 2, 3, 4]), &w(&[2, 1, 4, 3])).unwrap(), 4);
        assert_eq!(hamming_distance(&w(&[1, 2, 3]), &w(&[1, 3, 2])).unwrap(), 2);
        assert!(matches!(
            hamming_distance(&w(&[1, 2, 3]), &w(&[1, 2, 3, 4])),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn codeword_validation() {
        assert!(Codeword::new(vec![1, 1, 2]).is_err());
        assert!(Codeword::new(vec![0, 1, 2]).is_err());
        assert!(Codeword::new(vec![1, 2, 4]).is_err());
        assert!(Codeword::new(vec![]).is_err());
        assert_eq!("3, 4,1 2".parse::<Codeword>().unwrap(), w(&[3, 4, 1, 2]));
    }

    #[test]
    fn bound_examples() {
        assert_eq!(cardinality_bound(4, 3).unwrap(), 12);
        assert_eq!(cardinality_bound(5, 5).unwrap(), 5);
        assert_eq!(cardinality_bound(2, 2).unwrap(), 2);
        assert_eq!(cardinality_bound(5, 4).unwrap(), 20);
        assert_eq!(cardinality_bound(3, 2).unwrap(), 6);
        assert_eq!(cardinality_bound(20, 2).unwrap(), 2_432_902_008_176_640_000);
        assert_eq!(cardinality_bound(20, 3).unwrap(), 1_216_451_004_088_320_000);
        assert!(matches!(cardinality_bound(4, 1), Err(Error::InvalidArgument(_))));
        assert!(matches!(cardinality_bound(4, 5), Err(Error::InvalidArgument(_))));
        assert!(matches!(cardinality_bound(1, 1), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn bound_overflow_is_reported() {
        assert!(cardinality_bound(MAX_BOUND_M, 2).is_ok());
        assert!(matches!(cardinality_bound(40, 2), Err(Error::Overflow(_))));
    }

    #[test]
    fn published_codes_distances() {
        assert_eq!(min_distance(&table1_code()).unwrap(), 3);
        assert_eq!(table1_code().len(), 12);
        assert_eq!(min_distance(&example_code_m4()).unwrap(), 4);
        let (full, cyclic) = table2_codes();
        assert_eq!(min_distance(&full).unwrap(), 2);
        assert_eq!(min_distance(&cyclic).unwrap(), 3);
    }

    #[test]
    fn min_distance_needs_two_words() {
        let one = CodeBook::new(3, vec![Codeword::identity(3)]).unwrap();
        assert_eq!(one.d_min(), None);
        assert_eq!(min_distance(&one), Err(Error::UndefinedDistance(1)));
    }

    #[test]
    fn codebook_rejects_bad_words() {
        assert!(CodeBook::new(3, vec![Codeword::identity(3), Codeword::identity(3)]).is_err());
        assert!(CodeBook::new(3, vec![Codeword::identity(4)]).is_err());
    }

    #[test]
    fn even_permutation_codes() {
        let (_, cyclic) = table2_codes();
        let a3 = even_permutation_code(3).unwrap();
        assert_eq!(a3.words(), CodeBook::new(3, cyclic.words().to_vec()).unwrap().words());
        for (m, size) in [(3, 3), (4, 12), (5, 60), (6, 360)] {
            let c = even_permutation_code(m).unwrap();
            assert_eq!(c.len(), size);
            assert_eq!(min_distance(&c).unwrap(), 3);
        }
        assert!(even_permutation_code(2).is_err());
    }

    #[test]
    fn encode_examples() {
        assert_eq!(encode(2, &example_code_m4()).unwrap(), &w(&[3, 4, 1, 2]));
        assert_eq!(encode(0, &table1_code()).unwrap(), &w(&[1, 2, 3, 4]));
        assert_eq!(encode(11, &table1_code()).unwrap(), &w(&[4, 1, 3, 2]));
        assert!(encode(12, &table1_code()).is_err());
    }

    #[test]
    fn text_format() {
        let t = table1_code().to_text();
        assert!(t.starts_with("4 3 12\n1 2 3 4\n1 3 4 2\n"));
        assert_eq!(CodeBook::from_text(&t).unwrap(), table1_code());
        assert!(CodeBook::from_text("4 4 12\n1 2 3 4\n").is_err());
        assert!(CodeBook::from_text("4 2 1\n1 2 3 4\n").is_err());
        assert!(CodeBook::from_text("4 2 2\n1 2 3 4\n1 2  4 3\n").is_err());
        let single = CodeBook::new(3, vec![Codeword::identity(3)]).unwrap();
        assert_eq!(single.to_text(), "3 - 1\n1 2 3\n");
        assert_eq!(CodeBook::from_text(&single.to_text()).unwrap(), single);
    }
}
