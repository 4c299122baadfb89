use std::path::PathBuf;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use permfsk_core::permcode::{
    example_code_m4, search_max_code, table1_code, table2_codes, Budget, CodeBook,
};
use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Canned {
    /// Four words, M = 4, d_min = 4.
    Example4,
    /// Twelve words, M = 4, d_min = 3, published order.
    Table1,
    /// All permutations of three letters.
    Table2D2,
    /// Cyclic shifts of (1, 2, 3).
    Table2D3,
}

impl Canned {
    pub fn code(self) -> CodeBook {
        match self {
            Canned::Example4 => example_code_m4(),
            Canned::Table1 => table1_code(),
            Canned::Table2D2 => table2_codes().0,
            Canned::Table2D3 => table2_codes().1,
        }
    }
}

/// Where a codebook comes from: a file, a built-in table, or an exact search.
#[derive(Args, Clone, Debug, Default)]
pub struct CodeSourceArgs {
    /// Codebook file ("M d_min count" header, one word per line).
    #[arg(long, conflicts_with_all = ["canned", "m"])]
    pub code_file: Option<PathBuf>,
    /// Built-in codebook.
    #[arg(long, value_enum, conflicts_with = "m")]
    pub canned: Option<Canned>,
    /// Word length for a searched codebook.
    #[arg(short = 'M', requires = "d")]
    pub m: Option<usize>,
    /// Minimum distance for a searched codebook.
    #[arg(short = 'd')]
    pub d: Option<usize>,
    /// Give up the code search after this many seconds.
    #[arg(long, default_value_t = 600.0)]
    pub max_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum CodeSource {
    File { path: PathBuf },
    Canned { name: Canned },
    Searched { m: usize, d: usize, proven_optimal: bool },
}

impl CodeSourceArgs {
    pub fn is_set(&self) -> bool {
        self.code_file.is_some() || self.canned.is_some() || self.m.is_some()
    }

    pub fn resolve(&self) -> Result<(CodeBook, CodeSource)> {
        if let Some(path) = &self.code_file {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading codebook {}", path.display()))?;
            let code = CodeBook::from_text(&text)
                .with_context(|| format!("parsing codebook {}", path.display()))?;
            return Ok((code, CodeSource::File { path: path.clone() }));
        }
        if let Some(name) = self.canned {
            return Ok((name.code(), CodeSource::Canned { name }));
        }
        if let (Some(m), Some(d)) = (self.m, self.d) {
            let report = search_max_code(m, d, budget(self.max_seconds)?)?;
            let proven_optimal = report.proven_optimal;
            return Ok((report.best_code, CodeSource::Searched { m, d, proven_optimal }));
        }
        bail!("no codebook given: use --code-file, --canned, or -M/-d")
    }
}

pub fn budget(max_seconds: f64) -> Result<Budget> {
    if !(max_seconds > 0.0 && max_seconds.is_finite()) {
        bail!("--max-seconds must be a positive number");
    }
    Ok(Budget::time(Duration::from_secs_f64(max_seconds)))
}
