use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use permfsk_core::channel::{apply_scenario_symbolic, link_budget_table, ChannelScenario, LinkBudget};
use permfsk_core::codec::{decode_max_agreement, DemodFrame};
use permfsk_core::modem::derive_params;
use permfsk_core::permcode::{cardinality_bound, encode, search_max_code, table2_codes, Codeword, TABLE3};
use permfsk_core::sim::{Experiment, PointResult};
use serde::Serialize;

use crate::source::{budget, CodeSource, CodeSourceArgs};
use crate::{Usage, EXIT_UNPROVEN};

#[derive(Parser, Debug)]
#[command(name = "permfsk", version, about = "Permutation-coded M-ary FSK for power-line links")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum TableId {
    All,
    #[value(name = "2")]
    Two,
    #[value(name = "3")]
    Three,
    #[value(name = "4")]
    Four,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Print the upper bound M!/(d-1)! on the code size.
    Bound {
        #[arg(short = 'M')]
        m: usize,
        #[arg(short = 'd')]
        d: usize,
    },
    /// Search for a largest code and write it in codebook format.
    Search {
        #[arg(short = 'M')]
        m: usize,
        #[arg(short = 'd')]
        d: usize,
        #[arg(long, default_value_t = 3600.0)]
        max_seconds: f64,
        /// Node limit; makes an unfinished search reproducible.
        #[arg(long)]
        max_nodes: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print a JSON report (with the words) instead of the codebook file.
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
    /// Reproduce the code-size and link-budget tables as CSV.
    Tables {
        #[arg(long, value_enum, default_value_t = TableId::All)]
        table: TableId,
        #[arg(long, default_value_t = 600.0)]
        max_seconds: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Bandwidth and SNR lower bound per minimum distance.
    Linkbudget {
        #[arg(short = 'M', default_value_t = 4)]
        m: usize,
        #[arg(long, default_value_t = 4800.0)]
        bitrate: f64,
        /// Use this codebook's size and distance instead of searching every d.
        #[arg(long)]
        code_file: Option<PathBuf>,
        #[arg(long, default_value_t = 25.0)]
        power_w: f64,
        #[arg(long, default_value_t = 500.0)]
        length_m: f64,
        #[arg(long, default_value_t = 600.0)]
        max_seconds: f64,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Map a 1-based message number to its codeword.
    Encode {
        #[command(flatten)]
        code: CodeSourceArgs,
        #[arg(long)]
        message: usize,
    },
    /// Decode a demodulator frame, or a word passed through a scenario.
    Decode {
        #[command(flatten)]
        code: CodeSourceArgs,
        /// Frame file: one slot per line, comma-separated tones, "-" if empty.
        #[arg(long, conflicts_with = "word")]
        frame: Option<PathBuf>,
        /// Transmitted word, e.g. "3,4,1,2".
        #[arg(long, requires = "scenario")]
        word: Option<String>,
        /// Scenario JSON file.
        #[arg(long)]
        scenario: Option<PathBuf>,
    },
    /// Seeded Monte Carlo run through channel, detector and decoder.
    Simulate {
        #[command(flatten)]
        code: CodeSourceArgs,
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// SNR points in dB: a list "8,10,12" or a range "8:16:2".
        #[arg(long)]
        snr_db: Option<String>,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 4800.0)]
        bitrate: f64,
        /// Threshold margin c in sqrt(Es)/2 + c * sigma.
        #[arg(long, default_value_t = 0.0)]
        noise_margin: f64,
        /// Worker threads (results do not depend on this).
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

pub fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Bound { m, d } => {
            println!("{}", cardinality_bound(m, d)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Search {
            m,
            d,
            max_seconds,
            max_nodes,
            out,
            format,
        } => cmd_search(m, d, max_seconds, max_nodes, out.as_deref(), format),
        Command::Tables { table, max_seconds, out } => cmd_tables(table, max_seconds, out.as_deref()),
        Command::Linkbudget {
            m,
            bitrate,
            code_file,
            power_w,
            length_m,
            max_seconds,
            format,
            out,
        } => {
            let budget = LinkBudget {
                s_in: power_w,
                distance_m: length_m,
                ..LinkBudget::default()
            };
            cmd_linkbudget(m, bitrate, code_file.as_deref(), &budget, max_seconds, format, out.as_deref())
        }
        Command::Encode { code, message } => {
            let (book, _) = code.resolve()?;
            if message == 0 {
                bail!(Usage("messages are numbered from 1".into()));
            }
            println!("{}", encode(message - 1, &book)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Decode {
            code,
            frame,
            word,
            scenario,
        } => cmd_decode(&code, frame.as_deref(), word.as_deref(), scenario.as_deref()),
        Command::Simulate {
            code,
            scenario,
            snr_db,
            trials,
            seed,
            bitrate,
            noise_margin,
            threads,
            format,
            out,
        } => {
            let snr_db = snr_db.as_deref().map(parse_snr_list).transpose()?.unwrap_or_default();
            let req = SimRequest {
                code,
                scenario,
                snr_db,
                trials,
                seed,
                bitrate,
                noise_margin,
            };
            cmd_simulate(&req, threads, format, out.as_deref())
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

#[derive(Serialize)]
struct SearchJson<'a> {
    #[serde(flatten)]
    report: &'a permfsk_core::permcode::SearchReport,
    words: Vec<String>,
}

fn cmd_search(
    m: usize,
    d: usize,
    max_seconds: f64,
    max_nodes: Option<u64>,
    out: Option<&Path>,
    format: Option<Format>,
) -> Result<ExitCode> {
    let mut b = budget(max_seconds)?;
    b.max_nodes = max_nodes;
    let report = search_max_code(m, d, b)?;
    eprintln!(
        "M={m} d={d}: |C|={} (bound {}), {} after {} nodes in {:.3}s",
        report.size,
        report.upper_bound,
        if report.proven_optimal { "optimal" } else { "NOT proven optimal" },
        report.nodes_explored,
        report.time_spent.as_secs_f64()
    );
    let text = match format {
        Some(Format::Json) => {
            let words = report.best_code.words().iter().map(|w| w.to_string()).collect();
            let mut s = serde_json::to_string_pretty(&SearchJson { report: &report, words })?;
            s.push('\n');
            s
        }
        Some(Format::Csv) => bail!(Usage("search supports --format json or the default codebook text".into())),
        None => report.best_code.to_text(),
    };
    emit(out, &text)?;
    Ok(if report.proven_optimal {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_UNPROVEN)
    })
}

/// Code sizes per distance for `m`, searched under a per-cell time budget.
fn searched_sizes(m: usize, max_seconds: f64) -> Result<Vec<(usize, usize, bool)>> {
    (2..=m)
        .map(|d| {
            let r = search_max_code(m, d, budget(max_seconds)?)?;
            Ok((d, r.size, r.proven_optimal))
        })
        .collect()
}

fn table3_csv(max_seconds: f64) -> Result<(String, bool)> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["M", "d_min", "size", "published_size", "bound", "proven"])?;
    let mut all_proven = true;
    for (m, d, published) in TABLE3 {
        let r = search_max_code(m, d, budget(max_seconds)?)?;
        all_proven &= r.proven_optimal;
        w.write_record([
            m.to_string(),
            d.to_string(),
            r.size.to_string(),
            published.to_string(),
            r.upper_bound.to_string(),
            r.proven_optimal.to_string(),
        ])?;
    }
    Ok((String::from_utf8(w.into_inner()?)?, all_proven))
}

/// Published link-budget rows as `(d_min, B kHz, SNR dB)`.
const TABLE4: [(usize, u32, u32); 3] = [(2, 16, 40), (3, 21, 37), (4, 38, 27)];

fn table4_csv(max_seconds: f64) -> Result<(String, bool)> {
    let sizes = searched_sizes(4, max_seconds)?;
    let all_proven = sizes.iter().all(|s| s.2);
    let pairs: Vec<(usize, usize)> = sizes.iter().map(|&(d, c, _)| (d, c)).collect();
    let rows = link_budget_table(4800.0, 4, &pairs, &LinkBudget::default())?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["d_min", "code_size", "B_kHz", "SNR_dB", "published_B_kHz", "published_SNR_dB"])?;
    for row in rows {
        let published = TABLE4.iter().find(|p| p.0 == row.d_min);
        w.write_record([
            row.d_min.to_string(),
            row.code_size.to_string(),
            format!("{:.1}", row.bandwidth_khz),
            format!("{:.1}", row.snr_db),
            published.map(|p| p.1.to_string()).unwrap_or_default(),
            published.map(|p| p.2.to_string()).unwrap_or_default(),
        ])?;
    }
    Ok((String::from_utf8(w.into_inner()?)?, all_proven))
}

fn table2_csv() -> Result<String> {
    let (full, cyclic) = table2_codes();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["d_min", "message", "codeword"])?;
    for (d, code) in [(2, &full), (3, &cyclic)] {
        for (i, word) in code.words().iter().enumerate() {
            w.write_record([d.to_string(), (i + 1).to_string(), word.to_string()])?;
        }
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

fn cmd_tables(table: TableId, max_seconds: f64, out: Option<&Path>) -> Result<ExitCode> {
    let mut text = String::new();
    let mut proven = true;
    let sections: &[TableId] = match table {
        TableId::All => &[TableId::Two, TableId::Three, TableId::Four],
        _ => std::slice::from_ref(&table),
    };
    for (i, &t) in sections.iter().enumerate() {
        if sections.len() > 1 {
            if i > 0 {
                text.push('\n');
            }
            let n = match t {
                TableId::Two => 2,
                TableId::Three => 3,
                _ => 4,
            };
            text.push_str(&format!("# table {n}\n"));
        }
        let body = match t {
            TableId::Two => table2_csv()?,
            TableId::Three => {
                let (s, p) = table3_csv(max_seconds)?;
                proven &= p;
                s
            }
            _ => {
                let (s, p) = table4_csv(max_seconds)?;
                proven &= p;
                s
            }
        };
        text.push_str(&body);
    }
    emit(out, &text)?;
    Ok(if proven {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_UNPROVEN)
    })
}

fn cmd_linkbudget(
    m: usize,
    bitrate: f64,
    code_file: Option<&Path>,
    budget_consts: &LinkBudget,
    max_seconds: f64,
    format: Format,
    out: Option<&Path>,
) -> Result<ExitCode> {
    let (pairs, proven) = match code_file {
        Some(path) => {
            let args = CodeSourceArgs {
                code_file: Some(path.to_path_buf()),
                ..Default::default()
            };
            let (code, _) = args.resolve()?;
            if code.m() != m {
                bail!(Usage(format!("codebook has M = {}, but -M {m} was given", code.m())));
            }
            let d = code
                .d_min()
                .ok_or_else(|| Usage("codebook needs at least two words".into()))?;
            (vec![(d, code.len())], true)
        }
        None => {
            let sizes = searched_sizes(m, max_seconds)?;
            let proven = sizes.iter().all(|s| s.2);
            (sizes.into_iter().map(|(d, c, _)| (d, c)).collect(), proven)
        }
    };
    let rows = link_budget_table(bitrate, m, &pairs, budget_consts)?;
    let text = match format {
        Format::Json => serde_json::to_string_pretty(&rows)? + "\n",
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            for row in &rows {
                w.serialize(row)?;
            }
            String::from_utf8(w.into_inner()?)?
        }
    };
    emit(out, &text)?;
    Ok(if proven {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_UNPROVEN)
    })
}

#[derive(Serialize)]
struct DecodeJson {
    kind: permfsk_core::codec::DecisionKind,
    /// 1-based.
    message: Option<usize>,
    codeword: Option<String>,
    /// 1-based.
    candidates: Vec<usize>,
    score: usize,
    frame: Vec<Vec<usize>>,
}

fn read_scenario(path: &Path) -> Result<ChannelScenario> {
    let text = fs::read_to_string(path).with_context(|| format!("reading scenario {}", path.display()))?;
    ChannelScenario::from_json(&text).with_context(|| format!("parsing scenario {}", path.display()))
}

fn cmd_decode(
    code: &CodeSourceArgs,
    frame: Option<&Path>,
    word: Option<&str>,
    scenario: Option<&Path>,
) -> Result<ExitCode> {
    let (book, _) = code.resolve()?;
    let frame = match (frame, word) {
        (Some(path), _) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading frame {}", path.display()))?;
            text.parse::<DemodFrame>()
                .with_context(|| format!("parsing frame {}", path.display()))?
        }
        (None, Some(w)) => {
            let tx: Codeword = w.parse().map_err(|e| Usage(format!("--word: {e}")))?;
            let s = read_scenario(scenario.expect("clap enforces --scenario"))?;
            apply_scenario_symbolic(&tx, &s)?
        }
        (None, None) => bail!(Usage("give --frame FILE or --word W --scenario FILE".into())),
    };
    let d = decode_max_agreement(&frame, &book)?;
    let out = DecodeJson {
        kind: d.kind,
        message: d.message.map(|i| i + 1),
        codeword: d.message.map(|i| book.words()[i].to_string()),
        candidates: d.candidates.iter().map(|i| i + 1).collect(),
        score: d.score,
        frame: frame.to_lists(),
    };
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(ExitCode::SUCCESS)
}

/// Parses "8,10,12" or "start:stop:step" (inclusive of stop).
pub fn parse_snr_list(s: &str) -> Result<Vec<f64>> {
    let bad = || Usage(format!("bad --snr-db {s:?}: use \"8,10,12\" or \"8:16:2\""));
    if s.contains(':') {
        let parts: Vec<f64> = s
            .split(':')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad())?;
        let [start, stop, step] = parts[..] else { bail!(bad()) };
        if !(step > 0.0) || !(stop >= start) || !start.is_finite() || !stop.is_finite() {
            bail!(bad());
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize;
        return Ok((0..=n).map(|i| start + i as f64 * step).collect());
    }
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| bad())?;
    if v.iter().any(|x| !x.is_finite()) {
        bail!(bad());
    }
    Ok(v)
}

pub struct SimRequest {
    pub code: CodeSourceArgs,
    pub scenario: Option<PathBuf>,
    pub snr_db: Vec<f64>,
    pub trials: u64,
    pub seed: u64,
    pub bitrate: f64,
    pub noise_margin: f64,
}

/// Fully resolved experiment description embedded in every result file.
#[derive(Serialize)]
struct ResolvedConfig {
    m: usize,
    bit_rate: f64,
    code: CodeSource,
    code_size: usize,
    d_min: Option<usize>,
    symbol_duration_s: f64,
    bandwidth_hz: f64,
    scenario: ChannelScenario,
    snr_db: Vec<f64>,
    trials: u64,
    seed: u64,
    noise_margin: f64,
    symbol_energy: f64,
}

#[derive(Serialize)]
struct SimJson<'a> {
    config: &'a ResolvedConfig,
    rows: &'a [PointResult],
}

#[derive(Serialize)]
struct CsvRow {
    snr_db: Option<f64>,
    noise_psd: f64,
    trials: u64,
    slots: u64,
    insertions: u64,
    deletions: u64,
    word_errors: u64,
    ties: u64,
    insertion_rate: f64,
    deletion_rate: f64,
    combined_rate: f64,
    approx_rate: Option<f64>,
    word_error_rate: f64,
    tie_rate: f64,
    seed: u64,
}

impl From<&PointResult> for CsvRow {
    fn from(r: &PointResult) -> Self {
        CsvRow {
            snr_db: r.snr_db,
            noise_psd: r.noise_psd,
            trials: r.counts.trials,
            slots: r.counts.slots,
            insertions: r.counts.insertions,
            deletions: r.counts.deletions,
            word_errors: r.counts.word_errors,
            ties: r.counts.ties,
            insertion_rate: r.insertion_rate,
            deletion_rate: r.deletion_rate,
            combined_rate: r.combined_rate,
            approx_rate: r.approx_rate,
            word_error_rate: r.word_error_rate,
            tie_rate: r.tie_rate,
            seed: r.seed,
        }
    }
}

fn cmd_simulate(req: &SimRequest, threads: Option<usize>, format: Format, out: Option<&Path>) -> Result<ExitCode> {
    if req.trials == 0 {
        bail!(Usage("--trials must be at least 1".into()));
    }
    if threads == Some(0) {
        bail!(Usage("--threads must be at least 1".into()));
    }
    let scenario = match &req.scenario {
        Some(p) => read_scenario(p).map_err(|e| Usage(format!("{e:#}")))?,
        None => ChannelScenario::clean(),
    };
    if !req.code.is_set() {
        bail!(Usage("no codebook given: use --code-file, --canned, or -M/-d".into()));
    }
    let (code, source) = req.code.resolve().map_err(|e| Usage(format!("{e:#}")))?;
    let params = derive_params(code.m(), req.bitrate, code.len().max(2), 0.0)?;
    let mut exp = Experiment::new(code.clone(), scenario.clone(), req.trials, req.seed);
    exp.snr_db = req.snr_db.clone();
    exp.noise_margin = req.noise_margin;
    exp.validate().map_err(|e| Usage(e.to_string()))?;

    let config = ResolvedConfig {
        m: code.m(),
        bit_rate: req.bitrate,
        code: source,
        code_size: code.len(),
        d_min: code.d_min(),
        symbol_duration_s: params.symbol_duration,
        bandwidth_hz: params.bandwidth(),
        scenario,
        snr_db: req.snr_db.clone(),
        trials: req.trials,
        seed: req.seed,
        noise_margin: req.noise_margin,
        symbol_energy: exp.symbol_energy,
    };

    let start = Instant::now();
    let rows = match threads {
        Some(t) => exp.run_with_threads(t)?,
        None => exp.run()?,
    };
    let wall = start.elapsed().as_secs_f64();

    let text = match format {
        Format::Json => serde_json::to_string_pretty(&SimJson {
            config: &config,
            rows: &rows,
        })? + "\n",
        Format::Csv => {
            let mut text = format!("# config: {}\n", serde_json::to_string(&config)?);
            let mut w = csv::Writer::from_writer(Vec::new());
            for r in &rows {
                w.serialize(CsvRow::from(r))?;
            }
            text.push_str(&String::from_utf8(w.into_inner()?)?);
            text
        }
    };
    emit(out, &text)?;
    let meta = serde_json::json!({
        "wall_time_s": wall,
        "threads": threads.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get())),
    });
    match out {
        Some(path) => {
            let mut meta_path = path.as_os_str().to_owned();
            meta_path.push(".meta.json");
            fs::write(&meta_path, serde_json::to_string_pretty(&meta)? + "\n")?;
        }
        None => eprintln!("{meta}"),
    }
    Ok(ExitCode::SUCCESS)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snr_lists() {
        assert_eq!(parse_snr_list("8,10, 12").unwrap(), vec![8.0, 10.0, 12.0]);
        assert_eq!(parse_snr_list("8:16:2").unwrap(), vec![8.0, 10.0, 12.0, 14.0, 16.0]);
        assert_eq!(parse_snr_list("0:1:0.5").unwrap(), vec![0.0, 0.5, 1.0]);
        assert!(parse_snr_list("8:16").is_err());
        assert!(parse_snr_list("8:6:1").is_err());
        assert!(parse_snr_list("x").is_err());
        assert!(parse_snr_list("inf").is_err());
    }

    #[test]
    fn table_csvs() {
        let (t3, proven) = table3_csv(60.0).unwrap();
        assert!(proven);
        assert!(t3.lines().any(|l| l.starts_with("5,3,60,60,60,true")));
        let (t4, _) = table4_csv(60.0).unwrap();
        assert!(t4.lines().any(|l| l == "4,4,38.4,26.8,38,27"), "{t4}");
        let t2 = table2_csv().unwrap();
        assert_eq!(t2.lines().count(), 1 + 6 + 3);
        assert!(t2.contains("3,2,2 3 1"));
    }
}
