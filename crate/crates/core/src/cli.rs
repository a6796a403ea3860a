//! Command-line driver. The binary is a thin wrapper around [`run`].

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::corpus::{
    fit_on_corpus, generate_corpus, load_corpus, oracle_from_corpus, write_corpus, CorpusRecord,
};
use crate::decoder::DecodeRecord;
use crate::error::{Error, Result};
use crate::eval::{self, length_score_scatter, scatter_csv};
use crate::model::{HashModel, HashModelSpec, Stepper, TrieLattice};
use crate::predict::RatioPredictor;
use crate::stopping;
use crate::sweep::{beam_sweep, decode_corpus, decode_record, sweep_csv};
use crate::types::{DecodeConfig, ScoringMethod, Stopping, TokenId, Vocab};

#[derive(Debug, Parser)]
#[command(
    name = "beamcurse",
    version,
    about = "Beam search with length-aware rescoring and optimal stopping"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic corpus whose references are greedy hash-model outputs.
    GenCorpus(GenCorpusArgs),
    /// Decode a corpus and write one JSON result per sentence.
    Decode(DecodeArgs),
    /// Decode a corpus for every (method, beam) pair and write a CSV table.
    Sweep(SweepArgs),
    /// Corpus BLEU of hypotheses against references.
    Bleu(BleuArgs),
    /// Fit a generation ratio by least squares through the origin.
    FitRatio(FitRatioArgs),
    /// Mean first/second/third </eos> steps over decode output.
    Stats(StatsArgs),
    /// Length vs. raw score of every finished candidate for one sentence.
    Scatter(ScatterArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    Hash,
    Lattice,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodName {
    Default,
    LengthNorm,
    Gnmt,
    WordReward,
    Bwr,
    Adar,
    BpNorm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StoppingName {
    Topmost,
    BFinished,
    Maxlen,
    Optimal,
}

impl From<StoppingName> for Stopping {
    fn from(s: StoppingName) -> Self {
        match s {
            StoppingName::Topmost => Stopping::TopmostFinished,
            StoppingName::BFinished => Stopping::BFinished,
            StoppingName::Maxlen => Stopping::MaxLen,
            StoppingName::Optimal => Stopping::Optimal,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    #[arg(long, value_enum, default_value = "hash")]
    pub model: ModelKind,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Hash-model vocabulary size (ids 0 and 1 are <s> and </eos>).
    #[arg(long, default_value_t = 50)]
    pub vocab: u32,
    #[arg(long)]
    pub lattice: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    pub temperature: f64,
    #[arg(long, default_value_t = 0.95, allow_negative_numbers = true)]
    pub eos_base: f64,
    #[arg(long, default_value_t = 0.08, allow_negative_numbers = true)]
    pub eos_slope: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub eos_late_slope: f64,
}

#[derive(Debug, Clone, Args)]
pub struct LengthArgs {
    #[arg(long, default_value_t = 2.0)]
    pub max_len_factor: f64,
    #[arg(long, default_value_t = 10)]
    pub max_len_offset: usize,
}

#[derive(Debug, Clone, Args)]
pub struct InputArgs {
    /// Corpus JSONL: {"src": [...], "refs": [[...], ...]} per line.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// A single inline source sentence, comma separated, instead of --corpus.
    #[arg(long, value_delimiter = ',', conflicts_with = "corpus")]
    pub src: Option<Vec<TokenId>>,
}

#[derive(Debug, Args)]
pub struct GenCorpusArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 200)]
    pub n: usize,
    #[arg(long, default_value_t = 50)]
    pub vocab: u32,
    #[arg(long, default_value_t = 5)]
    pub min_len: usize,
    #[arg(long, default_value_t = 25)]
    pub max_len: usize,
    #[arg(long, default_value_t = 1.0)]
    pub temperature: f64,
    #[arg(long, default_value_t = 0.95, allow_negative_numbers = true)]
    pub eos_base: f64,
    #[arg(long, default_value_t = 0.08, allow_negative_numbers = true)]
    pub eos_slope: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub eos_late_slope: f64,
    #[command(flatten)]
    pub lengths: LengthArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DecodeArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum, default_value = "default")]
    pub method: MethodName,
    #[arg(long, default_value_t = 5)]
    pub beam: usize,
    #[arg(long, value_enum, default_value = "maxlen")]
    pub stopping: StoppingName,
    /// fixed:GR, fit:CORPUS_PATH or oracle.
    #[arg(long, default_value = "fixed:1.0")]
    pub predictor: String,
    #[arg(short = 'r', allow_negative_numbers = true)]
    pub r: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[command(flatten)]
    pub lengths: LengthArgs,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "default")]
    pub methods: Vec<MethodName>,
    #[arg(long, value_delimiter = ',', default_value = "1,2,5,10,20,40")]
    pub beams: Vec<usize>,
    #[arg(long, value_enum, default_value = "maxlen")]
    pub stopping: StoppingName,
    #[arg(long, default_value = "fixed:1.0")]
    pub predictor: String,
    /// Word-reward values; one row set per value for word-reward and bwr.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub grid_r: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub grid_alpha: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub grid_beta: Vec<f64>,
    #[command(flatten)]
    pub lengths: LengthArgs,
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BleuArgs {
    /// Decode output (`tokens` field) or a corpus (first reference is used).
    #[arg(long)]
    pub hyp: PathBuf,
    /// Corpus (`refs` field) or decode output.
    #[arg(long = "ref")]
    pub reference: PathBuf,
    /// Id stripped from the end of decoded sequences before scoring.
    #[arg(long, default_value_t = 1)]
    pub eos: TokenId,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitRatioArgs {
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Decode output JSONL.
    #[arg(long)]
    pub results: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ScatterArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub input: InputArgs,
    /// Which corpus line to decode.
    #[arg(long, default_value_t = 0)]
    pub index: usize,
    #[arg(long, default_value_t = 80)]
    pub beam: usize,
    #[command(flatten)]
    pub lengths: LengthArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `args` (including the program name) and runs the command, writing
/// to `stdout` when no `--out` is given.
pub fn run<I, T>(args: I, stdout: &mut dyn Write) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e)
            if matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            ) =>
        {
            write!(stdout, "{e}")?;
            return Ok(());
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or_default();
            return Err(Error::Usage(
                first.trim_start_matches("error: ").to_string(),
            ));
        }
    };
    execute(cli.command, stdout)
}

pub fn execute(command: Command, stdout: &mut dyn Write) -> Result<()> {
    match command {
        Command::GenCorpus(a) => gen_corpus(a, stdout),
        Command::Decode(a) => decode_cmd(a, stdout),
        Command::Sweep(a) => sweep_cmd(a, stdout),
        Command::Bleu(a) => bleu_cmd(a, stdout),
        Command::FitRatio(a) => fit_ratio_cmd(a, stdout),
        Command::Stats(a) => stats_cmd(a, stdout),
        Command::Scatter(a) => scatter_cmd(a, stdout),
    }
}

fn with_output(
    out: Option<&Path>,
    stdout: &mut dyn Write,
    body: impl FnOnce(&mut dyn Write) -> Result<()>,
) -> Result<()> {
    match out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            body(&mut w)?;
            w.flush()?;
            Ok(())
        }
        None => body(stdout),
    }
}

fn write_json_line(w: &mut dyn Write, value: &impl Serialize) -> Result<()> {
    serde_json::to_writer(&mut *w, value).map_err(std::io::Error::from)?;
    w.write_all(b"\n")?;
    Ok(())
}

fn length_config(l: &LengthArgs, beam: usize, stopping: Stopping) -> DecodeConfig {
    DecodeConfig {
        beam_size: beam,
        max_len_factor: l.max_len_factor,
        max_len_offset: l.max_len_offset,
        stopping,
    }
}

fn build_model(args: &ModelArgs) -> Result<Box<dyn Stepper>> {
    match args.model {
        ModelKind::Hash => {
            let spec = HashModelSpec {
                temperature: args.temperature,
                eos_base: args.eos_base,
                eos_slope: args.eos_slope,
                eos_late_slope: args.eos_late_slope,
                ..HashModelSpec::new(args.seed, Vocab::with_size(args.vocab)?)
            };
            Ok(Box::new(HashModel::new(spec)?))
        }
        ModelKind::Lattice => {
            let path = args
                .lattice
                .as_ref()
                .ok_or_else(|| Error::Usage("--model lattice requires --lattice PATH".into()))?;
            Ok(Box::new(TrieLattice::load(path)?))
        }
    }
}

fn load_input(input: &InputArgs) -> Result<Vec<CorpusRecord>> {
    match (&input.corpus, &input.src) {
        (Some(path), _) => load_corpus(path),
        (None, Some(src)) => Ok(vec![CorpusRecord::new(src.clone(), vec![vec![]])?]),
        (None, None) => Err(Error::Usage("one of --corpus or --src is required".into())),
    }
}

/// Parses `fixed:GR`, `fit:PATH` or `oracle` (built from `corpus`).
pub fn parse_predictor(spec: &str, corpus: &[CorpusRecord]) -> Result<RatioPredictor> {
    if spec == "oracle" {
        return Ok(oracle_from_corpus(corpus));
    }
    if let Some(gr) = spec.strip_prefix("fixed:") {
        let gr: f64 = gr
            .parse()
            .map_err(|_| Error::Usage(format!("bad generation ratio in {spec:?}")))?;
        return RatioPredictor::fixed(gr).map_err(|e| Error::Usage(e.to_string()));
    }
    if let Some(path) = spec.strip_prefix("fit:") {
        return fit_on_corpus(&load_corpus(path)?);
    }
    Err(Error::Usage(format!(
        "unknown predictor {spec:?}; expected fixed:GR, fit:PATH or oracle"
    )))
}

/// Builds a scoring method, requiring exactly the hyperparameters it uses.
pub fn build_method(
    name: MethodName,
    r: Option<f64>,
    alpha: Option<f64>,
    beta: Option<f64>,
) -> Result<ScoringMethod> {
    let need_r = || r.ok_or_else(|| Error::Usage(format!("method {name:?} requires -r")));
    Ok(match name {
        MethodName::Default => ScoringMethod::Default,
        MethodName::LengthNorm => ScoringMethod::LengthNorm,
        MethodName::Gnmt => ScoringMethod::Gnmt {
            alpha: alpha.ok_or_else(|| Error::Usage("method gnmt requires --alpha".into()))?,
            beta: beta.ok_or_else(|| Error::Usage("method gnmt requires --beta".into()))?,
        },
        MethodName::WordReward => ScoringMethod::WordReward { r: need_r()? },
        MethodName::Bwr => ScoringMethod::BoundedWordReward { r: need_r()? },
        MethodName::Adar => ScoringMethod::BoundedAdaptiveReward,
        MethodName::BpNorm => ScoringMethod::BpNorm,
    })
}

fn gen_corpus(a: GenCorpusArgs, stdout: &mut dyn Write) -> Result<()> {
    let spec = HashModelSpec {
        temperature: a.temperature,
        eos_base: a.eos_base,
        eos_slope: a.eos_slope,
        eos_late_slope: a.eos_late_slope,
        ..HashModelSpec::new(a.seed, Vocab::with_size(a.vocab)?)
    };
    let model = HashModel::new(spec)?;
    let cfg = length_config(&a.lengths, 1, Stopping::TopmostFinished);
    let corpus = generate_corpus(&model, a.seed, a.n, (a.min_len, a.max_len), &cfg)?;
    with_output(a.out.as_deref(), stdout, |w| write_corpus(w, &corpus))
}

fn decode_cmd(a: DecodeArgs, stdout: &mut dyn Write) -> Result<()> {
    let method = build_method(a.method, a.r, a.alpha, a.beta)?;
    let stopping: Stopping = a.stopping.into();
    stopping::validate(stopping, &method)?;
    let cfg = length_config(&a.lengths, a.beam, stopping);
    cfg.validate()?;
    let model = build_model(&a.model)?;
    let corpus = load_input(&a.input)?;
    let predictor = parse_predictor(&a.predictor, &corpus)?;
    let results = decode_corpus(&*model, &corpus, &cfg, &method, &predictor, a.jobs)?;
    with_output(a.out.as_deref(), stdout, |w| {
        results
            .iter()
            .try_for_each(|r| write_json_line(w, &DecodeRecord::from(r)))
    })
}

fn sweep_methods(a: &SweepArgs) -> Result<Vec<ScoringMethod>> {
    let or_single = |grid: &[f64]| -> Vec<Option<f64>> {
        if grid.is_empty() {
            vec![None]
        } else {
            grid.iter().copied().map(Some).collect()
        }
    };
    let mut out = Vec::new();
    for &name in &a.methods {
        match name {
            MethodName::WordReward | MethodName::Bwr => {
                for r in or_single(&a.grid_r) {
                    out.push(build_method(name, r, None, None)?);
                }
            }
            MethodName::Gnmt => {
                for alpha in or_single(&a.grid_alpha) {
                    for beta in or_single(&a.grid_beta) {
                        out.push(build_method(name, None, alpha, beta)?);
                    }
                }
            }
            _ => out.push(build_method(name, None, None, None)?),
        }
    }
    Ok(out)
}

fn sweep_cmd(a: SweepArgs, stdout: &mut dyn Write) -> Result<()> {
    let methods = sweep_methods(&a)?;
    let stopping: Stopping = a.stopping.into();
    for m in &methods {
        stopping::validate(stopping, m)?;
    }
    let cfg = length_config(&a.lengths, 1, stopping);
    let model = build_model(&a.model)?;
    let corpus = load_corpus(&a.corpus)?;
    let predictor = parse_predictor(&a.predictor, &corpus)?;
    let rows = beam_sweep(
        &*model, &corpus, &methods, &a.beams, &cfg, &predictor, a.jobs,
    )?;
    with_output(a.out.as_deref(), stdout, |w| {
        w.write_all(sweep_csv(&rows).as_bytes())?;
        Ok(())
    })
}

#[derive(serde::Deserialize)]
struct LooseRecord {
    tokens: Option<Vec<TokenId>>,
    refs: Option<Vec<Vec<TokenId>>>,
}

fn read_loose(path: &Path) -> Result<Vec<LooseRecord>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: LooseRecord = serde_json::from_str(&line)
            .map_err(|e| Error::Format(format!("{}:{}: {e}", path.display(), i + 1)))?;
        if rec.tokens.is_none() && rec.refs.is_none() {
            return Err(Error::Format(format!(
                "{}:{}: expected a `tokens` or `refs` field",
                path.display(),
                i + 1
            )));
        }
        out.push(rec);
    }
    Ok(out)
}

fn bleu_cmd(a: BleuArgs, stdout: &mut dyn Write) -> Result<()> {
    let hyps: Vec<Vec<TokenId>> = read_loose(&a.hyp)?
        .into_iter()
        .map(|r| {
            let mut toks = match (r.tokens, r.refs) {
                (Some(t), _) => t,
                (None, Some(refs)) => refs.into_iter().next().unwrap_or_default(),
                (None, None) => unreachable!(),
            };
            // decoder output ends with </eos>; references never do
            if toks.last() == Some(&a.eos) {
                toks.pop();
            }
            toks
        })
        .collect();
    let refs: Vec<Vec<Vec<TokenId>>> = read_loose(&a.reference)?
        .into_iter()
        .map(|r| match (r.refs, r.tokens) {
            (Some(refs), _) => refs,
            (None, Some(mut t)) => {
                if t.last() == Some(&a.eos) {
                    t.pop();
                }
                vec![t]
            }
            (None, None) => unreachable!(),
        })
        .collect();
    let stats = eval::bleu(&hyps, &refs)?;
    with_output(a.out.as_deref(), stdout, |w| write_json_line(w, &stats))
}

#[derive(Serialize)]
struct FitOutput {
    gr: f64,
    pairs: usize,
}

fn fit_ratio_cmd(a: FitRatioArgs, stdout: &mut dyn Write) -> Result<()> {
    let corpus = load_corpus(&a.corpus)?;
    let gr = fit_on_corpus(&corpus)?
        .ratio()
        .expect("least squares has a ratio");
    with_output(a.out.as_deref(), stdout, |w| {
        write_json_line(
            w,
            &FitOutput {
                gr,
                pairs: corpus.len(),
            },
        )
    })
}

#[derive(serde::Deserialize)]
struct ResultLine {
    tokens: Vec<TokenId>,
    stop_step: usize,
    eos_steps: Vec<usize>,
}

#[derive(Serialize)]
struct StatsOutput {
    sentences: usize,
    mean_eos_steps: [Option<f64>; 3],
    eos_slot_counts: [usize; 3],
    mean_len: f64,
    mean_stop_step: f64,
}

fn stats_cmd(a: StatsArgs, stdout: &mut dyn Write) -> Result<()> {
    let reader = BufReader::new(File::open(&a.results)?);
    let mut lines = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: ResultLine = serde_json::from_str(&line)
            .map_err(|e| Error::Format(format!("line {}: {e}", i + 1)))?;
        lines.push(rec);
    }
    let stats = eval::eos_stats(lines.iter().map(|l| l.eos_steps.as_slice()));
    let n = lines.len().max(1) as f64;
    let out = StatsOutput {
        sentences: lines.len(),
        mean_eos_steps: stats.means,
        eos_slot_counts: stats.counts,
        mean_len: lines.iter().map(|l| l.tokens.len() as f64).sum::<f64>() / n,
        mean_stop_step: lines.iter().map(|l| l.stop_step as f64).sum::<f64>() / n,
    };
    with_output(a.out.as_deref(), stdout, |w| write_json_line(w, &out))
}

fn scatter_cmd(a: ScatterArgs, stdout: &mut dyn Write) -> Result<()> {
    let model = build_model(&a.model)?;
    let corpus = load_input(&a.input)?;
    let record = corpus.get(a.index).ok_or_else(|| {
        Error::Usage(format!("--index {} is past the end of the corpus", a.index))
    })?;
    let cfg = length_config(&a.lengths, a.beam, Stopping::MaxLen);
    cfg.validate()?;
    let result = decode_record(
        &*model,
        record,
        &cfg,
        &ScoringMethod::Default,
        &RatioPredictor::Fixed(1.0),
    )?;
    let csv = scatter_csv(&length_score_scatter(&result));
    with_output(a.out.as_deref(), stdout, |w| {
        w.write_all(csv.as_bytes())?;
        Ok(())
    })
}
