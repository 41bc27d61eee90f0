//! Command-line front end: argument parsing, run configuration and exit codes.

pub mod commands;
pub mod report;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use continuo::classifier::{Gamma, KernelKind, KernelSpec, MulticlassStrategy, SvmParams};
use continuo::eval::{Scope, VocabMode};
use continuo::features::Representation;
use continuo::griff::GriffOptions;

pub use report::Format;

#[derive(Debug, Parser)]
#[command(name = "continuo", version, about = "Griff extraction and player classification for aligned continuo performances")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write per-performance token files and a vocabulary-size summary.
    Extract(Common),
    /// Stratified k-fold player classification per scope and representation.
    Classify(Common),
    /// Leave-one-out classification of one player's performances.
    Player {
        #[command(flatten)]
        common: Common,
        /// Target player; every player when omitted.
        #[arg(long)]
        player: Option<String>,
    },
    /// Sliding-segment classification, per-note mean accuracy and histograms.
    Segments {
        #[command(flatten)]
        common: Common,
        /// Score to scan; every score when omitted.
        #[arg(long)]
        score: Option<String>,
    },
    /// Griff type statistics and per-player distribution at one score note.
    Note {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        score: String,
        #[arg(long)]
        note: String,
    },
    /// Generate a synthetic corpus on disk.
    Synth {
        /// JSON generator configuration; defaults apply to missing fields.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScopeArg {
    PerScore,
    WholeDataset,
    Both,
}

impl ScopeArg {
    pub fn scopes(self) -> Vec<Scope> {
        match self {
            ScopeArg::PerScore => vec![Scope::PerScore],
            ScopeArg::WholeDataset => vec![Scope::WholeDataset],
            ScopeArg::Both => vec![Scope::PerScore, Scope::WholeDataset],
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Comma-separated: intervals, griff, 2gram, 3gram, ...
    #[arg(long, value_delimiter = ',', default_value = "griff")]
    pub representation: Vec<Representation>,
    /// Shorthand replacing --representation with griff n-grams of this order.
    #[arg(long)]
    pub ngram: Option<usize>,
    #[arg(long, default_value_t = continuo::griff::DEFAULT_WINDOW_MS)]
    pub window_ms: f64,
    #[arg(long)]
    pub keep_duplicates: bool,
    #[arg(long, default_value = "linear")]
    pub kernel: KernelKind,
    #[arg(long, default_value_t = 3)]
    pub degree: u32,
    #[arg(long, default_value = "scale")]
    pub gamma: Gamma,
    #[arg(long, default_value_t = 0.0)]
    pub coef0: f64,
    #[arg(long = "C", default_value_t = 1.0)]
    pub c: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub tol: f64,
    #[arg(long, default_value_t = 10_000_000)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "per-score")]
    pub scope: ScopeArg,
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,8")]
    pub segment_lengths: Vec<usize>,
    /// Output directory; reports go to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[arg(long, default_value = "corpus")]
    pub vocab_mode: VocabMode,
    #[arg(long, default_value = "ovo")]
    pub multiclass: MulticlassStrategy,
}

/// Every setting of a run, echoed into each report.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub manifest: String,
    pub representations: Vec<Representation>,
    pub window_ms: f64,
    pub keep_duplicates: bool,
    pub kernel: KernelSpec,
    #[serde(rename = "C")]
    pub c: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub multiclass: MulticlassStrategy,
    pub folds: usize,
    pub seed: u64,
    pub scope: ScopeArg,
    pub segment_lengths: Vec<usize>,
    pub vocab_mode: VocabMode,
    pub format: Format,
    pub out: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub player: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub score: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// A usage problem detected after parsing; exits with code 1.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

impl RunConfig {
    pub fn new(command: &str, common: &Common) -> anyhow::Result<Self> {
        if !(common.window_ms > 0.0 && common.window_ms.is_finite()) {
            return Err(UsageError(format!("--window-ms must be positive, got {}", common.window_ms)).into());
        }
        if !(common.c > 0.0 && common.c.is_finite()) {
            return Err(UsageError(format!("--C must be positive, got {}", common.c)).into());
        }
        let representations = match common.ngram {
            Some(0) => return Err(UsageError("--ngram must be at least 1".into()).into()),
            Some(1) => vec![Representation::Griffs],
            Some(n) => vec![Representation::NGrams(n)],
            None => {
                let mut r = common.representation.clone();
                r.dedup();
                r
            }
        };
        if representations.is_empty() {
            return Err(UsageError("no representation selected".into()).into());
        }
        let kernel = KernelSpec {
            kind: common.kernel,
            degree: common.degree,
            gamma: common.gamma,
            coef0: common.coef0,
        };
        kernel.validate().map_err(|e| UsageError(e.to_string()))?;
        Ok(Self {
            command: command.to_string(),
            manifest: common.manifest.display().to_string(),
            representations,
            window_ms: common.window_ms,
            keep_duplicates: common.keep_duplicates,
            kernel,
            c: common.c,
            tol: common.tol,
            max_iter: common.max_iter,
            multiclass: common.multiclass,
            folds: common.folds,
            seed: common.seed,
            scope: common.scope,
            segment_lengths: common.segment_lengths.clone(),
            vocab_mode: common.vocab_mode,
            format: common.format,
            out: common.out.as_ref().map(|p| p.display().to_string()),
            player: None,
            score: None,
            note: None,
        })
    }

    pub fn griff_options(&self) -> GriffOptions {
        GriffOptions {
            window_ms: self.window_ms,
            keep_duplicates: self.keep_duplicates,
        }
    }

    pub fn svm(&self) -> SvmParams {
        SvmParams {
            kernel: self.kernel,
            c: self.c,
            tol: self.tol,
            max_iter: self.max_iter,
            multiclass: self.multiclass,
        }
    }
}

pub const EXIT_USAGE: u8 = 1;
pub const EXIT_DATA: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;

/// Maps an error to the process exit code: 1 usage, 2 data, 3 numerical.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<UsageError>() {
            return EXIT_USAGE;
        }
        if let Some(e) = cause.downcast_ref::<continuo::Error>() {
            return match e {
                continuo::Error::InvalidArgument(_) => EXIT_USAGE,
                continuo::Error::NonConvergence { .. } => EXIT_NUMERICAL,
                _ => EXIT_DATA,
            };
        }
    }
    EXIT_DATA
}

pub fn run<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match commands::dispatch(cli.command) {
        Ok(written) => {
            for path in written {
                eprintln!("wrote {path}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
