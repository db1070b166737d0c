//! Command-line front end. Every subcommand reads its inputs, writes its
//! artifacts and records both in the run manifest.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use rulediff_core::agreement::{cohen_kappa, kappa_from_table};
use rulediff_core::diff::{ConfirmedPair, GranularityMap, MethodSpanIndex};
use rulediff_core::mapping::{ground_truth_candidates, MappingConfig, TriggerMode};
use rulediff_core::triage::{Subject, SubjectKind, TriageVerdict, VerdictEntry};
use rulediff_core::warnings::{compute_stats, compute_stats_over};
use rulediff_core::{RuleCatalog, Verdict, WarningIndex, WarningStore};

use crate::formats::{self, FormatError};
use crate::manifest::{digest_file, ManifestError, RunManifest, StageRecord};
use crate::review::ReviewState;
use crate::{parallel, render, sarif, server};

/// Reviewer name used for verdicts written by `diff --auto-accept`.
pub const AUTO_REVIEWER: &str = "auto-accept";

#[derive(Debug, Parser)]
#[command(
    name = "rulediff",
    version,
    about = "Differential testing of static analyzers through paired rules"
)]
pub struct Cli {
    /// Run manifest updated by every pipeline subcommand.
    #[arg(long, global = true, default_value = "rulediff.manifest.json")]
    pub manifest: PathBuf,
    /// Refuse stale inputs and fail when a rerun changes any output.
    #[arg(long, global = true)]
    pub strict: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a rule catalog and write it normalized, with code terms.
    IngestRules(IngestRules),
    /// Validate warning files against catalogs and merge them.
    IngestWarnings(IngestWarnings),
    /// Convert a SARIF 2.1.0 log to warning records.
    ConvertSarif(ConvertSarif),
    /// Score, filter and pair the rules of two catalogs.
    Map(Map),
    /// Compare the warnings of confirmed pairs.
    Diff(Diff),
    /// Per-catalog trigger statistics.
    Stats(Stats),
    /// Findings report from inconsistencies and the verdict log.
    Report(ReportCmd),
    /// Serve the review API.
    Serve(Serve),
    /// Inter-rater agreement.
    Kappa(Kappa),
}

#[derive(Debug, Args)]
pub struct IngestRules {
    #[arg(long)]
    pub catalog: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct IngestWarnings {
    /// Warning JSONL files, merged in order.
    #[arg(long = "warnings", required = true)]
    pub warnings: Vec<PathBuf>,
    /// Catalogs whose rules are accepted.
    #[arg(long = "catalog", required = true)]
    pub catalogs: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Where to write records of unknown rules.
    #[arg(long)]
    pub rejected: Option<PathBuf>,
    #[arg(long)]
    pub keep_duplicates: bool,
}

#[derive(Debug, Args)]
pub struct ConvertSarif {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub project: String,
    /// Tool id to use instead of the driver name.
    #[arg(long)]
    pub tool: Option<String>,
    #[arg(long)]
    pub strip_prefix: Option<String>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct Map {
    #[arg(long)]
    pub catalog_a: PathBuf,
    #[arg(long)]
    pub catalog_b: PathBuf,
    #[arg(long)]
    pub warnings: PathBuf,
    #[arg(long)]
    pub embeddings: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: ConfigOverrides,
    /// Worker threads for scoring; defaults to all cores.
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TriggerModeArg {
    Ratio,
    AbsoluteDifference,
}

#[derive(Debug, Args)]
pub struct ConfigOverrides {
    #[arg(long)]
    pub top_n: Option<usize>,
    #[arg(long)]
    pub lock_threshold: Option<f64>,
    #[arg(long)]
    pub trigger_ratio_max: Option<f64>,
    #[arg(long)]
    pub file_overlap_min: Option<f64>,
    #[arg(long)]
    pub idf_log: Option<bool>,
    #[arg(long)]
    pub stopwords: Option<bool>,
    #[arg(long, value_enum)]
    pub trigger_mode: Option<TriggerModeArg>,
}

impl ConfigOverrides {
    fn apply(&self, mut c: MappingConfig) -> MappingConfig {
        if let Some(v) = self.top_n {
            c.top_n = v;
        }
        if let Some(v) = self.lock_threshold {
            c.lock_threshold = v;
        }
        if let Some(v) = self.trigger_ratio_max {
            c.trigger_ratio_max = v;
        }
        if let Some(v) = self.file_overlap_min {
            c.file_overlap_min = v;
        }
        if let Some(v) = self.idf_log {
            c.idf_log = v;
        }
        if let Some(v) = self.stopwords {
            c.stopwords = v;
        }
        if let Some(m) = self.trigger_mode {
            c.trigger_mode = match m {
                TriggerModeArg::Ratio => TriggerMode::Ratio,
                TriggerModeArg::AbsoluteDifference => TriggerMode::AbsoluteDifference,
            };
        }
        c
    }
}

#[derive(Debug, Args)]
pub struct Diff {
    #[arg(long)]
    pub warnings: PathBuf,
    /// Method spans per file, for method-granular rules.
    #[arg(long)]
    pub spans: Option<PathBuf>,
    #[arg(long)]
    pub granularity: Option<PathBuf>,
    /// Fail on rules missing from the granularity file.
    #[arg(long)]
    pub strict_granularity: bool,
    /// Confirmed pairs, as written by the review server.
    #[arg(long, conflicts_with_all = ["survivors", "auto_accept"])]
    pub confirmed: Option<PathBuf>,
    /// Candidates from `map`, confirmed through `--verdicts` or `--auto-accept`.
    #[arg(long)]
    pub survivors: Option<PathBuf>,
    #[arg(long, requires = "survivors", conflicts_with = "auto_accept")]
    pub verdicts: Option<PathBuf>,
    /// Reviewers whose votes are required for consensus.
    #[arg(long = "reviewer")]
    pub reviewers: Vec<String>,
    /// Accept survivors without review (synthetic runs only).
    #[arg(long, requires = "survivors")]
    pub auto_accept: bool,
    /// With `--auto-accept`, accept only survivors listed here.
    #[arg(long, requires = "auto_accept")]
    pub truth: Option<PathBuf>,
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct Stats {
    #[arg(long)]
    pub warnings: PathBuf,
    #[arg(long = "catalog", required = true)]
    pub catalogs: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReviewInputs {
    #[arg(long)]
    pub survivors: Option<PathBuf>,
    #[arg(long)]
    pub inconsistencies: Option<PathBuf>,
    /// Verdict logs, replayed in order.
    #[arg(long = "verdicts")]
    pub verdicts: Vec<PathBuf>,
    #[arg(long = "reviewer")]
    pub reviewers: Vec<String>,
    /// `funnel.json` from `map`.
    #[arg(long)]
    pub funnel: Option<PathBuf>,
    /// `pair_counts.json` from `diff`.
    #[arg(long)]
    pub pair_counts: Option<PathBuf>,
    /// Finding status overrides.
    #[arg(long)]
    pub statuses: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportCmd {
    #[command(flatten)]
    pub inputs: ReviewInputs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct Serve {
    #[command(flatten)]
    pub inputs: ReviewInputs,
    /// Log that new verdicts are appended to; replayed at startup.
    #[arg(long)]
    pub log: PathBuf,
    /// Catalogs for rule details in candidate payloads.
    #[arg(long = "catalog")]
    pub catalogs: Vec<PathBuf>,
    /// Source snapshot root, laid out as `<project>/<file>`.
    #[arg(long)]
    pub source_root: Option<PathBuf>,
    /// Rewritten with the confirmed pairs after every pair verdict.
    #[arg(long)]
    pub confirmed_out: Option<PathBuf>,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: std::net::IpAddr,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KindArg {
    Pair,
    Inconsistency,
}

#[derive(Debug, Args)]
pub struct Kappa {
    /// Square confusion table as a JSON array of rows.
    #[arg(long, conflicts_with = "verdicts")]
    pub table: Option<PathBuf>,
    #[arg(long)]
    pub verdicts: Option<PathBuf>,
    /// The two raters to compare.
    #[arg(long = "rater", num_args = 2, requires = "verdicts")]
    pub raters: Vec<String>,
    #[arg(long, value_enum, default_value = "inconsistency")]
    pub kind: KindArg,
    /// Compare pattern as well as verdict.
    #[arg(long)]
    pub with_pattern: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Error reported on stderr as `{"error": {"code", "message"}}`.
#[derive(Debug)]
pub struct CliError {
    pub code: &'static str,
    pub message: String,
}

impl CliError {
    pub fn new(code: &'static str, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    fn usage(message: impl Into<String>) -> Self {
        Self::new("usage", message)
    }

    fn validation(e: impl std::fmt::Display) -> Self {
        Self::new("validation", e.to_string())
    }

    pub fn to_json(&self) -> String {
        json!({"error": {"code": self.code, "message": self.message}}).to_string()
    }

    pub fn exit_code(&self) -> i32 {
        match self.code {
            "usage" => 2,
            "reproducibility" => 3,
            _ => 1,
        }
    }
}

impl From<FormatError> for CliError {
    fn from(e: FormatError) -> Self {
        let code = match e {
            FormatError::Io { .. } => "io",
            FormatError::Parse { .. } => "parse",
            FormatError::Invalid { .. } => "validation",
        };
        Self::new(code, e.to_string())
    }
}

impl From<ManifestError> for CliError {
    fn from(e: ManifestError) -> Self {
        match e {
            ManifestError::Format(f) => f.into(),
            ManifestError::Stale { .. } | ManifestError::NotReproducible { .. } => {
                Self::new("reproducibility", e.to_string())
            }
            ManifestError::Version(_) => Self::validation(e),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

struct Stage<'a> {
    cli: &'a Cli,
    name: &'static str,
    record: StageRecord,
}

impl<'a> Stage<'a> {
    fn new(cli: &'a Cli, name: &'static str) -> Self {
        Self {
            cli,
            name,
            record: StageRecord::default(),
        }
    }

    fn input(&mut self, role: impl Into<String>, path: &Path) -> CliResult<()> {
        if !path.is_file() {
            return Err(CliError::usage(format!("missing input {}", path.display())));
        }
        self.record.inputs.insert(role.into(), digest_file(path)?);
        Ok(())
    }

    fn inputs(&mut self, role: &str, paths: &[PathBuf]) -> CliResult<()> {
        for (i, p) in paths.iter().enumerate() {
            self.input(
                if paths.len() == 1 {
                    role.to_string()
                } else {
                    format!("{role}.{i}")
                },
                p,
            )?;
        }
        Ok(())
    }

    fn optional(&mut self, role: &str, path: Option<&PathBuf>) -> CliResult<()> {
        path.map_or(Ok(()), |p| self.input(role, p))
    }

    fn param(&mut self, key: &str, value: impl Serialize) {
        self.record.params.insert(
            key.into(),
            serde_json::to_value(value).unwrap_or(Value::Null),
        );
    }

    /// Checks recorded digests of the inputs; call before doing any work.
    fn check(&self) -> CliResult<()> {
        if self.cli.strict {
            RunManifest::load(&self.cli.manifest)?.check_inputs(self.name, &self.record.inputs)?;
        }
        Ok(())
    }

    fn output(&mut self, role: &str, path: &Path) -> CliResult<()> {
        self.record.outputs.insert(role.into(), digest_file(path)?);
        Ok(())
    }

    fn finish(self) -> CliResult<()> {
        let mut m = RunManifest::load(&self.cli.manifest)?;
        m.record(self.name, self.record, self.cli.strict)?;
        m.save(&self.cli.manifest)?;
        Ok(())
    }
}

fn load_catalogs(paths: &[PathBuf]) -> CliResult<Vec<RuleCatalog>> {
    paths
        .iter()
        .map(|p| formats::load_catalog(p).map_err(CliError::from))
        .collect()
}

fn warning_index(path: &Path) -> CliResult<WarningIndex> {
    WarningIndex::from_records(formats::load_warnings(path)?).map_err(CliError::validation)
}

pub fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::IngestRules(c) => ingest_rules(cli, c),
        Command::IngestWarnings(c) => ingest_warnings(cli, c),
        Command::ConvertSarif(c) => convert_sarif(cli, c),
        Command::Map(c) => map(cli, c),
        Command::Diff(c) => diff(cli, c),
        Command::Stats(c) => stats(cli, c),
        Command::Report(c) => report(cli, c),
        Command::Serve(c) => serve(c),
        Command::Kappa(c) => kappa(cli, c),
    }
}

fn ingest_rules(cli: &Cli, c: &IngestRules) -> CliResult<()> {
    let mut st = Stage::new(cli, "ingest-rules");
    st.input("catalog", &c.catalog)?;
    st.check()?;
    let catalog = formats::load_catalog(&c.catalog)?;
    formats::write_text(&c.out, &formats::catalog_to_json(&catalog))?;
    st.output("catalog", &c.out)?;
    st.finish()?;
    println!(
        "{}",
        json!({"tool": catalog.tool(), "rules": catalog.len()})
    );
    Ok(())
}

fn ingest_warnings(cli: &Cli, c: &IngestWarnings) -> CliResult<()> {
    let mut st = Stage::new(cli, "ingest-warnings");
    st.inputs("warnings", &c.warnings)?;
    st.inputs("catalog", &c.catalogs)?;
    st.param("keep_duplicates", c.keep_duplicates);
    st.check()?;
    let catalogs = load_catalogs(&c.catalogs)?;
    let refs: Vec<&RuleCatalog> = catalogs.iter().collect();
    let mut store = WarningStore::with_dedup(!c.keep_duplicates);
    let (mut accepted, mut duplicates) = (0, 0);
    for path in &c.warnings {
        let records = formats::load_warnings(path)?;
        let s = store.ingest(records, &refs).map_err(CliError::validation)?;
        accepted += s.accepted;
        duplicates += s.duplicates;
    }
    let rejected = store.rejected().to_vec();
    let index = store.freeze();
    formats::write_text(&c.out, &formats::to_jsonl(index.all_records()))?;
    st.output("warnings", &c.out)?;
    if let Some(path) = &c.rejected {
        formats::write_text(path, &formats::to_jsonl(&rejected))?;
        st.output("rejected", path)?;
    }
    st.finish()?;
    println!(
        "{}",
        json!({"accepted": accepted, "duplicates": duplicates, "rejected": rejected.len()})
    );
    Ok(())
}

fn convert_sarif(cli: &Cli, c: &ConvertSarif) -> CliResult<()> {
    let mut st = Stage::new(cli, "convert-sarif");
    st.input("sarif", &c.input)?;
    st.param("project", &c.project);
    st.param("tool", &c.tool);
    st.param("strip_prefix", &c.strip_prefix);
    st.check()?;
    let opts = sarif::ConvertOptions {
        tool: c.tool.clone(),
        project: c.project.clone(),
        strip_prefix: c.strip_prefix.clone(),
    };
    let conv = sarif::convert(&formats::read_text(&c.input)?, &opts).map_err(|e| match e {
        sarif::SarifError::Parse { .. } => CliError::new("parse", e.to_string()),
        sarif::SarifError::Version(_) => CliError::validation(e),
    })?;
    formats::write_text(&c.out, &formats::to_jsonl(&conv.records))?;
    st.output("warnings", &c.out)?;
    st.finish()?;
    println!(
        "{}",
        json!({"records": conv.records.len(), "skipped": conv.skipped.len()})
    );
    Ok(())
}

fn map(cli: &Cli, c: &Map) -> CliResult<()> {
    let mut st = Stage::new(cli, "map");
    st.input("catalog_a", &c.catalog_a)?;
    st.input("catalog_b", &c.catalog_b)?;
    st.input("warnings", &c.warnings)?;
    st.input("embeddings", &c.embeddings)?;
    st.optional("config", c.config.as_ref())?;
    let base = match &c.config {
        Some(p) => formats::load_config(p)?,
        None => MappingConfig::default(),
    };
    let config = c.overrides.apply(base);
    config.validate().map_err(CliError::validation)?;
    st.param("config", config);
    st.check()?;

    let a = formats::load_catalog(&c.catalog_a)?;
    let b = formats::load_catalog(&c.catalog_b)?;
    let model = formats::load_embeddings(&c.embeddings)?;
    let index = warning_index(&c.warnings)?;
    let (_, outcome) = parallel::map_catalogs(&a, &b, &model, &index, &config, c.threads)
        .map_err(CliError::validation)?;
    let truth = ground_truth_candidates(&index, &a, &b);

    let outputs = [
        ("survivors", formats::to_json(&outcome.survivors)),
        ("pruned", formats::to_json(&outcome.pruned)),
        ("funnel", formats::to_json(&outcome.report)),
        ("ground_truth", formats::to_json(&truth)),
    ];
    for (role, text) in outputs {
        let path = c.out.join(format!("{role}.json"));
        formats::write_text(&path, &text)?;
        st.output(role, &path)?;
    }
    let txt = c.out.join("funnel.txt");
    formats::write_text(&txt, &render::funnel(&outcome.report))?;
    st.output("funnel_text", &txt)?;
    st.finish()?;
    print!("{}", render::funnel(&outcome.report));
    Ok(())
}

fn auto_accept_entries(pairs: &[ConfirmedPair]) -> Vec<VerdictEntry> {
    pairs
        .iter()
        .enumerate()
        .map(|(i, p)| VerdictEntry {
            seq: i as u64 + 1,
            timestamp: 0,
            verdict: TriageVerdict {
                subject: Subject::pair(p.id.as_str()),
                reviewer: AUTO_REVIEWER.into(),
                verdict: Verdict::Accept,
                pattern: None,
                note: String::new(),
            },
        })
        .collect()
}

fn diff(cli: &Cli, c: &Diff) -> CliResult<()> {
    let mut st = Stage::new(cli, "diff");
    st.input("warnings", &c.warnings)?;
    st.optional("spans", c.spans.as_ref())?;
    st.optional("granularity", c.granularity.as_ref())?;
    st.optional("confirmed", c.confirmed.as_ref())?;
    st.optional("survivors", c.survivors.as_ref())?;
    st.optional("verdicts", c.verdicts.as_ref())?;
    st.optional("truth", c.truth.as_ref())?;
    st.param("auto_accept", c.auto_accept);
    st.param("strict_granularity", c.strict_granularity);
    st.param("reviewers", &c.reviewers);
    st.check()?;

    let mut auto_log = None;
    let pairs: Vec<ConfirmedPair> = match (&c.confirmed, &c.survivors) {
        (Some(p), _) => formats::load_confirmed(p)?,
        (None, Some(s)) => {
            let mut state =
                ReviewState::new(formats::load_candidates(s)?, Vec::new(), &c.reviewers);
            if c.auto_accept {
                let allowed: Option<Vec<ConfirmedPair>> = c
                    .truth
                    .as_deref()
                    .map(formats::load_confirmed)
                    .transpose()?;
                let accepted: Vec<ConfirmedPair> = state
                    .candidates
                    .iter()
                    .map(ConfirmedPair::from)
                    .filter(|p| {
                        allowed.as_ref().is_none_or(|t| {
                            t.iter()
                                .any(|x| x.rule_a == p.rule_a && x.rule_b == p.rule_b)
                        })
                    })
                    .collect();
                let entries = auto_accept_entries(&accepted);
                auto_log = Some(formats::to_jsonl(&entries));
                state.replay(entries).map_err(CliError::validation)?;
            } else if let Some(v) = &c.verdicts {
                state
                    .replay(formats::load_verdict_log(v)?)
                    .map_err(CliError::validation)?;
            } else {
                return Err(CliError::usage(
                    "--survivors needs --verdicts or --auto-accept",
                ));
            }
            state.confirmed()
        }
        (None, None) => {
            return Err(CliError::usage(
                "diff needs --confirmed, or --survivors with --verdicts or --auto-accept",
            ))
        }
    };
    let spans = match &c.spans {
        Some(p) => formats::load_spans(p)?,
        None => MethodSpanIndex::new(),
    };
    let gran = match &c.granularity {
        Some(p) => formats::load_granularity(p, c.strict_granularity)?,
        None if c.strict_granularity => {
            return Err(CliError::usage("--strict-granularity needs --granularity"))
        }
        None => GranularityMap::new(),
    };
    let index = warning_index(&c.warnings)?;
    let outcome = parallel::with_threads(c.threads, || {
        parallel::diff_all(&pairs, &index, &spans, &gran)
    })
    .map_err(CliError::validation)?
    .map_err(CliError::validation)?;

    let incs = c.out.join("inconsistencies.jsonl");
    formats::write_text(&incs, &formats::to_jsonl(&outcome.records))?;
    st.output("inconsistencies", &incs)?;
    let counts = c.out.join("pair_counts.json");
    formats::write_json(&counts, &outcome.per_pair)?;
    st.output("pair_counts", &counts)?;
    let confirmed = c.out.join("confirmed.json");
    formats::write_json(&confirmed, &pairs)?;
    st.output("confirmed", &confirmed)?;
    if let Some(log) = auto_log {
        let path = c.out.join("verdicts.jsonl");
        formats::write_text(&path, &log)?;
        st.output("verdicts", &path)?;
    }
    st.finish()?;
    println!(
        "{}",
        json!({"pairs": pairs.len(), "inconsistencies": outcome.records.len()})
    );
    Ok(())
}

fn stats(cli: &Cli, c: &Stats) -> CliResult<()> {
    let mut st = Stage::new(cli, "stats");
    st.input("warnings", &c.warnings)?;
    st.inputs("catalog", &c.catalogs)?;
    st.check()?;
    let catalogs = load_catalogs(&c.catalogs)?;
    let index = warning_index(&c.warnings)?;
    let mut rows = catalogs
        .iter()
        .map(|cat| compute_stats(&index, cat))
        .collect::<Result<Vec<_>, _>>()
        .map_err(CliError::validation)?;
    if catalogs.len() > 1 {
        let refs: Vec<&RuleCatalog> = catalogs.iter().collect();
        rows.push(compute_stats_over(&index, &refs, "overall").map_err(CliError::validation)?);
    }
    formats::write_json(&c.out, &rows)?;
    st.output("stats", &c.out)?;
    st.finish()?;
    print!("{}", render::stats(&rows));
    Ok(())
}

fn review_state(st: &mut Stage, inputs: &ReviewInputs) -> CliResult<ReviewState> {
    st.optional("survivors", inputs.survivors.as_ref())?;
    st.optional("inconsistencies", inputs.inconsistencies.as_ref())?;
    st.inputs("verdicts", &inputs.verdicts)?;
    st.optional("funnel", inputs.funnel.as_ref())?;
    st.optional("pair_counts", inputs.pair_counts.as_ref())?;
    st.optional("statuses", inputs.statuses.as_ref())?;
    st.param("reviewers", &inputs.reviewers);
    st.check()?;
    build_state(inputs, &[])
}

fn build_state(inputs: &ReviewInputs, extra_logs: &[Vec<VerdictEntry>]) -> CliResult<ReviewState> {
    let candidates = inputs
        .survivors
        .as_deref()
        .map(formats::load_candidates)
        .transpose()?
        .unwrap_or_default();
    let incs = inputs
        .inconsistencies
        .as_deref()
        .map(formats::load_inconsistencies)
        .transpose()?
        .unwrap_or_default();
    let mut state = ReviewState::new(candidates, incs, &inputs.reviewers);
    for path in &inputs.verdicts {
        state
            .replay(formats::load_verdict_log(path)?)
            .map_err(CliError::validation)?;
    }
    for log in extra_logs {
        state.replay(log.clone()).map_err(CliError::validation)?;
    }
    state.funnel = inputs
        .funnel
        .as_deref()
        .map(formats::load_report)
        .transpose()?;
    state.pair_counts = inputs
        .pair_counts
        .as_deref()
        .map(formats::read_json)
        .transpose()?
        .unwrap_or_default();
    state.statuses = inputs
        .statuses
        .as_deref()
        .map(formats::load_statuses)
        .transpose()?
        .unwrap_or_default();
    Ok(state)
}

fn report(cli: &Cli, c: &ReportCmd) -> CliResult<()> {
    let mut st = Stage::new(cli, "report");
    let state = review_state(&mut st, &c.inputs)?;
    let report = state.report();
    let json_path = c.out.join("report.json");
    formats::write_json(&json_path, &report)?;
    st.output("report", &json_path)?;
    let txt_path = c.out.join("report.txt");
    let text = render::report(&report);
    formats::write_text(&txt_path, &text)?;
    st.output("report_text", &txt_path)?;
    st.finish()?;
    print!("{text}");
    Ok(())
}

fn serve(c: &Serve) -> CliResult<()> {
    let log = if c.log.exists() {
        vec![formats::load_verdict_log(&c.log)?]
    } else {
        Vec::new()
    };
    let state = build_state(&c.inputs, &log)?;
    let mut app = server::App::new(state, c.log.clone());
    for cat in load_catalogs(&c.catalogs)? {
        for rule in cat.rules() {
            app.rules.insert(rule.rule_ref(), rule.clone());
        }
    }
    app.source_root = c.source_root.clone();
    app.confirmed_out = c.confirmed_out.clone();
    let addr = std::net::SocketAddr::new(c.host, c.port);
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::new("io", e.to_string()))?;
    rt.block_on(server::serve(Arc::new(app), addr))
        .map_err(|e| CliError::new("io", format!("{addr}: {e}")))
}

type Label = (Verdict, Option<rulediff_core::BugPattern>);

fn rater_labels(
    log: &[VerdictEntry],
    rater: &str,
    kind: SubjectKind,
    with_pattern: bool,
) -> Vec<(String, Label)> {
    let mut latest: BTreeMap<String, Label> = BTreeMap::new();
    for e in log {
        let v = &e.verdict;
        if v.reviewer == rater && v.subject.kind == kind {
            let pattern = if with_pattern { v.pattern } else { None };
            latest.insert(v.subject.id.clone(), (v.verdict, pattern));
        }
    }
    latest.into_iter().collect()
}

fn kappa(cli: &Cli, c: &Kappa) -> CliResult<()> {
    let mut st = Stage::new(cli, "kappa");
    let result = match (&c.table, &c.verdicts) {
        (Some(t), _) => {
            st.input("table", t)?;
            st.check()?;
            let table: Vec<Vec<u64>> = formats::read_json(t)?;
            let k = kappa_from_table(&table).map_err(CliError::validation)?;
            json!({"kappa": k, "subjects": table.iter().flatten().sum::<u64>()})
        }
        (None, Some(v)) => {
            let [r1, r2] = c.raters.as_slice() else {
                return Err(CliError::usage("--verdicts needs two --rater values"));
            };
            st.input("verdicts", v)?;
            st.param("raters", &c.raters);
            st.param("with_pattern", c.with_pattern);
            let kind = match c.kind {
                KindArg::Pair => SubjectKind::Pair,
                KindArg::Inconsistency => SubjectKind::Inconsistency,
            };
            st.param("kind", kind);
            st.check()?;
            let log = formats::load_verdict_log(v)?;
            let a = rater_labels(&log, r1, kind, c.with_pattern);
            let b = rater_labels(&log, r2, kind, c.with_pattern);
            // Only subjects both raters labeled take part.
            let common: Vec<&String> = a
                .iter()
                .map(|(s, _)| s)
                .filter(|s| b.iter().any(|(t, _)| t == *s))
                .collect();
            let keep = |l: &[(String, Label)]| -> Vec<(String, Label)> {
                l.iter()
                    .filter(|(s, _)| common.contains(&s))
                    .cloned()
                    .collect()
            };
            let k = cohen_kappa(&keep(&a), &keep(&b)).map_err(CliError::validation)?;
            json!({"kappa": k, "subjects": common.len(), "raters": [r1, r2]})
        }
        (None, None) => return Err(CliError::usage("kappa needs --table or --verdicts")),
    };
    if let Some(out) = &c.out {
        formats::write_json(out, &result)?;
        st.output("kappa", out)?;
        st.finish()?;
    }
    println!("{result}");
    Ok(())
}

/// Parses arguments, runs, and maps the outcome to an exit code.
pub fn main_with_args(args: impl IntoIterator<Item = std::ffi::OsString>) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return 0;
        }
        Err(e) => {
            let err = CliError::usage(e.to_string().trim().to_string());
            eprintln!("{}", err.to_json());
            return err.exit_code();
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    }
}
