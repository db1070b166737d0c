//! On-disk formats: catalog JSON, warning and span JSONL, word2vec text
//! embeddings, configuration, and the pipeline's own artifacts.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rulediff_core::diff::{
    ConfirmedPair, DiffError, Granularity, GranularityMap, InconsistencyRecord, MethodSpanIndex,
};
use rulediff_core::mapping::{MappingConfig, MappingReport, PairCandidate};
use rulediff_core::triage::VerdictEntry;
use rulediff_core::{
    CodeExample, EmbeddingModel, MethodSpan, RuleCatalog, RuleDescriptor, RuleRef, WarningRecord,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{}: {message}", path.display())]
    Invalid { path: PathBuf, message: String },
}

impl FormatError {
    fn parse(path: &Path, line: usize, message: impl ToString) -> Self {
        FormatError::Parse {
            path: path.to_path_buf(),
            line,
            message: message.to_string(),
        }
    }

    fn invalid(path: &Path, message: impl ToString) -> Self {
        FormatError::Invalid {
            path: path.to_path_buf(),
            message: message.to_string(),
        }
    }
}

pub fn read_text(path: &Path) -> Result<String, FormatError> {
    fs::read_to_string(path).map_err(|source| FormatError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes `contents`, creating parent directories as needed.
pub fn write_text(path: &Path, contents: &str) -> Result<(), FormatError> {
    let io = |source| FormatError::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(io)?;
    }
    fs::write(path, contents).map_err(io)
}

/// Appends one line to a JSONL file and flushes it to disk.
pub fn append_jsonl<T: Serialize>(path: &Path, value: &T) -> Result<(), FormatError> {
    let io = |source| FormatError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut line = serde_json::to_string(value).expect("serializable");
    line.push('\n');
    let mut f = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(io)?;
    f.write_all(line.as_bytes()).map_err(io)?;
    f.sync_data().map_err(io)
}

fn parse_json<T: DeserializeOwned>(path: &Path, text: &str) -> Result<T, FormatError> {
    serde_json::from_str(text).map_err(|e| FormatError::parse(path, e.line(), e))
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, FormatError> {
    parse_json(path, &read_text(path)?)
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), FormatError> {
    write_text(path, &to_json(value))
}

/// One compact JSON object per line, LF-terminated.
pub fn to_jsonl<'a, T: Serialize + 'a>(values: impl IntoIterator<Item = &'a T>) -> String {
    let mut out = String::new();
    for v in values {
        out.push_str(&serde_json::to_string(v).expect("serializable"));
        out.push('\n');
    }
    out
}

/// Parses JSONL, skipping blank lines. Errors carry 1-based line numbers.
pub fn parse_jsonl<T: DeserializeOwned>(
    path: &Path,
    text: &str,
) -> Result<Vec<(usize, T)>, FormatError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l)
                .map(|v| (i + 1, v))
                .map_err(|e| FormatError::parse(path, i + 1, e))
        })
        .collect()
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, FormatError> {
    Ok(parse_jsonl(path, &read_text(path)?)?
        .into_iter()
        .map(|(_, v)| v)
        .collect())
}

// Catalogs

#[derive(Debug, Serialize, Deserialize)]
struct CatalogFile {
    tool: String,
    rules: Vec<RuleEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RuleEntry {
    rule_id: String,
    title: String,
    description: String,
    #[serde(default)]
    code_examples: Vec<CodeExample>,
    /// Written for inspection; recomputed on load.
    #[serde(default, skip_deserializing, skip_serializing_if = "Vec::is_empty")]
    code_terms: Vec<String>,
}

pub fn parse_catalog(path: &Path, text: &str) -> Result<RuleCatalog, FormatError> {
    let file: CatalogFile = parse_json(path, text)?;
    let rules = file
        .rules
        .into_iter()
        .map(|r| {
            RuleDescriptor::new(
                file.tool.clone(),
                r.rule_id,
                r.title,
                r.description,
                r.code_examples,
            )
        })
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| FormatError::invalid(path, e))?;
    RuleCatalog::new(file.tool, rules).map_err(|e| FormatError::invalid(path, e))
}

pub fn load_catalog(path: &Path) -> Result<RuleCatalog, FormatError> {
    parse_catalog(path, &read_text(path)?)
}

/// Catalog JSON in the input schema plus the derived code terms.
pub fn catalog_to_json(catalog: &RuleCatalog) -> String {
    let file = CatalogFile {
        tool: catalog.tool().to_string(),
        rules: catalog
            .rules()
            .iter()
            .map(|r| RuleEntry {
                rule_id: r.rule_id.clone(),
                title: r.title.clone(),
                description: r.description.clone(),
                code_examples: r.code_examples.clone(),
                code_terms: r.code_terms.iter().cloned().collect(),
            })
            .collect(),
    };
    to_json(&file)
}

// Warnings

/// Parses warning JSONL and validates every record's line span.
pub fn parse_warnings(path: &Path, text: &str) -> Result<Vec<WarningRecord>, FormatError> {
    parse_jsonl::<WarningRecord>(path, text)?
        .into_iter()
        .map(|(line, r)| {
            r.validate(line)
                .map(|()| r)
                .map_err(|e| FormatError::parse(path, line, e))
        })
        .collect()
}

pub fn load_warnings(path: &Path) -> Result<Vec<WarningRecord>, FormatError> {
    parse_warnings(path, &read_text(path)?)
}

// Method spans

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpanFileEntry {
    pub project: String,
    pub file: String,
    pub methods: Vec<MethodSpan>,
}

pub fn parse_spans(path: &Path, text: &str) -> Result<MethodSpanIndex, FormatError> {
    let mut index = MethodSpanIndex::new();
    for (line, entry) in parse_jsonl::<SpanFileEntry>(path, text)? {
        index
            .insert_file(entry.project, entry.file, entry.methods)
            .map_err(|e: DiffError| FormatError::parse(path, line, e))?;
    }
    Ok(index)
}

pub fn load_spans(path: &Path) -> Result<MethodSpanIndex, FormatError> {
    parse_spans(path, &read_text(path)?)
}

// Embeddings

/// Parses word2vec text format. Words are lowercased to match the tokenizer;
/// on a case collision the first vector wins.
pub fn parse_embeddings(path: &Path, text: &str) -> Result<EmbeddingModel, FormatError> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| FormatError::invalid(path, "empty embedding file"))?;
    let mut fields = header.split_whitespace();
    let header_err = || FormatError::parse(path, 1, "header must be \"<vocab_size> <dim>\"");
    let vocab: usize = fields
        .next()
        .and_then(|v| v.parse().ok())
        .ok_or_else(header_err)?;
    let dim: usize = fields
        .next()
        .and_then(|v| v.parse().ok())
        .ok_or_else(header_err)?;
    if fields.next().is_some() {
        return Err(header_err());
    }
    let mut model = EmbeddingModel::new(dim).map_err(|e| FormatError::parse(path, 1, e))?;
    let mut count = 0;
    for (i, line) in lines {
        let mut fields = line.split_whitespace();
        let word = fields.next().expect("line is not blank").to_lowercase();
        let vector = fields
            .map(|v| v.parse::<f64>().ok().filter(|x| x.is_finite()))
            .collect::<Option<Vec<f64>>>()
            .ok_or_else(|| FormatError::parse(path, i + 1, "non-numeric vector component"))?;
        if vector.len() != dim {
            return Err(FormatError::parse(
                path,
                i + 1,
                format!("expected {dim} components, found {}", vector.len()),
            ));
        }
        if model.get(&word).is_none() {
            model.insert(word, vector).expect("length checked");
        }
        count += 1;
    }
    if count != vocab {
        return Err(FormatError::invalid(
            path,
            format!("header declares {vocab} words, file has {count}"),
        ));
    }
    Ok(model)
}

pub fn load_embeddings(path: &Path) -> Result<EmbeddingModel, FormatError> {
    parse_embeddings(path, &read_text(path)?)
}

/// word2vec text rendering, words in lexicographic order.
pub fn embeddings_to_text(model: &EmbeddingModel) -> String {
    let mut out = format!("{} {}\n", model.len(), model.dim());
    for (word, v) in model.words() {
        out.push_str(word);
        for x in v {
            out.push(' ');
            out.push_str(&x.to_string());
        }
        out.push('\n');
    }
    out
}

// Configuration

pub fn load_config(path: &Path) -> Result<MappingConfig, FormatError> {
    read_json(path)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GranularityEntry {
    pub tool: String,
    pub rule_id: String,
    pub granularity: Granularity,
}

/// Reads a granularity list. Rules left out default to line granularity
/// unless `strict`.
pub fn load_granularity(path: &Path, strict: bool) -> Result<GranularityMap, FormatError> {
    let entries: Vec<GranularityEntry> = read_json(path)?;
    let mut map = if strict {
        GranularityMap::strict()
    } else {
        GranularityMap::new()
    };
    for e in entries {
        map.insert(RuleRef::new(e.tool, e.rule_id), e.granularity);
    }
    Ok(map)
}

// Pipeline artifacts

pub fn load_candidates(path: &Path) -> Result<Vec<PairCandidate>, FormatError> {
    read_json(path)
}

pub fn load_report(path: &Path) -> Result<MappingReport, FormatError> {
    read_json(path)
}

pub fn load_confirmed(path: &Path) -> Result<Vec<ConfirmedPair>, FormatError> {
    read_json(path)
}

pub fn load_inconsistencies(path: &Path) -> Result<Vec<InconsistencyRecord>, FormatError> {
    read_jsonl(path)
}

/// Reads a verdict log. A missing file is an empty log.
pub fn load_verdict_log(path: &Path) -> Result<Vec<VerdictEntry>, FormatError> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    read_jsonl(path)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StatusEntry {
    pub tool: String,
    pub rule_id: String,
    pub category: rulediff_core::BugCategory,
    pub pattern: rulediff_core::BugPattern,
    pub status: rulediff_core::FindingStatus,
}

/// Reads finding status overrides (reported / confirmed_fixed).
pub fn load_statuses(
    path: &Path,
) -> Result<BTreeMap<rulediff_core::findings::FindingKey, rulediff_core::FindingStatus>, FormatError>
{
    let entries: Vec<StatusEntry> = read_json(path)?;
    Ok(entries
        .into_iter()
        .map(|e| {
            (
                (RuleRef::new(e.tool, e.rule_id), e.category, e.pattern),
                e.status,
            )
        })
        .collect())
}
