//! Brute-force reference implementations and the golden-run driver shared by
//! the integration tests and the acceptance suite.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::process::Command;

use rulediff::formats::SpanFileEntry;
use rulediff_core::diff::{
    ConfirmedPair, Granularity, GranularityMap, InconsistencyRecord, Location, Side,
};
use rulediff_core::{MethodSpan, WarningRecord};

/// TF-IDF by nested loops: term count in the document times `N / df`, or
/// `1 + ln(N / df)` when `log`.
pub fn tfidf_oracle(docs: &[Vec<String>], log: bool) -> Vec<BTreeMap<String, f64>> {
    let n = docs.len() as f64;
    let mut out = Vec::new();
    for doc in docs {
        let mut vector = BTreeMap::new();
        for term in doc {
            if vector.contains_key(term) {
                continue;
            }
            let mut tf = 0usize;
            for t in doc {
                if t == term {
                    tf += 1;
                }
            }
            let mut df = 0usize;
            for other in docs {
                let mut present = false;
                for t in other {
                    if t == term {
                        present = true;
                    }
                }
                if present {
                    df += 1;
                }
            }
            let ratio = n / df as f64;
            let idf = if log { 1.0 + ratio.ln() } else { ratio };
            vector.insert(term.clone(), tf as f64 * idf);
        }
        out.push(vector);
    }
    out
}

/// Mean of the vectors of in-vocabulary tokens; zero when none are known.
pub fn mean_embedding(
    tokens: &[String],
    vocab: &BTreeMap<String, Vec<f64>>,
    dim: usize,
) -> Vec<f64> {
    let mut sum = vec![0.0; dim];
    let mut count = 0usize;
    for t in tokens {
        if let Some(v) = vocab.get(t) {
            for i in 0..dim {
                sum[i] += v[i];
            }
            count += 1;
        }
    }
    if count > 0 {
        for x in &mut sum {
            *x /= count as f64;
        }
    }
    sum
}

pub fn dot_cosine(a: &[f64], b: &[f64]) -> f64 {
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for i in 0..a.len() {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        (dot / (na.sqrt() * nb.sqrt())).clamp(0.0, 1.0)
    }
}

pub type Observed = (String, String, String, Location, Side);

/// Smallest span in `spans` enclosing `start..=end`, by scanning every span.
fn enclosing<'a>(spans: &'a [SpanFileEntry], r: &WarningRecord) -> Option<&'a MethodSpan> {
    let mut best: Option<&MethodSpan> = None;
    for entry in spans {
        if entry.project != r.project || entry.file != r.file {
            continue;
        }
        for m in &entry.methods {
            if m.start <= r.start_line && r.end_line <= m.end {
                let better = match best {
                    None => true,
                    Some(b) => m.end - m.start < b.end - b.start,
                };
                if better {
                    best = Some(m);
                }
            }
        }
    }
    best
}

fn method_of(spans: &[SpanFileEntry], r: &WarningRecord) -> Location {
    let m = r
        .method
        .as_ref()
        .or_else(|| enclosing(spans, r))
        .expect("oracle: warning outside every method");
    Location::Method {
        name: m.name.clone(),
        start: m.start,
        end: m.end,
    }
}

/// Enumerates every location either rule warned on and keeps those warned by
/// exactly one side.
pub fn diff_oracle(
    pairs: &[ConfirmedPair],
    records: &[WarningRecord],
    spans: &[SpanFileEntry],
    granularity: &GranularityMap,
) -> BTreeSet<Observed> {
    let mut out = BTreeSet::new();
    for pair in pairs {
        let method = granularity.get(&pair.rule_a) == Granularity::Method
            || granularity.get(&pair.rule_b) == Granularity::Method;
        let of = |rule: &rulediff_core::RuleRef| -> Vec<&WarningRecord> {
            records
                .iter()
                .filter(|r| r.tool == rule.tool && r.rule_id == rule.rule_id)
                .collect()
        };
        let (wa, wb) = (of(&pair.rule_a), of(&pair.rule_b));
        let locate = |ws: &[&WarningRecord]| -> Vec<(String, String, Location)> {
            let mut v = Vec::new();
            for r in ws {
                if method {
                    v.push((r.project.clone(), r.file.clone(), method_of(spans, r)));
                } else {
                    for line in r.start_line..=r.end_line {
                        v.push((r.project.clone(), r.file.clone(), Location::Line { line }));
                    }
                }
            }
            v
        };
        let (la, lb) = (locate(&wa), locate(&wb));
        for loc in la.iter().chain(&lb) {
            let in_a = la.contains(loc);
            let in_b = lb.contains(loc);
            let side = match (in_a, in_b) {
                (true, false) => Side::SideAOnly,
                (false, true) => Side::SideBOnly,
                _ => continue,
            };
            out.insert((
                pair.id.to_string(),
                loc.0.clone(),
                loc.1.clone(),
                loc.2.clone(),
                side,
            ));
        }
    }
    out
}

pub fn observed(records: &[InconsistencyRecord]) -> Vec<Observed> {
    records
        .iter()
        .map(|r| {
            (
                r.pair.to_string(),
                r.project.clone(),
                r.file.clone(),
                r.location.clone(),
                r.warned_by,
            )
        })
        .collect()
}

// Golden run

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/golden")
}

pub const GOLDEN_STEPS: &[&[&str]] = &[
    &[
        "ingest-rules",
        "--catalog",
        "input/catalog_a.json",
        "--out",
        "out/catalog_a.json",
    ],
    &[
        "ingest-rules",
        "--catalog",
        "input/catalog_b.json",
        "--out",
        "out/catalog_b.json",
    ],
    &[
        "ingest-warnings",
        "--warnings",
        "input/warnings.jsonl",
        "--catalog",
        "out/catalog_a.json",
        "--catalog",
        "out/catalog_b.json",
        "--out",
        "out/warnings.jsonl",
    ],
    &[
        "map",
        "--catalog-a",
        "out/catalog_a.json",
        "--catalog-b",
        "out/catalog_b.json",
        "--warnings",
        "out/warnings.jsonl",
        "--embeddings",
        "input/embeddings.txt",
        "--config",
        "input/config.json",
        "--out",
        "out/map",
    ],
    &[
        "diff",
        "--warnings",
        "out/warnings.jsonl",
        "--spans",
        "input/spans.jsonl",
        "--granularity",
        "input/granularity.json",
        "--strict-granularity",
        "--survivors",
        "out/map/survivors.json",
        "--auto-accept",
        "--out",
        "out/diff",
    ],
    &[
        "stats",
        "--warnings",
        "out/warnings.jsonl",
        "--catalog",
        "out/catalog_a.json",
        "--catalog",
        "out/catalog_b.json",
        "--out",
        "out/stats.json",
    ],
    &[
        "report",
        "--survivors",
        "out/map/survivors.json",
        "--inconsistencies",
        "out/diff/inconsistencies.jsonl",
        "--verdicts",
        "out/diff/verdicts.jsonl",
        "--verdicts",
        "input/labels.jsonl",
        "--funnel",
        "out/map/funnel.json",
        "--pair-counts",
        "out/diff/pair_counts.json",
        "--out",
        "out/report",
    ],
];

pub fn rulediff() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rulediff"))
}

pub fn copy_dir(from: &Path, to: &Path) {
    std::fs::create_dir_all(to).unwrap();
    for entry in std::fs::read_dir(from).unwrap() {
        let entry = entry.unwrap();
        let target = to.join(entry.file_name());
        if entry.file_type().unwrap().is_dir() {
            copy_dir(&entry.path(), &target);
        } else {
            std::fs::copy(entry.path(), target).unwrap();
        }
    }
}

/// Relative paths of every file below `root`, sorted.
pub fn list_files(root: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p.strip_prefix(root).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

/// Runs every golden step in a fresh copy of the fixture inputs and returns
/// the working directory. Panics with stderr when a step fails.
pub fn run_golden(threads: Option<&str>) -> tempfile::TempDir {
    let work = tempfile::tempdir().unwrap();
    copy_dir(&golden_dir().join("input"), &work.path().join("input"));
    for step in GOLDEN_STEPS {
        let mut cmd = rulediff();
        cmd.current_dir(work.path()).args(*step);
        if let (Some(t), "map" | "diff") = (threads, step[0]) {
            cmd.args(["--threads", t]);
        }
        let out = cmd.output().unwrap();
        assert!(
            out.status.success(),
            "{} failed: {}",
            step[0],
            String::from_utf8_lossy(&out.stderr)
        );
    }
    work
}

/// Files of the golden run compared byte for byte: every output plus the manifest.
pub fn golden_outputs(work: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut files: Vec<PathBuf> = list_files(&work.join("out"))
        .into_iter()
        .map(|p| Path::new("out").join(p))
        .collect();
    files.push(PathBuf::from("rulediff.manifest.json"));
    files
        .into_iter()
        .map(|p| (p.clone(), std::fs::read(work.join(&p)).unwrap()))
        .collect()
}

/// Differences between a golden run and the committed expectations.
pub fn golden_mismatches(work: &Path) -> Vec<String> {
    let expected_root = golden_dir().join("expected");
    let actual = golden_outputs(work);
    let mut problems = Vec::new();
    let expected_files = if expected_root.exists() {
        list_files(&expected_root)
    } else {
        Vec::new()
    };
    let actual_names: BTreeSet<&PathBuf> = actual.iter().map(|(p, _)| p).collect();
    for p in &expected_files {
        if !actual_names.contains(p) {
            problems.push(format!("missing output {}", p.display()));
        }
    }
    for (p, bytes) in &actual {
        match std::fs::read(expected_root.join(p)) {
            Ok(exp) if exp == *bytes => {}
            Ok(_) => problems.push(format!("{} differs", p.display())),
            Err(_) => problems.push(format!("unexpected output {}", p.display())),
        }
    }
    problems
}

/// Overwrites the committed expectations with a fresh run.
pub fn bless_golden(work: &Path) {
    let expected_root = golden_dir().join("expected");
    let _ = std::fs::remove_dir_all(&expected_root);
    for (p, bytes) in golden_outputs(work) {
        let target = expected_root.join(p);
        std::fs::create_dir_all(target.parent().unwrap()).unwrap();
        std::fs::write(target, bytes).unwrap();
    }
}
