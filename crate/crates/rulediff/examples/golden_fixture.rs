//! Writes the inputs of the end-to-end golden fixture.
//!
//! ```text
//! cargo run -p rulediff --example golden_fixture -- crates/rulediff/tests/fixtures/golden/input
//! RULEDIFF_BLESS=1 cargo test -p rulediff --test golden
//! ```

use std::path::PathBuf;

use rulediff::formats::{self, GranularityEntry};
use rulediff::parallel;
use rulediff::synthetic::{planted_corpus, PlantedSpec};
use rulediff_core::diff::{ConfirmedPair, Granularity, GranularityMap, InconsistencyRecord};
use rulediff_core::triage::{Subject, TriageVerdict, VerdictEntry};
use rulediff_core::{BugPattern, MappingConfig, MethodSpanIndex, Side, Verdict, WarningIndex};

const SEED: u64 = 20_240_611;

fn label(
    seq: &mut u64,
    reviewer: &str,
    inc: &InconsistencyRecord,
    verdict: Verdict,
    pattern: Option<BugPattern>,
) -> VerdictEntry {
    *seq += 1;
    VerdictEntry {
        seq: *seq,
        timestamp: 1_700_000_000 + *seq,
        verdict: TriageVerdict {
            subject: Subject::inconsistency(inc.id.as_str()),
            reviewer: reviewer.into(),
            verdict,
            pattern,
            note: String::new(),
        },
    }
}

fn main() -> anyhow::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| "tests/fixtures/golden/input".into());
    let spec = PlantedSpec::golden();
    let corpus = planted_corpus(SEED, &spec);
    let config = MappingConfig::default();

    formats::write_text(
        &dir.join("catalog_a.json"),
        &formats::catalog_to_json(&corpus.catalog_a),
    )?;
    formats::write_text(
        &dir.join("catalog_b.json"),
        &formats::catalog_to_json(&corpus.catalog_b),
    )?;
    formats::write_text(
        &dir.join("warnings.jsonl"),
        &formats::to_jsonl(&corpus.warnings),
    )?;
    formats::write_text(
        &dir.join("embeddings.txt"),
        &formats::embeddings_to_text(&corpus.model),
    )?;
    formats::write_text(&dir.join("spans.jsonl"), &formats::to_jsonl(&corpus.spans))?;
    formats::write_json(&dir.join("config.json"), &config)?;

    // The first true pair is compared by method, the rest by line.
    let mut granularity = Vec::new();
    for rule in corpus
        .catalog_a
        .rule_refs()
        .chain(corpus.catalog_b.rule_refs())
    {
        let method = corpus
            .truth
            .first()
            .is_some_and(|(a, b)| *a == rule || *b == rule);
        granularity.push(GranularityEntry {
            tool: rule.tool.clone(),
            rule_id: rule.rule_id.clone(),
            granularity: if method {
                Granularity::Method
            } else {
                Granularity::Line
            },
        });
    }
    formats::write_json(&dir.join("granularity.json"), &granularity)?;

    // Run the pipeline to learn inconsistency ids, then label some of them.
    let index = WarningIndex::from_records(corpus.warnings.clone())?;
    let (_, outcome) = parallel::map_catalogs(
        &corpus.catalog_a,
        &corpus.catalog_b,
        &corpus.model,
        &index,
        &config,
        None,
    )?;
    let pairs: Vec<ConfirmedPair> = outcome.survivors.iter().map(ConfirmedPair::from).collect();
    let mut spans = MethodSpanIndex::new();
    for e in &corpus.spans {
        spans.insert_file(&e.project, &e.file, e.methods.clone())?;
    }
    let mut gran = GranularityMap::strict();
    for e in &granularity {
        gran.insert(
            rulediff_core::RuleRef::new(&e.tool, &e.rule_id),
            e.granularity,
        );
    }
    let diff = parallel::diff_all(&pairs, &index, &spans, &gran)?;

    let mut seq = 0;
    let mut log = Vec::new();
    let b_only: Vec<&InconsistencyRecord> = diff
        .records
        .iter()
        .filter(|r| r.warned_by == Side::SideBOnly)
        .collect();
    let a_only: Vec<&InconsistencyRecord> = diff
        .records
        .iter()
        .filter(|r| r.warned_by == Side::SideAOnly)
        .collect();
    for inc in b_only.iter().take(3) {
        for reviewer in ["alice", "bob"] {
            log.push(label(
                &mut seq,
                reviewer,
                inc,
                Verdict::FalsePositive,
                Some(BugPattern::P12),
            ));
        }
    }
    for inc in a_only.iter().take(2) {
        for reviewer in ["alice", "bob"] {
            log.push(label(
                &mut seq,
                reviewer,
                inc,
                Verdict::FalseNegativeImpl,
                Some(BugPattern::P3),
            ));
        }
    }
    if let Some(inc) = a_only.get(2) {
        log.push(label(&mut seq, "alice", inc, Verdict::NotABug, None));
        log.push(label(&mut seq, "bob", inc, Verdict::NotABug, None));
    }
    if let Some(inc) = a_only.get(3) {
        log.push(label(
            &mut seq,
            "alice",
            inc,
            Verdict::FalseNegativeDef,
            Some(BugPattern::P7),
        ));
        log.push(label(&mut seq, "bob", inc, Verdict::Undecided, None));
    }
    formats::write_text(&dir.join("labels.jsonl"), &formats::to_jsonl(&log))?;
    eprintln!(
        "{} rules, {} warnings, {} survivors, {} inconsistencies, {} labels",
        corpus.catalog_a.len() + corpus.catalog_b.len(),
        corpus.warnings.len(),
        pairs.len(),
        diff.records.len(),
        log.len()
    );
    Ok(())
}
