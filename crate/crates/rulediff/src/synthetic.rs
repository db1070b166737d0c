//! Seeded generators for synthetic catalogs, embeddings and warning corpora.
//!
//! Everything is derived from a `ChaCha8Rng`, so a seed fully determines a
//! corpus on every platform.

use std::collections::BTreeSet;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rulediff_core::diff::{ConfirmedPair, Granularity, GranularityMap, MethodSpanIndex};
use rulediff_core::mapping::{MappingConfig, TriggerMode};
use rulediff_core::{
    CodeExample, EmbeddingModel, ExampleKind, MethodSpan, RuleCatalog, RuleDescriptor, RuleRef,
    WarningIndex, WarningRecord,
};

use crate::formats::{GranularityEntry, SpanFileEntry};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `n` distinct lowercase pronounceable words.
pub fn pseudo_words(rng: &mut impl Rng, n: usize) -> Vec<String> {
    const CONSONANTS: &[u8] = b"bdfgklmnprstvz";
    const VOWELS: &[u8] = b"aeiou";
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let syllables = rng.random_range(2..=3);
        let mut w = String::new();
        for _ in 0..syllables {
            w.push(*CONSONANTS.choose(rng).expect("nonempty") as char);
            w.push(*VOWELS.choose(rng).expect("nonempty") as char);
        }
        if seen.insert(w.clone()) {
            out.push(w);
        }
    }
    out
}

fn capitalize(w: &str) -> String {
    let mut c = w.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

fn random_vector(rng: &mut impl Rng, dim: usize, scale: f64) -> Vec<f64> {
    (0..dim)
        .map(|_| rng.random_range(-1.0..1.0) * scale)
        .collect()
}

/// Rounds to 4 decimals so vectors survive a text round trip unchanged.
fn round4(v: Vec<f64>) -> Vec<f64> {
    v.into_iter().map(|x| (x * 1e4).round() / 1e4).collect()
}

/// A rule whose text draws mostly from `topic`, with some `filler`.
fn topical_rule(
    rng: &mut impl Rng,
    tool: &str,
    rule_id: String,
    topic: &[String],
    filler: &[String],
) -> RuleDescriptor {
    let pick = |rng: &mut dyn rand::RngCore, p_topic: f64| -> String {
        if rng.random_bool(p_topic) {
            topic.choose(rng).expect("topic").clone()
        } else {
            filler.choose(rng).expect("filler").clone()
        }
    };
    let title = format!("{} {} {}", capitalize(&topic[0]), topic[1], pick(rng, 0.3));
    let len = rng.random_range(10..=16);
    let description: Vec<String> = (0..len).map(|_| pick(rng, 0.6)).collect();
    let example = format!(
        "{}{}.{}{}();",
        capitalize(&topic[1]),
        capitalize(&topic[2]),
        topic[0],
        capitalize(filler.choose(rng).expect("filler")),
    );
    RuleDescriptor::new(
        tool,
        rule_id,
        title,
        description.join(" "),
        vec![CodeExample::new(ExampleKind::Noncompliant, example)],
    )
    .expect("generated rule is valid")
}

// Planted pairs

#[derive(Debug, Clone)]
pub struct PlantedSpec {
    pub tool_a: String,
    pub tool_b: String,
    pub rules_per_side: usize,
    /// Pairs with at least 85% mutual line overlap.
    pub planted: usize,
    /// Extra true pairs whose line overlap stays below the lock threshold.
    pub weak: usize,
    /// Distractors per side that never warn.
    pub untriggered: usize,
    pub dim: usize,
    pub projects: usize,
    pub files_per_project: usize,
    /// Inclusive range of warnings per planted rule.
    pub planted_warnings: (usize, usize),
    /// Inclusive range of warnings per distractor; ignored with `total_warnings`.
    pub distractor_warnings: (usize, usize),
    /// Fill with distractor warnings up to exactly this many records.
    pub total_warnings: Option<usize>,
}

impl PlantedSpec {
    /// Two catalogs of 50 rules, 20 planted pairs and 30 distractors each.
    pub fn acceptance() -> Self {
        Self {
            tool_a: "alpha".into(),
            tool_b: "beta".into(),
            rules_per_side: 50,
            planted: 20,
            weak: 0,
            untriggered: 0,
            dim: 16,
            projects: 3,
            files_per_project: 20,
            planted_warnings: (15, 40),
            distractor_warnings: (1, 60),
            total_warnings: None,
        }
    }

    /// The committed end-to-end fixture: 12 rules per side, 400 warnings.
    pub fn golden() -> Self {
        Self {
            tool_a: "sonarqube".into(),
            tool_b: "pmd".into(),
            rules_per_side: 12,
            planted: 5,
            weak: 1,
            untriggered: 1,
            dim: 8,
            projects: 2,
            files_per_project: 6,
            planted_warnings: (12, 24),
            distractor_warnings: (1, 1),
            total_warnings: Some(400),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PlantedCorpus {
    pub catalog_a: RuleCatalog,
    pub catalog_b: RuleCatalog,
    pub model: EmbeddingModel,
    pub warnings: Vec<WarningRecord>,
    /// Every true pair, planted and weak.
    pub truth: Vec<(RuleRef, RuleRef)>,
    /// Method spans of every shared file, ten lines per method.
    pub spans: Vec<SpanFileEntry>,
}

const LINES_PER_METHOD: u32 = 10;
const SHARED_LINES: u32 = 300;

fn file_spans(rng: &mut impl Rng, project: &str, file: &str, lines: u32) -> SpanFileEntry {
    let mut methods = Vec::new();
    for k in 0..lines / LINES_PER_METHOD {
        let start = k * LINES_PER_METHOD + 1;
        methods.push(MethodSpan {
            name: format!("m{k}"),
            start,
            end: start + LINES_PER_METHOD - 1,
        });
        if rng.random_bool(0.3) {
            methods.push(MethodSpan {
                name: format!("m{k}$lambda"),
                start: start + 5,
                end: start + 7,
            });
        }
    }
    SpanFileEntry {
        project: project.into(),
        file: file.into(),
        methods,
    }
}

fn line_record(rule: &RuleRef, project: &str, file: &str, start: u32, end: u32) -> WarningRecord {
    WarningRecord {
        tool: rule.tool.clone(),
        rule_id: rule.rule_id.clone(),
        project: project.into(),
        file: file.into(),
        start_line: start,
        end_line: end,
        method: None,
    }
}

pub fn planted_corpus(seed: u64, spec: &PlantedSpec) -> PlantedCorpus {
    let mut rng = rng(seed);
    let distractors = spec.rules_per_side - spec.planted - spec.weak;
    let groups = spec.planted + spec.weak + 2 * distractors;
    let words = pseudo_words(&mut rng, groups * 5 + 40);
    let (topic_words, filler) = words.split_at(groups * 5);
    let topics: Vec<&[String]> = topic_words.chunks(5).collect();

    let mut model = EmbeddingModel::new(spec.dim).expect("positive dim");
    for topic in &topics {
        let center = random_vector(&mut rng, spec.dim, 1.0);
        for w in topic.iter() {
            let noise = random_vector(&mut rng, spec.dim, 0.3);
            let v = center.iter().zip(noise).map(|(c, n)| c + n).collect();
            model.insert(w.clone(), round4(v)).expect("dim");
        }
    }
    // a fifth of the filler stays out of vocabulary
    for w in &filler[..filler.len() * 4 / 5] {
        let v = random_vector(&mut rng, spec.dim, 1.0);
        model.insert(w.clone(), round4(v)).expect("dim");
    }

    let paired = spec.planted + spec.weak;
    let mut rules_a = Vec::new();
    let mut rules_b = Vec::new();
    for (g, topic) in topics.iter().enumerate() {
        if g < paired {
            rules_a.push(topical_rule(
                &mut rng,
                &spec.tool_a,
                format!("A{g:03}"),
                &topic[..4],
                filler,
            ));
            rules_b.push(topical_rule(
                &mut rng,
                &spec.tool_b,
                format!("B{g:03}"),
                &topic[1..],
                filler,
            ));
        } else if g < paired + distractors {
            rules_a.push(topical_rule(
                &mut rng,
                &spec.tool_a,
                format!("A{g:03}"),
                topic,
                filler,
            ));
        } else {
            rules_b.push(topical_rule(
                &mut rng,
                &spec.tool_b,
                format!("B{g:03}"),
                topic,
                filler,
            ));
        }
    }
    // file order should not reveal the pairing
    rules_a.shuffle(&mut rng);
    rules_b.shuffle(&mut rng);
    let truth: Vec<(RuleRef, RuleRef)> = (0..paired)
        .map(|g| {
            (
                RuleRef::new(&spec.tool_a, format!("A{g:03}")),
                RuleRef::new(&spec.tool_b, format!("B{g:03}")),
            )
        })
        .collect();

    let shared: Vec<(String, String)> = (0..spec.projects)
        .flat_map(|p| {
            (0..spec.files_per_project)
                .map(move |f| (format!("proj{p}"), format!("src/main/C{f:02}.java")))
        })
        .collect();
    let spans = shared
        .iter()
        .map(|(p, f)| file_spans(&mut rng, p, f, SHARED_LINES))
        .collect();

    let mut warnings = Vec::new();
    for (g, (ra, rb)) in truth.iter().enumerate() {
        let n = rng.random_range(spec.planted_warnings.0..=spec.planted_warnings.1);
        let nfiles = rng.random_range(2..=4).min(shared.len());
        let files: Vec<&(String, String)> = shared.choose_multiple(&mut rng, nfiles).collect();
        let mut lines_a = BTreeSet::new();
        while lines_a.len() < n {
            let (p, f) = files.choose(&mut rng).expect("files");
            lines_a.insert((p.clone(), f.clone(), rng.random_range(1..=SHARED_LINES)));
        }
        // strong pairs drop and add at most a tenth of the lines; weak pairs
        // drop between a third and a half
        let weak = g >= spec.planted;
        let (dropped, added) = if weak {
            (
                rng.random_range(n / 3..=n / 2),
                rng.random_range(n / 3..=n / 2),
            )
        } else {
            (rng.random_range(0..=n / 10), rng.random_range(0..=n / 10))
        };
        let mut order: Vec<_> = lines_a.iter().cloned().collect();
        order.shuffle(&mut rng);
        let mut lines_b: BTreeSet<_> = order.into_iter().skip(dropped).collect();
        let target = lines_b.len() + added;
        while lines_b.len() < target {
            let (p, f) = files.choose(&mut rng).expect("files");
            let l = (p.clone(), f.clone(), rng.random_range(1..=SHARED_LINES));
            if !lines_a.contains(&l) {
                lines_b.insert(l);
            }
        }
        for (rule, lines) in [(ra, &lines_a), (rb, &lines_b)] {
            for (p, f, l) in lines {
                warnings.push(line_record(rule, p, f, *l, *l));
            }
        }
    }

    let distractor_rules: Vec<RuleRef> = rules_a
        .iter()
        .chain(&rules_b)
        .map(RuleDescriptor::rule_ref)
        .filter(|r| !truth.iter().any(|(a, b)| a == r || b == r))
        .collect();
    let mut silent = BTreeSet::new();
    for tool in [&spec.tool_a, &spec.tool_b] {
        let side: Vec<&RuleRef> = distractor_rules
            .iter()
            .filter(|r| &r.tool == tool)
            .collect();
        silent.extend(
            side.choose_multiple(&mut rng, spec.untriggered)
                .cloned()
                .cloned(),
        );
    }
    let noisy: Vec<&RuleRef> = distractor_rules
        .iter()
        .filter(|r| !silent.contains(*r))
        .collect();
    let distractor_record = |rng: &mut ChaCha8Rng, rule: &RuleRef| {
        let file = format!(
            "src/{}/{}/D{:02}.java",
            rule.tool,
            rule.rule_id,
            rng.random_range(0..4)
        );
        let start = rng.random_range(1..=200);
        let end = start
            + if rng.random_bool(0.2) {
                rng.random_range(1..=3)
            } else {
                0
            };
        line_record(rule, "proj0", &file, start, end)
    };
    match spec.total_warnings {
        Some(total) => {
            // at least one warning per triggered distractor, the rest at random
            let mut fill: Vec<WarningRecord> = noisy
                .iter()
                .map(|r| distractor_record(&mut rng, r))
                .collect();
            while warnings.len() + fill.len() < total {
                let r = *noisy.choose(&mut rng).expect("distractors");
                let rec = distractor_record(&mut rng, r);
                if !fill.contains(&rec) {
                    fill.push(rec);
                }
            }
            warnings.extend(fill);
            warnings.truncate(total);
        }
        None => {
            for r in noisy {
                let n = rng.random_range(spec.distractor_warnings.0..=spec.distractor_warnings.1);
                let mut recs = BTreeSet::new();
                while recs.len() < n {
                    recs.insert(distractor_record(&mut rng, r));
                }
                warnings.extend(recs);
            }
        }
    }
    warnings.shuffle(&mut rng);

    PlantedCorpus {
        catalog_a: RuleCatalog::new(&spec.tool_a, rules_a).expect("unique ids"),
        catalog_b: RuleCatalog::new(&spec.tool_b, rules_b).expect("unique ids"),
        model,
        warnings,
        truth,
        spans,
    }
}

// Funnel property corpora

#[derive(Debug, Clone)]
pub struct FunnelCorpus {
    pub catalog_a: RuleCatalog,
    pub catalog_b: RuleCatalog,
    pub model: EmbeddingModel,
    pub warnings: Vec<WarningRecord>,
    pub config: MappingConfig,
}

/// Small random catalogs over a shared vocabulary, with warning sets that
/// partly copy rules of the other side so that locks and conflicts occur.
pub fn funnel_corpus(seed: u64) -> FunnelCorpus {
    let mut rng = rng(seed);
    let vocab = pseudo_words(&mut rng, 20);
    let mut model = EmbeddingModel::new(4).expect("dim");
    for w in &vocab[..15] {
        let v = random_vector(&mut rng, 4, 1.0);
        model.insert(w.clone(), round4(v)).expect("dim");
    }
    let catalog = |rng: &mut ChaCha8Rng, tool: &str| {
        let n = rng.random_range(4..=12);
        let rules = (0..n)
            .map(|i| {
                let words = |rng: &mut ChaCha8Rng, k: usize| -> Vec<String> {
                    (0..k)
                        .map(|_| vocab.choose(rng).expect("vocab").clone())
                        .collect()
                };
                let title = words(rng, 2).join(" ");
                let dl = rng.random_range(3..=10);
                let description = words(rng, dl).join(" ");
                let examples = if rng.random_bool(0.5) {
                    let w = words(rng, 2);
                    vec![CodeExample::new(
                        ExampleKind::Unspecified,
                        format!("{}.{}()", capitalize(&w[0]), w[1]),
                    )]
                } else {
                    vec![]
                };
                RuleDescriptor::new(tool, format!("R{i}"), title, description, examples)
                    .expect("valid")
            })
            .collect();
        RuleCatalog::new(tool, rules).expect("unique")
    };
    let catalog_a = catalog(&mut rng, "toola");
    let catalog_b = catalog(&mut rng, "toolb");

    let files: Vec<(String, String)> = (0..2)
        .flat_map(|p| (0..4).map(move |f| (format!("p{p}"), format!("F{f}.java"))))
        .collect();
    let random_records = |rng: &mut ChaCha8Rng, rule: &RuleRef| -> Vec<WarningRecord> {
        let n = rng.random_range(1..=30);
        (0..n)
            .map(|_| {
                let (p, f) = files.choose(rng).expect("files");
                let start = rng.random_range(1..=40);
                let end = start
                    + if rng.random_bool(0.25) {
                        rng.random_range(1..=4)
                    } else {
                        0
                    };
                line_record(rule, p, f, start, end)
            })
            .collect()
    };
    let mut warnings = Vec::new();
    let mut side_a: Vec<Vec<WarningRecord>> = Vec::new();
    for r in catalog_a.rule_refs() {
        let recs = if rng.random_bool(0.15) {
            vec![]
        } else {
            random_records(&mut rng, &r)
        };
        side_a.push(recs.clone());
        warnings.extend(recs);
    }
    for r in catalog_b.rule_refs() {
        let source = side_a
            .choose(&mut rng)
            .filter(|s| !s.is_empty() && rng.random_bool(0.5));
        let recs = match source {
            Some(src) => {
                let keep = rng.random_range(0.6..=1.0);
                let mut recs: Vec<WarningRecord> = src
                    .iter()
                    .filter(|_| rng.random_bool(keep))
                    .map(|w| WarningRecord {
                        tool: r.tool.clone(),
                        rule_id: r.rule_id.clone(),
                        ..w.clone()
                    })
                    .collect();
                if rng.random_bool(0.5) {
                    recs.extend(random_records(&mut rng, &r).into_iter().take(3));
                }
                recs
            }
            None if rng.random_bool(0.15) => vec![],
            None => random_records(&mut rng, &r),
        };
        warnings.extend(recs);
    }
    let config = MappingConfig {
        top_n: rng.random_range(1..=4),
        lock_threshold: *[0.5, 0.8, 0.9, 1.0].choose(&mut rng).expect("choices"),
        trigger_ratio_max: *[2.0, 5.0, 20.0].choose(&mut rng).expect("choices"),
        file_overlap_min: *[0.0, 0.02, 0.2, 0.5].choose(&mut rng).expect("choices"),
        idf_log: rng.random_bool(0.2),
        stopwords: false,
        trigger_mode: if rng.random_bool(0.2) {
            TriggerMode::AbsoluteDifference
        } else {
            TriggerMode::Ratio
        },
    };
    FunnelCorpus {
        catalog_a,
        catalog_b,
        model,
        warnings,
        config,
    }
}

// Diff corpora

#[derive(Debug, Clone)]
pub struct DiffCorpus {
    pub pairs: Vec<ConfirmedPair>,
    pub granularity: Vec<GranularityEntry>,
    pub spans: Vec<SpanFileEntry>,
    pub records: Vec<WarningRecord>,
    /// Number of one-sided warnings planted; each yields one inconsistency.
    pub seeded: usize,
}

impl DiffCorpus {
    pub fn granularity_map(&self) -> GranularityMap {
        let mut map = GranularityMap::strict();
        for e in &self.granularity {
            map.insert(RuleRef::new(&e.tool, &e.rule_id), e.granularity);
        }
        map
    }

    pub fn span_index(&self) -> MethodSpanIndex {
        let mut index = MethodSpanIndex::new();
        for e in &self.spans {
            index
                .insert_file(&e.project, &e.file, e.methods.clone())
                .expect("generated spans nest");
        }
        index
    }

    pub fn index(&self) -> WarningIndex {
        WarningIndex::from_records(self.records.clone()).expect("generated records are valid")
    }
}

#[derive(Clone, Copy, PartialEq)]
enum PairKind {
    LineLine,
    MethodLine,
    MethodMethod,
}

/// Three confirmed pairs (line/line, method/line, method/method) with
/// consistent warning groups, `seeded` one-sided warnings spread over the
/// pairs, and unrelated noise.
pub fn diff_corpus(seed: u64, seeded: usize) -> DiffCorpus {
    const METHODS: u32 = 20;
    let mut rng = rng(seed);
    let files: Vec<(String, String)> = (0..2)
        .flat_map(|p| (0..6).map(move |f| (format!("p{p}"), format!("src/F{f}.java"))))
        .collect();
    let spans: Vec<SpanFileEntry> = files
        .iter()
        .map(|(p, f)| file_spans(&mut rng, p, f, METHODS * LINES_PER_METHOD))
        .collect();
    let inner = |p: &str, f: &str, k: u32| -> Option<MethodSpan> {
        spans
            .iter()
            .find(|s| s.project == p && s.file == f)
            .and_then(|s| s.methods.iter().find(|m| m.name == format!("m{k}$lambda")))
            .cloned()
    };
    let method = |k: u32| MethodSpan {
        name: format!("m{k}"),
        start: k * LINES_PER_METHOD + 1,
        end: (k + 1) * LINES_PER_METHOD,
    };

    let kinds = [
        PairKind::LineLine,
        PairKind::MethodLine,
        PairKind::MethodMethod,
    ];
    let mut pairs = Vec::new();
    let mut granularity = Vec::new();
    for (i, kind) in kinds.iter().enumerate() {
        let a = RuleRef::new("left", format!("L{i}"));
        let b = RuleRef::new("right", format!("R{i}"));
        let (ga, gb) = match kind {
            PairKind::LineLine => (Granularity::Line, Granularity::Line),
            PairKind::MethodLine => (Granularity::Method, Granularity::Line),
            PairKind::MethodMethod => (Granularity::Method, Granularity::Method),
        };
        for (r, g) in [(&a, ga), (&b, gb)] {
            granularity.push(GranularityEntry {
                tool: r.tool.clone(),
                rule_id: r.rule_id.clone(),
                granularity: g,
            });
        }
        pairs.push(ConfirmedPair::new(a, b));
    }

    let mut per_pair = vec![0usize; pairs.len()];
    for _ in 0..seeded {
        per_pair[rng.random_range(0..pairs.len())] += 1;
    }

    let slots: Vec<(usize, u32)> = (0..files.len())
        .flat_map(|f| (0..METHODS).map(move |k| (f, k)))
        .collect();
    let mut records = Vec::new();
    for (pi, pair) in pairs.iter().enumerate() {
        let kind = kinds[pi];
        let mut slots = slots.clone();
        slots.shuffle(&mut rng);
        let groups = rng.random_range(20..=50);
        let (consistent, rest) = slots.split_at(groups);
        let with =
            |rule: &RuleRef, p: &str, f: &str, start: u32, end: u32, m: Option<MethodSpan>| {
                WarningRecord {
                    method: m,
                    ..line_record(rule, p, f, start, end)
                }
            };
        for &(fi, k) in consistent {
            let (p, f) = &files[fi];
            let m = method(k);
            match kind {
                PairKind::LineLine => {
                    let start = m.start + 1;
                    let end = start + rng.random_range(0..3);
                    records.push(with(&pair.rule_a, p, f, start, end, None));
                    if rng.random_bool(0.5) {
                        records.push(with(&pair.rule_b, p, f, start, end, None));
                    } else {
                        for l in start..=end {
                            records.push(with(&pair.rule_b, p, f, l, l, None));
                        }
                    }
                }
                PairKind::MethodLine => {
                    let own = rng.random_bool(0.5).then(|| m.clone());
                    records.push(with(&pair.rule_a, p, f, m.start, m.end, own));
                    for l in [m.start + 1, m.start + 3]
                        .iter()
                        .take(rng.random_range(1..=2))
                    {
                        let own = rng.random_bool(0.3).then(|| m.clone());
                        records.push(with(&pair.rule_b, p, f, *l, *l, own));
                    }
                }
                PairKind::MethodMethod => {
                    records.push(with(&pair.rule_a, p, f, m.start, m.end, Some(m.clone())));
                    // a line inside a nested lambda still resolves to the
                    // outer method because the record names it
                    let l = m.start + 6;
                    records.push(with(&pair.rule_b, p, f, l, l, Some(m.clone())));
                }
            }
        }
        for &(fi, k) in rest.iter().take(per_pair[pi]) {
            let (p, f) = &files[fi];
            let m = method(k);
            let side_a = rng.random_bool(0.5);
            let rule = if side_a { &pair.rule_a } else { &pair.rule_b };
            let rec = match kind {
                PairKind::LineLine => {
                    let l = m.start + rng.random_range(1..=8);
                    with(rule, p, f, l, l, None)
                }
                PairKind::MethodLine if side_a => with(rule, p, f, m.start, m.end, None),
                PairKind::MethodLine => {
                    let l = match inner(p, f, k) {
                        Some(s) if rng.random_bool(0.5) => s.start + 1,
                        _ => m.start + 2,
                    };
                    with(rule, p, f, l, l, None)
                }
                PairKind::MethodMethod => with(rule, p, f, m.start, m.end, Some(m.clone())),
            };
            records.push(rec);
        }
    }
    let noise = rng.random_range(50..=250);
    for _ in 0..noise {
        let (p, f) = files.choose(&mut rng).expect("files");
        let rule = RuleRef::new(
            if rng.random_bool(0.5) {
                "left"
            } else {
                "right"
            },
            format!("N{}", rng.random_range(0..5)),
        );
        let l = rng.random_range(1..=METHODS * LINES_PER_METHOD);
        records.push(line_record(&rule, p, f, l, l));
    }
    records.shuffle(&mut rng);
    DiffCorpus {
        pairs,
        granularity,
        spans,
        records,
        seeded,
    }
}

/// PMD marks a whole method, SonarQube marks its return line.
pub fn whole_method_fixture() -> DiffCorpus {
    let m = MethodSpan {
        name: "isEmptyOrNull".into(),
        start: 3,
        end: 9,
    };
    let pmd = RuleRef::new("pmd", "UseCollectionIsEmpty");
    let sonar = RuleRef::new("sonarqube", "S1155");
    let records = vec![
        WarningRecord {
            method: Some(m.clone()),
            ..line_record(&pmd, "demo", "src/Util.java", 3, 9)
        },
        line_record(&sonar, "demo", "src/Util.java", 8, 8),
    ];
    DiffCorpus {
        pairs: vec![ConfirmedPair::new(pmd.clone(), sonar.clone())],
        granularity: vec![
            GranularityEntry {
                tool: pmd.tool,
                rule_id: pmd.rule_id,
                granularity: Granularity::Method,
            },
            GranularityEntry {
                tool: sonar.tool,
                rule_id: sonar.rule_id,
                granularity: Granularity::Line,
            },
        ],
        spans: vec![SpanFileEntry {
            project: "demo".into(),
            file: "src/Util.java".into(),
            methods: vec![m],
        }],
        records,
        seeded: 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_are_reproducible() {
        let a = planted_corpus(7, &PlantedSpec::golden());
        let b = planted_corpus(7, &PlantedSpec::golden());
        assert_eq!(a.warnings, b.warnings);
        assert_eq!(a.catalog_a, b.catalog_a);
        assert_eq!(a.warnings.len(), 400);
        assert_eq!(a.catalog_a.len(), 12);
    }

    #[test]
    fn planted_pairs_meet_the_generator_contract() {
        let spec = PlantedSpec::acceptance();
        let c = planted_corpus(1, &spec);
        assert_eq!(
            (c.catalog_a.len(), c.catalog_b.len(), c.truth.len()),
            (50, 50, 20)
        );
        let index = WarningIndex::from_records(c.warnings.clone()).unwrap();
        for (a, b) in &c.truth {
            let (ra, rb) = index.line_overlap(a, b).unwrap();
            assert!(ra >= 0.85 && rb >= 0.85, "{a} {b}: {ra} {rb}");
            let (ta, tb) = (index.trigger_count(a), index.trigger_count(b));
            assert!(ta.max(tb) as f64 / ta.min(tb) as f64 <= 20.0);
            assert!(index.file_overlap(a, b).unwrap() >= 0.1);
        }
    }

    #[test]
    fn diff_corpus_is_valid() {
        for seed in 0..5 {
            let c = diff_corpus(seed, 12);
            assert!(c.records.len() <= 1000);
            c.index();
            c.span_index();
        }
    }
}
