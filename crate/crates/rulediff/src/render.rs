//! Plain-text table renderings of reports.

use std::fmt::Write;

use rulediff_core::mapping::{CandidateStage, MappingReport, PairCandidate};
use rulediff_core::warnings::RuleStats;

use crate::review::Report;

/// Left-aligned columns separated by two spaces, with a dashed header rule.
pub fn table(headers: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = headers.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: &mut dyn Iterator<Item = &str>| {
        let padded: Vec<String> = cells
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        padded.join("  ").trim_end().to_string()
    };
    let mut out = line(&mut headers.iter().copied());
    out.push('\n');
    out.push_str(&line(
        &mut widths
            .iter()
            .map(|w| "-".repeat(*w))
            .collect::<Vec<_>>()
            .iter()
            .map(String::as_str),
    ));
    out.push('\n');
    for row in rows {
        out.push_str(&line(&mut row.iter().map(String::as_str)));
        out.push('\n');
    }
    out
}

pub fn funnel(report: &MappingReport) -> String {
    let mut rows = vec![
        vec![
            "candidate pairs".to_string(),
            report.total_candidates.to_string(),
        ],
        vec!["after rule a".to_string(), report.after_a.to_string()],
        vec!["after rule b".to_string(), report.after_b.to_string()],
        vec!["  locked".to_string(), report.locked.to_string()],
        vec!["after rule c".to_string(), report.after_c.to_string()],
        vec!["after rule d".to_string(), report.after_d.to_string()],
    ];
    if let Some(c) = report.confirmed {
        rows.push(vec!["confirmed".to_string(), c.to_string()]);
    }
    if let Some(h) = report.hitting_rate() {
        rows.push(vec!["hitting rate".to_string(), format!("{h:.4}")]);
    }
    table(&["stage", "pairs"], &rows)
}

pub fn stats(stats: &[RuleStats]) -> String {
    let rows: Vec<Vec<String>> = stats
        .iter()
        .map(|s| {
            let q = &s.quartiles;
            vec![
                s.label.clone(),
                s.total_rules.to_string(),
                s.triggered_rules.to_string(),
                format!("{:.4}", s.pct_triggered),
                format!("{}", q.min),
                format!("{}", q.q1),
                format!("{}", q.median),
                format!("{}", q.q3),
                format!("{}", q.max),
            ]
        })
        .collect();
    table(
        &[
            "tool",
            "rules",
            "triggered",
            "pct",
            "min",
            "q1",
            "median",
            "q3",
            "max",
        ],
        &rows,
    )
}

fn stage_label(stage: &CandidateStage) -> &'static str {
    match stage {
        CandidateStage::AfterA => "after_a",
        CandidateStage::LockedB => "locked",
        CandidateStage::AfterC => "after_c",
        CandidateStage::AfterD => "after_d",
        CandidateStage::Pruned { .. } => "pruned",
    }
}

pub fn candidates(list: &[PairCandidate]) -> String {
    let rows: Vec<Vec<String>> = list
        .iter()
        .map(|c| {
            let (ra, rb, fj) = c.overlap.map_or(("-".into(), "-".into(), "-".into()), |o| {
                (
                    format!("{:.3}", o.ratio_a),
                    format!("{:.3}", o.ratio_b),
                    format!("{:.3}", o.file_jaccard),
                )
            });
            vec![
                c.id.to_string(),
                c.rule_a.to_string(),
                c.rule_b.to_string(),
                format!("{:.4}", c.scores.description_sim),
                ra,
                rb,
                fj,
                stage_label(&c.stage).to_string(),
            ]
        })
        .collect();
    table(
        &[
            "id", "rule_a", "rule_b", "desc_sim", "lines_a", "lines_b", "files", "stage",
        ],
        &rows,
    )
}

pub fn report(report: &Report) -> String {
    let f = &report.findings;
    let mut out = String::new();
    let mut counts: Vec<Vec<String>> = f
        .tools
        .iter()
        .chain(std::iter::once(&f.overall))
        .map(|t| {
            vec![
                t.tool.clone(),
                t.fn_implementation.to_string(),
                t.fn_definition.to_string(),
                t.false_positive.to_string(),
                t.overall.to_string(),
            ]
        })
        .collect();
    if counts.is_empty() {
        counts.push(vec![
            "overall".into(),
            "0".into(),
            "0".into(),
            "0".into(),
            "0".into(),
        ]);
    }
    out.push_str("Detected bugs\n\n");
    out.push_str(&table(
        &["tool", "fn_impl", "fn_def", "fp", "overall"],
        &counts,
    ));
    for t in &report.tables {
        let _ = write!(out, "\n{}\n\n", t.title);
        let rows: Vec<Vec<String>> = t
            .rows
            .iter()
            .flat_map(|row| {
                row.rules.iter().enumerate().map(move |(i, r)| {
                    let head = if i == 0 {
                        (row.pattern.code().to_string(), row.name.clone())
                    } else {
                        (String::new(), String::new())
                    };
                    vec![
                        head.0,
                        head.1,
                        format!("{} ({})", r.rule, r.occurrence_count),
                        format!("{:?}", r.status).to_lowercase(),
                    ]
                })
            })
            .collect();
        if rows.is_empty() {
            out.push_str("(none)\n");
        } else {
            out.push_str(&table(
                &["pattern", "name", "rule (inconsistencies)", "status"],
                &rows,
            ));
        }
    }
    let _ = write!(
        out,
        "\nLabels\n\n{}",
        table(
            &["labeled", "not_a_bug", "undecided", "disputed", "unlabeled"],
            &[vec![
                f.labeled.to_string(),
                f.not_a_bug.to_string(),
                f.undecided.to_string(),
                f.disputed.to_string(),
                f.unlabeled.to_string(),
            ]],
        )
    );
    if let Some(funnel_report) = &f.funnel {
        let _ = write!(out, "\nMapping funnel\n\n{}", funnel(funnel_report));
    }
    if !report.pair_counts.is_empty() {
        let rows: Vec<Vec<String>> = report
            .pair_counts
            .iter()
            .map(|p| {
                vec![
                    p.rule_a.to_string(),
                    p.rule_b.to_string(),
                    format!("{:?}", p.criterion).to_lowercase(),
                    p.side_a_only.to_string(),
                    p.side_b_only.to_string(),
                    p.total.to_string(),
                ]
            })
            .collect();
        let _ = write!(
            out,
            "\nInconsistencies per pair\n\n{}",
            table(
                &["rule_a", "rule_b", "criterion", "a_only", "b_only", "total"],
                &rows
            )
        );
    }
    let _ = writeln!(out, "\nDiff-eligible pairs: {}", report.diff_eligible.len());
    out
}
