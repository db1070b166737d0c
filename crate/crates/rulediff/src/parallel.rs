//! Data-parallel scoring and diffing. Results are collected in input order,
//! so output does not depend on the thread count.

use rayon::prelude::*;

use rulediff_core::diff::{
    self, ConfirmedPair, DiffError, DiffOutcome, GranularityMap, MethodSpanIndex,
};
use rulediff_core::mapping::{self, MappingConfig, MappingError, PipelineOutcome};
use rulediff_core::similarity::{ScoreMatrix, SimilarityError};
use rulediff_core::{EmbeddingModel, RuleCatalog, RuleRef, SimilarityIndex, WarningIndex};

#[derive(Debug, thiserror::Error)]
pub enum MapError {
    #[error(transparent)]
    Similarity(#[from] SimilarityError),
    #[error(transparent)]
    Mapping(#[from] MappingError),
    #[error("thread pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

/// Runs `f` on a pool of `threads` workers, or on the global pool for `None`.
pub fn with_threads<R: Send>(
    threads: Option<usize>,
    f: impl FnOnce() -> R + Send,
) -> Result<R, rayon::ThreadPoolBuildError> {
    match threads {
        Some(n) => Ok(rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()?
            .install(f)),
        None => Ok(f()),
    }
}

/// All pairwise scores of two catalogs, computed row by row in parallel.
pub fn score_matrix(
    index: &SimilarityIndex,
    a: &RuleCatalog,
    b: &RuleCatalog,
) -> Result<ScoreMatrix, SimilarityError> {
    let rows: Vec<RuleRef> = a.rule_refs().collect();
    let cols: Vec<RuleRef> = b.rule_refs().collect();
    let scores = rows
        .par_iter()
        .map(|r| {
            cols.iter()
                .map(|c| index.score(r, c))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ScoreMatrix::from_parts(
        rows,
        cols,
        scores.into_iter().flatten().collect(),
    ))
}

/// Similarity features, pairwise scores and the mapping pipeline in one call.
pub fn map_catalogs(
    a: &RuleCatalog,
    b: &RuleCatalog,
    model: &EmbeddingModel,
    warnings: &WarningIndex,
    config: &MappingConfig,
    threads: Option<usize>,
) -> Result<(ScoreMatrix, PipelineOutcome), MapError> {
    config.validate()?;
    let matrix = with_threads(threads, || {
        let index = SimilarityIndex::build(a, b, model, config.idf_mode(), config.text_options());
        score_matrix(&index, a, b)
    })??;
    let outcome = mapping::run_pipeline(&matrix, warnings, config)?;
    Ok((matrix, outcome))
}

/// [`diff::diff_all`] with pairs processed in parallel.
pub fn diff_all(
    pairs: &[ConfirmedPair],
    index: &WarningIndex,
    spans: &MethodSpanIndex,
    granularity: &GranularityMap,
) -> Result<DiffOutcome, DiffError> {
    let results = pairs
        .par_iter()
        .map(|p| diff::diff_pair(p, index, spans, granularity))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(diff::collect_outcome(results))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rulediff_core::RuleDescriptor;

    fn catalog(tool: &str, texts: &[&str]) -> RuleCatalog {
        let rules = texts
            .iter()
            .enumerate()
            .map(|(i, t)| RuleDescriptor::new(tool, format!("R{i}"), *t, "", vec![]).unwrap())
            .collect();
        RuleCatalog::new(tool, rules).unwrap()
    }

    #[test]
    fn parallel_matrix_matches_sequential() {
        let a = catalog(
            "a",
            &["null pointer check", "string equals", "empty catch block"],
        );
        let b = catalog(
            "b",
            &[
                "catch block empty",
                "compare strings with equals",
                "unused import",
                "null check",
            ],
        );
        let model = EmbeddingModel::new(2).unwrap();
        let index = SimilarityIndex::build(&a, &b, &model, Default::default(), Default::default());
        let seq = ScoreMatrix::compute(&index, &a, &b).unwrap();
        for threads in [Some(1), Some(4), None] {
            let par = with_threads(threads, || score_matrix(&index, &a, &b))
                .unwrap()
                .unwrap();
            assert_eq!(par, seq);
        }
    }
}
