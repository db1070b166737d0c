//! SARIF 2.1.0 to normalized warnings.
//!
//! Each result's first physical location becomes the line span. A method is
//! attached only when a logical location of kind `function` or `method`
//! carries a line span, either as `startLine`/`endLine` properties or through
//! the physical location's `contextRegion`.

use serde::Deserialize;

use rulediff_core::{MethodSpan, WarningRecord};

#[derive(Debug, Deserialize)]
pub struct SarifLog {
    pub version: Option<String>,
    #[serde(default)]
    pub runs: Vec<Run>,
}

#[derive(Debug, Deserialize)]
pub struct Run {
    pub tool: Tool,
    #[serde(default)]
    pub results: Vec<SarifResult>,
}

#[derive(Debug, Deserialize)]
pub struct Tool {
    pub driver: Driver,
}

#[derive(Debug, Deserialize)]
pub struct Driver {
    pub name: String,
    #[serde(default)]
    pub rules: Vec<ReportingDescriptor>,
}

#[derive(Debug, Deserialize)]
pub struct ReportingDescriptor {
    pub id: String,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SarifResult {
    pub rule_id: Option<String>,
    pub rule_index: Option<usize>,
    pub rule: Option<RuleReference>,
    #[serde(default)]
    pub locations: Vec<SarifLocation>,
}

#[derive(Debug, Deserialize)]
pub struct RuleReference {
    pub id: Option<String>,
    pub index: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SarifLocation {
    pub physical_location: Option<PhysicalLocation>,
    #[serde(default)]
    pub logical_locations: Vec<LogicalLocation>,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct PhysicalLocation {
    pub artifact_location: Option<ArtifactLocation>,
    pub region: Option<Region>,
    pub context_region: Option<Region>,
}

#[derive(Debug, Deserialize)]
pub struct ArtifactLocation {
    pub uri: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Region {
    pub start_line: Option<u32>,
    pub end_line: Option<u32>,
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LogicalLocation {
    pub name: Option<String>,
    pub fully_qualified_name: Option<String>,
    pub kind: Option<String>,
    #[serde(default)]
    pub properties: LineProperties,
}

#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct LineProperties {
    pub start_line: Option<u32>,
    pub end_line: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ConvertOptions {
    /// Replaces the driver name as tool id.
    pub tool: Option<String>,
    pub project: String,
    /// Stripped from the front of artifact URIs to make them project-relative.
    pub strip_prefix: Option<String>,
}

/// Why a result was not converted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Skipped {
    NoRule { run: usize, result: usize },
    NoLocation { run: usize, result: usize },
}

#[derive(Debug, Default)]
pub struct Conversion {
    pub records: Vec<WarningRecord>,
    pub skipped: Vec<Skipped>,
}

#[derive(Debug, thiserror::Error)]
pub enum SarifError {
    #[error("invalid SARIF at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unsupported SARIF version {0:?}, expected 2.1.0")]
    Version(String),
}

fn relative_uri(uri: &str, strip: Option<&str>) -> String {
    let uri = uri.strip_prefix("file://").unwrap_or(uri);
    let uri = match strip {
        Some(prefix) => uri.strip_prefix(prefix).unwrap_or(uri),
        None => uri,
    };
    uri.trim_start_matches('/').to_string()
}

fn method_of(loc: &SarifLocation, physical: &PhysicalLocation) -> Option<MethodSpan> {
    let logical = loc
        .logical_locations
        .iter()
        .find(|l| matches!(l.kind.as_deref(), Some("function" | "method")))?;
    let name = logical
        .fully_qualified_name
        .clone()
        .or_else(|| logical.name.clone())?;
    let (start, end) = match (logical.properties.start_line, logical.properties.end_line) {
        (Some(s), Some(e)) => (s, e),
        _ => {
            let ctx = physical.context_region.as_ref()?;
            (ctx.start_line?, ctx.end_line?)
        }
    };
    Some(MethodSpan { name, start, end })
}

pub fn convert(text: &str, options: &ConvertOptions) -> Result<Conversion, SarifError> {
    let log: SarifLog = serde_json::from_str(text).map_err(|e| SarifError::Parse {
        line: e.line(),
        message: e.to_string(),
    })?;
    if let Some(v) = &log.version {
        if v != "2.1.0" {
            return Err(SarifError::Version(v.clone()));
        }
    }
    let mut out = Conversion::default();
    for (ri, run) in log.runs.iter().enumerate() {
        let tool = options
            .tool
            .clone()
            .unwrap_or_else(|| run.tool.driver.name.clone());
        for (xi, result) in run.results.iter().enumerate() {
            let index = result
                .rule_index
                .or(result.rule.as_ref().and_then(|r| r.index));
            let rule_id = result
                .rule_id
                .clone()
                .or_else(|| result.rule.as_ref().and_then(|r| r.id.clone()))
                .or_else(|| {
                    index
                        .and_then(|i| run.tool.driver.rules.get(i))
                        .map(|r| r.id.clone())
                });
            let Some(rule_id) = rule_id else {
                out.skipped.push(Skipped::NoRule {
                    run: ri,
                    result: xi,
                });
                continue;
            };
            let located = result.locations.iter().find_map(|loc| {
                let physical = loc.physical_location.as_ref()?;
                let uri = physical.artifact_location.as_ref()?.uri.as_deref()?;
                let start = physical.region.as_ref()?.start_line.filter(|&l| l > 0)?;
                let end = physical
                    .region
                    .as_ref()?
                    .end_line
                    .unwrap_or(start)
                    .max(start);
                Some((loc, physical, uri, start, end))
            });
            let Some((loc, physical, uri, start_line, end_line)) = located else {
                out.skipped.push(Skipped::NoLocation {
                    run: ri,
                    result: xi,
                });
                continue;
            };
            let method = method_of(loc, physical)
                .filter(|m| m.start > 0 && m.start <= start_line && start_line <= m.end);
            out.records.push(WarningRecord {
                tool: tool.clone(),
                rule_id,
                project: options.project.clone(),
                file: relative_uri(uri, options.strip_prefix.as_deref()),
                start_line,
                end_line,
                method,
            });
        }
    }
    Ok(out)
}
