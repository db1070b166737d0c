use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use rulediff::formats;
use rulediff::review::ReviewState;
use rulediff::server::{router, App};
use rulediff_core::diff::{
    self, ConfirmedPair, GranularityMap, InconsistencyRecord, MethodSpanIndex,
};
use rulediff_core::findings::summarize_findings;
use rulediff_core::{
    BugCategory, BugPattern, PairCandidate, RuleRef, SimilarityScores, WarningIndex, WarningRecord,
};

fn candidates(n: usize) -> Vec<PairCandidate> {
    (0..n)
        .map(|i| {
            PairCandidate::new(
                RuleRef::new("sonarqube", format!("S{i:03}")),
                RuleRef::new("pmd", format!("P{i:03}")),
                SimilarityScores::combine(0.5, 0.5, 0.0),
            )
        })
        .collect()
}

fn warning(tool: &str, rule: &str, line: u32) -> WarningRecord {
    WarningRecord {
        tool: tool.into(),
        rule_id: rule.into(),
        project: "demo".into(),
        file: "src/Main.java".into(),
        start_line: line,
        end_line: line,
        method: None,
    }
}

/// Five one-sided warnings of pmd:P000 (lines 2, 4, ..., 10) and one of
/// sonarqube:S001 on line 3.
fn inconsistencies() -> Vec<InconsistencyRecord> {
    let mut records: Vec<WarningRecord> = (1..=5).map(|k| warning("pmd", "P000", 2 * k)).collect();
    records.push(warning("sonarqube", "S001", 3));
    let index = WarningIndex::from_records(records).unwrap();
    let mut out = Vec::new();
    for c in &candidates(2) {
        let (r, _) = diff::diff_pair(
            &ConfirmedPair::from(c),
            &index,
            &MethodSpanIndex::new(),
            &GranularityMap::new(),
        )
        .unwrap();
        out.extend(r);
    }
    out
}

struct Harness {
    app: Arc<App>,
    dir: tempfile::TempDir,
}

impl Harness {
    fn new(n: usize, reviewers: &[&str]) -> Self {
        let dir = tempfile::tempdir().unwrap();
        let reviewers: Vec<String> = reviewers.iter().map(|s| s.to_string()).collect();
        let state = ReviewState::new(candidates(n), inconsistencies(), &reviewers);
        let mut app = App::new(state, dir.path().join("verdicts.jsonl"));
        app.confirmed_out = Some(dir.path().join("confirmed.json"));
        app.clock = Box::new(|| 42);
        let src = dir.path().join("src/demo/src");
        std::fs::create_dir_all(&src).unwrap();
        let text: String = (1..=20).map(|i| format!("line {i}\n")).collect();
        std::fs::write(src.join("Main.java"), text).unwrap();
        app.source_root = Some(dir.path().join("src"));
        Self {
            app: Arc::new(app),
            dir,
        }
    }

    async fn call(&self, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
        let req = Request::builder()
            .method(method)
            .uri(uri)
            .header("content-type", "application/json")
            .body(body.map_or(Body::empty(), |b| Body::from(b.to_string())))
            .unwrap();
        let resp = router(self.app.clone()).oneshot(req).await.unwrap();
        let status = resp.status();
        let bytes = resp.into_body().collect().await.unwrap().to_bytes();
        (
            status,
            serde_json::from_slice(&bytes).unwrap_or(Value::Null),
        )
    }

    async fn get(&self, uri: &str) -> (StatusCode, Value) {
        self.call("GET", uri, None).await
    }

    async fn post(&self, uri: &str, body: Value) -> (StatusCode, Value) {
        self.call("POST", uri, Some(body)).await
    }

    fn log(&self) -> Vec<rulediff_core::triage::VerdictEntry> {
        formats::load_verdict_log(&self.dir.path().join("verdicts.jsonl")).unwrap()
    }

    fn first_id(&self) -> String {
        self.app.state.read().unwrap().candidates[0].id.to_string()
    }
}

#[tokio::test]
async fn health_reports_version() {
    let h = Harness::new(1, &[]);
    let (status, body) = h.get("/health").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["status"], "ok");
    assert_eq!(body["version"], env!("CARGO_PKG_VERSION"));
}

#[tokio::test]
async fn candidates_are_paged() {
    let h = Harness::new(120, &[]);
    let (status, body) = h.get("/candidates?page=2&size=50").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["items"].as_array().unwrap().len(), 50);
    assert_eq!(
        (body["total"].as_u64(), body["pages"].as_u64()),
        (Some(120), Some(3))
    );
    let (_, last) = h.get("/candidates?page=3&size=50").await;
    assert_eq!(last["items"].as_array().unwrap().len(), 20);
    let (_, beyond) = h.get("/candidates?page=4&size=50").await;
    assert!(beyond["items"].as_array().unwrap().is_empty());
    let (_, default) = h.get("/candidates").await;
    assert_eq!(default["size"], 50);
    let item = &body["items"][0];
    assert_eq!(item["consensus"], "pending");
    assert!(item["scores"]["description_sim"].is_number());
}

#[tokio::test]
async fn bad_paging_is_a_field_error() {
    let h = Harness::new(3, &[]);
    let (status, body) = h.get("/candidates?page=0&size=abc").await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let fields: Vec<&str> = body["error"]["fields"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| f["field"].as_str().unwrap())
        .collect();
    assert_eq!(fields, ["page", "size"]);
}

#[tokio::test]
async fn unanimous_accept_confirms_and_feeds_diff() {
    let h = Harness::new(3, &["r1", "r2"]);
    let id = h.first_id();
    let uri = format!("/candidates/{id}/verdict");
    let (status, first) = h
        .post(&uri, json!({"reviewer": "r1", "verdict": "accept"}))
        .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(first["consensus"], "pending");
    let (_, second) = h
        .post(&uri, json!({"reviewer": "r2", "verdict": "accept"}))
        .await;
    assert_eq!(second["consensus"], "confirmed");

    let (_, c) = h.get(&format!("/candidates/{id}")).await;
    assert_eq!(c["consensus"], "confirmed");
    assert_eq!(c["votes"], json!({"r1": "accept", "r2": "accept"}));
    let (_, filtered) = h.get("/candidates?status=confirmed").await;
    assert_eq!(filtered["total"], 1);
    let (_, report) = h.get("/report").await;
    assert_eq!(report["diff_eligible"][0]["id"], id.as_str());
    let (_, progress) = h.get("/progress").await;
    assert_eq!(progress["pairs"]["confirmed"], 1);
    assert_eq!(progress["pairs"]["pending"], 2);

    let written = formats::load_confirmed(&h.dir.path().join("confirmed.json")).unwrap();
    assert_eq!(written.len(), 1);
    assert_eq!(h.log().len(), 2);

    // A reject by one reviewer splits the vote and drops the pair.
    h.post(&uri, json!({"reviewer": "r2", "verdict": "reject"}))
        .await;
    let (_, report) = h.get("/report").await;
    assert!(report["diff_eligible"].as_array().unwrap().is_empty());
    assert!(
        formats::load_confirmed(&h.dir.path().join("confirmed.json"))
            .unwrap()
            .is_empty()
    );
}

#[tokio::test]
async fn repeated_verdicts_are_idempotent() {
    let h = Harness::new(2, &[]);
    let uri = format!("/candidates/{}/verdict", h.first_id());
    let body = json!({"reviewer": "r1", "verdict": "accept"});
    let (_, a) = h.post(&uri, body.clone()).await;
    let (_, report_before) = h.get("/report").await;
    let (status, b) = h.post(&uri, body).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(
        (a["duplicate"].as_bool(), b["duplicate"].as_bool()),
        (Some(false), Some(true))
    );
    assert_eq!(a["seq"], b["seq"]);
    assert_eq!(h.log().len(), 1);
    assert_eq!(h.get("/report").await.1, report_before);
}

#[tokio::test]
async fn unknown_ids_are_404_even_with_bad_bodies() {
    let h = Harness::new(1, &[]);
    let (status, body) = h
        .post("/candidates/nope/verdict", json!({"verdict": 3}))
        .await;
    assert_eq!(status, StatusCode::NOT_FOUND);
    assert_eq!(body["error"]["code"], "not_found");
    assert_eq!(h.get("/candidates/nope").await.0, StatusCode::NOT_FOUND);
    assert_eq!(
        h.post("/inconsistencies/nope/label", json!({})).await.0,
        StatusCode::NOT_FOUND
    );
    assert_eq!(
        h.get("/inconsistencies?pair=nope").await.0,
        StatusCode::NOT_FOUND
    );
    assert_eq!(h.get("/does/not/exist").await.0, StatusCode::NOT_FOUND);
}

fn field_names(body: &Value) -> Vec<String> {
    body["error"]["fields"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| f["field"].as_str().unwrap().to_string())
        .collect()
}

#[tokio::test]
async fn malformed_bodies_list_every_field_error() {
    let h = Harness::new(1, &[]);
    let uri = format!("/candidates/{}/verdict", h.first_id());
    let (status, body) = h
        .post(
            &uri,
            json!({"verdict": "false_positive", "pattern": "P12", "extra": 1}),
        )
        .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(body["error"]["code"], "invalid_request");
    assert_eq!(
        field_names(&body),
        ["reviewer", "verdict", "pattern", "extra"]
    );

    let (_, body) = h
        .post(
            &uri,
            json!({"reviewer": "r", "verdict": "accept", "pattern": "P1"}),
        )
        .await;
    assert_eq!(field_names(&body), ["pattern"]);

    let req = Request::builder()
        .method("POST")
        .uri(&uri)
        .body(Body::from("{not json"))
        .unwrap();
    let resp = router(h.app.clone()).oneshot(req).await.unwrap();
    assert_eq!(resp.status(), StatusCode::BAD_REQUEST);

    let inc = h.app.state.read().unwrap().inconsistencies[0]
        .id
        .to_string();
    let (_, body) = h
        .post(
            &format!("/inconsistencies/{inc}/label"),
            json!({"reviewer": "r", "verdict": "not_a_bug", "pattern": "P99"}),
        )
        .await;
    assert_eq!(field_names(&body), ["pattern"]);
    let (_, body) = h
        .post(
            &format!("/inconsistencies/{inc}/label"),
            json!({"reviewer": "r", "verdict": "not_a_bug", "pattern": "P12"}),
        )
        .await;
    assert_eq!(field_names(&body), ["pattern"]);
    assert!(h.log().is_empty());
}

#[tokio::test]
async fn labels_reach_the_report_like_a_replay() {
    let h = Harness::new(2, &[]);
    let pmd_side: Vec<String> = {
        let s = h.app.state.read().unwrap();
        s.inconsistencies
            .iter()
            .filter(|i| i.warning_rule().rule_id == "P000")
            .map(|i| i.id.to_string())
            .collect()
    };
    assert_eq!(pmd_side.len(), 5);
    for id in &pmd_side[..3] {
        let (status, body) = h
            .post(
                &format!("/inconsistencies/{id}/label"),
                json!({"reviewer": "alice", "verdict": "false_positive", "pattern": "P12"}),
            )
            .await;
        assert_eq!(status, StatusCode::OK, "{body}");
        assert_eq!(body["label"]["state"], "agreed");
    }
    let (_, report) = h.get("/report").await;
    let fp = report["tables"]
        .as_array()
        .unwrap()
        .iter()
        .find(|t| t["category"] == "fp")
        .unwrap();
    assert_eq!(fp["rows"][0]["pattern"], "P12");
    assert_eq!(
        fp["rows"][0]["rules"][0]["rule"],
        json!({"tool": "pmd", "rule_id": "P000"})
    );
    assert_eq!(fp["rows"][0]["rules"][0]["occurrence_count"], 3);

    // The same log replayed offline gives the same findings.
    let mut replayed = ReviewState::new(candidates(2), inconsistencies(), &[]);
    replayed.replay(h.log()).unwrap();
    let offline = summarize_findings(
        &replayed.store,
        &replayed.inconsistencies,
        &Default::default(),
        None,
    );
    assert_eq!(report["findings"], serde_json::to_value(&offline).unwrap());
    let row = &offline.pattern_rows(BugCategory::FalsePositive)[0];
    assert_eq!(
        (row.pattern, row.rules[0].occurrence_count),
        (BugPattern::P12, 3)
    );

    let (_, patterns) = h.get("/patterns").await;
    assert_eq!(patterns.as_array().unwrap().len(), BugPattern::ALL.len());
}

#[tokio::test]
async fn inconsistencies_filter_by_pair_with_context() {
    let h = Harness::new(2, &[]);
    let pair = h.app.state.read().unwrap().candidates[1].id.to_string();
    let (status, body) = h.get(&format!("/inconsistencies?pair={pair}")).await;
    assert_eq!(status, StatusCode::OK);
    let items = body["items"].as_array().unwrap();
    assert_eq!(items.len(), 1);
    assert_eq!(items[0]["location"], json!({"kind": "line", "line": 3}));
    assert_eq!(items[0]["warned_by"], "side_a_only");
    assert_eq!(items[0]["context"]["start"], 1);
    assert_eq!(items[0]["context"]["lines"][2], "line 3");
    assert_eq!(items[0]["label"]["state"], "unlabeled");
    let (_, all) = h.get("/inconsistencies").await;
    assert_eq!(all["total"], 6);
}

#[test]
fn context_never_leaves_the_source_root() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("secret.txt"), "hunter2\n").unwrap();
    let root = dir.path().join("root");
    std::fs::create_dir_all(&root).unwrap();
    let mut record = inconsistencies().remove(0);
    record.project = "..".into();
    record.file = "secret.txt".into();
    let state = ReviewState::new(candidates(2), vec![record.clone()], &[]);
    let mut app = App::new(state, dir.path().join("log.jsonl"));
    app.source_root = Some(root);
    let app = Arc::new(app);
    let rt = tokio::runtime::Builder::new_current_thread()
        .build()
        .unwrap();
    let body = rt.block_on(async {
        let req = Request::get(format!("/inconsistencies/{}", record.id))
            .body(Body::empty())
            .unwrap();
        let resp = router(app).oneshot(req).await.unwrap();
        resp.into_body().collect().await.unwrap().to_bytes()
    });
    let v: Value = serde_json::from_slice(&body).unwrap();
    assert!(v.get("context").is_none());
    assert!(!String::from_utf8_lossy(&body).contains("hunter2"));
}

#[tokio::test]
async fn concurrent_verdicts_get_distinct_sequence_numbers() {
    let h = Harness::new(20, &[]);
    let ids: Vec<String> = h
        .app
        .state
        .read()
        .unwrap()
        .candidates
        .iter()
        .map(|c| c.id.to_string())
        .collect();
    let mut tasks = Vec::new();
    for (i, id) in ids.iter().enumerate() {
        let app = h.app.clone();
        let uri = format!("/candidates/{id}/verdict");
        tasks.push(tokio::spawn(async move {
            let body = json!({"reviewer": format!("r{}", i % 3), "verdict": "accept"}).to_string();
            let req = Request::post(uri).body(Body::from(body)).unwrap();
            router(app).oneshot(req).await.unwrap().status()
        }));
    }
    for t in tasks {
        assert_eq!(t.await.unwrap(), StatusCode::OK);
    }
    let seqs: Vec<u64> = h.log().iter().map(|e| e.seq).collect();
    assert_eq!(seqs, (1..=20).collect::<Vec<_>>());

    // A restart replays the log into the same state.
    let mut restarted = ReviewState::new(candidates(20), inconsistencies(), &[]);
    restarted.replay(h.log()).unwrap();
    assert_eq!(restarted.progress(), h.app.state.read().unwrap().progress());
}
