//! Line-oriented text output. Stable enough to diff in tests.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::Value;

use expert_mind_core::evaluation::MetricsReport;
use expert_mind_core::governance::ErasureJob;
use expert_mind_core::query::GroundedResponse;

fn s(v: &Value) -> &str {
    v.as_str().unwrap_or("-")
}

#[derive(Serialize)]
pub struct IngestRow {
    pub file: String,
    pub report: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub artifacts: Option<Value>,
}

pub fn created_expert(v: &Value) -> String {
    format!(
        "expert {} {}\ntoken {}\n",
        s(&v["expert"]["expert_id"]),
        s(&v["expert"]["display_name"]),
        s(&v["token"])
    )
}

pub fn consent(v: &Value) -> String {
    format!(
        "consent {} for expert {} {} until {}\n",
        s(&v["consent_id"]),
        s(&v["expert_id"]),
        s(&v["status"]),
        s(&v["retention_until"])
    )
}

pub fn withdrawal(v: &Value) -> String {
    format!(
        "{}erasure job {} queued, deadline {}\n",
        consent(&v["consent"]),
        s(&v["job"]["job_id"]),
        s(&v["job"]["deadline"])
    )
}

pub fn ingest(rows: &[IngestRow]) -> String {
    let mut out = String::new();
    let mut total = 0;
    for r in rows {
        let extracted = r.artifacts.as_ref().and_then(Value::as_array).map(Vec::len);
        total += extracted.unwrap_or(0);
        let _ = writeln!(
            out,
            "{} {} chunks={} artifacts={}",
            s(&r.report["doc_id"]),
            r.file,
            r.report["chunks"],
            extracted.map_or("-".into(), |n| n.to_string())
        );
    }
    if rows.iter().all(|r| r.artifacts.is_some()) {
        let _ = writeln!(out, "{} documents, {total} artifacts extracted", rows.len());
    } else {
        let _ = writeln!(out, "{} documents ingested", rows.len());
    }
    out
}

pub fn artifacts(v: &Value) -> String {
    let mut out = String::new();
    for a in v.as_array().into_iter().flatten() {
        let _ = writeln!(
            out,
            "{} {} {} {:.2} {}",
            s(&a["artifact_id"]),
            s(&a["state"]),
            s(&a["artifact_type"]),
            a["confidence"].as_f64().unwrap_or(0.0),
            s(&a["statement"])
        );
    }
    let _ = writeln!(out, "{} artifacts", v.as_array().map_or(0, Vec::len));
    out
}

pub fn import_summary(v: &Value) -> String {
    format!(
        "approved {} edited {} skipped {}\n",
        v["approved"], v["edited"], v["skipped"]
    )
}

pub fn rebuild(v: &Value) -> String {
    format!(
        "index rebuilt: {} re-embedded, {} newly indexed, {} total\n",
        v["reindexed"], v["newly_indexed"], v["total"]
    )
}

/// The answer, then one row per citation with its disclosure metadata.
pub fn response(v: &Value) -> String {
    let Ok(r) = serde_json::from_value::<GroundedResponse>(v.clone()) else {
        return format!("{v}\n");
    };
    let mut out = format!("{}\n", r.answer);
    if !r.disclosure.is_empty() {
        let _ = writeln!(out);
        let _ = writeln!(out, "ref  artifact                         confidence captured   domain");
        for d in &r.disclosure {
            let _ = writeln!(
                out,
                "{:<4} {:<32} {:>10.2} {:<10} {}",
                format!("[{}]", d.marker),
                d.artifact_id.to_string(),
                d.confidence,
                d.capture_date,
                d.domain_tag
            );
        }
    }
    let _ = writeln!(out, "query {}", r.query_id);
    out
}

pub fn erasure(v: &Value) -> String {
    let Ok(job) = serde_json::from_value::<ErasureJob>(v.clone()) else {
        return format!("{v}\n");
    };
    let mut out = format!("job {} {:?}\n", job.job_id, job.status);
    if let Some(p) = &job.proof {
        let removed = p.artifacts
            + p.documents
            + p.chunks
            + p.sessions
            + p.vectors
            + p.log_entries
            + p.cached_responses
            + p.corroboration_entries;
        let _ = writeln!(
            out,
            "artifacts {} documents {} chunks {} sessions {} vectors {} log entries {} responses {} corroborations {}",
            p.artifacts, p.documents, p.chunks, p.sessions, p.vectors, p.log_entries, p.cached_responses, p.corroboration_entries
        );
        let _ = writeln!(
            out,
            "tombstoned: {} audit entries, {} decisions; residual scan {}",
            p.audit_entries_tombstoned,
            p.decisions_tombstoned,
            if p.residual_scan_clean { "clean" } else { "NOT clean" }
        );
        let _ = writeln!(out, "{removed} items removed");
    }
    out
}

pub fn alerts(v: &Value) -> String {
    let mut out = String::new();
    for a in v.as_array().into_iter().flatten() {
        let _ = writeln!(out, "{} {} {} {}", s(&a["at"]), s(&a["kind"]), s(&a["job_id"]), s(&a["message"]));
    }
    let _ = writeln!(out, "{} alerts", v.as_array().map_or(0, Vec::len));
    out
}

fn metric(v: Option<&f64>, pct: bool) -> String {
    match (v, pct) {
        (None, _) => "undefined".into(),
        (Some(x), true) => format!("{:.1}%", x * 100.0),
        (Some(x), false) => format!("{x:.1}"),
    }
}

pub fn report(v: &Value) -> String {
    let Ok(r) = serde_json::from_value::<MetricsReport>(v.clone()) else {
        return format!("{v}\n");
    };
    let mut out = String::new();
    let _ = writeln!(out, "window {} to {}", r.window.from, r.window.to);
    let _ = writeln!(out, "accuracy {}", metric(r.accuracy.value(), true));
    let _ = writeln!(out, "correction rate {}", metric(r.correction_rate.value(), true));
    let _ = writeln!(out, "resolution rate {}", metric(r.resolution_rate.value(), true));
    let _ = writeln!(out, "mean weekly queries {}", metric(r.mean_weekly_query_volume.value(), false));
    let _ = writeln!(out, "mean time to answer {} ms", metric(r.mean_time_to_answer_ms.value(), false));
    let _ = writeln!(
        out,
        "nps {}",
        r.nps.value().map_or("undefined".into(), |n| n.to_string())
    );
    for (week, n) in &r.weekly_query_volume {
        let _ = writeln!(out, "week {week} {n}");
    }
    for t in &r.targets {
        let _ = writeln!(out, "target {} | {} | {} | {:?}", t.metric, t.target, t.computed, t.status);
    }
    out
}

pub fn sample(v: &Value) -> String {
    let mut out = format!("sample {} n={} seed={}\n", s(&v["sample_id"]), v["n"], v["seed"]);
    for item in v["items"].as_array().into_iter().flatten() {
        let _ = writeln!(out, "{}", s(&item["query_id"]));
    }
    let _ = writeln!(out, "{} ratings", v["ratings"].as_array().map_or(0, Vec::len));
    out
}

pub fn history(v: &Value) -> String {
    match v["violation"].as_str() {
        None => format!("{} lifecycle entries replay cleanly\n", v["entries"]),
        Some(why) => format!("{} lifecycle entries; violation: {why}\n", v["entries"]),
    }
}
