use std::collections::BTreeMap;
use std::fmt::Write as _;

use chrono::{Datelike, NaiveDate};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::extraction::{DecisionRecord, Verdict};

use super::{EvalError, InteractionLogEntry, RaterClass, Rating, SurveyResponse};

/// A computed value, or `"undefined"` when its denominator is zero.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Metric<T>(pub Option<T>);

impl<T> Metric<T> {
    pub fn undefined() -> Self {
        Metric(None)
    }

    pub fn value(&self) -> Option<&T> {
        self.0.as_ref()
    }
}

impl<T: Serialize> Serialize for Metric<T> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match &self.0 {
            Some(v) => v.serialize(s),
            None => s.serialize_str("undefined"),
        }
    }
}

impl<'de, T: Deserialize<'de>> Deserialize<'de> for Metric<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw<T> {
            Value(T),
            Marker(String),
        }
        match Raw::deserialize(d)? {
            Raw::Value(v) => Ok(Metric(Some(v))),
            Raw::Marker(m) if m == "undefined" => Ok(Metric(None)),
            Raw::Marker(m) => Err(serde::de::Error::custom(format!("unexpected marker {m:?}"))),
        }
    }
}

fn ratio(num: usize, den: usize) -> Metric<f64> {
    if den == 0 {
        Metric::undefined()
    } else {
        Metric(Some(num as f64 / den as f64))
    }
}

fn nps(promoters: usize, detractors: usize, total: usize) -> Metric<i32> {
    if total == 0 {
        return Metric::undefined();
    }
    let diff = 100 * (promoters as i64 - detractors as i64);
    let n = total as i64;
    // Round half away from zero without going through floats.
    let rounded = if diff >= 0 {
        (2 * diff + n) / (2 * n)
    } else {
        -((-2 * diff + n) / (2 * n))
    };
    Metric(Some(rounded as i32))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricsConfig {
    /// Ratings at or above this count as accurate.
    pub accuracy_min_rating: u8,
}

impl Default for MetricsConfig {
    fn default() -> Self {
        Self {
            accuracy_min_rating: 4,
        }
    }
}

/// Inclusive date range.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Window {
    pub from: NaiveDate,
    pub to: NaiveDate,
}

impl Window {
    pub fn new(from: NaiveDate, to: NaiveDate) -> Result<Self, EvalError> {
        if from > to {
            return Err(EvalError::EmptyWindow);
        }
        Ok(Self { from, to })
    }

    pub fn contains(&self, d: NaiveDate) -> bool {
        self.from <= d && d <= self.to
    }

    /// ISO weeks touched by the window, in order.
    pub fn iso_weeks(&self) -> Vec<String> {
        let mut weeks = Vec::new();
        let mut d = self.from;
        loop {
            let w = week_label(d);
            if weeks.last() != Some(&w) {
                weeks.push(w);
            }
            if d >= self.to {
                break;
            }
            d = d.succ_opt().expect("date in range");
        }
        weeks
    }
}

pub fn week_label(d: NaiveDate) -> String {
    let w = d.iso_week();
    format!("{}-W{:02}", w.year(), w.week())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TargetStatus {
    Met,
    Unmet,
    NotEvaluated,
    ExternalInputRequired,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetRow {
    pub dimension: String,
    pub metric: String,
    pub target: String,
    pub instrument: String,
    pub computed: String,
    pub status: TargetStatus,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportCounts {
    pub queries: usize,
    pub flagged: usize,
    pub resolved: usize,
    pub decisions: usize,
    pub corrections: usize,
    pub ratings: usize,
    pub accurate_ratings: usize,
    pub surveys: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub window: Window,
    pub accuracy: Metric<f64>,
    pub correction_rate: Metric<f64>,
    pub weekly_query_volume: BTreeMap<String, u64>,
    pub mean_weekly_query_volume: Metric<f64>,
    pub resolution_rate: Metric<f64>,
    pub mean_time_to_answer_ms: Metric<f64>,
    pub nps: Metric<i32>,
    pub counts: ReportCounts,
    pub targets: Vec<TargetRow>,
}

fn above(value: Option<f64>, threshold: f64) -> TargetStatus {
    match value {
        None => TargetStatus::NotEvaluated,
        Some(v) if v > threshold => TargetStatus::Met,
        Some(_) => TargetStatus::Unmet,
    }
}

fn below(value: Option<f64>, threshold: f64) -> TargetStatus {
    match value {
        None => TargetStatus::NotEvaluated,
        Some(v) if v < threshold => TargetStatus::Met,
        Some(_) => TargetStatus::Unmet,
    }
}

fn pct(m: &Metric<f64>) -> String {
    m.0.map_or("undefined".into(), |v| format!("{:.1}%", v * 100.0))
}

fn row(dim: &str, metric: &str, target: &str, instrument: &str, computed: String, status: TargetStatus) -> TargetRow {
    TargetRow {
        dimension: dim.into(),
        metric: metric.into(),
        target: target.into(),
        instrument: instrument.into(),
        computed,
        status,
    }
}

fn target_rows(
    accuracy: &Metric<f64>,
    correction: &Metric<f64>,
    weekly: &Metric<f64>,
    nps: &Metric<i32>,
) -> Vec<TargetRow> {
    let external = "external input required".to_string();
    vec![
        row("Knowledge Fidelity", "Response accuracy", ">85%", "Expert review protocol",
            pct(accuracy), above(accuracy.0, 0.85)),
        row("Knowledge Fidelity", "Correction rate", "<10%", "Validation logs",
            pct(correction), below(correction.0, 0.10)),
        row("Adoption", "Weekly query volume", ">50 queries/wk", "Interaction logs",
            weekly.0.map_or("undefined".into(), |v| format!("{v:.1} queries/wk")),
            above(weekly.0, 50.0)),
        row("Adoption", "Net Promoter Score", ">40", "User surveys",
            nps.0.map_or("undefined".into(), |v| v.to_string()),
            above(nps.0.map(f64::from), 40.0)),
        row("Org. Impact", "Onboarding reduction", ">20%", "HR analytics",
            external.clone(), TargetStatus::ExternalInputRequired),
        row("Org. Impact", "Consultation time saved", ">15%", "Time tracking",
            external, TargetStatus::ExternalInputRequired),
    ]
}

/// Event counters shared by the batch and incremental paths.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
struct Tally {
    queries: usize,
    latency_sum_ms: u64,
    flagged: usize,
    resolved: usize,
    decisions: usize,
    corrections: usize,
    ratings: usize,
    accurate: usize,
    promoters: usize,
    detractors: usize,
    surveys: usize,
    weekly: BTreeMap<String, u64>,
}

impl Tally {
    fn query(&mut self, e: &InteractionLogEntry) {
        self.queries += 1;
        self.latency_sum_ms += e.latency_ms;
        *self.weekly.entry(week_label(e.asked_at.date_naive())).or_default() += 1;
        self.feedback(e.resolved_flag);
    }

    fn feedback(&mut self, flag: Option<bool>) {
        if let Some(resolved) = flag {
            self.flagged += 1;
            self.resolved += usize::from(resolved);
        }
    }

    fn decision(&mut self, verdict: Verdict) {
        self.decisions += 1;
        self.corrections += usize::from(verdict.is_correction());
    }

    fn rating(&mut self, r: &Rating, config: MetricsConfig) {
        if r.rater_class == RaterClass::Expert {
            self.ratings += 1;
            self.accurate += usize::from(r.score >= config.accuracy_min_rating);
        }
    }

    fn survey(&mut self, score: u8) {
        self.surveys += 1;
        match score {
            9..=10 => self.promoters += 1,
            0..=6 => self.detractors += 1,
            _ => {}
        }
    }

    fn snapshot(&self) -> RunningSnapshot {
        RunningSnapshot {
            accuracy: ratio(self.accurate, self.ratings),
            correction_rate: ratio(self.corrections, self.decisions),
            resolution_rate: ratio(self.resolved, self.flagged),
            mean_time_to_answer_ms: if self.queries == 0 {
                Metric::undefined()
            } else {
                Metric(Some(self.latency_sum_ms as f64 / self.queries as f64))
            },
            nps: nps(self.promoters, self.detractors, self.surveys),
            queries: self.queries,
            weekly_query_volume: self.weekly.clone(),
        }
    }
}

pub fn compute_metrics(
    logs: &[InteractionLogEntry],
    decisions: &[DecisionRecord],
    ratings: &[Rating],
    surveys: &[SurveyResponse],
    window: Window,
    config: MetricsConfig,
) -> Result<MetricsReport, EvalError> {
    let window = Window::new(window.from, window.to)?;
    let mut t = Tally::default();
    for e in logs.iter().filter(|e| window.contains(e.asked_at.date_naive())) {
        t.query(e);
    }
    for d in decisions.iter().filter(|d| window.contains(d.decided_at.date_naive())) {
        t.decision(d.verdict);
    }
    for r in ratings.iter().filter(|r| window.contains(r.rated_at.date_naive())) {
        t.rating(r, config);
    }
    for s in surveys.iter().filter(|s| window.contains(s.submitted_at.date_naive())) {
        t.survey(s.score);
    }

    let weeks = window.iso_weeks();
    let weekly: BTreeMap<String, u64> = weeks
        .iter()
        .map(|w| (w.clone(), t.weekly.get(w).copied().unwrap_or(0)))
        .collect();
    let mean_weekly = Metric(Some(t.queries as f64 / weeks.len() as f64));
    let snap = t.snapshot();
    let targets = target_rows(&snap.accuracy, &snap.correction_rate, &mean_weekly, &snap.nps);
    Ok(MetricsReport {
        window,
        accuracy: snap.accuracy,
        correction_rate: snap.correction_rate,
        weekly_query_volume: weekly,
        mean_weekly_query_volume: mean_weekly,
        resolution_rate: snap.resolution_rate,
        mean_time_to_answer_ms: snap.mean_time_to_answer_ms,
        nps: snap.nps,
        counts: ReportCounts {
            queries: t.queries,
            flagged: t.flagged,
            resolved: t.resolved,
            decisions: t.decisions,
            corrections: t.corrections,
            ratings: t.ratings,
            accurate_ratings: t.accurate,
            surveys: t.surveys,
        },
        targets,
    })
}

/// All-time values as maintained by the service.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunningSnapshot {
    pub accuracy: Metric<f64>,
    pub correction_rate: Metric<f64>,
    pub resolution_rate: Metric<f64>,
    pub mean_time_to_answer_ms: Metric<f64>,
    pub nps: Metric<i32>,
    pub queries: usize,
    pub weekly_query_volume: BTreeMap<String, u64>,
}

/// Incrementally maintained counters over every event seen so far.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunningMetrics {
    config_min_rating: Option<u8>,
    tally: Tally,
}

impl RunningMetrics {
    pub fn new(config: MetricsConfig) -> Self {
        Self {
            config_min_rating: Some(config.accuracy_min_rating),
            tally: Tally::default(),
        }
    }

    fn config(&self) -> MetricsConfig {
        MetricsConfig {
            accuracy_min_rating: self
                .config_min_rating
                .unwrap_or(MetricsConfig::default().accuracy_min_rating),
        }
    }

    pub fn on_query(&mut self, entry: &InteractionLogEntry) {
        self.tally.query(entry);
    }

    pub fn on_feedback(&mut self, resolved: bool) {
        self.tally.feedback(Some(resolved));
    }

    pub fn on_decision(&mut self, verdict: Verdict) {
        self.tally.decision(verdict);
    }

    pub fn on_rating(&mut self, rating: &Rating) {
        let config = self.config();
        self.tally.rating(rating, config);
    }

    pub fn on_survey(&mut self, score: u8) {
        self.tally.survey(score);
    }

    /// Recomputes every counter from raw records.
    pub fn rebuild<'a>(
        config: MetricsConfig,
        logs: impl IntoIterator<Item = &'a InteractionLogEntry>,
        decisions: impl IntoIterator<Item = &'a DecisionRecord>,
        ratings: impl IntoIterator<Item = &'a Rating>,
        surveys: impl IntoIterator<Item = &'a SurveyResponse>,
    ) -> Self {
        let mut m = Self::new(config);
        logs.into_iter().for_each(|e| m.on_query(e));
        decisions.into_iter().for_each(|d| m.on_decision(d.verdict));
        ratings.into_iter().for_each(|r| m.on_rating(r));
        surveys.into_iter().for_each(|s| m.on_survey(s.score));
        m
    }

    pub fn snapshot(&self) -> RunningSnapshot {
        self.tally.snapshot()
    }
}

fn status_label(s: TargetStatus) -> &'static str {
    match s {
        TargetStatus::Met => "yes",
        TargetStatus::Unmet => "no",
        TargetStatus::NotEvaluated => "n/a",
        TargetStatus::ExternalInputRequired => "external",
    }
}

/// Plain-text table with the columns Dimension, Metric, Target, Computed, Met.
pub fn render_table(report: &MetricsReport) -> String {
    let header = ["Dimension", "Metric", "Target", "Computed", "Met"];
    let rows: Vec<[String; 5]> = report
        .targets
        .iter()
        .map(|r| {
            [
                r.dimension.clone(),
                r.metric.clone(),
                r.target.clone(),
                r.computed.clone(),
                status_label(r.status).to_string(),
            ]
        })
        .collect();
    let mut widths = header.map(str::len);
    for r in &rows {
        for (w, cell) in widths.iter_mut().zip(r) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let _ = writeln!(out, "Window: {} to {}", report.window.from, report.window.to);
    let line = |cells: &[String]| {
        cells
            .iter()
            .zip(widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    out.push_str(&line(&header.map(String::from)));
    out.push('\n');
    out.push_str(&line(&widths.map(|w| "-".repeat(w))));
    out.push('\n');
    for r in &rows {
        out.push_str(&line(r));
        out.push('\n');
    }
    let extra = |m: &Metric<f64>, f: &dyn Fn(f64) -> String| m.0.map_or("undefined".to_string(), f);
    let _ = writeln!(
        out,
        "Resolution rate: {}",
        extra(&report.resolution_rate, &|v| format!("{:.1}%", v * 100.0))
    );
    let _ = writeln!(
        out,
        "Mean time to answer: {}",
        extra(&report.mean_time_to_answer_ms, &|v| format!("{v:.1} ms"))
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ids::{ArtifactId, PrincipalId, QueryId, SampleId};
    use crate::model::AuditSubject;
    use chrono::{DateTime, Duration, TimeZone, Utc};
    use proptest::prelude::*;

    fn t0() -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2026, 3, 2, 9, 0, 0).unwrap()
    }

    fn window() -> Window {
        Window::new(
            NaiveDate::from_ymd_opt(2026, 3, 2).unwrap(),
            NaiveDate::from_ymd_opt(2026, 3, 8).unwrap(),
        )
        .unwrap()
    }

    fn log(i: u128, resolved: Option<bool>, latency: u64) -> InteractionLogEntry {
        InteractionLogEntry {
            query_id: QueryId::from_u128(i),
            principal: PrincipalId::new("eng"),
            asked_at: t0() + Duration::minutes(i as i64),
            latency_ms: latency,
            cited_artifact_ids: vec![ArtifactId::from_u128(i)],
            resolved_flag: resolved,
        }
    }

    fn decision(v: Verdict) -> DecisionRecord {
        DecisionRecord {
            subject: AuditSubject::Artifact(ArtifactId::from_u128(1)),
            verdict: v,
            reviewer: "x".into(),
            decided_at: t0(),
            revision: None,
        }
    }

    fn rating(i: u128, score: u8, class: RaterClass) -> Rating {
        Rating {
            sample_id: SampleId::from_u128(1),
            query_id: QueryId::from_u128(i),
            rater: PrincipalId::new("r"),
            rater_class: class,
            score,
            rated_at: t0(),
        }
    }

    fn survey(score: u8) -> SurveyResponse {
        SurveyResponse::new(PrincipalId::new("u"), score, t0()).unwrap()
    }

    #[test]
    fn nps_fixture_is_forty() {
        let s: Vec<_> = [10, 10, 9, 8, 3].into_iter().map(survey).collect();
        let r = compute_metrics(&[], &[], &[], &s, window(), MetricsConfig::default()).unwrap();
        assert_eq!(r.nps, Metric(Some(40)));
        assert_eq!(r.targets[3].status, TargetStatus::Unmet);
    }

    #[test]
    fn nps_rounding() {
        assert_eq!(nps(1, 0, 3), Metric(Some(33)));
        assert_eq!(nps(2, 0, 3), Metric(Some(67)));
        assert_eq!(nps(0, 2, 3), Metric(Some(-67)));
        assert_eq!(nps(0, 0, 0), Metric(None));
    }

    #[test]
    fn accuracy_ignores_annotators() {
        let mut r: Vec<_> = (0..7).map(|i| rating(i, 5, RaterClass::Expert)).collect();
        r.push(rating(7, 4, RaterClass::Expert));
        r.push(rating(8, 2, RaterClass::Expert));
        r.push(rating(9, 2, RaterClass::Expert));
        r.push(rating(10, 1, RaterClass::Annotator));
        let m = compute_metrics(&[], &[], &r, &[], window(), MetricsConfig::default()).unwrap();
        assert_eq!(m.accuracy, Metric(Some(0.8)));
        assert_eq!(m.targets[0].status, TargetStatus::Unmet);
    }

    #[test]
    fn zero_decisions_is_undefined() {
        let m = compute_metrics(&[], &[], &[], &[], window(), MetricsConfig::default()).unwrap();
        assert_eq!(m.correction_rate, Metric(None));
        assert_eq!(m.targets[1].status, TargetStatus::NotEvaluated);
        let json = serde_json::to_value(&m).unwrap();
        assert_eq!(json["correction_rate"], "undefined");
        assert_eq!(json["accuracy"], "undefined");
        let back: MetricsReport = serde_json::from_value(json).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn empty_window() {
        let w = Window {
            from: NaiveDate::from_ymd_opt(2026, 3, 9).unwrap(),
            to: NaiveDate::from_ymd_opt(2026, 3, 8).unwrap(),
        };
        assert_eq!(
            compute_metrics(&[], &[], &[], &[], w, MetricsConfig::default()),
            Err(EvalError::EmptyWindow)
        );
    }

    #[test]
    fn six_table_rows() {
        let m = compute_metrics(&[], &[], &[], &[], window(), MetricsConfig::default()).unwrap();
        let targets: Vec<(&str, &str)> =
            m.targets.iter().map(|r| (r.metric.as_str(), r.target.as_str())).collect();
        assert_eq!(
            targets,
            vec![
                ("Response accuracy", ">85%"),
                ("Correction rate", "<10%"),
                ("Weekly query volume", ">50 queries/wk"),
                ("Net Promoter Score", ">40"),
                ("Onboarding reduction", ">20%"),
                ("Consultation time saved", ">15%"),
            ]
        );
        assert_eq!(m.targets[4].status, TargetStatus::ExternalInputRequired);
        assert_eq!(m.targets[5].computed, "external input required");
        let table = render_table(&m);
        assert!(table.contains("Dimension"));
        assert!(table.contains("Consultation time saved"));
    }

    #[test]
    fn weekly_buckets_span_window() {
        let w = Window::new(
            NaiveDate::from_ymd_opt(2026, 3, 2).unwrap(),
            NaiveDate::from_ymd_opt(2026, 3, 15).unwrap(),
        )
        .unwrap();
        let logs: Vec<_> = (0..10).map(|i| log(i, None, 10)).collect();
        let m = compute_metrics(&logs, &[], &[], &[], w, MetricsConfig::default()).unwrap();
        assert_eq!(m.weekly_query_volume.len(), 2);
        assert_eq!(m.weekly_query_volume["2026-W10"], 10);
        assert_eq!(m.weekly_query_volume["2026-W11"], 0);
        assert_eq!(m.mean_weekly_query_volume, Metric(Some(5.0)));
        assert_eq!(m.targets[2].status, TargetStatus::Unmet);
    }

    fn verdict_strategy() -> impl Strategy<Value = Verdict> {
        prop_oneof![Just(Verdict::Approve), Just(Verdict::Reject), Just(Verdict::Edit)]
    }

    proptest! {
        #[test]
        fn running_equals_replay(
            flags in prop::collection::vec(prop::option::of(any::<bool>()), 0..40),
            latencies in prop::collection::vec(0u64..5000, 40),
            verdicts in prop::collection::vec(verdict_strategy(), 0..30),
            scores in prop::collection::vec((1u8..=5, any::<bool>()), 0..30),
            surveys in prop::collection::vec(0u8..=10, 0..30),
        ) {
            let logs: Vec<_> = flags.iter().enumerate()
                .map(|(i, f)| log(i as u128, None, latencies[i]).with_flag(*f)).collect();
            let decisions: Vec<_> = verdicts.iter().map(|v| decision(*v)).collect();
            let ratings: Vec<_> = scores.iter().enumerate()
                .map(|(i, (s, e))| rating(i as u128, *s, if *e { RaterClass::Expert } else { RaterClass::Annotator }))
                .collect();
            let surveys: Vec<_> = surveys.into_iter().map(survey).collect();

            // Incremental path: queries arrive unflagged, feedback later.
            let config = MetricsConfig::default();
            let mut running = RunningMetrics::new(config);
            for e in &logs {
                running.on_query(&InteractionLogEntry { resolved_flag: None, ..e.clone() });
            }
            for e in &logs {
                if let Some(f) = e.resolved_flag { running.on_feedback(f); }
            }
            decisions.iter().for_each(|d| running.on_decision(d.verdict));
            ratings.iter().for_each(|r| running.on_rating(r));
            surveys.iter().for_each(|s| running.on_survey(s.score));

            let batch = compute_metrics(&logs, &decisions, &ratings, &surveys, window(), config).unwrap();
            let snap = running.snapshot();
            prop_assert_eq!(snap.accuracy, batch.accuracy);
            prop_assert_eq!(snap.correction_rate, batch.correction_rate);
            prop_assert_eq!(snap.resolution_rate, batch.resolution_rate);
            prop_assert_eq!(snap.mean_time_to_answer_ms, batch.mean_time_to_answer_ms);
            prop_assert_eq!(snap.nps, batch.nps);
            prop_assert_eq!(snap.queries, batch.counts.queries);
            let rebuilt = RunningMetrics::rebuild(config, &logs, &decisions, &ratings, &surveys);
            prop_assert_eq!(rebuilt.snapshot(), snap);
        }
    }

    impl InteractionLogEntry {
        fn with_flag(mut self, f: Option<bool>) -> Self {
            self.resolved_flag = f;
            self
        }
    }
}
