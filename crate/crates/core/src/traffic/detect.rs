use std::io::Write;

use serde::Serialize;

use super::reassembly::{reassemble, ReassemblyStats};
use super::rules::{DetectionRule, Detector};
use super::{FlowKey, Session};
use crate::compressor::CompressorKind;
use crate::similarity::{compression_ratio, ncd_bytes};
use crate::Result;

/// One firing of a detection rule on a session.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Alert {
    pub rule: String,
    pub flow: FlowKey,
    pub detector: &'static str,
    pub compressor: CompressorKind,
    pub measured_value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub more_than: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub less_than: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dist: Option<f64>,
    pub message: String,
    /// Seconds since the epoch of the session's last packet.
    pub timestamp: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Evaluation {
    Alert(Alert),
    /// Evaluated; the firing condition did not hold.
    Quiet(f64),
    /// Payload below the minimum size; not evaluated.
    Skipped,
}

/// Applies one rule to one session, ignoring the port selector.
pub fn evaluate_rule(session: &Session, rule: &DetectionRule, min_payload: usize) -> Evaluation {
    let payload = session.payload(rule.selector.direction);
    if payload.len() < min_payload.max(1) {
        return Evaluation::Skipped;
    }
    let (measured, fired, compressor) = match &rule.detector {
        Detector::Ratio(w) => {
            let r = compression_ratio(payload, w.compressor).expect("payload is non-empty");
            (r, w.fires(r), w.compressor)
        }
        Detector::Ncd(n) => {
            let d = ncd_bytes(payload, &n.reference, n.compressor).expect("both operands non-empty");
            (d, n.fires(d), n.compressor)
        }
    };
    if !fired {
        return Evaluation::Quiet(measured);
    }
    let (more_than, less_than, dist) = match &rule.detector {
        Detector::Ratio(w) => (w.more_than, Some(w.less_than), None),
        Detector::Ncd(n) => (None, None, Some(n.dist)),
    };
    Evaluation::Alert(Alert {
        rule: rule.id.clone(),
        flow: session.key,
        detector: rule.detector.kind(),
        compressor,
        measured_value: measured,
        more_than,
        less_than,
        dist,
        message: rule.message.clone(),
        timestamp: session.last_ts.as_secs_f64(),
    })
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct DetectionSummary {
    pub rules: usize,
    pub sessions: usize,
    /// (session, rule) pairs actually evaluated.
    pub evaluated: usize,
    /// (session, rule) pairs skipped for a short payload.
    pub skipped: usize,
    pub alerts: usize,
    pub parse_errors: usize,
    pub reassembly: ReassemblyStats,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct DetectionReport {
    pub alerts: Vec<Alert>,
    pub summary: DetectionSummary,
}

impl DetectionReport {
    /// One JSON object per alert, one per line.
    pub fn write_alerts(&self, mut out: impl Write) -> Result<()> {
        for a in &self.alerts {
            serde_json::to_writer(&mut out, a)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn write_summary(&self, mut out: impl Write) -> Result<()> {
        serde_json::to_writer(&mut out, &serde_json::json!({ "summary": &self.summary }))?;
        out.write_all(b"\n")?;
        Ok(())
    }
}

/// Reassembles `capture` and applies every rule whose selector matches each
/// session. Alerts come out in session-completion order, then rule order.
pub fn run_detection(capture: &[u8], rules: &[DetectionRule], min_payload: usize) -> Result<DetectionReport> {
    let reassembly = reassemble(capture)?;
    let per_session = map_sessions(&reassembly.sessions, |s| {
        rules
            .iter()
            .filter(|r| r.selector.matches_port(s.key.server.port()))
            .map(|r| evaluate_rule(s, r, min_payload))
            .collect::<Vec<_>>()
    });

    let mut report = DetectionReport::default();
    for evals in per_session {
        for e in evals {
            match e {
                Evaluation::Alert(a) => {
                    report.summary.evaluated += 1;
                    report.alerts.push(a);
                }
                Evaluation::Quiet(_) => report.summary.evaluated += 1,
                Evaluation::Skipped => report.summary.skipped += 1,
            }
        }
    }
    report.summary.rules = rules.len();
    report.summary.sessions = reassembly.sessions.len();
    report.summary.alerts = report.alerts.len();
    report.summary.parse_errors = reassembly.stats.decode.parse_errors();
    report.summary.reassembly = reassembly.stats;
    Ok(report)
}

#[cfg(feature = "parallel")]
fn map_sessions<T: Send>(sessions: &[Session], f: impl Fn(&Session) -> T + Sync) -> Vec<T> {
    use rayon::prelude::*;
    sessions.par_iter().map(&f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_sessions<T: Send>(sessions: &[Session], f: impl Fn(&Session) -> T + Sync) -> Vec<T> {
    sessions.iter().map(f).collect()
}
