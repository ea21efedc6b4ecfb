use std::collections::BTreeMap;

use serde::Serialize;

use super::Session;
use crate::compressor::CompressorKind;
use crate::similarity::compression_ratio;

/// Compression-ratio statistics of all sessions to one server port.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProtocolProfile {
    pub label: String,
    pub port: u16,
    pub session_count: usize,
    pub mean_ratio: f64,
    /// Population standard deviation.
    pub stddev_ratio: f64,
    pub compressor: CompressorKind,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ProfileReport {
    pub profiles: Vec<ProtocolProfile>,
    /// Sessions shorter than the minimum payload.
    pub excluded_sessions: usize,
    /// Ports whose sessions were all excluded.
    pub omitted_ports: Vec<u16>,
}

/// Groups sessions by server port and summarizes the compression ratio of
/// their combined payload. Output is sorted by port.
pub fn profile(sessions: &[Session], kind: CompressorKind, min_payload: usize) -> ProfileReport {
    let mut groups: BTreeMap<u16, Vec<f64>> = BTreeMap::new();
    let mut report = ProfileReport::default();
    for s in sessions {
        let ratios = groups.entry(s.key.server.port()).or_default();
        let payload = &s.combined_payload;
        if payload.len() < min_payload.max(1) {
            report.excluded_sessions += 1;
            continue;
        }
        ratios.push(compression_ratio(payload, kind).expect("payload checked non-empty"));
    }
    for (port, ratios) in groups {
        if ratios.is_empty() {
            log::warn!("port {port}: every session is below {min_payload} bytes; no profile");
            report.omitted_ports.push(port);
            continue;
        }
        let n = ratios.len() as f64;
        let mean = ratios.iter().sum::<f64>() / n;
        let var = ratios.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
        report.profiles.push(ProtocolProfile {
            label: format!("tcp/{port}"),
            port,
            session_count: ratios.len(),
            mean_ratio: mean,
            stddev_ratio: var.sqrt(),
            compressor: kind,
        });
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;
    use crate::traffic::reassemble;

    fn sessions(scripts: &[synth::SessionScript]) -> Vec<Session> {
        reassemble(&synth::capture(scripts)).unwrap().sessions
    }

    #[test]
    fn single_and_identical_sessions_have_zero_spread() {
        let one = sessions(&[synth::text_session(0, 6667, 4096)]);
        let p = profile(&one, CompressorKind::Deflate, 64);
        assert_eq!(p.profiles[0].session_count, 1);
        assert_eq!(p.profiles[0].stddev_ratio, 0.0);

        let same: Vec<_> = (0..5).map(|i| synth::text_session(i, 6667, 4096)).collect();
        let p = profile(&sessions(&same), CompressorKind::Deflate, 64);
        assert_eq!(p.profiles[0].session_count, 5);
        assert_eq!(p.profiles[0].stddev_ratio, 0.0);
    }

    #[test]
    fn short_sessions_are_excluded() {
        let s = sessions(&[synth::text_session(0, 25, 40), synth::text_session(1, 80, 500)]);
        let p = profile(&s, CompressorKind::Deflate, 64);
        assert_eq!(p.excluded_sessions, 1);
        assert_eq!(p.omitted_ports, vec![25]);
        assert_eq!(p.profiles.len(), 1);
        assert_eq!(p.profiles[0].label, "tcp/80");
    }

    #[test]
    fn text_and_random_ports_separate() {
        let mut scripts: Vec<_> = (0..10).map(|i| synth::text_session(i, 6667, 4096)).collect();
        scripts.extend((0..10).map(|i| synth::rng_session(i, 22, 4096, 100 + i as u64)));
        let p = profile(&sessions(&scripts), CompressorKind::Deflate, 64);
        let by_port: BTreeMap<u16, &ProtocolProfile> = p.profiles.iter().map(|x| (x.port, x)).collect();
        let irc = by_port[&6667].mean_ratio;
        let ssh = by_port[&22].mean_ratio;
        assert!(irc < 0.6 && ssh > 0.95, "irc {irc} ssh {ssh}");
        assert!(ssh - irc >= 0.3);
    }
}
