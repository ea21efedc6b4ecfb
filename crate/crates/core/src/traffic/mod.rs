//! Session-level traffic analysis: reassembly, compressibility profiles and
//! detection rules.

mod detect;
pub mod pcap;
mod profile;
mod reassembly;
mod rules;

use std::fmt;
use std::net::SocketAddrV4;
use std::time::Duration;

use serde::{Serialize, Serializer};

pub use detect::{evaluate_rule, run_detection, Alert, DetectionReport, DetectionSummary, Evaluation};
pub use profile::{profile, ProfileReport, ProtocolProfile};
pub use reassembly::{reassemble, Reassembly, ReassemblyStats};
pub use rules::{load_rules, parse_rules, DetectionRule, Detector, NcdProximity, RatioWindow, Selector};

/// Smallest payload a detector or profile looks at. Below this, container
/// headers dominate the compressed length.
pub const DEFAULT_MIN_PAYLOAD: usize = 64;

/// Upper ratio bound used when a ratio rule does not set one.
pub const DEFAULT_LESS_THAN: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    ToServer,
    ToClient,
    Both,
}

impl Direction {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "to_server" => Some(Self::ToServer),
            "to_client" => Some(Self::ToClient),
            "both" => Some(Self::Both),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FlowKey {
    pub client: SocketAddrV4,
    pub server: SocketAddrV4,
}

impl FlowKey {
    pub fn protocol(&self) -> &'static str {
        "tcp"
    }
}

impl fmt::Display for FlowKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} -> {} tcp", self.client, self.server)
    }
}

impl Serialize for FlowKey {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("FlowKey", 5)?;
        st.serialize_field("client_addr", &self.client.ip().to_string())?;
        st.serialize_field("client_port", &self.client.port())?;
        st.serialize_field("server_addr", &self.server.ip().to_string())?;
        st.serialize_field("server_port", &self.server.port())?;
        st.serialize_field("protocol", self.protocol())?;
        st.end()
    }
}

/// A reassembled TCP conversation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Session {
    pub key: FlowKey,
    pub client_payload: Vec<u8>,
    pub server_payload: Vec<u8>,
    /// Both directions interleaved in the order the bytes became deliverable.
    pub combined_payload: Vec<u8>,
    pub first_ts: Duration,
    pub last_ts: Duration,
    /// Both sides sent FIN.
    pub complete: bool,
}

impl Session {
    pub fn payload(&self, dir: Direction) -> &[u8] {
        match dir {
            Direction::ToServer => &self.client_payload,
            Direction::ToClient => &self.server_payload,
            Direction::Both => &self.combined_payload,
        }
    }
}
