//! TCP stream reassembly over a whole capture.
//!
//! Each direction is rebuilt in sequence-number order. When segments overlap,
//! the bytes that arrived first win; a retransmission carrying different bytes
//! is counted as a conflict. Sessions end on FIN from both sides or on RST;
//! whatever is still open at end of capture is flushed in first-packet order.

use std::collections::HashMap;
use std::net::SocketAddrV4;
use std::time::Duration;

use serde::Serialize;

use super::pcap::{for_each_segment, DecodeStats, TcpFlags, TcpSegmentSpec};
use super::{FlowKey, Session};
use crate::Result;

/// Offsets further than this from the stream start are ignored.
const MAX_STREAM_OFFSET: i64 = 1 << 26;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ReassemblyStats {
    #[serde(flatten)]
    pub decode: DecodeStats,
    pub sessions: usize,
    /// Flows dropped because they carried no payload at all.
    pub empty_flows: usize,
    /// Segments whose bytes disagreed with data already received.
    pub conflicting_segments: usize,
    /// Bytes missing from a stream (never captured).
    pub missing_bytes: usize,
    /// Bytes before the stream start or absurdly far beyond it.
    pub out_of_window_bytes: usize,
}

#[derive(Debug, Clone, Default)]
pub struct Reassembly {
    pub sessions: Vec<Session>,
    pub stats: ReassemblyStats,
}

#[derive(Default)]
struct DirState {
    syn_seq: Option<u32>,
    segments: Vec<(u32, Vec<u8>, usize)>,
    fin: bool,
}

struct Flow {
    endpoints: [SocketAddrV4; 2],
    client: Option<usize>,
    dirs: [DirState; 2],
    first_ts: Duration,
    last_ts: Duration,
}

/// A rebuilt one-way stream plus, per byte, the packet index after which the
/// byte could be delivered in order.
struct Stream {
    bytes: Vec<u8>,
    ready: Vec<usize>,
}

impl DirState {
    fn assemble(&self, stats: &mut ReassemblyStats) -> Stream {
        let Some(first) = self.segments.first() else {
            return Stream { bytes: Vec::new(), ready: Vec::new() };
        };
        let base = match self.syn_seq {
            Some(isn) => isn.wrapping_add(1),
            None => {
                let lowest =
                    self.segments.iter().map(|(seq, _, _)| seq.wrapping_sub(first.0) as i32).min().unwrap_or(0);
                first.0.wrapping_add(lowest as u32)
            }
        };

        let mut data: Vec<u8> = Vec::new();
        // 0 = hole, otherwise packet index + 1
        let mut owner: Vec<usize> = Vec::new();
        for (seq, payload, packet) in &self.segments {
            let start = seq.wrapping_sub(base) as i32 as i64;
            let mut conflict = false;
            for (k, &b) in payload.iter().enumerate() {
                let off = start + k as i64;
                if !(0..MAX_STREAM_OFFSET).contains(&off) {
                    stats.out_of_window_bytes += 1;
                    continue;
                }
                let off = off as usize;
                if off >= data.len() {
                    data.resize(off + 1, 0);
                    owner.resize(off + 1, 0);
                }
                if owner[off] == 0 {
                    data[off] = b;
                    owner[off] = packet + 1;
                } else if data[off] != b {
                    conflict = true;
                }
            }
            if conflict {
                stats.conflicting_segments += 1;
            }
        }

        let mut bytes = Vec::with_capacity(data.len());
        let mut ready = Vec::with_capacity(data.len());
        let mut latest = 0;
        for (b, o) in data.into_iter().zip(owner) {
            if o == 0 {
                stats.missing_bytes += 1;
                continue;
            }
            latest = latest.max(o);
            bytes.push(b);
            ready.push(latest);
        }
        Stream { bytes, ready }
    }
}

fn interleave(client: &Stream, server: &Stream) -> Vec<u8> {
    let mut out = Vec::with_capacity(client.bytes.len() + server.bytes.len());
    let (mut i, mut j) = (0, 0);
    while i < client.bytes.len() || j < server.bytes.len() {
        let take_client = j >= server.bytes.len() || (i < client.bytes.len() && client.ready[i] <= server.ready[j]);
        if take_client {
            out.push(client.bytes[i]);
            i += 1;
        } else {
            out.push(server.bytes[j]);
            j += 1;
        }
    }
    out
}

impl Flow {
    fn new(seg: &TcpSegmentSpec) -> Self {
        Self {
            endpoints: [seg.src, seg.dst],
            client: None,
            dirs: [DirState::default(), DirState::default()],
            first_ts: seg.timestamp,
            last_ts: seg.timestamp,
        }
    }

    fn add(&mut self, packet: usize, seg: TcpSegmentSpec) {
        let side = usize::from(seg.src != self.endpoints[0]);
        self.last_ts = self.last_ts.max(seg.timestamp);
        self.first_ts = self.first_ts.min(seg.timestamp);
        let dir = &mut self.dirs[side];
        let mut data_seq = seg.seq;
        if seg.flags.contains(TcpFlags::SYN) {
            if dir.syn_seq.is_none() {
                dir.syn_seq = Some(seg.seq);
            }
            if self.client.is_none() {
                // SYN/ACK comes from the server
                let from_server = seg.flags.contains(TcpFlags::ACK);
                self.client = Some(if from_server { 1 - side } else { side });
            }
            data_seq = data_seq.wrapping_add(1);
        }
        if !seg.payload.is_empty() {
            dir.segments.push((data_seq, seg.payload, packet));
        }
        if seg.flags.contains(TcpFlags::FIN) {
            dir.fin = true;
        }
    }

    fn closed(&self) -> bool {
        self.dirs[0].fin && self.dirs[1].fin
    }

    fn finish(self, complete: bool, stats: &mut ReassemblyStats) -> Option<Session> {
        let client = self.client.unwrap_or(0);
        let server = 1 - client;
        let c = self.dirs[client].assemble(stats);
        let s = self.dirs[server].assemble(stats);
        if c.bytes.is_empty() && s.bytes.is_empty() {
            stats.empty_flows += 1;
            return None;
        }
        stats.sessions += 1;
        Some(Session {
            key: FlowKey { client: self.endpoints[client], server: self.endpoints[server] },
            combined_payload: interleave(&c, &s),
            client_payload: c.bytes,
            server_payload: s.bytes,
            first_ts: self.first_ts,
            last_ts: self.last_ts,
            complete,
        })
    }
}

fn conn_key(a: SocketAddrV4, b: SocketAddrV4) -> (SocketAddrV4, SocketAddrV4) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Rebuilds every TCP session in a classic pcap capture.
pub fn reassemble(capture: &[u8]) -> Result<Reassembly> {
    let mut open: HashMap<(SocketAddrV4, SocketAddrV4), (usize, Flow)> = HashMap::new();
    let mut next_id = 0usize;
    let mut done: Vec<Option<Session>> = Vec::new();
    let mut stats = ReassemblyStats::default();

    let decode = for_each_segment(capture, |packet, seg| {
        let key = conn_key(seg.src, seg.dst);
        let rst = seg.flags.contains(TcpFlags::RST);
        let (_, flow) = open.entry(key).or_insert_with(|| {
            next_id += 1;
            (next_id - 1, Flow::new(&seg))
        });
        flow.add(packet, seg);
        if rst || flow.closed() {
            let (_, flow) = open.remove(&key).expect("flow just used");
            let complete = !rst && flow.closed();
            done.push(flow.finish(complete, &mut stats));
        }
    })?;

    let mut rest: Vec<(usize, Flow)> = open.into_values().collect();
    rest.sort_by_key(|(id, _)| *id);
    for (_, flow) in rest {
        done.push(flow.finish(false, &mut stats));
    }
    stats.decode = decode;
    Ok(Reassembly { sessions: done.into_iter().flatten().collect(), stats })
}
