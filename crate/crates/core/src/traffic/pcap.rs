//! Classic pcap input (Ethernet / IPv4 / TCP) and a small writer for
//! synthesizing captures.
//!
//! Record framing comes from `pcap-file`; link, network and transport headers
//! are decoded here. Anything that is not Ethernet + IPv4 + TCP is skipped and
//! counted.

use std::net::{Ipv4Addr, SocketAddrV4};
use std::ops::BitOr;
use std::time::Duration;

use pcap_file::pcap::{PcapHeader, PcapPacket, PcapParser, PcapWriter};
use pcap_file::{DataLink, Endianness, PcapError, TsResolution};
use serde::Serialize;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TcpFlags(pub u8);

impl TcpFlags {
    pub const FIN: TcpFlags = TcpFlags(0x01);
    pub const SYN: TcpFlags = TcpFlags(0x02);
    pub const RST: TcpFlags = TcpFlags(0x04);
    pub const PSH: TcpFlags = TcpFlags(0x08);
    pub const ACK: TcpFlags = TcpFlags(0x10);

    pub fn contains(self, other: TcpFlags) -> bool {
        self.0 & other.0 == other.0
    }
}

impl BitOr for TcpFlags {
    type Output = TcpFlags;
    fn bitor(self, rhs: TcpFlags) -> TcpFlags {
        TcpFlags(self.0 | rhs.0)
    }
}

/// One decoded TCP segment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TcpSegmentSpec {
    pub src: SocketAddrV4,
    pub dst: SocketAddrV4,
    pub seq: u32,
    pub ack: u32,
    pub flags: TcpFlags,
    pub payload: Vec<u8>,
    pub timestamp: Duration,
}

impl TcpSegmentSpec {
    pub fn new(src: SocketAddrV4, dst: SocketAddrV4, seq: u32, ack: u32, flags: TcpFlags, payload: Vec<u8>) -> Self {
        Self { src, dst, seq, ack, flags, payload, timestamp: Duration::ZERO }
    }
}

/// Why a record did not yield a TCP segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Skip {
    Truncated,
    NotIpv4,
    NotTcp,
    Fragment,
    Malformed,
}

/// Counters for records that were not turned into segments.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct DecodeStats {
    pub packets: usize,
    pub tcp_segments: usize,
    pub truncated: usize,
    pub unsupported_link: usize,
    pub non_ipv4: usize,
    pub non_tcp: usize,
    pub fragments: usize,
    pub malformed: usize,
}

impl DecodeStats {
    fn record(&mut self, skip: Skip) {
        match skip {
            Skip::Truncated => self.truncated += 1,
            Skip::NotIpv4 => self.non_ipv4 += 1,
            Skip::NotTcp => self.non_tcp += 1,
            Skip::Fragment => self.fragments += 1,
            Skip::Malformed => self.malformed += 1,
        }
    }

    /// Records that could not be parsed at all.
    pub fn parse_errors(&self) -> usize {
        self.truncated + self.malformed
    }
}

fn be16(b: &[u8], at: usize) -> u16 {
    u16::from_be_bytes([b[at], b[at + 1]])
}

fn be32(b: &[u8], at: usize) -> u32 {
    u32::from_be_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

/// Decodes an Ethernet frame carrying IPv4/TCP. `wire_len` is the original
/// length on the wire; a shorter capture means the snap length cut the frame.
pub fn decode_ethernet(frame: &[u8], wire_len: usize, timestamp: Duration) -> Result<TcpSegmentSpec, Skip> {
    if frame.len() < 14 {
        return Err(Skip::Truncated);
    }
    let mut ethertype = be16(frame, 12);
    let mut offset = 14;
    while ethertype == 0x8100 || ethertype == 0x88a8 {
        if frame.len() < offset + 4 {
            return Err(Skip::Truncated);
        }
        ethertype = be16(frame, offset + 2);
        offset += 4;
    }
    if ethertype != 0x0800 {
        return Err(Skip::NotIpv4);
    }
    decode_ipv4(&frame[offset..], frame.len() < wire_len, timestamp)
}

fn decode_ipv4(ip: &[u8], cut: bool, timestamp: Duration) -> Result<TcpSegmentSpec, Skip> {
    if ip.len() < 20 {
        return Err(Skip::Truncated);
    }
    if ip[0] >> 4 != 4 {
        return Err(Skip::NotIpv4);
    }
    let ihl = (ip[0] & 0x0f) as usize * 4;
    let total = be16(ip, 2) as usize;
    if ihl < 20 || total < ihl {
        return Err(Skip::Malformed);
    }
    if ip.len() < total {
        return Err(if cut { Skip::Truncated } else { Skip::Malformed });
    }
    if ip[9] != 6 {
        return Err(Skip::NotTcp);
    }
    let frag = be16(ip, 6);
    if frag & 0x2000 != 0 || frag & 0x1fff != 0 {
        return Err(Skip::Fragment);
    }
    let src_ip = Ipv4Addr::new(ip[12], ip[13], ip[14], ip[15]);
    let dst_ip = Ipv4Addr::new(ip[16], ip[17], ip[18], ip[19]);
    let tcp = &ip[ihl..total];
    if tcp.len() < 20 {
        return Err(Skip::Malformed);
    }
    let doff = (tcp[12] >> 4) as usize * 4;
    if doff < 20 || doff > tcp.len() {
        return Err(Skip::Malformed);
    }
    Ok(TcpSegmentSpec {
        src: SocketAddrV4::new(src_ip, be16(tcp, 0)),
        dst: SocketAddrV4::new(dst_ip, be16(tcp, 2)),
        seq: be32(tcp, 4),
        ack: be32(tcp, 8),
        flags: TcpFlags(tcp[13] & 0x3f),
        payload: tcp[doff..].to_vec(),
        timestamp,
    })
}

/// Iterates the TCP segments of a capture held in memory.
///
/// Calls `sink(packet_index, segment)` for every decoded segment. A bad file
/// header is a format error; a record cut short at end of file is counted as
/// truncated and ends the walk.
pub fn for_each_segment(capture: &[u8], mut sink: impl FnMut(usize, TcpSegmentSpec)) -> Result<DecodeStats> {
    let (mut rest, parser) = PcapParser::new(capture).map_err(|e| Error::CaptureFormat {
        packet: None,
        msg: match e {
            PcapError::IncompleteBuffer => "file shorter than the 24-byte pcap header".into(),
            other => other.to_string(),
        },
    })?;
    let header = parser.header();
    let ethernet = header.datalink == DataLink::ETHERNET;
    let nanos = header.ts_resolution == TsResolution::NanoSecond;
    let mut stats = DecodeStats::default();

    while !rest.is_empty() {
        let index = stats.packets;
        let (next, raw) = match parser.next_raw_packet(rest) {
            Ok(v) => v,
            Err(_) => {
                stats.packets += 1;
                stats.truncated += 1;
                log::warn!("capture ends inside packet {index}; remaining bytes ignored");
                break;
            }
        };
        rest = next;
        stats.packets += 1;
        if !ethernet {
            stats.unsupported_link += 1;
            continue;
        }
        let frac = if nanos { raw.ts_frac } else { raw.ts_frac.saturating_mul(1000) };
        let timestamp = Duration::new(raw.ts_sec as u64, frac.min(999_999_999));
        match decode_ethernet(&raw.data, raw.orig_len as usize, timestamp) {
            Ok(seg) => {
                stats.tcp_segments += 1;
                sink(index, seg);
            }
            Err(skip) => stats.record(skip),
        }
    }
    Ok(stats)
}

fn checksum(chunks: &[&[u8]]) -> u16 {
    let mut sum = 0u32;
    for chunk in chunks {
        let mut words = chunk.chunks_exact(2);
        for w in &mut words {
            sum += u16::from_be_bytes([w[0], w[1]]) as u32;
        }
        if let [last] = words.remainder() {
            sum += (*last as u32) << 8;
        }
    }
    while sum > 0xffff {
        sum = (sum & 0xffff) + (sum >> 16);
    }
    !(sum as u16)
}

/// Ethernet/IPv4/TCP frame for `seg`, with valid checksums.
pub fn encode_frame(seg: &TcpSegmentSpec) -> Vec<u8> {
    let tcp_len = 20 + seg.payload.len();
    let total = 20 + tcp_len;
    let mut f = Vec::with_capacity(14 + total);
    f.extend_from_slice(&[0x02, 0, 0, 0, 0, 0x02, 0x02, 0, 0, 0, 0, 0x01, 0x08, 0x00]);

    let mut ip = [0u8; 20];
    ip[0] = 0x45;
    ip[2..4].copy_from_slice(&(total as u16).to_be_bytes());
    ip[6] = 0x40; // DF
    ip[8] = 64;
    ip[9] = 6;
    ip[12..16].copy_from_slice(&seg.src.ip().octets());
    ip[16..20].copy_from_slice(&seg.dst.ip().octets());
    let c = checksum(&[&ip]);
    ip[10..12].copy_from_slice(&c.to_be_bytes());

    let mut tcp = [0u8; 20];
    tcp[0..2].copy_from_slice(&seg.src.port().to_be_bytes());
    tcp[2..4].copy_from_slice(&seg.dst.port().to_be_bytes());
    tcp[4..8].copy_from_slice(&seg.seq.to_be_bytes());
    tcp[8..12].copy_from_slice(&seg.ack.to_be_bytes());
    tcp[12] = 5 << 4;
    tcp[13] = seg.flags.0;
    tcp[14..16].copy_from_slice(&65535u16.to_be_bytes());
    let mut pseudo = [0u8; 12];
    pseudo[0..4].copy_from_slice(&seg.src.ip().octets());
    pseudo[4..8].copy_from_slice(&seg.dst.ip().octets());
    pseudo[9] = 6;
    pseudo[10..12].copy_from_slice(&(tcp_len as u16).to_be_bytes());
    let c = checksum(&[&pseudo, &tcp, &seg.payload]);
    tcp[16..18].copy_from_slice(&c.to_be_bytes());

    f.extend_from_slice(&ip);
    f.extend_from_slice(&tcp);
    f.extend_from_slice(&seg.payload);
    f
}

/// Builds a microsecond-resolution Ethernet capture in memory.
pub struct CaptureWriter {
    inner: PcapWriter<Vec<u8>>,
}

impl CaptureWriter {
    pub fn new() -> Self {
        Self::with_endianness(Endianness::Little)
    }

    pub fn with_endianness(endianness: Endianness) -> Self {
        let header = PcapHeader { snaplen: 262_144, datalink: DataLink::ETHERNET, endianness, ..PcapHeader::default() };
        Self { inner: PcapWriter::with_header(Vec::new(), header).expect("write to Vec") }
    }

    pub fn push(&mut self, seg: &TcpSegmentSpec) {
        let frame = encode_frame(seg);
        // microsecond files cannot carry finer timestamps
        let ts = Duration::new(seg.timestamp.as_secs(), seg.timestamp.subsec_micros() * 1000);
        let packet = PcapPacket::new(ts, frame.len() as u32, &frame);
        self.inner.write_packet(&packet).expect("write to Vec");
    }

    pub fn finish(self) -> Vec<u8> {
        self.inner.into_writer()
    }
}

impl Default for CaptureWriter {
    fn default() -> Self {
        Self::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(payload: &[u8]) -> TcpSegmentSpec {
        TcpSegmentSpec {
            timestamp: Duration::new(1_000, 250_000),
            ..TcpSegmentSpec::new(
                "10.0.0.1:1234".parse().unwrap(),
                "10.0.0.2:80".parse().unwrap(),
                7,
                9,
                TcpFlags::ACK | TcpFlags::PSH,
                payload.to_vec(),
            )
        }
    }

    #[test]
    fn frame_round_trips_through_both_endiannesses() {
        for e in [Endianness::Little, Endianness::Big] {
            let mut w = CaptureWriter::with_endianness(e);
            w.push(&seg(b"hello"));
            let cap = w.finish();
            let mut got = Vec::new();
            let stats = for_each_segment(&cap, |i, s| got.push((i, s))).unwrap();
            assert_eq!(stats.tcp_segments, 1);
            assert_eq!(got, vec![(0, seg(b"hello"))]);
        }
    }

    #[test]
    fn checksums_verify() {
        let f = encode_frame(&seg(b"odd"));
        assert_eq!(checksum(&[&f[14..34]]), 0);
    }

    #[test]
    fn bad_magic_is_a_format_error() {
        let e = for_each_segment(&[0u8; 40], |_, _| {}).unwrap_err();
        assert!(matches!(e, Error::CaptureFormat { packet: None, .. }));
        assert!(for_each_segment(&[0xd4, 0xc3], |_, _| {}).is_err());
    }

    #[test]
    fn skips_are_counted() {
        let mut w = CaptureWriter::new();
        w.push(&seg(b"x"));
        let mut cap = w.finish();
        // append a record whose declared length runs past end of file
        cap.extend_from_slice(&[0, 0, 0, 0, 0, 0, 0, 0, 100, 0, 0, 0, 100, 0, 0, 0, 1, 2, 3]);
        let stats = for_each_segment(&cap, |_, _| {}).unwrap();
        assert_eq!(stats.tcp_segments, 1);
        assert_eq!(stats.truncated, 1);

        let mut frame = encode_frame(&seg(b"abc"));
        frame[12] = 0x86;
        frame[13] = 0xdd;
        assert_eq!(decode_ethernet(&frame, frame.len(), Duration::ZERO), Err(Skip::NotIpv4));
        let mut frame = encode_frame(&seg(b"abc"));
        frame[14 + 9] = 17;
        assert_eq!(decode_ethernet(&frame, frame.len(), Duration::ZERO), Err(Skip::NotTcp));
        let frame = encode_frame(&seg(b"abcdef"));
        assert_eq!(decode_ethernet(&frame[..frame.len() - 2], frame.len(), Duration::ZERO), Err(Skip::Truncated));
    }
}
