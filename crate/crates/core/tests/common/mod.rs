#![allow(dead_code)]

use std::net::SocketAddrV4;

use ncdkit::synth::{self, SessionScript};
use ncdkit::traffic::pcap::{CaptureWriter, TcpFlags, TcpSegmentSpec};
use ncdkit::traffic::Direction;
use ncdkit::{CompressorKind, DistanceMatrix, UnrootedTree};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn labels(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("s{i}")).collect()
}

/// Symmetric matrix with uniform off-diagonal entries in [0, 1).
pub fn random_matrix(n: usize, seed: u64) -> DistanceMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..i {
            let x: f64 = rng.random();
            v[i][j] = x;
            v[j][i] = x;
        }
    }
    DistanceMatrix::from_values(labels(n), v, CompressorKind::Deflate).unwrap()
}

/// Every unrooted binary topology on `n` leaves, built by inserting leaf k
/// into each edge of every topology on k leaves.
pub fn all_topologies(n: usize) -> Vec<UnrootedTree> {
    assert!(n >= 4);
    let mut shapes: Vec<Vec<(usize, usize)>> = vec![vec![(0, n), (1, n), (2, n)]];
    for k in 3..n {
        let fresh = n + k - 2;
        let mut next = Vec::new();
        for edges in &shapes {
            for (e, &(a, b)) in edges.iter().enumerate() {
                let mut grown = edges.clone();
                grown[e] = (a, fresh);
                grown.extend([(fresh, b), (k, fresh)]);
                next.push(grown);
            }
        }
        shapes = next;
    }
    shapes.iter().map(|edges| UnrootedTree::from_edges(labels(n), edges).unwrap()).collect()
}

/// Brute-force quartet cost: for every 4-subset, pick the pairing whose
/// members are separated by some edge of the tree.
pub fn brute_raw_cost(tree: &UnrootedTree, m: &DistanceMatrix) -> f64 {
    let n = m.len();
    let splits = tree.splits();
    let separated =
        |a: usize, b: usize, c: usize, d: usize| splits.iter().any(|s| s[a] == s[b] && s[c] == s[d] && s[a] != s[c]);
    let mut total = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                for l in k + 1..n {
                    total += if separated(i, j, k, l) {
                        m.get(i, j) + m.get(k, l)
                    } else if separated(i, k, j, l) {
                        m.get(i, k) + m.get(j, l)
                    } else {
                        m.get(i, l) + m.get(j, k)
                    };
                }
            }
        }
    }
    total
}

/// Best normalized quartet score over all topologies, computed without the
/// library's scoring code.
pub fn exhaustive_best_score(m: &DistanceMatrix) -> f64 {
    let n = m.len();
    let (mut lo, mut hi) = (0.0, 0.0);
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                for l in k + 1..n {
                    let c = [m.get(i, j) + m.get(k, l), m.get(i, k) + m.get(j, l), m.get(i, l) + m.get(j, k)];
                    lo += c[0].min(c[1]).min(c[2]);
                    hi += c[0].max(c[1]).max(c[2]);
                }
            }
        }
    }
    let best = all_topologies(n).iter().map(|t| brute_raw_cost(t, m)).fold(f64::INFINITY, f64::min);
    if hi > lo {
        (hi - best) / (hi - lo)
    } else {
        1.0
    }
}

/// A scripted session with random payloads in both directions plus a capture
/// whose data segments were re-cut, shuffled and partly retransmitted.
pub struct MangledSession {
    pub client_payload: Vec<u8>,
    pub server_payload: Vec<u8>,
    pub capture: Vec<u8>,
}

fn cut(
    src: SocketAddrV4,
    dst: SocketAddrV4,
    seq0: u32,
    data: &[u8],
    rng: &mut ChaCha8Rng,
    out: &mut Vec<TcpSegmentSpec>,
) {
    let mut off = 0;
    while off < data.len() {
        let len = rng.random_range(1..=600).min(data.len() - off);
        let seq = seq0.wrapping_add(off as u32);
        out.push(TcpSegmentSpec::new(src, dst, seq, 0, TcpFlags::ACK | TcpFlags::PSH, data[off..off + len].to_vec()));
        off += len;
    }
}

pub fn mangled_session(seed: u64) -> MangledSession {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut script = SessionScript::new(
        synth::endpoint(10, 9, (seed >> 8) as u8, seed as u8, 30000 + (seed % 1000) as u16),
        synth::endpoint(10, 8, 0, 1, 443),
    );
    script.client_isn = rng.random();
    script.server_isn = rng.random();
    for _ in 0..rng.random_range(1..5) {
        let dir = if rng.random_bool(0.5) { Direction::ToServer } else { Direction::ToClient };
        let len = rng.random_range(1..3000);
        let data =
            if rng.random_bool(0.5) { synth::random_bytes(len, rng.random()) } else { synth::prose(len, rng.random()) };
        script = script.send(dir, data);
    }
    let client_payload = script.client_payload();
    let server_payload = script.server_payload();
    let (c, s) = (script.client, script.server);
    let (cbase, sbase) = (script.client_isn.wrapping_add(1), script.server_isn.wrapping_add(1));

    let all = script.segments();
    let (handshake, close) = (&all[..3], &all[all.len() - 3..]);

    let mut data = Vec::new();
    cut(c, s, cbase, &client_payload, &mut rng, &mut data);
    cut(s, c, sbase, &server_payload, &mut rng, &mut data);
    // retransmissions: whole segments and byte-exact sub-ranges
    for _ in 0..rng.random_range(0..6) {
        let orig = data[rng.random_range(0..data.len())].clone();
        let a = rng.random_range(0..orig.payload.len());
        let b = rng.random_range(a + 1..=orig.payload.len());
        data.push(TcpSegmentSpec {
            seq: orig.seq.wrapping_add(a as u32),
            payload: orig.payload[a..b].to_vec(),
            ..orig
        });
    }
    data.shuffle(&mut rng);

    let mut w = CaptureWriter::new();
    let mut t = script.start;
    for seg in handshake.iter().chain(&data).chain(close) {
        w.push(&TcpSegmentSpec { timestamp: t, ..seg.clone() });
        t += std::time::Duration::from_millis(1);
    }
    MangledSession { client_payload, server_payload, capture: w.finish() }
}
