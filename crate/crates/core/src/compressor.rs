//! Compression backends used as complexity estimators.
//!
//! Every backend is configured once (maximum effort, maximum block size) and is
//! deterministic: the same input always yields the same compressed length.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Inputs longer than this are truncated before compression. Beyond the
/// compressor windows the distance degrades without any visible sign.
pub const MAX_INPUT_LEN: usize = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CompressorKind {
    /// zlib container around DEFLATE, level 9.
    Deflate,
    /// bzip2 (Burrows-Wheeler), level 9 / 900 KB blocks.
    Bwt,
    /// Byte-oriented run-length encoding, see [`rle_encode`].
    Rle,
}

impl CompressorKind {
    pub const ALL: [CompressorKind; 3] = [Self::Deflate, Self::Bwt, Self::Rle];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Deflate => "deflate",
            Self::Bwt => "bwt",
            Self::Rle => "rle",
        }
    }

    /// Span of history the backend can exploit when matching repeated
    /// content, `None` when unbounded.
    pub fn window_hint(self) -> Option<usize> {
        match self {
            Self::Deflate => Some(32 * 1024),
            Self::Bwt => Some(900_000),
            Self::Rle => None,
        }
    }

    /// Fixed backend parameters, recorded alongside matrices so results from
    /// differently configured backends are never mixed.
    pub fn params(self) -> &'static str {
        match self {
            Self::Deflate => "zlib level=9 window=32768",
            Self::Bwt => "bzip2 level=9 block=900k",
            Self::Rle => "rle max_run=255",
        }
    }

    /// Length in bytes of the complete compressed container for `data`.
    ///
    /// No truncation is applied here; see [`complexity`].
    pub fn compressed_len(self, data: &[u8]) -> usize {
        match self {
            Self::Deflate => {
                let mut enc = flate2::write::ZlibEncoder::new(
                    Vec::with_capacity(data.len() / 2 + 64),
                    flate2::Compression::best(),
                );
                enc.write_all(data).expect("write to Vec cannot fail");
                enc.finish().expect("write to Vec cannot fail").len()
            }
            Self::Bwt => {
                let mut enc =
                    bzip2::write::BzEncoder::new(Vec::with_capacity(data.len() / 2 + 64), bzip2::Compression::best());
                enc.write_all(data).expect("write to Vec cannot fail");
                enc.finish().expect("write to Vec cannot fail").len()
            }
            Self::Rle => rle_len(data),
        }
    }
}

impl fmt::Display for CompressorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CompressorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "deflate" | "zlib" => Ok(Self::Deflate),
            "bwt" | "bzip2" => Ok(Self::Bwt),
            "rle" => Ok(Self::Rle),
            _ => Err(Error::UnknownCompressor(s.to_string())),
        }
    }
}

/// Cuts `data` down to [`MAX_INPUT_LEN`], logging a warning when it does.
/// Returns the (possibly shortened) slice and whether truncation happened.
pub fn truncate_input(data: &[u8]) -> (&[u8], bool) {
    if data.len() > MAX_INPUT_LEN {
        log::warn!("input of {} bytes truncated to {} bytes before compression", data.len(), MAX_INPUT_LEN);
        (&data[..MAX_INPUT_LEN], true)
    } else {
        (data, false)
    }
}

/// Estimated complexity C(x): compressed length of `x` in bytes.
pub fn complexity(x: &[u8], kind: CompressorKind) -> usize {
    let (x, _) = truncate_input(x);
    kind.compressed_len(x)
}

fn runs(data: &[u8]) -> impl Iterator<Item = (u8, usize)> + '_ {
    let mut i = 0;
    std::iter::from_fn(move || {
        let &value = data.get(i)?;
        let start = i;
        while i < data.len() && data[i] == value {
            i += 1;
        }
        Some((value, i - start))
    })
}

fn rle_len(data: &[u8]) -> usize {
    runs(data).map(|(_, len)| 2 * len.div_ceil(255)).sum()
}

/// Encodes `data` as `(value, count)` byte pairs with `count` in `1..=255`.
/// Runs longer than 255 are split greedily.
pub fn rle_encode(data: &[u8]) -> Vec<u8> {
    let mut out = Vec::with_capacity(rle_len(data));
    for (value, mut len) in runs(data) {
        while len > 0 {
            let chunk = len.min(255);
            out.push(value);
            out.push(chunk as u8);
            len -= chunk;
        }
    }
    out
}

/// Inverse of [`rle_encode`]. Returns `None` on odd length or a zero count.
pub fn rle_decode(encoded: &[u8]) -> Option<Vec<u8>> {
    if !encoded.len().is_multiple_of(2) {
        return None;
    }
    let mut out = Vec::new();
    for pair in encoded.chunks_exact(2) {
        if pair[1] == 0 {
            return None;
        }
        out.extend(std::iter::repeat_n(pair[0], pair[1] as usize));
    }
    Some(out)
}
