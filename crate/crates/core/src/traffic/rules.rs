//! Line-based detection rule files.
//!
//! ```text
//! # comment
//! rule <id> ports=<p,...|any> dir=<to_server|to_client|both> detector=ratio [more_than=<x>] [less_than=<x>] compressor=<deflate|bwt|rle> msg="<text>"
//! rule <id> ports=<p,...|any> dir=<...> detector=ncd file=<path> dist=<x> compressor=<...> msg="<text>"
//! ```
//!
//! Defaults: `dir=both`, `compressor=deflate`, `less_than=2.0`. Relative
//! `file=` paths resolve against the rule file's directory. Reference files
//! are read once, at load time.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use super::{Direction, DEFAULT_LESS_THAN};
use crate::compressor::CompressorKind;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Selector {
    /// `None` matches every server port.
    pub ports: Option<BTreeSet<u16>>,
    pub direction: Direction,
}

impl Selector {
    pub fn matches_port(&self, port: u16) -> bool {
        self.ports.as_ref().is_none_or(|p| p.contains(&port))
    }
}

/// Legal traffic has `more_than < R < less_than`; anything outside alerts.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioWindow {
    pub more_than: Option<f64>,
    pub less_than: f64,
    pub compressor: CompressorKind,
}

impl RatioWindow {
    pub fn new(more_than: Option<f64>, less_than: Option<f64>, compressor: CompressorKind) -> Result<Self, String> {
        let less_than = less_than.unwrap_or(DEFAULT_LESS_THAN);
        if !less_than.is_finite() || less_than <= 0.0 {
            return Err(format!("less_than must be positive, got {less_than}"));
        }
        if let Some(m) = more_than {
            if !m.is_finite() || m < 0.0 {
                return Err(format!("more_than must be non-negative, got {m}"));
            }
            if m >= less_than {
                return Err(format!("more_than ({m}) must be below less_than ({less_than})"));
            }
        }
        Ok(Self { more_than, less_than, compressor })
    }

    pub fn fires(&self, ratio: f64) -> bool {
        self.more_than.is_some_and(|m| ratio < m) || ratio > self.less_than
    }
}

/// Alerts when a session is closer than `dist` (NCD) to a recorded reference.
#[derive(Debug, Clone, PartialEq)]
pub struct NcdProximity {
    pub reference: Arc<Vec<u8>>,
    pub reference_path: PathBuf,
    pub dist: f64,
    pub compressor: CompressorKind,
}

impl NcdProximity {
    pub fn new(
        reference: Vec<u8>,
        reference_path: PathBuf,
        dist: f64,
        compressor: CompressorKind,
    ) -> Result<Self, String> {
        Self::check_dist(dist)?;
        if reference.is_empty() {
            return Err(format!("reference {} is empty", reference_path.display()));
        }
        Ok(Self { reference: Arc::new(reference), reference_path, dist, compressor })
    }

    fn check_dist(dist: f64) -> Result<(), String> {
        if dist > 0.0 && dist <= 1.5 {
            Ok(())
        } else {
            Err(format!("dist must be in (0, 1.5], got {dist}"))
        }
    }

    pub fn fires(&self, ncd: f64) -> bool {
        ncd < self.dist
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Detector {
    Ratio(RatioWindow),
    Ncd(NcdProximity),
}

impl Detector {
    pub fn kind(&self) -> &'static str {
        match self {
            Detector::Ratio(_) => "ratio",
            Detector::Ncd(_) => "ncd",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectionRule {
    pub id: String,
    pub selector: Selector,
    pub detector: Detector,
    pub message: String,
}

fn tokenize(line: &str) -> Result<Vec<String>, String> {
    let mut tokens = Vec::new();
    let mut cur = String::new();
    let mut chars = line.chars();
    let mut in_quotes = false;
    let mut has_token = false;
    while let Some(c) = chars.next() {
        match c {
            '"' => {
                in_quotes = !in_quotes;
                has_token = true;
            }
            '\\' if in_quotes => match chars.next() {
                Some(e @ ('"' | '\\')) => cur.push(e),
                Some(e) => {
                    cur.push('\\');
                    cur.push(e);
                }
                None => return Err("dangling escape".into()),
            },
            c if c.is_whitespace() && !in_quotes => {
                if has_token {
                    tokens.push(std::mem::take(&mut cur));
                    has_token = false;
                }
            }
            c => {
                cur.push(c);
                has_token = true;
            }
        }
    }
    if in_quotes {
        return Err("unterminated quote".into());
    }
    if has_token {
        tokens.push(cur);
    }
    Ok(tokens)
}

fn parse_ports(v: &str) -> Result<Option<BTreeSet<u16>>, String> {
    if v == "any" {
        return Ok(None);
    }
    v.split(',')
        .map(|p| p.trim().parse::<u16>().map_err(|_| format!("invalid port `{p}`")))
        .collect::<Result<BTreeSet<u16>, String>>()
        .map(Some)
}

fn parse_num(key: &str, v: &str) -> Result<f64, String> {
    v.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| format!("{key}: invalid number `{v}`"))
}

fn parse_line(line: &str, base_dir: &Path) -> Result<DetectionRule, LineError> {
    let tokens = tokenize(line).map_err(LineError::Parse)?;
    let mut it = tokens.into_iter();
    if it.next().as_deref() != Some("rule") {
        return Err(LineError::Parse("expected `rule <id> ...`".into()));
    }
    let id = it.next().filter(|s| !s.contains('=')).ok_or_else(|| LineError::Parse("missing rule id".into()))?;

    let mut opts: HashMap<String, String> = HashMap::new();
    for tok in it {
        let (k, v) = tok.split_once('=').ok_or_else(|| LineError::Parse(format!("expected key=value, got `{tok}`")))?;
        if opts.insert(k.to_string(), v.to_string()).is_some() {
            return Err(LineError::Parse(format!("duplicate key `{k}`")));
        }
    }
    let mut take = |k: &str| opts.remove(k);

    let ports = parse_ports(&take("ports").ok_or_else(|| LineError::Parse("missing ports=".into()))?)
        .map_err(LineError::Parse)?;
    let direction = match take("dir") {
        Some(d) => Direction::parse(&d).ok_or_else(|| LineError::Parse(format!("invalid dir `{d}`")))?,
        None => Direction::Both,
    };
    let compressor = match take("compressor") {
        Some(c) => c.parse::<CompressorKind>().map_err(|e| LineError::Parse(e.to_string()))?,
        None => CompressorKind::Deflate,
    };
    let message = take("msg").unwrap_or_else(|| id.clone());
    let detector = match take("detector").as_deref() {
        Some("ratio") => {
            let more = take("more_than").map(|v| parse_num("more_than", &v)).transpose().map_err(LineError::Parse)?;
            let less = take("less_than").map(|v| parse_num("less_than", &v)).transpose().map_err(LineError::Parse)?;
            Detector::Ratio(RatioWindow::new(more, less, compressor).map_err(LineError::Parse)?)
        }
        Some("ncd") => {
            let file = take("file").ok_or_else(|| LineError::Parse("ncd rule needs file=".into()))?;
            let dist = parse_num("dist", &take("dist").ok_or_else(|| LineError::Parse("ncd rule needs dist=".into()))?)
                .map_err(LineError::Parse)?;
            NcdProximity::check_dist(dist).map_err(LineError::Parse)?;
            let path = base_dir.join(&file);
            let reference = std::fs::read(&path).map_err(|source| LineError::Load { path: path.clone(), source })?;
            Detector::Ncd(NcdProximity::new(reference, path, dist, compressor).map_err(LineError::Parse)?)
        }
        Some(other) => return Err(LineError::Parse(format!("unknown detector `{other}`"))),
        None => return Err(LineError::Parse("missing detector=".into())),
    };
    if let Some(k) = opts.keys().min() {
        return Err(LineError::Parse(format!("unknown or misplaced key `{k}`")));
    }
    Ok(DetectionRule { id, selector: Selector { ports, direction }, detector, message })
}

enum LineError {
    Parse(String),
    Load { path: PathBuf, source: std::io::Error },
}

/// Parses rule text. `base_dir` anchors relative reference paths.
pub fn parse_rules(text: &str, base_dir: &Path) -> Result<Vec<DetectionRule>> {
    let mut rules = Vec::new();
    let mut ids = HashSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let rule = parse_line(line, base_dir).map_err(|e| match e {
            LineError::Parse(msg) => Error::RuleParse { line: i + 1, msg },
            LineError::Load { path, source } => Error::RuleLoad { path, source },
        })?;
        if !ids.insert(rule.id.clone()) {
            return Err(Error::RuleParse { line: i + 1, msg: format!("duplicate rule id `{}`", rule.id) });
        }
        rules.push(rule);
    }
    Ok(rules)
}

pub fn load_rules(path: &Path) -> Result<Vec<DetectionRule>> {
    let text = std::fs::read_to_string(path)?;
    parse_rules(&text, path.parent().unwrap_or(Path::new(".")))
}
