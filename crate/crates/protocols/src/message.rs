//! Protocol messages and their canonical text form.
//!
//! `KIND[tag=..,..](field=..,..)`, for example `READYAFTERECHO[r=1](m=30)`
//! or `SHARE[round=3,q={1,2,4}](s=1,tag=00112233aabbccdd)`. Sets use one-based
//! process numbers; payloads are hex.

use std::fmt;
use std::str::FromStr;

use depthlab_core::ProcessSet;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::value::{Bit, Payload, Value};

/// Truncated dealer provenance tag attached to every coin share.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Tag(pub [u8; 8]);

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex::encode(self.0))
    }
}

impl fmt::Debug for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Tag({self})")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Message {
    Send { m: Payload },
    Echo { m: Payload },
    ReadyAfterEcho { r: u32, m: Payload },
    ReadyAfterReady { r: u32, m: Payload },
    BcaEcho { round: u32, c: u32, v: Bit },
    BcaEchoPrime { round: u32, c: u32, v: Bit },
    BcaEcho2 { round: u32, v: Bit },
    BcaEcho3 { round: u32, v: Value },
    Share { round: u32, q: ProcessSet, s: Bit, tag: Tag },
    Revive1 { round: u32, v: Bit },
    Revive2 { round: u32, v: Bit },
}

impl Message {
    pub fn kind(&self) -> &'static str {
        match self {
            Message::Send { .. } => "SEND",
            Message::Echo { .. } => "ECHO",
            Message::ReadyAfterEcho { .. } => "READYAFTERECHO",
            Message::ReadyAfterReady { .. } => "READYAFTERREADY",
            Message::BcaEcho { .. } => "BCA_ECHO",
            Message::BcaEchoPrime { .. } => "BCA_ECHO_PRIME",
            Message::BcaEcho2 { .. } => "BCA_ECHO2",
            Message::BcaEcho3 { .. } => "BCA_ECHO3",
            Message::Share { .. } => "SHARE",
            Message::Revive1 { .. } => "REVIVE1",
            Message::Revive2 { .. } => "REVIVE2",
        }
    }

    /// Consensus round this message belongs to, if any.
    pub fn round(&self) -> Option<u32> {
        match self {
            Message::BcaEcho { round, .. }
            | Message::BcaEchoPrime { round, .. }
            | Message::BcaEcho2 { round, .. }
            | Message::BcaEcho3 { round, .. }
            | Message::Share { round, .. }
            | Message::Revive1 { round, .. }
            | Message::Revive2 { round, .. } => Some(*round),
            _ => None,
        }
    }
}

impl fmt::Display for Message {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let k = self.kind();
        match self {
            Message::Send { m } | Message::Echo { m } => write!(f, "{k}(m={m})"),
            Message::ReadyAfterEcho { r, m } | Message::ReadyAfterReady { r, m } => write!(f, "{k}[r={r}](m={m})"),
            Message::BcaEcho { round, c, v } | Message::BcaEchoPrime { round, c, v } => {
                write!(f, "{k}[round={round},c={c}](v={v})")
            }
            Message::BcaEcho2 { round, v } | Message::Revive1 { round, v } | Message::Revive2 { round, v } => {
                write!(f, "{k}[round={round}](v={v})")
            }
            Message::BcaEcho3 { round, v } => write!(f, "{k}[round={round}](v={v})"),
            Message::Share { round, q, s, tag } => write!(f, "{k}[round={round},q={q}](s={s},tag={tag})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot parse {text:?}: {reason}")]
pub struct ParseError {
    pub text: String,
    pub reason: String,
}

/// `KIND[a=1,b=2](c=3)` split into its parts. Commas inside braces do not split.
pub(crate) struct Parts<'a> {
    pub kind: &'a str,
    pub tags: Vec<(&'a str, &'a str)>,
    pub fields: Vec<(&'a str, &'a str)>,
}

fn split_pairs(s: &str) -> Result<Vec<(&str, &str)>, String> {
    let mut out = Vec::new();
    if s.is_empty() {
        return Ok(out);
    }
    let mut depth = 0i32;
    let mut start = 0;
    let bytes = s.as_bytes();
    for i in 0..=bytes.len() {
        let at_end = i == bytes.len();
        if !at_end {
            match bytes[i] {
                b'{' => depth += 1,
                b'}' => depth -= 1,
                _ => {}
            }
        }
        if at_end || (bytes[i] == b',' && depth == 0) {
            let item = &s[start..i];
            let (k, v) = item.split_once('=').ok_or_else(|| format!("expected key=value, found {item:?}"))?;
            out.push((k, v));
            start = i + 1;
        }
    }
    Ok(out)
}

pub(crate) fn split(text: &str) -> Result<Parts<'_>, String> {
    let kind_end = text.find(['[', '(']).unwrap_or(text.len());
    let kind = &text[..kind_end];
    let mut rest = &text[kind_end..];
    let mut tags = Vec::new();
    if let Some(r) = rest.strip_prefix('[') {
        let close = r.find(']').ok_or("unclosed [")?;
        tags = split_pairs(&r[..close])?;
        rest = &r[close + 1..];
    }
    let mut fields = Vec::new();
    if let Some(r) = rest.strip_prefix('(') {
        let inner = r.strip_suffix(')').ok_or("unclosed (")?;
        fields = split_pairs(inner)?;
        rest = "";
    }
    if !rest.is_empty() {
        return Err(format!("trailing text {rest:?}"));
    }
    Ok(Parts { kind, tags, fields })
}

impl<'a> Parts<'a> {
    pub fn get(&self, key: &str) -> Result<&'a str, String> {
        self.tags
            .iter()
            .chain(&self.fields)
            .find(|(k, _)| *k == key)
            .map(|(_, v)| *v)
            .ok_or_else(|| format!("missing {key}"))
    }

    pub fn num(&self, key: &str) -> Result<u32, String> {
        let v = self.get(key)?;
        v.parse().map_err(|_| format!("{key} must be a number, found {v:?}"))
    }

    pub fn expect_keys(&self, tags: &[&str], fields: &[&str]) -> Result<(), String> {
        let got_tags: Vec<&str> = self.tags.iter().map(|(k, _)| *k).collect();
        let got_fields: Vec<&str> = self.fields.iter().map(|(k, _)| *k).collect();
        if got_tags != tags || got_fields != fields {
            return Err(format!("{} expects tags {tags:?} and fields {fields:?}", self.kind));
        }
        Ok(())
    }
}

pub fn parse_set(s: &str) -> Result<ProcessSet, String> {
    let inner = s.strip_prefix('{').and_then(|r| r.strip_suffix('}')).ok_or_else(|| format!("bad set {s:?}"))?;
    if inner.is_empty() {
        return Ok(ProcessSet::EMPTY);
    }
    let mut set = ProcessSet::EMPTY;
    for item in inner.split(',') {
        let label: usize = item.trim().parse().map_err(|_| format!("bad process number {item:?}"))?;
        let p = depthlab_core::ProcessId::from_label(label).ok_or_else(|| format!("bad process number {label}"))?;
        set.insert(p);
    }
    Ok(set)
}

fn parse_tag(s: &str) -> Result<Tag, String> {
    let bytes = hex::decode(s).map_err(|e| format!("bad tag {s:?}: {e}"))?;
    let arr: [u8; 8] = bytes.try_into().map_err(|_| format!("tag must be 8 bytes, found {s:?}"))?;
    Ok(Tag(arr))
}

fn positive(p: &Parts, key: &str) -> Result<u32, String> {
    let n = p.num(key)?;
    if n == 0 {
        return Err(format!("{key} must be at least 1"));
    }
    Ok(n)
}

fn parse_message(text: &str) -> Result<Message, String> {
    let p = split(text)?;
    let msg = match p.kind {
        "SEND" | "ECHO" => {
            p.expect_keys(&[], &["m"])?;
            let m = p.get("m")?.parse()?;
            if p.kind == "SEND" {
                Message::Send { m }
            } else {
                Message::Echo { m }
            }
        }
        "READYAFTERECHO" | "READYAFTERREADY" => {
            p.expect_keys(&["r"], &["m"])?;
            let r = positive(&p, "r")?;
            let m = p.get("m")?.parse()?;
            if p.kind == "READYAFTERECHO" {
                Message::ReadyAfterEcho { r, m }
            } else {
                Message::ReadyAfterReady { r, m }
            }
        }
        "BCA_ECHO" | "BCA_ECHO_PRIME" => {
            p.expect_keys(&["round", "c"], &["v"])?;
            let (round, c, v) = (positive(&p, "round")?, positive(&p, "c")?, p.get("v")?.parse()?);
            if p.kind == "BCA_ECHO" {
                Message::BcaEcho { round, c, v }
            } else {
                Message::BcaEchoPrime { round, c, v }
            }
        }
        "BCA_ECHO2" | "REVIVE1" | "REVIVE2" => {
            p.expect_keys(&["round"], &["v"])?;
            let (round, v) = (positive(&p, "round")?, p.get("v")?.parse()?);
            match p.kind {
                "BCA_ECHO2" => Message::BcaEcho2 { round, v },
                "REVIVE1" => Message::Revive1 { round, v },
                _ => Message::Revive2 { round, v },
            }
        }
        "BCA_ECHO3" => {
            p.expect_keys(&["round"], &["v"])?;
            Message::BcaEcho3 { round: positive(&p, "round")?, v: p.get("v")?.parse()? }
        }
        "SHARE" => {
            p.expect_keys(&["round", "q"], &["s", "tag"])?;
            Message::Share {
                round: positive(&p, "round")?,
                q: parse_set(p.get("q")?)?,
                s: p.get("s")?.parse()?,
                tag: parse_tag(p.get("tag")?)?,
            }
        }
        other => return Err(format!("unknown message kind {other:?}")),
    };
    Ok(msg)
}

impl FromStr for Message {
    type Err = ParseError;
    fn from_str(text: &str) -> Result<Self, Self::Err> {
        parse_message(text).map_err(|reason| ParseError { text: text.to_string(), reason })
    }
}
