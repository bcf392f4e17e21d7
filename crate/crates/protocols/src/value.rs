use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// A binary value.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Bit {
    Zero,
    One,
}

impl Bit {
    pub fn from_u8(b: u8) -> Option<Bit> {
        match b {
            0 => Some(Bit::Zero),
            1 => Some(Bit::One),
            _ => None,
        }
    }

    pub fn as_u8(self) -> u8 {
        match self {
            Bit::Zero => 0,
            Bit::One => 1,
        }
    }

    pub fn flip(self) -> Bit {
        match self {
            Bit::Zero => Bit::One,
            Bit::One => Bit::Zero,
        }
    }
}

impl fmt::Display for Bit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_u8())
    }
}

impl FromStr for Bit {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "0" => Ok(Bit::Zero),
            "1" => Ok(Bit::One),
            _ => Err(format!("expected 0 or 1, found {s:?}")),
        }
    }
}

/// A binary value or ⊥.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Value {
    Bit(Bit),
    Bot,
}

impl Value {
    pub const ZERO: Value = Value::Bit(Bit::Zero);
    pub const ONE: Value = Value::Bit(Bit::One);

    pub fn bit(self) -> Option<Bit> {
        match self {
            Value::Bit(b) => Some(b),
            Value::Bot => None,
        }
    }
}

impl From<Bit> for Value {
    fn from(b: Bit) -> Self {
        Value::Bit(b)
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Bit(b) => b.fmt(f),
            Value::Bot => f.write_str("bot"),
        }
    }
}

impl FromStr for Value {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "bot" {
            Ok(Value::Bot)
        } else {
            s.parse().map(Value::Bit)
        }
    }
}

/// Opaque broadcast payload, written as lowercase hex.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct Payload(pub Vec<u8>);

impl Payload {
    pub fn from_text(s: &str) -> Self {
        Payload(s.as_bytes().to_vec())
    }

    /// A different payload of the same length, used for equivocation.
    pub fn altered(&self) -> Payload {
        let mut bytes = self.0.clone();
        match bytes.last_mut() {
            Some(b) => *b ^= 1,
            None => bytes.push(1),
        }
        Payload(bytes)
    }
}

impl fmt::Display for Payload {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex::encode(&self.0))
    }
}

impl fmt::Debug for Payload {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Payload({self})")
    }
}

impl FromStr for Payload {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        hex::decode(s).map(Payload).map_err(|e| format!("bad hex payload {s:?}: {e}"))
    }
}
