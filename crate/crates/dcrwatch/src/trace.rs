//! Transaction trace ingestion: an ordered, pull-based stream of chain
//! transactions replayed from JSONL files (one transaction object per
//! line), standing in for a live block subscription.
//!
//! Line schema: `block_number`, `tx_index`, `hash`, `from`, `to` (absent or
//! null for contract creation), `input` (0x hex), `value` (wei; JSON number
//! or decimal/0x string for values beyond 64 bits), `status` (`"success"` /
//! `"reverted"`), `timestamp` (unix seconds of the block).

use num_bigint::BigInt;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TxStatus {
    Success,
    Reverted,
}

/// One chain transaction, with its block's timestamp carried along so the
/// monitor needs no separate block table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transaction {
    pub block_number: u64,
    pub tx_index: u32,
    pub hash: String,
    pub from: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub to: Option<String>,
    #[serde(serialize_with = "ser_hex", deserialize_with = "de_hex")]
    pub input: Vec<u8>,
    #[serde(serialize_with = "ser_wei", deserialize_with = "de_wei")]
    pub value: BigInt,
    pub status: TxStatus,
    pub timestamp: u64,
}

fn ser_hex<S: Serializer>(bytes: &[u8], ser: S) -> Result<S::Ok, S::Error> {
    ser.serialize_str(&format!("0x{}", hex::encode(bytes)))
}

fn de_hex<'de, D: Deserializer<'de>>(de: D) -> Result<Vec<u8>, D::Error> {
    let text = String::deserialize(de)?;
    let body = text
        .strip_prefix("0x")
        .ok_or_else(|| D::Error::custom(format!("input must be 0x-prefixed hex, got {text:?}")))?;
    hex::decode(body).map_err(|e| D::Error::custom(format!("bad input hex: {e}")))
}

fn ser_wei<S: Serializer>(value: &BigInt, ser: S) -> Result<S::Ok, S::Error> {
    ser.serialize_str(&value.to_string())
}

fn de_wei<'de, D: Deserializer<'de>>(de: D) -> Result<BigInt, D::Error> {
    struct V;
    impl serde::de::Visitor<'_> for V {
        type Value = BigInt;

        fn expecting(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
            f.write_str("a non-negative integer or decimal/0x string")
        }

        fn visit_u64<E: serde::de::Error>(self, n: u64) -> Result<BigInt, E> {
            Ok(BigInt::from(n))
        }

        fn visit_str<E: serde::de::Error>(self, s: &str) -> Result<BigInt, E> {
            crate::expr::parse_bigint(s)
                .filter(|n| n.sign() != num_bigint::Sign::Minus)
                .ok_or_else(|| E::custom(format!("bad wei value {s:?}")))
        }
    }
    de.deserialize_any(V)
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TraceError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: {message}")]
    Ordering { line: usize, message: String },
}

/// An ordered stream of transactions. Whatever the underlying source, the
/// stream itself enforces the ordering invariants: (block_number, tx_index)
/// strictly increasing, timestamps nondecreasing. A violation surfaces as
/// an error item at the offending position and ends the stream.
pub struct TraceSource {
    inner: Box<dyn Iterator<Item = Result<Transaction, TraceError>> + Send>,
    last_position: Option<(u64, u32)>,
    last_timestamp: Option<u64>,
    item_index: usize,
    failed: bool,
}

impl TraceSource {
    pub fn new(
        inner: impl Iterator<Item = Result<Transaction, TraceError>> + Send + 'static,
    ) -> TraceSource {
        TraceSource {
            inner: Box::new(inner),
            last_position: None,
            last_timestamp: None,
            item_index: 0,
            failed: false,
        }
    }

    /// Wraps an in-memory transaction list (synthetic traces, tests).
    pub fn from_vec(transactions: Vec<Transaction>) -> TraceSource {
        TraceSource::new(transactions.into_iter().map(Ok))
    }

    /// Keeps only transactions addressed to `address` (case-insensitive
    /// hex comparison), preserving order. Error items pass through.
    pub fn filter_to_contract(self, address: &str) -> TraceSource {
        let want = address.to_ascii_lowercase();
        // The inner stream already validated ordering; do not re-wrap state.
        let filtered = self.inner.filter(move |item| match item {
            Ok(tx) => tx
                .to
                .as_deref()
                .is_some_and(|to| to.to_ascii_lowercase() == want),
            Err(_) => true,
        });
        TraceSource {
            inner: Box::new(filtered),
            last_position: None,
            last_timestamp: None,
            item_index: 0,
            failed: false,
        }
    }
}

impl Iterator for TraceSource {
    type Item = Result<Transaction, TraceError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        let item = self.inner.next()?;
        self.item_index += 1;
        let tx = match item {
            Ok(tx) => tx,
            Err(e) => {
                self.failed = true;
                return Some(Err(e));
            }
        };
        let position = (tx.block_number, tx.tx_index);
        if let Some(last) = self.last_position {
            if position <= last {
                self.failed = true;
                return Some(Err(TraceError::Ordering {
                    line: self.item_index,
                    message: format!(
                        "transaction at block {} index {} does not follow block {} index {}",
                        position.0, position.1, last.0, last.1
                    ),
                }));
            }
        }
        if let Some(last_ts) = self.last_timestamp {
            if tx.timestamp < last_ts {
                self.failed = true;
                return Some(Err(TraceError::Ordering {
                    line: self.item_index,
                    message: format!(
                        "timestamp {} goes backwards (previous {})",
                        tx.timestamp, last_ts
                    ),
                }));
            }
        }
        self.last_position = Some(position);
        self.last_timestamp = Some(tx.timestamp);
        Some(Ok(tx))
    }
}

/// Opens a JSONL trace file as a validated stream. Blank lines are
/// skipped; parse and ordering problems surface as error items carrying
/// the 1-based line number.
pub fn read_trace(path: impl AsRef<Path>) -> Result<TraceSource, TraceError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| TraceError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let lines = BufReader::new(file).lines().enumerate().filter_map(|(i, line)| {
        let line_no = i + 1;
        match line {
            Ok(text) if text.trim().is_empty() => None,
            Ok(text) => Some(serde_json::from_str::<Transaction>(&text).map_err(|e| {
                TraceError::Parse { line: line_no, message: e.to_string() }
            })),
            Err(e) => Some(Err(TraceError::Parse {
                line: line_no,
                message: format!("read failed: {e}"),
            })),
        }
    });
    Ok(TraceSource::new(lines))
}
