//! Runtime state of a DCR graph instance.

use crate::expr::Value;
use crate::graph::EventId;
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// A response obligation's remaining time budget. `Infinite` means the
/// obligation never expires. The derived order makes every finite deadline
/// smaller than `Infinite`, so `min` picks the tighter obligation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Deadline {
    Finite(u64),
    Infinite,
}

impl Deadline {
    pub fn is_finite(self) -> bool {
        matches!(self, Deadline::Finite(_))
    }
}

impl fmt::Display for Deadline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Deadline::Finite(n) => write!(f, "{n}"),
            Deadline::Infinite => f.write_str("infinite"),
        }
    }
}

/// JSON form: a non-negative number, or the string `"infinite"`.
impl Serialize for Deadline {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        match self {
            Deadline::Finite(n) => ser.serialize_u64(*n),
            Deadline::Infinite => ser.serialize_str("infinite"),
        }
    }
}

impl<'de> Deserialize<'de> for Deadline {
    fn deserialize<D: Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Deadline;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a non-negative tick count or \"infinite\"")
            }

            fn visit_u64<E: de::Error>(self, n: u64) -> Result<Deadline, E> {
                Ok(Deadline::Finite(n))
            }

            fn visit_i64<E: de::Error>(self, n: i64) -> Result<Deadline, E> {
                u64::try_from(n)
                    .map(Deadline::Finite)
                    .map_err(|_| E::custom("deadline must be non-negative"))
            }

            fn visit_str<E: de::Error>(self, s: &str) -> Result<Deadline, E> {
                if s == "infinite" {
                    Ok(Deadline::Infinite)
                } else {
                    Err(E::custom(format!("expected \"infinite\", got {s:?}")))
                }
            }
        }
        de.deserialize_any(V)
    }
}

/// The four-part runtime state: when each event last ran (`executed`, ticks
/// since), what it still owes (`pending` deadlines), which events currently
/// participate (`included`), and the values they produced (`values`).
/// All maps are partial; an event absent from `executed` has never run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Marking {
    #[serde(default)]
    pub executed: BTreeMap<EventId, u64>,
    #[serde(default)]
    pub pending: BTreeMap<EventId, Deadline>,
    #[serde(default)]
    pub included: BTreeSet<EventId>,
    #[serde(default)]
    pub values: BTreeMap<EventId, Value>,
}

impl Marking {
    pub fn new() -> Marking {
        Marking::default()
    }

    pub fn is_included(&self, id: &EventId) -> bool {
        self.included.contains(id)
    }
}
