use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

macro_rules! sortable_id {
    ($name:ident, $prefix:literal) => {
        /// Creation-ordered identifier. The zero-padded text form sorts
        /// lexicographically in the same order as the numeric value.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(pub(crate) u64);

        impl $name {
            pub fn value(self) -> u64 {
                self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, concat!($prefix, "{:012}"), self.0)
            }
        }

        impl FromStr for $name {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                s.strip_prefix($prefix)
                    .filter(|digits| !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()))
                    .and_then(|digits| digits.parse().ok())
                    .map($name)
                    .ok_or_else(|| Error::Validation(format!("malformed id `{s}`")))
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
                s.collect_str(self)
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
                let s = String::deserialize(d)?;
                s.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

sortable_id!(NodeId, "n");
sortable_id!(EdgeId, "e");

macro_rules! node_labels {
    ($($variant:ident),+ $(,)?) => {
        /// Every class of the metadata model is a node label.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum NodeLabel {
            $($variant),+
        }

        impl NodeLabel {
            pub const ALL: &'static [NodeLabel] = &[$(NodeLabel::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $(NodeLabel::$variant => stringify!($variant)),+
                }
            }
        }

        impl FromStr for NodeLabel {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $(stringify!($variant) => Ok(NodeLabel::$variant),)+
                    _ => Err(Error::UnknownLabel(s.to_string())),
                }
            }
        }
    };
}

node_labels!(
    DatasetSource,
    Ingest,
    DatalakeDataset,
    EntityClass,
    NumericAttribute,
    NominalAttribute,
    Tag,
    VeracityIndex,
    SensitivityMark,
    SensitivityLevel,
    RelationshipDS,
    RelationshipAtt,
    AnalysisDSRelationship,
    AnalysisAttribute,
    GlobalDictEntry,
    User,
);

impl NodeLabel {
    pub fn is_attribute(self) -> bool {
        matches!(self, NodeLabel::NumericAttribute | NodeLabel::NominalAttribute)
    }
}

impl fmt::Display for NodeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for NodeLabel {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for NodeLabel {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Scalar property value. Lists are modeled as repeated edges, never as values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PropValue {
    Text(String),
    Int(i64),
    #[serde(rename = "dec")]
    Decimal(f64),
    Bool(bool),
    #[serde(rename = "ts")]
    Timestamp(DateTime<Utc>),
}

impl PropValue {
    pub fn as_text(&self) -> Option<&str> {
        match self {
            PropValue::Text(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            PropValue::Int(v) => Some(*v),
            _ => None,
        }
    }

    /// Integers widen to decimals.
    pub fn as_decimal(&self) -> Option<f64> {
        match self {
            PropValue::Decimal(v) => Some(*v),
            PropValue::Int(v) => Some(*v as f64),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            PropValue::Bool(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_timestamp(&self) -> Option<DateTime<Utc>> {
        match self {
            PropValue::Timestamp(v) => Some(*v),
            _ => None,
        }
    }

    /// Plain JSON rendering used by API responses.
    pub fn to_json(&self) -> serde_json::Value {
        match self {
            PropValue::Text(s) => serde_json::Value::from(s.as_str()),
            PropValue::Int(v) => serde_json::Value::from(*v),
            PropValue::Decimal(v) => serde_json::Value::from(*v),
            PropValue::Bool(v) => serde_json::Value::from(*v),
            PropValue::Timestamp(t) => serde_json::Value::from(crate::clock::format_ts(*t)),
        }
    }
}

impl From<&str> for PropValue {
    fn from(v: &str) -> Self {
        PropValue::Text(v.to_string())
    }
}

impl From<String> for PropValue {
    fn from(v: String) -> Self {
        PropValue::Text(v)
    }
}

impl From<&String> for PropValue {
    fn from(v: &String) -> Self {
        PropValue::Text(v.clone())
    }
}

impl From<i64> for PropValue {
    fn from(v: i64) -> Self {
        PropValue::Int(v)
    }
}

impl From<u32> for PropValue {
    fn from(v: u32) -> Self {
        PropValue::Int(v.into())
    }
}

impl From<u64> for PropValue {
    fn from(v: u64) -> Self {
        PropValue::Int(v as i64)
    }
}

impl From<usize> for PropValue {
    fn from(v: usize) -> Self {
        PropValue::Int(v as i64)
    }
}

impl From<f64> for PropValue {
    fn from(v: f64) -> Self {
        PropValue::Decimal(v)
    }
}

impl From<bool> for PropValue {
    fn from(v: bool) -> Self {
        PropValue::Bool(v)
    }
}

impl From<DateTime<Utc>> for PropValue {
    fn from(v: DateTime<Utc>) -> Self {
        PropValue::Timestamp(v)
    }
}

pub type Props = BTreeMap<String, PropValue>;

/// Builds a [`Props`] map from `key => value` pairs.
#[macro_export]
macro_rules! props {
    () => { $crate::graph::Props::new() };
    ($($key:expr => $value:expr),+ $(,)?) => {{
        let mut map = $crate::graph::Props::new();
        $(map.insert(String::from($key), $crate::graph::PropValue::from($value));)+
        map
    }};
}

pub(crate) fn validate_props(props: &Props) -> Result<()> {
    for (key, value) in props {
        if key.is_empty() {
            return Err(Error::InvalidProperty {
                key: key.clone(),
                reason: "empty property name".into(),
            });
        }
        if let PropValue::Decimal(v) = value {
            if !v.is_finite() {
                return Err(Error::InvalidProperty {
                    key: key.clone(),
                    reason: format!("non-finite decimal {v}"),
                });
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub label: NodeLabel,
    pub props: Props,
}

impl Node {
    pub fn get(&self, key: &str) -> Option<&PropValue> {
        self.props.get(key)
    }

    pub fn text(&self, key: &str) -> Option<&str> {
        self.get(key).and_then(PropValue::as_text)
    }

    pub fn int(&self, key: &str) -> Option<i64> {
        self.get(key).and_then(PropValue::as_int)
    }

    pub fn decimal(&self, key: &str) -> Option<f64> {
        self.get(key).and_then(PropValue::as_decimal)
    }

    pub fn flag(&self, key: &str) -> Option<bool> {
        self.get(key).and_then(PropValue::as_bool)
    }

    pub fn timestamp(&self, key: &str) -> Option<DateTime<Utc>> {
        self.get(key).and_then(PropValue::as_timestamp)
    }

    /// Properties as a plain JSON object.
    pub fn props_json(&self) -> serde_json::Value {
        serde_json::Value::Object(
            self.props
                .iter()
                .map(|(k, v)| (k.clone(), v.to_json()))
                .collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub id: EdgeId,
    pub label: String,
    pub from: NodeId,
    pub to: NodeId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Out,
    In,
    Both,
}
