use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One author-name occurrence: a paper identifier and a 1-based byline
/// position. Canonical text form is `<pmid>_<position>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct InstanceId {
    pmid: u64,
    position: u32,
}

impl InstanceId {
    pub fn new(pmid: u64, position: u32) -> Result<Self> {
        if pmid == 0 {
            return Err(Error::InstanceId {
                value: format!("{pmid}_{position}"),
                field: "pmid",
                reason: "must be >= 1",
            });
        }
        if position == 0 {
            return Err(Error::InstanceId {
                value: format!("{pmid}_{position}"),
                field: "position",
                reason: "must be >= 1",
            });
        }
        Ok(InstanceId { pmid, position })
    }

    pub fn pmid(&self) -> u64 {
        self.pmid
    }

    pub fn position(&self) -> u32 {
        self.position
    }
}

fn digits(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit())
}

/// Parses `<pmid>_<position>`.
pub fn parse_instance_id(s: &str) -> Result<InstanceId> {
    let malformed = |field, reason| Error::InstanceId {
        value: s.to_string(),
        field,
        reason,
    };
    let (pmid, position) = s
        .split_once('_')
        .ok_or_else(|| malformed("format", "expected <pmid>_<position>"))?;
    if !digits(pmid) {
        return Err(malformed("pmid", "is not a positive integer"));
    }
    if !digits(position) {
        return Err(malformed("position", "is not a positive integer"));
    }
    let pmid: u64 = pmid
        .parse()
        .map_err(|_| malformed("pmid", "is out of range"))?;
    let position: u32 = position
        .parse()
        .map_err(|_| malformed("position", "is out of range"))?;
    if pmid == 0 {
        return Err(malformed("pmid", "must be >= 1"));
    }
    if position == 0 {
        return Err(malformed("position", "must be >= 1"));
    }
    Ok(InstanceId { pmid, position })
}

impl FromStr for InstanceId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_instance_id(s)
    }
}

impl fmt::Display for InstanceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}", self.pmid, self.position)
    }
}

impl TryFrom<String> for InstanceId {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        parse_instance_id(&s)
    }
}

impl From<InstanceId> for String {
    fn from(id: InstanceId) -> String {
        id.to_string()
    }
}
