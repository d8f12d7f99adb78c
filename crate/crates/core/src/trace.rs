//! Operation traces: one operation per line, space separated.
//!
//! ```text
//! U <key> <valhex>   put
//! G <key>            point lookup
//! D <key>            point delete
//! R <lo> <hi>        range delete of [lo, hi)
//! S <lo> <hi>        range scan of [lo, hi)
//! ```

use std::fmt;
use std::io::BufRead;

use crate::error::{Error, Result};
use crate::types::Key;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Operation {
    Put { key: Key, value: Vec<u8> },
    Get { key: Key },
    Delete { key: Key },
    RangeDelete { lo: Key, hi: Key },
    Scan { lo: Key, hi: Key },
}

impl Operation {
    pub fn is_mutation(&self) -> bool {
        matches!(
            self,
            Operation::Put { .. } | Operation::Delete { .. } | Operation::RangeDelete { .. }
        )
    }

    pub fn parse_line(line: &str, line_no: usize) -> Result<Operation> {
        let err = |reason: &str| Error::Trace {
            line: line_no,
            reason: reason.to_string(),
        };
        let mut parts = line.split_ascii_whitespace();
        let tag = parts.next().ok_or_else(|| err("empty line"))?;
        let mut key = || -> Result<Key> {
            parts
                .next()
                .ok_or_else(|| err("missing key"))?
                .parse()
                .map_err(|_| err("key is not an unsigned integer"))
        };
        let op = match tag {
            "U" => {
                let k = key()?;
                let hexval = line.split_ascii_whitespace().nth(2).unwrap_or("");
                let value = hex::decode(hexval).map_err(|_| err("value is not hex"))?;
                return finish(Operation::Put { key: k, value }, line, 3, line_no);
            }
            "G" => Operation::Get { key: key()? },
            "D" => Operation::Delete { key: key()? },
            "R" | "S" => {
                let lo = key()?;
                let hi = key()?;
                if lo >= hi {
                    return Err(err("range must satisfy lo < hi"));
                }
                if tag == "R" {
                    Operation::RangeDelete { lo, hi }
                } else {
                    Operation::Scan { lo, hi }
                }
            }
            _ => return Err(err(&format!("unknown operation `{tag}`"))),
        };
        let fields = match op {
            Operation::RangeDelete { .. } | Operation::Scan { .. } => 3,
            _ => 2,
        };
        finish(op, line, fields, line_no)
    }
}

fn finish(op: Operation, line: &str, fields: usize, line_no: usize) -> Result<Operation> {
    if line.split_ascii_whitespace().count() > fields {
        return Err(Error::Trace {
            line: line_no,
            reason: "trailing fields".into(),
        });
    }
    Ok(op)
}

impl fmt::Display for Operation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operation::Put { key, value } => write!(f, "U {key} {}", hex::encode(value)),
            Operation::Get { key } => write!(f, "G {key}"),
            Operation::Delete { key } => write!(f, "D {key}"),
            Operation::RangeDelete { lo, hi } => write!(f, "R {lo} {hi}"),
            Operation::Scan { lo, hi } => write!(f, "S {lo} {hi}"),
        }
    }
}

/// Parse a whole trace, skipping blank lines.
pub fn read_trace(reader: impl BufRead) -> Result<Vec<Operation>> {
    let mut ops = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        ops.push(Operation::parse_line(&line, i + 1)?);
    }
    Ok(ops)
}

pub fn write_trace(ops: &[Operation], mut out: impl std::io::Write) -> Result<()> {
    for op in ops {
        writeln!(out, "{op}")?;
    }
    Ok(())
}
