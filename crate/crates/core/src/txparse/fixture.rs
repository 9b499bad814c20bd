//! Offline fixture documents: a UTF-8 JSON stand-in for archive-node replay.
//!
//! Schema (all hex fields `0x`-prefixed):
//!
//! ```json
//! {
//!   "tx_hash": "0x…64 hex…",
//!   "chain": "ethereum" | "bsc",
//!   "call_traces": [ { "from": "0x…", "to": "0x…", "value": "0x…",
//!                      "depth": 0, "call_kind": "CALL" } ],
//!   "event_logs":  [ { "address": "0x…", "topics": ["0x…64 hex…"], "data": "0x…" } ],
//!   "label": 0 | 1            // optional, training fixtures only
//! }
//! ```
//!
//! Arrays preserve execution order. Errors are classified so callers can act on them:
//! JSON syntax problems carry a byte offset, schema problems name the offending field
//! (using a `call_traces[3].value`-style path), and values too large for 256 bits are
//! range errors rather than parse errors.

use primitive_types::U256;
use serde_json::Value;
use thiserror::Error;

use super::types::{
    parse_hex_bytes, parse_hex_u256, Address, CallKind, CallTrace, Chain, EventLog,
    RawTransaction, TxHash, U256ParseError, Word32,
};

/// Why a fixture document failed to decode.
#[derive(Debug, Error)]
pub enum FixtureError {
    /// The bytes are not valid JSON. `offset` is the byte position of the failure in
    /// the input (derived from the reported line/column).
    #[error("malformed fixture document at byte {offset}: {message}")]
    Parse { offset: usize, message: String },
    /// The JSON is well-formed but a field is missing, has the wrong type, or holds
    /// text that does not decode. `field` is the path to the offender.
    #[error("fixture schema violation at {field}: {message}")]
    Schema { field: String, message: String },
    /// A numeric quantity exceeds 2^256 − 1.
    #[error("value out of range at {field}: exceeds 2^256 - 1")]
    Range { field: String },
}

impl FixtureError {
    fn schema(field: impl Into<String>, message: impl Into<String>) -> Self {
        FixtureError::Schema {
            field: field.into(),
            message: message.into(),
        }
    }
}

/// Decodes a fixture document into a [`RawTransaction`].
///
/// All addresses and hashes are canonicalized to lowercase, amounts become 256-bit
/// integers, and trace/log order is preserved exactly as written.
///
/// # Errors
///
/// * [`FixtureError::Parse`] — not valid JSON; includes the byte offset.
/// * [`FixtureError::Schema`] — missing/“wrong shape” field; names the field path.
/// * [`FixtureError::Range`] — an amount needs more than 256 bits.
pub fn parse_fixture(raw_bytes: &[u8]) -> Result<RawTransaction, FixtureError> {
    let doc: Value = serde_json::from_slice(raw_bytes).map_err(|e| FixtureError::Parse {
        offset: byte_offset(raw_bytes, e.line(), e.column()),
        message: classify_json_error(&e),
    })?;

    let top = doc
        .as_object()
        .ok_or_else(|| FixtureError::schema("$", "fixture must be a JSON object"))?;

    let tx_hash: TxHash = parse_str_field(top, "tx_hash")?
        .parse()
        .map_err(|e| FixtureError::schema("tx_hash", format!("{e}")))?;
    let chain: Chain = parse_str_field(top, "chain")?
        .parse()
        .map_err(|e: String| FixtureError::schema("chain", e))?;

    let traces_val = top
        .get("call_traces")
        .ok_or_else(|| FixtureError::schema("call_traces", "missing required field"))?;
    let traces_arr = traces_val
        .as_array()
        .ok_or_else(|| FixtureError::schema("call_traces", "expected an array"))?;
    let mut traces = Vec::with_capacity(traces_arr.len());
    for (i, item) in traces_arr.iter().enumerate() {
        traces.push(parse_trace(item, i)?);
    }

    let logs_val = top
        .get("event_logs")
        .ok_or_else(|| FixtureError::schema("event_logs", "missing required field"))?;
    let logs_arr = logs_val
        .as_array()
        .ok_or_else(|| FixtureError::schema("event_logs", "expected an array"))?;
    let mut logs = Vec::with_capacity(logs_arr.len());
    for (i, item) in logs_arr.iter().enumerate() {
        logs.push(parse_log(item, i)?);
    }

    let label = match top.get("label") {
        None | Some(Value::Null) => None,
        Some(v) => match v.as_u64() {
            Some(0) => Some(0),
            Some(1) => Some(1),
            _ => return Err(FixtureError::schema("label", "expected 0 or 1")),
        },
    };

    Ok(RawTransaction {
        tx_hash,
        chain,
        traces,
        logs,
        label,
    })
}

fn parse_trace(item: &Value, index: usize) -> Result<CallTrace, FixtureError> {
    let path = |field: &str| format!("call_traces[{index}].{field}");
    let obj = item
        .as_object()
        .ok_or_else(|| FixtureError::schema(format!("call_traces[{index}]"), "expected an object"))?;

    let caller: Address = parse_str_at(obj, "from", &path("from"))?
        .parse()
        .map_err(|e| FixtureError::schema(path("from"), format!("{e}")))?;
    let callee: Address = parse_str_at(obj, "to", &path("to"))?
        .parse()
        .map_err(|e| FixtureError::schema(path("to"), format!("{e}")))?;
    let value = parse_u256_at(obj, "value", &path("value"))?;
    let depth = obj
        .get("depth")
        .ok_or_else(|| FixtureError::schema(path("depth"), "missing required field"))?
        .as_u64()
        .ok_or_else(|| FixtureError::schema(path("depth"), "expected a non-negative integer"))?;
    let depth = u32::try_from(depth)
        .map_err(|_| FixtureError::schema(path("depth"), "depth exceeds u32"))?;
    let kind_str = parse_str_at(obj, "call_kind", &path("call_kind"))?;
    let call_kind = CallKind::from_frame_type(kind_str);

    Ok(CallTrace {
        caller,
        callee,
        value,
        depth,
        call_kind,
    })
}

fn parse_log(item: &Value, index: usize) -> Result<EventLog, FixtureError> {
    let path = |field: &str| format!("event_logs[{index}].{field}");
    let obj = item
        .as_object()
        .ok_or_else(|| FixtureError::schema(format!("event_logs[{index}]"), "expected an object"))?;

    let emitter: Address = parse_str_at(obj, "address", &path("address"))?
        .parse()
        .map_err(|e| FixtureError::schema(path("address"), format!("{e}")))?;

    let topics_val = obj
        .get("topics")
        .ok_or_else(|| FixtureError::schema(path("topics"), "missing required field"))?;
    let topics_arr = topics_val
        .as_array()
        .ok_or_else(|| FixtureError::schema(path("topics"), "expected an array"))?;
    if topics_arr.len() > 4 {
        return Err(FixtureError::schema(
            path("topics"),
            format!("at most 4 topics allowed, found {}", topics_arr.len()),
        ));
    }
    let mut topics: Vec<Word32> = Vec::with_capacity(topics_arr.len());
    for (j, t) in topics_arr.iter().enumerate() {
        let tpath = format!("event_logs[{index}].topics[{j}]");
        let s = t
            .as_str()
            .ok_or_else(|| FixtureError::schema(&tpath, "expected a hex string"))?;
        let word: TxHash = s
            .parse()
            .map_err(|e| FixtureError::schema(&tpath, format!("{e}")))?;
        topics.push(word.0);
    }

    let data_str = parse_str_at(obj, "data", &path("data"))?;
    let data =
        parse_hex_bytes(data_str).map_err(|e| FixtureError::schema(path("data"), format!("{e}")))?;

    Ok(EventLog {
        emitter,
        topics,
        data,
    })
}

fn parse_str_field<'a>(
    obj: &'a serde_json::Map<String, Value>,
    field: &str,
) -> Result<&'a str, FixtureError> {
    parse_str_at(obj, field, field)
}

fn parse_str_at<'a>(
    obj: &'a serde_json::Map<String, Value>,
    field: &str,
    path: &str,
) -> Result<&'a str, FixtureError> {
    obj.get(field)
        .ok_or_else(|| FixtureError::schema(path, "missing required field"))?
        .as_str()
        .ok_or_else(|| FixtureError::schema(path, "expected a string"))
}

fn parse_u256_at(
    obj: &serde_json::Map<String, Value>,
    field: &str,
    path: &str,
) -> Result<U256, FixtureError> {
    let s = parse_str_at(obj, field, path)?;
    parse_hex_u256(s).map_err(|e| match e {
        U256ParseError::Overflow => FixtureError::Range {
            field: path.to_string(),
        },
        U256ParseError::Hex(h) => FixtureError::schema(path, format!("{h}")),
    })
}

/// Converts serde_json's 1-based line/column into a byte offset into `raw`.
fn byte_offset(raw: &[u8], line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let mut offset = 0usize;
    let mut seen_lines = 1usize;
    for (i, b) in raw.iter().enumerate() {
        if seen_lines == line {
            offset = i;
            break;
        }
        if *b == b'\n' {
            seen_lines += 1;
            offset = i + 1;
        }
    }
    (offset + column.saturating_sub(1)).min(raw.len())
}

fn classify_json_error(e: &serde_json::Error) -> String {
    // serde_json messages embed line/column; strip that since we report byte offsets.
    let msg = e.to_string();
    match msg.split(" at line ").next() {
        Some(head) => head.to_string(),
        None => msg,
    }
}

/// Serializes a [`RawTransaction`] back into the fixture format.
///
/// The output reparses to a structurally equal transaction. Field order and hex
/// canonicalization are fixed, so equal transactions serialize to identical bytes.
pub fn fixture_to_json(tx: &RawTransaction) -> String {
    let traces: Vec<Value> = tx
        .traces
        .iter()
        .map(|t| {
            serde_json::json!({
                "from": t.caller.to_string(),
                "to": t.callee.to_string(),
                "value": format!("0x{:x}", t.value),
                "depth": t.depth,
                "call_kind": t.call_kind.as_str(),
            })
        })
        .collect();
    let logs: Vec<Value> = tx
        .logs
        .iter()
        .map(|l| {
            serde_json::json!({
                "address": l.emitter.to_string(),
                "topics": l.topics.iter().map(|t| format!("0x{}", hex::encode(t))).collect::<Vec<_>>(),
                "data": format!("0x{}", hex::encode(&l.data)),
            })
        })
        .collect();
    let mut doc = serde_json::json!({
        "tx_hash": tx.tx_hash.to_string(),
        "chain": tx.chain.as_str(),
        "call_traces": traces,
        "event_logs": logs,
    });
    if let Some(label) = tx.label {
        doc["label"] = Value::from(label);
    }
    serde_json::to_string_pretty(&doc).expect("fixture document serializes")
}
