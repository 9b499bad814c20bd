//! JSON-RPC client for fetching a transaction's call traces and receipt logs from an
//! archive node with trace-replay support.
//!
//! Three standard methods are used:
//!
//! * `eth_chainId` — tags the result (`1` → ethereum, `56` → bsc; anything else is
//!   treated as ethereum, since both tags only record provenance);
//! * `eth_getTransactionReceipt` — the log list; a `null` result means the hash is
//!   unknown ([`FetchError::NotFound`]);
//! * `debug_traceTransaction` with the `callTracer` — the call-frame tree, flattened
//!   depth-first in execution order.
//!
//! The client is purely a consumer: no chain state lives here, and the returned
//! [`RawTransaction`] is exactly what [`parse_fixture`](super::parse_fixture) would
//! produce from the serialized replay result.

use primitive_types::U256;
use serde_json::{json, Value};
use thiserror::Error;

use super::types::{
    parse_hex_u256, Address, CallKind, CallTrace, Chain, EventLog, RawTransaction, TxHash,
    Word32,
};

/// Why a transaction could not be fetched.
#[derive(Debug, Error)]
pub enum FetchError {
    /// Transport-level failure (connection refused, timeout, TLS). Retryable.
    #[error("network error talking to the node: {0}")]
    Network(String),
    /// The node does not know the transaction hash.
    #[error("transaction {tx_hash} not found on the node")]
    NotFound { tx_hash: TxHash },
    /// The node rejected a method we need (no `debug_traceTransaction` support).
    #[error("node lacks trace support: {message}")]
    UnsupportedNode { message: String },
    /// The node answered, but not with anything the protocol promises.
    #[error("malformed RPC response: {0}")]
    InvalidResponse(String),
}

/// A minimal JSON-RPC client bound to one endpoint.
///
/// Holds only an HTTP connection pool (internally synchronized); safe to share and
/// call concurrently for distinct transactions.
#[derive(Debug, Clone)]
pub struct RpcClient {
    http: reqwest::Client,
    endpoint: String,
}

impl RpcClient {
    /// Creates a client for `endpoint` (e.g. `http://127.0.0.1:8545`).
    pub fn new(endpoint: impl Into<String>) -> Result<Self, FetchError> {
        let endpoint = endpoint.into();
        if !endpoint.starts_with("http://") && !endpoint.starts_with("https://") {
            return Err(FetchError::InvalidResponse(format!(
                "endpoint {endpoint:?} is not an http(s) URL"
            )));
        }
        Ok(RpcClient {
            http: reqwest::Client::new(),
            endpoint,
        })
    }

    async fn call(&self, method: &str, params: Value) -> Result<Value, FetchError> {
        let body = json!({ "jsonrpc": "2.0", "id": 1, "method": method, "params": params });
        let resp = self
            .http
            .post(&self.endpoint)
            .json(&body)
            .send()
            .await
            .map_err(|e| FetchError::Network(e.to_string()))?;
        let frame: Value = resp
            .json()
            .await
            .map_err(|e| FetchError::Network(e.to_string()))?;
        if let Some(err) = frame.get("error").filter(|e| !e.is_null()) {
            let code = err.get("code").and_then(Value::as_i64).unwrap_or(0);
            let message = err
                .get("message")
                .and_then(Value::as_str)
                .unwrap_or("unknown error")
                .to_string();
            // -32601 is the JSON-RPC "method not found" code: the node has no tracer.
            if code == -32601 {
                return Err(FetchError::UnsupportedNode { message });
            }
            return Err(FetchError::InvalidResponse(format!(
                "RPC error {code}: {message}"
            )));
        }
        frame
            .get("result")
            .cloned()
            .ok_or_else(|| FetchError::InvalidResponse("response lacks a result field".into()))
    }

    /// Fetches and decodes one transaction: chain id, receipt logs, call-trace tree.
    ///
    /// # Errors
    ///
    /// * [`FetchError::Network`] — transport failure (retryable).
    /// * [`FetchError::NotFound`] — the node has no receipt for the hash.
    /// * [`FetchError::UnsupportedNode`] — the node lacks `debug_traceTransaction`.
    /// * [`FetchError::InvalidResponse`] — protocol violations.
    pub async fn fetch_transaction(&self, tx_hash: &TxHash) -> Result<RawTransaction, FetchError> {
        let chain = match self.call("eth_chainId", json!([])).await {
            Ok(Value::String(id)) => match parse_hex_u256(&id) {
                Ok(v) if v == U256::from(56u64) => Chain::Bsc,
                _ => Chain::Ethereum,
            },
            _ => Chain::Ethereum,
        };

        let receipt = self
            .call("eth_getTransactionReceipt", json!([tx_hash.to_string()]))
            .await?;
        if receipt.is_null() {
            return Err(FetchError::NotFound { tx_hash: *tx_hash });
        }
        let logs = decode_receipt_logs(&receipt)?;

        let trace = self
            .call(
                "debug_traceTransaction",
                json!([tx_hash.to_string(), { "tracer": "callTracer" }]),
            )
            .await?;
        let mut traces = Vec::new();
        flatten_frames(&trace, 0, &mut traces);

        Ok(RawTransaction {
            tx_hash: *tx_hash,
            chain,
            traces,
            logs,
            label: None,
        })
    }
}

/// One-shot async fetch without keeping a client around.
pub async fn fetch_transaction(
    endpoint: &str,
    tx_hash: &TxHash,
) -> Result<RawTransaction, FetchError> {
    RpcClient::new(endpoint)?.fetch_transaction(tx_hash).await
}

/// Blocking wrapper for synchronous callers (the CLI). Spins up a private
/// current-thread runtime per call; do not use from inside an async context.
pub fn fetch_transaction_blocking(
    endpoint: &str,
    tx_hash: &TxHash,
) -> Result<RawTransaction, FetchError> {
    let runtime = tokio::runtime::Builder::new_current_thread()
        .enable_all()
        .build()
        .map_err(|e| FetchError::Network(format!("failed to start runtime: {e}")))?;
    runtime.block_on(fetch_transaction(endpoint, tx_hash))
}

fn decode_receipt_logs(receipt: &Value) -> Result<Vec<EventLog>, FetchError> {
    let invalid = |m: String| FetchError::InvalidResponse(m);
    let logs = receipt
        .get("logs")
        .and_then(Value::as_array)
        .ok_or_else(|| invalid("receipt lacks a logs array".into()))?;
    let mut out = Vec::with_capacity(logs.len());
    for (i, log) in logs.iter().enumerate() {
        let emitter: Address = log
            .get("address")
            .and_then(Value::as_str)
            .ok_or_else(|| invalid(format!("log {i} lacks an address")))?
            .parse()
            .map_err(|e| invalid(format!("log {i} address: {e}")))?;
        let mut topics: Vec<Word32> = Vec::new();
        if let Some(raw_topics) = log.get("topics").and_then(Value::as_array) {
            for (j, t) in raw_topics.iter().enumerate() {
                let s = t
                    .as_str()
                    .ok_or_else(|| invalid(format!("log {i} topic {j} is not a string")))?;
                let word: TxHash = s
                    .parse()
                    .map_err(|e| invalid(format!("log {i} topic {j}: {e}")))?;
                topics.push(word.0);
            }
        }
        let data = match log.get("data").and_then(Value::as_str) {
            Some(s) => super::types::parse_hex_bytes(s)
                .map_err(|e| invalid(format!("log {i} data: {e}")))?,
            None => Vec::new(),
        };
        out.push(EventLog {
            emitter,
            topics,
            data,
        });
    }
    Ok(out)
}

/// Flattens a callTracer frame tree depth-first (execution order), tracking depth.
///
/// Frames missing `from` or `to` (e.g. aborted creates) are skipped — they cannot
/// describe a transfer — but their children are still visited.
fn flatten_frames(frame: &Value, depth: u32, out: &mut Vec<CallTrace>) {
    let kind = frame
        .get("type")
        .and_then(Value::as_str)
        .map(CallKind::from_frame_type)
        .unwrap_or(CallKind::Other);
    let caller = frame
        .get("from")
        .and_then(Value::as_str)
        .and_then(|s| s.parse::<Address>().ok());
    let callee = frame
        .get("to")
        .and_then(Value::as_str)
        .and_then(|s| s.parse::<Address>().ok());
    let value = frame
        .get("value")
        .and_then(Value::as_str)
        .and_then(|s| parse_hex_u256(s).ok())
        .unwrap_or_else(U256::zero);
    if let (Some(caller), Some(callee)) = (caller, callee) {
        out.push(CallTrace {
            caller,
            callee,
            value,
            depth,
            call_kind: kind,
        });
    }
    if let Some(children) = frame.get("calls").and_then(Value::as_array) {
        for child in children {
            flatten_frames(child, depth + 1, out);
        }
    }
}
