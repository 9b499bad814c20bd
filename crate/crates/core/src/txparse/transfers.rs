//! Filtering raw traces and logs down to asset movements.
//!
//! Two record kinds qualify as transfers:
//!
//! * call frames that actually move native value (`value > 0`, kind `CALL`/`CREATE`);
//! * ERC-20 `Transfer(address,address,uint256)` event logs, recognized by their
//!   signature topic and decoded from the two indexed address topics plus the 32-byte
//!   amount word.
//!
//! Everything else is skipped. Skips are counted (monitoring wants to know how much of
//! a transaction was boring), and logs that *claim* the Transfer signature but do not
//! match the ERC-20 layout are reported as [`MalformedEvent`]s without failing the
//! extraction — one junk log must not hide the rest of a transaction.

use primitive_types::U256;
use thiserror::Error;

use super::types::{Address, AssetId, CallKind, EventLog, RawTransaction, Transfer};

/// keccak256("Transfer(address,address,uint256)") — the ERC-20 Transfer event
/// signature topic. The constant is pinned here and re-derived from the signature
/// string in this module's tests, so a typo cannot survive `cargo test`.
pub const TRANSFER_SIG: [u8; 32] = [
    0xdd, 0xf2, 0x52, 0xad, 0x1b, 0xe2, 0xc8, 0x9b, 0x69, 0xc2, 0xb0, 0x68, 0xfc, 0x37, 0x8d,
    0xaa, 0x95, 0x2b, 0xa7, 0xf1, 0x63, 0xc4, 0xa1, 0x16, 0x28, 0xf5, 0x5a, 0x4d, 0xf5, 0x23,
    0xb3, 0xef,
];

/// A log that carries the Transfer signature topic but not the ERC-20 layout.
///
/// ERC-721 `Transfer` shares the same signature hash with the token id as a third
/// indexed topic (four topics, empty data); those land here too, by design — the
/// pipeline tracks fungible value only.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("log[{log_index}] from {emitter}: {reason}")]
pub struct MalformedEvent {
    /// Position of the log in the transaction's log list.
    pub log_index: usize,
    /// Contract that emitted the log.
    pub emitter: Address,
    /// Human-readable description of the layout mismatch.
    pub reason: String,
}

/// The outcome of transfer extraction: the transfers themselves plus diagnostics.
#[derive(Debug, Clone, Default)]
pub struct ExtractionReport {
    /// Qualifying transfers in original record order (traces first, then logs).
    pub transfers: Vec<Transfer>,
    /// Transfer-signature logs that failed ERC-20 decoding. Collected, never fatal.
    pub malformed_events: Vec<MalformedEvent>,
    /// Traces that produced no transfer (zero value, or a non-value-bearing kind).
    pub skipped_traces: usize,
    /// Logs that produced no transfer (foreign signature, or zero amount).
    pub skipped_logs: usize,
}

/// Attempts to decode one log as an ERC-20 Transfer.
///
/// Returns `Ok(None)` when the log is simply not a Transfer event (first topic absent
/// or different). Returns a [`Transfer`] with the emitting contract as the asset when
/// the layout matches: `topics[1]` → sender, `topics[2]` → receiver (low 20 bytes of
/// each ABI-padded word), `data` → one 32-byte big-endian amount word.
///
/// # Errors
///
/// [`MalformedEvent`] (with `log_index` left at 0 for the caller to fill in) when the
/// signature matches but there are fewer than 3 topics or `data` is not exactly
/// 32 bytes.
pub fn decode_transfer_event(log: &EventLog) -> Result<Option<Transfer>, MalformedEvent> {
    match log.topics.first() {
        Some(sig) if *sig == TRANSFER_SIG => {}
        _ => return Ok(None),
    }
    let malformed = |reason: String| MalformedEvent {
        log_index: 0,
        emitter: log.emitter,
        reason,
    };
    if log.topics.len() < 3 {
        return Err(malformed(format!(
            "Transfer signature with {} topic(s); ERC-20 layout needs sender and receiver topics",
            log.topics.len()
        )));
    }
    if log.data.len() != 32 {
        return Err(malformed(format!(
            "Transfer signature with {}-byte data; ERC-20 layout needs one 32-byte amount word",
            log.data.len()
        )));
    }
    // Indexed addresses are left-padded to 32 bytes; take the low 20.
    let sender = Address(log.topics[1][12..32].try_into().expect("20-byte slice"));
    let receiver = Address(log.topics[2][12..32].try_into().expect("20-byte slice"));
    let amount = U256::from_big_endian(&log.data);
    if amount.is_zero() {
        // A zero-amount Transfer is well-formed but moves nothing; callers count it
        // as skipped rather than malformed.
        return Ok(None);
    }
    Ok(Some(Transfer {
        sender,
        receiver,
        asset: AssetId::Token(log.emitter),
        amount,
    }))
}

/// Filters a decoded transaction down to its asset transfers.
///
/// Native transfers come from traces with `value > 0` and kind `CALL` or `CREATE`
/// (delegate/static calls execute in the caller's value context and never move value
/// of their own). Token transfers come from [`decode_transfer_event`]. Output order
/// follows the source records: traces in execution order, then logs in emission order.
/// Downstream features are order-insensitive, so the order matters only for
/// diagnostics and dumps.
///
/// Never fails: non-qualifying records are counted in the report, and malformed
/// Transfer-signature logs are collected with their log index.
pub fn extract_transfers(tx: &RawTransaction) -> ExtractionReport {
    let mut report = ExtractionReport::default();

    for trace in &tx.traces {
        let value_bearing = matches!(trace.call_kind, CallKind::Call | CallKind::Create);
        if value_bearing && !trace.value.is_zero() {
            report.transfers.push(Transfer {
                sender: trace.caller,
                receiver: trace.callee,
                asset: AssetId::Native,
                amount: trace.value,
            });
        } else {
            report.skipped_traces += 1;
        }
    }

    for (log_index, log) in tx.logs.iter().enumerate() {
        match decode_transfer_event(log) {
            Ok(Some(transfer)) => report.transfers.push(transfer),
            Ok(None) => report.skipped_logs += 1,
            Err(mut event) => {
                event.log_index = log_index;
                report.malformed_events.push(event);
            }
        }
    }

    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::txparse::types::{CallTrace, Chain, TxHash};

    fn addr(fill: u8) -> Address {
        Address([fill; 20])
    }

    fn tx(traces: Vec<CallTrace>, logs: Vec<EventLog>) -> RawTransaction {
        RawTransaction {
            tx_hash: TxHash([0xaa; 32]),
            chain: Chain::Ethereum,
            traces,
            logs,
            label: None,
        }
    }

    fn trace(caller: Address, callee: Address, value: u64, kind: CallKind) -> CallTrace {
        CallTrace {
            caller,
            callee,
            value: U256::from(value),
            depth: 0,
            call_kind: kind,
        }
    }

    fn pad_address(a: Address) -> [u8; 32] {
        let mut word = [0u8; 32];
        word[12..].copy_from_slice(a.as_bytes());
        word
    }

    fn pad_amount(v: u64) -> Vec<u8> {
        let mut word = [0u8; 32];
        U256::from(v).to_big_endian(&mut word);
        word.to_vec()
    }

    fn transfer_log(emitter: Address, from: Address, to: Address, amount: u64) -> EventLog {
        EventLog {
            emitter,
            topics: vec![TRANSFER_SIG, pad_address(from), pad_address(to)],
            data: pad_amount(amount),
        }
    }

    #[test]
    fn transfer_sig_rederives_from_signature_string() {
        use sha3::{Digest, Keccak256};
        let digest = Keccak256::digest(b"Transfer(address,address,uint256)");
        assert_eq!(digest.as_slice(), TRANSFER_SIG);
    }

    #[test]
    fn single_native_trace_yields_one_transfer() {
        let t = tx(vec![trace(addr(1), addr(2), 100, CallKind::Call)], vec![]);
        let report = extract_transfers(&t);
        assert_eq!(
            report.transfers,
            vec![Transfer {
                sender: addr(1),
                receiver: addr(2),
                asset: AssetId::Native,
                amount: U256::from(100u64),
            }]
        );
        assert_eq!(report.skipped_traces, 0);
    }

    #[test]
    fn zero_value_and_non_value_kinds_are_skipped() {
        let t = tx(
            vec![
                trace(addr(1), addr(2), 0, CallKind::Call),
                trace(addr(1), addr(2), 50, CallKind::DelegateCall),
                trace(addr(1), addr(2), 50, CallKind::StaticCall),
                trace(addr(1), addr(2), 50, CallKind::Other),
                trace(addr(1), addr(2), 7, CallKind::Create),
            ],
            vec![],
        );
        let report = extract_transfers(&t);
        assert_eq!(report.transfers.len(), 1, "only the CREATE moves value");
        assert_eq!(report.transfers[0].amount, U256::from(7u64));
        assert_eq!(report.skipped_traces, 4);
    }

    #[test]
    fn erc20_log_decodes_with_emitter_as_asset() {
        let t = tx(
            vec![trace(addr(1), addr(2), 0, CallKind::Call)],
            vec![transfer_log(addr(0xee), addr(3), addr(4), 120_000_000)],
        );
        let report = extract_transfers(&t);
        assert_eq!(report.transfers.len(), 1);
        let tr = report.transfers[0];
        assert_eq!(tr.sender, addr(3));
        assert_eq!(tr.receiver, addr(4));
        assert_eq!(tr.asset, AssetId::Token(addr(0xee)));
        assert_eq!(tr.amount, U256::from(120_000_000u64));
        assert_eq!(report.skipped_traces, 1);
    }

    #[test]
    fn foreign_signature_is_not_a_transfer() {
        let mut log = transfer_log(addr(9), addr(3), addr(4), 5);
        log.topics[0] = [0x11; 32];
        assert_eq!(decode_transfer_event(&log), Ok(None));
    }

    #[test]
    fn missing_indexed_fields_are_malformed() {
        let log = EventLog {
            emitter: addr(9),
            topics: vec![TRANSFER_SIG],
            data: pad_amount(5),
        };
        let err = decode_transfer_event(&log).unwrap_err();
        assert!(err.reason.contains("1 topic"));
    }

    #[test]
    fn erc721_layout_is_malformed_not_decoded() {
        // Same signature hash, token id as a third indexed topic, empty data.
        let log = EventLog {
            emitter: addr(9),
            topics: vec![TRANSFER_SIG, pad_address(addr(3)), pad_address(addr(4)), [1u8; 32]],
            data: vec![],
        };
        let err = decode_transfer_event(&log).unwrap_err();
        assert!(err.reason.contains("0-byte data"));
    }

    #[test]
    fn zero_amount_token_transfer_is_skipped_not_malformed() {
        let t = tx(vec![], vec![transfer_log(addr(9), addr(3), addr(4), 0)]);
        let report = extract_transfers(&t);
        assert!(report.transfers.is_empty());
        assert!(report.malformed_events.is_empty());
        assert_eq!(report.skipped_logs, 1);
    }

    #[test]
    fn malformed_events_carry_log_index_and_do_not_abort() {
        let bad = EventLog {
            emitter: addr(9),
            topics: vec![TRANSFER_SIG, pad_address(addr(3))],
            data: pad_amount(5),
        };
        let good = transfer_log(addr(9), addr(3), addr(4), 5);
        let t = tx(vec![], vec![good.clone(), bad, good]);
        let report = extract_transfers(&t);
        assert_eq!(report.transfers.len(), 2);
        assert_eq!(report.malformed_events.len(), 1);
        assert_eq!(report.malformed_events[0].log_index, 1);
    }

    #[test]
    fn transfer_count_bounded_by_record_count() {
        let t = tx(
            vec![trace(addr(1), addr(2), 3, CallKind::Call)],
            vec![transfer_log(addr(9), addr(3), addr(4), 5)],
        );
        let report = extract_transfers(&t);
        assert!(report.transfers.len() <= t.traces.len() + t.logs.len());
    }

    #[test]
    fn self_transfers_are_retained() {
        let t = tx(vec![trace(addr(1), addr(1), 3, CallKind::Call)], vec![]);
        let report = extract_transfers(&t);
        assert_eq!(report.transfers.len(), 1);
        assert_eq!(report.transfers[0].sender, report.transfers[0].receiver);
    }
}
