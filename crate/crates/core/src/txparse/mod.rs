//! Transaction decoding: fixtures or RPC replay in, filtered [`Transfer`]s out.
//!
//! A transaction reaches the pipeline in one of two ways: as an offline *fixture*
//! document ([`parse_fixture`]) or fetched from an archive node that supports call-trace
//! replay ([`rpc::RpcClient`]). Either way the result is a [`RawTransaction`]: ordered
//! call traces plus ordered event logs.
//!
//! [`extract_transfers`] then filters the raw records down to actual asset movements:
//!
//! * **native transfers** — call frames with `value > 0` and a value-bearing call kind
//!   (`CALL` or `CREATE`); `DELEGATECALL`/`STATICCALL` never move value of their own;
//! * **ERC-20 transfers** — event logs whose first topic is the keccak-256 hash of
//!   `Transfer(address,address,uint256)` (see [`TRANSFER_SIG`]), decoded as
//!   sender/receiver from the indexed topics and amount from the 32-byte data word.
//!
//! Zero-amount movements are dropped: they carry no cash flow. Logs that claim the
//! Transfer signature but do not match the ERC-20 layout are collected as
//! [`MalformedEvent`] diagnostics instead of failing the whole transaction.

mod fixture;
mod rpc_client;
mod transfers;
mod types;

pub use fixture::{fixture_to_json, parse_fixture, FixtureError};
pub use rpc_client::{fetch_transaction, fetch_transaction_blocking, FetchError, RpcClient};
pub use transfers::{
    decode_transfer_event, extract_transfers, ExtractionReport, MalformedEvent, TRANSFER_SIG,
};
pub use types::{
    Address, AssetId, CallKind, CallTrace, Chain, EventLog, HexParseError, RawTransaction,
    Transfer, TxHash, U256ParseError, Word32,
};

pub use primitive_types::U256;
