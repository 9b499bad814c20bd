//! Domain types shared by every pipeline stage: addresses, hashes, traces, logs,
//! transfers. All hex text is canonicalized to lowercase `0x`-prefixed form; amounts
//! are unsigned 256-bit integers end-to-end (wei-scale values overflow 64 bits).

use std::fmt;
use std::str::FromStr;

use primitive_types::U256;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// A 32-byte word as it appears in log topics.
pub type Word32 = [u8; 32];

/// Error raised when hex text does not decode into the expected shape.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HexParseError {
    /// The string does not start with `0x`.
    #[error("missing 0x prefix")]
    MissingPrefix,
    /// The digit count differs from what the target type requires.
    #[error("expected {expected} hex digits, found {found}")]
    WrongLength { expected: usize, found: usize },
    /// A character outside `[0-9a-fA-F]` appeared after the prefix.
    #[error("invalid hex digit {found:?}")]
    InvalidDigit { found: char },
    /// The digit count is odd, so the string cannot encode whole bytes.
    #[error("odd number of hex digits ({found})")]
    OddLength { found: usize },
}

/// Error raised when parsing a 256-bit quantity from hex text.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum U256ParseError {
    /// Malformed hex text.
    #[error(transparent)]
    Hex(#[from] HexParseError),
    /// More than 64 hex digits: the value cannot fit in 256 bits.
    #[error("value exceeds 2^256 - 1")]
    Overflow,
}

fn strip_prefix(s: &str) -> Result<&str, HexParseError> {
    s.strip_prefix("0x")
        .or_else(|| s.strip_prefix("0X"))
        .ok_or(HexParseError::MissingPrefix)
}

/// Decodes `0x`-prefixed hex into exactly `N` bytes.
fn parse_fixed_hex<const N: usize>(s: &str) -> Result<[u8; N], HexParseError> {
    let digits = strip_prefix(s)?;
    if digits.len() != 2 * N {
        return Err(HexParseError::WrongLength {
            expected: 2 * N,
            found: digits.len(),
        });
    }
    let mut out = [0u8; N];
    hex::decode_to_slice(digits, &mut out).map_err(|_| invalid_digit(digits))?;
    Ok(out)
}

/// Decodes `0x`-prefixed hex of any even length into bytes. `0x` alone is empty.
pub(crate) fn parse_hex_bytes(s: &str) -> Result<Vec<u8>, HexParseError> {
    let digits = strip_prefix(s)?;
    if digits.len() % 2 != 0 {
        return Err(HexParseError::OddLength {
            found: digits.len(),
        });
    }
    hex::decode(digits).map_err(|_| invalid_digit(digits))
}

fn invalid_digit(digits: &str) -> HexParseError {
    let found = digits
        .chars()
        .find(|c| !c.is_ascii_hexdigit())
        .unwrap_or('?');
    HexParseError::InvalidDigit { found }
}

/// Parses a `0x`-prefixed hex quantity into a [`U256`].
///
/// At least one digit is required and at most 64 are accepted; a 65-digit value is an
/// [`U256ParseError::Overflow`], not a hex error, so callers can report range problems
/// distinctly from malformed text. Leading zeros are fine.
pub(crate) fn parse_hex_u256(s: &str) -> Result<U256, U256ParseError> {
    let digits = strip_prefix(s).map_err(U256ParseError::Hex)?;
    if digits.is_empty() {
        return Err(U256ParseError::Hex(HexParseError::WrongLength {
            expected: 1,
            found: 0,
        }));
    }
    if let Some(c) = digits.chars().find(|c| !c.is_ascii_hexdigit()) {
        return Err(U256ParseError::Hex(HexParseError::InvalidDigit {
            found: c,
        }));
    }
    if digits.len() > 64 {
        return Err(U256ParseError::Overflow);
    }
    Ok(U256::from_str_radix(digits, 16).expect("validated hex digits fit in 256 bits"))
}

macro_rules! fixed_bytes_newtype {
    ($(#[$doc:meta])* $name:ident, $len:expr) => {
        $(#[$doc])*
        #[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub struct $name(pub [u8; $len]);

        impl $name {
            /// Raw bytes of the identifier.
            pub fn as_bytes(&self) -> &[u8; $len] {
                &self.0
            }
        }

        impl fmt::Display for $name {
            /// Canonical form: lowercase hex with a `0x` prefix.
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "0x{}", hex::encode(self.0))
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}({})", stringify!($name), self)
            }
        }

        impl FromStr for $name {
            type Err = HexParseError;

            /// Accepts any mix of upper/lower hex; the stored form is canonical, so
            /// canonicalization is idempotent and comparison is byte-wise.
            fn from_str(s: &str) -> Result<Self, Self::Err> {
                parse_fixed_hex::<$len>(s).map($name)
            }
        }

        impl Serialize for $name {
            fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
                serializer.collect_str(self)
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
                let s = String::deserialize(deserializer)?;
                s.parse().map_err(D::Error::custom)
            }
        }
    };
}

fixed_bytes_newtype!(
    /// A 20-byte account identifier (externally owned account or contract).
    Address,
    20
);

fixed_bytes_newtype!(
    /// A 32-byte transaction hash.
    TxHash,
    32
);

/// The kind of a call frame as reported by a call tracer.
///
/// Only `CALL` and `CREATE` frames can move native value; `DELEGATECALL` and
/// `STATICCALL` execute in the caller's value context, so any `value` field a fixture
/// attaches to them is ignored by transfer extraction. Tracer frame types outside this
/// enum (e.g. `CALLCODE`, `SELFDESTRUCT`) map to [`CallKind::Other`] — they never
/// qualify as native transfers, so no information is lost.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CallKind {
    Call,
    DelegateCall,
    StaticCall,
    Create,
    Other,
}

impl CallKind {
    /// Canonical fixture spelling.
    pub fn as_str(&self) -> &'static str {
        match self {
            CallKind::Call => "CALL",
            CallKind::DelegateCall => "DELEGATECALL",
            CallKind::StaticCall => "STATICCALL",
            CallKind::Create => "CREATE",
            CallKind::Other => "OTHER",
        }
    }

    /// Maps a tracer frame-type string to a kind. `CREATE2` counts as `CREATE`
    /// (it moves value identically); anything unrecognized is `Other`.
    pub fn from_frame_type(s: &str) -> CallKind {
        match s {
            "CALL" => CallKind::Call,
            "DELEGATECALL" => CallKind::DelegateCall,
            "STATICCALL" => CallKind::StaticCall,
            "CREATE" | "CREATE2" => CallKind::Create,
            _ => CallKind::Other,
        }
    }
}

/// One frame of a transaction's call trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallTrace {
    /// Initiator of the call.
    pub caller: Address,
    /// Target of the call (for creates, the created contract).
    pub callee: Address,
    /// Native value carried by the frame, in base units (wei).
    pub value: U256,
    /// Nesting depth; 0 is the top-level call.
    pub depth: u32,
    /// Frame kind; decides whether `value` is meaningful.
    pub call_kind: CallKind,
}

/// One event log emitted during execution.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventLog {
    /// Contract that emitted the log.
    pub emitter: Address,
    /// Indexed topics; 0 to 4 words, the first being the event signature hash.
    pub topics: Vec<Word32>,
    /// ABI-encoded non-indexed payload.
    pub data: Vec<u8>,
}

/// Supported chains. Both are EVM chains with identical trace/log semantics; the tag
/// is carried through for provenance only.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Chain {
    Ethereum,
    Bsc,
}

impl Chain {
    pub fn as_str(&self) -> &'static str {
        match self {
            Chain::Ethereum => "ethereum",
            Chain::Bsc => "bsc",
        }
    }
}

impl fmt::Display for Chain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Chain {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ethereum" => Ok(Chain::Ethereum),
            "bsc" => Ok(Chain::Bsc),
            other => Err(format!("unknown chain {other:?} (expected ethereum|bsc)")),
        }
    }
}

/// A decoded transaction: ordered call traces plus ordered event logs.
///
/// `label` is populated only on training fixtures (1 = price-manipulation attack).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawTransaction {
    pub tx_hash: TxHash,
    pub chain: Chain,
    pub traces: Vec<CallTrace>,
    pub logs: Vec<EventLog>,
    pub label: Option<u8>,
}

/// The asset moved by a transfer: the chain's native token, or an ERC-20 identified
/// by its contract address.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AssetId {
    Native,
    Token(Address),
}

impl fmt::Display for AssetId {
    /// `native`, or the token contract address in canonical hex.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AssetId::Native => f.write_str("native"),
            AssetId::Token(addr) => write!(f, "{addr}"),
        }
    }
}

impl FromStr for AssetId {
    type Err = HexParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "native" {
            Ok(AssetId::Native)
        } else {
            s.parse().map(AssetId::Token)
        }
    }
}

/// One asset movement: the unit of cash-flow-graph edge metadata.
///
/// Invariant: `amount > 0`. Zero-amount movements are filtered before a `Transfer` is
/// ever built. Self-transfers (`sender == receiver`) are legal and retained; the
/// profit feature cancels them naturally.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Transfer {
    pub sender: Address,
    pub receiver: Address,
    pub asset: AssetId,
    pub amount: U256,
}
