//! Ethereum ABI support for the monitor: Keccak-256, function selectors,
//! and calldata encoding/decoding for the static types a monitored model
//! needs (`uint256`, `address`, `bool`, `bytes32`). Dynamic types are
//! rejected outright rather than half-decoded.
//!
//! Hex convention everywhere: `0x`-prefixed lowercase.

mod keccak;

pub use keccak::keccak256;

use crate::expr::Value;
use num_bigint::{BigInt, Sign};
use std::fmt;

/// The supported static parameter types. Each occupies one 32-byte word.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AbiType {
    Uint256,
    Address,
    Bool,
    Bytes32,
}

impl AbiType {
    pub fn name(self) -> &'static str {
        match self {
            AbiType::Uint256 => "uint256",
            AbiType::Address => "address",
            AbiType::Bool => "bool",
            AbiType::Bytes32 => "bytes32",
        }
    }

    fn parse(text: &str) -> Result<AbiType, AbiError> {
        match text {
            "uint256" => Ok(AbiType::Uint256),
            "address" => Ok(AbiType::Address),
            "bool" => Ok(AbiType::Bool),
            "bytes32" => Ok(AbiType::Bytes32),
            other => Err(AbiError::UnsupportedType(other.to_string())),
        }
    }
}

/// A function signature in canonical form: `name(type1,type2)`, no spaces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionSig {
    pub name: String,
    pub params: Vec<AbiType>,
}

impl FunctionSig {
    /// Parses `"name(type,...)"`. The rendering of the parsed signature is
    /// canonical, so `transfer( address , uint256 )` is rejected rather
    /// than silently producing a different selector.
    pub fn parse(text: &str) -> Result<FunctionSig, AbiError> {
        let bad = |msg: &str| AbiError::BadSignature(format!("{text:?}: {msg}"));
        let open = text.find('(').ok_or_else(|| bad("missing ("))?;
        let name = &text[..open];
        if name.is_empty()
            || !name.chars().next().unwrap().is_ascii_alphabetic() && !name.starts_with('_')
            || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
        {
            return Err(bad("function name must be an identifier"));
        }
        let rest = &text[open + 1..];
        let inner = rest.strip_suffix(')').ok_or_else(|| bad("missing trailing )"))?;
        if inner.contains('(') || inner.contains(')') {
            return Err(bad("nested parentheses are not supported"));
        }
        let params = if inner.is_empty() {
            Vec::new()
        } else {
            inner
                .split(',')
                .map(AbiType::parse)
                .collect::<Result<Vec<_>, _>>()?
        };
        Ok(FunctionSig { name: name.to_string(), params })
    }


    /// Canonical text form: `name(type1,type2,...)` with no spaces.
    pub fn canonical(&self) -> String {
        let types: Vec<&str> = self.params.iter().map(|t| t.name()).collect();
        format!("{}({})", self.name, types.join(","))
    }

    /// First 4 bytes of the Keccak-256 of the canonical signature.
    pub fn selector(&self) -> [u8; 4] {
        let digest = keccak256(self.canonical().as_bytes());
        [digest[0], digest[1], digest[2], digest[3]]
    }
}

impl fmt::Display for FunctionSig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical())
    }
}

impl std::str::FromStr for FunctionSig {
    type Err = AbiError;

    fn from_str(text: &str) -> Result<FunctionSig, AbiError> {
        FunctionSig::parse(text)
    }
}

/// Decoded calldata: the selector plus one [`Value`] per parameter.
/// `uint256` becomes `Value::Int`, `bool` becomes `Value::Bool`, and
/// `address`/`bytes32` become `Value::Text` holding `0x`-prefixed lowercase
/// hex (20 and 32 bytes respectively).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CallData {
    pub selector: [u8; 4],
    pub args: Vec<Value>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AbiError {
    #[error("unsupported parameter type {0:?} (static types only: uint256, address, bool, bytes32)")]
    UnsupportedType(String),
    #[error("bad function signature {0}")]
    BadSignature(String),
    #[error("selector mismatch: calldata starts with 0x{}, signature requires 0x{}", hex::encode(found), hex::encode(expected))]
    SelectorMismatch { expected: [u8; 4], found: [u8; 4] },
    #[error("calldata length {found} does not match the signature's {expected} bytes")]
    LengthMismatch { expected: usize, found: usize },
    #[error("malformed word for argument {index}: {reason}")]
    MalformedWord { index: usize, reason: String },
    #[error("cannot encode argument {index}: {reason}")]
    BadArgument { index: usize, reason: String },
}

/// Decodes `raw` calldata against `sig`: the 4-byte selector must match and
/// each argument is one 32-byte big-endian word with the type's padding
/// rules enforced (zero high bytes for addresses, 0/1 for bools).
pub fn decode_calldata(raw: &[u8], sig: &FunctionSig) -> Result<CallData, AbiError> {
    let expected_len = 4 + 32 * sig.params.len();
    if raw.len() < 4 {
        return Err(AbiError::LengthMismatch { expected: expected_len, found: raw.len() });
    }
    let found = [raw[0], raw[1], raw[2], raw[3]];
    let expected = sig.selector();
    if found != expected {
        return Err(AbiError::SelectorMismatch { expected, found });
    }
    if raw.len() != expected_len {
        return Err(AbiError::LengthMismatch { expected: expected_len, found: raw.len() });
    }
    let mut args = Vec::with_capacity(sig.params.len());
    for (index, ty) in sig.params.iter().enumerate() {
        let word: &[u8; 32] = raw[4 + 32 * index..4 + 32 * (index + 1)]
            .try_into()
            .expect("length checked above");
        args.push(decode_word(*ty, word, index)?);
    }
    Ok(CallData { selector: found, args })
}

fn decode_word(ty: AbiType, word: &[u8; 32], index: usize) -> Result<Value, AbiError> {
    match ty {
        AbiType::Uint256 => Ok(Value::Int(BigInt::from_bytes_be(Sign::Plus, word))),
        AbiType::Address => {
            if word[..12].iter().any(|b| *b != 0) {
                return Err(AbiError::MalformedWord {
                    index,
                    reason: "address word has nonzero padding in the high 12 bytes".into(),
                });
            }
            Ok(Value::Text(format!("0x{}", hex::encode(&word[12..]))))
        }
        AbiType::Bool => match word {
            w if w[..31].iter().all(|b| *b == 0) && (w[31] == 0 || w[31] == 1) => {
                Ok(Value::Bool(w[31] == 1))
            }
            _ => Err(AbiError::MalformedWord {
                index,
                reason: "bool word must be 0 or 1".into(),
            }),
        },
        AbiType::Bytes32 => Ok(Value::Text(format!("0x{}", hex::encode(word)))),
    }
}

/// Encodes arguments into calldata for `sig` (selector plus one word per
/// argument). The inverse of [`decode_calldata`]; used to author synthetic
/// traces.
pub fn encode_calldata(sig: &FunctionSig, args: &[Value]) -> Result<Vec<u8>, AbiError> {
    if args.len() != sig.params.len() {
        return Err(AbiError::BadArgument {
            index: args.len().min(sig.params.len()),
            reason: format!("{} arguments for {} parameters", args.len(), sig.params.len()),
        });
    }
    let mut out = Vec::with_capacity(4 + 32 * args.len());
    out.extend_from_slice(&sig.selector());
    for (index, (ty, value)) in sig.params.iter().zip(args).enumerate() {
        out.extend_from_slice(&encode_word(*ty, value, index)?);
    }
    Ok(out)
}

fn encode_word(ty: AbiType, value: &Value, index: usize) -> Result<[u8; 32], AbiError> {
    let mut word = [0u8; 32];
    let bad = |reason: String| AbiError::BadArgument { index, reason };
    match (ty, value) {
        (AbiType::Uint256, Value::Int(n)) => {
            let (sign, bytes) = n.to_bytes_be();
            if sign == Sign::Minus {
                return Err(bad("uint256 cannot hold a negative value".into()));
            }
            if bytes.len() > 32 {
                return Err(bad("value exceeds 256 bits".into()));
            }
            word[32 - bytes.len()..].copy_from_slice(&bytes);
        }
        (AbiType::Bool, Value::Bool(b)) => word[31] = *b as u8,
        (AbiType::Address, Value::Text(text)) => {
            let bytes = parse_fixed_hex(text, 20).map_err(&bad)?;
            word[12..].copy_from_slice(&bytes);
        }
        (AbiType::Bytes32, Value::Text(text)) => {
            let bytes = parse_fixed_hex(text, 32).map_err(&bad)?;
            word.copy_from_slice(&bytes);
        }
        (ty, value) => {
            return Err(bad(format!("{} value does not fit {}", value.type_name(), ty.name())))
        }
    }
    Ok(word)
}

fn parse_fixed_hex(text: &str, len: usize) -> Result<Vec<u8>, String> {
    let body = text
        .strip_prefix("0x")
        .ok_or_else(|| format!("expected 0x-prefixed hex, got {text:?}"))?;
    let bytes = hex::decode(body).map_err(|e| format!("bad hex {text:?}: {e}"))?;
    if bytes.len() != len {
        return Err(format!("expected {len} bytes, got {}", bytes.len()));
    }
    Ok(bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selector_matches_published_erc20_transfer() {
        let sig = FunctionSig::parse("transfer(address,uint256)").unwrap();
        assert_eq!(sig.selector(), [0xa9, 0x05, 0x9c, 0xbb]);
        assert_eq!(sig.canonical(), "transfer(address,uint256)");
    }

    #[test]
    fn zero_arg_selectors() {
        // Pinned against the independent digest oracle.
        let cases = [
            ("placeInEscrow()", [0xd1, 0xe3, 0xd1, 0xc5]),
            ("releaseBySender()", [0xfd, 0xc1, 0xf1, 0xa8]),
            ("releaseByReceiver()", [0xb8, 0xe9, 0xb0, 0x31]),
            ("withdrawFromEscrow()", [0xb7, 0x25, 0xd6, 0x72]),
        ];
        for (text, selector) in cases {
            assert_eq!(FunctionSig::parse(text).unwrap().selector(), selector, "{text}");
        }
    }

    #[test]
    fn signature_parsing_is_strict() {
        assert!(FunctionSig::parse("transfer(address, uint256)").is_err()); // space
        assert!(FunctionSig::parse("transfer").is_err());
        assert!(FunctionSig::parse("transfer(").is_err());
        assert!(FunctionSig::parse("9bad()").is_err());
        assert!(FunctionSig::parse("f(g())").is_err());
        assert!(matches!(
            FunctionSig::parse("store(string)"),
            Err(AbiError::UnsupportedType(t)) if t == "string"
        ));
        assert!(FunctionSig::parse("store(uint8)").is_err());
    }

    #[test]
    fn decode_hand_encoded_transfer() {
        // selector ++ address word ++ amount word, laid out by hand
        let mut raw = vec![0xa9, 0x05, 0x9c, 0xbb];
        let mut addr_word = [0u8; 32];
        addr_word[30] = 0xde;
        addr_word[31] = 0xad;
        raw.extend_from_slice(&addr_word);
        let mut amount_word = [0u8; 32];
        amount_word[30] = 0x03;
        amount_word[31] = 0xe8; // 1000
        raw.extend_from_slice(&amount_word);

        let sig = FunctionSig::parse("transfer(address,uint256)").unwrap();
        let call = decode_calldata(&raw, &sig).unwrap();
        assert_eq!(call.selector, [0xa9, 0x05, 0x9c, 0xbb]);
        assert_eq!(
            call.args,
            vec![
                Value::Text("0x000000000000000000000000000000000000dead".into()),
                Value::from(1000u64),
            ]
        );
    }

    #[test]
    fn zero_arg_calldata_is_exactly_the_selector() {
        let sig = FunctionSig::parse("placeInEscrow()").unwrap();
        let call = decode_calldata(&sig.selector(), &sig).unwrap();
        assert!(call.args.is_empty());
    }

    #[test]
    fn decode_rejects_malformed() {
        let sig = FunctionSig::parse("step(uint256)").unwrap();
        let good = encode_calldata(&sig, &[Value::from(5u64)]).unwrap();

        // wrong selector
        let mut bad = good.clone();
        bad[0] ^= 0xff;
        assert!(matches!(
            decode_calldata(&bad, &sig),
            Err(AbiError::SelectorMismatch { .. })
        ));

        // truncated word
        assert!(matches!(
            decode_calldata(&good[..35], &sig),
            Err(AbiError::LengthMismatch { expected: 36, found: 35 })
        ));
        // shorter than a selector
        assert!(matches!(
            decode_calldata(&good[..2], &sig),
            Err(AbiError::LengthMismatch { .. })
        ));

        // nonzero address padding
        let addr_sig = FunctionSig::parse("f(address)").unwrap();
        let mut raw = addr_sig.selector().to_vec();
        let mut word = [0u8; 32];
        word[0] = 1;
        raw.extend_from_slice(&word);
        assert!(matches!(
            decode_calldata(&raw, &addr_sig),
            Err(AbiError::MalformedWord { index: 0, .. })
        ));

        // bool out of range
        let bool_sig = FunctionSig::parse("f(bool)").unwrap();
        let mut raw = bool_sig.selector().to_vec();
        let mut word = [0u8; 32];
        word[31] = 2;
        raw.extend_from_slice(&word);
        assert!(matches!(
            decode_calldata(&raw, &bool_sig),
            Err(AbiError::MalformedWord { index: 0, .. })
        ));
    }

    #[test]
    fn encode_decode_round_trip() {
        let sig = FunctionSig::parse("mix(uint256,address,bool,bytes32)").unwrap();
        let args = vec![
            Value::Int(BigInt::parse_bytes(b"115792089237316195423570985008687907853269984665640564039457584007913129639935", 10).unwrap()), // 2^256 - 1
            Value::Text("0xf39fd6e51aad88f6f4ce6ab8827279cfffb92266".into()),
            Value::Bool(true),
            Value::Text(format!("0x{}", hex::encode([0xabu8; 32]))),
        ];
        let raw = encode_calldata(&sig, &args).unwrap();
        assert_eq!(raw.len(), 4 + 32 * 4);
        let call = decode_calldata(&raw, &sig).unwrap();
        assert_eq!(call.args, args);
    }

    #[test]
    fn encode_rejects_out_of_range() {
        let sig = FunctionSig::parse("f(uint256)").unwrap();
        let too_big = BigInt::from(1) << 256;
        assert!(encode_calldata(&sig, &[Value::Int(too_big)]).is_err());
        assert!(encode_calldata(&sig, &[Value::Int(BigInt::from(-1))]).is_err());
        assert!(encode_calldata(&sig, &[]).is_err());
        assert!(encode_calldata(&sig, &[Value::Bool(true)]).is_err());
    }
}
