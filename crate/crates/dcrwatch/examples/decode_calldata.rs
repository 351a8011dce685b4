//! Function selectors and the static-type calldata codec: computing
//! selectors from canonical signatures, encoding a call, decoding it back,
//! and the ways malformed calldata gets rejected.
//!
//! Run with: cargo run --example decode_calldata

use dcrwatch::abi::{decode_calldata, encode_calldata, keccak256, FunctionSig};
use dcrwatch::Value;
use num_bigint::BigInt;

fn main() {
    // A selector is the first four bytes of the Keccak-256 digest of the
    // canonical signature.
    let sig = FunctionSig::parse("transfer(address,uint256)").unwrap();
    println!("signature: {sig}");
    println!("digest:    0x{}", hex::encode(keccak256(sig.canonical().as_bytes())));
    println!("selector:  0x{}", hex::encode(sig.selector()));

    // Encode a call, then decode it back.
    let args = vec![
        Value::Text("0x70997970c51812dc3a010c7d01b50e0d17dc79c8".into()),
        Value::Int(BigInt::from(1_000_000u64)),
    ];
    let calldata = encode_calldata(&sig, &args).unwrap();
    println!("\ncalldata ({} bytes): 0x{}", calldata.len(), hex::encode(&calldata));

    let call = decode_calldata(&calldata, &sig).unwrap();
    for (i, arg) in call.args.iter().enumerate() {
        println!("  arg {i}: {arg}");
    }

    // Rejections: wrong selector, truncated words, junk in the address
    // padding, and booleans that are not 0 or 1.
    println!("\nrejections:");
    let mut wrong_selector = calldata.clone();
    wrong_selector[0] ^= 0xff;
    show_reject("wrong selector", decode_calldata(&wrong_selector, &sig));

    let truncated = &calldata[..calldata.len() - 1];
    show_reject("truncated word", decode_calldata(truncated, &sig));

    let mut dirty = calldata.clone();
    dirty[4] = 0x01; // address words must be zero-padded in the high 12 bytes
    show_reject("dirty address padding", decode_calldata(&dirty, &sig));

    let flag_sig = FunctionSig::parse("setPaused(bool)").unwrap();
    let mut flag_call = encode_calldata(&flag_sig, &[Value::Bool(true)]).unwrap();
    flag_call[35] = 2;
    show_reject("bool out of range", decode_calldata(&flag_call, &flag_sig));

    // Unsupported parameter types are refused up front.
    match FunctionSig::parse("swap(uint128,bytes)") {
        Ok(_) => unreachable!("dynamic and odd-width types are not supported"),
        Err(e) => println!("  swap(uint128,bytes): {e}"),
    }
}

fn show_reject<T: std::fmt::Debug>(label: &str, result: Result<T, dcrwatch::abi::AbiError>) {
    match result {
        Ok(_) => unreachable!("{label} should be rejected"),
        Err(e) => println!("  {label}: {e}"),
    }
}
