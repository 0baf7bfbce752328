//! Canonical JSON: sorted object keys, UTF-8, no insignificant whitespace.

use serde::Serialize;

/// Serialize through `serde_json::Value`, whose maps are ordered by key.
pub fn to_canonical_string<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let v = serde_json::to_value(value)?;
    serde_json::to_string(&v)
}

pub fn to_canonical_vec<T: Serialize>(value: &T) -> serde_json::Result<Vec<u8>> {
    to_canonical_string(value).map(String::into_bytes)
}
