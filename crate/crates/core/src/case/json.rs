use super::NetworkCase;
use crate::error::{Error, Result};

/// Parses the native JSON case format and validates the result.
pub fn parse_json_case(text: &str) -> Result<NetworkCase> {
    let case: NetworkCase = serde_json::from_str(text).map_err(|e| Error::Schema(e.to_string()))?;
    case.validate()?;
    Ok(case)
}

/// Pretty-printed native JSON for `case`.
pub fn serialize_json(case: &NetworkCase) -> String {
    serde_json::to_string_pretty(case).expect("case serializes")
}
