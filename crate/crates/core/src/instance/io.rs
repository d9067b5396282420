use serde::Deserialize;

use super::{InstanceError, ScenarioInstance, SCHEMA_VERSION};

#[derive(Deserialize)]
struct Header {
    schema_version: Option<u64>,
}

fn parse_error(e: serde_json::Error) -> InstanceError {
    InstanceError::Parse { line: e.line(), column: e.column(), message: e.to_string() }
}

/// Pretty-printed JSON document. Deterministic for a given instance.
pub fn save_instance(instance: &ScenarioInstance) -> String {
    let mut s = serde_json::to_string_pretty(instance).expect("instance serializes");
    s.push('\n');
    s
}

/// Parse and fully validate an instance document.
pub fn load_instance(doc: &str) -> Result<ScenarioInstance, InstanceError> {
    let header: Header = serde_json::from_str(doc).map_err(parse_error)?;
    match header.schema_version {
        Some(v) if v == SCHEMA_VERSION as u64 => {}
        Some(v) => return Err(InstanceError::Version { found: v, expected: SCHEMA_VERSION }),
        None => {
            return Err(InstanceError::Parse { line: 1, column: 1, message: "missing field `schema_version`".into() })
        }
    }
    let inst: ScenarioInstance = serde_json::from_str(doc).map_err(parse_error)?;
    inst.validate()?;
    Ok(inst)
}
