//! The JSON schemas under `schemas/` must list exactly the descriptor tags
//! the parser accepts.

use std::collections::BTreeSet;
use std::path::Path;

use pathtransport::descriptor::{ConnectionDesc, FamilyDesc, PathDesc, PotentialDesc, ReparamDesc};
use pathtransport::report::SCHEMA_VERSION;
use serde::de::DeserializeOwned;
use serde_json::Value;

fn schema(name: &str) -> Value {
    let p = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas").join(name);
    serde_json::from_str(&std::fs::read_to_string(&p).unwrap()).unwrap()
}

fn schema_tags(doc: &Value, def: &str) -> BTreeSet<String> {
    doc["$defs"][def]["oneOf"]
        .as_array()
        .unwrap_or_else(|| panic!("{def} has no variants"))
        .iter()
        .map(|v| v["properties"]["type"]["const"].as_str().unwrap().to_string())
        .collect()
}

/// Tags serde accepts, read back from its unknown-variant message.
fn serde_tags<T: DeserializeOwned + std::fmt::Debug>() -> BTreeSet<String> {
    let err = serde_json::from_str::<T>(r#"{"type":"\u0000"}"#).unwrap_err().to_string();
    let list = err.split("expected one of ").nth(1).unwrap_or_else(|| panic!("{err}"));
    list.split(',')
        .map(|t| t.trim().trim_matches(|c: char| c == '`' || c.is_whitespace()))
        .map(|t| t.split('`').next().unwrap().to_string())
        .collect()
}

#[test]
fn schemas_carry_the_current_version() {
    for name in [
        "path.schema.json",
        "connection.schema.json",
        "potential.schema.json",
        "run_config.schema.json",
        "report.schema.json",
    ] {
        assert_eq!(schema(name)["schema_version"], SCHEMA_VERSION, "{name}");
    }
}

#[test]
fn schema_tags_match_parser() {
    let run = schema("run_config.schema.json");
    assert_eq!(schema_tags(&schema("path.schema.json"), "path"), serde_tags::<PathDesc>());
    assert_eq!(schema_tags(&run, "path"), serde_tags::<PathDesc>());
    assert_eq!(schema_tags(&run, "reparameterization"), serde_tags::<ReparamDesc>());
    assert_eq!(schema_tags(&schema("connection.schema.json"), "connection"), serde_tags::<ConnectionDesc>());
    assert_eq!(schema_tags(&schema("potential.schema.json"), "potential"), serde_tags::<PotentialDesc>());
    assert_eq!(schema_tags(&run, "family"), serde_tags::<FamilyDesc>());
}
