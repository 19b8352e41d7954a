use mstab_core::io::SCHEMA;
use mstab_core::strata::census;
use serde_json::json;

#[test]
fn a3_census_matches_golden() {
    let golden = include_str!("golden/a3_census.json");
    let now = json!({ "schema": SCHEMA, "n": 3, "max_levels": 3, "census": census(3, 3) });
    let text = serde_json::to_string_pretty(&now).unwrap() + "\n";
    assert_eq!(text, golden);
}
