use super::ToolSpec;

/// The bundled tool catalog document (movies, weather, CRM, library,
/// real-estate, finance, geography, plus the `Finish` terminal tool).
pub const BUNDLED_CATALOG_JSON: &str = include_str!("../../assets/tools.json");

pub fn bundled_catalog() -> Vec<ToolSpec> {
    serde_json::from_str(BUNDLED_CATALOG_JSON).expect("bundled tool catalog parses")
}
