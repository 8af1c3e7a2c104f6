//! Native map file format: a versioned JSON document holding lanes,
//! elevation knots, and reference-line geometry. This is the format all
//! tools read and write; OpenDRIVE is an ingestion path only.

use serde::{Deserialize, Serialize};

use super::{MapError, RoadNetwork};

const NATIVE_MAP_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct NativeMapFile {
    version: u32,
    #[serde(flatten)]
    network: RoadNetwork,
}

/// Serialize a network to the native map text format.
pub fn write_native_map(net: &RoadNetwork) -> String {
    let doc = NativeMapFile { version: NATIVE_MAP_VERSION, network: net.clone() };
    serde_json::to_string_pretty(&doc).expect("map serialization cannot fail")
}

/// Parse the native map text format back into a network.
pub fn read_native_map(text: &str) -> Result<RoadNetwork, MapError> {
    let doc: NativeMapFile =
        serde_json::from_str(text).map_err(|e| MapError::Format(e.to_string()))?;
    if doc.version != NATIVE_MAP_VERSION {
        return Err(MapError::Format(format!(
            "unsupported map version {} (expected {NATIVE_MAP_VERSION})",
            doc.version
        )));
    }
    // revalidate invariants on ingest
    RoadNetwork::new(
        doc.network.lanes.clone(),
        doc.network.length,
        doc.network.elevation.clone(),
        doc.network.geometry.clone(),
    )
}
