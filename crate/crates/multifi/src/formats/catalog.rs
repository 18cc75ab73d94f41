use std::path::Path;

use multifi_core::backends::{VehicleCatalog, VehicleParams};
use serde::{Deserialize, Serialize};

use super::{check_version, read_text};
use crate::{Error, Result};

pub const CATALOG_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CatalogFile {
    format_version: u32,
    vehicles: Vec<VehicleParams>,
}

pub fn catalog_to_string(catalog: &VehicleCatalog) -> String {
    super::to_json(&CatalogFile {
        format_version: CATALOG_FORMAT_VERSION,
        vehicles: catalog.entries().to_vec(),
    })
}

/// Vehicle entries of a catalog file, each validated.
pub fn load_catalog_file(path: &Path) -> Result<Vec<VehicleParams>> {
    let text = read_text(path)?;
    check_version(&text, CATALOG_FORMAT_VERSION).map_err(|m| Error::parse(path, m))?;
    let file: CatalogFile = serde_json::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))?;
    for v in &file.vehicles {
        v.validate().map_err(|e| Error::parse(path, e.to_string()))?;
    }
    Ok(file.vehicles)
}

/// Overrides entries with matching ids and appends new ones.
pub fn apply_catalog_file(catalog: &mut VehicleCatalog, path: &Path) -> Result<()> {
    for v in load_catalog_file(path)? {
        catalog.upsert(v)?;
    }
    Ok(())
}
