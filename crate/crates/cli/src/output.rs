//! Report serialization: CSV rows with a fixed column order and 12
//! significant digits, JSON for single reports, manifest sidecars.

use std::io::Write;
use std::path::Path;

use diqss_core::keyrate::KeyRateBreakdown;

use crate::config::RunManifest;

/// 12 significant digits, scientific notation.
pub fn sig12(x: f64) -> String {
    format!("{x:.11e}")
}

/// Fixed column order of sweep/report rows. Stable within a major version.
pub const SWEEP_COLUMNS: &str =
    "curve,axis,axis_value,s_chsh,s_svetlichny,qber,h_ae,r_111,r_212,r_inf,p_d,e_c,terminated,degenerate_bound";

pub fn sweep_row(curve: &str, axis: &str, axis_value: f64, b: &KeyRateBreakdown) -> String {
    format!(
        "{curve},{axis},{},{},{},{},{},{},{},{},{},{},{},{}",
        sig12(axis_value),
        sig12(b.s_chsh),
        sig12(b.s_svetlichny),
        sig12(b.qber),
        sig12(b.h_ae),
        sig12(b.r_111),
        sig12(b.r_212),
        sig12(b.r_inf),
        sig12(b.p_d),
        sig12(b.e_c),
        b.terminated,
        b.degenerate_bound,
    )
}

/// Write `contents` to `path` and its manifest to `path.manifest.json`.
pub fn write_with_manifest(
    path: &Path,
    contents: &str,
    manifest: &RunManifest,
) -> std::io::Result<()> {
    let mut file = std::fs::File::create(path)?;
    file.write_all(contents.as_bytes())?;
    let manifest_path = sidecar_path(path);
    let mut mf = std::fs::File::create(manifest_path)?;
    let body = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    mf.write_all(body.as_bytes())?;
    mf.write_all(b"\n")?;
    Ok(())
}

pub fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut name = path.as_os_str().to_os_string();
    name.push(".manifest.json");
    std::path::PathBuf::from(name)
}
