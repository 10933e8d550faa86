//! Locating and loading parameter files.
//!
//! `--config` accepts a path, or a preset name resolved first inside the
//! directory named by [`CONFIG_DIR_ENV`] and then among the built-in presets.

use std::path::{Path, PathBuf};

use uplink_aoi::SystemParams;

use crate::error::CliError;

pub const CONFIG_DIR_ENV: &str = "UPLINK_AOI_CONFIG_DIR";

/// Built-in presets: the reference parameters with 10, 30 and 90 nat packets.
pub const PRESETS: [(&str, &str); 3] = [
    ("ell10", include_str!("../../../configs/ell10.toml")),
    ("ell30", include_str!("../../../configs/ell30.toml")),
    ("ell90", include_str!("../../../configs/ell90.toml")),
];

pub const DEFAULT_PRESET: &str = "ell10";

/// Loads parameters from `spec`, or the default preset when `None`.
pub fn load(spec: Option<&str>, config_dir: Option<&Path>) -> Result<SystemParams, CliError> {
    let spec = spec.unwrap_or(DEFAULT_PRESET);
    let (origin, text) = resolve(spec, config_dir)?;
    SystemParams::from_toml_str(&text).map_err(|e| CliError::Config(format!("{origin}: {e}")))
}

fn resolve(spec: &str, config_dir: Option<&Path>) -> Result<(String, String), CliError> {
    let direct = PathBuf::from(spec);
    if direct.is_file() {
        return read(&direct);
    }
    if let Some(dir) = config_dir {
        for candidate in [dir.join(spec), dir.join(format!("{spec}.toml"))] {
            if candidate.is_file() {
                return read(&candidate);
            }
        }
    }
    let name = spec.strip_suffix(".toml").unwrap_or(spec);
    PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(n, text)| (format!("preset {n}"), text.to_string()))
        .ok_or_else(|| {
            CliError::Config(format!(
                "config `{spec}` is neither a file nor a preset ({})",
                PRESETS.map(|p| p.0).join(", ")
            ))
        })
}

fn read(path: &Path) -> Result<(String, String), CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    Ok((path.display().to_string(), text))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn presets_load() {
        for (ell, name) in [(10.0, "ell10"), (30.0, "ell30"), (90.0, "ell90")] {
            let params = load(Some(name), None).unwrap();
            assert_eq!(params, SystemParams::reference(ell));
        }
        assert_eq!(load(None, None).unwrap(), SystemParams::reference(10.0));
    }

    #[test]
    fn files_and_directories() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mine.toml");
        let mut f = std::fs::File::create(&path).unwrap();
        write!(f, "{}", SystemParams::reference(20.0).to_toml_string()).unwrap();
        let by_path = load(Some(path.to_str().unwrap()), None).unwrap();
        let by_name = load(Some("mine"), Some(dir.path())).unwrap();
        assert_eq!(by_path, by_name);
        assert_eq!(by_path.packet_nats, 20.0);
    }

    #[test]
    fn errors_carry_diagnostics() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.toml");
        std::fs::write(&path, "P_t = 0.01\nbogus = 3\n").unwrap();
        let err = load(Some(path.to_str().unwrap()), None).unwrap_err().to_string();
        assert!(err.contains("bogus") && err.contains("line 2"), "{err}");

        std::fs::write(&path, PRESETS[0].1.replace("eta = 0.5", "eta = 2.0")).unwrap();
        let err = load(Some(path.to_str().unwrap()), None).unwrap_err().to_string();
        assert!(err.contains("eta"), "{err}");

        assert!(matches!(load(Some("nope"), None), Err(CliError::Config(_))));
    }
}
