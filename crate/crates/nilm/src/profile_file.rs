//! Cost profiles as TOML. The `cortex-m4-paper` profile ships inside the
//! binary and as `profiles/cortex-m4-paper.toml` for copying and editing.

use std::fs;
use std::path::Path;

use nilm_core::cost::{CostProfile, CORTEX_M4_PAPER, PROFILE_VERSION};

use crate::script::line_of;
use crate::{FileError, Result};

pub const EMBEDDED_CORTEX_M4: &str = include_str!("../profiles/cortex-m4-paper.toml");

pub fn parse_profile(text: &str, path: &Path) -> Result<CostProfile> {
    let profile: CostProfile = toml::from_str(text).map_err(|e| FileError::Parse {
        path: path.into(),
        line: e.span().map_or(0, |s| line_of(text, s.start)),
        message: e.message().to_string(),
    })?;
    if profile.version != PROFILE_VERSION {
        return Err(FileError::Version {
            found: profile.version,
            supported: PROFILE_VERSION,
        });
    }
    profile.validate().map_err(|e| FileError::format(path, e.to_string()))?;
    Ok(profile)
}

/// A built-in profile name or a path to a profile file.
pub fn resolve_profile(name_or_path: &str) -> Result<CostProfile> {
    if name_or_path == CORTEX_M4_PAPER {
        return parse_profile(EMBEDDED_CORTEX_M4, Path::new("<embedded cortex-m4-paper>"));
    }
    let path = Path::new(name_or_path);
    let text = fs::read_to_string(path).map_err(|e| FileError::io(path, e))?;
    parse_profile(&text, path)
}

pub fn profile_to_toml(profile: &CostProfile) -> String {
    toml::to_string_pretty(profile).expect("profiles serialize")
}

pub fn save_profile(profile: &CostProfile, path: &Path) -> Result<()> {
    fs::write(path, profile_to_toml(profile)).map_err(|e| FileError::io(path, e))
}
