//! Scenario scripts.
//!
//! ```toml
//! version = 1
//! duration_s = 20.0
//!
//! [mains]
//! amplitude_v = 325.27
//! freq_hz = 50.0
//!
//! [appliances.heater]
//! kind = "resistive"
//! nominal_power_w = 800.0
//! noise_rms_a = 0.02
//!
//! [appliances.charger]
//! kind = "rectifier"
//! nominal_power_w = 40.0
//! harmonics = { 1 = 1.0, 3 = 0.6, 5 = 0.3 }
//!
//! [[events]]
//! time_s = 3.0
//! appliance = "heater"
//! action = "on"
//! ```
//!
//! Other kinds: `reactive` (with `phase_rad`) and `phase_cut` (with
//! `cut_angle_rad`). `mains` defaults to 230 V rms at 50 Hz and
//! `noise_rms_a` to 0.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use nilm_core::signal::{
    ApplianceKind, ApplianceModel, ApplianceRegistry, Mains, ScenarioScript, ScriptEvent,
    SwitchAction,
};
use serde::{Deserialize, Serialize};

use crate::{FileError, Result};

pub const SCRIPT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptFile {
    pub version: u32,
    pub duration_s: f64,
    #[serde(default = "default_mains")]
    pub mains: MainsSpec,
    #[serde(default)]
    pub appliances: BTreeMap<String, ApplianceSpec>,
    #[serde(default)]
    pub events: Vec<EventSpec>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MainsSpec {
    pub amplitude_v: f64,
    pub freq_hz: f64,
}

fn default_mains() -> MainsSpec {
    let m = Mains::default();
    MainsSpec {
        amplitude_v: m.amplitude_v,
        freq_hz: m.freq_hz,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ApplianceSpec {
    Resistive {
        nominal_power_w: f64,
        #[serde(default)]
        noise_rms_a: f64,
    },
    Reactive {
        nominal_power_w: f64,
        phase_rad: f64,
        #[serde(default)]
        noise_rms_a: f64,
    },
    Rectifier {
        nominal_power_w: f64,
        /// Harmonic order → amplitude relative to the fundamental.
        harmonics: BTreeMap<String, f64>,
        #[serde(default)]
        noise_rms_a: f64,
    },
    PhaseCut {
        nominal_power_w: f64,
        cut_angle_rad: f64,
        #[serde(default)]
        noise_rms_a: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventSpec {
    pub time_s: f64,
    pub appliance: String,
    pub action: ActionSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionSpec {
    On,
    Off,
}

impl ApplianceSpec {
    pub fn to_model(&self) -> std::result::Result<ApplianceModel, String> {
        let model = match self {
            ApplianceSpec::Resistive { nominal_power_w, noise_rms_a } => {
                ApplianceModel::resistive(*nominal_power_w).with_noise(*noise_rms_a)
            }
            ApplianceSpec::Reactive { nominal_power_w, phase_rad, noise_rms_a } => {
                ApplianceModel::reactive(*nominal_power_w, *phase_rad).with_noise(*noise_rms_a)
            }
            ApplianceSpec::Rectifier { nominal_power_w, harmonics, noise_rms_a } => {
                let mut profile = Vec::with_capacity(harmonics.len());
                for (order, &amp) in harmonics {
                    let k: u32 = order.trim().parse().map_err(|_| format!("harmonic order `{order}` is not an integer"))?;
                    profile.push((k, amp));
                }
                ApplianceModel::rectifier(*nominal_power_w, &profile).with_noise(*noise_rms_a)
            }
            ApplianceSpec::PhaseCut { nominal_power_w, cut_angle_rad, noise_rms_a } => {
                ApplianceModel::phase_cut(*nominal_power_w, *cut_angle_rad).with_noise(*noise_rms_a)
            }
        };
        model.validate().map_err(|e| e.to_string())?;
        Ok(model)
    }

    pub fn from_model(model: &ApplianceModel) -> Self {
        let p = model.nominal_power_w;
        let noise = model.noise_rms_a;
        match &model.kind {
            ApplianceKind::Resistive => ApplianceSpec::Resistive { nominal_power_w: p, noise_rms_a: noise },
            ApplianceKind::Reactive { phase_rad } => ApplianceSpec::Reactive {
                nominal_power_w: p,
                phase_rad: *phase_rad,
                noise_rms_a: noise,
            },
            ApplianceKind::Rectifier { harmonics } => ApplianceSpec::Rectifier {
                nominal_power_w: p,
                harmonics: harmonics.iter().map(|(k, a)| (k.to_string(), *a)).collect(),
                noise_rms_a: noise,
            },
            ApplianceKind::PhaseCut { cut_angle_rad } => ApplianceSpec::PhaseCut {
                nominal_power_w: p,
                cut_angle_rad: *cut_angle_rad,
                noise_rms_a: noise,
            },
        }
    }
}

impl ScriptFile {
    pub fn from_parts(script: &ScenarioScript, registry: &ApplianceRegistry) -> Self {
        Self {
            version: SCRIPT_VERSION,
            duration_s: script.duration_s,
            mains: MainsSpec {
                amplitude_v: script.mains.amplitude_v,
                freq_hz: script.mains.freq_hz,
            },
            appliances: registry.iter().map(|(id, m)| (id.clone(), ApplianceSpec::from_model(m))).collect(),
            events: script
                .events
                .iter()
                .map(|e| EventSpec {
                    time_s: e.time_s,
                    appliance: e.appliance_id.clone(),
                    action: match e.action {
                        SwitchAction::On => ActionSpec::On,
                        SwitchAction::Off => ActionSpec::Off,
                    },
                })
                .collect(),
        }
    }

    /// Checked conversion into the core script and registry.
    pub fn to_parts(&self, path: &Path) -> Result<(ScenarioScript, ApplianceRegistry)> {
        if self.version != SCRIPT_VERSION {
            return Err(FileError::Version {
                found: self.version,
                supported: SCRIPT_VERSION,
            });
        }
        let mut registry = ApplianceRegistry::new();
        for (id, spec) in &self.appliances {
            let model = spec
                .to_model()
                .map_err(|m| FileError::format(path, format!("appliance `{id}`: {m}")))?;
            registry.insert(id.clone(), model);
        }
        let script = ScenarioScript {
            mains: Mains {
                amplitude_v: self.mains.amplitude_v,
                freq_hz: self.mains.freq_hz,
            },
            duration_s: self.duration_s,
            events: self
                .events
                .iter()
                .map(|e| ScriptEvent {
                    time_s: e.time_s,
                    appliance_id: e.appliance.clone(),
                    action: match e.action {
                        ActionSpec::On => SwitchAction::On,
                        ActionSpec::Off => SwitchAction::Off,
                    },
                })
                .collect(),
        };
        script.validate()?;
        if let Some(e) = script.events.iter().find(|e| !registry.contains_key(&e.appliance_id)) {
            return Err(nilm_core::Error::UnknownAppliance(e.appliance_id.clone()).into());
        }
        Ok((script, registry))
    }
}

pub fn parse_script(text: &str, path: &Path) -> Result<(ScenarioScript, ApplianceRegistry)> {
    let file: ScriptFile = toml::from_str(text).map_err(|e| FileError::Parse {
        path: path.into(),
        line: e.span().map_or(0, |s| line_of(text, s.start)),
        message: e.message().to_string(),
    })?;
    file.to_parts(path)
}

pub fn load_script(path: &Path) -> Result<(ScenarioScript, ApplianceRegistry)> {
    let text = fs::read_to_string(path).map_err(|e| FileError::io(path, e))?;
    parse_script(&text, path)
}

pub fn save_script(script: &ScenarioScript, registry: &ApplianceRegistry, path: &Path) -> Result<()> {
    let text = toml::to_string_pretty(&ScriptFile::from_parts(script, registry))
        .map_err(|e| FileError::format(path, e.to_string()))?;
    fs::write(path, text).map_err(|e| FileError::io(path, e))
}

pub(crate) fn line_of(text: &str, offset: usize) -> u64 {
    text[..offset.min(text.len())].bytes().filter(|&b| b == b'\n').count() as u64 + 1
}
