//! File formats, reports and command-line plumbing around [`nilm_core`].
//!
//! | module | contents |
//! |---|---|
//! | [`samples`] | `t_s,v,i` CSV and `NILM1` binary sample streams |
//! | [`script`] | TOML scenario scripts with their appliance registry |
//! | [`dataset_file`] | `label,f0,…` CSV datasets plus a JSON sidecar |
//! | [`model_file`] | `NLMM` binary model files and a lossless JSON export |
//! | [`profile_file`] | TOML cost profiles, `cortex-m4-paper` embedded |
//! | [`reports`] | JSON reports, per-point sweep CSV and text tables |
//! | [`cli`] | the `nilm` command line |

pub mod cli;
pub mod dataset_file;
mod error;
pub mod model_file;
pub mod profile_file;
pub mod reports;
pub mod samples;
pub mod script;

pub use error::{FileError, Result};
