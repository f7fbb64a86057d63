use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("channel length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("odd-length stream ({0} samples) cannot be pair-averaged")]
    OddLength(usize),
    #[error("ADC code {code} at sample {index} is outside the 14-bit range")]
    CodeOutOfRange { index: usize, code: u16 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unknown appliance id `{0}`")]
    UnknownAppliance(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("feature index {index} out of bounds for length {len}")]
    IndexOutOfBounds { index: usize, len: usize },
    #[error("duplicate feature index {0}")]
    DuplicateIndex(usize),
    #[error("feature {feature} has zero variance")]
    ZeroVariance { feature: usize },
    #[error("model integrity violation: {0}")]
    Integrity(String),
    #[error("not enough windows buffered around window {window}")]
    NotReady { window: usize },
    #[error("training diverged (non-finite loss) at epoch {epoch}")]
    Divergence { epoch: usize },
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("class {class} has {count} instance(s); at least 2 are required")]
    ClassTooSmall { class: usize, count: usize },
    #[error("every grid cell failed to train")]
    AllCellsFailed,
}
