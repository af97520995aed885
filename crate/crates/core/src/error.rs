use thiserror::Error;

pub type Result<T> = std::result::Result<T, StereoError>;

#[derive(Debug, Error)]
pub enum StereoError {
    #[error("point has non-positive depth z = {0}")]
    NonPositiveDepth(f64),
    #[error("translation norm {0:e} is too small to define an essential matrix")]
    DegenerateTranslation(f64),
    #[error("need at least {needed} correspondences, got {got}")]
    InsufficientPoints { needed: usize, got: usize },
    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(String),
    #[error("plane offset b is zero (plane passes through the left camera center)")]
    ZeroPlaneOffset,
    #[error("mapped point is at infinity (w = {0:e})")]
    PointAtInfinity(f64),
    #[error("baseline is parallel to the optical axis")]
    DegenerateBaseline,
    #[error("disparity {0} is not positive")]
    NonPositiveDisparity(f64),
    #[error("pixel ({u}, {v}) at disparity {d} reads outside the image")]
    OutOfBounds { u: i64, v: i64, d: i64 },
    #[error("image sizes differ: {0}x{1} vs {2}x{3}")]
    ImageSizeMismatch(usize, usize, usize, usize),
    #[error("map sizes differ: {0}x{1} vs {2}x{3}")]
    SizeMismatch(usize, usize, usize, usize),
    #[error("cost volume needs {needed} bytes, cap is {cap}")]
    VolumeTooLarge { needed: u128, cap: u128 },
    #[error("no pixels are valid in both maps")]
    EmptyEvaluationSet,
    #[error("wall time {0} s is not positive")]
    NonPositiveTime(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invariant violated: {0}")]
    InvariantViolation(String),
    /// `line` is 1-based; 0 when the error is not tied to a line.
    #[error("{}", located(*line, msg))]
    Parse { line: usize, msg: String },
    #[error("disparity {0} does not fit the 16-bit fixed-point encoding")]
    DisparityOverflow(f64),
    #[error("invalid disparity field: {0}")]
    InvalidDisparityField(String),
    #[error("image codec: {0}")]
    Image(#[from] image::ImageError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn located(line: usize, msg: &str) -> String {
    if line == 0 {
        msg.to_string()
    } else {
        format!("line {line}: {msg}")
    }
}

impl StereoError {
    /// Stable machine-readable error class, used by the CLI error line.
    pub fn class(&self) -> &'static str {
        use StereoError::*;
        match self {
            NonPositiveDepth(_) => "NonPositiveDepth",
            DegenerateTranslation(_) => "DegenerateTranslation",
            InsufficientPoints { .. } => "InsufficientPoints",
            DegenerateConfiguration(_) => "DegenerateConfiguration",
            ZeroPlaneOffset => "ZeroPlaneOffset",
            PointAtInfinity(_) => "PointAtInfinity",
            DegenerateBaseline => "DegenerateBaseline",
            NonPositiveDisparity(_) => "NonPositiveDisparity",
            OutOfBounds { .. } => "OutOfBounds",
            ImageSizeMismatch(..) => "ImageSizeMismatch",
            SizeMismatch(..) => "SizeMismatch",
            VolumeTooLarge { .. } => "VolumeTooLarge",
            EmptyEvaluationSet => "EmptyEvaluationSet",
            NonPositiveTime(_) => "NonPositiveTime",
            InvalidParameter(_) => "InvalidParameter",
            InvariantViolation(_) => "InvariantViolation",
            Parse { .. } => "ParseError",
            DisparityOverflow(_) => "DisparityOverflow",
            InvalidDisparityField(_) => "InvalidDisparityField",
            Image(_) => "ImageError",
            Io(_) => "IoError",
        }
    }

    pub(crate) fn parse(line: usize, msg: impl Into<String>) -> Self {
        StereoError::Parse { line, msg: msg.into() }
    }
}
