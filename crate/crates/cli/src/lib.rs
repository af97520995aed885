//! Batch driver for `stereo-core`.
//!
//! Every subcommand accepts the same flag set; a `--config` file of
//! `key = value` lines (keys are flag names without the dashes) supplies
//! values for flags not given on the command line.

pub mod bench;
mod commands;
pub mod config;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use stereo_core::StereoError;

pub use config::PipelineConfig;

#[derive(Debug, Parser)]
#[command(name = "stereo", version, about = "Classical stereo vision pipeline")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Remove lens distortion from one or both views.
    Undistort,
    /// Rectify a calibrated pair; also writes the rectified calibration.
    Rectify,
    /// Compute a disparity map.
    Match,
    /// Post-process existing disparity maps.
    Refine,
    /// Compare a disparity map with ground truth.
    Evaluate,
    /// Time the matcher for 1..N workers and check the outputs agree.
    Bench,
    /// Generate a random-dot stereogram with ground truth.
    Synth,
    /// Estimate a fundamental matrix or homography from correspondences.
    Estimate,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Undistort => "undistort",
            Command::Rectify => "rectify",
            Command::Match => "match",
            Command::Refine => "refine",
            Command::Evaluate => "evaluate",
            Command::Bench => "bench",
            Command::Synth => "synth",
            Command::Estimate => "estimate",
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// `key = value` file with defaults for any flag below.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Left image, or left disparity map for `refine`.
    #[arg(long, global = true)]
    pub left: Option<PathBuf>,
    /// Right image, or right disparity map for `refine`.
    #[arg(long, global = true)]
    pub right: Option<PathBuf>,
    #[arg(long, global = true)]
    pub calib: Option<PathBuf>,
    /// ad, sd, sad, ssd, ncc or fbs.
    #[arg(long, global = true)]
    pub cost: Option<String>,
    #[arg(long, global = true)]
    pub radius: Option<usize>,
    #[arg(long, global = true)]
    pub dmax: Option<usize>,
    #[arg(long, global = true)]
    pub sgm: bool,
    /// Small-jump penalty, 8-bit intensity units.
    #[arg(long, global = true)]
    pub l1: Option<f32>,
    /// Large-jump penalty, 8-bit intensity units.
    #[arg(long, global = true)]
    pub l2: Option<f32>,
    /// 4 or 8.
    #[arg(long, global = true)]
    pub paths: Option<usize>,
    #[arg(long = "lr-check", global = true)]
    pub lr_check: bool,
    #[arg(long, global = true)]
    pub tau: Option<f64>,
    #[arg(long, global = true)]
    pub subpixel: bool,
    #[arg(long, global = true)]
    pub median: bool,
    #[arg(long, global = true)]
    pub window: Option<usize>,
    /// Worker threads; 0 uses every available core.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output file, or output directory for multi-file commands.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Right-referenced disparity output of `match`.
    #[arg(long = "out-right", global = true)]
    pub out_right: Option<PathBuf>,
    /// Estimated disparity map for `evaluate`.
    #[arg(long, global = true)]
    pub disp: Option<PathBuf>,
    /// Ground-truth disparity map for `evaluate`.
    #[arg(long, global = true)]
    pub gt: Option<PathBuf>,
    /// Error tolerance for the bad-pixel percentage.
    #[arg(long, global = true)]
    pub delta: Option<f64>,
    /// Count invalid estimates as errors instead of skipping them.
    #[arg(long = "all-pixels", global = true)]
    pub all_pixels: bool,
    /// Also print the report as a single-line JSON record.
    #[arg(long, global = true)]
    pub json: bool,
    #[arg(long, global = true)]
    pub width: Option<usize>,
    #[arg(long, global = true)]
    pub height: Option<usize>,
    /// Correspondence file (`uL vL uR vR` per line).
    #[arg(long, global = true)]
    pub corr: Option<PathBuf>,
    /// fundamental or homography.
    #[arg(long, global = true)]
    pub model: Option<String>,
    /// Synthetic ramp disparities `lo,hi`.
    #[arg(long, global = true)]
    pub ramp: Option<String>,
    /// Synthetic occluder step; 0 disables the occluder.
    #[arg(long, global = true)]
    pub step: Option<f32>,
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_PARSE: i32 = 3;
pub const EXIT_INVARIANT: i32 = 4;
pub const EXIT_RUNTIME: i32 = 5;

pub fn exit_code(err: &StereoError) -> i32 {
    match err {
        StereoError::InvalidParameter(_) => EXIT_USAGE,
        StereoError::Parse { .. } => EXIT_PARSE,
        StereoError::InvariantViolation(_) | StereoError::InvalidDisparityField(_) | StereoError::DisparityOverflow(_) => {
            EXIT_INVARIANT
        }
        _ => EXIT_RUNTIME,
    }
}

/// Single-line `error: <Class>: <message>` rendering.
pub fn error_line(class: &str, msg: &str) -> String {
    let flat: Vec<&str> = msg.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
    format!("error: {class}: {}", flat.join(" "))
}

pub fn run_pipeline(cfg: &PipelineConfig, out: &mut dyn Write) -> stereo_core::Result<()> {
    commands::run(cfg, out)
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                return EXIT_OK;
            }
            let text = e.to_string();
            let msg = text.lines().next().unwrap_or("").trim_start_matches("error: ");
            let _ = writeln!(err, "{}", error_line("UsageError", msg));
            return EXIT_USAGE;
        }
    };
    let result = PipelineConfig::resolve(cli.command, &cli.flags).and_then(|cfg| run_pipeline(&cfg, out));
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "{}", error_line(e.class(), &e.to_string()));
            exit_code(&e)
        }
    }
}
