use std::collections::HashMap;
use std::path::PathBuf;
use std::str::FromStr;

use stereo_core::evaluation::EvalMode;
use stereo_core::io::parse_key_values;
use stereo_core::matching::{CostKind, MatchParams, PathSet, SgmParams};
use stereo_core::refinement::RefineParams;
use stereo_core::{Result, StereoError};

use crate::{Command, Flags};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimateModel {
    Fundamental,
    Homography,
}

impl FromStr for EstimateModel {
    type Err = StereoError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fundamental" => Ok(EstimateModel::Fundamental),
            "homography" => Ok(EstimateModel::Homography),
            _ => Err(StereoError::InvalidParameter(format!("unknown model '{s}'"))),
        }
    }
}

/// Fully resolved settings for one command.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub command: Command,
    pub left: Option<PathBuf>,
    pub right: Option<PathBuf>,
    pub calib: Option<PathBuf>,
    pub disp: Option<PathBuf>,
    pub gt: Option<PathBuf>,
    pub corr: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub out_right: Option<PathBuf>,
    pub matching: MatchParams,
    /// Penalties in 8-bit intensity units; `None` runs plain WTA.
    pub sgm: Option<SgmParams>,
    pub refine: RefineParams,
    /// 0 means every available core.
    pub workers: usize,
    pub seed: u64,
    pub delta_d: f64,
    pub eval_mode: EvalMode,
    pub json: bool,
    pub width: Option<usize>,
    pub height: Option<usize>,
    pub model: EstimateModel,
    pub ramp: (f32, f32),
    pub step: f32,
}

const KEYS: &[&str] = &[
    "left", "right", "calib", "cost", "radius", "dmax", "sgm", "l1", "l2", "paths", "lr-check", "tau", "subpixel",
    "median", "window", "workers", "seed", "out", "out-right", "disp", "gt", "delta", "all-pixels", "json", "width",
    "height", "corr", "model", "ramp", "step",
];

struct ConfigFile {
    entries: HashMap<String, (usize, String)>,
}

impl ConfigFile {
    fn load(path: Option<&PathBuf>) -> Result<Self> {
        let mut entries = HashMap::new();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path)?;
            for (line, key, value) in parse_key_values(&text)? {
                if !KEYS.contains(&key.as_str()) {
                    return Err(StereoError::Parse { line, msg: format!("unknown config key '{key}'") });
                }
                entries.insert(key, (line, value));
            }
        }
        Ok(ConfigFile { entries })
    }

    fn get<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.entries.get(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse()
                .map(Some)
                .map_err(|_| StereoError::Parse { line: *line, msg: format!("{key}: cannot parse '{v}'") }),
        }
    }

    fn or<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T> {
        Ok(self.get(flag, key)?.unwrap_or(default))
    }

    fn switch(&self, flag: bool, key: &str) -> Result<bool> {
        self.or(flag.then_some(true), key, false)
    }

    fn path(&self, flag: &Option<PathBuf>, key: &str) -> Result<Option<PathBuf>> {
        self.get(flag.clone(), key)
    }
}

fn parse_ramp(s: &str) -> Result<(f32, f32)> {
    let bad = || StereoError::InvalidParameter(format!("ramp must be 'lo,hi', got '{s}'"));
    let (a, b) = s.split_once(',').ok_or_else(bad)?;
    Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
}

impl PipelineConfig {
    /// Merges command-line flags over the optional config file and the
    /// built-in defaults, then validates the parameter blocks.
    pub fn resolve(command: Command, flags: &Flags) -> Result<Self> {
        let file = ConfigFile::load(flags.config.as_ref())?;
        let cost: CostKind = file.or(flags.cost.clone(), "cost", "sad".to_string())?.parse()?;
        let defaults = MatchParams::default();
        let matching = MatchParams {
            d_max: file.or(flags.dmax, "dmax", defaults.d_max)?,
            block_radius: file.or(flags.radius, "radius", defaults.block_radius)?,
            cost,
            ..defaults
        };
        matching.validate()?;
        let sgm_defaults = SgmParams::default();
        let sgm = SgmParams {
            lambda1: file.or(flags.l1, "l1", sgm_defaults.lambda1)?,
            lambda2: file.or(flags.l2, "l2", sgm_defaults.lambda2)?,
            paths: PathSet::from_count(file.or(flags.paths, "paths", 8)?)?,
        };
        sgm.validate()?;
        let refine_defaults = RefineParams::default();
        let refine = RefineParams {
            lr_check: file.switch(flags.lr_check, "lr-check")?,
            lr_threshold: file.or(flags.tau, "tau", refine_defaults.lr_threshold)?,
            subpixel: file.switch(flags.subpixel, "subpixel")?,
            median: file.switch(flags.median, "median")?,
            median_window: file.or(flags.window, "window", refine_defaults.median_window)?,
        };
        refine.validate()?;
        let model: String = file.or(flags.model.clone(), "model", "fundamental".to_string())?;
        let ramp: String = file.or(flags.ramp.clone(), "ramp", "2,10".to_string())?;
        Ok(PipelineConfig {
            command,
            left: file.path(&flags.left, "left")?,
            right: file.path(&flags.right, "right")?,
            calib: file.path(&flags.calib, "calib")?,
            disp: file.path(&flags.disp, "disp")?,
            gt: file.path(&flags.gt, "gt")?,
            corr: file.path(&flags.corr, "corr")?,
            out: file.path(&flags.out, "out")?,
            out_right: file.path(&flags.out_right, "out-right")?,
            matching,
            sgm: file.switch(flags.sgm, "sgm")?.then_some(sgm),
            refine,
            workers: file.or(flags.workers, "workers", 0)?,
            seed: file.or(flags.seed, "seed", 0)?,
            delta_d: file.or(flags.delta, "delta", 1.0)?,
            eval_mode: if file.switch(flags.all_pixels, "all-pixels")? { EvalMode::AllPixels } else { EvalMode::BothValid },
            json: file.switch(flags.json, "json")?,
            width: file.get(flags.width, "width")?,
            height: file.get(flags.height, "height")?,
            model: model.parse()?,
            ramp: parse_ramp(&ramp)?,
            step: file.or(flags.step, "step", 8.0)?,
        })
    }

    pub fn require_path(&self, path: &Option<PathBuf>, flag: &str) -> Result<PathBuf> {
        path.clone().ok_or_else(|| {
            StereoError::InvalidParameter(format!("`{}` needs --{flag}", self.command.name()))
        })
    }
}
