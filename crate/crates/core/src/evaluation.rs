use std::fmt::Write as _;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::disparity::{is_valid_disparity, DisparityImage};
use crate::error::{Result, StereoError};
use crate::parallel::Executor;

/// Which pixels enter the error statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvalMode {
    /// Pixels valid in both maps.
    #[default]
    BothValid,
    /// Every pixel with valid ground truth; an invalid estimate counts as 0.
    AllPixels,
}

#[derive(Debug, Clone, Copy, Default)]
struct Partial {
    n: u64,
    sq: f64,
    bad: u64,
}

fn partials(est: &DisparityImage, gt: &DisparityImage, delta: f64, mode: EvalMode, exec: &Executor) -> Result<Partial> {
    est.check_same_size(gt)?;
    let w = est.width();
    let rows = exec.map(est.height(), |v| {
        let mut p = Partial::default();
        for u in 0..w {
            let g = gt.get(u, v);
            if !is_valid_disparity(g) {
                continue;
            }
            let e = match (est.valid(u, v), mode) {
                (Some(e), _) => e,
                (None, EvalMode::AllPixels) => 0.0,
                (None, EvalMode::BothValid) => continue,
            };
            let diff = (e as f64 - g as f64).abs();
            p.n += 1;
            p.sq += diff * diff;
            p.bad += (diff > delta) as u64;
        }
        p
    });
    // row order fixes the summation order regardless of worker count
    let total = rows.into_iter().fold(Partial::default(), |a, b| Partial { n: a.n + b.n, sq: a.sq + b.sq, bad: a.bad + b.bad });
    if total.n == 0 {
        return Err(StereoError::EmptyEvaluationSet);
    }
    Ok(total)
}

pub fn rms_error(est: &DisparityImage, gt: &DisparityImage, exec: &Executor) -> Result<f64> {
    rms_error_with(est, gt, EvalMode::BothValid, exec)
}

pub fn rms_error_with(est: &DisparityImage, gt: &DisparityImage, mode: EvalMode, exec: &Executor) -> Result<f64> {
    let p = partials(est, gt, 0.0, mode, exec)?;
    Ok((p.sq / p.n as f64).sqrt())
}

/// Percentage of evaluated pixels with `|D_E − D_G| > delta_d`.
pub fn pep(est: &DisparityImage, gt: &DisparityImage, delta_d: f64, exec: &Executor) -> Result<f64> {
    pep_with(est, gt, delta_d, EvalMode::BothValid, exec)
}

pub fn pep_with(est: &DisparityImage, gt: &DisparityImage, delta_d: f64, mode: EvalMode, exec: &Executor) -> Result<f64> {
    check_delta(delta_d)?;
    let p = partials(est, gt, delta_d, mode, exec)?;
    Ok(100.0 * p.bad as f64 / p.n as f64)
}

fn check_delta(delta_d: f64) -> Result<()> {
    if !(delta_d >= 0.0) {
        return Err(StereoError::InvalidParameter(format!("delta_d must be >= 0, got {delta_d}")));
    }
    Ok(())
}

/// Millions of disparity evaluations per second, `w·h·d_max·1e-6 / t`.
pub fn mde_per_s(width: usize, height: usize, d_max: usize, wall_time_s: f64) -> Result<f64> {
    if !(wall_time_s > 0.0) {
        return Err(StereoError::NonPositiveTime(wall_time_s));
    }
    Ok(width as f64 * height as f64 * d_max as f64 / 1e6 / wall_time_s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Throughput {
    pub width: usize,
    pub height: usize,
    pub d_max: usize,
    /// Hypotheses per pixel actually evaluated (`d_max + 1`).
    pub levels: usize,
    pub wall_time_s: f64,
    pub mde_per_s: f64,
}

impl Throughput {
    pub fn new(width: usize, height: usize, d_max: usize, elapsed: Duration) -> Result<Self> {
        let wall_time_s = elapsed.as_secs_f64();
        Ok(Throughput { width, height, d_max, levels: d_max + 1, wall_time_s, mde_per_s: mde_per_s(width, height, d_max, wall_time_s)? })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rms: f64,
    pub pep: f64,
    pub delta_d: f64,
    pub n_evaluated: u64,
    pub mode: EvalMode,
    pub throughput: Option<Throughput>,
}

impl EvalReport {
    pub fn compute(est: &DisparityImage, gt: &DisparityImage, delta_d: f64, mode: EvalMode, exec: &Executor) -> Result<Self> {
        check_delta(delta_d)?;
        let p = partials(est, gt, delta_d, mode, exec)?;
        Ok(EvalReport {
            rms: (p.sq / p.n as f64).sqrt(),
            pep: 100.0 * p.bad as f64 / p.n as f64,
            delta_d,
            n_evaluated: p.n,
            mode,
            throughput: None,
        })
    }

    pub fn with_throughput(mut self, t: Throughput) -> Self {
        self.throughput = Some(t);
        self
    }

    /// `key = value` lines; floats use shortest round-trip formatting.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mode = match self.mode {
            EvalMode::BothValid => "both_valid",
            EvalMode::AllPixels => "all_pixels",
        };
        let _ = writeln!(s, "rms = {}", self.rms);
        let _ = writeln!(s, "pep = {}", self.pep);
        let _ = writeln!(s, "delta_d = {}", self.delta_d);
        let _ = writeln!(s, "n_evaluated = {}", self.n_evaluated);
        let _ = writeln!(s, "mode = {mode}");
        if let Some(t) = &self.throughput {
            let _ = writeln!(s, "width = {}", t.width);
            let _ = writeln!(s, "height = {}", t.height);
            let _ = writeln!(s, "d_max = {}", t.d_max);
            let _ = writeln!(s, "levels = {}", t.levels);
            let _ = writeln!(s, "wall_time_s = {}", t.wall_time_s);
            let _ = writeln!(s, "mde_per_s = {}", t.mde_per_s);
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}
