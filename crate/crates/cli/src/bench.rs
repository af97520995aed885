//! Throughput and determinism benchmark.
//!
//! The same pair is matched once per worker count. Each run is timed for
//! the cost-volume stage alone and for the whole matcher (both volumes,
//! optional SGM and refinement); the final map is hashed so runs can be
//! compared byte for byte.

use std::fmt::Write as _;
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};
use stereo_core::evaluation::mde_per_s;
use stereo_core::matching::{build_cost_volume, match_stereo, MatchParams, SgmParams};
use stereo_core::refinement::{refine, RefineParams};
use stereo_core::{DisparityImage, Executor, GrayImage, Result, StereoError};

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub matching: MatchParams,
    pub sgm: Option<SgmParams>,
    pub refine: RefineParams,
    pub worker_counts: Vec<usize>,
    /// Timed repetitions per worker count; the fastest is kept.
    pub repeats: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchRow {
    pub workers: usize,
    pub cost_volume_s: f64,
    pub cost_volume_mde_per_s: f64,
    pub total_s: f64,
    pub mde_per_s: f64,
    pub cost_volume_speedup: f64,
    pub total_speedup: f64,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub width: usize,
    pub height: usize,
    pub d_max: usize,
    pub physical_cores: usize,
    pub logical_cores: usize,
    pub rows: Vec<BenchRow>,
    pub bit_identical: bool,
}

pub fn disparity_sha256(d: &DisparityImage) -> String {
    let mut h = Sha256::new();
    h.update((d.width() as u64).to_le_bytes());
    h.update((d.height() as u64).to_le_bytes());
    for x in d.as_slice() {
        h.update(x.to_le_bytes());
    }
    h.finalize().iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Full matcher as configured, returning the final left map.
pub fn run_matcher(left: &GrayImage, right: &GrayImage, cfg: &BenchConfig, exec: &Executor) -> Result<DisparityImage> {
    let m = match_stereo(left, right, &cfg.matching, cfg.sgm.as_ref(), exec)?;
    let any_refinement = cfg.refine.lr_check || cfg.refine.subpixel || cfg.refine.median;
    if !any_refinement {
        return Ok(m.left);
    }
    refine(&m.left, Some(&m.right), Some(&m.left_volume), &cfg.refine, exec)
}

pub fn run_bench(left: &GrayImage, right: &GrayImage, cfg: &BenchConfig) -> Result<(BenchReport, Vec<DisparityImage>)> {
    if cfg.worker_counts.is_empty() || cfg.worker_counts.contains(&0) {
        return Err(StereoError::InvalidParameter("worker counts must be positive".into()));
    }
    let (w, h, d_max) = (left.width(), left.height(), cfg.matching.d_max);
    let mut rows: Vec<BenchRow> = Vec::new();
    let mut outputs = Vec::new();
    for &workers in &cfg.worker_counts {
        let exec = Executor::with_workers(workers)?;
        let (mut cv_best, mut total_best) = (f64::INFINITY, f64::INFINITY);
        let mut result = None;
        for _ in 0..cfg.repeats.max(1) {
            let t = Instant::now();
            let vol = build_cost_volume(left, right, &cfg.matching, &exec)?;
            cv_best = cv_best.min(t.elapsed().as_secs_f64());
            drop(vol);
            let t = Instant::now();
            let d = run_matcher(left, right, cfg, &exec)?;
            total_best = total_best.min(t.elapsed().as_secs_f64());
            result = Some(d);
        }
        let d = result.expect("at least one repetition");
        let (base_cv, base_total) = rows.first().map_or((cv_best, total_best), |r| (r.cost_volume_s, r.total_s));
        rows.push(BenchRow {
            workers,
            cost_volume_s: cv_best,
            cost_volume_mde_per_s: mde_per_s(w, h, d_max, cv_best)?,
            total_s: total_best,
            mde_per_s: mde_per_s(w, h, d_max, total_best)?,
            cost_volume_speedup: base_cv / cv_best,
            total_speedup: base_total / total_best,
            sha256: disparity_sha256(&d),
        });
        outputs.push(d);
    }
    let bit_identical = outputs.windows(2).all(|p| {
        p[0].as_slice().iter().zip(p[1].as_slice()).all(|(a, b)| a.to_bits() == b.to_bits())
    });
    let report = BenchReport {
        width: w,
        height: h,
        d_max,
        physical_cores: num_cpus::get_physical(),
        logical_cores: num_cpus::get(),
        rows,
        bit_identical,
    };
    Ok((report, outputs))
}

impl BenchReport {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "width = {}", self.width);
        let _ = writeln!(s, "height = {}", self.height);
        let _ = writeln!(s, "d_max = {}", self.d_max);
        let _ = writeln!(s, "physical_cores = {}", self.physical_cores);
        let _ = writeln!(s, "logical_cores = {}", self.logical_cores);
        for r in &self.rows {
            let _ = writeln!(
                s,
                "workers = {} cost_volume_s = {} cost_volume_mde_per_s = {} total_s = {} mde_per_s = {} \
                 cost_volume_speedup = {} total_speedup = {} sha256 = {}",
                r.workers,
                r.cost_volume_s,
                r.cost_volume_mde_per_s,
                r.total_s,
                r.mde_per_s,
                r.cost_volume_speedup,
                r.total_speedup,
                r.sha256
            );
        }
        let _ = writeln!(s, "bit_identical = {}", self.bit_identical);
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("bench report serializes")
    }
}
