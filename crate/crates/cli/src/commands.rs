use std::io::Write;
use std::path::{Path, PathBuf};

use stereo_core::camera::{build_undistort_map, remap, DistortionCoefficients, Interpolation};
use stereo_core::epipolar::{estimate_fundamental_8pt, estimate_homography_4pt};
use stereo_core::evaluation::EvalReport;
use stereo_core::geometry::Mat3;
use stereo_core::io::{
    read_calibration, read_correspondences, read_disparity, read_gray, write_calibration, write_disparity, write_gray,
    Calibration,
};
use stereo_core::matching::match_stereo;
use stereo_core::rectification::rectify_rig_with_distortion;
use stereo_core::refinement::{refine, RefineParams};
use stereo_core::synth::{generate_random_dot_pair, ramp_with_occluder};
use stereo_core::{Executor, GrayImage, Result, StereoError};

use crate::bench::{run_bench, BenchConfig};
use crate::config::{EstimateModel, PipelineConfig};
use crate::Command;

fn io_err(e: std::io::Error) -> StereoError {
    StereoError::Io(e)
}

fn executor(cfg: &PipelineConfig) -> Result<Executor> {
    Executor::with_workers(cfg.workers)
}

fn out_dir(cfg: &PipelineConfig) -> Result<PathBuf> {
    let dir = cfg.require_path(&cfg.out, "out")?;
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn check_exists(path: &Path) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(StereoError::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("{} does not exist", path.display()),
        )))
    }
}

fn input(cfg: &PipelineConfig, path: &Option<PathBuf>, flag: &str) -> Result<PathBuf> {
    let p = cfg.require_path(path, flag)?;
    check_exists(&p)?;
    Ok(p)
}

pub(crate) fn run(cfg: &PipelineConfig, out: &mut dyn Write) -> Result<()> {
    match cfg.command {
        Command::Undistort => undistort(cfg, out),
        Command::Rectify => rectify(cfg, out),
        Command::Match => match_cmd(cfg, out),
        Command::Refine => refine_cmd(cfg, out),
        Command::Evaluate => evaluate(cfg, out),
        Command::Bench => bench(cfg, out),
        Command::Synth => synth(cfg, out),
        Command::Estimate => estimate(cfg, out),
    }
}

fn undistort(cfg: &PipelineConfig, out: &mut dyn Write) -> Result<()> {
    let calib = read_calibration(input(cfg, &cfg.calib, "calib")?)?;
    if cfg.left.is_none() && cfg.right.is_none() {
        return Err(StereoError::InvalidParameter("`undistort` needs --left and/or --right".into()));
    }
    let dir = out_dir(cfg)?;
    let exec = executor(cfg)?;
    let views = [
        ("left", &cfg.left, calib.rig.left(), &calib.left_distortion),
        ("right", &cfg.right, calib.rig.right(), &calib.right_distortion),
    ];
    for (name, path, k, d) in views {
        let Some(path) = path else { continue };
        check_exists(path)?;
        let img = read_gray(path)?;
        let map = build_undistort_map(k, d, img.width(), img.height(), &exec)?;
        let target = dir.join(format!("{name}.pgm"));
        write_gray(&remap(&img, &map, Interpolation::Bilinear, &exec)?, &target)?;
        writeln!(out, "{name} = {}", target.display()).map_err(io_err)?;
    }
    Ok(())
}

fn rectify(cfg: &PipelineConfig, out: &mut dyn Write) -> Result<()> {
    let calib = read_calibration(input(cfg, &cfg.calib, "calib")?)?;
    let left = read_gray(input(cfg, &cfg.left, "left")?)?;
    let right = read_gray(input(cfg, &cfg.right, "right")?)?;
    if !left.same_size(&right) {
        return Err(StereoError::ImageSizeMismatch(left.width(), left.height(), right.width(), right.height()));
    }
    let (w, h) = (cfg.width.unwrap_or(left.width()), cfg.height.unwrap_or(left.height()));
    let exec = executor(cfg)?;
    let rect = rectify_rig_with_distortion(&calib.rig, &calib.left_distortion, &calib.right_distortion, w, h, &exec)?;
    let dir = out_dir(cfg)?;
    write_gray(&remap(&left, &rect.left_map, Interpolation::Bilinear, &exec)?, dir.join("left.pgm"))?;
    write_gray(&remap(&right, &rect.right_map, Interpolation::Bilinear, &exec)?, dir.join("right.pgm"))?;
    let rectified = Calibration {
        left_distortion: DistortionCoefficients::default(),
        right_distortion: DistortionCoefficients::default(),
        rig: rect.rig,
    };
    write_calibration(&rectified, dir.join("calib.txt"))?;
    writeln!(out, "out = {}", dir.display()).map_err(io_err)?;
    Ok(())
}

fn load_pair(cfg: &PipelineConfig) -> Result<(GrayImage, GrayImage)> {
    let left = read_gray(input(cfg, &cfg.left, "left")?)?;
    let right = read_gray(input(cfg, &cfg.right, "right")?)?;
    Ok((left, right))
}

fn any_refinement(r: &RefineParams) -> bool {
    r.lr_check || r.subpixel || r.median
}

fn match_cmd(cfg: &PipelineConfig, out: &mut dyn Write) -> Result<()> {
    let target = cfg.require_path(&cfg.out, "out")?;
    let (left, right) = load_pair(cfg)?;
    let exec = executor(cfg)?;
    let m = match_stereo(&left, &right, &cfg.matching, cfg.sgm.as_ref(), &exec)?;
    let disp = if any_refinement(&cfg.refine) {
        refine(&m.left, Some(&m.right), Some(&m.left_volume), &cfg.refine, &exec)?
    } else {
        m.left
    };
    write_disparity(&disp, &target)?;
    writeln!(out, "out = {}", target.display()).map_err(io_err)?;
    writeln!(out, "valid = {}", disp.valid_count()).map_err(io_err)?;
    if let Some(r) = &cfg.out_right {
        write_disparity(&m.right, r)?;
        writeln!(out, "out_right = {}", r.display()).map_err(io_err)?;
    }
    Ok(())
}

fn refine_cmd(cfg: &PipelineConfig, out: &mut dyn Write) -> Result<()> {
    let target = cfg.require_path(&cfg.out, "out")?;
    let left = read_disparity(input(cfg, &cfg.left, "left")?)?;
    let right = match &cfg.right {
        Some(p) => {
            check_exists(p)?;
            Some(read_disparity(p)?)
        }
        None => None,
    };
    if cfg.refine.subpixel {
        return Err(StereoError::InvalidParameter(
            "subpixel refinement needs the cost volume; use `match --subpixel`".into(),
        ));
    }
    let d = refine(&left, right.as_ref(), None, &cfg.refine, &executor(cfg)?)?;
    write_disparity(&d, &target)?;
    writeln!(out, "out = {}", target.display()).map_err(io_err)?;
    writeln!(out, "valid = {}", d.valid_count()).map_err(io_err)?;
    Ok(())
}

fn evaluate(cfg: &PipelineConfig, out: &mut dyn Write) -> Result<()> {
    let est = read_disparity(input(cfg, &cfg.disp, "disp")?)?;
    let gt = read_disparity(input(cfg, &cfg.gt, "gt")?)?;
    let report = EvalReport::compute(&est, &gt, cfg.delta_d, cfg.eval_mode, &executor(cfg)?)?;
    write!(out, "{}", report.to_text()).map_err(io_err)?;
    if cfg.json {
        writeln!(out, "{}", report.to_json()).map_err(io_err)?;
    }
    Ok(())
}

fn bench(cfg: &PipelineConfig, out: &mut dyn Write) -> Result<()> {
    let (left, right) = match (&cfg.left, &cfg.right) {
        (Some(_), Some(_)) => load_pair(cfg)?,
        _ => {
            let (w, h) = (cfg.width.unwrap_or(512), cfg.height.unwrap_or(512));
            let field = ramp_with_occluder(w, h, cfg.ramp.0, cfg.ramp.1, cfg.step);
            let pair = generate_random_dot_pair(w, h, &field, cfg.seed)?;
            (pair.left, pair.right)
        }
    };
    let max = if cfg.workers == 0 { num_cpus::get() } else { cfg.workers };
    let bc = BenchConfig {
        matching: cfg.matching,
        sgm: cfg.sgm,
        refine: cfg.refine,
        worker_counts: (1..=max).collect(),
        repeats: 1,
    };
    let (report, outputs) = run_bench(&left, &right, &bc)?;
    write!(out, "{}", report.to_text()).map_err(io_err)?;
    if cfg.json {
        writeln!(out, "{}", report.to_json()).map_err(io_err)?;
    }
    if let Some(dir) = &cfg.out {
        std::fs::create_dir_all(dir)?;
        for (row, d) in report.rows.iter().zip(&outputs) {
            write_disparity(d, dir.join(format!("disparity_w{}.pgm", row.workers)))?;
        }
    }
    if !report.bit_identical {
        return Err(StereoError::InvariantViolation("outputs differ across worker counts".into()));
    }
    Ok(())
}

fn synth(cfg: &PipelineConfig, out: &mut dyn Write) -> Result<()> {
    let (w, h) = (cfg.width.unwrap_or(256), cfg.height.unwrap_or(256));
    let field = ramp_with_occluder(w, h, cfg.ramp.0, cfg.ramp.1, cfg.step);
    let pair = generate_random_dot_pair(w, h, &field, cfg.seed)?;
    let dir = out_dir(cfg)?;
    write_gray(&pair.left, dir.join("left.pgm"))?;
    write_gray(&pair.right, dir.join("right.pgm"))?;
    write_disparity(&pair.ground_truth, dir.join("gt.pgm"))?;
    let mask = GrayImage::from_fn(w, h, |u, v| if pair.occlusion.get(u, v) { 255 } else { 0 })?;
    write_gray(&mask, dir.join("occlusion.pgm"))?;
    writeln!(out, "out = {}", dir.display()).map_err(io_err)?;
    writeln!(out, "d_max = {}", field.max_valid().unwrap_or(0.0)).map_err(io_err)?;
    writeln!(out, "occluded = {}", pair.occlusion.count()).map_err(io_err)?;
    Ok(())
}

fn format_matrix(m: &Mat3) -> String {
    (0..3)
        .map(|i| format!("{:?} {:?} {:?}\n", m[(i, 0)], m[(i, 1)], m[(i, 2)]))
        .collect()
}

fn estimate(cfg: &PipelineConfig, out: &mut dyn Write) -> Result<()> {
    let cs = read_correspondences(input(cfg, &cfg.corr, "corr")?)?;
    let m = match cfg.model {
        EstimateModel::Fundamental => *estimate_fundamental_8pt(&cs)?.matrix(),
        EstimateModel::Homography => estimate_homography_4pt(&cs)?,
    };
    let text = format_matrix(&m);
    match &cfg.out {
        Some(p) => std::fs::write(p, &text)?,
        None => write!(out, "{text}").map_err(io_err)?,
    }
    Ok(())
}
