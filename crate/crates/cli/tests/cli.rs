use std::path::Path;
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stereo_core::io::{read_disparity, write_correspondences, write_disparity, write_gray};
use stereo_core::epipolar::Correspondence;
use stereo_core::{DisparityImage, GrayImage};

fn stereo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stereo")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn value<'a>(text: &'a str, key: &str) -> &'a str {
    text.lines()
        .find_map(|l| l.strip_prefix(key).and_then(|r| r.trim_start().strip_prefix('=')))
        .unwrap_or_else(|| panic!("no {key} in {text}"))
        .trim()
}

/// Random texture and the same texture shifted left by `shift`.
fn shifted_pair(dir: &Path, w: usize, h: usize, shift: usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let left = GrayImage::from_vec(w, h, (0..w * h).map(|_| rng.gen()).collect()).unwrap();
    let right = GrayImage::from_fn(w, h, |u, v| if u + shift < w { left.get(u + shift, v) } else { 0 }).unwrap();
    write_gray(&left, dir.join("left.pgm")).unwrap();
    write_gray(&right, dir.join("right.pgm")).unwrap();
}

#[test]
fn match_then_evaluate_on_a_pure_shift() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let (w, h, shift) = (64, 48, 5);
    shifted_pair(d, w, h, shift);
    let o = stereo(&[
        "match", "--left", p(&d.join("left.pgm")), "--right", p(&d.join("right.pgm")),
        "--dmax", "12", "--radius", "2", "--out", p(&d.join("disp.pgm")),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));

    // truth over the interior only: borders and the leftmost dmax columns are undefined
    let gt = DisparityImage::from_fn(w, h, |u, v| {
        if u >= 12 + 2 && u + 2 < w && v >= 2 && v + 2 < h { shift as f32 } else { -1.0 }
    });
    write_disparity(&gt, d.join("gt.pgm")).unwrap();
    let o = stereo(&["evaluate", "--disp", p(&d.join("disp.pgm")), "--gt", p(&d.join("gt.pgm")), "--json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(value(&text, "pep").parse::<f64>().unwrap(), 0.0, "{text}");
    assert_eq!(value(&text, "rms").parse::<f64>().unwrap(), 0.0, "{text}");
    let json: serde_json::Value = serde_json::from_str(text.lines().last().unwrap()).unwrap();
    assert_eq!(json["pep"], 0.0);
}

#[test]
fn synth_match_refine_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = stereo(&["synth", "--width", "96", "--height", "64", "--seed", "4", "--out", p(d)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = stereo(&[
        "match", "--left", p(&d.join("left.pgm")), "--right", p(&d.join("right.pgm")), "--dmax", "24",
        "--cost", "ncc", "--sgm", "--out", p(&d.join("raw.pgm")), "--out-right", p(&d.join("raw_r.pgm")),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = stereo(&[
        "refine", "--left", p(&d.join("raw.pgm")), "--right", p(&d.join("raw_r.pgm")), "--lr-check", "--median",
        "--out", p(&d.join("refined.pgm")),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let raw = read_disparity(d.join("raw.pgm")).unwrap();
    let refined = read_disparity(d.join("refined.pgm")).unwrap();
    assert!(refined.valid_count() < raw.valid_count());

    let o = stereo(&["evaluate", "--disp", p(&d.join("refined.pgm")), "--gt", p(&d.join("gt.pgm"))]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(value(&stdout(&o), "pep").parse::<f64>().unwrap() < 5.0, "{}", stdout(&o));

    let o = stereo(&["refine", "--left", p(&d.join("raw.pgm")), "--subpixel", "--out", p(&d.join("x.pgm"))]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bench_outputs_agree_across_workers() {
    let dir = tempfile::tempdir().unwrap();
    let o = stereo(&[
        "bench", "--width", "96", "--height", "64", "--dmax", "16", "--sgm", "--workers", "4", "--out",
        p(dir.path()),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(value(&text, "bit_identical"), "true");
    let sums: Vec<&str> = text.lines().filter_map(|l| l.split("sha256 = ").nth(1)).collect();
    assert_eq!(sums.len(), 4);
    assert!(sums.iter().all(|s| *s == sums[0]));
    let one = std::fs::read(dir.path().join("disparity_w1.pgm")).unwrap();
    let four = std::fs::read(dir.path().join("disparity_w4.pgm")).unwrap();
    assert_eq!(one, four);
}

#[test]
fn size_mismatch_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    write_gray(&GrayImage::filled(32, 24, 1).unwrap(), d.join("a.pgm")).unwrap();
    write_gray(&GrayImage::filled(30, 24, 1).unwrap(), d.join("b.pgm")).unwrap();
    let o = stereo(&["match", "--left", p(&d.join("a.pgm")), "--right", p(&d.join("b.pgm")), "--out", p(&d.join("o.pgm"))]);
    assert_eq!(o.status.code(), Some(5));
    let err = stderr(&o);
    assert!(err.starts_with("error: ImageSizeMismatch:"), "{err}");
    assert_eq!(err.lines().count(), 1);
}

#[test]
fn exit_codes_by_error_class() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();

    assert_eq!(stereo(&["match", "--cost", "xyz"]).status.code(), Some(2));
    assert_eq!(stereo(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(stereo(&["match", "--dmax", "0"]).status.code(), Some(2));

    std::fs::write(d.join("bad.txt"), "left.fx = 500\nleft.fy = nope\n").unwrap();
    let o = stereo(&["undistort", "--calib", p(&d.join("bad.txt")), "--left", p(&d.join("bad.txt")), "--out", p(d)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));

    write_gray(&GrayImage::filled(8, 8, 3).unwrap(), d.join("gray.pgm")).unwrap();
    let o = stereo(&["evaluate", "--disp", p(&d.join("gray.pgm")), "--gt", p(&d.join("gray.pgm"))]);
    assert_eq!(o.status.code(), Some(3));

    // valid disparity beyond the fixed-point range
    let o = stereo(&["synth", "--width", "300", "--height", "8", "--ramp", "250,260", "--step", "0", "--out", p(d)]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));

    let o = stereo(&["evaluate", "--disp", p(&d.join("missing.pgm")), "--gt", p(&d.join("missing.pgm"))]);
    assert_eq!(o.status.code(), Some(5));

    assert_eq!(stereo(&["--help"]).status.code(), Some(0));
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    shifted_pair(d, 48, 32, 3);
    let cfg = d.join("run.cfg");
    std::fs::write(
        &cfg,
        format!(
            "# matcher setup\nleft = {}\nright = {}\ncost = ncc\ndmax = 8\nsgm = true\nlr-check = true\n",
            p(&d.join("left.pgm")),
            p(&d.join("right.pgm"))
        ),
    )
    .unwrap();
    let o = stereo(&["match", "--config", p(&cfg), "--out", p(&d.join("a.pgm"))]);
    assert!(o.status.success(), "{}", stderr(&o));
    let a = read_disparity(d.join("a.pgm")).unwrap();
    assert_eq!(a.get(30, 16), 3.0);
    // columns below dmax never have a right partner, and lr-check keeps them invalid
    assert!(a.valid(2, 16).is_none());

    let o = stereo(&["match", "--config", p(&cfg), "--dmax", "2", "--out", p(&d.join("b.pgm"))]);
    assert!(o.status.success(), "{}", stderr(&o));
    let b = read_disparity(d.join("b.pgm")).unwrap();
    assert!(b.as_slice().iter().all(|x| *x <= 2.0));

    std::fs::write(&cfg, "colour = blue\n").unwrap();
    let o = stereo(&["match", "--config", p(&cfg)]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn estimate_recovers_a_homography() {
    let dir = tempfile::tempdir().unwrap();
    let h = [[1.1, 0.02, 3.0], [-0.01, 0.95, -2.0], [1e-4, 2e-4, 1.0]];
    let apply = |u: f64, v: f64| {
        let z = h[2][0] * u + h[2][1] * v + h[2][2];
        ((h[0][0] * u + h[0][1] * v + h[0][2]) / z, (h[1][0] * u + h[1][1] * v + h[1][2]) / z)
    };
    let cs: Vec<Correspondence> = [(10.0, 10.0), (300.0, 20.0), (280.0, 220.0), (15.0, 230.0)]
        .iter()
        .map(|&(u, v)| {
            let (x, y) = apply(u, v);
            Correspondence::new(u, v, x, y)
        })
        .collect();
    let path = dir.path().join("c.txt");
    write_correspondences(&cs, &path).unwrap();
    let o = stereo(&["estimate", "--corr", p(&path), "--model", "homography"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let m: Vec<f64> = stdout(&o).split_whitespace().map(|x| x.parse().unwrap()).collect();
    for (i, row) in h.iter().enumerate() {
        for (j, want) in row.iter().enumerate() {
            assert!((m[3 * i + j] / m[8] - want).abs() < 1e-8, "{m:?}");
        }
    }
}
