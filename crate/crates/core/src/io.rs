//! File formats: 8-bit images, 16-bit fixed-point disparity maps, the
//! `key = value` calibration file and plain-text correspondence lists.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use image::codecs::pnm::{GraymapHeader, PnmEncoder, SampleEncoding};
use image::{DynamicImage, ExtendedColorType, ImageEncoder, ImageFormat};

use crate::camera::{DistortionCoefficients, IntrinsicMatrix};
use crate::disparity::{DisparityImage, INVALID_DISPARITY};
use crate::epipolar::Correspondence;
use crate::error::{Result, StereoError};
use crate::geometry::{Mat3, PoseSE3, Vec3};
use crate::image::GrayImage;
use crate::rectification::StereoRig;

fn parse(line: usize, msg: impl Into<String>) -> StereoError {
    StereoError::parse(line, msg)
}

/// Disparity fixed-point scale: stored = round(d · 256).
pub const DISPARITY_SCALE: f64 = 256.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Pgm,
    Png,
}

fn format_of(path: &Path) -> Result<Format> {
    match path.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()).as_deref() {
        Some("pgm") | Some("pnm") => Ok(Format::Pgm),
        Some("png") => Ok(Format::Png),
        _ => Err(StereoError::InvalidParameter(format!("{}: expected a .pgm or .png file", path.display()))),
    }
}

fn write_raw(path: &Path, bytes: &[u8], width: usize, height: usize, color: ExtendedColorType) -> Result<()> {
    let (w, h) = (width as u32, height as u32);
    match format_of(path)? {
        Format::Pgm => {
            let maxwhite = if color == ExtendedColorType::L16 { 65535 } else { 255 };
            let header = GraymapHeader { encoding: SampleEncoding::Binary, width: w, height: h, maxwhite };
            let out = BufWriter::new(File::create(path)?);
            PnmEncoder::new(out).with_header(header.into()).write_image(bytes, w, h, color)?;
        }
        Format::Png => image::save_buffer_with_format(path, bytes, w, h, color, ImageFormat::Png)?,
    }
    Ok(())
}

fn open(path: &Path) -> Result<DynamicImage> {
    let fmt = match format_of(path)? {
        Format::Pgm => ImageFormat::Pnm,
        Format::Png => ImageFormat::Png,
    };
    let reader = std::io::BufReader::new(File::open(path)?);
    image::load(reader, fmt).map_err(|e| match e {
        image::ImageError::IoError(io) => StereoError::Io(io),
        other => parse(0, format!("{}: {other}", path.display())),
    })
}

pub fn read_gray(path: impl AsRef<Path>) -> Result<GrayImage> {
    let img = open(path.as_ref())?;
    let DynamicImage::ImageLuma8(buf) = img else {
        return Err(parse(0, format!("{}: expected an 8-bit grayscale image", path.as_ref().display())));
    };
    GrayImage::from_vec(buf.width() as usize, buf.height() as usize, buf.into_raw())
}

pub fn write_gray(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    write_raw(path.as_ref(), img.as_slice(), img.width(), img.height(), ExtendedColorType::L8)
}

/// Fixed-point samples for a disparity map; `0` marks invalid pixels.
pub fn disparity_to_fixed(d: &DisparityImage) -> Result<Vec<u16>> {
    d.as_slice()
        .iter()
        .map(|&x| match d_valid(x) {
            None => Ok(0),
            Some(x) if x >= 256.0 => Err(StereoError::DisparityOverflow(x)),
            // a valid disparity below 1/512 would round to the invalid code
            Some(x) => Ok(((x * DISPARITY_SCALE).round() as u16).max(1)),
        })
        .collect()
}

fn d_valid(x: f32) -> Option<f64> {
    crate::disparity::is_valid_disparity(x).then_some(x as f64)
}

pub fn disparity_from_fixed(width: usize, height: usize, samples: &[u16]) -> Result<DisparityImage> {
    let data = samples
        .iter()
        .map(|&s| if s == 0 { INVALID_DISPARITY } else { (s as f64 / DISPARITY_SCALE) as f32 })
        .collect();
    DisparityImage::from_vec(width, height, data)
}

pub fn write_disparity(d: &DisparityImage, path: impl AsRef<Path>) -> Result<()> {
    let fixed = disparity_to_fixed(d)?;
    let bytes: Vec<u8> = fixed.iter().flat_map(|s| s.to_ne_bytes()).collect();
    write_raw(path.as_ref(), &bytes, d.width(), d.height(), ExtendedColorType::L16)
}

pub fn read_disparity(path: impl AsRef<Path>) -> Result<DisparityImage> {
    let img = open(path.as_ref())?;
    let DynamicImage::ImageLuma16(buf) = img else {
        return Err(parse(0, format!("{}: expected a 16-bit grayscale disparity map", path.as_ref().display())));
    };
    disparity_from_fixed(buf.width() as usize, buf.height() as usize, buf.as_raw())
}

/// `key = value` lines with `#` comments; returns `(line, key, value)`.
pub fn parse_key_values(text: &str) -> Result<Vec<(usize, String, String)>> {
    let mut out = Vec::new();
    let mut seen = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (k, v) = content.split_once('=').ok_or_else(|| parse(line, format!("expected 'key = value', got '{content}'")))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(parse(line, "empty key"));
        }
        if let Some(first) = seen.insert(k.to_string(), line) {
            return Err(parse(line, format!("duplicate key '{k}' (first on line {first})")));
        }
        out.push((line, k.to_string(), v.to_string()));
    }
    Ok(out)
}

fn parse_f64s(line: usize, key: &str, value: &str, n: usize) -> Result<Vec<f64>> {
    let xs: Vec<f64> = value
        .split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|_| parse(line, format!("{key}: '{t}' is not a number"))))
        .collect::<Result<_>>()?;
    if xs.len() != n {
        return Err(parse(line, format!("{key}: expected {n} values, got {}", xs.len())));
    }
    Ok(xs)
}

pub const DISTORTION_ORDER: &str = "radial_then_tangential";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Calibration {
    pub left_distortion: DistortionCoefficients,
    pub right_distortion: DistortionCoefficients,
    pub rig: StereoRig,
}

const CAMERA_KEYS: [&str; 9] = ["fx", "fy", "u0", "v0", "k1", "k2", "k3", "p1", "p2"];

pub fn parse_calibration(text: &str) -> Result<Calibration> {
    let entries = parse_key_values(text)?;
    let end = text.lines().count().max(1);
    let mut cam: HashMap<String, f64> = HashMap::new();
    let (mut r, mut t, mut tc, mut rectified) = (None, None, None, false);
    for (line, key, value) in &entries {
        let line = *line;
        match key.as_str() {
            "R" => r = Some(parse_f64s(line, key, value, 9)?),
            "t" => t = Some(parse_f64s(line, key, value, 3)?),
            "Tc" => tc = Some(parse_f64s(line, key, value, 1)?[0]),
            "rectified" => {
                rectified = value.parse().map_err(|_| parse(line, format!("rectified: '{value}' is not true/false")))?
            }
            "distortion_order" if value == DISTORTION_ORDER => {}
            "distortion_order" => return Err(parse(line, format!("unsupported distortion order '{value}'"))),
            k => match k.split_once('.') {
                Some((side @ ("left" | "right"), name)) if CAMERA_KEYS.contains(&name) => {
                    cam.insert(format!("{side}.{name}"), parse_f64s(line, key, value, 1)?[0]);
                }
                _ => return Err(parse(line, format!("unknown key '{k}'"))),
            },
        }
    }
    let get = |side: &str, name: &str, required: bool| -> Result<f64> {
        match cam.get(&format!("{side}.{name}")) {
            Some(&x) => Ok(x),
            None if !required => Ok(0.0),
            None => Err(parse(end, format!("missing key '{side}.{name}'"))),
        }
    };
    let camera = |side: &str| -> Result<(IntrinsicMatrix, DistortionCoefficients)> {
        let k = IntrinsicMatrix::new(get(side, "fx", true)?, get(side, "fy", true)?, get(side, "u0", true)?, get(side, "v0", true)?)?;
        let d = DistortionCoefficients::new(
            get(side, "k1", false)?,
            get(side, "k2", false)?,
            get(side, "k3", false)?,
            get(side, "p1", false)?,
            get(side, "p2", false)?,
        )?;
        Ok((k, d))
    };
    let (kl, dl) = camera("left")?;
    let (kr, dr) = camera("right")?;
    let r = r.ok_or_else(|| parse(end, "missing key 'R'"))?;
    let t = t.ok_or_else(|| parse(end, "missing key 't'"))?;
    let t = Vec3::new(t[0], t[1], t[2]);
    let pose = PoseSE3::new(Mat3::from_row_slice(&r), t)?;
    let rig = StereoRig::new(kl, kr, pose, tc.unwrap_or_else(|| t.norm()), rectified)?;
    Ok(Calibration { left_distortion: dl, right_distortion: dr, rig })
}

pub fn read_calibration(path: impl AsRef<Path>) -> Result<Calibration> {
    parse_calibration(&std::fs::read_to_string(path)?)
}

/// Calibration text; floats use shortest round-trip formatting.
pub fn format_calibration(c: &Calibration) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "distortion_order = {DISTORTION_ORDER}");
    for (side, k, d) in [
        ("left", c.rig.left(), &c.left_distortion),
        ("right", c.rig.right(), &c.right_distortion),
    ] {
        for (name, x) in [
            ("fx", k.fx()),
            ("fy", k.fy()),
            ("u0", k.u0()),
            ("v0", k.v0()),
            ("k1", d.k1),
            ("k2", d.k2),
            ("k3", d.k3),
            ("p1", d.p1),
            ("p2", d.p2),
        ] {
            let _ = writeln!(s, "{side}.{name} = {x:?}");
        }
    }
    let rot = c.rig.pose().rotation();
    let rows: Vec<String> = (0..3).flat_map(|i| (0..3).map(move |j| format!("{:?}", rot[(i, j)]))).collect();
    let _ = writeln!(s, "R = {}", rows.join(" "));
    let t = c.rig.pose().translation();
    let _ = writeln!(s, "t = {:?} {:?} {:?}", t.x, t.y, t.z);
    let _ = writeln!(s, "Tc = {:?}", c.rig.baseline());
    let _ = writeln!(s, "rectified = {}", c.rig.is_rectified());
    s
}

pub fn write_calibration(c: &Calibration, path: impl AsRef<Path>) -> Result<()> {
    Ok(std::fs::write(path, format_calibration(c))?)
}

/// One `uL vL uR vR` correspondence per line; `#` starts a comment.
pub fn parse_correspondences(text: &str) -> Result<Vec<Correspondence>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let x = parse_f64s(i + 1, "correspondence", content, 4)?;
        out.push(Correspondence::new(x[0], x[1], x[2], x[3]));
    }
    Ok(out)
}

pub fn format_correspondences(cs: &[Correspondence]) -> String {
    cs.iter().fold(String::new(), |mut s, c| {
        let _ = writeln!(s, "{:?} {:?} {:?} {:?}", c.left.u, c.left.v, c.right.u, c.right.v);
        s
    })
}

pub fn read_correspondences(path: impl AsRef<Path>) -> Result<Vec<Correspondence>> {
    parse_correspondences(&std::fs::read_to_string(path)?)
}

pub fn write_correspondences(cs: &[Correspondence], path: impl AsRef<Path>) -> Result<()> {
    Ok(std::fs::write(path, format_correspondences(cs))?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::rot_y;

    fn sample_calibration() -> Calibration {
        let kl = IntrinsicMatrix::new(700.123456789, 701.5, 319.25, 239.75).unwrap();
        let kr = IntrinsicMatrix::new(698.0, 698.5, 321.0, 240.125).unwrap();
        let r = rot_y(0.0123);
        let t = Vec3::new(-0.1, 0.002, 0.0007);
        let rig = StereoRig::new(kl, kr, PoseSE3::new(r, t).unwrap(), t.norm(), false).unwrap();
        Calibration {
            left_distortion: DistortionCoefficients::new(-0.21, 0.034, -0.001, 1e-4, -2e-4).unwrap(),
            right_distortion: DistortionCoefficients::radial(0.1),
            rig,
        }
    }

    #[test]
    fn calibration_round_trip_is_bit_exact() {
        let c = sample_calibration();
        let back = parse_calibration(&format_calibration(&c)).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn calibration_errors() {
        let text = format_calibration(&sample_calibration());
        let neg = text.replace("left.fx = 700.123456789", "left.fx = -1.0");
        assert!(matches!(parse_calibration(&neg), Err(StereoError::InvariantViolation(_))));
        let bad_r = text.replacen("R = ", "R = 1.001 0 0 0 1 0 0 0 1 # ", 1);
        match parse_calibration(&bad_r) {
            Err(StereoError::InvariantViolation(msg)) => assert!(msg.contains("orthogonality")),
            other => panic!("{other:?}"),
        }
        let unknown = format!("{text}left.skew = 0.0\n");
        match parse_calibration(&unknown) {
            Err(StereoError::Parse { line, msg }) => {
                assert_eq!(line, text.lines().count() + 1);
                assert!(msg.contains("left.skew"));
            }
            other => panic!("{other:?}"),
        }
        let dup = format!("{text}Tc = 0.1\n");
        assert!(matches!(parse_calibration(&dup), Err(StereoError::Parse { .. })));
        let missing = text.lines().filter(|l| !l.starts_with("right.fy")).collect::<Vec<_>>().join("\n");
        assert!(matches!(parse_calibration(&missing), Err(StereoError::Parse { .. })));
        assert!(matches!(parse_calibration("left.fx 3"), Err(StereoError::Parse { line: 1, .. })));
    }

    #[test]
    fn fixed_point_examples() {
        let d = DisparityImage::from_vec(3, 1, vec![1.5, INVALID_DISPARITY, 255.0]).unwrap();
        let fixed = disparity_to_fixed(&d).unwrap();
        assert_eq!(fixed, vec![384, 0, 65280]);
        assert_eq!(disparity_from_fixed(3, 1, &fixed).unwrap(), d);
        let big = DisparityImage::filled(1, 1, 300.0);
        assert!(matches!(disparity_to_fixed(&big), Err(StereoError::DisparityOverflow(_))));
        let tiny = DisparityImage::filled(1, 1, 0.0);
        assert_eq!(disparity_to_fixed(&tiny).unwrap(), vec![1]);
    }

    #[test]
    fn file_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let img = GrayImage::from_fn(13, 7, |u, v| (u * 19 + v * 7) as u8).unwrap();
        let disp = DisparityImage::from_fn(13, 7, |u, v| if (u + v) % 5 == 0 { -1.0 } else { u as f32 * 1.75 + v as f32 / 256.0 });
        for ext in ["pgm", "png"] {
            let p = dir.path().join(format!("img.{ext}"));
            write_gray(&img, &p).unwrap();
            assert_eq!(read_gray(&p).unwrap(), img);
            let p = dir.path().join(format!("disp.{ext}"));
            write_disparity(&disp, &p).unwrap();
            assert_eq!(read_disparity(&p).unwrap(), disp);
            assert!(matches!(read_gray(&p), Err(StereoError::Parse { .. })));
        }
        let head = std::fs::read(dir.path().join("disp.pgm")).unwrap();
        assert!(head.starts_with(b"P5"));
        assert!(String::from_utf8_lossy(&head[..20]).contains("65535"));
        assert!(write_gray(&img, dir.path().join("img.bmp")).is_err());
        let p = dir.path().join("calib.txt");
        write_calibration(&sample_calibration(), &p).unwrap();
        assert_eq!(read_calibration(&p).unwrap(), sample_calibration());
    }

    #[test]
    fn correspondence_round_trip() {
        let cs = vec![Correspondence::new(1.5, 2.25, -3.0, 4.125), Correspondence::new(0.1, 0.2, 0.3, 1e-9)];
        let back = parse_correspondences(&format!("# header\n{}\n", format_correspondences(&cs))).unwrap();
        assert_eq!(back, cs);
        assert!(matches!(parse_correspondences("1 2 3\n"), Err(StereoError::Parse { line: 1, .. })));
    }
}
