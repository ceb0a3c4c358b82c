//! COLMAP text models: `cameras.txt`, `images.txt`, `points3D.txt`.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::{Point2, Point3};

use super::{atomic_write, ReconError};
use crate::geometry::{
    CameraIntrinsics, CameraModel, Reconstruction, RegisteredFrame, RigidPose, SparsePoint, TrackObservation,
};

/// Significant digits used for every written number.
pub const SIGNIFICANT_DIGITS: usize = 12;

/// Formats `v` with [`SIGNIFICANT_DIGITS`] significant digits in plain
/// decimal notation, trailing zeros removed. Magnitudes below 1e-15 or at
/// least 1e15 use exponent notation.
pub fn format_number(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let sci = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-15..15).contains(&exp) {
        let m = trim_zeros(mantissa);
        return format!("{m}e{exp}");
    }
    let negative = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    let mut out = String::new();
    if negative {
        out.push('-');
    }
    if exp >= 0 {
        let int_len = exp as usize + 1;
        if digits.len() <= int_len {
            out.push_str(&digits);
            out.extend(std::iter::repeat_n('0', int_len - digits.len()));
        } else {
            out.push_str(&digits[..int_len]);
            out.push('.');
            out.push_str(&digits[int_len..]);
        }
    } else {
        out.push_str("0.");
        out.extend(std::iter::repeat_n('0', (-exp - 1) as usize));
        out.push_str(&digits);
    }
    trim_zeros(&out)
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

struct Lines<'a> {
    iter: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Lines {
            iter: text.lines().enumerate(),
        }
    }

    /// Next line that is neither blank nor a comment, with its 1-based number.
    fn next_data(&mut self) -> Option<(usize, &'a str)> {
        for (i, line) in self.iter.by_ref() {
            let t = line.trim();
            if !t.is_empty() && !t.starts_with('#') {
                return Some((i + 1, t));
            }
        }
        None
    }

    /// Next line that is not a comment; blank lines are returned, since an
    /// image with no 2D points has an empty second line.
    fn next_points_line(&mut self) -> Option<(usize, &'a str)> {
        for (i, line) in self.iter.by_ref() {
            let t = line.trim();
            if !t.starts_with('#') {
                return Some((i + 1, t));
            }
        }
        None
    }
}

fn parse_err(file: &'static str, line: usize, message: impl Into<String>) -> ReconError {
    ReconError::Parse {
        file: file.to_string(),
        line,
        message: message.into(),
    }
}

fn field<T: std::str::FromStr>(
    file: &'static str,
    line: usize,
    tok: Option<&str>,
    what: &str,
) -> Result<T, ReconError> {
    let tok = tok.ok_or_else(|| parse_err(file, line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| parse_err(file, line, format!("invalid {what} {tok:?}")))
}

fn read_file(dir: &Path, name: &str) -> Result<String, ReconError> {
    let path = dir.join(name);
    fs::read_to_string(&path).map_err(|e| ReconError::Io {
        path: path.clone(),
        source: e,
    })
}

fn parse_cameras(text: &str) -> Result<BTreeMap<u32, CameraIntrinsics>, ReconError> {
    const F: &str = "cameras.txt";
    let mut cameras = BTreeMap::new();
    let mut lines = Lines::new(text);
    while let Some((n, line)) = lines.next_data() {
        let mut tok = line.split_whitespace();
        let id: u32 = field(F, n, tok.next(), "camera id")?;
        let model_name = tok.next().ok_or_else(|| parse_err(F, n, "missing model"))?;
        let model: CameraModel = model_name.parse().map_err(|_| ReconError::UnknownModel {
            model: model_name.to_string(),
            line: n,
        })?;
        let w: u32 = field(F, n, tok.next(), "width")?;
        let h: u32 = field(F, n, tok.next(), "height")?;
        let params = tok
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| parse_err(F, n, format!("invalid parameter {t:?}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let cam = CameraIntrinsics::new(model, w, h, params).map_err(|e| parse_err(F, n, e.to_string()))?;
        if cameras.insert(id, cam).is_some() {
            return Err(parse_err(F, n, format!("duplicate camera id {id}")));
        }
    }
    Ok(cameras)
}

struct ParsedImage {
    frame: RegisteredFrame,
    /// `(pixel, point3D id)` in file order.
    points: Vec<(Point2<f64>, Option<u64>)>,
}

fn parse_images(text: &str) -> Result<(Vec<ParsedImage>, Option<usize>), ReconError> {
    const F: &str = "images.txt";
    let total = text.lines().find_map(|l| {
        l.trim()
            .strip_prefix("# Total frames:")
            .and_then(|v| v.trim().parse::<usize>().ok())
    });
    let mut images = Vec::new();
    let mut lines = Lines::new(text);
    while let Some((n, line)) = lines.next_data() {
        let mut tok = line.split_whitespace();
        let id: u32 = field(F, n, tok.next(), "image id")?;
        let mut q = [0.0; 4];
        for (k, v) in q.iter_mut().enumerate() {
            *v = field(F, n, tok.next(), ["QW", "QX", "QY", "QZ"][k])?;
        }
        let mut t = [0.0; 3];
        for (k, v) in t.iter_mut().enumerate() {
            *v = field(F, n, tok.next(), ["TX", "TY", "TZ"][k])?;
        }
        let camera_id: u32 = field(F, n, tok.next(), "camera id")?;
        // Names may contain spaces: take the remainder of the line.
        let name = line
            .splitn(10, char::is_whitespace)
            .nth(9)
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .ok_or_else(|| parse_err(F, n, "missing image name"))?;
        let pose = RigidPose::from_components(q, t).map_err(|e| parse_err(F, n, e.to_string()))?;

        let (pn, pline) = lines.next_points_line().unwrap_or((n + 1, ""));
        let vals: Vec<&str> = pline.split_whitespace().collect();
        if !vals.len().is_multiple_of(3) {
            return Err(parse_err(
                F,
                pn,
                "2D point list is not a multiple of (X, Y, POINT3D_ID)",
            ));
        }
        let mut points = Vec::with_capacity(vals.len() / 3);
        for c in vals.chunks(3) {
            let x: f64 = field(F, pn, Some(c[0]), "X")?;
            let y: f64 = field(F, pn, Some(c[1]), "Y")?;
            let pid: i64 = field(F, pn, Some(c[2]), "POINT3D_ID")?;
            let pid = match pid {
                -1 => None,
                p if p >= 0 => Some(p as u64),
                p => return Err(parse_err(F, pn, format!("invalid POINT3D_ID {p}"))),
            };
            points.push((Point2::new(x, y), pid));
        }
        images.push(ParsedImage {
            frame: RegisteredFrame::new(id, name, camera_id, pose),
            points,
        });
    }
    Ok((images, total))
}

struct ParsedPoint {
    point: SparsePoint,
    track: Vec<(u32, usize)>,
    line: usize,
}

fn parse_points(text: &str) -> Result<Vec<ParsedPoint>, ReconError> {
    const F: &str = "points3D.txt";
    let mut out = Vec::new();
    let mut lines = Lines::new(text);
    while let Some((n, line)) = lines.next_data() {
        let mut tok = line.split_whitespace();
        let id: u64 = field(F, n, tok.next(), "point id")?;
        let x: f64 = field(F, n, tok.next(), "X")?;
        let y: f64 = field(F, n, tok.next(), "Y")?;
        let z: f64 = field(F, n, tok.next(), "Z")?;
        let r: u8 = field(F, n, tok.next(), "R")?;
        let g: u8 = field(F, n, tok.next(), "G")?;
        let b: u8 = field(F, n, tok.next(), "B")?;
        let error: f64 = field(F, n, tok.next(), "ERROR")?;
        let rest: Vec<&str> = tok.collect();
        if !rest.len().is_multiple_of(2) {
            return Err(parse_err(F, n, "track is not a list of (IMAGE_ID, POINT2D_IDX) pairs"));
        }
        let mut track = Vec::with_capacity(rest.len() / 2);
        for c in rest.chunks(2) {
            track.push((
                field(F, n, Some(c[0]), "IMAGE_ID")?,
                field(F, n, Some(c[1]), "POINT2D_IDX")?,
            ));
        }
        let mut point = SparsePoint::new(id, Point3::new(x, y, z));
        point.color = Some([r, g, b]);
        point.error = error;
        out.push(ParsedPoint { point, track, line: n });
    }
    Ok(out)
}

/// Reads a COLMAP text model from `dir`.
///
/// 2D points with `POINT3D_ID = -1` become the frame's untracked points.
/// The total frame count is taken from a `# Total frames: N` comment in
/// `images.txt` when present and defaults to the number of images.
pub fn read_colmap_text(dir: &Path) -> Result<Reconstruction, ReconError> {
    let cameras = parse_cameras(&read_file(dir, "cameras.txt")?)?;
    let (images, total) = parse_images(&read_file(dir, "images.txt")?)?;
    let points = parse_points(&read_file(dir, "points3D.txt")?)?;

    let mut by_id: HashMap<u32, usize> = HashMap::new();
    for (k, img) in images.iter().enumerate() {
        if !cameras.contains_key(&img.frame.camera_id) {
            return Err(ReconError::Dangling(format!(
                "image {} references unknown camera {}",
                img.frame.id, img.frame.camera_id
            )));
        }
        if by_id.insert(img.frame.id, k).is_some() {
            return Err(ReconError::Dangling(format!("duplicate image id {}", img.frame.id)));
        }
    }
    let point_ids: HashMap<u64, usize> = points.iter().enumerate().map(|(k, p)| (p.point.id, k)).collect();
    if point_ids.len() != points.len() {
        return Err(ReconError::Dangling("duplicate 3D point id".into()));
    }
    for img in &images {
        for (_, pid) in &img.points {
            if let Some(pid) = pid {
                if !point_ids.contains_key(pid) {
                    return Err(ReconError::Dangling(format!(
                        "image {} observes unknown 3D point {pid}",
                        img.frame.id
                    )));
                }
            }
        }
    }

    let mut recon_points = Vec::with_capacity(points.len());
    for p in points {
        let mut sp = p.point;
        for (img_id, idx) in p.track {
            let img = by_id
                .get(&img_id)
                .map(|&k| &images[k])
                .ok_or_else(|| ReconError::Dangling(format!("points3D.txt line {}: unknown image {img_id}", p.line)))?;
            let (pixel, pid) = img.points.get(idx).ok_or_else(|| {
                ReconError::Dangling(format!(
                    "points3D.txt line {}: image {img_id} has no 2D point {idx}",
                    p.line
                ))
            })?;
            if *pid != Some(sp.id) {
                return Err(ReconError::Dangling(format!(
                    "points3D.txt line {}: 2D point {idx} of image {img_id} does not reference point {}",
                    p.line, sp.id
                )));
            }
            sp.track.push(TrackObservation {
                frame: img.frame.name.clone(),
                pixel: *pixel,
            });
        }
        recon_points.push(sp);
    }

    let frames: Vec<RegisteredFrame> = images
        .into_iter()
        .map(|img| {
            let mut f = img.frame;
            f.untracked = img
                .points
                .iter()
                .filter(|(_, pid)| pid.is_none())
                .map(|(p, _)| *p)
                .collect();
            f
        })
        .collect();
    let recon = Reconstruction {
        cameras,
        total_frame_count: total.unwrap_or(frames.len()).max(frames.len()),
        frames,
        points: recon_points,
    };
    recon.validate()?;
    Ok(recon)
}

fn join_numbers(out: &mut String, values: &[f64]) {
    for (k, v) in values.iter().enumerate() {
        if k > 0 {
            out.push(' ');
        }
        out.push_str(&format_number(*v));
    }
}

/// Renders the three files of a COLMAP text model.
///
/// Each image lists the observations of tracked points first, in point
/// order, followed by its untracked points.
pub fn colmap_text(recon: &Reconstruction) -> Result<(String, String, String), ReconError> {
    recon.validate()?;
    let mut cams = String::from("# Camera list with one line of data per camera:\n");
    cams.push_str("#   CAMERA_ID, MODEL, WIDTH, HEIGHT, PARAMS[]\n");
    let _ = writeln!(cams, "# Number of cameras: {}", recon.cameras.len());
    for (id, c) in &recon.cameras {
        let _ = write!(cams, "{id} {} {} {} ", c.model().colmap_name(), c.width(), c.height());
        join_numbers(&mut cams, c.params());
        cams.push('\n');
    }

    // Observations per frame: (pixel, point id) plus where each track entry
    // lands in that list.
    let frame_index: HashMap<&str, usize> = recon
        .frames
        .iter()
        .enumerate()
        .map(|(k, f)| (f.name.as_str(), k))
        .collect();
    let mut obs: Vec<Vec<(Point2<f64>, i64)>> = vec![Vec::new(); recon.frames.len()];
    let mut tracks: Vec<Vec<(u32, usize)>> = Vec::with_capacity(recon.points.len());
    for p in &recon.points {
        let mut t = Vec::with_capacity(p.track.len());
        for o in &p.track {
            let k = frame_index[o.frame.as_str()];
            t.push((recon.frames[k].id, obs[k].len()));
            obs[k].push((o.pixel, p.id as i64));
        }
        tracks.push(t);
    }

    let mut imgs = String::from("# Image list with two lines of data per image:\n");
    imgs.push_str("#   IMAGE_ID, QW, QX, QY, QZ, TX, TY, TZ, CAMERA_ID, NAME\n");
    imgs.push_str("#   POINTS2D[] as (X, Y, POINT3D_ID)\n");
    let _ = writeln!(imgs, "# Number of images: {}", recon.frames.len());
    let _ = writeln!(imgs, "# Total frames: {}", recon.total_frame_count);
    for (k, f) in recon.frames.iter().enumerate() {
        if f.name.trim() != f.name || f.name.is_empty() || f.name.contains('\n') {
            return Err(ReconError::Unrepresentable(format!("frame name {:?}", f.name)));
        }
        let _ = write!(imgs, "{} ", f.id);
        let q = f.pose.quaternion_components();
        let t = f.pose.translation_components();
        join_numbers(&mut imgs, &[q[0], q[1], q[2], q[3], t[0], t[1], t[2]]);
        let _ = writeln!(imgs, " {} {}", f.camera_id, f.name);
        let mut first = true;
        let untracked = f.untracked.iter().map(|p| (*p, -1i64));
        for (p, id) in obs[k].iter().copied().chain(untracked) {
            if !first {
                imgs.push(' ');
            }
            first = false;
            join_numbers(&mut imgs, &[p.x, p.y]);
            let _ = write!(imgs, " {id}");
        }
        imgs.push('\n');
    }

    let mut pts = String::from("# 3D point list with one line of data per point:\n");
    pts.push_str("#   POINT3D_ID, X, Y, Z, R, G, B, ERROR, TRACK[] as (IMAGE_ID, POINT2D_IDX)\n");
    let _ = writeln!(pts, "# Number of points: {}", recon.points.len());
    for (p, t) in recon.points.iter().zip(&tracks) {
        let _ = write!(pts, "{} ", p.id);
        join_numbers(&mut pts, &[p.position.x, p.position.y, p.position.z]);
        let [r, g, b] = p.color.unwrap_or([0, 0, 0]);
        let _ = write!(pts, " {r} {g} {b} {}", format_number(p.error));
        for (img, idx) in t {
            let _ = write!(pts, " {img} {idx}");
        }
        pts.push('\n');
    }
    Ok((cams, imgs, pts))
}

/// Writes `recon` as a COLMAP text model into `dir`, creating it if needed.
pub fn write_colmap_text(recon: &Reconstruction, dir: &Path) -> Result<(), ReconError> {
    let (cams, imgs, pts) = colmap_text(recon)?;
    fs::create_dir_all(dir).map_err(|e| ReconError::Io {
        path: dir.to_path_buf(),
        source: e,
    })?;
    atomic_write(&dir.join("cameras.txt"), cams.as_bytes())?;
    atomic_write(&dir.join("images.txt"), imgs.as_bytes())?;
    atomic_write(&dir.join("points3D.txt"), pts.as_bytes())?;
    Ok(())
}
