//! Deterministic procedural face corpus with exact ground-truth landmarks.
//!
//! Each subject gets one bona fide video (a textured skin ellipse with eyes,
//! brows, nose and mouth drawn at its landmark positions, jittered by up to
//! 2 px per frame over a static background with sensor noise) and one video
//! per attack kind. Print attacks are recaptures: half-resolution round trip
//! plus 0.8 contrast. Replay attacks add a horizontal moiré pattern on top.

mod template;

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::dataset::{frame_file_name, write_manifest, AttackKind, Label, Partition, SampleRecord};
use crate::error::{Error, Result};
use crate::imaging::{resize_bilinear, save_image, Image, Point, Polygon};
use crate::landmarks::{self, write_landmarks, FrameLandmarks, LandmarkSet};
use crate::scalar::Scalar;

use template::{BROW_LIFT, MEAN_SHAPE};

pub const DEFAULT_WIDTH: usize = 320;
pub const DEFAULT_HEIGHT: usize = 240;
/// Face height in pixels of the reference face.
pub const REFERENCE_FACE_SIZE: f64 = 150.0;
pub const MAX_JITTER: i32 = 2;
pub const PRINT_CONTRAST: f64 = 0.8;
pub const MOIRE_AMPLITUDE: f64 = 6.0;
pub const MOIRE_PERIOD: f64 = 64.0;
const SENSOR_NOISE: i32 = 2;
const LAYER_PAD: usize = MAX_JITTER as usize;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_subjects: u32,
    pub frames_per_video: u32,
    pub width: usize,
    pub height: usize,
    pub attack_kinds: Vec<AttackKind>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            seed: 7,
            n_subjects: 20,
            frames_per_video: 10,
            width: DEFAULT_WIDTH,
            height: DEFAULT_HEIGHT,
            attack_kinds: vec![AttackKind::Print, AttackKind::Replay],
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_subjects < 2 {
            return Err(Error::InvalidParameter("n_subjects must be >= 2".into()));
        }
        if self.frames_per_video < 2 {
            return Err(Error::InvalidParameter("frames_per_video must be >= 2".into()));
        }
        if self.width < 160 || self.height < 120 {
            return Err(Error::InvalidParameter(format!(
                "image size {}x{} below 160x120",
                self.width, self.height
            )));
        }
        Ok(())
    }
}

/// SplitMix64 finalizer; derives independent per-subject streams.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed
        ^ stream
            .wrapping_mul(0x9e37_79b9_7f4a_7c15)
            .wrapping_add(0x6a09_e667_f3bc_c909);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn shape_point(i: usize) -> (f64, f64) {
    let [x, y] = MEAN_SHAPE[i];
    (
        x,
        if landmarks::BROWS.contains(&i) {
            y - BROW_LIFT
        } else {
            y
        },
    )
}

fn place<T: Scalar>(scale: f64, aspect: f64, center: (f64, f64), wobble: &[(f64, f64)]) -> LandmarkSet<T> {
    let raw: Vec<(f64, f64)> = (0..landmarks::NUM_POINTS)
        .map(|i| {
            let (x, y) = shape_point(i);
            (x * scale + wobble[i].0, y * scale * aspect + wobble[i].1)
        })
        .collect();
    let (mut lo_x, mut lo_y, mut hi_x, mut hi_y) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for &(x, y) in &raw {
        lo_x = lo_x.min(x);
        lo_y = lo_y.min(y);
        hi_x = hi_x.max(x);
        hi_y = hi_y.max(y);
    }
    let (ox, oy) = (center.0 - (lo_x + hi_x) / 2.0, center.1 - (lo_y + hi_y) / 2.0);
    LandmarkSet::new(
        raw.into_iter()
            .map(|(x, y)| Point::new(T::lit(x + ox), T::lit(y + oy)))
            .collect(),
    )
    .expect("68 finite points")
}

/// The undistorted mean face, 150 px tall, centered in a 320x240 frame.
pub fn reference_landmarks<T: Scalar>() -> LandmarkSet<T> {
    let zero = [(0.0, 0.0); landmarks::NUM_POINTS];
    place(
        REFERENCE_FACE_SIZE,
        1.0,
        (DEFAULT_WIDTH as f64 / 2.0, DEFAULT_HEIGHT as f64 / 2.0),
        &zero,
    )
}

/// A randomly scaled, stretched, shifted and slightly deformed face for a
/// `width x height` frame.
pub fn random_face_landmarks<T: Scalar>(rng: &mut impl Rng, width: usize, height: usize) -> LandmarkSet<T> {
    let fit = (height as f64 / DEFAULT_HEIGHT as f64).min(width as f64 / DEFAULT_WIDTH as f64);
    let scale = REFERENCE_FACE_SIZE * fit * rng.gen_range(0.85..1.05);
    let aspect = rng.gen_range(0.95..1.05);
    let center = (
        width as f64 / 2.0 + rng.gen_range(-10.0..10.0) * fit,
        height as f64 / 2.0 + rng.gen_range(-8.0..8.0) * fit,
    );
    let wobble: Vec<(f64, f64)> = (0..landmarks::NUM_POINTS)
        .map(|_| (rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5)))
        .collect();
    place(scale, aspect, center, &wobble)
}

struct Appearance {
    skin: [f64; 3],
    lips: [f64; 3],
    iris: [f64; 3],
    brow: f64,
    bg: [f64; 3],
    bg_gradient: f64,
}

/// Static per-subject layers: background and face (with coverage mask) in a
/// frame padded by the maximum jitter.
struct SubjectScene {
    width: usize,
    height: usize,
    landmarks: LandmarkSet<f64>,
    background: Vec<[f64; 3]>,
    face: Vec<Option<[f64; 3]>>,
    jitter: Vec<(i32, i32)>,
    noise_seed: u64,
}

fn value_noise(rng: &mut impl Rng, w: usize, h: usize, cell: f64) -> Vec<f64> {
    let gw = (w as f64 / cell).ceil() as usize + 2;
    let gh = (h as f64 / cell).ceil() as usize + 2;
    let grid: Vec<f64> = (0..gw * gh).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let (fx, fy) = (x as f64 / cell, y as f64 / cell);
            let (ix, iy) = (fx as usize, fy as usize);
            let (tx, ty) = (fx - ix as f64, fy - iy as f64);
            let g = |i: usize, j: usize| grid[j * gw + i];
            out.push(
                (g(ix, iy) * (1.0 - tx) + g(ix + 1, iy) * tx) * (1.0 - ty)
                    + (g(ix, iy + 1) * (1.0 - tx) + g(ix + 1, iy + 1) * tx) * ty,
            );
        }
    }
    out
}

fn segment_distance(p: (f64, f64), a: Point<f64>, b: Point<f64>) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p.0 - a.x) * dx + (p.1 - a.y) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p.0 - a.x - t * dx).hypot(p.1 - a.y - t * dy)
}

impl SubjectScene {
    fn new(cfg: &SynthConfig, subject: u32) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, u64::from(subject)));
        let (w, h) = (cfg.width, cfg.height);
        let lms: LandmarkSet<f64> = random_face_landmarks(&mut rng, w, h);
        let tone = rng.gen_range(0.0..1.0);
        let lerp = |a: [f64; 3], b: [f64; 3], t: f64| [0, 1, 2].map(|i| a[i] + (b[i] - a[i]) * t);
        let app = Appearance {
            skin: lerp([228.0, 192.0, 168.0], [128.0, 92.0, 68.0], tone),
            lips: lerp([190.0, 100.0, 100.0], [120.0, 60.0, 60.0], tone),
            iris: [
                rng.gen_range(30.0..90.0),
                rng.gen_range(25.0..70.0),
                rng.gen_range(20.0..50.0),
            ],
            brow: rng.gen_range(0.35..0.55),
            bg: [0, 1, 2].map(|_| rng.gen_range(70.0..190.0)),
            bg_gradient: rng.gen_range(-25.0..25.0),
        };

        let (pw, ph) = (w + 2 * LAYER_PAD, h + 2 * LAYER_PAD);
        let bg_noise = value_noise(&mut rng, w, h, 8.0);
        let background = (0..w * h)
            .map(|i| {
                let x = (i % w) as f64 / w as f64 - 0.5;
                let v = app.bg_gradient * x + 8.0 * bg_noise[i];
                app.bg.map(|c| c + v)
            })
            .collect();

        // face layer lives in padded coordinates: layer (x, y) = frame (x - PAD, y - PAD)
        let pad = LAYER_PAD as f64;
        let lp = lms.translate(pad, pad);
        let bb = lp.bbox();
        let (cx, cy) = (bb.center().x, bb.center().y - 0.03 * bb.height());
        let (ax, ay) = (0.54 * bb.width(), 0.56 * bb.height());
        let coarse = value_noise(&mut rng, pw, ph, 3.0);
        let mut face: Vec<Option<[f64; 3]>> = vec![None; pw * ph];
        for y in 0..ph {
            for x in 0..pw {
                let (u, v) = ((x as f64 + 0.5 - cx) / ax, (y as f64 + 0.5 - cy) / ay);
                if u * u + v * v <= 1.0 {
                    let i = y * pw + x;
                    let shade = 1.0 - 0.08 * v.max(0.0) + 10.0 * coarse[i] / 255.0;
                    let fine = rng.gen_range(-6.0..6.0);
                    face[i] = Some(app.skin.map(|c| c * shade + fine));
                }
            }
        }
        let skin_at = |face: &[Option<[f64; 3]>], i: usize| face[i].unwrap_or(app.skin);
        let paint_poly =
            |face: &mut Vec<Option<[f64; 3]>>, idx: std::ops::Range<usize>, f: &dyn Fn([f64; 3]) -> [f64; 3]| {
                let poly = Polygon::new(lp.points()[idx].to_vec()).expect("feature polygon");
                poly.for_each_inside(pw, ph, |x, y| {
                    let i = y * pw + x;
                    face[i] = Some(f(skin_at(face, i)));
                });
            };
        paint_poly(&mut face, 48..60, &|_| app.lips);
        paint_poly(&mut face, 60..68, &|_| [70.0, 30.0, 30.0]);
        paint_poly(&mut face, landmarks::LEFT_EYE, &|_| [228.0, 226.0, 220.0]);
        paint_poly(&mut face, landmarks::RIGHT_EYE, &|_| [228.0, 226.0, 220.0]);
        for eye in [landmarks::LEFT_EYE, landmarks::RIGHT_EYE] {
            let c = lp.centroid(eye.clone());
            let r = 0.28 * lp.point(eye.start).distance(lp.point(eye.start + 3));
            let poly = Polygon::new(lp.points()[eye].to_vec()).expect("eye polygon");
            poly.for_each_inside(pw, ph, |x, y| {
                let d = (x as f64 + 0.5 - c.x).hypot(y as f64 + 0.5 - c.y);
                if d <= r {
                    face[y * pw + x] = Some(if d <= 0.45 * r { [15.0, 12.0, 10.0] } else { app.iris });
                }
            });
        }
        let stroke = |face: &mut Vec<Option<[f64; 3]>>, chain: &[usize], radius: f64, factor: f64| {
            for pair in chain.windows(2) {
                let (a, b) = (lp.point(pair[0]), lp.point(pair[1]));
                let x0 = (a.x.min(b.x) - radius).floor().max(0.0) as usize;
                let x1 = ((a.x.max(b.x) + radius).ceil() as usize).min(pw);
                let y0 = (a.y.min(b.y) - radius).floor().max(0.0) as usize;
                let y1 = ((a.y.max(b.y) + radius).ceil() as usize).min(ph);
                for y in y0..y1 {
                    for x in x0..x1 {
                        if segment_distance((x as f64 + 0.5, y as f64 + 0.5), a, b) <= radius {
                            let i = y * pw + x;
                            face[i] = Some(skin_at(face, i).map(|c| c * factor));
                        }
                    }
                }
            }
        };
        stroke(&mut face, &[17, 18, 19, 20, 21], 2.5, app.brow);
        stroke(&mut face, &[22, 23, 24, 25, 26], 2.5, app.brow);
        stroke(&mut face, &[27, 28, 29, 30], 1.5, 0.88);
        stroke(&mut face, &[31, 32, 33, 34, 35], 1.2, 0.6);

        let jitter = (0..cfg.frames_per_video)
            .map(|_| {
                (
                    rng.gen_range(-MAX_JITTER..=MAX_JITTER),
                    rng.gen_range(-MAX_JITTER..=MAX_JITTER),
                )
            })
            .collect();
        Self {
            width: w,
            height: h,
            landmarks: lms,
            background,
            face,
            jitter,
            noise_seed: rng.gen(),
        }
    }

    fn frame_landmarks(&self, frame: usize) -> LandmarkSet<f64> {
        let (dx, dy) = self.jitter[frame];
        self.landmarks.translate(f64::from(dx), f64::from(dy))
    }

    fn render(&self, frame: usize) -> Image {
        let (w, h) = (self.width, self.height);
        let pw = w + 2 * LAYER_PAD;
        let (dx, dy) = self.jitter[frame];
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.noise_seed, frame as u64));
        let mut data = Vec::with_capacity(w * h * 3);
        for y in 0..h {
            for x in 0..w {
                let lx = (x as i64 - i64::from(dx) + LAYER_PAD as i64) as usize;
                let ly = (y as i64 - i64::from(dy) + LAYER_PAD as i64) as usize;
                let c = self.face[ly * pw + lx].unwrap_or(self.background[y * w + x]);
                let n = f64::from(rng.gen_range(-SENSOR_NOISE..=SENSOR_NOISE));
                data.extend(c.map(|v| (v + n + 0.5).floor().clamp(0.0, 255.0) as u8));
            }
        }
        Image::rgb(w, h, data).expect("frame dims")
    }
}

/// Recapture model of a printed photo: half-resolution round trip, then
/// contrast scaled by 0.8 around mid-gray.
pub fn print_transform(img: &Image) -> Image {
    let (w, h) = img.dims();
    let small = resize_bilinear(img, (w / 2).max(1), (h / 2).max(1)).expect("positive dims");
    let back = resize_bilinear(&small, w, h).expect("positive dims");
    let data = back
        .data()
        .iter()
        .map(|&v| {
            (128.0 + PRINT_CONTRAST * (f64::from(v) - 128.0) + 0.5)
                .floor()
                .clamp(0.0, 255.0) as u8
        })
        .collect();
    Image::new(w, h, img.channels(), data).expect("same dims")
}

/// Print recapture plus a horizontal-stripe moiré of amplitude 6.
pub fn replay_transform(img: &Image) -> Image {
    let mut out = print_transform(img);
    let (w, c) = (out.width(), out.channels());
    for (i, v) in out.data_mut().iter_mut().enumerate() {
        let y = i / (w * c);
        let m = MOIRE_AMPLITUDE * (std::f64::consts::TAU * y as f64 / MOIRE_PERIOD).sin();
        *v = (f64::from(*v) + m + 0.5).floor().clamp(0.0, 255.0) as u8;
    }
    out
}

fn sample_id(subject: u32, kind: Option<AttackKind>) -> String {
    let suffix = match kind {
        None => "bonafide",
        Some(AttackKind::Print) => "print",
        Some(AttackKind::Replay) => "replay",
    };
    format!("s{subject:03}_{suffix}")
}

fn write_video(out: &Path, record: &SampleRecord, frames: &[Image], lms: &[FrameLandmarks<f64>]) -> Result<()> {
    let dir = out.join(&record.frames_dir);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    for (i, f) in frames.iter().enumerate() {
        save_image(f, dir.join(frame_file_name(i as u32)))?;
    }
    write_landmarks(lms, out.join(&record.landmarks_path))
}

/// Renders the corpus under `out` (frames, landmark files and `manifest.jsonl`,
/// partitions unassigned) and returns the records sorted by id.
pub fn generate_corpus(cfg: &SynthConfig, out: &Path) -> Result<Vec<SampleRecord>> {
    cfg.validate()?;
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let per_subject: Vec<Vec<SampleRecord>> = (0..cfg.n_subjects)
        .into_par_iter()
        .map(|subject| -> Result<Vec<SampleRecord>> {
            let scene = SubjectScene::new(cfg, subject);
            let n = cfg.frames_per_video as usize;
            let frames: Vec<Image> = (0..n).map(|f| scene.render(f)).collect();
            let lms: Vec<FrameLandmarks<f64>> = (0..n)
                .map(|f| FrameLandmarks {
                    frame: f as u32,
                    landmarks: scene.frame_landmarks(f),
                })
                .collect();
            let mut records = Vec::new();
            for kind in std::iter::once(None).chain(cfg.attack_kinds.iter().copied().map(Some)) {
                let id = sample_id(subject, kind);
                let record = SampleRecord {
                    frames_dir: format!("samples/{id}"),
                    landmarks_path: format!("samples/{id}/landmarks.jsonl"),
                    id,
                    label: if kind.is_some() { Label::Attack } else { Label::Bonafide },
                    attack_kind: kind,
                    partition: None,
                    subject,
                };
                let video: Vec<Image> = match kind {
                    None => frames.clone(),
                    Some(AttackKind::Print) => frames.iter().map(print_transform).collect(),
                    Some(AttackKind::Replay) => frames.iter().map(replay_transform).collect(),
                };
                write_video(out, &record, &video, &lms)?;
                records.push(record);
            }
            Ok(records)
        })
        .collect::<Result<_>>()?;
    let mut records: Vec<SampleRecord> = per_subject.into_iter().flatten().collect();
    records.sort_by(|a, b| a.id.cmp(&b.id));
    write_manifest(&records, &out.join("manifest.jsonl"))?;
    Ok(records)
}

/// Subject-disjoint train/dev/test split with the given ratios.
pub fn split_protocol(records: &[SampleRecord], ratios: (f64, f64, f64), seed: u64) -> Result<Vec<SampleRecord>> {
    let mut subjects: Vec<u32> = records.iter().map(|r| r.subject).collect();
    subjects.sort_unstable();
    subjects.dedup();
    let n = subjects.len();
    let total = ratios.0 + ratios.1 + ratios.2;
    if !(total > 0.0) {
        return Err(Error::InvalidParameter("split ratios must be positive".into()));
    }
    let n_train = (n as f64 * ratios.0 / total).round() as usize;
    let n_dev = (n as f64 * ratios.1 / total).round() as usize;
    if n_train == 0 || n_dev == 0 || n_train + n_dev >= n {
        return Err(Error::TooFew { needed: 3, found: n });
    }
    subjects.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(seed, u64::MAX)));
    let part_of = |s: u32| {
        let pos = subjects.iter().position(|&x| x == s).expect("known subject");
        if pos < n_train {
            Partition::Train
        } else if pos < n_train + n_dev {
            Partition::Dev
        } else {
            Partition::Test
        }
    };
    Ok(records
        .iter()
        .map(|r| SampleRecord {
            partition: Some(part_of(r.subject)),
            ..r.clone()
        })
        .collect())
}

/// Generates, splits 50/20/30 by subject and writes the final manifest.
pub fn synthesize(cfg: &SynthConfig, out: &Path) -> Result<Vec<SampleRecord>> {
    let records = generate_corpus(cfg, out)?;
    let split = split_protocol(&records, (0.5, 0.2, 0.3), cfg.seed)?;
    write_manifest(&split, &out.join("manifest.jsonl"))?;
    Ok(split)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::to_grayscale;

    fn gradient_mean(img: &Image) -> f64 {
        let g = to_grayscale(img);
        let (w, h) = g.dims();
        let mut acc = 0.0;
        for y in 1..h - 1 {
            for x in 1..w - 1 {
                let p = |dx: isize, dy: isize| f64::from(g.at((x as isize + dx) as usize, (y as isize + dy) as usize));
                let gx = p(1, -1) + 2.0 * p(1, 0) + p(1, 1) - p(-1, -1) - 2.0 * p(-1, 0) - p(-1, 1);
                let gy = p(-1, 1) + 2.0 * p(0, 1) + p(1, 1) - p(-1, -1) - 2.0 * p(0, -1) - p(1, -1);
                acc += gx.hypot(gy);
            }
        }
        acc / ((w - 2) * (h - 2)) as f64
    }

    fn small_cfg() -> SynthConfig {
        SynthConfig {
            n_subjects: 2,
            frames_per_video: 2,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn print_blurs_and_differs() {
        let scene = SubjectScene::new(&small_cfg(), 0);
        let frame = scene.render(0);
        let print = print_transform(&frame);
        let mse: f64 = frame
            .data()
            .iter()
            .zip(print.data())
            .map(|(&a, &b)| (f64::from(a) - f64::from(b)).powi(2))
            .sum::<f64>()
            / frame.data().len() as f64;
        assert!(mse > 0.0);
        assert!(gradient_mean(&print) < gradient_mean(&frame));
        assert!(gradient_mean(&replay_transform(&frame)) != gradient_mean(&print));
    }

    #[test]
    fn subnasale_between_eyes_and_mouth() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let l: LandmarkSet<f64> = random_face_landmarks(&mut rng, 320, 240);
            let eyes = l.centroid(36..48).y;
            let mouth = l.centroid(landmarks::MOUTH).y;
            let sn = l.point(landmarks::SUBNASALE).y;
            assert!(eyes < sn && sn < mouth);
            assert!(l.within_frame(320, 240));
        }
    }

    #[test]
    fn rendered_eyes_sit_on_their_landmarks() {
        let scene = SubjectScene::new(&small_cfg(), 1);
        let img = to_grayscale(&scene.render(1));
        let l = scene.frame_landmarks(1);
        for eye in [landmarks::LEFT_EYE, landmarks::RIGHT_EYE] {
            let c = l.centroid(eye);
            assert!(img.at(c.x as usize, c.y as usize) < 40, "pupil should be dark");
        }
    }

    fn records(n: u32) -> Vec<SampleRecord> {
        (0..n)
            .flat_map(|s| {
                [None, Some(AttackKind::Print)].into_iter().map(move |k| SampleRecord {
                    id: sample_id(s, k),
                    frames_dir: String::new(),
                    landmarks_path: String::new(),
                    label: if k.is_some() { Label::Attack } else { Label::Bonafide },
                    attack_kind: k,
                    partition: None,
                    subject: s,
                })
            })
            .collect()
    }

    #[test]
    fn split_counts_and_disjointness() {
        let split = split_protocol(&records(10), (0.5, 0.2, 0.3), 11).unwrap();
        let subjects = |p: Partition| {
            let mut v: Vec<u32> = split
                .iter()
                .filter(|r| r.partition == Some(p))
                .map(|r| r.subject)
                .collect();
            v.sort_unstable();
            v.dedup();
            v
        };
        let (tr, dv, te) = (
            subjects(Partition::Train),
            subjects(Partition::Dev),
            subjects(Partition::Test),
        );
        assert_eq!((tr.len(), dv.len(), te.len()), (5, 2, 3));
        assert!(tr.iter().all(|s| !dv.contains(s) && !te.contains(s)));
        assert!(dv.iter().all(|s| !te.contains(s)));
        assert_eq!(split, split_protocol(&records(10), (0.5, 0.2, 0.3), 11).unwrap());
        assert!(matches!(
            split_protocol(&records(2), (0.5, 0.2, 0.3), 1),
            Err(Error::TooFew { .. })
        ));
    }

    #[test]
    fn config_validation() {
        let mut c = small_cfg();
        c.n_subjects = 1;
        assert!(c.validate().is_err());
        let mut c = small_cfg();
        c.frames_per_video = 1;
        assert!(c.validate().is_err());
    }
}
