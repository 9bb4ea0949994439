//! Grayscale images, PGM decoding, manifest-driven dataset splits, and a
//! synthetic texture generator for desk-scale experiments.
//!
//! Datasets follow the Outex problem layout: a directory holding a
//! `train.txt` and a `test.txt` manifest, each line `relative-path label`,
//! `#` comment lines ignored, image paths resolved relative to the manifest
//! directory.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Seed used for the synthetic dataset shipped as the default desk-scale
/// benchmark. Regenerating with a different seed is fine as long as the
/// class-separation check in the test suite still passes.
pub const DEFAULT_SYNTHETIC_SEED: u64 = 1;

/// Default edge length of generated synthetic textures.
pub const SYNTHETIC_IMAGE_SIZE: usize = 64;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: malformed header: {reason}")]
    MalformedHeader { path: String, reason: String },
    #[error("{path}: unsupported pixel depth (maxval {maxval}); only 8-bit images are supported")]
    UnsupportedDepth { path: String, maxval: u32 },
    #[error("{path}: malformed payload: {reason}")]
    MalformedPayload { path: String, reason: String },
    #[error("{file}, line {line}: {reason}")]
    ManifestLine {
        file: String,
        line: usize,
        reason: String,
    },
    #[error("{file}: manifest lists no images")]
    EmptyManifest { file: String },
    #[error("labels are not contiguous: label {missing} never appears (max label {max})")]
    LabelGap { missing: usize, max: usize },
    #[error("image dimensions {width}x{height} do not match {len} pixels")]
    BadDimensions {
        width: usize,
        height: usize,
        len: usize,
    },
    #[error("synthetic generator: {0}")]
    InvalidParameter(String),
}

/// An 8-bit grayscale image, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self, DatasetError> {
        if width == 0 || height == 0 || pixels.len() != width * height {
            return Err(DatasetError::BadDimensions {
                width,
                height,
                len: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            pixels,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    pub fn row(&self, y: usize) -> &[u8] {
        &self.pixels[y * self.width..(y + 1) * self.width]
    }
}

/// A named train/test split with contiguous labels in `0..classes`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetSplit {
    pub name: String,
    pub classes: usize,
    pub train: Vec<(GrayImage, usize)>,
    pub test: Vec<(GrayImage, usize)>,
}

// ---------------------------------------------------------------------------
// PGM decode / encode
// ---------------------------------------------------------------------------

struct PgmCursor<'a> {
    data: &'a [u8],
    pos: usize,
    path: &'a str,
}

impl<'a> PgmCursor<'a> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.data.len() {
            let b = self.data[self.pos];
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if b == b'#' {
                while self.pos < self.data.len() && self.data[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else {
                break;
            }
        }
    }

    fn next_uint(&mut self, what: &str) -> Result<u32, DatasetError> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.data.len() && self.data[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(DatasetError::MalformedHeader {
                path: self.path.to_string(),
                reason: format!("expected {what}"),
            });
        }
        let text = std::str::from_utf8(&self.data[start..self.pos]).expect("ascii digits");
        text.parse().map_err(|_| DatasetError::MalformedHeader {
            path: self.path.to_string(),
            reason: format!("{what} out of range: {text}"),
        })
    }
}

/// Decodes an 8-bit PGM image, binary (`P5`) or ASCII (`P2`).
pub fn load_image(path: &Path) -> Result<GrayImage, DatasetError> {
    let data = fs::read(path).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })?;
    decode_pgm(&data, &path.display().to_string())
}

pub fn decode_pgm(data: &[u8], path: &str) -> Result<GrayImage, DatasetError> {
    if data.len() < 2 || data[0] != b'P' || (data[1] != b'2' && data[1] != b'5') {
        return Err(DatasetError::MalformedHeader {
            path: path.to_string(),
            reason: "missing P2/P5 magic".to_string(),
        });
    }
    let ascii = data[1] == b'2';
    let mut cur = PgmCursor {
        data,
        pos: 2,
        path,
    };
    let width = cur.next_uint("width")? as usize;
    let height = cur.next_uint("height")? as usize;
    let maxval = cur.next_uint("maxval")?;
    if maxval == 0 || width == 0 || height == 0 {
        return Err(DatasetError::MalformedHeader {
            path: path.to_string(),
            reason: format!("degenerate geometry {width}x{height} maxval {maxval}"),
        });
    }
    if maxval > 255 {
        return Err(DatasetError::UnsupportedDepth {
            path: path.to_string(),
            maxval,
        });
    }
    let count = width
        .checked_mul(height)
        .filter(|&c| c <= 1 << 30)
        .ok_or_else(|| DatasetError::MalformedHeader {
            path: path.to_string(),
            reason: format!("image too large: {width}x{height}"),
        })?;

    let pixels = if ascii {
        let mut pixels = Vec::with_capacity(count);
        for _ in 0..count {
            let v = cur.next_uint("pixel value").map_err(|_| {
                DatasetError::MalformedPayload {
                    path: path.to_string(),
                    reason: format!("expected {count} pixel values"),
                }
            })?;
            if v > maxval {
                return Err(DatasetError::MalformedPayload {
                    path: path.to_string(),
                    reason: format!("pixel value {v} exceeds maxval {maxval}"),
                });
            }
            pixels.push(v as u8);
        }
        pixels
    } else {
        // exactly one whitespace byte separates the maxval from the payload
        if cur.pos >= data.len() || !data[cur.pos].is_ascii_whitespace() {
            return Err(DatasetError::MalformedHeader {
                path: path.to_string(),
                reason: "missing whitespace after maxval".to_string(),
            });
        }
        let start = cur.pos + 1;
        if data.len() < start + count {
            return Err(DatasetError::MalformedPayload {
                path: path.to_string(),
                reason: format!(
                    "truncated pixel stream: expected {count} bytes, found {}",
                    data.len() - start
                ),
            });
        }
        data[start..start + count].to_vec()
    };

    GrayImage::new(width, height, pixels)
}

/// Encodes an image to canonical binary PGM (`P5`, maxval 255).
pub fn encode_pgm(image: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", image.width(), image.height()).into_bytes();
    out.extend_from_slice(image.pixels());
    out
}

pub fn save_image(path: &Path, image: &GrayImage) -> Result<(), DatasetError> {
    fs::write(path, encode_pgm(image)).map_err(|source| DatasetError::Io {
        path: path.display().to_string(),
        source,
    })
}

// ---------------------------------------------------------------------------
// Manifests
// ---------------------------------------------------------------------------

fn parse_manifest(dir: &Path, file_name: &str) -> Result<Vec<(String, usize)>, DatasetError> {
    let file = dir.join(file_name);
    let display = file.display().to_string();
    let text = fs::read_to_string(&file).map_err(|source| DatasetError::Io {
        path: display.clone(),
        source,
    })?;
    let mut entries = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (path_part, label_part) =
            line.rsplit_once(|c: char| c.is_whitespace())
                .ok_or_else(|| DatasetError::ManifestLine {
                    file: display.clone(),
                    line: idx + 1,
                    reason: "expected \"path label\"".to_string(),
                })?;
        let label: usize = label_part
            .parse()
            .map_err(|_| DatasetError::ManifestLine {
                file: display.clone(),
                line: idx + 1,
                reason: format!("invalid label {label_part:?}"),
            })?;
        entries.push((path_part.trim().to_string(), label));
    }
    if entries.is_empty() {
        return Err(DatasetError::EmptyManifest { file: display });
    }
    Ok(entries)
}

fn load_entries(
    dir: &Path,
    file_name: &str,
    entries: Vec<(String, usize)>,
) -> Result<Vec<(GrayImage, usize)>, DatasetError> {
    entries
        .into_iter()
        .enumerate()
        .map(|(idx, (rel, label))| {
            let image = load_image(&dir.join(&rel)).map_err(|e| DatasetError::ManifestLine {
                file: dir.join(file_name).display().to_string(),
                line: idx + 1,
                reason: e.to_string(),
            })?;
            Ok((image, label))
        })
        .collect()
}

/// Loads a split from a directory containing `train.txt` and `test.txt`.
///
/// The class count is `1 + max label`; every label in `0..classes` must
/// appear somewhere in the union of both manifests.
pub fn load_split(dir: &Path) -> Result<DatasetSplit, DatasetError> {
    let train_entries = parse_manifest(dir, "train.txt")?;
    let test_entries = parse_manifest(dir, "test.txt")?;

    let max = train_entries
        .iter()
        .chain(&test_entries)
        .map(|&(_, l)| l)
        .max()
        .expect("manifests are non-empty");
    let mut seen = vec![false; max + 1];
    for &(_, l) in train_entries.iter().chain(&test_entries) {
        seen[l] = true;
    }
    if let Some(missing) = seen.iter().position(|&s| !s) {
        return Err(DatasetError::LabelGap { missing, max });
    }

    let train = load_entries(dir, "train.txt", train_entries)?;
    let test = load_entries(dir, "test.txt", test_entries)?;
    let name = dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| dir.display().to_string());
    Ok(DatasetSplit {
        name,
        classes: max + 1,
        train,
        test,
    })
}

/// Writes a split to `dir` as PGM files plus `train.txt` / `test.txt`
/// manifests, in the exact layout [`load_split`] expects.
pub fn save_split(dir: &Path, split: &DatasetSplit) -> Result<(), DatasetError> {
    fs::create_dir_all(dir).map_err(|source| DatasetError::Io {
        path: dir.display().to_string(),
        source,
    })?;
    for (role, items) in [("train", &split.train), ("test", &split.test)] {
        let mut manifest = String::new();
        for (i, (image, label)) in items.iter().enumerate() {
            let file_name = format!("{role}_{i:04}.pgm");
            save_image(&dir.join(&file_name), image)?;
            writeln!(manifest, "{file_name} {label}").expect("string write");
        }
        let manifest_path = dir.join(format!("{role}.txt"));
        fs::write(&manifest_path, manifest).map_err(|source| DatasetError::Io {
            path: manifest_path.display().to_string(),
            source,
        })?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Synthetic textures
// ---------------------------------------------------------------------------

const TWO_PI: f64 = std::f64::consts::TAU;

fn clamp_u8(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

fn sinusoid(size: usize, rng: &mut ChaCha8Rng, phase_of: impl Fn(usize, usize) -> f64) -> GrayImage {
    let cycles = rng.gen_range(2.5..5.5);
    let phase = rng.gen_range(0.0..TWO_PI);
    let amplitude = rng.gen_range(45.0..75.0);
    let scale = TWO_PI * cycles / size as f64;
    let mut img = GrayImage::from_fn(size, size, |x, y| {
        clamp_u8(127.5 + amplitude * (scale * phase_of(x, y) + phase).sin())
    });
    add_noise(&mut img, rng);
    img
}

fn checkerboard(size: usize, rng: &mut ChaCha8Rng, cell_range: std::ops::RangeInclusive<usize>) -> GrayImage {
    let cell = rng.gen_range(cell_range);
    let off_x = rng.gen_range(0..cell);
    let off_y = rng.gen_range(0..cell);
    let hi = rng.gen_range(150.0..185.0);
    let lo = rng.gen_range(70.0..105.0);
    let mut img = GrayImage::from_fn(size, size, |x, y| {
        let parity = ((x + off_x) / cell + (y + off_y) / cell) % 2;
        clamp_u8(if parity == 0 { hi } else { lo })
    });
    add_noise(&mut img, rng);
    img
}

fn value_noise_blobs(
    size: usize,
    rng: &mut ChaCha8Rng,
    cell_range: std::ops::RangeInclusive<usize>,
) -> GrayImage {
    let cell = rng.gen_range(cell_range);
    let grid_w = size / cell + 2;
    let grid: Vec<f64> = (0..grid_w * grid_w).map(|_| rng.gen::<f64>()).collect();
    let hi = rng.gen_range(150.0..185.0);
    let lo = rng.gen_range(70.0..105.0);
    let smooth = |t: f64| t * t * (3.0 - 2.0 * t);
    let mut img = GrayImage::from_fn(size, size, |x, y| {
        let gx = x as f64 / cell as f64;
        let gy = y as f64 / cell as f64;
        let (ix, iy) = (gx.floor() as usize, gy.floor() as usize);
        let (fx, fy) = (smooth(gx.fract()), smooth(gy.fract()));
        let g = |i: usize, j: usize| grid[j * grid_w + i];
        let top = g(ix, iy) * (1.0 - fx) + g(ix + 1, iy) * fx;
        let bottom = g(ix, iy + 1) * (1.0 - fx) + g(ix + 1, iy + 1) * fx;
        let v = top * (1.0 - fy) + bottom * fy;
        clamp_u8(if v >= 0.5 { hi } else { lo })
    });
    add_noise(&mut img, rng);
    img
}

fn add_noise(img: &mut GrayImage, rng: &mut ChaCha8Rng) {
    for p in img.pixels.iter_mut() {
        let n = rng.gen_range(-35.0..35.0);
        *p = clamp_u8(*p as f64 + n);
    }
}

fn synth_texture(class: usize, size: usize, rng: &mut ChaCha8Rng) -> GrayImage {
    match class {
        0 => sinusoid(size, rng, |_, y| y as f64),
        1 => sinusoid(size, rng, |x, _| x as f64),
        2 => checkerboard(size, rng, 3..=6),
        3 => value_noise_blobs(size, rng, 8..=12),
        4 => sinusoid(size, rng, |x, y| (x + y) as f64),
        5 => sinusoid(size, rng, |x, y| x as f64 - y as f64),
        6 => checkerboard(size, rng, 2..=3),
        7 => value_noise_blobs(size, rng, 12..=16),
        _ => unreachable!("class count is validated"),
    }
}

/// Generates a deterministic synthetic split: one texture family per class
/// (gratings, checkerboards, blobs, and rotated/scaled variants) with
/// within-class jitter in phase, frequency, contrast, and additive noise.
/// Each class is split 50/50 into train and test.
pub fn generate_synthetic(
    classes: usize,
    per_class: usize,
    size: usize,
    seed: u64,
) -> Result<DatasetSplit, DatasetError> {
    if !(2..=8).contains(&classes) {
        return Err(DatasetError::InvalidParameter(format!(
            "classes must be in 2..=8, got {classes}"
        )));
    }
    if per_class < 2 {
        return Err(DatasetError::InvalidParameter(format!(
            "per_class must be at least 2, got {per_class}"
        )));
    }
    if size < 16 {
        return Err(DatasetError::InvalidParameter(format!(
            "size must be at least 16, got {size}"
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    let train_count = per_class - per_class / 2;
    for class in 0..classes {
        for i in 0..per_class {
            let image = synth_texture(class, size, &mut rng);
            if i < train_count {
                train.push((image, class));
            } else {
                test.push((image, class));
            }
        }
    }
    Ok(DatasetSplit {
        name: format!("synthetic-{classes}x{per_class}-seed{seed}"),
        classes,
        train,
        test,
    })
}
