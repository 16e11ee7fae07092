//! Binary PGM (P5, 8-bit) images and dataset directories.
//!
//! A dataset directory holds one `NNNNN.pgm` per image and a `manifest.csv`
//! with columns `filename,target_count,base_index,sibling_of` (empty cells for
//! missing provenance).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::{BinaryImage, GeometryDataset};
use crate::error::{Error, Result};

pub const MANIFEST: &str = "manifest.csv";
const MANIFEST_HEADER: &str = "filename,target_count,base_index,sibling_of";

/// Encode as P5 with maxval 255; pixel byte = round(255·value).
pub fn encode(img: &BinaryImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend(img.pixels().iter().map(|&p| (255.0 * p).round() as u8));
    out
}

pub fn decode(bytes: &[u8]) -> std::result::Result<BinaryImage, String> {
    let mut fields = Vec::with_capacity(4);
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if pos < bytes.len() && bytes[pos] == b'#' {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err("truncated header".into());
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|e| e.to_string())?);
    }
    if fields[0] != "P5" {
        return Err(format!("unsupported magic {:?}", fields[0]));
    }
    let parse = |s: &str| s.parse::<usize>().map_err(|e| format!("{s:?}: {e}"));
    let (width, height, maxval) = (parse(fields[1])?, parse(fields[2])?, parse(fields[3])?);
    if maxval == 0 || maxval > 255 {
        return Err(format!("unsupported maxval {maxval}"));
    }
    // exactly one whitespace byte after maxval
    let data = bytes.get(pos + 1..).ok_or("missing raster")?;
    if data.len() != width * height {
        return Err(format!("raster has {} bytes, expected {}", data.len(), width * height));
    }
    let pixels = data.iter().map(|&b| f64::from(b) / maxval as f64).collect();
    BinaryImage::new(width, height, pixels).map_err(|e| e.to_string())
}

pub fn write(path: &Path, img: &BinaryImage) -> Result<()> {
    fs::write(path, encode(img)).map_err(|e| Error::io(path, e))
}

pub fn read(path: &Path) -> Result<BinaryImage> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes).map_err(|reason| Error::Format { kind: "PGM", path: path.into(), reason })
}

pub fn image_filename(i: usize) -> String {
    format!("{i:05}.pgm")
}

/// Write every image plus the manifest; returns the paths written, manifest last.
pub fn save_dataset(dir: &Path, ds: &GeometryDataset) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::with_capacity(ds.len() + 1);
    let mut manifest = String::from(MANIFEST_HEADER);
    manifest.push('\n');
    for (i, img) in ds.images.iter().enumerate() {
        let name = image_filename(i);
        let path = dir.join(&name);
        write(&path, img)?;
        written.push(path);
        let base = ds.base_index.get(i).copied().flatten();
        let _ = writeln!(
            manifest,
            "{name},{},{},{}",
            ds.target_count,
            base.map(|b| b.to_string()).unwrap_or_default(),
            ds.sibling_of(i).map(|s| s.to_string()).unwrap_or_default(),
        );
    }
    let path = dir.join(MANIFEST);
    fs::write(&path, manifest).map_err(|e| Error::io(&path, e))?;
    written.push(path);
    Ok(written)
}

pub fn load_dataset(dir: &Path) -> Result<GeometryDataset> {
    let path = dir.join(MANIFEST);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let bad = |reason: String| Error::Format { kind: "manifest", path: path.clone(), reason };
    let mut lines = text.lines();
    if lines.next() != Some(MANIFEST_HEADER) {
        return Err(bad("unexpected header".into()));
    }
    let mut images = Vec::new();
    let mut base_index = Vec::new();
    let mut siblings = Vec::new();
    let mut target_count = None;
    for (n, line) in lines.enumerate() {
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != 4 {
            return Err(bad(format!("line {}: expected 4 columns", n + 2)));
        }
        let opt = |s: &str| -> Result<Option<usize>> {
            if s.is_empty() {
                Ok(None)
            } else {
                s.parse().map(Some).map_err(|e| bad(format!("line {}: {e}", n + 2)))
            }
        };
        let tc: usize = cols[1].parse().map_err(|e| bad(format!("line {}: {e}", n + 2)))?;
        if *target_count.get_or_insert(tc) != tc {
            return Err(bad("mixed target counts".into()));
        }
        images.push(read(&dir.join(cols[0]))?);
        base_index.push(opt(cols[2])?);
        if let Some(s) = opt(cols[3])? {
            if images.len() - 1 < s {
                siblings.push((images.len() - 1, s));
            }
        }
    }
    Ok(GeometryDataset {
        images,
        target_count: target_count.unwrap_or(0),
        sibling_pairs: siblings,
        base_index,
    })
}
