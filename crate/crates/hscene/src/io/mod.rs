//! Depth maps, masks, JSONL and TOML files.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use hscene_core::geometry::{DepthMap, Mask, Rle};

/// `sha256:<hex>` reference for a byte string.
pub fn content_ref(bytes: &[u8]) -> String {
    format!("sha256:{}", hex::encode(Sha256::digest(bytes)))
}

/// Sidecar for raw float32 depth (`<name>.json` next to `<name>.f32`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthSidecar {
    pub width: usize,
    pub height: usize,
    #[serde(default = "one")]
    pub scale: f32,
}

fn one() -> f32 {
    1.0
}

fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

/// Read a depth map in meters.
///
/// `.pgm` files are 8- or 16-bit single channel; values are multiplied by
/// `scale` (or the sidecar's, if one exists). Anything else is read as raw
/// little-endian float32 and requires a sidecar.
pub fn read_depth(path: &Path, scale: Option<f32>) -> Result<DepthMap> {
    let sidecar: Option<DepthSidecar> = match fs::read(sidecar_path(path)) {
        Ok(b) => Some(serde_json::from_slice(&b).context("depth sidecar")?),
        Err(_) => None,
    };
    let is_pgm = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("pgm"));
    let (map, file_scale) = if is_pgm {
        let img = image::open(path).with_context(|| format!("reading {}", path.display()))?;
        let gray = img.into_luma16();
        let (w, h) = gray.dimensions();
        let values: Vec<f32> = gray.into_raw().into_iter().map(f32::from).collect();
        (DepthMap::new(w as usize, h as usize, values)?, sidecar.map_or(1.0, |s| s.scale))
    } else {
        let Some(meta) = sidecar else {
            bail!("raw depth {} needs a sidecar {}", path.display(), sidecar_path(path).display());
        };
        let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        if bytes.len() != meta.width * meta.height * 4 {
            bail!(
                "raw depth has {} bytes, expected {}x{}x4",
                bytes.len(),
                meta.width,
                meta.height
            );
        }
        let values = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        (DepthMap::new(meta.width, meta.height, values)?, meta.scale)
    };
    Ok(map.scaled(scale.unwrap_or(file_scale))?)
}

/// Write raw float32 depth plus its sidecar.
pub fn write_raw_depth(path: &Path, d: &DepthMap, scale: f32) -> Result<()> {
    let mut bytes = Vec::with_capacity(d.values().len() * 4);
    for v in d.values() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, bytes)?;
    let meta = DepthSidecar {
        width: d.width(),
        height: d.height(),
        scale,
    };
    fs::write(sidecar_path(path), serde_json::to_vec(&meta)?)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledMask {
    pub label: String,
    pub mask: Rle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskFile {
    pub objects: Vec<LabeledMask>,
}

pub fn read_masks(path: &Path) -> Result<Vec<(String, Mask)>> {
    let file: MaskFile = read_json(path)?;
    file.objects
        .into_iter()
        .map(|o| {
            let m = Mask::from_rle(&o.mask).with_context(|| format!("mask for {}", o.label))?;
            Ok((o.label, m))
        })
        .collect()
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_slice(&bytes).with_context(|| format!("parsing {}", path.display()))
}

pub fn read_toml<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

/// One JSON value per non-blank line.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let f = File::open(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).with_context(|| format!("{}:{}", path.display(), i + 1))?);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(w: impl Write, items: &[T]) -> Result<()> {
    let mut w = BufWriter::new(w);
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn to_jsonl<T: Serialize>(items: &[T]) -> Result<String> {
    let mut buf = Vec::new();
    write_jsonl(&mut buf, items)?;
    Ok(String::from_utf8(buf)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn raw_depth_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.f32");
        let d = DepthMap::new(2, 2, vec![1.0, 2.0, 3.0, 4.5]).unwrap();
        write_raw_depth(&p, &d, 1.0).unwrap();
        assert_eq!(read_depth(&p, None).unwrap(), d);
        let halved = read_depth(&p, Some(0.5)).unwrap();
        assert_eq!(halved.get(1, 1), 2.25);
    }

    #[test]
    fn pgm16_depth() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.pgm");
        let img = image::ImageBuffer::<image::Luma<u16>, _>::from_raw(2, 1, vec![2000u16, 500]).unwrap();
        img.save(&p).unwrap();
        let d = read_depth(&p, Some(0.001)).unwrap();
        assert_eq!((d.width(), d.height()), (2, 1));
        assert!((d.get(0, 0) - 2.0).abs() < 1e-6);
        assert!((d.get(1, 0) - 0.5).abs() < 1e-6);
    }

    #[test]
    fn content_ref_is_sha256() {
        assert_eq!(
            content_ref(b"abc"),
            "sha256:ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn jsonl_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.jsonl");
        let items = vec![serde_json::json!({"a": 1}), serde_json::json!([2])];
        write_jsonl(File::create(&p).unwrap(), &items).unwrap();
        let back: Vec<serde_json::Value> = read_jsonl(&p).unwrap();
        assert_eq!(back, items);
    }
}
