//! File formats: grayscale and label images, the study manifest, feature
//! tables, standardized slices, probability maps and overlays. Every
//! derived artifact carries the hash of the configuration that produced it.

use std::fmt::Write as _;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use ndarray::Array2;

use crate::classifiers::codec::{Decoder, Encoder};
use crate::features::{FeatureMatrix, RowMeta};
use crate::imaging::{DoseGroup, Image, Label, LabeledSlice};
use crate::probmap::ProbabilityMap;
use crate::{Error, Result};

/// First line of every CSV artifact.
pub const HASH_PREFIX: &str = "# config_hash: ";
/// Counts per unit intensity when writing synthetic images as 16-bit PNG.
pub const PNG_COUNTS_PER_UNIT: f64 = 1000.0;

fn codec_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Codec {
        path: path.display().to_string(),
        reason: e.to_string(),
    }
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    Ok(BufWriter::new(
        fs::File::create(path).map_err(|e| Error::io(path, e))?,
    ))
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    use std::io::Write;
    let mut f = create(path)?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))?;
    f.flush().map_err(|e| Error::io(path, e))
}

/// Reads a grayscale PNG or PGM (8 or 16 bit) as raw counts.
pub fn read_gray(path: &Path) -> Result<Array2<f64>> {
    let img = image::open(path).map_err(|e| codec_err(path, e))?.into_luma16();
    let (w, h) = img.dimensions();
    let data: Vec<f64> = img.into_raw().into_iter().map(f64::from).collect();
    Array2::from_shape_vec((h as usize, w as usize), data).map_err(|e| codec_err(path, e))
}

/// Writes `round(v * counts_per_unit)` as a 16-bit grayscale PNG.
pub fn write_gray16(path: &Path, img: &Array2<f64>, counts_per_unit: f64) -> Result<()> {
    let (h, w) = img.dim();
    let px: Vec<u16> = img
        .iter()
        .map(|&v| (v * counts_per_unit).round().clamp(0.0, 65535.0) as u16)
        .collect();
    let buf = image::ImageBuffer::<image::Luma<u16>, _>::from_raw(w as u32, h as u32, px)
        .expect("buffer matches dimensions");
    buf.save(path).map_err(|e| codec_err(path, e))
}

/// Reads an 8-bit label image with values 0..=3.
pub fn read_labels(path: &Path) -> Result<Array2<Label>> {
    let img = image::open(path).map_err(|e| codec_err(path, e))?.into_luma8();
    let (w, h) = img.dimensions();
    let labels = img
        .into_raw()
        .into_iter()
        .map(|v| {
            Label::from_u8(v).ok_or_else(|| Error::format(path, format!("label value {v} not in 0..=3")))
        })
        .collect::<Result<Vec<_>>>()?;
    Array2::from_shape_vec((h as usize, w as usize), labels).map_err(|e| codec_err(path, e))
}

pub fn write_labels(path: &Path, labels: &Array2<Label>) -> Result<()> {
    let (h, w) = labels.dim();
    let px: Vec<u8> = labels.iter().map(|&l| l as u8).collect();
    let buf = image::GrayImage::from_raw(w as u32, h as u32, px).expect("buffer matches dimensions");
    buf.save(path).map_err(|e| codec_err(path, e))
}

fn write_png_8bit(
    path: &Path,
    (h, w): (usize, usize),
    color: png::ColorType,
    data: &[u8],
    config_hash: &str,
) -> Result<()> {
    let file = create(path)?;
    let mut enc = png::Encoder::new(file, w as u32, h as u32);
    enc.set_color(color);
    enc.set_depth(png::BitDepth::Eight);
    enc.add_text_chunk("config_hash".into(), config_hash.into())
        .map_err(|e| codec_err(path, e))?;
    let mut writer = enc.write_header().map_err(|e| codec_err(path, e))?;
    writer.write_image_data(data).map_err(|e| codec_err(path, e))?;
    writer.finish().map_err(|e| codec_err(path, e))
}

/// Binary mask as 8-bit grayscale (0 / 255) with the config hash in a text
/// chunk.
pub fn write_mask(path: &Path, mask: &Array2<bool>, config_hash: &str) -> Result<()> {
    let data: Vec<u8> = mask.iter().map(|&m| if m { 255 } else { 0 }).collect();
    write_png_8bit(path, mask.dim(), png::ColorType::Grayscale, &data, config_hash)
}

/// RGB image with the config hash in a text chunk.
pub fn write_rgb(path: &Path, rgb: &Array2<[u8; 3]>, config_hash: &str) -> Result<()> {
    let data: Vec<u8> = rgb.iter().flatten().copied().collect();
    write_png_8bit(path, rgb.dim(), png::ColorType::Rgb, &data, config_hash)
}

/// Decodes an 8-bit RGB PNG and returns its pixels and `config_hash` text.
pub fn read_rgb(path: &Path) -> Result<(Array2<[u8; 3]>, Option<String>)> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let dec = png::Decoder::new(std::io::BufReader::new(file));
    let mut reader = dec.read_info().map_err(|e| codec_err(path, e))?;
    let mut buf = vec![0; reader.output_buffer_size().unwrap_or(0)];
    let info = reader.next_frame(&mut buf).map_err(|e| codec_err(path, e))?;
    if info.color_type != png::ColorType::Rgb || info.bit_depth != png::BitDepth::Eight {
        return Err(Error::format(path, "expected 8-bit RGB"));
    }
    let (w, h) = (info.width as usize, info.height as usize);
    let px: Vec<[u8; 3]> = buf[..w * h * 3]
        .chunks_exact(3)
        .map(|c| [c[0], c[1], c[2]])
        .collect();
    let hash = reader
        .info()
        .uncompressed_latin1_text
        .iter()
        .find(|t| t.keyword == "config_hash")
        .map(|t| t.text.clone());
    let arr = Array2::from_shape_vec((h, w), px).map_err(|e| codec_err(path, e))?;
    Ok((arr, hash))
}

/// One row of the study manifest.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub slice_id: String,
    pub patient_id: String,
    pub dose_group: DoseGroup,
    /// Relative to the manifest's directory.
    pub image: PathBuf,
    pub labels: PathBuf,
    pub pixel_pitch_mm: f64,
}

const MANIFEST_HEADER: [&str; 6] = [
    "slice_id",
    "patient_id",
    "dose_group",
    "image",
    "labels",
    "pixel_pitch_mm",
];

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::format(path, e.to_string()))?;
    let header = rdr
        .headers()
        .map_err(|e| Error::format(path, e.to_string()))?
        .clone();
    if header.iter().collect::<Vec<_>>() != MANIFEST_HEADER {
        return Err(Error::format(
            path,
            format!("manifest header must be {}", MANIFEST_HEADER.join(",")),
        ));
    }
    let mut out: Vec<ManifestEntry> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::format(path, e.to_string()))?;
        let bad = |what: &str| Error::format(path, format!("row {}: bad {what}", i + 1));
        let dose: u8 = rec[2].parse().map_err(|_| bad("dose_group"))?;
        let entry = ManifestEntry {
            slice_id: rec[0].to_string(),
            patient_id: rec[1].to_string(),
            dose_group: DoseGroup::from_index(dose).ok_or_else(|| bad("dose_group"))?,
            image: PathBuf::from(&rec[3]),
            labels: PathBuf::from(&rec[4]),
            pixel_pitch_mm: rec[5].parse().map_err(|_| bad("pixel_pitch_mm"))?,
        };
        if entry.slice_id.is_empty() || out.iter().any(|e| e.slice_id == entry.slice_id) {
            return Err(bad("slice_id (empty or duplicate)"));
        }
        out.push(entry);
    }
    if out.is_empty() {
        return Err(Error::format(path, "manifest lists no slices"));
    }
    Ok(out)
}

pub fn write_manifest(path: &Path, entries: &[ManifestEntry]) -> Result<()> {
    let mut s = MANIFEST_HEADER.join(",");
    s.push('\n');
    for e in entries {
        writeln!(
            s,
            "{},{},{},{},{},{}",
            e.slice_id,
            e.patient_id,
            e.dose_group.index(),
            e.image.display(),
            e.labels.display(),
            e.pixel_pitch_mm
        )
        .unwrap();
    }
    write_file(path, s.as_bytes())
}

/// Loads every slice listed in a manifest.
pub fn load_study(manifest: &Path) -> Result<Vec<LabeledSlice<f64>>> {
    let dir = manifest.parent().unwrap_or(Path::new("."));
    read_manifest(manifest)?
        .into_iter()
        .map(|e| {
            let img = read_gray(&dir.join(&e.image))?;
            let labels = read_labels(&dir.join(&e.labels))?;
            LabeledSlice::new(
                Image::new(img, e.pixel_pitch_mm)?,
                labels,
                e.slice_id,
                e.patient_id,
                e.dose_group,
            )
        })
        .collect()
}

/// Writes slices as `images/<id>.png` (16-bit) and `labels/<id>.png` plus
/// `manifest.csv` in `dir`; returns the manifest path.
pub fn write_study(dir: &Path, slices: &[LabeledSlice<f64>]) -> Result<PathBuf> {
    for sub in ["images", "labels"] {
        let d = dir.join(sub);
        fs::create_dir_all(&d).map_err(|e| Error::io(&d, e))?;
    }
    let mut entries = Vec::with_capacity(slices.len());
    for s in slices {
        let image = PathBuf::from(format!("images/{}.png", s.slice_id));
        let labels = PathBuf::from(format!("labels/{}.png", s.slice_id));
        write_gray16(&dir.join(&image), &s.image.values().to_owned(), PNG_COUNTS_PER_UNIT)?;
        write_labels(&dir.join(&labels), &s.labels)?;
        entries.push(ManifestEntry {
            slice_id: s.slice_id.clone(),
            patient_id: s.patient_id.clone(),
            dose_group: s.dose_group,
            image,
            labels,
            pixel_pitch_mm: s.image.pixel_pitch(),
        });
    }
    let manifest = dir.join("manifest.csv");
    write_manifest(&manifest, &entries)?;
    Ok(manifest)
}

/// Writes `body` after a config-hash comment line.
pub fn write_stamped(path: &Path, config_hash: &str, body: &str) -> Result<()> {
    let mut s = String::with_capacity(body.len() + 80);
    s.push_str(HASH_PREFIX);
    s.push_str(config_hash);
    s.push('\n');
    s.push_str(body);
    write_file(path, s.as_bytes())
}

/// Reads a stamped text artifact, checking its hash against `expected`.
/// Returns the body after the stamp line.
pub fn read_stamped(path: &Path, expected: &str) -> Result<String> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let (first, body) = text.split_once('\n').unwrap_or((text.as_str(), ""));
    let found = first
        .strip_prefix(HASH_PREFIX)
        .ok_or_else(|| Error::format(path, "missing config hash line"))?
        .trim();
    check_hash(path, found, expected)?;
    Ok(body.to_string())
}

pub fn check_hash(path: &Path, found: &str, expected: &str) -> Result<()> {
    if found != expected {
        return Err(Error::ConfigHashMismatch {
            path: path.display().to_string(),
            found: found.to_string(),
            expected: expected.to_string(),
        });
    }
    Ok(())
}

const META_COLUMNS: [&str; 8] = [
    "slice_id",
    "patient_id",
    "dose_group",
    "patch_id",
    "center_row",
    "center_col",
    "size_mm",
    "label",
];

/// Feature table: metadata columns then one column per feature. Values use
/// the shortest representation that round-trips exactly.
pub fn write_features(path: &Path, m: &FeatureMatrix, config_hash: &str) -> Result<()> {
    let mut s = String::new();
    s.push_str(&META_COLUMNS.join(","));
    for n in &m.names {
        s.push(',');
        s.push_str(n);
    }
    s.push('\n');
    for (i, meta) in m.meta.iter().enumerate() {
        write!(
            s,
            "{},{},{},{},{},{},{},{}",
            meta.slice_id,
            meta.patient_id,
            meta.dose_group,
            meta.patch_id,
            meta.center_row,
            meta.center_col,
            meta.size_mm,
            m.labels[i]
        )
        .unwrap();
        for v in m.data.row(i) {
            write!(s, ",{v:?}").unwrap();
        }
        s.push('\n');
    }
    write_stamped(path, config_hash, &s)
}

pub fn read_features(path: &Path, config_hash: &str) -> Result<FeatureMatrix> {
    let body = read_stamped(path, config_hash)?;
    let mut rdr = csv::ReaderBuilder::new().from_reader(body.as_bytes());
    let header = rdr
        .headers()
        .map_err(|e| Error::format(path, e.to_string()))?
        .clone();
    if header.len() < META_COLUMNS.len() || header.iter().take(8).ne(META_COLUMNS) {
        return Err(Error::format(path, "unexpected feature table header"));
    }
    let names: Vec<String> = header.iter().skip(8).map(String::from).collect();
    let d = names.len();
    let mut data = Vec::new();
    let mut labels = Vec::new();
    let mut meta = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::format(path, e.to_string()))?;
        let bad = |what: &str| Error::format(path, format!("row {}: bad {what}", i + 1));
        if rec.len() != 8 + d {
            return Err(bad("column count"));
        }
        meta.push(RowMeta {
            slice_id: rec[0].to_string(),
            patient_id: rec[1].to_string(),
            dose_group: rec[2].parse().map_err(|_| bad("dose_group"))?,
            patch_id: rec[3].parse().map_err(|_| bad("patch_id"))?,
            center_row: rec[4].parse().map_err(|_| bad("center_row"))?,
            center_col: rec[5].parse().map_err(|_| bad("center_col"))?,
            size_mm: rec[6].parse().map_err(|_| bad("size_mm"))?,
        });
        labels.push(rec[7].parse().map_err(|_| bad("label"))?);
        for v in rec.iter().skip(8) {
            data.push(v.parse::<f64>().map_err(|_| bad("feature value"))?);
        }
    }
    let n = labels.len();
    let data = Array2::from_shape_vec((n, d), data).map_err(|e| Error::format(path, e.to_string()))?;
    FeatureMatrix::new(names, data, labels, meta).map_err(|e| Error::format(path, e.to_string()))
}

const OPSI_MAGIC: &[u8; 4] = b"OPSI";

/// Standardized slice: magic `OPSI`, u16 version, ids, dose group, pitch,
/// f64 pixels and u8 labels row-major, config hash, trailing CRC-32.
pub fn write_slice(path: &Path, s: &LabeledSlice<f64>, config_hash: &str) -> Result<()> {
    let mut e = Encoder::default();
    e.buf.extend_from_slice(OPSI_MAGIC);
    e.u16(1);
    e.bytes(s.slice_id.as_bytes());
    e.bytes(s.patient_id.as_bytes());
    e.u8(s.dose_group.index());
    e.f64(s.image.pixel_pitch());
    e.matrix(&s.image.values().to_owned());
    e.bytes(&s.labels.iter().map(|&l| l as u8).collect::<Vec<_>>());
    e.bytes(config_hash.as_bytes());
    let crc = crc32fast::hash(&e.buf);
    e.buf.extend_from_slice(&crc.to_le_bytes());
    write_file(path, &e.buf)
}

pub fn read_slice(path: &Path, config_hash: &str) -> Result<LabeledSlice<f64>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() < 10 || &bytes[..4] != OPSI_MAGIC {
        return Err(Error::format(path, "not a standardized slice file"));
    }
    let (body, crc) = bytes.split_at(bytes.len() - 4);
    if crc32fast::hash(body) != u32::from_le_bytes(crc.try_into().unwrap()) {
        return Err(Error::format(path, "checksum mismatch"));
    }
    let mut d = Decoder::new(&body[4..], path.display().to_string());
    if d.u16()? != 1 {
        return Err(d.bad("unsupported version"));
    }
    let utf8 = |b: Vec<u8>| String::from_utf8(b).map_err(|_| Error::format(path, "bad UTF-8"));
    let slice_id = utf8(d.bytes()?)?;
    let patient_id = utf8(d.bytes()?)?;
    let dose = DoseGroup::from_index(d.u8()?).ok_or_else(|| d.bad("dose group"))?;
    let pitch = d.f64()?;
    let img = d.matrix()?;
    let labels = d
        .bytes()?
        .into_iter()
        .map(|v| Label::from_u8(v).ok_or_else(|| Error::format(path, "label value")))
        .collect::<Result<Vec<_>>>()?;
    let hash = utf8(d.bytes()?)?;
    check_hash(path, &hash, config_hash)?;
    let labels = Array2::from_shape_vec(img.dim(), labels).map_err(|e| Error::format(path, e.to_string()))?;
    LabeledSlice::new(Image::new(img, pitch)?, labels, slice_id, patient_id, dose)
}

const OPMP_MAGIC: &[u8; 4] = b"OPMP";

/// Probability map: 16-byte header (magic `OPMP`, u32 width, u32 height,
/// 4 reserved bytes), f32 values row-major with NaN off tissue, then the
/// config hash as u32 length plus bytes.
pub fn write_probmap(path: &Path, map: &ProbabilityMap<f64>, config_hash: &str) -> Result<()> {
    let (h, w) = map.values.dim();
    let mut e = Encoder::default();
    e.buf.extend_from_slice(OPMP_MAGIC);
    e.u32(w);
    e.u32(h);
    e.buf.extend_from_slice(&[0; 4]);
    for &v in &map.values {
        e.buf.extend_from_slice(&(v as f32).to_le_bytes());
    }
    e.bytes(config_hash.as_bytes());
    write_file(path, &e.buf)
}

/// Returns the map values (NaN off tissue) and the stored config hash.
pub fn read_probmap(path: &Path) -> Result<(Array2<f32>, String)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() < 16 || &bytes[..4] != OPMP_MAGIC {
        return Err(Error::format(path, "not a probability map"));
    }
    let mut d = Decoder::new(&bytes[4..], path.display().to_string());
    let (w, h) = (d.u32()?, d.u32()?);
    d.u32()?;
    if d.buf.len() < w * h * 4 {
        return Err(d.bad("truncated data"));
    }
    let (px, rest) = d.buf.split_at(w * h * 4);
    let values: Vec<f32> = px
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    d.buf = rest;
    let hash = String::from_utf8(d.bytes()?).map_err(|_| d.bad("bad UTF-8"))?;
    let arr = Array2::from_shape_vec((h, w), values).map_err(|e| Error::format(path, e.to_string()))?;
    Ok((arr, hash))
}
