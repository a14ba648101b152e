//! `CMTX` tensor containers and image ingestion.
//!
//! Layout: the 4 magic bytes `CMTX`, a little-endian `u32` header length, a
//! compact UTF-8 JSON header `{"dtype":..,"shape":[..],"order":"C","endian":"LE"}`
//! with keys in exactly that order, then the raw row-major little-endian
//! payload. Writing is canonical: equal tensors always produce equal bytes.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"CMTX";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DType {
    #[serde(rename = "f32")]
    F32,
    #[serde(rename = "u8")]
    U8,
}

impl DType {
    pub fn size(self) -> usize {
        match self {
            DType::F32 => 4,
            DType::U8 => 1,
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    dtype: DType,
    shape: Vec<u64>,
    order: String,
    endian: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TensorContainer {
    dtype: DType,
    shape: Vec<usize>,
    payload: Vec<u8>,
}

impl TensorContainer {
    pub fn new(dtype: DType, shape: Vec<usize>, payload: Vec<u8>) -> Result<Self> {
        if shape.is_empty() || shape.iter().any(|&d| d == 0) {
            return Err(Error::HeaderParse(format!(
                "shape entries must be positive and non-empty, got {shape:?}"
            )));
        }
        let expected = shape
            .iter()
            .try_fold(dtype.size(), |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::HeaderParse(format!("shape {shape:?} overflows")))?;
        if payload.len() != expected {
            return Err(Error::LengthMismatch {
                expected,
                actual: payload.len(),
            });
        }
        Ok(Self {
            dtype,
            shape,
            payload,
        })
    }

    pub fn from_f32(shape: Vec<usize>, data: &[f32]) -> Result<Self> {
        let payload = data.iter().flat_map(|v| v.to_le_bytes()).collect();
        Self::new(DType::F32, shape, payload)
    }

    /// Narrows to `f32` on the way in.
    pub fn from_f64(shape: Vec<usize>, data: &[f64]) -> Result<Self> {
        let payload = data
            .iter()
            .flat_map(|&v| (v as f32).to_le_bytes())
            .collect();
        Self::new(DType::F32, shape, payload)
    }

    pub fn from_u8(shape: Vec<usize>, data: Vec<u8>) -> Result<Self> {
        Self::new(DType::U8, shape, data)
    }

    pub fn dtype(&self) -> DType {
        self.dtype
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn payload(&self) -> &[u8] {
        &self.payload
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Element values widened to `f64`. `u8` elements keep their integer value.
    pub fn to_f64_vec(&self) -> Vec<f64> {
        match self.dtype {
            DType::F32 => self
                .payload
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64)
                .collect(),
            DType::U8 => self.payload.iter().map(|&b| b as f64).collect(),
        }
    }

    pub fn expect_rank(&self, rank: usize, what: &str) -> Result<()> {
        if self.shape.len() != rank {
            return Err(Error::DimensionMismatch(format!(
                "{what} must have rank {rank}, got shape {:?}",
                self.shape
            )));
        }
        Ok(())
    }
}

pub fn read_container(bytes: &[u8]) -> Result<TensorContainer> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(Error::BadMagic {
            found: bytes.iter().take(4).copied().collect(),
        });
    }
    if bytes.len() < 8 {
        return Err(Error::HeaderParse("truncated header length".into()));
    }
    let header_len = u32::from_le_bytes([bytes[4], bytes[5], bytes[6], bytes[7]]) as usize;
    let header_end = 8usize
        .checked_add(header_len)
        .filter(|&end| end <= bytes.len())
        .ok_or_else(|| Error::HeaderParse("header runs past end of input".into()))?;
    let header: Header = serde_json::from_slice(&bytes[8..header_end])
        .map_err(|e| Error::HeaderParse(e.to_string()))?;
    if header.order != "C" {
        return Err(Error::HeaderParse(format!(
            "unsupported order {:?}",
            header.order
        )));
    }
    if header.endian != "LE" {
        return Err(Error::HeaderParse(format!(
            "unsupported endian {:?}",
            header.endian
        )));
    }
    let shape = header
        .shape
        .iter()
        .map(|&d| usize::try_from(d).map_err(|_| Error::HeaderParse(format!("dim {d} too large"))))
        .collect::<Result<Vec<_>>>()?;
    TensorContainer::new(header.dtype, shape, bytes[header_end..].to_vec())
}

pub fn write_container(tensor: &TensorContainer) -> Vec<u8> {
    let header = Header {
        dtype: tensor.dtype,
        shape: tensor.shape.iter().map(|&d| d as u64).collect(),
        order: "C".into(),
        endian: "LE".into(),
    };
    let json = serde_json::to_vec(&header).expect("header serializes");
    let mut out = Vec::with_capacity(8 + json.len() + tensor.payload.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    out.extend_from_slice(&tensor.payload);
    out
}

pub fn read_container_file(path: &Path) -> Result<TensorContainer> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    read_container(&bytes)
}

/// A batch of `m` images, `m × C × H × W`, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct InputBatch {
    len: usize,
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl InputBatch {
    pub fn new(
        len: usize,
        channels: usize,
        height: usize,
        width: usize,
        data: Vec<f64>,
    ) -> Result<Self> {
        if len == 0 || channels == 0 || height == 0 || width == 0 {
            return Err(Error::DimensionMismatch(format!(
                "input batch dims must be positive, got {len}x{channels}x{height}x{width}"
            )));
        }
        if data.len() != len * channels * height * width {
            return Err(Error::DimensionMismatch(format!(
                "input batch {len}x{channels}x{height}x{width} needs {} values, got {}",
                len * channels * height * width,
                data.len()
            )));
        }
        Ok(Self {
            len,
            channels,
            height,
            width,
            data,
        })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn image_len(&self) -> usize {
        self.channels * self.height * self.width
    }

    pub fn image(&self, i: usize) -> &[f64] {
        let len = self.image_len();
        &self.data[i * len..(i + 1) * len]
    }

    /// Sub-batch of the contiguous range `start..start + len`.
    pub fn slice(&self, start: usize, len: usize) -> Result<Self> {
        let size = self.image_len();
        Self::new(
            len,
            self.channels,
            self.height,
            self.width,
            self.data[start * size..(start + len) * size].to_vec(),
        )
    }

    pub fn from_container(tensor: &TensorContainer) -> Result<Self> {
        tensor.expect_rank(4, "input batch")?;
        let s = tensor.shape();
        let mut data = tensor.to_f64_vec();
        if tensor.dtype() == DType::U8 {
            data.iter_mut().for_each(|v| *v /= 255.0);
        }
        Self::new(s[0], s[1], s[2], s[3], data)
    }

    pub fn to_container(&self) -> TensorContainer {
        TensorContainer::from_f64(
            vec![self.len, self.channels, self.height, self.width],
            &self.data,
        )
        .expect("batch shape is valid")
    }
}

/// One-hot target labels, `m × K`.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelMatrix {
    rows: usize,
    classes: usize,
    class_of: Vec<usize>,
}

impl LabelMatrix {
    pub fn from_classes(class_of: Vec<usize>, classes: usize) -> Result<Self> {
        if class_of.is_empty() || classes == 0 {
            return Err(Error::InvalidLabels("empty label matrix".into()));
        }
        if let Some(&bad) = class_of.iter().find(|&&c| c >= classes) {
            return Err(Error::InvalidLabels(format!(
                "class {bad} out of range for {classes} classes"
            )));
        }
        Ok(Self {
            rows: class_of.len(),
            classes,
            class_of,
        })
    }

    /// Every input its own class.
    pub fn identity(rows: usize) -> Self {
        Self::from_classes((0..rows).collect(), rows).expect("identity labels are valid")
    }

    pub fn from_one_hot(rows: usize, classes: usize, values: &[f64]) -> Result<Self> {
        if values.len() != rows * classes {
            return Err(Error::DimensionMismatch(format!(
                "label matrix {rows}x{classes} needs {} values, got {}",
                rows * classes,
                values.len()
            )));
        }
        let mut class_of = Vec::with_capacity(rows);
        for (r, row) in values.chunks_exact(classes).enumerate() {
            let ones: Vec<usize> = row
                .iter()
                .enumerate()
                .filter(|(_, &v)| v == 1.0)
                .map(|(c, _)| c)
                .collect();
            let zeros = row.iter().filter(|&&v| v == 0.0).count();
            if ones.len() != 1 || zeros != classes - 1 {
                return Err(Error::InvalidLabels(format!("row {r} is not one-hot")));
            }
            class_of.push(ones[0]);
        }
        Self::from_classes(class_of, classes)
    }

    pub fn from_container(tensor: &TensorContainer) -> Result<Self> {
        tensor.expect_rank(2, "label matrix")?;
        Self::from_one_hot(tensor.shape()[0], tensor.shape()[1], &tensor.to_f64_vec())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn class_of(&self, row: usize) -> usize {
        self.class_of[row]
    }

    pub fn slice(&self, start: usize, len: usize) -> Result<Self> {
        Self::from_classes(self.class_of[start..start + len].to_vec(), self.classes)
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.rows * self.classes];
        for (r, &c) in self.class_of.iter().enumerate() {
            out[r * self.classes + c] = 1.0;
        }
        out
    }
}

/// Loads every `*.png` in `dir`, sorted by file name, scaled to `[0, 1]`.
///
/// Batches are single-channel when every file is grayscale and RGB otherwise;
/// alpha is dropped.
pub fn load_image_batch(dir: &Path) -> Result<InputBatch> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let is_png = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("png"));
        if is_png && path.is_file() {
            paths.push(path);
        }
    }
    if paths.is_empty() {
        return Err(Error::EmptyDirectory(dir.to_path_buf()));
    }
    paths.sort_by(|a, b| a.file_name().cmp(&b.file_name()));

    let mut images = Vec::with_capacity(paths.len());
    for path in &paths {
        let img = image::open(path).map_err(|e| Error::DecodeError {
            path: path.clone(),
            message: e.to_string(),
        })?;
        images.push(img);
    }
    let expected = (images[0].width(), images[0].height());
    for (path, img) in paths.iter().zip(&images) {
        let found = (img.width(), img.height());
        if found != expected {
            return Err(Error::MixedDimensions {
                path: path.clone(),
                expected,
                found,
            });
        }
    }

    let gray = images.iter().all(|img| !img.color().has_color());
    let channels = if gray { 1 } else { 3 };
    let (width, height) = (expected.0 as usize, expected.1 as usize);
    let mut data = Vec::with_capacity(images.len() * channels * height * width);
    for img in images {
        if gray {
            let buf = img.to_luma32f();
            data.extend(buf.pixels().map(|p| p.0[0] as f64));
        } else {
            let buf = img.into_rgb32f();
            for c in 0..3 {
                data.extend(buf.pixels().map(|p| p.0[c] as f64));
            }
        }
    }
    let len = paths.len();
    InputBatch::new(len, channels, height, width, data)
}

/// Encodes one `C × H × W` image (values in `[0, 1]`) as an 8-bit PNG.
/// One channel maps to grayscale, three to RGB; otherwise the first channel is used.
pub fn encode_png(image: &[f64], channels: usize, height: usize, width: usize) -> Result<Vec<u8>> {
    let to_u8 = |v: f64| (v.clamp(0.0, 1.0) * 255.0).round() as u8;
    let plane = height * width;
    let dynamic = if channels == 3 {
        let mut buf = Vec::with_capacity(plane * 3);
        for p in 0..plane {
            for c in 0..3 {
                buf.push(to_u8(image[c * plane + p]));
            }
        }
        image::DynamicImage::ImageRgb8(
            image::RgbImage::from_raw(width as u32, height as u32, buf).expect("buffer sized"),
        )
    } else {
        let buf = image[..plane].iter().map(|&v| to_u8(v)).collect();
        image::DynamicImage::ImageLuma8(
            image::GrayImage::from_raw(width as u32, height as u32, buf).expect("buffer sized"),
        )
    };
    let mut out = std::io::Cursor::new(Vec::new());
    dynamic
        .write_to(&mut out, image::ImageFormat::Png)
        .map_err(|e| Error::DecodeError {
            path: "<png encoder>".into(),
            message: e.to_string(),
        })?;
    Ok(out.into_inner())
}
