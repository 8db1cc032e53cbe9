//! Raw planar video and depth-map ingestion.
//!
//! Views are raw 8-bit planar YUV 4:2:0 (per frame: `w*h` luma bytes, then
//! two `w/2 * h/2` chroma planes). Depth maps are raw 8-bit luma-only
//! rasters, one `w*h` chunk per frame. Raw files carry no header, so
//! geometry always comes from the caller (CLI flags or a JSON manifest).

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One 8-bit sample plane.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Plane {
    pub data: Vec<u8>,
    pub width: usize,
    pub height: usize,
}

impl Plane {
    pub fn new(data: Vec<u8>, width: usize, height: usize) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::BadGeometry(format!(
                "plane buffer holds {} bytes, expected {}x{}={}",
                data.len(),
                width,
                height,
                width * height
            )));
        }
        Ok(Plane {
            data,
            width,
            height,
        })
    }

    pub fn filled(value: u8, width: usize, height: usize) -> Self {
        Plane {
            data: vec![value; width * height],
            width,
            height,
        }
    }

    #[inline]
    pub fn sample(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    /// Samples widened to f64, row-major.
    pub fn to_f64(&self) -> Vec<f64> {
        self.data.iter().map(|&v| v as f64).collect()
    }

    pub fn same_geometry(&self, other: &Plane) -> bool {
        self.width == other.width && self.height == other.height
    }
}

/// One video picture: full-resolution luma plus quarter-resolution chroma.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pub y: Plane,
    pub u: Plane,
    pub v: Plane,
    pub width: usize,
    pub height: usize,
}

impl Frame {
    pub fn new(y: Plane, u: Plane, v: Plane) -> Result<Self> {
        let (w, h) = (y.width, y.height);
        validate_geometry(w, h)?;
        if u.width != w / 2 || u.height != h / 2 || v.width != w / 2 || v.height != h / 2 {
            return Err(Error::BadGeometry(format!(
                "chroma planes must be {}x{}, got {}x{} and {}x{}",
                w / 2,
                h / 2,
                u.width,
                u.height,
                v.width,
                v.height
            )));
        }
        Ok(Frame {
            y,
            u,
            v,
            width: w,
            height: h,
        })
    }

    pub fn same_geometry(&self, other: &Frame) -> bool {
        self.width == other.width && self.height == other.height
    }
}

/// Per-view depth raster with the geometry of its view's luma plane.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepthMap {
    pub d: Plane,
    pub width: usize,
    pub height: usize,
}

impl DepthMap {
    pub fn new(d: Plane) -> Result<Self> {
        validate_geometry(d.width, d.height)?;
        Ok(DepthMap {
            width: d.width,
            height: d.height,
            d,
        })
    }
}

/// Paired left/right frame streams plus per-view depth streams.
#[derive(Debug, Clone)]
pub struct StereoSequence {
    pub left: Vec<Frame>,
    pub right: Vec<Frame>,
    pub depth_left: Vec<DepthMap>,
    pub depth_right: Vec<DepthMap>,
    pub frame_count: usize,
}

/// Borrowed per-frame view of a [`StereoSequence`].
#[derive(Debug, Clone, Copy)]
pub struct StereoView<'a> {
    pub left: &'a Frame,
    pub right: &'a Frame,
    pub depth_left: &'a DepthMap,
    pub depth_right: &'a DepthMap,
}

impl StereoSequence {
    pub fn new(
        left: Vec<Frame>,
        right: Vec<Frame>,
        depth_left: Vec<DepthMap>,
        depth_right: Vec<DepthMap>,
    ) -> Result<Self> {
        let n = left.len();
        if n == 0 {
            return Err(Error::BadGeometry("sequence has zero frames".into()));
        }
        if right.len() != n || depth_left.len() != n || depth_right.len() != n {
            return Err(Error::DimensionMismatch {
                left: format!("{} left frames", n),
                right: format!(
                    "{} right, {} depth-left, {} depth-right",
                    right.len(),
                    depth_left.len(),
                    depth_right.len()
                ),
            });
        }
        let (w, h) = (left[0].width, left[0].height);
        let streams_ok = left.iter().all(|f| f.width == w && f.height == h)
            && right.iter().all(|f| f.width == w && f.height == h)
            && depth_left.iter().all(|d| d.width == w && d.height == h)
            && depth_right.iter().all(|d| d.width == w && d.height == h);
        if !streams_ok {
            return Err(Error::BadGeometry(
                "all four streams must share one constant geometry".into(),
            ));
        }
        Ok(StereoSequence {
            left,
            right,
            depth_left,
            depth_right,
            frame_count: n,
        })
    }

    pub fn width(&self) -> usize {
        self.left[0].width
    }

    pub fn height(&self) -> usize {
        self.left[0].height
    }

    pub fn view(&self, i: usize) -> StereoView<'_> {
        StereoView {
            left: &self.left[i],
            right: &self.right[i],
            depth_left: &self.depth_left[i],
            depth_right: &self.depth_right[i],
        }
    }

    pub fn same_geometry(&self, other: &StereoSequence) -> bool {
        self.frame_count == other.frame_count
            && self.width() == other.width()
            && self.height() == other.height()
    }
}

/// Row-major tiling of a plane into square blocks; border pixels that do
/// not fill a whole block are dropped.
#[derive(Debug, Clone)]
pub struct BlockGrid {
    pub block_size: usize,
    pub cols: usize,
    pub rows: usize,
    pub blocks: Vec<Vec<u8>>,
}

impl BlockGrid {
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }
}

fn validate_geometry(width: usize, height: usize) -> Result<()> {
    if width < 64 || height < 64 || !width.is_multiple_of(2) || !height.is_multiple_of(2) {
        return Err(Error::BadGeometry(format!(
            "dimensions must be even and at least 64x64, got {}x{}",
            width, height
        )));
    }
    Ok(())
}

fn open_sized(path: &Path, unit_bytes: u64) -> Result<(fs::File, u64)> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let file = fs::File::open(path)?;
    let size = file.metadata()?.len();
    if size == 0 || size % unit_bytes != 0 {
        return Err(Error::TruncatedFrame {
            path: path.to_path_buf(),
            actual: size,
            frame_bytes: unit_bytes,
        });
    }
    Ok((file, size))
}

/// Reads a raw planar YUV 4:2:0 file into frames, bit-exactly.
pub fn read_yuv_sequence(
    path: &Path,
    width: usize,
    height: usize,
    max_frames: Option<usize>,
) -> Result<Vec<Frame>> {
    validate_geometry(width, height)?;
    let luma = width * height;
    let chroma = luma / 4;
    let frame_bytes = (luma + 2 * chroma) as u64;
    let (mut file, size) = open_sized(path, frame_bytes)?;

    let available = (size / frame_bytes) as usize;
    let count = max_frames.map_or(available, |m| m.min(available));
    let mut frames = Vec::with_capacity(count);
    let mut buf = vec![0u8; frame_bytes as usize];
    for _ in 0..count {
        file.read_exact(&mut buf)?;
        let y = Plane::new(buf[..luma].to_vec(), width, height)?;
        let u = Plane::new(buf[luma..luma + chroma].to_vec(), width / 2, height / 2)?;
        let v = Plane::new(buf[luma + chroma..].to_vec(), width / 2, height / 2)?;
        frames.push(Frame::new(y, u, v)?);
    }
    Ok(frames)
}

/// Reads a raw 8-bit luma-only raster file into depth maps, bit-exactly.
pub fn read_depth_sequence(
    path: &Path,
    width: usize,
    height: usize,
    max_frames: Option<usize>,
) -> Result<Vec<DepthMap>> {
    validate_geometry(width, height)?;
    let frame_bytes = (width * height) as u64;
    let (mut file, size) = open_sized(path, frame_bytes)?;

    let available = (size / frame_bytes) as usize;
    let count = max_frames.map_or(available, |m| m.min(available));
    let mut maps = Vec::with_capacity(count);
    let mut buf = vec![0u8; frame_bytes as usize];
    for _ in 0..count {
        file.read_exact(&mut buf)?;
        maps.push(DepthMap::new(Plane::new(buf.clone(), width, height)?)?);
    }
    Ok(maps)
}

/// Writes frames back in planar Y, U, V order.
pub fn write_yuv_sequence(path: &Path, frames: &[Frame]) -> Result<()> {
    let mut out = Vec::new();
    for f in frames {
        out.extend_from_slice(&f.y.data);
        out.extend_from_slice(&f.u.data);
        out.extend_from_slice(&f.v.data);
    }
    fs::write(path, out)?;
    Ok(())
}

/// Writes depth maps back as consecutive luma-only rasters.
pub fn write_depth_sequence(path: &Path, maps: &[DepthMap]) -> Result<()> {
    let mut out = Vec::new();
    for m in maps {
        out.extend_from_slice(&m.d.data);
    }
    fs::write(path, out)?;
    Ok(())
}

/// Slices a plane into a row-major grid of `block_size` x `block_size`
/// tiles, dropping partial border rows and columns.
pub fn tile_plane(plane: &Plane, block_size: usize) -> Result<BlockGrid> {
    if plane.width < block_size || plane.height < block_size {
        return Err(Error::BadGeometry(format!(
            "plane {}x{} is smaller than block size {}",
            plane.width, plane.height, block_size
        )));
    }
    let cols = plane.width / block_size;
    let rows = plane.height / block_size;
    let mut blocks = Vec::with_capacity(cols * rows);
    for by in 0..rows {
        for bx in 0..cols {
            let mut tile = Vec::with_capacity(block_size * block_size);
            for dy in 0..block_size {
                let row = (by * block_size + dy) * plane.width + bx * block_size;
                tile.extend_from_slice(&plane.data[row..row + block_size]);
            }
            blocks.push(tile);
        }
    }
    Ok(BlockGrid {
        block_size,
        cols,
        rows,
        blocks,
    })
}

/// JSON description of one stereo sequence on disk. Relative paths are
/// resolved against the manifest file's directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SequenceManifest {
    pub left: PathBuf,
    pub right: PathBuf,
    pub depth_left: PathBuf,
    pub depth_right: PathBuf,
    pub width: usize,
    pub height: usize,
    pub frame_count: usize,
}

impl SequenceManifest {
    pub fn from_file(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        let text = fs::read_to_string(path)?;
        let mut manifest: SequenceManifest = serde_json::from_str(&text)?;
        if let Some(dir) = path.parent() {
            for p in [
                &mut manifest.left,
                &mut manifest.right,
                &mut manifest.depth_left,
                &mut manifest.depth_right,
            ] {
                if p.is_relative() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(manifest)
    }

    pub fn to_file(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    /// Loads all four streams, checking each holds the declared frame count.
    pub fn load(&self) -> Result<StereoSequence> {
        if self.frame_count == 0 {
            return Err(Error::InvalidParameter(
                "manifest frame_count must be positive".into(),
            ));
        }
        let n = Some(self.frame_count);
        let left = read_yuv_sequence(&self.left, self.width, self.height, n)?;
        let right = read_yuv_sequence(&self.right, self.width, self.height, n)?;
        let depth_left = read_depth_sequence(&self.depth_left, self.width, self.height, n)?;
        let depth_right = read_depth_sequence(&self.depth_right, self.width, self.height, n)?;
        for (len, path) in [
            (left.len(), &self.left),
            (right.len(), &self.right),
            (depth_left.len(), &self.depth_left),
            (depth_right.len(), &self.depth_right),
        ] {
            if len != self.frame_count {
                return Err(Error::FrameCountMismatch {
                    path: path.clone(),
                    expected: self.frame_count,
                    actual: len,
                });
            }
        }
        StereoSequence::new(left, right, depth_left, depth_right)
    }
}
