//! The 6-channel detail input stack file and 8-bit previews.
//!
//! Layout: magic `SMIS`, u32 version, u32 width, height, channels, then f32
//! samples row-major and channel-interleaved, all little-endian.

use std::io::{Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::{RasterError, RasterImage};

pub const STACK_MAGIC: &[u8; 4] = b"SMIS";
pub const STACK_VERSION: u32 = 1;
/// S (1) + N (3) + D_f (1) + D_b (1).
pub const STACK_CHANNELS: usize = 6;

/// Concatenates S, N, D_f, D_b per pixel in that order.
pub fn compose_detail_input(
    sketch: &RasterImage,
    normals: &RasterImage,
    front_depth: &RasterImage,
    back_depth: &RasterImage,
) -> Result<RasterImage, RasterError> {
    let parts: [(&'static str, &RasterImage, usize); 4] = [
        ("sketch", sketch, 1),
        ("normals", normals, 3),
        ("front depth", front_depth, 1),
        ("back depth", back_depth, 1),
    ];
    let dims = (sketch.width(), sketch.height());
    for (name, img, channels) in parts {
        if (img.width(), img.height()) != dims {
            return Err(RasterError::DimensionMismatch {
                image: name,
                expected: dims,
                found: (img.width(), img.height()),
            });
        }
        if img.channels() != channels {
            return Err(RasterError::ChannelCount { image: name, expected: channels, found: img.channels() });
        }
    }
    let mut data = Vec::with_capacity(dims.0 * dims.1 * STACK_CHANNELS);
    for row in 0..dims.1 {
        for col in 0..dims.0 {
            for (_, img, _) in parts {
                data.extend_from_slice(img.pixel(col, row));
            }
        }
    }
    RasterImage::from_data(dims.0, dims.1, STACK_CHANNELS, data)
}

pub fn write_stack(img: &RasterImage, mut w: impl Write) -> Result<(), RasterError> {
    w.write_all(STACK_MAGIC)?;
    w.write_u32::<LittleEndian>(STACK_VERSION)?;
    for d in [img.width(), img.height(), img.channels()] {
        w.write_u32::<LittleEndian>(d as u32)?;
    }
    for v in img.data() {
        w.write_f32::<LittleEndian>(*v)?;
    }
    Ok(())
}

pub fn read_stack(mut r: impl Read) -> Result<RasterImage, RasterError> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != STACK_MAGIC {
        return Err(RasterError::Format(format!("bad magic {magic:?}")));
    }
    let version = r.read_u32::<LittleEndian>()?;
    if version != STACK_VERSION {
        return Err(RasterError::Version(version));
    }
    let width = r.read_u32::<LittleEndian>()? as usize;
    let height = r.read_u32::<LittleEndian>()? as usize;
    let channels = r.read_u32::<LittleEndian>()? as usize;
    let count = width.checked_mul(height).and_then(|n| n.checked_mul(channels)).ok_or(RasterError::BadDims {
        width,
        height,
        channels,
    })?;
    RasterImage::filled(width, height, channels, 0.0)?;
    let mut data = vec![0f32; count];
    r.read_f32_into::<LittleEndian>(&mut data)?;
    RasterImage::from_data(width, height, channels, data)
}

pub fn save_stack(img: &RasterImage, path: impl AsRef<Path>) -> Result<(), RasterError> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_stack(img, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_stack(path: impl AsRef<Path>) -> Result<RasterImage, RasterError> {
    read_stack(std::io::BufReader::new(std::fs::File::open(path)?))
}

fn to_byte(v: f32, lo: f32, hi: f32) -> u8 {
    (((v - lo) / (hi - lo)).clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Binary PGM of one channel, mapping [lo, hi] to 0..255.
pub fn write_pgm(img: &RasterImage, channel: usize, lo: f32, hi: f32, mut w: impl Write) -> Result<(), RasterError> {
    if channel >= img.channels() {
        return Err(RasterError::ChannelCount { image: "pgm source", expected: channel + 1, found: img.channels() });
    }
    write!(w, "P5\n{} {}\n255\n", img.width(), img.height())?;
    let bytes: Vec<u8> = img.data().chunks(img.channels()).map(|px| to_byte(px[channel], lo, hi)).collect();
    w.write_all(&bytes)?;
    Ok(())
}

/// Binary PPM of channels `first..first+3`, mapping [lo, hi] to 0..255.
pub fn write_ppm(img: &RasterImage, first: usize, lo: f32, hi: f32, mut w: impl Write) -> Result<(), RasterError> {
    if first + 3 > img.channels() {
        return Err(RasterError::ChannelCount { image: "ppm source", expected: first + 3, found: img.channels() });
    }
    write!(w, "P6\n{} {}\n255\n", img.width(), img.height())?;
    let mut bytes = Vec::with_capacity(img.width() * img.height() * 3);
    for px in img.data().chunks(img.channels()) {
        bytes.extend(px[first..first + 3].iter().map(|&v| to_byte(v, lo, hi)));
    }
    w.write_all(&bytes)?;
    Ok(())
}
