//! On-disk formats shared by the corpus, dataset and render outputs.
//!
//! * 8-bit RGB PNG for visual and tactile images, 8-bit grey PNG for friction
//!   and spectrogram images.
//! * 16-bit grey PNG for height maps plus a `.scale` sidecar holding the
//!   height per intensity step.
//! * Two-column CSV (`time_s,mu`, LF endings) for friction traces.
//! * `V2HS` binary for spectrograms and other 2-D real arrays:
//!   magic `V2HS`, u32 version, u32 rows, u32 cols, u8 kind (0 real or
//!   magnitude, 1 complex), then little-endian f32 row-major, with real and
//!   imaginary parts interleaved for complex data.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use image::{ImageBuffer, Luma, Rgb};
use ndarray::{Array2, Array3};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::photometric::HeightMap;
use crate::signals::{FrictionTrace, SpectrogramData};

pub const SPECTROGRAM_MAGIC: &[u8; 4] = b"V2HS";
pub const SPECTROGRAM_VERSION: u32 = 1;
const KIND_REAL: u8 = 0;
const KIND_COMPLEX: u8 = 1;

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub(crate) fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

pub(crate) fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn encode_png<P, C>(path: &Path, img: ImageBuffer<P, C>) -> Result<()>
where
    P: image::Pixel + image::PixelWithColorType,
    [P::Subpixel]: image::EncodableLayout,
    C: std::ops::Deref<Target = [P::Subpixel]>,
{
    let mut bytes = Vec::new();
    img.write_to(
        &mut std::io::Cursor::new(&mut bytes),
        image::ImageFormat::Png,
    )
    .map_err(|e| Error::format(path, e.to_string()))?;
    write_file(path, &bytes)
}

fn decode_png(path: &Path) -> Result<image::DynamicImage> {
    let bytes = read_file(path)?;
    image::load_from_memory_with_format(&bytes, image::ImageFormat::Png)
        .map_err(|e| Error::format(path, e.to_string()))
}

pub fn quantize_u8(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0 + 0.5).floor() as u8
}

/// Writes an `(row, col, 3)` array with values in `[0, 1]` as 8-bit RGB.
pub fn write_rgb_png(path: &Path, pixels: &Array3<f64>) -> Result<()> {
    let (h, w, c) = pixels.dim();
    if c != 3 {
        return Err(Error::invalid("rgb image", format!("{c} channels")));
    }
    let img = ImageBuffer::from_fn(w as u32, h as u32, |x, y| {
        let (r, cc) = (y as usize, x as usize);
        Rgb([
            quantize_u8(pixels[[r, cc, 0]]),
            quantize_u8(pixels[[r, cc, 1]]),
            quantize_u8(pixels[[r, cc, 2]]),
        ])
    });
    encode_png(path, img)
}

pub fn read_rgb_png(path: &Path) -> Result<Array3<f64>> {
    let img = decode_png(path)?.to_rgb8();
    let (w, h) = img.dimensions();
    Ok(Array3::from_shape_fn(
        (h as usize, w as usize, 3),
        |(r, c, ch)| f64::from(img.get_pixel(c as u32, r as u32)[ch]) / 255.0,
    ))
}

pub fn write_gray_png(path: &Path, pixels: &Array2<u8>) -> Result<()> {
    let (h, w) = pixels.dim();
    let img = ImageBuffer::from_fn(w as u32, h as u32, |x, y| {
        Luma([pixels[[y as usize, x as usize]]])
    });
    encode_png(path, img)
}

pub fn read_gray_png(path: &Path) -> Result<Array2<u8>> {
    let img = decode_png(path)?.to_luma8();
    let (w, h) = img.dimensions();
    Ok(Array2::from_shape_fn((h as usize, w as usize), |(r, c)| {
        img.get_pixel(c as u32, r as u32)[0]
    }))
}

/// Sidecar path for a height PNG: `foo.png` → `foo.scale`.
pub fn height_sidecar(path: &Path) -> PathBuf {
    path.with_extension("scale")
}

/// Writes a non-negative height map as 16-bit grey plus its scale sidecar.
pub fn write_height_png(path: &Path, h: &HeightMap) -> Result<()> {
    let max = h.max();
    if h.min() < 0.0 {
        return Err(Error::invalid(
            "height map",
            "export requires non-negative heights",
        ));
    }
    let scale = if max > 0.0 { max / 65535.0 } else { 1.0 };
    let (rows, cols) = h.resolution();
    let hs = h.heights();
    let img = ImageBuffer::from_fn(cols as u32, rows as u32, |x, y| {
        let v = (hs[[y as usize, x as usize]] / scale + 0.5)
            .floor()
            .clamp(0.0, 65535.0);
        Luma([v as u16])
    });
    encode_png(path, img)?;
    write_file(&height_sidecar(path), format!("scale={scale}\n").as_bytes())
}

pub fn read_height_png(path: &Path) -> Result<HeightMap> {
    let side = height_sidecar(path);
    let text = read_text(&side)?;
    let scale = text
        .lines()
        .filter_map(|l| l.trim().strip_prefix("scale="))
        .next()
        .and_then(|v| v.trim().parse::<f64>().ok())
        .filter(|s| s.is_finite() && *s > 0.0)
        .ok_or_else(|| Error::format(&side, "missing or invalid `scale=` entry"))?;
    let img = decode_png(path)?.to_luma16();
    let (w, h) = img.dimensions();
    let heights = Array2::from_shape_fn((h as usize, w as usize), |(r, c)| {
        f64::from(img.get_pixel(c as u32, r as u32)[0]) * scale
    });
    HeightMap::new(heights)
}

pub fn trace_to_csv(trace: &FrictionTrace) -> String {
    let mut s = String::with_capacity(trace.len() * 24 + 12);
    s.push_str("time_s,mu\n");
    let rate = trace.sample_rate_hz();
    for (i, mu) in trace.samples().iter().enumerate() {
        let _ = writeln!(s, "{},{}", i as f64 / rate, mu);
    }
    s
}

pub fn write_trace_csv(path: &Path, trace: &FrictionTrace) -> Result<()> {
    write_file(path, trace_to_csv(trace).as_bytes())
}

/// Reads a `time_s,mu` CSV; the sample rate comes from the time column.
pub fn read_trace_csv(path: &Path) -> Result<FrictionTrace> {
    let text = read_text(path)?;
    let mut times = Vec::new();
    let mut mus = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (n == 0 && line.starts_with("time_s")) {
            continue;
        }
        let (t, mu) = line
            .split_once(',')
            .ok_or_else(|| Error::format(path, format!("line {}: expected two columns", n + 1)))?;
        let parse = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::format(path, format!("line {}: bad number `{s}`", n + 1)))
        };
        times.push(parse(t)?);
        mus.push(parse(mu)?);
    }
    if mus.is_empty() {
        return Err(Error::format(path, "no samples"));
    }
    let rate = if times.len() >= 2 {
        let dt = (times[times.len() - 1] - times[0]) / (times.len() - 1) as f64;
        if !(dt > 0.0) {
            return Err(Error::format(path, "time column is not increasing"));
        }
        // Stored times are i / rate; recover the rate exactly when it is integral.
        let r = 1.0 / dt;
        if (r - r.round()).abs() < 1e-6 {
            r.round()
        } else {
            r
        }
    } else {
        crate::signals::DEFAULT_SAMPLE_RATE_HZ
    };
    FrictionTrace::new(mus, rate).map_err(|e| Error::format(path, e.to_string()))
}

pub fn encode_spectrogram(data: &SpectrogramData) -> Vec<u8> {
    let (rows, cols, kind) = match data {
        SpectrogramData::Complex(c) => (c.nrows(), c.ncols(), KIND_COMPLEX),
        SpectrogramData::Magnitude(m) => (m.nrows(), m.ncols(), KIND_REAL),
    };
    let mut out = Vec::with_capacity(17 + rows * cols * 8);
    out.extend_from_slice(SPECTROGRAM_MAGIC);
    out.extend_from_slice(&SPECTROGRAM_VERSION.to_le_bytes());
    out.extend_from_slice(&(rows as u32).to_le_bytes());
    out.extend_from_slice(&(cols as u32).to_le_bytes());
    out.push(kind);
    match data {
        SpectrogramData::Complex(c) => {
            for z in c.iter() {
                out.extend_from_slice(&(z.re as f32).to_le_bytes());
                out.extend_from_slice(&(z.im as f32).to_le_bytes());
            }
        }
        SpectrogramData::Magnitude(m) => {
            for v in m.iter() {
                out.extend_from_slice(&(*v as f32).to_le_bytes());
            }
        }
    }
    out
}

pub fn decode_spectrogram(bytes: &[u8], path: &Path) -> Result<SpectrogramData> {
    let bad = |msg: &str| Error::format(path, msg.to_string());
    if bytes.len() < 17 {
        return Err(bad("truncated V2HS header"));
    }
    if &bytes[..4] != SPECTROGRAM_MAGIC {
        return Err(bad("bad magic, expected V2HS"));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes"));
    let version = u32_at(4);
    if version != SPECTROGRAM_VERSION {
        return Err(bad(&format!("unsupported V2HS version {version}")));
    }
    let rows = u32_at(8) as usize;
    let cols = u32_at(12) as usize;
    let kind = bytes[16];
    let per = match kind {
        KIND_REAL => 1,
        KIND_COMPLEX => 2,
        _ => return Err(bad(&format!("unknown V2HS kind {kind}"))),
    };
    let expected = 17 + rows * cols * per * 4;
    if bytes.len() != expected {
        return Err(bad(&format!(
            "payload is {} bytes, expected {expected}",
            bytes.len()
        )));
    }
    let f = |i: usize| {
        f64::from(f32::from_le_bytes(
            bytes[17 + 4 * i..21 + 4 * i].try_into().expect("4 bytes"),
        ))
    };
    Ok(if kind == KIND_COMPLEX {
        SpectrogramData::Complex(Array2::from_shape_fn((rows, cols), |(r, c)| {
            let i = 2 * (r * cols + c);
            Complex64::new(f(i), f(i + 1))
        }))
    } else {
        SpectrogramData::Magnitude(Array2::from_shape_fn(
            (rows, cols),
            |(r, c)| f(r * cols + c),
        ))
    })
}

pub fn write_spectrogram(path: &Path, data: &SpectrogramData) -> Result<()> {
    write_file(path, &encode_spectrogram(data))
}

pub fn read_spectrogram(path: &Path) -> Result<SpectrogramData> {
    decode_spectrogram(&read_file(path)?, path)
}

/// Writes a real 2-D array in the `V2HS` container.
pub fn write_array2(path: &Path, a: &Array2<f64>) -> Result<()> {
    write_spectrogram(path, &SpectrogramData::Magnitude(a.clone()))
}

pub fn read_array2(path: &Path) -> Result<Array2<f64>> {
    match read_spectrogram(path)? {
        SpectrogramData::Magnitude(m) => Ok(m),
        SpectrogramData::Complex(_) => Err(Error::format(path, "expected a real array")),
    }
}
