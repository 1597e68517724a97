//! Frame ingestion and dumps: binary PGM (P5) files and the raw `TBD1`
//! container.
//!
//! The raw container is the magic `TBD1`, then `T`, `H`, `W` as
//! little-endian `u32`, then `T*H*W` little-endian `f32` values, frame-major
//! and row-major within a frame.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::observation::{Frame, FrameSequence};
use crate::{Error, Result};

pub const RAW_MAGIC: &[u8; 4] = b"TBD1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SequenceFormat {
    /// Directory of `.pgm` files, ordered by file name.
    PgmDir,
    /// Raw `TBD1` container.
    Raw,
    /// A directory means `PgmDir`, anything else `Raw`.
    #[default]
    Auto,
}

impl FromStr for SequenceFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pgm" | "pgm-dir" => Ok(Self::PgmDir),
            "raw" => Ok(Self::Raw),
            "auto" => Ok(Self::Auto),
            other => Err(Error::Config(format!(
                "unknown sequence format '{other}' (available: auto, pgm-dir, raw)"
            ))),
        }
    }
}

pub fn load_sequence(path: &Path, format: SequenceFormat) -> Result<FrameSequence> {
    let format = match format {
        SequenceFormat::Auto if path.is_dir() => SequenceFormat::PgmDir,
        SequenceFormat::Auto => SequenceFormat::Raw,
        f => f,
    };
    match format {
        SequenceFormat::PgmDir => read_pgm_dir(path),
        _ => read_raw(path),
    }
}

/// Sorted `.pgm` files in `dir`.
pub fn pgm_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("pgm")))
        .collect();
    files.sort();
    Ok(files)
}

pub fn read_pgm_dir(dir: &Path) -> Result<FrameSequence> {
    let files = pgm_files(dir)?;
    if files.is_empty() {
        return Err(Error::Format {
            path: dir.to_path_buf(),
            reason: "no .pgm files found".into(),
        });
    }
    let mut frames = Vec::with_capacity(files.len());
    let mut dims = None;
    for (t, f) in files.iter().enumerate() {
        let frame = read_pgm(f).map_err(|e| Error::Ingest {
            frame: t,
            reason: e.to_string(),
        })?;
        let d = (frame.height(), frame.width());
        match dims {
            None => dims = Some(d),
            Some(d0) if d0 != d => {
                return Err(Error::Ingest {
                    frame: t,
                    reason: format!(
                        "{} is {}x{}, frame 0 is {}x{}",
                        f.display(),
                        d.0,
                        d.1,
                        d0.0,
                        d0.1
                    ),
                })
            }
            _ => {}
        }
        frames.push(frame);
    }
    FrameSequence::new(frames)
}

fn format_err(path: &Path, reason: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

/// Reads an 8- or 16-bit binary PGM.
pub fn read_pgm(path: &Path) -> Result<Frame> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_pgm(&bytes).map_err(|reason| format_err(path, reason))
}

fn parse_pgm(bytes: &[u8]) -> std::result::Result<Frame, String> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err("missing P5 magic".into());
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in &mut fields {
        loop {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                break;
            }
        }
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or("truncated or malformed header")?;
    }
    let [width, height, maxval] = fields;
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err("header not terminated by whitespace".into());
    }
    pos += 1;
    if maxval == 0 || maxval > 65535 {
        return Err(format!("maxval {maxval} outside 1..=65535"));
    }
    let n = width * height;
    let bpp = if maxval < 256 { 1 } else { 2 };
    let body = &bytes[pos..];
    if body.len() < n * bpp {
        return Err(format!(
            "expected {} bytes of pixel data, found {}",
            n * bpp,
            body.len()
        ));
    }
    let data = if bpp == 1 {
        body[..n].iter().map(|&b| b as f32).collect()
    } else {
        body[..2 * n]
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]) as f32)
            .collect()
    };
    Frame::new(height, width, data).map_err(|e| e.to_string())
}

/// Writes a frame as binary PGM, rounding and clamping to `0..=maxval`.
pub fn write_pgm(path: &Path, frame: &Frame, maxval: u16) -> Result<()> {
    if maxval == 0 {
        return Err(Error::Config("PGM maxval must be positive".into()));
    }
    let mut out = Vec::with_capacity(frame.data().len() * 2 + 32);
    write!(
        out,
        "P5\n{} {}\n{}\n",
        frame.width(),
        frame.height(),
        maxval
    )
    .expect("writing to a Vec cannot fail");
    let q = |v: f32| v.round().clamp(0.0, maxval as f32) as u16;
    if maxval < 256 {
        out.extend(frame.data().iter().map(|&v| q(v) as u8));
    } else {
        for &v in frame.data() {
            out.extend_from_slice(&q(v).to_be_bytes());
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Writes a binary mask as an 8-bit PGM with values 0 and 255.
pub fn write_mask_pgm(path: &Path, height: usize, width: usize, mask: &[bool]) -> Result<()> {
    let data = mask.iter().map(|&m| if m { 255.0 } else { 0.0 }).collect();
    let frame = Frame::new(height, width, data)?;
    write_pgm(path, &frame, 255)
}

/// Reads a 0/255 mask PGM; any nonzero pixel counts as set.
pub fn read_mask_pgm(path: &Path) -> Result<(usize, usize, Vec<bool>)> {
    let f = read_pgm(path)?;
    Ok((
        f.height(),
        f.width(),
        f.data().iter().map(|&v| v > 0.0).collect(),
    ))
}

pub fn read_raw(path: &Path) -> Result<FrameSequence> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rd = BufReader::new(file);
    let mut header = [0u8; 16];
    rd.read_exact(&mut header)
        .map_err(|_| format_err(path, "file shorter than the 16-byte header"))?;
    if &header[..4] != RAW_MAGIC {
        return Err(format_err(path, "missing TBD1 magic"));
    }
    let word = |i: usize| u32::from_le_bytes(header[4 * i..4 * i + 4].try_into().unwrap()) as usize;
    let (t, h, w) = (word(1), word(2), word(3));
    if h == 0 || w == 0 {
        return Err(format_err(path, format!("invalid dimensions {h}x{w}")));
    }
    let mut frames = Vec::with_capacity(t);
    let mut buf = vec![0u8; 4 * h * w];
    for ti in 0..t {
        rd.read_exact(&mut buf).map_err(|_| Error::Ingest {
            frame: ti,
            reason: format!("{} ends inside frame {ti}", path.display()),
        })?;
        let data = buf
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        frames.push(Frame::new(h, w, data).map_err(|e| Error::Ingest {
            frame: ti,
            reason: e.to_string(),
        })?);
    }
    FrameSequence::new(frames)
}

/// Streams frames into a raw container; the frame count is patched into the
/// header on [`RawWriter::finish`].
#[derive(Debug)]
pub struct RawWriter {
    path: PathBuf,
    out: BufWriter<File>,
    height: usize,
    width: usize,
    frames: u32,
}

impl RawWriter {
    pub fn create(path: &Path, height: usize, width: usize) -> Result<Self> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        let mut header = Vec::with_capacity(16);
        header.extend_from_slice(RAW_MAGIC);
        for v in [0u32, height as u32, width as u32] {
            header.extend_from_slice(&v.to_le_bytes());
        }
        out.write_all(&header).map_err(|e| Error::io(path, e))?;
        Ok(Self {
            path: path.to_path_buf(),
            out,
            height,
            width,
            frames: 0,
        })
    }

    pub fn push(&mut self, values: &[f32]) -> Result<()> {
        if values.len() != self.height * self.width {
            return Err(Error::Domain(format!(
                "raw frame needs {} values, got {}",
                self.height * self.width,
                values.len()
            )));
        }
        let mut bytes = Vec::with_capacity(4 * values.len());
        for v in values {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        self.out
            .write_all(&bytes)
            .map_err(|e| Error::io(&self.path, e))?;
        self.frames += 1;
        Ok(())
    }

    pub fn push_f64(&mut self, values: &[f64]) -> Result<()> {
        let v: Vec<f32> = values.iter().map(|&x| x as f32).collect();
        self.push(&v)
    }

    pub fn finish(mut self) -> Result<()> {
        let path = self.path.clone();
        let io = |e| Error::io(&path, e);
        self.out.seek(SeekFrom::Start(4)).map_err(io)?;
        self.out.write_all(&self.frames.to_le_bytes()).map_err(io)?;
        self.out.flush().map_err(io)
    }
}

pub fn write_raw(path: &Path, seq: &FrameSequence) -> Result<()> {
    let mut w = RawWriter::create(path, seq.height(), seq.width())?;
    for f in seq.frames() {
        w.push(f.data())?;
    }
    w.finish()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(h: usize, w: usize, f: impl Fn(usize) -> f32) -> Frame {
        Frame::new(h, w, (0..h * w).map(f).collect()).unwrap()
    }

    #[test]
    fn pgm_dir_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let frames: Vec<_> = (0..3)
            .map(|t| frame(8, 8, move |i| ((i * 7 + t * 13) % 256) as f32))
            .collect();
        for (t, f) in frames.iter().enumerate() {
            write_pgm(&dir.path().join(format!("f{t:03}.pgm")), f, 255).unwrap();
        }
        let seq = load_sequence(dir.path(), SequenceFormat::Auto).unwrap();
        assert_eq!(seq.len(), 3);
        assert_eq!((seq.height(), seq.width()), (8, 8));
        assert_eq!(seq.frames(), &frames[..]);
    }

    #[test]
    fn pgm_16_bit_and_comments() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.pgm");
        let f = frame(3, 5, |i| (i * 4000) as f32);
        write_pgm(&p, &f, 65535).unwrap();
        assert_eq!(read_pgm(&p).unwrap(), f);

        let mut bytes = b"P5\n# comment\n2 1\n# another\n255\n".to_vec();
        bytes.extend_from_slice(&[7, 9]);
        let g = parse_pgm(&bytes).unwrap();
        assert_eq!(g.data(), &[7.0, 9.0]);
    }

    #[test]
    fn raw_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.tbd");
        let frames: Vec<_> = (0..4)
            .map(|t| frame(5, 6, move |i| (i as f32 * 0.1).sin() * 1e3 + t as f32 / 3.0))
            .collect();
        let seq = FrameSequence::new(frames).unwrap();
        write_raw(&p, &seq).unwrap();
        let back = load_sequence(&p, SequenceFormat::Auto).unwrap();
        for (a, b) in seq.frames().iter().zip(back.frames()) {
            let ab: Vec<u32> = a.data().iter().map(|v| v.to_bits()).collect();
            let bb: Vec<u32> = b.data().iter().map(|v| v.to_bits()).collect();
            assert_eq!(ab, bb);
        }
    }

    #[test]
    fn wrong_frame_size_names_index() {
        let dir = tempfile::tempdir().unwrap();
        for t in 0..3 {
            let (h, w) = if t == 2 { (8, 9) } else { (8, 8) };
            write_pgm(
                &dir.path().join(format!("f{t}.pgm")),
                &frame(h, w, |_| 1.0),
                255,
            )
            .unwrap();
        }
        let err = load_sequence(dir.path(), SequenceFormat::PgmDir).unwrap_err();
        assert!(matches!(err, Error::Ingest { frame: 2, .. }), "{err}");
    }

    #[test]
    fn truncated_raw_names_frame() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.tbd");
        let seq = FrameSequence::new(vec![frame(2, 2, |_| 1.0); 3]).unwrap();
        write_raw(&p, &seq).unwrap();
        let bytes = fs::read(&p).unwrap();
        fs::write(&p, &bytes[..bytes.len() - 4]).unwrap();
        let err = read_raw(&p).unwrap_err();
        assert!(matches!(err, Error::Ingest { frame: 2, .. }), "{err}");
    }

    #[test]
    fn mask_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.pgm");
        let mask = vec![true, false, false, true, true, false];
        write_mask_pgm(&p, 2, 3, &mask).unwrap();
        assert_eq!(read_mask_pgm(&p).unwrap(), (2, 3, mask));
    }

    #[test]
    fn malformed_files() {
        assert!(parse_pgm(b"P2\n1 1\n255\n\x00").is_err());
        assert!(parse_pgm(b"P5\n2 2\n255\n\x00").is_err());
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.tbd");
        fs::write(&p, b"NOPE").unwrap();
        assert!(matches!(read_raw(&p), Err(Error::Format { .. })));
    }
}
