//! Luma-only video ingestion from Y4M files and numbered PNG sequences.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::Image;

/// One trajectory length plus one.
pub const MIN_FRAMES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VideoFormat {
    Y4m,
    PngSequence,
}

impl VideoFormat {
    /// Directories are PNG sequences, everything else is read as Y4M.
    pub fn detect(path: &Path) -> VideoFormat {
        if path.is_dir() {
            VideoFormat::PngSequence
        } else {
            VideoFormat::Y4m
        }
    }
}

/// Decoded luma frames of one video. Pixel values are integers in 0..=255.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoSource {
    pub width: usize,
    pub height: usize,
    pub frames: Vec<Image>,
}

impl VideoSource {
    /// Checks that all frames share one size and that there are enough of
    /// them.
    pub fn from_frames(frames: Vec<Image>) -> Result<Self> {
        let Some(first) = frames.first() else {
            return Err(Error::TooFewFrames(0, MIN_FRAMES));
        };
        let (width, height) = (first.width(), first.height());
        if frames.iter().any(|f| f.width() != width || f.height() != height) {
            return Err(Error::InconsistentFrames);
        }
        if frames.len() < MIN_FRAMES {
            return Err(Error::TooFewFrames(frames.len(), MIN_FRAMES));
        }
        Ok(Self { width, height, frames })
    }

    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    /// Frames rounded and clamped to 8-bit.
    pub fn luma_planes(&self) -> Vec<Vec<u8>> {
        self.frames
            .iter()
            .map(|f| f.data().iter().map(|&v| v.round().clamp(0.0, 255.0) as u8).collect())
            .collect()
    }
}

pub fn ingest(path: &Path, format: Option<VideoFormat>) -> Result<VideoSource> {
    if !path.exists() {
        return Err(Error::MissingPath(path.to_path_buf()));
    }
    match format.unwrap_or_else(|| VideoFormat::detect(path)) {
        VideoFormat::Y4m => read_y4m(path),
        VideoFormat::PngSequence => read_png_sequence(path),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Chroma {
    C420,
    C422,
    C444,
    Mono,
}

impl Chroma {
    fn parse(tag: &str) -> Result<Chroma> {
        match tag {
            "420" | "420jpeg" | "420paldv" | "420mpeg2" => Ok(Chroma::C420),
            "422" => Ok(Chroma::C422),
            "444" => Ok(Chroma::C444),
            "mono" => Ok(Chroma::Mono),
            other => Err(Error::Unsupported(format!("Y4M colorspace C{other}"))),
        }
    }

    fn chroma_bytes(self, w: usize, h: usize) -> usize {
        let (cw, ch) = ((w + 1) / 2, (h + 1) / 2);
        match self {
            Chroma::C420 => 2 * cw * ch,
            Chroma::C422 => 2 * cw * h,
            Chroma::C444 => 2 * w * h,
            Chroma::Mono => 0,
        }
    }
}

struct Y4mHeader {
    width: usize,
    height: usize,
    chroma: Chroma,
}

fn parse_header(line: &str) -> Result<Y4mHeader> {
    let mut tokens = line.split_ascii_whitespace();
    if tokens.next() != Some("YUV4MPEG2") {
        return Err(Error::MalformedHeader("missing YUV4MPEG2 signature".into()));
    }
    let (mut width, mut height, mut chroma) = (None, None, Chroma::C420);
    for t in tokens {
        let (tag, val) = t.split_at(1);
        match tag {
            "W" => width = val.parse().ok(),
            "H" => height = val.parse().ok(),
            "C" => chroma = Chroma::parse(val)?,
            "F" | "I" | "A" | "X" => {}
            _ => return Err(Error::MalformedHeader(format!("unknown tag {t}"))),
        }
    }
    match (width, height) {
        (Some(w), Some(h)) if w > 0 && h > 0 => Ok(Y4mHeader {
            width: w,
            height: h,
            chroma,
        }),
        _ => Err(Error::MalformedHeader("missing or invalid W/H".into())),
    }
}

pub fn read_y4m(path: &Path) -> Result<VideoSource> {
    let f = fs::File::open(path).map_err(|_| Error::MissingPath(path.to_path_buf()))?;
    parse_y4m(BufReader::new(f))
}

pub fn parse_y4m<R: BufRead>(mut r: R) -> Result<VideoSource> {
    let mut line = Vec::new();
    r.read_until(b'\n', &mut line)?;
    let header = parse_header(std::str::from_utf8(&line).map_err(|_| Error::MalformedHeader("not UTF-8".into()))?)?;
    let (w, h) = (header.width, header.height);
    let chroma = header.chroma.chroma_bytes(w, h);
    let mut frames = Vec::new();
    let mut luma = vec![0u8; w * h];
    let mut skip = vec![0u8; chroma];
    loop {
        line.clear();
        if r.read_until(b'\n', &mut line)? == 0 {
            break;
        }
        if !line.starts_with(b"FRAME") || line.last() != Some(&b'\n') {
            return Err(Error::Malformed(format!("expected FRAME marker before frame {}", frames.len())));
        }
        r.read_exact(&mut luma)
            .map_err(|_| Error::Malformed(format!("truncated frame {}", frames.len())))?;
        r.read_exact(&mut skip)
            .map_err(|_| Error::Malformed(format!("truncated frame {}", frames.len())))?;
        frames.push(Image::from_luma(w, h, &luma));
    }
    VideoSource::from_frames(frames)
}

/// Write as 4:2:0 with neutral chroma.
pub fn write_y4m(path: &Path, video: &VideoSource) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    write_y4m_to(&mut w, video)?;
    w.flush()?;
    Ok(())
}

pub fn write_y4m_to<W: Write>(w: &mut W, video: &VideoSource) -> Result<()> {
    writeln!(w, "YUV4MPEG2 W{} H{} F25:1 Ip A1:1 C420jpeg", video.width, video.height)?;
    let chroma = vec![128u8; Chroma::C420.chroma_bytes(video.width, video.height)];
    for plane in video.luma_planes() {
        w.write_all(b"FRAME\n")?;
        w.write_all(&plane)?;
        w.write_all(&chroma)?;
    }
    Ok(())
}

/// BT.601 luma of an 8-bit RGB triple, rounded.
pub fn rgb_to_luma(r: u8, g: u8, b: u8) -> u8 {
    (0.299 * f64::from(r) + 0.587 * f64::from(g) + 0.114 * f64::from(b))
        .round()
        .clamp(0.0, 255.0) as u8
}

fn decode_png(path: &Path) -> Result<Image> {
    let mut bytes = Vec::new();
    fs::File::open(path)?.read_to_end(&mut bytes)?;
    let img = image::load_from_memory_with_format(&bytes, image::ImageFormat::Png)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let luma: Vec<u8> = match img.color() {
        image::ColorType::L8 | image::ColorType::La8 | image::ColorType::L16 | image::ColorType::La16 => {
            img.to_luma8().into_raw()
        }
        _ => img.to_rgb8().pixels().map(|p| rgb_to_luma(p[0], p[1], p[2])).collect(),
    };
    Ok(Image::from_luma(w, h, &luma))
}

/// `*.png` files of a directory in lexical order.
pub fn read_png_sequence(dir: &Path) -> Result<VideoSource> {
    let mut files: Vec<_> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e.eq_ignore_ascii_case("png")))
        .collect();
    files.sort();
    let frames = files.iter().map(|p| decode_png(p)).collect::<Result<Vec<_>>>()?;
    VideoSource::from_frames(frames)
}

pub fn write_png_sequence(dir: &Path, video: &VideoSource) -> Result<()> {
    fs::create_dir_all(dir)?;
    for (i, plane) in video.luma_planes().into_iter().enumerate() {
        let img = image::GrayImage::from_raw(video.width as u32, video.height as u32, plane)
            .expect("plane size matches dimensions");
        img.save(dir.join(format!("{i:06}.png")))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn video(n: usize) -> VideoSource {
        VideoSource::from_frames((0..n).map(|t| Image::from_fn(64, 64, |x, y| ((x * 3 + y + t * 7) % 256) as f32)).collect())
            .unwrap()
    }

    #[test]
    fn luma_arithmetic() {
        assert_eq!(rgb_to_luma(255, 255, 255), 255);
        assert_eq!(rgb_to_luma(255, 0, 0), 76);
        assert_eq!(rgb_to_luma(0, 0, 0), 0);
    }

    #[test]
    fn y4m_round_trip() {
        let v = video(20);
        let mut buf = Vec::new();
        write_y4m_to(&mut buf, &v).unwrap();
        let back = parse_y4m(buf.as_slice()).unwrap();
        assert_eq!((back.width, back.height, back.frame_count()), (64, 64, 20));
        assert_eq!(back.luma_planes(), v.luma_planes());
    }

    #[test]
    fn y4m_444_and_mono() {
        for (tag, extra) in [("C444", 2 * 16), ("Cmono", 0)] {
            let mut buf = format!("YUV4MPEG2 W4 H4 F30:1 {tag}\n").into_bytes();
            for t in 0..16u8 {
                buf.extend_from_slice(b"FRAME\n");
                buf.extend(std::iter::repeat(t).take(16));
                buf.extend(std::iter::repeat(0).take(extra));
            }
            let v = parse_y4m(buf.as_slice()).unwrap();
            assert_eq!(v.frames[15].get(3, 3), 15.0);
        }
    }

    #[test]
    fn y4m_errors() {
        assert!(matches!(parse_y4m(&b"YUV4MPEG W4 H4\n"[..]), Err(Error::MalformedHeader(_))));
        assert!(matches!(parse_y4m(&b"YUV4MPEG2 W4\n"[..]), Err(Error::MalformedHeader(_))));
        assert!(matches!(parse_y4m(&b"YUV4MPEG2 W4 H4 C420p10\n"[..]), Err(Error::Unsupported(_))));
        let mut short = Vec::new();
        write_y4m_to(&mut short, &video(16)).unwrap();
        short.truncate(short.len() - 10);
        assert!(matches!(parse_y4m(short.as_slice()), Err(Error::Malformed(_))));
    }

    #[test]
    fn frame_floor() {
        let frames: Vec<Image> = (0..15).map(|_| Image::new(8, 8)).collect();
        assert!(matches!(VideoSource::from_frames(frames), Err(Error::TooFewFrames(15, 16))));
        let mut frames: Vec<Image> = (0..16).map(|_| Image::new(8, 8)).collect();
        frames[3] = Image::new(8, 9);
        assert!(matches!(VideoSource::from_frames(frames), Err(Error::InconsistentFrames)));
    }

    #[test]
    fn png_sequence_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let v = video(16);
        write_png_sequence(dir.path(), &v).unwrap();
        let back = read_png_sequence(dir.path()).unwrap();
        assert_eq!(back.luma_planes(), v.luma_planes());
    }

    #[test]
    fn png_rgb_uses_bt601() {
        let dir = tempfile::tempdir().unwrap();
        for i in 0..16 {
            let img = image::RgbImage::from_pixel(2, 2, image::Rgb([255, 0, 0]));
            img.save(dir.path().join(format!("{i:03}.png"))).unwrap();
        }
        let v = read_png_sequence(dir.path()).unwrap();
        assert!(v.frames.iter().all(|f| f.data().iter().all(|&p| p == 76.0)));
    }

    #[test]
    fn short_png_sequence() {
        let dir = tempfile::tempdir().unwrap();
        let v = VideoSource {
            width: 4,
            height: 4,
            frames: (0..15).map(|_| Image::new(4, 4)).collect(),
        };
        write_png_sequence(dir.path(), &v).unwrap();
        assert!(matches!(read_png_sequence(dir.path()), Err(Error::TooFewFrames(15, _))));
    }
}
