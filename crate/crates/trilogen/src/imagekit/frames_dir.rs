//! Videos on disk are directories of numbered PNM frames: `frame_000001.ppm`
//! (or `.pgm` when grayscale), 1-based, read back in lexicographic order.

use std::fs;
use std::path::Path;

use super::{decode_pnm, encode_pnm, Image, ImageError, Video};

/// Frame rate assumed for sequences that do not carry an explicit rate.
pub const DEFAULT_FPS: f64 = 8.0;

/// Writes every frame of `video` into `dir` (created if missing) as
/// `frame_%06d.ppm` / `frame_%06d.pgm`, numbered from 1.
pub fn write_frames_dir(dir: &Path, video: &Video) -> Result<(), ImageError> {
    fs::create_dir_all(dir).map_err(|source| ImageError::File {
        path: dir.to_path_buf(),
        source,
    })?;
    let ext = if video.frames()[0].channels() == 1 { "pgm" } else { "ppm" };
    for (i, frame) in video.frames().iter().enumerate() {
        let path = dir.join(format!("frame_{:06}.{ext}", i + 1));
        fs::write(&path, encode_pnm(frame)).map_err(|source| ImageError::File {
            path: path.clone(),
            source,
        })?;
    }
    Ok(())
}

/// Reads all `*.ppm` / `*.pgm` files in `dir` in lexicographic filename
/// order as one video. Fails if the directory holds no frame files or the
/// frames disagree on dimensions.
pub fn read_frames_dir(dir: &Path) -> Result<Video, ImageError> {
    let entries = fs::read_dir(dir).map_err(|source| ImageError::File {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut paths = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|source| ImageError::File {
            path: dir.to_path_buf(),
            source,
        })?;
        let path = entry.path();
        match path.extension().and_then(|e| e.to_str()) {
            Some("ppm") | Some("pgm") => paths.push(path),
            _ => {}
        }
    }
    if paths.is_empty() {
        return Err(ImageError::NoFrames(dir.to_path_buf()));
    }
    paths.sort();
    let mut frames = Vec::with_capacity(paths.len());
    for path in paths {
        let data = fs::read(&path).map_err(|source| ImageError::File {
            path: path.clone(),
            source,
        })?;
        let img: Image = decode_pnm(&data).map_err(|source| ImageError::Pnm {
            path: path.clone(),
            source,
        })?;
        frames.push(img);
    }
    Video::new(frames, DEFAULT_FPS)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gray_video(n: usize) -> Video {
        let frames = (0..n)
            .map(|i| Image::filled(6, 4, 1, (i * 10) as u8))
            .collect();
        Video::new(frames, DEFAULT_FPS).unwrap()
    }

    #[test]
    fn round_trips_grayscale_frames_in_order() {
        let dir = tempfile::tempdir().unwrap();
        let video = gray_video(3);
        write_frames_dir(dir.path(), &video).unwrap();

        let names: Vec<_> = {
            let mut v: Vec<_> = std::fs::read_dir(dir.path())
                .unwrap()
                .map(|e| e.unwrap().file_name().into_string().unwrap())
                .collect();
            v.sort();
            v
        };
        assert_eq!(names, ["frame_000001.pgm", "frame_000002.pgm", "frame_000003.pgm"]);

        let back = read_frames_dir(dir.path()).unwrap();
        assert_eq!(back.frames().len(), 3);
        for (a, b) in back.frames().iter().zip(video.frames()) {
            assert_eq!(a, b);
        }
        assert_eq!(back.fps(), DEFAULT_FPS);
    }

    #[test]
    fn rgb_frames_use_ppm_extension() {
        let dir = tempfile::tempdir().unwrap();
        let frames = vec![Image::filled(4, 4, 3, 9)];
        write_frames_dir(dir.path(), &Video::new(frames, 8.0).unwrap()).unwrap();
        assert!(dir.path().join("frame_000001.ppm").exists());
    }

    #[test]
    fn lexicographic_order_is_numeric_for_padded_names() {
        // 12 frames cross the 9->10 boundary; zero padding keeps sort correct.
        let dir = tempfile::tempdir().unwrap();
        let frames: Vec<_> = (0..12).map(|i| Image::filled(4, 4, 1, i as u8)).collect();
        write_frames_dir(dir.path(), &Video::new(frames, 8.0).unwrap()).unwrap();
        let back = read_frames_dir(dir.path()).unwrap();
        let levels: Vec<u8> = back.frames().iter().map(|f| f.at(0, 0, 0)).collect();
        assert_eq!(levels, (0..12).collect::<Vec<u8>>());
    }

    #[test]
    fn ignores_unrelated_files() {
        let dir = tempfile::tempdir().unwrap();
        write_frames_dir(dir.path(), &gray_video(2)).unwrap();
        std::fs::write(dir.path().join("notes.txt"), "hi").unwrap();
        assert_eq!(read_frames_dir(dir.path()).unwrap().frames().len(), 2);
    }

    #[test]
    fn empty_directory_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            read_frames_dir(dir.path()),
            Err(ImageError::NoFrames(_))
        ));
    }

    #[test]
    fn mismatched_frames_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("frame_000001.pgm"), encode_pnm(&Image::filled(4, 4, 1, 0))).unwrap();
        std::fs::write(dir.path().join("frame_000002.pgm"), encode_pnm(&Image::filled(5, 4, 1, 0))).unwrap();
        assert!(matches!(
            read_frames_dir(dir.path()),
            Err(ImageError::FrameMismatch { index: 1, .. })
        ));
    }
}
