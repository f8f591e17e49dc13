//! Pixel kernels. All of them replicate the edge for out-of-range samples
//! and requantize with round-half-away-from-zero.

use super::{GradientMap, Image, ImageError};

/// ITU-R 601 luma: `round(0.299 R + 0.587 G + 0.114 B)`. Grayscale input is
/// returned unchanged.
pub fn to_grayscale(img: &Image) -> Image {
    if img.channels() == 1 {
        return img.clone();
    }
    let mut pixels = Vec::with_capacity(img.width() as usize * img.height() as usize);
    for px in img.pixels().chunks_exact(3) {
        let l = 0.299 * px[0] as f64 + 0.587 * px[1] as f64 + 0.114 * px[2] as f64;
        pixels.push(l.round().clamp(0.0, 255.0) as u8);
    }
    Image::from_pixels(img.width(), img.height(), 1, pixels).expect("same dimensions")
}

/// Gradient magnitude `sqrt(Gx^2 + Gy^2)` from the standard 3x3 Sobel pair.
/// Requires a grayscale image of at least 3x3 pixels.
pub fn sobel_magnitude(gray: &Image) -> Result<GradientMap, ImageError> {
    if gray.channels() != 1 {
        return Err(ImageError::NotGrayscale(gray.channels()));
    }
    if gray.width() < 3 || gray.height() < 3 {
        return Err(ImageError::TooSmall {
            width: gray.width(),
            height: gray.height(),
            op: "sobel",
            min: 3,
        });
    }
    let (w, h) = (gray.width(), gray.height());
    let at = |x: i64, y: i64| gray.sample_clamped(x, y, 0) as i32;
    let mut values = Vec::with_capacity(w as usize * h as usize);
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            let gx = (at(x + 1, y - 1) + 2 * at(x + 1, y) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2 * at(x - 1, y) + at(x - 1, y + 1));
            let gy = (at(x - 1, y + 1) + 2 * at(x, y + 1) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2 * at(x, y - 1) + at(x + 1, y - 1));
            values.push(((gx * gx + gy * gy) as f64).sqrt());
        }
    }
    Ok(GradientMap::new(w, h, values))
}

/// 5x5 box blur on a grayscale image, edge-replicated, requantized to 8 bits.
pub fn box_filter_5x5(gray: &Image) -> Result<Image, ImageError> {
    if gray.channels() != 1 {
        return Err(ImageError::NotGrayscale(gray.channels()));
    }
    let (w, h) = (gray.width(), gray.height());
    let mut pixels = Vec::with_capacity(w as usize * h as usize);
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            let mut sum: u32 = 0;
            for dy in -2..=2 {
                for dx in -2..=2 {
                    sum += gray.sample_clamped(x + dx, y + dy, 0) as u32;
                }
            }
            pixels.push((sum as f64 / 25.0).round() as u8);
        }
    }
    Ok(Image::from_pixels(w, h, 1, pixels).expect("same dimensions"))
}

/// Downscales by `factor > 1`. Output dimensions are `floor(dim / factor)`
/// and must come out at least 8x8. Sampling is bilinear at pixel centers
/// using the realized per-axis ratio, so the full source extent is covered.
pub fn downscale_bilinear(img: &Image, factor: f64) -> Result<Image, ImageError> {
    if !(factor > 1.0) || !factor.is_finite() {
        return Err(ImageError::BadFactor(factor));
    }
    let ow = (img.width() as f64 / factor).floor() as u32;
    let oh = (img.height() as f64 / factor).floor() as u32;
    if ow < 8 || oh < 8 {
        return Err(ImageError::TooSmall {
            width: ow,
            height: oh,
            op: "downscale",
            min: 8,
        });
    }
    let rx = img.width() as f64 / ow as f64;
    let ry = img.height() as f64 / oh as f64;
    let channels = img.channels();
    let mut pixels = Vec::with_capacity(ow as usize * oh as usize * channels as usize);
    for oy in 0..oh {
        let sy = ((oy as f64 + 0.5) * ry - 0.5).clamp(0.0, img.height() as f64 - 1.0);
        let y0 = sy.floor() as i64;
        let fy = sy - y0 as f64;
        for ox in 0..ow {
            let sx = ((ox as f64 + 0.5) * rx - 0.5).clamp(0.0, img.width() as f64 - 1.0);
            let x0 = sx.floor() as i64;
            let fx = sx - x0 as f64;
            for c in 0..channels {
                let p00 = img.sample_clamped(x0, y0, c) as f64;
                let p10 = img.sample_clamped(x0 + 1, y0, c) as f64;
                let p01 = img.sample_clamped(x0, y0 + 1, c) as f64;
                let p11 = img.sample_clamped(x0 + 1, y0 + 1, c) as f64;
                let top = p00 + (p10 - p00) * fx;
                let bot = p01 + (p11 - p01) * fx;
                let v = top + (bot - top) * fy;
                pixels.push(v.round().clamp(0.0, 255.0) as u8);
            }
        }
    }
    Ok(Image::from_pixels(ow, oh, channels, pixels).expect("computed dimensions"))
}

/// Rotates the image content by `radians` about the image center with
/// bilinear resampling; samples falling outside the source take `fill`.
/// Mainly a test and demo utility for the feature-matching stack.
pub fn rotate_about_center(img: &Image, radians: f64, fill: u8) -> Image {
    let (w, h) = (img.width(), img.height());
    let cx = (w as f64 - 1.0) / 2.0;
    let cy = (h as f64 - 1.0) / 2.0;
    let (sin, cos) = radians.sin_cos();
    let channels = img.channels();
    let mut pixels = Vec::with_capacity(w as usize * h as usize * channels as usize);
    for y in 0..h {
        for x in 0..w {
            let dx = x as f64 - cx;
            let dy = y as f64 - cy;
            // Inverse map: source = center + R(-radians) * offset.
            let sx = cx + dx * cos + dy * sin;
            let sy = cy - dx * sin + dy * cos;
            let inside = sx >= -0.5 && sx <= w as f64 - 0.5 && sy >= -0.5 && sy <= h as f64 - 0.5;
            for c in 0..channels {
                if !inside {
                    pixels.push(fill);
                    continue;
                }
                let x0 = sx.floor() as i64;
                let y0 = sy.floor() as i64;
                let fx = sx - x0 as f64;
                let fy = sy - y0 as f64;
                let p00 = img.sample_clamped(x0, y0, c) as f64;
                let p10 = img.sample_clamped(x0 + 1, y0, c) as f64;
                let p01 = img.sample_clamped(x0, y0 + 1, c) as f64;
                let p11 = img.sample_clamped(x0 + 1, y0 + 1, c) as f64;
                let top = p00 + (p10 - p00) * fx;
                let bot = p01 + (p11 - p01) * fx;
                let v = top + (bot - top) * fy;
                pixels.push(v.round().clamp(0.0, 255.0) as u8);
            }
        }
    }
    Image::from_pixels(w, h, channels, pixels).expect("same dimensions")
}
