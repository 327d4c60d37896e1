//! Image loading and dataset preparation: binary PGM/PPM input, bilinear
//! rescaling, per-seed splits, test-time Gaussian noise, and a synthetic
//! two-class bar-pattern generator for runs without external data.

use std::path::Path;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng as _;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::rng::Rng;

/// Load a grayscale image into a row-major luminance matrix in [0, 1].
/// Binary PGM (P5) is the native format; binary PPM (P6) is accepted and
/// converted with the standard luminance weights.
pub fn load_grayscale(path: &Path) -> Result<Array2<f64>> {
    let bytes = std::fs::read(path)?;
    parse_pnm(&bytes).map_err(|e| match e {
        Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })
}

fn parse_header_tokens(bytes: &[u8], n_tokens: usize) -> Result<(Vec<usize>, usize)> {
    // tokens separated by whitespace; '#' starts a comment running to end of line
    let mut tokens = Vec::new();
    let mut i = 0;
    while tokens.len() < n_tokens && i < bytes.len() {
        match bytes[i] {
            b'#' => {
                while i < bytes.len() && bytes[i] != b'\n' {
                    i += 1;
                }
            }
            c if c.is_ascii_whitespace() => i += 1,
            _ => {
                let start = i;
                while i < bytes.len() && !bytes[i].is_ascii_whitespace() && bytes[i] != b'#' {
                    i += 1;
                }
                let tok = std::str::from_utf8(&bytes[start..i])
                    .map_err(|_| Error::Parse("non-ascii header token".into()))?;
                tokens.push(
                    tok.parse::<usize>()
                        .map_err(|_| Error::Parse(format!("bad header token '{tok}'")))?,
                );
            }
        }
    }
    if tokens.len() < n_tokens {
        return Err(Error::Parse("truncated header".into()));
    }
    // exactly one whitespace byte separates the header from the raster
    if i >= bytes.len() {
        return Err(Error::Parse("missing raster data".into()));
    }
    Ok((tokens, i + 1))
}

pub fn parse_pnm(bytes: &[u8]) -> Result<Array2<f64>> {
    if bytes.len() < 2 {
        return Err(Error::Parse("not a PNM file".into()));
    }
    let channels = match &bytes[..2] {
        b"P5" => 1,
        b"P6" => 3,
        magic => {
            return Err(Error::Parse(format!(
                "unsupported format {:?} (binary P5/P6 expected)",
                String::from_utf8_lossy(magic)
            )))
        }
    };
    let (tokens, data_start) = parse_header_tokens(&bytes[2..], 3)?;
    let (width, height, maxval) = (tokens[0], tokens[1], tokens[2]);
    if width == 0 || height == 0 {
        return Err(Error::Parse("zero-dimension image".into()));
    }
    if maxval == 0 || maxval > 255 {
        return Err(Error::Parse(format!("unsupported maxval {maxval} (8-bit expected)")));
    }
    let data = &bytes[2 + data_start..];
    let needed = width * height * channels;
    if data.len() < needed {
        return Err(Error::Parse(format!("raster truncated: {} < {needed}", data.len())));
    }
    let scale = 1.0 / maxval as f64;
    let mut img = Array2::zeros((height, width));
    for r in 0..height {
        for c in 0..width {
            let i = (r * width + c) * channels;
            let v = if channels == 1 {
                data[i] as f64
            } else {
                0.299 * data[i] as f64 + 0.587 * data[i + 1] as f64 + 0.114 * data[i + 2] as f64
            };
            img[[r, c]] = (v * scale).clamp(0.0, 1.0);
        }
    }
    Ok(img)
}

/// Write a [0, 1] matrix as an 8-bit binary PGM.
pub fn save_pgm(path: &Path, img: &Array2<f64>) -> Result<()> {
    let (rows, cols) = img.dim();
    if rows == 0 || cols == 0 {
        return Err(Error::Dimension("cannot save empty image".into()));
    }
    let mut out = format!("P5\n{cols} {rows}\n255\n").into_bytes();
    out.extend(img.iter().map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8));
    std::fs::write(path, out)?;
    Ok(())
}

/// Bilinear resampling to the given output shape.
pub fn rescale_bilinear(img: &Array2<f64>, out_rows: usize, out_cols: usize) -> Array2<f64> {
    let (rows, cols) = img.dim();
    assert!(rows > 0 && cols > 0 && out_rows > 0 && out_cols > 0);
    let mut out = Array2::zeros((out_rows, out_cols));
    let rs = rows as f64 / out_rows as f64;
    let cs = cols as f64 / out_cols as f64;
    for r in 0..out_rows {
        let y = ((r as f64 + 0.5) * rs - 0.5).clamp(0.0, (rows - 1) as f64);
        let y0 = y.floor() as usize;
        let y1 = (y0 + 1).min(rows - 1);
        let fy = y - y0 as f64;
        for c in 0..out_cols {
            let x = ((c as f64 + 0.5) * cs - 0.5).clamp(0.0, (cols - 1) as f64);
            let x0 = x.floor() as usize;
            let x1 = (x0 + 1).min(cols - 1);
            let fx = x - x0 as f64;
            let top = img[[y0, x0]] * (1.0 - fx) + img[[y0, x1]] * fx;
            let bot = img[[y1, x0]] * (1.0 - fx) + img[[y1, x1]] * fx;
            out[[r, c]] = top * (1.0 - fy) + bot * fy;
        }
    }
    out
}

/// Rescale so the longest side equals `target`, preserving aspect ratio.
pub fn rescale_longest_side(img: &Array2<f64>, target: usize) -> Array2<f64> {
    let (rows, cols) = img.dim();
    let longest = rows.max(cols);
    if longest == target {
        return img.clone();
    }
    let f = target as f64 / longest as f64;
    let out_rows = ((rows as f64 * f).round() as usize).max(1);
    let out_cols = ((cols as f64 * f).round() as usize).max(1);
    rescale_bilinear(img, out_rows, out_cols)
}

/// Deterministic equal split of `items` into (train, test), then a uniform
/// subsample of `n_sample` items from each half, without replacement.
pub fn split_and_sample<T: Clone>(items: &[T], n_sample: usize, rng: &mut Rng) -> Result<(Vec<T>, Vec<T>)> {
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.shuffle(rng);
    let half = items.len() / 2;
    if n_sample > half || n_sample > items.len() - half {
        return Err(Error::Contract(format!(
            "split_and_sample: n_sample {n_sample} exceeds half-size {half}"
        )));
    }
    let train_pool = &order[..half];
    let test_pool = &order[half..];
    let pick = |pool: &[usize], rng: &mut Rng| -> Vec<T> {
        let chosen = pool.choose_multiple(rng, n_sample);
        chosen.map(|&i| items[i].clone()).collect()
    };
    let train = pick(train_pool, rng);
    let test = pick(test_pool, rng);
    Ok((train, test))
}

/// Per-pixel zero-mean Gaussian noise with the given standard deviation,
/// before clamping.
pub fn gaussian_noise_field(rows: usize, cols: usize, sigma: f64, rng: &mut Rng) -> Array2<f64> {
    assert!(sigma >= 0.0);
    if sigma == 0.0 {
        return Array2::zeros((rows, cols));
    }
    let dist = Normal::new(0.0, sigma).expect("valid sigma");
    Array2::from_shape_simple_fn((rows, cols), || dist.sample(rng))
}

/// Additive Gaussian noise, result clamped into [0, 1].
pub fn add_gaussian_noise(img: &Array2<f64>, sigma: f64, rng: &mut Rng) -> Array2<f64> {
    if sigma == 0.0 {
        return img.clone();
    }
    let (rows, cols) = img.dim();
    let noise = gaussian_noise_field(rows, cols, sigma, rng);
    let mut out = img + &noise;
    out.mapv_inplace(|v| v.clamp(0.0, 1.0));
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyntheticClass {
    Target,
    Clutter,
}

/// Geometry and texture knobs of the synthetic generator.
#[derive(Debug, Clone, Copy)]
pub struct SyntheticParams {
    pub bar_len: usize,
    pub bar_thickness: usize,
    /// Row offset between the two horizontal bars of the motif.
    pub bar_gap: usize,
    /// Maximum absolute position jitter of the whole motif, in pixels.
    pub jitter: usize,
    pub contrast_lo: f64,
    pub contrast_hi: f64,
    /// Amplitude of the uniform background texture.
    pub background_amp: f64,
}

impl Default for SyntheticParams {
    fn default() -> SyntheticParams {
        SyntheticParams {
            bar_len: 20,
            bar_thickness: 3,
            bar_gap: 12,
            jitter: 6,
            contrast_lo: 0.7,
            contrast_hi: 1.0,
            background_amp: 0.12,
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum BarOrientation {
    Horizontal,
    Diag45,
    Vertical,
    Diag135,
}

fn bar_extent(o: BarOrientation, len: usize, thick: usize) -> (usize, usize) {
    match o {
        BarOrientation::Horizontal => (thick, len),
        BarOrientation::Vertical => (len, thick),
        BarOrientation::Diag45 | BarOrientation::Diag135 => (len + thick - 1, len),
    }
}

fn draw_bar(img: &mut Array2<f64>, o: BarOrientation, r0: usize, c0: usize, len: usize, thick: usize, value: f64) {
    let (rows, cols) = img.dim();
    let mut put = |r: usize, c: usize| {
        if r < rows && c < cols {
            img[[r, c]] = value;
        }
    };
    for t in 0..len {
        for s in 0..thick {
            match o {
                BarOrientation::Horizontal => put(r0 + s, c0 + t),
                BarOrientation::Vertical => put(r0 + t, c0 + s),
                BarOrientation::Diag45 => put(r0 + t + s, c0 + t),
                BarOrientation::Diag135 => put(r0 + t + s, c0 + len - 1 - t),
            }
        }
    }
}

/// The motif: two horizontal bars joined by one vertical bar on the left,
/// drawn at `value` into a (bar_len x bar_len) canvas of zeros.
pub fn motif_mask(p: &SyntheticParams) -> Array2<f64> {
    let mut mask = Array2::zeros((p.bar_len, p.bar_len));
    draw_motif(&mut mask, 0, 0, p, 1.0);
    mask
}

fn draw_motif(img: &mut Array2<f64>, r0: usize, c0: usize, p: &SyntheticParams, value: f64) {
    draw_bar(img, BarOrientation::Horizontal, r0, c0, p.bar_len, p.bar_thickness, value);
    draw_bar(img, BarOrientation::Horizontal, r0 + p.bar_gap, c0, p.bar_len, p.bar_thickness, value);
    draw_bar(img, BarOrientation::Vertical, r0, c0, p.bar_len, p.bar_thickness, value);
}

pub fn generate_synthetic(class: SyntheticClass, size: usize, rng: &mut Rng) -> Result<Array2<f64>> {
    generate_synthetic_with(&SyntheticParams::default(), class, size, rng)
}

pub fn generate_synthetic_with(
    p: &SyntheticParams,
    class: SyntheticClass,
    size: usize,
    rng: &mut Rng,
) -> Result<Array2<f64>> {
    if size < 32 {
        return Err(Error::Contract(format!("synthetic size {size} below minimum 32")));
    }
    let mut img = if p.background_amp > 0.0 {
        Array2::from_shape_simple_fn((size, size), || rng.gen_range(0.0..p.background_amp))
    } else {
        Array2::zeros((size, size))
    };
    let contrast = if p.contrast_hi > p.contrast_lo {
        rng.gen_range(p.contrast_lo..p.contrast_hi)
    } else {
        p.contrast_lo
    };
    match class {
        SyntheticClass::Target => {
            let center = (size - p.bar_len) / 2;
            let (dr, dc) = if p.jitter > 0 {
                let j = p.jitter as i64;
                (rng.gen_range(-j..=j), rng.gen_range(-j..=j))
            } else {
                (0, 0)
            };
            let r0 = (center as i64 + dr).clamp(0, (size - p.bar_len) as i64) as usize;
            let c0 = (center as i64 + dc).clamp(0, (size - p.bar_len) as i64) as usize;
            draw_motif(&mut img, r0, c0, p, contrast);
        }
        SyntheticClass::Clutter => {
            // same number of bars as the motif, at random positions/orientations
            for _ in 0..3 {
                let o = match rng.gen_range(0..4) {
                    0 => BarOrientation::Horizontal,
                    1 => BarOrientation::Diag45,
                    2 => BarOrientation::Vertical,
                    _ => BarOrientation::Diag135,
                };
                let (er, ec) = bar_extent(o, p.bar_len, p.bar_thickness);
                if er > size || ec > size {
                    return Err(Error::Contract(format!("bar extent {er}x{ec} exceeds image size {size}")));
                }
                let r0 = rng.gen_range(0..=(size - er));
                let c0 = rng.gen_range(0..=(size - ec));
                draw_bar(&mut img, o, r0, c0, p.bar_len, p.bar_thickness, contrast);
            }
        }
    }
    Ok(img)
}

/// Where the motif sits when jitter is zero.
pub fn canonical_origin(size: usize, p: &SyntheticParams) -> (usize, usize) {
    let center = (size - p.bar_len) / 2;
    (center, center)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_create;

    #[test]
    fn pgm_values_scale_linearly() {
        let bytes = b"P5\n2 2\n255\n\x00\xff\x00\xff";
        let img = parse_pnm(bytes).unwrap();
        assert_eq!(img[[0, 0]], 0.0);
        assert_eq!(img[[0, 1]], 1.0);
        assert_eq!(img[[1, 0]], 0.0);
        assert_eq!(img[[1, 1]], 1.0);
    }

    #[test]
    fn all_black_loads_as_zeros() {
        let bytes = b"P5\n3 1\n255\n\x00\x00\x00";
        let img = parse_pnm(bytes).unwrap();
        assert!(img.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn header_comments_are_skipped() {
        let bytes = b"P5\n# made by hand\n2 1\n# another\n255\n\x80\x40";
        let img = parse_pnm(bytes).unwrap();
        assert_eq!(img.dim(), (1, 2));
    }

    #[test]
    fn ppm_converts_with_luminance_weights() {
        let bytes = b"P6\n1 1\n255\n\xff\x00\x00";
        let img = parse_pnm(bytes).unwrap();
        assert!((img[[0, 0]] - 0.299).abs() < 1e-9);
    }

    #[test]
    fn malformed_inputs_are_rejected() {
        assert!(parse_pnm(b"P3\n1 1\n255\n0 0 0").is_err());
        assert!(parse_pnm(b"P5\n0 2\n255\n").is_err());
        assert!(parse_pnm(b"P5\n2 2\n255\n\x00").is_err());
        assert!(parse_pnm(b"P5\n2 2\n65535\n\x00\x00\x00\x00").is_err());
        assert!(load_grayscale(Path::new("/no/such/file.pgm")).is_err());
    }

    #[test]
    fn save_load_round_trip_is_idempotent() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.pgm");
        let mut rng = rng_create(1);
        let img = Array2::from_shape_simple_fn((9, 7), || rng.gen::<f64>());
        save_pgm(&path, &img).unwrap();
        let once = load_grayscale(&path).unwrap();
        save_pgm(&path, &once).unwrap();
        let twice = load_grayscale(&path).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn split_is_deterministic_equal_and_disjoint() {
        let items: Vec<usize> = (0..436).collect();
        let (train_a, test_a) = split_and_sample(&items, 175, &mut rng_create(3)).unwrap();
        let (train_b, test_b) = split_and_sample(&items, 175, &mut rng_create(3)).unwrap();
        assert_eq!(train_a, train_b);
        assert_eq!(test_a, test_b);
        assert_eq!(train_a.len(), 175);
        assert_eq!(test_a.len(), 175);
        let train_set: std::collections::HashSet<_> = train_a.iter().collect();
        assert!(test_a.iter().all(|x| !train_set.contains(x)));
    }

    #[test]
    fn full_subsample_returns_the_whole_half() {
        let items: Vec<usize> = (0..10).collect();
        let (train, test) = split_and_sample(&items, 5, &mut rng_create(0)).unwrap();
        let mut all: Vec<usize> = train.into_iter().chain(test).collect();
        all.sort_unstable();
        assert_eq!(all, items);
        assert!(split_and_sample(&items, 6, &mut rng_create(0)).is_err());
    }

    #[test]
    fn zero_sigma_noise_is_identity() {
        let img = Array2::from_elem((8, 8), 0.5);
        let noisy = add_gaussian_noise(&img, 0.0, &mut rng_create(0));
        assert_eq!(img, noisy);
    }

    #[test]
    fn noise_std_matches_sigma_before_clamping() {
        let field = gaussian_noise_field(400, 400, 0.3, &mut rng_create(7));
        let n = field.len() as f64;
        let mean = field.sum() / n;
        let var = field.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let std = var.sqrt();
        assert!((0.29..=0.31).contains(&std), "std = {std}");
    }

    #[test]
    fn noisy_pixels_stay_in_range() {
        let img = Array2::from_elem((64, 64), 0.5);
        let noisy = add_gaussian_noise(&img, 0.3, &mut rng_create(2));
        assert!(noisy.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn zero_jitter_zero_noise_places_motif_at_canonical_coordinates() {
        let p = SyntheticParams { jitter: 0, background_amp: 0.0, ..SyntheticParams::default() };
        let img = generate_synthetic_with(&p, SyntheticClass::Target, 64, &mut rng_create(0)).unwrap();
        let (r0, c0) = canonical_origin(64, &p);
        let mask = motif_mask(&p);
        for r in 0..64 {
            for c in 0..64 {
                let inside = r >= r0 && r < r0 + p.bar_len && c >= c0 && c < c0 + p.bar_len;
                let expected_on = inside && mask[[r - r0, c - c0]] > 0.0;
                assert_eq!(img[[r, c]] > 0.0, expected_on, "pixel ({r},{c})");
            }
        }
    }

    #[test]
    fn targets_differ_only_by_jitter_and_contrast() {
        let p = SyntheticParams { background_amp: 0.0, ..SyntheticParams::default() };
        let mut rng = rng_create(5);
        let a = generate_synthetic_with(&p, SyntheticClass::Target, 64, &mut rng).unwrap();
        let b = generate_synthetic_with(&p, SyntheticClass::Target, 64, &mut rng).unwrap();
        let count_a = a.iter().filter(|&&v| v > 0.0).count();
        let count_b = b.iter().filter(|&&v| v > 0.0).count();
        // same motif shape, so the same number of lit pixels
        assert_eq!(count_a, count_b);
        assert_ne!(a, b);
    }

    #[test]
    fn synthetic_images_are_in_range_and_sized() {
        let mut rng = rng_create(9);
        for class in [SyntheticClass::Target, SyntheticClass::Clutter] {
            let img = generate_synthetic(class, 64, &mut rng).unwrap();
            assert_eq!(img.dim(), (64, 64));
            assert!(img.iter().all(|&v| (0.0..=1.0).contains(&v) && v.is_finite()));
        }
        assert!(generate_synthetic(SyntheticClass::Target, 16, &mut rng).is_err());
    }

    #[test]
    fn bilinear_rescale_preserves_constant_images() {
        let img = Array2::from_elem((40, 30), 0.37);
        let out = rescale_bilinear(&img, 17, 11);
        assert!(out.iter().all(|&v| (v - 0.37).abs() < 1e-12));
        let out = rescale_longest_side(&img, 20);
        assert_eq!(out.dim(), (20, 15));
    }
}
