//! Intensity-to-latency encoding (S1) and first-spike max pooling (C1).

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::types::{Latency, LatencyMap};

use super::kernels::{convolve_valid, OrientedKernel};

/// Encode one rescaled image into per-orientation latency maps.
///
/// Each oriented kernel is convolved over the image; the absolute response r
/// becomes the latency 1 - r / r_max, where r_max is the strongest response
/// at this scale, so stronger edges spike earlier. Responses below
/// `threshold_frac * r_max` never spike. A winner-take-all across
/// orientations then keeps only the best-matching orientation per location.
pub fn s1_encode(
    image: &Array2<f64>,
    scale: usize,
    kernels: &[OrientedKernel],
    threshold_frac: f64,
) -> Result<Vec<LatencyMap>> {
    let (rows, cols) = image.dim();
    if rows == 0 || cols == 0 {
        return Err(Error::Dimension("empty image".into()));
    }
    let responses: Vec<Array2<f64>> = kernels
        .iter()
        .map(|k| convolve_valid(image, &k.kernel).map(|r| r.mapv(f64::abs)))
        .collect::<Result<_>>()?;
    let (out_rows, out_cols) = responses[0].dim();
    let r_max = responses
        .iter()
        .flat_map(|r| r.iter().cloned())
        .fold(0.0f64, f64::max);
    let mut maps: Vec<LatencyMap> = (0..kernels.len())
        .map(|o| LatencyMap::never(scale, o, out_rows, out_cols))
        .collect();
    if r_max <= 0.0 {
        // uniform image: zero-mean kernels respond nowhere
        return Ok(maps);
    }
    let threshold = threshold_frac * r_max;
    for r in 0..out_rows {
        for c in 0..out_cols {
            // winner-take-all: only the strongest orientation may spike here
            let mut best_o = 0;
            let mut best_r = responses[0][[r, c]];
            for (o, resp) in responses.iter().enumerate().skip(1) {
                if resp[[r, c]] > best_r {
                    best_r = resp[[r, c]];
                    best_o = o;
                }
            }
            if best_r >= threshold && best_r > 0.0 {
                maps[best_o].grid[[r, c]] = Latency::at(1.0 - best_r / r_max);
            }
        }
    }
    Ok(maps)
}

/// Max pooling in the first-spike code: each C1 cell propagates the earliest
/// spike of its window, i.e. the minimum latency; "never" only if the whole
/// window stays silent.
pub fn c1_pool(s1_maps: &[LatencyMap], window: usize, stride: usize) -> Result<Vec<LatencyMap>> {
    if !(window >= stride && stride >= 1) {
        return Err(Error::Contract(format!("need window >= stride >= 1, got {window}/{stride}")));
    }
    s1_maps
        .iter()
        .map(|map| {
            let (rows, cols) = map.grid.dim();
            if rows < window || cols < window {
                return Err(Error::Dimension(format!(
                    "c1 window {window} larger than map {rows}x{cols}"
                )));
            }
            let out_rows = (rows - window) / stride + 1;
            let out_cols = (cols - window) / stride + 1;
            let mut out = LatencyMap::never(map.scale, map.channel, out_rows, out_cols);
            for i in 0..out_rows {
                for j in 0..out_cols {
                    let mut best = Latency::Never;
                    for u in 0..window {
                        for v in 0..window {
                            let t = map.grid[[i * stride + u, j * stride + v]];
                            if t < best {
                                best = t;
                            }
                        }
                    }
                    out.grid[[i, j]] = best;
                }
            }
            Ok(out)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::kernels::oriented_kernels;
    use ndarray::Array2;

    #[test]
    fn uniform_image_never_spikes() {
        let img = Array2::from_elem((32, 32), 0.6);
        let maps = s1_encode(&img, 0, &oriented_kernels(4), 0.05).unwrap();
        for m in &maps {
            assert!(m.grid.iter().all(|t| t.is_never()));
        }
    }

    #[test]
    fn vertical_step_edge_wins_the_vertical_orientation() {
        // columns 0..15 dark, 16.. bright
        let img = Array2::from_shape_fn((32, 32), |(_, c)| if c < 16 { 0.0 } else { 1.0 });
        let kernels = oriented_kernels(4);
        let maps = s1_encode(&img, 0, &kernels, 0.05).unwrap();
        // earliest spike overall sits on the vertical-orientation map (index 2)
        let earliest_per_o: Vec<Latency> = maps
            .iter()
            .map(|m| m.grid.iter().cloned().min().unwrap())
            .collect();
        let best_o = (0..4).min_by_key(|&o| earliest_per_o[o]).unwrap();
        assert_eq!(best_o, 2, "latencies per orientation: {earliest_per_o:?}");
        // at the edge column the winner is vertical and the others are silent
        let edge_col = 16 - super::super::kernels::KERNEL_SIZE / 2 - 1;
        let mid_row = maps[2].rows() / 2;
        assert!(!maps[2].grid[[mid_row, edge_col]].is_never());
        for o in [0usize, 1, 3] {
            assert!(maps[o].grid[[mid_row, edge_col]].is_never());
        }
    }

    #[test]
    fn contrast_scaling_preserves_latency_order() {
        let mut rng = crate::rng::rng_create(4);
        use rand::Rng as _;
        let img = Array2::from_shape_simple_fn((24, 24), || rng.gen::<f64>());
        let double = img.mapv(|v| v * 2.0);
        let kernels = oriented_kernels(4);
        let a = s1_encode(&img, 0, &kernels, 0.05).unwrap();
        let b = s1_encode(&double, 0, &kernels, 0.05).unwrap();
        let collect = |maps: &[LatencyMap]| {
            let mut spikes: Vec<(usize, usize, usize, f64)> = Vec::new();
            for m in maps {
                for ((r, c), t) in m.grid.indexed_iter() {
                    if let Some(t) = t.finite() {
                        spikes.push((m.channel, r, c, t));
                    }
                }
            }
            spikes.sort_by(|x, y| x.3.partial_cmp(&y.3).unwrap().then(x.0.cmp(&y.0)).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
            spikes.into_iter().map(|(o, r, c, _)| (o, r, c)).collect::<Vec<_>>()
        };
        assert_eq!(collect(&a), collect(&b));
    }

    #[test]
    fn pooling_propagates_the_earliest_spike() {
        let mut map = LatencyMap::never(0, 0, 8, 8);
        map.grid[[3, 2]] = Latency::at(0.3);
        let pooled = c1_pool(std::slice::from_ref(&map), 4, 4).unwrap();
        assert_eq!(pooled[0].grid.dim(), (2, 2));
        assert_eq!(pooled[0].grid[[0, 0]], Latency::at(0.3));
        assert!(pooled[0].grid[[0, 1]].is_never());
        assert!(pooled[0].grid[[1, 0]].is_never());
        assert!(pooled[0].grid[[1, 1]].is_never());
    }

    #[test]
    fn all_silent_windows_pool_to_never() {
        let map = LatencyMap::never(0, 1, 9, 9);
        let pooled = c1_pool(std::slice::from_ref(&map), 3, 3).unwrap();
        assert!(pooled[0].grid.iter().all(|t| t.is_never()));
    }

    #[test]
    fn overlapping_windows_share_the_earliest_spike() {
        let mut map = LatencyMap::never(0, 0, 8, 8);
        map.grid[[2, 2]] = Latency::at(0.2);
        // stride 2 with window 4: windows (0,0) and (1,1) both cover (2,2)
        let pooled = c1_pool(std::slice::from_ref(&map), 4, 2, ).unwrap();
        assert_eq!(pooled[0].grid[[0, 0]], Latency::at(0.2));
        assert_eq!(pooled[0].grid[[1, 1]], Latency::at(0.2));
    }

    #[test]
    fn oversized_window_is_a_dimension_error() {
        let map = LatencyMap::never(0, 0, 4, 4);
        assert!(c1_pool(std::slice::from_ref(&map), 7, 6).is_err());
    }
}
