use ndarray::Array4;

use crate::tensor::FeatureMap;

const SOBEL_X: [[f64; 3]; 3] = [[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]];
const SOBEL_Y: [[f64; 3]; 3] = [[-1.0, -2.0, -1.0], [0.0, 0.0, 0.0], [1.0, 2.0, 1.0]];

/// Guard against an unbounded 1/magnitude derivative at flat regions.
const MAGNITUDE_FLOOR: f64 = 1e-12;

/// Depthwise Sobel gradient magnitude with replicate padding.
///
/// The kernels are fixed, not learnable; a constant input therefore yields an
/// exactly zero edge map.
pub fn edge_map(f: &FeatureMap) -> FeatureMap {
    let (out, _) = edge_map_train(f);
    out
}

#[derive(Debug, Clone)]
pub struct EdgeCache {
    gx: Array4<f64>,
    gy: Array4<f64>,
    magnitude: Array4<f64>,
}

pub fn edge_map_train(f: &FeatureMap) -> (FeatureMap, EdgeCache) {
    let x = f.data();
    let (batch, h, w, c) = x.dim();
    let mut gx = Array4::<f64>::zeros((batch, h, w, c));
    let mut gy = Array4::<f64>::zeros((batch, h, w, c));
    let mut mag = Array4::<f64>::zeros((batch, h, w, c));
    for b in 0..batch {
        for i in 0..h {
            for j in 0..w {
                for ch in 0..c {
                    let mut sx = 0.0;
                    let mut sy = 0.0;
                    for (di, row) in SOBEL_X.iter().enumerate() {
                        // replicate padding: clamp the sampled coordinate
                        let ii = (i as isize + di as isize - 1).clamp(0, h as isize - 1) as usize;
                        for (dj, &kx) in row.iter().enumerate() {
                            let jj =
                                (j as isize + dj as isize - 1).clamp(0, w as isize - 1) as usize;
                            let v = x[[b, ii, jj, ch]];
                            sx += kx * v;
                            sy += SOBEL_Y[di][dj] * v;
                        }
                    }
                    gx[[b, i, j, ch]] = sx;
                    gy[[b, i, j, ch]] = sy;
                    mag[[b, i, j, ch]] = (sx * sx + sy * sy).sqrt();
                }
            }
        }
    }
    (
        FeatureMap::from_computed(mag.clone()),
        EdgeCache {
            gx,
            gy,
            magnitude: mag,
        },
    )
}

/// Adjoint of the Sobel magnitude, including the replicate-padding clamp.
pub fn edge_map_backward(cache: &EdgeCache, grad_out: &Array4<f64>) -> Array4<f64> {
    let (batch, h, w, c) = grad_out.dim();
    let mut grad_x = Array4::<f64>::zeros((batch, h, w, c));
    for b in 0..batch {
        for i in 0..h {
            for j in 0..w {
                for ch in 0..c {
                    let g = grad_out[[b, i, j, ch]];
                    if g == 0.0 {
                        continue;
                    }
                    let m = cache.magnitude[[b, i, j, ch]].max(MAGNITUDE_FLOOR);
                    let ggx = g * cache.gx[[b, i, j, ch]] / m;
                    let ggy = g * cache.gy[[b, i, j, ch]] / m;
                    for (di, row) in SOBEL_X.iter().enumerate() {
                        let ii = (i as isize + di as isize - 1).clamp(0, h as isize - 1) as usize;
                        for (dj, &kx) in row.iter().enumerate() {
                            let jj =
                                (j as isize + dj as isize - 1).clamp(0, w as isize - 1) as usize;
                            grad_x[[b, ii, jj, ch]] += ggx * kx + ggy * SOBEL_Y[di][dj];
                        }
                    }
                }
            }
        }
    }
    grad_x
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array4;

    #[test]
    fn constant_field_has_zero_gradient() {
        let f = FeatureMap::new(Array4::from_elem((1, 4, 5, 2), 5.0)).unwrap();
        let e = edge_map(&f);
        assert!(e.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn outputs_are_nonnegative() {
        let f = FeatureMap::new(Array4::from_shape_fn((2, 3, 3, 2), |(b, i, j, c)| {
            (b + i * 3 + j + c) as f64 * 0.7 - 2.0
        }))
        .unwrap();
        let e = edge_map(&f);
        assert!(e.data().iter().all(|&v| v >= 0.0));
    }
}
