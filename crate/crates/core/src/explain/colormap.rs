/// Perceptually uniform colormap (viridis), linearly interpolated between
/// anchor points sampled every 1/16 of the range.
const ANCHORS: [(f64, f64, f64); 17] = [
    (0.267004, 0.004874, 0.329415),
    (0.278826, 0.076296, 0.402434),
    (0.282623, 0.140926, 0.457517),
    (0.270595, 0.204520, 0.501350),
    (0.253935, 0.265254, 0.529983),
    (0.230341, 0.318626, 0.545695),
    (0.206756, 0.371758, 0.553117),
    (0.183898, 0.422383, 0.556944),
    (0.163625, 0.471133, 0.558148),
    (0.144759, 0.519093, 0.556572),
    (0.127568, 0.566949, 0.550556),
    (0.119423, 0.611141, 0.538982),
    (0.134692, 0.658636, 0.517649),
    (0.180653, 0.701402, 0.488189),
    (0.266941, 0.748751, 0.440573),
    (0.477504, 0.821444, 0.318195),
    (0.993248, 0.906157, 0.143936),
];

/// Maps t in [0, 1] to an RGB triple; out-of-range inputs are clamped.
pub fn viridis(t: f64) -> [u8; 3] {
    let t = t.clamp(0.0, 1.0);
    let scaled = t * (ANCHORS.len() - 1) as f64;
    let i = (scaled.floor() as usize).min(ANCHORS.len() - 2);
    let frac = scaled - i as f64;
    let (r0, g0, b0) = ANCHORS[i];
    let (r1, g1, b1) = ANCHORS[i + 1];
    [
        ((r0 + (r1 - r0) * frac) * 255.0).round() as u8,
        ((g0 + (g1 - g0) * frac) * 255.0).round() as u8,
        ((b0 + (b1 - b0) * frac) * 255.0).round() as u8,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoints_and_clamping() {
        assert_eq!(viridis(0.0), viridis(-5.0));
        assert_eq!(viridis(1.0), viridis(2.0));
        let low = viridis(0.0);
        let high = viridis(1.0);
        // dark purple to bright yellow
        assert!(low[2] > low[1]);
        assert!(high[0] > 200 && high[1] > 200 && high[2] < 60);
    }
}
