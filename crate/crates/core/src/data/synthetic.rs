use std::fs;
use std::path::Path;

use image::{Rgb, RgbImage};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::manifest::{DatasetManifest, IngestLayout};
use crate::error::{Error, Result};
use crate::nn::derive_seed;

/// Writes a deterministic two-class smoke dataset under `dir`: dark noisy
/// squares, half of them carrying a bright disc (the positive class). Files
/// land in `glaucoma/` and `normal/` folders so the normal ingest path runs.
pub fn generate_disc_dataset(
    dir: &Path,
    total: usize,
    image_size: u32,
    seed: u64,
) -> Result<DatasetManifest> {
    let per_class = total / 2;
    for class in ["normal", "glaucoma"] {
        fs::create_dir_all(dir.join(class)).map_err(|e| Error::io(dir.join(class), e))?;
    }
    for i in 0..total {
        let with_disc = i >= per_class;
        let class = if with_disc { "glaucoma" } else { "normal" };
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[0x646973, i as u64]));
        let img = disc_image(image_size, with_disc, &mut rng);
        let path = dir.join(class).join(format!("{i:04}.png"));
        img.save(&path).map_err(|e| Error::Image {
            path: path.clone(),
            message: e.to_string(),
        })?;
    }
    DatasetManifest::ingest(dir, IngestLayout::ClassFolders, "synthetic-disc")
}

fn disc_image(size: u32, with_disc: bool, rng: &mut ChaCha8Rng) -> RgbImage {
    let mut img = RgbImage::new(size, size);
    for pixel in img.pixels_mut() {
        let v = rng.random_range(20..70u32) as u8;
        *pixel = Rgb([v, v / 2, v / 3]);
    }
    if with_disc {
        let radius = rng.random_range(size as f64 * 0.15..size as f64 * 0.25);
        let cx = rng.random_range(radius..size as f64 - radius);
        let cy = rng.random_range(radius..size as f64 - radius);
        let brightness = rng.random_range(200..255u32) as u8;
        for y in 0..size {
            for x in 0..size {
                let d2 = (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2);
                if d2 <= radius * radius {
                    img.put_pixel(x, y, Rgb([brightness, brightness, brightness / 2]));
                }
            }
        }
    }
    img
}
