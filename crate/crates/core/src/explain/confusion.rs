use std::path::Path;

use image::{Rgb, RgbImage};

use super::colormap::viridis;
use super::font::{draw_text, text_width};
use crate::error::{Error, Result};
use crate::training::Confusion;

const CELL: usize = 96;
const MARGIN: usize = 56;

/// Renders the 2x2 confusion matrix with verbatim cell counts. Rows are the
/// true class, columns the predicted class, ordered (positive, negative) —
/// usually ('G', 'N').
pub fn render_confusion(c: &Confusion, labels: (char, char)) -> RgbImage {
    // (row, col) in label order: [G][G] = TP, [G][N] = FN, [N][G] = FP, [N][N] = TN
    let cells = [
        [c.true_positive, c.false_negative],
        [c.false_positive, c.true_negative],
    ];
    let max = cells.iter().flatten().copied().max().unwrap_or(0).max(1);

    let side = MARGIN + 2 * CELL + 16;
    let mut img = RgbImage::from_pixel(side as u32, side as u32, Rgb([255, 255, 255]));

    for (row, row_cells) in cells.iter().enumerate() {
        for (col, &count) in row_cells.iter().enumerate() {
            let x0 = MARGIN + col * CELL;
            let y0 = MARGIN + row * CELL;
            let t = count as f64 / max as f64;
            let bg = viridis(0.15 + 0.7 * t);
            for y in y0..y0 + CELL {
                for x in x0..x0 + CELL {
                    img.put_pixel(x as u32, y as u32, Rgb(bg));
                }
            }
            let text = count.to_string();
            let scale = 2;
            let tw = text_width(&text, scale) as i64;
            let ink = if t > 0.6 {
                Rgb([0, 0, 0])
            } else {
                Rgb([255, 255, 255])
            };
            draw_text(
                &mut img,
                (x0 + CELL / 2) as i64 - tw / 2,
                (y0 + CELL / 2 - 7) as i64,
                &text,
                scale,
                ink,
            );
        }
    }

    let black = Rgb([0, 0, 0]);
    let (pos, neg) = labels;
    // column headers (predicted) and row labels (true)
    draw_text(&mut img, 12, (MARGIN / 2 - 4) as i64, "PRED", 1, black);
    for (col, ch) in [pos, neg].iter().enumerate() {
        let x = MARGIN + col * CELL + CELL / 2 - 5;
        draw_text(&mut img, x as i64, (MARGIN - 16) as i64, &ch.to_string(), 2, black);
    }
    for (row, ch) in [pos, neg].iter().enumerate() {
        let y = MARGIN + row * CELL + CELL / 2 - 7;
        draw_text(&mut img, (MARGIN - 24) as i64, y as i64, &ch.to_string(), 2, black);
    }
    img
}

pub fn save_confusion_png(c: &Confusion, labels: (char, char), path: &Path) -> Result<()> {
    render_confusion(c, labels).save(path).map_err(|e| Error::Image {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}
