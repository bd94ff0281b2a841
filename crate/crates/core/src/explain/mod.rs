//! Attention heatmaps and confusion-matrix renderings from a trained model.

mod colormap;
mod confusion;
mod font;
mod heatmap;

pub use colormap::viridis;
pub use confusion::{render_confusion, save_confusion_png};
pub use heatmap::{crm_heatmap, save_heatmap_png, Heatmap};
