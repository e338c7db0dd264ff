//! CSV tables and model files.

pub mod csv;
pub mod model;

pub use self::csv::{read_dataset, read_points, Table};
pub use model::{load_model, save_model, Model};
