pub mod app;
pub mod mmio;

pub use app::run;
pub use mmio::{format_matrix, parse_matrix, read_matrix, write_matrix, MmError};
