pub mod checkpoint;
pub mod matrix_market;

pub use checkpoint::Checkpoint;
