pub mod eval;
pub mod gradcheck;
pub mod preview;
pub mod train;
