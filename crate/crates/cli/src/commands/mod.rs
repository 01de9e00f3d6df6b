pub mod bench;
pub mod history;
pub mod replay;
pub mod serve;
pub mod summary;
pub mod synth_stream;
pub mod train;
