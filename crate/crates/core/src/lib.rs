pub mod bench;
pub mod config;
pub mod debug;
pub mod kb;
pub mod llm;
pub mod multimodal;
pub mod pipeline;
pub mod refine;
pub mod sim;
pub mod taxonomy;
pub mod verilog;
