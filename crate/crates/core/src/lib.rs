pub mod stats;
pub mod survey;
pub mod prompt;
pub mod analysis;
pub mod gateway;
pub mod lens;
pub mod synth;
pub mod trace;
