//! File formats, parallel drivers, run manifest, review API and CLI around
//! `rulediff-core`.

pub mod cli;
pub mod formats;
pub mod manifest;
pub mod parallel;
pub mod render;
pub mod review;
pub mod sarif;
pub mod server;
pub mod synthetic;
