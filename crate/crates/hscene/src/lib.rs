//! File formats, model-backend protocol, annotation service and CLI on top
//! of [`hscene_core`].

pub mod backends;
pub mod cli;
pub mod config;
pub mod io;
pub mod service;

pub use hscene_core as core;
