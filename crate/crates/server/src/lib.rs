//! HTTP service and command line front end for covermine.
//!
//! [`api::router`] builds the axum router over one shared
//! [`covermine::session::Session`]; [`commands`] holds the headless verbs
//! used by the `covermine` binary.

pub mod api;
pub mod commands;
pub mod config;
