//! Compositional motor control: gated mixtures of incrementally trained
//! sub-controllers.
//!
//! A compositional controller sums the outputs of several sub-controllers,
//! weighted by a per-task gating row. Each new task trains one fresh
//! sub-controller together with that task's gating coefficients; everything
//! trained before stays frozen, so earlier skills are never forgotten.
//!
//! Two experiment drivers are included:
//!
//! * [`periodic`] reproduces periodic target functions with recurrent
//!   sub-controllers, comparing training from scratch against training on
//!   top of pre-learned basis functions.
//! * [`styles`] learns three locomotion styles (straight, left, right) for a
//!   planar snake whose joints are driven by a chain of coupled oscillators
//!   ([`cpg`]) in an anisotropic-friction simulator ([`snake`]).
//!
//! The black-box search behind both lives in [`optimizer`]; file formats and
//! the command-line front end live in [`io`] and [`cli`].

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod controller;
pub mod cpg;
pub mod error;
pub mod io;
pub mod optimizer;
pub mod periodic;
pub mod seeding;
pub mod snake;
pub mod styles;

pub use error::{Error, Result};
