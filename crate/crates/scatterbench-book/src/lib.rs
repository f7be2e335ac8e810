//! mdbook cannot run a chapter's code blocks against the workspace
//! crates, so this harness includes every chapter as module docs and
//! lets `cargo test --doc` execute them. One module per chapter keeps
//! failures attributable.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/bench.md")]
pub mod bench {}

#[doc = include_str!("../../../book/src/transmission-matrix.md")]
pub mod transmission_matrix {}

#[doc = include_str!("../../../book/src/coherence.md")]
pub mod coherence {}

#[doc = include_str!("../../../book/src/bilinear.md")]
pub mod bilinear {}

#[doc = include_str!("../../../book/src/runs.md")]
pub mod runs {}
