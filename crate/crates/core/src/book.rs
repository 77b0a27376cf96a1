//! Compiles the code blocks in the book chapters as doctests so the guide
//! can never drift from the library.

#[doc = include_str!("../../../book/src/introduction.md")]
mod introduction {}

#[doc = include_str!("../../../book/src/geometry.md")]
mod geometry {}

#[doc = include_str!("../../../book/src/link-budget.md")]
mod link_budget {}

#[doc = include_str!("../../../book/src/kpis.md")]
mod kpis {}

#[doc = include_str!("../../../book/src/allocators.md")]
mod allocators {}

#[doc = include_str!("../../../book/src/environment.md")]
mod environment {}

#[doc = include_str!("../../../book/src/agent.md")]
mod agent {}

#[doc = include_str!("../../../book/src/campaigns.md")]
mod campaigns {}
