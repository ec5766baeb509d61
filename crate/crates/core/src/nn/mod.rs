//! Dense MLPs, Adam and finite-difference verification.

pub mod checkpoint;
pub mod gradcheck;
mod mlp;
mod optim;

pub use mlp::{ForwardCache, Mlp};
pub use optim::{adam_step, clip_grad_norm, polyak_update, AdamState, GRAD_CLIP_NORM};
