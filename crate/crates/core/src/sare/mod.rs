//! Spoof-risk equalization: the variance of per-domain spoof risks, a
//! contrastive term on real faces, and their combination with BCE.

pub mod batch;
pub mod loss;
pub mod toy;

pub use batch::{build_megabatch, per_domain_budget, spoof_risks, DomainBatch, MegaBatch, Slice};
pub use loss::{
    bce_with_logit, sare_grad, sare_loss, sigmoid, supcon_loss, supcon_loss_grad, total_loss, variance,
    variance_grad, LossReport, RiskVector, DEFAULT_ALPHA, DEFAULT_BETA, DEFAULT_TAU,
};
pub use toy::{gradient_check, train_toy, Params, ToyConfig, ToyData, Trace, TraceRecord};
