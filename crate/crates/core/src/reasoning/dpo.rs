use serde::{Deserialize, Serialize};

use super::ReasoningError;

/// Sequence log-probabilities of the chosen (`w`) and rejected (`l`) traces
/// under the trained policy and the frozen reference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DpoInputs {
    pub logp_w_policy: f64,
    pub logp_l_policy: f64,
    pub logp_w_ref: f64,
    pub logp_l_ref: f64,
    pub beta: f64,
}

impl DpoInputs {
    pub fn validate(&self) -> Result<(), ReasoningError> {
        let all = [self.logp_w_policy, self.logp_l_policy, self.logp_w_ref, self.logp_l_ref, self.beta];
        if all.iter().any(|x| !x.is_finite()) {
            return Err(ReasoningError::Numeric("non-finite DPO input".into()));
        }
        if self.beta <= 0.0 {
            return Err(ReasoningError::Numeric(format!("beta must be positive, got {}", self.beta)));
        }
        if all[..4].iter().any(|&x| x > 0.0) {
            return Err(ReasoningError::Numeric("log-probabilities must be <= 0".into()));
        }
        Ok(())
    }

    /// `(logp_w_policy - logp_w_ref) - (logp_l_policy - logp_l_ref)`.
    pub fn margin(&self) -> f64 {
        (self.logp_w_policy - self.logp_w_ref) - (self.logp_l_policy - self.logp_l_ref)
    }
}

/// `ln(1 + e^x)` without overflow.
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `-ln sigmoid(beta * margin)` for a raw margin.
pub fn dpo_loss_from_margin(margin: f64, beta: f64) -> f64 {
    softplus(-beta * margin)
}

/// Derivative of [`dpo_loss_from_margin`] with respect to the margin.
pub fn dpo_loss_grad(margin: f64, beta: f64) -> f64 {
    -beta * sigmoid(-beta * margin)
}

pub fn dpo_loss(inp: &DpoInputs) -> Result<f64, ReasoningError> {
    inp.validate()?;
    Ok(dpo_loss_from_margin(inp.margin(), inp.beta))
}
