use crate::diffcore::{Activation, AdamState, DiffError, Mlp, MlpCache, MlpGrads, Tensor};
use crate::dists::{HeadSample, PolicyHead};
use crate::state::{Persist, StateDict, StateError};

use super::AgentError;

/// A stochastic policy: network producing head parameters, the head itself,
/// and the optimizer state of the network.
#[derive(Clone, Debug, PartialEq)]
pub struct Actor {
    pub net: Mlp,
    pub head: PolicyHead,
    pub adam: AdamState,
}

/// Forward record of a reparameterized draw.
#[derive(Clone, Debug)]
pub struct ActorPass {
    pub raw: Tensor,
    pub cache: MlpCache,
    pub sample: HeadSample,
}

impl ActorPass {
    pub fn action(&self) -> &Tensor {
        &self.sample.action
    }
}

impl Actor {
    pub fn new<R: rand::Rng + ?Sized>(
        in_dim: usize,
        hidden: &[usize],
        activation: Activation,
        head: PolicyHead,
        rng: &mut R,
    ) -> Self {
        let mut sizes = Vec::with_capacity(hidden.len() + 2);
        sizes.push(in_dim);
        sizes.extend_from_slice(hidden);
        sizes.push(head.raw_dim());
        let net = Mlp::new(&sizes, activation, Activation::Linear, rng);
        let adam = AdamState::new(net.num_params());
        Self { net, head, adam }
    }

    pub fn forward(&self, input: &Tensor, noise: &Tensor) -> Result<ActorPass, AgentError> {
        let (raw, cache) = self.net.forward(input)?;
        let sample = self.head.rsample(&raw, noise)?;
        Ok(ActorPass { raw, cache, sample })
    }

    /// Sample without keeping anything for a reverse pass.
    pub fn sample(&self, input: &Tensor, noise: &Tensor) -> Result<HeadSample, AgentError> {
        let raw = self.net.predict(input)?;
        Ok(self.head.rsample(&raw, noise)?)
    }

    pub fn mode(&self, input: &Tensor) -> Result<Tensor, AgentError> {
        let raw = self.net.predict(input)?;
        Ok(self.head.mode(&raw)?)
    }

    /// Per-row entropy and `∂H/∂raw`.
    pub fn entropy(&self, pass: &ActorPass) -> Result<(Vec<f64>, Tensor), AgentError> {
        Ok(self.head.entropy(&pass.raw, &pass.sample)?)
    }

    /// Reverse pass from `∂J/∂action` plus an extra gradient on the raw head
    /// parameters (the entropy term). Returns parameter and input gradients.
    pub fn backward(
        &self,
        pass: &ActorPass,
        d_action: &Tensor,
        d_raw_extra: Option<&Tensor>,
    ) -> Result<(MlpGrads, Tensor), AgentError> {
        let mut d_raw = self.head.backward(&pass.sample, d_action)?;
        if let Some(extra) = d_raw_extra {
            d_raw.add_assign(extra)?;
        }
        Ok(self.net.backward(&pass.cache, &d_raw)?)
    }

    /// Reverse pass to the input only (parameters detached).
    pub fn backward_input(&self, pass: &ActorPass, d_action: &Tensor) -> Result<Tensor, AgentError> {
        let d_raw = self.head.backward(&pass.sample, d_action)?;
        Ok(self.net.backward_input(&pass.cache, &d_raw)?)
    }

    /// Gradient ascent on the objective whose gradient is `grads`.
    pub fn ascend(&mut self, grads: &MlpGrads, lr: f64) -> Result<(), DiffError> {
        let mut neg = grads.clone();
        neg.scale(-1.0);
        let slices = neg.slices();
        self.adam.step(self.net.param_slices_mut(), &slices, lr)
    }
}

impl Persist for Actor {
    fn save(&self, prefix: &str, out: &mut StateDict) {
        self.net.save(&format!("{prefix}.net"), out);
        self.adam.save(&format!("{prefix}.adam"), out);
    }

    fn load(&mut self, prefix: &str, src: &StateDict) -> Result<(), StateError> {
        self.net.load(&format!("{prefix}.net"), src)?;
        self.adam.load(&format!("{prefix}.adam"), src)
    }
}
