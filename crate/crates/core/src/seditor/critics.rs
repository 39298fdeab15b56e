use crate::diffcore::{Activation, AdamState, Mlp, MlpGrads, Tensor};
use crate::state::{Persist, StateDict, StateError};

use super::AgentError;

/// One-step Bellman target; `discount` is `γ` for live and timed-out
/// transitions and `0` for true terminals.
pub fn td_target(r: f64, discount: f64, q_next: f64) -> f64 {
    r + discount * q_next
}

/// A state-action value function with optional twin networks, their Polyak
/// targets and optimizer states. With twins, values are the elementwise minimum.
#[derive(Clone, Debug, PartialEq)]
pub struct QEnsemble {
    pub nets: Vec<Mlp>,
    pub targets: Vec<Mlp>,
    pub adams: Vec<AdamState>,
}

impl QEnsemble {
    pub fn new<R: rand::Rng + ?Sized>(
        obs_dim: usize,
        act_dim: usize,
        hidden: &[usize],
        activation: Activation,
        twin: bool,
        rng: &mut R,
    ) -> Self {
        let mut sizes = vec![obs_dim + act_dim];
        sizes.extend_from_slice(hidden);
        sizes.push(1);
        let count = if twin { 2 } else { 1 };
        let nets: Vec<Mlp> = (0..count)
            .map(|_| Mlp::new(&sizes, activation, Activation::Linear, rng))
            .collect();
        let adams = nets.iter().map(|n| AdamState::new(n.num_params())).collect();
        Self {
            targets: nets.clone(),
            nets,
            adams,
        }
    }

    fn min_over(nets: &[Mlp], input: &Tensor) -> Result<(Vec<f64>, Vec<usize>), AgentError> {
        let mut best: Vec<f64> = Vec::new();
        let mut which: Vec<usize> = Vec::new();
        for (k, net) in nets.iter().enumerate() {
            let q = net.predict(input)?;
            if k == 0 {
                best = q.data().to_vec();
                which = vec![0; best.len()];
            } else {
                for (i, &v) in q.data().iter().enumerate() {
                    if v < best[i] {
                        best[i] = v;
                        which[i] = k;
                    }
                }
            }
        }
        Ok((best, which))
    }

    pub fn value(&self, obs: &Tensor, act: &Tensor) -> Result<Vec<f64>, AgentError> {
        let input = Tensor::hcat(&[obs, act])?;
        Ok(Self::min_over(&self.nets, &input)?.0)
    }

    pub fn target_value(&self, obs: &Tensor, act: &Tensor) -> Result<Vec<f64>, AgentError> {
        let input = Tensor::hcat(&[obs, act])?;
        Ok(Self::min_over(&self.targets, &input)?.0)
    }

    /// Values and `∂(Σ_i w_i Q_i)/∂a` with the critic parameters detached.
    pub fn value_and_action_grad(
        &self,
        obs: &Tensor,
        act: &Tensor,
        row_weights: &[f64],
    ) -> Result<(Vec<f64>, Tensor), AgentError> {
        let input = Tensor::hcat(&[obs, act])?;
        let b = input.rows();
        let mut passes = Vec::with_capacity(self.nets.len());
        for net in &self.nets {
            passes.push(net.forward(&input)?);
        }
        let mut best = passes[0].0.data().to_vec();
        let mut which = vec![0usize; b];
        for (k, (q, _)) in passes.iter().enumerate().skip(1) {
            for (i, &v) in q.data().iter().enumerate() {
                if v < best[i] {
                    best[i] = v;
                    which[i] = k;
                }
            }
        }
        let obs_dim = obs.cols();
        let mut d_act = Tensor::zeros(b, act.cols());
        for (k, (net, (_, cache))) in self.nets.iter().zip(&passes).enumerate() {
            let mut g = Tensor::zeros(b, 1);
            let mut any = false;
            for i in 0..b {
                if which[i] == k {
                    g.set(i, 0, row_weights[i]);
                    any = true;
                }
            }
            if !any {
                continue;
            }
            let d_in = net.backward_input(cache, &g)?;
            d_act.add_assign(&d_in.slice_cols(obs_dim, obs_dim + act.cols()))?;
        }
        Ok((best, d_act))
    }

    /// Mean-squared error regression of every net onto `targets`; returns the
    /// loss of each net before the step.
    pub fn regress(
        &mut self,
        obs: &Tensor,
        act: &Tensor,
        targets: &[f64],
        lr: f64,
    ) -> Result<Vec<f64>, AgentError> {
        let grads = self.regression_grads(obs, act, targets)?;
        let mut losses = Vec::with_capacity(grads.len());
        for ((net, adam), (loss, g)) in self.nets.iter_mut().zip(&mut self.adams).zip(grads) {
            if !loss.is_finite() {
                return Err(AgentError::NonFinite("critic loss".into()));
            }
            adam.step(net.param_slices_mut(), &g.slices(), lr)?;
            losses.push(loss);
        }
        Ok(losses)
    }

    /// Loss `mean((Q − y)²)` and its parameter gradient for every net.
    pub fn regression_grads(
        &self,
        obs: &Tensor,
        act: &Tensor,
        targets: &[f64],
    ) -> Result<Vec<(f64, MlpGrads)>, AgentError> {
        let input = Tensor::hcat(&[obs, act])?;
        let b = input.rows();
        self.nets
            .iter()
            .map(|net| {
                let (q, cache) = net.forward(&input)?;
                let mut g = Tensor::zeros(b, 1);
                let mut loss = 0.0;
                for i in 0..b {
                    let err = q.get(i, 0) - targets[i];
                    loss += err * err / b as f64;
                    g.set(i, 0, 2.0 * err / b as f64);
                }
                let (grads, _) = net.backward(&cache, &g)?;
                Ok((loss, grads))
            })
            .collect()
    }

    pub fn sync_targets(&mut self, tau: f64) {
        for (t, n) in self.targets.iter_mut().zip(&self.nets) {
            t.polyak_toward(n, tau);
        }
    }
}

impl Persist for QEnsemble {
    fn save(&self, prefix: &str, out: &mut StateDict) {
        for (k, ((n, t), a)) in self.nets.iter().zip(&self.targets).zip(&self.adams).enumerate() {
            n.save(&format!("{prefix}.{k}.net"), out);
            t.save(&format!("{prefix}.{k}.target"), out);
            a.save(&format!("{prefix}.{k}.adam"), out);
        }
    }

    fn load(&mut self, prefix: &str, src: &StateDict) -> Result<(), StateError> {
        for (k, ((n, t), a)) in self
            .nets
            .iter_mut()
            .zip(&mut self.targets)
            .zip(&mut self.adams)
            .enumerate()
        {
            n.load(&format!("{prefix}.{k}.net"), src)?;
            t.load(&format!("{prefix}.{k}.target"), src)?;
            a.load(&format!("{prefix}.{k}.adam"), src)?;
        }
        Ok(())
    }
}

/// Utility and constraint critics sharing one configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct Critics {
    pub q: QEnsemble,
    pub qc: QEnsemble,
    pub tau: f64,
}

/// Quantities the critic step needs, already normalized and discounted.
#[derive(Clone, Debug)]
pub struct CriticBatch<'a> {
    pub obs: &'a Tensor,
    pub act: &'a Tensor,
    pub next_obs: &'a Tensor,
    /// Action drawn from the current composed policy at `next_obs`.
    pub next_act: &'a Tensor,
    pub r: &'a [f64],
    pub r_c: &'a [f64],
    /// Bootstrap factor per row (`γ^n`, or `0` after a true terminal).
    pub discount: &'a [f64],
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CriticLosses {
    pub q: f64,
    pub qc: f64,
}

impl Critics {
    pub fn new<R: rand::Rng + ?Sized>(
        obs_dim: usize,
        act_dim: usize,
        hidden: &[usize],
        activation: Activation,
        twin: bool,
        tau: f64,
        rng: &mut R,
    ) -> Self {
        assert!(tau > 0.0 && tau <= 1.0, "tau must lie in (0, 1]");
        Self {
            q: QEnsemble::new(obs_dim, act_dim, hidden, activation, twin, rng),
            qc: QEnsemble::new(obs_dim, act_dim, hidden, activation, twin, rng),
            tau,
        }
    }

    /// TD targets for both critics from the target networks.
    pub fn targets(&self, batch: &CriticBatch<'_>) -> Result<(Vec<f64>, Vec<f64>), AgentError> {
        let q_next = self.q.target_value(batch.next_obs, batch.next_act)?;
        let qc_next = self.qc.target_value(batch.next_obs, batch.next_act)?;
        let y = (0..q_next.len())
            .map(|i| td_target(batch.r[i], batch.discount[i], q_next[i]))
            .collect();
        let yc = (0..qc_next.len())
            .map(|i| td_target(batch.r_c[i], batch.discount[i], qc_next[i]))
            .collect();
        Ok((y, yc))
    }

    /// One optimizer step on both critics.
    pub fn update(&mut self, batch: &CriticBatch<'_>, lr: f64) -> Result<CriticLosses, AgentError> {
        let (y, yc) = self.targets(batch)?;
        // Compute both gradients before touching either network so a
        // non-finite loss leaves the critics untouched.
        let gq = self.q.regression_grads(batch.obs, batch.act, &y)?;
        let gqc = self.qc.regression_grads(batch.obs, batch.act, &yc)?;
        if gq.iter().chain(&gqc).any(|(l, g)| !l.is_finite() || !g.is_finite()) {
            return Err(AgentError::NonFinite("critic loss".into()));
        }
        let mut losses = CriticLosses::default();
        for (ens, grads, slot) in [(&mut self.q, gq, &mut losses.q), (&mut self.qc, gqc, &mut losses.qc)] {
            let mut total = 0.0;
            for ((net, adam), (loss, g)) in ens.nets.iter_mut().zip(&mut ens.adams).zip(&grads) {
                adam.step(net.param_slices_mut(), &g.slices(), lr)?;
                total += loss;
            }
            *slot = total / grads.len() as f64;
        }
        Ok(losses)
    }

    pub fn sync_targets(&mut self) {
        self.q.sync_targets(self.tau);
        self.qc.sync_targets(self.tau);
    }
}

impl Persist for Critics {
    fn save(&self, prefix: &str, out: &mut StateDict) {
        self.q.save(&format!("{prefix}.q"), out);
        self.qc.save(&format!("{prefix}.qc"), out);
    }

    fn load(&mut self, prefix: &str, src: &StateDict) -> Result<(), StateError> {
        self.q.load(&format!("{prefix}.q"), src)?;
        self.qc.load(&format!("{prefix}.qc"), src)
    }
}
