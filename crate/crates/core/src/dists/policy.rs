use rand::Rng;
use rand_distr::StandardNormal;

use super::heads::{ActionBox, BetaHead, SquashedGaussianHead, LOG_STD_MAX, LOG_STD_MIN};
use super::special::sigmoid;
use super::DistError;
use crate::diffcore::Tensor;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum HeadKind {
    Beta { min_concentration: f64 },
    SquashedGaussian,
}

/// Batched policy head: maps raw network outputs (`B x 2M`) to box actions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolicyHead {
    pub kind: HeadKind,
    pub action_box: ActionBox,
}

/// A batch of reparameterized samples plus what the reverse pass needs.
#[derive(Clone, Debug)]
pub struct HeadSample {
    pub action: Tensor,
    /// `log π(a)` per row, box coordinates.
    pub log_prob: Vec<f64>,
    /// `∂a/∂raw` for the first (α or mean) and second (β or log-std) raw block.
    jac_first: Tensor,
    jac_second: Tensor,
    /// Gaussian only: per-row `∂(−log π)/∂raw` at this draw.
    neg_log_prob_grad: Option<Tensor>,
}

/// Uniform on the open unit interval.
fn open_uniform<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    ((rng.random::<u64>() >> 11) as f64 + 0.5) / (1u64 << 53) as f64
}

impl PolicyHead {
    pub fn new(kind: HeadKind, action_box: ActionBox) -> Self {
        Self { kind, action_box }
    }

    pub fn dims(&self) -> usize {
        self.action_box.dims
    }

    /// Width of the raw parameter vector the network must emit.
    pub fn raw_dim(&self) -> usize {
        2 * self.action_box.dims
    }

    /// Base noise for `batch` draws: uniform for Beta, standard normal for Gaussian.
    pub fn noise<R: Rng + ?Sized>(&self, rng: &mut R, batch: usize) -> Tensor {
        let m = self.dims();
        let data = match self.kind {
            HeadKind::Beta { .. } => (0..batch * m).map(|_| open_uniform(rng)).collect(),
            HeadKind::SquashedGaussian => (0..batch * m)
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect(),
        };
        Tensor::new(batch, m, data).expect("sized above")
    }

    fn check_raw(&self, raw: &Tensor) -> Result<(), DistError> {
        if raw.cols() != self.raw_dim() {
            return Err(DistError::Shape {
                expected: self.raw_dim(),
                got: raw.cols(),
            });
        }
        if !raw.is_finite() {
            return Err(DistError::InvalidParameter("non-finite head parameters".into()));
        }
        Ok(())
    }

    pub fn rsample(&self, raw: &Tensor, noise: &Tensor) -> Result<HeadSample, DistError> {
        self.check_raw(raw)?;
        let (b, m) = (raw.rows(), self.dims());
        if noise.shape() != (b, m) {
            return Err(DistError::Shape {
                expected: m,
                got: noise.cols(),
            });
        }
        let bx = self.action_box;
        let mut action = Tensor::zeros(b, m);
        let mut jac_first = Tensor::zeros(b, m);
        let mut jac_second = Tensor::zeros(b, m);
        let mut log_prob = Vec::with_capacity(b);
        let mut nlp_grad = None;
        match self.kind {
            HeadKind::Beta { min_concentration } => {
                for r in 0..b {
                    let raw_row = raw.row(r);
                    let head = BetaHead::from_raw(raw_row, min_concentration);
                    let draws = head.rsample_unit(noise.row(r));
                    let scale = 2.0 * bx.bound;
                    let mut zs = Vec::with_capacity(m);
                    for (d, draw) in draws.iter().enumerate() {
                        action.set(r, d, bx.from_unit(draw.z));
                        jac_first.set(r, d, scale * draw.dz_dalpha * sigmoid(raw_row[d]));
                        jac_second.set(r, d, scale * draw.dz_dbeta * sigmoid(raw_row[m + d]));
                        zs.push(draw.z);
                    }
                    log_prob.push(head.log_prob_unit(&zs) - bx.log_jacobian());
                }
            }
            HeadKind::SquashedGaussian => {
                let mut g = Tensor::zeros(b, 2 * m);
                for r in 0..b {
                    let raw_row = raw.row(r);
                    let head = SquashedGaussianHead::from_raw(raw_row);
                    let draws = head.draw(noise.row(r), &bx);
                    let mut nlp = 0.0;
                    for (d, draw) in draws.iter().enumerate() {
                        let ls_live = log_std_live(raw_row[m + d]);
                        action.set(r, d, draw.action);
                        jac_first.set(r, d, draw.da_dmean);
                        jac_second.set(r, d, draw.da_dlog_std * ls_live);
                        g.set(r, d, draw.dneglogp_dmean);
                        g.set(r, m + d, draw.dneglogp_dlog_std * ls_live);
                        nlp += draw.neg_log_prob;
                    }
                    log_prob.push(-nlp);
                }
                nlp_grad = Some(g);
            }
        }
        Ok(HeadSample {
            action,
            log_prob,
            jac_first,
            jac_second,
            neg_log_prob_grad: nlp_grad,
        })
    }

    /// Pulls `∂L/∂a` back to `∂L/∂raw`.
    pub fn backward(&self, sample: &HeadSample, d_action: &Tensor) -> Result<Tensor, DistError> {
        let (b, m) = sample.action.shape();
        if d_action.shape() != (b, m) {
            return Err(DistError::Shape {
                expected: m,
                got: d_action.cols(),
            });
        }
        let mut d_raw = Tensor::zeros(b, 2 * m);
        for r in 0..b {
            for d in 0..m {
                let g = d_action.get(r, d);
                d_raw.set(r, d, g * sample.jac_first.get(r, d));
                d_raw.set(r, m + d, g * sample.jac_second.get(r, d));
            }
        }
        Ok(d_raw)
    }

    /// Per-row entropy (box coordinates) and its gradient w.r.t. the raw outputs.
    ///
    /// Beta uses the closed form; the squashed Gaussian has none, so its
    /// entropy is the single-draw estimate `−log π(a)` at `sample`.
    pub fn entropy(&self, raw: &Tensor, sample: &HeadSample) -> Result<(Vec<f64>, Tensor), DistError> {
        self.check_raw(raw)?;
        let (b, m) = (raw.rows(), self.dims());
        let bx = self.action_box;
        match self.kind {
            HeadKind::Beta { min_concentration } => {
                let mut values = Vec::with_capacity(b);
                let mut grad = Tensor::zeros(b, 2 * m);
                for r in 0..b {
                    let raw_row = raw.row(r);
                    let head = BetaHead::from_raw(raw_row, min_concentration);
                    values.push(head.entropy(&bx));
                    for (d, (ga, gb)) in head.entropy_grad().into_iter().enumerate() {
                        grad.set(r, d, ga * sigmoid(raw_row[d]));
                        grad.set(r, m + d, gb * sigmoid(raw_row[m + d]));
                    }
                }
                Ok((values, grad))
            }
            HeadKind::SquashedGaussian => {
                let values = sample.log_prob.iter().map(|lp| -lp).collect();
                let grad = sample
                    .neg_log_prob_grad
                    .clone()
                    .expect("gaussian samples carry their log-prob gradient");
                Ok((values, grad))
            }
        }
    }

    /// Deterministic action: the Beta mean or the squashed Gaussian mean.
    pub fn mode(&self, raw: &Tensor) -> Result<Tensor, DistError> {
        self.check_raw(raw)?;
        let (b, m) = (raw.rows(), self.dims());
        let bx = self.action_box;
        let mut out = Tensor::zeros(b, m);
        for r in 0..b {
            let row = match self.kind {
                HeadKind::Beta { min_concentration } => {
                    bx.map_from_unit(&BetaHead::from_raw(raw.row(r), min_concentration).mean_unit())
                }
                HeadKind::SquashedGaussian => SquashedGaussianHead::from_raw(raw.row(r)).mode(&bx),
            };
            out.row_mut(r).copy_from_slice(&row);
        }
        Ok(out)
    }

    pub fn log_prob(&self, raw: &Tensor, actions: &Tensor) -> Result<Vec<f64>, DistError> {
        self.check_raw(raw)?;
        let bx = self.action_box;
        (0..raw.rows())
            .map(|r| match self.kind {
                HeadKind::Beta { min_concentration } => {
                    BetaHead::from_raw(raw.row(r), min_concentration).log_prob(actions.row(r), &bx)
                }
                HeadKind::SquashedGaussian => {
                    SquashedGaussianHead::from_raw(raw.row(r)).log_prob(actions.row(r), &bx)
                }
            })
            .collect()
    }
}

fn log_std_live(raw: f64) -> f64 {
    if (LOG_STD_MIN..=LOG_STD_MAX).contains(&raw) {
        1.0
    } else {
        0.0
    }
}
