use super::special::{
    beta_inc, beta_inc_inv, beta_ln_pdf, digamma, ln_beta, softplus, trigamma,
};
use super::DistError;

/// Unit-interval values are clamped into `[U_CLAMP, 1 − U_CLAMP]` before any
/// density evaluation and after sampling.
pub const U_CLAMP: f64 = 1e-6;
/// Step of the central difference taken on the CDF for implicit gradients.
pub const CDF_FD_STEP: f64 = 1e-5;
pub const LOG_STD_MIN: f64 = -10.0;
pub const LOG_STD_MAX: f64 = 2.0;
/// Pre-squash values are clamped so that `tanh` stays strictly below one.
const PRE_SQUASH_LIMIT: f64 = 15.0;

/// The bounded action space `[−A, A]^M`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ActionBox {
    pub bound: f64,
    pub dims: usize,
}

impl ActionBox {
    pub fn new(bound: f64, dims: usize) -> Result<Self, DistError> {
        if !(bound > 0.0 && bound.is_finite()) {
            return Err(DistError::InvalidParameter(format!("action bound {bound}")));
        }
        Ok(Self { bound, dims })
    }

    /// `a = 2A·u − A`.
    #[inline]
    pub fn from_unit(&self, u: f64) -> f64 {
        2.0 * self.bound * u - self.bound
    }

    pub fn to_unit(&self, a: f64) -> Result<f64, DistError> {
        if !(a >= -self.bound && a <= self.bound) {
            return Err(DistError::OutsideBox {
                value: a,
                bound: self.bound,
            });
        }
        Ok((a + self.bound) / (2.0 * self.bound))
    }

    pub fn map_from_unit(&self, u: &[f64]) -> Vec<f64> {
        u.iter().map(|&v| self.from_unit(v)).collect()
    }

    pub fn map_to_unit(&self, a: &[f64]) -> Result<Vec<f64>, DistError> {
        a.iter().map(|&v| self.to_unit(v)).collect()
    }

    pub fn contains(&self, a: &[f64]) -> bool {
        a.iter().all(|v| v.abs() <= self.bound)
    }

    pub fn clip(&self, a: f64) -> f64 {
        a.clamp(-self.bound, self.bound)
    }

    /// `log |det| ` of the unit→box map over all dimensions.
    pub fn log_jacobian(&self) -> f64 {
        self.dims as f64 * (2.0 * self.bound).ln()
    }
}

/// Independent Beta distributions, one per action dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct BetaHead {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
}

/// One reparameterized Beta draw in unit coordinates with its implicit
/// gradients `dz/dα`, `dz/dβ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BetaDraw {
    pub z: f64,
    pub dz_dalpha: f64,
    pub dz_dbeta: f64,
}

fn clamp_unit(u: f64) -> f64 {
    u.clamp(U_CLAMP, 1.0 - U_CLAMP)
}

impl BetaHead {
    pub fn new(alpha: Vec<f64>, beta: Vec<f64>) -> Result<Self, DistError> {
        if alpha.len() != beta.len() {
            return Err(DistError::InvalidParameter("alpha/beta length mismatch".into()));
        }
        if alpha.iter().chain(&beta).any(|c| !(*c > 0.0 && c.is_finite())) {
            return Err(DistError::InvalidParameter("non-positive concentration".into()));
        }
        Ok(Self { alpha, beta })
    }

    /// Concentrations `min_conc + softplus(raw)`; `raw` holds the α block then the β block.
    pub fn from_raw(raw: &[f64], min_conc: f64) -> Self {
        let m = raw.len() / 2;
        Self {
            alpha: raw[..m].iter().map(|&r| min_conc + softplus(r)).collect(),
            beta: raw[m..].iter().map(|&r| min_conc + softplus(r)).collect(),
        }
    }

    pub fn dims(&self) -> usize {
        self.alpha.len()
    }

    pub fn log_prob_unit(&self, u: &[f64]) -> f64 {
        self.alpha
            .iter()
            .zip(&self.beta)
            .zip(u)
            .map(|((&a, &b), &x)| beta_ln_pdf(a, b, clamp_unit(x)))
            .sum()
    }

    /// Log density of a box action, including the unit→box Jacobian.
    pub fn log_prob(&self, x: &[f64], bx: &ActionBox) -> Result<f64, DistError> {
        let u = bx.map_to_unit(x)?;
        Ok(self.log_prob_unit(&u) - self.dims() as f64 * (2.0 * bx.bound).ln())
    }

    pub fn entropy_unit(&self) -> f64 {
        self.alpha
            .iter()
            .zip(&self.beta)
            .map(|(&a, &b)| {
                ln_beta(a, b) - (a - 1.0) * digamma(a) - (b - 1.0) * digamma(b)
                    + (a + b - 2.0) * digamma(a + b)
            })
            .sum()
    }

    pub fn entropy(&self, bx: &ActionBox) -> f64 {
        self.entropy_unit() + self.dims() as f64 * (2.0 * bx.bound).ln()
    }

    /// `(∂H/∂α, ∂H/∂β)` per dimension.
    pub fn entropy_grad(&self) -> Vec<(f64, f64)> {
        self.alpha
            .iter()
            .zip(&self.beta)
            .map(|(&a, &b)| {
                let t_ab = (a + b - 2.0) * trigamma(a + b);
                (-(a - 1.0) * trigamma(a) + t_ab, -(b - 1.0) * trigamma(b) + t_ab)
            })
            .collect()
    }

    pub fn mean_unit(&self) -> Vec<f64> {
        self.alpha
            .iter()
            .zip(&self.beta)
            .map(|(&a, &b)| a / (a + b))
            .collect()
    }

    /// Inverse-CDF draw from uniform noise with implicit reparameterization
    /// gradients `dz/dθ = −(∂F/∂θ)/f(z)`.
    pub fn rsample_unit(&self, noise: &[f64]) -> Vec<BetaDraw> {
        self.alpha
            .iter()
            .zip(&self.beta)
            .zip(noise)
            .map(|((&a, &b), &u)| beta_draw(a, b, u))
            .collect()
    }
}

pub fn beta_draw(a: f64, b: f64, u: f64) -> BetaDraw {
    let raw_z = beta_inc_inv(a, b, u);
    let z = clamp_unit(raw_z);
    if z != raw_z {
        return BetaDraw {
            z,
            dz_dalpha: 0.0,
            dz_dbeta: 0.0,
        };
    }
    let pdf = beta_ln_pdf(a, b, z).exp();
    let h = CDF_FD_STEP;
    let df_da = (beta_inc(a + h, b, z) - beta_inc(a - h, b, z)) / (2.0 * h);
    let df_db = (beta_inc(a, b + h, z) - beta_inc(a, b - h, z)) / (2.0 * h);
    if pdf > 0.0 && pdf.is_finite() {
        BetaDraw {
            z,
            dz_dalpha: -df_da / pdf,
            dz_dbeta: -df_db / pdf,
        }
    } else {
        BetaDraw {
            z,
            dz_dalpha: 0.0,
            dz_dbeta: 0.0,
        }
    }
}

/// Diagonal Gaussian squashed through `A·tanh`.
#[derive(Clone, Debug, PartialEq)]
pub struct SquashedGaussianHead {
    pub mean: Vec<f64>,
    /// Already clamped into `[LOG_STD_MIN, LOG_STD_MAX]`.
    pub log_std: Vec<f64>,
}

/// One squashed-Gaussian draw in box coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianDraw {
    pub action: f64,
    pub da_dmean: f64,
    pub da_dlog_std: f64,
    /// `−log p` contribution of this dimension.
    pub neg_log_prob: f64,
    pub dneglogp_dmean: f64,
    pub dneglogp_dlog_std: f64,
}

/// `log(1 − tanh²(y))` without cancellation.
fn log_one_minus_tanh2(y: f64) -> f64 {
    2.0 * (std::f64::consts::LN_2 - y.abs() - softplus(-2.0 * y.abs()))
}

impl SquashedGaussianHead {
    pub fn from_raw(raw: &[f64]) -> Self {
        let m = raw.len() / 2;
        Self {
            mean: raw[..m].to_vec(),
            log_std: raw[m..]
                .iter()
                .map(|&v| v.clamp(LOG_STD_MIN, LOG_STD_MAX))
                .collect(),
        }
    }

    pub fn dims(&self) -> usize {
        self.mean.len()
    }

    pub fn draw(&self, noise: &[f64], bx: &ActionBox) -> Vec<GaussianDraw> {
        let half_ln_2pi = 0.5 * (2.0 * std::f64::consts::PI).ln();
        self.mean
            .iter()
            .zip(&self.log_std)
            .zip(noise)
            .map(|((&mu, &ls), &eps)| {
                let sigma = ls.exp();
                let y_raw = mu + sigma * eps;
                let y = y_raw.clamp(-PRE_SQUASH_LIMIT, PRE_SQUASH_LIMIT);
                let live = if y == y_raw { 1.0 } else { 0.0 };
                let t = y.tanh();
                let slope = bx.bound * (1.0 - t * t);
                let neg_log_prob =
                    0.5 * eps * eps + ls + half_ln_2pi + log_one_minus_tanh2(y) + bx.bound.ln();
                // d/dy log(1 − tanh²y) = −2 tanh y
                let dy = -2.0 * t * live;
                GaussianDraw {
                    action: bx.bound * t,
                    da_dmean: slope * live,
                    da_dlog_std: slope * sigma * eps * live,
                    neg_log_prob,
                    dneglogp_dmean: dy,
                    dneglogp_dlog_std: 1.0 + dy * sigma * eps,
                }
            })
            .collect()
    }

    pub fn log_prob(&self, x: &[f64], bx: &ActionBox) -> Result<f64, DistError> {
        let half_ln_2pi = 0.5 * (2.0 * std::f64::consts::PI).ln();
        let mut total = 0.0;
        for ((&mu, &ls), &a) in self.mean.iter().zip(&self.log_std).zip(x) {
            if !(a.abs() <= bx.bound) {
                return Err(DistError::OutsideBox {
                    value: a,
                    bound: bx.bound,
                });
            }
            let t = (a / bx.bound).clamp(-1.0 + 1e-12, 1.0 - 1e-12);
            let y = t.atanh();
            let eps = (y - mu) / ls.exp();
            total -= 0.5 * eps * eps + ls + half_ln_2pi + log_one_minus_tanh2(y) + bx.bound.ln();
        }
        Ok(total)
    }

    pub fn mode(&self, bx: &ActionBox) -> Vec<f64> {
        self.mean.iter().map(|m| bx.bound * m.tanh()).collect()
    }
}
