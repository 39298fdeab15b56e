use super::DiffError;

/// Adam moments for one parameter group.
///
/// The moment vectors are laid out as the concatenation of the slices passed to
/// [`AdamState::step`], so a group must always be stepped with the same slice
/// layout it was created for.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(num_params: usize) -> Self {
        Self::with_hyper(num_params, 0.9, 0.999, 1e-8)
    }

    pub fn with_hyper(num_params: usize, beta1: f64, beta2: f64, eps: f64) -> Self {
        Self {
            m: vec![0.0; num_params],
            v: vec![0.0; num_params],
            t: 0,
            beta1,
            beta2,
            eps,
        }
    }

    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }

    /// One descent step `p ← p − lr·m̂/(√v̂ + ε)`.
    pub fn step(
        &mut self,
        params: Vec<&mut [f64]>,
        grads: &[&[f64]],
        lr: f64,
    ) -> Result<(), DiffError> {
        let total: usize = params.iter().map(|p| p.len()).sum();
        let grad_total: usize = grads.iter().map(|g| g.len()).sum();
        if params.len() != grads.len() || total != self.m.len() || grad_total != total {
            return Err(DiffError::Shape {
                context: "adam step".into(),
                expected: (self.m.len(), 1),
                got: (grad_total, 1),
            });
        }
        for (p, g) in params.iter().zip(grads) {
            if p.len() != g.len() {
                return Err(DiffError::Shape {
                    context: "adam step slice".into(),
                    expected: (p.len(), 1),
                    got: (g.len(), 1),
                });
            }
        }
        if grads.iter().any(|g| g.iter().any(|v| !v.is_finite())) {
            return Err(DiffError::NonFinite("adam gradient".into()));
        }

        self.t += 1;
        let bc1 = 1.0 - self.beta1.powf(self.t as f64);
        let bc2 = 1.0 - self.beta2.powf(self.t as f64);
        let mut k = 0;
        for (p, g) in params.into_iter().zip(grads) {
            for (pi, &gi) in p.iter_mut().zip(g.iter()) {
                let m = &mut self.m[k];
                let v = &mut self.v[k];
                *m = self.beta1 * *m + (1.0 - self.beta1) * gi;
                *v = self.beta2 * *v + (1.0 - self.beta2) * gi * gi;
                let m_hat = *m / bc1;
                let v_hat = *v / bc2;
                *pi -= lr * m_hat / (v_hat.sqrt() + self.eps);
                k += 1;
            }
        }
        Ok(())
    }

    /// Convenience for a single flat parameter vector.
    pub fn step_flat(&mut self, params: &mut [f64], grads: &[f64], lr: f64) -> Result<(), DiffError> {
        self.step(vec![params], &[grads], lr)
    }
}
