/// Per-dimension exponential moving mean and variance with bias correction.
#[derive(Clone, Debug, PartialEq)]
pub struct RewardNormalizer {
    pub decay: f64,
    pub clip: f64,
    /// Raw moving first and second moments, before bias correction.
    pub m1: Vec<f64>,
    pub m2: Vec<f64>,
    /// Accumulated `decay^t`, for bias correction.
    pub decay_pow: f64,
}

pub const STD_FLOOR: f64 = 1e-6;

impl RewardNormalizer {
    pub fn new(dims: usize, decay: f64, clip: f64) -> Self {
        assert!((0.0..1.0).contains(&decay), "decay must lie in [0, 1)");
        assert!(clip > 0.0, "clip bound must be positive");
        Self {
            decay,
            clip,
            m1: vec![0.0; dims],
            m2: vec![0.0; dims],
            decay_pow: 1.0,
        }
    }

    pub fn dims(&self) -> usize {
        self.m1.len()
    }

    pub fn mean(&self, d: usize) -> f64 {
        if self.decay_pow == 1.0 {
            0.0
        } else {
            self.m1[d] / (1.0 - self.decay_pow)
        }
    }

    pub fn std(&self, d: usize) -> f64 {
        if self.decay_pow == 1.0 {
            return 1.0;
        }
        let corr = 1.0 - self.decay_pow;
        let mean = self.m1[d] / corr;
        (self.m2[d] / corr - mean * mean).max(0.0).sqrt()
    }

    pub fn update(&mut self, x: &[f64]) {
        assert_eq!(x.len(), self.dims(), "reward vector width");
        for (d, &v) in x.iter().enumerate() {
            self.m1[d] = self.decay * self.m1[d] + (1.0 - self.decay) * v;
            self.m2[d] = self.decay * self.m2[d] + (1.0 - self.decay) * v * v;
        }
        self.decay_pow *= self.decay;
    }

    pub fn normalize_dim(&self, d: usize, v: f64) -> f64 {
        ((v - self.mean(d)) / self.std(d).max(STD_FLOOR)).clamp(-self.clip, self.clip)
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter().enumerate().map(|(d, &v)| self.normalize_dim(d, v)).collect()
    }

    /// Normalizes with the current statistics, then folds `x` into them.
    pub fn normalize(&mut self, x: &[f64]) -> Vec<f64> {
        let out = self.apply(x);
        self.update(x);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_zero_stream() {
        let mut n = RewardNormalizer::new(2, 0.999, 10.0);
        for _ in 0..100 {
            assert_eq!(n.normalize(&[0.0, 0.0]), vec![0.0, 0.0]);
        }
    }

    #[test]
    fn outlier_is_clipped() {
        let mut n = RewardNormalizer::new(1, 0.999, 10.0);
        for k in 0..2000 {
            n.update(&[(k % 2) as f64]);
        }
        assert_eq!(n.apply(&[1e6])[0], 10.0);
        assert_eq!(n.apply(&[-1e6])[0], -10.0);
    }

    #[test]
    fn dimensions_are_independent() {
        let mut a = RewardNormalizer::new(2, 0.99, 10.0);
        let mut b = RewardNormalizer::new(2, 0.99, 10.0);
        for k in 0..50 {
            a.update(&[k as f64 * 0.1, -1.0]);
            b.update(&[k as f64 * 0.1, (k % 3) as f64]);
        }
        assert_eq!(a.mean(0), b.mean(0));
        assert_eq!(a.std(0), b.std(0));
        assert_ne!(a.mean(1), b.mean(1));
    }

    #[test]
    fn bias_correction_recovers_first_value() {
        let mut n = RewardNormalizer::new(1, 0.999, 10.0);
        n.update(&[3.0]);
        assert!((n.mean(0) - 3.0).abs() < 1e-12);
        assert!(n.std(0) < 1e-6);
    }

    proptest::proptest! {
        #[test]
        fn outputs_within_clip(xs in proptest::collection::vec(-1e3f64..1e3, 1..64)) {
            let mut n = RewardNormalizer::new(1, 0.9, 10.0);
            for x in xs {
                let y = n.normalize(&[x])[0];
                proptest::prop_assert!(y.abs() <= 10.0);
            }
        }
    }
}
