use crate::diffcore::Tensor;

/// How the safety editor's output combines with the proposal.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EditMode {
    /// `a = clip(â + 2Δa, −A, A)`
    Additive,
    /// `a = Δa`
    Overwrite,
}

/// Distance between the proposal and the executed action in the editor's objective.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DistanceMode {
    /// `max(0, Q(s, â) − Q(s, a))`
    Hinge,
    /// `‖a − â‖²`
    L2,
}

impl std::str::FromStr for EditMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "additive" => Ok(EditMode::Additive),
            "overwrite" => Ok(EditMode::Overwrite),
            o => Err(format!("unknown edit mode `{o}` (additive | overwrite)")),
        }
    }
}

impl std::str::FromStr for DistanceMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "hinge" => Ok(DistanceMode::Hinge),
            "l2" => Ok(DistanceMode::L2),
            o => Err(format!("unknown distance mode `{o}` (hinge | l2)")),
        }
    }
}

impl EditMode {
    pub fn name(self) -> &'static str {
        match self {
            EditMode::Additive => "additive",
            EditMode::Overwrite => "overwrite",
        }
    }
}

impl DistanceMode {
    pub fn name(self) -> &'static str {
        match self {
            DistanceMode::Hinge => "hinge",
            DistanceMode::L2 => "l2",
        }
    }
}

/// Additive editing function for one component.
#[inline]
pub fn h(proposal: f64, delta: f64, bound: f64) -> f64 {
    (proposal + 2.0 * delta).max(-bound).min(bound)
}

/// Result of applying the editing function to a batch.
#[derive(Clone, Debug)]
pub struct Edited {
    pub action: Tensor,
    /// `∂a/∂â` elementwise.
    pub d_proposal: Tensor,
    /// `∂a/∂Δa` elementwise.
    pub d_delta: Tensor,
}

pub fn apply_edit(mode: EditMode, proposal: &Tensor, delta: &Tensor, bound: f64) -> Edited {
    assert_eq!(proposal.shape(), delta.shape(), "proposal/edit shape mismatch");
    let (b, m) = proposal.shape();
    match mode {
        EditMode::Overwrite => Edited {
            action: delta.clone(),
            d_proposal: Tensor::zeros(b, m),
            d_delta: Tensor::filled(b, m, 1.0),
        },
        EditMode::Additive => {
            let mut action = Tensor::zeros(b, m);
            let mut d_proposal = Tensor::zeros(b, m);
            let mut d_delta = Tensor::zeros(b, m);
            for (k, (&p, &d)) in proposal.data().iter().zip(delta.data()).enumerate() {
                let raw = p + 2.0 * d;
                let inside = raw > -bound && raw < bound;
                action.data_mut()[k] = h(p, d, bound);
                if inside {
                    d_proposal.data_mut()[k] = 1.0;
                    d_delta.data_mut()[k] = 2.0;
                }
            }
            Edited {
                action,
                d_proposal,
                d_delta,
            }
        }
    }
}
