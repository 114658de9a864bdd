use std::sync::Arc;

use super::{check_len, ensure_finite, scratch, OneStepMap};
use crate::error::Result;
use crate::system::DriftModel;

/// Explicit Euler: `u' = u + h drift(u, alpha, t)`.
#[derive(Clone)]
pub struct ForwardEuler {
    model: Arc<dyn DriftModel>,
}

impl ForwardEuler {
    pub fn new(model: Arc<dyn DriftModel>) -> Self {
        Self { model }
    }
}

impl std::fmt::Debug for ForwardEuler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ForwardEuler").field("dim", &self.model.dim()).finish()
    }
}

impl OneStepMap for ForwardEuler {
    fn name(&self) -> &'static str {
        "forward-euler"
    }
    fn dim(&self) -> usize {
        self.model.dim()
    }
    fn step(&self, u: &mut [f64], h: f64, alpha: f64, t: f64) -> Result<()> {
        check_len(u, self.dim())?;
        if h == 0.0 {
            return Ok(());
        }
        let mut f = scratch(u.len());
        self.model.drift(u, alpha, t, &mut f);
        for (ui, fi) in u.iter_mut().zip(f.iter()) {
            *ui += h * fi;
        }
        ensure_finite(u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::StiffSplitSystem;

    #[test]
    fn decay_step() {
        let sys = StiffSplitSystem::new(
            1,
            Arc::new(|u: &[f64], o: &mut [f64]| o[0] = -u[0]),
            Arc::new(|_u: &[f64], o: &mut [f64]| o[0] = 0.0),
            1e-3,
        )
        .unwrap();
        let fe = ForwardEuler::new(Arc::new(sys));
        for alpha in [0.0, 1.0, 1e3] {
            assert!((fe.apply(&[1.0], 0.1, alpha, 0.0).unwrap()[0] - 0.9).abs() < 1e-15);
        }
        assert_eq!(fe.apply(&[1.0], 0.0, 1e3, 0.0).unwrap(), vec![1.0]);
    }
}
