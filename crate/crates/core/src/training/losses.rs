use crate::error::{invalid, Error, Result};

fn mean(xs: &[f64], what: &'static str) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::Empty(what));
    }
    Ok(xs.iter().sum::<f64>() / xs.len() as f64)
}

/// `mean(fake) - mean(real)`. Minimizing it maximizes the critic's
/// Wasserstein value `E[f(real)] - E[f(fake)]`.
pub fn critic_loss(scores_real: &[f64], scores_fake: &[f64]) -> Result<f64> {
    if scores_real.len() != scores_fake.len() {
        return Err(Error::LengthMismatch {
            what: "critic score batches",
            expected: scores_real.len(),
            actual: scores_fake.len(),
        });
    }
    Ok(mean(scores_fake, "fake scores")? - mean(scores_real, "real scores")?)
}

/// Relative weight of the two critic losses in the total.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub d1: f64,
    pub d2: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self { d1: 1.0, d2: 1.0 }
    }
}

impl LossWeights {
    pub fn new(d1: f64, d2: f64) -> Result<Self> {
        if !(d1.is_finite() && d2.is_finite() && d1 >= 0.0 && d2 >= 0.0) {
            return Err(invalid("loss_weights", "must be finite and non-negative"));
        }
        Ok(Self { d1, d2 })
    }
}

pub fn total_critic_loss(l_d1: f64, l_d2: f64, weights: LossWeights) -> Result<f64> {
    if !(l_d1.is_finite() && l_d2.is_finite()) {
        return Err(invalid("critic losses", "must be finite"));
    }
    Ok(weights.d1 * l_d1 + weights.d2 * l_d2)
}

/// `-mean(fake_d1) - mean(fake_d2)`, second term absent for one critic.
pub fn generator_loss(scores_fake_d1: &[f64], scores_fake_d2: Option<&[f64]>) -> Result<f64> {
    let mut g = -mean(scores_fake_d1, "fake scores")?;
    if let Some(f2) = scores_fake_d2 {
        g -= mean(f2, "fake scores")?;
    }
    Ok(g)
}

/// Clamp every parameter into `[-clip, clip]`.
pub fn clip_weights(params: &mut [f64], clip: f64) -> Result<()> {
    if !(clip > 0.0 && clip.is_finite()) {
        return Err(invalid("clip_value", "must be positive"));
    }
    for p in params {
        *p = p.clamp(-clip, clip);
    }
    Ok(())
}

/// `lambda * (||grad|| - 1)^2` for one interpolate.
pub fn gradient_penalty(grad_norm: f64, lambda: f64) -> f64 {
    let d = grad_norm - 1.0;
    lambda * d * d
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn critic_loss_examples() {
        assert_eq!(critic_loss(&[1.0, 1.0], &[0.0, 0.0]).unwrap(), -1.0);
        assert_eq!(critic_loss(&[0.3, -2.0], &[0.3, -2.0]).unwrap(), 0.0);
        assert_eq!(critic_loss(&[2.0, 4.0], &[1.0, 3.0]).unwrap(), -1.0);
        assert!(matches!(critic_loss(&[], &[]), Err(Error::Empty(_))));
        assert!(critic_loss(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn total_and_generator_examples() {
        let w = LossWeights::default();
        assert_eq!(total_critic_loss(-1.0, -2.0, w).unwrap(), -3.0);
        assert_eq!(total_critic_loss(0.25, 0.0, w).unwrap(), 0.25);
        let weighted = total_critic_loss(-1.0, -2.0, LossWeights::new(0.7, 0.3).unwrap()).unwrap();
        assert!((weighted + 1.3).abs() < 1e-12);
        assert!(total_critic_loss(f64::NAN, 0.0, w).is_err());

        assert_eq!(
            generator_loss(&[1.0, 1.0], Some(&[2.0, 2.0])).unwrap(),
            -3.0
        );
        assert_eq!(generator_loss(&[0.0; 4], Some(&[0.0; 4])).unwrap(), 0.0);
        assert_eq!(generator_loss(&[0.5, 1.5], None).unwrap(), -1.0);
        assert!(generator_loss(&[], None).is_err());
    }

    #[test]
    fn sign_convention() {
        // raising real scores lowers the loss and raises E[f(real)] - E[f(fake)]
        let fake = [0.1, 0.2, 0.3];
        let a = critic_loss(&[0.0, 0.0, 0.0], &fake).unwrap();
        let b = critic_loss(&[1.0, 1.0, 1.0], &fake).unwrap();
        assert!(b < a);
        assert!((-b - 0.8).abs() < 1e-12);
    }

    #[test]
    fn clipping_examples() {
        let mut p = [-5.0, 0.005, 2.0];
        clip_weights(&mut p, 0.01).unwrap();
        assert_eq!(p, [-0.01, 0.005, 0.01]);
        let before = p;
        clip_weights(&mut p, 0.01).unwrap();
        assert_eq!(p, before);
        assert!(clip_weights(&mut p, 0.0).is_err());
        assert_eq!(gradient_penalty(1.0, 10.0), 0.0);
        assert_eq!(gradient_penalty(3.0, 10.0), 40.0);
    }
}
