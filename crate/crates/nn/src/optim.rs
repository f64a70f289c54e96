use crate::error::{NnError, Result};
use crate::param::ParamSet;
use crate::scalar::Scalar;

/// Stochastic gradient descent with classical momentum:
/// `v <- momentum·v - lr·grad; value <- value + v`.
#[derive(Debug, Clone)]
pub struct Sgd<T> {
    pub learning_rate: f64,
    pub momentum: f64,
    velocity: Vec<Vec<T>>,
}

impl<T: Scalar> Sgd<T> {
    pub fn new(learning_rate: f64, momentum: f64) -> Result<Self> {
        if !(learning_rate > 0.0 && learning_rate.is_finite()) {
            return Err(NnError::config(
                "sgd",
                format!("learning rate {learning_rate} must be positive"),
            ));
        }
        if !(0.0..1.0).contains(&momentum) {
            return Err(NnError::config(
                "sgd",
                format!("momentum {momentum} outside [0, 1)"),
            ));
        }
        Ok(Sgd {
            learning_rate,
            momentum,
            velocity: Vec::new(),
        })
    }

    pub fn velocity(&self) -> &[Vec<T>] {
        &self.velocity
    }

    /// Applies one update. Fails without touching any parameter if a gradient
    /// is non-finite.
    pub fn step(&mut self, params: &mut ParamSet<T>) -> Result<()> {
        for p in params.iter() {
            if p.grad.data().iter().any(|g| !g.is_finite()) {
                return Err(NnError::Divergence { tag: p.tag.clone() });
            }
        }
        if self.velocity.len() != params.len() {
            self.velocity = params
                .iter()
                .map(|p| vec![T::zero(); p.value.len()])
                .collect();
        }
        let lr = T::from_f64_lossy(self.learning_rate);
        let mu = T::from_f64_lossy(self.momentum);
        for (p, vel) in params.iter_mut().zip(self.velocity.iter_mut()) {
            let grads = p.grad.data().to_vec();
            for ((w, v), g) in p.value.data_mut().iter_mut().zip(vel.iter_mut()).zip(grads) {
                *v = mu * *v - lr * g;
                *w = *w + *v;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::param::{ParamRole, Parameter};
    use crate::tensor::{Shape, Tensor};

    fn single(value: f64, grad: f64) -> ParamSet<f64> {
        let mut set = ParamSet::new();
        let id = set.add(Parameter::new(
            "w",
            ParamRole::Weight,
            Tensor::filled(Shape::new(1, 1, 1, 1), value),
        ));
        set.get_mut(id).grad.data_mut()[0] = grad;
        set
    }

    #[test]
    fn vanilla_step() {
        let mut set = single(1.0, 2.0);
        Sgd::new(0.1, 0.0).unwrap().step(&mut set).unwrap();
        assert!((set.iter().next().unwrap().value.data()[0] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn zero_grad_is_noop() {
        let mut set = single(1.5, 0.0);
        Sgd::new(0.1, 0.0).unwrap().step(&mut set).unwrap();
        assert_eq!(set.iter().next().unwrap().value.data()[0], 1.5);
    }

    #[test]
    fn momentum_unroll() {
        let (lr, g) = (0.05, 3.0);
        let mut set = single(2.0, g);
        let mut sgd = Sgd::new(lr, 0.9).unwrap();
        sgd.step(&mut set).unwrap();
        sgd.step(&mut set).unwrap();
        let expected = 2.0 - (lr * g + (lr * g + 0.9 * lr * g));
        assert!((set.iter().next().unwrap().value.data()[0] - expected).abs() < 1e-12);
    }

    #[test]
    fn non_finite_gradient_reports_tag() {
        let mut set = single(1.0, f64::NAN);
        let err = Sgd::new(0.1, 0.9).unwrap().step(&mut set).unwrap_err();
        assert!(matches!(err, NnError::Divergence { ref tag } if tag == "w"));
        assert_eq!(set.iter().next().unwrap().value.data()[0], 1.0);
    }

    #[test]
    fn rejects_bad_hyperparameters() {
        assert!(Sgd::<f32>::new(0.0, 0.0).is_err());
        assert!(Sgd::<f32>::new(0.01, 1.0).is_err());
    }
}
