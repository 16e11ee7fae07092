use super::net::{DenseNet, Gradients};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OptimizerKind {
    Sgd { lr: f64 },
    Adam { alpha: f64, beta1: f64, beta2: f64 },
}

impl OptimizerKind {
    /// Adam with the paper-standard GAN settings (α = 2e-4, β₁ = 0.5, β₂ = 0.9).
    pub fn adam_default() -> Self {
        OptimizerKind::Adam { alpha: 2e-4, beta1: 0.5, beta2: 0.9 }
    }

    /// The same optimizer with its step size multiplied by `k`.
    pub fn with_rate_factor(self, k: f64) -> Self {
        match self {
            OptimizerKind::Sgd { lr } => OptimizerKind::Sgd { lr: lr * k },
            OptimizerKind::Adam { alpha, beta1, beta2 } => OptimizerKind::Adam { alpha: alpha * k, beta1, beta2 },
        }
    }
}

const ADAM_EPS: f64 = 1e-8;

/// Optimizer state for one network. Moment buffers follow the order of
/// [`DenseNet::layers`], weight then bias.
#[derive(Debug, Clone, PartialEq)]
pub struct Optimizer {
    pub kind: OptimizerKind,
    pub step: u64,
    pub first: Vec<Vec<f64>>,
    pub second: Vec<Vec<f64>>,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, net: &DenseNet) -> Self {
        let buffers = || -> Vec<Vec<f64>> {
            net.layers
                .iter()
                .flat_map(|l| [vec![0.0; l.weight.len()], vec![0.0; l.bias.len()]])
                .collect()
        };
        let (first, second) = match kind {
            OptimizerKind::Sgd { .. } => (Vec::new(), Vec::new()),
            OptimizerKind::Adam { .. } => (buffers(), buffers()),
        };
        Optimizer { kind, step: 0, first, second }
    }

    /// Descend along `grads`.
    pub fn apply(&mut self, net: &mut DenseNet, grads: &Gradients) {
        self.step += 1;
        match self.kind {
            OptimizerKind::Sgd { lr } => net.for_each_param_mut(grads, |_, p, g| {
                for (p, g) in p.iter_mut().zip(g) {
                    *p -= lr * g;
                }
            }),
            OptimizerKind::Adam { alpha, beta1, beta2 } => {
                let t = self.step as i32;
                let c1 = 1.0 - beta1.powi(t);
                let c2 = 1.0 - beta2.powi(t);
                let (first, second) = (&mut self.first, &mut self.second);
                net.for_each_param_mut(grads, |slot, p, g| {
                    let (m, v) = (&mut first[slot], &mut second[slot]);
                    for i in 0..p.len() {
                        m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
                        v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
                        p[i] -= alpha * (m[i] / c1) / ((v[i] / c2).sqrt() + ADAM_EPS);
                    }
                });
            }
        }
    }
}
