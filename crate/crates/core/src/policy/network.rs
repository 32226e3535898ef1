use rand::Rng;

use super::FEATURE_DIM;
use crate::Scalar;

pub const HIDDEN: usize = 16;

/// Layer widths of the Q-network.
pub const DIMS: [usize; 3] = [FEATURE_DIM, HIDDEN, 1];

/// Single-hidden-layer value network: rectifier hidden layer, identity output.
/// `w1` is row-major with one row per hidden unit.
#[derive(Debug, Clone, PartialEq)]
pub struct QNetwork<T: Scalar = f64> {
    pub w1: Vec<T>,
    pub b1: Vec<T>,
    pub w2: Vec<T>,
    pub b2: T,
}

/// Per-parameter gradient, laid out like [`QNetwork`].
pub type Gradient<T> = QNetwork<T>;

impl<T: Scalar> QNetwork<T> {
    pub fn zeros() -> Self {
        Self {
            w1: vec![T::zero(); HIDDEN * FEATURE_DIM],
            b1: vec![T::zero(); HIDDEN],
            w2: vec![T::zero(); HIDDEN],
            b2: T::zero(),
        }
    }

    /// Uniform initialization in `±1/sqrt(fan_in)` per layer.
    pub fn init<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut uniform = |fan_in: usize| {
            let bound = 1.0 / (fan_in as f64).sqrt();
            T::lit(rng.gen_range(-bound..bound))
        };
        let mut net = Self::zeros();
        for w in net.w1.iter_mut() {
            *w = uniform(FEATURE_DIM);
        }
        for b in net.b1.iter_mut() {
            *b = uniform(FEATURE_DIM);
        }
        for w in net.w2.iter_mut() {
            *w = uniform(HIDDEN);
        }
        net.b2 = uniform(HIDDEN);
        net
    }

    pub fn forward(&self, x: &[T; FEATURE_DIM]) -> T {
        let mut out = self.b2;
        for (u, row) in self.w1.chunks_exact(FEATURE_DIM).enumerate() {
            let z = row
                .iter()
                .zip(x)
                .fold(self.b1[u], |acc, (&w, &xi)| acc + w * xi);
            if z > T::zero() {
                out = out + self.w2[u] * z;
            }
        }
        out
    }

    /// Forward pass that also accumulates `scale * dQ/dparam` into `grad`.
    pub fn accumulate_gradient(&self, x: &[T; FEATURE_DIM], scale: T, grad: &mut Gradient<T>) {
        grad.b2 = grad.b2 + scale;
        for (u, row) in self.w1.chunks_exact(FEATURE_DIM).enumerate() {
            let z = row
                .iter()
                .zip(x)
                .fold(self.b1[u], |acc, (&w, &xi)| acc + w * xi);
            if z > T::zero() {
                grad.w2[u] = grad.w2[u] + scale * z;
                let back = scale * self.w2[u];
                grad.b1[u] = grad.b1[u] + back;
                for (g, &xi) in grad.w1[u * FEATURE_DIM..(u + 1) * FEATURE_DIM]
                    .iter_mut()
                    .zip(x)
                {
                    *g = *g + back * xi;
                }
            }
        }
    }

    pub fn is_finite(&self) -> bool {
        self.params().all(|p| p.is_finite())
    }

    pub fn params(&self) -> impl Iterator<Item = T> + '_ {
        self.w1
            .iter()
            .chain(&self.b1)
            .chain(&self.w2)
            .copied()
            .chain(std::iter::once(self.b2))
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut T> + '_ {
        self.w1
            .iter_mut()
            .chain(self.b1.iter_mut())
            .chain(self.w2.iter_mut())
            .chain(std::iter::once(&mut self.b2))
    }

    pub fn param_count() -> usize {
        HIDDEN * FEATURE_DIM + 2 * HIDDEN + 1
    }

    pub fn cast<U: Scalar>(&self) -> QNetwork<U> {
        let c = |v: &T| U::lit(v.to_f64().expect("finite weight"));
        QNetwork {
            w1: self.w1.iter().map(c).collect(),
            b1: self.b1.iter().map(c).collect(),
            w2: self.w2.iter().map(c).collect(),
            b2: c(&self.b2),
        }
    }
}
