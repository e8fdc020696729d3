//! Central-difference stencils.

use nalgebra::DVector;

/// A central-difference stencil with a relative step.
///
/// The absolute step at coordinate value `x` is `step · (1 + |x|)`. With
/// `richardson` set, first derivatives use `(4 D(h/2) − D(h)) / 3`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stencil {
    pub step: f64,
    pub richardson: bool,
}

impl Default for Stencil {
    fn default() -> Self {
        Self {
            step: 1e-4,
            richardson: false,
        }
    }
}

impl Stencil {
    pub fn new(step: f64, richardson: bool) -> Self {
        Self { step, richardson }
    }

    pub fn absolute(&self, x: f64) -> f64 {
        self.step * (1.0 + x.abs())
    }

    /// Derivative at `t = 0` of a curve `t ↦ c(t)` sampled with absolute
    /// step `h`.
    pub fn derivative<F>(&self, h: f64, c: F) -> DVector<f64>
    where
        F: Fn(f64) -> DVector<f64>,
    {
        let d = |h: f64| (c(h) - c(-h)) / (2.0 * h);
        if self.richardson {
            (d(0.5 * h) * 4.0 - d(h)) / 3.0
        } else {
            d(h)
        }
    }

    /// Fallible form of [`Stencil::derivative`].
    pub fn try_derivative<F, E>(&self, h: f64, c: F) -> Result<DVector<f64>, E>
    where
        F: Fn(f64) -> Result<DVector<f64>, E>,
    {
        let d = |h: f64| -> Result<DVector<f64>, E> { Ok((c(h)? - c(-h)?) / (2.0 * h)) };
        if self.richardson {
            Ok((d(0.5 * h)? * 4.0 - d(h)?) / 3.0)
        } else {
            d(h)
        }
    }

    /// Fallible form of [`Stencil::derivative_scalar`].
    pub fn try_derivative_scalar<F, E>(&self, h: f64, c: F) -> Result<f64, E>
    where
        F: Fn(f64) -> Result<f64, E>,
    {
        let d = |h: f64| -> Result<f64, E> { Ok((c(h)? - c(-h)?) / (2.0 * h)) };
        if self.richardson {
            Ok((4.0 * d(0.5 * h)? - d(h)?) / 3.0)
        } else {
            d(h)
        }
    }

    pub fn derivative_scalar<F>(&self, h: f64, c: F) -> f64
    where
        F: Fn(f64) -> f64,
    {
        let d = |h: f64| (c(h) - c(-h)) / (2.0 * h);
        if self.richardson {
            (4.0 * d(0.5 * h) - d(h)) / 3.0
        } else {
            d(h)
        }
    }

    /// Partial derivatives `∂_i F(u)` of a vector-valued function.
    pub fn gradient_columns<F>(&self, u: &[f64], f: F) -> Vec<DVector<f64>>
    where
        F: Fn(&[f64]) -> DVector<f64>,
    {
        (0..u.len())
            .map(|i| {
                let h = self.absolute(u[i]);
                self.derivative(h, |t| f(&shifted(u, i, t)))
            })
            .collect()
    }

    /// Partial derivatives `∂_i F(u)` of a scalar function.
    pub fn gradient<F>(&self, u: &[f64], f: F) -> DVector<f64>
    where
        F: Fn(&[f64]) -> f64,
    {
        DVector::from_iterator(
            u.len(),
            (0..u.len()).map(|i| {
                let h = self.absolute(u[i]);
                self.derivative_scalar(h, |t| f(&shifted(u, i, t)))
            }),
        )
    }
}

/// `u + t e_i`.
pub fn shifted(u: &[f64], i: usize, t: f64) -> Vec<f64> {
    let mut v = u.to_vec();
    v[i] += t;
    v
}

/// `u + s e_i + t e_j`.
pub fn shifted2(u: &[f64], i: usize, s: f64, j: usize, t: f64) -> Vec<f64> {
    let mut v = u.to_vec();
    v[i] += s;
    v[j] += t;
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn richardson_improves_first_derivative() {
        let f = |t: f64| DVector::from_vec(vec![(1.0 + t).exp()]);
        let exact = 1f64.exp();
        let h = 1e-2;
        let plain = Stencil::new(h, false).derivative(h, f)[0];
        let rich = Stencil::new(h, true).derivative(h, f)[0];
        assert!((rich - exact).abs() < 0.01 * (plain - exact).abs());
    }

    #[test]
    fn scalar_gradient_of_quadratic() {
        let g = Stencil::default().gradient(&[1.0, -2.0], |u| u[0] * u[0] + 3.0 * u[1]);
        assert!((g[0] - 2.0).abs() < 1e-8);
        assert!((g[1] - 3.0).abs() < 1e-8);
    }
}
