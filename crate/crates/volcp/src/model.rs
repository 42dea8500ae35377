//! Conjugate AR(1) segment model with normal-inverse-gamma prior.
//!
//! Within one segment the returns follow `y_i = mu + alpha * y_{i-1} + e_i`
//! with `e_i ~ N(0, sigma^2)`, and the prior on `(beta, sigma^2)` with
//! `beta = (mu, alpha)` is normal-inverse-gamma: `sigma^2 ~ IG(a, b)` and
//! `beta | sigma^2 ~ N(0, sigma^2 * V0)`, `V0 = diag(delta0^2, delta1^2)`.
//! The intercept can be dropped (`include_mu = false`), in which case the
//! regressor is the scalar `y_{i-1}` and `V0 = delta1^2`.
//!
//! [`SegmentStats`] carries everything the posterior needs in O(1) space:
//! the coefficient scale matrix `V` (maintained directly by rank-1
//! Sherman-Morrison updates, never its inverse), the regressor-weighted sum
//! `y_tilde = sum y_i h_i`, the squared-observation sum, and the count. All
//! posterior objects (one-step predictive, coefficient posterior, noise
//! posterior) are closed-form functions of these statistics.

use crate::dist::{BivStudentT, InverseGamma, StudentT};
use crate::{Error, Result};

/// Prior hyperparameters for the segment model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyperparams {
    a: f64,
    b: f64,
    delta0: f64,
    delta1: f64,
    include_mu: bool,
}

impl Hyperparams {
    pub fn new(a: f64, b: f64, delta0: f64, delta1: f64, include_mu: bool) -> Result<Self> {
        for (name, x) in [("a", a), ("b", b), ("delta0", delta0), ("delta1", delta1)] {
            if !x.is_finite() || x <= 0.0 {
                return Err(Error::input(format!("{name} must be finite and > 0; got {x}")));
            }
        }
        Ok(Hyperparams { a, b, delta0, delta1, include_mu })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn delta0(&self) -> f64 {
        self.delta0
    }

    pub fn delta1(&self) -> f64 {
        self.delta1
    }

    pub fn include_mu(&self) -> bool {
        self.include_mu
    }

    /// Dimension of the regressor: 2 with intercept, 1 without.
    pub fn dim(&self) -> usize {
        if self.include_mu {
            2
        } else {
            1
        }
    }

    /// Prior coefficient scale matrix, embedded in the fixed 2x2 storage.
    fn prior_v(&self) -> [[f64; 2]; 2] {
        if self.include_mu {
            [[self.delta0 * self.delta0, 0.0], [0.0, self.delta1 * self.delta1]]
        } else {
            [[self.delta1 * self.delta1, 0.0], [0.0, 0.0]]
        }
    }
}

/// Regressor vector for an observation whose predecessor is `y_prev`.
fn regressor(dim: usize, y_prev: f64) -> [f64; 2] {
    if dim == 2 {
        [1.0, y_prev]
    } else {
        [y_prev, 0.0]
    }
}

fn mat_vec(m: &[[f64; 2]; 2], x: [f64; 2], dim: usize) -> [f64; 2] {
    let mut out = [0.0; 2];
    for i in 0..dim {
        for j in 0..dim {
            out[i] += m[i][j] * x[j];
        }
    }
    out
}

fn dot(a: [f64; 2], b: [f64; 2], dim: usize) -> f64 {
    (0..dim).map(|i| a[i] * b[i]).sum()
}

/// Sufficient statistics of one segment hypothesis.
///
/// After absorbing observations `y_{s+1..t}` (each with its predecessor) the
/// fields hold `V_{s,t}`, `y_tilde_{s,t}`, `sum y_i^2`, and `t - s`.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentStats {
    dim: usize,
    v: [[f64; 2]; 2],
    y_tilde: [f64; 2],
    sum_sq: f64,
    count: u32,
}

impl SegmentStats {
    /// Fresh statistics for an empty segment: `V = V0`, zero sums.
    pub fn new(h: &Hyperparams) -> Self {
        SegmentStats { dim: h.dim(), v: h.prior_v(), y_tilde: [0.0; 2], sum_sq: 0.0, count: 0 }
    }

    /// Reconstructs statistics from raw parts (checkpoint restore),
    /// validating symmetry, positive definiteness, and finiteness.
    pub fn from_parts(
        dim: usize,
        v: [[f64; 2]; 2],
        y_tilde: [f64; 2],
        sum_sq: f64,
        count: u32,
    ) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::input(format!("stats dim must be 1 or 2; got {dim}")));
        }
        for i in 0..dim {
            if v[i][..dim].iter().any(|x| !x.is_finite()) {
                return Err(Error::input("stats matrix entries must be finite".to_string()));
            }
            if !y_tilde[i].is_finite() {
                return Err(Error::input("stats y_tilde entries must be finite".to_string()));
            }
        }
        if !sum_sq.is_finite() || sum_sq < 0.0 {
            return Err(Error::input(format!(
                "stats sum_sq must be finite and >= 0; got {sum_sq}"
            )));
        }
        if dim == 2 && (v[0][1] - v[1][0]).abs() > 1e-12 * v[0][1].abs().max(1.0) {
            return Err(Error::input("stats matrix must be symmetric".to_string()));
        }
        let pd = if dim == 1 {
            v[0][0] > 0.0
        } else {
            v[0][0] > 0.0 && v[0][0] * v[1][1] - v[0][1] * v[1][0] > 0.0
        };
        if !pd {
            return Err(Error::input("stats matrix must be positive definite".to_string()));
        }
        Ok(SegmentStats { dim, v, y_tilde, sum_sq, count })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn v(&self) -> [[f64; 2]; 2] {
        self.v
    }

    pub fn y_tilde(&self) -> [f64; 2] {
        self.y_tilde
    }

    pub fn sum_sq(&self) -> f64 {
        self.sum_sq
    }

    /// Number of absorbed observations.
    pub fn count(&self) -> u32 {
        self.count
    }

    /// Absorbs one observation by a rank-1 Sherman-Morrison update of `V`.
    ///
    /// The denominator `1 + h V h'` is at least 1 for positive definite `V`,
    /// so the update preserves positive definiteness, and the outer product
    /// is written symmetrically so `V` stays exactly symmetric.
    pub fn observe(&mut self, y_new: f64, y_prev: f64) -> Result<()> {
        if !y_new.is_finite() || !y_prev.is_finite() {
            return Err(Error::numeric(format!(
                "observation must be finite; got y_new {y_new}, y_prev {y_prev}"
            )));
        }
        let h = regressor(self.dim, y_prev);
        let u = mat_vec(&self.v, h, self.dim);
        let denom = 1.0 + dot(h, u, self.dim);
        for i in 0..self.dim {
            for j in 0..=i {
                let delta = u[i] * u[j] / denom;
                self.v[i][j] -= delta;
                if i != j {
                    self.v[j][i] = self.v[i][j];
                }
            }
            self.y_tilde[i] += y_new * h[i];
        }
        self.sum_sq += y_new * y_new;
        self.count += 1;
        Ok(())
    }

    /// Posterior mean of the coefficient vector, `w = V y_tilde`.
    fn coef_mean(&self) -> [f64; 2] {
        mat_vec(&self.v, self.y_tilde, self.dim)
    }

    /// Posterior shape and scale `(a_st, b_st)` of the noise variance.
    ///
    /// The residual `sum_sq - w . y_tilde` is nonnegative in exact
    /// arithmetic; the clamp at zero only absorbs round-off, so `b_st >= b`
    /// always holds.
    pub fn shape_scale(&self, h: &Hyperparams) -> (f64, f64) {
        let w = self.coef_mean();
        let residual = self.sum_sq - dot(w, self.y_tilde, self.dim);
        let a_st = h.a + f64::from(self.count) / 2.0;
        let b_st = h.b + 0.5 * residual.max(0.0);
        (a_st, b_st)
    }

    /// One-step predictive distribution for the next observation, given that
    /// the segment continues and the last return was `y_prev`.
    pub fn predictive(&self, h: &Hyperparams, y_prev: f64) -> Result<StudentT> {
        if !y_prev.is_finite() {
            return Err(Error::numeric(format!("y_prev must be finite; got {y_prev}")));
        }
        let (a_st, b_st) = self.shape_scale(h);
        let hx = regressor(self.dim, y_prev);
        let loc = dot(hx, self.coef_mean(), self.dim);
        let quad = dot(hx, mat_vec(&self.v, hx, self.dim), self.dim);
        StudentT::new(2.0 * a_st, loc, (b_st / a_st) * (1.0 + quad))
    }

    /// Joint posterior of `(mu, alpha)`; only defined with the intercept.
    pub fn param_posterior(&self, h: &Hyperparams) -> Result<BivStudentT> {
        if self.dim != 2 {
            return Err(Error::input(
                "joint coefficient posterior requires the intercept; model omits mu".to_string(),
            ));
        }
        let (a_st, b_st) = self.shape_scale(h);
        let w = self.coef_mean();
        let r = b_st / a_st;
        let shape = [[r * self.v[0][0], r * self.v[0][1]], [r * self.v[1][0], r * self.v[1][1]]];
        BivStudentT::new(2.0 * a_st, w, shape)
    }

    /// Marginal posterior of the intercept `mu`.
    pub fn mu_posterior(&self, h: &Hyperparams) -> Result<StudentT> {
        self.param_posterior(h)?.marginal(0)
    }

    /// Marginal posterior of the AR coefficient `alpha`, in either mode.
    pub fn alpha_posterior(&self, h: &Hyperparams) -> Result<StudentT> {
        if self.dim == 2 {
            return self.param_posterior(h)?.marginal(1);
        }
        let (a_st, b_st) = self.shape_scale(h);
        StudentT::new(2.0 * a_st, self.coef_mean()[0], (b_st / a_st) * self.v[0][0])
    }

    /// Posterior of the noise variance `sigma^2`.
    pub fn sigma2_posterior(&self, h: &Hyperparams) -> Result<InverseGamma> {
        let (a_st, b_st) = self.shape_scale(h);
        InverseGamma::new(a_st, b_st)
    }
}
