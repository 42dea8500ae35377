//! Distribution types returned by the segment model: location-scale
//! Student-t (univariate and bivariate) and inverse-gamma.
//!
//! Conventions that callers must not second-guess:
//!
//! * `StudentT` carries the **squared** scale as its third parameter, so the
//!   one-step predictive can be built directly from the posterior algebra
//!   without a square root.
//! * Quantiles are found by bisection on CDF evaluations, stopping when the
//!   CDF at the returned point is within `1e-8` of the requested level.
//!   There is no closed-form inverse anywhere in this module.

use crate::{Error, Result};
use statrs::function::beta::beta_reg;
use statrs::function::gamma::{gamma_ur, ln_gamma};

/// Absolute tolerance on the CDF value reached by quantile bisection.
pub const QUANTILE_CDF_TOL: f64 = 1e-8;

/// Bracket expansion stops once a bound exceeds this magnitude; a quantile
/// beyond it is not representable as a meaningful f64 and is reported as a
/// numeric error rather than returned as infinity.
const BRACKET_LIMIT: f64 = 1e300;

fn check_positive(name: &str, x: f64) -> Result<()> {
    if !x.is_finite() || x <= 0.0 {
        return Err(Error::input(format!("{name} must be finite and > 0; got {x}")));
    }
    Ok(())
}

fn check_finite(name: &str, x: f64) -> Result<()> {
    if !x.is_finite() {
        return Err(Error::input(format!("{name} must be finite; got {x}")));
    }
    Ok(())
}

/// Bisection on a monotone CDF. `lo` and `hi` must bracket the level `q`.
fn bisect(cdf: impl Fn(f64) -> f64, q: f64, mut lo: f64, mut hi: f64) -> Result<f64> {
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        let f = cdf(mid);
        if (f - q).abs() <= QUANTILE_CDF_TOL {
            return Ok(mid);
        }
        if f < q {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) <= f64::EPSILON * mid.abs().max(1.0) {
            let f = cdf(lo);
            if (f - q).abs() <= QUANTILE_CDF_TOL {
                return Ok(lo);
            }
            return Err(Error::numeric(format!(
                "quantile bisection stalled at level {q}: cdf step too steep"
            )));
        }
    }
    Err(Error::numeric(format!("quantile bisection did not converge at level {q}")))
}

fn check_level(q: f64) -> Result<()> {
    if !(q.is_finite() && 0.0 < q && q < 1.0) {
        return Err(Error::input(format!("quantile level must lie in (0, 1); got {q}")));
    }
    Ok(())
}

/// Location-scale Student-t distribution with `scale_sq` the squared scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StudentT {
    dof: f64,
    loc: f64,
    scale_sq: f64,
}

impl StudentT {
    pub fn new(dof: f64, loc: f64, scale_sq: f64) -> Result<Self> {
        check_positive("dof", dof)?;
        check_finite("loc", loc)?;
        check_positive("scale_sq", scale_sq)?;
        Ok(StudentT { dof, loc, scale_sq })
    }

    pub fn dof(&self) -> f64 {
        self.dof
    }

    pub fn loc(&self) -> f64 {
        self.loc
    }

    pub fn scale_sq(&self) -> f64 {
        self.scale_sq
    }

    /// Mean of the distribution; defined only for dof > 1.
    pub fn mean(&self) -> Result<f64> {
        if self.dof <= 1.0 {
            return Err(Error::numeric(format!(
                "Student-t mean undefined for dof {} <= 1",
                self.dof
            )));
        }
        Ok(self.loc)
    }

    pub fn log_pdf(&self, y: f64) -> f64 {
        let nu = self.dof;
        let z_sq = (y - self.loc) * (y - self.loc) / self.scale_sq;
        ln_gamma((nu + 1.0) / 2.0)
            - ln_gamma(nu / 2.0)
            - 0.5 * (nu * std::f64::consts::PI * self.scale_sq).ln()
            - 0.5 * (nu + 1.0) * (z_sq / nu).ln_1p()
    }

    pub fn pdf(&self, y: f64) -> f64 {
        self.log_pdf(y).exp()
    }

    /// CDF via the regularized incomplete beta function.
    pub fn cdf(&self, y: f64) -> f64 {
        let z = (y - self.loc) / self.scale_sq.sqrt();
        if z == 0.0 {
            return 0.5;
        }
        let z_sq = z * z;
        // z_sq may overflow to infinity; nu / inf == 0 and beta_reg(_, _, 0) == 0,
        // so the tails degrade gracefully to exactly 0 and 1.
        let x = self.dof / (self.dof + z_sq);
        let tail = 0.5 * beta_reg(self.dof / 2.0, 0.5, x);
        if z < 0.0 {
            tail
        } else {
            1.0 - tail
        }
    }

    /// Equal-tailed quantile at level `q` in (0, 1) by bisection.
    pub fn quantile(&self, q: f64) -> Result<f64> {
        check_level(q)?;
        let scale = self.scale_sq.sqrt();
        let mut lo = self.loc - scale;
        let mut hi = self.loc + scale;
        while self.cdf(lo) > q {
            lo = self.loc + 2.0 * (lo - self.loc);
            if lo.abs() > BRACKET_LIMIT {
                return Err(Error::numeric(format!(
                    "Student-t quantile at level {q} lies outside f64 range (dof {})",
                    self.dof
                )));
            }
        }
        while self.cdf(hi) < q {
            hi = self.loc + 2.0 * (hi - self.loc);
            if hi.abs() > BRACKET_LIMIT {
                return Err(Error::numeric(format!(
                    "Student-t quantile at level {q} lies outside f64 range (dof {})",
                    self.dof
                )));
            }
        }
        bisect(|x| self.cdf(x), q, lo, hi)
    }
}

/// Bivariate Student-t for the joint posterior of the segment coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BivStudentT {
    dof: f64,
    loc: [f64; 2],
    shape: [[f64; 2]; 2],
}

impl BivStudentT {
    pub fn new(dof: f64, loc: [f64; 2], shape: [[f64; 2]; 2]) -> Result<Self> {
        check_positive("dof", dof)?;
        check_finite("loc[0]", loc[0])?;
        check_finite("loc[1]", loc[1])?;
        for row in &shape {
            for &v in row {
                check_finite("shape entry", v)?;
            }
        }
        if (shape[0][1] - shape[1][0]).abs() > 1e-12 * shape[0][1].abs().max(1.0) {
            return Err(Error::input("shape matrix must be symmetric".to_string()));
        }
        let det = shape[0][0] * shape[1][1] - shape[0][1] * shape[1][0];
        if shape[0][0] <= 0.0 || det <= 0.0 {
            return Err(Error::input(format!(
                "shape matrix must be positive definite; leading minors {} and {det}",
                shape[0][0]
            )));
        }
        Ok(BivStudentT { dof, loc, shape })
    }

    pub fn dof(&self) -> f64 {
        self.dof
    }

    pub fn loc(&self) -> [f64; 2] {
        self.loc
    }

    pub fn shape(&self) -> [[f64; 2]; 2] {
        self.shape
    }

    /// Marginal of component `i`: Student-t with the same dof, the component
    /// location, and the corresponding diagonal entry as squared scale.
    pub fn marginal(&self, i: usize) -> Result<StudentT> {
        if i > 1 {
            return Err(Error::input(format!("component index must be 0 or 1; got {i}")));
        }
        StudentT::new(self.dof, self.loc[i], self.shape[i][i])
    }
}

/// Inverse-gamma distribution with shape-scale parameterization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InverseGamma {
    shape: f64,
    scale: f64,
}

impl InverseGamma {
    pub fn new(shape: f64, scale: f64) -> Result<Self> {
        check_positive("shape", shape)?;
        check_positive("scale", scale)?;
        Ok(InverseGamma { shape, scale })
    }

    pub fn shape(&self) -> f64 {
        self.shape
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn mode(&self) -> f64 {
        self.scale / (self.shape + 1.0)
    }

    /// CDF via the upper regularized incomplete gamma function.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        // scale / x may overflow for subnormal x; gamma_ur(_, inf) == 0.
        gamma_ur(self.shape, self.scale / x)
    }

    /// Equal-tailed quantile at level `q` in (0, 1) by bisection.
    pub fn quantile(&self, q: f64) -> Result<f64> {
        check_level(q)?;
        let mut lo = self.mode();
        let mut hi = self.mode();
        while self.cdf(lo) > q {
            lo /= 2.0;
            if lo < f64::MIN_POSITIVE {
                lo = 0.0;
                break;
            }
        }
        while self.cdf(hi) < q {
            hi *= 2.0;
            if hi > BRACKET_LIMIT {
                return Err(Error::numeric(format!(
                    "inverse-gamma quantile at level {q} lies outside f64 range (shape {})",
                    self.shape
                )));
            }
        }
        bisect(|x| self.cdf(x), q, lo, hi)
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    fn assert_close(got: f64, want: f64, tol: f64) {
        assert!(
            (got - want).abs() <= tol,
            "got {got}, want {want} (|diff| = {:e} > {tol:e})",
            (got - want).abs()
        );
    }

    /// Simpson integration of a density over the whole real line using the
    /// substitution x = center + width * tan(theta), theta in (-pi/2, pi/2).
    /// Independent of the CDF code path.
    /// Mass of `pdf` over the whole line: the double-exponential map
    /// `x = center + width * sinh(sinh(u))` turns any polynomial tail into
    /// doubly exponential decay in `u`, so the trapezoid rule converges
    /// fast and no endpoint handling is needed even for tails as heavy as
    /// a Cauchy's. Points where the density underflows to zero are skipped
    /// before the (possibly overflowing) Jacobian is formed.
    pub(crate) fn quad_mass(pdf: impl Fn(f64) -> f64, center: f64, width: f64) -> f64 {
        let n = 6000usize;
        let umax = 12.0;
        let h = 2.0 * umax / n as f64;
        let mut sum = 0.0;
        for i in 0..=n {
            let u = -umax + h * i as f64;
            let su = u.sinh();
            let x = center + width * su.sinh();
            let f = pdf(x);
            if f > 0.0 {
                let jac = width * u.cosh() * su.cosh();
                let w = if i == 0 || i == n { 0.5 } else { 1.0 };
                sum += w * f * jac;
            }
        }
        sum * h
    }

    #[test]
    fn standard_cauchy_log_pdf() {
        let d = StudentT::new(1.0, 0.0, 1.0).unwrap();
        assert_close(d.log_pdf(0.0), -1.144_729_885_849_400_2, 1e-14);
        assert_close(d.log_pdf(1.0), -1.837_877_066_409_345_5, 1e-14);
    }

    #[test]
    fn log_pdf_matches_reference_values() {
        // Frozen from 30-digit evaluation of the location-scale density with
        // squared scale 9 (scale 3).
        let d = StudentT::new(5.0, 2.0, 9.0).unwrap();
        assert_close(d.log_pdf(0.7), -2.177_834_435_360_411_5, 1e-13);
    }

    #[test]
    fn cdf_matches_reference_values() {
        let d = StudentT::new(5.0, 2.0, 9.0).unwrap();
        assert_close(d.cdf(0.7), 0.341_415_029_227_630_1, 1e-13);
        let d = StudentT::new(1.001, -1.0, 0.25).unwrap();
        assert_close(d.cdf(3.4), 0.964_054_545_336_004_2, 1e-13);
    }

    #[test]
    fn cdf_basics() {
        let d = StudentT::new(3.0, 1.5, 4.0).unwrap();
        assert_eq!(d.cdf(1.5), 0.5);
        assert_close(d.cdf(2.5) + d.cdf(0.5), 1.0, 1e-14);
        assert!(d.cdf(-1e200) == 0.0 && d.cdf(1e200) == 1.0);
        let mut prev = 0.0;
        for i in -40..=40 {
            let f = d.cdf(1.5 + i as f64 * 0.5);
            assert!(f >= prev, "cdf must be nondecreasing");
            prev = f;
        }
    }

    #[test]
    fn quantile_hits_cdf_level() {
        let d = StudentT::new(3.0, 0.0, 1.0).unwrap();
        let q = d.quantile(0.975).unwrap();
        assert_close(q, 3.182_446_305_283_709_6, 1e-6);
        assert_close(d.cdf(q), 0.975, QUANTILE_CDF_TOL);
    }

    #[test]
    fn quantile_cdf_round_trip() {
        let cases = [
            (1.001, 0.0, 1.0, 2.5),
            (3.0, -2.0, 0.5, -1.0),
            (10.0, 5.0, 2.0, 6.3),
            (50.0, 0.0, 1e-4, 0.01),
        ];
        for (dof, loc, scale_sq, x) in cases {
            let d = StudentT::new(dof, loc, scale_sq).unwrap();
            let back = d.quantile(d.cdf(x)).unwrap();
            assert_close(back, x, 1e-6);
        }
    }

    #[test]
    fn quantile_rejects_bad_levels() {
        let d = StudentT::new(3.0, 0.0, 1.0).unwrap();
        for q in [0.0, 1.0, -0.1, 1.1, f64::NAN] {
            assert!(d.quantile(q).is_err());
        }
    }

    #[test]
    fn quantile_out_of_range_is_an_error_not_infinity() {
        // dof 1e-3 puts the 97.5% quantile far beyond f64; this must surface
        // as a numeric error.
        let d = StudentT::new(1e-3, 0.0, 1.0).unwrap();
        match d.quantile(0.975) {
            Err(Error::Numeric(_)) => {}
            other => panic!("expected numeric error, got {other:?}"),
        }
    }

    #[test]
    fn student_t_integrates_to_one() {
        for (dof, loc, scale_sq) in [
            (0.5, 0.0, 1.0),
            (1.0, 2.0, 0.01),
            (3.0, -1.0, 25.0),
            (7.5, 0.3, 1e-6),
            (40.0, 1e3, 4.0),
        ] {
            let d = StudentT::new(dof, loc, scale_sq).unwrap();
            let mass = quad_mass(|x| d.pdf(x), loc, scale_sq.sqrt());
            assert_close(mass, 1.0, 1e-6);
        }
    }

    #[test]
    fn inverse_gamma_cdf_closed_form_at_shape_one() {
        // For shape 1 the CDF is exp(-scale/x); independent closed form.
        let d = InverseGamma::new(1.0, 1.7).unwrap();
        for x in [0.1, 0.5, 1.0, 3.0, 40.0] {
            assert_close(d.cdf(x), (-1.7f64 / x).exp(), 1e-13);
        }
    }

    #[test]
    fn inverse_gamma_cdf_matches_reference_values() {
        let d = InverseGamma::new(2.5, 1.7).unwrap();
        assert_close(d.cdf(1.3), 0.759_026_399_032_233_2, 1e-13);
        let d = InverseGamma::new(0.5005, 0.001).unwrap();
        assert_close(d.cdf(0.4), 0.943_797_708_053_361_4, 1e-13);
    }

    #[test]
    fn inverse_gamma_quantile_identity() {
        // F(1) = exp(-1) when shape == scale == 1, so the quantile of
        // exp(-1) must come back as 1.
        let d = InverseGamma::new(1.0, 1.0).unwrap();
        let x = d.quantile((-1.0f64).exp()).unwrap();
        assert_close(x, 1.0, 1e-6);
    }

    #[test]
    fn inverse_gamma_mode() {
        let d = InverseGamma::new(2.5, 1.7).unwrap();
        assert_close(d.mode(), 1.7 / 3.5, 1e-15);
    }

    #[test]
    fn inverse_gamma_quantile_round_trip() {
        for (shape, scale, x) in [(0.5005, 5e-4, 1e-3), (2.0, 1.0, 0.7), (10.0, 30.0, 3.0)] {
            let d = InverseGamma::new(shape, scale).unwrap();
            let back = d.quantile(d.cdf(x)).unwrap();
            assert_close(back / x, 1.0, 1e-6);
        }
    }

    #[test]
    fn biv_marginals() {
        let d = BivStudentT::new(4.0, [1.0, -0.5], [[2.0, 0.3], [0.3, 0.7]]).unwrap();
        let m0 = d.marginal(0).unwrap();
        assert_eq!((m0.dof(), m0.loc(), m0.scale_sq()), (4.0, 1.0, 2.0));
        let m1 = d.marginal(1).unwrap();
        assert_eq!((m1.dof(), m1.loc(), m1.scale_sq()), (4.0, -0.5, 0.7));
        assert!(d.marginal(2).is_err());
    }

    #[test]
    fn constructors_reject_bad_parameters() {
        assert!(StudentT::new(0.0, 0.0, 1.0).is_err());
        assert!(StudentT::new(1.0, f64::NAN, 1.0).is_err());
        assert!(StudentT::new(1.0, 0.0, -1.0).is_err());
        assert!(InverseGamma::new(-1.0, 1.0).is_err());
        assert!(InverseGamma::new(1.0, 0.0).is_err());
        // asymmetric shape
        assert!(BivStudentT::new(1.0, [0.0; 2], [[1.0, 0.5], [0.2, 1.0]]).is_err());
        // not positive definite
        assert!(BivStudentT::new(1.0, [0.0; 2], [[1.0, 2.0], [2.0, 1.0]]).is_err());
    }
}
