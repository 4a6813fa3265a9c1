//! Model constants and the scalar helper functions shared by every solver.
//!
//! The coupling `alpha` is never supplied by the caller: it is fixed by the
//! criticality relation `2 N alpha tau = 1`. The background volume `V0`
//! (total volume `2 pi V0`) must sit strictly inside the stability window
//! `N < tau V0 / 2 < 2N - 2l`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Unvalidated parameter record, as read from a configuration file.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawParams {
    pub n: i64,
    pub l: i64,
    pub tau: f64,
    pub v0: f64,
    pub lambda: f64,
    pub s: f64,
}

impl RawParams {
    pub fn new(n: i64, l: i64, tau: f64, v0: f64) -> Self {
        Self {
            n,
            l,
            tau,
            v0,
            lambda: 1.0,
            s: 1.0,
        }
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_s(mut self, s: f64) -> Self {
        self.s = s;
        self
    }
}

/// Validated problem constants. Immutable; use the `with_*` methods to derive
/// a copy at another continuation parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelParams {
    n: u32,
    l: u32,
    tau: f64,
    alpha: f64,
    v0: f64,
    lambda: f64,
    s: f64,
}

impl ModelParams {
    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn l(&self) -> u32 {
        self.l
    }

    /// `N` as a float.
    pub fn nf(&self) -> f64 {
        f64::from(self.n)
    }

    /// `l` as a float.
    pub fn lf(&self) -> f64 {
        f64::from(self.l)
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn v0(&self) -> f64 {
        self.v0
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn raw(&self) -> RawParams {
        RawParams {
            n: i64::from(self.n),
            l: i64::from(self.l),
            tau: self.tau,
            v0: self.v0,
            lambda: self.lambda,
            s: self.s,
        }
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        validate_params(&self.raw().with_lambda(lambda))
    }

    pub fn with_s(&self, s: f64) -> Result<Self> {
        validate_params(&self.raw().with_s(s))
    }

    pub fn with_v0(&self, v0: f64) -> Result<Self> {
        let mut raw = self.raw();
        raw.v0 = v0;
        validate_params(&raw)
    }

    /// `N - 2l`, the gap between the two decay rates; positive for every
    /// accepted parameter set.
    pub fn rate_gap(&self) -> f64 {
        self.nf() - 2.0 * self.lf()
    }

    pub fn admissible_interval(&self) -> (f64, f64) {
        admissible_interval_unchecked(self.nf(), self.lf(), self.tau)
    }
}

/// Checks the parameter record and derives `alpha = 1 / (2 N tau)`.
pub fn validate_params(raw: &RawParams) -> Result<ModelParams> {
    let RawParams {
        n,
        l,
        tau,
        v0,
        lambda,
        s,
    } = *raw;
    if n <= 0 {
        return Err(Error::InvalidParams(format!("N = {n} must be > 0")));
    }
    if l <= 0 {
        return Err(Error::InvalidParams(format!("l = {l} must be > 0")));
    }
    if n > i64::from(u32::MAX) {
        return Err(Error::InvalidParams(format!("N = {n} is too large")));
    }
    if 2 * l >= n {
        return Err(Error::InvalidParams(format!(
            "2l = {} must be < N = {n} (the case 2l >= N is excluded)",
            2 * l
        )));
    }
    for (name, value) in [("tau", tau), ("V0", v0), ("lambda", lambda)] {
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::InvalidParams(format!("{name} = {value} must be > 0")));
        }
    }
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::InvalidParams(format!("s = {s} must lie in [0, 1]")));
    }
    let (nf, lf) = (n as f64, l as f64);
    let half = tau * v0 / 2.0;
    if half <= nf {
        return Err(Error::InvalidParams(format!(
            "tau*V0/2 = {half} is not > N = {n}"
        )));
    }
    if half >= 2.0 * nf - 2.0 * lf {
        return Err(Error::InvalidParams(format!(
            "tau*V0/2 = {half} is not < 2N - 2l = {}",
            2 * n - 2 * l
        )));
    }
    Ok(ModelParams {
        n: n as u32,
        l: l as u32,
        tau,
        alpha: 1.0 / (2.0 * nf * tau),
        v0,
        lambda,
        s,
    })
}

/// Open interval `(2N / tau, (4N - 4l) / tau)` of admissible volumes `V`.
pub fn admissible_interval(n: i64, l: i64, tau: f64) -> Result<(f64, f64)> {
    if n <= 0 || l <= 0 || 2 * l >= n {
        return Err(Error::InvalidParams(format!(
            "need N > 0, l > 0 and 2l < N (got N = {n}, l = {l})"
        )));
    }
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::InvalidParams(format!("tau = {tau} must be > 0")));
    }
    Ok(admissible_interval_unchecked(n as f64, l as f64, tau))
}

fn admissible_interval_unchecked(n: f64, l: f64, tau: f64) -> (f64, f64) {
    (2.0 * n / tau, (4.0 * n - 4.0 * l) / tau)
}

/// Fubini-Study density in the variable `t = ln|z|^2`: `e^t / (1 + e^t)^2`.
pub fn fs_weight(t: f64) -> f64 {
    let e = (-t.abs()).exp();
    e / ((1.0 + e) * (1.0 + e))
}

/// `ln(1 + e^t)` without overflow.
pub fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// `ln cosh(x)` without overflow.
pub fn ln_cosh(x: f64) -> f64 {
    let ax = x.abs();
    ax + (-2.0 * ax).exp().ln_1p() - std::f64::consts::LN_2
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn reference_params_are_accepted() {
        let p = validate_params(&RawParams::new(3, 1, 1.0, 7.0)).unwrap();
        assert_relative_eq!(p.alpha(), 1.0 / 6.0, max_relative = 1e-15);
        assert_eq!(p.admissible_interval(), (6.0, 8.0));
    }

    #[test]
    fn lower_admissibility_boundary_is_rejected() {
        let err = validate_params(&RawParams::new(3, 1, 1.0, 6.0)).unwrap_err();
        assert!(err.to_string().contains("is not > N = 3"), "{err}");
    }

    #[test]
    fn upper_admissibility_boundary_is_rejected() {
        let err = validate_params(&RawParams::new(3, 1, 1.0, 8.0)).unwrap_err();
        assert!(err.to_string().contains("2N - 2l"), "{err}");
    }

    #[test]
    fn degenerate_split_is_rejected() {
        let err = validate_params(&RawParams::new(2, 1, 1.0, 3.0)).unwrap_err();
        assert!(err.to_string().contains("2l = 2 must be < N = 2"), "{err}");
    }

    #[test]
    fn nonpositive_inputs_are_rejected() {
        assert!(validate_params(&RawParams::new(0, 1, 1.0, 7.0)).is_err());
        assert!(validate_params(&RawParams::new(3, 0, 1.0, 7.0)).is_err());
        assert!(validate_params(&RawParams::new(3, 1, -1.0, 7.0)).is_err());
        assert!(validate_params(&RawParams::new(3, 1, 1.0, 7.0).with_lambda(0.0)).is_err());
        assert!(validate_params(&RawParams::new(3, 1, 1.0, 7.0).with_s(1.5)).is_err());
    }

    #[test]
    fn admissible_interval_plug_ins() {
        assert_eq!(admissible_interval(3, 1, 1.0).unwrap(), (6.0, 8.0));
        assert_eq!(admissible_interval(5, 2, 1.0).unwrap(), (10.0, 12.0));
        assert_eq!(admissible_interval(3, 1, 2.0).unwrap(), (3.0, 4.0));
        assert!(admissible_interval(4, 2, 1.0).is_err());
    }

    #[test]
    fn fs_weight_values() {
        assert_eq!(fs_weight(0.0), 0.25);
        assert_eq!(fs_weight(2.0), fs_weight(-2.0));
        assert!(fs_weight(800.0) > 0.0 || fs_weight(800.0) == 0.0);
        assert!(fs_weight(800.0).is_finite());
        // closed form antiderivative -1/(1+e^t)
        let t: f64 = 1.3;
        let h = 1e-5;
        let anti = |t: f64| -1.0 / (1.0 + t.exp());
        let deriv = (anti(t + h) - anti(t - h)) / (2.0 * h);
        assert_relative_eq!(deriv, fs_weight(t), max_relative = 1e-8);
    }

    #[test]
    fn stable_helpers() {
        assert_relative_eq!(softplus(0.0), 2f64.ln(), max_relative = 1e-15);
        assert_relative_eq!(softplus(1000.0), 1000.0, max_relative = 1e-15);
        assert_relative_eq!(ln_cosh(0.7), 0.7f64.cosh().ln(), max_relative = 1e-14);
        assert_relative_eq!(ln_cosh(-900.0), 900.0 - 2f64.ln(), max_relative = 1e-15);
    }

    proptest! {
        #[test]
        fn accepted_params_satisfy_criticality_and_window(
            n in 3i64..12, lfrac in 0.0f64..1.0, tau in 0.1f64..5.0, vfrac in 0.01f64..0.99,
        ) {
            let lmax = (n - 1) / 2;
            let l = 1 + ((lmax - 1) as f64 * lfrac).round() as i64;
            let (lo, hi) = admissible_interval(n, l, tau).unwrap();
            let v0 = lo + (hi - lo) * vfrac;
            let p = validate_params(&RawParams::new(n, l, tau, v0)).unwrap();
            prop_assert!((2.0 * p.nf() * p.alpha() * p.tau() - 1.0).abs() < 1e-14);
            let half = p.tau() * p.v0() / 2.0;
            prop_assert!(p.nf() < half && half < 2.0 * p.nf() - 2.0 * p.lf());
        }

        #[test]
        fn fs_weight_is_even_and_positive(t in -700.0f64..700.0) {
            prop_assert_eq!(fs_weight(t), fs_weight(-t));
            prop_assert!(fs_weight(t) > 0.0);
        }
    }
}
