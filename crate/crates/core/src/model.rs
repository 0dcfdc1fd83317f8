//! Quadrature conventions, decibel conversions and the closed-form
//! squeezing/entanglement relations.
//!
//! Convention: the quadrature fluctuation of mode `a_j` at angle `θ` is
//! `δA_{j,θ} = e^{-iθ} δa_j + e^{iθ} δa_j†`. Vacuum (and coherent light) has
//! variance exactly 1 in every quadrature, so every spectrum in this crate is
//! expressed relative to the shot-noise limit (SNL = 1). Decibels are decimal:
//! `10 log10(V / V_SNL)`. All arithmetic is done on linear variances; dB only
//! appears at the edges.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Global quadrature normalization record.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct QuadratureConvention;

impl QuadratureConvention {
    /// Variance of any single-mode quadrature of vacuum.
    pub const VACUUM_VARIANCE: f64 = 1.0;

    /// Separability bound of the two-mode variance sum.
    pub const DUAN_SIMON_BOUND: f64 = 2.0;
}

fn finite(x: f64, what: &str) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::Domain(format!("{what} must be finite, got {x}")))
    }
}

/// Linear SNL-normalized variance for a level in dB.
pub fn db_to_variance(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Level in dB of an SNL-normalized variance.
pub fn variance_to_db(variance: f64) -> f64 {
    10.0 * variance.log10()
}

/// Standard-deviation ratio `10^(s/20)` relative to the SNL.
pub fn db_to_std_ratio(s_db: f64) -> Result<f64> {
    let s = finite(s_db, "squeezing level")?;
    Ok(10f64.powf(s / 20.0))
}

/// Sum of the variances of `(A1,0 − A2,0)/√2` and `(A1,π/2 + A2,π/2)/√2`.
///
/// Values below 2 certify inseparability.
pub fn duan_simon(s_minus_db: f64, s_plus_db: f64) -> Result<f64> {
    let m = finite(s_minus_db, "amplitude-difference squeezing")?;
    let p = finite(s_plus_db, "phase-sum squeezing")?;
    Ok(db_to_variance(m) + db_to_variance(p))
}

/// Both conjugate combinations below the SNL (strict).
pub fn squeezed_state_entangled(s_minus_db: f64, s_plus_db: f64) -> Result<bool> {
    Ok(db_to_std_ratio(s_minus_db)? < 1.0 && db_to_std_ratio(s_plus_db)? < 1.0)
}

/// Raw measured squeezing `10 log10(signal / snl)`.
pub fn raw_squeezing_db(signal_variance: f64, snl_variance: f64) -> Result<f64> {
    if !(signal_variance > 0.0 && signal_variance.is_finite()) {
        return Err(Error::Domain(format!(
            "signal variance must be positive, got {signal_variance}"
        )));
    }
    if !(snl_variance > 0.0 && snl_variance.is_finite()) {
        return Err(Error::Domain(format!(
            "shot-noise variance must be positive, got {snl_variance}"
        )));
    }
    Ok(variance_to_db(signal_variance / snl_variance))
}

/// Inputs of the phase-sum squeezing correction for LO shot-noise masking
/// and detection imperfections.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrectionInputs {
    /// Raw measured squeezing, dB.
    pub s_exp_db: f64,
    /// OPO power over LO power, per beam.
    pub rho: f64,
    /// Photodiode quantum efficiency.
    pub eta: f64,
    /// Squared fringe contrast of homodyne detector 1.
    pub eta1: f64,
    /// Squared fringe contrast of homodyne detector 2.
    pub eta2: f64,
}

impl CorrectionInputs {
    /// Ideal detection: only the power ratio is accounted for.
    pub fn rho_only(s_exp_db: f64, rho: f64) -> Self {
        Self {
            s_exp_db,
            rho,
            eta: 1.0,
            eta1: 1.0,
            eta2: 1.0,
        }
    }

    /// Efficiencies given as fringe contrasts, `η_i = C_i²`.
    pub fn with_contrasts(s_exp_db: f64, rho: f64, eta: f64, c1: f64, c2: f64) -> Self {
        Self {
            s_exp_db,
            rho,
            eta,
            eta1: c1 * c1,
            eta2: c2 * c2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        finite(self.s_exp_db, "raw squeezing")?;
        if !(self.rho >= 0.0 && self.rho.is_finite()) {
            return Err(Error::Domain(format!("rho must be >= 0, got {}", self.rho)));
        }
        for (name, v) in [("eta", self.eta), ("eta1", self.eta1), ("eta2", self.eta2)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::Domain(format!("{name} must lie in (0, 1], got {v}")));
            }
        }
        Ok(())
    }

    /// Returns `(A, B)` such that the true variance is `A·V_exp − B`.
    pub fn coefficients(&self) -> (f64, f64) {
        let Self {
            rho, eta, eta1, eta2, ..
        } = *self;
        let sum = eta1 + eta2;
        let denom = eta * sum;
        let a = 2.0 * (rho + 1.0) * (rho * (1.0 - eta) + 1.0) / denom;
        let b = (2.0 * (rho + 1.0) + sum * (rho * (1.0 - eta) - eta)) / denom;
        (a, b)
    }

    /// Raw level the correction maps onto `true_db` (inverse relation).
    pub fn raw_for_true(&self, true_db: f64) -> Result<f64> {
        self.validate()?;
        let (a, b) = self.coefficients();
        raw_squeezing_db((db_to_variance(true_db) + b) / a, 1.0)
    }
}

/// Corrected phase-sum squeezing in dB:
/// `10 log10(A·10^(S_exp/10) − B)` with
/// `A = 2(ρ+1)[ρ(1−η)+1] / (η(η1+η2))` and
/// `B = [2(ρ+1) + (η1+η2)(ρ(1−η)−η)] / (η(η1+η2))`.
pub fn correct_squeezing(inputs: &CorrectionInputs) -> Result<f64> {
    inputs.validate()?;
    let (a, b) = inputs.coefficients();
    let argument = a * db_to_variance(inputs.s_exp_db) - b;
    if !(argument > 0.0) {
        return Err(Error::UnphysicalCorrection { argument });
    }
    Ok(variance_to_db(argument))
}

/// Headline squeezing numbers and the derived entanglement witnesses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SqueezingReport {
    pub s_minus_db: f64,
    pub s_plus_db: f64,
    pub delta_minus: f64,
    pub delta_plus: f64,
    pub duan_simon: f64,
}

impl SqueezingReport {
    pub fn new(s_minus_db: f64, s_plus_db: f64) -> Result<Self> {
        Ok(Self {
            s_minus_db,
            s_plus_db,
            delta_minus: db_to_std_ratio(s_minus_db)?,
            delta_plus: db_to_std_ratio(s_plus_db)?,
            duan_simon: duan_simon(s_minus_db, s_plus_db)?,
        })
    }

    pub fn squeezed_state_entangled(&self) -> bool {
        self.delta_minus < 1.0 && self.delta_plus < 1.0
    }

    pub fn duan_simon_entangled(&self) -> bool {
        self.duan_simon < QuadratureConvention::DUAN_SIMON_BOUND
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    const RHO: f64 = 2.8 / 6.5;

    #[test]
    fn std_ratio_checkpoints() {
        assert_abs_diff_eq!(db_to_std_ratio(-3.0).unwrap(), 0.708, epsilon = 0.005);
        assert_abs_diff_eq!(db_to_std_ratio(-1.35).unwrap(), 0.856, epsilon = 0.005);
        assert_eq!(db_to_std_ratio(0.0).unwrap(), 1.0);
        assert!(db_to_std_ratio(f64::NAN).is_err());
        assert!(db_to_std_ratio(f64::INFINITY).is_err());
    }

    #[test]
    fn duan_simon_checkpoints() {
        assert_abs_diff_eq!(duan_simon(-3.0, -1.35).unwrap(), 1.234, epsilon = 0.001);
        assert_eq!(duan_simon(0.0, 0.0).unwrap(), 2.0);
        assert_abs_diff_eq!(duan_simon(-10.0, -10.0).unwrap(), 0.2, epsilon = 1e-15);
        assert!(duan_simon(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn squeezed_state_criterion() {
        assert!(squeezed_state_entangled(-3.0, -1.35).unwrap());
        assert!(!squeezed_state_entangled(-3.0, 0.5).unwrap());
        assert!(!squeezed_state_entangled(0.0, 0.0).unwrap());
    }

    #[test]
    fn correction_checkpoints() {
        let full = CorrectionInputs::with_contrasts(-0.9, RHO, 0.95, 0.986, 0.928);
        let s = correct_squeezing(&full).unwrap();
        assert_abs_diff_eq!(s, -1.558, epsilon = 0.002);
        let rho_only = CorrectionInputs::rho_only(-0.9, RHO);
        assert_abs_diff_eq!(correct_squeezing(&rho_only).unwrap(), -1.35, epsilon = 0.01);
    }

    #[test]
    fn correction_rejects_bad_inputs() {
        let mut c = CorrectionInputs::rho_only(-0.9, -0.1);
        assert!(matches!(correct_squeezing(&c), Err(Error::Domain(_))));
        c.rho = 0.4;
        c.eta = 0.0;
        assert!(matches!(correct_squeezing(&c), Err(Error::Domain(_))));
        c.eta = 1.2;
        assert!(matches!(correct_squeezing(&c), Err(Error::Domain(_))));
        // A raw level far below what rho-masking allows has no physical preimage.
        let c = CorrectionInputs::rho_only(-10.0, 1.0);
        assert!(matches!(correct_squeezing(&c), Err(Error::UnphysicalCorrection { .. })));
    }

    #[test]
    fn raw_squeezing_values() {
        assert_abs_diff_eq!(raw_squeezing_db(0.8128, 1.0).unwrap(), -0.90, epsilon = 0.005);
        assert_eq!(raw_squeezing_db(1.0, 1.0).unwrap(), 0.0);
        assert_abs_diff_eq!(raw_squeezing_db(2.0, 1.0).unwrap(), 3.0103, epsilon = 1e-4);
        assert!(raw_squeezing_db(0.0, 1.0).is_err());
        assert!(raw_squeezing_db(1.0, -1.0).is_err());
    }

    #[test]
    fn larger_rho_masks_more() {
        for &s_exp in &[-0.2, -0.5, -0.9, -1.5] {
            let mut prev = f64::INFINITY;
            for i in 0..40 {
                let rho = i as f64 * 0.05;
                let c = CorrectionInputs::rho_only(s_exp, rho);
                let s = correct_squeezing(&c).unwrap();
                assert!(s <= prev + 1e-12, "rho={rho} s_exp={s_exp}: {s} > {prev}");
                prev = s;
            }
        }
    }

    #[test]
    fn report_fields() {
        let r = SqueezingReport::new(-3.0, -1.35).unwrap();
        assert!(r.squeezed_state_entangled());
        assert!(r.duan_simon_entangled());
        assert_abs_diff_eq!(r.delta_minus * r.delta_minus, 10f64.powf(-0.3), epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn db_round_trip(s in -20.0f64..20.0) {
            let ratio = db_to_std_ratio(s).unwrap();
            let back = raw_squeezing_db(ratio * ratio, 1.0).unwrap();
            prop_assert!((back - s).abs() < 1e-9);
            let v = db_to_variance(s);
            prop_assert!(((variance_to_db(v) - s) / s.abs().max(1.0)).abs() < 1e-12);
        }

        #[test]
        fn symmetric_duan_simon(s in -20.0f64..20.0) {
            prop_assert_eq!(duan_simon(s, s).unwrap(), 2.0 * 10f64.powf(s / 10.0));
        }

        #[test]
        fn ideal_correction_is_identity(s in -20.0f64..20.0) {
            let c = CorrectionInputs::rho_only(s, 0.0);
            prop_assert!((correct_squeezing(&c).unwrap() - s).abs() < 1e-9);
        }

        #[test]
        fn forward_then_correct(true_db in -6.0f64..3.0, rho in 0.0f64..2.0,
                                eta in 0.7f64..1.0, c1 in 0.85f64..1.0, c2 in 0.85f64..1.0) {
            let c = CorrectionInputs::with_contrasts(0.0, rho, eta, c1, c2);
            let raw = c.raw_for_true(true_db).unwrap();
            let back = correct_squeezing(&CorrectionInputs { s_exp_db: raw, ..c }).unwrap();
            prop_assert!((back - true_db).abs() < 1e-9);
        }
    }
}
