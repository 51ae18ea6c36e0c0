//! Asymptotic machinery for the profile variance: regime thresholds, the
//! Mellin kernels `h` and `H`, their saddle points, the overlap-class atom
//! `g`, the three-regime variance assembly and the tail landscape.

mod gclass;
mod kernel;
mod landscape;
mod variance;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::words::ModelParams;

pub use gclass::{
    g_asymptotic, g_atom, g_atom_closed, g_atom_series, g_direct, uniform_ell_max, v3tilde_by_decomposition, GAsymptotic, GValue,
    OverlapClass,
};
pub use kernel::{
    class_sum_by_classes, class_sum_direct, closed_form_saddle, eval_f1, eval_h, eval_H, eval_W, lm, solve_saddle,
    v1_kernel, w_partial_sum, ClassGeometry, KernelValue, SaddleSolution, SeriesValue,
};
pub use landscape::{landscape, GForm, LandscapeConfig, LandscapeReport, LandscapeRow};
pub use variance::{c1_saddle_terms, v_terms, variance_asymptotic, VTerms, VarianceComponents, VarianceReport, V2_EXACT_MAX_K};

/// Distance from a threshold below which `alpha` is treated as sitting on it.
pub const BOUNDARY_TOLERANCE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegimeClass {
    /// `alpha < alpha1`: the level is almost surely full.
    Small,
    /// `alpha1 < alpha < alpha2`: saddle-point asymptotics.
    Saddle,
    /// `alpha > alpha2`: the pole of `Γ(s+2)` at `s = -2` dominates.
    Polar,
}

impl RegimeClass {
    pub fn as_str(self) -> &'static str {
        match self {
            RegimeClass::Small => "small",
            RegimeClass::Saddle => "saddle",
            RegimeClass::Polar => "polar",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Regime {
    pub alpha1: f64,
    pub alpha2: f64,
    pub class: RegimeClass,
    /// `min |alpha - alpha_i|`.
    pub margin: f64,
}

/// `(alpha1, alpha2)` for letter probability `p`; `alpha1 < alpha2` on `(1/2, 1)`.
pub fn thresholds(p: f64) -> (f64, f64) {
    let q = 1.0 - p;
    let (lp, lq) = (p.ln(), q.ln());
    let alpha1 = -1.0 / lq;
    let alpha2 = -(p * p + q * q) / (p * p * lp + q * q * lq);
    (alpha1, alpha2)
}

/// `-1 / ln p`: discriminants at or above it admit no real saddle.
pub fn alpha_infinity(p: f64) -> f64 {
    -1.0 / p.ln()
}

/// Classifies `alpha` for letter probability `p`, rejecting values within
/// [`BOUNDARY_TOLERANCE`] of a threshold.
pub fn classify(p: f64, alpha: f64) -> Result<Regime> {
    let (alpha1, alpha2) = thresholds(p);
    for threshold in [alpha1, alpha2] {
        if (alpha - threshold).abs() < BOUNDARY_TOLERANCE {
            return Err(Error::Boundary {
                alpha,
                threshold,
                tolerance: BOUNDARY_TOLERANCE,
            });
        }
    }
    let class = if alpha < alpha1 {
        RegimeClass::Small
    } else if alpha < alpha2 {
        RegimeClass::Saddle
    } else {
        RegimeClass::Polar
    };
    let margin = (alpha - alpha1).abs().min((alpha - alpha2).abs());
    Ok(Regime {
        alpha1,
        alpha2,
        class,
        margin,
    })
}

/// Thresholds and the class of the nominal `params.alpha`.
pub fn regime_thresholds(params: &ModelParams) -> Result<Regime> {
    classify(params.p(), params.alpha)
}

/// Cutoffs for every truncated sum in this module.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationPolicy {
    /// Largest `|y|` on the saddle line.
    pub y_max: usize,
    /// Largest `m` in the `W` series.
    pub m_max: usize,
    /// Largest overlap length in the `C2` class sum. `None` stops at the
    /// largest `l0` whose classes all share the regime of `alpha`.
    pub ell_max: Option<usize>,
    /// Relative tail tolerance for the adaptive `y` and `m` cutoffs.
    pub tail_tol: f64,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        TruncationPolicy {
            y_max: 12,
            m_max: 400,
            ell_max: None,
            tail_tol: 1e-12,
        }
    }
}

impl TruncationPolicy {
    pub fn summary(&self) -> String {
        let ell = self.ell_max.map_or_else(|| "auto".to_string(), |l| l.to_string());
        format!("y<={};m<={};l<={};tol={:e}", self.y_max, self.m_max, ell, self.tail_tol)
    }
}

/// Copy of `params` whose `alpha` is `k / ln n`, the value every
/// `n`-dependent evaluator uses.
pub(crate) fn effective(params: &ModelParams) -> ModelParams {
    ModelParams {
        alpha: params.alpha_eff(),
        ..*params
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thresholds_at_point_seven() {
        let (a1, a2) = thresholds(0.7);
        assert!((a1 - 0.830584).abs() < 1e-6);
        assert!((a2 - 2.048_541_425_844).abs() < 1e-10);
    }

    #[test]
    fn thresholds_near_fair_coin() {
        let (a1, a2) = thresholds(0.501);
        let ln2 = std::f64::consts::LN_2;
        assert!((a1 * ln2 - 1.0).abs() < 0.01);
        // Both thresholds tend to 1 / ln 2.
        assert!((a2 * ln2 - 1.0).abs() < 0.01);
    }

    #[test]
    fn boundary_is_rejected() {
        let (a1, a2) = thresholds(0.7);
        assert!(matches!(classify(0.7, a1 + 1e-7), Err(Error::Boundary { .. })));
        assert!(matches!(classify(0.7, a2 - 1e-7), Err(Error::Boundary { .. })));
        assert_eq!(classify(0.7, 1.4).unwrap().class, RegimeClass::Saddle);
        assert_eq!(classify(0.7, 2.6).unwrap().class, RegimeClass::Polar);
        assert_eq!(classify(0.7, 0.5).unwrap().class, RegimeClass::Small);
    }
}
