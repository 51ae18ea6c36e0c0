//! Three-regime variance assembly and the mid-level sums `V1`, `V2`, `Ṽ3`.

use num_complex::Complex64;
use serde::Serialize;

use super::gclass::{at_n, g_class_asymptotic, g_class_direct, saddle_line_sum, uniform_ell_max, OverlapClass};
use super::kernel::{eval_f1, eval_h, solve_saddle, v1_kernel, KernelValue};
use super::{classify, regime_thresholds, RegimeClass, TruncationPolicy};
use crate::error::{Error, Result};
use crate::par::{self, Exec};
use crate::scalar::neumaier_sum;
use crate::special::{binomial, gamma};
use crate::words::{correlation_at_one, pro_f64, ModelParams, Word};

/// Largest `k` for which `V2` is summed over all ordered word pairs.
pub const V2_EXACT_MAX_K: usize = 8;

/// `1 - (1 + x) e^{-x}`, by its alternating series near zero.
fn phi(x: f64) -> f64 {
    if x < 1e-2 {
        // sum_{j>=2} (-1)^j (j-1) x^j / j!
        let mut acc = 0.0;
        let mut pow_fact = x * x / 2.0;
        for j in 2..12 {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            acc += sign * (j - 1) as f64 * pow_fact;
            pow_fact *= x / (j + 1) as f64;
        }
        acc
    } else {
        -(-x).exp_m1() - x * (-x).exp()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct VTerms {
    pub v1: f64,
    pub v2: f64,
    /// `false` when `k > V2_EXACT_MAX_K` and `V2` was grouped with `Θ = 0`.
    pub v2_exact: bool,
    pub v3tilde: f64,
}

impl VTerms {
    /// `V1 - V2 + 2 Ṽ3`.
    pub fn assembled(&self) -> f64 {
        self.v1 - self.v2 + 2.0 * self.v3tilde
    }
}

fn v1(n: f64, params: &ModelParams) -> f64 {
    let k = params.k;
    neumaier_sum((0..=k).map(|a| {
        let x = n * params.source.pro_counts_f64(a as u32, (k - a) as u32);
        let f = phi(x);
        binomial(k as u32, a as u32) * (f - f * f)
    }))
}

fn v2_exact(n: f64, params: &ModelParams) -> Result<f64> {
    let k = params.k;
    let src = &params.source;
    let words: Vec<Word> = Word::all(k)?.collect();
    let probs: Vec<f64> = words.iter().map(|w| pro_f64(w, src)).collect();
    let kk = (2 * k - 1) as f64;
    let mut parts = Vec::with_capacity(words.len() * words.len());
    for (iu, u) in words.iter().enumerate() {
        for (iv, v) in words.iter().enumerate() {
            if iu == iv {
                continue;
            }
            let (pu, pv) = (probs[iu], probs[iv]);
            let theta = pu * correlation_at_one(u, v, src) + pv * correlation_at_one(v, u, src);
            parts.push(n.powi(3) * pu * pv * kk * pu * pv * (-n * (pu + pv - theta)).exp());
        }
    }
    Ok(neumaier_sum(parts))
}

/// `(2k-1) n^3 sum_{u != v} pro(u)^2 pro(v)^2 e^{-n(pro(u) + pro(v))}` grouped by letter counts.
fn v2_grouped(n: f64, params: &ModelParams) -> f64 {
    let k = params.k;
    let (mut s1, mut s2) = (Vec::new(), Vec::new());
    for a in 0..=k {
        let pu = params.source.pro_counts_f64(a as u32, (k - a) as u32);
        let f = pu * pu * (-n * pu).exp();
        let m = binomial(k as u32, a as u32);
        s1.push(m * f);
        s2.push(m * f * f);
    }
    let s1 = neumaier_sum(s1);
    (2 * k - 1) as f64 * n.powi(3) * (s1 * s1 - neumaier_sum(s2))
}

/// `V1`, `V2` and `Ṽ3` at `params.n`. `V2` is exact for `k <= 8` and
/// grouped with `Θ = 0` above that (`v2_exact = false`).
pub fn v_terms(params: &ModelParams, exec: Exec) -> Result<VTerms> {
    let n = params.n;
    let nf = n as f64;
    let (v2, v2_exact) = if params.k <= V2_EXACT_MAX_K {
        (v2_exact(nf, params)?, true)
    } else {
        (v2_grouped(nf, params), false)
    };
    let classes = OverlapClass::all(params.k, None);
    let parts = par::map(exec, classes, |cl| cl.multiplicity() * g_class_direct(n, &cl, params).value);
    Ok(VTerms {
        v1: v1(nf, params),
        v2,
        v2_exact,
        v3tilde: neumaier_sum(parts),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct VarianceComponents {
    /// `n^{h(ρ)} / sqrt(ln n)` (saddle) or `n^{h(-2)}` (polar).
    pub prefactor: f64,
    pub c1: f64,
    /// `C1` with the kernel exactly as printed: `f1(s) Γ(s+1)`, and `f1(-2)` at the pole.
    pub c1_printed: f64,
    pub c2: f64,
    /// Asymptotic `V2 ≈ (2k-1)/n (sum_u (n pro(u))^2 e^{-n pro(u)})^2`, absent from the assembly.
    pub v2_estimate: f64,
    /// `value - v2_estimate`.
    pub v2_corrected: f64,
    /// Largest `|Im| / |Re|` over the saddle-line sums.
    pub max_imag_ratio: f64,
    /// Saddle abscissa `ρ`, or `-2` in the polar regime.
    pub s0: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VarianceReport {
    pub method: String,
    pub n: u64,
    pub k: usize,
    pub alpha: f64,
    pub alpha_eff: f64,
    pub regime: RegimeClass,
    /// `prefactor (C1 + 2 C2)`.
    pub value: f64,
    /// The same assembly with `c1_printed`.
    pub printed_value: f64,
    pub components: VarianceComponents,
    /// `e` such that the terms dropped by the `V1 - V2 + 2V3` reduction are `O(n^{e+ε})`.
    pub error_exponent: Option<f64>,
    pub truncation: TruncationPolicy,
    /// Overlap-length cutoff actually applied to `C2`.
    pub ell_max: usize,
    pub flags: Vec<String>,
}

/// Saddle-line terms of `C1` for `y = 0..=y_max` (unpaired, `y >= 0`).
pub fn c1_saddle_terms(params: &ModelParams, y_max: usize) -> Result<Vec<Complex64>> {
    let eff = at_n(params, params.n);
    let sol = solve_saddle(&eff, None)?;
    let ln_n = (params.n as f64).ln();
    Ok((0..=y_max)
        .map(|y| {
            let s = Complex64::new(sol.s, y as f64 * sol.k_step);
            let kern = eval_h(s, &eff);
            let phase = Complex64::new(0.0, kern.value.im * ln_n).exp();
            phase * v1_kernel(s) / (2.0 * std::f64::consts::PI * kern.d2).sqrt()
        })
        .collect())
}

/// Asymptotic variance at `params.n` with `alpha = k / ln n`. The small
/// regime returns 0 with a flag; only an upper bound is known there.
pub fn variance_asymptotic(params: &ModelParams, policy: &TruncationPolicy, exec: Exec) -> Result<VarianceReport> {
    let n = params.n;
    if n < 2 {
        return Err(Error::domain("asymptotic evaluation needs n >= 2"));
    }
    regime_thresholds(params)?;
    let eff = at_n(params, n);
    let regime = classify(eff.p(), eff.alpha)?.class;
    let ln_n = (n as f64).ln();
    let k = params.k;
    let mut flags = Vec::new();
    if let Ok(nominal) = classify(eff.p(), params.alpha) {
        if nominal.class != regime {
            flags.push(format!("alpha = {} is {:?} but k / ln n = {:.6} is {regime:?}", params.alpha, nominal.class, eff.alpha));
        }
    }
    let ell_max = policy.ell_max.unwrap_or_else(|| uniform_ell_max(n, params)).min(k - 1);
    let report = |value: f64, printed_value: f64, components: VarianceComponents, flags: Vec<String>| VarianceReport {
        method: "asymptotic".into(),
        n,
        k,
        alpha: params.alpha,
        alpha_eff: eff.alpha,
        regime,
        value,
        printed_value,
        components,
        error_exponent: (regime != RegimeClass::Small).then(|| 1.0 + eff.alpha / 2.0 * eff.p().ln()),
        truncation: *policy,
        ell_max,
        flags,
    };

    if regime == RegimeClass::Small {
        flags.push("small regime: variance is O(exp(-n^B)); reported as 0".into());
        let zero = VarianceComponents {
            prefactor: 0.0,
            c1: 0.0,
            c1_printed: 0.0,
            c2: 0.0,
            v2_estimate: 0.0,
            v2_corrected: 0.0,
            max_imag_ratio: 0.0,
            s0: f64::NAN,
        };
        return Ok(report(0.0, 0.0, zero, flags));
    }

    if ell_max + 1 < k {
        flags.push(format!("C2 summed over overlap lengths 1..={ell_max} of {}", k - 1));
    }
    let classes = OverlapClass::all(k, Some(ell_max));
    let class_values = par::map(exec, classes, |cl| g_class_asymptotic(n, &cl, params, policy).map(|g| (cl, g)));
    let mut c2_parts = Vec::with_capacity(class_values.len());
    let mut max_imag: f64 = 0.0;
    let mut boundary_classes = 0usize;
    for item in class_values {
        let (cl, g) = item?;
        max_imag = max_imag.max(g.imag_ratio);
        boundary_classes += usize::from(g.boundary);
        c2_parts.push(cl.multiplicity() * g.value);
    }
    if boundary_classes > 0 {
        flags.push(format!("{boundary_classes} overlap classes sit within 1e-6 of a threshold"));
    }
    let class_total = neumaier_sum(c2_parts);
    let kk = (2 * k - 1) as f64;

    let (prefactor, c1, c1_printed, s_sum, s0) = if regime == RegimeClass::Saddle {
        let sol = solve_saddle(&eff, None)?;
        let h = |s: Complex64| -> KernelValue { eval_h(s, &eff) };
        let (derived, _) = saddle_line_sum(&sol, ln_n, policy, |s| Ok((h(s), v1_kernel(s))))?;
        let (printed, _) = saddle_line_sum(&sol, ln_n, policy, |s| Ok((h(s), eval_f1(s) * gamma(s + 1.0))))?;
        let (s_line, _) = saddle_line_sum(&sol, ln_n, policy, |s| Ok((h(s), gamma(s + 2.0))))?;
        let prefactor = (h(Complex64::new(sol.s, 0.0)).value.re * ln_n).exp() / ln_n.sqrt();
        for z in [derived, printed, s_line] {
            if z.re != 0.0 {
                max_imag = max_imag.max(z.im.abs() / z.re.abs());
            }
        }
        (prefactor, derived.re / prefactor, printed.re / prefactor, s_line.re, sol.s)
    } else {
        let prefactor = (eval_h(Complex64::new(-2.0, 0.0), &eff).value.re * ln_n).exp();
        // Residue at s = -2: Γ(s+2) f1(s)/s -> f1(-2)/(-2) = 1/2.
        (prefactor, 0.5, eval_f1(Complex64::new(-2.0, 0.0)).re, prefactor, -2.0)
    };
    let c2 = class_total / prefactor;
    let value = prefactor * (c1 + 2.0 * c2);
    let printed_value = prefactor * (c1_printed + 2.0 * c2);
    let v2_estimate = kk / n as f64 * s_sum * s_sum;
    if printed_value < 0.0 {
        flags.push("printed assembly is negative".into());
    }
    let components = VarianceComponents {
        prefactor,
        c1,
        c1_printed,
        c2,
        v2_estimate,
        v2_corrected: value - v2_estimate,
        max_imag_ratio: max_imag,
        s0,
    };
    Ok(report(value, printed_value, components, flags))
}
