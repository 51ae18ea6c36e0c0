//! The Mellin exponents `h` and `H`, their real saddle points, and the
//! special functions `f1`, `L_m` and `W` that multiply them.

use num_complex::Complex64;
use serde::Serialize;

use super::{alpha_infinity, thresholds, TruncationPolicy};
use crate::error::{Error, Result};
use crate::scalar::neumaier_sum;
use crate::special::{binomial, gamma};
use crate::words::{pro_f64, ModelParams, Word, WORD_ENUMERATION_CAP};

/// A kernel value with its first two `s`-derivatives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelValue {
    pub value: Complex64,
    pub d1: Complex64,
    pub d2: Complex64,
}

/// `ln(p^{-s} + q^{-s})` and its derivatives, by log-sum-exp so that large
/// `|Re s|` neither overflows nor cancels.
fn log_mgf(s: Complex64, p: f64) -> KernelValue {
    let (lp, lq) = (p.ln(), (1.0 - p).ln());
    let a = -s * lp;
    let b = -s * lq;
    // w_p = p^{-s} / (p^{-s} + q^{-s})
    let (value, w_p) = if a.re >= b.re {
        let e = (b - a).exp();
        (a + (1.0 + e).ln(), 1.0 / (1.0 + e))
    } else {
        let e = (a - b).exp();
        (b + (1.0 + e).ln(), e / (1.0 + e))
    };
    let w_q = 1.0 - w_p;
    let d1 = -(w_p * lp + w_q * lq);
    let d2 = w_p * w_q * (lp - lq) * (lp - lq);
    KernelValue { value, d1, d2 }
}

/// `h(s) = -s + alpha ln(p^{-s} + q^{-s})` with `alpha = params.alpha`.
pub fn eval_h(s: Complex64, params: &ModelParams) -> KernelValue {
    let alpha = params.alpha;
    let l = log_mgf(s, params.p());
    KernelValue {
        value: -s + alpha * l.value,
        d1: -1.0 + alpha * l.d1,
        d2: alpha * l.d2,
    }
}

/// Probabilities of one overlap class, in logs. `sigma` and `theta` have
/// `k r` letters with `k r c` and `k r d` of them equal to `a`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ClassGeometry {
    pub r: f64,
    pub c: f64,
    pub d: f64,
    pub ln_sigma: f64,
    pub ln_theta: f64,
    /// `ln Q = ln(pro(sigma) + pro(theta))`.
    pub ln_q: f64,
    /// `ln T = ln(pro(sigma) pro(theta))`.
    pub ln_t: f64,
}

impl ClassGeometry {
    pub fn new(r: f64, c: f64, d: f64, params: &ModelParams) -> Self {
        let (lp, lq) = (params.p().ln(), params.q().ln());
        let kr = params.k as f64 * r;
        let ln_sigma = kr * (c * lp + (1.0 - c) * lq);
        let ln_theta = kr * (d * lp + (1.0 - d) * lq);
        let (hi, lo) = if ln_sigma >= ln_theta { (ln_sigma, ln_theta) } else { (ln_theta, ln_sigma) };
        let ln_q = hi + (lo - hi).exp().ln_1p();
        ClassGeometry {
            r,
            c,
            d,
            ln_sigma,
            ln_theta,
            ln_q,
            ln_t: ln_sigma + ln_theta,
        }
    }

    /// `T / Q`, the ratio driving the `W` series; always below 1.
    pub fn t_over_q(&self) -> f64 {
        (self.ln_t - self.ln_q).exp()
    }

    /// `T / Q^2`.
    pub fn t_over_q2(&self) -> f64 {
        (self.ln_t - 2.0 * self.ln_q).exp()
    }

    /// The class discriminant `alpha (1 - r) / ((alpha / k) ln Q + 1)`;
    /// `+inf` when the denominator is not positive.
    pub fn discriminant(&self, params: &ModelParams) -> f64 {
        let den = params.alpha / params.k as f64 * self.ln_q + 1.0;
        if den <= 0.0 {
            f64::INFINITY
        } else {
            params.alpha * (1.0 - self.r) / den
        }
    }
}

/// `H(s, r, c, d) = -s + alpha (1 - r) ln(p^{-s} + q^{-s}) - s (alpha / k) ln Q`.
#[allow(non_snake_case)]
pub fn eval_H(s: Complex64, r: f64, c: f64, d: f64, params: &ModelParams) -> KernelValue {
    eval_h_class(s, &ClassGeometry::new(r, c, d, params), params)
}

pub(crate) fn eval_h_class(s: Complex64, g: &ClassGeometry, params: &ModelParams) -> KernelValue {
    let alpha = params.alpha;
    let slope = alpha / params.k as f64 * g.ln_q;
    let l = log_mgf(s, params.p());
    KernelValue {
        value: -s + alpha * (1.0 - g.r) * l.value - s * slope,
        d1: -1.0 + alpha * (1.0 - g.r) * l.d1 - slope,
        d2: alpha * (1.0 - g.r) * l.d2,
    }
}

/// A real saddle point of `h` or of `H(., r, c, d)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SaddleSolution {
    pub s: f64,
    pub second_deriv: f64,
    /// `|first derivative at s|`.
    pub residual: f64,
    /// `K = 2 pi / ln(p / q)`; `s + i y K` is a saddle for every integer `y`.
    pub k_step: f64,
    /// The closed form `ln[-(A ln p + 1) / (A ln q + 1)] / ln(p / q)`.
    pub closed_form: f64,
    /// Effective `alpha` of the kernel: `alpha` itself, or the class discriminant.
    pub discriminant: f64,
}

/// Closed-form saddle abscissa for discriminant `a`; NaN outside `(alpha1, -1/ln p)`.
pub fn closed_form_saddle(a: f64, p: f64) -> f64 {
    let (lp, lq) = (p.ln(), (1.0 - p).ln());
    (-(a * lp + 1.0) / (a * lq + 1.0)).ln() / (lp - lq)
}

/// Root of `h'(s) = 0` (or of `dH/ds = 0` at the class `at = (r, c, d)`)
/// by Newton's method safeguarded with a sign-change bracket.
pub fn solve_saddle(params: &ModelParams, at: Option<(f64, f64, f64)>) -> Result<SaddleSolution> {
    let p = params.p();
    let geometry = at.map(|(r, c, d)| ClassGeometry::new(r, c, d, params));
    let discriminant = geometry.map_or(params.alpha, |g| g.discriminant(params));
    let (alpha1, _) = thresholds(p);
    let alpha_inf = alpha_infinity(p);
    if !(discriminant > alpha1 && discriminant < alpha_inf) {
        return Err(Error::Regime(format!(
            "no real saddle: discriminant {discriminant} outside ({alpha1}, {alpha_inf})"
        )));
    }
    let eval = |s: f64| {
        let z = Complex64::new(s, 0.0);
        match &geometry {
            Some(g) => eval_h_class(z, g, params),
            None => eval_h(z, params),
        }
    };
    let f = |s: f64| eval(s).d1.re;

    // The first derivative is strictly increasing, so a bracket is found by expansion.
    let (mut lo, mut hi) = (-1.0f64, 1.0f64);
    let mut width = 2.0;
    while f(lo) > 0.0 {
        lo -= width;
        width *= 2.0;
        if lo < -1e6 {
            return Err(Error::Regime("no sign change of the first derivative below the saddle".into()));
        }
    }
    width = 2.0;
    while f(hi) < 0.0 {
        hi += width;
        width *= 2.0;
        if hi > 1e6 {
            return Err(Error::Regime("no sign change of the first derivative above the saddle".into()));
        }
    }

    let mut s = 0.5 * (lo + hi);
    for _ in 0..300 {
        let k = eval(s);
        let (fs, dfs) = (k.d1.re, k.d2.re);
        if fs == 0.0 {
            break;
        }
        if fs < 0.0 {
            lo = s;
        } else {
            hi = s;
        }
        let newton = s - fs / dfs;
        let next = if dfs > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if (next - s).abs() <= 1e-15 * s.abs().max(1.0) {
            s = next;
            break;
        }
        s = next;
    }
    let k = eval(s);
    let residual = k.d1.re.abs();
    if residual > 1e-10 {
        return Err(Error::numeric(format!("saddle residual {residual:e} above 1e-10")));
    }
    Ok(SaddleSolution {
        s,
        second_deriv: k.d2.re,
        residual,
        k_step: 2.0 * std::f64::consts::PI / (p / (1.0 - p)).ln(),
        closed_form: closed_form_saddle(discriminant, p),
        discriminant,
    })
}

/// `f1(s) = 1 - 2^{-s} - s 2^{-s-2}`.
pub fn eval_f1(s: Complex64) -> Complex64 {
    let two_ms = (-s * std::f64::consts::LN_2).exp();
    1.0 - two_ms - s * two_ms * 0.25
}

/// `Γ(s+2) f1(s) / s`: the Mellin transform of
/// `(1+x)e^{-x} - (1+x)^2 e^{-2x}`, the per-word summand of `V1`.
pub fn v1_kernel(s: Complex64) -> Complex64 {
    let ln2 = std::f64::consts::LN_2;
    let ratio = if s.norm() < 1e-5 {
        // f1(s)/s = (ln 2 - 1/4) + s (ln 2/4 - ln^2 2/2) + O(s^2)
        (ln2 - 0.25) + s * (ln2 / 4.0 - ln2 * ln2 / 2.0)
    } else {
        eval_f1(s) / s
    };
    gamma(s + 2.0) * ratio
}

/// `L_m(a, b, x) = a (m-1)^2 + m (2-m) + b m x`.
pub fn lm(m: u32, a: f64, b: f64, x: Complex64) -> Complex64 {
    let mf = m as f64;
    let head = a * (mf - 1.0) * (mf - 1.0) + mf * (2.0 - mf);
    head + b * mf * x
}

/// A truncated series with a bound on the neglected tail.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeriesValue {
    pub value: Complex64,
    pub tail_bound: f64,
    /// Index of the last term included.
    pub last_term: usize,
}

/// Coefficient recurrence `c_2 = a / 2`, `c_{m+1} = c_m a (s+m) / (m+1)`,
/// which equals `a^{m-1} Γ(s+m) / (Γ(s+2) m!)` without evaluating `Γ`.
struct WTerms {
    s: Complex64,
    a: f64,
    b: f64,
    m: u32,
    coef: Complex64,
}

impl WTerms {
    fn new(s: Complex64, a: f64, b: f64) -> Self {
        WTerms {
            s,
            a,
            b,
            m: 2,
            coef: Complex64::new(a / 2.0, 0.0),
        }
    }

    fn next_term(&mut self) -> Complex64 {
        let m = self.m;
        let term = self.coef * lm(m, self.a, self.b, self.s + m as f64);
        self.coef *= self.a * (self.s + m as f64) / (m as f64 + 1.0);
        self.m += 1;
        term
    }

    /// Bound on `sum_{m >= self.m} |term_m|` from `|c_m| <= |c_M| rho^{m-M}`
    /// and `|L_m| <= kappa m^2`.
    fn tail_bound(&self) -> f64 {
        let big_m = self.m as f64;
        let c = self.coef.norm();
        if c == 0.0 {
            return 0.0;
        }
        let sn = self.s.norm();
        let rho = self.a * ((sn + big_m) / (big_m + 1.0)).max(1.0);
        if rho >= 1.0 {
            return f64::INFINITY;
        }
        let kappa = self.a + 1.0 + self.b * (1.0 + sn / big_m);
        let mut acc = 0.0;
        let mut pow = 1.0;
        for j in 0..100_000 {
            let m = big_m + j as f64;
            let t = pow * m * m;
            acc += t;
            if t < 1e-18 * acc && j > 2 {
                break;
            }
            pow *= rho;
        }
        c * kappa * acc
    }
}

/// Sum of the `W` series terms `m = 2..=m_max` with `a = T/Q`, `b = T/Q^2`.
pub fn w_partial_sum(s: Complex64, a: f64, b: f64, m_max: usize) -> Complex64 {
    let mut terms = WTerms::new(s, a, b);
    let parts: Vec<Complex64> = (2..=m_max).map(|_| terms.next_term()).collect();
    Complex64::new(neumaier_sum(parts.iter().map(|z| z.re)), neumaier_sum(parts.iter().map(|z| z.im)))
}

pub(crate) fn w_series(s: Complex64, a: f64, b: f64, policy: &TruncationPolicy) -> Result<SeriesValue> {
    let mut terms = WTerms::new(s, a, b);
    let (mut re, mut im) = (Vec::new(), Vec::new());
    let mut sum = Complex64::new(0.0, 0.0);
    let mut bound = f64::INFINITY;
    while (terms.m as usize) <= policy.m_max.max(2) {
        let t = terms.next_term();
        re.push(t.re);
        im.push(t.im);
        sum += t;
        if t.norm() <= policy.tail_tol * sum.norm() || terms.coef.norm() == 0.0 {
            bound = terms.tail_bound();
            if bound <= policy.tail_tol * sum.norm() {
                break;
            }
        }
    }
    if !bound.is_finite() || bound > policy.tail_tol * sum.norm() {
        bound = terms.tail_bound();
    }
    let value = Complex64::new(neumaier_sum(re), neumaier_sum(im));
    if bound > policy.tail_tol * value.norm() {
        return Err(Error::Truncation(format!(
            "W series tail bound {bound:e} exceeds {} x |W| = {:e} at m_max = {}",
            policy.tail_tol,
            policy.tail_tol * value.norm(),
            policy.m_max
        )));
    }
    Ok(SeriesValue {
        value,
        tail_bound: bound,
        last_term: terms.m as usize - 1,
    })
}

/// `W(s, r, c, d)`, summed adaptively up to `policy.m_max` terms.
#[allow(non_snake_case)]
pub fn eval_W(s: Complex64, r: f64, c: f64, d: f64, params: &ModelParams, policy: &TruncationPolicy) -> Result<SeriesValue> {
    let g = ClassGeometry::new(r, c, d, params);
    w_series(s, g.t_over_q(), g.t_over_q2(), policy)
}

/// `n^{-s} sum_l sum_{w, sigma, theta} pro(w)^{-s} (pro(sigma) + pro(theta))^{-s}`
/// by enumerating words; `k <= 12`.
pub fn class_sum_direct(s: f64, params: &ModelParams) -> Result<f64> {
    let k = params.k;
    if k > WORD_ENUMERATION_CAP {
        return Err(Error::resource(format!("direct class sum needs k <= {WORD_ENUMERATION_CAP}, got {k}")));
    }
    let src = &params.source;
    let mut parts = Vec::new();
    for ell in 1..k {
        let w_sum = neumaier_sum(Word::all(k - ell)?.map(|w| pro_f64(&w, src).powf(-s)));
        let short: Vec<f64> = Word::all(ell)?.map(|w| pro_f64(&w, src)).collect();
        let pair_sum = neumaier_sum(short.iter().flat_map(|&a| short.iter().map(move |&b| (a + b).powf(-s))));
        parts.push(w_sum * pair_sum);
    }
    Ok((params.n as f64).powf(-s) * neumaier_sum(parts))
}

/// The same sum grouped into classes: `sum C(l,i) C(l,j) n^{H(s, l/k, i/l, j/l)}`
/// with `alpha = k / ln n`.
pub fn class_sum_by_classes(s: f64, params: &ModelParams) -> f64 {
    let eff = super::effective(params);
    let ln_n = (params.n as f64).ln();
    let k = params.k;
    let mut parts = Vec::new();
    for ell in 1..k {
        for i in 0..=ell {
            for j in 0..=ell {
                let (r, c, d) = (ell as f64 / k as f64, i as f64 / ell as f64, j as f64 / ell as f64);
                let h = eval_H(Complex64::new(s, 0.0), r, c, d, &eff).value.re;
                parts.push(binomial(ell as u32, i as u32) * binomial(ell as u32, j as u32) * (h * ln_n).exp());
            }
        }
    }
    neumaier_sum(parts)
}
