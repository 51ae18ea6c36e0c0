//! The overlap-class atom `g(n, r, c, d)`: exact evaluation by grouping
//! the middle block by letter counts, and its three-regime asymptotic.

use num_complex::Complex64;
use serde::Serialize;

use super::kernel::{eval_h_class, solve_saddle, w_series, ClassGeometry, KernelValue, SaddleSolution};
use super::{thresholds, RegimeClass, TruncationPolicy, BOUNDARY_TOLERANCE};
use crate::error::{Error, Result};
use crate::scalar::neumaier_sum;
use crate::special::{binomial, gamma};
use crate::words::{pro_f64, ModelParams, Word, MAX_WORD_LEN};

/// `ln(1e-300)`: exponent arguments below this are treated as underflow.
const LN_TINY: f64 = -690.7755;

/// Overlap class: `sigma` and `theta` of length `ell` with `i` and `j`
/// letters `a`; the shared block has `k - ell` letters.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct OverlapClass {
    pub ell: usize,
    pub i: usize,
    pub j: usize,
}

impl OverlapClass {
    /// Number of `(sigma, theta)` pairs in the class.
    pub fn multiplicity(&self) -> f64 {
        binomial(self.ell as u32, self.i as u32) * binomial(self.ell as u32, self.j as u32)
    }

    pub fn rcd(&self, k: usize) -> (f64, f64, f64) {
        let l = self.ell as f64;
        (l / k as f64, self.i as f64 / l, self.j as f64 / l)
    }

    /// Recovers `(ell, i, j)` from reals; `kr`, `krc` and `krd` must be integers.
    pub fn from_rcd(r: f64, c: f64, d: f64, k: usize) -> Result<Self> {
        let kr = k as f64 * r;
        let ell = kr.round();
        let (i, j) = ((kr * c).round(), (kr * d).round());
        let off = (kr - ell).abs().max((kr * c - i).abs()).max((kr * d - j).abs());
        if off > 1e-9 || ell < 1.0 || ell >= k as f64 || i < 0.0 || j < 0.0 || i > ell || j > ell {
            return Err(Error::domain(format!(
                "(r, c, d) = ({r}, {c}, {d}) is not an overlap class for k = {k}"
            )));
        }
        Ok(OverlapClass {
            ell: ell as usize,
            i: i as usize,
            j: j as usize,
        })
    }

    /// Every class with `1 <= ell <= ell_max` (and `ell < k`), in lexicographic order.
    pub fn all(k: usize, ell_max: Option<usize>) -> Vec<OverlapClass> {
        let top = ell_max.map_or(k.saturating_sub(1), |m| m.min(k.saturating_sub(1)));
        let mut out = Vec::new();
        for ell in 1..=top {
            for i in 0..=ell {
                for j in 0..=ell {
                    out.push(OverlapClass { ell, i, j });
                }
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GValue {
    pub value: f64,
    /// Every exponential fell below `1e-300`.
    pub underflow: bool,
}

/// Series form of one `(w, sigma, theta)` atom:
/// `e^{-y} y sum_{m>=2} t^{m-1}/m! L_m(T/Q, pro(w) T/Q, n)` with
/// `y = n pro(w) Q`, `t = n pro(w) T`. Accurate for small `t`.
pub fn g_atom_series(ln_n: f64, ln_w: f64, ln_q: f64, ln_t: f64) -> GValue {
    let ln_y = ln_n + ln_w + ln_q;
    let y = ln_y.exp();
    let t = (ln_n + ln_w + ln_t).exp();
    let a = (ln_t - ln_q).exp();
    // b x with b = pro(w) T / Q and x = n
    let bx = (ln_n + ln_w + ln_t - ln_q).exp();
    let lead = -y + ln_y;
    if lead < LN_TINY || t == 0.0 {
        return GValue {
            value: 0.0,
            underflow: lead < LN_TINY,
        };
    }
    let mut parts = Vec::new();
    let mut pow_over_fact = t / 2.0;
    let mut m = 2.0f64;
    loop {
        let l = a * (m - 1.0) * (m - 1.0) + m * (2.0 - m) + bx * m;
        let term = pow_over_fact * l;
        parts.push(term);
        if m > 3.0 && term.abs() <= 1e-18 * parts.iter().map(|x| x.abs()).sum::<f64>() {
            break;
        }
        if m > 2000.0 {
            break;
        }
        pow_over_fact *= t / (m + 1.0);
        m += 1.0;
    }
    GValue {
        value: lead.exp() * neumaier_sum(parts),
        underflow: false,
    }
}

/// Closed form of one atom:
/// `e^{-y} (e^t - 1)(1 + y + a t) - e^{-(y-t)} t (1 + y - t)` with `a = n pro(w)`.
pub fn g_atom_closed(ln_n: f64, ln_w: f64, ln_q: f64, ln_t: f64) -> GValue {
    let y = (ln_n + ln_w + ln_q).exp();
    let t = (ln_n + ln_w + ln_t).exp();
    let a = (ln_n + ln_w).exp();
    if t - y < LN_TINY {
        return GValue {
            value: 0.0,
            underflow: true,
        };
    }
    let first = (-y).exp() * t.exp_m1() * (1.0 + y + a * t);
    let second = (t - y).exp() * t * (1.0 + y - t);
    GValue {
        value: first - second,
        underflow: false,
    }
}

/// One atom, choosing the series for `t < 1/2` and the closed form otherwise.
pub fn g_atom(ln_n: f64, ln_w: f64, ln_q: f64, ln_t: f64) -> GValue {
    if ln_n + ln_w + ln_t < (0.5f64).ln() {
        g_atom_series(ln_n, ln_w, ln_q, ln_t)
    } else {
        g_atom_closed(ln_n, ln_w, ln_q, ln_t)
    }
}

/// `g(n, r, c, d)` with the middle block grouped by its number of `a`s.
pub fn g_direct(n: u64, r: f64, c: f64, d: f64, params: &ModelParams) -> Result<GValue> {
    let k = params.k;
    let class = OverlapClass::from_rcd(r, c, d, k)?;
    Ok(g_class_direct(n, &class, params))
}

pub(crate) fn g_class_direct(n: u64, class: &OverlapClass, params: &ModelParams) -> GValue {
    let k = params.k;
    let (r, c, d) = class.rcd(k);
    let geom = ClassGeometry::new(r, c, d, params);
    let ln_n = (n as f64).ln();
    let (lp, lq) = (params.p().ln(), params.q().ln());
    let w_len = k - class.ell;
    debug_assert!(w_len <= MAX_WORD_LEN);
    let mut parts = Vec::with_capacity(w_len + 1);
    let mut underflow = true;
    for a_count in 0..=w_len {
        let ln_w = a_count as f64 * lp + (w_len - a_count) as f64 * lq;
        let atom = g_atom(ln_n, ln_w, geom.ln_q, geom.ln_t);
        underflow &= atom.underflow;
        parts.push(binomial(w_len as u32, a_count as u32) * atom.value);
    }
    let value = neumaier_sum(parts);
    GValue {
        value,
        underflow: underflow && value == 0.0,
    }
}

/// `sum_l sum_{w, sigma, theta} g_{w,sigma,theta}(n)` over individual words,
/// using the unsimplified two-exponential form of each atom. `k <= 8`.
pub fn v3tilde_by_decomposition(n: u64, params: &ModelParams) -> Result<f64> {
    let k = params.k;
    if k > 8 {
        return Err(Error::resource(format!("decomposition enumeration needs k <= 8, got {k}")));
    }
    let src = &params.source;
    let x = n as f64;
    let mut parts = Vec::new();
    for ell in 1..k {
        let mids: Vec<f64> = Word::all(k - ell)?.map(|w| pro_f64(&w, src)).collect();
        let ends: Vec<f64> = Word::all(ell)?.map(|w| pro_f64(&w, src)).collect();
        for &pw in &mids {
            for &ps in &ends {
                for &pt in &ends {
                    let (q, t) = (ps + pt, ps * pt);
                    let g = (-x * pw * q).exp() * ((x * pw * t).exp() - 1.0) * (1.0 + x * pw * q + x * x * pw * pw * t)
                        - (-x * pw * (q - t)).exp() * x * pw * t * (1.0 + x * pw * (q - t));
                    parts.push(g);
                }
            }
        }
    }
    Ok(neumaier_sum(parts))
}

/// Result of the three-regime asymptotic for one class.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GAsymptotic {
    pub value: f64,
    pub regime: RegimeClass,
    /// Class discriminant `A(r, c, d)`.
    pub discriminant: f64,
    /// `A` lies within `1e-6` of a threshold; the value is from the nearest regime.
    pub boundary: bool,
    /// Saddle abscissa in the saddle regime.
    pub saddle: Option<f64>,
    /// `|Im| / |Re|` of the saddle-line sum, which is real in exact arithmetic.
    pub imag_ratio: f64,
}

/// Sum over the saddle line `s_y = s + i y K` of
/// `n^{E(s_y)} amp(s_y) / sqrt(2 pi ln n E''(s_y))` for `|y| <= y_max`,
/// stopping once a symmetric pair falls below `tail_tol` of the total.
pub(crate) fn saddle_line_sum(
    sol: &SaddleSolution,
    ln_n: f64,
    policy: &TruncationPolicy,
    mut term_at: impl FnMut(Complex64) -> Result<(KernelValue, Complex64)>,
) -> Result<(Complex64, Vec<Complex64>)> {
    let mut eval = |y: i64| -> Result<Complex64> {
        let s = Complex64::new(sol.s, y as f64 * sol.k_step);
        let (kern, amp) = term_at(s)?;
        let denom = (2.0 * std::f64::consts::PI * ln_n * kern.d2).sqrt();
        Ok((kern.value * ln_n).exp() * amp / denom)
    };
    let t0 = eval(0)?;
    let mut terms = vec![t0];
    let mut sum = t0;
    let mut converged = false;
    for y in 1..=policy.y_max as i64 {
        let pair = eval(y)? + eval(-y)?;
        terms.push(pair);
        sum += pair;
        if pair.norm() <= policy.tail_tol * sum.norm() {
            converged = true;
            break;
        }
    }
    if !converged && sum.norm() > 0.0 {
        let last = terms.last().map_or(0.0, |z| z.norm());
        if last > policy.tail_tol * sum.norm() {
            return Err(Error::Truncation(format!(
                "saddle-line sum not converged at y_max = {}: last pair {last:e}",
                policy.y_max
            )));
        }
    }
    Ok((sum, terms))
}

/// Largest `l0` such that every class with `ell <= l0` has its discriminant
/// in the same regime as `alpha = k / ln n` itself: inside `(alpha1, alpha2)`
/// in the saddle regime, at or above `alpha2` in the polar one. This is the
/// rectangle where the class asymptotic holds uniformly. Zero when even
/// `ell = 1` leaves it, or when `alpha` is below `alpha1`.
pub fn uniform_ell_max(n: u64, params: &ModelParams) -> usize {
    let eff = at_n(params, n);
    let (alpha1, alpha2) = thresholds(eff.p());
    let k = params.k;
    let polar = eff.alpha >= alpha2;
    if eff.alpha <= alpha1 {
        return 0;
    }
    let inside = |ell: usize| {
        (0..=ell).all(|i| {
            (0..=ell).all(|j| {
                let (r, c, d) = OverlapClass { ell, i, j }.rcd(k);
                let a = ClassGeometry::new(r, c, d, &eff).discriminant(&eff);
                if polar {
                    a >= alpha2
                } else {
                    a > alpha1 && a < alpha2
                }
            })
        })
    };
    (1..k).take_while(|&ell| inside(ell)).last().unwrap_or(0)
}

/// Effective-`alpha` copy of `params` for evaluation at `n`.
pub(crate) fn at_n(params: &ModelParams, n: u64) -> ModelParams {
    let alpha = if n >= 2 { params.k as f64 / (n as f64).ln() } else { f64::INFINITY };
    ModelParams { n, alpha, ..*params }
}

/// Three-regime asymptotic of `g(n, r, c, d)` with `alpha = k / ln n`.
pub fn g_asymptotic(n: u64, r: f64, c: f64, d: f64, params: &ModelParams, policy: &TruncationPolicy) -> Result<GAsymptotic> {
    let class = OverlapClass::from_rcd(r, c, d, params.k)?;
    g_class_asymptotic(n, &class, params, policy)
}

pub(crate) fn g_class_asymptotic(
    n: u64,
    class: &OverlapClass,
    params: &ModelParams,
    policy: &TruncationPolicy,
) -> Result<GAsymptotic> {
    if n < 2 {
        return Err(Error::domain("asymptotic evaluation needs n >= 2"));
    }
    let eff = at_n(params, n);
    let (r, c, d) = class.rcd(params.k);
    let geom = ClassGeometry::new(r, c, d, &eff);
    let disc = geom.discriminant(&eff);
    let (alpha1, alpha2) = thresholds(eff.p());
    let boundary = (disc - alpha1).abs() < BOUNDARY_TOLERANCE || (disc - alpha2).abs() < BOUNDARY_TOLERANCE;
    let ln_n = (n as f64).ln();
    let (a, b) = (geom.t_over_q(), geom.t_over_q2());
    if disc < alpha1 {
        return Ok(GAsymptotic {
            value: 0.0,
            regime: RegimeClass::Small,
            discriminant: disc,
            boundary,
            saddle: None,
            imag_ratio: 0.0,
        });
    }
    if disc >= alpha2 {
        let s = Complex64::new(-2.0, 0.0);
        let h = eval_h_class(s, &geom, &eff).value.re;
        let w = w_series(s, a, b, policy)?.value.re;
        return Ok(GAsymptotic {
            value: (h * ln_n).exp() * w,
            regime: RegimeClass::Polar,
            discriminant: disc,
            boundary,
            saddle: None,
            imag_ratio: 0.0,
        });
    }
    let sol = solve_saddle(&eff, Some((r, c, d)))?;
    let (sum, _) = saddle_line_sum(&sol, ln_n, policy, |s| {
        let kern = eval_h_class(s, &geom, &eff);
        let w = w_series(s, a, b, policy)?.value;
        Ok((kern, w * gamma(s + 2.0)))
    })?;
    Ok(GAsymptotic {
        value: sum.re,
        regime: RegimeClass::Saddle,
        discriminant: disc,
        boundary,
        saddle: Some(sol.s),
        imag_ratio: if sum.re != 0.0 { sum.im.abs() / sum.re.abs() } else { 0.0 },
    })
}
