//! The exponent landscape `G(r, c, d)` of the overlap-class sum, its
//! diagonal maximum `F(r)`, and the checks built on them.
//!
//! The landscape is the `k -> infinity` limit at fixed `alpha`: the class
//! term `(alpha / k) ln Q` becomes `alpha r max(λ(c), λ(d))` with
//! `λ(c) = c ln p + (1 - c) ln q`.

use serde::Serialize;

use super::kernel::{closed_form_saddle, eval_h, solve_saddle};
use super::{alpha_infinity, classify, RegimeClass};
use crate::error::{Error, Result};
use crate::par::{self, Exec};
use crate::special::binary_entropy;
use crate::words::ModelParams;
use num_complex::Complex64;

/// Which exponent surface to evaluate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GForm {
    /// Entropy plus `H(ρ̂)` plus the growth order of `W(ρ̂)`, so that
    /// `C(kr, krc) C(kr, krd) g = n^G` up to factors polynomial in `ln n`.
    #[default]
    WithW,
    /// Entropy plus `H(ρ̂)` only.
    Bare,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LandscapeConfig {
    /// `r` values at which the full `(c, d)` grid is searched.
    pub argmax_r: Vec<f64>,
    /// Points per axis of the `(c, d)` grid.
    pub cd_resolution: usize,
    /// `F` is tabulated at `r = j * f_step` for `j = 0..f_points`.
    pub f_points: usize,
    pub f_step: f64,
    /// `r0` in the uniform tail bound `G <= F(0) - (r0/2) F'(0)` for `r > r0`.
    pub lemma8_r0: f64,
    pub form: GForm,
}

impl Default for LandscapeConfig {
    fn default() -> Self {
        LandscapeConfig {
            argmax_r: vec![0.1, 0.2, 0.4],
            cd_resolution: 101,
            f_points: 40,
            f_step: 0.02,
            lemma8_r0: 0.04,
            form: GForm::WithW,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LandscapeRow {
    pub r: f64,
    pub omega_nonempty: bool,
    /// Row-major `G(r, c_i, d_j)`; `None` outside `Ω_r`.
    pub grid: Vec<Option<f64>>,
    pub argmax: Option<(f64, f64)>,
    pub grid_max: Option<f64>,
    /// `|c* - d*|` is at most one grid cell.
    pub diagonal_within_cell: bool,
    pub rho_hat_at_argmax: Option<f64>,
    /// Continuous diagonal maximiser `c_m(r)` and `F(r)`.
    pub c_m: Option<f64>,
    pub f: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LandscapeReport {
    pub p: f64,
    pub alpha: f64,
    pub regime: RegimeClass,
    pub form: GForm,
    pub rows: Vec<LandscapeRow>,
    /// `(r, F(r))` on the tabulation grid.
    pub f_table: Vec<(f64, Option<f64>)>,
    /// Largest second difference of `F` over consecutive defined points.
    pub f_max_second_diff: f64,
    /// `F(0)` extrapolated from small positive `r`.
    pub f0: f64,
    pub f_prime0: f64,
    /// `h(ρ)` in the saddle regime, `h(-2)` in the polar one.
    pub h_ref: f64,
    pub lemma8_bound: f64,
    /// Largest grid value of `G` over `r > r0`.
    pub lemma8_worst: f64,
    pub lemma8_holds: bool,
}

struct Surface {
    p: f64,
    alpha: f64,
    alpha1: f64,
    alpha_inf: f64,
    regime: RegimeClass,
    form: GForm,
}

impl Surface {
    fn lambda(&self, c: f64) -> f64 {
        c * self.p.ln() + (1.0 - c) * (1.0 - self.p).ln()
    }

    /// `(G, ρ̂)` or `None` outside `Ω_r` (or without a real saddle).
    fn eval(&self, r: f64, c: f64, d: f64) -> Option<(f64, f64)> {
        let (lc, ld) = (self.lambda(c), self.lambda(d));
        let (big, small) = if lc >= ld { (lc, ld) } else { (ld, lc) };
        let alpha = self.alpha;
        let den = alpha * r * big + 1.0;
        let disc = if den > 0.0 { alpha * (1.0 - r) / den } else { f64::INFINITY };
        if !(disc > self.alpha1) {
            return None;
        }
        let (s, w_exp) = match self.regime {
            RegimeClass::Polar => (-2.0, 2.0 * alpha * r * small),
            _ => {
                if !(disc < self.alpha_inf) {
                    return None;
                }
                (closed_form_saddle(disc, self.p), alpha * r * (2.0 * small - big))
            }
        };
        let q = 1.0 - self.p;
        let lse = {
            let (a, b) = (-s * self.p.ln(), -s * q.ln());
            let m = a.max(b);
            m + ((a - m).exp() + (b - m).exp()).ln()
        };
        let h_inf = -s + alpha * (1.0 - r) * lse - s * alpha * r * big;
        let entropy = alpha * r * (binary_entropy(c) + binary_entropy(d));
        let w = if self.form == GForm::WithW { w_exp } else { 0.0 };
        Some((entropy + h_inf + w, s))
    }

    fn diag(&self, r: f64, c: f64) -> Option<f64> {
        self.eval(r, c, c).map(|(g, _)| g)
    }

    /// Continuous maximiser of `G(r, c, c)`: dense scan, then golden section.
    fn diagonal_max(&self, r: f64) -> Option<(f64, f64)> {
        const SCAN: usize = 400;
        let mut best: Option<(usize, f64)> = None;
        for i in 0..=SCAN {
            if let Some(g) = self.diag(r, i as f64 / SCAN as f64) {
                if best.is_none_or(|(_, b)| g > b) {
                    best = Some((i, g));
                }
            }
        }
        let (i, _) = best?;
        let f = |c: f64| self.diag(r, c).unwrap_or(f64::NEG_INFINITY);
        let mut lo = (i.saturating_sub(1)) as f64 / SCAN as f64;
        let mut hi = ((i + 1).min(SCAN)) as f64 / SCAN as f64;
        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        let mut x1 = hi - inv_phi * (hi - lo);
        let mut x2 = lo + inv_phi * (hi - lo);
        let (mut f1, mut f2) = (f(x1), f(x2));
        while hi - lo > 1e-13 {
            if f1 < f2 {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + inv_phi * (hi - lo);
                f2 = f(x2);
            } else {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - inv_phi * (hi - lo);
                f1 = f(x1);
            }
        }
        // The scan point itself may beat the bracket interior at a domain edge.
        let candidates = [(0.5 * (lo + hi), f(0.5 * (lo + hi))), (i as f64 / SCAN as f64, f(i as f64 / SCAN as f64))];
        candidates.into_iter().filter(|(_, g)| g.is_finite()).max_by(|a, b| a.1.total_cmp(&b.1))
    }

    fn grid_max(&self, r: f64, res: usize) -> (Vec<Option<(f64, f64)>>, Option<(usize, usize, f64, f64)>) {
        let step = 1.0 / (res - 1) as f64;
        let mut grid = Vec::with_capacity(res * res);
        let mut best: Option<(usize, usize, f64, f64)> = None;
        for i in 0..res {
            for j in 0..res {
                let v = self.eval(r, i as f64 * step, j as f64 * step);
                if let Some((g, s)) = v {
                    if best.is_none_or(|b| g > b.2) {
                        best = Some((i, j, g, s));
                    }
                }
                grid.push(v);
            }
        }
        (grid, best)
    }
}

/// Evaluates the landscape at the nominal `params.alpha`.
pub fn landscape(params: &ModelParams, config: &LandscapeConfig, exec: Exec) -> Result<LandscapeReport> {
    let p = params.p();
    let regime = classify(p, params.alpha)?;
    if regime.class == RegimeClass::Small {
        return Err(Error::Regime("the landscape is defined in the saddle and polar regimes only".into()));
    }
    if config.cd_resolution < 2 || config.f_points < 3 || !(config.f_step > 0.0) {
        return Err(Error::domain("landscape needs cd_resolution >= 2, f_points >= 3 and f_step > 0"));
    }
    let surface = Surface {
        p,
        alpha: params.alpha,
        alpha1: regime.alpha1,
        alpha_inf: alpha_infinity(p),
        regime: regime.class,
        form: config.form,
    };
    let res = config.cd_resolution;
    let cell = 1.0 / (res - 1) as f64;

    let rows = par::map(exec, config.argmax_r.clone(), |r| {
        let (grid, best) = surface.grid_max(r, res);
        let diag = surface.diagonal_max(r);
        let argmax = best.map(|(i, j, _, _)| (i as f64 * cell, j as f64 * cell));
        LandscapeRow {
            r,
            omega_nonempty: best.is_some(),
            grid: grid.iter().map(|v| v.map(|(g, _)| g)).collect(),
            argmax,
            grid_max: best.map(|b| b.2),
            diagonal_within_cell: best.is_some_and(|(i, j, _, _)| i.abs_diff(j) <= 1),
            rho_hat_at_argmax: best.map(|b| b.3),
            c_m: diag.map(|d| d.0),
            f: diag.map(|d| d.1),
        }
    });

    let f_at = |r: f64| surface.diagonal_max(r).map(|d| d.1);
    let f_table: Vec<(f64, Option<f64>)> =
        par::map_range(exec, 0..config.f_points, |j| (j as f64 * config.f_step, f_at(j as f64 * config.f_step)));
    let mut f_max_second_diff = f64::NEG_INFINITY;
    for w in f_table.windows(3) {
        if let (Some(a), Some(b), Some(c)) = (w[0].1, w[1].1, w[2].1) {
            f_max_second_diff = f_max_second_diff.max(a - 2.0 * b + c);
        }
    }

    let h = 1e-4;
    let (f_direct, f_h, f_2h, f_3h) = match (f_at(0.0), f_at(h), f_at(2.0 * h), f_at(3.0 * h)) {
        (Some(a), Some(b), Some(c), Some(d)) => (a, b, c, d),
        _ => return Err(Error::Regime("Ω_r is empty near r = 0".into())),
    };
    // Quadratic extrapolation to r = 0 and a Richardson one-sided slope.
    let f0 = 3.0 * f_h - 3.0 * f_2h + f_3h;
    let f_prime0 = 2.0 * (f_h - f_direct) / h - (f_2h - f_direct) / (2.0 * h);

    let h_ref = match regime.class {
        RegimeClass::Saddle => {
            let sol = solve_saddle(params, None)?;
            eval_h(Complex64::new(sol.s, 0.0), params).value.re
        }
        _ => eval_h(Complex64::new(-2.0, 0.0), params).value.re,
    };

    let r0 = config.lemma8_r0;
    let lemma8_bound = f0 - r0 / 2.0 * f_prime0;
    let tail_rs: Vec<f64> = f_table.iter().map(|(r, _)| *r).filter(|&r| r > r0).collect();
    let worst = par::map(exec, tail_rs, |r| surface.grid_max(r, res).1.map_or(f64::NEG_INFINITY, |b| b.2));
    let lemma8_worst = worst.into_iter().fold(f64::NEG_INFINITY, f64::max);

    Ok(LandscapeReport {
        p,
        alpha: params.alpha,
        regime: regime.class,
        form: config.form,
        rows,
        f_table,
        f_max_second_diff,
        f0,
        f_prime0,
        h_ref,
        lemma8_bound,
        lemma8_worst,
        lemma8_holds: lemma8_worst <= lemma8_bound,
    })
}
