//! Rational generating functions for word occurrences, their dominant
//! singularities, and the residue estimates built on them.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::par::{self, Exec};
use crate::poly::Poly;
use crate::scalar::{neumaier_sum, Scalar};
use crate::words::{correlation_poly, pro, Source, Word, PAIR_ENUMERATION_CAP};

/// `numerator / denominator^denominator_power` as a power series in `z`.
#[derive(Clone, Debug, PartialEq)]
pub struct RationalGF<T> {
    pub numerator: Poly<T>,
    pub denominator: Poly<T>,
    pub denominator_power: u32,
}

impl<T: Scalar> RationalGF<T> {
    pub fn new(numerator: Poly<T>, denominator: Poly<T>, denominator_power: u32) -> Result<Self> {
        if denominator.coeff(0) == T::zero() {
            return Err(Error::domain("generating function denominator vanishes at z = 0"));
        }
        Ok(RationalGF {
            numerator,
            denominator,
            denominator_power,
        })
    }

    /// Coefficients `[z^0 .. z^n_max]`.
    pub fn series(&self, n_max: usize) -> Vec<T> {
        let den = self.denominator.pow(self.denominator_power);
        let d = den.coeffs();
        let d0 = d[0].clone();
        let mut out: Vec<T> = Vec::with_capacity(n_max + 1);
        for n in 0..=n_max {
            let mut acc = self.numerator.coeff(n);
            for (j, dj) in d.iter().enumerate().skip(1).take(n) {
                if *dj != T::zero() {
                    acc = acc - dj.clone() * out[n - j].clone();
                }
            }
            out.push(acc / d0.clone());
        }
        out
    }

    pub fn coeff(&self, n: usize) -> T {
        self.series(n).pop().expect("series has n + 1 terms")
    }

    pub fn to_f64(&self) -> RationalGF<f64> {
        RationalGF {
            numerator: self.numerator.to_f64(),
            denominator: self.denominator.to_f64(),
            denominator_power: self.denominator_power,
        }
    }
}

/// Generating functions for the number of occurrences of one word.
#[derive(Clone, Debug)]
pub struct SingleGfs<T> {
    pub word: Word,
    pub pro: T,
    pub autocorrelation: Poly<T>,
    /// `D_u(z) = (1 - z) C_{u,u}(z) + pro(u) z^k`
    pub d: Poly<T>,
    /// `P(U_n = 0)`
    pub g0: RationalGF<T>,
    /// `P(U_n = 1)`
    pub g1: RationalGF<T>,
}

pub fn build_single_gfs<T: Scalar>(u: &Word, src: &Source) -> SingleGfs<T> {
    let k = u.len();
    let pu: T = pro(u, src);
    let c = correlation_poly::<T>(u, u, src);
    let d = &(&Poly::one_minus_z() * &c) + &Poly::monomial(pu.clone(), k);
    SingleGfs {
        word: *u,
        pro: pu.clone(),
        g0: RationalGF {
            numerator: c.clone(),
            denominator: d.clone(),
            denominator_power: 1,
        },
        g1: RationalGF {
            numerator: Poly::monomial(pu, k),
            denominator: d.clone(),
            denominator_power: 2,
        },
        autocorrelation: c,
        d,
    }
}

/// Generating functions for joint occurrence counts of two distinct words
/// of equal length.
#[derive(Clone, Debug)]
pub struct JointGfs<T> {
    pub u: SingleGfs<T>,
    pub v: SingleGfs<T>,
    pub c_uv: Poly<T>,
    pub c_vu: Poly<T>,
    /// `C_{u,u} C_{v,v} - C_{u,v} C_{v,u}`
    pub psi: Poly<T>,
    /// `C_{v,v} - C_{u,v}`
    pub phi_u: Poly<T>,
    /// `C_{u,u} - C_{v,u}`
    pub phi_v: Poly<T>,
    pub delta: Poly<T>,
    pub g00: RationalGF<T>,
    pub g10: RationalGF<T>,
    pub g01: RationalGF<T>,
    pub g11: RationalGF<T>,
}

pub fn build_joint_gfs<T: Scalar>(u: &Word, v: &Word, src: &Source) -> Result<JointGfs<T>> {
    if u.len() != v.len() {
        return Err(Error::domain(format!("words of unequal length {} and {}", u.len(), v.len())));
    }
    if u == v {
        return Err(Error::domain(format!("joint generating functions need distinct words, got {u} twice")));
    }
    let k = u.len();
    let su = build_single_gfs::<T>(u, src);
    let sv = build_single_gfs::<T>(v, src);
    let c_uv = correlation_poly::<T>(u, v, src);
    let c_vu = correlation_poly::<T>(v, u, src);
    let (cuu, cvv) = (&su.autocorrelation, &sv.autocorrelation);
    let psi = &(cuu * cvv) - &(&c_uv * &c_vu);
    let phi_u = cvv - &c_uv;
    let phi_v = cuu - &c_vu;
    let tail = &phi_u.scale(&su.pro) + &phi_v.scale(&sv.pro);
    let delta = &(&Poly::one_minus_z() * &psi) + &tail.shift(k);

    let n10 = &(&delta * cvv) - &(&psi * &sv.d);
    let n01 = &(&delta * cuu) - &(&psi * &su.d);
    let two = T::one() + T::one();
    let inner = &(&(cvv * &su.d) + &(cuu * &sv.d)) + &(&Poly::one_minus_z() * &psi);
    let n11 = &(&(&delta * &delta) - &(&delta * &inner)) + &(&(&psi * &su.d) * &sv.d).scale(&two);

    let gf = |num: Poly<T>, power| RationalGF {
        numerator: num,
        denominator: delta.clone(),
        denominator_power: power,
    };
    Ok(JointGfs {
        g00: gf(psi.clone(), 1),
        g10: gf(n10, 2),
        g01: gf(n01, 2),
        g11: gf(n11, 3),
        u: su,
        v: sv,
        c_uv,
        c_vu,
        psi,
        phi_u,
        phi_v,
        delta,
    })
}

/// `[P(U_n = 0), P(U_n = 1), P(U_n >= 2)]` for `n` letters.
pub fn single_class_probs<T: Scalar>(gfs: &SingleGfs<T>, n_letters: usize) -> [T; 3] {
    let p0 = gfs.g0.coeff(n_letters);
    let p1 = gfs.g1.coeff(n_letters);
    let p2 = T::one() - p0.clone() - p1.clone();
    [p0, p1, p2]
}

/// Joint class table `t[i][j] = P(U_n = i, V_n = j)` with class `2`
/// meaning "at least two".
pub fn joint_class_probs<T: Scalar>(gfs: &JointGfs<T>, n_letters: usize) -> [[T; 3]; 3] {
    let mu = single_class_probs(&gfs.u, n_letters);
    let mv = single_class_probs(&gfs.v, n_letters);
    let t00 = gfs.g00.coeff(n_letters);
    let t10 = gfs.g10.coeff(n_letters);
    let t01 = gfs.g01.coeff(n_letters);
    let t11 = gfs.g11.coeff(n_letters);
    let t02 = mu[0].clone() - t00.clone() - t01.clone();
    let t12 = mu[1].clone() - t10.clone() - t11.clone();
    let t20 = mv[0].clone() - t00.clone() - t10.clone();
    let t21 = mv[1].clone() - t01.clone() - t11.clone();
    let t22 = mu[2].clone() - t20.clone() - t21.clone();
    [[t00, t01, t02], [t10, t11, t12], [t20, t21, t22]]
}

/// Radius of the disc in which a denominator must have exactly one root.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[derive(Default)]
pub enum RadiusPolicy {
    Fixed(f64),
    /// The default radius when it separates the dominant root from the
    /// rest, otherwise the midpoint between the dominant root and the next
    /// root modulus.
    #[default]
    Adaptive,
}

pub const DEFAULT_RADIUS: f64 = 1.25;


#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RootCertificate {
    pub root: f64,
    pub radius: f64,
    pub winding_count: i64,
    /// `|P(root)|`
    pub residual: f64,
    /// `sum |c_i| root^i`, the natural size of `P` near the root.
    pub scale: f64,
    /// Smallest modulus among the remaining roots.
    pub second_modulus: Option<f64>,
}

impl RootCertificate {
    pub fn passed(&self) -> bool {
        self.winding_count == 1
            && self.residual <= 1e-12 * self.scale
            && self.root > 1.0
            && self.root <= self.radius
    }
}

/// Smallest real root above one of a polynomial that is positive at one.
///
/// Candidates come from the full complex root set, so a narrow dip below
/// zero between two close roots cannot be stepped over; each candidate is
/// then polished on a sign-change bracket.
pub fn real_root_above_one(poly: &Poly<f64>) -> Result<f64> {
    let f = |x: f64| poly.eval(&x);
    let dp = poly.derivative();
    let f1 = f(1.0);
    if !(f1 > 0.0) {
        return Err(Error::numeric(format!("polynomial is not positive at z = 1 (value {f1:e})")));
    }
    let mut candidates: Vec<f64> = all_roots(poly)?
        .into_iter()
        .filter(|z| z.re > 1.0 && z.im.abs() <= 1e-6 * z.norm())
        .map(|z| z.re)
        .collect();
    candidates.sort_by(f64::total_cmp);
    for x0 in candidates {
        // widen a bracket around the candidate until the sign flips
        let mut w = 1e-10 * x0;
        let bracket = loop {
            let (lo, hi) = ((x0 - w).max(1.0), x0 + w);
            if f(lo) > 0.0 && f(hi) <= 0.0 {
                break Some((lo, hi));
            }
            if f(lo) == 0.0 {
                break Some((lo, lo));
            }
            w *= 8.0;
            if w > 1e-3 * x0 {
                break None;
            }
        };
        let Some((mut lo, mut hi)) = bracket else { continue };
        if lo == hi {
            return Ok(lo);
        }
        let mut x = x0.clamp(lo, hi);
        for _ in 0..200 {
            let fx = f(x);
            if fx == 0.0 {
                return Ok(x);
            }
            if fx > 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            let d = dp.eval(&x);
            let newton = x - fx / d;
            let next = if d != 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
            if (next - x).abs() <= 4.0 * f64::EPSILON * x || hi - lo <= 4.0 * f64::EPSILON * hi {
                return Ok(next);
            }
            x = next;
        }
        return Ok(x);
    }
    Err(Error::numeric("no sign change of the polynomial above z = 1"))
}

/// All complex roots by Aberth-Ehrlich iteration, ascending in modulus.
pub fn all_roots(poly: &Poly<f64>) -> Result<Vec<Complex64>> {
    let Some(deg) = poly.degree() else {
        return Err(Error::domain("the zero polynomial has no isolated roots"));
    };
    if deg == 0 {
        return Ok(Vec::new());
    }
    let lead = poly.coeff(deg);
    let dp = poly.derivative();
    let a0 = poly.coeff(0).abs();
    let r0 = if a0 > 0.0 { (a0 / lead.abs()).powf(1.0 / deg as f64) } else { 1.0 };
    let mut z: Vec<Complex64> = (0..deg)
        .map(|j| Complex64::from_polar(r0, 2.0 * std::f64::consts::PI * j as f64 / deg as f64 + 0.4))
        .collect();
    let mut converged = false;
    for _ in 0..1000 {
        let mut max_step: f64 = 0.0;
        for j in 0..deg {
            let pz = poly.eval_complex(z[j]);
            let dz = dp.eval_complex(z[j]);
            if pz == Complex64::new(0.0, 0.0) {
                continue;
            }
            let ratio = pz / dz;
            let repulsion: Complex64 = (0..deg).filter(|&l| l != j).map(|l| 1.0 / (z[j] - z[l])).sum();
            let step = ratio / (1.0 - ratio * repulsion);
            if step.is_finite() {
                z[j] -= step;
                max_step = max_step.max(step.norm() / z[j].norm().max(1e-300));
            }
        }
        if max_step < 1e-15 {
            converged = true;
            break;
        }
    }
    if !converged && z.iter().any(|r| !r.is_finite()) {
        return Err(Error::numeric("root iteration diverged"));
    }
    z.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
    Ok(z)
}

/// Number of roots inside `|z| = radius` by the argument principle: the
/// change of `arg P` around the circle with adaptive subdivision.
pub fn winding_number(poly: &Poly<f64>, radius: f64) -> Result<i64> {
    let deg = poly.degree().unwrap_or(0);
    let samples = 64 * (deg + 1);
    let scale = poly.coeff_scale() * radius.max(1.0).powi(deg as i32);
    let at = |theta: f64| -> Result<Complex64> {
        let w = poly.eval_complex(Complex64::from_polar(radius, theta));
        if w.norm() <= 1e-14 * scale {
            return Err(Error::numeric(format!("polynomial vanishes on the contour |z| = {radius}")));
        }
        Ok(w)
    };
    fn segment(
        at: &dyn Fn(f64) -> Result<Complex64>,
        t0: f64,
        w0: Complex64,
        t1: f64,
        w1: Complex64,
        depth: u32,
    ) -> Result<f64> {
        let d = (w1 / w0).arg();
        if d.abs() <= 0.5 || depth == 0 {
            return Ok(d);
        }
        let tm = 0.5 * (t0 + t1);
        let wm = at(tm)?;
        Ok(segment(at, t0, w0, tm, wm, depth - 1)? + segment(at, tm, wm, t1, w1, depth - 1)?)
    }
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut total = 0.0;
    let mut t0 = 0.0;
    let mut w0 = at(0.0)?;
    let first = w0;
    for j in 1..=samples {
        let t1 = two_pi * j as f64 / samples as f64;
        let w1 = if j == samples { first } else { at(t1)? };
        total += segment(&at, t0, w0, t1, w1, 30)?;
        t0 = t1;
        w0 = w1;
    }
    Ok((total / two_pi).round() as i64)
}

fn radius_for(policy: RadiusPolicy, root: f64, moduli: &[f64]) -> f64 {
    match policy {
        RadiusPolicy::Fixed(r) => r,
        RadiusPolicy::Adaptive => {
            // roots tied with the dominant one stay inside and fail the certificate
            let tie = root * (1.0 + 1e-9);
            let next = moduli.iter().copied().filter(|&m| m > tie).reduce(f64::min);
            match next {
                Some(s) if root < DEFAULT_RADIUS && DEFAULT_RADIUS < s => DEFAULT_RADIUS,
                Some(s) => 0.5 * (root + s),
                None => DEFAULT_RADIUS.max(2.0 * root),
            }
        }
    }
}

/// Dominant root of a denominator together with its uniqueness certificate.
/// A failed certificate is reported, not raised.
pub fn dominant_root(poly: &Poly<f64>, policy: RadiusPolicy) -> Result<RootCertificate> {
    let root = real_root_above_one(poly)?;
    let roots = all_roots(poly)?;
    let nearest = roots
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - root).norm().total_cmp(&(b.1 - root).norm()))
        .map(|(i, _)| i);
    let second_modulus = roots
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != nearest)
        .map(|(_, r)| r.norm())
        .reduce(f64::min);
    let moduli: Vec<f64> = roots
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != nearest)
        .map(|(_, r)| r.norm())
        .collect();
    let radius = radius_for(policy, root, &moduli);
    let winding_count = winding_number(poly, radius)?;
    let residual = poly.eval(&root).abs();
    let scale = poly
        .coeffs()
        .iter()
        .enumerate()
        .map(|(i, c)| c.abs() * root.powi(i as i32))
        .sum();
    Ok(RootCertificate {
        root,
        radius,
        winding_count,
        residual,
        scale,
        second_modulus,
    })
}

/// Residue constants of the single-word estimates
/// `P(U_{n+k-1} = 0) ~ c00 / R^{n+k}` and
/// `P(U_{n+k-1} = 1) ~ c10 / R^n + c11 n / R^{n+1}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SingleConstants {
    pub certificate: RootCertificate,
    pub k: usize,
    pub pro: f64,
    pub c00: f64,
    pub c10: f64,
    pub c11: f64,
}

impl SingleConstants {
    pub fn root(&self) -> f64 {
        self.certificate.root
    }

    /// Estimate of `P(U_{n+k-1} <= 1)`.
    pub fn at_most_one(&self, n: f64) -> f64 {
        let r = self.root();
        let rn = r.powf(-n);
        self.c00 * rn * r.powi(-(self.k as i32)) + self.c10 * rn + self.c11 * n * rn / r
    }
}

/// Residue constants of the joint estimates of `P(U = i, V = j)`,
/// `i, j <= 1`, at `n + k - 1` letters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct JointConstants {
    pub certificate: RootCertificate,
    pub k: usize,
    pub a00: f64,
    pub a10u: f64,
    pub a10v: f64,
    pub a11u: f64,
    pub a11v: f64,
    pub a20: f64,
    pub a21: f64,
    pub a22: f64,
}

impl JointConstants {
    pub fn root(&self) -> f64 {
        self.certificate.root
    }
}

fn nondegenerate(d1: f64, what: &str) -> Result<f64> {
    if d1.abs() < 1e-12 || !d1.is_finite() {
        return Err(Error::numeric(format!("degenerate root of {what}: derivative {d1:e}")));
    }
    Ok(d1)
}

pub fn residue_constants_single(u: &Word, src: &Source, policy: RadiusPolicy) -> Result<SingleConstants> {
    let gfs = build_single_gfs::<f64>(u, src);
    single_constants_from(&gfs, policy)
}

fn single_constants_from(gfs: &SingleGfs<f64>, policy: RadiusPolicy) -> Result<SingleConstants> {
    let certificate = dominant_root(&gfs.d, policy)?;
    let r = certificate.root;
    let d1 = nondegenerate(gfs.d.derivative().eval(&r), "D_u")?;
    let d2 = gfs.d.derivative().derivative().eval(&r);
    let pu = gfs.pro;
    Ok(SingleConstants {
        certificate,
        k: gfs.word.len(),
        pro: pu,
        c00: -gfs.autocorrelation.eval(&r) / d1,
        c10: pu * d2 / d1.powi(3),
        c11: pu / (d1 * d1),
    })
}

pub fn residue_constants_joint(u: &Word, v: &Word, src: &Source, policy: RadiusPolicy) -> Result<JointConstants> {
    let gfs = build_joint_gfs::<f64>(u, v, src)?;
    joint_constants_from(&gfs, policy)
}

fn joint_constants_from(gfs: &JointGfs<f64>, policy: RadiusPolicy) -> Result<JointConstants> {
    let certificate = dominant_root(&gfs.delta, policy)?;
    let r = certificate.root;
    let dd = [
        gfs.delta.derivative(),
        gfs.delta.derivative().derivative(),
        gfs.delta.derivative().derivative().derivative(),
    ];
    let d1 = nondegenerate(dd[0].eval(&r), "delta")?;
    let d2 = dd[1].eval(&r);
    let d3 = dd[2].eval(&r);
    let double_pole = |num: &Poly<f64>| {
        let n0 = num.eval(&r);
        let n1 = num.derivative().eval(&r);
        (n0 * d2 / d1.powi(3) - n1 / (d1 * d1), n0 / (d1 * d1))
    };
    let (a10u, a11u) = double_pole(&gfs.g10.numerator);
    let (a10v, a11v) = double_pole(&gfs.g01.numerator);
    let g = &gfs.g11.numerator;
    let (n0, n1, n2) = (g.eval(&r), g.derivative().eval(&r), g.derivative().derivative().eval(&r));
    Ok(JointConstants {
        certificate,
        k: gfs.u.word.len(),
        a00: -gfs.psi.eval(&r) / d1,
        a10u,
        a10v,
        a11u,
        a11v,
        a20: -n2 / (2.0 * d1.powi(3)) + 3.0 * n1 * d2 / (2.0 * d1.powi(4))
            - n0 * (3.0 * d2 * d2 - d1 * d3) / (2.0 * d1.powi(5)),
        a21: n1 / d1.powi(3) - 3.0 * n0 * d2 / (2.0 * d1.powi(4)),
        a22: -n0 / (2.0 * d1.powi(3)),
    })
}

/// Constants grouping the residue estimates by powers of `n`, so that
/// `P(U <= 1) ~ (C0 + n C1) / R_u^n` and
/// `P(U <= 1, V <= 1) - P(U <= 1) P(V <= 1) ~
///  sum_i (A_i / R_uv^n - B_i / (R_u R_v)^n) n^i`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AggregateConstants {
    pub a: [f64; 3],
    pub b: [f64; 3],
    /// `(C0, C1)` of `u`
    pub c: [f64; 2],
    /// `(C0, C1)` of `v`
    pub c_v: [f64; 2],
}

/// Which grouping of the residue constants to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ConstantsForm {
    /// Exact regrouping of the residue estimates.
    Derived,
    /// The commonly quoted closed forms, which drop the `c10` term from
    /// `B0` and shift the powers of `R`; kept for comparison only.
    Printed,
}

fn single_aggregate(s: &SingleConstants, form: ConstantsForm) -> [f64; 2] {
    let (r, k) = (s.root(), s.k as i32);
    match form {
        ConstantsForm::Derived => [s.c00 / r.powi(k) + s.c10, s.c11 / r],
        ConstantsForm::Printed => [(s.c00 + s.c10) / r.powi(k) + k as f64 * s.c11 / r.powi(k + 1), s.c11 / r.powi(k + 1)],
    }
}

pub fn aggregate_from(su: &SingleConstants, sv: &SingleConstants, j: &JointConstants, form: ConstantsForm) -> AggregateConstants {
    let r = j.root();
    let k = j.k as i32;
    let kf = k as f64;
    let cu = single_aggregate(su, form);
    let cv = single_aggregate(sv, form);
    let (a, b) = match form {
        ConstantsForm::Derived => {
            let lin = j.a11u + j.a11v + j.a21;
            (
                [
                    (j.a00 + j.a10u + j.a10v + j.a20) / r.powi(k) + lin * kf / r.powi(k + 1) + j.a22 * kf * (kf + 1.0) / r.powi(k + 2),
                    lin / r.powi(k + 1) + j.a22 * (2.0 * kf + 1.0) / r.powi(k + 2),
                    j.a22 / r.powi(k + 2),
                ],
                [cu[0] * cv[0], cu[0] * cv[1] + cu[1] * cv[0], cu[1] * cv[1]],
            )
        }
        ConstantsForm::Printed => {
            let (ru, rv) = (su.root(), sv.root());
            let mu = su.c10 + su.c11 / ru;
            let mv = sv.c10 + sv.c11 / rv;
            (
                [
                    (j.a00 + j.a10u + j.a10v + j.a20) / r.powi(k)
                        + (j.a11u + j.a11v) * kf / r.powi(k + 1)
                        + j.a22 * kf * (kf + 1.0) / r.powi(k + 2),
                    (j.a11u + j.a11v + j.a21) / r.powi(k + 1) + j.a22 * (2.0 * kf + 1.0) / r.powi(k + 2),
                    j.a22 / r.powi(k + 2),
                ],
                [
                    su.c00 * sv.c00 / (ru * rv).powi(k),
                    mu * su.c00 / rv.powi(k) + mv * su.c00 / ru.powi(k),
                    mu * mv,
                ],
            )
        }
    };
    AggregateConstants { a, b, c: cu, c_v: cv }
}

pub fn aggregate_constants(u: &Word, v: &Word, src: &Source, policy: RadiusPolicy, form: ConstantsForm) -> Result<AggregateConstants> {
    let su = residue_constants_single(u, src, policy)?;
    let sv = residue_constants_single(v, src, policy)?;
    let j = residue_constants_joint(u, v, src, policy)?;
    Ok(aggregate_from(&su, &sv, &j, form))
}

/// Generic residue estimate of `[z^m] N(z) / D(z)^p` from the principal
/// part at a simple root `r` of `D`, built from Taylor expansions.
pub fn residue_estimate(gf: &RationalGF<f64>, r: f64, m: u64) -> f64 {
    let p = gf.denominator_power as usize;
    let dt = gf.denominator.taylor_at(&r);
    let nt = gf.numerator.taylor_at(&r);
    // D(z) = t E(t); series of E up to t^{p-1}
    let e: Vec<f64> = (0..p).map(|i| dt.get(i + 1).copied().unwrap_or(0.0)).collect();
    let mut inv = vec![0.0; p];
    inv[0] = 1.0 / e[0];
    for i in 1..p {
        let s: f64 = (1..=i).map(|j| e[j] * inv[i - j]).sum();
        inv[i] = -s / e[0];
    }
    let mut pw = vec![0.0; p];
    pw[0] = 1.0;
    for _ in 0..p {
        let mut next = vec![0.0; p];
        for i in 0..p {
            for j in 0..p - i {
                next[i + j] += pw[i] * inv[j];
            }
        }
        pw = next;
    }
    let mut total = 0.0;
    for q in 1..=p {
        // coefficient of t^{-q} in t^{-p} E^{-p} N
        let order = p - q;
        let coeff: f64 = (0..=order).map(|i| nt.get(i).copied().unwrap_or(0.0) * pw[order - i]).sum();
        let sign = if q % 2 == 0 { 1.0 } else { -1.0 };
        let mf = m as f64;
        let binom: f64 = (1..q).map(|j| (mf + j as f64) / j as f64).product();
        total += coeff * sign * binom * r.powf(-(mf + q as f64));
    }
    total
}

/// Variance estimate assembled from residue constants.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RootVariance {
    pub value: f64,
    /// Sum over residue terms of `|term| theta^n`, where `theta` is the
    /// ratio of the term's dominant root to the next root modulus: the
    /// geometric rate at which the neglected poles fade relative to it.
    pub error_scale: f64,
    pub certificate_failures: usize,
    /// Pairs whose joint root is within `1e-9` of a single-word root.
    pub coincident_roots: usize,
}

fn decay_ratio(c: &RootCertificate) -> f64 {
    c.second_modulus.map_or(0.0, |s| c.root / s)
}

pub fn variance_via_roots(n: u64, k: usize, src: &Source, policy: RadiusPolicy, exec: Exec) -> Result<RootVariance> {
    if k < 2 {
        // For k = 1 the two words are complementary letters and the joint
        // denominator is the constant 1: there is no pole to expand around.
        return Err(Error::domain("root-based variance needs k >= 2"));
    }
    if k > PAIR_ENUMERATION_CAP {
        return Err(Error::resource(format!("root-based variance capped at k <= {PAIR_ENUMERATION_CAP}, got {k}")));
    }
    let words: Vec<Word> = Word::all(k)?.collect();
    let singles = par::map(exec, words.clone(), |u| residue_constants_single(&u, src, policy))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let nf = n as f64;

    let mut magnitude = Vec::with_capacity(singles.len());
    let var_terms: Vec<f64> = singles
        .iter()
        .map(|s| {
            let c = single_aggregate(s, ConstantsForm::Derived);
            let tail = (c[0] + nf * c[1]) * s.root().powf(-nf);
            magnitude.push(tail.abs() * decay_ratio(&s.certificate).powf(nf));
            let pi = 1.0 - tail;
            pi - pi * pi
        })
        .collect();

    struct Row {
        cov: f64,
        magnitude: f64,
        failures: usize,
        coincident: usize,
    }
    let rows = par::map_range(exec, 0..words.len(), |iu| -> Result<Row> {
        let mut cov = Vec::with_capacity(3 * words.len());
        let mut magnitude = 0.0;
        let mut failures = usize::from(!singles[iu].certificate.passed());
        let mut coincident = 0;
        for iv in 0..words.len() {
            if iv == iu {
                continue;
            }
            let j = residue_constants_joint(&words[iu], &words[iv], src, policy)?;
            failures += usize::from(!j.certificate.passed());
            let theta_a = decay_ratio(&j.certificate).powf(nf);
            let theta_b = decay_ratio(&singles[iu].certificate)
                .max(decay_ratio(&singles[iv].certificate))
                .powf(nf);
            let (ru, rv) = (singles[iu].root(), singles[iv].root());
            if (j.root() - ru).abs() < 1e-9 || (j.root() - rv).abs() < 1e-9 {
                coincident += 1;
            }
            let agg = aggregate_from(&singles[iu], &singles[iv], &j, ConstantsForm::Derived);
            let (ruv_n, rr_n) = (j.root().powf(-nf), (ru * rv).powf(-nf));
            for i in 0..3 {
                let ni = nf.powi(i as i32);
                cov.push((agg.a[i] * ruv_n - agg.b[i] * rr_n) * ni);
                magnitude += ((agg.a[i] * ruv_n).abs() * theta_a + (agg.b[i] * rr_n).abs() * theta_b) * ni;
            }
        }
        Ok(Row {
            cov: neumaier_sum(cov),
            magnitude,
            failures,
            coincident,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let value = neumaier_sum(var_terms.into_iter().chain(rows.iter().map(|r| r.cov)));
    let total = neumaier_sum(magnitude.into_iter().chain(rows.iter().map(|r| r.magnitude)));
    Ok(RootVariance {
        value,
        error_scale: total,
        certificate_failures: rows.iter().map(|r| r.failures).sum(),
        coincident_roots: rows.iter().map(|r| r.coincident).sum(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::BigRational;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    fn src() -> Source {
        Source::new(0.7).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    #[test]
    fn single_denominators() {
        let g = build_single_gfs::<f64>(&w("ab"), &src());
        assert!(close(g.d.coeff(0), 1.0, 1e-15) && close(g.d.coeff(1), -1.0, 1e-15) && close(g.d.coeff(2), 0.21, 1e-15));
        let g = build_single_gfs::<BigRational>(&w("aa"), &src());
        let expect: Vec<BigRational> = ["1", "-3/10", "-21/100"].iter().map(|s| s.parse().unwrap()).collect();
        assert_eq!(g.d.coeffs(), expect.as_slice());
        for u in Word::all(4).unwrap() {
            let g = build_single_gfs::<BigRational>(&u, &src());
            assert_eq!(g.d.eval(&BigRational::from_integer(1.into())), g.pro);
        }
    }

    #[test]
    fn joint_polynomials() {
        let j = build_joint_gfs::<f64>(&w("ab"), &w("ba"), &src()).unwrap();
        assert!(close(j.psi.coeff(0), 1.0, 1e-15) && j.psi.coeff(1) == 0.0 && close(j.psi.coeff(2), -0.21, 1e-15));
        assert!(close(j.phi_u.coeff(0), 1.0, 1e-15) && close(j.phi_u.coeff(1), -0.7, 1e-15));
        assert!(close(j.delta.eval(&1.0), 0.21, 1e-14));
        let j = build_joint_gfs::<f64>(&w("aa"), &w("bb"), &src()).unwrap();
        assert!(j.c_uv.is_zero() && j.c_vu.is_zero());
        let expect = &(&Poly::one_minus_z() * &j.psi)
            + &(&j.v.autocorrelation.scale(&0.49) + &j.u.autocorrelation.scale(&0.09)).shift(2);
        for (a, b) in j.delta.coeffs().iter().zip(expect.coeffs()) {
            assert!(close(*a, *b, 1e-15));
        }
        assert!(build_joint_gfs::<f64>(&w("ab"), &w("ab"), &src()).is_err());
    }

    #[test]
    fn series_examples() {
        let g = build_single_gfs::<BigRational>(&w("ab"), &src());
        assert_eq!(g.g0.coeff(2), "79/100".parse().unwrap());
        let g = build_single_gfs::<BigRational>(&w("aa"), &src());
        assert_eq!(g.g0.coeff(2), "51/100".parse().unwrap());
        assert_eq!(g.g0.coeff(0), BigRational::from_integer(1.into()));
        let g = build_single_gfs::<f64>(&w("aa"), &src());
        assert!(close(g.g0.coeff(2), 0.51, 1e-15));
    }

    #[test]
    fn dominant_root_examples() {
        let g = build_single_gfs::<f64>(&w("ab"), &src());
        let c = dominant_root(&g.d, RadiusPolicy::Fixed(DEFAULT_RADIUS)).unwrap();
        assert!(close(c.root, 10.0 / 7.0, 1e-14));
        let g = build_single_gfs::<f64>(&w("aa"), &src());
        let c = dominant_root(&g.d, RadiusPolicy::Adaptive).unwrap();
        assert!(close(c.root, (-0.3 + 0.93f64.sqrt()) / 0.42, 1e-14));
        assert_eq!(c.winding_count, 1);
        assert!(c.passed());
    }

    #[test]
    fn narrow_dip_root_is_found() {
        // 1 - z + 0.147 z^3 is negative only on a short interval near 1.5
        let g = build_single_gfs::<f64>(&w("aab"), &src());
        let root = real_root_above_one(&g.d).unwrap();
        assert!(g.d.eval(&root).abs() < 1e-14);
        let (lo, hi) = (root * (1.0 - 1e-9), root * (1.0 + 1e-9));
        assert!(g.d.eval(&lo) > 0.0 && g.d.eval(&hi) < 0.0);
        // nothing smaller: D stays positive on a fine grid below the root
        assert!((0..1000).all(|i| g.d.eval(&(1.0 + (root - 1.0) * i as f64 / 1000.0)) > 0.0));
    }

    #[test]
    fn winding_matches_root_count() {
        for k in 1..=7 {
            for u in Word::all(k).unwrap() {
                let g = build_single_gfs::<f64>(&u, &src());
                let roots = all_roots(&g.d).unwrap();
                for radius in [1.1, 1.25, 1.6, 2.5] {
                    if roots.iter().any(|r| (r.norm() - radius).abs() < 1e-6) {
                        continue;
                    }
                    let inside = roots.iter().filter(|r| r.norm() < radius).count() as i64;
                    assert_eq!(winding_number(&g.d, radius).unwrap(), inside, "u={u} radius={radius}");
                }
            }
        }
    }

    #[test]
    fn residue_examples() {
        let s = residue_constants_single(&w("ab"), &src(), RadiusPolicy::Adaptive).unwrap();
        assert!(close(s.c00, 2.5, 1e-12));
        assert!(close(s.c11, 1.3125, 1e-12));
        let agg = aggregate_constants(&w("ab"), &w("ba"), &src(), RadiusPolicy::Adaptive, ConstantsForm::Printed).unwrap();
        assert!(close(agg.b[0], 1.500625, 1e-12));
        assert!(close(agg.c[1], 1.3125 * 0.343, 1e-12));
        let j = residue_constants_joint(&w("ab"), &w("ba"), &src(), RadiusPolicy::Adaptive).unwrap();
        assert_eq!(agg.a[2].signum(), j.a22.signum());
        let sw = residue_constants_joint(&w("ba"), &w("ab"), &src(), RadiusPolicy::Adaptive).unwrap();
        assert_eq!((sw.a10u, sw.a11u), (j.a10v, j.a11v));
        assert_eq!((sw.a10v, sw.a11v), (j.a10u, j.a11u));
    }

    #[test]
    fn single_estimates_converge() {
        let gfs = build_single_gfs::<f64>(&w("ab"), &src());
        let s = residue_constants_single(&w("ab"), &src(), RadiusPolicy::Adaptive).unwrap();
        let exact = gfs.g0.series(40);
        let err = |n: usize| (s.c00 * s.root().powi(-((n + 2) as i32)) - exact[n + 1]).abs() / exact[n + 1];
        assert!(err(12) < err(6));
        let p01 = |n: usize| exact[n + 1] + gfs.g1.coeff(n + 1);
        assert!((s.at_most_one(30.0) - p01(30)).abs() < 1e-6 * p01(30));
    }

    #[test]
    fn residue_formulas_match_generic_principal_parts() {
        for (u, v) in [("ab", "ba"), ("aab", "abb"), ("aaa", "bbb"), ("abab", "baba")] {
            let (u, v) = (w(u), w(v));
            let k = u.len();
            let j = build_joint_gfs::<f64>(&u, &v, &src()).unwrap();
            let c = joint_constants_from(&j, RadiusPolicy::Adaptive).unwrap();
            let r = c.root();
            for n in [5u64, 20, 60] {
                let m = n + k as u64 - 1;
                let nk = (n + k as u64) as f64;
                let e00 = c.a00 * r.powf(-nk);
                let e10 = c.a10u * r.powf(-nk) + c.a11u * nk * r.powf(-nk - 1.0);
                let e11 = c.a20 * r.powf(-nk) + c.a21 * nk * r.powf(-nk - 1.0) + c.a22 * nk * (nk + 1.0) * r.powf(-nk - 2.0);
                assert!(close(e00, residue_estimate(&j.g00, r, m), 1e-9));
                assert!(close(e10, residue_estimate(&j.g10, r, m), 1e-9));
                assert!(close(e11, residue_estimate(&j.g11, r, m), 1e-9));
            }
        }
    }

    #[test]
    fn root_variance_edge() {
        let r = variance_via_roots(0, 2, &src(), RadiusPolicy::Adaptive, Exec::Sequential).unwrap();
        assert!(r.value.is_finite());
        assert!(r.value.abs() <= r.error_scale);
        assert!(matches!(
            variance_via_roots(10, 9, &src(), RadiusPolicy::Adaptive, Exec::Sequential),
            Err(Error::Resource(_))
        ));
    }
}
