//! Young functions: the canonical family `z^r (1 + log⁺z)^δ`, the derived
//! functions that appear in the mixed-inequality arguments, inverses and
//! numerical certification of family membership.
//!
//! Everything is evaluated in log space: [`YoungFunction::ln_eval_ln`] maps
//! `ln z` to `ln Φ(z)`. Exponents such as `δ/ε` run into the thousands for
//! admissible `ε`, so linear-space values overflow long before the
//! quantities we compare stop being meaningful.

use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::error::{parameter, Error, Result};

/// Values above this are reported as saturated by [`YoungFunction::eval_flagged`].
pub const SATURATION: f64 = 1e300;

/// `log⁺ z = max(0, ln z)`.
pub fn log_plus(z: f64) -> f64 {
    if z > 1.0 {
        z.ln()
    } else {
        0.0
    }
}

/// Evaluation rule of a Young function.
#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    /// `z^power (1 + log⁺(z^log_arg))^log_power`.
    PowerLog { power: f64, log_power: f64, log_arg: f64 },
    /// `z^low` on `[0,1]`, `z^power (1 + log⁺z)^log_power` on `(1,∞)`.
    Piecewise { low: f64, power: f64, log_power: f64 },
    /// `(e^{z^exponent} − e) χ_{(1,∞)}(z)`.
    ExpTail { exponent: f64 },
    /// `0` on `[0,1]`, `+∞` beyond: its Luxemburg norm is the essential sup.
    LInfinity,
    /// `outer ∘ inner`.
    Compose(Box<Shape>, Box<Shape>),
}

impl Shape {
    fn ln_eval_ln(&self, lz: f64) -> f64 {
        if lz == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        match self {
            Shape::PowerLog { power, log_power, log_arg } => {
                let base = power * lz;
                if *log_power == 0.0 {
                    base
                } else {
                    base + log_power * (log_arg * lz).max(0.0).ln_1p()
                }
            }
            Shape::Piecewise { low, power, log_power } => {
                if lz <= 0.0 {
                    low * lz
                } else if *log_power == 0.0 {
                    power * lz
                } else {
                    power * lz + log_power * lz.ln_1p()
                }
            }
            Shape::ExpTail { exponent } => {
                if lz <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                // e^y - e = e * expm1(y - 1), y = z^exponent > 1
                let y = (exponent * lz).exp();
                let d = y - 1.0;
                if d < 30.0 {
                    1.0 + d.exp_m1().ln()
                } else {
                    y + (-(-d).exp()).ln_1p()
                }
            }
            Shape::LInfinity => {
                if lz <= 0.0 {
                    f64::NEG_INFINITY
                } else {
                    f64::INFINITY
                }
            }
            Shape::Compose(outer, inner) => outer.ln_eval_ln(inner.ln_eval_ln(lz)),
        }
    }
}

/// Membership data for the family `𝔉_{r,δ}`: lower type `r` and
/// `Φ(t)/t^r ≤ C₀ (log t)^δ` for `t ≥ t*`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilyParams {
    pub r: f64,
    pub delta: f64,
    pub c0: f64,
    pub t_star: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct YoungFunction {
    shape: Shape,
    family: Option<FamilyParams>,
}

impl YoungFunction {
    pub fn from_shape(shape: Shape) -> Self {
        Self { shape, family: None }
    }

    /// `Φ(z) = z^r (1 + log⁺z)^δ`, certified with `C₀ = 2^δ`, `t* = e`.
    pub fn canonical(r: f64, delta: f64) -> Result<Self> {
        if !(r >= 1.0 && r.is_finite()) {
            return Err(parameter(format!("canonical Young function needs r >= 1, got {r}")));
        }
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(parameter(format!("canonical Young function needs delta >= 0, got {delta}")));
        }
        Ok(Self {
            shape: Shape::PowerLog { power: r, log_power: delta, log_arg: 1.0 },
            family: Some(FamilyParams { r, delta, c0: delta.exp2(), t_star: E }),
        })
    }

    /// `z^power (1 + log⁺z)^log_power` without family witnesses.
    pub fn power_log(power: f64, log_power: f64) -> Result<Self> {
        if !(power > 0.0 && log_power >= 0.0) {
            return Err(parameter(format!("power_log({power}, {log_power})")));
        }
        Ok(Self::from_shape(Shape::PowerLog { power, log_power, log_arg: 1.0 }))
    }

    pub fn with_family(mut self, family: FamilyParams) -> Self {
        self.family = Some(family);
        self
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn family(&self) -> Option<FamilyParams> {
        self.family
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &YoungFunction) -> YoungFunction {
        Self::from_shape(Shape::Compose(Box::new(self.shape.clone()), Box::new(inner.shape.clone())))
    }

    pub fn is_l_infinity(&self) -> bool {
        matches!(self.shape, Shape::LInfinity)
    }

    /// `ln Φ(e^{lz})`; `-∞` where `Φ` vanishes.
    pub fn ln_eval_ln(&self, lz: f64) -> f64 {
        self.shape.ln_eval_ln(lz)
    }

    /// `ln Φ(z)`.
    pub fn ln_eval(&self, z: f64) -> f64 {
        if z <= 0.0 {
            return f64::NEG_INFINITY;
        }
        self.ln_eval_ln(z.ln())
    }

    /// `Φ(z)`, with values above [`SATURATION`] clamped and flagged.
    pub fn eval_flagged(&self, z: f64) -> (f64, bool) {
        if let Shape::PowerLog { power, log_power, .. } = self.shape {
            if log_power == 0.0 && z.is_finite() && z >= 0.0 {
                let v = z.powf(power);
                if v <= SATURATION {
                    return (v, false);
                }
            }
        }
        let l = self.ln_eval(z);
        if l > SATURATION.ln() {
            (SATURATION, true)
        } else {
            (l.exp(), false)
        }
    }

    pub fn eval(&self, z: f64) -> f64 {
        self.eval_flagged(z).0
    }

    /// `ln Φ^{-1}(e^{ly})`, by bracketing and bisection in `ln t`.
    pub fn ln_inverse_ln(&self, ly: f64) -> Result<f64> {
        if ly == f64::NEG_INFINITY {
            return Ok(f64::NEG_INFINITY);
        }
        if !ly.is_finite() {
            return Err(Error::Evaluation(format!("inverse at ln y = {ly}")));
        }
        let f = |lt: f64| self.ln_eval_ln(lt);
        let mut lo = -1.0;
        let mut hi = 1.0;
        let mut step = 1.0;
        let mut prev = f(hi);
        while prev < ly {
            step *= 2.0;
            hi += step;
            let next = f(hi);
            if next < prev {
                return Err(Error::Evaluation(format!("Young function decreases near ln t = {hi}")));
            }
            if hi > 1e6 {
                return Err(Error::Evaluation(format!("no bracket for inverse at ln y = {ly}")));
            }
            prev = next;
        }
        step = 1.0;
        let mut prev = f(lo);
        while prev >= ly && prev > f64::NEG_INFINITY {
            step *= 2.0;
            lo -= step;
            let next = f(lo);
            if next > prev {
                return Err(Error::Evaluation(format!("Young function decreases near ln t = {lo}")));
            }
            if lo < -1e6 {
                return Err(Error::Evaluation(format!("no lower bracket for inverse at ln y = {ly}")));
            }
            prev = next;
        }
        let (mut f_lo, mut f_hi) = (f(lo), f(hi));
        for _ in 0..400 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let fm = f(mid);
            if fm < f_lo || fm > f_hi {
                return Err(Error::Evaluation(format!("non-monotone samples near ln t = {mid}")));
            }
            if fm < ly {
                lo = mid;
                f_lo = fm;
            } else {
                hi = mid;
                f_hi = fm;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// `Φ^{-1}(y)` for `Φ` strictly increasing on `(0, ∞)`.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        if y < 0.0 || y.is_nan() {
            return Err(parameter(format!("inverse needs y >= 0, got {y}")));
        }
        if y == 0.0 {
            return Ok(0.0);
        }
        Ok(self.ln_inverse_ln(y.ln())?.exp())
    }
}

/// `η_ε(z) = z (1 + log⁺z)^{δ/ε}`.
pub fn eta_eps(delta: f64, eps: f64) -> Result<YoungFunction> {
    let ratio = delta_over_eps(delta, eps)?;
    let f = YoungFunction::from_shape(Shape::PowerLog { power: 1.0, log_power: ratio, log_arg: 1.0 });
    Ok(f.with_family(FamilyParams { r: 1.0, delta: ratio, c0: ratio.exp2(), t_star: E }))
}

/// `Ψ_ε = η_ε ∘ Φ`.
pub fn psi_eps(phi: &YoungFunction, delta: f64, eps: f64) -> Result<YoungFunction> {
    Ok(eta_eps(delta, eps)?.compose(phi))
}

/// `η̃_ε(z) = (e^{z^{ε/δ}} − e) χ_{(1,∞)}(z)`. For `δ = 0` the exponent is
/// infinite and the function degenerates to the `L^∞` gauge.
pub fn eta_tilde_eps(delta: f64, eps: f64) -> Result<YoungFunction> {
    delta_over_eps(delta, eps)?;
    if delta == 0.0 {
        return Ok(YoungFunction::from_shape(Shape::LInfinity));
    }
    Ok(YoungFunction::from_shape(Shape::ExpTail { exponent: eps / delta }))
}

fn delta_over_eps(delta: f64, eps: f64) -> Result<f64> {
    if !(delta >= 0.0) {
        return Err(parameter(format!("delta must be >= 0, got {delta}")));
    }
    if delta == 0.0 {
        return Ok(0.0);
    }
    if !(eps > 0.0) {
        return Err(parameter(format!("eps must be > 0 when delta > 0, got {eps}")));
    }
    Ok(delta / eps)
}

/// Exponents of the fractional mixed estimates for `Φ(z) = z^r (1+log⁺z)^δ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FractionalExponents {
    pub n: f64,
    pub r: f64,
    pub delta: f64,
    pub gamma: f64,
    pub p: f64,
    /// `1/q = 1/p − γ/n`.
    pub q: f64,
    /// `1/r′ = 1 − 1/r`.
    pub inv_r_prime: f64,
    /// `σ = nr/(n − rγ)`.
    pub sigma: f64,
    /// `ν = nδ/(n − rγ)` in the `r < p` case, `δq/r` on the diagonal.
    pub nu: f64,
    /// `β = (q/σ)(1/p + 1/r′)`.
    pub beta: f64,
}

impl FractionalExponents {
    /// The `r < p < n/γ` regime.
    pub fn mid(n: u8, r: f64, delta: f64, gamma: f64, p: f64) -> Result<Self> {
        let nf = n as f64;
        Self::check_gamma(nf, r, gamma)?;
        if !(p > r && p < nf / gamma) {
            return Err(parameter(format!("need r < p < n/gamma, got r={r}, p={p}, n/gamma={}", nf / gamma)));
        }
        let q = 1.0 / (1.0 / p - gamma / nf);
        let inv_r_prime = 1.0 - 1.0 / r;
        let sigma = nf * r / (nf - r * gamma);
        let nu = nf * delta / (nf - r * gamma);
        let beta = q / sigma * (1.0 / p + inv_r_prime);
        if !(beta > 1.0) {
            return Err(Error::Evaluation(format!("beta = {beta} is not > 1")));
        }
        Ok(Self { n: nf, r, delta, gamma, p, q, inv_r_prime, sigma, nu, beta })
    }

    /// The `p = r` regime: `1/q = 1/r − γ/n`, `ν = δq/r`.
    pub fn diagonal(n: u8, r: f64, delta: f64, gamma: f64) -> Result<Self> {
        let nf = n as f64;
        Self::check_gamma(nf, r, gamma)?;
        let q = 1.0 / (1.0 / r - gamma / nf);
        let inv_r_prime = 1.0 - 1.0 / r;
        let sigma = nf * r / (nf - r * gamma);
        let nu = delta * q / r;
        let beta = q / sigma * (1.0 / r + inv_r_prime);
        Ok(Self { n: nf, r, delta, gamma, p: r, q, inv_r_prime, sigma, nu, beta })
    }

    fn check_gamma(n: f64, r: f64, gamma: f64) -> Result<()> {
        if !(r >= 1.0) {
            return Err(parameter(format!("r must be >= 1, got {r}")));
        }
        if !(gamma > 0.0 && gamma < n / r) {
            return Err(parameter(format!("need 0 < gamma < n/r, got gamma={gamma}, n/r={}", n / r)));
        }
        Ok(())
    }

    /// `φ(z) = z^{q/p + q/r′} (1 + log⁺z)^{nδ/(n−rγ)}`.
    pub fn varphi(&self) -> YoungFunction {
        YoungFunction::from_shape(Shape::PowerLog {
            power: self.q / self.p + self.q * self.inv_r_prime,
            log_power: self.n * self.delta / (self.n - self.r * self.gamma),
            log_arg: 1.0,
        })
    }

    /// Piecewise `ξ`: `z^{q/β}` on `[0,1]`, `z^σ (1+log⁺z)^ν` above.
    pub fn xi_mid(&self) -> YoungFunction {
        YoungFunction::from_shape(Shape::Piecewise { low: self.q / self.beta, power: self.sigma, log_power: self.nu })
    }

    /// `ξ(z) = z^q (1 + log⁺z)^ν` with `ν = δq/r`.
    pub fn xi_diag(&self) -> YoungFunction {
        YoungFunction::from_shape(Shape::PowerLog { power: self.q, log_power: self.nu, log_arg: 1.0 })
            .with_family(FamilyParams { r: self.q, delta: self.nu, c0: self.nu.exp2(), t_star: E })
    }

    /// `Φ_{γ,ε}` as written in the statement of the diagonal estimate:
    /// `Φ(z) (1 + log⁺z)^{δ(1+1/ε) qγ/n + δ/ε}`.
    pub fn phi_gamma_eps_statement(&self, eps: f64) -> Result<YoungFunction> {
        check_eps(eps)?;
        let d = self.delta;
        let extra = d * (1.0 + 1.0 / eps) * self.q * self.gamma / self.n + d / eps;
        YoungFunction::power_log(self.r, d + extra)
    }

    /// `Φ_{γ,ε}` as used in the proof: `z^r (1 + log⁺z)^{ν(1+1/ε)}`.
    pub fn phi_gamma_eps_proof(&self, eps: f64) -> Result<YoungFunction> {
        check_eps(eps)?;
        YoungFunction::power_log(self.r, self.nu * (1.0 + 1.0 / eps))
    }

    /// `Ψ_ε(z) = z^r (1 + log⁺(z^{1−q/r}))^{qδ(1+1/ε)/r}`.
    pub fn psi_eps_fractional(&self, eps: f64) -> Result<YoungFunction> {
        check_eps(eps)?;
        Ok(YoungFunction::from_shape(Shape::PowerLog {
            power: self.r,
            log_power: self.q * self.delta * (1.0 + 1.0 / eps) / self.r,
            log_arg: 1.0 - self.q / self.r,
        }))
    }

    /// `φ_ε(z) = [z (1 + log⁺z)^{δ(1+1/ε)}]^{q/r}`.
    pub fn varphi_eps(&self, eps: f64) -> Result<YoungFunction> {
        check_eps(eps)?;
        let e = self.q / self.r;
        YoungFunction::power_log(e, self.delta * (1.0 + 1.0 / eps) * e)
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(parameter(format!("eps must be > 0, got {eps}")))
    }
}

/// Tags of the derived constructions, for config-driven use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivedTag {
    EtaEps,
    PsiEps,
    EtaTildeEps,
    Xi,
    PhiSmall,
    VarphiEps,
    PhiGammaEps,
    PsiEpsFractional,
}

/// Parameters for [`derive`]; unused fields are ignored per tag.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct DeriveParams {
    pub eps: Option<f64>,
    pub gamma: Option<f64>,
    pub p: Option<f64>,
    pub r: Option<f64>,
    pub delta: Option<f64>,
    pub n: Option<u8>,
}

#[derive(Debug, Clone)]
pub struct DerivedYoung {
    pub tag: DerivedTag,
    pub params: DeriveParams,
    pub function: YoungFunction,
}

/// Builds a derived Young function from its tag. `Xi` and `PhiSmall` use
/// the `r < p` construction when `p > r` is given and the diagonal one
/// otherwise.
pub fn derive(tag: DerivedTag, params: DeriveParams) -> Result<DerivedYoung> {
    let need = |v: Option<f64>, name: &str| v.ok_or_else(|| parameter(format!("{tag:?} needs `{name}`")));
    let r = params.r.unwrap_or(1.0);
    let delta = params.delta.unwrap_or(0.0);
    let eps = params.eps.unwrap_or(0.0);
    let fractional = || -> Result<FractionalExponents> {
        let n = params.n.ok_or_else(|| parameter(format!("{tag:?} needs `n`")))?;
        let gamma = need(params.gamma, "gamma")?;
        match params.p {
            Some(p) if p > r => FractionalExponents::mid(n, r, delta, gamma, p),
            _ => FractionalExponents::diagonal(n, r, delta, gamma),
        }
    };
    let function = match tag {
        DerivedTag::EtaEps => eta_eps(delta, eps)?,
        DerivedTag::PsiEps => psi_eps(&YoungFunction::canonical(r, delta)?, delta, eps)?,
        DerivedTag::EtaTildeEps => eta_tilde_eps(delta, eps)?,
        DerivedTag::Xi => {
            let fx = fractional()?;
            if fx.p > r {
                fx.xi_mid()
            } else {
                fx.xi_diag()
            }
        }
        DerivedTag::PhiSmall => fractional()?.varphi(),
        DerivedTag::VarphiEps => fractional()?.varphi_eps(eps)?,
        DerivedTag::PhiGammaEps => fractional()?.phi_gamma_eps_statement(eps)?,
        DerivedTag::PsiEpsFractional => fractional()?.psi_eps_fractional(eps)?,
    };
    Ok(DerivedYoung { tag, params, function })
}

/// A pair `(s, t)` at which a family condition failed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FamilyWitness {
    pub check: &'static str,
    pub s: f64,
    pub t: f64,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyCertificate {
    pub submultiplicative: bool,
    pub lower_type_r: bool,
    pub growth_ok: bool,
    /// `(C₀, t*)` used for the growth check.
    pub growth: (f64, f64),
    /// First failing pair per check.
    pub witnesses: Vec<FamilyWitness>,
}

impl FamilyCertificate {
    pub fn in_family(&self) -> bool {
        self.submultiplicative && self.lower_type_r && self.growth_ok
    }
}

/// Log-spaced lattice of `points` values in `[1e-6, 1e6]`, with `e` and 1 added.
pub fn sample_lattice(points: usize) -> Vec<f64> {
    let points = points.max(2);
    let (lo, hi) = (1e-6f64.ln(), 1e6f64.ln());
    let mut out: Vec<f64> = (0..points)
        .map(|i| (lo + (hi - lo) * i as f64 / (points - 1) as f64).exp())
        .collect();
    out.push(1.0);
    out.push(E);
    out.sort_by(f64::total_cmp);
    out.dedup();
    out
}

const LOG_SLACK: f64 = 1e-12;

fn log_le(a: f64, b: f64) -> bool {
    a <= b + LOG_SLACK * (1.0 + a.abs().max(b.abs()))
}

/// Checks submultiplicativity, lower type `r` and the growth condition on a
/// log-spaced lattice over `[1e-6, 1e6]` of `sample_budget` points per axis.
///
/// If `phi` carries family witnesses `(C₀, t*)` they are checked; otherwise
/// `t* = e` is used and `C₀` is the lattice maximum of `Φ(t)/(t^r (log t)^δ)`.
pub fn certify_family(phi: &YoungFunction, r: f64, delta: f64, sample_budget: usize) -> FamilyCertificate {
    let lattice = sample_lattice(sample_budget);
    let lp = |z: f64| phi.ln_eval(z);
    let mut witnesses = Vec::new();

    let mut submultiplicative = true;
    'sub: for &s in &lattice {
        for &t in &lattice {
            let (lhs, rhs) = (lp(s * t), lp(s) + lp(t));
            if !log_le(lhs, rhs) {
                submultiplicative = false;
                witnesses.push(FamilyWitness { check: "submultiplicative", s, t, lhs, rhs });
                break 'sub;
            }
        }
    }

    let mut lower_type_r = true;
    'low: for &s in lattice.iter().filter(|&&s| s <= 1.0) {
        for &t in &lattice {
            let (lhs, rhs) = (lp(s * t), r * s.ln() + lp(t));
            if !log_le(lhs, rhs) {
                lower_type_r = false;
                witnesses.push(FamilyWitness { check: "lower_type_r", s, t, lhs, rhs });
                break 'low;
            }
        }
    }

    let excess = |t: f64| lp(t) - r * t.ln() - delta * t.ln().ln();
    let (c0, t_star) = match phi.family() {
        Some(f) => (f.c0, f.t_star),
        None => {
            let m = lattice.iter().filter(|&&t| t >= E).map(|&t| excess(t)).fold(f64::NEG_INFINITY, f64::max);
            (m.exp(), E)
        }
    };
    let mut growth_ok = c0.is_finite();
    for &t in lattice.iter().filter(|&&t| t >= t_star) {
        let (lhs, rhs) = (excess(t), c0.ln());
        if !log_le(lhs, rhs) {
            growth_ok = false;
            witnesses.push(FamilyWitness { check: "growth", s: 1.0, t, lhs, rhs });
            break;
        }
    }

    FamilyCertificate { submultiplicative, lower_type_r, growth_ok, growth: (c0, t_star), witnesses }
}
