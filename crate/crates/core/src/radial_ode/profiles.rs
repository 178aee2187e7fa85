use serde::{Deserialize, Serialize};

use super::ode::{integrate, OdeOptions};
use crate::error::{Error, Result};

/// Sign of the nonlinearity in `u'' + ((n−1)/r)u' = ±|u|^(q−1)u`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OdeKind {
    /// `−Δu + |u|^(q−1)u = 0`.
    Absorption,
    /// `−Δu = |u|^(q−1)u`.
    Source,
}

impl OdeKind {
    fn sign(self) -> f64 {
        match self {
            OdeKind::Absorption => 1.0,
            OdeKind::Source => -1.0,
        }
    }
}

/// A radial solution sampled on a log-spaced set of radii.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub kind: OdeKind,
    pub q: f64,
    pub n: usize,
    pub r: Vec<f64>,
    pub u: Vec<f64>,
    pub du: Vec<f64>,
}

impl RadialProfile {
    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    /// Last sampled radius.
    pub fn r_end(&self) -> f64 {
        *self.r.last().unwrap_or(&f64::NAN)
    }

    /// CSV rows `r,u,du`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("r,u,du\n");
        for i in 0..self.len() {
            s.push_str(&format!("{:.16e},{:.16e},{:.16e}\n", self.r[i], self.u[i], self.du[i]));
        }
        s
    }
}

/// `2/(q−1)`.
pub fn singular_exponent(q: f64) -> f64 {
    2.0 / (q - 1.0)
}

/// `ℓ_{q,n}`, the coefficient of the explicit singular absorption solution `ℓ r^(−2/(q−1))`.
pub fn ell_qn(q: f64, n: usize) -> Result<f64> {
    let a = singular_exponent(q);
    let inner = a * (a + 2.0 - n as f64);
    if !(q > 1.0) || !(inner > 0.0) {
        return Err(Error::domain(format!("ℓ_(q,n) needs 1 < q < n/(n−2), got q={q}, n={n}")));
    }
    Ok(inner.powf(1.0 / (q - 1.0)))
}

/// `γ_{q,n}`, the coefficient of the explicit singular source solution.
pub fn gamma_qn(q: f64, n: usize) -> Result<f64> {
    let a = singular_exponent(q);
    let inner = a * (n as f64 - a - 2.0);
    if !(q > 1.0) || !(inner > 0.0) {
        return Err(Error::domain(format!("γ_(q,n) needs q > n/(n−2), got q={q}, n={n}")));
    }
    Ok(inner.powf(1.0 / (q - 1.0)))
}

/// Largest normalized residual `|u'' + ((n−1)/r)u' ∓ u^q| / (|u''| + |(n−1)u'/r| + u^q)`
/// of `coef·r^(−2/(q−1))` over `radii`, with exact derivatives.
pub fn explicit_residual(kind: OdeKind, q: f64, n: usize, coef: f64, radii: &[f64]) -> f64 {
    let a = singular_exponent(q);
    radii
        .iter()
        .map(|&r| {
            let u = coef * r.powf(-a);
            let du = -a * coef * r.powf(-a - 1.0);
            let ddu = a * (a + 1.0) * coef * r.powf(-a - 2.0);
            let drift = (n as f64 - 1.0) / r * du;
            let nl = u.abs().powf(q - 1.0) * u;
            let res = ddu + drift - kind.sign() * nl;
            res.abs() / (ddu.abs() + drift.abs() + nl.abs())
        })
        .fold(0.0, f64::max)
}

fn rhs(kind: OdeKind, q: f64, n: usize) -> impl Fn(f64, &[f64; 2]) -> [f64; 2] {
    let s = kind.sign();
    let m = n as f64 - 1.0;
    move |r, y| [y[1], -m / r * y[1] + s * y[0].abs().powf(q - 1.0) * y[0]]
}

/// Log-spaced radii from `a` to `b` with `per_decade` points per decade.
pub fn log_radii(a: f64, b: f64, per_decade: usize) -> Vec<f64> {
    let decades = (b / a).log10().abs();
    let m = ((decades * per_decade as f64).ceil() as usize).max(1);
    let (la, lb) = (a.ln(), b.ln());
    let mut v: Vec<f64> = (0..=m).map(|i| (la + (lb - la) * i as f64 / m as f64).exp()).collect();
    v[0] = a;
    v[m] = b;
    v
}

pub(crate) const SAMPLES_PER_DECADE: usize = 60;

pub(crate) fn shoot_until<S>(
    kind: OdeKind,
    q: f64,
    n: usize,
    r_start: f64,
    start: [f64; 2],
    r_end: f64,
    stop: S,
) -> Result<RadialProfile>
where
    S: FnMut(f64, &[f64; 2]) -> bool,
{
    if !(r_start > 0.0 && r_end > 0.0) || r_start == r_end {
        return Err(Error::domain(format!("shooting needs distinct positive radii, got {r_start} → {r_end}")));
    }
    if !(q > 0.0) {
        return Err(Error::domain(format!("exponent must be positive, got {q}")));
    }
    let radii = log_radii(r_start, r_end, SAMPLES_PER_DECADE);
    let ys = integrate(rhs(kind, q, n), &radii, start, &OdeOptions::default(), stop)?;
    let len = ys.len();
    Ok(RadialProfile {
        kind,
        q,
        n,
        r: radii[..len].to_vec(),
        u: ys.iter().map(|y| y[0]).collect(),
        du: ys.iter().map(|y| y[1]).collect(),
    })
}

/// Integrate the radial equation from `r_start` to `r_end` (either direction)
/// with relative tolerance 1e−10, sampling 60 radii per decade.
pub fn shoot_radial(
    kind: OdeKind,
    q: f64,
    n: usize,
    r_start: f64,
    u_start: f64,
    du_start: f64,
    r_end: f64,
) -> Result<RadialProfile> {
    shoot_until(kind, q, n, r_start, [u_start, du_start], r_end, |_, _| false)
}

/// Universal constant `C` with `u ≤ C ρ^(−2/(q−1))` for solutions of `−Δu + u^q = 0`.
/// For `n = 1` this is the exact half-line value `(α(α+1))^(1/(q−1))`; for `n ≥ 2`
/// it is the constant of the barrier `C R^α (R² − |y|²)^(−α)` in a ball of radius `R`.
pub fn keller_osserman_constant(q: f64, n: usize) -> Result<f64> {
    if !(q > 1.0) || n == 0 {
        return Err(Error::domain(format!("Keller–Osserman constant needs q > 1, n ≥ 1, got q={q}, n={n}")));
    }
    let a = singular_exponent(q);
    let c = if n == 1 { a * (a + 1.0) } else { 2.0 * a * (n as f64).max(2.0 * a + 2.0) };
    Ok(c.powf(1.0 / (q - 1.0)))
}

/// Sup over `samples` radii in (0, 1] of `v'' + ((n−1)/ρ)v' − v^q` for `v = Cρ^(−2/(q−1))`,
/// scaled by `ρ^(2q/(q−1))`; nonpositive when `v` is a supersolution.
pub fn keller_osserman_residual(q: f64, n: usize, c: f64, samples: usize) -> f64 {
    let a = singular_exponent(q);
    (1..=samples)
        .map(|i| {
            let rho = i as f64 / samples as f64;
            let v = c * rho.powf(-a);
            let dv = -a * c * rho.powf(-a - 1.0);
            let ddv = a * (a + 1.0) * c * rho.powf(-a - 2.0);
            (ddv + (n as f64 - 1.0) / rho * dv - v.powf(q)) * rho.powf(a + 2.0)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn explicit_constants() {
        assert!((ell_qn(2.0, 3).unwrap() - 2.0).abs() < 1e-15);
        assert!((ell_qn(3.0, 2).unwrap() - 1.0).abs() < 1e-15);
        assert!((gamma_qn(5.0, 3).unwrap() - 0.25f64.powf(0.25)).abs() < 1e-15);
        assert!(ell_qn(3.0, 3).is_err());
        assert!(gamma_qn(2.0, 3).is_err());
        let radii = log_radii(1e-3, 1.0, 20);
        assert!(explicit_residual(OdeKind::Absorption, 2.0, 3, 2.0, &radii) < 1e-14);
        assert!(explicit_residual(OdeKind::Source, 5.0, 3, gamma_qn(5.0, 3).unwrap(), &radii) < 1e-14);
        assert!(explicit_residual(OdeKind::Absorption, 2.0, 3, 2.1, &radii) > 1e-3);
    }

    #[test]
    fn shots_track_explicit_solutions() {
        let p = shoot_radial(OdeKind::Absorption, 2.0, 3, 1.0, 2.0, -4.0, 1e-3).unwrap();
        for (r, u) in p.r.iter().zip(&p.u) {
            assert!((u * r * r / 2.0 - 1.0).abs() < 1e-6);
        }
        let g = gamma_qn(5.0, 3).unwrap();
        let p = shoot_radial(OdeKind::Source, 5.0, 3, 1.0, g, -0.5 * g, 1e-3).unwrap();
        for (r, u) in p.r.iter().zip(&p.u) {
            assert!((u * r.sqrt() / g - 1.0).abs() < 1e-6);
        }
        let z = shoot_radial(OdeKind::Absorption, 2.0, 3, 1.0, 0.0, 0.0, 1e-3).unwrap();
        assert!(z.u.iter().all(|&u| u == 0.0));
    }

    #[test]
    fn keller_osserman_barrier() {
        assert!((keller_osserman_constant(2.0, 1).unwrap() - 6.0).abs() < 1e-14);
        for n in 1..=5 {
            for q in [1.5, 2.0, 3.0, 5.0] {
                let c = keller_osserman_constant(q, n).unwrap();
                assert!(keller_osserman_residual(q, n, c, 1000) <= 1e-9 * c.powf(q));
            }
        }
    }
}
