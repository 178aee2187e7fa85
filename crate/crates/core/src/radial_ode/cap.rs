use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use super::ode::{integrate, OdeOptions};
use super::profiles::singular_exponent;
use crate::error::{Error, Result};

const SAMPLES: usize = 20000;
const POLE_START: f64 = 1e-3;

/// Positive solution of `−Δ_S ω = Λω − ω^q` on the upper half sphere that
/// vanishes on the equator, as a function of the polar angle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapProfile {
    pub q: f64,
    pub n: usize,
    /// `Λ_{q,n} = (2/(q−1))(2q/(q−1) − n)`.
    pub lambda: f64,
    /// Value at the pole.
    pub pole_value: f64,
    pub theta: Vec<f64>,
    pub omega: Vec<f64>,
    pub domega: Vec<f64>,
    /// Normalized ODE residual plus the equator defect.
    pub residual: f64,
}

impl CapProfile {
    /// Cubic Hermite interpolation of `ω(|θ|)`, zero beyond the equator.
    pub fn eval(&self, theta: f64) -> f64 {
        let t = theta.abs();
        if t >= FRAC_PI_2 {
            return 0.0;
        }
        let th = &self.theta;
        if t <= th[0] {
            return self.omega[0];
        }
        let k = th.partition_point(|&x| x < t).clamp(1, th.len() - 1);
        let (a, b) = (th[k - 1], th[k]);
        let h = b - a;
        let s = (t - a) / h;
        let (h00, h10, h01, h11) = (
            (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s),
            s * (1.0 - s) * (1.0 - s),
            s * s * (3.0 - 2.0 * s),
            s * s * (s - 1.0),
        );
        h00 * self.omega[k - 1] + h10 * h * self.domega[k - 1] + h01 * self.omega[k] + h11 * h * self.domega[k]
    }
}

/// `Λ_{q,n}`.
pub fn cap_eigenvalue(q: f64, n: usize) -> f64 {
    let a = singular_exponent(q);
    a * (a + 2.0 - n as f64)
}

struct Shot {
    theta: Vec<f64>,
    omega: Vec<f64>,
    domega: Vec<f64>,
    crossed: bool,
}

fn shoot(q: f64, n: usize, lambda: f64, s: f64) -> Result<Shot> {
    let m = n as f64 - 2.0;
    let f = move |t: f64, y: &[f64; 2]| {
        let drift = if m == 0.0 { 0.0 } else { m * t.cos() / t.sin() * y[1] };
        [y[1], -drift - lambda * y[0] + y[0].abs().powf(q - 1.0) * y[0]]
    };
    let (t0, y0) = if n == 2 {
        (0.0, [s, 0.0])
    } else {
        let curv = -(lambda * s - s.powf(q)) / (n as f64 - 1.0);
        (POLE_START, [s + 0.5 * curv * POLE_START * POLE_START, curv * POLE_START])
    };
    let theta: Vec<f64> = (0..=SAMPLES).map(|i| t0 + (FRAC_PI_2 - t0) * i as f64 / SAMPLES as f64).collect();
    let opts = OdeOptions { rtol: 1e-12, atol: 1e-15 * s.max(1e-300), ..Default::default() };
    let ys = integrate(f, &theta, y0, &opts, |t, y| y[0] <= 0.0 && t < FRAC_PI_2)?;
    let crossed = ys.len() < theta.len() || ys.last().is_some_and(|y| y[0] < 0.0);
    Ok(Shot {
        theta: theta[..ys.len()].to_vec(),
        omega: ys.iter().map(|y| y[0]).collect(),
        domega: ys.iter().map(|y| y[1]).collect(),
        crossed,
    })
}

/// Integrated form of the ODE over consecutive sample pairs, by Simpson's rule:
/// `ω(θ₊) − ω(θ₋) = ∫ω'` and `ω'(θ₊) − ω'(θ₋) = ∫(−drift − Λω + ω^q)`, each
/// normalized by the sup of its integrand, plus the equator defect.
fn profile_residual(shot: &Shot, q: f64, n: usize, lambda: f64) -> f64 {
    let (w, dw, th) = (&shot.omega, &shot.domega, &shot.theta);
    let d = th[1] - th[0];
    let m = n as f64 - 2.0;
    let rhs: Vec<f64> = (0..w.len())
        .map(|i| {
            let drift = if m == 0.0 { 0.0 } else { m * th[i].cos() / th[i].sin() * dw[i] };
            -drift - lambda * w[i] + w[i].abs().powf(q - 1.0) * w[i]
        })
        .collect();
    let simpson = |f: &[f64], i: usize| d / 3.0 * (f[i - 1] + 4.0 * f[i] + f[i + 1]);
    let (mut r0, mut r1) = (0.0f64, 0.0f64);
    for i in 1..w.len().saturating_sub(1) {
        r0 = r0.max((w[i + 1] - w[i - 1] - simpson(dw, i)).abs());
        r1 = r1.max((dw[i + 1] - dw[i - 1] - simpson(&rhs, i)).abs());
    }
    let s0 = dw.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let s1 = w.iter().map(|v| lambda.abs() * v.abs() + v.abs().powf(q)).fold(0.0f64, f64::max);
    let norm = |r: f64, s: f64| if s > 0.0 { r / (2.0 * d * s) } else { 0.0 };
    norm(r0, s0).max(norm(r1, s1)) + w.last().map_or(0.0, |v| v.abs()) / w[0].abs().max(1e-300)
}

/// Solve the cap eigenproblem by shooting on the pole value. Returns `None`
/// when arbitrarily small pole values already stay positive up to the equator,
/// i.e. when `Λ` does not exceed the first Dirichlet eigenvalue `n − 1`.
pub fn cap_eigenproblem(q: f64, n: usize, tol: f64) -> Result<Option<CapProfile>> {
    if !(q > 1.0) || n < 2 {
        return Err(Error::domain(format!("cap eigenproblem needs q > 1, n ≥ 2, got q={q}, n={n}")));
    }
    let lambda = cap_eigenvalue(q, n);
    if lambda <= 0.0 {
        return Ok(None);
    }
    let s_eq = lambda.powf(1.0 / (q - 1.0));
    let mut lo = 1e-6 * s_eq;
    if !shoot(q, n, lambda, lo)?.crossed {
        return Ok(None);
    }
    let mut hi = s_eq;
    let mut steps = 0;
    while hi - lo > tol * s_eq {
        steps += 1;
        if steps > 200 {
            return Err(Error::NoConvergence { iterations: steps, reason: "pole-value bisection".into() });
        }
        let mid = 0.5 * (lo + hi);
        if shoot(q, n, lambda, mid)?.crossed {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let shot = shoot(q, n, lambda, hi)?;
    let residual = profile_residual(&shot, q, n, lambda);
    Ok(Some(CapProfile {
        q,
        n,
        lambda,
        pole_value: hi,
        theta: shot.theta,
        omega: shot.omega,
        domega: shot.domega,
        residual,
    }))
}

/// Residual of the separable field in the upper half plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeparableResidual {
    /// `sup |−Δ_h u + u^q| / sup u^q` over the annulus nodes.
    pub residual: f64,
    /// `5 (h/r_min)²`.
    pub bound: f64,
    pub nodes: usize,
}

/// Five-point residual of `u = r^(−2/(q−1)) · scale · ω(θ)` for `−Δu + u^q = 0`
/// on lattice nodes of spacing `h` in `{x₂ > 0, r_min ≤ |x| ≤ r_max}`, with `θ`
/// the angle from the inward normal `e₂`.
pub fn boundary_separable_residual(profile: &CapProfile, scale: f64, h: f64, r_min: f64, r_max: f64) -> Result<SeparableResidual> {
    if profile.n != 2 {
        return Err(Error::domain("separable residual is implemented in the plane only"));
    }
    if !(h > 0.0 && r_min > 2.0 * h && r_max > r_min) {
        return Err(Error::domain(format!("bad annulus h={h}, r=[{r_min}, {r_max}]")));
    }
    let q = profile.q;
    let a = singular_exponent(q);
    let u = |x: f64, y: f64| {
        if y <= 0.0 {
            return 0.0;
        }
        let r = x.hypot(y);
        scale * profile.eval(x.atan2(y)) * r.powf(-a)
    };
    let m = (r_max / h).ceil() as i64;
    let (mut num, mut den, mut nodes) = (0.0f64, 0.0f64, 0usize);
    for i in -m..=m {
        for j in 1..=m {
            let (x, y) = (i as f64 * h, j as f64 * h);
            let r = x.hypot(y);
            if r < r_min || r > r_max {
                continue;
            }
            nodes += 1;
            let c = u(x, y);
            let lap = (u(x + h, y) + u(x - h, y) + u(x, y + h) + u(x, y - h) - 4.0 * c) / (h * h);
            let nl = c.abs().powf(q);
            num = num.max((-lap + nl).abs());
            den = den.max(nl);
        }
    }
    let residual = if den > 0.0 { num / den } else { 0.0 };
    Ok(SeparableResidual { residual, bound: 5.0 * (h / r_min).powi(2), nodes })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn existence_follows_the_boundary_critical_exponent() {
        for (q, n) in [(2.0, 2), (2.9, 2), (1.8, 3), (3.1, 2), (3.5, 2), (2.1, 3)] {
            let p = cap_eigenproblem(q, n, 1e-13).unwrap();
            let critical = (n as f64 + 1.0) / (n as f64 - 1.0);
            assert_eq!(p.is_some(), q < critical, "q={q} n={n}");
            if let Some(p) = p {
                assert!(p.residual <= 1e-8, "q={q} n={n}: {}", p.residual);
                assert!(p.omega[..p.omega.len() - 1].iter().all(|&w| w > 0.0));
            }
        }
    }

    #[test]
    fn separable_field_residual() {
        let p = cap_eigenproblem(2.0, 2, 1e-13).unwrap().unwrap();
        let exact = boundary_separable_residual(&p, 1.0, 1.0 / 512.0, 0.2, 0.5).unwrap();
        assert!(exact.residual <= 1e-3, "{exact:?}");
        let off = boundary_separable_residual(&p, 1.1, 1.0 / 256.0, 0.2, 0.5).unwrap();
        assert!(off.residual >= 1e-2);
        assert_eq!(boundary_separable_residual(&p, 0.0, 1.0 / 256.0, 0.2, 0.5).unwrap().residual, 0.0);
    }
}
