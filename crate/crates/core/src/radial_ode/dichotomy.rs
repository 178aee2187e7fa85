use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::profiles::{ell_qn, shoot_until, singular_exponent, OdeKind, RadialProfile};
use crate::error::{Error, Result};
use crate::grid::sphere_area;

const THRESHOLD: f64 = 0.05;
const WINDOW_NODES: usize = 50;

/// Behaviour of a positive solution of `−Δu + u^q = 0` at the origin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DichotomyClass {
    /// `r^(2/(q−1)) u → ℓ`.
    Strong { ell: f64 },
    /// `r^(n−2) u → c` (or `u / ln(1/r) → c` in the plane).
    Weak { c: f64 },
    Regular,
}

/// A verdict with its fit diagnostics on the last decade of radii.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub class: DichotomyClass,
    /// Least-squares slope of `ln u` against `ln r`.
    pub slope: f64,
    pub strong_error: f64,
    pub weak_error: f64,
    pub window_nodes: usize,
}

/// `C_n` with `−Δ(c·Φ) = C_n c δ₀`: `(n−2)|S^(n−1)|`, and `2π` in the plane.
pub fn weak_mass_constant(n: usize) -> f64 {
    if n == 2 {
        2.0 * std::f64::consts::PI
    } else {
        (n as f64 - 2.0) * sphere_area(n)
    }
}

fn least_squares(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let m = x.len() as f64;
    let mx = x.iter().sum::<f64>() / m;
    let my = y.iter().sum::<f64>() / m;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = (x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum::<f64>() / m).sqrt();
    (slope, intercept, rms)
}

/// Classify a profile integrated towards the origin by fits on its last decade.
pub fn classify_interior_singularity(profile: &RadialProfile, q: f64, n: usize) -> Result<Classification> {
    let r_end = profile.r_end();
    let idx: Vec<usize> = (0..profile.len()).filter(|&i| profile.r[i] <= 10.0 * r_end * (1.0 + 1e-12)).collect();
    if idx.len() < WINDOW_NODES || r_end > 0.5 * profile.r[0] {
        return Err(Error::Unclassified(format!("fit window has {} nodes", idx.len())));
    }
    if idx.iter().any(|&i| !(profile.u[i] > 0.0)) {
        return Err(Error::Unclassified("profile is not positive on the fit window".into()));
    }
    let lr: Vec<f64> = idx.iter().map(|&i| profile.r[i].ln()).collect();
    let lu: Vec<f64> = idx.iter().map(|&i| profile.u[i].ln()).collect();
    let (slope, _, _) = least_squares(&lr, &lu);
    let a = singular_exponent(q);
    let strong_error = (slope + a).abs() / a;
    let u_end = *profile.u.last().unwrap();
    let (weak_error, weak_c, regular) = if n == 2 {
        let x: Vec<f64> = idx.iter().map(|&i| -profile.r[i].ln()).collect();
        let y: Vec<f64> = idx.iter().map(|&i| profile.u[i]).collect();
        let (c, _, rms) = least_squares(&x, &y);
        let growth = c * std::f64::consts::LN_10;
        let err = if c > 0.0 { rms / growth } else { f64::INFINITY };
        (err, c, growth.abs() <= THRESHOLD * u_end)
    } else {
        let e = n as f64 - 2.0;
        let x: Vec<f64> = idx.iter().map(|&i| profile.r[i].powf(e)).collect();
        let y: Vec<f64> = idx.iter().map(|&i| profile.r[i].powf(e) * profile.u[i]).collect();
        let (_, c, _) = least_squares(&x, &y);
        ((slope + e).abs() / e, c, slope.abs() <= THRESHOLD)
    };
    let mut best: Option<(f64, DichotomyClass)> = None;
    let mut consider = |err: f64, class: DichotomyClass| {
        if err <= THRESHOLD && best.is_none_or(|(e, _)| err < e) {
            best = Some((err, class));
        }
    };
    consider(strong_error, DichotomyClass::Strong { ell: u_end * r_end.powf(a) });
    if weak_c > 0.0 && !regular {
        consider(weak_error, DichotomyClass::Weak { c: weak_c });
    }
    if regular {
        consider(if n == 2 { 0.0 } else { slope.abs() }, DichotomyClass::Regular);
    }
    let (_, class) = best.ok_or_else(|| {
        Error::Unclassified(format!("slope {slope:.4}: strong error {strong_error:.3}, weak error {weak_error:.3}"))
    })?;
    Ok(Classification { class, slope, strong_error, weak_error, window_nodes: idx.len() })
}

/// Mass read from the flux at the innermost radius plus the absorption inside it,
/// the latter estimated from the weak asymptotics with constant `c`.
pub fn flux_mass(profile: &RadialProfile, c: f64) -> f64 {
    let n = profile.n;
    let q = profile.q;
    let s = sphere_area(n);
    let r = profile.r_end();
    let du = *profile.du.last().unwrap();
    let flux = -s * r.powi(n as i32 - 1) * du;
    let tail = if n == 2 {
        s * (c * (1.0 / r).ln()).powf(q) * r * r / 2.0
    } else {
        let e = n as f64 - q * (n as f64 - 2.0);
        s * c.powf(q) * r.powf(e) / e
    };
    flux + tail
}

/// One backward shot of a dichotomy sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    /// `u'(1)`.
    pub slope_start: f64,
    pub classification: Option<Classification>,
    /// Mass `C_n c` of weak verdicts and its flux-quadrature counterpart.
    pub weak_mass: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DichotomySweep {
    pub q: f64,
    pub n: usize,
    pub r_end: f64,
    /// Initial slope whose backward shot follows the explicit singular solution.
    pub s_strong: f64,
    /// Initial slope of the regular solution.
    pub s_regular: f64,
    pub entries: Vec<SweepEntry>,
}

impl DichotomySweep {
    pub fn unclassified(&self) -> usize {
        self.entries.iter().filter(|e| e.classification.is_none()).count()
    }

    pub fn count(&self, pred: impl Fn(&DichotomyClass) -> bool) -> usize {
        self.entries.iter().filter(|e| e.classification.is_some_and(|c| pred(&c.class))).count()
    }
}

fn backward(q: f64, n: usize, s: f64, r_end: f64) -> Result<RadialProfile> {
    shoot_until(OdeKind::Absorption, q, n, 1.0, [1.0, s], r_end, |_, y| y[0] <= 0.0)
}

/// Whether the backward shot with `u(1) = 1, u'(1) = s` exceeds the explicit
/// singular solution (or blows up) before `r_end`.
fn above_singular(q: f64, n: usize, ell: f64, s: f64, r_end: f64) -> Result<bool> {
    match backward(q, n, s, r_end) {
        Err(Error::BlowUp { .. }) => Ok(true),
        Err(e) => Err(e),
        Ok(p) => {
            let u = *p.u.last().unwrap();
            Ok(u > 0.0 && p.r_end() <= r_end * (1.0 + 1e-12) && u * r_end.powf(singular_exponent(q)) > ell)
        }
    }
}

/// `u'(1)` of the regular solution with `u(1) = 1`, from forward shots off the origin.
pub fn regular_slope(q: f64, n: usize) -> Result<f64> {
    let r0 = 1e-8;
    let shot = |a: f64| {
        shoot_until(OdeKind::Absorption, q, n, r0, [a, a.powf(q) * r0 / n as f64], 1.0, |_, _| false)
            .map(|p| (*p.u.last().unwrap(), *p.du.last().unwrap()))
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if shot(mid)?.0 < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-16 * hi {
            break;
        }
    }
    Ok(shot(0.5 * (lo + hi))?.1)
}

/// Backward shots from `r = 1` with `u(1) = 1` across initial slopes spanning
/// the singular and the regular solutions, each classified on `[r_end, 10 r_end]`.
/// The first entry is the singular slope and the last the regular one; the
/// others are spread over the weak range.
pub fn dichotomy_sweep(q: f64, n: usize, points: usize, r_end: f64) -> Result<DichotomySweep> {
    if points < 3 {
        return Err(Error::config("points", "a sweep needs at least 3 shots"));
    }
    let ell = ell_qn(q, n)?;
    let s_regular = regular_slope(q, n)?;
    let mut lo = s_regular - 1.0;
    while !above_singular(q, n, ell, lo, r_end)? {
        lo = s_regular - 2.0 * (s_regular - lo);
        if lo < -1e12 {
            return Err(Error::NoConvergence { iterations: 0, reason: "no blow-up bracket".into() });
        }
    }
    let mut hi = s_regular;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if above_singular(q, n, ell, mid, r_end)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s_strong = hi;
    let interior = points - 2;
    let mut slopes = vec![s_strong];
    for i in 0..interior {
        let t = 0.2 + 0.79 * i as f64 / (interior.max(2) - 1) as f64;
        slopes.push(s_strong + t * (s_regular - s_strong));
    }
    slopes.push(s_regular);
    let c_n = weak_mass_constant(n);
    let entries = slopes
        .par_iter()
        .map(|&s| {
            let p = backward(q, n, s, r_end)?;
            let classification = classify_interior_singularity(&p, q, n).ok();
            let weak_mass = match classification.map(|c| c.class) {
                Some(DichotomyClass::Weak { c }) => Some((c_n * c, flux_mass(&p, c))),
                _ => None,
            };
            Ok(SweepEntry { slope_start: s, classification, weak_mass })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DichotomySweep { q, n, r_end, s_strong, s_regular, entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial_ode::shoot_radial;

    #[test]
    fn explicit_solution_is_strong() {
        let p = shoot_radial(OdeKind::Absorption, 2.0, 3, 1.0, 2.0, -4.0, 1e-4).unwrap();
        let c = classify_interior_singularity(&p, 2.0, 3).unwrap();
        match c.class {
            DichotomyClass::Strong { ell } => assert!((ell / 2.0 - 1.0).abs() < 0.01),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bounded_shot_is_regular() {
        let p = shoot_until(OdeKind::Absorption, 2.0, 3, 1e-6, [0.3, 0.0], 1.0, |_, _| false).unwrap();
        let mut rev = p.clone();
        rev.r.reverse();
        rev.u.reverse();
        rev.du.reverse();
        assert_eq!(classify_interior_singularity(&rev, 2.0, 3).unwrap().class, DichotomyClass::Regular);
    }

    #[test]
    fn sweep_is_exhaustive() {
        let sw = dichotomy_sweep(2.0, 3, 12, 1e-5).unwrap();
        assert_eq!(sw.unclassified(), 0, "{sw:#?}");
        assert!(matches!(sw.entries[0].classification.unwrap().class, DichotomyClass::Strong { .. }));
        assert_eq!(sw.entries.last().unwrap().classification.unwrap().class, DichotomyClass::Regular);
        for e in &sw.entries {
            if let Some((m, f)) = e.weak_mass {
                assert!((m / f - 1.0).abs() < 0.02);
            }
        }
    }
}
