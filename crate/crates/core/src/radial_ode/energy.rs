use super::profiles::{shoot_radial, OdeKind};
use crate::error::{Error, Result};

/// First integral `w'² − ((n−2)²/4)w² + ((n−2)/n)|w|^(2n/(n−2))` of the
/// Emden–Fowler form of `−Δu = u^((n+2)/(n−2))`, with `w(t) = r^((n−2)/2) u(r)`
/// and `t = ln(1/r)`.
pub fn reduced_energy(w: f64, dw: f64, n: usize) -> f64 {
    let m = n as f64 - 2.0;
    dw * dw - 0.25 * m * m * w * w + m / n as f64 * w.abs().powf(2.0 * n as f64 / m)
}

/// Conformal exponent `(n+2)/(n−2)`.
pub fn conformal_exponent(n: usize) -> f64 {
    (n as f64 + 2.0) / (n as f64 - 2.0)
}

/// `(t, w, w')` along the backward shot of the conformal source equation
/// from `r = 1` down to `r = e^(−t_max)`.
pub fn conformal_trajectory(n: usize, u1: f64, du1: f64, t_max: f64) -> Result<Vec<(f64, f64, f64)>> {
    if n < 3 {
        return Err(Error::domain(format!("conformal exponent needs n ≥ 3, got {n}")));
    }
    let p = shoot_radial(OdeKind::Source, conformal_exponent(n), n, 1.0, u1, du1, (-t_max).exp())?;
    let b = 0.5 * (n as f64 - 2.0);
    Ok(p.r
        .iter()
        .zip(p.u.iter().zip(&p.du))
        .map(|(&r, (&u, &du))| {
            let w = r.powf(b) * u;
            let dw = -r.powf(b) * (b * u + r * du);
            (-r.ln(), w, dw)
        })
        .collect())
}

/// `max |E(t) − E(0)| / (1 + |E(0)|)` along a conformal trajectory.
pub fn energy_drift(n: usize, u1: f64, du1: f64, t_max: f64) -> Result<f64> {
    let traj = conformal_trajectory(n, u1, du1, t_max)?;
    let e0 = reduced_energy(traj[0].1, traj[0].2, n);
    Ok(traj.iter().map(|&(_, w, dw)| (reduced_energy(w, dw, n) - e0).abs()).fold(0.0, f64::max) / (1.0 + e0.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial_ode::gamma_qn;

    #[test]
    fn energy_is_conserved() {
        assert_eq!(reduced_energy(0.0, 0.0, 3), 0.0);
        for (u, du) in [(0.5, 0.0), (1.0, -0.3), (0.2, 0.4)] {
            assert!(energy_drift(3, u, du, 10.0).unwrap() < 1e-6);
        }
    }

    #[test]
    fn singular_solution_is_stationary() {
        let g = gamma_qn(5.0, 3).unwrap();
        let traj = conformal_trajectory(3, g, -0.5 * g, 5.0).unwrap();
        for &(_, w, dw) in &traj {
            assert!((w - g).abs() < 1e-8 && dw.abs() < 1e-8);
        }
        let e = reduced_energy(g, 0.0, 3);
        assert!((e - (-0.25 * g * g + g.powi(6) / 3.0)).abs() < 1e-15);
    }
}
