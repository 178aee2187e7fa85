use crate::error::{Error, Result};

/// Tolerances of the embedded Runge–Kutta integrator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Abort with `BlowUp` once `|y[0]|` exceeds this.
    pub blow_up: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions { rtol: 1e-10, atol: 1e-14, blow_up: 1e12, max_steps: 2_000_000 }
    }
}

// Dormand–Prince 5(4) tableau
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] =
    [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];

/// Adaptive Dormand–Prince integration of a planar system `y' = f(t, y)`
/// through the increasing or decreasing output abscissae `ts` (the first entry is
/// the initial time). `stop` is checked after each output and ends the run early.
pub fn integrate<F, S>(f: F, ts: &[f64], y0: [f64; 2], opts: &OdeOptions, mut stop: S) -> Result<Vec<[f64; 2]>>
where
    F: Fn(f64, &[f64; 2]) -> [f64; 2],
    S: FnMut(f64, &[f64; 2]) -> bool,
{
    let mut out = Vec::with_capacity(ts.len());
    out.push(y0);
    if ts.len() < 2 {
        return Ok(out);
    }
    let dir = (ts[1] - ts[0]).signum();
    let mut t = ts[0];
    let mut y = y0;
    let mut h = dir * (ts[1] - ts[0]).abs().min(1e-3 * ts[0].abs().max(1e-3));
    let mut steps = 0;
    let mut k = [[0.0; 2]; 7];
    for &target in &ts[1..] {
        while dir * (target - t) > 0.0 {
            if dir * (t + h - target) > 0.0 {
                h = target - t;
            }
            k[0] = f(t, &y);
            for s in 1..7 {
                let mut ys = y;
                for (j, kj) in k.iter().enumerate().take(s) {
                    ys[0] += h * A[s][j] * kj[0];
                    ys[1] += h * A[s][j] * kj[1];
                }
                k[s] = f(t + C[s] * h, &ys);
            }
            let mut y5 = y;
            let mut err = 0.0f64;
            for i in 0..2 {
                let mut d5 = 0.0;
                let mut d4 = 0.0;
                for s in 0..7 {
                    d5 += B5[s] * k[s][i];
                    d4 += B4[s] * k[s][i];
                }
                y5[i] += h * d5;
                let scale = opts.atol + opts.rtol * y[i].abs().max(y5[i].abs());
                err = err.max((h * (d5 - d4)).abs() / scale);
            }
            steps += 1;
            if steps > opts.max_steps {
                return Err(Error::NoConvergence { iterations: steps, reason: format!("step budget exhausted at t={t}") });
            }
            if !err.is_finite() {
                h *= 0.1;
                continue;
            }
            if err <= 1.0 {
                t += h;
                y = y5;
                if !(y[0].abs() <= opts.blow_up) {
                    return Err(Error::BlowUp { r: t });
                }
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            h *= factor;
            if h.abs() < 1e-15 * t.abs().max(1e-300) {
                return Err(Error::NoConvergence { iterations: steps, reason: format!("step size underflow at t={t}") });
            }
        }
        out.push(y);
        if stop(t, &y) {
            break;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_period() {
        let ts: Vec<f64> = (0..=100).map(|i| i as f64 * 2.0 * std::f64::consts::PI / 100.0).collect();
        let ys = integrate(|_, y| [y[1], -y[0]], &ts, [1.0, 0.0], &OdeOptions::default(), |_, _| false).unwrap();
        for (t, y) in ts.iter().zip(&ys) {
            assert!((y[0] - t.cos()).abs() < 1e-8);
        }
    }

    #[test]
    fn backward_integration_and_blow_up() {
        let ts = [1.0, 0.5, 0.25];
        let ys = integrate(|_, y| [y[0], 0.0], &ts, [1.0, 0.0], &OdeOptions::default(), |_, _| false).unwrap();
        assert!((ys[2][0] - (-0.75f64).exp()).abs() < 1e-10);
        let r = integrate(|_, y| [y[0] * y[0], 0.0], &[0.0, 2.0], [1.0, 0.0], &OdeOptions::default(), |_, _| false);
        assert!(matches!(r, Err(Error::BlowUp { r }) if (r - 1.0).abs() < 1e-3));
    }
}
