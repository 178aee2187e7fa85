//! Absorption and source nonlinearities with their structural predicates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const EXP_CLAMP: f64 = 700.0;

/// Tagged nonlinearity family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Nonlinearity {
    /// `|r|^(q−1) r`.
    Power { q: f64 },
    /// `e^(a r) − 1`.
    Exp { a: f64 },
    /// `sign(r)(e^(a|r|) − 1)`.
    ExpOdd { a: f64 },
    /// Piecewise-linear interpolation of nondecreasing samples, linear beyond the ends.
    Tabulated { r: Vec<f64>, g: Vec<f64> },
}

impl std::fmt::Display for Nonlinearity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Nonlinearity::Power { q } => write!(f, "power:q={q}"),
            Nonlinearity::Exp { a } => write!(f, "exp:a={a}"),
            Nonlinearity::ExpOdd { a } => write!(f, "expodd:a={a}"),
            Nonlinearity::Tabulated { r, .. } => write!(f, "tabulated:{}", r.len()),
        }
    }
}

fn exp_clamped(x: f64) -> f64 {
    x.min(EXP_CLAMP).exp()
}

impl Nonlinearity {
    /// Parse `power:q=2`, `exp:a=1`, `expodd:a=1`.
    pub fn parse(s: &str) -> Result<Self> {
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        let param = |name: &str| -> Result<f64> {
            rest.split(',')
                .filter_map(|kv| kv.split_once('='))
                .find(|(k, _)| k.trim() == name)
                .ok_or_else(|| Error::config("nl", format!("missing parameter `{name}` in `{s}`")))?
                .1
                .trim()
                .parse()
                .map_err(|_| Error::config("nl", format!("bad value for `{name}` in `{s}`")))
        };
        let nl = match kind.trim() {
            "power" => Nonlinearity::Power { q: param("q")? },
            "exp" => Nonlinearity::Exp { a: param("a")? },
            "expodd" => Nonlinearity::ExpOdd { a: param("a")? },
            other => return Err(Error::config("nl", format!("unknown nonlinearity `{other}`"))),
        };
        nl.validate()?;
        Ok(nl)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Nonlinearity::Power { q } if !(*q > 0.0) => Err(Error::config("nl", "power exponent must be positive")),
            Nonlinearity::Exp { a } | Nonlinearity::ExpOdd { a } if !(*a > 0.0) => {
                Err(Error::config("nl", "exponential rate must be positive"))
            }
            Nonlinearity::Tabulated { r, g } => {
                if r.len() != g.len() || r.len() < 2 {
                    return Err(Error::config("nl", "tabulated nonlinearity needs matching samples"));
                }
                if r.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::config("nl", "tabulated abscissae must increase"));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, r: f64) -> f64 {
        match self {
            Nonlinearity::Power { q } => r.abs().powf(q - 1.0) * r,
            Nonlinearity::Exp { a } => exp_clamped(a * r) - 1.0,
            Nonlinearity::ExpOdd { a } => r.signum() * (exp_clamped(a * r.abs()) - 1.0),
            Nonlinearity::Tabulated { r: xs, g } => {
                let n = xs.len();
                let k = match xs.partition_point(|&x| x <= r) {
                    0 => 0,
                    p if p >= n => n - 2,
                    p => p - 1,
                };
                let t = (r - xs[k]) / (xs[k + 1] - xs[k]);
                g[k] + t * (g[k + 1] - g[k])
            }
        }
    }

    pub fn derivative(&self, r: f64) -> f64 {
        match self {
            Nonlinearity::Power { q } => {
                if r == 0.0 {
                    if *q == 1.0 {
                        1.0
                    } else if *q > 1.0 {
                        0.0
                    } else {
                        f64::INFINITY
                    }
                } else {
                    q * r.abs().powf(q - 1.0)
                }
            }
            Nonlinearity::Exp { a } => a * exp_clamped(a * r),
            Nonlinearity::ExpOdd { a } => a * exp_clamped(a * r.abs()),
            Nonlinearity::Tabulated { .. } => {
                let d = 1e-6 * (1.0 + r.abs());
                (self.eval(r + d) - self.eval(r - d)) / (2.0 * d)
            }
        }
    }

    /// Nondecreasing envelope `g̃(s) ≥ |g(±s)|` for `s ≥ 0`.
    pub fn envelope(&self, s: f64) -> f64 {
        let s = s.abs();
        match self {
            Nonlinearity::Power { q } => s.powf(*q),
            Nonlinearity::Exp { a } | Nonlinearity::ExpOdd { a } => (a * s).exp() - 1.0,
            Nonlinearity::Tabulated { r, .. } => {
                let mut m = self.eval(s).abs().max(self.eval(-s).abs());
                for &x in r.iter().filter(|x| x.abs() <= s) {
                    m = m.max(self.eval(x).abs());
                }
                m
            }
        }
    }

    /// Smallest `r₀ ≥ 0` with `r·g(r) ≥ 0` for `|r| ≥ r₀`.
    pub fn sign_radius(&self) -> f64 {
        match self {
            Nonlinearity::Tabulated { r, .. } => {
                let mut r0 = 0.0f64;
                let mut pts: Vec<f64> = r.clone();
                pts.extend(r.iter().map(|x| -x));
                for &x in &pts {
                    if x * self.eval(x) < 0.0 {
                        r0 = r0.max(x.abs());
                    }
                }
                r0
            }
            _ => 0.0,
        }
    }

    pub fn is_monotone(&self) -> bool {
        match self {
            Nonlinearity::Tabulated { g, .. } => g.windows(2).all(|w| w[1] >= w[0]),
            Nonlinearity::Power { .. } | Nonlinearity::Exp { .. } | Nonlinearity::ExpOdd { .. } => true,
        }
    }

    /// `g(0) = 0`, nondecreasing and convex on `[0, ∞)`.
    pub fn is_convex_on_half_line(&self) -> bool {
        match self {
            Nonlinearity::Power { q } => *q >= 1.0,
            Nonlinearity::Exp { a } | Nonlinearity::ExpOdd { a } => *a >= 0.0,
            Nonlinearity::Tabulated { r, g } => {
                let knots: Vec<(f64, f64)> = r.iter().zip(g).filter(|(x, _)| **x >= 0.0).map(|(x, y)| (*x, *y)).collect();
                let slopes: Vec<f64> = knots.windows(2).map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0)).collect();
                self.eval(0.0) == 0.0 && slopes.first().is_none_or(|&s| s >= 0.0) && slopes.windows(2).all(|w| w[1] >= w[0])
            }
        }
    }

    /// Exponential orders `(a₋, a₊)`.
    pub fn exponential_orders(&self) -> (f64, f64) {
        match self {
            Nonlinearity::Power { .. } | Nonlinearity::Tabulated { .. } => (0.0, 0.0),
            Nonlinearity::Exp { a } => (0.0, *a),
            Nonlinearity::ExpOdd { a } => (-a, *a),
        }
    }

    /// `g` clipped to `[−k, k]`.
    pub fn truncated(&self, r: f64, k: f64) -> f64 {
        self.eval(r).clamp(-k, k)
    }

    /// Derivative of the clipped nonlinearity (zero on the clipped set).
    pub fn truncated_derivative(&self, r: f64, k: f64) -> f64 {
        let g = self.eval(r);
        if g.abs() >= k {
            0.0
        } else {
            self.derivative(r)
        }
    }
}

/// Power-law critical exponent for interior data with weight `ρ^α`.
pub fn interior_critical_exponent(n: usize, alpha: f64) -> f64 {
    let s = n as f64 + alpha;
    s / (s - 2.0)
}

/// Critical exponent for boundary data, `(n+1)/(n−1)`.
pub fn boundary_critical_exponent(n: usize) -> f64 {
    (n as f64 + 1.0) / (n as f64 - 1.0)
}

/// Where a singularity sits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Location {
    Interior,
    Boundary,
}

/// Weak-singularity test: power law by its exponent, otherwise by a dyadic
/// shell test of `∫₀¹ g̃(r^(2−n−α)) r^(n+α−1) dr` (resp. `∫₀¹ g̃(r^(1−n)) rⁿ dr`).
pub fn is_weakly_singular(nl: &Nonlinearity, n: usize, alpha: f64, location: Location) -> bool {
    let s = n as f64 + alpha;
    assert!(s > 2.0, "need n + α > 2");
    if let Nonlinearity::Power { q } = nl {
        return match location {
            Location::Interior => *q < interior_critical_exponent(n, alpha),
            Location::Boundary => *q < boundary_critical_exponent(n),
        };
    }
    let (pole, weight) = match location {
        Location::Interior => (2.0 - s, s - 1.0),
        Location::Boundary => (1.0 - n as f64, n as f64),
    };
    shell_sum_converges(|r| nl.envelope(r.powf(pole)) * r.powf(weight))
}

/// Decide convergence of `∫₀¹ f(r) dr` from its dyadic shell contributions.
fn shell_sum_converges(f: impl Fn(f64) -> f64) -> bool {
    let shell = |k: i32| {
        let (a, b) = (0.5f64.powi(k + 1), 0.5f64.powi(k));
        // 8-point Gauss–Legendre on [a, b]
        const X: [f64; 4] = [0.183_434_642_495_649_8, 0.525_532_409_916_329, 0.796_666_477_413_626_7, 0.960_289_856_497_536_2];
        const W: [f64; 4] = [0.362_683_783_378_362, 0.313_706_645_877_887_3, 0.222_381_034_453_374_5, 0.101_228_536_290_376_3];
        let (m, hw) = (0.5 * (a + b), 0.5 * (b - a));
        X.iter().zip(W).map(|(x, w)| w * (f(m - hw * x) + f(m + hw * x))).sum::<f64>() * hw
    };
    let mut total = shell(0);
    let mut prev = total;
    let mut prev_ratio = f64::NAN;
    for k in 1..300 {
        let t = shell(k);
        if !t.is_finite() || t > 1e300 {
            return false;
        }
        total += t;
        if t < 1e-14 * total.max(f64::MIN_POSITIVE) {
            return true;
        }
        let ratio = t / prev;
        if k > 30 && (ratio - prev_ratio).abs() < 1e-9 {
            return ratio < 1.0 - 1e-6;
        }
        prev = t;
        prev_ratio = ratio;
    }
    false
}

/// `4π/a₋ ≤ c_j ≤ 4π/a₊` for every atom weight (2-D).
pub fn subcritical_predicate_2d(nl: &Nonlinearity, weights: &[f64]) -> bool {
    use std::f64::consts::PI;
    let (am, ap) = nl.exponential_orders();
    let upper = if ap > 0.0 { 4.0 * PI / ap } else { f64::INFINITY };
    let lower = if am < 0.0 { 4.0 * PI / am } else { f64::NEG_INFINITY };
    weights.iter().all(|&c| c >= lower && c <= upper)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn power_criteria() {
        assert!(is_weakly_singular(&Nonlinearity::Power { q: 2.0 }, 3, 0.0, Location::Interior));
        assert!(!is_weakly_singular(&Nonlinearity::Power { q: 3.0 }, 3, 0.0, Location::Interior));
        assert!(!is_weakly_singular(&Nonlinearity::Power { q: 3.0 }, 2, 1.0, Location::Boundary));
        assert!(is_weakly_singular(&Nonlinearity::Power { q: 2.0 }, 2, 1.0, Location::Boundary));
    }

    #[test]
    fn quadrature_criterion_agrees_with_power_law() {
        for &(q, n) in &[(2.0, 3usize), (2.9, 3), (3.2, 3), (1.5, 4), (2.5, 4)] {
            let direct = shell_sum_converges(|r| (r.powf(2.0 - n as f64)).powf(q) * r.powf(n as f64 - 1.0));
            assert_eq!(direct, q < n as f64 / (n as f64 - 2.0), "q={q} n={n}");
        }
        assert!(!is_weakly_singular(&Nonlinearity::Exp { a: 1.0 }, 3, 0.0, Location::Interior));
    }

    #[test]
    fn subcritical_atoms() {
        let e = Nonlinearity::Exp { a: 1.0 };
        assert!(subcritical_predicate_2d(&e, &[2.0 * PI]));
        assert!(!subcritical_predicate_2d(&e, &[8.0 * PI]));
        assert!(subcritical_predicate_2d(&Nonlinearity::Power { q: 5.0 }, &[1e6, -1e6]));
        assert!(!subcritical_predicate_2d(&Nonlinearity::ExpOdd { a: 1.0 }, &[-8.0 * PI]));
    }

    #[test]
    fn parsing() {
        assert_eq!(Nonlinearity::parse("power:q=2").unwrap(), Nonlinearity::Power { q: 2.0 });
        assert_eq!(Nonlinearity::parse("exp:a=1.5").unwrap(), Nonlinearity::Exp { a: 1.5 });
        assert!(Nonlinearity::parse("cubic:q=2").is_err());
        assert!(Nonlinearity::parse("power:a=2").is_err());
    }

    #[test]
    fn tabulated_sign_radius() {
        let nl = Nonlinearity::Tabulated { r: vec![-2.0, -1.0, 0.0, 1.0, 2.0], g: vec![-1.0, 0.5, 0.6, 0.7, 3.0] };
        assert!(nl.is_monotone());
        assert_eq!(nl.sign_radius(), 1.0);
        assert_eq!(nl.eval(3.0), 5.3);
    }

    proptest! {
        #[test]
        fn envelope_dominates(r in -30.0f64..30.0, q in 0.5f64..6.0, a in 0.1f64..3.0) {
            for nl in [Nonlinearity::Power { q }, Nonlinearity::Exp { a }, Nonlinearity::ExpOdd { a }] {
                prop_assert!(nl.envelope(r.abs()) >= nl.eval(r).abs() * (1.0 - 1e-12));
                prop_assert!(r * nl.eval(r) >= 0.0);
                prop_assert!(nl.envelope(r.abs() + 1.0) >= nl.envelope(r.abs()));
            }
        }
    }
}
