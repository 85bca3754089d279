//! Potentials on the map's domain and their Birkhoff sums.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::interval_map::IntervalMap;
use crate::poly::Polynomial;

/// Geometric potentials are undefined this close to a critical point.
pub const SINGULARITY_RADIUS: f64 = 1e-9;

/// Hölder data `|φ(x) - φ(y)| <= constant * |x - y|^exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Holder {
    pub exponent: f64,
    pub constant: f64,
}

#[derive(Debug, Clone)]
pub enum Potential {
    Constant(f64),
    Polynomial {
        poly: Polynomial,
        domain: Interval,
    },
    /// `amplitude * cos(2π x̂)` with `x̂` the domain coordinate rescaled to `[0, 1]`.
    Cosine {
        amplitude: f64,
        domain: Interval,
    },
    /// `base - t log|f'|`.
    Geometric {
        base: Box<Potential>,
        t: f64,
        map: Arc<IntervalMap>,
    },
    /// `Σ weight * term`.
    Combination(Vec<(f64, Potential)>),
}

impl Potential {
    pub fn zero() -> Self {
        Potential::Constant(0.0)
    }

    pub fn polynomial(coeffs: Vec<f64>, domain: Interval) -> Self {
        Potential::Polynomial {
            poly: Polynomial::new(coeffs),
            domain,
        }
    }

    pub fn cosine(amplitude: f64, domain: Interval) -> Self {
        Potential::Cosine { amplitude, domain }
    }

    pub fn geometric(base: Potential, t: f64, map: Arc<IntervalMap>) -> Result<Self> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::Construction(format!("geometric potential needs t >= 0, got {t}")));
        }
        Ok(Potential::Geometric {
            base: Box::new(base),
            t,
            map,
        })
    }

    /// `self + c`.
    pub fn shifted(&self, c: f64) -> Self {
        Potential::Combination(vec![(1.0, self.clone()), (1.0, Potential::Constant(c))])
    }

    /// `weight * self`.
    pub fn scaled(&self, weight: f64) -> Self {
        Potential::Combination(vec![(weight, self.clone())])
    }

    /// `a * self + b * other`.
    pub fn combine(a: f64, first: &Potential, b: f64, second: &Potential) -> Self {
        Potential::Combination(vec![(a, first.clone()), (b, second.clone())])
    }

    /// False when any part is geometric (not Hölder near critical points).
    pub fn is_holder(&self) -> bool {
        match self {
            Potential::Geometric { .. } => false,
            Potential::Combination(terms) => terms.iter().all(|(_, p)| p.is_holder()),
            _ => true,
        }
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        Ok(match self {
            Potential::Constant(c) => *c,
            Potential::Polynomial { poly, .. } => poly.eval(x),
            Potential::Cosine { amplitude, domain } => {
                let t = (x - domain.lo) / domain.len();
                amplitude * (std::f64::consts::TAU * t).cos()
            }
            Potential::Geometric { base, t, map } => {
                let d = map.derivative(x)?;
                if map.distance_to_critical(x) <= SINGULARITY_RADIUS || d == 0.0 {
                    return Err(Error::Singularity {
                        x,
                        radius: SINGULARITY_RADIUS,
                    });
                }
                base.eval(x)? - t * d.abs().ln()
            }
            Potential::Combination(terms) => {
                let mut acc = 0.0;
                for (w, p) in terms {
                    acc += w * p.eval(x)?;
                }
                acc
            }
        })
    }

    /// Hölder modulus. Exact `sup |φ'|` with exponent 1 for the smooth kinds.
    pub fn holder_modulus(&self) -> Result<Holder> {
        match self {
            Potential::Constant(_) => Ok(Holder {
                exponent: 1.0,
                constant: 0.0,
            }),
            Potential::Polynomial { poly, domain } => Ok(Holder {
                exponent: 1.0,
                constant: poly.derivative().sup_abs_on(domain),
            }),
            Potential::Cosine { amplitude, domain } => Ok(Holder {
                exponent: 1.0,
                constant: std::f64::consts::TAU * amplitude.abs() / domain.len(),
            }),
            Potential::Geometric { .. } => Err(Error::Unsupported(
                "geometric potentials are not Hölder continuous".into(),
            )),
            Potential::Combination(terms) => {
                // Every Hölder kind is Lipschitz, so the constants add.
                let mut constant = 0.0;
                for (w, p) in terms {
                    constant += w.abs() * p.holder_modulus()?.constant;
                }
                Ok(Holder {
                    exponent: 1.0,
                    constant,
                })
            }
        }
    }

    /// Short human-readable description.
    pub fn describe(&self) -> String {
        match self {
            Potential::Constant(c) => format!("const:{c}"),
            Potential::Polynomial { poly, .. } => {
                let cs: Vec<String> = poly.coeffs().iter().map(|c| c.to_string()).collect();
                format!("poly:{}", cs.join(","))
            }
            Potential::Cosine { amplitude, .. } => format!("cos:{amplitude}"),
            Potential::Geometric { base, t, .. } => format!("geom:{t}:{}", base.describe()),
            Potential::Combination(terms) => terms
                .iter()
                .map(|(w, p)| format!("{w}*({})", p.describe()))
                .collect::<Vec<_>>()
                .join(" + "),
        }
    }
}

/// `S_n(φ)(x) = φ(x) + φ(f x) + ... + φ(f^{n-1} x)`.
pub fn birkhoff_sum(map: &IntervalMap, phi: &Potential, x: f64, n: usize) -> Result<f64> {
    map.check_domain(x)?;
    let mut y = x;
    let mut sum = 0.0;
    for _ in 0..n {
        sum += phi.eval(y)?;
        y = map.apply(y);
    }
    Ok(sum)
}

/// Parses `const:c`, `cos:a`, `poly:c0,c1,...` or `geom:t[:base]`, where
/// `base` is itself a potential spec (default `const:0`).
pub fn parse_potential(spec: &str, map: &Arc<IntervalMap>) -> Result<Potential> {
    let spec = spec.trim();
    let number = |tok: &str| {
        tok.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| Error::parse(tok, "expected a finite number"))
    };
    let (kind, rest) = spec
        .split_once(':')
        .ok_or_else(|| Error::parse(spec, "expected `kind:args`"))?;
    match kind {
        "const" => Ok(Potential::Constant(number(rest)?)),
        "cos" => Ok(Potential::cosine(number(rest)?, map.domain())),
        "poly" => {
            let coeffs = rest.split(',').map(number).collect::<Result<Vec<_>>>()?;
            Ok(Potential::polynomial(coeffs, map.domain()))
        }
        "geom" => {
            let (t, base) = match rest.split_once(':') {
                Some((t, base)) => (number(t)?, parse_potential(base, map)?),
                None => (number(rest)?, Potential::zero()),
            };
            Potential::geometric(base, t, Arc::clone(map))
                .map_err(|e| Error::parse(rest, e.to_string()))
        }
        other => Err(Error::parse(other, "unknown potential kind; expected const, cos, poly or geom")),
    }
}
