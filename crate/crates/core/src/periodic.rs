//! Periodic-orbit gap inequality and the induced two-branch system.
//!
//! At a repelling periodic point `x0` of period `N` the tree pressure at
//! `x0` should exceed the orbit average `(1/N) S_N φ(x0)`. The argument goes
//! through a horseshoe: two disjoint intervals `U0 ∋ x0` and `U1` that `f^K`
//! maps monotonically onto a common interval `V ⊇ U0 ∪ U1`. The induced map
//! `f^K` on `U0 ∪ U1` is a full 2-shift, and its own tree sum at `x0` is a
//! sub-sum of the full tree.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::imfs::{Imfs, ImfsBranch, STRICT_MARGIN};
use crate::interval::Interval;
use crate::interval_map::{IntervalMap, PeriodicOrbit, DEDUP_RADIUS};
use crate::potential::{birkhoff_sum, Potential};
use crate::pressure::{tail_max, tree_pressure_series, TreePressureSeries};
use crate::sum::LogSumExp;

/// Orbits count as repelling when `|multiplier| > 1 + REPELLING_SLACK`.
pub const REPELLING_SLACK: f64 = 1e-6;

const CERT_DISJOINT: f64 = 1e-9;
const CERT_ENDPOINT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RepellingOrbit {
    pub orbit: PeriodicOrbit,
    /// Some point of the orbit is an endpoint of the domain.
    pub at_endpoint: bool,
}

/// Repelling orbits of minimal period `<= max_period`, interior ones first.
pub fn repelling_orbits(map: &IntervalMap, max_period: usize) -> Result<Vec<RepellingOrbit>> {
    let dom = map.domain();
    let mut out = Vec::new();
    for period in 1..=max_period {
        for orbit in map.periodic_points(period)? {
            if orbit.period != period || orbit.multiplier.abs() <= 1.0 + REPELLING_SLACK {
                continue;
            }
            let at_endpoint = orbit
                .orbit
                .iter()
                .any(|&x| (x - dom.lo).abs() <= 1e-12 || (x - dom.hi).abs() <= 1e-12);
            out.push(RepellingOrbit { orbit, at_endpoint });
        }
    }
    out.sort_by(|a, b| {
        a.at_endpoint
            .cmp(&b.at_endpoint)
            .then(a.orbit.period.cmp(&b.orbit.period))
            .then(a.orbit.point.total_cmp(&b.orbit.point))
    });
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodicGapReport {
    pub x0: f64,
    pub period: usize,
    /// Tail maximum of the tree pressure at `x0`.
    pub lhs: f64,
    /// `(1/N) S_N φ(x0)`.
    pub rhs: f64,
    pub margin: f64,
    pub strict: bool,
    pub series: TreePressureSeries,
}

pub fn periodic_gap_check(
    map: &IntervalMap,
    phi: &Potential,
    orbit: &PeriodicOrbit,
    n_max: usize,
) -> Result<PeriodicGapReport> {
    if orbit.multiplier.abs() <= 1.0 + REPELLING_SLACK {
        return Err(Error::Precondition(format!(
            "orbit through {} is not repelling (multiplier {})",
            orbit.point, orbit.multiplier
        )));
    }
    let x0 = orbit.point;
    let series = tree_pressure_series(map, phi, x0, n_max)?;
    let rhs = birkhoff_sum(map, phi, x0, orbit.period)? / orbit.period as f64;
    let margin = series.tail_max - rhs;
    Ok(PeriodicGapReport {
        x0,
        period: orbit.period,
        lhs: series.tail_max,
        rhs,
        margin,
        strict: margin > STRICT_MARGIN,
        series,
    })
}

/// Two disjoint intervals mapped by `f^K` monotonically onto `V ⊇ U0 ∪ U1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HorseshoeCertificate {
    pub x0: f64,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "U0")]
    pub u0: Interval,
    #[serde(rename = "U1")]
    pub u1: Interval,
    #[serde(rename = "V")]
    pub target: Interval,
}

impl HorseshoeCertificate {
    /// Checks disjointness, monotone covering of `V` by each `U_i`, and
    /// `U0 ∪ U1 ⊆ V`.
    pub fn validate(&self, map: &IntervalMap) -> Result<()> {
        if self.u0.distance(&self.u1) <= CERT_DISJOINT {
            return Err(Error::InvariantViolation("U0 and U1 are not disjoint".into()));
        }
        for u in [self.u0, self.u1] {
            if !self.target.contains_interval(&u, 0.0) {
                return Err(Error::InvariantViolation(format!("{u} is not inside {}", self.target)));
            }
            let mut img = u;
            for _ in 0..self.k {
                if map
                    .criticals()
                    .iter()
                    .any(|c| c.point > img.lo && c.point < img.hi)
                {
                    return Err(Error::InvariantViolation(format!(
                        "f^{} is not monotone on {u}",
                        self.k
                    )));
                }
                img = map.image(&img);
            }
            if !img.approx_eq(&self.target, CERT_ENDPOINT_TOL) {
                return Err(Error::InvariantViolation(format!(
                    "f^{} maps {u} onto {img}, not {}",
                    self.k, self.target
                )));
            }
        }
        Ok(())
    }

    /// Branch indices of `f` visited by `f^j(u)`, `j < K`.
    fn itinerary(&self, map: &IntervalMap, u: &Interval) -> Result<Vec<usize>> {
        let mut img = *u;
        let mut route = Vec::with_capacity(self.k);
        for _ in 0..self.k {
            let idx = map
                .branches()
                .iter()
                .position(|b| b.sub().contains_interval(&img, 1e-12))
                .ok_or_else(|| Error::InvariantViolation(format!("{img} straddles a critical point")))?;
            route.push(idx);
            img = map.image(&img);
        }
        Ok(route)
    }

    /// The induced system as a two-branch IMFS of uniform time `K` on `V`.
    pub fn as_imfs(&self, map: Arc<IntervalMap>) -> Result<Imfs> {
        Imfs::new(
            map,
            self.target,
            vec![
                ImfsBranch { time: self.k, window: self.u0 },
                ImfsBranch { time: self.k, window: self.u1 },
            ],
        )
    }
}

/// Searches `K = 2N, 4N, ... <= k_max` for a certificate on
/// `V = [x0 - ρ, x0 + ρ]`: `U0` is the monotone pull-back of `V` containing
/// `x0`, `U1` the leftmost other monotone pull-back inside `V`.
pub fn horseshoe_certificate(
    map: &IntervalMap,
    orbit: &PeriodicOrbit,
    rho: f64,
    k_max: usize,
) -> Result<HorseshoeCertificate> {
    if orbit.multiplier.abs() <= 1.0 + REPELLING_SLACK {
        return Err(Error::Precondition("orbit is not repelling".into()));
    }
    let x0 = orbit.point;
    let dom = map.domain();
    let target = Interval::new(x0 - rho, x0 + rho);
    if !(rho > 0.0) || target.lo <= dom.lo || target.hi >= dom.hi {
        return Err(Error::Precondition(format!(
            "B({x0}, {rho}) must lie in the interior of {dom}"
        )));
    }
    let step = 2 * orbit.period;
    let mut k = step;
    while k <= k_max {
        let valid: Vec<Interval> = map
            .pull_back_components(&target, k)?
            .into_iter()
            .filter(|p| p.monotone && target.contains_interval(&p.interval, 0.0))
            .map(|p| p.interval)
            .filter(|iv| map.image_iterate(iv, k).approx_eq(&target, CERT_ENDPOINT_TOL))
            .collect();
        if let Some(u0) = valid.iter().copied().find(|iv| iv.contains(x0)) {
            if let Some(u1) = valid
                .iter()
                .copied()
                .find(|iv| iv.distance(&u0) > CERT_DISJOINT)
            {
                let cert = HorseshoeCertificate {
                    x0,
                    k,
                    u0,
                    u1,
                    target,
                };
                cert.validate(map)?;
                return Ok(cert);
            }
        }
        k += step;
    }
    Err(Error::NotFound(format!(
        "no horseshoe at {x0} with radius {rho} and K <= {k_max}"
    )))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InducedGapReport {
    /// `q_m` for `m = 1..=m_max`.
    pub q: Vec<f64>,
    pub tail_max: f64,
    /// `φ̂(x0) = (1/K) S_K φ(x0)`.
    pub phi_hat_x0: f64,
    pub margin: f64,
    pub strict: bool,
    /// Number of distinct itineraries reached at each induced depth.
    pub itinerary_counts: Vec<u64>,
    /// Largest spread of `Ŝ_m φ̂` over a single itinerary cylinder.
    pub distortion_slack: f64,
    pub warnings: Vec<String>,
}

/// Point of the induced tree with the two endpoints of its cylinder, each
/// paired with its induced Birkhoff sum.
#[derive(Clone, Copy)]
struct InducedNode {
    points: [f64; 3],
    sums: [f64; 3],
}

pub fn induced_gap_series(
    map: &IntervalMap,
    phi: &Potential,
    cert: &HorseshoeCertificate,
    m_max: usize,
) -> Result<InducedGapReport> {
    if m_max == 0 {
        return Err(Error::Precondition("m_max must be positive".into()));
    }
    map.check_budget("induced tree", m_max)?;
    cert.validate(map)?;
    let k = cert.k;
    let routes = [cert.itinerary(map, &cert.u0)?, cert.itinerary(map, &cert.u1)?];
    let inverse = |which: usize, y: f64| -> Result<f64> {
        let mut x = y;
        for &b in routes[which].iter().rev() {
            x = map.branches()[b]
                .inverse(x)
                .ok_or_else(|| Error::InvariantViolation(format!("{y} has no induced preimage")))?;
        }
        Ok(x)
    };
    let phi_hat = |x: f64| -> Result<f64> { Ok(birkhoff_sum(map, phi, x, k)? / k as f64) };

    let mut levels = vec![LogSumExp::new(); m_max];
    let mut counts = vec![0u64; m_max];
    let mut slack: f64 = 0.0;
    let mut frontier = vec![InducedNode {
        points: [cert.target.lo, cert.x0, cert.target.hi],
        sums: [0.0; 3],
    }];
    for depth in 0..m_max {
        let mut next = Vec::with_capacity(frontier.len() * 2);
        for node in &frontier {
            for which in 0..2 {
                let mut child = InducedNode {
                    points: [0.0; 3],
                    sums: [0.0; 3],
                };
                for i in 0..3 {
                    let z = inverse(which, node.points[i])?;
                    child.points[i] = z;
                    child.sums[i] = phi_hat(z)? + node.sums[i];
                }
                let (lo, hi) = child
                    .sums
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &s| (a.min(s), b.max(s)));
                slack = slack.max(hi - lo);
                levels[depth].add(child.sums[1]);
                next.push(child);
            }
        }
        let mut leaves: Vec<f64> = next.iter().map(|n| n.points[1]).collect();
        leaves.sort_by(f64::total_cmp);
        leaves.dedup_by(|a, b| (*a - *b).abs() <= DEDUP_RADIUS);
        counts[depth] = leaves.len() as u64;
        frontier = next;
    }

    let q: Vec<f64> = levels
        .iter()
        .enumerate()
        .map(|(i, l)| l.ln() / (i + 1) as f64)
        .collect();
    let tail = tail_max(&q);
    let phi_hat_x0 = phi_hat(cert.x0)?;
    let margin = tail - phi_hat_x0;
    let mut warnings = Vec::new();
    for (i, &c) in counts.iter().enumerate() {
        if c < 1u64 << (i + 1) {
            warnings.push(format!(
                "only {c} itineraries at induced depth {}; certificate may be degenerate",
                i + 1
            ));
        }
    }
    Ok(InducedGapReport {
        q,
        tail_max: tail,
        phi_hat_x0,
        margin,
        strict: margin > STRICT_MARGIN,
        itinerary_counts: counts,
        distortion_slack: slack,
        warnings,
    })
}
