//! Polynomial self-maps of a compact interval.
//!
//! A map is stored as its polynomial together with the decomposition of the
//! domain into monotone branches, cut at the interior critical points. All
//! backward queries (preimages, pull-backs, periodic points) go through the
//! branches: on each branch the map is invertible and inverses are computed by
//! bracketed bisection followed by two guarded Newton steps.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::poly::{bisect, Polynomial};

/// Points closer than this are treated as the same preimage.
pub const DEDUP_RADIUS: f64 = 1e-10;
/// Solutions this close to a critical point raise the near-critical flag.
pub const NEAR_CRITICAL_RADIUS: f64 = 1e-8;
/// Base points this close to the forward critical orbit get a warning.
pub const POSTCRITICAL_WARNING_RADIUS: f64 = 1e-6;
pub const DEFAULT_LEAF_BUDGET: u64 = 1 << 24;

const BISECT_WIDTH: f64 = 1e-13;
const DOMAIN_SLACK: f64 = 1e-12;
const BOUNDARY_TOL: f64 = 1e-9;
const PERIODIC_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Increasing,
    Decreasing,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalPoint {
    pub point: f64,
    /// Order of the critical point: one plus its multiplicity as a root of `f'`.
    pub order: u32,
}

/// Restriction of the map to a subinterval on which it is monotone.
#[derive(Debug, Clone)]
pub struct MonotoneBranch {
    sub: Interval,
    orientation: Orientation,
    range: Interval,
    poly: Polynomial,
    dpoly: Polynomial,
}

impl MonotoneBranch {
    pub fn sub(&self) -> Interval {
        self.sub
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn range(&self) -> Interval {
        self.range
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.poly.eval(x)
    }

    pub fn deriv(&self, x: f64) -> f64 {
        self.dpoly.eval(x)
    }

    /// The unique `x` in the branch with `f(x) = y`, if `y` is in the range.
    pub fn inverse(&self, y: f64) -> Option<f64> {
        if !self.range.contains_with(y, DOMAIN_SLACK) {
            return None;
        }
        let y = self.range.clamp(y);
        let residual = |x: f64| self.poly.eval(x) - y;
        let mut x = bisect(residual, self.sub.lo, self.sub.hi, BISECT_WIDTH);
        for _ in 0..2 {
            let r = residual(x);
            let d = self.dpoly.eval(x);
            if r == 0.0 || d == 0.0 {
                break;
            }
            let candidate = x - r / d;
            if self.sub.contains(candidate) && residual(candidate).abs() < r.abs() {
                x = candidate;
            }
        }
        Some(x)
    }

    /// `{x in sub : f(x) in j}` as an interval, if nonempty.
    pub fn preimage_interval(&self, j: &Interval) -> Option<Interval> {
        let lo = j.lo.max(self.range.lo);
        let hi = j.hi.min(self.range.hi);
        if lo > hi + DOMAIN_SLACK {
            return None;
        }
        let hi = hi.max(lo);
        let a = self.inverse(lo)?;
        let b = self.inverse(hi)?;
        Some(Interval::spanning(a, b))
    }
}

/// Distinct solutions of `f^n(y) = x0`, ascending.
#[derive(Debug, Clone, PartialEq)]
pub struct PreimageSet {
    pub points: Vec<f64>,
    /// Some solution lies within [`NEAR_CRITICAL_RADIUS`] of a critical point.
    pub near_critical: bool,
}

/// A connected component of `f^{-n}(J)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PullBack {
    pub interval: Interval,
    /// Whether `f^n` is monotone on the component.
    pub monotone: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodicOrbit {
    /// Leftmost point of the orbit.
    pub point: f64,
    /// Minimal period.
    pub period: usize,
    /// `Df^period(point)`.
    pub multiplier: f64,
    /// The orbit starting at `point`.
    pub orbit: Vec<f64>,
}

impl PeriodicOrbit {
    pub fn is_repelling(&self) -> bool {
        self.multiplier.abs() > 1.0
    }
}

#[derive(Debug, Clone)]
pub struct IntervalMap {
    label: String,
    poly: Polynomial,
    dpoly: Polynomial,
    domain: Interval,
    branches: Vec<MonotoneBranch>,
    criticals: Vec<CriticalPoint>,
    degree: usize,
    sup_abs_derivative: f64,
    leaf_budget: u64,
}

impl IntervalMap {
    /// `4x(1-x)` on `[0, 1]`.
    pub fn chebyshev2() -> Self {
        Self::from_polynomial(vec![0.0, 4.0, -4.0], Interval::new(0.0, 1.0))
            .expect("chebyshev2 is a valid map")
            .with_label("cheb2")
    }

    /// `4x^3 - 3x` on `[-1, 1]`.
    pub fn chebyshev3() -> Self {
        Self::from_polynomial(vec![0.0, -3.0, 0.0, 4.0], Interval::new(-1.0, 1.0))
            .expect("chebyshev3 is a valid map")
            .with_label("cheb3")
    }

    /// `a x(1-x)` on `[0, 1]`, for `0 < a <= 4`.
    pub fn quadratic(a: f64) -> Result<Self> {
        if !(a > 0.0 && a <= 4.0) {
            return Err(Error::Construction(format!(
                "quadratic family needs 0 < a <= 4, got {a}"
            )));
        }
        Ok(Self::from_polynomial(vec![0.0, a, -a], Interval::new(0.0, 1.0))?
            .with_label(format!("quad:{a}")))
    }

    pub fn from_polynomial(coeffs: Vec<f64>, domain: Interval) -> Result<Self> {
        if !(domain.lo.is_finite() && domain.hi.is_finite() && domain.lo < domain.hi) {
            return Err(Error::Construction(format!("bad domain {domain}")));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Construction("non-finite coefficient".into()));
        }
        let poly = Polynomial::new(coeffs);
        if poly.degree() == 0 {
            return Err(Error::Construction("constant map has no branches".into()));
        }
        let dpoly = poly.derivative();

        let criticals: Vec<CriticalPoint> = dpoly
            .roots_in(&domain)
            .into_iter()
            .map(|c| CriticalPoint {
                point: c,
                order: 1 + dpoly.root_multiplicity(c, &domain).max(1) as u32,
            })
            .collect();

        let edge = 1e-13 * domain.len().max(1.0);
        let mut cuts = vec![domain.lo];
        cuts.extend(
            criticals
                .iter()
                .map(|c| c.point)
                .filter(|&c| c > domain.lo + edge && c < domain.hi - edge),
        );
        cuts.push(domain.hi);

        let slack = DOMAIN_SLACK * domain.len().max(1.0);
        let mut branches = Vec::with_capacity(cuts.len() - 1);
        for w in cuts.windows(2) {
            let sub = Interval::new(w[0], w[1]);
            let orientation = if dpoly.eval(sub.midpoint()) >= 0.0 {
                Orientation::Increasing
            } else {
                Orientation::Decreasing
            };
            let range = Interval::spanning(poly.eval(sub.lo), poly.eval(sub.hi));
            if !domain.contains_interval(&range, slack) {
                return Err(Error::Construction(format!(
                    "branch {sub} maps onto {range}, outside the domain {domain}"
                )));
            }
            let range = Interval::new(domain.clamp(range.lo), domain.clamp(range.hi));
            branches.push(MonotoneBranch {
                sub,
                orientation,
                range,
                poly: poly.clone(),
                dpoly: dpoly.clone(),
            });
        }

        let mut ends: Vec<f64> = branches
            .iter()
            .flat_map(|b| [b.range.lo, b.range.hi])
            .collect();
        ends.sort_by(f64::total_cmp);
        ends.dedup();
        let degree = ends
            .windows(2)
            .map(|w| 0.5 * (w[0] + w[1]))
            .map(|y| branches.iter().filter(|b| b.range.contains(y)).count())
            .max()
            .unwrap_or(1)
            .max(1);

        let sup_abs_derivative = dpoly.sup_abs_on(&domain);
        Ok(IntervalMap {
            label: format!("poly:{domain}"),
            poly,
            dpoly,
            domain,
            branches,
            criticals,
            degree,
            sup_abs_derivative,
            leaf_budget: DEFAULT_LEAF_BUDGET,
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn with_leaf_budget(mut self, budget: u64) -> Self {
        self.leaf_budget = budget;
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn polynomial(&self) -> &Polynomial {
        &self.poly
    }

    pub fn branches(&self) -> &[MonotoneBranch] {
        &self.branches
    }

    pub fn criticals(&self) -> &[CriticalPoint] {
        &self.criticals
    }

    /// Maximal number of preimages of a generic point.
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn leaf_budget(&self) -> u64 {
        self.leaf_budget
    }

    /// `sup |f'|` over the domain.
    pub fn sup_abs_derivative(&self) -> f64 {
        self.sup_abs_derivative
    }

    pub fn check_domain(&self, x: f64) -> Result<()> {
        if self.domain.contains_with(x, DOMAIN_SLACK) {
            Ok(())
        } else {
            Err(Error::OutOfDomain {
                x,
                lo: self.domain.lo,
                hi: self.domain.hi,
            })
        }
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        self.check_domain(x)?;
        Ok(self.apply(x))
    }

    pub fn derivative(&self, x: f64) -> Result<f64> {
        self.check_domain(x)?;
        Ok(self.dpoly.eval(x))
    }

    /// `f(x)` clamped into the domain, without a domain check.
    #[inline]
    pub fn apply(&self, x: f64) -> f64 {
        self.domain.clamp(self.poly.eval(x))
    }

    pub fn iterate(&self, x: f64, n: usize) -> f64 {
        (0..n).fold(x, |y, _| self.apply(y))
    }

    /// `Df^n(x)` by the chain rule.
    pub fn derivative_iterate(&self, x: f64, n: usize) -> f64 {
        let mut y = x;
        let mut d = 1.0;
        for _ in 0..n {
            d *= self.dpoly.eval(y);
            y = self.apply(y);
        }
        d
    }

    pub fn distance_to_critical(&self, x: f64) -> f64 {
        self.criticals
            .iter()
            .map(|c| (x - c.point).abs())
            .fold(f64::INFINITY, f64::min)
    }

    /// `f^j(c)` for every critical point `c` and `1 <= j <= n`.
    pub fn critical_images(&self, n: usize) -> Vec<f64> {
        let mut out = Vec::new();
        for c in &self.criticals {
            let mut y = c.point;
            for _ in 0..n {
                y = self.apply(y);
                out.push(y);
            }
        }
        out
    }

    /// Whether `x0` keeps [`POSTCRITICAL_WARNING_RADIUS`] away from the
    /// first `n` images of every critical point.
    pub fn avoids_critical_orbit(&self, x0: f64, n: usize) -> bool {
        self.critical_images(n)
            .iter()
            .all(|&y| (y - x0).abs() >= POSTCRITICAL_WARNING_RADIUS)
    }

    pub(crate) fn check_budget(&self, what: &'static str, depth: usize) -> Result<()> {
        let needed = (self.degree as f64).powi(depth as i32);
        if needed > self.leaf_budget as f64 {
            return Err(Error::Budget {
                what,
                needed,
                budget: self.leaf_budget,
            });
        }
        Ok(())
    }

    /// The distinct points of `f^{-1}(y)`, in branch order (left to right).
    pub fn inverse_images(&self, y: f64) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::with_capacity(self.branches.len());
        for b in &self.branches {
            if let Some(x) = b.inverse(y) {
                if out.last().is_some_and(|&p| (x - p).abs() <= DEDUP_RADIUS) {
                    continue;
                }
                out.push(x);
            }
        }
        out
    }

    /// All distinct solutions of `f^n(y) = x0`.
    pub fn preimages(&self, x0: f64, n: usize) -> Result<PreimageSet> {
        self.check_domain(x0)?;
        self.check_budget("preimages", n)?;
        let mut level = vec![self.domain.clamp(x0)];
        let mut near_critical = false;
        for _ in 0..n {
            let mut next = Vec::with_capacity(level.len() * self.degree);
            for &y in &level {
                for x in self.inverse_images(y) {
                    near_critical |= self.distance_to_critical(x) <= NEAR_CRITICAL_RADIUS;
                    next.push(x);
                }
            }
            level = next;
        }
        level.sort_by(f64::total_cmp);
        level.dedup_by(|a, b| (*a - *b).abs() <= DEDUP_RADIUS);
        Ok(PreimageSet {
            points: level,
            near_critical,
        })
    }

    /// Points of `f^{-n}(x0)` inside `window`, pruning the backward search
    /// with the exact forward images of the window.
    pub fn preimages_within(&self, x0: f64, n: usize, window: &Interval) -> Result<Vec<f64>> {
        self.check_domain(x0)?;
        self.check_budget("windowed preimages", n)?;
        // images[k] = f^k(window)
        let mut images = Vec::with_capacity(n + 1);
        images.push(*window);
        for k in 0..n {
            let next = self.image(&images[k]);
            images.push(next);
        }
        let mut level = vec![x0];
        for depth in 1..=n {
            let target = images[n - depth];
            let mut next = Vec::new();
            for &y in &level {
                next.extend(
                    self.inverse_images(y)
                        .into_iter()
                        .filter(|&x| target.contains_with(x, 1e-9)),
                );
            }
            level = next;
        }
        level.sort_by(f64::total_cmp);
        level.dedup_by(|a, b| (*a - *b).abs() <= DEDUP_RADIUS);
        Ok(level)
    }

    /// Exact image of an interval: extremes over its endpoints and the
    /// critical values inside it.
    pub fn image(&self, iv: &Interval) -> Interval {
        let a = self.apply(iv.lo);
        let b = self.apply(iv.hi);
        let (mut lo, mut hi) = (a.min(b), a.max(b));
        for c in &self.criticals {
            if c.point > iv.lo && c.point < iv.hi {
                let v = self.apply(c.point);
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        Interval::new(lo, hi)
    }

    pub fn image_iterate(&self, iv: &Interval, n: usize) -> Interval {
        (0..n).fold(*iv, |acc, _| self.image(&acc))
    }

    /// Connected components of `f^{-n}(j)`, left to right.
    pub fn pull_backs(&self, j: &Interval, n: usize) -> Result<Vec<Interval>> {
        Ok(self
            .pull_back_components(j, n)?
            .into_iter()
            .map(|p| p.interval)
            .collect())
    }

    /// Like [`pull_backs`](Self::pull_backs), also recording whether `f^n`
    /// is monotone on each component.
    pub fn pull_back_components(&self, j: &Interval, n: usize) -> Result<Vec<PullBack>> {
        self.check_domain(j.lo)?;
        self.check_domain(j.hi)?;
        self.check_budget("pull-backs", n)?;
        let mut level = vec![PullBack {
            interval: Interval::new(self.domain.clamp(j.lo), self.domain.clamp(j.hi)),
            monotone: true,
        }];
        for _ in 0..n {
            let mut pieces: Vec<PullBack> = Vec::new();
            for comp in &level {
                for b in &self.branches {
                    if let Some(iv) = b.preimage_interval(&comp.interval) {
                        pieces.push(PullBack {
                            interval: iv,
                            monotone: comp.monotone,
                        });
                    }
                }
            }
            pieces.sort_by(|p, q| p.interval.lo.total_cmp(&q.interval.lo));
            let mut merged: Vec<PullBack> = Vec::with_capacity(pieces.len());
            for p in pieces {
                match merged.last_mut() {
                    Some(last) if p.interval.lo <= last.interval.hi + 1e-11 => {
                        last.interval.hi = last.interval.hi.max(p.interval.hi);
                        last.monotone = false;
                    }
                    _ => merged.push(p),
                }
            }
            level = merged;
        }
        Ok(level)
    }

    /// Whether `f^n` sends both endpoints of the pull-back `w` into the
    /// boundary of `j0`.
    pub fn boundary_check(&self, j0: &Interval, w: &Interval, n: usize) -> Result<bool> {
        let comps = self.pull_backs(j0, n)?;
        if !comps.iter().any(|c| c.contains_interval(w, BOUNDARY_TOL)) {
            return Err(Error::Precondition(format!(
                "{w} is not inside a pull-back of {j0} by f^{n}"
            )));
        }
        let on_boundary = |x: f64| {
            let y = self.iterate(x, n);
            (y - j0.lo).abs() <= BOUNDARY_TOL || (y - j0.hi).abs() <= BOUNDARY_TOL
        };
        Ok(on_boundary(w.lo) && on_boundary(w.hi))
    }

    fn covers_domain(&self, iv: &Interval) -> bool {
        let tol = DOMAIN_SLACK * self.domain.len().max(1.0);
        iv.lo <= self.domain.lo + tol && iv.hi >= self.domain.hi - tol
    }

    /// Smallest `n <= n_max` with `f^n(u)` equal to the whole domain.
    pub fn exactness_time(&self, u: &Interval, n_max: usize) -> Option<usize> {
        let mut img = *u;
        for n in 0..=n_max {
            if self.covers_domain(&img) {
                return Some(n);
            }
            img = self.image(&img);
        }
        None
    }

    /// Two distinct points of `f^{-n}(x0)` in `u`, one in each half of `u`,
    /// whose every neighbourhood is mapped by `f^n` across both sides of `x0`.
    pub fn side_covering_points(&self, x0: f64, u: &Interval, n: usize) -> Result<(f64, f64)> {
        self.check_domain(x0)?;
        if x0 <= self.domain.lo || x0 >= self.domain.hi {
            return Err(Error::Precondition(format!("{x0} is not an interior point")));
        }
        let mid = u.midpoint();
        let halves = [Interval::new(u.lo, mid), Interval::new(mid, u.hi)];
        for h in &halves {
            if self.exactness_time(h, n).is_none() {
                return Err(Error::NotFound(format!(
                    "f^{n} does not map {h} onto the domain; increase n"
                )));
            }
        }
        let pre = self.preimages(x0, n)?.points;
        let crosses = |y: f64| {
            [1e-4, 1e-6].iter().all(|&eps| {
                let ball = Interval::new(self.domain.clamp(y - eps), self.domain.clamp(y + eps));
                let img = self.image_iterate(&ball, n);
                img.lo < x0 && img.hi > x0
            })
        };
        let pick = |half: &Interval, left: bool| {
            pre.iter().copied().find(|&y| {
                let inside = if left {
                    half.lo <= y && y <= half.hi
                } else {
                    half.lo < y && y <= half.hi
                };
                inside && crosses(y)
            })
        };
        match (pick(&halves[0], true), pick(&halves[1], false)) {
            (Some(a), Some(b)) if (a - b).abs() > DEDUP_RADIUS => Ok((a, b)),
            _ => Err(Error::NotFound(format!(
                "no two-sided preimages of {x0} in both halves of {u} at depth {n}"
            ))),
        }
    }

    /// Periodic orbits whose minimal period divides `period`.
    ///
    /// Fixed points of `f^N` are bracketed on the monotone laps of `f^N`,
    /// whose endpoints are the preimages of critical points up to depth
    /// `N - 1`.
    pub fn periodic_points(&self, period: usize) -> Result<Vec<PeriodicOrbit>> {
        if period == 0 {
            return Err(Error::Precondition("period must be positive".into()));
        }
        self.check_budget("periodic points", period)?;
        let mut cuts = vec![self.domain.lo, self.domain.hi];
        for c in &self.criticals {
            if c.point <= self.domain.lo || c.point >= self.domain.hi {
                continue;
            }
            for depth in 0..period {
                cuts.extend(self.preimages(c.point, depth)?.points);
            }
        }
        cuts.sort_by(f64::total_cmp);
        cuts.dedup_by(|a, b| (*a - *b).abs() <= DEDUP_RADIUS);

        let g = |x: f64| self.iterate(x, period) - x;
        let mut roots = Vec::new();
        const SAMPLES: usize = 8;
        for lap in cuts.windows(2) {
            let (lo, hi) = (lap[0], lap[1]);
            let xs: Vec<f64> = (0..=SAMPLES)
                .map(|k| lo + (hi - lo) * k as f64 / SAMPLES as f64)
                .collect();
            let gs: Vec<f64> = xs.iter().map(|&x| g(x)).collect();
            for k in 0..=SAMPLES {
                if gs[k].abs() <= 1e-11 {
                    roots.push(xs[k]);
                }
            }
            for k in 0..SAMPLES {
                if gs[k] * gs[k + 1] < 0.0 {
                    let mut x = bisect(g, xs[k], xs[k + 1], BISECT_WIDTH);
                    for _ in 0..2 {
                        let r = g(x);
                        let d = self.derivative_iterate(x, period) - 1.0;
                        if r == 0.0 || d == 0.0 {
                            break;
                        }
                        let cand = x - r / d;
                        if cand >= xs[k] && cand <= xs[k + 1] && g(cand).abs() < r.abs() {
                            x = cand;
                        }
                    }
                    roots.push(x);
                }
            }
        }
        roots.sort_by(f64::total_cmp);
        roots.dedup_by(|a, b| (*a - *b).abs() <= PERIODIC_TOL);

        let mut orbits: Vec<PeriodicOrbit> = Vec::new();
        for &p in &roots {
            let minimal = (1..=period)
                .filter(|&d| period.is_multiple_of(d))
                .find(|&d| (self.iterate(p, d) - p).abs() <= PERIODIC_TOL)
                .unwrap_or(period);
            let mut orbit: Vec<f64> = Vec::with_capacity(minimal);
            let mut y = p;
            for _ in 0..minimal {
                orbit.push(y);
                y = self.apply(y);
            }
            let start = orbit
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1))
                .map(|(i, _)| i)
                .unwrap_or(0);
            orbit.rotate_left(start);
            // Prefer the root solved directly at the leftmost point.
            if let Some(&r) = roots
                .iter()
                .find(|&&r| (r - orbit[0]).abs() <= PERIODIC_TOL)
            {
                orbit[0] = r;
                for i in 1..minimal {
                    orbit[i] = self.apply(orbit[i - 1]);
                }
            }
            if orbits
                .iter()
                .any(|o| o.period == minimal && (o.point - orbit[0]).abs() <= PERIODIC_TOL)
            {
                continue;
            }
            let multiplier = orbit.iter().map(|&x| self.dpoly.eval(x)).product();
            orbits.push(PeriodicOrbit {
                point: orbit[0],
                period: minimal,
                multiplier,
                orbit,
            });
        }
        orbits.sort_by(|a, b| a.period.cmp(&b.period).then(a.point.total_cmp(&b.point)));
        Ok(orbits)
    }
}

impl fmt::Display for IntervalMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

fn parse_f64(token: &str) -> Result<f64> {
    token
        .trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::parse(token, "expected a finite number"))
}

/// Parses the map mini-language: `cheb2`, `cheb3`, `quad:a`, or
/// `poly:[a,b]:c0,c1,...`.
pub fn parse_map(spec: &str) -> Result<IntervalMap> {
    let spec = spec.trim();
    match spec {
        "cheb2" => return Ok(IntervalMap::chebyshev2()),
        "cheb3" => return Ok(IntervalMap::chebyshev3()),
        _ => {}
    }
    if let Some(a) = spec.strip_prefix("quad:") {
        return IntervalMap::quadratic(parse_f64(a)?);
    }
    if let Some(rest) = spec.strip_prefix("poly:") {
        let rest = rest
            .strip_prefix('[')
            .ok_or_else(|| Error::parse(rest, "expected `[a,b]` domain"))?;
        let (dom, coeffs) = rest
            .split_once("]:")
            .ok_or_else(|| Error::parse(rest, "expected `]:` after the domain"))?;
        let (a, b) = dom
            .split_once(',')
            .ok_or_else(|| Error::parse(dom, "expected `a,b`"))?;
        let (a, b) = (parse_f64(a)?, parse_f64(b)?);
        if a >= b {
            return Err(Error::parse(dom, "domain must satisfy a < b"));
        }
        let coeffs = coeffs
            .split(',')
            .map(parse_f64)
            .collect::<Result<Vec<_>>>()?;
        return IntervalMap::from_polynomial(coeffs, Interval::new(a, b))
            .map(|m| m.with_label(spec.to_string()));
    }
    Err(Error::parse(spec, "unknown map; expected cheb2, cheb3, quad:a or poly:[a,b]:c0,..."))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn eval_examples() {
        let c2 = IntervalMap::chebyshev2();
        assert!(close(c2.eval(0.3).unwrap(), 0.84, 1e-15));
        assert_eq!(c2.eval(0.5).unwrap(), 1.0);
        let c3 = IntervalMap::chebyshev3();
        assert_eq!(c3.eval(0.5).unwrap(), -1.0);
    }

    #[test]
    fn eval_rejects_out_of_domain() {
        let c2 = IntervalMap::chebyshev2();
        assert!(matches!(c2.eval(1.5), Err(Error::OutOfDomain { .. })));
        assert!(matches!(c2.derivative(-0.1), Err(Error::OutOfDomain { .. })));
    }

    #[test]
    fn derivative_examples() {
        let c2 = IntervalMap::chebyshev2();
        assert_eq!(c2.derivative(0.25).unwrap(), 2.0);
        assert_eq!(c2.derivative(0.5).unwrap(), 0.0);
        assert_eq!(c2.derivative(0.75).unwrap(), -2.0);
    }

    #[test]
    fn branch_structure() {
        let c2 = IntervalMap::chebyshev2();
        assert_eq!(c2.branches().len(), 2);
        assert_eq!(c2.degree(), 2);
        assert_eq!(c2.criticals().len(), 1);
        assert_eq!(c2.criticals()[0].order, 2);
        assert_eq!(c2.branches()[0].orientation(), Orientation::Increasing);
        assert_eq!(c2.branches()[1].orientation(), Orientation::Decreasing);

        let c3 = IntervalMap::chebyshev3();
        assert_eq!(c3.branches().len(), 3);
        assert_eq!(c3.degree(), 3);
        assert_eq!(c3.sup_abs_derivative(), 9.0);

        // x^3 on [-1,1]: degenerate critical point of order 3.
        let cube = IntervalMap::from_polynomial(vec![0.0, 0.0, 0.0, 1.0], Interval::new(-1.0, 1.0))
            .unwrap();
        assert_eq!(cube.criticals().len(), 1);
        assert_eq!(cube.criticals()[0].order, 3);
        assert_eq!(cube.branches().len(), 2);
        assert_eq!(cube.degree(), 1);
    }

    #[test]
    fn rejects_maps_leaving_the_domain() {
        let err = IntervalMap::from_polynomial(vec![0.0, 5.0, -5.0], Interval::new(0.0, 1.0));
        assert!(matches!(err, Err(Error::Construction(_))));
        assert!(IntervalMap::quadratic(4.5).is_err());
    }

    #[test]
    fn preimage_examples() {
        let c2 = IntervalMap::chebyshev2();
        let p = c2.preimages(0.75, 1).unwrap();
        assert_eq!(p.points.len(), 2);
        assert!(close(p.points[0], 0.25, 1e-14));
        assert!(close(p.points[1], 0.75, 1e-14));

        // Quadratic-formula oracle, level by level.
        let inv = |y: f64| {
            let s = (1.0 - y).sqrt();
            [(1.0 - s) / 2.0, (1.0 + s) / 2.0]
        };
        let mut expected: Vec<f64> = inv(0.75).iter().flat_map(|&y| inv(y)).collect();
        expected.sort_by(f64::total_cmp);
        let p2 = c2.preimages(0.75, 2).unwrap();
        assert_eq!(p2.points.len(), 4);
        for (a, b) in p2.points.iter().zip(&expected) {
            assert!(close(*a, *b, 1e-12), "{a} vs {b}");
        }
        assert!(close(p2.points[0], 0.066987, 1e-6));
        assert!(close(p2.points[3], 0.933013, 1e-6));

        let top = c2.preimages(1.0, 1).unwrap();
        assert_eq!(top.points, vec![0.5]);
        assert!(top.near_critical);
    }

    #[test]
    fn preimage_budget_and_domain_errors() {
        let c2 = IntervalMap::chebyshev2().with_leaf_budget(1 << 10);
        assert!(matches!(c2.preimages(0.3, 11), Err(Error::Budget { .. })));
        assert!(matches!(c2.preimages(1.3, 2), Err(Error::OutOfDomain { .. })));
    }

    #[test]
    fn pull_back_examples() {
        let c2 = IntervalMap::chebyshev2();
        let full = c2.pull_backs(&Interval::new(0.0, 1.0), 1).unwrap();
        assert_eq!(full.len(), 1);
        assert!(full[0].approx_eq(&Interval::new(0.0, 1.0), 1e-12));

        let top = c2.pull_backs(&Interval::new(0.96, 1.0), 1).unwrap();
        assert_eq!(top.len(), 1);
        assert!(top[0].approx_eq(&Interval::new(0.4, 0.6), 1e-11));

        let low = c2.pull_backs(&Interval::new(0.0, 0.5), 1).unwrap();
        let r = (1.0 - 0.5f64.sqrt()) / 2.0;
        assert_eq!(low.len(), 2);
        assert!(low[0].approx_eq(&Interval::new(0.0, r), 1e-11));
        assert!(low[1].approx_eq(&Interval::new(1.0 - r, 1.0), 1e-11));
        assert!(close(r, 0.146447, 1e-6));

        let comps = c2.pull_back_components(&Interval::new(0.96, 1.0), 1).unwrap();
        assert!(!comps[0].monotone);
        let comps = c2.pull_back_components(&Interval::new(0.0, 0.5), 1).unwrap();
        assert!(comps.iter().all(|c| c.monotone));
    }

    #[test]
    fn boundary_check_examples() {
        let c2 = IntervalMap::chebyshev2();
        let j0 = Interval::new(0.96, 1.0);
        assert!(c2.boundary_check(&j0, &Interval::new(0.4, 0.6), 1).unwrap());
        let full = Interval::new(0.0, 1.0);
        assert!(c2.boundary_check(&full, &full, 1).unwrap());

        let j0 = Interval::new(0.0, 0.6);
        let w = c2.pull_backs(&j0, 1).unwrap()[0];
        assert!(close(w.hi, (1.0 - 0.4f64.sqrt()) / 2.0, 1e-12));
        assert!(c2.boundary_check(&j0, &w, 1).unwrap());
        let shrunk = Interval::new(w.lo, w.hi - 1e-3);
        assert!(!c2.boundary_check(&j0, &shrunk, 1).unwrap());

        let outside = Interval::new(0.3, 0.35);
        assert!(matches!(
            c2.boundary_check(&j0, &outside, 1),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn exactness_examples() {
        let c2 = IntervalMap::chebyshev2();
        assert_eq!(c2.exactness_time(&Interval::new(0.0, 1.0), 10), Some(0));
        assert_eq!(c2.exactness_time(&Interval::new(0.4, 0.6), 10), Some(4));
        assert_eq!(c2.exactness_time(&Interval::new(0.49, 0.51), 3), None);
        let img = c2.image_iterate(&Interval::new(0.4, 0.6), 2);
        assert!(img.approx_eq(&Interval::new(0.0, 0.1536), 1e-12));
    }

    #[test]
    fn side_covering_examples() {
        let c2 = IntervalMap::chebyshev2();
        let u = Interval::new(0.2, 0.8);
        let (a, b) = c2.side_covering_points(0.75, &u, 4).unwrap();
        assert!(a != b && u.contains(a) && u.contains(b));
        assert!(close(c2.iterate(a, 4), 0.75, 1e-10));
        assert!(close(c2.iterate(b, 4), 0.75, 1e-10));
        assert!(matches!(
            c2.side_covering_points(0.75, &u, 1),
            Err(Error::NotFound(_))
        ));

        let c3 = IntervalMap::chebyshev3();
        let (a, b) = c3
            .side_covering_points(0.0, &Interval::new(-0.5, 0.5), 3)
            .unwrap();
        assert!(a < b);
        assert!(close(c3.iterate(a, 3), 0.0, 1e-10));
        assert!(close(c3.iterate(b, 3), 0.0, 1e-10));

        assert!(c2.side_covering_points(1.0, &u, 4).is_err());
    }

    #[test]
    fn periodic_examples() {
        let c2 = IntervalMap::chebyshev2();
        let fixed = c2.periodic_points(1).unwrap();
        assert_eq!(fixed.len(), 2);
        assert_eq!(fixed[0].point, 0.0);
        assert_eq!(fixed[0].multiplier, 4.0);
        assert!(close(fixed[1].point, 0.75, 1e-13));
        assert!(close(fixed[1].multiplier, -2.0, 1e-12));

        let two = c2.periodic_points(2).unwrap();
        assert_eq!(two.len(), 3);
        let cycle = two.iter().find(|o| o.period == 2).unwrap();
        let s5 = 5f64.sqrt();
        assert!(close(cycle.orbit[0], (5.0 - s5) / 8.0, 1e-12));
        assert!(close(cycle.orbit[1], (5.0 + s5) / 8.0, 1e-12));
        assert!(close(cycle.multiplier, -4.0, 1e-10));

        let c3 = IntervalMap::chebyshev3();
        let fixed = c3.periodic_points(1).unwrap();
        let pts: Vec<f64> = fixed.iter().map(|o| o.point).collect();
        assert_eq!(pts.len(), 3);
        for (p, e) in pts.iter().zip([-1.0, 0.0, 1.0]) {
            assert!(close(*p, e, 1e-12));
        }
        assert!(close(fixed[0].multiplier, 9.0, 1e-10));
        assert!(close(fixed[1].multiplier, -3.0, 1e-12));
    }

    #[test]
    fn parse_map_specs() {
        let m = parse_map("poly:[0,1]:0,4,-4").unwrap();
        assert_eq!(m.polynomial(), IntervalMap::chebyshev2().polynomial());
        assert_eq!(parse_map("quad:3.5").unwrap().degree(), 2);
        assert_eq!(parse_map(" cheb3 ").unwrap().degree(), 3);
        for bad in ["cheb4", "quad:x", "poly:0,1:1", "poly:[1,0]:0,1", "poly:[0,1]:0,5,-5"] {
            assert!(parse_map(bad).is_err(), "{bad}");
        }
        match parse_map("quad:abc") {
            Err(Error::Parse { token, .. }) => assert_eq!(token, "abc"),
            other => panic!("unexpected {other:?}"),
        }
    }
}
