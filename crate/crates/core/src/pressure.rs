//! Tree pressure, sup-Birkhoff averages and the hyperbolicity verdict.
//!
//! The tree pressure at a base point `x0` is
//! `p_n = (1/n) log Σ_{y ∈ f^{-n}(x0)} exp(S_n φ(y))`. Its limsup bounds the
//! topological pressure from below. A Hölder potential is hyperbolic when
//! `sup (1/n) S_n φ < P(f, φ)` for some `n`; the verdict below compares a
//! certified upper bound of the left side with the tree-pressure lower bound.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::interval_map::{IntervalMap, PeriodicOrbit, NEAR_CRITICAL_RADIUS};
use crate::potential::Potential;
use crate::sum::LogSumExp;
use crate::transfer::{leading_eigendata, ulam_operator, EigenParams};

/// Verdict margin added to the sup-average bracket width.
pub const VERDICT_MARGIN: f64 = 1e-3;

/// Levels expanded breadth-first before the tree is split into parallel
/// subtrees. Fixed so that results do not depend on the thread count.
const SPLIT_DEPTH: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TreePressureSeries {
    pub base_point: f64,
    /// `p_n` for `n = 1..=n_max`.
    pub values: Vec<f64>,
    /// `|f^{-n}(x0)|` for `n = 1..=n_max`.
    pub leaf_counts: Vec<u64>,
    /// Maximum of `p_n` over the last third of the series.
    pub tail_max: f64,
    pub near_critical_flag: bool,
    pub warnings: Vec<String>,
}

impl TreePressureSeries {
    /// CSV rows `n,p_n,leaf_count`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,p_n,leaf_count\n");
        for (i, (p, c)) in self.values.iter().zip(&self.leaf_counts).enumerate() {
            out.push_str(&format!("{},{},{}\n", i + 1, p, c));
        }
        out
    }
}

/// Maximum over the last `ceil(len / 3)` entries.
pub fn tail_max(values: &[f64]) -> f64 {
    let k = values.len().div_ceil(3);
    values[values.len() - k..]
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max)
}

struct TreeAccumulator {
    levels: Vec<LogSumExp>,
    near_critical: bool,
}

impl TreeAccumulator {
    fn new(depth: usize) -> Self {
        TreeAccumulator {
            levels: vec![LogSumExp::new(); depth],
            near_critical: false,
        }
    }

    fn merge(&mut self, other: &TreeAccumulator) {
        for (a, b) in self.levels.iter_mut().zip(&other.levels) {
            a.merge(b);
        }
        self.near_critical |= other.near_critical;
    }
}

/// Depth-first expansion below a node at `depth` (0-based) carrying `S`.
fn expand(
    map: &IntervalMap,
    phi: &Potential,
    y: f64,
    birkhoff: f64,
    depth: usize,
    acc: &mut TreeAccumulator,
) -> Result<()> {
    for z in map.inverse_images(y) {
        acc.near_critical |= map.distance_to_critical(z) <= NEAR_CRITICAL_RADIUS;
        let s = phi.eval(z)? + birkhoff;
        acc.levels[depth].add(s);
        if depth + 1 < acc.levels.len() {
            expand(map, phi, z, s, depth + 1, acc)?;
        }
    }
    Ok(())
}

pub fn tree_pressure_series(
    map: &IntervalMap,
    phi: &Potential,
    x0: f64,
    n_max: usize,
) -> Result<TreePressureSeries> {
    if n_max == 0 {
        return Err(Error::Precondition("tree depth must be positive".into()));
    }
    map.check_domain(x0)?;
    map.check_budget("tree pressure", n_max)?;
    let x0 = map.domain().clamp(x0);

    let mut warnings = Vec::new();
    let dom = map.domain();
    if x0 == dom.lo || x0 == dom.hi {
        warnings.push(format!("base point {x0} is an endpoint of the domain"));
    }
    if !map.avoids_critical_orbit(x0, n_max) {
        warnings.push(format!(
            "base point {x0} is within 1e-6 of the forward critical orbit"
        ));
    }

    // Breadth-first over the first levels, in branch order.
    let split = n_max.min(SPLIT_DEPTH);
    let mut acc = TreeAccumulator::new(n_max);
    let mut frontier = vec![(x0, 0.0)];
    for depth in 0..split {
        let mut next = Vec::with_capacity(frontier.len() * map.degree());
        for &(y, s) in &frontier {
            for z in map.inverse_images(y) {
                acc.near_critical |= map.distance_to_critical(z) <= NEAR_CRITICAL_RADIUS;
                let sz = phi.eval(z)? + s;
                acc.levels[depth].add(sz);
                next.push((z, sz));
            }
        }
        frontier = next;
    }

    if split < n_max {
        let subtrees: Vec<TreeAccumulator> = frontier
            .par_iter()
            .map(|&(y, s)| {
                let mut sub = TreeAccumulator::new(n_max);
                expand(map, phi, y, s, split, &mut sub)?;
                Ok(sub)
            })
            .collect::<Result<_>>()?;
        for sub in &subtrees {
            acc.merge(sub);
        }
    }

    let values: Vec<f64> = acc
        .levels
        .iter()
        .enumerate()
        .map(|(i, l)| l.ln() / (i + 1) as f64)
        .collect();
    let leaf_counts = acc.levels.iter().map(LogSumExp::count).collect();
    if acc.near_critical {
        warnings.push("some preimage lies within 1e-8 of a critical point".into());
    }
    Ok(TreePressureSeries {
        base_point: x0,
        tail_max: tail_max(&values),
        values,
        leaf_counts,
        near_critical_flag: acc.near_critical,
        warnings,
    })
}

/// Bracket `lower <= sup_I (1/n) S_n φ <= upper`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupAverage {
    pub n: usize,
    pub lower: f64,
    pub upper: f64,
    /// Grid point attaining `lower`.
    pub argmax: f64,
}

impl SupAverage {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Grid maximum of `(1/n) S_n φ` plus the Hölder error
/// `(C/n) Σ_{j<n} L^j δ^α`, with `δ` half the grid spacing and `L = sup |f'|`.
pub fn sup_birkhoff_average(
    map: &IntervalMap,
    phi: &Potential,
    n: usize,
    grid: usize,
) -> Result<SupAverage> {
    if n == 0 || grid < 2 {
        return Err(Error::Precondition(
            "sup average needs n >= 1 and at least two grid points".into(),
        ));
    }
    let holder = phi.holder_modulus()?;
    let dom = map.domain();
    let spacing = dom.len() / (grid - 1) as f64;
    let point = |k: usize| {
        if k == grid - 1 {
            dom.hi
        } else {
            dom.lo + spacing * k as f64
        }
    };
    let average = |x: f64| -> Result<f64> {
        let mut y = x;
        let mut s = 0.0;
        for _ in 0..n {
            s += phi.eval(y)?;
            y = map.apply(y);
        }
        Ok(s / n as f64)
    };
    let (lower, k_best) = (0..grid)
        .into_par_iter()
        .map(|k| average(point(k)).map(|v| (v, k)))
        .try_reduce(
            || (f64::NEG_INFINITY, usize::MAX),
            |a, b| {
                // Ties go to the smaller index so the reduction is order-free.
                Ok(if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a })
            },
        )?;

    let delta = 0.5 * spacing;
    let lip = map.sup_abs_derivative();
    let mut geometric = 0.0;
    let mut power = 1.0;
    for _ in 0..n {
        geometric += power;
        power *= lip;
    }
    let slack = holder.constant / n as f64 * geometric * delta.powf(holder.exponent);
    Ok(SupAverage {
        n,
        lower,
        upper: lower + slack,
        argmax: point(k_best),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvariantAverage {
    pub value: f64,
    pub orbit: PeriodicOrbit,
}

/// Best orbit average of `φ` over periodic orbits of period at most
/// `max_period`; a lower bound for `sup_ν ∫ φ dν`.
pub fn sup_invariant_average(
    map: &IntervalMap,
    phi: &Potential,
    max_period: usize,
) -> Result<InvariantAverage> {
    let mut best: Option<InvariantAverage> = None;
    for period in 1..=max_period {
        for orbit in map.periodic_points(period)? {
            if orbit.period != period {
                continue;
            }
            let mut s = 0.0;
            for &x in &orbit.orbit {
                s += phi.eval(x)?;
            }
            let value = s / orbit.period as f64;
            if best.as_ref().is_none_or(|b| value > b.value) {
                best = Some(InvariantAverage { value, orbit });
            }
        }
    }
    best.ok_or_else(|| Error::NotFound("no periodic orbits found".into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HyperbolicityParams {
    pub base_point: f64,
    pub n_max: usize,
    pub n_sup: usize,
    pub grid: usize,
    pub cells: usize,
}

impl HyperbolicityParams {
    pub fn new(base_point: f64) -> Self {
        HyperbolicityParams {
            base_point,
            n_max: 14,
            n_sup: 6,
            grid: 100_000,
            cells: 4096,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Hyperbolic,
    Undecided,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HyperbolicityReport {
    pub sup_avg: Vec<SupAverage>,
    pub pressure_lower: f64,
    pub pressure_ulam: f64,
    /// `pressure_lower - min_n sup_avg[n].upper`.
    pub gap: f64,
    /// Threshold the gap must exceed.
    pub margin: f64,
    pub verdict: Verdict,
    pub series: TreePressureSeries,
}

pub fn hyperbolicity_report(
    map: &IntervalMap,
    phi: &Potential,
    params: &HyperbolicityParams,
) -> Result<HyperbolicityReport> {
    if !phi.is_holder() {
        return Err(Error::Unsupported(
            "hyperbolicity verdicts need a Hölder potential".into(),
        ));
    }
    let sup_avg = (1..=params.n_sup)
        .map(|n| sup_birkhoff_average(map, phi, n, params.grid))
        .collect::<Result<Vec<_>>>()?;
    let best = sup_avg
        .iter()
        .copied()
        .reduce(|a, b| if b.upper < a.upper { b } else { a })
        .ok_or_else(|| Error::Precondition("n_sup must be positive".into()))?;
    let series = tree_pressure_series(map, phi, params.base_point, params.n_max)?;
    let op = ulam_operator(map, phi, params.cells)?;
    let eig = leading_eigendata(&op, &EigenParams::default())?;

    let gap = series.tail_max - best.upper;
    let margin = VERDICT_MARGIN + best.width();
    Ok(HyperbolicityReport {
        pressure_lower: series.tail_max,
        pressure_ulam: eig.eigenvalue.ln(),
        gap,
        margin,
        verdict: if gap > margin {
            Verdict::Hyperbolic
        } else {
            Verdict::Undecided
        },
        sup_avg,
        series,
    })
}
