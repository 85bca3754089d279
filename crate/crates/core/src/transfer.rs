//! Ulam discretization of the weighted transfer operator
//! `L h(x) = Σ_{f(y)=x} e^{φ(y)} h(y)`.
//!
//! Row `i` of the matrix averages `L` over cell `C_i`: every inverse branch
//! `g` sends `C_i` to an interval `g(C_i)`, which is split among the cells
//! `C_j` it meets with weight `e^{φ(mid)} |g(C_i) ∩ C_j| / |g(C_i)|`. The
//! leading eigenvalue approximates `e^{P(f,φ)}`; the product of the left and
//! right eigenvectors approximates the equilibrium state.

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::interval_map::IntervalMap;
use crate::potential::{Potential, SINGULARITY_RADIUS};
use crate::sum::NeumaierSum;

/// Absolute slack in the Ruelle check `h <= max(χ, 0) + RUELLE_TOL`.
pub const RUELLE_TOL: f64 = 0.02;
/// Integration fails if singular cells carry more than this weight.
pub const MAX_EXCLUDED_WEIGHT: f64 = 0.01;

#[derive(Debug, Clone)]
pub struct UlamOperator {
    domain: Interval,
    cells: usize,
    /// Sparse rows, sorted by column.
    rows: Vec<Vec<(usize, f64)>>,
}

impl UlamOperator {
    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn cell(&self, i: usize) -> Interval {
        uniform_cell(&self.domain, self.cells, i)
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.rows[i]
            .binary_search_by_key(&j, |&(c, _)| c)
            .map(|k| self.rows[i][k].1)
            .unwrap_or(0.0)
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.rows
            .iter()
            .map(|r| r.iter().map(|&(_, v)| v).collect::<NeumaierSum>().value())
            .collect()
    }

    /// `M v`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.rows
            .par_iter()
            .map(|r| r.iter().map(|&(j, m)| m * v[j]).sum())
            .collect()
    }

    /// `Mᵀ u`, accumulated row by row in index order.
    pub fn apply_transpose(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cells];
        for (i, r) in self.rows.iter().enumerate() {
            for &(j, m) in r {
                out[j] += m * u[i];
            }
        }
        out
    }

    /// Whether the cell graph is strongly connected.
    pub fn is_irreducible(&self) -> bool {
        let mut reverse: Vec<Vec<usize>> = vec![Vec::new(); self.cells];
        for (i, r) in self.rows.iter().enumerate() {
            for &(j, m) in r {
                if m > 0.0 {
                    reverse[j].push(i);
                }
            }
        }
        let forward: Vec<Vec<usize>> = self
            .rows
            .iter()
            .map(|r| r.iter().filter(|e| e.1 > 0.0).map(|e| e.0).collect())
            .collect();
        reaches_all(&forward) && reaches_all(&reverse)
    }

    /// `i,j,value` triples, one per stored entry.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,j,value\n");
        for (i, r) in self.rows.iter().enumerate() {
            for &(j, v) in r {
                out.push_str(&format!("{i},{j},{v}\n"));
            }
        }
        out
    }
}

fn reaches_all(adj: &[Vec<usize>]) -> bool {
    if adj.is_empty() {
        return true;
    }
    let mut seen = vec![false; adj.len()];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    while let Some(i) = queue.pop_front() {
        for &j in &adj[i] {
            if !seen[j] {
                seen[j] = true;
                queue.push_back(j);
            }
        }
    }
    seen.into_iter().all(|s| s)
}

fn uniform_cell(domain: &Interval, m: usize, i: usize) -> Interval {
    let at = |k: usize| {
        if k == m {
            domain.hi
        } else {
            domain.lo + domain.len() * k as f64 / m as f64
        }
    };
    Interval::new(at(i), at(i + 1))
}

/// `e^{φ}` averaged at the midpoint of `piece`, halving once around a
/// singular midpoint.
fn piece_weight(phi: &Potential, piece: &Interval) -> Result<f64> {
    match phi.eval(piece.midpoint()) {
        Ok(v) => Ok(v.exp()),
        Err(Error::Singularity { .. }) => {
            let mid = piece.midpoint();
            let left = phi.eval(0.5 * (piece.lo + mid))?;
            let right = phi.eval(0.5 * (mid + piece.hi))?;
            Ok(0.5 * (left.exp() + right.exp()))
        }
        Err(e) => Err(e),
    }
}

pub fn ulam_operator(map: &IntervalMap, phi: &Potential, m: usize) -> Result<UlamOperator> {
    if m < 2 {
        return Err(Error::Precondition("Ulam operator needs at least 2 cells".into()));
    }
    let domain = map.domain();
    let h = domain.len() / m as f64;
    let rows = (0..m)
        .into_par_iter()
        .map(|i| {
            let ci = uniform_cell(&domain, m, i);
            let mut row: Vec<(usize, f64)> = Vec::new();
            for b in map.branches() {
                let Some(g) = b.preimage_interval(&ci) else {
                    continue;
                };
                if g.len() <= 0.0 {
                    continue;
                }
                let first = (((g.lo - domain.lo) / h).floor() as usize).min(m - 1);
                let last = (((g.hi - domain.lo) / h).ceil() as usize).clamp(first + 1, m);
                for j in first..last {
                    let cj = uniform_cell(&domain, m, j);
                    let Some(piece) = g.intersection(&cj) else {
                        continue;
                    };
                    if piece.len() <= 0.0 {
                        continue;
                    }
                    let w = piece_weight(phi, &piece)? * piece.len() / g.len();
                    row.push((j, w));
                }
            }
            row.sort_by_key(|e| e.0);
            let mut merged: Vec<(usize, f64)> = Vec::with_capacity(row.len());
            for (j, w) in row {
                match merged.last_mut() {
                    Some(last) if last.0 == j => last.1 += w,
                    _ => merged.push((j, w)),
                }
            }
            Ok(merged)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(UlamOperator {
        domain,
        cells: m,
        rows,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EigenParams {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for EigenParams {
    fn default() -> Self {
        EigenParams {
            tol: 1e-12,
            max_iter: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Eigendata {
    pub eigenvalue: f64,
    /// Right eigenvector, `Σ v = 1`.
    pub right: Vec<f64>,
    /// Left eigenvector, `Σ u v = 1`.
    pub left: Vec<f64>,
    pub iterations: usize,
    pub irreducible: bool,
}

/// Power iteration from the uniform vector, normalized in `ℓ¹` each step.
/// Stops when both the eigenvalue estimate and the vector move by less than
/// `tol`.
fn power_iterate<F>(step: F, m: usize, params: &EigenParams) -> Result<(f64, Vec<f64>, usize)>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let mut v = vec![1.0 / m as f64; m];
    let mut lambda = f64::NAN;
    let mut change = f64::INFINITY;
    for it in 1..=params.max_iter {
        let w = step(&v);
        let norm = w.iter().copied().collect::<NeumaierSum>().value();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::Convergence {
                iterations: it,
                last_change: change,
            });
        }
        let next: Vec<f64> = w.iter().map(|x| x / norm).collect();
        change = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).sum();
        let settled = (norm - lambda).abs() < params.tol;
        lambda = norm;
        v = next;
        if settled && change < params.tol {
            return Ok((lambda, v, it));
        }
    }
    Err(Error::Convergence {
        iterations: params.max_iter,
        last_change: change,
    })
}

pub fn leading_eigendata(op: &UlamOperator, params: &EigenParams) -> Result<Eigendata> {
    let m = op.cells();
    let (lambda, right, it_r) = power_iterate(|v| op.apply(v), m, params)?;
    let (_, mut left, it_l) = power_iterate(|u| op.apply_transpose(u), m, params)?;
    let pairing = left
        .iter()
        .zip(&right)
        .map(|(a, b)| a * b)
        .collect::<NeumaierSum>()
        .value();
    if !(pairing > 0.0) {
        return Err(Error::InvariantViolation(
            "left and right eigenvectors are orthogonal".into(),
        ));
    }
    left.iter_mut().for_each(|u| *u /= pairing);
    Ok(Eigendata {
        eigenvalue: lambda,
        right,
        left,
        iterations: it_r.max(it_l),
        irreducible: op.is_irreducible(),
    })
}

/// A probability vector over a list of cells. Degenerate cells are atoms.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasureEstimate {
    pub cells: Vec<Interval>,
    pub weights: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Integral {
    pub value: f64,
    /// Weight of cells dropped because the integrand was singular there.
    pub excluded_weight: f64,
}

impl MeasureEstimate {
    /// Normalizes `weights` over `cells`.
    pub fn new(cells: Vec<Interval>, weights: Vec<f64>) -> Result<Self> {
        if cells.len() != weights.len() || cells.is_empty() {
            return Err(Error::Construction("cells and weights must match and be nonempty".into()));
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::Construction("weights must be finite and nonnegative".into()));
        }
        let total = weights.iter().copied().collect::<NeumaierSum>().value();
        if !(total > 0.0) {
            return Err(Error::Construction("weights sum to zero".into()));
        }
        Ok(MeasureEstimate {
            cells,
            weights: weights.into_iter().map(|w| w / total).collect(),
        })
    }

    pub fn uniform(domain: Interval, m: usize) -> Self {
        MeasureEstimate {
            cells: (0..m).map(|i| uniform_cell(&domain, m, i)).collect(),
            weights: vec![1.0 / m as f64; m],
        }
    }

    pub fn dirac(x: f64) -> Self {
        MeasureEstimate {
            cells: vec![Interval::point(x)],
            weights: vec![1.0],
        }
    }

    /// `Σ weight_i g(mid_i)`. Cells where `g` reports a singularity are
    /// dropped and the rest renormalized.
    pub fn integrate<G>(&self, g: G) -> Result<Integral>
    where
        G: Fn(f64) -> Result<f64>,
    {
        let mut acc = NeumaierSum::new();
        let mut excluded = NeumaierSum::new();
        for (c, &w) in self.cells.iter().zip(&self.weights) {
            match g(c.midpoint()) {
                Ok(v) => acc.add(w * v),
                Err(Error::Singularity { .. }) => excluded.add(w),
                Err(e) => return Err(e),
            }
        }
        let excluded = excluded.value();
        if excluded > MAX_EXCLUDED_WEIGHT {
            return Err(Error::Singularity {
                x: f64::NAN,
                radius: SINGULARITY_RADIUS,
            });
        }
        Ok(Integral {
            value: acc.value() / (1.0 - excluded),
            excluded_weight: excluded,
        })
    }

    /// Mass of the cells contained in `iv`, splitting partial overlaps by length.
    pub fn mass_in(&self, iv: &Interval) -> f64 {
        self.cells
            .iter()
            .zip(&self.weights)
            .map(|(c, &w)| {
                if c.is_degenerate() {
                    if iv.contains(c.lo) {
                        w
                    } else {
                        0.0
                    }
                } else {
                    c.intersection(iv).map_or(0.0, |p| w * p.len() / c.len())
                }
            })
            .collect::<NeumaierSum>()
            .value()
    }

    /// CSV rows `cell_lo,cell_hi,weight`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("cell_lo,cell_hi,weight\n");
        for (c, w) in self.cells.iter().zip(&self.weights) {
            out.push_str(&format!("{},{},{}\n", c.lo, c.hi, w));
        }
        out
    }
}

/// Gibbs weights `u_i v_i` of the leading eigenpair.
pub fn equilibrium_estimate(op: &UlamOperator, eig: &Eigendata) -> Result<MeasureEstimate> {
    let weights: Vec<f64> = eig.left.iter().zip(&eig.right).map(|(u, v)| u * v).collect();
    MeasureEstimate::new((0..op.cells()).map(|i| op.cell(i)).collect(), weights)
}

/// `log|f'|`, singular within [`SINGULARITY_RADIUS`] of a critical point.
pub fn log_abs_derivative(map: &IntervalMap) -> impl Fn(f64) -> Result<f64> + '_ {
    move |x| {
        let d = map.derivative(x)?;
        if map.distance_to_critical(x) <= SINGULARITY_RADIUS || d == 0.0 {
            Err(Error::Singularity {
                x,
                radius: SINGULARITY_RADIUS,
            })
        } else {
            Ok(d.abs().ln())
        }
    }
}

pub fn ruelle_ok(entropy: f64, lyapunov: f64) -> bool {
    entropy <= lyapunov.max(0.0) + RUELLE_TOL
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EquilibriumFlags {
    pub entropy_positive: bool,
    pub lyapunov_positive: bool,
    pub ruelle_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquilibriumReport {
    pub pressure_used: f64,
    pub pressure_ulam: f64,
    /// `pressure_used - int_phi`.
    pub entropy: f64,
    /// `∫ log|f'| dμ`.
    pub lyapunov: f64,
    pub int_phi: f64,
    pub excluded_weight: f64,
    pub flags: EquilibriumFlags,
}

impl EquilibriumReport {
    pub fn from_measure(
        map: &IntervalMap,
        phi: &Potential,
        measure: &MeasureEstimate,
        pressure_used: f64,
        pressure_ulam: f64,
    ) -> Result<Self> {
        let int_phi = measure.integrate(|x| phi.eval(x))?;
        let lyap = measure.integrate(log_abs_derivative(map))?;
        let entropy = pressure_used - int_phi.value;
        Ok(EquilibriumReport {
            pressure_used,
            pressure_ulam,
            entropy,
            lyapunov: lyap.value,
            int_phi: int_phi.value,
            excluded_weight: lyap.excluded_weight.max(int_phi.excluded_weight),
            flags: EquilibriumFlags {
                entropy_positive: entropy > 0.0,
                lyapunov_positive: lyap.value > 0.0,
                ruelle_ok: ruelle_ok(entropy, lyap.value),
            },
        })
    }
}

/// Builds the Ulam operator for `φ`, its equilibrium estimate and the
/// entropy/Lyapunov report, with entropy taken from `pressure_used`.
pub fn equilibrium_with_measure(
    map: &IntervalMap,
    phi: &Potential,
    m: usize,
    pressure_used: f64,
) -> Result<(EquilibriumReport, MeasureEstimate)> {
    let op = ulam_operator(map, phi, m)?;
    let eig = leading_eigendata(&op, &EigenParams::default())?;
    let measure = equilibrium_estimate(&op, &eig)?;
    let report =
        EquilibriumReport::from_measure(map, phi, &measure, pressure_used, eig.eigenvalue.ln())?;
    Ok((report, measure))
}

pub fn equilibrium_report(
    map: &IntervalMap,
    phi: &Potential,
    m: usize,
    pressure_used: f64,
) -> Result<EquilibriumReport> {
    equilibrium_with_measure(map, phi, m, pressure_used).map(|(r, _)| r)
}

#[cfg(test)]
mod tests {
    use super::*;

    const LN2: f64 = std::f64::consts::LN_2;

    #[test]
    fn two_cell_matrix() {
        let c2 = IntervalMap::chebyshev2();
        let op = ulam_operator(&c2, &Potential::zero(), 2).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((op.entry(i, j) - 1.0).abs() < 1e-15);
            }
        }
        let op = ulam_operator(&c2, &Potential::Constant(0.3), 2).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((op.entry(i, j) - 0.3f64.exp()).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn row_sums_count_branches() {
        let c2 = IntervalMap::chebyshev2();
        let op = ulam_operator(&c2, &Potential::zero(), 4).unwrap();
        for s in op.row_sums() {
            assert!((s - 2.0).abs() < 1e-12);
        }
        let c3 = IntervalMap::chebyshev3();
        let op = ulam_operator(&c3, &Potential::zero(), 64).unwrap();
        for s in op.row_sums() {
            assert!((s - 3.0).abs() < 1e-12);
        }
        assert!(op.nnz() <= 3 * 64 + 2 * 64);
        assert!(op.to_csv().starts_with("i,j,value\n"));
    }

    #[test]
    fn rank_one_eigendata() {
        let c2 = IntervalMap::chebyshev2();
        let op = ulam_operator(&c2, &Potential::zero(), 2).unwrap();
        let eig = leading_eigendata(&op, &EigenParams::default()).unwrap();
        assert!((eig.eigenvalue - 2.0).abs() < 1e-14);
        assert!((eig.right[0] - 0.5).abs() < 1e-15 && (eig.right[1] - 0.5).abs() < 1e-15);
        assert!((eig.left[0] - 1.0).abs() < 1e-14 && (eig.left[1] - 1.0).abs() < 1e-14);
        assert!(eig.irreducible);

        let op = ulam_operator(&c2, &Potential::Constant(0.3), 2).unwrap();
        let eig = leading_eigendata(&op, &EigenParams::default()).unwrap();
        assert!((eig.eigenvalue - 2.0 * 0.3f64.exp()).abs() < 1e-13);
        let mu = equilibrium_estimate(&op, &eig).unwrap();
        assert!((mu.weights[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn geometric_potential_is_allowed() {
        let c2 = std::sync::Arc::new(IntervalMap::chebyshev2());
        let g = Potential::geometric(Potential::zero(), 1.0, c2.clone()).unwrap();
        let op = ulam_operator(&c2, &g, 64).unwrap();
        assert!(op.nnz() > 0);
    }

    #[test]
    fn convergence_failure_is_reported() {
        let c2 = IntervalMap::chebyshev2();
        let op = ulam_operator(&c2, &Potential::cosine(0.3, c2.domain()), 256).unwrap();
        let res = leading_eigendata(&op, &EigenParams { tol: 1e-14, max_iter: 2 });
        assert!(matches!(res, Err(Error::Convergence { .. })));
    }

    #[test]
    fn integrate_examples() {
        let mu = MeasureEstimate::uniform(Interval::new(0.0, 1.0), 2);
        assert_eq!(mu.integrate(Ok).unwrap().value, 0.5);
        let mu = MeasureEstimate::uniform(Interval::new(0.0, 1.0), 17);
        assert!((mu.integrate(|_| Ok(2.5)).unwrap().value - 2.5).abs() < 1e-15);
        let d = MeasureEstimate::dirac(0.75);
        assert_eq!(d.integrate(|x| Ok(x * x)).unwrap().value, 0.5625);
    }

    #[test]
    fn integrate_excludes_singular_cells() {
        let c2 = IntervalMap::chebyshev2();
        // Cell centered exactly on the critical point.
        let mu = MeasureEstimate::uniform(Interval::new(0.0, 1.0), 201);
        let i = mu.integrate(log_abs_derivative(&c2)).unwrap();
        assert!((i.excluded_weight - 1.0 / 201.0).abs() < 1e-15);
        let heavy = MeasureEstimate::dirac(0.5);
        assert!(matches!(
            heavy.integrate(log_abs_derivative(&c2)),
            Err(Error::Singularity { .. })
        ));
    }

    #[test]
    fn ruelle_examples() {
        assert!(!ruelle_ok(0.8, 0.69));
        assert!(ruelle_ok(0.69, 0.69));
        assert!(!ruelle_ok(0.5, -0.1));
    }

    #[test]
    fn measure_constructor_validates() {
        let cells = vec![Interval::new(0.0, 0.5), Interval::new(0.5, 1.0)];
        assert!(MeasureEstimate::new(cells.clone(), vec![1.0]).is_err());
        assert!(MeasureEstimate::new(cells.clone(), vec![-1.0, 2.0]).is_err());
        assert!(MeasureEstimate::new(cells.clone(), vec![0.0, 0.0]).is_err());
        let mu = MeasureEstimate::new(cells, vec![1.0, 3.0]).unwrap();
        assert_eq!(mu.weights, vec![0.25, 0.75]);
        assert_eq!(mu.mass_in(&Interval::new(0.0, 0.25)), 0.125);
    }

    #[test]
    fn equilibrium_report_small_grid() {
        let c2 = IntervalMap::chebyshev2();
        let r = equilibrium_report(&c2, &Potential::zero(), 512, LN2).unwrap();
        assert!((r.pressure_ulam - LN2).abs() < 1e-9);
        assert!((r.entropy - LN2).abs() < 1e-15);
        assert!((r.lyapunov - LN2).abs() < 0.05);
        assert!(r.flags.entropy_positive && r.flags.lyapunov_positive && r.flags.ruelle_ok);
    }
}
