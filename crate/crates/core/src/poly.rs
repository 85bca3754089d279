//! Real polynomials in the monomial basis and a sign-change root finder.

use crate::interval::Interval;

/// Coefficients in ascending order: `c0 + c1 x + c2 x^2 + ...`.
#[derive(Debug, Clone, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.len() > 1 && coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Polynomial { coeffs }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0.0)
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> Polynomial {
        if self.coeffs.len() <= 1 {
            return Polynomial::new(vec![0.0]);
        }
        Polynomial::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, &c)| k as f64 * c)
                .collect(),
        )
    }

    /// Bound on the rounding scale of evaluations on `iv`.
    pub fn magnitude_on(&self, iv: &Interval) -> f64 {
        let r = iv.lo.abs().max(iv.hi.abs()).max(1.0);
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| c.abs() * r.powi(k as i32))
            .sum()
    }

    /// Distinct real roots in `iv`, ascending.
    ///
    /// Works recursively: the roots of the derivative cut `iv` into monotone
    /// pieces, each holding at most one simple root found by bisection.
    /// Roots of even multiplicity are picked up at the derivative's roots.
    pub fn roots_in(&self, iv: &Interval) -> Vec<f64> {
        if self.is_zero() || self.degree() == 0 {
            return Vec::new();
        }
        let zero_tol = 1e-12 * self.magnitude_on(iv);
        if self.degree() == 1 {
            let r = -self.coeffs[0] / self.coeffs[1];
            return if iv.contains(r) { vec![r] } else { Vec::new() };
        }

        let mut knots = vec![iv.lo];
        knots.extend(self.derivative().roots_in(iv));
        knots.push(iv.hi);
        knots.dedup();

        let mut roots = Vec::new();
        for w in knots.windows(2) {
            let (p, q) = (w[0], w[1]);
            let (fp, fq) = (self.eval(p), self.eval(q));
            if fp.abs() <= zero_tol {
                roots.push(p);
            }
            if fp * fq < 0.0 && fp.abs() > zero_tol && fq.abs() > zero_tol {
                roots.push(bisect(|x| self.eval(x), p, q, 0.0));
            }
        }
        if let Some(&last) = knots.last() {
            if self.eval(last).abs() <= zero_tol {
                roots.push(last);
            }
        }
        roots.sort_by(f64::total_cmp);
        roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-10);
        roots
    }

    /// Multiplicity of `x` as a root; 0 when `x` is not a root.
    pub fn root_multiplicity(&self, x: f64, iv: &Interval) -> usize {
        let mut p = self.clone();
        let mut k = 0;
        while !p.is_zero() && p.eval(x).abs() <= 1e-9 * p.magnitude_on(iv) {
            k += 1;
            p = p.derivative();
        }
        k
    }

    /// Supremum of `|p|` over `iv`, attained at an endpoint or a critical point.
    pub fn sup_abs_on(&self, iv: &Interval) -> f64 {
        let mut best = self.eval(iv.lo).abs().max(self.eval(iv.hi).abs());
        for r in self.derivative().roots_in(iv) {
            best = best.max(self.eval(r).abs());
        }
        best
    }
}

/// Bisection for a sign change of `f` on `[lo, hi]`, stopping once the
/// bracket is narrower than `width` or can no longer be split.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, width: f64) -> f64 {
    let mut f_lo = f(lo);
    if f_lo == 0.0 {
        return lo;
    }
    if f(hi) == 0.0 {
        return hi;
    }
    for _ in 0..200 {
        if hi - lo <= width {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return mid;
        }
        if (f_mid < 0.0) == (f_lo < 0.0) {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn horner_and_derivative() {
        let p = Polynomial::new(vec![0.0, 4.0, -4.0]);
        assert_eq!(p.eval(0.3), 4.0 * 0.3 * 0.7);
        assert_eq!(p.derivative().coeffs(), &[4.0, -8.0]);
        assert_eq!(Polynomial::new(vec![1.0, 0.0, 0.0]).degree(), 0);
    }

    #[test]
    fn roots_of_cubic() {
        // 4x^3 - 4x = 4x(x-1)(x+1)
        let p = Polynomial::new(vec![0.0, -4.0, 0.0, 4.0]);
        let roots = p.roots_in(&Interval::new(-1.0, 1.0));
        assert_eq!(roots.len(), 3);
        for (r, e) in roots.iter().zip([-1.0, 0.0, 1.0]) {
            assert!((r - e).abs() < 1e-13, "{r} vs {e}");
        }
    }

    #[test]
    fn double_root_is_found_once() {
        // (2x - 1)^2
        let p = Polynomial::new(vec![1.0, -4.0, 4.0]);
        let roots = p.roots_in(&Interval::new(0.0, 1.0));
        assert_eq!(roots.len(), 1);
        assert!((roots[0] - 0.5).abs() < 1e-13);
        assert_eq!(p.root_multiplicity(0.5, &Interval::new(0.0, 1.0)), 2);
    }

    #[test]
    fn sup_abs_of_derivative() {
        let dp = Polynomial::new(vec![4.0, -8.0]);
        assert_eq!(dp.sup_abs_on(&Interval::new(0.0, 1.0)), 4.0);
        let cheb3_d = Polynomial::new(vec![-3.0, 0.0, 12.0]);
        assert_eq!(cheb3_d.sup_abs_on(&Interval::new(-1.0, 1.0)), 9.0);
    }
}
