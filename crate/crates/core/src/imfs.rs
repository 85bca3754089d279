//! Iterated multivalued function systems generated by an interval map.
//!
//! An IMFS is a base interval `B0` together with branches `(m_l, W_l)`:
//! each window `W_l ⊆ B0` is a pull-back of `B0` by `f^{m_l}`, and the branch
//! acts on sets by `φ_l(A) = f^{-m_l}(A) ∩ W_l`. A word `l1 l2 ... lk` acts
//! as `φ_{l1} ∘ ... ∘ φ_{lk}`, rightmost letter first, and has time
//! `m_{l1} + ... + m_{lk}`.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::interval_map::{IntervalMap, DEDUP_RADIUS};
use crate::potential::{birkhoff_sum, Potential};
use crate::pressure::tree_pressure_series;
use crate::transfer::MeasureEstimate;

/// Word images farther apart than this are disjoint.
pub const DISJOINT_RADIUS: f64 = 1e-8;
/// Word images within this Hausdorff distance coincide.
pub const COINCIDE_RADIUS: f64 = 1e-10;
/// Strict verdicts require a margin above this.
pub const STRICT_MARGIN: f64 = 1e-3;

const WINDOW_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ImfsBranch {
    pub time: usize,
    pub window: Interval,
}

#[derive(Debug, Clone)]
pub struct Imfs {
    map: Arc<IntervalMap>,
    base: Interval,
    branches: Vec<ImfsBranch>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Word {
    letters: Vec<usize>,
    time: usize,
}

impl Word {
    pub fn new(letters: Vec<usize>, imfs: &Imfs) -> Result<Self> {
        if letters.is_empty() {
            return Err(Error::Precondition("words are nonempty".into()));
        }
        let mut time = 0;
        for &l in &letters {
            time += imfs
                .branches
                .get(l)
                .ok_or_else(|| Error::Precondition(format!("no branch {l}")))?
                .time;
        }
        Ok(Word { letters, time })
    }

    pub fn letters(&self) -> &[usize] {
        &self.letters
    }

    pub fn time(&self) -> usize {
        self.time
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    /// `self · other`.
    pub fn concat(&self, other: &Word) -> Word {
        let mut letters = self.letters.clone();
        letters.extend_from_slice(&other.letters);
        Word {
            letters,
            time: self.time + other.time,
        }
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.letters.iter().map(|l| l.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Relation between two finite point sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Relation {
    Coincide,
    Disjoint,
    /// Intersect without coinciding.
    Overlap,
}

fn relate(a: &[f64], b: &[f64]) -> Result<Relation> {
    let nearest = |x: f64, set: &[f64]| set.iter().map(|y| (x - y).abs()).fold(f64::INFINITY, f64::min);
    let min_dist = a.iter().map(|&x| nearest(x, b)).fold(f64::INFINITY, f64::min);
    if min_dist > DISJOINT_RADIUS {
        return Ok(Relation::Disjoint);
    }
    if min_dist > COINCIDE_RADIUS {
        return Err(Error::Ambiguous(format!(
            "word images are {min_dist:e} apart, between the coincide and disjoint thresholds"
        )));
    }
    let hausdorff = a
        .iter()
        .map(|&x| nearest(x, b))
        .chain(b.iter().map(|&y| nearest(y, a)))
        .fold(0.0, f64::max);
    Ok(if hausdorff < COINCIDE_RADIUS {
        Relation::Coincide
    } else {
        Relation::Overlap
    })
}

/// All words of one time with their images of the base point.
#[derive(Debug, Clone)]
pub struct TimeLevel {
    pub time: usize,
    pub words: Vec<(Word, Vec<f64>)>,
}

impl TimeLevel {
    /// Number of distinct points in the union of the word images.
    pub fn distinct_points(&self) -> usize {
        let mut pts: Vec<f64> = self.words.iter().flat_map(|(_, img)| img.iter().copied()).collect();
        pts.sort_by(f64::total_cmp);
        pts.dedup_by(|a, b| (*a - *b).abs() <= DEDUP_RADIUS);
        pts.len()
    }

    fn relations(&self) -> Result<Vec<Relation>> {
        let n = self.words.len();
        (0..n)
            .into_par_iter()
            .flat_map_iter(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| relate(&self.words[i].1, &self.words[j].1))
            .collect()
    }
}

impl Imfs {
    /// Validates each branch: `W_l ⊆ B0` and `f^{m_l}(W_l) = B0`.
    pub fn new(map: Arc<IntervalMap>, base: Interval, branches: Vec<ImfsBranch>) -> Result<Self> {
        let dom = map.domain();
        if !dom.contains_interval(&base, WINDOW_TOL) || base.is_degenerate() {
            return Err(Error::Construction(format!("base {base} is not a subinterval of {dom}")));
        }
        if branches.is_empty() {
            return Err(Error::Construction("an IMFS needs at least one branch".into()));
        }
        for (l, b) in branches.iter().enumerate() {
            if b.time == 0 {
                return Err(Error::Construction(format!("branch {l} has time 0")));
            }
            if !base.contains_interval(&b.window, WINDOW_TOL) {
                return Err(Error::Construction(format!(
                    "window {} of branch {l} is not inside the base {base}",
                    b.window
                )));
            }
            let img = map.image_iterate(&b.window, b.time);
            if !img.approx_eq(&base, WINDOW_TOL) {
                return Err(Error::Construction(format!(
                    "branch {l}: f^{} maps {} onto {img}, not onto {base}",
                    b.time, b.window
                )));
            }
        }
        Ok(Imfs {
            map,
            base,
            branches,
        })
    }

    /// One time-1 branch per monotone branch of `f` whose pull-back of `B0`
    /// lies inside `B0` and covers it.
    pub fn full_shift(map: Arc<IntervalMap>, base: Interval) -> Result<Self> {
        let mut branches = Vec::new();
        for b in map.branches() {
            if !b.range().contains_interval(&base, WINDOW_TOL) {
                continue;
            }
            if let Some(w) = b.preimage_interval(&base) {
                if base.contains_interval(&w, WINDOW_TOL) {
                    branches.push(ImfsBranch { time: 1, window: w });
                }
            }
        }
        if branches.is_empty() {
            return Err(Error::Construction(format!(
                "no depth-1 pull-back of {base} lies inside it"
            )));
        }
        Imfs::new(map, base, branches)
    }

    /// Reads the plain-text description: a header `lo hi` for the base,
    /// then one `m_l w_lo w_hi` line per branch. `#` starts a comment.
    pub fn parse(text: &str, map: Arc<IntervalMap>) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty());
        let number = |tok: &str| {
            tok.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Error::parse(tok, "expected a number"))
        };
        let header = lines
            .next()
            .ok_or_else(|| Error::parse("", "missing base interval header"))?;
        let base: Vec<&str> = header.split_whitespace().collect();
        if base.len() != 2 {
            return Err(Error::parse(header, "header must be `lo hi`"));
        }
        let base = Interval::spanning(number(base[0])?, number(base[1])?);
        let mut branches = Vec::new();
        for line in lines {
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != 3 {
                return Err(Error::parse(line, "branch lines are `m w_lo w_hi`"));
            }
            let time = toks[0]
                .parse::<usize>()
                .map_err(|_| Error::parse(toks[0], "expected a positive integer time"))?;
            branches.push(ImfsBranch {
                time,
                window: Interval::spanning(number(toks[1])?, number(toks[2])?),
            });
        }
        Imfs::new(map, base, branches)
    }

    pub fn map(&self) -> &IntervalMap {
        &self.map
    }

    pub fn base(&self) -> Interval {
        self.base
    }

    pub fn branches(&self) -> &[ImfsBranch] {
        &self.branches
    }

    /// `φ_l(A) = f^{-m_l}(A) ∩ W_l`.
    pub fn apply_branch(&self, l: usize, set: &[f64]) -> Result<Vec<f64>> {
        let b = self.branches[l];
        let mut out = Vec::new();
        for &x in set {
            out.extend(self.map.preimages_within(x, b.time, &b.window)?);
        }
        out.sort_by(f64::total_cmp);
        out.dedup_by(|a, b| (*a - *b).abs() <= DEDUP_RADIUS);
        Ok(out)
    }

    pub fn word_image(&self, word: &Word, x0: f64) -> Result<Vec<f64>> {
        if !self.base.contains_with(x0, WINDOW_TOL) {
            return Err(Error::Precondition(format!("{x0} is not in the base {}", self.base)));
        }
        let mut set = vec![x0];
        for &l in word.letters.iter().rev() {
            set = self.apply_branch(l, &set)?;
            if set.is_empty() {
                return Err(Error::InvariantViolation(format!(
                    "branch {l} sends a point of the base to the empty set"
                )));
            }
        }
        Ok(set)
    }

    /// Words grouped by time `1..=max_time`, each with its image of `x0`.
    /// Level `t` is built by prefixing a letter to the words of time `t - m_l`.
    pub fn enumerate(&self, x0: f64, max_time: usize) -> Result<Vec<TimeLevel>> {
        if !self.base.contains_with(x0, WINDOW_TOL) {
            return Err(Error::Precondition(format!("{x0} is not in the base {}", self.base)));
        }
        let budget = self.map.leaf_budget();
        let mut total: u64 = 0;
        // levels[t] holds words of time t; levels[0] is the empty word.
        let mut levels: Vec<Vec<(Vec<usize>, Vec<f64>)>> = vec![vec![(Vec::new(), vec![x0])]];
        for t in 1..=max_time {
            let mut level = Vec::new();
            for (l, b) in self.branches.iter().enumerate() {
                if b.time > t {
                    continue;
                }
                for (letters, img) in &levels[t - b.time] {
                    total += 1;
                    if total > budget {
                        return Err(Error::Budget {
                            what: "IMFS word enumeration",
                            needed: total as f64,
                            budget,
                        });
                    }
                    let image = self.apply_branch(l, img)?;
                    if image.is_empty() {
                        return Err(Error::InvariantViolation(format!(
                            "branch {l} sends a point of the base to the empty set"
                        )));
                    }
                    let mut w = Vec::with_capacity(letters.len() + 1);
                    w.push(l);
                    w.extend_from_slice(letters);
                    level.push((w, image));
                }
            }
            levels.push(level);
        }
        Ok(levels
            .into_iter()
            .enumerate()
            .skip(1)
            .map(|(time, words)| TimeLevel {
                time,
                words: words
                    .into_iter()
                    .map(|(letters, img)| (Word { letters, time }, img))
                    .collect(),
            })
            .collect())
    }

    /// Distinct equal-time word images either coincide or are disjoint.
    pub fn star_property_check(&self, x0: f64, max_time: usize) -> Result<bool> {
        for level in self.enumerate(x0, max_time)? {
            if level.relations()?.contains(&Relation::Overlap) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Distinct equal-time word images are pairwise disjoint.
    pub fn freeness_check(&self, x0: f64, max_time: usize) -> Result<bool> {
        for level in self.enumerate(x0, max_time)? {
            if level.relations()?.iter().any(|r| *r != Relation::Disjoint) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Checks `S_{m_l}(ψ)(y) >= m_l ∫ψ dν - D` at sampled `y` in every window.
    pub fn branch_bound_check(
        &self,
        psi: &Potential,
        nu: &MeasureEstimate,
        slack_d: f64,
        samples: usize,
    ) -> Result<BranchBoundReport> {
        if !(slack_d >= 0.0) {
            return Err(Error::Precondition("D must be nonnegative".into()));
        }
        let integral = nu.integrate(|x| psi.eval(x))?.value;
        let mut skipped = 0;
        let mut worst = f64::INFINITY;
        let mut checked = 0;
        for b in &self.branches {
            let w = b.window;
            let pts = std::iter::once(w.lo)
                .chain((0..samples).map(|k| w.lo + w.len() * (k as f64 + 0.5) / samples as f64))
                .chain(std::iter::once(w.hi));
            let threshold = b.time as f64 * integral - slack_d;
            for y in pts {
                match birkhoff_sum(&self.map, psi, y, b.time) {
                    Ok(s) => {
                        checked += 1;
                        worst = worst.min(s - threshold);
                    }
                    Err(Error::Singularity { .. }) => skipped += 1,
                    Err(e) => return Err(e),
                }
            }
        }
        Ok(BranchBoundReport {
            holds: worst >= 0.0,
            integral,
            worst_slack: worst,
            checked,
            skipped,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BranchBoundReport {
    pub holds: bool,
    /// `∫ψ dν`.
    pub integral: f64,
    /// Minimum of `S_{m_l}(ψ)(y) - (m_l ∫ψ dν - D)` over the samples.
    pub worst_slack: f64,
    pub checked: usize,
    /// Samples dropped at singularities of `ψ`.
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KeyLemmaEntry {
    pub x0: f64,
    pub tail_max: f64,
    pub integral: f64,
    pub margin: f64,
    pub strict: bool,
    pub warnings: Vec<String>,
}

/// Compares the tree-pressure growth rate at each base point with `∫φ dν`.
///
/// The generating series `Σ_n (Σ_{y ∈ f^{-n}(x0)} e^{S_n φ(y)}) s^n` has
/// radius of convergence `exp(-limsup p_n)`, so the radius being below
/// `exp(-∫φ dν)` is the same statement as `limsup p_n > ∫φ dν`; the check
/// uses the growth-rate form with the tail maximum as the limsup estimate.
pub fn key_lemma_check(
    map: &IntervalMap,
    phi: &Potential,
    nu: &MeasureEstimate,
    base_points: &[f64],
    n_max: usize,
) -> Result<Vec<KeyLemmaEntry>> {
    let integral = nu.integrate(|x| phi.eval(x))?.value;
    base_points
        .iter()
        .map(|&x0| {
            let series = tree_pressure_series(map, phi, x0, n_max)?;
            let margin = series.tail_max - integral;
            Ok(KeyLemmaEntry {
                x0,
                tail_max: series.tail_max,
                integral,
                margin,
                strict: margin > STRICT_MARGIN,
                warnings: series.warnings,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const L: usize = 0;
    const R: usize = 1;

    fn cheb2_shift() -> Imfs {
        let map = Arc::new(IntervalMap::chebyshev2());
        Imfs::full_shift(map, Interval::new(0.0, 1.0)).unwrap()
    }

    #[test]
    fn full_shift_construction() {
        let imfs = cheb2_shift();
        assert_eq!(imfs.branches().len(), 2);
        assert!(imfs.branches()[0].window.approx_eq(&Interval::new(0.0, 0.5), 1e-12));
        assert!(imfs.branches()[1].window.approx_eq(&Interval::new(0.5, 1.0), 1e-12));
        assert!(imfs.branches().iter().all(|b| b.time == 1));

        let c3 = Arc::new(IntervalMap::chebyshev3());
        let imfs = Imfs::full_shift(c3, Interval::new(-1.0, 1.0)).unwrap();
        assert_eq!(imfs.branches().len(), 3);

        let c2 = Arc::new(IntervalMap::chebyshev2());
        assert!(matches!(
            Imfs::full_shift(c2, Interval::new(0.2, 0.4)),
            Err(Error::Construction(_))
        ));
    }

    #[test]
    fn word_image_examples() {
        let imfs = cheb2_shift();
        let w = Word::new(vec![R], &imfs).unwrap();
        let img = imfs.word_image(&w, 0.75).unwrap();
        assert_eq!(img.len(), 1);
        assert!((img[0] - 0.75).abs() < 1e-14);

        let w = Word::new(vec![L, R], &imfs).unwrap();
        let img = imfs.word_image(&w, 0.75).unwrap();
        assert_eq!(img.len(), 1);
        assert!((img[0] - 0.25).abs() < 1e-14);

        let w = Word::new(vec![L], &imfs).unwrap();
        assert_eq!(imfs.word_image(&w, 1.0).unwrap(), vec![0.5]);

        assert!(Word::new(vec![], &imfs).is_err());
        assert!(Word::new(vec![2], &imfs).is_err());
        assert!(imfs.word_image(&w, 1.5).is_err());
    }

    #[test]
    fn word_time_is_additive() {
        let map = Arc::new(IntervalMap::chebyshev2());
        let full = Interval::new(0.0, 1.0);
        // f^2 maps the whole interval onto itself, so [0,1] is a time-2 window.
        let w2 = full;
        let imfs = Imfs::new(
            map.clone(),
            full,
            vec![
                ImfsBranch { time: 1, window: Interval::new(0.5, 1.0) },
                ImfsBranch { time: 2, window: w2 },
            ],
        )
        .unwrap();
        let u = Word::new(vec![0, 1, 1], &imfs).unwrap();
        let v = Word::new(vec![1, 0], &imfs).unwrap();
        assert_eq!(u.time(), 5);
        assert_eq!(u.concat(&v).time(), u.time() + v.time());
        assert_eq!(u.concat(&v).len(), 5);
    }

    #[test]
    fn rejects_bad_branches() {
        let map = Arc::new(IntervalMap::chebyshev2());
        let full = Interval::new(0.0, 1.0);
        let bad = Imfs::new(
            map.clone(),
            full,
            vec![ImfsBranch { time: 1, window: Interval::new(0.0, 0.3) }],
        );
        assert!(matches!(bad, Err(Error::Construction(_))));
        let zero = Imfs::new(map, full, vec![ImfsBranch { time: 0, window: full }]);
        assert!(zero.is_err());
    }

    #[test]
    fn star_and_freeness_examples() {
        let imfs = cheb2_shift();
        assert!(imfs.star_property_check(0.75, 8).unwrap());
        assert!(imfs.star_property_check(1.0, 4).unwrap());
        assert!(imfs.freeness_check(0.75, 10).unwrap());
        assert!(!imfs.freeness_check(1.0, 2).unwrap());

        let map = Arc::new(IntervalMap::chebyshev2());
        let single = Imfs::new(
            map,
            Interval::new(0.0, 1.0),
            vec![ImfsBranch { time: 1, window: Interval::new(0.0, 0.5) }],
        )
        .unwrap();
        assert!(single.star_property_check(0.3, 6).unwrap());
        assert!(single.freeness_check(0.3, 6).unwrap());
    }

    #[test]
    fn image_counts_match_preimage_counts() {
        let imfs = cheb2_shift();
        let levels = imfs.enumerate(0.3, 8).unwrap();
        for level in &levels {
            let pre = imfs.map().preimages(0.3, level.time).unwrap().points.len();
            assert_eq!(level.distinct_points(), pre);
            assert_eq!(pre, 1 << level.time);
        }
    }

    #[test]
    fn relation_dead_zone_is_an_error() {
        assert_eq!(relate(&[0.1], &[0.2]).unwrap(), Relation::Disjoint);
        assert_eq!(relate(&[0.1], &[0.1 + 1e-12]).unwrap(), Relation::Coincide);
        assert_eq!(relate(&[0.1], &[0.1, 0.4]).unwrap(), Relation::Overlap);
        assert!(matches!(relate(&[0.1], &[0.1 + 1e-9]), Err(Error::Ambiguous(_))));
    }

    #[test]
    fn branch_bound_examples() {
        let imfs = cheb2_shift();
        let any = MeasureEstimate::uniform(Interval::new(0.0, 1.0), 8);
        assert!(imfs.branch_bound_check(&Potential::zero(), &any, 0.0, 50).unwrap().holds);

        let id = Potential::polynomial(vec![0.0, 1.0], Interval::new(0.0, 1.0));
        let delta = MeasureEstimate::dirac(0.75);
        let r = imfs.branch_bound_check(&id, &delta, 0.8, 50).unwrap();
        assert!(r.holds);
        assert!((r.worst_slack - 0.05).abs() < 1e-12);
        let r = imfs.branch_bound_check(&id, &delta, 0.5, 50).unwrap();
        assert!(!r.holds);
        assert!((r.worst_slack + 0.25).abs() < 1e-12);
    }

    #[test]
    fn branch_bound_skips_singular_samples() {
        let map = Arc::new(IntervalMap::chebyshev2());
        let imfs = Imfs::full_shift(map.clone(), Interval::new(0.0, 1.0)).unwrap();
        let g = Potential::geometric(Potential::zero(), 1.0, map).unwrap();
        let r = imfs
            .branch_bound_check(&g, &MeasureEstimate::dirac(0.25), 10.0, 10)
            .unwrap();
        // Both windows end at the critical point 1/2.
        assert_eq!(r.skipped, 2);
        assert!(r.holds);
    }

    #[test]
    fn key_lemma_examples() {
        let c2 = IntervalMap::chebyshev2();
        let nu = MeasureEstimate::uniform(c2.domain(), 16);
        let ln2 = std::f64::consts::LN_2;
        let r = key_lemma_check(&c2, &Potential::zero(), &nu, &[0.3, 0.75], 10).unwrap();
        for e in &r {
            assert!((e.margin - ln2).abs() < 1e-12 && e.strict);
        }
        let r = key_lemma_check(&c2, &Potential::Constant(1.3), &nu, &[0.75], 10).unwrap();
        assert!((r[0].margin - ln2).abs() < 1e-12);
    }

    #[test]
    fn parse_description() {
        let map = Arc::new(IntervalMap::chebyshev2());
        let text = "# full shift\n0 1\n1 0 0.5\n1 0.5 1 # right\n";
        let imfs = Imfs::parse(text, map.clone()).unwrap();
        assert_eq!(imfs.branches().len(), 2);
        assert!(imfs.freeness_check(0.75, 4).unwrap());
        assert!(Imfs::parse("", map.clone()).is_err());
        assert!(Imfs::parse("0 1\n1 0\n", map.clone()).is_err());
        assert!(Imfs::parse("0 1\nx 0 0.5\n", map).is_err());
    }
}
