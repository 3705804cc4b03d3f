//! Parameters `(q, ω)`, the jump map `t ↦ qt + ω` and truncated q,ω-lattices.
//!
//! Everything in the calculus is anchored at the fixed point `ω₀ = ω/(1−q)` of
//! the jump map. A lattice `[a,b]_{q,ω}` is the union of the two orbits
//! `qⁿa + [n]` and `qⁿb + [n]` together with `ω₀`; only the first `depth + 1`
//! points of each orbit are enumerated.

use serde::Serialize;

use crate::error::{Error, Result};

/// Relative width of the band around `ω₀` inside which a value is treated as
/// the fixed point itself.
pub const FIXED_POINT_SNAP: f64 = 1e-14;

/// The pair `(q, ω)` with `0 < q < 1`, `ω > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QOmegaParams {
    q: f64,
    omega: f64,
    omega0: f64,
}

impl QOmegaParams {
    pub fn new(q: f64, omega: f64) -> Result<Self> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::InvalidParams(format!("q must lie in (0, 1), got {q}")));
        }
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::InvalidParams(format!("omega must be positive, got {omega}")));
        }
        Ok(Self {
            q,
            omega,
            omega0: omega / (1.0 - q),
        })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// Fixed point `ω/(1−q)` of the jump map.
    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    /// Absolute tolerance used to recognise `ω₀`.
    pub fn snap_tolerance(&self) -> f64 {
        FIXED_POINT_SNAP * self.omega0.abs().max(1.0)
    }

    pub fn is_fixed_point(&self, t: f64) -> bool {
        (t - self.omega0).abs() <= self.snap_tolerance()
    }

    /// Jump map `η(t) = qt + ω`. Values within the snap band of `ω₀` map to
    /// `ω₀` exactly.
    pub fn jump(&self, t: f64) -> f64 {
        if self.is_fixed_point(t) {
            return self.omega0;
        }
        let next = self.q * t + self.omega;
        if self.is_fixed_point(next) {
            self.omega0
        } else {
            next
        }
    }

    /// `[k]_{q,ω} = ω(1 − qᵏ)/(1 − q)`, the accumulated shift after `k` jumps.
    pub fn bracket(&self, k: usize) -> f64 {
        self.omega * (1.0 - self.q_pow(k)) / (1.0 - self.q)
    }

    pub fn q_pow(&self, k: usize) -> f64 {
        match i32::try_from(k) {
            Ok(k) => self.q.powi(k),
            Err(_) => 0.0,
        }
    }

    /// Closed form `qⁿs + [n]_{q,ω}` of the `n`-th orbit point of `s`.
    pub fn orbit_point(&self, seed: f64, n: usize) -> f64 {
        self.q_pow(n) * seed + self.bracket(n)
    }

    /// Smallest `N` with `q^N · max(|a−ω₀|, |b−ω₀|) < tol` (at least 1).
    pub fn depth_for_tol(&self, a: f64, b: f64, tol: f64) -> usize {
        let spread = (a - self.omega0).abs().max((b - self.omega0).abs());
        if spread < tol {
            return 1;
        }
        let n = ((tol / spread).ln() / self.q.ln()).floor() as usize + 1;
        let mut n = n.max(1);
        while n > 1 && self.q_pow(n - 1) * spread < tol {
            n -= 1;
        }
        while self.q_pow(n) * spread >= tol {
            n += 1;
        }
        n
    }

    /// Largest depth `N ≥ 1` at which every non-degenerate orbit among the
    /// seeds still takes jump steps of at least `min_step`.
    ///
    /// Difference quotients at depth `n` divide by `(1−q)qⁿ|s−ω₀|`; below a
    /// few times `1e-3` nested quotients are dominated by rounding.
    pub fn resolvable_depth(&self, seeds: &[f64], min_step: f64) -> usize {
        let closest = seeds
            .iter()
            .map(|s| (s - self.omega0).abs())
            .filter(|d| *d > self.snap_tolerance())
            .fold(f64::INFINITY, f64::min);
        if !closest.is_finite() {
            return 1;
        }
        let mut n = 0usize;
        while (1.0 - self.q) * self.q_pow(n + 1) * closest >= min_step && n < 10_000 {
            n += 1;
        }
        n.max(1)
    }
}

/// Where a lattice point came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum NodeOrigin {
    FixedPoint,
    Orbit { branch: usize, n: usize },
}

/// One seed's orbit `s, η(s), η²(s), …` truncated at the lattice depth.
#[derive(Debug, Clone, Serialize)]
pub struct Branch {
    seed: f64,
    values: Vec<f64>,
    nodes: Vec<usize>,
    degenerate: bool,
}

impl Branch {
    pub fn seed(&self) -> f64 {
        self.seed
    }

    /// Orbit values for `n = 0..=depth` (snapped to `ω₀` once they reach it).
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Indices into [`QLattice::points`] for `n = 0..=depth`.
    pub fn nodes(&self) -> &[usize] {
        &self.nodes
    }

    /// The seed itself is `ω₀`.
    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    /// Number of steps before the orbit reaches the snapped fixed point, or
    /// `depth` when it never does.
    pub fn effective_depth(&self, omega0_index: usize) -> usize {
        self.nodes
            .iter()
            .position(|&ix| ix == omega0_index)
            .unwrap_or(self.nodes.len() - 1)
    }
}

/// Truncated q,ω-interval `[a,b]_{q,ω}` (or the orbit union of any seeds).
#[derive(Debug, Clone, Serialize)]
pub struct QLattice {
    params: QOmegaParams,
    depth: usize,
    points: Vec<f64>,
    origins: Vec<NodeOrigin>,
    branches: Vec<Branch>,
    omega0_index: usize,
    bracket_coeffs: Vec<f64>,
    tail_gap: f64,
    shared_points: bool,
}

impl QLattice {
    /// Enumerates `[a,b]_{q,ω}` to depth `N`.
    pub fn build(params: QOmegaParams, a: f64, b: f64, depth: usize) -> Result<Self> {
        if !(a < b) {
            return Err(Error::InvalidInterval(format!("need a < b, got a = {a}, b = {b}")));
        }
        let w = params.omega();
        let q = params.q();
        if a * (1.0 - q) - w == 0.0 && b * (1.0 - q) - w == 0.0 {
            return Err(Error::DegenerateSeed { a, b });
        }
        Self::from_seeds(params, &[a, b], depth)
    }

    /// Enumerates the orbits of arbitrary seeds to depth `N`.
    pub fn from_seeds(params: QOmegaParams, seeds: &[f64], depth: usize) -> Result<Self> {
        if depth < 1 {
            return Err(Error::InvalidParams("lattice depth must be at least 1".into()));
        }
        if seeds.is_empty() || seeds.iter().any(|s| !s.is_finite()) {
            return Err(Error::InvalidParams("seeds must be finite and non-empty".into()));
        }
        let omega0 = params.omega0();

        // p_{n+1} = q p_n + ω, snapped onto ω₀ once inside the band.
        let raw: Vec<Vec<f64>> = seeds
            .iter()
            .map(|&s| {
                let mut orbit = Vec::with_capacity(depth + 1);
                let mut p = if params.is_fixed_point(s) { omega0 } else { s };
                orbit.push(p);
                for _ in 0..depth {
                    p = params.jump(p);
                    orbit.push(p);
                }
                orbit
            })
            .collect();

        let mut tagged: Vec<(f64, NodeOrigin)> = vec![(omega0, NodeOrigin::FixedPoint)];
        for (branch, orbit) in raw.iter().enumerate() {
            for (n, &p) in orbit.iter().enumerate() {
                if p != omega0 {
                    tagged.push((p, NodeOrigin::Orbit { branch, n }));
                }
            }
        }
        tagged.sort_by(|x, y| x.0.total_cmp(&y.0));

        let mut points: Vec<f64> = Vec::with_capacity(tagged.len());
        let mut origins: Vec<NodeOrigin> = Vec::with_capacity(tagged.len());
        let mut owner: Vec<Vec<NodeOrigin>> = Vec::with_capacity(tagged.len());
        for (p, origin) in tagged {
            let merge = points
                .last()
                .is_some_and(|&last| (p - last).abs() <= merge_tolerance(p));
            if merge {
                let ix = points.len() - 1;
                if p == omega0 || points[ix] == omega0 {
                    points[ix] = omega0;
                    origins[ix] = NodeOrigin::FixedPoint;
                }
                owner[ix].push(origin);
            } else {
                points.push(p);
                origins.push(origin);
                owner.push(vec![origin]);
            }
        }

        let omega0_index = points
            .iter()
            .position(|&p| p == omega0)
            .expect("fixed point is always inserted");

        let mut branches: Vec<Branch> = raw
            .iter()
            .zip(seeds)
            .map(|(orbit, &seed)| Branch {
                seed,
                values: orbit.clone(),
                nodes: vec![omega0_index; orbit.len()],
                degenerate: params.is_fixed_point(seed),
            })
            .collect();
        let mut shared_points = false;
        for (ix, owners) in owner.iter().enumerate() {
            let mut seen_branch: Option<usize> = None;
            for o in owners {
                if let NodeOrigin::Orbit { branch, n } = *o {
                    branches[branch].nodes[n] = ix;
                    match seen_branch {
                        Some(prev) if prev != branch => shared_points = true,
                        _ => seen_branch = Some(branch),
                    }
                }
            }
        }

        let tail_gap = raw
            .iter()
            .map(|orbit| (orbit[depth] - omega0).abs())
            .fold(0.0, f64::max);

        Ok(Self {
            params,
            depth,
            points,
            origins,
            branches,
            omega0_index,
            bracket_coeffs: (0..=depth).map(|k| params.bracket(k)).collect(),
            tail_gap,
            shared_points,
        })
    }

    pub fn params(&self) -> &QOmegaParams {
        &self.params
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Sorted, deduplicated points, `ω₀` included exactly once.
    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn origin(&self, index: usize) -> NodeOrigin {
        self.origins[index]
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn omega0_index(&self) -> usize {
        self.omega0_index
    }

    /// `[n]_{q,ω}` for `n = 0..=depth`.
    pub fn bracket_coeffs(&self) -> &[f64] {
        &self.bracket_coeffs
    }

    /// `max_s |q^N s + [N] − ω₀|` over the seeds.
    pub fn tail_gap(&self) -> f64 {
        self.tail_gap
    }

    /// Some point lies on the orbits of two different seeds.
    pub fn has_shared_points(&self) -> bool {
        self.shared_points
    }

    /// Index of `t` among the points, tolerating a few ulps of drift.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        if self.params.is_fixed_point(t) {
            return Some(self.omega0_index);
        }
        let pos = self.points.partition_point(|&p| p < t);
        let candidates = [pos.checked_sub(1), Some(pos)];
        candidates
            .into_iter()
            .flatten()
            .filter(|&ix| ix < self.points.len())
            .map(|ix| (ix, (self.points[ix] - t).abs()))
            .filter(|&(_, d)| d <= merge_tolerance(t))
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .map(|(ix, _)| ix)
    }

    /// Index of the jump of the point at `index`, if it is enumerated.
    pub fn next_index(&self, index: usize) -> Option<usize> {
        match self.origins[index] {
            NodeOrigin::FixedPoint => Some(index),
            NodeOrigin::Orbit { branch, n } => self.branches[branch].nodes.get(n + 1).copied(),
        }
    }

    /// Lattice points that are not `ω₀`.
    pub fn orbit_points(&self) -> impl Iterator<Item = f64> + '_ {
        self.points
            .iter()
            .enumerate()
            .filter(move |(ix, _)| *ix != self.omega0_index)
            .map(|(_, &p)| p)
    }
}

fn merge_tolerance(t: f64) -> f64 {
    8.0 * f64::EPSILON * t.abs().max(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(q: f64, w: f64) -> QOmegaParams {
        QOmegaParams::new(q, w).unwrap()
    }

    #[test]
    fn rejects_out_of_range_parameters() {
        assert!(QOmegaParams::new(1.0, 0.5).is_err());
        assert!(QOmegaParams::new(0.0, 0.5).is_err());
        assert!(QOmegaParams::new(0.5, 0.0).is_err());
        assert!(QOmegaParams::new(0.5, -1.0).is_err());
        assert!(QOmegaParams::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn jump_examples() {
        let p = params(0.5, 0.5);
        assert_eq!(p.omega0(), 1.0);
        assert_eq!(p.jump(1.0), 1.0);
        assert_eq!(p.jump(-1.0), 0.0);
        let p = params(0.5, 0.1);
        assert!((p.jump(0.6) - 0.4).abs() < 1e-15);
    }

    #[test]
    fn bracket_examples() {
        let p = params(0.5, 0.5);
        assert_eq!(p.bracket(0), 0.0);
        assert_eq!(p.bracket(1), 0.5);
        assert!((p.bracket(60) - p.omega0()).abs() < 1e-12);
    }

    #[test]
    fn small_lattice_by_hand() {
        let lat = QLattice::build(params(0.5, 0.25), 0.0, 1.0, 2).unwrap();
        assert_eq!(lat.points(), &[0.0, 0.25, 0.375, 0.5, 0.625, 0.75, 1.0]);
        assert_eq!(lat.omega0_index(), 3);
        assert_eq!(lat.origin(3), NodeOrigin::FixedPoint);
        assert!((lat.tail_gap() - 0.125).abs() < 1e-15);
        assert!(!lat.has_shared_points());
    }

    #[test]
    fn seed_on_fixed_point_is_deduplicated() {
        let lat = QLattice::build(params(0.5, 0.5), -1.0, 1.0, 1).unwrap();
        let hits = lat.points().iter().filter(|&&p| p == 1.0).count();
        assert_eq!(hits, 1);
        assert!(lat.branches()[1].is_degenerate());
        assert_eq!(lat.points(), &[-1.0, 0.0, 1.0]);
    }

    #[test]
    fn deep_lattice_tail_gap() {
        let lat = QLattice::build(params(0.9, 0.1), 0.0, 2.0, 200).unwrap();
        assert!(lat.tail_gap() < 1e-9);
    }

    #[test]
    fn invalid_intervals() {
        let p = params(0.5, 0.5);
        assert!(matches!(
            QLattice::build(p, 1.0, 1.0, 3),
            Err(Error::InvalidInterval(_))
        ));
        assert!(QLattice::build(p, 0.0, 1.0, 0).is_err());
    }

    #[test]
    fn depth_for_tol_is_minimal() {
        let p = params(0.5, 0.25);
        let n = p.depth_for_tol(0.0, 1.0, 1e-6);
        assert!(p.q_pow(n) * 0.5 < 1e-6);
        assert!(p.q_pow(n - 1) * 0.5 >= 1e-6);
    }

    #[test]
    fn resolvable_depth_respects_min_step() {
        let p = params(0.5, 0.1);
        let n = p.resolvable_depth(&[0.0, 1.0], 1e-3);
        assert!(0.5 * p.q_pow(n) * 0.2 >= 1e-3);
        assert!(0.5 * p.q_pow(n + 1) * 0.2 < 1e-3);
    }

    #[test]
    fn shared_orbit_detected() {
        let p = params(0.5, 0.25);
        // 0.25 = η(0)
        let lat = QLattice::build(p, 0.0, 0.25, 4).unwrap();
        assert!(lat.has_shared_points());
    }

    #[test]
    fn index_lookup_and_next() {
        let lat = QLattice::build(params(0.5, 0.25), 0.0, 1.0, 3).unwrap();
        let ix = lat.index_of(0.25).unwrap();
        let next = lat.next_index(ix).unwrap();
        assert_eq!(lat.points()[next], 0.375);
        assert_eq!(lat.index_of(0.3), None);
        let deepest = lat.index_of(lat.branches()[0].values()[3]).unwrap();
        assert_eq!(lat.next_index(deepest), None);
    }

    proptest! {
        #[test]
        fn jump_contracts_toward_fixed_point(q in 0.01f64..0.99, w in 0.01f64..3.0, t in -50.0f64..50.0) {
            let p = params(q, w);
            let lhs = (p.jump(t) - p.omega0()).abs();
            let rhs = q * (t - p.omega0()).abs();
            let scale = t.abs().max(p.omega0().abs()).max(1.0);
            prop_assert!((lhs - rhs).abs() <= 1e-14 * scale);
        }

        #[test]
        fn orbit_recurrence_and_monotonicity(q in 0.05f64..0.95, w in 0.01f64..2.0, a in -5.0f64..5.0, len in 0.1f64..5.0) {
            let p = params(q, w);
            let b = a + len;
            let lat = QLattice::build(p, a, b, 30).unwrap();
            for br in lat.branches() {
                let vals = br.values();
                for n in 0..vals.len() - 1 {
                    prop_assert_eq!(vals[n + 1], p.jump(vals[n]));
                    let closed = p.orbit_point(br.seed(), n + 1);
                    prop_assert!((vals[n + 1] - closed).abs() <= 1e-12 * closed.abs().max(1.0));
                    if vals[n] != p.omega0() && vals[n + 1] != p.omega0() {
                        prop_assert!((vals[n + 1] - p.omega0()).abs() < (vals[n] - p.omega0()).abs());
                    }
                }
            }
            let pts = lat.points();
            prop_assert!(pts.windows(2).all(|w| w[0] < w[1]));
            prop_assert_eq!(pts.iter().filter(|&&x| x == p.omega0()).count(), 1);
        }
    }
}
