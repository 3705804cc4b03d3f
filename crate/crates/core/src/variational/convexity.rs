use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::Lagrangian;

/// Sampling box for `(u, v)` and for the increments `(u₁, v₁)`.
const SAMPLE_RANGE: f64 = 10.0;

/// Outcome of a sampled joint-convexity test.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvexityReport {
    pub passed: bool,
    /// Smallest `f(t,u+u₁,v+v₁) − f(t,u,v) − ∂₂f·u₁ − ∂₃f·v₁` seen.
    pub worst_margin: f64,
    /// `(t, u, v, u₁, v₁)` where the worst margin occurred.
    pub worst_at: Option<[f64; 5]>,
    pub samples: usize,
    pub note: String,
}

/// Samples the supporting-hyperplane inequality
/// `f(t,u+u₁,v+v₁) − f(t,u,v) ≥ ∂₂f(t,u,v)·u₁ + ∂₃f(t,u,v)·v₁`
/// at `sample_count` random points per `t`, with `u, v, u₁, v₁ ∈ [−10, 10]`.
///
/// Margins down to a small multiple of the finite-difference error are
/// accepted. Passing is evidence of convexity, not a proof.
pub fn check_joint_convexity(
    lagrangian: &Lagrangian,
    t_set: &[f64],
    sample_count: usize,
    seed: u64,
) -> ConvexityReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::INFINITY;
    let mut worst_at = None;
    let mut passed = true;
    let mut samples = 0;
    for &t in t_set {
        for _ in 0..sample_count {
            let [u, v, u1, v1] = [(); 4].map(|_| rng.gen_range(-SAMPLE_RANGE..=SAMPLE_RANGE));
            let base = lagrangian.eval(t, u, v);
            let moved = lagrangian.eval(t, u + u1, v + v1);
            let margin = moved - base - lagrangian.d2(t, u, v) * u1 - lagrangian.d3(t, u, v) * v1;
            let tol = 1e-7 * (1.0 + base.abs() + moved.abs());
            samples += 1;
            if margin.is_nan() || margin < -tol {
                passed = false;
            }
            if margin < worst || margin.is_nan() {
                worst = margin;
                worst_at = Some([t, u, v, u1, v1]);
            }
        }
    }
    ConvexityReport {
        passed,
        worst_margin: if samples == 0 { 0.0 } else { worst },
        worst_at,
        samples,
        note: "sampled check: a pass is evidence of joint convexity in (u, v), not a proof".into(),
    }
}
