//! Proximity operators for the controller's nonsmooth term.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ProxKind {
    /// `h ≡ 0`.
    Identity,
    /// Indicator of the ℓ1 ball of the given radius.
    L1Ball { radius: f64 },
}

/// `prox_h` with weight `1/β`, i.e. `argmin_x h(x) + (weight/2)‖x − u‖²`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProxSpec {
    pub kind: ProxKind,
    pub weight: f64,
}

impl ProxSpec {
    pub fn new(kind: ProxKind, weight: f64) -> Result<Self> {
        if weight.is_nan() || weight <= 0.0 {
            return Err(Error::Validation(format!("prox weight must be positive, got {weight}")));
        }
        if let ProxKind::L1Ball { radius } = kind {
            if radius.is_nan() || radius <= 0.0 {
                return Err(Error::Validation(format!("l1 radius must be positive, got {radius}")));
            }
        }
        Ok(Self { kind, weight })
    }

    /// Both supported kinds are zero or an indicator, so the weight does not
    /// change the result.
    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        apply(self.kind, u)
    }
}

pub fn apply(kind: ProxKind, u: &[f64]) -> Vec<f64> {
    match kind {
        ProxKind::Identity => u.to_vec(),
        ProxKind::L1Ball { radius } => project_l1_ball(u, radius),
    }
}

/// Euclidean projection onto `{x : ‖x‖₁ ≤ radius}` by sorting magnitudes and
/// soft-thresholding at the level that lands on the sphere.
pub fn project_l1_ball(u: &[f64], radius: f64) -> Vec<f64> {
    let norm1: f64 = u.iter().map(|v| v.abs()).sum();
    if norm1 <= radius {
        return u.to_vec();
    }
    let mut order: Vec<usize> = (0..u.len()).collect();
    // descending magnitude, ties by index
    order.sort_by(|&a, &b| u[b].abs().total_cmp(&u[a].abs()).then(a.cmp(&b)));

    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (k, &idx) in order.iter().enumerate() {
        let mag = u[idx].abs();
        cumulative += mag;
        let candidate = (cumulative - radius) / (k + 1) as f64;
        if mag > candidate {
            theta = candidate;
        } else {
            break;
        }
    }
    u.iter().map(|&v| v.signum() * (v.abs() - theta).max(0.0)).collect()
}

/// Exhaustive search over the lattice `grid_step·ℤ^d` inside the ℓ1 ball.
/// A test oracle for [`project_l1_ball`] in dimensions up to three.
pub fn brute_force_project(radius: f64, u: &[f64], grid_step: f64) -> Result<Vec<f64>> {
    if u.len() > 3 {
        return Err(Error::DimensionTooLarge(u.len()));
    }
    let budget = (radius / grid_step + 1e-9).floor() as i64;
    let mut best = vec![0.0; u.len()];
    let mut best_dist = f64::INFINITY;
    let mut point = vec![0i64; u.len()];
    search(0, budget, u, grid_step, &mut point, &mut best, &mut best_dist);
    Ok(best)
}

fn search(axis: usize, budget: i64, u: &[f64], step: f64, point: &mut [i64], best: &mut [f64], best_dist: &mut f64) {
    if axis == u.len() {
        let dist: f64 = point.iter().zip(u).map(|(&k, &v)| (k as f64 * step - v).powi(2)).sum();
        if dist < *best_dist {
            *best_dist = dist;
            for (b, &k) in best.iter_mut().zip(point.iter()) {
                *b = k as f64 * step;
            }
        }
        return;
    }
    for k in -budget..=budget {
        point[axis] = k;
        search(axis + 1, budget - k.abs(), u, step, point, best, best_dist);
    }
}
