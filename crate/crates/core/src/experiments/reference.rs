//! Reference values of the finite-threshold measure.
//!
//! Closed forms are used where the copula CDF is known (independence, FGM and
//! their survival copulas). The skew families have no closed-form copula CDF,
//! so their diagonal tail probabilities come from a Monte Carlo count on the
//! latent scale: `C(u,u) = P(Y₁ ≤ q₁(u), Y₂ ≤ q₂(u))` with `q_j` the marginal
//! quantiles, which avoids evaluating marginal CDFs draw by draw.

use rayon::prelude::*;

use crate::copulas::{shape_from_delta, skew_normal_quantile, CopulaModel, RhoConvention, SkewT};
use crate::error::{Error, Result};
use crate::rng::substream;
use crate::tail_theory::XiConfig;

/// Draws per parallel chunk; fixed so results do not depend on the pool size.
const CHUNK: usize = 1 << 20;

/// Lower and upper diagonal tail probabilities on a threshold grid:
/// `lower[i] = P(max U ≤ u_i)` and `upper[i] = P(min U > 1 − u_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalTails {
    pub u: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Number of Monte Carlo draws, or 0 for closed-form values.
    pub draws: usize,
}

impl DiagonalTails {
    pub fn swapped(self) -> Self {
        Self {
            u: self.u,
            lower: self.upper,
            upper: self.lower,
            draws: self.draws,
        }
    }
}

fn marginal_quantiles(model: &CopulaModel, ps: &[f64]) -> Result<[Vec<f64>; 2]> {
    let q = |delta: f64| -> Result<Vec<f64>> {
        let alpha = shape_from_delta(delta);
        match *model {
            CopulaModel::SkewNormal { .. } => ps.iter().map(|&p| skew_normal_quantile(p, alpha)).collect(),
            CopulaModel::SkewT { nu, .. } => {
                let dist = SkewT::new(alpha, nu)?;
                ps.iter().map(|&p| dist.quantile(p)).collect()
            }
            _ => unreachable!("caller restricts to skew families"),
        }
    };
    match *model {
        CopulaModel::SkewNormal { delta1, delta2, .. } | CopulaModel::SkewT { delta1, delta2, .. } => Ok([q(delta1)?, q(delta2)?]),
        _ => Err(Error::param("model", "Monte Carlo tails are implemented for the skew families")),
    }
}

/// Diagonal tail probabilities of `model` on `grid` (any order). Closed
/// forms are used when available; otherwise `draws` latent draws from
/// substreams of `seed`.
pub fn diagonal_tails(model: &CopulaModel, grid: &[f64], draws: usize, seed: u64) -> Result<DiagonalTails> {
    model.validate()?;
    if let Some(g) = grid.iter().find(|u| !(**u > 0.0 && **u < 1.0)) {
        return Err(Error::param("grid", format!("threshold {g} is outside (0, 1)")));
    }
    if let CopulaModel::Survival(inner) = model {
        return Ok(diagonal_tails(inner, grid, draws, seed)?.swapped());
    }
    if model.diagonal(0.5).is_some() {
        let survival = model.clone().survival();
        return Ok(DiagonalTails {
            u: grid.to_vec(),
            lower: grid.iter().map(|&u| model.diagonal(u).expect("closed form")).collect(),
            upper: grid.iter().map(|&u| survival.diagonal(u).expect("closed form")).collect(),
            draws: 0,
        });
    }
    if draws == 0 {
        return Err(Error::param("draws", "Monte Carlo reference needs at least one draw"));
    }
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by(|&a, &b| grid[a].total_cmp(&grid[b]));
    let sorted: Vec<f64> = order.iter().map(|&i| grid[i]).collect();
    let lower_q = marginal_quantiles(model, &sorted)?;
    let upper_ps: Vec<f64> = sorted.iter().map(|u| 1.0 - u).collect();
    let upper_q = marginal_quantiles(model, &upper_ps)?;
    let nu = match *model {
        CopulaModel::SkewT { nu, .. } => Some(nu),
        _ => None,
    };
    let g = sorted.len();
    let chunks = draws.div_ceil(CHUNK);
    let counts = (0..chunks)
        .into_par_iter()
        .map(|c| -> Result<(Vec<u64>, Vec<u64>)> {
            let size = CHUNK.min(draws - c * CHUNK);
            let mut rng = substream(seed, c as u64);
            let y = model.latent_draws(size, &mut rng, RhoConvention::Latent, nu)?;
            let (mut lo, mut hi) = (vec![0u64; g + 1], vec![0u64; g + 1]);
            for row in y.rows() {
                // first grid index whose event contains the draw
                let first_lo = (0..2).map(|j| lower_q[j].partition_point(|q| *q < row[j])).max().expect("two margins");
                let first_hi = (0..2).map(|j| upper_q[j].partition_point(|q| *q >= row[j])).max().expect("two margins");
                lo[first_lo] += 1;
                hi[first_hi] += 1;
            }
            Ok((lo, hi))
        })
        .collect::<Result<Vec<_>>>()?;
    let (mut lo, mut hi) = (vec![0u64; g + 1], vec![0u64; g + 1]);
    for (l, h) in counts {
        for i in 0..=g {
            lo[i] += l[i];
            hi[i] += h[i];
        }
    }
    let total = draws as f64;
    let cumulative = |h: &[u64]| -> Vec<f64> {
        let mut acc = 0u64;
        h[..g]
            .iter()
            .map(|c| {
                acc += c;
                acc as f64 / total
            })
            .collect()
    };
    let (lo_s, hi_s) = (cumulative(&lo), cumulative(&hi));
    let mut lower = vec![0.0; g];
    let mut upper = vec![0.0; g];
    for (rank, &i) in order.iter().enumerate() {
        lower[i] = lo_s[rank];
        upper[i] = hi_s[rank];
    }
    Ok(DiagonalTails {
        u: grid.to_vec(),
        lower,
        upper,
        draws,
    })
}

/// `ξ_w(u)` from the two diagonal tail probabilities at `u`; `None` when
/// either probability is zero.
pub fn xi_from_tails(f1: f64, f2: f64, u: f64, cfg: &XiConfig) -> Option<f64> {
    if !(f1 > 0.0 && f2 > 0.0) {
        return None;
    }
    let alpha = f2.ln() - f1.ln();
    Some((1.0 - cfg.w) * cfg.h1.evaluate(alpha / (1.0 / u).ln()) + cfg.w * cfg.h2.evaluate(alpha))
}

/// Exact `ξ_w(u)` for a pair with closed-form diagonals, else `None`.
pub fn oracle_xi_finite(m1: &CopulaModel, m2: &CopulaModel, u: f64, cfg: &XiConfig) -> Option<f64> {
    xi_from_tails(m1.diagonal(u)?, m2.diagonal(u)?, u, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn closed_form_tails() {
        let m = CopulaModel::Fgm { delta: 1.0 };
        let t = diagonal_tails(&m, &[0.1, 0.5], 0, 1).unwrap();
        assert_abs_diff_eq!(t.lower[0], 0.01 * (1.0 + 0.81), epsilon = 1e-15);
        // FGM is radially symmetric
        assert_abs_diff_eq!(t.upper[0], t.lower[0], epsilon = 1e-15);
        let s = diagonal_tails(&CopulaModel::Independence { d: 2 }.survival(), &[0.2], 0, 1).unwrap();
        assert_abs_diff_eq!(s.lower[0], 0.04, epsilon = 1e-15);
    }

    #[test]
    fn oracle_matches_hand_computation() {
        let cfg = XiConfig::clamps(0.5, 2, 1.5).unwrap();
        let xi = oracle_xi_finite(&CopulaModel::Fgm { delta: 0.5 }, &CopulaModel::Fgm { delta: 1.0 }, 0.1, &cfg).unwrap();
        let alpha = (1.81f64 / 1.405).ln();
        assert_abs_diff_eq!(xi, 0.5 * alpha / 10f64.ln() + 0.5 * alpha / 1.5, epsilon = 1e-14);
        assert!(oracle_xi_finite(&CopulaModel::SkewNormal { rho: 0.5, delta1: 0.1, delta2: 0.1 }, &CopulaModel::Fgm { delta: 0.0 }, 0.1, &cfg).is_none());
    }

    #[test]
    fn monte_carlo_agrees_with_independence_limit() {
        // with rho = delta = 0 the skew-normal copula is the independence copula
        let m = CopulaModel::SkewNormal { rho: 0.0, delta1: 0.0, delta2: 0.0 };
        let grid = [0.3, 0.1, 0.5];
        let t = diagonal_tails(&m, &grid, 400_000, 9).unwrap();
        for (i, u) in grid.iter().enumerate() {
            let p = u * u;
            let se = (p * (1.0 - p) / 400_000.0).sqrt();
            assert!((t.lower[i] - p).abs() < 5.0 * se, "lower {u}: {} vs {p}", t.lower[i]);
            assert!((t.upper[i] - p).abs() < 5.0 * se, "upper {u}: {} vs {p}", t.upper[i]);
        }
        assert_eq!(t, diagonal_tails(&m, &grid, 400_000, 9).unwrap());
    }

    #[test]
    fn negative_skew_loads_the_lower_tail() {
        let m = CopulaModel::SkewNormal { rho: 0.5, delta1: -0.7, delta2: -0.7 };
        let t = diagonal_tails(&m, &[0.01], 1_000_000, 3).unwrap();
        assert!(t.lower[0] > 2.0 * t.upper[0], "{t:?}");
        let s = diagonal_tails(&m.clone().survival(), &[0.01], 1_000_000, 3).unwrap();
        assert_eq!(s.lower, t.upper);
    }
}
