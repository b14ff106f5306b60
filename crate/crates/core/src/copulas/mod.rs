//! Copula families, samplers, paired samples and rank transforms.

pub mod marginals;

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2, Axis};
use rand::Rng;
use rand_distr::{Distribution, Gamma, Open01, StandardNormal};

use crate::error::{Error, Result};
use crate::rng::{stream, StreamRng};

pub use marginals::{owens_t, shape_from_delta, skew_normal_cdf, skew_normal_quantile, skew_t_cdf, SkewT};

/// Meaning of the `ρ` parameter of the skew families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RhoConvention {
    /// Off-diagonal entry of the normalised scale matrix of `(Y₁, Y₂)`.
    #[default]
    Latent,
    /// Pearson correlation of `(Y₁, Y₂)`.
    Pearson,
}

#[derive(Debug, Clone, PartialEq)]
pub enum CopulaModel {
    Independence { d: usize },
    Fgm { delta: f64 },
    SkewNormal { rho: f64, delta1: f64, delta2: f64 },
    SkewT { rho: f64, delta1: f64, delta2: f64, nu: f64 },
    Survival(Box<CopulaModel>),
}

fn open_unit(u: f64) -> f64 {
    u.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

fn check_open(name: &'static str, x: f64) -> Result<()> {
    if !(x > -1.0 && x < 1.0) {
        return Err(Error::param(name, format!("must lie in (-1, 1), got {x}")));
    }
    Ok(())
}

impl CopulaModel {
    pub fn survival(self) -> Self {
        CopulaModel::Survival(Box::new(self))
    }

    pub fn dim(&self) -> usize {
        match self {
            CopulaModel::Independence { d } => *d,
            CopulaModel::Survival(inner) => inner.dim(),
            _ => 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            CopulaModel::Independence { d } => {
                if d == 0 {
                    return Err(Error::param("d", "dimension must be positive"));
                }
            }
            CopulaModel::Fgm { delta } => {
                if !(-1.0..=1.0).contains(&delta) {
                    return Err(Error::param("delta", format!("must lie in [-1, 1], got {delta}")));
                }
            }
            CopulaModel::SkewNormal { rho, delta1, delta2 } | CopulaModel::SkewT { rho, delta1, delta2, .. } => {
                check_open("rho", rho)?;
                check_open("delta1", delta1)?;
                check_open("delta2", delta2)?;
                if let CopulaModel::SkewT { nu, .. } = *self {
                    if !(nu > 0.0 && nu.is_finite()) {
                        return Err(Error::param("nu", format!("must be positive, got {nu}")));
                    }
                }
                self.latent_correlation(RhoConvention::Latent)?;
            }
            CopulaModel::Survival(ref inner) => inner.validate()?,
        }
        Ok(())
    }

    /// Correlation of the normal pair `(Z₁, Z₂)` in `Yⱼ = δⱼ|Z₀| + √(1−δⱼ²)Zⱼ`.
    pub fn latent_correlation(&self, convention: RhoConvention) -> Result<f64> {
        let (rho, d1, d2) = match *self {
            CopulaModel::SkewNormal { rho, delta1, delta2 } | CopulaModel::SkewT { rho, delta1, delta2, .. } => (rho, delta1, delta2),
            CopulaModel::Survival(ref inner) => return inner.latent_correlation(convention),
            _ => return Err(Error::param("model", "latent correlation is defined for the skew families only")),
        };
        let (s1, s2) = ((1.0 - d1 * d1).sqrt(), (1.0 - d2 * d2).sqrt());
        let rz = match convention {
            RhoConvention::Latent => (rho - d1 * d2) / (s1 * s2),
            RhoConvention::Pearson => {
                let abs_var = 1.0 - 2.0 / std::f64::consts::PI;
                let sd1 = (1.0 - 2.0 * d1 * d1 / std::f64::consts::PI).sqrt();
                let sd2 = (1.0 - 2.0 * d2 * d2 / std::f64::consts::PI).sqrt();
                (rho * sd1 * sd2 - d1 * d2 * abs_var) / (s1 * s2)
            }
        };
        if !(rz > -1.0 && rz < 1.0) {
            return Err(Error::param(
                "rho",
                format!("induced latent correlation {rz} is outside (-1, 1)"),
            ));
        }
        Ok(rz)
    }

    /// Copula CDF `C(u)` where a closed form exists (independence, FGM and
    /// their survival copulas).
    pub fn cdf(&self, u: &[f64]) -> Option<f64> {
        if u.len() != self.dim() {
            return None;
        }
        match *self {
            CopulaModel::Independence { .. } => Some(u.iter().product()),
            CopulaModel::Fgm { delta } => {
                let (a, b) = (u[0], u[1]);
                Some(a * b * (1.0 + delta * (1.0 - a) * (1.0 - b)))
            }
            CopulaModel::Survival(ref inner) => {
                // inclusion-exclusion over the coordinates that are complemented
                let d = u.len();
                let mut total = 0.0;
                let mut point = vec![1.0; d];
                for mask in 0u32..(1 << d) {
                    for (j, p) in point.iter_mut().enumerate() {
                        *p = if mask & (1 << j) != 0 { 1.0 - u[j] } else { 1.0 };
                    }
                    let sign = if mask.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                    total += sign * inner.cdf(&point)?;
                }
                Some(total)
            }
            _ => None,
        }
    }

    /// Diagonal `C(u, …, u)` where a closed form exists.
    pub fn diagonal(&self, u: f64) -> Option<f64> {
        self.cdf(&vec![u; self.dim()])
    }

    /// `n` draws with uniform margins, using `rng` in place.
    pub fn sample_with(&self, n: usize, rng: &mut StreamRng, convention: RhoConvention) -> Result<Array2<f64>> {
        self.validate()?;
        match *self {
            CopulaModel::Independence { d } => Ok(Array2::from_shape_simple_fn((n, d), || rng.sample(Open01))),
            CopulaModel::Fgm { delta } => {
                let mut out = Array2::zeros((n, 2));
                for mut row in out.rows_mut() {
                    let u: f64 = rng.sample(Open01);
                    let p: f64 = rng.sample(Open01);
                    row[0] = u;
                    row[1] = open_unit(fgm_conditional_inverse(u, p, delta));
                }
                Ok(out)
            }
            CopulaModel::SkewNormal { delta1, delta2, .. } => {
                let y = self.latent_draws(n, rng, convention, None)?;
                let (a1, a2) = (shape_from_delta(delta1), shape_from_delta(delta2));
                Ok(Array2::from_shape_fn((n, 2), |(i, j)| {
                    let alpha = if j == 0 { a1 } else { a2 };
                    open_unit(skew_normal_cdf(y[[i, j]], alpha))
                }))
            }
            CopulaModel::SkewT { delta1, delta2, nu, .. } => {
                let x = self.latent_draws(n, rng, convention, Some(nu))?;
                let mut out = Array2::zeros((n, 2));
                for (j, delta) in [delta1, delta2].into_iter().enumerate() {
                    let dist = SkewT::new(shape_from_delta(delta), nu)?;
                    let col: Vec<f64> = x.column(j).to_vec();
                    for (o, p) in out.column_mut(j).iter_mut().zip(dist.cdf_many(&col)?) {
                        *o = open_unit(p);
                    }
                }
                Ok(out)
            }
            CopulaModel::Survival(ref inner) => {
                let mut m = inner.sample_with(n, rng, convention)?;
                m.mapv_inplace(|v| open_unit(1.0 - v));
                Ok(m)
            }
        }
    }

    /// Raw draws of `(Y₁, Y₂)` (or `(Y₁, Y₂)/√V` when `nu` is given).
    pub fn latent_draws(&self, n: usize, rng: &mut StreamRng, convention: RhoConvention, nu: Option<f64>) -> Result<Array2<f64>> {
        let (d1, d2) = match *self {
            CopulaModel::SkewNormal { delta1, delta2, .. } | CopulaModel::SkewT { delta1, delta2, .. } => (delta1, delta2),
            _ => return Err(Error::param("model", "latent draws exist for the skew families only")),
        };
        let rz = self.latent_correlation(convention)?;
        let rz_c = (1.0 - rz * rz).sqrt();
        let (s1, s2) = ((1.0 - d1 * d1).sqrt(), (1.0 - d2 * d2).sqrt());
        let gamma = match nu {
            Some(nu) => Some(Gamma::new(0.5 * nu, 2.0 / nu).map_err(|e| Error::param("nu", e.to_string()))?),
            None => None,
        };
        let mut out = Array2::zeros((n, 2));
        for mut row in out.rows_mut() {
            let z0: f64 = rng.sample(StandardNormal);
            let e1: f64 = rng.sample(StandardNormal);
            let e2: f64 = rng.sample(StandardNormal);
            let z1 = e1;
            let z2 = rz * e1 + rz_c * e2;
            let scale = match &gamma {
                Some(g) => 1.0 / g.sample(rng).sqrt(),
                None => 1.0,
            };
            row[0] = scale * (d1 * z0.abs() + s1 * z1);
            row[1] = scale * (d2 * z0.abs() + s2 * z2);
        }
        Ok(out)
    }
}

impl fmt::Display for CopulaModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CopulaModel::Independence { d } => write!(f, "indep({d})"),
            CopulaModel::Fgm { delta } => write!(f, "fgm({delta})"),
            CopulaModel::SkewNormal { rho, delta1, delta2 } => write!(f, "sn({rho},{delta1},{delta2})"),
            CopulaModel::SkewT { rho, delta1, delta2, nu } => write!(f, "st({rho},{delta1},{delta2},{nu})"),
            CopulaModel::Survival(inner) => write!(f, "survival({inner})"),
        }
    }
}

impl FromStr for CopulaModel {
    type Err = Error;

    /// Parses the `Display` form, e.g. `fgm(0.5)` or `survival(sn(0.5,-0.7,-0.7))`.
    fn from_str(s: &str) -> Result<Self> {
        let s: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        let bad = || Error::param("model", format!("unrecognised copula `{s}`"));
        let open = s.find('(').ok_or_else(bad)?;
        if !s.ends_with(')') {
            return Err(bad());
        }
        let (name, body) = (&s[..open], &s[open + 1..s.len() - 1]);
        if name == "survival" {
            return Ok(body.parse::<CopulaModel>()?.survival());
        }
        let args: Vec<f64> = body
            .split(',')
            .map(|a| a.parse::<f64>().map_err(|_| bad()))
            .collect::<Result<_>>()?;
        let model = match (name, args.as_slice()) {
            ("indep", [d]) if *d >= 1.0 && d.fract() == 0.0 => CopulaModel::Independence { d: *d as usize },
            ("fgm", [delta]) => CopulaModel::Fgm { delta: *delta },
            ("sn", [rho, d1, d2]) => CopulaModel::SkewNormal { rho: *rho, delta1: *d1, delta2: *d2 },
            ("st", [rho, d1, d2, nu]) => CopulaModel::SkewT { rho: *rho, delta1: *d1, delta2: *d2, nu: *nu },
            _ => return Err(bad()),
        };
        model.validate()?;
        Ok(model)
    }
}

/// `n` draws from `model` with the default `ρ` convention.
pub fn sample(model: &CopulaModel, n: usize, seed: u64) -> Result<Array2<f64>> {
    if n == 0 {
        return Err(Error::param("n", "sample size must be at least 1"));
    }
    model.sample_with(n, &mut stream(seed), RhoConvention::Latent)
}

/// Solves `∂C(u, v; δ)/∂u = p` for `v` under the FGM copula.
pub fn fgm_conditional_inverse(u: f64, p: f64, delta: f64) -> f64 {
    let a = delta * (1.0 - 2.0 * u);
    if a.abs() < 1e-12 {
        return p;
    }
    // rationalised root of a v² − (1+a) v + p = 0, stable for small |a|
    let b = 1.0 + a;
    let disc = (b * b - 4.0 * a * p).max(0.0);
    2.0 * p / (b + disc.sqrt())
}

pub fn survival_transform(m: ArrayView2<'_, f64>) -> Array2<f64> {
    m.mapv(|v| 1.0 - v)
}

/// Column ranks `1..=n`, ties broken by order of first occurrence.
pub fn column_ranks(x: ArrayView2<'_, f64>) -> Array2<usize> {
    let (n, d) = x.dim();
    let mut ranks = Array2::zeros((n, d));
    let mut order: Vec<usize> = Vec::with_capacity(n);
    for j in 0..d {
        let col = x.column(j);
        order.clear();
        order.extend(0..n);
        // stable sort keeps earlier rows first among equal values
        order.sort_by(|&a, &b| col[a].total_cmp(&col[b]));
        for (r, &i) in order.iter().enumerate() {
            ranks[[i, j]] = r + 1;
        }
    }
    ranks
}

/// Column ranks divided by `n + 1`.
pub fn pseudo_observations(x: ArrayView2<'_, f64>) -> Array2<f64> {
    let denom = x.nrows() as f64 + 1.0;
    column_ranks(x).mapv(|r| r as f64 / denom)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pairing {
    /// The two blocks are drawn independently.
    Independent,
    /// The second block is the survival transform of the first.
    Countermonotone,
    /// The two blocks are disjoint row subsets of one sample.
    Split,
    /// The two blocks are transforms of the same observations, such as
    /// different coordinate pairs of one multivariate series.
    Joint,
}

impl fmt::Display for Pairing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pairing::Independent => "independent",
            Pairing::Countermonotone => "countermonotone",
            Pairing::Split => "split",
            Pairing::Joint => "joint",
        })
    }
}

impl FromStr for Pairing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "independent" => Ok(Pairing::Independent),
            "countermonotone" => Ok(Pairing::Countermonotone),
            "split" => Ok(Pairing::Split),
            "joint" => Ok(Pairing::Joint),
            other => Err(Error::param("pairing", format!("unknown pairing `{other}`"))),
        }
    }
}

/// Paired observations `(U⁽¹⁾, U⁽²⁾)` attributed to `C₁` and `C₂`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSample {
    pub u1: Array2<f64>,
    pub u2: Array2<f64>,
    pub pairing: Pairing,
    pub seed: Option<u64>,
}

impl PairedSample {
    pub fn new(u1: Array2<f64>, u2: Array2<f64>, pairing: Pairing) -> Result<Self> {
        if u1.nrows() != u2.nrows() {
            return Err(Error::Data(format!(
                "blocks have {} and {} rows",
                u1.nrows(),
                u2.nrows()
            )));
        }
        if u1.nrows() == 0 {
            return Err(Error::Data("empty sample".into()));
        }
        for (name, m) in [("first", &u1), ("second", &u2)] {
            if let Some(bad) = m.iter().find(|v| !(**v > 0.0 && **v < 1.0)) {
                return Err(Error::Data(format!("{name} block has entry {bad} outside (0, 1)")));
            }
        }
        Ok(Self {
            u1,
            u2,
            pairing,
            seed: None,
        })
    }

    /// Independent draws of `n` rows from each model.
    pub fn independent(m1: &CopulaModel, m2: &CopulaModel, n: usize, rng: &mut StreamRng) -> Result<Self> {
        let u1 = m1.sample_with(n, rng, RhoConvention::Latent)?;
        let u2 = m2.sample_with(n, rng, RhoConvention::Latent)?;
        Self::new(u1, u2, Pairing::Independent)
    }

    /// `U⁽²⁾ = 1 − U⁽¹⁾`, so the second block follows the survival copula.
    pub fn countermonotone(model: &CopulaModel, n: usize, rng: &mut StreamRng) -> Result<Self> {
        let u1 = model.sample_with(n, rng, RhoConvention::Latent)?;
        let u2 = u1.mapv(|v| open_unit(1.0 - v));
        Self::new(u1, u2, Pairing::Countermonotone)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn n(&self) -> usize {
        self.u1.nrows()
    }

    pub fn maxima1(&self) -> Vec<f64> {
        row_maxima(self.u1.view())
    }

    pub fn maxima2(&self) -> Vec<f64> {
        row_maxima(self.u2.view())
    }

    pub fn swapped(&self) -> Self {
        Self {
            u1: self.u2.clone(),
            u2: self.u1.clone(),
            pairing: self.pairing,
            seed: self.seed,
        }
    }
}

pub fn row_maxima(m: ArrayView2<'_, f64>) -> Vec<f64> {
    m.axis_iter(Axis(0))
        .map(|r| r.iter().copied().fold(f64::NEG_INFINITY, f64::max))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;
    use proptest::prelude::*;

    #[test]
    fn conditional_inverse_examples() {
        assert_eq!(fgm_conditional_inverse(0.42, 0.3, 0.0), 0.3);
        assert_abs_diff_eq!(fgm_conditional_inverse(0.0, 0.75, 1.0), 0.5, epsilon = 1e-15);
    }

    proptest! {
        #[test]
        fn conditional_inverse_round_trip(u in 0.001f64..0.999, p in 0.0001f64..0.9999, delta in -1.0f64..=1.0) {
            let v = fgm_conditional_inverse(u, p, delta);
            prop_assert!((0.0..=1.0).contains(&v));
            let back = v * (1.0 + delta * (1.0 - 2.0 * u) * (1.0 - v));
            prop_assert!((back - p).abs() < 1e-10);
        }

        #[test]
        fn ranks_invariant_under_monotone_maps(xs in proptest::collection::vec(-1e3f64..1e3, 2..40)) {
            let n = xs.len();
            let m = Array2::from_shape_vec((n, 1), xs.clone()).unwrap();
            let t = m.mapv(|v| (v / 100.0).exp() * 3.0 - 1.0);
            prop_assert_eq!(pseudo_observations(m.view()), pseudo_observations(t.view()));
            let p = pseudo_observations(m.view());
            prop_assert!(p.iter().all(|v| *v >= 1.0 / (n as f64 + 1.0) && *v <= n as f64 / (n as f64 + 1.0)));
        }
    }

    #[test]
    fn pseudo_observation_example() {
        let x = array![[3.2], [-1.0], [0.5]];
        assert_eq!(pseudo_observations(x.view()), array![[0.75], [0.25], [0.5]]);
        let tied = array![[1.0], [0.0], [1.0]];
        assert_eq!(column_ranks(tied.view()), array![[2], [1], [3]]);
    }

    #[test]
    fn survival_transform_involution() {
        let m = array![[0.2, 0.7]];
        let s = survival_transform(m.view());
        assert_abs_diff_eq!(s[[0, 0]], 0.8, epsilon = 1e-15);
        assert_abs_diff_eq!(s[[0, 1]], 0.3, epsilon = 1e-15);
        let m = array![[0.25, 0.625, 0.5]];
        assert_eq!(survival_transform(survival_transform(m.view()).view()), m);
    }

    #[test]
    fn closed_form_cdfs() {
        let fgm = CopulaModel::Fgm { delta: 0.5 };
        let u = 0.1;
        assert_abs_diff_eq!(fgm.diagonal(u).unwrap(), 1.5 * u * u - u.powi(3) + 0.5 * u.powi(4), epsilon = 1e-15);
        // FGM is radially symmetric
        let surv = fgm.clone().survival();
        assert_abs_diff_eq!(surv.cdf(&[0.2, 0.35]).unwrap(), fgm.cdf(&[0.2, 0.35]).unwrap(), epsilon = 1e-15);
        let ind = CopulaModel::Independence { d: 3 }.survival();
        assert_abs_diff_eq!(ind.diagonal(0.3).unwrap(), 0.027, epsilon = 1e-15);
        assert!(CopulaModel::SkewNormal { rho: 0.5, delta1: 0.1, delta2: 0.1 }.diagonal(0.1).is_none());
    }

    #[test]
    fn parse_and_display() {
        for s in ["indep(2)", "fgm(0.5)", "sn(0.5,-0.4,-0.4)", "st(0.5,0.6,0.6,5)", "survival(sn(0.5,-0.7,-0.7))"] {
            assert_eq!(s.parse::<CopulaModel>().unwrap().to_string(), s);
        }
        assert!("fgm(2)".parse::<CopulaModel>().is_err());
        assert!("gumbel(2)".parse::<CopulaModel>().is_err());
        assert!("sn(0.9,-0.99,0.99)".parse::<CopulaModel>().is_err());
    }

    #[test]
    fn latent_correlation() {
        let m = CopulaModel::SkewNormal { rho: 0.5, delta1: -0.4, delta2: -0.4 };
        assert_abs_diff_eq!(m.latent_correlation(RhoConvention::Latent).unwrap(), (0.5 - 0.16) / 0.84, epsilon = 1e-15);
        let zero = CopulaModel::SkewNormal { rho: 0.5, delta1: 0.0, delta2: 0.0 };
        assert_eq!(zero.latent_correlation(RhoConvention::Pearson).unwrap(), 0.5);
    }

    #[test]
    fn samples_are_reproducible_and_open() {
        for model in [
            CopulaModel::Independence { d: 3 },
            CopulaModel::Fgm { delta: -0.7 },
            CopulaModel::SkewNormal { rho: 0.5, delta1: -0.4, delta2: -0.4 },
            CopulaModel::SkewT { rho: 0.5, delta1: 0.6, delta2: 0.6, nu: 5.0 }.survival(),
        ] {
            let a = sample(&model, 500, 9).unwrap();
            let b = sample(&model, 500, 9).unwrap();
            assert_eq!(a, b);
            assert_eq!(a.ncols(), model.dim());
            assert!(a.iter().all(|v| *v > 0.0 && *v < 1.0));
            assert_ne!(a, sample(&model, 500, 10).unwrap());
        }
    }

    #[test]
    fn paired_sample_validation() {
        assert!(PairedSample::new(array![[0.5, 0.5]], array![[0.5, 1.0]], Pairing::Split).is_err());
        assert!(PairedSample::new(array![[0.5, 0.5]], array![[0.5, 0.2], [0.1, 0.1]], Pairing::Split).is_err());
        let p = PairedSample::new(array![[0.1, 0.4], [0.9, 0.2]], array![[0.3, 0.3], [0.5, 0.6]], Pairing::Independent).unwrap();
        assert_eq!(p.maxima1(), vec![0.4, 0.9]);
        assert_eq!(p.swapped().maxima1(), vec![0.3, 0.6]);
    }
}
