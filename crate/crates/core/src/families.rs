//! Cardinal interpolator families and their normalized Fourier symbols.
//!
//! Every symbol here is the transform of the interpolator *up to a positive
//! constant*. The fundamental and scaling symbols are quotients that are
//! invariant under such rescaling, so the constants (Γ factors, powers of
//! `2π`, the sign of the multiquadric transform) are dropped:
//!
//! | family | normalized symbol `s(ξ)` |
//! |---|---|
//! | polyharmonic, order `k` | `‖ξ‖^{-2k}` |
//! | generalized multiquadric `(‖x‖²+c²)^α` | `‖ξ‖^{-ν} K_ν(c‖ξ‖)`, `ν = α + n/2` |
//! | Gaussian `e^{-‖x‖²/(4α)}` | `e^{-α‖ξ‖²}` |
//!
//! All three are radial and strictly decreasing in `‖ξ‖`, which the tail
//! envelopes below rely on.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::specfun::{bessel_k_log, BesselEvalConfig};

const TWO_PI: f64 = 2.0 * PI;
/// Safety factor applied to grid suprema in [`m_bound`].
pub const M_BOUND_SAFETY: f64 = 1.01;

/// Family member parameters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Variant {
    Polyharmonic { k: u32 },
    GeneralizedMultiquadric { alpha: f64, c: f64 },
    Gaussian { alpha: f64 },
}

/// A validated cardinal interpolator in dimension `n ∈ {1, 2, 3}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Descriptor", into = "Descriptor")]
pub struct CardinalInterpolator {
    dim: usize,
    variant: Variant,
}

/// Symbol value with an explicit flag for the singularity at the origin.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SymbolValue {
    Finite(f64),
    Infinite,
}

impl SymbolValue {
    pub fn is_infinite(&self) -> bool {
        matches!(self, SymbolValue::Infinite)
    }

    pub fn finite(&self) -> Option<f64> {
        match *self {
            SymbolValue::Finite(v) => Some(v),
            SymbolValue::Infinite => None,
        }
    }
}

fn bessel_cfg() -> BesselEvalConfig {
    BesselEvalConfig {
        rel_tol: 1e-13,
        ..BesselEvalConfig::default()
    }
}

/// Squared Euclidean norm, summed in ascending order of the squares so the
/// result is invariant under signed coordinate permutations bit for bit.
pub fn norm_sq(xi: &[f64]) -> f64 {
    let mut sq = [0.0f64; 3];
    let n = xi.len().min(3);
    for (dst, x) in sq.iter_mut().zip(xi) {
        *dst = x * x;
    }
    let sq = &mut sq[..n];
    sq.sort_by(|a, b| a.total_cmp(b));
    let mut total = sq.iter().sum::<f64>();
    for x in xi.iter().skip(3) {
        total += x * x;
    }
    total
}

impl CardinalInterpolator {
    pub fn new(dim: usize, variant: Variant) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidDescriptor(format!(
                "dimension must be 1, 2 or 3, got {dim}"
            )));
        }
        match variant {
            Variant::Polyharmonic { k } => {
                if 2 * (k as usize) <= dim {
                    return Err(Error::InvalidDescriptor(format!(
                        "polyharmonic order needs 2k > n, got k = {k}, n = {dim}"
                    )));
                }
                if k > 32 {
                    return Err(Error::InvalidDescriptor(format!(
                        "polyharmonic order {k} too large"
                    )));
                }
            }
            Variant::GeneralizedMultiquadric { alpha, c } => {
                if !(alpha.is_finite() && alpha >= 0.5) {
                    return Err(Error::InvalidDescriptor(format!(
                        "multiquadric order must be >= 1/2, got {alpha}"
                    )));
                }
                if alpha.fract() == 0.0 {
                    return Err(Error::InvalidDescriptor(format!(
                        "multiquadric order must not be a natural number, got {alpha}"
                    )));
                }
                if !(c.is_finite() && c > 0.0) {
                    return Err(Error::InvalidDescriptor(format!(
                        "shape parameter must be positive, got {c}"
                    )));
                }
                if alpha + 0.5 * dim as f64 > 64.0 {
                    return Err(Error::InvalidDescriptor(format!(
                        "Bessel order alpha + n/2 = {} exceeds 64",
                        alpha + 0.5 * dim as f64
                    )));
                }
            }
            Variant::Gaussian { alpha } => {
                if !(alpha.is_finite() && alpha >= 1.0) {
                    return Err(Error::InvalidDescriptor(format!(
                        "Gaussian parameter must be >= 1, got {alpha}"
                    )));
                }
            }
        }
        Ok(Self { dim, variant })
    }

    pub fn polyharmonic(dim: usize, k: u32) -> Result<Self> {
        Self::new(dim, Variant::Polyharmonic { k })
    }

    pub fn multiquadric(dim: usize, alpha: f64, c: f64) -> Result<Self> {
        Self::new(dim, Variant::GeneralizedMultiquadric { alpha, c })
    }

    pub fn gaussian(dim: usize, alpha: f64) -> Result<Self> {
        Self::new(dim, Variant::Gaussian { alpha })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    /// Whether the symbol is unbounded at the origin.
    pub fn is_origin_singular(&self) -> bool {
        !matches!(self.variant, Variant::Gaussian { .. })
    }

    /// Short label, e.g. `polyharmonic(k=2,n=1)`.
    pub fn label(&self) -> String {
        match self.variant {
            Variant::Polyharmonic { k } => format!("polyharmonic(k={k},n={})", self.dim),
            Variant::GeneralizedMultiquadric { alpha, c } => {
                format!("gmq(alpha={alpha},c={c},n={})", self.dim)
            }
            Variant::Gaussian { alpha } => format!("gaussian(alpha={alpha},n={})", self.dim),
        }
    }

    fn check_dim(&self, xi: &[f64]) -> Result<()> {
        if xi.len() != self.dim {
            return Err(Error::Domain(format!(
                "frequency has {} components, interpolator dimension is {}",
                xi.len(),
                self.dim
            )));
        }
        if xi.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain("frequency must be finite".into()));
        }
        Ok(())
    }

    /// `ln s(ξ)` as a function of `‖ξ‖²`; `-∞`-free for `r2 > 0`.
    pub(crate) fn log_symbol_at_norm_sq(&self, r2: f64) -> Result<f64> {
        match self.variant {
            Variant::Polyharmonic { k } => Ok(-(k as f64) * r2.ln()),
            Variant::GeneralizedMultiquadric { alpha, c } => {
                let nu = alpha + 0.5 * self.dim as f64;
                let r = r2.sqrt();
                Ok(-0.5 * nu * r2.ln() + bessel_k_log(nu, c * r, &bessel_cfg())?)
            }
            Variant::Gaussian { alpha } => Ok(-alpha * r2),
        }
    }

    /// `s(ξ)^p` as a function of `r2 = ‖ξ‖² > 0`; may underflow to zero.
    pub(crate) fn symbol_pow_at_norm_sq(&self, r2: f64, p: u32) -> Result<f64> {
        match self.variant {
            Variant::Polyharmonic { k } => Ok(r2.powi(-((k * p) as i32))),
            Variant::Gaussian { alpha } => Ok((-(p as f64) * alpha * r2).exp()),
            Variant::GeneralizedMultiquadric { .. } => {
                Ok((p as f64 * self.log_symbol_at_norm_sq(r2)?).exp())
            }
        }
    }

    /// Normalized symbol `s(ξ)`; `Infinite` at the origin for singular families.
    pub fn symbol(&self, xi: &[f64]) -> Result<SymbolValue> {
        self.check_dim(xi)?;
        let r2 = norm_sq(xi);
        if r2 == 0.0 {
            return Ok(match self.variant {
                Variant::Gaussian { .. } => SymbolValue::Finite(1.0),
                _ => SymbolValue::Infinite,
            });
        }
        Ok(SymbolValue::Finite(self.symbol_pow_at_norm_sq(r2, 1)?))
    }

    /// `ln s(ξ)`, usable far beyond the range where `s` itself is representable.
    pub fn log_symbol(&self, xi: &[f64]) -> Result<f64> {
        self.check_dim(xi)?;
        let r2 = norm_sq(xi);
        if r2 == 0.0 {
            return match self.variant {
                Variant::Gaussian { .. } => Ok(0.0),
                _ => Err(Error::Domain(
                    "log symbol undefined at the origin for a singular family".into(),
                )),
            };
        }
        self.log_symbol_at_norm_sq(r2)
    }

    /// `M_j(ξ) = s(ξ + 2πj) / s(ξ)` for `ξ ∈ [-π, π]ⁿ`, `j ≠ 0`.
    ///
    /// At `ξ = 0` a singular family returns the limit `0`.
    pub fn m_ratio(&self, j: &[i64], xi: &[f64]) -> Result<f64> {
        self.check_dim(xi)?;
        check_shift(self.dim, j)?;
        if xi.iter().any(|x| x.abs() > PI) {
            return Err(Error::Domain(format!("ratio needs xi in [-pi, pi]^n, got {xi:?}")));
        }
        let r2 = norm_sq(xi);
        if r2 == 0.0 && self.is_origin_singular() {
            return Ok(0.0);
        }
        let shifted: Vec<f64> = xi
            .iter()
            .zip(j)
            .map(|(x, &ji)| x + TWO_PI * ji as f64)
            .collect();
        let log_ratio = match self.variant {
            Variant::Gaussian { alpha } => {
                // -α(‖ξ+2πj‖² − ‖ξ‖²) = -α Σ 2πj_i (2ξ_i + 2πj_i)
                -alpha
                    * xi.iter()
                        .zip(j)
                        .map(|(x, &ji)| {
                            let t = TWO_PI * ji as f64;
                            t * (2.0 * x + t)
                        })
                        .sum::<f64>()
            }
            _ => self.log_symbol_at_norm_sq(norm_sq(&shifted))? - self.log_symbol_at_norm_sq(r2)?,
        };
        Ok(log_ratio.exp())
    }

    /// Minimum of `s` over the cell `[-π, π]ⁿ`, attained at a corner.
    pub fn cell_minimum(&self) -> Result<f64> {
        self.symbol_pow_at_norm_sq(PI * PI * self.dim as f64, 1)
    }
}

fn check_shift(dim: usize, j: &[i64]) -> Result<()> {
    if j.len() != dim {
        return Err(Error::Domain(format!(
            "lattice vector has {} components, expected {dim}",
            j.len()
        )));
    }
    if j.iter().all(|&v| v == 0) {
        return Err(Error::Domain("lattice vector must be nonzero".into()));
    }
    Ok(())
}

/// Upper bound `M_j ≥ sup_{ξ ∈ [-π,π]ⁿ} M_j(ξ)`.
///
/// Closed form `(2|j|-1)^{-2k}` for one-dimensional polyharmonic symbols;
/// otherwise a locally refined grid supremum times [`M_BOUND_SAFETY`].
pub fn m_bound(phi: &CardinalInterpolator, j: &[i64]) -> Result<f64> {
    check_shift(phi.dim, j)?;
    if let (Variant::Polyharmonic { k }, 1) = (phi.variant, phi.dim) {
        let base = (2 * j[0].unsigned_abs() - 1) as f64;
        return Ok(base.powi(-2 * k as i32));
    }
    let (coarse, fine) = match phi.dim {
        1 => (4097, 65),
        2 => (65, 17),
        _ => (17, 9),
    };
    let step = 2.0 * PI / (coarse - 1) as f64;
    let (best, best_at) = grid_supremum(phi, j, &vec![(-PI, PI); phi.dim], coarse)?;
    let window: Vec<(f64, f64)> = best_at
        .iter()
        .map(|&x| ((x - step).max(-PI), (x + step).min(PI)))
        .collect();
    let (refined, _) = grid_supremum(phi, j, &window, fine)?;
    Ok(M_BOUND_SAFETY * best.max(refined))
}

/// Max of `m_ratio` over a tensor grid with `points` nodes per axis.
fn grid_supremum(
    phi: &CardinalInterpolator,
    j: &[i64],
    bounds: &[(f64, f64)],
    points: usize,
) -> Result<(f64, Vec<f64>)> {
    let dim = bounds.len();
    let total = points.pow(dim as u32);
    let mut best = f64::NEG_INFINITY;
    let mut best_at = vec![0.0; dim];
    let mut xi = vec![0.0; dim];
    for flat in 0..total {
        let mut rest = flat;
        for (axis, &(lo, hi)) in bounds.iter().enumerate() {
            let idx = rest % points;
            rest /= points;
            xi[axis] = if idx + 1 == points {
                hi
            } else {
                lo + (hi - lo) * idx as f64 / (points - 1) as f64
            };
        }
        let v = phi.m_ratio(j, &xi)?;
        if v > best {
            best = v;
            best_at.copy_from_slice(&xi);
        }
    }
    Ok((best, best_at))
}

/// Bound on `Σ_{‖j‖∞ ≥ first_shell} s(ξ - h j)^p`, uniform over the centred
/// cell `ξ ∈ [-h/2, h/2]ⁿ`, where `h = spacing`.
///
/// Shell `m` has at most `2n(2m+1)^{n-1}` points, each at distance at least
/// `h(m - 1/2)` from any point of the cell. Polyharmonic shells are summed
/// against an integral; exponentially decaying symbols are dominated by a
/// geometric series. Returns `+∞` when no geometric certificate exists at
/// this radius (the caller should enlarge it).
pub(crate) fn tail_envelope(
    phi: &CardinalInterpolator,
    spacing: f64,
    first_shell: usize,
    p: u32,
) -> Result<f64> {
    if first_shell < 2 {
        return Err(Error::Domain(format!(
            "tail envelope needs the first shell >= 2, got {first_shell}"
        )));
    }
    let n = phi.dim as f64;
    let m0 = first_shell as f64;
    let count_log = (2.0 * n).ln() + (n - 1.0) * (2.0 * m0 + 1.0).ln();
    let r0 = spacing * (m0 - 0.5);
    match phi.variant {
        Variant::Polyharmonic { k } => {
            let q = (2 * k * p) as f64;
            let rho = (2.0 * m0 + 1.0) / (2.0 * m0 - 1.0);
            let e = q - n + 1.0;
            let base = 2.0 * m0 - 1.0;
            let series = base.powf(-e) + base.powf(1.0 - e) / (2.0 * (e - 1.0));
            let log_bound = (2.0 * n).ln() + (n - 1.0) * rho.ln() - q * (0.5 * spacing).ln()
                + series.ln();
            Ok(log_bound.exp())
        }
        Variant::Gaussian { alpha } => {
            let rho = (2.0 * m0 + 3.0) / (2.0 * m0 + 1.0);
            let log_q = (n - 1.0) * rho.ln() - 2.0 * p as f64 * alpha * spacing * spacing * m0;
            if log_q >= 0.0 {
                return Ok(f64::INFINITY);
            }
            let log_first = count_log - p as f64 * alpha * r0 * r0;
            Ok((log_first - (-(log_q.exp())).ln_1p()).exp())
        }
        Variant::GeneralizedMultiquadric { c, .. } => {
            let rho = (2.0 * m0 + 3.0) / (2.0 * m0 + 1.0);
            let log_q = (n - 1.0) * rho.ln() - p as f64 * c * spacing;
            if log_q >= 0.0 {
                return Ok(f64::INFINITY);
            }
            let log_first = count_log + p as f64 * phi.log_symbol_at_norm_sq(r0 * r0)?;
            Ok((log_first - (-(log_q.exp())).ln_1p()).exp())
        }
    }
}

/// Upper bound for `Σ_{‖2πj‖∞ > R} s(ξ - 2πj)`, uniform over `ξ ∈ [-π, π]ⁿ`.
pub fn decay_envelope(phi: &CardinalInterpolator, radius: f64) -> Result<f64> {
    if !(radius >= 4.0 * PI) || !radius.is_finite() {
        return Err(Error::Domain(format!(
            "decay envelope needs R >= 4π, got {radius}"
        )));
    }
    let first_shell = (radius / TWO_PI).floor() as usize + 1;
    tail_envelope(phi, TWO_PI, first_shell, 1)
}

/// Bound for `Σ_{‖j‖∞ > J} M_j`, derived from the decay envelope and the
/// cell minimum of the symbol.
pub fn m_tail_bound(phi: &CardinalInterpolator, radius: usize) -> Result<f64> {
    let env = tail_envelope(phi, TWO_PI, radius + 1, 1)?;
    Ok(M_BOUND_SAFETY * env / phi.cell_minimum()?)
}

/// Which parameter a [`FamilyPath`] varies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ParameterAxis {
    MultiquadricOrder,
    MultiquadricShape,
    PolyharmonicOrder,
    Gaussian,
}

/// A finite increasing sample `{φ_a : a ∈ A}` of a one-parameter family.
#[derive(Clone, Debug, PartialEq)]
pub struct FamilyPath {
    base: CardinalInterpolator,
    axis: ParameterAxis,
    values: Vec<f64>,
    members: Vec<CardinalInterpolator>,
}

impl FamilyPath {
    pub fn new(base: CardinalInterpolator, axis: ParameterAxis, values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidDescriptor(
                "a family path needs at least two parameter values".into(),
            ));
        }
        if values.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidDescriptor(
                "family path parameters must be strictly increasing".into(),
            ));
        }
        let members = values
            .iter()
            .map(|&v| member_at(&base, axis, v))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            base,
            axis,
            values,
            members,
        })
    }

    pub fn base(&self) -> &CardinalInterpolator {
        &self.base
    }

    pub fn axis(&self) -> ParameterAxis {
        self.axis
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn members(&self) -> &[CardinalInterpolator] {
        &self.members
    }

    pub fn dim(&self) -> usize {
        self.base.dim
    }

    /// Member at the smallest parameter; its M-ratios dominate the others'.
    pub fn first(&self) -> &CardinalInterpolator {
        &self.members[0]
    }
}

fn member_at(base: &CardinalInterpolator, axis: ParameterAxis, v: f64) -> Result<CardinalInterpolator> {
    let dim = base.dim;
    match (axis, base.variant) {
        (ParameterAxis::PolyharmonicOrder, Variant::Polyharmonic { .. }) => {
            if v.fract() != 0.0 || v < 1.0 {
                return Err(Error::InvalidDescriptor(format!(
                    "polyharmonic order must be a positive integer, got {v}"
                )));
            }
            CardinalInterpolator::polyharmonic(dim, v as u32)
        }
        (ParameterAxis::MultiquadricOrder, Variant::GeneralizedMultiquadric { c, .. }) => {
            CardinalInterpolator::multiquadric(dim, v, c)
        }
        (ParameterAxis::MultiquadricShape, Variant::GeneralizedMultiquadric { alpha, .. }) => {
            CardinalInterpolator::multiquadric(dim, alpha, v)
        }
        (ParameterAxis::Gaussian, Variant::Gaussian { .. }) => CardinalInterpolator::gaussian(dim, v),
        _ => Err(Error::InvalidDescriptor(format!(
            "parameter axis {axis:?} does not apply to {}",
            base.label()
        ))),
    }
}

/// `m_bound` over a whole path: the smallest parameter dominates.
pub fn m_bound_path(path: &FamilyPath, j: &[i64]) -> Result<f64> {
    m_bound(path.first(), j)
}

/// Wire form of a descriptor.
#[derive(Clone, Debug, Serialize, Deserialize)]
struct Descriptor {
    family: String,
    n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    k: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    c: Option<f64>,
}

impl TryFrom<Descriptor> for CardinalInterpolator {
    type Error = Error;

    fn try_from(d: Descriptor) -> Result<Self> {
        let missing = |what: &str| Error::InvalidDescriptor(format!("{} requires {what}", d.family));
        let variant = match d.family.as_str() {
            "polyharmonic" => {
                if d.alpha.is_some() || d.c.is_some() {
                    return Err(Error::InvalidDescriptor(
                        "polyharmonic takes only k".into(),
                    ));
                }
                Variant::Polyharmonic {
                    k: d.k.ok_or_else(|| missing("k"))?,
                }
            }
            "gmq" => {
                if d.k.is_some() {
                    return Err(Error::InvalidDescriptor("gmq does not take k".into()));
                }
                Variant::GeneralizedMultiquadric {
                    alpha: d.alpha.ok_or_else(|| missing("alpha"))?,
                    c: d.c.ok_or_else(|| missing("c"))?,
                }
            }
            "gaussian" => {
                if d.k.is_some() || d.c.is_some() {
                    return Err(Error::InvalidDescriptor("gaussian takes only alpha".into()));
                }
                Variant::Gaussian {
                    alpha: d.alpha.ok_or_else(|| missing("alpha"))?,
                }
            }
            other => {
                return Err(Error::InvalidDescriptor(format!("unknown family {other:?}")));
            }
        };
        CardinalInterpolator::new(d.n, variant)
    }
}

impl From<CardinalInterpolator> for Descriptor {
    fn from(phi: CardinalInterpolator) -> Self {
        let (family, k, alpha, c) = match phi.variant {
            Variant::Polyharmonic { k } => ("polyharmonic", Some(k), None, None),
            Variant::GeneralizedMultiquadric { alpha, c } => ("gmq", None, Some(alpha), Some(c)),
            Variant::Gaussian { alpha } => ("gaussian", None, Some(alpha), None),
        };
        Descriptor {
            family: family.to_string(),
            n: phi.dim,
            k,
            alpha,
            c,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specfun::bessel_k;

    fn poly(k: u32) -> CardinalInterpolator {
        CardinalInterpolator::polyharmonic(1, k).unwrap()
    }

    #[test]
    fn invariants_rejected() {
        assert!(CardinalInterpolator::polyharmonic(2, 1).is_err());
        assert!(CardinalInterpolator::polyharmonic(3, 1).is_err());
        assert!(CardinalInterpolator::polyharmonic(2, 2).is_ok());
        assert!(CardinalInterpolator::multiquadric(1, 1.0, 1.0).is_err());
        assert!(CardinalInterpolator::multiquadric(1, 0.4, 1.0).is_err());
        assert!(CardinalInterpolator::multiquadric(1, 0.5, 0.0).is_err());
        assert!(CardinalInterpolator::gaussian(1, 0.5).is_err());
        assert!(CardinalInterpolator::gaussian(4, 1.0).is_err());
    }

    #[test]
    fn symbol_examples() {
        let s = poly(1).symbol(&[PI]).unwrap().finite().unwrap();
        assert!((s - 0.101_321_2).abs() < 1e-7);
        let g = CardinalInterpolator::gaussian(1, 1.0).unwrap();
        assert_eq!(g.symbol(&[0.0]).unwrap(), SymbolValue::Finite(1.0));
        let m = CardinalInterpolator::multiquadric(1, 0.5, 1.0).unwrap();
        let v = m.symbol(&[1.0]).unwrap().finite().unwrap();
        let k1 = bessel_k(1.0, 1.0, &BesselEvalConfig::default()).unwrap();
        assert!(((v - k1) / k1).abs() < 1e-12);
        assert!((v - 0.601_907_2).abs() < 1e-7);
        assert!(poly(1).symbol(&[0.0]).unwrap().is_infinite());
        assert!(m.symbol(&[0.0]).unwrap().is_infinite());
    }

    #[test]
    fn log_symbol_examples() {
        assert!((poly(2).log_symbol(&[10.0]).unwrap() + 4.0 * 10f64.ln()).abs() < 1e-12);
        let g = CardinalInterpolator::gaussian(2, 1.0).unwrap();
        assert_eq!(g.log_symbol(&[3.0, 4.0]).unwrap(), -25.0);
        let m = CardinalInterpolator::multiquadric(1, 0.5, 1.0).unwrap();
        let expect = -(200f64.ln()) - 200.0 + 0.5 * (PI / 400.0).ln() + (1.0 + 3.0 / 1600.0f64).ln();
        // the expansion is truncated after one term; next term is O(1e-5)
        assert!((m.log_symbol(&[200.0]).unwrap() - expect).abs() < 1e-4);
        assert!(poly(1).log_symbol(&[0.0]).is_err());
        assert!(m.log_symbol(&[1e4]).unwrap().is_finite());
    }

    #[test]
    fn m_ratio_examples() {
        assert!((poly(1).m_ratio(&[1], &[PI]).unwrap() - 1.0 / 9.0).abs() < 1e-15);
        assert!((poly(2).m_ratio(&[1], &[PI]).unwrap() - 1.0 / 81.0).abs() < 1e-15);
        let g = CardinalInterpolator::gaussian(1, 1.0).unwrap();
        let v = g.m_ratio(&[1], &[0.0]).unwrap();
        assert!(((v - (-4.0 * PI * PI).exp()) / v).abs() < 1e-12);
        assert_eq!(poly(1).m_ratio(&[1], &[0.0]).unwrap(), 0.0);
        assert!(poly(1).m_ratio(&[0], &[0.1]).is_err());
        assert!(poly(1).m_ratio(&[1], &[3.5]).is_err());
    }

    #[test]
    fn m_bound_examples() {
        assert!((m_bound(&poly(1), &[2]).unwrap() - 1.0 / 9.0).abs() < 1e-15);
        assert_eq!(m_bound(&poly(1), &[1]).unwrap(), 1.0);
        assert_eq!(m_bound(&poly(1), &[-1]).unwrap(), 1.0);
        // grid supremum oracle: reflection point gives exactly 1
        let g = CardinalInterpolator::gaussian(1, 1.0).unwrap();
        let b = m_bound(&g, &[1]).unwrap();
        assert!((b - M_BOUND_SAFETY).abs() < 1e-12);
        let b2 = m_bound(&g, &[2]).unwrap();
        let sup2 = (-(9.0 - 1.0) * PI * PI).exp();
        assert!(b2 >= sup2 && b2 <= 1.02 * sup2);
    }

    #[test]
    fn m_bound_dominates_grid_in_2d() {
        let phi = CardinalInterpolator::polyharmonic(2, 2).unwrap();
        let j = [1, -1];
        let b = m_bound(&phi, &j).unwrap();
        let mut worst: f64 = 0.0;
        for a in 0..=40 {
            for c in 0..=40 {
                let xi = [-PI + 2.0 * PI * a as f64 / 40.0, -PI + 2.0 * PI * c as f64 / 40.0];
                worst = worst.max(phi.m_ratio(&j, &xi).unwrap());
            }
        }
        assert!(b >= worst);
    }

    fn brute_tail(phi: &CardinalInterpolator, xi: f64, first: i64, last: i64) -> f64 {
        let mut s = 0.0;
        for j in (first..=last).rev() {
            for sj in [j, -j] {
                let y = xi - TWO_PI * sj as f64;
                s += phi.symbol_pow_at_norm_sq(y * y, 1).unwrap();
            }
        }
        s
    }

    #[test]
    fn envelope_dominates_brute_force() {
        let p1 = poly(1);
        let env = decay_envelope(&p1, 200.0 * PI + 1e-9).unwrap();
        for xi in [-PI, -1.0, 0.0, 2.0, PI] {
            let tail = brute_tail(&p1, xi, 101, 2_000_000);
            assert!(env >= tail, "{env} < {tail}");
        }
        assert!(env < 1e-3);
        let g = CardinalInterpolator::gaussian(1, 1.0).unwrap();
        let env = decay_envelope(&g, 4.0 * PI + 1e-9).unwrap();
        assert!(env >= brute_tail(&g, PI, 3, 10));
        assert!(env <= 2.0 * (-9.0 * PI * PI).exp());
        let m = CardinalInterpolator::multiquadric(1, 0.5, 1.0).unwrap();
        let env = decay_envelope(&m, 8.0 * PI).unwrap();
        assert!(env >= brute_tail(&m, PI, 5, 60));
    }

    #[test]
    fn envelope_monotone_and_vanishing() {
        for phi in [
            poly(1),
            poly(3),
            CardinalInterpolator::gaussian(1, 1.0).unwrap(),
            CardinalInterpolator::multiquadric(1, 1.5, 0.5).unwrap(),
            CardinalInterpolator::polyharmonic(3, 2).unwrap(),
        ] {
            let first = decay_envelope(&phi, 4.0 * PI).unwrap();
            let mut prev = first;
            for r in [8.0, 16.0, 64.0, 512.0, 4096.0] {
                let e = decay_envelope(&phi, r * PI).unwrap();
                assert!(e <= prev);
                prev = e;
            }
            // algebraic families decay like R^{n-2k}
            assert!(prev < 1e-2 * first);
        }
        assert!(decay_envelope(&poly(1), 3.0).is_err());
    }

    #[test]
    fn descriptor_json() {
        let m = CardinalInterpolator::multiquadric(2, 1.5, 0.75).unwrap();
        let s = serde_json::to_string(&m).unwrap();
        assert_eq!(s, r#"{"family":"gmq","n":2,"alpha":1.5,"c":0.75}"#);
        let back: CardinalInterpolator = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
        assert!(serde_json::from_str::<CardinalInterpolator>(r#"{"family":"polyharmonic","n":1}"#).is_err());
        assert!(serde_json::from_str::<CardinalInterpolator>(
            r#"{"family":"polyharmonic","n":1,"k":1,"c":2.0}"#
        )
        .is_err());
        assert!(serde_json::from_str::<CardinalInterpolator>(r#"{"family":"gaussian","n":1,"alpha":0.2}"#).is_err());
    }

    #[test]
    fn path_validation() {
        let base = CardinalInterpolator::multiquadric(1, 0.5, 1.0).unwrap();
        assert!(FamilyPath::new(base, ParameterAxis::MultiquadricOrder, vec![0.5]).is_err());
        assert!(FamilyPath::new(base, ParameterAxis::MultiquadricOrder, vec![1.5, 0.5]).is_err());
        assert!(FamilyPath::new(base, ParameterAxis::MultiquadricOrder, vec![0.5, 2.0]).is_err());
        assert!(FamilyPath::new(base, ParameterAxis::Gaussian, vec![1.0, 2.0]).is_err());
        let p = FamilyPath::new(base, ParameterAxis::MultiquadricShape, vec![1.0, 2.0, 4.0]).unwrap();
        assert_eq!(p.members().len(), 3);
        assert_eq!(
            p.first().variant(),
            Variant::GeneralizedMultiquadric { alpha: 0.5, c: 1.0 }
        );
    }
}
