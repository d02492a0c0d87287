//! Certified `2π`-lattice sums of symbols and the quotients built from them:
//! the fundamental symbol `L̂ = s / Σ_j s(·-2πj)`, the scaling symbol
//! `Φ̂ = s / (Σ_j s²(·-2πj))^{1/2}` and the Riesz ratio
//! `Q = Σ_j s(·-2πj) / (Σ_j s²(·-2πj))^{1/2}`.
//!
//! Truncation is certified: every [`PeriodizedValue`] carries a bound on the
//! neglected part. Sums over `‖j‖∞ ≤ J` use the envelope of
//! [`crate::families`] with `J` doubled from 8 until the bound falls under
//! `rel_tol · value`. One-dimensional polyharmonic sums decay only
//! algebraically, so their tails `Σ_{j>J} (2πj ∓ ξ)^{-2kp}` are added in
//! closed form through the Hurwitz zeta function instead, and the bound is
//! the Euler–Maclaurin remainder.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::families::{
    m_bound, m_tail_bound, norm_sq, tail_envelope, CardinalInterpolator, FamilyPath, Variant,
    M_BOUND_SAFETY,
};
use crate::lattice::{for_each_in_shell, nonzero_points_within, NeumaierSum};
use crate::parallel;
use crate::specfun::hurwitz_zeta;

pub(crate) const TWO_PI: f64 = 2.0 * PI;
pub(crate) const INITIAL_RADIUS: usize = 8;

/// Tolerance and truncation cap for lattice sums.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LatticeSumConfig {
    pub rel_tol: f64,
    /// Per-axis cap on the truncation radius `J`; `None` uses `10⁶` in one
    /// dimension and `10³` otherwise.
    pub radius_cap: Option<usize>,
}

impl Default for LatticeSumConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-12,
            radius_cap: None,
        }
    }
}

impl LatticeSumConfig {
    pub fn new(rel_tol: f64) -> Result<Self> {
        let cfg = Self {
            rel_tol,
            radius_cap: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Default tolerance for a dimension: `1e-12` on the line, `1e-6` above,
    /// where algebraic polyharmonic tails make tighter tolerances expensive.
    pub fn for_dim(dim: usize) -> Self {
        Self {
            rel_tol: if dim == 1 { 1e-12 } else { 1e-6 },
            radius_cap: None,
        }
    }

    pub fn with_radius_cap(mut self, cap: usize) -> Self {
        self.radius_cap = Some(cap);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(1e-14..=1e-6).contains(&self.rel_tol) {
            return Err(Error::Domain(format!(
                "lattice-sum rel_tol must lie in [1e-14, 1e-6], got {}",
                self.rel_tol
            )));
        }
        if self.radius_cap == Some(0) {
            return Err(Error::Domain("radius cap must be positive".into()));
        }
        Ok(())
    }

    pub fn cap(&self, dim: usize) -> usize {
        self.radius_cap
            .unwrap_or(if dim == 1 { 1_000_000 } else { 1_000 })
    }
}

/// A lattice sum `Σ_{j∈ℤⁿ} s^p(ξ - 2πj)` with its truncation certificate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PeriodizedValue {
    /// `+∞` when `singular`.
    #[serde(serialize_with = "finite_or_null")]
    pub value: f64,
    pub tail_bound: f64,
    pub truncation_radius: f64,
    pub terms_used: usize,
    /// The `j = 0` term is infinite (ξ on the lattice for a singular family).
    pub singular: bool,
}

fn finite_or_null<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_none()
    }
}

impl PeriodizedValue {
    fn singular() -> Self {
        Self {
            value: f64::INFINITY,
            tail_bound: 0.0,
            truncation_radius: 0.0,
            terms_used: 0,
            singular: true,
        }
    }
}

/// Map each coordinate into `[-π, π]` by subtracting a multiple of `2π`.
/// Coordinates already in range are returned unchanged.
pub fn reduce_to_cell(xi: &[f64]) -> Vec<f64> {
    xi.iter()
        .map(|&x| {
            if x.abs() <= PI {
                x
            } else {
                x - TWO_PI * (x / TWO_PI).round()
            }
        })
        .collect()
}

fn is_zero(y: &[f64]) -> bool {
    y.iter().all(|&v| v == 0.0)
}

fn in_central_cell(xi: &[f64]) -> bool {
    xi.iter().all(|x| x.abs() <= PI)
}

fn check_input(phi: &CardinalInterpolator, xi: &[f64]) -> Result<()> {
    if xi.len() != phi.dim() {
        return Err(Error::Domain(format!(
            "frequency has {} components, interpolator dimension is {}",
            xi.len(),
            phi.dim()
        )));
    }
    if xi.iter().any(|x| !x.is_finite()) {
        return Err(Error::Domain("frequency must be finite".into()));
    }
    Ok(())
}

/// Direct sum over `‖j‖∞ ≤ radius`, outermost shell first.
fn shell_sum(phi: &CardinalInterpolator, y: &[f64], p: u32, radius: usize) -> Result<f64> {
    let mut acc = NeumaierSum::new();
    let mut failure = None;
    let mut shifted = vec![0.0; y.len()];
    for m in (0..=radius).rev() {
        for_each_in_shell(y.len(), m, |j| {
            if failure.is_some() {
                return;
            }
            for ((d, &yi), &ji) in shifted.iter_mut().zip(y).zip(j) {
                *d = yi - TWO_PI * ji as f64;
            }
            match phi.symbol_pow_at_norm_sq(norm_sq(&shifted), p) {
                Ok(t) => acc += t,
                Err(e) => failure = Some(e),
            }
        });
    }
    match failure {
        Some(e) => Err(e),
        None => Ok(acc.value()),
    }
}

/// Lattice sum at a point already reduced to `[-π, π]ⁿ`.
pub(crate) fn lattice_sum(
    phi: &CardinalInterpolator,
    y: &[f64],
    p: u32,
    cfg: &LatticeSumConfig,
) -> Result<PeriodizedValue> {
    if phi.is_origin_singular() && is_zero(y) {
        return Ok(PeriodizedValue::singular());
    }
    let central = phi.symbol_pow_at_norm_sq(norm_sq(y), p)?;
    if !central.is_finite() {
        return Ok(PeriodizedValue::singular());
    }
    let dim = phi.dim();
    if let (Variant::Polyharmonic { k }, 1) = (phi.variant(), dim) {
        return polyharmonic_line_sum(phi, y[0], k * p, p);
    }

    let lower = shell_sum(phi, y, p, INITIAL_RADIUS.min(cfg.cap(dim)))?;
    if !(lower > 0.0) {
        return Err(Error::Overflow(format!(
            "lattice sum of {} at {y:?} underflows",
            phi.label()
        )));
    }
    let (radius, bound) = certified_radius(phi, p, lower, cfg)?;
    let value = if radius == INITIAL_RADIUS {
        lower
    } else {
        shell_sum(phi, y, p, radius)?
    };
    Ok(PeriodizedValue {
        value,
        tail_bound: bound,
        truncation_radius: TWO_PI * radius as f64,
        terms_used: (2 * radius + 1).pow(dim as u32),
        singular: false,
    })
}

/// Smallest radius `J = 8·2^i` (clamped to the cap) whose tail envelope is
/// below `rel_tol · lower`, with that envelope.
pub(crate) fn certified_radius(
    phi: &CardinalInterpolator,
    p: u32,
    lower: f64,
    cfg: &LatticeSumConfig,
) -> Result<(usize, f64)> {
    let cap = cfg.cap(phi.dim());
    let mut radius = INITIAL_RADIUS.min(cap).max(1);
    let mut bound = tail_envelope(phi, TWO_PI, radius + 1, p)?;
    while !(bound <= cfg.rel_tol * lower) {
        if radius >= cap {
            return Err(Error::ToleranceUnreachable {
                what: "lattice sum truncation",
                rel_tol: cfg.rel_tol,
                cap,
            });
        }
        radius = (2 * radius).min(cap);
        bound = tail_envelope(phi, TWO_PI, radius + 1, p)?;
    }
    Ok((radius, bound))
}

/// Both one-sided tails `Σ_{j>8} (2πj ∓ y)^{-2q}` and their remainder bound.
pub(crate) fn polyharmonic_line_tails(y: f64, q: u32) -> (f64, f64) {
    let s = 2.0 * q as f64;
    let scale = TWO_PI.powi(-(2 * q as i32));
    let t = y / TWO_PI;
    let start = INITIAL_RADIUS as f64 + 1.0;
    let (right, right_err) = hurwitz_zeta(s, start - t);
    let (left, left_err) = hurwitz_zeta(s, start + t);
    (scale * right + scale * left, scale * (right_err + left_err))
}

/// `Σ_j |y - 2πj|^{-2q}` on the line: direct terms for `|j| ≤ 8` plus both
/// Hurwitz-zeta tails.
fn polyharmonic_line_sum(
    phi: &CardinalInterpolator,
    y: f64,
    q: u32,
    p: u32,
) -> Result<PeriodizedValue> {
    let radius = INITIAL_RADIUS;
    let (tails, tail_bound) = polyharmonic_line_tails(y, q);
    let mut acc = NeumaierSum::new();
    acc += tails;
    for m in (0..=radius as i64).rev() {
        for j in if m == 0 { vec![0] } else { vec![m, -m] } {
            let d = y - TWO_PI * j as f64;
            acc += phi.symbol_pow_at_norm_sq(d * d, p)?;
        }
    }
    Ok(PeriodizedValue {
        value: acc.value(),
        tail_bound,
        truncation_radius: TWO_PI * radius as f64,
        terms_used: 2 * radius + 1,
        singular: false,
    })
}

/// `Σ_{j∈ℤⁿ} s^p(ξ - 2πj)` for `p ∈ {1, 2}`; `ξ` is reduced to the central
/// cell first. On the lattice of a singular family the result is flagged
/// `singular` rather than overflowing.
pub fn periodize(
    phi: &CardinalInterpolator,
    xi: &[f64],
    p: u32,
    cfg: &LatticeSumConfig,
) -> Result<PeriodizedValue> {
    cfg.validate()?;
    check_input(phi, xi)?;
    if !(p == 1 || p == 2) {
        return Err(Error::Domain(format!("power must be 1 or 2, got {p}")));
    }
    lattice_sum(phi, &reduce_to_cell(xi), p, cfg)
}

/// Limit value of a quotient at a lattice point of a singular family:
/// 1 at the origin, 0 elsewhere.
fn lattice_limit(xi: &[f64]) -> f64 {
    if in_central_cell(xi) {
        1.0
    } else {
        0.0
    }
}

/// Fundamental symbol `L̂(ξ) ∈ [0, 1]`.
pub fn fundamental_symbol(
    phi: &CardinalInterpolator,
    xi: &[f64],
    cfg: &LatticeSumConfig,
) -> Result<f64> {
    let sums = periodize(phi, xi, 1, cfg)?;
    quotient(phi, xi, &sums, 1.0)
}

/// Scaling symbol `Φ̂(ξ) ∈ [0, 1]`.
pub fn scaling_symbol(phi: &CardinalInterpolator, xi: &[f64], cfg: &LatticeSumConfig) -> Result<f64> {
    let sums = periodize(phi, xi, 2, cfg)?;
    quotient(phi, xi, &sums, 0.5)
}

/// `s(ξ) / value^{exponent}` with the lattice convention.
pub(crate) fn quotient(
    phi: &CardinalInterpolator,
    xi: &[f64],
    sums: &PeriodizedValue,
    exponent: f64,
) -> Result<f64> {
    if sums.singular {
        return Ok(lattice_limit(xi));
    }
    let r2 = norm_sq(xi);
    let s = phi.symbol_pow_at_norm_sq(r2, 1)?;
    let denom = if exponent == 1.0 {
        sums.value
    } else {
        sums.value.sqrt()
    };
    Ok((s / denom).clamp(0.0, 1.0))
}

/// Riesz ratio `Q(ξ) ≥ 1`; equals 1 on the lattice of a singular family.
pub fn riesz_ratio(phi: &CardinalInterpolator, xi: &[f64], cfg: &LatticeSumConfig) -> Result<f64> {
    let first = periodize(phi, xi, 1, cfg)?;
    let second = periodize(phi, xi, 2, cfg)?;
    Ok(ratio_from_sums(&first, &second))
}

pub(crate) fn ratio_from_sums(first: &PeriodizedValue, second: &PeriodizedValue) -> f64 {
    if first.singular || second.singular {
        1.0
    } else {
        first.value / second.value.sqrt()
    }
}

/// Cheap bound `1.01 · s(π(2‖j‖∞ - 1)) / min_cell s`, valid for every
/// radially decreasing symbol.
/// `s(d_j) / min s` where `d_j` is the distance from the cell to `2πj`: a
/// rigorous but slightly loose bound for `M_j`.
fn distance_m_bound(phi: &CardinalInterpolator, j: &[i64]) -> Result<f64> {
    let d2: f64 = j
        .iter()
        .map(|&v| {
            let gap = (TWO_PI * v.unsigned_abs() as f64 - PI).max(0.0);
            gap * gap
        })
        .sum();
    Ok(M_BOUND_SAFETY * phi.symbol_pow_at_norm_sq(d2, 1)? / phi.cell_minimum()?)
}

/// Shells beyond which [`m_bounds`] stops searching grids in dimension `n`.
fn grid_search_radius(dim: usize) -> u64 {
    match dim {
        1 => u64::MAX,
        2 => 8,
        _ => 3,
    }
}

/// `M_j` bounds for `0 < ‖j‖∞ ≤ radius`, in shell order. Near shifts get a
/// grid supremum; far shifts, and shifts whose analytic bound is already
/// negligible, use the analytic bound.
pub(crate) fn m_bounds(phi: &CardinalInterpolator, radius: usize) -> Result<Vec<f64>> {
    let shifts = nonzero_points_within(phi.dim(), radius);
    let closed_form = matches!((phi.variant(), phi.dim()), (Variant::Polyharmonic { .. }, 1));
    let near = grid_search_radius(phi.dim());
    parallel::pool().install(|| {
        shifts
            .par_iter()
            .map(|j| {
                if closed_form {
                    return m_bound(phi, j);
                }
                let cheap = distance_m_bound(phi, j)?;
                let shell = j.iter().map(|v| v.unsigned_abs()).max().unwrap_or(0);
                if cheap < 1e-17 || shell > near {
                    Ok(cheap)
                } else {
                    Ok(m_bound(phi, j)?.min(cheap))
                }
            })
            .collect()
    })
}

/// Partial sums `Σ_{0<‖j‖∞≤J} M_j` for each requested `J`, plus the shell
/// bound of the remainder beyond each `J`.
pub fn m_partial_sums(phi: &CardinalInterpolator, radii: &[usize]) -> Result<Vec<(usize, f64, f64)>> {
    let max_radius = radii.iter().copied().max().unwrap_or(0);
    let bounds = m_bounds(phi, max_radius)?;
    let shifts = nonzero_points_within(phi.dim(), max_radius);
    radii
        .iter()
        .map(|&radius| {
            let mut acc = NeumaierSum::new();
            for (b, j) in bounds.iter().zip(&shifts).rev() {
                if j.iter().all(|v| v.unsigned_abs() as usize <= radius) {
                    acc += *b;
                }
            }
            Ok((radius, acc.value(), m_tail_bound(phi, radius)?))
        })
        .collect()
}

fn upper_constant_for(phi: &CardinalInterpolator, radius: usize) -> Result<f64> {
    if radius < 25 {
        return Err(Error::Domain(format!(
            "Riesz upper constant needs J >= 25, got {radius}"
        )));
    }
    let sums = m_partial_sums(phi, &[radius])?;
    let (_, partial, tail) = sums[0];
    Ok(1.0 + partial + tail)
}

/// `1 + Σ_{0<‖j‖∞≤J} M_j + tail`: an upper bound for the Riesz ratio over
/// the cell and over every member of the path.
pub fn riesz_upper_constant(path: &FamilyPath, radius: usize) -> Result<f64> {
    upper_constant_for(path.first(), radius)
}

/// [`riesz_upper_constant`] for a single interpolator.
pub fn riesz_upper_constant_member(phi: &CardinalInterpolator, radius: usize) -> Result<f64> {
    upper_constant_for(phi, radius)
}

/// What a [`SymbolGrid`] tabulates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SymbolKind {
    RawSymbol,
    Fundamental,
    Scaling,
    RieszRatio,
}

impl std::str::FromStr for SymbolKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" | "raw-symbol" => Ok(SymbolKind::RawSymbol),
            "fundamental" => Ok(SymbolKind::Fundamental),
            "scaling" => Ok(SymbolKind::Scaling),
            "riesz" | "riesz-ratio" => Ok(SymbolKind::RieszRatio),
            other => Err(Error::Domain(format!("unknown symbol kind {other:?}"))),
        }
    }
}

/// Tabulated symbol on `ξ_m = -Ω + 2Ωm/N` per axis, last axis fastest.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SymbolGrid {
    pub schema: u32,
    pub kind: SymbolKind,
    pub family: CardinalInterpolator,
    pub dimension: usize,
    pub samples_per_axis: usize,
    pub bandlimit: f64,
    /// Non-finite entries (the raw singular symbol at the origin) serialize
    /// as `null`.
    #[serde(serialize_with = "values_or_null")]
    pub values: Vec<f64>,
}

fn values_or_null<S: Serializer>(v: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|x| if x.is_finite() { Some(*x) } else { None }))
}

impl SymbolGrid {
    pub fn coordinate(&self, m: usize) -> f64 {
        grid_coordinate(self.bandlimit, self.samples_per_axis, m)
    }

    /// Multi-index of flat position `flat` (last axis fastest).
    pub fn index_of(&self, flat: usize) -> Vec<usize> {
        unflatten(flat, self.samples_per_axis, self.dimension)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for axis in 1..=self.dimension {
            let _ = write!(out, "xi_{axis},");
        }
        out.push_str("value\n");
        for (flat, v) in self.values.iter().enumerate() {
            for m in self.index_of(flat) {
                let _ = write!(out, "{},", self.coordinate(m));
            }
            let _ = writeln!(out, "{v}");
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

pub(crate) fn grid_coordinate(bandlimit: f64, samples: usize, m: usize) -> f64 {
    // Ω(2m - N)/N is exact on the lattice points when N is a power of two.
    bandlimit * (2.0 * m as f64 - samples as f64) / samples as f64
}

pub(crate) fn unflatten(mut flat: usize, per_axis: usize, dim: usize) -> Vec<usize> {
    let mut idx = vec![0; dim];
    for axis in (0..dim).rev() {
        idx[axis] = flat % per_axis;
        flat /= per_axis;
    }
    idx
}

/// Evaluates `f` once per orbit of `points` under sign changes and
/// permutations of coordinates, at the representative with sorted absolute
/// coordinates. Only valid for `f` invariant under that group, as lattice
/// sums of radial symbols are.
pub(crate) fn map_orbits<T, F>(points: &[Vec<f64>], f: F) -> Result<Vec<T>>
where
    T: Clone + Send,
    F: Fn(&[f64]) -> Result<T> + Sync,
{
    let mut keys: BTreeMap<Vec<u64>, usize> = BTreeMap::new();
    let mut unique: Vec<Vec<f64>> = Vec::new();
    let mut slot = Vec::with_capacity(points.len());
    for y in points {
        let mut rep: Vec<f64> = y.iter().map(|v| v.abs()).collect();
        rep.sort_by(f64::total_cmp);
        let key: Vec<u64> = rep.iter().map(|v| v.to_bits()).collect();
        let next = unique.len();
        let idx = *keys.entry(key).or_insert_with(|| {
            unique.push(rep);
            next
        });
        slot.push(idx);
    }
    let computed: Vec<T> = parallel::pool().install(|| {
        unique
            .par_iter()
            .map(|y| f(y))
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(slot.into_iter().map(|i| computed[i].clone()).collect())
}

/// Lattice sums at many reduced points, computed once per orbit.
pub(crate) fn sums_by_residue(
    phi: &CardinalInterpolator,
    points: &[Vec<f64>],
    p: u32,
    cfg: &LatticeSumConfig,
) -> Result<Vec<PeriodizedValue>> {
    map_orbits(points, |y| lattice_sum(phi, y, p, cfg))
}

/// Tabulate `kind` on the `N`-point-per-axis grid of `[-Ω, Ω)ⁿ`.
pub fn sample_grid(
    phi: &CardinalInterpolator,
    kind: SymbolKind,
    bandlimit: f64,
    samples: usize,
    cfg: &LatticeSumConfig,
) -> Result<SymbolGrid> {
    cfg.validate()?;
    if !samples.is_power_of_two() || samples < 2 {
        return Err(Error::Domain(format!(
            "samples per axis must be a power of two >= 2, got {samples}"
        )));
    }
    let multiple = bandlimit / PI;
    if !(bandlimit > 0.0) || (multiple - multiple.round()).abs() > 1e-9 * multiple.max(1.0) {
        return Err(Error::Domain(format!(
            "bandlimit must be a positive multiple of pi, got {bandlimit}"
        )));
    }
    let dim = phi.dim();
    let total = samples.pow(dim as u32);
    let points: Vec<Vec<f64>> = (0..total)
        .map(|flat| {
            unflatten(flat, samples, dim)
                .into_iter()
                .map(|m| grid_coordinate(bandlimit, samples, m))
                .collect()
        })
        .collect();
    let reduced: Vec<Vec<f64>> = points.iter().map(|xi| reduce_to_cell(xi)).collect();

    let values: Vec<f64> = match kind {
        SymbolKind::RawSymbol => points
            .iter()
            .map(|xi| {
                let r2 = norm_sq(xi);
                if r2 == 0.0 && phi.is_origin_singular() {
                    Ok(f64::INFINITY)
                } else {
                    phi.symbol_pow_at_norm_sq(r2, 1)
                }
            })
            .collect::<Result<_>>()?,
        SymbolKind::Fundamental | SymbolKind::Scaling => {
            let (p, exponent) = if kind == SymbolKind::Fundamental {
                (1, 1.0)
            } else {
                (2, 0.5)
            };
            let sums = sums_by_residue(phi, &reduced, p, cfg)?;
            points
                .iter()
                .zip(&sums)
                .map(|(xi, pv)| quotient(phi, xi, pv, exponent))
                .collect::<Result<_>>()?
        }
        SymbolKind::RieszRatio => {
            let first = sums_by_residue(phi, &reduced, 1, cfg)?;
            let second = sums_by_residue(phi, &reduced, 2, cfg)?;
            first
                .iter()
                .zip(&second)
                .map(|(a, b)| ratio_from_sums(a, b))
                .collect()
        }
    };

    match kind {
        SymbolKind::Fundamental | SymbolKind::Scaling => {
            debug_assert!(values.iter().all(|v| (0.0..=1.0).contains(v)));
        }
        SymbolKind::RieszRatio => {
            if let Some(bad) = values.iter().find(|&&v| v < 1.0 - 1e-12) {
                return Err(Error::Domain(format!(
                    "Riesz ratio {bad} below the lower bound 1"
                )));
            }
        }
        SymbolKind::RawSymbol => {}
    }

    Ok(SymbolGrid {
        schema: 1,
        kind,
        family: *phi,
        dimension: dim,
        samples_per_axis: samples,
        bandlimit,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(k: u32) -> CardinalInterpolator {
        CardinalInterpolator::polyharmonic(1, k).unwrap()
    }

    fn cfg() -> LatticeSumConfig {
        LatticeSumConfig::default()
    }

    #[test]
    fn cotangent_spot_values() {
        let p1 = periodize(&poly(1), &[PI], 1, &cfg()).unwrap();
        assert!((p1.value - 0.25).abs() < 1e-14);
        assert!(p1.tail_bound <= 1e-12 * p1.value);
        let p2 = periodize(&poly(1), &[PI], 2, &cfg()).unwrap();
        assert!((p2.value - 1.0 / 48.0).abs() < 1e-15);
    }

    #[test]
    fn gaussian_origin_sum() {
        let g = CardinalInterpolator::gaussian(1, 1.0).unwrap();
        let pv = periodize(&g, &[0.0], 1, &cfg()).unwrap();
        assert_eq!(pv.value, 1.0 + 2.0 * (-4.0 * PI * PI).exp());
        assert!(!pv.singular);
    }

    #[test]
    fn singular_flag_at_lattice_points() {
        for xi in [0.0, TWO_PI, -2.0 * TWO_PI] {
            let pv = periodize(&poly(1), &[xi], 1, &cfg()).unwrap();
            assert!(pv.singular, "{xi}");
        }
        assert_eq!(fundamental_symbol(&poly(1), &[0.0], &cfg()).unwrap(), 1.0);
        assert_eq!(fundamental_symbol(&poly(1), &[TWO_PI], &cfg()).unwrap(), 0.0);
        assert_eq!(scaling_symbol(&poly(3), &[0.0], &cfg()).unwrap(), 1.0);
        assert_eq!(riesz_ratio(&poly(2), &[0.0], &cfg()).unwrap(), 1.0);
    }

    #[test]
    fn quotient_spot_values() {
        let l = fundamental_symbol(&poly(1), &[PI], &cfg()).unwrap();
        assert!((l - 4.0 / (PI * PI)).abs() < 1e-14);
        let phi = scaling_symbol(&poly(1), &[PI], &cfg()).unwrap();
        assert!((phi - 4.0 * 3f64.sqrt() / (PI * PI)).abs() < 1e-14);
        let q = riesz_ratio(&poly(1), &[PI], &cfg()).unwrap();
        assert!((q - 3f64.sqrt()).abs() < 1e-14);
        let g = CardinalInterpolator::gaussian(1, 1.0).unwrap();
        // 1 - L̂(0) ≈ 2e^{-4π²} is below double resolution
        let l0 = fundamental_symbol(&g, &[0.0], &cfg()).unwrap();
        assert!(l0 <= 1.0 && l0 > 1.0 - 1e-15);
    }

    #[test]
    fn tolerance_unreachable_in_2d() {
        let phi = CardinalInterpolator::polyharmonic(2, 2).unwrap();
        let cfg = LatticeSumConfig::new(1e-12).unwrap().with_radius_cap(64);
        assert!(matches!(
            periodize(&phi, &[1.0, 2.0], 1, &cfg),
            Err(Error::ToleranceUnreachable { .. })
        ));
    }

    #[test]
    fn bad_inputs() {
        assert!(periodize(&poly(1), &[1.0], 3, &cfg()).is_err());
        assert!(periodize(&poly(1), &[1.0, 2.0], 1, &cfg()).is_err());
        assert!(periodize(&poly(1), &[f64::NAN], 1, &cfg()).is_err());
        assert!(LatticeSumConfig::new(1e-3).is_err());
        assert!(LatticeSumConfig::new(1e-16).is_err());
    }

    #[test]
    fn upper_constant_polyharmonic_k2() {
        let c = riesz_upper_constant_member(&poly(2), 25).unwrap();
        // 1 + 2 Σ_{j≥1} (2j-1)^{-4} = 1 + π⁴/48
        let exact = 1.0 + PI.powi(4) / 48.0;
        assert!(c >= exact && c < exact + 1e-6, "{c} vs {exact}");
        assert!(riesz_upper_constant_member(&poly(2), 10).is_err());
    }

    #[test]
    fn grid_kinds() {
        let g = sample_grid(&poly(1), SymbolKind::Fundamental, 4.0 * PI, 1024, &cfg()).unwrap();
        let (argmax, max) = g
            .values
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        assert_eq!(max, 1.0);
        assert_eq!(g.coordinate(argmax), 0.0);
        let r = sample_grid(&poly(1), SymbolKind::RieszRatio, 4.0 * PI, 1024, &cfg()).unwrap();
        assert!(r.values.iter().all(|&v| v >= 1.0 - 1e-12));
        let gauss = CardinalInterpolator::gaussian(1, 1.0).unwrap();
        let s = sample_grid(&gauss, SymbolKind::Scaling, 4.0 * PI, 64, &cfg()).unwrap();
        // ξ = π sits at index 40, ξ = 2π at 48
        assert!((s.values[40] - 0.5f64.sqrt()).abs() < 1e-12);
        assert!(s.values[48] < 1e-15);
        let raw = sample_grid(&poly(1), SymbolKind::RawSymbol, 2.0 * PI, 8, &cfg()).unwrap();
        assert!(raw.values[4].is_infinite());
        assert!(raw.to_json().unwrap().contains("null"));
        assert!(sample_grid(&poly(1), SymbolKind::Scaling, 4.0 * PI, 1000, &cfg()).is_err());
        assert!(sample_grid(&poly(1), SymbolKind::Scaling, 3.0, 1024, &cfg()).is_err());
    }

    #[test]
    fn grid_csv_layout() {
        let phi = CardinalInterpolator::polyharmonic(2, 2).unwrap();
        let g = sample_grid(&phi, SymbolKind::RawSymbol, PI, 2, &LatticeSumConfig::for_dim(2)).unwrap();
        let csv = g.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "xi_1,xi_2,value");
        assert_eq!(lines.len(), 5);
        assert!(lines[1].starts_with(&format!("{},{},", -PI, -PI)));
        assert!(lines[4].ends_with(",inf"));
    }
}
