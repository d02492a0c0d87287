//! Spatial realization of the fundamental function `L` and the scaling
//! function `Φ`: inverse-Fourier synthesis on uniform grids, cardinal
//! interpolation from the sampled table, Gram matrices of integer translates,
//! the change of basis between `{L(·-j)}` and `{Φ(·-j)}`, and a two-scale
//! refinement probe.
//!
//! Synthesis evaluates the trapezoidal rule for
//! `(2π)^{-n} ∫_{[-Ω,Ω]ⁿ} Ŝ(ξ) e^{i⟨x,ξ⟩} dξ` at `x ∈ ℤⁿ/M`. Because
//! `e^{i⟨x,ξ⟩}` is `2πM`-periodic in each coordinate on that grid, the
//! spectrum is first folded modulo `2πM` and a single FFT of length `M·P`
//! per axis finishes the job; `P` is the spatial period of the quadrature
//! and is chosen well above the half-width `T`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::families::{norm_sq, tail_envelope, CardinalInterpolator, Variant};
use crate::lattice::NeumaierSum;
use crate::parallel;
use crate::periodization::{
    certified_radius, lattice_sum, map_orbits, polyharmonic_line_tails, quotient, ratio_from_sums,
    reduce_to_cell,
    sums_by_residue, LatticeSumConfig, PeriodizedValue, INITIAL_RADIUS, TWO_PI,
};

/// Which generator to synthesize.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Generator {
    Fundamental,
    Scaling,
}

impl std::str::FromStr for Generator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fundamental" => Ok(Generator::Fundamental),
            "scaling" => Ok(Generator::Scaling),
            other => Err(Error::Domain(format!("unknown generator {other:?}"))),
        }
    }
}

impl Generator {
    /// Lattice-sum power in the denominator and the exponent applied to it.
    fn denominator(self) -> (u32, f64) {
        match self {
            Generator::Fundamental => (1, 1.0),
            Generator::Scaling => (2, 0.5),
        }
    }
}

/// Grid parameters for [`synthesize`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SynthesisParams {
    /// `Ω = πMK` for an integer `K ≥ 4`.
    pub bandlimit: f64,
    /// `M ≥ 8`, samples per unit length.
    pub samples_per_unit: usize,
    /// `T ≥ 4`; the grid covers `[-T, T]ⁿ`.
    pub halfwidth: usize,
}

/// Largest bandlimit accepted by [`synthesize`].
pub const MAX_BANDLIMIT: f64 = 65536.0 * PI;

impl SynthesisParams {
    pub fn new(bandlimit: f64, samples_per_unit: usize, halfwidth: usize) -> Self {
        Self {
            bandlimit,
            samples_per_unit,
            halfwidth,
        }
    }

    /// Defaults per dimension: `Ω = 2¹⁰π, M = 16, T = 16` on the line,
    /// `Ω = 256π, M = 8, T = 4` in the plane, `Ω = 32π, M = 8, T = 4` in space.
    pub fn default_for(dim: usize) -> Self {
        match dim {
            1 => Self::new(1024.0 * PI, 16, 16),
            2 => Self::new(256.0 * PI, 8, 4),
            _ => Self::new(32.0 * PI, 8, 4),
        }
    }

    fn bands(&self) -> Result<usize> {
        if self.samples_per_unit < 8 {
            return Err(Error::Domain(format!(
                "samples per unit must be >= 8, got {}",
                self.samples_per_unit
            )));
        }
        if self.halfwidth < 4 {
            return Err(Error::Domain(format!(
                "halfwidth must be >= 4, got {}",
                self.halfwidth
            )));
        }
        if !(self.bandlimit.is_finite() && self.bandlimit > 0.0) {
            return Err(Error::Domain(format!("bad bandlimit {}", self.bandlimit)));
        }
        if self.bandlimit > MAX_BANDLIMIT * (1.0 + 1e-12) {
            return Err(Error::ToleranceUnreachable {
                what: "synthesis bandlimit above 2^16 pi",
                rel_tol: 0.0,
                cap: 65536,
            });
        }
        let k = self.bandlimit / (PI * self.samples_per_unit as f64);
        let rounded = k.round();
        if (k - rounded).abs() > 1e-9 * k || rounded < 4.0 {
            return Err(Error::Domain(format!(
                "bandlimit must be pi*M*K with integer K >= 4 (M = {}), got {}",
                self.samples_per_unit, self.bandlimit
            )));
        }
        Ok(rounded as usize)
    }
}

/// Samples of `L` or `Φ` on `ℤⁿ/M ∩ [-T, T]ⁿ`, last axis fastest.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampledFunction {
    pub schema: u32,
    pub generator: Generator,
    pub family: CardinalInterpolator,
    pub dimension: usize,
    pub samples_per_unit: usize,
    pub halfwidth: usize,
    pub bandlimit: f64,
    pub synthesis_error_bound: f64,
    pub values: Vec<f64>,
}

impl SampledFunction {
    /// Samples per axis, `2TM + 1`.
    pub fn side(&self) -> usize {
        2 * self.halfwidth * self.samples_per_unit + 1
    }

    fn reach(&self) -> i64 {
        (self.halfwidth * self.samples_per_unit) as i64
    }

    /// Value at `x = l/M`, or `None` outside the table.
    pub fn at_index(&self, l: &[i64]) -> Option<f64> {
        if l.len() != self.dimension {
            return None;
        }
        let reach = self.reach();
        let side = self.side();
        let mut flat = 0usize;
        for &v in l {
            if v.abs() > reach {
                return None;
            }
            flat = flat * side + (v + reach) as usize;
        }
        Some(self.values[flat])
    }

    /// Grid multi-index of flat position `flat`.
    pub fn index_of(&self, mut flat: usize) -> Vec<i64> {
        let side = self.side();
        let mut idx = vec![0; self.dimension];
        for axis in (0..self.dimension).rev() {
            idx[axis] = (flat % side) as i64 - self.reach();
            flat /= side;
        }
        idx
    }

    pub fn coordinate(&self, l: i64) -> f64 {
        l as f64 / self.samples_per_unit as f64
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for axis in 1..=self.dimension {
            let _ = write!(out, "x_{axis},");
        }
        out.push_str("value\n");
        for (flat, v) in self.values.iter().enumerate() {
            for l in self.index_of(flat) {
                let _ = write!(out, "{},", self.coordinate(l));
            }
            let _ = writeln!(out, "{v}");
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    /// Riemann sum `M^{-n} Σ_l v(l/M)²`, an approximation of `‖·‖²_{L²}`.
    pub fn energy(&self) -> f64 {
        let mut acc = NeumaierSum::new();
        for v in &self.values {
            acc += v * v;
        }
        acc.value() / (self.samples_per_unit as f64).powi(self.dimension as i32)
    }
}

fn check_dim(phi: &CardinalInterpolator, dim: usize, what: &str) -> Result<()> {
    if dim != phi.dim() {
        return Err(Error::Domain(format!(
            "{what} has dimension {dim}, interpolator dimension is {}",
            phi.dim()
        )));
    }
    Ok(())
}

/// Multi-dimensional in-place FFT over a cube with `side` points per axis.
fn fft_nd(data: &mut [Complex<f64>], side: usize, dim: usize, inverse: bool) {
    let mut planner = FftPlanner::new();
    let fft = if inverse {
        planner.plan_fft_inverse(side)
    } else {
        planner.plan_fft_forward(side)
    };
    let mut line = vec![Complex::new(0.0, 0.0); side];
    for axis in 0..dim {
        let stride = side.pow((dim - 1 - axis) as u32);
        let block = stride * side;
        for start in 0..data.len() / side {
            let base = (start / stride) * block + start % stride;
            for (i, c) in line.iter_mut().enumerate() {
                *c = data[base + i * stride];
            }
            fft.process(&mut line);
            for (i, c) in line.iter().enumerate() {
                data[base + i * stride] = *c;
            }
        }
    }
}

fn unflatten(mut flat: usize, side: usize, dim: usize) -> Vec<usize> {
    let mut idx = vec![0; dim];
    for axis in (0..dim).rev() {
        idx[axis] = flat % side;
        flat /= side;
    }
    idx
}

/// Spatial period `P` of the quadrature. Translates at distance `P - T`
/// must be negligible on `[-T, T]ⁿ`: polyharmonic generators decay
/// exponentially (like `e^{-1.3|x|}` for `k = 2`); multiquadric ones only
/// algebraically, like `|x|^{-(4ν+1)}` with `ν = α + n/2`; Gaussian ones like
/// `e^{-|x|/(8α)}` (the periodized Gaussian has complex zeros at distance
/// `1/(8α)` from the real axis). Periods are powers of two, except for
/// multiquadrics in three or more variables, where the faster decay allows
/// a shorter multiple of 8 and the cost grows like `P³`.
fn spatial_period(phi: &CardinalInterpolator, halfwidth: usize) -> usize {
    match phi.variant() {
        Variant::Polyharmonic { .. } => (4 * halfwidth).next_power_of_two(),
        Variant::GeneralizedMultiquadric { .. } if phi.dim() >= 3 => (6 * halfwidth).div_ceil(8) * 8,
        Variant::GeneralizedMultiquadric { .. } => (8 * halfwidth).next_power_of_two(),
        Variant::Gaussian { alpha } => {
            (4 * halfwidth + (320.0 * alpha).ceil() as usize).next_power_of_two()
        }
    }
}

/// Signed frequency index of storage position `u` on an axis of length `n`.
fn signed(u: usize, n: usize) -> i64 {
    if u < n / 2 {
        u as i64
    } else {
        u as i64 - n as i64
    }
}

/// Flat index of the point reflection `u ↦ -u (mod n)` in every axis.
fn mirror_flat(flat: usize, n: usize, dim: usize) -> usize {
    unflatten(flat, n, dim)
        .into_iter()
        .fold(0, |acc, u| acc * n + (n - u) % n)
}

/// Band-tail bound `Σ_{‖j‖∞ ≥ m0} sup s(ξ - 2πj) / min s` for the cells
/// beyond `‖ξ‖∞ = πMK`.
fn band_tail(phi: &CardinalInterpolator, m: usize, bands: usize) -> Result<f64> {
    // Cells with ‖j‖∞ ≥ m0 cover ‖ξ‖∞ ≥ 2π m0 - π; both quotients are at
    // most s(ξ) / min_cell s there.
    let edge = PI * (m * bands) as f64;
    let first_shell = ((edge + PI) / TWO_PI).floor() as usize;
    Ok(tail_envelope(phi, TWO_PI, first_shell.max(2), 1)? / phi.cell_minimum()?)
}

/// Bands actually summed: exponentially decaying symbols stop once the
/// remaining mass is negligible, which leaves the result unchanged in
/// double precision.
fn effective_bands(phi: &CardinalInterpolator, m: usize, bands: usize) -> Result<usize> {
    if let Variant::Polyharmonic { .. } = phi.variant() {
        return Ok(bands);
    }
    for b in 1..bands {
        if band_tail(phi, m, b)? <= 1e-18 {
            return Ok(b);
        }
    }
    Ok(bands)
}

/// Synthesize `L` (or `Φ`) on `ℤⁿ/M ∩ [-T, T]ⁿ`.
///
/// For polyharmonic symbols on the line, homogeneity gives the alias sum
/// `Σ_q s(ξ + 2πMq) = M^{-2k} Σ_q s(ξ/M + 2πq)` in closed form, so every
/// alias, including those beyond `Ω`, is folded in exactly. Otherwise the
/// spectrum is truncated at `Ω` (or earlier, once the symbol is negligible)
/// and the neglected mass enters `synthesis_error_bound`. Spatial aliasing
/// from translates at distance `P ≥ 4T` is not part of the bound.
///
/// Gaussian generators in several variables are tensor products of the
/// one-dimensional ones and are assembled that way.
pub fn synthesize(
    phi: &CardinalInterpolator,
    generator: Generator,
    params: &SynthesisParams,
    cfg: &LatticeSumConfig,
) -> Result<SampledFunction> {
    cfg.validate()?;
    let dim = phi.dim();
    if let (Variant::Gaussian { alpha }, true) = (phi.variant(), dim > 1) {
        let line = CardinalInterpolator::gaussian(1, alpha)?;
        let factor = synthesize(&line, generator, params, cfg)?;
        return Ok(tensor_power(phi, &factor, dim));
    }
    let bands = effective_bands(phi, params.samples_per_unit, params.bands()?)?;
    let m = params.samples_per_unit;
    let period = spatial_period(phi, params.halfwidth);
    let folded = m * period;
    let step = TWO_PI / period as f64;
    let (p, exponent) = generator.denominator();

    // Denominator lattice sums, one per residue of ξ modulo 2π.
    let residues: Vec<Vec<f64>> = (0..period.pow(dim as u32))
        .map(|flat| {
            unflatten(flat, period, dim)
                .into_iter()
                .map(|e| step * signed(e, period) as f64)
                .collect()
        })
        .collect();
    let denominators = sums_by_residue(phi, &residues, p, cfg)?;

    let closed_form = match (phi.variant(), dim) {
        (Variant::Polyharmonic { k }, 1) => Some(k),
        _ => None,
    };
    let table = match closed_form {
        Some(_) => None,
        None => symbol_table(phi, dim, folded * bands / 2, step)?,
    };

    // Folded spectrum; storage index 0 is ξ = 0 on every axis.
    let total = folded.pow(dim as u32);
    let cells: Vec<(f64, f64)> = parallel::pool().install(|| {
        (0..total)
            .into_par_iter()
            .map(|flat| -> Result<(f64, f64)> {
                let r: Vec<i64> = unflatten(flat, folded, dim)
                    .into_iter()
                    .map(|u| signed(u, folded))
                    .collect();
                let res_flat = r.iter().fold(0, |acc, &ri| {
                    acc * period + ri.rem_euclid(period as i64) as usize
                });
                let den = &denominators[res_flat];
                match closed_form {
                    Some(k) => folded_polyharmonic_line(phi, k, r[0], m, folded, den, exponent, cfg),
                    None => folded_truncated(phi, &r, folded, bands, step, table.as_deref(), den, exponent),
                }
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let weight = (step / TWO_PI).powi(dim as i32);
    let mut propagated = NeumaierSum::new();
    for (g, rel) in &cells {
        propagated += weight * g.abs() * rel;
    }
    let mut spectrum: Vec<Complex<f64>> =
        cells.iter().map(|(g, _)| Complex::new(*g, 0.0)).collect();
    for flat in 0..total {
        let mirror = mirror_flat(flat, folded, dim);
        if mirror > flat {
            let avg = 0.5 * (spectrum[flat].re + spectrum[mirror].re);
            spectrum[flat].re = avg;
            spectrum[mirror].re = avg;
        }
    }
    fft_nd(&mut spectrum, folded, dim, true);

    let reach = (params.halfwidth * m) as i64;
    let side = 2 * params.halfwidth * m + 1;
    let mut values = vec![0.0; side.pow(dim as u32)];
    let mut worst_imag = 0.0f64;
    let mut largest = 0.0f64;
    for (flat, v) in values.iter_mut().enumerate() {
        let src = unflatten(flat, side, dim).into_iter().fold(0, |acc, u| {
            acc * folded + (u as i64 - reach).rem_euclid(folded as i64) as usize
        });
        let c = spectrum[src] * weight;
        worst_imag = worst_imag.max(c.im.abs());
        largest = largest.max(c.re.abs());
        *v = c.re;
    }
    if worst_imag > 1e-12 * largest.max(1.0) {
        return Err(Error::Convergence(format!(
            "imaginary residue {worst_imag:e} after synthesis"
        )));
    }
    // Exact evenness: average each sample with its mirror image.
    let len = values.len();
    for flat in 0..len / 2 {
        let mirror = len - 1 - flat;
        let avg = 0.5 * (values[flat] + values[mirror]);
        values[flat] = avg;
        values[mirror] = avg;
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Overflow("non-finite synthesized sample".into()));
    }

    let band_tail = if closed_form.is_some() {
        0.0
    } else {
        band_tail(phi, m, bands)?
    };

    Ok(SampledFunction {
        schema: 1,
        generator,
        family: *phi,
        dimension: dim,
        samples_per_unit: m,
        halfwidth: params.halfwidth,
        bandlimit: params.bandlimit,
        synthesis_error_bound: band_tail + propagated.value(),
        values,
    })
}

/// `f(x_1) ⋯ f(x_n)` on the same grid as the one-dimensional `factor`.
fn tensor_power(phi: &CardinalInterpolator, factor: &SampledFunction, dim: usize) -> SampledFunction {
    let side = factor.side();
    let values = (0..side.pow(dim as u32))
        .map(|flat| {
            unflatten(flat, side, dim)
                .into_iter()
                .map(|u| factor.values[u])
                .product()
        })
        .collect();
    let e = factor.synthesis_error_bound;
    let peak = factor.values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    SampledFunction {
        family: *phi,
        dimension: dim,
        synthesis_error_bound: dim as f64 * e * (peak + e).powi(dim as i32 - 1),
        values,
        ..factor.clone()
    }
}

/// `Σ_q Ŝ(ξ_r + 2πMq)` over all `q` for a polyharmonic symbol on the line,
/// with its relative error.
#[allow(clippy::too_many_arguments)]
fn folded_polyharmonic_line(
    phi: &CardinalInterpolator,
    k: u32,
    r: i64,
    m: usize,
    folded: usize,
    den: &PeriodizedValue,
    exponent: f64,
    cfg: &LatticeSumConfig,
) -> Result<(f64, f64)> {
    if r == 0 {
        // Only the origin alias survives: Ŝ(0) = 1, Ŝ(2πj) = 0 otherwise.
        return Ok((1.0, 0.0));
    }
    if den.singular {
        return Ok((0.0, 0.0));
    }
    // ξ_r / M = 2πr / (MP) lies in [-π, π).
    let num = lattice_sum(phi, &[TWO_PI * r as f64 / folded as f64], 1, cfg)?;
    let denom = if exponent == 1.0 {
        den.value
    } else {
        den.value.sqrt()
    };
    let value = (m as f64).powi(-2 * k as i32) * num.value / denom;
    let rel = num.tail_bound / num.value + exponent * den.tail_bound / den.value;
    Ok((value, rel))
}

/// Largest symbol table built, in entries.
const TABLE_LIMIT: usize = 1 << 22;

/// `s(step·√N)` for every integer `N` a spectral node can reach, when that
/// is cheaper than evaluating the symbol node by node.
fn symbol_table(
    phi: &CardinalInterpolator,
    dim: usize,
    max_index: usize,
    step: f64,
) -> Result<Option<Vec<f64>>> {
    let len = dim * max_index * max_index + 1;
    if dim == 1 || len > TABLE_LIMIT {
        return Ok(None);
    }
    let step_sq = step * step;
    let table = parallel::pool().install(|| {
        (0..len)
            .into_par_iter()
            .map(|n| match n {
                0 => Ok(f64::NAN),
                _ => phi.symbol_pow_at_norm_sq(step_sq * n as f64, 1),
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(Some(table))
}

/// In-band alias sum `Σ_{ξ ≡ ξ_r, ‖ξ‖∞ < Ω} Ŝ(ξ)` with its relative error.
#[allow(clippy::too_many_arguments)]
fn folded_truncated(
    phi: &CardinalInterpolator,
    r: &[i64],
    folded: usize,
    bands: usize,
    step: f64,
    table: Option<&[f64]>,
    den: &PeriodizedValue,
    exponent: f64,
) -> Result<(f64, f64)> {
    let dim = r.len();
    let n = folded as i64;
    let lo = -n * bands as i64 / 2;
    // Alias indices along each axis; the node is ξ = step·(i_1, …, i_n).
    let axes: Vec<Vec<i64>> = r
        .iter()
        .map(|&ri| {
            let first = ri - n * (ri - lo).div_euclid(n);
            (0..bands as i64).map(|t| first + n * t).collect()
        })
        .collect();
    let denom = if exponent == 1.0 { den.value } else { den.value.sqrt() };
    let mut acc = NeumaierSum::new();
    let mut idx = vec![0i64; dim];
    let mut xi = vec![0.0; dim];
    for flat in 0..bands.pow(dim as u32) {
        let mut rest = flat;
        for axis in (0..dim).rev() {
            idx[axis] = axes[axis][rest % bands];
            rest /= bands;
        }
        let norm_index = idx.iter().map(|i| (i * i) as usize).sum::<usize>();
        acc += match table {
            Some(t) if norm_index > 0 && !den.singular => (t[norm_index] / denom).clamp(0.0, 1.0),
            _ => {
                for (x, &i) in xi.iter_mut().zip(&idx) {
                    *x = step * i as f64;
                }
                quotient(phi, &xi, den, exponent)?
            }
        };
    }
    let rel = if den.singular {
        0.0
    } else {
        exponent * den.tail_bound / den.value
    };
    Ok((acc.value(), rel))
}

/// Finitely supported sequence on `ℤⁿ` with no stored zeros.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CoefficientWire", into = "CoefficientWire")]
pub struct CoefficientSequence {
    dimension: usize,
    entries: BTreeMap<Vec<i64>, f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CoefficientWire {
    dimension: usize,
    entries: Vec<CoefficientEntry>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CoefficientEntry {
    index: Vec<i64>,
    value: f64,
}

impl TryFrom<CoefficientWire> for CoefficientSequence {
    type Error = Error;

    fn try_from(w: CoefficientWire) -> Result<Self> {
        CoefficientSequence::new(w.dimension, w.entries.into_iter().map(|e| (e.index, e.value)))
    }
}

impl From<CoefficientSequence> for CoefficientWire {
    fn from(c: CoefficientSequence) -> Self {
        CoefficientWire {
            dimension: c.dimension,
            entries: c
                .entries
                .into_iter()
                .map(|(index, value)| CoefficientEntry { index, value })
                .collect(),
        }
    }
}

impl CoefficientSequence {
    /// Builds a sequence, dropping zero values. Repeated indices and
    /// non-finite values are rejected.
    pub fn new(dimension: usize, pairs: impl IntoIterator<Item = (Vec<i64>, f64)>) -> Result<Self> {
        if !(1..=3).contains(&dimension) {
            return Err(Error::Domain(format!("dimension must be 1..=3, got {dimension}")));
        }
        let mut entries = BTreeMap::new();
        for (index, value) in pairs {
            if index.len() != dimension {
                return Err(Error::Domain(format!(
                    "index {index:?} does not have {dimension} components"
                )));
            }
            if !value.is_finite() {
                return Err(Error::Domain(format!("coefficient at {index:?} is not finite")));
            }
            if entries.contains_key(&index) {
                return Err(Error::Domain(format!("index {index:?} given twice")));
            }
            if value != 0.0 {
                entries.insert(index, value);
            }
        }
        Ok(Self { dimension, entries })
    }

    /// The unit impulse at the origin.
    pub fn delta(dimension: usize) -> Result<Self> {
        Self::new(dimension, [(vec![0; dimension], 1.0)])
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, index: &[i64]) -> f64 {
        self.entries.get(index).copied().unwrap_or(0.0)
    }

    /// Entries in lexicographic index order.
    pub fn iter(&self) -> impl Iterator<Item = (&[i64], f64)> {
        self.entries.iter().map(|(k, v)| (k.as_slice(), *v))
    }

    pub fn l1_norm(&self) -> f64 {
        let mut acc = NeumaierSum::new();
        for v in self.entries.values() {
            acc += v.abs();
        }
        acc.value()
    }
}

/// `s(x) = Σ_j a_j L(x - j)` evaluated from the sampled table.
///
/// Every `x` must lie on the `1/M` grid, and every `x - j` for `j` in the
/// support must fall inside `[-T, T]ⁿ`; the table is never interpolated.
pub fn cardinal_interpolant(
    table: &SampledFunction,
    data: &CoefficientSequence,
    points: &[Vec<f64>],
) -> Result<Vec<f64>> {
    if data.dimension() != table.dimension {
        return Err(Error::Domain(format!(
            "data dimension {} does not match table dimension {}",
            data.dimension(),
            table.dimension
        )));
    }
    let m = table.samples_per_unit as f64;
    points
        .iter()
        .map(|x| {
            if x.len() != table.dimension {
                return Err(Error::Domain(format!(
                    "point {x:?} does not have {} components",
                    table.dimension
                )));
            }
            let mut grid = Vec::with_capacity(x.len());
            for &xi in x {
                let scaled = xi * m;
                let l = scaled.round();
                if !xi.is_finite() || (scaled - l).abs() > 1e-9 * scaled.abs().max(1.0) {
                    return Err(Error::Domain(format!(
                        "point {x:?} is not on the 1/{} grid",
                        table.samples_per_unit
                    )));
                }
                grid.push(l as i64);
            }
            let mut acc = NeumaierSum::new();
            let mut shifted = vec![0i64; grid.len()];
            for (j, a) in data.iter() {
                for ((s, &g), &ji) in shifted.iter_mut().zip(&grid).zip(j) {
                    *s = g - ji * table.samples_per_unit as i64;
                }
                let v = table.at_index(&shifted).ok_or_else(|| {
                    Error::OutOfRange(format!(
                        "x - j = {:?} leaves the table [-{t}, {t}]^n (x = {x:?}, j = {j:?})",
                        shifted.iter().map(|&s| s as f64 / m).collect::<Vec<_>>(),
                        t = table.halfwidth
                    ))
                })?;
                acc += a * v;
            }
            Ok(acc.value())
        })
        .collect()
}

/// Gram matrix `⟨Φ(·-j), Φ(·-k)⟩` over an ordered shift set.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GramMatrix {
    pub schema: u32,
    pub family: CardinalInterpolator,
    pub shifts: Vec<Vec<i64>>,
    pub grid_size: usize,
    /// Row-major, `|S| × |S|`.
    pub entries: Vec<f64>,
    pub quadrature_error_bound: f64,
}

impl GramMatrix {
    pub fn size(&self) -> usize {
        self.shifts.len()
    }

    pub fn entry(&self, row: usize, col: usize) -> f64 {
        self.entries[row * self.size() + col]
    }

    /// `max_{j,k} |G_jk - δ_jk|`.
    pub fn max_deviation(&self) -> f64 {
        let n = self.size();
        (0..n * n)
            .map(|i| {
                let target = if i / n == i % n { 1.0 } else { 0.0 };
                (self.entries[i] - target).abs()
            })
            .fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

/// `P(y) = Σ_l Φ̂²(y - 2πl)`, recomputed term by term in the log domain, and
/// a bound on its error.
fn periodized_square(
    phi: &CardinalInterpolator,
    y: &[f64],
    cfg: &LatticeSumConfig,
) -> Result<(f64, f64)> {
    let den = lattice_sum(phi, y, 2, cfg)?;
    if den.singular {
        return Err(Error::Domain(format!("Gram node {y:?} lies on the lattice")));
    }
    let ln_den = den.value.ln();
    let mut acc = NeumaierSum::new();
    let (radius, tail_bound) = match (phi.variant(), phi.dim()) {
        (Variant::Polyharmonic { k }, 1) => {
            let (tail, bound) = polyharmonic_line_tails(y[0], 2 * k);
            acc += tail / den.value;
            (INITIAL_RADIUS, bound)
        }
        _ => certified_radius(phi, 2, den.value, cfg)?,
    };
    let mut shifted = vec![0.0; y.len()];
    let mut failure = None;
    for m in (0..=radius).rev() {
        crate::lattice::for_each_in_shell(y.len(), m, |l| {
            if failure.is_some() {
                return;
            }
            for ((d, &yi), &li) in shifted.iter_mut().zip(y).zip(l) {
                *d = yi - TWO_PI * li as f64;
            }
            match phi.log_symbol_at_norm_sq(norm_sq(&shifted)) {
                Ok(ls) => acc += (2.0 * ls - ln_den).exp(),
                Err(e) => failure = Some(e),
            }
        });
    }
    if let Some(e) = failure {
        return Err(e);
    }
    let value = acc.value();
    let bound = tail_bound / den.value + value * den.tail_bound / den.value + 1e-14;
    Ok((value, bound))
}

/// Gram matrix of the translates `Φ(· - j)`, `j ∈ S`, computed as
/// `(2π)^{-n} ∫_{[-π,π]ⁿ} P(ξ) e^{i⟨ξ, k-j⟩} dξ` with the periodized square
/// `P` evaluated independently at each node (never assumed to be 1). Nodes
/// are cell centres of a `grid`-per-axis partition, so no node is a lattice
/// point.
pub fn gram_matrix(
    phi: &CardinalInterpolator,
    shifts: &[Vec<i64>],
    grid: usize,
    cfg: &LatticeSumConfig,
) -> Result<GramMatrix> {
    cfg.validate()?;
    if shifts.is_empty() || shifts.len() > 64 {
        return Err(Error::Domain(format!(
            "shift set must have 1..=64 entries, got {}",
            shifts.len()
        )));
    }
    for s in shifts {
        check_dim(phi, s.len(), "shift")?;
    }
    let dim = phi.dim();
    let nodes_total = grid.checked_pow(dim as u32).unwrap_or(usize::MAX);
    if grid < 8 || nodes_total > 1 << 22 {
        return Err(Error::Domain(format!(
            "Gram grid must have >= 8 nodes per axis and at most 2^22 in total, got {grid}"
        )));
    }
    let h = TWO_PI / grid as f64;
    let nodes: Vec<Vec<f64>> = (0..nodes_total)
        .map(|flat| {
            unflatten(flat, grid, dim)
                .into_iter()
                .map(|i| -PI + (i as f64 + 0.5) * h)
                .collect()
        })
        .collect();
    let squares = map_orbits(&nodes, |y| periodized_square(phi, y, cfg))?;
    let bound = squares.iter().map(|(_, b)| *b).fold(0.0, f64::max);

    // Entries depend only on k - j; use one representative of ±d.
    let canonical = |d: Vec<i64>| -> Vec<i64> {
        match d.iter().find(|&&v| v != 0) {
            Some(&v) if v < 0 => d.iter().map(|x| -x).collect(),
            _ => d,
        }
    };
    let mut by_difference: BTreeMap<Vec<i64>, f64> = BTreeMap::new();
    for a in shifts {
        for b in shifts {
            let d = canonical(b.iter().zip(a).map(|(x, y)| x - y).collect());
            by_difference.entry(d).or_insert(f64::NAN);
        }
    }
    let inv = 1.0 / nodes_total as f64;
    for (d, slot) in by_difference.iter_mut() {
        let mut acc = NeumaierSum::new();
        for (y, (p, _)) in nodes.iter().zip(&squares) {
            let phase: f64 = y.iter().zip(d).map(|(yi, &di)| yi * di as f64).sum();
            acc += p * phase.cos();
        }
        *slot = acc.value() * inv;
    }
    let mut entries = Vec::with_capacity(shifts.len() * shifts.len());
    for a in shifts {
        for b in shifts {
            let d = canonical(b.iter().zip(a).map(|(x, y)| x - y).collect());
            entries.push(by_difference[&d]);
        }
    }
    Ok(GramMatrix {
        schema: 1,
        family: *phi,
        shifts: shifts.to_vec(),
        grid_size: grid,
        entries,
        quadrature_error_bound: bound,
    })
}

/// Result of a change of basis between `{L(·-j)}` and `{Φ(·-j)}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BasisChange {
    pub coefficients: CoefficientSequence,
    /// `ℓ¹` mass of the entries below `1e-12` that were dropped.
    pub dropped_mass: f64,
    /// `J`; the multiplier is tabulated on `2^J` points per axis.
    pub resolution_exponent: u32,
}

/// Entries with magnitude at or below this are dropped after a basis change.
pub const COEFFICIENT_FLOOR: f64 = 1e-12;

/// Coefficients `b` with `Σ_j b_j Φ(· - j) = Σ_j a_j L(· - j)`:
/// `b̂ = â · √P₂ / P₁`, the `2π`-periodic factor in `L̂ = (√P₂/P₁) Φ̂`.
pub fn basis_change_l_to_phi(
    phi: &CardinalInterpolator,
    coeffs: &CoefficientSequence,
    resolution_exponent: u32,
    cfg: &LatticeSumConfig,
) -> Result<BasisChange> {
    apply_multiplier(phi, coeffs, resolution_exponent, cfg, false)
}

/// Inverse of [`basis_change_l_to_phi`]: multiplies by `P₁ / √P₂`.
pub fn basis_change_phi_to_l(
    phi: &CardinalInterpolator,
    coeffs: &CoefficientSequence,
    resolution_exponent: u32,
    cfg: &LatticeSumConfig,
) -> Result<BasisChange> {
    apply_multiplier(phi, coeffs, resolution_exponent, cfg, true)
}

fn apply_multiplier(
    phi: &CardinalInterpolator,
    coeffs: &CoefficientSequence,
    exponent: u32,
    cfg: &LatticeSumConfig,
    to_l: bool,
) -> Result<BasisChange> {
    cfg.validate()?;
    check_dim(phi, coeffs.dimension(), "coefficient sequence")?;
    let dim = phi.dim();
    if exponent < 8 || exponent as usize * dim > 22 {
        return Err(Error::Domain(format!(
            "resolution exponent must satisfy 8 <= J and J*n <= 22, got J = {exponent}"
        )));
    }
    let n = 1usize << exponent;
    for (j, _) in coeffs.iter() {
        if j.iter().any(|&v| v.unsigned_abs() as usize >= n / 2) {
            return Err(Error::OutOfRange(format!(
                "coefficient index {j:?} does not fit a 2^{exponent} grid"
            )));
        }
    }
    let total = n.pow(dim as u32);
    let nodes: Vec<Vec<f64>> = (0..total)
        .map(|flat| {
            unflatten(flat, n, dim)
                .into_iter()
                .map(|u| TWO_PI * signed(u, n) as f64 / n as f64)
                .collect()
        })
        .collect();
    let multiplier = map_orbits(&nodes, |y| {
        let first = lattice_sum(phi, y, 1, cfg)?;
        let second = lattice_sum(phi, y, 2, cfg)?;
        let q = ratio_from_sums(&first, &second);
        Ok(if to_l { q } else { 1.0 / q })
    })?;

    let mut data = vec![Complex::new(0.0, 0.0); total];
    for (j, a) in coeffs.iter() {
        let flat = j
            .iter()
            .fold(0, |acc, &v| acc * n + v.rem_euclid(n as i64) as usize);
        data[flat].re = a;
    }
    fft_nd(&mut data, n, dim, false);
    for (c, q) in data.iter_mut().zip(&multiplier) {
        *c *= *q;
    }
    fft_nd(&mut data, n, dim, true);

    let scale = 1.0 / total as f64;
    let mut kept = Vec::new();
    let mut dropped = NeumaierSum::new();
    for (flat, c) in data.iter().enumerate() {
        let v = c.re * scale;
        if v.abs() > COEFFICIENT_FLOOR {
            let index = unflatten(flat, n, dim)
                .into_iter()
                .map(|u| signed(u, n))
                .collect();
            kept.push((index, v));
        } else {
            dropped += v.abs();
        }
    }
    Ok(BasisChange {
        coefficients: CoefficientSequence::new(dim, kept)?,
        dropped_mass: dropped.value(),
        resolution_exponent: exponent,
    })
}

/// Departure of the two-scale transfer function `m(ξ) = Φ̂(2ξ)/Φ̂(ξ)` from
/// `2π`-periodicity: `sup |m(ξ + 2π e) - m(ξ)|` over `N` cell-centred nodes
/// of `[-π, π]` along a coordinate axis `e` (other coordinates zero).
/// Radial symbols make every axis equivalent, and the periodized square is
/// `2π`-periodic, so each node needs two lattice sums. Computed in the log
/// domain, so tiny `Φ̂` values are harmless.
pub fn refinement_mask_probe(
    phi: &CardinalInterpolator,
    grid: usize,
    cfg: &LatticeSumConfig,
) -> Result<f64> {
    cfg.validate()?;
    if grid < 512 || !grid.is_power_of_two() {
        return Err(Error::Domain(format!(
            "probe grid must be a power of two >= 512, got {grid}"
        )));
    }
    let dim = phi.dim();
    let h = TWO_PI / grid as f64;
    let on_axis = |v: f64| {
        let mut xi = vec![0.0; dim];
        xi[0] = v;
        xi
    };
    let nodes: Vec<f64> = (0..grid).map(|i| -PI + (i as f64 + 0.5) * h).collect();
    // Cell representatives of ξ and 2ξ; an even grid keeps 2ξ off the lattice.
    let points: Vec<Vec<f64>> = nodes
        .iter()
        .flat_map(|&t| [on_axis(t), reduce_to_cell(&on_axis(2.0 * t))])
        .collect();
    let half_log_sums = map_orbits(&points, |y| Ok(0.5 * lattice_sum(phi, y, 2, cfg)?.value.ln()))?;
    let log_symbol = |v: f64| phi.log_symbol_at_norm_sq(v * v);
    let deviations = nodes
        .iter()
        .zip(half_log_sums.chunks(2))
        .map(|(&t, sums)| -> Result<f64> {
            let shift = sums[0] - sums[1];
            let mask = |v: f64| -> Result<f64> {
                Ok((log_symbol(2.0 * v)? - log_symbol(v)? + shift).exp())
            };
            Ok((mask(t + TWO_PI)? - mask(t)?).abs())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(deviations.into_iter().fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(k: u32) -> CardinalInterpolator {
        CardinalInterpolator::polyharmonic(1, k).unwrap()
    }

    fn gmq() -> CardinalInterpolator {
        CardinalInterpolator::multiquadric(1, 0.5, 1.0).unwrap()
    }

    fn table(phi: &CardinalInterpolator, generator: Generator) -> SampledFunction {
        synthesize(phi, generator, &SynthesisParams::default_for(1), &LatticeSumConfig::default()).unwrap()
    }

    #[test]
    fn linear_fundamental_function_is_the_hat() {
        let l = table(&poly(1), Generator::Fundamental);
        assert_eq!(l.values.len(), l.side());
        let worst = (0..l.values.len())
            .map(|f| {
                let x = l.coordinate(l.index_of(f)[0]);
                (l.values[f] - (1.0 - x.abs()).max(0.0)).abs()
            })
            .fold(0.0, f64::max);
        assert!(worst < 1e-3, "{worst}");
        assert!((l.at_index(&[8]).unwrap() - 0.5).abs() < 1e-3);
    }

    #[test]
    fn fundamental_functions_interpolate() {
        for phi in [poly(1), poly(2), gmq()] {
            let l = table(&phi, Generator::Fundamental);
            assert!((l.at_index(&[0]).unwrap() - 1.0).abs() <= l.synthesis_error_bound + 1e-8);
            let points: Vec<Vec<f64>> = (-8..=8).map(|m| vec![m as f64]).collect();
            let s = cardinal_interpolant(&l, &CoefficientSequence::delta(1).unwrap(), &points).unwrap();
            for (m, v) in (-8..=8).zip(s) {
                let want = if m == 0 { 1.0 } else { 0.0 };
                assert!((v - want).abs() <= 1e-6, "{} m={m}: {v}", phi.label());
            }
        }
    }

    #[test]
    fn samples_are_exactly_even() {
        for generator in [Generator::Fundamental, Generator::Scaling] {
            let f = table(&gmq(), generator);
            let n = f.values.len();
            for i in 0..n {
                assert_eq!(f.values[i].to_bits(), f.values[n - 1 - i].to_bits());
            }
        }
    }

    #[test]
    fn neighbouring_hats_sum_to_one() {
        let l = table(&poly(1), Generator::Fundamental);
        let data = CoefficientSequence::new(1, [(vec![0], 1.0), (vec![1], 1.0)]).unwrap();
        let s = cardinal_interpolant(&l, &data, &[vec![0.5]]).unwrap();
        assert!((s[0] - 1.0).abs() < 2e-3);
    }

    #[test]
    fn interpolant_rejects_bad_points() {
        let l = table(&poly(2), Generator::Fundamental);
        let delta = CoefficientSequence::delta(1).unwrap();
        assert!(matches!(
            cardinal_interpolant(&l, &delta, &[vec![0.01]]),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            cardinal_interpolant(&l, &delta, &[vec![17.0]]),
            Err(Error::OutOfRange(_))
        ));
    }

    #[test]
    fn bandlimit_must_fit_the_grid() {
        let cfg = LatticeSumConfig::default();
        let bad = SynthesisParams::new(100.0, 16, 16);
        assert!(matches!(synthesize(&gmq(), Generator::Scaling, &bad, &cfg), Err(Error::Domain(_))));
        let huge = SynthesisParams::new(131072.0 * PI, 16, 16);
        assert!(matches!(
            synthesize(&gmq(), Generator::Scaling, &huge, &cfg),
            Err(Error::ToleranceUnreachable { .. })
        ));
    }

    #[test]
    fn gram_matrices_are_orthonormal() {
        let cfg = LatticeSumConfig::default();
        let shifts: Vec<Vec<i64>> = (-4..=4).map(|j| vec![j]).collect();
        for phi in [poly(1), poly(2), gmq(), CardinalInterpolator::gaussian(1, 1.0).unwrap()] {
            let g = gram_matrix(&phi, &shifts, 256, &cfg).unwrap();
            assert_eq!(g.size(), 9);
            assert!(g.max_deviation() <= 1e-6, "{}", phi.label());
            for r in 0..9 {
                assert!((g.entry(r, r) - 1.0).abs() < 1e-10);
                for c in 0..9 {
                    assert_eq!(g.entry(r, c), g.entry(c, r));
                }
            }
            let single = gram_matrix(&phi, &[vec![0]], 64, &cfg).unwrap();
            assert!((single.entries[0] - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn plancherel_matches_gram_diagonal() {
        let cfg = LatticeSumConfig::default();
        // The kinks of the linear generator need a finer Riemann sum.
        let cases = [
            (poly(1), SynthesisParams::new(1024.0 * PI, 128, 16)),
            (poly(2), SynthesisParams::default_for(1)),
            (gmq(), SynthesisParams::default_for(1)),
        ];
        for (phi, params) in cases {
            let f = synthesize(&phi, Generator::Scaling, &params, &cfg).unwrap();
            let g = gram_matrix(&phi, &[vec![0]], 64, &cfg).unwrap();
            assert!((f.energy() - g.entries[0]).abs() < 1e-4, "{}: {}", phi.label(), f.energy());
        }
    }

    #[test]
    fn basis_change_coefficients_match_quadrature() {
        // Fourier coefficients of sqrt(1 - (2/3) sin²(ξ/2)), computed in
        // extended precision; b_0 = (2/π) E(2/3).
        let want = [
            0.802_895_912_238_329_3,
            0.104_705_447_447_192_01,
            -0.006_949_533_467_841_349,
            0.000_926_726_862_609_938_5,
        ];
        let cfg = LatticeSumConfig::default();
        let b = basis_change_l_to_phi(&poly(1), &CoefficientSequence::delta(1).unwrap(), 10, &cfg).unwrap();
        for (j, w) in want.iter().enumerate() {
            assert!((b.coefficients.get(&[j as i64]) - w).abs() < 1e-12);
            assert!((b.coefficients.get(&[-(j as i64)]) - w).abs() < 1e-12);
        }
    }

    #[test]
    fn basis_change_round_trip() {
        let cfg = LatticeSumConfig::default();
        let a = CoefficientSequence::new(1, [(vec![0], 1.0), (vec![3], -0.5), (vec![-2], 0.25)]).unwrap();
        for phi in [poly(1), poly(2), gmq()] {
            let b = basis_change_l_to_phi(&phi, &a, 10, &cfg).unwrap();
            let back = basis_change_phi_to_l(&phi, &b.coefficients, 10, &cfg).unwrap();
            for j in -20..=20 {
                assert!((back.coefficients.get(&[j]) - a.get(&[j])).abs() < 1e-8, "{} j={j}", phi.label());
            }
        }
    }

    #[test]
    fn both_bases_give_the_same_function() {
        let cfg = LatticeSumConfig::default();
        let phi = poly(2);
        let a = CoefficientSequence::new(1, [(vec![0], 1.0), (vec![1], -0.5)]).unwrap();
        let l = table(&phi, Generator::Fundamental);
        let big = table(&phi, Generator::Scaling);
        let b = basis_change_l_to_phi(&phi, &a, 10, &cfg).unwrap();
        // Keep the translates that stay inside the table; the rest carry
        // negligible weight.
        let reach = 10;
        let near = CoefficientSequence::new(
            1,
            b.coefficients.iter().filter(|(j, _)| j[0].abs() <= reach).map(|(j, v)| (j.to_vec(), v)),
        )
        .unwrap();
        let points: Vec<Vec<f64>> = (0..100).map(|i| vec![-3.0 + i as f64 * 0.0625]).collect();
        let lhs = cardinal_interpolant(&big, &near, &points).unwrap();
        let rhs = cardinal_interpolant(&l, &a, &points).unwrap();
        for (u, v) in lhs.iter().zip(&rhs) {
            assert!((u - v).abs() < 1e-5, "{u} vs {v}");
        }
    }

    #[test]
    fn polyharmonic_refinement_is_periodic() {
        let cfg = LatticeSumConfig::default();
        for k in [1, 2] {
            assert!(refinement_mask_probe(&poly(k), 1024, &cfg).unwrap() <= 1e-8);
        }
        assert!(refinement_mask_probe(&poly(1), 500, &cfg).is_err());
    }

    #[test]
    fn coefficient_json_round_trip() {
        let a = CoefficientSequence::new(2, [(vec![0, 0], 1.0), (vec![1, -2], 0.5), (vec![3, 3], 0.0)]).unwrap();
        assert_eq!(a.len(), 2);
        let text = serde_json::to_string(&a).unwrap();
        let back: CoefficientSequence = serde_json::from_str(&text).unwrap();
        assert_eq!(a, back);
        assert!(serde_json::from_str::<CoefficientSequence>(
            r#"{"dimension":1,"entries":[{"index":[0],"value":1},{"index":[0],"value":2}]}"#
        )
        .is_err());
        assert!(serde_json::from_str::<CoefficientSequence>(
            r#"{"dimension":1,"entries":[{"index":[0,1],"value":1}]}"#
        )
        .is_err());
    }
}
