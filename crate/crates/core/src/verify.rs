//! Aggregated verification of the multiresolution construction for one
//! interpolator or a family path: positivity of the symbol on the cell, the
//! Riesz band, orthonormality, interpolation, the density criterion, decay at
//! infinity, the two-scale probe and the regular-family conditions.
//!
//! Every stage is run independently. A stage that errors is recorded in
//! `stage_failures` and leaves its fields `null`; building a report never
//! fails.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::families::{CardinalInterpolator, FamilyPath, ParameterAxis, Variant};
use crate::parallel;
use crate::periodization::{
    m_partial_sums, riesz_ratio, riesz_upper_constant, riesz_upper_constant_member,
    LatticeSumConfig,
};
use crate::synthesis::{
    cardinal_interpolant, gram_matrix, refinement_mask_probe, synthesize, CoefficientSequence,
    Generator, SynthesisParams,
};

/// Positivity on the cell: the minimum of the symbol over a grid of
/// `grid` points per axis on `[-π, π]ⁿ` (endpoints included).
///
/// On the line every node is evaluated. In higher dimensions the symbol is
/// radial and decreasing, so the grid minimum sits at the node of largest
/// norm, which is a corner of the cell.
pub fn check_h2(phi: &CardinalInterpolator, grid: usize) -> Result<f64> {
    if grid < 1025 {
        return Err(Error::Domain(format!(
            "positivity grid needs >= 1025 points per axis, got {grid}"
        )));
    }
    if phi.dim() > 1 {
        let corner = vec![PI; phi.dim()];
        return phi
            .symbol(&corner)?
            .finite()
            .ok_or_else(|| Error::Domain("symbol infinite at the cell corner".into()));
    }
    let values: Vec<Option<f64>> = parallel::pool().install(|| {
        (0..grid)
            .into_par_iter()
            .map(|i| {
                let xi = -PI + 2.0 * PI * i as f64 / (grid - 1) as f64;
                Ok(phi.symbol(&[xi])?.finite())
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(values.into_iter().flatten().fold(f64::INFINITY, f64::min))
}

/// One `(j, ξ)` row of the ratio-decay table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct R1Row {
    pub j: Vec<i64>,
    pub xi: Vec<f64>,
    /// `M_{j,a}(ξ)` for each path parameter `a`, in path order.
    pub ratios: Vec<f64>,
    pub strictly_decreasing: bool,
    /// Final value below both the first value and 0.01, or strictly
    /// decreasing over the last three parameters.
    pub verdict: bool,
}

/// `M_{j,a}(ξ)` along a family path on a fixed `(j, ξ)` set.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct R1Table {
    pub axis: ParameterAxis,
    pub parameters: Vec<f64>,
    pub rows: Vec<R1Row>,
}

impl R1Table {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.verdict)
    }

    /// One line per `(j, ξ, parameter)`.
    pub fn to_csv(&self) -> String {
        let dim = self.rows.first().map_or(0, |r| r.j.len());
        let mut out = String::new();
        for axis in 1..=dim {
            let _ = write!(out, "j_{axis},");
        }
        for axis in 1..=dim {
            let _ = write!(out, "xi_{axis},");
        }
        out.push_str("parameter,ratio\n");
        for row in &self.rows {
            for (a, r) in self.parameters.iter().zip(&row.ratios) {
                for v in &row.j {
                    let _ = write!(out, "{v},");
                }
                for v in &row.xi {
                    let _ = write!(out, "{v},");
                }
                let _ = writeln!(out, "{a},{r}");
            }
        }
        out
    }
}

/// Default `(j, ξ)` set for the ratio-decay table: no coordinate of `ξ` sits at `±π`, where
/// the ratio can equal 1 for every parameter.
pub fn default_r1_points(dim: usize) -> (Vec<Vec<i64>>, Vec<Vec<f64>>) {
    if dim == 1 {
        (
            vec![vec![1], vec![-1], vec![2]],
            vec![vec![PI / 2.0], vec![-PI / 2.0], vec![PI / 4.0], vec![-3.0 * PI / 4.0]],
        )
    } else {
        let unit = |axis: usize| {
            let mut j = vec![0; dim];
            j[axis] = 1;
            j
        };
        let xi_a: Vec<f64> = (0..dim).map(|i| PI / (2.0 + i as f64)).collect();
        let xi_b: Vec<f64> = (0..dim)
            .map(|i| if i == 0 { -PI / 3.0 } else { PI / 2.0 })
            .collect();
        (vec![unit(0), unit(dim - 1), vec![1; dim]], vec![xi_a, xi_b])
    }
}

/// Ratio decay: `M_{j,a}(ξ)` along the path for each `j` and `ξ`.
pub fn check_r1(path: &FamilyPath, js: &[Vec<i64>], xis: &[Vec<f64>]) -> Result<R1Table> {
    if js.len() < 2 {
        return Err(Error::Domain("ratio table needs at least two lattice vectors".into()));
    }
    for xi in xis {
        if xi.iter().any(|v| v.abs() >= PI) {
            return Err(Error::Domain(format!(
                "ratio table point {xi:?} must lie strictly inside the cell"
            )));
        }
    }
    let mut rows = Vec::with_capacity(js.len() * xis.len());
    for j in js {
        for xi in xis {
            let ratios = path
                .members()
                .iter()
                .map(|phi| phi.m_ratio(j, xi))
                .collect::<Result<Vec<_>>>()?;
            let strictly_decreasing = ratios.windows(2).all(|w| w[1] < w[0]);
            let n = ratios.len();
            let last = ratios[n - 1];
            let tail_decreasing = ratios[n.saturating_sub(3)..].windows(2).all(|w| w[1] < w[0]);
            rows.push(R1Row {
                j: j.clone(),
                xi: xi.clone(),
                verdict: (last < ratios[0] && last < 0.01) || tail_decreasing,
                strictly_decreasing,
                ratios,
            });
        }
    }
    Ok(R1Table {
        axis: path.axis(),
        parameters: path.values().to_vec(),
        rows,
    })
}

/// Partial sum of the dominating series up to one radius.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct R2Entry {
    pub radius: usize,
    /// `Σ_{0<‖j‖∞≤J} M_j`.
    pub partial_sum: f64,
    /// Bound on `Σ_{‖j‖∞>J} M_j`.
    pub tail_bound: f64,
}

/// Partial sums of the dominating series with their Cauchy verdict.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct R2Summary {
    pub entries: Vec<R2Entry>,
    pub nondecreasing: bool,
    /// Each increment between successive radii is within the earlier tail
    /// bound.
    pub cauchy: bool,
}

/// Summability of the dominating series for an interpolator; for a path pass its first member, whose ratios
/// dominate the rest.
pub fn check_r2(phi: &CardinalInterpolator, radii: &[usize]) -> Result<R2Summary> {
    if radii.is_empty() || radii.windows(2).any(|w| w[0] >= w[1]) || radii[0] == 0 {
        return Err(Error::Domain(
            "partial-sum radii must be positive and strictly increasing".into(),
        ));
    }
    let entries: Vec<R2Entry> = m_partial_sums(phi, radii)?
        .into_iter()
        .map(|(radius, partial_sum, tail_bound)| R2Entry {
            radius,
            partial_sum,
            tail_bound,
        })
        .collect();
    let nondecreasing = entries.windows(2).all(|w| w[1].partial_sum >= w[0].partial_sum);
    let cauchy = entries.windows(2).all(|w| {
        w[1].partial_sum - w[0].partial_sum <= w[0].tail_bound * (1.0 + 1e-12) + 1e-15
    });
    Ok(R2Summary {
        entries,
        nondecreasing,
        cauchy,
    })
}

/// `Φ̂(0)` and `log(1 - Φ̂(0))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityCheck {
    /// Nearest double to `Φ̂(0)`; rounds to 1 for Gaussians with `α ≳ 0.5`.
    pub phi_hat_origin: f64,
    /// `-∞` exactly when `Φ̂(0) = 1`.
    pub deficiency_log: f64,
}

impl DensityCheck {
    pub fn passes(&self) -> bool {
        self.deficiency_log == f64::NEG_INFINITY
    }
}

/// Density criterion `Φ̂(0) = 1`, with the Gaussian deficiency computed
/// without cancellation: for `S = Σ_{k≠0} e^{-2α‖2πk‖²}`,
/// `1 - (1+S)^{-1/2} = S / (√(1+S) (√(1+S) + 1))`.
pub fn check_density_criterion(phi: &CardinalInterpolator) -> DensityCheck {
    let alpha = match phi.variant() {
        Variant::Gaussian { alpha } => alpha,
        _ => {
            return DensityCheck {
                phi_hat_origin: 1.0,
                deficiency_log: f64::NEG_INFINITY,
            }
        }
    };
    // Exponents -8π²α‖k‖² for 0 < ‖k‖∞ ≤ 4; further shells are far below
    // double resolution relative to the first.
    let mut exponents: Vec<f64> = crate::lattice::nonzero_points_within(phi.dim(), 4)
        .iter()
        .map(|k| -8.0 * PI * PI * alpha * k.iter().map(|&v| (v * v) as f64).sum::<f64>())
        .collect();
    exponents.sort_by(|a, b| b.total_cmp(a));
    let top = exponents[0];
    let mut acc = 0.0;
    for e in exponents.iter().rev() {
        acc += (e - top).exp();
    }
    let log_s = top + acc.ln();
    let s = log_s.exp();
    let root = s.ln_1p() * 0.5;
    DensityCheck {
        phi_hat_origin: (-root).exp(),
        deficiency_log: log_s - root - (root.exp() + 1.0).ln(),
    }
}

/// Finite certificate that `s(ξ) → 0` as `‖ξ‖ → ∞`: `log s` sampled along
/// every coordinate axis at radii `10⁰ … 10⁴`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayCertificate {
    pub radii: Vec<f64>,
    pub log_symbol: Vec<f64>,
    /// Strictly decreasing along the rays, with a total drop above
    /// [`DECAY_DROP`] nats.
    pub holds: bool,
}

/// Required drop of `log s` between radius 1 and `10⁴`.
pub const DECAY_DROP: f64 = 15.0;

pub fn check_decay(phi: &CardinalInterpolator) -> Result<DecayCertificate> {
    let radii: Vec<f64> = (0..=4).map(|e| 10f64.powi(e)).collect();
    let mut holds = true;
    let mut first_axis = Vec::new();
    for axis in 0..phi.dim() {
        let logs = radii
            .iter()
            .map(|&r| {
                let mut xi = vec![0.0; phi.dim()];
                xi[axis] = r;
                phi.log_symbol(&xi)
            })
            .collect::<Result<Vec<_>>>()?;
        holds &= logs.windows(2).all(|w| w[1] < w[0]);
        holds &= logs[0] - logs[logs.len() - 1] > DECAY_DROP;
        if axis == 0 {
            first_axis = logs;
        }
    }
    Ok(DecayCertificate {
        radii,
        log_symbol: first_axis,
        holds,
    })
}

/// Tunables for [`full_report`].
#[derive(Clone, Debug, PartialEq)]
pub struct ReportConfig {
    pub lattice: LatticeSumConfig,
    /// Points per axis for the positivity minimum (at least 1025).
    pub h2_grid: usize,
    /// Points per axis for the Riesz sweep of `[-π, π]ⁿ`.
    pub riesz_grid: usize,
    /// Radius `J` of the Riesz upper constant.
    pub riesz_radius: usize,
    pub gram_shifts: Vec<Vec<i64>>,
    pub gram_grid: usize,
    pub gram_tolerance: f64,
    pub synthesis: SynthesisParams,
    /// Lattice points `‖m‖∞ ≤ R` checked for `L(m) = δ_{0m}`.
    pub interpolation_radius: i64,
    pub interpolation_tolerance: f64,
    pub probe_grid: usize,
    /// Asserted only for polyharmonic families.
    pub probe_tolerance: f64,
    pub r2_radii: Vec<usize>,
    pub r1_js: Vec<Vec<i64>>,
    pub r1_xis: Vec<Vec<f64>>,
    /// Record wall-clock time per stage (breaks byte-identical output).
    pub timings: bool,
}

impl ReportConfig {
    pub fn for_dim(dim: usize) -> Self {
        let (gram_shifts, radius, tol): (Vec<Vec<i64>>, i64, f64) = if dim == 1 {
            ((-4..=4).map(|j| vec![j]).collect(), 8, 1e-6)
        } else {
            let mut shifts = vec![vec![]];
            for _ in 0..dim {
                shifts = shifts
                    .into_iter()
                    .flat_map(|s: Vec<i64>| {
                        (-1..=1).map(move |v| {
                            let mut t = s.clone();
                            t.push(v);
                            t
                        })
                    })
                    .collect();
            }
            shifts.truncate(64);
            (shifts, if dim == 2 { 3 } else { 1 }, 1e-4)
        };
        let (r1_js, r1_xis) = default_r1_points(dim);
        Self {
            lattice: LatticeSumConfig::for_dim(dim),
            h2_grid: 4097,
            riesz_grid: match dim {
                1 => 4097,
                2 => 17,
                _ => 5,
            },
            riesz_radius: 25,
            gram_shifts,
            gram_grid: match dim {
                1 => 256,
                2 => 64,
                _ => 16,
            },
            gram_tolerance: tol,
            synthesis: SynthesisParams::default_for(dim),
            interpolation_radius: radius,
            interpolation_tolerance: tol,
            probe_grid: 1024,
            probe_tolerance: 1e-8,
            r2_radii: if dim == 1 { vec![25, 50, 100] } else { vec![25, 50] },
            r1_js,
            r1_xis,
            timings: false,
        }
    }
}

/// What a report covers.
#[derive(Clone, Debug)]
pub enum ReportTarget {
    Instance(CardinalInterpolator),
    Path(FamilyPath),
}

impl ReportTarget {
    fn member(&self) -> &CardinalInterpolator {
        match self {
            ReportTarget::Instance(phi) => phi,
            ReportTarget::Path(path) => path.first(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Passes,
    Fails,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PathSummary {
    pub axis: ParameterAxis,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StageFailure {
    pub message: String,
    /// A numerical tolerance could not be met (as opposed to bad input).
    pub numerical: bool,
}

/// Machine-readable verification report (schema 1).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MRAReport {
    pub schema: u32,
    pub family: CardinalInterpolator,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathSummary>,
    pub h2_delta: Option<f64>,
    pub riesz_observed: Option<[f64; 2]>,
    pub riesz_upper_constant: Option<f64>,
    pub gram_deviation: Option<f64>,
    pub interpolation_deviation: Option<f64>,
    pub phi_hat_origin: f64,
    #[serde(serialize_with = "log_or_neg_inf")]
    pub density_deficiency_log: f64,
    pub decay: Option<DecayCertificate>,
    pub r1_table: Option<R1Table>,
    pub r2_partial_sums: Option<R2Summary>,
    pub refinement_probe: Option<f64>,
    pub verdict_density: Verdict,
    /// Named pass/fail outcomes; `verify` fails if any is false.
    pub checks: BTreeMap<String, bool>,
    pub stage_failures: BTreeMap<String, StageFailure>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub runtimes: Option<BTreeMap<String, f64>>,
}

fn log_or_neg_inf<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if *v == f64::NEG_INFINITY {
        s.serialize_str("-inf")
    } else {
        s.serialize_f64(*v)
    }
}

impl MRAReport {
    /// All checks pass and no stage failed.
    pub fn all_passed(&self) -> bool {
        self.stage_failures.is_empty() && self.checks.values().all(|&ok| ok)
    }

    /// Some stage failed for numerical reasons.
    pub fn numerical_failure(&self) -> bool {
        self.stage_failures.values().any(|f| f.numerical)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

struct Stages {
    failures: BTreeMap<String, StageFailure>,
    runtimes: BTreeMap<String, f64>,
}

impl Stages {
    fn run<T>(&mut self, name: &str, f: impl FnOnce() -> Result<T>) -> Option<T> {
        let start = Instant::now();
        let out = f();
        self.runtimes
            .insert(name.to_string(), start.elapsed().as_secs_f64());
        match out {
            Ok(v) => Some(v),
            Err(e) => {
                self.failures.insert(
                    name.to_string(),
                    StageFailure {
                        numerical: e.is_numerical(),
                        message: e.to_string(),
                    },
                );
                None
            }
        }
    }
}

fn riesz_sweep(phi: &CardinalInterpolator, grid: usize, cfg: &LatticeSumConfig) -> Result<[f64; 2]> {
    if grid < 2 {
        return Err(Error::Domain("Riesz sweep needs at least two points per axis".into()));
    }
    let dim = phi.dim();
    let total = grid.pow(dim as u32);
    let values: Vec<f64> = parallel::pool().install(|| {
        (0..total)
            .into_par_iter()
            .map(|flat| {
                let mut rest = flat;
                let mut xi = vec![0.0; dim];
                for axis in (0..dim).rev() {
                    xi[axis] = -PI + 2.0 * PI * (rest % grid) as f64 / (grid - 1) as f64;
                    rest /= grid;
                }
                riesz_ratio(phi, &xi, cfg)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(values
        .iter()
        .fold([f64::INFINITY, f64::NEG_INFINITY], |[lo, hi], &v| [lo.min(v), hi.max(v)]))
}

fn interpolation_deviation(phi: &CardinalInterpolator, config: &ReportConfig) -> Result<f64> {
    let table = synthesize(phi, Generator::Fundamental, &config.synthesis, &config.lattice)?;
    let dim = phi.dim();
    let r = config.interpolation_radius;
    let side = (2 * r + 1) as usize;
    let points: Vec<Vec<f64>> = (0..side.pow(dim as u32))
        .map(|flat| {
            let mut rest = flat;
            let mut p = vec![0.0; dim];
            for axis in (0..dim).rev() {
                p[axis] = (rest % side) as f64 - r as f64;
                rest /= side;
            }
            p
        })
        .collect();
    let values = cardinal_interpolant(&table, &CoefficientSequence::delta(dim)?, &points)?;
    Ok(points
        .iter()
        .zip(values)
        .map(|(p, v)| {
            let target = if p.iter().all(|&x| x == 0.0) { 1.0 } else { 0.0 };
            (v - target).abs()
        })
        .fold(0.0, f64::max))
}

/// Runs every stage and assembles the report.
pub fn full_report(target: &ReportTarget, config: &ReportConfig) -> MRAReport {
    let phi = *target.member();
    let cfg = &config.lattice;
    let mut stages = Stages {
        failures: BTreeMap::new(),
        runtimes: BTreeMap::new(),
    };
    let mut checks = BTreeMap::new();

    let h2_delta = stages.run("h2", || check_h2(&phi, config.h2_grid));
    if let Some(d) = h2_delta {
        checks.insert("h2_positive".to_string(), d > 0.0);
    }

    let riesz_observed = stages.run("riesz_sweep", || riesz_sweep(&phi, config.riesz_grid, cfg));
    let upper = stages.run("riesz_upper_constant", || match target {
        ReportTarget::Instance(phi) => riesz_upper_constant_member(phi, config.riesz_radius),
        ReportTarget::Path(path) => riesz_upper_constant(path, config.riesz_radius),
    });
    if let (Some([lo, hi]), Some(c)) = (riesz_observed, upper) {
        checks.insert(
            "riesz_band".to_string(),
            lo >= 1.0 - 1e-12 && hi <= c + 1e-12,
        );
    }

    let gram_deviation = stages.run("gram", || {
        Ok(gram_matrix(&phi, &config.gram_shifts, config.gram_grid, cfg)?.max_deviation())
    });
    if let Some(d) = gram_deviation {
        checks.insert("orthonormality".to_string(), d <= config.gram_tolerance);
    }

    let interp = stages.run("interpolation", || interpolation_deviation(&phi, config));
    if let Some(d) = interp {
        checks.insert(
            "interpolation".to_string(),
            d <= config.interpolation_tolerance,
        );
    }

    let start = Instant::now();
    let density = check_density_criterion(&phi);
    stages
        .runtimes
        .insert("density".to_string(), start.elapsed().as_secs_f64());
    let verdict_density = if density.passes() {
        Verdict::Passes
    } else {
        Verdict::Fails
    };
    checks.insert("density".to_string(), density.passes());

    let decay = stages.run("decay", || check_decay(&phi));
    if let Some(d) = &decay {
        checks.insert("decay_at_infinity".to_string(), d.holds);
    }

    let probe = stages.run("refinement_probe", || {
        refinement_mask_probe(&phi, config.probe_grid, cfg)
    });
    if let (Some(p), Variant::Polyharmonic { .. }) = (probe, phi.variant()) {
        checks.insert("refinement".to_string(), p <= config.probe_tolerance);
    }

    let r1_table = match target {
        ReportTarget::Path(path) => {
            stages.run("r1", || check_r1(path, &config.r1_js, &config.r1_xis))
        }
        ReportTarget::Instance(_) => None,
    };
    if let Some(t) = &r1_table {
        checks.insert("r1".to_string(), t.all_pass());
    }

    let r2 = stages.run("r2", || check_r2(&phi, &config.r2_radii));
    if let Some(s) = &r2 {
        checks.insert("r2".to_string(), s.nondecreasing && s.cauchy);
    }

    MRAReport {
        schema: 1,
        family: phi,
        path: match target {
            ReportTarget::Path(p) => Some(PathSummary {
                axis: p.axis(),
                values: p.values().to_vec(),
            }),
            ReportTarget::Instance(_) => None,
        },
        h2_delta,
        riesz_observed,
        riesz_upper_constant: upper,
        gram_deviation,
        interpolation_deviation: interp,
        phi_hat_origin: density.phi_hat_origin,
        density_deficiency_log: density.deficiency_log,
        decay,
        r1_table,
        r2_partial_sums: r2,
        refinement_probe: probe,
        verdict_density,
        checks,
        stage_failures: stages.failures,
        runtimes: config.timings.then_some(stages.runtimes),
    }
}
