//! Characteristic boundary data `E₀(x)`, `E₁(y)` (or `V₀`, `V₁` in the linear case).

use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{self, GaussLegendre};

type C64 = Complex64;

/// A complex profile on the characteristic parameter.
pub type Profile = Arc<dyn Fn(f64) -> C64 + Send + Sync>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DatumKind {
    /// Ernst potential data, `value(0) = 1`.
    Ernst,
    /// Euler–Darboux data, `value(0) = 0`.
    Linear,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Axis {
    /// The edge `y = 0`, carrying `E₀(x)`.
    X,
    /// The edge `x = 0`, carrying `E₁(y)`.
    Y,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum DatumSource {
    Family { name: String, params: Vec<f64> },
    Table { samples: usize },
    Custom(String),
}

/// One boundary function with its singular exponent `α` and the bounded
/// regular part `t^α·derivative(t)`.
#[derive(Clone)]
pub struct BoundaryDatum {
    pub kind: DatumKind,
    pub alpha: f64,
    pub source: DatumSource,
    value: Profile,
    regular: Profile,
    corner_tol: f64,
}

impl fmt::Debug for BoundaryDatum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BoundaryDatum")
            .field("kind", &self.kind)
            .field("alpha", &self.alpha)
            .field("source", &self.source)
            .finish()
    }
}

impl BoundaryDatum {
    pub fn from_fns(kind: DatumKind, alpha: f64, value: Profile, regular: Profile, label: &str) -> Result<Self> {
        if !(0.0..1.0).contains(&alpha) {
            return Err(Error::Config(format!("alpha = {alpha} must lie in [0, 1)")));
        }
        Ok(BoundaryDatum {
            kind,
            alpha,
            source: DatumSource::Custom(label.into()),
            value,
            regular,
            corner_tol: 1e-8,
        })
    }

    pub fn value(&self, t: f64) -> C64 {
        (self.value)(t)
    }

    pub fn regular_part(&self, t: f64) -> C64 {
        (self.regular)(t)
    }

    /// `regular_part(t)·t^{−α}` for `t > 0`.
    pub fn derivative(&self, t: f64) -> C64 {
        (self.regular)(t) * t.powf(-self.alpha)
    }

    /// Substitution variable `τ = t^{1−α}` in which the data are integrated.
    pub fn tau_of(&self, t: f64) -> f64 {
        t.powf(1.0 - self.alpha)
    }

    pub fn t_of(&self, tau: f64) -> f64 {
        if tau <= 0.0 {
            0.0
        } else {
            tau.powf(1.0 / (1.0 - self.alpha))
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(&self.source, DatumSource::Family { name, .. } if name == "unit" || name == "zero")
    }

    /// `e^{−V}` of a linear datum, as Ernst data.
    pub fn exponential(&self) -> Result<Self> {
        if self.kind != DatumKind::Linear {
            return Err(Error::Config("exponential() expects linear data".into()));
        }
        let (v, r) = (self.value.clone(), self.regular.clone());
        let v2 = v.clone();
        Ok(BoundaryDatum {
            kind: DatumKind::Ernst,
            alpha: self.alpha,
            source: DatumSource::Custom("exp(-V)".into()),
            value: Arc::new(move |t| (-v(t)).exp()),
            regular: Arc::new(move |t| -r(t) * (-v2(t)).exp()),
            corner_tol: self.corner_tol,
        })
    }

    /// The power `E^s` of Ernst data, scaling the amplitude of `log E` by `s`.
    pub fn powered(&self, s: f64) -> Result<Self> {
        if self.kind != DatumKind::Ernst {
            return Err(Error::Config("powered() expects Ernst data".into()));
        }
        let (v, r) = (self.value.clone(), self.regular.clone());
        let v2 = v.clone();
        Ok(BoundaryDatum {
            kind: DatumKind::Ernst,
            alpha: self.alpha,
            source: DatumSource::Custom(format!("power {s}")),
            value: Arc::new(move |t| (v(t).ln() * s).exp()),
            regular: Arc::new(move |t| {
                let e = v2(t);
                r(t) * s * (e.ln() * (s - 1.0)).exp()
            }),
            corner_tol: self.corner_tol,
        })
    }

    /// `∫₀ᵗ f(s, regular_part(s)) s^{−α} ds`, integrated in `τ = s^{1−α}`.
    pub fn integrate_weighted<F>(&self, t: f64, tol: f64, f: F) -> Result<C64>
    where
        F: Fn(f64, C64) -> C64,
    {
        if t <= 0.0 {
            return Ok(C64::new(0.0, 0.0));
        }
        let jac = 1.0 / (1.0 - self.alpha);
        quad::adaptive(
            |tau| {
                let s = self.t_of(tau).min(t);
                f(s, self.regular_part(s)) * jac
            },
            0.0,
            self.tau_of(t),
            tol,
        )
    }

    /// `∫₀ᵗ f(derivative, value) ds` with the corner singularity removed by `s = τ^{1/(1−α)}`.
    pub fn integrate_against<F>(&self, t: f64, tol: f64, f: F) -> Result<C64>
    where
        F: Fn(C64, C64) -> C64,
    {
        if t <= 0.0 {
            return Ok(C64::new(0.0, 0.0));
        }
        let jac = 1.0 / (1.0 - self.alpha);
        let tau_end = self.tau_of(t);
        quad::adaptive(
            |tau| {
                let s = self.t_of(tau).min(t);
                f(self.regular_part(s), self.value(s)) * jac
            },
            0.0,
            tau_end,
            tol,
        )
    }
}

fn half() -> f64 {
    0.5
}

/// Serializable description of a datum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DatumSpec {
    /// `E ≡ 1`.
    Unit {
        #[serde(default = "half")]
        alpha: f64,
    },
    KhanPenrose,
    NutkuHalil,
    /// `V = −log((1+√t)/(1−√t))`, the collinear form of the Khan–Penrose data.
    KhanPenroseLog,
    /// `V = c·√t`.
    CollinearSqrt {
        c: f64,
    },
    /// `V = Σ_j coeffs[j]·t^{j+1}`.
    CollinearPoly {
        coeffs: Vec<f64>,
        #[serde(default)]
        alpha: f64,
    },
    /// Samples of the regular part read from a CSV file `t,re,im`.
    Table {
        path: PathBuf,
        alpha: f64,
        #[serde(default)]
        linear: bool,
    },
}

impl DatumSpec {
    /// Parameter-free family by name.
    pub fn from_name(name: &str) -> Result<Self> {
        Ok(match name {
            "unit" => DatumSpec::Unit { alpha: 0.5 },
            "khan-penrose" => DatumSpec::KhanPenrose,
            "nutku-halil" => DatumSpec::NutkuHalil,
            "khan-penrose-log" => DatumSpec::KhanPenroseLog,
            "collinear-sqrt" => DatumSpec::CollinearSqrt { c: 2.0 },
            "collinear-poly" => DatumSpec::CollinearPoly {
                coeffs: vec![1.0],
                alpha: 0.0,
            },
            "table" => return Err(Error::Config("the table family needs a path and alpha".into())),
            other => return Err(Error::UnknownFamily(other.into())),
        })
    }

    pub fn is_linear(&self) -> bool {
        match self {
            DatumSpec::KhanPenroseLog | DatumSpec::CollinearSqrt { .. } | DatumSpec::CollinearPoly { .. } => true,
            DatumSpec::Table { linear, .. } => *linear,
            _ => false,
        }
    }
}

fn family(name: &str, params: Vec<f64>) -> DatumSource {
    DatumSource::Family { name: name.into(), params }
}

fn closed(kind: DatumKind, alpha: f64, source: DatumSource, value: Profile, regular: Profile) -> BoundaryDatum {
    BoundaryDatum {
        kind,
        alpha,
        source,
        value,
        regular,
        corner_tol: 1e-8,
    }
}

pub fn make_boundary_datum(spec: &DatumSpec, axis: Axis) -> Result<BoundaryDatum> {
    let i = C64::new(0.0, 1.0);
    let one = C64::new(1.0, 0.0);
    Ok(match spec {
        DatumSpec::Unit { alpha } => {
            if !(0.0..1.0).contains(alpha) {
                return Err(Error::Config(format!("alpha = {alpha} must lie in [0, 1)")));
            }
            closed(
                DatumKind::Ernst,
                *alpha,
                family("unit", vec![]),
                Arc::new(move |_| one),
                Arc::new(|_| C64::new(0.0, 0.0)),
            )
        }
        DatumSpec::KhanPenrose => closed(
            DatumKind::Ernst,
            0.5,
            family("khan-penrose", vec![]),
            Arc::new(|t: f64| C64::new((1.0 + t.sqrt()) / (1.0 - t.sqrt()), 0.0)),
            Arc::new(|t: f64| C64::new(1.0 / (1.0 - t.sqrt()).powi(2), 0.0)),
        ),
        DatumSpec::NutkuHalil => {
            let s = match axis {
                Axis::X => -1.0,
                Axis::Y => 1.0,
            };
            closed(
                DatumKind::Ernst,
                0.5,
                family("nutku-halil", vec![]),
                Arc::new(move |t: f64| (one + i * s * t.sqrt()) / (one - i * s * t.sqrt())),
                Arc::new(move |t: f64| {
                    let d = one - i * s * t.sqrt();
                    i * s / (d * d)
                }),
            )
        }
        DatumSpec::KhanPenroseLog => closed(
            DatumKind::Linear,
            0.5,
            family("khan-penrose-log", vec![]),
            Arc::new(|t: f64| C64::new(-2.0 * t.sqrt().atanh(), 0.0)),
            Arc::new(|t: f64| C64::new(-1.0 / (1.0 - t), 0.0)),
        ),
        DatumSpec::CollinearSqrt { c } => {
            let c = *c;
            closed(
                DatumKind::Linear,
                0.5,
                family("collinear-sqrt", vec![c]),
                Arc::new(move |t: f64| C64::new(c * t.sqrt(), 0.0)),
                Arc::new(move |_| C64::new(0.5 * c, 0.0)),
            )
        }
        DatumSpec::CollinearPoly { coeffs, alpha } => {
            if !(0.0..1.0).contains(alpha) {
                return Err(Error::Config(format!("alpha = {alpha} must lie in [0, 1)")));
            }
            let (cv, cd, a) = (coeffs.clone(), coeffs.clone(), *alpha);
            closed(
                DatumKind::Linear,
                a,
                family("collinear-poly", coeffs.clone()),
                Arc::new(move |t: f64| C64::new(cv.iter().rev().fold(0.0, |acc, c| acc * t + c) * t, 0.0)),
                Arc::new(move |t: f64| {
                    let d = cd.iter().enumerate().rev().fold(0.0, |acc, (j, c)| acc * t + (j + 1) as f64 * c);
                    C64::new(d * t.powf(a), 0.0)
                }),
            )
        }
        DatumSpec::Table { path, alpha, linear } => {
            let kind = if *linear { DatumKind::Linear } else { DatumKind::Ernst };
            datum_from_table_file(path, *alpha, kind)?
        }
    })
}

/// Reads a `t,re,im` CSV of regular-part samples.
pub fn datum_from_table_file(path: &Path, alpha: f64, kind: DatumKind) -> Result<BoundaryDatum> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::Table(format!("{}: {e}", path.display())))?;
    let mut samples = Vec::new();
    for (line, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Table(e.to_string()))?;
        if rec.len() != 3 {
            return Err(Error::Table(format!("row {} has {} fields, expected 3", line + 2, rec.len())));
        }
        let num = |k: usize| {
            rec[k]
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Table(format!("row {}: {e}", line + 2)))
        };
        samples.push((num(0)?, C64::new(num(1)?, num(2)?)));
    }
    datum_from_samples(&samples, alpha, kind)
}

/// Piecewise Lagrange interpolant of the regular part in `τ = t^{1−α}`, using the
/// `STENCIL` samples centred on the bracketing interval.
#[derive(Clone, Debug)]
struct Interpolant {
    tau: Vec<f64>,
    vals: Vec<C64>,
}

const STENCIL: usize = 6;

impl Interpolant {
    fn new(tau: Vec<f64>, vals: Vec<C64>) -> Self {
        Interpolant { tau, vals }
    }

    fn eval(&self, t: f64) -> C64 {
        let n = self.tau.len();
        let m = STENCIL.min(n);
        let right = self.tau.partition_point(|&x| x <= t).clamp(1, n - 1);
        let lo = (right - 1).saturating_sub(m / 2 - 1).min(n - m);
        let mut acc = C64::new(0.0, 0.0);
        for i in lo..lo + m {
            let mut w = 1.0;
            for j in lo..lo + m {
                if j != i {
                    w *= (t - self.tau[j]) / (self.tau[i] - self.tau[j]);
                }
            }
            acc += self.vals[i] * w;
        }
        acc
    }
}

const MIN_TABLE_SAMPLES: usize = 8;

/// Datum from samples `(t, regular_part(t))`.
pub fn datum_from_samples(samples: &[(f64, C64)], alpha: f64, kind: DatumKind) -> Result<BoundaryDatum> {
    if samples.len() < MIN_TABLE_SAMPLES {
        return Err(Error::Table(format!(
            "{} samples, at least {MIN_TABLE_SAMPLES} required",
            samples.len()
        )));
    }
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::Config(format!("alpha = {alpha} must lie in [0, 1)")));
    }
    if samples[0].0 < 0.0 || samples.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(Error::Table("sample parameters must be nonnegative and strictly increasing".into()));
    }
    let expo = 1.0 - alpha;
    let tau: Vec<f64> = samples.iter().map(|s| s.0.powf(expo)).collect();
    let interp = Arc::new(Interpolant::new(tau.clone(), samples.iter().map(|s| s.1).collect()));
    let origin = match kind {
        DatumKind::Ernst => C64::new(1.0, 0.0),
        DatumKind::Linear => C64::new(0.0, 0.0),
    };
    let rule = GaussLegendre::get(24);
    let mut knots = vec![0.0];
    knots.extend(tau.iter().copied().filter(|&t| t > 0.0));
    let mut cumulative = vec![origin];
    for w in knots.windows(2) {
        let inc = rule.integrate(w[0], w[1], |s| interp.eval(s)) / expo;
        cumulative.push(cumulative.last().copied().unwrap() + inc);
    }
    if kind == DatumKind::Ernst {
        if let Some(bad) = cumulative.iter().position(|v| v.re <= 0.0) {
            return Err(Error::Table(format!("value has Re <= 0 near tau = {}", knots[bad])));
        }
    }
    let (iv, ir) = (interp.clone(), interp);
    let value: Profile = Arc::new(move |t: f64| {
        let s = t.max(0.0).powf(expo);
        let k = knots.partition_point(|&x| x <= s).saturating_sub(1).min(knots.len() - 1);
        let tail = if s > knots[k] {
            rule.integrate(knots[k], s, |u| iv.eval(u)) / expo
        } else {
            C64::new(0.0, 0.0)
        };
        cumulative[k] + tail
    });
    let regular: Profile = Arc::new(move |t: f64| ir.eval(t.max(0.0).powf(expo)));
    Ok(BoundaryDatum {
        kind,
        alpha,
        source: DatumSource::Table { samples: samples.len() },
        value,
        regular,
        corner_tol: 1e-6,
    })
}

/// `aE + ib` with `a, b` real chosen so that the value at the corner is 1.
pub fn normalize(datum: &BoundaryDatum) -> Result<BoundaryDatum> {
    if datum.kind != DatumKind::Ernst {
        return Err(Error::Config("normalize() applies to Ernst data".into()));
    }
    let e0 = datum.value(0.0);
    if e0.re <= 0.0 {
        return Err(Error::Config("corner value must have positive real part".into()));
    }
    let a = 1.0 / e0.re;
    let b = -e0.im / e0.re;
    let (v, r) = (datum.value.clone(), datum.regular.clone());
    Ok(BoundaryDatum {
        kind: DatumKind::Ernst,
        alpha: datum.alpha,
        source: datum.source.clone(),
        value: Arc::new(move |t| v(t) * a + C64::new(0.0, b)),
        regular: Arc::new(move |t| r(t) * a),
        corner_tol: datum.corner_tol,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub normalization: Check,
    pub positivity: Check,
    pub corner_continuity: Check,
    pub l1_finite: Check,
    pub l1_norm: f64,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.normalization.passed && self.positivity.passed && self.corner_continuity.passed && self.l1_finite.passed
    }
}

const POSITIVITY_SAMPLES: usize = 4001;

pub fn validate(datum: &BoundaryDatum, delta: f64) -> ValidationReport {
    let end = 1.0 - delta;
    let target = match datum.kind {
        DatumKind::Ernst => C64::new(1.0, 0.0),
        DatumKind::Linear => C64::new(0.0, 0.0),
    };
    let v0 = datum.value(0.0);
    let normalization = Check {
        passed: (v0 - target).norm() <= 1e-12,
        detail: format!("value(0) = {v0}, expected {target}"),
    };

    let positivity = match datum.kind {
        DatumKind::Linear => Check {
            passed: true,
            detail: "not required for linear data".into(),
        },
        DatumKind::Ernst => {
            let worst = (0..POSITIVITY_SAMPLES)
                .map(|i| end * i as f64 / (POSITIVITY_SAMPLES - 1) as f64)
                .map(|t| (t, datum.value(t).re))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            Check {
                passed: worst.1 > 0.0,
                detail: format!("min Re value = {:.6e} at t = {:.6}", worst.1, worst.0),
            }
        }
    };

    let seq: Vec<C64> = (10..=30).map(|j| datum.regular_part(0.5f64.powi(j))).collect();
    let diffs: Vec<f64> = seq.windows(2).map(|w| (w[1] - w[0]).norm()).collect();
    let scale = seq.last().unwrap().norm().max(1.0);
    let last = *diffs.last().unwrap();
    let finite = seq.iter().all(|v| v.re.is_finite() && v.im.is_finite());
    let corner_continuity = Check {
        passed: finite && last <= 1e-3 * scale && last <= diffs[0].max(1e-300),
        detail: format!("|R(2^-30) - R(2^-29)| = {last:.3e}"),
    };

    let l1 = datum.integrate_against(end, 1e-8, |r, v| match datum.kind {
        DatumKind::Ernst => C64::new(r.norm() / v.re, 0.0),
        DatumKind::Linear => C64::new(r.norm(), 0.0),
    });
    let (l1_norm, l1_finite) = match l1 {
        Ok(v) if v.re.is_finite() => (
            v.re,
            Check {
                passed: true,
                detail: format!("L1 proxy = {:.6e}", v.re),
            },
        ),
        Ok(v) => (
            v.re,
            Check {
                passed: false,
                detail: "L1 proxy is not finite".into(),
            },
        ),
        Err(e) => (
            f64::INFINITY,
            Check {
                passed: false,
                detail: e.to_string(),
            },
        ),
    };
    ValidationReport {
        normalization,
        positivity,
        corner_continuity,
        l1_finite,
        l1_norm,
    }
}

/// Singular exponent and corner coefficient `m = lim t^α·derivative(t)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CornerData {
    pub alpha: f64,
    pub m: C64,
    /// `α = 0`: the boundary-limit theorem does not cover this case.
    pub outside_theorem: bool,
}

/// Richardson (Neville) extrapolation of the regular part along `t = 2^{−j}`, `j = 10..20`.
pub fn corner_data(datum: &BoundaryDatum) -> Result<CornerData> {
    let js: Vec<i32> = (10..=20).collect();
    let tau: Vec<f64> = js.iter().map(|&j| datum.tau_of(0.5f64.powi(j))).collect();
    let vals: Vec<C64> = js.iter().map(|&j| datum.regular_part(0.5f64.powi(j))).collect();
    let fine = *quad::neville_to_zero(&tau[6..], &vals[6..]).last().unwrap();
    let coarse = *quad::neville_to_zero(&tau[2..7], &vals[2..7]).last().unwrap();
    let spread = (fine - coarse).norm();
    if !spread.is_finite() || spread > datum.corner_tol * fine.norm().max(1.0) {
        return Err(Error::CornerDivergence {
            alpha: datum.alpha,
            spread,
        });
    }
    Ok(CornerData {
        alpha: datum.alpha,
        m: fine,
        outside_theorem: datum.alpha == 0.0,
    })
}
