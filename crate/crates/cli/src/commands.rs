//! Subcommand drivers. Each returns the text for stdout; file outputs are
//! written as a side effect.

use std::f64::consts::PI;
use std::path::Path;

use serde::Serialize;

use ssbm::closedform::{bm_cdf_offset, kld, BmLaw};
use ssbm::distributions::{fit_marginal, EmpiricalCdf, Marginal, MarginalFit, TailModel};
use ssbm::ei::{default_ei_grid, theta_curve, EiCurve};
use ssbm::evi::{wlse_emr, wlse_mpmr, EviFit, EviOptions};
use ssbm::grid::GridSpec;
use ssbm::plateau::{find_plateau, fit_sd_spline, PlateauDiagnostic, PlateauRange};
use ssbm::simulate::{default_estimators, run_benchmark, BenchmarkGrid, BenchmarkRow};
use ssbm::subsample::{bm_curve, mpmr_hat, BmCurve};
use ssbm::{SortedSample, Transform};

use crate::args::{ClosedFormArgs, Command, EiArgs, EviArgs, InputArgs, OutputKind, SimulateArgs, TableFormat, What};
use crate::format::{to_json, SCHEMA_VERSION};
use crate::ingest::{ingest, Series};
use crate::plotdata::{benchmark_csv, write_benchmark, write_bm_curve, write_ei_curve, write_sd_spline};
use crate::CliError;

const SPLINE_PLOT_POINTS: usize = 256;

pub fn run(command: &Command) -> Result<String, CliError> {
    match command {
        Command::Evi(a) => cmd_evi(a),
        Command::Ei(a) => cmd_ei(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::ClosedForm(a) => cmd_closed_form(a),
    }
}

fn json<T: Serialize>(value: &T) -> Result<String, CliError> {
    to_json(value).map_err(|e| CliError::Internal(e.to_string()))
}

fn prepare_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// A fit result or the reason it is missing.
#[derive(Debug, Serialize)]
#[serde(untagged)]
pub enum Outcome<T> {
    Ok(T),
    Err { error: String, kind: &'static str },
}

impl<T> Outcome<T> {
    fn from_core(r: ssbm::Result<T>, stage: &'static str) -> Self {
        match r {
            Ok(v) => Outcome::Ok(v),
            Err(e) => {
                let e = CliError::core(stage)(e);
                Outcome::Err {
                    kind: e.kind(),
                    error: e.to_string(),
                }
            }
        }
    }

    fn ok(&self) -> Option<&T> {
        match self {
            Outcome::Ok(v) => Some(v),
            Outcome::Err { .. } => None,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct InputInfo<'a> {
    #[serde(flatten)]
    pub series: &'a Series,
    pub transform: Transform,
    pub sample_size: usize,
}

fn load(input: &InputArgs) -> Result<Series, CliError> {
    ingest(&input.input, &input.column, input.timestamp.as_deref())
}

#[derive(Debug, Serialize)]
pub struct RiskLevel {
    pub k: u32,
    /// `m* + k·ξ̂π/√6`.
    pub level: f64,
    /// `F_M(level)` under the exponential-law approximation at this n.
    pub probability: f64,
}

#[derive(Debug, Serialize)]
pub struct RiskEntry {
    pub n: f64,
    /// `empirical` (sub-sampled mode, n ≤ N) or `extrapolated` (intercept + ξ̂ ln n).
    pub source: &'static str,
    pub mpmr: f64,
    pub xi_hat: f64,
    pub levels: Vec<RiskLevel>,
    /// `m*/θ` when an extremal index is supplied.
    pub reserve: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct EviFits {
    pub emr_wlse: Outcome<EviFit>,
    pub mpmr_wlse: Outcome<EviFit>,
}

#[derive(Debug, Serialize)]
pub struct CurveRef<'a> {
    pub file: Option<&'static str>,
    pub points: &'a BmCurve,
}

#[derive(Debug, Serialize)]
pub struct EviReport<'a> {
    pub schema: u32,
    pub command: &'static str,
    pub input: InputInfo<'a>,
    pub grid: GridSpec,
    pub delta: f64,
    pub n0: f64,
    pub bm_curve: CurveRef<'a>,
    pub plateau: PlateauRange,
    pub evi: EviFits,
    pub ei_theta: Option<f64>,
    /// Scale of the risk levels (the transformed series).
    pub risk_scale: Transform,
    pub risk: Outcome<Vec<RiskEntry>>,
}

fn risk_block(
    sample: &SortedSample,
    fit: Option<&EviFit>,
    ns: &[f64],
    theta: Option<f64>,
) -> Result<Outcome<Vec<RiskEntry>>, CliError> {
    let Some(fit) = fit else {
        return Ok(Outcome::Err {
            error: "risk: the mpmr_wlse fit is unavailable".into(),
            kind: "diagnostic",
        });
    };
    let big_n = sample.len() as f64;
    let mut out = Vec::new();
    for &n in ns {
        if !(n >= 1.0 && n.is_finite()) {
            return Err(CliError::input("risk", format!("block size must be finite and ≥ 1, got {n}")));
        }
        let (source, m) = if n <= big_n {
            let m = mpmr_hat(sample, n.round() as usize).map_err(CliError::core("risk"))?;
            ("empirical", m)
        } else {
            ("extrapolated", fit.intercept + fit.xi_hat * n.ln())
        };
        let levels = (0..=2u32)
            .map(|k| {
                Ok(RiskLevel {
                    k,
                    level: m + k as f64 * fit.xi_hat * PI / 6f64.sqrt(),
                    probability: bm_cdf_offset(n, k as f64).map_err(CliError::core("risk"))?,
                })
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        out.push(RiskEntry {
            n,
            source,
            mpmr: m,
            xi_hat: fit.xi_hat,
            levels,
            reserve: theta.map(|t| m / t),
        });
    }
    Ok(Outcome::Ok(out))
}

pub fn cmd_evi(a: &EviArgs) -> Result<String, CliError> {
    if !(a.delta > 0.0 && a.delta < 1.0) {
        return Err(CliError::input("arguments", format!("--delta must lie in (0, 1), got {}", a.delta)));
    }
    if let Some(t) = a.ei_theta {
        if !(t > 0.0 && t <= 1.0) {
            return Err(CliError::input("arguments", format!("--ei-theta must lie in (0, 1], got {t}")));
        }
    }
    let series = load(&a.input)?;
    let sample = SortedSample::from_raw(&series.values, a.transform).map_err(CliError::core("transform"))?;
    let curve = bm_curve(&sample, &a.grid).map_err(CliError::core("bm_curve"))?;
    let spline = fit_sd_spline(&curve).map_err(CliError::core("plateau"))?;
    let n0 = a.n0.unwrap_or((sample.len() as f64).sqrt());
    let plateau = find_plateau(&spline, a.delta, n0).map_err(CliError::core("plateau"))?;
    if a.require_plateau && plateau.diagnostic == PlateauDiagnostic::MonotoneNoPlateau {
        return Err(CliError::Diagnostic {
            stage: "plateau",
            message: "monotone_no_plateau: the sd curve decreases throughout".into(),
        });
    }
    let emr = Outcome::from_core(wlse_emr(&curve, &plateau), "wlse_emr");
    let mpmr = Outcome::from_core(wlse_mpmr(&curve, &plateau), "wlse_mpmr");
    if let (Outcome::Err { error: e1, .. }, Outcome::Err { error: e2, .. }) = (&emr, &mpmr) {
        return Err(CliError::Diagnostic {
            stage: "wlse",
            message: format!("both fits failed ({e1}; {e2})"),
        });
    }
    let risk = risk_block(&sample, mpmr.ok(), &a.n_extrapolate, a.ei_theta)?;

    let csv_dir = (a.output == OutputKind::CsvDir).then_some(a.out_dir.as_deref()).flatten();
    let report = EviReport {
        schema: SCHEMA_VERSION,
        command: "evi",
        input: InputInfo {
            series: &series,
            transform: a.transform,
            sample_size: sample.len(),
        },
        grid: a.grid,
        delta: a.delta,
        n0,
        bm_curve: CurveRef {
            file: csv_dir.map(|_| "bm_curve.csv"),
            points: &curve,
        },
        plateau,
        evi: EviFits {
            emr_wlse: emr,
            mpmr_wlse: mpmr,
        },
        ei_theta: a.ei_theta,
        risk_scale: a.transform,
        risk,
    };
    let text = json(&report)?;
    if let Some(dir) = csv_dir {
        prepare_dir(dir)?;
        write_bm_curve(&dir.join("bm_curve.csv"), &curve)?;
        write_sd_spline(&dir.join("sd_spline.csv"), &spline, SPLINE_PLOT_POINTS)?;
        write_text(&dir.join("report.json"), &text)?;
    }
    Ok(text)
}

#[derive(Debug, Serialize)]
pub struct MarginalInfo {
    pub kind: &'static str,
    pub fit: Option<MarginalFit>,
}

#[derive(Debug, Serialize)]
pub struct EiReport<'a> {
    pub schema: u32,
    pub command: &'static str,
    pub input: InputInfo<'a>,
    pub grid: GridSpec,
    pub marginal: MarginalInfo,
    pub curve_file: Option<&'static str>,
    #[serde(flatten)]
    pub curve: &'a EiCurve,
    pub sojourn_time: f64,
}

pub fn cmd_ei(a: &EiArgs) -> Result<String, CliError> {
    let series = load(&a.input)?;
    let x = a.transform.apply(&series.values).map_err(CliError::core("transform"))?;
    let grid = default_ei_grid(x.len(), &a.grid).map_err(CliError::core("ei_grid"))?;
    let (marginal, info): (Box<dyn Marginal>, MarginalInfo) = match a.marginal.family() {
        None => (
            Box::new(EmpiricalCdf::from_values(&x).map_err(CliError::core("marginal"))?),
            MarginalInfo { kind: "ecdf", fit: None },
        ),
        Some(family) => {
            let s = SortedSample::from_raw(&x, Transform::Identity).map_err(CliError::core("marginal"))?;
            let fit = fit_marginal(&s, &[family]).map_err(CliError::core("marginal"))?;
            let model: TailModel = fit.selected;
            (
                Box::new(model),
                MarginalInfo {
                    kind: family.as_str(),
                    fit: Some(fit),
                },
            )
        }
    };
    let curve = theta_curve(&x, marginal.as_ref(), &grid, a.variant).map_err(CliError::core("theta_curve"))?;
    let csv_dir = (a.output == OutputKind::CsvDir).then_some(a.out_dir.as_deref()).flatten();
    let report = EiReport {
        schema: SCHEMA_VERSION,
        command: "ei",
        input: InputInfo {
            series: &series,
            transform: a.transform,
            sample_size: x.len(),
        },
        grid: a.grid,
        marginal: info,
        curve_file: csv_dir.map(|_| "ei_curve.csv"),
        curve: &curve,
        sojourn_time: curve.sojourn_time(),
    };
    let text = json(&report)?;
    if let Some(dir) = csv_dir {
        prepare_dir(dir)?;
        write_ei_curve(&dir.join("ei_curve.csv"), &curve)?;
        write_text(&dir.join("report.json"), &text)?;
    }
    Ok(text)
}

#[derive(Debug, Serialize)]
pub struct BenchmarkReport<'a> {
    pub schema: u32,
    pub command: &'static str,
    pub phi: &'a [f64],
    pub xi: &'a [f64],
    pub length: usize,
    pub replicates: usize,
    pub seed: u64,
    /// `null` means floor(√N).
    pub k: Option<usize>,
    pub rows: &'a [BenchmarkRow],
}

pub fn cmd_simulate(a: &SimulateArgs) -> Result<String, CliError> {
    let grid = BenchmarkGrid {
        phis: a.phi.clone(),
        xis: a.xi.clone(),
        length: a.length,
        replicates: a.replicates,
        base_seed: a.seed,
    };
    let ests = default_estimators(EviOptions::default(), a.k);
    let rows = run_benchmark(&grid, &ests).map_err(CliError::core("simulate"))?;
    let report = BenchmarkReport {
        schema: SCHEMA_VERSION,
        command: "simulate",
        phi: &a.phi,
        xi: &a.xi,
        length: a.length,
        replicates: a.replicates,
        seed: a.seed,
        k: a.k,
        rows: &rows,
    };
    let json_text = json(&report)?;
    if let Some(dir) = &a.out_dir {
        prepare_dir(dir)?;
        write_benchmark(&dir.join("benchmark.csv"), &rows)?;
        write_text(&dir.join("benchmark.json"), &json_text)?;
    }
    match a.format {
        TableFormat::Json => Ok(json_text),
        TableFormat::Csv => {
            let mut out = Vec::new();
            benchmark_csv(&mut out, &rows)?;
            String::from_utf8(out).map_err(|e| CliError::Internal(e.to_string()))
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ClosedFormReport {
    pub schema: u32,
    pub command: &'static str,
    pub model: TailModel,
    pub n: f64,
    pub what: String,
    pub value: f64,
}

pub fn cmd_closed_form(a: &ClosedFormArgs) -> Result<String, CliError> {
    let model = TailModel::new(a.model, a.param).map_err(CliError::core("arguments"))?;
    let law = || BmLaw::new(model, a.n).map_err(CliError::core("arguments"));
    let stage = "closed_form";
    let value = match a.what {
        What::Mpmr => law()?.mpmr_exact(),
        What::MpmrAsymptotic => law()?.mpmr_asymptotic(),
        What::Emr => law()?.emr(),
        What::Variance => law()?.variance(),
        What::CdfOffset(k) => bm_cdf_offset(a.n, k),
        What::Kld(dir) => kld(a.n, dir),
    }
    .map_err(CliError::core(stage))?;
    json(&ClosedFormReport {
        schema: SCHEMA_VERSION,
        command: "closed-form",
        model,
        n: a.n,
        what: a.what.to_string(),
        value,
    })
}
