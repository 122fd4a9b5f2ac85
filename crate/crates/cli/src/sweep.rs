//! Seeded Monte-Carlo sweeps over the gain ratio η.
//!
//! Trial `i` draws its channels from `trial_seed(master_seed, i, salt)`, the
//! same at every grid point: η only rescales `H0`, so the grid is evaluated on
//! common random numbers. Trials run in parallel and are reduced in
//! (grid index, trial index) order.

use std::io::Write;

use rayon::prelude::*;
use rrtx::linalg::{random_semi_unitary, stream_rng};
use rrtx::ortho::orthogonalize_with_svd;
use rrtx::powmin::minimize_power_with_svd;
use rrtx::stats::{compensated_mean, from_db, to_db};
use rrtx::{
    capacity_exact, capacity_white, decompose_h0, min_beta, mrc_capacity, sample_channel_set, stack_active,
    zf_capacity, CapacityReport, ChannelSet, H0Svd,
};

use crate::config::{BetaPolicy, ExperimentConfig};
use crate::error::CliError;
use crate::seeds::{trial_seed, SALT_CHANNEL, SALT_RANDOM_DOF, SALT_THIRD_PANEL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Closed-form minimum-power DoF.
    Optimized,
    /// Haar-random DoF.
    Random,
    /// Proposed scheme, white retransmitted noise.
    ProposedWhite,
    /// Proposed scheme, retransmitted noise kept.
    ProposedExact,
    Zf3Panel,
    Mrc3Panel,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Optimized => "optimized",
            Method::Random => "random",
            Method::ProposedWhite => "proposed-white",
            Method::ProposedExact => "proposed-exact",
            Method::Zf3Panel => "zf-3panel",
            Method::Mrc3Panel => "mrc-3panel",
        }
    }
}

/// One aggregated row; fields that do not apply to a method are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub eta_db: f64,
    pub method: Method,
    /// Mean of 10·log10(‖Θ‖²_F).
    pub mean_power_db: Option<f64>,
    /// Mean of ‖Θ‖²_F.
    pub mean_power_linear: Option<f64>,
    /// Mean of 10·log10(λ0,max).
    pub mean_min_beta_db: f64,
    pub mean_capacity_best: Option<f64>,
    pub mean_capacity_worst: Option<f64>,
    pub trials: usize,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

pub const CSV_HEADER: [&str; 8] = [
    "eta_db",
    "method",
    "mean_power_db",
    "mean_power_linear",
    "mean_min_beta_db",
    "mean_capacity_best",
    "mean_capacity_worst",
    "trials",
];

/// Twelve significant digits.
fn fmt_float(x: f64) -> String {
    format!("{x:.11e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_default()
}

impl SweepResult {
    pub fn row(&self, eta_db: f64, method: Method) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.eta_db == eta_db && r.method == method)
    }

    pub fn rows_for(&self, method: Method) -> impl Iterator<Item = &SweepRow> {
        self.rows.iter().filter(move |r| r.method == method)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), CliError> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::CRLF)
            .from_writer(out);
        w.write_record(CSV_HEADER)?;
        for r in &self.rows {
            w.write_record([
                fmt_float(r.eta_db),
                r.method.as_str().to_string(),
                fmt_opt(r.mean_power_db),
                fmt_opt(r.mean_power_linear),
                fmt_float(r.mean_min_beta_db),
                fmt_opt(r.mean_capacity_best),
                fmt_opt(r.mean_capacity_worst),
                r.trials.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String, CliError> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }
}

/// Channel realization and its SVD for one (grid point, trial).
struct Realization {
    cs: ChannelSet,
    svd: H0Svd,
    min_beta: f64,
    beta: f64,
}

fn realize(cfg: &ExperimentConfig, eta_db: f64, trial: usize) -> Result<Realization, CliError> {
    let wrap = |source| CliError::Numerical { eta_db, trial, source };
    let dims = cfg.dimensions()?;
    let seed = trial_seed(cfg.master_seed, trial as u64, SALT_CHANNEL);
    let cs = sample_channel_set(dims, from_db(eta_db), cfg.noise.n0, cfg.noise.ntilde0, seed).map_err(wrap)?;
    let svd = decompose_h0(&cs.h0).map_err(wrap)?;
    let lmax = min_beta(&svd);
    let beta = match cfg.beta_policy {
        BetaPolicy::Minimum => lmax,
        BetaPolicy::Fixed(v) => v,
    };
    Ok(Realization {
        cs,
        svd,
        min_beta: lmax,
        beta,
    })
}

/// Per-trial output of the power sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerTrial {
    pub min_beta: f64,
    pub optimized_power: f64,
    pub random_power: f64,
}

fn power_trial(cfg: &ExperimentConfig, eta_db: f64, trial: usize) -> Result<PowerTrial, CliError> {
    let wrap = |source| CliError::Numerical { eta_db, trial, source };
    let r = realize(cfg, eta_db, trial)?;
    let optimized = minimize_power_with_svd(&r.cs, &r.svd, r.beta).map_err(wrap)?;
    let (m, k) = (r.cs.dims.m, r.cs.dims.k);
    let mut rng = stream_rng(trial_seed(cfg.master_seed, trial as u64, SALT_RANDOM_DOF), 0);
    let utilde = random_semi_unitary(m - k, k, &mut rng);
    let random = orthogonalize_with_svd(&r.cs, &r.svd, r.beta, &utilde).map_err(wrap)?;
    Ok(PowerTrial {
        min_beta: r.min_beta,
        optimized_power: optimized.solution.power,
        random_power: random.power,
    })
}

/// Runs `f` on every (grid point, trial) pair; result `[i][j]` is grid point i, trial j.
fn run_grid<T, F>(cfg: &ExperimentConfig, f: F) -> Result<Vec<Vec<T>>, CliError>
where
    T: Send,
    F: Fn(&ExperimentConfig, f64, usize) -> Result<T, CliError> + Sync,
{
    let n = cfg.trials;
    let flat: Vec<T> = (0..cfg.eta_grid_db.len() * n)
        .into_par_iter()
        .map(|idx| f(cfg, cfg.eta_grid_db[idx / n], idx % n))
        .collect::<Result<_, _>>()?;
    let mut grid = Vec::with_capacity(cfg.eta_grid_db.len());
    let mut it = flat.into_iter();
    for _ in 0..cfg.eta_grid_db.len() {
        grid.push(it.by_ref().take(n).collect());
    }
    Ok(grid)
}

/// Per-trial powers for every grid point.
pub fn power_trials(cfg: &ExperimentConfig) -> Result<Vec<Vec<PowerTrial>>, CliError> {
    cfg.require_orthogonalizable()?;
    run_grid(cfg, power_trial)
}

/// Per-method accessors on trial records.
type PowerOf = fn(&PowerTrial) -> f64;
type ReportOf = fn(&CapacityTrial) -> &CapacityReport;

fn mean_of<T>(items: &[T], f: impl Fn(&T) -> f64) -> f64 {
    compensated_mean(&items.iter().map(f).collect::<Vec<_>>())
}

/// Minimum RRTx power, optimized vs random DoF, and the minimum gain per UE.
pub fn run_power_sweep(cfg: &ExperimentConfig) -> Result<SweepResult, CliError> {
    let grid = power_trials(cfg)?;
    let mut rows = Vec::new();
    for (eta_db, trials) in cfg.eta_grid_db.iter().zip(&grid) {
        let beta_db = mean_of(trials, |t| to_db(t.min_beta));
        let methods: [(Method, PowerOf); 2] = [
            (Method::Optimized, |t| t.optimized_power),
            (Method::Random, |t| t.random_power),
        ];
        for (method, power) in methods {
            rows.push(SweepRow {
                eta_db: *eta_db,
                method,
                mean_power_db: Some(mean_of(trials, |t| to_db(power(t)))),
                mean_power_linear: Some(mean_of(trials, power)),
                mean_min_beta_db: beta_db,
                mean_capacity_best: None,
                mean_capacity_worst: None,
                trials: trials.len(),
            });
        }
    }
    Ok(SweepResult { rows })
}

/// Per-trial output of the capacity sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct CapacityTrial {
    pub min_beta: f64,
    pub power: f64,
    pub white: CapacityReport,
    pub exact: CapacityReport,
    pub zf: CapacityReport,
    pub mrc: CapacityReport,
}

fn capacity_trial(cfg: &ExperimentConfig, eta_db: f64, trial: usize) -> Result<CapacityTrial, CliError> {
    let wrap = |source| CliError::Numerical { eta_db, trial, source };
    let r = realize(cfg, eta_db, trial)?;
    let (k, t) = (r.cs.dims.k, r.cs.dims.t);
    let sol = minimize_power_with_svd(&r.cs, &r.svd, r.beta).map_err(wrap)?.solution;
    let white = capacity_white(sol.beta, r.cs.n0, k).map_err(wrap)?;
    let exact = capacity_exact(&r.cs, &sol, t).map_err(wrap)?;
    let h3_seed = trial_seed(cfg.master_seed, trial as u64, SALT_THIRD_PANEL);
    let stacked = stack_active(&r.cs, h3_seed, cfg.fairness_scale).map_err(wrap)?;
    let zf = zf_capacity(&stacked).map_err(wrap)?;
    let mrc = mrc_capacity(&stacked).map_err(wrap)?;
    Ok(CapacityTrial {
        min_beta: r.min_beta,
        power: sol.power,
        white,
        exact,
        zf,
        mrc,
    })
}

pub fn capacity_trials(cfg: &ExperimentConfig) -> Result<Vec<Vec<CapacityTrial>>, CliError> {
    cfg.require_orthogonalizable()?;
    run_grid(cfg, capacity_trial)
}

/// Ergodic best- and worst-UE capacities of the proposed scheme (with and
/// without the white-noise approximation) and of the fully-active baselines.
pub fn run_capacity_sweep(cfg: &ExperimentConfig) -> Result<SweepResult, CliError> {
    let grid = capacity_trials(cfg)?;
    let mut rows = Vec::new();
    for (eta_db, trials) in cfg.eta_grid_db.iter().zip(&grid) {
        let beta_db = mean_of(trials, |t| to_db(t.min_beta));
        let power_db = mean_of(trials, |t| to_db(t.power));
        let power_lin = mean_of(trials, |t| t.power);
        let methods: [(Method, ReportOf); 4] = [
            (Method::ProposedWhite, |t| &t.white),
            (Method::ProposedExact, |t| &t.exact),
            (Method::Zf3Panel, |t| &t.zf),
            (Method::Mrc3Panel, |t| &t.mrc),
        ];
        for (method, report) in methods {
            let proposed = matches!(method, Method::ProposedWhite | Method::ProposedExact);
            rows.push(SweepRow {
                eta_db: *eta_db,
                method,
                mean_power_db: proposed.then_some(power_db),
                mean_power_linear: proposed.then_some(power_lin),
                mean_min_beta_db: beta_db,
                mean_capacity_best: Some(mean_of(trials, |t| report(t).best)),
                mean_capacity_worst: Some(mean_of(trials, |t| report(t).worst)),
                trials: trials.len(),
            });
        }
    }
    Ok(SweepResult { rows })
}
