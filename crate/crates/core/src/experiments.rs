//! Experiment drivers behind the `stpg` command line tool.
//!
//! Each driver fans pathwise work out over a rayon pool and reduces in index
//! order, so the reports do not depend on the number of threads. Reports
//! render as CSV with every float printed to 17 significant digits.

use std::io::Write;

use rayon::prelude::*;

use crate::constants::{constants_report, ConstantsReport, NormChoice};
use crate::error::{Error, Result};
use crate::fem_space::{assemble, build_mesh, SpatialPair};
use crate::oracle::exact_error;
use crate::spacetime::{solve_pathwise, Discretization, ProblemData, SpaceTimeSolution, TimeGrid};
use crate::stochastic::{
    classify_trend, lp_norm, quadrature, Case, LpEstimate, MomentEstimate, Sampling, Trend, TrendRule,
};

/// Settings shared by every driver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// Worker threads; 0 uses every available core.
    pub jobs: usize,
    /// Largest dense matrix dimension any single step may factor.
    pub max_dofs: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { jobs: 0, max_dofs: crate::constants::DEFAULT_MAX_DOFS }
    }
}

impl RunOptions {
    fn install<T: Send>(&self, work: impl FnOnce() -> T + Send) -> Result<T> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.jobs)
            .build()
            .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;
        Ok(pool.install(work))
    }
}

/// Why a report stopped early: a step needed a dense matrix of `size` rows
/// while the cap was `cap`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Truncation {
    pub size: usize,
    pub cap: usize,
}

impl std::fmt::Display for Truncation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "size {} exceeds cap {}", self.size, self.cap)
    }
}

/// Fixed-format float: 17 significant digits, locale independent.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "NaN".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn spatial_pair(dim: usize, n_cells: usize, degree: usize, opts: &RunOptions) -> Result<SpatialPair> {
    let mesh = build_mesh(dim, n_cells, degree)?;
    if mesh.n_dofs() > opts.max_dofs {
        return Err(Error::ResourceCap { size: mesh.n_dofs(), cap: opts.max_dofs });
    }
    assemble(&mesh)
}

/// `‖U(ω)‖_Y` or `+∞` when the coefficients degenerate at `ω`.
fn pathwise_y_norm(disc: &Discretization, data: &ProblemData, case: Case, omega: f64) -> Result<f64> {
    let path = case.eval(omega);
    if path.is_flagged() {
        return Ok(f64::INFINITY);
    }
    Ok(solve_pathwise(data, disc, path.coefficients())?.y_norm(disc))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentsConfig {
    pub case: Case,
    pub dim: usize,
    pub degree: usize,
    pub n_cells: usize,
    pub n_steps: usize,
    pub p: Vec<f64>,
    pub ladder: Vec<usize>,
    pub sampling: Sampling,
    pub trend: TrendRule,
}

impl MomentsConfig {
    pub fn new(case: Case) -> Self {
        MomentsConfig {
            case,
            dim: 2,
            degree: 1,
            n_cells: 8,
            n_steps: 32,
            p: vec![1.0, 2.0],
            ladder: vec![8, 16, 32, 64, 128, 256],
            sampling: Sampling::Midpoint,
            trend: TrendRule::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentsReport {
    pub case: Case,
    pub moments: Vec<MomentEstimate>,
}

impl MomentsReport {
    pub fn trend(&self, p: f64) -> Option<Trend> {
        self.moments.iter().find(|m| m.p == p).map(|m| m.trend)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "case,N,p,estimate,flagged")?;
        for m in &self.moments {
            for (n, e) in m.ladder.iter().zip(&m.estimates) {
                writeln!(w, "{},{},{},{},{}", self.case, n, fmt_f64(m.p), fmt_f64(e.value), e.flagged)?;
            }
        }
        for m in &self.moments {
            writeln!(w, "# trend,p={},{}", fmt_f64(m.p), m.trend)?;
        }
        Ok(())
    }
}

/// Ladder of `L^p(Ω;Y)` estimates of the pathwise solution norms.
pub fn run_moments(cfg: &MomentsConfig, opts: &RunOptions) -> Result<MomentsReport> {
    if cfg.ladder.len() < 4 {
        return Err(Error::invalid(format!("moment ladder needs at least 4 sizes, got {}", cfg.ladder.len())));
    }
    if cfg.ladder.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("moment ladder must be strictly increasing"));
    }
    if cfg.p.is_empty() {
        return Err(Error::invalid("at least one moment order p is required"));
    }
    let pair = spatial_pair(cfg.dim, cfg.n_cells, cfg.degree, opts)?;
    let disc = Discretization::new(pair, TimeGrid::uniform(1.0, cfg.n_steps)?, 0);
    let data = ProblemData::mode(&disc);
    let domain = cfg.case.default_domain().with_sampling(cfg.sampling);

    let mut per_rung: Vec<(Vec<f64>, Vec<f64>)> = Vec::with_capacity(cfg.ladder.len());
    for &n in &cfg.ladder {
        let rule = quadrature(&domain, n)?;
        let norms = opts.install(|| {
            rule.nodes.par_iter().map(|&w| pathwise_y_norm(&disc, &data, cfg.case, w)).collect::<Result<Vec<f64>>>()
        })??;
        per_rung.push((norms, rule.weights));
    }

    let moments = cfg
        .p
        .iter()
        .map(|&p| {
            let estimates = per_rung.iter().map(|(v, w)| lp_norm(p, v, w)).collect::<Result<Vec<LpEstimate>>>()?;
            let values: Vec<f64> = estimates.iter().map(|e| if e.flagged { f64::INFINITY } else { e.value }).collect();
            let trend = classify_trend(&values, &cfg.trend)?;
            Ok(MomentEstimate { p, ladder: cfg.ladder.clone(), estimates, trend })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MomentsReport { case: cfg.case, moments })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceConfig {
    pub case: Case,
    pub dim: usize,
    pub degree: usize,
    pub j_min: u32,
    pub j_max: u32,
    pub n_quad: usize,
    pub sampling: Sampling,
}

impl ConvergenceConfig {
    pub fn new(case: Case) -> Self {
        ConvergenceConfig { case, dim: 1, degree: 1, j_min: 2, j_max: 5, n_quad: 64, sampling: Sampling::Midpoint }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceRow {
    pub j: u32,
    pub h: f64,
    pub k: f64,
    pub n_quad: usize,
    /// `L¹(Ω)` mean of the pathwise Y-errors.
    pub mean_error: f64,
    pub flagged: bool,
    /// `log₂` of the error ratio to the previous row.
    pub observed_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub case: Case,
    pub rows: Vec<ConvergenceRow>,
    /// Stopped early because a level exceeded the size cap.
    pub truncated: Option<Truncation>,
}

impl ConvergenceReport {
    /// Least-squares slope of `log(error)` against `log(h)`.
    pub fn fitted_rate(&self) -> Option<f64> {
        let pts: Vec<(f64, f64)> = self.rows.iter().map(|r| (r.h.ln(), r.mean_error.ln())).collect();
        least_squares_slope(&pts)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "case,j,h,k,n_quad,mean_error,observed_rate")?;
        for r in &self.rows {
            let rate = r.observed_rate.map(fmt_f64).unwrap_or_default();
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                self.case,
                r.j,
                fmt_f64(r.h),
                fmt_f64(r.k),
                r.n_quad,
                fmt_f64(r.mean_error),
                rate
            )?;
        }
        if let Some(rate) = self.fitted_rate() {
            writeln!(w, "# fitted_rate,{}", fmt_f64(rate))?;
        }
        if let Some(e) = &self.truncated {
            writeln!(w, "# truncated,{e}")?;
        }
        Ok(())
    }
}

pub fn least_squares_slope(pts: &[(f64, f64)]) -> Option<f64> {
    if pts.len() < 2 || pts.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Mean Y-error of the mode problem along `h = 2^{-j}`, `k = 2^{-2j}`.
pub fn run_convergence(cfg: &ConvergenceConfig, opts: &RunOptions) -> Result<ConvergenceReport> {
    if !(2 <= cfg.j_min && cfg.j_min <= cfg.j_max && cfg.j_max <= 7) {
        return Err(Error::invalid(format!(
            "refinement levels must satisfy 2 <= j-min <= j-max <= 7, got {}..{}",
            cfg.j_min, cfg.j_max
        )));
    }
    let domain = cfg.case.default_domain().with_sampling(cfg.sampling);
    let rule = quadrature(&domain, cfg.n_quad)?;
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    let mut truncated = None;
    for j in cfg.j_min..=cfg.j_max {
        let n_cells = 1usize << j;
        let n_steps = 1usize << (2 * j);
        let pair = match spatial_pair(cfg.dim, n_cells, cfg.degree, opts) {
            Ok(p) => p,
            Err(Error::ResourceCap { size, cap }) => {
                truncated = Some(Truncation { size, cap });
                break;
            }
            Err(e) => return Err(e),
        };
        let disc = Discretization::new(pair, TimeGrid::uniform(1.0, n_steps)?, 0);
        let data = ProblemData::mode(&disc);
        let errors = opts.install(|| {
            rule.nodes
                .par_iter()
                .map(|&w| {
                    let path = cfg.case.eval(w);
                    if path.is_flagged() {
                        return Ok(f64::INFINITY);
                    }
                    let c = path.coefficients();
                    let u = solve_pathwise(&data, &disc, c)?;
                    Ok(exact_error(&disc, &data, c, &u)?.err_y)
                })
                .collect::<Result<Vec<f64>>>()
        })??;
        let mean = lp_norm(1.0, &errors, &rule.weights)?;
        let h = 1.0 / n_cells as f64;
        let observed_rate = rows.last().map(|prev| (prev.mean_error / mean.value).ln() / (prev.h / h).ln());
        rows.push(ConvergenceRow {
            j,
            h,
            k: 1.0 / n_steps as f64,
            n_quad: cfg.n_quad,
            mean_error: mean.value,
            flagged: mean.flagged,
            observed_rate,
        });
    }
    Ok(ConvergenceReport { case: cfg.case, rows, truncated })
}

#[derive(Debug, Clone, PartialEq)]
pub struct InfsupConfig {
    pub case: Case,
    pub dim: usize,
    pub degree: usize,
    pub cells: Vec<usize>,
    pub steps: Vec<usize>,
    /// Parameter values; empty selects the 4-point rule of the case's domain.
    pub omegas: Vec<f64>,
    pub norms: NormChoice,
}

impl InfsupConfig {
    pub fn new(case: Case) -> Self {
        InfsupConfig {
            case,
            dim: 1,
            degree: 1,
            cells: vec![4, 8],
            steps: vec![4, 16],
            omegas: Vec::new(),
            norms: NormChoice::Weighted,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InfsupRow {
    pub n_cells: usize,
    pub n_steps: usize,
    pub omega: f64,
    pub a_omega: f64,
    /// `None` when the coefficient degenerates at `omega`.
    pub report: Option<ConstantsReport>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InfsupReport {
    pub case: Case,
    pub norms: NormChoice,
    pub rows: Vec<InfsupRow>,
    pub truncated: Option<Truncation>,
}

impl InfsupReport {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "case,n_cells,n_steps,omega,a_omega,sigma_min,sigma_max,c_S,c_S_omega,cB_theory,CB_theory")?;
        for r in &self.rows {
            let vals = match &r.report {
                Some(c) => [c.sigma_min, c.sigma_max, c.c_s, c.c_s_omega, c.c_b_theory, c.cap_c_b_theory],
                None => [f64::NAN; 6],
            };
            let vals: Vec<String> = vals.iter().map(|v| fmt_f64(*v)).collect();
            writeln!(
                w,
                "{},{},{},{},{},{}",
                self.case,
                r.n_cells,
                r.n_steps,
                fmt_f64(r.omega),
                fmt_f64(r.a_omega),
                vals.join(",")
            )?;
        }
        let norms = match self.norms {
            NormChoice::Weighted => "weighted",
            NormChoice::Unweighted => "unweighted",
        };
        writeln!(w, "# norms,{norms}")?;
        if let Some(e) = &self.truncated {
            writeln!(w, "# truncated,{e}")?;
        }
        Ok(())
    }
}

/// Inf-sup, continuity and CFL constants over a grid of `(n_cells, n_steps, ω)`.
pub fn run_infsup(cfg: &InfsupConfig, opts: &RunOptions) -> Result<InfsupReport> {
    if cfg.cells.is_empty() || cfg.steps.is_empty() {
        return Err(Error::invalid("at least one cell count and one step count are required"));
    }
    let omegas = match (cfg.case, cfg.omegas.is_empty()) {
        (Case::Custom { .. }, _) => vec![0.0],
        (_, false) => cfg.omegas.clone(),
        (_, true) => quadrature(&cfg.case.default_domain(), 4)?.nodes,
    };
    let mut rows = Vec::new();
    let mut truncated = None;
    'grid: for &n_cells in &cfg.cells {
        for &n_steps in &cfg.steps {
            let pair = spatial_pair(cfg.dim, n_cells, cfg.degree, opts)?;
            let disc = Discretization::new(pair, TimeGrid::uniform(1.0, n_steps)?, 0);
            if disc.trial_dofs() > opts.max_dofs {
                truncated = Some(Truncation { size: disc.trial_dofs(), cap: opts.max_dofs });
                break 'grid;
            }
            let reports = opts.install(|| {
                omegas
                    .par_iter()
                    .map(|&w| {
                        let path = cfg.case.eval(w);
                        if path.is_flagged() {
                            return Ok((path.a, None));
                        }
                        let r = constants_report(&disc, path.a, cfg.norms, 1.0, opts.max_dofs)?;
                        Ok((path.a, Some(r)))
                    })
                    .collect::<Result<Vec<_>>>()
            })??;
            for (&omega, (a_omega, report)) in omegas.iter().zip(reports) {
                rows.push(InfsupRow { n_cells, n_steps, omega, a_omega, report });
            }
        }
    }
    Ok(InfsupReport { case: cfg.case, norms: cfg.norms, rows, truncated })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveConfig {
    pub case: Case,
    pub dim: usize,
    pub degree: usize,
    pub n_cells: usize,
    pub n_steps: usize,
    pub omega: f64,
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub disc: Discretization,
    pub solution: SpaceTimeSolution,
}

impl SolveReport {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "interval,t_left,t_right,dof,value")?;
        let grid = self.disc.grid();
        for i in 0..grid.n_intervals() {
            let (lo, hi) = grid.interval(i);
            let (lo, hi) = (fmt_f64(lo), fmt_f64(hi));
            for (d, v) in self.solution.block(i, 0).iter().enumerate() {
                writeln!(w, "{i},{lo},{hi},{d},{}", fmt_f64(*v))?;
            }
        }
        Ok(())
    }
}

/// One pathwise solve of the mode problem at `omega`.
pub fn run_solve(cfg: &SolveConfig, opts: &RunOptions) -> Result<SolveReport> {
    let pair = spatial_pair(cfg.dim, cfg.n_cells, cfg.degree, opts)?;
    let disc = Discretization::new(pair, TimeGrid::uniform(1.0, cfg.n_steps)?, 0);
    let data = ProblemData::mode(&disc);
    let solution = solve_pathwise(&data, &disc, cfg.case.eval(cfg.omega).coefficients())?;
    Ok(SolveReport { disc, solution })
}
