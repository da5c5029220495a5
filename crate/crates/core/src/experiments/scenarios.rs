//! The six registered scenarios.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{Artifacts, Check, ExperimentConfig, ExperimentReport, FitReport, Scenario, Series};
use crate::bounds::{
    basic_norm, energy_param_bounds, expansion_bound, imperfection_bound, total_error_budget, trotter_bound,
    BasicNorm, BoundReport, BudgetFamilies, ExpansionBound, ExpansionParams, TrajectorySummary,
};
use crate::error::{invalid, Result, SsissError};
use crate::grid_oracle::{
    apply_step, evolve, evolve_steps, harmonic_deviation, trotter_m_norms, Drive, Grid, GridHamiltonian, Observable,
    SpinorGrid, TraceEntry,
};
use crate::gwp_core::{GaussianSuperposition, GwpTerm, InternalLabel, PhysicalConstants, QuadraticHamiltonian, C64};
use crate::mgwp_expand::{lamb_dicke_state, LdOrder};
use crate::potentials::{PotentialKind, PotentialSpec};
use crate::pulses::{
    build_sequence, driven_rotation_exact, target_propagator, PhamdownBeams, PulseSequence, SequenceKind, StepKind,
    Window,
};
use crate::special::{linear_fit, LinearFit};

/// Runs the configured scenario and returns the report with the sequence
/// and final state it produced, if any.
pub fn run_experiment_with_artifacts(config: &ExperimentConfig) -> Result<(ExperimentReport, Artifacts)> {
    config.validate()?;
    let mut report = ExperimentReport::new(config);
    let mut artifacts = Artifacts::default();
    let outcome = match config.scenario {
        Scenario::OracleValidate => oracle_validate(config, &mut report),
        Scenario::ImperfectionSweep => imperfection_sweep(config, &mut report),
        Scenario::TrotterScaling => trotter_scaling(config, &mut report),
        Scenario::PulseBasic => pulse_basic(config, &mut report, &mut artifacts),
        Scenario::SsissRun => ssiss_run(config, &mut report, &mut artifacts),
        Scenario::SelectiveExcite => selective_excite(config, &mut report, &mut artifacts),
    };
    outcome.map_err(|e| with_scenario(config.scenario, e))?;
    Ok((report.finalize(), artifacts))
}

fn with_scenario(s: Scenario, e: SsissError) -> SsissError {
    match e {
        SsissError::BoundaryLeak(m) => SsissError::BoundaryLeak(format!("{s}: {m}")),
        SsissError::GridMismatch(m) => SsissError::GridMismatch(format!("{s}: {m}")),
        SsissError::InvalidParameter(m) => SsissError::InvalidParameter(format!("{s}: {m}")),
        SsissError::NonNormalizable(m) => SsissError::NonNormalizable(format!("{s}: {m}")),
        other => other,
    }
}

fn initial_packet(cfg: &ExperimentConfig) -> Result<GwpTerm> {
    GwpTerm::coherent(cfg.initial.x_c, cfg.initial.p_c, cfg.physics)
}

/// Largest |x_c| reached by a packet oscillating in the harmonic trap.
fn oscillation_amplitude(g: &GwpTerm) -> f64 {
    let c = &g.consts;
    g.x_c.hypot(g.p_c / (c.mass * c.omega))
}

/// Scenario grid: the default mesh for the potential with the configured
/// overrides; `dt_default` replaces the default time step rule.
fn grid_for(
    cfg: &ExperimentConfig,
    potential: &PotentialSpec,
    x_c_max: f64,
    eps_max: f64,
    dt_default: Option<f64>,
) -> Result<Grid> {
    let base = Grid::default_for(potential, x_c_max, eps_max)?;
    let g = Grid::with_default_dt(
        cfg.grid.x_min.unwrap_or(base.x_min),
        cfg.grid.x_max.unwrap_or(base.x_max),
        cfg.grid.n_points.unwrap_or(base.n_points),
        &potential.consts,
    )?;
    g.with_dt(cfg.grid.dt.or(dt_default).unwrap_or(g.dt))
}

fn sample_g0(g: &GwpTerm, grid: Grid) -> Result<SpinorGrid> {
    SpinorGrid::sample(&GaussianSuperposition::single(InternalLabel::G0, g.clone()), grid, g.consts)
}

fn fit_or_fail(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    linear_fit(xs, ys).ok_or_else(|| invalid("scaling fit needs at least three distinct finite points"))
}

fn log_log_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    fit_or_fail(&lx, &ly)
}

/// Ideal trap with the same constants.
fn harmonic_of(p: &PotentialSpec) -> PotentialSpec {
    PotentialSpec::harmonic(p.consts)
}

/// The same shape moved to another joint with the default barrier L = 2x_L,
/// L_h = ½mω²x_L².
fn with_joint(kind: PotentialKind, x_l: f64, consts: PhysicalConstants) -> Result<PotentialSpec> {
    let l_h = 0.5 * consts.stiffness() * x_l * x_l;
    let kind = match kind {
        PotentialKind::SmoothDoubleWell { eps_smooth, .. } => PotentialKind::SmoothDoubleWell {
            x_l,
            l: 2.0 * x_l,
            l_h,
            eps_smooth,
        },
        PotentialKind::DoubleWell { .. } => PotentialKind::DoubleWell { x_l, l: 2.0 * x_l, l_h },
        other => return Err(invalid(format!("potential {other:?} has no joint to sweep"))),
    };
    PotentialSpec::new(kind, consts)
}

// ---------------------------------------------------------------- oracle

/// 1 - |⟨exact|grid⟩|² after one harmonic period, with the exact state from
/// the closed-form packet evolution.
pub(crate) fn harmonic_recurrence(g: &GwpTerm, grid: Grid) -> Result<f64> {
    let c = g.consts;
    let period = 2.0 * PI / c.omega;
    let s0 = sample_g0(g, grid)?;
    let out = evolve(&s0, &GridHamiltonian::field_free(PotentialSpec::harmonic(c)), period)?;
    let exact = sample_g0(&g.evolve_quadratic(QuadraticHamiltonian::Harmonic, period)?, grid)?;
    infidelity(&exact, &out)
}

fn infidelity(a: &SpinorGrid, b: &SpinorGrid) -> Result<f64> {
    let ov = a.inner(b)?.norm_sqr() / (a.norm_sqr() * b.norm_sqr());
    Ok((1.0 - ov).max(0.0))
}

fn oracle_validate(cfg: &ExperimentConfig, report: &mut ExperimentReport) -> Result<()> {
    let c = cfg.physics;
    let g = initial_packet(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut packets = vec![g.clone()];
    for _ in 0..cfg.options.random_packets {
        let x = rng.gen_range(-2.0..2.0);
        let p = rng.gen_range(-1.0..1.0);
        packets.push(GwpTerm::coherent(x, p, c)?);
    }
    let amp = packets.iter().map(oscillation_amplitude).fold(0.0, f64::max);
    let pot = cfg.potential_spec()?;
    let grid = grid_for(cfg, &pot, amp, g.spread(), None)?;

    let infid: Vec<f64> = packets
        .par_iter()
        .map(|p| harmonic_recurrence(p, grid))
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for (i, (p, v)) in packets.iter().zip(&infid).enumerate() {
        report.bounds.push(
            BoundReport::new(
                &format!("harmonic_recurrence[{i}]"),
                "1 - |<exact|grid>|^2 after one period",
                &[("x_c", p.x_c), ("p_c", p.p_c), ("n_points", grid.n_points as f64), ("dt", grid.dt)],
                1e-8,
            )
            .with_measured(*v),
        );
        rows.push(vec![i as f64, p.x_c, p.p_c, *v]);
    }
    report.series.push(Series {
        name: "recurrence".into(),
        columns: vec!["packet".into(), "x_c".into(), "p_c".into(), "infidelity".into()],
        rows,
        plot: vec!["infidelity".into()],
        log_x: false,
        log_y: true,
    });

    // Free spreading against the closed-form free packet.
    let t_free = 2.0 / c.omega;
    let free = PotentialSpec::free(c);
    let g_end = g.evolve_quadratic(QuadraticHamiltonian::Free, t_free)?;
    let reach = g.x_c.abs().max(g_end.x_c.abs());
    let fgrid = grid_for(cfg, &free, reach, g_end.spread(), None)?;
    let s_end = evolve(&sample_g0(&g, fgrid)?, &GridHamiltonian::field_free(free), t_free)?;
    let v = infidelity(&sample_g0(&g_end, fgrid)?, &s_end)?;
    report.bounds.push(
        BoundReport::new(
            "free_spreading",
            "1 - |<exact|grid>|^2 after free evolution",
            &[("t", t_free), ("n_points", fgrid.n_points as f64), ("dt", fgrid.dt)],
            1e-8,
        )
        .with_measured(v),
    );

    conservation_checks(cfg, &g, grid, report)?;
    energy_box_checks(cfg, &mut rng, report)?;
    Ok(())
}

/// Time-independent Hamiltonians exercised by the conservation checks.
fn conservation_cases(cfg: &ExperimentConfig) -> Result<Vec<(String, GridHamiltonian)>> {
    let c = cfg.physics;
    let beams = cfg.beams()?;
    let dw = PotentialSpec::new(PotentialKind::DoubleWell { x_l: 8.0, l: 16.0, l_h: 32.0 }, c)?;
    let rw = PotentialSpec::new(
        PotentialKind::RealWorldWindow {
            x_r: 9.0,
            r: 2.0,
            r_h: 40.5,
            x_l: 8.0,
            l: 16.0,
            l_h: 32.0,
        },
        c,
    )?;
    let sdw = cfg.potential_spec()?;
    let ho = PotentialSpec::harmonic(c);
    let mut cases = vec![
        ("free".to_string(), GridHamiltonian::field_free(PotentialSpec::free(c))),
        ("harmonic".to_string(), GridHamiltonian::field_free(ho)),
        ("double_well".to_string(), GridHamiltonian::field_free(dw)),
        ("configured".to_string(), GridHamiltonian::field_free(sdw)),
        ("real_world_window".to_string(), GridHamiltonian::field_free(rw)),
    ];
    for gamma in crate::pulses::DrivePhase::ALL {
        cases.push((format!("driven_{gamma:?}").to_lowercase(), GridHamiltonian::driven(sdw, beams, gamma)));
    }
    cases.push((
        "rabi".to_string(),
        GridHamiltonian {
            potential: ho,
            drive: Some(Drive::Rabi {
                omega1: 1.0,
                window: Window::below(2.0, 0.5),
            }),
        },
    ));
    Ok(cases)
}

fn conservation_checks(cfg: &ExperimentConfig, g: &GwpTerm, grid: Grid, report: &mut ExperimentReport) -> Result<()> {
    let mut start = sample_g0(g, grid)?;
    // Equal superposition so that the couplings act from the first step.
    start.e = start.g0.clone();
    start.scale(C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0));
    let steps = cfg.options.conservation_steps;
    let cases = conservation_cases(cfg)?;
    let results: Vec<(f64, f64)> = cases
        .par_iter()
        .map(|(_, h)| {
            let e0 = start.observe(&Observable::Energy(*h));
            let n0 = start.norm_sqr();
            let end = evolve_steps(&start, h, grid.dt, steps);
            let e1 = end.observe(&Observable::Energy(*h));
            ((end.norm_sqr() - n0).abs(), ((e1 - e0) / e0).abs())
        })
        .collect();
    let mut rows = Vec::new();
    for (i, ((name, _), (dn, de))) in cases.iter().zip(&results).enumerate() {
        report.checks.push(Check::below(&format!("conservation.{name}.norm_drift"), *dn, 1e-10));
        report.checks.push(Check::below(&format!("conservation.{name}.energy_drift"), *de, 1e-8));
        rows.push(vec![i as f64, *dn, *de]);
    }
    report.series.push(Series {
        name: "conservation".into(),
        columns: vec!["case".into(), "norm_drift".into(), "energy_drift".into()],
        rows,
        plot: vec!["norm_drift".into(), "energy_drift".into()],
        log_x: false,
        log_y: true,
    });
    Ok(())
}

/// Confinement of evolved packet parameters to the energy box, for random
/// packets followed over one period with the closed-form propagator.
fn energy_box_checks(cfg: &ExperimentConfig, rng: &mut ChaCha8Rng, report: &mut ExperimentReport) -> Result<()> {
    let c = cfg.physics;
    let x_l = cfg.potential_spec()?.joint().unwrap_or(8.0);
    let mut violations = 0usize;
    let mut worst_margin = f64::INFINITY;
    let samples = 256;
    for _ in 0..32 {
        let g = GwpTerm::new(
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
            rng.gen_range(0.1..2.0),
            rng.gen_range(-1.0..1.0),
            c,
        )?;
        let e = g.energy()?;
        let b = energy_param_bounds(e, &c)?;
        let tol = 1.0 + 1e-12;
        let mut min_ratio = f64::INFINITY;
        for j in 0..=samples {
            let t = 2.0 * PI / c.omega * j as f64 / samples as f64;
            let h = g.evolve_quadratic(QuadraticHamiltonian::Harmonic, t)?;
            let eps2 = h.spread().powi(2);
            let w = h.linewidth().norm();
            let inside = h.x_c.abs() <= b.x_c_max * tol
                && h.p_c.abs() <= b.p_c_max * tol
                && eps2 >= b.eps2_min / tol
                && eps2 <= b.eps2_max * tol
                && w >= b.w_min / tol
                && w <= b.w_max * tol;
            if !inside {
                violations += 1;
            }
            min_ratio = min_ratio.min((x_l - h.x_c) / h.spread());
        }
        worst_margin = worst_margin.min(min_ratio - b.dev_ratio_lower(x_l));
    }
    report.checks.push(Check::new("energy_box.violations", violations as f64, None, Some(0.0)));
    report.checks.push(Check::new("energy_box.dev_ratio_margin", worst_margin, Some(0.0), None));
    Ok(())
}

// ---------------------------------------------------------- imperfection

fn imperfection_sweep(cfg: &ExperimentConfig, report: &mut ExperimentReport) -> Result<()> {
    let c = cfg.physics;
    let g = initial_packet(cfg)?;
    let eps0 = g.spread();
    let x_ls = cfg.sweep_values("potential.x_l", (4..=8).map(|k| k as f64 * eps0).collect())?;
    let t = cfg.options.periods * 2.0 * PI / c.omega;
    let amp = oscillation_amplitude(&g);
    let points: Vec<(f64, BoundReport)> = x_ls
        .par_iter()
        .map(|&x_l| -> Result<(f64, BoundReport)> {
            let pot = with_joint(cfg.potential, x_l, c)?;
            let grid = grid_for(cfg, &pot, amp, eps0, Some(0.001))?;
            let measured = harmonic_deviation(&g, &pot, grid, t)?.norm_sqr().sqrt();
            let n_s = 512;
            let samples: Vec<(f64, f64)> = (0..=n_s)
                .map(|j| {
                    let h = g.evolve_quadratic(QuadraticHamiltonian::Harmonic, t * j as f64 / n_s as f64)?;
                    Ok((h.x_c, h.spread()))
                })
                .collect::<Result<_>>()?;
            let s = TrajectorySummary::from_samples(&samples, x_l)?;
            let b = imperfection_bound(&s, x_l, &c, t)?
                .with_measured(measured)
                .named(&format!("imperfection[x_L={x_l}]"));
            Ok((s.y_m_min, b))
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    let (mut y2, mut lm) = (Vec::new(), Vec::new());
    for (x_l, (y, b)) in x_ls.iter().zip(&points) {
        let m = b.measured_error.unwrap_or(f64::NAN);
        rows.push(vec![*x_l, *y, b.bound_value, m, b.margin.unwrap_or(f64::NAN)]);
        y2.push(y * y);
        lm.push(m.ln());
        report.bounds.push(b.clone());
    }
    report.series.push(Series {
        name: "imperfection".into(),
        columns: ["x_L", "y_M_min", "bound", "measured", "margin"].map(String::from).to_vec(),
        rows,
        plot: vec!["bound".into(), "measured".into()],
        log_x: false,
        log_y: true,
    });
    let fit = fit_or_fail(&y2, &lm)?;
    report.fits.push(FitReport::new(
        "imperfection_decay",
        "ln(measured) vs y_M_min^2",
        &fit,
        None,
        Some(0.0),
        Some(0.99),
    ));
    Ok(())
}

// --------------------------------------------------------------- trotter

fn trotter_scaling(cfg: &ExperimentConfig, report: &mut ExperimentReport) -> Result<()> {
    let c = cfg.physics;
    let g = initial_packet(cfg)?;
    let pot = PotentialSpec::harmonic(c);
    let beams = cfg.beams()?.with_window(None);
    let gamma = cfg.pulse.gamma;
    let taus = cfg.sweep_values("tau", (0..=5).map(|k| 0.02 * 10f64.powf(k as f64 / 5.0)).collect())?;
    let base = grid_for(cfg, &pot, oscillation_amplitude(&g), g.spread(), None)?;
    let fine = cfg.options.fine_steps as f64;
    let lattice = cfg.options.lattice;
    let out: Vec<BoundReport> = taus
        .par_iter()
        .map(|&tau| -> Result<BoundReport> {
            let grid = base.with_dt(tau / fine)?;
            let s0 = sample_g0(&g, grid)?;
            let exact = evolve(&s0, &GridHamiltonian::driven(pot, beams, gamma), tau)?;
            let h0 = GridHamiltonian::field_free(pot);
            let split = evolve(
                &driven_rotation_exact(&evolve(&s0, &h0, 0.5 * tau)?, &beams, gamma, tau),
                &h0,
                0.5 * tau,
            )?;
            let measured = exact.distance(&split)?;
            let (m1, m2) = trotter_m_norms(&s0, &pot, &beams, gamma, tau, lattice)?;
            Ok(trotter_bound(m1, m2, tau, &c)?
                .with_measured(measured)
                .named(&format!("trotter[tau={tau:.6}]")))
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    let mut meas = Vec::new();
    let mut bnd = Vec::new();
    for (tau, b) in taus.iter().zip(&out) {
        let m = b.measured_error.unwrap_or(f64::NAN);
        rows.push(vec![*tau, b.bound_value, m, b.margin.unwrap_or(f64::NAN)]);
        meas.push(m);
        bnd.push(b.bound_value);
        report.bounds.push(b.clone());
    }
    report.series.push(Series {
        name: "trotter".into(),
        columns: ["tau", "bound", "measured", "margin"].map(String::from).to_vec(),
        rows,
        plot: vec!["bound".into(), "measured".into()],
        log_x: true,
        log_y: true,
    });
    report.fits.push(FitReport::new(
        "trotter_measured_slope",
        "ln(split error) vs ln(tau)",
        &log_log_fit(&taus, &meas)?,
        Some(2.7),
        Some(3.3),
        None,
    ));
    report.fits.push(FitReport::new(
        "trotter_bound_slope",
        "ln(bound) vs ln(tau)",
        &log_log_fit(&taus, &bnd)?,
        Some(2.7),
        Some(3.3),
        None,
    ));
    Ok(())
}

// ------------------------------------------------------ sequence budgets

/// Per-step bounds of one basic sequence, split by family.
#[derive(Debug, Clone, Copy, Default)]
struct SequenceBudget {
    imperfection: f64,
    trotter: f64,
    window: f64,
    mgwp: f64,
}

impl SequenceBudget {
    fn first_kind(&self) -> f64 {
        self.imperfection + self.trotter + self.window + self.mgwp
    }

    fn max(self, o: Self) -> Self {
        Self {
            imperfection: self.imperfection.max(o.imperfection),
            trotter: self.trotter.max(o.trotter),
            window: self.window.max(o.window),
            mgwp: self.mgwp.max(o.mgwp),
        }
    }

    fn reports(&self) -> Vec<BoundReport> {
        [
            ("budget.imperfection", "sum of field-free and driven imperfection bounds", self.imperfection),
            ("budget.trotter", "sum of splitting bounds of the driven steps", self.trotter),
            ("budget.window", "(tau/hbar) 2 hbar Omega0 ||Theta(x - x_L) psi|| per driven step", self.window),
            ("budget.mgwp", "sum of the four ten-term step bounds", self.mgwp),
        ]
        .into_iter()
        .map(|(n, f, v)| BoundReport::new(n, f, &[], v))
        .collect()
    }
}

/// Fixed ingredients of the per-step budget.
struct BudgetContext {
    consts: PhysicalConstants,
    x_l: Option<f64>,
    summary: Option<TrajectorySummary>,
    window_norm: f64,
    omega0: f64,
    mgwp: f64,
    lattice: usize,
    beams_ideal: PhamdownBeams,
    harmonic: PotentialSpec,
}

impl BudgetContext {
    fn new(cfg: &ExperimentConfig, seq: &PulseSequence, g: &GwpTerm, pot: &PotentialSpec) -> Result<Self> {
        let c = pot.consts;
        let energy = cfg.options.energy_margin * g.energy()?;
        let x_l = pot.joint();
        let summary = x_l.map(|x| TrajectorySummary::from_energy(energy, &c, x)).transpose()?;
        // Worst packet of the energy box, centered at x_M with spread ε_M.
        let mut window_norm = 0.0;
        if let (Some(s), Some(w)) = (summary, seq.beams.window) {
            let worst = GwpTerm::new(s.x_m, 0.0, 0.5 * s.eps_m * s.eps_m, 0.0, c)?;
            if let Some(hi) = w.hi {
                window_norm += basic_norm(BasicNorm::StepWeighted, 0, &worst, hi, w.eps)?;
            }
            if let Some(lo) = w.lo {
                // Θ(lo - x) on the packet at -x_M equals Θ(x - (-lo)) on its mirror image at x_M.
                let mirrored = GwpTerm::new(s.x_m, 0.0, 0.5 * s.eps_m * s.eps_m, 0.0, c)?;
                window_norm += basic_norm(BasicNorm::StepWeighted, 0, &mirrored, -lo, w.eps)?;
            }
        }
        let params = ExpansionParams {
            omega0: seq.beams.omega0,
            delta_t: seq.delta_t,
            n: seq.repeats,
            dk: seq.beams.dk(),
            eps0: g.spread(),
            hbar: c.hbar,
            ..Default::default()
        };
        let mut mgwp = 0.0;
        for which in [
            ExpansionBound::SeqStep1,
            ExpansionBound::SeqStep2,
            ExpansionBound::SeqStep3,
            ExpansionBound::SeqStep4,
        ] {
            mgwp += expansion_bound(which, &params)?.bound_value;
        }
        Ok(Self {
            consts: c,
            x_l,
            summary,
            window_norm,
            omega0: seq.beams.omega0,
            mgwp,
            lattice: cfg.options.lattice,
            beams_ideal: seq.beams.with_window(None),
            harmonic: harmonic_of(pot),
        })
    }

    fn imperfection(&self, tau: f64, potential: &PotentialSpec) -> Result<f64> {
        match (self.summary, self.x_l, potential.joint()) {
            (Some(s), Some(x_l), Some(_)) => Ok(imperfection_bound(&s, x_l, &self.consts, tau)?.bound_value),
            _ => Ok(0.0),
        }
    }
}

/// Runs `repeats` basic sequences, recording the trace and the per-step
/// budget of every repetition (commutator norms are taken on the state
/// entering each driven step).
fn run_budgeted(
    state: &SpinorGrid,
    seq: &PulseSequence,
    ctx: &BudgetContext,
    repeats: usize,
) -> Result<(SpinorGrid, Vec<TraceEntry>, SequenceBudget)> {
    let mut cur = state.clone();
    let mut trace = Vec::new();
    let mut worst = SequenceBudget::default();
    let mut t = 0.0;
    for rep in 0..repeats {
        let mut b = SequenceBudget {
            mgwp: ctx.mgwp,
            ..Default::default()
        };
        for (i, step) in seq.steps.iter().enumerate() {
            match step.kind {
                StepKind::FieldFree { tau, .. } => {
                    b.imperfection += ctx.imperfection(tau, &step.potential)?;
                    t += tau;
                }
                StepKind::InverseFieldFree { tau } => t -= tau,
                StepKind::Driven { gamma, tau } => {
                    let (m1, m2) = trotter_m_norms(&cur, &ctx.harmonic, &ctx.beams_ideal, gamma, tau, ctx.lattice)?;
                    b.trotter += trotter_bound(m1, m2, tau, &ctx.consts)?.bound_value;
                    b.imperfection += ctx.imperfection(tau, &step.potential)?;
                    b.window += tau / ctx.consts.hbar * 2.0 * ctx.consts.hbar * ctx.omega0 * ctx.window_norm;
                    t += tau;
                }
            }
            cur = apply_step(&cur, seq, step)?;
            let pops = cur.populations();
            trace.push(TraceEntry {
                repeat: rep,
                step: i,
                t,
                x: cur.observe(&Observable::X),
                p: cur.observe(&Observable::P),
                energy: cur.observe(&Observable::Energy(GridHamiltonian::field_free(step.potential))),
                norm: pops.iter().sum(),
                pop_g0: pops[0],
                pop_e: pops[1],
            });
        }
        worst = worst.max(b);
    }
    Ok((cur, trace, worst))
}

/// Product of the exact driven rotations of one basic sequence, with every
/// field-free step dropped.
fn reduced_rotations(state: &SpinorGrid, seq: &PulseSequence) -> SpinorGrid {
    let ideal = seq.beams.with_window(None);
    let mut cur = state.clone();
    for step in &seq.steps {
        if let StepKind::Driven { gamma, tau } = step.kind {
            cur = driven_rotation_exact(&cur, &ideal, gamma, tau);
        }
    }
    cur
}

fn reduction_bound(seq: &PulseSequence, c: &PhysicalConstants) -> Result<BoundReport> {
    expansion_bound(
        ExpansionBound::PropagatorReduction,
        &ExpansionParams {
            omega0: seq.beams.omega0,
            delta_t: seq.delta_t,
            n: seq.repeats,
            hbar: c.hbar,
            ..Default::default()
        },
    )
}

// ----------------------------------------------------------- pulse-basic

fn pulse_basic(cfg: &ExperimentConfig, report: &mut ExperimentReport, artifacts: &mut Artifacts) -> Result<()> {
    let pot = cfg.potential_spec()?;
    let beams = cfg.beams()?;
    let g = initial_packet(cfg)?;
    let n = cfg.pulse.n;
    let dt0 = cfg.pulse.delta_t;
    let dts = cfg.sweep_values(
        "pulse.delta_t",
        (0..5).map(|j| dt0 * 2f64.powf((j as f64 - 2.0) / 2.0)).collect(),
    )?;
    let grid = grid_for(cfg, &pot, oscillation_amplitude(&g), g.spread(), Some(0.001))?;
    let s0 = sample_g0(&g, grid)?;

    struct Point {
        dt: f64,
        budget: BoundReport,
        reduction: BoundReport,
        parts: SequenceBudget,
        trace: Vec<TraceEntry>,
        seq: PulseSequence,
        state: SpinorGrid,
    }
    let points: Vec<Point> = dts
        .par_iter()
        .map(|&dt| -> Result<Point> {
            let seq = build_sequence(cfg.pulse.kind, dt, n, pot, beams, cfg.pulse.winding)?;
            let ctx = BudgetContext::new(cfg, &seq, &g, &pot)?;
            let (fin, trace, parts) = run_budgeted(&s0, &seq, &ctx, 1)?;
            let tgt = target_propagator(&s0, &seq.beams, dt / (n as f64).sqrt());
            let red = reduction_bound(&seq, &pot.consts)?;
            let measured = fin.phase_aligned_distance(&tgt)?;
            let budget = BoundReport::new(
                &format!("basic_sequence[delta_t={dt:.6}]"),
                "reduction + per-step first-kind budget of one basic sequence",
                &[("delta_t", dt), ("n", n as f64), ("reduction", red.bound_value), ("first_kind", parts.first_kind())],
                red.bound_value + parts.first_kind(),
            )
            .with_measured(measured);
            let reduced = reduced_rotations(&s0, &seq).phase_aligned_distance(&tgt)?;
            let reduction = red.with_measured(reduced).named(&format!("reduction[delta_t={dt:.6}]"));
            Ok(Point {
                dt,
                budget,
                reduction,
                parts,
                trace,
                seq,
                state: fin,
            })
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    let (mut taus, mut meas, mut red) = (Vec::new(), Vec::new(), Vec::new());
    for p in &points {
        let tau = p.dt / (n as f64).sqrt();
        let m = p.budget.measured_error.unwrap_or(f64::NAN);
        let r = p.reduction.measured_error.unwrap_or(f64::NAN);
        rows.push(vec![tau, p.dt, p.budget.bound_value, m, p.reduction.bound_value, r]);
        taus.push(tau);
        meas.push(m);
        red.push(r);
        report.bounds.push(p.budget.clone());
        report.bounds.push(p.reduction.clone());
    }
    report.series.push(Series {
        name: "pulse_basic".into(),
        columns: ["tau", "delta_t", "budget", "measured", "reduction_bound", "reduction_measured"]
            .map(String::from)
            .to_vec(),
        rows,
        plot: vec!["budget".into(), "measured".into(), "reduction_bound".into(), "reduction_measured".into()],
        log_x: true,
        log_y: true,
    });
    report.fits.push(FitReport::new(
        "basic_sequence_slope",
        "ln(sequence error) vs ln(delta_t/sqrt(n))",
        &log_log_fit(&taus, &meas)?,
        Some(2.7),
        Some(3.3),
        None,
    ));
    report.fits.push(FitReport::new(
        "reduction_slope",
        "ln(reduction error) vs ln(delta_t/sqrt(n))",
        &log_log_fit(&taus, &red)?,
        Some(2.7),
        Some(3.3),
        None,
    ));

    // The configured δt (or the middle of the sweep) is the reference point.
    let centre = points
        .iter()
        .min_by(|a, b| (a.dt - dt0).abs().total_cmp(&(b.dt - dt0).abs()))
        .ok_or_else(|| invalid("empty sweep"))?;
    report.bounds.extend(centre.parts.reports());

    // Theoretical sequence in the ideal trap against the configured one.
    if cfg.pulse.kind != SequenceKind::TheoreticalA {
        let theo = build_sequence(SequenceKind::TheoreticalA, centre.dt, n, pot, beams, cfg.pulse.winding)?;
        let ctx = BudgetContext::new(cfg, &theo, &g, &harmonic_of(&pot))?;
        let (fin_t, _, _) = run_budgeted(&s0, &theo, &ctx, 1)?;
        let d = fin_t.phase_aligned_distance(&centre.state)?;
        report.bounds.push(
            BoundReport::new(
                "sequence_consistency",
                "theoretical vs experimental basic sequence within the first-kind budget",
                &[("delta_t", centre.dt), ("n", n as f64)],
                centre.parts.first_kind(),
            )
            .with_measured(d),
        );
    }
    report.trace = centre.trace.clone();
    artifacts.sequence = Some(centre.seq.clone());
    artifacts.final_state = Some(centre.state.clone());
    Ok(())
}

// ------------------------------------------------------------- ssiss-run

/// L1 distance between the total density and the Gaussian with the same
/// norm, mean and variance.
pub fn moment_gaussian_residual(state: &SpinorGrid) -> f64 {
    let dx = state.grid.dx();
    let rho: Vec<f64> = (0..state.grid.n_points)
        .map(|i| {
            state.g0[i].norm_sqr()
                + state.e[i].norm_sqr()
                + state.g1.as_ref().map_or(0.0, |g1| g1[i].norm_sqr())
        })
        .collect();
    let xs = state.grid.xs();
    let norm: f64 = rho.iter().sum::<f64>() * dx;
    let mean: f64 = rho.iter().zip(&xs).map(|(r, x)| r * x).sum::<f64>() * dx / norm;
    let var: f64 = rho.iter().zip(&xs).map(|(r, x)| r * (x - mean).powi(2)).sum::<f64>() * dx / norm;
    let pre = norm / (2.0 * PI * var).sqrt();
    rho.iter()
        .zip(&xs)
        .map(|(r, x)| (r - pre * (-(x - mean).powi(2) / (2.0 * var)).exp()).abs())
        .sum::<f64>()
        * dx
}

fn ssiss_run(cfg: &ExperimentConfig, report: &mut ExperimentReport, artifacts: &mut Artifacts) -> Result<()> {
    let pot = cfg.potential_spec()?;
    let beams = cfg.beams()?;
    let g = initial_packet(cfg)?;
    let c = cfg.physics;
    let n = cfg.pulse.n;
    let dt = cfg.pulse.delta_t;
    let seq = build_sequence(cfg.pulse.kind, dt, n, pot, beams, cfg.pulse.winding)?;
    let grid = grid_for(cfg, &pot, oscillation_amplitude(&g), g.spread(), Some(0.005))?;
    let s0 = sample_g0(&g, grid)?;
    let ctx = BudgetContext::new(cfg, &seq, &g, &pot)?;
    let (fin, trace, parts) = run_budgeted(&s0, &seq, &ctx, n)?;

    // Momentum kick.
    let dk = beams.dk();
    let q = (2.0 * beams.omega0 * dt).powi(2);
    let expected = c.hbar * dk * q * (dk * g.x_c).cos();
    let kick = fin.observe(&Observable::P) - s0.observe(&Observable::P);
    report.checks.push(Check::new("momentum_kick_ratio", kick / expected, Some(0.99), Some(1.01)));

    // Lamb-Dicke state reached by n repetitions of q/n.
    let (q_s, q_c) = (q * (dk * g.x_c).cos(), q * (dk * g.x_c).sin());
    let mut ld = g.clone();
    for _ in 0..n {
        ld = lamb_dicke_state(&ld, q_s, q_c, n, dk, LdOrder::Second)?.0;
    }
    let ld_grid = sample_g0(&ld, grid)?;
    let (ld_one, ld_rb) = lamb_dicke_state(&g, q_s, q_c, 1, dk, LdOrder::Second)?;
    let exact_phase = SpinorGrid::from_fn(grid, c, |x| (C64::from_polar(1.0, q * (dk * x).sin()) * g.eval(x), C64::new(0.0, 0.0)));
    report.bounds.push(
        BoundReport::new(
            "lamb_dicke_second_order",
            "second-order Lamb-Dicke residual of exp{iq sin(dk x)} psi",
            &[("q_s", q_s), ("q_c", q_c), ("dk", dk)],
            ld_rb,
        )
        .with_measured(exact_phase.distance(&sample_g0(&ld_one, grid)?)?),
    );

    let red = reduction_bound(&seq, &c)?;
    let ld_step = expansion_bound(
        ExpansionBound::LdStep,
        &ExpansionParams {
            omega0: beams.omega0,
            delta_t: dt,
            n,
            dk,
            eps0: g.spread(),
            hbar: c.hbar,
            ..Default::default()
        },
    )?;
    let families = BudgetFamilies {
        first_kind: Some(parts.first_kind()),
        reduction: Some(red.bound_value),
        ld_step: Some(ld_step.bound_value),
    };
    let measured = fin.phase_aligned_distance(&ld_grid)?;
    report.bounds.push(total_error_budget(&families, n)?.with_measured(measured));
    report.bounds.push(red.named("budget.reduction"));
    report.bounds.push(ld_step.named("budget.ld_step"));
    report.bounds.extend(parts.reports());

    let e_box = cfg.options.energy_margin * g.energy()?;
    let e_max = trace.iter().map(|t| t.energy).fold(f64::NEG_INFINITY, f64::max);
    report.checks.push(Check::below("energy_box_ratio", e_max / e_box, 1.0));
    report.checks.push(Check::below("single_gaussian_residual", moment_gaussian_residual(&fin), 1e-3));
    report.checks.push(Check::below(
        "norm_drift",
        (fin.norm_sqr() - s0.norm_sqr()).abs(),
        1e-10,
    ));

    report.series.push(Series {
        name: "kick".into(),
        columns: ["t", "p", "pop_e", "energy"].map(String::from).to_vec(),
        rows: trace.iter().map(|e| vec![e.t, e.p, e.pop_e, e.energy]).collect(),
        plot: vec!["p".into()],
        log_x: false,
        log_y: false,
    });
    report.trace = trace;
    artifacts.sequence = Some(seq);
    artifacts.final_state = Some(fin);
    Ok(())
}

// ------------------------------------------------------ selective-excite

/// ‖mask·ψ‖ by a dense trapezoid rule on [x_c - 24ε, x_c + 24ε]; the
/// integrand is smooth, so the rule keeps full relative accuracy even for
/// exponentially small values.
fn masked_norm(g: &GwpTerm, window: &Window) -> f64 {
    let eps = g.spread();
    let (a, b) = (g.x_c - 24.0 * eps, g.x_c + 24.0 * eps);
    let m = 24_000;
    let h = (b - a) / m as f64;
    let f = |x: f64| (window.mask(x) * g.eval(x).norm()).powi(2);
    let mut s = 0.5 * (f(a) + f(b));
    for i in 1..m {
        s += f(a + i as f64 * h);
    }
    (s * h).sqrt()
}

fn selective_excite(cfg: &ExperimentConfig, report: &mut ExperimentReport, artifacts: &mut Artifacts) -> Result<()> {
    let c = cfg.physics;
    let o = &cfg.options;
    let target = GwpTerm::coherent(o.target_x, 0.0, c)?;
    let spectator = GwpTerm::coherent(o.spectator_x, 0.0, c)?;
    let window = Window::between(o.window_lo, o.window_hi, o.window_eps);
    let free = PotentialSpec::free(c);
    let reach = o.target_x.abs().max(o.spectator_x.abs());
    let grid = grid_for(cfg, &free, reach, target.spread(), None)?;
    let ham = GridHamiltonian {
        potential: free,
        drive: Some(Drive::Rabi {
            omega1: o.omega1,
            window,
        }),
    };
    let tau = PI / o.omega1;

    let amp = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let mut pair = GaussianSuperposition::default();
    pair.push(InternalLabel::G0, target.clone().with_amplitude(amp));
    pair.push(InternalLabel::G0, spectator.clone().with_amplitude(amp));
    let fin = evolve(&SpinorGrid::sample(&pair, grid, c)?, &ham, tau)?;
    let split = 0.5 * (o.target_x + o.spectator_x);
    let target_left = o.target_x < o.spectator_x;
    let side = |x: f64| (x < split) == target_left;
    let (mut tg, mut te, mut sg, mut se) = (0.0, 0.0, 0.0, 0.0);
    for i in 0..grid.n_points {
        let (pg, pe) = (fin.g0[i].norm_sqr(), fin.e[i].norm_sqr());
        if side(grid.x(i)) {
            tg += pg;
            te += pe;
        } else {
            sg += pg;
            se += pe;
        }
    }
    report.checks.push(Check::above("target_excited_population", te / (tg + te), 0.999));
    report.checks.push(Check::above("spectator_ground_population", sg / (sg + se), 0.999));

    // The spectator alone, against the first-order bound (ω1τ/2)·max_t‖mask ψ(t)‖;
    // free spreading makes the masked norm largest at t = τ.
    let solo = evolve(&sample_g0(&spectator, grid)?, &ham, tau)?;
    let measured = solo.populations()[1].sqrt();
    let spread_end = spectator.evolve_quadratic(QuadraticHamiltonian::Free, tau)?;
    let bound = 0.5 * o.omega1 * tau * masked_norm(&spread_end, &window);
    let y_l = ((o.spectator_x - o.window_hi).abs()).min((o.spectator_x - o.window_lo).abs()) / spectator.spread();
    report.bounds.push(
        BoundReport::new(
            "spectator_excitation",
            "(omega1 tau/2) ||window psi_spectator(tau)||",
            &[("omega1", o.omega1), ("tau", tau), ("Y_L", y_l), ("window_eps", o.window_eps)],
            bound,
        )
        .with_measured(measured),
    );
    report.series.push(Series {
        name: "selective".into(),
        columns: ["Y_L", "target_excited", "spectator_ground", "spectator_amplitude", "bound"]
            .map(String::from)
            .to_vec(),
        rows: vec![vec![y_l, te / (tg + te), sg / (sg + se), measured, bound]],
        plot: vec!["spectator_amplitude".into(), "bound".into()],
        log_x: false,
        log_y: true,
    });
    artifacts.final_state = Some(fin);
    Ok(())
}
