//! Split-operator spectral propagator for the two-level atom on a uniform
//! periodic mesh. It is the independent numerical reference against which
//! the closed-form analytics and bounds are checked.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result, SsissError};
use crate::gwp_core::{GaussianSuperposition, GwpTerm, InternalLabel, PhysicalConstants, QuadraticHamiltonian, C64};
use crate::potentials::PotentialSpec;
use crate::pulses::{coupling, local_propagator, DrivePhase, PhamdownBeams, PulseSequence, StepKind, Window};

/// Barrier end x_L + L of the default double well (x_L = 8, L = 16).
pub const DEFAULT_BARRIER_END: f64 = 24.0;

/// Largest peak-relative amplitude tolerated at the box edges.
pub const BOUNDARY_TOLERANCE: f64 = 1e-8;

/// Number of edge points inspected by the boundary check.
const EDGE_POINTS: usize = 8;

/// Uniform periodic mesh and the time step of the propagator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    /// Left edge (included).
    pub x_min: f64,
    /// Right edge (excluded, identified with x_min).
    pub x_max: f64,
    /// Number of points, a power of two of at least 256.
    pub n_points: usize,
    /// Largest time step the propagator may take.
    pub dt: f64,
}

impl Grid {
    /// Validated grid.
    pub fn new(x_min: f64, x_max: f64, n_points: usize, dt: f64) -> Result<Self> {
        if !(x_max > x_min && x_min.is_finite() && x_max.is_finite()) {
            return Err(invalid(format!("box [{x_min}, {x_max}] is empty")));
        }
        if n_points < 256 || !n_points.is_power_of_two() {
            return Err(invalid(format!("n_points = {n_points} must be a power of two >= 256")));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(invalid(format!("dt must be positive, got {dt}")));
        }
        Ok(Self {
            x_min,
            x_max,
            n_points,
            dt,
        })
    }

    /// Default mesh: 2048 points on [-(|x_c|max + 12ε), x_L + L + 12ε] with
    /// dt = min(0.005/ω, 0.1 m dx²/ħ). Potentials without a barrier use the
    /// default barrier end `DEFAULT_BARRIER_END`.
    pub fn default_for(potential: &PotentialSpec, x_c_max: f64, eps_max: f64) -> Result<Self> {
        let left = -(x_c_max.abs() + 12.0 * eps_max);
        let end = potential.barrier_end().unwrap_or(DEFAULT_BARRIER_END);
        let right = end.max(x_c_max.abs()) + 12.0 * eps_max;
        Self::with_default_dt(left, right, 2048, &potential.consts)
    }

    /// Mesh with the default time step rule.
    pub fn with_default_dt(x_min: f64, x_max: f64, n_points: usize, c: &PhysicalConstants) -> Result<Self> {
        let dx = (x_max - x_min) / n_points as f64;
        let dt = (0.005 / c.omega).min(0.1 * c.mass * dx * dx / c.hbar);
        Self::new(x_min, x_max, n_points, dt)
    }

    /// Same mesh with another time step.
    pub fn with_dt(mut self, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(invalid(format!("dt must be positive, got {dt}")));
        }
        self.dt = dt;
        Ok(self)
    }

    /// Mesh spacing.
    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.n_points as f64
    }

    /// Position of point i.
    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx()
    }

    /// All positions.
    pub fn xs(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.x(i)).collect()
    }

    /// Angular wavenumbers in FFT order.
    pub fn ks(&self) -> Vec<f64> {
        let n = self.n_points;
        let dk = 2.0 * PI / (self.x_max - self.x_min);
        (0..n)
            .map(|j| if j < n / 2 { j as f64 * dk } else { (j as f64 - n as f64) * dk })
            .collect()
    }
}

/// Two- or three-component wavefunction sampled on a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinorGrid {
    /// Mesh.
    pub grid: Grid,
    /// Constants used for kinetic energy and phases.
    pub consts: PhysicalConstants,
    /// Amplitude on |g0⟩.
    pub g0: Vec<C64>,
    /// Amplitude on |e⟩.
    pub e: Vec<C64>,
    /// Amplitude on |g1⟩, if tracked.
    pub g1: Option<Vec<C64>>,
}

/// Hamiltonian of one evolution segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridHamiltonian {
    /// Trap potential (same on every internal state).
    pub potential: PotentialSpec,
    /// Optional internal-state coupling.
    pub drive: Option<Drive>,
}

impl GridHamiltonian {
    /// Field-free Hamiltonian.
    pub fn field_free(potential: PotentialSpec) -> Self {
        Self { potential, drive: None }
    }

    /// Potential plus laser coupling at phase γ.
    pub fn driven(potential: PotentialSpec, beams: PhamdownBeams, gamma: DrivePhase) -> Self {
        Self {
            potential,
            drive: Some(Drive::Phamdown { beams, gamma }),
        }
    }
}

/// Internal-state couplings available to the propagator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Drive {
    /// The phase-modulated beam pair at drive phase γ.
    Phamdown {
        /// Beams.
        beams: PhamdownBeams,
        /// Drive phase.
        gamma: DrivePhase,
    },
    /// ħΩ(x) I_x with Ω(x) = ω1 times a smoothed window.
    Rabi {
        /// Peak Rabi frequency ω1.
        omega1: f64,
        /// Window.
        window: Window,
    },
}

impl Drive {
    fn coupling_at(&self, x: f64, hbar: f64) -> crate::pulses::Coupling {
        match self {
            Drive::Phamdown { beams, gamma } => coupling(beams, *gamma, x, hbar),
            Drive::Rabi { omega1, window } => crate::pulses::Coupling {
                qx: hbar * omega1 * window.mask(x),
                qy: 0.0,
            },
        }
    }
}

/// Scalar observables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Observable {
    /// ⟨x⟩.
    X,
    /// ⟨p⟩.
    P,
    /// ⟨x²⟩.
    X2,
    /// ⟨p²⟩.
    P2,
    /// ⟨H⟩ for the given Hamiltonian.
    Energy(GridHamiltonian),
    /// Total probability.
    Norm,
}

/// Forward and inverse FFT plans for one mesh size.
struct Plans {
    fwd: FftPlan,
    inv: FftPlan,
}

/// One FFT direction with a preallocated scratch buffer.
struct FftPlan {
    fft: Arc<dyn Fft<f64>>,
    scratch: RefCell<Vec<C64>>,
}

impl FftPlan {
    fn new(fft: Arc<dyn Fft<f64>>) -> Self {
        let scratch = RefCell::new(vec![C64::new(0.0, 0.0); fft.get_inplace_scratch_len()]);
        Self { fft, scratch }
    }

    fn process(&self, buf: &mut [C64]) {
        self.fft.process_with_scratch(buf, &mut self.scratch.borrow_mut());
    }
}

impl Plans {
    fn new(n: usize) -> Self {
        let mut p = FftPlanner::new();
        Self {
            fwd: FftPlan::new(p.plan_fft_forward(n)),
            inv: FftPlan::new(p.plan_fft_inverse(n)),
        }
    }
}

impl SpinorGrid {
    /// Zero state on a grid.
    pub fn zeros(grid: Grid, consts: PhysicalConstants, with_g1: bool) -> Self {
        let z = vec![C64::new(0.0, 0.0); grid.n_points];
        Self {
            grid,
            consts,
            g0: z.clone(),
            e: z.clone(),
            g1: if with_g1 { Some(z) } else { None },
        }
    }

    /// Samples a Gaussian superposition; every term's 8ε support must lie inside the box.
    pub fn sample(src: &GaussianSuperposition, grid: Grid, consts: PhysicalConstants) -> Result<Self> {
        for t in &src.terms {
            let eps = t.term.spread();
            if t.term.x_c - 8.0 * eps < grid.x_min || t.term.x_c + 8.0 * eps > grid.x_max {
                return Err(SsissError::BoundaryLeak(format!(
                    "term at x_c = {} with spread {eps} leaves the box [{}, {}]",
                    t.term.x_c, grid.x_min, grid.x_max
                )));
            }
        }
        let has_g1 = src.terms.iter().any(|t| t.label == InternalLabel::G1);
        let mut s = Self::zeros(grid, consts, has_g1);
        for t in &src.terms {
            let buf = match t.label {
                InternalLabel::G0 => &mut s.g0,
                InternalLabel::E => &mut s.e,
                InternalLabel::G1 => s.g1.as_mut().expect("g1 allocated"),
            };
            for (i, v) in buf.iter_mut().enumerate() {
                *v += t.term.eval(grid.x(i));
            }
        }
        Ok(s)
    }

    /// Builds a state from a function of (x) for each of g0 and e.
    pub fn from_fn(grid: Grid, consts: PhysicalConstants, f: impl Fn(f64) -> (C64, C64)) -> Self {
        let mut s = Self::zeros(grid, consts, false);
        for i in 0..grid.n_points {
            let (g, e) = f(grid.x(i));
            s.g0[i] = g;
            s.e[i] = e;
        }
        s
    }

    fn components(&self) -> Vec<&Vec<C64>> {
        let mut v = vec![&self.g0, &self.e];
        if let Some(g1) = &self.g1 {
            v.push(g1);
        }
        v
    }

    /// Probability on each internal state (g0, e, g1).
    pub fn populations(&self) -> [f64; 3] {
        let dx = self.grid.dx();
        let p = |v: &Vec<C64>| v.iter().map(|c| c.norm_sqr()).sum::<f64>() * dx;
        [p(&self.g0), p(&self.e), self.g1.as_ref().map_or(0.0, p)]
    }

    /// Total probability.
    pub fn norm_sqr(&self) -> f64 {
        self.populations().iter().sum()
    }

    /// ⟨self|other⟩ over all components.
    pub fn inner(&self, other: &SpinorGrid) -> Result<C64> {
        self.check_same_grid(other)?;
        let dx = self.grid.dx();
        let dot = |a: &Vec<C64>, b: &Vec<C64>| a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<C64>();
        let mut s = dot(&self.g0, &other.g0) + dot(&self.e, &other.e);
        if let (Some(a), Some(b)) = (&self.g1, &other.g1) {
            s += dot(a, b);
        }
        Ok(s * dx)
    }

    /// ‖self - other‖.
    pub fn distance(&self, other: &SpinorGrid) -> Result<f64> {
        self.phased_distance(other, 0.0)
    }

    /// min over φ of ‖e^{iφ} self - other‖.
    pub fn phase_aligned_distance(&self, other: &SpinorGrid) -> Result<f64> {
        let phi = self.inner(other)?.arg();
        self.phased_distance(other, phi)
    }

    fn phased_distance(&self, other: &SpinorGrid, phi: f64) -> Result<f64> {
        self.check_same_grid(other)?;
        let r = C64::from_polar(1.0, phi);
        let d = |a: &Vec<C64>, b: &Vec<C64>| a.iter().zip(b).map(|(x, y)| (r * x - y).norm_sqr()).sum::<f64>();
        let mut s = d(&self.g0, &other.g0) + d(&self.e, &other.e);
        match (&self.g1, &other.g1) {
            (Some(a), Some(b)) => s += d(a, b),
            (Some(a), None) | (None, Some(a)) => s += a.iter().map(|c| c.norm_sqr()).sum::<f64>(),
            (None, None) => {}
        }
        Ok((s * self.grid.dx()).sqrt())
    }

    fn check_same_grid(&self, other: &SpinorGrid) -> Result<()> {
        if self.grid.n_points != other.grid.n_points
            || (self.grid.x_min - other.grid.x_min).abs() > 1e-12
            || (self.grid.x_max - other.grid.x_max).abs() > 1e-12
        {
            return Err(SsissError::GridMismatch("states live on different meshes".into()));
        }
        Ok(())
    }

    /// Multiplies every component by a constant.
    pub fn scale(&mut self, c: C64) {
        self.g0.iter_mut().for_each(|v| *v *= c);
        self.e.iter_mut().for_each(|v| *v *= c);
        if let Some(g1) = &mut self.g1 {
            g1.iter_mut().for_each(|v| *v *= c);
        }
    }

    /// Largest peak-relative amplitude among the edge points.
    pub fn boundary_ratio(&self) -> f64 {
        let mut peak = 0.0f64;
        let mut edge = 0.0f64;
        let n = self.grid.n_points;
        for comp in self.components() {
            for (i, v) in comp.iter().enumerate() {
                let a = v.norm();
                peak = peak.max(a);
                if i < EDGE_POINTS || i >= n - EDGE_POINTS {
                    edge = edge.max(a);
                }
            }
        }
        if peak == 0.0 {
            0.0
        } else {
            edge / peak
        }
    }

    fn check_boundary(&self, context: &str) -> Result<()> {
        let r = self.boundary_ratio();
        if r > BOUNDARY_TOLERANCE {
            return Err(SsissError::BoundaryLeak(format!(
                "{context}: edge amplitude is {r:.3e} of the peak"
            )));
        }
        Ok(())
    }

    /// Expectation value; position and momentum moments are normalized by the norm.
    pub fn observe(&self, obs: &Observable) -> f64 {
        let norm = self.norm_sqr();
        match obs {
            Observable::Norm => norm,
            Observable::X | Observable::X2 => {
                let pw = if matches!(obs, Observable::X) { 1 } else { 2 };
                let dx = self.grid.dx();
                let mut s = 0.0;
                for comp in self.components() {
                    for (i, v) in comp.iter().enumerate() {
                        s += self.grid.x(i).powi(pw) * v.norm_sqr();
                    }
                }
                s * dx / norm
            }
            Observable::P | Observable::P2 => {
                let pw = if matches!(obs, Observable::P) { 1 } else { 2 };
                let plans = Plans::new(self.grid.n_points);
                let ks = self.grid.ks();
                let (mut num, mut den) = (0.0, 0.0);
                for comp in self.components() {
                    let mut buf = comp.clone();
                    plans.fwd.process(&mut buf);
                    for (k, v) in ks.iter().zip(&buf) {
                        let w = v.norm_sqr();
                        num += (self.consts.hbar * k).powi(pw) * w;
                        den += w;
                    }
                }
                if den == 0.0 {
                    0.0
                } else {
                    num / den
                }
            }
            Observable::Energy(h) => {
                let hpsi = apply_hamiltonian(self, h);
                self.inner(&hpsi).map(|c| c.re / norm).unwrap_or(f64::NAN)
            }
        }
    }

    /// Writes x and the real and imaginary parts of every component as CSV.
    pub fn to_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["x", "g0_re", "g0_im", "e_re", "e_im"];
        if self.g1.is_some() {
            header.extend(["g1_re", "g1_im"]);
        }
        w.write_record(&header)?;
        for i in 0..self.grid.n_points {
            let mut row = vec![
                self.grid.x(i),
                self.g0[i].re,
                self.g0[i].im,
                self.e[i].re,
                self.e[i].im,
            ];
            if let Some(g1) = &self.g1 {
                row.extend([g1[i].re, g1[i].im]);
            }
            w.write_record(row.iter().map(|v| format!("{v:.17e}")))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Writes `<stem>.bin` (little-endian f64 arrays: re then im of g0, e and
    /// optionally g1) and a `<stem>.json` sidecar describing the layout.
    pub fn to_binary(&self, dir: &Path, stem: &str) -> Result<()> {
        let mut f = BufWriter::new(File::create(dir.join(format!("{stem}.bin")))?);
        let mut names = Vec::new();
        let mut emit = |name: &str, comp: &Vec<C64>, f: &mut BufWriter<File>| -> Result<()> {
            for v in comp {
                f.write_all(&v.re.to_le_bytes())?;
            }
            for v in comp {
                f.write_all(&v.im.to_le_bytes())?;
            }
            names.push(format!("{name}_re"));
            names.push(format!("{name}_im"));
            Ok(())
        };
        emit("g0", &self.g0, &mut f)?;
        emit("e", &self.e, &mut f)?;
        if let Some(g1) = &self.g1 {
            emit("g1", g1, &mut f)?;
        }
        f.flush()?;
        let sidecar = BinarySidecar {
            grid: self.grid,
            consts: self.consts,
            dtype: "f64-le".into(),
            arrays: names,
        };
        std::fs::write(dir.join(format!("{stem}.json")), serde_json::to_string_pretty(&sidecar)?)?;
        Ok(())
    }

    /// Reads a state written by `to_binary`.
    pub fn from_binary(dir: &Path, stem: &str) -> Result<Self> {
        let sidecar: BinarySidecar = serde_json::from_str(&std::fs::read_to_string(dir.join(format!("{stem}.json")))?)?;
        let n = sidecar.grid.n_points;
        let mut bytes = Vec::new();
        BufReader::new(File::open(dir.join(format!("{stem}.bin")))?).read_to_end(&mut bytes)?;
        if bytes.len() != sidecar.arrays.len() * n * 8 {
            return Err(SsissError::Serialization("binary length does not match sidecar".into()));
        }
        let vals: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        let comp = |j: usize| -> Vec<C64> {
            (0..n).map(|i| C64::new(vals[2 * j * n + i], vals[(2 * j + 1) * n + i])).collect()
        };
        Ok(Self {
            grid: sidecar.grid,
            consts: sidecar.consts,
            g0: comp(0),
            e: comp(1),
            g1: if sidecar.arrays.len() >= 6 { Some(comp(2)) } else { None },
        })
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct BinarySidecar {
    grid: Grid,
    consts: PhysicalConstants,
    dtype: String,
    arrays: Vec<String>,
}

/// H ψ with the kinetic term applied spectrally.
pub fn apply_hamiltonian(state: &SpinorGrid, h: &GridHamiltonian) -> SpinorGrid {
    let mut out = apply_h0(state, &h.potential);
    if let Some(d) = &h.drive {
        let hi = apply_drive(state, d);
        add_into(&mut out, &hi, 1.0);
    }
    out
}

/// (p²/2m + V) ψ, the field-free Hamiltonian applied to every component.
pub fn apply_h0(state: &SpinorGrid, potential: &PotentialSpec) -> SpinorGrid {
    let n = state.grid.n_points;
    let plans = Plans::new(n);
    let ks = state.grid.ks();
    let c = state.consts;
    let vs: Vec<f64> = state.grid.xs().iter().map(|&x| potential.eval(x)).collect();
    let op = |comp: &Vec<C64>| -> Vec<C64> {
        let mut buf = comp.clone();
        plans.fwd.process(&mut buf);
        for (v, k) in buf.iter_mut().zip(&ks) {
            *v *= c.hbar * c.hbar * k * k / (2.0 * c.mass) / n as f64;
        }
        plans.inv.process(&mut buf);
        buf.iter_mut().zip(comp).zip(&vs).for_each(|((b, p), v)| *b += v * p);
        buf
    };
    SpinorGrid {
        grid: state.grid,
        consts: c,
        g0: op(&state.g0),
        e: op(&state.e),
        g1: state.g1.as_ref().map(op),
    }
}

/// Applies the pointwise coupling matrix; g1 maps to zero.
pub fn apply_drive(state: &SpinorGrid, drive: &Drive) -> SpinorGrid {
    let mut out = SpinorGrid::zeros(state.grid, state.consts, state.g1.is_some());
    for i in 0..state.grid.n_points {
        let cpl = drive.coupling_at(state.grid.x(i), state.consts.hbar);
        let (g, e) = cpl.apply(state.g0[i], state.e[i]);
        out.g0[i] = g;
        out.e[i] = e;
    }
    out
}

fn add_into(a: &mut SpinorGrid, b: &SpinorGrid, s: f64) {
    a.g0.iter_mut().zip(&b.g0).for_each(|(x, y)| *x += s * y);
    a.e.iter_mut().zip(&b.e).for_each(|(x, y)| *x += s * y);
    if let (Some(x), Some(y)) = (&mut a.g1, &b.g1) {
        x.iter_mut().zip(y).for_each(|(p, q)| *p += s * q);
    }
}

fn sub(a: &SpinorGrid, b: &SpinorGrid) -> SpinorGrid {
    let mut out = a.clone();
    add_into(&mut out, b, -1.0);
    out
}

/// Evolves under exp(-iHτ/ħ) by Strang splitting (half kinetic, exact
/// pointwise potential-plus-coupling factor, half kinetic) with
/// ceil(|τ|/dt) equal steps. Negative τ evolves backward.
pub fn evolve(state: &SpinorGrid, ham: &GridHamiltonian, tau: f64) -> Result<SpinorGrid> {
    if !tau.is_finite() {
        return Err(invalid("tau must be finite"));
    }
    if tau == 0.0 {
        return Ok(state.clone());
    }
    state.check_boundary("before evolution")?;
    let grid = state.grid;
    let steps = ((tau.abs() / grid.dt).ceil() as usize).max(1);
    let out = evolve_steps(state, ham, tau / steps as f64, steps);
    out.check_boundary("after evolution")?;
    Ok(out)
}

/// Evolves with an explicit step count and step length; no boundary checks.
pub fn evolve_steps(state: &SpinorGrid, ham: &GridHamiltonian, h: f64, steps: usize) -> SpinorGrid {
    let grid = state.grid;
    let n = grid.n_points;
    let c = state.consts;
    let plans = Plans::new(n);
    let inv_n = 1.0 / n as f64;
    let ks = grid.ks();
    let kin = |frac: f64| -> Vec<C64> {
        ks.iter()
            .map(|k| C64::from_polar(inv_n, -frac * c.hbar * k * k * h / (2.0 * c.mass)))
            .collect()
    };
    let kin_half = kin(0.5);
    let kin_full = kin(1.0);
    let xs = grid.xs();
    let diag: Vec<C64> = xs
        .iter()
        .map(|&x| C64::from_polar(1.0, -ham.potential.eval(x) * h / c.hbar))
        .collect();
    let mut out = state.clone();

    let run_scalar = |buf: &mut Vec<C64>| {
        plans.fwd.process(buf);
        mul(buf, &kin_half);
        for s in 0..steps {
            plans.inv.process(buf);
            mul(buf, &diag);
            plans.fwd.process(buf);
            mul(buf, if s + 1 == steps { &kin_half } else { &kin_full });
        }
        plans.inv.process(buf);
    };

    match &ham.drive {
        None => {
            for buf in [&mut out.g0, &mut out.e] {
                if buf.iter().any(|v| *v != C64::new(0.0, 0.0)) {
                    run_scalar(buf);
                }
            }
        }
        Some(drive) => {
            let us: Vec<[[C64; 2]; 2]> = xs
                .iter()
                .map(|&x| local_propagator(ham.potential.eval(x), drive.coupling_at(x, c.hbar), h, c.hbar))
                .collect();
            let (g0, e) = (&mut out.g0, &mut out.e);
            plans.fwd.process(g0);
            plans.fwd.process(e);
            mul(g0, &kin_half);
            mul(e, &kin_half);
            for s in 0..steps {
                plans.inv.process(g0);
                plans.inv.process(e);
                for i in 0..n {
                    let (a, b) = (g0[i], e[i]);
                    let u = &us[i];
                    g0[i] = u[0][0] * a + u[0][1] * b;
                    e[i] = u[1][0] * a + u[1][1] * b;
                }
                plans.fwd.process(g0);
                plans.fwd.process(e);
                let k = if s + 1 == steps { &kin_half } else { &kin_full };
                mul(g0, k);
                mul(e, k);
            }
            plans.inv.process(g0);
            plans.inv.process(e);
        }
    }
    if let Some(g1) = &mut out.g1 {
        if g1.iter().any(|v| *v != C64::new(0.0, 0.0)) {
            run_scalar(g1);
        }
    }
    out
}

fn mul(a: &mut [C64], b: &[C64]) {
    a.iter_mut().zip(b).for_each(|(x, y)| *x *= y);
}

/// δ(T) = ψ_V(T) - ψ_ho(T) for a pure term evolved in `potential` and,
/// exactly, in the ideal harmonic trap.
///
/// δ obeys iħδ' = H_V δ + ΔV ψ_ho with δ(0) = 0, where ΔV = V - ½mω²x².
/// It is integrated directly, δ ← S(h)δ - (ih/ħ) S(h/2)[ΔV ψ_ho(t + h/2)]
/// with S the Strang step of H_V, so exponentially small deviations keep
/// their relative precision instead of being lost in a subtraction.
/// The result is stored on g0.
pub fn harmonic_deviation(g: &GwpTerm, potential: &PotentialSpec, grid: Grid, t: f64) -> Result<SpinorGrid> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(invalid("duration must be finite and nonnegative"));
    }
    let c = g.consts;
    let n = grid.n_points;
    let mut out = SpinorGrid::zeros(grid, c, false);
    if t == 0.0 {
        return Ok(out);
    }
    let steps = ((t / grid.dt).ceil() as usize).max(1);
    let h = t / steps as f64;
    let plans = Plans::new(n);
    let inv_n = 1.0 / n as f64;
    let ks = grid.ks();
    let xs = grid.xs();
    let kin = |dur: f64| -> Vec<C64> {
        ks.iter()
            .map(|k| C64::from_polar(inv_n, -c.hbar * k * k * dur / (2.0 * c.mass)))
            .collect()
    };
    let diag = |dur: f64| -> Vec<C64> {
        xs.iter()
            .map(|&x| C64::from_polar(1.0, -potential.eval(x) * dur / c.hbar))
            .collect()
    };
    let (k_full, k_half) = (kin(0.5 * h), kin(0.25 * h));
    let (d_full, d_half) = (diag(h), diag(0.5 * h));
    let strang = |buf: &mut Vec<C64>, k: &[C64], d: &[C64]| {
        plans.fwd.process(buf);
        mul(buf, k);
        plans.inv.process(buf);
        mul(buf, d);
        plans.fwd.process(buf);
        mul(buf, k);
        plans.inv.process(buf);
    };
    let dv: Vec<f64> = xs.iter().map(|&x| potential.perturbation(x)).collect();
    let active: Vec<usize> = (0..n).filter(|&i| dv[i] != 0.0).collect();
    let mut delta = vec![C64::new(0.0, 0.0); n];
    let mut src = vec![C64::new(0.0, 0.0); n];
    let kick = C64::new(0.0, -h / c.hbar);
    for s in 0..steps {
        let psi = g.evolve_quadratic(QuadraticHamiltonian::Harmonic, (s as f64 + 0.5) * h)?;
        src.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
        for &i in &active {
            src[i] = kick * dv[i] * psi.eval(xs[i]);
        }
        strang(&mut src, &k_half, &d_half);
        strang(&mut delta, &k_full, &d_full);
        delta.iter_mut().zip(&src).for_each(|(a, b)| *a += b);
    }
    out.g0 = delta;
    Ok(out)
}

/// Observables recorded after one sequence step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    /// Repetition index (0-based).
    pub repeat: usize,
    /// Step index inside the basic sequence.
    pub step: usize,
    /// Elapsed signed evolution time.
    pub t: f64,
    /// ⟨x⟩.
    pub x: f64,
    /// ⟨p⟩.
    pub p: f64,
    /// ⟨H⟩ of the field-free Hamiltonian of the step.
    pub energy: f64,
    /// Total probability.
    pub norm: f64,
    /// Population on g0.
    pub pop_g0: f64,
    /// Population on e.
    pub pop_e: f64,
}

/// Applies one step of a sequence.
pub fn apply_step(state: &SpinorGrid, seq: &PulseSequence, step: &crate::pulses::SequenceStep) -> Result<SpinorGrid> {
    match step.kind {
        StepKind::FieldFree { tau, phase_correction } => {
            let mut s = evolve(state, &GridHamiltonian::field_free(step.potential), tau)?;
            s.scale(C64::from_polar(1.0, phase_correction));
            Ok(s)
        }
        StepKind::InverseFieldFree { tau } => evolve(state, &GridHamiltonian::field_free(step.potential), -tau),
        StepKind::Driven { gamma, tau } => evolve(state, &GridHamiltonian::driven(step.potential, seq.beams, gamma), tau),
    }
}

/// Runs [P]^n and records observables after every step.
pub fn run_sequence(state: &SpinorGrid, seq: &PulseSequence) -> Result<(SpinorGrid, Vec<TraceEntry>)> {
    let mut cur = state.clone();
    let mut trace = Vec::with_capacity(seq.repeats * seq.steps.len());
    let mut t = 0.0;
    for rep in 0..seq.repeats {
        for (i, step) in seq.steps.iter().enumerate() {
            cur = apply_step(&cur, seq, step)?;
            t += match step.kind {
                StepKind::InverseFieldFree { tau } => -tau,
                k => k.tau(),
            };
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
    }
    Ok((cur, trace))
}

/// Nested commutators that enter the symmetric-splitting error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CommutatorKind {
    /// [H_I, [H0, H_I]].
    M1,
    /// [H0, [H0, H_I]].
    M2,
}

/// ‖M ψ‖ for M one of the nested commutators of H0 = p²/2m + V and H_I.
pub fn commutator_norm(
    state: &SpinorGrid,
    which: CommutatorKind,
    potential: &PotentialSpec,
    beams: &PhamdownBeams,
    gamma: DrivePhase,
) -> f64 {
    let d = Drive::Phamdown { beams: *beams, gamma };
    let a = |s: &SpinorGrid| apply_drive(s, &d);
    let b = |s: &SpinorGrid| apply_h0(s, potential);
    let out = match which {
        CommutatorKind::M1 => {
            // [A,[B,A]] = 2ABA - AAB - BAA
            let aba = a(&b(&a(state)));
            let aab = a(&a(&b(state)));
            let baa = b(&a(&a(state)));
            let mut r = aba.clone();
            add_into(&mut r, &aba, 1.0);
            sub(&sub(&r, &aab), &baa)
        }
        CommutatorKind::M2 => {
            // [B,[B,A]] = BBA - 2BAB + ABB
            let bba = b(&b(&a(state)));
            let bab = b(&a(&b(state)));
            let abb = a(&b(&b(state)));
            let mut r = bba;
            add_into(&mut r, &bab, -2.0);
            add_into(&mut r, &abb, 1.0);
            r
        }
    };
    out.norm_sqr().sqrt()
}

/// Maxima of the two commutator norms over the lattice t1, t3 in
/// {0, τ/(m-1), ..., τ} used by the symmetric-splitting error bound:
/// M1 acts on e^{-iH_I(t1 - t3)/ħ} e^{-iH0 t1/(2ħ)} ψ and M2 on
/// e^{-iH0 t3/(2ħ)} e^{-iH_I t1/ħ} e^{-iH0 t1/(2ħ)} ψ.
pub fn trotter_m_norms(
    state: &SpinorGrid,
    potential: &PotentialSpec,
    beams: &PhamdownBeams,
    gamma: DrivePhase,
    tau: f64,
    lattice: usize,
) -> Result<(f64, f64)> {
    let h0 = GridHamiltonian::field_free(*potential);
    let ts: Vec<f64> = (0..lattice).map(|j| tau * j as f64 / (lattice - 1).max(1) as f64).collect();
    let mut m1 = 0.0f64;
    let mut m2 = 0.0f64;
    for &t1 in &ts {
        let half = evolve(state, &h0, 0.5 * t1)?;
        let rot_t1 = crate::pulses::driven_rotation_exact(&half, beams, gamma, t1);
        for &t3 in &ts {
            let r = crate::pulses::driven_rotation_exact(&half, beams, gamma, t1 - t3);
            m1 = m1.max(commutator_norm(&r, CommutatorKind::M1, potential, beams, gamma));
            let s = evolve(&rot_t1, &h0, 0.5 * t3)?;
            m2 = m2.max(commutator_norm(&s, CommutatorKind::M2, potential, beams, gamma));
        }
    }
    Ok((m1, m2))
}
