//! Time integration of the four equation forms.
//!
//! The physical-variable forms carry the stiff third-order linear phase, so
//! their stepper is classical RK4 in integrating-factor form: the diagonal
//! propagator is applied exactly between stages and only the cubic term is
//! sampled. The interaction-picture forms have no linear part left; they use
//! plain RK4 with the phases evaluated at the exact stage times, which keeps
//! fourth order for the non-autonomous right-hand sides.
//!
//! Everything here is sequential and allocation-plain. Ensembles parallelize
//! one level up, over whole trajectories.

use num_complex::Complex64;
use serde::{Serialize, Serializer};

use crate::cubic::cubic_fft_raw;
use crate::error::{Error, Result};
use crate::gauges::dispersion_symbol;
use crate::grid::FrequencyGrid;
use crate::params::{Beta, ModelParams};
use crate::state::{Representation, SpectralState};

/// Which evolution equation a trajectory follows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EquationKind {
    /// The equation in the original variables: linear part plus plain cubic.
    Original,
    /// Mass-gauged variables: linear part plus renormalized cubic.
    Renormalized,
    /// Interaction picture of the renormalized equation. Non-resonant only.
    VForm,
    /// Interaction picture with the modulus gauge folded in. Non-resonant only.
    WForm,
}

impl EquationKind {
    pub fn token(self) -> &'static str {
        match self {
            EquationKind::Original => "original",
            EquationKind::Renormalized => "renormalized",
            EquationKind::VForm => "v",
            EquationKind::WForm => "w",
        }
    }

    pub fn from_token(token: &str) -> Option<Self> {
        match token {
            "original" => Some(EquationKind::Original),
            "renormalized" => Some(EquationKind::Renormalized),
            "v" => Some(EquationKind::VForm),
            "w" => Some(EquationKind::WForm),
            _ => None,
        }
    }

    /// The representation tag states of this equation must carry.
    pub fn required_rep(self) -> Representation {
        match self {
            EquationKind::Original => Representation::Physical,
            EquationKind::Renormalized => Representation::Gauged,
            EquationKind::VForm => Representation::VForm,
            EquationKind::WForm => Representation::WForm,
        }
    }

    /// The interaction-picture forms exist only away from the resonant shell.
    pub fn interaction_picture(self) -> bool {
        matches!(self, EquationKind::VForm | EquationKind::WForm)
    }
}

impl Serialize for EquationKind {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(self.token())
    }
}

impl std::fmt::Display for EquationKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.token())
    }
}

/// A time-ordered sequence of snapshots of one evolution.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub params: ModelParams,
    pub kind: EquationKind,
    pub dt: f64,
    pub stride: usize,
    times: Vec<f64>,
    states: Vec<SpectralState>,
}

impl Trajectory {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn states(&self) -> &[SpectralState] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn initial(&self) -> &SpectralState {
        &self.states[0]
    }

    pub fn final_state(&self) -> &SpectralState {
        self.states.last().expect("trajectory holds at least one state")
    }
}

/// Accumulated integral of one structural piece of a right-hand side,
/// advanced inside the same RK4 stages as the trajectory it rides on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PieceKind {
    /// `i |v̂_n|² v̂_n`, the resonant diagonal of the v equation.
    ResonantPhase,
    /// `−i t ŵ_n Ξ(n,t)`, the modulus-phase correction of the w equation.
    ModulusPhase,
}

impl PieceKind {
    fn equation(self) -> EquationKind {
        match self {
            PieceKind::ResonantPhase => EquationKind::VForm,
            PieceKind::ModulusPhase => EquationKind::WForm,
        }
    }
}

/// Trajectory plus the running integral of one piece, sampled at the same
/// snapshot times. `piece[k]` integrates from the initial time to `times[k]`,
/// so `piece[0]` is identically zero.
#[derive(Debug, Clone)]
pub struct PieceTrajectory {
    pub trajectory: Trajectory,
    pub piece: Vec<SpectralState>,
}

fn cis(angle: f64) -> Complex64 {
    Complex64::from_polar(1.0, angle)
}

pub(crate) fn mu_table(grid: FrequencyGrid, beta: &Beta) -> Vec<f64> {
    grid.modes().map(|n| dispersion_symbol(n, beta)).collect()
}

/// `-i` times the cubic, plain or renormalized. The nonlinear part sampled by
/// the integrating-factor stages.
fn nonlinear_physical(grid: FrequencyGrid, y: &[Complex64], renormalized: bool) -> Vec<Complex64> {
    let mut out = cubic_fft_raw(grid, y, renormalized);
    for c in out.iter_mut() {
        *c = Complex64::new(c.im, -c.re);
    }
    out
}

/// v-equation derivative at time `t`: rotate down to gauged variables, take
/// the renormalized cubic, rotate back. Equals the explicit phase-weighted
/// hyperplane sum plus the resonant diagonal.
fn rhs_v_raw(grid: FrequencyGrid, y: &[Complex64], t: f64, mu: &[f64]) -> Vec<Complex64> {
    let rotated: Vec<Complex64> = y
        .iter()
        .zip(mu)
        .map(|(c, &m)| c * cis(-t * m))
        .collect();
    let cubic = cubic_fft_raw(grid, &rotated, true);
    cubic
        .iter()
        .zip(mu)
        .map(|(c, &m)| -Complex64::i() * c * cis(t * m))
        .collect()
}

/// The phase-weighted hyperplane sum `G(n)` of the w equation and the real
/// factor `Ξ(n) = 2 Im(G(n) conj(ŵ_n))`, which is d/dt |ŵ_n|².
///
/// Route: undo the modulus and linear phases to land in gauged variables,
/// where the non-resonant sum is the renormalized cubic plus the diagonal,
/// then restore the phases. Moduli are shared between the two frames.
pub(crate) fn w_interaction(
    grid: FrequencyGrid,
    y: &[Complex64],
    t: f64,
    mu: &[f64],
) -> (Vec<Complex64>, Vec<f64>) {
    let q: Vec<Complex64> = y
        .iter()
        .zip(mu)
        .map(|(c, &m)| c * cis(t * (c.norm_sqr() - m)))
        .collect();
    let renorm = cubic_fft_raw(grid, &q, true);
    let g: Vec<Complex64> = renorm
        .iter()
        .zip(&q)
        .zip(y.iter().zip(mu))
        .map(|((r, qk), (c, &m))| (r + qk * qk.norm_sqr()) * cis(t * (m - c.norm_sqr())))
        .collect();
    let xi: Vec<f64> = g
        .iter()
        .zip(y)
        .map(|(gk, c)| 2.0 * (gk * c.conj()).im)
        .collect();
    (g, xi)
}

/// Derivative and, when requested, the tracked piece, at one stage point.
fn interaction_stage(
    kind: EquationKind,
    grid: FrequencyGrid,
    y: &[Complex64],
    t: f64,
    mu: &[f64],
    piece: Option<PieceKind>,
) -> (Vec<Complex64>, Option<Vec<Complex64>>) {
    match kind {
        EquationKind::VForm => {
            let f = rhs_v_raw(grid, y, t, mu);
            let g = piece.map(|_| {
                y.iter()
                    .map(|c| Complex64::i() * c * c.norm_sqr())
                    .collect()
            });
            (f, g)
        }
        EquationKind::WForm => {
            let (gvec, xi) = w_interaction(grid, y, t, mu);
            let correction: Vec<Complex64> = y
                .iter()
                .zip(&xi)
                .map(|(c, &x)| -Complex64::i() * t * c * x)
                .collect();
            let f = gvec
                .iter()
                .zip(&correction)
                .map(|(gk, p)| -Complex64::i() * gk + p)
                .collect();
            let g = piece.map(|_| correction);
            (f, g)
        }
        _ => unreachable!("stage evaluation is interaction-picture only"),
    }
}

fn axpy(y: &[Complex64], a: f64, k: &[Complex64]) -> Vec<Complex64> {
    y.iter().zip(k).map(|(c, d)| c + a * d).collect()
}

/// One integrating-factor RK4 step for the physical-variable kinds. The
/// multipliers apply the linear flow exactly; `h` alone controls accuracy of
/// the cubic term.
fn step_lawson(
    grid: FrequencyGrid,
    y: &[Complex64],
    h: f64,
    mu: &[f64],
    renormalized: bool,
) -> Vec<Complex64> {
    let e_half: Vec<Complex64> = mu.iter().map(|&m| cis(-0.5 * h * m)).collect();
    let mul = |v: &[Complex64], e: &[Complex64]| -> Vec<Complex64> {
        v.iter().zip(e).map(|(c, p)| c * p).collect()
    };

    let k1 = nonlinear_physical(grid, y, renormalized);
    let k2 = nonlinear_physical(grid, &mul(&axpy(y, 0.5 * h, &k1), &e_half), renormalized);
    let k3 = nonlinear_physical(grid, &axpy(&mul(y, &e_half), 0.5 * h, &k2), renormalized);
    let y_full = mul(&mul(y, &e_half), &e_half);
    let k4 = nonlinear_physical(grid, &axpy(&y_full, h, &mul(&k3, &e_half)), renormalized);

    let mut out = y_full;
    for i in 0..out.len() {
        let weighted = e_half[i] * e_half[i] * k1[i]
            + 2.0 * e_half[i] * (k2[i] + k3[i])
            + k4[i];
        out[i] += (h / 6.0) * weighted;
    }
    out
}

/// One plain RK4 step for the interaction-picture kinds, stages at the exact
/// times `t`, `t+h/2`, `t+h`. Optionally advances the running integral of a
/// tracked piece through the same stage values.
fn step_interaction(
    kind: EquationKind,
    grid: FrequencyGrid,
    y: &[Complex64],
    t: f64,
    h: f64,
    mu: &[f64],
    piece: Option<PieceKind>,
) -> (Vec<Complex64>, Option<Vec<Complex64>>) {
    let (k1, g1) = interaction_stage(kind, grid, y, t, mu, piece);
    let y2 = axpy(y, 0.5 * h, &k1);
    let (k2, g2) = interaction_stage(kind, grid, &y2, t + 0.5 * h, mu, piece);
    let y3 = axpy(y, 0.5 * h, &k2);
    let (k3, g3) = interaction_stage(kind, grid, &y3, t + 0.5 * h, mu, piece);
    let y4 = axpy(y, h, &k3);
    let (k4, g4) = interaction_stage(kind, grid, &y4, t + h, mu, piece);

    let mut out = y.to_vec();
    for i in 0..out.len() {
        out[i] += (h / 6.0) * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]);
    }
    let delta = piece.map(|_| {
        let (g1, g2, g3, g4) = (
            g1.as_ref().unwrap(),
            g2.as_ref().unwrap(),
            g3.as_ref().unwrap(),
            g4.as_ref().unwrap(),
        );
        (0..y.len())
            .map(|i| (h / 6.0) * (g1[i] + 2.0 * (g2[i] + g3[i]) + g4[i]))
            .collect()
    });
    (out, delta)
}

fn step_raw(
    kind: EquationKind,
    grid: FrequencyGrid,
    y: &[Complex64],
    t: f64,
    h: f64,
    mu: &[f64],
    piece: Option<PieceKind>,
) -> (Vec<Complex64>, Option<Vec<Complex64>>) {
    match kind {
        EquationKind::Original => (step_lawson(grid, y, h, mu, false), None),
        EquationKind::Renormalized => (step_lawson(grid, y, h, mu, true), None),
        EquationKind::VForm | EquationKind::WForm => {
            step_interaction(kind, grid, y, t, h, mu, piece)
        }
    }
}

fn check_finite(grid: FrequencyGrid, y: &[Complex64], t: f64) -> Result<()> {
    for (i, c) in y.iter().enumerate() {
        if !c.re.is_finite() || !c.im.is_finite() {
            return Err(Error::StepFailed {
                t,
                mode: grid.mode_at(i),
            });
        }
    }
    Ok(())
}

fn validate(kind: EquationKind, state: &SpectralState, params: &ModelParams) -> Result<()> {
    state.expect_rep(kind.required_rep())?;
    if kind.interaction_picture() {
        params.beta.require_nonresonant("interaction-picture evolution")?;
    }
    Ok(())
}

fn expect_time(kind: EquationKind, state: &SpectralState, t: f64) -> Result<()> {
    // The phases of the interaction forms read the clock; a stale tag is a
    // contract violation, not a recoverable condition.
    if kind.interaction_picture() && (state.time() - t).abs() > 1e-12 * t.abs().max(1.0) {
        return Err(Error::TimeMismatch {
            tagged: state.time(),
            requested: t,
        });
    }
    Ok(())
}

/// Coefficientwise time derivative of the given equation at time `t`.
///
/// For the physical-variable kinds this is the full derivative, linear part
/// included; for the interaction-picture kinds the linear phase is already
/// absorbed and only the nonlinear terms remain.
pub fn rhs(
    kind: EquationKind,
    state: &SpectralState,
    t: f64,
    params: &ModelParams,
) -> Result<SpectralState> {
    validate(kind, state, params)?;
    expect_time(kind, state, t)?;
    let grid = state.grid();
    let mu = mu_table(grid, &params.beta);
    let out = match kind {
        EquationKind::Original | EquationKind::Renormalized => {
            let renormalized = kind == EquationKind::Renormalized;
            let mut f = nonlinear_physical(grid, state.coeffs(), renormalized);
            for (i, c) in state.coeffs().iter().enumerate() {
                f[i] -= Complex64::i() * mu[i] * c;
            }
            f
        }
        EquationKind::VForm => rhs_v_raw(grid, state.coeffs(), t, &mu),
        EquationKind::WForm => {
            let (f, _) = interaction_stage(kind, grid, state.coeffs(), t, &mu, None);
            f
        }
    };
    SpectralState::new(grid, state.rep(), t, out)
}

/// Advance one step of size `dt` from time `t`. Deterministic; fails only if
/// the result stops being finite.
pub fn step(
    kind: EquationKind,
    state: &SpectralState,
    t: f64,
    dt: f64,
    params: &ModelParams,
) -> Result<SpectralState> {
    validate(kind, state, params)?;
    expect_time(kind, state, t)?;
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "step size must be positive, got {dt}"
        )));
    }
    let grid = state.grid();
    let mu = mu_table(grid, &params.beta);
    let (y, _) = step_raw(kind, grid, state.coeffs(), t, dt, &mu, None);
    check_finite(grid, &y, t + dt)?;
    SpectralState::new(grid, state.rep(), t + dt, y)
}

/// Integrate from the state's own time up to `t_final`, keeping every
/// `snapshot_stride`-th state plus both endpoints. The duration must be an
/// integer number of steps.
pub fn evolve(
    kind: EquationKind,
    u0: &SpectralState,
    t_final: f64,
    dt: f64,
    params: &ModelParams,
    snapshot_stride: usize,
) -> Result<Trajectory> {
    let run = evolve_inner(kind, u0, t_final, dt, params, snapshot_stride, None)?;
    Ok(run.trajectory)
}

/// Same as [`evolve`], also integrating the chosen piece of the derivative
/// through the identical RK4 stages. The piece must belong to the kind.
pub fn evolve_with_piece(
    kind: EquationKind,
    u0: &SpectralState,
    t_final: f64,
    dt: f64,
    params: &ModelParams,
    snapshot_stride: usize,
    piece: PieceKind,
) -> Result<PieceTrajectory> {
    if piece.equation() != kind {
        return Err(Error::InvalidParameter(format!(
            "piece tracking belongs to the {} equation, not {}",
            piece.equation(),
            kind
        )));
    }
    evolve_inner(kind, u0, t_final, dt, params, snapshot_stride, Some(piece))
}

fn evolve_inner(
    kind: EquationKind,
    u0: &SpectralState,
    t_final: f64,
    dt: f64,
    params: &ModelParams,
    snapshot_stride: usize,
    piece: Option<PieceKind>,
) -> Result<PieceTrajectory> {
    validate(kind, u0, params)?;
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "step size must be positive, got {dt}"
        )));
    }
    if snapshot_stride == 0 {
        return Err(Error::InvalidParameter(
            "snapshot stride must be at least 1".into(),
        ));
    }
    let tau = u0.time();
    let duration = t_final - tau;
    if !duration.is_finite() || duration < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "final time {t_final} precedes the initial time {tau}"
        )));
    }
    let steps = (duration / dt).round() as usize;
    if (steps as f64 * dt - duration).abs() > 1e-9 * duration.max(1.0) {
        return Err(Error::InvalidParameter(format!(
            "duration {duration} is not an integer number of steps of size {dt}"
        )));
    }

    let grid = u0.grid();
    let mu = mu_table(grid, &params.beta);
    let mut y = u0.coeffs().to_vec();
    let mut p = vec![Complex64::new(0.0, 0.0); y.len()];

    let mut times = vec![tau];
    let mut states = vec![u0.clone()];
    let mut pieces = vec![SpectralState::new(grid, u0.rep(), tau, p.clone())?];

    for k in 0..steps {
        let t = tau + k as f64 * dt;
        let (next, delta) = step_raw(kind, grid, &y, t, dt, &mu, piece);
        y = next;
        let t_next = tau + (k + 1) as f64 * dt;
        check_finite(grid, &y, t_next)?;
        if let Some(delta) = delta {
            for (pi, di) in p.iter_mut().zip(&delta) {
                *pi += di;
            }
        }
        if (k + 1) % snapshot_stride == 0 || k + 1 == steps {
            times.push(t_next);
            states.push(SpectralState::new(grid, u0.rep(), t_next, y.clone())?);
            if piece.is_some() {
                pieces.push(SpectralState::new(grid, u0.rep(), t_next, p.clone())?);
            }
        }
    }

    Ok(PieceTrajectory {
        trajectory: Trajectory {
            params: *params,
            kind,
            dt,
            stride: snapshot_stride,
            times,
            states,
        },
        piece: if piece.is_some() { pieces } else { Vec::new() },
    })
}

/// Mass and Hamiltonian of a physical-variable state.
///
/// Both are exact invariants of the truncated flow: the quartic term is a
/// hyperplane sum whose terms pair into conjugates, so the spatial mean of
/// `|u|⁴` on the padded grid evaluates it without aliasing.
pub fn conserved_quantities(state: &SpectralState, params: &ModelParams) -> Result<(f64, f64)> {
    state.expect_rep(Representation::Physical)?;
    let beta = params.beta.value();
    let mut quadratic = 0.0;
    for (n, c) in state.iter_modes() {
        let n = n as f64;
        quadratic += (-n * n * n / 2.0 + beta * n * n / 2.0) * c.norm_sqr();
    }
    let h = quadratic - crate::cubic::quartic_mean(state) / 4.0;
    Ok((state.mass(), h))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::resonance::{gamma_contains, phi, theta, FrequencyTuple};
    use crate::state::Representation;
    use rand::rngs::StdRng;
    use rand::{RngExt, SeedableRng};

    fn random_state(radius: i64, rep: Representation, t: f64, seed: u64) -> SpectralState {
        let mut rng = StdRng::seed_from_u64(seed);
        let grid = FrequencyGrid::new(radius).unwrap();
        let coeffs: Vec<Complex64> = (0..grid.len())
            .map(|_| Complex64::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)))
            .collect();
        SpectralState::new(grid, rep, t, coeffs).unwrap()
    }

    fn decaying_state(radius: i64, rep: Representation, seed: u64, rate: f64) -> SpectralState {
        let mut rng = StdRng::seed_from_u64(seed);
        let grid = FrequencyGrid::new(radius).unwrap();
        let coeffs: Vec<Complex64> = grid
            .modes()
            .map(|n| {
                let amp = (-rate * n.unsigned_abs() as f64).exp();
                Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * amp
            })
            .collect();
        SpectralState::new(grid, rep, 0.0, coeffs).unwrap()
    }

    fn smooth_state(radius: i64, rep: Representation, seed: u64) -> SpectralState {
        decaying_state(radius, rep, seed, 0.5)
    }

    fn params(beta_num: i64, beta_den: i64) -> ModelParams {
        ModelParams::with_beta(Beta::rational(beta_num, beta_den).unwrap())
    }

    fn params_float(beta: f64) -> ModelParams {
        ModelParams::with_beta(Beta::float(beta).unwrap())
    }

    /// Explicit hyperplane-sum derivative of the v equation. The oracle the
    /// transform route must match, and the place the phase sign is pinned.
    fn direct_rhs_v(state: &SpectralState, t: f64, beta: &Beta) -> Vec<Complex64> {
        let grid = state.grid();
        let idx = |n: i64| (n + grid.radius()) as usize;
        let c = state.coeffs();
        grid.modes()
            .map(|n| {
                let mut acc = Complex64::new(0.0, 0.0);
                for n1 in grid.modes() {
                    for n3 in grid.modes() {
                        let n2 = n1 + n3 - n;
                        if !grid.contains(n2) {
                            continue;
                        }
                        let tuple = FrequencyTuple::new(n, n1, n2, n3).unwrap();
                        if !gamma_contains(&tuple, beta) {
                            continue;
                        }
                        acc += cis(t * phi(&tuple, beta))
                            * c[idx(n1)]
                            * c[idx(n2)].conj()
                            * c[idx(n3)];
                    }
                }
                let cn = c[idx(n)];
                -Complex64::i() * acc + Complex64::i() * cn * cn.norm_sqr()
            })
            .collect()
    }

    /// Explicit derivative of the w equation, phases evaluated tuple by tuple.
    fn direct_rhs_w(state: &SpectralState, t: f64, beta: &Beta) -> Vec<Complex64> {
        let grid = state.grid();
        let idx = |n: i64| (n + grid.radius()) as usize;
        let c = state.coeffs();
        let g: Vec<Complex64> = grid
            .modes()
            .map(|n| {
                let mut acc = Complex64::new(0.0, 0.0);
                for n1 in grid.modes() {
                    for n3 in grid.modes() {
                        let n2 = n1 + n3 - n;
                        if !grid.contains(n2) {
                            continue;
                        }
                        let tuple = FrequencyTuple::new(n, n1, n2, n3).unwrap();
                        if !gamma_contains(&tuple, beta) {
                            continue;
                        }
                        acc += cis(t * theta(&tuple, state, beta).unwrap())
                            * c[idx(n1)]
                            * c[idx(n2)].conj()
                            * c[idx(n3)];
                    }
                }
                acc
            })
            .collect();
        grid.modes()
            .map(|n| {
                let gn = g[idx(n)];
                let cn = c[idx(n)];
                let xi = 2.0 * (gn * cn.conj()).im;
                -Complex64::i() * gn - Complex64::i() * t * cn * xi
            })
            .collect()
    }

    #[test]
    fn v_rhs_matches_direct_sum() {
        let p = params_float(2.1);
        let t = 0.37;
        let state = random_state(8, Representation::VForm, t, 11);
        let fast = rhs(EquationKind::VForm, &state, t, &p).unwrap();
        let slow = direct_rhs_v(&state, t, &p.beta);
        for (i, (n, c)) in fast.iter_modes().enumerate() {
            assert!((c - slow[i]).norm() < 1e-11, "mode {n}: {c} vs {}", slow[i]);
        }
    }

    #[test]
    fn w_rhs_matches_direct_sum() {
        let p = params(1, 1);
        let t = 0.81;
        let state = random_state(8, Representation::WForm, t, 29);
        let fast = rhs(EquationKind::WForm, &state, t, &p).unwrap();
        let slow = direct_rhs_w(&state, t, &p.beta);
        for (i, (n, c)) in fast.iter_modes().enumerate() {
            assert!((c - slow[i]).norm() < 1e-11, "mode {n}: {c} vs {}", slow[i]);
        }
    }

    #[test]
    fn rhs_checks_rep_time_and_resonance() {
        let p = params_float(2.1);
        let state = random_state(4, Representation::VForm, 0.5, 3);
        assert!(rhs(EquationKind::VForm, &state, 0.5, &p).is_ok());
        assert!(matches!(
            rhs(EquationKind::VForm, &state, 0.4, &p).unwrap_err(),
            Error::TimeMismatch { .. }
        ));
        assert!(matches!(
            rhs(EquationKind::Original, &state, 0.5, &p).unwrap_err(),
            Error::RepresentationMismatch { .. }
        ));
        let resonant = params(3, 2);
        let state = random_state(4, Representation::VForm, 0.0, 3);
        assert!(matches!(
            rhs(EquationKind::VForm, &state, 0.0, &resonant).unwrap_err(),
            Error::ResonantBeta { .. }
        ));
    }

    #[test]
    fn single_mode_closed_forms() {
        let a = Complex64::new(0.6, -0.3);
        let p = params_float(2.1);
        let t = 1.0;
        let dt = 1e-3;

        // v: only the resonant diagonal acts, modulus conserved.
        let v0 = SpectralState::from_modes(4, Representation::VForm, 0.0, &[(2, a)]).unwrap();
        let run = evolve(EquationKind::VForm, &v0, t, dt, &p, 1000).unwrap();
        let want = a * cis(t * a.norm_sqr());
        assert!((run.final_state().coeff(2).unwrap() - want).norm() < 1e-10);

        // w: the derivative vanishes identically.
        let w0 = SpectralState::from_modes(4, Representation::WForm, 0.0, &[(2, a)]).unwrap();
        let run = evolve(EquationKind::WForm, &w0, t, dt, &p, 1000).unwrap();
        assert!((run.final_state().coeff(2).unwrap() - a).norm() < 1e-13);

        // original: linear phase mu plus nonlinear phase |a|^2.
        let mu = dispersion_symbol(2, &p.beta);
        let u0 = SpectralState::from_modes(4, Representation::Physical, 0.0, &[(2, a)]).unwrap();
        let run = evolve(EquationKind::Original, &u0, t, dt, &p, 1000).unwrap();
        let want = a * cis(-t * (mu + a.norm_sqr()));
        assert!((run.final_state().coeff(2).unwrap() - want).norm() < 1e-10);

        // renormalized: the mass shift flips the nonlinear phase sign.
        let g0 = SpectralState::from_modes(4, Representation::Gauged, 0.0, &[(2, a)]).unwrap();
        let run = evolve(EquationKind::Renormalized, &g0, t, dt, &p, 1000).unwrap();
        let want = a * cis(-t * mu + t * a.norm_sqr());
        assert!((run.final_state().coeff(2).unwrap() - want).norm() < 1e-10);
    }

    #[test]
    fn step_consistent_with_rhs() {
        let p = params_float(2.1);
        for kind in [
            EquationKind::Original,
            EquationKind::Renormalized,
            EquationKind::VForm,
            EquationKind::WForm,
        ] {
            let t = 0.3;
            let state = random_state(6, kind.required_rep(), t, 7);
            let f = rhs(kind, &state, t, &p).unwrap();
            let mut errs = Vec::new();
            for h in [1e-4, 5e-5] {
                let stepped = step(kind, &state, t, h, &p).unwrap();
                let err: f64 = state
                    .iter_modes()
                    .zip(stepped.coeffs())
                    .zip(f.coeffs())
                    .map(|(((_, y0), y1), df)| ((y1 - y0) / h - df).norm_sqr())
                    .sum::<f64>()
                    .sqrt();
                errs.push(err);
            }
            // The defect is linear in h; its constant is kind-dependent (the
            // stiff linear phase dominates it for the physical kinds).
            let ratio = errs[1] / errs[0];
            assert!((0.45..=0.55).contains(&ratio), "{kind}: {errs:?}");
        }
    }

    #[test]
    fn fourth_order_self_convergence() {
        // Smooth data and a short window keep every active phase resolved, so
        // halving the step divides the error by 16 up to the stated slack.
        for (kind, seed) in [(EquationKind::Original, 5u64), (EquationKind::WForm, 9u64)] {
            let p = params_float(2.1);
            let u0 = smooth_state(8, kind.required_rep(), seed);
            let t = 0.1;
            let reference = evolve(kind, &u0, t, 2.5e-4, &p, usize::MAX).unwrap();
            let coarse = evolve(kind, &u0, t, 2e-3, &p, usize::MAX).unwrap();
            let fine = evolve(kind, &u0, t, 1e-3, &p, usize::MAX).unwrap();
            let e1 = coarse
                .final_state()
                .l2_distance(reference.final_state())
                .unwrap();
            let e2 = fine
                .final_state()
                .l2_distance(reference.final_state())
                .unwrap();
            let ratio = e1 / e2;
            assert!(
                (12.0..=20.0).contains(&ratio),
                "{kind}: errors {e1:.3e}/{e2:.3e}, ratio {ratio:.2}"
            );
        }
    }

    #[test]
    fn conserved_quantities_examples() {
        let p = params(0, 1);
        let u = SpectralState::from_modes(
            4,
            Representation::Physical,
            0.0,
            &[(1, Complex64::new(1.0, 0.0))],
        )
        .unwrap();
        let (m, h) = conserved_quantities(&u, &p).unwrap();
        assert!((m - 1.0).abs() < 1e-15);
        assert!((h + 0.75).abs() < 1e-13);

        let zero = SpectralState::zero(FrequencyGrid::new(4).unwrap(), Representation::Physical, 0.0);
        let (m, h) = conserved_quantities(&zero, &p).unwrap();
        assert_eq!((m, h), (0.0, 0.0));
    }

    #[test]
    fn mass_and_energy_drift_at_default_settings() {
        // Rapidly decaying data; 1000 integrating-factor steps across [0,1].
        // The decay rate matters: per-step mass defect concentrates where
        // |c_n|^4 (mu_n dt)^4 peaks, so gentler tails push the drift up.
        let p = params_float(2.1);
        let u0 = decaying_state(32, Representation::Physical, 17, 0.75);
        let (m0, h0) = conserved_quantities(&u0, &p).unwrap();
        let run = evolve(EquationKind::Original, &u0, 1.0, 1e-3, &p, 250).unwrap();
        for state in run.states() {
            let (m, h) = conserved_quantities(state, &p).unwrap();
            assert!((m - m0).abs() / m0 < 1e-9, "mass drift {}", (m - m0) / m0);
            assert!((h - h0).abs() / h0.abs() < 1e-6, "energy drift");
        }
    }

    #[test]
    fn modulus_derivative_matches_xi_factor() {
        // d/dt |w_n|^2 pulled from a trajectory by central differences must
        // reproduce the xi factor computed at the center time, with the
        // mismatch shrinking quadratically in the step.
        let p = params_float(2.1);
        let w0 = smooth_state(8, Representation::WForm, 23);
        let grid = w0.grid();
        let mu = mu_table(grid, &p.beta);
        let mismatch = |h: f64| -> f64 {
            let run = evolve(EquationKind::WForm, &w0, 0.1, h, &p, 1).unwrap();
            let states = run.states();
            let k = states.len() / 2;
            let t = run.times()[k];
            let (_, xi) = w_interaction(grid, states[k].coeffs(), t, &mu);
            (0..grid.len())
                .map(|i| {
                    let before = states[k - 1].coeffs()[i].norm_sqr();
                    let after = states[k + 1].coeffs()[i].norm_sqr();
                    let fd = (after - before) / (2.0 * h);
                    (fd - xi[i]).abs()
                })
                .fold(0.0, f64::max)
        };
        let coarse = mismatch(1e-3);
        let fine = mismatch(5e-4);
        let ratio = coarse / fine;
        assert!(
            (3.0..=5.5).contains(&ratio),
            "mismatch {coarse:.3e} -> {fine:.3e}, ratio {ratio:.2}"
        );
    }

    #[test]
    fn evolve_snapshot_accounting() {
        let p = params_float(2.1);
        let u0 = smooth_state(4, Representation::Physical, 2);
        let run = evolve(EquationKind::Original, &u0, 0.01, 1e-3, &p, 3).unwrap();
        // 10 steps, stride 3: snapshots at steps 0, 3, 6, 9, 10.
        assert_eq!(run.len(), 5);
        assert!((run.times()[1] - 3e-3).abs() < 1e-15);
        assert!((run.times()[4] - 1e-2).abs() < 1e-15);
        for pair in run.times().windows(2) {
            assert!(pair[1] > pair[0]);
        }

        // Zero-length evolution returns only the initial state.
        let still = evolve(EquationKind::Original, &u0, 0.0, 1e-3, &p, 1).unwrap();
        assert_eq!(still.len(), 1);
        assert_eq!(still.final_state().coeffs(), u0.coeffs());

        // Misaligned duration is refused.
        assert!(matches!(
            evolve(EquationKind::Original, &u0, 0.0105, 1e-3, &p, 1).unwrap_err(),
            Error::InvalidParameter(_)
        ));
    }

    #[test]
    fn flow_conjugations_hold_at_reduced_scale() {
        let p = params_float(2.1);
        let u0 = smooth_state(8, Representation::Physical, 31);
        let t = 0.25;
        let dt = 1e-3;
        let direct = evolve(EquationKind::Original, &u0, t, dt, &p, usize::MAX).unwrap();

        // Through the v form: evolve in the interaction picture, then map
        // back through the inverse chain.
        let v0 = crate::gauges::physical_to_v(&u0, &p.beta).unwrap();
        let v_run = evolve(EquationKind::VForm, &v0, t, dt, &p, usize::MAX).unwrap();
        let back = crate::gauges::v_to_physical(v_run.final_state(), &p.beta).unwrap();
        let err = direct.final_state().l2_distance(&back).unwrap();
        assert!(err < 1e-9, "v route: {err:.3e}");

        // Through the w form.
        let w0 = crate::gauges::physical_to_w(&u0, &p.beta).unwrap();
        let w_run = evolve(EquationKind::WForm, &w0, t, dt, &p, usize::MAX).unwrap();
        let back = crate::gauges::w_to_physical(w_run.final_state(), &p.beta).unwrap();
        let err = direct.final_state().l2_distance(&back).unwrap();
        assert!(err < 1e-9, "w route: {err:.3e}");
    }

    #[test]
    fn piece_integration_consistency() {
        // For the w equation the tracked piece plus the integral of -iG is
        // the whole increment; check the piece against a fine quadrature of
        // its integrand along the stored trajectory.
        let p = params_float(2.1);
        let w0 = smooth_state(6, Representation::WForm, 41);
        let t = 0.1;
        let dt = 1e-4;
        let run = evolve_with_piece(
            EquationKind::WForm,
            &w0,
            t,
            dt,
            &p,
            1,
            PieceKind::ModulusPhase,
        )
        .unwrap();
        let grid = w0.grid();
        let mu = mu_table(grid, &p.beta);
        // Composite Simpson over every stored step.
        let states = run.trajectory.states();
        let times = run.trajectory.times();
        let m = states.len() - 1;
        assert!(m % 2 == 0);
        let mut acc = vec![Complex64::new(0.0, 0.0); grid.len()];
        for k in 0..=m {
            let (_, xi) = w_interaction(grid, states[k].coeffs(), times[k], &mu);
            let weight = if k == 0 || k == m {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            for i in 0..grid.len() {
                acc[i] += weight * -Complex64::i() * times[k] * states[k].coeffs()[i] * xi[i];
            }
        }
        for a in acc.iter_mut() {
            *a *= dt / 3.0;
        }
        let tracked = run.piece.last().unwrap();
        let err: f64 = tracked
            .coeffs()
            .iter()
            .zip(&acc)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(err < 1e-10, "piece vs quadrature: {err:.3e}");

        // And the piece plus the remaining term reproduces w(t) - w(0).
        let mut other = vec![Complex64::new(0.0, 0.0); grid.len()];
        for k in 0..=m {
            let (g, _) = w_interaction(grid, states[k].coeffs(), times[k], &mu);
            let weight = if k == 0 || k == m {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            for i in 0..grid.len() {
                other[i] += weight * -Complex64::i() * g[i];
            }
        }
        for a in other.iter_mut() {
            *a *= dt / 3.0;
        }
        for i in 0..grid.len() {
            let increment = states[m].coeffs()[i] - states[0].coeffs()[i];
            let sum = tracked.coeffs()[i] + other[i];
            assert!((increment - sum).norm() < 1e-9, "mode index {i}");
        }
    }

    #[test]
    fn piece_kind_must_match_equation() {
        let p = params_float(2.1);
        let v0 = smooth_state(4, Representation::VForm, 1);
        assert!(matches!(
            evolve_with_piece(
                EquationKind::VForm,
                &v0,
                0.01,
                1e-3,
                &p,
                1,
                PieceKind::ModulusPhase
            )
            .unwrap_err(),
            Error::InvalidParameter(_)
        ));
    }

    #[test]
    fn kind_tokens_round_trip() {
        for kind in [
            EquationKind::Original,
            EquationKind::Renormalized,
            EquationKind::VForm,
            EquationKind::WForm,
        ] {
            assert_eq!(EquationKind::from_token(kind.token()), Some(kind));
        }
        assert_eq!(EquationKind::from_token("u"), None);
    }
}
