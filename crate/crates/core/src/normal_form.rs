//! Integration-by-parts decompositions of the nonlinear increments.
//!
//! Both decompositions trade one power of the oscillatory phase for a `1/φ`
//! weight: the increment of the non-resonant part splits into boundary terms
//! carrying `e^{itφ}/φ` and time integrals whose integrands substitute the
//! equation back in. Every integral here is evaluated by composite Simpson
//! over the stored snapshots, on purpose: the identity being verified must
//! not share machinery with the algebra that produced it.
//!
//! The phase-weighted hyperplane sums do not factor through a convolution,
//! so they cost O(N³) per time node. The w-side terms additionally need the
//! interaction sum and its Ξ factor at every node; those are reused from the
//! time stepper, whose agreement with the tuple-by-tuple oracle is pinned by
//! its own tests.

use num_complex::Complex64;

use crate::cubic::TripleFilter;
use crate::dynamics::{self, EquationKind, Trajectory};
use crate::error::{Error, Result};
use crate::grid::FrequencyGrid;
use crate::params::{Beta, ModelParams};
use crate::resonance::{gamma_contains, phi, psi, FrequencyTuple};
use crate::state::{Representation, SpectralState};

/// Ξ(n, t): twice the imaginary part of the phase-weighted hyperplane sum
/// paired against `conj(ŵ_n)`. Equals d/dt |ŵ_n|² along the w flow. Direct
/// tuple-by-tuple evaluation; the oracle form.
pub fn xi(state: &SpectralState, n: i64, t: f64, beta: &Beta) -> Result<f64> {
    state.expect_rep(Representation::WForm)?;
    let grid = state.grid();
    let w_n = state.coeff(n)?;
    let mut acc = Complex64::new(0.0, 0.0);
    for n1 in grid.modes() {
        for n3 in grid.modes() {
            let n2 = n1 + n3 - n;
            if !grid.contains(n2) {
                continue;
            }
            let tuple = FrequencyTuple::new(n, n1, n2, n3)?;
            if !gamma_contains(&tuple, beta) {
                continue;
            }
            let angle = phi(&tuple, beta) + psi(&tuple, state)?;
            acc += Complex64::from_polar(1.0, t * angle)
                * state.coeff(n1)?
                * state.coeff(n2)?.conj()
                * state.coeff(n3)?;
        }
    }
    Ok(2.0 * (acc * w_n.conj()).im)
}

/// The v-side decomposition: two boundary terms, two quintic integrals, and
/// the separately tracked resonant integral.
#[derive(Debug, Clone)]
pub struct NormalFormTermsV {
    pub boundary_t: SpectralState,
    pub boundary_0: SpectralState,
    pub quintic_ii: SpectralState,
    pub quintic_iii: SpectralState,
    pub resonant_integral: SpectralState,
    /// H⁰ distance between the direct quadrature of the non-resonant part
    /// and the assembled terms.
    pub residual: f64,
}

impl NormalFormTermsV {
    /// The assembled non-resonant increment: boundary difference plus the
    /// two quintic integrals.
    pub fn nonresonant_sum(&self) -> SpectralState {
        let b0 = self.boundary_0.coeffs();
        let ii = self.quintic_ii.coeffs();
        let iii = self.quintic_iii.coeffs();
        self.boundary_t
            .map_coeffs(|n, c| {
                let i = (n + self.boundary_t.grid().radius()) as usize;
                c - b0[i] + ii[i] + iii[i]
            })
    }

    pub fn named_terms(&self) -> [(&'static str, &SpectralState); 5] {
        [
            ("boundary_t", &self.boundary_t),
            ("boundary_0", &self.boundary_0),
            ("quintic_ii", &self.quintic_ii),
            ("quintic_iii", &self.quintic_iii),
            ("resonant_integral", &self.resonant_integral),
        ]
    }
}

/// Term keys of the w-side decomposition, in report order. The `x_` terms
/// assemble the phase-sum part of the increment, the `y_` terms the
/// modulus-phase correction.
pub const W_TERM_KEYS: [&str; 14] = [
    "x_I_t", "x_I_0", "x_II", "x_III_1", "x_III_2", "x_IV_1", "x_IV_2", "y_I", "y_II", "y_III",
    "y_IV_0", "y_IV_1", "y_IV_2", "y_IV_3",
];

/// The w-side decomposition: seven terms for each of the two increments.
#[derive(Debug, Clone)]
pub struct NormalFormTermsW {
    /// Keyed by [`W_TERM_KEYS`], same order.
    pub terms: Vec<(&'static str, SpectralState)>,
    pub residual_n1: f64,
    pub residual_n2: f64,
}

impl NormalFormTermsW {
    pub fn term(&self, key: &str) -> Option<&SpectralState> {
        self.terms.iter().find(|(k, _)| *k == key).map(|(_, s)| s)
    }

    fn signed_sum(&self, prefix: &str) -> SpectralState {
        let template = &self.terms[0].1;
        let grid = template.grid();
        let mut acc = vec![Complex64::new(0.0, 0.0); grid.len()];
        for (key, state) in &self.terms {
            if !key.starts_with(prefix) {
                continue;
            }
            // The zero-time boundary enters with a minus sign; every other
            // term already carries its sign.
            let sign = if *key == "x_I_0" { -1.0 } else { 1.0 };
            for (a, c) in acc.iter_mut().zip(state.coeffs()) {
                *a += sign * c;
            }
        }
        SpectralState::new(grid, template.rep(), template.time(), acc)
            .expect("sums of finite terms stay finite")
    }

    /// The phase-sum increment assembled from its seven terms.
    pub fn n1_sum(&self) -> SpectralState {
        self.signed_sum("x_")
    }

    /// The modulus-phase increment assembled from its seven terms.
    pub fn n2_sum(&self) -> SpectralState {
        self.signed_sum("y_")
    }
}

/// φ over all grid triples `(n, n1, n3)`, with zeros marking tuples outside
/// the non-resonant index set (or with `n2` off the grid). φ never vanishes
/// on the set itself, so zero is a safe exclusion marker.
struct PhiTable {
    len: usize,
    values: Vec<f64>,
}

impl PhiTable {
    fn new(grid: FrequencyGrid, beta: &Beta) -> Self {
        let len = grid.len();
        let radius = grid.radius();
        let mut values = vec![0.0; len * len * len];
        for (i_n, n) in grid.modes().enumerate() {
            for (i1, n1) in grid.modes().enumerate() {
                for (i3, n3) in grid.modes().enumerate() {
                    let n2 = n1 + n3 - n;
                    if !grid.contains(n2) {
                        continue;
                    }
                    let tuple = FrequencyTuple {
                        n,
                        n1,
                        n2,
                        n3,
                    };
                    if !gamma_contains(&tuple, beta) {
                        continue;
                    }
                    values[(i_n * len + i1) * len + i3] = phi(&tuple, beta);
                }
            }
        }
        let _ = radius;
        Self { len, values }
    }

    /// Per-node weight table: `e^{itφ}/φ` on the index set, zero elsewhere.
    /// With `over_phi` false the `1/φ` factor is dropped (plain phase sum).
    fn weights(&self, t: f64, over_phi: bool) -> Vec<Complex64> {
        self.values
            .iter()
            .map(|&p| {
                if p == 0.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    let w = Complex64::from_polar(1.0, t * p);
                    if over_phi {
                        w / p
                    } else {
                        w
                    }
                }
            })
            .collect()
    }
}

/// `out[n] = Σ_{n1,n3} W[n,n1,n3] · b1[n1] · conj(b2[n2]) · b3[n3]` over the
/// hyperplane, `n2 = n1 + n3 − n`.
fn kernel_sum(
    len: usize,
    weights: &[Complex64],
    b1: &[Complex64],
    b2: &[Complex64],
    b3: &[Complex64],
) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); len];
    for i_n in 0..len {
        let mut acc = Complex64::new(0.0, 0.0);
        for i1 in 0..len {
            for i3 in 0..len {
                let w = weights[(i_n * len + i1) * len + i3];
                if w == Complex64::new(0.0, 0.0) {
                    continue;
                }
                let i2 = (i1 + i3).wrapping_sub(i_n);
                if i2 >= len {
                    continue;
                }
                acc += w * b1[i1] * b2[i2].conj() * b3[i3];
            }
        }
        out[i_n] = acc;
    }
    out
}

/// Validates Simpson preconditions on snapshot times and returns the spacing.
fn simpson_spacing(times: &[f64]) -> Result<f64> {
    if times.len() < 9 {
        return Err(Error::QuadratureTooCoarse { got: times.len() });
    }
    if times.len() % 2 == 0 {
        return Err(Error::InvalidParameter(format!(
            "composite Simpson needs an odd snapshot count, got {}",
            times.len()
        )));
    }
    let h = times[1] - times[0];
    for pair in times.windows(2) {
        let step = pair[1] - pair[0];
        if (step - h).abs() > 1e-9 * h.abs().max(1e-12) {
            return Err(Error::NonUniformSnapshots {
                left: h,
                right: step,
            });
        }
    }
    Ok(h)
}

fn simpson_weight(k: usize, last: usize) -> f64 {
    if k == 0 || k == last {
        1.0
    } else if k % 2 == 1 {
        4.0
    } else {
        2.0
    }
}

fn check_coverage(traj: &Trajectory, t: f64, kind: EquationKind) -> Result<()> {
    if traj.kind != kind {
        return Err(Error::RepresentationMismatch {
            expected: kind.required_rep().token(),
            got: traj.kind.required_rep().token(),
        });
    }
    let times = traj.times();
    if times[0].abs() > 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "decomposition needs a trajectory starting at time 0, got {}",
            times[0]
        )));
    }
    let last = *times.last().expect("trajectory is never empty");
    if (last - t).abs() > 1e-9 * t.abs().max(1.0) {
        return Err(Error::InvalidParameter(format!(
            "trajectory ends at {last}, requested decomposition time {t}"
        )));
    }
    Ok(())
}

/// Decompose the non-resonant increment of the v equation at time `t` into
/// boundary and quintic terms, and integrate the resonant part alongside.
pub fn nf_decompose_v(
    traj: &Trajectory,
    t: f64,
    params: &ModelParams,
) -> Result<NormalFormTermsV> {
    check_coverage(traj, t, EquationKind::VForm)?;
    params.beta.require_nonresonant("normal-form decomposition")?;
    let states = traj.states();
    let grid = states[0].grid();
    let rep = Representation::VForm;

    if t == 0.0 {
        let zero = SpectralState::zero(grid, rep, 0.0);
        return Ok(NormalFormTermsV {
            boundary_t: zero.clone(),
            boundary_0: zero.clone(),
            quintic_ii: zero.clone(),
            quintic_iii: zero.clone(),
            resonant_integral: zero,
            residual: 0.0,
        });
    }

    let times = traj.times();
    let h = simpson_spacing(times)?;
    let len = grid.len();
    let table = PhiTable::new(grid, &params.beta);
    let last = times.len() - 1;

    let mut quintic_ii = vec![Complex64::new(0.0, 0.0); len];
    let mut quintic_iii = vec![Complex64::new(0.0, 0.0); len];
    let mut resonant = vec![Complex64::new(0.0, 0.0); len];
    let mut direct = vec![Complex64::new(0.0, 0.0); len];

    for (k, state) in states.iter().enumerate() {
        let tk = times[k];
        let v = state.coeffs();
        let d = dynamics::rhs(EquationKind::VForm, state, tk, params)?;
        let w_inv = table.weights(tk, true);
        let w_plain = table.weights(tk, false);
        let ii = kernel_sum(len, &w_inv, d.coeffs(), v, v);
        let iii = kernel_sum(len, &w_inv, v, d.coeffs(), v);
        let gamma = kernel_sum(len, &w_plain, v, v, v);
        let weight = simpson_weight(k, last) * h / 3.0;
        for i in 0..len {
            quintic_ii[i] += weight * 2.0 * ii[i];
            quintic_iii[i] += weight * iii[i];
            resonant[i] += weight * Complex64::i() * v[i] * v[i].norm_sqr();
            direct[i] += weight * -Complex64::i() * gamma[i];
        }
    }

    let boundary_at = |k: usize| -> Vec<Complex64> {
        let v = states[k].coeffs();
        let w_inv = table.weights(times[k], true);
        kernel_sum(len, &w_inv, v, v, v)
            .into_iter()
            .map(|c| -c)
            .collect()
    };
    let boundary_t = boundary_at(last);
    let boundary_0 = boundary_at(0);

    let mut residual_sq = 0.0;
    for i in 0..len {
        let assembled = boundary_t[i] - boundary_0[i] + quintic_ii[i] + quintic_iii[i];
        residual_sq += (direct[i] - assembled).norm_sqr();
    }

    Ok(NormalFormTermsV {
        boundary_t: SpectralState::new(grid, rep, t, boundary_t)?,
        boundary_0: SpectralState::new(grid, rep, 0.0, boundary_0)?,
        quintic_ii: SpectralState::new(grid, rep, t, quintic_ii)?,
        quintic_iii: SpectralState::new(grid, rep, t, quintic_iii)?,
        resonant_integral: SpectralState::new(grid, rep, t, resonant)?,
        residual: residual_sq.sqrt(),
    })
}

/// Everything the w-side terms need at one time node.
struct WNode {
    /// `e^{it|ŵ_k|²} ŵ_k`; occupies any plain slot of a phase sum.
    tilted: Vec<Complex64>,
    /// `e^{it|ŵ_k|²} G_k` for slots carrying the interaction sum.
    tilted_g: Vec<Complex64>,
    /// `e^{it|ŵ_k|²} ∂ₜŵ_k` for slots carrying the full derivative.
    tilted_d: Vec<Complex64>,
    /// `(|ŵ_k|² + t Ξ_k) e^{it|ŵ_k|²} ŵ_k` for the phase-correction weight.
    tilted_r: Vec<Complex64>,
    /// `Ξ_k e^{it|ŵ_k|²} ŵ_k`.
    tilted_xi: Vec<Complex64>,
    /// Outer factor `e^{−it|ŵ_n|²}` restoring the output slot of the phase.
    outer: Vec<Complex64>,
    r: Vec<f64>,
    xi: Vec<f64>,
    g: Vec<Complex64>,
    rhs: Vec<Complex64>,
}

impl WNode {
    fn build(grid: FrequencyGrid, w: &[Complex64], t: f64, mu: &[f64]) -> Self {
        let (g, xi) = dynamics::w_interaction(grid, w, t, mu);
        let len = w.len();
        let mut tilted = Vec::with_capacity(len);
        let mut tilted_g = Vec::with_capacity(len);
        let mut tilted_d = Vec::with_capacity(len);
        let mut tilted_r = Vec::with_capacity(len);
        let mut tilted_xi = Vec::with_capacity(len);
        let mut outer = Vec::with_capacity(len);
        let mut r = Vec::with_capacity(len);
        let mut rhs = Vec::with_capacity(len);
        for k in 0..len {
            let phase = Complex64::from_polar(1.0, t * w[k].norm_sqr());
            let dk = -Complex64::i() * g[k] - Complex64::i() * t * w[k] * xi[k];
            let rk = w[k].norm_sqr() + t * xi[k];
            tilted.push(phase * w[k]);
            tilted_g.push(phase * g[k]);
            tilted_d.push(phase * dk);
            tilted_r.push(rk * phase * w[k]);
            tilted_xi.push(xi[k] * phase * w[k]);
            outer.push(phase.conj());
            r.push(rk);
            rhs.push(dk);
        }
        Self {
            tilted,
            tilted_g,
            tilted_d,
            tilted_r,
            tilted_xi,
            outer,
            r,
            xi,
            g,
            rhs,
        }
    }
}

/// Decompose both w-side increments at time `t`. Capped at radius 16: every
/// node costs a cubic number of kernel evaluations and the term count is
/// large; beyond that the v-side decomposition is the intended tool.
pub fn nf_decompose_w(
    traj: &Trajectory,
    t: f64,
    params: &ModelParams,
) -> Result<NormalFormTermsW> {
    check_coverage(traj, t, EquationKind::WForm)?;
    params.beta.require_nonresonant("normal-form decomposition")?;
    let states = traj.states();
    let grid = states[0].grid();
    if grid.radius() > 16 {
        return Err(Error::WDecompositionTooLarge {
            radius: grid.radius(),
        });
    }
    let rep = Representation::WForm;
    let len = grid.len();

    if t == 0.0 {
        let zero = SpectralState::zero(grid, rep, 0.0);
        return Ok(NormalFormTermsW {
            terms: W_TERM_KEYS.iter().map(|k| (*k, zero.clone())).collect(),
            residual_n1: 0.0,
            residual_n2: 0.0,
        });
    }

    let times = traj.times();
    let h = simpson_spacing(times)?;
    let table = PhiTable::new(grid, &params.beta);
    let mu = dynamics::mu_table(grid, &params.beta);
    let last = times.len() - 1;

    let mut x_ii = vec![Complex64::new(0.0, 0.0); len];
    let mut x_iii_1 = vec![Complex64::new(0.0, 0.0); len];
    let mut x_iii_2 = vec![Complex64::new(0.0, 0.0); len];
    let mut x_iv_1 = vec![Complex64::new(0.0, 0.0); len];
    let mut x_iv_2 = vec![Complex64::new(0.0, 0.0); len];
    let mut y_ii = vec![Complex64::new(0.0, 0.0); len];
    let mut y_iii = vec![Complex64::new(0.0, 0.0); len];
    let mut y_iv_0 = vec![Complex64::new(0.0, 0.0); len];
    let mut y_iv_1 = vec![Complex64::new(0.0, 0.0); len];
    let mut y_iv_2 = vec![Complex64::new(0.0, 0.0); len];
    let mut y_iv_3 = vec![Complex64::new(0.0, 0.0); len];
    let mut direct_n1 = vec![Complex64::new(0.0, 0.0); len];
    let mut direct_n2 = vec![Complex64::new(0.0, 0.0); len];
    let mut x_i_t = vec![Complex64::new(0.0, 0.0); len];
    let mut x_i_0 = vec![Complex64::new(0.0, 0.0); len];
    let mut y_i = vec![Complex64::new(0.0, 0.0); len];

    for (k, state) in states.iter().enumerate() {
        let tk = times[k];
        let w = state.coeffs();
        let node = WNode::build(grid, w, tk, &mu);
        let w_inv = table.weights(tk, true);

        // Shared phase sums. `plain` is D(n) before the outer phase factor.
        let plain = kernel_sum(len, &w_inv, &node.tilted, &node.tilted, &node.tilted);
        let r_slot1 = kernel_sum(len, &w_inv, &node.tilted_r, &node.tilted, &node.tilted);
        let r_slot2 = kernel_sum(len, &w_inv, &node.tilted, &node.tilted_r, &node.tilted);
        let g_slot1 = kernel_sum(len, &w_inv, &node.tilted_g, &node.tilted, &node.tilted);
        let g_slot2 = kernel_sum(len, &w_inv, &node.tilted, &node.tilted_g, &node.tilted);
        let xi_slot1 = kernel_sum(len, &w_inv, &node.tilted_xi, &node.tilted, &node.tilted);
        let xi_slot2 = kernel_sum(len, &w_inv, &node.tilted, &node.tilted_xi, &node.tilted);
        let d_slot1 = kernel_sum(len, &w_inv, &node.tilted_d, &node.tilted, &node.tilted);
        let d_slot2 = kernel_sum(len, &w_inv, &node.tilted, &node.tilted_d, &node.tilted);

        let weight = simpson_weight(k, last) * h / 3.0;
        for i in 0..len {
            let out = node.outer[i];
            let d_n = out * plain[i];
            let s_n = d_n * w[i].conj();
            // {ψ + t ∂ₜψ}-weighted sum, slot by slot; the n-slot carries the
            // minus sign and multiplies the plain sum.
            let corr = out * (2.0 * r_slot1[i] - r_slot2[i] - node.r[i] * plain[i]);

            x_ii[i] += weight * Complex64::i() * corr;
            x_iii_1[i] += weight * -2.0 * Complex64::i() * (out * g_slot1[i]);
            x_iii_2[i] += weight * Complex64::i() * (out * g_slot2[i]);
            x_iv_1[i] += weight * -2.0 * Complex64::i() * tk * (out * xi_slot1[i]);
            x_iv_2[i] += weight * Complex64::i() * tk * (out * xi_slot2[i]);

            y_ii[i] += weight * -2.0 * Complex64::i() * w[i] * s_n.re;
            y_iii[i] += weight * 2.0 * Complex64::i() * tk * w[i] * (corr * w[i].conj()).im;
            y_iv_0[i] += weight * -2.0 * Complex64::i() * tk * node.rhs[i] * s_n.re;
            y_iv_1[i] +=
                weight * -4.0 * Complex64::i() * tk * w[i] * (out * d_slot1[i] * w[i].conj()).re;
            y_iv_2[i] +=
                weight * -2.0 * Complex64::i() * tk * w[i] * (out * d_slot2[i] * w[i].conj()).re;
            y_iv_3[i] +=
                weight * -2.0 * Complex64::i() * tk * w[i] * (d_n * node.rhs[i].conj()).re;

            direct_n1[i] += weight * -Complex64::i() * node.g[i];
            direct_n2[i] += weight * -Complex64::i() * tk * w[i] * node.xi[i];
        }

        if k == 0 || k == last {
            for i in 0..len {
                let boundary = -(node.outer[i] * plain[i]);
                if k == 0 {
                    x_i_0[i] = boundary;
                } else {
                    x_i_t[i] = boundary;
                    let d_n = node.outer[i] * plain[i];
                    let s_n = d_n * w[i].conj();
                    y_i[i] = 2.0 * Complex64::i() * tk * w[i] * s_n.re;
                }
            }
        }
    }

    let mut residual_n1 = 0.0;
    let mut residual_n2 = 0.0;
    for i in 0..len {
        let n1_sum = x_i_t[i] - x_i_0[i] + x_ii[i] + x_iii_1[i] + x_iii_2[i] + x_iv_1[i]
            + x_iv_2[i];
        let n2_sum =
            y_i[i] + y_ii[i] + y_iii[i] + y_iv_0[i] + y_iv_1[i] + y_iv_2[i] + y_iv_3[i];
        residual_n1 += (direct_n1[i] - n1_sum).norm_sqr();
        residual_n2 += (direct_n2[i] - n2_sum).norm_sqr();
    }

    let make = |coeffs: Vec<Complex64>, time: f64| SpectralState::new(grid, rep, time, coeffs);
    let terms = vec![
        ("x_I_t", make(x_i_t, t)?),
        ("x_I_0", make(x_i_0, 0.0)?),
        ("x_II", make(x_ii, t)?),
        ("x_III_1", make(x_iii_1, t)?),
        ("x_III_2", make(x_iii_2, t)?),
        ("x_IV_1", make(x_iv_1, t)?),
        ("x_IV_2", make(x_iv_2, t)?),
        ("y_I", make(y_i, t)?),
        ("y_II", make(y_ii, t)?),
        ("y_III", make(y_iii, t)?),
        ("y_IV_0", make(y_iv_0, t)?),
        ("y_IV_1", make(y_iv_1, t)?),
        ("y_IV_2", make(y_iv_2, t)?),
        ("y_IV_3", make(y_iv_3, t)?),
    ];

    Ok(NormalFormTermsW {
        terms,
        residual_n1: residual_n1.sqrt(),
        residual_n2: residual_n2.sqrt(),
    })
}

/// The flow perturbation `K_j(t)(u₀)`: evolve the reinterpreted data and
/// subtract it. `j = 0` runs the v equation, `j = 1` the w equation.
pub fn remainder_k(
    u0: &SpectralState,
    t: f64,
    j: u8,
    params: &ModelParams,
    dt: f64,
) -> Result<SpectralState> {
    let kind = match j {
        0 => EquationKind::VForm,
        1 => EquationKind::WForm,
        _ => {
            return Err(Error::InvalidParameter(format!(
                "smoothing order must be 0 or 1, got {j}"
            )))
        }
    };
    if u0.time() != 0.0 {
        return Err(Error::TimeMismatch {
            tagged: u0.time(),
            requested: 0.0,
        });
    }
    let rep = kind.required_rep();
    let start = if u0.rep() == Representation::Physical {
        // At time zero all gauge maps are the identity, so physical
        // coefficients double as interaction-picture data by retagging.
        u0.clone().retag(rep)
    } else if u0.rep() == rep {
        u0.clone()
    } else {
        return Err(Error::RepresentationMismatch {
            expected: "u (or already-matching form)",
            got: u0.rep().token(),
        });
    };
    let run = dynamics::evolve(kind, &start, t, dt, params, usize::MAX)?;
    let final_state = run.final_state();
    let diff: Vec<Complex64> = final_state
        .coeffs()
        .iter()
        .zip(start.coeffs())
        .map(|(a, b)| a - b)
        .collect();
    SpectralState::new(start.grid(), rep, t, diff)
}

/// Direct Simpson quadrature of one structural piece along a stored
/// trajectory; the independent oracle for the tracked-piece integrator and
/// the remainder-consistency checks.
pub fn quadrature_of_piece(
    traj: &Trajectory,
    piece: crate::dynamics::PieceKind,
    params: &ModelParams,
) -> Result<SpectralState> {
    let states = traj.states();
    let times = traj.times();
    let grid = states[0].grid();
    let len = grid.len();
    let h = simpson_spacing(times)?;
    let mu = dynamics::mu_table(grid, &params.beta);
    let last = times.len() - 1;
    let mut acc = vec![Complex64::new(0.0, 0.0); len];
    for (k, state) in states.iter().enumerate() {
        let weight = simpson_weight(k, last) * h / 3.0;
        let w = state.coeffs();
        match piece {
            crate::dynamics::PieceKind::ResonantPhase => {
                for i in 0..len {
                    acc[i] += weight * Complex64::i() * w[i] * w[i].norm_sqr();
                }
            }
            crate::dynamics::PieceKind::ModulusPhase => {
                let (_, xi) = dynamics::w_interaction(grid, w, times[k], &mu);
                for i in 0..len {
                    acc[i] += weight * -Complex64::i() * times[k] * w[i] * xi[i];
                }
            }
        }
    }
    SpectralState::new(grid, states[0].rep(), *times.last().unwrap(), acc)
}
