//! Cubic products on the truncated grid.
//!
//! Two independent routes compute the same sums. The transform route pads to
//! an alias-free length and goes through physical space; the direct route
//! enumerates hyperplane triples `n = n1 - n2 + n3` term by term. The direct
//! route is the oracle: it is slow but its summation set is explicit, and it
//! can restrict to the structural subsets (non-resonant triples, the
//! diagonal, the resonant shell) that the analysis splits the cubic into.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use num_complex::Complex64;
use once_cell::sync::Lazy;
use rustfft::{Fft, FftPlanner};

use crate::grid::FrequencyGrid;
use crate::params::Beta;
use crate::state::SpectralState;

#[derive(Clone)]
struct FftPair {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

static PLANS: Lazy<Mutex<HashMap<usize, FftPair>>> = Lazy::new(|| Mutex::new(HashMap::new()));

fn plans_for(len: usize) -> FftPair {
    let mut cache = PLANS.lock().expect("fft plan cache poisoned");
    cache
        .entry(len)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            FftPair {
                forward: planner.plan_fft_forward(len),
                inverse: planner.plan_fft_inverse(len),
            }
        })
        .clone()
}

/// Values of the trigonometric polynomial on the padded collocation grid.
/// The unnormalized inverse transform of coefficients placed at `n mod M`
/// is exactly `u(x_j) = sum_n c_n exp(i n x_j)`.
pub fn physical_samples(state: &SpectralState) -> Vec<Complex64> {
    physical_samples_raw(state.grid(), state.coeffs())
}

/// Slice form of [`physical_samples`]: time-stepper stages work on bare
/// coefficient vectors and skip the state wrapper.
pub fn physical_samples_raw(grid: FrequencyGrid, coeffs: &[Complex64]) -> Vec<Complex64> {
    let m = grid.transform_len();
    let mut buf = vec![Complex64::new(0.0, 0.0); m];
    for (i, n) in grid.modes().enumerate() {
        buf[grid.transform_index(n)] = coeffs[i];
    }
    plans_for(m).inverse.process(&mut buf);
    buf
}

/// Mean of `|u|^4` over the circle, exact on the padded grid.
///
/// `|u|^4` is a trigonometric polynomial of degree `4N`; with `M >= 4N + 1`
/// collocation points none of its nonzero frequencies alias to zero, so the
/// grid average equals the true average.
pub fn quartic_mean(state: &SpectralState) -> f64 {
    let samples = physical_samples(state);
    let m = samples.len() as f64;
    samples.iter().map(|u| u.norm_sqr() * u.norm_sqr()).sum::<f64>() / m
}

/// Transform-route cubic: coefficients of `|u|^2 u`, or of the renormalized
/// combination `(|u|^2 - 2 mass) u`, restricted back to the grid.
pub fn cubic_fft(state: &SpectralState, renormalized: bool) -> SpectralState {
    let out = cubic_fft_raw(state.grid(), state.coeffs(), renormalized);
    let grid = state.grid();
    state.map_coeffs(|n, _| out[(n + grid.radius()) as usize])
}

/// Slice form of [`cubic_fft`].
pub fn cubic_fft_raw(
    grid: FrequencyGrid,
    coeffs: &[Complex64],
    renormalized: bool,
) -> Vec<Complex64> {
    let m = grid.transform_len();
    let mut samples = physical_samples_raw(grid, coeffs);
    let shift = if renormalized {
        2.0 * coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>()
    } else {
        0.0
    };
    for u in samples.iter_mut() {
        *u *= u.norm_sqr() - shift;
    }
    plans_for(m).forward.process(&mut samples);
    let scale = 1.0 / m as f64;
    grid.modes()
        .map(|n| samples[grid.transform_index(n)] * scale)
        .collect()
}

/// Which triples `(n1, n2, n3)` on the hyperplane `n = n1 - n2 + n3` a direct
/// sum ranges over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TripleFilter {
    /// Every triple on the hyperplane. Matches the plain cubic.
    All,
    /// The non-resonant triples: `n != n1`, `n != n3`, `n1 + n3 != 2*beta/3`.
    Gamma,
    /// Only `n1 = n2 = n3 = n`; the sum is `|c_n|^2 c_n`.
    Diagonal,
    /// The bare shell `n1 + n3 = 2*beta/3`, no further exclusions. Empty
    /// (a zero state, not an error) unless `2*beta/3` is an integer.
    ResonantShell,
}

/// Direct-summation cubic over the selected triples. `O(N^3)` and meant as an
/// oracle and for the structural splits, not for time stepping.
pub fn cubic_direct(state: &SpectralState, filter: TripleFilter, beta: &Beta) -> SpectralState {
    let grid = state.grid();
    let c = state.coeffs();
    let idx = |n: i64| (n + grid.radius()) as usize;

    state.map_coeffs(|n, c_n| match filter {
        TripleFilter::Diagonal => c_n * c_n.norm_sqr(),
        TripleFilter::ResonantShell => {
            let Some(shell) = beta.resonant_shell() else {
                return Complex64::new(0.0, 0.0);
            };
            let mut acc = Complex64::new(0.0, 0.0);
            let n2 = shell - n;
            if grid.contains(n2) {
                for n1 in grid.modes() {
                    let n3 = shell - n1;
                    if grid.contains(n3) {
                        acc += c[idx(n1)] * c[idx(n2)].conj() * c[idx(n3)];
                    }
                }
            }
            acc
        }
        TripleFilter::All | TripleFilter::Gamma => {
            let mut acc = Complex64::new(0.0, 0.0);
            for n1 in grid.modes() {
                for n3 in grid.modes() {
                    let n2 = n1 + n3 - n;
                    if !grid.contains(n2) {
                        continue;
                    }
                    if filter == TripleFilter::Gamma
                        && (n1 == n || n3 == n || beta.on_shell(n1 + n3))
                    {
                        continue;
                    }
                    acc += c[idx(n1)] * c[idx(n2)].conj() * c[idx(n3)];
                }
            }
            acc
        }
    })
}

/// Renormalized cubic by direct summation: the full hyperplane sum minus
/// `2 mass * c_n`, for cross-checking the transform route.
pub fn renormalized_direct(state: &SpectralState, beta: &Beta) -> SpectralState {
    let all = cubic_direct(state, TripleFilter::All, beta);
    let m2 = 2.0 * state.mass();
    let grid = state.grid();
    let orig: Vec<Complex64> = state.coeffs().to_vec();
    all.map_coeffs(|n, c| c - m2 * orig[(n + grid.radius()) as usize])
}
