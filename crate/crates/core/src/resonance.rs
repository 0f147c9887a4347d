//! The cubic interaction phase on the hyperplane and its lower bounds.
//!
//! For a tuple `(n, n1, n2, n3)` with `n = n1 - n2 + n3` the phase
//! `phi = mu_n - mu_{n1} + mu_{n2} - mu_{n3}` factors as
//!
//! ```text
//! phi = 3 (n - n1)(n - n3)(n1 + n3 - 2 beta / 3)
//! ```
//!
//! which is why the non-resonant set excludes exactly the planes `n = n1`,
//! `n = n3` and the shell `n1 + n3 = 2 beta / 3`. Both routes to `phi` are
//! implemented and cross-checked.

use rayon::prelude::*;
use serde::Serialize;

use crate::cubic::{cubic_direct, TripleFilter};
use crate::error::{Error, Result};
use crate::gauges::dispersion_symbol;
use crate::params::Beta;
use crate::state::{Representation, SpectralState};

/// A frequency tuple on the hyperplane `n = n1 - n2 + n3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FrequencyTuple {
    pub n: i64,
    pub n1: i64,
    pub n2: i64,
    pub n3: i64,
}

impl FrequencyTuple {
    pub fn new(n: i64, n1: i64, n2: i64, n3: i64) -> Result<Self> {
        if n != n1 - n2 + n3 {
            return Err(Error::OffHyperplane { n, n1, n2, n3 });
        }
        Ok(Self { n, n1, n2, n3 })
    }

    /// Largest frequency magnitude in the tuple.
    pub fn n_max(&self) -> i64 {
        self.n
            .abs()
            .max(self.n1.abs())
            .max(self.n2.abs())
            .max(self.n3.abs())
    }
}

/// Phase via the factored form. Debug builds cross-check the expanded
/// symbol differences to one part in 1e9.
pub fn phi(tuple: &FrequencyTuple, beta: &Beta) -> f64 {
    let d1 = (tuple.n - tuple.n1) as f64;
    let d3 = (tuple.n - tuple.n3) as f64;
    let shell = (tuple.n1 + tuple.n3) as f64 - 2.0 * beta.value() / 3.0;
    let factored = 3.0 * d1 * d3 * shell;
    debug_assert!({
        let expanded = phi_expanded(tuple, beta);
        let scale = 1.0f64.max(factored.abs());
        (factored - expanded).abs() <= 1e-9 * scale
    });
    factored
}

/// Phase via the alternating sum of dispersion symbols.
pub fn phi_expanded(tuple: &FrequencyTuple, beta: &Beta) -> f64 {
    dispersion_symbol(tuple.n, beta) - dispersion_symbol(tuple.n1, beta)
        + dispersion_symbol(tuple.n2, beta)
        - dispersion_symbol(tuple.n3, beta)
}

/// Membership in the non-resonant set: on the hyperplane, off the planes
/// `n = n1`, `n = n3`, and off the shell `n1 + n3 = 2 beta / 3`.
pub fn gamma_contains(tuple: &FrequencyTuple, beta: &Beta) -> bool {
    tuple.n != tuple.n1 && tuple.n != tuple.n3 && !beta.on_shell(tuple.n1 + tuple.n3)
}

/// Modulus-square phase `psi = -|c_n|^2 + |c_{n1}|^2 - |c_{n2}|^2 + |c_{n3}|^2`
/// of a twice-gauged interaction state.
pub fn psi(tuple: &FrequencyTuple, state: &SpectralState) -> Result<f64> {
    state.expect_rep(Representation::WForm)?;
    Ok(-state.coeff(tuple.n)?.norm_sqr() + state.coeff(tuple.n1)?.norm_sqr()
        - state.coeff(tuple.n2)?.norm_sqr()
        + state.coeff(tuple.n3)?.norm_sqr())
}

/// Combined phase `theta = phi + psi`.
pub fn theta(tuple: &FrequencyTuple, state: &SpectralState, beta: &Beta) -> Result<f64> {
    Ok(phi(tuple, beta) + psi(tuple, state)?)
}

/// The two elementary gaps and the shell distance that control `|phi|`.
fn gaps(tuple: &FrequencyTuple, beta: &Beta) -> (f64, f64, f64) {
    let d1 = (tuple.n - tuple.n1).abs() as f64;
    let d3 = (tuple.n - tuple.n3).abs() as f64;
    let shell = ((tuple.n1 + tuple.n3) as f64 - 2.0 * beta.value() / 3.0).abs();
    (d1, d3, shell)
}

/// Lower-bound bookkeeping for one non-resonant tuple.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct PhaseBoundReport {
    pub tuple: FrequencyTuple,
    pub phi: f64,
    pub n_max: i64,
    /// Smallest of the three gap factors.
    pub lambda: f64,
    /// Smallest pairwise product of gap factors.
    pub big_lambda: f64,
    /// All four frequencies within a factor 4 of the largest one
    /// (zeros counted as magnitude 1).
    pub comparable: bool,
    /// `|phi| >= c n_max^2 lambda`.
    pub case_i: bool,
    /// Comparable and `|phi| >= c n_max big_lambda`.
    pub case_ii: bool,
}

/// Evaluate both phase lower bounds with constant `c` for a tuple in the
/// non-resonant set.
pub fn phase_bounds(tuple: &FrequencyTuple, beta: &Beta, c: f64) -> Result<PhaseBoundReport> {
    if !gamma_contains(tuple, beta) {
        return Err(Error::NotInGamma {
            n: tuple.n,
            n1: tuple.n1,
            n2: tuple.n2,
            n3: tuple.n3,
        });
    }
    let value = phi(tuple, beta);
    let (d1, d3, shell) = gaps(tuple, beta);
    let lambda = d1.min(d3).min(shell);
    let big_lambda = (d1 * d3).min(d1 * shell).min(d3 * shell);
    let n_max = tuple.n_max();
    let comparable = [tuple.n, tuple.n1, tuple.n2, tuple.n3]
        .iter()
        .all(|&m| n_max <= 4 * m.abs().max(1));
    let nf = n_max as f64;
    Ok(PhaseBoundReport {
        tuple: *tuple,
        phi: value,
        n_max,
        lambda,
        big_lambda,
        comparable,
        case_i: value.abs() >= c * nf * nf * lambda,
        case_ii: comparable && value.abs() >= c * nf * big_lambda,
    })
}

/// One scanned tuple, in the fixed lattice order `(n, n1, n3)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ScanRow {
    pub n: i64,
    pub n1: i64,
    pub n2: i64,
    pub n3: i64,
    pub phi: f64,
    pub lambda: f64,
    pub big_lambda: f64,
    pub comparable: bool,
    pub case_i: bool,
    pub case_ii: bool,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ScanSummary {
    pub radius: i64,
    pub c: f64,
    pub tuples: u64,
    /// Largest constant for which at least one of the two bounds holds on
    /// every scanned tuple: `min |phi| / max(n_max^2 lambda, n_max big_lambda
    /// over comparable tuples)`.
    pub c_star: f64,
    pub worst: FrequencyTuple,
    pub case_i_failures: u64,
    pub case_ii_failures: u64,
}

/// Scan every non-resonant tuple with all four frequencies in `[-radius,
/// radius]`. Parallel over `n`, with per-slice results spliced back in
/// lattice order, so the output is independent of thread count.
pub fn scan_gamma(
    radius: i64,
    beta: &Beta,
    c: f64,
    collect_rows: bool,
) -> Result<(ScanSummary, Vec<ScanRow>)> {
    if radius < 1 {
        return Err(Error::InvalidParameter(format!(
            "scan radius must be at least 1, got {radius}"
        )));
    }
    struct Slice {
        rows: Vec<ScanRow>,
        tuples: u64,
        c_star: f64,
        worst: Option<FrequencyTuple>,
        fail_i: u64,
        fail_ii: u64,
    }

    let slices: Vec<Slice> = (-radius..=radius)
        .into_par_iter()
        .map(|n| {
            let mut slice = Slice {
                rows: Vec::new(),
                tuples: 0,
                c_star: f64::INFINITY,
                worst: None,
                fail_i: 0,
                fail_ii: 0,
            };
            for n1 in -radius..=radius {
                for n3 in -radius..=radius {
                    let n2 = n1 + n3 - n;
                    if n2.abs() > radius {
                        continue;
                    }
                    let tuple = FrequencyTuple { n, n1, n2, n3 };
                    if !gamma_contains(&tuple, beta) {
                        continue;
                    }
                    let report = phase_bounds(&tuple, beta, c)
                        .expect("tuple checked against the non-resonant set");
                    slice.tuples += 1;
                    if !report.case_i {
                        slice.fail_i += 1;
                    }
                    if !report.case_ii {
                        slice.fail_ii += 1;
                    }
                    let nf = report.n_max as f64;
                    let mut denom = nf * nf * report.lambda;
                    if report.comparable {
                        denom = denom.max(nf * report.big_lambda);
                    }
                    let ratio = report.phi.abs() / denom;
                    if ratio < slice.c_star {
                        slice.c_star = ratio;
                        slice.worst = Some(tuple);
                    }
                    if collect_rows {
                        slice.rows.push(ScanRow {
                            n,
                            n1,
                            n2,
                            n3,
                            phi: report.phi,
                            lambda: report.lambda,
                            big_lambda: report.big_lambda,
                            comparable: report.comparable,
                            case_i: report.case_i,
                            case_ii: report.case_ii,
                        });
                    }
                }
            }
            slice
        })
        .collect();

    let mut rows = Vec::new();
    let mut tuples = 0;
    let mut c_star = f64::INFINITY;
    let mut worst = None;
    let mut fail_i = 0;
    let mut fail_ii = 0;
    for slice in slices {
        rows.extend(slice.rows);
        tuples += slice.tuples;
        if slice.c_star < c_star {
            c_star = slice.c_star;
            worst = slice.worst;
        }
        fail_i += slice.fail_i;
        fail_ii += slice.fail_ii;
    }
    let worst = worst.ok_or_else(|| {
        Error::InvalidParameter(format!(
            "no non-resonant tuples inside radius {radius} for beta = {beta}"
        ))
    })?;
    Ok((
        ScanSummary {
            radius,
            c,
            tuples,
            c_star,
            worst,
            case_i_failures: fail_i,
            case_ii_failures: fail_ii,
        },
        rows,
    ))
}

/// Split the renormalized cubic into its non-resonant part, the diagonal
/// part, and the resonant-shell remainder:
///
/// * part 0 sums over the non-resonant set,
/// * part 1 is `-|c_n|^2 c_n`,
/// * part 2 sums the shell `n1 + n3 = 2 beta / 3` minus the planes `n = n1`
///   and `n = n3`, and vanishes identically for non-resonant `beta`.
///
/// The three parts add up to the renormalized cubic exactly.
pub fn split_n123(
    state: &SpectralState,
    beta: &Beta,
) -> Result<[SpectralState; 3]> {
    let part0 = cubic_direct(state, TripleFilter::Gamma, beta);
    let part1 = cubic_direct(state, TripleFilter::Diagonal, beta).map_coeffs(|_, c| -c);

    let grid = state.grid();
    let c = state.coeffs();
    let idx = |n: i64| (n + grid.radius()) as usize;
    let part2 = match beta.resonant_shell() {
        None => SpectralState::zero(grid, state.rep(), state.time()),
        Some(shell) => state.map_coeffs(|n, _| {
            let mut acc = num_complex::Complex64::new(0.0, 0.0);
            let n2 = shell - n;
            if grid.contains(n2) {
                for n1 in grid.modes() {
                    let n3 = shell - n1;
                    if !grid.contains(n3) || n1 == n || n3 == n {
                        continue;
                    }
                    acc += c[idx(n1)] * c[idx(n2)].conj() * c[idx(n3)];
                }
            }
            acc
        }),
    };
    Ok([part0, part1, part2])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cubic::cubic_fft;
    use num_complex::Complex64;
    use proptest::prelude::*;

    #[test]
    fn tuple_must_sit_on_hyperplane() {
        assert!(FrequencyTuple::new(2, 0, -3, -1).is_ok());
        assert!(FrequencyTuple::new(2, 0, -3, 0).is_err());
    }

    #[test]
    fn phi_worked_example() {
        // (n, n1, n2, n3) = (2, 0, -3, -1), beta = 0:
        // factored: 3 * 2 * 3 * (-1) = -18;
        // expanded: 8 - 0 + (-27) - (-1) = -18.
        let tuple = FrequencyTuple::new(2, 0, -3, -1).unwrap();
        let beta = Beta::rational(0, 1).unwrap();
        assert_eq!(phi(&tuple, &beta), -18.0);
        assert_eq!(phi_expanded(&tuple, &beta), -18.0);
    }

    #[test]
    fn gamma_membership_examples() {
        let beta = Beta::rational(3, 2).unwrap();
        // Shell n1 + n3 = 1 is excluded.
        let t = FrequencyTuple::new(2, 0, -1, 1).unwrap();
        assert!(!gamma_contains(&t, &beta));
        // Planes n = n1, n = n3 are excluded.
        let t = FrequencyTuple::new(2, 2, 1, 1).unwrap();
        assert!(!gamma_contains(&t, &beta));
        // A genuinely non-resonant tuple.
        let t = FrequencyTuple::new(2, 0, 1, 3).unwrap();
        assert!(gamma_contains(&t, &beta));

        let beta = Beta::rational(1, 1).unwrap();
        // 2*beta/3 = 2/3: no shell at all, only the planes matter.
        let t = FrequencyTuple::new(2, 0, -1, 1).unwrap();
        assert!(gamma_contains(&t, &beta));
    }

    #[test]
    fn phi_vanishes_on_excluded_planes() {
        // n = n1 kills the first factor for every beta.
        let t = FrequencyTuple::new(5, 5, 2, 2).unwrap();
        assert_eq!(phi(&t, &Beta::float(2.1).unwrap()), 0.0);
        assert_eq!(phi(&t, &Beta::rational(0, 1).unwrap()), 0.0);
        // n1 + n3 = 1 = 2β/3 at beta = 3/2 kills the shell factor.
        let t = FrequencyTuple::new(3, 2, -2, -1).unwrap();
        assert_eq!(phi(&t, &Beta::rational(3, 2).unwrap()), 0.0);
    }

    #[test]
    fn psi_alternating_sum() {
        // Moduli^2 (1, 4, 9, 16) placed at (n, n1, n2, n3) = (0, 1, 3, 2):
        // psi = -1 + 4 - 9 + 16 = 10.
        let w = SpectralState::from_modes(
            3,
            Representation::WForm,
            0.0,
            &[
                (0, Complex64::new(1.0, 0.0)),
                (1, Complex64::new(0.0, 2.0)),
                (3, Complex64::new(3.0, 0.0)),
                (2, Complex64::new(0.0, -4.0)),
            ],
        )
        .unwrap();
        let tuple = FrequencyTuple::new(0, 1, 3, 2).unwrap();
        assert_eq!(psi(&tuple, &w).unwrap(), 10.0);
    }

    #[test]
    fn psi_by_hand() {
        // Moduli^2: c_{-1} = 4, c_0 = 1, c_1 = 9, c_2 = 16.
        // Tuple (2, 1, -1, 0): psi = -16 + 9 - 4 + 1 = -10.
        let w = SpectralState::from_modes(
            2,
            Representation::WForm,
            0.0,
            &[
                (-1, Complex64::new(2.0, 0.0)),
                (0, Complex64::new(0.0, 1.0)),
                (1, Complex64::new(3.0, 0.0)),
                (2, Complex64::new(0.0, -4.0)),
            ],
        )
        .unwrap();
        let tuple = FrequencyTuple::new(2, 1, -1, 0).unwrap();
        assert_eq!(psi(&tuple, &w).unwrap(), -10.0);
        assert!(psi(&tuple, &w.retag(Representation::VForm)).is_err());
    }

    #[test]
    fn phase_bounds_cover_both_cases() {
        let beta = Beta::float(2.1).unwrap();
        let c = 0.125;
        // Widely separated tuple: case (i) via the shell gap.
        let t = FrequencyTuple::new(8, 1, -6, 1).unwrap();
        let report = phase_bounds(&t, &beta, c).unwrap();
        assert!(report.case_i);
        // Comparable tuple.
        let t = FrequencyTuple::new(7, 8, 9, 8).unwrap();
        let report = phase_bounds(&t, &beta, c).unwrap();
        assert!(report.comparable);
        assert!(report.case_ii);
        // Not in the non-resonant set: plane n = n1.
        let t = FrequencyTuple::new(7, 7, 9, 9).unwrap();
        assert!(phase_bounds(&t, &beta, c).is_err());
    }

    #[test]
    fn scan_is_deterministic_and_positive() {
        let beta = Beta::float(2.1).unwrap();
        let (summary, rows) = scan_gamma(6, &beta, 0.125, true).unwrap();
        assert_eq!(summary.tuples as usize, rows.len());
        assert!(summary.c_star > 0.0);
        // Rows come back in lattice order regardless of the thread pool.
        let mut sorted = rows.clone();
        sorted.sort_by_key(|r| (r.n, r.n1, r.n3));
        for (a, b) in rows.iter().zip(sorted.iter()) {
            assert_eq!((a.n, a.n1, a.n3), (b.n, b.n1, b.n3));
        }
        let (again, _) = scan_gamma(6, &beta, 0.125, false).unwrap();
        assert_eq!(summary.c_star, again.c_star);
        assert_eq!(summary.worst, again.worst);
    }

    #[test]
    fn split_parts_sum_to_renormalized_cubic() {
        let state = SpectralState::from_modes(
            4,
            Representation::Gauged,
            0.0,
            &[
                (-3, Complex64::new(0.2, 0.1)),
                (-1, Complex64::new(-0.4, 0.3)),
                (0, Complex64::new(0.9, -0.2)),
                (2, Complex64::new(0.1, 0.7)),
                (4, Complex64::new(-0.3, -0.3)),
            ],
        )
        .unwrap();
        for beta in [
            Beta::rational(3, 2).unwrap(),
            Beta::rational(1, 1).unwrap(),
            Beta::float(2.1).unwrap(),
            Beta::rational(0, 1).unwrap(),
        ] {
            let [p0, p1, p2] = split_n123(&state, &beta).unwrap();
            let renorm = cubic_fft(&state, true);
            let sum = p0.map_coeffs(|n, c| {
                c + p1.coeff(n).unwrap() + p2.coeff(n).unwrap()
            });
            assert!(
                sum.l2_distance(&renorm).unwrap() < 1e-12,
                "partition fails for beta = {beta}"
            );
            if beta.resonant_shell().is_none() {
                assert!(p2.coeffs().iter().all(|c| c.norm() == 0.0));
            }
        }
    }

    #[test]
    fn shell_remainder_by_hand() {
        // beta = 3/2, data on modes 0, 1, 2 (all equal 1): the shell tuples
        // surviving the plane exclusions contribute only at n = -1, with the
        // two ordered pairs (n1, n3) = (0, 1), (1, 0) and n2 = 2, so the
        // remainder is 2 there and 0 elsewhere.
        let beta = Beta::rational(3, 2).unwrap();
        let state = SpectralState::from_modes(
            2,
            Representation::Gauged,
            0.0,
            &[
                (0, Complex64::new(1.0, 0.0)),
                (1, Complex64::new(1.0, 0.0)),
                (2, Complex64::new(1.0, 0.0)),
            ],
        )
        .unwrap();
        let [_, _, p2] = split_n123(&state, &beta).unwrap();
        for (n, c) in p2.iter_modes() {
            let want = if n == -1 { 2.0 } else { 0.0 };
            assert!((c - want).norm() < 1e-15, "mode {n}: {c}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn factored_phi_matches_expanded(
            n1 in -20i64..=20,
            n2 in -20i64..=20,
            n3 in -20i64..=20,
            num in -9i64..=9,
            den in 1i64..=4,
        ) {
            let n = n1 - n2 + n3;
            let tuple = FrequencyTuple::new(n, n1, n2, n3).unwrap();
            let beta = Beta::rational(num, den).unwrap();
            let a = phi(&tuple, &beta);
            let b = phi_expanded(&tuple, &beta);
            prop_assert!((a - b).abs() <= 1e-9 * 1.0f64.max(a.abs()));
        }

        #[test]
        fn gamma_membership_symmetric_in_n1_n3(
            n1 in -12i64..=12,
            n2 in -12i64..=12,
            n3 in -12i64..=12,
            num in -9i64..=9,
            den in 1i64..=4,
        ) {
            let n = n1 - n2 + n3;
            let beta = Beta::rational(num, den).unwrap();
            let a = FrequencyTuple::new(n, n1, n2, n3).unwrap();
            let b = FrequencyTuple::new(n, n3, n2, n1).unwrap();
            prop_assert_eq!(gamma_contains(&a, &beta), gamma_contains(&b, &beta));
        }
    }
}
