//! Truncated spectral states, their norms, and the snapshot file format.

use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::FrequencyGrid;

/// Which unknown of the model a coefficient vector represents.
///
/// `Physical` is the original unknown. `Gauged` carries the global mass
/// rotation that renormalizes the cubic term, `GaugedJ` additionally carries
/// the per-mode modulus rotation. `VForm` and `WForm` are the interaction
/// pictures of `Gauged` and `GaugedJ`: the free flow is undone, so only the
/// nonlinear part of the motion remains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Representation {
    Physical,
    Gauged,
    GaugedJ,
    VForm,
    WForm,
}

impl Representation {
    /// Short tag used in snapshot headers and file names.
    pub fn token(self) -> &'static str {
        match self {
            Representation::Physical => "u",
            Representation::Gauged => "ug",
            Representation::GaugedJ => "ugj",
            Representation::VForm => "v",
            Representation::WForm => "w",
        }
    }

    pub fn from_token(token: &str) -> Result<Self> {
        match token {
            "u" => Ok(Representation::Physical),
            "ug" => Ok(Representation::Gauged),
            "ugj" => Ok(Representation::GaugedJ),
            "v" => Ok(Representation::VForm),
            "w" => Ok(Representation::WForm),
            other => Err(Error::InvalidParameter(format!(
                "unknown representation tag `{other}` (expected u, ug, ugj, v or w)"
            ))),
        }
    }
}

impl fmt::Display for Representation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// Fourier coefficients of one unknown at one instant.
///
/// Coefficients are stored for modes `-N ..= N` in ascending order; all entries
/// are finite by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralState {
    grid: FrequencyGrid,
    rep: Representation,
    time: f64,
    coeffs: Vec<Complex64>,
}

impl SpectralState {
    pub fn new(
        grid: FrequencyGrid,
        rep: Representation,
        time: f64,
        coeffs: Vec<Complex64>,
    ) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                radius: grid.radius(),
                expected: grid.len(),
                got: coeffs.len(),
            });
        }
        if !time.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "time tag must be finite, got {time}"
            )));
        }
        let state = Self {
            grid,
            rep,
            time,
            coeffs,
        };
        state.check_finite()?;
        Ok(state)
    }

    pub fn zero(grid: FrequencyGrid, rep: Representation, time: f64) -> Self {
        Self {
            grid,
            rep,
            time,
            coeffs: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    /// Build a state from `(mode, value)` pairs; unmentioned modes are zero.
    pub fn from_modes(
        radius: i64,
        rep: Representation,
        time: f64,
        entries: &[(i64, Complex64)],
    ) -> Result<Self> {
        let grid = FrequencyGrid::new(radius)?;
        let mut coeffs = vec![Complex64::new(0.0, 0.0); grid.len()];
        for &(n, c) in entries {
            coeffs[grid.index_of(n)?] = c;
        }
        Self::new(grid, rep, time, coeffs)
    }

    pub fn check_finite(&self) -> Result<()> {
        for (k, c) in self.coeffs.iter().enumerate() {
            if !c.re.is_finite() || !c.im.is_finite() {
                return Err(Error::NonFinite {
                    mode: self.grid.mode_at(k),
                });
            }
        }
        Ok(())
    }

    pub fn grid(&self) -> FrequencyGrid {
        self.grid
    }

    pub fn rep(&self) -> Representation {
        self.rep
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeff(&self, n: i64) -> Result<Complex64> {
        Ok(self.coeffs[self.grid.index_of(n)?])
    }

    pub fn iter_modes(&self) -> impl Iterator<Item = (i64, Complex64)> + '_ {
        self.grid
            .modes()
            .zip(self.coeffs.iter().copied())
    }

    pub fn expect_rep(&self, expected: Representation) -> Result<()> {
        if self.rep == expected {
            Ok(())
        } else {
            Err(Error::RepresentationMismatch {
                expected: expected.token(),
                got: self.rep.token(),
            })
        }
    }

    /// Reinterpret the coefficients under another representation tag.
    ///
    /// At time 0 every gauge and interaction map is the identity, so retagging
    /// is the honest way to feed one set of initial data to different flows.
    pub fn retag(&self, rep: Representation) -> Self {
        Self {
            rep,
            ..self.clone()
        }
    }

    pub fn with_time(&self, time: f64) -> Self {
        Self {
            time,
            ..self.clone()
        }
    }

    /// Apply a per-mode map to the coefficients, keeping grid, tag and time.
    pub fn map_coeffs(&self, mut f: impl FnMut(i64, Complex64) -> Complex64) -> Self {
        let coeffs = self
            .iter_modes()
            .map(|(n, c)| f(n, c))
            .collect();
        Self {
            coeffs,
            ..self.clone()
        }
    }

    /// Sum of squared coefficient moduli. With the normalized circle average
    /// this equals the mean of `|u|^2`.
    pub fn mass(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Sobolev norm `(sum <n>^{2s} |c_n|^2)^{1/2}` with `<n> = sqrt(1 + n^2)`.
    pub fn sobolev_norm(&self, s: f64) -> f64 {
        self.iter_modes()
            .map(|(n, c)| (1.0 + (n * n) as f64).powf(s) * c.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn linf_coeff(&self) -> f64 {
        self.coeffs
            .iter()
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }

    /// `H^0` distance to another state on the same grid. Representation tags
    /// are not compared; callers that care check them first.
    pub fn l2_distance(&self, other: &Self) -> Result<f64> {
        self.sobolev_distance(other, 0.0)
    }

    pub fn sobolev_distance(&self, other: &Self, s: f64) -> Result<f64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch {
                left: self.grid.radius(),
                right: other.grid.radius(),
            });
        }
        Ok(self
            .iter_modes()
            .zip(other.coeffs.iter())
            .map(|((n, a), &b)| (1.0 + (n * n) as f64).powf(s) * (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt())
    }

    /// Write the snapshot format: a header `n_min n_max time rep`, then one
    /// `n re im` line per mode in ascending order. Floats are printed in the
    /// shortest form that round-trips, so write/read/write is byte-stable.
    pub fn write_snapshot<W: Write>(&self, out: &mut W) -> Result<()> {
        writeln!(
            out,
            "{} {} {} {}",
            -self.grid.radius(),
            self.grid.radius(),
            self.time,
            self.rep.token()
        )?;
        for (n, c) in self.iter_modes() {
            writeln!(out, "{} {} {}", n, c.re, c.im)?;
        }
        Ok(())
    }

    pub fn snapshot_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_snapshot(&mut buf)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("snapshot text is ASCII")
    }

    pub fn read_snapshot<R: Read>(input: R) -> Result<Self> {
        let reader = BufReader::new(input);
        let mut lines = reader.lines();

        let header = match lines.next() {
            Some(line) => line?,
            None => {
                return Err(Error::SnapshotFormat {
                    line: 1,
                    message: "empty file".into(),
                })
            }
        };
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(Error::SnapshotFormat {
                line: 1,
                message: format!(
                    "header must be `n_min n_max time rep`, got {} fields",
                    fields.len()
                ),
            });
        }
        let n_min: i64 = fields[0].parse().map_err(|_| Error::SnapshotFormat {
            line: 1,
            message: format!("bad n_min `{}`", fields[0]),
        })?;
        let n_max: i64 = fields[1].parse().map_err(|_| Error::SnapshotFormat {
            line: 1,
            message: format!("bad n_max `{}`", fields[1]),
        })?;
        let time: f64 = fields[2].parse().map_err(|_| Error::SnapshotFormat {
            line: 1,
            message: format!("bad time `{}`", fields[2]),
        })?;
        if n_min != -n_max || n_max < 1 {
            return Err(Error::SnapshotFormat {
                line: 1,
                message: format!("mode range must be symmetric [-N, N] with N >= 1, got [{n_min}, {n_max}]"),
            });
        }
        let rep = Representation::from_token(fields[3]).map_err(|e| Error::SnapshotFormat {
            line: 1,
            message: e.to_string(),
        })?;

        let grid = FrequencyGrid::new(n_max)?;
        let mut coeffs = vec![Complex64::new(0.0, 0.0); grid.len()];
        let mut expected = n_min;
        let mut line_no = 1usize;
        for line in lines {
            let line = line?;
            line_no += 1;
            if line.trim().is_empty() {
                continue;
            }
            if expected > n_max {
                return Err(Error::SnapshotFormat {
                    line: line_no,
                    message: "trailing data after the last mode".into(),
                });
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(Error::SnapshotFormat {
                    line: line_no,
                    message: format!("mode line must be `n re im`, got {} fields", fields.len()),
                });
            }
            let n: i64 = fields[0].parse().map_err(|_| Error::SnapshotFormat {
                line: line_no,
                message: format!("bad mode index `{}`", fields[0]),
            })?;
            if n != expected {
                return Err(Error::SnapshotFormat {
                    line: line_no,
                    message: format!("expected mode {expected} here, got {n}"),
                });
            }
            let re: f64 = fields[1].parse().map_err(|_| Error::SnapshotFormat {
                line: line_no,
                message: format!("bad real part `{}`", fields[1]),
            })?;
            let im: f64 = fields[2].parse().map_err(|_| Error::SnapshotFormat {
                line: line_no,
                message: format!("bad imaginary part `{}`", fields[2]),
            })?;
            coeffs[grid.index_of(n)?] = Complex64::new(re, im);
            expected += 1;
        }
        if expected <= n_max {
            return Err(Error::SnapshotFormat {
                line: line_no,
                message: format!("file ends before mode {expected}"),
            });
        }
        Self::new(grid, rep, time, coeffs)
    }
}
