//! Grid-sampled functions on R^d (d = 1, 2), their Fourier transforms,
//! rearrangements, Lebesgue and Lorentz norms, and the superlevel-set constants
//! that drive the multiplier theorems.
//!
//! Grids use the midpoint rule: along each axis the nodes are
//! `s_k = -L + (k + 1/2) * 2L/n`, so no node sits on `+-L`. The Fourier
//! transform uses the unnormalized kernel `e^{-i(t,s)}`; inverse transforms
//! carry their `(2 pi)^{-d}` factor at the call site.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::{BufRead, Write};

use num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::step;

pub type C64 = Complex64;

/// Number of points of the log-uniform level grid used for superlevel suprema.
pub const DEFAULT_LEVEL_POINTS: usize = 400;

/// Lower end of the level grid, relative to the largest sample.
pub const LEVEL_GRID_FLOOR: f64 = 1e-3;

/// Samples at or below this value are not "strictly positive".
pub const POSITIVITY_FLOOR: f64 = 1e-300;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridParams {
    pub dim: usize,
    pub half_width: f64,
    pub points: usize,
}

impl GridParams {
    pub fn new(dim: usize, half_width: f64, points: usize) -> Result<Self> {
        let g = GridParams { dim, half_width, points };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim != 1 && self.dim != 2 {
            return Err(Error::InvalidGrid(format!("dim must be 1 or 2, got {}", self.dim)));
        }
        if !(self.half_width.is_finite() && self.half_width > 0.0) {
            return Err(Error::InvalidGrid(format!("half width must be positive, got {}", self.half_width)));
        }
        if self.points == 0 {
            return Err(Error::InvalidGrid("points per axis must be positive".into()));
        }
        Ok(())
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.points as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Total number of samples, `n^dim`.
    pub fn len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Node `k` along one axis. Written as an odd multiple of `L/n` so that
    /// mirrored nodes are exact negatives of each other.
    pub fn node(&self, k: usize) -> f64 {
        (2 * k as i64 + 1 - self.points as i64) as f64 * (self.half_width / self.points as f64)
    }

    /// Per-axis indices of a flat sample index (row-major, axis 0 slowest).
    pub fn axis_indices(&self, idx: usize) -> [usize; 2] {
        match self.dim {
            1 => [idx, 0],
            _ => [idx / self.points, idx % self.points],
        }
    }

    /// Coordinates of a flat index. For `dim = 1` the second entry is zero.
    pub fn coords(&self, idx: usize) -> [f64; 2] {
        let [i, j] = self.axis_indices(idx);
        match self.dim {
            1 => [self.node(i), 0.0],
            _ => [self.node(i), self.node(j)],
        }
    }

    pub fn is_boundary(&self, idx: usize) -> bool {
        let last = self.points - 1;
        let [i, j] = self.axis_indices(idx);
        match self.dim {
            1 => i == 0 || i == last,
            _ => i == 0 || i == last || j == 0 || j == last,
        }
    }

    /// The grid on which the fast transform of a function on `self` lives:
    /// same point count, spacing `2 pi / (n * spacing)`.
    pub fn reciprocal(&self) -> GridParams {
        GridParams {
            dim: self.dim,
            half_width: PI * self.points as f64 / (2.0 * self.half_width),
            points: self.points,
        }
    }
}

/// A complex function sampled at the midpoints of a uniform grid.
#[derive(Clone, Debug, PartialEq)]
pub struct SymbolGrid {
    grid: GridParams,
    samples: Vec<C64>,
}

impl SymbolGrid {
    pub fn new(grid: GridParams, samples: Vec<C64>) -> Result<Self> {
        grid.validate()?;
        if samples.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} samples, got {}",
                grid.len(),
                samples.len()
            )));
        }
        if let Some(bad) = samples.iter().position(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::InvalidGrid(format!("non-finite sample at index {bad}")));
        }
        Ok(SymbolGrid { grid, samples })
    }

    pub fn zeros(grid: GridParams) -> Result<Self> {
        Self::new(grid, vec![C64::new(0.0, 0.0); grid.len()])
    }

    /// Evaluates `f` at every node.
    pub fn from_fn(grid: GridParams, f: impl Fn([f64; 2]) -> C64) -> Result<Self> {
        grid.validate()?;
        let samples = (0..grid.len()).map(|i| f(grid.coords(i))).collect();
        Self::new(grid, samples)
    }

    pub fn grid(&self) -> &GridParams {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.grid.dim
    }

    pub fn half_width(&self) -> f64 {
        self.grid.half_width
    }

    pub fn points(&self) -> usize {
        self.grid.points
    }

    pub fn cell_volume(&self) -> f64 {
        self.grid.cell_volume()
    }

    pub fn samples(&self) -> &[C64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<C64> {
        self.samples
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest boundary magnitude relative to the largest magnitude overall
    /// (zero for the zero function).
    pub fn boundary_ratio(&self) -> f64 {
        let top = self.max_abs();
        if top == 0.0 {
            return 0.0;
        }
        let edge = self
            .samples
            .iter()
            .enumerate()
            .filter(|(i, _)| self.grid.is_boundary(*i))
            .map(|(_, z)| z.norm())
            .fold(0.0, f64::max);
        edge / top
    }

    pub fn map(&self, f: impl Fn([f64; 2], C64) -> C64) -> Result<SymbolGrid> {
        let samples = self
            .samples
            .iter()
            .enumerate()
            .map(|(i, &z)| f(self.grid.coords(i), z))
            .collect();
        SymbolGrid::new(self.grid, samples)
    }

    pub fn scale(&self, factor: C64) -> SymbolGrid {
        SymbolGrid {
            grid: self.grid,
            samples: self.samples.iter().map(|&z| z * factor).collect(),
        }
    }

    /// `a * self + b * other` on a shared grid.
    pub fn combine(&self, a: C64, other: &SymbolGrid, b: C64) -> Result<SymbolGrid> {
        if self.grid != other.grid {
            return Err(Error::Mismatch("symbols live on different grids".into()));
        }
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(&x, &y)| a * x + b * y)
            .collect();
        SymbolGrid::new(self.grid, samples)
    }

    /// Midpoint quadrature of `f`.
    pub fn integral(&self) -> C64 {
        self.samples.iter().sum::<C64>() * self.cell_volume()
    }

    /// Midpoint quadrature of `self * conj(other)`.
    pub fn inner(&self, other: &SymbolGrid) -> Result<C64> {
        if self.grid != other.grid {
            return Err(Error::Mismatch("symbols live on different grids".into()));
        }
        let s: C64 = self.samples.iter().zip(&other.samples).map(|(x, y)| x * y.conj()).sum();
        Ok(s * self.cell_volume())
    }

    /// Sample at the node nearest the origin (the smallest-norm node).
    pub fn value_near_origin(&self) -> C64 {
        let best = (0..self.grid.len())
            .min_by(|&a, &b| {
                let [x, y] = self.grid.coords(a);
                let [u, v] = self.grid.coords(b);
                (x * x + y * y).total_cmp(&(u * u + v * v))
            })
            .unwrap_or(0);
        self.samples[best]
    }

    /// Writes `index,re,im` rows preceded by a `#` header carrying the grid.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(
            w,
            "# dim={} half_width={:e} points={}",
            self.grid.dim, self.grid.half_width, self.grid.points
        )?;
        writeln!(w, "index,re,im")?;
        for (i, z) in self.samples.iter().enumerate() {
            writeln!(w, "{i},{:e},{:e}", z.re, z.im)?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<SymbolGrid> {
        let mut grid: Option<GridParams> = None;
        let mut samples = Vec::new();
        for line in r.lines() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with("index") {
                continue;
            }
            if let Some(header) = line.strip_prefix('#') {
                let mut kv = BTreeMap::new();
                for tok in header.split_whitespace() {
                    if let Some((k, v)) = tok.split_once('=') {
                        kv.insert(k.to_string(), v.to_string());
                    }
                }
                let get = |k: &str| {
                    kv.get(k).ok_or_else(|| Error::InvalidGrid(format!("csv header lacks `{k}`")))
                };
                let parse_err = |e: String| Error::InvalidGrid(e);
                grid = Some(GridParams::new(
                    get("dim")?.parse().map_err(|e| parse_err(format!("{e}")))?,
                    get("half_width")?.parse().map_err(|e| parse_err(format!("{e}")))?,
                    get("points")?.parse().map_err(|e| parse_err(format!("{e}")))?,
                )?);
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 3 {
                return Err(Error::InvalidGrid(format!("bad csv row `{line}`")));
            }
            let num = |s: &str| -> Result<f64> {
                s.trim().parse().map_err(|_| Error::InvalidGrid(format!("bad number `{s}`")))
            };
            samples.push(C64::new(num(cols[1])?, num(cols[2])?));
        }
        let grid = grid.ok_or_else(|| Error::InvalidGrid("csv lacks the grid header".into()))?;
        SymbolGrid::new(grid, samples)
    }

    /// Flat little-endian blob: magic, dim (u32), half width (f64), points (u64),
    /// then interleaved `re, im` pairs.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(24 + 16 * self.samples.len());
        out.extend_from_slice(b"SGRD");
        out.extend_from_slice(&(self.grid.dim as u32).to_le_bytes());
        out.extend_from_slice(&self.grid.half_width.to_le_bytes());
        out.extend_from_slice(&(self.grid.points as u64).to_le_bytes());
        for z in &self.samples {
            out.extend_from_slice(&z.re.to_le_bytes());
            out.extend_from_slice(&z.im.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<SymbolGrid> {
        let bad = || Error::InvalidGrid("malformed symbol blob".into());
        if bytes.len() < 24 || &bytes[..4] != b"SGRD" {
            return Err(bad());
        }
        let dim = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        let half_width = f64::from_le_bytes(bytes[8..16].try_into().unwrap());
        let points = u64::from_le_bytes(bytes[16..24].try_into().unwrap()) as usize;
        let grid = GridParams::new(dim, half_width, points)?;
        let body = &bytes[24..];
        if body.len() != 16 * grid.len() {
            return Err(bad());
        }
        let samples = body
            .chunks_exact(16)
            .map(|c| {
                C64::new(
                    f64::from_le_bytes(c[..8].try_into().unwrap()),
                    f64::from_le_bytes(c[8..].try_into().unwrap()),
                )
            })
            .collect();
        SymbolGrid::new(grid, samples)
    }
}

fn default_amplitude() -> [f64; 2] {
    [1.0, 0.0]
}

/// One term `A * exp(-a |s - c|^2) * prod_j (s_j - c_j)^m_j * exp(i (w, s))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianComponent {
    #[serde(default = "default_amplitude")]
    pub amplitude: [f64; 2],
    pub a: f64,
    #[serde(default)]
    pub center: Vec<f64>,
    #[serde(default)]
    pub monomial: Vec<u32>,
    #[serde(default)]
    pub wave: Vec<f64>,
}

impl GaussianComponent {
    pub fn centered(a: f64) -> Self {
        GaussianComponent { amplitude: default_amplitude(), a, center: vec![], monomial: vec![], wave: vec![] }
    }

    fn validate(&self) -> Result<()> {
        let finite = self.amplitude.iter().chain(&self.center).chain(&self.wave).all(|v| v.is_finite());
        if !finite || !(self.a.is_finite() && self.a > 0.0) {
            return Err(Error::InvalidParameter("gaussian parameters must be finite with a > 0".into()));
        }
        Ok(())
    }

    fn evaluate(&self, s: &[f64]) -> C64 {
        let mut r2 = 0.0;
        let mut poly = 1.0;
        let mut phase = 0.0;
        for (j, &sj) in s.iter().enumerate() {
            let dj = sj - self.center.get(j).copied().unwrap_or(0.0);
            r2 += dj * dj;
            if let Some(&m) = self.monomial.get(j) {
                poly *= dj.powi(m as i32);
            }
            phase += self.wave.get(j).copied().unwrap_or(0.0) * sj;
        }
        C64::new(self.amplitude[0], self.amplitude[1]) * (poly * (-self.a * r2).exp()) * C64::from_polar(1.0, phase)
    }
}

/// Built-in symbol families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum SymbolSpec {
    Gaussian(GaussianComponent),
    Mixture { components: Vec<GaussianComponent> },
    /// `exp(-t |s|^2)`
    Heat { t: f64 },
    /// `(1 + |s|^2)^(-sigma/2)`
    Bessel { sigma: f64 },
    /// `i s_j exp(-a |s|^2)`; `axis` is zero-based.
    Coordinate { axis: usize, a: f64 },
    /// Indicator of the closed disc (interval for d = 1).
    DiscIndicator { radius: f64 },
    /// `(1 + |s|^d)^(-1)`, the weight whose Paley constant is finite in every dimension.
    PaleyWeight,
    /// `exp(-rate |s|)`
    Exponential { rate: f64 },
    Constant { value: [f64; 2] },
    /// Samples read from a CSV file written by [`SymbolGrid::write_csv`].
    Tabulated { path: String },
}

impl SymbolSpec {
    /// Builds a spec from a family name and named numeric parameters, the way
    /// the CLI passes them.
    pub fn from_named(family: &str, params: &BTreeMap<String, f64>) -> Result<SymbolSpec> {
        let get = |k: &str, default: Option<f64>| -> Result<f64> {
            params
                .get(k)
                .copied()
                .or(default)
                .ok_or_else(|| Error::InvalidParameter(format!("family `{family}` needs `{k}`")))
        };
        Ok(match family {
            "gaussian" => SymbolSpec::Gaussian(GaussianComponent::centered(get("a", Some(0.5))?)),
            "heat" => SymbolSpec::Heat { t: get("t", None)? },
            "bessel" => SymbolSpec::Bessel { sigma: get("sigma", None)? },
            "coordinate" => SymbolSpec::Coordinate { axis: get("axis", Some(0.0))? as usize, a: get("a", Some(0.5))? },
            "disc" | "disc_indicator" => SymbolSpec::DiscIndicator { radius: get("radius", Some(1.0))? },
            "paley_weight" => SymbolSpec::PaleyWeight,
            "exponential" => SymbolSpec::Exponential { rate: get("rate", Some(1.0))? },
            "constant" => SymbolSpec::Constant { value: [get("re", Some(1.0))?, get("im", Some(0.0))?] },
            other => return Err(Error::UnknownFamily(other.to_string())),
        })
    }

    /// Parses a JSON descriptor, reporting an unrecognised `family` tag as
    /// [`Error::UnknownFamily`].
    pub fn from_json(text: &str) -> Result<SymbolSpec> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let family = value.get("family").and_then(|f| f.as_str()).unwrap_or("").to_string();
        serde_json::from_value(value).map_err(|e| {
            if e.to_string().contains("unknown variant") {
                Error::UnknownFamily(family)
            } else {
                Error::InvalidParameter(e.to_string())
            }
        })
    }

    fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(what.to_string()));
        match self {
            SymbolSpec::Gaussian(c) => c.validate(),
            SymbolSpec::Mixture { components } => components.iter().try_for_each(|c| c.validate()),
            SymbolSpec::Heat { t } if !(t.is_finite() && *t >= 0.0) => bad("heat time must be finite and >= 0"),
            SymbolSpec::Bessel { sigma } if !sigma.is_finite() => bad("bessel order must be finite"),
            SymbolSpec::Coordinate { a, .. } if !(a.is_finite() && *a > 0.0) => bad("window width must be > 0"),
            SymbolSpec::DiscIndicator { radius } if !(radius.is_finite() && *radius >= 0.0) => {
                bad("disc radius must be finite and >= 0")
            }
            SymbolSpec::Exponential { rate } if !(rate.is_finite() && *rate > 0.0) => bad("rate must be > 0"),
            SymbolSpec::Constant { value } if !value.iter().all(|v| v.is_finite()) => bad("constant must be finite"),
            _ => Ok(()),
        }
    }

    /// Closed-form value at a point of R^d (`s.len() = d`). Not defined for
    /// tabulated symbols.
    pub fn evaluate(&self, s: &[f64]) -> C64 {
        let r2: f64 = s.iter().map(|v| v * v).sum();
        let real = |v: f64| C64::new(v, 0.0);
        match self {
            SymbolSpec::Gaussian(c) => c.evaluate(s),
            SymbolSpec::Mixture { components } => components.iter().map(|c| c.evaluate(s)).sum(),
            SymbolSpec::Heat { t } => real((-t * r2).exp()),
            SymbolSpec::Bessel { sigma } => real((1.0 + r2).powf(-sigma / 2.0)),
            SymbolSpec::Coordinate { axis, a } => {
                C64::new(0.0, s.get(*axis).copied().unwrap_or(0.0) * (-a * r2).exp())
            }
            SymbolSpec::DiscIndicator { radius } => real(if r2 <= radius * radius { 1.0 } else { 0.0 }),
            SymbolSpec::PaleyWeight => real(1.0 / (1.0 + r2.sqrt().powi(s.len() as i32))),
            SymbolSpec::Exponential { rate } => real((-rate * r2.sqrt()).exp()),
            SymbolSpec::Constant { value } => C64::new(value[0], value[1]),
            SymbolSpec::Tabulated { .. } => C64::new(f64::NAN, f64::NAN),
        }
    }
}

/// Midpoint samples of a built-in family on `grid`.
pub fn sample_symbol(spec: &SymbolSpec, grid: GridParams) -> Result<SymbolGrid> {
    grid.validate()?;
    spec.validate()?;
    if let SymbolSpec::Tabulated { path } = spec {
        let file = std::fs::File::open(path)?;
        let g = SymbolGrid::read_csv(std::io::BufReader::new(file))?;
        if *g.grid() != grid {
            return Err(Error::Mismatch(format!("tabulated grid {:?} differs from requested {grid:?}", g.grid())));
        }
        return Ok(g);
    }
    SymbolGrid::from_fn(grid, |c| spec.evaluate(&c[..grid.dim]))
}

/// Phase factor `e^{i sign pi k (1/n - 1)}` of the midpoint transform.
fn edge_phase(k: usize, n: usize, sign: f64) -> C64 {
    // reduce k (1 - 1/n) modulo 2 before scaling by pi
    let kf = k as f64;
    let turns = (kf - kf / n as f64).rem_euclid(2.0);
    C64::from_polar(1.0, -sign * PI * turns)
}

/// `out_j = spacing * sum_k f_k e^{i sign t_j s_k}` along one axis, in place.
fn transform_axis(buf: &mut [C64], n: usize, spacing: f64, sign: f64, planner: &mut FftPlanner<f64>) {
    let dir = if sign < 0.0 { FftDirection::Forward } else { FftDirection::Inverse };
    let fft = planner.plan_fft(n, dir);
    let nf = n as f64;
    // global phase pi (n/2 - 1 + 1/(2n)), reduced modulo 2
    let global_turns = (nf / 2.0 - 1.0 + 1.0 / (2.0 * nf)).rem_euclid(2.0);
    let global = C64::from_polar(spacing, sign * PI * global_turns);
    for (k, z) in buf.iter_mut().enumerate() {
        *z *= edge_phase(k, n, sign);
    }
    fft.process(buf);
    for (j, z) in buf.iter_mut().enumerate() {
        *z *= edge_phase(j, n, sign) * global;
    }
}

/// Discrete approximation of `int f(s) e^{sign i (t,s)} ds` on the reciprocal
/// grid. `sign = -1` is the forward transform; `sign = +1` uses the inverse
/// kernel without any `2 pi` division.
pub fn classical_fourier(f: &SymbolGrid, sign: i32) -> Result<SymbolGrid> {
    if sign != 1 && sign != -1 {
        return Err(Error::InvalidParameter(format!("sign must be +1 or -1, got {sign}")));
    }
    let grid = *f.grid();
    let n = grid.points;
    let h = grid.spacing();
    let sgn = sign as f64;
    let mut planner = FftPlanner::new();
    let mut data = f.samples().to_vec();
    match grid.dim {
        1 => transform_axis(&mut data, n, h, sgn, &mut planner),
        _ => {
            for row in data.chunks_exact_mut(n) {
                transform_axis(row, n, h, sgn, &mut planner);
            }
            let mut col = vec![C64::new(0.0, 0.0); n];
            for j in 0..n {
                for i in 0..n {
                    col[i] = data[i * n + j];
                }
                transform_axis(&mut col, n, h, sgn, &mut planner);
                for i in 0..n {
                    data[i * n + j] = col[i];
                }
            }
        }
    }
    SymbolGrid::new(grid.reciprocal(), data)
}

/// Trigonometric interpolation of one axis from `n` midpoint samples to `n r`.
fn refine_axis(input: &[C64], r: usize, planner: &mut FftPlanner<f64>) -> Vec<C64> {
    let n = input.len();
    let fine = n * r;
    let mut spec = input.to_vec();
    planner.plan_fft_forward(n).process(&mut spec);
    let mut out = vec![C64::new(0.0, 0.0); fine];
    let shift = PI * (1.0 / fine as f64 - 1.0 / n as f64);
    for (k, z) in spec.iter().enumerate() {
        // signed frequency in [-n/2, n/2)
        let j = if 2 * k >= n { k as i64 - n as i64 } else { k as i64 };
        let slot = j.rem_euclid(fine as i64) as usize;
        out[slot] = z / n as f64 * C64::from_polar(1.0, shift * j as f64);
    }
    planner.plan_fft_inverse(fine).process(&mut out);
    out
}

/// Resamples `f` on the same extent with `r` times as many points per axis,
/// by trigonometric interpolation. Accurate when `f` is negligible at the
/// boundary and resolved by the original spacing.
pub fn refine(f: &SymbolGrid, r: usize) -> Result<SymbolGrid> {
    if r == 0 {
        return Err(Error::InvalidParameter("refinement factor must be positive".into()));
    }
    let g = *f.grid();
    let fine = GridParams::new(g.dim, g.half_width, g.points * r)?;
    if r == 1 {
        return Ok(f.clone());
    }
    let n = g.points;
    let m = fine.points;
    let mut planner = FftPlanner::new();
    let data = match g.dim {
        1 => refine_axis(f.samples(), r, &mut planner),
        _ => {
            let mut rows = Vec::with_capacity(n * m);
            for row in f.samples().chunks_exact(n) {
                rows.extend(refine_axis(row, r, &mut planner));
            }
            let mut out = vec![C64::new(0.0, 0.0); m * m];
            let mut col = vec![C64::new(0.0, 0.0); n];
            for j in 0..m {
                for i in 0..n {
                    col[i] = rows[i * m + j];
                }
                for (i, z) in refine_axis(&col, r, &mut planner).into_iter().enumerate() {
                    out[i * m + j] = z;
                }
            }
            out
        }
    };
    SymbolGrid::new(fine, data)
}

/// `(sum |f_k|^p cell)^{1/p}`; `p = inf` gives the largest sample.
pub fn lebesgue_norm(f: &SymbolGrid, p: f64) -> Result<f64> {
    step::check_exponent("p", p, 1.0, true)?;
    let mags: Vec<f64> = f.samples().iter().map(|z| z.norm()).collect();
    Ok(step::lp_norm(&mags, f.cell_volume(), p))
}

/// Weighted `L^p` norm `(sum |f_k|^p w_k cell)^{1/p}` with a sampled weight.
pub fn weighted_lebesgue_norm(f: &SymbolGrid, weight: &[f64], p: f64) -> Result<f64> {
    step::check_exponent("p", p, 1.0, true)?;
    if weight.len() != f.samples().len() {
        return Err(Error::Mismatch("weight length differs from sample count".into()));
    }
    if p.is_infinite() {
        return Err(Error::InvalidParameter("weighted norm needs finite p".into()));
    }
    let s: f64 = f.samples().iter().zip(weight).map(|(z, w)| z.norm().powf(p) * w).sum();
    Ok((s * f.cell_volume()).powf(1.0 / p))
}

/// Decreasing rearrangement as a step function with one cell per sample.
#[derive(Clone, Debug, PartialEq)]
pub struct RearrangementProfile {
    pub levels: Vec<f64>,
    pub weights: Vec<f64>,
}

impl RearrangementProfile {
    fn cell(&self) -> f64 {
        self.weights.first().copied().unwrap_or(0.0)
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `mu(t, f)`, right-continuous.
    pub fn mu(&self, t: f64) -> f64 {
        let k = (t / self.cell()).floor();
        if k < 0.0 {
            return self.levels.first().copied().unwrap_or(0.0);
        }
        self.levels.get(k as usize).copied().unwrap_or(0.0)
    }

    pub fn lp_norm(&self, p: f64) -> f64 {
        step::lp_norm(&self.levels, self.cell(), p)
    }

    pub fn lorentz_norm(&self, p: f64, q: f64) -> f64 {
        step::lorentz_norm(&self.levels, self.cell(), p, q)
    }
}

pub fn rearrangement(f: &SymbolGrid) -> RearrangementProfile {
    let mut levels: Vec<f64> = f.samples().iter().map(|z| z.norm()).collect();
    levels.sort_by(|a, b| b.total_cmp(a));
    let weights = vec![f.cell_volume(); levels.len()];
    RearrangementProfile { levels, weights }
}

/// `||f||_{L^{p,q}}` from the rearrangement.
pub fn lorentz_norm(f: &SymbolGrid, p: f64, q: f64) -> Result<f64> {
    step::check_exponent("p", p, 0.0, false)?;
    step::check_exponent("q", q, 0.0, false)?;
    Ok(rearrangement(f).lorentz_norm(p, q))
}

/// `cell * #{k : |g_k| >= t}`.
pub fn superlevel_measure(g: &SymbolGrid, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::InvalidParameter(format!("level must be positive, got {t}")));
    }
    let count = g.samples().iter().filter(|z| z.norm() >= t).count();
    Ok(count as f64 * g.cell_volume())
}

/// Log-uniform levels from `max(min positive |g|, 1e-3 max|g|)` up to `max|g|`.
pub fn level_grid(g: &SymbolGrid, points: usize) -> Vec<f64> {
    let mags: Vec<f64> = g.samples().iter().map(|z| z.norm()).filter(|&m| m > 0.0).collect();
    let hi = mags.iter().copied().fold(0.0, f64::max);
    if hi == 0.0 {
        return vec![];
    }
    let lo = mags.iter().copied().fold(f64::INFINITY, f64::min).max(LEVEL_GRID_FLOOR * hi);
    if points < 2 || lo >= hi {
        return vec![hi];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..points)
        .map(|i| {
            if i + 1 == points {
                hi
            } else {
                (a + (b - a) * i as f64 / (points - 1) as f64).exp()
            }
        })
        .collect()
}

/// Sorted magnitudes for repeated superlevel counts.
fn sorted_magnitudes(g: &SymbolGrid) -> Vec<f64> {
    let mut m: Vec<f64> = g.samples().iter().map(|z| z.norm()).collect();
    m.sort_by(|a, b| b.total_cmp(a));
    m
}

fn measure_sorted(desc: &[f64], cell: f64, t: f64) -> f64 {
    desc.partition_point(|&m| m >= t) as f64 * cell
}

/// `M_h = sup_t t |{h >= t}|` over the supplied levels.
pub fn paley_weight_constant(h: &SymbolGrid, levels: &[f64]) -> Result<f64> {
    if let Some(bad) = h.samples().iter().find(|z| !(z.re > POSITIVITY_FLOOR) || z.im != 0.0) {
        return Err(Error::InvalidParameter(format!("weight must be strictly positive, found {bad}")));
    }
    let desc = sorted_magnitudes(h);
    let cell = h.cell_volume();
    Ok(levels
        .iter()
        .filter(|&&t| t > 0.0)
        .map(|&t| t * measure_sorted(&desc, cell, t))
        .fold(0.0, f64::max))
}

/// `sup_t t |{|g| >= t}|^{1/p - 1/q}` over the supplied levels.
pub fn hormander_constant(g: &SymbolGrid, p: f64, q: f64, levels: &[f64]) -> Result<f64> {
    if !(p > 1.0 && p <= 2.0 && q >= 2.0 && q.is_finite()) {
        return Err(Error::InvalidParameter(format!("need 1 < p <= 2 <= q < inf, got p={p}, q={q}")));
    }
    let gamma = 1.0 / p - 1.0 / q;
    let desc = sorted_magnitudes(g);
    let cell = g.cell_volume();
    Ok(levels
        .iter()
        .filter(|&&t| t > 0.0)
        .map(|&t| {
            let m = measure_sorted(&desc, cell, t);
            if m == 0.0 {
                0.0
            } else {
                t * m.powf(gamma)
            }
        })
        .fold(0.0, f64::max))
}
