//! Weyl quantization on the Moyal plane in the truncated Fock basis.
//!
//! `U(t) = exp(i(t_1 q + t_2 p))` with `[q, p] = i h` is the displacement
//! operator `D(alpha)`, `alpha = sqrt(h/2) (-t_2 + i t_1)`. Its number-basis
//! entries factor as `e^{i(m-n) phi} R_mn(|alpha|^2)` with a real radial part,
//! so quantization and the Fourier transform only need one radial table per
//! distinct `|t|^2` on the grid.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use parking_lot::RwLock;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::symbols::{refine, GridParams, SymbolGrid, C64};

pub const H_MIN: f64 = 0.1;
pub const H_MAX: f64 = 10.0;

/// Relative boundary magnitude above which a symbol is rejected by `quantize`.
pub const QUANTIZE_DECAY_LIMIT: f64 = 1e-10;

/// Allowed relative mismatch of the trace weight self-check.
pub const TRACE_WEIGHT_TOLERANCE: f64 = 1e-3;

const LAGUERRE_RESCALE: f64 = 1e100;

/// The canonical antisymmetric matrix `h [[0, -1], [1, 0]]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeformationMatrix {
    h: f64,
}

impl DeformationMatrix {
    pub fn canonical(h: f64) -> Result<Self> {
        if !(h.is_finite() && (H_MIN..=H_MAX).contains(&h)) {
            return Err(Error::InvalidParameter(format!("h = {h} outside [{H_MIN}, {H_MAX}]")));
        }
        Ok(DeformationMatrix { h })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn dim(&self) -> usize {
        2
    }

    pub fn entries(&self) -> [[f64; 2]; 2] {
        [[0.0, -self.h], [self.h, 0.0]]
    }

    /// `theta s`
    pub fn apply(&self, s: [f64; 2]) -> [f64; 2] {
        [-self.h * s[1], self.h * s[0]]
    }

    /// `(t, theta s) = h (t_2 s_1 - t_1 s_2)`
    pub fn form(&self, t: [f64; 2], s: [f64; 2]) -> f64 {
        let ts = self.apply(s);
        t[0] * ts[0] + t[1] * ts[1]
    }

    /// `c = h / (2 pi)`, so that `c Tr(lambda(f)) = f(0)`.
    pub fn trace_weight(&self) -> f64 {
        self.h / (2.0 * PI)
    }
}

/// Where an operator came from; carried into the JSON sidecar.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symbol: Option<serde_json::Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// A truncated `N x N` matrix for an element of the Moyal plane.
#[derive(Clone, Debug, PartialEq)]
pub struct QuantizedOperator {
    matrix: DMatrix<C64>,
    theta: DeformationMatrix,
    provenance: Provenance,
}

impl QuantizedOperator {
    pub fn new(matrix: DMatrix<C64>, theta: DeformationMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() == 0 {
            return Err(Error::Mismatch(format!("matrix must be square, got {}x{}", matrix.nrows(), matrix.ncols())));
        }
        if matrix.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::Numerical("non-finite operator entry".into()));
        }
        Ok(QuantizedOperator { matrix, theta, provenance: Provenance::default() })
    }

    pub fn zeros(theta: DeformationMatrix, fock_dim: usize) -> Result<Self> {
        Self::new(DMatrix::zeros(fock_dim, fock_dim), theta)
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = provenance;
        self
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn fock_dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn theta(&self) -> &DeformationMatrix {
        &self.theta
    }

    pub fn trace_weight(&self) -> f64 {
        self.theta.trace_weight()
    }

    fn check_compatible(&self, other: &QuantizedOperator) -> Result<()> {
        if self.fock_dim() != other.fock_dim() || self.theta != other.theta {
            return Err(Error::Mismatch(format!(
                "operators differ: N={} h={} vs N={} h={}",
                self.fock_dim(),
                self.theta.h,
                other.fock_dim(),
                other.theta.h
            )));
        }
        Ok(())
    }

    fn derived(&self, matrix: DMatrix<C64>) -> QuantizedOperator {
        QuantizedOperator { matrix, theta: self.theta, provenance: self.provenance.clone() }
    }

    pub fn scale(&self, a: C64) -> QuantizedOperator {
        self.derived(&self.matrix * a)
    }

    /// `a * self + b * other`
    pub fn combine(&self, a: C64, other: &QuantizedOperator, b: C64) -> Result<QuantizedOperator> {
        self.check_compatible(other)?;
        Ok(self.derived(&self.matrix * a + &other.matrix * b))
    }

    pub fn product(&self, other: &QuantizedOperator) -> Result<QuantizedOperator> {
        self.check_compatible(other)?;
        Ok(self.derived(&self.matrix * &other.matrix))
    }

    pub fn adjoint(&self) -> QuantizedOperator {
        self.derived(self.matrix.adjoint())
    }

    /// Largest entrywise distance on the leading `k x k` block.
    pub fn block_distance(&self, other: &QuantizedOperator, k: usize) -> Result<f64> {
        self.check_compatible(other)?;
        let k = k.min(self.fock_dim());
        let d = self.matrix.view((0, 0), (k, k)) - other.matrix.view((0, 0), (k, k));
        Ok(d.iter().map(|z| z.norm()).fold(0.0, f64::max))
    }

    /// Little-endian blob: magic, `N` (u64), `h`, `c`, then row-major `re, im`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let n = self.fock_dim();
        let mut out = Vec::with_capacity(28 + 16 * n * n);
        out.extend_from_slice(b"QOPR");
        out.extend_from_slice(&(n as u64).to_le_bytes());
        out.extend_from_slice(&self.theta.h.to_le_bytes());
        out.extend_from_slice(&self.trace_weight().to_le_bytes());
        for i in 0..n {
            for j in 0..n {
                let z = self.matrix[(i, j)];
                out.extend_from_slice(&z.re.to_le_bytes());
                out.extend_from_slice(&z.im.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<QuantizedOperator> {
        let bad = || Error::Mismatch("malformed operator blob".into());
        if bytes.len() < 28 || &bytes[..4] != b"QOPR" {
            return Err(bad());
        }
        let f = |a: usize| f64::from_le_bytes(bytes[a..a + 8].try_into().unwrap());
        let n = u64::from_le_bytes(bytes[4..12].try_into().unwrap()) as usize;
        let theta = DeformationMatrix::canonical(f(12))?;
        if (f(20) - theta.trace_weight()).abs() > 1e-15 * theta.trace_weight() {
            return Err(Error::TraceWeight { got: f(20), want: theta.trace_weight() });
        }
        if bytes.len() != 28 + 16 * n * n {
            return Err(bad());
        }
        let m = DMatrix::from_fn(n, n, |i, j| {
            let a = 28 + 16 * (i * n + j);
            C64::new(f(a), f(a + 8))
        });
        QuantizedOperator::new(m, theta)
    }

    pub fn sidecar_json(&self) -> Result<String> {
        let doc = serde_json::json!({
            "fock_dim": self.fock_dim(),
            "h": self.theta.h,
            "trace_weight": self.trace_weight(),
            "provenance": self.provenance,
        });
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    /// Writes `<stem>.bin` and `<stem>.json`.
    pub fn save(&self, stem: &std::path::Path) -> Result<()> {
        std::fs::write(stem.with_extension("bin"), self.to_bytes())?;
        std::fs::write(stem.with_extension("json"), self.sidecar_json()?)?;
        Ok(())
    }

    pub fn load(stem: &std::path::Path) -> Result<QuantizedOperator> {
        let op = QuantizedOperator::from_bytes(&std::fs::read(stem.with_extension("bin"))?)?;
        let side: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(stem.with_extension("json"))?)?;
        let provenance = match side.get("provenance") {
            Some(p) => serde_json::from_value(p.clone())?,
            None => Provenance::default(),
        };
        Ok(op.with_provenance(provenance))
    }
}

/// `c Tr(x)`
pub fn trace_tau(x: &QuantizedOperator) -> C64 {
    x.matrix.trace() * x.trace_weight()
}

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    for k in 1..=n {
        out[k] = out[k - 1] + (k as f64).ln();
    }
    out
}

#[inline]
fn packed(m: usize, n: usize) -> usize {
    m * (m + 1) / 2 + n
}

/// Lower triangle (`m >= n`, packed) of the real radial factor
/// `R_mn = sqrt(n!/m!) x^{(m-n)/2} e^{-x/2} L_n^{(m-n)}(x)` with `x = |alpha|^2`.
fn radial_table(x: f64, dim: usize, lnf: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; dim * (dim + 1) / 2];
    if x == 0.0 {
        for m in 0..dim {
            out[packed(m, m)] = 1.0;
        }
        return out;
    }
    let lnx = x.ln();
    for k in 0..dim {
        let kf = k as f64;
        let base = 0.5 * kf * lnx - 0.5 * x;
        let mut scale = 0.0;
        let mut prev = 0.0;
        let mut cur = 1.0;
        for j in 0..dim - k {
            if j == 1 {
                prev = cur;
                cur = 1.0 + kf - x;
            } else if j > 1 {
                let jf = (j - 1) as f64;
                let next = ((2.0 * jf + 1.0 + kf - x) * cur - (jf + kf) * prev) / (jf + 1.0);
                prev = cur;
                cur = next;
            }
            if cur.abs() > LAGUERRE_RESCALE {
                cur /= LAGUERRE_RESCALE;
                prev /= LAGUERRE_RESCALE;
                scale += LAGUERRE_RESCALE.ln();
            }
            let m = j + k;
            if cur != 0.0 {
                let lp = 0.5 * (lnf[j] - lnf[m]) + base + scale + cur.abs().ln();
                out[packed(m, j)] = cur.signum() * lp.exp();
            }
        }
    }
    out
}

/// `(|alpha|^2, phi)` for `alpha = sqrt(h/2)(-t_2 + i t_1) = |alpha| e^{i phi}`.
fn alpha_polar(h: f64, t: [f64; 2]) -> (f64, f64) {
    (0.5 * h * (t[0] * t[0] + t[1] * t[1]), t[0].atan2(-t[1]))
}

/// Dense truncated `U(t)`.
pub fn displacement_matrix(theta: &DeformationMatrix, t: [f64; 2], fock_dim: usize) -> Result<DMatrix<C64>> {
    if fock_dim < 2 {
        return Err(Error::InvalidParameter(format!("Fock dimension must be >= 2, got {fock_dim}")));
    }
    if !(t[0].is_finite() && t[1].is_finite()) {
        return Err(Error::InvalidParameter("non-finite displacement".into()));
    }
    let (x, phi) = alpha_polar(theta.h, t);
    let table = radial_table(x, fock_dim, &ln_factorials(2 * fock_dim));
    Ok(DMatrix::from_fn(fock_dim, fock_dim, |m, n| {
        let r = if m >= n {
            table[packed(m, n)]
        } else {
            let v = table[packed(n, m)];
            if (n - m) % 2 == 1 {
                -v
            } else {
                v
            }
        };
        C64::from_polar(r, (m as f64 - n as f64) * phi)
    }))
}

/// Spectral norm of `U(t)U(s) - e^{i(t, theta s)/2} U(t+s)` on the leading
/// `N/2` Fock block.
pub fn weyl_defect(theta: &DeformationMatrix, t: [f64; 2], s: [f64; 2], fock_dim: usize) -> Result<f64> {
    let ut = displacement_matrix(theta, t, fock_dim)?;
    let us = displacement_matrix(theta, s, fock_dim)?;
    let uts = displacement_matrix(theta, [t[0] + s[0], t[1] + s[1]], fock_dim)?;
    let phase = C64::from_polar(1.0, 0.5 * theta.form(t, s));
    let d = &ut * &us - uts * phase;
    let k = fock_dim / 2;
    Ok(d.view((0, 0), (k, k)).into_owned().singular_values().max())
}

/// Radial entries below this magnitude are dropped from the banded tables.
const RADIAL_CUTOFF: f64 = 1e-17;

/// Banded lower triangle of one radial table: row `m` keeps columns
/// `lo..hi` (all `<= m`) starting at `offset` in `data`.
struct RadialTable {
    rows: Vec<(u32, u32, u32)>,
    data: Vec<f64>,
}

impl RadialTable {
    fn banded(x: f64, dim: usize, lnf: &[f64]) -> RadialTable {
        let full = radial_table(x, dim, lnf);
        let mut rows = Vec::with_capacity(dim);
        let mut data = Vec::new();
        for m in 0..dim {
            let row = &full[packed(m, 0)..=packed(m, m)];
            let lo = row.iter().position(|v| v.abs() > RADIAL_CUTOFF);
            match lo {
                Some(lo) => {
                    let hi = row.iter().rposition(|v| v.abs() > RADIAL_CUTOFF).unwrap() + 1;
                    rows.push((lo as u32, hi as u32, data.len() as u32));
                    data.extend_from_slice(&row[lo..hi]);
                }
                None => rows.push((0, 0, data.len() as u32)),
            }
        }
        data.shrink_to_fit();
        RadialTable { rows, data }
    }

    /// Stored columns `lo..` of row `m` and their values.
    #[inline]
    fn row(&self, m: usize) -> (usize, &[f64]) {
        let (lo, hi, off) = self.rows[m];
        (lo as usize, &self.data[off as usize..off as usize + (hi - lo) as usize])
    }
}

/// Grid points sharing one value of `|t|^2`.
struct RadialClass {
    table: RadialTable,
    points: Vec<(usize, f64)>,
}

struct Plan {
    classes: Vec<RadialClass>,
}

impl Plan {
    fn build(theta: &DeformationMatrix, grid: &GridParams, fock_dim: usize) -> Plan {
        // nodes are odd multiples of L/n, so |t|^2 = (L/n)^2 (a^2 + b^2) with an exact integer key
        let n = grid.points as i64;
        let mut groups: HashMap<i64, Vec<(usize, f64)>> = HashMap::new();
        for idx in 0..grid.len() {
            let [i, j] = grid.axis_indices(idx);
            let a = 2 * i as i64 + 1 - n;
            let b = 2 * j as i64 + 1 - n;
            let (_, phi) = alpha_polar(theta.h, grid.coords(idx));
            groups.entry(a * a + b * b).or_default().push((idx, phi));
        }
        let mut groups: Vec<(i64, Vec<(usize, f64)>)> = groups.into_iter().collect();
        groups.sort_unstable_by_key(|g| g.0);
        let unit = grid.half_width / grid.points as f64;
        let lnf = ln_factorials(2 * fock_dim);
        let classes = groups
            .into_par_iter()
            .map(|(key, points)| {
                let x = 0.5 * theta.h * unit * unit * key as f64;
                RadialClass { table: RadialTable::banded(x, fock_dim, &lnf), points }
            })
            .collect();
        Plan { classes }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
struct PlanKey {
    half_width: u64,
    points: usize,
}

/// Quantization context for one `(theta, N)`; caches radial tables per grid.
///
/// The cache is read-mostly: lookups take a shared lock, and a missing plan is
/// built outside the lock and inserted once.
pub struct Quantizer {
    theta: DeformationMatrix,
    fock_dim: usize,
    plans: RwLock<HashMap<PlanKey, Arc<Plan>>>,
}

impl std::fmt::Debug for Quantizer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Quantizer").field("theta", &self.theta).field("fock_dim", &self.fock_dim).finish()
    }
}

impl Quantizer {
    /// Builds the context and checks the trace weight against a quantized
    /// Gaussian whose Weyl operator is a multiple of the vacuum projection.
    pub fn new(theta: DeformationMatrix, fock_dim: usize) -> Result<Self> {
        if fock_dim < 2 {
            return Err(Error::InvalidParameter(format!("Fock dimension must be >= 2, got {fock_dim}")));
        }
        let q = Quantizer { theta, fock_dim, plans: RwLock::new(HashMap::new()) };
        let h = theta.h;
        let grid = GridParams::new(2, 10.0 / h.sqrt(), 32)?;
        let f = SymbolGrid::from_fn(grid, |t| C64::new((-0.25 * h * (t[0] * t[0] + t[1] * t[1])).exp(), 0.0))?;
        let got = trace_tau(&q.quantize(&f)?).re;
        if (got - 1.0).abs() > TRACE_WEIGHT_TOLERANCE {
            return Err(Error::TraceWeight { got, want: 1.0 });
        }
        q.plans.write().clear();
        Ok(q)
    }

    pub fn theta(&self) -> &DeformationMatrix {
        &self.theta
    }

    pub fn fock_dim(&self) -> usize {
        self.fock_dim
    }

    pub fn trace_weight(&self) -> f64 {
        self.theta.trace_weight()
    }

    pub fn clear_cache(&self) {
        self.plans.write().clear();
    }

    /// Integer factor by which a grid must be refined before quantization so
    /// that the periodic images of the quadrature sum, at phase-space distance
    /// `2 pi / (spacing sqrt(2h))`, stay clear of the Fock window `sqrt(N)`
    /// together with the operator itself.
    pub fn refinement_factor(&self, grid: &GridParams) -> usize {
        let ratio = grid.spacing() * (2.0 * self.fock_dim as f64 * self.theta.h).sqrt() / PI;
        (ratio - 1e-9).ceil().max(1.0) as usize
    }

    fn plan(&self, grid: &GridParams) -> Result<Arc<Plan>> {
        if grid.dim != 2 {
            return Err(Error::InvalidGrid(format!("quantization needs a 2-d grid, got dim {}", grid.dim)));
        }
        grid.validate()?;
        let key = PlanKey { half_width: grid.half_width.to_bits(), points: grid.points };
        if let Some(p) = self.plans.read().get(&key) {
            return Ok(p.clone());
        }
        let built = Arc::new(Plan::build(&self.theta, grid, self.fock_dim));
        Ok(self.plans.write().entry(key).or_insert(built).clone())
    }

    /// `lambda(f) ~ sum_k f(t_k) U(t_k) cell`. Grids too coarse for the Fock
    /// window are first refined by trigonometric interpolation.
    pub fn quantize(&self, f: &SymbolGrid) -> Result<QuantizedOperator> {
        self.quantize_gated(f, QUANTIZE_DECAY_LIMIT)
    }

    /// `quantize` with a caller-chosen boundary-decay limit.
    pub fn quantize_gated(&self, f: &SymbolGrid, limit: f64) -> Result<QuantizedOperator> {
        let ratio = f.boundary_ratio();
        if ratio > limit {
            return Err(Error::BoundaryDecay { mass: ratio, limit });
        }
        if f.dim() != 2 {
            return Err(Error::InvalidGrid(format!("quantization needs a 2-d grid, got dim {}", f.dim())));
        }
        let r = self.refinement_factor(f.grid());
        let op = if r > 1 { self.quantize_on_grid(&refine(f, r)?)? } else { self.quantize_on_grid(f)? };
        Ok(op.with_provenance(Provenance { grid: Some(*f.grid()), ..Provenance::default() }))
    }

    /// The plain midpoint sum over the nodes of `f`, with no decay gate and
    /// no refinement.
    pub fn quantize_on_grid(&self, f: &SymbolGrid) -> Result<QuantizedOperator> {
        let plan = self.plan(f.grid())?;
        let n = self.fock_dim;
        let w = f.cell_volume();
        let samples = f.samples();
        let zero = C64::new(0.0, 0.0);
        let mut acc = vec![zero; n * n];
        let mut coef = vec![zero; 2 * n - 1];
        let (mut vals, mut steps) = (Vec::new(), Vec::new());
        let mut acc_t = vec![zero; n * n];
        let (mut pos, mut neg) = (vec![zero; n], vec![zero; n]);
        for class in &plan.classes {
            if class.points.iter().all(|&(i, _)| samples[i] == zero) {
                continue;
            }
            // coef[k + n - 1] = w * sum_p f_p e^{i k phi_p}; points advance together
            vals.clear();
            steps.clear();
            for &(i, phi) in &class.points {
                vals.push(samples[i] * w);
                steps.push(C64::from_polar(1.0, phi));
            }
            coef[n - 1] = vals.iter().sum();
            let mut rot = steps.clone();
            for k in 1..n {
                let (mut up, mut down) = (zero, zero);
                for (v, u) in vals.iter().zip(&rot) {
                    up += v * u;
                    down += v * u.conj();
                }
                coef[n - 1 + k] = up;
                coef[n - 1 - k] = down;
                for (u, s) in rot.iter_mut().zip(&steps) {
                    *u *= s;
                }
            }
            // pos[k] multiplies R_{m,m-k}; neg[k] = (-1)^k coef[-k] multiplies R_{m,m-k} at (m-k, m)
            for k in 0..n {
                pos[k] = coef[n - 1 + k];
                neg[k] = if k % 2 == 1 { -coef[n - 1 - k] } else { coef[n - 1 - k] };
            }
            for m in 0..n {
                let (lo, vals) = class.table.row(m);
                let lower = &mut acc[m * n + lo..m * n + lo + vals.len()];
                let upper = &mut acc_t[m * n + lo..m * n + lo + vals.len()];
                for (off, ((&r, a), b)) in vals.iter().zip(lower).zip(upper).enumerate() {
                    let k = m - lo - off;
                    *a += pos[k] * r;
                    *b += neg[k] * r;
                }
            }
        }
        // acc_t[m n + j] holds entry (j, m) for j < m
        for m in 0..n {
            for j in 0..m {
                acc[j * n + m] = acc_t[m * n + j];
            }
        }
        QuantizedOperator::new(DMatrix::from_row_slice(n, n, &acc), self.theta)
    }

    /// `x^(s_k) = c Tr(x U(s_k)^*)` at every node of `grid`.
    pub fn dequantize(&self, x: &QuantizedOperator, grid: &GridParams) -> Result<SymbolGrid> {
        if x.fock_dim() != self.fock_dim || *x.theta() != self.theta {
            return Err(Error::Mismatch("operator does not match the quantizer".into()));
        }
        let plan = self.plan(grid)?;
        let n = self.fock_dim;
        let c = self.trace_weight();
        let zero = C64::new(0.0, 0.0);
        let cols = x.matrix().as_slice();
        let mut rows = vec![zero; n * n];
        for i in 0..n {
            for j in 0..n {
                rows[i * n + j] = cols[i + j * n];
            }
        }
        let mut out = vec![zero; grid.len()];
        let mut diag = vec![zero; 2 * n - 1];
        let (mut pos, mut neg) = (vec![zero; n], vec![zero; n]);
        for class in &plan.classes {
            // diag[k + n - 1] = sum_{m - j = k} x_mj R_mj
            pos.iter_mut().for_each(|d| *d = zero);
            neg.iter_mut().for_each(|d| *d = zero);
            for m in 0..n {
                let (lo, vals) = class.table.row(m);
                let lower = &rows[m * n + lo..m * n + lo + vals.len()];
                let upper = &cols[m * n + lo..m * n + lo + vals.len()];
                for (off, ((&r, a), b)) in vals.iter().zip(lower).zip(upper).enumerate() {
                    let k = m - lo - off;
                    pos[k] += a * r;
                    neg[k] += b * r;
                }
            }
            for k in 0..n {
                diag[n - 1 + k] = pos[k];
                if k > 0 {
                    diag[n - 1 - k] = if k % 2 == 1 { -neg[k] } else { neg[k] };
                }
            }
            for &(idx, phi) in &class.points {
                let step = C64::from_polar(1.0, -phi);
                let mut up = C64::new(1.0, 0.0);
                let mut sum = diag[n - 1];
                for k in 1..n {
                    up *= step;
                    sum += diag[n - 1 + k] * up + diag[n - 1 - k] * up.conj();
                }
                out[idx] = sum * c;
            }
        }
        SymbolGrid::new(*grid, out)
    }
}

/// Independent check of the trace normalization: `Tr lambda(f)` from the
/// position-space kernel `K(u, u) = h^{-1} int f(t_1, 0) e^{i t_1 u} dt_1`,
/// integrated over `u` by the midpoint rule on `[-u_max, u_max]`.
pub fn kernel_trace(
    f: impl Fn([f64; 2]) -> C64,
    h: f64,
    t_max: f64,
    t_points: usize,
    u_max: f64,
    u_points: usize,
) -> C64 {
    let dt = 2.0 * t_max / t_points as f64;
    let du = 2.0 * u_max / u_points as f64;
    let line: Vec<(f64, C64)> = (0..t_points)
        .map(|k| {
            let t1 = -t_max + (k as f64 + 0.5) * dt;
            (t1, f([t1, 0.0]))
        })
        .collect();
    let mut total = C64::new(0.0, 0.0);
    for j in 0..u_points {
        let u = -u_max + (j as f64 + 0.5) * du;
        let k: C64 = line.iter().map(|&(t1, v)| v * C64::from_polar(1.0, t1 * u)).sum();
        total += k * dt / h;
    }
    total * du
}

#[cfg(test)]
mod tests {
    use super::*;

    fn theta(h: f64) -> DeformationMatrix {
        DeformationMatrix::canonical(h).unwrap()
    }

    /// Ladder recurrence oracle: `D_{m,0} = e^{-|a|^2/2} a^m / sqrt(m!)`,
    /// `D_{m,n+1} = (sqrt(m) D_{m-1,n} - conj(a) D_{m,n}) / sqrt(n+1)`.
    fn ladder(h: f64, t: [f64; 2], n: usize) -> DMatrix<C64> {
        let a = C64::new(-t[1], t[0]) * (h / 2.0).sqrt();
        let mut d = DMatrix::zeros(n, n);
        let mut v = C64::new((-a.norm_sqr() / 2.0).exp(), 0.0);
        for m in 0..n {
            if m > 0 {
                v *= a / (m as f64).sqrt();
            }
            d[(m, 0)] = v;
        }
        for col in 0..n - 1 {
            for m in 0..n {
                let prev = if m > 0 { d[(m - 1, col)] * (m as f64).sqrt() } else { C64::new(0.0, 0.0) };
                d[(m, col + 1)] = (prev - a.conj() * d[(m, col)]) / ((col + 1) as f64).sqrt();
            }
        }
        d
    }

    #[test]
    fn antisymmetric_form() {
        let th = theta(1.7);
        let e = th.entries();
        assert_eq!(e[0][1], -e[1][0]);
        for s in [[0.3, -1.2], [5.0, 2.0], [0.0, 1.0]] {
            assert_eq!(th.form(s, s), 0.0);
        }
        assert_eq!(th.form([1.0, 0.0], [0.0, 1.0]), -1.7);
        assert!(DeformationMatrix::canonical(0.05).is_err());
        assert!(DeformationMatrix::canonical(11.0).is_err());
    }

    #[test]
    fn displacement_matches_ladder_oracle() {
        for &(h, t) in &[(1.0, [0.7, -1.3]), (0.5, [2.0, 1.0]), (2.0, [-0.4, 0.1]), (4.0, [1.0, 1.0])] {
            let d = displacement_matrix(&theta(h), t, 48).unwrap();
            let o = ladder(h, t, 48);
            // the ladder oracle loses accuracy near the truncation edge of its recursion
            let err = (0..32)
                .flat_map(|m| (0..32).map(move |n| (m, n)))
                .map(|(m, n)| (d[(m, n)] - o[(m, n)]).norm())
                .fold(0.0, f64::max);
            assert!(err < 1e-9, "h={h} t={t:?}: {err}");
        }
        // far from the origin the ladder recursion cancels badly; diagonal entries must stay real
        let d = displacement_matrix(&theta(1.0), [3.0, 2.5], 48).unwrap();
        assert!((0..48).all(|m| d[(m, m)].im.abs() < 1e-15));
    }

    #[test]
    fn displacement_at_zero_is_identity() {
        let d = displacement_matrix(&theta(1.0), [0.0, 0.0], 16).unwrap();
        assert_eq!(d, DMatrix::identity(16, 16));
        assert!(displacement_matrix(&theta(1.0), [0.0, 0.0], 1).is_err());
    }

    #[test]
    fn unitarity_on_leading_block() {
        let n = 64;
        for t in [[2.0, 0.0], [1.0, -1.0], [0.3, 1.9]] {
            let d = displacement_matrix(&theta(1.0), t, n).unwrap();
            let p = &d * d.adjoint();
            let k = n / 2;
            let e = (p.view((0, 0), (k, k)).into_owned() - DMatrix::<C64>::identity(k, k)).norm();
            assert!(e < 1e-8, "{e}");
        }
    }

    #[test]
    fn weyl_relation_defects() {
        let th = theta(1.0);
        assert_eq!(weyl_defect(&th, [0.0, 0.0], [0.0, 0.0], 64).unwrap(), 0.0);
        assert!(weyl_defect(&th, [1.0, 0.0], [0.0, 1.0], 64).unwrap() < 1e-8);
        let t = [1.2, -0.7];
        assert!(weyl_defect(&th, t, [-t[0], -t[1]], 64).unwrap() < 1e-8);
        // adjoint is U(-t)
        let u = displacement_matrix(&th, t, 32).unwrap();
        let v = displacement_matrix(&th, [-t[0], -t[1]], 32).unwrap();
        assert!((u.adjoint() - v).norm() < 1e-12);
        // defect is not worse at larger N
        let a = weyl_defect(&th, [2.0, 1.0], [-1.0, 2.0], 32).unwrap();
        let b = weyl_defect(&th, [2.0, 1.0], [-1.0, 2.0], 64).unwrap();
        assert!(b <= a * 1.1 + 1e-15, "{a} -> {b}");
    }

    #[test]
    fn vacuum_projection_quantization() {
        // lambda(e^{-h|t|^2/4}) = (2 pi / h) |0><0|
        let h = 1.0;
        let q = Quantizer::new(theta(h), 12).unwrap();
        let grid = GridParams::new(2, 10.0, 64).unwrap();
        let f = SymbolGrid::from_fn(grid, |t| C64::new((-0.25 * h * (t[0] * t[0] + t[1] * t[1])).exp(), 0.0)).unwrap();
        let x = q.quantize(&f).unwrap();
        let mut want = DMatrix::zeros(12, 12);
        want[(0, 0)] = C64::new(2.0 * PI / h, 0.0);
        assert!((x.matrix() - want).norm() < 1e-9);
    }

    #[test]
    fn quantize_matches_dense_sum() {
        let th = theta(1.3);
        let n = 10;
        let q = Quantizer::new(th, n).unwrap();
        let grid = GridParams::new(2, 3.0, 6).unwrap();
        let f = SymbolGrid::from_fn(grid, |t| C64::new(t[0] - 0.2, t[1] * t[0])).unwrap();
        let x = q.quantize_on_grid(&f).unwrap();
        let mut dense = DMatrix::zeros(n, n);
        for (i, v) in f.samples().iter().enumerate() {
            dense += displacement_matrix(&th, grid.coords(i), n).unwrap() * (*v * grid.cell_volume());
        }
        assert!((x.matrix() - &dense).norm() < 1e-12 * dense.norm());
        let back = q.dequantize(&x, &grid).unwrap();
        for (i, z) in back.samples().iter().enumerate() {
            let u = displacement_matrix(&th, grid.coords(i), n).unwrap();
            let want = (x.matrix() * u.adjoint()).trace() * th.trace_weight();
            assert!((z - want).norm() < 1e-12 * (1.0 + want.norm()));
        }
    }

    #[test]
    fn gaussian_trace_and_roundtrip() {
        let q = Quantizer::new(theta(1.0), 128).unwrap();
        let grid = GridParams::new(2, 8.0, 64).unwrap();
        let f = SymbolGrid::from_fn(grid, |t| C64::new((-0.5 * (t[0] * t[0] + t[1] * t[1])).exp(), 0.0)).unwrap();
        let x = q.quantize(&f).unwrap();
        assert!((trace_tau(&x) - 1.0).norm() < 1e-5);
        let back = q.dequantize(&x, &grid).unwrap();
        let err = back.samples().iter().zip(f.samples()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        assert!(err < 1e-4, "{err}");
    }

    #[test]
    fn boundary_gate() {
        let q = Quantizer::new(theta(1.0), 16).unwrap();
        let grid = GridParams::new(2, 2.0, 16).unwrap();
        let f = SymbolGrid::from_fn(grid, |t| C64::new((-0.5 * (t[0] * t[0] + t[1] * t[1])).exp(), 0.0)).unwrap();
        assert!(matches!(q.quantize(&f), Err(Error::BoundaryDecay { .. })));
        let z = SymbolGrid::zeros(grid).unwrap();
        assert!(q.quantize(&z).unwrap().matrix().iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn kernel_oracle_trace() {
        for &h in &[0.5, 1.0, 2.0] {
            let f = |t: [f64; 2]| C64::new((-0.5 * (t[0] * t[0] + t[1] * t[1])).exp(), 0.0);
            let tr = kernel_trace(f, h, 10.0, 400, 12.0, 400);
            assert!((tr.re * h / (2.0 * PI) - 1.0).abs() < 1e-6, "h={h}: {tr}");
        }
    }

    #[test]
    fn blob_roundtrip() {
        let th = theta(0.7);
        let m = DMatrix::from_fn(5, 5, |i, j| C64::new(i as f64 - 0.5 * j as f64, (i * j) as f64 * 0.1));
        let x = QuantizedOperator::new(m, th).unwrap();
        assert_eq!(QuantizedOperator::from_bytes(&x.to_bytes()).unwrap(), x);
        let dir = tempfile::tempdir().unwrap();
        let stem = dir.path().join("op");
        let x = x.with_provenance(Provenance { seed: Some(9), ..Default::default() });
        x.save(&stem).unwrap();
        assert_eq!(QuantizedOperator::load(&stem).unwrap(), x);
    }
}
