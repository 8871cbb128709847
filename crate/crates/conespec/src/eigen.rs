//! Smallest eigenpairs of symmetric (optionally generalized, with a positive
//! diagonal mass matrix) sparse problems.
//!
//! The workhorse is a blocked, inverse-free, Jacobi-preconditioned iteration
//! with Rayleigh–Ritz extraction on the `[X, W, P]` subspace and soft locking
//! of converged pairs. Problems of dimension at most 512 are routed to a
//! dense symmetric solve instead. Runs are deterministic for a fixed seed:
//! the starting block is drawn from a seeded generator and every reduction is
//! evaluated in a fixed order.

use ndarray::{s, Array2, Axis};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::sparse::SparseSymmetricMatrix;

pub trait SymmetricOperator: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], y: &mut [f64]);
    fn diagonal(&self) -> Vec<f64>;
    /// Concrete sparse matrix behind the operator, when one exists; enables
    /// the incomplete-Cholesky preconditioner.
    fn as_sparse(&self) -> Option<&SparseSymmetricMatrix> {
        None
    }
}

impl SymmetricOperator for SparseSymmetricMatrix {
    fn dim(&self) -> usize {
        self.dim()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.matvec(x, y);
    }

    fn diagonal(&self) -> Vec<f64> {
        self.diagonal()
    }

    fn as_sparse(&self) -> Option<&SparseSymmetricMatrix> {
        Some(self)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EigenRequest {
    /// Number of smallest eigenpairs wanted.
    pub k: usize,
    /// Residual target for ||K v - lambda M v|| / ||M v||.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Seed for the starting block.
    pub seed: u64,
}

impl EigenRequest {
    pub fn new(k: usize) -> Self {
        EigenRequest {
            k,
            tolerance: 1e-8,
            max_iterations: 2000,
            seed: 0,
        }
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tolerance = tol;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

#[derive(Debug, Clone)]
pub struct EigenResult {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// n x k, orthonormal in the mass inner product.
    pub eigenvectors: Array2<f64>,
    /// ||K v - lambda M v|| / ||M v|| per pair.
    pub residuals: Vec<f64>,
    pub iterations: usize,
    pub converged: Vec<bool>,
    /// Worst residual among the requested pairs, per iteration (empty on the
    /// dense path).
    pub residual_history: Vec<f64>,
}

impl EigenResult {
    /// Diagnostic dump: `iteration,worst_residual` rows.
    pub fn write_residual_history_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        let emit = |w: &mut W| -> std::io::Result<()> {
            writeln!(w, "iteration,worst_residual")?;
            for (i, r) in self.residual_history.iter().enumerate() {
                writeln!(w, "{},{}", i + 1, r)?;
            }
            Ok(())
        };
        emit(&mut w).map_err(|e| Error::io("<residual history stream>", e))
    }
}

impl EigenResult {
    pub fn ensure_converged(&self) -> Result<()> {
        let unconverged: Vec<usize> = self
            .converged
            .iter()
            .enumerate()
            .filter_map(|(i, c)| (!c).then_some(i))
            .collect();
        if unconverged.is_empty() {
            Ok(())
        } else {
            Err(Error::EigenNonConvergence {
                iterations: self.iterations,
                unconverged,
                worst_residual: self.residuals.iter().cloned().fold(0.0, f64::max),
            })
        }
    }

    /// Max deviation of the M-Gram matrix from the identity.
    pub fn gram_error(&self, mass: Option<&[f64]>) -> f64 {
        let k = self.eigenvalues.len();
        let mx = mass_scaled(&self.eigenvectors, mass);
        let g = self.eigenvectors.t().dot(&mx);
        let mut worst: f64 = 0.0;
        for i in 0..k {
            for j in 0..k {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[[i, j]] - target).abs());
            }
        }
        worst
    }
}

const DENSE_CUTOFF: usize = 512;

/// Computes the `req.k` smallest eigenpairs of `K v = lambda M v`.
///
/// `mass` is the diagonal of M; `None` means the identity. Falls back to a
/// dense tridiagonalization-based solve for small dimensions.
pub fn smallest_eigenpairs(
    op: &dyn SymmetricOperator,
    mass: Option<&[f64]>,
    req: &EigenRequest,
) -> Result<EigenResult> {
    let n = op.dim();
    if req.k == 0 || req.k >= n {
        return Err(Error::InvalidEigenRequest(format!(
            "k must satisfy 1 <= k < dim, got k={} with dim={n}",
            req.k
        )));
    }
    if !(1e-12..=1e-4).contains(&req.tolerance) {
        return Err(Error::InvalidEigenRequest(format!(
            "tolerance must lie in [1e-12, 1e-4], got {}",
            req.tolerance
        )));
    }
    if let Some(m) = mass {
        if m.len() != n {
            return Err(Error::InvalidEigenRequest(format!(
                "mass diagonal has length {} but dim is {n}",
                m.len()
            )));
        }
        if m.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::InvalidEigenRequest(
                "mass diagonal must be strictly positive".into(),
            ));
        }
    }
    spot_check_psd(op)?;

    let block = req.k + 2;
    if n <= DENSE_CUTOFF || 3 * block + 2 >= n {
        dense_path(op, mass, req)
    } else {
        lobpcg_path(op, mass, req, block)
    }
}

/// Dense cross-check: solves the full problem and reports the largest
/// eigenvalue discrepancy against `result`.
pub fn validate_against_dense(
    op: &dyn SymmetricOperator,
    mass: Option<&[f64]>,
    result: &EigenResult,
) -> Result<f64> {
    const LIMIT: usize = 2048;
    let n = op.dim();
    if n > LIMIT {
        return Err(Error::DenseValidationTooLarge {
            dim: n,
            limit: LIMIT,
        });
    }
    let dense = dense_spectrum(op, mass);
    Ok(result
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(i, l)| (l - dense[i]).abs())
        .fold(0.0, f64::max))
}

fn spot_check_psd(op: &dyn SymmetricOperator) -> Result<()> {
    let n = op.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5ca1ab1e);
    let mut y = vec![0.0; n];
    for _ in 0..3 {
        let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect();
        op.apply(&x, &mut y);
        let q: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        let nx: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let ny: f64 = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if q < -1e-10 * (nx * ny + f64::MIN_POSITIVE) {
            return Err(Error::NotPsd(format!(
                "quadratic form {q:.3e} on a random vector"
            )));
        }
    }
    Ok(())
}

fn densify(op: &dyn SymmetricOperator) -> nalgebra::DMatrix<f64> {
    let n = op.dim();
    let mut a = nalgebra::DMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        op.apply(&e, &mut col);
        e[j] = 0.0;
        for i in 0..n {
            a[(i, j)] = col[i];
        }
    }
    // symmetrize fp noise
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    a
}

/// Full ascending spectrum via the dense symmetric solver.
pub fn dense_spectrum(op: &dyn SymmetricOperator, mass: Option<&[f64]>) -> Vec<f64> {
    let n = op.dim();
    let mut a = densify(op);
    if let Some(m) = mass {
        for i in 0..n {
            for j in 0..n {
                a[(i, j)] /= (m[i] * m[j]).sqrt();
            }
        }
    }
    let eig = nalgebra::SymmetricEigen::new(a);
    let mut vals: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
    vals.sort_by(|x, y| x.partial_cmp(y).unwrap());
    vals
}

fn dense_path(
    op: &dyn SymmetricOperator,
    mass: Option<&[f64]>,
    req: &EigenRequest,
) -> Result<EigenResult> {
    let n = op.dim();
    let mut a = densify(op);
    if let Some(m) = mass {
        for i in 0..n {
            for j in 0..n {
                a[(i, j)] /= (m[i] * m[j]).sqrt();
            }
        }
    }
    let eig = nalgebra::SymmetricEigen::new(a);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());

    let mut vectors = Array2::zeros((n, req.k));
    let mut values = Vec::with_capacity(req.k);
    for (col, &idx) in order.iter().take(req.k).enumerate() {
        values.push(eig.eigenvalues[idx]);
        for i in 0..n {
            let scale = mass.map_or(1.0, |m| m[i].sqrt());
            vectors[[i, col]] = eig.eigenvectors[(i, idx)] / scale;
        }
    }
    finalize(op, mass, req, values, vectors, 0, Vec::new())
}

enum Preconditioner {
    Jacobi(Vec<f64>),
    /// Incomplete Cholesky of K + shift·M on the sparsity pattern of K.
    Ichol(IcholFactor),
}

impl Preconditioner {
    fn apply(&self, r: &[f64], out: &mut [f64]) {
        match self {
            Preconditioner::Jacobi(d) => {
                for i in 0..r.len() {
                    out[i] = d[i] * r[i];
                }
            }
            Preconditioner::Ichol(f) => f.solve(r, out),
        }
    }
}

struct IcholFactor {
    // lower triangle in CSR, columns ascending, diagonal last per row
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl IcholFactor {
    /// Zero-fill incomplete Cholesky of the operator's sparse matrix plus a
    /// diagonal shift. Returns None on breakdown.
    fn build(matrix: &SparseSymmetricMatrix, mass: Option<&[f64]>, shift: f64) -> Option<Self> {
        let n = matrix.dim();
        // lower-triangular pattern with diagonal
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for i in 0..n {
            let mut diag_present = false;
            for (j, v) in matrix.row_entries(i) {
                if j < i {
                    rows[i].push((j, v));
                } else if j == i {
                    diag_present = true;
                    let m = mass.map_or(1.0, |m| m[i]);
                    rows[i].push((j, v + shift * m));
                }
            }
            if !diag_present {
                let m = mass.map_or(1.0, |m| m[i]);
                rows[i].push((i, shift * m));
            }
            rows[i].sort_by_key(|e| e.0);
        }
        let mut row_ptr = vec![0usize];
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for r in &rows {
            for (j, v) in r {
                cols.push(*j);
                vals.push(*v);
            }
            row_ptr.push(cols.len());
        }
        // factor in place
        for i in 0..n {
            let (lo, hi) = (row_ptr[i], row_ptr[i + 1]);
            for idx in lo..hi {
                let j = cols[idx];
                // dot of rows i and j up to column j
                let mut s = vals[idx];
                let (jlo, jhi) = (row_ptr[j], row_ptr[j + 1]);
                let mut a = lo;
                let mut b = jlo;
                while a < idx && b < jhi && cols[b] < j {
                    match cols[a].cmp(&cols[b]) {
                        std::cmp::Ordering::Less => a += 1,
                        std::cmp::Ordering::Greater => b += 1,
                        std::cmp::Ordering::Equal => {
                            s -= vals[a] * vals[b];
                            a += 1;
                            b += 1;
                        }
                    }
                }
                if j == i {
                    if s <= 0.0 {
                        return None;
                    }
                    vals[idx] = s.sqrt();
                } else {
                    let djj = vals[jhi - 1]; // diagonal stored last in row j
                    vals[idx] = s / djj;
                }
            }
        }
        Some(IcholFactor {
            row_ptr,
            cols,
            vals,
        })
    }

    /// out = (L Lᵀ)⁻¹ r
    fn solve(&self, r: &[f64], out: &mut [f64]) {
        let n = self.row_ptr.len() - 1;
        // forward
        for i in 0..n {
            let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
            let mut s = r[i];
            for idx in lo..hi - 1 {
                s -= self.vals[idx] * out[self.cols[idx]];
            }
            out[i] = s / self.vals[hi - 1];
        }
        // backward, column sweep over the same rows
        for i in (0..n).rev() {
            let (lo, hi) = (self.row_ptr[i], self.row_ptr[i + 1]);
            out[i] /= self.vals[hi - 1];
            let zi = out[i];
            for idx in lo..hi - 1 {
                out[self.cols[idx]] -= self.vals[idx] * zi;
            }
        }
    }
}

fn build_preconditioner(
    op: &dyn SymmetricOperator,
    matrix: Option<&SparseSymmetricMatrix>,
    mass: Option<&[f64]>,
) -> Preconditioner {
    let n = op.dim();
    let diag = op.diagonal();
    let trace: f64 = diag.iter().sum();
    let base_shift = (1e-8 * trace / n as f64).max(f64::MIN_POSITIVE);
    if let Some(m) = matrix {
        let mut shift = base_shift;
        for _ in 0..4 {
            if let Some(f) = IcholFactor::build(m, mass, shift) {
                return Preconditioner::Ichol(f);
            }
            shift *= 100.0;
        }
    }
    Preconditioner::Jacobi(
        diag.iter()
            .enumerate()
            .map(|(i, d)| {
                let m = mass.map_or(1.0, |m| m[i]);
                let v = d + base_shift * m;
                if v.abs() > f64::MIN_POSITIVE {
                    1.0 / v.abs()
                } else {
                    1.0
                }
            })
            .collect(),
    )
}

fn lobpcg_path(
    op: &dyn SymmetricOperator,
    mass: Option<&[f64]>,
    req: &EigenRequest,
    block: usize,
) -> Result<EigenResult> {
    let n = op.dim();
    let precond = build_preconditioner(op, op.as_sparse(), mass);

    // starting block: constant vector plus seeded noise
    let mut rng = ChaCha8Rng::seed_from_u64(req.seed);
    let mut x = Array2::zeros((n, block));
    for i in 0..n {
        x[[i, 0]] = 1.0;
    }
    for j in 1..block {
        for i in 0..n {
            x[[i, j]] = rng.random::<f64>() * 2.0 - 1.0;
        }
    }
    let mut x = whiten(&x, mass).ok_or_else(|| {
        Error::InvalidEigenRequest("failed to orthonormalize the starting block".into())
    })?;
    let mut ax = apply_block(op, &x);
    let mut p: Option<(Array2<f64>, Array2<f64>)> = None;

    let mut iterations = 0;
    let mut residual_history: Vec<f64> = Vec::new();
    for iter in 1..=req.max_iterations {
        iterations = iter;
        // recombination drift in the applied block limits the attainable
        // residual; refresh it periodically
        if iter % 50 == 0 {
            ax = apply_block(op, &x);
        }
        let b = x.ncols();
        let mx = mass_scaled(&x, mass);
        let lambda: Vec<f64> = (0..b).map(|j| x.column(j).dot(&ax.column(j))).collect();

        // residuals for the k requested pairs
        let mut resid = Array2::zeros((n, b));
        for j in 0..b {
            for i in 0..n {
                resid[[i, j]] = ax[[i, j]] - lambda[j] * mx[[i, j]];
            }
        }
        let res_norms: Vec<f64> = (0..b)
            .map(|j| {
                let r = resid.column(j).dot(&resid.column(j)).sqrt();
                let m = mx.column(j).dot(&mx.column(j)).sqrt();
                r / m.max(f64::MIN_POSITIVE)
            })
            .collect();
        let worst = res_norms.iter().take(req.k).cloned().fold(0.0f64, f64::max);
        residual_history.push(worst);
        if worst <= req.tolerance {
            break;
        }

        // preconditioned residuals of unconverged columns
        let active: Vec<usize> = (0..b).filter(|j| res_norms[*j] > req.tolerance).collect();
        let mut w = Array2::zeros((n, active.len()));
        let mut rcol = vec![0.0; n];
        let mut pcol = vec![0.0; n];
        for (c, &j) in active.iter().enumerate() {
            for i in 0..n {
                rcol[i] = resid[[i, j]];
            }
            precond.apply(&rcol, &mut pcol);
            for i in 0..n {
                w[[i, c]] = pcol[i];
            }
        }
        // project out the current space, then orthonormalize
        let xtw = x.t().dot(&mass_scaled(&w, mass));
        w = &w - &x.dot(&xtw);
        let w = match whiten(&w, mass) {
            Some(w) => w,
            None => break, // stagnated
        };

        // assemble the trial space [X, W, P]; if the combined space
        // degenerates, restart without the P block before giving up
        let aw = apply_block(op, &w);
        let mut advanced = false;
        for use_p in [true, false] {
            let mut blocks: Vec<(&Array2<f64>, &Array2<f64>)> = vec![(&x, &ax), (&w, &aw)];
            if use_p {
                if let Some((pb, apb)) = &p {
                    blocks.push((pb, apb));
                } else {
                    continue;
                }
            }
            let total: usize = blocks.iter().map(|(s, _)| s.ncols()).sum();
            let mut sspace = Array2::zeros((n, total));
            let mut aspace = Array2::zeros((n, total));
            let mut offset = 0;
            for (sb, asb) in &blocks {
                sspace
                    .slice_mut(s![.., offset..offset + sb.ncols()])
                    .assign(*sb);
                aspace
                    .slice_mut(s![.., offset..offset + sb.ncols()])
                    .assign(*asb);
                offset += sb.ncols();
            }

            let ga = sspace.t().dot(&aspace);
            let gb = sspace.t().dot(&mass_scaled(&sspace, mass));
            let Some((tvecs, kept)) = whiten_gram(&gb) else {
                continue;
            };
            if kept < b {
                continue;
            }
            // reduced operator in the whitened basis
            let reduced = symmetrize(&tvecs.t().dot(&ga).dot(&tvecs));
            let (_, yvecs) = sym_eig_ascending(&reduced);
            let coeff = tvecs.dot(&yvecs.slice(s![.., ..b]).to_owned());

            let x_new = sspace.dot(&coeff);
            let ax_new = aspace.dot(&coeff);

            // implicit P: drop the X contribution from the update
            let mut coeff_p = coeff.clone();
            for r in 0..b.min(coeff_p.nrows()) {
                for c in 0..coeff_p.ncols() {
                    coeff_p[[r, c]] = 0.0;
                }
            }
            let p_raw = sspace.dot(&coeff_p);
            let ap_raw = aspace.dot(&coeff_p);
            p = whiten_with(&p_raw, &ap_raw, mass);

            x = x_new;
            ax = ax_new;
            advanced = true;
            break;
        }
        if !advanced {
            break; // fully stagnated
        }
    }

    // final Rayleigh-Ritz on X for clean ascending values
    let ga = symmetrize(&x.t().dot(&ax));
    let (vals, yvecs) = sym_eig_ascending(&ga);
    let x_final = x.dot(&yvecs);
    let values: Vec<f64> = vals.iter().take(req.k).cloned().collect();
    let vectors = x_final.slice(s![.., ..req.k]).to_owned();
    finalize(op, mass, req, values, vectors, iterations, residual_history)
}

fn finalize(
    op: &dyn SymmetricOperator,
    mass: Option<&[f64]>,
    req: &EigenRequest,
    values: Vec<f64>,
    mut vectors: Array2<f64>,
    iterations: usize,
    residual_history: Vec<f64>,
) -> Result<EigenResult> {
    let n = op.dim();
    // sign convention: first significant entry of each vector is positive
    for j in 0..vectors.ncols() {
        let col = vectors.column(j);
        let maxabs = col.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if let Some(first) = col.iter().find(|v| v.abs() > 1e-12 * maxabs.max(1e-300)) {
            if *first < 0.0 {
                for i in 0..n {
                    vectors[[i, j]] = -vectors[[i, j]];
                }
            }
        }
    }
    let mut residuals = Vec::with_capacity(values.len());
    let mut buf = vec![0.0; n];
    let mut xcol = vec![0.0; n];
    for (j, lambda) in values.iter().enumerate() {
        for i in 0..n {
            xcol[i] = vectors[[i, j]];
        }
        op.apply(&xcol, &mut buf);
        let mut rr = 0.0;
        let mut mm = 0.0;
        for i in 0..n {
            let mi = mass.map_or(1.0, |m| m[i]);
            let r = buf[i] - lambda * mi * xcol[i];
            rr += r * r;
            mm += (mi * xcol[i]).powi(2);
        }
        residuals.push(rr.sqrt() / mm.sqrt().max(f64::MIN_POSITIVE));
    }
    let converged: Vec<bool> = residuals.iter().map(|r| *r <= req.tolerance).collect();
    Ok(EigenResult {
        eigenvalues: values,
        eigenvectors: vectors,
        residuals,
        iterations,
        converged,
        residual_history,
    })
}

fn apply_block(op: &dyn SymmetricOperator, x: &Array2<f64>) -> Array2<f64> {
    let n = x.nrows();
    let b = x.ncols();
    let mut out = Array2::zeros((n, b));
    let mut xin = vec![0.0; n];
    let mut yout = vec![0.0; n];
    for j in 0..b {
        for i in 0..n {
            xin[i] = x[[i, j]];
        }
        op.apply(&xin, &mut yout);
        for i in 0..n {
            out[[i, j]] = yout[i];
        }
    }
    out
}

fn mass_scaled(x: &Array2<f64>, mass: Option<&[f64]>) -> Array2<f64> {
    match mass {
        None => x.clone(),
        Some(m) => {
            let mut out = x.clone();
            for (i, mut row) in out.axis_iter_mut(Axis(0)).enumerate() {
                row.mapv_inplace(|v| v * m[i]);
            }
            out
        }
    }
}

fn symmetrize(g: &Array2<f64>) -> Array2<f64> {
    let mut out = g.clone();
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            out[[i, j]] = 0.5 * (g[[i, j]] + g[[j, i]]);
        }
    }
    out
}

/// Eigendecomposition of a small symmetric matrix, ascending.
fn sym_eig_ascending(g: &Array2<f64>) -> (Vec<f64>, Array2<f64>) {
    let k = g.nrows();
    let mut m = nalgebra::DMatrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            m[(i, j)] = g[[i, j]];
        }
    }
    let eig = nalgebra::SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());
    let vals: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vecs = Array2::zeros((k, k));
    for (c, &idx) in order.iter().enumerate() {
        for r in 0..k {
            vecs[[r, c]] = eig.eigenvectors[(r, idx)];
        }
    }
    (vals, vecs)
}

/// M-orthonormalizes the columns of a block, dropping near-dependent
/// directions. Returns None when nothing survives.
fn whiten(x: &Array2<f64>, mass: Option<&[f64]>) -> Option<Array2<f64>> {
    let g = x.t().dot(&mass_scaled(x, mass));
    let (t, kept) = whiten_gram(&g)?;
    if kept == 0 {
        return None;
    }
    Some(x.dot(&t))
}

fn whiten_with(
    x: &Array2<f64>,
    ax: &Array2<f64>,
    mass: Option<&[f64]>,
) -> Option<(Array2<f64>, Array2<f64>)> {
    if x.ncols() == 0 {
        return None;
    }
    let g = x.t().dot(&mass_scaled(x, mass));
    let (t, kept) = whiten_gram(&g)?;
    if kept == 0 {
        return None;
    }
    Some((x.dot(&t), ax.dot(&t)))
}

/// Whitening transform for a Gram matrix: columns of the result map the
/// original block onto an orthonormal set. Directions with Gram eigenvalues
/// below 1e-10 of the largest are dropped.
fn whiten_gram(g: &Array2<f64>) -> Option<(Array2<f64>, usize)> {
    let (vals, vecs) = sym_eig_ascending(&symmetrize(g));
    let maxval = vals.iter().cloned().fold(0.0f64, f64::max);
    if !(maxval > 0.0) || !maxval.is_finite() {
        return None;
    }
    let keep: Vec<usize> = (0..vals.len())
        .filter(|&i| vals[i] > 1e-10 * maxval)
        .collect();
    if keep.is_empty() {
        return None;
    }
    let mut t = Array2::zeros((g.nrows(), keep.len()));
    for (c, &idx) in keep.iter().enumerate() {
        let scale = 1.0 / vals[idx].sqrt();
        for r in 0..g.nrows() {
            t[[r, c]] = vecs[[r, idx]] * scale;
        }
    }
    let count = keep.len();
    Some((t, count))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_graph_laplacian(n: usize) -> SparseSymmetricMatrix {
        let mut t = Vec::new();
        for i in 0..n - 1 {
            t.push((i, i, 1.0));
            t.push((i + 1, i + 1, 1.0));
            t.push((i, i + 1, -1.0));
        }
        SparseSymmetricMatrix::from_triplets(n, t)
    }

    #[test]
    fn path_graph_on_three_vertices() {
        let lap = path_graph_laplacian(3);
        let res = smallest_eigenpairs(&lap, None, &EigenRequest::new(2)).unwrap();
        res.ensure_converged().unwrap();
        assert!((res.eigenvalues[0]).abs() < 1e-10);
        assert!((res.eigenvalues[1] - 1.0).abs() < 1e-10);
        let disc = validate_against_dense(&lap, None, &res).unwrap();
        assert!(disc < 1e-10);
    }

    #[test]
    fn diagonal_matrix_smallest_two() {
        let m =
            SparseSymmetricMatrix::from_triplets(3, vec![(0, 0, 5.0), (1, 1, 2.0), (2, 2, 9.0)]);
        let res = smallest_eigenpairs(&m, None, &EigenRequest::new(2)).unwrap();
        assert!((res.eigenvalues[0] - 2.0).abs() < 1e-12);
        assert!((res.eigenvalues[1] - 5.0).abs() < 1e-12);
    }

    #[test]
    fn connected_laplacian_has_constant_kernel() {
        let lap = path_graph_laplacian(40);
        let res = smallest_eigenpairs(&lap, None, &EigenRequest::new(1)).unwrap();
        res.ensure_converged().unwrap();
        assert!(res.eigenvalues[0].abs() < 1e-10);
        let v = res.eigenvectors.column(0);
        let first = v[0];
        assert!(v.iter().all(|x| (x - first).abs() < 1e-8));
        assert!(first > 0.0); // sign convention
    }

    #[test]
    fn identity_matrix_validates_exactly() {
        let eye = SparseSymmetricMatrix::from_triplets(20, (0..20).map(|i| (i, i, 1.0)));
        let res = smallest_eigenpairs(&eye, None, &EigenRequest::new(3)).unwrap();
        let disc = validate_against_dense(&eye, None, &res).unwrap();
        assert_eq!(disc, 0.0);
    }

    fn random_psd(n: usize, seed: u64) -> SparseSymmetricMatrix {
        // A = F^T F + small shift, dense but stored sparsely
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..n).map(|_| rng.random::<f64>() - 0.5).collect())
            .collect();
        let mut triplets = Vec::new();
        for i in 0..n {
            for j in i..n {
                let mut v = 0.0;
                for r in 0..n {
                    v += f[r][i] * f[r][j];
                }
                if i == j {
                    v += 0.1;
                }
                triplets.push((i, j, v));
            }
        }
        SparseSymmetricMatrix::from_triplets(n, triplets)
    }

    #[test]
    fn random_psd_matches_dense() {
        let a = random_psd(50, 11);
        let res = smallest_eigenpairs(&a, None, &EigenRequest::new(4)).unwrap();
        let disc = validate_against_dense(&a, None, &res).unwrap();
        assert!(disc < 1e-8, "discrepancy {disc}");
    }

    #[test]
    fn generalized_problem_with_mass() {
        // K = path laplacian, M = diag(1..n); dense path
        let n = 30;
        let lap = path_graph_laplacian(n);
        let mass: Vec<f64> = (0..n).map(|i| 1.0 + i as f64 * 0.1).collect();
        let res = smallest_eigenpairs(&lap, Some(&mass), &EigenRequest::new(3)).unwrap();
        res.ensure_converged().unwrap();
        assert!(res.eigenvalues[0].abs() < 1e-10);
        assert!(res.gram_error(Some(&mass)) < 1e-8);
        let disc = validate_against_dense(&lap, Some(&mass), &res).unwrap();
        assert!(disc < 1e-9);
    }

    #[test]
    fn lobpcg_on_large_path_matches_analytic() {
        // Neumann chain eigenvalues: 2 - 2 cos(pi k / n)
        let n = 800;
        let lap = path_graph_laplacian(n);
        let req = EigenRequest::new(4).with_tolerance(1e-9);
        let res = smallest_eigenpairs(&lap, None, &req).unwrap();
        res.ensure_converged().unwrap();
        for (k, lam) in res.eigenvalues.iter().enumerate() {
            let exact = 2.0 - 2.0 * (std::f64::consts::PI * k as f64 / n as f64).cos();
            assert!(
                (lam - exact).abs() < 1e-7 * (1.0 + exact),
                "k={k}: {lam} vs {exact}"
            );
        }
        assert!(res.gram_error(None) < 1e-8);
    }

    #[test]
    fn solves_are_bit_deterministic() {
        let n = 700;
        let lap = path_graph_laplacian(n);
        let req = EigenRequest::new(3).with_seed(42);
        let a = smallest_eigenpairs(&lap, None, &req).unwrap();
        let b = smallest_eigenpairs(&lap, None, &req).unwrap();
        assert_eq!(a.eigenvalues, b.eigenvalues);
        assert_eq!(
            a.eigenvectors.as_slice().unwrap(),
            b.eigenvectors.as_slice().unwrap()
        );
    }

    #[test]
    fn eigenvalues_invariant_under_permutation() {
        let a = random_psd(40, 3);
        let n = 40;
        let perm: Vec<usize> = (0..n).map(|i| (i * 17 + 5) % n).collect();
        let permuted = SparseSymmetricMatrix::from_triplets(
            n,
            a.upper_triplets().map(|(i, j, v)| (perm[i], perm[j], v)),
        );
        let ra = smallest_eigenpairs(&a, None, &EigenRequest::new(5)).unwrap();
        let rb = smallest_eigenpairs(&permuted, None, &EigenRequest::new(5)).unwrap();
        for (x, y) in ra.eigenvalues.iter().zip(&rb.eigenvalues) {
            assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn ritz_values_bracket_dense_values() {
        for seed in [1, 2, 3] {
            let a = random_psd(60, seed);
            let req = EigenRequest::new(3);
            let res = smallest_eigenpairs(&a, None, &req).unwrap();
            let dense = dense_spectrum(&a, None);
            for (i, lam) in res.eigenvalues.iter().enumerate() {
                assert!(*lam <= dense[i] + req.tolerance * (1.0 + dense[i]));
            }
        }
    }

    #[test]
    fn invalid_requests_are_rejected() {
        let a = random_psd(10, 1);
        assert!(smallest_eigenpairs(&a, None, &EigenRequest::new(0)).is_err());
        assert!(smallest_eigenpairs(&a, None, &EigenRequest::new(10)).is_err());
        let bad_tol = EigenRequest::new(2).with_tolerance(1e-2);
        assert!(smallest_eigenpairs(&a, None, &bad_tol).is_err());
        let mass = vec![0.0; 10];
        assert!(smallest_eigenpairs(&a, Some(&mass), &EigenRequest::new(2)).is_err());
    }

    #[test]
    fn indefinite_matrix_rejected() {
        let m = SparseSymmetricMatrix::from_triplets(8, (0..8).map(|i| (i, i, -1.0)));
        assert!(matches!(
            smallest_eigenpairs(&m, None, &EigenRequest::new(2)),
            Err(Error::NotPsd(_))
        ));
    }
}
