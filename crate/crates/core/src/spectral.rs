//! Exact diagonalization and eigenstate observables.
//!
//! Spectra are computed block by block: the Hamiltonian is first split into
//! the connected components of its off-diagonal graph and each component is
//! diagonalized densely. Fragmented models (Model I) therefore reach much
//! larger bases than the dense limit alone would allow.

use std::collections::HashMap;
use std::io::Write;

use faer::{c64, Mat, Side};

use crate::basis::{pow3, Boundary, ConstrainedBasis, Preset, Spin, SpinConfig, StateSpace};
use crate::error::{Error, Result};
use crate::fragmentation::connected_components;
use crate::hamiltonian::SparseOperator;
use crate::symmetry::{momentum_block, Inversion, InversionAxis, SymmetrySector};

/// Largest dense block the eigensolver accepts.
pub const DENSE_LIMIT: usize = 20_000;

/// Energies closer than this share a degeneracy group in reports.
pub const DEGENERACY_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
struct EigenBlock {
    indices: Vec<usize>,
    values: Vec<f64>,
    vectors: Option<Mat<f64>>,
    /// Columns `2k, 2k+1` below this are related by the particle-hole
    /// operator `C` (chiral route only).
    paired: usize,
}

/// Eigenpairs of a real symmetric operator, stored per connected block.
#[derive(Clone, Debug)]
pub struct EigenSystem {
    dim: usize,
    blocks: Vec<EigenBlock>,
    /// `(block, column)` of the i-th eigenvalue in ascending order.
    order: Vec<(usize, usize)>,
    /// Inverse of `order`, per block.
    position: Vec<Vec<usize>>,
    values: Vec<f64>,
}

#[derive(Clone, Copy, Debug)]
pub struct DiagonalizeOptions {
    pub dense_limit: usize,
    pub vectors: bool,
}

impl Default for DiagonalizeOptions {
    fn default() -> Self {
        DiagonalizeOptions {
            dense_limit: DENSE_LIMIT,
            vectors: true,
        }
    }
}

fn eigh(block: Mat<f64>, vectors: bool) -> Result<(Vec<f64>, Option<Mat<f64>>)> {
    if block.nrows() == 1 {
        return Ok((vec![block[(0, 0)]], vectors.then(|| Mat::from_fn(1, 1, |_, _| 1.0))));
    }
    if vectors {
        let eig = block
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::Eigen(format!("{e:?}")))?;
        let values = (0..block.nrows()).map(|i| eig.S()[i]).collect();
        Ok((values, Some(eig.U().to_owned())))
    } else {
        let values = block
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::Eigen(format!("{e:?}")))?;
        Ok((values, None))
    }
}

/// Two-colouring of a connected block when `H` has no diagonal and only
/// couples the two colours; `None` otherwise.
fn bipartition(h: &SparseOperator, indices: &[usize]) -> Option<Vec<bool>> {
    let position: HashMap<usize, usize> = indices.iter().enumerate().map(|(k, &i)| (i, k)).collect();
    let mut colour: Vec<Option<bool>> = vec![None; indices.len()];
    let mut stack = vec![0];
    colour[0] = Some(false);
    while let Some(a) = stack.pop() {
        let ca = colour[a]?;
        let (cols, vals) = h.row(indices[a]);
        for (&j, &v) in cols.iter().zip(vals) {
            if v == 0.0 {
                continue;
            }
            let b = *position.get(&j)?;
            match colour[b] {
                None => {
                    colour[b] = Some(!ca);
                    stack.push(b);
                }
                Some(cb) if cb == ca => return None,
                Some(_) => {}
            }
        }
    }
    colour.into_iter().collect()
}

/// Eigenpairs of a bipartite block `[[0, B], [B^T, 0]]` from the SVD of `B`:
/// `+-sigma_k` with vectors `(u_k, +-v_k)/sqrt2`, plus `|p - q|` zero modes.
fn chiral_eigh(h: &SparseOperator, indices: &[usize], colour: &[bool], vectors: bool) -> Result<(Vec<f64>, Option<Mat<f64>>)> {
    let mut big: Vec<usize> = (0..indices.len()).filter(|&k| !colour[k]).collect();
    let mut small: Vec<usize> = (0..indices.len()).filter(|&k| colour[k]).collect();
    if big.len() < small.len() {
        std::mem::swap(&mut big, &mut small);
    }
    let (p, q) = (big.len(), small.len());
    let column: HashMap<usize, usize> = small.iter().enumerate().map(|(c, &k)| (indices[k], c)).collect();
    let mut b = Mat::<f64>::zeros(p, q);
    for (r, &k) in big.iter().enumerate() {
        let (cols, vals) = h.row(indices[k]);
        for (j, &v) in cols.iter().zip(vals) {
            if let Some(&c) = column.get(j) {
                b[(r, c)] = v;
            }
        }
    }
    let err = |e| Error::Eigen(format!("{e:?}"));
    let mut values = Vec::with_capacity(p + q);
    if !vectors {
        let sigma = b.singular_values().map_err(err)?;
        for &x in &sigma {
            values.extend([x, -x]);
        }
        values.resize(p + q, 0.0);
        return Ok((values, None));
    }
    let svd = b.svd().map_err(err)?;
    let (u, v) = (svd.U(), svd.V());
    let n = p + q;
    let mut out = Mat::<f64>::zeros(n, n);
    let r2 = std::f64::consts::FRAC_1_SQRT_2;
    for k in 0..q {
        let sigma = svd.S()[k];
        for (sign, col) in [(1.0, 2 * k), (-1.0, 2 * k + 1)] {
            for (r, &row) in big.iter().enumerate() {
                out[(row, col)] = u[(r, k)] * r2;
            }
            for (c, &row) in small.iter().enumerate() {
                out[(row, col)] = sign * v[(c, k)] * r2;
            }
            values.push(sign * sigma);
        }
    }
    for k in q..p {
        let col = q + k;
        for (r, &row) in big.iter().enumerate() {
            out[(row, col)] = u[(r, k)];
        }
        values.push(0.0);
    }
    Ok((values, Some(out)))
}

/// Blocks below this size skip the bipartite route.
const CHIRAL_MIN_BLOCK: usize = 256;

pub fn diagonalize(h: &SparseOperator) -> Result<EigenSystem> {
    diagonalize_with(h, DiagonalizeOptions::default())
}

pub fn diagonalize_with(h: &SparseOperator, options: DiagonalizeOptions) -> Result<EigenSystem> {
    let components = connected_components(h);
    if let Some(big) = components.iter().map(Vec::len).max() {
        if big > options.dense_limit {
            return Err(Error::TooLargeForFullSpectrum {
                dim: big,
                limit: options.dense_limit,
            });
        }
    }
    let mut blocks = Vec::with_capacity(components.len());
    for indices in components {
        let chiral = if indices.len() >= CHIRAL_MIN_BLOCK { bipartition(h, &indices) } else { None };
        let (values, vectors, paired) = match chiral {
            Some(colour) => {
                let t = colour.iter().filter(|&&c| c).count();
                let small = t.min(colour.len() - t);
                let (values, vectors) = chiral_eigh(h, &indices, &colour, options.vectors)?;
                (values, vectors, 2 * small)
            }
            None => {
                let (values, vectors) = eigh(h.dense_block(&indices), options.vectors)?;
                (values, vectors, 0)
            }
        };
        blocks.push(EigenBlock {
            indices,
            values,
            vectors,
            paired,
        });
    }
    let mut order: Vec<(usize, usize)> = blocks
        .iter()
        .enumerate()
        .flat_map(|(b, blk)| (0..blk.values.len()).map(move |c| (b, c)))
        .collect();
    order.sort_by(|&(b1, c1), &(b2, c2)| {
        blocks[b1].values[c1]
            .total_cmp(&blocks[b2].values[c2])
            .then((blocks[b1].indices[0], c1).cmp(&(blocks[b2].indices[0], c2)))
    });
    let values = order.iter().map(|&(b, c)| blocks[b].values[c]).collect();
    let mut position: Vec<Vec<usize>> = blocks.iter().map(|blk| vec![0; blk.values.len()]).collect();
    for (i, &(b, c)) in order.iter().enumerate() {
        position[b][c] = i;
    }
    Ok(EigenSystem {
        dim: h.dim(),
        blocks,
        order,
        position,
        values,
    })
}

impl EigenSystem {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Ascending eigenvalues.
    pub fn energies(&self) -> &[f64] {
        &self.values
    }

    pub fn energy(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn has_vectors(&self) -> bool {
        self.blocks.iter().all(|b| b.vectors.is_some())
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.indices.len()).collect()
    }

    /// Index of the eigenvector equal to `C` times the i-th one, when the
    /// solver produced them as a pair.
    pub fn chiral_partner(&self, i: usize) -> Option<usize> {
        let (b, c) = self.order[i];
        (c < self.blocks[b].paired).then(|| self.position[b][c ^ 1])
    }

    /// Nonzero support of the i-th eigenvector as `(index, amplitude)`.
    pub fn support(&self, i: usize) -> Result<Vec<(usize, f64)>> {
        let (b, c) = self.order[i];
        let blk = &self.blocks[b];
        let u = blk.vectors.as_ref().ok_or(Error::VectorsNotRetained)?;
        Ok(blk.indices.iter().enumerate().map(|(r, &idx)| (idx, u[(r, c)])).collect())
    }

    pub fn vector(&self, i: usize) -> Result<Vec<f64>> {
        let mut v = vec![0.0; self.dim];
        for (idx, a) in self.support(i)? {
            v[idx] = a;
        }
        Ok(v)
    }

    /// `sum_i |c_i|^2 d_i` for a diagonal observable `d`.
    pub fn diagonal_expectation(&self, i: usize, diag: &[f64]) -> Result<f64> {
        Ok(self.support(i)?.into_iter().map(|(idx, a)| a * a * diag[idx]).sum())
    }

    /// Largest `||H v - E v||` over all eigenpairs.
    pub fn max_residual(&self, h: &SparseOperator) -> Result<f64> {
        let mut worst = 0.0f64;
        for i in 0..self.len() {
            let support = self.support(i)?;
            let e = self.values[i];
            let mut r2 = 0.0;
            let mut lookup = HashMap::with_capacity(support.len());
            for &(idx, a) in &support {
                lookup.insert(idx, a);
            }
            for &(idx, a) in &support {
                let (cols, vals) = h.row(idx);
                let hv: f64 = cols
                    .iter()
                    .zip(vals)
                    .map(|(c, v)| v * lookup.get(c).copied().unwrap_or(0.0))
                    .sum();
                r2 += (hv - e * a).powi(2);
            }
            worst = worst.max(r2.sqrt());
        }
        Ok(worst)
    }

    /// Largest entry of `U^T U - 1`; distinct blocks are disjoint so only
    /// within-block products are checked.
    pub fn orthonormality_defect(&self) -> Result<f64> {
        let mut worst = 0.0f64;
        for blk in &self.blocks {
            let u = blk.vectors.as_ref().ok_or(Error::VectorsNotRetained)?;
            let g = u.transpose() * u;
            for i in 0..g.nrows() {
                for j in 0..g.ncols() {
                    let expect = if i == j { 1.0 } else { 0.0 };
                    worst = worst.max((g[(i, j)] - expect).abs());
                }
            }
        }
        Ok(worst)
    }
}

/// Ascending spectrum of `H` on a periodic basis assembled from the complex
/// momentum blocks, for bases whose connected pieces exceed the dense limit.
pub fn spectrum_by_momentum(basis: &ConstrainedBasis) -> Result<Vec<f64>> {
    let len = basis.len();
    let mut all = Vec::with_capacity(basis.dim());
    // the block at L - k is the complex conjugate of the block at k
    for k in 0..=len / 2 {
        let block: Mat<c64> = momentum_block(basis, k)?;
        if block.nrows() > DENSE_LIMIT {
            return Err(Error::TooLargeForFullSpectrum {
                dim: block.nrows(),
                limit: DENSE_LIMIT,
            });
        }
        if block.nrows() == 0 {
            continue;
        }
        let values = block
            .self_adjoint_eigenvalues(Side::Lower)
            .map_err(|e| Error::Eigen(format!("{e:?}")))?;
        let copies = if k == 0 || 2 * k == len { 1 } else { 2 };
        for _ in 0..copies {
            all.extend(values.iter().copied());
        }
    }
    all.sort_by(f64::total_cmp);
    Ok(all)
}

/// Ascending full spectrum by the cheapest exact route: Model II through its
/// label sectors, otherwise blockwise over connected components, falling back
/// to momentum blocks under PBC when a component is too large.
pub fn full_spectrum(basis: &ConstrainedBasis, h: &SparseOperator) -> Result<Vec<f64>> {
    if basis.constraint().tag() == Preset::ModelII {
        return crate::fragmentation::model2_spectrum(basis, h);
    }
    let options = DiagonalizeOptions {
        vectors: false,
        ..Default::default()
    };
    match diagonalize_with(h, options) {
        Ok(es) => Ok(es.energies().to_vec()),
        Err(Error::TooLargeForFullSpectrum { .. }) if basis.boundary() == Boundary::Periodic => {
            spectrum_by_momentum(basis)
        }
        Err(e) => Err(e),
    }
}

/// Largest `|E_i + E_{n-1-i}|` over a sorted spectrum.
pub fn mirror_defect(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    (0..n).map(|i| (sorted[i] + sorted[n - 1 - i]).abs()).fold(0.0, f64::max)
}

/// `S_z` of every basis label.
pub fn sz_diagonal<S: StateSpace + ?Sized>(space: &S) -> Vec<f64> {
    (0..space.dim()).map(|i| space.label_config(i).magnetization() as f64).collect()
}

/// `<psi|S_z|psi>` for a normalized vector over `space`.
pub fn magnetization<S: StateSpace + ?Sized>(state: &[f64], space: &S) -> Result<f64> {
    if state.len() != space.dim() {
        return Err(Error::DimensionMismatch {
            expected: space.dim(),
            found: state.len(),
        });
    }
    Ok(state
        .iter()
        .enumerate()
        .map(|(i, a)| a * a * space.label_config(i).magnetization() as f64)
        .sum())
}

/// A space whose vectors expand into product configurations.
pub trait ProductExpansion: StateSpace {
    /// `(configuration code, amplitude)` pairs of a sparse vector.
    fn expand(&self, support: &[(usize, f64)]) -> Vec<(u64, f64)>;

    /// Whether every vector is even under the reversal `i -> L-1-i`.
    fn reversal_even(&self) -> bool {
        false
    }
}

impl ProductExpansion for ConstrainedBasis {
    fn expand(&self, support: &[(usize, f64)]) -> Vec<(u64, f64)> {
        support.iter().map(|&(i, a)| (self.code(i), a)).collect()
    }
}

impl ProductExpansion for SymmetrySector<'_> {
    fn expand(&self, support: &[(usize, f64)]) -> Vec<(u64, f64)> {
        let parent = self.parent();
        let mut out = Vec::new();
        for &(i, c) in support {
            for &(j, a) in &self.vectors()[i].members {
                out.push((parent.code(j), a * c));
            }
        }
        out
    }

    fn reversal_even(&self) -> bool {
        self.inversion() == Inversion::Even && self.axis() == InversionAxis::Reversal
    }
}

/// Dense vector to sparse support.
pub fn dense_support(state: &[f64]) -> Vec<(usize, f64)> {
    state.iter().copied().enumerate().filter(|&(_, a)| a != 0.0).collect()
}

/// Row/column compression of `psi[left, right]` onto the half-strings that
/// occur; returns `(rows, cols, entries)` with the smaller half as rows.
fn compress<T: Copy>(entries: &[(u64, T)], len: usize, cut: usize, nonzero: impl Fn(T) -> bool) -> Result<(usize, usize, Vec<(usize, usize, T)>)> {
    if cut == 0 || cut >= len {
        return Err(Error::InvalidArgument(format!("cut {cut} must lie in 1..{len}")));
    }
    let split = pow3(cut);
    let mut left: HashMap<u64, usize> = HashMap::new();
    let mut right: HashMap<u64, usize> = HashMap::new();
    let mut coords = Vec::with_capacity(entries.len());
    for &(code, a) in entries {
        if !nonzero(a) {
            continue;
        }
        let nl = left.len();
        let l = *left.entry(code % split).or_insert(nl);
        let nr = right.len();
        let r = *right.entry(code / split).or_insert(nr);
        coords.push((l, r, a));
    }
    let (nl, nr) = (left.len(), right.len());
    if nl <= nr {
        Ok((nl, nr, coords))
    } else {
        Ok((nr, nl, coords.into_iter().map(|(l, r, a)| (r, l, a)).collect()))
    }
}

fn finish(mut values: Vec<f64>) -> Vec<f64> {
    for v in values.iter_mut() {
        *v = v.max(0.0);
    }
    values.sort_by(|a, b| b.total_cmp(a));
    values
}

/// Eigenvalues of the reduced density matrix of sites `0..cut`, descending.
///
/// Each half is embedded in its unconstrained string space; only strings
/// that occur in the state get a row or column.
pub fn schmidt_spectrum(entries: &[(u64, f64)], len: usize, cut: usize) -> Result<Vec<f64>> {
    let (rows, cols, coords) = compress(entries, len, cut, |a| a != 0.0)?;
    if rows == 0 {
        return Ok(Vec::new());
    }
    let mut m = Mat::<f64>::zeros(rows, cols);
    for (i, j, a) in coords {
        m[(i, j)] += a;
    }
    let gram = &m * m.transpose();
    if rows == 1 {
        return Ok(finish(vec![gram[(0, 0)]]));
    }
    let values = gram
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    Ok(finish(values))
}

/// Half-cut Schmidt values of a state even under `i -> L-1-i` (even `L`).
///
/// With `R` the reversal of a half string, `N[l, l'] = psi(l, R l')` is
/// symmetric and the Schmidt values are the squares of its eigenvalues, so no
/// Gram product is needed.
pub fn schmidt_spectrum_reversal_even(entries: &[(u64, f64)], len: usize) -> Result<Vec<f64>> {
    if len % 2 != 0 || len == 0 {
        return Err(Error::OddLength(len));
    }
    let half = len / 2;
    let split = pow3(half);
    let reverse = |mut code: u64| {
        let mut out = 0;
        for _ in 0..half {
            out = out * 3 + code % 3;
            code /= 3;
        }
        out
    };
    let mut index: HashMap<u64, usize> = HashMap::new();
    let mut coords = Vec::with_capacity(entries.len());
    for &(code, a) in entries {
        if a == 0.0 {
            continue;
        }
        let n = index.len();
        let l = *index.entry(code % split).or_insert(n);
        let n = index.len();
        let r = *index.entry(reverse(code / split)).or_insert(n);
        coords.push((l, r, a));
    }
    let n = index.len();
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut m = Mat::<f64>::zeros(n, n);
    for (i, j, a) in coords {
        m[(i, j)] += a;
    }
    let values = m
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    Ok(finish(values.into_iter().map(|x| x * x).collect()))
}

/// Half-chain entanglement entropy of a sparse vector over `space`.
pub fn half_chain_entropy<S: ProductExpansion + ?Sized>(space: &S, support: &[(usize, f64)]) -> Result<f64> {
    let len = space.chain_length();
    if len < 2 {
        return Ok(0.0);
    }
    let entries = space.expand(support);
    let p = if space.reversal_even() && len % 2 == 0 {
        schmidt_spectrum_reversal_even(&entries, len)?
    } else {
        schmidt_spectrum(&entries, len, len / 2)?
    };
    Ok(von_neumann(&p))
}

/// [`schmidt_spectrum`] for complex amplitudes.
pub fn schmidt_spectrum_complex(entries: &[(u64, c64)], len: usize, cut: usize) -> Result<Vec<f64>> {
    let (rows, cols, coords) = compress(entries, len, cut, |a: c64| a != c64::new(0.0, 0.0))?;
    if rows == 0 {
        return Ok(Vec::new());
    }
    let mut m = Mat::<c64>::zeros(rows, cols);
    for (i, j, a) in coords {
        m[(i, j)] += a;
    }
    let gram = &m * m.adjoint();
    if rows == 1 {
        return Ok(finish(vec![gram[(0, 0)].re]));
    }
    let values = gram
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    Ok(finish(values))
}

/// Von Neumann entropy (nats) of a probability list, `0 ln 0 = 0`.
pub fn von_neumann(probabilities: &[f64]) -> f64 {
    -probabilities.iter().filter(|&&p| p > 0.0).map(|p| p * p.ln()).sum::<f64>()
}

/// Entanglement entropy of a state over `basis` between sites `0..cut` and
/// the rest.
pub fn entanglement_entropy(state: &[f64], basis: &ConstrainedBasis, cut: usize) -> Result<f64> {
    if state.len() != basis.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            found: state.len(),
        });
    }
    let entries = basis.expand(&dense_support(state));
    Ok(von_neumann(&schmidt_spectrum(&entries, basis.len(), cut)?))
}

/// Single-site reduced density matrix, indexed by spin digit `(-, 0, +)`.
pub fn single_site_rdm(entries: &[(u64, f64)], site: usize) -> [[f64; 3]; 3] {
    let p = pow3(site);
    let mut env: HashMap<u64, [f64; 3]> = HashMap::new();
    for &(code, a) in entries {
        let d = (code / p) % 3;
        let rest = code - d * p;
        env.entry(rest).or_insert([0.0; 3])[d as usize] += a;
    }
    let mut rho = [[0.0; 3]; 3];
    for amps in env.values() {
        for i in 0..3 {
            for j in 0..3 {
                rho[i][j] += amps[i] * amps[j];
            }
        }
    }
    rho
}

/// Canonical averages `Tr[e^{-beta H} O] / Z` from a spectrum and the
/// diagonal of `O` in the same eigenbasis.
#[derive(Clone, Debug)]
pub struct GibbsEnsemble {
    energies: Vec<f64>,
    observable: Vec<f64>,
    pub beta_max: f64,
    pub energy_tol: f64,
}

impl GibbsEnsemble {
    pub fn new(energies: Vec<f64>, observable: Vec<f64>) -> Result<Self> {
        if energies.len() != observable.len() {
            return Err(Error::DimensionMismatch {
                expected: energies.len(),
                found: observable.len(),
            });
        }
        if energies.is_empty() {
            return Err(Error::InvalidArgument("empty spectrum".into()));
        }
        Ok(GibbsEnsemble {
            energies,
            observable,
            beta_max: 50.0,
            energy_tol: 1e-10,
        })
    }

    fn e_range(&self) -> (f64, f64) {
        let min = self.energies.iter().copied().fold(f64::INFINITY, f64::min);
        let max = self.energies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (min, max)
    }

    /// `(<H>_beta, <O>_beta)`.
    pub fn averages(&self, beta: f64) -> (f64, f64) {
        let (min, max) = self.e_range();
        let shift = if beta >= 0.0 { min } else { max };
        let (mut z, mut e, mut o) = (0.0, 0.0, 0.0);
        for (&en, &ob) in self.energies.iter().zip(&self.observable) {
            let w = (-beta * (en - shift)).exp();
            z += w;
            e += w * en;
            o += w * ob;
        }
        (e / z, o / z)
    }

    /// Inverse temperature whose mean energy is `energy`, clamped to
    /// `[-beta_max, beta_max]`.
    pub fn beta_for(&self, energy: f64) -> Result<f64> {
        let (min, max) = self.e_range();
        if !(energy > min && energy < max) {
            return Err(Error::EnergyOutOfRange { energy, min, max });
        }
        let (mut lo, mut hi) = (-self.beta_max, self.beta_max);
        if self.averages(hi).0 >= energy {
            return Ok(hi);
        }
        if self.averages(lo).0 <= energy {
            return Ok(lo);
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let e = self.averages(mid).0;
            if (e - energy).abs() < self.energy_tol {
                return Ok(mid);
            }
            if e > energy {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// `<O>_beta(E)` at each target energy.
    pub fn curve(&self, targets: &[f64]) -> Result<Vec<(f64, f64)>> {
        targets
            .iter()
            .map(|&e| Ok((e, self.averages(self.beta_for(e)?).1)))
            .collect()
    }
}

/// Exact integer-energy eigenstate of Model I.
#[derive(Clone, Debug)]
pub struct SpecialState {
    /// Family: energy magnitude 1 or 2.
    pub n: usize,
    pub sign: i8,
    pub len: usize,
    /// Amplitudes over the basis it was built on.
    pub vector: Vec<f64>,
}

impl SpecialState {
    pub fn energy(&self) -> f64 {
        (self.sign as i32 * self.n as i32) as f64
    }
}

fn block(len: usize, middle: Spin) -> Vec<Spin> {
    let mut v = vec![Spin::Plus; len - 3];
    v.extend([Spin::Minus, middle, Spin::Minus]);
    v
}

/// Normalized translation-symmetric superposition of all distinct shifts.
fn add_translation_orbit(basis: &ConstrainedBasis, spins: &[Spin], coeff: f64, out: &mut [f64]) -> Result<()> {
    let config = SpinConfig::from_spins(spins);
    let mut codes: Vec<u64> = (0..config.len()).map(|j| config.translate(j).code()).collect();
    codes.sort_unstable();
    codes.dedup();
    let amp = coeff / (codes.len() as f64).sqrt();
    for code in codes {
        let idx = basis
            .index_of(code)
            .ok_or_else(|| Error::NotInBasis(SpinConfig::new(code, config.len()).to_string()))?;
        out[idx] += amp;
    }
    Ok(())
}

/// `|psi_{+-n}>` for `n` in {1, 2} on a periodic Model-I basis.
pub fn build_special_state(basis: &ConstrainedBasis, n: usize, sign: i8) -> Result<SpecialState> {
    if basis.constraint().tag() != Preset::ModelI {
        return Err(Error::UnsupportedModel(basis.constraint().label()));
    }
    if basis.boundary() != crate::basis::Boundary::Periodic {
        return Err(Error::RequiresPbc);
    }
    if sign != 1 && sign != -1 {
        return Err(Error::InvalidArgument("sign must be +1 or -1".into()));
    }
    let len = basis.len();
    let s = sign as f64;
    let mut vector = vec![0.0; basis.dim()];
    use Spin::{Minus as M, Plus as P, Zero as Z};
    match n {
        1 => {
            if len < 5 {
                return Err(Error::LengthTooSmall { length: len, min: 5 });
            }
            add_translation_orbit(basis, &block(len, M), 0.5, &mut vector)?;
            add_translation_orbit(basis, &block(len, P), 0.5, &mut vector)?;
            add_translation_orbit(basis, &block(len, Z), s * std::f64::consts::FRAC_1_SQRT_2, &mut vector)?;
        }
        2 => {
            if len < 10 {
                return Err(Error::LengthTooSmall { length: len, min: 10 });
            }
            if len % 2 == 1 {
                return Err(Error::OddLength(len));
            }
            let h = len / 2;
            let pair = |a: Spin, b: Spin| [block(h, a), block(h, b)].concat();
            let terms = [
                (pair(M, M), s * 0.25),
                (pair(P, M), s / 8f64.sqrt()),
                (pair(P, P), s * 0.25),
                (pair(Z, M), 0.5),
                (pair(P, Z), 0.5),
                (pair(Z, Z), s * 0.5),
            ];
            for (spins, c) in terms {
                add_translation_orbit(basis, &spins, c, &mut vector)?;
            }
        }
        _ => return Err(Error::InvalidArgument(format!("special-state family {n} not available"))),
    }
    Ok(SpecialState { n, sign, len, vector })
}

/// One eigenreport line.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenRow {
    pub index: usize,
    pub energy: f64,
    pub s_z: f64,
    pub s_half: f64,
    pub degeneracy_group: usize,
}

/// Degeneracy group id of every sorted energy.
pub fn degeneracy_groups(energies: &[f64], tol: f64) -> Vec<usize> {
    let mut out = Vec::with_capacity(energies.len());
    let mut g = 0;
    for (i, e) in energies.iter().enumerate() {
        if i > 0 && e - energies[i - 1] > tol {
            g += 1;
        }
        out.push(g);
    }
    out
}

/// `S_z` and half-chain entropy of every eigenstate.
pub fn eigenreport<S: ProductExpansion + ?Sized>(es: &EigenSystem, space: &S) -> Result<Vec<EigenRow>> {
    if es.dim() != space.dim() {
        return Err(Error::DimensionMismatch {
            expected: space.dim(),
            found: es.dim(),
        });
    }
    let sz = sz_diagonal(space);
    let groups = degeneracy_groups(es.energies(), DEGENERACY_TOL);
    // C is a product of single-site signs, so partners share Schmidt values
    let mut entropies: Vec<Option<f64>> = vec![None; es.len()];
    (0..es.len())
        .map(|i| {
            let support = es.support(i)?;
            let s_z = support.iter().map(|&(idx, a)| a * a * sz[idx]).sum();
            let s_half = match es.chiral_partner(i).and_then(|j| entropies[j]) {
                Some(s) => s,
                None => half_chain_entropy(space, &support)?,
            };
            entropies[i] = Some(s_half);
            Ok(EigenRow {
                index: i,
                energy: es.energy(i),
                s_z,
                s_half,
                degeneracy_group: groups[i],
            })
        })
        .collect()
}

pub fn write_eigenreport<W: Write>(rows: &[EigenRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "index,energy,S_z,S_half,degeneracy_group")?;
    for r in rows {
        writeln!(
            out,
            "{},{:.16e},{:.16e},{:.16e},{}",
            r.index, r.energy, r.s_z, r.s_half, r.degeneracy_group
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{Boundary, ConstraintSet};
    use crate::hamiltonian::build_hamiltonian;

    fn pbc(c: ConstraintSet, len: usize) -> ConstrainedBasis {
        ConstrainedBasis::enumerate(c, len, Boundary::Periodic).unwrap()
    }

    #[test]
    fn single_free_site() {
        let basis = pbc(ConstraintSet::free(), 1);
        let es = diagonalize(&build_hamiltonian(&basis)).unwrap();
        let e = es.energies();
        assert!((e[0] + 1.0).abs() < 1e-14 && e[1].abs() < 1e-14 && (e[2] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn residuals_and_orthonormality() {
        let basis = pbc(ConstraintSet::model_i(), 8);
        let h = build_hamiltonian(&basis);
        let es = diagonalize(&h).unwrap();
        assert_eq!(es.len(), basis.dim());
        assert!(es.max_residual(&h).unwrap() < 1e-10);
        assert!(es.orthonormality_defect().unwrap() < 1e-10);
        assert!(mirror_defect(es.energies()) < 1e-10);
    }

    #[test]
    fn momentum_spectrum_matches_dense() {
        let basis = pbc(ConstraintSet::model_iii(), 6);
        let es = diagonalize(&build_hamiltonian(&basis)).unwrap();
        let by_k = spectrum_by_momentum(&basis).unwrap();
        assert_eq!(by_k.len(), es.len());
        for (a, b) in by_k.iter().zip(es.energies()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn dense_limit_enforced() {
        let basis = pbc(ConstraintSet::model_iii(), 6);
        let h = build_hamiltonian(&basis);
        let opts = DiagonalizeOptions {
            dense_limit: 10,
            vectors: false,
        };
        assert!(matches!(diagonalize_with(&h, opts), Err(Error::TooLargeForFullSpectrum { .. })));
    }

    #[test]
    fn product_state_has_no_entanglement() {
        let basis = pbc(ConstraintSet::model_i(), 6);
        let mut v = vec![0.0; basis.dim()];
        v[0] = 1.0;
        assert_eq!(entanglement_entropy(&v, &basis, 3).unwrap(), 0.0);
    }

    #[test]
    fn special_state_n1() {
        let basis = pbc(ConstraintSet::model_i(), 8);
        let h = build_hamiltonian(&basis);
        for sign in [1, -1] {
            let st = build_special_state(&basis, 1, sign).unwrap();
            let hv = h.apply(&st.vector);
            let res: f64 = hv
                .iter()
                .zip(&st.vector)
                .map(|(a, b)| (a - st.energy() * b).powi(2))
                .sum::<f64>()
                .sqrt();
            assert!(res < 1e-12);
            assert!((magnetization(&st.vector, &basis).unwrap() - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn special_state_errors() {
        let basis = pbc(ConstraintSet::model_i(), 4);
        assert!(matches!(build_special_state(&basis, 1, 1), Err(Error::LengthTooSmall { .. })));
        let basis = pbc(ConstraintSet::model_i(), 11);
        assert!(matches!(build_special_state(&basis, 2, 1), Err(Error::OddLength(11))));
    }

    #[test]
    fn gibbs_limits() {
        let g = GibbsEnsemble::new(vec![-1.0, 0.0, 1.0], vec![3.0, 0.0, -3.0]).unwrap();
        let (e0, o0) = g.averages(0.0);
        assert!(e0.abs() < 1e-15 && o0.abs() < 1e-15);
        let b = g.beta_for(-0.5).unwrap();
        assert!((g.averages(b).0 + 0.5).abs() < 1e-10);
        assert!(matches!(g.beta_for(2.0), Err(Error::EnergyOutOfRange { .. })));
    }

    #[test]
    fn groups() {
        assert_eq!(degeneracy_groups(&[0.0, 1e-12, 1.0, 2.0, 2.0], 1e-8), vec![0, 0, 1, 2, 2]);
    }

    #[test]
    fn reversal_even_route_matches_gram() {
        for (c, len) in [(ConstraintSet::model_i(), 10), (ConstraintSet::model_iii(), 8)] {
            let b = pbc(c, len);
            let sector = SymmetrySector::build(&b, 0, Inversion::Even).unwrap();
            assert!(sector.reversal_even());
            let es = diagonalize(&sector.hamiltonian()).unwrap();
            for i in (0..es.len()).step_by(7) {
                let entries = sector.expand(&es.support(i).unwrap());
                let a = schmidt_spectrum(&entries, len, len / 2).unwrap();
                let b = schmidt_spectrum_reversal_even(&entries, len).unwrap();
                let n = a.len().max(b.len());
                for k in 0..n {
                    let x = a.get(k).copied().unwrap_or(0.0);
                    let y = b.get(k).copied().unwrap_or(0.0);
                    assert!((x - y).abs() < 1e-12, "state {i}: {x} vs {y}");
                }
            }
        }
    }

    #[test]
    fn chiral_route_matches_dense() {
        let b = pbc(ConstraintSet::model_iii(), 10);
        let sector = SymmetrySector::build(&b, 0, Inversion::Even).unwrap();
        let h = sector.hamiltonian();
        let indices: Vec<usize> = (0..h.dim()).collect();
        let colour = bipartition(&h, &indices).unwrap();
        let (mut chiral, vectors) = chiral_eigh(&h, &indices, &colour, true).unwrap();
        let (dense, _) = eigh(h.dense_block(&indices), false).unwrap();
        chiral.sort_by(f64::total_cmp);
        for (a, b) in chiral.iter().zip(&dense) {
            assert!((a - b).abs() < 1e-10);
        }
        let es = diagonalize(&h).unwrap();
        assert!(es.max_residual(&h).unwrap() < 1e-10);
        assert!(es.orthonormality_defect().unwrap() < 1e-10);
        assert_eq!(vectors.unwrap().ncols(), h.dim());
    }

    #[test]
    fn partner_entropies_match_direct_computation() {
        let b = pbc(ConstraintSet::model_iii(), 10);
        let sector = SymmetrySector::build(&b, 0, Inversion::Even).unwrap();
        let es = diagonalize(&sector.hamiltonian()).unwrap();
        assert!((0..es.len()).any(|i| es.chiral_partner(i).is_some()));
        let rows = eigenreport(&es, &sector).unwrap();
        for (i, row) in rows.iter().enumerate() {
            if let Some(j) = es.chiral_partner(i) {
                assert!((es.energy(i) + es.energy(j)).abs() < 1e-10);
            }
            let entries = sector.expand(&es.support(i).unwrap());
            let direct = von_neumann(&schmidt_spectrum(&entries, 10, 5).unwrap());
            assert!((row.s_half - direct).abs() < 1e-10, "state {i}");
        }
    }
}
