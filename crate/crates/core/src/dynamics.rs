//! Quench dynamics from `|Z2>`.

use std::io::Write;

use faer::{c64, Mat, Side};

use crate::basis::{Boundary, ConstrainedBasis, ConstraintSet, Preset, Spin, StateSpace};
use crate::error::{Error, Result};
use crate::fragmentation::{connected_components, label_sector_weight, sector_decomposition_model2};
use crate::fsa::{z2_config, z2_index, Z2Phase};
use crate::hamiltonian::{build_hamiltonian, motif_count, SparseOperator};
use crate::spectral::{schmidt_spectrum_complex, von_neumann};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Method {
    /// Dense eigendecomposition of the fragment containing `|Z2>`.
    Spectral,
    /// Lanczos propagation step by step.
    #[default]
    KrylovStep,
}

#[derive(Clone, Copy, Debug)]
pub struct QuenchOptions {
    pub t_max: f64,
    pub dt: f64,
    pub method: Method,
    pub phase: Z2Phase,
    /// Local error target of each Krylov step.
    pub krylov_tol: f64,
    pub krylov_max_dim: usize,
    /// Largest fragment the spectral method will diagonalize.
    pub dense_limit: usize,
    /// Left block of the entanglement cut; `None` means `L/2`.
    pub cut: Option<usize>,
}

impl Default for QuenchOptions {
    fn default() -> Self {
        QuenchOptions {
            t_max: 30.0,
            dt: 0.05,
            method: Method::KrylovStep,
            phase: Z2Phase::default(),
            krylov_tol: 1e-12,
            krylov_max_dim: 40,
            dense_limit: 8000,
            cut: None,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct QuenchResult {
    pub label: String,
    pub len: usize,
    pub times: Vec<f64>,
    pub fidelity: Vec<f64>,
    pub o_avg: Vec<f64>,
    pub s_half: Vec<f64>,
    pub energy: Vec<f64>,
    pub norm: Vec<f64>,
}

impl QuenchResult {
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "t,fidelity,O_avg,S_half,energy,norm")?;
        for i in 0..self.times.len() {
            writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                self.times[i], self.fidelity[i], self.o_avg[i], self.s_half[i], self.energy[i], self.norm[i]
            )?;
        }
        Ok(())
    }

    /// Largest `|norm - 1|` and largest drift of `<H>` from its initial value.
    pub fn conservation_defects(&self) -> (f64, f64) {
        let norm = self.norm.iter().map(|n| (n - 1.0).abs()).fold(0.0, f64::max);
        let e0 = self.energy.first().copied().unwrap_or(0.0);
        let energy = self.energy.iter().map(|e| (e - e0).abs()).fold(0.0, f64::max);
        (norm, energy)
    }

    /// Maximum fidelity for `t` in `[from, to]`.
    pub fn max_fidelity_in(&self, from: f64, to: f64) -> f64 {
        self.times
            .iter()
            .zip(&self.fidelity)
            .filter(|(t, _)| **t >= from - 1e-12 && **t <= to + 1e-12)
            .map(|(_, f)| *f)
            .fold(0.0, f64::max)
    }
}

/// Bond-averaged `|++><++|` on neighbouring sites.
pub fn pp_density<S: StateSpace + ?Sized>(space: &S) -> Vec<f64> {
    let bonds = space.boundary().bonds(space.chain_length()).len().max(1) as f64;
    (0..space.dim())
        .map(|i| motif_count(&space.label_config(i), &[Spin::Plus, Spin::Plus], space.boundary()) as f64 / bonds)
        .collect()
}

struct Observer<'a> {
    basis: &'a ConstrainedBasis,
    h: &'a SparseOperator,
    z2: usize,
    o: Vec<f64>,
    cut: usize,
    scratch: Vec<c64>,
}

impl Observer<'_> {
    fn record(&mut self, t: f64, psi: &[c64], out: &mut QuenchResult) -> Result<()> {
        let norm2: f64 = psi.iter().map(|a| a.norm_sqr()).sum();
        self.h.apply_complex_into(psi, &mut self.scratch);
        let energy: f64 = psi.iter().zip(&self.scratch).map(|(a, b)| (a.conj() * b).re).sum();
        let o: f64 = psi.iter().zip(&self.o).map(|(a, w)| a.norm_sqr() * w).sum();
        let entries: Vec<(u64, c64)> = psi
            .iter()
            .enumerate()
            .filter(|(_, a)| a.norm_sqr() > 0.0)
            .map(|(i, &a)| (self.basis.code(i), a))
            .collect();
        let len = self.basis.len();
        let s = if len > 1 {
            von_neumann(&schmidt_spectrum_complex(&entries, len, self.cut)?)
        } else {
            0.0
        };
        out.times.push(t);
        out.fidelity.push(psi[self.z2].norm_sqr());
        out.o_avg.push(o);
        out.s_half.push(s);
        out.energy.push(energy);
        out.norm.push(norm2.sqrt());
        Ok(())
    }
}

/// `exp(-i T dt) e_1` for a real symmetric tridiagonal `T`.
fn small_propagator(alpha: &[f64], beta: &[f64], dt: f64) -> Result<Vec<c64>> {
    let m = alpha.len();
    let t = Mat::from_fn(m, m, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    let eig = t
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    let u = eig.U();
    let mut y = vec![c64::new(0.0, 0.0); m];
    for k in 0..m {
        let phase = c64::new(0.0, -eig.S()[k] * dt).exp() * u[(0, k)];
        for (i, yi) in y.iter_mut().enumerate() {
            *yi += phase * u[(i, k)];
        }
    }
    Ok(y)
}

fn dot(a: &[c64], b: &[c64]) -> c64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

struct Lanczos {
    vectors: Vec<Vec<c64>>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
    norm: f64,
}

impl Lanczos {
    /// Grow a Krylov space from `psi` until the propagator error estimate at
    /// time `horizon` drops below `tol`; `None` if `max_dim` is not enough.
    fn build(h: &SparseOperator, psi: &[c64], horizon: f64, tol: f64, max_dim: usize) -> Result<Option<Lanczos>> {
        let norm = dot(psi, psi).re.sqrt();
        let dim = psi.len();
        let mut lz = Lanczos {
            vectors: vec![psi.iter().map(|a| a / norm).collect()],
            alpha: Vec::new(),
            beta: Vec::new(),
            norm,
        };
        let mut w = vec![c64::new(0.0, 0.0); dim];
        for j in 0..max_dim.min(dim) {
            h.apply_complex_into(&lz.vectors[j], &mut w);
            lz.alpha.push(dot(&lz.vectors[j], &w).re);
            // Gram-Schmidt against the whole basis, repeated on cancellation
            let mut before = dot(&w, &w).re.sqrt();
            let mut b;
            loop {
                for v in &lz.vectors {
                    let c = dot(v, &w);
                    for (x, y) in w.iter_mut().zip(v) {
                        *x -= c * y;
                    }
                }
                b = dot(&w, &w).re.sqrt();
                if b > 0.7 * before {
                    break;
                }
                before = b;
            }
            let y = small_propagator(&lz.alpha, &lz.beta, horizon)?;
            if b * y[j].norm() * norm < tol || b < 1e-13 || j + 1 == dim {
                return Ok(Some(lz));
            }
            lz.beta.push(b);
            lz.vectors.push(w.iter().map(|a| a / b).collect());
        }
        Ok(None)
    }

    fn propagate(&self, t: f64, psi: &mut [c64]) -> Result<()> {
        let y = small_propagator(&self.alpha, &self.beta, t)?;
        psi.iter_mut().for_each(|a| *a = c64::new(0.0, 0.0));
        for (v, c) in self.vectors.iter().zip(&y) {
            let c = c * self.norm;
            for (a, x) in psi.iter_mut().zip(v) {
                *a += c * x;
            }
        }
        Ok(())
    }
}

/// Advance `psi` by `dt` with a Lanczos propagator, halving the step until
/// the a posteriori error estimate falls below `tol`.
pub fn krylov_step(h: &SparseOperator, psi: &mut [c64], dt: f64, tol: f64, max_dim: usize) -> Result<()> {
    if dot(psi, psi).re == 0.0 {
        return Ok(());
    }
    match Lanczos::build(h, psi, dt, tol, max_dim)? {
        Some(lz) => lz.propagate(dt, psi),
        None => {
            krylov_step(h, psi, dt / 2.0, tol / 2.0, max_dim)?;
            krylov_step(h, psi, dt / 2.0, tol / 2.0, max_dim)
        }
    }
}

/// Grid points served by one Krylov space before it is rebuilt.
const KRYLOV_CHUNK: usize = 8;

/// Evolve through `steps` grid points of spacing `dt`, calling `visit` after
/// each. One Krylov space covers several grid points when it converges for
/// the whole chunk.
fn krylov_grid(
    h: &SparseOperator,
    psi: &mut [c64],
    dt: f64,
    steps: usize,
    tol: f64,
    max_dim: usize,
    mut visit: impl FnMut(usize, &[c64]) -> Result<()>,
) -> Result<()> {
    let mut done = 0;
    let mut start = psi.to_vec();
    while done < steps {
        let mut chunk = KRYLOV_CHUNK.min(steps - done);
        let lz = loop {
            if let Some(lz) = Lanczos::build(h, &start, chunk as f64 * dt, tol, max_dim)? {
                break Some(lz);
            }
            if chunk == 1 {
                break None;
            }
            chunk /= 2;
        };
        match lz {
            Some(lz) => {
                for s in 1..=chunk {
                    lz.propagate(s as f64 * dt, psi)?;
                    visit(done + s, psi)?;
                }
            }
            None => {
                psi.copy_from_slice(&start);
                krylov_step(h, psi, dt, tol, max_dim)?;
                visit(done + 1, psi)?;
            }
        }
        done += chunk;
        start.copy_from_slice(psi);
    }
    Ok(())
}

/// Evolve `|Z2>` under `h` on `basis` and record the observables on the grid
/// `0, dt, ..., t_max`.
pub fn evolve_z2(h: &SparseOperator, basis: &ConstrainedBasis, options: QuenchOptions) -> Result<QuenchResult> {
    if h.dim() != basis.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            found: h.dim(),
        });
    }
    if !(options.dt > 0.0) || !(options.t_max >= 0.0) {
        return Err(Error::InvalidArgument("need dt > 0 and t_max >= 0".into()));
    }
    let len = basis.len();
    let z2 = z2_index(basis, options.phase)?;
    let cut = options.cut.unwrap_or(len / 2);
    let steps = (options.t_max / options.dt).round() as usize;
    let mut obs = Observer {
        basis,
        h,
        z2,
        o: pp_density(basis),
        cut,
        scratch: vec![c64::new(0.0, 0.0); basis.dim()],
    };
    let mut out = QuenchResult {
        label: basis.constraint().label(),
        len,
        ..QuenchResult::default()
    };
    let mut psi = vec![c64::new(0.0, 0.0); basis.dim()];
    psi[z2] = c64::new(1.0, 0.0);
    match options.method {
        Method::KrylovStep => {
            obs.record(0.0, &psi, &mut out)?;
            let dt = options.dt;
            krylov_grid(h, &mut psi, dt, steps, options.krylov_tol, options.krylov_max_dim, |n, psi| {
                obs.record(n as f64 * dt, psi, &mut out)
            })?;
        }
        Method::Spectral => {
            let fragment = connected_components(h)
                .into_iter()
                .find(|c| c.binary_search(&z2).is_ok())
                .expect("every state lies in some component");
            if fragment.len() > options.dense_limit {
                return Err(Error::MethodInfeasible {
                    dim: fragment.len(),
                    limit: options.dense_limit,
                });
            }
            let block = h.dense_block(&fragment);
            let eig = block
                .self_adjoint_eigen(Side::Lower)
                .map_err(|e| Error::Eigen(format!("{e:?}")))?;
            let u = eig.U();
            let n = fragment.len();
            let local = fragment.binary_search(&z2).unwrap();
            let weights: Vec<f64> = (0..n).map(|k| u[(local, k)]).collect();
            obs.record(0.0, &psi, &mut out)?;
            for step in 1..=steps {
                let t = step as f64 * options.dt;
                let coeffs: Vec<c64> = (0..n)
                    .map(|k| c64::new(0.0, -eig.S()[k] * t).exp() * weights[k])
                    .collect();
                for (r, &idx) in fragment.iter().enumerate() {
                    psi[idx] = (0..n).map(|k| coeffs[k] * u[(r, k)]).sum();
                }
                obs.record(t, &psi, &mut out)?;
            }
        }
    }
    Ok(out)
}

/// Weight of `|Z2>` in every Model-II label sector, from exact local overlaps.
pub fn z2_sector_weights_model2(basis: &ConstrainedBasis) -> Result<Vec<(Vec<i8>, f64)>> {
    if basis.constraint().tag() != Preset::ModelII {
        return Err(Error::UnsupportedModel(basis.constraint().label()));
    }
    let len = basis.len();
    if len >= 31 {
        return Err(Error::LengthTooLarge {
            length: len,
            required: format!("2^{len} label sectors"),
            budget: 1 << 30,
        });
    }
    let z2 = z2_config(len, Z2Phase::default());
    (0u32..1 << len)
        .map(|mask| {
            let labels: Vec<i8> = (0..len).map(|i| if mask >> i & 1 == 1 { 1 } else { -1 }).collect();
            let w = label_sector_weight(&labels, basis.boundary(), &z2)?;
            Ok((labels, w))
        })
        .collect()
}

/// Projection of `|Z2>` on a label sector computed from the sector vectors.
pub fn z2_sector_projection(basis: &ConstrainedBasis, labels: &[i8]) -> Result<f64> {
    let z2 = z2_index(basis, Z2Phase::default())?;
    let sector = sector_decomposition_model2(basis, labels)?;
    Ok(sector
        .vectors
        .iter()
        .map(|v| v.iter().find(|e| e.0 == z2).map_or(0.0, |e| e.1 * e.1))
        .sum())
}

/// Least-squares slope of `S_half(t)` over `t` in `window`.
pub fn entropy_slope(result: &QuenchResult, window: (f64, f64)) -> f64 {
    let pts: Vec<(f64, f64)> = result
        .times
        .iter()
        .zip(&result.s_half)
        .filter(|(t, _)| **t >= window.0 - 1e-12 && **t <= window.1 + 1e-12)
        .map(|(t, s)| (*t, *s))
        .collect();
    let n = pts.len() as f64;
    if n < 2.0 {
        return 0.0;
    }
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ms = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let cov: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - ms)).sum();
    let var: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    cov / var
}

/// Early-time window used for entropy slopes.
pub const ENTROPY_WINDOW: (f64, f64) = (0.5, 2.0);

#[derive(Clone, Debug)]
pub struct GrowthReport {
    /// `(label, slope)` in input order.
    pub slopes: Vec<(String, f64)>,
    /// Whether the slopes increase strictly in input order.
    pub increasing: bool,
}

/// Entropy growth rates of several quenches, expected in increasing order.
pub fn entropy_growth_comparison(results: &[&QuenchResult], window: (f64, f64)) -> GrowthReport {
    let slopes: Vec<(String, f64)> = results
        .iter()
        .map(|r| (r.label.clone(), entropy_slope(r, window)))
        .collect();
    let increasing = slopes.windows(2).all(|w| w[0].1 < w[1].1);
    GrowthReport { slopes, increasing }
}

/// Enumerate the basis, build `H` and evolve `|Z2>`.
pub fn quench(constraint: ConstraintSet, len: usize, boundary: Boundary, options: QuenchOptions) -> Result<QuenchResult> {
    let basis = ConstrainedBasis::enumerate(constraint, len, boundary)?;
    let h = build_hamiltonian(&basis);
    evolve_z2(&h, &basis, options)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts(method: Method, t_max: f64) -> QuenchOptions {
        QuenchOptions {
            t_max,
            method,
            ..QuenchOptions::default()
        }
    }

    #[test]
    fn krylov_matches_spectral() {
        let basis = ConstrainedBasis::enumerate(ConstraintSet::model_iii(), 6, Boundary::Periodic).unwrap();
        let h = build_hamiltonian(&basis);
        let a = evolve_z2(&h, &basis, opts(Method::Spectral, 5.0)).unwrap();
        let b = evolve_z2(&h, &basis, opts(Method::KrylovStep, 5.0)).unwrap();
        for i in 0..a.times.len() {
            assert!((a.fidelity[i] - b.fidelity[i]).abs() < 1e-9);
            assert!((a.s_half[i] - b.s_half[i]).abs() < 1e-8);
        }
        assert_eq!(a.fidelity[0], 1.0);
        assert_eq!(a.o_avg[0], 0.0);
        let (n, e) = b.conservation_defects();
        assert!(n < 1e-10 && e < 1e-10);
    }

    #[test]
    fn free_chain_stays_unentangled() {
        let r = quench(ConstraintSet::free(), 6, Boundary::Periodic, opts(Method::KrylovStep, 3.0)).unwrap();
        assert!(r.s_half.iter().all(|&s| s.abs() < 1e-9));
    }

    #[test]
    fn spectral_limit() {
        let basis = ConstrainedBasis::enumerate(ConstraintSet::model_iii(), 6, Boundary::Periodic).unwrap();
        let h = build_hamiltonian(&basis);
        let o = QuenchOptions {
            dense_limit: 5,
            method: Method::Spectral,
            ..QuenchOptions::default()
        };
        assert!(matches!(evolve_z2(&h, &basis, o), Err(Error::MethodInfeasible { .. })));
    }

    #[test]
    fn model2_weights_uniform() {
        let basis = ConstrainedBasis::enumerate(ConstraintSet::model_ii(), 4, Boundary::Periodic).unwrap();
        let w = z2_sector_weights_model2(&basis).unwrap();
        assert_eq!(w.len(), 16);
        for (labels, x) in &w {
            assert_eq!(*x, 1.0 / 16.0);
            assert!((z2_sector_projection(&basis, labels).unwrap() - 1.0 / 16.0).abs() < 1e-15);
        }
    }
}
