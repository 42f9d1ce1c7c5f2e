//! Forward scattering approximation (FSA) from the `|Z2>` state.
//!
//! `H` is split as `H+ + H-`, where `H+` collects the flips that move a site
//! away from its `|Z2>` value (`|->` on even 0-based sites, `|+>` on odd
//! ones by default). Then `H-|Z2> = 0`, and `H+` applied `2L` times carries
//! `|Z2>` to its mirror image `|Z2bar>`.

use std::io::Write;

use faer::{Mat, Side};
use num_rational::Ratio;

use crate::basis::{ConstrainedBasis, Preset, Spin, SpinConfig, StateSpace};
use crate::error::{Error, Result};
use crate::hamiltonian::{flip_targets, SparseOperator};

/// Errors below this count as zero when locating the first inexact step.
pub const EXACT_TOL: f64 = 1e-12;

/// Which sublattice carries `|+>` in `|Z2>`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Z2Phase {
    /// `|-+-+...>`: `|+>` on odd 0-based sites.
    #[default]
    PlusOnOdd,
    /// `|+-+-...>`.
    PlusOnEven,
}

impl Z2Phase {
    pub fn flipped(self) -> Self {
        match self {
            Z2Phase::PlusOnOdd => Z2Phase::PlusOnEven,
            Z2Phase::PlusOnEven => Z2Phase::PlusOnOdd,
        }
    }
}

pub fn z2_config(len: usize, phase: Z2Phase) -> SpinConfig {
    let odd_plus = phase == Z2Phase::PlusOnOdd;
    let spins: Vec<Spin> = (0..len)
        .map(|i| if (i % 2 == 1) == odd_plus { Spin::Plus } else { Spin::Minus })
        .collect();
    SpinConfig::from_spins(&spins)
}

/// Position of `|Z2>` in the basis.
pub fn z2_index(basis: &ConstrainedBasis, phase: Z2Phase) -> Result<usize> {
    basis
        .index_of(z2_config(basis.len(), phase).code())
        .ok_or(Error::Z2NotInBasis)
}

/// Whether `delta_n` is the norm or the squared norm of the mismatch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum DeltaConvention {
    Norm,
    #[default]
    NormSquared,
}

impl DeltaConvention {
    pub fn tag(self) -> &'static str {
        match self {
            DeltaConvention::Norm => "norm",
            DeltaConvention::NormSquared => "norm2",
        }
    }
}

#[derive(Clone, Debug)]
pub struct HamiltonianSplit {
    pub plus: SparseOperator,
    pub minus: SparseOperator,
    pub z2: usize,
    pub z2_bar: usize,
    pub phase: Z2Phase,
    pub len: usize,
}

pub fn split_hamiltonian(basis: &ConstrainedBasis, phase: Z2Phase) -> Result<HamiltonianSplit> {
    let len = basis.len();
    if len % 2 == 1 {
        return Err(Error::OddLength(len));
    }
    let z2 = z2_index(basis, phase)?;
    let z2_bar = z2_index(basis, phase.flipped())?;
    let target = z2_config(len, phase);
    let distance = |c: SpinConfig, site: usize| (c.get(site).m() - target.get(site).m()).abs();
    // H+ row j holds the columns i with i -> j moving away from |Z2>
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); basis.dim()];
    for i in 0..basis.dim() {
        let c = basis.config(i);
        for (site, j) in flip_targets(basis, c) {
            if distance(basis.config(j), site) > distance(c, site) {
                rows[j].push((i, std::f64::consts::FRAC_1_SQRT_2));
            }
        }
    }
    for row in rows.iter_mut() {
        row.sort_unstable_by_key(|e| e.0);
    }
    let plus = SparseOperator::from_sorted_rows(basis.dim(), rows, false);
    let minus = plus.transpose();
    Ok(HamiltonianSplit {
        plus,
        minus,
        z2,
        z2_bar,
        phase,
        len,
    })
}

#[derive(Clone, Copy, Debug)]
pub struct FsaOptions {
    pub convention: DeltaConvention,
    pub retain_vectors: bool,
}

impl Default for FsaOptions {
    fn default() -> Self {
        FsaOptions {
            convention: DeltaConvention::NormSquared,
            retain_vectors: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct FsaRun {
    pub len: usize,
    pub convention: DeltaConvention,
    /// `beta_1 .. beta_2L`.
    pub beta: Vec<f64>,
    /// `delta_1 .. delta_2L`.
    pub delta: Vec<f64>,
    /// `||H+ v_2L||`, zero when the iteration closes.
    pub terminal_norm: f64,
    /// `|<Z2bar|v_2L>|`.
    pub final_overlap: f64,
    pub vectors: Option<Vec<Vec<f64>>>,
    pub z2: usize,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn forward_scatter(split: &HamiltonianSplit, options: FsaOptions) -> Result<FsaRun> {
    let steps = 2 * split.len;
    let dim = split.plus.dim();
    let mut prev = vec![0.0; dim];
    prev[split.z2] = 1.0;
    let mut next = vec![0.0; dim];
    let mut back = vec![0.0; dim];
    let mut beta = Vec::with_capacity(steps);
    let mut delta = Vec::with_capacity(steps);
    let mut vectors = options.retain_vectors.then(|| vec![prev.clone()]);
    for n in 1..=steps {
        split.plus.apply_into(&prev, &mut next);
        let b = norm(&next);
        if b < EXACT_TOL {
            return Err(Error::PrematureAnnihilation { step: n, expected: steps });
        }
        next.iter_mut().for_each(|x| *x /= b);
        split.minus.apply_into(&next, &mut back);
        let mismatch2: f64 = back.iter().zip(&prev).map(|(h, p)| (h - b * p).powi(2)).sum();
        delta.push(match options.convention {
            DeltaConvention::NormSquared => mismatch2,
            DeltaConvention::Norm => mismatch2.sqrt(),
        });
        beta.push(b);
        std::mem::swap(&mut prev, &mut next);
        if let Some(vs) = vectors.as_mut() {
            vs.push(prev.clone());
        }
    }
    split.plus.apply_into(&prev, &mut next);
    Ok(FsaRun {
        len: split.len,
        convention: options.convention,
        beta,
        delta,
        terminal_norm: norm(&next),
        final_overlap: prev[split.z2_bar].abs(),
        vectors,
        z2: split.z2,
    })
}

impl FsaRun {
    /// First step with a nonzero error, 1-based.
    pub fn first_error_step(&self) -> Option<usize> {
        self.delta.iter().position(|&d| d > EXACT_TOL).map(|i| i + 1)
    }

    pub fn delta_total(&self) -> f64 {
        self.delta.iter().sum()
    }

    /// Tridiagonal `(2L+1)`-dimensional FSA Hamiltonian.
    pub fn hamiltonian(&self) -> Mat<f64> {
        let n = self.beta.len() + 1;
        Mat::from_fn(n, n, |i, j| {
            if i + 1 == j {
                self.beta[i]
            } else if j + 1 == i {
                self.beta[j]
            } else {
                0.0
            }
        })
    }

    /// Mutual overlaps of the retained vectors; largest deviation from identity.
    pub fn orthonormality_defect(&self) -> Result<f64> {
        let vs = self.vectors.as_ref().ok_or(Error::VectorsNotRetained)?;
        let mut worst = 0.0f64;
        for (a, va) in vs.iter().enumerate() {
            for (b, vb) in vs.iter().enumerate().skip(a) {
                let dot: f64 = va.iter().zip(vb).map(|(x, y)| x * y).sum();
                worst = worst.max((dot - if a == b { 1.0 } else { 0.0 }).abs());
            }
        }
        Ok(worst)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "n,beta_n,delta_n")?;
        for (i, (b, d)) in self.beta.iter().zip(&self.delta).enumerate() {
            writeln!(out, "{},{b:.16e},{d:.16e}", i + 1)?;
        }
        Ok(())
    }
}

/// One eigenstate of the FSA Hamiltonian.
#[derive(Clone, Debug)]
pub struct FsaEigenstate {
    pub energy: f64,
    pub z2_overlap: f64,
    /// The eigenstate lifted into the full basis.
    pub vector: Vec<f64>,
}

/// Diagonalize `H_FSA`, lift its eigenvectors through the FSA vectors and
/// report `|<Z2|psi>|^2`.
pub fn fsa_spectrum_and_overlap(run: &FsaRun) -> Result<Vec<FsaEigenstate>> {
    let vs = run.vectors.as_ref().ok_or(Error::VectorsNotRetained)?;
    let eig = run
        .hamiltonian()
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    let u = eig.U();
    let dim = vs[0].len();
    Ok((0..u.ncols())
        .map(|k| {
            let mut vector = vec![0.0; dim];
            for (n, v) in vs.iter().enumerate() {
                let c = u[(n, k)];
                for (x, y) in vector.iter_mut().zip(v) {
                    *x += c * y;
                }
            }
            FsaEigenstate {
                energy: eig.S()[k],
                z2_overlap: vector[run.z2].powi(2),
                vector,
            }
        })
        .collect())
}

/// First nonzero FSA error as an exact rational, squared-norm convention.
pub fn analytic_first_error_exact(preset: Preset, len: usize) -> Result<Ratio<i128>> {
    let l = len as i128;
    let (num, den) = match preset {
        Preset::ModelI => (
            12 * (l.pow(3) - 6 * l.pow(2) + 11 * l - 18),
            (l - 1) * (l - 2) * (l - 3) * (5 * l.pow(4) - 50 * l.pow(3) + 175 * l.pow(2) - 250 * l + 144),
        ),
        Preset::ModelII => (50 * (2 * l - 9), (2 * l - 5) * (6 * l * l - 45 * l + 95)),
        Preset::ModelIII => (1, 4 * (4 * l - 11)),
        other => return Err(Error::UnsupportedModel(other.name().into())),
    };
    if den <= 0 || num <= 0 {
        return Err(Error::LengthTooSmall { length: len, min: 4 });
    }
    Ok(Ratio::new(num, den))
}

/// Step at which the first FSA error appears.
pub fn analytic_first_error_step(preset: Preset) -> Result<usize> {
    match preset {
        Preset::ModelI => Ok(5),
        Preset::ModelII => Ok(3),
        Preset::ModelIII => Ok(2),
        other => Err(Error::UnsupportedModel(other.name().into())),
    }
}

pub fn analytic_first_error(preset: Preset, len: usize) -> Result<f64> {
    let r = analytic_first_error_exact(preset, len)?;
    Ok(*r.numer() as f64 / *r.denom() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{Boundary, ConstraintSet};
    use crate::hamiltonian::build_hamiltonian;

    fn basis(c: ConstraintSet, len: usize) -> ConstrainedBasis {
        ConstrainedBasis::enumerate(c, len, Boundary::Periodic).unwrap()
    }

    #[test]
    fn split_recombines() {
        for c in [ConstraintSet::model_i(), ConstraintSet::model_ii(), ConstraintSet::model_iii()] {
            let b = basis(c, 6);
            let split = split_hamiltonian(&b, Z2Phase::default()).unwrap();
            let h = build_hamiltonian(&b);
            assert_eq!(split.plus.add(&split.minus).sub(&h).max_abs(), 0.0);
            let mut z2 = vec![0.0; b.dim()];
            z2[split.z2] = 1.0;
            assert!(split.minus.apply(&z2).iter().all(|&x| x == 0.0));
            let mut bar = vec![0.0; b.dim()];
            bar[split.z2_bar] = 1.0;
            assert!(split.plus.apply(&bar).iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn first_errors_match_closed_form() {
        for (c, nf) in [
            (ConstraintSet::model_i(), 5),
            (ConstraintSet::model_ii(), 3),
            (ConstraintSet::model_iii(), 2),
        ] {
            let b = basis(c, 8);
            let run = forward_scatter(&split_hamiltonian(&b, Z2Phase::default()).unwrap(), FsaOptions::default())
                .unwrap();
            assert_eq!(run.first_error_step(), Some(nf));
            let expect = analytic_first_error(c.tag(), 8).unwrap();
            assert!((run.delta[nf - 1] - expect).abs() < 1e-10);
            assert!(run.terminal_norm < 1e-12);
            assert!((run.final_overlap - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn free_chain_is_exact() {
        let b = basis(ConstraintSet::free(), 6);
        let run = forward_scatter(&split_hamiltonian(&b, Z2Phase::default()).unwrap(), FsaOptions::default()).unwrap();
        assert!(run.delta.iter().all(|&d| d < 1e-12));
        assert_eq!(run.first_error_step(), None);
    }

    #[test]
    fn exact_rationals() {
        assert_eq!(analytic_first_error_exact(Preset::ModelIII, 12).unwrap(), Ratio::new(1, 148));
        assert_eq!(
            analytic_first_error_exact(Preset::ModelII, 12).unwrap(),
            Ratio::new(50 * 15, 19 * (6 * 144 - 540 + 95))
        );
    }

    #[test]
    fn odd_length_rejected() {
        let b = basis(ConstraintSet::model_i(), 7);
        assert!(matches!(split_hamiltonian(&b, Z2Phase::default()), Err(Error::OddLength(7))));
    }

    #[test]
    fn fsa_spectrum_symmetric() {
        let b = basis(ConstraintSet::model_i(), 6);
        let opts = FsaOptions {
            retain_vectors: true,
            ..FsaOptions::default()
        };
        let run = forward_scatter(&split_hamiltonian(&b, Z2Phase::default()).unwrap(), opts).unwrap();
        assert!(run.orthonormality_defect().unwrap() < 1e-10);
        let states = fsa_spectrum_and_overlap(&run).unwrap();
        assert_eq!(states.len(), 13);
        let energies: Vec<f64> = states.iter().map(|s| s.energy).collect();
        for i in 0..13 {
            assert!((energies[i] + energies[12 - i]).abs() < 1e-10);
        }
        let total: f64 = states.iter().map(|s| s.z2_overlap).sum();
        assert!((total - 1.0).abs() < 1e-10);
        let no_vectors = forward_scatter(&split_hamiltonian(&b, Z2Phase::default()).unwrap(), FsaOptions::default())
            .unwrap();
        assert!(matches!(fsa_spectrum_and_overlap(&no_vectors), Err(Error::VectorsNotRetained)));
    }
}
