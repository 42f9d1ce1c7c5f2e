//! Translation and inversion sectors of a periodic basis, and the
//! particle-hole operator `C = prod_i (2 (S^z_i)^2 - 1)`.
//!
//! A sector vector is the projection of one orbit representative,
//! `|r_k,p> ~ sum_g chi(g) g|r>`, over the group generated by the cyclic
//! shift `T` and (optionally) the inversion `I`, with `chi(T^j) = e^{-2 pi i k j / L}`
//! and `chi(I) = p`. Representatives are the smallest code in their orbit.
//! Inversion is only resolved at `k = 0` and `k = L/2`, where it commutes
//! with the momentum projector and the sector Hamiltonian is real.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::io::Write;

use faer::{c64, Mat};

use crate::basis::{Boundary, ConstrainedBasis, ConstraintSet, Spin, SpinConfig, StateSpace};
use crate::error::{Error, Result};
use crate::hamiltonian::{flip_targets, SparseOperator};

const DROP_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Inversion {
    Even,
    Odd,
    Unresolved,
}

impl Inversion {
    fn parity(self) -> Option<f64> {
        match self {
            Inversion::Even => Some(1.0),
            Inversion::Odd => Some(-1.0),
            Inversion::Unresolved => None,
        }
    }
}

impl fmt::Display for Inversion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Inversion::Even => "+1",
            Inversion::Odd => "-1",
            Inversion::Unresolved => "NONE",
        })
    }
}

/// Which mirror operation plays the role of `I`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum InversionAxis {
    /// `i -> L - 1 - i`: bond centred for even `L`, site centred for odd `L`.
    #[default]
    Reversal,
    /// `i -> -i mod L`: always centred on site 0.
    SiteZero,
}

impl InversionAxis {
    fn apply(self, config: SpinConfig) -> SpinConfig {
        match self {
            InversionAxis::Reversal => config.reflect(),
            InversionAxis::SiteZero => config.reflect().translate(1),
        }
    }
}

/// One orthonormal symmetry-adapted basis vector.
#[derive(Clone, Debug)]
pub struct SectorVector {
    pub representative: SpinConfig,
    /// Norm of the unnormalised projection `sum_g chi(g) g|r>`.
    pub weight: f64,
    /// `(parent index, amplitude)` pairs.
    pub members: Vec<(usize, f64)>,
}

/// Real symmetry sector (`k = 0` or `k = L/2`) of a periodic basis.
#[derive(Clone, Debug)]
pub struct SymmetrySector<'a> {
    parent: &'a ConstrainedBasis,
    momentum: usize,
    inversion: Inversion,
    axis: InversionAxis,
    vectors: Vec<SectorVector>,
    owner: Vec<u32>,
    owner_amp: Vec<f64>,
}

const NO_OWNER: u32 = u32::MAX;

fn check_sector_args(basis: &ConstrainedBasis, k: usize, inversion: Inversion) -> Result<()> {
    if basis.boundary() != Boundary::Periodic {
        return Err(Error::RequiresPbc);
    }
    let len = basis.len();
    if k >= len {
        return Err(Error::InvalidMomentum { k, length: len });
    }
    if inversion != Inversion::Unresolved {
        if !(k == 0 || 2 * k == len) {
            return Err(Error::InversionIncompatible { k, length: len });
        }
        if !is_reflection_symmetric(basis.constraint()) {
            return Err(Error::InvalidArgument(
                "constraint set is not mirror symmetric; inversion is not a symmetry".into(),
            ));
        }
    }
    Ok(())
}

fn is_reflection_symmetric(c: &ConstraintSet) -> bool {
    Spin::ALL
        .iter()
        .all(|&a| Spin::ALL.iter().all(|&b| c.forbids(a, b) == c.forbids(b, a)))
}

/// Projected orbit of one representative with complex characters.
fn project_orbit(
    basis: &ConstrainedBasis,
    rep: SpinConfig,
    k: usize,
    parity: Option<f64>,
    axis: InversionAxis,
) -> Vec<(usize, c64)> {
    let len = basis.len();
    let real = 2 * k % len == 0;
    let mut acc: Vec<(usize, c64)> = Vec::with_capacity(2 * len);
    let mut push = |config: SpinConfig, amp: c64| {
        let idx = basis.index_of(config.code()).expect("symmetry image left the basis");
        match acc.iter_mut().find(|e| e.0 == idx) {
            Some(e) => e.1 += amp,
            None => acc.push((idx, amp)),
        }
    };
    for j in 0..len {
        // exact +-1 characters in the real sectors
        let chi = if real {
            c64::new(if k != 0 && j % 2 == 1 { -1.0 } else { 1.0 }, 0.0)
        } else {
            let angle = -2.0 * PI * (k * j) as f64 / len as f64;
            c64::new(angle.cos(), angle.sin())
        };
        let shifted = rep.translate(j);
        push(shifted, chi);
        if let Some(p) = parity {
            push(axis.apply(shifted), chi * p);
        }
    }
    acc.sort_unstable_by_key(|e| e.0);
    acc
}

/// Walk the parent basis in ascending order and collect each orbit once.
fn orbit_representatives(
    basis: &ConstrainedBasis,
    with_inversion: bool,
    axis: InversionAxis,
) -> Vec<SpinConfig> {
    let len = basis.len();
    let mut seen = vec![false; basis.dim()];
    let mut reps = Vec::new();
    for i in 0..basis.dim() {
        if seen[i] {
            continue;
        }
        let rep = basis.config(i);
        reps.push(rep);
        for j in 0..len {
            let shifted = rep.translate(j);
            seen[basis.index_of(shifted.code()).expect("translation left the basis")] = true;
            if with_inversion {
                let mirrored = axis.apply(shifted);
                seen[basis.index_of(mirrored.code()).expect("inversion left the basis")] = true;
            }
        }
    }
    reps
}

impl<'a> SymmetrySector<'a> {
    pub fn build(parent: &'a ConstrainedBasis, k: usize, inversion: Inversion) -> Result<Self> {
        Self::build_with_axis(parent, k, inversion, InversionAxis::default())
    }

    pub fn build_with_axis(
        parent: &'a ConstrainedBasis,
        k: usize,
        inversion: Inversion,
        axis: InversionAxis,
    ) -> Result<Self> {
        check_sector_args(parent, k, inversion)?;
        let len = parent.len();
        if 2 * k % len != 0 {
            return Err(Error::RequiresRealSector { k });
        }
        let parity = inversion.parity();
        let reps = orbit_representatives(parent, parity.is_some(), axis);
        let mut vectors = Vec::new();
        let mut owner = vec![NO_OWNER; parent.dim()];
        let mut owner_amp = vec![0.0; parent.dim()];
        for rep in reps {
            let raw = project_orbit(parent, rep, k, parity, axis);
            let norm = raw.iter().map(|(_, a)| a.norm_sqr()).sum::<f64>().sqrt();
            if norm < DROP_TOL {
                continue;
            }
            let id = vectors.len() as u32;
            let members: Vec<(usize, f64)> = raw
                .into_iter()
                .filter(|(_, a)| a.norm() > DROP_TOL)
                .map(|(i, a)| (i, a.re / norm))
                .collect();
            for &(i, a) in &members {
                owner[i] = id;
                owner_amp[i] = a;
            }
            vectors.push(SectorVector {
                representative: rep,
                weight: norm,
                members,
            });
        }
        Ok(SymmetrySector {
            parent,
            momentum: k,
            inversion,
            axis,
            vectors,
            owner,
            owner_amp,
        })
    }

    pub fn parent(&self) -> &'a ConstrainedBasis {
        self.parent
    }

    pub fn momentum(&self) -> usize {
        self.momentum
    }

    pub fn inversion(&self) -> Inversion {
        self.inversion
    }

    pub fn axis(&self) -> InversionAxis {
        self.axis
    }

    pub fn vectors(&self) -> &[SectorVector] {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Sector index and amplitude of a parent basis state, if it belongs here.
    pub fn locate(&self, parent_index: usize) -> Option<(usize, f64)> {
        match self.owner[parent_index] {
            NO_OWNER => None,
            id => Some((id as usize, self.owner_amp[parent_index])),
        }
    }

    /// Expand sector coefficients into a parent-basis vector.
    pub fn lift(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        if coeffs.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: coeffs.len(),
            });
        }
        let mut out = vec![0.0; self.parent.dim()];
        for (v, &c) in self.vectors.iter().zip(coeffs) {
            for &(i, a) in &v.members {
                out[i] += a * c;
            }
        }
        Ok(out)
    }

    /// Sector coefficients `<u_a|psi>` of a parent-basis vector.
    pub fn project(&self, full: &[f64]) -> Result<Vec<f64>> {
        if full.len() != self.parent.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.parent.dim(),
                found: full.len(),
            });
        }
        Ok(self
            .vectors
            .iter()
            .map(|v| v.members.iter().map(|&(i, a)| a * full[i]).sum())
            .collect())
    }

    /// Real symmetric Hamiltonian `<u_a|H|u_b>` in the sector basis.
    pub fn hamiltonian(&self) -> SparseOperator {
        let mut triplets = Vec::new();
        let mut row = std::collections::BTreeMap::new();
        for (b, vb) in self.vectors.iter().enumerate() {
            row.clear();
            for &(y, amp_y) in &vb.members {
                for (_, x) in flip_targets(self.parent, self.parent.config(y)) {
                    if let Some((a, amp_x)) = self.locate(x) {
                        if a <= b {
                            *row.entry(a).or_insert(0.0) += amp_x * FRAC_1_SQRT_2 * amp_y;
                        }
                    }
                }
            }
            for (&a, &v) in row.iter() {
                if v.abs() > DROP_TOL {
                    triplets.push((a, b, v));
                    if a != b {
                        triplets.push((b, a, v));
                    }
                }
            }
        }
        SparseOperator::from_triplets(self.len(), triplets, true)
    }

    /// Structured text report: header then one representative per line.
    pub fn write_report<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(
            out,
            "# constraint={} L={} k={} I={} dim={}",
            self.parent.constraint().label(),
            self.parent.len(),
            self.momentum,
            self.inversion,
            self.len()
        )?;
        for v in &self.vectors {
            writeln!(out, "{} {:.16e} {}", v.representative, v.weight, v.members.len())?;
        }
        Ok(())
    }
}

impl StateSpace for SymmetrySector<'_> {
    fn dim(&self) -> usize {
        self.vectors.len()
    }

    fn chain_length(&self) -> usize {
        self.parent.len()
    }

    fn boundary(&self) -> Boundary {
        Boundary::Periodic
    }

    fn label_config(&self, index: usize) -> SpinConfig {
        self.vectors[index].representative
    }
}

/// Dimension of the momentum-`k` sector without inversion, valid for any `k`.
pub fn momentum_sector_dim(basis: &ConstrainedBasis, k: usize) -> Result<usize> {
    check_sector_args(basis, k, Inversion::Unresolved)?;
    Ok(orbit_representatives(basis, false, InversionAxis::default())
        .into_iter()
        .filter(|&rep| {
            let raw = project_orbit(basis, rep, k, None, InversionAxis::default());
            raw.iter().map(|(_, a)| a.norm_sqr()).sum::<f64>().sqrt() > DROP_TOL
        })
        .count())
}

/// Dense Hermitian block of `H` at momentum `k` (complex unless `k` is 0 or
/// `L/2`). Used to assemble full spectra block by block.
pub fn momentum_block(basis: &ConstrainedBasis, k: usize) -> Result<Mat<c64>> {
    check_sector_args(basis, k, Inversion::Unresolved)?;
    let reps = orbit_representatives(basis, false, InversionAxis::default());
    let mut vectors: Vec<Vec<(usize, c64)>> = Vec::new();
    let mut owner = vec![NO_OWNER; basis.dim()];
    let mut owner_amp = vec![c64::new(0.0, 0.0); basis.dim()];
    for rep in reps {
        let raw = project_orbit(basis, rep, k, None, InversionAxis::default());
        let norm = raw.iter().map(|(_, a)| a.norm_sqr()).sum::<f64>().sqrt();
        if norm < DROP_TOL {
            continue;
        }
        let id = vectors.len() as u32;
        let members: Vec<(usize, c64)> = raw.into_iter().map(|(i, a)| (i, a / norm)).collect();
        for &(i, a) in &members {
            owner[i] = id;
            owner_amp[i] = a;
        }
        vectors.push(members);
    }
    let n = vectors.len();
    let mut m = Mat::<c64>::zeros(n, n);
    for (b, members) in vectors.iter().enumerate() {
        for &(y, amp_y) in members {
            for (_, x) in flip_targets(basis, basis.config(y)) {
                let a = owner[x];
                if a != NO_OWNER {
                    m[(a as usize, b)] += owner_amp[x].conj() * amp_y * FRAC_1_SQRT_2;
                }
            }
        }
    }
    Ok(m)
}

/// Diagonal particle-hole signs `(-1)^{number of |0> sites}`.
#[derive(Clone, Debug)]
pub struct ParticleHoleOperator {
    signs: Vec<f64>,
}

impl ParticleHoleOperator {
    /// Works on any space whose labels share the zero count of their orbit.
    pub fn new<S: StateSpace + ?Sized>(space: &S) -> Self {
        let signs = (0..space.dim())
            .map(|i| {
                let config = space.label_config(i);
                (0..config.len())
                    .map(|s| {
                        let m = config.get(s).m();
                        (2 * m * m - 1) as f64
                    })
                    .product()
            })
            .collect();
        ParticleHoleOperator { signs }
    }

    pub fn signs(&self) -> &[f64] {
        &self.signs
    }

    pub fn apply(&self, vector: &[f64]) -> Result<Vec<f64>> {
        if vector.len() != self.signs.len() {
            return Err(Error::DimensionMismatch {
                expected: self.signs.len(),
                found: vector.len(),
            });
        }
        Ok(vector.iter().zip(&self.signs).map(|(v, s)| v * s).collect())
    }

    pub fn to_operator(&self) -> SparseOperator {
        SparseOperator::diagonal(&self.signs)
    }

    /// Largest entry of `HC + CH`; zero iff `CHC = -H`.
    pub fn anticommutator_defect(&self, h: &SparseOperator) -> Result<f64> {
        if h.dim() != self.signs.len() {
            return Err(Error::DimensionMismatch {
                expected: self.signs.len(),
                found: h.dim(),
            });
        }
        Ok(h.triplets()
            .map(|(r, c, v)| (v * (self.signs[r] + self.signs[c])).abs())
            .fold(0.0, f64::max))
    }
}

/// Convenience wrapper around [`ParticleHoleOperator::anticommutator_defect`].
pub fn verify_anticommutation<S: StateSpace + ?Sized>(h: &SparseOperator, space: &S) -> Result<f64> {
    ParticleHoleOperator::new(space).anticommutator_defect(h)
}
