//! Krylov fragments of the configuration graph, inert-state census and the
//! `O_i` label sectors of Model II.

use std::collections::{HashMap, VecDeque};
use std::f64::consts::FRAC_1_SQRT_2;
use std::io::Write;

use faer::Mat;

use crate::basis::{Boundary, ConstrainedBasis, ConstraintSet, Preset, Spin, SpinConfig, StateSpace};
use crate::error::{Error, Result};
use crate::hamiltonian::{flip_targets, motif_count, SparseOperator};

use Spin::{Minus as M, Plus as P};

/// Motifs whose counts label Model-I fragments, in report order.
pub const FRAGMENT_MOTIFS: [(&str, &[Spin]); 4] = [
    ("N_pp", &[P, P]),
    ("N_ppp", &[P, P, P]),
    ("N_pp-pp", &[P, P, M, P, P]),
    ("N_pp--pp", &[P, P, M, M, P, P]),
];

/// Connected components of the graph of nonzero off-diagonal entries, each
/// sorted ascending, in order of their smallest member.
pub fn connected_components(h: &SparseOperator) -> Vec<Vec<usize>> {
    let n = h.dim();
    let mut seen = vec![false; n];
    let mut queue = VecDeque::new();
    let mut out = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        queue.push_back(start);
        let mut comp = Vec::new();
        while let Some(r) = queue.pop_front() {
            comp.push(r);
            let (cols, _) = h.row(r);
            for &c in cols {
                if !seen[c] {
                    seen[c] = true;
                    queue.push_back(c);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

#[derive(Clone, Debug)]
pub struct Fragment {
    /// Indices into the decomposed space, ascending.
    pub states: Vec<usize>,
    /// Motif counts of the smallest member, in [`FRAGMENT_MOTIFS`] order.
    pub labels: [usize; 4],
    /// Whether every member shares those counts.
    pub labels_constant: bool,
    pub min_code: u64,
}

impl Fragment {
    pub fn size(&self) -> usize {
        self.states.len()
    }

    pub fn n_pp(&self) -> usize {
        self.labels[0]
    }

    pub fn n_ppp(&self) -> usize {
        self.labels[1]
    }
}

#[derive(Clone, Debug)]
pub struct FragmentDecomposition {
    pub dim: usize,
    /// Sorted by size descending, ties by minimal member code.
    pub fragments: Vec<Fragment>,
}

/// Split `space` into the connected components of `h` and label each by its
/// motif counts.
pub fn decompose<S: StateSpace + ?Sized>(h: &SparseOperator, space: &S) -> Result<FragmentDecomposition> {
    if h.dim() != space.dim() {
        return Err(Error::DimensionMismatch {
            expected: space.dim(),
            found: h.dim(),
        });
    }
    let boundary = space.boundary();
    let labels_of = |i: usize| {
        let config = space.label_config(i);
        FRAGMENT_MOTIFS.map(|(_, motif)| motif_count(&config, motif, boundary))
    };
    let mut fragments: Vec<Fragment> = connected_components(h)
        .into_iter()
        .map(|states| {
            let first = labels_of(states[0]);
            let labels_constant = states.iter().all(|&i| labels_of(i) == first);
            let (min_code, min_labels) = states
                .iter()
                .map(|&i| space.label_config(i).code())
                .zip(states.iter())
                .min()
                .map(|(code, &i)| (code, labels_of(i)))
                .unwrap();
            Fragment {
                states,
                labels: min_labels,
                labels_constant,
                min_code,
            }
        })
        .collect();
    fragments.sort_by(|a, b| b.size().cmp(&a.size()).then(a.min_code.cmp(&b.min_code)));
    Ok(FragmentDecomposition {
        dim: space.dim(),
        fragments,
    })
}

impl FragmentDecomposition {
    pub fn len(&self) -> usize {
        self.fragments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fragments.is_empty()
    }

    /// `(size, number of fragments of that size)`, largest size first.
    pub fn size_histogram(&self) -> Vec<(usize, usize)> {
        let mut hist: Vec<(usize, usize)> = Vec::new();
        for f in &self.fragments {
            match hist.last_mut() {
                Some((s, n)) if *s == f.size() => *n += 1,
                _ => hist.push((f.size(), 1)),
            }
        }
        hist
    }

    pub fn singletons(&self) -> usize {
        self.fragments.iter().filter(|f| f.size() == 1).count()
    }

    /// Fragment index of every state.
    pub fn membership(&self) -> Vec<usize> {
        let mut out = vec![0; self.dim];
        for (id, f) in self.fragments.iter().enumerate() {
            for &i in &f.states {
                out[i] = id;
            }
        }
        out
    }

    /// CSV census, one line per fragment.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "component_id,size,N_pp,N_ppp,extra_labels,min_code")?;
        for (id, f) in self.fragments.iter().enumerate() {
            let extra = FRAGMENT_MOTIFS[2..]
                .iter()
                .zip(&f.labels[2..])
                .map(|((name, _), v)| format!("{name}={v}"))
                .collect::<Vec<_>>()
                .join(";");
            writeln!(
                out,
                "{id},{},{},{},{extra}{},{}",
                f.size(),
                f.labels[0],
                f.labels[1],
                if f.labels_constant { "" } else { ";mixed" },
                f.min_code
            )?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct InertCensus {
    pub len: usize,
    pub boundary: Boundary,
    pub count: u64,
    pub states: Option<Vec<SpinConfig>>,
}

/// Largest length for which the census keeps the explicit state list.
pub const INERT_LIST_MAX_LENGTH: usize = 20;

/// States from which no constrained flip stays inside the basis.
pub fn enumerate_inert(constraint: ConstraintSet, len: usize, boundary: Boundary) -> Result<InertCensus> {
    let basis = ConstrainedBasis::enumerate(constraint, len, boundary)?;
    let inert: Vec<SpinConfig> = basis
        .configs()
        .filter(|&c| flip_targets(&basis, c).is_empty())
        .collect();
    Ok(InertCensus {
        len,
        boundary,
        count: inert.len() as u64,
        states: (len <= INERT_LIST_MAX_LENGTH).then_some(inert),
    })
}

fn lucas_fib(n: usize) -> (i128, i128) {
    let (mut lucas, mut lucas_next) = (2i128, 1i128);
    let (mut fib, mut fib_next) = (0i128, 1i128);
    for _ in 0..n {
        (lucas, lucas_next) = (lucas_next, lucas + lucas_next);
        (fib, fib_next) = (fib_next, fib + fib_next);
    }
    (lucas, fib)
}

/// Lucas number `phi^n + (-1/phi)^n` with `phi = (1 + sqrt 5)/2`.
pub fn lucas(n: usize) -> u128 {
    lucas_fib(n).0 as u128
}

/// Closed-form Model-I inert count in integer arithmetic.
///
/// PBC: `2 cos(pi L/2) + Lucas(L)`. For odd `L` the Lucas number is
/// `phi^L - phi^-L`, not `phi^L + phi^-L`; the enumeration follows Lucas.
/// OBC: `((3+sqrt5) phi^L + (3-sqrt5)(-1/phi)^L + 4(cos - 2 sin))/10
/// = (3 Lucas(L) + 5 Fib(L) + 4(cos - 2 sin))/10`.
pub fn inert_count_closed_form(len: usize, boundary: Boundary) -> u128 {
    assert!(len <= 180, "closed form overflows i128 beyond L = 180");
    let (lucas, fib) = lucas_fib(len);
    let cos = [1, 0, -1, 0][len % 4];
    let sin = [0, 1, 0, -1][len % 4];
    let value = match boundary {
        Boundary::Periodic => lucas + 2 * cos,
        Boundary::Open => {
            let num = 3 * lucas + 5 * fib + 4 * (cos - 2 * sin);
            debug_assert_eq!(num % 10, 0);
            num / 10
        }
    };
    value as u128
}

/// `I_L^OBC / I_L^PBC` from the closed forms; tends to `(3 + sqrt 5)/10`.
pub fn inert_ratio_closed_form(len: usize) -> f64 {
    inert_count_closed_form(len, Boundary::Open) as f64
        / inert_count_closed_form(len, Boundary::Periodic) as f64
}

/// Local `O_i` eigenvector in the Model-II label construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LocalLabelState {
    /// `(|+> + |->)/sqrt 2`, eigenvalue +1, plays spin-1/2 down.
    Down,
    /// `|0>`, eigenvalue +1, plays spin-1/2 up.
    Up,
    /// `(|+> - |->)/sqrt 2`, eigenvalue -1.
    Odd,
}

impl LocalLabelState {
    /// Integer coefficients on `(|->, |0>, |+>)` and their squared norm.
    fn coefficients(self) -> ([i8; 3], u8) {
        match self {
            LocalLabelState::Down => ([1, 0, 1], 2),
            LocalLabelState::Up => ([0, 1, 0], 1),
            LocalLabelState::Odd => ([-1, 0, 1], 2),
        }
    }
}

/// Orthonormal basis of one `O_i` label sector of Model II.
#[derive(Clone, Debug)]
pub struct LabelSector {
    pub labels: Vec<i8>,
    /// Local states per basis vector.
    pub patterns: Vec<Vec<LocalLabelState>>,
    /// Sparse basis vectors over the parent basis.
    pub vectors: Vec<Vec<(usize, f64)>>,
}

fn parse_labels(labels: &[i8], len: usize) -> Result<()> {
    if labels.len() != len {
        return Err(Error::DimensionMismatch {
            expected: len,
            found: labels.len(),
        });
    }
    if labels.iter().any(|&l| l != 1 && l != -1) {
        return Err(Error::InvalidArgument("labels must be +1 or -1".into()));
    }
    Ok(())
}

/// Up/down patterns on the `+1` sites with no two adjacent ups.
fn label_patterns(labels: &[i8], boundary: Boundary) -> Vec<Vec<LocalLabelState>> {
    let len = labels.len();
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(len);
    fn rec(
        labels: &[i8],
        boundary: Boundary,
        current: &mut Vec<LocalLabelState>,
        out: &mut Vec<Vec<LocalLabelState>>,
    ) {
        let i = current.len();
        let len = labels.len();
        if i == len {
            let wraps = boundary == Boundary::Periodic
                && len > 1
                && current[0] == LocalLabelState::Up
                && current[len - 1] == LocalLabelState::Up;
            let self_bond = boundary == Boundary::Periodic && len == 1 && current[0] == LocalLabelState::Up;
            if !wraps && !self_bond {
                out.push(current.clone());
            }
            return;
        }
        if labels[i] == -1 {
            current.push(LocalLabelState::Odd);
            rec(labels, boundary, current, out);
            current.pop();
            return;
        }
        current.push(LocalLabelState::Down);
        rec(labels, boundary, current, out);
        current.pop();
        if i == 0 || current[i - 1] != LocalLabelState::Up {
            current.push(LocalLabelState::Up);
            rec(labels, boundary, current, out);
            current.pop();
        }
    }
    rec(labels, boundary, &mut current, &mut out);
    out
}

/// The sector of `H^II` in which `O_i` takes eigenvalue `labels[i]`.
pub fn sector_decomposition_model2(basis: &ConstrainedBasis, labels: &[i8]) -> Result<LabelSector> {
    if basis.constraint().tag() != Preset::ModelII {
        return Err(Error::UnsupportedModel(basis.constraint().label()));
    }
    parse_labels(labels, basis.len())?;
    let patterns = label_patterns(labels, basis.boundary());
    let vectors = patterns
        .iter()
        .map(|pattern| {
            let mut members = vec![(SpinConfig::new(0, basis.len()), 1.0f64)];
            for (site, state) in pattern.iter().enumerate() {
                let (coeffs, norm2) = state.coefficients();
                let scale = if norm2 == 2 { FRAC_1_SQRT_2 } else { 1.0 };
                let mut next = Vec::with_capacity(members.len() * 2);
                for &(config, amp) in &members {
                    for spin in Spin::ALL {
                        let c = coeffs[spin.digit() as usize];
                        if c != 0 {
                            next.push((config.with(site, spin), amp * c as f64 * scale));
                        }
                    }
                }
                members = next;
            }
            let mut v: Vec<(usize, f64)> = members
                .into_iter()
                .map(|(config, amp)| {
                    let idx = basis
                        .index_of(config.code())
                        .expect("label sector state violates the Model-II constraint");
                    (idx, amp)
                })
                .collect();
            v.sort_unstable_by_key(|e| e.0);
            v
        })
        .collect();
    Ok(LabelSector {
        labels: labels.to_vec(),
        patterns,
        vectors,
    })
}

impl LabelSector {
    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    /// Dense block `<v_a|H|v_b>`.
    pub fn hamiltonian_block(&self, h: &SparseOperator) -> Mat<f64> {
        let n = self.dim();
        // each parent configuration belongs to exactly one sector vector
        let owner: HashMap<usize, (usize, f64)> = self
            .vectors
            .iter()
            .enumerate()
            .flat_map(|(a, v)| v.iter().map(move |&(i, amp)| (i, (a, amp))))
            .collect();
        let mut m = Mat::<f64>::zeros(n, n);
        for (b, vb) in self.vectors.iter().enumerate() {
            for &(i, amp_b) in vb {
                let (cols, vals) = h.row(i);
                for (&j, &hv) in cols.iter().zip(vals) {
                    if let Some(&(a, amp_a)) = owner.get(&j) {
                        m[(a, b)] += amp_a * hv * amp_b;
                    }
                }
            }
        }
        m
    }

    /// Weight of a product configuration in this sector.
    pub fn product_state_weight(&self, config: &SpinConfig) -> f64 {
        patterns_weight(&self.patterns, config)
    }
}

fn patterns_weight(patterns: &[Vec<LocalLabelState>], config: &SpinConfig) -> f64 {
    patterns
        .iter()
        .map(|pattern| {
            pattern
                .iter()
                .enumerate()
                .map(|(site, state)| {
                    let (coeffs, norm2) = state.coefficients();
                    let c = coeffs[config.get(site).digit() as usize] as f64;
                    c * c / norm2 as f64
                })
                .product::<f64>()
        })
        .sum()
}

/// Ascending Model-II spectrum assembled from all `2^L` label sectors.
pub fn model2_spectrum(basis: &ConstrainedBasis, h: &SparseOperator) -> Result<Vec<f64>> {
    let len = basis.len();
    if len >= 32 {
        return Err(Error::InvalidArgument(format!("2^{len} label sectors")));
    }
    let mut all = Vec::with_capacity(basis.dim());
    for mask in 0u32..1 << len {
        let labels: Vec<i8> = (0..len).map(|i| if mask >> i & 1 == 1 { -1 } else { 1 }).collect();
        let block = sector_decomposition_model2(basis, &labels)?.hamiltonian_block(h);
        if block.nrows() > 0 {
            let values = block
                .self_adjoint_eigenvalues(faer::Side::Lower)
                .map_err(|e| Error::Eigen(format!("{e:?}")))?;
            all.extend(values);
        }
    }
    if all.len() != basis.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            found: all.len(),
        });
    }
    all.sort_by(f64::total_cmp);
    Ok(all)
}

/// Weight of a product configuration in a Model-II label sector, as an exact
/// sum of products of squared local overlaps. Needs no basis vectors.
pub fn label_sector_weight(labels: &[i8], boundary: Boundary, config: &SpinConfig) -> Result<f64> {
    parse_labels(labels, config.len())?;
    Ok(patterns_weight(&label_patterns(labels, boundary), config))
}

/// Contiguous block of `n` sites labelled +1 centred in the chain, the rest -1.
pub fn central_island_labels(len: usize, n: usize) -> Vec<i8> {
    let start = (len - n.min(len)) / 2;
    (0..len)
        .map(|i| if i >= start && i < start + n { 1 } else { -1 })
        .collect()
}

/// Label strings in which every +1 site has -1 neighbours, so that each
/// sector is one-dimensional up to the decoupled `|0>`/`|->,|+>` choice.
pub fn count_noninteracting_label_strings(len: usize, boundary: Boundary) -> u64 {
    assert!(len < 64);
    (0u64..1 << len)
        .filter(|&mask| {
            boundary
                .bonds(len)
                .into_iter()
                .all(|(i, j)| i == j || mask >> i & 1 == 0 || mask >> j & 1 == 0)
        })
        .count() as u64
}
