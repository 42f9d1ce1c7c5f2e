//! Constrained spin-1 configuration spaces.
//!
//! A configuration of `L` spin-1 sites is packed into a base-3 integer with
//! site `i` stored in digit `i` (digit 0 is the leftmost site). Digit values
//! `0, 1, 2` stand for `|->, |0>, |+>`, i.e. they are ordered by `S^z`.
//!
//! A [`ConstraintSet`] lists ordered nearest-neighbour pairs that may never
//! appear on a bond. [`ConstrainedBasis`] holds every allowed configuration
//! in ascending code order, and [`count_dimension`] counts them with an exact
//! 3x3 transfer matrix without enumerating anything.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Longest chain whose codes fit in a `u64`.
pub const MAX_LENGTH: usize = 40;

/// Default cap on the number of states [`ConstrainedBasis::enumerate`] will store.
pub const DEFAULT_ENUMERATION_BUDGET: u64 = 30_000_000;

const POW3: [u64; MAX_LENGTH + 1] = {
    let mut table = [1u64; MAX_LENGTH + 1];
    let mut i = 1;
    while i <= MAX_LENGTH {
        table[i] = table[i - 1] * 3;
        i += 1;
    }
    table
};

/// `3^n` for `n <= 40`.
#[inline]
pub fn pow3(n: usize) -> u64 {
    POW3[n]
}

/// Local `S^z` eigenstate of a spin-1 site.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum Spin {
    Minus = 0,
    Zero = 1,
    Plus = 2,
}

impl Spin {
    pub const ALL: [Spin; 3] = [Spin::Minus, Spin::Zero, Spin::Plus];

    #[inline]
    pub fn from_digit(d: u64) -> Spin {
        match d {
            0 => Spin::Minus,
            1 => Spin::Zero,
            2 => Spin::Plus,
            _ => panic!("base-3 digit out of range: {d}"),
        }
    }

    #[inline]
    pub fn digit(self) -> u64 {
        self as u64
    }

    /// Magnetic quantum number `m` in `{-1, 0, +1}`.
    #[inline]
    pub fn m(self) -> i32 {
        self as i32 - 1
    }

    pub fn symbol(self) -> char {
        match self {
            Spin::Minus => '-',
            Spin::Zero => '0',
            Spin::Plus => '+',
        }
    }

    pub fn from_symbol(c: char) -> Option<Spin> {
        match c {
            '-' => Some(Spin::Minus),
            '0' => Some(Spin::Zero),
            '+' => Some(Spin::Plus),
            _ => None,
        }
    }
}

/// Parse a string over `{-, 0, +}` into spins.
pub fn parse_spins(s: &str) -> Result<Vec<Spin>> {
    s.chars()
        .map(|c| Spin::from_symbol(c).ok_or_else(|| Error::InvalidSpinString(s.to_string())))
        .collect()
}

/// A product configuration packed as a base-3 code.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpinConfig {
    code: u64,
    len: u8,
}

impl SpinConfig {
    pub fn new(code: u64, len: usize) -> Self {
        assert!(len <= MAX_LENGTH, "chain length {len} exceeds {MAX_LENGTH}");
        assert!(code < pow3(len), "code {code} out of range for length {len}");
        SpinConfig {
            code,
            len: len as u8,
        }
    }

    pub fn from_spins(spins: &[Spin]) -> Self {
        let code = spins
            .iter()
            .enumerate()
            .map(|(i, s)| s.digit() * pow3(i))
            .sum();
        SpinConfig::new(code, spins.len())
    }

    pub fn uniform(spin: Spin, len: usize) -> Self {
        SpinConfig::from_spins(&vec![spin; len])
    }

    #[inline]
    pub fn code(&self) -> u64 {
        self.code
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len as usize
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, site: usize) -> Spin {
        Spin::from_digit(digit(self.code, site))
    }

    /// The configuration with `site` replaced by `spin`.
    #[inline]
    pub fn with(&self, site: usize, spin: Spin) -> Self {
        let old = digit(self.code, site);
        SpinConfig {
            code: self.code - old * pow3(site) + spin.digit() * pow3(site),
            len: self.len,
        }
    }

    pub fn spins(&self) -> Vec<Spin> {
        (0..self.len()).map(|i| self.get(i)).collect()
    }

    /// Total `S^z`.
    pub fn magnetization(&self) -> i32 {
        (0..self.len()).map(|i| self.get(i).m()).sum()
    }

    pub fn count(&self, spin: Spin) -> usize {
        (0..self.len()).filter(|&i| self.get(i) == spin).count()
    }

    /// Cyclic shift moving site `i` to site `i + shift (mod L)`.
    pub fn translate(&self, shift: usize) -> Self {
        let len = self.len();
        if len == 0 {
            return *self;
        }
        let shift = shift % len;
        let split = pow3(len - shift);
        SpinConfig {
            code: (self.code % split) * pow3(shift) + self.code / split,
            len: self.len,
        }
    }

    /// Mirror image, site `i` moved to `L - 1 - i`.
    pub fn reflect(&self) -> Self {
        let len = self.len();
        let mut code = 0;
        let mut rest = self.code;
        for i in 0..len {
            code += (rest % 3) * pow3(len - 1 - i);
            rest /= 3;
        }
        SpinConfig { code, len: self.len }
    }
}

#[inline]
pub(crate) fn digit(code: u64, site: usize) -> u64 {
    (code / pow3(site)) % 3
}

impl fmt::Display for SpinConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len() {
            write!(f, "{}", self.get(i).symbol())?;
        }
        Ok(())
    }
}

impl FromStr for SpinConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let spins = parse_spins(s)?;
        if spins.len() > MAX_LENGTH {
            return Err(Error::InvalidSpinString(s.to_string()));
        }
        Ok(SpinConfig::from_spins(&spins))
    }
}

/// Named constraint sets.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Preset {
    ModelI,
    ModelII,
    ModelIII,
    PxpSpin1,
    Free,
    Other,
}

impl Preset {
    pub const NAMED: [Preset; 5] = [
        Preset::ModelI,
        Preset::ModelII,
        Preset::ModelIII,
        Preset::PxpSpin1,
        Preset::Free,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::ModelI => "MODEL_I",
            Preset::ModelII => "MODEL_II",
            Preset::ModelIII => "MODEL_III",
            Preset::PxpSpin1 => "PXP_SPIN1",
            Preset::Free => "FREE",
            Preset::Other => "OTHER",
        }
    }

    /// Forbidden pairs as `(left, right)` spin symbols.
    pub fn forbidden_pairs(self) -> &'static [(Spin, Spin)] {
        use Spin::*;
        match self {
            Preset::ModelI => &[(Zero, Zero), (Plus, Zero), (Zero, Plus)],
            Preset::ModelII => &[(Zero, Zero)],
            Preset::ModelIII => &[(Zero, Zero), (Plus, Plus)],
            Preset::PxpSpin1 => &[(Zero, Zero), (Plus, Zero), (Zero, Plus), (Plus, Plus)],
            Preset::Free | Preset::Other => &[],
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    /// Accepts the short CLI names (`I`, `II`, `III`, `free`, `pxp1`) and the
    /// upper-case tags.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "I" | "1" | "MODEL_I" => Ok(Preset::ModelI),
            "II" | "2" | "MODEL_II" => Ok(Preset::ModelII),
            "III" | "3" | "MODEL_III" => Ok(Preset::ModelIII),
            "free" | "FREE" => Ok(Preset::Free),
            "pxp1" | "PXP_SPIN1" => Ok(Preset::PxpSpin1),
            _ => Err(Error::InvalidConstraint(format!("unknown model '{s}'"))),
        }
    }
}

/// Set of forbidden ordered nearest-neighbour pairs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ConstraintSet {
    forbidden: [[bool; 3]; 3],
    preset: Preset,
}

impl ConstraintSet {
    pub fn preset(preset: Preset) -> Self {
        let mut forbidden = [[false; 3]; 3];
        for &(a, b) in preset.forbidden_pairs() {
            forbidden[a as usize][b as usize] = true;
        }
        ConstraintSet { forbidden, preset }
    }

    pub fn model_i() -> Self {
        Self::preset(Preset::ModelI)
    }

    pub fn model_ii() -> Self {
        Self::preset(Preset::ModelII)
    }

    pub fn model_iii() -> Self {
        Self::preset(Preset::ModelIII)
    }

    pub fn pxp_spin1() -> Self {
        Self::preset(Preset::PxpSpin1)
    }

    pub fn free() -> Self {
        Self::preset(Preset::Free)
    }

    /// Build from explicit pairs. The preset tag is recovered when the set
    /// coincides with a named model.
    pub fn from_pairs(pairs: &[(Spin, Spin)]) -> Self {
        let mut forbidden = [[false; 3]; 3];
        for &(a, b) in pairs {
            forbidden[a as usize][b as usize] = true;
        }
        let preset = Preset::NAMED
            .into_iter()
            .find(|&p| ConstraintSet::preset(p).forbidden == forbidden)
            .unwrap_or(Preset::Other);
        ConstraintSet { forbidden, preset }
    }

    /// Parse a comma separated pair list such as `00,+0,0+`. An empty string
    /// is the free chain.
    pub fn parse_pairs(s: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for item in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
            let spins = parse_spins(item)
                .map_err(|_| Error::InvalidConstraint(format!("bad pair '{item}'")))?;
            if spins.len() != 2 {
                return Err(Error::InvalidConstraint(format!(
                    "pair '{item}' must have two sites"
                )));
            }
            pairs.push((spins[0], spins[1]));
        }
        Ok(Self::from_pairs(&pairs))
    }

    pub fn tag(&self) -> Preset {
        self.preset
    }

    #[inline]
    pub fn forbids(&self, left: Spin, right: Spin) -> bool {
        self.forbidden[left as usize][right as usize]
    }

    #[inline]
    pub fn allows(&self, left: Spin, right: Spin) -> bool {
        !self.forbids(left, right)
    }

    pub fn forbidden_pairs(&self) -> Vec<(Spin, Spin)> {
        let mut out = Vec::new();
        for a in Spin::ALL {
            for b in Spin::ALL {
                if self.forbids(a, b) {
                    out.push((a, b));
                }
            }
        }
        out
    }

    /// The same set with one extra pair allowed.
    pub fn allowing(&self, left: Spin, right: Spin) -> Self {
        let pairs: Vec<_> = self
            .forbidden_pairs()
            .into_iter()
            .filter(|&p| p != (left, right))
            .collect();
        Self::from_pairs(&pairs)
    }

    /// `T[a][b] = 1` iff the pair `(a, b)` is allowed.
    pub fn transfer_matrix(&self) -> [[u8; 3]; 3] {
        let mut t = [[0u8; 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                t[a][b] = u8::from(!self.forbidden[a][b]);
            }
        }
        t
    }

    /// Preset tag, or the pair list for custom sets.
    pub fn label(&self) -> String {
        match self.preset {
            Preset::Other => {
                let pairs: Vec<String> = self
                    .forbidden_pairs()
                    .into_iter()
                    .map(|(a, b)| format!("{}{}", a.symbol(), b.symbol()))
                    .collect();
                format!("forbid[{}]", pairs.join(","))
            }
            p => p.name().to_string(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Boundary {
    Open,
    Periodic,
}

impl Boundary {
    /// Bonds `(i, j)` on which the constraint acts. Under PBC a single site
    /// is its own neighbour, matching `trace(T)`.
    pub fn bonds(self, len: usize) -> Vec<(usize, usize)> {
        match self {
            Boundary::Open => (0..len.saturating_sub(1)).map(|i| (i, i + 1)).collect(),
            Boundary::Periodic => (0..len).map(|i| (i, (i + 1) % len)).collect(),
        }
    }
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Boundary::Open => "OBC",
            Boundary::Periodic => "PBC",
        })
    }
}

impl FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "obc" | "open" => Ok(Boundary::Open),
            "pbc" | "periodic" => Ok(Boundary::Periodic),
            _ => Err(Error::InvalidArgument(format!("unknown boundary '{s}'"))),
        }
    }
}

/// Anything whose basis vectors are labelled by a product configuration.
///
/// For a plain basis the label is the configuration itself; for a symmetry
/// sector it is the orbit representative, so only quantities invariant under
/// the sector's symmetry group may be read off it.
pub trait StateSpace {
    fn dim(&self) -> usize;
    fn chain_length(&self) -> usize;
    fn boundary(&self) -> Boundary;
    fn label_config(&self, index: usize) -> SpinConfig;
}

/// Every configuration of length `L` allowed by a constraint set.
#[derive(Clone, Debug)]
pub struct ConstrainedBasis {
    constraint: ConstraintSet,
    boundary: Boundary,
    len: usize,
    states: Vec<u64>,
}

impl ConstrainedBasis {
    pub fn enumerate(constraint: ConstraintSet, len: usize, boundary: Boundary) -> Result<Self> {
        Self::enumerate_with_budget(constraint, len, boundary, DEFAULT_ENUMERATION_BUDGET)
    }

    /// Depth-first construction from the most significant site down, pruning
    /// on every bond as soon as both ends are fixed. States come out sorted.
    pub fn enumerate_with_budget(
        constraint: ConstraintSet,
        len: usize,
        boundary: Boundary,
        budget: u64,
    ) -> Result<Self> {
        if len == 0 {
            return Err(Error::LengthTooSmall { length: 0, min: 1 });
        }
        let required = count_dimension(&constraint, len, boundary);
        if len > MAX_LENGTH || required > BigUint::from(budget) {
            return Err(Error::LengthTooLarge {
                length: len,
                required: required.to_string(),
                budget,
            });
        }
        let mut states = Vec::with_capacity(required.to_usize().unwrap_or(0));
        let mut spins = vec![Spin::Minus; len];
        extend(&constraint, boundary, len, len - 1, 0, &mut spins, &mut states);
        Ok(ConstrainedBasis {
            constraint,
            boundary,
            len,
            states,
        })
    }

    pub fn constraint(&self) -> &ConstraintSet {
        &self.constraint
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[u64] {
        &self.states
    }

    #[inline]
    pub fn code(&self, index: usize) -> u64 {
        self.states[index]
    }

    #[inline]
    pub fn config(&self, index: usize) -> SpinConfig {
        SpinConfig {
            code: self.states[index],
            len: self.len as u8,
        }
    }

    pub fn configs(&self) -> impl Iterator<Item = SpinConfig> + '_ {
        (0..self.states.len()).map(move |i| self.config(i))
    }

    #[inline]
    pub fn index_of(&self, code: u64) -> Option<usize> {
        self.states.binary_search(&code).ok()
    }

    pub fn index_of_config(&self, config: &SpinConfig) -> Option<usize> {
        if config.len() != self.len {
            return None;
        }
        self.index_of(config.code())
    }

    /// Direct constraint check, independent of the stored list.
    pub fn satisfies(&self, config: &SpinConfig) -> bool {
        config.len() == self.len
            && self
                .boundary
                .bonds(self.len)
                .into_iter()
                .all(|(i, j)| self.constraint.allows(config.get(i), config.get(j)))
    }

    /// One line per state plus a header.
    pub fn write_export<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(
            out,
            "# constraint={} L={} bc={} dim={}",
            self.constraint.label(),
            self.len,
            self.boundary,
            self.states.len()
        )?;
        for config in self.configs() {
            writeln!(out, "{config}")?;
        }
        Ok(())
    }
}

impl StateSpace for ConstrainedBasis {
    fn dim(&self) -> usize {
        self.states.len()
    }

    fn chain_length(&self) -> usize {
        self.len
    }

    fn boundary(&self) -> Boundary {
        self.boundary
    }

    fn label_config(&self, index: usize) -> SpinConfig {
        self.config(index)
    }
}

fn extend(
    constraint: &ConstraintSet,
    boundary: Boundary,
    len: usize,
    site: usize,
    partial: u64,
    spins: &mut [Spin],
    out: &mut Vec<u64>,
) {
    for spin in Spin::ALL {
        if site + 1 < len && constraint.forbids(spin, spins[site + 1]) {
            continue;
        }
        if site == 0 && boundary == Boundary::Periodic {
            let last = if len == 1 { spin } else { spins[len - 1] };
            if constraint.forbids(last, spin) {
                continue;
            }
        }
        spins[site] = spin;
        let code = partial + spin.digit() * pow3(site);
        if site == 0 {
            out.push(code);
        } else {
            extend(constraint, boundary, len, site - 1, code, spins, out);
        }
    }
}

type BigMat = [[BigUint; 3]; 3];

fn big_identity() -> BigMat {
    std::array::from_fn(|i| std::array::from_fn(|j| if i == j { BigUint::one() } else { BigUint::zero() }))
}

fn big_mul(a: &BigMat, b: &BigMat) -> BigMat {
    std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            (0..3).fold(BigUint::zero(), |acc, k| acc + &a[i][k] * &b[k][j])
        })
    })
}

fn big_pow(base: &BigMat, mut exp: usize) -> BigMat {
    let mut result = big_identity();
    let mut square = base.clone();
    while exp > 0 {
        if exp & 1 == 1 {
            result = big_mul(&result, &square);
        }
        square = big_mul(&square, &square);
        exp >>= 1;
    }
    result
}

/// Exact number of allowed configurations from integer transfer-matrix
/// powers: `1^T T^(L-1) 1` for OBC and `trace(T^L)` for PBC.
pub fn count_dimension(constraint: &ConstraintSet, len: usize, boundary: Boundary) -> BigUint {
    if len == 0 {
        return BigUint::zero();
    }
    let t = constraint.transfer_matrix();
    let t: BigMat = std::array::from_fn(|i| std::array::from_fn(|j| BigUint::from(t[i][j])));
    match boundary {
        Boundary::Open => {
            let p = big_pow(&t, len - 1);
            p.iter().flat_map(|row| row.iter()).sum()
        }
        Boundary::Periodic => {
            let p = big_pow(&t, len);
            (0..3).map(|i| p[i][i].clone()).sum()
        }
    }
}

/// [`count_dimension`] narrowed to `u64`; `None` on overflow.
pub fn count_dimension_u64(constraint: &ConstraintSet, len: usize, boundary: Boundary) -> Option<u64> {
    count_dimension(constraint, len, boundary).to_u64()
}

/// Closed-form OBC dimension for the two models that have one.
pub fn closed_form_dimension(preset: Preset, len: usize) -> Result<f64> {
    let l = len as i32;
    match preset {
        Preset::ModelII => {
            let r3 = 3f64.sqrt();
            Ok(((1.0 - r3).powi(l) * (r3 - 2.0) + (1.0 + r3).powi(l) * (r3 + 2.0)) / (2.0 * r3))
        }
        Preset::ModelIII => {
            let r2 = 2f64.sqrt();
            Ok(((1.0 - r2).powi(l + 1) + (1.0 + r2).powi(l + 1)) / 2.0)
        }
        other => Err(Error::UnsupportedModel(format!(
            "no closed-form dimension for {other}"
        ))),
    }
}

/// Spectral radius of the transfer matrix (asymptotic growth `d_{L+1}/d_L`).
pub fn growth_rate(constraint: &ConstraintSet) -> f64 {
    let t = constraint.transfer_matrix();
    let mut v = [1.0f64; 3];
    let mut rate = 0.0;
    for _ in 0..2000 {
        let mut w = [0.0; 3];
        for i in 0..3 {
            for j in 0..3 {
                w[i] += t[i][j] as f64 * v[j];
            }
        }
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 {
            return 0.0;
        }
        rate = norm / v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v = w.map(|x| x / norm);
    }
    rate
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force(constraint: &ConstraintSet, len: usize, boundary: Boundary) -> Vec<u64> {
        (0..pow3(len))
            .filter(|&code| {
                let c = SpinConfig::new(code, len);
                boundary
                    .bonds(len)
                    .into_iter()
                    .all(|(i, j)| constraint.allows(c.get(i), c.get(j)))
            })
            .collect()
    }

    #[test]
    fn small_dimensions() {
        let b = ConstrainedBasis::enumerate(ConstraintSet::model_ii(), 1, Boundary::Open).unwrap();
        assert_eq!(b.dim(), 3);
        let b = ConstrainedBasis::enumerate(ConstraintSet::free(), 3, Boundary::Open).unwrap();
        assert_eq!(b.dim(), 27);
        let b = ConstrainedBasis::enumerate(ConstraintSet::model_iii(), 2, Boundary::Open).unwrap();
        assert_eq!(b.dim(), 7);
    }

    #[test]
    fn model_i_pbc_matches_filter() {
        let c = ConstraintSet::model_i();
        let b = ConstrainedBasis::enumerate(c, 10, Boundary::Periodic).unwrap();
        assert_eq!(b.states(), brute_force(&c, 10, Boundary::Periodic).as_slice());
        assert_eq!(b.dim(), 3281);
    }

    #[test]
    fn transfer_counts() {
        let n = |c: ConstraintSet, l, bc| count_dimension_u64(&c, l, bc).unwrap();
        assert_eq!(n(ConstraintSet::model_ii(), 4, Boundary::Open), 60);
        assert_eq!(n(ConstraintSet::model_iii(), 3, Boundary::Open), 17);
        assert_eq!(n(ConstraintSet::free(), 5, Boundary::Periodic), 243);
    }

    #[test]
    fn closed_forms() {
        assert_eq!(closed_form_dimension(Preset::ModelIII, 3).unwrap().round(), 17.0);
        assert_eq!(closed_form_dimension(Preset::ModelII, 1).unwrap().round(), 3.0);
        assert_eq!(closed_form_dimension(Preset::ModelII, 4).unwrap().round(), 60.0);
        assert!(matches!(
            closed_form_dimension(Preset::ModelI, 4),
            Err(Error::UnsupportedModel(_))
        ));
    }

    #[test]
    fn enumeration_budget() {
        let err = ConstrainedBasis::enumerate_with_budget(
            ConstraintSet::free(),
            12,
            Boundary::Open,
            1000,
        )
        .unwrap_err();
        match err {
            Error::LengthTooLarge { required, .. } => assert_eq!(required, "531441"),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn config_round_trip_and_moves() {
        let c: SpinConfig = "-+0++".parse().unwrap();
        assert_eq!(c.to_string(), "-+0++");
        assert_eq!(c.get(0), Spin::Minus);
        assert_eq!(c.translate(1).to_string(), "+-+0+");
        assert_eq!(c.translate(5), c);
        assert_eq!(c.reflect().to_string(), "++0+-");
        assert_eq!(c.magnetization(), 2);
        assert_eq!(c.with(2, Spin::Plus).to_string(), "-++++");
    }

    #[test]
    fn pair_parsing_recovers_presets() {
        let c = ConstraintSet::parse_pairs("00,++").unwrap();
        assert_eq!(c.tag(), Preset::ModelIII);
        let c = ConstraintSet::parse_pairs("+0,0+").unwrap();
        assert_eq!(c.tag(), Preset::Other);
        assert_eq!(c.label(), "forbid[0+,+0]");
        assert!(ConstraintSet::parse_pairs("0").is_err());
    }

    #[test]
    fn export_format() {
        let b = ConstrainedBasis::enumerate(ConstraintSet::model_iii(), 2, Boundary::Open).unwrap();
        let mut buf = Vec::new();
        b.write_export(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("# constraint=MODEL_III L=2 bc=OBC dim=7"));
        assert_eq!(lines.count(), 7);
    }
}
