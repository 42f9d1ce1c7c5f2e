use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

/// Options shared by every analysis subcommand.
#[derive(Args, Serialize, Deserialize, Clone, Debug)]
pub struct Common {
    /// Constraint preset
    #[arg(long, value_parser = ["I", "II", "III", "free", "pxp1"], required_unless_present = "forbid", conflicts_with = "forbid")]
    pub model: Option<String>,

    /// Explicit forbidden nearest-neighbour pairs, comma separated, using the
    /// symbols `-`, `0`, `+` (e.g. `00,++`)
    #[arg(long, allow_hyphen_values = true)]
    pub forbid: Option<String>,

    /// Chain length
    #[arg(short = 'L', long = "L")]
    pub length: usize,

    /// Boundary condition
    #[arg(long, value_enum, default_value_t = Bc::Pbc)]
    pub bc: Bc,

    /// Symmetry sector `k=<int>,inv=<+1|-1>` (inv optional) or `FULL`
    #[arg(long, default_value = "FULL")]
    pub sector: SectorSpec,

    /// Output directory for CSV and JSON files
    #[arg(long, default_value = "spin1-pxp-out")]
    pub out: PathBuf,

    /// Worker threads for dense linear algebra; 0 uses every core
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bc {
    Obc,
    Pbc,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SectorSpec {
    Full,
    Momentum { k: usize, inv: Option<i8> },
}

impl FromStr for SectorSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.eq_ignore_ascii_case("full") {
            return Ok(SectorSpec::Full);
        }
        let mut k = None;
        let mut inv = None;
        for item in s.split(',').map(str::trim) {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| format!("expected key=value in sector '{s}'"))?;
            match key.trim() {
                "k" => k = Some(value.trim().parse::<usize>().map_err(|e| format!("bad k: {e}"))?),
                "inv" | "I" => {
                    inv = match value.trim() {
                        "+1" | "1" | "+" => Some(1),
                        "-1" | "-" => Some(-1),
                        "none" | "NONE" => None,
                        other => return Err(format!("inv must be +1 or -1, got '{other}'")),
                    }
                }
                other => return Err(format!("unknown sector key '{other}'")),
            }
        }
        let k = k.ok_or_else(|| format!("sector '{s}' is missing k"))?;
        Ok(SectorSpec::Momentum { k, inv })
    }
}

impl fmt::Display for SectorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SectorSpec::Full => f.write_str("FULL"),
            SectorSpec::Momentum { k, inv: None } => write!(f, "k={k}"),
            SectorSpec::Momentum { k, inv: Some(i) } => write!(f, "k={k},inv={i:+}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FsaConvention {
    /// delta_n = ||H- v_n - beta_n v_(n-1)||
    Norm,
    /// delta_n = ||H- v_n - beta_n v_(n-1)||^2
    Norm2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuenchMethod {
    Krylov,
    Spectral,
}

#[derive(Args, Serialize, Deserialize, Clone, Debug)]
pub struct BasisArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Args, Serialize, Deserialize, Clone, Debug)]
pub struct SpectrumArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Args, Serialize, Deserialize, Clone, Debug)]
pub struct FragmentsArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Args, Serialize, Deserialize, Clone, Debug)]
pub struct FsaArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,

    /// How the backward mismatch delta_n is measured
    #[arg(long, value_enum, default_value_t = FsaConvention::Norm2)]
    pub fsa_convention: FsaConvention,
}

#[derive(Args, Serialize, Deserialize, Clone, Debug)]
pub struct QuenchArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,

    /// Final time
    #[arg(long, default_value_t = 30.0)]
    pub tmax: f64,

    /// Output time step
    #[arg(long, default_value_t = 0.05)]
    pub dt: f64,

    /// Propagation method
    #[arg(long, value_enum, default_value_t = QuenchMethod::Krylov)]
    pub method: QuenchMethod,

    /// Sites in the left block of the entanglement cut (default L/2)
    #[arg(long)]
    pub cut: Option<usize>,
}

#[derive(Args, Serialize, Deserialize, Clone, Debug)]
pub struct EntropyArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,

    /// Sites in the left block of the entanglement cut (default L/2)
    #[arg(long)]
    pub cut: Option<usize>,
}

#[derive(Args, Serialize, Deserialize, Clone, Debug)]
pub struct VerifyArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Subcommand, Serialize, Deserialize, Clone, Debug)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Command {
    /// Enumerate the constrained basis and report its dimension with closed-form cross-checks
    Basis(BasisArgs),
    /// Diagonalize and write energies, S_z, half-chain entropy and the Gibbs S_z curve
    Spectrum(SpectrumArgs),
    /// Split the basis into Krylov fragments and report their motif labels
    Fragments(FragmentsArgs),
    /// Run the forward scattering approximation from |Z2>
    Fsa(FsaArgs),
    /// Evolve |Z2> and record fidelity, ++ density, entropy, energy and norm
    Quench(QuenchArgs),
    /// Entanglement entropy of every eigenstate at a chosen cut
    Entropy(EntropyArgs),
    /// Run the conservation, symmetry, closed-form and special-state checks
    Verify(VerifyArgs),
    /// Re-run a recorded run_config.json
    #[serde(skip)]
    Replay {
        /// Path to a run_config.json written by an earlier run
        config: PathBuf,
    },
}

impl Command {
    pub fn common(&self) -> Option<&Common> {
        match self {
            Command::Basis(a) => Some(&a.common),
            Command::Spectrum(a) => Some(&a.common),
            Command::Fragments(a) => Some(&a.common),
            Command::Fsa(a) => Some(&a.common),
            Command::Quench(a) => Some(&a.common),
            Command::Entropy(a) => Some(&a.common),
            Command::Verify(a) => Some(&a.common),
            Command::Replay { .. } => None,
        }
    }
}
