use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use spin1_pxp::basis::{closed_form_dimension, growth_rate};
use spin1_pxp::dynamics::{entropy_slope, evolve_z2, Method, QuenchOptions, ENTROPY_WINDOW};
use spin1_pxp::fragmentation::{decompose, enumerate_inert, inert_count_closed_form};
use spin1_pxp::fsa::{
    analytic_first_error, analytic_first_error_step, forward_scatter, fsa_spectrum_and_overlap, split_hamiltonian,
    DeltaConvention, FsaOptions, Z2Phase,
};
use spin1_pxp::hamiltonian::{conserved_npp, conserved_oi};
use spin1_pxp::spectral::{
    build_special_state, dense_support, diagonalize, eigenreport, full_spectrum, magnetization, mirror_defect,
    schmidt_spectrum, von_neumann, write_eigenreport, GibbsEnsemble, ProductExpansion,
};
use spin1_pxp::symmetry::{verify_anticommutation, Inversion, SymmetrySector};
use spin1_pxp::{
    build_hamiltonian, count_dimension, Boundary, ConstrainedBasis, ConstraintSet, Error, Preset, SparseOperator,
    StateSpace,
};

use crate::config::{
    Bc, BasisArgs, Common, EntropyArgs, FragmentsArgs, FsaArgs, FsaConvention, QuenchArgs, QuenchMethod, SectorSpec,
    SpectrumArgs, VerifyArgs,
};

/// Failure of a subcommand, carrying its exit code.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Resource(String),
    Verification(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Verification(_) => 3,
            CliError::Resource(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Resource(m) => write!(f, "resource limit: {m}"),
            CliError::Verification(m) => write!(f, "verification failed: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::LengthTooLarge { .. } | Error::TooLargeForFullSpectrum { .. } | Error::MethodInfeasible { .. } => {
                CliError::Resource(e.to_string())
            }
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Config(format!("i/o: {e}"))
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

fn constraint(common: &Common) -> CliResult<ConstraintSet> {
    match (&common.model, &common.forbid) {
        (Some(m), _) => Ok(ConstraintSet::preset(m.parse::<Preset>()?)),
        (None, Some(pairs)) => Ok(ConstraintSet::parse_pairs(pairs)?),
        (None, None) => Err(CliError::Config("one of --model or --forbid is required".into())),
    }
}

fn boundary(common: &Common) -> Boundary {
    match common.bc {
        Bc::Obc => Boundary::Open,
        Bc::Pbc => Boundary::Periodic,
    }
}

fn load_basis(common: &Common) -> CliResult<ConstrainedBasis> {
    Ok(ConstrainedBasis::enumerate(constraint(common)?, common.length, boundary(common))?)
}

fn load_sector<'a>(basis: &'a ConstrainedBasis, spec: SectorSpec) -> CliResult<Option<SymmetrySector<'a>>> {
    match spec {
        SectorSpec::Full => Ok(None),
        SectorSpec::Momentum { k, inv } => {
            let inversion = match inv {
                Some(1) => Inversion::Even,
                Some(_) => Inversion::Odd,
                None => Inversion::Unresolved,
            };
            Ok(Some(SymmetrySector::build(basis, k, inversion)?))
        }
    }
}

fn require_full(common: &Common, command: &str) -> CliResult<()> {
    if common.sector != SectorSpec::Full {
        return Err(CliError::Config(format!("{command} runs on the full basis; drop --sector")));
    }
    Ok(())
}

fn create(dir: &Path, name: &str) -> CliResult<(BufWriter<File>, PathBuf)> {
    let path = dir.join(name);
    Ok((BufWriter::new(File::create(&path)?), path))
}

fn header(common: &Common, c: &ConstraintSet) -> Value {
    json!({
        "constraint": c.label(),
        "L": common.length,
        "bc": boundary(common).to_string(),
        "sector": common.sector.to_string(),
    })
}

fn merge(mut base: Value, extra: Value) -> Value {
    if let (Some(b), Value::Object(e)) = (base.as_object_mut(), extra) {
        b.extend(e);
    }
    base
}

pub fn basis(args: &BasisArgs, out: &Path) -> CliResult<Value> {
    let common = &args.common;
    let c = constraint(common)?;
    let b = load_basis(common)?;
    let (mut w, export) = create(out, "basis.csv")?;
    b.write_export(&mut w)?;
    w.flush()?;
    let counted = count_dimension(&c, common.length, boundary(common));
    let closed_form = match (boundary(common), closed_form_dimension(c.tag(), common.length)) {
        (Boundary::Open, Ok(v)) => Some(v),
        _ => None,
    };
    let mut summary = json!({
        "dim": b.dim(),
        "dim_transfer_matrix": counted.to_string(),
        "dim_closed_form": closed_form,
        "closed_form_matches": closed_form.map(|v| v.round() as u64 == b.dim() as u64),
        "growth_rate": growth_rate(&c),
        "files": [export],
    });
    if let Some(sector) = load_sector(&b, common.sector)? {
        let (mut w, report) = create(out, "sector.txt")?;
        sector.write_report(&mut w)?;
        w.flush()?;
        summary = merge(summary, json!({ "sector_dim": sector.dim(), "files": [export, report] }));
    }
    Ok(merge(header(common, &c), summary))
}

fn spectrum_on<S: ProductExpansion>(h: &SparseOperator, space: &S, out: &Path) -> CliResult<Value> {
    let es = diagonalize(h)?;
    let rows = eigenreport(&es, space)?;
    let (mut w, report) = create(out, "eigenreport.csv")?;
    write_eigenreport(&rows, &mut w)?;
    w.flush()?;
    let mut files = vec![report];
    let energies: Vec<f64> = rows.iter().map(|r| r.energy).collect();
    if energies.len() > 1 && energies[energies.len() - 1] - energies[0] > 1e-9 {
        let sz: Vec<f64> = rows.iter().map(|r| r.s_z).collect();
        let gibbs = GibbsEnsemble::new(energies.clone(), sz)?;
        let (lo, hi) = (energies[0], energies[energies.len() - 1]);
        let grid: Vec<f64> = (1..100).map(|i| lo + (hi - lo) * i as f64 / 100.0).collect();
        let mut text = String::from("energy,S_z_thermal\n");
        for (e, s) in gibbs.curve(&grid)? {
            text.push_str(&format!("{e:.16e},{s:.16e}\n"));
        }
        let path = out.join("gibbs_sz.csv");
        fs::write(&path, text)?;
        files.push(path);
    }
    Ok(json!({
        "dim": es.dim(),
        "e_min": energies.first(),
        "e_max": energies.last(),
        "mirror_defect": mirror_defect(&energies),
        "max_residual": es.max_residual(h)?,
        "largest_block": es.block_sizes().into_iter().max(),
        "files": files,
    }))
}

pub fn spectrum(args: &SpectrumArgs, out: &Path) -> CliResult<Value> {
    let common = &args.common;
    let b = load_basis(common)?;
    let summary = match load_sector(&b, common.sector)? {
        Some(s) => spectrum_on(&s.hamiltonian(), &s, out)?,
        None => spectrum_on(&build_hamiltonian(&b), &b, out)?,
    };
    Ok(merge(header(common, b.constraint()), summary))
}

fn fragments_on<S: StateSpace>(h: &SparseOperator, space: &S, out: &Path) -> CliResult<Value> {
    let d = decompose(h, space)?;
    let (mut w, path) = create(out, "fragments.csv")?;
    d.write_csv(&mut w)?;
    w.flush()?;
    let largest: Vec<Value> = d
        .fragments
        .iter()
        .take(10)
        .map(|f| json!({ "size": f.size(), "labels": f.labels, "min_code": f.min_code }))
        .collect();
    Ok(json!({
        "dim": d.dim,
        "fragments": d.len(),
        "singletons": d.singletons(),
        "largest": largest,
        "size_histogram": d.size_histogram(),
        "files": [path],
    }))
}

pub fn fragments(args: &FragmentsArgs, out: &Path) -> CliResult<Value> {
    let common = &args.common;
    let b = load_basis(common)?;
    let mut summary = match load_sector(&b, common.sector)? {
        Some(s) => fragments_on(&s.hamiltonian(), &s, out)?,
        None => fragments_on(&build_hamiltonian(&b), &b, out)?,
    };
    if b.constraint().tag() == Preset::ModelI {
        let census = enumerate_inert(b.constraint().clone(), common.length, boundary(common))?;
        summary = merge(
            summary,
            json!({ "inert_states": census.count, "inert_closed_form": inert_count_closed_form(common.length, boundary(common)) }),
        );
    }
    Ok(merge(header(common, b.constraint()), summary))
}

pub fn fsa(args: &FsaArgs, out: &Path) -> CliResult<Value> {
    let common = &args.common;
    require_full(common, "fsa")?;
    let b = load_basis(common)?;
    let convention = match args.fsa_convention {
        FsaConvention::Norm => DeltaConvention::Norm,
        FsaConvention::Norm2 => DeltaConvention::NormSquared,
    };
    let split = split_hamiltonian(&b, Z2Phase::default())?;
    let run = forward_scatter(
        &split,
        FsaOptions {
            convention,
            retain_vectors: true,
        },
    )?;
    let (mut w, path) = create(out, "fsa.csv")?;
    run.write_csv(&mut w)?;
    w.flush()?;
    let eigen = fsa_spectrum_and_overlap(&run)?;
    let mut text = String::from("energy,z2_overlap_sq\n");
    for e in &eigen {
        text.push_str(&format!("{:.16e},{:.16e}\n", e.energy, e.z2_overlap));
    }
    let spectrum_path = out.join("fsa_spectrum.csv");
    fs::write(&spectrum_path, text)?;

    let n_f = run.first_error_step();
    let delta_nf = n_f.map(|n| run.delta[n - 1]);
    let preset = b.constraint().tag();
    let analytic = analytic_first_error(preset, common.length).ok().map(|v| match convention {
        DeltaConvention::NormSquared => v,
        DeltaConvention::Norm => v.sqrt(),
    });
    let summary = json!({
        "convention": convention.tag(),
        "n_f": n_f,
        "n_f_analytic": analytic_first_error_step(preset).ok(),
        "delta_nf": delta_nf,
        "delta_nf_analytic": analytic,
        "delta_total": run.delta_total(),
        "beta": run.beta,
        "delta": run.delta,
        "terminal_norm": run.terminal_norm,
        "final_overlap": run.final_overlap,
        "files": [path, spectrum_path],
    });
    Ok(merge(header(common, b.constraint()), summary))
}

pub fn quench(args: &QuenchArgs, out: &Path) -> CliResult<Value> {
    let common = &args.common;
    require_full(common, "quench")?;
    if !(args.dt > 0.0 && args.tmax >= 0.0) {
        return Err(CliError::Config("need --dt > 0 and --tmax >= 0".into()));
    }
    let b = load_basis(common)?;
    let options = QuenchOptions {
        t_max: args.tmax,
        dt: args.dt,
        method: match args.method {
            QuenchMethod::Krylov => Method::KrylovStep,
            QuenchMethod::Spectral => Method::Spectral,
        },
        cut: args.cut,
        ..QuenchOptions::default()
    };
    let r = evolve_z2(&build_hamiltonian(&b), &b, options)?;
    let (mut w, path) = create(out, "quench.csv")?;
    r.write_csv(&mut w)?;
    w.flush()?;
    let (norm_defect, energy_drift) = r.conservation_defects();
    let slope = (args.tmax >= ENTROPY_WINDOW.1).then(|| entropy_slope(&r, ENTROPY_WINDOW));
    let summary = json!({
        "steps": r.times.len(),
        "norm_defect": norm_defect,
        "energy_drift": energy_drift,
        "entropy_slope": slope,
        "entropy_window": [ENTROPY_WINDOW.0, ENTROPY_WINDOW.1],
        "max_fidelity_after_t2": (args.tmax > 2.0).then(|| r.max_fidelity_in(2.0, args.tmax)),
        "files": [path],
    });
    Ok(merge(header(common, b.constraint()), summary))
}

fn entropy_on<S: ProductExpansion>(h: &SparseOperator, space: &S, cut: usize, out: &Path) -> CliResult<Value> {
    let es = diagonalize(h)?;
    let len = space.chain_length();
    let mut text = String::from("index,energy,S\n");
    let mut values = Vec::with_capacity(es.len());
    for i in 0..es.len() {
        let entries = space.expand(&es.support(i)?);
        let s = von_neumann(&schmidt_spectrum(&entries, len, cut)?);
        text.push_str(&format!("{i},{:.16e},{s:.16e}\n", es.energy(i)));
        values.push(s);
    }
    let path = out.join("entropy.csv");
    fs::write(&path, text)?;
    let n = values.len();
    let mut mid = values[n / 4..(3 * n / 4).max(n / 4 + 1).min(n)].to_vec();
    mid.sort_by(f64::total_cmp);
    Ok(json!({
        "dim": n,
        "mid_spectrum_min": mid.first(),
        "mid_spectrum_median": mid.get(mid.len() / 2),
        "mid_spectrum_max": mid.last(),
        "files": [path],
    }))
}

pub fn entropy(args: &EntropyArgs, out: &Path) -> CliResult<Value> {
    let common = &args.common;
    let b = load_basis(common)?;
    let cut = args.cut.unwrap_or(common.length / 2);
    if cut > common.length {
        return Err(CliError::Config(format!("cut {cut} exceeds L = {}", common.length)));
    }
    let mut summary = match load_sector(&b, common.sector)? {
        Some(s) => entropy_on(&s.hamiltonian(), &s, cut, out)?,
        None => entropy_on(&build_hamiltonian(&b), &b, cut, out)?,
    };
    let mut special = Vec::new();
    for n in [1, 2] {
        for sign in [1i8, -1] {
            if let Ok(st) = build_special_state(&b, n, sign) {
                let entries = b.expand(&dense_support(&st.vector));
                let s = von_neumann(&schmidt_spectrum(&entries, common.length, cut)?);
                special.push(json!({ "n": n, "sign": sign, "energy": st.energy(), "S": s }));
            }
        }
    }
    summary = merge(summary, json!({ "cut": cut, "special_states": special }));
    Ok(merge(header(common, b.constraint()), summary))
}

struct Check {
    name: String,
    status: &'static str,
    detail: String,
}

fn check(name: &str, ok: bool, detail: String) -> Check {
    Check {
        name: name.into(),
        status: if ok { "PASS" } else { "FAIL" },
        detail,
    }
}

pub fn verify(args: &VerifyArgs, out: &Path) -> CliResult<Value> {
    let common = &args.common;
    require_full(common, "verify")?;
    let b = load_basis(common)?;
    let c = b.constraint().clone();
    let len = common.length;
    let bc = boundary(common);
    let preset = c.tag();
    let h = build_hamiltonian(&b);
    let mut checks = Vec::new();

    let counted = count_dimension(&c, len, bc);
    let mut ok = counted == (b.dim() as u64).into();
    let mut detail = format!("enumerated {}, transfer matrix {counted}", b.dim());
    if let (Boundary::Open, Ok(v)) = (bc, closed_form_dimension(preset, len)) {
        ok &= v.round() as u64 == b.dim() as u64;
        detail.push_str(&format!(", closed form {v:.3}"));
    }
    checks.push(check("dimension", ok, detail));

    let sym = h.symmetry_defect();
    checks.push(check("hermiticity", sym == 0.0, format!("max |H - H^T| = {sym:e}")));
    let anti = verify_anticommutation(&h, &b)?;
    checks.push(check("particle-hole", anti == 0.0, format!("max |CHC + H| = {anti:e}")));

    match preset {
        Preset::ModelI => {
            let d = h.commutator(&conserved_npp(&b)).max_abs();
            checks.push(check("N_pp conservation", d == 0.0, format!("max |[N_pp, H]| = {d:e}")));
        }
        Preset::ModelII => {
            let mut worst = 0.0f64;
            for site in 0..len {
                worst = worst.max(h.commutator(&conserved_oi(&b, site)?).max_abs());
            }
            checks.push(check("O_i conservation", worst == 0.0, format!("max |[O_i, H]| = {worst:e}")));
        }
        _ => {}
    }

    match full_spectrum(&b, &h) {
        Ok(spectrum) => {
            let d = mirror_defect(&spectrum);
            checks.push(check("spectrum symmetry", d < 1e-10, format!("max |E_i + E_(n-1-i)| = {d:e}")));
        }
        Err(Error::TooLargeForFullSpectrum { dim, limit }) => checks.push(Check {
            name: "spectrum symmetry".into(),
            status: "SKIP",
            detail: format!("block of dimension {dim} exceeds {limit}"),
        }),
        Err(e) => return Err(e.into()),
    }

    if preset == Preset::ModelI && len >= 2 {
        for boundary in [Boundary::Open, Boundary::Periodic] {
            let census = enumerate_inert(c.clone(), len, boundary)?;
            let closed = inert_count_closed_form(len, boundary);
            checks.push(check(
                &format!("inert census {boundary}"),
                census.count as u128 == closed,
                format!("enumerated {}, closed form {closed}", census.count),
            ));
        }
    }

    if preset == Preset::ModelI && bc == Boundary::Periodic {
        for n in [1usize, 2] {
            for sign in [1i8, -1] {
                let Ok(st) = build_special_state(&b, n, sign) else { continue };
                let hv = h.apply(&st.vector);
                let res = hv
                    .iter()
                    .zip(&st.vector)
                    .map(|(a, v)| (a - st.energy() * v).powi(2))
                    .sum::<f64>()
                    .sqrt();
                let sz = magnetization(&st.vector, &b)?;
                let expect = len as f64 - 5.0 * n as f64;
                checks.push(check(
                    &format!("special state n={n} E={:+}", st.energy()),
                    res < 1e-12 && (sz - expect).abs() < 1e-10,
                    format!("residual {res:e}, S_z {sz:.12} (expected {expect})"),
                ));
            }
        }
    }

    if bc == Boundary::Periodic && len % 2 == 0 && len >= 6 {
        if let (Ok(step), Ok(target)) = (analytic_first_error_step(preset), analytic_first_error(preset, len)) {
            let run = forward_scatter(&split_hamiltonian(&b, Z2Phase::default())?, FsaOptions::default())?;
            let got = run.delta[step - 1];
            checks.push(check(
                "FSA first error",
                run.first_error_step() == Some(step) && (got - target).abs() < 1e-10,
                format!("n_f {:?}, delta {got:e} vs {target:e}", run.first_error_step()),
            ));
        }
    }

    for c in &checks {
        println!("{} {}: {}", c.status, c.name, c.detail);
    }
    let failed: Vec<&str> = checks.iter().filter(|c| c.status == "FAIL").map(|c| c.name.as_str()).collect();
    let list: Vec<Value> = checks
        .iter()
        .map(|c| json!({ "check": c.name, "status": c.status, "detail": c.detail }))
        .collect();
    let summary = merge(header(common, &c), json!({ "checks": list, "passed": failed.is_empty() }));
    fs::write(out.join("verify.json"), serde_json::to_string_pretty(&summary).unwrap() + "\n")?;
    if !failed.is_empty() {
        return Err(CliError::Verification(failed.join(", ")));
    }
    Ok(summary)
}
