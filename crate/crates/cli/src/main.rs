mod manifest;

use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use romavg_core::budget::{build_basis, interval_table, table_rows, BasisSource};
use romavg_core::cases::{preset, Averaging, CaseFile};
use romavg_core::io::{self, IntervalQuantity};
use romavg_core::verify::{compare_table, run_oracles, OracleReport, VerifyScope};
use romavg_core::{run_case, BasisKind, BasisSet, RankTolerance, SnapshotSet};

use crate::manifest::{sha256_file, BasisMeta, RunManifest};

#[derive(Parser)]
#[command(name = "romavg", version, about = "Inter-mode energy transfer of reduced bases for 1D Burgers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the DNS and write the snapshot file.
    Simulate(CaseArgs),
    /// Build a reduced basis from the snapshot file.
    Basis(BasisArgs),
    /// Time-averaged transfer table for every m in the case.
    Table(TableArgs),
    /// Long-format (time, x, u) profiles for plotting.
    PlotData(PlotArgs),
    /// Run the built-in oracles.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct CaseArgs {
    /// JSON case file, or the id of a bundled case such as `case1`.
    #[arg(long)]
    config: String,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum BasisChoice {
    Pod,
    Spectral,
}

#[derive(Args)]
struct BasisArgs {
    #[command(flatten)]
    case: CaseArgs,
    /// Override the basis kind of the config.
    #[arg(long, value_enum)]
    basis: Option<BasisChoice>,
    /// Fixed relative POD cutoff instead of the snapshot-count default.
    #[arg(long)]
    rank_tol: Option<f64>,
    /// Run the DNS in-process instead of reading the snapshot file.
    #[arg(long)]
    end_to_end: bool,
}

#[derive(Args)]
struct TableArgs {
    #[command(flatten)]
    basis: BasisArgs,
    /// Worker threads for independent m values.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args)]
struct PlotArgs {
    #[command(flatten)]
    case: CaseArgs,
    /// Comma-separated snapshot times; every recorded time when omitted.
    #[arg(long, value_delimiter = ',')]
    times: Vec<f64>,
    #[arg(long)]
    end_to_end: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ScopeChoice {
    All,
    Trilinear,
    Jacobian,
    Picard,
    Spectrum,
    Linear,
    Tables,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, value_enum, default_value = "all")]
    scope: ScopeChoice,
    /// Golden table compared against a fresh case1 run for `--scope tables`.
    #[arg(long, default_value = "configs/golden/case1.pod.table.csv")]
    golden: PathBuf,
    /// Directory for verify.csv and verify.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Simulate(args) => simulate(&args),
        Command::Basis(args) => basis_cmd(&args),
        Command::Table(args) => table_cmd(&args),
        Command::PlotData(args) => plot_data(&args),
        Command::Verify(args) => verify_cmd(&args),
    }
}

fn load_case(spec: &str) -> Result<CaseFile> {
    let path = Path::new(spec);
    let case: CaseFile = if path.exists() {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("invalid config {}", path.display()))?
    } else if let Some(c) = preset(spec) {
        c
    } else {
        bail!("config '{spec}' is neither a readable file nor a bundled case id");
    };
    case.validate().with_context(|| format!("invalid config {spec}"))?;
    Ok(case)
}

fn snapshot_path(out: &Path, case: &CaseFile) -> PathBuf {
    out.join(format!("{}.snapshots.csv", case.id))
}

fn prepare_out(out: &Path) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))
}

fn simulate(args: &CaseArgs) -> Result<()> {
    let case = load_case(&args.config)?;
    prepare_out(&args.out)?;
    let mut manifest = RunManifest::new("simulate", &case);
    let t = Instant::now();
    let snaps = run_case(&case.dns)?;
    manifest.timings.insert("dns".into(), t.elapsed().as_secs_f64());
    let path = snapshot_path(&args.out, &case);
    io::save(&path, |f| io::write_snapshots(&snaps, std::io::BufWriter::new(f)))?;
    manifest.record_output(&path)?;
    let m = manifest.write(&args.out)?;
    println!(
        "{}: {} snapshots ({} steps, max {} Newton iterations) -> {}",
        case.id,
        snaps.len(),
        snaps.stats.steps,
        snaps.stats.max_newton_iterations,
        path.display()
    );
    println!("manifest: {}", m.display());
    Ok(())
}

/// Snapshots from disk, checked against the config, or a fresh run.
fn obtain_snapshots(case: &CaseFile, out: &Path, end_to_end: bool, manifest: &mut RunManifest) -> Result<SnapshotSet> {
    let t = Instant::now();
    if end_to_end {
        let snaps = run_case(&case.dns)?;
        manifest.timings.insert("dns".into(), t.elapsed().as_secs_f64());
        return Ok(snaps);
    }
    let path = snapshot_path(out, case);
    let file = File::open(&path).with_context(|| {
        format!(
            "missing snapshot file {}; run `simulate` first or pass --end-to-end",
            path.display()
        )
    })?;
    let snaps = io::read_snapshots(BufReader::new(file)).with_context(|| format!("reading {}", path.display()))?;
    let (a, b) = (&snaps.config, &case.dns);
    if a.n_cells != b.n_cells || a.nu != b.nu || a.dt != b.dt || a.t_final != b.t_final || a.snapshot_stride != b.snapshot_stride {
        bail!("snapshot file {} was produced by a different configuration", path.display());
    }
    manifest.outputs.push(manifest::OutputFile {
        sha256: sha256_file(&path)?,
        path,
    });
    manifest.timings.insert("load_snapshots".into(), t.elapsed().as_secs_f64());
    Ok(snaps)
}

fn resolve_source(case: &CaseFile, choice: Option<BasisChoice>, rank_tol: Option<f64>) -> Result<BasisSource> {
    let mut source = match choice {
        None => case.basis,
        Some(BasisChoice::Pod) => match case.basis {
            pod @ BasisSource::Pod { .. } => pod,
            BasisSource::Spectral { .. } => BasisSource::default(),
        },
        Some(BasisChoice::Spectral) => BasisSource::Spectral {
            count: case.dns.n_cells - 1,
        },
    };
    if let Some(tol) = rank_tol {
        match &mut source {
            BasisSource::Pod { rank_tol, .. } => *rank_tol = RankTolerance::Relative(tol),
            BasisSource::Spectral { .. } => bail!("--rank-tol applies to POD bases only"),
        }
    }
    Ok(source)
}

fn basis_path(out: &Path, case: &CaseFile, kind: BasisKind) -> PathBuf {
    out.join(format!("{}.{kind}.basis.csv", case.id))
}

fn make_basis(args: &BasisArgs, case: &CaseFile, manifest: &mut RunManifest) -> Result<(SnapshotSet, BasisSet)> {
    let source = resolve_source(case, args.basis, args.rank_tol)?;
    manifest.case.basis = source;
    let snaps = obtain_snapshots(case, &args.case.out, args.end_to_end, manifest)?;
    let t = Instant::now();
    let basis = build_basis(&snaps, &source)?;
    manifest.timings.insert("basis".into(), t.elapsed().as_secs_f64());
    let path = basis_path(&args.case.out, case, basis.kind);
    io::save(&path, |f| io::write_basis(&basis, std::io::BufWriter::new(f)))?;
    manifest.record_output(&path)?;
    manifest.basis = Some(BasisMeta::from(&basis));
    Ok((snaps, basis))
}

fn basis_cmd(args: &BasisArgs) -> Result<()> {
    let case = load_case(&args.case.config)?;
    prepare_out(&args.case.out)?;
    let mut manifest = RunManifest::new("basis", &case);
    let (_, basis) = make_basis(args, &case, &mut manifest)?;
    let m = manifest.write(&args.case.out)?;
    println!(
        "{}: {} basis, d = {} (rank_tol {:e})",
        case.id, basis.kind, basis.d(), basis.rank_tol
    );
    println!("manifest: {}", m.display());
    Ok(())
}

fn table_cmd(args: &TableArgs) -> Result<()> {
    let b = &args.basis;
    let case = load_case(&b.case.config)?;
    prepare_out(&b.case.out)?;
    let mut manifest = RunManifest::new("table", &case);
    let (snaps, basis) = make_basis(b, &case, &mut manifest)?;
    let usable: Vec<usize> = case.m_list.iter().copied().filter(|&m| m <= basis.d()).collect();
    if usable.len() < case.m_list.len() {
        eprintln!(
            "warning: dropping m > d = {} from m_list {:?}",
            basis.d(),
            case.m_list
        );
    }
    manifest.m_list = usable.clone();
    let out = &b.case.out;
    let t = Instant::now();
    match &case.averaging {
        Averaging::Whole { n } => {
            manifest.n = Some(*n);
            let rows = table_rows(&snaps, &basis, &usable, *n, args.jobs)?;
            let path = out.join(format!("{}.{}.table.csv", case.id, basis.kind));
            io::save(&path, |f| io::write_table(&rows, f))?;
            manifest.record_output(&path)?;
            println!("{:>4} {:>24} {:>24} {:>24}", "m", "avg_e_m", "avg_E_m", "avg_sum");
            for r in &rows {
                println!("{:>4} {:>24.16e} {:>24.16e} {:>24.16e}", r.m, r.avg_e_m, r.avg_cap_e_m, r.avg_sum);
            }
        }
        Averaging::Intervals {
            intervals,
            normalization,
        } => {
            let table = interval_table(&snaps, &basis, &usable, intervals, *normalization, args.jobs)?;
            for (suffix, which) in [("e", IntervalQuantity::Transfer), ("E", IntervalQuantity::Viscous)] {
                let path = out.join(format!("{}.{}.table_{suffix}.csv", case.id, basis.kind));
                io::save(&path, |f| io::write_interval_table(&table, which, f))?;
                manifest.record_output(&path)?;
            }
            for r in &table.rows {
                println!("{:>4} e_m {:?} E_m {:?}", r.m, r.e_m, r.cap_e_m);
            }
        }
    }
    manifest.timings.insert("averages".into(), t.elapsed().as_secs_f64());
    let m = manifest.write(out)?;
    println!("{}: d = {}, manifest: {}", case.id, basis.d(), m.display());
    Ok(())
}

fn plot_data(args: &PlotArgs) -> Result<()> {
    let case = load_case(&args.case.config)?;
    prepare_out(&args.case.out)?;
    let mut manifest = RunManifest::new("plot-data", &case);
    let snaps = obtain_snapshots(&case, &args.case.out, args.end_to_end, &mut manifest)?;
    let selected = if args.times.is_empty() {
        snaps.clone()
    } else {
        let mut idx = Vec::with_capacity(args.times.len());
        for &t in &args.times {
            idx.push(
                snaps
                    .index_of_time(t)
                    .ok_or(romavg_core::Error::TimeNotRecorded(t))?,
            );
        }
        SnapshotSet {
            times: idx.iter().map(|&k| snaps.times[k]).collect(),
            states: idx.iter().map(|&k| snaps.states[k].clone()).collect(),
            config: snaps.config.clone(),
            stats: snaps.stats,
        }
    };
    let path = args.case.out.join(format!("{}.profiles.csv", case.id));
    io::save(&path, |f| io::write_profiles(&selected, 1, std::io::BufWriter::new(f)))?;
    manifest.record_output(&path)?;
    manifest.write(&args.case.out)?;
    println!("{} profiles -> {}", selected.len(), path.display());
    Ok(())
}

fn verify_cmd(args: &VerifyArgs) -> Result<()> {
    let mut reports: Vec<OracleReport> = Vec::new();
    let scope = match args.scope {
        ScopeChoice::All => Some(VerifyScope::All),
        ScopeChoice::Trilinear => Some(VerifyScope::Trilinear),
        ScopeChoice::Jacobian => Some(VerifyScope::Jacobian),
        ScopeChoice::Picard => Some(VerifyScope::Picard),
        ScopeChoice::Spectrum => Some(VerifyScope::Spectrum),
        ScopeChoice::Linear => Some(VerifyScope::Linear),
        ScopeChoice::Tables => None,
    };
    if let Some(scope) = scope {
        reports.extend(run_oracles(scope)?);
    } else {
        let file = File::open(&args.golden).with_context(|| format!("opening golden table {}", args.golden.display()))?;
        let golden = io::read_table(BufReader::new(file))?;
        let case = preset("case1").expect("bundled case");
        let snaps = run_case(&case.dns)?;
        let basis = build_basis(&snaps, &case.basis)?;
        let m_list: Vec<usize> = golden.iter().map(|r| r.m).collect();
        let n = golden.first().map_or(100, |r| r.n);
        let rows = table_rows(&snaps, &basis, &m_list, n, 1)?;
        reports.push(compare_table("case1 table vs golden", &golden, &rows, 1e-9));
    }
    for r in &reports {
        println!("{r}");
    }
    if let Some(dir) = &args.out {
        prepare_out(dir)?;
        let mut w = csv::Writer::from_path(dir.join("verify.csv"))?;
        for r in &reports {
            w.serialize(r)?;
        }
        w.flush()?;
        fs::write(dir.join("verify.json"), serde_json::to_string_pretty(&reports)? + "\n")?;
    }
    let failed = reports.iter().filter(|r| !r.pass).count();
    if failed > 0 {
        bail!("{failed} of {} oracle checks failed", reports.len());
    }
    Ok(())
}
