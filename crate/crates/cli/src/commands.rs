use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use hexgap::basis::SectorBasis;
use hexgap::criterion::{
    certify_chain, certify_sun, coverage_audit, floor_to, pair_coverage_audit, ChainGapInputs, CoverageReport, CriterionReport,
    GapEntry, SolverMetadata, Verdict,
};
use hexgap::eigensolve::{spectral_gap, SpectralResult};
use hexgap::hamiltonian::assemble;
use hexgap::io::matrix_market::{write_csr, write_local};
use hexgap::lattice::{hexagonal_chain, subsystem_a, subsystem_b, subsystem_c, subsystem_c_tilde, sun, LatticeGraph};
use hexgap::spin::spin_projector;
use serde::Serialize;

use crate::args::{CertifyTarget, Cli, Command, ExportTarget, GapSources, SystemArgs, SystemKind};
use crate::cache::{cache_key, Cache};
use crate::config::RunConfig;
use crate::fail::{CliError, EXIT_FAILED, EXIT_OK, EXIT_REFUSED, EXIT_SOLVER};
use crate::output::{write_artifact, Sink};

const TABLE2_ROWS: [usize; 6] = [5, 10, 11, 12, 13, 14];

pub fn run(cli: Cli) -> Result<u8, CliError> {
    let cfg = RunConfig::from_args(&cli.common)?;
    if let Some(t) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot start {t} threads: {e}")))?;
    }
    let ctx = Context { cache: Cache::new(cfg.cache.as_deref()), cfg, sink: Sink::new(cli.common.json.as_deref()) };
    match cli.command {
        Command::Gap(system) => ctx.gap(&system),
        Command::Table { which, k } => ctx.table(which, k, cli.common.csv.as_deref()),
        Command::Certify { target } => ctx.certify(target),
        Command::Audit { n, k } => ctx.audit(n, k),
        Command::Export { what } => ctx.export(what),
    }
}

fn build_system(s: &SystemArgs) -> Result<LatticeGraph, CliError> {
    let need =
        |what: &str, v: Option<usize>| v.ok_or_else(|| CliError::Usage(format!("--system {:?} requires {what}", s.system)));
    let graph = match s.system {
        SystemKind::A => subsystem_a(),
        SystemKind::B => subsystem_b(),
        SystemKind::C => subsystem_c(need("--K", s.k)?)?,
        SystemKind::CTilde => subsystem_c_tilde(need("--K", s.k)?)?,
        SystemKind::Chain => hexagonal_chain(need("--n", s.n)?)?,
        SystemKind::Sun => sun(s.a.ok_or_else(|| CliError::Usage("--system sun requires --a".into()))?)?,
    };
    Ok(graph)
}

/// A solved system, fresh or from the cache.
struct Solved {
    result: SpectralResult,
    key: String,
    cached: bool,
    seconds: f64,
}

impl Solved {
    fn entry(&self) -> GapEntry {
        GapEntry {
            value: self.result.gap,
            metadata: SolverMetadata::from_result(&self.result.system, &self.result, "computed", Some(self.key.clone())),
        }
    }
}

#[derive(Serialize)]
struct GapOutput<'a> {
    cache_key: &'a str,
    #[serde(flatten)]
    result: &'a SpectralResult,
}

#[derive(Serialize)]
struct TableRow {
    system: String,
    #[serde(rename = "K", skip_serializing_if = "Option::is_none")]
    k: Option<usize>,
    status: &'static str,
    gap: Option<f64>,
    lower_bound: Option<f64>,
    dim: Option<usize>,
    max_residual: Option<f64>,
    note: String,
}

#[derive(Serialize)]
struct TableOutput {
    table: u8,
    rows: Vec<TableRow>,
}

#[derive(Serialize)]
struct AuditOutput {
    n: usize,
    #[serde(rename = "K")]
    k: usize,
    pass: bool,
    edges: CoverageReport,
    pairs: CoverageReport,
}

struct Context<'a> {
    cfg: RunConfig,
    cache: Cache,
    sink: Sink<'a>,
}

impl Context<'_> {
    fn solve(&self, graph: &LatticeGraph) -> Result<Solved, CliError> {
        let key = cache_key(graph, &self.cfg);
        if let Some(result) = self.cache.load(&key) {
            return Ok(Solved { result, key, cached: true, seconds: 0.0 });
        }
        let start = Instant::now();
        let result = spectral_gap(graph, self.cfg.spin(), self.cfg.total_spin, self.cfg.strategy, &self.cfg.gap_options())?;
        self.cache.store(&key, &result)?;
        Ok(Solved { result, key, cached: false, seconds: start.elapsed().as_secs_f64() })
    }

    fn gap(&self, system: &SystemArgs) -> Result<u8, CliError> {
        let graph = build_system(system)?;
        let solved = self.solve(&graph)?;
        let r = &solved.result;
        let mut t = String::new();
        let _ = writeln!(t, "system      {} ({} sites, {} edges)", r.system, r.num_sites, r.num_edges);
        let _ = writeln!(
            t,
            "solver      {:?}, {:?}, tol {:e}, kernel tol {:e}, seed {}",
            r.solver, r.strategy, r.tol, r.kernel_tolerance, r.seed
        );
        for s in &r.sectors {
            let gap = s.gap.map_or("-".to_string(), |g| format!("{g:.12}"));
            let kernel = if s.kernel_count_exact {
                format!("{}", s.kernel_dimension_estimate)
            } else {
                format!(">={}", s.kernel_dimension_estimate)
            };
            let _ = writeln!(
                t,
                "sector 2Sz={:<4} dim {:<9} kernel {:<5} gap {}  residual {:.1e}  matvecs {}  restarts {}",
                s.twice_total_sz,
                s.dim,
                kernel,
                gap,
                s.residuals.iter().copied().fold(0.0, f64::max),
                s.matvecs,
                s.restarts
            );
        }
        let _ = writeln!(t, "ground      {:.3e}", r.ground_energy);
        let _ = writeln!(t, "gap         {:.12} (sector 2Sz={})", r.gap, r.gap_sector);
        let _ = writeln!(t, "lower bound {:.3}", floor_to(r.gap, 3));
        let how = if solved.cached { "cache hit" } else { "computed" };
        let _ = writeln!(t, "runtime     {:.2} s ({how}, key {})", solved.seconds, &solved.key[..16]);
        self.sink.text(&t);
        self.sink.json(&self.cfg, &GapOutput { cache_key: &solved.key, result: r })?;
        Ok(EXIT_OK)
    }

    fn table(&self, which: u8, ks: Option<Vec<usize>>, csv_path: Option<&Path>) -> Result<u8, CliError> {
        let systems: Vec<(Option<usize>, Result<LatticeGraph, CliError>)> = if which == 1 {
            vec![(None, Ok(subsystem_a())), (None, Ok(subsystem_b()))]
        } else {
            ks.unwrap_or_else(|| TABLE2_ROWS.to_vec())
                .into_iter()
                .map(|k| (Some(k), subsystem_c(k).map_err(CliError::from)))
                .collect()
        };
        let mut rows = Vec::new();
        let mut code = EXIT_OK;
        for (k, graph) in systems {
            let name = match (&graph, k) {
                (Ok(g), _) => g.name.clone(),
                (Err(_), Some(k)) => format!("C({k})"),
                (Err(_), None) => String::new(),
            };
            let row = match graph.and_then(|g| self.solve(&g)) {
                Ok(s) => TableRow {
                    system: name,
                    k,
                    status: "ok",
                    gap: Some(s.result.gap),
                    lower_bound: Some(floor_to(s.result.gap, 3)),
                    dim: s.result.sectors.iter().map(|x| x.dim).max(),
                    max_residual: Some(s.result.max_residual()),
                    note: String::new(),
                },
                Err(e) => {
                    let refused = e.exit_code() == EXIT_REFUSED;
                    code = code.max(if refused { EXIT_REFUSED } else { EXIT_SOLVER });
                    if !refused && e.exit_code() != EXIT_SOLVER {
                        return Err(e);
                    }
                    TableRow {
                        system: name,
                        k,
                        status: if refused { "skipped" } else { "failed" },
                        gap: None,
                        lower_bound: None,
                        dim: None,
                        max_residual: None,
                        note: e.to_string(),
                    }
                }
            };
            rows.push(row);
        }
        // A solver failure outranks a budget skip.
        if rows.iter().any(|r| r.status == "failed") {
            code = EXIT_SOLVER;
        }
        let mut t = String::new();
        let _ = writeln!(t, "{:<8} {:<16} {:<12} {}", "system", "gap", "lower bound", "note");
        for r in &rows {
            let gap = r.gap.map_or("-".into(), |g| format!("{g:.12}"));
            let lb = r.lower_bound.map_or("-".into(), |g| format!("{g:.3}"));
            let note = if r.status == "ok" { String::new() } else { format!("{}: {}", r.status, r.note) };
            let _ = writeln!(t, "{:<8} {:<16} {:<12} {}", r.system, gap, lb, note);
        }
        self.sink.text(&t);
        if let Some(path) = csv_path {
            write_csv(path, &rows)?;
        }
        self.sink.json(&self.cfg, &TableOutput { table: which, rows })?;
        Ok(code)
    }

    fn certify(&self, target: CertifyTarget) -> Result<u8, CliError> {
        let report = match target {
            CertifyTarget::Chain { k, gaps } => {
                let supplied = supplied_gaps(&gaps)?;
                let c_name = format!("C({k})");
                let mut missing = Vec::new();
                let mut get = |names: &[&str], build: &dyn Fn() -> hexgap::Result<LatticeGraph>| match self
                    .obtain(names, &supplied, build)
                {
                    Ok(e) => Some(e),
                    Err(e) => {
                        missing.push((names[0].to_string(), e));
                        None
                    }
                };
                // Validate K before any solve.
                hexgap::criterion::chain_threshold(k)?;
                let inputs = ChainGapInputs {
                    a: get(&["A"], &|| Ok(subsystem_a())),
                    b: get(&["B"], &|| Ok(subsystem_b())),
                    c: get(&[c_name.as_str(), "C"], &|| subsystem_c(k)),
                };
                if !missing.is_empty() {
                    return Err(CliError::Missing(missing));
                }
                certify_chain(k, &inputs)?
            }
            CertifyTarget::Sun { a, gaps } => {
                let supplied = supplied_gaps(&gaps)?;
                hexgap::criterion::sun_threshold(a)?;
                let graph = sun(a)?;
                let name = graph.name.clone();
                let entry = self.obtain(&[name.as_str(), "sun", "S"], &supplied, &|| Ok(graph.clone()))?;
                certify_sun(a, entry)?
            }
        };
        self.sink.text(&certificate_text(&report));
        self.sink.json(&self.cfg, &report)?;
        Ok(if report.verdict == Verdict::Certified { EXIT_OK } else { EXIT_FAILED })
    }

    /// A supplied value under any of `names`, otherwise a cached or fresh solve.
    fn obtain(
        &self,
        names: &[&str],
        supplied: &BTreeMap<String, f64>,
        build: &dyn Fn() -> hexgap::Result<LatticeGraph>,
    ) -> Result<GapEntry, CliError> {
        if let Some(v) = names.iter().find_map(|n| supplied.get(*n)) {
            return Ok(GapEntry::supplied(names[0], *v));
        }
        Ok(self.solve(&build()?)?.entry())
    }

    fn audit(&self, n: usize, k: usize) -> Result<u8, CliError> {
        let edges = coverage_audit(n, k)?;
        let pairs = pair_coverage_audit(n, k)?;
        let pass = edges.pass && pairs.pass;
        let mut t = String::new();
        let _ = writeln!(t, "audit n = {n}, K = {k}");
        for c in edges.classes.iter().chain(&pairs.classes) {
            let rel = if c.class == "disjoint" { "<=" } else { "==" };
            let _ = writeln!(
                t,
                "{:<16} members {:<6} totals {:?} {rel} {}  raw (A,B,C) {:?}  {}",
                c.class,
                c.members,
                c.totals,
                c.expected,
                c.raw_counts,
                if c.pass { "ok" } else { "FAIL" }
            );
        }
        if let Some(d) = &pairs.max_disjoint {
            let _ = writeln!(t, "max disjoint     {} <= {} at [{}] [{}]", d.total, d.bound, d.pair[0], d.pair[1]);
        }
        let _ = writeln!(t, "result           {}", if pass { "pass" } else { "FAIL" });
        self.sink.text(&t);
        self.sink.json(&self.cfg, &AuditOutput { n, k, pass, edges, pairs })?;
        Ok(if pass { EXIT_OK } else { EXIT_FAILED })
    }

    fn export(&self, what: ExportTarget) -> Result<u8, CliError> {
        match what {
            ExportTarget::Edges { system, out } => {
                let g = build_system(&system)?;
                let text = format!(
                    "# {} sites {} edges {}\n# x1 y1 x2 y2 weight class\n{}",
                    g.name,
                    g.num_vertices(),
                    g.num_edges(),
                    g.to_edge_list()
                );
                write_artifact(out.as_deref(), |w| Ok(w.write_all(text.as_bytes())?))?;
            }
            ExportTarget::Mtx { system, sector, out } => {
                let g = build_system(&system)?;
                let s = self.cfg.spin();
                let basis = match sector {
                    Some(tsz) => SectorBasis::new(g.num_vertices(), s, tsz)?,
                    None => SectorBasis::minimal(g.num_vertices(), s)?,
                };
                if let Some(budget) = self.cfg.max_dim {
                    if basis.dim() > budget {
                        return Err(hexgap::Error::Budget { dim: basis.dim(), budget }.into());
                    }
                }
                let tsz = basis.twice_total_sz();
                let h = assemble(&g, s, self.cfg.total_spin, basis)?;
                let comment = format!(
                    "{} s=3/2 J={} sector 2Sz={tsz}\nbasis: lexicographic in local index i (m = s - i), site 0 most significant",
                    g.name, self.cfg.total_spin
                );
                let csr = h.build_csr();
                write_artifact(out.as_deref(), |w| write_csr(&csr, &comment, w))?;
            }
            ExportTarget::Projector { total_spin, out } => {
                let p = spin_projector(self.cfg.spin(), total_spin)?;
                let comment = format!("projector onto pair spin {total_spin}, s=3/2, basis |m1 m2> with m descending");
                write_artifact(out.as_deref(), |w| write_local(&p, &comment, w))?;
            }
        }
        Ok(EXIT_OK)
    }
}

fn supplied_gaps(src: &GapSources) -> Result<BTreeMap<String, f64>, CliError> {
    let mut out = BTreeMap::new();
    if let Some(path) = &src.gaps_file {
        let text = std::fs::read_to_string(path).map_err(CliError::file(path))?;
        let parsed: BTreeMap<String, f64> = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("{}: expected a JSON object of gap values: {e}", path.display())))?;
        out.extend(parsed);
    }
    for o in &src.overrides {
        let (name, value) = o.split_once('=').ok_or_else(|| CliError::Usage(format!("--gap expects SYSTEM=VALUE, got `{o}`")))?;
        let value: f64 = value.trim().parse().map_err(|_| CliError::Usage(format!("--gap {name}: `{value}` is not a number")))?;
        out.insert(name.trim().to_string(), value);
    }
    Ok(out)
}

fn write_csv(path: &Path, rows: &[TableRow]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| format!("{x:?}"));
    let io = |e: csv::Error| CliError::Usage(format!("{}: {e}", path.display()));
    w.write_record(["system", "K", "status", "gap", "lower_bound", "dim", "max_residual", "note"]).map_err(io)?;
    for r in rows {
        w.write_record([
            r.system.clone(),
            r.k.map_or(String::new(), |k| k.to_string()),
            r.status.to_string(),
            opt(r.gap),
            r.lower_bound.map_or(String::new(), |x| format!("{x:.3}")),
            r.dim.map_or(String::new(), |d| d.to_string()),
            opt(r.max_residual),
            r.note.clone(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(CliError::file(path))
}

fn certificate_text(r: &CriterionReport) -> String {
    let mut t = String::new();
    let _ = writeln!(t, "model       {}", r.model);
    if let Some(k) = r.k {
        let _ = writeln!(t, "K           {k}");
    }
    if let Some(a) = r.a {
        let _ = writeln!(t, "a           {a}");
    }
    for m in &r.solver_metadata {
        let value = match (&r.gaps, m.system.as_str()) {
            (Some(g), "A") => g.A,
            (Some(g), "B") => g.B,
            (Some(g), _) => g.C,
            (None, _) => r.gamma_min,
        };
        let residual = m.max_residual.map_or(String::new(), |x| format!(", residual {x:.1e}"));
        let _ = writeln!(t, "gap {:<8} {value:.12} ({}{residual})", m.system, m.source);
    }
    let _ = writeln!(t, "gamma_min   {:.12} ({})", r.gamma_min, r.gamma_min_system);
    let frac = r.threshold.fraction.as_deref().map_or(String::new(), |f| format!("{f} = "));
    let _ = writeln!(t, "threshold   {frac}{:.12}", r.threshold.value);
    if let Some(b) = r.bound {
        let _ = writeln!(t, "bound       {b:.12}");
    }
    let _ = writeln!(t, "verdict     {}", if r.verdict == Verdict::Certified { "certified" } else { "failed" });
    if let Some(c) = r.constant_c {
        let _ = writeln!(t, "constant c  {c:.3}");
    }
    if let Some(s) = r.shortfall {
        let _ = writeln!(t, "shortfall   {:.2}%", 100.0 * s);
    }
    if let Some(a) = &r.audit {
        let _ = writeln!(t, "audit       {} at n = {}", if a.pass { "pass" } else { "FAIL" }, a.n);
    }
    let _ = writeln!(t, "applies to  {}", r.applicability);
    t
}
