use rayon::prelude::*;
use serde::Serialize;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use roaming::config::RunConfig;
use roaming::io::{create_with_header, tag, Stamp, ARTIFACT, ARTIFACT_VERSION};
use roaming::manifolds::{curve_set_operations, manifold_area_budget, BudgetReport, RegionAreas};
use roaming::model::{self, find_critical_points, ModelParams};
use roaming::orbits::{self, Family, PeriodicOrbit};
use roaming::transport::{monte_carlo_sweep, report_from_areas, CellGeometry, CellOutcome, MonteCarloReport, TransportReport};
use roaming::{Error, Result};

#[derive(Debug, Default)]
pub struct Summary {
    pub computed: usize,
    pub absent: usize,
    pub failed: usize,
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} computed, {} absent, {} failed", self.computed, self.absent, self.failed)
    }
}

#[derive(Clone, Copy, Debug)]
struct Cell {
    e: f64,
    m: f64,
    a: f64,
}

impl Cell {
    fn key(&self) -> String {
        format!("E{}_m{}_a{}", tag(self.e), tag(self.m), tag(self.a))
    }
}

fn grid(cfg: &RunConfig) -> Vec<Cell> {
    let mut cells = Vec::new();
    for &e in &cfg.energies {
        for &a in &cfg.couplings {
            for &m in &cfg.masses {
                cells.push(Cell { e, m, a });
            }
        }
    }
    cells
}

/// Errors that mean "this structure does not exist here" rather than a failure.
fn is_absence(e: &Error) -> bool {
    matches!(e, Error::NoRoot(_) | Error::OutOfBox(_) | Error::Orbit(_))
}

#[derive(Serialize)]
struct JsonHeader {
    artifact: &'static str,
    version: &'static str,
    kind: String,
    energy: f64,
    params: ModelParams,
}

fn write_json<T: Serialize>(path: &Path, kind: &str, e: f64, p: &ModelParams, body: &T) -> Result<()> {
    #[derive(Serialize)]
    struct Doc<'a, T> {
        header: JsonHeader,
        #[serde(flatten)]
        body: &'a T,
    }
    let doc = Doc {
        header: JsonHeader { artifact: ARTIFACT, version: ARTIFACT_VERSION, kind: kind.into(), energy: e, params: *p },
        body,
    };
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let s = serde_json::to_string_pretty(&doc).map_err(|e| Error::Io(e.to_string()))?;
    std::fs::write(path, s + "\n")?;
    Ok(())
}

pub fn critical_points(cfg: &RunConfig) -> Result<Summary> {
    let mut summary = Summary::default();
    let base = cfg.model;
    let stamp = Stamp::new("critical-points").params(&base).with("couplings", format!("{:?}", cfg.couplings));
    let mut w = create_with_header(&cfg.out_dir.join("critical_points.csv"), &stamp)?;
    writeln!(w, "a,point,r,theta,energy,index")?;
    for &a in &cfg.couplings {
        let p = base.with_coupling(a);
        match find_critical_points(&p, 5.0) {
            Ok(points) => {
                summary.computed += 1;
                for c in points {
                    let idx = c.index.map(|i| i.to_string()).unwrap_or_else(|| "degenerate".into());
                    writeln!(w, "{},{},{:.10},{:.10},{:.10},{}", a, c.tag(), c.r, c.theta, c.energy, idx)?;
                }
            }
            Err(e) => {
                log::error!("critical points for a = {a}: {e}");
                summary.failed += 1;
            }
        }
        if cfg.emit.radial_sections {
            let stamp = Stamp::new("radial-section").params(&p).with("theta", "pi/2");
            let path = cfg.out_dir.join("radial_sections").join(format!("theta_pi2_a{}.csv", tag(a)));
            let mut s = create_with_header(&path, &stamp)?;
            writeln!(s, "r,U")?;
            for i in 0..=600 {
                let r = 0.9 + 5.1 * i as f64 / 600.0;
                writeln!(s, "{:.6},{:.10}", r, model::potential(r, std::f64::consts::FRAC_PI_2, &p)?)?;
            }
        }
    }
    Ok(summary)
}

enum OrbitOutcome {
    Found(Box<PeriodicOrbit>),
    Absent(String),
    Failed(String),
}

/// Closure and symplecticity gate applied before an orbit is emitted.
fn gate(o: &PeriodicOrbit) -> std::result::Result<(), String> {
    if o.closure > 1e-8 {
        return Err(format!("closure {:.2e} above 1e-8", o.closure));
    }
    let d = (o.monodromy_det() - 1.0).abs();
    if d > 1e-8 {
        return Err(format!("|det M - 1| = {d:.2e} above 1e-8"));
    }
    Ok(())
}

pub fn orbits(cfg: &RunConfig) -> Result<Summary> {
    let cells = grid(cfg);
    let s = cfg.settings.orbit;
    let results: Vec<Vec<(Family, OrbitOutcome)>> = cells
        .par_iter()
        .map(|c| {
            let p = cfg.params(c.m, c.a);
            [Family::Inner, Family::Middle, Family::Outer]
                .into_iter()
                .map(|fam| {
                    let out = match orbits::find(fam, c.e, &p, None, &s) {
                        Ok(o) => match gate(&o) {
                            Ok(()) => OrbitOutcome::Found(Box::new(o)),
                            Err(msg) => OrbitOutcome::Failed(msg),
                        },
                        Err(e) if is_absence(&e) => OrbitOutcome::Absent(e.to_string()),
                        Err(e) => OrbitOutcome::Failed(e.to_string()),
                    };
                    (fam, out)
                })
                .collect()
        })
        .collect();

    let mut summary = Summary::default();
    let stamp = Stamp::new("orbits")
        .params(&cfg.model)
        .with("energies", format!("{:?}", cfg.energies))
        .with("masses", format!("{:?}", cfg.masses))
        .with("couplings", format!("{:?}", cfg.couplings));
    let mut w = create_with_header(&cfg.out_dir.join("orbits.csv"), &stamp)?;
    writeln!(
        w,
        "E,m,a,family,status,r,p_theta,period,reduced_period,action,lambda1_re,lambda1_im,lambda2_re,lambda2_im,stability,det_minus_1,closure,note"
    )?;
    let tol = s.tol.without_drift_check();
    for (c, fams) in cells.iter().zip(results) {
        for (fam, out) in fams {
            let prefix = format!("{},{},{},{}", c.e, c.m, c.a, fam.name());
            match out {
                OrbitOutcome::Found(o) => {
                    summary.computed += 1;
                    let [(l1r, l1i), (l2r, l2i)] = o.multipliers;
                    writeln!(
                        w,
                        "{prefix},ok,{:.12},{:.12},{:.12},{:.12},{:.12},{:.10e},{:.10e},{:.10e},{:.10e},{:?},{:.3e},{:.3e},",
                        o.anchor.r,
                        o.anchor.p_theta,
                        o.period,
                        o.reduced_period,
                        o.action,
                        l1r,
                        l1i,
                        l2r,
                        l2i,
                        o.stability,
                        o.monodromy_det() - 1.0,
                        o.closure
                    )?;
                    if cfg.emit.projections {
                        let path = cfg.out_dir.join("projections").join(format!("{}_{}.csv", c.key(), fam.name()));
                        let stamp = Stamp::new("orbit-projection").energy(c.e).params(&o.params).with("family", fam.name());
                        let mut pw = create_with_header(&path, &stamp)?;
                        writeln!(pw, "r,theta,x,y")?;
                        for (r, th) in o.projection(400, &tol)? {
                            writeln!(pw, "{:.10},{:.10},{:.10},{:.10}", r, th, r * th.cos(), r * th.sin())?;
                        }
                    }
                }
                OrbitOutcome::Absent(reason) => {
                    summary.absent += 1;
                    writeln!(w, "{prefix},absent,,,,,,,,,,,,,{}", reason.replace(',', ";"))?;
                }
                OrbitOutcome::Failed(reason) => {
                    log::error!("{} {}: {reason}", c.key(), fam.name());
                    summary.failed += 1;
                    writeln!(w, "{prefix},failed,,,,,,,,,,,,,{}", reason.replace(',', ";"))?;
                }
            }
        }
    }
    Ok(summary)
}

#[derive(Serialize)]
struct AreasDoc<'a> {
    epsilon_inner: f64,
    epsilon_outer: f64,
    n_seeds: usize,
    spacing: f64,
    areas: &'a RegionAreas,
    budget: &'a BudgetReport,
    report: &'a TransportReport,
}

fn cell_dir(out: &Path, c: &Cell) -> PathBuf {
    out.join("sections").join(c.key())
}

pub fn manifold_section(cfg: &RunConfig) -> Result<Summary> {
    let cells = grid(cfg);
    let results: Vec<Result<Option<String>>> = cells
        .par_iter()
        .map(|c| {
            let p = cfg.params(c.m, c.a);
            let cell = match CellGeometry::locate(c.e, &p, &cfg.settings) {
                Ok(g) => g,
                Err(e) if is_absence(&e) => return Ok(Some(e.to_string())),
                Err(e) => return Err(e),
            };
            let ms = &cfg.settings.manifold;
            let (gi, go) = match cell.curves(ms) {
                Ok(x) => x,
                Err(e) if is_absence(&e) => return Ok(Some(e.to_string())),
                Err(e) => return Err(e),
            };
            let areas = curve_set_operations(&gi, &go, 0.0)?;
            let budget = manifold_area_budget(&areas, &cell.inner, &cell.outer, 0.01)?;
            let report = report_from_areas(c.e, &p, &areas)?;
            let dir = cell_dir(&cfg.out_dir, c);
            if cfg.emit.curves {
                for curve in [&gi, &go] {
                    let stamp = Stamp::new("section-curve")
                        .energy(c.e)
                        .params(&p)
                        .with("source", curve.source.name())
                        .with("epsilon", if curve.source.name().starts_with("gamma_i") { ms.epsilon_inner } else { ms.epsilon_outer })
                        .with("n_seeds", ms.n_seeds)
                        .with("fibers", curve.n_fibers)
                        .with("gaps", curve.gaps.len());
                    let w = create_with_header(&dir.join(format!("{}.csv", curve.source.name())), &stamp)?;
                    curve.write_csv(w)?;
                }
            }
            let doc = AreasDoc {
                epsilon_inner: ms.epsilon_inner,
                epsilon_outer: ms.epsilon_outer,
                n_seeds: ms.n_seeds,
                spacing: ms.spacing,
                areas: &areas,
                budget: &budget,
                report: &report,
            };
            write_json(&dir.join("areas.json"), "region-areas", c.e, &p, &doc)?;
            if !budget.ok {
                log::warn!(
                    "{}: area budget off by {:.2}% (inner) and {:.2}% (outer)",
                    c.key(),
                    100.0 * budget.rel_err_inner,
                    100.0 * budget.rel_err_outer
                );
            }
            Ok(None)
        })
        .collect();
    let mut summary = Summary::default();
    let stamp = Stamp::new("manifold-section-index").params(&cfg.model);
    let mut w = create_with_header(&cfg.out_dir.join("sections").join("index.csv"), &stamp)?;
    writeln!(w, "E,m,a,status,note")?;
    for (c, r) in cells.iter().zip(results) {
        let (status, note) = match r {
            Ok(None) => {
                summary.computed += 1;
                ("ok", String::new())
            }
            Ok(Some(reason)) => {
                summary.absent += 1;
                ("absent", reason)
            }
            Err(e) => {
                log::error!("{}: {e}", c.key());
                summary.failed += 1;
                ("failed", e.to_string())
            }
        };
        writeln!(w, "{},{},{},{},{}", c.e, c.m, c.a, status, note.replace(',', ";"))?;
    }
    Ok(summary)
}

enum BoundCell {
    Done(Box<TransportReport>),
    Absent(String),
    Failed(String),
}

fn bound_cell(cfg: &RunConfig, c: &Cell) -> BoundCell {
    if let Some(rule) = cfg.omitted(c.e, c.m) {
        return BoundCell::Absent(rule.reason.clone());
    }
    let p = cfg.params(c.m, c.a);
    let run = || -> Result<CellOutcome> {
        let cell = match CellGeometry::locate(c.e, &p, &cfg.settings) {
            Ok(g) => g,
            Err(e) if is_absence(&e) => return Ok(CellOutcome::Absent { reason: e.to_string() }),
            Err(e) => return Err(e),
        };
        let (gi, go) = match cell.curves(&cfg.settings.manifold) {
            Ok(x) => x,
            Err(e) if is_absence(&e) => return Ok(CellOutcome::Absent { reason: e.to_string() }),
            Err(e) => return Err(e),
        };
        let areas = curve_set_operations(&gi, &go, 0.0)?;
        let mut report = report_from_areas(c.e, &p, &areas)?;
        if cfg.mc_samples > 0 {
            let mc: MonteCarloReport = monte_carlo_sweep(&cell, cfg.mc_samples, cfg.seed, &cfg.budgets, &cfg.settings.orbit.tol)?;
            if mc.unreliable {
                report.flags.push("monte carlo trapped fraction above 5%".into());
            }
            report.monte_carlo = Some(mc);
        }
        Ok(CellOutcome::Computed(Box::new(report)))
    };
    match run() {
        Ok(CellOutcome::Computed(r)) => BoundCell::Done(r),
        Ok(CellOutcome::Absent { reason }) => BoundCell::Absent(reason),
        Err(e) => BoundCell::Failed(e.to_string()),
    }
}

pub fn bound_table(cfg: &RunConfig) -> Result<Summary> {
    let cells = grid(cfg);
    let results: Vec<BoundCell> = cells.par_iter().map(|c| bound_cell(cfg, c)).collect();
    let mut summary = Summary::default();
    for &e in &cfg.energies {
        let stamp = Stamp::new("bound-table")
            .energy(e)
            .params(&cfg.model)
            .with("masses", format!("{:?}", cfg.masses))
            .with("couplings", format!("{:?}", cfg.couplings))
            .with("convention", roaming::transport::V_INF_CONVENTION.replace(' ', "_"))
            .with("seed", cfg.seed)
            .with("mc_samples", cfg.mc_samples);
        let mut table = create_with_header(&cfg.out_dir.join(format!("bound_table_E{}.csv", tag(e))), &stamp)?;
        let mut long = create_with_header(&cfg.out_dir.join(format!("bound_cells_E{}.csv", tag(e))), &stamp)?;
        let cols: Vec<String> = cfg.masses.iter().map(|m| format!("m={m}")).collect();
        writeln!(table, "a,{}", cols.join(","))?;
        writeln!(long, "E,m,a,status,bound,A_esc,A_diss,A_int,V_inf,mc_ratio,mc_ratio_sigma,mc_roaming,mc_trapped,note")?;
        let mut mc_docs = Vec::new();
        for &a in &cfg.couplings {
            let mut row = vec![format!("{a}")];
            for &m in &cfg.masses {
                let i = cells.iter().position(|c| c.e == e && c.m == m && c.a == a).expect("cell in grid");
                match &results[i] {
                    BoundCell::Done(r) => {
                        summary.computed += 1;
                        row.push(format!("{:.3}", r.bound));
                        let (mr, ms, nr, nt) = match &r.monte_carlo {
                            Some(mc) => (
                                format!("{:.6}", mc.roaming_ratio),
                                format!("{:.6}", mc.roaming_ratio_sigma),
                                mc.counts.roaming.to_string(),
                                mc.counts.trapped.to_string(),
                            ),
                            None => Default::default(),
                        };
                        writeln!(
                            long,
                            "{e},{m},{a},ok,{:.6},{:.8},{:.8},{:.8},{:.8},{mr},{ms},{nr},{nt},{}",
                            r.bound,
                            r.a_esc,
                            r.a_diss,
                            r.a_int,
                            r.v_inf,
                            r.flags.join("; ").replace(',', ";")
                        )?;
                        if let Some(mc) = &r.monte_carlo {
                            mc_docs.push((m, a, mc.clone()));
                        }
                    }
                    BoundCell::Absent(reason) => {
                        summary.absent += 1;
                        row.push(String::new());
                        writeln!(long, "{e},{m},{a},absent,,,,,,,,,,{}", reason.replace(',', ";"))?;
                    }
                    BoundCell::Failed(reason) => {
                        summary.failed += 1;
                        log::error!("E={e} m={m} a={a}: {reason}");
                        row.push("error".into());
                        writeln!(long, "{e},{m},{a},failed,,,,,,,,,,{}", reason.replace(',', ";"))?;
                    }
                }
            }
            writeln!(table, "{}", row.join(","))?;
        }
        if !mc_docs.is_empty() {
            #[derive(Serialize)]
            struct McCell {
                m: f64,
                a: f64,
                report: MonteCarloReport,
            }
            let body: Vec<McCell> = mc_docs.into_iter().map(|(m, a, report)| McCell { m, a, report }).collect();
            #[derive(Serialize)]
            struct McDoc {
                cells: Vec<McCell>,
            }
            write_json(&cfg.out_dir.join(format!("monte_carlo_E{}.json", tag(e))), "monte-carlo", e, &cfg.model, &McDoc { cells: body })?;
        }
    }
    Ok(summary)
}
