//! Convergence studies on the benchmark problem: run configuration, the
//! per-level solve-and-measure loop, CSV rate tables and plot data.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::analysis::{benchmark_errors, ErrorRecord};
use crate::dg_space::DgSpace;
use crate::error::{Error, Result};
use crate::fe_hessian::FluxKind;
use crate::manufactured::BenchmarkSolution;
use crate::mesh::Mesh;
use crate::pbiharm::{solve_with, Discretization, SolveConfig};
use crate::scalar::Real;
use crate::vtk;

pub const CSV_HEADER: &str = "n,h,err_u_Lp,eoc_u,err_D_Lp,eoc_D,dgnorm_err,eoc_dg,iters";

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig<T> {
    pub p: T,
    pub k: usize,
    pub sigma: T,
    pub levels: Vec<usize>,
    pub epsilon: Option<T>,
    pub newton_tol: T,
    pub out_dir: Option<PathBuf>,
    pub emit_vtk: bool,
    pub quad_bump: usize,
    pub flux: FluxKind,
}

impl<T: Real> RunConfig<T> {
    pub fn new(p: T, k: usize) -> Self {
        Self {
            p,
            k,
            sigma: T::lit(10.0),
            levels: Self::default_levels(k),
            epsilon: None,
            newton_tol: T::lit(1e-10),
            out_dir: None,
            emit_vtk: false,
            quad_bump: 0,
            flux: FluxKind::default(),
        }
    }

    pub fn default_levels(k: usize) -> Vec<usize> {
        if k == 2 { vec![4, 8, 16, 32] } else { vec![4, 8, 16] }
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |m: String| Err(Error::InvalidArgument(m));
        if !(2..=4).contains(&self.k) {
            return invalid(format!("k must be 2, 3 or 4, got {}", self.k));
        }
        if ![2.0, 3.0, 4.0, 5.0].iter().any(|&q| self.p == T::lit(q)) {
            return invalid(format!("p must be 2, 3, 4 or 5, got {}", self.p));
        }
        if !(self.sigma > T::zero()) {
            return invalid(format!("sigma must be positive, got {}", self.sigma));
        }
        if self.levels.is_empty() || self.levels[0] == 0 || self.levels.windows(2).any(|w| w[0] >= w[1]) {
            return invalid(format!("levels must be positive and strictly increasing, got {:?}", self.levels));
        }
        if !(self.newton_tol > T::zero()) {
            return invalid("newton tolerance must be positive".into());
        }
        if self.epsilon.is_some_and(|e| !(e >= T::zero())) {
            return invalid("epsilon must be non-negative".into());
        }
        Ok(())
    }

    /// Sets one option by name; the same keys are used in config files.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn parse<V: FromStr>(key: &str, value: &str) -> Result<V> {
            value.parse().map_err(|_| Error::Parse(format!("invalid value '{value}' for '{key}'")))
        }
        let real = |v: &str| parse::<f64>(key, v).map(T::lit);
        match key {
            "p" => self.p = real(value)?,
            "k" => {
                self.k = parse(key, value)?;
                self.levels = Self::default_levels(self.k);
            }
            "sigma" => self.sigma = real(value)?,
            "levels" => self.levels = value.split(',').map(|v| parse(key, v.trim())).collect::<Result<_>>()?,
            "eps" | "epsilon" => self.epsilon = Some(real(value)?),
            "tol" | "newton_tol" => self.newton_tol = real(value)?,
            "out" => self.out_dir = Some(PathBuf::from(value)),
            "emit_vtk" => self.emit_vtk = parse(key, value)?,
            "quad_bump" => self.quad_bump = parse(key, value)?,
            "flux" => self.flux = value.parse()?,
            _ => return Err(Error::Parse(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines; `#` starts a comment. Keys are applied in
    /// order, so a later `levels` overrides the default implied by `k`.
    pub fn apply_str(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key = value", i + 1)))?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let mut cfg = Self::new(T::lit(2.0), 2);
        cfg.apply_str(&fs::read_to_string(path)?)?;
        Ok(cfg)
    }

    pub fn solve_config(&self) -> SolveConfig<T> {
        let mut cfg = SolveConfig::new(self.p).with_sigma(self.sigma);
        cfg.epsilon = self.epsilon;
        cfg.newton_tol = self.newton_tol;
        cfg.quad_bump = self.quad_bump;
        cfg.flux = self.flux;
        cfg
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyOutcome<T> {
    /// One record per converged level, in order.
    pub records: Vec<ErrorRecord<T>>,
    /// First level whose solve did not converge; the study stops there.
    pub failed_level: Option<usize>,
}

impl<T: Real> StudyOutcome<T> {
    pub fn converged(&self) -> bool {
        self.failed_level.is_none()
    }

    pub fn last(&self) -> Option<&ErrorRecord<T>> {
        self.records.last()
    }
}

/// Solves the benchmark problem on every level and measures the errors.
/// Writes `rates.csv` and plot data into `cfg.out_dir` when set.
pub fn run_study<T: Real>(cfg: &RunConfig<T>) -> Result<StudyOutcome<T>> {
    cfg.validate()?;
    let exact = BenchmarkSolution::<T>::new();
    let solve_cfg = cfg.solve_config();
    let p = cfg.p;
    let mut records: Vec<ErrorRecord<T>> = Vec::new();
    let mut failed_level = None;
    if let Some(dir) = &cfg.out_dir {
        fs::create_dir_all(dir)?;
    }
    for &n in &cfg.levels {
        let space = DgSpace::new(Mesh::build_structured(n)?, cfg.k)?;
        // f = ∇·q is integrated by parts: for p > 2 it jumps across {Δu = 0}.
        let disc = Discretization::new(&space, &solve_cfg)?;
        let load = disc.load_vector_divergence(&|x| exact.forcing_flux(x, p));
        let sol = solve_with(&disc, &load, &solve_cfg, None)?;
        if !sol.report.converged {
            failed_level = Some(n);
            break;
        }
        let degree = solve_cfg.quadrature_degree(&space) + 4;
        let (err_u, err_d, dg_parts) = benchmark_errors(&sol.u, &sol.d, p, degree);
        let record = ErrorRecord {
            n,
            h: space.mesh().meshsize(),
            err_u,
            err_d,
            err_dg: dg_parts.norm(p),
            dg_parts,
            eoc_u: None,
            eoc_d: None,
            eoc_dg: None,
            iterations: sol.report.iterations(),
        }
        .with_rates_from(records.last());
        records.push(record);
        if let (Some(dir), true) = (&cfg.out_dir, cfg.emit_vtk) {
            vtk::emit_vtk(&sol.u, &sol.d, &dir.join(format!("solution_n{n}.vtk")))?;
        }
    }
    let outcome = StudyOutcome { records, failed_level };
    if let Some(dir) = &cfg.out_dir {
        write_outputs(&outcome.records, dir)?;
    }
    Ok(outcome)
}

fn fmt_opt<T: Real>(v: Option<T>) -> String {
    v.map_or_else(String::new, |x| format!("{:.4}", x.to_f64_lossy()))
}

pub fn to_csv<T: Real>(records: &[ErrorRecord<T>]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for r in records {
        let _ = writeln!(
            s,
            "{},{:.6e},{:.6e},{},{:.6e},{},{:.6e},{},{}",
            r.n,
            r.h.to_f64_lossy(),
            r.err_u.to_f64_lossy(),
            fmt_opt(r.eoc_u),
            r.err_d.to_f64_lossy(),
            fmt_opt(r.eoc_d),
            r.err_dg.to_f64_lossy(),
            fmt_opt(r.eoc_dg),
            r.iterations
        );
    }
    s
}

/// `log h  log e` pairs for one error kind.
pub fn plot_data<T: Real>(records: &[ErrorRecord<T>], error: impl Fn(&ErrorRecord<T>) -> T) -> String {
    let mut s = String::from("# log(h) log(error)\n");
    for r in records {
        let _ = writeln!(s, "{:.10e} {:.10e}", r.h.to_f64_lossy().ln(), error(r).to_f64_lossy().ln());
    }
    s
}

pub fn write_outputs<T: Real>(records: &[ErrorRecord<T>], dir: &Path) -> Result<()> {
    fs::write(dir.join("rates.csv"), to_csv(records))?;
    fs::write(dir.join("err_u.dat"), plot_data(records, |r| r.err_u))?;
    fs::write(dir.join("err_D.dat"), plot_data(records, |r| r.err_d))?;
    fs::write(dir.join("err_dg.dat"), plot_data(records, |r| r.err_dg))?;
    Ok(())
}

/// One parsed CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub n: usize,
    pub h: f64,
    pub err_u: f64,
    pub eoc_u: Option<f64>,
    pub err_d: f64,
    pub eoc_d: Option<f64>,
    pub err_dg: f64,
    pub eoc_dg: Option<f64>,
    pub iterations: usize,
}

pub fn parse_csv(text: &str) -> Result<Vec<CsvRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(Error::Parse("unexpected CSV header".into()));
    }
    lines
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 9 {
                return Err(Error::Parse(format!("expected 9 columns in '{line}'")));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| Error::Parse(format!("bad number '{s}'")));
            let opt = |s: &str| if s.is_empty() { Ok(None) } else { num(s).map(Some) };
            let int = |s: &str| s.parse::<usize>().map_err(|_| Error::Parse(format!("bad integer '{s}'")));
            Ok(CsvRow {
                n: int(f[0])?,
                h: num(f[1])?,
                err_u: num(f[2])?,
                eoc_u: opt(f[3])?,
                err_d: num(f[4])?,
                eoc_d: opt(f[5])?,
                err_dg: num(f[6])?,
                eoc_dg: opt(f[7])?,
                iterations: int(f[8])?,
            })
        })
        .collect()
}

/// Runs the same study for every `σ`.
pub fn sigma_sweep<T: Real>(cfg: &RunConfig<T>, sigmas: &[T]) -> Result<Vec<(T, StudyOutcome<T>)>> {
    if sigmas.len() < 2 {
        return Err(Error::InvalidArgument("a sweep needs at least two values of sigma".into()));
    }
    sigmas
        .iter()
        .map(|&sigma| {
            let mut c = cfg.clone();
            c.sigma = sigma;
            c.out_dir = cfg.out_dir.as_ref().map(|d| d.join(format!("sigma_{sigma}")));
            run_study(&c).map(|o| (sigma, o))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(RunConfig::new(2.0, 2).validate().is_ok());
        assert!(RunConfig::new(2.0, 5).validate().is_err());
        assert!(RunConfig::new(2.5, 2).validate().is_err());
        let mut c = RunConfig::new(3.0, 2);
        c.sigma = 0.0;
        assert!(c.validate().is_err());
        let mut c = RunConfig::new(3.0, 2);
        c.levels = vec![4, 4];
        assert!(c.validate().is_err());
        c.levels = vec![8, 4];
        assert!(c.validate().is_err());
    }

    #[test]
    fn default_levels() {
        assert_eq!(RunConfig::<f64>::new(2.0, 2).levels, vec![4, 8, 16, 32]);
        assert_eq!(RunConfig::<f64>::new(2.0, 3).levels, vec![4, 8, 16]);
        assert_eq!(RunConfig::<f64>::new(2.0, 4).levels, vec![4, 8, 16]);
    }

    #[test]
    fn config_text() {
        let mut c = RunConfig::<f64>::new(2.0, 2);
        c.apply_str("# study\np = 3\nk=3 # cubic\nlevels = 2, 4\nsigma=100\neps=1e-6\ntol=1e-9\nemit_vtk=true\nout=/tmp/x\nquad_bump=2\nflux=ip\n")
            .unwrap();
        assert_eq!(c.p, 3.0);
        assert_eq!(c.k, 3);
        assert_eq!(c.levels, vec![2, 4]);
        assert_eq!(c.sigma, 100.0);
        assert_eq!(c.epsilon, Some(1e-6));
        assert_eq!(c.newton_tol, 1e-9);
        assert!(c.emit_vtk);
        assert_eq!(c.out_dir, Some(PathBuf::from("/tmp/x")));
        assert_eq!(c.quad_bump, 2);
        assert_eq!(c.flux, FluxKind::InteriorPenalty);
        assert!(c.clone().apply_str("bogus = 1").is_err());
        assert!(c.clone().apply_str("p 3").is_err());
        assert!(c.apply_str("k = two").is_err());
    }

    #[test]
    fn single_level_has_no_rates() {
        let mut c = RunConfig::new(2.0, 2);
        c.levels = vec![2];
        let out = run_study(&c).unwrap();
        assert!(out.converged());
        let r = &out.records[0];
        assert!(r.err_u > 0.0 && r.err_d > 0.0 && r.err_dg > 0.0);
        assert!(r.eoc_u.is_none() && r.eoc_d.is_none() && r.eoc_dg.is_none());
        let rows = parse_csv(&to_csv(&out.records)).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].eoc_u, None);
        assert_eq!(rows[0].n, 2);
    }

    #[test]
    fn csv_round_trip_and_determinism() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = RunConfig::new(2.0, 2);
        c.levels = vec![2, 4];
        c.out_dir = Some(dir.path().join("a"));
        let a = run_study(&c).unwrap();
        c.out_dir = Some(dir.path().join("b"));
        run_study(&c).unwrap();
        let ta = fs::read(dir.path().join("a/rates.csv")).unwrap();
        let tb = fs::read(dir.path().join("b/rates.csv")).unwrap();
        assert_eq!(ta, tb);
        let rows = parse_csv(std::str::from_utf8(&ta).unwrap()).unwrap();
        assert_eq!(rows.len(), 2);
        assert!((rows[1].err_u - a.records[1].err_u).abs() <= 1e-6 * a.records[1].err_u);
        assert!(rows[1].eoc_u.is_some());
        let plot = fs::read_to_string(dir.path().join("a/err_u.dat")).unwrap();
        assert_eq!(plot.lines().count(), 3);
    }

    #[test]
    fn sweep_needs_two_sigmas() {
        assert!(sigma_sweep(&RunConfig::new(2.0, 2), &[10.0]).is_err());
    }
}
