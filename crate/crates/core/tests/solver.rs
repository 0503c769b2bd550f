use pbiharm_dg::fe_hessian::HessianOperator;
use pbiharm_dg::manufactured::BenchmarkSolution;
use pbiharm_dg::study::{run_study, RunConfig};
use pbiharm_dg::{vtk, DgSpace, DgSpace32, Mesh, Mesh32};

fn vtk_peak(n: usize) -> f64 {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::new(2.0, 2);
    cfg.levels = vec![n];
    cfg.out_dir = Some(dir.path().to_path_buf());
    cfg.emit_vtk = true;
    assert!(run_study(&cfg).unwrap().converged());
    let file = vtk::read(&dir.path().join(format!("solution_n{n}.vtk"))).unwrap();
    assert_eq!(file.cells.len(), 2 * n * n);
    assert_eq!(file.points.len(), 6 * n * n);
    let u_h = &file.fields.iter().find(|(name, _)| name == "u_h").unwrap().1;
    u_h.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

/// The exact peak is 1. At `n = 8` the default `σ = 10` undershoots by
/// about 12%, in line with the L² error on that mesh; from `n = 16` the
/// sampled peak is within 10%.
#[test]
fn vtk_output_of_the_benchmark_approaches_unit_peak() {
    let (p8, p16) = (vtk_peak(8), vtk_peak(16));
    eprintln!("sampled peaks: n=8 {p8:.4}, n=16 {p16:.4}");
    assert!((p8 - 1.0).abs() < 0.15, "peak {p8}");
    assert!((p16 - 1.0).abs() < 0.1, "peak {p16}");
    assert!((p16 - 1.0).abs() < (p8 - 1.0).abs());
}

#[test]
fn single_precision_operator_tracks_double() {
    let u = BenchmarkSolution::<f64>::new();
    let s64 = DgSpace::new(Mesh::build_structured(4).unwrap(), 2).unwrap();
    let s32 = DgSpace32::new(Mesh32::build_structured(4).unwrap(), 2).unwrap();
    let d64 = HessianOperator::assemble(&s64).apply(&s64.l2_project(|x| u.u(x)));
    let u32_ = BenchmarkSolution::<f32>::new();
    let d32 = HessianOperator::assemble(&s32).apply(&s32.l2_project(|x| u32_.u(x))).coeffs;
    let scale = d64.coeffs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    for (a, b) in d64.coeffs.iter().zip(&d32) {
        assert!((a - f64::from(*b)).abs() < 1e-3 * scale);
    }
}
