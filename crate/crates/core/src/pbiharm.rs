//! Discrete energy, Euler-Lagrange residual and Jacobian, and a damped Newton
//! solver with continuation in `p`.
//!
//! With `D = trace H` the discrete energy is
//!
//! ```text
//! J_h[v] = ∫ Ψ(D[v]) - ∫ f v + σ Σ_e ( h_e^{1-p} ∫_e Ψ([∇_h v]) + h_e^{1-2p} ∫_e Ψ(|[v]|) )
//! ```
//!
//! over `E ∪ ∂Ω`, where `Ψ(t) = ((t² + ε²)^{p/2} - ε^p) / p`. Its first
//! variation uses `ψ(t) = (t² + ε²)^{(p-2)/2} t`; `ε = 0` recovers `|t|^{p-2} t`.

use crate::analysis::{dg_norm, lp_norm};
use crate::dg_space::{DgFunction, DgSpace};
use crate::error::{Error, Result};
use crate::fe_hessian::{sides, FluxKind, HessianOperator};
use crate::linalg::{dot, norm, solve_spd, BlockMatrix};
use crate::scalar::{Point, Real};

#[derive(Debug, Clone, PartialEq)]
pub struct SolveConfig<T> {
    pub p: T,
    pub sigma: T,
    /// Regularisation of the degenerate nonlinearity; `None` selects
    /// `1e-7 · max(1, ‖Πf‖_{L²})^{1/(p-1)}` for `p > 2` and `0` for `p = 2`.
    pub epsilon: Option<T>,
    /// Relative residual tolerance: stop once `‖r‖ ≤ tol · max(1, ‖b‖)`.
    pub newton_tol: T,
    pub max_iters: usize,
    /// Values of `p` visited in order, ending at `p`.
    pub continuation_steps: Vec<T>,
    /// Accepted relative algebraic residual of each linear solve.
    pub linear_solver_tol: T,
    /// Extra exactness added to the assembly quadrature.
    pub quad_bump: usize,
    /// Boundary treatment of the gradient flux inside `D`.
    pub flux: FluxKind,
}

impl<T: Real> SolveConfig<T> {
    /// Defaults: `σ = 10`, continuation `2, 2.5, …, p`.
    pub fn new(p: T) -> Self {
        let mut steps = Vec::new();
        let mut q = T::lit(2.0);
        while q < p - T::lit(1e-9) {
            steps.push(q);
            q += T::lit(0.5);
        }
        steps.push(p);
        Self {
            p,
            sigma: T::lit(10.0),
            epsilon: None,
            newton_tol: T::lit(1e-10),
            max_iters: 50,
            continuation_steps: steps,
            linear_solver_tol: T::lit(1e-8),
            quad_bump: 0,
            flux: FluxKind::default(),
        }
    }

    pub fn with_sigma(mut self, sigma: T) -> Self {
        self.sigma = sigma;
        self
    }

    pub fn with_epsilon(mut self, epsilon: T) -> Self {
        self.epsilon = Some(epsilon);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let two = T::lit(2.0);
        if !(self.p >= two) {
            return Err(Error::InvalidArgument(format!("p must be >= 2, got {}", self.p)));
        }
        if !(self.sigma > T::zero()) {
            return Err(Error::InvalidArgument(format!("sigma must be positive, got {}", self.sigma)));
        }
        if let Some(e) = self.epsilon {
            if !(e >= T::zero()) {
                return Err(Error::InvalidArgument(format!("epsilon must be non-negative, got {e}")));
            }
        }
        if !(self.newton_tol > T::zero()) || self.max_iters == 0 {
            return Err(Error::InvalidArgument("newton tolerance and iteration limit must be positive".into()));
        }
        let steps = &self.continuation_steps;
        let monotone = steps.windows(2).all(|w| w[0] < w[1]);
        let ends = steps.first().is_some_and(|&s| s >= two) && steps.last().is_some_and(|&s| (s - self.p).abs() <= T::epsilon());
        if !monotone || !ends {
            return Err(Error::InvalidArgument("continuation steps must increase from >= 2 and end at p".into()));
        }
        Ok(())
    }

    pub(crate) fn quadrature_degree(&self, space: &DgSpace<T>) -> usize {
        let k = space.degree();
        let base = if self.p >= T::lit(4.0) { space.quadrature_degree().max(3 * k) } else { space.quadrature_degree() };
        base + self.quad_bump
    }
}

/// Regularised power nonlinearity with exponent `p` and parameter `ε`.
#[derive(Debug, Clone, Copy)]
pub struct Power<T> {
    pub p: T,
    pub eps: T,
}

impl<T: Real> Power<T> {
    /// `Ψ(t) = ((t² + ε²)^{p/2} - ε^p) / p`
    #[inline]
    pub fn potential(&self, t: T) -> T {
        let s = t * t + self.eps * self.eps;
        (s.powf(self.p / T::lit(2.0)) - self.eps.powf(self.p)) / self.p
    }

    /// `ψ(t) = (t² + ε²)^{(p-2)/2} t`
    #[inline]
    pub fn flux(&self, t: T) -> T {
        let e = (self.p - T::lit(2.0)) / T::lit(2.0);
        if e == T::zero() {
            return t;
        }
        (t * t + self.eps * self.eps).powf(e) * t
    }

    /// `ψ'(t) = (t² + ε²)^{(p-4)/2} ((p-1) t² + ε²)`
    #[inline]
    pub fn derivative(&self, t: T) -> T {
        let two = T::lit(2.0);
        if self.p == two {
            return T::one();
        }
        let s = t * t + self.eps * self.eps;
        if s == T::zero() {
            return T::zero();
        }
        s.powf((self.p - T::lit(4.0)) / two) * ((self.p - T::one()) * t * t + self.eps * self.eps)
    }
}

/// Per-facet penalty data: the jump of `∇_h v · n` and of `v` along `n`, as
/// linear functionals of the local coefficients at each quadrature point.
#[derive(Debug, Clone)]
struct FacetPenalty<T> {
    elements: Vec<usize>,
    weights: Vec<T>,
    length: T,
    /// `grad_jump[q * width + s * nb + i]`, `width = elements.len() * nb`
    grad_jump: Vec<T>,
    value_jump: Vec<T>,
}

/// Everything needed to evaluate the discrete energy and its derivatives on
/// one space: the assembled `D`, precomputed quadrature data and `σ`.
pub struct Discretization<'s, T> {
    space: &'s DgSpace<T>,
    pub hessian: HessianOperator<'s, T>,
    sigma: T,
    volume_weights: Vec<Vec<T>>,
    /// `volume_values[K][q * nb + i]`
    volume_values: Vec<Vec<T>>,
    facets: Vec<FacetPenalty<T>>,
    quad_degree: usize,
}

impl<'s, T: Real> Discretization<'s, T> {
    pub fn new(space: &'s DgSpace<T>, cfg: &SolveConfig<T>) -> Result<Self> {
        cfg.validate()?;
        let hessian = HessianOperator::assemble_with_flux(space, &cfg.flux);
        Ok(Self::with_operator(hessian, cfg.sigma, cfg.quadrature_degree(space)))
    }

    /// Uses an already assembled `D`.
    pub fn with_operator(hessian: HessianOperator<'s, T>, sigma: T, quad_degree: usize) -> Self {
        let space = hessian.space();
        let nb = space.dofs_per_element();
        let mesh = space.mesh();
        let vq = space.volume_quadrature(quad_degree);
        let (mut volume_weights, mut volume_values) = (Vec::new(), Vec::new());
        for k in 0..mesh.num_elements() {
            let es = space.element_samples(k, &vq);
            volume_weights.push(es.weights);
            volume_values.push(es.basis.iter().map(|b| b.value).collect());
        }
        let rule = crate::quadrature::SegmentRule::new(quad_degree);
        let facets = (0..mesh.num_facets())
            .map(|f| {
                let fs = space.facet_samples(f, &rule);
                let sd = sides(&fs);
                let width = sd.len() * nb;
                let nq = fs.weights.len();
                let mut grad_jump = vec![T::zero(); nq * width];
                let mut value_jump = vec![T::zero(); nq * width];
                for q in 0..nq {
                    for (si, s) in sd.iter().enumerate() {
                        for i in 0..nb {
                            let b = &s.basis[q * nb + i];
                            grad_jump[q * width + si * nb + i] = s.sign * crate::scalar::dot(b.grad, fs.normal);
                            value_jump[q * width + si * nb + i] = s.sign * b.value;
                        }
                    }
                }
                FacetPenalty {
                    elements: sd.iter().map(|s| s.element).collect(),
                    weights: fs.weights.clone(),
                    length: fs.length,
                    grad_jump,
                    value_jump,
                }
            })
            .collect();
        Self { space, hessian, sigma, volume_weights, volume_values, facets, quad_degree }
    }

    pub fn space(&self) -> &'s DgSpace<T> {
        self.space
    }

    /// `b_i = ∫ f φ_i`, integrated with four extra orders of exactness.
    pub fn load_vector<F: Fn(Point<T>) -> T + ?Sized>(&self, f: &F) -> Vec<T> {
        let space = self.space;
        let nb = space.dofs_per_element();
        let vq = space.volume_quadrature(self.quad_degree + 4);
        let mut b = vec![T::zero(); space.total_dofs()];
        for k in 0..space.mesh().num_elements() {
            let es = space.element_samples(k, &vq);
            let bk = &mut b[k * nb..(k + 1) * nb];
            for (q, (x, &w)) in es.points.iter().zip(&es.weights).enumerate() {
                let fw = f(*x) * w;
                for (bi, s) in bk.iter_mut().zip(&es.basis[q * nb..(q + 1) * nb]) {
                    *bi += fw * s.value;
                }
            }
        }
        b
    }

    /// `b_i = ∫ (∇·q) φ_i` for a forcing given in divergence form, integrated
    /// by parts on every element: `-∫_K q·∇φ_i + ∫_{∂K} (q·n_K) φ_i`. Exact
    /// for `q ∈ H(div)` and much less sensitive to quadrature when `∇·q` is
    /// discontinuous inside elements.
    pub fn load_vector_divergence<Q: Fn(Point<T>) -> [T; 2] + ?Sized>(&self, q: &Q) -> Vec<T> {
        let space = self.space;
        let nb = space.dofs_per_element();
        let degree = self.quad_degree + 4;
        let vq = space.volume_quadrature(degree);
        let mut b = vec![T::zero(); space.total_dofs()];
        for k in 0..space.mesh().num_elements() {
            let es = space.element_samples(k, &vq);
            let bk = &mut b[k * nb..(k + 1) * nb];
            for (qi, (x, &w)) in es.points.iter().zip(&es.weights).enumerate() {
                let qx = q(*x);
                for (bi, s) in bk.iter_mut().zip(&es.basis[qi * nb..(qi + 1) * nb]) {
                    *bi -= w * crate::scalar::dot(qx, s.grad);
                }
            }
        }
        let rule = crate::quadrature::SegmentRule::new(degree);
        for f in 0..space.mesh().num_facets() {
            let fs = space.facet_samples(f, &rule);
            for side in sides(&fs) {
                let bk = &mut b[side.element * nb..(side.element + 1) * nb];
                for (qi, (x, &w)) in fs.points.iter().zip(&fs.weights).enumerate() {
                    let flux = side.sign * w * crate::scalar::dot(q(*x), fs.normal);
                    for (bi, s) in bk.iter_mut().zip(&side.basis[qi * nb..(qi + 1) * nb]) {
                        *bi += flux * s.value;
                    }
                }
            }
        }
        b
    }

    fn local_values<'a>(&self, coeffs: &'a [T], elements: &[usize]) -> Vec<&'a [T]> {
        elements.iter().map(|&k| &coeffs[self.space.element_dofs(k)]).collect()
    }

    fn facet_jumps(&self, fp: &FacetPenalty<T>, local: &[&[T]], q: usize) -> (T, T) {
        let nb = self.space.dofs_per_element();
        let width = local.len() * nb;
        let (mut jg, mut jv) = (T::zero(), T::zero());
        for (si, c) in local.iter().enumerate() {
            for i in 0..nb {
                let idx = q * width + si * nb + i;
                jg += fp.grad_jump[idx] * c[i];
                jv += fp.value_jump[idx] * c[i];
            }
        }
        (jg, jv)
    }

    fn penalty_weights(&self, fp: &FacetPenalty<T>, p: T) -> (T, T) {
        let h = fp.length;
        (self.sigma * h.powf(T::one() - p), self.sigma * h.powf(T::one() - T::lit(2.0) * p))
    }

    /// Energy without the load term.
    fn internal_energy(&self, u: &[T], pw: Power<T>) -> T {
        let nb = self.space.dofs_per_element();
        let d = self.hessian.matrix.matvec(u);
        let mut total = T::zero();
        for (k, (w, vals)) in self.volume_weights.iter().zip(&self.volume_values).enumerate() {
            let dk = &d[k * nb..(k + 1) * nb];
            for (q, &wq) in w.iter().enumerate() {
                let t: T = dk.iter().zip(&vals[q * nb..(q + 1) * nb]).map(|(&c, &v)| c * v).sum();
                total += wq * pw.potential(t);
            }
        }
        for fp in &self.facets {
            let local = self.local_values(u, &fp.elements);
            let (wg, wv) = self.penalty_weights(fp, pw.p);
            for (q, &wq) in fp.weights.iter().enumerate() {
                let (jg, jv) = self.facet_jumps(fp, &local, q);
                total += wq * (wg * pw.potential(jg) + wv * pw.potential(jv));
            }
        }
        total
    }

    pub fn energy(&self, u: &[T], load: &[T], pw: Power<T>) -> T {
        self.internal_energy(u, pw) - dot(load, u)
    }

    /// `B_h(u, ·; p)` as a dual vector.
    pub fn semilinear_form(&self, u: &[T], pw: Power<T>) -> Vec<T> {
        let nb = self.space.dofs_per_element();
        let d = self.hessian.matrix.matvec(u);
        // moments g_j = ∫ ψ(D[u]) φ_j, then B(u, φ_i) = (Sᵀ g)_i
        let mut g = vec![T::zero(); d.len()];
        for (k, (w, vals)) in self.volume_weights.iter().zip(&self.volume_values).enumerate() {
            let dk = &d[k * nb..(k + 1) * nb];
            let gk = &mut g[k * nb..(k + 1) * nb];
            for (q, &wq) in w.iter().enumerate() {
                let v = &vals[q * nb..(q + 1) * nb];
                let t: T = dk.iter().zip(v).map(|(&c, &b)| c * b).sum();
                let s = wq * pw.flux(t);
                for (gi, &b) in gk.iter_mut().zip(v) {
                    *gi += s * b;
                }
            }
        }
        let mut r = self.hessian.matrix.matvec_transpose(&g);
        for fp in &self.facets {
            let local = self.local_values(u, &fp.elements);
            let (wg, wv) = self.penalty_weights(fp, pw.p);
            let width = fp.elements.len() * nb;
            for (q, &wq) in fp.weights.iter().enumerate() {
                let (jg, jv) = self.facet_jumps(fp, &local, q);
                let (sg, sv) = (wq * wg * pw.flux(jg), wq * wv * pw.flux(jv));
                for (si, &k) in fp.elements.iter().enumerate() {
                    for i in 0..nb {
                        let idx = q * width + si * nb + i;
                        r[k * nb + i] += sg * fp.grad_jump[idx] + sv * fp.value_jump[idx];
                    }
                }
            }
        }
        r
    }

    /// `B_h(u, φ_i; p) - ∫ f φ_i`.
    pub fn residual(&self, u: &[T], load: &[T], pw: Power<T>) -> Vec<T> {
        let mut r = self.semilinear_form(u, pw);
        for (ri, bi) in r.iter_mut().zip(load) {
            *ri -= *bi;
        }
        r
    }

    /// Exact derivative of the residual at `u`.
    pub fn jacobian(&self, u: &[T], pw: Power<T>) -> BlockMatrix<T> {
        let nb = self.space.dofs_per_element();
        let d = self.hessian.matrix.matvec(u);
        let weights: Vec<Vec<T>> = self
            .volume_weights
            .iter()
            .zip(&self.volume_values)
            .enumerate()
            .map(|(k, (w, vals))| {
                let dk = &d[k * nb..(k + 1) * nb];
                let mut m = vec![T::zero(); nb * nb];
                for (q, &wq) in w.iter().enumerate() {
                    let v = &vals[q * nb..(q + 1) * nb];
                    let t: T = dk.iter().zip(v).map(|(&c, &b)| c * b).sum();
                    let s = wq * pw.derivative(t);
                    for i in 0..nb {
                        for j in 0..nb {
                            m[i * nb + j] += s * v[i] * v[j];
                        }
                    }
                }
                m
            })
            .collect();
        let mut jac = self.hessian.matrix.transpose_weighted_product(&weights);
        for fp in &self.facets {
            let local = self.local_values(u, &fp.elements);
            let (wg, wv) = self.penalty_weights(fp, pw.p);
            let width = fp.elements.len() * nb;
            for (q, &wq) in fp.weights.iter().enumerate() {
                let (jg, jv) = self.facet_jumps(fp, &local, q);
                let (sg, sv) = (wq * wg * pw.derivative(jg), wq * wv * pw.derivative(jv));
                let (ag, av) = (&fp.grad_jump[q * width..(q + 1) * width], &fp.value_jump[q * width..(q + 1) * width]);
                for (si, &ki) in fp.elements.iter().enumerate() {
                    for (sj, &kj) in fp.elements.iter().enumerate() {
                        let blk = jac.block_mut(ki, kj);
                        for i in 0..nb {
                            for j in 0..nb {
                                let (a, b) = (si * nb + i, sj * nb + j);
                                blk[i * nb + j] += sg * ag[a] * ag[b] + sv * av[a] * av[b];
                            }
                        }
                    }
                }
            }
        }
        jac
    }

    /// The `p`-homogeneous part `∫|D u|^p + σ Σ (…)` at `ε = 0`, i.e. `B_h(u, u; p)`.
    pub fn homogeneous_part(&self, u: &[T], p: T) -> T {
        p * self.internal_energy(u, Power { p, eps: T::zero() })
    }

    /// `Ψ`-regularisation default for a given load vector.
    pub fn default_epsilon(load: &[T], p: T) -> T {
        if p == T::lit(2.0) {
            return T::zero();
        }
        T::lit(1e-7) * norm(load).max(T::one()).powf(T::one() / (p - T::one()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageReport<T> {
    pub p: T,
    pub epsilon: T,
    pub iterations: usize,
    pub converged: bool,
    /// Converged by stagnation: no step reduced `‖r‖` any more, and it was
    /// already below `√tol · max(1, ‖b‖)`, i.e. at the round-off floor of
    /// the increasingly ill-conditioned fine-mesh systems.
    pub stagnated: bool,
    /// `‖r‖` at the stage start and after every accepted step.
    pub residuals: Vec<T>,
    pub energies: Vec<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport<T> {
    pub stages: Vec<StageReport<T>>,
    pub final_residual: T,
    pub converged: bool,
    pub energy: T,
    /// Largest relative algebraic residual over all linear solves.
    pub max_linear_residual: T,
}

impl<T: Real> SolveReport<T> {
    pub fn iterations(&self) -> usize {
        self.stages.iter().map(|s| s.iterations).sum()
    }
}

pub struct Solution<'s, T> {
    pub u: DgFunction<'s, T>,
    /// `D[u_h]`, the auxiliary Laplacian variable.
    pub d: DgFunction<'s, T>,
    pub report: SolveReport<T>,
}

fn newton_stage<T: Real>(
    disc: &Discretization<'_, T>,
    load: &[T],
    u: &mut Vec<T>,
    pw: Power<T>,
    cfg: &SolveConfig<T>,
    max_linear: &mut T,
) -> Result<StageReport<T>> {
    let target = cfg.newton_tol * norm(load).max(T::one());
    let mut r = disc.residual(u, load, pw);
    let mut rn = norm(&r);
    let mut energy = disc.energy(u, load, pw);
    let floor = cfg.newton_tol.sqrt() * norm(load).max(T::one());
    let mut report = StageReport {
        p: pw.p,
        epsilon: pw.eps,
        iterations: 0,
        converged: false,
        stagnated: false,
        residuals: vec![rn],
        energies: vec![energy],
    };
    while rn > target {
        if report.iterations == cfg.max_iters {
            return Ok(report);
        }
        let jac = disc.jacobian(u, pw);
        let rhs: Vec<T> = r.iter().map(|&x| -x).collect();
        let (delta, lin) = solve_spd(&jac, &rhs)?;
        *max_linear = max_linear.max(lin);
        let slack = T::lit(1e-12) * energy.abs().max(T::one());
        let mut step = T::one();
        let mut accepted = None;
        for _ in 0..=30 {
            let trial: Vec<T> = u.iter().zip(&delta).map(|(&a, &d)| a + step * d).collect();
            let rt = disc.residual(&trial, load, pw);
            let rtn = norm(&rt);
            let et = disc.energy(&trial, load, pw);
            if rtn < rn && et <= energy + slack {
                accepted = Some((trial, rt, rtn, et));
                break;
            }
            step /= T::lit(2.0);
        }
        let Some((trial, rt, rtn, et)) = accepted else {
            if rn <= floor {
                report.converged = true;
                report.stagnated = true;
            }
            return Ok(report);
        };
        *u = trial;
        r = rt;
        rn = rtn;
        energy = et;
        report.iterations += 1;
        report.residuals.push(rn);
        report.energies.push(energy);
    }
    report.converged = true;
    Ok(report)
}

/// Minimises `J_h` over the space by Newton's method on the Euler-Lagrange
/// system, continuing in `p` along `cfg.continuation_steps`.
///
/// A stage that fails to converge is retried from the last converged state
/// with an intermediate `p` inserted (at most six times). Non-convergence is
/// reported through `report.converged`; linear-solve breakdown is an error.
pub fn solve<'s, T: Real, F: Fn(Point<T>) -> T + ?Sized>(
    f: &F,
    space: &'s DgSpace<T>,
    cfg: &SolveConfig<T>,
) -> Result<Solution<'s, T>> {
    let disc = Discretization::new(space, cfg)?;
    let load = disc.load_vector(f);
    solve_with(&disc, &load, cfg, None)
}

/// As [`solve`] with a prepared discretisation, load vector and optional initial guess.
pub fn solve_with<'s, T: Real>(
    disc: &Discretization<'s, T>,
    load: &[T],
    cfg: &SolveConfig<T>,
    initial: Option<&[T]>,
) -> Result<Solution<'s, T>> {
    cfg.validate()?;
    let space = disc.space();
    let mut u = initial.map_or_else(|| vec![T::zero(); space.total_dofs()], <[T]>::to_vec);
    let mut pending: Vec<T> = cfg.continuation_steps.iter().rev().copied().collect();
    let mut stages = Vec::new();
    let mut last_p: Option<T> = None;
    let mut refinements = 0;
    let mut max_linear = T::zero();
    let mut converged = true;

    while let Some(p) = pending.pop() {
        let eps = cfg.epsilon.map_or_else(|| Discretization::default_epsilon(load, p), |e| if p == T::lit(2.0) { T::zero() } else { e });
        let pw = Power { p, eps };
        let saved = u.clone();
        if last_p.is_some() {
            rescale_initial_guess(disc, load, &mut u, pw);
        }
        let stage = newton_stage(disc, load, &mut u, pw, cfg, &mut max_linear)?;
        let ok = stage.converged;
        stages.push(stage);
        if ok {
            last_p = Some(p);
            continue;
        }
        match last_p {
            Some(prev) if refinements < 6 => {
                refinements += 1;
                u = saved;
                pending.push(p);
                pending.push((prev + p) / T::lit(2.0));
            }
            _ => {
                converged = false;
                break;
            }
        }
    }

    let final_p = cfg.p;
    let eps = cfg.epsilon.map_or_else(|| Discretization::default_epsilon(load, final_p), |e| if final_p == T::lit(2.0) { T::zero() } else { e });
    let pw = Power { p: final_p, eps };
    let final_residual = norm(&disc.residual(&u, load, pw));
    let energy = disc.energy(&u, load, pw);
    let d = disc.hessian.matrix.matvec(&u);
    let report = SolveReport { stages, final_residual, converged, energy, max_linear_residual: max_linear };
    Ok(Solution { u: space.function(u)?, d: space.function(d)?, report })
}

/// Replaces `u` by `α u` with `α` minimising the unregularised energy along the
/// ray, when that lowers the energy.
fn rescale_initial_guess<T: Real>(disc: &Discretization<'_, T>, load: &[T], u: &mut [T], pw: Power<T>) {
    let a = disc.homogeneous_part(u, pw.p);
    let f = dot(load, u);
    if !(a > T::zero() && f > T::zero()) {
        return;
    }
    let alpha = (f / a).powf(T::one() / (pw.p - T::one()));
    let scaled: Vec<T> = u.iter().map(|&c| alpha * c).collect();
    if disc.energy(&scaled, load, pw) < disc.energy(u, load, pw) {
        u.copy_from_slice(&scaled);
    }
}

/// `J_h[v]` for the configuration's `p`, `σ` and `ε`.
pub fn energy<T: Real, F: Fn(Point<T>) -> T + ?Sized>(v: &DgFunction<'_, T>, f: &F, cfg: &SolveConfig<T>) -> Result<T> {
    let disc = Discretization::new(v.space(), cfg)?;
    let load = disc.load_vector(f);
    Ok(disc.energy(&v.coeffs, &load, power_for(cfg, &load)))
}

/// `B_h(u, φ_i; p) - ∫ f φ_i` for every basis function.
pub fn residual<T: Real, F: Fn(Point<T>) -> T + ?Sized>(u: &DgFunction<'_, T>, f: &F, cfg: &SolveConfig<T>) -> Result<Vec<T>> {
    let disc = Discretization::new(u.space(), cfg)?;
    let load = disc.load_vector(f);
    Ok(disc.residual(&u.coeffs, &load, power_for(cfg, &load)))
}

/// Jacobian of the residual. `ε` must be set explicitly when `p > 2` since
/// the default depends on `f`.
pub fn jacobian<T: Real>(u: &DgFunction<'_, T>, cfg: &SolveConfig<T>) -> Result<BlockMatrix<T>> {
    let disc = Discretization::new(u.space(), cfg)?;
    let eps = if cfg.p == T::lit(2.0) { T::zero() } else { cfg.epsilon.unwrap_or(T::zero()) };
    Ok(disc.jacobian(&u.coeffs, Power { p: cfg.p, eps }))
}

fn power_for<T: Real>(cfg: &SolveConfig<T>, load: &[T]) -> Power<T> {
    let eps = match cfg.epsilon {
        Some(e) if cfg.p != T::lit(2.0) => e,
        Some(_) => T::zero(),
        None => Discretization::default_epsilon(load, cfg.p),
    };
    Power { p: cfg.p, eps }
}

/// `(|||u_h|||_p, ‖f‖_{L^q}^{q/p})` with `q = p/(p-1)`.
pub fn apriori_check<T: Real, F: Fn(Point<T>) -> T + ?Sized>(u_h: &DgFunction<'_, T>, f: &F, cfg: &SolveConfig<T>) -> (T, T) {
    let p = cfg.p;
    let q = p / (p - T::one());
    let space = u_h.space();
    let fq = lp_norm(space, q, space.quadrature_degree() + 4, |_, x| f(x));
    (dg_norm(u_h, p), fq.powf(q / p))
}
