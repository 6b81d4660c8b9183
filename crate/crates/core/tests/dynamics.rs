//! Invariants of the three update rules and of the batch drivers.

use approx::assert_relative_eq;
use nalgebra::{DMatrix, SymmetricEigen};
use simcim::cim_physics::{cim_run_batch, cim_step, cim_step_with_noise, CimPhysicsParams, CimState};
use simcim::graph::{generate_random, EdgeDistribution, GraphGenSpec, IsingProblem};
use simcim::nmfa::{nmfa_step_with_noise, NmfaParams};
use simcim::schedule::PumpSchedule;
use simcim::seed::derive_seed;
use simcim::simcim::{run, run_batch, step, step_with_noise, SimCim, SimCimParams, SolverState};
use simcim::solver::{self, run_group, run_traced, BatchOptions, Solver, TraceOptions};
use simcim::{ParamMap, SolverRegistry};

fn gaussian(n: usize, seed: u64) -> IsingProblem {
    generate_random(&GraphGenSpec::gaussian(n, seed)).unwrap()
}

fn eigen(p: &IsingProblem) -> SymmetricEigen<f64, nalgebra::Dyn> {
    DMatrix::from_row_slice(p.n(), p.n(), &p.to_dense_matrix()).symmetric_eigen()
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn linear(zeta: f64, v: f64, iterations: usize) -> SimCimParams {
    SimCimParams {
        zeta,
        zeta_auto: None,
        noise_amplitude: 0.0,
        momentum_beta: 0.0,
        schedule: PumpSchedule::constant(v, iterations),
        ..SimCimParams::default()
    }
}

#[test]
fn eigenvectors_are_scaled_by_one_plus_v_plus_zeta_lambda() {
    let p = gaussian(12, 3);
    let eig = eigen(&p);
    let (zeta, v) = (0.07, -0.3);
    let params = linear(zeta, v, 1);
    for k in 0..p.n() {
        let lambda = eig.eigenvalues[k];
        let x: Vec<f64> = eig.eigenvectors.column(k).iter().map(|a| 0.2 * a).collect();
        let mut s = SolverState::new(p.n(), 0);
        s.x = x.clone();
        step_with_noise(&p, &mut s, &params, &vec![0.0; p.n()]).unwrap();
        let factor = 1.0 + v + zeta * lambda;
        for i in 0..p.n() {
            assert_relative_eq!(s.x[i], factor * x[i], epsilon = 1e-10 * norm(&x), max_relative = 1e-10);
        }
    }
}

#[test]
fn feedforward_is_the_negative_energy_gradient() {
    let p = gaussian(15, 11);
    let x: Vec<f64> = (0..15).map(|i| ((i * 37 % 11) as f64 - 5.0) / 7.0).collect();
    let mut jx = vec![0.0; 15];
    p.mul_vec(&x, &mut jx);
    let zeta = 0.3;
    let h = 1e-5;
    for i in 0..15 {
        let (mut up, mut down) = (x.clone(), x.clone());
        up[i] += h;
        down[i] -= h;
        let grad = (p.relaxed_energy(&up) - p.relaxed_energy(&down)) / (2.0 * h);
        assert_relative_eq!(zeta * jx[i], -zeta * grad, max_relative = 1e-6, epsilon = 1e-9);
    }
}

#[test]
fn norm_never_grows_below_threshold() {
    let p = gaussian(30, 5);
    let eig = eigen(&p);
    let radius = eig.eigenvalues.iter().fold(0.0f64, |m, l| m.max(l.abs()));
    let zeta = 0.5 / radius;
    let v = -0.6;
    // every eigenvalue of the update matrix lies in [-0.1, 0.9]
    let params = linear(zeta, v, 200);
    let mut s = SolverState::new(30, 0);
    s.x = (0..30).map(|i| ((i * 13 % 17) as f64 - 8.0) / 9.0).collect();
    let zeros = vec![0.0; 30];
    let mut prev = norm(&s.x);
    for _ in 0..200 {
        step_with_noise(&p, &mut s, &params, &zeros).unwrap();
        let now = norm(&s.x);
        assert!(now <= prev, "{now} > {prev}");
        prev = now;
    }
}

#[test]
fn amplitudes_never_leave_the_saturation_box() {
    let p = gaussian(40, 2);
    let params = SimCimParams { zeta: 0.5, zeta_auto: None, noise_amplitude: 0.5, x_sat: 0.7, ..SimCimParams::default() };
    let mut s = SolverState::new(40, 9);
    for _ in 0..params.iterations() {
        step(&p, &mut s, &params).unwrap();
        assert!(s.x.iter().all(|a| a.abs() <= 0.7));
    }
}

#[test]
fn zero_couplings_and_no_noise_give_the_all_up_state() {
    let p = IsingProblem::from_couplings(5, [], "empty").unwrap();
    let params = SimCimParams { zeta: 0.1, zeta_auto: None, noise_amplitude: 0.0, ..SimCimParams::default() };
    let (out, _) = run(&p, &params, false).unwrap();
    assert!(out.config.iter().all(|&s| s == 1));
    assert_eq!(out.energy, 0.0);
    assert_eq!(out.cut, 0.0);
}

#[test]
fn scalar_growth_until_clamp() {
    let p = IsingProblem::from_couplings(1, [], "one").unwrap();
    let params = linear(0.1, 0.1, 100);
    let mut s = SolverState::new(1, 0);
    s.x[0] = 0.01;
    let mut expected: f64 = 0.01;
    for _ in 0..100 {
        step(&p, &mut s, &params).unwrap();
        expected = (expected * 1.1).min(1.0);
        assert_relative_eq!(s.x[0], expected, max_relative = 1e-12);
    }
    assert_eq!(s.x[0], 1.0);
}

fn ferromagnet() -> IsingProblem {
    IsingProblem::from_couplings(2, [(0, 1, 1.0)], "ferro").unwrap()
}

#[test]
fn simcim_aligns_a_ferromagnetic_pair() {
    let p = ferromagnet();
    let params = SimCimParams {
        zeta: 0.1,
        zeta_auto: None,
        noise_amplitude: 0.01,
        schedule: PumpSchedule::tanh_ramp(-1.0, 0.0, 3.0, 1000),
        ..SimCimParams::default()
    };
    let batch = run_batch(&p, &params, 100).unwrap();
    // aligned spins are the two ground states (energy -1, cut 0)
    let aligned = batch.energies.iter().filter(|&&e| e == -1.0).count();
    assert!(aligned >= 99, "{aligned} of 100 aligned");
}

#[test]
fn cim_physics_aligns_a_ferromagnetic_pair() {
    let p = ferromagnet();
    let params = CimPhysicsParams { zeta: 0.05, zeta_auto: None, ..CimPhysicsParams::default() };
    let batch = cim_run_batch(&p, &params, 100).unwrap();
    let aligned = batch.energies.iter().filter(|&&e| e == -1.0).count();
    assert!(aligned >= 95, "{aligned} of 100 aligned");
}

#[test]
fn single_run_batch_uses_derived_seed_zero() {
    let p = gaussian(25, 4);
    let params = SimCimParams { seed: 1234, ..SimCimParams::default() };
    let batch = run_batch(&p, &params, 1).unwrap();
    let single = SimCimParams { seed: derive_seed(1234, 0), ..params.clone() };
    let (out, _) = run(&p, &single, false).unwrap();
    assert_eq!(batch.cuts[0].to_bits(), out.cut.to_bits());
    assert_eq!(batch.best_config, out.config);
}

#[test]
fn batches_are_bit_identical_across_threads_and_grouping() {
    let p = gaussian(60, 8);
    let reg = SolverRegistry::builtin();
    for name in ["simcim", "nmfa", "cim_physics"] {
        let solver = reg.build(name, &ParamMap::new().with("iterations", 200)).unwrap().resolve(&p).unwrap();
        let reference = solver::run_batch(solver.as_ref(), &p, 37, 5, &BatchOptions::with_threads(1)).unwrap();
        for (threads, max_lanes) in [(2, 128), (4, 128), (1, 1), (3, 5), (4, 16)] {
            let opts = BatchOptions { threads: Some(threads), max_lanes };
            let other = solver::run_batch(solver.as_ref(), &p, 37, 5, &opts).unwrap();
            let bits = |v: &[f64]| v.iter().map(|a| a.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(&reference.cuts), bits(&other.cuts), "{name} threads={threads} lanes={max_lanes}");
            assert_eq!(bits(&reference.energies), bits(&other.energies));
            assert_eq!(reference.seeds, other.seeds);
        }
    }
}

#[test]
fn lockstep_lanes_match_independent_runs_exactly() {
    let p = gaussian(33, 6).with_storage(simcim::graph::Storage::Sparse);
    let reg = SolverRegistry::builtin();
    let seeds: Vec<u64> = (0..11).map(|k| derive_seed(77, k)).collect();
    for name in ["simcim", "nmfa", "cim_physics"] {
        let solver = reg.build(name, &ParamMap::new().with("iterations", 150)).unwrap().resolve(&p).unwrap();
        let group = run_group(solver.as_ref(), &p, &seeds).unwrap();
        for (k, &seed) in seeds.iter().enumerate() {
            let alone = solver::run(solver.as_ref(), &p, seed).unwrap();
            assert_eq!(alone.amplitudes, group[k].amplitudes, "{name} lane {k}");
        }
    }
}

#[test]
fn same_seed_same_outcome() {
    let p = gaussian(20, 1);
    let params = SimCimParams { seed: 42, ..SimCimParams::default() };
    let (a, _) = run(&p, &params, false).unwrap();
    let (b, _) = run(&p, &params, false).unwrap();
    assert_eq!(a, b);
}

#[test]
fn mean_field_limits() {
    let p = gaussian(8, 12);
    let x: Vec<f64> = (0..8).map(|i| (i as f64 - 3.5) / 5.0).collect();
    let zeros = vec![0.0; 8];

    let empty = IsingProblem::from_couplings(8, [], "empty").unwrap();
    let decay = NmfaParams { alpha: 0.25, zeta: 1.0, zeta_auto: None, noise_amplitude: 0.0, schedule: None, ..NmfaParams::default() };
    let next = nmfa_step_with_noise(&empty, &x, &decay, 0, &zeros).unwrap();
    for i in 0..8 {
        assert_relative_eq!(next[i], 0.75 * x[i], max_relative = 1e-15);
    }

    let pure = NmfaParams { alpha: 1.0, zeta: 0.4, ..decay };
    let next = nmfa_step_with_noise(&p, &x, &pure, 0, &zeros).unwrap();
    let mut jx = vec![0.0; 8];
    p.mul_vec(&x, &mut jx);
    for i in 0..8 {
        assert_eq!(next[i], (0.4 * jx[i]).tanh());
    }
}

/// Iterates the pure mean-field map to a fixed point.
fn mean_field_fixed_point(p: &IsingProblem, zeta: f64, x0: Vec<f64>) -> Vec<f64> {
    let params = NmfaParams { alpha: 1.0, zeta, zeta_auto: None, noise_amplitude: 0.0, schedule: None, iterations: 1, ..NmfaParams::default() };
    let zeros = vec![0.0; p.n()];
    let mut x = x0;
    for _ in 0..100_000 {
        let next = nmfa_step_with_noise(p, &x, &params, 0, &zeros).unwrap();
        let moved = next.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        x = next;
        if moved < 1e-14 {
            return x;
        }
    }
    panic!("no convergence");
}

#[test]
fn mean_field_fixed_points_are_self_consistent() {
    let pair = ferromagnet();
    let x = mean_field_fixed_point(&pair, 3.0, vec![0.1, 0.1]);
    assert!(x[0] > 0.9 && x[1] > 0.9);
    assert_relative_eq!(x[0], x[1], max_relative = 1e-12);

    let spec = GraphGenSpec { n: 10, distribution: EdgeDistribution::Gaussian { mean: 1.0, std_dev: 0.3 }, seed: 4 };
    let p = generate_random(&spec).unwrap();
    let zeta = 0.5;
    let x = mean_field_fixed_point(&p, zeta, vec![0.05; 10]);
    let mut jx = vec![0.0; 10];
    p.mul_vec(&x, &mut jx);
    for i in 0..10 {
        assert!((x[i] - (zeta * jx[i]).tanh()).abs() < 1e-8);
    }
}

#[test]
fn uncoupled_mode_settles_on_the_analytic_amplitude() {
    let p = IsingProblem::from_couplings(1, [], "one").unwrap();
    let params = CimPhysicsParams {
        gain: 0.3,
        linear_loss: 0.2,
        nonlinear_loss: 0.1,
        zeta: 0.0,
        zeta_auto: None,
        noise_amplitude: 0.0,
        ..CimPhysicsParams::default()
    };
    for start in [0.01, -0.01] {
        let mut s = CimState::new(1, 0);
        s.x[0] = start;
        s.p[0] = 0.05;
        for _ in 0..2000 {
            cim_step(&p, &mut s, &params).unwrap();
        }
        assert!((s.x[0] - start.signum()).abs() < 1e-6, "{}", s.x[0]);
        assert!(s.p[0].abs() < 1e-10);
    }
}

#[test]
fn below_threshold_modes_decay() {
    let p = IsingProblem::from_couplings(3, [], "three").unwrap();
    let params = CimPhysicsParams { gain: 0.05, linear_loss: 0.1, zeta: 0.0, zeta_auto: None, noise_amplitude: 0.0, ..CimPhysicsParams::default() };
    let mut s = CimState::new(3, 0);
    s.x = vec![0.3, -0.2, 0.1];
    s.p = vec![0.1, 0.0, -0.1];
    for _ in 0..1000 {
        cim_step(&p, &mut s, &params).unwrap();
    }
    assert!(s.x.iter().chain(&s.p).all(|a| a.abs() < 1e-12));
}

#[test]
fn physics_reduces_to_simcim_in_the_linear_regime() {
    let p = gaussian(20, 21);
    let (gain, loss, zeta) = (0.15, 0.1, 0.04);
    let cim = CimPhysicsParams { gain, linear_loss: loss, nonlinear_loss: 0.05, zeta, zeta_auto: None, noise_amplitude: 1e-9, ..CimPhysicsParams::default() };
    let sim = SimCimParams {
        zeta,
        zeta_auto: None,
        noise_amplitude: 1e-9,
        momentum_beta: 0.0,
        schedule: PumpSchedule::constant(gain - loss, 10),
        ..SimCimParams::default()
    };
    let x0: Vec<f64> = (0..20).map(|i| 1e-7 * ((i * 7 % 13) as f64 - 6.0)).collect();
    let mut a = CimState::new(20, 99);
    a.x = x0.clone();
    let mut b = SolverState::new(20, 99);
    b.x = x0;
    cim_step(&p, &mut a, &cim).unwrap();
    step(&p, &mut b, &sim).unwrap();
    for i in 0..20 {
        assert_relative_eq!(a.x[i], b.x[i], max_relative = 1e-12);
    }

    // explicit noise: the x-update ignores the imaginary channel
    let re: Vec<f64> = (0..20).map(|i| 1e-9 * i as f64).collect();
    let mut c = CimState::new(20, 0);
    c.x = a.x.clone();
    let mut d = SolverState::new(20, 0);
    d.x = a.x.clone();
    let mut sim1 = sim.clone();
    sim1.schedule = PumpSchedule::constant(gain - loss, 1);
    cim_step_with_noise(&p, &mut c, &cim, &re, &[0.0; 20]).unwrap();
    step_with_noise(&p, &mut d, &sim1, &re).unwrap();
    for i in 0..20 {
        assert_relative_eq!(c.x[i], d.x[i], max_relative = 1e-12);
    }
}

#[test]
fn proximity_to_the_top_eigenvector_shrinks_while_it_grows() {
    let p = gaussian(50, 13);
    let lambda = eigen(&p).eigenvalues.max();
    let params = SimCimParams {
        zeta: 0.1 / lambda,
        zeta_auto: None,
        noise_amplitude: 1e-6,
        momentum_beta: 0.0,
        schedule: PumpSchedule::constant(-0.05, 150),
        ..SimCimParams::default()
    };
    let solver = SimCim::new(params).unwrap();
    let (_, trace) = run_traced(&solver, &p, 3, &TraceOptions { stride: 1, sampled_nodes: 50 }).unwrap();
    let d: Vec<f64> = trace.points.iter().map(|t| t.eig_proximity.unwrap()).collect();
    assert_eq!(d.len(), 150);
    let tenth = d.len() / 10;
    let head = d[..tenth].iter().sum::<f64>() / tenth as f64;
    let tail = d[d.len() - tenth..].iter().sum::<f64>() / tenth as f64;
    assert!(tail < head, "{tail} !< {head}");
    assert!(tail < 0.2);
    assert!(trace.points.iter().all(|t| t.amplitudes.iter().all(|a| a.abs() < 1.0)));
}

#[test]
fn auto_zeta_matches_the_dense_spectrum() {
    let p = gaussian(40, 17);
    let lambda = eigen(&p).eigenvalues.max();
    let solver = SimCim::new(SimCimParams { zeta_auto: Some(2.0), ..SimCimParams::default() }).unwrap();
    let resolved = solver.resolve(&p).unwrap();
    let zeta: f64 = resolved.params().parse("zeta").unwrap().unwrap();
    assert_relative_eq!(zeta, 2.0 / lambda, max_relative = 1e-5);
}
