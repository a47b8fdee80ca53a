mod common;

use elastica::data::two_moons;
use elastica::kernel::design_matrix;
use elastica::linalg::normal_residual;
use elastica::solvers::*;
use elastica::variational::{energy, Mode};
use nalgebra::DVector;

fn moons() -> elastica::Dataset {
    two_moons(80, 0.1, 5)
}

#[test]
fn lr_weights_satisfy_normal_equations() {
    let ds = moons();
    for (c, lambda, eta) in [(1.0, 0.1, 1.0), (4.0, 1e-3, 1e-3), (16.0, 1.0, 1.0)] {
        let basis = training_basis(&ds, c).unwrap();
        let cfg = SolverConfig::new(Mode::Lr, Method::Direct).with_lambda(lambda).with_eta(eta);
        let f = fit_lr(&ds, &basis, &cfg).unwrap();
        let psi = lr_system_matrix(&ds, &basis, lambda).unwrap();
        let y = DVector::from_column_slice(ds.targets());
        let w = DVector::from_column_slice(f.model.weights());
        let scale = (psi.transpose() * &y).norm();
        assert!(normal_residual(&psi, &w, &y, eta) <= 1e-8 * scale);
        assert_eq!(f.trace.iterations_run, 1);
    }
}

#[test]
fn lr_interpolates_distinct_points() {
    let ds = two_moons(30, 0.1, 2);
    let basis = training_basis(&ds, 20.0).unwrap();
    let cfg = SolverConfig::new(Mode::Lr, Method::Direct).with_lambda(0.0).with_eta(0.0);
    let f = fit_lr(&ds, &basis, &cfg).unwrap();
    for (x, y) in ds.rows().zip(ds.targets()) {
        assert!((f.model.eval(x).unwrap() - y).abs() <= 1e-6);
    }
}

#[test]
fn gd_energy_is_monotone_for_every_mode() {
    let ds = moons();
    for mode in [Mode::Lr, Mode::Tv, Mode::Ee] {
        for lambda in [1e-3, 1e-1] {
            let basis = training_basis(&ds, 4.0).unwrap();
            let cfg = SolverConfig::new(mode, Method::Gd).with_lambda(lambda);
            let f = fit_gd(&ds, &basis, &cfg).unwrap();
            let mut prev = f.trace.initial_energy;
            for &e in &f.trace.energy_per_iter {
                assert!(e.is_finite());
                assert!(e <= prev, "{mode:?} lambda {lambda}: {e} > {prev}");
                prev = e;
            }
            let final_energy = energy(&f.model, &ds, &cfg.elastica, mode).unwrap();
            assert_eq!(Some(&final_energy), f.trace.energy_per_iter.last().or(Some(&f.trace.initial_energy)));
        }
    }
}

#[test]
fn tv_and_zero_b_elastica_follow_identical_trajectories() {
    let ds = moons();
    let basis = training_basis(&ds, 4.0).unwrap();
    for method in [Method::Gd, Method::Lagle] {
        let tv = SolverConfig::new(Mode::Tv, method).with_lambda(0.05).with_max_iter(6);
        let ee = SolverConfig::new(Mode::Ee, method).with_lambda(0.05).with_max_iter(6).with_b(0.0);
        let a = fit(&ds, &basis, &tv);
        let b = fit(&ds, &basis, &ee);
        match (a, b) {
            (Ok(a), Ok(b)) => {
                assert_eq!(a.model.weights(), b.model.weights());
                assert_eq!(a.trace.energy_per_iter, b.trace.energy_per_iter);
                assert_eq!(a.trace.weight_change_per_iter, b.trace.weight_change_per_iter);
            }
            (Err(a), Err(b)) => assert_eq!(a.to_string(), b.to_string()),
            (a, b) => panic!("outcomes differ: {:?} vs {:?}", a.is_ok(), b.is_ok()),
        }
    }
}

#[test]
fn both_iterative_methods_start_from_the_ridge_projection() {
    let ds = moons();
    let basis = training_basis(&ds, 4.0).unwrap();
    let w0 = initial_weights(&ds, &basis, 1e-3).unwrap();
    for method in [Method::Gd, Method::Lagle] {
        let cfg = SolverConfig::new(Mode::Tv, method).with_max_iter(1).with_tau(0.0);
        if method == Method::Gd {
            let f = fit(&ds, &basis, &cfg).unwrap();
            assert_eq!(f.model.weights(), &w0[..]);
        }
    }
    let phi = design_matrix(&basis, ds.features()).unwrap();
    let y = DVector::from_column_slice(ds.targets());
    let r = normal_residual(&phi, &DVector::from_column_slice(&w0), &y, 1e-3);
    assert!(r <= 1e-8 * (phi.transpose() * y).norm());
}

#[test]
fn converged_lagle_satisfies_its_system() {
    let ds = two_moons(100, 0.1, 1);
    let basis = training_basis(&ds, 16.0).unwrap();
    for mode in [Mode::Tv, Mode::Ee] {
        let cfg = SolverConfig::new(mode, Method::Lagle).with_lambda(10.0).with_eta(1e-8).with_max_iter(100);
        let f = fit_lagle(&ds, &basis, &cfg).unwrap();
        assert!(f.trace.converged);
        assert!(f.trace.system_residual.unwrap() <= 1e-4, "{:?}", f.trace.system_residual);
    }
}

#[test]
fn fits_are_deterministic() {
    let ds = moons();
    let basis = training_basis(&ds, 4.0).unwrap();
    let cfg = SolverConfig::new(Mode::Ee, Method::Gd).with_lambda(0.01);
    let a = fit(&ds, &basis, &cfg).unwrap();
    let b = fit(&ds, &basis, &cfg).unwrap();
    assert_eq!(a.model, b.model);
    assert_eq!(a.trace.energy_per_iter, b.trace.energy_per_iter);
}

#[test]
fn two_moons_is_learned_by_every_solver() {
    let train = two_moons(200, 0.1, 3);
    let test = two_moons(200, 0.1, 4);
    for (mode, method, c, lambda) in [
        (Mode::Lr, Method::Direct, 8.0, 1e-2),
        (Mode::Tv, Method::Gd, 8.0, 1e-2),
        (Mode::Ee, Method::Gd, 8.0, 1e-2),
        (Mode::Tv, Method::Lagle, 16.0, 0.1),
        (Mode::Ee, Method::Lagle, 16.0, 0.1),
    ] {
        let cfg = SolverConfig::new(mode, method).with_lambda(lambda);
        let p = elastica::learners::train(&train, c, &cfg).unwrap().predictor;
        let hits = test.rows().zip(test.targets()).filter(|(x, y)| p.predict(x).unwrap() == **y).count();
        assert!(hits as f64 / test.len() as f64 >= 0.95, "{mode:?}/{method:?}: {hits}");
    }
}
