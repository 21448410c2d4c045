// Temporary measurement harness; deleted before release.
use ccmflow_core::{ccm, chebyshev::ChebGrid, geometry, plant};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn vec3(a: f64, b: f64, c: f64) -> DVector<f64> {
    DVector::from_vec(vec![a, b, c])
}

#[test]
#[ignore]
fn lmi_sweep_ground_truth() {
    let cert = plant::benchmark_certificate();
    let plant = plant::benchmark();
    let mut rng = ChaCha8Rng::seed_from_u64(0);

    // Literal formula.
    let mut max_r = f64::NEG_INFINITY;
    let mut count_pos = 0;
    for _ in 0..1000 {
        let x = vec3(
            rng.gen_range(-10.0..10.0),
            rng.gen_range(-10.0..10.0),
            rng.gen_range(-10.0..10.0),
        );
        let u = DVector::from_vec(vec![rng.gen_range(-30.0..30.0)]);
        let r = ccm::lmi_residual(&cert, &plant, &x, &u).unwrap();
        if r > 1e-2 {
            count_pos += 1;
        }
        max_r = max_r.max(r);
    }
    println!("literal -BY convention: max residual {max_r:.4}, violations {count_pos}/1000");

    // Origin value.
    let r0 = ccm::lmi_residual(&cert, &plant, &vec3(0.0, 0.0, 0.0), &DVector::zeros(1)).unwrap();
    println!("residual at origin: {r0:.4}");

    // Variant A: +BY (congruence-consistent with K = Y W^-1).
    let probe = |label: &str, flip_by: f64, transpose_a: bool, half_lambda: f64| {
        let metric = plant::benchmark_metric();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut worst = f64::NEG_INFINITY;
        for _ in 0..1000 {
            let x = vec3(
                rng.gen_range(-10.0..10.0),
                rng.gen_range(-10.0..10.0),
                rng.gen_range(-10.0..10.0),
            );
            let u = DVector::from_vec(vec![rng.gen_range(-30.0..30.0)]);
            let w = metric.w(&x).unwrap();
            let xdot = plant.flow(&x, &u);
            let dw = metric.w_partials(&x);
            let mut wdot = DMatrix::zeros(3, 3);
            for (i, dwi) in dw.iter().enumerate() {
                wdot += dwi * xdot[i];
            }
            let mut a = plant.jacobian(&x, &u);
            if transpose_a {
                a = a.transpose();
            }
            let b = plant.input_matrix(&x);
            let y = DMatrix::from_row_slice(1, 3, &[0.0, 0.0, -0.5 * plant::benchmark_rho(x[0])]);
            let by = &b * &y;
            let g = -wdot
                + &a * &w
                + &w * a.transpose()
                + flip_by * (&by + by.transpose())
                + 2.0 * half_lambda * &w;
            let sym = (&g + g.transpose()) * 0.5;
            worst = worst.max(sym.symmetric_eigenvalues().max());
        }
        println!("{label}: max residual {worst:.4}");
    };
    probe("+BY, A, 2*lambda*W (lambda=1)", 1.0, false, 1.0);
    probe("+BY, A, lambda*W (lambda=1/2 eff)", 1.0, false, 0.5);
    probe("+BY, A^T, 2*lambda*W", 1.0, true, 1.0);
    probe("-BY, A^T, 2*lambda*W", -1.0, true, 1.0);
    probe("+BY, A^T, lambda*W", 1.0, true, 0.5);

    // Metric bounds and overshoot.
    let metric = plant::benchmark_metric();
    let (a1, a2) = metric.bounds_on_box(&[-10.0; 3], &[10.0; 3], 21).unwrap();
    println!("alpha1 {a1:.6e}, alpha2 {a2:.6e}, R {:.3}", (a2 / a1).sqrt());

    // M-form differential stability at random states, u from the path.
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let grid = ChebGrid::new(4).unwrap();
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..100 {
        let x = vec3(
            rng.gen_range(-3.0..3.0),
            rng.gen_range(-3.0..3.0),
            rng.gen_range(-3.0..3.0),
        );
        let path =
            geometry::PathState::straight_line(grid.clone(), &x, &vec3(0.0, 0.0, 0.0)).unwrap();
        let (_, u) = ccm::feedback_along_path(&cert, &path, &DVector::zeros(1)).unwrap();
        let r = ccm::differential_stability_residual(&cert, &plant, &x, &u).unwrap();
        worst = worst.max(r);
    }
    println!("M-form closed-loop residual, box [-3,3]^3: max {worst:.4}");
    let r0 =
        ccm::differential_stability_residual(&cert, &plant, &vec3(0.0, 0.0, 0.0), &DVector::zeros(1))
            .unwrap();
    println!("M-form at origin: {r0:.4}");
}

#[test]
#[ignore]
fn geodesic_convergence_probe() {
    use ccmflow_core::geodesic::{GeodesicOptions, GeodesicProblem, solve_geodesic};
    let metric = plant::benchmark_metric();
    for order in [4usize, 8, 16] {
        let problem = GeodesicProblem::new(&metric, vec3(0.0, 0.0, 0.0), vec3(9.0, 9.0, 9.0))
            .with_order(order)
            .with_options(GeodesicOptions { keep_trace: true, max_iterations: 2000, ..Default::default() });
        let sol = solve_geodesic(&problem).unwrap();
        println!(
            "order {order}: iters {}, energy {:.6}, residual {:.3e}, converged {}",
            sol.iterations, sol.energy, sol.residual, sol.converged
        );
        for rec in sol.trace.iter().step_by(sol.trace.len().max(10) / 10) {
            println!("  it {:4}  E {:.8}  |g| {:.3e}", rec.iteration, rec.energy, rec.grad_norm);
        }
        let last = sol.trace.last().unwrap();
        println!("  last it {} |g| {:.3e}", last.iteration, last.grad_norm);
    }
}

