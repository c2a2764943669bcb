mod common;

use fieldroad_core::discrete::{assemble_eigen_operator, build_grid};
use fieldroad_core::model::{ModelParams, ReactionSpec};
use fieldroad_core::spectral::principal_eigen;

#[test]
fn tiny_grid_matches_dense_spectrum() {
    let p = ModelParams::unit(2.0);
    let spec = ReactionSpec::cosine(1.0, 0.5, 1.0);
    let g = build_grid(&p, 4, 4).unwrap();
    for alpha in [0.0, 0.7, -1.3] {
        let op = assemble_eigen_operator(&p, &spec, &g, alpha);
        let (lam, im, v) = common::dense_principal(&op);
        assert_eq!(im, 0.0);
        assert!(v.iter().all(|x| *x > 0.0), "dense principal eigenvector not positive");
        let e = principal_eigen(&p, &spec, &g, alpha, 1e-12).unwrap();
        assert!((e.lambda - lam).abs() <= 1e-10 * (1.0 + lam.abs()), "{} vs {lam}", e.lambda);
    }
}

#[test]
fn inverse_iteration_eigenvector_matches_dense() {
    let p = ModelParams {
        d_road: 3.0,
        mu: 0.5,
        nu: 2.0,
        ..ModelParams::unit(3.0)
    };
    let spec = ReactionSpec::cosine(1.0, 0.5, 1.0);
    let g = build_grid(&p, 8, 8).unwrap();
    let op = assemble_eigen_operator(&p, &spec, &g, 0.4);
    let (_, _, v) = common::dense_principal(&op);
    let e = principal_eigen(&p, &spec, &g, 0.4, 1e-12).unwrap();
    let w = e.vector();
    let scale = w[0] / v[0];
    for (a, b) in w.iter().zip(&v) {
        assert!((a - scale * b).abs() < 1e-8, "{a} vs {}", scale * b);
    }
}

#[test]
fn residual_tracks_tolerance() {
    let p = ModelParams::unit(5.0);
    let spec = ReactionSpec::cosine(1.0, 0.5, 1.0);
    let g = build_grid(&p, 16, 20).unwrap();
    for tol in [1e-6, 1e-8, 1e-10] {
        let e = principal_eigen(&p, &spec, &g, 0.5, tol).unwrap();
        assert!(e.residual <= tol, "tol {tol}: residual {}", e.residual);
    }
}
