use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rpinn::config::{parse_run_spec, RunSpec};
use rpinn::mesh::{element_gradients, interpolate_linear, interpolate_nodal, nodal_from_values, RectDomain, TriMesh};
use rpinn::network::{forward, forward_jet, init_params, parse_checkpoint, write_checkpoint, MlpSpec, ParamIndex, ParamVector};
use rpinn::problems::{poisson_peak, wave};
use rpinn::recovery::{estimate, RecoveryMethod};
use rpinn::sampling::{boundary_points, recad, sobol_in, CollocationSet, RecadConfig};
use rpinn::training::{lbfgs_minimize, metrics_from_values, total_loss, LbfgsSettings, LossWeights};

fn net() -> impl Strategy<Value = (MlpSpec, ParamVector)> {
    (1usize..=4, 1usize..=8, any::<u64>()).prop_map(|(depth, width, seed)| {
        let spec = MlpSpec::new(2, depth, width).unwrap();
        let mut p = init_params(&spec, seed, &[]);
        // nonzero biases so every path is exercised
        for (k, v) in p.values_mut().iter_mut().enumerate() {
            if *v == 0.0 {
                *v = 0.1 * ((k * 7919 + seed as usize % 97) % 13) as f64 / 13.0 - 0.05;
            }
        }
        (spec, p)
    })
}

fn point() -> impl Strategy<Value = [f64; 2]> {
    [-1.0f64..1.0, -1.0f64..1.0]
}

fn rect() -> impl Strategy<Value = RectDomain> {
    (-3.0f64..3.0, -3.0f64..3.0, 0.2f64..4.0, 0.2f64..4.0)
        .prop_map(|(x, y, w, h)| RectDomain::new([x, y], [x + w, y + h]).unwrap())
}

const METHODS: [RecoveryMethod; 3] = [
    RecoveryMethod::WeightedAveraging,
    RecoveryMethod::LocalL2Projection,
    RecoveryMethod::LeastSquaresFit,
];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn hessian_is_exactly_symmetric((spec, p) in net(), x in point()) {
        let j = forward_jet(&spec, p.values(), &x).unwrap();
        prop_assert_eq!(j.second(0, 1).to_bits(), j.second(1, 0).to_bits());
        prop_assert_eq!(j.first().len(), 2);
    }

    #[test]
    fn evaluation_is_deterministic((spec, p) in net(), x in point()) {
        let a = forward_jet(&spec, p.values(), &x).unwrap();
        let b = forward_jet(&spec, p.values(), &x).unwrap();
        prop_assert_eq!(a.value().to_bits(), b.value().to_bits());
        prop_assert_eq!(a.laplacian().to_bits(), b.laplacian().to_bits());
        prop_assert!(a.value().is_finite() && a.laplacian().is_finite());
    }

    #[test]
    fn layout_is_a_bijection(depth in 1usize..=7, width in 1usize..=20, n_lambda in 0usize..3) {
        let spec = MlpSpec::new(2, depth, width).unwrap();
        let p = ParamVector::zeros(&spec, n_lambda);
        let l = p.layout();
        prop_assert_eq!(l.len(), spec.n_network_params() + n_lambda);
        for flat in 0..l.len() {
            prop_assert_eq!(l.index(l.locate(flat)), flat);
        }
    }

    #[test]
    fn permuting_hidden_neurons_keeps_output((spec, p) in net(), x in point(), a in 0usize..8, b in 0usize..8) {
        let (a, b) = (a % spec.hidden_width, b % spec.hidden_width);
        let mut q = p.clone();
        let (fan_out, fan_in) = p.layout().shapes()[0];
        prop_assume!(fan_out == spec.hidden_width);
        // swap rows a, b of layer 0 and the matching columns of layer 1
        for col in 0..fan_in {
            let (ia, ib) = (ParamIndex::Weight { layer: 0, row: a, col }, ParamIndex::Weight { layer: 0, row: b, col });
            q.set(ia, p.get(ib));
            q.set(ib, p.get(ia));
        }
        q.set(ParamIndex::Bias { layer: 0, row: a }, p.get(ParamIndex::Bias { layer: 0, row: b }));
        q.set(ParamIndex::Bias { layer: 0, row: b }, p.get(ParamIndex::Bias { layer: 0, row: a }));
        let (next_out, _) = p.layout().shapes()[1];
        for row in 0..next_out {
            let (ia, ib) = (ParamIndex::Weight { layer: 1, row, col: a }, ParamIndex::Weight { layer: 1, row, col: b });
            q.set(ia, p.get(ib));
            q.set(ib, p.get(ia));
        }
        let u = forward(&spec, p.values(), &x).unwrap();
        let v = forward(&spec, q.values(), &x).unwrap();
        prop_assert!((u - v).abs() <= 1e-12 * (1.0 + u.abs()));
    }

    #[test]
    fn checkpoints_round_trip_bitwise((spec, p) in net(), lambda in prop::collection::vec(-1e3f64..1e3, 0..3)) {
        let mut values = p.network().to_vec();
        values.extend_from_slice(&lambda);
        let p = ParamVector::from_values(&spec, lambda.len(), values).unwrap();
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &spec, &p).unwrap();
        let (spec2, p2) = parse_checkpoint(std::str::from_utf8(&buf).unwrap()).unwrap();
        prop_assert_eq!(spec, spec2);
        prop_assert_eq!(p, p2);
    }

    #[test]
    fn linear_fields_are_reproduced(d in rect(), nx in 1usize..12, ny in 1usize..12, c in [-5.0f64..5.0, -5.0f64..5.0, -5.0f64..5.0], t in [0.0f64..1.0, 0.0f64..1.0]) {
        let mesh = TriMesh::diagonal(d, nx, ny).unwrap();
        let f = |p: [f64; 2]| c[0] + c[1] * p[0] + c[2] * p[1];
        let u = interpolate_nodal(&mesh, f).unwrap();
        let scale = 1.0 + c.iter().map(|v| v.abs()).sum::<f64>() * (1.0 + d.hi[0].abs().max(d.hi[1].abs()));
        let x = d.from_unit(t);
        prop_assert!((interpolate_linear(&mesh, &u, x).unwrap() - f(x)).abs() <= 1e-12 * scale);
        for g in element_gradients(&mesh, &u).unwrap().0 {
            prop_assert!((g[0] - c[1]).abs() <= 1e-11 * scale && (g[1] - c[2]).abs() <= 1e-11 * scale);
        }
        for m in METHODS {
            let eta = estimate(&mesh, &u, m).unwrap();
            prop_assert!(eta.eta.iter().all(|&e| e <= 1e-10 * scale));
        }
    }

    #[test]
    fn piecewise_linear_fields_are_fixed_points(nx in 1usize..8, ny in 1usize..8, seed in any::<u64>()) {
        let mesh = TriMesh::diagonal(RectDomain::unit_square(), nx, ny).unwrap();
        let vals: Vec<f64> = (0..mesh.n_vertices()).map(|k| ((k as u64 ^ seed) % 1000) as f64 / 100.0 - 5.0).collect();
        let u = nodal_from_values(&mesh, vals.clone()).unwrap();
        let again = interpolate_nodal(&mesh, |p| interpolate_linear(&mesh, &u, p).unwrap()).unwrap();
        for (a, b) in again.0.iter().zip(&vals) {
            prop_assert!((a - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn estimator_is_absolutely_homogeneous(nx in 2usize..10, c in -10.0f64..10.0, k in 0.5f64..4.0) {
        let mesh = TriMesh::diagonal(RectDomain::unit_square(), nx, nx).unwrap();
        let f = |p: [f64; 2]| (k * p[0]).sin() * (p[1] * p[1] + 1.0);
        let u = interpolate_nodal(&mesh, f).unwrap();
        let cu = interpolate_nodal(&mesh, |p| c * f(p)).unwrap();
        for m in METHODS {
            let a = estimate(&mesh, &u, m).unwrap();
            let b = estimate(&mesh, &cu, m).unwrap();
            prop_assert!(b.eta.iter().all(|e| e.is_finite() && *e >= 0.0));
            for (x, y) in a.eta.iter().zip(&b.eta) {
                prop_assert!((c.abs() * x - y).abs() <= 1e-12 * (1.0 + y.abs()));
            }
        }
    }

    #[test]
    fn adaptive_points_land_in_their_triangles(nx in 2usize..8, n2 in 0usize..200, seed in any::<u64>(), t in 0.01f64..0.98) {
        let mesh = TriMesh::diagonal(RectDomain::unit_square(), nx, nx).unwrap();
        let ne = mesh.n_triangles();
        let eta: Vec<f64> = (0..ne).map(|k| 1.0 + ((k as u64).wrapping_mul(seed | 1) % 17) as f64).collect();
        let cfg = RecadConfig { n_adaptive: n2, epsilon: 1.0 / ne as f64 + t * (1.0 - 1.0 / ne as f64) };
        let (counts, pts) = recad(&eta, &mesh, &cfg, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let (counts2, pts2) = recad(&eta, &mesh, &cfg, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert_eq!(&counts, &counts2);
        prop_assert_eq!(&pts, &pts2);
        prop_assert_eq!(pts.len(), n2);
        let mut k = 0;
        for (tri, &c) in counts.iter().enumerate() {
            for p in &pts[k..k + c] {
                let l = mesh.barycentric(tri, *p);
                prop_assert!(l.iter().all(|&v| (-1e-12..=1.0 + 1e-12).contains(&v)));
            }
            k += c;
        }
    }

    #[test]
    fn sobol_and_boundary_points_stay_on_the_domain(n in 1usize..300) {
        for problem in [poisson_peak(), wave()] {
            let d = *problem.domain();
            prop_assert!(sobol_in(&d, n).iter().all(|&p| d.contains(p)));
            let b = boundary_points(problem.segments(), n).unwrap();
            for bp in &b {
                let p = bp.point;
                let on_edge = [p[0] - d.lo[0], d.hi[0] - p[0], p[1] - d.lo[1], d.hi[1] - p[1]]
                    .iter()
                    .any(|v| v.abs() <= 1e-12);
                prop_assert!(d.contains(p) && on_edge);
            }
        }
    }

    #[test]
    fn total_loss_is_nonnegative((spec, p) in net(), seed in any::<u64>()) {
        let problem = poisson_peak();
        let d = *problem.domain();
        let colloc = CollocationSet {
            background: sobol_in(&d, 16 + (seed % 16) as usize),
            adaptive: Vec::new(),
            boundary: boundary_points(problem.segments(), 12).unwrap(),
        };
        let l = total_loss(&problem, &spec, &colloc, &[], p.values(), &LossWeights::default()).unwrap();
        prop_assert!(l.total >= 0.0 && l.pde >= 0.0 && l.boundary >= 0.0 && l.data == 0.0);
    }

    #[test]
    fn best_loss_trace_is_monotone(diag in prop::collection::vec(0.01f64..100.0, 2..6), x0 in prop::collection::vec(-5.0f64..5.0, 6), epochs in 0usize..30) {
        let n = diag.len();
        // ill-conditioned quartic bowl
        let f = |x: &[f64], g: &mut [f64]| {
            let mut v = 0.0;
            for i in 0..n {
                v += diag[i] * x[i].powi(2) + x[i].powi(4);
                g[i] = 2.0 * diag[i] * x[i] + 4.0 * x[i].powi(3);
            }
            Ok(v)
        };
        let r = lbfgs_minimize(f, &x0[..n], epochs, &LbfgsSettings::default()).unwrap();
        prop_assert_eq!(r.trace.len(), r.iterations + 1);
        prop_assert!(r.trace.windows(2).all(|w| w[1] <= w[0]));
        prop_assert_eq!(*r.trace.last().unwrap(), r.loss);
    }

    #[test]
    fn metrics_are_nonnegative_and_scale_free(truth in prop::collection::vec(-3.0f64..3.0, 1..50), noise in prop::collection::vec(-1.0f64..1.0, 50), c in 0.1f64..10.0) {
        prop_assume!(truth.iter().any(|v| v.abs() > 1e-3));
        let pred: Vec<f64> = truth.iter().zip(&noise).map(|(t, e)| t + e).collect();
        let (rel, linf) = metrics_from_values(&pred, &truth).unwrap();
        prop_assert!(rel >= 0.0 && linf >= 0.0);
        let st: Vec<f64> = truth.iter().map(|v| c * v).collect();
        let sp: Vec<f64> = pred.iter().map(|v| c * v).collect();
        let (rel2, linf2) = metrics_from_values(&sp, &st).unwrap();
        prop_assert!((rel - rel2).abs() <= 1e-12 * (1.0 + rel));
        prop_assert!((c * linf - linf2).abs() <= 1e-12 * (1.0 + linf2));
    }

    #[test]
    fn resolved_configs_round_trip(n1 in 1usize..5000, n2 in 1usize..500, m in 0usize..6, seed in any::<u64>(), eps in 0.01f64..0.9) {
        let text = format!(
            r#"{{"problem": "wave", "train": {{"N1": {n1}, "N2": {n2}, "M": {m}, "seed": {seed}, "epsilon": {eps}}}}}"#
        );
        let spec: RunSpec = parse_run_spec(&text, &[]).unwrap();
        prop_assert_eq!(spec.train.n1, n1);
        prop_assert_eq!(spec.train.epsilon.to_bits(), eps.to_bits());
        let again = parse_run_spec(&spec.to_json().unwrap(), &[]).unwrap();
        prop_assert_eq!(again, spec);
    }
}
