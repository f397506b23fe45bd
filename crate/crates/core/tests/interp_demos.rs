use mor_core::fom::fom_solve;
use mor_core::interp::gaussian_demo::{self, GaussianDemoConfig};
use mor_core::interp::{write_eim, EimOptions};
use mor_core::numkit::{dot, LinearOperator};

fn small_demo() -> gaussian_demo::GaussianDemo {
    gaussian_demo::build(&GaussianDemoConfig {
        grid: 12,
        n_train: 40,
        eim: EimOptions {
            tol: 1e-12,
            n_max: 40,
            ..EimOptions::default()
        },
        ..GaussianDemoConfig::default()
    })
    .unwrap()
}

#[test]
fn interpolated_source_system_converges_to_exact_source() {
    let demo = small_demo();
    let gram = demo.fom.system.gram();
    let norm = |v: &[f64]| dot(v, &gram.apply(v)).sqrt();
    let mu = &demo.training[3];
    let exact = demo.fom.solve_exact(mu).unwrap();
    let mut last = f64::INFINITY;
    for q in [4, 12, demo.eim.q()] {
        let u = fom_solve(&demo.affine_system(q).unwrap(), mu).unwrap().coefficients;
        let e: Vec<f64> = u.iter().zip(&exact).map(|(a, b)| a - b).collect();
        let rel = norm(&e) / norm(&exact);
        assert!(rel < last + 1e-12, "q = {q}: {rel} after {last}");
        last = rel;
    }
    assert!(last < 1e-6, "{last}");
}

#[test]
fn exported_manifest_matches_basis() {
    let demo = small_demo();
    let dir = tempfile::tempdir().unwrap();
    write_eim(dir.path(), &demo.eim).unwrap();
    let m: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    let idx: Vec<usize> = m["magic_indices"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap() as usize).collect();
    assert_eq!(idx, demo.eim.magic_indices);
    assert_eq!(m["q"].as_u64().unwrap() as usize, demo.eim.q());
    let (_, rows) = mor_core::io::parse_csv(&std::fs::read_to_string(dir.path().join("basis.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), demo.fom.nodes().len());
    assert_eq!(rows[idx[0]][0], 1.0);
}
