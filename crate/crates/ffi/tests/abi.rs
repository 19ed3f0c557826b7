use std::ffi::{CStr, CString};
use std::ptr;

use pendency::features::EncodedMatrix;
use pendency::forest::{train_gbdt, train_random_forest, ForestParams, GbdtParams, Model};
use pendency_ffi::*;

fn data() -> (EncodedMatrix, Vec<usize>, Vec<Vec<f64>>) {
    let rows: Vec<Vec<f64>> = (0..80).map(|i| vec![(i % 7) as f64, (i % 3) as f64, (i / 10) as f64]).collect();
    let y = rows.iter().map(|r| usize::from(r[0] + r[2] > 6.0)).collect();
    (EncodedMatrix::from_rows(&rows).unwrap(), y, rows)
}

fn load(model: &Model) -> *mut PdModel {
    let json = CString::new(model.to_json().unwrap()).unwrap();
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { pd_model_load_json(json.as_ptr(), &mut h) }, PdStatus::Ok);
    assert!(!h.is_null());
    h
}

fn last_error() -> Option<String> {
    let p = pd_last_error();
    if p.is_null() {
        return None;
    }
    let s = unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned();
    unsafe { pd_string_free(p) };
    Some(s)
}

#[test]
fn predictions_match_core() {
    let (x, y, rows) = data();
    let model = train_random_forest(&x, &y, 2, &ForestParams { n_trees: 15, ..ForestParams::default() }).unwrap();
    let h = load(&model);
    let (mut d, mut k) = (0usize, 0usize);
    unsafe {
        assert_eq!(pd_model_n_features(h, &mut d), PdStatus::Ok);
        assert_eq!(pd_model_n_classes(h, &mut k), PdStatus::Ok);
    }
    assert_eq!((d, k), (3, 2));
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    let mut out = vec![0.0; rows.len() * 2];
    let status = unsafe { pd_model_predict_proba(h, flat.as_ptr(), rows.len(), 3, out.as_mut_ptr(), out.len()) };
    assert_eq!(status, PdStatus::Ok);
    let expected: Vec<f64> = model.predict_proba(&x).unwrap().into_iter().flatten().collect();
    assert_eq!(out, expected);

    let mut imp = [0.0; 3];
    assert_eq!(unsafe { pd_model_importance(h, imp.as_mut_ptr(), 3) }, PdStatus::Ok);
    assert!((imp.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    unsafe { pd_model_free(h) };
}

#[test]
fn shap_is_locally_accurate_on_margin() {
    let (x, y, rows) = data();
    let model = train_gbdt(&x, &y, &GbdtParams { n_rounds: 10, ..GbdtParams::default() }).unwrap();
    let h = load(&model);
    for row in rows.iter().take(10) {
        let mut phi = [0.0; 3];
        let mut base = 0.0;
        let status = unsafe { pd_model_shap(h, row.as_ptr(), 3, 1, phi.as_mut_ptr(), &mut base) };
        assert_eq!(status, PdStatus::Ok);
        assert!((base + phi.iter().sum::<f64>() - model.margin_row(row)).abs() < 1e-9);
    }
    unsafe { pd_model_free(h) };
}

#[test]
fn errors_set_codes_and_messages() {
    let (x, y, _) = data();
    let model = train_random_forest(&x, &y, 2, &ForestParams { n_trees: 2, ..ForestParams::default() }).unwrap();
    let h = load(&model);
    let mut out = [0.0; 2];
    let row = [0.0; 2];
    let status = unsafe { pd_model_predict_proba(h, row.as_ptr(), 1, 2, out.as_mut_ptr(), 2) };
    assert_eq!(status, PdStatus::ShapeMismatch);
    assert!(last_error().unwrap().contains("3 features"));
    unsafe { pd_model_free(h) };

    let mut h = ptr::null_mut();
    let bad = CString::new("{").unwrap();
    assert_eq!(unsafe { pd_model_load_json(bad.as_ptr(), &mut h) }, PdStatus::Parse);
    assert!(h.is_null());
    let missing = CString::new("/nonexistent/model.json").unwrap();
    assert_eq!(unsafe { pd_model_load_file(missing.as_ptr(), &mut h) }, PdStatus::Io);
    assert_eq!(unsafe { pd_model_load_json(ptr::null(), &mut h) }, PdStatus::NullPointer);

    let mut json: serde_json::Value = serde_json::from_str(&model.to_json().unwrap()).unwrap();
    json["format_version"] = 99.into();
    let text = CString::new(json.to_string()).unwrap();
    assert_eq!(unsafe { pd_model_load_json(text.as_ptr(), &mut h) }, PdStatus::FormatVersion);

    let mut d = 0usize;
    assert_eq!(unsafe { pd_model_n_features(ptr::null(), &mut d) }, PdStatus::NullPointer);
    unsafe { pd_model_free(ptr::null_mut()) };

    let mut v = 0.0;
    assert_eq!(unsafe { pd_roc_auc([0.1, 0.2].as_ptr(), [1u8, 1].as_ptr(), 2, &mut v) }, PdStatus::UndefinedMetric);
    assert_eq!(unsafe { pd_roc_auc([0.1, 0.2].as_ptr(), [0u8, 1].as_ptr(), 2, &mut v) }, PdStatus::Ok);
    assert!(last_error().is_none());
}

#[test]
fn metrics_targets_and_hashing() {
    let scores = [0.9, 0.8, 0.7, 0.3, 0.2];
    let labels = [1u8, 0, 1, 0, 0];
    let (mut roc, mut ap) = (0.0, 0.0);
    unsafe {
        assert_eq!(pd_roc_auc(scores.as_ptr(), labels.as_ptr(), 5, &mut roc), PdStatus::Ok);
        assert_eq!(pd_pr_auc(scores.as_ptr(), labels.as_ptr(), 5, &mut ap), PdStatus::Ok);
    }
    // 5 of 6 positive/negative pairs ordered correctly.
    assert!((roc - 5.0 / 6.0).abs() < 1e-15);
    // Precision 1 at the first hit, 2/3 at the second.
    assert!((ap - (1.0 + 2.0 / 3.0) / 2.0).abs() < 1e-15);

    let probs = [0.5, 0.5, 0.25, 0.75];
    let y = [0u32, 1];
    let mut ll = 0.0;
    assert_eq!(unsafe { pd_log_loss(probs.as_ptr(), y.as_ptr(), 2, 2, 1e-15, &mut ll) }, PdStatus::Ok);
    assert!((ll - (2f64.ln() + (4.0f64 / 3.0).ln()) / 2.0).abs() < 1e-15);

    let mut c = 0u32;
    unsafe {
        assert_eq!(pd_target_multiclass(364, 0, &mut c), PdStatus::Ok);
        assert_eq!(c, 0);
        assert_eq!(pd_target_multiclass(0, 1, &mut c), PdStatus::Ok);
        assert_eq!(c, 4);
        assert_eq!(pd_target_binary(400, 0, &mut c), PdStatus::Ok);
        assert_eq!(c, 0);
        assert_eq!(pd_target_binary(0, 1, &mut c), PdStatus::Ok);
        assert_eq!(c, 1);
        assert_eq!(pd_target_binary(-1, 0, &mut c), PdStatus::InvalidArgument);
    }

    let token = CString::new("state_code=27").unwrap();
    let mut b = 0usize;
    unsafe {
        assert_eq!(pd_hash_bucket(token.as_ptr(), 256, &mut b), PdStatus::Ok);
        assert_eq!(b, pendency::features::hash_bucket("state_code=27", 256).unwrap());
        assert_eq!(pd_hash_bucket(token.as_ptr(), 100, &mut b), PdStatus::InvalidArgument);
    }
    let v = unsafe { CStr::from_ptr(pd_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
