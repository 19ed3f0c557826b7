//! C ABI over the pendency core.
//!
//! Every fallible function returns a [`PdStatus`]; results go through out
//! pointers. On failure the message is kept per thread and can be fetched
//! with [`pd_last_error`]. Models are opaque [`PdModel`] handles that must be
//! released with [`pd_model_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::slice;

use pendency::eval::{log_loss, pr_auc, roc_auc};
use pendency::features::{hash_bucket, target_binary, target_multiclass};
use pendency::forest::{impurity_importance, tree_shap, Model};
use pendency::Error;

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Parse = 4,
    FormatVersion = 5,
    ShapeMismatch = 6,
    InvalidArgument = 7,
    UndefinedMetric = 8,
    Panic = 9,
}

/// A loaded model.
pub struct PdModel {
    model: Model,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

struct Failure(PdStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Io(_) => PdStatus::Io,
            Error::Json(_) | Error::Csv(_) => PdStatus::Parse,
            Error::FormatVersion(_) => PdStatus::FormatVersion,
            Error::ShapeMismatch(_) => PdStatus::ShapeMismatch,
            Error::UndefinedMetric(_) => PdStatus::UndefinedMetric,
            _ => PdStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn fail<T>(status: PdStatus, msg: &str) -> Result<T, Failure> {
    Err(Failure(status, msg.to_string()))
}

/// Runs `f`, records any error or panic, and returns its status.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> PdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            PdStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            PdStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return fail(PdStatus::NullPointer, &format!("{what} is null"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(PdStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return fail(PdStatus::NullPointer, &format!("{what} is null"));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn out_slice<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return fail(PdStatus::NullPointer, &format!("{what} is null"));
    }
    Ok(slice::from_raw_parts_mut(p, len))
}

unsafe fn write_out<T>(p: *mut T, v: T) -> Result<(), Failure> {
    if p.is_null() {
        return fail(PdStatus::NullPointer, "output pointer is null");
    }
    p.write(v);
    Ok(())
}

unsafe fn model_ref<'a>(m: *const PdModel) -> Result<&'a Model, Failure> {
    if m.is_null() {
        return fail(PdStatus::NullPointer, "model handle is null");
    }
    Ok(&(*m).model)
}

fn boxed(model: Model) -> *mut PdModel {
    Box::into_raw(Box::new(PdModel { model }))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copy of the last error message on this thread, or NULL if the last call
/// succeeded. Release with [`pd_string_free`].
#[no_mangle]
pub extern "C" fn pd_last_error() -> *mut c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null_mut(), |s| s.clone().into_raw()))
}

/// Frees a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from [`pd_last_error`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn pd_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Loads a model from a JSON file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn pd_model_load_file(path: *const c_char, out: *mut *mut PdModel) -> PdStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        let model = Model::load(Path::new(path))?;
        write_out(out, boxed(model))
    })
}

/// Loads a model from a JSON string.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn pd_model_load_json(json: *const c_char, out: *mut *mut PdModel) -> PdStatus {
    guard(|| {
        let json = str_arg(json, "json")?;
        let model = Model::from_json(json)?;
        write_out(out, boxed(model))
    })
}

/// Releases a model. NULL is ignored.
///
/// # Safety
/// `model` must come from a load call and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn pd_model_free(model: *mut PdModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// `model` must be a live handle; `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn pd_model_n_features(model: *const PdModel, out: *mut usize) -> PdStatus {
    guard(|| write_out(out, model_ref(model)?.n_features))
}

/// # Safety
/// `model` must be a live handle; `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn pd_model_n_classes(model: *const PdModel, out: *mut usize) -> PdStatus {
    guard(|| write_out(out, model_ref(model)?.n_classes))
}

/// Class probabilities for `n_rows` row-major rows of width `n_features`.
/// `out` receives `n_rows * n_classes` values, row-major.
///
/// # Safety
/// `x` must hold `n_rows * n_features` doubles and `out` `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn pd_model_predict_proba(
    model: *const PdModel,
    x: *const f64,
    n_rows: usize,
    n_features: usize,
    out: *mut f64,
    out_len: usize,
) -> PdStatus {
    guard(|| {
        let m = model_ref(model)?;
        if n_features != m.n_features {
            return fail(
                PdStatus::ShapeMismatch,
                &format!("model expects {} features, got {n_features}", m.n_features),
            );
        }
        let need = n_rows * m.n_classes;
        if out_len < need {
            return fail(PdStatus::ShapeMismatch, &format!("output needs {need} values, got {out_len}"));
        }
        let x = slice_arg(x, n_rows * n_features, "x")?;
        let out = out_slice(out, need, "out")?;
        for (r, dst) in out.chunks_mut(m.n_classes.max(1)).enumerate().take(n_rows) {
            let row = &x[r * n_features..(r + 1) * n_features];
            dst.copy_from_slice(&m.predict_proba_row(row));
        }
        Ok(())
    })
}

/// Per-feature attributions of one row for `class`. Averaging models
/// explain the class probability; boosted models explain the margin.
/// `contributions` receives `n_features` values.
///
/// # Safety
/// `row` and `contributions` must hold `n_features` doubles; `base_value`
/// may be NULL.
#[no_mangle]
pub unsafe extern "C" fn pd_model_shap(
    model: *const PdModel,
    row: *const f64,
    n_features: usize,
    class: usize,
    contributions: *mut f64,
    base_value: *mut f64,
) -> PdStatus {
    guard(|| {
        let m = model_ref(model)?;
        if n_features != m.n_features {
            return fail(
                PdStatus::ShapeMismatch,
                &format!("model expects {} features, got {n_features}", m.n_features),
            );
        }
        let row = slice_arg(row, n_features, "row")?;
        let a = tree_shap(m, row, class)?;
        out_slice(contributions, n_features, "contributions")?.copy_from_slice(&a.contributions);
        if !base_value.is_null() {
            base_value.write(a.base_value);
        }
        Ok(())
    })
}

/// Normalized impurity importance, `n_features` values.
///
/// # Safety
/// `out` must hold `out_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn pd_model_importance(model: *const PdModel, out: *mut f64, out_len: usize) -> PdStatus {
    guard(|| {
        let m = model_ref(model)?;
        if out_len < m.n_features {
            return fail(PdStatus::ShapeMismatch, &format!("output needs {} values", m.n_features));
        }
        out_slice(out, m.n_features, "out")?.copy_from_slice(&impurity_importance(m));
        Ok(())
    })
}

fn bool_labels(labels: &[u8]) -> Vec<bool> {
    labels.iter().map(|&l| l != 0).collect()
}

/// ROC AUC of `scores` against 0/1 `labels`.
///
/// # Safety
/// `scores` and `labels` must hold `n` elements; `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn pd_roc_auc(scores: *const f64, labels: *const u8, n: usize, out: *mut f64) -> PdStatus {
    guard(|| {
        let v = roc_auc(slice_arg(scores, n, "scores")?, &bool_labels(slice_arg(labels, n, "labels")?))?;
        write_out(out, v)
    })
}

/// Average precision of `scores` against 0/1 `labels`.
///
/// # Safety
/// `scores` and `labels` must hold `n` elements; `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn pd_pr_auc(scores: *const f64, labels: *const u8, n: usize, out: *mut f64) -> PdStatus {
    guard(|| {
        let v = pr_auc(slice_arg(scores, n, "scores")?, &bool_labels(slice_arg(labels, n, "labels")?))?;
        write_out(out, v)
    })
}

/// Mean log loss of row-major `n x n_classes` probabilities, clipped to
/// `[eps, 1 - eps]`.
///
/// # Safety
/// `probs` must hold `n * n_classes` doubles, `labels` `n` values.
#[no_mangle]
pub unsafe extern "C" fn pd_log_loss(
    probs: *const f64,
    labels: *const u32,
    n: usize,
    n_classes: usize,
    eps: f64,
    out: *mut f64,
) -> PdStatus {
    guard(|| {
        if n_classes == 0 {
            return fail(PdStatus::InvalidArgument, "n_classes must be positive");
        }
        let p = slice_arg(probs, n * n_classes, "probs")?;
        let rows: Vec<Vec<f64>> = p.chunks(n_classes).map(<[f64]>::to_vec).collect();
        let y: Vec<usize> = slice_arg(labels, n, "labels")?.iter().map(|&l| l as usize).collect();
        write_out(out, log_loss(&rows, &y, eps)?)
    })
}

/// Five-band class index for a duration in days; `ongoing != 0` ignores
/// `duration_days`.
///
/// # Safety
/// `out` must be a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn pd_target_multiclass(duration_days: i64, ongoing: u8, out: *mut u32) -> PdStatus {
    guard(|| {
        let c = target_multiclass((ongoing == 0).then_some(duration_days))?;
        write_out(out, c.index() as u32)
    })
}

/// Three-year binary class index; `ongoing != 0` ignores `duration_days`.
///
/// # Safety
/// `out` must be a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn pd_target_binary(duration_days: i64, ongoing: u8, out: *mut u32) -> PdStatus {
    guard(|| {
        let c = target_binary((ongoing == 0).then_some(duration_days))?;
        write_out(out, c.index() as u32)
    })
}

/// Hash bucket of a `column=value` token for a power-of-two width.
///
/// # Safety
/// `token` must be a NUL-terminated string; `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn pd_hash_bucket(token: *const c_char, width: usize, out: *mut usize) -> PdStatus {
    guard(|| {
        let b = hash_bucket(str_arg(token, "token")?, width)?;
        write_out(out, b)
    })
}
