//! C ABI for the natural-learning classifier.
//!
//! Datasets and models are opaque heap handles created by `nl_*_new`,
//! `nl_*_load` or `nl_train` and released with the matching `*_free`.
//! Every fallible call returns an `NlStatus` code; on failure the message
//! is available from `nl_last_error_message` on the same thread.
//!
//! Handles are not synchronized. A model may be shared across threads for
//! prediction only if the caller does not free it concurrently.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use natural_learning::data::LabelColumn;
use natural_learning::{model_file, Dataset, Error, NlModel as Model, TrainConfig};

/// Status code returned by every fallible function.
pub type NlStatus = i32;

pub const NL_OK: NlStatus = 0;
/// A required pointer argument was null.
pub const NL_ERR_NULL_POINTER: NlStatus = 1;
/// An argument was out of range or inconsistent with the model.
pub const NL_ERR_INVALID_ARGUMENT: NlStatus = 2;
/// Input data could not be parsed or violates dataset requirements.
pub const NL_ERR_DATA: NlStatus = 3;
/// Training found no usable prototype pair.
pub const NL_ERR_TRAINING: NlStatus = 4;
pub const NL_ERR_IO: NlStatus = 5;
/// A model document is malformed or unsupported.
pub const NL_ERR_MODEL: NlStatus = 6;
/// The library panicked; the call had no effect on its outputs.
pub const NL_ERR_PANIC: NlStatus = 7;

/// Opaque labeled dataset.
pub struct NlDataset {
    inner: Dataset,
}

/// Opaque trained model.
pub struct NlModel {
    inner: Model,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    let c = CString::new(msg).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_last_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(err: &Error) -> NlStatus {
    match err {
        Error::NoCandidate { .. } => NL_ERR_TRAINING,
        Error::Io { .. } => NL_ERR_IO,
        Error::Model(_) | Error::Json(_) => NL_ERR_MODEL,
        Error::DimensionMismatch { .. }
        | Error::FeatureOutOfRange { .. }
        | Error::InvalidArgument(_)
        | Error::MissingColumn(_)
        | Error::MissingFeatures(_)
        | Error::OracleGuard(_) => NL_ERR_INVALID_ARGUMENT,
        _ => NL_ERR_DATA,
    }
}

struct Failure(NlStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(NL_ERR_NULL_POINTER, format!("`{what}` is null"))
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> NlStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            clear_last_error();
            NL_OK
        }
        Ok(Err(Failure(code, msg))) => {
            set_last_error(msg);
            code
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            NL_ERR_PANIC
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(NL_ERR_INVALID_ARGUMENT, format!("`{what}` is not valid UTF-8")))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut T, value: T) {
    if !out.is_null() {
        out.write(value);
    }
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn nl_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the most recent failed call on this thread, or null after
/// a successful call. Valid until the next library call on this thread.
#[no_mangle]
pub extern "C" fn nl_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Builds a dataset from `n * p` row-major values and `n` labels in {0, 1}.
///
/// # Safety
/// `values` must point to `n * p` doubles and `labels` to `n` bytes.
#[no_mangle]
pub unsafe extern "C" fn nl_dataset_new(
    values: *const f64,
    n: usize,
    p: usize,
    labels: *const u8,
    out: *mut *mut NlDataset,
) -> NlStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let len = n
            .checked_mul(p)
            .ok_or_else(|| Failure(NL_ERR_INVALID_ARGUMENT, "n * p overflows".into()))?;
        let values = slice_arg(values, len, "values")?;
        let labels = slice_arg(labels, n, "labels")?;
        let ds = Dataset::new(values.to_vec(), p, labels.to_vec())?;
        *out = Box::into_raw(Box::new(NlDataset { inner: ds }));
        Ok(())
    })
}

/// Loads a CSV with a header row. `label_column` is a header name or a
/// 0-based index; null selects the last column.
///
/// # Safety
/// `path` and a non-null `label_column` must be NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn nl_dataset_load_csv(
    path: *const c_char,
    label_column: *const c_char,
    out: *mut *mut NlDataset,
) -> NlStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let path = str_arg(path, "path")?;
        let label = if label_column.is_null() {
            LabelColumn::default()
        } else {
            LabelColumn::parse(str_arg(label_column, "label_column")?)
        };
        let ds = natural_learning::load_csv(path, label)?;
        *out = Box::into_raw(Box::new(NlDataset { inner: ds }));
        Ok(())
    })
}

/// Number of samples, or 0 for a null handle.
///
/// # Safety
/// `ds` must be null or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn nl_dataset_n(ds: *const NlDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.inner.n())
}

/// Number of features, or 0 for a null handle.
///
/// # Safety
/// `ds` must be null or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn nl_dataset_p(ds: *const NlDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.inner.p())
}

/// # Safety
/// `ds` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nl_dataset_free(ds: *mut NlDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Trains a model. `threads == 0` uses all available cores. Exact neighbor
/// search is used up to 2000 samples and hashing above that.
///
/// # Safety
/// `ds` must be a live dataset handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nl_train(
    ds: *const NlDataset,
    seed: u64,
    threads: usize,
    scale: bool,
    out: *mut *mut NlModel,
) -> NlStatus {
    guard(|| {
        let ds = ref_arg(ds, "ds")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let config = TrainConfig {
            seed,
            scale,
            threads: (threads > 0).then_some(threads),
            ..TrainConfig::default()
        };
        let (model, _) = natural_learning::nl_train(&ds.inner, &config)?;
        *out = Box::into_raw(Box::new(NlModel { inner: model }));
        Ok(())
    })
}

/// Parses a model from its JSON text.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nl_model_from_json(json: *const c_char, out: *mut *mut NlModel) -> NlStatus {
    guard(|| {
        let text = str_arg(json, "json")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let model = model_file::from_json(text)?;
        *out = Box::into_raw(Box::new(NlModel { inner: model }));
        Ok(())
    })
}

/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nl_model_load(path: *const c_char, out: *mut *mut NlModel) -> NlStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let model = model_file::load(path)?;
        *out = Box::into_raw(Box::new(NlModel { inner: model }));
        Ok(())
    })
}

/// # Safety
/// `model` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn nl_model_save(model: *const NlModel, path: *const c_char) -> NlStatus {
    guard(|| {
        let model = ref_arg(model, "model")?;
        let path = str_arg(path, "path")?;
        model_file::save(&model.inner, path)?;
        Ok(())
    })
}

/// Serializes the model to canonical JSON. Release the string with
/// `nl_string_free`.
///
/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nl_model_to_json(model: *const NlModel, out: *mut *mut c_char) -> NlStatus {
    guard(|| {
        let model = ref_arg(model, "model")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let text = model_file::to_canonical_json(&model.inner)?;
        let c = CString::new(text).map_err(|e| Failure(NL_ERR_MODEL, e.to_string()))?;
        *out = c.into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nl_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Classifies one row. `len` is either the training width or the number
/// of model features (values already restricted, in index order). The
/// distance outputs may be null.
///
/// # Safety
/// `row` must point to `len` doubles; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn nl_model_predict(
    model: *const NlModel,
    row: *const f64,
    len: usize,
    out_label: *mut u8,
    out_d_same: *mut f64,
    out_d_opposite: *mut f64,
) -> NlStatus {
    guard(|| {
        let model = ref_arg(model, "model")?;
        let row = slice_arg(row, len, "row")?;
        if out_label.is_null() {
            return Err(null("out_label"));
        }
        let pred = natural_learning::predict_one(&model.inner, row)?;
        put(out_label, pred.label);
        put(out_d_same, pred.d_same);
        put(out_d_opposite, pred.d_opposite);
        Ok(())
    })
}

/// Classifies `n` row-major rows of width `p` into `out_labels[n]`.
///
/// # Safety
/// `values` must point to `n * p` doubles and `out_labels` to `n` bytes.
#[no_mangle]
pub unsafe extern "C" fn nl_model_predict_batch(
    model: *const NlModel,
    values: *const f64,
    n: usize,
    p: usize,
    out_labels: *mut u8,
) -> NlStatus {
    guard(|| {
        let model = ref_arg(model, "model")?;
        if p == 0 {
            return Err(Failure(NL_ERR_INVALID_ARGUMENT, "p must be positive".into()));
        }
        let len = n
            .checked_mul(p)
            .ok_or_else(|| Failure(NL_ERR_INVALID_ARGUMENT, "n * p overflows".into()))?;
        let values = slice_arg(values, len, "values")?;
        if n > 0 && out_labels.is_null() {
            return Err(null("out_labels"));
        }
        let preds = natural_learning::predict::predict_rows(&model.inner, values.chunks_exact(p))?;
        for (i, pred) in preds.iter().enumerate() {
            out_labels.add(i).write(pred.label);
        }
        Ok(())
    })
}

/// Number of features the model compares, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nl_model_num_features(model: *const NlModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.num_features())
}

/// Training-schema index of the `k`-th model feature.
///
/// # Safety
/// `model` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn nl_model_feature_index(
    model: *const NlModel,
    k: usize,
    out: *mut usize,
) -> NlStatus {
    guard(|| {
        let model = ref_arg(model, "model")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let idx = model.inner.features.as_slice().get(k).copied().ok_or(Failure(
            NL_ERR_INVALID_ARGUMENT,
            format!("feature {k} out of range for {} features", model.inner.num_features()),
        ))?;
        *out = idx;
        Ok(())
    })
}

/// Training-set sample ids of the `same` and `opposite` prototypes.
///
/// # Safety
/// `model` must be a live handle; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn nl_model_prototypes(
    model: *const NlModel,
    out_same_id: *mut usize,
    out_opposite_id: *mut usize,
) -> NlStatus {
    guard(|| {
        let model = ref_arg(model, "model")?;
        put(out_same_id, model.inner.same.sample_id);
        put(out_opposite_id, model.inner.opposite.sample_id);
        Ok(())
    })
}

/// Misclassified training samples, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn nl_model_train_error(model: *const NlModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.meta.train_error)
}

/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn nl_model_free(model: *mut NlModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}
