//! C ABI over `pour_rnn`.
//!
//! Every fallible function returns a [`PourStatus`]; on failure the message
//! is available from [`pour_last_error`] on the same thread until the next
//! failing call. Datasets and models are opaque heap handles released with
//! their `_free` function. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use pour_rnn::data::{parse_dataset, serialize_dataset, split_dataset, PourRecord, SplitRatios};
use pour_rnn::nn::{build_model, Checkpoint, ModelSpec};
use pour_rnn::sim::{generate_dataset, retained_volume, weight_from_volume, CupGeometry, SimRanges, TrajectoryConfig};
use pour_rnn::train::{predict_records, prepare_splits, run_gradcheck, train, LossKind, TrainConfig};
use pour_rnn::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PourStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DataError = 3,
    NumericalError = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PourLoss {
    Mse = 0,
    Euclidean = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PourRegime {
    InDistribution = 0,
    OutOfDistribution = 1,
}

/// Opaque dataset handle.
pub struct PourDataset {
    records: Vec<PourRecord>,
}

/// Opaque model handle: parameters plus the input/target scaling.
pub struct PourModel {
    checkpoint: Checkpoint,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Failure(PourStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::InvalidArgument(_) => PourStatus::InvalidArgument,
            Error::NonFinite(_) | Error::Diverged { .. } => PourStatus::NumericalError,
            _ => PourStatus::DataError,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(PourStatus::NullPointer, format!("{what} is null"))
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> PourStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PourStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("panic: {msg}"));
            PourStatus::Panic
        }
    }
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn path_arg(path: *const c_char) -> Result<PathBuf, Failure> {
    if path.is_null() {
        return Err(null("path"));
    }
    let s = CStr::from_ptr(path)
        .to_str()
        .map_err(|_| Failure(PourStatus::InvalidArgument, "path is not valid UTF-8".into()))?;
    Ok(PathBuf::from(s))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

/// Message of the last failure on this thread; empty if none. The pointer
/// stays valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn pour_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pour_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Liquid volume (mm³) a cylinder of `radius` × `height` mm holds when
/// tilted `tilt_deg` degrees from upright.
///
/// # Safety
/// `out` must be valid for a write of one `double`.
#[no_mangle]
pub unsafe extern "C" fn pour_retained_volume(radius: f64, height: f64, tilt_deg: f64, out: *mut f64) -> PourStatus {
    guard(|| {
        let cup = CupGeometry::new(radius, height)?;
        write_out(out, retained_volume(&cup, tilt_deg)?, "out")
    })
}

/// Measured weight (lbf) of a cup holding `volume_mm3` of liquid with
/// relative density `rho_rel`, given the empty weight `f_empty` (lbf).
///
/// # Safety
/// `out` must be valid for a write of one `double`.
#[no_mangle]
pub unsafe extern "C" fn pour_weight_from_volume(
    volume_mm3: f64,
    rho_rel: f64,
    f_empty: f64,
    out: *mut f64,
) -> PourStatus {
    guard(|| write_out(out, weight_from_volume(volume_mm3, rho_rel, f_empty)?, "out"))
}

/// Train/validation/test sizes for `n` records.
///
/// # Safety
/// The three output pointers must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pour_split_sizes(
    n: usize,
    seed: u64,
    train_ratio: f64,
    val_ratio: f64,
    out_train: *mut usize,
    out_val: *mut usize,
    out_test: *mut usize,
) -> PourStatus {
    guard(|| {
        let m = split_dataset(
            n,
            seed,
            SplitRatios {
                train: train_ratio,
                val_of_rest: val_ratio,
            },
        )?;
        let (a, b, c) = m.sizes();
        write_out(out_train, a, "out_train")?;
        write_out(out_val, b, "out_val")?;
        write_out(out_test, c, "out_test")
    })
}

/// Finite-difference check of backpropagation on the built-in small
/// model. Writes the worst relative error over all four cases and whether
/// every case is below `tol`.
///
/// # Safety
/// Output pointers must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pour_gradcheck(
    seed: u64,
    h: f64,
    tol: f64,
    out_max_rel_error: *mut f64,
    out_passed: *mut bool,
) -> PourStatus {
    guard(|| {
        let report = run_gradcheck(seed, h, tol)?;
        let worst = report.worst().map_or(0.0, |c| c.max_rel_error);
        write_out(out_max_rel_error, worst, "out_max_rel_error")?;
        write_out(out_passed, report.passed(), "out_passed")
    })
}

/// Simulates `n` pouring trials of `min_len..=max_len` steps with weight
/// noise `noise` (lbf).
///
/// # Safety
/// `out` must be valid for a write of one pointer.
#[no_mangle]
pub unsafe extern "C" fn pour_dataset_generate(
    n: usize,
    seed: u64,
    regime: PourRegime,
    min_len: usize,
    max_len: usize,
    noise: f64,
    out: *mut *mut PourDataset,
) -> PourStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let ranges = match regime {
            PourRegime::InDistribution => SimRanges::in_distribution(),
            PourRegime::OutOfDistribution => SimRanges::out_of_distribution(),
        };
        let cfg = TrajectoryConfig {
            min_len,
            max_len,
            noise_sigma: noise,
            ..TrajectoryConfig::default()
        };
        let records = generate_dataset(n, &ranges, &cfg, seed)?;
        out.write(Box::into_raw(Box::new(PourDataset { records })));
        Ok(())
    })
}

/// Reads a JSON Lines dataset.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn pour_dataset_load(path: *const c_char, out: *mut *mut PourDataset) -> PourStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let records = parse_dataset(&path_arg(path)?)?;
        out.write(Box::into_raw(Box::new(PourDataset { records })));
        Ok(())
    })
}

/// # Safety
/// `dataset` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn pour_dataset_save(dataset: *const PourDataset, path: *const c_char) -> PourStatus {
    guard(|| {
        let ds = handle(dataset, "dataset")?;
        Ok(serialize_dataset(&ds.records, &path_arg(path)?)?)
    })
}

/// # Safety
/// `dataset` must be a live handle; `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn pour_dataset_len(dataset: *const PourDataset, out: *mut usize) -> PourStatus {
    guard(|| write_out(out, handle(dataset, "dataset")?.records.len(), "out"))
}

/// Number of timesteps of record `index`.
///
/// # Safety
/// `dataset` must be a live handle; `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn pour_dataset_record_len(
    dataset: *const PourDataset,
    index: usize,
    out: *mut usize,
) -> PourStatus {
    guard(|| {
        let ds = handle(dataset, "dataset")?;
        let r = ds.records.get(index).ok_or_else(|| {
            Failure(
                PourStatus::InvalidArgument,
                format!("record {index} out of range ({})", ds.records.len()),
            )
        })?;
        write_out(out, r.len(), "out")
    })
}

/// # Safety
/// `dataset` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pour_dataset_free(dataset: *mut PourDataset) {
    if !dataset.is_null() {
        drop(Box::from_raw(dataset));
    }
}

/// Untrained default model (9 features, five LSTM layers, dense relu
/// head) initialized from `seed`, with no input scaling.
///
/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn pour_model_default(seed: u64, out: *mut *mut PourModel) -> PourStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let params = build_model(&ModelSpec::default_model(), seed)?;
        let checkpoint = Checkpoint {
            params,
            normalizer: None,
            init_seed: seed,
            train_seed: seed,
        };
        out.write(Box::into_raw(Box::new(PourModel { checkpoint })));
        Ok(())
    })
}

/// Trains the default model on `dataset` with the default 80/14/6 split,
/// min-max scaling, Adam and batch size 32. Writes the new model and its
/// final training loss.
///
/// # Safety
/// `dataset` must be a live handle; output pointers valid for writes.
#[no_mangle]
pub unsafe extern "C" fn pour_model_train(
    dataset: *const PourDataset,
    seed: u64,
    epochs: usize,
    lr: f64,
    loss: PourLoss,
    out: *mut *mut PourModel,
    out_final_loss: *mut f64,
) -> PourStatus {
    guard(|| {
        let ds = handle(dataset, "dataset")?;
        if out.is_null() || out_final_loss.is_null() {
            return Err(null("output pointer"));
        }
        let loss = match loss {
            PourLoss::Mse => LossKind::Mse,
            PourLoss::Euclidean => LossKind::Euclidean,
        };
        let manifest = split_dataset(ds.records.len(), seed, SplitRatios::default())?;
        let splits = prepare_splits(&ds.records, &manifest, true, None)?;
        let config = TrainConfig {
            loss,
            lr,
            epochs,
            seed,
            ..TrainConfig::default()
        };
        let (params, history) = train(&ModelSpec::default_model(), &splits, &config)?;
        let checkpoint = Checkpoint {
            params,
            normalizer: splits.normalizer,
            init_seed: seed,
            train_seed: seed,
        };
        out_final_loss.write(history.final_train_loss().unwrap_or(f64::NAN));
        out.write(Box::into_raw(Box::new(PourModel { checkpoint })));
        Ok(())
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn pour_model_load(path: *const c_char, out: *mut *mut PourModel) -> PourStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let checkpoint = Checkpoint::load(&path_arg(path)?)?;
        out.write(Box::into_raw(Box::new(PourModel { checkpoint })));
        Ok(())
    })
}

/// # Safety
/// `model` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn pour_model_save(model: *const PourModel, path: *const c_char) -> PourStatus {
    guard(|| Ok(handle(model, "model")?.checkpoint.save(&path_arg(path)?)?))
}

/// # Safety
/// `model` must be a live handle; `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn pour_model_num_params(model: *const PourModel, out: *mut usize) -> PourStatus {
    guard(|| write_out(out, handle(model, "model")?.checkpoint.params.num_params(), "out"))
}

/// Per-layer parameter counts. Writes up to `capacity` values to `buf`
/// and the layer count to `out_len`; fails if `capacity` is too small.
///
/// # Safety
/// `buf` must be valid for `capacity` writes; `out_len` for one.
#[no_mangle]
pub unsafe extern "C" fn pour_model_layer_param_counts(
    model: *const PourModel,
    buf: *mut usize,
    capacity: usize,
    out_len: *mut usize,
) -> PourStatus {
    guard(|| {
        let counts = handle(model, "model")?.checkpoint.spec().layer_param_counts();
        write_out(out_len, counts.len(), "out_len")?;
        copy_out(&counts, buf, capacity)
    })
}

unsafe fn copy_out<T: Copy>(values: &[T], buf: *mut T, capacity: usize) -> Result<(), Failure> {
    if capacity < values.len() {
        return Err(Failure(
            PourStatus::InvalidArgument,
            format!("buffer holds {capacity} values, {} needed", values.len()),
        ));
    }
    if values.is_empty() {
        return Ok(());
    }
    if buf.is_null() {
        return Err(null("buf"));
    }
    ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len());
    Ok(())
}

/// Predicted weight series (lbf) for record `index`, one value per valid
/// timestep. Writes the series length to `out_len`; fails if `capacity`
/// is too small.
///
/// # Safety
/// Handles must be live; `buf` valid for `capacity` writes; `out_len` for one.
#[no_mangle]
pub unsafe extern "C" fn pour_model_predict(
    model: *const PourModel,
    dataset: *const PourDataset,
    index: usize,
    buf: *mut f64,
    capacity: usize,
    out_len: *mut usize,
) -> PourStatus {
    guard(|| {
        let ckpt = &handle(model, "model")?.checkpoint;
        let ds = handle(dataset, "dataset")?;
        let metrics = predict_records(ckpt, &ds.records, &[index], LossKind::Euclidean)?;
        let len = ds.records[index].len();
        let target = ckpt.normalizer.as_ref().map(|n| n.target);
        let series: Vec<f64> = metrics.predictions[..len]
            .iter()
            .map(|&p| target.map_or(p, |t| t.invert(p)))
            .collect();
        write_out(out_len, len, "out_len")?;
        copy_out(&series, buf, capacity)
    })
}

/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pour_model_free(model: *mut PourModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}
