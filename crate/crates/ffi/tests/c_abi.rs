use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use pour_rnn_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(pour_last_error()) }
        .to_string_lossy()
        .into_owned()
}

#[test]
fn geometry_and_weight() {
    let mut v = 0.0;
    let status = unsafe { pour_retained_volume(40.0, 100.0, 0.0, &mut v) };
    assert_eq!(status, PourStatus::Ok);
    assert!((v - std::f64::consts::PI * 1600.0 * 100.0).abs() < 1e-6 * v);

    let mut w = 0.0;
    assert_eq!(
        unsafe { pour_weight_from_volume(0.0, 1.0, 0.3, &mut w) },
        PourStatus::Ok
    );
    assert_eq!(w, 0.3);

    assert_eq!(
        unsafe { pour_retained_volume(-1.0, 100.0, 0.0, &mut v) },
        PourStatus::InvalidArgument
    );
    assert!(!last_error().is_empty());
    assert_eq!(
        unsafe { pour_retained_volume(40.0, 100.0, 0.0, ptr::null_mut()) },
        PourStatus::NullPointer
    );
}

#[test]
fn split_sizes() {
    let (mut a, mut b, mut c) = (0, 0, 0);
    assert_eq!(
        unsafe { pour_split_sizes(1307, 7, 0.8, 0.7, &mut a, &mut b, &mut c) },
        PourStatus::Ok
    );
    assert_eq!((a, b, c), (1045, 183, 79));
    assert_eq!(
        unsafe { pour_split_sizes(2, 7, 0.8, 0.7, &mut a, &mut b, &mut c) },
        PourStatus::InvalidArgument
    );
}

#[test]
fn gradcheck_passes() {
    let (mut err, mut passed) = (1.0, false);
    assert_eq!(
        unsafe { pour_gradcheck(0, 1e-5, 1e-5, &mut err, &mut passed) },
        PourStatus::Ok
    );
    assert!(passed && err < 1e-5);
}

#[test]
fn dataset_and_model_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    unsafe {
        let mut ds = ptr::null_mut();
        let st = pour_dataset_generate(6, 3, PourRegime::InDistribution, 20, 30, 0.01, &mut ds);
        assert_eq!(st, PourStatus::Ok, "{}", last_error());
        let mut n = 0;
        assert_eq!(pour_dataset_len(ds, &mut n), PourStatus::Ok);
        assert_eq!(n, 6);
        let mut len = 0;
        assert_eq!(pour_dataset_record_len(ds, 2, &mut len), PourStatus::Ok);
        assert!((20..=30).contains(&len));
        assert_eq!(pour_dataset_record_len(ds, 6, &mut len), PourStatus::InvalidArgument);

        let data_path = CString::new(dir.path().join("d.jsonl").to_str().unwrap()).unwrap();
        assert_eq!(pour_dataset_save(ds, data_path.as_ptr()), PourStatus::Ok);
        let mut reloaded = ptr::null_mut();
        assert_eq!(pour_dataset_load(data_path.as_ptr(), &mut reloaded), PourStatus::Ok);

        let mut model = ptr::null_mut();
        assert_eq!(pour_model_default(1, &mut model), PourStatus::Ok);
        let mut total = 0;
        assert_eq!(pour_model_num_params(model, &mut total), PourStatus::Ok);
        assert_eq!(total, 9186);
        let mut counts = [0usize; 8];
        let mut layers = 0;
        assert_eq!(
            pour_model_layer_param_counts(model, counts.as_mut_ptr(), 8, &mut layers),
            PourStatus::Ok
        );
        assert_eq!(counts, [1664, 2112, 2112, 2112, 17, 1152, 0, 17]);
        assert_eq!(
            pour_model_layer_param_counts(model, counts.as_mut_ptr(), 3, &mut layers),
            PourStatus::InvalidArgument
        );

        let ckpt = CString::new(dir.path().join("m.txt").to_str().unwrap()).unwrap();
        assert_eq!(pour_model_save(model, ckpt.as_ptr()), PourStatus::Ok);
        let mut loaded = ptr::null_mut();
        assert_eq!(pour_model_load(ckpt.as_ptr(), &mut loaded), PourStatus::Ok);

        let mut a = vec![0.0; 30];
        let mut b = vec![0.0; 30];
        let (mut la, mut lb) = (0, 0);
        assert_eq!(
            pour_model_predict(model, ds, 2, a.as_mut_ptr(), 30, &mut la),
            PourStatus::Ok
        );
        assert_eq!(
            pour_model_predict(loaded, reloaded, 2, b.as_mut_ptr(), 30, &mut lb),
            PourStatus::Ok
        );
        assert_eq!(la, len);
        assert_eq!(a, b);
        assert_eq!(
            pour_model_predict(model, ds, 2, a.as_mut_ptr(), 1, &mut la),
            PourStatus::InvalidArgument
        );

        let mut trained = ptr::null_mut();
        let mut loss = 0.0;
        let st = pour_model_train(ds, 4, 2, 1e-3, PourLoss::Euclidean, &mut trained, &mut loss);
        assert_eq!(st, PourStatus::Ok, "{}", last_error());
        assert!(loss.is_finite());

        for m in [model, loaded, trained] {
            pour_model_free(m);
        }
        pour_dataset_free(ds);
        pour_dataset_free(reloaded);
        pour_dataset_free(ptr::null_mut());
    }
}

#[test]
fn missing_file_is_data_error() {
    let path = CString::new("/nonexistent/pour.jsonl").unwrap();
    let mut ds = ptr::null_mut();
    assert_eq!(
        unsafe { pour_dataset_load(path.as_ptr(), &mut ds) },
        PourStatus::DataError
    );
    assert!(ds.is_null());
    assert!(last_error().contains("nonexistent"));
    assert_eq!(
        unsafe { pour_dataset_load(ptr::null(), &mut ds) },
        PourStatus::NullPointer
    );
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(pour_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/pour_rnn.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in [
        "pour_model_predict",
        "pour_dataset_free",
        "POUR_STATUS_NUMERICAL_ERROR",
        "typedef struct PourModel",
    ] {
        assert!(text.contains(name), "{name} missing from header");
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        format!(
            "#include \"{}\"\nint main(void) {{ double v; return pour_retained_volume(1.0, 2.0, 0.0, &v) == POUR_STATUS_OK ? 0 : 1; }}\n",
            header.display()
        ),
    )
    .unwrap();
    match Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only"])
        .arg(&src)
        .status()
    {
        Ok(status) => assert!(status.success(), "header does not compile"),
        Err(_) => eprintln!("no C compiler found; skipped syntax check"),
    }
}
