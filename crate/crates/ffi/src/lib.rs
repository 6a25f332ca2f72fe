//! C interface to the screening engine.
//!
//! Every fallible call returns a [`VsStatus`]; on failure a description is
//! available from [`vs_last_error`] on the same thread. Objects are opaque
//! handles released with their matching `_free` function, and strings handed
//! out by the library are released with [`vs_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use vscreen::campaign::{run_campaign, CampaignError};
use vscreen::config::{ConfigError, RunConfig};
use vscreen::fingerprint::{dice_similarity, Fingerprint, FingerprintSpec};
use vscreen::library::{Direction, IngestOptions, Library, LibraryError};
use vscreen::smiles::parse_smiles;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VsStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    ConfigError = 4,
    DataError = 5,
    RuntimeError = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VsDirection {
    /// Lower scores are better.
    Minimize = 0,
    Maximize = 1,
}

/// A parsed and loaded scored library.
pub struct VsLibrary(Library);

/// A fixed-width fingerprint bit vector.
pub struct VsFingerprint(Fingerprint);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(VsStatus, String);

impl From<LibraryError> for Failure {
    fn from(e: LibraryError) -> Self {
        Failure(VsStatus::DataError, format!("{}: {e}", e.name()))
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure(VsStatus::ConfigError, e.to_string())
    }
}

impl From<CampaignError> for Failure {
    fn from(e: CampaignError) -> Self {
        let status = match e {
            CampaignError::Config(_) | CampaignError::Resume { .. } => VsStatus::ConfigError,
            CampaignError::Library(_) | CampaignError::Fingerprint(_) => VsStatus::DataError,
            _ => VsStatus::RuntimeError,
        };
        Failure(status, e.to_string())
    }
}

fn set_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> VsStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => VsStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_error(message);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            VsStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(VsStatus::NullArgument, format!("{name} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure(VsStatus::InvalidUtf8, format!("{name} is not valid UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| Failure(VsStatus::NullArgument, format!("{name} is null")))
}

fn out_arg<T>(p: *mut T, name: &str) -> Result<(), Failure> {
    if p.is_null() {
        Err(Failure(VsStatus::NullArgument, format!("{name} is null")))
    } else {
        Ok(())
    }
}

fn owned_string(s: String) -> *mut c_char {
    CString::new(s).expect("no interior nul").into_raw()
}

/// Message for the last failed call on this thread, or null. Valid until the
/// next call into the library from this thread.
#[no_mangle]
pub extern "C" fn vs_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn vs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Release a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn vs_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

unsafe fn fingerprint_with(smiles: *const c_char, spec: FingerprintSpec, out: *mut *mut VsFingerprint) -> VsStatus {
    guard(|| {
        out_arg(out, "out")?;
        let smiles = str_arg(smiles, "smiles")?;
        spec.validate().map_err(|e| Failure(VsStatus::ConfigError, e.to_string()))?;
        let g = parse_smiles(smiles).map_err(|e| Failure(VsStatus::ParseError, format!("{}: {e}", e.name())))?;
        *out = Box::into_raw(Box::new(VsFingerprint(spec.compute(&g))));
        Ok(())
    })
}

/// Morgan fingerprint of a SMILES string.
///
/// # Safety
/// `smiles` must be a nul-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn vs_morgan_fingerprint(
    smiles: *const c_char,
    radius: u32,
    width: usize,
    out: *mut *mut VsFingerprint,
) -> VsStatus {
    fingerprint_with(smiles, FingerprintSpec::Morgan { radius, width }, out)
}

/// Atom-pair fingerprint over topological distances `min_distance..=max_distance`.
///
/// # Safety
/// `smiles` must be a nul-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn vs_atom_pair_fingerprint(
    smiles: *const c_char,
    min_distance: u32,
    max_distance: u32,
    width: usize,
    out: *mut *mut VsFingerprint,
) -> VsStatus {
    fingerprint_with(smiles, FingerprintSpec::AtomPair { min_radius: min_distance, max_radius: max_distance, width }, out)
}

/// Number of set bits; 0 for null.
///
/// # Safety
/// `fp` must be null or a live fingerprint handle.
#[no_mangle]
pub unsafe extern "C" fn vs_fingerprint_popcount(fp: *const VsFingerprint) -> usize {
    fp.as_ref().map_or(0, |f| f.0.popcount())
}

/// Width in bits; 0 for null.
///
/// # Safety
/// `fp` must be null or a live fingerprint handle.
#[no_mangle]
pub unsafe extern "C" fn vs_fingerprint_width(fp: *const VsFingerprint) -> usize {
    fp.as_ref().map_or(0, |f| f.0.width())
}

/// Lowercase hex encoding, bit 0 in the low bit of the first byte.
///
/// # Safety
/// `fp` must be a live fingerprint handle and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn vs_fingerprint_hex(fp: *const VsFingerprint, out: *mut *mut c_char) -> VsStatus {
    guard(|| {
        out_arg(out, "out")?;
        *out = owned_string(ref_arg(fp, "fp")?.0.to_hex());
        Ok(())
    })
}

/// Dice similarity `2|A∩B| / (|A|+|B|)` of two fingerprints of the same kind and width.
///
/// # Safety
/// `a` and `b` must be live fingerprint handles and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn vs_dice(a: *const VsFingerprint, b: *const VsFingerprint, out: *mut f64) -> VsStatus {
    guard(|| {
        out_arg(out, "out")?;
        let (a, b) = (ref_arg(a, "a")?, ref_arg(b, "b")?);
        *out = dice_similarity(&a.0, &b.0).map_err(|e| Failure(VsStatus::DataError, e.to_string()))?;
        Ok(())
    })
}

/// # Safety
/// `fp` must be null or a live fingerprint handle.
#[no_mangle]
pub unsafe extern "C" fn vs_fingerprint_free(fp: *mut VsFingerprint) {
    if !fp.is_null() {
        drop(Box::from_raw(fp));
    }
}

/// Load a delimited scored library. Null column names mean `smiles` / `score`.
///
/// # Safety
/// String arguments must be null or nul-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn vs_library_load(
    path: *const c_char,
    smiles_column: *const c_char,
    score_column: *const c_char,
    direction: VsDirection,
    out: *mut *mut VsLibrary,
) -> VsStatus {
    guard(|| {
        out_arg(out, "out")?;
        let path = str_arg(path, "path")?;
        let mut options = IngestOptions {
            direction: match direction {
                VsDirection::Minimize => Direction::Minimize,
                VsDirection::Maximize => Direction::Maximize,
            },
            ..Default::default()
        };
        if !smiles_column.is_null() {
            options.smiles_column = str_arg(smiles_column, "smiles_column")?.into();
        }
        if !score_column.is_null() {
            options.score_column = str_arg(score_column, "score_column")?.into();
        }
        *out = Box::into_raw(Box::new(VsLibrary(Library::load(Path::new(path), &options)?)));
        Ok(())
    })
}

/// Number of records; 0 for null.
///
/// # Safety
/// `lib` must be null or a live library handle.
#[no_mangle]
pub unsafe extern "C" fn vs_library_len(lib: *const VsLibrary) -> usize {
    lib.as_ref().map_or(0, |l| l.0.len())
}

/// Write the indices of the `k` best records, best first, into `out[0..k]`.
///
/// # Safety
/// `lib` must be a live handle and `out` must have room for `k` values.
#[no_mangle]
pub unsafe extern "C" fn vs_library_topk(lib: *const VsLibrary, k: usize, out: *mut usize) -> VsStatus {
    guard(|| {
        out_arg(out, "out")?;
        let ranked = ref_arg(lib, "lib")?.0.topk_ranked(k)?;
        std::slice::from_raw_parts_mut(out, k).copy_from_slice(&ranked);
        Ok(())
    })
}

/// # Safety
/// `lib` must be null or a live library handle.
#[no_mangle]
pub unsafe extern "C" fn vs_library_free(lib: *mut VsLibrary) {
    if !lib.is_null() {
        drop(Box::from_raw(lib));
    }
}

/// Run one campaign over `lib`. `config_toml` uses the run-file layout
/// (`[features]`, `[surrogate]`, `[acquisition]`, `[campaign]`); the
/// `[library]` and `[output]` tables are ignored and only the first seed is
/// run. The trace JSON is written to `out_trace_json`.
///
/// # Safety
/// `lib` must be a live handle, `config_toml` null or nul-terminated, and
/// `out_trace_json` writable.
#[no_mangle]
pub unsafe extern "C" fn vs_run_campaign(
    lib: *const VsLibrary,
    config_toml: *const c_char,
    out_trace_json: *mut *mut c_char,
) -> VsStatus {
    guard(|| {
        out_arg(out_trace_json, "out_trace_json")?;
        let lib = ref_arg(lib, "lib")?;
        let text = if config_toml.is_null() { "" } else { str_arg(config_toml, "config_toml")? };
        let cfg = RunConfig::from_toml(text, Path::new("<config>"))?;
        let seed = *cfg
            .campaign
            .seeds
            .first()
            .ok_or_else(|| Failure(VsStatus::ConfigError, "campaign.seeds is empty".into()))?;
        let outcome = run_campaign(&cfg.campaign_config(seed), &lib.0)?;
        *out_trace_json = owned_string(outcome.trace.to_json());
        Ok(())
    })
}
