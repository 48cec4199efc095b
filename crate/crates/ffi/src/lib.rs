//! C interface to `linkrds`.
//!
//! Groups and bundles are opaque handles released with their `_free`
//! function. Certificates come back as JSON strings owned by the caller and
//! released with [`lrds_string_free`]. Every call returns an [`LrdsStatus`];
//! on failure the message is available from [`lrds_last_error`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use linkrds::cli::{construct_bundle, ConstructArgs, Family};
use linkrds::constructions::Bundle;
use linkrds::groups::{FiniteGroup, GroupJson, Subgroup};
use linkrds::linked::verify_linked;
use linkrds::rds::{find_forbidden, verify_pds, verify_rds};
use serde_json::Value;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LrdsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidJson = 3,
    InvalidArgument = 4,
    VerificationFailed = 5,
    Panic = 6,
}

/// Opaque finite group.
pub struct LrdsGroup(FiniteGroup);

/// Opaque construction bundle.
pub struct LrdsBundle(Bundle);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Fail(LrdsStatus, String);

impl Fail {
    fn arg(e: impl std::fmt::Display) -> Self {
        Fail(LrdsStatus::InvalidArgument, e.to_string())
    }
    fn verify(e: impl std::fmt::Display) -> Self {
        Fail(LrdsStatus::VerificationFailed, e.to_string())
    }
    fn json(e: impl std::fmt::Display) -> Self {
        Fail(LrdsStatus::InvalidJson, e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> LrdsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            LrdsStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            LrdsStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail(LrdsStatus::NullPointer, format!("{name} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail(LrdsStatus::InvalidUtf8, format!("{name} is not UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, name: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| Fail(LrdsStatus::NullPointer, format!("{name} is null")))
}

unsafe fn slice_arg<'a>(p: *const usize, len: usize, name: &str) -> Result<&'a [usize], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail(LrdsStatus::NullPointer, format!("{name} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out_arg<'a, T>(p: *mut *mut T, name: &str) -> Result<&'a mut *mut T, Fail> {
    let out = p.as_mut().ok_or_else(|| Fail(LrdsStatus::NullPointer, format!("{name} is null")))?;
    *out = ptr::null_mut();
    Ok(out)
}

fn to_c_string(v: &impl serde::Serialize) -> Result<*mut c_char, Fail> {
    let s = serde_json::to_string(v).map_err(|e| Fail(LrdsStatus::Panic, e.to_string()))?;
    Ok(CString::new(s).expect("JSON has no nul").into_raw())
}

/// Message for the last failed call on this thread, or null. The pointer is
/// valid until the next call on the same thread; do not free it.
#[no_mangle]
pub extern "C" fn lrds_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn lrds_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses a group from its JSON form.
///
/// # Safety
/// `json` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lrds_group_from_json(json: *const c_char, out: *mut *mut LrdsGroup) -> LrdsStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let text = str_arg(json, "json")?;
        let gj: GroupJson = serde_json::from_str(text).map_err(Fail::json)?;
        let g = FiniteGroup::from_json(&gj).map_err(Fail::arg)?;
        *out = Box::into_raw(Box::new(LrdsGroup(g)));
        Ok(())
    })
}

/// JSON form of a group.
///
/// # Safety
/// `group` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lrds_group_to_json(group: *const LrdsGroup, out: *mut *mut c_char) -> LrdsStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let g = ref_arg(group, "group")?;
        *out = to_c_string(&g.0.to_json())?;
        Ok(())
    })
}

/// Order of the group, or 0 for a null handle.
///
/// # Safety
/// `group` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lrds_group_order(group: *const LrdsGroup) -> usize {
    group.as_ref().map_or(0, |g| g.0.order())
}

/// # Safety
/// `group` must be null or a live handle, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn lrds_group_free(group: *mut LrdsGroup) {
    if !group.is_null() {
        drop(Box::from_raw(group));
    }
}

fn family(name: &str) -> Result<Family, Fail> {
    Ok(match name {
        "heisenberg" => Family::Heisenberg,
        "heisenberg2r" => Family::Heisenberg2r,
        "extraspecial" => Family::Extraspecial,
        "q8" => Family::Q8,
        "q8-2r" => Family::Q82r,
        "dps" => Family::Dps,
        "thm12" => Family::Thm12,
        other => return Err(Fail::arg(format!("unknown family {other:?}"))),
    })
}

fn field<T: serde::de::DeserializeOwned>(params: &Value, key: &str) -> Result<Option<T>, Fail> {
    match params.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => serde_json::from_value(v.clone()).map(Some).map_err(|e| Fail::json(format!("{key}: {e}"))),
    }
}

/// Builds and verifies a construction. `params` is a JSON object with any of
/// the keys q, r, p, n, t, s, epsilon, labeling, f; null means `{}`.
///
/// # Safety
/// `family_name` must be a nul-terminated string, `params` null or one, and
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn lrds_construct(
    family_name: *const c_char,
    params: *const c_char,
    out: *mut *mut LrdsBundle,
) -> LrdsStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let fam = family(str_arg(family_name, "family")?)?;
        let params: Value = if params.is_null() {
            Value::Object(Default::default())
        } else {
            serde_json::from_str(str_arg(params, "params")?).map_err(Fail::json)?
        };
        if !params.is_object() {
            return Err(Fail::json("params must be a JSON object"));
        }
        let args = ConstructArgs {
            family: fam,
            q: field(&params, "q")?,
            r: field(&params, "r")?,
            p: field(&params, "p")?,
            n: field(&params, "n")?,
            t: field(&params, "t")?,
            s: field(&params, "s")?,
            epsilon: field(&params, "epsilon")?,
            labeling: field(&params, "labeling")?,
            f: field(&params, "f")?,
            out: None,
        };
        let b = construct_bundle(&args).map_err(|e| Fail::verify(format!("{e:#}")))?;
        *out = Box::into_raw(Box::new(LrdsBundle(b)));
        Ok(())
    })
}

/// Serialized bundle, byte-identical to the CLI output minus whitespace.
///
/// # Safety
/// `bundle` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lrds_bundle_to_json(bundle: *const LrdsBundle, out: *mut *mut c_char) -> LrdsStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = to_c_string(&ref_arg(bundle, "bundle")?.0)?;
        Ok(())
    })
}

/// The bundle's group as a new handle.
///
/// # Safety
/// `bundle` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lrds_bundle_group(bundle: *const LrdsBundle, out: *mut *mut LrdsGroup) -> LrdsStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let g = ref_arg(bundle, "bundle")?.0.group().map_err(Fail::arg)?;
        *out = Box::into_raw(Box::new(LrdsGroup(g)));
        Ok(())
    })
}

/// Number of named sets in the bundle, or 0 for a null handle.
///
/// # Safety
/// `bundle` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn lrds_bundle_set_count(bundle: *const LrdsBundle) -> usize {
    bundle.as_ref().map_or(0, |b| b.0.sets.len())
}

/// # Safety
/// `bundle` must be null or a live handle, not used afterwards.
#[no_mangle]
pub unsafe extern "C" fn lrds_bundle_free(bundle: *mut LrdsBundle) {
    if !bundle.is_null() {
        drop(Box::from_raw(bundle));
    }
}

/// Checks that `set` is an RDS relative to `forbidden`. With
/// `forbidden_len == 0` the forbidden subgroup is inferred. On success
/// `certificate` receives the certificate JSON.
///
/// # Safety
/// Arrays must hold the stated number of elements; `certificate` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lrds_verify_rds(
    group: *const LrdsGroup,
    set: *const usize,
    set_len: usize,
    forbidden: *const usize,
    forbidden_len: usize,
    certificate: *mut *mut c_char,
) -> LrdsStatus {
    guard(|| {
        let out = out_arg(certificate, "certificate")?;
        let g = &ref_arg(group, "group")?.0;
        let x = slice_arg(set, set_len, "set")?;
        let n = if forbidden_len == 0 {
            find_forbidden(g, x).into_iter().next().ok_or_else(|| Fail::verify("no forbidden subgroup fits"))?
        } else {
            Subgroup::new(g, slice_arg(forbidden, forbidden_len, "forbidden")?).map_err(Fail::arg)?
        };
        *out = to_c_string(&verify_rds(g, x, &n).map_err(Fail::verify)?)?;
        Ok(())
    })
}

/// Checks that `set` is a partial difference set.
///
/// # Safety
/// `set` must hold `set_len` elements; `certificate` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lrds_verify_pds(
    group: *const LrdsGroup,
    set: *const usize,
    set_len: usize,
    certificate: *mut *mut c_char,
) -> LrdsStatus {
    guard(|| {
        let out = out_arg(certificate, "certificate")?;
        let g = &ref_arg(group, "group")?.0;
        let x = slice_arg(set, set_len, "set")?;
        *out = to_c_string(&verify_pds(g, x).map_err(Fail::verify)?)?;
        Ok(())
    })
}

/// Checks that the sets (a JSON array of index arrays) form a linked system
/// relative to `forbidden`.
///
/// # Safety
/// `sets_json` must be a nul-terminated string, `forbidden` must hold
/// `forbidden_len` elements and `certificate` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lrds_verify_linked(
    group: *const LrdsGroup,
    sets_json: *const c_char,
    forbidden: *const usize,
    forbidden_len: usize,
    certificate: *mut *mut c_char,
) -> LrdsStatus {
    guard(|| {
        let out = out_arg(certificate, "certificate")?;
        let g = &ref_arg(group, "group")?.0;
        let sets: Vec<Vec<usize>> = serde_json::from_str(str_arg(sets_json, "sets_json")?).map_err(Fail::json)?;
        let n = Subgroup::new(g, slice_arg(forbidden, forbidden_len, "forbidden")?).map_err(Fail::arg)?;
        *out = to_c_string(&verify_linked(g, &n, &sets).map_err(Fail::verify)?)?;
        Ok(())
    })
}
