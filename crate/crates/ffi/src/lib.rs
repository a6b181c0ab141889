//! C interface to `augtree`.
//!
//! Objects are opaque handles released with the matching `*_free`. Every
//! fallible call returns an [`AugtreeStatus`] and writes its result through an
//! out-pointer; on failure `augtree_last_error` describes the problem for the
//! calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::sync::Arc;

use augtree::hypergraph::{build_augmented_tree, default_gamma, AugmentedTree};
use augtree::partition::build_tree;
use augtree::resistance::{
    critical_lambda_sharp, critical_lambda_star, hull_boundary, level_resistance, CriticalOptions, SetDescriptor,
};
use augtree::{Error, ModelSpec, Network};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AugtreeStatus {
    Ok = 0,
    InvalidArgument = 1,
    NullPointer = 2,
    Numerical = 3,
    Parse = 4,
    Internal = 5,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AugtreeCriticalMode {
    Star = 0,
    Sharp = 1,
}

/// Bracket returned by [`augtree_critical_search`].
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct AugtreeBracket {
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    pub beta_lo: f64,
    pub beta_hi: f64,
}

pub struct AugtreeModel {
    spec: ModelSpec,
}

pub struct AugtreeTree {
    tree: Arc<AugmentedTree>,
}

pub struct AugtreeNetwork {
    net: Network,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(AugtreeStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Json(_) => AugtreeStatus::Parse,
            e if e.is_numerical() => AugtreeStatus::Numerical,
            _ => AugtreeStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(AugtreeStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> AugtreeStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AugtreeStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            AugtreeStatus::Internal
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(AugtreeStatus::Parse, format!("{what} is not UTF-8")))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("out"));
    }
    out.write(value);
    Ok(())
}

/// Message of the last failure on this thread, or null. Valid until the next
/// failing call on the same thread.
#[no_mangle]
pub extern "C" fn augtree_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn augtree_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(s) => s,
        Err(_) => panic!("version contains a nul byte"),
    };
    VERSION.as_ptr()
}

/// # Safety
/// `json` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn augtree_model_from_json(json: *const c_char, out: *mut *mut AugtreeModel) -> AugtreeStatus {
    guard(|| {
        let spec = ModelSpec::from_json_str(text(json, "json")?)?;
        put(out, Box::into_raw(Box::new(AugtreeModel { spec })))
    })
}

/// Built-in model such as `interval`, `rotated-interval:p=0.5` or `gasket`.
///
/// # Safety
/// `name` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn augtree_model_builtin(name: *const c_char, out: *mut *mut AugtreeModel) -> AugtreeStatus {
    guard(|| {
        let name = text(name, "name")?;
        let spec = augtree::model::builtin(name.strip_prefix("builtin:").unwrap_or(name))?;
        put(out, Box::into_raw(Box::new(AugtreeModel { spec })))
    })
}

/// # Safety
/// `model` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn augtree_model_free(model: *mut AugtreeModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Augmented tree to depth `levels`. A non-positive `gamma` selects the
/// model's value, or `r0 / 2`.
///
/// # Safety
/// `model` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn augtree_tree_build(
    model: *const AugtreeModel,
    levels: usize,
    gamma: f64,
    out: *mut *mut AugtreeTree,
) -> AugtreeStatus {
    guard(|| {
        let spec = &deref(model, "model")?.spec;
        let tree = build_tree(spec, levels)?;
        let gamma = if gamma > 0.0 {
            gamma
        } else {
            spec.gamma().unwrap_or_else(|| default_gamma(tree.r0))
        };
        let tree = Arc::new(build_augmented_tree(tree, gamma)?);
        put(out, Box::into_raw(Box::new(AugtreeTree { tree })))
    })
}

/// # Safety
/// `tree` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn augtree_tree_free(tree: *mut AugtreeTree) {
    if !tree.is_null() {
        drop(Box::from_raw(tree));
    }
}

/// # Safety
/// `tree` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn augtree_tree_vertex_count(tree: *const AugtreeTree, out: *mut usize) -> AugtreeStatus {
    guard(|| put(out, deref(tree, "tree")?.tree.tree.vertex_count()))
}

/// # Safety
/// `tree` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn augtree_tree_level_size(
    tree: *const AugtreeTree,
    level: usize,
    out: *mut usize,
) -> AugtreeStatus {
    guard(|| {
        let t = &deref(tree, "tree")?.tree.tree;
        if level > t.depth() {
            return Err(Failure(
                AugtreeStatus::InvalidArgument,
                format!("level {level} exceeds depth {}", t.depth()),
            ));
        }
        put(out, t.level_size(level))
    })
}

/// `μ(Φ(v))` for vertex id `v`.
///
/// # Safety
/// `tree` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn augtree_tree_measure(tree: *const AugtreeTree, vertex: usize, out: *mut f64) -> AugtreeStatus {
    guard(|| {
        let t = &deref(tree, "tree")?.tree.tree;
        let m = t
            .measure
            .get(vertex)
            .ok_or_else(|| Failure(AugtreeStatus::InvalidArgument, format!("no vertex {vertex}")))?;
        put(out, *m)
    })
}

/// # Safety
/// `tree` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn augtree_network_build(
    tree: *const AugtreeTree,
    lambda: f64,
    out: *mut *mut AugtreeNetwork,
) -> AugtreeStatus {
    guard(|| {
        let tree = deref(tree, "tree")?.tree.clone();
        let net = Network::build(tree, lambda)?;
        put(out, Box::into_raw(Box::new(AugtreeNetwork { net })))
    })
}

/// # Safety
/// `net` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn augtree_network_free(net: *mut AugtreeNetwork) {
    if !net.is_null() {
        drop(Box::from_raw(net));
    }
}

/// Writes the law of the first hit of level `level` from the root into
/// `out[0..len]`; `len` must equal the level size.
///
/// # Safety
/// `net` must be valid and `out` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn augtree_hitting_distribution(
    net: *const AugtreeNetwork,
    level: usize,
    out: *mut f64,
    len: usize,
) -> AugtreeStatus {
    guard(|| {
        let net = &deref(net, "net")?.net;
        if out.is_null() {
            return Err(null("out"));
        }
        let nu = augtree::potential::hitting_distribution(net, level)?;
        if nu.len() != len {
            return Err(Failure(
                AugtreeStatus::InvalidArgument,
                format!("buffer holds {len} values, level {level} has {}", nu.len()),
            ));
        }
        std::slice::from_raw_parts_mut(out, len).copy_from_slice(&nu);
        Ok(())
    })
}

/// # Safety
/// `net` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn augtree_return_ratio(net: *const AugtreeNetwork, vertex: usize, out: *mut f64) -> AugtreeStatus {
    guard(|| {
        let net = &deref(net, "net")?.net;
        if vertex >= net.vertex_count() {
            return Err(Failure(AugtreeStatus::InvalidArgument, format!("no vertex {vertex}")));
        }
        put(out, net.return_ratio(vertex)?)
    })
}

/// Level-`n` effective resistance between two set descriptors
/// (`w:<label>`, `#id`, or `+`-joined points).
///
/// # Safety
/// `net` and `out` must be valid; `a` and `b` nul-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn augtree_level_resistance(
    net: *const AugtreeNetwork,
    n: usize,
    a: *const c_char,
    b: *const c_char,
    out: *mut f64,
) -> AugtreeStatus {
    guard(|| {
        let net = &deref(net, "net")?.net;
        let a = SetDescriptor::parse(text(a, "a")?)?;
        let b = SetDescriptor::parse(text(b, "b")?)?;
        let r = level_resistance(net, n, &a, &b)?;
        put(out, r * (-net.log_shift).exp())
    })
}

/// Bisection for the critical λ of an IFS model on a tree of depth `n_max`.
/// `mode` takes an [`AugtreeCriticalMode`] value.
///
/// # Safety
/// `model` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn augtree_critical_search(
    model: *const AugtreeModel,
    mode: u32,
    n_max: usize,
    iters: usize,
    gamma: f64,
    out: *mut AugtreeBracket,
) -> AugtreeStatus {
    guard(|| {
        let spec = &deref(model, "model")?.spec;
        if out.is_null() {
            return Err(null("out"));
        }
        if mode > 1 {
            return Err(Failure(AugtreeStatus::InvalidArgument, format!("unknown mode {mode}")));
        }
        let ifs = spec
            .as_ifs()
            .ok_or_else(|| Failure(AugtreeStatus::InvalidArgument, "critical search needs an IFS model".into()))?;
        let tree = build_tree(spec, n_max)?;
        let gamma = if gamma > 0.0 {
            gamma
        } else {
            spec.gamma().unwrap_or_else(|| default_gamma(tree.r0))
        };
        let tree = Arc::new(build_augmented_tree(tree, gamma)?);
        let opts = CriticalOptions {
            n_max,
            iters,
            ..CriticalOptions::default()
        };
        let r = match mode {
            m if m == AugtreeCriticalMode::Sharp as u32 => critical_lambda_sharp(tree, ifs, opts)?,
            m if m == AugtreeCriticalMode::Star as u32 => {
                let v0 = hull_boundary(&tree.tree)?;
                critical_lambda_star(tree, ifs, &v0, opts)?
            }
            m => return Err(Failure(AugtreeStatus::InvalidArgument, format!("unknown mode {m}"))),
        };
        put(
            out,
            AugtreeBracket {
                lambda_lo: r.lambda_bracket[0],
                lambda_hi: r.lambda_bracket[1],
                beta_lo: r.beta_bracket[0],
                beta_hi: r.beta_bracket[1],
            },
        )
    })
}
