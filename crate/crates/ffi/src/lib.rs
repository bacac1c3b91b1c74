//! C ABI for the linear Boltzmann laboratory.
//!
//! Conventions: every function that can fail returns a [`QlbeStatus`] and
//! writes its result through an out pointer. Handles created by a `_new`
//! (or `_constant`, `_gaussian`, `_tabulated`) constructor are owned by the
//! caller and must be released with the matching `_free`; passing them
//! after free is undefined behavior, passing NULL to `_free` is a no-op.
//! On failure a human-readable message is stored per thread and can be
//! fetched with `qlbe_last_error_message`; the pointer stays valid until
//! the next failing call on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CString};

use qlbe::collision::CollisionKernel;
use qlbe::physics::{
    detailed_balance_residual, energy_transfer, friction_coefficient,
    position_diffusion_coefficient, quantum_correction_ratio, smoluchowski_diffusion,
    structure_factor_energy, CrossSectionModel, PhysicalParams, PhysicsError,
    StructureFactorForm, Vec3,
};
use qlbe::quantum::{gaussian_propagate, GaussianState, QuantumError};

/// Result of every fallible call in this ABI.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QlbeStatus {
    /// The call succeeded and all out parameters are set.
    Ok = 0,
    /// A required pointer argument was NULL.
    NullPointer = 1,
    /// An argument failed validation; see `qlbe_last_error_message`.
    InvalidArgument = 2,
    /// Inputs were structurally valid but outside a formula's domain.
    DomainError = 3,
    /// A solver or quadrature failed to converge or lost stability.
    NumericalError = 4,
    /// A caller-provided buffer cannot hold the result; the required
    /// size has been written to the corresponding count parameter.
    BufferTooSmall = 5,
}

/// Gas autocorrelation entering rates: the exact ideal-gas form or its
/// quadratic (Brownian) approximation.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QlbeForm {
    MaxwellBoltzmann = 0,
    Brownian = 1,
}

impl From<QlbeForm> for StructureFactorForm {
    fn from(f: QlbeForm) -> Self {
        match f {
            QlbeForm::MaxwellBoltzmann => StructureFactorForm::MaxwellBoltzmann,
            QlbeForm::Brownian => StructureFactorForm::Brownian,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn fail(status: QlbeStatus, message: &str) -> QlbeStatus {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
    status
}

fn fail_physics(e: &PhysicsError) -> QlbeStatus {
    let status = match e {
        PhysicsError::InvalidParameter(_) => QlbeStatus::InvalidArgument,
        PhysicsError::Domain(_) => QlbeStatus::DomainError,
        PhysicsError::QuadratureConvergence { .. } => QlbeStatus::NumericalError,
    };
    fail(status, &e.to_string())
}

fn fail_quantum(e: &QuantumError) -> QlbeStatus {
    match e {
        QuantumError::Physics(p) => fail_physics(p),
        _ => fail(QlbeStatus::NumericalError, &e.to_string()),
    }
}

/// Message of the most recent failure on this thread, NUL terminated.
/// Empty string when no call has failed yet. The pointer is invalidated
/// by the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn qlbe_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Version of the underlying library, NUL terminated, static lifetime.
#[no_mangle]
pub extern "C" fn qlbe_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Validated physical inputs: masses, inverse temperature, gas density,
/// hbar. hbar = 0 selects the classical theory.
pub struct QlbeParams {
    inner: PhysicalParams,
}

/// Scattering weight Sigma(q) as a function of transfer modulus.
pub struct QlbeCrossSection {
    inner: CrossSectionModel,
}

macro_rules! deref {
    ($ptr:expr) => {
        match unsafe { $ptr.as_ref() } {
            Some(r) => r,
            None => return fail(QlbeStatus::NullPointer, "NULL handle argument"),
        }
    };
}

macro_rules! out_slot {
    ($ptr:expr) => {
        match unsafe { $ptr.as_mut() } {
            Some(r) => r,
            None => return fail(QlbeStatus::NullPointer, "NULL out pointer"),
        }
    };
}

/// Creates a validated parameter set. On success `*out` owns the handle.
///
/// # Safety
/// `out` must point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn qlbe_params_new(
    test_mass: f64,
    gas_mass: f64,
    inv_temperature: f64,
    gas_density: f64,
    hbar: f64,
    out: *mut *mut QlbeParams,
) -> QlbeStatus {
    let slot = out_slot!(out);
    match PhysicalParams::new(test_mass, gas_mass, inv_temperature, gas_density, hbar) {
        Ok(inner) => {
            *slot = Box::into_raw(Box::new(QlbeParams { inner }));
            QlbeStatus::Ok
        }
        Err(e) => fail_physics(&e),
    }
}

/// Releases a parameter handle. NULL is accepted and ignored.
///
/// # Safety
/// `params` must be NULL or a pointer returned by `qlbe_params_new` that
/// has not been freed yet.
#[no_mangle]
pub unsafe extern "C" fn qlbe_params_free(params: *mut QlbeParams) {
    if !params.is_null() {
        drop(unsafe { Box::from_raw(params) });
    }
}

/// Constant scattering weight Sigma(q) = sigma0.
///
/// # Safety
/// `out` must point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn qlbe_cross_section_constant(
    sigma0: f64,
    out: *mut *mut QlbeCrossSection,
) -> QlbeStatus {
    let slot = out_slot!(out);
    match CrossSectionModel::constant(sigma0) {
        Ok(inner) => {
            *slot = Box::into_raw(Box::new(QlbeCrossSection { inner }));
            QlbeStatus::Ok
        }
        Err(e) => fail_physics(&e),
    }
}

/// Gaussian scattering weight Sigma(q) = sigma0 exp(-q^2 / (2 q_width^2)).
///
/// # Safety
/// `out` must point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn qlbe_cross_section_gaussian(
    sigma0: f64,
    q_width: f64,
    out: *mut *mut QlbeCrossSection,
) -> QlbeStatus {
    let slot = out_slot!(out);
    match CrossSectionModel::gaussian(sigma0, q_width) {
        Ok(inner) => {
            *slot = Box::into_raw(Box::new(QlbeCrossSection { inner }));
            QlbeStatus::Ok
        }
        Err(e) => fail_physics(&e),
    }
}

/// Piecewise-linear scattering weight through `len` (q, Sigma) samples,
/// constant beyond the extreme abscissae. Abscissae must increase strictly.
///
/// # Safety
/// `q_values` and `sigma_values` must point to `len` readable doubles;
/// `out` must point to writable storage for one pointer.
#[no_mangle]
pub unsafe extern "C" fn qlbe_cross_section_tabulated(
    q_values: *const f64,
    sigma_values: *const f64,
    len: usize,
    out: *mut *mut QlbeCrossSection,
) -> QlbeStatus {
    let slot = out_slot!(out);
    if q_values.is_null() || sigma_values.is_null() {
        return fail(QlbeStatus::NullPointer, "NULL table pointer");
    }
    let qs = unsafe { std::slice::from_raw_parts(q_values, len) };
    let sigmas = unsafe { std::slice::from_raw_parts(sigma_values, len) };
    let points: Vec<(f64, f64)> = qs.iter().copied().zip(sigmas.iter().copied()).collect();
    match CrossSectionModel::tabulated(points) {
        Ok(inner) => {
            *slot = Box::into_raw(Box::new(QlbeCrossSection { inner }));
            QlbeStatus::Ok
        }
        Err(e) => fail_physics(&e),
    }
}

/// Releases a cross-section handle. NULL is accepted and ignored.
///
/// # Safety
/// `xs` must be NULL or an unfreed pointer from a cross-section constructor.
#[no_mangle]
pub unsafe extern "C" fn qlbe_cross_section_free(xs: *mut QlbeCrossSection) {
    if !xs.is_null() {
        drop(unsafe { Box::from_raw(xs) });
    }
}

/// Kinetic energy the test particle gains in one collision with momentum
/// transfer (qx, qy, qz) at incoming momentum (px, py, pz).
///
/// # Safety
/// All pointers must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qlbe_energy_transfer(
    params: *const QlbeParams,
    qx: f64,
    qy: f64,
    qz: f64,
    px: f64,
    py: f64,
    pz: f64,
    out: *mut f64,
) -> QlbeStatus {
    let params = deref!(params);
    let slot = out_slot!(out);
    *slot = energy_transfer(Vec3::new(qx, qy, qz), Vec3::new(px, py, pz), &params.inner);
    QlbeStatus::Ok
}

/// Dynamic structure factor S(q, E) at transfer modulus `q_mod` and energy
/// transfer `energy`, in the chosen form.
///
/// # Safety
/// All pointers must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qlbe_structure_factor(
    params: *const QlbeParams,
    form: QlbeForm,
    q_mod: f64,
    energy: f64,
    out: *mut f64,
) -> QlbeStatus {
    let params = deref!(params);
    let slot = out_slot!(out);
    match structure_factor_energy(form.into(), q_mod, energy, &params.inner) {
        Ok(v) => {
            *slot = v;
            QlbeStatus::Ok
        }
        Err(e) => fail_physics(&e),
    }
}

/// Detailed-balance defect S(q,-E) e^(-beta E) / S(q,E) - 1, evaluated in
/// log space; zero in exact arithmetic for both forms.
///
/// # Safety
/// All pointers must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qlbe_detailed_balance_residual(
    params: *const QlbeParams,
    form: QlbeForm,
    q_mod: f64,
    energy: f64,
    out: *mut f64,
) -> QlbeStatus {
    let params = deref!(params);
    let slot = out_slot!(out);
    match detailed_balance_residual(q_mod, energy, &params.inner, form.into()) {
        Ok(v) => {
            *slot = v;
            QlbeStatus::Ok
        }
        Err(e) => fail_physics(&e),
    }
}

/// Friction rate eta of the Brownian limit, by adaptive quadrature over
/// the momentum-transfer distribution.
///
/// # Safety
/// All pointers must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qlbe_friction_coefficient(
    params: *const QlbeParams,
    xs: *const QlbeCrossSection,
    out: *mut f64,
) -> QlbeStatus {
    let params = deref!(params);
    let xs = deref!(xs);
    let slot = out_slot!(out);
    match friction_coefficient(&params.inner, &xs.inner) {
        Ok(v) => {
            *slot = v;
            QlbeStatus::Ok
        }
        Err(e) => fail_physics(&e),
    }
}

/// Quantum position-diffusion coefficient D_xx = eta beta hbar^2 / (16 M).
///
/// # Safety
/// All pointers must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qlbe_position_diffusion(
    params: *const QlbeParams,
    eta: f64,
    out: *mut f64,
) -> QlbeStatus {
    let params = deref!(params);
    let slot = out_slot!(out);
    match position_diffusion_coefficient(eta, &params.inner) {
        Ok(v) => {
            *slot = v;
            QlbeStatus::Ok
        }
        Err(e) => fail_physics(&e),
    }
}

/// High-friction diffusion coefficient 1/(eta M beta) + D_xx.
///
/// # Safety
/// All pointers must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qlbe_smoluchowski_diffusion(
    params: *const QlbeParams,
    eta: f64,
    out: *mut f64,
) -> QlbeStatus {
    let params = deref!(params);
    let slot = out_slot!(out);
    match smoluchowski_diffusion(eta, &params.inner) {
        Ok(v) => {
            *slot = v;
            QlbeStatus::Ok
        }
        Err(e) => fail_physics(&e),
    }
}

/// Ratio of the corrected to the classical high-friction diffusion
/// coefficient, 1 + (eta beta hbar)^2 / 16.
///
/// # Safety
/// All pointers must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qlbe_quantum_correction_ratio(
    params: *const QlbeParams,
    eta: f64,
    out: *mut f64,
) -> QlbeStatus {
    let params = deref!(params);
    let slot = out_slot!(out);
    match quantum_correction_ratio(eta, &params.inner) {
        Ok(v) => {
            *slot = v;
            QlbeStatus::Ok
        }
        Err(e) => fail_physics(&e),
    }
}

/// Exponential damping rate of a spatial coherence at wavenumber `kappa`
/// caused by position diffusion: D_xx kappa^2.
///
/// # Safety
/// All pointers must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qlbe_coherence_decay_rate(
    params: *const QlbeParams,
    eta: f64,
    kappa: f64,
    out: *mut f64,
) -> QlbeStatus {
    let params = deref!(params);
    let slot = out_slot!(out);
    if !kappa.is_finite() {
        return fail(QlbeStatus::InvalidArgument, "kappa must be finite");
    }
    match position_diffusion_coefficient(eta, &params.inner) {
        Ok(d_xx) => {
            *slot = d_xx * kappa * kappa;
            QlbeStatus::Ok
        }
        Err(e) => fail_physics(&e),
    }
}

/// Total collision rate R(p) at incoming momentum (px, py, pz), by nested
/// quadrature over the scattering kernel.
///
/// # Safety
/// All pointers must be valid; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn qlbe_total_rate(
    params: *const QlbeParams,
    xs: *const QlbeCrossSection,
    form: QlbeForm,
    px: f64,
    py: f64,
    pz: f64,
    out: *mut f64,
) -> QlbeStatus {
    let params = deref!(params);
    let xs = deref!(xs);
    let slot = out_slot!(out);
    let kernel = match CollisionKernel::new(params.inner, xs.inner.clone(), form.into()) {
        Ok(k) => k,
        Err(e) => return fail_physics(&e),
    };
    match kernel.total_rate(Vec3::new(px, py, pz)) {
        Ok(v) => {
            *slot = v;
            QlbeStatus::Ok
        }
        Err(e) => fail_physics(&e),
    }
}

/// Number of doubles per record written by `qlbe_gaussian_propagate`:
/// t, mean_x, mean_p, sigma_xx, sigma_xp, sigma_pp.
pub const QLBE_GAUSSIAN_RECORD_LEN: usize = 6;

/// Propagates a Gaussian state under the damped quantum dynamics to
/// `t_end` with an adaptive integrator.
///
/// `out_final` receives mean_x, mean_p, sigma_xx, sigma_xp, sigma_pp of
/// the final state. When `out_records` is non-NULL it receives up to
/// `max_records` records of QLBE_GAUSSIAN_RECORD_LEN doubles each, laid
/// out record-major; `*out_record_count` is always set to the number of
/// records the run produced. If the buffer is too small, the status is
/// `BufferTooSmall` and nothing is written to `out_records`; call once
/// with `out_records` = NULL to size the buffer.
///
/// `include_position_diffusion` != 0 enables the quantum D_xx source term.
///
/// # Safety
/// `out_final` must hold 5 writable doubles, `out_record_count` one
/// writable size_t, and `out_records` either NULL or `max_records *
/// QLBE_GAUSSIAN_RECORD_LEN` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn qlbe_gaussian_propagate(
    params: *const QlbeParams,
    eta: f64,
    mean_x: f64,
    mean_p: f64,
    sigma_xx: f64,
    sigma_xp: f64,
    sigma_pp: f64,
    t_end: f64,
    include_position_diffusion: c_int,
    out_final: *mut f64,
    out_records: *mut f64,
    max_records: usize,
    out_record_count: *mut usize,
) -> QlbeStatus {
    let params = deref!(params);
    if out_final.is_null() {
        return fail(QlbeStatus::NullPointer, "NULL out_final pointer");
    }
    let count_slot = out_slot!(out_record_count);

    let state0 = GaussianState { mean_x, mean_p, sigma_xx, sigma_xp, sigma_pp };
    let run = match gaussian_propagate(
        &state0,
        eta,
        t_end,
        &params.inner,
        include_position_diffusion != 0,
    ) {
        Ok(run) => run,
        Err(e) => return fail_quantum(&e),
    };

    *count_slot = run.records.len();
    if !out_records.is_null() {
        if max_records < run.records.len() {
            return fail(
                QlbeStatus::BufferTooSmall,
                "record buffer shorter than the run",
            );
        }
        let dst = unsafe {
            std::slice::from_raw_parts_mut(
                out_records,
                run.records.len() * QLBE_GAUSSIAN_RECORD_LEN,
            )
        };
        for (chunk, r) in dst.chunks_exact_mut(QLBE_GAUSSIAN_RECORD_LEN).zip(&run.records) {
            chunk.copy_from_slice(&[
                r.t,
                r.state.mean_x,
                r.state.mean_p,
                r.state.sigma_xx,
                r.state.sigma_xp,
                r.state.sigma_pp,
            ]);
        }
    }

    let f = &run.final_state;
    let dst = unsafe { std::slice::from_raw_parts_mut(out_final, 5) };
    dst.copy_from_slice(&[f.mean_x, f.mean_p, f.sigma_xx, f.sigma_xp, f.sigma_pp]);
    QlbeStatus::Ok
}
