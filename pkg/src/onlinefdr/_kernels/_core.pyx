# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled stream kernel; mirrors _pure.run_lord_family step for step."""

import numpy as np

cimport numpy as cnp
from libc.math cimport pow

from ..errors import BudgetViolation, RewardViolation

cnp.import_array()

cdef double TOL = 1e-12


def run_lord_family(
    object p,
    object is_null,
    object w,
    object u,
    object gamma_tab,
    double alpha,
    double w0,
    double delta,
    int family,
    int reward_mode,
    bint abstinence=False,
    double eps_w=0.0,
    double eps_r=0.0,
    bint reset_raw=False,
    int patience=0,
):
    """Compiled twin of onlinefdr._kernels._pure.run_lord_family."""
    cdef double[::1] p_v = np.ascontiguousarray(p, dtype=np.float64)
    cdef signed char[::1] null_v = np.ascontiguousarray(is_null, dtype=np.int8)
    cdef double[::1] w_v = np.ascontiguousarray(w, dtype=np.float64)
    cdef double[::1] u_v = np.ascontiguousarray(u, dtype=np.float64)
    cdef double[::1] gamma_v = np.ascontiguousarray(gamma_tab, dtype=np.float64)
    cdef Py_ssize_t T = p_v.shape[0]

    out_alpha_np = np.zeros(T)
    out_psi_np = np.zeros(T)
    out_b_np = np.zeros(T)
    out_rej_np = np.zeros(T, dtype=np.uint8)
    out_wealth_np = np.empty(T)
    out_rdec_np = np.empty(T)
    out_vdec_np = np.empty(T)
    out_abst_np = np.zeros(T, dtype=np.uint8)
    out_reset_np = np.zeros(T, dtype=np.uint8)
    out_cum_np = np.empty(T)

    cdef double[::1] out_alpha = out_alpha_np
    cdef double[::1] out_psi = out_psi_np
    cdef double[::1] out_b = out_b_np
    cdef unsigned char[::1] out_rej = out_rej_np
    cdef double[::1] out_wealth = out_wealth_np
    cdef double[::1] out_rdec = out_rdec_np
    cdef double[::1] out_vdec = out_vdec_np
    cdef unsigned char[::1] out_abst = out_abst_np
    cdef unsigned char[::1] out_reset = out_reset_np
    cdef double[::1] out_cum = out_cum_np

    rej_t_np = np.empty(T)
    rej_n_np = np.empty(T, dtype=np.int64)
    rej_r_np = np.empty(T)
    cdef double[::1] rej_t = rej_t_np
    cdef cnp.int64_t[::1] rej_n = rej_n_np
    cdef double[::1] rej_r = rej_r_np

    cdef double wealth = w0
    cdef double r_dec = 0.0
    cdef double v_dec = 0.0
    cdef double cum_alpha = 0.0
    cdef Py_ssize_t n_rej = 0
    cdef Py_ssize_t tests_done = 0
    cdef long consec = 0

    cdef Py_ssize_t t, j, n
    cdef double tw, pre, a, phi, avail, bt, cap, psi, thresh, counter
    cdef bint rejected

    for t in range(T):
        tw = <double> (t + 1)
        if abstinence and wealth < eps_w:
            pre = 1.0 if n_rej == 0 else 0.0
            wealth = delta * wealth + (1.0 - delta) * w0 * pre
            r_dec = delta * r_dec
            v_dec = delta * v_dec
            consec += 1
            out_b[t] = alpha - w0 if n_rej == 0 else alpha
            out_abst[t] = 1
            out_wealth[t] = wealth
            out_rdec[t] = r_dec
            out_vdec[t] = v_dec
            out_cum[t] = cum_alpha
            if wealth < eps_w:
                counter = <double> n_rej if reset_raw else r_dec
                if (n_rej > 0 and counter < eps_r) or (
                    patience > 0 and consec >= patience
                ):
                    out_reset[t] = 1
                    wealth = w0
                    r_dec = 0.0
                    v_dec = 0.0
                    cum_alpha = 0.0
                    n_rej = 0
                    tests_done = 0
                    consec = 0
            continue

        n = tests_done + 1
        if family == 0:
            if n_rej > 0:
                a = gamma_v[n] * w0 * pow(delta, tw - rej_t[0])
                for j in range(n_rej):
                    a += pow(delta, tw - rej_t[j]) * gamma_v[n - rej_n[j]] * rej_r[j]
            else:
                a = gamma_v[n] * w0
            phi = a
        elif family == 1:
            a = alpha * gamma_v[n]
            phi = a
        else:
            a = alpha
            phi = 0.0

        pre = 1.0 if n_rej == 0 else 0.0
        avail = delta * wealth + (1.0 - delta) * w0 * pre
        if phi > avail + TOL:
            raise BudgetViolation(
                f"phi_t={phi:.6g} exceeds available budget {avail:.6g} at t={t + 1}"
            )
        bt = alpha - w0 / u_v[t] if n_rej == 0 else alpha

        if family == 0:
            if reward_mode == 1 and u_v[t] == 1.0 and w_v[t] == 1.0:
                psi = bt if bt > 0.0 else 0.0
            else:
                cap = phi + u_v[t] * bt
                if a > 0.0:
                    cap = min(cap, phi / (u_v[t] * w_v[t] * a) + u_v[t] * bt - u_v[t])
                cap = max(0.0, cap)
                if reward_mode == 1:
                    psi = cap
                else:
                    psi = alpha - w0
                    if psi > cap + TOL:
                        raise RewardViolation(
                            f"psi_t={psi:.6g} exceeds reward cap {cap:.6g} at t={t + 1}"
                        )
        else:
            psi = 0.0

        thresh = a * u_v[t] * w_v[t]
        if thresh > 1.0:
            thresh = 1.0
        rejected = p_v[t] <= thresh
        wealth = avail - phi + (psi if rejected else 0.0)
        cum_alpha += a
        r_dec = delta * r_dec + (u_v[t] if rejected else 0.0)
        if rejected and null_v[t]:
            v_dec = delta * v_dec + u_v[t]
        else:
            v_dec = delta * v_dec
        tests_done += 1
        consec = 0
        if rejected:
            rej_t[n_rej] = tw
            rej_n[n_rej] = n
            rej_r[n_rej] = psi
            n_rej += 1
            out_rej[t] = 1

        out_alpha[t] = a
        out_psi[t] = psi
        out_b[t] = bt
        out_wealth[t] = wealth
        out_rdec[t] = r_dec
        out_vdec[t] = v_dec
        out_cum[t] = cum_alpha

    return {
        "alpha": out_alpha_np,
        "psi": out_psi_np,
        "b": out_b_np,
        "rejected": out_rej_np,
        "wealth": out_wealth_np,
        "r_dec": out_rdec_np,
        "v_dec": out_vdec_np,
        "abstained": out_abst_np,
        "resets": out_reset_np,
        "cum_alpha": out_cum_np,
    }
