"""Pure-Python/numpy stream kernel; reference twin of the compiled _core.

Same algorithm and arithmetic as the Cython backend (per-step results agree
to the last ulp except for summation-order effects bounded well below 1e-12).
"""

from __future__ import annotations

import numpy as np

from ..errors import BudgetViolation, RewardViolation

_TOL = 1e-12


def run_lord_family(
    p,
    is_null,
    w,
    u,
    gamma_tab,
    alpha: float,
    w0: float,
    delta: float,
    family: int,
    reward_mode: int,
    abstinence: bool = False,
    eps_w: float = 0.0,
    eps_r: float = 0.0,
    reset_raw: bool = False,
    patience: int = 0,
):
    """Run one labeled stream under a kernel-supported policy family.

    Arrays p, is_null, w, u have length T; gamma_tab has length >= T+1 with
    index 0 unused. family: 0 = gamma-spending wealth rule, 1 = plain
    alpha-spending, 2 = uncorrected fixed level. reward_mode: 1 = switching
    reward budget (full alpha after the first rejection), 0 = constant
    alpha - w0. Returns a dict of per-step arrays.
    """
    p = np.ascontiguousarray(p, dtype=np.float64)
    is_null_a = np.ascontiguousarray(is_null, dtype=np.int8)
    w = np.ascontiguousarray(w, dtype=np.float64)
    u = np.ascontiguousarray(u, dtype=np.float64)
    gamma_tab = np.ascontiguousarray(gamma_tab, dtype=np.float64)
    T = p.shape[0]

    out_alpha = np.zeros(T)
    out_psi = np.zeros(T)
    out_b = np.zeros(T)
    out_rej = np.zeros(T, dtype=np.uint8)
    out_wealth = np.empty(T)
    out_rdec = np.empty(T)
    out_vdec = np.empty(T)
    out_abst = np.zeros(T, dtype=np.uint8)
    out_reset = np.zeros(T, dtype=np.uint8)
    out_cum = np.empty(T)

    rej_t = np.empty(T, dtype=np.float64)
    rej_n = np.empty(T, dtype=np.int64)
    rej_r = np.empty(T, dtype=np.float64)

    wealth = w0
    r_dec = 0.0
    v_dec = 0.0
    cum_alpha = 0.0
    n_rej = 0
    tests_done = 0
    consec = 0

    for t in range(T):
        tw = t + 1
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
                counter = float(n_rej) if reset_raw else r_dec
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
                a = gamma_tab[n] * w0 * delta ** (tw - rej_t[0])
                if delta == 1.0:
                    a += float(np.sum(gamma_tab[n - rej_n[:n_rej]] * rej_r[:n_rej]))
                else:
                    a += float(
                        np.sum(
                            np.power(delta, tw - rej_t[:n_rej])
                            * gamma_tab[n - rej_n[:n_rej]]
                            * rej_r[:n_rej]
                        )
                    )
            else:
                a = gamma_tab[n] * w0
            phi = a
        elif family == 1:
            a = alpha * gamma_tab[n]
            phi = a
        else:
            a = alpha
            phi = 0.0

        pre = 1.0 if n_rej == 0 else 0.0
        avail = delta * wealth + (1.0 - delta) * w0 * pre
        if phi > avail + _TOL:
            raise BudgetViolation(
                f"phi_t={phi:.6g} exceeds available budget {avail:.6g} at t={tw}"
            )
        bt = alpha - w0 / u[t] if n_rej == 0 else alpha

        if family == 0:
            if reward_mode == 1 and u[t] == 1.0 and w[t] == 1.0:
                psi = bt if bt > 0.0 else 0.0
            else:
                cap = phi + u[t] * bt
                if a > 0.0:
                    cap = min(cap, phi / (u[t] * w[t] * a) + u[t] * bt - u[t])
                cap = max(0.0, cap)
                if reward_mode == 1:
                    psi = cap
                else:
                    psi = alpha - w0
                    if psi > cap + _TOL:
                        raise RewardViolation(
                            f"psi_t={psi:.6g} exceeds reward cap {cap:.6g} at t={tw}"
                        )
        else:
            psi = 0.0

        thresh = a * u[t] * w[t]
        if thresh > 1.0:
            thresh = 1.0
        rejected = p[t] <= thresh
        wealth = avail - phi + (psi if rejected else 0.0)
        cum_alpha += a
        r_dec = delta * r_dec + (u[t] if rejected else 0.0)
        if rejected and is_null_a[t]:
            v_dec = delta * v_dec + u[t]
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
        "alpha": out_alpha,
        "psi": out_psi,
        "b": out_b,
        "rejected": out_rej,
        "wealth": out_wealth,
        "r_dec": out_rdec,
        "v_dec": out_vdec,
        "abstained": out_abst,
        "resets": out_reset,
        "cum_alpha": out_cum,
    }
