"""Compiled inner loops: OU recursion and batched piecewise-constant stepping.

The steppers apply exp(-i H dt) to the state through its Taylor series,
truncated once the next term drops below machine precision, with the step
split into equal substeps whenever ||H dt||_F exceeds 1. The Hamiltonian
is rebuilt at the midpoint of every step with the noise held at the value
supplied for that step.
"""

from __future__ import annotations

import math
import warnings

import numba as nb
import numpy as np

warnings.filterwarnings("ignore", message="The TBB threading layer")
# prefer OpenMP/workqueue; an outdated TBB only produces a warning
nb.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]

_INV_SQRT2 = 1.0 / math.sqrt(2.0)

# scheme codes shared with hamiltonians.SCHEME_CODES
NONE, LINEAR, ORTHOGONAL, PHASEMOD = 0, 1, 2, 3

# layout of the float parameter vector for propagate_rwa3
P_EX, P_OMEGA1, P_OMEGA2, P_DET1, P_DET2, P_G, P_WAC = range(7)
N_PARAMS = 7


@nb.njit(cache=True)
def ou_recursion(x0, decay, amp, normals, out):
    x = x0
    for k in range(normals.shape[0]):
        out[k] = x
        x = x * decay + normals[k] * amp
    return x


# _TAYLOR_X[K-1]: largest x with x^K / K! <= 1e-17
_TAYLOR_X = np.array([math.exp((math.log(1e-17) + math.lgamma(k + 1)) / k) for k in range(1, 41)])


@nb.njit(cache=True)
def taylor_terms(x):
    """Smallest K with x^K / K! below 1e-17 (x = ||H dt||, at most 1)."""
    for k in range(40):
        if x <= _TAYLOR_X[k]:
            return k + 1
    return 40


@nb.njit(cache=True)
def _expm_apply3(h, dt, psi):
    """psi <- exp(-i h dt) psi for a 3x3 Hermitian h (in place).

    Real arithmetic on split real/imaginary parts; each Taylor term is
    -i (tau/k) H applied to the previous one.
    """
    norm = 0.0
    for i in range(3):
        for j in range(3):
            norm += h[i, j].real ** 2 + h[i, j].imag ** 2
    norm = math.sqrt(norm) * dt
    nsub = 1
    if norm > 1.0:
        nsub = int(math.ceil(norm))
    tau = dt / nsub
    nterms = taylor_terms(norm / nsub)
    ar00, ar01, ar02 = h[0, 0].real, h[0, 1].real, h[0, 2].real
    ar10, ar11, ar12 = h[1, 0].real, h[1, 1].real, h[1, 2].real
    ar20, ar21, ar22 = h[2, 0].real, h[2, 1].real, h[2, 2].real
    ai00, ai01, ai02 = h[0, 0].imag, h[0, 1].imag, h[0, 2].imag
    ai10, ai11, ai12 = h[1, 0].imag, h[1, 1].imag, h[1, 2].imag
    ai20, ai21, ai22 = h[2, 0].imag, h[2, 1].imag, h[2, 2].imag
    pr0, pr1, pr2 = psi[0].real, psi[1].real, psi[2].real
    pi0, pi1, pi2 = psi[0].imag, psi[1].imag, psi[2].imag
    for _ in range(nsub):
        xr0, xr1, xr2 = pr0, pr1, pr2
        xi0, xi1, xi2 = pi0, pi1, pi2
        for k in range(1, nterms + 1):
            c = tau / k
            # (H x) real and imaginary parts
            yr0 = ar00 * xr0 + ar01 * xr1 + ar02 * xr2 - ai00 * xi0 - ai01 * xi1 - ai02 * xi2
            yr1 = ar10 * xr0 + ar11 * xr1 + ar12 * xr2 - ai10 * xi0 - ai11 * xi1 - ai12 * xi2
            yr2 = ar20 * xr0 + ar21 * xr1 + ar22 * xr2 - ai20 * xi0 - ai21 * xi1 - ai22 * xi2
            yi0 = ar00 * xi0 + ar01 * xi1 + ar02 * xi2 + ai00 * xr0 + ai01 * xr1 + ai02 * xr2
            yi1 = ar10 * xi0 + ar11 * xi1 + ar12 * xi2 + ai10 * xr0 + ai11 * xr1 + ai12 * xr2
            yi2 = ar20 * xi0 + ar21 * xi1 + ar22 * xi2 + ai20 * xr0 + ai21 * xr1 + ai22 * xr2
            # multiply by -i c
            xr0, xr1, xr2 = c * yi0, c * yi1, c * yi2
            xi0, xi1, xi2 = -c * yr0, -c * yr1, -c * yr2
            pr0 += xr0
            pr1 += xr1
            pr2 += xr2
            pi0 += xi0
            pi1 += xi1
            pi2 += xi2
    psi[0] = complex(pr0, pi0)
    psi[1] = complex(pr1, pi1)
    psi[2] = complex(pr2, pi2)


@nb.njit(cache=True)
def _expm_apply2(hx, hy, hz, dt, psi):
    """psi <- exp(-i dt (hx sx + hy sy + hz sz)) psi with s = Pauli/2."""
    mag = math.sqrt(hx * hx + hy * hy + hz * hz)
    if mag == 0.0:
        return
    theta = 0.5 * mag * dt
    c = math.cos(theta)
    s = math.sin(theta) / mag
    # -i sin(theta) n.sigma
    a = psi[0]
    b = psi[1]
    psi[0] = c * a - 1j * s * (hz * a + (hx - 1j * hy) * b)
    psi[1] = c * b - 1j * s * ((hx + 1j * hy) * a - hz * b)


@nb.njit(cache=True)
def rwa3_hamiltonian(params, scheme, kplus, kminus, has_signal, t, dE, amp, h):
    """First-rotating-frame RWA Hamiltonian at time t (basis +1, 0, -1)."""
    ex = params[P_EX]
    w1 = params[P_OMEGA1]
    phi = 0.0
    if scheme == PHASEMOD:
        phi = 2.0 * params[P_OMEGA2] / w1 * math.sin(2.0 * w1 * t)
    for i in range(3):
        for j in range(3):
            h[i, j] = 0.0
    if scheme != NONE:
        ang1 = params[P_DET1] * t + phi
        ang2 = params[P_DET2] * t + phi
        cp = kplus * amp * (math.cos(ang1) - 1j * math.sin(ang1))
        cm = -kminus * amp * (math.cos(ang2) - 1j * math.sin(ang2))
        a = (cp - cm) * _INV_SQRT2
        b = (cp + cm) * _INV_SQRT2
        h[0, 1] = a
        h[1, 0] = a.conjugate()
        h[2, 1] = b
        h[1, 2] = b.conjugate()
    h[0, 2] = dE
    h[2, 0] = dE
    if has_signal:
        s = 0.5 * params[P_G] * math.cos(2.0 * ex * t) * math.cos(params[P_WAC] * t)
        h[0, 0] = s
        h[1, 1] = -s
    return h


LANES = 16  # trajectories advanced together in the vectorized stepper


@nb.njit(cache=True, fastmath={'contract', 'arcp', 'nsz'})
def _rwa3_lanes(pr, pi, lo, hi, t, dt, params, scheme, kplus, kminus, has_signal,
                noise_e, noise_w, step, xr, xi, lane_amp, lane_de, nterm):
    """One midpoint step for trajectories lo..hi-1 (split real/imag state).

    The time-dependent factors are shared by all trajectories; only the
    strain value and the drive amplitude differ. Each trajectory uses its
    own Taylor order, so the result does not depend on the batch.
    """
    ex = params[P_EX]
    w1 = params[P_OMEGA1]
    phi = 0.0
    if scheme == PHASEMOD:
        phi = 2.0 * params[P_OMEGA2] / w1 * math.sin(2.0 * w1 * t)
    uar = 0.0
    uai = 0.0
    ubr = 0.0
    ubi = 0.0
    if scheme != NONE:
        ang1 = params[P_DET1] * t + phi
        ang2 = params[P_DET2] * t + phi
        c1, s1 = math.cos(ang1), math.sin(ang1)
        c2, s2 = math.cos(ang2), math.sin(ang2)
        # cp = kplus e^{-i ang1}, cm = -kminus e^{-i ang2}
        cpr, cpi = kplus * c1, -kplus * s1
        cmr, cmi = -kminus * c2, kminus * s2
        uar, uai = (cpr - cmr) * _INV_SQRT2, (cpi - cmi) * _INV_SQRT2
        ubr, ubi = (cpr + cmr) * _INV_SQRT2, (cpi + cmi) * _INV_SQRT2
    sg = 0.0
    if has_signal:
        sg = 0.5 * params[P_G] * math.cos(2.0 * ex * t) * math.cos(params[P_WAC] * t)
    u2 = uar * uar + uai * uai + ubr * ubr + ubi * ubi
    kmax = 0
    for j in range(lo, hi):
        amp = w1 + noise_w[j, step]
        de = noise_e[j, step]
        norm = math.sqrt(2.0 * sg * sg + 2.0 * amp * amp * u2 + 2.0 * de * de) * dt
        if norm > 1.0:
            nterm[j - lo] = -1  # handled by the substepping fallback below
        else:
            nterm[j - lo] = taylor_terms(norm)
            kmax = max(kmax, nterm[j - lo])
        lane_amp[j - lo] = amp
        lane_de[j - lo] = de
        for i in range(3):
            xr[i, j - lo] = pr[i, j]
            xi[i, j - lo] = pi[i, j]
    m = hi - lo
    for k in range(1, kmax + 1):
        c = dt / k
        for q in range(m):
            j = lo + q
            amp = lane_amp[q]
            de = lane_de[q]
            ar, ai = amp * uar, amp * uai
            br, bi = amp * ubr, amp * ubi
            x0r, x1r, x2r = xr[0, q], xr[1, q], xr[2, q]
            x0i, x1i, x2i = xi[0, q], xi[1, q], xi[2, q]
            # H x with H01 = a, H21 = b, H02 = H20 = de, H00 = -H11 = sg
            h0r = sg * x0r + ar * x1r - ai * x1i + de * x2r
            h0i = sg * x0i + ar * x1i + ai * x1r + de * x2i
            h1r = ar * x0r + ai * x0i - sg * x1r + br * x2r + bi * x2i
            h1i = ar * x0i - ai * x0r - sg * x1i + br * x2i - bi * x2r
            h2r = de * x0r + br * x1r - bi * x1i
            h2i = de * x0i + br * x1i + bi * x1r
            on = c if k <= nterm[q] else 0.0
            xr[0, q], xi[0, q] = c * h0i, -c * h0r
            xr[1, q], xi[1, q] = c * h1i, -c * h1r
            xr[2, q], xi[2, q] = c * h2i, -c * h2r
            pr[0, j] += on * h0i
            pi[0, j] -= on * h0r
            pr[1, j] += on * h1i
            pi[1, j] -= on * h1r
            pr[2, j] += on * h2i
            pi[2, j] -= on * h2r
    for q in range(m):
        if nterm[q] < 0:
            j = lo + q
            h = np.zeros((3, 3), dtype=np.complex128)
            rwa3_hamiltonian(params, scheme, kplus, kminus, has_signal, t,
                             noise_e[j, step], w1 + noise_w[j, step], h)
            v = np.empty(3, dtype=np.complex128)
            for i in range(3):
                v[i] = complex(pr[i, j], pi[i, j])
            _expm_apply3(h, dt, v)
            for i in range(3):
                pr[i, j] = v[i].real
                pi[i, j] = v[i].imag


@nb.njit(cache=True, parallel=True)
def propagate_rwa3(psi, t0, dt, k0, params, scheme, kplus, kminus, has_signal,
                   noise_e, noise_w, stride, out, sample0):
    """Advance a batch of 3-level states through noise_e.shape[1] steps.

    psi : (n, 3) complex, modified in place.
    k0 : global index of the first step in this chunk.
    out : (n, n_samples, 3) complex; after global step k (1-based count
        k0 + m + 1) divisible by ``stride`` the state is written to
        out[:, sample0 + j] with j counting samples in this chunk.
    Returns the number of samples written.
    """
    n, m = noise_e.shape
    written = 0
    for step in range(m):
        if (k0 + step + 1) % stride == 0:
            written += 1
    nblocks = (n + LANES - 1) // LANES
    for blk in nb.prange(nblocks):
        lo = blk * LANES
        hi = min(n, lo + LANES)
        pr = np.empty((3, n))
        pi = np.empty((3, n))
        for j in range(lo, hi):
            for i in range(3):
                pr[i, j] = psi[j, i].real
                pi[i, j] = psi[j, i].imag
        xr = np.empty((3, LANES))
        xi = np.empty((3, LANES))
        lane_amp = np.empty(LANES)
        lane_de = np.empty(LANES)
        nterm = np.empty(LANES, dtype=np.int64)
        w = 0
        for step in range(m):
            t = t0 + (k0 + step + 0.5) * dt
            _rwa3_lanes(pr, pi, lo, hi, t, dt, params, scheme, kplus, kminus, has_signal,
                        noise_e, noise_w, step, xr, xi, lane_amp, lane_de, nterm)
            if (k0 + step + 1) % stride == 0:
                for j in range(lo, hi):
                    for i in range(3):
                        out[j, sample0 + w, i] = complex(pr[i, j], pi[i, j])
                w += 1
        for j in range(lo, hi):
            for i in range(3):
                psi[j, i] = complex(pr[i, j], pi[i, j])
    return written


@nb.njit(cache=True, parallel=True)
def propagate_sensing2(psi, t0, dt, k0, ex, w1, w2, g, wac, sz_sign,
                       noise_x, stride, out, sample0):
    """Doubly-rotating two-level sensing model, batched.

    H = 2 x sx + 2 sz_sign W2 sz + g cos(2 Ex t) cos(wac t) [sz cos(2 W1 t) - sy sin(2 W1 t)]
    with x = noise_x (the combined transverse noise) and s = Pauli/2.
    """
    n, m = noise_x.shape
    written = 0
    for step in range(m):
        if (k0 + step + 1) % stride == 0:
            written += 1
    for j in nb.prange(n):
        state = psi[j].copy()
        w = 0
        for step in range(m):
            t = t0 + (k0 + step + 0.5) * dt
            s = g * math.cos(2.0 * ex * t) * math.cos(wac * t)
            hx = 2.0 * noise_x[j, step]
            hy = -s * math.sin(2.0 * w1 * t)
            hz = 2.0 * sz_sign * w2 + s * math.cos(2.0 * w1 * t)
            _expm_apply2(hx, hy, hz, dt, state)
            if (k0 + step + 1) % stride == 0:
                out[j, sample0 + w, 0] = state[0]
                out[j, sample0 + w, 1] = state[1]
                w += 1
        psi[j, 0] = state[0]
        psi[j, 1] = state[1]
    return written
