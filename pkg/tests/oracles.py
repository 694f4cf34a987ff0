"""Independent brute-force implementations used as test oracles.

These deliberately avoid the package's vectorized code paths: metrics are
recomputed with explicit loops, the Fourier correlation with a dense O(N^2)
DFT matrix, and histogram placement with searchsorted. They exist only to
pin down expected values.
"""

from __future__ import annotations

import math

import numpy as np


def mse_loops(a, b) -> float:
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    total = 0.0
    count = 0
    for idx in np.ndindex(a.shape):
        d = a[idx] - b[idx]
        total += d * d
        count += 1
    return total / count


def psnr_loops(a, b, peak=None) -> float:
    a = np.asarray(a, dtype=np.float64)
    if peak is None:
        peak = float(a.max() - a.min())
    err = mse_loops(a, b)
    if err == 0.0:
        return math.inf
    return 10.0 * math.log10(peak * peak / err)


def ncc_loops(a, b) -> float:
    av = np.asarray(a, dtype=np.float64).ravel()
    bv = np.asarray(b, dtype=np.float64).ravel()
    ma, mb = av.mean(), bv.mean()
    num = 0.0
    da = 0.0
    db = 0.0
    for x, y in zip(av, bv):
        num += (x - ma) * (y - mb)
        da += (x - ma) ** 2
        db += (y - mb) ** 2
    return num / math.sqrt(da * db)


def dssim_loops(a, b, window) -> float:
    """SSIM with a clipped box window, all positions, explicit loops."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    dyn_range = float(a.max() - a.min())
    c1 = (0.01 * dyn_range) ** 2
    c2 = (0.03 * dyn_range) ** 2
    halves = [w // 2 for w in window]
    total = 0.0
    count = 0
    for idx in np.ndindex(a.shape):
        slices = tuple(
            slice(max(0, i - h), min(n, i + h + 1))
            for i, h, n in zip(idx, halves, a.shape)
        )
        wa = a[slices].ravel()
        wb = b[slices].ravel()
        mu_a, mu_b = wa.mean(), wb.mean()
        var_a = (wa * wa).mean() - mu_a * mu_a
        var_b = (wb * wb).mean() - mu_b * mu_b
        cov = (wa * wb).mean() - mu_a * mu_b
        ssim = ((2 * mu_a * mu_b + c1) * (2 * cov + c2)) / (
            (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
        )
        total += ssim
        count += 1
    return (1.0 - total / count) / 2.0


def nmi_searchsorted(a, b, n_bins) -> float:
    av = np.asarray(a, dtype=np.float64).ravel()
    bv = np.asarray(b, dtype=np.float64).ravel()
    edges_a = np.linspace(av.min(), av.max(), n_bins + 1)
    edges_b = np.linspace(bv.min(), bv.max(), n_bins + 1)
    ia = np.clip(np.searchsorted(edges_a, av, side="right") - 1, 0, n_bins - 1)
    ib = np.clip(np.searchsorted(edges_b, bv, side="right") - 1, 0, n_bins - 1)
    joint = np.zeros((n_bins, n_bins))
    for x, y in zip(ia, ib):
        joint[x, y] += 1.0
    p = joint / joint.sum()

    def entropy(q):
        h = 0.0
        for v in np.ravel(q):
            if v > 0:
                h -= v * math.log(v)
        return h

    return (entropy(p.sum(axis=1)) + entropy(p.sum(axis=0))) / entropy(p)


def dense_dft4(vol) -> np.ndarray:
    """Full O(N^2) 4D DFT via one dense phase matrix (no FFT algorithm)."""
    vol = np.asarray(vol, dtype=np.float64)
    dims = vol.shape
    n_total = vol.size
    coords = np.array(list(np.ndindex(dims)))  # (N, 4)
    phases = np.zeros((n_total, n_total))
    for axis, n in enumerate(dims):
        phases += np.outer(coords[:, axis], coords[:, axis]) * (2.0 * math.pi / n)
    matrix = np.exp(-1j * phases)
    return (matrix @ vol.ravel()).reshape(dims)


def normalized_radii(dims) -> np.ndarray:
    grids = []
    for n in dims:
        freqs = np.array(
            [(k if k <= (n - 1) // 2 else k - n) / n for k in range(n)]
        )
        grids.append(freqs / 0.5)
    r = np.zeros(dims)
    for axis, g in enumerate(grids):
        shape = [1] * len(dims)
        shape[axis] = dims[axis]
        r = r + g.reshape(shape) ** 2
    return np.sqrt(r)


def half_bit_reference(n) -> float:
    return (0.2071 + 1.9102 / math.sqrt(n)) / (1.2071 + 0.9102 / math.sqrt(n))


def shell_correlations(fa, fb, dims, n_shells):
    """Shell sums by explicit per-voxel loop; returns dict shell -> stats."""
    radii = normalized_radii(dims)
    shells = {}
    for idx in np.ndindex(dims):
        r = radii[idx]
        if r <= 0.0 or r > 1.0:
            continue
        s = math.ceil(r * n_shells) - 1
        cross, pa, pb, count = shells.get(s, (0.0, 0.0, 0.0, 0))
        va, vb = fa[idx], fb[idx]
        cross += (va * np.conj(vb)).real
        pa += abs(va) ** 2
        pb += abs(vb) ** 2
        shells[s] = (cross, pa, pb, count + 1)
    out = {}
    for s, (cross, pa, pb, count) in sorted(shells.items()):
        denom = math.sqrt(pa * pb)
        corr = cross / denom if denom > 0 else 0.0
        n_eff = math.ceil(count / 2)
        out[s] = {
            "center": (s + 0.5) / n_shells,
            "correlation": corr,
            "count": count,
            "n_effective": n_eff,
            "threshold": half_bit_reference(n_eff),
        }
    return out


def fhc_dense(a, b, n_shells):
    """FHC curve from the dense DFT oracle (independent transform path)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    fa = dense_dft4(a)
    fb = dense_dft4(b)
    return shell_correlations(fa, fb, a.shape, n_shells)


def fsc3d(a, b, n_shells):
    """Conventional 3D Fourier shell correlation with the same shell rule."""
    a3 = np.asarray(a, dtype=np.float64)
    b3 = np.asarray(b, dtype=np.float64)
    fa = np.fft.fftn(a3)
    fb = np.fft.fftn(b3)
    return shell_correlations(fa, fb, a3.shape, n_shells)
