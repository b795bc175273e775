"""Monte-Carlo studies: spectral-density convergence, self-consistent
residuals, averaging identities, the edge loop combination, and edge
eigenvalue statistics.

Every study is reproducible bit-for-bit from (config, seed): each sample
draws from a counter-based stream keyed by (seed, n, sample index), and
aggregation is order-independent.  Sample loops honor the
DREGULAR_THREADS environment variable; results are collected by index so
the worker count never changes the output.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
import scipy.integrate

from .kernels import (
    SpectralPoint,
    edge_constant,
    km_density,
    stieltjes_kesten_mckay,
    stieltjes_semicircle,
    x_ell,
    y_ell,
)
from .resolvent import NormalizedAdjacency, eigenvalues, resolvent
from .samplers import SamplerConfig, sample, stream


def _map_indexed(fn, count: int):
    """Apply fn to 0..count-1, in index order, optionally on a thread
    pool sized by DREGULAR_THREADS."""
    workers = int(os.environ.get("DREGULAR_THREADS", "1"))
    if workers <= 1:
        return [fn(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(count)))


def summary(values, seed: int = 0, resamples: int = 400) -> dict:
    """count / mean / median plus a percentile bootstrap CI for the mean."""
    arr = np.asarray(values, dtype=float)
    rng = stream(seed, 0xB00)
    if arr.size == 0:
        return {"count": 0, "mean": float("nan"), "median": float("nan"),
                "ci_lo": float("nan"), "ci_hi": float("nan")}
    idx = rng.integers(0, arr.size, size=(resamples, arr.size))
    boot = arr[idx].mean(axis=1)
    lo, hi = np.percentile(boot, [2.5, 97.5])
    return {
        "count": int(arr.size),
        "mean": float(arr.mean()),
        "median": float(np.median(arr)),
        "ci_lo": float(lo),
        "ci_hi": float(hi),
    }


# ---------------------------------------------------------------------------
# Empirical spectral density vs the Kesten-McKay law
# ---------------------------------------------------------------------------


def km_cdf(x, d: int, grid_points: int = 20001):
    """CDF of the Kesten-McKay density by cumulative quadrature."""
    grid = np.linspace(-2.0, 2.0, grid_points)
    dens = km_density(grid, d)
    cdf = scipy.integrate.cumulative_trapezoid(dens, grid, initial=0.0)
    cdf /= cdf[-1]
    return np.interp(np.asarray(x, dtype=float), grid, cdf, left=0.0, right=1.0)


def ks_distance_km(values, d: int) -> float:
    """One-sample Kolmogorov-Smirnov distance to the Kesten-McKay CDF."""
    vals = np.sort(np.asarray(values, dtype=float))
    f = km_cdf(vals, d)
    n = vals.size
    hi = np.max(np.arange(1, n + 1) / n - f)
    lo = np.max(f - np.arange(0, n) / n)
    return float(max(hi, lo))


def esd_experiment(n: int, d: int, samples: int, seed: int, bins: int = 100,
                   model: str = "uniform_pairing") -> dict:
    """Pool the nontrivial eigenvalues of several samples and compare the
    empirical distribution against the Kesten-McKay law."""
    cfg = SamplerConfig(n=n, d=d, model=model, seed=seed)

    def one(m):
        g = sample(cfg, stream(seed, n, m))
        lam = eigenvalues(NormalizedAdjacency(g))
        return lam[1:]  # drop the trivial top eigenvalue

    pooled = np.concatenate(_map_indexed(one, samples))
    edges = np.linspace(-2.5, 2.5, bins + 1)
    counts, _ = np.histogram(pooled, bins=edges)
    outside = np.mean(np.abs(pooled) > 2.2)
    return {
        "n": n,
        "d": d,
        "samples": samples,
        "seed": seed,
        "ks_distance": ks_distance_km(pooled, d),
        "bin_edges": edges,
        "counts": counts,
        "mass_outside": float(outside),
        "eigenvalue_count": int(pooled.size),
    }


# ---------------------------------------------------------------------------
# Self-consistent residuals and the loop combination
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DiagnosticRecord:
    """Per-sample diagnostics at one spectral parameter."""

    n: int
    d: int
    ell: int
    seed: int
    sample: int
    z: complex
    q: complex
    m_n: complex
    y: complex
    x: complex
    dz_m_n: complex
    phi: float
    residual_qy: complex
    residual_mx: complex
    loop_lhs: complex

    CSV_HEADER = (
        "n,d,ell,seed,sample,z_re,z_im,q_re,q_im,m_n_re,m_n_im,y_re,y_im,"
        "x_re,x_im,dz_re,dz_im,phi,res_qy_re,res_qy_im,res_mx_re,res_mx_im,"
        "loop_re,loop_im"
    )

    def csv_row(self) -> str:
        parts = [str(self.n), str(self.d), str(self.ell), str(self.seed), str(self.sample)]
        for c in (self.z, self.q, self.m_n, self.y, self.x, self.dz_m_n):
            parts += [repr(c.real), repr(c.imag)]
        parts.append(repr(self.phi))
        for c in (self.residual_qy, self.residual_mx, self.loop_lhs):
            parts += [repr(c.real), repr(c.imag)]
        return ",".join(parts)


def diagnostic_sample(n: int, d: int, ell: int, z: complex, seed: int, m: int,
                      frak_c: float = 0.5, model: str = "uniform_pairing") -> DiagnosticRecord:
    """Draw one graph and evaluate the full diagnostic record at z."""
    cfg = SamplerConfig(n=n, d=d, model=model, seed=seed)
    g = sample(cfg, stream(seed, n, m))
    h = NormalizedAdjacency(g)
    point = SpectralPoint(z)
    cache = resolvent(h, point)
    q = cache.q()
    m_n = cache.m_n
    dz = cache.dz_m_n(route="trace")
    y = y_ell(q, point, ell, d)
    x = x_ell(q, point, ell, d)
    cal_a = edge_constant(d)
    phi = m_n.imag / (n * point.eta) + n ** (-1.0 + 2.0 * frak_c)
    return DiagnosticRecord(
        n=n, d=d, ell=ell, seed=seed, sample=m, z=z,
        q=q, m_n=m_n, y=y, x=x, dz_m_n=dz, phi=phi,
        residual_qy=q - y,
        residual_mx=m_n - x,
        loop_lhs=cal_a**2 / (ell + 1.0) * (q - y) + dz / n,
    )


def self_consistent_scan(n_list, d: int, ell: int, z_of_n, samples: int,
                         seed: int, frak_c: float = 0.5,
                         model: str = "uniform_pairing"):
    """Measure the self-consistent residuals over sizes and spectral
    parameters.

    ``z_of_n`` maps a size n to a list of complex spectral parameters (so
    grids can be recipes in n).  Returns (records, aggregate rows); each
    aggregate row holds the medians of |Q - Y|, |m_N - X|, |Q - m_sc| and
    |m_N - m_d| for one (n, z) cell.
    """
    records = []
    aggregates = []
    for n in n_list:
        for z in z_of_n(n):
            recs = _map_indexed(
                lambda m, n=n, z=z: diagnostic_sample(n, d, ell, z, seed, m,
                                                      frak_c=frak_c, model=model),
                samples,
            )
            records.extend(recs)
            msc = stieltjes_semicircle(z)
            md = stieltjes_kesten_mckay(z, d)
            aggregates.append({
                "n": n,
                "z": complex(z),
                "ell": ell,
                "median_abs_qy": float(np.median([abs(r.residual_qy) for r in recs])),
                "median_abs_mx": float(np.median([abs(r.residual_mx) for r in recs])),
                "median_abs_q_msc": float(np.median([abs(r.q - msc) for r in recs])),
                "median_abs_m_md": float(np.median([abs(r.m_n - md) for r in recs])),
            })
    return records, aggregates


def loop_equation_probe(n_list, d: int, ell: int, samples: int, seed: int,
                        kappa: float = 1.0, z_of_n=None, frak_c: float = 0.5,
                        model: str = "uniform_pairing") -> list[dict]:
    """Monte-Carlo mean of the edge loop combination per size.

    The default window recipe is z = 2 + i*kappa*(A*n)^(-2/3) with A the
    square-root edge coefficient.  Reports the mean of the combination
    A^2 (Q - Y)/(ell+1) + dz m_N / N, the alternative combination through
    (m_N - m_d), and the per-summand baselines the cancellation is judged
    against.
    """
    cal_a = edge_constant(d)
    if z_of_n is None:
        z_of_n = lambda n: 2.0 + 1j * kappa * (cal_a * n) ** (-2.0 / 3.0)
    out = []
    for n in n_list:
        z = complex(z_of_n(n))
        recs = _map_indexed(
            lambda m, n=n, z=z: diagnostic_sample(n, d, ell, z, seed, m,
                                                  frak_c=frak_c, model=model),
            samples,
        )
        md = stieltjes_kesten_mckay(z, d)
        sqrt_w = np.sqrt(z - 2.0)  # upper half-plane branch, Im > 0
        loop_terms = np.array([r.loop_lhs for r in recs])
        qy_terms = np.array([cal_a**2 / (ell + 1.0) * r.residual_qy for r in recs])
        dz_terms = np.array([r.dz_m_n / n for r in recs])
        dm = np.array([r.m_n - md for r in recs])
        micro = dm**2 + 2.0 * cal_a * sqrt_w * dm + dz_terms
        out.append({
            "n": n,
            "d": d,
            "ell": ell,
            "z": z,
            "samples": samples,
            "mean_loop": complex(loop_terms.mean()),
            "abs_mean_loop": float(abs(loop_terms.mean())),
            "mean_abs_dz_term": float(np.abs(dz_terms).mean()),
            "mean_abs_qy_term": float(np.abs(qy_terms).mean()),
            "mean_qy_term": complex(qy_terms.mean()),
            "mean_micro_loop": complex(micro.mean()),
            "abs_mean_micro_loop": float(abs(micro.mean())),
            "cancellation_ratio": float(abs(loop_terms.mean()) / np.abs(dz_terms).mean()),
            "records": recs,
        })
    return out


# ---------------------------------------------------------------------------
# Averaging identities
# ---------------------------------------------------------------------------


def _averaging_probe_one(n, d, z, seed, m, frak_c, model, chunk):
    cfg = SamplerConfig(n=n, d=d, model=model, seed=seed)
    g = sample(cfg, stream(seed, n, m))
    h = NormalizedAdjacency(g)
    point = SpectralPoint(z)
    cache = resolvent(h, point)
    gm = cache.matrix

    und = np.asarray(g.edges(), dtype=np.int64)
    b = np.concatenate([und[:, 0], und[:, 1]])
    c = np.concatenate([und[:, 1], und[:, 0]])
    e = b.size

    gbb = gm[b, b]
    minor_cc = gm[c, c] - gm[c, b] * gm[b, c] / gbb
    q = complex(minor_cc.sum() / e)
    # definitional average: mean of (G^(b)_cc - Q) is exactly zero
    core1 = abs(complex(np.mean(minor_cc - q)))

    centered = minor_cc - q
    lhs = 0.0 + 0.0j
    rhs = 0.0 + 0.0j
    ward_sum = 0.0
    kept = 0
    for start in range(0, e, chunk):
        sl = slice(start, min(start + chunk, e))
        bp = b[sl]
        cp = c[sl]
        # validity: removals must not collide with kept indices
        mask = (b[:, None] != bp[None, :]) & (c[:, None] != bp[None, :]) \
            & (b[:, None] != cp[None, :])
        g_ccp = gm[np.ix_(c, cp)]
        g_cbp = gm[np.ix_(c, bp)]
        g_bcp = gm[np.ix_(b, cp)]
        g_bbp = gm[np.ix_(b, bp)]
        g_bpb = gm[np.ix_(bp, b)]
        g_bpcp = gm[bp, cp]
        g_bpbp = gm[bp, bp]

        m1_ccp = g_ccp - g_cbp * (g_bpcp / g_bpbp)[None, :]
        m1_cb = gm[c, b][:, None] - g_cbp * (g_bpb.T / g_bpbp[None, :])
        m1_bcp = g_bcp - g_bbp * (g_bpcp / g_bpbp)[None, :]
        m1_bb = gbb[:, None] - g_bbp * (g_bpb.T / g_bpbp[None, :])
        safe = mask & (np.abs(m1_bb) > 1e-12)
        m2 = m1_ccp - m1_cb * m1_bcp / np.where(safe, m1_bb, 1.0)

        lhs += m2[safe].sum()
        ward_sum += float(np.abs(m2[safe] ** 2).sum())
        rhs_block = g_bbp / (d - 1.0) * centered[:, None] * centered[sl][None, :]
        rhs += rhs_block[safe].sum()
        kept += int(safe.sum())

    total = float(e) ** 2
    lhs /= total
    rhs /= total
    ward_avg = ward_sum / total
    phi = cache.m_n.imag / (n * point.eta) + n ** (-1.0 + 2.0 * frak_c)
    return {
        "sample": m,
        "core1_abs": core1,
        "pair_lhs": complex(lhs),
        "pair_rhs": complex(rhs),
        "pair_gap": float(abs(lhs - rhs)),
        "ward_average": ward_avg,
        "phi": float(phi),
        "excluded_fraction": 1.0 - kept / total,
    }


def averaging_identity_probe(n: int, d: int, z: complex, samples: int, seed: int,
                             frak_c: float = 0.5, model: str = "uniform_pairing",
                             chunk: int = 128) -> dict:
    """Exercise the edge-averaging identities on sampled graphs.

    (a) the definitional average of (G^(b)_cc - Q) over oriented edges is
    zero to machine precision; (b) the double-edge average of the
    two-vertex minor equals its factorized leading term up to a gap
    measured relative to the control parameter Phi; (c) the double-edge
    Ward average of |G^(bb')_cc'|^2 is bounded by a constant times Phi.
    Pairs whose removed vertices collide with kept indices are excluded
    from both sides (an O(d/N) fraction).
    """
    per = _map_indexed(
        lambda m: _averaging_probe_one(n, d, z, seed, m, frak_c, model, chunk),
        samples,
    )
    return {
        "n": n,
        "d": d,
        "z": complex(z),
        "samples": samples,
        "max_core1_abs": max(p["core1_abs"] for p in per),
        "max_gap_over_phi": max(p["pair_gap"] / p["phi"] for p in per),
        "max_ward_over_phi": max(p["ward_average"] / p["phi"] for p in per),
        "per_sample": per,
    }


# ---------------------------------------------------------------------------
# Edge eigenvalue statistics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EdgeSample:
    """Extreme nontrivial eigenvalues of one sampled graph."""

    n: int
    d: int
    seed: int
    sample: int
    lambda2: float
    lambda_n: float
    scaled: float
    ramanujan: bool

    CSV_HEADER = "n,d,seed,sample,lambda2,lambda_n,scaled,ramanujan"

    def csv_row(self) -> str:
        return ",".join([
            str(self.n), str(self.d), str(self.seed), str(self.sample),
            repr(self.lambda2), repr(self.lambda_n), repr(self.scaled),
            str(int(self.ramanujan)),
        ])


def edge_fluctuations(n: int, d: int, samples: int, seed: int,
                      model: str = "uniform_pairing") -> dict:
    """Sample extreme eigenvalues and aggregate the edge statistics: the
    fraction with lambda_2 < 2, the Ramanujan fraction, the correlation of
    the two edges, and moments of the rescaled fluctuation."""
    cfg = SamplerConfig(n=n, d=d, model=model, seed=seed)
    cal_a = edge_constant(d)
    scale = (cal_a * n) ** (2.0 / 3.0)

    def one(m):
        g = sample(cfg, stream(seed, n, m))
        lam = eigenvalues(NormalizedAdjacency(g))
        lam2 = float(lam[1])
        lamn = float(lam[-1])
        return EdgeSample(
            n=n, d=d, seed=seed, sample=m,
            lambda2=lam2, lambda_n=lamn,
            scaled=scale * (lam2 - 2.0),
            ramanujan=max(lam2, abs(lamn)) <= 2.0,
        )

    recs = _map_indexed(one, samples)
    lam2 = np.array([r.lambda2 for r in recs])
    lamn = np.array([r.lambda_n for r in recs])
    scaled = np.array([r.scaled for r in recs])
    corr = float(np.corrcoef(lam2, -lamn)[0, 1])
    return {
        "n": n,
        "d": d,
        "samples": samples,
        "records": recs,
        "frac_below_2": float(np.mean(lam2 < 2.0)),
        "frac_ramanujan": float(np.mean([r.ramanujan for r in recs])),
        "corr_edges": corr,
        "scaled_summary": summary(scaled, seed=seed),
        "lambda2_summary": summary(lam2, seed=seed),
    }
