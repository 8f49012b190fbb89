"""Pure-Python twin of the compiled event kernel.

Consumes exactly the same splitmix64 counter stream and produces bit-identical
states, so it serves both as an import-time fallback and as a differential
oracle for the extension.  Draws are precomputed in vectorized batches; the
sequential occupancy updates run in plain Python (roughly two orders of
magnitude slower than the compiled loop, see scripts/benchmark_kernel.py).
"""
from __future__ import annotations

import numpy as np

from .rng import splitmix64_array

KERNEL_KIND = "python"

_BATCH = 1 << 16


def run_events(occ, sites, base, ctr0, n_events, vlist, vcum, ring):
    occ = np.asarray(occ)
    sites = np.asarray(sites)
    P = sites.shape[0]
    N = occ.shape[0]
    nv = vlist.shape[0]
    c = int(ctr0)
    if P == 0 or n_events == 0:
        return c + int(n_events), 0
    adelta = 0
    occ_l = occ.tolist()
    sites_l = sites.tolist()
    vs = vlist.tolist()
    cum = vcum.tolist()
    base = int(base)
    done = 0
    while done < n_events:
        batch = min(_BATCH, int(n_events) - done)
        ctrs = np.arange(c, c + batch, dtype=np.uint64) + np.uint64(base)
        draws = splitmix64_array(ctrs)
        idxs = (((draws >> np.uint64(32)) * np.uint64(P)) >> np.uint64(32)).tolist()
        if nv == 1:
            v0 = vs[0]
            vsel = None
        else:
            lows = (draws & np.uint64(0xFFFFFFFF)).tolist()
        for i in range(batch):
            idx = idxs[i]
            if nv == 1:
                v = v0
            else:
                lo = lows[i]
                j = 0
                while lo >= cum[j]:
                    j += 1
                v = vs[j]
            s = sites_l[idx]
            t = s + v
            w = 0
            if ring:
                if t >= N:
                    t -= N
                    w = -2
                elif t < 0:
                    t += N
                    w = 2
            elif t >= N or t < 0:
                continue
            if not occ_l[t]:
                occ_l[t] = 1
                occ_l[s] = 0
                sites_l[idx] = t
                adelta += w
        c += batch
        done += batch
    occ[:] = np.array(occ_l, dtype=np.uint8)
    sites[:] = np.array(sites_l, dtype=np.int64)
    return c, adelta
