# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled rejection-KMC event loop.

One splitmix64 draw per event: the high 32 bits pick a particle uniformly,
the low 32 bits pick the displacement through cumulative thresholds.  A
blocked attempt (target occupied, or off a closed segment) is a null event.
The pure-Python twin in ``_kernel_fallback`` consumes the identical stream.
"""
from libc.stdint cimport int64_t, uint8_t, uint64_t

KERNEL_KIND = "compiled"


cdef inline uint64_t splitmix64(uint64_t z) nogil:
    z = z + <uint64_t>0x9E3779B97F4A7C15
    z = (z ^ (z >> 30)) * <uint64_t>0xBF58476D1CE4E5B9
    z = (z ^ (z >> 27)) * <uint64_t>0x94D049BB133111EB
    return z ^ (z >> 31)


def run_events(uint8_t[::1] occ, int64_t[::1] sites, uint64_t base,
               uint64_t ctr0, int64_t n_events,
               int64_t[::1] vlist, uint64_t[::1] vcum, bint ring):
    """Apply n_events events in place; returns (counter, anchor_delta).

    occ:    occupancy bytes over the window
    sites:  dense particle position list (updated in place)
    vcum:   cumulative uint thresholds on the low 32 bits (last = 2^32)
    anchor_delta accumulates height changes at lattice point 0 from jumps
    crossing the ring seam.
    """
    cdef int64_t P = sites.shape[0]
    cdef int64_t N = occ.shape[0]
    cdef int64_t nv = vlist.shape[0]
    cdef int64_t e, idx, s, t, v, j, m, w
    cdef int64_t adelta = 0
    cdef uint64_t d, lo, c = ctr0
    if P == 0 or n_events == 0:
        return ctr0 + <uint64_t>n_events, 0
    with nogil:
        for e in range(n_events):
            d = splitmix64(base + c)
            c += 1
            idx = <int64_t>(((d >> 32) * <uint64_t>P) >> 32)
            if nv == 1:
                v = vlist[0]
            else:
                lo = d & <uint64_t>0xFFFFFFFF
                j = 0
                while lo >= vcum[j]:
                    j += 1
                v = vlist[j]
            s = sites[idx]
            t = s + v
            w = 0
            if ring:
                if t >= N:
                    t -= N
                    w = -2
                elif t < 0:
                    t += N
                    w = 2
            else:
                if t >= N or t < 0:
                    continue
            m = 1 - <int64_t>occ[t]    # 1 iff the move is allowed
            occ[t] = 1
            occ[s] = <uint8_t>(1 - m)
            sites[idx] = s + m * (t - s)
            adelta += m * w
    return c, adelta
